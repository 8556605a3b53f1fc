//! Recover a multiplier, a Lagrangian and a dissipation function from the
//! equations alone.

use hlab::conditions::SampleDomain;
use hlab::geometry::SodeSystem;
use hlab::solver::{solve, ConditionSet, SolveRequest};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sode = SodeSystem::parse(&["(y1^2 + y2^2)/2", "2*y1*y2"], true)?;
    let req = SolveRequest::new(ConditionSet::D1, SampleDomain::new(2)).with_degrees(1, 0);
    let out = solve(&sode, None, &req)?;
    println!(
        "{} unknowns, {} rows, rank {}, nullity {}: {}",
        out.unknowns, out.rows, out.rank, out.nullity, out.status
    );
    for s in &out.solutions {
        println!("theta = ({})", s.theta.join(", "));
        println!("g     = {:?}", s.multiplier);
        println!("L     = {}", s.lagrangian.as_deref().unwrap_or("-"));
        println!("D     = {}", s.dissipation.as_deref().unwrap_or("-"));
        for r in &s.verification {
            println!("  {:<9} max {:.3e}  {}", r.id, r.max, if r.pass { "pass" } else { "FAIL" });
        }
    }
    Ok(())
}
