//! Check the dissipative conditions and the energy balance on a known
//! dissipative system.

use hlab::conditions::{check_energy_variation, Checker, SampleDomain, DEFAULT_TOL};
use hlab::expr::{Point, ScalarField};
use hlab::geometry::{integrate_geodesic, SemiBasicOneForm, SodeSystem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sode = SodeSystem::parse(&["(y1^2 + y2^2)/2", "2*y1*y2"], true)?;
    let theta = SemiBasicOneForm::parse(&["2*y1", "y2"])?;
    let l = ScalarField::parse("y1^2 + y2^2/2", 2)?;
    let d = ScalarField::parse("-2/3*y1^3 - 2*y1*y2^2", 2)?;
    let sigma = SemiBasicOneForm::vertical_differential(&d);

    let checker = Checker::new(&sode, &SampleDomain::new(2), DEFAULT_TOL)?;
    let mut reports = checker.lgh(&theta, &sigma);
    reports.push(checker.d1(&theta));
    reports.push(checker.d2(&theta, &d));
    reports.push(checker.d3(&theta));
    reports.push(checker.thm1(&theta, &sigma));
    reports.push(checker.lagrange(&l, &sigma));
    // Without the force the classical conditions fail.
    reports.extend(checker.classic(&theta));
    for r in &reports {
        println!("{:<9} max {:.3e}  {}", r.id, r.max, if r.pass { "pass" } else { "FAIL" });
    }

    let traj = integrate_geodesic(&sode, &Point::new(vec![0.0, 0.0], vec![1.0, 2.0]), 1e-3, 100)?;
    let (energy, trace) = check_energy_variation(&l, &sigma, &traj)?;
    println!("{:<9} max {:.3e}  {}", energy.id, energy.max, if energy.pass { "pass" } else { "FAIL" });
    println!("energy {:.6} -> {:.6}", trace.energy[0], trace.energy[trace.energy.len() - 1]);
    Ok(())
}
