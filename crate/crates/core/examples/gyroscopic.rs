//! A gyroscopic system: the algebraic conditions on N and V, the gyroscopic
//! Helmholtz conditions, and conservation of energy along a trajectory.

use hlab::conditions::{check_energy_variation, GyroClass, SampleDomain, DEFAULT_TOL};
use hlab::expr::{Point, ScalarField};
use hlab::geometry::integrate_geodesic;
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = |s: &str| ScalarField::parse(s, 2);
    let n = vec![vec![f("0")?, f("x1")?], vec![f("-x1")?, f("0")?]];
    let v = vec![f("x1 + x2^2")?, f("2*x1*x2 + x2")?];
    let gy = GyroClass::new(DMatrix::identity(2, 2), n, v)?;
    println!("omega_12 = {}", gy.omega.comp(0, 1));
    for r in gy.check(&SampleDomain::new(2), DEFAULT_TOL)? {
        println!("{:<6} max {:.3e}  {}", r.id, r.max, if r.pass { "pass" } else { "FAIL" });
    }

    let l = f("(y1^2 + y2^2)/2 - (x1^2/2 + x1*x2^2 + x2^2/2)")?;
    let traj = integrate_geodesic(&gy.sode, &Point::new(vec![0.5, 0.0], vec![0.0, 1.0]), 1e-3, 2000)?;
    let (r, trace) = check_energy_variation(&l, &gy.omega.contract_spray(), &traj)?;
    println!("energy balance max {:.3e}, drift {:.3e}", r.max, trace.drift());

    // Breaking the skew symmetry of N is detected.
    let n = vec![vec![f("0")?, f("1")?], vec![f("1")?, f("0")?]];
    let broken = GyroClass::new(DMatrix::identity(2, 2), n, vec![f("x1")?, f("x2")?])?;
    let gnv = broken.check_gnv(&SampleDomain::new(2), DEFAULT_TOL)?;
    println!("symmetric N: GNV.1 max {:.3e}, pass = {}", gnv[0].max, gnv[0].pass);
    Ok(())
}
