//! Nonlinear connection, Jacobi endomorphism and curvature of a spray.

use hlab::expr::Point;
use hlab::geometry::{geometry_at, SodeSystem};
use hlab::oracle::{curvature_identity_residuals, fd_jacobi_endomorphism};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sode = SodeSystem::parse(&["(y1^2 + y2^2)/2", "2*y1*y2"], true)?;
    let p = Point::new(vec![0.1, -0.3], vec![1.0, 2.0]);
    let geo = geometry_at(&sode, &p)?;
    println!("N   = {}", geo.n);
    println!("Phi = {}", geo.phi);
    println!("Phi by finite differences = {}", fd_jacobi_endomorphism(&sode, &p, 1e-5));
    println!("max |R^i_jk| = {:.3e}", geo.curv.max_abs());
    let (consistent, swapped) = curvature_identity_residuals(&sode, &p, 1e-4).unwrap();
    println!("3R vs fibre curl of Phi: {consistent:.3e} (opposite sign: {swapped:.3e})");
    Ok(())
}
