//! Parse an expression and read off exact first and second derivatives.

use hlab::expr::{Point, ScalarField, Var};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = ScalarField::parse("sqrt(y1^2 + y2^2) * exp(0.3*sin(x1))", 2)?;
    let p = Point::new(vec![0.4, -0.2], vec![3.0, 4.0]);
    let j = f.jet(&p)?;
    println!("f        = {f}");
    println!("f(p)     = {:.12}", j.value());
    println!("df/dy1   = {:.12}", j.dy(0));
    println!("df/dx1   = {:.12}", j.dx(0));
    println!("d2f/dy1dy2 = {:.12}", j.dd(Var::Y(0), Var::Y(1)));
    println!("C(f) - f = {:.3e}  (f is 1-homogeneous in y)", j.euler(&p.y) - j.value());
    println!("symbolic d/dy1: {}", f.dy(0));
    Ok(())
}
