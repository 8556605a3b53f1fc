//! Seeded generators for test and self-test inputs: polynomial sprays,
//! smooth expressions and sample points.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::poly::Exponents;
use crate::expr::{Point, Poly, ScalarField};
use crate::geometry::SodeSystem;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All exponent vectors over `dim` variables with total degree at most `deg`.
pub fn exponents_up_to(dim: usize, deg: u32) -> Vec<Vec<u32>> {
    fn rec(dim: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == dim {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(dim, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, deg, &mut Vec::new(), &mut out);
    out.sort_by_key(|e| (e.iter().sum::<u32>(), std::cmp::Reverse(e.clone())));
    out
}

/// Exponent vectors of total degree exactly `deg`.
pub fn exponents_of_degree(dim: usize, deg: u32) -> Vec<Vec<u32>> {
    exponents_up_to(dim, deg)
        .into_iter()
        .filter(|e| e.iter().sum::<u32>() == deg)
        .collect()
}

fn join(xe: &[u32], ye: &[u32]) -> Exponents {
    xe.iter().chain(ye).copied().collect()
}

/// A random polynomial whose `y`-part has degree in `y_degrees` and whose
/// `x`-part has degree at most `deg_x`. Each admissible monomial is kept
/// with probability `density`, with a coefficient uniform in `[−1, 1]`.
pub fn random_poly<R: Rng>(
    rng: &mut R,
    dim: usize,
    deg_x: u32,
    y_degrees: &[u32],
    density: f64,
) -> Poly {
    let mut p = Poly::zero(dim);
    for &dy in y_degrees {
        for ye in exponents_of_degree(dim, dy) {
            for xe in exponents_up_to(dim, deg_x) {
                if rng.gen_bool(density) {
                    let c: f64 = rng.gen_range(-1.0..1.0);
                    p = p.add(&Poly::monomial(dim, join(&xe, &ye), c));
                }
            }
        }
    }
    p
}

/// A spray with `G^i` quadratic in `y` and polynomial of degree at most
/// `deg_x` in `x`.
pub fn random_spray<R: Rng>(rng: &mut R, dim: usize, deg_x: u32) -> SodeSystem {
    let coeffs = (0..dim)
        .map(|_| random_poly(rng, dim, deg_x, &[2], 0.6).to_field())
        .collect();
    SodeSystem::new(coeffs, true).expect("generated coefficients share the dimension")
}

/// A semispray with polynomial coefficients of `y`-degree at most 2.
pub fn random_semispray<R: Rng>(rng: &mut R, dim: usize, deg_x: u32) -> SodeSystem {
    let coeffs = (0..dim)
        .map(|_| random_poly(rng, dim, deg_x, &[0, 1, 2], 0.4).to_field())
        .collect();
    SodeSystem::new(coeffs, false).expect("generated coefficients share the dimension")
}

/// A point with `x` in `[−1, 1]^n` and each `y^i` in `[−2, 2]`.
pub fn random_point<R: Rng>(rng: &mut R, dim: usize) -> Point {
    let x = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
    Point::new(x, y)
}

/// Source text of a random smooth expression over `x1..xn, y1..yn`, defined
/// everywhere (arguments of `sqrt` and `log` are bounded away from zero,
/// non-integer powers have positive bases).
pub fn random_expression<R: Rng>(rng: &mut R, dim: usize, depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.2) {
        return leaf(rng, dim);
    }
    let a = random_expression(rng, dim, depth - 1);
    let shapes: [&dyn Fn(&mut R) -> String; 12] = [
        &|r| format!("({a} + {})", random_expression(r, dim, depth - 1)),
        &|r| format!("({a} - {})", random_expression(r, dim, depth - 1)),
        &|r| format!("({a})*({})", random_expression(r, dim, depth - 1)),
        &|r| format!("({a})/(1.5 + ({})^2)", random_expression(r, dim, depth - 1)),
        &|_| format!("sin({a})"),
        &|_| format!("cos({a})"),
        &|_| format!("exp(0.3*sin({a}))"),
        &|_| format!("sqrt(1 + ({a})^2)"),
        &|_| format!("log(2 + cos({a}))"),
        &|_| format!("({a})^2"),
        &|_| format!("-({a})^3/4"),
        &|_| format!("(1.2 + sin({a}))^1.5"),
    ];
    let shape = shapes.choose(rng).expect("non-empty");
    shape(rng)
}

fn leaf<R: Rng>(rng: &mut R, dim: usize) -> String {
    let i = rng.gen_range(1..=dim);
    match rng.gen_range(0..5) {
        0 => format!("{:.3}", rng.gen_range(-2.0..2.0)),
        1 | 2 => format!("x{i}"),
        _ => format!("y{i}"),
    }
}

pub fn random_field<R: Rng>(rng: &mut R, dim: usize, depth: u32) -> ScalarField {
    let src = random_expression(rng, dim, depth);
    ScalarField::parse(&src, dim).expect("generator emits valid syntax")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_enumeration() {
        assert_eq!(exponents_up_to(2, 2).len(), 6);
        assert_eq!(exponents_of_degree(3, 2).len(), 6);
        assert_eq!(exponents_up_to(2, 0), vec![vec![0, 0]]);
    }

    #[test]
    fn sprays_are_homogeneous() {
        let mut r = rng(3);
        for _ in 0..5 {
            let s = random_spray(&mut r, 2, 2);
            let p = random_point(&mut r, 2);
            for g in s.coeffs() {
                assert!(g.euler_residual(&p, 2.0).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn expressions_parse_and_evaluate() {
        let mut r = rng(11);
        for _ in 0..200 {
            let f = random_field(&mut r, 3, 4);
            let p = random_point(&mut r, 3);
            assert!(f.jet(&p).is_ok(), "{f}");
        }
    }

    #[test]
    fn seeds_reproduce() {
        let a = random_expression(&mut rng(5), 2, 4);
        let b = random_expression(&mut rng(5), 2, 4);
        assert_eq!(a, b);
    }
}
