//! Built-in examples, generated as problem-file text so they run through
//! the same loader as user files.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Parameters of the `projective` family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleParams {
    pub lambda: f64,
    pub dim: usize,
}

impl Default for ExampleParams {
    fn default() -> Self {
        ExampleParams { lambda: 1.0, dim: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub source: String,
    pub expected_failures: Vec<String>,
    pub parameters: BTreeMap<String, f64>,
}

pub fn example_names() -> &'static [&'static str] {
    &["ex1", "projective", "gyro-class", "classic-gyro"]
}

const EX1: &str = "\
# dissipative system with L = (y1)^2 + (y2)^2/2 and sigma = d_J D
[sode]
dim = 2
g1 = (y1^2 + y2^2)/2
g2 = 2*y1*y2
homog2 = true

[theta]
c1 = 2*y1
c2 = y2

[lagrangian]
l = y1^2 + y2^2/2

[dissipation]
d = -2/3*y1^3 - 2*y1*y2^2

[check]
ids = LGH, D1, D2, D3, DR, THM1, LAGRANGE, ENERGY

[solve]
set = D1
deg_y = 1
deg_x = 0

[trajectory]
x0 = 0, 0
y0 = 1, 2
h = 1e-3
steps = 100
";

const GYRO_CLASS: &str = "\
# x'' + 2 N(x) x' + V(x) = 0 with N skew and V the gradient of
# U = x1^2/2 + x1*x2^2 + x2^2/2
[sode]
dim = 2

[gyro]
n1 = 0, x1
n2 = -x1, 0
v = x1 + x2^2, 2*x1*x2 + x2

[lagrangian]
l = (y1^2 + y2^2)/2 - (x1^2/2 + x1*x2^2 + x2^2/2)

[check]
ids = GNV, G1, G2, LGH, THM1, LAGRANGE, ENERGY

[trajectory]
x0 = 0.5, 0
y0 = 0, 1
h = 1e-3
steps = 2000
";

const CLASSIC_GYRO: &str = "\
# x'' = A x' + B x with A = [[0, 2], [-2, 0]] and B = [[-1, 0.5], [0.5, -2]],
# so N = -A/2 and V = -B x
[sode]
dim = 2

[gyro]
n1 = 0, -1
n2 = 1, 0
v = x1 - 0.5*x2, -0.5*x1 + 2*x2

[lagrangian]
l = (y1^2 + y2^2)/2 - (x1^2/2 - 0.5*x1*x2 + x2^2)

[check]
ids = GNV, G1, G2, LGH, THM1, LAGRANGE, ENERGY

[trajectory]
x0 = 0.5, 0
y0 = 0, 1
h = 1e-3
steps = 2000
";

fn projective(p: &ExampleParams) -> Result<Example> {
    let (lambda, n) = (p.lambda, p.dim);
    if n == 0 || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "projective needs dim >= 1 and a finite lambda, got dim = {n}, lambda = {lambda}"
        )));
    }
    let squares = (1..=n).map(|i| format!("y{i}^2")).collect::<Vec<_>>().join(" + ");
    let norm = format!("sqrt({squares})");
    let lam = format!("({lambda:?})");
    let mut s = format!("# G^i = lambda F y^i with F the Euclidean norm, L = F^2/2\n[sode]\ndim = {n}\nhomog2 = true\n");
    for i in 1..=n {
        s += &format!("g{i} = {lam}*{norm}*y{i}\n");
    }
    s += "\n[theta]\n";
    for i in 1..=n {
        s += &format!("c{i} = y{i}\n");
    }
    s += "\n[sigma]\n";
    for i in 1..=n {
        s += &format!("c{i} = -2*{lam}*{norm}*y{i}\n");
    }
    s += &format!("\n[lagrangian]\nl = ({squares})/2\n");
    s += &format!("\n[dissipation]\nd = -2/3*{lam}*{norm}^3\n");
    s += "\n[check]\nids = LGH, THM1, LAGRANGE, D1, D2, D3, HOM, THM6, COR4, H, FM, ENERGY\np = 2\n";
    s += "\n[trajectory]\ny0 = ";
    s += &(1..=n)
        .map(|i| if i == 1 { "1".to_string() } else { "0.5".to_string() })
        .collect::<Vec<_>>()
        .join(", ");
    s += "\nh = 1e-3\nsteps = 200\n";
    let expected_failures = if lambda == 0.0 {
        Vec::new()
    } else {
        vec!["H3".to_string(), "FMD".to_string()]
    };
    let mut parameters = BTreeMap::new();
    parameters.insert("lambda".to_string(), lambda);
    parameters.insert("dim".to_string(), n as f64);
    Ok(Example {
        source: s,
        expected_failures,
        parameters,
    })
}

/// Problem-file text and expectations of a built-in example.
pub fn example_source(name: &str, params: &ExampleParams) -> Result<Example> {
    let fixed = |src: &str| Example {
        source: src.to_string(),
        expected_failures: Vec::new(),
        parameters: BTreeMap::new(),
    };
    match name {
        "ex1" => Ok(fixed(EX1)),
        "projective" => projective(params),
        "gyro-class" => Ok(fixed(GYRO_CLASS)),
        "classic-gyro" => Ok(fixed(CLASSIC_GYRO)),
        other => Err(Error::InvalidArgument(format!(
            "unknown example `{other}` (known: {})",
            example_names().join(", ")
        ))),
    }
}
