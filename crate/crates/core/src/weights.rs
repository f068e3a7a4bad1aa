//! Weights `ω > 0` and the A(α, β, γ; Ω) class test.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{Ball, Domain};
use crate::error::{invalid, Result};
use crate::expr::{Compiled, Expr, Vars};
use crate::quadrature::Quadrature;
use crate::young::{log_grid, YoungFunction};

/// Offset of the default power-weight centre from the domain centroid, so
/// the singularity avoids grid nodes.
pub const POWER_CENTER_OFFSET: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum WeightSpec {
    Constant(f64),
    /// `|x − x₀|^λ`; `x₀` defaults to the offset centroid.
    Power { exponent: f64, center: Option<Vec<f64>> },
    /// Expression in `x1…xn` and `|x|`.
    Custom(String),
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Constant(c) => write!(f, "const:{c}"),
            WeightSpec::Power { exponent, center: None } => write!(f, "power:{exponent}"),
            WeightSpec::Power { exponent, center: Some(c) } => {
                let c: Vec<String> = c.iter().map(|v| v.to_string()).collect();
                write!(f, "power:{exponent}@{}", c.join(","))
            }
            WeightSpec::Custom(e) => write!(f, "custom:{e}"),
        }
    }
}

impl From<WeightSpec> for String {
    fn from(s: WeightSpec) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for WeightSpec {
    type Error = crate::error::Error;
    fn try_from(s: String) -> Result<WeightSpec> {
        s.parse()
    }
}

impl std::str::FromStr for WeightSpec {
    type Err = crate::error::Error;

    /// `const:2`, `power:0.5`, `power:0.5@0,0`, `custom:1+|x|^2`.
    fn from_str(s: &str) -> Result<WeightSpec> {
        let (name, arg) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let number = |a: &str| -> Result<f64> {
            a.trim().parse::<f64>().map_err(|_| invalid(format!("weight `{s}`: `{a}` is not a number")))
        };
        match name {
            "const" | "constant" => Ok(WeightSpec::Constant(if arg.is_empty() { 1.0 } else { number(arg)? })),
            "power" => {
                let (e, c) = match arg.split_once('@') {
                    Some((e, c)) => (e, Some(c.split(',').map(number).collect::<Result<Vec<_>>>()?)),
                    None => (arg, None),
                };
                Ok(WeightSpec::Power { exponent: number(e)?, center: c })
            }
            "custom" if !arg.is_empty() => Ok(WeightSpec::Custom(arg.to_string())),
            _ => Err(invalid(format!("unknown weight `{s}` (expected const:c, power:λ[@x0], custom:<expr>)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Weight {
    spec: WeightSpec,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Constant(f64),
    Power(f64, Vec<f64>),
    Custom(Compiled),
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.spec.fmt(f)
    }
}

impl Weight {
    /// Resolve a spec on `domain` and check positivity at its quadrature
    /// nodes.
    pub fn new(spec: WeightSpec, domain: &Domain) -> Result<Self> {
        let n = domain.dims();
        let kind = match &spec {
            WeightSpec::Constant(c) => Kind::Constant(*c),
            WeightSpec::Power { exponent, center } => {
                let c = match center {
                    Some(c) if c.len() == n => c.clone(),
                    Some(c) => return Err(invalid(format!("power weight centre has {} coordinates, expected {n}", c.len()))),
                    None => domain.centroid().iter().map(|v| v + POWER_CENTER_OFFSET).collect(),
                };
                Kind::Power(*exponent, c)
            }
            WeightSpec::Custom(src) => Kind::Custom(Expr::parse(src, Vars::space(n))?.compile()),
        };
        let w = Weight { spec, kind };
        w.validate_on(domain.quadrature())?;
        Ok(w)
    }

    pub fn constant(c: f64, domain: &Domain) -> Result<Self> {
        Weight::new(WeightSpec::Constant(c), domain)
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    pub fn is_unit(&self) -> bool {
        matches!(self.kind, Kind::Constant(c) if c == 1.0)
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            Kind::Constant(c) => *c,
            Kind::Power(e, c) => {
                let r = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                r.powf(*e)
            }
            Kind::Custom(c) => c.eval(0.0, x),
        }
    }

    /// Positivity (and finiteness) at every node of `rule`.
    pub fn validate_on(&self, rule: &Quadrature) -> Result<()> {
        for (x, _) in rule.iter() {
            let v = self.eval(x);
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("weight {} is {v} at quadrature node {x:?}", self.spec)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AClassReport {
    pub weight: String,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Empirical supremum over non-flagged balls.
    pub sup: f64,
    pub argmax: Option<Ball>,
    pub per_ball: Vec<f64>,
    /// Balls where a power average overflowed or vanished.
    pub flagged: Vec<usize>,
}

impl AClassReport {
    pub fn finite(&self) -> bool {
        self.flagged.is_empty() && self.sup.is_finite()
    }
}

/// `sup_B (⨍_B ω^α)(⨍_B ω^{−β})^{γ/β}` over `balls`.
pub fn check_a_class(
    weight: &Weight,
    alpha: f64,
    beta: f64,
    gamma: f64,
    balls: &[Ball],
    ball_resolution: usize,
) -> Result<AClassReport> {
    if !(alpha > 0.0 && beta > 0.0 && gamma > 0.0) {
        return Err(invalid(format!("A-class exponents must be positive, got α={alpha}, β={beta}, γ={gamma}")));
    }
    let mut per_ball = Vec::with_capacity(balls.len());
    let mut flagged = Vec::new();
    let mut sup = 0.0f64;
    let mut argmax = None;
    for (i, b) in balls.iter().enumerate() {
        let rule = Quadrature::midpoint_ball(&b.center, b.radius, ball_resolution)?;
        let vol = rule.total_weight();
        let a = rule.integrate(|x| weight.eval(x).powf(alpha)) / vol;
        let m = rule.integrate(|x| weight.eval(x).powf(-beta)) / vol;
        let v = a * m.powf(gamma / beta);
        per_ball.push(v);
        if !v.is_finite() || !(m > 0.0) {
            flagged.push(i);
        } else if v > sup {
            sup = v;
            argmax = Some(b.clone());
        }
    }
    Ok(AClassReport { weight: weight.to_string(), alpha, beta, gamma, sup, argmax, per_ball, flagged })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub function: String,
    pub p: f64,
    pub passed: bool,
    /// First sampled `t` with `φ(t) > t^p`.
    pub violation: Option<f64>,
}

/// Whether `φ(t) ≤ t^p` at every point of the log grid.
pub fn check_phi_dominated(phi: &YoungFunction, p: f64) -> Result<DominationReport> {
    if !(p >= 1.0) {
        return Err(invalid(format!("domination exponent must be ≥ 1, got {p}")));
    }
    let violation = log_grid().into_iter().find(|&t| phi.eval(t) > t.powf(p) * (1.0 + 1e-12));
    Ok(DominationReport { function: phi.to_string(), p, passed: violation.is_none(), violation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::sample_balls;

    fn square(res: usize) -> Domain {
        Domain::unit_cube(2, res).unwrap()
    }

    #[test]
    fn spec_round_trip() {
        for s in ["const:2", "power:0.5", "power:-0.3@0.1,0.2", "custom:1+|x|^2"] {
            let w: WeightSpec = s.parse().unwrap();
            assert_eq!(w.to_string(), s);
        }
        assert!("bogus:1".parse::<WeightSpec>().is_err());
    }

    #[test]
    fn positivity_is_checked_at_nodes() {
        assert!(Weight::constant(0.0, &square(8)).is_err());
        assert!(Weight::new("custom:x1 - 0.5".parse().unwrap(), &square(8)).is_err());
        assert!(Weight::new("power:0.5".parse().unwrap(), &square(8)).is_ok());
    }

    #[test]
    fn constant_weights() {
        let d = square(8);
        let balls = sample_balls(&d, 1.1, 10).unwrap();
        let one = Weight::constant(1.0, &d).unwrap();
        let r = check_a_class(&one, 1.3, 0.7, 2.1, &balls, 16).unwrap();
        assert!(r.per_ball.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let c = Weight::constant(3.0, &d).unwrap();
        let r = check_a_class(&c, 2.0, 1.0, 0.5, &balls, 16).unwrap();
        assert!((r.sup - 3f64.powf(1.5)).abs() < 1e-10);
        assert!(r.finite());
    }

    #[test]
    fn radial_weight_is_resolution_stable() {
        let d = square(16);
        let w = Weight::new("power:0.5@0,0".parse().unwrap(), &d).unwrap();
        let balls = sample_balls(&d, 1.1, 20).unwrap();
        let a = check_a_class(&w, 2.0, 1.0, 2.0, &balls, 32).unwrap();
        let b = check_a_class(&w, 2.0, 1.0, 2.0, &balls, 64).unwrap();
        assert!(a.finite());
        assert!(((a.sup - b.sup) / b.sup).abs() < 0.02, "{} {}", a.sup, b.sup);
    }

    #[test]
    fn domination_examples() {
        let sq = YoungFunction::power(2.0).unwrap();
        assert!(check_phi_dominated(&sq, 2.0).unwrap().passed);
        let r = check_phi_dominated(&sq, 3.0).unwrap();
        assert!(!r.passed && r.violation.unwrap() < 1.0);
        assert!(sq.eval(0.5) > 0.5f64.powf(3.0));
        let cube = YoungFunction::power(3.0).unwrap();
        let r = check_phi_dominated(&cube, 2.0).unwrap();
        assert!(!r.passed && r.violation.unwrap() > 1.0);
        assert!(cube.eval(2.0) > 2f64.powf(2.0));
    }
}
