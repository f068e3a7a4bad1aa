//! Lᵖ and Luxemburg norms, the BMO and Lipschitz oscillation norms, and the
//! weak reverse Hölder ratio.
//!
//! Every norm is computed from [`Samples`]: the integrand at the region's
//! quadrature nodes together with the node weights multiplied by `ω`.

use serde::{Deserialize, Serialize};

use crate::domain::{sample_balls, Ball, Domain};
use crate::error::{invalid, Error, Result};
use crate::exterior::modulus_of;
use crate::form::DifferentialForm;
use crate::homotopy::{closed_part, HomotopySettings};
use crate::quadrature::pairwise_sum;
use crate::weights::Weight;
use crate::young::YoungFunction;

/// Largest Luxemburg bracket tried, relative to `max |f|`.
pub const LUXEMBURG_LIMIT: f64 = 1e12;
/// Relative width of the final Luxemburg bracket.
pub const LUXEMBURG_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Samples {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(invalid("sample values and weights differ in length"));
        }
        Ok(Samples { values, weights })
    }

    pub fn scalar(mut f: impl FnMut(&[f64]) -> f64, region: &Domain, weight: Option<&Weight>) -> Result<Self> {
        if !(region.volume() > 0.0) {
            return Err(invalid("region has zero volume"));
        }
        let rule = region.quadrature();
        let mut values = Vec::with_capacity(rule.len());
        let mut weights = Vec::with_capacity(rule.len());
        for (x, w) in rule.iter() {
            values.push(f(x));
            weights.push(match weight {
                Some(om) => w * om.eval(x),
                None => w,
            });
        }
        Ok(Samples { values, weights })
    }

    /// `|u(x)|` at the nodes of `region`.
    pub fn modulus(u: &DifferentialForm, region: &Domain, weight: Option<&Weight>) -> Result<Self> {
        let mut buf = vec![0.0; u.len()];
        Samples::scalar(
            |x| {
                u.eval_into(x, &mut buf);
                modulus_of(&buf)
            },
            region,
            weight,
        )
    }

    pub fn scaled(&self, a: f64) -> Samples {
        Samples { values: self.values.iter().map(|v| a * v).collect(), weights: self.weights.clone() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫ φ(|f|/λ) dμ`.
    pub fn orlicz_integral(&self, phi: &YoungFunction, lambda: f64) -> f64 {
        let terms: Vec<f64> = self
            .values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * phi.eval(v.abs() / lambda))
            .collect();
        pairwise_sum(&terms)
    }

    pub fn lp(&self, p: f64) -> f64 {
        let terms: Vec<f64> = self.values.iter().zip(&self.weights).map(|(v, w)| w * v.abs().powf(p)).collect();
        pairwise_sum(&terms).powf(1.0 / p)
    }

    /// `inf{λ > 0 : ∫ φ(|f|/λ) dμ ≤ 1}` by bisection on `log λ`.
    pub fn luxemburg(&self, phi: &YoungFunction) -> Result<f64> {
        let m = self.max_abs();
        if m == 0.0 {
            return Ok(0.0);
        }
        if !m.is_finite() {
            return Err(Error::DivergedIntegral { lambda: f64::INFINITY });
        }
        let integral = |lambda: f64| -> Result<f64> {
            let v = self.orlicz_integral(phi, lambda);
            if v.is_nan() {
                Err(Error::DivergedIntegral { lambda })
            } else {
                Ok(v)
            }
        };
        let mut hi = m;
        let mut i_hi = integral(hi)?;
        while i_hi > 1.0 {
            hi *= 2.0;
            if hi > LUXEMBURG_LIMIT * m {
                return Err(Error::NoConvergence { limit: LUXEMBURG_LIMIT * m });
            }
            i_hi = integral(hi)?;
        }
        let mut lo = 0.5 * hi;
        let mut i_lo = integral(lo)?;
        while i_lo <= 1.0 {
            if lo < f64::MIN_POSITIVE * 1e10 {
                return Ok(lo);
            }
            hi = lo;
            i_hi = i_lo;
            lo *= 0.5;
            i_lo = integral(lo)?;
        }
        while (hi / lo).ln() > LUXEMBURG_TOLERANCE {
            let mid = (lo * hi).sqrt();
            if !(mid > lo && mid < hi) {
                break;
            }
            let i_mid = integral(mid)?;
            if i_mid > i_lo || i_mid < i_hi {
                return Err(Error::NonMonotone { lo, hi });
            }
            if i_mid > 1.0 {
                lo = mid;
                i_lo = i_mid;
            } else {
                hi = mid;
                i_hi = i_mid;
            }
        }
        Ok((lo * hi).sqrt())
    }
}

/// `(∫ |f|^p ω dx)^{1/p}` over `region`.
pub fn lp_norm(f: impl FnMut(&[f64]) -> f64, region: &Domain, p: f64, weight: Option<&Weight>) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(invalid(format!("Lᵖ norm needs p ≥ 1, got {p}")));
    }
    Ok(Samples::scalar(f, region, weight)?.lp(p))
}

pub fn luxemburg_norm(
    f: impl FnMut(&[f64]) -> f64,
    region: &Domain,
    phi: &YoungFunction,
    weight: Option<&Weight>,
) -> Result<f64> {
    Samples::scalar(f, region, weight)?.luxemburg(phi)
}

/// Luxemburg norm with an empty sublevel set mapped to `+∞`; the flag is
/// set in that case.
pub fn luxemburg_or_infinite(samples: &Samples, phi: &YoungFunction) -> Result<(f64, bool)> {
    match samples.luxemburg(phi) {
        Ok(v) => Ok((v, false)),
        Err(Error::NoConvergence { .. }) => Ok((f64::INFINITY, true)),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OscillationKind {
    Bmo,
    Lipschitz { k: f64 },
}

impl OscillationKind {
    /// Exponent `e` of `|B|`: `−1` or `−(n+k)/n`.
    pub fn exponent(&self, n: usize) -> f64 {
        match self {
            OscillationKind::Bmo => -1.0,
            OscillationKind::Lipschitz { k } => -(n as f64 + k) / n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationNormSpec {
    pub kind: OscillationKind,
    pub sigma: f64,
    pub count: usize,
}

impl OscillationNormSpec {
    pub fn bmo(sigma: f64, count: usize) -> Result<Self> {
        OscillationNormSpec::new(OscillationKind::Bmo, sigma, count)
    }

    pub fn lipschitz(k: f64, sigma: f64, count: usize) -> Result<Self> {
        OscillationNormSpec::new(OscillationKind::Lipschitz { k }, sigma, count)
    }

    pub fn new(kind: OscillationKind, sigma: f64, count: usize) -> Result<Self> {
        if let OscillationKind::Lipschitz { k } = kind {
            if !(k > 0.0 && k < 1.0) {
                return Err(invalid(format!("Lipschitz exponent must lie in (0, 1), got {k}")));
            }
        }
        if !(sigma > 1.0) {
            return Err(invalid(format!("dilation σ must exceed 1, got {sigma}")));
        }
        if count == 0 {
            return Err(invalid("ball count must be positive"));
        }
        Ok(OscillationNormSpec { kind, sigma, count })
    }
}

/// `‖u − u_B‖_{φ,B}` on each ball of a family.
#[derive(Debug, Clone, PartialEq)]
pub struct BallOscillations {
    pub balls: Vec<Ball>,
    pub values: Vec<f64>,
    /// Balls whose Luxemburg infimum was empty (value `+∞`).
    pub infinite: Vec<usize>,
}

impl BallOscillations {
    pub fn compute(
        u: &DifferentialForm,
        phi: &YoungFunction,
        balls: Vec<Ball>,
        weight: Option<&Weight>,
        settings: &HomotopySettings,
    ) -> Result<Self> {
        if balls.is_empty() {
            return Err(Error::EmptyFamily("no balls to take the supremum over".into()));
        }
        let mut values = Vec::with_capacity(balls.len());
        let mut infinite = Vec::new();
        for (i, b) in balls.iter().enumerate() {
            let region = b.to_domain(settings.ball_resolution)?;
            let ub = closed_part(u, settings, Some(b))?;
            let diff = u.restricted_to(region.clone())?.sub(&ub)?;
            let s = Samples::modulus(&diff, &region, weight)?;
            let (v, inf) = luxemburg_or_infinite(&s, phi)?;
            if inf {
                infinite.push(i);
            }
            values.push(v);
        }
        Ok(BallOscillations { balls, values, infinite })
    }

    /// `max_B |B|^e ‖u − u_B‖_{φ,B}` with the first maximising ball.
    pub fn norm(&self, kind: OscillationKind) -> OscillationNorm {
        let n = self.balls[0].dims();
        let e = kind.exponent(n);
        let scaled: Vec<f64> = self.balls.iter().zip(&self.values).map(|(b, v)| b.volume().powf(e) * v).collect();
        let mut best = 0;
        for (i, v) in scaled.iter().enumerate() {
            if *v > scaled[best] {
                best = i;
            }
        }
        OscillationNorm { kind, value: scaled[best], argmax: self.balls[best].clone(), per_ball: scaled }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationNorm {
    pub kind: OscillationKind,
    pub value: f64,
    pub argmax: Ball,
    pub per_ball: Vec<f64>,
}

/// L^φ-BMO or L^φ-Lipschitz norm over the deterministic family of
/// `spec.count` balls with `σB ⊂ Ω`.
pub fn oscillation_norm(
    u: &DifferentialForm,
    phi: &YoungFunction,
    spec: &OscillationNormSpec,
    weight: Option<&Weight>,
    settings: &HomotopySettings,
) -> Result<OscillationNorm> {
    let balls = sample_balls(u.domain(), spec.sigma, spec.count)?;
    Ok(BallOscillations::compute(u, phi, balls, weight, settings)?.norm(spec.kind))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrhReport {
    pub s: f64,
    pub t: f64,
    pub rho: f64,
    /// Empirical `C`: largest ratio over non-degenerate balls.
    pub constant: f64,
    pub argmax: Option<Ball>,
    pub ratios: Vec<f64>,
    /// Balls with `‖u‖_{t,ρB} = 0`.
    pub degenerate: Vec<usize>,
}

/// `max_B ‖u‖_{s,B} / (|B|^{(t−s)/(st)} ‖u‖_{t,ρB})`.
pub fn check_wrh(
    u: &DifferentialForm,
    s: f64,
    t: f64,
    rho: f64,
    balls: &[Ball],
    ball_resolution: usize,
) -> Result<WrhReport> {
    if !(s > 0.0 && t > 0.0 && s.is_finite() && t.is_finite()) {
        return Err(invalid(format!("WRH exponents must be positive and finite, got s={s}, t={t}")));
    }
    if !(rho > 1.0) {
        return Err(invalid(format!("WRH dilation ρ must exceed 1, got {rho}")));
    }
    let mut ratios = Vec::with_capacity(balls.len());
    let mut degenerate = Vec::new();
    let mut constant = 0.0f64;
    let mut argmax = None;
    for (i, b) in balls.iter().enumerate() {
        let big = b.dilate(rho);
        if !u.domain().contains_ball(&big) {
            return Err(invalid(format!("ρB ⊄ Ω for ball {i} (centre {:?}, radius {})", b.center, b.radius)));
        }
        let num = Samples::modulus(u, &b.to_domain(ball_resolution)?, None)?.lp(s);
        let den = Samples::modulus(u, &big.to_domain(ball_resolution)?, None)?.lp(t);
        if den == 0.0 {
            degenerate.push(i);
            ratios.push(f64::NAN);
            continue;
        }
        let r = num / (b.volume().powf((t - s) / (s * t)) * den);
        if r > constant {
            constant = r;
            argmax = Some(b.clone());
        }
        ratios.push(r);
    }
    Ok(WrhReport { s, t, rho, constant, argmax, ratios, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(res: usize) -> Domain {
        Domain::unit_cube(2, res).unwrap()
    }

    #[test]
    fn luxemburg_examples() {
        let d = square(16);
        let sq = YoungFunction::power(2.0).unwrap();
        assert!((luxemburg_norm(|_| 2.0, &d, &sq, None).unwrap() - 2.0).abs() < 1e-8);
        let v = luxemburg_norm(|x| x[0], &d, &sq, None).unwrap();
        assert!((v - (1.0f64 / 3.0).sqrt()).abs() < 1e-6);
        assert_eq!(luxemburg_norm(|_| 0.0, &d, &sq, None).unwrap(), 0.0);
    }

    #[test]
    fn lp_examples() {
        let d = square(16);
        assert!((lp_norm(|_| 1.0, &d, 3.0, None).unwrap() - 1.0).abs() < 1e-12);
        assert!((lp_norm(|x| x[0], &d, 2.0, None).unwrap() - 0.577350269).abs() < 1e-6);
        assert!(lp_norm(|x| x[0], &d, 0.5, None).is_err());
    }

    #[test]
    fn luxemburg_errors() {
        let d = square(8);
        let sq = YoungFunction::power(2.0).unwrap();
        let nan = Samples::scalar(|x| if x[0] > 0.5 { f64::NAN } else { 1.0 }, &d, None).unwrap();
        assert!(matches!(nan.luxemburg(&sq), Err(Error::DivergedIntegral { .. })));
        // a "Young function" whose integral never drops below 1
        let stubborn = YoungFunction::parse("custom:t + 2").unwrap();
        let s = Samples::scalar(|_| 1.0, &d, None).unwrap();
        assert!(matches!(s.luxemburg(&stubborn), Err(Error::NoConvergence { .. })));
        assert!(luxemburg_or_infinite(&s, &stubborn).unwrap().0.is_infinite());
    }

    #[test]
    fn homogeneity() {
        let d = square(16);
        let phi = YoungFunction::power_log(1.5).unwrap();
        let s = Samples::scalar(|x| x[0] * x[1] + 0.3 * x[0], &d, None).unwrap();
        let base = s.luxemburg(&phi).unwrap();
        for a in [-3.0, 0.5, 7.0] {
            let v = s.scaled(a).luxemburg(&phi).unwrap();
            assert!((v - a.abs() * base).abs() <= 1e-8 * a.abs() * base);
        }
    }

    #[test]
    fn closed_form_has_zero_oscillation() {
        let d = square(16);
        let s = HomotopySettings::default();
        let dx1 = DifferentialForm::parse(d.clone(), 1, &["1", "0"]).unwrap();
        let sq = YoungFunction::power(2.0).unwrap();
        let spec = OscillationNormSpec::lipschitz(0.5, 1.1, 8).unwrap();
        assert!(oscillation_norm(&dx1, &sq, &spec, None, &s).unwrap().value <= 1e-6);
        let z = DifferentialForm::zero(d, 0).unwrap();
        let spec = OscillationNormSpec::bmo(1.1, 8).unwrap();
        assert_eq!(oscillation_norm(&z, &sq, &spec, None, &s).unwrap().value, 0.0);
    }

    #[test]
    fn bmo_of_a_coordinate_is_radius_free() {
        // ‖x₁ − mean‖_{2,B} / |B| = 1/(2√π) on every disk, exactly
        let d = square(16);
        let s = HomotopySettings { ball_resolution: 64, ..Default::default() };
        let x1 = DifferentialForm::parse(d, 0, &["x1"]).unwrap();
        let sq = YoungFunction::power(2.0).unwrap();
        let spec = OscillationNormSpec::bmo(1.1, 6).unwrap();
        let n = oscillation_norm(&x1, &sq, &spec, None, &s).unwrap();
        let exact = 0.5 / std::f64::consts::PI.sqrt();
        for v in &n.per_ball {
            assert!((v - exact).abs() < 5e-3 * exact, "{v} vs {exact}");
        }
    }

    #[test]
    fn spec_validation() {
        assert!(OscillationNormSpec::lipschitz(1.0, 1.1, 4).is_err());
        assert!(OscillationNormSpec::bmo(1.0, 4).is_err());
        assert!(OscillationNormSpec::bmo(1.1, 0).is_err());
        assert_eq!(OscillationKind::Lipschitz { k: 0.5 }.exponent(2), -1.25);
    }

    #[test]
    fn wrh_examples() {
        let d = square(16);
        let balls = sample_balls(&d, 1.5, 10).unwrap();
        let c = DifferentialForm::parse(d.clone(), 1, &["2", "-1"]).unwrap();
        let r = check_wrh(&c, 2.0, 3.0, 1.5, &balls, 16).unwrap();
        let expected = 1.5f64.powf(-2.0 / 3.0);
        assert!(r.ratios.iter().all(|v| (v - expected).abs() < 1e-12));
        let z = DifferentialForm::zero(d.clone(), 1).unwrap();
        assert_eq!(check_wrh(&z, 2.0, 3.0, 1.5, &balls, 16).unwrap().degenerate.len(), balls.len());
        let u = DifferentialForm::parse(d, 0, &["x1^2 + x2"]).unwrap();
        assert!(check_wrh(&u, 2.0, 2.0, 1.5, &balls, 16).unwrap().constant <= 1.0);
    }
}
