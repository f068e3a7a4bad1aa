//! Exact-identity battery: checks that hold to rounding (or to a known
//! discretisation budget) independently of any inequality.

use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::corpus::default_corpus;
use crate::domain::{sample_balls, Domain};
use crate::error::Result;
use crate::exterior::{binomial, hodge_star, modulus, star_modulus_squared, Covector};
use crate::form::DifferentialForm;
use crate::homotopy::decomposition_residual;
use crate::norms::Samples;
use crate::young::YoungFunction;

pub const RANDOM_COVECTORS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub worst: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub seconds: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn table(&self) -> String {
        let mut s = format!("{:<28} {:>6} {:>12} {:>10} {:>7} {:>8}\n", "check", "status", "worst", "tolerance", "cases", "seconds");
        for c in &self.checks {
            s.push_str(&format!(
                "{:<28} {:>6} {:>12.3e} {:>10.0e} {:>7} {:>8.2}\n",
                c.name,
                if c.passed() { "pass" } else { "FAIL" },
                c.worst,
                c.tolerance,
                c.cases,
                c.seconds
            ));
        }
        s
    }
}

fn timed(name: &str, tolerance: f64, f: impl FnOnce() -> Result<(f64, usize)>) -> Result<Check> {
    let start = Instant::now();
    let (worst, cases) = f()?;
    Ok(Check { name: name.to_string(), worst, tolerance, cases, seconds: start.elapsed().as_secs_f64() })
}

fn random_covector(rng: &mut ChaCha8Rng, n: usize, l: usize) -> Covector {
    let coeffs = (0..binomial(n, l)).map(|_| rng.random_range(-2.0..2.0)).collect();
    Covector::from_coeffs(n, l, coeffs).expect("sizes match")
}

/// `n ∈ {2, 3}`, `l` uniform in `0..=n`.
fn random_covectors(seed: u64) -> Vec<Covector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..RANDOM_COVECTORS)
        .map(|_| {
            let n = rng.random_range(2..=3usize);
            let l = rng.random_range(0..=n);
            random_covector(&mut rng, n, l)
        })
        .collect()
}

pub fn double_star(seed: u64) -> Result<Check> {
    timed("double star sign law", 1e-12, || {
        let cs = random_covectors(seed);
        let worst = cs.iter().fold(0.0f64, |m, a| {
            let (n, l) = (a.dims(), a.degree());
            let sign = if (l * (n - l)) % 2 == 0 { 1.0 } else { -1.0 };
            let back = hodge_star(&hodge_star(a));
            let err = back.coeffs().iter().zip(a.coeffs()).map(|(b, c)| (b - sign * c).abs()).fold(0.0, f64::max);
            m.max(err)
        });
        Ok((worst, cs.len()))
    })
}

pub fn modulus_identity(seed: u64) -> Result<Check> {
    timed("|u|² = ⋆(u ∧ ⋆u)", 1e-12, || {
        let cs = random_covectors(seed.wrapping_add(1));
        let worst = cs.iter().fold(0.0f64, |m, a| {
            let sq = modulus(a).powi(2);
            m.max((sq - star_modulus_squared(a)).abs() / sq.max(1.0))
        });
        Ok((worst, cs.len()))
    })
}

/// Corpus forms in two and three dimensions.
pub fn identity_corpus(resolution: usize) -> Result<Vec<(String, DifferentialForm)>> {
    let mut out = Vec::new();
    for n in [2, 3] {
        let d = Domain::unit_cube(n, resolution)?;
        for e in default_corpus(&d)? {
            out.push((format!("{}d:{}", n, e.id), e.form));
        }
    }
    Ok(out)
}

/// Same coefficients with derivatives by finite differences only.
pub fn finite_difference_copy(u: &DifferentialForm) -> Result<DifferentialForm> {
    let v = u.clone();
    DifferentialForm::from_fn(u.domain().clone(), u.degree(), move |x, out| v.eval_into(x, out))
}

fn dd_worst(forms: &[(String, DifferentialForm)], fd: bool) -> Result<(f64, usize)> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (_, u) in forms {
        if u.degree() + 2 > u.dims() {
            continue;
        }
        let u = if fd { finite_difference_copy(u)? } else { u.clone() };
        let dd = u.exterior_derivative()?.exterior_derivative()?;
        worst = worst.max(dd.max_coefficient_on(&u.domain().test_points(6)));
        cases += 1;
    }
    Ok((worst, cases))
}

pub fn dd_analytic(forms: &[(String, DifferentialForm)]) -> Result<Check> {
    timed("dd = 0 (analytic)", 1e-12, || dd_worst(forms, false))
}

pub fn dd_finite_difference(forms: &[(String, DifferentialForm)]) -> Result<Check> {
    timed("dd = 0 (finite differences)", 1e-6, || dd_worst(forms, true))
}

/// `|u|` and every coefficient of every corpus form, on `Ω` and on the
/// first balls of the family.
pub fn scalar_fields(domain: &Domain, ball_resolution: usize, count: usize) -> Result<Vec<(String, Samples)>> {
    let corpus = default_corpus(domain)?;
    let balls = sample_balls(domain, 1.1, 4)?;
    let mut regions = vec![("omega".to_string(), domain.clone())];
    for (i, b) in balls.iter().enumerate() {
        regions.push((format!("ball{i}"), b.to_domain(ball_resolution)?));
    }
    let mut out = Vec::new();
    'fill: for (rid, region) in &regions {
        for e in &corpus {
            let u = e.form.restricted_to(region.clone())?;
            let s = Samples::modulus(&u, region, None)?;
            if s.max_abs() > 0.0 {
                out.push((format!("{}|{rid}", e.id), s));
            }
            let mut buf = vec![0.0; u.len()];
            for (c, label) in u.basis_labels().iter().enumerate() {
                let s = Samples::scalar(
                    |x| {
                        u.eval_into(x, &mut buf);
                        buf[c]
                    },
                    region,
                    None,
                )?;
                if s.max_abs() > 0.0 && u.len() > 1 {
                    out.push((format!("{}[{label}]|{rid}", e.id), s));
                }
                if out.len() >= count {
                    break 'fill;
                }
            }
        }
    }
    Ok(out)
}

/// Largest `|‖f‖_{t^p} − ‖f‖_p| / ‖f‖_p` over the fields and exponents.
pub fn luxemburg_oracle(fields: &[(String, Samples)], exponents: &[f64]) -> Result<(f64, usize)> {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for &p in exponents {
        let phi = YoungFunction::power(p)?;
        for (_, s) in fields {
            let lp = s.lp(p);
            worst = worst.max((s.luxemburg(&phi)? - lp).abs() / lp);
            cases += 1;
        }
    }
    Ok((worst, cases))
}

pub fn run_selftest(config: &RunConfig) -> Result<SelftestReport> {
    let mut checks = vec![double_star(config.seed)?, modulus_identity(config.seed)?];
    let forms = identity_corpus(8)?;
    checks.push(dd_analytic(&forms)?);
    checks.push(dd_finite_difference(&forms)?);
    let domain = config.build_domain()?;
    checks.push(timed("Luxemburg = Lᵖ for t^p", 1e-6, || {
        let fields = scalar_fields(&domain, config.ball_resolution, 100)?;
        luxemburg_oracle(&fields, &[1.5, 2.0, 3.0])
    })?);
    let settings = config.homotopy_settings();
    checks.push(timed("u = d(Tu) + T(du)", config.decomposition_tolerance, || {
        let mut worst = 0.0f64;
        let mut cases = 0;
        for e in default_corpus(&domain)? {
            let l = e.form.degree();
            if l >= 1 && l < domain.dims() {
                worst = worst.max(decomposition_residual(&e.form, &settings, 7)?);
                cases += 1;
            }
        }
        Ok((worst, cases))
    })?);
    Ok(SelftestReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algebraic_identities() {
        assert!(double_star(1).unwrap().passed());
        assert!(modulus_identity(1).unwrap().passed());
    }

    #[test]
    fn scalar_field_count() {
        let d = Domain::unit_cube(2, 16).unwrap();
        let f = scalar_fields(&d, 8, 100).unwrap();
        assert_eq!(f.len(), 100);
        let ids: std::collections::BTreeSet<_> = f.iter().map(|(i, _)| i).collect();
        assert_eq!(ids.len(), 100);
    }
}
