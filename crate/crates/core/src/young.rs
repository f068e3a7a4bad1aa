//! Young functions and sampled G(p, q, c)-class certificates.

use std::fmt;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::expr::{Compiled, Expr, Vars};

/// Sample grid: `LOG_GRID_POINTS` log-spaced values in `[1e−6, 1e6]`.
pub const LOG_GRID_POINTS: usize = 1000;
pub const LOG_GRID_MIN: f64 = 1e-6;
pub const LOG_GRID_MAX: f64 = 1e6;

pub fn log_grid() -> Vec<f64> {
    let (a, b) = (LOG_GRID_MIN.ln(), LOG_GRID_MAX.ln());
    (0..LOG_GRID_POINTS)
        .map(|i| (a + (b - a) * i as f64 / (LOG_GRID_POINTS - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum YoungSpec {
    /// `t^p`
    Power(f64),
    /// `t^p log(e + t)`
    PowerLog(f64),
    /// Expression in `t`.
    Custom(String),
}

impl fmt::Display for YoungSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            YoungSpec::Power(p) => write!(f, "power:{p}"),
            YoungSpec::PowerLog(p) => write!(f, "power_log:{p}"),
            YoungSpec::Custom(e) => write!(f, "custom:{e}"),
        }
    }
}

impl From<YoungSpec> for String {
    fn from(s: YoungSpec) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for YoungSpec {
    type Error = crate::error::Error;
    fn try_from(s: String) -> Result<YoungSpec> {
        s.parse()
    }
}

impl std::str::FromStr for YoungSpec {
    type Err = crate::error::Error;

    /// `power:2`, `power(2)`, `power_log:1.5`, `custom:t^2*log(1+t)`.
    fn from_str(s: &str) -> Result<YoungSpec> {
        let s = s.trim();
        let (name, arg) = if let Some((n, a)) = s.split_once(':') {
            (n.trim(), a.trim())
        } else if let (Some(open), true) = (s.find('('), s.ends_with(')')) {
            (s[..open].trim(), s[open + 1..s.len() - 1].trim())
        } else {
            (s, "")
        };
        let number = |a: &str| -> Result<f64> {
            a.parse::<f64>().map_err(|_| invalid(format!("Young function `{name}` needs a numeric exponent, got `{a}`")))
        };
        match name {
            "power" => Ok(YoungSpec::Power(number(arg)?)),
            "power_log" => Ok(YoungSpec::PowerLog(number(arg)?)),
            "custom" if !arg.is_empty() => Ok(YoungSpec::Custom(arg.to_string())),
            _ => Err(invalid(format!("unknown Young function `{s}` (expected power:p, power_log:p or custom:<expr>)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct YoungFunction {
    spec: YoungSpec,
    compiled: Option<Compiled>,
}

impl PartialEq for YoungFunction {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl fmt::Display for YoungFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.spec.fmt(f)
    }
}

impl YoungFunction {
    pub fn new(spec: YoungSpec) -> Result<Self> {
        let compiled = match &spec {
            YoungSpec::Power(p) | YoungSpec::PowerLog(p) => {
                if !(*p >= 1.0) || !p.is_finite() {
                    return Err(invalid(format!("Young function exponent must be ≥ 1, got {p}")));
                }
                None
            }
            YoungSpec::Custom(src) => Some(Expr::parse(src, Vars::YOUNG)?.compile()),
        };
        Ok(YoungFunction { spec, compiled })
    }

    pub fn parse(s: &str) -> Result<Self> {
        YoungFunction::new(s.parse()?)
    }

    pub fn power(p: f64) -> Result<Self> {
        YoungFunction::new(YoungSpec::Power(p))
    }

    pub fn power_log(p: f64) -> Result<Self> {
        YoungFunction::new(YoungSpec::PowerLog(p))
    }

    pub fn spec(&self) -> &YoungSpec {
        &self.spec
    }

    /// Exponent when `φ(t) = t^p`.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.spec {
            YoungSpec::Power(p) => Some(p),
            _ => None,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match (&self.spec, &self.compiled) {
            (YoungSpec::Power(p), _) => {
                if *p == 2.0 {
                    t * t
                } else {
                    t.powf(*p)
                }
            }
            (YoungSpec::PowerLog(p), _) => t.powf(*p) * (std::f64::consts::E + t).ln(),
            (YoungSpec::Custom(_), Some(c)) => c.eval(t, &[]),
            (YoungSpec::Custom(_), None) => unreachable!("custom Young functions are compiled"),
        }
    }

    /// Sampled Young-function axioms: `φ(0) = 0`, strict increase on the log
    /// grid, and midpoint convexity on 10⁴ seeded random pairs.
    pub fn check(&self) -> YoungReport {
        let mut failures = Vec::new();
        let zero = self.eval(0.0);
        if zero != 0.0 {
            failures.push(format!("φ(0) = {zero}"));
        }
        let grid = log_grid();
        let values: Vec<f64> = grid.iter().map(|&t| self.eval(t)).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            failures.push(format!("φ({}) is not finite", grid[i]));
        } else if let Some(i) = (1..values.len()).find(|&i| !(values[i] > values[i - 1])) {
            failures.push(format!("φ not strictly increasing at t = {}", grid[i]));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0417);
        let (a, b) = (LOG_GRID_MIN.ln(), LOG_GRID_MAX.ln());
        for _ in 0..10_000 {
            let s = rng.random_range(a..b).exp();
            let t = rng.random_range(a..b).exp();
            let mid = self.eval(0.5 * (s + t));
            let chord = 0.5 * (self.eval(s) + self.eval(t));
            if mid > chord * (1.0 + 1e-12) {
                failures.push(format!("midpoint convexity fails for s = {s}, t = {t}"));
                break;
            }
        }
        YoungReport { function: self.spec.to_string(), failures }
    }

    /// `sup φ(2t)/φ(t)` over the log grid.
    pub fn doubling_constant(&self) -> f64 {
        log_grid().iter().map(|&t| self.eval(2.0 * t) / self.eval(t)).fold(0.0, f64::max)
    }

    /// Canonical G(p, q, c) witnesses for the built-in families:
    /// `g(t) = φ(t^{1/p})` and `h(t) = φ(t^{1/q})`, so `c = 1`.
    pub fn default_witness(&self, p: f64, q: f64) -> Option<GWitness> {
        let (g, h) = match &self.spec {
            YoungSpec::Power(s) => (format!("t^({s}/{p})"), format!("t^({s}/{q})")),
            YoungSpec::PowerLog(s) => (
                format!("t^({s}/{p})*log(e + t^(1/{p}))"),
                format!("t^({s}/{q})*log(e + t^(1/{q}))"),
            ),
            YoungSpec::Custom(_) => return None,
        };
        GWitness::new(p, q, 1.0, &g, &h).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungReport {
    pub function: String,
    pub failures: Vec<String>,
}

impl YoungReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Witness data for membership in G(p, q, c).
#[derive(Debug, Clone)]
pub struct GWitness {
    pub p: f64,
    pub q: f64,
    pub c: f64,
    g_src: String,
    h_src: String,
    g: Compiled,
    h: Compiled,
}

impl GWitness {
    pub fn new(p: f64, q: f64, c: f64, g: &str, h: &str) -> Result<Self> {
        Ok(GWitness {
            p,
            q,
            c,
            g_src: g.to_string(),
            h_src: h.to_string(),
            g: Expr::parse(g, Vars::YOUNG)?.compile(),
            h: Expr::parse(h, Vars::YOUNG)?.compile(),
        })
    }

    pub fn g(&self, t: f64) -> f64 {
        self.g.eval(t, &[])
    }

    pub fn h(&self, t: f64) -> f64 {
        self.h.eval(t, &[])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GClassReport {
    pub function: String,
    pub g: String,
    pub h: String,
    pub p: f64,
    pub q: f64,
    pub c: f64,
    pub samples: usize,
    /// Range of `φ(t^{1/p})/g(t)`.
    pub g_ratio: [f64; 2],
    /// Range of `φ(t^{1/q})/h(t)`.
    pub h_ratio: [f64; 2],
    /// Range of `g⁻¹(φ(t))/t^p`, the empirical `c₁, c₂`.
    pub g_inverse_bounds: [f64; 2],
    /// Range of `h⁻¹(φ(t))/t^q`.
    pub h_inverse_bounds: [f64; 2],
    pub doubling: f64,
    pub doubling_bound: f64,
    pub failures: Vec<String>,
}

impl GClassReport {
    /// Membership on the sampled grid only; never a proof.
    pub fn member(&self) -> bool {
        self.failures.is_empty()
    }
}

fn range(values: impl Iterator<Item = f64>) -> [f64; 2] {
    values.fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], v| [lo.min(v), hi.max(v)])
}

/// Solve `f(s) = v` for increasing `f` with `f(0) = 0`.
fn monotone_inverse(f: impl Fn(f64) -> f64, v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) < v {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < v {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Which way a sampled profile must bend.
#[derive(Clone, Copy, PartialEq)]
enum Bend {
    Convex,
    Concave,
}

fn bends(grid: &[f64], values: &[f64], bend: Bend) -> bool {
    (1..grid.len() - 1).all(|i| {
        let (a, b, c) = (grid[i - 1], grid[i], grid[i + 1]);
        let chord = ((c - b) * values[i - 1] + (b - a) * values[i + 1]) / (c - a);
        let slack = 1e-10 * chord.abs();
        match bend {
            Bend::Convex => values[i] <= chord + slack,
            Bend::Concave => values[i] >= chord - slack,
        }
    })
}

/// Sampled check of `1/c ≤ φ(t^{1/p})/g(t) ≤ c`, `1/c ≤ φ(t^{1/q})/h(t) ≤ c`,
/// shape of `g` and `h`, and the derived power sandwiches.
pub fn check_g_class(phi: &YoungFunction, witness: &GWitness) -> Result<GClassReport> {
    let GWitness { p, q, c, .. } = *witness;
    if !(1.0 <= p && p < q && q.is_finite() && c >= 1.0) {
        return Err(invalid(format!("G-class needs 1 ≤ p < q < ∞ and c ≥ 1, got p={p}, q={q}, c={c}")));
    }
    let grid = log_grid();
    let mut failures = Vec::new();
    let g_vals: Vec<f64> = grid.iter().map(|&t| witness.g(t)).collect();
    let h_vals: Vec<f64> = grid.iter().map(|&t| witness.h(t)).collect();
    let g_ratio = range(grid.iter().zip(&g_vals).map(|(&t, g)| phi.eval(t.powf(1.0 / p)) / g));
    let h_ratio = range(grid.iter().zip(&h_vals).map(|(&t, h)| phi.eval(t.powf(1.0 / q)) / h));
    let tol = 1e-12;
    for (name, r) in [("g", g_ratio), ("h", h_ratio)] {
        if !(r[0] >= (1.0 - tol) / c && r[1] <= c * (1.0 + tol)) {
            failures.push(format!("φ(t^(1/·))/{name}(t) ranges over [{}, {}], outside [1/c, c]", r[0], r[1]));
        }
    }
    let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    if !increasing(&g_vals) {
        failures.push("g is not increasing".into());
    }
    if !increasing(&h_vals) {
        failures.push("h is not increasing".into());
    }
    if !bends(&grid, &g_vals, Bend::Convex) {
        failures.push("g is not convex".into());
    }
    if !bends(&grid, &h_vals, Bend::Concave) {
        failures.push("h is not concave".into());
    }
    let g_inverse_bounds = range(grid.iter().map(|&t| monotone_inverse(|s| witness.g(s), phi.eval(t)) / t.powf(p)));
    let h_inverse_bounds = range(grid.iter().map(|&t| monotone_inverse(|s| witness.h(s), phi.eval(t)) / t.powf(q)));
    let doubling = phi.doubling_constant();
    let doubling_bound = 2f64.powf(q) * c * c;
    if !(doubling <= doubling_bound * (1.0 + tol)) {
        failures.push(format!("φ(2t)/φ(t) reaches {doubling} > 2^q c² = {doubling_bound}"));
    }
    Ok(GClassReport {
        function: phi.to_string(),
        g: witness.g_src.clone(),
        h: witness.h_src.clone(),
        p,
        q,
        c,
        samples: grid.len(),
        g_ratio,
        h_ratio,
        g_inverse_bounds,
        h_inverse_bounds,
        doubling,
        doubling_bound,
        failures,
    })
}
