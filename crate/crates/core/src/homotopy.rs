//! The cone homotopy operator averaged against a bump function.
//!
//! For a point `y` the kernel is
//! `K_y u(x) = ∫₀¹ t^{l−1} ι_{x−y} u(tx + (1−t)y) dt`, and
//! `Tu = ∫ ψ(y) K_y u dy`. Both integrals are fixed-order rules, so `Tu` is a
//! finite weighted sum of contractions. Since `u = d(K_y u) + K_y(du)` holds
//! for every `y`, the decomposition `u = d(Tu) + T(du)` is exact up to the
//! discrete mass of `ψ`, the `t`-rule, and the finite-difference step.

use std::sync::Arc;

use crate::domain::{Ball, Domain};
use crate::error::{Error, Result};
use crate::exterior::{binomial, contraction_table, modulus_of, Covector};
use crate::form::{DifferentialForm, FieldRef, FormField};
use crate::quadrature::{gauss_legendre, unit_ball_volume, Quadrature};

/// Knobs for the domain-level and ball-level operators.
#[derive(Debug, Clone, PartialEq)]
pub struct HomotopySettings {
    /// Gauss–Legendre nodes in `t` for the operator on `Ω`.
    pub t_nodes: usize,
    /// Support radius of `ψ` as a fraction of the inradius.
    pub support_fraction: f64,
    /// Gauss–Legendre nodes in `t` for the per-ball operators.
    pub ball_t_nodes: usize,
    /// Gauss–Legendre nodes per axis across the support of each `ψ_B`.
    pub ball_psi_resolution: usize,
    /// Midpoint cells per axis for integrals over a ball.
    pub ball_resolution: usize,
}

impl Default for HomotopySettings {
    fn default() -> Self {
        HomotopySettings {
            t_nodes: 32,
            support_fraction: 0.25,
            ball_t_nodes: 16,
            ball_psi_resolution: 8,
            ball_resolution: 16,
        }
    }
}

/// `ψ(y) = c·exp(−1/(1−|y−y₀|²/r²))` inside the support ball, zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpFunction {
    center: Vec<f64>,
    radius: f64,
    scale: f64,
}

fn profile(s2: f64) -> f64 {
    if s2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s2)).exp()
    }
}

/// `∫_{|z|<1} exp(−1/(1−|z|²)) dz` in ℝⁿ, by composite Gauss–Legendre in
/// the radial variable.
pub fn unit_profile_mass(n: usize) -> f64 {
    let (x, w) = gauss_legendre(16, 0.0, 1.0);
    let panels = 64;
    let h = 1.0 / panels as f64;
    let mut radial = 0.0;
    for p in 0..panels {
        for (xi, wi) in x.iter().zip(&w) {
            let s = (p as f64 + xi) * h;
            radial += wi * h * s.powi(n as i32 - 1) * profile(s * s);
        }
    }
    n as f64 * unit_ball_volume(n) * radial
}

impl BumpFunction {
    /// Mollifier centred at the centroid with support radius
    /// `support_fraction · inradius`, normalised by its exact integral.
    pub fn for_domain(domain: &Domain, support_fraction: f64) -> Result<Self> {
        if !(support_fraction > 0.0 && support_fraction < 1.0) {
            return Err(crate::error::invalid("bump support fraction must lie in (0, 1)"));
        }
        let radius = support_fraction * domain.inradius();
        BumpFunction::with_support(domain.centroid(), radius)
    }

    pub fn with_support(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(crate::error::invalid("bump support radius must be positive"));
        }
        let n = center.len();
        let scale = 1.0 / (unit_profile_mass(n) * radius.powi(n as i32));
        Ok(BumpFunction { center, radius, scale })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    #[inline]
    pub fn value(&self, y: &[f64]) -> f64 {
        let s2 = y.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            / (self.radius * self.radius);
        self.scale * profile(s2)
    }

    /// Rescale so that `rule` integrates `ψ` to exactly one.
    pub fn normalized_on(mut self, rule: &Quadrature) -> Self {
        let mass = rule.integrate(|y| self.value(y));
        self.scale /= mass;
        self
    }

    /// Tensor Gauss–Legendre rule over the bounding box of the support.
    pub fn support_rule(&self, order: usize) -> Quadrature {
        let lo: Vec<f64> = self.center.iter().map(|c| c - self.radius).collect();
        let hi: Vec<f64> = self.center.iter().map(|c| c + self.radius).collect();
        Quadrature::gauss_box(&lo, &hi, order).expect("support box has positive volume")
    }
}

/// `T` discretised: weighted cone points `yᵢ` with weights `ψ(yᵢ)wᵢ` and a
/// Gauss–Legendre rule in `t`.
#[derive(Debug, Clone)]
pub struct HomotopyOperator {
    domain: Domain,
    dims: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    t: Vec<f64>,
    tw: Vec<f64>,
}

impl HomotopyOperator {
    /// Operator on `domain`: the bump is sampled on the domain's own rule.
    pub fn for_domain(domain: &Domain, settings: &HomotopySettings) -> Result<Self> {
        let bump = BumpFunction::for_domain(domain, settings.support_fraction)?;
        Ok(HomotopyOperator::new(domain.clone(), &bump, domain.quadrature(), settings.t_nodes))
    }

    /// Operator on a ball, with `ψ_B` supported on the concentric ball of
    /// radius `support_fraction · r` and normalised on its own rule.
    pub fn for_ball(ball: &Ball, settings: &HomotopySettings) -> Result<Self> {
        let domain = ball.to_domain(settings.ball_resolution)?;
        let bump = BumpFunction::with_support(ball.center.clone(), settings.support_fraction * ball.radius)?;
        let rule = bump.support_rule(settings.ball_psi_resolution);
        let bump = bump.normalized_on(&rule);
        Ok(HomotopyOperator::new(domain, &bump, &rule, settings.ball_t_nodes))
    }

    /// General constructor; nodes where `ψ` vanishes are dropped.
    pub fn new(domain: Domain, bump: &BumpFunction, rule: &Quadrature, t_nodes: usize) -> Self {
        let dims = domain.dims();
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (y, w) in rule.iter() {
            let v = bump.value(y);
            if v > 0.0 {
                nodes.extend_from_slice(y);
                weights.push(v * w);
            }
        }
        let (t, tw) = gauss_legendre(t_nodes, 0.0, 1.0);
        HomotopyOperator { domain, dims, nodes, weights, t, tw }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Discrete mass `Σ ψ(yᵢ)wᵢ`.
    pub fn mass(&self) -> f64 {
        crate::quadrature::pairwise_sum(&self.weights)
    }

    pub fn cone_points(&self) -> usize {
        self.weights.len()
    }

    /// `Tu` as a form on the operator's domain (derivatives by finite
    /// differences).
    pub fn apply(self: &Arc<Self>, u: &DifferentialForm) -> Result<DifferentialForm> {
        if u.degree() == 0 {
            return Err(Error::InvalidDegree("homotopy operator needs degree ≥ 1".into()));
        }
        if u.dims() != self.dims {
            return Err(crate::error::invalid("form and operator differ in dimension"));
        }
        let tpow = self.t.iter().zip(&self.tw).map(|(t, w)| w * t.powi(u.degree() as i32 - 1)).collect();
        let field = HomotopyField { op: self.clone(), source: u.field().clone(), degree: u.degree(), tpow };
        DifferentialForm::from_field(self.domain.clone(), u.degree() - 1, Arc::new(field))
    }
}

struct HomotopyField {
    op: Arc<HomotopyOperator>,
    source: FieldRef,
    degree: usize,
    tpow: Vec<f64>,
}

impl FormField for HomotopyField {
    fn len(&self) -> usize {
        binomial(self.op.dims, self.degree - 1)
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let op = &self.op;
        let n = op.dims;
        let src_len = self.source.len();
        let table = contraction_table(n, self.degree);
        let mut p = [0.0f64; 8];
        let mut v = [0.0f64; 8];
        let mut buf = [0.0f64; 70];
        let mut s = [0.0f64; 70];
        out.iter_mut().for_each(|o| *o = 0.0);
        for (y, &wy) in op.nodes.chunks_exact(n).zip(&op.weights) {
            for k in 0..n {
                v[k] = x[k] - y[k];
            }
            s[..src_len].iter_mut().for_each(|c| *c = 0.0);
            for (&t, &wt) in op.t.iter().zip(&self.tpow) {
                for k in 0..n {
                    p[k] = y[k] + t * v[k];
                }
                self.source.eval_into(&p[..n], &mut buf[..src_len]);
                for c in 0..src_len {
                    s[c] += wt * buf[c];
                }
            }
            for term in table {
                out[term.dst] += wy * term.sign * v[term.coord] * s[term.src];
            }
        }
    }
}

/// Pointwise kernel `K_y u(x)` with a `t_nodes`-point Gauss–Legendre rule.
pub fn apply_ky(u: &DifferentialForm, y: &[f64], x: &[f64], t_nodes: usize) -> Result<Covector> {
    let l = u.degree();
    if l == 0 {
        return Err(Error::InvalidDegree("K_y needs degree ≥ 1".into()));
    }
    let n = u.dims();
    if x.len() != n || y.len() != n {
        return Err(crate::error::invalid("point dimension differs from form"));
    }
    let (t, tw) = gauss_legendre(t_nodes, 0.0, 1.0);
    let v: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mut s = vec![0.0; u.len()];
    let mut buf = vec![0.0; u.len()];
    let mut p = vec![0.0; n];
    for (&t, &w) in t.iter().zip(&tw) {
        for k in 0..n {
            p[k] = y[k] + t * v[k];
        }
        u.eval_into(&p, &mut buf);
        let wt = w * t.powi(l as i32 - 1);
        for c in 0..s.len() {
            s[c] += wt * buf[c];
        }
    }
    let mut out = vec![0.0; binomial(n, l - 1)];
    for term in contraction_table(n, l) {
        out[term.dst] += term.sign * v[term.coord] * s[term.src];
    }
    Ok(Covector::from_raw(n, l - 1, out))
}

/// `Tu` on `u`'s domain with the default bump.
pub fn apply_t(u: &DifferentialForm, settings: &HomotopySettings) -> Result<DifferentialForm> {
    Arc::new(HomotopyOperator::for_domain(u.domain(), settings)?).apply(u)
}

/// `u_Ω = d(Tu)`, or the mean for 0-forms. With `ball`, the operator (or
/// mean) is taken over that ball instead and the result lives on it.
///
/// Over a ball `ψ_B` has unit discrete mass, so `d(T_B u) = u − T_B(du)`
/// holds exactly for each cone point; that form is used instead of
/// differencing `T_B u`.
pub fn closed_part(u: &DifferentialForm, settings: &HomotopySettings, ball: Option<&Ball>) -> Result<DifferentialForm> {
    let region = match ball {
        Some(b) => b.to_domain(settings.ball_resolution)?,
        None => u.domain().clone(),
    };
    if u.degree() == 0 {
        let rule = region.quadrature();
        let mut buf = [0.0];
        let mean = rule.integrate(|y| {
            u.eval_into(y, &mut buf);
            buf[0]
        }) / rule.total_weight();
        return DifferentialForm::constant(region, &Covector::scalar(u.dims(), mean)?);
    }
    let on_region = u.restricted_to(region)?;
    match ball {
        Some(b) => {
            if u.degree() == u.dims() {
                return Ok(on_region);
            }
            let op = Arc::new(HomotopyOperator::for_ball(b, settings)?);
            let t_du = op.apply(&on_region.exterior_derivative()?)?;
            on_region.sub(&t_du)
        }
        None => {
            let op = Arc::new(HomotopyOperator::for_domain(u.domain(), settings)?);
            op.apply(&on_region)?.exterior_derivative()
        }
    }
}

/// `max |u − d(Tu) − T(du)|` over a `per_axis`-point interior lattice.
pub fn decomposition_residual(u: &DifferentialForm, settings: &HomotopySettings, per_axis: usize) -> Result<f64> {
    let n = u.dims();
    let l = u.degree();
    if l == 0 || l >= n {
        return Err(Error::InvalidDegree(format!("decomposition needs 1 ≤ degree ≤ {}", n - 1)));
    }
    let op = Arc::new(HomotopyOperator::for_domain(u.domain(), settings)?);
    let dtu = op.apply(u)?.exterior_derivative()?;
    let tdu = op.apply(&u.exterior_derivative()?)?;
    let mut a = vec![0.0; u.len()];
    let mut b = vec![0.0; u.len()];
    let mut c = vec![0.0; u.len()];
    let mut worst = 0.0f64;
    for x in u.domain().test_points(per_axis) {
        u.eval_into(&x, &mut a);
        dtu.eval_into(&x, &mut b);
        tdu.eval_into(&x, &mut c);
        for i in 0..a.len() {
            a[i] -= b[i] + c[i];
        }
        worst = worst.max(modulus_of(&a));
    }
    Ok(worst)
}
