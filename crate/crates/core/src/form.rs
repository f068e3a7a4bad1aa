//! Differential forms as coefficient fields over a domain.
//!
//! A form of degree `l` on `Ω ⊂ ℝⁿ` is a [`FormField`] producing the
//! `C(n,l)` coefficients `u_I(x)` in lexicographic order. Fields that can
//! differentiate themselves (expressions, Chebyshev proxies, combinations of
//! those) make the form *analytic*; everything else falls back to central
//! finite differences.

use std::fmt;
use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::Domain;
use crate::error::{invalid, Error, Result};
use crate::expr::{Compiled, Expr, Var, Vars};
use crate::exterior::{basis, binomial, derivative_table, modulus_of, shuffle_sign, Covector, MultiIndex};

pub trait FormField: Send + Sync {
    /// Number of coefficients written by [`FormField::eval_into`].
    fn len(&self) -> usize;

    fn eval_into(&self, x: &[f64], out: &mut [f64]);

    /// Field of `∂u_I/∂x_k` for every coefficient, when available in closed form.
    fn partial(&self, _k: usize) -> Option<FieldRef> {
        None
    }
}

pub type FieldRef = Arc<dyn FormField>;

pub type CoefficientFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Coefficients given by symbolic expressions.
pub struct ExprField {
    exprs: Vec<Expr>,
    compiled: Vec<Compiled>,
}

impl ExprField {
    pub fn new(exprs: Vec<Expr>) -> Self {
        let compiled = exprs.iter().map(Expr::compile).collect();
        ExprField { exprs, compiled }
    }

    pub fn exprs(&self) -> &[Expr] {
        &self.exprs
    }
}

impl FormField for ExprField {
    fn len(&self) -> usize {
        self.exprs.len()
    }

    #[inline]
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.compiled) {
            *o = c.eval(0.0, x);
        }
    }

    fn partial(&self, k: usize) -> Option<FieldRef> {
        Some(Arc::new(ExprField::new(
            self.exprs.iter().map(|e| e.derivative(Var::Coord(k))).collect(),
        )))
    }
}

struct ClosureField {
    len: usize,
    f: Arc<CoefficientFn>,
    partials: Option<Vec<FieldRef>>,
}

impl FormField for ClosureField {
    fn len(&self) -> usize {
        self.len
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }

    fn partial(&self, k: usize) -> Option<FieldRef> {
        self.partials.as_ref().map(|p| p[k].clone())
    }
}

/// `Σ cᵢ·fieldᵢ` for fields of equal shape.
struct Combination {
    len: usize,
    terms: Vec<(f64, FieldRef)>,
}

impl FormField for Combination {
    fn len(&self) -> usize {
        self.len
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut buf = [0.0f64; 70];
        let buf = &mut buf[..self.len];
        for (c, f) in &self.terms {
            f.eval_into(x, buf);
            for (o, v) in out.iter_mut().zip(buf.iter()) {
                *o += c * v;
            }
        }
    }

    fn partial(&self, k: usize) -> Option<FieldRef> {
        let terms = self
            .terms
            .iter()
            .map(|(c, f)| f.partial(k).map(|p| (*c, p)))
            .collect::<Option<Vec<_>>>()?;
        Some(Arc::new(Combination { len: self.len, terms }))
    }
}

/// Signed permutation of coefficients, `out[dst] = sign·src[from]`.
struct SignedPermutation {
    source: FieldRef,
    map: Vec<(usize, usize, f64)>,
}

impl FormField for SignedPermutation {
    fn len(&self) -> usize {
        self.map.len()
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let mut buf = [0.0f64; 70];
        let buf = &mut buf[..self.source.len()];
        self.source.eval_into(x, buf);
        for &(dst, src, sign) in &self.map {
            out[dst] = sign * buf[src];
        }
    }

    fn partial(&self, k: usize) -> Option<FieldRef> {
        Some(Arc::new(SignedPermutation { source: self.source.partial(k)?, map: self.map.clone() }))
    }
}

/// `du` from the analytic partials of `u`.
struct AnalyticDerivative {
    dims: usize,
    degree: usize,
    partials: Vec<FieldRef>,
}

impl FormField for AnalyticDerivative {
    fn len(&self) -> usize {
        binomial(self.dims, self.degree + 1)
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let src_len = binomial(self.dims, self.degree);
        let mut grads = [0.0f64; 8 * 70];
        for (k, p) in self.partials.iter().enumerate() {
            p.eval_into(x, &mut grads[k * src_len..(k + 1) * src_len]);
        }
        for t in derivative_table(self.dims, self.degree) {
            out[t.dst] += t.sign * grads[t.coord * src_len + t.src];
        }
    }

    fn partial(&self, k: usize) -> Option<FieldRef> {
        let partials = self.partials.iter().map(|p| p.partial(k)).collect::<Option<Vec<_>>>()?;
        Some(Arc::new(AnalyticDerivative { dims: self.dims, degree: self.degree, partials }))
    }
}

/// `du` by central differences, switching to second-order one-sided
/// stencils within `h` of the boundary.
struct FiniteDifferenceDerivative {
    source: FieldRef,
    domain: Domain,
    degree: usize,
    step: f64,
}

pub(crate) fn fd_gradient(
    source: &dyn FormField,
    domain: &Domain,
    step: f64,
    x: &[f64],
    grads: &mut [f64],
) {
    let n = x.len();
    let len = source.len();
    let mut p = [0.0f64; 8];
    let p = &mut p[..n];
    let mut a = [0.0f64; 70];
    let mut b = [0.0f64; 70];
    let mut c = [0.0f64; 70];
    let inside = |p: &[f64]| domain.boundary_distance(p) >= 0.0;
    for k in 0..n {
        let g = &mut grads[k * len..(k + 1) * len];
        p.copy_from_slice(x);
        p[k] = x[k] + step;
        let plus_ok = inside(p);
        p[k] = x[k] - step;
        let minus_ok = inside(p);
        if plus_ok == minus_ok {
            // interior (or both outside, where the field is still defined)
            p[k] = x[k] + step;
            source.eval_into(p, &mut a[..len]);
            p[k] = x[k] - step;
            source.eval_into(p, &mut b[..len]);
            for i in 0..len {
                g[i] = (a[i] - b[i]) / (2.0 * step);
            }
        } else {
            let dir = if plus_ok { 1.0 } else { -1.0 };
            source.eval_into(x, &mut a[..len]);
            p[k] = x[k] + dir * step;
            source.eval_into(p, &mut b[..len]);
            p[k] = x[k] + dir * 2.0 * step;
            source.eval_into(p, &mut c[..len]);
            for i in 0..len {
                g[i] = dir * (-3.0 * a[i] + 4.0 * b[i] - c[i]) / (2.0 * step);
            }
        }
    }
}

impl FormField for FiniteDifferenceDerivative {
    fn len(&self) -> usize {
        binomial(self.domain.dims(), self.degree + 1)
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.domain.dims();
        let src_len = self.source.len();
        let mut grads = [0.0f64; 8 * 70];
        fd_gradient(self.source.as_ref(), &self.domain, self.step, x, &mut grads[..n * src_len]);
        out.iter_mut().for_each(|o| *o = 0.0);
        for t in derivative_table(n, self.degree) {
            out[t.dst] += t.sign * grads[t.coord * src_len + t.src];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference { step: f64 },
}

/// Default finite-difference step relative to the domain diameter.
pub const FD_STEP_FACTOR: f64 = 1e-4;

#[derive(Clone)]
pub struct DifferentialForm {
    domain: Domain,
    degree: usize,
    field: FieldRef,
    step: f64,
}

impl fmt::Debug for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DifferentialForm")
            .field("dims", &self.dims())
            .field("degree", &self.degree)
            .field("mode", &self.derivative_mode())
            .finish()
    }
}

impl DifferentialForm {
    /// Wrap a field; the finite-difference step defaults to `1e−4·diam(Ω)`.
    pub fn from_field(domain: Domain, degree: usize, field: FieldRef) -> Result<Self> {
        let n = domain.dims();
        if degree > n {
            return Err(Error::InvalidDegree(format!("degree {degree} exceeds dimension {n}")));
        }
        if field.len() != binomial(n, degree) {
            return Err(invalid(format!(
                "field has {} coefficients, degree {degree} in dimension {n} needs {}",
                field.len(),
                binomial(n, degree)
            )));
        }
        let step = FD_STEP_FACTOR * domain.diam();
        Ok(DifferentialForm { domain, degree, field, step })
    }

    pub fn from_exprs(domain: Domain, degree: usize, exprs: Vec<Expr>) -> Result<Self> {
        let span = exprs.iter().map(Expr::coord_span).max().unwrap_or(0);
        if span > domain.dims() {
            return Err(invalid(format!("expression uses x{span} in dimension {}", domain.dims())));
        }
        DifferentialForm::from_field(domain, degree, Arc::new(ExprField::new(exprs)))
    }

    /// Parse one expression per coefficient, in lexicographic basis order.
    pub fn parse(domain: Domain, degree: usize, coefficients: &[&str]) -> Result<Self> {
        let vars = Vars::space(domain.dims());
        let exprs = coefficients.iter().map(|s| Expr::parse(s, vars)).collect::<Result<Vec<_>>>()?;
        DifferentialForm::from_exprs(domain, degree, exprs)
    }

    pub fn zero(domain: Domain, degree: usize) -> Result<Self> {
        let len = binomial(domain.dims(), degree);
        DifferentialForm::from_exprs(domain, degree, vec![Expr::constant(0.0); len])
    }

    pub fn constant(domain: Domain, value: &Covector) -> Result<Self> {
        if value.dims() != domain.dims() {
            return Err(invalid("covector dimension differs from domain"));
        }
        let exprs = value.coeffs().iter().map(|&c| Expr::constant(c)).collect();
        DifferentialForm::from_exprs(domain, value.degree(), exprs)
    }

    /// Form from a coefficient closure; derivatives by finite differences.
    pub fn from_fn(
        domain: Domain,
        degree: usize,
        f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        let len = binomial(domain.dims(), degree);
        DifferentialForm::from_field(domain, degree, Arc::new(ClosureField { len, f: Arc::new(f), partials: None }))
    }

    /// Form from a coefficient closure with caller-supplied first partials
    /// (`partials[k]` fills `∂u_I/∂x_k`). The partials are checked against
    /// central differences at `h = 1e−4` on random interior points.
    pub fn from_fn_with_partials(
        domain: Domain,
        degree: usize,
        f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        partials: Vec<Arc<CoefficientFn>>,
    ) -> Result<Self> {
        let n = domain.dims();
        let len = binomial(n, degree);
        if partials.len() != n {
            return Err(invalid(format!("expected {n} partial-derivative closures, got {}", partials.len())));
        }
        let partials: Vec<FieldRef> = partials
            .into_iter()
            .map(|p| Arc::new(ClosureField { len, f: p, partials: None }) as FieldRef)
            .collect();
        let field = Arc::new(ClosureField { len, f: Arc::new(f), partials: Some(partials) });
        let form = DifferentialForm::from_field(domain, degree, field)?;
        form.validate_partials(1e-4, 1e-4)?;
        Ok(form)
    }

    /// Compare analytic first partials with central differences at random
    /// interior points.
    pub fn validate_partials(&self, step: f64, tol: f64) -> Result<()> {
        let n = self.dims();
        let len = self.field.len();
        let Some(partials) = (0..n).map(|k| self.field.partial(k)).collect::<Option<Vec<_>>>() else {
            return Ok(());
        };
        let (lo, hi) = self.domain.bounding_box();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut checked = 0;
        let mut attempts = 0;
        let mut a = vec![0.0; len];
        let mut b = vec![0.0; len];
        let mut d = vec![0.0; len];
        while checked < 8 && attempts < 1000 {
            attempts += 1;
            let x: Vec<f64> = (0..n).map(|k| rng.random_range(lo[k]..hi[k])).collect();
            if self.domain.boundary_distance(&x) <= 2.0 * step {
                continue;
            }
            checked += 1;
            for (k, p) in partials.iter().enumerate() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += step;
                xm[k] -= step;
                self.field.eval_into(&xp, &mut a);
                self.field.eval_into(&xm, &mut b);
                p.eval_into(&x, &mut d);
                for i in 0..len {
                    let fd = (a[i] - b[i]) / (2.0 * step);
                    if (fd - d[i]).abs() > tol * d[i].abs().max(1.0) {
                        return Err(invalid(format!(
                            "supplied partial d/dx{} of coefficient {i} disagrees with finite differences at {x:?}: {} vs {fd}",
                            k + 1,
                            d[i]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dims(&self) -> usize {
        self.domain.dims()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    pub fn len(&self) -> usize {
        self.field.len()
    }

    pub fn fd_step(&self) -> f64 {
        self.step
    }

    pub fn with_fd_step(mut self, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(invalid("finite-difference step must be positive"));
        }
        self.step = step;
        Ok(self)
    }

    /// The same coefficient field viewed on another domain of equal dimension.
    pub fn restricted_to(&self, domain: Domain) -> Result<Self> {
        if domain.dims() != self.dims() {
            return Err(invalid("restriction changes dimension"));
        }
        DifferentialForm::from_field(domain, self.degree, self.field.clone())
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        if self.field.partial(0).is_some() {
            DerivativeMode::Analytic
        } else {
            DerivativeMode::FiniteDifference { step: self.step }
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Covector> {
        if !self.domain.contains(x) {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        let mut out = vec![0.0; self.len()];
        self.field.eval_into(x, &mut out);
        Ok(Covector::from_raw(self.dims(), self.degree, out))
    }

    /// Coefficients at `x` without the domain check.
    #[inline]
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        self.field.eval_into(x, out)
    }

    pub fn modulus_at(&self, x: &[f64]) -> f64 {
        let mut buf = [0.0f64; 70];
        let buf = &mut buf[..self.len()];
        self.field.eval_into(x, buf);
        modulus_of(buf)
    }

    /// `du = Σ_I Σ_k ∂_k u_I dx_k ∧ dx_I`.
    pub fn exterior_derivative(&self) -> Result<DifferentialForm> {
        let n = self.dims();
        if self.degree >= n {
            return Err(Error::InvalidDegree(format!("d of a degree-{n} form in dimension {n}")));
        }
        let partials: Option<Vec<FieldRef>> = (0..n).map(|k| self.field.partial(k)).collect();
        let field: FieldRef = match partials {
            Some(partials) => Arc::new(AnalyticDerivative { dims: n, degree: self.degree, partials }),
            None => Arc::new(FiniteDifferenceDerivative {
                source: self.field.clone(),
                domain: self.domain.clone(),
                degree: self.degree,
                step: self.step,
            }),
        };
        let mut du = DifferentialForm::from_field(self.domain.clone(), self.degree + 1, field)?;
        du.step = self.step;
        Ok(du)
    }

    /// Pointwise Hodge star, `(⋆u)(x) = ⋆(u(x))`.
    pub fn hodge_star(&self) -> DifferentialForm {
        let n = self.dims();
        let full = (1u32 << n) - 1;
        let src = basis(n, self.degree);
        let dst = basis(n, n - self.degree);
        let map = src
            .masks
            .iter()
            .enumerate()
            .map(|(i, &m)| (dst.rank_of(full & !m), i, shuffle_sign(m, full & !m)))
            .collect();
        let field = Arc::new(SignedPermutation { source: self.field.clone(), map });
        let mut out = DifferentialForm::from_field(self.domain.clone(), n - self.degree, field)
            .expect("star preserves coefficient counts");
        out.step = self.step;
        out
    }

    /// Codifferential on k-forms, `d⋆ = (−1)^{n(k+1)+1} ⋆ d ⋆`.
    pub fn codifferential(&self) -> Result<DifferentialForm> {
        let n = self.dims();
        let k = self.degree;
        if k == 0 {
            return Err(Error::InvalidDegree("codifferential of a 0-form".into()));
        }
        let sign = if (n * (k + 1) + 1) % 2 == 0 { 1.0 } else { -1.0 };
        Ok(self.hodge_star().exterior_derivative()?.hodge_star().scaled(sign))
    }

    pub fn scaled(&self, factor: f64) -> DifferentialForm {
        self.combine(&[(factor, self)]).expect("same shape")
    }

    /// `self − other`.
    pub fn sub(&self, other: &DifferentialForm) -> Result<DifferentialForm> {
        self.combine(&[(1.0, self), (-1.0, other)])
    }

    pub fn add(&self, other: &DifferentialForm) -> Result<DifferentialForm> {
        self.combine(&[(1.0, self), (1.0, other)])
    }

    /// `Σ cᵢ uᵢ` on this form's domain.
    pub fn combine(&self, terms: &[(f64, &DifferentialForm)]) -> Result<DifferentialForm> {
        if terms.iter().any(|(_, f)| f.degree != self.degree || f.dims() != self.dims()) {
            return Err(invalid("combining forms of different degree or dimension"));
        }
        let field = Combination {
            len: self.len(),
            terms: terms.iter().map(|(c, f)| (*c, f.field.clone())).collect(),
        };
        let mut out = DifferentialForm::from_field(self.domain.clone(), self.degree, Arc::new(field))?;
        out.step = self.step;
        Ok(out)
    }

    /// Basis labels in coefficient order, e.g. `["dx1", "dx2"]`.
    pub fn basis_labels(&self) -> Vec<String> {
        MultiIndex::all(self.dims(), self.degree)
            .expect("degree validated")
            .iter()
            .map(|m| m.to_string())
            .collect()
    }

    /// Largest coefficient magnitude over a point set.
    pub fn max_coefficient_on(&self, points: &[Vec<f64>]) -> f64 {
        let mut buf = vec![0.0; self.len()];
        points.iter().fold(0.0, |m: f64, p| {
            self.field.eval_into(p, &mut buf);
            buf.iter().fold(m, |m, v| m.max(v.abs()))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Domain {
        Domain::unit_cube(2, 16).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let u = DifferentialForm::parse(square(), 0, &["x1*x2"]).unwrap();
        assert!((u.evaluate(&[0.5, 0.4]).unwrap().coeffs()[0] - 0.2).abs() < 1e-15);
        let dx1 = DifferentialForm::parse(square(), 1, &["1", "0"]).unwrap();
        assert_eq!(dx1.evaluate(&[0.9, 0.1]).unwrap().coeffs(), &[1.0, 0.0]);
        let v = DifferentialForm::parse(square(), 1, &["x2", "0"]).unwrap();
        assert_eq!(v.evaluate(&[0.3, 0.7]).unwrap().coeffs(), &[0.7, 0.0]);
        assert!(matches!(v.evaluate(&[1.5, 0.2]), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn derivative_examples() {
        let u = DifferentialForm::parse(square(), 0, &["x1*x2"]).unwrap();
        let du = u.exterior_derivative().unwrap();
        assert_eq!(du.derivative_mode(), DerivativeMode::Analytic);
        assert_eq!(du.evaluate(&[0.3, 0.8]).unwrap().coeffs(), &[0.8, 0.3]);

        let dx1 = DifferentialForm::parse(square(), 1, &["1", "0"]).unwrap();
        assert_eq!(dx1.exterior_derivative().unwrap().evaluate(&[0.5, 0.5]).unwrap().coeffs(), &[0.0]);

        let top = DifferentialForm::parse(square(), 2, &["x1"]).unwrap();
        assert!(matches!(top.exterior_derivative(), Err(Error::InvalidDegree(_))));
    }

    #[test]
    fn dd_vanishes_under_finite_differences() {
        let f = DifferentialForm::from_fn(square(), 0, |x, out| out[0] = x[0] * x[0] * x[1]).unwrap();
        assert!(matches!(f.derivative_mode(), DerivativeMode::FiniteDifference { .. }));
        let ddf = f.exterior_derivative().unwrap().exterior_derivative().unwrap();
        let pts = square().test_points(6);
        assert!(ddf.max_coefficient_on(&pts) <= 1e-6);
        // includes points within h of the boundary
        let edge = vec![vec![1e-6, 0.5], vec![0.99999999, 0.999999]];
        assert!(ddf.max_coefficient_on(&edge) <= 1e-6);
    }

    #[test]
    fn fd_derivative_near_boundary_is_one_sided() {
        let f = DifferentialForm::from_fn(square(), 0, |x, out| out[0] = x[0].powi(3)).unwrap();
        let df = f.exterior_derivative().unwrap();
        let c = df.evaluate(&[1.0, 0.5]).unwrap();
        assert!((c.coeffs()[0] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn supplied_partials_are_validated() {
        let good = DifferentialForm::from_fn_with_partials(
            square(),
            0,
            |x, o| o[0] = x[0] * x[1],
            vec![Arc::new(|x: &[f64], o: &mut [f64]| o[0] = x[1]), Arc::new(|x: &[f64], o: &mut [f64]| o[0] = x[0])],
        );
        assert!(good.is_ok());
        let bad = DifferentialForm::from_fn_with_partials(
            square(),
            0,
            |x, o| o[0] = x[0] * x[1],
            vec![Arc::new(|x: &[f64], o: &mut [f64]| o[0] = 2.0 * x[1]), Arc::new(|x: &[f64], o: &mut [f64]| o[0] = x[0])],
        );
        assert!(matches!(bad, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn codifferential_of_conjugate_potential() {
        // v = 2x1x2 dx1∧dx2: d⋆v = 2x1 dx1 − 2x2 dx2 = d(x1² − x2²)
        let v = DifferentialForm::parse(square(), 2, &["2*x1*x2"]).unwrap();
        let c = v.codifferential().unwrap().evaluate(&[0.3, 0.6]).unwrap();
        assert!((c.coeffs()[0] - 0.6).abs() < 1e-14);
        assert!((c.coeffs()[1] + 1.2).abs() < 1e-14);
    }

    #[test]
    fn dimension_checked_at_parse() {
        assert!(DifferentialForm::parse(square(), 0, &["x3"]).is_err());
        assert!(DifferentialForm::parse(square(), 1, &["x1"]).is_err());
    }
}
