//! Tensor Chebyshev interpolants of form fields over a bounding box.
//!
//! Expensive fields (the homotopy image in particular) are tabulated once at
//! Chebyshev points of the second kind and then evaluated by barycentric
//! interpolation. Partials of the interpolant are exact derivatives of the
//! polynomial, so a proxy is always analytic.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::form::{DifferentialForm, FieldRef, FormField};

const MAX_ORDER: usize = 64;

#[derive(Debug, Clone)]
struct Axis {
    lo: f64,
    half: f64,
    /// Nodes on `[−1, 1]`, `cos(jπ/N)`.
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Axis {
    fn new(lo: f64, hi: f64, intervals: usize) -> Axis {
        let nodes = (0..=intervals).map(|j| (j as f64 * PI / intervals as f64).cos()).collect();
        let weights = (0..=intervals)
            .map(|j| {
                let w = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == intervals {
                    0.5 * w
                } else {
                    w
                }
            })
            .collect();
        Axis { lo, half: 0.5 * (hi - lo), nodes, weights }
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn point(&self, j: usize) -> f64 {
        self.lo + self.half * (1.0 + self.nodes[j])
    }

    /// Lagrange basis values at `x`.
    fn basis(&self, x: f64, out: &mut [f64]) {
        let xi = (x - self.lo) / self.half - 1.0;
        let mut denom = 0.0;
        for (j, (&xj, &wj)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let diff = xi - xj;
            if diff == 0.0 {
                out.iter_mut().for_each(|o| *o = 0.0);
                out[j] = 1.0;
                return;
            }
            out[j] = wj / diff;
            denom += out[j];
        }
        out.iter_mut().for_each(|o| *o /= denom);
    }

    /// Differentiation matrix in physical coordinates, row-major.
    fn diff_matrix(&self) -> Vec<f64> {
        let m = self.len();
        let n = m - 1;
        let c = |i: usize| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            if i == 0 || i == n {
                2.0 * s
            } else {
                s
            }
        };
        let mut d = vec![0.0; m * m];
        for i in 0..m {
            let mut row = 0.0;
            for j in 0..m {
                if i != j {
                    let v = c(i) / c(j) / (self.nodes[i] - self.nodes[j]);
                    d[i * m + j] = v / self.half;
                    row += d[i * m + j];
                }
            }
            d[i * m + i] = -row;
        }
        d
    }
}

/// A tabulated tensor interpolant with `len` coefficients.
pub struct ChebyshevField {
    len: usize,
    axes: Arc<Vec<Axis>>,
    /// `values[c * total + flat]`, flat index row-major with axis 0 slowest.
    values: Vec<f64>,
}

impl ChebyshevField {
    fn total(&self) -> usize {
        self.axes.iter().map(Axis::len).product()
    }

    pub fn order(&self) -> usize {
        self.axes[0].len()
    }
}

impl FormField for ChebyshevField {
    fn len(&self) -> usize {
        self.len
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.axes.len();
        let m = self.axes[0].len();
        let mut basis = [[0.0f64; MAX_ORDER + 1]; 8];
        for k in 0..n {
            self.axes[k].basis(x[k], &mut basis[k][..m]);
        }
        let total = self.total();
        let last = &basis[n - 1][..m];
        for (c, o) in out.iter_mut().enumerate() {
            let vals = &self.values[c * total..(c + 1) * total];
            let mut acc = 0.0;
            let mut idx = [0usize; 8];
            for chunk in vals.chunks_exact(m) {
                let mut w = 1.0;
                for k in 0..n - 1 {
                    w *= basis[k][idx[k]];
                }
                if w != 0.0 {
                    let dot: f64 = chunk.iter().zip(last).map(|(v, b)| v * b).sum();
                    acc += w * dot;
                }
                for k in (0..n.saturating_sub(1)).rev() {
                    idx[k] += 1;
                    if idx[k] < m {
                        break;
                    }
                    idx[k] = 0;
                }
            }
            *o = acc;
        }
    }

    fn partial(&self, k: usize) -> Option<FieldRef> {
        let m = self.axes[k].len();
        let d = self.axes[k].diff_matrix();
        let total = self.total();
        let stride: usize = self.axes[k + 1..].iter().map(Axis::len).product();
        let mut values = vec![0.0; self.values.len()];
        for c in 0..self.len {
            let src = &self.values[c * total..(c + 1) * total];
            let dst = &mut values[c * total..(c + 1) * total];
            for base in 0..total {
                if (base / stride) % m != 0 {
                    continue;
                }
                for i in 0..m {
                    let mut s = 0.0;
                    for j in 0..m {
                        s += d[i * m + j] * src[base + j * stride];
                    }
                    dst[base + i * stride] = s;
                }
            }
        }
        Some(Arc::new(ChebyshevField { len: self.len, axes: self.axes.clone(), values }))
    }
}

/// Outcome of an adaptive tabulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxyReport {
    /// Points per axis of the accepted interpolant.
    pub order: usize,
    /// Largest coefficient error on the check points, relative to the field's
    /// largest coefficient (floored at one).
    pub error: f64,
    pub converged: bool,
}

/// Tabulate `form` at `N+1` Chebyshev points per axis for `N = 4, 8, 16, …`
/// up to `max_intervals`, stopping once the check-point error is below
/// `tol`. Grids are nested, so each refinement reuses earlier samples.
pub fn chebyshev_proxy(
    form: &DifferentialForm,
    tol: f64,
    max_intervals: usize,
) -> (DifferentialForm, ProxyReport) {
    let n = form.dims();
    let len = form.len();
    let (lo, hi) = form.domain().bounding_box();
    let finest = max_intervals.clamp(4, MAX_ORDER).next_power_of_two().min(MAX_ORDER);
    let mut cache: HashMap<Vec<usize>, Vec<f64>> = HashMap::new();
    let fine_axes: Vec<Axis> = (0..n).map(|k| Axis::new(lo[k], hi[k], finest)).collect();
    let mut sample = |idx: &[usize]| -> Vec<f64> {
        cache
            .entry(idx.to_vec())
            .or_insert_with(|| {
                let x: Vec<f64> = idx.iter().enumerate().map(|(k, &j)| fine_axes[k].point(j)).collect();
                let mut v = vec![0.0; len];
                form.eval_into(&x, &mut v);
                v
            })
            .clone()
    };

    let checks = check_points(form);
    let mut exact = vec![0.0; checks.len() * len];
    for (i, p) in checks.iter().enumerate() {
        form.eval_into(p, &mut exact[i * len..(i + 1) * len]);
    }
    let scale = exact.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    let mut intervals = 4;
    loop {
        let axes: Vec<Axis> = (0..n).map(|k| Axis::new(lo[k], hi[k], intervals)).collect();
        let m = intervals + 1;
        let total = m.pow(n as u32);
        let mut values = vec![0.0; len * total];
        let mut idx = vec![0usize; n];
        let step = finest / intervals;
        for flat in 0..total {
            let fine: Vec<usize> = idx.iter().map(|&j| j * step).collect();
            let v = sample(&fine);
            for c in 0..len {
                values[c * total + flat] = v[c];
            }
            for slot in idx.iter_mut().rev() {
                *slot += 1;
                if *slot < m {
                    break;
                }
                *slot = 0;
            }
        }
        let field = ChebyshevField { len, axes: Arc::new(axes), values };
        let mut buf = vec![0.0; len];
        let mut err = 0.0f64;
        for (i, p) in checks.iter().enumerate() {
            field.eval_into(p, &mut buf);
            for c in 0..len {
                err = err.max((buf[c] - exact[i * len + c]).abs());
            }
        }
        let err = err / scale;
        let converged = err <= tol;
        if converged || intervals >= finest {
            let proxy = DifferentialForm::from_field(form.domain().clone(), form.degree(), Arc::new(field))
                .expect("shape preserved")
                .with_fd_step(form.fd_step())
                .expect("positive step");
            return (proxy, ProxyReport { order: m, error: err, converged });
        }
        intervals *= 2;
    }
}

/// Fixed off-grid probe points inside the domain.
fn check_points(form: &DifferentialForm) -> Vec<Vec<f64>> {
    let n = form.dims();
    let (lo, hi) = form.domain().bounding_box();
    let fractions = [0.0713, 0.2391, 0.4127, 0.5869, 0.7548, 0.9271];
    let count = if n <= 2 { 12 } else { 16 };
    (0..count)
        .map(|i| {
            (0..n)
                .map(|k| lo[k] + fractions[(i * (2 * k + 1) + k) % fractions.len()] * (hi[k] - lo[k]))
                .collect::<Vec<f64>>()
        })
        .filter(|p| form.domain().boundary_distance(p) > 0.0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;

    #[test]
    fn reproduces_polynomials_and_their_partials() {
        let d = Domain::new_box(&[0.0, -1.0], &[2.0, 1.0], 8).unwrap();
        let u = DifferentialForm::parse(d.clone(), 1, &["x1^3*x2 - x2^2", "x1*x2"]).unwrap();
        let exact_only = DifferentialForm::from_fn(d, 1, |x, o| {
            o[0] = x[0].powi(3) * x[1] - x[1] * x[1];
            o[1] = x[0] * x[1];
        })
        .unwrap();
        let (p, report) = chebyshev_proxy(&exact_only, 1e-12, 16);
        assert!(report.converged);
        assert_eq!(report.order, 5);
        let c = p.evaluate(&[1.3, 0.2]).unwrap();
        let e = u.evaluate(&[1.3, 0.2]).unwrap();
        assert!(c.sub(&e).unwrap().max_abs() < 1e-12);
        let dp = p.exterior_derivative().unwrap().evaluate(&[0.7, -0.4]).unwrap();
        let de = u.exterior_derivative().unwrap().evaluate(&[0.7, -0.4]).unwrap();
        assert!(dp.sub(&de).unwrap().max_abs() < 1e-10, "{dp} vs {de}");
    }

    #[test]
    fn refines_smooth_non_polynomials() {
        let d = Domain::unit_cube(2, 8).unwrap();
        let f = DifferentialForm::from_fn(d, 0, |x, o| o[0] = (3.0 * x[0]).sin() * (-x[1]).exp()).unwrap();
        let (p, report) = chebyshev_proxy(&f, 1e-9, 32);
        assert!(report.converged, "{report:?}");
        assert!(report.order > 5);
        let v = p.evaluate(&[0.123, 0.987]).unwrap().coeffs()[0];
        assert!((v - (0.369f64).sin() * (-0.987f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn three_dimensional_partials() {
        let d = Domain::unit_cube(3, 4).unwrap();
        let f = DifferentialForm::from_fn(d, 0, |x, o| o[0] = x[0] * x[1] * x[1] + x[2].powi(3)).unwrap();
        let (p, _) = chebyshev_proxy(&f, 1e-12, 8);
        for k in 0..3 {
            let dk = p.field().partial(k).unwrap();
            let mut v = [0.0];
            dk.eval_into(&[0.3, 0.4, 0.5], &mut v);
            let exact = [0.16, 0.24, 0.75][k];
            assert!((v[0] - exact).abs() < 1e-11, "{k}: {}", v[0]);
        }
    }
}
