//! Quadrature rules: tensor Gauss–Legendre on boxes and indicator-restricted
//! midpoint grids on balls. Every rule is a flat list of nodes and weights
//! summed in a fixed pairwise order, so results are bit-reproducible.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{invalid, Result};

/// Gauss–Legendre nodes and weights mapped to `[a, b]`, nodes ascending.
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let order = NonZeroUsize::new(order.max(1)).expect("order is at least one");
    let rule = GaussLegendre::new(order);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut pairs: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    pairs.into_iter().unzip()
}

/// Volume of the unit ball in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Pairwise summation in a fixed order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    dims: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Quadrature {
    pub fn from_parts(dims: usize, nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dims == 0 || nodes.len() != dims * weights.len() {
            return Err(invalid("quadrature nodes and weights disagree in length"));
        }
        Ok(Quadrature { dims, nodes, weights })
    }

    /// Tensor-product Gauss–Legendre rule with `order` nodes per axis.
    pub fn gauss_box(lower: &[f64], upper: &[f64], order: usize) -> Result<Self> {
        let dims = lower.len();
        if dims == 0 || upper.len() != dims {
            return Err(invalid("box bounds must have matching positive length"));
        }
        if lower.iter().zip(upper).any(|(a, b)| !(b > a)) {
            return Err(invalid("box has zero volume"));
        }
        let axes: Vec<(Vec<f64>, Vec<f64>)> = lower
            .iter()
            .zip(upper)
            .map(|(&a, &b)| gauss_legendre(order, a, b))
            .collect();
        let total = order.pow(dims as u32);
        let mut nodes = Vec::with_capacity(total * dims);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; dims];
        for _ in 0..total {
            let mut w = 1.0;
            for (k, &i) in idx.iter().enumerate() {
                nodes.push(axes[k].0[i]);
                w *= axes[k].1[i];
            }
            weights.push(w);
            for slot in idx.iter_mut().rev() {
                *slot += 1;
                if *slot < order {
                    break;
                }
                *slot = 0;
            }
        }
        Ok(Quadrature { dims, nodes, weights })
    }

    /// Midpoint rule on the bounding-box grid of a ball with `resolution`
    /// cells per axis, restricted to cell centres inside the ball. Weights
    /// are rescaled so they sum to the exact ball volume.
    pub fn midpoint_ball(center: &[f64], radius: f64, resolution: usize) -> Result<Self> {
        let dims = center.len();
        if dims == 0 || !(radius > 0.0) || resolution == 0 {
            return Err(invalid("ball quadrature needs a positive radius and resolution"));
        }
        let cell = 2.0 * radius / resolution as f64;
        let total = resolution.pow(dims as u32);
        let mut nodes = Vec::new();
        let mut count = 0usize;
        let mut idx = vec![0usize; dims];
        let mut point = vec![0.0; dims];
        for _ in 0..total {
            let mut r2 = 0.0;
            for k in 0..dims {
                let offset = -radius + (idx[k] as f64 + 0.5) * cell;
                point[k] = center[k] + offset;
                r2 += offset * offset;
            }
            if r2 < radius * radius {
                nodes.extend_from_slice(&point);
                count += 1;
            }
            for slot in idx.iter_mut().rev() {
                *slot += 1;
                if *slot < resolution {
                    break;
                }
                *slot = 0;
            }
        }
        if count == 0 {
            return Err(invalid("ball quadrature grid has no interior nodes"));
        }
        let exact = unit_ball_volume(dims) * radius.powi(dims as i32);
        let w = exact / count as f64;
        Ok(Quadrature { dims, nodes, weights: vec![w; count] })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dims..(i + 1) * self.dims]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.nodes.chunks_exact(self.dims).zip(self.weights.iter().copied())
    }

    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// `Σ wᵢ f(xᵢ)`.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let terms: Vec<f64> = self.iter().map(|(x, w)| w * f(x)).collect();
        pairwise_sum(&terms)
    }

    /// `Σ wᵢ vᵢ` for values already sampled at the nodes.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        let terms: Vec<f64> = self.weights.iter().zip(values).map(|(w, v)| w * v).collect();
        pairwise_sum(&terms)
    }

    /// `f` sampled at every node.
    pub fn sample(&self, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
        self.nodes.chunks_exact(self.dims).map(|x| f(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(5, 0.0, 2.0);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(9)).sum();
        assert!((integral - 2f64.powi(10) / 10.0).abs() < 1e-11);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn box_rule_examples() {
        let q = Quadrature::gauss_box(&[0.0, 0.0], &[1.0, 1.0], 8).unwrap();
        assert!((q.integrate(|_| 1.0) - 1.0).abs() <= 1e-12);
        assert!((q.integrate(|x| x[0]) - 0.5).abs() <= 1e-10);
        assert!((q.integrate(|x| x[0] * x[0] * x[1]) - 1.0 / 6.0).abs() <= 1e-14);
        assert!(Quadrature::gauss_box(&[0.0, 0.0], &[1.0, 0.0], 4).is_err());
    }

    #[test]
    fn disk_area_and_second_moment() {
        let q = Quadrature::midpoint_ball(&[0.0, 0.0], 1.0, 201).unwrap();
        assert!((q.integrate(|_| 1.0) - std::f64::consts::PI).abs() <= 1e-3);
        // ∫ x₁² over the unit disk is π/4
        let m2 = q.integrate(|x| x[0] * x[0]);
        assert!((m2 - std::f64::consts::FRAC_PI_4).abs() <= 1e-3, "{m2}");
        assert!(Quadrature::midpoint_ball(&[0.0], 0.0, 4).is_err());
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn pairwise_sum_is_order_fixed() {
        let v: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        assert_eq!(pairwise_sum(&v), pairwise_sum(&v.clone()));
        assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-12);
    }
}
