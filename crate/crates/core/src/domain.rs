//! Bounded convex domains (boxes and balls), ball geometry, and the
//! deterministic ball families used to approximate suprema over `σB ⊂ Ω`.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exterior::check_dims;
use crate::quadrature::{unit_ball_volume, Quadrature};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone)]
pub struct Domain {
    shape: Shape,
    resolution: usize,
    rule: Arc<OnceLock<Quadrature>>,
}

impl PartialEq for Domain {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape && self.resolution == other.resolution
    }
}

impl Domain {
    pub fn new(shape: Shape, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(invalid("grid resolution must be positive"));
        }
        match &shape {
            Shape::Box { lower, upper } => {
                check_dims(lower.len())?;
                if upper.len() != lower.len() {
                    return Err(invalid("box bounds differ in length"));
                }
                if lower.iter().chain(upper).any(|v| !v.is_finite()) {
                    return Err(invalid("box bounds must be finite"));
                }
                if lower.iter().zip(upper).any(|(a, b)| !(b > a)) {
                    return Err(invalid("box has zero volume"));
                }
            }
            Shape::Ball { center, radius } => {
                check_dims(center.len())?;
                if !(*radius > 0.0) || !radius.is_finite() || center.iter().any(|c| !c.is_finite()) {
                    return Err(invalid("ball needs a finite centre and positive radius"));
                }
            }
        }
        Ok(Domain { shape, resolution, rule: Arc::new(OnceLock::new()) })
    }

    pub fn new_box(lower: &[f64], upper: &[f64], resolution: usize) -> Result<Self> {
        Domain::new(Shape::Box { lower: lower.to_vec(), upper: upper.to_vec() }, resolution)
    }

    pub fn unit_cube(dims: usize, resolution: usize) -> Result<Self> {
        Domain::new_box(&vec![0.0; dims], &vec![1.0; dims], resolution)
    }

    pub fn new_ball(center: &[f64], radius: f64, resolution: usize) -> Result<Self> {
        Domain::new(Shape::Ball { center: center.to_vec(), radius }, resolution)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn with_resolution(&self, resolution: usize) -> Result<Self> {
        Domain::new(self.shape.clone(), resolution)
    }

    pub fn dims(&self) -> usize {
        match &self.shape {
            Shape::Box { lower, .. } => lower.len(),
            Shape::Ball { center, .. } => center.len(),
        }
    }

    /// |Ω| in closed form.
    pub fn volume(&self) -> f64 {
        match &self.shape {
            Shape::Box { lower, upper } => lower.iter().zip(upper).map(|(a, b)| b - a).product(),
            Shape::Ball { center, radius } => unit_ball_volume(center.len()) * radius.powi(center.len() as i32),
        }
    }

    pub fn diam(&self) -> f64 {
        match &self.shape {
            Shape::Box { lower, upper } => {
                lower.iter().zip(upper).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
            }
            Shape::Ball { radius, .. } => 2.0 * radius,
        }
    }

    pub fn inradius(&self) -> f64 {
        match &self.shape {
            Shape::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(a, b)| 0.5 * (b - a))
                .fold(f64::INFINITY, f64::min),
            Shape::Ball { radius, .. } => *radius,
        }
    }

    pub fn centroid(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Box { lower, upper } => lower.iter().zip(upper).map(|(a, b)| 0.5 * (a + b)).collect(),
            Shape::Ball { center, .. } => center.clone(),
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.shape {
            Shape::Box { lower, upper } => (lower.clone(), upper.clone()),
            Shape::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }

    /// Signed distance from `x` to the boundary, positive inside.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(&v, (&a, &b))| (v - a).min(b - v))
                .fold(f64::INFINITY, f64::min),
            Shape::Ball { center, radius } => {
                radius - x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            }
        }
    }

    /// Membership in the closure, with a relative slack of 1e−9·diam.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims() && self.boundary_distance(x) >= -1e-9 * self.diam()
    }

    /// Exact closed-form test for `ball ⊂ Ω`.
    pub fn contains_ball(&self, ball: &Ball) -> bool {
        if ball.center.len() != self.dims() {
            return false;
        }
        match &self.shape {
            Shape::Box { lower, upper } => ball
                .center
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(&c, (&a, &b))| c - ball.radius >= a && c + ball.radius <= b),
            Shape::Ball { center, radius } => {
                let d = ball.center.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                d + ball.radius <= *radius
            }
        }
    }

    /// The integration rule at this domain's resolution: tensor
    /// Gauss–Legendre on boxes, restricted midpoint grid on balls.
    pub fn quadrature(&self) -> &Quadrature {
        self.rule.get_or_init(|| match &self.shape {
            Shape::Box { lower, upper } => {
                Quadrature::gauss_box(lower, upper, self.resolution).expect("validated box")
            }
            Shape::Ball { center, radius } => {
                Quadrature::midpoint_ball(center, *radius, self.resolution).expect("validated ball")
            }
        })
    }

    /// Deterministic interior test lattice with `per_axis` points per axis
    /// (cell centres of the bounding box that lie strictly inside).
    pub fn test_points(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let (lo, hi) = self.bounding_box();
        let n = self.dims();
        let mut out = Vec::new();
        let mut idx = vec![0usize; n];
        for _ in 0..per_axis.pow(n as u32) {
            let p: Vec<f64> = (0..n)
                .map(|k| lo[k] + (idx[k] as f64 + 0.5) / per_axis as f64 * (hi[k] - lo[k]))
                .collect();
            if self.boundary_distance(&p) > 0.0 {
                out.push(p);
            }
            for slot in idx.iter_mut().rev() {
                *slot += 1;
                if *slot < per_axis {
                    break;
                }
                *slot = 0;
            }
        }
        out
    }

    /// Integrate a scalar field over the domain.
    pub fn integrate(&self, f: impl FnMut(&[f64]) -> f64) -> Result<f64> {
        if !(self.volume() > 0.0) {
            return Err(invalid("region has zero volume"));
        }
        Ok(self.quadrature().integrate(f))
    }
}

/// Integrate a scalar field over a domain or ball region.
pub fn integrate_scalar(f: impl FnMut(&[f64]) -> f64, region: &Domain) -> Result<f64> {
    region.integrate(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid("ball radius must be positive"));
        }
        Ok(Ball { center, radius })
    }

    pub fn dims(&self) -> usize {
        self.center.len()
    }

    /// Concentric ball with radius `σ·r`.
    pub fn dilate(&self, sigma: f64) -> Ball {
        Ball { center: self.center.clone(), radius: self.radius * sigma }
    }

    /// |B| = ωₙ rⁿ.
    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dims()) * self.radius.powi(self.dims() as i32)
    }

    pub fn diam(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn to_domain(&self, resolution: usize) -> Result<Domain> {
        Domain::new_ball(&self.center, self.radius, resolution)
    }
}

const LATTICE_PER_AXIS: usize = 7;
const RADIUS_RATIO: f64 = 0.7;
const MAX_LEVELS: usize = 64;

/// Largest radius `r` with `σB(center, r) ⊂ Ω`.
pub fn max_admissible_radius(domain: &Domain, center: &[f64], sigma: f64) -> f64 {
    (domain.boundary_distance(center) / sigma).max(0.0)
}

/// Interior points of the `7ⁿ` lattice `lo + (i+1)/8·(hi−lo)`; the odd
/// size puts a node on the centroid.
fn lattice_centers(domain: &Domain) -> Vec<Vec<f64>> {
    let (lo, hi) = domain.bounding_box();
    let n = domain.dims();
    let m = LATTICE_PER_AXIS;
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    for _ in 0..m.pow(n as u32) {
        let p: Vec<f64> = (0..n)
            .map(|k| lo[k] + (idx[k] as f64 + 1.0) / (m as f64 + 1.0) * (hi[k] - lo[k]))
            .collect();
        if domain.boundary_distance(&p) > 0.0 {
            out.push(p);
        }
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < m {
                break;
            }
            *slot = 0;
        }
    }
    out
}

/// Deterministic ball family: centres on a fixed interior lattice, radii
/// `r_j = (inradius/σ)·0.7^j`, each kept only if `σB ⊂ Ω`. Enumeration is
/// level-major and independent of `count`, so the family for a larger
/// count always extends the one for a smaller count.
pub fn sample_balls(domain: &Domain, sigma: f64, count: usize) -> Result<Vec<Ball>> {
    if !(sigma > 1.0) || !sigma.is_finite() {
        return Err(invalid(format!("dilation factor must exceed 1, got {sigma}")));
    }
    if count == 0 {
        return Err(invalid("ball count must be positive"));
    }
    let centers = lattice_centers(domain);
    let r0 = domain.inradius() / sigma;
    let mut family = Vec::with_capacity(count);
    for level in 0..MAX_LEVELS {
        let r = r0 * RADIUS_RATIO.powi(level as i32);
        for c in &centers {
            let ball = Ball { center: c.clone(), radius: r };
            if domain.contains_ball(&ball.dilate(sigma)) {
                family.push(ball);
                if family.len() == count {
                    return Ok(family);
                }
            }
        }
    }
    if family.is_empty() {
        return Err(Error::EmptyFamily(format!("no ball with {sigma}·B inside the domain")));
    }
    Ok(family)
}
