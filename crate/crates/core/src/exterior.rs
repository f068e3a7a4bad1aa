//! Pointwise exterior algebra of l-covectors in ℝⁿ.
//!
//! Basis covectors `dx_I` are indexed by strictly increasing tuples
//! `I = (i₁ < … < i_l)` with `1 ≤ i₁` and `i_l ≤ n`. Coefficients live in a
//! dense array addressed by the lexicographic rank of `I` among the `C(n,l)`
//! tuples of the same length.
//!
//! Sign conventions:
//!
//! * `dx_I ∧ dx_J` is the sign of the permutation sorting the concatenated
//!   tuple `(I, J)`, and zero when `I` and `J` share an index.
//! * `⋆dx_I = sign(I, J) dx_J` where `J` is the ordered complement of `I` and
//!   `sign(I, J)` the parity of `(I, J)` as a permutation of `(1, …, n)`.
//!   Equivalently `dx_I ∧ ⋆dx_I = dx_1 ∧ … ∧ dx_n`, which is what makes
//!   `|a|² = ⋆(a ∧ ⋆a)` hold with a plus sign for every degree.
//! * `⋆⋆a = (−1)^{l(n−l)} a`.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{invalid, Error, Result};

/// Largest ambient dimension supported by the basis tables.
pub const MAX_DIM: usize = 8;

/// Binomial coefficient `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Parity of the permutation that sorts the concatenation of two disjoint
/// index sets given as bitmasks: +1 for even, −1 for odd.
pub(crate) fn shuffle_sign(first: u32, second: u32) -> f64 {
    let mut inversions = 0u32;
    let mut rest = second;
    while rest != 0 {
        let q = rest.trailing_zeros();
        rest &= rest - 1;
        let above = if q + 1 >= 32 { 0 } else { first & !((1u32 << (q + 1)) - 1) };
        inversions += above.count_ones();
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub(crate) struct Basis {
    pub masks: Vec<u32>,
    rank: Vec<usize>,
}

impl Basis {
    fn build(n: usize, l: usize) -> Basis {
        let mut masks = Vec::with_capacity(binomial(n, l));
        let mut current = Vec::with_capacity(l);
        fn rec(n: usize, l: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<u32>) {
            if current.len() == l {
                out.push(current.iter().fold(0u32, |m, &i| m | (1 << i)));
                return;
            }
            for i in start..n {
                current.push(i);
                rec(n, l, i + 1, current, out);
                current.pop();
            }
        }
        rec(n, l, 0, &mut current, &mut masks);
        let mut rank = vec![usize::MAX; 1 << n];
        for (r, &m) in masks.iter().enumerate() {
            rank[m as usize] = r;
        }
        Basis { masks, rank }
    }

    #[inline]
    pub fn rank_of(&self, mask: u32) -> usize {
        self.rank[mask as usize]
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }
}

/// Cached lexicographic basis for `(n, l)`.
pub(crate) fn basis(n: usize, l: usize) -> &'static Basis {
    static TABLES: OnceLock<Vec<Vec<Basis>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        (0..=MAX_DIM)
            .map(|n| (0..=n).map(|l| Basis::build(n, l)).collect())
            .collect()
    });
    &tables[n][l]
}

/// One term of `ι_v dx_I = Σ_k (−1)^k v_{i_k} dx_{I∖i_k}`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ContractionTerm {
    pub src: usize,
    pub dst: usize,
    pub coord: usize,
    pub sign: f64,
}

/// One term of `d(u_I dx_I) = Σ_k ∂_k u_I dx_k ∧ dx_I`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DerivativeTerm {
    pub src: usize,
    pub dst: usize,
    pub coord: usize,
    pub sign: f64,
}

pub(crate) fn contraction_table(n: usize, l: usize) -> &'static [ContractionTerm] {
    static TABLES: OnceLock<Vec<Vec<Vec<ContractionTerm>>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        (0..=MAX_DIM)
            .map(|n| {
                (0..=n)
                    .map(|l| {
                        if l == 0 {
                            return Vec::new();
                        }
                        let src_basis = basis(n, l);
                        let dst_basis = basis(n, l - 1);
                        let mut terms = Vec::new();
                        for (src, &mask) in src_basis.masks.iter().enumerate() {
                            let mut rest = mask;
                            let mut position = 0;
                            while rest != 0 {
                                let coord = rest.trailing_zeros() as usize;
                                rest &= rest - 1;
                                let sign = if position % 2 == 0 { 1.0 } else { -1.0 };
                                terms.push(ContractionTerm {
                                    src,
                                    dst: dst_basis.rank_of(mask & !(1 << coord)),
                                    coord,
                                    sign,
                                });
                                position += 1;
                            }
                        }
                        terms
                    })
                    .collect()
            })
            .collect()
    });
    &tables[n][l]
}

pub(crate) fn derivative_table(n: usize, l: usize) -> &'static [DerivativeTerm] {
    static TABLES: OnceLock<Vec<Vec<Vec<DerivativeTerm>>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        (0..=MAX_DIM)
            .map(|n| {
                (0..=n)
                    .map(|l| {
                        if l >= n {
                            return Vec::new();
                        }
                        let src_basis = basis(n, l);
                        let dst_basis = basis(n, l + 1);
                        let mut terms = Vec::new();
                        for (src, &mask) in src_basis.masks.iter().enumerate() {
                            for coord in 0..n {
                                if mask & (1 << coord) != 0 {
                                    continue;
                                }
                                terms.push(DerivativeTerm {
                                    src,
                                    dst: dst_basis.rank_of(mask | (1 << coord)),
                                    coord,
                                    sign: shuffle_sign(1 << coord, mask),
                                });
                            }
                        }
                        terms
                    })
                    .collect()
            })
            .collect()
    });
    &tables[n][l]
}

pub(crate) fn check_dims(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(invalid(format!("dimension {n} outside 1..={MAX_DIM}")));
    }
    Ok(())
}

/// Strictly increasing multi-index, stored 1-based as in `dx_{i₁} ∧ … ∧ dx_{i_l}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    dims: usize,
    indices: Vec<usize>,
}

impl MultiIndex {
    pub fn new(dims: usize, indices: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        if indices.len() > dims {
            return Err(invalid(format!("{} indices exceed dimension {dims}", indices.len())));
        }
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(invalid(format!("indices {indices:?} are not strictly increasing")));
            }
        }
        if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i > dims) {
            return Err(invalid(format!("index {bad} outside 1..={dims}")));
        }
        Ok(MultiIndex { dims, indices: indices.to_vec() })
    }

    /// All multi-indices of length `degree`, in lexicographic order.
    pub fn all(dims: usize, degree: usize) -> Result<Vec<MultiIndex>> {
        check_dims(dims)?;
        if degree > dims {
            return Err(Error::InvalidDegree(format!("degree {degree} exceeds dimension {dims}")));
        }
        Ok(basis(dims, degree)
            .masks
            .iter()
            .map(|&m| MultiIndex::from_mask(dims, m))
            .collect())
    }

    pub(crate) fn from_mask(dims: usize, mask: u32) -> MultiIndex {
        let indices = (0..dims).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
        MultiIndex { dims, indices }
    }

    pub(crate) fn mask(&self) -> u32 {
        self.indices.iter().fold(0u32, |m, &i| m | (1 << (i - 1)))
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn degree(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Position of this index in the lexicographic basis of its degree.
    pub fn rank(&self) -> usize {
        basis(self.dims, self.degree()).rank_of(self.mask())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.indices.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.indices.iter().map(|i| format!("dx{i}")).collect();
        write!(f, "{}", parts.join("^"))
    }
}

/// Value of an l-form at a point: `Σ_I a_I dx_I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Covector {
    dims: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

impl Covector {
    pub fn zero(dims: usize, degree: usize) -> Result<Self> {
        check_dims(dims)?;
        if degree > dims {
            return Err(Error::InvalidDegree(format!("degree {degree} exceeds dimension {dims}")));
        }
        Ok(Covector { dims, degree, coeffs: vec![0.0; binomial(dims, degree)] })
    }

    /// Build from coefficients listed in lexicographic basis order.
    pub fn from_coeffs(dims: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        let mut c = Covector::zero(dims, degree)?;
        if coeffs.len() != c.coeffs.len() {
            return Err(invalid(format!(
                "expected {} coefficients for degree {degree} in dimension {dims}, got {}",
                c.coeffs.len(),
                coeffs.len()
            )));
        }
        c.coeffs = coeffs;
        Ok(c)
    }

    pub fn scalar(dims: usize, value: f64) -> Result<Self> {
        Covector::from_coeffs(dims, 0, vec![value])
    }

    /// `coefficient · dx_I`.
    pub fn basis(index: &MultiIndex, coefficient: f64) -> Self {
        let mut c = Covector {
            dims: index.dims,
            degree: index.degree(),
            coeffs: vec![0.0; binomial(index.dims, index.degree())],
        };
        c.coeffs[index.rank()] = coefficient;
        c
    }

    pub(crate) fn from_raw(dims: usize, degree: usize, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs.len(), binomial(dims, degree));
        Covector { dims, degree, coeffs }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn get(&self, index: &MultiIndex) -> f64 {
        if index.dims != self.dims || index.degree() != self.degree {
            return 0.0;
        }
        self.coeffs[index.rank()]
    }

    pub fn scaled(&self, factor: f64) -> Covector {
        Covector { coeffs: self.coeffs.iter().map(|c| c * factor).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &Covector) -> Result<Covector> {
        if self.dims != other.dims || self.degree != other.degree {
            return Err(invalid("adding covectors of different shape"));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Covector { coeffs, ..self.clone() })
    }

    pub fn sub(&self, other: &Covector) -> Result<Covector> {
        self.add(&other.scaled(-1.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Euclidean modulus `sqrt(Σ a_I²)`.
    pub fn modulus(&self) -> f64 {
        modulus_of(&self.coeffs)
    }

    /// Contraction with a vector in the first slot, `ι_v a`.
    pub fn interior(&self, v: &[f64]) -> Result<Covector> {
        if v.len() != self.dims {
            return Err(invalid("vector length does not match covector dimension"));
        }
        if self.degree == 0 {
            return Err(Error::InvalidDegree("cannot contract a 0-covector".into()));
        }
        let mut out = vec![0.0; binomial(self.dims, self.degree - 1)];
        for t in contraction_table(self.dims, self.degree) {
            out[t.dst] += t.sign * v[t.coord] * self.coeffs[t.src];
        }
        Ok(Covector::from_raw(self.dims, self.degree - 1, out))
    }
}

impl fmt::Display for Covector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (&mask, &c) in basis(self.dims, self.degree).masks.iter().zip(&self.coeffs) {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}·{}", MultiIndex::from_mask(self.dims, mask))?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn modulus_of(coeffs: &[f64]) -> f64 {
    coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Exterior product `a ∧ b`.
pub fn wedge(a: &Covector, b: &Covector) -> Result<Covector> {
    if a.dims != b.dims {
        return Err(invalid(format!("dimension mismatch: {} vs {}", a.dims, b.dims)));
    }
    let n = a.dims;
    let degree = a.degree + b.degree;
    if degree > n {
        return Err(invalid(format!("wedge degree {degree} exceeds dimension {n}")));
    }
    let ba = basis(n, a.degree);
    let bb = basis(n, b.degree);
    let bout = basis(n, degree);
    let mut out = vec![0.0; bout.len()];
    for (i, &ma) in ba.masks.iter().enumerate() {
        if a.coeffs[i] == 0.0 {
            continue;
        }
        for (j, &mb) in bb.masks.iter().enumerate() {
            if ma & mb != 0 {
                continue;
            }
            out[bout.rank_of(ma | mb)] += shuffle_sign(ma, mb) * a.coeffs[i] * b.coeffs[j];
        }
    }
    Ok(Covector::from_raw(n, degree, out))
}

/// Euclidean Hodge star, mapping l-covectors to (n−l)-covectors.
pub fn hodge_star(a: &Covector) -> Covector {
    let n = a.dims;
    let full = (1u32 << n) - 1;
    let bin = basis(n, a.degree);
    let bout = basis(n, n - a.degree);
    let mut out = vec![0.0; bout.len()];
    for (i, &mask) in bin.masks.iter().enumerate() {
        let complement = full & !mask;
        out[bout.rank_of(complement)] = shuffle_sign(mask, complement) * a.coeffs[i];
    }
    Covector::from_raw(n, n - a.degree, out)
}

/// `|a|`, the Euclidean modulus.
pub fn modulus(a: &Covector) -> f64 {
    a.modulus()
}

/// Scalar `⋆(a ∧ ⋆a)`, which equals `|a|²`.
pub fn star_modulus_squared(a: &Covector) -> f64 {
    let top = wedge(a, &hodge_star(a)).expect("a ∧ ⋆a always has degree n");
    hodge_star(&top).coeffs[0]
}
