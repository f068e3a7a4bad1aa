//! Test-form corpus and the textual form-spec grammar shared by the CLI,
//! configuration files and the C interface.
//!
//! ```text
//! zero[:l]                  zero l-form (default l = 0)
//! const:dx1 | const:dx1^dx2 constant basis form
//! poly:<expr>               0-form from an expression
//! form:<l>:<e1>;<e2>;...    l-form, one expression per basis element
//! corpus:<id>               entry of the default corpus
//! polynomial:<deg>          polynomial 1-form of the given degree
//! exp_bump | trig           smooth 1-form presets
//! radial_power:<a>          |x − x₀|^a dx1 with x₀ off the grid
//! ```

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{invalid, Result};
use crate::exterior::{binomial, Covector, MultiIndex};
use crate::form::DifferentialForm;

/// Offsets of the radial-power singularity from the centroid (per axis),
/// chosen to avoid Gauss–Legendre and midpoint nodes.
const SINGULARITY_OFFSET: [f64; 8] = [-0.1863, -0.0729, 0.0417, -0.0583, 0.0291, -0.0347, 0.0179, -0.0113];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    Smooth,
    /// Finitely smooth, with a singular point off the quadrature grid.
    Singular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tags {
    pub degree: usize,
    pub closed: bool,
    pub smoothness: Smoothness,
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub id: String,
    pub form: DifferentialForm,
    /// Conjugate partner `v` for pairs `(u, v)`.
    pub partner: Option<DifferentialForm>,
    pub tags: Tags,
    /// Form spec the entry was built from.
    pub provenance: String,
}

fn coords(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

fn shifted_square_norm(center: &[f64]) -> String {
    center
        .iter()
        .enumerate()
        .map(|(k, c)| format!("(x{} - {c})^2", k + 1))
        .collect::<Vec<_>>()
        .join(" + ")
}

/// Coefficient strings of a 1-form `f dx1`.
fn dx1_form(n: usize, f: String) -> Vec<String> {
    let mut c = vec!["0".to_string(); n];
    c[0] = f;
    c
}

fn preset(name: &str, arg: Option<&str>, domain: &Domain) -> Result<Option<(usize, Vec<String>, Smoothness)>> {
    let n = domain.dims();
    let x = coords(n);
    let centroid = domain.centroid();
    let number = |a: Option<&str>, what: &str| -> Result<f64> {
        a.ok_or_else(|| invalid(format!("preset `{name}` needs {what}")))?
            .trim()
            .parse::<f64>()
            .map_err(|_| invalid(format!("preset `{name}`: {what} must be a number")))
    };
    Ok(Some(match name {
        "polynomial" => {
            let deg = number(arg, "a degree")?;
            if deg < 0.0 || deg.fract() != 0.0 || deg > 9.0 {
                return Err(invalid("polynomial degree must be an integer in 0..=9"));
            }
            let deg = deg as usize;
            let coeffs = (0..n)
                .map(|i| {
                    let sign = if i % 2 == 1 { "-" } else { "" };
                    match deg {
                        0 => "1".to_string(),
                        1 => format!("{sign}{}", x[(i + 1) % n]),
                        d => format!("{sign}{}^{d} + {}", x[(i + 1) % n], x[i]),
                    }
                })
                .collect();
            (1, coeffs, Smoothness::Smooth)
        }
        "exp_bump" => (1, dx1_form(n, format!("exp(-8*({}))", shifted_square_norm(&centroid))), Smoothness::Smooth),
        "radial_power" => {
            let a = number(arg, "an exponent")?;
            if !(a > 0.0) {
                return Err(invalid("radial_power exponent must be positive"));
            }
            let x0: Vec<f64> = centroid.iter().zip(SINGULARITY_OFFSET).map(|(c, o)| c + o).collect();
            (1, dx1_form(n, format!("({})^{}", shifted_square_norm(&x0), a / 2.0)), Smoothness::Singular)
        }
        "trig" => {
            let coeffs = (0..n)
                .map(|i| if i == n - 1 && n > 1 {
                    format!("sin({}*{})", x[0], x[i])
                } else {
                    format!("sin(2*{})*cos({})", x[(i + 1) % n], x[i])
                })
                .collect();
            (1, coeffs, Smoothness::Smooth)
        }
        _ => return Ok(None),
    }))
}

/// Build a form on `domain` from a form spec.
pub fn build_form(spec: &str, domain: &Domain) -> Result<DifferentialForm> {
    let n = domain.dims();
    let spec = spec.trim();
    let (name, arg) = match spec.split_once(':') {
        Some((a, b)) => (a.trim(), Some(b.trim())),
        None => (spec, None),
    };
    match name {
        "zero" => {
            let l = match arg {
                Some(a) => a.parse::<usize>().map_err(|_| invalid(format!("zero form degree `{a}` is not an integer")))?,
                None => 0,
            };
            if l > n {
                return Err(crate::error::Error::InvalidDegree(format!("degree {l} exceeds dimension {n}")));
            }
            DifferentialForm::zero(domain.clone(), l)
        }
        "const" => {
            let basis = arg.ok_or_else(|| invalid("const needs a basis element such as dx1 or dx1^dx2"))?;
            let index = parse_basis(basis, n)?;
            DifferentialForm::constant(domain.clone(), &Covector::basis(&index, 1.0))
        }
        "poly" => {
            let e = arg.ok_or_else(|| invalid("poly needs an expression"))?;
            DifferentialForm::parse(domain.clone(), 0, &[e])
        }
        "form" => {
            let rest = arg.ok_or_else(|| invalid("form needs <degree>:<coefficients>"))?;
            let (l, coeffs) = rest.split_once(':').ok_or_else(|| invalid("form needs <degree>:<coefficients>"))?;
            let l: usize = l.trim().parse().map_err(|_| invalid(format!("form degree `{l}` is not an integer")))?;
            if l > n {
                return Err(crate::error::Error::InvalidDegree(format!("degree {l} exceeds dimension {n}")));
            }
            let coeffs: Vec<&str> = coeffs.split(';').map(str::trim).collect();
            if coeffs.len() != binomial(n, l) {
                return Err(invalid(format!(
                    "degree-{l} form in dimension {n} needs {} coefficients, got {}",
                    binomial(n, l),
                    coeffs.len()
                )));
            }
            DifferentialForm::parse(domain.clone(), l, &coeffs)
        }
        "corpus" => {
            let id = arg.ok_or_else(|| invalid("corpus needs an entry id"))?;
            default_corpus(domain)?
                .into_iter()
                .find(|e| e.id == id)
                .map(|e| e.form)
                .ok_or_else(|| invalid(format!("no corpus entry `{id}`")))
        }
        _ => match preset(name, arg, domain)? {
            Some((l, coeffs, _)) => {
                let refs: Vec<&str> = coeffs.iter().map(String::as_str).collect();
                DifferentialForm::parse(domain.clone(), l, &refs)
            }
            None => Err(invalid(format!("unknown form spec `{spec}`"))),
        },
    }
}

fn parse_basis(s: &str, n: usize) -> Result<MultiIndex> {
    let indices = s
        .split('^')
        .map(|p| {
            p.trim()
                .strip_prefix("dx")
                .and_then(|i| i.parse::<usize>().ok())
                .ok_or_else(|| invalid(format!("`{p}` is not a basis covector like dx2")))
        })
        .collect::<Result<Vec<_>>>()?;
    MultiIndex::new(n, &indices)
}

/// `du ≡ 0` on an interior lattice (always true in top degree).
pub fn is_closed(u: &DifferentialForm) -> Result<bool> {
    if u.degree() == u.dims() {
        return Ok(true);
    }
    let pts = u.domain().test_points(7);
    let scale = 1.0 + u.max_coefficient_on(&pts);
    Ok(u.exterior_derivative()?.max_coefficient_on(&pts) <= 1e-10 * scale)
}

/// Entry from a form spec, with tags computed from the form.
pub fn entry_from_spec(id: &str, spec: &str, domain: &Domain) -> Result<CorpusEntry> {
    let form = build_form(spec, domain)?;
    let name = spec.split(':').next().unwrap_or("");
    let smoothness = if name == "radial_power" { Smoothness::Singular } else { Smoothness::Smooth };
    let tags = Tags { degree: form.degree(), closed: is_closed(&form)?, smoothness };
    Ok(CorpusEntry { id: id.to_string(), form, partner: None, tags, provenance: spec.to_string() })
}

/// Ids and specs of the default corpus in dimension `n`.
pub fn default_specs(n: usize) -> Vec<(&'static str, String)> {
    let x = coords(n);
    let one_form = |f: &dyn Fn(usize) -> String| (0..n).map(f).collect::<Vec<_>>().join(";");
    let all_but_first_zero = |first: &str| {
        let mut c = vec!["0".to_string(); n];
        c[0] = first.to_string();
        c.join(";")
    };
    let top = |c: &str| format!("form:{n}:{c}");
    let mut specs = vec![
        ("coordinate_1form", "polynomial:1".to_string()),
        ("constant_dx1", "const:dx1".to_string()),
        (
            "exact_polynomial",
            // d(x1² x2 x3…)
            format!(
                "form:1:{}",
                one_form(&|i| {
                    let monomial: Vec<String> = (0..n)
                        .filter(|&j| j != i)
                        .map(|j| if j == 0 { format!("{}^2", x[0]) } else { x[j].clone() })
                        .collect();
                    let lead = (i == 0).then(|| format!("2*{}", x[0]));
                    lead.into_iter().chain(monomial).collect::<Vec<_>>().join("*")
                })
            ),
        ),
        (
            "cubic",
            format!(
                "form:1:{}",
                one_form(&|i| if i == 0 {
                    format!("{}^2*{}", x[0], x[1 % n])
                } else {
                    format!("{} - {}^3", x[i - 1], x[i])
                })
            ),
        ),
        ("trigonometric", "trig".to_string()),
        (
            "exact_trigonometric",
            // d(Π sin xᵢ)
            format!(
                "form:1:{}",
                one_form(&|i| (0..n)
                    .map(|j| if j == i { format!("cos({})", x[j]) } else { format!("sin({})", x[j]) })
                    .collect::<Vec<_>>()
                    .join("*"))
            ),
        ),
        ("gaussian_bump", "exp_bump".to_string()),
        ("radial_power", "radial_power:1.5".to_string()),
        ("linear_top_form", top(&x[0])),
        ("volume_form", top("1")),
        ("product_scalar", format!("poly:{}", x.join("*"))),
    ];
    if n == 2 {
        specs.push(("conjugate_pair", "poly:x1^2 - x2^2".to_string()));
    } else {
        specs.push(("dx1_scaled", format!("form:1:{}", all_but_first_zero("3"))));
    }
    specs
}

/// The twelve-entry default corpus. In two dimensions the last entry is
/// the harmonic pair `u = x1² − x2²`, `v = 2x1x2 dx1∧dx2`.
pub fn default_corpus(domain: &Domain) -> Result<Vec<CorpusEntry>> {
    let n = domain.dims();
    default_specs(n)
        .into_iter()
        .map(|(id, spec)| {
            let mut e = entry_from_spec(id, &spec, domain)?;
            if id == "conjugate_pair" {
                e.partner = Some(DifferentialForm::parse(domain.clone(), 2, &["2*x1*x2"])?);
            }
            Ok(e)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Domain {
        Domain::unit_cube(2, 16).unwrap()
    }

    #[test]
    fn spec_grammar() {
        let d = square();
        assert_eq!(build_form("zero", &d).unwrap().degree(), 0);
        assert_eq!(build_form("zero:2", &d).unwrap().degree(), 2);
        let c = build_form("const:dx1^dx2", &d).unwrap();
        assert_eq!(c.evaluate(&[0.3, 0.3]).unwrap().coeffs(), &[1.0]);
        let f = build_form("form:1:x2;x1^2", &d).unwrap();
        assert_eq!(f.evaluate(&[0.5, 0.25]).unwrap().coeffs(), &[0.25, 0.25]);
        assert!(build_form("form:1:x2", &d).is_err());
        assert!(build_form("nonsense", &d).is_err());
        assert!(build_form("const:dx3", &d).is_err());
        assert!(build_form("radial_power:-1", &d).is_err());
        assert_eq!(build_form("corpus:volume_form", &d).unwrap().degree(), 2);
    }

    #[test]
    fn default_corpus_shape() {
        let d = square();
        let c = default_corpus(&d).unwrap();
        assert_eq!(c.len(), 12);
        let closed: Vec<&str> = c.iter().filter(|e| e.tags.closed).map(|e| e.id.as_str()).collect();
        assert_eq!(
            closed,
            ["constant_dx1", "exact_polynomial", "exact_trigonometric", "linear_top_form", "volume_form"]
        );
        let ids: std::collections::BTreeSet<_> = c.iter().map(|e| &e.id).collect();
        assert_eq!(ids.len(), 12);
        assert!(c.last().unwrap().partner.is_some());
        let exact = &c[2].form;
        let v = exact.evaluate(&[0.5, 0.25]).unwrap();
        assert_eq!(v.coeffs(), &[0.25, 0.25]);
    }

    #[test]
    fn corpus_in_three_dimensions() {
        let d = Domain::unit_cube(3, 8).unwrap();
        let c = default_corpus(&d).unwrap();
        assert_eq!(c.len(), 12);
        for e in &c {
            if e.id.starts_with("exact") || e.id == "constant_dx1" {
                assert!(e.tags.closed, "{}", e.id);
            }
        }
    }

    #[test]
    fn singularity_is_off_grid() {
        let d = square();
        let u = build_form("radial_power:1.5", &d).unwrap();
        for (x, _) in d.with_resolution(101).unwrap().quadrature().iter() {
            assert!(u.modulus_at(x) > 0.0);
        }
    }
}
