//! Differential forms on bounded convex domains, the cone homotopy
//! operator, Orlicz-type norms of forms (Luxemburg, L^φ-BMO,
//! L^φ-Lipschitz, weighted variants), and a harness that measures
//! empirical constants in the norm inequalities relating them.
//!
//! ```
//! use formnorm::{Domain, DifferentialForm, YoungFunction};
//! use formnorm::norms::{luxemburg_norm, lp_norm};
//!
//! let square = Domain::unit_cube(2, 32).unwrap();
//! let u = DifferentialForm::parse(square.clone(), 0, &["x1"]).unwrap();
//! let phi = YoungFunction::power(2.0).unwrap();
//! let f = |x: &[f64]| u.modulus_at(x);
//! let lux = luxemburg_norm(f, &square, &phi, None).unwrap();
//! let l2 = lp_norm(f, &square, 2.0, None).unwrap();
//! assert!((lux - l2).abs() < 1e-9);
//! ```

pub mod config;
pub mod corpus;
pub mod domain;
pub mod error;
pub mod expr;
pub mod exterior;
pub mod form;
pub mod homotopy;
pub mod norms;
pub mod proxy;
pub mod quadrature;
pub mod report;
pub mod selftest;
pub mod suite;
pub mod verify;
pub mod weights;
pub mod young;

pub use config::RunConfig;
pub use domain::{Ball, Domain};
pub use error::{Error, Result};
pub use exterior::{hodge_star, wedge, Covector, MultiIndex};
pub use form::DifferentialForm;
pub use homotopy::{apply_t, closed_part, decomposition_residual, HomotopySettings};
pub use norms::{oscillation_norm, OscillationKind, OscillationNormSpec};
pub use report::{SuiteReport, VerificationReport};
pub use suite::run_suite;
pub use weights::{Weight, WeightSpec};
pub use young::{YoungFunction, YoungSpec};
