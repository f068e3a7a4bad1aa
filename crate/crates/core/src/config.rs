//! TOML run configuration. Validation collects every problem before
//! reporting, so a bad file is fixed in one pass.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{build_form, default_specs};
use crate::domain::{Domain, Shape};
use crate::error::{Error, Result};
use crate::homotopy::HomotopySettings;
use crate::weights::{Weight, WeightSpec};
use crate::young::YoungFunction;

/// Environment variable naming a default configuration file.
pub const CONFIG_ENV: &str = "FORMNORM_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub domain: Shape,
    /// Gauss–Legendre nodes per axis on `Ω`.
    pub grid_resolution: usize,
    /// Midpoint cells per axis on each ball.
    pub ball_resolution: usize,
    pub ball_count: usize,
    /// Dilation in `σB ⊂ Ω`.
    pub sigma: f64,
    /// Dilation in the weak reverse Hölder check; defaults to `sigma`.
    pub rho: Option<f64>,
    /// Lipschitz exponent.
    pub k: f64,
    pub homotopy: HomotopyConfig,
    /// Young function for the Orlicz-norm inequalities.
    pub phi: String,
    pub g_class: GClassConfig,
    /// Lebesgue exponent for the `T` and closed-part bounds.
    pub t: f64,
    /// Exponent for Sobolev–Poincaré, `1 < t < n`.
    pub sobolev_t: f64,
    pub oscillation_lower: OscillationLowerConfig,
    pub conjugate: ConjugateConfig,
    pub weighted_lipschitz: WeightedLipschitzConfig,
    pub norm_comparison: NormComparisonConfig,
    pub weights: Vec<String>,
    /// Corpus entries; empty selects the built-in corpus.
    pub corpus: Vec<CorpusItem>,
    /// Verifier ids to run; empty runs all.
    pub verifiers: Vec<String>,
    pub decomposition_tolerance: f64,
    pub stability: bool,
    pub stability_tolerance: f64,
    /// Relative accuracy of the Chebyshev tabulation of `Tu`.
    pub proxy_tolerance: f64,
    pub proxy_max_intervals: usize,
    /// Seed for the randomized self-test draws.
    pub seed: u64,
    /// Directory that receives `report.json` and `report.csv`.
    pub output_dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomotopyConfig {
    pub t_nodes: usize,
    pub support_fraction: f64,
    pub ball_t_nodes: usize,
    pub ball_psi_resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GClassConfig {
    pub p: f64,
    pub q: f64,
    pub c: f64,
    /// Witnesses in `t`; derived from `phi` when omitted.
    pub g: Option<String>,
    pub h: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillationLowerConfig {
    pub psi: String,
    pub a: Vec<f64>,
    /// `|u − u_Ω|` below this fraction of `max |u|` counts as zero.
    pub zero_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConjugateConfig {
    pub p: f64,
    pub q: f64,
    /// `A(x, ξ) = a|ξ|^{q−2}ξ`.
    pub a: f64,
    pub phi: String,
    pub structural_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightedLipschitzConfig {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    /// `φ(t) ≤ t^s` with `s < q`.
    pub s: f64,
    pub phi: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormComparisonConfig {
    pub phi: String,
    pub p: f64,
    pub balls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusItem {
    pub id: String,
    pub form: String,
    /// Conjugate partner spec.
    #[serde(default)]
    pub partner: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: Shape::Box { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] },
            grid_resolution: 101,
            ball_resolution: 16,
            ball_count: 32,
            sigma: 1.1,
            rho: None,
            k: 0.5,
            homotopy: HomotopyConfig::default(),
            phi: "power:2".into(),
            g_class: GClassConfig::default(),
            t: 2.0,
            sobolev_t: 1.5,
            oscillation_lower: OscillationLowerConfig::default(),
            conjugate: ConjugateConfig::default(),
            weighted_lipschitz: WeightedLipschitzConfig::default(),
            norm_comparison: NormComparisonConfig::default(),
            weights: vec!["const:1".into(), "power:0.5".into(), "custom:1 + |x|^2".into()],
            corpus: Vec::new(),
            verifiers: Vec::new(),
            decomposition_tolerance: 1e-3,
            stability: true,
            stability_tolerance: 0.1,
            proxy_tolerance: 1e-9,
            proxy_max_intervals: 32,
            seed: 0x5eed,
            output_dir: None,
        }
    }
}

impl Default for HomotopyConfig {
    fn default() -> Self {
        let s = HomotopySettings::default();
        HomotopyConfig {
            t_nodes: s.t_nodes,
            support_fraction: s.support_fraction,
            ball_t_nodes: s.ball_t_nodes,
            ball_psi_resolution: s.ball_psi_resolution,
        }
    }
}

impl Default for GClassConfig {
    fn default() -> Self {
        GClassConfig { p: 1.5, q: 3.0, c: 1.0, g: None, h: None }
    }
}

impl Default for OscillationLowerConfig {
    fn default() -> Self {
        OscillationLowerConfig { psi: "power:2".into(), a: vec![0.5, 1.0, 2.0], zero_threshold: 1e-3 }
    }
}

impl Default for ConjugateConfig {
    fn default() -> Self {
        ConjugateConfig { p: 2.0, q: 2.0, a: 1.0, phi: "power:2".into(), structural_tolerance: 1e-4 }
    }
}

impl Default for WeightedLipschitzConfig {
    fn default() -> Self {
        WeightedLipschitzConfig { p: 4.0, q: 1.5, alpha: 2.0, s: 1.2, phi: "power:1.2".into() }
    }
}

impl Default for NormComparisonConfig {
    fn default() -> Self {
        NormComparisonConfig { phi: "custom:t^3/(1 + t)".into(), p: 2.0, balls: 50 }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(vec![e.message().to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn dims(&self) -> usize {
        match &self.domain {
            Shape::Box { lower, .. } => lower.len(),
            Shape::Ball { center, .. } => center.len(),
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho.unwrap_or(self.sigma)
    }

    pub fn build_domain(&self) -> Result<Domain> {
        Domain::new(self.domain.clone(), self.grid_resolution)
    }

    pub fn homotopy_settings(&self) -> HomotopySettings {
        HomotopySettings {
            t_nodes: self.homotopy.t_nodes,
            support_fraction: self.homotopy.support_fraction,
            ball_t_nodes: self.homotopy.ball_t_nodes,
            ball_psi_resolution: self.homotopy.ball_psi_resolution,
            ball_resolution: self.ball_resolution,
        }
    }

    /// Same configuration with grid and ball resolutions doubled.
    pub fn refined(&self) -> RunConfig {
        RunConfig {
            grid_resolution: 2 * self.grid_resolution,
            ball_resolution: 2 * self.ball_resolution,
            ..self.clone()
        }
    }

    /// Every violated constraint, or `Ok`.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                errs.push(msg);
            }
        };
        let domain = Domain::new(self.domain.clone(), self.grid_resolution.max(1));
        if let Err(e) = &domain {
            need(false, format!("domain: {e}"));
        }
        need(self.grid_resolution >= 2, format!("grid_resolution must be ≥ 2, got {}", self.grid_resolution));
        need(self.ball_resolution >= 2, format!("ball_resolution must be ≥ 2, got {}", self.ball_resolution));
        need(self.ball_count >= 1, "ball_count must be positive".into());
        need(self.sigma > 1.0, format!("sigma must exceed 1, got {}", self.sigma));
        if let Some(rho) = self.rho {
            need(rho > 1.0, format!("rho must exceed 1, got {rho}"));
        }
        need(self.k > 0.0 && self.k < 1.0, format!("k must lie in (0, 1), got {}", self.k));
        need(self.homotopy.t_nodes >= 1, "homotopy.t_nodes must be positive".into());
        need(self.homotopy.ball_t_nodes >= 1, "homotopy.ball_t_nodes must be positive".into());
        need(self.homotopy.ball_psi_resolution >= 2, "homotopy.ball_psi_resolution must be ≥ 2".into());
        let sf = self.homotopy.support_fraction;
        need(sf > 0.0 && sf < 1.0, format!("homotopy.support_fraction must lie in (0, 1), got {sf}"));
        need(self.t >= 1.0, format!("t must be ≥ 1, got {}", self.t));
        need(self.sobolev_t >= 1.0, format!("sobolev_t must be ≥ 1, got {}", self.sobolev_t));
        for (key, spec) in [
            ("phi", &self.phi),
            ("oscillation_lower.psi", &self.oscillation_lower.psi),
            ("conjugate.phi", &self.conjugate.phi),
            ("weighted_lipschitz.phi", &self.weighted_lipschitz.phi),
            ("norm_comparison.phi", &self.norm_comparison.phi),
        ] {
            if let Err(e) = YoungFunction::parse(spec) {
                need(false, format!("{key}: {e}"));
            }
        }
        let g = &self.g_class;
        need(g.p >= 1.0 && g.q > g.p, format!("g_class needs 1 ≤ p < q, got p={}, q={}", g.p, g.q));
        need(g.c >= 1.0, format!("g_class.c must be ≥ 1, got {}", g.c));
        need(g.g.is_some() == g.h.is_some(), "g_class.g and g_class.h must be given together".into());
        need(!self.oscillation_lower.a.is_empty(), "oscillation_lower.a must not be empty".into());
        need(self.oscillation_lower.a.iter().all(|a| *a > 0.0), "oscillation_lower.a must be positive".into());
        need(self.conjugate.p >= 1.0 && self.conjugate.q > 1.0, "conjugate needs p ≥ 1 and q > 1".into());
        need(self.conjugate.a >= 1.0, format!("conjugate.a must be ≥ 1, got {}", self.conjugate.a));
        let w = &self.weighted_lipschitz;
        need(w.alpha > 1.0, format!("weighted_lipschitz.alpha must exceed 1, got {}", w.alpha));
        need(w.p > 0.0 && w.q > 0.0 && w.s >= 1.0, "weighted_lipschitz needs p, q > 0 and s ≥ 1".into());
        need(self.norm_comparison.p >= 1.0, "norm_comparison.p must be ≥ 1".into());
        need(self.norm_comparison.balls >= 1, "norm_comparison.balls must be positive".into());
        need(!self.weights.is_empty(), "weights must not be empty".into());
        for s in &self.weights {
            match s.parse::<WeightSpec>() {
                Ok(spec) => {
                    if let Ok(d) = &domain {
                        if let Err(e) = Weight::new(spec, d) {
                            need(false, format!("weight `{s}`: {e}"));
                        }
                    }
                }
                Err(e) => need(false, format!("weight `{s}`: {e}")),
            }
        }
        if let Ok(d) = &domain {
            let mut seen = std::collections::BTreeSet::new();
            for item in &self.corpus {
                need(seen.insert(&item.id), format!("corpus id `{}` is repeated", item.id));
                for spec in std::iter::once(&item.form).chain(&item.partner) {
                    if let Err(e) = build_form(spec, d) {
                        need(false, format!("corpus entry `{}`: {e}", item.id));
                    }
                }
            }
        }
        for v in &self.verifiers {
            need(crate::verify::VERIFIER_IDS.contains(&v.as_str()), format!("unknown verifier `{v}`"));
        }
        need(self.decomposition_tolerance > 0.0, "decomposition_tolerance must be positive".into());
        need(self.stability_tolerance > 0.0, "stability_tolerance must be positive".into());
        need(self.proxy_tolerance > 0.0, "proxy_tolerance must be positive".into());
        need(self.proxy_max_intervals >= 4, "proxy_max_intervals must be ≥ 4".into());
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Corpus items, falling back to the built-in list.
    pub fn corpus_items(&self) -> Vec<CorpusItem> {
        if !self.corpus.is_empty() {
            return self.corpus.clone();
        }
        let n = self.dims();
        default_specs(n)
            .into_iter()
            .map(|(id, form)| CorpusItem {
                id: id.to_string(),
                form,
                partner: (id == "conjugate_pair").then(|| "form:2:2*x1*x2".to_string()),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.corpus_items().len(), 12);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let c = RunConfig::from_toml("grid_resolution = 32\n[weighted_lipschitz]\np = 2.0\n").unwrap();
        assert_eq!(c.grid_resolution, 32);
        assert_eq!(c.weighted_lipschitz.p, 2.0);
        assert_eq!(c.weighted_lipschitz.q, 1.5);
    }

    #[test]
    fn every_violation_is_listed() {
        let text = "sigma = 0.5\nk = 2.0\nphi = \"power:0.5\"\nweights = [\"const:-1\"]\nverifiers = [\"nope\"]\n\
                    [[corpus]]\nid = \"a\"\nform = \"form:1:x1\"\n";
        match RunConfig::from_toml(text) {
            Err(Error::Config(errs)) => {
                assert_eq!(errs.len(), 6, "{errs:#?}");
                for key in ["sigma", "k ", "phi", "weight", "verifier", "corpus entry"] {
                    assert!(errs.iter().any(|e| e.contains(key)), "{key} missing from {errs:#?}");
                }
            }
            other => panic!("expected configuration errors, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml("grid_resoluton = 3"), Err(Error::Config(_))));
    }

    #[test]
    fn refined_doubles_resolutions() {
        let c = RunConfig::default().refined();
        assert_eq!((c.grid_resolution, c.ball_resolution), (202, 32));
    }
}
