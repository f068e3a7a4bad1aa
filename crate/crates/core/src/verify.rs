//! Empirical verifiers for the norm inequalities. Each verifier evaluates
//! both sides on every admitted corpus entry and reports the largest ratio
//! as an empirical lower bound on the best constant.

use std::cell::{OnceCell, RefCell};
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use crate::config::RunConfig;
use crate::corpus::{build_form, is_closed, CorpusEntry, Smoothness, Tags};
use crate::domain::{sample_balls, Ball, Domain, Shape};
use crate::error::{Error, Result};
use crate::exterior::modulus_of;
use crate::form::DifferentialForm;
use crate::homotopy::{closed_part, decomposition_residual, HomotopyOperator, HomotopySettings};
use crate::norms::{check_wrh, luxemburg_or_infinite, BallOscillations, OscillationKind, Samples};
use crate::proxy::{chebyshev_proxy, ProxyReport};
use crate::report::{flags, EntryResult, Exclusion, VerificationReport};
use crate::weights::{check_a_class, check_phi_dominated, Weight};
use crate::young::{check_g_class, GWitness, YoungFunction};

pub const T_BOUNDEDNESS: &str = "t_boundedness";
pub const CLOSED_PART_BOUNDEDNESS: &str = "closed_part_boundedness";
pub const SOBOLEV_POINCARE: &str = "sobolev_poincare";
pub const OSCILLATION_LOWER_BOUND: &str = "oscillation_lower_bound";
pub const LIPSCHITZ_OF_HOMOTOPY: &str = "lipschitz_of_homotopy";
pub const BMO_OF_HOMOTOPY: &str = "bmo_of_homotopy";
pub const BMO_BELOW_LIPSCHITZ: &str = "bmo_below_lipschitz";
pub const CONJUGATE_BMO: &str = "conjugate_bmo";
pub const WEIGHTED_NORM_COMPARISON: &str = "weighted_norm_comparison";
pub const WEIGHTED_LIPSCHITZ: &str = "weighted_lipschitz";

pub const VERIFIER_IDS: [&str; 10] = [
    T_BOUNDEDNESS,
    CLOSED_PART_BOUNDEDNESS,
    SOBOLEV_POINCARE,
    OSCILLATION_LOWER_BOUND,
    LIPSCHITZ_OF_HOMOTOPY,
    BMO_OF_HOMOTOPY,
    BMO_BELOW_LIPSCHITZ,
    CONJUGATE_BMO,
    WEIGHTED_NORM_COMPARISON,
    WEIGHTED_LIPSCHITZ,
];

/// Relative size below which a norm counts as zero.
const ZERO_RELATIVE: f64 = 1e-10;
/// Additive slack in the comparisons with an explicit constant.
const EXPLICIT_SLACK: f64 = 1e-9;
const COMPARISON_SLACK: f64 = 1e-8;

/// `q(n − p) < np`.
pub fn bmo_gate(n: usize, p: f64, q: f64) -> bool {
    let n = n as f64;
    q * (n - p) < n * p
}

/// `1 < t < n`.
pub fn sobolev_gate(n: usize, t: f64) -> bool {
    1.0 < t && t < n as f64
}

/// `1/p + 1/q = 1`.
pub fn conjugate_gate(p: f64, q: f64) -> bool {
    (1.0 / p + 1.0 / q - 1.0).abs() <= 1e-12
}

/// `αp − p − αq > 0`; returns the A-class exponents `(β, γ)`.
pub fn weighted_lipschitz_gate(p: f64, q: f64, alpha: f64) -> Option<(f64, f64)> {
    let d = alpha * p - p - alpha * q;
    (d > 0.0 && alpha > 1.0).then(|| (alpha * q / d, alpha * q / p))
}

/// `β = 1 + 1/n − p/(nq)`.
pub fn conjugate_beta(n: usize, p: f64, q: f64) -> f64 {
    let n = n as f64;
    1.0 + 1.0 / n - p / (n * q)
}

fn is_zero(v: f64, scale: f64) -> bool {
    v == 0.0 || v <= ZERO_RELATIVE * scale
}

/// `Tu`, tabulated, with the data derived from it.
struct Homotopy {
    tu: DifferentialForm,
    /// `d(Tu)` on `Ω`.
    dtu: DifferentialForm,
    proxy: ProxyReport,
}

struct Prepared {
    entry: CorpusEntry,
    homotopy: OnceCell<Option<Homotopy>>,
    u_omega: OnceCell<DifferentialForm>,
    /// `|w − w_B|` at the nodes of every family ball, keyed by what `w` is.
    residuals: RefCell<HashMap<&'static str, Rc<Vec<Vec<f64>>>>>,
}

/// Corpus, ball family and cached intermediate quantities for one
/// configuration.
pub struct Harness {
    config: RunConfig,
    domain: Domain,
    settings: HomotopySettings,
    balls: Vec<Ball>,
    regions: Vec<Domain>,
    entries: Vec<Prepared>,
    excluded: Vec<Exclusion>,
    weights: Vec<Weight>,
}

impl Harness {
    /// Build the corpus and admit every entry whose decomposition residual
    /// is within tolerance.
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let domain = config.build_domain()?;
        let settings = config.homotopy_settings();
        let mut entries = Vec::new();
        let mut excluded = Vec::new();
        for item in config.corpus_items() {
            let form = build_form(&item.form, &domain)?;
            let partner = item.partner.as_deref().map(|p| build_form(p, &domain)).transpose()?;
            let name = item.form.split(':').next().unwrap_or("");
            let tags = Tags {
                degree: form.degree(),
                closed: is_closed(&form)?,
                smoothness: if name == "radial_power" { Smoothness::Singular } else { Smoothness::Smooth },
            };
            let entry = CorpusEntry { id: item.id.clone(), form, partner, tags, provenance: item.form.clone() };
            let l = entry.form.degree();
            if l >= 1 && l < domain.dims() {
                let r = decomposition_residual(&entry.form, &settings, 7)?;
                if !(r <= config.decomposition_tolerance) {
                    excluded.push(Exclusion {
                        id: item.id,
                        reason: format!("decomposition residual {r:.3e} exceeds {:.1e}", config.decomposition_tolerance),
                    });
                    continue;
                }
            }
            entries.push(Prepared {
                entry,
                homotopy: OnceCell::new(),
                u_omega: OnceCell::new(),
                residuals: RefCell::new(HashMap::new()),
            });
        }
        let balls = sample_balls(&domain, config.sigma, config.ball_count)?;
        let regions = balls.iter().map(|b| b.to_domain(config.ball_resolution)).collect::<Result<Vec<_>>>()?;
        let weights = config
            .weights
            .iter()
            .map(|s| Weight::new(s.parse()?, &domain))
            .collect::<Result<Vec<_>>>()?;
        Ok(Harness { config: config.clone(), domain, settings, balls, regions, entries, excluded, weights })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn entries(&self) -> impl Iterator<Item = &CorpusEntry> {
        self.entries.iter().map(|p| &p.entry)
    }

    pub fn excluded(&self) -> &[Exclusion] {
        &self.excluded
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    /// Run one verifier by id.
    pub fn run(&self, id: &str) -> Result<VerificationReport> {
        match id {
            T_BOUNDEDNESS => self.t_boundedness(),
            CLOSED_PART_BOUNDEDNESS => self.closed_part_boundedness(),
            SOBOLEV_POINCARE => self.sobolev_poincare(),
            OSCILLATION_LOWER_BOUND => self.oscillation_lower_bound(),
            LIPSCHITZ_OF_HOMOTOPY => self.lipschitz_of_homotopy(),
            BMO_OF_HOMOTOPY => self.bmo_of_homotopy(),
            BMO_BELOW_LIPSCHITZ => self.bmo_below_lipschitz(),
            CONJUGATE_BMO => self.conjugate_bmo(),
            WEIGHTED_NORM_COMPARISON => self.weighted_norm_comparison(),
            WEIGHTED_LIPSCHITZ => self.weighted_lipschitz(),
            _ => Err(Error::Config(vec![format!("unknown verifier `{id}`")])),
        }
    }

    fn report(&self, id: &str, title: &str) -> VerificationReport {
        let mut r = VerificationReport::new(id, title);
        let c = &self.config;
        r.param("domain", &c.domain);
        r.param("grid_resolution", c.grid_resolution);
        r.param("ball_resolution", c.ball_resolution);
        r.param("ball_count", self.balls.len());
        r.param("sigma", c.sigma);
        r
    }

    fn homotopy<'a>(&self, p: &'a Prepared) -> Result<Option<&'a Homotopy>> {
        if p.homotopy.get().is_none() {
            let u = &p.entry.form;
            let h = if u.degree() == 0 {
                None
            } else {
                let op = Arc::new(HomotopyOperator::for_domain(&self.domain, &self.settings)?);
                let raw = op.apply(u)?;
                let (tu, proxy) = chebyshev_proxy(&raw, self.config.proxy_tolerance, self.config.proxy_max_intervals);
                // d(Tu) = m·u − T(du), and du = 0 in top degree.
                let dtu = if u.degree() == u.dims() { u.scaled(op.mass()) } else { tu.exterior_derivative()? };
                Some(Homotopy { tu, dtu, proxy })
            };
            let _ = p.homotopy.set(h);
        }
        Ok(p.homotopy.get().and_then(Option::as_ref))
    }

    /// `u_Ω`: the mean for 0-forms, otherwise `d(Tu)`.
    fn u_omega<'a>(&self, p: &'a Prepared) -> Result<&'a DifferentialForm> {
        if p.u_omega.get().is_none() {
            let v = match self.homotopy(p)? {
                Some(h) => h.dtu.clone(),
                None => closed_part(&p.entry.form, &self.settings, None)?,
            };
            let _ = p.u_omega.set(v);
        }
        Ok(p.u_omega.get().expect("set above"))
    }

    /// `|w − w_B|` on each family ball, where `dw` stands in for `d w`.
    fn ball_residuals(
        &self,
        p: &Prepared,
        key: &'static str,
        w: &DifferentialForm,
        dw: Option<&DifferentialForm>,
    ) -> Result<Rc<Vec<Vec<f64>>>> {
        if let Some(r) = p.residuals.borrow().get(key) {
            return Ok(r.clone());
        }
        let r = Rc::new(residuals_on(w, dw, &self.balls, &self.regions, &self.settings)?);
        p.residuals.borrow_mut().insert(key, r.clone());
        Ok(r)
    }

    fn oscillations(
        &self,
        residuals: &[Vec<f64>],
        phi: &YoungFunction,
        weight: Option<&Weight>,
    ) -> Result<BallOscillations> {
        oscillations_on(residuals, &self.balls, &self.regions, phi, weight)
    }

    fn phi(&self, spec: &str, report: &mut VerificationReport, key: &str) -> Result<YoungFunction> {
        let phi = YoungFunction::parse(spec)?;
        let check = phi.check();
        report.param(key, spec);
        report.check(&format!("{key} is a Young function"), check.passed(), check.failures.join("; "));
        Ok(phi)
    }

    fn g_class(&self, phi: &YoungFunction, report: &mut VerificationReport) -> Result<(f64, f64)> {
        let g = &self.config.g_class;
        let witness = match (&g.g, &g.h) {
            (Some(gs), Some(hs)) => Some(GWitness::new(g.p, g.q, g.c, gs, hs)?),
            _ => phi.default_witness(g.p, g.q),
        };
        report.param("g_class", serde_json::json!({"p": g.p, "q": g.q, "c": g.c}));
        match witness {
            Some(w) => {
                let r = check_g_class(phi, &w)?;
                report.check("G(p, q, c) membership", r.member(), r.failures.join("; "));
            }
            None => {
                report.check("G(p, q, c) membership", false, format!("no witness for {phi}; supply g_class.g and g_class.h"));
            }
        }
        Ok((g.p, g.q))
    }

    pub fn t_boundedness(&self) -> Result<VerificationReport> {
        let t = self.config.t;
        let mut r = self.report(T_BOUNDEDNESS, "‖Tu‖_t ≤ C|Ω|diam(Ω)‖u‖_t");
        r.param("t", t);
        r.check("1 < t < ∞", t > 1.0 && t.is_finite(), format!("t = {t}"));
        if r.admitted() {
            let scale = self.domain.volume() * self.domain.diam();
            for p in &self.entries {
                let Some(h) = self.homotopy(p)? else { continue };
                let lhs = Samples::modulus(&h.tu, &self.domain, None)?.lp(t);
                let un = Samples::modulus(&p.entry.form, &self.domain, None)?.lp(t);
                let mut e = EntryResult::new(&p.entry.id, lhs, scale * un);
                proxy_flag(&mut e, h);
                if un == 0.0 {
                    e.flag(flags::DEGENERATE);
                }
                r.entries.push(e);
            }
        }
        r.finish();
        Ok(r)
    }

    pub fn closed_part_boundedness(&self) -> Result<VerificationReport> {
        let t = self.config.t;
        let mut r = self.report(CLOSED_PART_BOUNDEDNESS, "‖u_Ω‖_t ≤ C|Ω|‖u‖_t");
        r.param("t", t);
        r.check("1 < t < ∞", t > 1.0 && t.is_finite(), format!("t = {t}"));
        if r.admitted() {
            for p in &self.entries {
                let lhs = Samples::modulus(self.u_omega(p)?, &self.domain, None)?.lp(t);
                let un = Samples::modulus(&p.entry.form, &self.domain, None)?.lp(t);
                let mut e = EntryResult::new(&p.entry.id, lhs, self.domain.volume() * un);
                if un == 0.0 {
                    e.flag(flags::DEGENERATE);
                }
                r.entries.push(e);
            }
        }
        r.finish();
        Ok(r)
    }

    pub fn sobolev_poincare(&self) -> Result<VerificationReport> {
        let n = self.domain.dims();
        let t = self.config.sobolev_t;
        let mut r = self.report(SOBOLEV_POINCARE, "‖u − u_Ω‖_{nt/(n−t)} ≤ C‖du‖_t");
        r.param("t", t);
        r.check("1 < t < n", sobolev_gate(n, t), format!("t = {t}, n = {n}"));
        if r.admitted() {
            let s = n as f64 * t / (n as f64 - t);
            r.param("lhs_exponent", s);
            for p in &self.entries {
                let u = &p.entry.form;
                if u.degree() == n {
                    continue;
                }
                let diff = u.sub(self.u_omega(p)?)?;
                let lhs = Samples::modulus(&diff, &self.domain, None)?.lp(s);
                let rhs = Samples::modulus(&u.exterior_derivative()?, &self.domain, None)?.lp(t);
                let scale = Samples::modulus(u, &self.domain, None)?.lp(t);
                let mut e = EntryResult::new(&p.entry.id, lhs, rhs);
                if is_zero(rhs, scale) {
                    e.flag(flags::DEGENERATE);
                }
                r.entries.push(e);
            }
        }
        r.finish();
        Ok(r)
    }

    pub fn oscillation_lower_bound(&self) -> Result<VerificationReport> {
        let cfg = &self.config.oscillation_lower;
        let mut r = self.report(OSCILLATION_LOWER_BOUND, "∫ψ(a|u|)dμ ≤ C∫ψ(2a|u − u_Ω|)dμ");
        let psi = self.phi(&cfg.psi, &mut r, "psi")?;
        r.param("a", &cfg.a);
        r.param("weights", &self.config.weights);
        r.param("zero_threshold", cfg.zero_threshold);
        if r.admitted() {
            for p in &self.entries {
                let u = &p.entry.form;
                let diff = u.sub(self.u_omega(p)?)?;
                let plain = Samples::modulus(u, &self.domain, None)?;
                let osc = Samples::modulus(&diff, &self.domain, None)?;
                let vanishes = osc.max_abs() <= cfg.zero_threshold * plain.max_abs();
                for w in &self.weights {
                    let plain = Samples::modulus(u, &self.domain, Some(w))?;
                    let osc = Samples::modulus(&diff, &self.domain, Some(w))?;
                    for &a in &cfg.a {
                        let lhs = plain.scaled(a).orlicz_integral(&psi, 1.0);
                        let rhs = osc.scaled(2.0 * a).orlicz_integral(&psi, 1.0);
                        let mut e = EntryResult::new(format!("{}@{w}@a={a}", p.entry.id), lhs, rhs);
                        if vanishes {
                            e.flag(flags::PRECONDITION);
                        }
                        r.entries.push(e);
                    }
                }
            }
        }
        r.finish();
        Ok(r)
    }

    fn homotopy_oscillations(&self, p: &Prepared, h: &Homotopy, phi: &YoungFunction) -> Result<BallOscillations> {
        let res = self.ball_residuals(p, "Tu", &h.tu, Some(&h.dtu))?;
        self.oscillations(&res, phi, None)
    }

    pub fn lipschitz_of_homotopy(&self) -> Result<VerificationReport> {
        let k = self.config.k;
        let rho = self.config.rho();
        let mut r = self.report(LIPSCHITZ_OF_HOMOTOPY, "‖Tu‖_{φ loc Lip_k} ≤ C‖u‖_φ");
        r.param("k", k);
        r.param("rho", rho);
        let phi = self.phi(&self.config.phi, &mut r, "phi")?;
        let (gp, gq) = self.g_class(&phi, &mut r)?;
        r.check("ρ = σ", rho == self.config.sigma, format!("ρ = {rho}, σ = {}", self.config.sigma));
        if r.admitted() {
            for p in &self.entries {
                let Some(h) = self.homotopy(p)? else { continue };
                let u = &p.entry.form;
                let un = Samples::modulus(u, &self.domain, None)?;
                let (rhs, inf) = luxemburg_or_infinite(&un, &phi)?;
                let osc = self.homotopy_oscillations(p, h, &phi)?;
                let norm = osc.norm(OscillationKind::Lipschitz { k });
                let mut e = EntryResult::new(&p.entry.id, norm.value, rhs);
                e.argmax = Some(norm.argmax);
                proxy_flag(&mut e, h);
                if inf || !osc.infinite.is_empty() {
                    e.flag(flags::INFINITE);
                }
                if rhs == 0.0 {
                    e.flag(flags::DEGENERATE);
                } else {
                    let wrh = check_wrh(u, gq, gp, rho, &self.balls, self.config.ball_resolution)?;
                    if wrh.degenerate.is_empty() && wrh.constant.is_finite() {
                        e.flag(flags::WRH_VERIFIED);
                    } else {
                        e.flag(flags::PRECONDITION);
                    }
                }
                r.entries.push(e);
            }
        }
        r.finish();
        Ok(r)
    }

    pub fn bmo_of_homotopy(&self) -> Result<VerificationReport> {
        let n = self.domain.dims();
        let mut r = self.report(BMO_OF_HOMOTOPY, "‖Tu‖_{φ*} ≤ C‖u‖_φ");
        let phi = self.phi(&self.config.phi, &mut r, "phi")?;
        let (gp, gq) = self.g_class(&phi, &mut r)?;
        r.check("q(n − p) < np", bmo_gate(n, gp, gq), format!("q(n − p) = {}, np = {}", gq * (n as f64 - gp), n as f64 * gp));
        if r.admitted() {
            for p in &self.entries {
                let Some(h) = self.homotopy(p)? else { continue };
                let un = Samples::modulus(&p.entry.form, &self.domain, None)?;
                let (rhs, inf) = luxemburg_or_infinite(&un, &phi)?;
                let osc = self.homotopy_oscillations(p, h, &phi)?;
                let norm = osc.norm(OscillationKind::Bmo);
                let mut e = EntryResult::new(&p.entry.id, norm.value, rhs);
                e.argmax = Some(norm.argmax);
                proxy_flag(&mut e, h);
                if inf || !osc.infinite.is_empty() {
                    e.flag(flags::INFINITE);
                }
                if rhs == 0.0 {
                    e.flag(flags::DEGENERATE);
                }
                r.entries.push(e);
            }
        }
        r.finish();
        Ok(r)
    }

    /// BMO ≤ |Ω|^{k/n}·Lipschitz per entry, on `Ω` and on `Ω` scaled by 2.
    pub fn bmo_below_lipschitz(&self) -> Result<VerificationReport> {
        let n = self.domain.dims();
        let k = self.config.k;
        let mut r = self.report(BMO_BELOW_LIPSCHITZ, "‖u‖_{φ*} ≤ |Ω|^{k/n}‖u‖_{φ loc Lip_k}");
        r.param("k", k);
        let phi = self.phi(&self.config.phi, &mut r, "phi")?;
        if !r.admitted() {
            r.finish();
            return Ok(r);
        }
        let factor = self.domain.volume().powf(k / n as f64);
        r.param("volume_factor", factor);
        for p in &self.entries {
            let u = &p.entry.form;
            let du = (u.degree() < n).then(|| u.exterior_derivative()).transpose()?;
            let res = self.ball_residuals(p, "u", u, du.as_ref())?;
            let osc = self.oscillations(&res, &phi, None)?;
            r.entries.push(bmo_lip_entry(&p.entry.id, &osc, k, factor));
        }

        let scaled = scaled_domain(&self.domain, 2.0)?;
        let scaled_factor = scaled.volume().powf(k / n as f64);
        let expected = 2f64.powf(k) * factor;
        r.param("scaled_volume_factor", scaled_factor);
        r.check(
            "scaled volume factor is 2^k |Ω|^{k/n}",
            ((scaled_factor - expected) / expected).abs() <= 1e-6,
            format!("{scaled_factor} vs {expected}"),
        );
        let balls = sample_balls(&scaled, self.config.sigma, self.config.ball_count)?;
        let regions = balls.iter().map(|b| b.to_domain(self.config.ball_resolution)).collect::<Result<Vec<_>>>()?;
        for item in self.config.corpus_items() {
            if !self.entries.iter().any(|p| p.entry.id == item.id) {
                continue;
            }
            let u = build_form(&item.form, &scaled)?;
            let du = (u.degree() < n).then(|| u.exterior_derivative()).transpose()?;
            let res = residuals_on(&u, du.as_ref(), &balls, &regions, &self.settings)?;
            let osc = oscillations_on(&res, &balls, &regions, &phi, None)?;
            r.entries.push(bmo_lip_entry(&format!("scaled:{}", item.id), &osc, k, scaled_factor));
        }
        r.finish();
        Ok(r)
    }

    pub fn conjugate_bmo(&self) -> Result<VerificationReport> {
        let n = self.domain.dims();
        let c = &self.config.conjugate;
        let mut r = self.report(CONJUGATE_BMO, "‖u‖_{φ*} ≤ C|B|^β‖v‖_{φ*}");
        r.param("p", c.p);
        r.param("q", c.q);
        r.param("a", c.a);
        let phi = self.phi(&c.phi, &mut r, "phi")?;
        r.check("1/p + 1/q = 1", conjugate_gate(c.p, c.q), format!("1/p + 1/q = {}", 1.0 / c.p + 1.0 / c.q));
        if !r.admitted() {
            r.finish();
            return Ok(r);
        }
        let beta = conjugate_beta(n, c.p, c.q);
        r.param("beta", beta);
        for p in &self.entries {
            let Some(v) = &p.entry.partner else { continue };
            match self.conjugate_pair(p, v, &phi, beta, &mut r) {
                Ok(()) => {}
                Err(Error::RejectedPair(msg)) => {
                    r.check(&format!("{} structural residual", p.entry.id), false, msg);
                }
                Err(e) => return Err(e),
            }
        }
        r.finish();
        Ok(r)
    }

    fn conjugate_pair(
        &self,
        p: &Prepared,
        v: &DifferentialForm,
        phi: &YoungFunction,
        beta: f64,
        r: &mut VerificationReport,
    ) -> Result<()> {
        let c = &self.config.conjugate;
        let u = &p.entry.form;
        let structure = check_conjugate_structure(u, v, c.p, c.q, c.a, c.structural_tolerance)?;
        r.check(
            &format!("{} structural residual", p.entry.id),
            true,
            format!("max |A(x, du) − d⋆v| = {:.3e}", structure.residual),
        );
        r.check(&format!("{} growth conditions", p.entry.id), structure.growth, "|A| ≤ a|ξ|^{q−1}, ⟨A, ξ⟩ ≥ |ξ|^q");
        if !structure.pointwise {
            r.fail(format!("{}: |du|^q ≤ |d⋆v|^p fails at {:?}", p.entry.id, structure.pointwise_violation));
        }
        // v_B = v in top degree, so the oscillation of v is measured on ⋆v.
        let star = v.hodge_star();
        let du = (u.degree() < u.dims()).then(|| u.exterior_derivative()).transpose()?;
        let dstar = (star.degree() < star.dims()).then(|| star.exterior_derivative()).transpose()?;
        let ru = self.ball_residuals(p, "u", u, du.as_ref())?;
        let rv = self.ball_residuals(p, "partner", &star, dstar.as_ref())?;
        let bu = self.oscillations(&ru, phi, None)?.norm(OscillationKind::Bmo);
        let bv = self.oscillations(&rv, phi, None)?.norm(OscillationKind::Bmo);
        let scale = Samples::modulus(u, &self.domain, None)?.max_abs().max(Samples::modulus(v, &self.domain, None)?.max_abs());
        let degenerate = is_zero(bu.value, scale) && is_zero(bv.value, scale);
        for (i, b) in self.balls.iter().enumerate() {
            let mut e = EntryResult::new(format!("{}@ball{i}", p.entry.id), bu.value, b.volume().powf(beta) * bv.value);
            e.argmax = Some(b.clone());
            if degenerate {
                e.flag(flags::DEGENERATE);
            }
            r.entries.push(e);
        }
        Ok(())
    }

    pub fn weighted_norm_comparison(&self) -> Result<VerificationReport> {
        let c = &self.config.norm_comparison;
        let mut r = self.report(WEIGHTED_NORM_COMPARISON, "‖u‖_{φ,ω,B} ≤ ‖u‖_{p,ω,B}");
        r.param("p", c.p);
        r.param("weights", &self.config.weights);
        let phi = self.phi(&c.phi, &mut r, "phi")?;
        let dom = check_phi_dominated(&phi, c.p)?;
        r.check(
            "φ(t) ≤ t^p",
            dom.passed,
            dom.violation.map_or_else(String::new, |t| format!("φ({t}) > {t}^p")),
        );
        if r.admitted() {
            let balls = sample_balls(&self.domain, self.config.sigma, c.balls)?;
            r.param("comparison_balls", balls.len());
            let regions = balls.iter().map(|b| b.to_domain(self.config.ball_resolution)).collect::<Result<Vec<_>>>()?;
            for p in &self.entries {
                for w in &self.weights {
                    let mut worst: Option<(f64, f64, usize)> = None;
                    let mut violated = false;
                    for (i, region) in regions.iter().enumerate() {
                        let s = Samples::modulus(&p.entry.form, region, Some(w))?;
                        let lhs = s.luxemburg(&phi)?;
                        let rhs = s.lp(c.p);
                        violated |= lhs > rhs + COMPARISON_SLACK;
                        if worst.is_none_or(|(l, rr, _)| lhs - rhs > l - rr) {
                            worst = Some((lhs, rhs, i));
                        }
                    }
                    let (lhs, rhs, i) = worst.expect("family is non-empty");
                    let mut e = EntryResult::new(format!("{}@{w}", p.entry.id), lhs, rhs);
                    e.argmax = Some(balls[i].clone());
                    if violated {
                        e.flag(flags::VIOLATION);
                    }
                    if rhs == 0.0 {
                        e.flag(flags::DEGENERATE);
                    }
                    r.entries.push(e);
                }
            }
        }
        r.finish();
        Ok(r)
    }

    pub fn weighted_lipschitz(&self) -> Result<VerificationReport> {
        let c = &self.config.weighted_lipschitz;
        let k = self.config.k;
        let mut r = self.report(WEIGHTED_LIPSCHITZ, "‖u‖_{φ loc Lip_k,ω} ≤ C‖u‖_{p,ω}");
        r.param("p", c.p);
        r.param("q", c.q);
        r.param("alpha", c.alpha);
        r.param("s", c.s);
        r.param("k", k);
        r.param("weights", &self.config.weights);
        let phi = self.phi(&c.phi, &mut r, "phi")?;
        let gate = weighted_lipschitz_gate(c.p, c.q, c.alpha);
        r.check(
            "αp − p − αq > 0",
            gate.is_some(),
            format!("αp − p − αq = {}, α = {}", c.alpha * c.p - c.p - c.alpha * c.q, c.alpha),
        );
        r.check("s < q", c.s < c.q, format!("s = {}, q = {}", c.s, c.q));
        let dom = check_phi_dominated(&phi, c.s)?;
        r.check("φ(t) ≤ t^s", dom.passed, dom.violation.map_or_else(String::new, |t| format!("φ({t}) > {t}^s")));
        let Some((beta, gamma)) = gate else {
            r.finish();
            return Ok(r);
        };
        r.param("beta", beta);
        r.param("gamma", gamma);
        for w in &self.weights {
            let a = check_a_class(w, c.alpha, beta, gamma, &self.balls, self.config.ball_resolution)?;
            r.check(&format!("{w} in A(α, β, γ)"), a.finite(), format!("empirical sup {}", a.sup));
        }
        if r.admitted() {
            for p in &self.entries {
                let u = &p.entry.form;
                if u.degree() == 0 {
                    continue;
                }
                let du = (u.degree() < u.dims()).then(|| u.exterior_derivative()).transpose()?;
                let res = self.ball_residuals(p, "u", u, du.as_ref())?;
                for w in &self.weights {
                    let osc = self.oscillations(&res, &phi, Some(w))?;
                    let norm = osc.norm(OscillationKind::Lipschitz { k });
                    let rhs = Samples::modulus(u, &self.domain, Some(w))?.lp(c.p);
                    let mut e = EntryResult::new(format!("{}@{w}", p.entry.id), norm.value, rhs);
                    e.argmax = Some(norm.argmax);
                    if !osc.infinite.is_empty() {
                        e.flag(flags::INFINITE);
                    }
                    if rhs == 0.0 {
                        e.flag(flags::DEGENERATE);
                    }
                    r.entries.push(e);
                }
            }
        }
        r.finish();
        Ok(r)
    }
}

fn proxy_flag(e: &mut EntryResult, h: &Homotopy) {
    if !h.proxy.converged {
        e.flag(&format!("proxy_error={:.1e}", h.proxy.error));
    }
}

fn bmo_lip_entry(id: &str, osc: &BallOscillations, k: f64, factor: f64) -> EntryResult {
    let bmo = osc.norm(OscillationKind::Bmo);
    let lip = osc.norm(OscillationKind::Lipschitz { k });
    let mut e = EntryResult::new(id, bmo.value, factor * lip.value);
    e.argmax = Some(bmo.argmax);
    if bmo.value > factor * lip.value + EXPLICIT_SLACK {
        e.flag(flags::VIOLATION);
    }
    if !osc.infinite.is_empty() {
        e.flag(flags::INFINITE);
    }
    if lip.value == 0.0 {
        e.flag(flags::DEGENERATE);
    }
    e
}

/// Copy of `domain` scaled by `factor` about its lower corner (boxes) or
/// centre (balls).
pub fn scaled_domain(domain: &Domain, factor: f64) -> Result<Domain> {
    let shape = match domain.shape() {
        Shape::Box { lower, upper } => Shape::Box {
            lower: lower.clone(),
            upper: lower.iter().zip(upper).map(|(a, b)| a + factor * (b - a)).collect(),
        },
        Shape::Ball { center, radius } => Shape::Ball { center: center.clone(), radius: factor * radius },
    };
    Domain::new(shape, domain.resolution())
}

/// `|w − w_B|` at the nodes of each region, with `w_B` the ball mean in
/// degree 0, `w` itself in top degree, and `w − T_B(dw)` otherwise.
fn residuals_on(
    w: &DifferentialForm,
    dw: Option<&DifferentialForm>,
    balls: &[Ball],
    regions: &[Domain],
    settings: &HomotopySettings,
) -> Result<Vec<Vec<f64>>> {
    let n = w.dims();
    let mut buf = vec![0.0; w.len()];
    let mut out = Vec::with_capacity(balls.len());
    for (b, region) in balls.iter().zip(regions) {
        let rule = region.quadrature();
        let values = if w.degree() == n {
            vec![0.0; rule.len()]
        } else if w.degree() == 0 {
            let mut vals = Vec::with_capacity(rule.len());
            for (x, _) in rule.iter() {
                w.eval_into(x, &mut buf);
                vals.push(buf[0]);
            }
            let mean = rule.integrate_values(&vals) / rule.total_weight();
            vals.iter().map(|v| (v - mean).abs()).collect()
        } else {
            let dw = dw.ok_or_else(|| crate::error::invalid("ball closed part needs the exterior derivative"))?;
            let op = Arc::new(HomotopyOperator::for_ball(b, settings)?);
            let t_dw = op.apply(&dw.restricted_to(region.clone())?)?;
            // w − w_B = T_B(dw)
            rule.iter()
                .map(|(x, _)| {
                    t_dw.eval_into(x, &mut buf);
                    modulus_of(&buf)
                })
                .collect()
        };
        out.push(values);
    }
    Ok(out)
}

fn oscillations_on(
    residuals: &[Vec<f64>],
    balls: &[Ball],
    regions: &[Domain],
    phi: &YoungFunction,
    weight: Option<&Weight>,
) -> Result<BallOscillations> {
    let mut values = Vec::with_capacity(balls.len());
    let mut infinite = Vec::new();
    for (i, (res, region)) in residuals.iter().zip(regions).enumerate() {
        let rule = region.quadrature();
        let weights = match weight {
            Some(w) => rule.iter().map(|(x, wt)| wt * w.eval(x)).collect(),
            None => rule.weights().to_vec(),
        };
        let (v, inf) = luxemburg_or_infinite(&Samples::new(res.clone(), weights)?, phi)?;
        if inf {
            infinite.push(i);
        }
        values.push(v);
    }
    Ok(BallOscillations { balls: balls.to_vec(), values, infinite })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateStructure {
    /// `max |A(x, du) − d⋆v|` on the test lattice.
    pub residual: f64,
    pub growth: bool,
    /// `|du|^q ≤ |d⋆v|^p` at every node of `Ω`.
    pub pointwise: bool,
    pub pointwise_violation: Option<Vec<f64>>,
}

/// Structural checks for a pair solving `A(x, du) = d⋆v` with
/// `A(x, ξ) = a|ξ|^{q−2}ξ`. A residual above `tolerance` rejects the pair.
pub fn check_conjugate_structure(
    u: &DifferentialForm,
    v: &DifferentialForm,
    p: f64,
    q: f64,
    a: f64,
    tolerance: f64,
) -> Result<ConjugateStructure> {
    if v.degree() != u.degree() + 2 {
        return Err(Error::RejectedPair(format!(
            "partner has degree {}, expected {} for a degree-{} form",
            v.degree(),
            u.degree() + 2,
            u.degree()
        )));
    }
    let du = u.exterior_derivative()?;
    let dsv = v.codifferential()?;
    // |⋆dv| read as |d(⋆v)|: dv vanishes in top degree.
    let dstar = v.hodge_star().exterior_derivative()?;
    let mut xi = vec![0.0; du.len()];
    let mut rhs = vec![0.0; du.len()];
    let mut residual = 0.0f64;
    let mut growth = true;
    for x in u.domain().test_points(21) {
        du.eval_into(&x, &mut xi);
        dsv.eval_into(&x, &mut rhs);
        let m = modulus_of(&xi);
        let f = a * m.powf(q - 2.0);
        let ax: Vec<f64> = xi.iter().map(|c| if m == 0.0 { 0.0 } else { f * c }).collect();
        let diff: Vec<f64> = ax.iter().zip(&rhs).map(|(s, t)| s - t).collect();
        residual = residual.max(modulus_of(&diff));
        let am = modulus_of(&ax);
        let inner: f64 = ax.iter().zip(&xi).map(|(s, t)| s * t).sum();
        let tol = 1e-12 * (1.0 + m.powf(q));
        growth &= am <= a * m.powf(q - 1.0) + tol && inner >= m.powf(q) - tol;
    }
    if !(residual <= tolerance) {
        return Err(Error::RejectedPair(format!("max |A(x, du) − d⋆v| = {residual:.3e} exceeds {tolerance:.1e}")));
    }
    let mut sv = vec![0.0; dstar.len()];
    let mut violation = None;
    for (x, _) in u.domain().quadrature().iter() {
        du.eval_into(x, &mut xi);
        dstar.eval_into(x, &mut sv);
        let l = modulus_of(&xi).powf(q);
        let r = modulus_of(&sv).powf(p);
        if l > r * (1.0 + 1e-10) + 1e-300 {
            violation = Some(x.to_vec());
            break;
        }
    }
    Ok(ConjugateStructure { residual, growth, pointwise: violation.is_none(), pointwise_violation: violation })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gates() {
        assert!(bmo_gate(2, 1.5, 3.0));
        assert!(!bmo_gate(3, 1.2, 4.0));
        assert!(sobolev_gate(2, 1.5));
        assert!(!sobolev_gate(2, 2.0));
        assert!(conjugate_gate(2.0, 2.0));
        assert!(!conjugate_gate(1.5, 2.0));
        let (b, g) = weighted_lipschitz_gate(4.0, 1.5, 2.0).unwrap();
        assert_eq!((b, g), (3.0, 0.75));
        assert!(weighted_lipschitz_gate(2.0, 1.5, 2.0).is_none());
        assert_eq!(conjugate_beta(2, 2.0, 2.0), 1.0);
    }

    #[test]
    fn harmonic_pair_structure() {
        let d = Domain::unit_cube(2, 16).unwrap();
        let u = DifferentialForm::parse(d.clone(), 0, &["x1^2 - x2^2"]).unwrap();
        let v = DifferentialForm::parse(d.clone(), 2, &["2*x1*x2"]).unwrap();
        let s = check_conjugate_structure(&u, &v, 2.0, 2.0, 1.0, 1e-4).unwrap();
        assert!(s.residual <= 1e-12 && s.growth && s.pointwise, "{s:?}");
        let w = DifferentialForm::parse(d, 2, &["x1*x2"]).unwrap();
        assert!(matches!(check_conjugate_structure(&u, &w, 2.0, 2.0, 1.0, 1e-4), Err(Error::RejectedPair(_))));
    }

    #[test]
    fn scaled_square() {
        let d = Domain::unit_cube(2, 8).unwrap();
        let s = scaled_domain(&d, 2.0).unwrap();
        assert!((s.volume() - 4.0).abs() < 1e-12);
    }
}
