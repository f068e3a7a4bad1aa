use formnorm::config::{CorpusItem, RunConfig};
use formnorm::corpus::build_form;
use formnorm::homotopy::HomotopyOperator;
use formnorm::norms::{oscillation_norm, OscillationNormSpec, Samples};
use formnorm::report::{flags, EntryResult, Status, VerificationReport};
use formnorm::suite::run_suite;
use formnorm::verify::*;
use formnorm::YoungFunction;

fn item(id: &str, form: &str) -> CorpusItem {
    CorpusItem { id: id.into(), form: form.into(), partner: None }
}

fn config(verifier: &str, corpus: Vec<CorpusItem>) -> RunConfig {
    RunConfig { ball_count: 6, stability: false, corpus, verifiers: vec![verifier.into()], ..RunConfig::default() }
}

fn run(c: &RunConfig) -> VerificationReport {
    Harness::new(c).unwrap().run(&c.verifiers[0]).unwrap()
}

fn entry<'a>(r: &'a VerificationReport, id: &str) -> &'a EntryResult {
    r.entries.iter().find(|e| e.id == id).unwrap_or_else(|| panic!("no entry {id} in {:?}", r.entries))
}

fn skipped(r: &VerificationReport, id: &str) -> bool {
    r.entries.iter().filter(|e| e.id.starts_with(id)).all(|e| !e.counts())
}

fn mass(c: &RunConfig) -> f64 {
    HomotopyOperator::for_domain(&c.build_domain().unwrap(), &c.homotopy_settings()).unwrap().mass()
}

#[test]
fn t_boundedness_of_dx1() {
    let c = config(T_BOUNDEDNESS, vec![item("zero", "zero:1"), item("dx1", "const:dx1")]);
    let r = run(&c);
    assert_eq!(r.status, Status::Pass);
    assert!(skipped(&r, "zero"));
    // Tu = m(x₁ − ½) for a bump centred on the centroid.
    let e = entry(&r, "dx1");
    let expected = mass(&c) / 12f64.sqrt();
    assert!((e.lhs - expected).abs() < 1e-6, "{} vs {expected}", e.lhs);
    assert!((e.rhs - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn closed_part_examples() {
    let c = config(
        CLOSED_PART_BOUNDEDNESS,
        vec![item("five", "poly:5"), item("x1", "poly:x1"), item("centred", "poly:x1 - 0.5")],
    );
    let r = run(&c);
    assert!((entry(&r, "five").ratio - 1.0).abs() < 1e-12);
    assert!((entry(&r, "x1").ratio - 0.5 * 3f64.sqrt()).abs() < 1e-9);
    assert!(entry(&r, "centred").lhs < 1e-12);
}

#[test]
fn sobolev_poincare_examples() {
    let c = config(SOBOLEV_POINCARE, vec![item("dx1", "const:dx1"), item("u", "form:1:x2;0"), item("2u", "form:1:2*x2;0")]);
    let r = run(&c);
    assert_eq!(r.status, Status::Pass);
    assert!(entry(&r, "dx1").has(flags::DEGENERATE));
    let (a, b) = (entry(&r, "u"), entry(&r, "2u"));
    assert!(a.ratio.is_finite() && a.ratio > 0.0);
    assert!((a.ratio - b.ratio).abs() <= 1e-6 * a.ratio);
    assert!((b.lhs - 2.0 * a.lhs).abs() <= 1e-9 * b.lhs);

    let rejected = run(&RunConfig { sobolev_t: 2.0, ..c });
    assert_eq!(rejected.status, Status::Rejected);
    assert!(rejected.entries.is_empty());
}

#[test]
fn oscillation_lower_bound_examples() {
    let c = config(
        OSCILLATION_LOWER_BOUND,
        vec![item("centred", "poly:x1 - 0.5"), item("three", "poly:3*x1 - 1.5"), item("five", "poly:5")],
    );
    let r = run(&c);
    assert_eq!(r.status, Status::Pass);
    for e in r.entries.iter().filter(|e| e.id.starts_with("centred@")) {
        assert!(e.ratio <= 1.0 + 1e-12, "{e:?}");
        let scaled = entry(&r, &e.id.replacen("centred", "three", 1));
        assert!((scaled.ratio - e.ratio).abs() <= 1e-9 * e.ratio);
    }
    assert!(r.entries.iter().filter(|e| e.id.starts_with("five@")).all(|e| e.has(flags::PRECONDITION)));
    assert_eq!(r.entries.len(), 3 * 3 * 3);
}

#[test]
fn lipschitz_of_homotopy_examples() {
    let c = config(
        LIPSCHITZ_OF_HOMOTOPY,
        vec![item("zero", "zero:1"), item("dx1", "const:dx1"), item("u", "form:1:x2^2;x1"), item("3u", "form:1:3*x2^2;3*x1")],
    );
    let r = run(&c);
    assert_eq!(r.status, Status::Pass);
    assert!(skipped(&r, "zero"));
    let e = entry(&r, "dx1");
    assert!(e.has(flags::WRH_VERIFIED) && e.ratio.is_finite() && e.ratio > 0.0);
    let (a, b) = (entry(&r, "u"), entry(&r, "3u"));
    assert!((a.ratio - b.ratio).abs() <= 1e-6 * a.ratio);

    let mismatched = run(&RunConfig { rho: Some(1.3), ..c });
    assert_eq!(mismatched.status, Status::Rejected);
}

#[test]
fn bmo_of_homotopy_for_a_closed_form() {
    let c = config(BMO_OF_HOMOTOPY, vec![item("dx1", "const:dx1")]);
    let r = run(&c);
    assert_eq!(r.status, Status::Pass);
    // T(dx₁) = m(x₁ − ½) is not closed-form-like: its oscillation is m times that of x₁.
    let domain = c.build_domain().unwrap();
    let x1 = build_form("poly:x1", &domain).unwrap();
    let phi = YoungFunction::parse(&c.phi).unwrap();
    let spec = OscillationNormSpec::bmo(c.sigma, c.ball_count).unwrap();
    let expected = mass(&c) * oscillation_norm(&x1, &phi, &spec, None, &c.homotopy_settings()).unwrap().value;
    let e = entry(&r, "dx1");
    assert!((e.lhs - expected).abs() <= 1e-6 * expected, "{} vs {expected}", e.lhs);
}

#[test]
fn bmo_below_lipschitz_examples() {
    let c = config(BMO_BELOW_LIPSCHITZ, vec![item("zero", "zero:1"), item("u", "form:1:x2^2;x1")]);
    let r = run(&c);
    assert_eq!(r.status, Status::Pass);
    let z = entry(&r, "zero");
    assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
    assert!(r.entries.iter().all(|e| !e.has(flags::VIOLATION)));
    assert!(entry(&r, "scaled:u").lhs > 0.0);
}

#[test]
fn conjugate_pair_examples() {
    let mut constant = item("constant", "poly:1");
    constant.partner = Some("form:2:3".into());
    let mut harmonic = item("harmonic", "poly:x1^2 - x2^2");
    harmonic.partner = Some("form:2:2*x1*x2".into());
    let c = config(CONJUGATE_BMO, vec![constant, harmonic]);
    let r = run(&c);
    assert_eq!(r.status, Status::Pass, "{:?}", r.failures);
    assert!(r.entries.iter().filter(|e| e.id.starts_with("constant@")).all(|e| e.has(flags::DEGENERATE)));
    assert!(r.entries.iter().filter(|e| e.id.starts_with("harmonic@")).all(|e| e.ratio.is_finite() && e.counts()));
    assert_eq!(r.entries.len(), 2 * 6);

    let domain = c.build_domain().unwrap();
    let u = build_form("poly:x1^2 - x2^2", &domain).unwrap();
    let v = build_form("form:2:2*x1*x2", &domain).unwrap();
    let s = check_conjugate_structure(&u, &v, 2.0, 2.0, 1.0, 1e-4).unwrap();
    assert!(s.residual <= 1e-12 && s.pointwise && s.growth);
    let wrong = build_form("form:2:x1*x2", &domain).unwrap();
    assert!(matches!(check_conjugate_structure(&u, &wrong, 2.0, 2.0, 1.0, 1e-4), Err(formnorm::Error::RejectedPair(_))));

    let mut off = c.clone();
    off.conjugate.p = 1.5;
    assert_eq!(run(&off).status, Status::Rejected);
}

#[test]
fn weighted_lipschitz_with_unit_weight_is_unweighted() {
    let mut c = config(WEIGHTED_LIPSCHITZ, vec![item("zero", "zero:1"), item("u", "form:1:x2^2;x1")]);
    c.weights = vec!["const:1".into()];
    let r = run(&c);
    assert_eq!(r.status, Status::Pass, "{:?}", r.checks);
    assert!(skipped(&r, "zero"));

    let domain = c.build_domain().unwrap();
    let u = build_form("form:1:x2^2;x1", &domain).unwrap();
    let phi = YoungFunction::parse(&c.weighted_lipschitz.phi).unwrap();
    let spec = OscillationNormSpec::lipschitz(c.k, c.sigma, c.ball_count).unwrap();
    let lip = oscillation_norm(&u, &phi, &spec, None, &c.homotopy_settings()).unwrap().value;
    let lp = Samples::modulus(&u, &domain, None).unwrap().lp(c.weighted_lipschitz.p);
    let e = entry(&r, "u@const:1");
    assert!((e.ratio - lip / lp).abs() <= 1e-8 * e.ratio, "{} vs {}", e.ratio, lip / lp);

    let mut low = c.clone();
    low.weighted_lipschitz.p = 2.0;
    assert_eq!(run(&low).status, Status::Rejected);
}

#[test]
fn weighted_norm_comparison_requires_domination() {
    let mut c = config(WEIGHTED_NORM_COMPARISON, vec![item("u", "form:1:x2^2;x1")]);
    let r = run(&c);
    assert_eq!(r.status, Status::Pass);
    assert_eq!(r.entries.len(), 3);
    c.norm_comparison.phi = "power:3".into();
    assert_eq!(run(&c).status, Status::Rejected);
}

#[test]
fn bmo_gate_arithmetic() {
    assert!(bmo_gate(2, 1.5, 3.0));
    assert!(!bmo_gate(3, 1.2, 4.0));
    assert_eq!(weighted_lipschitz_gate(4.0, 1.5, 2.0), Some((3.0, 0.75)));
    assert!(weighted_lipschitz_gate(2.0, 1.5, 2.0).is_none());
}

#[test]
fn instability_is_reported_as_failure() {
    let mut c = config(CLOSED_PART_BOUNDEDNESS, vec![item("u", "form:1:x2^2;x1")]);
    c.stability = true;
    c.stability_tolerance = 1e-6;
    let s = run_suite(&c).unwrap();
    assert_eq!(s.status, Status::Fail);
    assert!(!s.stability[0].stable);
    assert!(s.reports[0].failures[0].contains("doubled resolution"));
}

#[test]
fn suite_output_is_deterministic() {
    let c = config(SOBOLEV_POINCARE, vec![item("u", "form:1:x2;x1^2"), item("t", "trig")]);
    let a = run_suite(&c).unwrap();
    let b = run_suite(&c).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
}
