//! Acceptance run: one pass/fail line per criterion, written straight to
//! stderr so it shows up in captured test logs.

use std::io::Write;
use std::process::Command;
use std::time::Instant;

use formnorm::config::RunConfig;
use formnorm::corpus::default_corpus;
use formnorm::exterior::{hodge_star, modulus, star_modulus_squared};
use formnorm::homotopy::decomposition_residual;
use formnorm::norms::{oscillation_norm, OscillationNormSpec};
use formnorm::report::{flags, Status, SuiteReport, VerificationReport};
use formnorm::selftest::{
    dd_analytic, dd_finite_difference, double_star, identity_corpus, luxemburg_oracle, modulus_identity, scalar_fields,
};
use formnorm::suite::run_suite;
use formnorm::verify::{
    check_conjugate_structure, Harness, BMO_BELOW_LIPSCHITZ, BMO_OF_HOMOTOPY, CLOSED_PART_BOUNDEDNESS, CONJUGATE_BMO,
    LIPSCHITZ_OF_HOMOTOPY, SOBOLEV_POINCARE, T_BOUNDEDNESS, WEIGHTED_LIPSCHITZ, WEIGHTED_NORM_COMPARISON,
};
use formnorm::YoungFunction;

struct Outcome {
    lines: Vec<(bool, String)>,
}

impl Outcome {
    fn record(&mut self, number: usize, name: &str, pass: bool, detail: String) {
        let line = format!("criterion {number} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
        let _ = writeln!(std::io::stderr(), "{line}");
        self.lines.push((pass, line));
    }
}

fn report<'a>(suite: &'a SuiteReport, id: &str) -> &'a VerificationReport {
    suite.reports.iter().find(|r| r.inequality_id == id).expect("verifier ran")
}

fn identity_battery(out: &mut Outcome) {
    let start = Instant::now();
    let mut checks = vec![double_star(7).unwrap(), modulus_identity(7).unwrap()];
    let forms = identity_corpus(8).unwrap();
    checks.push(dd_analytic(&forms).unwrap());
    checks.push(dd_finite_difference(&forms).unwrap());
    let mut star = 0.0f64;
    let mut modulus_err = 0.0f64;
    let mut values = 0;
    for (_, u) in &forms {
        for x in u.domain().test_points(4) {
            let a = u.evaluate(&x).unwrap();
            let (n, l) = (a.dims(), a.degree());
            let sign = if (l * (n - l)) % 2 == 0 { 1.0 } else { -1.0 };
            let back = hodge_star(&hodge_star(&a));
            for (b, c) in back.coeffs().iter().zip(a.coeffs()) {
                star = star.max((b - sign * c).abs());
            }
            let sq = modulus(&a).powi(2);
            modulus_err = modulus_err.max((sq - star_modulus_squared(&a)).abs() / sq.max(1.0));
            values += 1;
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    let detail: Vec<String> = checks.iter().map(|c| format!("{} {:.1e}", c.name, c.worst)).collect();
    let pass = checks.iter().all(|c| c.passed()) && star <= 1e-12 && modulus_err <= 1e-12 && seconds < 10.0;
    out.record(
        1,
        "exact-identity battery",
        pass,
        format!(
            "{}; corpus values {values}: double star {star:.1e}, modulus {modulus_err:.1e}; {seconds:.1} s",
            detail.join(", ")
        ),
    );
}

fn decomposition(out: &mut Outcome, config: &RunConfig) {
    let start = Instant::now();
    let settings = config.homotopy_settings();
    let domain = config.build_domain().unwrap();
    let fine = domain.with_resolution(2 * config.grid_resolution).unwrap();
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut count = 0;
    for e in default_corpus(&domain).unwrap() {
        let l = e.form.degree();
        if l == 0 || l >= domain.dims() {
            continue;
        }
        let coarse = decomposition_residual(&e.form, &settings, 7).unwrap();
        let refined = decomposition_residual(&e.form.restricted_to(fine.clone()).unwrap(), &settings, 7).unwrap();
        worst = worst.max(coarse);
        count += 1;
        if !(coarse <= 1e-3 && refined < coarse) {
            pass = false;
            let _ = writeln!(std::io::stderr(), "  {}: residual {coarse:.3e} then {refined:.3e}", e.id);
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    pass &= seconds < 300.0;
    out.record(
        2,
        "decomposition u = d(Tu) + T(du)",
        pass,
        format!("{count} entries at grid {}, worst {worst:.2e}, all smaller at doubled grid; {seconds:.1} s", config.grid_resolution),
    );
}

fn luxemburg(out: &mut Outcome, config: &RunConfig) {
    let domain = config.build_domain().unwrap();
    let fields = scalar_fields(&domain, config.ball_resolution, 100).unwrap();
    let (worst, cases) = luxemburg_oracle(&fields, &[1.5, 2.0, 3.0]).unwrap();
    out.record(
        3,
        "Luxemburg/Lᵖ oracle",
        fields.len() == 100 && worst <= 1e-6,
        format!("{} fields, {cases} cases, worst relative gap {worst:.2e}", fields.len()),
    );
}

fn closed_collapse(out: &mut Outcome, config: &RunConfig) {
    let domain = config.build_domain().unwrap();
    let phi = YoungFunction::parse(&config.phi).unwrap();
    let settings = config.homotopy_settings();
    let mut worst = 0.0f64;
    let mut count = 0;
    for e in default_corpus(&domain).unwrap().into_iter().filter(|e| e.tags.closed) {
        for spec in [
            OscillationNormSpec::bmo(config.sigma, config.ball_count).unwrap(),
            OscillationNormSpec::lipschitz(config.k, config.sigma, config.ball_count).unwrap(),
        ] {
            worst = worst.max(oscillation_norm(&e.form, &phi, &spec, None, &settings).unwrap().value);
        }
        count += 1;
    }
    out.record(
        4,
        "closed-form collapse",
        count >= 4 && worst <= 1e-6,
        format!("{count} closed entries, largest oscillation norm {worst:.1e}"),
    );
}

fn bmo_below_lipschitz(out: &mut Outcome, suite: &SuiteReport) {
    let r = report(suite, BMO_BELOW_LIPSCHITZ);
    let violations = r.entries.iter().filter(|e| e.has(flags::VIOLATION)).count();
    let scaled = r.entries.iter().filter(|e| e.id.starts_with("scaled:")).count();
    let factor = r.config["volume_factor"].as_f64().unwrap();
    let scaled_factor = r.config["scaled_volume_factor"].as_f64().unwrap();
    let k = r.config["k"].as_f64().unwrap();
    let rel = (scaled_factor / factor - 2f64.powf(k)).abs() / 2f64.powf(k);
    out.record(
        5,
        "BMO ≤ |Ω|^{k/n}·Lipschitz",
        r.status == Status::Pass && violations == 0 && scaled > 0 && rel <= 1e-6,
        format!(
            "{} entries ({scaled} on the side-2 square), {violations} violations, max ratio {:.4}, scaled factor {scaled_factor} vs 2^k = {} (rel {rel:.1e})",
            r.entries.len(),
            r.empirical_c,
            2f64.powf(k)
        ),
    );
}

fn norm_comparison(out: &mut Outcome, suite: &SuiteReport) {
    let r = report(suite, WEIGHTED_NORM_COMPARISON);
    let balls = r.config["comparison_balls"].as_u64().unwrap();
    let weights = r.config["weights"].as_array().unwrap().len();
    let violations = r.entries.iter().filter(|e| e.has(flags::VIOLATION)).count();
    let worst = r.entries.iter().map(|e| e.lhs - e.rhs).fold(f64::NEG_INFINITY, f64::max);
    out.record(
        6,
        "weighted Orlicz ≤ Lᵖ with constant 1",
        r.status == Status::Pass && violations == 0 && balls == 50 && weights == 3 && r.entries.len() == 12 * 3,
        format!("{} forms × {weights} weights × {balls} balls, largest lhs − rhs {worst:.2e}", r.entries.len() / weights),
    );
}

fn boundedness(out: &mut Outcome, suite: &SuiteReport) {
    let ids = [
        T_BOUNDEDNESS,
        CLOSED_PART_BOUNDEDNESS,
        SOBOLEV_POINCARE,
        LIPSCHITZ_OF_HOMOTOPY,
        BMO_OF_HOMOTOPY,
        CONJUGATE_BMO,
        WEIGHTED_LIPSCHITZ,
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for id in ids {
        let r = report(suite, id);
        let s = suite.stability.iter().find(|s| s.inequality_id == id);
        let stable = s.is_some_and(|s| s.stable && s.relative_change < 0.1);
        let ok = r.status == Status::Pass && r.empirical_c.is_finite() && stable;
        pass &= ok;
        detail.push(format!(
            "{id} C={:.4} Δ={:.1e}{}",
            r.empirical_c,
            s.map_or(f64::NAN, |s| s.relative_change),
            if ok { "" } else { " FAILED" }
        ));
    }

    let base = RunConfig { grid_resolution: 24, ball_resolution: 8, ball_count: 6, stability: false, ..RunConfig::default() };
    let gate = |config: RunConfig, id: &str| Harness::new(&config).unwrap().run(id).unwrap().status;
    let with = |f: &dyn Fn(&mut RunConfig), id: &str| {
        let mut c = RunConfig { verifiers: vec![id.to_string()], ..base.clone() };
        f(&mut c);
        gate(c, id)
    };
    let bmo_admit = with(&|_| {}, BMO_OF_HOMOTOPY);
    let bmo_reject = with(
        &|c| {
            c.domain = formnorm::domain::Shape::Box { lower: vec![0.0; 3], upper: vec![1.0; 3] };
            c.grid_resolution = 6;
            c.corpus = vec![formnorm::config::CorpusItem { id: "z".into(), form: "zero:1".into(), partner: None }];
            c.g_class.p = 1.2;
            c.g_class.q = 4.0;
            c.phi = "power:2".into();
        },
        BMO_OF_HOMOTOPY,
    );
    let wl_admit = with(&|_| {}, WEIGHTED_LIPSCHITZ);
    let wl_reject = with(&|c| c.weighted_lipschitz.p = 2.0, WEIGHTED_LIPSCHITZ);
    let cj_admit = with(&|_| {}, CONJUGATE_BMO);
    let cj_reject = with(&|c| c.conjugate.p = 1.5, CONJUGATE_BMO);
    let sp_admit = with(&|_| {}, SOBOLEV_POINCARE);
    let sp_reject = with(&|c| c.sobolev_t = 2.0, SOBOLEV_POINCARE);
    let gates = [
        ("1 < t < n", sp_admit, sp_reject),
        ("q(n−p) < np", bmo_admit, bmo_reject),
        ("αp−p−αq > 0", wl_admit, wl_reject),
        ("1/p + 1/q = 1", cj_admit, cj_reject),
    ];
    for (name, admit, reject) in gates {
        let ok = admit == Status::Pass && reject == Status::Rejected;
        pass &= ok;
        detail.push(format!("gate {name}: admitted={admit:?} rejected={reject:?}"));
    }
    out.record(7, "boundedness reports, stability and gates", pass, detail.join("; "));
}

fn conjugate_structure(out: &mut Outcome, config: &RunConfig) {
    let domain = config.build_domain().unwrap();
    let pair = default_corpus(&domain).unwrap().into_iter().find(|e| e.partner.is_some()).unwrap();
    let c = &config.conjugate;
    let s = check_conjugate_structure(&pair.form, pair.partner.as_ref().unwrap(), c.p, c.q, c.a, 1e-4).unwrap();
    out.record(
        8,
        "conjugate-pair structure",
        s.residual <= 1e-4 && s.pointwise && s.growth,
        format!(
            "max |A(x, du) − d⋆v| = {:.1e}, |du|^q ≤ |⋆dv|^p at all {} grid nodes: {}",
            s.residual,
            domain.quadrature().len(),
            s.pointwise
        ),
    );
}

fn determinism(out: &mut Outcome) {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig { stability: false, ..RunConfig::default() };
    let path = dir.path().join("run.toml");
    std::fs::write(&path, config.to_toml()).unwrap();
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let o = Command::new(env!("CARGO_BIN_EXE_formnorm"))
            .args(["verify", "--config"])
            .arg(&path)
            .arg("--out-dir")
            .arg(&out_dir)
            .env_remove("FORMNORM_CONFIG")
            .output()
            .unwrap();
        let json = std::fs::read(out_dir.join("report.json")).unwrap();
        let csv = std::fs::read(out_dir.join("report.csv")).unwrap();
        (o.status.code(), o.stdout, json, csv)
    };
    let a = run("a");
    let b = run("b");
    let identical = a == b;
    out.record(
        9,
        "determinism",
        identical && a.0 == Some(0),
        format!("two `verify` runs: stdout {} bytes, exit {:?}, byte-identical: {identical}", a.1.len(), a.0),
    );
}

#[test]
fn acceptance() {
    let config = RunConfig::default();
    let mut out = Outcome { lines: Vec::new() };
    identity_battery(&mut out);
    decomposition(&mut out, &config);
    luxemburg(&mut out, &config);
    closed_collapse(&mut out, &config);
    let suite = run_suite(&config).unwrap();
    bmo_below_lipschitz(&mut out, &suite);
    norm_comparison(&mut out, &suite);
    boundedness(&mut out, &suite);
    conjugate_structure(&mut out, &config);
    determinism(&mut out);
    let failed: Vec<&String> = out.lines.iter().filter(|(p, _)| !p).map(|(_, l)| l).collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("\n"));
}
