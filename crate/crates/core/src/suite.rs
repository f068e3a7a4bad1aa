//! Full verification runs: all enabled verifiers, then a rerun at doubled
//! resolution to check that every empirical constant has settled.

use std::path::Path;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::report::{Stability, Status, SuiteReport, VerificationReport};
use crate::verify::{Harness, VERIFIER_IDS};

fn enabled(config: &RunConfig) -> Vec<&str> {
    if config.verifiers.is_empty() {
        VERIFIER_IDS.to_vec()
    } else {
        VERIFIER_IDS.iter().copied().filter(|id| config.verifiers.iter().any(|v| v == id)).collect()
    }
}

/// Reports for the enabled verifiers, in canonical order.
pub fn run_verifiers(config: &RunConfig) -> Result<(Harness, Vec<VerificationReport>)> {
    let harness = Harness::new(config)?;
    let reports = enabled(config).into_iter().map(|id| harness.run(id)).collect::<Result<Vec<_>>>()?;
    Ok((harness, reports))
}

/// Constants below this are rounding noise of a vanishing left side and
/// compare as equal.
pub const STABILITY_FLOOR: f64 = 1e-12;

fn relative_change(base: f64, refined: f64) -> f64 {
    if base == refined || (base.abs() <= STABILITY_FLOOR && refined.abs() <= STABILITY_FLOOR) {
        0.0
    } else {
        ((refined - base) / base).abs()
    }
}

/// Run every enabled verifier; with `config.stability` the run is repeated
/// at doubled grid and ball resolution and any empirical constant that
/// moves by more than `stability_tolerance` fails its report.
pub fn run_suite(config: &RunConfig) -> Result<SuiteReport> {
    let (harness, mut reports) = run_verifiers(config)?;
    let mut stability = Vec::new();
    if config.stability {
        let (_, refined) = run_verifiers(&config.refined())?;
        for (r, f) in reports.iter_mut().zip(&refined) {
            if r.status != Status::Pass && f.status != Status::Pass {
                continue;
            }
            let change = relative_change(r.empirical_c, f.empirical_c);
            let both_empty = r.empirical_c.is_nan() && f.empirical_c.is_nan();
            let stable = both_empty || change < config.stability_tolerance;
            if !stable {
                r.fail(format!(
                    "empirical C moved from {} to {} ({:.1}%) at doubled resolution",
                    r.empirical_c,
                    f.empirical_c,
                    100.0 * change
                ));
            }
            if f.status == Status::Fail && r.status != Status::Fail {
                r.fail(format!("doubled-resolution run failed: {}", f.failures.join("; ")));
            }
            stability.push(Stability {
                inequality_id: r.inequality_id.clone(),
                base: r.empirical_c,
                refined: f.empirical_c,
                relative_change: if both_empty { 0.0 } else { change },
                stable,
            });
        }
    }
    let status = if reports.iter().any(|r| r.status == Status::Fail) { Status::Fail } else { Status::Pass };
    Ok(SuiteReport {
        status,
        config: serde_json::to_value(config).map_err(|e| Error::Io(e.to_string()))?,
        excluded: harness.excluded().to_vec(),
        reports,
        stability,
    })
}

/// Write `report.json` and `report.csv` into `dir`.
pub fn write_reports(report: &SuiteReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report.to_json())?;
    std::fs::write(dir.join("report.csv"), report.to_csv()?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_changes() {
        assert_eq!(relative_change(2.0, 2.2), 0.10000000000000009);
        assert_eq!(relative_change(3e-17, 1e-16), 0.0);
        assert_eq!(relative_change(0.0, 1e-3), f64::INFINITY);
        assert!(relative_change(f64::NAN, 1.0).is_nan());
    }
}
