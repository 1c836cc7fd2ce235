//! Comparison of sampled estimates with exact enumeration.

use serde::{Deserialize, Serialize};
use zn_sharpening::stats::jackknife_mean;

use crate::config::{ExperimentConfig, Mode};
use crate::error::{HarnessError, Result};
use crate::manifest::write_atomic;
use crate::sweep::SweepOutcome;

pub const REPORT_FILE: &str = "oracle_report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    #[serde(rename = "L")]
    pub l: usize,
    pub t: usize,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub quantity: String,
    /// Realization index, or `None` for a disorder average.
    pub realization: Option<usize>,
    pub estimate: f64,
    pub exact: f64,
    pub sigma: f64,
    pub allowed: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub passed: bool,
    pub tolerance: f64,
    pub sigmas: f64,
    pub comparisons: usize,
    pub failures: Vec<Comparison>,
    /// The largest deviation in units of the allowed difference.
    pub worst: Option<Comparison>,
}

/// Checks per-record sector probabilities, disorder-averaged order
/// parameter and coherent information, and per-record correlators.
/// Every check passes when `|estimate − exact| ≤ max(tolerance, sigmas·σ)`.
pub fn check(config: &ExperimentConfig, outcome: &SweepOutcome) -> Result<OracleReport> {
    if config.mode != Mode::OracleCheck {
        return Err(HarnessError::Usage(
            "oracle check needs mode = \"oracle_check\"".into(),
        ));
    }
    if !outcome.manifest.complete {
        return Err(HarnessError::Incomplete(outcome.manifest.missing()));
    }
    let grid = config.grid()?;
    let tol = config.oracle.tolerance;
    let k = config.oracle.sigmas;
    let judge = |point: usize,
                 quantity: &str,
                 realization: Option<usize>,
                 estimate: f64,
                 exact: f64,
                 sigma: f64| {
        let allowed = tol.max(k * sigma);
        Comparison {
            l: grid[point].l,
            t: grid[point].t,
            temperature: grid[point].temperature,
            quantity: quantity.to_string(),
            realization,
            estimate,
            exact,
            sigma,
            allowed,
            passed: (estimate - exact).abs() <= allowed,
        }
    };
    let mut all = Vec::new();
    for point in 0..grid.len() {
        let records: Vec<_> = outcome
            .results
            .iter()
            .filter(|r| r.key.point == point)
            .filter_map(|r| r.record.as_ref().map(|rec| (r.key.realization, rec)))
            .collect();
        for (realization, rec) in &records {
            let (Some(p), Some(e), Some(s)) =
                (&rec.probabilities, &rec.exact, &rec.probability_stderr)
            else {
                continue;
            };
            for q in 0..p.len() {
                all.push(judge(
                    point,
                    &format!("P(Q={q})"),
                    Some(*realization),
                    p[q],
                    e[q],
                    s[q],
                ));
            }
            if let Some(c) = &rec.correlator {
                if let Some(exact) = c.exact {
                    all.push(judge(
                        point,
                        "local_correlator",
                        Some(*realization),
                        c.value,
                        exact,
                        c.stderr,
                    ));
                }
            }
        }
        for (name, exact_name) in [
            ("order_parameter", "order_parameter_exact"),
            ("coherent_information", "coherent_information_exact"),
        ] {
            let pairs: Vec<(f64, f64)> = records
                .iter()
                .filter_map(|(_, r)| Some((*r.values.get(name)?, *r.values.get(exact_name)?)))
                .collect();
            if pairs.is_empty() {
                continue;
            }
            let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
            let (_, sigma) = jackknife_mean(&diffs)?;
            let m = pairs.len() as f64;
            let estimate = pairs.iter().map(|p| p.0).sum::<f64>() / m;
            let exact = pairs.iter().map(|p| p.1).sum::<f64>() / m;
            all.push(judge(point, name, None, estimate, exact, sigma));
        }
    }
    let worst = all
        .iter()
        .max_by(|a, b| {
            let ra = (a.estimate - a.exact).abs() / a.allowed.max(f64::MIN_POSITIVE);
            let rb = (b.estimate - b.exact).abs() / b.allowed.max(f64::MIN_POSITIVE);
            ra.total_cmp(&rb)
        })
        .cloned();
    let failures: Vec<Comparison> = all.iter().filter(|c| !c.passed).cloned().collect();
    let report = OracleReport {
        passed: failures.is_empty() && !all.is_empty(),
        tolerance: tol,
        sigmas: k,
        comparisons: all.len(),
        failures,
        worst,
    };
    write_atomic(
        &outcome.output_dir.join(REPORT_FILE),
        &serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}
