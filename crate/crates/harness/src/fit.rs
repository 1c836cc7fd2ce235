//! Scaling fits over rows of an observables CSV.

use zn_sharpening::observables::{fit_scaling, ScalingFit, ScalingModel, ScalingPoint};

use crate::error::{HarnessError, Result};
use crate::table::ObservableRow;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RowFilter {
    pub observable: String,
    pub temperature: Option<f64>,
    pub n: Option<usize>,
}

impl RowFilter {
    pub fn matches(&self, row: &ObservableRow) -> bool {
        row.observable == self.observable
            && self
                .temperature
                .is_none_or(|t| (row.temperature - t).abs() <= 1e-9 * t.abs().max(1.0))
            && self.n.is_none_or(|n| row.n == n)
    }
}

pub fn parse_model(tag: &str) -> Result<ScalingModel> {
    ScalingModel::from_tag(tag).ok_or_else(|| {
        HarnessError::Usage(format!(
            "unknown model {tag:?}; expected exp_L, linear_t_over_L or exp_t"
        ))
    })
}

pub fn fit_rows(
    rows: &[ObservableRow],
    filter: &RowFilter,
    model: ScalingModel,
) -> Result<ScalingFit> {
    let points: Vec<ScalingPoint> = rows
        .iter()
        .filter(|r| filter.matches(r))
        .map(|r| ScalingPoint {
            l: r.l as f64,
            t: r.t as f64,
            y: r.value,
        })
        .collect();
    Ok(fit_scaling(&points, model)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(l: usize, t: usize, temp: f64, value: f64) -> ObservableRow {
        ObservableRow {
            n: 2,
            l,
            t,
            temperature: temp,
            observable: "ln_ratio".into(),
            value,
            stderr: 0.0,
            n_realizations: 1,
            seed: 0,
        }
    }

    #[test]
    fn filters_and_fits() {
        let mut rows: Vec<_> = [4, 8, 12, 16]
            .iter()
            .map(|t| row(8, *t, 0.3, 1.0 + 6.0 * *t as f64))
            .collect();
        rows.push(row(8, 4, 0.5, 100.0));
        let filter = RowFilter {
            observable: "ln_ratio".into(),
            temperature: Some(0.3),
            n: None,
        };
        let fit = fit_rows(&rows, &filter, parse_model("exp_t").unwrap()).unwrap();
        assert!((fit.coefficients[1] - 6.0).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(parse_model("cubic").is_err());
    }
}
