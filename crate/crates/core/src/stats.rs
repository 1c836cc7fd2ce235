//! Small statistics toolkit: autocorrelation times, jackknife, least squares.

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Integrated autocorrelation time with Sokal's self-consistent window
/// (`W ≥ c·τ(W)`, `c = 5`). Returns 0.5 for uncorrelated data and for
/// constant series.
pub fn integrated_autocorr_time(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 4 {
        return 0.5;
    }
    let m = mean(series);
    let centered: Vec<f64> = series.iter().map(|x| x - m).collect();
    let c0: f64 = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if c0 <= 0.0 || !c0.is_finite() {
        return 0.5;
    }
    let mut tau = 0.5;
    for w in 1..n / 2 {
        let cw: f64 = centered[..n - w]
            .iter()
            .zip(&centered[w..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64;
        tau += cw / c0;
        if w as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(0.5)
}

/// Delete-one jackknife over equally weighted values of a scalar estimator:
/// returns `(mean, standard error)`.
pub fn jackknife_mean(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput("jackknife over no values"));
    }
    let n = values.len() as f64;
    let total: f64 = values.iter().sum();
    let m = total / n;
    if values.len() == 1 {
        return Ok((m, 0.0));
    }
    let replicas: Vec<f64> = values.iter().map(|v| (total - v) / (n - 1.0)).collect();
    let rm = mean(&replicas);
    let var = (n - 1.0) / n * replicas.iter().map(|r| (r - rm).powi(2)).sum::<f64>();
    Ok((m, var.sqrt()))
}

/// Weighted jackknife replicas: `(weight, estimate)` where `weight` is how
/// many deletable units share that leave-one-out estimate. `units` is the
/// total number of deletable units (the sum of weights).
pub fn jackknife_error(replicas: &[(f64, f64)]) -> f64 {
    let units: f64 = replicas.iter().map(|(w, _)| w).sum();
    if units <= 1.0 {
        return 0.0;
    }
    let m = replicas.iter().map(|(w, v)| w * v).sum::<f64>() / units;
    let ss: f64 = replicas.iter().map(|(w, v)| w * (v - m).powi(2)).sum();
    ((units - 1.0) / units * ss).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

impl LinearFit {
    pub fn rss(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum()
    }
}

/// Ordinary least squares `y ≈ X β` through the normal equations, solved
/// with a Cholesky factorization. `design` is row-major, one row per point.
pub fn least_squares(design: &[Vec<f64>], y: &[f64]) -> Result<LinearFit> {
    let n = y.len();
    let p = design.first().map_or(0, |r| r.len());
    if n != design.len() || p == 0 {
        return Err(Error::DegenerateFit);
    }
    if n < p {
        return Err(Error::TooFewPoints { needed: p, got: n });
    }
    let x = nalgebra::DMatrix::from_fn(n, p, |i, j| design[i][j]);
    let yv = nalgebra::DVector::from_column_slice(y);
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * &yv;
    let diag: Vec<f64> = (0..p).map(|j| xtx[(j, j)]).collect();
    let chol = nalgebra::Cholesky::new(xtx).ok_or(Error::DegenerateFit)?;
    // Relative pivot test: a (near-)dependent column leaves a vanishing pivot.
    let l = chol.l_dirty();
    if (0..p).any(|j| !(l[(j, j)] * l[(j, j)] > 1e-12 * diag[j])) {
        return Err(Error::DegenerateFit);
    }
    let beta = chol.solve(&xty);
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::DegenerateFit);
    }
    let fitted = &x * &beta;
    let residuals: Vec<f64> = (0..n).map(|i| y[i] - fitted[i]).collect();
    let ym = mean(y);
    let ss_tot: f64 = y.iter().map(|v| (v - ym).powi(2)).sum();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(LinearFit {
        coefficients: beta.iter().copied().collect(),
        r_squared,
        residuals,
    })
}
