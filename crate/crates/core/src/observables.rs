//! Disorder-averaged diagnostics built from per-record sector estimates,
//! plus threshold times and scaling fits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{jackknife_mean, least_squares};
use crate::worm::SectorEstimate;

/// `|Σ_Q ω^Q P_Q|²` for one record.
pub fn record_order_parameter(probs: &[f64]) -> f64 {
    let n = probs.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (q, p) in probs.iter().enumerate() {
        let phase = 2.0 * PI * q as f64 / n;
        re += p * phase.cos();
        im += p * phase.sin();
    }
    (re * re + im * im).min(1.0)
}

/// Shannon entropy in nats.
pub fn record_entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

/// `max_Q |P_Q − 1/N|`.
pub fn record_sector_deviation(probs: &[f64]) -> f64 {
    let u = 1.0 / probs.len() as f64;
    probs.iter().map(|p| (p - u).abs()).fold(0.0, f64::max)
}

/// `ln P(Q′) − ½[ln P(Q′+1) + ln P(Q′−1)]` with `Q′` the most likely
/// sector; `None` when a neighbouring sector was never visited.
pub fn record_ln_ratio(probs: &[f64]) -> Option<f64> {
    let n = probs.len();
    let top = (0..n).max_by(|a, b| probs[*a].partial_cmp(&probs[*b]).unwrap().then(b.cmp(a)))?;
    let up = probs[(top + 1) % n];
    let down = probs[(top + n - 1) % n];
    if up <= 0.0 || down <= 0.0 {
        return None;
    }
    Some(probs[top].ln() - 0.5 * (up.ln() + down.ln()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderedObservable {
    pub value: f64,
    pub stderr: f64,
    pub n_realizations: usize,
    /// Per-realization values in realization order.
    pub values: Vec<f64>,
}

impl DisorderedObservable {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let (value, stderr) = jackknife_mean(&values)?;
        Ok(Self {
            value,
            stderr,
            n_realizations: values.len(),
            values,
        })
    }

    /// The same observable divided by `ln N`.
    pub fn normalized(&self, n: usize) -> Self {
        let s = (n as f64).ln();
        Self {
            value: self.value / s,
            stderr: self.stderr / s,
            n_realizations: self.n_realizations,
            values: self.values.iter().map(|v| v / s).collect(),
        }
    }
}

fn per_record<F: Fn(&[f64]) -> f64>(estimates: &[SectorEstimate], f: F) -> Result<DisorderedObservable> {
    if estimates.is_empty() {
        return Err(Error::EmptyInput("no sector estimates"));
    }
    let mut values = Vec::with_capacity(estimates.len());
    for e in estimates {
        let total: f64 = e.probabilities.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroTotal);
        }
        let probs: Vec<f64> = e.probabilities.iter().map(|p| p / total).collect();
        values.push(f(&probs));
    }
    DisorderedObservable::from_values(values)
}

pub fn order_parameter(estimates: &[SectorEstimate]) -> Result<DisorderedObservable> {
    per_record(estimates, record_order_parameter)
}

pub fn charge_variance(op: &DisorderedObservable) -> DisorderedObservable {
    DisorderedObservable {
        value: 1.0 - op.value,
        stderr: op.stderr,
        n_realizations: op.n_realizations,
        values: op.values.iter().map(|v| 1.0 - v).collect(),
    }
}

/// Mean sector entropy in nats; see [`DisorderedObservable::normalized`].
pub fn coherent_information(estimates: &[SectorEstimate]) -> Result<DisorderedObservable> {
    per_record(estimates, record_entropy)
}

pub fn sector_deviation(estimates: &[SectorEstimate]) -> Result<DisorderedObservable> {
    per_record(estimates, record_sector_deviation)
}

pub fn local_sharpening(correlators: &[f64]) -> Result<DisorderedObservable> {
    if correlators.is_empty() {
        return Err(Error::EmptyInput("no correlators"));
    }
    DisorderedObservable::from_values(correlators.to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Censoring {
    /// A crossing was bracketed and interpolated.
    Crossed,
    /// Above threshold at the first point; the value is an upper bound.
    AlreadyAbove,
    /// Never reached the threshold; the value is the largest `t` simulated.
    NeverCrossed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpeningTime {
    pub value: f64,
    pub censoring: Censoring,
    /// The curve dips back below threshold after the reported crossing.
    pub non_monotone: bool,
}

/// First upward threshold crossing of a curve `(t, value)`, by linear
/// interpolation. Points are sorted by `t` first. When the curve dips
/// below threshold again later the first crossing is still reported and
/// `non_monotone` is set.
pub fn sharpening_time(curve: &[(f64, f64)], threshold: f64) -> Result<SharpeningTime> {
    if curve.is_empty() {
        return Err(Error::EmptyInput("empty curve"));
    }
    let mut pts = curve.to_vec();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    if pts[0].1 >= threshold {
        return Ok(SharpeningTime {
            value: pts[0].0,
            censoring: Censoring::AlreadyAbove,
            non_monotone: pts.iter().any(|p| p.1 < threshold),
        });
    }
    let Some(i) = pts.iter().position(|p| p.1 >= threshold) else {
        return Ok(SharpeningTime {
            value: pts.last().unwrap().0,
            censoring: Censoring::NeverCrossed,
            non_monotone: false,
        });
    };
    let (t0, y0) = pts[i - 1];
    let (t1, y1) = pts[i];
    let value = t0 + (threshold - y0) * (t1 - t0) / (y1 - y0);
    Ok(SharpeningTime {
        value,
        censoring: Censoring::Crossed,
        non_monotone: pts[i..].iter().any(|p| p.1 < threshold),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingModel {
    /// `ln y = c0 + c1·L`.
    ExpL,
    /// `y = c0 + c1·t/L`.
    LinearTOverL,
    /// `y = c0 + c1·t` (a ratio growing exponentially in `t`).
    ExpT,
}

impl ScalingModel {
    pub fn tag(self) -> &'static str {
        match self {
            ScalingModel::ExpL => "exp_L",
            ScalingModel::LinearTOverL => "linear_t_over_L",
            ScalingModel::ExpT => "exp_t",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "exp_L" => Some(ScalingModel::ExpL),
            "linear_t_over_L" => Some(ScalingModel::LinearTOverL),
            "exp_t" => Some(ScalingModel::ExpT),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub l: f64,
    pub t: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: ScalingModel,
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    /// Residuals in the space the model is linear in (`ln y` for `exp_L`).
    pub residuals: Vec<f64>,
}

impl ScalingFit {
    pub fn rss(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum()
    }
}

pub const MIN_FIT_POINTS: usize = 4;

pub fn fit_scaling(data: &[ScalingPoint], model: ScalingModel) -> Result<ScalingFit> {
    if data.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_FIT_POINTS,
            got: data.len(),
        });
    }
    let (design, y): (Vec<Vec<f64>>, Vec<f64>) = match model {
        ScalingModel::ExpL => {
            if data.iter().any(|p| !(p.y > 0.0)) {
                return Err(Error::Incompatible("exp_L needs positive data".into()));
            }
            data.iter().map(|p| (vec![1.0, p.l], p.y.ln())).unzip()
        }
        ScalingModel::LinearTOverL => data.iter().map(|p| (vec![1.0, p.t / p.l], p.y)).unzip(),
        ScalingModel::ExpT => data.iter().map(|p| (vec![1.0, p.t], p.y)).unzip(),
    };
    let fit = least_squares(&design, &y)?;
    Ok(ScalingFit {
        model,
        coefficients: fit.coefficients,
        r_squared: fit.r_squared,
        residuals: fit.residuals,
    })
}
