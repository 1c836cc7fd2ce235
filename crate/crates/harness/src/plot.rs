//! Plot-ready data: long-format CSV plus gnuplot block files. Nothing is
//! rendered.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use zn_sharpening::observables::{sharpening_time, Censoring};

use crate::error::{HarnessError, Result};
use crate::manifest::{RunManifest, OBSERVABLES_FILE};
use crate::table::{read_rows, ObservableRow};

pub const PLOT_DIR: &str = "plots";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// Order parameter against temperature, one series per size.
    #[value(name = "fig5_style", alias = "fig5")]
    Fig5Style,
    /// Coherent information against temperature, raw and over `ln N`.
    #[value(name = "fig6_style", alias = "fig6")]
    Fig6Style,
    /// Ln-ratio and sector deviation against `t`, plus sharpening times.
    #[value(name = "scaling")]
    Scaling,
}

impl Figure {
    pub fn stem(self) -> &'static str {
        match self {
            Figure::Fig5Style => "fig5_style",
            Figure::Fig6Style => "fig6_style",
            Figure::Scaling => "scaling",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub t: usize,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub observable: String,
    pub value: f64,
    pub stderr: f64,
    pub value_normalized: Option<f64>,
    pub stderr_normalized: Option<f64>,
    pub n_realizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpeningRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub threshold: f64,
    pub t_sharp: f64,
    pub censoring: Censoring,
    pub non_monotone: bool,
}

/// Writes the figure's files into `<dir>/plots` and returns their paths.
pub fn emit_plot_data(dir: &Path, figure: Figure, threshold: f64) -> Result<Vec<PathBuf>> {
    let manifest = RunManifest::load(dir)?;
    if !manifest.complete {
        return Err(HarnessError::Incomplete(manifest.missing()));
    }
    let rows = read_rows(&dir.join(OBSERVABLES_FILE))?;
    let out = dir.join(PLOT_DIR);
    std::fs::create_dir_all(&out).map_err(|e| HarnessError::io(&out, e))?;
    let mut written = Vec::new();
    match figure {
        Figure::Fig5Style => {
            let series = select(&rows, &["order_parameter"], false);
            written.extend(write_series(
                &out,
                figure.stem(),
                &series,
                by_size_over_temperature,
            )?);
        }
        Figure::Fig6Style => {
            let series = select(&rows, &["coherent_information"], true);
            written.extend(write_series(
                &out,
                figure.stem(),
                &series,
                by_size_over_temperature,
            )?);
        }
        Figure::Scaling => {
            let series = select(&rows, &["ln_ratio", "sector_deviation"], false);
            written.extend(write_series(
                &out,
                figure.stem(),
                &series,
                by_temperature_and_width_over_t,
            )?);
            let times = sharpening_times(&rows, threshold)?;
            let path = out.join("scaling_sharpening_time.csv");
            let mut w = csv::Writer::from_path(&path)?;
            for row in &times {
                w.serialize(row)?;
            }
            w.flush().map_err(|e| HarnessError::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

fn select(rows: &[ObservableRow], names: &[&str], normalize: bool) -> Vec<SeriesPoint> {
    rows.iter()
        .filter(|r| names.contains(&r.observable.as_str()))
        .map(|r| {
            let ln_n = (r.n as f64).ln();
            SeriesPoint {
                n: r.n,
                l: r.l,
                t: r.t,
                temperature: r.temperature,
                observable: r.observable.clone(),
                value: r.value,
                stderr: r.stderr,
                value_normalized: normalize.then(|| r.value / ln_n),
                stderr_normalized: normalize.then(|| r.stderr / ln_n),
                n_realizations: r.n_realizations,
            }
        })
        .collect()
}

type Block = (String, Vec<(f64, f64, f64, Option<f64>)>);

fn by_size_over_temperature(p: &SeriesPoint) -> (String, f64) {
    (
        format!("{} N={} L={} t={}", p.observable, p.n, p.l, p.t),
        p.temperature,
    )
}

fn by_temperature_and_width_over_t(p: &SeriesPoint) -> (String, f64) {
    (
        format!("{} N={} T={} L={}", p.observable, p.n, p.temperature, p.l),
        p.t as f64,
    )
}

/// Long CSV plus a `.dat` file with one gnuplot index block per series.
fn write_series(
    out: &Path,
    stem: &str,
    points: &[SeriesPoint],
    key: fn(&SeriesPoint) -> (String, f64),
) -> Result<Vec<PathBuf>> {
    let csv_path = out.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_path(&csv_path)?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| HarnessError::io(&csv_path, e))?;

    let mut blocks: Vec<Block> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for p in points {
        let (label, x) = key(p);
        let slot = *index.entry(label.clone()).or_insert_with(|| {
            blocks.push((label, Vec::new()));
            blocks.len() - 1
        });
        blocks[slot]
            .1
            .push((x, p.value, p.stderr, p.value_normalized));
    }
    let mut text = String::new();
    for (i, (label, mut pts)) in blocks.into_iter().enumerate() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if i > 0 {
            text.push_str("\n\n");
        }
        let _ = writeln!(text, "# {label}");
        for (x, v, e, norm) in pts {
            match norm {
                Some(nv) => {
                    let _ = writeln!(text, "{x} {v} {e} {nv}");
                }
                None => {
                    let _ = writeln!(text, "{x} {v} {e}");
                }
            }
        }
    }
    let dat_path = out.join(format!("{stem}.dat"));
    std::fs::write(&dat_path, text).map_err(|e| HarnessError::io(&dat_path, e))?;
    Ok(vec![csv_path, dat_path])
}

/// Threshold crossing of the order parameter in `t` at each `(N, L, T)`.
pub fn sharpening_times(rows: &[ObservableRow], threshold: f64) -> Result<Vec<SharpeningRow>> {
    let mut curves: BTreeMap<(usize, usize, u64), Vec<(f64, f64)>> = BTreeMap::new();
    let mut temps: BTreeMap<u64, f64> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.observable == "order_parameter") {
        let bits = r.temperature.to_bits();
        temps.insert(bits, r.temperature);
        curves
            .entry((r.n, r.l, bits))
            .or_default()
            .push((r.t as f64, r.value));
    }
    let mut out = Vec::new();
    for ((n, l, bits), curve) in curves {
        let st = sharpening_time(&curve, threshold)?;
        out.push(SharpeningRow {
            n,
            l,
            temperature: temps[&bits],
            threshold,
            t_sharp: st.value,
            censoring: st.censoring,
            non_monotone: st.non_monotone,
        });
    }
    Ok(out)
}
