//! Experiment configuration, read from TOML or JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use zn_sharpening::channel::coupling_len;
use zn_sharpening::oracle::MAX_TRANSFER_STATES;
use zn_sharpening::{ClockChannel, Schedule, TorusLattice};

use crate::error::{HarnessError, Result};

/// Environment variable that overrides the configured worker count.
pub const WORKERS_ENV: &str = "ZN_WORKERS";

/// Fields that only affect where and how output is written; they are left
/// out of the config hash.
const UNHASHED_FIELDS: [&str; 3] = ["output_dir", "workers", "debug_dump"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Sharpening,
    CoherentInfo,
    Local,
    Scaling,
    OracleCheck,
}

impl Mode {
    /// Observable names written to the CSV, in column order.
    pub fn observables(self) -> &'static [&'static str] {
        match self {
            Mode::Sharpening => &["order_parameter"],
            Mode::CoherentInfo => &["coherent_information", "coherent_information_normalized"],
            Mode::Local => &["local_sharpening"],
            Mode::Scaling => &["order_parameter", "ln_ratio", "sector_deviation"],
            Mode::OracleCheck => &[
                "order_parameter",
                "order_parameter_exact",
                "coherent_information",
                "coherent_information_exact",
                "max_probability_error",
                "local_correlator",
                "local_correlator_exact",
            ],
        }
    }
}

/// How `P(Q|s)` is obtained for each record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    Worm,
    /// Exact row-to-row transfer; needs `N^L` within the transfer limit.
    Transfer,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    /// Single-coupling channel at each value of `temperatures`.
    #[default]
    Temperature,
    /// One channel per coupling vector `[β_0, β_1, …]`; the temperature
    /// column reports `1/β_1`.
    Couplings { betas: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub burn_in: usize,
    pub measurements: usize,
    #[serde(default = "one")]
    pub thin: usize,
}

impl ScheduleSpec {
    pub fn to_schedule(self) -> Result<Schedule> {
        Ok(Schedule::new(self.burn_in, self.measurements, self.thin)?)
    }
}

fn one() -> usize {
    1
}

fn default_worm_schedule() -> ScheduleSpec {
    ScheduleSpec {
        burn_in: 200,
        measurements: 1000,
        thin: 1,
    }
}

fn default_metropolis_schedule() -> ScheduleSpec {
    ScheduleSpec {
        burn_in: 500,
        measurements: 2000,
        thin: 1,
    }
}

fn default_spares() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalSpec {
    /// Plaquette separation along x; defaults to `L/2`.
    #[serde(default)]
    pub separation: Option<usize>,
    /// Row holding the pair; defaults to `t/2`.
    #[serde(default)]
    pub row: Option<usize>,
    #[serde(default = "default_metropolis_schedule")]
    pub schedule: ScheduleSpec,
}

impl Default for LocalSpec {
    fn default() -> Self {
        Self {
            separation: None,
            row: None,
            schedule: default_metropolis_schedule(),
        }
    }
}

impl LocalSpec {
    /// Plaquette pair `(p(0,row), p(separation,row))` on an `L × t` torus.
    pub fn pair(&self, lattice: &TorusLattice) -> (usize, usize) {
        let sep = self.separation.unwrap_or(lattice.width() / 2) % lattice.width();
        let row = self.row.unwrap_or(lattice.height() / 2) % lattice.height();
        (lattice.plaquette(0, row), lattice.plaquette(sep, row))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_sigmas")]
    pub sigmas: f64,
    /// Also compare the Metropolis correlator with its exact value.
    #[serde(default = "yes")]
    pub correlator: bool,
}

fn default_tolerance() -> f64 {
    0.01
}

fn default_sigmas() -> f64 {
    3.0
}

fn yes() -> bool {
    true
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self {
            tolerance: default_tolerance(),
            sigmas: default_sigmas(),
            correlator: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Symmetry order `N`.
    pub n: usize,
    /// Master seed; every random stream in the run derives from it.
    pub seed: u64,
    pub realizations: usize,
    #[serde(default)]
    pub temperatures: Vec<f64>,
    /// Explicit `[L, t]` pairs.
    #[serde(default)]
    pub sizes: Vec<(usize, usize)>,
    /// Square sizes `L = t`, appended after `sizes`.
    #[serde(default)]
    pub l_equals_t: Vec<usize>,
    #[serde(default)]
    pub channel: ChannelSpec,
    #[serde(default = "default_worm_schedule")]
    pub schedule: ScheduleSpec,
    #[serde(default = "one")]
    pub replicas: usize,
    /// Extra chains tried when every regular replica of a record ends
    /// without a closure.
    #[serde(default = "default_spares")]
    pub spare_replicas: usize,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default)]
    pub local: LocalSpec,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Write per-task JSON dumps of records and sector estimates.
    #[serde(default)]
    pub debug_dump: bool,
}

fn default_output() -> PathBuf {
    PathBuf::from("zn-output")
}

/// One `(L, t, channel)` combination of the sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub l: usize,
    pub t: usize,
    pub temperature: f64,
    pub channel: ClockChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Toml,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, format: Format) -> Result<Self> {
        let config: Self = match format {
            Format::Toml => toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?,
            Format::Json => {
                serde_json::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text, Format::from_path(path))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(HarnessError::config(
                "n",
                "symmetry order must be at least 2",
            ));
        }
        if self.realizations == 0 {
            return Err(HarnessError::config("realizations", "must be positive"));
        }
        if self.replicas == 0 {
            return Err(HarnessError::config("replicas", "must be positive"));
        }
        if self.workers == Some(0) {
            return Err(HarnessError::config("workers", "must be positive"));
        }
        if self.sizes.is_empty() && self.l_equals_t.is_empty() {
            return Err(HarnessError::config(
                "sizes",
                "no lattice sizes given (set `sizes` or `l_equals_t`)",
            ));
        }
        for (i, (l, t)) in self.size_list().iter().enumerate() {
            if let Err(e) = TorusLattice::new(*l, *t) {
                let field = if i < self.sizes.len() {
                    format!("sizes[{i}]")
                } else {
                    format!("l_equals_t[{}]", i - self.sizes.len())
                };
                return Err(HarnessError::config(field, e.to_string()));
            }
        }
        match &self.channel {
            ChannelSpec::Temperature => {
                if self.temperatures.is_empty() {
                    return Err(HarnessError::config(
                        "temperatures",
                        "temperature grid is empty",
                    ));
                }
                for (i, t) in self.temperatures.iter().enumerate() {
                    if let Err(e) = ClockChannel::from_temperature(self.n, *t) {
                        return Err(HarnessError::config(
                            format!("temperatures[{i}]"),
                            e.to_string(),
                        ));
                    }
                }
            }
            ChannelSpec::Couplings { betas } => {
                if !self.temperatures.is_empty() {
                    return Err(HarnessError::config(
                        "temperatures",
                        "not used with channel.kind = \"couplings\"",
                    ));
                }
                if betas.is_empty() {
                    return Err(HarnessError::config(
                        "channel.betas",
                        "coupling grid is empty",
                    ));
                }
                for (i, b) in betas.iter().enumerate() {
                    let path = format!("channel.betas[{i}]");
                    if b.len() != coupling_len(self.n) {
                        return Err(HarnessError::config(
                            path,
                            format!("expected {} couplings", coupling_len(self.n)),
                        ));
                    }
                    if !(b[1] > 0.0) {
                        return Err(HarnessError::config(path, "β_1 must be positive"));
                    }
                    ClockChannel::from_couplings(self.n, b)
                        .map_err(|e| HarnessError::config(path, e.to_string()))?;
                }
            }
        }
        self.schedule
            .to_schedule()
            .map_err(|e| HarnessError::config("schedule", e.to_string()))?;
        if self.mode == Mode::Local || (self.mode == Mode::OracleCheck && self.oracle.correlator) {
            self.local
                .schedule
                .to_schedule()
                .map_err(|e| HarnessError::config("local.schedule", e.to_string()))?;
        }
        if self.estimator == Estimator::Transfer {
            if self.mode == Mode::Local || self.mode == Mode::OracleCheck {
                return Err(HarnessError::config(
                    "estimator",
                    "transfer applies to sector modes only",
                ));
            }
            for (l, _) in self.size_list() {
                if (self.n as f64).powi(l as i32) > MAX_TRANSFER_STATES as f64 {
                    return Err(HarnessError::config(
                        "estimator",
                        format!(
                            "transfer needs N^L <= {MAX_TRANSFER_STATES}, got N={} L={l}",
                            self.n
                        ),
                    ));
                }
            }
        }
        if !(self.oracle.tolerance >= 0.0) || !(self.oracle.sigmas >= 0.0) {
            return Err(HarnessError::config(
                "oracle",
                "tolerance and sigmas must be non-negative",
            ));
        }
        Ok(())
    }

    /// `(L, t)` pairs in sweep order.
    pub fn size_list(&self) -> Vec<(usize, usize)> {
        self.sizes
            .iter()
            .copied()
            .chain(self.l_equals_t.iter().map(|l| (*l, *l)))
            .collect()
    }

    /// Grid points ordered by size, then by temperature.
    pub fn grid(&self) -> Result<Vec<GridPoint>> {
        let channels: Vec<(f64, ClockChannel)> = match &self.channel {
            ChannelSpec::Temperature => self
                .temperatures
                .iter()
                .map(|t| Ok((*t, ClockChannel::from_temperature(self.n, *t)?)))
                .collect::<zn_sharpening::Result<_>>()?,
            ChannelSpec::Couplings { betas } => betas
                .iter()
                .map(|b| Ok((1.0 / b[1], ClockChannel::from_couplings(self.n, b)?)))
                .collect::<zn_sharpening::Result<_>>()?,
        };
        Ok(self
            .size_list()
            .into_iter()
            .flat_map(|(l, t)| {
                channels.iter().map(move |(temp, ch)| GridPoint {
                    l,
                    t,
                    temperature: *temp,
                    channel: ch.clone(),
                })
            })
            .collect())
    }

    /// SHA-256 of the canonical JSON form with output-only fields removed.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            for key in UNHASHED_FIELDS {
                map.remove(key);
            }
        }
        let canonical = serde_json::to_string(&value).expect("config serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Worker count: the environment override, then the config, then all cores.
    pub fn resolved_workers(&self) -> Result<usize> {
        if let Ok(raw) = std::env::var(WORKERS_ENV) {
            return match raw.trim().parse::<usize>() {
                Ok(w) if w > 0 => Ok(w),
                _ => Err(HarnessError::config(
                    WORKERS_ENV,
                    format!("not a positive integer: {raw:?}"),
                )),
            };
        }
        Ok(self.workers.unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        }))
    }
}
