//! One task: a single disorder realization at a single grid point.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use zn_sharpening::disorder::twist_to_sector;
use zn_sharpening::metropolis::two_replica_correlator;
use zn_sharpening::observables::{
    record_entropy, record_ln_ratio, record_order_parameter, record_sector_deviation,
};
use zn_sharpening::oracle::{exact_correlator, SectorTable};
use zn_sharpening::rng::{stream, stream_id, StreamPurpose};
use zn_sharpening::worm::replicated_sector_probabilities;
use zn_sharpening::{realization, DisorderRealization, SectorEstimate, TorusLattice};

use crate::config::{Estimator, ExperimentConfig, GridPoint, Mode};
use crate::error::Result;

/// Where a task sits in the sweep and which streams it draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskKey {
    pub id: usize,
    pub point: usize,
    pub realization: usize,
}

impl TaskKey {
    /// Index shared by every chain stream of this task.
    pub fn chain_index(&self) -> u64 {
        ((self.point as u64) << 32) | self.realization as u64
    }

    pub fn disorder_stream(&self) -> u64 {
        stream_id(StreamPurpose::Disorder, self.realization as u64, 0)
    }

    pub fn chain_stream(&self) -> u64 {
        stream_id(StreamPurpose::WormChain, self.chain_index(), 0)
    }
}

/// Tasks in sweep order: grid point major, realization minor.
pub fn task_keys(points: usize, realizations: usize) -> Vec<TaskKey> {
    (0..points)
        .flat_map(|point| {
            (0..realizations).map(move |realization| TaskKey {
                id: point * realizations + realization,
                point,
                realization,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TaskDiagnostics {
    /// Chains run, including spares.
    pub chains: usize,
    pub steps: u64,
    pub closures: u64,
    pub acceptance_rate: f64,
    pub tau: f64,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlator {
    pub value: f64,
    pub stderr: f64,
    pub exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    /// `P(Q|s)`, absent in local mode.
    pub probabilities: Option<Vec<f64>>,
    pub probability_stderr: Option<Vec<f64>>,
    /// Enumerated `P(Q|s)` (oracle check only).
    pub exact: Option<Vec<f64>>,
    pub correlator: Option<Correlator>,
    /// Per-record observable values keyed by CSV name. A missing key means
    /// the observable is undefined for this record.
    pub values: BTreeMap<String, f64>,
    pub diagnostics: TaskDiagnostics,
}

/// One line of `results.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub key: TaskKey,
    pub record: Option<TaskRecord>,
    pub error: Option<String>,
}

/// Debug dump of a task's inputs and sector estimate.
#[derive(Debug, Clone, Serialize)]
pub struct TaskDump<'a> {
    pub key: TaskKey,
    pub l: usize,
    pub t: usize,
    pub temperature: f64,
    pub disorder: &'a DisorderRealization,
    pub estimate: Option<&'a SectorEstimate>,
}

pub struct TaskOutput {
    pub result: TaskResult,
    pub dump: Option<String>,
}

pub fn run_task(config: &ExperimentConfig, point: &GridPoint, key: TaskKey) -> TaskOutput {
    match compute(config, point, key) {
        Ok((record, dump)) => TaskOutput {
            result: TaskResult {
                key,
                record: Some(record),
                error: None,
            },
            dump,
        },
        Err(e) => TaskOutput {
            result: TaskResult {
                key,
                record: None,
                error: Some(e.to_string()),
            },
            dump: None,
        },
    }
}

fn compute(
    config: &ExperimentConfig,
    point: &GridPoint,
    key: TaskKey,
) -> Result<(TaskRecord, Option<String>)> {
    let lattice = TorusLattice::new(point.l, point.t)?;
    let channel = &point.channel;
    let n = config.n;
    let disorder = realization(&lattice, channel, config.seed, key.realization as u64);
    let mut values = BTreeMap::new();
    let mut diagnostics = TaskDiagnostics::default();

    if config.mode == Mode::Local {
        let correlator = local_correlator(config, &lattice, point, &disorder, key, false)?;
        values.insert("local_sharpening".to_string(), correlator.value);
        diagnostics.chains = 1;
        let record = TaskRecord {
            probabilities: None,
            probability_stderr: None,
            exact: None,
            correlator: Some(correlator),
            values,
            diagnostics,
        };
        let dump = config
            .debug_dump
            .then(|| dump_json(key, point, &disorder, None));
        return Ok((record, dump));
    }

    let (estimate, table) = match config.estimator {
        Estimator::Worm => {
            let schedule = config.schedule.to_schedule()?;
            let (estimate, chains) = replicated_sector_probabilities(
                &lattice,
                channel,
                &disorder,
                &schedule,
                config.replicas,
                config.spare_replicas,
                |replica| {
                    stream(
                        config.seed,
                        StreamPurpose::WormChain,
                        key.chain_index(),
                        replica,
                    )
                },
            )?;
            diagnostics.chains = chains.len();
            diagnostics.steps = chains.iter().map(|c| c.steps).sum();
            diagnostics.closures = chains.iter().map(|c| c.closures).sum();
            let accepted: u64 = chains.iter().map(|c| c.accepted).sum();
            diagnostics.acceptance_rate = accepted as f64 / diagnostics.steps.max(1) as f64;
            diagnostics.tau = estimate.tau;
            diagnostics.ess = estimate.ess;
            (estimate, None)
        }
        Estimator::Transfer => {
            let table = SectorTable::by_transfer(&lattice, channel, &disorder)?;
            let estimate = SectorEstimate {
                probabilities: table.probabilities(),
                replicas: Vec::new(),
                tau: 0.0,
                ess: f64::INFINITY,
                closures: 0,
            };
            (estimate, Some(table))
        }
    };
    let probs = &estimate.probabilities;
    let stderr = if table.is_some() {
        vec![0.0; n]
    } else {
        estimate.stderr()
    };

    match config.mode {
        Mode::Sharpening => {
            values.insert("order_parameter".into(), record_order_parameter(probs));
        }
        Mode::CoherentInfo => {
            let ci = record_entropy(probs);
            values.insert("coherent_information".into(), ci);
            values.insert(
                "coherent_information_normalized".into(),
                ci / (n as f64).ln(),
            );
        }
        Mode::Scaling => {
            values.insert("order_parameter".into(), record_order_parameter(probs));
            values.insert("sector_deviation".into(), record_sector_deviation(probs));
            let ln_ratio = match &table {
                Some(t) => Some(t.ln_ratio()),
                None => record_ln_ratio(probs),
            };
            if let Some(v) = ln_ratio {
                values.insert("ln_ratio".into(), v);
            }
        }
        Mode::OracleCheck => {
            let exact = SectorTable::compute(&lattice, channel, &disorder)?.probabilities();
            values.insert("order_parameter".into(), record_order_parameter(probs));
            values.insert(
                "order_parameter_exact".into(),
                record_order_parameter(&exact),
            );
            values.insert("coherent_information".into(), record_entropy(probs));
            values.insert("coherent_information_exact".into(), record_entropy(&exact));
            let err = probs
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            values.insert("max_probability_error".into(), err);
            let correlator = if config.oracle.correlator {
                let c = local_correlator(config, &lattice, point, &disorder, key, true)?;
                values.insert("local_correlator".into(), c.value);
                if let Some(exact) = c.exact {
                    values.insert("local_correlator_exact".into(), exact);
                }
                Some(c)
            } else {
                None
            };
            let dump = config
                .debug_dump
                .then(|| dump_json(key, point, &disorder, Some(&estimate)));
            let record = TaskRecord {
                probabilities: Some(probs.clone()),
                probability_stderr: Some(stderr),
                exact: Some(exact),
                correlator,
                values,
                diagnostics,
            };
            return Ok((record, dump));
        }
        Mode::Local => unreachable!("handled above"),
    }
    let dump = config
        .debug_dump
        .then(|| dump_json(key, point, &disorder, Some(&estimate)));
    Ok((
        TaskRecord {
            probabilities: Some(probs.clone()),
            probability_stderr: Some(stderr),
            exact: None,
            correlator: None,
            values,
            diagnostics,
        },
        dump,
    ))
}

/// Two-replica Metropolis correlator on the record twisted to its own
/// frustration sector, optionally with its enumerated value.
fn local_correlator(
    config: &ExperimentConfig,
    lattice: &TorusLattice,
    point: &GridPoint,
    disorder: &DisorderRealization,
    key: TaskKey,
    with_exact: bool,
) -> Result<Correlator> {
    let (qt, qs) = disorder.frustration(lattice);
    let twisted = twist_to_sector(disorder, lattice, qt, qs);
    let pair = config.local.pair(lattice);
    let schedule = config.local.schedule.to_schedule()?;
    let mut rng = stream(
        config.seed,
        StreamPurpose::MetropolisChain,
        key.chain_index(),
        0,
    );
    let est = two_replica_correlator(lattice, &point.channel, &twisted, pair, &schedule, &mut rng)?;
    let exact = if with_exact {
        Some(exact_correlator(lattice, &point.channel, &twisted, pair)?)
    } else {
        None
    };
    Ok(Correlator {
        value: est.value,
        stderr: est.stderr,
        exact,
    })
}

fn dump_json(
    key: TaskKey,
    point: &GridPoint,
    disorder: &DisorderRealization,
    estimate: Option<&SectorEstimate>,
) -> String {
    let dump = TaskDump {
        key,
        l: point.l,
        t: point.t,
        temperature: point.temperature,
        disorder,
        estimate,
    };
    serde_json::to_string_pretty(&dump).expect("dump serializes")
}
