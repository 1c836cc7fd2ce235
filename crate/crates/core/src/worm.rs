//! Worm sampler over divergence-free flows at fixed disorder.
//!
//! The chain state is a flow plus an optional open string carrying charge
//! `q`: the tail holds divergence `−q` and the head `+q`. Moving the head
//! across a link shifts that link by `∓q` and is accepted with the
//! Metropolis ratio of `Π p_{k−s}`. Whenever head and tail coincide the
//! configuration is a closed flow and its windings are recorded. Winding
//! sectors change only when a string wraps the torus, so no sector is ever
//! fixed by hand.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ClockChannel;
use crate::disorder::{twist_to_sector, DisorderRealization};
use crate::error::{Error, Result};
use crate::flow::{add_winding_string_in_place, flow_from_dual_spins, temporal_winding, spatial_winding, FlowConfig};
use crate::lattice::{Cycle, TorusLattice};
use crate::metropolis::{ordered_start, Schedule};
use crate::stats::{integrated_autocorr_time, jackknife_error};

const TUNE_START: f64 = 0.5;
const TUNE_STAGES: usize = 6;
const RETUNE_ATTEMPTS: usize = 4;

/// Closed-flow start consistent with the record: the record's own
/// frustration sector, filled with the best dual-spin gradient found by
/// greedy growth and zero-temperature relaxation.
pub fn initial_flow(lattice: &TorusLattice, channel: &ClockChannel, record: &DisorderRealization) -> FlowConfig {
    let (qt, qs) = record.frustration(lattice);
    let twisted = twist_to_sector(record, lattice, qt, qs);
    let theta = ordered_start(lattice, channel, &twisted);
    let mut flow = flow_from_dual_spins(&theta, lattice);
    add_winding_string_in_place(&mut flow, lattice, qt, Cycle::Temporal);
    add_winding_string_in_place(&mut flow, lattice, qs, Cycle::Spatial);
    flow
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WormState {
    pub flow: FlowConfig,
    pub head: usize,
    pub tail: usize,
    /// Charge carried by the open string; meaningless while closed.
    pub charge: u32,
    pub open: bool,
    /// Running flux through the frame cuts; equals the windings when closed.
    pub flux: (u32, u32),
}

impl WormState {
    pub fn closed(flow: FlowConfig, lattice: &TorusLattice) -> Self {
        debug_assert!(flow.is_divergence_free(lattice));
        let flux = (temporal_winding(&flow, lattice), spatial_winding(&flow, lattice));
        Self {
            flow,
            head: 0,
            tail: 0,
            charge: 0,
            open: false,
            flux,
        }
    }

    /// Windings of the current flow; `None` while a string is open.
    pub fn windings(&self) -> Option<(u32, u32)> {
        (!self.open).then_some(self.flux)
    }
}

/// Per-record tables: weight ratio for every `(d_old, d_new)` and the
/// open-string weight for every head–tail distance.
///
/// The open-string weight `η(d)` multiplies the weight of every open
/// configuration whose head and tail are `d` apart (torus Manhattan
/// distance); closed configurations keep `η(0) = 1`. Any positive `η`
/// leaves the closed-flow distribution unchanged and only reshapes how
/// long the string stays open.
pub struct WormKernel<'a> {
    lattice: &'a TorusLattice,
    record: &'a [u32],
    n: u32,
    ratio: Vec<f64>,
    open_weight: Vec<f64>,
    coords: Vec<(u32, u32)>,
}

impl<'a> WormKernel<'a> {
    pub fn new(lattice: &'a TorusLattice, channel: &ClockChannel, record: &'a DisorderRealization) -> Result<Self> {
        if record.n as usize != channel.n() {
            return Err(Error::Incompatible(format!(
                "record over Z_{} with channel over Z_{}",
                record.n,
                channel.n()
            )));
        }
        if record.s.len() != lattice.num_links() {
            return Err(Error::Incompatible(format!(
                "record has {} links, lattice {}",
                record.s.len(),
                lattice.num_links()
            )));
        }
        let n = channel.n();
        let lw = channel.log_weights();
        let mut ratio = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                ratio[a * n + b] = (lw[b] - lw[a]).exp();
            }
        }
        let coords = (0..lattice.num_sites())
            .map(|s| {
                let (x, y) = lattice.coords(s);
                (x as u32, y as u32)
            })
            .collect();
        Ok(Self {
            lattice,
            record: &record.s,
            n: n as u32,
            ratio,
            open_weight: vec![1.0; lattice.width() / 2 + lattice.height() / 2 + 1],
            coords,
        })
    }

    /// Replace the open-string weights by `exp(log_weights[d] − log_weights[0])`.
    pub fn with_open_weights(mut self, log_weights: &[f64]) -> Result<Self> {
        if log_weights.len() != self.open_weight.len() || log_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Incompatible(format!(
                "{} open-string weights for {} distances",
                log_weights.len(),
                self.open_weight.len()
            )));
        }
        self.set_open_weights(log_weights);
        Ok(self)
    }

    fn set_open_weights(&mut self, log_weights: &[f64]) {
        for (w, l) in self.open_weight.iter_mut().zip(log_weights) {
            *w = (l - log_weights[0]).exp();
        }
    }

    /// Largest head–tail distance on this torus.
    pub fn max_distance(&self) -> usize {
        self.open_weight.len() - 1
    }

    /// Manhattan distance between two sites with periodic wrap.
    #[inline]
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let (ax, ay) = self.coords[a];
        let (bx, by) = self.coords[b];
        let (w, h) = (self.lattice.width() as u32, self.lattice.height() as u32);
        let dx = ax.abs_diff(bx);
        let dy = ay.abs_diff(by);
        (dx.min(w - dx) + dy.min(h - dy)) as usize
    }

    /// Probability of accepting a change of the bond offset from `d_old` to
    /// `d_new` when the head–tail distance does not change weight.
    pub fn acceptance(&self, d_old: u32, d_new: u32) -> f64 {
        self.ratio[(d_old * self.n + d_new) as usize].min(1.0)
    }

    /// One proposal. Returns `(accepted, closed_after)`.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, state: &mut WormState, rng: &mut R) -> (bool, bool) {
        let n = self.n;
        if !state.open {
            state.tail = rng.random_range(0..self.lattice.num_sites());
            state.head = state.tail;
            state.charge = rng.random_range(1..n);
        }
        let (link, sign) = self.lattice.incidence(state.head)[rng.random_range(0..4usize)];
        let link = link as usize;
        let shift = if sign > 0 { n - state.charge } else { state.charge };
        let k_old = state.flow.k[link];
        let d_old = (k_old + n - self.record[link]) % n;
        let d_new = (d_old + shift) % n;
        let (from, to) = self.lattice.link_ends(link);
        let target = if sign > 0 { to } else { from };
        let a = self.ratio[(d_old * n + d_new) as usize] * self.open_weight[self.distance(target, state.tail)]
            / self.open_weight[self.distance(state.head, state.tail)];
        let accepted = a >= 1.0 || rng.random::<f64>() < a;
        if accepted {
            state.flow.k[link] = (k_old + shift) % n;
            match self.lattice.cut_of(link) {
                Some(Cycle::Temporal) => state.flux.0 = (state.flux.0 + shift) % n,
                Some(Cycle::Spatial) => state.flux.1 = (state.flux.1 + shift) % n,
                None => {}
            }
            state.head = target;
        }
        state.open = state.head != state.tail;
        (accepted, !state.open)
    }
}

/// Tune the open-string weights so that no head–tail distance is visited
/// more often than the closed state. Weights only ever fall below one, so
/// strings that are naturally rare keep their weight while strings pinned
/// between two record defects are suppressed. The chain runs with changing
/// weights, so nothing sampled here may be measured. Tuning continues from
/// `log_weights` (one entry per distance); returns `(steps, accepted)`.
pub fn tune_open_weights<R: Rng + ?Sized>(
    kernel: &mut WormKernel<'_>,
    state: &mut WormState,
    log_weights: &mut [f64],
    sweeps: usize,
    rng: &mut R,
) -> (u64, u64) {
    assert_eq!(log_weights.len(), kernel.max_distance() + 1);
    let sweep_len = kernel.lattice.num_links();
    let mut accepted = 0u64;
    log_weights[0] = 0.0;
    for l in log_weights.iter_mut() {
        *l = l.min(0.0);
    }
    kernel.set_open_weights(log_weights);
    for stage in 0..TUNE_STAGES {
        let factor = TUNE_START * 0.5f64.powi(stage as i32);
        let (up, down) = (factor.exp(), (-factor).exp());
        let stage_sweeps = sweeps * (stage + 1) / TUNE_STAGES - sweeps * stage / TUNE_STAGES;
        for _ in 0..stage_sweeps * sweep_len {
            accepted += kernel.step(state, rng).0 as u64;
            let d = kernel.distance(state.head, state.tail);
            if d == 0 {
                for (l, w) in log_weights[1..].iter_mut().zip(&mut kernel.open_weight[1..]) {
                    if *l < 0.0 {
                        *l = (*l + factor).min(0.0);
                        *w = if *l == 0.0 { 1.0 } else { *w * up };
                    }
                }
            } else {
                log_weights[d] -= factor;
                kernel.open_weight[d] *= down;
            }
        }
    }
    kernel.set_open_weights(log_weights);
    ((sweeps * sweep_len) as u64, accepted)
}

/// Closure counts by temporal winding, kept per measurement interval so
/// that errors can be estimated by blocking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindingHistogram {
    pub n: u32,
    /// Total closures per temporal sector.
    pub counts: Vec<u64>,
    /// Total closures per spatial sector (diagnostic).
    pub spatial_counts: Vec<u64>,
    /// Per-interval temporal counts, `intervals[i][q]`. Empty when built
    /// from totals only.
    pub intervals: Vec<Vec<u64>>,
}

impl WindingHistogram {
    pub fn new(n: u32) -> Self {
        Self {
            n,
            counts: vec![0; n as usize],
            spatial_counts: vec![0; n as usize],
            intervals: Vec::new(),
        }
    }

    /// Histogram with totals only; errors then fall back to per-closure deletion.
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidOrder(counts.len()));
        }
        let n = counts.len() as u32;
        Ok(Self {
            n,
            counts,
            spatial_counts: vec![0; n as usize],
            intervals: Vec::new(),
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Append another chain's intervals (same record, independent stream).
    pub fn merge(&mut self, other: &WindingHistogram) -> Result<()> {
        if other.n != self.n {
            return Err(Error::Incompatible(format!("Z_{} histogram merged into Z_{}", other.n, self.n)));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.spatial_counts.iter_mut().zip(&other.spatial_counts) {
            *a += b;
        }
        self.intervals.extend(other.intervals.iter().cloned());
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub steps: u64,
    pub accepted: u64,
    pub closures: u64,
    pub sweeps: u64,
    pub acceptance_rate: f64,
    pub tau: f64,
    pub ess: f64,
}

/// `P(Q|s)` with jackknife replicas for derived quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorEstimate {
    pub probabilities: Vec<f64>,
    /// `(weight, leave-one-out probabilities)`.
    pub replicas: Vec<(f64, Vec<f64>)>,
    /// Integrated autocorrelation time in measurement intervals.
    pub tau: f64,
    pub ess: f64,
    pub closures: u64,
}

impl SectorEstimate {
    pub fn from_histogram(hist: &WindingHistogram) -> Result<Self> {
        let n = hist.n as usize;
        let total = hist.total();
        if total == 0 {
            return Err(Error::EmptyHistogram);
        }
        let probs: Vec<f64> = hist.counts.iter().map(|c| *c as f64 / total as f64).collect();
        let sum_check: u64 = hist.intervals.iter().flatten().sum();
        let usable = hist.intervals.len() >= 2 && sum_check == total;
        if !usable {
            // Totals only: delete one closure at a time.
            let replicas = if total > 1 {
                (0..n)
                    .filter(|&q| hist.counts[q] > 0)
                    .map(|q| {
                        let mut c: Vec<f64> = hist.counts.iter().map(|&v| v as f64).collect();
                        c[q] -= 1.0;
                        let t = (total - 1) as f64;
                        (hist.counts[q] as f64, c.iter().map(|v| v / t).collect())
                    })
                    .collect()
            } else {
                Vec::new()
            };
            return Ok(Self {
                probabilities: probs,
                replicas,
                tau: 0.5,
                ess: total as f64,
                closures: total,
            });
        }

        let intervals = &hist.intervals;
        let ni = intervals.len();
        let sizes: Vec<f64> = intervals.iter().map(|c| c.iter().sum::<u64>() as f64).collect();
        let tau = (0..n)
            .filter(|&q| probs[q] > 0.0 && probs[q] < 1.0)
            .map(|q| {
                let series: Vec<f64> = intervals
                    .iter()
                    .zip(&sizes)
                    .map(|(c, m)| c[q] as f64 - probs[q] * m)
                    .collect();
                integrated_autocorr_time(&series)
            })
            .fold(0.5, f64::max);
        let block = ((2.0 * tau).ceil() as usize).max(1);
        let blocks = (ni / block).max(2).min(ni);
        let bounds: Vec<usize> = (0..=blocks).map(|b| b * ni / blocks).collect();
        let mut replicas = Vec::with_capacity(blocks);
        for b in 0..blocks {
            let mut c: Vec<f64> = hist.counts.iter().map(|&v| v as f64).collect();
            for iv in &intervals[bounds[b]..bounds[b + 1]] {
                for q in 0..n {
                    c[q] -= iv[q] as f64;
                }
            }
            let t: f64 = c.iter().sum();
            if t > 0.0 {
                replicas.push((1.0, c.iter().map(|v| v / t).collect()));
            }
        }
        Ok(Self {
            probabilities: probs,
            replicas,
            tau,
            ess: ni as f64 / (2.0 * tau),
            closures: total,
        })
    }

    /// Jackknife standard error of any function of the sector probabilities.
    pub fn error_of<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        let reps: Vec<(f64, f64)> = self.replicas.iter().map(|(w, p)| (*w, f(p))).collect();
        jackknife_error(&reps)
    }

    pub fn stderr(&self) -> Vec<f64> {
        (0..self.probabilities.len())
            .map(|q| self.error_of(|p| p[q]))
            .collect()
    }
}

/// Run one chain, calling `observer` with the flow and its windings at
/// every closure after burn-in.
pub fn run_chain_observed<R, F>(
    lattice: &TorusLattice,
    channel: &ClockChannel,
    record: &DisorderRealization,
    schedule: &Schedule,
    rng: &mut R,
    mut observer: F,
) -> Result<(WindingHistogram, ChainDiagnostics)>
where
    R: Rng + ?Sized,
    F: FnMut(&FlowConfig, (u32, u32)),
{
    schedule.validate()?;
    let mut kernel = WormKernel::new(lattice, channel, record)?;
    let mut state = WormState::closed(initial_flow(lattice, channel, record), lattice);
    let sweep_len = lattice.num_links();
    // Tune the open-string weights over most of burn-in, then freeze them
    // and let the chain settle. A settling stretch that rarely closes means
    // a trap was found late, so tuning resumes before trying again.
    let tuning = schedule.burn_in - schedule.burn_in / 4;
    let settling = schedule.burn_in - tuning;
    let mut log_weights = vec![0.0; kernel.max_distance() + 1];
    let (mut steps, mut accepted) = tune_open_weights(&mut kernel, &mut state, &mut log_weights, tuning, rng);
    for attempt in 0..=RETUNE_ATTEMPTS {
        let mut closures = 0;
        for _ in 0..settling * sweep_len {
            let (acc, closed) = kernel.step(&mut state, rng);
            accepted += acc as u64;
            closures += closed as usize;
            steps += 1;
        }
        if closures >= settling || attempt == RETUNE_ATTEMPTS {
            break;
        }
        let (s, a) = tune_open_weights(&mut kernel, &mut state, &mut log_weights, tuning.div_ceil(2), rng);
        steps += s;
        accepted += a;
    }
    let kernel = kernel;
    let n = record.n;
    let mut hist = WindingHistogram::new(n);
    hist.intervals.reserve(schedule.measurements);
    let mut closures = 0u64;
    for _ in 0..schedule.measurements {
        let mut interval = vec![0u64; n as usize];
        for _ in 0..schedule.thin * sweep_len {
            let (acc, closed) = kernel.step(&mut state, rng);
            accepted += acc as u64;
            steps += 1;
            if closed {
                let (qt, qs) = state.flux;
                interval[qt as usize] += 1;
                hist.spatial_counts[qs as usize] += 1;
                closures += 1;
                debug_assert!(
                    closures % 1024 != 0
                        || (temporal_winding(&state.flow, lattice), spatial_winding(&state.flow, lattice)) == state.flux,
                    "incremental winding drifted"
                );
                observer(&state.flow, state.flux);
            }
        }
        for (t, c) in hist.counts.iter_mut().zip(&interval) {
            *t += c;
        }
        hist.intervals.push(interval);
    }
    let estimate_tau = SectorEstimate::from_histogram(&hist).map(|e| e.tau).unwrap_or(0.5);
    let diagnostics = ChainDiagnostics {
        steps,
        accepted,
        closures,
        sweeps: ((schedule.burn_in + schedule.measurements * schedule.thin) as u64),
        acceptance_rate: accepted as f64 / steps.max(1) as f64,
        tau: estimate_tau,
        ess: schedule.measurements as f64 / (2.0 * estimate_tau),
    };
    Ok((hist, diagnostics))
}

pub fn run_chain<R: Rng + ?Sized>(
    lattice: &TorusLattice,
    channel: &ClockChannel,
    record: &DisorderRealization,
    schedule: &Schedule,
    rng: &mut R,
) -> Result<(WindingHistogram, ChainDiagnostics)> {
    run_chain_observed(lattice, channel, record, schedule, rng, |_, _| {})
}

pub fn sector_probabilities<R: Rng + ?Sized>(
    lattice: &TorusLattice,
    channel: &ClockChannel,
    record: &DisorderRealization,
    schedule: &Schedule,
    rng: &mut R,
) -> Result<SectorEstimate> {
    let (hist, _) = run_chain(lattice, channel, record, schedule, rng)?;
    SectorEstimate::from_histogram(&hist)
}

/// Sector probabilities from `replicas` independent chains merged in
/// replica order. Should every chain end without a single closure, further
/// replicas are run, up to `spare` of them, before giving up.
/// `rng_for(replica)` supplies each chain's stream.
pub fn replicated_sector_probabilities<R, F>(
    lattice: &TorusLattice,
    channel: &ClockChannel,
    record: &DisorderRealization,
    schedule: &Schedule,
    replicas: usize,
    spare: usize,
    mut rng_for: F,
) -> Result<(SectorEstimate, Vec<ChainDiagnostics>)>
where
    R: Rng,
    F: FnMut(u64) -> R,
{
    if replicas == 0 {
        return Err(Error::InvalidSchedule("replicas"));
    }
    let mut merged = WindingHistogram::new(record.n);
    let mut diagnostics = Vec::with_capacity(replicas);
    for replica in 0..replicas + spare {
        if replica >= replicas && merged.total() > 0 {
            break;
        }
        let mut rng = rng_for(replica as u64);
        let (hist, diag) = run_chain(lattice, channel, record, schedule, &mut rng)?;
        merged.merge(&hist)?;
        diagnostics.push(diag);
    }
    Ok((SectorEstimate::from_histogram(&merged)?, diagnostics))
}
