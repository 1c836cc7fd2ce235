//! Born-rule sampling of measurement records.
//!
//! A record is drawn by first sampling the hidden state (uniform temporal
//! sector, uniform spatial sector, uniform flow inside it) and then one
//! outcome per link from the channel. The marginal law of the record is
//! then `P(s) ∝ Σ_Q Z[s, Q]`, which puts the disordered model on its
//! Nishimori line without ever evaluating a partition function.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ClockChannel;
use crate::flow::{temporal_flux_at_row, spatial_flux_at_column, uniform_gauss_sample, FlowConfig};
use crate::lattice::{Cycle, TorusLattice};
use crate::rng::{stream, SimRng, StreamPurpose};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub master_seed: Option<u64>,
    pub index: Option<u64>,
    /// Sector of the hidden flow. Diagnostic only; no estimator reads it.
    pub hidden_temporal: u32,
    pub hidden_spatial: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub n: u32,
    pub s: Vec<u32>,
    pub provenance: Provenance,
}

impl DisorderRealization {
    /// A bare record with no sampling history, e.g. for oracle tests.
    pub fn from_record(n: u32, s: Vec<u32>) -> Self {
        Self {
            n,
            s,
            provenance: Provenance {
                master_seed: None,
                index: None,
                hidden_temporal: 0,
                hidden_spatial: 0,
            },
        }
    }

    /// The record's own flux through the frame cuts, `(γ̂(s), spatial)`.
    /// For a frustration-free record this is the sector it favors.
    pub fn frustration(&self, lattice: &TorusLattice) -> (u32, u32) {
        let as_flow = FlowConfig { n: self.n, k: self.s.clone() };
        (
            temporal_flux_at_row(&as_flow, lattice, 0),
            spatial_flux_at_column(&as_flow, lattice, 0),
        )
    }
}

/// Cumulative table for drawing the offset `d = k − s` with probability `p_d`.
struct OffsetSampler {
    cumulative: Vec<f64>,
}

impl OffsetSampler {
    fn new(channel: &ClockChannel) -> Self {
        let mut acc = 0.0;
        let cumulative = channel
            .weights()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cumulative }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        self.cumulative
            .iter()
            .position(|c| u < *c)
            .unwrap_or(self.cumulative.len() - 1) as u32
    }
}

/// Outcomes for a given hidden flow: `s_μ = k_μ − d_μ`, `d_μ ~ p`.
pub fn measure_flow<R: Rng + ?Sized>(flow: &FlowConfig, channel: &ClockChannel, rng: &mut R) -> Vec<u32> {
    let n = flow.n;
    let sampler = OffsetSampler::new(channel);
    flow.k.iter().map(|&k| (k + n - sampler.draw(rng)) % n).collect()
}

pub fn sample_disorder<R: Rng + ?Sized>(
    lattice: &TorusLattice,
    channel: &ClockChannel,
    rng: &mut R,
) -> DisorderRealization {
    let n = channel.n() as u32;
    let hidden_temporal = rng.random_range(0..n);
    let hidden_spatial = rng.random_range(0..n);
    let flow = uniform_gauss_sample(lattice, n, rng, hidden_temporal, hidden_spatial);
    let s = measure_flow(&flow, channel, rng);
    DisorderRealization {
        n,
        s,
        provenance: Provenance {
            master_seed: None,
            index: None,
            hidden_temporal,
            hidden_spatial,
        },
    }
}

/// Realization `index` of the run keyed by `master_seed`.
pub fn realization(lattice: &TorusLattice, channel: &ClockChannel, master_seed: u64, index: u64) -> DisorderRealization {
    let mut rng: SimRng = stream(master_seed, StreamPurpose::Disorder, index, 0);
    let mut r = sample_disorder(lattice, channel, &mut rng);
    r.provenance.master_seed = Some(master_seed);
    r.provenance.index = Some(index);
    r
}

/// `s'_μ = s_μ − q` along γ; `Z[s', Q] = Z[s, Q + q]`.
pub fn twist_disorder(record: &DisorderRealization, lattice: &TorusLattice, q: u32) -> DisorderRealization {
    twist_along(record, lattice, q, Cycle::Temporal)
}

/// Same relabeling along either winding path.
pub fn twist_along(record: &DisorderRealization, lattice: &TorusLattice, q: u32, cycle: Cycle) -> DisorderRealization {
    let n = record.n;
    let q = q % n;
    let mut out = record.clone();
    for &l in lattice.winding_path(cycle) {
        out.s[l] = (out.s[l] + n - q) % n;
    }
    out
}

/// Twist by both windings so the dual-spin model (which only generates
/// zero-winding flows) represents sector `(q_temporal, q_spatial)`.
pub fn twist_to_sector(record: &DisorderRealization, lattice: &TorusLattice, q_temporal: u32, q_spatial: u32) -> DisorderRealization {
    let once = twist_along(record, lattice, q_temporal, Cycle::Temporal);
    twist_along(&once, lattice, q_spatial, Cycle::Spatial)
}
