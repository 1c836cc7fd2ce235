//! Single-site Metropolis sampler for the dual clock model at fixed disorder.
//!
//! `H[θ; s] = −Σ_links Σ_m β_m cos(2πm(θ_{p1} − θ_{p2} − s_link)/N)`.
//! Local moves never change the homology sector of the implied flow, so a
//! chain explores exactly the sector encoded in the (twisted) record.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ClockChannel;
use crate::disorder::DisorderRealization;
use crate::error::{Error, Result};
use crate::flow::DualSpinConfig;
use crate::lattice::TorusLattice;
use crate::stats::{integrated_autocorr_time, jackknife_error};

/// Chain schedule shared by the worm and Metropolis samplers, in sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub burn_in: usize,
    pub measurements: usize,
    /// Sweeps between consecutive measurements.
    pub thin: usize,
}

impl Schedule {
    pub fn new(burn_in: usize, measurements: usize, thin: usize) -> Result<Self> {
        let s = Self {
            burn_in,
            measurements,
            thin,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in == 0 {
            return Err(Error::InvalidSchedule("burn_in"));
        }
        if self.measurements == 0 {
            return Err(Error::InvalidSchedule("measurements"));
        }
        if self.thin == 0 {
            return Err(Error::InvalidSchedule("thin"));
        }
        Ok(())
    }
}

/// Bond energy table `ε_d = −Σ_m β_m cos(2πmd/N)` indexed by `d = k − s mod N`.
#[derive(Debug, Clone)]
pub struct BondEnergies {
    n: u32,
    energy: Vec<f64>,
}

impl BondEnergies {
    pub fn new(channel: &ClockChannel) -> Self {
        let n = channel.n();
        let energy = (0..n)
            .map(|d| {
                -channel
                    .couplings()
                    .iter()
                    .enumerate()
                    .map(|(m, b)| b * (2.0 * PI * (m * d) as f64 / n as f64).cos())
                    .sum::<f64>()
            })
            .collect();
        Self { n: n as u32, energy }
    }

    #[inline]
    pub fn of_offset(&self, d: u32) -> f64 {
        self.energy[d as usize]
    }

    #[inline]
    fn bond(&self, theta: &[u32], lattice: &TorusLattice, record: &[u32], link: usize) -> f64 {
        let n = self.n;
        let (p1, p2) = lattice.link_plaquettes(link);
        let d = (theta[p1] + 2 * n - theta[p2] - record[link]) % n;
        self.energy[d as usize]
    }
}

/// Total energy of a dual-spin configuration.
pub fn energy(theta: &DualSpinConfig, lattice: &TorusLattice, channel: &ClockChannel, record: &DisorderRealization) -> f64 {
    let table = BondEnergies::new(channel);
    (0..lattice.num_links())
        .map(|l| table.bond(&theta.theta, lattice, &record.s, l))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinChainState {
    pub theta: DualSpinConfig,
    energy: f64,
}

impl SpinChainState {
    pub fn new(theta: DualSpinConfig, lattice: &TorusLattice, channel: &ClockChannel, record: &DisorderRealization) -> Self {
        let energy = energy(&theta, lattice, channel, record);
        Self { theta, energy }
    }

    /// Cached energy, updated incrementally by accepted moves.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Replace the cached energy by a full recomputation; returns the drift.
    pub fn resync(&mut self, lattice: &TorusLattice, channel: &ClockChannel, record: &DisorderRealization) -> f64 {
        let exact = energy(&self.theta, lattice, channel, record);
        let drift = self.energy - exact;
        self.energy = exact;
        drift
    }
}

/// Precomputed tables for repeated sweeps on one record.
pub struct MetropolisKernel<'a> {
    lattice: &'a TorusLattice,
    record: &'a [u32],
    bonds: BondEnergies,
}

impl<'a> MetropolisKernel<'a> {
    pub fn new(lattice: &'a TorusLattice, channel: &ClockChannel, record: &'a DisorderRealization) -> Self {
        Self {
            lattice,
            record: &record.s,
            bonds: BondEnergies::new(channel),
        }
    }

    /// Energy change of `θ_p → θ_p + shift`.
    #[inline]
    pub fn delta_energy(&self, theta: &[u32], p: usize, shift: u32) -> f64 {
        let n = self.bonds.n;
        let mut de = 0.0;
        for &(link, sign) in self.lattice.plaquette_bonds(p) {
            let link = link as usize;
            let (p1, p2) = self.lattice.link_plaquettes(link);
            let d_old = (theta[p1] + 2 * n - theta[p2] - self.record[link]) % n;
            let d_new = if sign > 0 { (d_old + shift) % n } else { (d_old + n - shift) % n };
            de += self.bonds.energy[d_new as usize] - self.bonds.energy[d_old as usize];
        }
        de
    }

    /// One sweep: `P` single-site proposals at uniformly random plaquettes.
    /// A fixed visiting order would flip every spin in lockstep when nearly
    /// all moves are accepted. Returns the number accepted.
    pub fn sweep<R: Rng + ?Sized>(&self, state: &mut SpinChainState, rng: &mut R) -> usize {
        let n = self.bonds.n;
        let mut accepted = 0;
        let np = self.lattice.num_plaquettes();
        for _ in 0..np {
            let p = rng.random_range(0..np);
            let shift = rng.random_range(1..n);
            let de = self.delta_energy(&state.theta.theta, p, shift);
            if de <= 0.0 || rng.random::<f64>() < (-de).exp() {
                state.theta.theta[p] = (state.theta.theta[p] + shift) % n;
                state.energy += de;
                accepted += 1;
            }
        }
        accepted
    }

    pub fn energy(&self, theta: &[u32]) -> f64 {
        (0..self.lattice.num_links())
            .map(|l| self.bonds.bond(theta, self.lattice, self.record, l))
            .sum()
    }
}

pub fn metro_sweep<R: Rng + ?Sized>(
    state: &mut SpinChainState,
    lattice: &TorusLattice,
    channel: &ClockChannel,
    twisted_record: &DisorderRealization,
    rng: &mut R,
) -> usize {
    MetropolisKernel::new(lattice, channel, twisted_record).sweep(state, rng)
}

/// Low-energy starting configuration built from the record alone: greedy
/// region growth (most-constrained plaquette first) followed by
/// zero-temperature relaxation sweeps. Keeps low-temperature chains from
/// starting inside frozen domain patterns.
pub fn ordered_start(lattice: &TorusLattice, channel: &ClockChannel, record: &DisorderRealization) -> DualSpinConfig {
    let n = channel.n() as u32;
    let bonds = BondEnergies::new(channel);
    let np = lattice.num_plaquettes();
    let mut theta = vec![0u32; np];
    let mut assigned = vec![false; np];
    let mut constrained = vec![0u8; np];
    let neighbor = |p: usize, link: usize| {
        let (p1, p2) = lattice.link_plaquettes(link);
        if p1 == p {
            p2
        } else {
            p1
        }
    };
    let local_energy = |theta: &[u32], assigned: &[bool], p: usize, value: u32| -> f64 {
        lattice
            .plaquette_bonds(p)
            .iter()
            .filter(|(link, _)| assigned[neighbor(p, *link as usize)])
            .map(|&(link, sign)| {
                let link = link as usize;
                let q = neighbor(p, link);
                let k = if sign > 0 { value + n - theta[q] } else { theta[q] + n - value };
                bonds.of_offset((k + n - record.s[link]) % n)
            })
            .sum()
    };
    assigned[0] = true;
    for &(link, _) in lattice.plaquette_bonds(0) {
        constrained[neighbor(0, link as usize)] += 1;
    }
    for _ in 1..np {
        // Frontier plaquette with the most assigned neighbours; lowest index on ties.
        let p = (0..np)
            .filter(|&p| !assigned[p])
            .max_by(|&a, &b| constrained[a].cmp(&constrained[b]).then(b.cmp(&a)))
            .expect("unassigned plaquette");
        let best = (0..n)
            .min_by(|&a, &b| {
                local_energy(&theta, &assigned, p, a)
                    .partial_cmp(&local_energy(&theta, &assigned, p, b))
                    .unwrap()
            })
            .unwrap();
        theta[p] = best;
        assigned[p] = true;
        for &(link, _) in lattice.plaquette_bonds(p) {
            constrained[neighbor(p, link as usize)] += 1;
        }
    }
    for _ in 0..50 {
        let mut changed = false;
        for p in 0..np {
            let current = local_energy(&theta, &assigned, p, theta[p]);
            let (best, e) = (0..n)
                .map(|v| (v, local_energy(&theta, &assigned, p, v)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            if e < current - 1e-12 {
                theta[p] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    DualSpinConfig { n, theta }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorEstimate {
    /// Unbiased estimate of `|⟨ω^{θ_{p1} − θ_{p2}}⟩|²`; may be slightly
    /// negative when the true value is near zero.
    pub value: f64,
    pub stderr: f64,
    pub measurements: usize,
    pub acceptance_rate: f64,
    pub tau: f64,
}

const CORRELATOR_BLOCKS: usize = 20;

/// Two independent replicas on the same record; the squared thermal
/// average is estimated as `Re(z̄_1 · conj(z̄_2))`, which is unbiased
/// because the replicas are independent.
pub fn two_replica_correlator<R: Rng + ?Sized>(
    lattice: &TorusLattice,
    channel: &ClockChannel,
    twisted_record: &DisorderRealization,
    pair: (usize, usize),
    schedule: &Schedule,
    rng: &mut R,
) -> Result<CorrelatorEstimate> {
    schedule.validate()?;
    let np = lattice.num_plaquettes();
    for p in [pair.0, pair.1] {
        if p >= np {
            return Err(Error::OutOfRange {
                what: "plaquette",
                index: p,
                bound: np,
            });
        }
    }
    if pair.0 == pair.1 {
        return Err(Error::Incompatible("correlator pair must be two distinct plaquettes".into()));
    }
    let n = channel.n() as u32;
    let phases: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64))
        .collect();
    let kernel = MetropolisKernel::new(lattice, channel, twisted_record);
    let start = ordered_start(lattice, channel, twisted_record);
    let mut replicas = [
        SpinChainState::new(start.clone(), lattice, channel, twisted_record),
        SpinChainState::new(start, lattice, channel, twisted_record),
    ];
    let mut accepted = 0usize;
    let mut proposed = 0usize;
    for _ in 0..schedule.burn_in {
        for r in replicas.iter_mut() {
            accepted += kernel.sweep(r, rng);
            proposed += np;
        }
    }
    let mut series: [Vec<Complex64>; 2] = [Vec::new(), Vec::new()];
    for _ in 0..schedule.measurements {
        for (idx, r) in replicas.iter_mut().enumerate() {
            for _ in 0..schedule.thin {
                accepted += kernel.sweep(r, rng);
                proposed += np;
            }
            let th = &r.theta.theta;
            series[idx].push(phases[((th[pair.0] + n - th[pair.1]) % n) as usize]);
        }
    }

    let m = schedule.measurements;
    let total = |s: &[Complex64]| s.iter().sum::<Complex64>();
    let (ta, tb) = (total(&series[0]), total(&series[1]));
    let value = (ta * tb.conj()).re / (m * m) as f64;

    let blocks = CORRELATOR_BLOCKS.min(m);
    let mut replica_values = Vec::with_capacity(blocks);
    if blocks > 1 {
        let bounds: Vec<usize> = (0..=blocks).map(|b| b * m / blocks).collect();
        for b in 0..blocks {
            let (lo, hi) = (bounds[b], bounds[b + 1]);
            let ra = ta - total(&series[0][lo..hi]);
            let rb = tb - total(&series[1][lo..hi]);
            let keep = (m - (hi - lo)) as f64;
            replica_values.push((1.0, (ra * rb.conj()).re / (keep * keep)));
        }
    }
    let tau = series
        .iter()
        .map(|s| integrated_autocorr_time(&s.iter().map(|z| z.re).collect::<Vec<_>>()))
        .fold(0.5, f64::max);
    Ok(CorrelatorEstimate {
        value,
        stderr: jackknife_error(&replica_values),
        measurements: m,
        acceptance_rate: accepted as f64 / proposed.max(1) as f64,
        tau,
    })
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(order: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(order);
    for i in 0..order {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if order == 0 {
                break;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        out.push((0.5 * (1.0 - x), 1.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRatioEstimate {
    /// `ln Z[s, to] − ln Z[s, from]`.
    pub value: f64,
    pub stderr: f64,
    /// `(λ, ⟨∂_λ ln w⟩, stderr)` at each quadrature node.
    pub nodes: Vec<(f64, f64, f64)>,
}

/// `ln(Z[s,(qt1,qs1)] / Z[s,(qt0,qs0)])` by thermodynamic integration.
///
/// The two sectors are represented by the record twisted to each; the
/// twisted records differ only along the frame's winding paths, and the
/// log-weights of those links are interpolated linearly in `λ`. The
/// derivative `⟨Σ (ln w_1 − ln w_0)⟩_λ` is sampled with single-site
/// Metropolis at each Gauss–Legendre node and integrated. Useful deep in
/// the ordered regime where the losing sectors are far too rare to visit.
#[allow(clippy::too_many_arguments)]
pub fn sector_log_ratio<R: Rng + ?Sized>(
    lattice: &TorusLattice,
    channel: &ClockChannel,
    record: &DisorderRealization,
    from: (u32, u32),
    to: (u32, u32),
    order: usize,
    schedule: &Schedule,
    rng: &mut R,
) -> Result<LogRatioEstimate> {
    schedule.validate()?;
    if order == 0 {
        return Err(Error::InvalidSchedule("quadrature order"));
    }
    let n = channel.n() as u32;
    let lw = channel.log_weights();
    let r0 = crate::disorder::twist_to_sector(record, lattice, from.0, from.1);
    let r1 = crate::disorder::twist_to_sector(record, lattice, to.0, to.1);
    let links: Vec<(usize, usize)> = (0..lattice.num_links()).map(|l| lattice.link_plaquettes(l)).collect();
    let changed: Vec<usize> = (0..links.len()).filter(|&l| r0.s[l] != r1.s[l]).collect();
    if changed.is_empty() {
        return Ok(LogRatioEstimate {
            value: 0.0,
            stderr: 0.0,
            nodes: Vec::new(),
        });
    }
    // ln w_0 and ln w_1 per link as a function of dθ.
    let table = |s: &[u32], l: usize| -> Vec<f64> { (0..n).map(|g| lw[((g + n - s[l]) % n) as usize]).collect() };
    let lw0: Vec<Vec<f64>> = (0..links.len()).map(|l| table(&r0.s, l)).collect();
    let lw1: Vec<Vec<f64>> = (0..links.len()).map(|l| table(&r1.s, l)).collect();
    let start = ordered_start(lattice, channel, &r0);
    let np = lattice.num_plaquettes();

    let mut nodes = Vec::with_capacity(order);
    let (mut value, mut var) = (0.0, 0.0);
    for (lambda, weight) in gauss_legendre_unit(order) {
        let blended: Vec<Vec<f64>> = lw0
            .iter()
            .zip(&lw1)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (1.0 - lambda) * x + lambda * y).collect())
            .collect();
        let mut theta = start.theta.clone();
        let grad = |theta: &[u32], l: usize| {
            let (p1, p2) = links[l];
            ((theta[p1] + n - theta[p2]) % n) as usize
        };
        let sweep = |theta: &mut Vec<u32>, rng: &mut R| {
            for _ in 0..np {
                let p = rng.random_range(0..np);
                let shift = rng.random_range(1..n);
                let mut d_log = 0.0;
                for &(link, sign) in lattice.plaquette_bonds(p) {
                    let l = link as usize;
                    let g_old = grad(theta, l);
                    let g_new = if sign > 0 { (g_old + shift as usize) % n as usize } else { (g_old + (n - shift) as usize) % n as usize };
                    d_log += blended[l][g_new] - blended[l][g_old];
                }
                if d_log >= 0.0 || rng.random::<f64>() < d_log.exp() {
                    theta[p] = (theta[p] + shift) % n;
                }
            }
        };
        for _ in 0..schedule.burn_in {
            sweep(&mut theta, rng);
        }
        let mut series = Vec::with_capacity(schedule.measurements);
        for _ in 0..schedule.measurements {
            for _ in 0..schedule.thin {
                sweep(&mut theta, rng);
            }
            let g: f64 = changed
                .iter()
                .map(|&l| {
                    let d = grad(&theta, l);
                    lw1[l][d] - lw0[l][d]
                })
                .sum();
            series.push(g);
        }
        let m = series.len() as f64;
        let mean = series.iter().sum::<f64>() / m;
        let sd2 = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
        let tau = integrated_autocorr_time(&series);
        let err = (sd2 * 2.0 * tau / m).sqrt();
        value += weight * mean;
        var += (weight * err).powi(2);
        nodes.push((lambda, mean, err));
    }
    Ok(LogRatioEstimate {
        value,
        stderr: var.sqrt(),
        nodes,
    })
}
