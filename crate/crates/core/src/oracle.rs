//! Brute-force ground truth for tiny tori.
//!
//! Flows in sector `(Q, W)` are written uniquely as `dθ + Q·γ_t + W·γ_x`
//! with `θ` fixed to zero on plaquette 0, so every enumeration below walks
//! `θ ∈ Z_N^{P−1}` with an odometer (plaquette 1 is the fastest digit).

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ClockChannel;
use crate::disorder::{realization, twist_to_sector, DisorderRealization};
use crate::error::{Error, Result};
use crate::flow::{add_winding_string_in_place, flow_from_dual_spins, temporal_winding, DualSpinConfig, FlowConfig};
use crate::lattice::{Cycle, TorusLattice};
use crate::observables::{record_entropy, record_order_parameter};
use crate::stats::jackknife_mean;

/// Enumeration budget: `N^{V+1} ≤ 2^26`.
pub const MAX_ENUMERATION_LOG2: f64 = 26.0;
/// Largest dense density matrix built.
pub const MAX_DENSE_DIM: usize = 4096;
/// Largest record space summed exhaustively: `N^E ≤ 2^16`.
pub const MAX_RECORD_LOG2: f64 = 16.0;
/// Largest row state space `N^L` for the transfer evaluation.
pub const MAX_TRANSFER_STATES: usize = 4096;

const EIGEN_FLOOR: f64 = 1e-14;
/// Relative weights below this are dropped during transfer.
const UNDERFLOW_CUTOFF: f64 = 1e-250;

/// Multiply every column of `m` (rows indexed by row state) by a bond
/// kernel acting on the digit with the given stride:
/// `m'[.. c ..] = Σ_j k[j][c] · m[.. j ..]`.
fn apply_digit_kernel(m: &mut [f64], scratch: &mut [f64], k: &[f64], nu: usize, stride: usize, cols: usize) {
    let states = m.len() / cols;
    for outer in (0..states).step_by(stride * nu) {
        for inner in 0..stride {
            let base = outer + inner;
            for j in 0..nu {
                let row = (base + j * stride) * cols;
                scratch[j * cols..(j + 1) * cols].copy_from_slice(&m[row..row + cols]);
            }
            for c in 0..nu {
                let row = (base + c * stride) * cols;
                let out = &mut m[row..row + cols];
                out.iter_mut().for_each(|e| *e = 0.0);
                for j in 0..nu {
                    let w = k[j * nu + c];
                    for (o, v) in out.iter_mut().zip(&scratch[j * cols..(j + 1) * cols]) {
                        *o += w * v;
                    }
                }
            }
        }
    }
}

fn check_enumerable(lattice: &TorusLattice, n: usize) -> Result<()> {
    let log2 = (lattice.num_sites() + 1) as f64 * (n as f64).log2();
    if log2 > MAX_ENUMERATION_LOG2 + 1e-9 {
        return Err(Error::TooLarge(format!(
            "{}x{} torus over Z_{n} needs 2^{log2:.1} terms",
            lattice.width(),
            lattice.height()
        )));
    }
    Ok(())
}

fn check_record(lattice: &TorusLattice, channel: &ClockChannel, record: &DisorderRealization) -> Result<()> {
    if record.n as usize != channel.n() || record.s.len() != lattice.num_links() {
        return Err(Error::Incompatible("record does not match lattice/channel".into()));
    }
    Ok(())
}

/// Streaming log-sum-exp.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    max: f64,
    sum: f64,
}

impl LogSum {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    #[inline]
    fn add(&mut self, x: f64) {
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

/// Visit every `θ` with `θ_0 = 0` together with `Σ_μ lw[(dθ_μ + offset_μ) mod N]`.
fn for_each_gradient<F: FnMut(&[u32], f64)>(lattice: &TorusLattice, n: u32, lw: &[f64], offset: &[u32], mut visit: F) {
    let np = lattice.num_plaquettes();
    let links: Vec<(usize, usize)> = (0..lattice.num_links()).map(|l| lattice.link_plaquettes(l)).collect();
    let mut theta = vec![0u32; np];
    loop {
        let log_w: f64 = links
            .iter()
            .zip(offset)
            .map(|(&(p1, p2), &c)| lw[((theta[p1] + 2 * n - theta[p2] + c) % n) as usize])
            .sum();
        visit(&theta, log_w);
        let mut p = 1;
        while p < np {
            theta[p] += 1;
            if theta[p] < n {
                break;
            }
            theta[p] = 0;
            p += 1;
        }
        if p == np {
            return;
        }
    }
}

/// Per-link constant `c_μ` with `k_μ − s_μ = dθ_μ + c_μ` in sector `(qt, qs)`.
fn sector_offset(lattice: &TorusLattice, record: &[u32], n: u32, qt: u32, qs: u32) -> Vec<u32> {
    let mut strings = FlowConfig::zeros(lattice, n);
    add_winding_string_in_place(&mut strings, lattice, qt, Cycle::Temporal);
    add_winding_string_in_place(&mut strings, lattice, qs, Cycle::Spatial);
    strings.k.iter().zip(record).map(|(c, s)| (c + n - s) % n).collect()
}

/// Exact `ln Z[s, Q]` for every temporal sector, spatial winding summed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorTable {
    pub n: u32,
    /// `ln Z[s, Q]`, indexed by `Q`.
    pub log_z: Vec<f64>,
    /// `ln Z[s, (Q, W)]`, indexed `[Q][W]`.
    pub log_z_joint: Vec<Vec<f64>>,
}

impl SectorTable {
    pub fn compute(lattice: &TorusLattice, channel: &ClockChannel, record: &DisorderRealization) -> Result<Self> {
        check_record(lattice, channel, record)?;
        check_enumerable(lattice, channel.n())?;
        let n = record.n;
        let mut joint = vec![vec![0.0; n as usize]; n as usize];
        for qt in 0..n {
            for qs in 0..n {
                let offset = sector_offset(lattice, &record.s, n, qt, qs);
                let mut acc = LogSum::new();
                for_each_gradient(lattice, n, channel.log_weights(), &offset, |_, lw| acc.add(lw));
                joint[qt as usize][qs as usize] = acc.value();
            }
        }
        Ok(Self::from_joint(n, joint))
    }

    /// The same table by row-to-row transfer along the time direction.
    /// Cost grows as `N^{2L}·L·t` instead of `N^{Lt}`, so narrow tori of
    /// any duration are within reach.
    pub fn by_transfer(lattice: &TorusLattice, channel: &ClockChannel, record: &DisorderRealization) -> Result<Self> {
        check_record(lattice, channel, record)?;
        let n = record.n;
        let nu = n as usize;
        let (width, height) = (lattice.width(), lattice.height());
        let states = nu
            .checked_pow(width as u32)
            .filter(|s| *s <= MAX_TRANSFER_STATES)
            .ok_or_else(|| Error::TooLarge(format!("Z_{n} rows of width {width} exceed {MAX_TRANSFER_STATES} states")))?;
        let lw = channel.log_weights();
        let lw_max = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let digit = |b: usize, x: usize| (b / nu.pow(x as u32)) % nu;
        let xlink = |x: usize, y: usize| 2 * lattice.site(x, y);
        let tlink = |x: usize, y: usize| 2 * lattice.site(x, y) + 1;

        let mut joint = vec![vec![0.0; nu]; nu];
        for qt in 0..n {
            let offsets: Vec<Vec<u32>> = (0..n).map(|qs| sector_offset(lattice, &record.s, n, qt, qs)).collect();
            let body = &offsets[0];
            // Bonds inside a row, rescaled so the best row state has weight one.
            let mut row_scale = vec![0.0; height];
            let diag: Vec<Vec<f64>> = (0..height)
                .map(|y| {
                    let logs: Vec<f64> = (0..states)
                        .map(|b| {
                            (0..width)
                                .map(|x| {
                                    let left = digit(b, (x + width - 1) % width) as u32;
                                    let right = digit(b, x) as u32;
                                    lw[((left + 2 * n - right + body[tlink(x, y)]) % n) as usize]
                                })
                                .sum()
                        })
                        .collect();
                    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    row_scale[y] = max;
                    logs.iter().map(|l| (l - max).exp()).collect()
                })
                .collect();
            // Bond kernels between row y−1 (below) and row y (above).
            let kernel = |offset: u32| -> Vec<f64> {
                let mut k = vec![0.0; nu * nu];
                for below in 0..n {
                    for above in 0..n {
                        k[(below * n + above) as usize] = (lw[((above + 2 * n - below + offset) % n) as usize] - lw_max).exp();
                    }
                }
                k
            };
            let kernels: Vec<Vec<Vec<f64>>> = (0..height)
                .map(|y| (0..width).map(|x| kernel(body[xlink(x, y)])).collect())
                .collect();
            let wrap: Vec<Vec<Vec<f64>>> = offsets
                .iter()
                .map(|off| (0..width).map(|x| kernel(off[xlink(x, 0)])).collect())
                .collect();
            let constant = row_scale.iter().sum::<f64>() + (height * width) as f64 * lw_max;

            // Columns are the row-0 states with θ = 0 on plaquette 0; rows
            // are the current row state.
            let cols = states / nu;
            let mut m = vec![0.0; states * cols];
            for col in 0..cols {
                m[col * nu * cols + col] = diag[0][col * nu];
            }
            let mut scratch = vec![0.0; nu * cols];
            let mut log_scale = constant;
            for y in 1..height {
                for (x, k) in kernels[y].iter().enumerate() {
                    apply_digit_kernel(&mut m, &mut scratch, k, nu, nu.pow(x as u32), cols);
                }
                let mut max = 0.0f64;
                for (row, d) in m.chunks_exact_mut(cols).zip(&diag[y]) {
                    for e in row.iter_mut() {
                        *e *= d;
                        max = max.max(*e);
                    }
                }
                if max == 0.0 {
                    log_scale = f64::NEG_INFINITY;
                    break;
                }
                for e in m.iter_mut() {
                    *e /= max;
                    if *e < UNDERFLOW_CUTOFF {
                        *e = 0.0;
                    }
                }
                log_scale += max.ln();
            }
            let mut closed = vec![0.0; m.len()];
            for (qs, ks) in wrap.iter().enumerate() {
                closed.copy_from_slice(&m);
                for (x, k) in ks.iter().enumerate() {
                    apply_digit_kernel(&mut closed, &mut scratch, k, nu, nu.pow(x as u32), cols);
                }
                let trace: f64 = (0..cols).map(|col| closed[col * nu * cols + col]).sum();
                joint[qt as usize][qs] = log_scale + trace.ln();
            }
        }
        Ok(Self::from_joint(n, joint))
    }
    fn from_joint(n: u32, joint: Vec<Vec<f64>>) -> Self {
        let log_z = joint
            .iter()
            .map(|row| {
                let mut acc = LogSum::new();
                row.iter().for_each(|v| acc.add(*v));
                acc.value()
            })
            .collect();
        Self {
            n,
            log_z,
            log_z_joint: joint,
        }
    }

    pub fn z(&self) -> Vec<f64> {
        self.log_z.iter().map(|v| v.exp()).collect()
    }

    /// `ln Σ_Q Z[s, Q]`.
    pub fn log_total(&self) -> f64 {
        let mut acc = LogSum::new();
        self.log_z.iter().for_each(|v| acc.add(*v));
        acc.value()
    }

    /// `P(Q|s)`.
    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.log_total();
        self.log_z.iter().map(|v| (v - total).exp()).collect()
    }

    /// `ln Z[Q′] − ½[ln Z[Q′+1] + ln Z[Q′−1]]` with `Q′` the most likely
    /// sector, evaluated in the log domain so it stays finite when the
    /// losing sectors underflow as probabilities.
    pub fn ln_ratio(&self) -> f64 {
        let n = self.log_z.len();
        let top = (0..n)
            .max_by(|a, b| self.log_z[*a].partial_cmp(&self.log_z[*b]).unwrap().then(b.cmp(a)))
            .unwrap_or(0);
        self.log_z[top] - 0.5 * (self.log_z[(top + 1) % n] + self.log_z[(top + n - 1) % n])
    }
}

pub fn enumerate_sector(lattice: &TorusLattice, channel: &ClockChannel, record: &DisorderRealization, q: u32) -> Result<f64> {
    if q >= record.n {
        return Err(Error::OutOfRange {
            what: "sector",
            index: q as usize,
            bound: record.n as usize,
        });
    }
    Ok(SectorTable::compute(lattice, channel, record)?.log_z[q as usize].exp())
}

/// Exact `|⟨ω^{θ_{p1} − θ_{p2}}⟩|²` in the dual-spin model on `twisted_record`.
pub fn exact_correlator(
    lattice: &TorusLattice,
    channel: &ClockChannel,
    twisted_record: &DisorderRealization,
    pair: (usize, usize),
) -> Result<f64> {
    check_record(lattice, channel, twisted_record)?;
    check_enumerable(lattice, channel.n())?;
    let np = lattice.num_plaquettes();
    if pair.0 >= np || pair.1 >= np {
        return Err(Error::OutOfRange {
            what: "plaquette",
            index: pair.0.max(pair.1),
            bound: np,
        });
    }
    let n = twisted_record.n;
    let offset: Vec<u32> = twisted_record.s.iter().map(|s| (n - s) % n).collect();
    // Shift log-weights by the ground-state energy so plain sums stay finite.
    let mut samples = Vec::new();
    for_each_gradient(lattice, n, channel.log_weights(), &offset, |theta, lw| {
        samples.push(((theta[pair.0] + n - theta[pair.1]) % n, lw));
    });
    let top = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut acc = Complex64::new(0.0, 0.0);
    for (d, lw) in samples {
        let w = (lw - top).exp();
        z += w;
        acc += Complex64::from_polar(w, 2.0 * PI * d as f64 / n as f64);
    }
    Ok((acc / z).norm_sqr())
}

/// Exact per-sector mean of `Σ_μ ln p_{k_μ − s_μ}` over flows with windings `(qt, qs)`.
pub fn exact_sector_log_weight(
    lattice: &TorusLattice,
    channel: &ClockChannel,
    record: &DisorderRealization,
    qt: u32,
    qs: u32,
) -> Result<f64> {
    check_record(lattice, channel, record)?;
    check_enumerable(lattice, channel.n())?;
    let n = record.n;
    let offset = sector_offset(lattice, &record.s, n, qt % n, qs % n);
    let mut acc = LogSum::new();
    let mut items = Vec::new();
    for_each_gradient(lattice, n, channel.log_weights(), &offset, |_, lw| {
        acc.add(lw);
        items.push(lw);
    });
    let log_z = acc.value();
    Ok(items.iter().map(|lw| lw * (lw - log_z).exp()).sum())
}

/// Local correlator convention shared with the samplers: the record is
/// twisted to its own frustration sector before evaluating the correlator.
pub fn record_local_correlator(
    lattice: &TorusLattice,
    channel: &ClockChannel,
    record: &DisorderRealization,
    pair: (usize, usize),
) -> Result<f64> {
    let (qt, qs) = record.frustration(lattice);
    exact_correlator(lattice, channel, &twist_to_sector(record, lattice, qt, qs), pair)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactObservables {
    pub order_parameter: f64,
    pub order_parameter_stderr: f64,
    pub coherent_information: f64,
    pub coherent_information_stderr: f64,
    pub local_correlator: Option<f64>,
    pub local_correlator_stderr: Option<f64>,
    /// Records used; for an exhaustive sum this is `N^E`.
    pub records: usize,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    /// Born-sampled records used when the record space is too large.
    pub sampled_records: usize,
    pub master_seed: u64,
    pub pair: Option<(usize, usize)>,
    /// Use Born sampling even when exhaustive summation is possible.
    pub force_sampling: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            sampled_records: 200,
            master_seed: 0,
            pair: None,
            force_sampling: false,
        }
    }
}

/// Disorder-averaged observables, exact per record. Averages are exact
/// over all records when `N^E ≤ 2^16`, otherwise means over Born-sampled
/// records with jackknife errors.
pub fn exact_observables(lattice: &TorusLattice, channel: &ClockChannel, options: &OracleOptions) -> Result<ExactObservables> {
    check_enumerable(lattice, channel.n())?;
    let n = channel.n() as u32;
    let e = lattice.num_links();
    let exhaustive = !options.force_sampling && e as f64 * (n as f64).log2() <= MAX_RECORD_LOG2 + 1e-9;
    if exhaustive {
        let norm = (lattice.num_sites() + 1) as f64 * (n as f64).ln();
        let mut s = vec![0u32; e];
        let (mut op, mut ci, mut corr, mut total) = (0.0, 0.0, 0.0, 0.0);
        let mut count = 0usize;
        loop {
            let record = DisorderRealization::from_record(n, s.clone());
            let table = SectorTable::compute(lattice, channel, &record)?;
            let weight = (table.log_total() - norm).exp();
            let probs = table.probabilities();
            op += weight * record_order_parameter(&probs);
            ci += weight * record_entropy(&probs);
            if let Some(pair) = options.pair {
                corr += weight * record_local_correlator(lattice, channel, &record, pair)?;
            }
            total += weight;
            count += 1;
            let mut l = 0;
            while l < e {
                s[l] += 1;
                if s[l] < n {
                    break;
                }
                s[l] = 0;
                l += 1;
            }
            if l == e {
                break;
            }
        }
        debug_assert!((total - 1.0).abs() < 1e-9, "record weights sum to {total}");
        return Ok(ExactObservables {
            order_parameter: op / total,
            order_parameter_stderr: 0.0,
            coherent_information: ci / total,
            coherent_information_stderr: 0.0,
            local_correlator: options.pair.map(|_| corr / total),
            local_correlator_stderr: options.pair.map(|_| 0.0),
            records: count,
            exhaustive: true,
        });
    }
    if options.sampled_records == 0 {
        return Err(Error::EmptyInput("sampled records"));
    }
    let mut ops = Vec::with_capacity(options.sampled_records);
    let mut cis = Vec::with_capacity(options.sampled_records);
    let mut corrs = Vec::new();
    for i in 0..options.sampled_records {
        let record = realization(lattice, channel, options.master_seed, i as u64);
        let probs = SectorTable::compute(lattice, channel, &record)?.probabilities();
        ops.push(record_order_parameter(&probs));
        cis.push(record_entropy(&probs));
        if let Some(pair) = options.pair {
            corrs.push(record_local_correlator(lattice, channel, &record, pair)?);
        }
    }
    let (op, op_err) = jackknife_mean(&ops)?;
    let (ci, ci_err) = jackknife_mean(&cis)?;
    let corr = if options.pair.is_some() { Some(jackknife_mean(&corrs)?) } else { None };
    Ok(ExactObservables {
        order_parameter: op,
        order_parameter_stderr: op_err,
        coherent_information: ci,
        coherent_information_stderr: ci_err,
        local_correlator: corr.map(|c| c.0),
        local_correlator_stderr: corr.map(|c| c.1),
        records: options.sampled_records,
        exhaustive: false,
    })
}

/// Flow basis of temporal sector `q`: spatial winding major, then the
/// `θ` odometer with `θ_0 = 0`. Dimension `N^V`.
pub fn sector_basis(lattice: &TorusLattice, n: u32, q: u32) -> Result<Vec<FlowConfig>> {
    let dim = (n as usize).checked_pow(lattice.num_sites() as u32);
    match dim {
        Some(d) if d <= MAX_DENSE_DIM => {}
        _ => return Err(Error::TooLarge(format!("sector basis of Z_{n} on {} sites", lattice.num_sites()))),
    }
    let zero = vec![0u32; lattice.num_links()];
    let mut basis = Vec::new();
    for w in 0..n {
        let offset = sector_offset(lattice, &zero, n, q % n, w);
        let strings = FlowConfig { n, k: offset };
        let lw = vec![0.0; n as usize];
        for_each_gradient(lattice, n, &lw, &vec![0; lattice.num_links()], |theta, _| {
            let grad = flow_from_dual_spins(&DualSpinConfig { n, theta: theta.to_vec() }, lattice);
            basis.push(grad.add(&strings));
        });
    }
    Ok(basis)
}

/// Density matrix over an explicit flow basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    pub n: u32,
    pub basis: Vec<FlowConfig>,
    pub rho: DMatrix<Complex64>,
}

impl DenseState {
    pub fn pure(n: u32, basis: Vec<FlowConfig>, amplitudes: &[Complex64]) -> Result<Self> {
        if amplitudes.len() != basis.len() {
            return Err(Error::Incompatible("amplitude count differs from basis size".into()));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroTotal);
        }
        let psi: Vec<Complex64> = amplitudes.iter().map(|a| a / norm).collect();
        let d = basis.len();
        let rho = DMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj());
        Ok(Self { n, basis, rho })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.rho[(i, i)].re).sum()
    }

    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..=i {
                worst = worst.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        SymmetricEigen::new(self.rho.clone()).eigenvalues.iter().copied().collect()
    }

    /// Trace, Hermiticity and positivity within `1e-10`.
    pub fn validate(&self) -> Result<()> {
        if (self.trace() - 1.0).abs() > 1e-10 {
            return Err(Error::NotAState(format!("trace {}", self.trace())));
        }
        let h = self.hermiticity_error();
        if h > 1e-10 {
            return Err(Error::NotAState(format!("hermiticity error {h}")));
        }
        let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::NotAState(format!("eigenvalue {min}")));
        }
        Ok(())
    }
}

/// One round of the per-link measurement channel, with outcomes discarded:
/// `ρ_ab ← ρ_ab · Π_μ F(a_μ − b_μ)` where `F(d) = Σ_j √(p_j p_{j+d})`.
pub fn apply_channel(state: &DenseState, channel: &ClockChannel) -> Result<DenseState> {
    if state.n as usize != channel.n() {
        return Err(Error::Incompatible("channel order differs from state".into()));
    }
    let n = state.n;
    let overlap: Vec<f64> = (0..n as usize).map(|d| channel.overlap(d)).collect();
    let d = state.dim();
    let mut rho = state.rho.clone();
    for i in 0..d {
        for j in 0..i {
            let f: f64 = state.basis[i]
                .k
                .iter()
                .zip(&state.basis[j].k)
                .map(|(a, b)| overlap[((a + n - b) % n) as usize])
                .product();
            rho[(i, j)] *= f;
            rho[(j, i)] *= f;
        }
    }
    Ok(DenseState {
        n,
        basis: state.basis.clone(),
        rho,
    })
}

/// All temporal sectors in order, each in [`sector_basis`] order. Dimension `N^{V+1}`.
pub fn full_basis(lattice: &TorusLattice, n: u32) -> Result<Vec<FlowConfig>> {
    let mut basis = Vec::new();
    for q in 0..n {
        basis.extend(sector_basis(lattice, n, q)?);
    }
    if basis.len() > MAX_DENSE_DIM {
        return Err(Error::TooLarge(format!("dimension {}", basis.len())));
    }
    Ok(basis)
}

fn decohered_superposition<F: Fn(u32) -> Complex64>(lattice: &TorusLattice, channel: &ClockChannel, amplitude: F) -> Result<DenseState> {
    let n = channel.n() as u32;
    let basis = full_basis(lattice, n)?;
    let amps: Vec<Complex64> = basis.iter().map(|f| amplitude(temporal_winding(f, lattice))).collect();
    apply_channel(&DenseState::pure(n, basis, &amps)?, channel)
}

/// Uniform superposition over sector `q`, decohered by one round of the
/// channel. Expressed in [`full_basis`] so states of different sectors can
/// be compared.
pub fn decohered_logical_state(lattice: &TorusLattice, channel: &ClockChannel, q: u32) -> Result<DenseState> {
    let q = q % channel.n() as u32;
    decohered_superposition(lattice, channel, |w| {
        if w == q {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// `Σ_Q ω^{rQ} |Φ(Q)⟩ / √N`, decohered by one round of the channel.
/// Unlike the sector states these keep overlapping support after
/// decoherence.
pub fn conjugate_logical_state(lattice: &TorusLattice, channel: &ClockChannel, r: u32) -> Result<DenseState> {
    let n = channel.n() as u32;
    decohered_superposition(lattice, channel, |w| {
        Complex64::from_polar(1.0, 2.0 * PI * ((r * w) % n) as f64 / n as f64)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeEntropy {
    /// Nats; `f64::INFINITY` when `infinite`.
    pub value: f64,
    pub infinite: bool,
}

/// `Tr a (ln a − ln b)` from eigendecompositions; eigenvalues below `1e-14`
/// count as zero.
pub fn relative_entropy(a: &DenseState, b: &DenseState) -> Result<RelativeEntropy> {
    a.validate()?;
    b.validate()?;
    if a.basis != b.basis {
        return Err(Error::Incompatible("states live on different bases".into()));
    }
    let ea = SymmetricEigen::new(a.rho.clone());
    let eb = SymmetricEigen::new(b.rho.clone());
    let overlaps = ea.eigenvectors.adjoint() * &eb.eigenvectors;
    let mut value = 0.0;
    for (i, &la) in ea.eigenvalues.iter().enumerate() {
        if la <= EIGEN_FLOOR {
            continue;
        }
        value += la * la.ln();
        for (j, &lb) in eb.eigenvalues.iter().enumerate() {
            let w = overlaps[(i, j)].norm_sqr();
            if lb <= EIGEN_FLOOR {
                if w > 1e-10 {
                    return Ok(RelativeEntropy {
                        value: f64::INFINITY,
                        infinite: true,
                    });
                }
                continue;
            }
            value -= la * w * lb.ln();
        }
    }
    Ok(RelativeEntropy {
        value: value.max(0.0),
        infinite: false,
    })
}
