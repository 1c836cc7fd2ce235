use zn_sharpening::disorder::twist_to_sector;
use zn_sharpening::metropolis::{
    ordered_start, sector_log_ratio, two_replica_correlator, MetropolisKernel, SpinChainState,
};
use zn_sharpening::oracle::{exact_correlator, exact_sector_log_weight, SectorTable};
use zn_sharpening::rng::{stream, StreamPurpose};
use zn_sharpening::worm::run_chain_observed;
use zn_sharpening::{realization, ClockChannel, DualSpinConfig, Schedule, TorusLattice};

#[test]
fn magnetization_histogram_matches_enumeration() {
    let lattice = TorusLattice::new(2, 3).unwrap();
    let channel = ClockChannel::from_temperature(2, 1.0).unwrap();
    let record = realization(&lattice, &channel, 3, 0);
    let np = lattice.num_plaquettes();
    let lw = channel.log_weights();
    let log_weight = |theta: &[u32]| -> f64 {
        (0..lattice.num_links())
            .map(|l| {
                let (a, b) = lattice.link_plaquettes(l);
                lw[((theta[a] + 4 - theta[b] - record.s[l]) % 2) as usize]
            })
            .sum()
    };
    // |M| ∈ {0, 2, 4, 6} on six spins.
    let mut exact = [0.0; 4];
    for mask in 0..(1u32 << np) {
        let theta: Vec<u32> = (0..np).map(|p| (mask >> p) & 1).collect();
        let m = theta.iter().map(|t| 1 - 2 * *t as i32).sum::<i32>().unsigned_abs() as usize;
        exact[m / 2] += log_weight(&theta).exp();
    }
    let z: f64 = exact.iter().sum();
    exact.iter_mut().for_each(|v| *v /= z);

    let kernel = MetropolisKernel::new(&lattice, &channel, &record);
    let mut rng = stream(3, StreamPurpose::MetropolisChain, 0, 0);
    let mut state = SpinChainState::new(DualSpinConfig { n: 2, theta: vec![0; np] }, &lattice, &channel, &record);
    let sweeps = 400_000;
    let mut counts = [0.0; 4];
    for _ in 0..1000 {
        kernel.sweep(&mut state, &mut rng);
    }
    for _ in 0..sweeps {
        kernel.sweep(&mut state, &mut rng);
        let m = state.theta.theta.iter().map(|t| 1 - 2 * *t as i32).sum::<i32>().unsigned_abs() as usize;
        counts[m / 2] += 1.0;
    }
    for b in 0..4 {
        if exact[b] > 0.01 {
            let f = counts[b] / sweeps as f64;
            assert!((f - exact[b]).abs() < 0.01, "|M|={}: {f} vs {}", 2 * b, exact[b]);
        }
    }
}

#[test]
fn correlator_matches_enumeration() {
    let lattice = TorusLattice::new(3, 3).unwrap();
    let channel = ClockChannel::from_temperature(2, 1.0).unwrap();
    let sched = Schedule::new(500, 40_000, 1).unwrap();
    for i in 0..4 {
        let record = realization(&lattice, &channel, 11, i);
        let (qt, qs) = record.frustration(&lattice);
        let twisted = twist_to_sector(&record, &lattice, qt, qs);
        let pair = (lattice.plaquette(0, 1), lattice.plaquette(1, 1));
        let exact = exact_correlator(&lattice, &channel, &twisted, pair).unwrap();
        let mut rng = stream(11, StreamPurpose::MetropolisChain, i, 0);
        let est = two_replica_correlator(&lattice, &channel, &twisted, pair, &sched, &mut rng).unwrap();
        assert!(
            (est.value - exact).abs() < 3.0 * est.stderr + 0.005,
            "record {i}: {} ± {} vs {exact}",
            est.value,
            est.stderr
        );
    }
}

#[test]
fn ordered_start_never_reads_hidden_sector() {
    let lattice = TorusLattice::new(4, 4).unwrap();
    let channel = ClockChannel::from_temperature(3, 0.5).unwrap();
    let mut record = realization(&lattice, &channel, 1, 0);
    let a = ordered_start(&lattice, &channel, &record);
    record.provenance.hidden_temporal = (record.provenance.hidden_temporal + 1) % 3;
    assert_eq!(a, ordered_start(&lattice, &channel, &record));
}

#[test]
fn integration_matches_exact_sector_ratio() {
    let lattice = TorusLattice::new(3, 3).unwrap();
    for (n, temp) in [(2usize, 0.6), (3, 1.0)] {
        let channel = ClockChannel::from_temperature(n, temp).unwrap();
        let record = realization(&lattice, &channel, 21, 0);
        let table = SectorTable::compute(&lattice, &channel, &record).unwrap();
        let (qt, qs) = record.frustration(&lattice);
        let to = ((qt + 1) % n as u32, qs);
        let exact = table.log_z_joint[to.0 as usize][to.1 as usize] - table.log_z_joint[qt as usize][qs as usize];
        let mut rng = stream(21, StreamPurpose::Integration, 0, 0);
        let sched = Schedule::new(200, 20_000, 1).unwrap();
        let est = sector_log_ratio(&lattice, &channel, &record, (qt, qs), to, 8, &sched, &mut rng).unwrap();
        assert!(
            (est.value - exact).abs() < 4.0 * est.stderr + 0.02,
            "N={n}: {} ± {} vs {exact}",
            est.value,
            est.stderr
        );
    }
}

/// Mean log-weight of flows in one sector: worm closures conditioned on
/// the sector against Metropolis on the twisted record.
#[test]
fn worm_and_metropolis_agree_within_a_sector() {
    let lattice = TorusLattice::new(3, 3).unwrap();
    let channel = ClockChannel::from_temperature(3, 1.5).unwrap();
    let record = realization(&lattice, &channel, 31, 2);
    let n = 3u32;
    let (qt, qs) = record.frustration(&lattice);
    let lw = channel.log_weights();
    let exact = exact_sector_log_weight(&lattice, &channel, &record, qt, qs).unwrap();

    let mut worm_values = Vec::new();
    let mut rng = stream(31, StreamPurpose::WormChain, 0, 0);
    let sched = Schedule::new(200, 200, 200).unwrap();
    run_chain_observed(&lattice, &channel, &record, &sched, &mut rng, |flow, w| {
        if w == (qt, qs) {
            let v: f64 = flow.k.iter().zip(&record.s).map(|(k, s)| lw[((k + n - s) % n) as usize]).sum();
            worm_values.push(v);
        }
    })
    .unwrap();
    let (worm, worm_err) = block_mean(&worm_values, 40);

    let twisted = twist_to_sector(&record, &lattice, qt, qs);
    let kernel = MetropolisKernel::new(&lattice, &channel, &twisted);
    let mut state = SpinChainState::new(ordered_start(&lattice, &channel, &twisted), &lattice, &channel, &twisted);
    let mut rng = stream(31, StreamPurpose::MetropolisChain, 0, 0);
    let energy_of = |theta: &[u32]| -> f64 {
        (0..lattice.num_links())
            .map(|l| {
                let (a, b) = lattice.link_plaquettes(l);
                lw[((theta[a] + 2 * n - theta[b] - twisted.s[l]) % n) as usize]
            })
            .sum()
    };
    for _ in 0..200 {
        kernel.sweep(&mut state, &mut rng);
    }
    let blocks = 40;
    let per_block = 2000;
    let mut block_means = Vec::new();
    for _ in 0..blocks {
        let mut s = 0.0;
        for _ in 0..per_block {
            kernel.sweep(&mut state, &mut rng);
            s += energy_of(&state.theta.theta);
        }
        block_means.push(s / per_block as f64);
    }
    let (metro, metro_err) = block_mean(&block_means, blocks);
    let joint = (metro_err.powi(2) + worm_err.powi(2)).sqrt();
    assert!((metro - worm).abs() < 3.0 * joint, "metropolis {metro} ± {metro_err} vs worm {worm} ± {worm_err}");
    assert!((metro - exact).abs() < 3.0 * metro_err + 1e-3, "metropolis {metro} vs {exact}");
    assert!((worm - exact).abs() < 3.0 * worm_err + 1e-3, "worm {worm} vs {exact}");
}

fn block_mean(values: &[f64], blocks: usize) -> (f64, f64) {
    let per = values.len() / blocks;
    let means: Vec<f64> = (0..blocks).map(|b| values[b * per..(b + 1) * per].iter().sum::<f64>() / per as f64).collect();
    let m = means.iter().sum::<f64>() / blocks as f64;
    let sd = (means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (blocks as f64 - 1.0)).sqrt();
    (m, sd / (blocks as f64).sqrt())
}
