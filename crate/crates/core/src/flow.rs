//! Z_N flow configurations, Gauss law, windings and the dual-spin map.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::lattice::{Cycle, TorusLattice};

/// One Z_N value per link, stored along the canonical link orientation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlowConfig {
    pub n: u32,
    pub k: Vec<u32>,
}

/// One Z_N value per plaquette.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DualSpinConfig {
    pub n: u32,
    pub theta: Vec<u32>,
}

impl FlowConfig {
    pub fn zeros(lattice: &TorusLattice, n: u32) -> Self {
        Self {
            n,
            k: vec![0; lattice.num_links()],
        }
    }

    /// Link-wise sum mod N.
    pub fn add(&self, other: &FlowConfig) -> FlowConfig {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        FlowConfig {
            n,
            k: self.k.iter().zip(&other.k).map(|(a, b)| (a + b) % n).collect(),
        }
    }

    pub fn is_divergence_free(&self, lattice: &TorusLattice) -> bool {
        (0..lattice.num_sites()).all(|s| divergence(self, lattice, s) == 0)
    }
}

/// Signed sum of incident flows at `site`, mod N.
pub fn divergence(flow: &FlowConfig, lattice: &TorusLattice, site: usize) -> u32 {
    let n = flow.n as i64;
    let sum: i64 = lattice
        .incidence(site)
        .iter()
        .map(|&(link, sign)| sign as i64 * flow.k[link as usize] as i64)
        .sum();
    sum.rem_euclid(n) as u32
}

fn signed_sum(flow: &FlowConfig, links: &[usize]) -> u32 {
    let sum: u64 = links.iter().map(|&l| flow.k[l] as u64).sum();
    (sum % flow.n as u64) as u32
}

/// Flux through the frame's temporal cut: the sector label `Q`.
pub fn temporal_winding(flow: &FlowConfig, lattice: &TorusLattice) -> u32 {
    debug_assert!(flow.is_divergence_free(lattice), "winding of a flow with sources");
    signed_sum(flow, lattice.cut(Cycle::Temporal))
}

pub fn spatial_winding(flow: &FlowConfig, lattice: &TorusLattice) -> u32 {
    debug_assert!(flow.is_divergence_free(lattice), "winding of a flow with sources");
    signed_sum(flow, lattice.cut(Cycle::Spatial))
}

pub fn winding(flow: &FlowConfig, lattice: &TorusLattice, cycle: Cycle) -> u32 {
    match cycle {
        Cycle::Temporal => temporal_winding(flow, lattice),
        Cycle::Spatial => spatial_winding(flow, lattice),
    }
}

/// Temporal flux through the cut above `row`, without the Gauss-law check.
pub fn temporal_flux_at_row(flow: &FlowConfig, lattice: &TorusLattice, row: usize) -> u32 {
    signed_sum(flow, &lattice.temporal_cut_at(row))
}

pub fn spatial_flux_at_column(flow: &FlowConfig, lattice: &TorusLattice, col: usize) -> u32 {
    signed_sum(flow, &lattice.spatial_cut_at(col))
}

/// `k_μ = θ_{p1} − θ_{p2}` on every link.
pub fn flow_from_dual_spins(theta: &DualSpinConfig, lattice: &TorusLattice) -> FlowConfig {
    let n = theta.n;
    let k = (0..lattice.num_links())
        .map(|link| {
            let (p1, p2) = lattice.link_plaquettes(link);
            (theta.theta[p1] + n - theta.theta[p2]) % n
        })
        .collect();
    FlowConfig { n, k }
}

/// Adds `q` along the winding path of `cycle`.
pub fn add_winding_string(flow: &FlowConfig, lattice: &TorusLattice, q: u32, cycle: Cycle) -> FlowConfig {
    let mut out = flow.clone();
    add_winding_string_in_place(&mut out, lattice, q, cycle);
    out
}

pub fn add_winding_string_in_place(flow: &mut FlowConfig, lattice: &TorusLattice, q: u32, cycle: Cycle) {
    let n = flow.n;
    let q = q % n;
    for &l in lattice.winding_path(cycle) {
        flow.k[l] = (flow.k[l] + q) % n;
    }
}

pub fn random_dual_spins<R: Rng + ?Sized>(lattice: &TorusLattice, n: u32, rng: &mut R) -> DualSpinConfig {
    DualSpinConfig {
        n,
        theta: (0..lattice.num_plaquettes()).map(|_| rng.random_range(0..n)).collect(),
    }
}

/// Uniform divergence-free flow in the sector `(q_temporal, q_spatial)`.
pub fn uniform_gauss_sample<R: Rng + ?Sized>(
    lattice: &TorusLattice,
    n: u32,
    rng: &mut R,
    q_temporal: u32,
    q_spatial: u32,
) -> FlowConfig {
    let theta = random_dual_spins(lattice, n, rng);
    let mut flow = flow_from_dual_spins(&theta, lattice);
    add_winding_string_in_place(&mut flow, lattice, q_temporal, Cycle::Temporal);
    add_winding_string_in_place(&mut flow, lattice, q_spatial, Cycle::Spatial);
    flow
}

/// Inverse of [`flow_from_dual_spins`] on zero-winding divergence-free flows,
/// fixing `θ_0 = 0`. Returns `None` when the flow is not such a gradient.
pub fn dual_spins_from_flow(flow: &FlowConfig, lattice: &TorusLattice) -> Option<DualSpinConfig> {
    let n = flow.n;
    let l = lattice.width();
    let t = lattice.height();
    let mut theta = vec![0u32; lattice.num_plaquettes()];
    // Walk right along row 0 through t-links, then up each column through x-links.
    for x in 1..l {
        // t-link at (x, 0): k = θ(x−1, 0) − θ(x, 0)
        let k = flow.k[2 * lattice.site(x, 0) + 1];
        theta[lattice.plaquette(x, 0)] = (theta[lattice.plaquette(x - 1, 0)] + n - k) % n;
    }
    for y in 1..t {
        for x in 0..l {
            // x-link at (x, y): k = θ(x, y) − θ(x, y−1)
            let k = flow.k[2 * lattice.site(x, y)];
            theta[lattice.plaquette(x, y)] = (theta[lattice.plaquette(x, y - 1)] + k) % n;
        }
    }
    let spins = DualSpinConfig { n, theta };
    (flow_from_dual_spins(&spins, lattice) == *flow).then_some(spins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamPurpose};
    use proptest::prelude::*;

    fn lat(l: usize, t: usize) -> TorusLattice {
        TorusLattice::new(l, t).unwrap()
    }

    #[test]
    fn zero_flow() {
        let lattice = lat(4, 3);
        let f = FlowConfig::zeros(&lattice, 3);
        assert!((0..12).all(|s| divergence(&f, &lattice, s) == 0));
        assert_eq!(temporal_winding(&f, &lattice), 0);
        assert_eq!(spatial_winding(&f, &lattice), 0);
    }

    #[test]
    fn single_link_string_endpoints() {
        let lattice = lat(4, 3);
        let mut f = FlowConfig::zeros(&lattice, 5);
        let link = 2 * lattice.site(1, 2);
        f.k[link] = 1;
        let (tail, head) = lattice.link_ends(link);
        for s in 0..lattice.num_sites() {
            let d = divergence(&f, &lattice, s);
            if s == tail {
                assert_eq!(d, 1);
            } else if s == head {
                assert_eq!(d, 4);
            } else {
                assert_eq!(d, 0);
            }
        }
    }

    #[test]
    fn winding_string() {
        let lattice = lat(4, 3);
        let zero = FlowConfig::zeros(&lattice, 3);
        let f = add_winding_string(&zero, &lattice, 1, Cycle::Temporal);
        assert_eq!(temporal_winding(&f, &lattice), 1);
        assert_eq!(spatial_winding(&f, &lattice), 0);
        let g = add_winding_string(&f, &lattice, 1, Cycle::Spatial);
        assert_eq!((temporal_winding(&g, &lattice), spatial_winding(&g, &lattice)), (1, 1));
        assert_eq!(add_winding_string(&g, &lattice, 0, Cycle::Temporal), g);
        let back = add_winding_string(
            &add_winding_string(&zero, &lattice, 2, Cycle::Temporal),
            &lattice,
            1,
            Cycle::Temporal,
        );
        assert_eq!(back, zero);
    }

    #[test]
    fn dual_spin_gradients() {
        let lattice = lat(4, 3);
        let constant = DualSpinConfig { n: 4, theta: vec![3; 12] };
        assert_eq!(flow_from_dual_spins(&constant, &lattice), FlowConfig::zeros(&lattice, 4));

        let mut bump = DualSpinConfig { n: 4, theta: vec![0; 12] };
        let p = lattice.plaquette(2, 1);
        bump.theta[p] = 1;
        let f = flow_from_dual_spins(&bump, &lattice);
        let nonzero: Vec<usize> = (0..lattice.num_links()).filter(|&l| f.k[l] != 0).collect();
        assert_eq!(nonzero.len(), 4);
        for &(link, sign) in lattice.plaquette_bonds(p) {
            let expect = if sign > 0 { 1 } else { 3 };
            assert_eq!(f.k[link as usize], expect);
        }

        let mut rng = stream(1, StreamPurpose::Disorder, 0, 0);
        let a = random_dual_spins(&lattice, 4, &mut rng);
        let shifted = DualSpinConfig {
            n: 4,
            theta: a.theta.iter().map(|t| (t + 1) % 4).collect(),
        };
        assert_eq!(flow_from_dual_spins(&a, &lattice), flow_from_dual_spins(&shifted, &lattice));
    }

    #[test]
    fn exhaustive_gradients_are_divergence_free_2x2() {
        let lattice = lat(2, 2);
        let n = 3u32;
        for code in 0..n.pow(4) {
            let theta: Vec<u32> = (0..4).map(|i| (code / n.pow(i)) % n).collect();
            let f = flow_from_dual_spins(&DualSpinConfig { n, theta }, &lattice);
            assert!(f.is_divergence_free(&lattice));
            assert_eq!((temporal_winding(&f, &lattice), spatial_winding(&f, &lattice)), (0, 0));
        }
    }

    #[test]
    fn sampled_sector_is_fixed() {
        let lattice = lat(3, 4);
        let mut rng = stream(9, StreamPurpose::Disorder, 0, 0);
        for _ in 0..10_000 {
            let f = uniform_gauss_sample(&lattice, 3, &mut rng, 2, 1);
            assert_eq!(temporal_winding(&f, &lattice), 2);
            assert_eq!(spatial_winding(&f, &lattice), 1);
        }
    }

    #[test]
    fn dual_spin_inverse() {
        let lattice = lat(3, 4);
        let mut rng = stream(2, StreamPurpose::Disorder, 0, 0);
        let theta = random_dual_spins(&lattice, 5, &mut rng);
        let f = flow_from_dual_spins(&theta, &lattice);
        let back = dual_spins_from_flow(&f, &lattice).unwrap();
        assert_eq!(flow_from_dual_spins(&back, &lattice), f);
        assert_eq!(back.theta[0], 0);
        let wound = add_winding_string(&f, &lattice, 1, Cycle::Temporal);
        assert!(dual_spins_from_flow(&wound, &lattice).is_none());
    }

    proptest! {
        #[test]
        fn gradients_divergence_free(l in 2usize..7, t in 2usize..7, n in 2u32..9, seed: u64) {
            let lattice = lat(l, t);
            let mut rng = stream(seed, StreamPurpose::Disorder, 0, 0);
            let theta = random_dual_spins(&lattice, n, &mut rng);
            let f = flow_from_dual_spins(&theta, &lattice);
            prop_assert!(f.is_divergence_free(&lattice));
        }

        #[test]
        fn windings_homology_invariant(l in 2usize..7, t in 2usize..7, n in 2u32..9,
                                       qt in 0u32..9, qs in 0u32..9, seed: u64) {
            let lattice = lat(l, t);
            let mut rng = stream(seed, StreamPurpose::Disorder, 1, 0);
            let f = uniform_gauss_sample(&lattice, n, &mut rng, qt % n, qs % n);
            let bump = flow_from_dual_spins(&random_dual_spins(&lattice, n, &mut rng), &lattice);
            let g = f.add(&bump);
            prop_assert_eq!(temporal_winding(&g, &lattice), qt % n);
            prop_assert_eq!(spatial_winding(&g, &lattice), qs % n);
            for row in 0..t {
                prop_assert_eq!(temporal_flux_at_row(&g, &lattice, row), qt % n);
            }
            for col in 0..l {
                prop_assert_eq!(spatial_flux_at_column(&g, &lattice, col), qs % n);
            }
        }
    }
}
