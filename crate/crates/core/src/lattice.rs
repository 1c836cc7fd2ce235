//! Periodic `L × t` square lattice.
//!
//! Sites are indexed `site = y·L + x` with `x ∈ 0..L` (space) and
//! `y ∈ 0..t` (circuit time). Each site owns two links with canonical
//! orientation `+x` and `+t`:
//!
//! ```text
//! link id = 2·site + 0   x-link (x, y) → (x+1, y)
//! link id = 2·site + 1   t-link (x, y) → (x, y+1)
//! ```
//!
//! Plaquette `p = y·L + x` is the square whose lower-left corner is site
//! `(x, y)`. The dual link crossing each direct link runs from plaquette
//! `p1` to `p2`, with flow `k = θ_{p1} − θ_{p2}`:
//!
//! * x-link `(x, y)`: `p1` = plaquette above `(x, y)`, `p2` = below `(x, y−1)`;
//! * t-link `(x, y)`: `p1` = plaquette left `(x−1, y)`, `p2` = right `(x, y)`.
//!
//! The homology frame sits at row 0 and column 0: the temporal cut is the
//! set of t-links leaving row 0, the winding path γ is the column of
//! t-links at `x = 0`. The spatial analogues are the x-links leaving
//! column 0 and the row of x-links at `y = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    X,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinkRef {
    pub site: usize,
    pub dir: Direction,
}

impl LinkRef {
    pub fn id(self) -> usize {
        2 * self.site
            + match self.dir {
                Direction::X => 0,
                Direction::T => 1,
            }
    }

    pub fn from_id(id: usize) -> Self {
        let dir = if id % 2 == 0 { Direction::X } else { Direction::T };
        LinkRef { site: id / 2, dir }
    }
}

/// Which non-contractible cycle a winding refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cycle {
    /// Flux through a horizontal line; the sector label `Q`.
    Temporal,
    /// Flux through a vertical line; traced over in all observables.
    Spatial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyFrame {
    /// t-links leaving row 0, all with sign +1.
    pub temporal_cut: Vec<usize>,
    /// t-links of column 0, wrapping the temporal cycle.
    pub gamma_path: Vec<usize>,
    /// x-links leaving column 0, all with sign +1.
    pub spatial_cut: Vec<usize>,
    /// x-links of row 0, wrapping the spatial cycle.
    pub spatial_path: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusLattice {
    width: usize,
    height: usize,
    frame: HomologyFrame,
    /// Per site: (link id, sign) for out-x, out-t, in-x, in-t.
    incident: Vec<[(u32, i8); 4]>,
    link_ends: Vec<(u32, u32)>,
    /// Per link: (p1, p2) with k = θ_{p1} − θ_{p2}.
    link_plaquettes: Vec<(u32, u32)>,
    /// Per plaquette: (link id, sign) where sign = +1 if the plaquette is `p1`.
    plaquette_bonds: Vec<[(u32, i8); 4]>,
    cut_crossing: Vec<i8>,
}

impl TorusLattice {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::LatticeTooSmall { width, height });
        }
        let l = width;
        let t = height;
        let v = l * t;
        let site = |x: usize, y: usize| (y % t) * l + (x % l);
        let xl = |s: usize| 2 * s;
        let tl = |s: usize| 2 * s + 1;

        let mut incident = Vec::with_capacity(v);
        let mut link_ends = vec![(0u32, 0u32); 2 * v];
        let mut link_plaquettes = vec![(0u32, 0u32); 2 * v];
        let mut plaquette_bonds = Vec::with_capacity(v);
        for y in 0..t {
            for x in 0..l {
                let s = site(x, y);
                let left = site(x + l - 1, y);
                let below = site(x, y + t - 1);
                incident.push([
                    (xl(s) as u32, 1),
                    (tl(s) as u32, 1),
                    (xl(left) as u32, -1),
                    (tl(below) as u32, -1),
                ]);
                link_ends[xl(s)] = (s as u32, site(x + 1, y) as u32);
                link_ends[tl(s)] = (s as u32, site(x, y + 1) as u32);
                link_plaquettes[xl(s)] = (s as u32, below as u32);
                link_plaquettes[tl(s)] = (left as u32, s as u32);
                plaquette_bonds.push([
                    (xl(s) as u32, 1),
                    (xl(site(x, y + 1)) as u32, -1),
                    (tl(s) as u32, -1),
                    (tl(site(x + 1, y)) as u32, 1),
                ]);
            }
        }

        let frame = HomologyFrame {
            temporal_cut: (0..l).map(|x| tl(site(x, 0))).collect(),
            gamma_path: (0..t).map(|y| tl(site(0, y))).collect(),
            spatial_cut: (0..t).map(|y| xl(site(0, y))).collect(),
            spatial_path: (0..l).map(|x| xl(site(x, 0))).collect(),
        };
        let mut cut_crossing = vec![0i8; 2 * v];
        for &id in &frame.temporal_cut {
            cut_crossing[id] = 1;
        }
        for &id in &frame.spatial_cut {
            cut_crossing[id] = 2;
        }

        Ok(Self {
            width,
            height,
            frame,
            incident,
            link_ends,
            link_plaquettes,
            plaquette_bonds,
            cut_crossing,
        })
    }

    /// Spatial extent `L`.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Temporal extent `t`.
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_sites(&self) -> usize {
        self.width * self.height
    }

    pub fn num_links(&self) -> usize {
        2 * self.num_sites()
    }

    pub fn num_plaquettes(&self) -> usize {
        self.num_sites()
    }

    /// Dimension of the cycle space, `E − V + 1`.
    pub fn cycle_rank(&self) -> usize {
        self.num_links() - self.num_sites() + 1
    }

    pub fn site(&self, x: usize, y: usize) -> usize {
        (y % self.height) * self.width + (x % self.width)
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site % self.width, site / self.width)
    }

    pub fn frame(&self) -> &HomologyFrame {
        &self.frame
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.num_sites() {
            return Err(Error::OutOfRange {
                what: "site",
                index: site,
                bound: self.num_sites(),
            });
        }
        Ok(())
    }

    /// The four links touching `site`, with +1 for outgoing and −1 for incoming.
    pub fn incident_links(&self, site: usize) -> Result<[(LinkRef, i8); 4]> {
        self.check_site(site)?;
        Ok(self.incident[site].map(|(id, sign)| (LinkRef::from_id(id as usize), sign)))
    }

    /// Unchecked incidence table row: `(link id, sign)`.
    #[inline]
    pub fn incidence(&self, site: usize) -> &[(u32, i8); 4] {
        &self.incident[site]
    }

    /// `(tail, head)` sites of a link along its canonical orientation.
    #[inline]
    pub fn link_ends(&self, link: usize) -> (usize, usize) {
        let (a, b) = self.link_ends[link];
        (a as usize, b as usize)
    }

    /// `(p1, p2)` with `k_link = θ_{p1} − θ_{p2}`.
    #[inline]
    pub fn link_plaquettes(&self, link: usize) -> (usize, usize) {
        let (a, b) = self.link_plaquettes[link];
        (a as usize, b as usize)
    }

    /// Links on the boundary of plaquette `p` with the sign of `θ_p` in each.
    #[inline]
    pub fn plaquette_bonds(&self, p: usize) -> &[(u32, i8); 4] {
        &self.plaquette_bonds[p]
    }

    /// Which frame cut a link crosses, if any.
    #[inline]
    pub fn cut_of(&self, link: usize) -> Option<Cycle> {
        match self.cut_crossing[link] {
            1 => Some(Cycle::Temporal),
            2 => Some(Cycle::Spatial),
            _ => None,
        }
    }

    /// t-links leaving row `row`; the frame's temporal cut is `row = 0`.
    pub fn temporal_cut_at(&self, row: usize) -> Vec<usize> {
        (0..self.width).map(|x| 2 * self.site(x, row) + 1).collect()
    }

    /// x-links leaving column `col`.
    pub fn spatial_cut_at(&self, col: usize) -> Vec<usize> {
        (0..self.height).map(|y| 2 * self.site(col, y)).collect()
    }

    pub fn winding_path(&self, cycle: Cycle) -> &[usize] {
        match cycle {
            Cycle::Temporal => &self.frame.gamma_path,
            Cycle::Spatial => &self.frame.spatial_path,
        }
    }

    pub fn cut(&self, cycle: Cycle) -> &[usize] {
        match cycle {
            Cycle::Temporal => &self.frame.temporal_cut,
            Cycle::Spatial => &self.frame.spatial_cut,
        }
    }

    /// Plaquette with lower-left corner `(x, y)`.
    pub fn plaquette(&self, x: usize, y: usize) -> usize {
        self.site(x, y)
    }
}
