//! Geometry of the periodic triangular lattice.
//!
//! Sites are addressed with axial coordinates `(q, r)`; the six unit moves are
//! `(±1, 0)`, `(0, ±1)`, `(+1, −1)` and `(−1, +1)`. The graph distance between
//! two sites is the axial hex norm of their difference, minimised over the
//! nine nearest periodic images. A node with transmission range `z` reaches
//! every site inside the hexagonal ball of radius `z`, which holds
//! `3·z·(z+1)` sites besides the centre.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side length and transmission range (in lattice edge lengths).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeConfig {
    side: u32,
    range: u32,
}

impl LatticeConfig {
    /// Requires `range >= 1` and `side >= 2 * range + 1` so that a
    /// neighbourhood never overlaps its own periodic image.
    pub fn new(side: u32, range: u32) -> Result<Self> {
        if range == 0 {
            return Err(Error::InvalidParameter(
                "transmission range z must be at least 1".into(),
            ));
        }
        if (side as u64) < 2 * range as u64 + 1 {
            return Err(Error::InvalidParameter(format!(
                "lattice side L={side} is smaller than 2z+1={} for z={range}",
                2 * range as u64 + 1
            )));
        }
        if (side as u64) * (side as u64) > u32::MAX as u64 {
            return Err(Error::InvalidParameter(format!(
                "lattice side L={side} is too large"
            )));
        }
        Ok(Self { side, range })
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    /// Number of sites, `N = L²`.
    pub fn site_count(&self) -> usize {
        self.side as usize * self.side as usize
    }
}

/// Canonical (wrapped) axial coordinate of a lattice site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SiteCoord {
    q: u32,
    r: u32,
}

impl SiteCoord {
    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// Row-major site index `r·L + q`.
    #[inline]
    pub fn index(&self, side: u32) -> usize {
        self.r as usize * side as usize + self.q as usize
    }

    #[inline]
    pub fn from_index(index: usize, side: u32) -> Self {
        let side = side as usize;
        Self {
            q: (index % side) as u32,
            r: (index / side) as u32,
        }
    }
}

/// Reduces a raw coordinate pair into `[0, L)²`.
pub fn wrap(q: i64, r: i64, cfg: &LatticeConfig) -> SiteCoord {
    let side = cfg.side as i64;
    SiteCoord {
        q: q.rem_euclid(side) as u32,
        r: r.rem_euclid(side) as u32,
    }
}

/// Relative displacement between two sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Offset {
    pub dq: i32,
    pub dr: i32,
}

impl Offset {
    pub const fn new(dq: i32, dr: i32) -> Self {
        Self { dq, dr }
    }

    /// Hex norm on the infinite lattice.
    #[inline]
    pub fn norm(&self) -> u32 {
        axial_norm(self.dq as i64, self.dr as i64) as u32
    }
}

impl std::ops::Neg for Offset {
    type Output = Offset;

    fn neg(self) -> Offset {
        Offset::new(-self.dq, -self.dr)
    }
}

impl std::ops::Sub for Offset {
    type Output = Offset;

    fn sub(self, rhs: Offset) -> Offset {
        Offset::new(self.dq - rhs.dq, self.dr - rhs.dr)
    }
}

/// The six nearest-neighbour moves.
pub const UNIT_MOVES: [Offset; 6] = [
    Offset::new(1, 0),
    Offset::new(-1, 0),
    Offset::new(0, 1),
    Offset::new(0, -1),
    Offset::new(1, -1),
    Offset::new(-1, 1),
];

#[inline]
fn axial_norm(dq: i64, dr: i64) -> u64 {
    (dq.unsigned_abs() + dr.unsigned_abs() + (dq + dr).unsigned_abs()) / 2
}

/// Hex distance of a displacement on the torus of side `side`.
fn periodic_norm(dq: i64, dr: i64, side: i64) -> u64 {
    let mut best = u64::MAX;
    for iq in [-side, 0, side] {
        for ir in [-side, 0, side] {
            best = best.min(axial_norm(dq + iq, dr + ir));
        }
    }
    best
}

/// Minimum graph distance between two canonical sites under periodic images.
pub fn hex_distance(a: SiteCoord, b: SiteCoord, cfg: &LatticeConfig) -> u32 {
    let dq = b.q as i64 - a.q as i64;
    let dr = b.r as i64 - a.r as i64;
    periodic_norm(dq, dr, cfg.side as i64) as u32
}

/// All offsets at hex distance `1..=z` from the origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodTable {
    range: u32,
    offsets: Vec<Offset>,
}

impl NeighborhoodTable {
    pub fn range(&self) -> u32 {
        self.range
    }

    pub fn offsets(&self) -> &[Offset] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// Hexagonal ball of radius `z` minus its centre, ordered ring by ring.
pub fn neighborhood_offsets(z: u32) -> Result<NeighborhoodTable> {
    if z == 0 {
        return Err(Error::InvalidParameter(
            "transmission range z must be at least 1".into(),
        ));
    }
    let z = z as i32;
    let mut offsets = Vec::with_capacity(3 * z as usize * (z as usize + 1));
    for dq in -z..=z {
        for dr in (-z).max(-dq - z)..=z.min(-dq + z) {
            if dq != 0 || dr != 0 {
                offsets.push(Offset::new(dq, dr));
            }
        }
    }
    offsets.sort_by_key(|o| (o.norm(), o.dq, o.dr));
    Ok(NeighborhoodTable {
        range: z as u32,
        offsets,
    })
}

/// A lattice geometry with its precomputed range stencil.
///
/// `pair_adjacent[a * s + b]` tells whether two sites reached from a common
/// centre through stencil entries `a` and `b` are themselves within range.
/// It only depends on the offsets and the side, so clustering never has to
/// evaluate distances per node.
#[derive(Debug, Clone)]
pub struct Lattice {
    cfg: LatticeConfig,
    table: NeighborhoodTable,
    pair_adjacent: Vec<bool>,
}

impl Lattice {
    pub fn new(cfg: LatticeConfig) -> Self {
        let table = neighborhood_offsets(cfg.range).expect("validated range");
        let s = table.len();
        let side = cfg.side as i64;
        let mut pair_adjacent = vec![false; s * s];
        for (a, oa) in table.offsets.iter().enumerate() {
            for (b, ob) in table.offsets.iter().enumerate() {
                let d = *ob - *oa;
                let dist = periodic_norm(d.dq as i64, d.dr as i64, side);
                pair_adjacent[a * s + b] = a != b && dist <= cfg.range as u64;
            }
        }
        Self {
            cfg,
            table,
            pair_adjacent,
        }
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.cfg
    }

    pub fn side(&self) -> u32 {
        self.cfg.side
    }

    pub fn range(&self) -> u32 {
        self.cfg.range
    }

    pub fn site_count(&self) -> usize {
        self.cfg.site_count()
    }

    pub fn stencil(&self) -> &NeighborhoodTable {
        &self.table
    }

    /// Number of sites in range of any site, `3·z·(z+1)`.
    pub fn stencil_len(&self) -> usize {
        self.table.len()
    }

    #[inline]
    pub fn pair_adjacent(&self, a: usize, b: usize) -> bool {
        self.pair_adjacent[a * self.table.len() + b]
    }

    /// Site reached from `site` by `offset`, wrapped.
    #[inline]
    pub fn shift(&self, site: SiteCoord, offset: Offset) -> SiteCoord {
        let side = self.cfg.side as i32;
        let mut q = site.q as i32 + offset.dq;
        let mut r = site.r as i32 + offset.dr;
        // offsets never exceed one period
        if q < 0 {
            q += side;
        } else if q >= side {
            q -= side;
        }
        if r < 0 {
            r += side;
        } else if r >= side {
            r -= side;
        }
        SiteCoord {
            q: q as u32,
            r: r as u32,
        }
    }

    /// Site indices of the range-`z` neighbourhood of `site`, in stencil order.
    pub fn neighbors(&self, site: SiteCoord) -> impl Iterator<Item = usize> + '_ {
        let side = self.cfg.side;
        self.table
            .offsets
            .iter()
            .map(move |&o| self.shift(site, o).index(side))
    }

    pub fn distance(&self, a: SiteCoord, b: SiteCoord) -> u32 {
        hex_distance(a, b, &self.cfg)
    }
}
