//! Node placement and the exclusion random walk.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeConfig, SiteCoord, UNIT_MOVES};

/// Marker for an empty site in the occupancy map.
pub const EMPTY: u32 = u32::MAX;

/// What a random stream is used for inside one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Placement,
    Motion,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Placement => 0x706c_6163_656d_656e,
            Purpose::Motion => 0x6d6f_7469_6f6e_0000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub realization: u64,
    pub purpose: Purpose,
}

/// SplitMix64 finaliser, used to derive independent keys from structured ids.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Folds a sequence of words into one 64-bit key.
pub fn derive_seed(seed: u64, words: &[u64]) -> u64 {
    words.iter().fold(mix64(seed), |acc, &w| mix64(acc ^ w))
}

/// A reproducible random stream: identical `(seed, id)` gives identical draws.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    id: StreamId,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, id: StreamId) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[id.purpose.tag()]));
        rng.set_stream(id.realization);
        Self { seed, id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// `round(σ·N)` with ties to even.
pub fn node_count(sigma: f64, site_count: usize) -> usize {
    (sigma * site_count as f64).round_ties_even() as usize
}

/// Node positions on the lattice with an O(1) site → node map.
#[derive(Debug, Clone)]
pub struct Configuration {
    lattice: Arc<Lattice>,
    positions: Vec<SiteCoord>,
    occupied: Vec<u32>,
    order: Vec<u32>,
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.lattice.config() == other.lattice.config() && self.positions == other.positions
    }
}

impl Configuration {
    pub fn empty(lattice: Arc<Lattice>) -> Self {
        let n = lattice.site_count();
        Self {
            lattice,
            positions: Vec::new(),
            occupied: vec![EMPTY; n],
            order: Vec::new(),
        }
    }

    /// Builds a configuration from explicit positions; node `i` sits at
    /// `positions[i]`. Fails if two nodes share a site.
    pub fn from_positions(lattice: Arc<Lattice>, positions: Vec<SiteCoord>) -> Result<Self> {
        let side = lattice.side();
        let mut occupied = vec![EMPTY; lattice.site_count()];
        for (node, p) in positions.iter().enumerate() {
            if p.q() >= side || p.r() >= side {
                return Err(Error::InvalidParameter(format!(
                    "site {p:?} outside a lattice of side {side}"
                )));
            }
            let slot = &mut occupied[p.index(side)];
            if *slot != EMPTY {
                return Err(Error::InvalidParameter(format!(
                    "nodes {} and {node} share site ({}, {})",
                    *slot,
                    p.q(),
                    p.r()
                )));
            }
            *slot = node as u32;
        }
        Ok(Self {
            lattice,
            positions,
            occupied,
            order: Vec::new(),
        })
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn config(&self) -> &LatticeConfig {
        self.lattice.config()
    }

    pub fn positions(&self) -> &[SiteCoord] {
        &self.positions
    }

    /// Node id at a site index, or `None` if the site is empty.
    #[inline]
    pub fn node_at(&self, site_index: usize) -> Option<u32> {
        match self.occupied[site_index] {
            EMPTY => None,
            n => Some(n),
        }
    }

    pub(crate) fn occupancy_map(&self) -> &[u32] {
        &self.occupied
    }

    pub fn n0(&self) -> usize {
        self.positions.len()
    }

    /// Fraction of occupied sites, `n0 / N`.
    pub fn occupancy(&self) -> f64 {
        self.positions.len() as f64 / self.lattice.site_count() as f64
    }

    /// Places `round(σ·N)` nodes on distinct sites drawn uniformly without
    /// replacement.
    pub fn random_placement<R: Rng + ?Sized>(
        lattice: Arc<Lattice>,
        sigma: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&sigma) {
            return Err(Error::InvalidParameter(format!(
                "occupancy {sigma} outside [0, 1]"
            )));
        }
        let n_sites = lattice.site_count();
        let n0 = node_count(sigma, n_sites);
        let side = lattice.side();
        let positions = rand::seq::index::sample(rng, n_sites, n0)
            .into_iter()
            .map(|i| SiteCoord::from_index(i, side))
            .collect();
        Self::from_positions(lattice, positions)
    }

    /// One sweep of the exclusion walk: every node, in a fresh random order,
    /// picks one of the six directions and moves there if the target is empty.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n0 = self.positions.len();
        if n0 == 0 {
            return;
        }
        self.order.clear();
        self.order.extend(0..n0 as u32);
        self.order.shuffle(rng);
        let side = self.lattice.side();
        for k in 0..n0 {
            let node = self.order[k] as usize;
            let dir = rng.random_range(0..UNIT_MOVES.len());
            let from = self.positions[node];
            let to = self.lattice.shift(from, UNIT_MOVES[dir]);
            let to_idx = to.index(side);
            if self.occupied[to_idx] == EMPTY {
                self.occupied[from.index(side)] = EMPTY;
                self.occupied[to_idx] = node as u32;
                self.positions[node] = to;
            }
        }
        debug_assert!(self.positions_are_exclusive());
    }

    pub fn advance<R: Rng + ?Sized>(&mut self, steps: usize, rng: &mut R) {
        for _ in 0..steps {
            self.step(rng);
        }
    }

    /// Positions and occupancy map agree and no site holds two nodes.
    pub fn is_consistent(&self) -> bool {
        let side = self.lattice.side();
        let mapped = self.occupied.iter().filter(|&&n| n != EMPTY).count();
        mapped == self.positions.len()
            && self
                .positions
                .iter()
                .enumerate()
                .all(|(i, p)| self.occupied[p.index(side)] == i as u32)
    }

    /// Every node is the one its site maps to, so no two nodes share a site.
    /// O(n0), cheap enough to assert after every sweep in test builds.
    pub fn positions_are_exclusive(&self) -> bool {
        let side = self.lattice.side();
        self.positions
            .iter()
            .enumerate()
            .all(|(i, p)| self.occupied[p.index(side)] == i as u32)
    }

    /// Plain-text snapshot: a header with `L`, `z` and `seed`, then one
    /// `q r` pair per node in node order.
    pub fn to_snapshot(&self, seed: u64) -> String {
        let cfg = self.config();
        let mut out = String::with_capacity(16 * (self.positions.len() + 2));
        out.push_str("# manet configuration snapshot\n");
        let _ = writeln!(out, "L={} z={} seed={}", cfg.side(), cfg.range(), seed);
        for p in &self.positions {
            let _ = writeln!(out, "{} {}", p.q(), p.r());
        }
        out
    }

    /// Parses [`Configuration::to_snapshot`] output; returns the
    /// configuration and the recorded seed.
    pub fn from_snapshot(text: &str) -> Result<(Self, u64)> {
        let mut header: Option<(u32, u32, u64)> = None;
        let mut positions = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            match header {
                None => {
                    let (mut l, mut z, mut seed) = (None, None, None);
                    for field in line.split_whitespace() {
                        let (key, value) = field.split_once('=').ok_or_else(|| {
                            parse_err(format!("expected key=value, got {field:?}"))
                        })?;
                        let bad = |_| parse_err(format!("bad value for {key}: {value:?}"));
                        match key {
                            "L" => l = Some(value.parse::<u32>().map_err(bad)?),
                            "z" => z = Some(value.parse::<u32>().map_err(bad)?),
                            "seed" => seed = Some(value.parse::<u64>().map_err(bad)?),
                            _ => return Err(parse_err(format!("unknown header key {key:?}"))),
                        }
                    }
                    match (l, z, seed) {
                        (Some(l), Some(z), Some(seed)) => header = Some((l, z, seed)),
                        _ => return Err(parse_err("header must define L, z and seed".into())),
                    }
                }
                Some((side, _, _)) => {
                    let mut it = line.split_whitespace();
                    let mut next = || -> Result<u32> {
                        let tok = it
                            .next()
                            .ok_or_else(|| parse_err("expected two coordinates".into()))?;
                        let v: u32 = tok
                            .parse()
                            .map_err(|_| parse_err(format!("bad coordinate {tok:?}")))?;
                        if v >= side {
                            return Err(parse_err(format!("coordinate {v} outside [0, {side})")));
                        }
                        Ok(v)
                    };
                    let q = next()?;
                    let r = next()?;
                    if it.next().is_some() {
                        return Err(parse_err("trailing tokens".into()));
                    }
                    positions.push(SiteCoord::from_index(
                        r as usize * side as usize + q as usize,
                        side,
                    ));
                }
            }
        }
        let (side, z, seed) = header.ok_or(Error::Parse {
            line: 0,
            message: "missing header".into(),
        })?;
        let lattice = Arc::new(Lattice::new(LatticeConfig::new(side, z)?));
        Ok((Self::from_positions(lattice, positions)?, seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(side: u32, z: u32) -> Arc<Lattice> {
        Arc::new(Lattice::new(LatticeConfig::new(side, z).unwrap()))
    }

    fn stream(realization: u64, purpose: Purpose) -> RngStream {
        RngStream::new(
            7,
            StreamId {
                realization,
                purpose,
            },
        )
    }

    #[test]
    fn placement_counts() {
        let lat = lattice(10, 1);
        let mut rng = stream(0, Purpose::Placement);
        let c = Configuration::random_placement(lat.clone(), 0.0, &mut rng).unwrap();
        assert_eq!(c.n0(), 0);
        assert_eq!(c.occupancy(), 0.0);
        let c = Configuration::random_placement(lat.clone(), 1.0, &mut rng).unwrap();
        assert_eq!(c.n0(), 100);
        assert_eq!(c.occupancy(), 1.0);
        assert!(c.is_consistent());
        assert!(Configuration::random_placement(lat, 1.5, &mut rng).is_err());
    }

    #[test]
    fn large_lattice_node_count() {
        assert_eq!(node_count(0.37, 40_000), 14_800);
        let c = Configuration::empty(lattice(200, 2));
        assert_eq!(c.occupancy(), 0.0);
        let positions = (0..14_800).map(|i| SiteCoord::from_index(i, 200)).collect();
        let c = Configuration::from_positions(lattice(200, 2), positions).unwrap();
        assert_eq!(c.occupancy(), 0.37);
    }

    #[test]
    fn rounding_is_half_to_even() {
        assert_eq!(node_count(0.5, 5), 2);
        assert_eq!(node_count(0.7, 5), 4);
        assert_eq!(node_count(0.3, 5), 2);
    }

    #[test]
    fn duplicate_sites_rejected() {
        let lat = lattice(5, 1);
        let p = SiteCoord::from_index(3, 5);
        assert!(Configuration::from_positions(lat, vec![p, p]).is_err());
    }

    #[test]
    fn single_node_moves_to_a_neighbour() {
        let lat = lattice(10, 1);
        let start = SiteCoord::from_index(55, 10);
        let mut counts = [0usize; 6];
        let mut rng = stream(1, Purpose::Motion);
        for _ in 0..6000 {
            let mut c = Configuration::from_positions(lat.clone(), vec![start]).unwrap();
            c.step(&mut rng);
            let end = c.positions()[0];
            let dir = UNIT_MOVES
                .iter()
                .position(|&m| lat.shift(start, m) == end)
                .expect("moved to a neighbour");
            counts[dir] += 1;
        }
        for c in counts {
            // binomial(6000, 1/6): sd ≈ 28.9
            assert!((c as i64 - 1000).abs() < 150, "{counts:?}");
        }
    }

    #[test]
    fn full_lattice_is_frozen() {
        let lat = lattice(8, 1);
        let mut rng = stream(2, Purpose::Placement);
        let mut c = Configuration::random_placement(lat, 1.0, &mut rng).unwrap();
        let before = c.clone();
        c.advance(5, &mut rng);
        assert_eq!(c, before);
    }

    #[test]
    fn blocked_direction_frequency() {
        // Node 0 at the origin, node 1 one step in +q. Whenever node 0 moves
        // first, its move is blocked iff it picks +q.
        let lat = lattice(30, 1);
        let a = SiteCoord::from_index(0, 30);
        let b = lat.shift(a, UNIT_MOVES[0]);
        let mut rng = stream(3, Purpose::Motion);
        let (mut first, mut blocked) = (0usize, 0usize);
        for _ in 0..30_000 {
            let mut order = [0u32, 1];
            let mut probe = rng.clone();
            order.shuffle(&mut probe);
            let mut c = Configuration::from_positions(lat.clone(), vec![a, b]).unwrap();
            c.step(&mut rng);
            if order[0] == 0 {
                first += 1;
                if c.positions()[0] == a {
                    blocked += 1;
                }
            }
        }
        let p = blocked as f64 / first as f64;
        let se = (1.0 / 6.0 * 5.0 / 6.0 / first as f64).sqrt();
        assert!((p - 1.0 / 6.0).abs() < 4.0 * se, "p = {p}, se = {se}");
    }

    #[test]
    fn trajectories_are_reproducible() {
        let lat = lattice(20, 2);
        let run = || {
            let mut placement = stream(4, Purpose::Placement);
            let mut motion = stream(4, Purpose::Motion);
            let mut c = Configuration::random_placement(lat.clone(), 0.3, &mut placement).unwrap();
            c.advance(20, &mut motion);
            c.positions().to_vec()
        };
        assert_eq!(run(), run());
        let mut other = stream(5, Purpose::Placement);
        let c = Configuration::random_placement(lat.clone(), 0.3, &mut other).unwrap();
        assert_ne!(c.positions(), run().as_slice());
    }

    #[test]
    fn snapshot_round_trip() {
        let lat = lattice(12, 2);
        let mut rng = stream(6, Purpose::Placement);
        let c = Configuration::random_placement(lat, 0.2, &mut rng).unwrap();
        let text = c.to_snapshot(99);
        assert!(text.contains("L=12 z=2 seed=99"));
        let (back, seed) = Configuration::from_snapshot(&text).unwrap();
        assert_eq!(seed, 99);
        assert_eq!(back, c);
    }

    #[test]
    fn snapshot_errors_carry_line_numbers() {
        let err = Configuration::from_snapshot("L=5 z=1 seed=0\n1 2\n7 1\n").unwrap_err();
        assert_eq!(
            err,
            Error::Parse {
                line: 3,
                message: "coordinate 7 outside [0, 5)".into()
            }
        );
        assert!(Configuration::from_snapshot("1 2\n").is_err());
    }
}
