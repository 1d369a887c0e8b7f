//! Complex-network observables of a configuration: degree distribution,
//! clustering by degree and nearest-neighbour degree by degree.
//!
//! Ensemble pooling is node-weighted and kept in exact integer totals, so
//! tables built from disjoint blocks merge bit-identically in any order.
//! This works because, within a degree class `k`, every node shares the
//! same clustering denominator `k(k-1)/2` and the same `k_nn` divisor `k`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Configuration, EMPTY};
use crate::error::{Error, Result};

/// Degree of every node, indexed by node id.
pub fn degree_sequence(config: &Configuration) -> Vec<u32> {
    let lattice = config.lattice();
    let side = lattice.side();
    let occupied = config.occupancy_map();
    config
        .positions()
        .iter()
        .map(|&site| {
            lattice
                .stencil()
                .offsets()
                .iter()
                .filter(|&&o| occupied[lattice.shift(site, o).index(side)] != EMPTY)
                .count() as u32
        })
        .collect()
}

/// Arithmetic mean of the degree sequence (0 for an empty configuration).
pub fn mean_degree(config: &Configuration) -> f64 {
    let degrees = degree_sequence(config);
    if degrees.is_empty() {
        return 0.0;
    }
    degrees.iter().map(|&k| k as u64).sum::<u64>() as f64 / degrees.len() as f64
}

/// Mean clustering coefficient per degree class, for `k >= 2`.
pub fn clustering_by_degree(config: &Configuration) -> BTreeMap<u32, f64> {
    let mut acc = MetricsAccumulator::new(config.config().range());
    acc.observe(config);
    acc.clustering()
}

/// Mean nearest-neighbour degree per degree class, for `k >= 1`.
pub fn knn_by_degree(config: &Configuration) -> BTreeMap<u32, f64> {
    let mut acc = MetricsAccumulator::new(config.config().range());
    acc.observe(config);
    acc.knn()
}

/// Normalised degree histogram `p(k)` for `k` in `0..=kmax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDistribution {
    p: Vec<f64>,
    samples: u64,
}

impl DegreeDistribution {
    /// From raw per-degree counts; index is the degree.
    pub fn from_counts(counts: &[u64]) -> Self {
        let samples: u64 = counts.iter().sum();
        let last = counts.iter().rposition(|&c| c > 0).map_or(0, |i| i + 1);
        let p = counts[..last]
            .iter()
            .map(|&c| c as f64 / samples as f64)
            .collect();
        Self { p, samples }
    }

    /// From probabilities that already sum to one.
    pub fn from_probabilities(p: Vec<f64>) -> Result<Self> {
        let total: f64 = p.iter().sum();
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "probabilities must lie in [0, 1] and sum to 1 (sum = {total})"
            )));
        }
        Ok(Self { p, samples: 0 })
    }

    pub fn p(&self, k: u32) -> f64 {
        self.p.get(k as usize).copied().unwrap_or(0.0)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    /// Largest degree with non-zero probability.
    pub fn kmax(&self) -> u32 {
        self.p.iter().rposition(|&x| x > 0.0).unwrap_or(0) as u32
    }

    /// Number of nodes behind an empirical distribution (0 if built from
    /// probabilities).
    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn mean(&self) -> f64 {
        self.p.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// `P(K >= k)`.
    pub fn tail_from(&self, k: u32) -> f64 {
        self.p.iter().skip(k as usize).rev().sum()
    }
}

/// Cutoff degree: the largest `k` with `P(K >= k) >= epsilon`, so that any
/// degree above `k_c` has total probability below `epsilon`.
pub fn cutoff_degree(dist: &DegreeDistribution, epsilon: f64) -> u32 {
    debug_assert!(epsilon > 0.0 && epsilon < 1.0);
    let mut tail = 0.0;
    for k in (0..dist.p.len()).rev() {
        tail += dist.p[k];
        if tail >= epsilon {
            return k as u32;
        }
    }
    0
}

/// Exact integer totals for node-weighted pooling across configurations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsAccumulator {
    range: u32,
    /// Nodes of degree k.
    degree_count: Vec<u64>,
    /// Closed neighbour pairs summed over nodes of degree k.
    closed_pairs: Vec<u64>,
    /// Neighbour degrees summed over nodes of degree k.
    neighbor_degree_sum: Vec<u64>,
    configurations: u64,
}

impl MetricsAccumulator {
    pub fn new(range: u32) -> Self {
        let s = 3 * range as usize * (range as usize + 1) + 1;
        Self {
            range,
            degree_count: vec![0; s],
            closed_pairs: vec![0; s],
            neighbor_degree_sum: vec![0; s],
            configurations: 0,
        }
    }

    pub fn range(&self) -> u32 {
        self.range
    }

    pub fn configurations(&self) -> u64 {
        self.configurations
    }

    pub fn nodes(&self) -> u64 {
        self.degree_count.iter().sum()
    }

    pub fn degree_counts(&self) -> &[u64] {
        &self.degree_count
    }

    /// Adds every node of `config` to the totals.
    pub fn observe(&mut self, config: &Configuration) {
        assert_eq!(config.config().range(), self.range, "range mismatch");
        let lattice = config.lattice();
        let side = lattice.side();
        let occupied = config.occupancy_map();
        let offsets = lattice.stencil().offsets();
        let degrees = degree_sequence(config);
        let mut present: Vec<usize> = Vec::with_capacity(offsets.len());
        let mut nbrs: Vec<u32> = Vec::with_capacity(offsets.len());
        for (node, &site) in config.positions().iter().enumerate() {
            present.clear();
            nbrs.clear();
            for (slot, &o) in offsets.iter().enumerate() {
                let other = occupied[lattice.shift(site, o).index(side)];
                if other != EMPTY {
                    present.push(slot);
                    nbrs.push(other);
                }
            }
            let k = degrees[node] as usize;
            debug_assert_eq!(k, present.len());
            let mut closed = 0u64;
            for (i, &a) in present.iter().enumerate() {
                for &b in &present[i + 1..] {
                    closed += lattice.pair_adjacent(a, b) as u64;
                }
            }
            let nsum: u64 = nbrs.iter().map(|&j| degrees[j as usize] as u64).sum();
            self.degree_count[k] += 1;
            self.closed_pairs[k] += closed;
            self.neighbor_degree_sum[k] += nsum;
        }
        self.configurations += 1;
    }

    /// Adds another accumulator's totals; both must share the range.
    pub fn absorb(&mut self, other: &MetricsAccumulator) -> Result<()> {
        if other.range != self.range {
            return Err(Error::MergeConflict(format!(
                "range z={} vs z={}",
                self.range, other.range
            )));
        }
        for (a, b) in self.degree_count.iter_mut().zip(&other.degree_count) {
            *a += b;
        }
        for (a, b) in self.closed_pairs.iter_mut().zip(&other.closed_pairs) {
            *a += b;
        }
        for (a, b) in self
            .neighbor_degree_sum
            .iter_mut()
            .zip(&other.neighbor_degree_sum)
        {
            *a += b;
        }
        self.configurations += other.configurations;
        Ok(())
    }

    pub fn distribution(&self) -> DegreeDistribution {
        DegreeDistribution::from_counts(&self.degree_count)
    }

    pub fn mean_degree(&self) -> f64 {
        let nodes = self.nodes();
        if nodes == 0 {
            return 0.0;
        }
        let total: u64 = self
            .degree_count
            .iter()
            .enumerate()
            .map(|(k, &c)| k as u64 * c)
            .sum();
        total as f64 / nodes as f64
    }

    pub fn clustering(&self) -> BTreeMap<u32, f64> {
        self.degree_count
            .iter()
            .enumerate()
            .skip(2)
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| {
                let pairs = (k * (k - 1) / 2) as f64;
                (k as u32, self.closed_pairs[k] as f64 / (c as f64 * pairs))
            })
            .collect()
    }

    pub fn knn(&self) -> BTreeMap<u32, f64> {
        self.degree_count
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| {
                (
                    k as u32,
                    self.neighbor_degree_sum[k] as f64 / (c as f64 * k as f64),
                )
            })
            .collect()
    }
}

/// Ensemble-averaged network metrics at one `(σ, z)` operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub z: u32,
    pub sigma: f64,
    pub side: u32,
    pub epsilon: f64,
    pub eta_threshold: f64,
    /// Realizations drawn, accepted or not.
    pub attempts: u64,
    pub totals: MetricsAccumulator,
}

impl MetricsTable {
    pub fn new(side: u32, z: u32, sigma: f64, epsilon: f64, eta_threshold: f64) -> Self {
        Self {
            z,
            sigma,
            side,
            epsilon,
            eta_threshold,
            attempts: 0,
            totals: MetricsAccumulator::new(z),
        }
    }

    /// Accepted realizations.
    pub fn realizations(&self) -> u64 {
        self.totals.configurations()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            return 0.0;
        }
        self.realizations() as f64 / self.attempts as f64
    }

    pub fn distribution(&self) -> DegreeDistribution {
        self.totals.distribution()
    }

    pub fn mean_degree(&self) -> f64 {
        self.totals.mean_degree()
    }

    pub fn clustering(&self) -> BTreeMap<u32, f64> {
        self.totals.clustering()
    }

    pub fn knn(&self) -> BTreeMap<u32, f64> {
        self.totals.knn()
    }

    pub fn cutoff(&self) -> u32 {
        cutoff_degree(&self.distribution(), self.epsilon)
    }

    fn same_point(&self, other: &Self) -> bool {
        self.z == other.z
            && self.side == other.side
            && self.sigma.to_bits() == other.sigma.to_bits()
            && self.epsilon.to_bits() == other.epsilon.to_bits()
            && self.eta_threshold.to_bits() == other.eta_threshold.to_bits()
    }

    /// Count-weighted pooling of two tables at the same operating point.
    pub fn merged(&self, other: &Self) -> Result<Self> {
        if !self.same_point(other) {
            return Err(Error::MergeConflict(format!(
                "tables at (L={}, z={}, sigma={}, eps={}, thr={}) and \
                 (L={}, z={}, sigma={}, eps={}, thr={})",
                self.side,
                self.z,
                self.sigma,
                self.epsilon,
                self.eta_threshold,
                other.side,
                other.z,
                other.sigma,
                other.epsilon,
                other.eta_threshold
            )));
        }
        let mut out = self.clone();
        out.totals.absorb(&other.totals)?;
        out.attempts += other.attempts;
        Ok(out)
    }

    /// CSV body with columns `k,p_k,C_k,knn_k`; undefined cells are empty.
    /// `preamble` lines are emitted first, each prefixed with `# `.
    pub fn to_csv(&self, preamble: &[String]) -> String {
        let mut out = String::new();
        for line in preamble {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(
            out,
            "# z={} sigma={} L={} realizations={} attempts={} epsilon={} threshold={} mean_degree={} k_c={}",
            self.z,
            self.sigma,
            self.side,
            self.realizations(),
            self.attempts,
            self.epsilon,
            self.eta_threshold,
            self.mean_degree(),
            self.cutoff()
        );
        out.push_str("k,p_k,C_k,knn_k\n");
        let dist = self.distribution();
        let clustering = self.clustering();
        let knn = self.knn();
        for (k, &p) in dist.probabilities().iter().enumerate() {
            let k = k as u32;
            let c = clustering
                .get(&k)
                .map(|v| v.to_string())
                .unwrap_or_default();
            let n = knn.get(&k).map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{k},{p},{c},{n}");
        }
        out
    }
}
