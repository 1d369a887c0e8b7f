//! Connected components of the range-`z` communication graph and the
//! global-connectivity sample `n / n0`.
//!
//! Two independent labelings are provided: a breadth-first "burning" flood
//! over the occupancy map, and a disjoint-set forest. They must agree on
//! every input.

use std::collections::VecDeque;

use crate::dynamics::{Configuration, EMPTY};

/// Sizes of all connected components of a frozen configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentReport {
    /// Component sizes in non-increasing order.
    sizes: Vec<usize>,
    n0: usize,
}

impl ComponentReport {
    fn from_sizes(mut sizes: Vec<usize>, n0: usize) -> Self {
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        debug_assert_eq!(sizes.iter().sum::<usize>(), n0);
        Self { sizes, n0 }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Size of the largest component, 0 for an empty configuration.
    pub fn largest(&self) -> usize {
        self.sizes.first().copied().unwrap_or(0)
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn component_count(&self) -> usize {
        self.sizes.len()
    }

    /// `largest / n0`, with 1 for `n0 <= 1`.
    pub fn connectivity(&self) -> f64 {
        if self.n0 <= 1 {
            1.0
        } else {
            self.largest() as f64 / self.n0 as f64
        }
    }
}

/// Labels components by burning: each unburnt node ignites a fire that
/// spreads through the range stencil until it dies out.
pub fn components_burning(config: &Configuration) -> ComponentReport {
    burn(config, &mut 0)
}

/// Number of stencil probes one burning pass performs. Every node is
/// dequeued exactly once and probes each stencil site once, so this equals
/// `n0 · 3z(z+1)`.
pub fn burning_probe_count(config: &Configuration) -> u64 {
    let mut probes = 0;
    burn(config, &mut probes);
    probes
}

fn burn(config: &Configuration, probes: &mut u64) -> ComponentReport {
    let lattice = config.lattice();
    let side = lattice.side();
    let occupied = config.occupancy_map();
    let positions = config.positions();
    let n0 = positions.len();
    let mut burnt = vec![false; n0];
    let mut front = VecDeque::new();
    let mut sizes = Vec::new();
    for seed in 0..n0 {
        if burnt[seed] {
            continue;
        }
        burnt[seed] = true;
        front.push_back(seed as u32);
        let mut size = 0;
        while let Some(node) = front.pop_front() {
            size += 1;
            let site = positions[node as usize];
            for &offset in lattice.stencil().offsets() {
                *probes += 1;
                let other = occupied[lattice.shift(site, offset).index(side)];
                if other != EMPTY && !burnt[other as usize] {
                    burnt[other as usize] = true;
                    front.push_back(other);
                }
            }
        }
        sizes.push(size);
    }
    ComponentReport::from_sizes(sizes, n0)
}

/// Disjoint-set forest with path compression and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    /// Returns `true` if `a` and `b` were in different sets.
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        true
    }

    /// Sizes of all sets.
    pub fn set_sizes(&self) -> Vec<usize> {
        (0..self.parent.len() as u32)
            .filter(|&i| self.parent[i as usize] == i)
            .map(|i| self.size[i as usize] as usize)
            .collect()
    }
}

/// Labels components with a disjoint-set forest over the range adjacency.
pub fn components_unionfind(config: &Configuration) -> ComponentReport {
    let lattice = config.lattice();
    let side = lattice.side();
    let occupied = config.occupancy_map();
    let positions = config.positions();
    let mut dsu = DisjointSet::new(positions.len());
    for (node, &site) in positions.iter().enumerate() {
        for &offset in lattice.stencil().offsets() {
            let other = occupied[lattice.shift(site, offset).index(side)];
            // each edge is seen from both ends; join it once
            if other != EMPTY && other > node as u32 {
                dsu.union(node as u32, other);
            }
        }
    }
    ComponentReport::from_sizes(dsu.set_sizes(), positions.len())
}

/// One sample of the global connectivity: largest component over `n0`.
pub fn connectivity_sample(config: &Configuration) -> f64 {
    components_unionfind(config).connectivity()
}
