//! Bernoulli bond percolation on the box `{-N, ..., N}²`.
//!
//! Edges are enumerated in a fixed order and edge `i` is open iff the `i`-th
//! 64-bit output of the seeded stream, read as a uniform on `[0, 1)`, is
//! below `p`. Samples with the same seed and different `p` therefore share
//! uniforms and are monotonically coupled.

use std::fmt::Write;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::graph::{BaseGraph, BaseKind, Csr};
use crate::{Error, Result};

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = p;
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a as u32;
        self.size[a] += self.size[b];
    }
}

/// Connected components of `(0..n, edges)`: `(label of each vertex, sizes)`.
/// Labels are sorted by size, largest first, ties by smallest vertex id.
pub fn label_clusters(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> (Vec<u32>, Vec<usize>) {
    let mut uf = UnionFind::new(n);
    for (u, v) in edges {
        uf.union(u, v);
    }
    let roots: Vec<usize> = (0..n).map(|v| uf.find(v)).collect();
    // First vertex seen is the smallest member of its cluster.
    let mut order: Vec<usize> = (0..n).filter(|&v| roots[v] == v).collect();
    let mut min_member = vec![usize::MAX; n];
    for v in (0..n).rev() {
        min_member[roots[v]] = v;
    }
    order.sort_by_key(|&r| (std::cmp::Reverse(uf.size[r]), min_member[r]));
    let mut label_of_root = vec![0u32; n];
    for (label, &r) in order.iter().enumerate() {
        label_of_root[r] = label as u32;
    }
    let labels = roots.iter().map(|&r| label_of_root[r]).collect();
    let sizes = order.iter().map(|&r| uf.size[r] as usize).collect();
    (labels, sizes)
}

/// One bond configuration on `{-N, ..., N}²` with its cluster partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PercolationSample {
    pub n: u64,
    pub p: f64,
    pub seed: u64,
    pub open: Vec<bool>,
    pub cluster_of: Vec<u32>,
    pub cluster_sizes: Vec<usize>,
}

/// Box vertex id of `(x, y)`, matching [`BaseGraph`] boxes.
fn vertex_id(n: i64, x: i64, y: i64) -> usize {
    ((x + n) * (2 * n + 1) + (y + n)) as usize
}

/// Nearest-neighbour edges of the box in sampling order: for each vertex in
/// id order, its `+x` edge then its `+y` edge.
pub fn box_edges(n: u64) -> Vec<(usize, usize)> {
    let n = n as i64;
    let mut edges = Vec::with_capacity((2 * (2 * n + 1) * 2 * n) as usize);
    for x in -n..=n {
        for y in -n..=n {
            let v = vertex_id(n, x, y);
            if x < n {
                edges.push((v, vertex_id(n, x + 1, y)));
            }
            if y < n {
                edges.push((v, vertex_id(n, x, y + 1)));
            }
        }
    }
    edges
}

fn check(n: u64, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadParameter(format!("p = {p} outside [0, 1]")));
    }
    if n == 0 {
        return Err(Error::BadParameter("box half-width must be >= 1".into()));
    }
    Ok(())
}

/// Uniform on `[0, 1)` from the top 53 bits.
fn unit(u: u64) -> f64 {
    (u >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn sample_bonds(n: u64, p: f64, seed: u64) -> Result<PercolationSample> {
    check(n, p)?;
    let edges = box_edges(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let open: Vec<bool> = edges.iter().map(|_| unit(rng.next_u64()) < p).collect();
    Ok(PercolationSample::from_open(n, p, seed, open))
}

impl PercolationSample {
    /// Sample from an explicit open-edge bitmap in [`box_edges`] order.
    pub fn from_open(n: u64, p: f64, seed: u64, open: Vec<bool>) -> Self {
        let side = (2 * n + 1) as usize;
        let edges = box_edges(n);
        let (cluster_of, cluster_sizes) =
            label_clusters(side * side, edges.iter().zip(&open).filter(|(_, &o)| o).map(|(&e, _)| e));
        PercolationSample { n, p, seed, open, cluster_of, cluster_sizes }
    }

    pub fn vertex_count(&self) -> usize {
        let side = (2 * self.n + 1) as usize;
        side * side
    }

    pub fn origin(&self) -> usize {
        let n = self.n as i64;
        vertex_id(n, 0, 0)
    }

    pub fn coords(&self, v: usize) -> [i64; 2] {
        let n = self.n as i64;
        let w = (2 * n + 1) as usize;
        [(v / w) as i64 - n, (v % w) as i64 - n]
    }

    pub fn open_edges(&self) -> Vec<(usize, usize)> {
        box_edges(self.n).into_iter().zip(&self.open).filter(|(_, &o)| o).map(|(e, _)| e).collect()
    }

    pub fn open_fraction(&self) -> f64 {
        self.open.iter().filter(|&&o| o).count() as f64 / self.open.len() as f64
    }

    /// Vertices of cluster `label`, ascending.
    pub fn cluster(&self, label: u32) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| self.cluster_of[v] == label).collect()
    }

    /// Cluster `label` as a base graph with ambient coordinates. Vertices with
    /// `‖z‖∞ = N` form its truncation boundary; the origin is the vertex at
    /// `(0, 0)` when the cluster contains it, else its smallest vertex.
    pub fn cluster_graph(&self, label: u32) -> Result<BaseGraph> {
        let members = self.cluster(label);
        if members.is_empty() {
            return Err(Error::EmptyBase);
        }
        let mut index = vec![usize::MAX; self.vertex_count()];
        for (i, &v) in members.iter().enumerate() {
            index[v] = i;
        }
        let edges: Vec<(usize, usize)> = self
            .open_edges()
            .into_iter()
            .filter(|&(u, _)| index[u] != usize::MAX)
            .map(|(u, v)| (index[u], index[v]))
            .collect();
        let coords: Vec<[i64; 2]> = members.iter().map(|&v| self.coords(v)).collect();
        let n = self.n as i64;
        let boundary = coords.iter().map(|c| c[0].abs().max(c[1].abs()) == n).collect();
        let origin = index[self.origin()];
        let origin = if origin == usize::MAX { 0 } else { origin };
        let csr = Csr::from_edges(members.len(), &edges)?;
        BaseGraph::from_parts(BaseKind::PercolationCluster, csr, Some(coords), origin, boundary)
    }

    /// `"N p seed"` followed by one `u v` line per open edge.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {:?} {}\n", self.n, self.p, self.seed);
        for (u, v) in self.open_edges() {
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let bad = |line: usize, message: &str| Error::Parse { line, message: message.into() };
        let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
        let f: Vec<&str> = header.split_whitespace().collect();
        let [n, p, seed] = f[..] else {
            return Err(bad(1, "header must be `N p seed`"));
        };
        let n: u64 = n.parse().map_err(|_| bad(1, "bad N"))?;
        let p: f64 = p.parse().map_err(|_| bad(1, "bad p"))?;
        let seed: u64 = seed.parse().map_err(|_| bad(1, "bad seed"))?;
        check(n, p)?;
        let edges = box_edges(n);
        let position: std::collections::HashMap<(usize, usize), usize> =
            edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut open = vec![false; edges.len()];
        for (idx, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            let [u, v] = f[..] else {
                return Err(bad(idx + 1, "expected `u v`"));
            };
            let e = (u.parse().map_err(|_| bad(idx + 1, "bad vertex"))?, v.parse().map_err(|_| bad(idx + 1, "bad vertex"))?);
            let i = *position.get(&e).ok_or_else(|| bad(idx + 1, "not a box edge"))?;
            open[i] = true;
        }
        Ok(PercolationSample::from_open(n, p, seed, open))
    }
}

/// Resamples with seeds `seed, seed + 1, ...` until the origin lies in a
/// largest cluster, and returns that cluster with the accepted sample.
pub fn origin_cluster_conditioned(
    n: u64,
    p: f64,
    seed: u64,
    max_attempts: usize,
) -> Result<(BaseGraph, PercolationSample)> {
    check(n, p)?;
    for attempt in 0..max_attempts {
        let sample = sample_bonds(n, p, seed.wrapping_add(attempt as u64))?;
        if sample.cluster_of[sample.origin()] == 0 {
            return Ok((sample.cluster_graph(0)?, sample));
        }
    }
    Err(Error::ConditioningFailed { attempts: max_attempts })
}

/// Fraction of seeds `seed..seed + count` whose origin lies in a largest
/// cluster, computed in parallel.
pub fn conditioning_success_rate(n: u64, p: f64, seed: u64, count: usize) -> Result<f64> {
    check(n, p)?;
    let hits = (0..count as u64)
        .into_par_iter()
        .map(|i| sample_bonds(n, p, seed.wrapping_add(i)).map(|s| (s.cluster_of[s.origin()] == 0) as usize))
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / count as f64)
}
