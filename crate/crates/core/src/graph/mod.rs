//! Base graphs, tooth profiles and comb graphs.
//!
//! Every graph in this crate is finite. Infinite graphs (ℤ, ℤ², the one-sided
//! gasket, the infinite percolation cluster) are represented by a finite
//! window together with the set of *truncation boundary* vertices: the
//! vertices whose neighbourhood differs from the one in the infinite graph.
//! Anything computed from a walk that never steps off such a vertex is exact.

pub mod base;
pub mod comb;
pub mod gasket;
pub mod io;
pub mod profile;

use std::collections::VecDeque;

pub use base::{BaseGraph, BaseKind, BaseSpec};
pub use comb::{CombGraph, CombVertex, DenseComb};
pub use profile::{Metric, ProfileFamily, TeethProfile};

/// Read-only adjacency view shared by the solvers and kernel evolutions.
pub trait Graph {
    fn vertex_count(&self) -> usize;

    fn degree(&self, v: usize) -> usize;

    fn neighbors(&self, v: usize) -> Neighbors<'_>;

    /// True when `v` sits on the truncation boundary of a finite window.
    fn is_truncated(&self, _v: usize) -> bool {
        false
    }

    fn edge_count(&self) -> usize {
        (0..self.vertex_count()).map(|v| self.degree(v)).sum::<usize>() / 2
    }
}

/// Neighbour iterator that avoids allocation for both stored and computed
/// adjacency.
pub enum Neighbors<'a> {
    Slice(std::slice::Iter<'a, usize>),
    Inline { buf: [usize; 4], len: u8, pos: u8 },
}

impl<'a> Neighbors<'a> {
    pub(crate) fn inline(items: &[usize]) -> Self {
        let mut buf = [0; 4];
        buf[..items.len()].copy_from_slice(items);
        Neighbors::Inline { buf, len: items.len() as u8, pos: 0 }
    }
}

impl Iterator for Neighbors<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        match self {
            Neighbors::Slice(it) => it.next().copied(),
            Neighbors::Inline { buf, len, pos } => {
                if pos < len {
                    let v = buf[*pos as usize];
                    *pos += 1;
                    Some(v)
                } else {
                    None
                }
            }
        }
    }
}

/// Compressed sparse row adjacency of a simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Csr {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Csr {
    /// Builds the adjacency from an undirected edge list. Each edge is listed
    /// once; self-loops and duplicates are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> crate::Result<Self> {
        let mut deg = vec![0usize; n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(crate::Error::InvalidGraph(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{n}"
                )));
            }
            if u == v {
                return Err(crate::Error::InvalidGraph(format!("self-loop at {u}")));
            }
            deg[u] += 1;
            deg[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &deg {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut targets = vec![0; offsets[n]];
        for &(u, v) in edges {
            targets[fill[u]] = v;
            fill[u] += 1;
            targets[fill[v]] = u;
            fill[v] += 1;
        }
        for v in 0..n {
            let row = &mut targets[offsets[v]..offsets[v + 1]];
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(crate::Error::InvalidGraph(format!("duplicate edge at {v}")));
            }
        }
        Ok(Csr { offsets, targets })
    }

    /// Materializes any graph view.
    pub fn from_graph<G: Graph + ?Sized>(g: &G) -> Self {
        let n = g.vertex_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for v in 0..n {
            targets.extend(g.neighbors(v));
            offsets.push(targets.len());
        }
        Csr { offsets, targets }
    }

    #[inline]
    pub fn row(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Undirected edges `(u, v)` with `u < v`, in vertex order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.vertex_count())
            .flat_map(move |u| self.row(u).iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }
}

impl Graph for Csr {
    fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    #[inline]
    fn neighbors(&self, v: usize) -> Neighbors<'_> {
        Neighbors::Slice(self.row(v).iter())
    }

    fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }
}

/// Breadth-first distances from `source`, `u32::MAX` for vertices further
/// than `limit` or unreachable.
pub fn bfs_distances<G: Graph + ?Sized>(g: &G, source: usize, limit: u32) -> Vec<u32> {
    let mut dist = vec![u32::MAX; g.vertex_count()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let d = dist[u];
        if d == limit {
            continue;
        }
        for w in g.neighbors(u) {
            if dist[w] == u32::MAX {
                dist[w] = d + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Closed graph-distance ball `{y : d(v, y) <= r}`, sorted by vertex id.
pub fn ball<G: Graph + ?Sized>(g: &G, v: usize, r: u32) -> Vec<usize> {
    bfs_distances(g, v, r)
        .iter()
        .enumerate()
        .filter(|(_, &d)| d <= r)
        .map(|(u, _)| u)
        .collect()
}

pub fn is_connected<G: Graph + ?Sized>(g: &G) -> bool {
    let n = g.vertex_count();
    n == 0 || bfs_distances(g, 0, u32::MAX).iter().all(|&d| d != u32::MAX)
}

/// Distance from `source` to the nearest truncation-boundary vertex, or
/// `None` when no such vertex is reachable. Exact laws of walks started at
/// `source` are available up to this many steps.
pub fn truncation_radius<G: Graph + ?Sized>(g: &G, source: usize) -> Option<u64> {
    let n = g.vertex_count();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    seen[source] = true;
    queue.push_back((source, 0u64));
    while let Some((u, d)) = queue.pop_front() {
        if g.is_truncated(u) {
            return Some(d);
        }
        for w in g.neighbors(u) {
            if !seen[w] {
                seen[w] = true;
                queue.push_back((w, d + 1));
            }
        }
    }
    None
}
