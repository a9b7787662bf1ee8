//! `Comb(G̃, f)`: a tooth `{(v, 0), ..., (v, f(v))}` hung at every base vertex.

use serde::{Deserialize, Serialize};

use super::{bfs_distances, BaseGraph, Csr, Graph, Metric, Neighbors, TeethProfile};
use crate::{Error, Result};

/// A comb vertex: base vertex plus height in its tooth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CombVertex {
    pub base: usize,
    pub height: u32,
}

impl CombVertex {
    pub fn skeleton(base: usize) -> Self {
        CombVertex { base, height: 0 }
    }
}

#[derive(Debug, Clone)]
enum Teeth {
    Stored { teeth: Vec<u32>, radius: Vec<u64> },
    /// Lattice windows: the radius has a closed form in the coordinates.
    Computed { origin: [i64; 2] },
}

/// Comb graph over a base graph with a radial tooth profile. The comb is
/// never materialized: adjacency is derived from the base on demand.
#[derive(Debug, Clone)]
pub struct CombGraph {
    base: BaseGraph,
    profile: TeethProfile,
    origin: usize,
    teeth: Teeth,
}

impl CombGraph {
    /// Attaches `f(v) = ϱ(d(o, v))` to every base vertex.
    pub fn attach_teeth(base: BaseGraph, profile: TeethProfile) -> Result<Self> {
        let origin = profile.origin.unwrap_or(base.origin());
        if origin >= base.vertex_count() {
            return Err(Error::BadParameter(format!("profile origin {origin} is not a base vertex")));
        }
        if profile.metric == Metric::SupNorm && !base.has_coords() {
            return Err(Error::MetricUnsupported);
        }
        if !(profile.gamma > 0.0 && profile.gamma.is_finite()) {
            return Err(Error::BadParameter(format!("gamma must be positive, got {}", profile.gamma)));
        }
        let teeth = match (base.half_width(), profile.metric) {
            (Some(_), _) => Teeth::Computed { origin: base.coords(origin).expect("lattice coords") },
            (None, Metric::SupNorm) => {
                let o = base.coords(origin).expect("coords checked above");
                let radius: Vec<u64> = (0..base.vertex_count())
                    .map(|v| sup_dist(base.coords(v).expect("coords checked above"), o))
                    .collect();
                Teeth::Stored { teeth: radius.iter().map(|&k| profile.eval(k)).collect(), radius }
            }
            (None, Metric::GraphDistance) => {
                let radius: Vec<u64> =
                    bfs_distances(&base, origin, u32::MAX).iter().map(|&d| d as u64).collect();
                Teeth::Stored { teeth: radius.iter().map(|&k| profile.eval(k)).collect(), radius }
            }
        };
        Ok(CombGraph { base, profile, origin, teeth })
    }

    pub fn base(&self) -> &BaseGraph {
        &self.base
    }

    pub fn profile(&self) -> &TeethProfile {
        &self.profile
    }

    /// The base origin `o`.
    pub fn origin(&self) -> usize {
        self.origin
    }

    /// `o_V = (o, 0)`
    pub fn origin_vertex(&self) -> CombVertex {
        CombVertex::skeleton(self.origin)
    }

    /// Profile-metric distance from `o` to base vertex `v`.
    #[inline]
    pub fn radius(&self, v: usize) -> u64 {
        match &self.teeth {
            Teeth::Stored { radius, .. } => radius[v],
            Teeth::Computed { origin } => {
                let p = self.base.coords(v).expect("lattice coords");
                match self.profile.metric {
                    Metric::SupNorm => sup_dist(p, *origin),
                    Metric::GraphDistance => {
                        (p[0] - origin[0]).unsigned_abs() + (p[1] - origin[1]).unsigned_abs()
                    }
                }
            }
        }
    }

    /// Tooth length `f(v)`.
    #[inline]
    pub fn tooth(&self, v: usize) -> u32 {
        match &self.teeth {
            Teeth::Stored { teeth, .. } => teeth[v],
            Teeth::Computed { .. } => self.profile.eval(self.radius(v)),
        }
    }

    pub fn contains(&self, x: CombVertex) -> bool {
        x.base < self.base.vertex_count() && x.height <= self.tooth(x.base)
    }

    #[inline]
    pub fn degree(&self, x: CombVertex) -> usize {
        let f = self.tooth(x.base);
        if x.height == 0 {
            self.base.degree(x.base) + (f >= 1) as usize
        } else if x.height < f {
            2
        } else {
            1
        }
    }

    /// The `i`-th neighbour in a fixed order: base neighbours first, then the
    /// tooth; inside a tooth, down before up.
    #[inline]
    pub fn nth_neighbor(&self, x: CombVertex, i: usize) -> CombVertex {
        if x.height == 0 {
            let d = self.base.degree(x.base);
            if i < d {
                CombVertex::skeleton(self.base.nth_neighbor(x.base, i))
            } else {
                CombVertex { base: x.base, height: 1 }
            }
        } else if i == 0 {
            CombVertex { base: x.base, height: x.height - 1 }
        } else {
            CombVertex { base: x.base, height: x.height + 1 }
        }
    }

    pub fn neighbors(&self, x: CombVertex) -> impl Iterator<Item = CombVertex> + '_ {
        (0..self.degree(x)).map(move |i| self.nth_neighbor(x, i))
    }

    /// Only skeleton vertices over truncated base vertices differ from the
    /// infinite comb.
    pub fn is_truncated(&self, x: CombVertex) -> bool {
        x.height == 0 && self.base.is_truncated(x.base)
    }

    /// `|V| = Σ_v (f(v) + 1)`
    pub fn vertex_count(&self) -> u64 {
        (0..self.base.vertex_count()).map(|v| self.tooth(v) as u64 + 1).sum()
    }

    /// `|E| = |Ẽ| + Σ_v f(v)`
    pub fn edge_count(&self) -> u64 {
        self.base.edge_count() as u64 + (0..self.base.vertex_count()).map(|v| self.tooth(v) as u64).sum::<u64>()
    }

    /// Largest tooth over base vertices at profile radius exactly `k`.
    pub fn max_tooth_at_radius(&self, k: u64) -> u32 {
        (0..self.base.vertex_count())
            .filter(|&v| self.radius(v) == k)
            .map(|v| self.tooth(v))
            .max()
            .unwrap_or(0)
    }

    /// Base vertices within graph distance `k` of `center`; the comb ball
    /// `D(center, k)` is everything hanging over them.
    pub fn base_ball(&self, center: usize, k: u64) -> Vec<bool> {
        let n = self.base.vertex_count();
        if self.base.half_width().is_some() {
            return (0..n).map(|v| self.base.lattice_distance(center, v).expect("lattice") <= k).collect();
        }
        let limit = k.min(u32::MAX as u64 - 1) as u32;
        bfs_distances(&self.base, center, limit).iter().map(|&d| d <= limit).collect()
    }

    /// Same comb with a different exponent.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::attach_teeth(self.base.clone(), self.profile.with_gamma(gamma))
    }

    /// Dense, explicitly stored copy. Fails when the comb has more than
    /// `max_vertices` vertices.
    pub fn materialize(&self, max_vertices: usize) -> Result<DenseComb> {
        let nb = self.base.vertex_count();
        let mut offsets = Vec::with_capacity(nb + 1);
        offsets.push(0usize);
        for v in 0..nb {
            let next = offsets[v] + self.tooth(v) as usize + 1;
            if next > max_vertices {
                return Err(Error::TooLarge(format!("comb exceeds {max_vertices} vertices")));
            }
            offsets.push(next);
        }
        let n = offsets[nb];
        let mut labels = Vec::with_capacity(n);
        for v in 0..nb {
            labels.extend((0..=self.tooth(v)).map(|h| CombVertex { base: v, height: h }));
        }
        let mut edges = Vec::with_capacity(n + self.base.edge_count());
        for (i, &x) in labels.iter().enumerate() {
            for y in self.neighbors(x) {
                let j = offsets[y.base] + y.height as usize;
                if i < j {
                    edges.push((i, j));
                }
            }
        }
        let csr = Csr::from_edges(n, &edges)?;
        let truncated = labels.iter().map(|&x| self.is_truncated(x)).collect();
        Ok(DenseComb { csr, labels, offsets, truncated })
    }
}

fn sup_dist(a: [i64; 2], b: [i64; 2]) -> u64 {
    (a[0] - b[0]).unsigned_abs().max((a[1] - b[1]).unsigned_abs())
}

/// Explicit comb with dense vertex ids `offset[v] + height`.
#[derive(Debug, Clone)]
pub struct DenseComb {
    csr: Csr,
    labels: Vec<CombVertex>,
    offsets: Vec<usize>,
    truncated: Vec<bool>,
}

impl DenseComb {
    pub fn index(&self, x: CombVertex) -> usize {
        self.offsets[x.base] + x.height as usize
    }

    pub fn label(&self, i: usize) -> CombVertex {
        self.labels[i]
    }

    pub fn labels(&self) -> &[CombVertex] {
        &self.labels
    }

    pub fn csr(&self) -> &Csr {
        &self.csr
    }

    /// All comb vertices whose base vertex satisfies `base_mask`.
    pub fn lift(&self, base_mask: &[bool]) -> Vec<bool> {
        self.labels.iter().map(|x| base_mask[x.base]).collect()
    }
}

impl Graph for DenseComb {
    fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    fn degree(&self, v: usize) -> usize {
        self.csr.degree(v)
    }

    #[inline]
    fn neighbors(&self, v: usize) -> Neighbors<'_> {
        self.csr.neighbors(v)
    }

    fn is_truncated(&self, v: usize) -> bool {
        self.truncated[v]
    }

    fn edge_count(&self) -> usize {
        self.csr.edge_count()
    }
}
