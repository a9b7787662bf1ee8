use serde::{Deserialize, Serialize};

use super::{gasket, is_connected, Csr, Graph, Neighbors};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseKind {
    ZSegment,
    Z2Box,
    Gasket,
    PercolationCluster,
    /// Any finite connected graph, e.g. read from a file. Treated as the whole
    /// graph: it has no truncation boundary.
    Custom,
}

impl BaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BaseKind::ZSegment => "z-segment",
            BaseKind::Z2Box => "z2-box",
            BaseKind::Gasket => "gasket",
            BaseKind::PercolationCluster => "percolation-cluster",
            BaseKind::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "z-segment" => BaseKind::ZSegment,
            "z2-box" => BaseKind::Z2Box,
            "gasket" => BaseKind::Gasket,
            "percolation-cluster" => BaseKind::PercolationCluster,
            "custom" => BaseKind::Custom,
            _ => return None,
        })
    }
}

/// Deterministic base graphs. Percolation clusters are built from a sample,
/// see [`crate::percolation::PercolationSample::cluster_graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaseSpec {
    /// `{-n, ..., n} ⊂ ℤ`
    ZSegment { n: u64 },
    /// `{-n, ..., n}² ⊂ ℤ²`
    Z2Box { n: u64 },
    /// Level-`level` pre-fractal gasket, origin at corner 0.
    Gasket { level: u32 },
}

#[derive(Debug, Clone)]
enum Repr {
    Segment { n: i64 },
    Box { n: i64 },
    Explicit { csr: Csr, coords: Option<Vec<[i64; 2]>>, boundary: Vec<bool> },
}

/// Connected finite base graph.
///
/// Segments and boxes are stored implicitly (ids are computed from
/// coordinates), so very large windows onto ℤ and ℤ² cost no memory.
#[derive(Debug, Clone)]
pub struct BaseGraph {
    kind: BaseKind,
    repr: Repr,
    origin: usize,
}

impl BaseGraph {
    pub fn build(spec: BaseSpec) -> Result<Self> {
        match spec {
            BaseSpec::ZSegment { n } => {
                if n == 0 {
                    return Err(Error::BadParameter("z-segment needs n >= 1".into()));
                }
                let n = n as i64;
                Ok(BaseGraph { kind: BaseKind::ZSegment, repr: Repr::Segment { n }, origin: n as usize })
            }
            BaseSpec::Z2Box { n } => {
                if n == 0 {
                    return Err(Error::BadParameter("z2-box needs n >= 1".into()));
                }
                let n = n as i64;
                let w = 2 * n + 1;
                if w.checked_mul(w).is_none() {
                    return Err(Error::TooLarge(format!("z2-box of half-width {n}")));
                }
                let origin = (n * w + n) as usize;
                Ok(BaseGraph { kind: BaseKind::Z2Box, repr: Repr::Box { n }, origin })
            }
            BaseSpec::Gasket { level } => {
                if level > 14 {
                    return Err(Error::TooLarge(format!("gasket level {level}")));
                }
                let (coords, edges) = gasket::build(level);
                let corners = gasket::corners(&coords, level);
                let csr = Csr::from_edges(coords.len(), &edges)?;
                // The one-sided infinite gasket continues past corners 1 and 2.
                let mut boundary = vec![false; coords.len()];
                boundary[corners[1]] = true;
                boundary[corners[2]] = true;
                Ok(BaseGraph {
                    kind: BaseKind::Gasket,
                    repr: Repr::Explicit { csr, coords: Some(coords), boundary },
                    origin: corners[0],
                })
            }
        }
    }

    /// Wraps an explicit adjacency. Fails unless the graph is connected.
    pub fn from_parts(
        kind: BaseKind,
        csr: Csr,
        coords: Option<Vec<[i64; 2]>>,
        origin: usize,
        boundary: Vec<bool>,
    ) -> Result<Self> {
        let n = csr.vertex_count();
        if n == 0 {
            return Err(Error::EmptyBase);
        }
        if origin >= n {
            return Err(Error::InvalidGraph(format!("origin {origin} outside 0..{n}")));
        }
        if coords.as_ref().is_some_and(|c| c.len() != n) || boundary.len() != n {
            return Err(Error::InvalidGraph("per-vertex metadata has the wrong length".into()));
        }
        if !is_connected(&csr) {
            return Err(Error::Disconnected);
        }
        Ok(BaseGraph { kind, repr: Repr::Explicit { csr, coords, boundary }, origin })
    }

    /// Custom connected graph from an edge list, without coordinates.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let csr = Csr::from_edges(n, edges)?;
        Self::from_parts(BaseKind::Custom, csr, None, 0, vec![false; n])
    }

    pub fn kind(&self) -> BaseKind {
        self.kind
    }

    /// Default origin: coordinate 0 for lattices, corner 0 for gaskets, the
    /// vertex at `(0, 0)` for percolation clusters.
    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn has_coords(&self) -> bool {
        match &self.repr {
            Repr::Segment { .. } | Repr::Box { .. } => true,
            Repr::Explicit { coords, .. } => coords.is_some(),
        }
    }

    pub fn coords(&self, v: usize) -> Option<[i64; 2]> {
        match &self.repr {
            Repr::Segment { n } => Some([v as i64 - n, 0]),
            Repr::Box { n } => {
                let w = (2 * n + 1) as usize;
                Some([(v / w) as i64 - n, (v % w) as i64 - n])
            }
            Repr::Explicit { coords, .. } => coords.as_ref().map(|c| c[v]),
        }
    }

    /// Vertex with the given coordinates, if present.
    pub fn vertex_at(&self, p: [i64; 2]) -> Option<usize> {
        match &self.repr {
            Repr::Segment { n } => (p[1] == 0 && p[0].abs() <= *n).then(|| (p[0] + n) as usize),
            Repr::Box { n } => (p[0].abs() <= *n && p[1].abs() <= *n)
                .then(|| ((p[0] + n) * (2 * n + 1) + p[1] + n) as usize),
            Repr::Explicit { coords, .. } => coords.as_ref()?.iter().position(|&c| c == p),
        }
    }

    /// Graph distance between two vertices when it has a closed form.
    pub fn lattice_distance(&self, u: usize, v: usize) -> Option<u64> {
        match &self.repr {
            Repr::Segment { .. } | Repr::Box { .. } => {
                let (a, b) = (self.coords(u)?, self.coords(v)?);
                Some((a[0] - b[0]).unsigned_abs() + (a[1] - b[1]).unsigned_abs())
            }
            Repr::Explicit { .. } => None,
        }
    }

    /// Graph distance from `v` to the nearest truncation-boundary vertex,
    /// in closed form for lattices.
    pub fn lattice_distance_to_boundary(&self, v: usize) -> Option<u64> {
        let p = self.coords(v)?;
        match &self.repr {
            Repr::Segment { n } => Some((n - p[0].abs()) as u64),
            Repr::Box { n } => Some((n - p[0].abs().max(p[1].abs())) as u64),
            Repr::Explicit { .. } => None,
        }
    }

    /// Half-width of a segment or box window.
    pub fn half_width(&self) -> Option<u64> {
        match &self.repr {
            Repr::Segment { n } | Repr::Box { n } => Some(*n as u64),
            Repr::Explicit { .. } => None,
        }
    }

    #[inline]
    pub fn nth_neighbor(&self, v: usize, i: usize) -> usize {
        match &self.repr {
            Repr::Explicit { csr, .. } => csr.row(v)[i],
            _ => self.neighbors(v).nth(i).expect("neighbour index in range"),
        }
    }

    /// Explicit adjacency of this graph (materializes lattices).
    pub fn to_csr(&self) -> Csr {
        match &self.repr {
            Repr::Explicit { csr, .. } => csr.clone(),
            _ => Csr::from_graph(self),
        }
    }
}

impl Graph for BaseGraph {
    fn vertex_count(&self) -> usize {
        match &self.repr {
            Repr::Segment { n } => (2 * n + 1) as usize,
            Repr::Box { n } => ((2 * n + 1) * (2 * n + 1)) as usize,
            Repr::Explicit { csr, .. } => csr.vertex_count(),
        }
    }

    #[inline]
    fn degree(&self, v: usize) -> usize {
        match &self.repr {
            Repr::Segment { n } => {
                let x = v as i64 - n;
                (x > -n) as usize + (x < *n) as usize
            }
            Repr::Box { n } => {
                let w = (2 * n + 1) as usize;
                let (x, y) = ((v / w) as i64 - n, (v % w) as i64 - n);
                (x > -n) as usize + (x < *n) as usize + (y > -n) as usize + (y < *n) as usize
            }
            Repr::Explicit { csr, .. } => csr.degree(v),
        }
    }

    #[inline]
    fn neighbors(&self, v: usize) -> Neighbors<'_> {
        match &self.repr {
            Repr::Segment { n } => {
                let x = v as i64 - n;
                let mut buf = [0usize; 2];
                let mut len = 0;
                if x > -n {
                    buf[len] = v - 1;
                    len += 1;
                }
                if x < *n {
                    buf[len] = v + 1;
                    len += 1;
                }
                Neighbors::inline(&buf[..len])
            }
            Repr::Box { n } => {
                let w = (2 * n + 1) as usize;
                let (x, y) = ((v / w) as i64 - n, (v % w) as i64 - n);
                let mut buf = [0usize; 4];
                let mut len = 0;
                if x > -n {
                    buf[len] = v - w;
                    len += 1;
                }
                if x < *n {
                    buf[len] = v + w;
                    len += 1;
                }
                if y > -n {
                    buf[len] = v - 1;
                    len += 1;
                }
                if y < *n {
                    buf[len] = v + 1;
                    len += 1;
                }
                Neighbors::inline(&buf[..len])
            }
            Repr::Explicit { csr, .. } => csr.neighbors(v),
        }
    }

    fn is_truncated(&self, v: usize) -> bool {
        match &self.repr {
            Repr::Explicit { boundary, .. } => boundary[v],
            _ => self.lattice_distance_to_boundary(v) == Some(0),
        }
    }

    fn edge_count(&self) -> usize {
        match &self.repr {
            Repr::Segment { n } => (2 * n) as usize,
            Repr::Box { n } => (2 * (2 * n) * (2 * n + 1)) as usize,
            Repr::Explicit { csr, .. } => csr.edge_count(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ball;

    #[test]
    fn z_segment() {
        let g = BaseGraph::build(BaseSpec::ZSegment { n: 2 }).unwrap();
        assert_eq!(g.vertex_count(), 5);
        assert_eq!(g.edge_count(), 4);
        assert_eq!(g.coords(g.origin()), Some([0, 0]));
        let b: Vec<i64> = ball(&g, g.origin(), 2).iter().map(|&v| g.coords(v).unwrap()[0]).collect();
        assert_eq!(b, vec![-2, -1, 0, 1, 2]);
        assert!(g.is_truncated(0) && g.is_truncated(4) && !g.is_truncated(2));
    }

    #[test]
    fn z2_box_counts_and_degree_sum() {
        let g = BaseGraph::build(BaseSpec::Z2Box { n: 3 }).unwrap();
        assert_eq!(g.vertex_count(), 49);
        let degsum: usize = (0..49).map(|v| g.degree(v)).sum();
        assert_eq!(degsum, 2 * g.edge_count());
        assert_eq!(Csr::from_graph(&g).edge_count(), g.edge_count());
        for v in 0..49 {
            for w in g.neighbors(v) {
                assert!(g.neighbors(w).any(|u| u == v));
                assert_eq!(g.lattice_distance(v, w), Some(1));
            }
            assert_eq!(g.vertex_at(g.coords(v).unwrap()), Some(v));
        }
    }

    #[test]
    fn z2_ball_sizes_are_l1_balls() {
        let g = BaseGraph::build(BaseSpec::Z2Box { n: 10 }).unwrap();
        for r in 0..=10u32 {
            let r64 = r as usize;
            assert_eq!(ball(&g, g.origin(), r).len(), 2 * r64 * r64 + 2 * r64 + 1);
        }
    }

    #[test]
    fn gasket_metadata() {
        let g = BaseGraph::build(BaseSpec::Gasket { level: 3 }).unwrap();
        assert_eq!(g.vertex_count(), 42);
        assert_eq!(g.kind(), BaseKind::Gasket);
        assert_eq!(g.coords(g.origin()), Some([0, 0]));
        assert_eq!(g.degree(g.origin()), 2);
        let truncated: Vec<_> = (0..42).filter(|&v| g.is_truncated(v)).collect();
        assert_eq!(truncated.len(), 2);
        assert!((0..42).all(|v| g.degree(v) <= 4));
        let tri = BaseGraph::build(BaseSpec::Gasket { level: 0 }).unwrap();
        assert_eq!((tri.vertex_count(), tri.edge_count()), (3, 3));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(BaseGraph::build(BaseSpec::ZSegment { n: 0 }).is_err());
        assert_eq!(BaseGraph::from_edges(4, &[(0, 1), (2, 3)]).unwrap_err(), Error::Disconnected);
    }
}
