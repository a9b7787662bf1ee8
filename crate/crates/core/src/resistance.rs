//! Unit-conductance electrical networks: harmonic potentials, Dirichlet
//! energy, effective resistance and Thompson flow bounds.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::graph::{is_connected, Graph};
use crate::linalg::{DirichletSystem, Solver, SolverKind};
use crate::{Error, Result};

/// Tolerance for flow balance checks.
pub const FLOW_TOLERANCE: f64 = 1e-9;

/// Solution of the Dirichlet problem `f = 1` on `a`, `f = 0` on `b`, harmonic
/// elsewhere.
#[derive(Debug, Clone, Serialize)]
pub struct Potential {
    pub values: Vec<f64>,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub solver: SolverKind,
}

impl Potential {
    /// Largest `|f(x) - mean of f over neighbours|` off `a ∪ b`.
    pub fn harmonic_residual<G: Graph + ?Sized>(&self, g: &G) -> f64 {
        let fixed = boundary_mask(g.vertex_count(), &self.a, &self.b);
        (0..g.vertex_count())
            .filter(|&v| !fixed[v])
            .map(|v| {
                let avg = g.neighbors(v).map(|w| self.values[w]).sum::<f64>() / g.degree(v) as f64;
                (self.values[v] - avg).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn boundary_mask(n: usize, a: &[usize], b: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in a.iter().chain(b) {
        m[v] = true;
    }
    m
}

fn check_sets(n: usize, a: &[usize], b: &[usize]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::BadParameter("boundary sets must be nonempty".into()));
    }
    if let Some(&v) = a.iter().chain(b).find(|&&v| v >= n) {
        return Err(Error::BadParameter(format!("vertex {v} out of range")));
    }
    let mut in_a = vec![false; n];
    for &v in a {
        in_a[v] = true;
    }
    match b.iter().find(|&&v| in_a[v]) {
        Some(&vertex) => Err(Error::OverlappingBoundary { vertex }),
        None => Ok(()),
    }
}

pub fn harmonic_potential<G: Graph + ?Sized>(g: &G, a: &[usize], b: &[usize]) -> Result<Potential> {
    let n = g.vertex_count();
    check_sets(n, a, b)?;
    if !is_connected(g) {
        return Err(Error::Disconnected);
    }
    let mut values = vec![0.0; n];
    for &v in a {
        values[v] = 1.0;
    }
    let fixed = boundary_mask(n, a, b);
    let free: Vec<bool> = fixed.iter().map(|&f| !f).collect();
    let mut solver = SolverKind::None;
    if free.iter().any(|&f| f) {
        let sys = DirichletSystem::new(g, &free)?;
        let rhs: Vec<f64> =
            sys.vertices.iter().map(|&v| g.neighbors(v).map(|w| values[w]).sum::<f64>()).collect();
        let s = Solver::new(&sys.matrix)?;
        solver = s.kind();
        for (x, &v) in s.solve(&rhs)?.into_iter().zip(&sys.vertices) {
            values[v] = x;
        }
    }
    Ok(Potential { values, a: a.to_vec(), b: b.to_vec(), solver })
}

/// `½ Σ_x Σ_{y ~ x} (f(x) - f(y))²`
pub fn dirichlet_energy<G: Graph + ?Sized>(g: &G, f: &[f64]) -> f64 {
    (0..g.vertex_count())
        .flat_map(|u| g.neighbors(u).filter(move |&v| u < v).map(move |v| (u, v)))
        .map(|(u, v)| (f[u] - f[v]).powi(2))
        .sum()
}

pub fn effective_resistance<G: Graph + ?Sized>(g: &G, a: &[usize], b: &[usize]) -> Result<f64> {
    let p = harmonic_potential(g, a, b)?;
    Ok(1.0 / dirichlet_energy(g, &p.values))
}

/// `R_eff(x, V \ inside)`
pub fn resistance_to_complement<G: Graph + ?Sized>(g: &G, x: usize, inside: &[bool]) -> Result<f64> {
    let outside: Vec<usize> = (0..g.vertex_count()).filter(|&v| !inside[v]).collect();
    effective_resistance(g, &[x], &outside)
}

/// Antisymmetric edge function from `source` to `sink`. Only one orientation
/// of each edge is stored.
#[derive(Debug, Clone, Default)]
pub struct Flow {
    entries: BTreeMap<(usize, usize), f64>,
    pub source: Vec<usize>,
    pub sink: Vec<usize>,
}

impl Flow {
    pub fn new(source: Vec<usize>, sink: Vec<usize>) -> Self {
        Flow { entries: BTreeMap::new(), source, sink }
    }

    /// Sets `I(x, y) = value` and therefore `I(y, x) = -value`.
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        if x < y {
            self.entries.insert((x, y), value);
        } else {
            self.entries.insert((y, x), -value);
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        if x < y {
            self.entries.get(&(x, y)).copied().unwrap_or(0.0)
        } else {
            -self.entries.get(&(y, x)).copied().unwrap_or(0.0)
        }
    }

    /// Net flow out of `x`.
    pub fn divergence<G: Graph + ?Sized>(&self, g: &G, x: usize) -> f64 {
        g.neighbors(x).map(|y| self.get(x, y)).sum()
    }

    /// Unit flow `I(x, y) = (f(x) - f(y)) / E(f)` induced by a potential.
    pub fn from_potential<G: Graph + ?Sized>(g: &G, p: &Potential) -> Self {
        let energy = dirichlet_energy(g, &p.values);
        let mut flow = Flow::new(p.a.clone(), p.b.clone());
        for u in 0..g.vertex_count() {
            for v in g.neighbors(u).filter(|&v| u < v) {
                flow.set(u, v, (p.values[u] - p.values[v]) / energy);
            }
        }
        flow
    }

    /// Checks support on edges, balance off `source ∪ sink` and unit strength.
    pub fn validate<G: Graph + ?Sized>(&self, g: &G) -> Result<()> {
        let n = g.vertex_count();
        check_sets(n, &self.source, &self.sink)?;
        for (&(x, y), &v) in &self.entries {
            if v != 0.0 && (y >= n || !g.neighbors(x).any(|w| w == y)) {
                return Err(Error::InvalidFlow { vertex: x, reason: format!("nonzero value on non-edge ({x}, {y})") });
            }
        }
        let fixed = boundary_mask(n, &self.source, &self.sink);
        for x in (0..n).filter(|&x| !fixed[x]) {
            let d = self.divergence(g, x);
            if d.abs() > FLOW_TOLERANCE {
                return Err(Error::InvalidFlow { vertex: x, reason: format!("unbalanced by {d:e}") });
            }
        }
        let out: f64 = self.source.iter().map(|&x| self.divergence(g, x)).sum();
        if (out - 1.0).abs() > FLOW_TOLERANCE {
            return Err(Error::InvalidFlow { vertex: self.source[0], reason: format!("total strength {out}, not 1") });
        }
        Ok(())
    }
}

/// Energy `½ Σ_x Σ_{y ~ x} I(x, y)²` of a validated unit flow; an upper
/// bound for the effective resistance between its endpoints.
pub fn thompson_bound<G: Graph + ?Sized>(g: &G, flow: &Flow) -> Result<f64> {
    flow.validate(g)?;
    Ok(flow.entries.values().map(|v| v * v).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Csr;
    use approx::assert_abs_diff_eq;

    fn path3() -> Csr {
        Csr::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    fn k3() -> Csr {
        Csr::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn path_potential_and_resistance() {
        let g = path3();
        let p = harmonic_potential(&g, &[0], &[2]).unwrap();
        assert_eq!(p.values, vec![1.0, 0.5, 0.0]);
        assert_eq!(dirichlet_energy(&g, &p.values), 0.5);
        assert_eq!(effective_resistance(&g, &[0], &[2]).unwrap(), 2.0);
        assert!(p.harmonic_residual(&g) < 1e-12);
    }

    #[test]
    fn no_free_vertices() {
        let g = k3();
        let p = harmonic_potential(&g, &[0], &[1, 2]).unwrap();
        assert_eq!(p.values, vec![1.0, 0.0, 0.0]);
        assert_eq!(p.solver, SolverKind::None);
        // Two unit edges, each counted once per orientation and halved.
        assert_eq!(dirichlet_energy(&g, &p.values), 2.0);
    }

    #[test]
    fn triangle() {
        let g = k3();
        let p = harmonic_potential(&g, &[0], &[1]).unwrap();
        assert_abs_diff_eq!(p.values[2], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(effective_resistance(&g, &[0], &[1]).unwrap(), 2.0 / 3.0, epsilon = 1e-14);
        assert_eq!(dirichlet_energy(&g, &[0.3; 3]), 0.0);
    }

    #[test]
    fn errors() {
        let g = k3();
        assert_eq!(harmonic_potential(&g, &[0, 1], &[1]).unwrap_err(), Error::OverlappingBoundary { vertex: 1 });
        let split = Csr::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(harmonic_potential(&split, &[0], &[1]).unwrap_err(), Error::Disconnected);
    }

    #[test]
    fn thompson_examples() {
        let g = path3();
        let mut f = Flow::new(vec![0], vec![2]);
        f.set(0, 1, 1.0);
        f.set(1, 2, 1.0);
        assert_abs_diff_eq!(thompson_bound(&g, &f).unwrap(), 2.0);

        let g = k3();
        let mut best = Flow::new(vec![0], vec![1]);
        best.set(0, 1, 2.0 / 3.0);
        best.set(0, 2, 1.0 / 3.0);
        best.set(2, 1, 1.0 / 3.0);
        assert_abs_diff_eq!(thompson_bound(&g, &best).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        let p = harmonic_potential(&g, &[0], &[1]).unwrap();
        let induced = Flow::from_potential(&g, &p);
        for (x, y) in [(0, 1), (0, 2), (2, 1)] {
            assert_abs_diff_eq!(induced.get(x, y), best.get(x, y), epsilon = 1e-14);
        }

        let mut direct = Flow::new(vec![0], vec![1]);
        direct.set(1, 0, -1.0);
        assert_eq!(direct.get(0, 1), 1.0);
        assert_abs_diff_eq!(thompson_bound(&g, &direct).unwrap(), 1.0);
    }

    #[test]
    fn invalid_flows_name_the_vertex() {
        let g = path3();
        let mut f = Flow::new(vec![0], vec![2]);
        f.set(0, 1, 1.0);
        f.set(1, 2, 0.5);
        assert!(matches!(thompson_bound(&g, &f), Err(Error::InvalidFlow { vertex: 1, .. })));
        let mut weak = Flow::new(vec![0], vec![2]);
        weak.set(0, 1, 0.5);
        weak.set(1, 2, 0.5);
        assert!(matches!(thompson_bound(&g, &weak), Err(Error::InvalidFlow { vertex: 0, .. })));
        let mut off = Flow::new(vec![0], vec![2]);
        off.set(0, 2, 1.0);
        assert!(matches!(thompson_bound(&g, &off), Err(Error::InvalidFlow { .. })));
    }
}
