//! Sparse symmetric positive definite solves for Dirichlet problems on graphs.
//!
//! Systems up to [`DIRECT_LIMIT`] unknowns are factored with an envelope
//! (skyline) `LDLᵀ` after reverse Cuthill–McKee reordering; larger systems use
//! Jacobi-preconditioned conjugate gradients.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::{Error, Result};

/// Largest system solved by direct factorization.
pub const DIRECT_LIMIT: usize = 50_000;

/// Relative residual at which conjugate gradients stop.
pub const CG_TOLERANCE: f64 = 1e-10;

/// Envelope entries allowed before falling back to conjugate gradients.
const ENVELOPE_LIMIT: usize = 60_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// No unknowns: the answer is read off the boundary data.
    None,
    Direct,
    ConjugateGradient,
}

/// Symmetric sparse matrix: diagonal plus off-diagonal entries stored in both
/// triangles.
#[derive(Debug, Clone)]
pub struct SymSparse {
    diag: Vec<f64>,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymSparse {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.len() {
            let mut s = self.diag[i] * x[i];
            for (j, a) in self.row(i) {
                s += a * x[j];
            }
            y[i] = s;
        }
    }
}

/// Graph Laplacian `deg - adjacency` restricted to the `free` vertices, i.e.
/// the generator of the walk killed on leaving `free`, scaled by degree.
#[derive(Debug, Clone)]
pub struct DirichletSystem {
    pub matrix: SymSparse,
    /// Local index → graph vertex.
    pub vertices: Vec<usize>,
    /// Graph vertex → local index, `usize::MAX` off the free set.
    pub local: Vec<usize>,
}

impl DirichletSystem {
    /// Fails with [`Error::Divergent`] if some connected piece of `free` has
    /// no edge leaving it (the killed walk would never die there).
    pub fn new<G: Graph + ?Sized>(g: &G, free: &[bool]) -> Result<Self> {
        let n = g.vertex_count();
        let mut local = vec![usize::MAX; n];
        let mut vertices = Vec::new();
        for v in 0..n {
            if free[v] {
                local[v] = vertices.len();
                vertices.push(v);
            }
        }
        let m = vertices.len();
        let mut diag = Vec::with_capacity(m);
        let mut offsets = Vec::with_capacity(m + 1);
        let mut cols = Vec::new();
        offsets.push(0);
        let mut leaks = vec![false; m];
        for (i, &v) in vertices.iter().enumerate() {
            diag.push(g.degree(v) as f64);
            for w in g.neighbors(v) {
                if local[w] != usize::MAX {
                    cols.push(local[w]);
                } else {
                    leaks[i] = true;
                }
            }
            offsets.push(cols.len());
        }
        let vals = vec![-1.0; cols.len()];
        let matrix = SymSparse { diag, offsets, cols, vals };
        // Every free component must reach a leaking vertex.
        let mut reach = leaks.clone();
        let mut queue: VecDeque<usize> = (0..m).filter(|&i| leaks[i]).collect();
        while let Some(i) = queue.pop_front() {
            for (j, _) in matrix.row(i) {
                if !reach[j] {
                    reach[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if reach.iter().any(|&r| !r) {
            return Err(Error::Divergent);
        }
        Ok(DirichletSystem { matrix, vertices, local })
    }
}

/// A prepared solver for one matrix.
#[derive(Debug, Clone)]
pub enum Solver {
    Direct(SkylineLdl),
    ConjugateGradient(SymSparse),
}

impl Solver {
    /// Direct factorization up to [`DIRECT_LIMIT`] unknowns, CG beyond.
    pub fn new(matrix: &SymSparse) -> Result<Self> {
        if matrix.len() <= DIRECT_LIMIT {
            if let Some(f) = SkylineLdl::factor(matrix)? {
                return Ok(Solver::Direct(f));
            }
        }
        Ok(Solver::ConjugateGradient(matrix.clone()))
    }

    pub fn kind(&self) -> SolverKind {
        match self {
            Solver::Direct(_) => SolverKind::Direct,
            Solver::ConjugateGradient(_) => SolverKind::ConjugateGradient,
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            Solver::Direct(f) => Ok(f.solve(b)),
            Solver::ConjugateGradient(a) => conjugate_gradient(a, b, CG_TOLERANCE),
        }
    }

    /// Diagonal of the inverse matrix.
    pub fn inverse_diagonal(&self) -> Result<Vec<f64>> {
        match self {
            Solver::Direct(f) => Ok(f.inverse_diagonal()),
            Solver::ConjugateGradient(a) => {
                let n = a.len();
                let mut e = vec![0.0; n];
                let mut out = Vec::with_capacity(n);
                for i in 0..n {
                    e[i] = 1.0;
                    out.push(conjugate_gradient(a, &e, CG_TOLERANCE)?[i]);
                    e[i] = 0.0;
                }
                Ok(out)
            }
        }
    }
}

/// Reverse Cuthill–McKee ordering; returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SymSparse) -> Vec<usize> {
    let n = a.len();
    let degree = |i: usize| a.offsets[i + 1] - a.offsets[i];
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut level = vec![usize::MAX; n];
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree(i), i));
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        // Pseudo-peripheral start: hop to a far, low-degree vertex twice.
        let mut start = seed;
        for _ in 0..2 {
            let comp = bfs_levels(a, start, &visited, &mut level);
            let far = *comp
                .iter()
                .max_by_key(|&&i| (level[i], std::cmp::Reverse(degree(i)), std::cmp::Reverse(i)))
                .unwrap();
            for &i in &comp {
                level[i] = usize::MAX;
            }
            start = far;
        }
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        let mut nbrs = Vec::new();
        while let Some(i) = queue.pop_front() {
            order.push(i);
            nbrs.clear();
            nbrs.extend(a.row(i).map(|(j, _)| j).filter(|&j| !visited[j]));
            nbrs.sort_by_key(|&j| (degree(j), j));
            for &j in &nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(a: &SymSparse, start: usize, blocked: &[bool], level: &mut [usize]) -> Vec<usize> {
    let mut comp = vec![start];
    level[start] = 0;
    let mut head = 0;
    while head < comp.len() {
        let i = comp[head];
        head += 1;
        for (j, _) in a.row(i) {
            if !blocked[j] && level[j] == usize::MAX {
                level[j] = level[i] + 1;
                comp.push(j);
            }
        }
    }
    comp
}

/// Envelope `LDLᵀ` factorization in a bandwidth-reducing order.
#[derive(Debug, Clone)]
pub struct SkylineLdl {
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// First column of the envelope in each (permuted) row.
    first: Vec<usize>,
    /// Start of each row's strictly lower part in `lower`.
    start: Vec<usize>,
    lower: Vec<f64>,
    d: Vec<f64>,
}

impl SkylineLdl {
    /// `Ok(None)` when the envelope would be too large to store.
    pub fn factor(a: &SymSparse) -> Result<Option<Self>> {
        let n = a.len();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (j, _) in a.row(old) {
                first[new] = first[new].min(inv[j]);
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0usize);
        for i in 0..n {
            start.push(start[i] + (i - first[i]));
        }
        if start[n] > ENVELOPE_LIMIT {
            return Ok(None);
        }
        let mut lower = vec![0.0; start[n]];
        let mut d = vec![0.0; n];
        for (new, &old) in perm.iter().enumerate() {
            d[new] = a.diag[old];
            for (j, v) in a.row(old) {
                let jn = inv[j];
                if jn < new {
                    lower[start[new] + jn - first[new]] = v;
                }
            }
        }
        // Row-by-row Crout: l_ij = (a_ij - Σ_k l_ik d_k l_jk) / d_j.
        let mut scaled = Vec::new();
        for i in 0..n {
            let fi = first[i];
            scaled.clear();
            scaled.resize(i - fi, 0.0);
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let row_i = &scaled[lo - fi..j - fi];
                let row_j = &lower[start[j] + lo - fj..start[j] + j - fj];
                let dot: f64 = row_i.iter().zip(row_j).map(|(x, y)| x * y).sum();
                let a_ij = lower[start[i] + j - fi] - dot;
                scaled[j - fi] = a_ij;
                lower[start[i] + j - fi] = a_ij / d[j];
            }
            let mut di = d[i];
            for j in fi..i {
                di -= scaled[j - fi] * lower[start[i] + j - fi];
            }
            if !(di > 1e-13 * d[i].abs().max(1.0)) {
                return Err(Error::Solver(format!("matrix not positive definite (pivot {di:e})")));
            }
            d[i] = di;
        }
        Ok(Some(SkylineLdl { perm, first, start, lower, d }))
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    #[inline]
    fn l(&self, i: usize, j: usize) -> f64 {
        self.lower[self.start[i] + j - self.first[i]]
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            let dot: f64 = row.iter().zip(&y[fi..i]).map(|(l, y)| l * y).sum();
            y[i] -= dot;
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = y[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            for (k, l) in row.iter().enumerate() {
                y[fi + k] -= l * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// Diagonal of `A⁻¹` by selected inversion over the envelope:
    /// `Z_ij = δ_ij / d_j - Σ_{k > j} L_kj Z_ik` for `j` descending.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        let n = self.len();
        // Rows of each column below the diagonal, ascending.
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for j in self.first[i]..i {
                col_rows[j].push(i);
            }
        }
        let mut z = vec![0.0; self.lower.len()];
        let mut zdiag = vec![0.0; n];
        let zget = |z: &[f64], zdiag: &[f64], i: usize, k: usize| -> f64 {
            if i == k {
                zdiag[i]
            } else {
                let (r, c) = if i > k { (i, k) } else { (k, i) };
                z[self.start[r] + c - self.first[r]]
            }
        };
        for j in (0..n).rev() {
            let rows = &col_rows[j];
            let lcol: Vec<f64> = rows.iter().map(|&k| self.l(k, j)).collect();
            for &i in rows {
                let mut s = 0.0;
                for (&k, &lkj) in rows.iter().zip(&lcol) {
                    s += lkj * zget(&z, &zdiag, i, k);
                }
                z[self.start[i] + j - self.first[i]] = -s;
            }
            let mut s = 1.0 / self.d[j];
            for (&k, &lkj) in rows.iter().zip(&lcol) {
                s -= lkj * z[self.start[k] + j - self.first[k]];
            }
            zdiag[j] = s;
        }
        let mut out = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = zdiag[new];
        }
        out
    }
}

/// Jacobi-preconditioned conjugate gradients from a zero start.
pub fn conjugate_gradient(a: &SymSparse, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = a.len();
    let bnorm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&a.diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let max_iter = 20 * n + 100;
    for _ in 0..max_iter {
        a.mul(&p, &mut ap);
        let alpha = rz / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if rnorm <= tol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / a.diag[i];
        }
        let rz_next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver(format!("conjugate gradients did not reach {tol:e} in {max_iter} iterations")))
}
