//! Exact laws of the simple random walk on finite windows: heat kernels,
//! killed and truncated Green kernels, occupation moments, one-dimensional
//! hitting and exit laws, and expected collision counts.
//!
//! Two normalizations coexist and every function says which one it returns:
//! the transition probability `P_x(X_t = y)` and the heat kernel
//! `p_t(x, y) = P_x(X_t = y) / deg(y)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{truncation_radius, CombGraph, Graph};
use crate::linalg::{DirichletSystem, Solver};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `P_x(X_t = y)`
    Probability,
    /// `P_x(X_t = y) / deg(y)`
    DegreeNormalized,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::Probability => "probability",
            Normalization::DegreeNormalized => "degree-normalized",
        }
    }
}

const OUTSIDE: u32 = u32::MAX;

/// The part of a graph a walk from `source` can reach within `limit` steps
/// without leaving `domain`, in breadth-first order.
struct LocalChain {
    vertices: Vec<usize>,
    /// `level_end[d]`: number of local vertices at distance `<= d`.
    level_end: Vec<usize>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    inv_deg: Vec<f64>,
    local: Vec<u32>,
}

impl LocalChain {
    fn new<G: Graph + ?Sized>(g: &G, source: usize, limit: u64, domain: Option<&[bool]>) -> Result<Self> {
        let inside = |v: usize| domain.is_none_or(|d| d[v]);
        let mut local = vec![OUTSIDE; g.vertex_count()];
        let mut vertices = Vec::new();
        let mut level_end = Vec::new();
        if inside(source) {
            local[source] = 0;
            vertices.push(source);
            let mut head = 0;
            let mut depth = 0u64;
            loop {
                let end = vertices.len();
                level_end.push(end);
                if depth == limit || head == end {
                    break;
                }
                for i in head..end {
                    let u = vertices[i];
                    if g.is_truncated(u) {
                        return Err(match domain {
                            None => Error::HorizonExceedsTruncation { horizon: limit, radius: depth },
                            Some(_) => Error::BallExceedsTruncation { radius: depth },
                        });
                    }
                    for w in g.neighbors(u) {
                        if local[w] == OUTSIDE && inside(w) {
                            local[w] = vertices.len() as u32;
                            vertices.push(w);
                        }
                    }
                }
                head = end;
                depth += 1;
            }
        }
        let mut offsets = Vec::with_capacity(vertices.len() + 1);
        let mut targets = Vec::new();
        let mut inv_deg = Vec::with_capacity(vertices.len());
        offsets.push(0);
        for &u in &vertices {
            targets.extend(g.neighbors(u).map(|w| local[w]));
            offsets.push(targets.len());
            inv_deg.push(1.0 / g.degree(u) as f64);
        }
        Ok(LocalChain { vertices, level_end, offsets, targets, inv_deg, local })
    }
}

/// Step-by-step evolution of the law of `X_t`, optionally killed on leaving
/// a domain. Mass that leaves the domain is accumulated as escaped mass.
pub struct Evolution {
    chain: LocalChain,
    cur: Vec<f64>,
    next: Vec<f64>,
    time: u64,
    horizon: u64,
    escaped: f64,
}

impl Evolution {
    /// Exact for `t <= horizon`. Without a domain, fails unless the
    /// truncation boundary is at least `horizon` steps away; with a domain,
    /// fails if the domain reaches the truncation boundary within `horizon`
    /// steps.
    pub fn new<G: Graph + ?Sized>(g: &G, source: usize, horizon: u64, domain: Option<&[bool]>) -> Result<Self> {
        let chain = LocalChain::new(g, source, horizon, domain)?;
        let n = chain.vertices.len();
        let mut cur = vec![0.0; n];
        let mut escaped = 0.0;
        if n > 0 {
            cur[0] = 1.0;
        } else {
            escaped = 1.0;
        }
        Ok(Evolution { chain, cur, next: vec![0.0; n], time: 0, horizon, escaped })
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// Total mass that has left the domain so far.
    pub fn escaped(&self) -> f64 {
        self.escaped
    }

    /// Mass still inside the domain.
    pub fn survival(&self) -> f64 {
        self.active_range().map(|i| self.cur[i]).sum()
    }

    fn active_range(&self) -> std::ops::Range<usize> {
        let levels = &self.chain.level_end;
        if levels.is_empty() {
            return 0..0;
        }
        0..levels[(self.time as usize).min(levels.len() - 1)]
    }

    /// Advances one step and returns the mass that escaped during it.
    pub fn step(&mut self) -> f64 {
        assert!(self.time < self.horizon, "evolution is exact only up to its horizon");
        let mut esc = 0.0;
        let c = &self.chain;
        for u in self.active_range() {
            let m = self.cur[u];
            if m == 0.0 {
                continue;
            }
            self.cur[u] = 0.0;
            let share = m * c.inv_deg[u];
            for &w in &c.targets[c.offsets[u]..c.offsets[u + 1]] {
                if w == OUTSIDE {
                    esc += share;
                } else {
                    self.next[w as usize] += share;
                }
            }
        }
        std::mem::swap(&mut self.cur, &mut self.next);
        self.time += 1;
        self.escaped += esc;
        esc
    }

    /// `P(X_t = v, t < T_domain)`
    pub fn prob(&self, v: usize) -> f64 {
        match self.chain.local.get(v) {
            Some(&i) if i != OUTSIDE => self.cur[i as usize],
            _ => 0.0,
        }
    }

    /// Nonzero-support candidates `(vertex, P(X_t = vertex))` in breadth-first order.
    pub fn row(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.active_range().map(move |i| (self.chain.vertices[i], self.cur[i]))
    }

    /// Vertices this evolution can ever charge, in breadth-first order.
    pub fn support(&self) -> &[usize] {
        &self.chain.vertices
    }
}

/// Exact rows `t = 0..=horizon` of the walk law from one source.
#[derive(Debug, Clone, Serialize)]
pub struct KernelTable {
    pub source: usize,
    pub horizon: u64,
    /// Distance from the source to the truncation boundary; `None` when the
    /// graph has none.
    pub truncation_radius: Option<u64>,
    pub normalization: Normalization,
    /// Column vertex ids (every vertex within `horizon` steps), sorted.
    pub vertices: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl KernelTable {
    pub fn value(&self, t: u64, v: usize) -> f64 {
        match self.vertices.binary_search(&v) {
            Ok(i) => self.rows[t as usize][i],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, t: u64) -> f64 {
        self.rows[t as usize].iter().sum()
    }
}

pub fn kernel_table<G: Graph + ?Sized>(g: &G, x: usize, horizon: u64, normalization: Normalization) -> Result<KernelTable> {
    let mut evo = Evolution::new(g, x, horizon, None)?;
    let mut vertices = evo.support().to_vec();
    vertices.sort_unstable();
    let snapshot = |evo: &Evolution| -> Vec<f64> {
        vertices
            .iter()
            .map(|&v| match normalization {
                Normalization::Probability => evo.prob(v),
                Normalization::DegreeNormalized => evo.prob(v) / g.degree(v) as f64,
            })
            .collect()
    };
    let mut rows = vec![snapshot(&evo)];
    for _ in 0..horizon {
        evo.step();
        rows.push(snapshot(&evo));
    }
    Ok(KernelTable { source: x, horizon, truncation_radius: truncation_radius(g, x), normalization, vertices, rows })
}

/// `p_t(x, ·)` in the degree-normalized form, as `(vertex, value)` pairs
/// sorted by vertex; vertices not listed have value 0.
pub fn heat_kernel_row<G: Graph + ?Sized>(g: &G, x: usize, t: u64) -> Result<Vec<(usize, f64)>> {
    let mut evo = Evolution::new(g, x, t, None)?;
    for _ in 0..t {
        evo.step();
    }
    let mut row: Vec<(usize, f64)> = evo.row().map(|(v, p)| (v, p / g.degree(v) as f64)).collect();
    row.sort_unstable_by_key(|e| e.0);
    Ok(row)
}

/// [`heat_kernel_row`] for several sources in parallel.
pub fn heat_kernel_rows<G: Graph + Sync + ?Sized>(g: &G, sources: &[usize], t: u64) -> Result<Vec<Vec<(usize, f64)>>> {
    sources.par_iter().map(|&x| heat_kernel_row(g, x, t)).collect()
}

/// Return probabilities `P_x(X_s = x)` for `s = 0..=t`.
pub fn return_probabilities<G: Graph + ?Sized>(g: &G, x: usize, t: u64) -> Result<Vec<f64>> {
    let mut evo = Evolution::new(g, x, t, None)?;
    let mut out = vec![1.0];
    for _ in 0..t {
        evo.step();
        out.push(evo.prob(x));
    }
    Ok(out)
}

/// `g_A(x, y) = (1/deg y) Σ_n P_x(X_n = y, n < T_A)`, by a linear solve.
/// Zero when `x` or `y` is outside `A`.
pub fn killed_green<G: Graph + ?Sized>(g: &G, domain: &[bool], x: usize, y: usize) -> Result<f64> {
    if !domain[x] || !domain[y] {
        return Ok(0.0);
    }
    let sys = DirichletSystem::new(g, domain)?;
    let mut rhs = vec![0.0; sys.vertices.len()];
    rhs[sys.local[y]] = 1.0;
    let sol = Solver::new(&sys.matrix)?.solve(&rhs)?;
    Ok(sol[sys.local[x]])
}

/// `g_A(x, x)` for every `x` (zero outside `A`).
pub fn killed_green_diagonal<G: Graph + ?Sized>(g: &G, domain: &[bool]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; g.vertex_count()];
    if !domain.iter().any(|&d| d) {
        return Ok(out);
    }
    let sys = DirichletSystem::new(g, domain)?;
    let diag = Solver::new(&sys.matrix)?.inverse_diagonal()?;
    for (v, d) in sys.vertices.iter().zip(diag) {
        out[*v] = d;
    }
    Ok(out)
}

/// Series form of [`killed_green`] summed up to `horizon` steps.
pub fn killed_green_series<G: Graph + ?Sized>(g: &G, domain: &[bool], x: usize, y: usize, horizon: u64) -> Result<f64> {
    let mut evo = Evolution::new(g, x, horizon, Some(domain))?;
    let mut sum = evo.prob(y);
    for _ in 0..horizon {
        evo.step();
        sum += evo.prob(y);
    }
    Ok(sum / g.degree(y) as f64)
}

/// `P_x(T_A >= n)`: mass still inside `A` after `n - 1` steps.
pub fn survival_probability<G: Graph + ?Sized>(g: &G, domain: &[bool], x: usize, n: u64) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    let mut evo = Evolution::new(g, x, n - 1, Some(domain))?;
    for _ in 0..n - 1 {
        evo.step();
    }
    Ok(evo.survival())
}

/// Law of the exit time `T_A` from `x`: `pmf[n] = P_x(T_A = n)` for
/// `n <= horizon`, and the tail `P_x(T_A > horizon)`.
pub fn exit_time_law<G: Graph + ?Sized>(g: &G, domain: &[bool], x: usize, horizon: u64) -> Result<TimeLaw> {
    let mut evo = Evolution::new(g, x, horizon, Some(domain))?;
    let mut pmf = vec![evo.escaped()];
    for _ in 0..horizon {
        pmf.push(evo.step());
    }
    Ok(TimeLaw { tail: evo.survival(), pmf })
}

/// Horizon-limited law of a stopping time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeLaw {
    /// `pmf[n] = P(T = n)`
    pub pmf: Vec<f64>,
    /// `P(T > horizon)`
    pub tail: f64,
}

impl TimeLaw {
    pub fn cdf(&self, n: usize) -> f64 {
        self.pmf[..=n.min(self.pmf.len() - 1)].iter().sum()
    }
}

/// `g_{[a,b]}(x, y) = Σ_{n=a}^{b} p_n(x, y)` (degree-normalized).
pub fn truncated_green<G: Graph + ?Sized>(g: &G, x: usize, y: usize, a: u64, b: u64) -> Result<f64> {
    if a > b {
        return Err(Error::BadRange { a, b });
    }
    let mut evo = Evolution::new(g, x, b, None)?;
    let mut sum = if a == 0 { evo.prob(y) } else { 0.0 };
    for n in 1..=b {
        evo.step();
        if n >= a {
            sum += evo.prob(y);
        }
    }
    Ok(sum / g.degree(y) as f64)
}

/// `max_{x ∈ D_r} g_{D_r}(x, x) / g_{D_r}(o_V, o_V)`, where `D_r` is the
/// comb over the graph-distance ball of radius `r` around the origin.
///
/// Teeth are dangling paths, so `g_{D_r}((x₁, x₂), (x₁, x₂)) = x₂ +
/// R_eff(x₁, B^c)` with the resistance taken in the base; only the base ball
/// is solved.
pub fn green_criterion_ratio(comb: &CombGraph, r: u64) -> Result<f64> {
    let base = comb.base();
    let ball = comb.base_ball(comb.origin(), r);
    if (0..base.vertex_count()).any(|v| ball[v] && base.is_truncated(v)) {
        return Err(Error::BallExceedsTruncation { radius: r });
    }
    let diag = killed_green_diagonal(base, &ball)?;
    let top = (0..base.vertex_count())
        .filter(|&v| ball[v])
        .map(|v| comb.tooth(v) as f64 + diag[v])
        .fold(0.0, f64::max);
    Ok(top / diag[comb.origin()])
}

/// `E_z[U_t²]` for the occupation count `U_t = Σ_{s<=t} 1{X_s = z}`, from
/// `E[U²] = E[U] + 2 Σ_s p̂_s Σ_{r=1}^{t-s} p̂_r` with `p̂_s = P_z(X_s = z)`.
pub fn occupation_second_moment<G: Graph + ?Sized>(g: &G, z: usize, t: u64) -> Result<f64> {
    Ok(occupation_moments(&return_probabilities(g, z, t)?).1)
}

/// `(E[U_t], E[U_t²])` from return probabilities `p̂_0..=p̂_t`.
pub fn occupation_moments(ret: &[f64]) -> (f64, f64) {
    let t = ret.len() - 1;
    let mut prefix = vec![0.0; t + 1];
    for r in 1..=t {
        prefix[r] = prefix[r - 1] + ret[r];
    }
    let first: f64 = ret.iter().sum();
    let cross: f64 = (0..=t).map(|s| ret[s] * prefix[t - s]).sum();
    (first, first + 2.0 * cross)
}

/// Law of the hitting time of 0 for the walk on the tooth `{0, ..., m}`
/// started at height `h`, reflected at the tip `m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingLaw {
    pub law: TimeLaw,
    /// Exact `E_h[H_0]`.
    pub mean: f64,
}

pub fn segment_hitting_law(m: u64, h: u64, horizon: u64) -> Result<HittingLaw> {
    if h > m {
        return Err(Error::BadHeight { h, m });
    }
    let m = m as usize;
    let mut cur = vec![0.0; m + 1];
    let mut next = vec![0.0; m + 1];
    cur[h as usize] = 1.0;
    let mut pmf = vec![cur[0]];
    cur[0] = 0.0;
    for _ in 0..horizon {
        next.fill(0.0);
        for n in 1..=m {
            let p = cur[n];
            if p == 0.0 {
                continue;
            }
            if n == m {
                next[n - 1] += p;
            } else {
                next[n - 1] += 0.5 * p;
                next[n + 1] += 0.5 * p;
            }
        }
        pmf.push(next[0]);
        next[0] = 0.0;
        std::mem::swap(&mut cur, &mut next);
    }
    let tail = cur.iter().sum();
    Ok(HittingLaw { law: TimeLaw { pmf, tail }, mean: tooth_hitting_means(m)[h as usize] })
}

/// `E_n[H_0]` for every start `n` on the reflected tooth, by first-step
/// analysis: `e_0 = 0`, `e_n = 1 + (e_{n-1} + e_{n+1}) / 2`, `e_m = 1 + e_{m-1}`.
fn tooth_hitting_means(m: usize) -> Vec<f64> {
    // Increments d_n = e_n - e_{n-1} satisfy d_m = 1 and d_n = d_{n+1} + 2.
    let mut e = vec![0.0; m + 1];
    for n in 1..=m {
        e[n] = e[n - 1] + (2 * (m - n) + 1) as f64;
    }
    e
}

/// First exit of `[0, m]` by the simple walk on ℤ, at `-1` or `m + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitLaw {
    /// `bottom[s] = P(T = s, exit at -1)`
    pub bottom: Vec<f64>,
    /// `top[s] = P(T = s, exit at m + 1)`
    pub top: Vec<f64>,
    /// `P(T > horizon)`
    pub tail: f64,
    /// Exact `P(exit at m + 1) = (h + 1) / (m + 2)`.
    pub p_top: f64,
}

pub fn interval_exit_law(m: u64, h: i64, horizon: u64) -> Result<ExitLaw> {
    if h < 0 || h as u64 > m {
        return Err(Error::BadHeight { h: h.max(0) as u64, m });
    }
    let m = m as usize;
    let mut cur = vec![0.0; m + 1];
    let mut next = vec![0.0; m + 1];
    cur[h as usize] = 1.0;
    let mut bottom = vec![0.0];
    let mut top = vec![0.0];
    for _ in 0..horizon {
        next.fill(0.0);
        let (mut lo, mut hi) = (0.0, 0.0);
        for n in 0..=m {
            let p = 0.5 * cur[n];
            if n == 0 {
                lo += p;
            } else {
                next[n - 1] += p;
            }
            if n == m {
                hi += p;
            } else {
                next[n + 1] += p;
            }
        }
        bottom.push(lo);
        top.push(hi);
        std::mem::swap(&mut cur, &mut next);
    }
    // Harmonic in the interior with boundary values 0 at -1 and 1 at m + 1.
    let p_top = (h + 1) as f64 / (m + 2) as f64;
    Ok(ExitLaw { bottom, top, tail: cur.iter().sum(), p_top })
}

/// Bounds on `Σ_{t<=T} Σ_{x ∈ region} P_start(X_t = x)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollisionSum {
    pub lower: f64,
    pub upper: f64,
}

/// Expected number of collisions in `region` up to time `horizon` of two
/// independent walks from `start`, in probability form.
///
/// Without a domain the value is exact (`lower == upper`). With a domain the
/// walk is killed on leaving it; the killed sum is a lower bound and the
/// escaped mass `e_t` gives the upper bound `Σ_t (S_t + 2 e_t max_x P_t(x) + e_t²)`.
pub fn expected_collisions_region<G: Graph + ?Sized>(
    g: &G,
    region: &[bool],
    horizon: u64,
    start: usize,
    domain: Option<&[bool]>,
) -> Result<CollisionSum> {
    let mut evo = Evolution::new(g, start, horizon, domain)?;
    let mut lower = 0.0;
    let mut upper = 0.0;
    loop {
        let (mut s, mut peak) = (0.0, 0.0f64);
        for (v, p) in evo.row() {
            if region[v] {
                s += p * p;
                peak = peak.max(p);
            }
        }
        let e = evo.escaped();
        lower += s;
        upper += s + 2.0 * e * peak + e * e;
        if evo.time() == horizon {
            break;
        }
        evo.step();
    }
    if domain.is_none() {
        upper = lower;
    }
    Ok(CollisionSum { lower, upper })
}
