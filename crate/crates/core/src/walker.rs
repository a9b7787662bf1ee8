//! Seeded Monte Carlo simulation of simple random walks.
//!
//! Trial `i` of a run with master seed `s` draws from the ChaCha8 stream
//! `(s, i)`, so results do not depend on how trials are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{bfs_distances, BaseGraph, CombGraph, CombVertex, Csr, DenseComb, Graph};
use crate::stats::{linear_fit, median, wilson95, Summary};
use crate::{Error, Result};

/// Default cap on open-ended walks.
pub const DEFAULT_CAP: u64 = 1_000_000_000;

/// Random stream of one trial.
pub fn trial_rng(master: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial);
    rng
}

/// Graphs a walker can move on.
pub trait WalkGraph {
    type Vertex: Copy + PartialEq + std::fmt::Debug;

    fn walk_degree(&self, v: Self::Vertex) -> usize;

    fn walk_neighbor(&self, v: Self::Vertex, i: usize) -> Self::Vertex;

    #[inline]
    fn step<R: Rng>(&self, v: Self::Vertex, rng: &mut R) -> Self::Vertex {
        let d = self.walk_degree(v);
        self.walk_neighbor(v, rng.random_range(0..d))
    }
}

impl WalkGraph for CombGraph {
    type Vertex = CombVertex;

    #[inline]
    fn walk_degree(&self, v: CombVertex) -> usize {
        self.degree(v)
    }

    #[inline]
    fn walk_neighbor(&self, v: CombVertex, i: usize) -> CombVertex {
        self.nth_neighbor(v, i)
    }
}

macro_rules! walk_graph_via_graph {
    ($($t:ty),*) => {$(
        impl WalkGraph for $t {
            type Vertex = usize;

            #[inline]
            fn walk_degree(&self, v: usize) -> usize {
                self.degree(v)
            }

            #[inline]
            fn walk_neighbor(&self, v: usize, i: usize) -> usize {
                self.neighbors(v).nth(i).expect("neighbour index in range")
            }
        }
    )*};
}

walk_graph_via_graph!(Csr, BaseGraph, DenseComb);

/// When a walk stops.
pub enum Stop<'a, V> {
    /// After exactly `n` steps.
    Horizon(u64),
    /// At `T_A = inf{n >= 0 : X_n ∉ A}`.
    ExitOf(&'a dyn Fn(V) -> bool),
    /// At `H_A = inf{n >= 0 : X_n ∈ A}`.
    Hit(&'a dyn Fn(V) -> bool),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkOutcome<V> {
    pub end: V,
    pub time: u64,
    /// Positions `X_0..=X_time` when recording was requested.
    pub path: Option<Vec<V>>,
    /// The safety cap was reached before the stop rule fired; `path` is the
    /// partial trace.
    pub capped: bool,
}

impl<V> WalkOutcome<V> {
    pub fn checked(self) -> Result<Self> {
        if self.capped {
            Err(Error::CapExceeded { steps: self.time })
        } else {
            Ok(self)
        }
    }
}

pub fn simulate_walk<G: WalkGraph, R: Rng>(
    g: &G,
    start: G::Vertex,
    stop: &Stop<'_, G::Vertex>,
    rng: &mut R,
    record: bool,
    cap: u64,
) -> WalkOutcome<G::Vertex> {
    let mut x = start;
    let mut path = record.then(|| vec![start]);
    let mut time = 0u64;
    let done = |x: G::Vertex, time: u64| match stop {
        Stop::Horizon(n) => time >= *n,
        Stop::ExitOf(inside) => !inside(x),
        Stop::Hit(target) => target(x),
    };
    while !done(x, time) {
        if time >= cap {
            return WalkOutcome { end: x, time, path, capped: true };
        }
        x = g.step(x, rng);
        time += 1;
        if let Some(p) = path.as_mut() {
            p.push(x);
        }
    }
    WalkOutcome { end: x, time, path, capped: false }
}

/// Horizontal/vertical decomposition of a comb path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionTrace {
    /// `ζ_0 = 0` and the times of horizontal steps.
    pub zetas: Vec<u64>,
    /// Base positions `X̃_k` occupied from `ζ_k` on.
    pub horizontal_path: Vec<usize>,
    /// `V_i = ζ_{i+1} - ζ_i`
    pub excursion_lengths: Vec<u64>,
    /// Visits to the skeleton vertex `(X̃_i, 0)` during `[ζ_i, ζ_{i+1})`.
    pub visits_per_excursion: Vec<u64>,
    /// Heights `U_n`, one per time.
    pub heights: Vec<u32>,
    /// Time after the last horizontal step.
    pub residual: u64,
}

impl DecompositionTrace {
    pub fn from_path(path: &[CombVertex]) -> Self {
        let mut zetas = vec![0];
        let mut horizontal_path = vec![path[0].base];
        let mut visits = vec![(path[0].height == 0) as u64];
        for n in 1..path.len() {
            let (a, b) = (path[n - 1], path[n]);
            if a.height == 0 && b.height == 0 && a.base != b.base {
                zetas.push(n as u64);
                horizontal_path.push(b.base);
                visits.push(0);
            }
            if b.height == 0 {
                *visits.last_mut().unwrap() += 1;
            }
        }
        let elapsed = path.len() as u64 - 1;
        let excursion_lengths = zetas.windows(2).map(|w| w[1] - w[0]).collect();
        visits.pop();
        let residual = elapsed - zetas.last().unwrap();
        DecompositionTrace {
            zetas,
            horizontal_path,
            excursion_lengths,
            visits_per_excursion: visits,
            heights: path.iter().map(|x| x.height).collect(),
            residual,
        }
    }

    /// `Hor_n = |{k >= 1 : ζ_k <= n}|`
    pub fn hor(&self, n: u64) -> u64 {
        (self.zetas.partition_point(|&z| z <= n) - 1) as u64
    }

    /// Rebuilds the position sequence.
    pub fn reconstruct(&self) -> Vec<CombVertex> {
        let mut k = 0;
        (0..self.heights.len())
            .map(|n| {
                while k + 1 < self.zetas.len() && self.zetas[k + 1] <= n as u64 {
                    k += 1;
                }
                CombVertex { base: self.horizontal_path[k], height: self.heights[n] }
            })
            .collect()
    }
}

/// Base graph distance from `center`, closed form on lattices.
fn base_distance_fn(base: &BaseGraph, center: usize, limit: u64) -> Box<dyn Fn(usize) -> u64 + Sync + '_> {
    if base.half_width().is_some() {
        Box::new(move |v| base.lattice_distance(center, v).expect("lattice"))
    } else {
        let d = bfs_distances(base, center, limit.min(u32::MAX as u64 - 1) as u32);
        Box::new(move |v| if d[v] == u32::MAX { u64::MAX } else { d[v] as u64 })
    }
}

/// Fails unless every base vertex within distance `k` of `x` is an interior
/// vertex of the window.
fn check_ball(base: &BaseGraph, x: usize, k: u64) -> Result<()> {
    let ok = match base.lattice_distance_to_boundary(x).filter(|_| base.half_width().is_some()) {
        Some(d) => d > k,
        None => {
            let limit = k.min(u32::MAX as u64 - 1) as u32;
            let d = bfs_distances(base, x, limit);
            (0..base.vertex_count()).all(|v| d[v] > limit || !base.is_truncated(v))
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::BallExceedsTruncation { radius: k })
    }
}

/// One sample of `(T_{x,k}, L_{x,k})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExitSample {
    /// Exit time of `D(x, k)` by the comb walk.
    pub t: u64,
    /// Horizontal steps up to and including the exit step; distributed as
    /// the exit time of the base ball by the base walk.
    pub l: u64,
    /// First position outside `D(x, k)`.
    pub end: CombVertex,
}

pub fn exit_time_samples(comb: &CombGraph, x: usize, k: u64, trials: usize, seed: u64) -> Result<Vec<ExitSample>> {
    let base = comb.base();
    check_ball(base, x, k)?;
    let dist = base_distance_fn(base, x, k + 1);
    (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let mut pos = CombVertex::skeleton(x);
            let (mut t, mut l) = (0u64, 0u64);
            loop {
                if t >= DEFAULT_CAP {
                    return Err(Error::CapExceeded { steps: t });
                }
                let next = comb.step(pos, &mut rng);
                t += 1;
                if next.base != pos.base {
                    l += 1;
                    if dist(next.base) > k {
                        return Ok(ExitSample { t, l, end: next });
                    }
                }
                pos = next;
            }
        })
        .collect()
}

/// End point and horizontal step count of a fixed-length walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HorizonSample {
    pub end: CombVertex,
    pub hor: u64,
}

/// Independent walks of `t` steps from `start`.
pub fn horizon_samples(comb: &CombGraph, start: CombVertex, t: u64, trials: usize, seed: u64) -> Vec<HorizonSample> {
    (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let (mut pos, mut hor) = (start, 0u64);
            for _ in 0..t {
                let next = comb.step(pos, &mut rng);
                hor += (next.base != pos.base) as u64;
                pos = next;
            }
            HorizonSample { end: pos, hor }
        })
        .collect()
}

/// Mean, variance and confidence interval of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub variance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Self {
        let s = Summary::of(xs);
        let (ci_low, ci_high) = s.ci95();
        Estimate { mean: s.mean, variance: s.variance, ci_low, ci_high }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcursionStats {
    pub trials: usize,
    /// Time `τ_z` spent in the tooth at `z` before the first horizontal step.
    pub tau: Estimate,
    /// Visits `B_z` to `(z, 0)` before the first horizontal step.
    pub visits: Estimate,
}

pub fn tooth_excursion_stats(comb: &CombGraph, z: usize, trials: usize, seed: u64) -> Result<ExcursionStats> {
    let start = CombVertex::skeleton(z);
    if comb.base().degree(z) == 0 {
        return Err(Error::BadParameter("base vertex has no neighbours".into()));
    }
    let samples: Vec<(f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let (mut pos, mut t, mut b) = (start, 0u64, 1u64);
            loop {
                let next = comb.step(pos, &mut rng);
                t += 1;
                if next.base != z {
                    return (t as f64, b as f64);
                }
                if next.height == 0 {
                    b += 1;
                }
                pos = next;
            }
        })
        .collect();
    let (tau, visits): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
    Ok(ExcursionStats { trials, tau: Estimate::of(&tau), visits: Estimate::of(&visits) })
}

/// Horizontal step counts `(Hor_{t/2}, Hor_t)` of independent walks from
/// `(x, 0)`.
pub fn horizontal_count_samples(comb: &CombGraph, x: usize, t: u64, trials: usize, seed: u64) -> Vec<(u64, u64)> {
    (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let mut pos = CombVertex::skeleton(x);
            let (mut half, mut hor) = (0u64, 0u64);
            for n in 1..=t {
                let next = comb.step(pos, &mut rng);
                if next.base != pos.base {
                    hor += 1;
                }
                if n == t / 2 {
                    half = hor;
                }
                pos = next;
            }
            (half, hor)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HorizontalCounts {
    pub t: u64,
    pub trials: usize,
    pub c2: f64,
    pub c3: f64,
    /// `P(Hor_{t/2} >= c₂ (t/2) log^{-γ} t)`
    pub p_a: f64,
    pub p_a_ci: (f64, f64),
    /// `P(Hor_t <= c₃ t log^{-γ} t)`
    pub p_b: f64,
    pub p_b_ci: (f64, f64),
}

fn log_scale(comb: &CombGraph, t: u64) -> f64 {
    (t.max(2) as f64).ln().powf(comb.profile().gamma)
}

pub fn horizontal_counts(comb: &CombGraph, x: usize, t: u64, trials: usize, c2: f64, c3: f64, seed: u64) -> Result<HorizontalCounts> {
    if !(c2 > 0.0 && c3 > 0.0) {
        return Err(Error::BadParameter("c2 and c3 must be positive".into()));
    }
    let scale = log_scale(comb, t);
    let samples = horizontal_count_samples(comb, x, t, trials, seed);
    let a = samples.iter().filter(|s| s.0 as f64 >= c2 * (t / 2) as f64 / scale).count();
    let b = samples.iter().filter(|s| s.1 as f64 <= c3 * t as f64 / scale).count();
    Ok(HorizontalCounts {
        t,
        trials,
        c2,
        c3,
        p_a: a as f64 / trials as f64,
        p_a_ci: wilson95(a, trials),
        p_b: b as f64 / trials as f64,
        p_b_ci: wilson95(b, trials),
    })
}

/// Default `(c₂, c₃)` from a calibration run: half the median of the
/// normalized `Hor_{t/2}` and twice the median of the normalized `Hor_t`.
pub fn calibrate_counts(comb: &CombGraph, x: usize, t: u64, trials: usize, seed: u64) -> (f64, f64) {
    let scale = log_scale(comb, t);
    let samples = horizontal_count_samples(comb, x, t, trials, seed);
    let a: Vec<f64> = samples.iter().map(|s| s.0 as f64 * scale / (t / 2) as f64).collect();
    let b: Vec<f64> = samples.iter().map(|s| s.1 as f64 * scale / t as f64).collect();
    (median(&a) / 2.0, 2.0 * median(&b))
}

/// Shape parameters for the exit-time lower tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFitConfig {
    pub beta: f64,
    pub grid_of_lambda: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    /// `(λ, P̂(L < k^β / λ))` for every grid point with a positive estimate.
    pub points: Vec<(f64, f64)>,
    pub intercept: f64,
    /// Fitted slope of `log P̂` against `λ^{1/(β-1)}`; the tail predicts it
    /// negative.
    pub slope: f64,
    /// Largest `|log P̂ - fit|` over the points.
    pub max_deviation: f64,
}

/// Fits `log P(L < k^β / λ) ≈ a - c λ^{1/(β-1)}`.
pub fn fit_exit_tail(samples: &[u64], k: u64, cfg: &TailFitConfig) -> Result<TailFit> {
    if !(2.0..=3.0).contains(&cfg.beta) {
        return Err(Error::BadParameter(format!("beta = {} outside [2, 3]", cfg.beta)));
    }
    let scale = (k as f64).powf(cfg.beta);
    let points: Vec<(f64, f64)> = cfg
        .grid_of_lambda
        .iter()
        .map(|&lambda| {
            let below = samples.iter().filter(|&&l| (l as f64) < scale / lambda).count();
            (lambda, below as f64 / samples.len() as f64)
        })
        .filter(|p| p.1 > 0.0)
        .collect();
    if points.len() < 2 {
        return Err(Error::BadParameter("fewer than two grid points with positive estimates".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.powf(1.0 / (cfg.beta - 1.0))).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (intercept, slope) = linear_fit(&xs, &ys);
    let max_deviation = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).abs()).fold(0.0, f64::max);
    Ok(TailFit { points, intercept, slope, max_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{BaseSpec, Metric, TeethProfile};

    fn z2_comb(n: u64, gamma: f64) -> CombGraph {
        let base = BaseGraph::build(BaseSpec::Z2Box { n }).unwrap();
        CombGraph::attach_teeth(base, TeethProfile::logarithmic(gamma, Metric::SupNorm)).unwrap()
    }

    #[test]
    fn k2_alternates() {
        let g = Csr::from_edges(2, &[(0, 1)]).unwrap();
        let out = simulate_walk(&g, 0, &Stop::Horizon(5), &mut trial_rng(1, 0), true, DEFAULT_CAP);
        assert_eq!(out.path.unwrap(), vec![0, 1, 0, 1, 0, 1]);
    }

    #[test]
    fn stop_conventions() {
        let g = Csr::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let at_zero = |v: usize| v == 0;
        let hit = simulate_walk(&g, 0, &Stop::Hit(&at_zero), &mut trial_rng(0, 0), false, DEFAULT_CAP);
        assert_eq!(hit.time, 0);
        let exit = simulate_walk(&g, 1, &Stop::ExitOf(&at_zero), &mut trial_rng(0, 0), false, DEFAULT_CAP);
        assert_eq!(exit.time, 0);
        let never = |_: usize| false;
        let capped = simulate_walk(&g, 1, &Stop::Hit(&never), &mut trial_rng(0, 0), true, 50);
        assert!(capped.capped);
        assert_eq!(capped.path.as_ref().unwrap().len(), 51);
        assert_eq!(capped.checked().unwrap_err(), Error::CapExceeded { steps: 50 });
    }

    #[test]
    fn trace_reconstructs_path() {
        let comb = z2_comb(40, 2.0);
        let start = CombVertex::skeleton(comb.base().vertex_at([5, 3]).unwrap());
        let out = simulate_walk(&comb, start, &Stop::Horizon(2000), &mut trial_rng(9, 4), true, DEFAULT_CAP);
        let path = out.path.unwrap();
        let trace = DecompositionTrace::from_path(&path);
        assert_eq!(trace.reconstruct(), path);
        assert_eq!(trace.excursion_lengths.iter().sum::<u64>() + trace.residual, 2000);
        assert_eq!(trace.hor(2000), trace.zetas.len() as u64 - 1);
        assert!(trace.hor(2000) <= 2000);
        assert_eq!(trace.visits_per_excursion.len(), trace.excursion_lengths.len());
    }

    #[test]
    fn bare_teeth_excursion_is_one_step() {
        let comb = z2_comb(5, 1.0);
        let s = tooth_excursion_stats(&comb, comb.origin(), 100, 3).unwrap();
        assert_eq!(s.tau.mean, 1.0);
        assert_eq!(s.tau.variance, 0.0);
        assert_eq!(s.visits.mean, 1.0);
    }

    #[test]
    fn exit_guard() {
        let comb = z2_comb(10, 2.0);
        assert!(matches!(
            exit_time_samples(&comb, comb.origin(), 10, 5, 1),
            Err(Error::BallExceedsTruncation { radius: 10 })
        ));
        let s = exit_time_samples(&comb, comb.origin(), 3, 50, 1).unwrap();
        assert!(s.iter().all(|x| x.l >= 4 && x.t >= x.l));
        assert_eq!(s, exit_time_samples(&comb, comb.origin(), 3, 50, 1).unwrap());
    }

    #[test]
    fn no_teeth_means_every_step_is_horizontal() {
        let comb = z2_comb(300, 1.0);
        // ⌊ln r⌋ = 0 for r < 3, so start where teeth are absent and stop early.
        let c = horizontal_counts(&comb, comb.origin(), 2, 20, 0.1, 10.0, 5).unwrap();
        assert_eq!(c.p_a, 1.0);
        for (half, full) in horizontal_count_samples(&comb, comb.origin(), 64, 20, 5) {
            assert!(half <= full && full <= 64);
        }
    }
}
