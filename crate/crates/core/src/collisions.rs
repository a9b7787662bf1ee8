//! Two independent walkers from the same vertex: collision counts, per-region
//! tallies over shells × dyadic height bands, exploration sets and coupled
//! collision curves.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::graph::{bfs_distances, BaseGraph, CombGraph, CombVertex, Graph};
use crate::stats::Summary;
use crate::walker::{trial_rng, WalkGraph};
use crate::{Error, Result};

/// Streams `(master, stream)` of the two walkers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedPair {
    pub master: u64,
    pub x_stream: u64,
    pub y_stream: u64,
}

impl SeedPair {
    /// Streams `2i` and `2i + 1` of `master` for trial `i`.
    pub fn for_trial(master: u64, trial: u64) -> Self {
        SeedPair { master, x_stream: 2 * trial, y_stream: 2 * trial + 1 }
    }

    pub fn swapped(self) -> Self {
        SeedPair { x_stream: self.y_stream, y_stream: self.x_stream, ..self }
    }
}

/// Dyadic band `ℓ = 2^j` at shell `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Band {
    pub k: u64,
    pub ell: u64,
    /// `Q_{k,ℓ}`: heights `0..=ℓ`.
    pub q: (u64, u64),
    /// `Q̃_{k,ℓ}`: heights `ℓ/3 <= h <= 2ℓ/3`, i.e. `ceil(ℓ/3)..=floor(2ℓ/3)`.
    pub q_tilde: (u64, u64),
}

impl Band {
    pub fn new(k: u64, ell: u64) -> Self {
        Band { k, ell, q: (0, ell), q_tilde: (ell.div_ceil(3), 2 * ell / 3) }
    }

    pub fn q_tilde_is_empty(&self, max_height: u64) -> bool {
        self.q_tilde.0 > self.q_tilde.1 || self.q_tilde.0 > max_height
    }
}

/// Number of bands at a shell whose highest tooth is `max_height`: the least
/// `j >= 1` with `floor(2^{j+1} / 3) >= max_height`, so that the middle
/// thirds reach every tooth vertex.
pub fn band_count(max_height: u64) -> u32 {
    (1..64).find(|&j| (1u64 << (j + 1)) / 3 >= max_height).expect("heights fit in 64 bits")
}

/// How base vertices are grouped into shells.
#[derive(Debug, Clone)]
pub enum Shells {
    /// Shell `k` = base vertices at profile radius `k`.
    Radius,
    /// Shell `k` = exploration set `A_k`.
    Exploration(ExplorationPartition),
}

impl Shells {
    fn shell_of(&self, comb: &CombGraph, v: usize) -> Option<u64> {
        match self {
            Shells::Radius => Some(comb.radius(v)),
            Shells::Exploration(p) => p.shell_of.get(v).copied().flatten(),
        }
    }
}

/// Dyadic tiling of the comb over shells `0..=kmax` (or `1..=kmax` for
/// exploration shells).
#[derive(Debug, Clone)]
pub struct RegionTiling {
    pub shells: Shells,
    pub kmax: u64,
    pub bands: Vec<Vec<Band>>,
}

pub fn region_tiling(comb: &CombGraph, kmax: u64) -> RegionTiling {
    let max_at = shell_maxima(comb, &Shells::Radius, kmax);
    build_tiling(Shells::Radius, kmax, &max_at)
}

/// Tiling with the exploration sets as shells.
pub fn region_tiling_exploration(comb: &CombGraph, partition: ExplorationPartition) -> RegionTiling {
    let kmax = partition.sets.len() as u64;
    let shells = Shells::Exploration(partition);
    let max_at = shell_maxima(comb, &shells, kmax);
    build_tiling(shells, kmax, &max_at)
}

fn shell_maxima(comb: &CombGraph, shells: &Shells, kmax: u64) -> Vec<u64> {
    let mut max_at = vec![0u64; kmax as usize + 1];
    match shells {
        Shells::Radius if comb.base().half_width().is_some() => {
            // Lattice windows can be huge; the profile is monotone, so the
            // tallest tooth at radius k is f(k).
            for (k, m) in max_at.iter_mut().enumerate() {
                *m = comb.profile().eval(k as u64) as u64;
            }
        }
        _ => {
            for v in 0..comb.base().vertex_count() {
                if let Some(k) = shells.shell_of(comb, v).filter(|&k| k <= kmax) {
                    max_at[k as usize] = max_at[k as usize].max(comb.tooth(v) as u64);
                }
            }
        }
    }
    max_at
}

fn build_tiling(shells: Shells, kmax: u64, max_at: &[u64]) -> RegionTiling {
    let bands = (0..=kmax)
        .map(|k| (1..=band_count(max_at[k as usize])).map(|j| Band::new(k, 1 << j)).collect())
        .collect();
    RegionTiling { shells, kmax, bands }
}

impl RegionTiling {
    pub fn bands_at(&self, k: u64) -> &[Band] {
        &self.bands[k as usize]
    }
}

/// Collisions counted in one band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegionCount {
    pub k: u64,
    pub ell: u64,
    /// `𝒵_{k,ℓ}`
    pub z: u64,
    /// `𝒵̃_{k,ℓ}`
    pub z_tilde: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionRecord {
    pub horizon: u64,
    /// Times `t <= horizon` with `X_t = Y_t`, including `t = 0`.
    pub collision_times: Vec<u64>,
    pub total_z: u64,
    pub per_region: Vec<RegionCount>,
    /// Collisions over base vertices outside every tiled shell.
    pub outside: u64,
    pub seeds: SeedPair,
}

impl CollisionRecord {
    /// Collisions by shell, each counted in the shell's top (covering) band.
    pub fn shell_totals(&self) -> BTreeMap<u64, u64> {
        let mut top: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
        for r in &self.per_region {
            let e = top.entry(r.k).or_insert((0, 0));
            if r.ell >= e.0 {
                *e = (r.ell, r.z);
            }
        }
        top.into_iter().map(|(k, (_, z))| (k, z)).collect()
    }
}

/// Runs both walkers from `start` for `horizon` steps.
pub fn run_collision(
    comb: &CombGraph,
    start: CombVertex,
    horizon: u64,
    seeds: SeedPair,
    tiling: Option<&RegionTiling>,
) -> Result<CollisionRecord> {
    if !comb.contains(start) {
        return Err(Error::BadParameter(format!("{start:?} is not a comb vertex")));
    }
    let mut rx = trial_rng(seeds.master, seeds.x_stream);
    let mut ry = trial_rng(seeds.master, seeds.y_stream);
    let (mut x, mut y) = (start, start);
    let mut times = Vec::new();
    let mut counts: Vec<Vec<(u64, u64)>> =
        tiling.map(|t| t.bands.iter().map(|b| vec![(0, 0); b.len()]).collect()).unwrap_or_default();
    let mut outside = 0;
    for t in 0..=horizon {
        if t > 0 {
            x = comb.step(x, &mut rx);
            y = comb.step(y, &mut ry);
        }
        if x != y {
            continue;
        }
        times.push(t);
        if let Some(tiling) = tiling {
            match tiling.shells.shell_of(comb, x.base).filter(|&k| k <= tiling.kmax) {
                Some(k) => {
                    let h = x.height as u64;
                    for (band, c) in tiling.bands[k as usize].iter().zip(counts[k as usize].iter_mut()) {
                        if h <= band.q.1 {
                            c.0 += 1;
                        }
                        if band.q_tilde.0 <= h && h <= band.q_tilde.1 {
                            c.1 += 1;
                        }
                    }
                }
                None => outside += 1,
            }
        }
    }
    let per_region = tiling
        .map(|tiling| {
            tiling
                .bands
                .iter()
                .zip(&counts)
                .flat_map(|(bands, cs)| {
                    bands.iter().zip(cs).map(|(b, c)| RegionCount { k: b.k, ell: b.ell, z: c.0, z_tilde: c.1 })
                })
                .collect()
        })
        .unwrap_or_default();
    Ok(CollisionRecord { horizon, total_z: times.len() as u64, collision_times: times, per_region, outside, seeds })
}

/// Greedy nearest-first batches `A_1, A_2, ...` of `⌊k^{α-1}⌋` base vertices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplorationPartition {
    pub alpha: f64,
    pub sets: Vec<Vec<usize>>,
    /// `min_{x ∈ A_k} d(o, x)` per set.
    pub min_distance: Vec<u64>,
    /// The base ran out of vertices before `kmax`; the last set may be short.
    pub truncated: bool,
    #[serde(skip)]
    shell_of: Vec<Option<u64>>,
}

pub fn exploration_sets(base: &BaseGraph, o: usize, alpha: f64, kmax: u64) -> Result<ExplorationPartition> {
    if !(1.0..=2.0).contains(&alpha) {
        return Err(Error::BadParameter(format!("alpha = {alpha} outside [1, 2]")));
    }
    let dist = bfs_distances(base, o, u32::MAX);
    let mut order: Vec<usize> = (0..base.vertex_count()).filter(|&v| dist[v] != u32::MAX).collect();
    order.sort_by_key(|&v| (dist[v], base.coords(v).unwrap_or([v as i64, 0])));
    let mut sets = Vec::new();
    let mut min_distance = Vec::new();
    let mut shell_of = vec![None; base.vertex_count()];
    let mut next = 0;
    let mut truncated = false;
    for k in 1..=kmax {
        let size = (k as f64).powf(alpha - 1.0).floor() as usize;
        if next + size > order.len() {
            truncated = true;
        }
        let set: Vec<usize> = order[next..(next + size).min(order.len())].to_vec();
        next += set.len();
        if set.is_empty() {
            break;
        }
        for &v in &set {
            shell_of[v] = Some(k);
        }
        min_distance.push(set.iter().map(|&v| dist[v] as u64).min().unwrap());
        sets.push(set);
        if truncated {
            break;
        }
    }
    Ok(ExplorationPartition { alpha, sets, min_distance, truncated, shell_of })
}

/// One point of a collision curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub gamma: f64,
    pub checkpoint: u64,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollisionCurve {
    pub checkpoints: Vec<u64>,
    pub points: Vec<CurvePoint>,
    /// `samples[g][i][c]`: cumulative collisions of trial `i` at checkpoint
    /// `c` for the `g`-th exponent.
    pub samples: Vec<Vec<Vec<u64>>>,
}

impl CollisionCurve {
    /// Per-trial counts at checkpoint index `c` for exponent index `g`.
    pub fn at(&self, g: usize, c: usize) -> Vec<f64> {
        self.samples[g].iter().map(|s| s[c] as f64).collect()
    }

    /// Per-trial increments between checkpoint indices `from` and `to`.
    pub fn increments(&self, g: usize, from: usize, to: usize) -> Vec<f64> {
        self.samples[g].iter().map(|s| (s[to] - s[from]) as f64).collect()
    }
}

/// `1, 2, 4, ...` up to `horizon`, which is always included.
pub fn dyadic_checkpoints(horizon: u64) -> Vec<u64> {
    let mut c: Vec<u64> = std::iter::successors(Some(1u64), |&x| x.checked_mul(2)).take_while(|&x| x <= horizon).collect();
    if c.last() != Some(&horizon) {
        c.push(horizon);
    }
    c
}

/// Cumulative collision counts at dyadic checkpoints for every exponent,
/// with the same walker streams for every exponent.
pub fn collision_curve(
    comb: &CombGraph,
    gammas: &[f64],
    horizon: u64,
    trials: usize,
    seed: u64,
) -> Result<CollisionCurve> {
    if gammas.is_empty() {
        return Err(Error::BadParameter("gamma list is empty".into()));
    }
    let checkpoints = dyadic_checkpoints(horizon);
    let mut points = Vec::new();
    let mut samples = Vec::new();
    for &gamma in gammas {
        let g = comb.with_gamma(gamma)?;
        let start = g.origin_vertex();
        let per_trial: Vec<Vec<u64>> = (0..trials as u64)
            .into_par_iter()
            .map(|trial| cumulative_collisions(&g, start, &checkpoints, SeedPair::for_trial(seed, trial)))
            .collect();
        for (c, &checkpoint) in checkpoints.iter().enumerate() {
            let xs: Vec<f64> = per_trial.iter().map(|s| s[c] as f64).collect();
            let s = Summary::of(&xs);
            let (ci_low, ci_high) = s.ci95();
            points.push(CurvePoint { gamma, checkpoint, mean: s.mean, ci_low, ci_high, trials, seed });
        }
        samples.push(per_trial);
    }
    Ok(CollisionCurve { checkpoints, points, samples })
}

fn cumulative_collisions<G: WalkGraph>(g: &G, start: G::Vertex, checkpoints: &[u64], seeds: SeedPair) -> Vec<u64> {
    let mut rx = trial_rng(seeds.master, seeds.x_stream);
    let mut ry = trial_rng(seeds.master, seeds.y_stream);
    let (mut x, mut y) = (start, start);
    let mut count = 1u64;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut t = 0u64;
    for &c in checkpoints {
        while t < c {
            x = g.step(x, &mut rx);
            y = g.step(y, &mut ry);
            t += 1;
            count += (x == y) as u64;
        }
        out.push(count);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{BaseSpec, Metric, TeethProfile};

    fn k2_comb() -> CombGraph {
        let base = BaseGraph::from_edges(2, &[(0, 1)]).unwrap();
        // Radius <= 1 and ⌊ln 1⌋ = 0: no teeth anywhere.
        CombGraph::attach_teeth(base, TeethProfile::logarithmic(1.0, Metric::GraphDistance)).unwrap()
    }

    #[test]
    fn k2_collides_every_step() {
        let comb = k2_comb();
        let r = run_collision(&comb, comb.origin_vertex(), 10, SeedPair::for_trial(1, 0), None).unwrap();
        assert_eq!(r.total_z, 11);
        let r0 = run_collision(&comb, comb.origin_vertex(), 0, SeedPair::for_trial(1, 0), None).unwrap();
        assert_eq!(r0.total_z, 1);
        assert_eq!(r0.collision_times, vec![0]);
    }

    #[test]
    fn band_rules() {
        assert_eq!(band_count(0), 1);
        assert!(Band::new(3, 2).q_tilde_is_empty(0));
        assert_eq!(band_count(21), 5);
        assert_eq!(Band::new(0, 8).q_tilde, (3, 5));
        assert_eq!(Band::new(0, 2).q_tilde, (1, 1));
    }

    #[test]
    fn log_squared_tiling_at_100() {
        let base = BaseGraph::build(BaseSpec::Z2Box { n: 120 }).unwrap();
        let comb = CombGraph::attach_teeth(base, TeethProfile::logarithmic(2.0, Metric::SupNorm)).unwrap();
        let tiling = region_tiling(&comb, 100);
        assert_eq!(tiling.bands_at(100).len(), 5);
        assert_eq!(tiling.bands_at(100).last().unwrap().ell, 32);
    }

    #[test]
    fn exploration_on_a_box() {
        let base = BaseGraph::build(BaseSpec::Z2Box { n: 10 }).unwrap();
        let p = exploration_sets(&base, base.origin(), 2.0, 12).unwrap();
        for (k, s) in p.sets.iter().enumerate() {
            assert_eq!(s.len(), k + 1);
        }
        let one = exploration_sets(&base, base.origin(), 1.0, 13).unwrap();
        let coords: Vec<[i64; 2]> = one.sets.iter().map(|s| base.coords(s[0]).unwrap()).collect();
        assert_eq!(&coords[..5], &[[0, 0], [-1, 0], [0, -1], [0, 1], [1, 0]]);
        let tiny = exploration_sets(&base, base.origin(), 2.0, 100).unwrap();
        assert!(tiny.truncated);
    }

    #[test]
    fn empty_gamma_list() {
        let comb = k2_comb();
        assert!(matches!(collision_curve(&comb, &[], 8, 1, 0), Err(Error::BadParameter(_))));
        assert_eq!(dyadic_checkpoints(10), vec![1, 2, 4, 8, 10]);
    }
}
