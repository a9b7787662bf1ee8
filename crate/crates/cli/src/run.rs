//! Runs a configuration and writes its artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use combwalk::collisions::{collision_curve, region_tiling, run_collision, SeedPair};
use combwalk::graph::{bfs_distances, truncation_radius, BaseGraph, BaseSpec, CombGraph, CombVertex, Graph};
use combwalk::kernels::{green_criterion_ratio, kernel_table, KernelTable};
use combwalk::percolation::{origin_cluster_conditioned, sample_bonds};
use combwalk::resistance::resistance_to_complement;
use combwalk::stats::Summary;
use combwalk::walker::{exit_time_samples, horizon_samples};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Command, GraphConfig, RunConfig};
use crate::CliError;

/// Largest comb the dense commands will materialize.
const MAX_DENSE: usize = 4_000_000;
/// Largest kernel table written, in values.
const MAX_KERNEL_VALUES: u64 = 50_000_000;

const Q_TILDE_RULE: &str = "ceil(ell/3) <= h <= floor(2*ell/3)";
const BAND_RULE: &str = "ell = 2^j for j = 1..=j0, j0 = least j >= 1 with floor(2^(j+1)/3) >= max tooth height in the shell";

/// Floats are written with 17 significant digits.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_sha256: String,
    pub config: RunConfig,
    pub master_seed: u64,
    pub rng: &'static str,
    pub log_base: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<&'static str>,
    pub truncation_radii: BTreeMap<String, Option<u64>>,
    pub graph: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bands: Option<Value>,
    pub files: Vec<FileEntry>,
    pub notes: Vec<String>,
}

/// Everything a run produces, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    pub manifest: Manifest,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Table { writer }
    }

    fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    fn finish(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    files: Vec<(String, Vec<u8>)>,
    truncation: BTreeMap<String, Option<u64>>,
    graph: BTreeMap<String, Value>,
    bands: Option<Value>,
    notes: Vec<String>,
}

impl Run<'_> {
    fn emit(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn base(&mut self) -> Result<BaseGraph, CliError> {
        let base = match &self.cfg.graph {
            GraphConfig::ZSegment { n } => BaseGraph::build(BaseSpec::ZSegment { n: *n })?,
            GraphConfig::Z2Box { n } => BaseGraph::build(BaseSpec::Z2Box { n: *n })?,
            GraphConfig::Gasket { level } => BaseGraph::build(BaseSpec::Gasket { level: *level })?,
            GraphConfig::Percolation { n, p, max_attempts } => {
                let (g, sample) = origin_cluster_conditioned(*n, *p, self.cfg.master_seed, *max_attempts)?;
                self.graph.insert("acceptedSeed".into(), json!(sample.seed));
                self.graph.insert("boxVertices".into(), json!(sample.vertex_count()));
                self.notes.push(
                    "percolation base: largest cluster of the first sample (seeds masterSeed, masterSeed+1, ...) whose origin lies in it; a finite-box stand-in for the infinite cluster".into(),
                );
                g
            }
            GraphConfig::File { path } => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Validation(format!("cannot read graph file {}: {e}", path.display())))?;
                BaseGraph::from_text(&text)?
            }
        };
        self.graph.insert("kind".into(), json!(base.kind().as_str()));
        self.graph.insert("vertices".into(), json!(base.vertex_count()));
        self.graph.insert("origin".into(), json!(base.origin()));
        Ok(base)
    }

    fn comb(&mut self, base: BaseGraph) -> Result<CombGraph, CliError> {
        let profile = self.cfg.profile()?;
        let comb = CombGraph::attach_teeth(base, profile.teeth())?;
        self.graph.insert("profile".into(), json!(profile));
        Ok(comb)
    }

    fn start(&self, base: &BaseGraph) -> Result<usize, CliError> {
        match self.cfg.start {
            Some(s) if s >= base.vertex_count() => {
                Err(CliError::Validation(format!("invalid config field `start`: {s} is not a base vertex")))
            }
            Some(s) => Ok(s),
            None => Ok(base.origin()),
        }
    }

    /// Records the distance from `start` to the window boundary and fails if
    /// `horizon` steps could reach it.
    fn check_horizon(&mut self, base: &BaseGraph, start: usize, horizon: u64, key: &str) -> Result<(), CliError> {
        let radius = match base.half_width() {
            Some(_) => base.lattice_distance_to_boundary(start),
            None => truncation_radius(base, start),
        };
        self.truncation.insert(key.into(), radius);
        match radius {
            Some(r) if r < horizon => Err(combwalk::Error::HorizonExceedsTruncation { horizon, radius: r }.into()),
            _ => Ok(()),
        }
    }
}

/// Base vertices within graph distance `k` of `center`.
fn base_ball(base: &BaseGraph, center: usize, k: u64) -> Vec<bool> {
    let n = base.vertex_count();
    if base.half_width().is_some() {
        return (0..n).map(|v| base.lattice_distance(center, v).expect("lattice") <= k).collect();
    }
    let limit = k.min(u32::MAX as u64 - 1) as u32;
    bfs_distances(base, center, limit).iter().map(|&d| d <= limit).collect()
}

fn build(run: &mut Run) -> Result<(), CliError> {
    let base = run.base()?;
    run.emit("graph.txt", base.to_text().into_bytes());
    let mut summary = Table::new(&["key", "value"]);
    summary.row(["baseVertices".to_string(), base.vertex_count().to_string()]);
    summary.row(["baseEdges".to_string(), base.edge_count().to_string()]);
    summary.row(["origin".to_string(), base.origin().to_string()]);
    if run.cfg.profile.is_some() {
        let comb = run.comb(base)?;
        summary.row(["combVertices".to_string(), comb.vertex_count().to_string()]);
        summary.row(["combEdges".to_string(), comb.edge_count().to_string()]);
        let mut teeth = Table::new(&["baseVertex", "radius", "tooth"]);
        for v in 0..comb.base().vertex_count() {
            teeth.row([v.to_string(), comb.radius(v).to_string(), comb.tooth(v).to_string()]);
        }
        run.emit("teeth.csv", teeth.finish());
    }
    run.emit("summary.csv", summary.finish());
    Ok(())
}

fn resistance(run: &mut Run) -> Result<(), CliError> {
    let base = run.base()?;
    let o = base.origin();
    let radii = run.cfg.radii.clone().unwrap_or_default();
    let comb = match run.cfg.profile {
        Some(_) => Some(run.comb(base.clone())?),
        None => None,
    };
    let dense = comb.as_ref().map(|c| c.materialize(MAX_DENSE)).transpose()?;
    let mut header = vec!["radius", "baseResistance"];
    if comb.is_some() {
        header.extend(["combResistance", "greenRatio"]);
    }
    let mut table = Table::new(&header);
    for &r in &radii {
        let inside = base_ball(&base, o, r);
        if inside.iter().all(|&b| b) {
            return Err(CliError::Validation(format!(
                "invalid config field `radii`: the ball of radius {r} covers the whole graph"
            )));
        }
        let mut row = vec![r.to_string(), fmt_f(resistance_to_complement(&base, o, &inside)?)];
        if let (Some(comb), Some(dense)) = (&comb, &dense) {
            let lifted = dense.lift(&inside);
            let x = dense.index(CombVertex::skeleton(o));
            row.push(fmt_f(resistance_to_complement(dense, x, &lifted)?));
            row.push(fmt_f(green_criterion_ratio(comb, r)?));
        }
        table.row(row);
    }
    run.notes.push("balls use base graph distance from the origin".into());
    run.emit("resistance.csv", table.finish());
    Ok(())
}

fn write_kernel(table: &KernelTable, n: usize) -> Result<Vec<u8>, CliError> {
    if (table.horizon + 1).saturating_mul(n as u64) > MAX_KERNEL_VALUES {
        return Err(runtime(format!("kernel table would hold more than {MAX_KERNEL_VALUES} values")));
    }
    let tag = table.normalization.as_str();
    let mut out = Table::new(&["t", "vertexId", "value", "normalization"]);
    for t in 0..=table.horizon {
        for v in 0..n {
            out.row([t.to_string(), v.to_string(), fmt_f(table.value(t, v)), tag.to_string()]);
        }
    }
    Ok(out.finish())
}

fn kernel(run: &mut Run) -> Result<(), CliError> {
    let base = run.base()?;
    let start = run.start(&base)?;
    let horizon = run.cfg.horizon()?;
    let norm = run.cfg.normalization();
    let (table, n) = if run.cfg.profile.is_some() {
        let comb = run.comb(base)?;
        let dense = comb.materialize(MAX_DENSE)?;
        let table = kernel_table(&dense, dense.index(CombVertex::skeleton(start)), horizon, norm)?;
        let mut ids = Table::new(&["vertexId", "baseVertex", "height"]);
        for (i, x) in dense.labels().iter().enumerate() {
            ids.row([i.to_string(), x.base.to_string(), x.height.to_string()]);
        }
        run.emit("vertices.csv", ids.finish());
        (table, dense.vertex_count())
    } else {
        (kernel_table(&base, start, horizon, norm)?, base.vertex_count())
    };
    run.truncation.insert("kernel".into(), table.truncation_radius);
    let bytes = write_kernel(&table, n)?;
    run.emit("kernel.csv", bytes);
    Ok(())
}

fn walk(run: &mut Run) -> Result<(), CliError> {
    let base = run.base()?;
    let start = run.start(&base)?;
    let trials = run.cfg.trials()?;
    let seed = run.cfg.master_seed;
    let mut table = Table::new(&["trial", "stopTime", "endVertex", "endHeight", "horizontalSteps"]);
    if let Some(k) = run.cfg.exit_radius {
        let comb = run.comb(base)?;
        let samples = exit_time_samples(&comb, start, k, trials, seed)?;
        for (i, s) in samples.iter().enumerate() {
            table.row([i.to_string(), s.t.to_string(), s.end.base.to_string(), s.end.height.to_string(), s.l.to_string()]);
        }
        run.notes.push(format!("stop rule: first exit of the comb ball of base radius {k} around vertex {start}"));
        run.notes.push("horizontalSteps counts the exit step".into());
    } else {
        let horizon = run.cfg.horizon()?;
        run.check_horizon(&base, start, horizon, "walk")?;
        let comb = run.comb(base)?;
        let samples = horizon_samples(&comb, CombVertex::skeleton(start), horizon, trials, seed);
        for (i, s) in samples.iter().enumerate() {
            table.row([i.to_string(), horizon.to_string(), s.end.base.to_string(), s.end.height.to_string(), s.hor.to_string()]);
        }
        run.notes.push(format!("stop rule: fixed horizon {horizon}"));
    }
    run.emit("walks.csv", table.finish());
    Ok(())
}

fn collide(run: &mut Run) -> Result<(), CliError> {
    let base = run.base()?;
    let start = run.start(&base)?;
    let horizon = run.cfg.horizon()?;
    let trials = run.cfg.trials()?;
    run.check_horizon(&base, start, horizon, "collide")?;
    let comb = run.comb(base)?;
    let tiling = run.cfg.kmax.map(|k| region_tiling(&comb, k));
    let records = (0..trials as u64)
        .into_par_iter()
        .map(|i| run_collision(&comb, CombVertex::skeleton(start), horizon, SeedPair::for_trial(run.cfg.master_seed, i), tiling.as_ref()))
        .collect::<combwalk::Result<Vec<_>>>()?;
    let mut summary = Table::new(&["trial", "xStream", "yStream", "totalZ", "outside"]);
    let mut regions = Table::new(&["trial", "k", "ell", "z", "zTilde"]);
    for (i, rec) in records.iter().enumerate() {
        summary.row([
            i.to_string(),
            rec.seeds.x_stream.to_string(),
            rec.seeds.y_stream.to_string(),
            rec.total_z.to_string(),
            rec.outside.to_string(),
        ]);
        for c in &rec.per_region {
            regions.row([i.to_string(), c.k.to_string(), c.ell.to_string(), c.z.to_string(), c.z_tilde.to_string()]);
        }
    }
    run.emit("collisions.csv", summary.finish());
    if let Some(tiling) = &tiling {
        run.bands = Some(json!({
            "kmax": tiling.kmax,
            "qTilde": Q_TILDE_RULE,
            "bandCount": BAND_RULE,
            "shells": "base graph distance from the origin",
        }));
        run.emit("regions.csv", regions.finish());
    }
    run.notes.push("collisions count t = 0".into());
    Ok(())
}

fn experiment(run: &mut Run) -> Result<(), CliError> {
    let base = run.base()?;
    let horizon = run.cfg.horizon()?;
    let trials = run.cfg.trials()?;
    let gammas = run.cfg.gammas.clone().unwrap_or_default();
    if run.cfg.start.is_some_and(|s| s != base.origin()) {
        return Err(CliError::Validation("invalid config field `start`: experiments start at the origin".into()));
    }
    run.check_horizon(&base, base.origin(), horizon, "experiment")?;
    let comb = run.comb(base)?;
    let curve = collision_curve(&comb, &gammas, horizon, trials, run.cfg.master_seed)?;
    let mut table = Table::new(&["gamma", "checkpoint", "mean", "ciLow", "ciHigh", "trials", "seed"]);
    for p in &curve.points {
        table.row([
            fmt_f(p.gamma),
            p.checkpoint.to_string(),
            fmt_f(p.mean),
            fmt_f(p.ci_low),
            fmt_f(p.ci_high),
            p.trials.to_string(),
            p.seed.to_string(),
        ]);
    }
    let mut windows = Table::new(&["gamma", "from", "to", "meanIncrement", "ciLow", "ciHigh"]);
    for (g, &gamma) in gammas.iter().enumerate() {
        for c in 1..curve.checkpoints.len() {
            let s = Summary::of(&curve.increments(g, c - 1, c));
            let (lo, hi) = s.ci95();
            windows.row([
                fmt_f(gamma),
                curve.checkpoints[c - 1].to_string(),
                curve.checkpoints[c].to_string(),
                fmt_f(s.mean),
                fmt_f(lo),
                fmt_f(hi),
            ]);
        }
    }
    run.emit("curve.csv", table.finish());
    run.emit("windows.csv", windows.finish());
    run.notes.push("cumulative collision counts at dyadic checkpoints, t = 0 included; windows report per-window increments with normal 95% intervals".into());
    Ok(())
}

fn percolation(run: &mut Run) -> Result<(), CliError> {
    let GraphConfig::Percolation { n, p, .. } = run.cfg.graph else {
        unreachable!("validated")
    };
    let count = run.cfg.samples.unwrap_or(0);
    let seed = run.cfg.master_seed;
    let samples = (0..count as u64)
        .into_par_iter()
        .map(|i| sample_bonds(n, p, seed.wrapping_add(i)))
        .collect::<combwalk::Result<Vec<_>>>()?;
    let mut table = Table::new(&[
        "sample",
        "seed",
        "openFraction",
        "clusters",
        "largestSize",
        "originLabel",
        "originSize",
    ]);
    for (i, s) in samples.iter().enumerate() {
        let label = s.cluster_of[s.origin()];
        table.row([
            i.to_string(),
            s.seed.to_string(),
            fmt_f(s.open_fraction()),
            s.cluster_sizes.len().to_string(),
            s.cluster_sizes[0].to_string(),
            label.to_string(),
            s.cluster_sizes[label as usize].to_string(),
        ]);
    }
    run.graph.insert("kind".into(), json!("percolation-box"));
    run.graph.insert("n".into(), json!(n));
    run.graph.insert("p".into(), json!(p));
    run.notes.push("sample i uses seed masterSeed + i; labels sort clusters by size, then smallest vertex id".into());
    run.emit("percolation.csv", table.finish());
    run.emit("sample.txt", samples[0].to_text().into_bytes());
    Ok(())
}

/// Computes every artifact of `cfg` in memory.
pub fn compute(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    cfg.validate()?;
    let mut run = Run {
        cfg,
        files: Vec::new(),
        truncation: BTreeMap::new(),
        graph: BTreeMap::new(),
        bands: None,
        notes: Vec::new(),
    };
    match cfg.command {
        Command::Build => build(&mut run)?,
        Command::Resistance => resistance(&mut run)?,
        Command::Kernel => kernel(&mut run)?,
        Command::Walk => walk(&mut run)?,
        Command::Collide => collide(&mut run)?,
        Command::Percolation => percolation(&mut run)?,
        Command::Experiment => experiment(&mut run)?,
    }
    let rng = match cfg.command {
        Command::Collide | Command::Experiment => {
            "ChaCha8Rng::seed_from_u64(masterSeed) with stream 2i for walker X and 2i+1 for walker Y of trial i"
        }
        Command::Percolation => "ChaCha8Rng::seed_from_u64(seed), the i-th output drives bond i",
        _ => "ChaCha8Rng::seed_from_u64(masterSeed) with stream i for trial i",
    };
    let manifest = Manifest {
        tool: "combwalk",
        version: env!("CARGO_PKG_VERSION"),
        command: cfg.command.as_str(),
        config_sha256: sha256_hex(cfg.to_json().as_bytes()),
        config: cfg.clone(),
        master_seed: cfg.master_seed,
        rng,
        log_base: "natural",
        normalization: (cfg.command == Command::Kernel).then(|| cfg.normalization().as_str()),
        truncation_radii: run.truncation,
        graph: run.graph,
        bands: run.bands,
        files: run.files.iter().map(|(name, b)| FileEntry { name: name.clone(), sha256: sha256_hex(b) }).collect(),
        notes: run.notes,
    };
    Ok(Artifacts { files: run.files, manifest })
}

/// Writes the artifacts and `manifest.json` into `out`. On failure nothing
/// written by this call is left behind.
pub fn write(out: &Path, artifacts: &Artifacts) -> Result<Vec<PathBuf>, CliError> {
    let created_dir = !out.exists();
    let mut written = Vec::new();
    let result = (|| -> std::io::Result<()> {
        fs::create_dir_all(out)?;
        let manifest = serde_json::to_vec_pretty(&artifacts.manifest).expect("manifest serializes");
        for (name, bytes) in artifacts.files.iter().map(|(n, b)| (n.as_str(), b)).chain([("manifest.json", &manifest)]) {
            let path = out.join(name);
            written.push(path.clone());
            fs::write(&path, bytes)?;
        }
        Ok(())
    })();
    match result {
        Ok(()) => Ok(written),
        Err(e) => {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            if created_dir {
                let _ = fs::remove_dir(out);
            }
            Err(runtime(format!("writing {}: {e}", out.display())))
        }
    }
}

/// Validates, computes and writes one run.
pub fn execute(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let artifacts = compute(cfg)?;
    write(out, &artifacts)
}
