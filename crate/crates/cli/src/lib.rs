//! Experiment commands behind the `pcnsim` binary.
//!
//! Every command reads a [`SimConfig`], writes its outputs into a directory
//! and finishes with a `manifest.txt` of `key=value` lines (command, seed,
//! config hash, versions and the files written). Outputs depend only on the
//! effective config, so repeating a command gives byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use pcnsim::congestion::SchedulingPolicy;
use pcnsim::placement::{
    balance_cost, greedy_solution, management_cost, milp::MilpModel, solve_exact, synchronization_cost,
    PlacementProblem, PlacementSolution,
};
use pcnsim::routing::PathKind;
use pcnsim::sim::{run, summary_text, write_records, write_traces, Preset, RoutingScheme, SimConfig, SimReport};
use pcnsim::{build_network, Network};

const PLACEMENT_STREAM: u64 = 2;

/// Reads the config file (defaults when absent), then applies `--set`
/// overrides and the seed.
pub fn load_config(path: Option<&Path>, seed: Option<u64>, sets: &[String]) -> Result<SimConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => String::new(),
    };
    let mut all = sets.to_vec();
    if let Some(s) = seed {
        all.push(format!("seed={s}"));
    }
    Ok(SimConfig::from_toml_with_overrides(&text, &all)?)
}

/// Collects written files for the manifest.
pub struct OutDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(OutDir { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.root.join(name);
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.txt` last.
    pub fn finish(self, command: &str, cfg: &SimConfig, extra: &[(&str, String)]) -> Result<PathBuf> {
        let toml = cfg.to_toml_string();
        let hash = Sha256::digest(toml.as_bytes());
        let mut lines = vec![
            format!("command={command}"),
            format!("seed={}", cfg.seed),
            format!("config_sha256={}", hex(&hash)),
            format!("pcnsim_version={}", env!("CARGO_PKG_VERSION")),
            format!("trace_schema_version={}", pcnsim::sim::TRACE_SCHEMA_VERSION),
        ];
        for (k, v) in extra {
            lines.push(format!("{k}={v}"));
        }
        lines.push(format!("files={}", self.files.join(",")));
        let p = self.root.join("manifest.txt");
        fs::write(&p, lines.join("\n") + "\n")?;
        Ok(p)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads a manifest back into ordered key/value pairs.
pub fn parse_manifest(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .with_context(|| format!("manifest line `{l}` is not key=value"))
        })
        .collect()
}

fn network_for(cfg: &SimConfig) -> Result<Network> {
    match cfg.preset {
        Preset::Deadlock => Ok(pcnsim::sim::prepare(cfg)?.network),
        Preset::None => {
            let net = build_network(&cfg.network)?;
            Ok(if cfg.capacity_scale > 1 { net.scaled(cfg.capacity_scale) } else { net })
        }
    }
}

fn placement_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(PLACEMENT_STREAM);
    rng
}

/// One placement with its cost split.
#[derive(Clone, Debug)]
pub struct PlacementRow {
    pub solver: &'static str,
    pub omega: f64,
    pub hubs: Vec<u32>,
    pub c_m: f64,
    pub c_s: f64,
    pub c_b: f64,
}

fn describe(problem: &PlacementProblem, sol: &PlacementSolution, solver: &'static str) -> Result<PlacementRow> {
    let c_m = management_cost(problem, &sol.assignment)?;
    let c_s = synchronization_cost(problem, &sol.placement, &sol.assignment)?;
    let c_b = balance_cost(problem, &sol.placement, &sol.assignment)?;
    let hubs = sol.placement.placed().map(|n| problem.candidates()[n].0).collect();
    Ok(PlacementRow { solver, omega: problem.omega(), hubs, c_m, c_s, c_b })
}

/// Double greedy always; exact too when the candidate count is within the
/// configured limit.
pub fn place_once(problem: &PlacementProblem, cfg: &SimConfig) -> Result<Vec<(PlacementRow, PlacementSolution)>> {
    let mut out = Vec::new();
    let g = greedy_solution(problem, &mut placement_rng(cfg.seed), cfg.placement.order)?;
    out.push((describe(problem, &g, "double_greedy")?, g));
    if problem.candidate_count() <= cfg.placement.exact_limit {
        let e = solve_exact(problem, cfg.placement.exact_limit)?;
        out.push((describe(problem, &e, "exact")?, e));
    }
    Ok(out)
}

/// Hub count and costs for each ω, both solvers where possible.
pub fn omega_sweep(cfg: &SimConfig, omegas: &[f64]) -> Result<Vec<PlacementRow>> {
    let net = network_for(cfg)?;
    let base = PlacementProblem::from_network(&net, &cfg.placement.cost, cfg.placement.omega)?;
    let rows: Result<Vec<Vec<PlacementRow>>> = omegas
        .par_iter()
        .map(|&w| {
            let p = base.with_omega(w)?;
            Ok(place_once(&p, cfg)?.into_iter().map(|(r, _)| r).collect())
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

fn rows_csv(rows: &[PlacementRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["solver", "omega", "hub_count", "hubs", "c_m", "c_s", "c_b"])?;
    for r in rows {
        let hubs = r.hubs.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(" ");
        w.write_record([
            r.solver.to_string(),
            format!("{}", r.omega),
            r.hubs.len().to_string(),
            hubs,
            format!("{:.9}", r.c_m),
            format!("{:.9}", r.c_s),
            format!("{:.9}", r.c_b),
        ])?;
    }
    Ok(w.into_inner()?)
}

/// `place`: chosen hubs, assignment and costs, plus an ω sweep when asked.
pub fn cmd_place(cfg: &SimConfig, omegas: &[f64], out: &Path) -> Result<PathBuf> {
    let mut dir = OutDir::create(out)?;
    let net = network_for(cfg)?;
    let problem = PlacementProblem::from_network(&net, &cfg.placement.cost, cfg.placement.omega)?;
    let solved = place_once(&problem, cfg)?;
    let mut text = String::new();
    for (row, sol) in &solved {
        text += &format!("[{}]\n", row.solver);
        text += &format!("hubs = {}\n", row.hubs.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(" "));
        text += &format!("c_m = {:.9}\nc_s = {:.9}\nc_b = {:.9}\n", row.c_m, row.c_s, row.c_b);
        for (m, c) in problem.clients().iter().enumerate() {
            text += &format!("assign {} {}\n", c, problem.candidates()[sol.assignment.hub_of(m)]);
        }
    }
    if let [(g, _), (e, _)] = solved.as_slice() {
        text += &format!("greedy_over_exact = {:.9}\n", if e.c_b > 0.0 { g.c_b / e.c_b } else { 1.0 });
    }
    dir.write("placement.txt", text.as_bytes())?;
    if !omegas.is_empty() {
        dir.write("omega_sweep.csv", &rows_csv(&omega_sweep(cfg, omegas)?)?)?;
    }
    dir.finish("place", cfg, &[])
}

fn write_run(dir: &mut OutDir, prefix: &str, r: &SimReport) -> Result<()> {
    dir.write(&format!("{prefix}summary.txt"), summary_text(r).as_bytes())?;
    let mut rec = Vec::new();
    write_records(r, &mut rec)?;
    dir.write(&format!("{prefix}records.csv"), &rec)?;
    if !r.traces.is_empty() {
        let mut tr = Vec::new();
        write_traces(&r.traces, &mut tr)?;
        dir.write(&format!("{prefix}traces.csv"), &tr)?;
    }
    Ok(())
}

/// `simulate`: summary, per-demand records and channel traces.
pub fn cmd_simulate(cfg: &SimConfig, out: &Path) -> Result<(SimReport, PathBuf)> {
    let mut dir = OutDir::create(out)?;
    let r = run(cfg)?;
    dir.write("config.toml", cfg.to_toml_string().as_bytes())?;
    write_run(&mut dir, "", &r)?;
    let m = dir.finish("simulate", cfg, &[])?;
    Ok((r, m))
}

/// `deadlock-demo`: the three-node scenario under the instant baseline and
/// under price-based routing.
pub fn cmd_deadlock_demo(cfg: &SimConfig, out: &Path) -> Result<(SimReport, SimReport, PathBuf)> {
    let mut dir = OutDir::create(out)?;
    let mut base = cfg.clone();
    base.preset = Preset::Deadlock;
    base.routing.scheme = RoutingScheme::Instant;
    let mut price = base.clone();
    price.routing.scheme = RoutingScheme::Price;
    let (rb, rp) = rayon::join(|| run(&base), || run(&price));
    let (rb, rp) = (rb?, rp?);
    write_run(&mut dir, "baseline_", &rb)?;
    write_run(&mut dir, "price_", &rp)?;
    let m = dir.finish("deadlock-demo", &price, &[])?;
    Ok((rb, rp, m))
}

/// `export-milp`: the placement model in LP text.
pub fn cmd_export_milp(cfg: &SimConfig, out: &Path) -> Result<PathBuf> {
    let mut dir = OutDir::create(out)?;
    let net = network_for(cfg)?;
    let problem = PlacementProblem::from_network(&net, &cfg.placement.cost, cfg.placement.omega)?;
    let model = MilpModel::build(&problem);
    dir.write("model.lp", model.to_lp().as_bytes())?;
    dir.finish("export-milp", cfg, &[("variables", model.var_count().to_string())])
}

/// Axes of the routing ablation grid.
#[derive(Clone, Debug)]
pub struct AblationGrid {
    pub path_kinds: Vec<PathKind>,
    pub ks: Vec<usize>,
    pub schedulers: Vec<SchedulingPolicy>,
    pub seeds: Vec<u64>,
}

impl Default for AblationGrid {
    fn default() -> Self {
        AblationGrid {
            path_kinds: vec![PathKind::Edw, PathKind::Eds, PathKind::Ksp],
            ks: vec![1, 3, 5],
            schedulers: vec![SchedulingPolicy::Fifo, SchedulingPolicy::Lifo],
            seeds: vec![1, 2, 3],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub path_kind: PathKind,
    pub k: usize,
    pub scheduler: SchedulingPolicy,
    pub tsr: f64,
    pub normalized_throughput: f64,
}

/// Mean TSR per grid cell over the seeds. Each seed also seeds the topology.
/// Cells run in parallel; rows come back in grid order.
pub fn ablate(cfg: &SimConfig, grid: &AblationGrid) -> Result<Vec<AblationRow>> {
    if grid.path_kinds.is_empty() || grid.ks.is_empty() || grid.schedulers.is_empty() || grid.seeds.is_empty() {
        bail!("ablation grid is empty");
    }
    let mut cells = Vec::new();
    for &pk in &grid.path_kinds {
        for &k in &grid.ks {
            for &s in &grid.schedulers {
                for &seed in &grid.seeds {
                    cells.push((pk, k, s, seed));
                }
            }
        }
    }
    let results: Vec<Result<(f64, f64)>> = cells
        .par_iter()
        .map(|&(pk, k, s, seed)| {
            let mut c = cfg.clone();
            c.routing.path_kind = pk;
            c.routing.k = k;
            c.congestion.scheduler = s;
            c.seed = seed;
            c.network.seed = seed;
            c.trace.enabled = false;
            log::debug!("ablation cell {pk} k={k} {s:?} seed={seed}");
            let r = run(&c)?;
            Ok((r.metrics.tsr, r.metrics.normalized_throughput))
        })
        .collect();
    let n = grid.seeds.len();
    let mut rows = Vec::new();
    for (chunk, res) in cells.chunks(n).zip(results.chunks(n)) {
        let (mut tsr, mut nt) = (0.0, 0.0);
        for r in res {
            let (a, b) = r.as_ref().map_err(|e| anyhow::anyhow!("{e:#}"))?;
            tsr += a;
            nt += b;
        }
        let (pk, k, s, _) = chunk[0];
        rows.push(AblationRow {
            path_kind: pk,
            k,
            scheduler: s,
            tsr: tsr / n as f64,
            normalized_throughput: nt / n as f64,
        });
    }
    Ok(rows)
}

/// `ablate`: one CSV row per grid cell.
pub fn cmd_ablate(cfg: &SimConfig, grid: &AblationGrid, out: &Path) -> Result<(Vec<AblationRow>, PathBuf)> {
    let rows = ablate(cfg, grid)?;
    let mut dir = OutDir::create(out)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["path_kind", "k", "scheduler", "seeds", "tsr", "normalized_throughput"])?;
    let seeds = grid.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
    for r in &rows {
        w.write_record([
            r.path_kind.to_string(),
            r.k.to_string(),
            format!("{:?}", r.scheduler).to_lowercase(),
            seeds.clone(),
            format!("{:.6}", r.tsr),
            format!("{:.6}", r.normalized_throughput),
        ])?;
    }
    dir.write("ablation.csv", &w.into_inner()?)?;
    let m = dir.finish("ablate", cfg, &[("seeds", seeds)])?;
    Ok((rows, m))
}
