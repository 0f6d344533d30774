//! Monte Carlo sweep over population bias, elite bias and asymmetry.
//!
//! # Seeding
//!
//! Every random stream is derived from the master seed with [`mix_seed`]
//! (SplitMix64 finalizer, chained). With [`SeedScheme::Common`] (default) the
//! streams for run `r` depend only on `(master_seed, stream tag, r)`:
//!
//! | stream    | inputs                                   |
//! |-----------|------------------------------------------|
//! | graph     | `master, "graph", r` (`r` dropped with `fixed_graph`) |
//! | parties   | `master, "parties", r`                   |
//! | affect    | `master, "affect", r`                    |
//! | dynamics  | `master, "dynamics", r`                  |
//!
//! so every cell and every asymmetry value sees the same graph, the same
//! stratum shuffles, the same initial affects and the same exposure and
//! cascade draws for a given run index. Comparisons across cells are then
//! paired. [`SeedScheme::PerCell`] additionally mixes in the bit patterns of
//! `p_b`, `p_eb` and `alpha`, giving each cell independent streams.
//!
//! Either way a cell's output is a function of its own parameter values and
//! the master seed only, so cells can run in any order or concurrently.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, DynamicsParams, UpdateRule};
use crate::error::{Error, Result};
use crate::graph::{elite_set, generate_scale_free, DirectedGraph, GraphSpec, DEFAULT_GAMMA};
use crate::metrics::{aggregate_runs, mean_time_to_max, time_to_90, AggregateSeries, RunTimeSeries, TimeToMaxSummary};
use crate::population::{assign_parties, init_affect, AgentState, PopulationSpec};

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `seed`, one SplitMix64 round per part.
pub fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

const TAG_GRAPH: u64 = 0x0067_7261_7068; // "graph"
const TAG_PARTIES: u64 = 0x0070_6172_7469_6573; // "parties"
const TAG_AFFECT: u64 = 0x6166_6665_6374; // "affect"
const TAG_DYNAMICS: u64 = 0x6479_6e61_6d69_6373; // "dynamics"

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedScheme {
    #[default]
    Common,
    PerCell,
}

/// Full parameterization of one cell's runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Graph shape; the seed field is replaced by the derived graph stream.
    pub graph: GraphSpec,
    /// Party composition; the seed field is replaced by the derived stream.
    pub population: PopulationSpec,
    pub dynamics: DynamicsParams<f64>,
    pub t_f: usize,
    pub master_seed: u64,
    /// Reuse one graph for every run instead of drawing a fresh one per run.
    pub fixed_graph: bool,
    pub seeding: SeedScheme,
}

impl SimConfig {
    /// Full-scale defaults: 10,000 agents, 1,000,000 edges, 600 steps.
    pub fn full_defaults() -> Self {
        SimConfig {
            graph: GraphSpec::new(10_000, 1_000_000, 0),
            population: PopulationSpec {
                p_b: 0.5,
                p_eb: 0.5,
                seed: 0,
            },
            dynamics: DynamicsParams::with_alpha(1.0),
            t_f: 600,
            master_seed: 42,
            fixed_graph: false,
            seeding: SeedScheme::Common,
        }
    }

    /// Workstation-sized preset: 2,000 agents, 40,000 edges, 300 steps.
    pub fn desk_defaults() -> Self {
        SimConfig {
            graph: GraphSpec::new(2_000, 40_000, 0),
            t_f: 300,
            ..Self::full_defaults()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_f < 1 {
            return Err(Error::Config("t_f must be at least 1".into()));
        }
        self.graph.validate()?;
        self.population.validate()?;
        self.dynamics.validate()
    }
}

/// Seeds for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    pub graph: u64,
    pub parties: u64,
    pub affect: u64,
    pub dynamics: u64,
}

impl RunSeeds {
    pub fn derive(cfg: &SimConfig, run: usize) -> Self {
        let r = run as u64;
        let cell: Vec<u64> = match cfg.seeding {
            SeedScheme::Common => Vec::new(),
            SeedScheme::PerCell => vec![
                cfg.population.p_b.to_bits(),
                cfg.population.p_eb.to_bits(),
                cfg.dynamics.alpha.to_bits(),
            ],
        };
        let stream = |tag: u64, with_run: bool| {
            let mut parts = vec![tag];
            parts.extend(&cell);
            if with_run {
                parts.push(r);
            }
            mix_seed(cfg.master_seed, &parts)
        };
        RunSeeds {
            graph: stream(TAG_GRAPH, !cfg.fixed_graph),
            parties: stream(TAG_PARTIES, true),
            affect: stream(TAG_AFFECT, true),
            dynamics: stream(TAG_DYNAMICS, true),
        }
    }
}

/// Everything drawn before the first step of one run.
pub struct RunSetup {
    pub graph: DirectedGraph,
    pub elites: Vec<u32>,
    pub parties: Vec<crate::population::Party>,
    pub seeds: RunSeeds,
}

pub fn setup_run(cfg: &SimConfig, run: usize) -> Result<RunSetup> {
    let seeds = RunSeeds::derive(cfg, run);
    let graph = generate_scale_free(&GraphSpec {
        seed: seeds.graph,
        ..cfg.graph
    })?;
    let elites = elite_set(&graph)?;
    let parties = assign_parties(
        &graph,
        &elites,
        &PopulationSpec {
            seed: seeds.parties,
            ..cfg.population
        },
    )?;
    Ok(RunSetup {
        graph,
        elites,
        parties,
        seeds,
    })
}

/// One Monte Carlo replicate: fresh graph, labels and affects, then `t_f`
/// steps of dynamics.
pub fn run_once(cfg: &SimConfig, run: usize) -> Result<RunTimeSeries<f64>> {
    run_once_observed(cfg, run, |_, _| {})
}

/// [`run_once`] with a hook on every recorded agent state.
pub fn run_once_observed<F>(cfg: &SimConfig, run: usize, observe: F) -> Result<RunTimeSeries<f64>>
where
    F: FnMut(usize, &[AgentState<f64>]),
{
    let setup = setup_run(cfg, run)?;
    let initial = init_affect::<f64>(&setup.parties, setup.seeds.affect);
    dynamics::run_observed(
        &setup.graph,
        initial,
        &cfg.dynamics,
        cfg.t_f,
        setup.seeds.dynamics,
        observe,
    )
}

/// Position of a cell in the 3x3 layout: rows follow elite bias, columns
/// population bias, numbered row-major from 1.
pub fn configuration_id(p_eb_index: usize, p_b_index: usize, p_b_count: usize) -> usize {
    p_eb_index * p_b_count + p_b_index + 1
}

/// Bias levels of the standard 3x3 layout.
pub const STANDARD_BIASES: [f64; 3] = [0.25, 0.5, 0.75];

/// Id of `(p_b, p_eb)` in the standard layout, if both are standard levels.
pub fn standard_configuration_id(p_b: f64, p_eb: f64) -> Option<usize> {
    let i = STANDARD_BIASES.iter().position(|&b| b == p_b)?;
    let j = STANDARD_BIASES.iter().position(|&b| b == p_eb)?;
    Some(configuration_id(j, i, STANDARD_BIASES.len()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub config_id: usize,
    pub p_b: f64,
    pub p_eb: f64,
    pub alpha: f64,
    pub runs: Vec<RunTimeSeries<f64>>,
    pub aggregate: AggregateSeries<f64>,
    pub tmax: TimeToMaxSummary,
}

fn finish_cell(config_id: usize, cfg: &SimConfig, runs: Vec<RunTimeSeries<f64>>) -> Result<CellResult> {
    let aggregate = aggregate_runs(&runs)?;
    let hits: Vec<_> = runs.iter().map(|r| time_to_90(&r.ap)).collect();
    Ok(CellResult {
        config_id,
        p_b: cfg.population.p_b,
        p_eb: cfg.population.p_eb,
        alpha: cfg.dynamics.alpha,
        runs,
        aggregate,
        tmax: mean_time_to_max(&hits),
    })
}

fn with_cell_context(config_id: usize, cfg: &SimConfig, e: Error) -> Error {
    Error::Cell {
        config_id,
        p_b: cfg.population.p_b,
        p_eb: cfg.population.p_eb,
        alpha: cfg.dynamics.alpha,
        source: Box::new(e),
    }
}

/// Runs `runs` replicates of `base` with the given biases and asymmetry.
pub fn run_cell(
    base: &SimConfig,
    p_b: f64,
    p_eb: f64,
    alpha: f64,
    runs: usize,
    config_id: usize,
) -> Result<CellResult> {
    let cfg = cell_config(base, p_b, p_eb, alpha);
    let attach = |e| with_cell_context(config_id, &cfg, e);
    cfg.validate().map_err(attach)?;
    if runs == 0 {
        return Err(attach(Error::Config("at least one Monte Carlo run is required".into())));
    }
    let series = (0..runs)
        .map(|r| run_once(&cfg, r))
        .collect::<Result<Vec<_>>>()
        .map_err(attach)?;
    finish_cell(config_id, &cfg, series).map_err(attach)
}

/// `base` with the cell's biases and asymmetry filled in.
pub fn cell_config(base: &SimConfig, p_b: f64, p_eb: f64, alpha: f64) -> SimConfig {
    let mut cfg = base.clone();
    cfg.population.p_b = p_b;
    cfg.population.p_eb = p_eb;
    cfg.dynamics.alpha = alpha;
    cfg
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: SimConfig,
    pub p_b_values: Vec<f64>,
    pub p_eb_values: Vec<f64>,
    pub alpha_values: Vec<f64>,
    /// Monte Carlo replicates per cell.
    pub runs: usize,
}

impl SweepConfig {
    pub fn with_base(base: SimConfig, runs: usize) -> Self {
        SweepConfig {
            base,
            p_b_values: vec![0.25, 0.5, 0.75],
            p_eb_values: vec![0.25, 0.5, 0.75],
            alpha_values: vec![1.0, 5.0, 10.0],
            runs,
        }
    }

    /// 9 configurations x 3 asymmetries x 10 runs at full scale.
    pub fn full_defaults() -> Self {
        Self::with_base(SimConfig::full_defaults(), 10)
    }

    /// Same grid at workstation scale with 5 runs per cell.
    pub fn desk_defaults() -> Self {
        Self::with_base(SimConfig::desk_defaults(), 5)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, list) in [
            ("p_b_values", &self.p_b_values),
            ("p_eb_values", &self.p_eb_values),
            ("alpha_values", &self.alpha_values),
        ] {
            if list.is_empty() {
                return Err(Error::Config(format!("{name} must not be empty")));
            }
        }
        if self.runs < 1 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        for cell in self.cells() {
            cell_config(&self.base, cell.p_b, cell.p_eb, cell.alpha).validate()?;
        }
        Ok(())
    }

    /// Cells in output order: configuration id, then asymmetry.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for (i, &p_eb) in self.p_eb_values.iter().enumerate() {
            for (j, &p_b) in self.p_b_values.iter().enumerate() {
                for &alpha in &self.alpha_values {
                    out.push(CellKey {
                        config_id: configuration_id(i, j, self.p_b_values.len()),
                        p_b,
                        p_eb,
                        alpha,
                    });
                }
            }
        }
        out
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SweepFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = file.into_config();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&SweepFile::from_config(self)).expect("sweep config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellKey {
    pub config_id: usize,
    pub p_b: f64,
    pub p_eb: f64,
    pub alpha: f64,
}

/// On-disk layout of a sweep configuration.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    master_seed: u64,
    t_f: usize,
    runs: usize,
    #[serde(default)]
    fixed_graph: bool,
    #[serde(default)]
    seeding: SeedScheme,
    p_b_values: Vec<f64>,
    p_eb_values: Vec<f64>,
    alpha_values: Vec<f64>,
    graph: GraphTable,
    dynamics: DynamicsTable,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphTable {
    n: usize,
    m: usize,
    #[serde(default = "default_gamma")]
    gamma_in: f64,
    #[serde(default = "default_gamma")]
    gamma_out: f64,
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DynamicsTable {
    p_e: f64,
    p_r: f64,
    p_re: f64,
    #[serde(default)]
    rule: UpdateRule,
}

impl SweepFile {
    fn into_config(self) -> SweepConfig {
        let first = |v: &[f64], fallback: f64| v.first().copied().unwrap_or(fallback);
        let base = SimConfig {
            graph: GraphSpec {
                n: self.graph.n,
                m: self.graph.m,
                gamma_in: self.graph.gamma_in,
                gamma_out: self.graph.gamma_out,
                seed: 0,
            },
            population: PopulationSpec {
                p_b: first(&self.p_b_values, 0.5),
                p_eb: first(&self.p_eb_values, 0.5),
                seed: 0,
            },
            dynamics: DynamicsParams {
                p_e: self.dynamics.p_e,
                p_r: self.dynamics.p_r,
                p_re: self.dynamics.p_re,
                alpha: first(&self.alpha_values, 1.0),
                rule: self.dynamics.rule,
                mirror_slants: false,
            },
            t_f: self.t_f,
            master_seed: self.master_seed,
            fixed_graph: self.fixed_graph,
            seeding: self.seeding,
        };
        SweepConfig {
            base,
            p_b_values: self.p_b_values,
            p_eb_values: self.p_eb_values,
            alpha_values: self.alpha_values,
            runs: self.runs,
        }
    }

    fn from_config(cfg: &SweepConfig) -> Self {
        let b = &cfg.base;
        SweepFile {
            master_seed: b.master_seed,
            t_f: b.t_f,
            runs: cfg.runs,
            fixed_graph: b.fixed_graph,
            seeding: b.seeding,
            p_b_values: cfg.p_b_values.clone(),
            p_eb_values: cfg.p_eb_values.clone(),
            alpha_values: cfg.alpha_values.clone(),
            graph: GraphTable {
                n: b.graph.n,
                m: b.graph.m,
                gamma_in: b.graph.gamma_in,
                gamma_out: b.graph.gamma_out,
            },
            dynamics: DynamicsTable {
                p_e: b.dynamics.p_e,
                p_r: b.dynamics.p_r,
                p_re: b.dynamics.p_re,
                rule: b.dynamics.rule,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub cells: Vec<CellResult>,
}

impl SweepOutput {
    pub fn cell(&self, config_id: usize, alpha: f64) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.config_id == config_id && c.alpha == alpha)
    }
}

/// Runs every cell of the grid on a worker pool of `threads` workers
/// (`0` picks the rayon default). Results do not depend on `threads`.
pub fn run_sweep(sweep: &SweepConfig, threads: usize) -> Result<SweepOutput> {
    run_sweep_observed(sweep, threads, |_, _, _, _| {})
}

/// [`run_sweep`] calling `observe(cell, run, t, agents)` on every recorded
/// state of every replicate. The hook runs on worker threads.
pub fn run_sweep_observed<F>(sweep: &SweepConfig, threads: usize, observe: F) -> Result<SweepOutput>
where
    F: Fn(&CellKey, usize, usize, &[AgentState<f64>]) + Sync,
{
    sweep.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let cells = sweep.cells();
    let units: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..sweep.runs).map(move |r| (c, r)))
        .collect();
    let configs: Vec<SimConfig> = cells
        .iter()
        .map(|k| cell_config(&sweep.base, k.p_b, k.p_eb, k.alpha))
        .collect();

    let results: Vec<Result<RunTimeSeries<f64>>> = pool.install(|| {
        units
            .par_iter()
            .map(|&(c, r)| {
                run_once_observed(&configs[c], r, |t, agents| observe(&cells[c], r, t, agents))
                    .map_err(|e| with_cell_context(cells[c].config_id, &configs[c], e))
            })
            .collect()
    });

    let mut results = results.into_iter();
    let mut out = Vec::with_capacity(cells.len());
    for (key, cfg) in cells.iter().zip(&configs) {
        let runs = results.by_ref().take(sweep.runs).collect::<Result<Vec<_>>>()?;
        out.push(finish_cell(key.config_id, cfg, runs).map_err(|e| with_cell_context(key.config_id, cfg, e))?);
    }
    Ok(SweepOutput { cells: out })
}

pub const TIMESERIES_HEADER: [&str; 9] = [
    "config_id",
    "p_b",
    "p_eb",
    "alpha",
    "run",
    "t",
    "ap",
    "ipa_mean",
    "opa_mean",
];
pub const AGGREGATE_HEADER: [&str; 11] = [
    "config_id",
    "p_b",
    "p_eb",
    "alpha",
    "t",
    "ap_mean",
    "ap_sd",
    "ipa_mean",
    "ipa_sd",
    "opa_mean",
    "opa_sd",
];
pub const TMAX_HEADER: [&str; 8] = [
    "config_id",
    "p_b",
    "p_eb",
    "alpha",
    "t_max_mean",
    "t_max_sd",
    "n_reached",
    "M",
];
pub const NOT_REACHED: &str = "NOT_REACHED";

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Shortest representation that parses back to the same `f64`.
fn num(x: f64) -> String {
    x.to_string()
}

pub fn write_timeseries<W: Write>(cells: &[CellResult], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(TIMESERIES_HEADER)?;
    for c in cells {
        let key = [c.config_id.to_string(), num(c.p_b), num(c.p_eb), num(c.alpha)];
        for (r, series) in c.runs.iter().enumerate() {
            for t in 0..series.len() {
                let s = series.at(t);
                out.write_record(key.iter().cloned().chain([
                    r.to_string(),
                    t.to_string(),
                    num(s.ap),
                    num(s.ipa_mean),
                    num(s.opa_mean),
                ]))?;
            }
        }
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_aggregate<W: Write>(cells: &[CellResult], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(AGGREGATE_HEADER)?;
    for c in cells {
        let a = &c.aggregate;
        for t in 0..a.len() {
            out.write_record([
                c.config_id.to_string(),
                num(c.p_b),
                num(c.p_eb),
                num(c.alpha),
                t.to_string(),
                num(a.ap[t].mean),
                num(a.ap[t].sd),
                num(a.ipa[t].mean),
                num(a.ipa[t].sd),
                num(a.opa[t].mean),
                num(a.opa[t].sd),
            ])?;
        }
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn write_tmax<W: Write>(cells: &[CellResult], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(TMAX_HEADER)?;
    for c in cells {
        let (mean, sd) = match c.tmax.stats {
            Some(s) => (num(s.mean), num(s.sd)),
            None => (NOT_REACHED.to_string(), NOT_REACHED.to_string()),
        };
        out.write_record([
            c.config_id.to_string(),
            num(c.p_b),
            num(c.p_eb),
            num(c.alpha),
            mean,
            sd,
            c.tmax.n_reached.to_string(),
            c.tmax.runs.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Paths of the three sweep artifacts inside `dir`.
pub fn output_paths(dir: &Path) -> [PathBuf; 3] {
    [
        dir.join("timeseries.csv"),
        dir.join("aggregate.csv"),
        dir.join("tmax.csv"),
    ]
}

/// Writes `timeseries.csv`, `aggregate.csv` and `tmax.csv` into `dir`,
/// creating it if needed.
pub fn write_outputs(cells: &[CellResult], dir: &Path) -> Result<[PathBuf; 3]> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = output_paths(dir);
    let open = |p: &Path| fs::File::create(p).map_err(|e| Error::io(p, e));
    write_timeseries(cells, open(&paths[0])?)?;
    write_aggregate(cells, open(&paths[1])?)?;
    write_tmax(cells, open(&paths[2])?)?;
    Ok(paths)
}
