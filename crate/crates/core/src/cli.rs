//! Command-line front end. Every subcommand is a thin adapter over the
//! library.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dynamics::{DynamicsParams, UpdateRule};
use crate::error::{Error, Result};
use crate::experiment::{self, SeedScheme, SimConfig, SweepConfig};
use crate::graph::{generate_scale_free, GraphSpec, DEFAULT_GAMMA};
use crate::population::PopulationSpec;
use crate::survey;

#[derive(Debug, Parser)]
#[command(
    name = "polarsim",
    version,
    about = "Affective polarization on partisan news cascades"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a directed scale-free graph and write it as an edge list.
    GenerateGraph(GenerateGraphArgs),
    /// Run the Monte Carlo replicates of a single cell.
    Simulate(SimulateArgs),
    /// Run a full sweep described by a TOML config file.
    Sweep(SweepArgs),
    /// Aggregate a respondent-level media survey per outlet.
    SurveyStats(SurveyArgs),
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Number of agents.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// Number of directed edges.
    #[arg(long, default_value_t = 1_000_000)]
    pub m: usize,
    /// Power-law exponent of the in-degree distribution.
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma_in: f64,
    /// Power-law exponent of the out-degree distribution.
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma_out: f64,
}

#[derive(Debug, Args)]
pub struct GenerateGraphArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output edge-list path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Selective,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeedingArg {
    Common,
    PerCell,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Share of Right-leaning agents among non-elites.
    #[arg(long, default_value_t = 0.5, value_parser = parse_probability)]
    pub p_b: f64,
    /// Share of Right-leaning agents among elites.
    #[arg(long, default_value_t = 0.5, value_parser = parse_probability)]
    pub p_eb: f64,
    /// Affective asymmetry (>= 1).
    #[arg(long, default_value_t = 1.0, value_parser = parse_alpha)]
    pub alpha: f64,
    /// News exposure rate.
    #[arg(long, default_value_t = 0.01, value_parser = parse_probability)]
    pub p_e: f64,
    /// Retweet rate for slant-matched content.
    #[arg(long, default_value_t = 1.0, value_parser = parse_probability)]
    pub p_r: f64,
    /// Retweet exposure rate per out-edge.
    #[arg(long, default_value_t = 0.5, value_parser = parse_probability)]
    pub p_re: f64,
    /// Total simulation time.
    #[arg(long, default_value_t = 600)]
    pub t_f: usize,
    /// Monte Carlo replicates.
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Master seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = RuleArg::Selective)]
    pub rule: RuleArg,
    #[arg(long, value_enum, default_value_t = SeedingArg::Common)]
    pub seeding: SeedingArg,
    /// Reuse one graph for all replicates.
    #[arg(long)]
    pub fixed_graph: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Per-step time series CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional cross-run aggregate CSV.
    #[arg(long)]
    pub aggregate: Option<PathBuf>,
    /// Optional time-to-max CSV.
    #[arg(long)]
    pub tmax: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for timeseries.csv, aggregate.csv and tmax.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct SurveyArgs {
    /// Respondent-level CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Outlet-level output CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Trust answers at or above this value count as trusting.
    #[arg(long, default_value_t = survey::DEFAULT_TRUST_THRESHOLD, value_parser = clap::value_parser!(u8).range(1..=5))]
    pub trust_threshold: u8,
}

fn parse_probability(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not a probability in [0, 1]"))
    }
}

fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v.is_finite() && v >= 1.0 {
        Ok(v)
    } else {
        Err(format!("alpha must be >= 1, got {v}"))
    }
}

impl GraphArgs {
    fn spec(&self, seed: u64) -> GraphSpec {
        GraphSpec {
            n: self.n,
            m: self.m,
            gamma_in: self.gamma_in,
            gamma_out: self.gamma_out,
            seed,
        }
    }
}

fn create_parent(path: &std::path::Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

fn create_file(path: &std::path::Path) -> Result<std::fs::File> {
    create_parent(path)?;
    std::fs::File::create(path).map_err(|e| Error::io(path, e))
}

pub fn cmd_generate_graph(args: &GenerateGraphArgs) -> Result<String> {
    let g = generate_scale_free(&args.graph.spec(args.seed))?;
    create_parent(&args.out)?;
    g.save(&args.out)?;
    Ok(format!(
        "wrote {} vertices, {} edges to {}",
        g.n(),
        g.edge_count(),
        args.out.display()
    ))
}

pub fn simulate_config(args: &SimulateArgs) -> SweepConfig {
    let base = SimConfig {
        graph: args.graph.spec(0),
        population: PopulationSpec {
            p_b: args.p_b,
            p_eb: args.p_eb,
            seed: 0,
        },
        dynamics: DynamicsParams {
            p_e: args.p_e,
            p_r: args.p_r,
            p_re: args.p_re,
            alpha: args.alpha,
            rule: match args.rule {
                RuleArg::Selective => UpdateRule::Selective,
                RuleArg::Joint => UpdateRule::Joint,
            },
            mirror_slants: false,
        },
        t_f: args.t_f,
        master_seed: args.seed,
        fixed_graph: args.fixed_graph,
        seeding: match args.seeding {
            SeedingArg::Common => SeedScheme::Common,
            SeedingArg::PerCell => SeedScheme::PerCell,
        },
    };
    SweepConfig {
        base,
        p_b_values: vec![args.p_b],
        p_eb_values: vec![args.p_eb],
        alpha_values: vec![args.alpha],
        runs: args.runs,
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String> {
    let sweep = simulate_config(args);
    let mut out = experiment::run_sweep(&sweep, args.threads)?;
    let id = experiment::standard_configuration_id(args.p_b, args.p_eb).unwrap_or(0);
    for c in &mut out.cells {
        c.config_id = id;
    }
    experiment::write_timeseries(&out.cells, create_file(&args.out)?)?;
    if let Some(p) = &args.aggregate {
        experiment::write_aggregate(&out.cells, create_file(p)?)?;
    }
    if let Some(p) = &args.tmax {
        experiment::write_tmax(&out.cells, create_file(p)?)?;
    }
    Ok(format!("wrote {} runs to {}", args.runs, args.out.display()))
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<String> {
    let sweep = SweepConfig::load(&args.config)?;
    let out = experiment::run_sweep(&sweep, args.threads)?;
    let paths = experiment::write_outputs(&out.cells, &args.out_dir)?;
    Ok(format!(
        "{} cells x {} runs -> {}",
        out.cells.len(),
        sweep.runs,
        paths
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(", ")
    ))
}

pub fn cmd_survey_stats(args: &SurveyArgs) -> Result<String> {
    create_parent(&args.out)?;
    let rows = survey::aggregate_survey(&args.input, &args.out, args.trust_threshold)?;
    Ok(format!("wrote {} outlets to {}", rows.len(), args.out.display()))
}

pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::GenerateGraph(a) => cmd_generate_graph(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::SurveyStats(a) => cmd_survey_stats(a),
    }
}
