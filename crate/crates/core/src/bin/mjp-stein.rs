//! Command-line driver for the experiment tables.
//!
//! Every subcommand reads an experiment config (TOML, see
//! `mjp_stein::experiments::config`), writes `<subcommand>.csv` or
//! `<subcommand>.json` into `--out`, and prints a one-line-per-claim
//! summary. Exit status: 0 when every verdict row passes, 2 when any row
//! fails or is flagged, 1 on an execution error. Diagnostics go to stderr
//! under `RUST_LOG`.
//!
//! CSV columns for every table: `kind,n,metric,value,lo,hi,slope,r2,rmse,verdict`.
//! `equilibrium` and `stein` also write per-state files with columns
//! `x0..x{d-1}` followed by `probability` or `h`, plus a chain metadata JSON.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use mjp_stein::engine::export::{write_state_values, ChainMetadata};
use mjp_stein::engine::solve::stationarity_residual;
use mjp_stein::engine::{solve_stein, stationary_distribution, TruncatedChain};
use mjp_stein::experiments::bounds::{crossing_offset, random_half_spaces, run_bounds};
use mjp_stein::experiments::config::{ExperimentConfig, ExperimentKind};
use mjp_stein::experiments::constants::report_constants;
use mjp_stein::experiments::dynamics::{run_coupling_study, run_simulation_check};
use mjp_stein::experiments::studies::{run_bivariate_application, run_scaling_study};
use mjp_stein::experiments::table::{Band, Provenance, ResultTable};
use mjp_stein::model::operators::TruncatedModel;

#[derive(Parser)]
#[command(
    name = "mjp-stein",
    version,
    about = "Exact and simulated experiments on truncated jump processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config; built-in defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Constants ledger and assumption verdicts.
    Constants,
    /// Exact equilibrium of the truncated chain.
    Equilibrium,
    /// Stein solution for a random half-space target.
    Stein,
    /// Exact TV decay against the coupling-time survival function.
    Couple,
    /// Simulated transient law against the exact semigroup.
    Simulate,
    /// The bivariate immigration–death application.
    Bivariate,
    /// TV scaling between two processes sharing their geometry.
    Scaling,
    /// Drift, concentration and Stein-difference checks over the grid.
    Bounds,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Command::Constants => ExperimentKind::Constants,
            Command::Equilibrium => ExperimentKind::Equilibrium,
            Command::Stein => ExperimentKind::Stein,
            Command::Couple => ExperimentKind::Couple,
            Command::Simulate => ExperimentKind::Simulate,
            Command::Bivariate => ExperimentKind::Bivariate,
            Command::Scaling => ExperimentKind::Scaling,
            Command::Bounds => ExperimentKind::Bounds,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Equilibrium => "equilibrium",
            Command::Stein => "stein",
            Command::Couple => "couple",
            Command::Simulate => "simulate",
            Command::Bivariate => "bivariate",
            Command::Scaling => "scaling",
            Command::Bounds => "bounds",
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    cfg.expect_kind(cli.command.kind())?;
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
    }
    Ok(cfg)
}

/// Single-scale model and chain.
fn point_model(cfg: &ExperimentConfig) -> Result<(TruncatedModel, TruncatedChain)> {
    let spec = cfg.process_spec(cfg.point_n())?;
    let delta = cfg.resolve_delta(&spec)?;
    let geom = spec.geometry()?;
    let model = TruncatedModel::new(spec, geom, delta)?;
    let chain = model.chain()?;
    Ok((model, chain))
}

fn closest_to_center(model: &TruncatedModel, chain: &TruncatedChain) -> Vec<i64> {
    let i = (0..chain.len())
        .min_by(|&a, &b| {
            model
                .h0(chain.state(a))
                .total_cmp(&model.h0(chain.state(b)))
        })
        .unwrap_or(0);
    chain.state(i).to_vec()
}

fn farthest_from_center(model: &TruncatedModel, chain: &TruncatedChain) -> Vec<i64> {
    let i = (0..chain.len())
        .max_by(|&a, &b| {
            model
                .h0(chain.state(a))
                .total_cmp(&model.h0(chain.state(b)))
        })
        .unwrap_or(0);
    chain.state(i).to_vec()
}

fn write_metadata(path: &Path, meta: &ChainMetadata) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

fn equilibrium(cfg: &ExperimentConfig, out: &Path) -> Result<ResultTable> {
    let (model, chain) = point_model(cfg)?;
    let pi = stationary_distribution(&chain)?;
    let residual = stationarity_residual(&chain, &pi.probs);
    let mut meta = ChainMetadata::of(&chain);
    meta.stationary_residual = Some(residual);
    write_state_values(
        BufWriter::new(File::create(out.join("equilibrium_states.csv"))?),
        &pi.states,
        &pi.probs,
        "probability",
    )?;
    write_metadata(&out.join("equilibrium_chain.json"), &meta)?;

    // A single-state chain has rate zero; residuals are then compared in absolute terms.
    let scale = meta.uniformization_rate.max(1.0);
    let n = Some(model.n());
    let mut t = ResultTable::new("equilibrium", Provenance::new(cfg, cfg.experiment.seed)?);
    t.info(n, "delta", model.delta);
    t.info(n, "states", chain.len() as f64);
    t.check(
        n,
        "row sum residual",
        meta.row_sum_residual,
        Band::at_most(1e-12 * scale),
    );
    t.check(
        n,
        "stationarity residual / uniformization rate",
        residual / scale,
        Band::at_most(1e-12),
    );
    t.check(
        n,
        "total mass minus one",
        (pi.probs.iter().sum::<f64>() - 1.0).abs(),
        Band::at_most(1e-12),
    );
    Ok(t)
}

fn stein(cfg: &ExperimentConfig, out: &Path) -> Result<ResultTable> {
    let (model, chain) = point_model(cfg)?;
    let pi = stationary_distribution(&chain)?;
    let set = random_half_spaces(
        model.dim(),
        1,
        cfg.experiment.seed,
        crossing_offset(model.n(), model.delta),
    )
    .pop()
    .context("no target set")?;
    let target = set.members(&model, &chain);
    let sol = solve_stein(&chain, &pi, &target)?;
    let mut meta = ChainMetadata::of(&chain);
    meta.stein_residual = Some(sol.residual);
    write_state_values(
        BufWriter::new(File::create(out.join("stein_states.csv"))?),
        chain.states(),
        &sol.values,
        "h",
    )?;
    write_metadata(&out.join("stein_chain.json"), &meta)?;

    let n = Some(model.n());
    let mut t = ResultTable::new("stein", Provenance::new(&(cfg, &set), cfg.experiment.seed)?);
    t.info(n, "states", chain.len() as f64);
    t.info(n, "pi(B)", sol.pi_b);
    t.info(
        n,
        "sup |h|",
        sol.values.iter().fold(0.0, |m, v| m.max(v.abs())),
    );
    t.check(
        n,
        "Stein residual",
        sol.residual,
        Band::at_most(mjp_stein::engine::solve::STEIN_TOL),
    );
    let centring: f64 = sol.values.iter().zip(&pi.probs).map(|(h, p)| h * p).sum();
    t.check(n, "|pi h|", centring.abs(), Band::at_most(1e-12));
    Ok(t)
}

fn couple(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let (model, chain) = point_model(cfg)?;
    let sim = cfg.simulation();
    let x1 = sim
        .x0
        .clone()
        .unwrap_or_else(|| closest_to_center(&model, &chain));
    let x2 = sim
        .x1
        .clone()
        .unwrap_or_else(|| farthest_from_center(&model, &chain));
    let times = sim.times.clone().unwrap_or_else(|| {
        let horizon = sim.horizon.unwrap_or(5.0 / model.geom.alpha1);
        (0..=20).map(|k| horizon * k as f64 / 20.0).collect()
    });
    let seed = sim.seed.unwrap_or(cfg.experiment.seed);
    let mut t = run_coupling_study(&model, &chain, &x1, &x2, &times, sim.reps, seed)?;
    t.provenance = Provenance::new(cfg, seed)?;
    Ok(t)
}

fn simulate(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let (model, chain) = point_model(cfg)?;
    let sim = cfg.simulation();
    let x0 = sim
        .x0
        .clone()
        .unwrap_or_else(|| farthest_from_center(&model, &chain));
    let time = sim.horizon.unwrap_or(1.0 / model.geom.alpha1);
    let seed = sim.seed.unwrap_or(cfg.experiment.seed);
    let mut t = run_simulation_check(&model, &chain, &x0, time, sim.reps, seed)?;
    t.provenance = Provenance::new(cfg, seed)?;
    Ok(t)
}

fn run(cli: &Cli) -> Result<ResultTable> {
    let cfg = load_config(cli)?;
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let table = match cli.command {
        Command::Constants => {
            let mut t = report_constants(&cfg.process_spec(cfg.point_n())?, cfg.experiment.seed)?;
            t.provenance = Provenance::new(&cfg, cfg.experiment.seed)?;
            t
        }
        Command::Equilibrium => equilibrium(&cfg, &cli.out)?,
        Command::Stein => stein(&cfg, &cli.out)?,
        Command::Couple => couple(&cfg)?,
        Command::Simulate => simulate(&cfg)?,
        Command::Bivariate => run_bivariate_application(&cfg)?,
        Command::Scaling => run_scaling_study(&cfg)?,
        Command::Bounds => run_bounds(&cfg)?,
    };
    let name = cli.command.name();
    match cli.format {
        Format::Csv => table.write_csv(BufWriter::new(File::create(
            cli.out.join(format!("{name}.csv")),
        )?))?,
        Format::Json => fs::write(cli.out.join(format!("{name}.json")), table.to_json()?)?,
    }
    Ok(table)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(table) => {
            print!("{}", table.summary());
            if table.all_pass() {
                ExitCode::SUCCESS
            } else {
                for f in table.failures() {
                    eprintln!("failed: {f}");
                }
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
