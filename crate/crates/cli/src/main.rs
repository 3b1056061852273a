use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use evoflight::fixtures::{fixture_by_name, fixture_registry, price_of_anarchy_e1};
use evoflight::sim::{
    convergence_study, run_replicas, simulate_bpi_stream, BpiConfig, BpiMethod, CompareOptions,
    InitialState, SimConfig,
};
use evoflight::valley::{crossing_rates, simulate_ctmc};
use evoflight::{
    asymptotics, run_limit, run_limit_with, EventLog, InitialCondition, LimitOptions, ModelConfig,
    TerminationReason, TraitGraphModel,
};

const EXIT_VALIDATION: u8 = 2;
const EXIT_IMMEDIATE: u8 = 3;
const EXIT_TRUNCATED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "evoflight",
    version,
    about = "Limit engine, simulator and valley rates for trait-graph evolution"
)]
struct Cli {
    /// Model configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for replicas.
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Trajectory file format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Piecewise-affine exponent limit: events.json and beta.csv.
    Limit {
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        /// Also sample the exponents on this grid.
        #[arg(long)]
        grid_dt: Option<f64>,
        /// Event budget; accelerating cycles can pack infinitely many invasions before the horizon.
        #[arg(long, default_value_t = 100_000)]
        max_events: usize,
    },
    /// Stochastic replicas: one trajectory file per seed plus summary.json.
    Simulate {
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 1)]
        seeds: usize,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0.01)]
        grid_dt: f64,
        #[arg(long)]
        max_events: Option<u64>,
    },
    /// Sup-norm distance between replicas and the limit over a K ladder.
    Compare {
        #[arg(long, value_delimiter = ',', required = true)]
        k_list: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 2.0)]
        horizon: f64,
        /// Compare on t <= t_max only.
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        grid_dt: f64,
        /// Event log of an earlier `limit` run; refused unless it matches the config.
        #[arg(long)]
        limit_log: Option<PathBuf>,
    },
    /// Effective valley-crossing rates and an optional reduced chain path.
    Valley {
        /// Simulate the reduced chain up to this time.
        #[arg(long)]
        ctmc_horizon: Option<f64>,
    },
    /// Branching process with immigration against its exponent formula.
    BpiCheck {
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 2.0)]
        d: f64,
        #[arg(long, default_value_t = 0.5)]
        a: f64,
        #[arg(long, default_value_t = 0.4)]
        c: f64,
        #[arg(long, default_value_t = 0.2)]
        beta0: f64,
        #[arg(long, default_value_t = 1e6)]
        k: f64,
        #[arg(long, default_value_t = 50)]
        replicas: u64,
        #[arg(long, default_value_t = 2.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0.05)]
        from: f64,
        #[arg(long, default_value_t = 0.1)]
        tol: f64,
        /// Required share of replicas within `tol` everywhere.
        #[arg(long, default_value_t = 0.9)]
        share: f64,
        #[arg(long)]
        thinning: bool,
    },
    /// List the built-in scenarios; `--out` writes their configurations.
    Fixtures {
        /// Write configurations to the output directory.
        #[arg(long)]
        write: bool,
        /// Only this fixture.
        #[arg(long)]
        name: Option<String>,
    },
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<evoflight::Error> for Failure {
    fn from(e: evoflight::Error) -> Self {
        use evoflight::Error as E;
        let code = match e {
            E::Config(_)
            | E::Json { .. }
            | E::SimConfig(_)
            | E::Mismatch(_)
            | E::UnknownTrait(_)
            | E::EmptySet => EXIT_VALIDATION,
            _ => 1,
        };
        Self {
            code,
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

fn validation(msg: String) -> Failure {
    Failure {
        code: EXIT_VALIDATION,
        error: anyhow::anyhow!(msg),
    }
}

type CliResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Limit {
            horizon,
            grid_dt,
            max_events,
        } => cmd_limit(cli, *horizon, *grid_dt, *max_events),
        Command::Simulate {
            k,
            seeds,
            horizon,
            grid_dt,
            max_events,
        } => cmd_simulate(cli, *k, *seeds, *horizon, *grid_dt, *max_events),
        Command::Compare {
            k_list,
            seeds,
            delta,
            horizon,
            t_max,
            grid_dt,
            limit_log,
        } => cmd_compare(
            cli,
            k_list,
            *seeds,
            *delta,
            *horizon,
            *t_max,
            *grid_dt,
            limit_log.as_deref(),
        ),
        Command::Valley { ctmc_horizon } => cmd_valley(cli, *ctmc_horizon),
        Command::BpiCheck {
            b,
            d,
            a,
            c,
            beta0,
            k,
            replicas,
            horizon,
            from,
            tol,
            share,
            thinning,
        } => {
            let mut cfg = BpiConfig::new(*b, *d, *a, *c, *beta0, *k, *horizon, cli.seed);
            cfg.method = if *thinning {
                BpiMethod::Thinning
            } else {
                BpiMethod::Transition
            };
            cmd_bpi(cli, cfg, *replicas, *from, *tol, *share)
        }
        Command::Fixtures { write, name } => cmd_fixtures(cli, *write, name.as_deref()),
    }
}

fn load(cli: &Cli) -> Result<(ModelConfig, TraitGraphModel), Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| validation("--config is required".into()))?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config = ModelConfig::from_json_str(&text)?;
    let model = config.to_model()?;
    Ok((config, model))
}

fn residents(config: &ModelConfig, model: &TraitGraphModel) -> Result<Vec<usize>, Failure> {
    let names = config
        .initial_residents
        .as_ref()
        .ok_or_else(|| validation("configuration has no `initial_residents`".into()))?;
    Ok(model.indices_of(names)?)
}

fn out_dir(cli: &Cli) -> Result<&Path, Failure> {
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    Ok(&cli.out)
}

fn write(path: PathBuf, content: &str) -> Result<(), Failure> {
    fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn threads(cli: &Cli) -> usize {
    cli.parallelism
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn cmd_limit(cli: &Cli, horizon: f64, grid_dt: Option<f64>, max_events: usize) -> CliResult {
    let (config, model) = load(cli)?;
    let v0 = residents(&config, &model)?;
    let opts = LimitOptions {
        max_events,
        ..LimitOptions::with_horizon(horizon)
    };
    let run = run_limit_with(&model, &InitialCondition::Residents(v0), &opts)?;
    let out = out_dir(cli)?;
    write(out.join("events.json"), &pretty(&run.log.to_json()))?;
    match cli.format {
        Format::Csv => write(
            out.join("beta.csv"),
            &run.paths.to_csv(model.names(), grid_dt),
        )?,
        Format::Json => write(out.join("beta.json"), &pretty(&json!(run.paths)))?,
    }
    let term = run.log.termination.as_ref().expect("runs always terminate");
    println!(
        "{} invasion(s); terminated at {} ({})",
        run.log.invasion_times().len(),
        term.time,
        term.reason.label()
    );
    if term.reason == TerminationReason::Initial {
        eprintln!("{}", term.detail);
        return Ok(EXIT_IMMEDIATE);
    }
    if term.time < horizon {
        eprintln!("warning: stopped before the horizon: {}", term.detail);
    }
    Ok(0)
}

fn cmd_simulate(
    cli: &Cli,
    k: f64,
    seeds: usize,
    horizon: f64,
    grid_dt: f64,
    max_events: Option<u64>,
) -> CliResult {
    let (config, model) = load(cli)?;
    let v0 = residents(&config, &model)?;
    let mut cfg = SimConfig::new(k, InitialState::Residents(v0), horizon, cli.seed);
    cfg.grid_dt = grid_dt;
    if let Some(m) = max_events {
        cfg.max_events = m;
    }
    let samples = run_replicas(&model, &cfg, seeds, threads(cli))?;
    let out = out_dir(cli)?;
    for s in &samples {
        match cli.format {
            Format::Csv => write(
                out.join(format!("trajectory_{:03}.csv", s.stream)),
                &s.to_csv(),
            )?,
            Format::Json => write(
                out.join(format!("trajectory_{:03}.json", s.stream)),
                &pretty(&json!(s)),
            )?,
        }
    }
    let truncated = samples.iter().filter(|s| s.truncated).count();
    let summary = json!({
        "k": k,
        "horizon": horizon,
        "grid_dt": grid_dt,
        "alpha": model.alpha(),
        "traits": model.names(),
        "truncated": truncated,
        "replicas": samples.iter().map(|s| s.summary_json()).collect::<Vec<_>>(),
    });
    write(out.join("summary.json"), &pretty(&summary))?;
    println!("{} replica(s), {truncated} truncated", samples.len());
    Ok(if truncated > 0 { EXIT_TRUNCATED } else { 0 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    cli: &Cli,
    k_list: &[f64],
    seeds: usize,
    delta: f64,
    horizon: f64,
    t_max: Option<f64>,
    grid_dt: f64,
    limit_log: Option<&Path>,
) -> CliResult {
    let (config, model) = load(cli)?;
    let v0 = residents(&config, &model)?;
    if let Some(path) = limit_log {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let summary = EventLog::summary_from_json(&value)?;
        if summary.alpha != model.alpha() || summary.traits != model.names() {
            return Err(evoflight::Error::Mismatch(format!(
                "event log has alpha {} and traits {:?}; configuration has alpha {} and traits {:?}",
                summary.alpha,
                summary.traits,
                model.alpha(),
                model.names()
            ))
            .into());
        }
    }
    let run = run_limit(&model, &v0, horizon)?;
    if run
        .log
        .termination
        .as_ref()
        .is_some_and(|t| t.reason == TerminationReason::Initial)
    {
        eprintln!("limit terminates at t = 0; nothing to compare");
        return Ok(EXIT_IMMEDIATE);
    }
    let sim_horizon = t_max.map_or(run.log.end_time(), |t| t.min(run.log.end_time()));
    let mut base = SimConfig::new(
        k_list[0],
        InitialState::Residents(v0),
        sim_horizon,
        cli.seed,
    );
    base.grid_dt = grid_dt;
    let opts = CompareOptions { delta, t_max };
    let report = convergence_study(&model, &run, &base, k_list, seeds, threads(cli), &opts)?;
    let out = out_dir(cli)?;
    write(out.join("report.json"), &pretty(&json!(report)))?;
    println!(
        "{:>10} {:>14} {:>14} {:>10}",
        "K", "median beta", "median N/K", "truncated"
    );
    for row in &report.rows {
        println!(
            "{:>10} {:>14.5} {:>14.5} {:>10}",
            row.k, row.report.median_beta, row.report.median_density, row.report.truncated
        );
    }
    println!("decreasing: {}", report.decreasing);
    let truncated = report.rows.iter().any(|r| r.report.truncated > 0);
    Ok(if truncated { EXIT_TRUNCATED } else { 0 })
}

fn cmd_valley(cli: &Cli, ctmc_horizon: Option<f64>) -> CliResult {
    let (config, model) = load(cli)?;
    let spec = config
        .valley
        .as_ref()
        .ok_or_else(|| validation("configuration has no `valley` section".into()))?;
    let rates = crossing_rates(&model, spec)?;
    let out = out_dir(cli)?;
    write(out.join("rates.json"), &rates.to_json_pretty())?;
    for r in &rates.rates {
        println!("{} -> {}: {:.6e}", r.from, r.to, r.rate);
        for issue in &r.issues {
            eprintln!("  warning: {issue}");
        }
    }
    if let Some(h) = ctmc_horizon {
        let initial = spec.initial.as_deref().unwrap_or(&spec.states[0]);
        let path = simulate_ctmc(&rates, rates.state_index(initial)?, h, cli.seed)?;
        write(out.join("ctmc.csv"), &path.to_csv(&rates.states))?;
    }
    Ok(if rates.is_valid() { 0 } else { EXIT_VALIDATION })
}

fn cmd_bpi(cli: &Cli, cfg: BpiConfig, replicas: u64, from: f64, tol: f64, share: f64) -> CliResult {
    let mut worst = Vec::new();
    let mut good = 0u64;
    for i in 0..replicas {
        let s = simulate_bpi_stream(&cfg, i)?;
        let gap = s
            .times
            .iter()
            .zip(s.exponents())
            .filter(|(t, _)| **t >= from - 1e-12)
            .map(|(t, e)| {
                (e[0] - asymptotics::bpi_exponent(cfg.b, cfg.d, cfg.a, cfg.c, cfg.beta0, *t)).abs()
            })
            .fold(0.0, f64::max);
        if gap <= tol {
            good += 1;
        }
        worst.push(gap);
    }
    let pass = good as f64 >= share * replicas as f64;
    let report = json!({
        "config": cfg,
        "window": [from, cfg.horizon],
        "tolerance": tol,
        "within": good,
        "replicas": replicas,
        "pass": pass,
        "sup_gaps": worst,
    });
    let out = out_dir(cli)?;
    write(out.join("bpi.json"), &pretty(&report))?;
    println!(
        "{good}/{replicas} replicas within {tol} of the exponent formula: {}",
        if pass { "pass" } else { "fail" }
    );
    Ok(if pass { 0 } else { 1 })
}

fn cmd_fixtures(cli: &Cli, write_out: bool, name: Option<&str>) -> CliResult {
    let list = match name {
        Some(n) => {
            vec![fixture_by_name(n).ok_or_else(|| validation(format!("no fixture named `{n}`")))?]
        }
        None => {
            let mut l = fixture_registry();
            l.push(price_of_anarchy_e1());
            l
        }
    };
    let entries: Vec<Value> = list
        .iter()
        .map(|fx| {
            json!({
                "name": fx.name,
                "summary": fx.summary,
                "status": fx.status,
                "conditions": fx.check_conditions().into_iter()
                    .map(|(label, ok)| json!({"condition": label, "holds": ok}))
                    .collect::<Vec<_>>(),
                "succession": fx.succession,
                "first_invasion": fx.first_invasion.map(|s| json!({
                    "formula": s.label,
                    "value": fx.expected_first_invasion(),
                })),
            })
        })
        .collect();
    match cli.format {
        Format::Json => print!("{}", pretty(&json!(entries))),
        Format::Csv => {
            for fx in &list {
                let status = if fx.is_valid() {
                    "valid".to_string()
                } else {
                    format!("{:?}", fx.status)
                };
                println!("{:<28} {:<8} {}", fx.name, status, fx.summary);
            }
        }
    }
    if write_out {
        let out = out_dir(cli)?;
        for fx in &list {
            write(
                out.join(format!("{}.json", fx.name)),
                &(fx.to_config().to_json_pretty() + "\n"),
            )?;
        }
    }
    Ok(if list.iter().all(|f| f.is_valid()) {
        0
    } else {
        EXIT_VALIDATION
    })
}
