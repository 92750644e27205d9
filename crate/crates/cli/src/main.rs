//! `epidde`: batch front end for the delayed SEIQRD toolkit.
//!
//! Exit status: 0 on success, 1 for configuration or usage errors, 2 when a
//! computation fails numerically (outputs written so far are kept and listed).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use epidde::dde::validation_suite;
use epidde::experiments::{
    bifurcation_sweep, isolation_delay_sweep, isolation_probability_sweep, r0_sweep,
    reference_scans, sensitivity_scan, temperature_sweep, ExperimentError, Grid, R0Axis,
    SensitivityResult, SweepTable,
};
use epidde::model::{simulate_with, BetaKind, Compartment, ModelError};
use epidde::report::{
    format_sig, parse_config_with, stability_json, ConfigError, Plot, ReportError, ResultBundle,
    RunConfig, Series, Table,
};
use epidde::spectral::{
    classify_dfe, classify_endemic, critical_delay, crossing_drift, disease_free_equilibrium,
    endemic_equilibrium, reproduction_number, transversality, NoCriticalDelay,
};

#[derive(Parser)]
#[command(
    name = "epidde",
    version,
    about = "Delayed SEIQRD epidemic model: simulation, stability and parameter studies"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Config file of `key = value` lines, or `defaults`
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<String>,
    /// Output directory (default: $EPIDDE_OUT, then ./out)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Allow parameter values outside their epidemiological range
    #[arg(long, global = true)]
    exploratory: bool,
    /// Worker threads for sweeps and scans
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Override one config key; repeatable
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate the model and write the trajectory
    Simulate,
    /// Basic reproduction number and threshold verdict
    R0,
    /// Disease-free and endemic equilibria
    Equilibria,
    /// Stability classification of both equilibria
    Stability,
    /// Critical isolation delay of the disease-free state
    CriticalDelay,
    /// Oscillation amplitude across isolation delays
    Bifurcation,
    /// Time-averaged compartments across temperatures
    SweepTemperature,
    /// Time-averaged compartments across isolation probability and delay
    SweepIsolation {
        #[arg(long, value_enum, default_value_t = Axis::Both)]
        axis: Axis,
    },
    /// Interval sensitivity scans (the reference set unless one is configured)
    Sensitivity,
    /// Integrator self-checks on y'(t) = -y(t-1)
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::R0 => "r0",
            Command::Equilibria => "equilibria",
            Command::Stability => "stability",
            Command::CriticalDelay => "critical-delay",
            Command::Bifurcation => "bifurcation",
            Command::SweepTemperature => "sweep-temperature",
            Command::SweepIsolation { .. } => "sweep-isolation",
            Command::Sensitivity => "sensitivity",
            Command::Validate => "validate",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Axis {
    P,
    Tau,
    Both,
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidParams(_) => Failure::Config(e.to_string()),
            ModelError::Integration(_) => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Model(m) => m.into(),
            other => Failure::Config(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("error: {m}"),
                Failure::Numerical(m) => eprintln!("numerical failure: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn load(global: &Global) -> Result<RunConfig, Failure> {
    let text = match global.config.as_deref() {
        None | Some("defaults") => String::new(),
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {path}: {e}")))?,
    };
    Ok(parse_config_with(&text, &global.set, global.exploratory)?)
}

fn run(cli: &Cli) -> Outcome {
    let cfg = load(&cli.global)?;
    if let Some(n) = cli.global.jobs {
        if n == 0 {
            return Err(Failure::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    let base = cli
        .global
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .or_else(|| std::env::var_os("EPIDDE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut bundle =
        ResultBundle::create(&base.join(cli.command.name()), cli.command.name(), &cfg)?;
    let outcome = match cli.command {
        Command::Simulate => simulate(&cfg, &mut bundle),
        Command::R0 => r0(&cfg, &mut bundle),
        Command::Equilibria => equilibria(&cfg, &mut bundle),
        Command::Stability => stability(&cfg, &mut bundle),
        Command::CriticalDelay => critical(&cfg, &mut bundle),
        Command::Bifurcation => bifurcation(&cfg, &mut bundle),
        Command::SweepTemperature => sweep_temperature(&cfg, &mut bundle),
        Command::SweepIsolation { axis } => sweep_isolation(&cfg, axis, &mut bundle),
        Command::Sensitivity => sensitivity(&cfg, &mut bundle),
        Command::Validate => validate(&mut bundle),
    };
    let manifest = bundle.finish()?;
    println!("manifest: {}", manifest.display());
    outcome
}

fn fixed_beta(cfg: &RunConfig) -> f64 {
    let b = cfg.beta();
    if b.clamped {
        println!(
            "note: beta({}) = {} clamped to 0",
            cfg.temperature,
            format_sig(b.raw)
        );
    }
    b.value
}

fn r0_value(cfg: &RunConfig, beta: f64) -> Result<f64, Failure> {
    reproduction_number(&cfg.params, beta).map_err(|e| Failure::Numerical(e.to_string()))
}

fn series(table: &Table, x: &str, y: &str, label: &str) -> Series {
    Series::new(
        label,
        &table.column(x).unwrap_or_default(),
        &table.column(y).unwrap_or_default(),
    )
}

fn sweep_outcome(name: &str, table: &SweepTable) -> Outcome {
    let failures: Vec<String> = table
        .failures()
        .map(|(x, why)| format!("{} = {}: {why}", table.meta.swept, format_sig(x)))
        .collect();
    if failures.is_empty() {
        return Ok(());
    }
    for f in &failures {
        eprintln!("{name}: {f}");
    }
    Err(Failure::Numerical(format!(
        "{name}: {} of {} grid points failed (written as NaN)",
        failures.len(),
        table.rows.len()
    )))
}

fn simulate(cfg: &RunConfig, bundle: &mut ResultBundle) -> Outcome {
    let (sim, breakdown) = simulate_with(
        &cfg.params,
        cfg.temperature,
        cfg.horizon,
        cfg.step,
        cfg.init,
        cfg.history,
    )?;
    let every = (1.0 / cfg.step).round().max(1.0) as usize;
    bundle.write_trajectory("trajectory.csv", &sim.trajectory, every)?;
    let table = Table::from_trajectory(&sim.trajectory, every);
    let mut plot = Plot::new("SEIQRD trajectory", "t (days)", "fraction of population");
    let mut infective = Plot::new("Infective compartment", "t (days)", "I");
    for c in Compartment::ALL {
        plot.series.push(series(&table, "t", c.label(), c.label()));
    }
    infective.series.push(series(&table, "t", "I", "I"));
    bundle.write_plot("trajectory.svg", &plot)?;
    bundle.write_plot("infective.svg", &infective)?;

    let beta = sim.beta.value;
    println!(
        "beta = {}  R0 = {}",
        format_sig(beta),
        format_sig(r0_value(cfg, beta)?)
    );
    let last = sim.final_state();
    println!("t = {}", format_sig(sim.trajectory.t_end()));
    for c in Compartment::ALL {
        println!("  {} = {}", c.label(), format_sig(last.get(c)));
    }
    if let Some(err) = breakdown {
        return Err(Failure::Numerical(format!(
            "{err}; trajectory written up to the breakdown"
        )));
    }
    let window = (cfg.horizon * (1.0 - cfg.tail_window), cfg.horizon);
    let avg = sim
        .time_average(Compartment::I, window)
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    println!(
        "mean I over [{}, {}] = {}",
        format_sig(window.0),
        format_sig(window.1),
        format_sig(avg)
    );
    Ok(())
}

fn r0(cfg: &RunConfig, bundle: &mut ResultBundle) -> Outcome {
    let beta = fixed_beta(cfg);
    let r0 = r0_value(cfg, beta)?;
    let verdict = if r0 > 1.0 {
        "R0 > 1: the infection persists and an endemic equilibrium exists"
    } else if r0 < 1.0 {
        "R0 < 1: the infection dies out; no endemic equilibrium"
    } else {
        "R0 = 1: threshold case"
    };
    println!("beta = {}", format_sig(beta));
    println!("R0 = {}", format_sig(r0));
    println!("{verdict}");
    bundle.write_jsonl(
        "r0.jsonl",
        "summary",
        &[json!({ "temperature": cfg.temperature, "beta": beta, "r0": r0, "verdict": verdict })],
    )?;
    if cfg.params.beta.kind() != BetaKind::Fixed {
        let sweep = r0_sweep(
            &cfg.params,
            R0Axis::Temperature,
            cfg.grids.temperature,
            cfg.temperature,
        )?;
        let table = Table::from_sweep(&sweep);
        bundle.write_table("r0_temperature.csv", &table)?;
        let plot = Plot::new("R0 against temperature", "T (°C)", "R0")
            .with(series(&table, "T", "R0", "R0"));
        bundle.write_plot("r0_temperature.svg", &plot)?;
    }
    Ok(())
}

fn state_json(x: epidde::model::StateVector) -> serde_json::Value {
    let a = x.to_array();
    json!({ "S": a[0], "E": a[1], "I": a[2], "Q": a[3], "R": a[4], "D": a[5] })
}

fn equilibria(cfg: &RunConfig, bundle: &mut ResultBundle) -> Outcome {
    let beta = fixed_beta(cfg);
    let r0 = r0_value(cfg, beta)?;
    let dfe = disease_free_equilibrium();
    println!("beta = {}  R0 = {}", format_sig(beta), format_sig(r0));
    println!("disease-free equilibrium: {:?}", dfe.to_array());
    let mut records = vec![json!({ "equilibrium": "DFE", "state": state_json(dfe) })];
    match endemic_equilibrium(&cfg.params, beta) {
        Some(e) => {
            let shown: Vec<String> = e.to_array().iter().map(|v| format_sig(*v)).collect();
            println!("endemic equilibrium: [{}]", shown.join(", "));
            if cfg.params.omega != cfg.params.mu {
                println!("note: the closed form assumes Omega = mu");
            }
            records.push(json!({ "equilibrium": "endemic", "state": state_json(e) }));
        }
        None => {
            println!(
                "endemic equilibrium does not exist (R0 = {} <= 1)",
                format_sig(r0)
            );
            records.push(json!({ "equilibrium": "endemic", "state": null }));
        }
    }
    bundle.write_jsonl("equilibria.jsonl", "summary", &records)?;
    Ok(())
}

fn stability(cfg: &RunConfig, bundle: &mut ResultBundle) -> Outcome {
    let beta = fixed_beta(cfg);
    let mut reports = vec![classify_dfe(&cfg.params, beta)];
    reports.extend(classify_endemic(&cfg.params, beta));
    for r in &reports {
        println!(
            "{}: {} (R0 = {})",
            r.equilibrium.as_str(),
            r.verdict,
            format_sig(r.r0)
        );
        for (name, holds) in &r.conditions {
            println!("  {name}: {holds}");
        }
        if let (Some(w), Some(t)) = (r.omega_star, r.tau_star) {
            println!("  omega* = {}  tau* = {}", format_sig(w), format_sig(t));
        }
        for n in &r.notes {
            println!("  note: {n}");
        }
    }
    if reports.len() == 1 {
        println!("endemic equilibrium does not exist");
    }
    let records: Vec<_> = reports.iter().map(stability_json).collect();
    bundle.write_jsonl("stability.jsonl", "stability", &records)?;
    Ok(())
}

fn critical(cfg: &RunConfig, bundle: &mut ResultBundle) -> Outcome {
    let beta = fixed_beta(cfg);
    match critical_delay(&cfg.params, beta) {
        Ok(c) => {
            let tr = transversality(&cfg.params, beta, c.omega_star, c.tau_star);
            let drift = crossing_drift(&cfg.params, beta, c.omega_star, c.tau_star);
            println!(
                "tau* = {}  omega* = {}",
                format_sig(c.tau_star),
                format_sig(c.omega_star)
            );
            println!("fixed-point iterations: {}", c.iterations);
            println!(
                "transversality: {} (x = {}, y = {}, z = {})",
                tr.holds,
                format_sig(tr.x),
                format_sig(tr.y),
                format_sig(tr.z)
            );
            println!("d Re(lambda)/d tau at the crossing: {}", format_sig(drift));
            bundle.write_jsonl(
                "critical_delay.jsonl",
                "summary",
                &[json!({
                    "beta": beta,
                    "tau_star": c.tau_star,
                    "omega_star": c.omega_star,
                    "iterations": c.iterations,
                    "transversality": tr.holds,
                    "crossing_drift": drift,
                })],
            )?;
            Ok(())
        }
        Err(NoCriticalDelay::NoImaginaryRoot { tau }) => {
            println!(
                "no critical delay: no purely imaginary root (checked at tau = {})",
                format_sig(tau)
            );
            bundle.write_jsonl(
                "critical_delay.jsonl",
                "summary",
                &[json!({ "beta": beta, "tau_star": null })],
            )?;
            Ok(())
        }
        Err(e @ NoCriticalDelay::Diverged { .. }) => Err(Failure::Numerical(e.to_string())),
    }
}

fn bifurcation(cfg: &RunConfig, bundle: &mut ResultBundle) -> Outcome {
    let beta = fixed_beta(cfg);
    let grid = match cfg.grids.bifurcation {
        Some(g) => g,
        None => match critical_delay(&cfg.params, beta) {
            Ok(c) => {
                let t = c.tau_star;
                println!("grid placed around tau* = {}", format_sig(t));
                Grid::new(0.8 * t, 1.2 * t, 0.025 * t)?
            }
            Err(e) => {
                return Err(Failure::Config(format!(
                    "{e}; set grid.bifurcation to choose the delays"
                )));
            }
        },
    };
    let sweep = bifurcation_sweep(&cfg.params, beta, grid, &cfg.bifurcation_options())?;
    let table = Table::from_sweep(&sweep);
    bundle.write_table("bifurcation.csv", &table)?;
    let plot = Plot::new(
        "Late-time range of I against the isolation delay",
        "tau (days)",
        "I",
    )
    .with(series(&table, "tau", "I_min", "min I"))
    .with(series(&table, "tau", "I_max", "max I"));
    bundle.write_plot("bifurcation.svg", &plot)?;
    for row in &table.rows {
        println!(
            "tau = {:<14} amplitude = {}",
            format_sig(row[0]),
            format_sig(row[3])
        );
    }
    sweep_outcome("bifurcation", &sweep)
}

fn sweep_temperature(cfg: &RunConfig, bundle: &mut ResultBundle) -> Outcome {
    let sweep = temperature_sweep(&cfg.params, cfg.grids.temperature, &cfg.sweep_options())?;
    let table = Table::from_sweep(&sweep);
    bundle.write_table("temperature.csv", &table)?;
    let plot = Plot::new("Mean infectives against temperature", "T (°C)", "mean I")
        .with(series(&table, "T", "avg_I", "mean I"));
    bundle.write_plot("temperature.svg", &plot)?;
    for row in &table.rows {
        println!(
            "T = {:<6} beta = {:<14} mean I = {}",
            format_sig(row[0]),
            format_sig(row[1]),
            format_sig(row[4])
        );
    }
    sweep_outcome("sweep-temperature", &sweep)
}

fn sweep_isolation(cfg: &RunConfig, axis: Axis, bundle: &mut ResultBundle) -> Outcome {
    let opts = cfg.sweep_options();
    let mut outcome = Ok(());
    let mut runs = Vec::new();
    if axis != Axis::Tau {
        runs.push((
            "p",
            isolation_probability_sweep(&cfg.params, cfg.grids.p, &opts)?,
        ));
    }
    if axis != Axis::P {
        runs.push((
            "tau",
            isolation_delay_sweep(&cfg.params, cfg.grids.tau, &opts)?,
        ));
    }
    for (name, sweep) in runs {
        let table = Table::from_sweep(&sweep);
        bundle.write_table(&format!("isolation_{name}.csv"), &table)?;
        let plot = Plot::new(format!("Mean infectives against {name}"), name, "mean I")
            .with(series(&table, name, "avg_I", "mean I"))
            .with(series(&table, name, "avg_Q", "mean Q"));
        bundle.write_plot(&format!("isolation_{name}.svg"), &plot)?;
        for row in &table.rows {
            println!(
                "{name} = {:<6} mean I = {}",
                format_sig(row[0]),
                format_sig(row[3])
            );
        }
        if let Err(f) = sweep_outcome(&format!("sweep-isolation ({name})"), &sweep) {
            outcome = Err(f);
        }
    }
    outcome
}

fn write_scan(
    bundle: &mut ResultBundle,
    res: &SensitivityResult,
) -> Result<serde_json::Value, Failure> {
    let stem = format!(
        "sensitivity_{}_{}_{}",
        res.parameter,
        format_sig(res.interval.0),
        format_sig(res.interval.1)
    );
    bundle.write_table(&format!("{stem}.csv"), &Table::sensitivity_summary(res))?;
    let fan = Table::sensitivity_fan(res);
    bundle.write_table(&format!("{stem}_fan.csv"), &fan)?;
    // Up to ten fan members keep the legend readable.
    let stride = res.values.len().div_ceil(10).max(1);
    let mut plot = Plot::new(
        format!(
            "I for {} in [{}, {}]",
            res.parameter,
            format_sig(res.interval.0),
            format_sig(res.interval.1)
        ),
        "t (days)",
        "I",
    );
    for (i, v) in res.values.iter().enumerate().step_by(stride) {
        plot.series.push(Series::new(
            format!("{} = {}", res.parameter, format_sig(*v)),
            &res.times,
            &res.fan[i],
        ));
    }
    plot.series.push(Series::new("mean", &res.times, &res.mean));
    bundle.write_plot(&format!("{stem}.svg"), &plot)?;
    for w in &res.warnings {
        println!("  warning: {w}");
    }
    Ok(json!({
        "parameter": res.parameter,
        "target": res.target.as_str(),
        "interval": [res.interval.0, res.interval.1],
        "members": res.values.len(),
        "max_mse": res.max_mse,
        "threshold": res.threshold,
        "verdict": res.verdict.as_str(),
        "diverged": res.diverged.len(),
        "warnings": res.warnings,
    }))
}

fn sensitivity(cfg: &RunConfig, bundle: &mut ResultBundle) -> Outcome {
    let opts = cfg.scan_options();
    let mut records = Vec::new();
    if let (Some(name), Some(interval)) = (&cfg.sensitivity.parameter, cfg.sensitivity.interval) {
        let res = sensitivity_scan(name, interval, &cfg.params, &opts)?;
        println!(
            "{name} in [{}, {}]: max MSE = {} -> {}",
            format_sig(interval.0),
            format_sig(interval.1),
            format_sig(res.max_mse),
            res.verdict
        );
        records.push(write_scan(bundle, &res)?);
    } else {
        let mut matched = 0;
        let mut run = 0;
        for row in reference_scans() {
            let label = format!(
                "{} in [{}, {}]",
                row.parameter,
                format_sig(row.interval.0),
                format_sig(row.interval.1)
            );
            match sensitivity_scan(row.parameter, row.interval, &cfg.params, &opts) {
                Ok(res) => {
                    run += 1;
                    let agrees = res.verdict == row.expected;
                    matched += agrees as usize;
                    println!(
                        "{label:<26} max MSE = {:<20} {:<11} expected {:<11} {}",
                        format_sig(res.max_mse),
                        res.verdict.as_str(),
                        row.expected.as_str(),
                        if agrees { "match" } else { "MISMATCH" }
                    );
                    let mut rec = write_scan(bundle, &res)?;
                    rec["expected"] = json!(row.expected.as_str());
                    records.push(rec);
                }
                Err(
                    e @ (ExperimentError::Unmapped(_)
                    | ExperimentError::Model(ModelError::InvalidParams(_))),
                ) => {
                    println!("{label:<26} skipped: {e}");
                    records.push(json!({ "parameter": row.parameter, "skipped": e.to_string() }));
                }
                Err(e) => return Err(e.into()),
            }
        }
        println!("{matched} of {run} scans match the reference verdicts");
    }
    bundle.write_jsonl("sensitivity.jsonl", "summary", &records)?;
    Ok(())
}

fn validate(bundle: &mut ResultBundle) -> Outcome {
    let checks = validation_suite().map_err(|e| Failure::Numerical(e.to_string()))?;
    let mut records = Vec::new();
    let mut all = true;
    for c in &checks {
        let ok = c.passed();
        all &= ok;
        let op = if c.at_least { ">=" } else { "<" };
        println!(
            "{} {}: {} {op} {}",
            if ok { "PASS" } else { "FAIL" },
            c.name,
            format_sig(c.value),
            format_sig(c.limit)
        );
        records.push(json!({ "check": c.name, "value": c.value, "limit": c.limit, "passed": ok }));
    }
    bundle.write_jsonl("validate.jsonl", "validation", &records)?;
    if all {
        Ok(())
    } else {
        Err(Failure::Numerical("integrator self-check failed".into()))
    }
}
