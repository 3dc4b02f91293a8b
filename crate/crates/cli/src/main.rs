mod overrides;

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use porca::planner::{build_controller, Algorithm, ControllerParams};
use porca::predict::{
    evaluate, load_goals, load_trajectories, synthesize, write_goals, write_trajectories,
    EvalConfig, ModelScore, PredictError, PredictionModel, SynthParams,
};
use porca::sim::{
    read_log, render_svg, run_trial, summarize, write_log, Environment, ScenarioConfig, SimError,
    TrialMetrics, TrialOptions,
};
use rayon::prelude::*;
use serde_json::Value;
use thiserror::Error;

use overrides::{apply, parse_assignment, Target};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Io { path, source } => CliError::Io { path, source },
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<PredictError> for CliError {
    fn from(e: PredictError) -> Self {
        match e {
            PredictError::Io { path, source } => CliError::Io { path, source },
            PredictError::Write(message) => CliError::Io {
                path: "output".into(),
                source: io::Error::other(message),
            },
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "porca",
    version,
    about = "Crowd driving benchmarks and prediction evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run seeded closed-loop trials and print one metrics row per algorithm.
    Simulate(SimulateArgs),
    /// Score motion models on a recorded trajectory set.
    Predict(PredictArgs),
    /// Summarise a trajectory log and optionally draw it.
    Replay(ReplayArgs),
    /// Generate a synthetic crossing dataset with goals.
    Synth(SynthArgs),
}

#[derive(clap::Args, Debug)]
struct SimulateArgs {
    /// Built-in scenario name (s1, s2, s3) or a scenario JSON file.
    #[arg(long)]
    scenario: String,
    /// Controllers to run; repeat the flag or give a comma list.
    #[arg(long = "algo", value_delimiter = ',', default_value = "porca-pomdp")]
    algos: Vec<String>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Trial i runs with seed `seed + i`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Metrics CSV; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for one JSON-lines log per trial.
    #[arg(long)]
    log_dir: Option<PathBuf>,
    /// Also draw every logged trial as SVG (needs --log-dir).
    #[arg(long, requires = "log_dir")]
    svg: bool,
    /// Wall-clock planning budget per step; results then depend on machine load.
    #[arg(long)]
    budget_ms: Option<f64>,
    /// Override a setting: `planner.<field>`, `const_speed` or a scenario field path.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Unit {
    Window,
    Trajectory,
}

#[derive(clap::Args, Debug)]
struct PredictArgs {
    /// CSV with header ped_id,frame,x,y.
    #[arg(long)]
    data: PathBuf,
    /// CSV with header ped_id,goal_x,goal_y.
    #[arg(long)]
    goals: Option<PathBuf>,
    #[arg(long, default_value_t = 0.33)]
    frame_interval: f64,
    #[arg(long, default_value_t = 3.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.4)]
    threshold: f64,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "const-vel,pref-vel,orca,porca"
    )]
    models: Vec<String>,
    #[arg(long, value_enum, default_value_t = Unit::Window)]
    unit: Unit,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct ReplayArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    vehicle_radius: f64,
    #[arg(long, default_value_t = 0.25)]
    pedestrian_radius: f64,
}

#[derive(clap::Args, Debug)]
struct SynthArgs {
    /// Receives trajectories.csv and goals.csv.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standard deviation of the position noise (m).
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 46)]
    pedestrians: usize,
}

/// Writes through a sibling temporary file so readers never see a partial file.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(contents)?;
            f.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("stdout", e)),
    }
}

fn load_scenario(spec: &str) -> Result<ScenarioConfig, CliError> {
    if let Some(cfg) = ScenarioConfig::builtin(spec) {
        return Ok(cfg);
    }
    if !Path::new(spec).exists() {
        return Err(CliError::Usage(format!(
            "unknown scenario `{spec}` (built-ins are s1, s2, s3; otherwise give a JSON file)"
        )));
    }
    Ok(ScenarioConfig::load(spec)?)
}

fn apply_overrides(
    scenario: ScenarioConfig,
    sets: &[String],
) -> Result<(ScenarioConfig, ControllerParams), CliError> {
    let to_value = |v: Result<Value, serde_json::Error>| v.expect("settings serialise to JSON");
    let mut scenario_doc = to_value(serde_json::to_value(&scenario));
    let mut controller_doc = to_value(serde_json::to_value(ControllerParams::default()));
    for text in sets {
        let a = parse_assignment(text).map_err(CliError::Usage)?;
        let doc = match a.target {
            Target::Controller => &mut controller_doc,
            Target::Scenario => &mut scenario_doc,
        };
        apply(doc, &a.path, a.value).map_err(CliError::Usage)?;
    }
    let scenario = ScenarioConfig::from_json(&scenario_doc.to_string())?;
    let params: ControllerParams = serde_json::from_value(controller_doc)
        .map_err(|e| CliError::Usage(format!("invalid controller setting: {e}")))?;
    Ok((scenario, params))
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let algos = args
        .algos
        .iter()
        .map(|a| a.parse::<Algorithm>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (scenario, mut params) = apply_overrides(load_scenario(&args.scenario)?, &args.sets)?;
    let mut options = TrialOptions {
        record_log: args.log_dir.is_some(),
        budget: None,
    };
    if let Some(ms) = args.budget_ms {
        if !(ms > 0.0 && ms.is_finite()) {
            return Err(CliError::Usage(format!(
                "--budget-ms must be positive, got {ms}"
            )));
        }
        params.planner.planning_budget = Some(ms / 1000.0);
        options.budget = Some(Duration::from_secs_f64(ms / 1000.0));
    }
    let env = Environment::from_scenario(&scenario);
    for &algo in &algos {
        build_controller(algo, &env, &params).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if let Some(dir) = &args.log_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }

    let jobs: Vec<(usize, u64)> = (0..algos.len())
        .flat_map(|a| (0..args.trials).map(move |i| (a, i)))
        .collect();
    let results: Vec<Result<TrialMetrics, CliError>> = jobs
        .par_iter()
        .map(|&(a, i)| {
            let seed = args.seed.wrapping_add(i);
            let mut controller =
                build_controller(algos[a], &env, &params).expect("validated above");
            let outcome = run_trial(&scenario, controller.as_mut(), seed, &options)?;
            if let Some(dir) = &args.log_dir {
                let stem = format!("{}_{}_seed{}", scenario.name, algos[a].name(), seed);
                let mut text = Vec::new();
                write_log(&mut text, &outcome.log).expect("writing to memory");
                write_atomic(&dir.join(format!("{stem}.jsonl")), &text)?;
                if args.svg {
                    let svg = render_svg(&outcome.log, env.vehicle.radius, env.pedestrian.radius);
                    write_atomic(&dir.join(format!("{stem}.svg")), svg.as_bytes())?;
                }
            }
            Ok(outcome.metrics)
        })
        .collect();

    let mut metrics: Vec<Vec<TrialMetrics>> = vec![Vec::new(); algos.len()];
    for (&(a, _), r) in jobs.iter().zip(results) {
        metrics[a].push(r?);
    }
    let mut csv = String::from(porca::sim::Summary::CSV_HEADER);
    csv.push('\n');
    for (algo, m) in algos.iter().zip(&metrics) {
        csv.push_str(&summarize(&scenario.name, algo.name(), m).csv_row());
        csv.push('\n');
    }
    emit(args.out.as_deref(), &csv)
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn predict(args: PredictArgs) -> Result<(), CliError> {
    let models = args
        .models
        .iter()
        .map(|m| m.parse::<PredictionModel>())
        .collect::<Result<Vec<_>, _>>()?;
    let data = open(&args.data)?;
    let goals = args.goals.as_deref().map(open).transpose()?;
    let mut dataset = load_trajectories(data, args.frame_interval)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.data.display())))?;
    if let (Some(reader), Some(path)) = (goals, &args.goals) {
        dataset.goals =
            load_goals(reader).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    }
    let cfg = EvalConfig {
        horizon: args.horizon,
        threshold: args.threshold,
        ..EvalConfig::default()
    };
    let scores = evaluate(&dataset, &models, &cfg)?;
    let (header, row): (&str, fn(&ModelScore) -> String) = match args.unit {
        Unit::Window => (ModelScore::CSV_HEADER, ModelScore::csv_row),
        Unit::Trajectory => (
            ModelScore::TRAJECTORY_CSV_HEADER,
            ModelScore::trajectory_csv_row,
        ),
    };
    let mut csv = format!("{header}\n");
    for s in &scores {
        csv.push_str(&row(s));
        csv.push('\n');
    }
    emit(args.out.as_deref(), &csv)
}

fn replay(args: ReplayArgs) -> Result<(), CliError> {
    let records = read_log(open(&args.log)?)?;
    let Some(last) = records.last() else {
        return Err(CliError::Usage(format!(
            "{} holds no log records",
            args.log.display()
        )));
    };
    let reach = args.vehicle_radius + args.pedestrian_radius;
    let min_gap = records
        .iter()
        .flat_map(|r| {
            r.pedestrians
                .iter()
                .map(move |p| (p.x - r.vehicle.x).hypot(p.y - r.vehicle.y) - reach)
        })
        .fold(f64::INFINITY, f64::min);
    let speed_changes = records.iter().filter(|r| r.action.changes_speed()).count();
    let mut text = format!(
        "steps {}\nduration_s {:.3}\nfinal_vehicle {:.3} {:.3}\nspeed_changes {}\n",
        records.len(),
        last.time,
        last.vehicle.x,
        last.vehicle.y,
        speed_changes
    );
    if min_gap.is_finite() {
        text.push_str(&format!("min_gap_m {min_gap:.4}\n"));
    }
    if let Some(path) = &args.svg {
        let svg = render_svg(&records, args.vehicle_radius, args.pedestrian_radius);
        write_atomic(path, svg.as_bytes())?;
    }
    emit(None, &text)
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    let params = SynthParams {
        seed: args.seed,
        noise: args.noise,
        pedestrians: args.pedestrians,
        ..SynthParams::default()
    };
    let dataset = synthesize(&params)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    let mut tracks = Vec::new();
    write_trajectories(&mut tracks, &dataset)?;
    let mut goals = Vec::new();
    write_goals(&mut goals, &dataset.goals)?;
    write_atomic(&args.out_dir.join("trajectories.csv"), &tracks)?;
    write_atomic(&args.out_dir.join("goals.csv"), &goals)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Predict(a) => predict(a),
        Command::Replay(a) => replay(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
