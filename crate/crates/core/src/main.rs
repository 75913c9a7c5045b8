use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use isoswarm::bound::{BoundConfig, BoundRecord, EncounterBound};
use isoswarm::cost::{information_cost, CostRecord, EpsilonMode};
use isoswarm::experiments::{self, ExperimentFile, ExperimentKind, KappaUnit};
use isoswarm::io::{fmt_num, read_pois, read_poses, write_pois, write_poses, PoseRow};
use isoswarm::optimizer::{optimize_swarm_traced, CostMode, TraceRecord};
use isoswarm::sampling::sample_pois;
use isoswarm::{CostOptions, Error, NelderMeadOptions, SwarmConfig, UncertaintyEllipsoid, Vector3};

#[derive(Parser)]
#[command(
    name = "isoswarm",
    version,
    about = "ISO encounter bounds and swarm viewing optimisation"
)]
struct Cli {
    /// Seed for POI sampling and Monte Carlo; overrides an experiment's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (or directory for `experiment`).
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for experiments.
    #[arg(long, global = true)]
    threads: Option<usize>,
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
    /// Sample points of interest uniformly inside an ellipsoid.
    SamplePois(SampleArgs),
    /// Evaluate the information cost of a swarm.
    Cost(CostArgs),
    /// Optimise swarm positions and orientations.
    Optimize(OptimizeArgs),
    /// Evaluate the encounter probability bound.
    Bound(BoundArgs),
    /// Run an experiment campaign from a config file.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SampleArgs {
    /// Sphere radius.
    #[arg(long, conflicts_with = "radii")]
    radius: Option<f64>,
    /// Ellipsoid semi-axes `a,b,c`.
    #[arg(long, value_parser = parse_triple)]
    radii: Option<[f64; 3]>,
    #[arg(long, value_parser = parse_triple, default_value = "0,0,0")]
    center: [f64; 3],
    #[arg(short, long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
}

#[derive(Args)]
struct CostOpts {
    #[arg(long, value_enum, default_value_t = UnitArg::Radians)]
    kappa_unit: UnitArg,
    #[arg(long, value_enum, default_value_t = EpsArg::Percentage)]
    epsilon: EpsArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitArg {
    Radians,
    Degrees,
}

#[derive(Clone, Copy, ValueEnum)]
enum EpsArg {
    Percentage,
    Count,
}

impl CostOpts {
    fn options(&self) -> CostOptions {
        let unit = match self.kappa_unit {
            UnitArg::Radians => KappaUnit::Radians,
            UnitArg::Degrees => KappaUnit::Degrees,
        };
        let epsilon_mode = match self.epsilon {
            EpsArg::Percentage => EpsilonMode::Percentage,
            EpsArg::Count => EpsilonMode::Count,
        };
        CostOptions {
            kappa_weight: unit.weight(),
            epsilon_mode,
            ..CostOptions::default()
        }
    }
}

#[derive(Args)]
struct CostArgs {
    #[arg(long)]
    pois: PathBuf,
    #[arg(long)]
    poses: PathBuf,
    #[command(flatten)]
    cost: CostOpts,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    pois: PathBuf,
    /// Initial poses.
    #[arg(long)]
    poses: PathBuf,
    #[command(flatten)]
    cost: CostOpts,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Minimise the expected cost under Gaussian position noise of this σ.
    #[arg(long)]
    noise_stddev: Option<f64>,
    #[arg(long, default_value_t = 32)]
    noise_samples: usize,
    /// Per-iteration trace (iteration, best value, simplex diameter) as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    config: PathBuf,
    /// Print the radius whose success bound equals this probability.
    #[arg(long)]
    invert: Option<f64>,
    /// Overrides the config's distance.
    #[arg(long)]
    distance: Option<f64>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
}

fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into()
        .map_err(|_| "expected three comma-separated numbers".to_string())
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_)
            | Error::Parse { .. }
            | Error::Json(_)
            | Error::Io(_)
            | Error::InvalidParameter(_)
            | Error::Empty(_) => 2,
            _ => 3,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn require_output(cli: &Cli) -> CliResult<&Path> {
    cli.output
        .as_deref()
        .ok_or_else(|| usage("--output is required for this subcommand"))
}

/// Fails unless `path` can be created as a file.
fn check_output_file(path: &Path) -> CliResult {
    if path.is_dir() {
        return Err(usage(format!(
            "output path {} is a directory",
            path.display()
        )));
    }
    let parent = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return Err(usage(format!(
            "output directory {} does not exist",
            parent.display()
        )));
    }
    Ok(())
}

fn check_input(path: &Path) -> CliResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("input file {} not found", path.display())))
    }
}

fn open_input(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    fs::write(path, text + "\n").map_err(Error::from)?;
    Ok(())
}

/// Flat records written as CSV with 17 significant digits.
trait CsvRow {
    const HEADER: &'static str;
    fn cells(&self) -> Vec<String>;
}

impl CsvRow for CostRecord {
    const HEADER: &'static str = "kappa_total,epsilon_pct,info_cost,visible_count,n_pois";
    fn cells(&self) -> Vec<String> {
        vec![
            fmt_num(self.kappa_total),
            fmt_num(self.epsilon_pct),
            fmt_num(self.info_cost),
            self.visible_count.to_string(),
            self.n_pois.to_string(),
        ]
    }
}

impl CsvRow for BoundRecord {
    const HEADER: &'static str = "distance,time,failure_prob_upper,success_prob_lower,failure_raw,success_raw,c_s,zeta_integral,m_lower_combined,numerator";
    fn cells(&self) -> Vec<String> {
        [
            self.distance,
            self.time,
            self.failure_prob_upper,
            self.success_prob_lower,
            self.failure_raw,
            self.success_raw,
            self.c_s,
            self.zeta_integral,
            self.m_lower_combined,
            self.numerator,
        ]
        .map(fmt_num)
        .to_vec()
    }
}

impl CsvRow for TraceRecord<f64> {
    const HEADER: &'static str = "iteration,best_value,simplex_diameter";
    fn cells(&self) -> Vec<String> {
        vec![
            self.iteration.to_string(),
            fmt_num(self.best_value),
            fmt_num(self.simplex_diameter),
        ]
    }
}

fn write_rows_csv<R: CsvRow>(path: &Path, rows: &[R]) -> CliResult {
    let mut text = format!("{}\n", R::HEADER);
    for r in rows {
        text.push_str(&r.cells().join(","));
        text.push('\n');
    }
    fs::write(path, text).map_err(Error::from)?;
    Ok(())
}

fn cmd_sample_pois(cli: &Cli, a: &SampleArgs) -> CliResult {
    let out = require_output(cli)?;
    check_output_file(out)?;
    let radii = match (a.radius, a.radii) {
        (Some(r), None) => [r; 3],
        (None, Some(r)) => r,
        _ => return Err(usage("give either --radius or --radii")),
    };
    let ellipsoid =
        UncertaintyEllipsoid::new(Vector3::from_array(a.center), Vector3::from_array(radii))?;
    let seed = cli.seed.unwrap_or(0);
    let pois = sample_pois(&ellipsoid, a.n as usize, seed)?;
    match cli.format {
        Format::Csv => write_pois(
            BufWriter::new(File::create(out).map_err(Error::from)?),
            &pois,
        )?,
        Format::Json => write_json(
            out,
            &serde_json::json!({ "seed": seed, "ellipsoid": ellipsoid, "points": pois.points }),
        )?,
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]);
    for p in &pois.points {
        for (i, c) in p.to_array().into_iter().enumerate() {
            lo[i] = lo[i].min(c);
            hi[i] = hi[i].max(c);
        }
    }
    println!(
        "wrote {} POIs (seed {seed}) to {}",
        pois.len(),
        out.display()
    );
    println!(
        "bounds x [{:.3}, {:.3}] y [{:.3}, {:.3}] z [{:.3}, {:.3}]",
        lo[0], hi[0], lo[1], hi[1], lo[2], hi[2]
    );
    Ok(())
}

fn load_scene(pois: &Path, poses: &Path) -> CliResult<(isoswarm::PoiSet, SwarmConfig)> {
    check_input(pois)?;
    check_input(poses)?;
    let pois = read_pois(open_input(pois)?)?;
    let poses = read_poses(open_input(poses)?)?;
    let swarm = SwarmConfig::new(poses, pois.ellipsoid)?;
    Ok((pois, swarm))
}

fn cmd_cost(cli: &Cli, a: &CostArgs) -> CliResult {
    if let Some(out) = &cli.output {
        check_output_file(out)?;
    }
    let (pois, swarm) = load_scene(&a.pois, &a.poses)?;
    let record = information_cost(&swarm, &pois, &a.cost.options())?.to_record();
    println!(
        "{}",
        serde_json::to_string_pretty(&record).map_err(Error::from)?
    );
    if let Some(out) = &cli.output {
        match cli.format {
            Format::Json => write_json(out, &record)?,
            Format::Csv => write_rows_csv(out, &[record])?,
        }
    }
    Ok(())
}

fn cmd_optimize(cli: &Cli, a: &OptimizeArgs) -> CliResult {
    let out = require_output(cli)?;
    check_output_file(out)?;
    if let Some(t) = &a.trace {
        check_output_file(t)?;
    }
    let (pois, initial) = load_scene(&a.pois, &a.poses)?;
    let opts = NelderMeadOptions {
        max_iterations: a.max_iterations,
        ..NelderMeadOptions::default()
    };
    let mode = match a.noise_stddev {
        None => CostMode::Deterministic,
        Some(stddev) => CostMode::Expected {
            stddev,
            n_samples: a.noise_samples,
            seed: cli.seed.unwrap_or(0),
        },
    };
    let mut trace = Vec::new();
    let run = optimize_swarm_traced(
        &pois,
        initial.len(),
        &initial,
        &opts,
        mode,
        &a.cost.options(),
        |r| trace.push(*r),
    )?;

    match cli.format {
        Format::Csv => write_poses(
            BufWriter::new(File::create(out).map_err(Error::from)?),
            &run.config.spacecraft,
        )?,
        Format::Json => write_json(
            out,
            &serde_json::json!({
                "poses": run.config.spacecraft.iter().map(PoseRow::from).collect::<Vec<_>>(),
                "cost": run.cost.to_record(),
                "best_value": run.result.best_value,
                "iterations": run.result.iterations,
                "evaluations": run.result.evaluation_count,
                "termination": run.result.termination,
            }),
        )?,
    }
    if let Some(t) = &a.trace {
        write_rows_csv(t, &trace)?;
    }
    let c = run.cost.to_record();
    println!(
        "{} spacecraft: coverage {:.2}%  kappa {:.6} rad  cost {:.6}  ({} iterations, {} evaluations, {:?})",
        initial.len(),
        c.epsilon_pct,
        c.kappa_total,
        c.info_cost,
        run.result.iterations,
        run.result.evaluation_count,
        run.result.termination
    );
    println!("final poses written to {}", out.display());
    Ok(())
}

fn cmd_bound(cli: &Cli, a: &BoundArgs) -> CliResult {
    if let Some(out) = &cli.output {
        check_output_file(out)?;
    }
    check_input(&a.config)?;
    let text = fs::read_to_string(&a.config).map_err(Error::from)?;
    let cfg = BoundConfig::from_json(&text)?;
    let params = cfg.params();
    let noise = cfg.noise_profile()?;
    let bound = EncounterBound::new(&params, &noise)?.with_denominator(cfg.denominator);

    if let Some(p) = a.invert {
        let radius = bound.radius_for_success_probability(p, cfg.time, cfg.v0_expected)?;
        println!("radius for success probability {p}: {radius}");
        if let Some(out) = &cli.output {
            let rec =
                serde_json::json!({ "success_probability": p, "time": cfg.time, "radius": radius });
            match cli.format {
                Format::Json => write_json(out, &rec)?,
                Format::Csv => fs::write(
                    out,
                    format!(
                        "success_probability,time,radius\n{p:.16e},{:.16e},{radius:.16e}\n",
                        cfg.time
                    ),
                )
                .map_err(Error::from)?,
            }
        }
        return Ok(());
    }

    let distance = a
        .distance
        .or(cfg.distance)
        .ok_or_else(|| usage("no distance: set `distance` in the config or pass --distance"))?;
    let r = bound.evaluate(distance, cfg.time, cfg.v0_expected)?;
    let record = BoundRecord::new(distance, cfg.time, &r);
    println!(
        "{}",
        serde_json::to_string_pretty(&record).map_err(Error::from)?
    );
    if let Some(out) = &cli.output {
        match cli.format {
            Format::Json => write_json(out, &record)?,
            Format::Csv => write_rows_csv(out, &[record])?,
        }
    }
    Ok(())
}

fn cmd_experiment(cli: &Cli, a: &ExperimentArgs) -> CliResult {
    let out = require_output(cli)?;
    if out.is_file() {
        return Err(usage(format!(
            "output path {} is a file, expected a directory",
            out.display()
        )));
    }
    check_input(&a.config)?;
    let text = fs::read_to_string(&a.config).map_err(Error::from)?;
    let mut file = ExperimentFile::from_json(&text)?;
    if let Some(seed) = cli.seed {
        file.experiment.set_master_seed(seed);
    }
    file.experiment.validate()?;
    fs::create_dir_all(out).map_err(|e| usage(format!("cannot create {}: {e}", out.display())))?;

    let report = experiments::run(&file.experiment)?;
    let summary = experiments::write_outputs(out, &report)?;
    match summary.kind {
        ExperimentKind::ViewProbability => {
            println!(
                "{:>10} {:>7} {:>8} {:>12}",
                "radius", "trials", "p (%)", "coverage (%)"
            );
            for c in &summary.cells {
                println!(
                    "{:>10} {:>7} {:>8.1} {:>12.1}",
                    c.radius,
                    c.n_trials,
                    c.p_pct.unwrap_or(f64::NAN),
                    c.coverage_mean
                );
            }
        }
        ExperimentKind::SwarmSize => {
            println!(
                "{:>4} {:>7} {:>14} {:>10}",
                "N", "trials", "coverage (%)", "-I"
            );
            for c in &summary.cells {
                println!(
                    "{:>4} {:>7} {:>14.1} {:>10.2}",
                    c.n_spacecraft, c.n_trials, c.coverage_mean, c.neg_info_mean
                );
            }
        }
    }
    println!("wrote report.json and summary.csv to {}", out.display());
    Ok(())
}

fn run(cli: &Cli) -> CliResult {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    match &cli.command {
        Command::SamplePois(a) => cmd_sample_pois(cli, a),
        Command::Cost(a) => cmd_cost(cli, a),
        Command::Optimize(a) => cmd_optimize(cli, a),
        Command::Bound(a) => cmd_bound(cli, a),
        Command::Experiment(a) => cmd_experiment(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let _ = writeln!(std::io::stderr(), "error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
