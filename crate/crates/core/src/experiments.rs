//! Seeded Monte Carlo campaigns.
//!
//! Two campaigns are provided: the probability that one optimised spacecraft
//! views the ISO for several uncertainty-sphere radii, and a sweep over swarm
//! sizes on a fixed sphere. Each trial owns a ChaCha8 stream whose seed is
//! derived from the master seed and the trial's cell key, so results do not
//! depend on scheduling or on which other cells are present.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_3, TAU};
use std::fs;
use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{CostOptions, EpsilonMode, SpacecraftPose, SwarmConfig};
use crate::error::{Error, Result};
use crate::geometry::{visible, Vector3};
use crate::io::{fmt_num, PoseRow};
use crate::optimizer::{optimize_swarm, CostMode, NelderMeadOptions};
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::sampling::{sample_pois, UncertaintyEllipsoid};

pub const EXPERIMENT_SCHEMA_VERSION: u32 = 1;

// stream tags mixed into derived seeds
const TAG_VIEW: u64 = 1;
const TAG_SWEEP_POIS: u64 = 2;
const TAG_SWEEP_TRIAL: u64 = 3;

/// What counts as "the ISO is viewed" in the single-spacecraft campaign.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessCriterion {
    /// The sphere centre is visible from the final pose.
    #[default]
    SphereCenter,
    /// A true ISO position drawn uniformly inside the sphere is visible.
    SampledTruth,
}

/// Unit in which κ enters the cost.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaUnit {
    #[default]
    Radians,
    Degrees,
}

impl KappaUnit {
    pub fn weight(self) -> f64 {
        match self {
            Self::Radians => 1.0,
            Self::Degrees => 180.0 / std::f64::consts::PI,
        }
    }
}

fn default_phi() -> f64 {
    FRAC_PI_3
}

fn default_start_factor() -> [f64; 2] {
    [3.0, 6.0]
}

/// Single-spacecraft view-probability campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewProbabilityConfig {
    /// Sphere centre, km.
    pub iso_terminal_position: [f64; 3],
    pub sphere_radii: Vec<f64>,
    pub trials_per_radius: usize,
    /// Inclusive integer range of starting distances from the centre.
    pub initial_distance_range: [i64; 2],
    pub n_pois: usize,
    pub master_seed: u64,
    #[serde(default = "default_phi")]
    pub aperture_phi: f64,
    /// Defaults to φ/2.
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub success_criterion: SuccessCriterion,
    #[serde(default)]
    pub kappa_unit: KappaUnit,
    #[serde(default)]
    pub optimizer: NelderMeadOptions<f64>,
}

/// Swarm-size sweep on one uncertainty sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwarmSizeConfig {
    pub sphere_radius: f64,
    pub n_pois: usize,
    /// Inclusive range of swarm sizes.
    pub spacecraft_range: [usize; 2],
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default = "default_phi")]
    pub aperture_phi: f64,
    #[serde(default)]
    pub nu: Option<f64>,
    /// Starting distance range as multiples of the sphere radius.
    #[serde(default = "default_start_factor")]
    pub start_distance_factor: [f64; 2],
    #[serde(default)]
    pub kappa_unit: KappaUnit,
    #[serde(default)]
    pub optimizer: NelderMeadOptions<f64>,
}

/// Experiment config file, tagged by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentConfig {
    ViewProbability(ViewProbabilityConfig),
    SwarmSize(SwarmSizeConfig),
}

/// On-disk wrapper carrying the schema version.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentFile {
    pub schema_version: u32,
    #[serde(flatten)]
    pub experiment: ExperimentConfig,
}

impl ExperimentFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let version = value
            .get("schema_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Config("missing integer field `schema_version`".into()))?;
        if version != u64::from(EXPERIMENT_SCHEMA_VERSION) {
            return Err(Error::Config(format!(
                "unsupported schema_version {version} (expected {EXPERIMENT_SCHEMA_VERSION})"
            )));
        }
        let mut rest = value;
        rest.as_object_mut().unwrap().remove("schema_version");
        let experiment: ExperimentConfig =
            serde_json::from_value(rest).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self {
            schema_version: EXPERIMENT_SCHEMA_VERSION,
            experiment,
        })
    }
}

impl ViewProbabilityConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials_per_radius == 0 {
            return bad("trials_per_radius must be at least 1".into());
        }
        if self.sphere_radii.is_empty()
            || self
                .sphere_radii
                .iter()
                .any(|r| !(*r > 0.0) || !r.is_finite())
        {
            return bad("sphere_radii must be a non-empty list of positive radii".into());
        }
        let [lo, hi] = self.initial_distance_range;
        if !(0 < lo && lo < hi) {
            return bad(format!(
                "initial_distance_range needs 0 < min < max, got [{lo}, {hi}]"
            ));
        }
        if self.n_pois == 0 {
            return bad("n_pois must be at least 1".into());
        }
        if self.iso_terminal_position.iter().any(|c| !c.is_finite()) {
            return bad("iso_terminal_position must be finite".into());
        }
        check_angles(self.aperture_phi, self.nu)?;
        self.optimizer.validate()
    }
}

impl SwarmSizeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let [lo, hi] = self.spacecraft_range;
        if !(1 <= lo && lo <= hi && hi <= 32) {
            return bad(format!(
                "spacecraft_range must satisfy 1 <= min <= max <= 32, got [{lo}, {hi}]"
            ));
        }
        if self.trials == 0 || self.n_pois == 0 {
            return bad("trials and n_pois must be at least 1".into());
        }
        if !(self.sphere_radius > 0.0) || !self.sphere_radius.is_finite() {
            return bad("sphere_radius must be positive".into());
        }
        let [a, b] = self.start_distance_factor;
        if !(0.0 < a && a <= b && b.is_finite()) {
            return bad(format!(
                "start_distance_factor needs 0 < min <= max, got [{a}, {b}]"
            ));
        }
        check_angles(self.aperture_phi, self.nu)?;
        self.optimizer.validate()
    }
}

fn check_angles(phi: f64, nu: Option<f64>) -> Result<()> {
    let open = |x: f64| x > 0.0 && x < std::f64::consts::PI;
    if !open(phi) || !nu.is_none_or(open) {
        return Err(Error::Config(
            "aperture_phi and nu must lie in (0, π)".into(),
        ));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ViewProbability,
    SwarmSize,
}

/// One optimisation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub radius: f64,
    pub n_spacecraft: usize,
    pub trial: usize,
    pub seed: u64,
    pub poi_seed: u64,
    pub coverage_pct: f64,
    pub kappa_total: f64,
    /// Negative information cost `−I`.
    pub neg_info_cost: f64,
    /// View-probability campaign only.
    pub success: Option<bool>,
    /// Sampled ISO position, when the sampled-truth criterion is used.
    pub truth: Option<[f64; 3]>,
    pub iterations: usize,
    pub evaluations: usize,
    pub initial_poses: Vec<PoseRow>,
    pub final_poses: Vec<PoseRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub center: [f64; 3],
    pub config: ExperimentConfig,
    pub trials: Vec<TrialRecord>,
}

fn random_direction(rng: &mut Rng) -> Vector3<f64> {
    loop {
        let g = Vector3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        if let Some(d) = g.normalized() {
            return d;
        }
    }
}

fn uniform_in_ball(rng: &mut Rng) -> Vector3<f64> {
    let d = random_direction(rng);
    d * rng.random::<f64>().cbrt()
}

fn pose_rows(swarm: &SwarmConfig<f64>) -> Vec<PoseRow> {
    swarm.spacecraft.iter().map(PoseRow::from).collect()
}

/// Runs the single-spacecraft campaign.
pub fn run_view_probability(config: &ViewProbabilityConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let center = Vector3::from_array(config.iso_terminal_position);
    let nu = config.nu.unwrap_or(config.aperture_phi / 2.0);
    let cost_opts = CostOptions {
        kappa_weight: config.kappa_unit.weight(),
        ..CostOptions::default()
    };
    let cells: Vec<(f64, usize)> = config
        .sphere_radii
        .iter()
        .flat_map(|&r| (0..config.trials_per_radius).map(move |t| (r, t)))
        .collect();

    let trials = cells
        .par_iter()
        .map(|&(radius, trial)| -> Result<TrialRecord> {
            let seed = derive_seed(
                config.master_seed,
                &[TAG_VIEW, radius.to_bits(), trial as u64, 1],
            );
            let poi_seed = derive_seed(seed, &[0]);
            let mut rng = rng_from_seed(seed);
            let ellipsoid = UncertaintyEllipsoid::sphere(center, radius)?;
            let pois = sample_pois(&ellipsoid, config.n_pois, poi_seed)?;

            let [lo, hi] = config.initial_distance_range;
            let dist = rng.random_range(lo..=hi) as f64;
            let start = center + random_direction(&mut rng) * dist;
            let theta = rng.random::<f64>() * TAU;
            let truth = match config.success_criterion {
                SuccessCriterion::SphereCenter => None,
                SuccessCriterion::SampledTruth => Some(center + uniform_in_ball(&mut rng) * radius),
            };

            let initial = SwarmConfig::new(
                vec![SpacecraftPose::new(start, theta, nu, config.aperture_phi)],
                ellipsoid,
            )?;
            let out = optimize_swarm(
                &pois,
                1,
                &initial,
                &config.optimizer,
                CostMode::Deterministic,
                &cost_opts,
            )?;
            let success = view_success(&out.config, truth.unwrap_or(center))?;
            Ok(TrialRecord {
                radius,
                n_spacecraft: 1,
                trial,
                seed,
                poi_seed,
                coverage_pct: out.cost.coverage_pct,
                kappa_total: out.cost.kappa_total,
                neg_info_cost: -out.cost.information_cost,
                success: Some(success),
                truth: truth.map(Vector3::to_array),
                iterations: out.result.iterations,
                evaluations: out.result.evaluation_count,
                initial_poses: pose_rows(&initial),
                final_poses: pose_rows(&out.config),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentReport {
        kind: ExperimentKind::ViewProbability,
        center: config.iso_terminal_position,
        config: ExperimentConfig::ViewProbability(config.clone()),
        trials,
    })
}

/// True when `target` is visible from any spacecraft in `swarm`.
pub fn view_success(swarm: &SwarmConfig<f64>, target: Vector3<f64>) -> Result<bool> {
    let center = swarm.ellipsoid.center;
    Ok(swarm.fovs()?.iter().any(|f| visible(target, f, center)))
}

/// Runs the swarm-size sweep. Within a trial every swarm size sees the same POIs.
pub fn run_swarm_size_sweep(config: &SwarmSizeConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let center = Vector3::zeros();
    let radius = config.sphere_radius;
    let nu = config.nu.unwrap_or(config.aperture_phi / 2.0);
    let cost_opts = CostOptions {
        kappa_weight: config.kappa_unit.weight(),
        epsilon_mode: EpsilonMode::Percentage,
        ..CostOptions::default()
    };
    let ellipsoid = UncertaintyEllipsoid::sphere(center, radius)?;
    let [lo, hi] = config.spacecraft_range;
    let cells: Vec<(usize, usize)> = (0..config.trials)
        .flat_map(|t| (lo..=hi).map(move |n| (t, n)))
        .collect();
    let poi_sets = (0..config.trials)
        .map(|t| {
            let s = derive_seed(config.master_seed, &[TAG_SWEEP_POIS, t as u64]);
            sample_pois(&ellipsoid, config.n_pois, s)
        })
        .collect::<Result<Vec<_>>>()?;

    let trials = cells
        .par_iter()
        .map(|&(trial, n)| -> Result<TrialRecord> {
            let seed = derive_seed(
                config.master_seed,
                &[TAG_SWEEP_TRIAL, radius.to_bits(), trial as u64, n as u64],
            );
            let mut rng = rng_from_seed(seed);
            let pois = &poi_sets[trial];
            let [fa, fb] = config.start_distance_factor;
            let spacecraft = (0..n)
                .map(|_| {
                    let dist = radius * (fa + (fb - fa) * rng.random::<f64>());
                    let pos = center + random_direction(&mut rng) * dist;
                    SpacecraftPose::new(pos, rng.random::<f64>() * TAU, nu, config.aperture_phi)
                })
                .collect();
            let initial = SwarmConfig::new(spacecraft, ellipsoid)?;
            let out = optimize_swarm(
                pois,
                n,
                &initial,
                &config.optimizer,
                CostMode::Deterministic,
                &cost_opts,
            )?;
            Ok(TrialRecord {
                radius,
                n_spacecraft: n,
                trial,
                seed,
                poi_seed: pois.seed,
                coverage_pct: out.cost.coverage_pct,
                kappa_total: out.cost.kappa_total,
                neg_info_cost: -out.cost.information_cost,
                success: None,
                truth: None,
                iterations: out.result.iterations,
                evaluations: out.result.evaluation_count,
                initial_poses: pose_rows(&initial),
                final_poses: pose_rows(&out.config),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentReport {
        kind: ExperimentKind::SwarmSize,
        center: center.to_array(),
        config: ExperimentConfig::SwarmSize(config.clone()),
        trials,
    })
}

/// Mean and sample standard deviation (0 for a single value).
///
/// Values are sorted before summation so the result does not depend on the
/// order of the input.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let mut sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    sq.sort_by(|a, b| a.total_cmp(b));
    (mean, (sq.iter().sum::<f64>() / (n - 1.0)).sqrt())
}

/// Aggregate statistics of one `(radius, swarm size)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub radius: f64,
    pub n_spacecraft: usize,
    pub n_trials: usize,
    pub successes: Option<usize>,
    /// Success percentage, view-probability campaign only.
    pub p_pct: Option<f64>,
    pub coverage_mean: f64,
    pub coverage_std: f64,
    pub neg_info_mean: f64,
    pub neg_info_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub kind: ExperimentKind,
    pub cells: Vec<CellSummary>,
}

impl Summary {
    pub fn cell(&self, radius: f64, n_spacecraft: usize) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.radius == radius && c.n_spacecraft == n_spacecraft)
    }
}

/// Recomputes per-cell statistics from the stored trial records.
pub fn aggregate(report: &ExperimentReport) -> Result<Summary> {
    if report.trials.is_empty() {
        return Err(Error::Empty("report has no trials".into()));
    }
    let mut groups: BTreeMap<(u64, usize), Vec<&TrialRecord>> = BTreeMap::new();
    for t in &report.trials {
        groups
            .entry((t.radius.to_bits(), t.n_spacecraft))
            .or_default()
            .push(t);
    }
    let mut cells: Vec<CellSummary> = groups
        .into_values()
        .map(|rows| {
            let coverage: Vec<f64> = rows.iter().map(|r| r.coverage_pct).collect();
            let neg: Vec<f64> = rows.iter().map(|r| r.neg_info_cost).collect();
            let (coverage_mean, coverage_std) = mean_std(&coverage);
            let (neg_info_mean, neg_info_std) = mean_std(&neg);
            let successes = rows
                .iter()
                .map(|r| r.success)
                .collect::<Option<Vec<bool>>>()
                .map(|s| s.into_iter().filter(|&b| b).count());
            CellSummary {
                radius: rows[0].radius,
                n_spacecraft: rows[0].n_spacecraft,
                n_trials: rows.len(),
                successes,
                p_pct: successes.map(|s| 100.0 * s as f64 / rows.len() as f64),
                coverage_mean,
                coverage_std,
                neg_info_mean,
                neg_info_std,
            }
        })
        .collect();
    cells.sort_by(|a, b| {
        a.radius
            .total_cmp(&b.radius)
            .then(a.n_spacecraft.cmp(&b.n_spacecraft))
    });
    Ok(Summary {
        kind: report.kind,
        cells,
    })
}

/// Table-shaped CSV.
///
/// View probability: one row per radius. Swarm size: coverage and `−I` rows
/// (per trial, then mean and standard deviation) with one column per swarm size.
pub fn summary_csv(report: &ExperimentReport, summary: &Summary) -> String {
    let mut out = String::new();
    match summary.kind {
        ExperimentKind::ViewProbability => {
            out.push_str("radius,trials,successes,p_pct,coverage_mean,coverage_std,neg_info_mean,neg_info_std\n");
            for c in &summary.cells {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    fmt_num(c.radius),
                    c.n_trials,
                    c.successes.unwrap_or(0),
                    fmt_num(c.p_pct.unwrap_or(f64::NAN)),
                    fmt_num(c.coverage_mean),
                    fmt_num(c.coverage_std),
                    fmt_num(c.neg_info_mean),
                    fmt_num(c.neg_info_std)
                ));
            }
        }
        ExperimentKind::SwarmSize => {
            let sizes: Vec<usize> = {
                let mut s: Vec<usize> = summary.cells.iter().map(|c| c.n_spacecraft).collect();
                s.dedup();
                s
            };
            let n_trials = report
                .trials
                .iter()
                .map(|t| t.trial)
                .max()
                .map_or(0, |m| m + 1);
            out.push_str("metric,row");
            for n in &sizes {
                out.push_str(&format!(",{n}"));
            }
            out.push('\n');
            let lookup = |trial: usize, n: usize| {
                report
                    .trials
                    .iter()
                    .find(|t| t.trial == trial && t.n_spacecraft == n)
            };
            for (metric, pick) in [
                (
                    "coverage_pct",
                    (|t: &TrialRecord| t.coverage_pct) as fn(&TrialRecord) -> f64,
                ),
                ("neg_info_cost", |t: &TrialRecord| t.neg_info_cost),
            ] {
                for trial in 0..n_trials {
                    out.push_str(&format!("{metric},trial_{}", trial + 1));
                    for &n in &sizes {
                        let v = lookup(trial, n).map_or(f64::NAN, pick);
                        out.push_str(&format!(",{}", fmt_num(v)));
                    }
                    out.push('\n');
                }
                for stat in ["mean", "std"] {
                    out.push_str(&format!("{metric},{stat}"));
                    for c in &summary.cells {
                        let v = match (metric, stat) {
                            ("coverage_pct", "mean") => c.coverage_mean,
                            ("coverage_pct", _) => c.coverage_std,
                            (_, "mean") => c.neg_info_mean,
                            _ => c.neg_info_std,
                        };
                        out.push_str(&format!(",{}", fmt_num(v)));
                    }
                    out.push('\n');
                }
            }
        }
    }
    out
}

/// Writes `report.json` and `summary.csv` into `dir`.
pub fn write_outputs(dir: &Path, report: &ExperimentReport) -> Result<Summary> {
    let summary = aggregate(report)?;
    fs::create_dir_all(dir)?;
    let json = serde_json::json!({ "report": report, "summary": summary });
    fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(&json)?,
    )?;
    fs::write(dir.join("summary.csv"), summary_csv(report, &summary))?;
    Ok(summary)
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    match config {
        ExperimentConfig::ViewProbability(c) => run_view_probability(c),
        ExperimentConfig::SwarmSize(c) => run_swarm_size_sweep(c),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::ViewProbability(c) => c.validate(),
            Self::SwarmSize(c) => c.validate(),
        }
    }

    pub fn set_master_seed(&mut self, seed: u64) {
        match self {
            Self::ViewProbability(c) => c.master_seed = seed,
            Self::SwarmSize(c) => c.master_seed = seed,
        }
    }
}
