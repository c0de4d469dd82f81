//! Reproducible parameter sweeps.
//!
//! Every sweep evaluates a grid of parameter values. Grid points are
//! independent tasks run on the rayon pool; all randomness is derived from
//! the master seed and the task path, so the output is bit-identical for a
//! given configuration, seed and partition count regardless of thread count.
//!
//! Seed layout:
//! * series of replicate `rep`: `derive_seed(seed, [SERIES, rep])`. The same
//!   realisation is shared by every grid point, so a sweep perturbs one
//!   signal rather than drawing fresh noise per point;
//! * microstate sampling: `derive_seed(seed, [SAMPLING, rep, point, n])`.

mod export;
pub mod stats;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::microstates::{
    microstate_entropy, rr_oracle, MicrostateSampler, DEFAULT_PARTITIONS, MAX_SIDE, MIN_SIDE,
};
use crate::recurrence::{build_rp, recurrence_rate, Norm};
use crate::rng::{self, derive_seed};
use crate::rqa::{RqaSummary, DEFAULT_L_MIN, DEFAULT_V_MIN};
use crate::signals::{
    gen_logistic, gen_sine_noise, gen_white_noise, lorenz_series, lorenz_trajectory,
    LogisticParams, LorenzParams, TimeSeries,
};

pub use export::Provenance;

const SERIES_TAG: u64 = 1;
const SAMPLING_TAG: u64 = 2;

/// Threshold used by every reproduction unless overridden.
pub const DEFAULT_EPSILON: f64 = 0.14;
pub const DEFAULT_LENGTH: usize = 1000;
pub const DEFAULT_SAMPLES: u64 = 10_000;
/// Microstate samples for the Lorenz sweep.
pub const LORENZ_SAMPLES: u64 = 100_000;
pub const DEFAULT_OMEGA: f64 = 0.033;
pub const DEFAULT_LOGISTIC_TRANSIENT: usize = 100_000;
/// Noise half-width of the noisy logistic reproduction.
pub const NOISY_LOGISTIC_FRAC: f64 = 0.005;
pub const DEFAULT_BIFURCATION_SAMPLES: usize = 100;

/// Inclusive arithmetic grid `start, start + step, ..., stop`, each value
/// rounded to 12 decimals so printed grids stay clean.
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::param(
            "grid",
            format!("need start <= stop and step > 0, got {start}..{stop} step {step}"),
        ));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// The four signal families that can be swept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    /// Sweep of the threshold over uniform white noise.
    WhiteNoise,
    /// Sweep of the noise amplitude `p` of `sin(omega t) + p u(t)`.
    SineNoise { omega: f64 },
    /// Sweep of `r` of the logistic map.
    Logistic { noise_frac: f64, transient: usize },
    /// Sweep of the Rayleigh number of the Lorenz flow.
    Lorenz { template: LorenzParams },
}

impl Experiment {
    pub fn id(&self) -> &'static str {
        match self {
            Experiment::WhiteNoise => "white_noise",
            Experiment::SineNoise { .. } => "sine",
            Experiment::Logistic { .. } => "logistic",
            Experiment::Lorenz { .. } => "lorenz",
        }
    }

    pub fn parameter(&self) -> &'static str {
        match self {
            Experiment::WhiteNoise => "epsilon",
            Experiment::SineNoise { .. } => "p",
            Experiment::Logistic { .. } | Experiment::Lorenz { .. } => "r",
        }
    }

    /// Grid used when none is given.
    pub fn default_grid(&self) -> Vec<f64> {
        let g = match self {
            Experiment::WhiteNoise => grid(0.02, 0.60, 0.02),
            Experiment::SineNoise { .. } => grid(0.0, 2.0, 0.05),
            Experiment::Logistic { .. } => grid(2.5, 4.0, 0.002),
            Experiment::Lorenz { .. } => grid(15.0, 50.0, 0.5),
        };
        g.expect("default grids are valid")
    }

    fn with_rqa(&self) -> bool {
        matches!(self, Experiment::Logistic { .. })
    }

    fn check_point(&self, value: f64) -> Result<()> {
        let ok = match self {
            Experiment::WhiteNoise => value > 0.0 && value <= 1.0,
            Experiment::SineNoise { .. } => value >= 0.0 && value.is_finite(),
            Experiment::Logistic { .. } => value > 0.0 && value <= 4.0,
            Experiment::Lorenz { .. } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(
                "grid",
                format!(
                    "{} = {value} is outside the domain of the {} sweep",
                    self.parameter(),
                    self.id()
                ),
            ))
        }
    }
}

/// Settings shared by all sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    /// Microstate sides.
    pub n_list: Vec<usize>,
    /// Series length `M`.
    pub length: usize,
    /// Microstate samples per plot.
    pub samples: u64,
    /// Threshold; ignored by the white-noise sweep whose grid is the threshold.
    pub epsilon: f64,
    pub seed: u64,
    /// Independent series per grid point, averaged.
    pub replicates: usize,
    pub partitions: usize,
    pub l_min: usize,
    pub v_min: usize,
    /// Orbit values kept per grid point for bifurcation diagrams.
    pub bifurcation_samples: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            n_list: vec![2, 3, 4],
            length: DEFAULT_LENGTH,
            samples: DEFAULT_SAMPLES,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            replicates: 1,
            partitions: DEFAULT_PARTITIONS,
            l_min: DEFAULT_L_MIN,
            v_min: DEFAULT_V_MIN,
            bifurcation_samples: DEFAULT_BIFURCATION_SAMPLES,
        }
    }
}

impl SweepSettings {
    fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::param(
                "n",
                "at least one microstate side is required",
            ));
        }
        if let Some(&n) = self
            .n_list
            .iter()
            .find(|n| !(MIN_SIDE..=MAX_SIDE).contains(*n))
        {
            return Err(Error::param(
                "n",
                format!("side {n} outside [{MIN_SIDE}, {MAX_SIDE}]"),
            ));
        }
        if self.replicates == 0 {
            return Err(Error::param("replicates", "must be >= 1"));
        }
        if self.samples == 0 {
            return Err(Error::param("samples", "must be >= 1"));
        }
        if self.partitions == 0 {
            return Err(Error::param("partitions", "must be >= 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidThreshold(self.epsilon));
        }
        Ok(())
    }
}

/// Orbit samples at one parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationSample {
    pub param: f64,
    pub values: Vec<f64>,
}

/// One grid point; `values` follows [`SweepResult::columns`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub experiment: Experiment,
    /// Value columns, excluding the parameter column.
    pub columns: Vec<String>,
    /// Sorted by parameter value.
    pub rows: Vec<SweepRow>,
    pub bifurcation: Vec<BifurcationSample>,
    pub provenance: Provenance,
}

impl SweepResult {
    pub fn parameter(&self) -> &'static str {
        self.experiment.parameter()
    }

    pub fn params(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.param).collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[idx]).collect())
    }

    /// Row whose parameter is closest to `param`.
    pub fn row_near(&self, param: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .min_by(|a, b| (a.param - param).abs().total_cmp(&(b.param - param).abs()))
    }

    pub fn value_near(&self, param: f64, column: &str) -> Option<f64> {
        let idx = self.columns.iter().position(|c| c == column)?;
        self.row_near(param).map(|r| r.values[idx])
    }
}

/// Per-replicate measurements at one grid point.
struct Measurement {
    rr: f64,
    rqa: Option<RqaSummary>,
    entropy: Vec<f64>,
    orbit: Vec<f64>,
}

fn series_for(
    experiment: &Experiment,
    param: f64,
    settings: &SweepSettings,
    seed: u64,
) -> Result<(TimeSeries, Vec<f64>)> {
    let keep = settings.bifurcation_samples;
    let tail = |v: &[f64]| v[v.len().saturating_sub(keep)..].to_vec();
    match *experiment {
        Experiment::WhiteNoise => Ok((gen_white_noise(settings.length, seed)?, Vec::new())),
        Experiment::SineNoise { omega } => Ok((
            gen_sine_noise(settings.length, omega, param, seed)?,
            Vec::new(),
        )),
        Experiment::Logistic {
            noise_frac,
            transient,
        } => {
            let p = LogisticParams::new(param, settings.length)
                .transient(transient)
                .noise(noise_frac);
            let s = gen_logistic(&p, seed)?;
            let orbit = tail(s.values());
            Ok((s, orbit))
        }
        Experiment::Lorenz { template } => {
            let p = LorenzParams {
                r: param,
                ..template
            };
            let traj = lorenz_trajectory(&p, seed)?;
            let orbit = tail(&traj.z_maxima);
            Ok((lorenz_series(&p, &traj, seed), orbit))
        }
    }
}

fn measure(
    experiment: &Experiment,
    point: usize,
    param: f64,
    rep: usize,
    settings: &SweepSettings,
) -> Result<Measurement> {
    let series_seed = derive_seed(settings.seed, &[SERIES_TAG, rep as u64]);
    let (series, orbit) = series_for(experiment, param, settings, series_seed)?;
    let epsilon = match experiment {
        Experiment::WhiteNoise => param,
        _ => settings.epsilon,
    };
    let rp = build_rp(&series, epsilon, Norm::Absolute)?;
    let rqa = experiment
        .with_rqa()
        .then(|| RqaSummary::compute(&rp, settings.l_min, settings.v_min));
    let entropy = settings
        .n_list
        .iter()
        .map(|&n| {
            let seed = derive_seed(
                settings.seed,
                &[SAMPLING_TAG, rep as u64, point as u64, n as u64],
            );
            MicrostateSampler::new(n, settings.samples, seed)
                .partitions(settings.partitions)
                .sample(&rp)
                .map(|h| microstate_entropy(&h))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Measurement {
        rr: recurrence_rate(&rp),
        rqa,
        entropy,
        orbit,
    })
}

fn column_names(experiment: &Experiment, settings: &SweepSettings) -> Vec<String> {
    let mut cols = vec!["rr".to_string()];
    match experiment {
        Experiment::WhiteNoise => cols.push("rr_oracle".into()),
        Experiment::Logistic { .. } => {
            cols.extend(["det", "lam", "entr", "div"].map(String::from));
        }
        _ => {}
    }
    cols.extend(settings.n_list.iter().map(|n| format!("s{n}")));
    if settings.replicates > 1 {
        cols.extend(settings.n_list.iter().map(|n| format!("s{n}_std")));
    }
    cols
}

fn aggregate(
    experiment: &Experiment,
    param: f64,
    settings: &SweepSettings,
    reps: &[Measurement],
) -> Result<Vec<f64>> {
    let pick = |f: &dyn Fn(&Measurement) -> f64| -> Vec<f64> { reps.iter().map(f).collect() };
    let mut values = vec![stats::mean(&pick(&|m| m.rr))];
    match experiment {
        Experiment::WhiteNoise => values.push(rr_oracle(param)?),
        Experiment::Logistic { .. } => {
            let q = |f: fn(&RqaSummary) -> f64| {
                stats::mean(&pick(&|m| m.rqa.as_ref().map_or(f64::NAN, f)))
            };
            values.extend([q(|s| s.det), q(|s| s.lam), q(|s| s.entr), q(|s| s.div)]);
        }
        _ => {}
    }
    let per_n: Vec<Vec<f64>> = (0..settings.n_list.len())
        .map(|k| pick(&|m| m.entropy[k]))
        .collect();
    values.extend(per_n.iter().map(|s| stats::mean(s)));
    if settings.replicates > 1 {
        values.extend(per_n.iter().map(|s| stats::std_dev(s)));
    }
    Ok(values)
}

/// Runs `experiment` over `grid` (sorted before evaluation).
pub fn run_sweep(
    experiment: Experiment,
    grid: &[f64],
    settings: &SweepSettings,
) -> Result<SweepResult> {
    settings.validate()?;
    if grid.is_empty() {
        return Err(Error::param("grid", "grid is empty"));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    for &g in &grid {
        experiment.check_point(g)?;
    }

    let points: Vec<(Vec<f64>, Vec<f64>)> = grid
        .par_iter()
        .enumerate()
        .map(|(point, &param)| {
            let reps = (0..settings.replicates)
                .map(|rep| measure(&experiment, point, param, rep, settings))
                .collect::<Result<Vec<_>>>()?;
            let values = aggregate(&experiment, param, settings, &reps)?;
            let orbit = reps.into_iter().next().map(|m| m.orbit).unwrap_or_default();
            Ok((values, orbit))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(points.len());
    let mut bifurcation = Vec::new();
    for (&param, (values, orbit)) in grid.iter().zip(points) {
        rows.push(SweepRow { param, values });
        if !orbit.is_empty() {
            bifurcation.push(BifurcationSample {
                param,
                values: orbit,
            });
        }
    }
    Ok(SweepResult {
        experiment,
        columns: column_names(&experiment, settings),
        rows,
        bifurcation,
        provenance: Provenance::new(&experiment, &grid, settings),
    })
}

/// Entropy and RR of white noise across thresholds, with the analytic RR.
pub fn sweep_epsilon_white_noise(
    eps_grid: &[f64],
    settings: &SweepSettings,
) -> Result<SweepResult> {
    run_sweep(Experiment::WhiteNoise, eps_grid, settings)
}

/// Entropy of `sin(omega t) + p u(t)` across noise amplitudes `p`.
pub fn sweep_sine_noise(
    p_grid: &[f64],
    omega: f64,
    settings: &SweepSettings,
) -> Result<SweepResult> {
    run_sweep(Experiment::SineNoise { omega }, p_grid, settings)
}

/// Classic quantifiers and entropy of the logistic map across `r`.
pub fn sweep_logistic(
    r_grid: &[f64],
    noise_frac: f64,
    transient: usize,
    settings: &SweepSettings,
) -> Result<SweepResult> {
    run_sweep(
        Experiment::Logistic {
            noise_frac,
            transient,
        },
        r_grid,
        settings,
    )
}

/// Entropy of one Lorenz component across the Rayleigh number; bifurcation
/// samples are successive maxima of `z`.
pub fn sweep_lorenz(
    r_grid: &[f64],
    template: LorenzParams,
    settings: &SweepSettings,
) -> Result<SweepResult> {
    run_sweep(Experiment::Lorenz { template }, r_grid, settings)
}

/// Lyapunov exponent estimate of the noise-free logistic map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub exponent: f64,
    /// Terms dropped because the orbit hit `x = 1/2` exactly.
    pub skipped: usize,
}

/// `(1/T) sum ln |r (1 - 2 x_t)|` over `iterations` post-transient steps.
///
/// Steps landing exactly on the critical point have zero derivative and are
/// skipped (with a warning). An orbit that sits on the critical point for
/// every step is superstable and reports negative infinity.
pub fn logistic_lyapunov(
    r: f64,
    iterations: usize,
    transient: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    if !(r > 0.0 && r <= 4.0) {
        return Err(Error::param("r", format!("must lie in (0, 4], got {r}")));
    }
    if iterations == 0 {
        return Err(Error::param("iterations", "must be >= 1"));
    }
    let mut rng = rng::seeded(seed);
    let mut x = loop {
        let u: f64 = rand::Rng::random(&mut rng);
        if u > 0.0 {
            break u;
        }
    };
    for _ in 0..transient {
        x = r * x * (1.0 - x);
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for _ in 0..iterations {
        let d = (r * (1.0 - 2.0 * x)).abs();
        if d > 0.0 {
            sum += d.ln();
            used += 1;
        }
        x = r * x * (1.0 - x);
    }
    let skipped = iterations - used;
    if skipped > 0 {
        log::warn!("logistic Lyapunov at r = {r}: {skipped} steps on the critical point skipped");
    }
    let exponent = if used == 0 {
        f64::NEG_INFINITY
    } else {
        sum / used as f64
    };
    Ok(LyapunovEstimate { exponent, skipped })
}

/// Free-form extra parameters recorded in the provenance sidecar.
pub(crate) fn experiment_params(experiment: &Experiment) -> BTreeMap<String, serde_json::Value> {
    let mut m = BTreeMap::new();
    match experiment {
        Experiment::WhiteNoise => {}
        Experiment::SineNoise { omega } => {
            m.insert("omega".into(), (*omega).into());
        }
        Experiment::Logistic {
            noise_frac,
            transient,
        } => {
            m.insert("noise_frac".into(), (*noise_frac).into());
            m.insert("transient".into(), (*transient).into());
        }
        Experiment::Lorenz { template } => {
            m.insert(
                "lorenz".into(),
                serde_json::to_value(template).unwrap_or(serde_json::Value::Null),
            );
        }
    }
    m
}
