//! Test signals, normalization and file ingestion.
//!
//! All generators are pure functions of their parameters and seed: the same
//! inputs give bitwise-identical samples on every platform.

use std::fs;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Minimum number of samples in any series.
pub const MIN_LENGTH: usize = 2;

/// A range this small relative to the series magnitude is treated as constant.
const DEGENERATE_RELATIVE_RANGE: f64 = 1e-12;

/// Tolerance for a noise-free logistic orbit leaving the unit interval.
const LOGISTIC_DOMAIN_TOLERANCE: f64 = 1e-12;

/// Any Lorenz coordinate beyond this magnitude counts as divergence.
pub const LORENZ_DIVERGENCE: f64 = 1e6;

/// Ordered scalar samples with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    seed: Option<u64>,
    normalized: bool,
    source: String,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if values.len() < MIN_LENGTH {
            return Err(Error::InvalidLength {
                len: values.len(),
                min: MIN_LENGTH,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(
                "values",
                format!("sample {i} is not finite ({})", values[i]),
            ));
        }
        Ok(Self {
            values,
            seed: None,
            normalized: false,
            source: source.into(),
        })
    }

    fn generated(values: Vec<f64>, source: String, seed: u64) -> Self {
        Self {
            values,
            seed: Some(seed),
            normalized: false,
            source,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Contiguous sub-series `[start, start + len)`, keeping the metadata.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if len < MIN_LENGTH {
            return Err(Error::InvalidLength {
                len,
                min: MIN_LENGTH,
            });
        }
        let end = start + len;
        if end > self.values.len() {
            return Err(Error::InvalidWindow {
                window: end,
                len: self.values.len(),
            });
        }
        Ok(Self {
            values: self.values[start..end].to_vec(),
            seed: self.seed,
            normalized: false,
            source: format!("{}[{start}..{end}]", self.source),
        })
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Non-fatal conditions reported alongside a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Warning {
    /// The series has no spread; it was mapped to a constant 0.5.
    DegenerateSeries,
}

/// Affine min-max rescale onto `[0, 1]`.
///
/// A series whose range vanishes (up to a relative `1e-12` of its magnitude,
/// which also catches fixed points carrying only rounding noise) maps to a
/// constant 0.5 and yields [`Warning::DegenerateSeries`].
pub fn normalize(series: &TimeSeries) -> (TimeSeries, Option<Warning>) {
    let (min, max) = series
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = max - min;
    let scale = min.abs().max(max.abs());
    let mut out = series.clone();
    out.normalized = true;
    if range <= DEGENERATE_RELATIVE_RANGE * scale {
        log::warn!(
            "series `{}` is constant (range {range:e}); normalized to 0.5",
            series.source
        );
        out.values.iter_mut().for_each(|v| *v = 0.5);
        return (out, Some(Warning::DegenerateSeries));
    }
    if min == 0.0 && max == 1.0 {
        return (out, None);
    }
    out.values.iter_mut().for_each(|v| *v = (*v - min) / range);
    (out, None)
}

fn check_length(n: usize) -> Result<()> {
    if n < MIN_LENGTH {
        Err(Error::InvalidLength {
            len: n,
            min: MIN_LENGTH,
        })
    } else {
        Ok(())
    }
}

/// `n` independent uniform samples in `[0, 1)`.
pub fn gen_white_noise(n: usize, seed: u64) -> Result<TimeSeries> {
    check_length(n)?;
    let mut rng = rng::seeded(seed);
    let values = (0..n).map(|_| rng.random::<f64>()).collect();
    Ok(TimeSeries::generated(values, "white_noise".into(), seed))
}

/// `y(t) = sin(omega t) + p u(t)` for integer `t`, with a fresh uniform
/// `u(t)` in `[0, 1)` per sample. The noise draws do not depend on `p`, so a
/// sweep over `p` with one seed perturbs a single noise realisation.
pub fn gen_sine_noise(n: usize, omega: f64, p: f64, seed: u64) -> Result<TimeSeries> {
    check_length(n)?;
    if omega == 0.0 || !omega.is_finite() {
        return Err(Error::param("omega", "must be finite and non-zero"));
    }
    if !p.is_finite() || p < 0.0 {
        return Err(Error::param(
            "p",
            format!("must be finite and >= 0, got {p}"),
        ));
    }
    let mut rng = rng::seeded(seed);
    let values = (0..n)
        .map(|t| {
            let u = rng.random::<f64>();
            (omega * t as f64).sin() + p * u
        })
        .collect();
    Ok(TimeSeries::generated(
        values,
        format!("sine_noise(omega={omega},p={p})"),
        seed,
    ))
}

/// Parameters of the (optionally noisy) logistic map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub r: f64,
    /// Samples kept after the transient.
    pub length: usize,
    pub transient: usize,
    /// Half-width of the additive uniform noise applied at every iteration.
    pub noise_frac: f64,
    /// Overrides the seeded initial condition.
    pub initial: Option<f64>,
}

impl LogisticParams {
    pub fn new(r: f64, length: usize) -> Self {
        Self {
            r,
            length,
            transient: 0,
            noise_frac: 0.0,
            initial: None,
        }
    }

    pub fn transient(mut self, transient: usize) -> Self {
        self.transient = transient;
        self
    }

    pub fn noise(mut self, noise_frac: f64) -> Self {
        self.noise_frac = noise_frac;
        self
    }

    pub fn initial(mut self, x0: f64) -> Self {
        self.initial = Some(x0);
        self
    }
}

/// Iterates `x -> r x (1 - x) + noise_frac (2u - 1)`, clamped to `[0, 1]`.
///
/// The initial state is drawn uniformly from `(0, 1)` unless overridden; the
/// first kept sample is the state after `transient` iterations.
pub fn gen_logistic(params: &LogisticParams, seed: u64) -> Result<TimeSeries> {
    let LogisticParams {
        r,
        length,
        transient,
        noise_frac,
        initial,
    } = *params;
    check_length(length)?;
    if !(r > 0.0 && r <= 4.0) {
        return Err(Error::param("r", format!("must lie in (0, 4], got {r}")));
    }
    if !noise_frac.is_finite() || noise_frac < 0.0 {
        return Err(Error::param(
            "noise_frac",
            format!("must be finite and >= 0, got {noise_frac}"),
        ));
    }
    let mut rng = rng::seeded(seed);
    let mut x = match initial {
        Some(x0) if x0 > 0.0 && x0 < 1.0 => x0,
        Some(x0) => return Err(Error::param("x0", format!("must lie in (0, 1), got {x0}"))),
        None => loop {
            let u = rng.random::<f64>();
            if u > 0.0 {
                break u;
            }
        },
    };
    let mut values = Vec::with_capacity(length);
    for iteration in 0..transient + length {
        if iteration >= transient {
            values.push(x);
        }
        let mut next = r * x * (1.0 - x);
        if noise_frac > 0.0 {
            next += noise_frac * (2.0 * rng.random::<f64>() - 1.0);
        } else if !(-LOGISTIC_DOMAIN_TOLERANCE..=1.0 + LOGISTIC_DOMAIN_TOLERANCE).contains(&next) {
            return Err(Error::NumericDomain {
                iteration: iteration + 1,
                value: next,
            });
        }
        x = next.clamp(0.0, 1.0);
    }
    Ok(TimeSeries::generated(
        values,
        format!("logistic(r={r},noise={noise_frac})"),
        seed,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LorenzComponent {
    X,
    Y,
    Z,
}

impl LorenzComponent {
    fn index(self) -> usize {
        match self {
            LorenzComponent::X => 0,
            LorenzComponent::Y => 1,
            LorenzComponent::Z => 2,
        }
    }
}

impl std::str::FromStr for LorenzComponent {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "x" => Ok(Self::X),
            "y" => Ok(Self::Y),
            "z" => Ok(Self::Z),
            other => Err(format!("expected one of x, y, z; got `{other}`")),
        }
    }
}

/// Lorenz system parameters and the fixed-step integration schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorenzParams {
    /// Rayleigh number.
    pub r: f64,
    /// Prandtl number.
    pub sigma: f64,
    pub b: f64,
    /// RK4 step in time units.
    pub h: f64,
    pub transient_steps: usize,
    /// Integration steps kept after the transient (before decimation).
    pub keep_steps: usize,
    /// Keep every `stride`-th step.
    pub stride: usize,
    pub component: LorenzComponent,
}

impl Default for LorenzParams {
    /// Desk-scale schedule: `h = 1e-3`, 200 time units of transient and
    /// 100 time units kept at stride 100, i.e. 1000 samples.
    fn default() -> Self {
        Self {
            r: 28.0,
            sigma: 10.0,
            b: 8.0 / 3.0,
            h: 1e-3,
            transient_steps: 200_000,
            keep_steps: 100_000,
            stride: 100,
            component: LorenzComponent::X,
        }
    }
}

impl LorenzParams {
    pub fn with_r(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    /// Number of samples produced after decimation.
    pub fn sample_count(&self) -> usize {
        self.keep_steps.div_ceil(self.stride.max(1))
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("r", self.r), ("sigma", self.sigma), ("b", self.b)] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if !self.h.is_finite() || self.h <= 0.0 {
            return Err(Error::param("h", format!("must be > 0, got {}", self.h)));
        }
        if self.stride == 0 {
            return Err(Error::param("stride", "must be >= 1"));
        }
        if self.keep_steps < MIN_LENGTH || self.sample_count() < MIN_LENGTH {
            return Err(Error::param(
                "keep_steps",
                format!(
                    "{} steps at stride {} leave fewer than {MIN_LENGTH} samples",
                    self.keep_steps, self.stride
                ),
            ));
        }
        Ok(())
    }
}

/// Decimated Lorenz states plus the successive local maxima of `z`
/// (detected at full integration resolution over the kept interval).
#[derive(Debug, Clone)]
pub struct LorenzTrajectory {
    pub states: Vec<[f64; 3]>,
    pub z_maxima: Vec<f64>,
}

fn lorenz_field(p: &LorenzParams, s: [f64; 3]) -> [f64; 3] {
    let [x, y, z] = s;
    [p.sigma * (y - x), x * (p.r - z) - y, x * y - p.b * z]
}

fn rk4_step(p: &LorenzParams, s: [f64; 3]) -> [f64; 3] {
    let h = p.h;
    let add =
        |a: [f64; 3], k: [f64; 3], f: f64| [a[0] + f * k[0], a[1] + f * k[1], a[2] + f * k[2]];
    let k1 = lorenz_field(p, s);
    let k2 = lorenz_field(p, add(s, k1, h / 2.0));
    let k3 = lorenz_field(p, add(s, k2, h / 2.0));
    let k4 = lorenz_field(p, add(s, k3, h));
    [
        s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        s[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

/// Integrates `x' = sigma (y - x)`, `y' = x (r - z) - y`, `z' = x y - b z`
/// with classical RK4 from `(1, 1, 1)` plus a seeded jitter in `[-1e-3, 1e-3]`.
pub fn lorenz_trajectory(params: &LorenzParams, seed: u64) -> Result<LorenzTrajectory> {
    params.validate()?;
    let mut rng = rng::seeded(seed);
    let mut s = [0.0; 3];
    for c in s.iter_mut() {
        *c = 1.0 + 1e-3 * (2.0 * rng.random::<f64>() - 1.0);
    }
    let diverged = |s: &[f64; 3]| s.iter().any(|c| c.is_nan() || c.abs() > LORENZ_DIVERGENCE);

    for step in 0..params.transient_steps {
        s = rk4_step(params, s);
        if diverged(&s) {
            return Err(Error::NumericOverflow { step: step + 1 });
        }
    }

    let mut states = Vec::with_capacity(params.sample_count());
    let mut z_maxima = Vec::new();
    let (mut z_prev2, mut z_prev) = (f64::NAN, f64::NAN);
    for k in 0..params.keep_steps {
        if k % params.stride == 0 {
            states.push(s);
        }
        if z_prev > z_prev2 && z_prev > s[2] {
            z_maxima.push(z_prev);
        }
        z_prev2 = z_prev;
        z_prev = s[2];
        s = rk4_step(params, s);
        if diverged(&s) {
            return Err(Error::NumericOverflow {
                step: params.transient_steps + k + 1,
            });
        }
    }
    Ok(LorenzTrajectory { states, z_maxima })
}

/// One component of a Lorenz trajectory as a series.
pub fn gen_lorenz(params: &LorenzParams, seed: u64) -> Result<TimeSeries> {
    let traj = lorenz_trajectory(params, seed)?;
    Ok(lorenz_series(params, &traj, seed))
}

pub(crate) fn lorenz_series(
    params: &LorenzParams,
    traj: &LorenzTrajectory,
    seed: u64,
) -> TimeSeries {
    let idx = params.component.index();
    let values = traj.states.iter().map(|s| s[idx]).collect();
    TimeSeries::generated(
        values,
        format!("lorenz(r={},component={:?})", params.r, params.component),
        seed,
    )
}

/// Reads one numeric column from a delimited text file.
///
/// Fields are separated by commas, semicolons, tabs or spaces. Blank lines
/// are skipped; any other line must carry a parseable number at `column`.
pub fn ingest_csv(path: impl AsRef<Path>, column: usize) -> Result<TimeSeries> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let field = trimmed
            .split([',', ';', '\t', ' '])
            .filter(|f| !f.is_empty())
            .nth(column)
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("no column {column}"),
            })?;
        let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: format!("cannot parse `{field}` as a number"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("non-finite value `{field}`"),
            });
        }
        values.push(v);
    }
    check_length(values.len())?;
    TimeSeries::new(values, path.display().to_string())
}
