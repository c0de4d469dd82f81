//! Run configuration: one section per module. Each section is both a set of
//! command-line flags and a table of the TOML config file, so every flag has
//! a file equivalent (`--l-min` is `l_min` under `[rqa]`). Flags and their
//! `MRQA_*` environment variables take precedence over the file.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use microstate_rqa::LorenzComponent;
use serde::Deserialize;

/// Invalid configuration; reported with exit status 2.
#[derive(Debug)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Declares a section whose fields are all optional so that a flag, the
/// file and the built-in default can be layered.
macro_rules! section {
    (
        $(#[$meta:meta])*
        $name:ident {
            $( $(#[$fmeta:meta])* $field:ident : $ty:ty, )*
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, Args, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $( $(#[$fmeta])* pub $field: Option<$ty>, )*
        }

        impl $name {
            /// Values set here win; unset ones fall back to `file`.
            pub fn or(self, file: Self) -> Self {
                Self { $( $field: self.$field.or(file.$field), )* }
            }
        }
    };
}

section! {
    /// `[cli]`
    CliSection {
        /// Worker threads for the parallel pool [cli.threads]
        #[arg(long, global = true, env = "MRQA_THREADS")]
        threads: usize,
        /// Master seed for generators, samplers and sweeps [cli.seed]
        #[arg(long, global = true, env = "MRQA_SEED")]
        seed: u64,
        /// Parent directory of sweep run directories [cli.out_dir]
        #[arg(long, global = true, env = "MRQA_OUT_DIR")]
        out_dir: PathBuf,
        /// Output file for gen, rqa and entropy; stdout when unset [cli.output]
        #[arg(long, short, global = true, env = "MRQA_OUTPUT")]
        output: PathBuf,
        /// Overwrite existing outputs [cli.force]
        #[arg(long, global = true, env = "MRQA_FORCE", num_args = 0..=1, default_missing_value = "true")]
        force: bool,
    }
}

section! {
    /// `[signals]`
    SignalSection {
        /// Read the series from this delimited text file [signals.input]
        #[arg(long, env = "MRQA_INPUT")]
        input: PathBuf,
        /// Zero-based column of the input file [signals.column]
        #[arg(long, env = "MRQA_COLUMN")]
        column: usize,
        /// Generator used when no input file is given [signals.signal]
        #[arg(long, env = "MRQA_SIGNAL")]
        signal: SignalKind,
        /// Series length M [signals.length]
        #[arg(long, env = "MRQA_LENGTH")]
        length: usize,
        /// Sine angular frequency [signals.omega]
        #[arg(long, env = "MRQA_OMEGA")]
        omega: f64,
        /// Sine noise amplitude [signals.p]
        #[arg(long, env = "MRQA_P")]
        p: f64,
        /// Logistic or Lorenz control parameter [signals.r]
        #[arg(long, env = "MRQA_R")]
        r: f64,
        /// Logistic additive noise, as a fraction of the unit amplitude [signals.noise]
        #[arg(long, env = "MRQA_NOISE")]
        noise: f64,
        /// Discarded logistic iterations or Lorenz integration steps [signals.transient]
        #[arg(long, env = "MRQA_TRANSIENT")]
        transient: usize,
        /// Lorenz component to record: x, y or z [signals.component]
        #[arg(long, env = "MRQA_COMPONENT")]
        component: LorenzComponent,
        /// Lorenz Prandtl number [signals.sigma]
        #[arg(long, env = "MRQA_SIGMA")]
        sigma: f64,
        /// Lorenz geometric factor [signals.b]
        #[arg(long, env = "MRQA_B")]
        b: f64,
        /// Lorenz RK4 step [signals.dt]
        #[arg(long, env = "MRQA_DT")]
        dt: f64,
        /// Keep every stride-th Lorenz step [signals.stride]
        #[arg(long, env = "MRQA_STRIDE")]
        stride: usize,
    }
}

section! {
    /// `[recurrence]`
    RecurrenceSection {
        /// Recurrence threshold on the normalized series [recurrence.epsilon]
        #[arg(long, env = "MRQA_EPSILON")]
        epsilon: f64,
        /// Delay-embedding dimension; 1 compares scalars [recurrence.embed_dim]
        #[arg(long, env = "MRQA_EMBED_DIM")]
        embed_dim: usize,
        /// Delay-embedding lag [recurrence.delay]
        #[arg(long, env = "MRQA_DELAY")]
        delay: usize,
        /// Write the plot as a PBM bitmap [recurrence.export_pbm]
        #[arg(long, env = "MRQA_EXPORT_PBM")]
        export_pbm: PathBuf,
    }
}

section! {
    /// `[rqa]`
    RqaSection {
        /// Minimum diagonal line length [rqa.l_min]
        #[arg(long, env = "MRQA_L_MIN")]
        l_min: usize,
        /// Minimum vertical line length [rqa.v_min]
        #[arg(long, env = "MRQA_V_MIN")]
        v_min: usize,
        /// Sliding-window size; whole series when unset [rqa.window]
        #[arg(long, env = "MRQA_WINDOW")]
        window: usize,
        /// Sliding-window step [rqa.window_step]
        #[arg(long, env = "MRQA_WINDOW_STEP")]
        window_step: usize,
    }
}

section! {
    /// `[microstates]`
    MicrostateSection {
        /// Microstate side(s), comma separated [microstates.n]
        #[arg(long, value_delimiter = ',', env = "MRQA_N")]
        n: Vec<usize>,
        /// Number of sampled blocks N [microstates.samples]
        #[arg(long, env = "MRQA_SAMPLES")]
        samples: u64,
        /// Sampler partitions; part of the reproducibility key [microstates.partitions]
        #[arg(long, env = "MRQA_PARTITIONS")]
        partitions: usize,
        /// Count every block placement instead of sampling [microstates.exhaustive]
        #[arg(long, env = "MRQA_EXHAUSTIVE", num_args = 0..=1, default_missing_value = "true")]
        exhaustive: bool,
        /// Also write the microstate histogram as CSV [microstates.histogram]
        #[arg(long, env = "MRQA_HISTOGRAM")]
        histogram: PathBuf,
    }
}

section! {
    /// `[experiments]`
    ExperimentSection {
        /// Sweep to run [experiments.experiment]
        #[arg(long, env = "MRQA_EXPERIMENT")]
        experiment: ExperimentKind,
        /// Parameter grid as start:stop:step; experiment default when unset [experiments.grid]
        #[arg(long, env = "MRQA_GRID")]
        grid: String,
        /// Independent series averaged per grid point [experiments.replicates]
        #[arg(long, env = "MRQA_REPLICATES")]
        replicates: usize,
        /// Orbit samples kept per grid point for the bifurcation table [experiments.bifurcation_samples]
        #[arg(long, env = "MRQA_BIFURCATION_SAMPLES")]
        bifurcation_samples: usize,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    White,
    Sine,
    Logistic,
    Lorenz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ExperimentKind {
    WhiteNoise,
    Sine,
    Logistic,
    Lorenz,
}

/// Contents of a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub cli: CliSection,
    pub signals: SignalSection,
    pub recurrence: RecurrenceSection,
    pub rqa: RqaSection,
    pub microstates: MicrostateSection,
    pub experiments: ExperimentSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError {
            message: format!("{}: {}", path.display(), e.message),
            ..e
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let key = e
                .span()
                .and_then(|span| key_at(text, span.start))
                .or_else(|| quoted_name(&message))
                .unwrap_or_else(|| "config".into());
            ConfigError::new(key, message)
        })
    }
}

/// `section.key` of the assignment on the line holding byte `offset`.
fn key_at(text: &str, offset: usize) -> Option<String> {
    let before = &text[..offset.min(text.len())];
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next()?;
    let (key, _) = line.split_once('=')?;
    let section = before[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim());
    let key = key.trim().trim_matches('"');
    Some(match section {
        Some(s) => format!("{s}.{key}"),
        None => key.to_string(),
    })
}

/// Pulls the name out of serde's "unknown field `x`" style messages.
fn quoted_name(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

/// Parses `start:stop:step`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = |msg: String| ConfigError::new("experiments.grid", msg);
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(bad(format!("expected start:stop:step, got `{text}`")));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("`{s}` is not a number")))
    };
    microstate_rqa::experiments::grid(num(start)?, num(stop)?, num(step)?)
        .map_err(|e| bad(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_sections_parse() {
        let cfg = FileConfig::parse(
            "[recurrence]\nepsilon = 0.2\n[microstates]\nn = [2, 3]\n[experiments]\nexperiment = \"white_noise\"\ngrid = \"0.1:0.3:0.1\"\n",
        )
        .unwrap();
        assert_eq!(cfg.recurrence.epsilon, Some(0.2));
        assert_eq!(cfg.microstates.n, Some(vec![2, 3]));
        assert_eq!(cfg.experiments.experiment, Some(ExperimentKind::WhiteNoise));
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = FileConfig::parse("[rqa]\nlmin = 2\n").unwrap_err();
        assert_eq!(e.key, "rqa.lmin");
        let e =
            FileConfig::parse("[cli]\nseed = 1\n\n[recurrence]\nepsilon = \"big\"\n").unwrap_err();
        assert_eq!(e.key, "recurrence.epsilon");
        let e = FileConfig::parse("[bogus]\nx = 1\n").unwrap_err();
        assert_eq!(e.key, "bogus");
    }

    #[test]
    fn flags_win_over_file() {
        let flags = RqaSection {
            l_min: Some(3),
            ..Default::default()
        };
        let file = RqaSection {
            l_min: Some(5),
            v_min: Some(4),
            ..Default::default()
        };
        let merged = flags.or(file);
        assert_eq!((merged.l_min, merged.v_min), (Some(3), Some(4)));
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:0.5").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0:1").unwrap_err().key, "experiments.grid");
        assert!(parse_grid("1:0:0.1").is_err());
    }
}
