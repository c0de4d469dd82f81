//! Command implementations. Configuration problems surface as
//! [`ConfigError`]; everything else is a runtime failure.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use microstate_rqa::experiments::{
    self, Experiment, SweepResult, SweepSettings, DEFAULT_BIFURCATION_SAMPLES, DEFAULT_EPSILON,
    DEFAULT_LENGTH, DEFAULT_LOGISTIC_TRANSIENT, DEFAULT_OMEGA, DEFAULT_SAMPLES, LORENZ_SAMPLES,
};
use microstate_rqa::microstates::{
    exhaustive_microstates, EntropyReport, MicrostateSampler, DEFAULT_PARTITIONS, MAX_SIDE,
    MIN_SIDE,
};
use microstate_rqa::recurrence::{build_rp, recurrence_rate, windows};
use microstate_rqa::rqa::{DEFAULT_L_MIN, DEFAULT_V_MIN};
use microstate_rqa::signals::{
    gen_logistic, gen_lorenz, gen_sine_noise, gen_white_noise, ingest_csv, LogisticParams,
};
use microstate_rqa::{LorenzParams, Norm, RecurrencePlot, RqaSummary, TimeSeries, WindowSpec};
use serde::Serialize;

use crate::config::{
    parse_grid, CliSection, ConfigError, ExperimentKind, ExperimentSection, MicrostateSection,
    RecurrenceSection, RqaSection, SignalKind, SignalSection,
};

/// Failure of one command, mapped to exit status 2 or 1.
#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<anyhow::Error> for RunError {
    fn from(e: anyhow::Error) -> Self {
        RunError::Runtime(e)
    }
}

impl From<microstate_rqa::Error> for RunError {
    fn from(e: microstate_rqa::Error) -> Self {
        RunError::Runtime(e.into())
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Runtime(e.into())
    }
}

pub type RunResult<T = ()> = Result<T, RunError>;

fn check(ok: bool, key: &str, message: impl Into<String>) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::new(key, message))
    }
}

fn epsilon(rec: &RecurrenceSection) -> Result<f64, ConfigError> {
    let e = rec.epsilon.unwrap_or(DEFAULT_EPSILON);
    check(
        e > 0.0 && e <= 1.0,
        "recurrence.epsilon",
        format!("{e} is outside (0, 1]"),
    )?;
    Ok(e)
}

fn norm(rec: &RecurrenceSection) -> Result<Norm, ConfigError> {
    let dim = rec.embed_dim.unwrap_or(1);
    let delay = rec.delay.unwrap_or(1);
    check(dim >= 1, "recurrence.embed_dim", "must be >= 1")?;
    check(delay >= 1, "recurrence.delay", "must be >= 1")?;
    Ok(if dim == 1 {
        Norm::Absolute
    } else {
        Norm::Embedded { dim, delay }
    })
}

fn side(n: usize) -> Result<usize, ConfigError> {
    check(
        (MIN_SIDE..=MAX_SIDE).contains(&n),
        "microstates.n",
        format!("side {n} is outside [{MIN_SIDE}, {MAX_SIDE}]"),
    )?;
    Ok(n)
}

fn positive<T: PartialOrd + Default + Copy>(v: T, key: &str) -> Result<T, ConfigError> {
    check(v > T::default(), key, "must be positive")?;
    Ok(v)
}

fn lorenz_template(sig: &SignalSection, length: usize) -> Result<LorenzParams, ConfigError> {
    let d = LorenzParams::default();
    let stride = positive(sig.stride.unwrap_or(d.stride), "signals.stride")?;
    let dt = sig.dt.unwrap_or(d.h);
    check(
        dt > 0.0 && dt.is_finite(),
        "signals.dt",
        format!("{dt} must be a positive step"),
    )?;
    Ok(LorenzParams {
        r: sig.r.unwrap_or(d.r),
        sigma: sig.sigma.unwrap_or(d.sigma),
        b: sig.b.unwrap_or(d.b),
        h: dt,
        transient_steps: sig.transient.unwrap_or(d.transient_steps),
        keep_steps: length * stride,
        stride,
        component: sig.component.unwrap_or(d.component),
    })
}

fn noise_frac(sig: &SignalSection) -> Result<f64, ConfigError> {
    let noise = sig.noise.unwrap_or(0.0);
    check(
        (0.0..1.0).contains(&noise),
        "signals.noise",
        format!("{noise} is outside [0, 1)"),
    )?;
    Ok(noise)
}

/// The series named by `[signals]`: the input file if any, else a generator.
fn load_series(sig: &SignalSection, seed: u64) -> RunResult<TimeSeries> {
    if let Some(path) = &sig.input {
        let column = sig.column.unwrap_or(0);
        return Ok(ingest_csv(path, column)
            .with_context(|| format!("reading column {column} of {}", path.display()))?);
    }
    let length = sig.length.unwrap_or(DEFAULT_LENGTH);
    check(length >= 2, "signals.length", "must be >= 2")?;
    let series = match sig.signal.unwrap_or(SignalKind::White) {
        SignalKind::White => gen_white_noise(length, seed)?,
        SignalKind::Sine => {
            let p = sig.p.unwrap_or(0.0);
            check(p >= 0.0, "signals.p", "must be >= 0")?;
            gen_sine_noise(length, sig.omega.unwrap_or(DEFAULT_OMEGA), p, seed)?
        }
        SignalKind::Logistic => {
            let r = sig.r.unwrap_or(4.0);
            check(
                r > 0.0 && r <= 4.0,
                "signals.r",
                format!("{r} is outside (0, 4]"),
            )?;
            let params = LogisticParams::new(r, length)
                .transient(sig.transient.unwrap_or(DEFAULT_LOGISTIC_TRANSIENT))
                .noise(noise_frac(sig)?);
            gen_logistic(&params, seed)?
        }
        SignalKind::Lorenz => gen_lorenz(&lorenz_template(sig, length)?, seed)?,
    };
    Ok(series)
}

/// Opens `path` for writing, or stdout when unset.
fn sink(path: Option<&Path>, force: bool) -> RunResult<Box<dyn Write>> {
    match path {
        Some(p) => {
            guard(p, force)?;
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn guard(path: &Path, force: bool) -> RunResult {
    if path.exists() && !force {
        return Err(RunError::Runtime(anyhow!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    Ok(())
}

/// One summary line per output. Goes to stderr when the data itself went
/// to stdout.
fn summary(to_stdout: bool, line: String) {
    if to_stdout {
        eprintln!("{line}");
    } else {
        println!("{line}");
    }
}

pub fn gen(cli: &CliSection, sig: &SignalSection) -> RunResult {
    let series = load_series(sig, cli.seed.unwrap_or(0))?;
    let force = cli.force.unwrap_or(false);
    let mut out = sink(cli.output.as_deref(), force)?;
    for v in series.values() {
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    summary(
        cli.output.is_none(),
        format!(
            "gen: {} samples of {} -> {}",
            series.len(),
            series.source(),
            describe(cli.output.as_deref())
        ),
    );
    Ok(())
}

fn describe(path: Option<&Path>) -> String {
    path.map_or_else(|| "stdout".into(), |p| p.display().to_string())
}

fn plot(
    cli: &CliSection,
    sig: &SignalSection,
    rec: &RecurrenceSection,
) -> RunResult<RecurrencePlot> {
    let series = load_series(sig, cli.seed.unwrap_or(0))?;
    Ok(build_rp(&series, epsilon(rec)?, norm(rec)?)?)
}

pub fn rp(cli: &CliSection, sig: &SignalSection, rec: &RecurrenceSection) -> RunResult {
    let rp = plot(cli, sig, rec)?;
    println!(
        "rp: K={} epsilon={} RR={}",
        rp.size(),
        rp.epsilon(),
        recurrence_rate(&rp)
    );
    if let Some(path) = &rec.export_pbm {
        let mut out = sink(Some(path), cli.force.unwrap_or(false))?;
        rp.write_pbm(&mut out)?;
        out.flush()?;
        println!(
            "rp: wrote {}x{} bitmap to {}",
            rp.size(),
            rp.size(),
            path.display()
        );
    }
    Ok(())
}

pub fn rqa(
    cli: &CliSection,
    sig: &SignalSection,
    rec: &RecurrenceSection,
    q: &RqaSection,
) -> RunResult {
    let series = load_series(sig, cli.seed.unwrap_or(0))?;
    let eps = epsilon(rec)?;
    let norm = norm(rec)?;
    let l_min = positive(q.l_min.unwrap_or(DEFAULT_L_MIN), "rqa.l_min")?;
    let v_min = positive(q.v_min.unwrap_or(DEFAULT_V_MIN), "rqa.v_min")?;

    let (starts, pieces) = match q.window {
        Some(size) => {
            let step = q.window_step.unwrap_or(size);
            let spec = WindowSpec::new(size, step)
                .map_err(|e| ConfigError::new("rqa.window", e.to_string()))?;
            let pieces = windows(&series, spec)?;
            let starts: Vec<usize> = (0..pieces.len()).map(|i| i * step).collect();
            (starts, pieces)
        }
        None => (vec![0], vec![series]),
    };

    let mut out = sink(cli.output.as_deref(), cli.force.unwrap_or(false))?;
    writeln!(out, "start,{}", RqaSummary::CSV_HEADER)?;
    for (start, piece) in starts.iter().zip(&pieces) {
        let rp = build_rp(piece, eps, norm)?;
        writeln!(
            out,
            "{start},{}",
            RqaSummary::compute(&rp, l_min, v_min).to_csv_row()
        )?;
    }
    out.flush()?;
    summary(
        cli.output.is_none(),
        format!(
            "rqa: {} row(s) -> {}",
            pieces.len(),
            describe(cli.output.as_deref())
        ),
    );
    Ok(())
}

#[derive(Serialize)]
struct EntropyOutput {
    epsilon: f64,
    rr: f64,
    exhaustive: bool,
    seed: Option<u64>,
    #[serde(flatten)]
    report: EntropyReport,
}

pub fn entropy(
    cli: &CliSection,
    sig: &SignalSection,
    rec: &RecurrenceSection,
    ms: &MicrostateSection,
) -> RunResult {
    let n = match ms.n.as_deref() {
        None => 4,
        Some([n]) => side(*n)?,
        Some(_) => {
            return Err(ConfigError::new("microstates.n", "entropy takes a single side").into())
        }
    };
    let samples = positive(ms.samples.unwrap_or(DEFAULT_SAMPLES), "microstates.samples")?;
    let partitions = positive(
        ms.partitions.unwrap_or(DEFAULT_PARTITIONS),
        "microstates.partitions",
    )?;
    let exhaustive = ms.exhaustive.unwrap_or(false);
    let seed = cli.seed.unwrap_or(0);
    let force = cli.force.unwrap_or(false);

    let rp = plot(cli, sig, rec)?;
    let hist = if exhaustive {
        exhaustive_microstates(&rp, n)?
    } else {
        MicrostateSampler::new(n, samples, seed)
            .partitions(partitions)
            .sample(&rp)?
    };
    let report = EntropyOutput {
        epsilon: rp.epsilon(),
        rr: recurrence_rate(&rp),
        exhaustive,
        seed: hist.seed,
        report: EntropyReport::from_histogram(&hist),
    };

    let mut out = sink(cli.output.as_deref(), force)?;
    serde_json::to_writer_pretty(&mut out, &report).context("writing entropy JSON")?;
    writeln!(out)?;
    out.flush()?;
    summary(
        cli.output.is_none(),
        format!(
            "entropy: n={n} S={} S_max={} -> {}",
            report.report.entropy,
            report.report.s_max,
            describe(cli.output.as_deref())
        ),
    );
    if let Some(path) = &ms.histogram {
        let mut h = sink(Some(path), force)?;
        hist.write_csv(&mut h)?;
        h.flush()?;
        summary(
            cli.output.is_none(),
            format!(
                "entropy: {} occupied microstates -> {}",
                hist.occupied(),
                path.display()
            ),
        );
    }
    Ok(())
}

pub struct SweepArgs<'a> {
    pub cli: &'a CliSection,
    pub sig: &'a SignalSection,
    pub rec: &'a RecurrenceSection,
    pub rqa: &'a RqaSection,
    pub ms: &'a MicrostateSection,
    pub exp: &'a ExperimentSection,
}

/// Experiment, grid and settings described by the merged configuration.
pub fn sweep_plan(a: &SweepArgs) -> Result<(Experiment, Vec<f64>, SweepSettings), ConfigError> {
    let kind = a
        .exp
        .experiment
        .ok_or_else(|| ConfigError::new("experiments.experiment", "no experiment selected"))?;
    let length = a.sig.length.unwrap_or(DEFAULT_LENGTH);
    check(length >= 2, "signals.length", "must be >= 2")?;
    let experiment = match kind {
        ExperimentKind::WhiteNoise => Experiment::WhiteNoise,
        ExperimentKind::Sine => Experiment::SineNoise {
            omega: a.sig.omega.unwrap_or(DEFAULT_OMEGA),
        },
        ExperimentKind::Logistic => Experiment::Logistic {
            noise_frac: noise_frac(a.sig)?,
            transient: a.sig.transient.unwrap_or(DEFAULT_LOGISTIC_TRANSIENT),
        },
        ExperimentKind::Lorenz => Experiment::Lorenz {
            template: lorenz_template(a.sig, length)?,
        },
    };
    let grid = match &a.exp.grid {
        Some(text) => parse_grid(text)?,
        None => experiment.default_grid(),
    };
    let n_list = match &a.ms.n {
        Some(list) if list.is_empty() => {
            return Err(ConfigError::new(
                "microstates.n",
                "at least one side is required",
            ))
        }
        Some(list) => list.iter().map(|&n| side(n)).collect::<Result<_, _>>()?,
        None => vec![2, 3, 4],
    };
    let default_samples = if kind == ExperimentKind::Lorenz {
        LORENZ_SAMPLES
    } else {
        DEFAULT_SAMPLES
    };
    let settings = SweepSettings {
        n_list,
        length,
        samples: positive(
            a.ms.samples.unwrap_or(default_samples),
            "microstates.samples",
        )?,
        epsilon: epsilon(a.rec)?,
        seed: a.cli.seed.unwrap_or(0),
        replicates: positive(a.exp.replicates.unwrap_or(1), "experiments.replicates")?,
        partitions: positive(
            a.ms.partitions.unwrap_or(DEFAULT_PARTITIONS),
            "microstates.partitions",
        )?,
        l_min: positive(a.rqa.l_min.unwrap_or(DEFAULT_L_MIN), "rqa.l_min")?,
        v_min: positive(a.rqa.v_min.unwrap_or(DEFAULT_V_MIN), "rqa.v_min")?,
        bifurcation_samples: a
            .exp
            .bifurcation_samples
            .unwrap_or(DEFAULT_BIFURCATION_SAMPLES),
    };
    Ok((experiment, grid, settings))
}

pub fn sweep(a: &SweepArgs) -> RunResult {
    let (experiment, grid, settings) = sweep_plan(a)?;
    let out_dir = a
        .cli
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs"));
    let run_dir = out_dir.join(format!("{}-seed{}", experiment.id(), settings.seed));
    if run_dir.exists() {
        if !a.cli.force.unwrap_or(false) {
            return Err(RunError::Runtime(anyhow!(
                "{} exists; pass --force to overwrite",
                run_dir.display()
            )));
        }
        fs::remove_dir_all(&run_dir).with_context(|| format!("clearing {}", run_dir.display()))?;
    }

    let mut result = experiments::run_sweep(experiment, &grid, &settings)?;
    result.provenance.threads = Some(rayon::current_num_threads());

    fs::create_dir_all(&run_dir).with_context(|| format!("creating {}", run_dir.display()))?;
    write_outputs(&result, &run_dir)?;
    Ok(())
}

fn write_outputs(result: &SweepResult, dir: &Path) -> RunResult {
    let id = result.experiment.id();
    let csv_name = format!("{id}.csv");
    let write = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> anyhow::Result<()>| -> RunResult {
        let path = dir.join(name);
        let mut w = BufWriter::new(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        );
        f(&mut w)?;
        w.flush()?;
        Ok(())
    };

    write(&csv_name, &|w| Ok(result.write_csv(w)?))?;
    println!(
        "sweep: {} rows x {} columns -> {}",
        result.rows.len(),
        result.columns.len() + 1,
        dir.join(&csv_name).display()
    );
    write("provenance.json", &|w| {
        result.write_provenance(&mut *w)?;
        writeln!(w)?;
        Ok(())
    })?;
    println!(
        "sweep: provenance -> {}",
        dir.join("provenance.json").display()
    );
    if !result.bifurcation.is_empty() {
        write("bifurcation.csv", &|w| Ok(result.write_bifurcation_csv(w)?))?;
        println!(
            "sweep: {} bifurcation samples -> {}",
            result
                .bifurcation
                .iter()
                .map(|b| b.values.len())
                .sum::<usize>(),
            dir.join("bifurcation.csv").display()
        );
    }
    write("plot.gp", &|w| {
        Ok(w.write_all(result.gnuplot_script(&csv_name).as_bytes())?)
    })?;
    println!("sweep: gnuplot script -> {}", dir.join("plot.gp").display());
    Ok(())
}
