//! CSV, JSON and gnuplot output of sweep results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{experiment_params, Experiment, SweepResult, SweepSettings};

/// Sidecar describing how a sweep was produced. The timestamp lives only
/// here, never in the CSV, so CSV output is byte-reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub experiment: String,
    pub parameter: String,
    pub seed: u64,
    pub replicates: usize,
    pub length: usize,
    pub samples: u64,
    pub epsilon: f64,
    pub n_list: Vec<usize>,
    pub partitions: usize,
    pub l_min: usize,
    pub v_min: usize,
    pub grid: Vec<f64>,
    pub params: BTreeMap<String, serde_json::Value>,
    /// Worker threads; informational only.
    pub threads: Option<usize>,
    pub created_unix: u64,
    pub version: String,
}

impl Provenance {
    pub(super) fn new(experiment: &Experiment, grid: &[f64], settings: &SweepSettings) -> Self {
        Self {
            experiment: experiment.id().into(),
            parameter: experiment.parameter().into(),
            seed: settings.seed,
            replicates: settings.replicates,
            length: settings.length,
            samples: settings.samples,
            epsilon: settings.epsilon,
            n_list: settings.n_list.clone(),
            partitions: settings.partitions,
            l_min: settings.l_min,
            v_min: settings.v_min,
            grid: grid.to_vec(),
            params: experiment_params(experiment),
            threads: None,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

impl SweepResult {
    pub fn csv_header(&self) -> String {
        let mut h = self.parameter().to_string();
        for c in &self.columns {
            h.push(',');
            h.push_str(c);
        }
        h
    }

    /// Header plus one line per grid point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.csv_header())?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            write!(line, "{}", row.param).unwrap();
            for v in &row.values {
                write!(line, ",{v}").unwrap();
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// Long format: one `param,value` line per orbit sample.
    pub fn write_bifurcation_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{},value", self.parameter())?;
        for b in &self.bifurcation {
            for v in &b.values {
                writeln!(out, "{},{v}", b.param)?;
            }
        }
        Ok(())
    }

    pub fn write_provenance<W: Write>(&self, out: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(out, &self.provenance)
    }

    /// Gnuplot script plotting every entropy column against the parameter,
    /// reading `csv_name` relative to the script's directory.
    pub fn gnuplot_script(&self, csv_name: &str) -> String {
        let mut s = String::new();
        writeln!(s, "# {} sweep", self.experiment.id()).unwrap();
        writeln!(s, "set datafile separator ','").unwrap();
        writeln!(s, "set key autotitle columnhead").unwrap();
        writeln!(s, "set xlabel '{}'", self.parameter()).unwrap();
        writeln!(s, "set ylabel 'S'").unwrap();
        writeln!(s, "set terminal pngcairo size 900,600").unwrap();
        writeln!(s, "set output '{}.png'", self.experiment.id()).unwrap();
        let plots: Vec<String> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.starts_with('s') && !c.ends_with("_std"))
            .map(|(i, _)| format!("'{csv_name}' using 1:{} with lines", i + 2))
            .collect();
        writeln!(s, "plot {}", plots.join(", \\\n     ")).unwrap();
        s
    }
}
