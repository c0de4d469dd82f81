//! Line-length distributions and the classic recurrence quantifiers.
//!
//! Conventions:
//! * diagonal statistics exclude the line of identity and count both
//!   triangles;
//! * vertical statistics and RR include the line of identity;
//! * runs touching the matrix border count at their truncated length.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::recurrence::{recurrence_rate, RecurrencePlot};

/// Default minimal diagonal line length.
pub const DEFAULT_L_MIN: usize = 2;
/// Default minimal vertical line length.
pub const DEFAULT_V_MIN: usize = 2;

/// DIV reported when a plot has no off-identity diagonal line at all.
pub const DIV_NO_LINES: f64 = f64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineKind {
    Diagonal,
    Vertical,
}

/// Histogram of maximal line lengths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineDistribution {
    pub kind: LineKind,
    pub counts: BTreeMap<usize, u64>,
    pub size: usize,
}

impl LineDistribution {
    fn new(kind: LineKind, size: usize) -> Self {
        Self {
            kind,
            counts: BTreeMap::new(),
            size,
        }
    }

    #[inline]
    fn record(&mut self, len: usize, times: u64) {
        *self.counts.entry(len).or_insert(0) += times;
    }

    pub fn count(&self, len: usize) -> u64 {
        self.counts.get(&len).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Longest line present.
    pub fn max_len(&self) -> Option<usize> {
        self.counts.keys().next_back().copied()
    }

    /// `sum l * P(l)` over `l >= min_len`.
    pub fn points_from(&self, min_len: usize) -> u64 {
        self.counts
            .range(min_len..)
            .map(|(&l, &c)| l as u64 * c)
            .sum()
    }
}

/// Maximal runs along every diagonal parallel to the line of identity.
pub fn diagonal_dist(rp: &RecurrencePlot) -> LineDistribution {
    let k = rp.size();
    let mut dist = LineDistribution::new(LineKind::Diagonal, k);
    // Upper triangle only; the lower one mirrors it.
    for offset in 1..k {
        let mut run = 0usize;
        for i in 0..k - offset {
            if rp.get(i, i + offset) {
                run += 1;
            } else if run > 0 {
                dist.record(run, 2);
                run = 0;
            }
        }
        if run > 0 {
            dist.record(run, 2);
        }
    }
    dist
}

/// Maximal vertical runs per column, read from the rows by symmetry.
pub fn vertical_dist(rp: &RecurrencePlot) -> LineDistribution {
    let k = rp.size();
    let mut dist = LineDistribution::new(LineKind::Vertical, k);
    for i in 0..k {
        let mut run = 0usize;
        for (w, &word) in rp.row(i).iter().enumerate() {
            let valid = (k - w * 64).min(64);
            let full = if valid == 64 {
                u64::MAX
            } else {
                (1u64 << valid) - 1
            };
            if word == full {
                run += valid;
                continue;
            }
            let mut rest = word;
            let mut pos = 0usize;
            while pos < valid {
                if rest & 1 == 1 {
                    let ones = (rest.trailing_ones() as usize).min(valid - pos);
                    run += ones;
                    pos += ones;
                    rest = rest.checked_shr(ones as u32).unwrap_or(0);
                } else {
                    let zeros = (rest.trailing_zeros() as usize).min(valid - pos);
                    if run > 0 {
                        dist.record(run, 1);
                        run = 0;
                    }
                    pos += zeros;
                    rest = rest.checked_shr(zeros as u32).unwrap_or(0);
                }
            }
        }
        if run > 0 {
            dist.record(run, 1);
        }
    }
    dist
}

/// Fraction of off-identity recurrent points on diagonal lines of length
/// at least `l_min`. A plot without off-identity recurrences gives 0.
pub fn det(dist: &LineDistribution, rp: &RecurrencePlot, l_min: usize) -> f64 {
    debug_assert_eq!(dist.kind, LineKind::Diagonal);
    let off_identity = rp.count_ones() - rp.size() as u64;
    if off_identity == 0 {
        log::warn!("DET of a plot with no off-identity recurrences; reporting 0");
        return 0.0;
    }
    dist.points_from(l_min.max(1)) as f64 / off_identity as f64
}

/// Fraction of all recurrent points on vertical lines of length at least `v_min`.
pub fn lam(dist: &LineDistribution, rp: &RecurrencePlot, v_min: usize) -> f64 {
    debug_assert_eq!(dist.kind, LineKind::Vertical);
    let total = rp.count_ones();
    if total == 0 {
        return 0.0;
    }
    dist.points_from(v_min.max(1)) as f64 / total as f64
}

/// Shannon entropy (nats) of diagonal lengths `>= l_min`, normalized over
/// that same support.
pub fn entr_diag(dist: &LineDistribution, l_min: usize) -> f64 {
    let counts: Vec<u64> = dist.counts.range(l_min.max(1)..).map(|(_, &c)| c).collect();
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            p * p.ln()
        })
        .sum::<f64>()
}

/// `1 / l_max` over off-identity diagonals, or [`DIV_NO_LINES`].
pub fn div(dist: &LineDistribution) -> f64 {
    match dist.max_len() {
        Some(l) => 1.0 / l as f64,
        None => DIV_NO_LINES,
    }
}

/// The classic quantifiers of one plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RqaSummary {
    pub epsilon: f64,
    pub rr: f64,
    pub det: f64,
    pub lam: f64,
    pub entr: f64,
    pub div: f64,
    pub l_min: usize,
    pub v_min: usize,
}

impl RqaSummary {
    pub const CSV_HEADER: &'static str = "epsilon,rr,det,lam,entr,div,l_min,v_min";

    pub fn compute(rp: &RecurrencePlot, l_min: usize, v_min: usize) -> Self {
        let diag = diagonal_dist(rp);
        let vert = vertical_dist(rp);
        Self {
            epsilon: rp.epsilon(),
            rr: recurrence_rate(rp),
            det: det(&diag, rp, l_min),
            lam: lam(&vert, rp, v_min),
            entr: entr_diag(&diag, l_min),
            div: div(&diag),
            l_min,
            v_min,
        }
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.epsilon, self.rr, self.det, self.lam, self.entr, self.div, self.l_min, self.v_min
        )
    }
}
