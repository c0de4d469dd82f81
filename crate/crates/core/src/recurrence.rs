//! Thresholded recurrence plots.
//!
//! A plot is stored as `K` rows of `ceil(K / 64)` little-endian bit words:
//! column `j` of row `i` lives at bit `j % 64` of word `i * words + j / 64`.
//! Padding bits past column `K - 1` are always zero.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{normalize, TimeSeries};

const WORD_BITS: usize = 64;

/// State-space distance used to compare samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    /// `|x_i - x_j|` on the scalar samples.
    #[default]
    Absolute,
    /// Max-norm between delay vectors `(x_i, x_{i+delay}, ...)` of `dim` entries.
    Embedded { dim: usize, delay: usize },
}

impl Norm {
    /// `Absolute` for the trivial embedding `(1, 1)`.
    pub fn embedding(dim: usize, delay: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("embed_dim", "must be >= 1"));
        }
        if delay == 0 {
            return Err(Error::param("embed_delay", "must be >= 1"));
        }
        Ok(if dim == 1 {
            Norm::Absolute
        } else {
            Norm::Embedded { dim, delay }
        })
    }

    fn span(self) -> usize {
        match self {
            Norm::Absolute => 0,
            Norm::Embedded { dim, delay } => (dim - 1) * delay,
        }
    }
}

/// Symmetric binary recurrence matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrencePlot {
    size: usize,
    words: usize,
    bits: Vec<u64>,
    epsilon: f64,
    norm: Norm,
    renormalized: bool,
}

#[inline]
fn words_for(size: usize) -> usize {
    size.div_ceil(WORD_BITS)
}

/// Builds the recurrence plot `R_ij = [dist(x_i, x_j) <= epsilon]`.
///
/// The series is min-max normalized first unless it already is; the plot
/// records whether that happened.
pub fn build_rp(series: &TimeSeries, epsilon: f64, norm: Norm) -> Result<RecurrencePlot> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidThreshold(epsilon));
    }
    let renormalized = !series.is_normalized();
    let normalized;
    let x = if renormalized {
        normalized = normalize(series).0;
        normalized.values()
    } else {
        series.values()
    };
    let span = norm.span();
    if x.len() < span + 2 {
        return Err(Error::InvalidLength {
            len: x.len(),
            min: span + 2,
        });
    }
    let size = x.len() - span;
    let words = words_for(size);
    let mut bits = vec![0u64; size * words];

    match norm {
        Norm::Absolute => {
            bits.par_chunks_mut(words).enumerate().for_each(|(i, row)| {
                let xi = x[i];
                fill_row(row, size, |j| (xi - x[j]).abs() <= epsilon);
            });
        }
        Norm::Embedded { dim, delay } => {
            bits.par_chunks_mut(words).enumerate().for_each(|(i, row)| {
                fill_row(row, size, |j| {
                    (0..dim).all(|d| (x[i + d * delay] - x[j + d * delay]).abs() <= epsilon)
                });
            });
        }
    }

    Ok(RecurrencePlot {
        size,
        words,
        bits,
        epsilon,
        norm,
        renormalized,
    })
}

#[inline]
fn fill_row(row: &mut [u64], size: usize, mut recurrent: impl FnMut(usize) -> bool) {
    for (w, word) in row.iter_mut().enumerate() {
        let base = w * WORD_BITS;
        let end = (base + WORD_BITS).min(size);
        let mut acc = 0u64;
        for j in base..end {
            acc |= (recurrent(j) as u64) << (j - base);
        }
        *word = acc;
    }
}

impl RecurrencePlot {
    /// Builds a plot from an arbitrary predicate, checking symmetry and the
    /// unit diagonal. Meant for tests and for importing external matrices.
    pub fn from_fn(
        size: usize,
        epsilon: f64,
        mut cell: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidLength { len: 0, min: 1 });
        }
        let words = words_for(size);
        let mut bits = vec![0u64; size * words];
        for i in 0..size {
            let row = &mut bits[i * words..(i + 1) * words];
            fill_row(row, size, |j| cell(i, j));
        }
        let rp = Self {
            size,
            words,
            bits,
            epsilon,
            norm: Norm::Absolute,
            renormalized: false,
        };
        for i in 0..size {
            if !rp.get(i, i) {
                return Err(Error::InvalidPlot(i, i));
            }
            for j in i + 1..size {
                if rp.get(i, j) != rp.get(j, i) {
                    return Err(Error::InvalidPlot(i, j));
                }
            }
        }
        Ok(rp)
    }

    /// Identity-only plot (no recurrences off the diagonal).
    pub fn identity(size: usize) -> Self {
        Self::from_fn(size, f64::MIN_POSITIVE, |i, j| i == j).expect("identity is valid")
    }

    /// Fully recurrent plot.
    pub fn full(size: usize) -> Self {
        Self::from_fn(size, 1.0, |_, _| true).expect("all-ones is valid")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    /// Whether construction had to normalize the input series.
    pub fn renormalized(&self) -> bool {
        self.renormalized
    }

    pub fn words_per_row(&self) -> usize {
        self.words
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.size && j < self.size);
        (self.bits[i * self.words + j / WORD_BITS] >> (j % WORD_BITS)) & 1 == 1
    }

    /// `len <= 32` bits of row `i` starting at column `col`, column `col` in bit 0.
    #[inline]
    pub(crate) fn row_bits(&self, i: usize, col: usize, len: usize) -> u64 {
        debug_assert!(len <= 32 && col + len <= self.size);
        let row = self.row(i);
        let w = col / WORD_BITS;
        let off = col % WORD_BITS;
        let mut v = row[w] >> off;
        if off + len > WORD_BITS {
            v |= row[w + 1] << (WORD_BITS - off);
        }
        v & ((1u64 << len) - 1)
    }

    /// Number of recurrent cells, line of identity included.
    pub fn count_ones(&self) -> u64 {
        self.bits.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<bool>> {
        (0..self.size)
            .map(|i| (0..self.size).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Plain PBM (`P1`): `K` columns by `K` rows, one `0`/`1` per cell,
    /// space separated, one matrix row per line.
    pub fn write_pbm<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "P1")?;
        writeln!(out, "{} {}", self.size, self.size)?;
        let mut line = String::with_capacity(self.size * 2);
        for i in 0..self.size {
            line.clear();
            for j in 0..self.size {
                if j > 0 {
                    line.push(' ');
                }
                line.push(if self.get(i, j) { '1' } else { '0' });
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

/// Fraction of recurrent cells, `popcount / K^2`, line of identity included.
pub fn recurrence_rate(rp: &RecurrencePlot) -> f64 {
    rp.count_ones() as f64 / (rp.size as f64 * rp.size as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub size: usize,
    pub stride: usize,
}

impl WindowSpec {
    pub fn new(size: usize, stride: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::param("window", "must be >= 2"));
        }
        if stride == 0 {
            return Err(Error::param("stride", "must be >= 1"));
        }
        Ok(Self { size, stride })
    }
}

/// Consecutive windows starting at `0, stride, 2 stride, ...`; a trailing
/// partial window is dropped.
pub fn windows(series: &TimeSeries, spec: WindowSpec) -> Result<Vec<TimeSeries>> {
    let WindowSpec { size, stride } = WindowSpec::new(spec.size, spec.stride)?;
    if size > series.len() {
        return Err(Error::InvalidWindow {
            window: size,
            len: series.len(),
        });
    }
    (0..=series.len() - size)
        .step_by(stride)
        .map(|start| series.slice(start, size))
        .collect()
}
