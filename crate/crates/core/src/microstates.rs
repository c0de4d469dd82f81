//! Recurrence microstates and their Shannon entropy.
//!
//! A microstate is the `n x n` block of a recurrence plot with its top-left
//! corner at `(i, j)`. It is encoded row-major into an integer code: cell
//! `(r, c)` of the block sets bit `r * n + c`, so bit 0 is the top-left cell.
//! With `n <= 5` every code fits in 25 bits.
//!
//! Sampling draws corners uniformly (with replacement) from the whole
//! `(K - n + 1)^2` grid, including blocks that straddle the line of identity.
//! Work is split into a fixed number of partitions, each with its own ChaCha
//! stream of the task seed; the histogram depends on the seed and partition
//! count, never on the thread count.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recurrence::RecurrencePlot;
use crate::rng;

pub const MIN_SIDE: usize = 2;
pub const MAX_SIDE: usize = 5;

/// Partition count used by [`sample_microstates`].
pub const DEFAULT_PARTITIONS: usize = 16;

/// Upper bound on placements visited by [`exhaustive_microstates`].
pub const EXHAUSTIVE_LIMIT: u64 = 10_000_000;

/// Largest side for which counts are accumulated in a dense table.
const DENSE_MAX_SIDE: usize = 4;

fn check_side(n: usize) -> Result<()> {
    if (MIN_SIDE..=MAX_SIDE).contains(&n) {
        Ok(())
    } else {
        Err(Error::param(
            "n",
            format!("microstate side must lie in [{MIN_SIDE}, {MAX_SIDE}], got {n}"),
        ))
    }
}

/// Number of distinct microstates, `2^(n^2)`.
pub fn microstate_count(n: usize) -> u64 {
    1u64 << (n * n)
}

#[inline]
fn encode_unchecked(rp: &RecurrencePlot, i: usize, j: usize, n: usize) -> u32 {
    let mut code = 0u64;
    for r in 0..n {
        code |= rp.row_bits(i + r, j, n) << (r * n);
    }
    code as u32
}

/// Code of the `n x n` block whose top-left corner is `(i, j)`.
pub fn encode_microstate(rp: &RecurrencePlot, i: usize, j: usize, n: usize) -> Result<u32> {
    check_side(n)?;
    let k = rp.size();
    if n > k || i > k - n || j > k - n {
        return Err(Error::Index {
            row: i,
            col: j,
            side: n,
            size: k,
        });
    }
    Ok(encode_unchecked(rp, i, j, n))
}

/// Cell `(r, c)` of a decoded block.
pub fn code_cell(code: u32, n: usize, r: usize, c: usize) -> bool {
    (code >> (r * n + c)) & 1 == 1
}

/// Occupation counts of microstate codes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MicrostateHistogram {
    pub n: usize,
    /// Occupied codes only, sorted by code.
    pub counts: BTreeMap<u32, u64>,
    /// Total number of blocks counted.
    pub samples: u64,
    /// Sampling seed; `None` for exhaustive enumeration.
    pub seed: Option<u64>,
}

impl MicrostateHistogram {
    pub fn probability(&self, code: u32) -> f64 {
        self.counts.get(&code).copied().unwrap_or(0) as f64 / self.samples as f64
    }

    pub fn occupied(&self) -> usize {
        self.counts.len()
    }

    /// `code,count` lines sorted by code, with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "code,count")?;
        for (code, count) in &self.counts {
            writeln!(out, "{code},{count}")?;
        }
        Ok(())
    }
}

/// Dense table for small sides, hash map for `n = 5` (2^25 codes).
enum Tally {
    Dense(Vec<u64>),
    Sparse(HashMap<u32, u64>),
}

impl Tally {
    fn new(n: usize) -> Self {
        if n <= DENSE_MAX_SIDE {
            Tally::Dense(vec![0; microstate_count(n) as usize])
        } else {
            Tally::Sparse(HashMap::new())
        }
    }

    #[inline]
    fn add(&mut self, code: u32) {
        match self {
            Tally::Dense(v) => v[code as usize] += 1,
            Tally::Sparse(m) => *m.entry(code).or_insert(0) += 1,
        }
    }

    fn absorb(mut self, other: Tally) -> Tally {
        match (&mut self, other) {
            (Tally::Dense(a), Tally::Dense(b)) => a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
            (Tally::Sparse(a), Tally::Sparse(b)) => {
                for (code, c) in b {
                    *a.entry(code).or_insert(0) += c;
                }
            }
            _ => unreachable!("tallies of one side share a layout"),
        }
        self
    }

    fn merge_into(self, out: &mut BTreeMap<u32, u64>) {
        match self {
            Tally::Dense(v) => {
                for (code, c) in v.into_iter().enumerate().filter(|(_, c)| *c > 0) {
                    *out.entry(code as u32).or_insert(0) += c;
                }
            }
            Tally::Sparse(m) => {
                for (code, c) in m {
                    *out.entry(code).or_insert(0) += c;
                }
            }
        }
    }
}

/// Random microstate sampler configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MicrostateSampler {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub partitions: usize,
}

impl MicrostateSampler {
    pub fn new(n: usize, samples: u64, seed: u64) -> Self {
        Self {
            n,
            samples,
            seed,
            partitions: DEFAULT_PARTITIONS,
        }
    }

    pub fn partitions(mut self, partitions: usize) -> Self {
        self.partitions = partitions;
        self
    }

    pub fn sample(&self, rp: &RecurrencePlot) -> Result<MicrostateHistogram> {
        let n = self.n;
        check_side(n)?;
        if self.samples == 0 {
            return Err(Error::param("samples", "must be >= 1"));
        }
        if self.partitions == 0 {
            return Err(Error::param("partitions", "must be >= 1"));
        }
        let k = rp.size();
        if k < n {
            return Err(Error::MatrixTooSmall { size: k, side: n });
        }
        let last = k - n;
        let parts = self.partitions as u64;
        let base = self.samples / parts;
        let extra = self.samples % parts;

        let tallies: Vec<Tally> = (0..parts)
            .into_par_iter()
            .map(|p| {
                let quota = base + u64::from(p < extra);
                let mut rng = rng::stream(self.seed, p);
                let mut tally = Tally::new(n);
                for _ in 0..quota {
                    let i = rng.random_range(0..=last);
                    let j = rng.random_range(0..=last);
                    tally.add(encode_unchecked(rp, i, j, n));
                }
                tally
            })
            .collect();

        let mut counts = BTreeMap::new();
        for t in tallies {
            t.merge_into(&mut counts);
        }
        Ok(MicrostateHistogram {
            n,
            counts,
            samples: self.samples,
            seed: Some(self.seed),
        })
    }
}

/// Histogram of `samples` uniformly drawn blocks, using
/// [`DEFAULT_PARTITIONS`] partitions.
pub fn sample_microstates(
    rp: &RecurrencePlot,
    n: usize,
    samples: u64,
    seed: u64,
) -> Result<MicrostateHistogram> {
    MicrostateSampler::new(n, samples, seed).sample(rp)
}

/// Histogram over every block placement.
pub fn exhaustive_microstates(rp: &RecurrencePlot, n: usize) -> Result<MicrostateHistogram> {
    check_side(n)?;
    let k = rp.size();
    if k < n {
        return Err(Error::MatrixTooSmall { size: k, side: n });
    }
    let side = (k - n + 1) as u64;
    let placements = side * side;
    if placements > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge {
            placements,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let tally = (0..=k - n)
        .into_par_iter()
        .fold(
            || Tally::new(n),
            |mut tally, i| {
                for j in 0..=k - n {
                    tally.add(encode_unchecked(rp, i, j, n));
                }
                tally
            },
        )
        .reduce(|| Tally::new(n), Tally::absorb);
    let mut counts = BTreeMap::new();
    tally.merge_into(&mut counts);
    Ok(MicrostateHistogram {
        n,
        counts,
        samples: placements,
        seed: None,
    })
}

/// `S = -sum P_i ln P_i` with `P_i = n_i / samples`.
pub fn microstate_entropy(hist: &MicrostateHistogram) -> f64 {
    if hist.samples == 0 {
        return 0.0;
    }
    let total = hist.samples as f64;
    let s = -hist
        .counts
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            p * p.ln()
        })
        .sum::<f64>();
    // A single occupied code gives -1 * ln 1 = -0.0.
    s.max(0.0)
}

/// `ln 2^(n^2)`, the entropy of equiprobable microstates.
pub fn max_entropy(n: usize) -> f64 {
    (n * n) as f64 * std::f64::consts::LN_2
}

/// Probability mass per popcount class: `mass[i]` is the total probability of
/// microstates with exactly `i` recurrent cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBreakdown {
    pub n: usize,
    pub mass: Vec<f64>,
}

pub fn class_breakdown(hist: &MicrostateHistogram) -> ClassBreakdown {
    let cells = hist.n * hist.n;
    let mut counts = vec![0u64; cells + 1];
    for (&code, &c) in &hist.counts {
        counts[code.count_ones() as usize] += c;
    }
    let total = hist.samples as f64;
    ClassBreakdown {
        n: hist.n,
        mass: counts.into_iter().map(|c| c as f64 / total).collect(),
    }
}

/// Expected recurrence rate of uniform white noise on `[0, 1]` at threshold
/// `epsilon`: `2 epsilon - epsilon^2`.
pub fn rr_oracle(epsilon: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::param(
            "epsilon",
            format!("must lie in [0, 1], got {epsilon}"),
        ));
    }
    Ok(2.0 * epsilon - epsilon * epsilon)
}

/// Threshold at which [`rr_oracle`] reaches `rr`: `1 - sqrt(1 - rr)`.
pub fn rr_oracle_inverse(rr: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rr) {
        return Err(Error::param("rr", format!("must lie in [0, 1], got {rr}")));
    }
    Ok(1.0 - (1.0 - rr).sqrt())
}

/// Total-variation distance between two histograms of the same side.
pub fn total_variation(a: &MicrostateHistogram, b: &MicrostateHistogram) -> f64 {
    let mut codes: Vec<u32> = a.counts.keys().chain(b.counts.keys()).copied().collect();
    codes.sort_unstable();
    codes.dedup();
    0.5 * codes
        .into_iter()
        .map(|c| (a.probability(c) - b.probability(c)).abs())
        .sum::<f64>()
}

/// Entropy, bound and class masses of one histogram, as exported to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub n: usize,
    pub n_bar: u64,
    pub entropy: f64,
    pub s_max: f64,
    pub class_mass: Vec<f64>,
}

impl EntropyReport {
    pub fn from_histogram(hist: &MicrostateHistogram) -> Self {
        Self {
            n: hist.n,
            n_bar: hist.samples,
            entropy: microstate_entropy(hist),
            s_max: max_entropy(hist.n),
            class_mass: class_breakdown(hist).mass,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recurrence::{build_rp, Norm};
    use crate::signals::{gen_sine_noise, gen_white_noise};
    use proptest::prelude::*;

    fn hist(n: usize, counts: &[(u32, u64)]) -> MicrostateHistogram {
        let counts: BTreeMap<u32, u64> = counts.iter().copied().collect();
        let samples = counts.values().sum();
        MicrostateHistogram {
            n,
            counts,
            samples,
            seed: None,
        }
    }

    #[test]
    fn encoding_examples() {
        let id = RecurrencePlot::identity(5);
        let full = RecurrencePlot::full(5);
        assert_eq!(encode_microstate(&id, 0, 2, 2).unwrap(), 0);
        assert_eq!(encode_microstate(&full, 1, 3, 2).unwrap(), 15);
        assert_eq!(encode_microstate(&id, 1, 1, 2).unwrap(), 0b1001);
        assert!(matches!(
            encode_microstate(&id, 4, 0, 2),
            Err(Error::Index { .. })
        ));
        assert!(encode_microstate(&id, 0, 0, 6).is_err());
    }

    #[test]
    fn block_bits_follow_row_major_convention() {
        let rp = RecurrencePlot::from_fn(70, 0.1, |i, j| i == j || (i * j) % 7 == 1).unwrap();
        for &(i, j) in &[(0usize, 0usize), (3, 60), (62, 61), (65, 65)] {
            let code = encode_microstate(&rp, i, j, 5).unwrap();
            for r in 0..5 {
                for c in 0..5 {
                    assert_eq!(code_cell(code, 5, r, c), rp.get(i + r, j + c));
                }
            }
        }
    }

    #[test]
    fn full_plot_concentrates_on_top_code() {
        let full = RecurrencePlot::full(20);
        for n in 2..=5 {
            let h = sample_microstates(&full, n, 1000, 3).unwrap();
            assert_eq!(h.occupied(), 1);
            assert_eq!(h.counts[&((microstate_count(n) - 1) as u32)], 1000);
            assert_eq!(microstate_entropy(&h), 0.0);
            let cb = class_breakdown(&h);
            assert_eq!(cb.mass[n * n], 1.0);
        }
    }

    #[test]
    fn identity_plot_matches_enumeration() {
        // Of the (K-1)^2 corners, the K-1 on the diagonal see code 9, the
        // 2(K-2) one step off it see a single corner cell, and every other
        // corner sees code 0.
        let k = 40usize;
        let id = RecurrencePlot::identity(k);
        let ex = exhaustive_microstates(&id, 2).unwrap();
        assert_eq!(ex.samples, ((k - 1) * (k - 1)) as u64);
        let diag = (k - 1) as u64;
        // Blocks one off the diagonal hold a single recurrent cell.
        assert_eq!(ex.counts[&0b1001], diag);
        assert_eq!(ex.counts[&0b0100], (k - 2) as u64);
        assert_eq!(ex.counts[&0b0010], (k - 2) as u64);
        assert_eq!(ex.counts[&0], ex.samples - diag - 2 * (k - 2) as u64);
        let sampled = sample_microstates(&id, 2, 200_000, 1).unwrap();
        let p9 = sampled.probability(0b1001);
        let expect = 1.0 / (k - 1) as f64;
        assert!((p9 - expect).abs() < 0.005, "{p9} vs {expect}");
    }

    #[test]
    fn sampler_errors() {
        let rp = RecurrencePlot::identity(3);
        assert!(matches!(
            sample_microstates(&rp, 4, 10, 0),
            Err(Error::MatrixTooSmall { .. })
        ));
        assert!(sample_microstates(&rp, 2, 0, 0).is_err());
        let ex = exhaustive_microstates(&RecurrencePlot::full(3), 3).unwrap();
        assert_eq!(ex.samples, 1);
    }

    #[test]
    fn exhaustive_limit() {
        let big = RecurrencePlot::identity(3200);
        assert!(matches!(
            exhaustive_microstates(&big, 2),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn partition_count_is_part_of_the_contract() {
        let s = gen_white_noise(300, 4).unwrap();
        let rp = build_rp(&s, 0.293, Norm::Absolute).unwrap();
        let a = MicrostateSampler::new(3, 10_001, 9)
            .partitions(7)
            .sample(&rp)
            .unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| {
            MicrostateSampler::new(3, 10_001, 9)
                .partitions(7)
                .sample(&rp)
                .unwrap()
        });
        assert_eq!(a, b);
        assert_eq!(a.counts.values().sum::<u64>(), 10_001);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(microstate_entropy(&hist(2, &[(5, 10)])), 0.0);
        let uniform = hist(2, &(0..16).map(|c| (c, 3)).collect::<Vec<_>>());
        assert!((microstate_entropy(&uniform) - 16f64.ln()).abs() < 1e-12);
        assert!((microstate_entropy(&hist(2, &[(1, 8), (2, 8)])) - 2f64.ln()).abs() < 1e-15);

        let cb = class_breakdown(&uniform);
        let expect = [1.0, 4.0, 6.0, 4.0, 1.0].map(|x| x / 16.0);
        for (m, e) in cb.mass.iter().zip(expect) {
            assert!((m - e).abs() < 1e-15);
        }
    }

    #[test]
    fn max_entropy_values() {
        assert!((max_entropy(2) - 2.772_588_722).abs() < 1e-8);
        assert!((max_entropy(3) - 6.238_324_625).abs() < 1e-8);
        assert!((max_entropy(4) - 11.090_354_888).abs() < 1e-8);
    }

    #[test]
    fn rr_oracle_examples() {
        assert_eq!(rr_oracle(1.0).unwrap(), 1.0);
        assert!((rr_oracle(0.1).unwrap() - 0.19).abs() < 1e-15);
        assert!((rr_oracle(0.293).unwrap() - 0.5).abs() < 1e-3);
        assert!(rr_oracle(1.1).is_err());
        assert!(rr_oracle(-0.1).is_err());
        let e = rr_oracle_inverse(0.5).unwrap();
        assert!((rr_oracle(e).unwrap() - 0.5).abs() < 1e-15);
    }

    /// Away from the diagonal a 2x2 block compares samples `a, b` (rows)
    /// with `c, d` (columns): four independent uniforms. Monte Carlo over
    /// that model, independent of plot construction and encoding.
    fn white_noise_block_oracle(eps: f64, draws: usize, seed: u64) -> [f64; 16] {
        use rand::Rng as _;
        let mut rng = rng::seeded(seed);
        let mut h = [0.0; 16];
        for _ in 0..draws {
            let [a, b, c, d]: [f64; 4] = std::array::from_fn(|_| rng.random());
            let code = ((a - c).abs() <= eps) as usize
                | (((a - d).abs() <= eps) as usize) << 1
                | (((b - c).abs() <= eps) as usize) << 2
                | (((b - d).abs() <= eps) as usize) << 3;
            h[code] += 1.0 / draws as f64;
        }
        h
    }

    #[test]
    fn white_noise_histogram_matches_block_model() {
        let s = gen_white_noise(4000, 21).unwrap();
        let rp = build_rp(&s, 0.293, Norm::Absolute).unwrap();
        let h = sample_microstates(&rp, 2, 100_000, 5).unwrap();
        assert_eq!(h.occupied(), 16);
        let oracle = white_noise_block_oracle(0.293, 1_000_000, 77);
        let tv: f64 = 0.5
            * (0..16u32)
                .map(|c| (h.probability(c) - oracle[c as usize]).abs())
                .sum::<f64>();
        assert!(tv < 0.02, "TV {tv}");
        // Shared samples correlate the four cells: the histogram is not flat.
        // The oracle puts the max/min bin ratio near 2.75.
        let max = *h.counts.values().max().unwrap() as f64;
        let min = *h.counts.values().min().unwrap() as f64;
        assert!((2.3..3.2).contains(&(max / min)), "ratio {}", max / min);
        assert!(microstate_entropy(&h) > 0.95 * max_entropy(2));
    }

    #[test]
    fn pure_sine_favours_empty_and_diagonal_classes() {
        let s = gen_sine_noise(1000, 0.033, 0.0, 0).unwrap();
        let rp = build_rp(&s, 0.14, Norm::Absolute).unwrap();
        let cb = class_breakdown(&sample_microstates(&rp, 2, 100_000, 2).unwrap());
        let (best, _) = cb
            .mass
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(best, 0);
        // Odd classes (isolated points, corners) are rare in a smooth orbit.
        assert!(cb.mass[0] + cb.mass[2] + cb.mass[4] > 0.9, "{:?}", cb.mass);
    }

    #[test]
    fn report_json_fields() {
        let h = hist(2, &[(0, 1), (15, 3)]);
        let json = serde_json::to_value(EntropyReport::from_histogram(&h)).unwrap();
        for key in ["n", "n_bar", "entropy", "s_max", "class_mass"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
        assert_eq!(json["class_mass"].as_array().unwrap().len(), 5);
    }

    proptest! {
        #[test]
        fn entropy_bounds_and_label_symmetry(
            counts in prop::collection::vec(0u64..50, 16),
            shift in 0u32..16,
        ) {
            prop_assume!(counts.iter().sum::<u64>() > 0);
            let pairs: Vec<(u32, u64)> = counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (i as u32, c)).collect();
            let h = hist(2, &pairs);
            let s = microstate_entropy(&h);
            prop_assert!(s >= 0.0 && s <= max_entropy(2) + 1e-12);
            let permuted: Vec<(u32, u64)> = pairs.iter().map(|&(c, k)| ((c + shift) % 16, k)).collect();
            let s2 = microstate_entropy(&hist(2, &permuted));
            prop_assert!((s - s2).abs() < 1e-12);
            let mass: f64 = class_breakdown(&h).mass.iter().sum();
            prop_assert!((mass - 1.0).abs() < 1e-12);
        }

        #[test]
        fn diagonal_blocks_are_symmetric(values in prop::collection::vec(0.0f64..1.0, 8..60), eps in 0.05f64..0.5, n in 2usize..=5) {
            let s = crate::signals::TimeSeries::new(values, "p").unwrap();
            let rp = build_rp(&s, eps, Norm::Absolute).unwrap();
            for i in 0..=rp.size() - n {
                let code = encode_microstate(&rp, i, i, n).unwrap();
                for r in 0..n {
                    for c in 0..n {
                        prop_assert_eq!(code_cell(code, n, r, c), code_cell(code, n, c, r));
                    }
                }
            }
        }
    }
}
