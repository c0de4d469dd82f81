//! Naive dense reference implementations used as oracles by the
//! integration tests. Everything here works on `Vec<Vec<bool>>` and favours
//! obviousness over speed.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<bool>>;

pub fn dense_rp(values: &[f64], epsilon: f64) -> Dense {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let x: Vec<f64> = values.iter().map(|v| (v - lo) / (hi - lo)).collect();
    x.iter()
        .map(|a| x.iter().map(|b| (a - b).abs() <= epsilon).collect())
        .collect()
}

/// Symmetric matrix with unit diagonal and independent off-diagonal bits.
#[allow(clippy::needless_range_loop)]
pub fn random_dense(k: usize, density: f64, seed: u64) -> Dense {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = vec![vec![false; k]; k];
    for i in 0..k {
        m[i][i] = true;
        for j in i + 1..k {
            m[i][j] = rng.random::<f64>() < density;
        }
    }
    // Mirror the upper triangle.
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| if j < i { m[j][i] } else { m[i][j] })
                .collect()
        })
        .collect()
}

/// Diagonal runs over the whole matrix except the main diagonal.
pub fn diagonal_lines(m: &Dense) -> BTreeMap<usize, u64> {
    let k = m.len();
    let mut out = BTreeMap::new();
    for d in 1..k as isize {
        for sign in [-1isize, 1] {
            let off = d * sign;
            let mut run = 0;
            for i in 0..k as isize {
                let j = i + off;
                let on = j >= 0 && j < k as isize && m[i as usize][j as usize];
                if on {
                    run += 1;
                } else if run > 0 {
                    *out.entry(run).or_insert(0) += 1;
                    run = 0;
                }
            }
            if run > 0 {
                *out.entry(run).or_insert(0) += 1;
            }
        }
    }
    out
}

/// Vertical runs down every column, the main diagonal included.
pub fn vertical_lines(m: &Dense) -> BTreeMap<usize, u64> {
    let k = m.len();
    let mut out = BTreeMap::new();
    for j in 0..k {
        let mut run = 0;
        for row in m {
            if row[j] {
                run += 1;
            } else if run > 0 {
                *out.entry(run).or_insert(0) += 1;
                run = 0;
            }
        }
        if run > 0 {
            *out.entry(run).or_insert(0) += 1;
        }
    }
    out
}

fn ones(m: &Dense) -> u64 {
    m.iter().flatten().filter(|&&b| b).count() as u64
}

fn points(lines: &BTreeMap<usize, u64>, min: usize) -> u64 {
    lines
        .iter()
        .filter(|(&l, _)| l >= min)
        .map(|(&l, &c)| l as u64 * c)
        .sum()
}

pub fn det(m: &Dense, l_min: usize) -> f64 {
    let off = ones(m) - m.len() as u64;
    if off == 0 {
        return 0.0;
    }
    points(&diagonal_lines(m), l_min) as f64 / off as f64
}

pub fn lam(m: &Dense, v_min: usize) -> f64 {
    points(&vertical_lines(m), v_min) as f64 / ones(m) as f64
}

pub fn entr(m: &Dense, l_min: usize) -> f64 {
    let lines = diagonal_lines(m);
    let kept: Vec<u64> = lines
        .iter()
        .filter(|(&l, _)| l >= l_min)
        .map(|(_, &c)| c)
        .collect();
    let total: u64 = kept.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let mut s = 0.0;
    for &c in &kept {
        let p = c as f64 / total as f64;
        s += p * p.ln();
    }
    -s
}

pub fn div(m: &Dense) -> Option<f64> {
    diagonal_lines(m)
        .keys()
        .next_back()
        .map(|&l| 1.0 / l as f64)
}

/// Every n x n block, code bit `r * n + c` set when cell (i + r, j + c) is.
pub fn block_histogram(m: &Dense, n: usize) -> BTreeMap<u32, u64> {
    let k = m.len();
    let mut out = BTreeMap::new();
    for i in 0..=k - n {
        for j in 0..=k - n {
            let mut code = 0u32;
            for r in 0..n {
                for c in 0..n {
                    if m[i + r][j + c] {
                        code |= 1 << (r * n + c);
                    }
                }
            }
            *out.entry(code).or_insert(0) += 1;
        }
    }
    out
}
