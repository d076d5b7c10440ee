//! Small statistical helpers: normal quantiles, Kolmogorov–Smirnov distance
//! and a pooled chi-square goodness-of-fit test.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

fn std_normal() -> Normal {
    Normal::standard()
}

pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// Two-sided critical value `z` with `P(|Z| <= z) = level`.
pub fn two_sided_z(level: f64) -> f64 {
    normal_quantile(0.5 + level / 2.0)
}

/// `sup_x |F_m(x) - Phi(x)|` for the empirical CDF of `sample`.
pub fn ks_distance_normal(sample: &[f64]) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = normal_cdf(x);
            (f - k as f64 / m).max((k + 1) as f64 / m - f)
        })
        .fold(0.0, f64::max)
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Clone, Copy, Debug)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Compares integer-valued draws against exact cell masses. Cells are
/// pooled left to right until each expected count reaches `min_expected`;
/// the mass outside `expected` forms a final tail cell.
pub fn chi_square_gof(draws: &[i64], pmf: impl Fn(i64) -> f64, support: std::ops::RangeInclusive<i64>, min_expected: f64) -> ChiSquareTest {
    let total = draws.len() as f64;
    let mut observed = std::collections::BTreeMap::new();
    for &d in draws {
        *observed.entry(d).or_insert(0usize) += 1;
    }
    let mut cells: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let (mut o, mut e) = (0.0, 0.0);
    let mut mass = 0.0;
    for k in support.clone() {
        let p = pmf(k);
        mass += p;
        o += observed.get(&k).copied().unwrap_or(0) as f64;
        e += p * total;
        if e >= min_expected {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    let outside = draws.iter().filter(|d| !support.contains(d)).count() as f64;
    o += outside;
    e += (1.0 - mass).max(0.0) * total;
    match cells.last_mut() {
        Some(last) if e < min_expected => {
            last.0 += o;
            last.1 += e;
        }
        _ => cells.push((o, e)),
    }
    let statistic: f64 = cells
        .iter()
        .filter(|c| c.1 > 0.0)
        .map(|&(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = cells.len().saturating_sub(1).max(1);
    let p_value = ChiSquared::new(dof as f64).expect("positive dof").sf(statistic);
    ChiSquareTest { statistic, dof, p_value }
}

/// Median of a non-empty sample.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Empirical `q`-quantile using the lower order statistic at `ceil(q m)`.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    v[idx]
}
