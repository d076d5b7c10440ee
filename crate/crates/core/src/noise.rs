//! Noise mechanisms for releasing a degree sequence: samplers, exact pmfs,
//! moments and sub-Gamma certificates.
//!
//! A centered variable `X` is sub-Gamma with variance factor `upsilon` and
//! scale `c` when `log E e^{sX} <= s^2 upsilon / (2 (1 - c|s|))` for every
//! `|s| < 1/c`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

/// Sub-Gamma certificate `(upsilon, c)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubGammaParams {
    pub upsilon: f64,
    pub c: f64,
}

impl SubGammaParams {
    pub fn new(upsilon: f64, c: f64) -> Result<Self> {
        if !(upsilon > 0.0 && upsilon.is_finite()) {
            return Err(Error::invalid(format!("variance factor must be > 0, got {upsilon}")));
        }
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("scale must be >= 0, got {c}")));
        }
        Ok(SubGammaParams { upsilon, c })
    }

    /// Certificate of a sum of independent sub-Gamma variables:
    /// variance factors add, scales take the maximum.
    pub fn sum<I: IntoIterator<Item = SubGammaParams>>(parts: I) -> Option<SubGammaParams> {
        parts.into_iter().fold(None, |acc, p| {
            Some(match acc {
                None => p,
                Some(a) => SubGammaParams {
                    upsilon: a.upsilon + p.upsilon,
                    c: a.c.max(p.c),
                },
            })
        })
    }

    /// The certified log-MGF bound `s^2 upsilon / (2 (1 - c|s|))`; infinite
    /// outside `|s| < 1/c`.
    pub fn log_mgf_bound(&self, s: f64) -> f64 {
        let denom = 1.0 - self.c * s.abs();
        if denom <= 0.0 {
            f64::INFINITY
        } else {
            s * s * self.upsilon / (2.0 * denom)
        }
    }
}

/// Scale `Lambda = 2 e^{-l/2} / (1 - e^{-l/2})^2` attached to a privacy
/// budget `l`; it is the variance of discrete Laplace noise with
/// parameter `e^{-l/2}`.
pub fn hermite_scale(lambda0: f64) -> f64 {
    let r = (-lambda0 / 2.0).exp();
    2.0 * r / ((1.0 - r) * (1.0 - r))
}

/// A noise law added independently to each released degree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseMechanism {
    /// Laplace density `exp(-|x|/b) / (2b)`.
    ContinuousLaplace { b: f64 },
    /// `P(X = k) = (1-p)/(1+p) p^{|k|}` on the integers.
    DiscreteLaplace { p: f64 },
    /// `G - (1-q)/q` with `P(G = k) = q (1-q)^k`, `k >= 0`.
    CenteredGeometric { q: f64 },
    /// `N1 + 2 N2` with independent `N1 ~ Poisson(a1)`, `N2 ~ Poisson(a2)`.
    Hermite { a1: f64, a2: f64 },
    /// Difference of two independent `Hermite { a1, a2 }` draws.
    TwoSideHermite { a1: f64, a2: f64 },
    /// `Poisson(lambda) - Poisson(mu)`.
    TwoSidePoisson { lambda: f64, mu: f64 },
}

/// Exact masses on a contiguous integer range: `probs[i]` is the mass at
/// lattice point `offset + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct PmfTable {
    pub offset: i64,
    pub probs: Vec<f64>,
}

impl PmfTable {
    pub fn get(&self, k: i64) -> f64 {
        let i = k - self.offset;
        if i < 0 {
            return 0.0;
        }
        self.probs.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.offset + i as i64, p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be > 0, got {v}")))
    }
}

impl NoiseMechanism {
    pub fn laplace(b: f64) -> Result<Self> {
        check_positive("b", b)?;
        Ok(NoiseMechanism::ContinuousLaplace { b })
    }

    pub fn discrete_laplace(p: f64) -> Result<Self> {
        check_open_unit("p", p)?;
        Ok(NoiseMechanism::DiscreteLaplace { p })
    }

    pub fn centered_geometric(q: f64) -> Result<Self> {
        check_open_unit("q", q)?;
        Ok(NoiseMechanism::CenteredGeometric { q })
    }

    pub fn hermite(a1: f64, a2: f64) -> Result<Self> {
        check_positive("a1", a1)?;
        check_positive("a2", a2)?;
        Ok(NoiseMechanism::Hermite { a1, a2 })
    }

    pub fn two_side_hermite(a1: f64, a2: f64) -> Result<Self> {
        check_positive("a1", a1)?;
        check_positive("a2", a2)?;
        Ok(NoiseMechanism::TwoSideHermite { a1, a2 })
    }

    pub fn two_side_poisson(lambda: f64, mu: f64) -> Result<Self> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !ok(lambda) || !ok(mu) || lambda + mu == 0.0 {
            return Err(Error::invalid(format!(
                "two-side Poisson needs lambda, mu >= 0, not both 0; got ({lambda}, {mu})"
            )));
        }
        Ok(NoiseMechanism::TwoSidePoisson { lambda, mu })
    }

    /// The three two-side Hermite settings of the simulation study, for
    /// privacy budget `lambda0`:
    /// 1. `(0.01, (Lambda - 0.01)/4)`, 2. `(Lambda - 0.01, 0.025)`,
    /// 3. `(4 Lambda/5, Lambda/5)`.
    pub fn hermite_case(case: u8, lambda0: f64) -> Result<Self> {
        check_positive("lambda0", lambda0)?;
        let big = hermite_scale(lambda0);
        let (a1, a2) = match case {
            1 => (0.01, (big - 0.01) / 4.0),
            2 => (big - 0.01, 0.025),
            3 => (4.0 * big / 5.0, big / 5.0),
            _ => return Err(Error::invalid(format!("Hermite case must be 1, 2 or 3, got {case}"))),
        };
        NoiseMechanism::two_side_hermite(a1, a2)
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self, NoiseMechanism::ContinuousLaplace { .. })
    }

    /// Distance between a sample and its integer lattice index:
    /// `(1-q)/q` for the centered geometric law, zero otherwise.
    pub fn lattice_shift(&self) -> f64 {
        match *self {
            NoiseMechanism::CenteredGeometric { q } => (1.0 - q) / q,
            _ => 0.0,
        }
    }

    /// One draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseMechanism::ContinuousLaplace { b } => {
                let mut u: f64 = rng.random::<f64>() - 0.5;
                while u == -0.5 {
                    u = rng.random::<f64>() - 0.5;
                }
                -b * u.signum() * (-2.0 * u.abs()).ln_1p()
            }
            NoiseMechanism::DiscreteLaplace { p } => {
                geometric(1.0 - p, rng) as f64 - geometric(1.0 - p, rng) as f64
            }
            NoiseMechanism::CenteredGeometric { q } => geometric(q, rng) as f64 - (1.0 - q) / q,
            NoiseMechanism::Hermite { a1, a2 } => hermite_draw(a1, a2, rng) as f64,
            NoiseMechanism::TwoSideHermite { a1, a2 } => {
                hermite_draw(a1, a2, rng) as f64 - hermite_draw(a1, a2, rng) as f64
            }
            NoiseMechanism::TwoSidePoisson { lambda, mu } => {
                poisson(lambda, rng) as f64 - poisson(mu, rng) as f64
            }
        }
    }

    /// Exact mass at lattice index `k` (for the centered geometric law, the
    /// mass of `k - (1-q)/q`).
    pub fn pmf(&self, k: i64) -> Result<f64> {
        Ok(match *self {
            NoiseMechanism::ContinuousLaplace { .. } => {
                return Err(Error::Unsupported("the continuous Laplace law has no pmf".into()))
            }
            NoiseMechanism::DiscreteLaplace { p } => (1.0 - p) / (1.0 + p) * p.powi(k.unsigned_abs() as i32),
            NoiseMechanism::CenteredGeometric { q } => {
                if k < 0 {
                    0.0
                } else {
                    q * (1.0 - q).powi(k as i32)
                }
            }
            NoiseMechanism::Hermite { a1, a2 } => hermite_pmf(a1, a2, k),
            NoiseMechanism::TwoSideHermite { .. } => self.pmf_table()?.get(k),
            NoiseMechanism::TwoSidePoisson { lambda, mu } => two_side_poisson_pmf(lambda, mu, k),
        })
    }

    /// All lattice masses above `1e-17`-order tail cut-offs, computed at once.
    pub fn pmf_table(&self) -> Result<PmfTable> {
        match *self {
            NoiseMechanism::ContinuousLaplace { .. } => {
                Err(Error::Unsupported("the continuous Laplace law has no pmf".into()))
            }
            NoiseMechanism::DiscreteLaplace { p } => {
                let k = geometric_cutoff(p);
                Ok(PmfTable {
                    offset: -k,
                    probs: (-k..=k).map(|j| self.pmf(j).unwrap()).collect(),
                })
            }
            NoiseMechanism::CenteredGeometric { q } => {
                let k = geometric_cutoff(1.0 - q);
                Ok(PmfTable {
                    offset: 0,
                    probs: (0..=k).map(|j| self.pmf(j).unwrap()).collect(),
                })
            }
            NoiseMechanism::Hermite { a1, a2 } => {
                let k = poisson_cutoff(a1 + 2.0 * a2, a1 + 4.0 * a2);
                Ok(PmfTable {
                    offset: 0,
                    probs: (0..=k).map(|j| hermite_pmf(a1, a2, j)).collect(),
                })
            }
            NoiseMechanism::TwoSideHermite { a1, a2 } => {
                let k = poisson_cutoff(a1 + 2.0 * a2, a1 + 4.0 * a2);
                let one: Vec<f64> = (0..=k).map(|j| hermite_pmf(a1, a2, j)).collect();
                let probs = (-k..=k)
                    .map(|d| {
                        // P(Y1 - Y2 = d) = sum_m P(Y1 = m + d) P(Y2 = m)
                        let lo = 0.max(-d);
                        let hi = k.min(k - d);
                        (lo..=hi)
                            .map(|m| one[(m + d) as usize] * one[m as usize])
                            .sum()
                    })
                    .collect();
                Ok(PmfTable { offset: -k, probs })
            }
            NoiseMechanism::TwoSidePoisson { lambda, mu } => {
                let hi = if lambda > 0.0 { poisson_cutoff(lambda, lambda) } else { 0 };
                let lo = if mu > 0.0 { poisson_cutoff(mu, mu) } else { 0 };
                Ok(PmfTable {
                    offset: -lo,
                    probs: (-lo..=hi).map(|k| two_side_poisson_pmf(lambda, mu, k)).collect(),
                })
            }
        }
    }

    /// Exact `(mean, variance)`.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            NoiseMechanism::ContinuousLaplace { b } => (0.0, 2.0 * b * b),
            NoiseMechanism::DiscreteLaplace { p } => (0.0, 2.0 * p / ((1.0 - p) * (1.0 - p))),
            NoiseMechanism::CenteredGeometric { q } => (0.0, (1.0 - q) / (q * q)),
            NoiseMechanism::Hermite { a1, a2 } => (a1 + 2.0 * a2, a1 + 4.0 * a2),
            NoiseMechanism::TwoSideHermite { a1, a2 } => (0.0, 2.0 * (a1 + 4.0 * a2)),
            NoiseMechanism::TwoSidePoisson { lambda, mu } => (lambda - mu, lambda + mu),
        }
    }

    /// `E e^{s (X - E X)}`, `+inf` where it diverges.
    pub fn centered_mgf(&self, s: f64) -> f64 {
        let em1 = |t: f64| t.exp_m1() - t; // e^t - 1 - t
        match *self {
            NoiseMechanism::ContinuousLaplace { b } => {
                let d = 1.0 - b * b * s * s;
                if d <= 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / d
                }
            }
            NoiseMechanism::DiscreteLaplace { p } => {
                let (u, v) = (p * s.exp(), p * (-s).exp());
                if u >= 1.0 || v >= 1.0 {
                    f64::INFINITY
                } else {
                    (1.0 - p) * (1.0 - p) / ((1.0 - u) * (1.0 - v))
                }
            }
            NoiseMechanism::CenteredGeometric { q } => {
                let r = (1.0 - q) * s.exp();
                if r >= 1.0 {
                    f64::INFINITY
                } else {
                    q / (1.0 - r) * (-s * (1.0 - q) / q).exp()
                }
            }
            NoiseMechanism::Hermite { a1, a2 } => (a1 * em1(s) + a2 * em1(2.0 * s)).exp(),
            NoiseMechanism::TwoSideHermite { a1, a2 } => {
                (a1 * (em1(s) + em1(-s)) + a2 * (em1(2.0 * s) + em1(-2.0 * s))).exp()
            }
            NoiseMechanism::TwoSidePoisson { lambda, mu } => (lambda * em1(s) + mu * em1(-s)).exp(),
        }
    }

    /// `E e^{theta |X - E X|}` for `theta >= 0`, `+inf` where it diverges.
    pub fn centered_abs_mgf(&self, theta: f64) -> f64 {
        match *self {
            NoiseMechanism::ContinuousLaplace { b } => {
                if theta * b >= 1.0 {
                    f64::INFINITY
                } else {
                    1.0 / (1.0 - theta * b)
                }
            }
            NoiseMechanism::DiscreteLaplace { p } => {
                let r = p * theta.exp();
                if r >= 1.0 {
                    f64::INFINITY
                } else {
                    (1.0 - p) / (1.0 + p) * (1.0 + 2.0 * r / (1.0 - r))
                }
            }
            NoiseMechanism::CenteredGeometric { q } => {
                let r = (1.0 - q) * theta.exp();
                if r >= 1.0 {
                    return f64::INFINITY;
                }
                let m = (1.0 - q) / q;
                let k0 = m.floor() as i64 + 1;
                let below: f64 = (0..k0)
                    .map(|k| q * (1.0 - q).powi(k as i32) * (theta * (m - k as f64)).exp())
                    .sum();
                // sum_{k >= k0} q (1-q)^k e^{theta (k - m)}, a geometric series
                let above = q * (1.0 - q).powi(k0 as i32) * (theta * (k0 as f64 - m)).exp() / (1.0 - r);
                below + above
            }
            _ => {
                let (mean, _) = self.moments();
                let table = self.pmf_table().expect("discrete law");
                table
                    .iter()
                    .map(|(k, p)| p * (theta * (k as f64 - mean).abs()).exp())
                    .sum()
            }
        }
    }

    /// Sub-exponential norm `inf { t > 0 : E exp(|X - E X| / t) <= 2 }`,
    /// found by bisection.
    pub fn psi1_norm(&self) -> f64 {
        psi1_from_abs_mgf(|theta| self.centered_abs_mgf(theta), self.moments().1.sqrt())
    }

    /// A certificate `(upsilon, c)` for the centered law.
    ///
    /// Poisson-built laws use Bernstein's bound for jumps of size at most `r`:
    /// `(variance, r/3)`. Geometric and Laplace laws go through the
    /// sub-exponential norm: `(4 psi^2, 2 psi)`.
    pub fn sub_gamma_witness(&self) -> SubGammaParams {
        match *self {
            NoiseMechanism::Hermite { .. } | NoiseMechanism::TwoSideHermite { .. } => SubGammaParams {
                upsilon: self.moments().1,
                c: 2.0 / 3.0,
            },
            NoiseMechanism::TwoSidePoisson { .. } => SubGammaParams {
                upsilon: self.moments().1,
                c: 1.0 / 3.0,
            },
            _ => {
                let psi = self.psi1_norm();
                SubGammaParams {
                    upsilon: 4.0 * psi * psi,
                    c: 2.0 * psi,
                }
            }
        }
    }
}

/// Bisection for the root of `f(1/t) = 2` where `f` is an absolute-value
/// MGF; `scale` is any positive starting guess for `t`.
pub(crate) fn psi1_from_abs_mgf(f: impl Fn(f64) -> f64, scale: f64) -> f64 {
    let g = |t: f64| f(1.0 / t);
    let mut hi = scale.max(1e-12);
    while g(hi) > 2.0 {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    while g(lo) <= 2.0 {
        hi = lo;
        lo /= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Number of lattice points after which a geometric tail `r^k` drops below
/// `1e-17`.
fn geometric_cutoff(r: f64) -> i64 {
    ((1e-17f64).ln() / r.ln()).ceil().max(1.0) as i64
}

/// Generous upper support cut-off for Poisson-built laws.
fn poisson_cutoff(mean: f64, var: f64) -> i64 {
    (mean + 15.0 * var.sqrt() + 40.0).ceil() as i64
}

fn ln_poisson(lambda: f64, k: i64) -> f64 {
    if k < 0 {
        f64::NEG_INFINITY
    } else if lambda == 0.0 {
        if k == 0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        k as f64 * lambda.ln() - lambda - ln_factorial(k as u64)
    }
}

fn hermite_pmf(a1: f64, a2: f64, k: i64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    (0..=k / 2)
        .map(|j| (ln_poisson(a1, k - 2 * j) + ln_poisson(a2, j)).exp())
        .sum()
}

fn two_side_poisson_pmf(lambda: f64, mu: f64, k: i64) -> f64 {
    if mu == 0.0 {
        return ln_poisson(lambda, k).exp();
    }
    if lambda == 0.0 {
        return ln_poisson(mu, -k).exp();
    }
    let x = 2.0 * (lambda * mu).sqrt();
    (-(lambda + mu) + 0.5 * k as f64 * (lambda / mu).ln() + ln_bessel_i(k.unsigned_abs() as u32, x)).exp()
}

/// `ln I_n(x)` for `x > 0` from the power series, with the leading factor
/// `(x/2)^n / n!` taken out in log space.
fn ln_bessel_i(n: u32, x: f64) -> f64 {
    let h2 = 0.25 * x * x;
    let (mut term, mut sum) = (1.0f64, 1.0f64);
    let mut k = 0.0;
    loop {
        term *= h2 / ((k + 1.0) * (k + 1.0 + n as f64));
        sum += term;
        k += 1.0;
        if term < 1e-16 * sum {
            break;
        }
    }
    n as f64 * (0.5 * x).ln() - ln_factorial(n as u64) + sum.ln()
}

/// Modified Bessel function of the first kind `I_n(x)` for integer order
/// and `x >= 0`.
pub fn bessel_i(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    ln_bessel_i(n, x).exp()
}

/// Failures before the first success, success probability `q`.
fn geometric<R: Rng + ?Sized>(q: f64, rng: &mut R) -> u64 {
    let u = 1.0 - rng.random::<f64>(); // (0, 1]
    (u.ln() / (1.0 - q).ln()).floor() as u64
}

fn poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda == 0.0 {
        return 0;
    }
    if lambda > 30.0 {
        return Poisson::new(lambda).expect("positive intensity").sample(rng) as u64;
    }
    let u: f64 = rng.random();
    let mut p = (-lambda).exp();
    let mut cdf = p;
    let mut k = 0u64;
    while u > cdf && k < 1000 {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
    }
    k
}

fn hermite_draw<R: Rng + ?Sized>(a1: f64, a2: f64, rng: &mut R) -> u64 {
    poisson(a1, rng) + 2 * poisson(a2, rng)
}

impl fmt::Display for NoiseMechanism {
    /// Writes the grammar string accepted by [`FromStr`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NoiseMechanism::ContinuousLaplace { b } => write!(f, "lap:b={b}"),
            NoiseMechanism::DiscreteLaplace { p } => write!(f, "dlap:p={p}"),
            NoiseMechanism::CenteredGeometric { q } => write!(f, "geo:q={q}"),
            NoiseMechanism::Hermite { a1, a2 } => write!(f, "herm:a1={a1},a2={a2}"),
            NoiseMechanism::TwoSideHermite { a1, a2 } => write!(f, "herm2:a1={a1},a2={a2}"),
            NoiseMechanism::TwoSidePoisson { lambda, mu } => write!(f, "tsp:lambda={lambda},mu={mu}"),
        }
    }
}

impl FromStr for NoiseMechanism {
    type Err = Error;

    /// Parses `kind:key=value,...`. Kinds: `lap` (`b`), `dlap` (`p`),
    /// `geo` (`q`), `herm` and `herm2` (`a1`, `a2`, or `case` with optional
    /// `lambda0`), `tsp` (`lambda`, `mu`). Keys are case-insensitive.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("noise spec `{s}` lacks `kind:`")))?;
        let mut args = BTreeMap::new();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected key=value, got `{part}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("`{v}` is not a number")))?;
            args.insert(k.trim().to_ascii_lowercase(), v);
        }
        let mut take = |key: &str| {
            args.remove(key)
                .ok_or_else(|| Error::invalid(format!("noise spec `{s}` is missing `{key}`")))
        };
        let kind = kind.trim().to_ascii_lowercase();
        let mech = match kind.as_str() {
            "lap" => NoiseMechanism::laplace(take("b")?)?,
            "dlap" => NoiseMechanism::discrete_laplace(take("p")?)?,
            "geo" => NoiseMechanism::centered_geometric(take("q")?)?,
            "tsp" => NoiseMechanism::two_side_poisson(take("lambda")?, take("mu")?)?,
            "herm" | "herm2" => {
                if let Ok(case) = take("case") {
                    let lambda0 = take("lambda0").unwrap_or(2.0);
                    if case.fract() != 0.0 || !(1.0..=3.0).contains(&case) {
                        return Err(Error::invalid(format!("Hermite case must be 1, 2 or 3, got {case}")));
                    }
                    match NoiseMechanism::hermite_case(case as u8, lambda0)? {
                        NoiseMechanism::TwoSideHermite { a1, a2 } if kind == "herm" => {
                            NoiseMechanism::hermite(a1, a2)?
                        }
                        m => m,
                    }
                } else {
                    let (a1, a2) = (take("a1")?, take("a2")?);
                    if kind == "herm" {
                        NoiseMechanism::hermite(a1, a2)?
                    } else {
                        NoiseMechanism::two_side_hermite(a1, a2)?
                    }
                }
            }
            other => return Err(Error::invalid(format!("unknown noise kind `{other}`"))),
        };
        if let Some(extra) = args.keys().next() {
            return Err(Error::invalid(format!("unexpected key `{extra}` in `{s}`")));
        }
        Ok(mech)
    }
}
