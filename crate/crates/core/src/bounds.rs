//! Closed-form concentration bounds and a Monte Carlo checker that compares
//! each bound with the empirical tail of a matching noise sum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseMechanism;
use crate::rng;

/// A tail inequality with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailBoundSpec {
    /// `P(|X| > t) <= 2 exp(-t / psi)` for one variable with sub-exponential
    /// norm `psi`.
    SubExpNorm { psi: f64 },
    /// `P(|S| >= t) <= 2 exp(-1/4 min(t^2 / sum 2 psi_i^2, t / max psi_i))`
    /// for a sum of independent centered sub-exponential variables.
    SubExpSum { psi: Vec<f64> },
    /// Bernstein: `P(|S| >= t) <= 2 exp(-t^2 / (2 nu2 + 2 kappa t))` where
    /// `nu2 = sum nu_i^2` and `E|X_i|^k <= nu_i^2 kappa^{k-2} k!/2`.
    Bernstein { nu2: f64, kappa: f64 },
    /// `P(|S| >= t) <= 2 exp(-(t^2/2) / (upsilon + c t))` where `upsilon` is
    /// the summed variance factor and `c` the largest scale.
    SubGammaSum { upsilon: f64, c: f64 },
    /// Union bound `P(max_i |X_i| >= t) <= 2 n exp(-t^2 / (2 (upsilon + c t)))`
    /// with `upsilon`, `c` the largest per-variable parameters.
    SubGammaMax { upsilon: f64, c: f64, n: usize },
    /// Weighted sums of independent compound Poisson variables with jumps
    /// at most `r`: `|sum w_i (Y_i - E Y_i)| >= w [(2 x sum sigma_i^2)^{1/2} + r x/3]`
    /// with probability at most `2 e^{-x}`, `w = max |w_i|`.
    HermiteSum { sigma2: Vec<f64>, r: f64, weights: Vec<f64> },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be > 0, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be >= 0, got {v}")))
    }
}

impl TailBoundSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            TailBoundSpec::SubExpNorm { psi } => positive("psi", *psi),
            TailBoundSpec::SubExpSum { psi } => {
                if psi.is_empty() {
                    return Err(Error::invalid("empty psi list"));
                }
                psi.iter().try_for_each(|&p| positive("psi", p))
            }
            TailBoundSpec::Bernstein { nu2, kappa } => {
                positive("nu2", *nu2)?;
                nonnegative("kappa", *kappa)
            }
            TailBoundSpec::SubGammaSum { upsilon, c } => {
                positive("upsilon", *upsilon)?;
                nonnegative("c", *c)
            }
            TailBoundSpec::SubGammaMax { upsilon, c, n } => {
                positive("upsilon", *upsilon)?;
                nonnegative("c", *c)?;
                if *n == 0 {
                    return Err(Error::invalid("n must be >= 1"));
                }
                Ok(())
            }
            TailBoundSpec::HermiteSum { sigma2, r, weights } => {
                if sigma2.is_empty() || sigma2.len() != weights.len() {
                    return Err(Error::LengthMismatch { expected: sigma2.len(), got: weights.len() });
                }
                sigma2.iter().try_for_each(|&s| positive("sigma2", s))?;
                positive("r", *r)?;
                if weights.iter().any(|w| !w.is_finite()) || weights.iter().all(|&w| w == 0.0) {
                    return Err(Error::invalid("weights must be finite and not all zero"));
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TailBoundSpec::SubExpNorm { .. } => "subexp_norm",
            TailBoundSpec::SubExpSum { .. } => "subexp_sum",
            TailBoundSpec::Bernstein { .. } => "bernstein",
            TailBoundSpec::SubGammaSum { .. } => "subgamma_sum",
            TailBoundSpec::SubGammaMax { .. } => "subgamma_max",
            TailBoundSpec::HermiteSum { .. } => "hermite_sum",
        }
    }

    fn hermite_parts(sigma2: &[f64], r: f64, weights: &[f64]) -> (f64, f64, f64) {
        let w = weights.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let a = (2.0 * sigma2.iter().sum::<f64>()).sqrt();
        (w, a, r / 3.0)
    }

    /// Probability bound at deviation `t`, capped at one. For
    /// [`TailBoundSpec::HermiteSum`] the radius relation is inverted:
    /// the returned value is `2 e^{-x}` for the `x` whose radius equals `t`.
    pub fn probability_at(&self, t: f64) -> Result<f64> {
        self.validate()?;
        if !(t >= 0.0) {
            return Err(Error::invalid(format!("deviation must be >= 0, got {t}")));
        }
        let p = match self {
            TailBoundSpec::SubExpNorm { psi } => 2.0 * (-t / psi).exp(),
            TailBoundSpec::SubExpSum { psi } => {
                let s2: f64 = psi.iter().map(|p| 2.0 * p * p).sum();
                let pmax = psi.iter().fold(0.0f64, |m, &p| m.max(p));
                2.0 * (-0.25 * (t * t / s2).min(t / pmax)).exp()
            }
            TailBoundSpec::Bernstein { nu2, kappa } => 2.0 * (-t * t / (2.0 * nu2 + 2.0 * kappa * t)).exp(),
            TailBoundSpec::SubGammaSum { upsilon, c } => 2.0 * (-(t * t / 2.0) / (upsilon + c * t)).exp(),
            TailBoundSpec::SubGammaMax { upsilon, c, n } => {
                2.0 * *n as f64 * (-t * t / (2.0 * (upsilon + c * t))).exp()
            }
            TailBoundSpec::HermiteSum { sigma2, r, weights } => {
                let (w, a, b) = Self::hermite_parts(sigma2, *r, weights);
                // solve w (a y + b y^2) = t for y = sqrt(x) >= 0
                let y = (-a + (a * a + 4.0 * b * t / w).sqrt()) / (2.0 * b);
                2.0 * (-y * y).exp()
            }
        };
        Ok(p.min(1.0))
    }

    /// Deviation radius `w [(2 x sum sigma_i^2)^{1/2} + r x / 3]` that is
    /// exceeded with probability at most `2 e^{-x}`.
    pub fn hermite_radius(&self, x: f64) -> Result<f64> {
        self.validate()?;
        if !(x >= 0.0) {
            return Err(Error::invalid(format!("x must be >= 0, got {x}")));
        }
        match self {
            TailBoundSpec::HermiteSum { sigma2, r, weights } => {
                let (w, a, b) = Self::hermite_parts(sigma2, *r, weights);
                Ok(w * (a * x.sqrt() + b * x))
            }
            _ => Err(Error::Unsupported(format!("{} has no radius form", self.name()))),
        }
    }
}

/// Evaluates a bound at `t`. Probability kinds return the capped right-hand
/// side; [`TailBoundSpec::HermiteSum`] reads `t` as the exponent `x` and
/// returns the radius.
pub fn tail_bound(spec: &TailBoundSpec, t: f64) -> Result<f64> {
    match spec {
        TailBoundSpec::HermiteSum { .. } => spec.hermite_radius(t),
        _ => spec.probability_at(t),
    }
}

/// `E max_i |X_i| <= sqrt(2 upsilon log 2n) + c log 2n`.
pub fn max_expectation_bound(upsilon: f64, c: f64, n: usize) -> f64 {
    let l = (2.0 * n as f64).ln();
    (2.0 * upsilon * l).sqrt() + c * l
}

/// Sub-exponential norm of the centered mechanism.
pub fn psi1_norm(mech: &NoiseMechanism) -> Result<f64> {
    Ok(mech.psi1_norm())
}

/// Which functional of `n` iid centered draws a bound speaks about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// `|X_1|`.
    Single,
    /// `|sum_i X_i|`.
    Sum,
    /// `max_i |X_i|`.
    Max,
    /// `|sum_i X_i| / n`.
    Mean,
}

/// The bound a mechanism certifies for `n` iid draws, and the statistic it
/// controls.
pub fn matched_bound(kind: &str, mech: &NoiseMechanism, n: usize) -> Result<(TailBoundSpec, Statistic)> {
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    let psi = mech.psi1_norm();
    let w = mech.sub_gamma_witness();
    let spec = match kind {
        "subexp_norm" => return Ok((TailBoundSpec::SubExpNorm { psi }, Statistic::Single)),
        "subexp_sum" => TailBoundSpec::SubExpSum { psi: vec![psi; n] },
        // growth-of-moments constants from E|X|^k <= 2 psi^k k!
        "bernstein" => TailBoundSpec::Bernstein {
            nu2: n as f64 * 4.0 * psi * psi,
            kappa: psi,
        },
        "subgamma_sum" => TailBoundSpec::SubGammaSum {
            upsilon: n as f64 * w.upsilon,
            c: w.c,
        },
        "subgamma_max" => {
            return Ok((
                TailBoundSpec::SubGammaMax { upsilon: w.upsilon, c: w.c, n },
                Statistic::Max,
            ))
        }
        "hermite_sum" => {
            let (a1, a2) = match *mech {
                NoiseMechanism::Hermite { a1, a2 } => (a1, a2),
                _ => return Err(Error::Unsupported("hermite_sum needs a Hermite mechanism".into())),
            };
            return Ok((
                TailBoundSpec::HermiteSum {
                    sigma2: vec![a1 + 4.0 * a2; n],
                    r: 2.0,
                    weights: vec![1.0 / n as f64; n],
                },
                Statistic::Mean,
            ));
        }
        other => return Err(Error::invalid(format!("unknown bound kind `{other}`"))),
    };
    Ok((spec, Statistic::Sum))
}

pub const BOUND_KINDS: [&str; 6] = [
    "subexp_norm",
    "subexp_sum",
    "bernstein",
    "subgamma_sum",
    "subgamma_max",
    "hermite_sum",
];

/// One row of a bound-versus-simulation table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationRow {
    pub t: f64,
    pub bound: f64,
    pub empirical: f64,
    pub mc_stderr: f64,
}

impl DominationRow {
    /// `empirical <= bound + slack * mc_stderr`.
    pub fn dominated(&self, slack: f64) -> bool {
        self.empirical <= self.bound + slack * self.mc_stderr
    }
}

/// Draws `reps` values of `stat` over `n` iid centered draws of `mech`,
/// replicate `k` using substream `k` of `seed`.
pub fn simulate_statistic(mech: &NoiseMechanism, n: usize, stat: Statistic, reps: usize, seed: u64) -> Vec<f64> {
    let mean = mech.moments().0;
    (0..reps)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::substream(seed, k as u64);
            let mut draws = (0..if stat == Statistic::Single { 1 } else { n }).map(|_| mech.sample(&mut r) - mean);
            match stat {
                Statistic::Single => draws.next().unwrap_or(0.0).abs(),
                Statistic::Sum => draws.sum::<f64>().abs(),
                Statistic::Mean => draws.sum::<f64>().abs() / n as f64,
                Statistic::Max => draws.fold(0.0f64, |m, x| m.max(x.abs())),
            }
        })
        .collect()
}

/// `points` evenly spaced deviations from 0 up to where the bound falls to
/// `floor`.
pub fn default_grid(spec: &TailBoundSpec, points: usize, floor: f64) -> Result<Vec<f64>> {
    let mut hi = 1.0;
    while spec.probability_at(hi)? > floor {
        hi *= 2.0;
    }
    Ok((0..points).map(|k| hi * k as f64 / (points - 1).max(1) as f64).collect())
}

/// Compares the bound with the empirical survival `P(stat >= t)` on `grid`.
pub fn verify_domination(spec: &TailBoundSpec, samples: &[f64], grid: &[f64]) -> Result<Vec<DominationRow>> {
    let m = samples.len() as f64;
    grid.iter()
        .map(|&t| {
            let emp = samples.iter().filter(|&&s| s >= t).count() as f64 / m;
            Ok(DominationRow {
                t,
                bound: spec.probability_at(t)?,
                empirical: emp,
                mc_stderr: (emp * (1.0 - emp) / m).sqrt(),
            })
        })
        .collect()
}
