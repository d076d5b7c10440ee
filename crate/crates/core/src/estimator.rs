//! Moment estimator: solve `d~_i = sum_{j != i} p(alpha_i + alpha_j)` for
//! `alpha` by damped Newton iteration, then build Wald intervals from the
//! Jacobian diagonal.
//!
//! Statistical nonexistence (a nonpositive noisy degree, a saturated one,
//! or a Newton run that does not converge) is reported in
//! [`EstimateResult`], never as an error.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkmodels::{mean_degrees, DegreeSeq, LinkKind, ParamVector};
use crate::noise::NoiseMechanism;
use crate::stats::two_sided_z;

/// Degrees after additive noise. Entries are real and may fall outside
/// `[0, n-1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyDegreeSeq(Vec<f64>);

impl NoisyDegreeSeq {
    pub fn new(dtilde: Vec<f64>) -> Result<Self> {
        if dtilde.len() < 2 {
            return Err(Error::invalid("need at least 2 vertices"));
        }
        if let Some(i) = dtilde.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("noisy degree {i} is not finite")));
        }
        Ok(NoisyDegreeSeq(dtilde))
    }

    /// The noiseless release `d~ = d`.
    pub fn exact(d: &DegreeSeq) -> Self {
        NoisyDegreeSeq(d.to_f64())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Applies the same vertex relabeling `out[k] = self[perm[k]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        NoisyDegreeSeq(perm.iter().map(|&k| self.0[k]).collect())
    }
}

/// Adds one independent draw of `noise` to every degree.
pub fn privatize<R: Rng + ?Sized>(d: &DegreeSeq, noise: &NoiseMechanism, rng: &mut R) -> NoisyDegreeSeq {
    NoisyDegreeSeq(
        d.as_slice()
            .iter()
            .map(|&x| x as f64 + noise.sample(rng))
            .collect(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative tolerance: stop once `||F||_inf <= tol * max(1, ||d~||_inf)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Step halvings allowed per iteration while searching for a decrease
    /// of `||F||_2`.
    pub max_halvings: usize,
    /// Replace `V^{-1}` by `diag(1/V_ii)` in the update.
    pub approx_jacobian: bool,
    /// Starting point; defaults to a per-vertex inversion of `d~_i/(n-1)`.
    pub initial: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 200,
            max_halvings: 40,
            approx_jacobian: false,
            initial: None,
        }
    }
}

/// Why an estimate does not exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonexistence {
    /// Some `d~_i <= 0`; 0-indexed vertex.
    NonPositiveDegree(usize),
    /// Some `d~_i >= n - 1` under a link with probabilities bounded by one.
    SaturatedDegree(usize),
    SingularJacobian,
    NoConvergence,
}

impl fmt::Display for Nonexistence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonexistence::NonPositiveDegree(i) => write!(f, "noisy degree of vertex {} is not positive", i + 1),
            Nonexistence::SaturatedDegree(i) => write!(f, "noisy degree of vertex {} is at least n-1", i + 1),
            Nonexistence::SingularJacobian => f.write_str("singular Jacobian"),
            Nonexistence::NoConvergence => f.write_str("Newton iteration did not converge"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub link: LinkKind,
    /// `None` when the estimate does not exist.
    pub alpha_hat: Option<ParamVector>,
    /// Jacobian diagonal `v_ii` at `alpha_hat`; empty when nonexistent.
    pub v_hat: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub residual_inf: f64,
    pub exists: bool,
    pub reason: Option<Nonexistence>,
}

impl EstimateResult {
    fn absent(link: LinkKind, reason: Nonexistence, iterations: usize, residual_inf: f64) -> Self {
        EstimateResult {
            link,
            alpha_hat: None,
            v_hat: Vec::new(),
            converged: false,
            iterations,
            residual_inf,
            exists: false,
            reason: Some(reason),
        }
    }

    pub fn alpha(&self) -> Result<&ParamVector> {
        self.alpha_hat.as_ref().ok_or_else(|| {
            Error::Unavailable(self.reason.map_or_else(|| "no estimate".into(), |r| r.to_string()))
        })
    }

    /// Standard error `v_ii^{-1/2}` of `alpha_hat_i`.
    pub fn std_error(&self, i: usize) -> Result<f64> {
        self.alpha()?;
        let v = self.v_hat.get(i).ok_or_else(|| Error::invalid(format!("vertex {i} out of range")))?;
        Ok(v.sqrt().recip())
    }

    /// `max_{i != j} |alpha_hat_i + alpha_hat_j|`, a diagnostic for how far
    /// the fit sits from the balanced regime.
    pub fn max_abs_pair_sum(&self) -> Option<f64> {
        self.alpha_hat.as_ref().map(ParamVector::max_abs_pair_sum)
    }
}

/// `V = -dF/dalpha`: `V_ij = p'(alpha_i + alpha_j)` off the diagonal and
/// `V_ii = sum_{j != i} V_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianMatrix {
    pub matrix: DMatrix<f64>,
    /// Smallest off-diagonal entry.
    pub m: f64,
    /// Largest off-diagonal entry.
    pub big_m: f64,
}

impl JacobianMatrix {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().copied().collect()
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

/// `F_i = d~_i - sum_{j != i} p(alpha_i + alpha_j)`.
///
/// The mean function is evaluated on the whole real line (for the log link
/// this is `e^x` even where it exceeds one), so the estimator can cross the
/// probability domain while searching for a root.
pub fn moment_residual(link: LinkKind, alpha: &ParamVector, dtilde: &NoisyDegreeSeq) -> Result<Vec<f64>> {
    check_len(alpha.len(), dtilde.len())?;
    Ok(residual(link, alpha.as_slice(), dtilde.as_slice()))
}

fn residual(link: LinkKind, alpha: &[f64], dtilde: &[f64]) -> Vec<f64> {
    let mut f = mean_degrees(link, alpha);
    for (fi, d) in f.iter_mut().zip(dtilde) {
        *fi = d - *fi;
    }
    f
}

pub fn jacobian(link: LinkKind, alpha: &ParamVector) -> JacobianMatrix {
    jacobian_of(link, alpha.as_slice())
}

fn jacobian_of(link: LinkKind, alpha: &[f64]) -> JacobianMatrix {
    let n = alpha.len();
    let mut v = DMatrix::zeros(n, n);
    let (mut m, mut big_m) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        for j in i + 1..n {
            let x = link.mean_deriv(alpha[i] + alpha[j]);
            v[(i, j)] = x;
            v[(j, i)] = x;
            m = m.min(x);
            big_m = big_m.max(x);
        }
    }
    for i in 0..n {
        let s: f64 = (0..n).filter(|&j| j != i).map(|j| v[(i, j)]).sum();
        v[(i, i)] = s;
    }
    JacobianMatrix { matrix: v, m, big_m }
}

/// Diagonal approximate inverse `S = diag(1/V_ii)`.
pub fn approx_inverse_s(v: &JacobianMatrix) -> Result<DMatrix<f64>> {
    let d = v.matrix.diagonal();
    if let Some(i) = d.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::DegenerateMatrix(format!("diagonal entry {i} is {}", d[i])));
    }
    Ok(DMatrix::from_diagonal(&d.map(f64::recip)))
}

fn initial_point(link: LinkKind, dtilde: &[f64]) -> Vec<f64> {
    let n1 = (dtilde.len() - 1) as f64;
    let delta = 1.0 / (2.0 * n1);
    dtilde
        .iter()
        .map(|d| 0.5 * link.link((d / n1).clamp(delta, 1.0 - delta)))
        .collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn two_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves the moment equations for `dtilde`.
pub fn solve(link: LinkKind, dtilde: &NoisyDegreeSeq, opts: &SolverOptions) -> Result<EstimateResult> {
    let n = dtilde.len();
    let d = dtilde.as_slice();
    if let Some(init) = &opts.initial {
        check_len(n, init.len())?;
        if init.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("initial point has non-finite entries"));
        }
    }
    if let Some(i) = d.iter().position(|&x| x <= 0.0) {
        return Ok(EstimateResult::absent(link, Nonexistence::NonPositiveDegree(i), 0, f64::NAN));
    }
    if link != LinkKind::Log {
        if let Some(i) = d.iter().position(|&x| x >= (n - 1) as f64) {
            return Ok(EstimateResult::absent(link, Nonexistence::SaturatedDegree(i), 0, f64::NAN));
        }
    }

    let tol = opts.tol * inf_norm(d).max(1.0);
    let mut alpha = opts.initial.clone().unwrap_or_else(|| initial_point(link, d));
    let mut f = residual(link, &alpha, d);
    let mut iterations = 0;
    let converged = loop {
        if inf_norm(&f) <= tol {
            break true;
        }
        if iterations == opts.max_iter {
            break false;
        }
        let v = jacobian_of(link, &alpha);
        let rhs = DVector::from_column_slice(&f);
        let step = if opts.approx_jacobian {
            Some(rhs.component_div(&v.matrix.diagonal()))
        } else {
            // V is symmetric positive definite for n >= 3; LU covers the rest
            match v.matrix.clone().cholesky() {
                Some(c) => Some(c.solve(&rhs)),
                None => v.matrix.lu().solve(&rhs),
            }
        };
        let step = match step {
            Some(s) if s.iter().all(|x| x.is_finite()) => s,
            _ => {
                return Ok(EstimateResult::absent(link, Nonexistence::SingularJacobian, iterations, inf_norm(&f)));
            }
        };
        // F decreases along +step since dF/dalpha = -V
        let current = two_norm(&f);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let cand: Vec<f64> = alpha.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            let fc = residual(link, &cand, d);
            if fc.iter().all(|x| x.is_finite()) && two_norm(&fc) < current {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((a, fc)) => {
                alpha = a;
                f = fc;
            }
            None => break false,
        }
    };

    let residual_inf = inf_norm(&f);
    if !converged {
        return Ok(EstimateResult::absent(link, Nonexistence::NoConvergence, iterations, residual_inf));
    }
    let v_hat = jacobian_of(link, &alpha).diagonal();
    Ok(EstimateResult {
        link,
        alpha_hat: Some(ParamVector::new(alpha)?),
        v_hat,
        converged: true,
        iterations,
        residual_inf,
        exists: true,
        reason: None,
    })
}

/// What a Wald interval is built for (0-indexed vertices).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CiTarget {
    /// `alpha_i - alpha_j`, standard error `(1/v_ii + 1/v_jj)^{1/2}`.
    Difference(usize, usize),
    /// `alpha_i`, standard error `v_ii^{-1/2}`.
    Single(usize),
}

/// Two-sided Wald interval at confidence `level`.
pub fn confidence_interval(result: &EstimateResult, target: CiTarget, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("level must lie in (0, 1), got {level}")));
    }
    let alpha = result.alpha()?;
    let n = alpha.len();
    let check = |i: usize| {
        if i < n {
            Ok(())
        } else {
            Err(Error::invalid(format!("vertex {i} out of range for n={n}")))
        }
    };
    let (center, se) = match target {
        CiTarget::Difference(i, j) => {
            check(i)?;
            check(j)?;
            if i == j {
                return Err(Error::invalid("difference interval needs two distinct vertices"));
            }
            (alpha[i] - alpha[j], (1.0 / result.v_hat[i] + 1.0 / result.v_hat[j]).sqrt())
        }
        CiTarget::Single(i) => {
            check(i)?;
            (alpha[i], result.v_hat[i].sqrt().recip())
        }
    };
    let half = two_sided_z(level) * se;
    Ok((center - half, center + half))
}

/// `(alpha_hat_i + alpha_hat_j - alpha_i - alpha_j) / (1/v_ii + 1/v_jj)^{1/2}`;
/// asymptotically standard normal.
pub fn xi_statistic(result: &EstimateResult, truth: &ParamVector, i: usize, j: usize) -> Result<f64> {
    let alpha = result.alpha()?;
    check_len(alpha.len(), truth.len())?;
    if i >= alpha.len() || j >= alpha.len() || i == j {
        return Err(Error::invalid(format!("bad vertex pair ({i}, {j})")));
    }
    let num = alpha[i] + alpha[j] - truth[i] - truth[j];
    Ok(num / (1.0 / result.v_hat[i] + 1.0 / result.v_hat[j]).sqrt())
}
