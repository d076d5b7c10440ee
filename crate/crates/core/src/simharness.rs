//! Simulation harness: repeated sample → privatize → estimate runs with
//! coverage, interval length, nonexistence frequency and QQ data.
//!
//! Replicate `k` of a scenario always draws from substream `k` of the
//! scenario seed, and replicates are merged in index order, so reports do
//! not depend on the number of worker threads.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{confidence_interval, privatize, solve, xi_statistic, CiTarget, NoisyDegreeSeq, SolverOptions};
use crate::linkmodels::{expected_degrees, sample_graph, LinkKind, ParamVector};
use crate::noise::NoiseMechanism;
use crate::rng;
use crate::stats::normal_quantile;

/// `alpha_i = i L / n` for `i = 1..n`.
pub fn truth_vector(n: usize, l: f64) -> Result<ParamVector> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 vertices, got {n}")));
    }
    ParamVector::new((1..=n).map(|i| i as f64 * l / n as f64).collect())
}

/// The three truth scales studied for each link at size `n`:
/// log `-(ln ln n)^{1/3}, -(ln ln n)^{1/2}, -ln ln n`;
/// logit `0, ln ln n, (ln n)^{1/2}`;
/// cloglog `(ln ln ln n)^{3/2}, (ln ln ln n)^{5/4}, ln ln ln n`.
pub fn standard_scales(link: LinkKind, n: usize) -> [f64; 3] {
    let ln = (n as f64).ln();
    let lln = ln.ln();
    let llln = lln.ln();
    match link {
        LinkKind::Log => [-lln.powf(1.0 / 3.0), -lln.sqrt(), -lln],
        LinkKind::Logit => [0.0, lln, ln.sqrt()],
        LinkKind::Cloglog => [llln.powf(1.5), llln.powf(1.25), llln],
    }
}

/// Reported pairs `(1,2), (n/2, n/2+1), (n-1, n)`, 1-indexed.
pub fn default_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = vec![(1, 2), (n / 2, n / 2 + 1), (n - 1, n)];
    pairs.dedup();
    pairs.retain(|&(i, _)| i >= 1);
    pairs
}

/// One simulation cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n: usize,
    pub link: LinkKind,
    /// Truth scale `L` in `alpha_i = i L / n`.
    #[serde(rename = "L")]
    pub truth_scale: f64,
    /// Additive noise; `None` releases exact degrees.
    #[serde(with = "noise_grammar", default)]
    pub noise: Option<NoiseMechanism>,
    pub replicates: usize,
    pub seed: u64,
    /// 1-indexed vertex pairs whose differences are reported.
    pub pairs: Vec<(usize, usize)>,
    #[serde(default = "default_level")]
    pub level: f64,
    /// Feed `d~ = E d` instead of sampling; a sanity mode.
    #[serde(default)]
    pub expected_degrees: bool,
    #[serde(default)]
    pub approx_jacobian: bool,
}

fn default_level() -> f64 {
    0.95
}

impl Scenario {
    pub fn new(n: usize, link: LinkKind, truth_scale: f64, noise: Option<NoiseMechanism>, replicates: usize, seed: u64) -> Self {
        Scenario {
            n,
            link,
            truth_scale,
            noise,
            replicates,
            seed,
            pairs: if n >= 2 { default_pairs(n) } else { Vec::new() },
            level: default_level(),
            expected_degrees: false,
            approx_jacobian: false,
        }
    }

    pub fn validate(&self) -> Result<ParamVector> {
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be >= 1"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::invalid(format!("level must lie in (0, 1), got {}", self.level)));
        }
        if self.pairs.is_empty() {
            return Err(Error::invalid("no pairs requested"));
        }
        for &(i, j) in &self.pairs {
            if i == j || i == 0 || j == 0 || i > self.n || j > self.n {
                return Err(Error::invalid(format!("pair ({i}, {j}) is not a pair of distinct vertices in 1..={}", self.n)));
            }
        }
        let truth = truth_vector(self.n, self.truth_scale)?;
        truth.check_domain(self.link)?;
        Ok(truth)
    }

    /// Human-readable noise label.
    pub fn noise_label(&self) -> String {
        self.noise.map_or_else(|| "none".to_string(), |m| m.to_string())
    }
}

/// Serializes noise as its grammar string, `"none"` for no noise.
mod noise_grammar {
    use super::NoiseMechanism;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<NoiseMechanism>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(m) => s.serialize_str(&m.to_string()),
            None => s.serialize_str("none"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<NoiseMechanism>, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_noise(&s).map_err(serde::de::Error::custom)
    }
}

/// Parses a noise grammar string, with `none` meaning no noise.
pub fn parse_noise(s: &str) -> Result<Option<NoiseMechanism>> {
    if s.trim().eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        s.parse().map(Some)
    }
}

/// Per-pair aggregates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    /// 1-indexed.
    pub pair: (usize, usize),
    /// Percent of existing estimates whose interval covers the true
    /// difference; `None` when no replicate produced an estimate.
    pub coverage_pct: Option<f64>,
    /// Mean full interval width.
    pub mean_length: Option<f64>,
    /// Mean half width `z (1/v_ii + 1/v_jj)^{1/2}`.
    pub mean_half_width: Option<f64>,
    /// Standardized statistics of existing replicates, in replicate order.
    pub xi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub scenario: Scenario,
    pub existing: usize,
    pub nonexistence_pct: f64,
    pub pairs: Vec<PairReport>,
}

impl CoverageReport {
    pub fn pair(&self, i: usize, j: usize) -> Result<&PairReport> {
        self.pairs
            .iter()
            .find(|p| p.pair == (i, j))
            .ok_or(Error::UnknownPair(i, j))
    }
}

#[derive(Clone, Debug)]
struct Outcome {
    exists: bool,
    // (covered, half width, xi) per pair
    pairs: Vec<(bool, f64, f64)>,
}

fn replicate(s: &Scenario, truth: &ParamVector, opts: &SolverOptions, k: usize) -> Result<Outcome> {
    let mut r = rng::substream(s.seed, k as u64);
    let dtilde = if s.expected_degrees {
        NoisyDegreeSeq::new(expected_degrees(s.link, truth)?)?
    } else {
        let d = sample_graph(s.link, truth, &mut r)?.degrees();
        match &s.noise {
            Some(m) => privatize(&d, m, &mut r),
            None => NoisyDegreeSeq::exact(&d),
        }
    };
    let res = solve(s.link, &dtilde, opts)?;
    if !res.exists {
        return Ok(Outcome { exists: false, pairs: Vec::new() });
    }
    let pairs = s
        .pairs
        .iter()
        .map(|&(i, j)| {
            let (i0, j0) = (i - 1, j - 1);
            let (lo, hi) = confidence_interval(&res, CiTarget::Difference(i0, j0), s.level)?;
            let target = truth[i0] - truth[j0];
            let xi = xi_statistic(&res, truth, i0, j0)?;
            Ok((lo <= target && target <= hi, 0.5 * (hi - lo), xi))
        })
        .collect::<Result<_>>()?;
    Ok(Outcome { exists: true, pairs })
}

/// Runs a scenario on the global thread pool.
pub fn run_scenario(s: &Scenario) -> Result<CoverageReport> {
    let truth = s.validate()?;
    let opts = SolverOptions { approx_jacobian: s.approx_jacobian, ..Default::default() };
    let outcomes: Vec<Outcome> = (0..s.replicates)
        .into_par_iter()
        .map(|k| replicate(s, &truth, &opts, k))
        .collect::<Result<_>>()?;
    Ok(aggregate(s, outcomes))
}

/// Runs a scenario on a dedicated pool of `workers` threads.
pub fn run_scenario_with_workers(s: &Scenario, workers: usize) -> Result<CoverageReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| run_scenario(s))
}

fn aggregate(s: &Scenario, outcomes: Vec<Outcome>) -> CoverageReport {
    let existing: Vec<&Outcome> = outcomes.iter().filter(|o| o.exists).collect();
    let m = existing.len();
    let pairs = s
        .pairs
        .iter()
        .enumerate()
        .map(|(p, &pair)| {
            let mut hits = 0usize;
            let mut half = 0.0;
            let mut xi = Vec::with_capacity(m);
            for o in &existing {
                let (hit, h, x) = o.pairs[p];
                hits += hit as usize;
                half += h;
                xi.push(x);
            }
            let mean = |v: f64| (m > 0).then(|| v / m as f64);
            PairReport {
                pair,
                coverage_pct: mean(100.0 * hits as f64),
                mean_length: mean(2.0 * half),
                mean_half_width: mean(half),
                xi,
            }
        })
        .collect();
    CoverageReport {
        scenario: s.clone(),
        existing: m,
        nonexistence_pct: 100.0 * (s.replicates - m) as f64 / s.replicates as f64,
        pairs,
    }
}

/// QQ points `(theoretical, empirical)`, non-decreasing in both coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct QqPoints(Vec<(f64, f64)>);

impl QqPoints {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        let sorted = points.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1);
        if !sorted {
            return Err(Error::invalid("QQ points must be non-decreasing in both coordinates"));
        }
        Ok(QqPoints(points))
    }

    /// Standard normal quantiles at `(k - 0.5)/m` against the sorted sample.
    pub fn from_sample(sample: &[f64]) -> Self {
        let mut ys = sample.to_vec();
        ys.sort_by(f64::total_cmp);
        let m = ys.len() as f64;
        QqPoints(
            ys.into_iter()
                .enumerate()
                .map(|(k, y)| (normal_quantile((k as f64 + 0.5) / m), y))
                .collect(),
        )
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.0
    }

    /// Largest `|empirical - theoretical|` over the central `fraction` of
    /// points.
    pub fn max_central_deviation(&self, fraction: f64) -> f64 {
        let m = self.0.len();
        let cut = ((1.0 - fraction) / 2.0 * m as f64).floor() as usize;
        self.0[cut..m - cut]
            .iter()
            .fold(0.0, |a, (x, y)| a.max((y - x).abs()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("theoretical,empirical\n");
        for (x, y) in &self.0 {
            let _ = writeln!(out, "{x},{y}");
        }
        out
    }
}

/// QQ data for a reported pair (1-indexed).
pub fn qq_export(report: &CoverageReport, pair: (usize, usize)) -> Result<QqPoints> {
    Ok(QqPoints::from_sample(&report.pair(pair.0, pair.1)?.xi))
}

/// One CSV row per reported pair; full precision.
pub fn reports_to_csv(reports: &[CoverageReport]) -> String {
    let mut out = String::from(
        "link,n,L,noise,replicates,seed,pair_i,pair_j,coverage_pct,length,half_width,nonexistence_pct\n",
    );
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for r in reports {
        let s = &r.scenario;
        for p in &r.pairs {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                s.link,
                s.n,
                s.truth_scale,
                s.noise_label(),
                s.replicates,
                s.seed,
                p.pair.0,
                p.pair.1,
                opt(p.coverage_pct),
                opt(p.mean_length),
                opt(p.mean_half_width),
                r.nonexistence_pct
            );
        }
    }
    out
}

/// Text table in blocks of (link, n, noise): one row per pair, one column
/// per truth scale, cells `coverage/half-width/nonexistence`.
pub fn reports_to_table(reports: &[CoverageReport]) -> String {
    let mut blocks: Vec<(String, Vec<&CoverageReport>)> = Vec::new();
    for r in reports {
        let s = &r.scenario;
        let key = format!("link={} n={} noise={}", s.link, s.n, s.noise_label());
        match blocks.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => blocks.push((key, vec![r])),
        }
    }
    let mut out = String::new();
    for (key, cols) in blocks {
        let _ = writeln!(out, "{key}");
        let header: Vec<String> = cols.iter().map(|r| format!("L={:.3}", r.scenario.truth_scale)).collect();
        let _ = writeln!(out, "{:<12} {}", "pair", header.iter().map(|h| format!("{h:>20}")).collect::<String>());
        for (p, pr) in cols[0].pairs.iter().enumerate() {
            let label = format!("({},{})", pr.pair.0, pr.pair.1);
            let cells: String = cols
                .iter()
                .map(|r| {
                    let q = &r.pairs[p];
                    let cell = match (q.coverage_pct, q.mean_half_width) {
                        (Some(c), Some(h)) => format!("{c:.2}/{h:.2}/{:.2}", r.nonexistence_pct),
                        _ => format!("NA/NA/{:.2}", r.nonexistence_pct),
                    };
                    format!("{cell:>20}")
                })
                .collect();
            let _ = writeln!(out, "{label:<12} {cells}");
        }
        out.push('\n');
    }
    out
}

/// Scenario file: shared settings plus explicit cells and/or a grid.
///
/// ```toml
/// seed = 7
/// replicates = 1000
///
/// [grid]
/// links = ["log", "logit"]
/// n = [100, 200]
/// noise = ["herm2:case=3"]
/// # L omitted: the three standard scales per link
///
/// [[scenario]]
/// n = 50
/// link = "logit"
/// L = 0.0
/// noise = "none"
/// ```
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub pairs: Option<Vec<(usize, usize)>>,
    #[serde(default)]
    pub expected_degrees: bool,
    #[serde(default)]
    pub approx_jacobian: bool,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub scenario: Vec<CellSpec>,
}

fn default_replicates() -> usize {
    1000
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub links: Vec<LinkKind>,
    pub n: Vec<usize>,
    #[serde(rename = "L", default)]
    pub truth_scales: Option<Vec<f64>>,
    #[serde(default = "default_noise_list")]
    pub noise: Vec<String>,
}

fn default_noise_list() -> Vec<String> {
    vec!["none".into()]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub n: usize,
    pub link: LinkKind,
    #[serde(rename = "L")]
    pub truth_scale: f64,
    #[serde(default = "default_noise_str")]
    pub noise: String,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub pairs: Option<Vec<(usize, usize)>>,
}

fn default_noise_str() -> String {
    "none".into()
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|sp| text[..sp.start].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::parse(line, e.message().to_string())
        })
    }

    /// Expands the grid (links × n × noise × L, in that nesting order)
    /// followed by explicit cells. Cell `k` without its own seed uses
    /// `child_seed(seed, k)`.
    pub fn scenarios(&self) -> Result<Vec<Scenario>> {
        let mut out = Vec::new();
        let mut push = |n: usize, link, l, noise: &str, reps: Option<usize>, seed: Option<u64>, pairs: Option<&Vec<(usize, usize)>>| -> Result<()> {
            let k = out.len() as u64;
            let mut s = Scenario::new(n, link, l, parse_noise(noise)?, reps.unwrap_or(self.replicates), seed.unwrap_or_else(|| rng::child_seed(self.seed, k)));
            s.level = self.level;
            s.expected_degrees = self.expected_degrees;
            s.approx_jacobian = self.approx_jacobian;
            if let Some(p) = pairs.or(self.pairs.as_ref()) {
                s.pairs = p.clone();
            }
            s.validate()?;
            out.push(s);
            Ok(())
        };
        if let Some(g) = &self.grid {
            for &link in &g.links {
                for &n in &g.n {
                    for noise in &g.noise {
                        let scales = g.truth_scales.clone().unwrap_or_else(|| standard_scales(link, n).to_vec());
                        for l in scales {
                            push(n, link, l, noise, None, None, None)?;
                        }
                    }
                }
            }
        }
        for c in &self.scenario {
            push(c.n, c.link, c.truth_scale, &c.noise, c.replicates, c.seed, c.pairs.as_ref())?;
        }
        if out.is_empty() {
            return Err(Error::invalid("scenario file defines no cells"));
        }
        Ok(out)
    }
}
