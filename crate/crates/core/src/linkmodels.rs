//! The model class: edge probabilities driven by the sum of two vertex
//! parameters, and sampling of graphs and degree sequences from it.
//!
//! An undirected graph on `n` vertices has independent edges with
//! `P(a_ij = 1) = p(alpha_i + alpha_j)`, where `p` is one of three links:
//!
//! | link      | `p(x)`              | valid `x` |
//! |-----------|---------------------|-----------|
//! | `Log`     | `e^x`               | `x < 0`   |
//! | `Logit`   | `e^x / (1 + e^x)`   | all       |
//! | `Cloglog` | `1 - exp(-e^x)`     | all       |

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Link between the pair sum `alpha_i + alpha_j` and the edge probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Log,
    Logit,
    Cloglog,
}

impl LinkKind {
    pub const ALL: [LinkKind; 3] = [LinkKind::Log, LinkKind::Logit, LinkKind::Cloglog];

    pub fn name(self) -> &'static str {
        match self {
            LinkKind::Log => "log",
            LinkKind::Logit => "logit",
            LinkKind::Cloglog => "cloglog",
        }
    }

    fn check_domain(self, x: f64) -> Result<()> {
        let ok = x.is_finite() && (self != LinkKind::Log || x < 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Domain { link: self, x })
        }
    }

    /// Edge probability `p(x)`.
    pub fn edge_prob(self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.mean(x))
    }

    /// First (`order = 1`) or second (`order = 2`) derivative of `p` at `x`.
    pub fn edge_prob_deriv(self, x: f64, order: u8) -> Result<f64> {
        self.check_domain(x)?;
        match order {
            1 => Ok(self.mean_deriv(x)),
            2 => Ok(self.mean_deriv2(x)),
            _ => Err(Error::invalid(format!("derivative order {order} not in {{1, 2}}"))),
        }
    }

    /// `p(x)` without the probability-domain check. For the log link this is
    /// `e^x` on the whole real line, which is what the moment equations use.
    pub fn mean(self, x: f64) -> f64 {
        match self {
            LinkKind::Log => x.exp(),
            LinkKind::Logit => logistic(x),
            LinkKind::Cloglog => -(-x.exp()).exp_m1(),
        }
    }

    /// `dp/dx` without the domain check.
    pub fn mean_deriv(self, x: f64) -> f64 {
        match self {
            LinkKind::Log => x.exp(),
            LinkKind::Logit => {
                let p = logistic(x);
                p * logistic(-x)
            }
            LinkKind::Cloglog => (x - x.exp()).exp(),
        }
    }

    /// `d^2p/dx^2` without the domain check.
    pub fn mean_deriv2(self, x: f64) -> f64 {
        match self {
            LinkKind::Log => x.exp(),
            LinkKind::Logit => {
                let p = logistic(x);
                let q = logistic(-x);
                p * q * (q - p)
            }
            LinkKind::Cloglog => (x - x.exp()).exp() * (1.0 - x.exp()),
        }
    }

    /// The link function `g = p^{-1}` applied to a probability.
    pub fn link(self, p: f64) -> f64 {
        match self {
            LinkKind::Log => p.ln(),
            LinkKind::Logit => (p / (1.0 - p)).ln(),
            LinkKind::Cloglog => (-(-p).ln_1p()).ln(),
        }
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "log" => Ok(LinkKind::Log),
            "logit" => Ok(LinkKind::Logit),
            "cloglog" => Ok(LinkKind::Cloglog),
            other => Err(Error::invalid(format!("unknown link `{other}`"))),
        }
    }
}

/// Vertex parameters `alpha`, one per vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 vertices, got {}",
                alpha.len()
            )));
        }
        if let Some(i) = alpha.iter().position(|a| !a.is_finite()) {
            return Err(Error::invalid(format!("alpha[{i}] is not finite")));
        }
        Ok(ParamVector(alpha))
    }

    /// Constant vector.
    pub fn splat(n: usize, value: f64) -> Result<Self> {
        ParamVector::new(vec![value; n])
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

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Largest pair sum `alpha_i + alpha_j` over `i != j`.
    pub fn max_pair_sum(&self) -> f64 {
        let (mut a, mut b) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &x in &self.0 {
            if x > a {
                b = a;
                a = x;
            } else if x > b {
                b = x;
            }
        }
        a + b
    }

    /// Largest `|alpha_i + alpha_j|` over `i != j`; the `Q_n` diagnostic.
    pub fn max_abs_pair_sum(&self) -> f64 {
        let neg: Vec<f64> = self.0.iter().map(|x| -x).collect();
        let min_sum = -ParamVector(neg).max_pair_sum();
        self.max_pair_sum().abs().max(min_sum.abs())
    }

    /// Checks that every pair sum is a valid argument of `link`.
    pub fn check_domain(&self, link: LinkKind) -> Result<()> {
        link.check_domain(self.max_pair_sum())
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Simple undirected graph stored as a bit-packed upper triangle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    bits: Vec<u64>,
}

impl Graph {
    pub fn empty(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("need at least 2 vertices, got {n}")));
        }
        let words = (n * (n - 1) / 2).div_ceil(64);
        Ok(Graph {
            n,
            bits: vec![0; words],
        })
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Graph::empty(n)?;
        for i in 0..n {
            for j in i + 1..n {
                g.set_edge(i, j, true);
            }
        }
        Ok(g)
    }

    /// Builds a graph from 0-indexed edges. Self-loops and out-of-range
    /// indices are rejected; duplicates are merged.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n)?;
        for &(i, j) in edges {
            if i == j {
                return Err(Error::invalid(format!("self-loop at vertex {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::invalid(format!("edge ({i}, {j}) out of range for n={n}")));
            }
            g.set_edge(i, j, true);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        // row-major offset of (i, j) in the strict upper triangle
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let s = self.slot(i, j);
        self.bits[s / 64] >> (s % 64) & 1 == 1
    }

    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        assert!(i != j, "self-loops are not allowed");
        let s = self.slot(i, j);
        if present {
            self.bits[s / 64] |= 1 << (s % 64);
        } else {
            self.bits[s / 64] &= !(1 << (s % 64));
        }
    }

    /// Edges `(i, j)` with `i < j`, 0-indexed, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n)
            .flat_map(move |i| (i + 1..self.n).map(move |j| (i, j)))
            .filter(move |&(i, j)| self.has_edge(i, j))
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn degrees(&self) -> DegreeSeq {
        degrees(self)
    }
}

/// Observed degree sequence of a graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeSeq(Vec<u32>);

impl DegreeSeq {
    /// Validates `0 <= d_i <= n - 1` and an even total.
    pub fn new(d: Vec<u32>) -> Result<Self> {
        let n = d.len();
        if n < 2 {
            return Err(Error::invalid("degree sequence needs at least 2 vertices"));
        }
        if let Some(i) = d.iter().position(|&x| x as usize > n - 1) {
            return Err(Error::invalid(format!("degree {} at vertex {i} exceeds n-1", d[i])));
        }
        if d.iter().map(|&x| x as u64).sum::<u64>() % 2 != 0 {
            return Err(Error::invalid("degree sum is odd"));
        }
        Ok(DegreeSeq(d))
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&x| x as f64).collect()
    }
}

/// Row sums of the adjacency matrix.
pub fn degrees(g: &Graph) -> DegreeSeq {
    let mut d = vec![0u32; g.n];
    for (i, j) in g.edges() {
        d[i] += 1;
        d[j] += 1;
    }
    DegreeSeq(d)
}

/// `E d_i = sum_{j != i} p(alpha_i + alpha_j)`; errors if some pair sum is
/// outside the link's probability domain.
pub fn expected_degrees(link: LinkKind, alpha: &ParamVector) -> Result<Vec<f64>> {
    alpha.check_domain(link)?;
    Ok(mean_degrees(link, alpha.as_slice()))
}

/// Same sum as [`expected_degrees`] but evaluates the mean function on any
/// finite input.
pub(crate) fn mean_degrees(link: LinkKind, alpha: &[f64]) -> Vec<f64> {
    let n = alpha.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            let p = link.mean(alpha[i] + alpha[j]);
            out[i] += p;
            out[j] += p;
        }
    }
    out
}

/// Draws each upper-triangle edge independently with probability
/// `p(alpha_i + alpha_j)`.
pub fn sample_graph<R: Rng + ?Sized>(
    link: LinkKind,
    alpha: &ParamVector,
    rng: &mut R,
) -> Result<Graph> {
    alpha.check_domain(link)?;
    let n = alpha.len();
    let mut g = Graph::empty(n)?;
    for i in 0..n {
        for j in i + 1..n {
            let p = link.mean(alpha[i] + alpha[j]);
            if rng.random::<f64>() < p {
                g.set_edge(i, j, true);
            }
        }
    }
    Ok(g)
}
