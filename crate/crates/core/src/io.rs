//! Network input (edge lists, UCINET DL full matrices), degree files, and
//! result tables.
//!
//! Vertices are 1-indexed in every text format and 0-indexed inside the
//! library.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{confidence_interval, privatize, solve, CiTarget, EstimateResult, NoisyDegreeSeq, SolverOptions};
use crate::linkmodels::{Graph, LinkKind};
use crate::noise::NoiseMechanism;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeFormat {
    /// Whitespace-separated pairs, `#` comments, optional `# vertices: N`.
    EdgeList,
    /// `dl n=<n>`, `format = fullmatrix`, `data:`, then an `n x n` 0/1 matrix.
    UcinetDl,
}

impl FromStr for EdgeFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "edgelist" | "edge-list" => Ok(EdgeFormat::EdgeList),
            "ucinet-dl" | "dl" | "ucinet" => Ok(EdgeFormat::UcinetDl),
            other => Err(Error::invalid(format!("unknown edge format `{other}`"))),
        }
    }
}

/// Undirected simple graph as a sorted list of 1-indexed edges `(i, j)`,
/// `i < j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeList {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl EdgeList {
    /// Canonicalizes: orients each edge as `i < j`, sorts, merges repeats.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut out = Vec::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::invalid(format!("self-loop at vertex {i}")));
            }
            if i == 0 || j == 0 || i > n || j > n {
                return Err(Error::invalid(format!("edge ({i}, {j}) outside 1..={n}")));
            }
            out.push((i.min(j), i.max(j)));
        }
        out.sort_unstable();
        out.dedup();
        Ok(EdgeList { n, edges: out })
    }

    pub fn degrees(&self) -> Vec<u32> {
        let mut d = vec![0u32; self.n];
        for &(i, j) in &self.edges {
            d[i - 1] += 1;
            d[j - 1] += 1;
        }
        d
    }

    pub fn to_graph(&self) -> Result<Graph> {
        let edges: Vec<_> = self.edges.iter().map(|&(i, j)| (i - 1, j - 1)).collect();
        Graph::from_edges(self.n, &edges)
    }

    pub fn from_graph(g: &Graph) -> Self {
        EdgeList {
            n: g.n(),
            edges: g.edges().map(|(i, j)| (i + 1, j + 1)).collect(),
        }
    }
}

/// Parses network text.
pub fn parse_edges(text: &str, format: EdgeFormat) -> Result<EdgeList> {
    match format {
        EdgeFormat::EdgeList => parse_edgelist(text),
        EdgeFormat::UcinetDl => parse_dl(text),
    }
}

fn parse_index(tok: &str, line: usize) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::parse(line, format!("`{tok}` is not a vertex index")))
}

fn parse_edgelist(text: &str) -> Result<EdgeList> {
    let mut declared = None;
    let mut raw = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let ln = k + 1;
        let (body, comment) = match line.split_once('#') {
            Some((b, c)) => (b, Some(c)),
            None => (line, None),
        };
        if let Some(c) = comment {
            if let Some(v) = c.trim().strip_prefix("vertices:") {
                declared = Some(parse_index(v.trim(), ln)?);
            }
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            [a, b] => {
                let (i, j) = (parse_index(a, ln)?, parse_index(b, ln)?);
                if i == j {
                    return Err(Error::parse(ln, format!("self-loop at vertex {i}")));
                }
                if i == 0 || j == 0 {
                    return Err(Error::parse(ln, "vertex indices start at 1"));
                }
                raw.push((ln, i, j));
            }
            _ => return Err(Error::parse(ln, "expected two vertex indices")),
        }
    }
    let max = raw.iter().map(|&(_, i, j)| i.max(j)).max().unwrap_or(0);
    let n = declared.unwrap_or(max);
    if let Some(&(ln, i, j)) = raw.iter().find(|&&(_, i, j)| i.max(j) > n) {
        return Err(Error::parse(ln, format!("edge ({i}, {j}) exceeds the declared {n} vertices")));
    }
    if n < 2 {
        return Err(Error::parse(1, "a network needs at least 2 vertices"));
    }
    EdgeList::new(n, raw.into_iter().map(|(_, i, j)| (i, j)))
}

fn parse_dl(text: &str) -> Result<EdgeList> {
    let mut n = None;
    let mut format_ok = false;
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let mut saw_dl = false;
    // header up to `data:`
    loop {
        let Some((ln, line)) = lines.next() else {
            return Err(Error::parse(text.lines().count().max(1), "missing `data:` section"));
        };
        let lower = line.trim().to_ascii_lowercase();
        if lower.is_empty() {
            continue;
        }
        let (head, rest) = match lower.split_once("data:") {
            Some((h, r)) => (h.to_string(), Some(r.trim().to_string())),
            None => (lower.clone(), None),
        };
        let cleaned = head.replace(',', " ").replace(" = ", "=").replace("= ", "=").replace(" =", "=");
        for tok in cleaned.split_whitespace() {
            if tok == "dl" {
                saw_dl = true;
            } else if let Some(v) = tok.strip_prefix("n=") {
                n = Some(parse_index(v, ln)?);
            } else if let Some(v) = tok.strip_prefix("format=") {
                if v != "fullmatrix" {
                    return Err(Error::parse(ln, format!("unsupported format `{v}`")));
                }
                format_ok = true;
            } else {
                return Err(Error::parse(ln, format!("unexpected header token `{tok}`")));
            }
        }
        if !saw_dl {
            return Err(Error::parse(ln, "header must start with `dl`"));
        }
        if let Some(rest) = rest {
            if !rest.is_empty() {
                return Err(Error::parse(ln, "matrix rows must start on the line after `data:`"));
            }
            break;
        }
    }
    let n = n.ok_or_else(|| Error::parse(1, "header lacks `n=`"))?;
    if !format_ok {
        return Err(Error::parse(1, "header lacks `format = fullmatrix`"));
    }
    if n < 2 {
        return Err(Error::parse(1, "a network needs at least 2 vertices"));
    }
    let mut rows: Vec<(usize, Vec<u8>)> = Vec::with_capacity(n);
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| match t {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                _ => Err(Error::parse(ln, format!("matrix entry `{t}` is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != n {
            return Err(Error::parse(ln, format!("row has {} entries, expected {n}", row.len())));
        }
        if rows.len() == n {
            return Err(Error::parse(ln, format!("more than {n} matrix rows")));
        }
        rows.push((ln, row));
    }
    if rows.len() != n {
        return Err(Error::parse(text.lines().count(), format!("expected {n} matrix rows, found {}", rows.len())));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        let (ln, row) = &rows[i];
        if row[i] != 0 {
            return Err(Error::parse(*ln, format!("nonzero diagonal at vertex {}", i + 1)));
        }
        for j in i + 1..n {
            if row[j] != rows[j].1[i] {
                return Err(Error::parse(rows[j].0, format!("matrix is not symmetric at ({}, {})", i + 1, j + 1)));
            }
            if row[j] == 1 {
                edges.push((i + 1, j + 1));
            }
        }
    }
    EdgeList::new(n, edges)
}

/// Writes the canonical text form of `e`.
pub fn serialize_edges(e: &EdgeList, format: EdgeFormat) -> String {
    let mut out = String::new();
    match format {
        EdgeFormat::EdgeList => {
            let _ = writeln!(out, "# vertices: {}", e.n);
            for (i, j) in &e.edges {
                let _ = writeln!(out, "{i} {j}");
            }
        }
        EdgeFormat::UcinetDl => {
            let _ = writeln!(out, "dl n={}\nformat = fullmatrix\ndata:", e.n);
            let mut m = vec![vec![0u8; e.n]; e.n];
            for &(i, j) in &e.edges {
                m[i - 1][j - 1] = 1;
                m[j - 1][i - 1] = 1;
            }
            for row in m {
                let line: Vec<String> = row.iter().map(u8::to_string).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
        }
    }
    out
}

/// Result of removing isolated vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pruned {
    pub edges: EdgeList,
    /// Original labels of removed vertices.
    pub removed: Vec<usize>,
    /// `kept[k]` is the original label of new vertex `k + 1`.
    pub kept: Vec<usize>,
}

/// Drops zero-degree vertices and relabels the rest contiguously.
pub fn prune_zero_degree(e: &EdgeList) -> Pruned {
    let d = e.degrees();
    let kept: Vec<usize> = (1..=e.n).filter(|&v| d[v - 1] > 0).collect();
    let removed: Vec<usize> = (1..=e.n).filter(|&v| d[v - 1] == 0).collect();
    let mut new_label = vec![0usize; e.n + 1];
    for (k, &v) in kept.iter().enumerate() {
        new_label[v] = k + 1;
    }
    let edges = EdgeList {
        n: kept.len(),
        edges: e.edges.iter().map(|&(i, j)| (new_label[i], new_label[j])).collect(),
    };
    Pruned { edges, removed, kept }
}

/// Reads a degree file: one value per line, or `label value` pairs; `#`
/// starts a comment. Returns labels (1-based positions when absent) and
/// values.
pub fn parse_degrees(text: &str) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let ln = k + 1;
        let body = line.split('#').next().unwrap_or("");
        let toks: Vec<&str> = body.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
        let num = |t: &str| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(ln, format!("`{t}` is not a finite number")))
        };
        match toks.as_slice() {
            [] => {}
            [v] => {
                labels.push(values.len() + 1);
                values.push(num(v)?);
            }
            [l, v] => {
                labels.push(parse_index(l, ln)?);
                values.push(num(v)?);
            }
            _ => return Err(Error::parse(ln, "expected `value` or `label value`")),
        }
    }
    if values.len() < 2 {
        return Err(Error::parse(text.lines().count().max(1), "need at least 2 degrees"));
    }
    Ok((labels, values))
}

/// Writes `label value` lines with full precision.
pub fn format_degrees(labels: &[usize], values: &[f64]) -> String {
    let mut out = String::from("# vertex degree\n");
    for (l, v) in labels.iter().zip(values) {
        let _ = writeln!(out, "{l} {v}");
    }
    out
}

/// Per-vertex fit with a single-coordinate interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexEstimate {
    pub alpha: f64,
    pub lo: f64,
    pub hi: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    /// Original vertex label.
    pub vertex: usize,
    pub noisy_degree: f64,
    pub estimate: Option<VertexEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub link: LinkKind,
    pub level: f64,
    pub rows: Vec<ResultRow>,
    /// Why the estimate is absent, if it is.
    pub absent_reason: Option<String>,
    pub fit: EstimateResult,
}

fn fmt2(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

impl ResultTable {
    pub fn exists(&self) -> bool {
        self.absent_reason.is_none()
    }

    /// `alpha[lo,hi](se)` with two decimals.
    pub fn cell(est: &VertexEstimate) -> String {
        format!("{}[{},{}]({})", fmt2(est.alpha), fmt2(est.lo), fmt2(est.hi), fmt2(est.se))
    }

    /// Two-decimal text table.
    pub fn to_text(&self) -> String {
        let mut out = format!("# link={} level={}\n", self.link, self.level);
        if let Some(r) = &self.absent_reason {
            let _ = writeln!(out, "# estimate absent: {r}");
        }
        let _ = writeln!(out, "{:>6} {:>10}  estimate", "vertex", "degree");
        for row in &self.rows {
            let cell = row.estimate.as_ref().map_or_else(|| "absent".to_string(), Self::cell);
            let _ = writeln!(out, "{:>6} {:>10}  {}", row.vertex, fmt2(row.noisy_degree), cell);
        }
        out
    }

    /// Full-precision CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("vertex,noisy_degree,alpha_hat,ci_lo,ci_hi,se\n");
        for row in &self.rows {
            match &row.estimate {
                Some(e) => {
                    let _ = writeln!(out, "{},{},{},{},{},{}", row.vertex, row.noisy_degree, e.alpha, e.lo, e.hi, e.se);
                }
                None => {
                    let _ = writeln!(out, "{},{},,,,", row.vertex, row.noisy_degree);
                }
            }
        }
        out
    }

    /// `(noisy degree, alpha_hat)` points.
    pub fn scatter_csv(&self) -> String {
        let mut out = String::from("noisy_degree,alpha_hat\n");
        for row in &self.rows {
            if let Some(e) = &row.estimate {
                let _ = writeln!(out, "{},{}", row.noisy_degree, e.alpha);
            }
        }
        out
    }
}

/// Fits the model to already released degrees.
pub fn analyze_degrees(labels: &[usize], dtilde: &NoisyDegreeSeq, link: LinkKind, opts: &SolverOptions) -> Result<ResultTable> {
    if labels.len() != dtilde.len() {
        return Err(Error::LengthMismatch { expected: dtilde.len(), got: labels.len() });
    }
    let level = 0.95;
    let fit = solve(link, dtilde, opts)?;
    let rows = labels
        .iter()
        .zip(dtilde.as_slice())
        .enumerate()
        .map(|(i, (&vertex, &noisy_degree))| {
            let estimate = if fit.exists {
                let (lo, hi) = confidence_interval(&fit, CiTarget::Single(i), level)?;
                Some(VertexEstimate {
                    alpha: fit.alpha()?[i],
                    lo,
                    hi,
                    se: fit.std_error(i)?,
                })
            } else {
                None
            };
            Ok(ResultRow { vertex, noisy_degree, estimate })
        })
        .collect::<Result<_>>()?;
    Ok(ResultTable {
        link,
        level,
        rows,
        absent_reason: fit.reason.map(|r| r.to_string()),
        fit,
    })
}

/// End to end: degrees of `e`, plus one noise draw per vertex from the
/// stream `seed` (unless `noise` is `None`), then the fit. Rows carry the
/// labels of `e`.
pub fn analyze_dataset(e: &EdgeList, link: LinkKind, noise: Option<&NoiseMechanism>, seed: u64) -> Result<ResultTable> {
    let d = e.to_graph()?.degrees();
    let dtilde = match noise {
        Some(m) => privatize(&d, m, &mut rng::stream(seed)),
        None => NoisyDegreeSeq::exact(&d),
    };
    let labels: Vec<usize> = (1..=e.n).collect();
    analyze_degrees(&labels, &dtilde, link, &SolverOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn edgelist_example() {
        let e = parse_edges("1 2\n2 3\n", EdgeFormat::EdgeList).unwrap();
        assert_eq!(e, EdgeList { n: 3, edges: vec![(1, 2), (2, 3)] });
        let e = parse_edges("# vertices: 5\n3 1 # comment\n1 3\n", EdgeFormat::EdgeList).unwrap();
        assert_eq!(e, EdgeList { n: 5, edges: vec![(1, 3)] });
    }

    #[test]
    fn edgelist_errors_carry_lines() {
        let cases = [
            ("1 2\n2 2\n", 2),
            ("1 2\n\n1 x\n", 3),
            ("# vertices: 3\n1 4\n", 2),
            ("1 2 3\n", 1),
            ("0 1\n", 1),
        ];
        for (text, line) in cases {
            match parse_edges(text, EdgeFormat::EdgeList) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn dl_parsing_and_errors() {
        let ok = "dl n=3\nformat = fullmatrix\ndata:\n0 1 0\n1 0 1\n0 1 0\n";
        assert_eq!(parse_edges(ok, EdgeFormat::UcinetDl).unwrap().edges, vec![(1, 2), (2, 3)]);
        let oneline = "DL N=3 FORMAT=FULLMATRIX\nDATA:\n0 1 0\n1 0 1\n0 1 0\n";
        assert!(parse_edges(oneline, EdgeFormat::UcinetDl).is_ok());
        let cases = [
            ("dl n=3\nformat = fullmatrix\ndata:\n0 1 0\n0 0 1\n0 1 0\n", 5), // a_12 != a_21
            ("dl n=3\nformat = fullmatrix\ndata:\n1 1 0\n1 0 1\n0 1 0\n", 4),
            ("dl n=3\nformat = edgelist1\ndata:\n", 2),
            ("dl n=3\nformat = fullmatrix\ndata:\n0 1 0\n1 0 2\n0 1 0\n", 5),
            ("dl n=3\nformat = fullmatrix\ndata:\n0 1\n", 4),
            ("graph n=3\n", 1),
        ];
        for (text, line) in cases {
            match parse_edges(text, EdgeFormat::UcinetDl) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn pruning() {
        let e = EdgeList::new(5, [(1, 2), (2, 4)]).unwrap();
        let p = prune_zero_degree(&e);
        assert_eq!(p.removed, vec![3, 5]);
        assert_eq!(p.kept, vec![1, 2, 4]);
        assert_eq!(p.edges, EdgeList { n: 3, edges: vec![(1, 2), (2, 3)] });
        let again = prune_zero_degree(&p.edges);
        assert_eq!(again.edges, p.edges);
        assert!(again.removed.is_empty());
        let empty = prune_zero_degree(&EdgeList::new(4, []).unwrap());
        assert_eq!(empty.edges.n, 0);
        assert!(empty.edges.edges.is_empty());
    }

    #[test]
    fn degree_files() {
        let (l, v) = parse_degrees("# header\n3\n4.5\n").unwrap();
        assert_eq!((l, v), (vec![1, 2], vec![3.0, 4.5]));
        let (l, v) = parse_degrees("7 1\n9 -2\n").unwrap();
        assert_eq!((l, v), (vec![7, 9], vec![1.0, -2.0]));
        assert!(matches!(parse_degrees("1\n2 3 4\n"), Err(Error::Parse { line: 2, .. })));
        let text = format_degrees(&[1, 2], &[0.1, 2.0 / 3.0]);
        assert_eq!(parse_degrees(&text).unwrap().1, vec![0.1, 2.0 / 3.0]);
    }

    #[test]
    fn equal_degrees_get_equal_estimates() {
        let d = NoisyDegreeSeq::new(vec![3.0, 5.0, 3.0, 6.0, 4.0, 5.0, 2.0, 3.0]).unwrap();
        let t = analyze_degrees(&(1..=8).collect::<Vec<_>>(), &d, LinkKind::Logit, &SolverOptions::default()).unwrap();
        let a = |i: usize| t.rows[i].estimate.unwrap().alpha;
        assert!((a(0) - a(2)).abs() < 1e-10 && (a(1) - a(5)).abs() < 1e-10);
        let text = t.to_text();
        assert_eq!(text.lines().count(), 2 + 8);
        assert_eq!(t.scatter_csv().lines().count(), 9);
    }

    #[test]
    fn absent_rows_are_marked() {
        let d = NoisyDegreeSeq::new(vec![0.0, 1.0, 1.0]).unwrap();
        let t = analyze_degrees(&[1, 2, 3], &d, LinkKind::Log, &SolverOptions::default()).unwrap();
        assert!(!t.exists());
        assert!(t.rows.iter().all(|r| r.estimate.is_none()));
        assert!(t.to_text().contains("absent"));
    }

    #[test]
    fn cell_format() {
        let e = VertexEstimate { alpha: 0.37, lo: -0.054, hi: 0.78, se: 0.21 };
        assert_eq!(ResultTable::cell(&e), "0.37[-0.05,0.78](0.21)");
        assert_eq!(fmt2(-0.001), "0.00");
    }

    fn arb_edges() -> impl Strategy<Value = EdgeList> {
        (2usize..15).prop_flat_map(|n| {
            proptest::collection::vec((1..=n, 1..=n), 0..40).prop_map(move |raw| {
                EdgeList::new(n, raw.into_iter().filter(|(i, j)| i != j)).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn serialization_round_trips(e in arb_edges()) {
            for f in [EdgeFormat::EdgeList, EdgeFormat::UcinetDl] {
                prop_assert_eq!(&parse_edges(&serialize_edges(&e, f), f).unwrap(), &e);
            }
        }

        #[test]
        fn pruning_is_idempotent(e in arb_edges()) {
            let once = prune_zero_degree(&e);
            let twice = prune_zero_degree(&once.edges);
            prop_assert_eq!(&twice.edges, &once.edges);
            prop_assert!(once.edges.degrees().iter().all(|&d| d > 0));
        }
    }
}
