//! `privdeg` command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 malformed input or arguments,
//! 3 the estimate does not exist.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use privdeg::bounds::{default_grid, matched_bound, simulate_statistic, verify_domination, BOUND_KINDS};
use privdeg::estimator::{privatize, NoisyDegreeSeq, SolverOptions};
use privdeg::io::{analyze_degrees, format_degrees, parse_degrees, parse_edges, prune_zero_degree, serialize_edges, EdgeFormat, EdgeList};
use privdeg::linkmodels::{sample_graph, DegreeSeq, LinkKind, ParamVector};
use privdeg::noise::NoiseMechanism;
use privdeg::simharness::{qq_export, reports_to_csv, reports_to_table, run_scenario_with_workers, truth_vector, ScenarioFile};
use privdeg::{rng, Error};

const DEFAULT_NOISE: &str = "herm2:case=3";

#[derive(Parser)]
#[command(name = "privdeg", version, about = "Degree-sequence release with sub-Gamma noise and moment estimation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master random seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Link function: log, logit or cloglog.
    #[arg(long, global = true, default_value = "logit")]
    link: LinkKind,
    /// Noise mechanism, e.g. `dlap:p=0.5`, `herm2:a1=1,a2=0.5`, `herm2:case=3`,
    /// `tsp:lambda=1,mu=1`, `lap:b=1`, `geo:q=0.4` [default: herm2:case=3].
    #[arg(long, global = true)]
    noise: Option<String>,
    /// Release exact degrees (overrides --noise).
    #[arg(long, global = true)]
    no_noise: bool,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Relative residual tolerance of the solver.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Newton iteration limit.
    #[arg(long, global = true, default_value_t = 200)]
    max_iter: usize,
    /// Use the diagonal approximation of the inverse Jacobian.
    #[arg(long, global = true)]
    approx_jacobian: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a graph from the model and write it as an edge list.
    Sample {
        /// Number of vertices for the `alpha_i = i L / n` truth.
        #[arg(long)]
        n: Option<usize>,
        /// Truth scale `L`.
        #[arg(long = "scale", default_value_t = 0.0)]
        scale: f64,
        /// File of vertex parameters (`value` or `label value` per line);
        /// replaces --n/--scale.
        #[arg(long)]
        alpha: Option<PathBuf>,
        #[arg(long, default_value = "edgelist")]
        format: EdgeFormat,
    },
    /// Compute degrees of a network and add noise.
    Privatize {
        /// Network file.
        input: PathBuf,
        #[arg(long, default_value = "edgelist")]
        format: EdgeFormat,
    },
    /// Fit the model to a file of (noisy) degrees.
    Estimate {
        /// Degree file: `value` or `label value` per line.
        degrees: PathBuf,
        /// Full-precision CSV instead of the two-decimal table.
        #[arg(long)]
        csv: bool,
    },
    /// Degrees, noise and fit for a network in one step.
    Analyze {
        /// Network file; use --degrees to start from released degrees.
        #[arg(required_unless_present = "degrees")]
        input: Option<PathBuf>,
        #[arg(long, default_value = "edgelist")]
        format: EdgeFormat,
        /// Remove zero-degree vertices first (labels stay original).
        #[arg(long)]
        prune: bool,
        /// Start from a degree file instead of a network.
        #[arg(long, conflicts_with = "input")]
        degrees: Option<PathBuf>,
        /// Also write `(noisy degree, estimate)` points here.
        #[arg(long)]
        scatter: Option<PathBuf>,
        #[arg(long)]
        csv: bool,
    },
    /// Run a scenario file and write one CSV row per reported pair.
    Simulate {
        scenario: PathBuf,
        /// Worker threads; results do not depend on it.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Print the coverage/half-width/nonexistence table instead of CSV.
        #[arg(long)]
        table: bool,
        /// Directory for per-pair QQ CSV files.
        #[arg(long)]
        qq_dir: Option<PathBuf>,
    },
    /// Tabulate a tail bound against Monte Carlo tails of matching noise.
    Bounds {
        /// One of subexp_norm, subexp_sum, bernstein, subgamma_sum,
        /// subgamma_max, hermite_sum.
        #[arg(long)]
        kind: String,
        /// Number of summed (or maximized) draws.
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        reps: usize,
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
    /// QQ data of the standardized statistic for one pair of one scenario cell.
    Qq {
        scenario: PathBuf,
        /// 1-indexed pair `i,j`.
        #[arg(long, default_value = "1,2")]
        pair: String,
        /// 0-based cell index within the scenario file.
        #[arg(long, default_value_t = 0)]
        cell: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

enum Failure {
    Lib(Error),
    Absent(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

type CmdResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Lib(Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))))
}

fn emit(out: &Option<PathBuf>, text: &str) -> CmdResult {
    match out {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

impl Global {
    fn noise(&self) -> Result<Option<NoiseMechanism>, Error> {
        if self.no_noise {
            return Ok(None);
        }
        self.noise.as_deref().unwrap_or(DEFAULT_NOISE).parse().map(Some)
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            approx_jacobian: self.approx_jacobian,
            ..Default::default()
        }
    }
}

fn load_network(path: &Path, format: EdgeFormat) -> Result<EdgeList, Failure> {
    Ok(parse_edges(&read(path)?, format)?)
}

fn run(cli: Cli) -> CmdResult {
    let g = &cli.global;
    // Reject a malformed mechanism even for commands that ignore it.
    g.noise()?;
    match cli.command {
        Command::Sample { n, scale, alpha, format } => {
            let alpha = match (alpha, n) {
                (Some(path), _) => ParamVector::new(parse_degrees(&read(&path)?)?.1)?,
                (None, Some(n)) => truth_vector(n, scale)?,
                (None, None) => return Err(Error::invalid("give --n or --alpha").into()),
            };
            let graph = sample_graph(g.link, &alpha, &mut rng::stream(g.seed))?;
            emit(&g.out, &serialize_edges(&EdgeList::from_graph(&graph), format))
        }
        Command::Privatize { input, format } => {
            let e = load_network(&input, format)?;
            let d = DegreeSeq::new(e.degrees())?;
            let dt = match g.noise()? {
                Some(m) => privatize(&d, &m, &mut rng::stream(g.seed)),
                None => NoisyDegreeSeq::exact(&d),
            };
            let labels: Vec<usize> = (1..=e.n).collect();
            emit(&g.out, &format_degrees(&labels, dt.as_slice()))
        }
        Command::Estimate { degrees, csv } => {
            let (labels, values) = parse_degrees(&read(&degrees)?)?;
            let table = analyze_degrees(&labels, &NoisyDegreeSeq::new(values)?, g.link, &g.solver())?;
            emit(&g.out, &if csv { table.to_csv() } else { table.to_text() })?;
            match table.absent_reason {
                Some(r) => Err(Failure::Absent(r)),
                None => Ok(()),
            }
        }
        Command::Analyze { input, format, prune, degrees, scatter, csv } => {
            let (labels, dt) = match (input, degrees) {
                (_, Some(path)) => {
                    let (labels, values) = parse_degrees(&read(&path)?)?;
                    let dt = match g.noise()? {
                        Some(m) => {
                            let mut r = rng::stream(g.seed);
                            values.iter().map(|v| v + m.sample(&mut r)).collect()
                        }
                        None => values,
                    };
                    (labels, NoisyDegreeSeq::new(dt)?)
                }
                (Some(path), None) => {
                    let e = load_network(&path, format)?;
                    let (e, labels) = if prune {
                        let p = prune_zero_degree(&e);
                        if !p.removed.is_empty() {
                            eprintln!("removed zero-degree vertices: {:?}", p.removed);
                        }
                        (p.edges, p.kept)
                    } else {
                        let labels = (1..=e.n).collect();
                        (e, labels)
                    };
                    let d = e.to_graph()?.degrees();
                    let dt = match g.noise()? {
                        Some(m) => privatize(&d, &m, &mut rng::stream(g.seed)),
                        None => NoisyDegreeSeq::exact(&d),
                    };
                    (labels, dt)
                }
                (None, None) => unreachable!("clap requires one input"),
            };
            let table = analyze_degrees(&labels, &dt, g.link, &g.solver())?;
            if let Some(p) = scatter {
                fs::write(p, table.scatter_csv())?;
            }
            emit(&g.out, &if csv { table.to_csv() } else { table.to_text() })?;
            match table.absent_reason {
                Some(r) => Err(Failure::Absent(r)),
                None => Ok(()),
            }
        }
        Command::Simulate { scenario, workers, table, qq_dir } => {
            let cells = ScenarioFile::parse(&read(&scenario)?)?.scenarios()?;
            let mut reports = Vec::with_capacity(cells.len());
            for s in &cells {
                reports.push(run_scenario_with_workers(s, workers)?);
            }
            if let Some(dir) = qq_dir {
                fs::create_dir_all(&dir)?;
                for (k, r) in reports.iter().enumerate() {
                    for p in &r.pairs {
                        let qq = qq_export(r, p.pair)?;
                        fs::write(dir.join(format!("cell{k}_pair{}_{}.csv", p.pair.0, p.pair.1)), qq.to_csv())?;
                    }
                }
            }
            let text = if table { reports_to_table(&reports) } else { reports_to_csv(&reports) };
            emit(&g.out, &text)
        }
        Command::Bounds { kind, n, reps, points } => {
            if !BOUND_KINDS.contains(&kind.as_str()) {
                return Err(Error::invalid(format!("unknown bound kind `{kind}`; expected one of {BOUND_KINDS:?}")).into());
            }
            let mech = g
                .noise()?
                .ok_or_else(|| Error::invalid("bounds need a noise mechanism"))?;
            let (spec, stat) = matched_bound(&kind, &mech, n)?;
            let samples = simulate_statistic(&mech, n, stat, reps, g.seed);
            let grid = default_grid(&spec, points.max(2), 1e-3)?;
            let mut out = String::from("t,bound,empirical,mc_stderr\n");
            for row in verify_domination(&spec, &samples, &grid)? {
                out.push_str(&format!("{},{},{},{}\n", row.t, row.bound, row.empirical, row.mc_stderr));
            }
            emit(&g.out, &out)
        }
        Command::Qq { scenario, pair, cell, workers } => {
            let cells = ScenarioFile::parse(&read(&scenario)?)?.scenarios()?;
            let s = cells
                .get(cell)
                .ok_or_else(|| Error::invalid(format!("cell {cell} not in scenario file ({} cells)", cells.len())))?;
            let (i, j) = pair
                .split_once(',')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                .ok_or_else(|| Error::invalid(format!("pair `{pair}` is not `i,j`")))?;
            let report = run_scenario_with_workers(s, workers)?;
            emit(&g.out, &qq_export(&report, (i, j))?.to_csv())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Absent(reason)) => {
            eprintln!("privdeg: estimate does not exist: {reason}");
            ExitCode::from(3)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("privdeg: {e}");
            match e {
                Error::Io(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
