//! Command-line front end.
//!
//! Every solver reads one JSON document and writes JSON (default) or CSV.
//! Strategy-valued outputs use the CSV columns `t,weight,cdf`; scalar
//! outputs use `key,value`. Exit codes: 0 success, 1 solver or resource
//! failure, 2 malformed input.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::duel::{duel_payoff, simulate_duel, solve_duel, DuelSpec, TimeVector};
use crate::error::{Error, Result};
use crate::game_tree::{epsilon_strategy, evaluate_tree, solve_evasion_game, EpsilonStrategy, EvasionSolution, GameTree};
use crate::matrix_game::{self, MixedStrategy, PayoffMatrix};
use crate::protocol_pipeline::{run_protocol, ProtocolConfig};
use crate::risk::{risk_economic, risk_mitigating, EconomicRiskParams, MitigatingRiskParams};
use crate::timing_game::{
    basic_interval_start, classify_boundary, solve_timing, spectrum, validate_kernel, BoundaryClass, KernelSpec,
    Spectrum, TimingSolution, ValidationReport, SUPPORT_TOL,
};
use crate::tosg_decision::{solve_tosg_from, TosgProblemSpec, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Version of the JSON input and output formats.
pub const FORMAT_SCHEMA_VERSION: u32 = 1;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (format schema 1)");

#[derive(Parser, Debug)]
#[command(name = "tosg", version = VERSION, about = "Tactical game solvers and the decision pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a zero-sum matrix game.
    SolveMatrix {
        #[command(flatten)]
        io: InputOutput,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        /// Fictitious-play iteration budget.
        #[arg(long, default_value_t = 100_000)]
        iterations: usize,
        /// Saddle-gap tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Strategy written in CSV mode.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        player: u8,
    },
    /// Solve a discretized silent duel.
    SolveDuel {
        #[command(flatten)]
        io: InputOutput,
        #[arg(long, default_value_t = 201)]
        grid: usize,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        player: u8,
    },
    /// Monte Carlo estimate of a duel payoff for fixed firing times.
    SimulateDuel {
        #[command(flatten)]
        io: InputOutput,
        #[arg(long)]
        seed: u64,
        /// Number of simulated duels.
        #[arg(long, default_value_t = 100_000)]
        iterations: usize,
    },
    /// Backward induction on a game tree.
    EvalTree {
        #[command(flatten)]
        io: InputOutput,
    },
    /// Solve the aiming-and-evasion game.
    SolveEvasion {
        #[command(flatten)]
        out: OutputArgs,
        /// Bisection tolerance.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Also compute a marksman strategy within this distance of the value.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Initial evader grid for --epsilon.
        #[arg(long, default_value_t = 11)]
        grid: usize,
    },
    /// Solve a symmetric game of timing.
    SolveTiming {
        #[command(flatten)]
        io: InputOutput,
        /// Overrides the kernel's grid_n.
        #[arg(long)]
        grid: Option<usize>,
        /// Mass below this is left out of the spectrum.
        #[arg(long, default_value_t = SUPPORT_TOL)]
        tol: f64,
    },
    /// Economic or mitigating risk score.
    Risk {
        #[command(flatten)]
        io: InputOutput,
    },
    /// Solve the Lagrangian decision equation.
    SolveTosg {
        #[command(flatten)]
        io: InputOutput,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Newton iteration budget.
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        iterations: usize,
    },
    /// Run the full decision pipeline.
    RunProtocol {
        #[command(flatten)]
        io: InputOutput,
        /// Overrides the kernel's grid_n.
        #[arg(long)]
        grid: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct InputOutput {
    /// Input JSON document.
    input: PathBuf,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Write here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Exact,
    FictitiousPlay,
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match catch_unwind(AssertUnwindSafe(|| dispatch(cli.command, stdout, stderr))) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_input_error() {
                2
            } else {
                1
            }
        }
        Err(_) => {
            let _ = writeln!(stderr, "error: internal failure");
            1
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

enum Csv {
    Strategy(MixedStrategy),
    Scalars(Vec<(String, f64)>),
}

fn strategy_csv(s: &MixedStrategy) -> String {
    let mut out = String::from("t,weight,cdf\n");
    for (k, (w, c)) in s.weights().iter().zip(s.cdf()).enumerate() {
        let t = s.grid().map_or(k as f64, |g| g[k]);
        let _ = writeln!(out, "{t},{w},{c}");
    }
    out
}

fn scalars_csv(rows: &[(String, f64)]) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

fn emit(out: &OutputArgs, json: &impl Serialize, csv: impl FnOnce() -> Csv, stdout: &mut dyn Write) -> Result<()> {
    let text = match out.format {
        Format::Json => serde_json::to_string_pretty(json)? + "\n",
        Format::Csv => match csv() {
            Csv::Strategy(s) => strategy_csv(&s),
            Csv::Scalars(rows) => scalars_csv(&rows),
        },
    };
    match &out.output {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        }),
        None => stdout.write_all(text.as_bytes()).map_err(|source| Error::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn labelled(s: &MixedStrategy, labels: Option<&[f64]>) -> MixedStrategy {
    match labels {
        Some(l) if s.grid().is_none() => s.clone().with_grid(l.to_vec()).unwrap_or_else(|_| s.clone()),
        _ => s.clone(),
    }
}

#[derive(Deserialize)]
struct SimulateInput {
    #[serde(flatten)]
    spec: DuelSpec,
    x: TimeVector,
    y: TimeVector,
}

#[derive(Serialize)]
struct SimulateOutput {
    estimate: f64,
    stderr: f64,
    trials: usize,
    seed: u64,
    exact: f64,
}

#[derive(Serialize)]
struct TreeOutput {
    value: f64,
    leaves: usize,
}

#[derive(Serialize)]
struct EvasionOutput {
    #[serde(flatten)]
    solution: EvasionSolution,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon_strategy: Option<EpsilonStrategy>,
}

#[derive(Serialize)]
struct TimingOutput {
    grid_n: usize,
    boundary: BoundaryClass,
    basic_interval_lo: Option<f64>,
    validation: ValidationReport,
    solution: TimingSolution,
    spectrum: Spectrum,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RiskInput {
    Economic(EconomicRiskParams),
    Mitigating(MitigatingRiskParams),
}

#[derive(Serialize)]
struct RiskOutput {
    kind: &'static str,
    risk: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    normalized: Option<f64>,
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match command {
        Command::SolveMatrix { io, method, iterations, tol, player } => {
            let game: PayoffMatrix = read_json(&io.input)?;
            let sol = match method {
                Method::Exact => matrix_game::solve_exact(&game, tol.unwrap_or(matrix_game::EXACT_TOL))?,
                Method::FictitiousPlay => matrix_game::solve_fictitious_play(&game, iterations, tol.unwrap_or(1e-3))?,
            };
            emit(&io.out, &sol, || {
                Csv::Strategy(if player == 1 {
                    labelled(&sol.row_strategy, game.row_labels())
                } else {
                    labelled(&sol.col_strategy, game.col_labels())
                })
            }, stdout)
        }
        Command::SolveDuel { io, grid, player } => {
            let spec: DuelSpec = read_json(&io.input)?;
            let sol = solve_duel(&spec, grid)?;
            emit(&io.out, &sol, || {
                Csv::Strategy(if player == 1 { sol.p1_density.clone() } else { sol.p2_density.clone() })
            }, stdout)
        }
        Command::SimulateDuel { io, seed, iterations } => {
            let input: SimulateInput = read_json(&io.input)?;
            let mc = simulate_duel(&input.spec, &input.x, &input.y, iterations, seed)?;
            let result = SimulateOutput {
                estimate: mc.estimate,
                stderr: mc.stderr,
                trials: mc.trials,
                seed,
                exact: duel_payoff(&input.spec, &input.x, &input.y)?,
            };
            emit(&io.out, &result, || {
                Csv::Scalars(vec![
                    ("estimate".into(), result.estimate),
                    ("stderr".into(), result.stderr),
                    ("trials".into(), result.trials as f64),
                    ("seed".into(), result.seed as f64),
                    ("exact".into(), result.exact),
                ])
            }, stdout)
        }
        Command::EvalTree { io } => {
            let tree: GameTree = read_json(&io.input)?;
            let result = TreeOutput {
                value: evaluate_tree(&tree)?,
                leaves: tree.leaf_count(),
            };
            emit(&io.out, &result, || {
                Csv::Scalars(vec![("value".into(), result.value), ("leaves".into(), result.leaves as f64)])
            }, stdout)
        }
        Command::SolveEvasion { out, tol, epsilon, grid } => {
            let solution = solve_evasion_game(tol)?;
            let epsilon_strategy = epsilon.map(|e| epsilon_strategy(e, grid)).transpose()?;
            let result = EvasionOutput { solution, epsilon_strategy };
            emit(&out, &result, || {
                let s = &result.solution;
                let mut rows = vec![
                    ("x_star".into(), s.x_star),
                    ("value".into(), s.value),
                    ("marksman_position".into(), s.marksman_position as f64),
                ];
                if let Some(e) = &result.epsilon_strategy {
                    rows.extend(e.marksman_mix.weights().iter().enumerate().map(|(k, w)| (format!("mix_{}", k + 1), *w)));
                    rows.push(("guaranteed".into(), e.guaranteed));
                }
                Csv::Scalars(rows)
            }, stdout)
        }
        Command::SolveTiming { io, grid, tol } => {
            let mut spec: KernelSpec = read_json(&io.input)?;
            if let Some(n) = grid {
                spec.grid_n = n;
            }
            let kernel = spec.build()?;
            let solution = solve_timing(&kernel)?;
            let result = TimingOutput {
                grid_n: kernel.grid_n(),
                boundary: classify_boundary(&kernel),
                basic_interval_lo: basic_interval_start(&kernel),
                validation: validate_kernel(&kernel),
                spectrum: spectrum(&solution.strategy, &kernel, tol)?,
                solution,
            };
            emit(&io.out, &result, || Csv::Strategy(result.solution.strategy.clone()), stdout)
        }
        Command::Risk { io } => {
            let input: RiskInput = read_json(&io.input)?;
            let result = match input {
                RiskInput::Economic(p) => RiskOutput { kind: "economic", risk: risk_economic(&p)?, normalized: None },
                RiskInput::Mitigating(p) => RiskOutput {
                    kind: "mitigating",
                    risk: risk_mitigating(&p)?,
                    normalized: Some(p.normalized()?),
                },
            };
            emit(&io.out, &result, || {
                let mut rows = vec![("risk".into(), result.risk)];
                rows.extend(result.normalized.map(|n| ("normalized".into(), n)));
                Csv::Scalars(rows)
            }, stdout)
        }
        Command::SolveTosg { io, tol, iterations } => {
            let spec: TosgProblemSpec = read_json(&io.input)?;
            let problem = spec.build()?;
            let start = spec.start.clone().unwrap_or_else(|| vec![0.0; problem.dim()]);
            let sol = solve_tosg_from(&problem, &start, tol, iterations)?;
            emit(&io.out, &sol, || {
                let mut rows: Vec<(String, f64)> =
                    sol.d_star.iter().enumerate().map(|(k, v)| (format!("d_star_{k}"), *v)).collect();
                for (name, m) in ["alpha", "beta", "gamma"].iter().zip(sol.multipliers) {
                    rows.push((name.to_string(), m));
                }
                rows.push(("tosg_value".into(), sol.tosg_value));
                rows.push(("stationarity_residual".into(), sol.stationarity_residual));
                rows.push(("feasibility_residual".into(), sol.feasibility_residual));
                Csv::Scalars(rows)
            }, stdout)
        }
        Command::RunProtocol { io, grid } => {
            let mut config: ProtocolConfig = read_json(&io.input)?;
            if let Some(n) = grid {
                config.kernel.grid_n = n;
            }
            match run_protocol(&config) {
                Ok(report) => emit(&io.out, &report, || {
                    Csv::Strategy(report.timing.as_ref().map(|t| t.strategy.clone()).expect("completed run"))
                }, stdout),
                Err(e) => {
                    if let Ok(partial) = serde_json::to_string_pretty(&e.partial) {
                        let _ = writeln!(stderr, "partial report:\n{partial}");
                    }
                    let _ = writeln!(stderr, "stage: {}", e.stage);
                    Err(e.source)
                }
            }
        }
    }
}
