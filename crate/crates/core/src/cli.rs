//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on a domain error, 2 on a usage error. Errors
//! go to stderr as `error[<code>]: <message>` with a stable code.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::characteristic::{CharacteristicMatrix, MetricWeights};
use crate::metrics::tree_distance;
use crate::morphism::compute_morphism;
use crate::problems::{maze_to_tree, parse_maze, solve, ProblemFile, TreeProblem};
use crate::solutions::{decode_path, Solution};
use crate::transfer::ProblemLibrary;

pub const DEFAULT_LIBRARY: &str = "./arbor-lib";

#[derive(Debug, Parser)]
#[command(name = "arbor", version, about = "Encode, compare, solve and transfer tree problems")]
struct Cli {
    /// Problem library directory.
    #[arg(long = "lib", global = true, env = "ARBOR_LIB", default_value = DEFAULT_LIBRARY)]
    storage_root: PathBuf,
    /// Enforce that decision-tree sibling probabilities sum to 1.
    #[arg(long, global = true)]
    strict: bool,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
struct LambdaArg {
    /// Row weights, comma separated or repeated; defaults to uniform.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the characteristic matrix of a problem.
    Encode { problem: PathBuf },
    /// Weighted distance between two problems over the same tips.
    Dist {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        lambda: LambdaArg,
    },
    /// Least-squares morphism from one problem's matrix to another's.
    Morph { a: PathBuf, b: PathBuf },
    /// Solve a problem and print its path solution.
    Solve { problem: PathBuf },
    /// Convert a text maze into a problem file.
    #[command(name = "maze2tree")]
    MazeToTree {
        maze: PathBuf,
        /// Problem id; defaults to the file stem.
        #[arg(long)]
        id: Option<String>,
    },
    /// Work with the problem library.
    #[command(subcommand)]
    Lib(LibCommand),
}

#[derive(Debug, Subcommand)]
enum LibCommand {
    /// Store a problem, optionally with a solution.
    Add {
        problem: PathBuf,
        /// Solution JSON to store alongside.
        #[arg(long, conflicts_with = "solve")]
        solution: Option<PathBuf>,
        /// Solve the problem and store the result.
        #[arg(long)]
        solve: bool,
        #[arg(long = "tag")]
        tags: Vec<String>,
    },
    /// List stored problems.
    List,
    /// Rank stored problems by distance to a query.
    Nearest {
        #[arg(long)]
        query: PathBuf,
        #[command(flatten)]
        lambda: LambdaArg,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        limit: u64,
    },
    /// Carry the nearest solved analogue's solution over to a query.
    Transfer {
        #[arg(long)]
        query: PathBuf,
        #[command(flatten)]
        lambda: LambdaArg,
    },
}

struct CliError {
    code: &'static str,
    message: String,
    usage: bool,
}

impl CliError {
    fn domain(code: &'static str, e: impl std::fmt::Display) -> Self {
        Self { code, message: e.to_string(), usage: false }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self { code: "usage", message: message.into(), usage: true }
    }
}

type CliResult = Result<String, CliError>;

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = out.write_all(text.as_bytes());
                    if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                        2
                    } else {
                        0
                    }
                }
                _ => {
                    let _ = write!(err, "error[usage]: {text}");
                    2
                }
            };
        }
    };
    match execute(&cli, stdin) {
        Ok(text) => match out.write_all(text.as_bytes()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "error[io]: {e}");
                1
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {}", e.code, e.message);
            if e.usage {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cli: &Cli, stdin: &mut dyn Read) -> CliResult {
    let mut ctx = Context { stdin, stdin_used: false, strict: cli.strict };
    match &cli.command {
        Command::Encode { problem } => {
            let p = ctx.problem(problem)?;
            let m = p.characteristic_matrix().map_err(|e| CliError::domain("characteristic", e))?;
            Ok(render_matrix(&m, cli.format.unwrap_or(OutputFormat::Csv)))
        }
        Command::Dist { a, b, lambda } => {
            let lambda = parse_lambda(lambda)?;
            let (a, b) = (ctx.problem(a)?, ctx.problem(b)?);
            let w = weights(lambda, a.feature_arity())?;
            let d = tree_distance(a.tree(), b.tree(), &w).map_err(|e| CliError::domain("metric", e))?;
            Ok(match cli.format {
                Some(OutputFormat::Json) => format!("{}\n", serde_json::json!({ "distance": d })),
                _ => format!("{d}\n"),
            })
        }
        Command::Morph { a, b } => {
            let (a, b) = (ctx.problem(a)?, ctx.problem(b)?);
            let ma = a.characteristic_matrix().map_err(|e| CliError::domain("characteristic", e))?;
            let mb = b.characteristic_matrix().map_err(|e| CliError::domain("characteristic", e))?;
            let f = compute_morphism(&ma, &mb).map_err(|e| CliError::domain("morphism", e))?;
            Ok(match cli.format {
                Some(OutputFormat::Csv) => {
                    let mut s = String::new();
                    for i in 0..f.size() {
                        let row: Vec<String> = f.matrix.row(i).iter().map(|x| x.to_string()).collect();
                        let _ = writeln!(s, "{}", row.join(","));
                    }
                    s
                }
                _ => format!("{}\n", to_json_pretty(&f.to_export())?),
            })
        }
        Command::Solve { problem } => {
            let p = ctx.problem(problem)?;
            let s = solve(&p).map_err(|e| CliError::domain("problem", e))?;
            render_solution(&p, &s, cli.format)
        }
        Command::MazeToTree { maze, id } => {
            let text = ctx.read(maze)?;
            let grid = parse_maze(&text).map_err(|e| CliError::domain("maze", e))?;
            let id = id.clone().unwrap_or_else(|| stem(maze));
            let p = maze_to_tree::<f64>(&grid).map_err(|e| CliError::domain("problem", e))?.with_id(id);
            Ok(format!("{}\n", to_json_pretty(&p.to_file())?))
        }
        Command::Lib(cmd) => lib_command(cli, &mut ctx, cmd),
    }
}

fn lib_command(cli: &Cli, ctx: &mut Context<'_>, cmd: &LibCommand) -> CliResult {
    let mut lib = ProblemLibrary::open(&cli.storage_root).map_err(|e| CliError::domain("library", e))?;
    match cmd {
        LibCommand::Add { problem, solution, solve: run_solver, tags } => {
            let p = ctx.problem(problem)?;
            let s = match (solution, run_solver) {
                (Some(path), _) => {
                    let text = ctx.read(path)?;
                    Some(serde_json::from_str::<Solution>(&text).map_err(|e| CliError::domain("parse", e))?)
                }
                (None, true) => Some(solve(&p).map_err(|e| CliError::domain("problem", e))?),
                (None, false) => None,
            };
            let id = lib.add(&p, s.as_ref(), tags.clone()).map_err(|e| CliError::domain("library", e))?;
            Ok(format!("{id}\n"))
        }
        LibCommand::List => Ok(match cli.format {
            Some(OutputFormat::Json) => format!("{}\n", to_json_pretty(lib.list())?),
            _ => lib
                .list()
                .iter()
                .map(|e| {
                    format!(
                        "{}\t{}\t{}\n",
                        e.problem_id,
                        if e.has_solution { "solved" } else { "unsolved" },
                        e.tags.join(",")
                    )
                })
                .collect(),
        }),
        LibCommand::Nearest { query, lambda, limit } => {
            let lambda = parse_lambda(lambda)?;
            let q = ctx.problem(query)?;
            let w = weights(lambda, q.feature_arity())?;
            let ranked = lib.nearest_problems(&q, &w, *limit as usize).map_err(|e| CliError::domain("library", e))?;
            Ok(match cli.format {
                Some(OutputFormat::Json) => {
                    let rows: Vec<_> =
                        ranked.iter().map(|(id, d)| serde_json::json!({ "problem_id": id, "distance": d })).collect();
                    format!("{}\n", to_json_pretty(&rows)?)
                }
                _ => ranked.iter().map(|(id, d)| format!("{id}\t{d}\n")).collect(),
            })
        }
        LibCommand::Transfer { query, lambda } => {
            let lambda = parse_lambda(lambda)?;
            let q = ctx.problem(query)?;
            let w = weights(lambda, q.feature_arity())?;
            let outcome =
                lib.transfer_from_nearest(&q, &w).map_err(|e| CliError::domain("library", e))?.ok_or_else(|| {
                    CliError::domain("no-analogue", "no solved problem in the library corresponds to the query")
                })?;
            log::info!("transferred from `{}` at distance {}", outcome.source_id, outcome.distance);
            render_solution(&q, &outcome.solution, cli.format)
        }
    }
}

struct Context<'a> {
    stdin: &'a mut dyn Read,
    stdin_used: bool,
    strict: bool,
}

impl Context<'_> {
    fn read(&mut self, path: &Path) -> Result<String, CliError> {
        if path.as_os_str() == "-" {
            if self.stdin_used {
                return Err(CliError::usage("standard input can only be read once"));
            }
            self.stdin_used = true;
            let mut s = String::new();
            self.stdin.read_to_string(&mut s).map_err(|e| CliError::domain("io", format!("stdin: {e}")))?;
            return Ok(s);
        }
        std::fs::read_to_string(path).map_err(|e| CliError::domain("io", format!("{}: {e}", path.display())))
    }

    fn problem(&mut self, path: &Path) -> Result<TreeProblem<f64>, CliError> {
        let text = self.read(path)?;
        let file: ProblemFile<f64> = serde_json::from_str(&text).map_err(|e| CliError::domain("parse", e))?;
        file.into_problem(&stem(path), self.strict).map_err(|e| CliError::domain("problem", e))
    }
}

fn stem(path: &Path) -> String {
    if path.as_os_str() == "-" {
        return "stdin".into();
    }
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "problem".into())
}

fn parse_lambda(arg: &LambdaArg) -> Result<Option<Vec<f64>>, CliError> {
    if arg.lambda.is_empty() {
        return Ok(None);
    }
    arg.lambda
        .iter()
        .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::usage(format!("--lambda: `{s}` is not a number"))))
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

fn weights(values: Option<Vec<f64>>, arity: usize) -> Result<MetricWeights<f64>, CliError> {
    let Some(values) = values else {
        return Ok(MetricWeights::uniform(arity + 1));
    };
    if values.len() != arity + 1 {
        return Err(CliError::usage(format!("--lambda needs {} weights, got {}", arity + 1, values.len())));
    }
    MetricWeights::new(values).map_err(|e| CliError::usage(format!("--lambda: {e}")))
}

fn to_json_pretty<T: serde::Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::domain("io", e))
}

fn render_matrix(m: &CharacteristicMatrix<f64>, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => m.to_csv(),
        OutputFormat::Json => {
            let columns: Vec<String> = m.columns().iter().map(|c| c.to_string()).collect();
            format!(
                "{}\n",
                serde_json::json!({ "source_id": m.source_id(), "columns": columns, "rows": m.entries().to_rows() })
            )
        }
        OutputFormat::Text => {
            let mut cells: Vec<Vec<String>> = vec![m.columns().iter().map(|c| c.to_string()).collect()];
            cells.extend(m.entries().to_rows().iter().map(|r| r.iter().map(|x| x.to_string()).collect()));
            let widths: Vec<usize> =
                (0..m.width()).map(|j| cells.iter().map(|r| r[j].len()).max().unwrap_or(0)).collect();
            let mut s = String::new();
            for row in &cells {
                let line: Vec<String> = row.iter().zip(&widths).map(|(c, &w)| format!("{c:>w$}")).collect();
                let _ = writeln!(s, "{}", line.join(" "));
            }
            s
        }
    }
}

/// Compact solution JSON, then (unless JSON output was requested) the path.
fn render_solution(p: &TreeProblem<f64>, s: &Solution, format: Option<OutputFormat>) -> CliResult {
    let json = serde_json::to_string(s).map_err(|e| CliError::domain("io", e))?;
    if format == Some(OutputFormat::Json) {
        return Ok(format!("{json}\n"));
    }
    let tree = p.tree();
    let tip = decode_path(tree, s).map_err(|e| CliError::domain("solution", e))?;
    let mut nodes = Vec::new();
    let mut u = tree.node_index(&tip);
    while let Some(x) = u {
        nodes.push(tree.id(x).to_string());
        u = tree.parent(x);
    }
    nodes.reverse();
    Ok(format!("{json}\npath: {}\n", nodes.join(" → ")))
}
