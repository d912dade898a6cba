use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stefan_lbm::case::{self, CaseError, CaseSpec, PRESETS};
use stefan_lbm::output::{self, CompareError};
use stefan_lbm::runner::{bench_case, run_case, BenchRow, RunError, RunReport};
use stefan_lbm::Method;

const EXIT_OTHER: u8 = 1;
const EXIT_PARSE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "stefan-lbm",
    version,
    about = "Lattice Boltzmann Stefan problem solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a case file or a built-in preset (stefan1d, freeze2d).
    Run {
        case: String,
        /// Replace one key, e.g. `scheme.method=eebm`; repeatable.
        #[arg(short = 'o', long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory (same as `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time a preset for several methods and resolutions.
    Bench {
        preset: String,
        #[arg(long, value_delimiter = ',', default_value = "eebm,irebm,ilfbm")]
        methods: Vec<Method>,
        #[arg(long, value_delimiter = ',', default_value = "201,401,801")]
        sizes: Vec<usize>,
        /// Steps per run; the full run when omitted.
        #[arg(long)]
        steps: Option<u64>,
        #[arg(short = 'o', long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Write the timing table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate interface traces side by side.
    Compare {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Write the comparison here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Run(RunError),
    Case(CaseError),
    Compare(CompareError),
    Io(io::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Run(e) => e.exit_code() as u8,
            Failure::Case(_) => EXIT_PARSE,
            Failure::Compare(CompareError::Read { .. }) => EXIT_PARSE,
            Failure::Compare(_) | Failure::Io(_) => EXIT_OTHER,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Run(e) => e.fmt(f),
            Failure::Case(e) => e.fmt(f),
            Failure::Compare(e) => e.fmt(f),
            Failure::Io(e) => e.fmt(f),
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Failure::Run(e)
    }
}
impl From<CaseError> for Failure {
    fn from(e: CaseError) -> Self {
        Failure::Case(e)
    }
}
impl From<CompareError> for Failure {
    fn from(e: CompareError) -> Self {
        Failure::Compare(e)
    }
}
impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn load(case: &str, overrides: &[String]) -> Result<CaseSpec, Failure> {
    if PRESETS.contains(&case) {
        return Ok(case::preset(case, overrides)?);
    }
    let text = fs::read_to_string(case)
        .map_err(|e| Failure::Case(CaseError::Syntax(format!("cannot read `{case}`: {e}"))))?;
    Ok(case::parse_case_with_overrides(&text, overrides)?)
}

fn print_report(r: &RunReport) {
    println!(
        "{} {} n={} steps={} dt={:e} tau={} t=[{:e}, {:e}] wall={:.3}s",
        r.method,
        r.spec.case.lattice,
        r.spec.case.n,
        r.steps,
        r.dt,
        r.tau,
        r.t_start,
        r.t_final,
        r.wall_seconds
    );
    if r.method == Method::Irebm {
        println!(
            "newton: mean {:.3} max {} bisections {} max residual {:e}",
            r.newton.mean_iterations, r.newton.max_iterations, r.newton.bisections, r.max_residual
        );
    }
    if r.method == Method::Ilfbm {
        println!(
            "inner loop: mean {:.2} max {}",
            r.inner.mean_iterations, r.inner.max_iterations
        );
    }
    println!(
        "boundary deviation: dirichlet {:e} neumann {:e}",
        r.max_dirichlet_deviation, r.max_neumann_deviation
    );
    if let Some(e) = r.linf_error {
        println!("max nodal error vs exact: {e:e}");
    }
    if let Some(tr) = &r.trace {
        println!(
            "interface: max error {:e} mean error {:e}",
            tr.max_error(),
            tr.mean_error()
        );
    }
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    for p in &r.written {
        println!("wrote {}", p.display());
    }
}

fn write_to(
    out: Option<&PathBuf>,
    f: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> io::Result<()> {
    match out {
        Some(path) => {
            let mut file = io::BufWriter::new(fs::File::create(path)?);
            f(&mut file)?;
            file.flush()
        }
        None => f(&mut io::stdout().lock()),
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            case,
            mut overrides,
            out,
        } => {
            if let Some(dir) = out {
                let dir = dir
                    .to_string_lossy()
                    .replace('\\', "\\\\")
                    .replace('"', "\\\"");
                overrides.push(format!("output.dir=\"{dir}\""));
            }
            let spec = load(&case, &overrides)?;
            let report = run_case(&spec)?;
            print_report(&report);
        }
        Command::Bench {
            preset,
            methods,
            sizes,
            steps,
            overrides,
            out,
        } => {
            let mut rows: Vec<BenchRow> = Vec::new();
            for &n in &sizes {
                for &method in &methods {
                    let mut o = overrides.clone();
                    o.push(format!("case.n={n}"));
                    o.push(format!("scheme.method=\"{method}\""));
                    o.push("output.trace=false".into());
                    let spec = load(&preset, &o)?;
                    let row = bench_case(&spec, steps)?;
                    eprintln!("{method} n={n}: {} steps in {:.3}s", row.steps, row.seconds);
                    rows.push(row);
                }
            }
            write_to(out.as_ref(), |w| output::write_timing(&rows, w))?;
        }
        Command::Compare { traces, out } => {
            let loaded = traces
                .iter()
                .map(|p| output::load_trace(p))
                .collect::<Result<Vec<_>, _>>()?;
            let cmp = output::compare_runs(&loaded)?;
            write_to(out.as_ref(), |w| output::write_comparison(&cmp, w))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
