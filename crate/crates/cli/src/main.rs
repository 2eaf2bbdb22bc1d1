use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use greenbvp::harness::problems::GridHint;
use greenbvp::harness::report::{emit, ReportFormat, RunReport};
use greenbvp::harness::runner::STUDY_PROBLEMS;
use greenbvp::harness::{
    conditioning_study, paper_suite, parse_formulation, resolve_problem, run_case, run_suite_case, RunOptions,
};
use greenbvp::Error;

const EXIT_SOLVER: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "greenbvp", version, about = "Integral-equation solver for linear two-point boundary value systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one problem and report the error.
    Solve {
        /// Built-in problem name or path to a problem file.
        #[arg(long)]
        problem: String,
        /// `uniform:<M>` or `dyadic:<M>@<x0>`; defaults to the problem's own grid.
        #[arg(long)]
        grid: Option<String>,
        /// Chebyshev nodes per panel.
        #[arg(long)]
        order: Option<usize>,
        /// trivial | scalar:<l> | q0:auto | q0:<path> | transform-auto
        #[arg(long, default_value = "transform-auto")]
        formulation: String,
        /// Solve the dense global system instead of using the fast solver.
        #[arg(long)]
        dense: bool,
        /// Report the condition number of the discretized operator.
        #[arg(long)]
        cond: bool,
        /// Iterative refinement steps after the fast direct solve.
        #[arg(long, default_value_t = 0)]
        refine: usize,
        /// Write the report as CSV.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Experiment drivers.
    Study {
        #[command(subcommand)]
        kind: Study,
    },
    /// Run a benchmark suite.
    Bench {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Directory for `<suite>.csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum Study {
    /// Compare the four formulations on a model problem with dense solves.
    Conditioning {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(STUDY_PROBLEMS))]
        problem: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Suite {
    Paper,
}

fn write_csv(path: &std::path::Path, reports: &[RunReport]) -> greenbvp::Result<()> {
    std::fs::write(path, emit(reports, ReportFormat::Csv))?;
    Ok(())
}

fn print_table(reports: &[RunReport]) {
    print!("{}", String::from_utf8_lossy(&emit(reports, ReportFormat::Table)));
}

fn run(cli: Cli) -> greenbvp::Result<()> {
    match cli.command {
        Command::Solve {
            problem,
            grid,
            order,
            formulation,
            dense,
            cond,
            refine,
            output,
        } => {
            let spec = resolve_problem(&problem)?;
            let formulation = parse_formulation(&formulation)?;
            let order = order.unwrap_or_else(|| spec.default_order());
            let grid = match grid {
                Some(g) => GridHint::parse(&g)?.build(spec.interval, order)?,
                None => spec.default_grid()?.with_order(order)?,
            };
            let opts = RunOptions {
                dense,
                cond,
                cond_t: true,
                refine,
            };
            let out = run_case(&spec, &grid, &formulation, opts)?;
            let reports = [out.report];
            print_table(&reports);
            if let Some(path) = output {
                write_csv(&path, &reports)?;
            }
        }
        Command::Study {
            kind: Study::Conditioning { problem, output },
        } => {
            let reports = conditioning_study(&problem)?;
            print_table(&reports);
            if let Some(path) = output {
                write_csv(&path, &reports)?;
            }
        }
        Command::Bench { suite: Suite::Paper, output } => {
            let mut reports = Vec::new();
            for case in paper_suite() {
                let r = run_suite_case(&case)?;
                eprintln!("{} {} p={} {:.3}s", r.problem, r.grid, r.order, r.seconds);
                reports.push(r);
            }
            print_table(&reports);
            if let Some(dir) = output {
                std::fs::create_dir_all(&dir)?;
                write_csv(&dir.join("paper.csv"), &reports)?;
            }
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_SOLVER
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
