//! Problem registry, special functions, experiment drivers and reports.

pub mod problem_file;
pub mod problems;
pub mod report;
pub mod runner;
pub mod special;

pub use problems::{builtin, builtins, ExactSolution, GridHint, ProblemSpec};
pub use report::{ErrorKind, ReportFormat, RunReport};
pub use runner::{
    conditioning_study, paper_suite, parse_formulation, resolve_problem, run_case, run_suite_case, CaseOutput, RunOptions,
};
