//! Shared setup for the benchmarks.

use greenbvp::harness::problems::builtin;
use greenbvp::solver::{prepare, Prepared};
use greenbvp::{Formulation, Grid};

/// A built-in problem prepared with the automatic transform.
pub fn prepared(name: &str) -> Prepared {
    let spec = builtin(name).expect("built-in problem");
    prepare(&spec.to_system().unwrap(), &Formulation::TransformAuto).unwrap()
}

pub fn uniform(prepared: &Prepared, panels: usize, order: usize) -> Grid {
    Grid::uniform(prepared.system.interval, panels, order).unwrap()
}
