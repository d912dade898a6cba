//! Lattice Boltzmann solvers for the Stefan problem with a sharp or
//! regularized phase-change front.
//!
//! * [`lattice`]: velocity sets, population storage, streaming;
//! * [`schemes`]: explicit enthalpy, implicit liquid-fraction and implicit
//!   regularized enthalpy time steps;
//! * [`boundary`]: wall closures;
//! * [`analytic`]: the exact one-dimensional solution;
//! * [`diagnostics`]: interface tracking, isolines, error norms;
//! * [`case`], [`runner`], [`output`]: case files, runs and CSV results.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod boundary;
pub mod case;
pub mod diagnostics;
pub mod lattice;
pub mod output;
pub mod runner;
pub mod schemes;

pub use case::{parse_case, preset, CaseSpec};
pub use runner::{bench_case, run_case, RunError, RunReport};
pub use schemes::Method;
