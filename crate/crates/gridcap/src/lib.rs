//! Reception areas and local capacity of wireless emitter layouts.
//!
//! The model: emitters at fixed planar positions transmit simultaneously with
//! unit power over a power-law path loss `r^-alpha` (`alpha > 2`). A receiver
//! at `z` decodes emitter `i` when the signal-to-interference ratio exceeds a
//! threshold `beta`. Each emitter then owns a *reception area* — the region
//! where it is decodable — and the network-wide figure of merit is the *local
//! capacity* `c = lambda * sigma`: emitter density times mean reception area,
//! the expected number of emitters a random location can decode.
//!
//! The crate provides:
//!
//! - [`lattice`]: square / hexagonal (honeycomb) / triangular grids, Poisson
//!   scatters, and custom layouts ([`EmitterSet`]).
//! - [`sir_field`]: SIR and normalized-share evaluation with analytic
//!   gradients and a density-aware interference truncation ([`SirField`]).
//! - [`area_tracer`]: boundary tracing of reception areas along the SIR level
//!   set, with a line-integral area accumulator and a polygon cross-check
//!   ([`trace_boundary`]).
//! - [`capacity`]: closed forms and Monte-Carlo estimators for grid and
//!   slotted-ALOHA local capacity, plus parameter sweeps.
//! - [`optimality`]: numerical gradient / Hessian of total reception area
//!   under single-emitter displacement, and linear response under global
//!   affine deformations — the machinery to check a grid is a local optimum.
//!
//! Every random algorithm takes an explicit seed and is reproducible across
//! runs; all file formats write 9 significant digits.
//!
//! Start with the examples: `lattice_patterns`, `sir_field_basics`,
//! `trace_reception_area`, `capacity_comparison`, `grid_optimality`,
//! `linear_response`.

pub mod area_tracer;
pub mod capacity;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod lattice;
pub mod optimality;
pub mod sir_field;
pub mod spatial;

pub use area_tracer::{
    ConvergenceReport, InterfererSet, ReceptionArea, TracerConfig, convergence_study,
    seed_boundary_point, trace_boundary,
};
pub use capacity::{
    CapacityResult, McEstimate, Scheme, SweepPoint, SweepSpec, aloha_capacity, aloha_sigma,
    grid_capacity, grid_capacity_with, grid_field, log_spaced, mc_aloha_sigma, mc_grid_coverage,
    run_sweep, write_gnuplot_table, write_sweep_csv,
};
pub use error::{Error, Result};
pub use geometry::{Mat2, Vec2, Window};
pub use lattice::{EmitterSet, LatticeKind, PatternKind};
pub use optimality::{
    Classification, DiffConfig, GradientReport, HessianReport, LinearResponseReport,
    ResponseMatrixReport, estimate_response_matrix, gradient_u, hessian_u, integrate_u_mc,
    integrate_u_traced, linear_response,
};
pub use sir_field::{FieldParams, FieldSample, SirField, Truncation, share_threshold};
