//! Fully implicit two-phase, two-component porous-media flow with an
//! adaptively coupled domain decomposition nonlinear solver.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`] - structured Cartesian grids, TPFA geometry, tile partitions.
//! * [`fluid`] - immiscible oil/gas closures and the volume constraint.
//! * [`wells`] - Peaceman wells with rate/BHP controls.
//! * [`assembly`] - residual and Jacobian assembly on global or regional scopes.
//! * [`linalg`] - block CSR kernels, ILU(0), block Jacobi and restarted GMRES.
//! * [`newton`] - damped Newton with backtracking line search.
//! * [`addm`] - front detection and the adaptive subdomain coupling strategies.
//! * [`timeloop`] - the per-step local/global solve driver and statistics.
//! * [`io`] - decks, built-in cases, CSV reports and VTK snapshots.

// Negated float comparisons reject NaN on purpose, and the small fixed-size
// block loops read better with explicit indices.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod addm;
pub mod assembly;
pub mod fluid;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod newton;
pub mod timeloop;
pub mod units;
pub mod wells;

pub use addm::{CouplingPattern, SaturationDelta, ThresholdStrategy};
pub use assembly::{AssembledSystem, BoundaryKind, ProblemScope};
pub use fluid::{FluidParams, FluidState};
pub use grid::{Grid, SubdomainLayout};
pub use io::Deck;
pub use linalg::BlockCsrMatrix;
pub use newton::{NewtonConfig, NewtonReport};
pub use timeloop::{Method, Simulator, SolverStats};
pub use wells::{Well, WellState};
