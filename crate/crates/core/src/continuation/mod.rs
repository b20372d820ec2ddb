//! Collocation discretization of multi-segment boundary value problems and
//! pseudo-arclength continuation of their solutions.

pub mod branch;
pub mod bvp;
pub mod collocation;
pub mod newton;

pub use branch::{
    continue_branch, BranchEvent, BranchPoint, ContinuationBranch, ContinuationOptions, Direction, EndReason, EventKind,
    Monitor,
};
pub use bvp::{BoundaryConditions, BvpSpec, ChartField, Dynamics, Ends, IntegralConstraint, MeshSolution, OrbitSegment, Segment};
pub use collocation::Collocation;
pub use newton::{newton_solve, FnSystem, LinearRow, NewtonOptions, NewtonReport, NonlinearSystem};

/// Defaults used when the caller does not choose a mesh.
pub const DEFAULT_NTST: usize = 200;
pub const DEFAULT_NCOL: usize = 4;
