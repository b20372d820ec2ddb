//! Dense linear algebra, a bordered sparse solver, 3x3 eigenproblems,
//! adaptive integration and Gauss quadrature.

pub mod band;
pub mod dense;
pub mod eig;
pub mod ode;
pub mod quadrature;

pub use band::BorderedSparse;
pub use dense::{bordered_solve, lu_solve, DenseMatrix, Lu};
pub use eig::{eig3, EigenTriple};
pub use ode::{integrate, Event, EventRecord, IvpOptions, IvpResult, IvpStatus};
pub use quadrature::gauss_nodes;
