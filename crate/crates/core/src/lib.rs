//! Continuation of connecting orbits from a finite saddle (or a saddle
//! periodic orbit) to a degenerate equilibrium at infinity of the quadratic
//! system
//!
//! ```text
//! x' = alpha y + gamma z + y z
//! y' = beta x - y + x^2
//! z' = -4 x
//! ```
//!
//! The point at infinity in the `y -> +inf` direction is reached through a
//! weighted directional compactification and a blow-up. Connecting orbits are
//! found with a two-segment Lin's method boundary value problem, discretized
//! by orthogonal collocation and followed by pseudo-arclength continuation.

pub mod charts;
pub mod continuation;
pub mod eigenstructure;
pub mod error;
pub mod fields;
pub mod infinity;
pub mod lins;
pub mod numerics;
pub mod output;
pub mod periodic;

pub use error::{Error, Result};
pub use fields::{ChartId, ChartPoint, Params, SystemParam};
