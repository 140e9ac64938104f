//! Worst-case contact load search for linear-elastic structures.
//!
//! Given a tetrahedral body, its boundary surface and a contact region on that
//! surface, this crate locates the contact node whose unit compressive normal
//! load produces the largest peak von Mises stress. Instead of solving one
//! finite-element problem per contact node, it
//!
//! 1. embeds the contact region in a low-dimensional graph Laplacian basis
//!    ([`spectral`], [`force`]),
//! 2. picks a small training set of contact nodes by V-optimal experimental
//!    design: projected gradient descent on the continuous relaxation followed
//!    by deterministic greedy rounding ([`design`]),
//! 3. runs the finite-element oracle on those nodes only ([`fem`]),
//! 4. fits a linear surrogate, ranks every node by predicted peak stress and
//!    re-evaluates the top-ranked ones ([`surrogate`]).
//!
//! [`pipeline`] wires these together, runs brute-force ground-truth sweeps and
//! builds sampler comparison reports. [`procedural`] generates small anchored
//! plate and bar benchmarks.

pub mod design;
pub mod error;
pub mod fem;
pub mod force;
pub mod mesh;
pub mod pipeline;
pub mod procedural;
pub mod spectral;
pub mod surrogate;

pub use error::{Error, Result};
