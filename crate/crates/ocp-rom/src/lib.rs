//! POD-Galerkin model order reduction for parametrized time dependent
//! linear-quadratic optimal control problems in all-at-once saddle point form.
//!
//! The library covers the full offline/online pipeline:
//!
//! - structured reference meshes with affine subdomain maps ([`mesh`]),
//! - P1/P2 finite element assembly on the reference configuration ([`fem`]),
//! - parameter-separable operator families ([`affine`]),
//! - the coupled space-time KKT system and its sparse direct solve
//!   ([`spacetime`]),
//! - proper orthogonal decomposition of space-time snapshots ([`pod`]),
//! - aggregated reduced spaces, supremizer enrichment, Galerkin projection
//!   and the dense online solve ([`rom`]),
//! - the two benchmark configurations ([`cases`]) and artifact persistence
//!   ([`io`]).
//!
//! See the `examples/` directory for runnable entry points to each stage and
//! the `ocp-rom` binary for the `offline` / `online` / `benchmark` /
//! `inspect` workflows.

pub mod affine;
pub mod cases;
pub mod cli;
pub mod error;
pub mod fem;
pub mod io;
pub mod mesh;
pub mod pod;
pub mod rom;
pub mod sparse;
pub mod spacetime;

pub use error::Error;
