//! Adapted total variation for laws of finite-alphabet discrete-time processes.
//!
//! The crate computes total variation, relative entropy and adapted total
//! variation between [`ProcessLaw`]s, builds optimal bicausal couplings, and
//! ships property checks for the Pinsker-type inequalities relating them.
//!
//! Adapted total variation is computed three independent ways:
//! [`atv_recursive`] (stagewise TV integrated against iterated minimum
//! measures), [`atv_dp`] (backward induction with generic exact transport at
//! each stage) and [`atv_lp`] (one linear program over all path pairs with
//! explicit causality rows).

pub mod atv;
pub mod error;
pub mod lab;
pub mod lp;
pub mod measure;
pub mod ot;
pub mod simplex;

pub use atv::{
    atv_dp, atv_dp_with, atv_recursive, coupling_cost, optimal_bicausal_coupling, AtvBreakdown,
    Coupling,
};
pub use error::{Error, Result};
pub use lp::{atv_lp, atv_lp_with, build_bicausal_lp, is_bicausal, BicausalityReport, LpConfig};
pub use measure::{
    kl, kl_chain, meet, tv, tv_paths, Alphabet, Dist, ExtReal, JointTable, ProcessLaw, SubProb,
};
pub use ot::{solve_discrete_ot, CostMatrix, OtSolution, OtSolver};
