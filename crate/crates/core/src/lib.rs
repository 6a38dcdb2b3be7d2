//! Exact-arithmetic toolkit for multi-agent combinatorial contracts.
//!
//! A principal pays each agent a linear share of a combinatorial reward
//! `f(S)`. This crate evaluates rewards, verifies equilibria (PNE, MNE, CE,
//! CCE), transforms contracts so that good equilibria exist or are robust,
//! and computes equilibrium benchmarks by exact linear programming.
//!
//! ```
//! use contractlab::{fixtures, is_mne, principal_utility, ratio};
//!
//! let inst = fixtures::separation_example();
//! let (a, p) = fixtures::separation_mne();
//! assert!(is_mne(&inst, &p, &a).unwrap().holds());
//! let both = [0, 1].into_iter().collect();
//! assert_eq!(principal_utility(&inst, &both, &a).unwrap(), ratio(1700, 9));
//! ```

pub mod audit;
pub mod equilibria;
pub mod error;
pub mod fixtures;
pub mod model;
pub mod profile;
pub mod rewards;
pub mod scalar;
pub mod solvers;
pub mod transforms;

pub use equilibria::{
    best_response_dynamics, default_tolerance, is_cce, is_cce_tol, is_ce, is_ce_tol,
    is_dropout_stable, is_dropout_stable_tol, is_mne, is_mne_tol, is_pne, potential_maximizer_pne,
    DynamicsOutcome, JointDistribution, ProductDistribution, Verdict, Violation,
};
pub use error::{Error, Result};
pub use model::{agent_utility, potential, principal_utility, welfare, Contract, Instance, Limits};
pub use profile::{subsets, ActionProfile};
pub use rewards::{ClassReport, Price, PriceVector, RewardFunction, RewardView};
pub use scalar::{
    exact_sqrt, format_scalar, int, parse_scalar, ratio, round_to_digits, to_f64, ExtendedScalar,
    Scalar,
};
pub use solvers::{
    best_cce, best_ce, best_pne_binary, enumerate_pne, g_values, grid_search, grid_search_cells,
    worst_cce, CellResult, EquilibriumOptimum, GapReport, InducedSet, Objective, Polytope, Witness,
};
pub use transforms::{
    cce_to_pne_supermodular_binary, ce_to_pne_supermodular, lift_subadditive, lift_xos,
    partition_agents, robustify_submodular, scale_for_existence, scale_for_existence_subadditive,
    scale_for_robustness, AgentPartition, LiftCase, LiftResult, RobustCase, RobustifyResult,
    ScalingParams,
};
