//! Spectral triples for truncated AF algebras, with the Cantor algebra
//! `C({0,1}^∞)` and full matrix algebras worked out concretely.
//!
//! The crate builds level-`N` Dirac operators from eigenvalue recipes,
//! computes Connes distances on the state space with certified witnesses,
//! realizes the associated Cantor metrics as `ℓ¹` and Euclidean point
//! clouds, estimates fractal dimension and Gromov–Hausdorff gaps, and
//! checks the transposition triple on `M_n` whose metric is the norm
//! distance. Every quantitative claim ships with a verification routine;
//! see [`acceptance`] for the full suite.

pub mod acceptance;
pub mod cantor;
pub mod connes;
pub mod embed;
pub mod error;
pub mod gns;
pub mod matrix_triple;
mod numerics;
pub mod summability;
pub mod walsh;

pub use cantor::{
    cover_sum, critical_exponent, delta_gamma, first_disagreement, standard_interval_of,
    CantorPoint, GammaParam, StandardInterval,
};
pub use connes::{
    brute_force_oracle, connes_distance, diameter_bound_check, lower_bound_witness, point_bracket,
    DistanceResult, SolverOptions, State,
};
pub use embed::{
    box_dimension, embed_euclidean, embed_l1, euclidean_dim, gh_correspondence_distance,
    gh_upper_bound, hausdorff_bounds, universal_space_membership, DimensionEstimate,
    EmbeddedCloud, MembershipVerdict, NormTag,
};
pub use error::{Error, Result};
pub use gns::{
    eigenvalue_condition_check, AlgebraElement, DiracSpec, TruncatedTriple, DEFAULT_MAX_LEVEL,
};
pub use matrix_triple::{
    flip_commutator_norm, spread_half, state_norm_distance, verify_flip_metric, FlipOperator,
    MatrixState,
};
pub use numerics::KahanSum;
pub use summability::{
    summability_threshold, trace_power, trace_resolvent, uhf_dirac_specs, Multiplicities,
    TraceReport, UhfParams,
};

/// Library version, echoed into machine-readable CLI output.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
