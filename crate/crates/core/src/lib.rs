//! Decay functions of lattice space-time codes on the multiple-access MIMO
//! channel, exhaustive oracles for them, and constructive pigeonhole
//! witnesses that upper-bound the decay.
//!
//! A user with `n` receive rows and `k` channel uses owns a rank-`2kn`
//! lattice of `n x k` complex matrices; its codebook window is the set of
//! integer combinations with coefficients in `[-N, N]`. For `U` users the
//! decay function is the smallest `det(M M^H)` over stacks `M` of one
//! nonzero codeword per user.

pub mod cplx_linalg;
pub mod decay_oracle;
pub mod error;
pub mod lattice_codes;
pub mod lattice_file;
pub mod pigeonhole_bound;
pub mod projected_basis;
pub mod reduction_lemma;

pub use cplx_linalg::{gram_det, ComplexMat, RealVector, SubspaceBasis};
pub use decay_oracle::{bound_report, brute_force_decay, fit_log_slope, BoundReport, DecayCurve, DecaySample};
pub use error::{Error, Result};
pub use lattice_codes::{CodeEnsemble, CodebookWindow, CoeffVector, LatticeBasis, DEFAULT_ENUMERATION_BUDGET};
pub use lattice_file::LatticeSpec;
pub use pigeonhole_bound::{construct_witness, exponent_alpha, exponent_beta, ExponentSpec, Witness};
pub use projected_basis::{select_projected_basis, ProjectedBasis};
pub use reduction_lemma::{verify_reduction_identity, RowSystem};
pub use num_complex::Complex64;
