//! Discretized mode operators, their smallest eigenvalues, per-δ stability
//! verdicts, and the bisection for the critical anisotropy.

mod delta1;
mod eigen;
mod operator;
mod verdict;

pub use delta1::{estimate_delta1, Delta1Estimate, Delta1Options, DeltaProbe};
pub use eigen::{alignment, min_eigenpairs, min_eigenpairs_deflated, mode_spectrum, ModeSpectrum};
pub use operator::{assemble_mode_operator, pair_from_vector, DofMap, ModeOperator, Track};
pub use verdict::{
    stability_verdict, sufficient_condition, ModeRow, RowEvidence, StabilityReport,
    SufficientCondition, TailCondition, Verdict, VerdictOptions,
};
