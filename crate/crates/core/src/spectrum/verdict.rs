//! Per-δ stability decision: scan the mode pencils, deflate the mode-1
//! translation kernel, certify the high-mode tail analytically where the
//! polynomial condition allows, and fall back to the explicit witnesses.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::certificates;
use crate::error::{Error, Result};
use crate::math;
use crate::profile::Profile;

use super::eigen::{alignment, min_eigenpairs, min_eigenpairs_deflated};
use super::operator::assemble_mode_operator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailCondition {
    CertifiedPositive,
    NotCertified,
}

impl TailCondition {
    pub fn as_str(&self) -> &'static str {
        match self {
            TailCondition::CertifiedPositive => "certified_positive",
            TailCondition::NotCertified => "not_certified",
        }
    }
}

/// How one mode entered the verdict.
#[derive(Debug, Clone)]
pub enum RowEvidence {
    /// Plain smallest eigenvalue.
    Eigenvalue,
    /// Smallest eigenvalue after deflating the translation kernel; carries
    /// the raw eigenvalue and the kernel alignment of its vector.
    DeflatedKernel { raw_lambda: f64, alignment: f64 },
    /// The rotation witness decided the mode (positive anisotropy).
    RotationWitness { form_value: f64, limit: f64 },
    /// A high-mode window bump decided the mode.
    WindowWitness { form_value: f64, window: (f64, f64) },
    /// Eigensolve failed; the mode is undecided.
    SolverFailure(String),
}

#[derive(Debug, Clone)]
pub struct ModeRow {
    pub n: u32,
    /// Decision eigenvalue for the mode (deflated for `n = 1`), when known.
    pub lambda_min: Option<f64>,
    pub negative: bool,
    pub evidence: RowEvidence,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub delta: f64,
    pub rows: Vec<ModeRow>,
    pub overall: Verdict,
    pub n_max_scanned: u32,
    pub tail_condition: TailCondition,
}

#[derive(Debug, Clone, Copy)]
pub struct VerdictOptions {
    /// Highest mode index scanned with the eigensolver when the tail is not
    /// analytically certified.
    pub n_max: u32,
    /// Eigenpairs per mode.
    pub k: usize,
    /// Eigen residual tolerance (relative to the operator scale).
    pub tol: f64,
    /// Mode cap for the high-mode witness sweep.
    pub witness_limit: u32,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        VerdictOptions {
            n_max: 64,
            k: 2,
            tol: 1e-9,
            witness_limit: 256,
        }
    }
}

/// Evaluation of the analytic tail condition: positivity of the window
/// quadratic for all `n ≥ 2` holds exactly on `δ ∈ [−1/√5, 0]`.
#[derive(Debug, Clone, Copy)]
pub struct SufficientCondition {
    pub holds: bool,
    /// Quadratic-in-n coefficients `(α, β, γ) = (1−5δ², 2(1−δ²), −3(1−δ²))`.
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// The n = 2 value `5 − 21δ²`.
    pub n2_value: f64,
}

pub fn sufficient_condition(delta: f64) -> SufficientCondition {
    let d2 = delta * delta;
    let alpha = 1.0 - 5.0 * d2;
    let beta = 2.0 * (1.0 - d2);
    let gamma = -3.0 * (1.0 - d2);
    let n2_value = 5.0 - 21.0 * d2;
    let lower = -1.0 / math::sqrt(5.0);
    SufficientCondition {
        holds: delta >= lower && delta <= 0.0,
        alpha,
        beta,
        gamma,
        n2_value,
    }
}

/// Eigenvalues at or below this (negative) level count as instability
/// witnesses; the band absorbs eigensolver round-off near zero crossings.
const NEGATIVE_CUTOFF: f64 = -1e-7;

/// Kernel-deflation threshold: mode-1 decisions use the eigenvalue in the
/// orthogonal complement of the interpolated kernel.
fn decide_mode(
    p: &Profile,
    delta: f64,
    n: u32,
    opts: &VerdictOptions,
) -> ModeRow {
    let op = match assemble_mode_operator(p, delta, n) {
        Ok(op) => op,
        Err(e) => {
            return ModeRow {
                n,
                lambda_min: None,
                negative: false,
                evidence: RowEvidence::SolverFailure(format!("{e}")),
            }
        }
    };
    if n == 1 {
        let kernel = op.kernel_vector(p);
        let raw = min_eigenpairs(&op, opts.k.max(1), opts.tol);
        let deflated = min_eigenpairs_deflated(&op, 1, opts.tol, &[kernel.clone()]);
        match (raw, deflated) {
            (Ok(raw), Ok(defl)) => {
                let lam = defl.eigenvalues[0];
                ModeRow {
                    n,
                    lambda_min: Some(lam),
                    negative: lam < NEGATIVE_CUTOFF,
                    evidence: RowEvidence::DeflatedKernel {
                        raw_lambda: raw.eigenvalues[0],
                        alignment: alignment(&raw.eigenvectors[0], &kernel),
                    },
                }
            }
            (raw, defl) => {
                let msg = raw
                    .err()
                    .or(defl.err())
                    .map(|e| format!("{e}"))
                    .unwrap_or_default();
                ModeRow {
                    n,
                    lambda_min: None,
                    negative: false,
                    evidence: RowEvidence::SolverFailure(msg),
                }
            }
        }
    } else {
        match min_eigenpairs(&op, 1, opts.tol) {
            Ok(spec) => {
                let lam = spec.eigenvalues[0];
                ModeRow {
                    n,
                    lambda_min: Some(lam),
                    negative: lam < NEGATIVE_CUTOFF,
                    evidence: RowEvidence::Eigenvalue,
                }
            }
            Err(e) => ModeRow {
                n,
                lambda_min: None,
                negative: false,
                evidence: RowEvidence::SolverFailure(format!("{e}")),
            },
        }
    }
}

/// Scan the modes of one anisotropy value and decide stability.
pub fn stability_verdict(p: &Profile, delta: f64, opts: &VerdictOptions) -> Result<StabilityReport> {
    if !(delta > -1.0 && delta < 1.0) {
        return Err(Error::Parameter(format!(
            "anisotropy must lie in (-1, 1), got {delta}"
        )));
    }
    if opts.n_max < 2 {
        return Err(Error::Parameter("need n_max >= 2".into()));
    }

    let mut rows = Vec::new();
    let tail = if sufficient_condition(delta).holds {
        TailCondition::CertifiedPositive
    } else {
        TailCondition::NotCertified
    };

    // positive anisotropy: the rotation witness decides mode 0 analytically;
    // the default domain truncation cannot see its large-scale negativity
    if delta > 0.0 {
        let witness = certificates::positive_delta_certificate(p, delta, 32)?;
        rows.push(ModeRow {
            n: 0,
            lambda_min: None,
            negative: witness.form_value < 0.0,
            evidence: RowEvidence::RotationWitness {
                form_value: witness.form_value,
                limit: witness.analytic_limit,
            },
        });
        let overall = if witness.form_value < 0.0 {
            Verdict::Unstable
        } else {
            Verdict::Inconclusive
        };
        return Ok(StabilityReport {
            delta,
            rows,
            overall,
            n_max_scanned: 0,
            tail_condition: tail,
        });
    }

    // eigonsolve scan
    let scan_to = if tail == TailCondition::CertifiedPositive {
        1
    } else {
        opts.n_max
    };
    let mut any_negative = false;
    let mut any_failure = false;
    for n in 0..=scan_to {
        let row = decide_mode(p, delta, n, opts);
        any_negative |= row.negative;
        any_failure |= matches!(row.evidence, RowEvidence::SolverFailure(_));
        rows.push(row);
    }

    // witness sweep backs the scan below the certified range
    if !any_negative && delta < -1.0 / math::sqrt(5.0) {
        if let Some((n, w)) = certificates::find_unstable_mode(p, delta, opts.witness_limit)? {
            rows.push(ModeRow {
                n,
                lambda_min: None,
                negative: true,
                evidence: RowEvidence::WindowWitness {
                    form_value: w.form_value,
                    window: w.window,
                },
            });
            any_negative = true;
        }
    }

    let overall = if any_negative {
        Verdict::Unstable
    } else if any_failure {
        Verdict::Inconclusive
    } else if tail == TailCondition::CertifiedPositive {
        Verdict::Stable
    } else {
        Verdict::Inconclusive
    };

    Ok(StabilityReport {
        delta,
        rows,
        overall,
        n_max_scanned: scan_to,
        tail_condition: tail,
    })
}
