//! Bisection for the critical anisotropy separating the stable range from
//! the near-−1 instability, using the monotonicity of the verdict in δ
//! (a form negative at δ′ stays negative for all δ < δ′ ≤ 0 by affinity).

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::profile::Profile;

use super::verdict::{stability_verdict, StabilityReport, Verdict, VerdictOptions};

#[derive(Debug, Clone)]
pub struct DeltaProbe {
    pub delta: f64,
    pub report: StabilityReport,
}

#[derive(Debug, Clone)]
pub struct Delta1Estimate {
    /// Verdict at `bracket_lo` is unstable.
    pub bracket_lo: f64,
    /// At `bracket_hi` no instability was found (stable when certified,
    /// otherwise flagged inconclusive by the tail condition).
    pub bracket_hi: f64,
    pub probes: Vec<DeltaProbe>,
    /// Set when some probe inside the bracket could not be decided.
    pub inconclusive_at: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct Delta1Options {
    pub verdict: VerdictOptions,
    /// Starting unstable candidate; walked toward −1 if not yet unstable.
    pub lo_start: f64,
}

impl Default for Delta1Options {
    fn default() -> Self {
        Delta1Options {
            verdict: VerdictOptions::default(),
            lo_start: -0.95,
        }
    }
}

/// Bisect the instability boundary inside `(−1, −1/√5]` to the requested
/// bracket width.
pub fn estimate_delta1(p: &Profile, width: f64, opts: &Delta1Options) -> Result<Delta1Estimate> {
    if !(width >= 1e-3) {
        return Err(Error::Parameter(format!(
            "bracket width must be at least 1e-3, got {width}"
        )));
    }

    let mut probes = Vec::new();
    let probe = |delta: f64, probes: &mut Vec<DeltaProbe>| -> Result<Verdict> {
        let report = stability_verdict(p, delta, &opts.verdict)?;
        let v = report.overall;
        probes.push(DeltaProbe { delta, report });
        Ok(v)
    };

    // upper end: certified stable at -1/sqrt(5)
    let mut hi = -1.0 / math::sqrt(5.0);
    let v_hi = probe(hi, &mut probes)?;
    if v_hi == Verdict::Unstable {
        return Err(Error::Parameter(format!(
            "expected no instability at delta = {hi}; the grid may be unusable"
        )));
    }

    // lower end: walk toward -1 until instability shows
    let mut lo = opts.lo_start.clamp(-0.999, hi - width);
    loop {
        match probe(lo, &mut probes)? {
            Verdict::Unstable => break,
            _ => {
                let next = -1.0 + 0.4 * (1.0 + lo);
                if 1.0 + next < 5e-3 {
                    return Err(Error::Convergence {
                        iterations: probes.len(),
                        residual: 1.0 + lo,
                    });
                }
                lo = next;
            }
        }
    }

    let mut inconclusive_at = None;
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        match probe(mid, &mut probes)? {
            Verdict::Unstable => lo = mid,
            Verdict::Stable => hi = mid,
            Verdict::Inconclusive => {
                // no negative witness found up to the scanned tail; treat as
                // the not-unstable side but flag it
                inconclusive_at = Some(mid);
                hi = mid;
            }
        }
    }

    Ok(Delta1Estimate {
        bracket_lo: lo,
        bracket_hi: hi,
        probes,
        inconclusive_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridKind};
    use crate::profile::solve_profile;

    #[test]
    fn bracket_lands_inside_expected_range() {
        let g = build_grid(1e-3, 40.0, 1024, GridKind::Geometric).unwrap();
        let p = solve_profile(&g, 1e-10).unwrap();
        let est = estimate_delta1(&p, 0.02, &Delta1Options::default()).unwrap();
        assert!(est.bracket_hi <= -1.0 / math::sqrt(5.0) + 1e-12);
        assert!(est.bracket_lo < est.bracket_hi);
        assert!(est.bracket_hi - est.bracket_lo <= 0.02);
        assert!(est.bracket_lo > -1.0);

        // verdicts are monotone along the probes
        let mut sorted = est.probes.clone();
        sorted.sort_by(|a, b| a.delta.partial_cmp(&b.delta).unwrap());
        let mut seen_not_unstable = false;
        for pr in &sorted {
            match pr.report.overall {
                Verdict::Unstable => {
                    assert!(!seen_not_unstable, "non-monotone verdicts");
                }
                _ => seen_not_unstable = true,
            }
        }
    }

    #[test]
    fn width_validation() {
        let g = build_grid(1e-3, 40.0, 256, GridKind::Geometric).unwrap();
        let p = solve_profile(&g, 1e-9).unwrap();
        assert!(estimate_delta1(&p, 1e-4, &Delta1Options::default()).is_err());
    }
}
