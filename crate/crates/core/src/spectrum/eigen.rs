//! Smallest eigenpairs of the symmetric-definite pencil `(S, M)` by inertia
//! bisection (Sylvester counts from the banded LDLᵀ pivots) followed by
//! shift-and-invert refinement. Shifts that land on an eigenvalue break the
//! factorization and are retried perturbed.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::banded::{BandedMatrix, Ldlt};
use crate::error::{Error, Result};
use crate::math;
use crate::profile::Profile;

use super::operator::ModeOperator;

#[derive(Debug, Clone)]
pub struct ModeSpectrum {
    pub n: u32,
    pub delta: f64,
    /// The `k` smallest generalized eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Mass-normalized coefficient vectors, one per eigenvalue.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Cosine similarity of the first eigenvector against the interpolated
    /// translation kernel (meaningful for `n = 1`, 0 otherwise).
    pub kernel_alignment: f64,
    /// Residuals `‖S x − λ M x‖ / ‖x‖_M`.
    pub residuals: Vec<f64>,
}

fn factor_with_retry(
    s: &BandedMatrix,
    mass: &[f64],
    shift: f64,
    spread: f64,
) -> Result<(Ldlt, f64)> {
    let mut sh = shift;
    let mut step = spread * 1e-12;
    for _ in 0..12 {
        match s.shifted(mass, sh).ldlt() {
            Ok(f) => return Ok((f, sh)),
            Err(_) => {
                sh += step;
                step *= 4.0;
            }
        }
    }
    Err(Error::Factorization { pivot_index: 0 })
}

/// Number of pencil eigenvalues strictly below `shift`.
fn count_below(s: &BandedMatrix, mass: &[f64], shift: f64, spread: f64) -> Result<usize> {
    let (f, _) = factor_with_retry(s, mass, shift, spread)?;
    Ok(f.negative_pivots())
}

fn m_dot(mass: &[f64], x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(mass)
        .map(|((a, b), m)| a * b * m)
        .sum()
}

fn m_normalize(mass: &[f64], x: &mut [f64]) {
    let n = math::sqrt(m_dot(mass, x, x));
    if n > 0.0 {
        for v in x.iter_mut() {
            *v /= n;
        }
    }
}

/// Project `x` M-orthogonally against the M-normalized vectors in `basis`.
fn m_deflate(mass: &[f64], basis: &[Vec<f64>], x: &mut [f64]) {
    for b in basis {
        let c = m_dot(mass, x, b);
        for (v, bb) in x.iter_mut().zip(b) {
            *v -= c * bb;
        }
    }
}

fn residual_norm(s: &BandedMatrix, mass: &[f64], x: &[f64], lambda: f64) -> f64 {
    let mut sx = vec![0.0; x.len()];
    s.matvec(x, &mut sx);
    let mut acc = 0.0;
    for i in 0..x.len() {
        let r = sx[i] - lambda * mass[i] * x[i];
        acc += r * r;
    }
    math::sqrt(acc)
}

/// Deterministic start vector.
fn seed_vector(n: usize, salt: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15 ^ (salt as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    for v in x.iter_mut() {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        *v = ((state >> 11) as f64) * (1.0 / (1u64 << 53) as f64) - 0.5;
    }
    x
}

/// Inverse iteration with a fixed shift, deflated against `found`.
fn inverse_iterate(
    s: &BandedMatrix,
    mass: &[f64],
    shift: f64,
    spread: f64,
    found: &[Vec<f64>],
    tol: f64,
    salt: usize,
) -> Result<(f64, Vec<f64>, f64)> {
    let n = mass.len();
    let (mut fact, mut sh) = factor_with_retry(s, mass, shift, spread)?;
    let mut x = seed_vector(n, salt);
    m_deflate(mass, found, &mut x);
    m_normalize(mass, &mut x);
    let mut lambda = sh;
    let mut res = f64::INFINITY;
    for it in 0..60 {
        let mut y: Vec<f64> = x.iter().zip(mass).map(|(v, m)| v * m).collect();
        fact.solve(&mut y);
        m_deflate(mass, found, &mut y);
        m_normalize(mass, &mut y);
        x = y;
        let mut sx = vec![0.0; n];
        s.matvec(&x, &mut sx);
        lambda = x.iter().zip(&sx).map(|(a, b)| a * b).sum();
        res = residual_norm(s, mass, &x, lambda);
        if res <= tol {
            break;
        }
        // Rayleigh-quotient shift update once the iterate settles
        if it >= 2 && math::abs(lambda - sh) > spread * 1e-14 {
            if let Ok((f2, s2)) = factor_with_retry(s, mass, lambda, spread) {
                fact = f2;
                sh = s2;
            }
        }
    }
    // canonical sign: first entry of largest magnitude positive
    let mut imax = 0;
    for i in 0..n {
        if math::abs(x[i]) > math::abs(x[imax]) {
            imax = i;
        }
    }
    if x[imax] < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
    Ok((lambda, x, res))
}

/// The `k` smallest eigenpairs of `op`, with residuals bounded by `tol`
/// relative to the operator scale.
pub fn min_eigenpairs(op: &ModeOperator, k: usize, tol: f64) -> Result<ModeSpectrum> {
    min_eigenpairs_deflated(op, k, tol, &[])
}

/// As `min_eigenpairs`, but restricted to the M-orthogonal complement of
/// `preset` (used to deflate the mode-1 translation kernel).
pub fn min_eigenpairs_deflated(
    op: &ModeOperator,
    k: usize,
    tol: f64,
    preset: &[Vec<f64>],
) -> Result<ModeSpectrum> {
    if k == 0 {
        return Err(Error::Parameter("need k >= 1 eigenpairs".into()));
    }
    let s = &op.stiffness;
    let mass = &op.mass;
    let n = mass.len();
    if k + preset.len() >= n {
        return Err(Error::Parameter(format!(
            "requested {k} eigenpairs of a size-{n} pencil"
        )));
    }

    // spectral interval from scaled Gershgorin rows
    let rows = s.inf_norm_rows();
    let mut bound = 0.0f64;
    for i in 0..n {
        bound = bound.max(rows[i] / mass[i]);
    }
    bound = bound.max(1e-30) * 1.0001 + 1.0;
    let spread = 2.0 * bound;
    let abs_tol = tol * bound;

    let mut preset_normed: Vec<Vec<f64>> = Vec::new();
    for p in preset {
        let mut v = p.clone();
        m_deflate(mass, &preset_normed, &mut v);
        m_normalize(mass, &mut v);
        preset_normed.push(v);
    }
    let shift_of = |j: usize| -> Result<f64> {
        // isolate the j-th eigenvalue (1-based) by inertia bisection
        let mut lo = -bound;
        let mut hi = bound;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let c = count_below(s, mass, mid, spread)?;
            if c >= j {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-10 * bound {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    };

    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let offset = preset_normed.len();
    for j in 1..=k {
        // in the deflated problem the j-th eigenvalue sits among the first
        // j + offset of the full pencil; search upward until the iteration
        // lands on a fresh direction
        let mut accepted = None;
        for probe in (j + offset).saturating_sub(offset)..=(j + offset) {
            let shift = shift_of(probe)?;
            let mut deflate_all = preset_normed.clone();
            deflate_all.extend(eigenvectors.iter().cloned());
            match inverse_iterate(s, mass, shift, spread, &deflate_all, abs_tol, j + probe * 7) {
                Ok((lam, vec, res)) if res <= abs_tol * 100.0 => {
                    accepted = Some((lam, vec, res));
                    break;
                }
                _ => continue,
            }
        }
        let (lam, vecr, res) = accepted.ok_or(Error::Convergence {
            iterations: 60,
            residual: f64::NAN,
        })?;
        eigenvalues.push(lam);
        eigenvectors.push(vecr);
        residuals.push(res);
    }

    // ascending order
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eigenvalues[a].partial_cmp(&eigenvalues[b]).expect("finite"));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
    let eigenvectors: Vec<Vec<f64>> = order.iter().map(|&i| eigenvectors[i].clone()).collect();
    let residuals: Vec<f64> = order.iter().map(|&i| residuals[i]).collect();

    Ok(ModeSpectrum {
        n: op.n,
        delta: op.delta,
        eigenvalues,
        eigenvectors,
        kernel_alignment: 0.0,
        residuals,
    })
}

/// Cosine similarity of coefficient vectors.
pub fn alignment(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = math::sqrt(a.iter().map(|x| x * x).sum());
    let nb: f64 = math::sqrt(b.iter().map(|x| x * x).sum());
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        math::abs(dot) / (na * nb)
    }
}

/// Full spectrum call for one mode: eigenpairs plus kernel alignment.
pub fn mode_spectrum(p: &Profile, op: &ModeOperator, k: usize, tol: f64) -> Result<ModeSpectrum> {
    let mut spec = min_eigenpairs(op, k, tol)?;
    if op.n == 1 {
        let kv = op.kernel_vector(p);
        spec.kernel_alignment = alignment(&spec.eigenvectors[0], &kv);
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banded::BandedMatrix;
    use crate::spectrum::operator::DofMap;

    fn toy_operator(diag: &[f64], off: f64) -> ModeOperator {
        let n = diag.len();
        let mut s = BandedMatrix::new(n, 3);
        for (i, &d) in diag.iter().enumerate() {
            s.add(i, i, d);
        }
        for i in 0..n - 1 {
            s.add(i + 1, i, off);
        }
        ModeOperator {
            n: 5,
            delta: 0.0,
            stiffness: s,
            mass: vec![1.0; n],
            dofs: DofMap::test_map(n),
        }
    }

    #[test]
    fn matches_hand_computed_pencil() {
        // S = [[2, -1], [-1, 2]], M = I: eigenvalues 1 and 3
        let op = toy_operator(&[2.0, 2.0], -1.0);
        let spec = min_eigenpairs(&op, 2, 1e-12).unwrap();
        assert!(math::abs(spec.eigenvalues[0] - 1.0) < 1e-9, "{:?}", spec.eigenvalues);
        assert!(math::abs(spec.eigenvalues[1] - 3.0) < 1e-9);
    }

    #[test]
    fn diagonal_mass_rescales_spectrum() {
        // S = diag(4, 9), M = diag(2, 3): eigenvalues 2 and 3
        let mut s = BandedMatrix::new(2, 3);
        s.add(0, 0, 4.0);
        s.add(1, 1, 9.0);
        let op = ModeOperator {
            n: 2,
            delta: 0.0,
            stiffness: s,
            mass: vec![2.0, 3.0],
            dofs: DofMap::test_map(2),
        };
        let spec = min_eigenpairs(&op, 2, 1e-12).unwrap();
        assert!(math::abs(spec.eigenvalues[0] - 2.0) < 1e-9);
        assert!(math::abs(spec.eigenvalues[1] - 3.0) < 1e-9);
    }

    #[test]
    fn tridiagonal_laplacian_eigenvalues() {
        // second-difference matrix, eigenvalues 4 sin²(kπ/(2(n+1)))
        let n = 40;
        let op = toy_operator(&vec![2.0; n], -1.0);
        let spec = min_eigenpairs(&op, 3, 1e-11).unwrap();
        for (k, &lam) in spec.eigenvalues.iter().enumerate() {
            let exact = {
                let t = math::sin((k + 1) as f64 * math::PI / (2.0 * (n as f64 + 1.0)));
                4.0 * t * t
            };
            assert!(math::abs(lam - exact) < 1e-8, "k={k}: {lam} vs {exact}");
        }
        for r in &spec.residuals {
            assert!(*r < 1e-8);
        }
    }

    #[test]
    fn deflation_skips_preset_direction() {
        // deflating the ground state of the 2x2 pencil leaves the second
        let op = toy_operator(&[2.0, 2.0], -1.0);
        let inv = 1.0 / math::sqrt(2.0);
        let ground = vec![inv, inv];
        let spec = min_eigenpairs_deflated(&op, 1, 1e-12, &[ground]).unwrap();
        assert!(math::abs(spec.eigenvalues[0] - 3.0) < 1e-9);
    }

    #[test]
    fn rejects_oversized_request() {
        let op = toy_operator(&[2.0, 2.0], -1.0);
        assert!(min_eigenpairs(&op, 2, 1e-10).is_ok());
        assert!(min_eigenpairs(&op, 5, 1e-10).is_err());
        assert!(min_eigenpairs(&op, 0, 1e-10).is_err());
    }
}
