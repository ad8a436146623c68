//! Assembly of a mode's quadratic form as a banded stiffness/mass pencil.
//!
//! The stiffness matrix accumulates exactly the cell and node rules of the
//! `forms` evaluators, so a coefficient vector reproduces `eval_qn` (or
//! `eval_q0`) to rounding. Dirichlet samples are eliminated; the single
//! exception is the ψ-track sample at `r_min` for `n = 1`, whose `1/r²`
//! weight carries the factor `(1−n)² = 0`: keeping that degree of freedom
//! free is what lets the discrete mode-1 spectrum reach the translation
//! kernel instead of paying an artificial logarithmic gap.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use crate::grid::RadialFunction;
use crate::profile::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Track {
    Phi,
    Psi,
}

/// Maps (track, node) to the pencil's degree-of-freedom index.
#[derive(Debug, Clone)]
pub struct DofMap {
    n_nodes: usize,
    /// ψ at node 0 included (mode 1 only).
    psi_origin: bool,
}

impl DofMap {
    pub fn size(&self) -> usize {
        2 * (self.n_nodes - 2) + usize::from(self.psi_origin)
    }

    /// Index of (track, node), or `None` for an eliminated sample.
    pub fn index(&self, track: Track, node: usize) -> Option<usize> {
        let base = usize::from(self.psi_origin);
        if node == 0 {
            return match track {
                Track::Psi if self.psi_origin => Some(0),
                _ => None,
            };
        }
        if node >= self.n_nodes - 1 {
            return None;
        }
        let k = base + 2 * (node - 1);
        Some(match track {
            Track::Phi => k,
            Track::Psi => k + 1,
        })
    }

    pub fn psi_origin(&self) -> bool {
        self.psi_origin
    }

    /// Plain map of a given even size, for solver unit tests.
    #[cfg(test)]
    pub(crate) fn test_map(size: usize) -> DofMap {
        assert!(size % 2 == 0);
        DofMap {
            n_nodes: size / 2 + 2,
            psi_origin: false,
        }
    }

    /// Scatter a coefficient vector into full nodal arrays (zeros at
    /// eliminated samples).
    pub fn expand(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut phi = vec![0.0; self.n_nodes];
        let mut psi = vec![0.0; self.n_nodes];
        for node in 0..self.n_nodes {
            if let Some(i) = self.index(Track::Phi, node) {
                phi[node] = x[i];
            }
            if let Some(i) = self.index(Track::Psi, node) {
                psi[node] = x[i];
            }
        }
        (phi, psi)
    }

    /// Gather nodal arrays into a coefficient vector, dropping eliminated
    /// samples.
    pub fn restrict(&self, phi: &[f64], psi: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.size()];
        for node in 0..self.n_nodes {
            if let Some(i) = self.index(Track::Phi, node) {
                x[i] = phi[node];
            }
            if let Some(i) = self.index(Track::Psi, node) {
                x[i] = psi[node];
            }
        }
        x
    }
}

/// Stiffness/mass pencil of one mode's quadratic form. For `n = 0` the two
/// tracks hold the real and imaginary parts of the complex mode; they
/// decouple and the matrix is block diagonal by construction.
#[derive(Debug, Clone)]
pub struct ModeOperator {
    pub n: u32,
    pub delta: f64,
    pub stiffness: BandedMatrix,
    /// Diagonal Gram matrix of `∫ (φ² + ψ²) r dr`.
    pub mass: Vec<f64>,
    pub dofs: DofMap,
}

impl ModeOperator {
    pub fn size(&self) -> usize {
        self.mass.len()
    }

    /// `xᵀ S x` for a coefficient vector.
    pub fn form_value(&self, x: &[f64]) -> f64 {
        self.stiffness.quad_form(x)
    }

    pub fn mass_norm_sq(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.mass).map(|(v, m)| v * v * m).sum()
    }

    /// Coefficient vector of the translation kernel pair
    /// `(f₀′ − f₀/r, f₀′ + f₀/r)` (meaningful for `n = 1`).
    pub fn kernel_vector(&self, p: &Profile) -> Vec<f64> {
        let nodes = p.grid().nodes();
        let phi: Vec<f64> = (0..nodes.len())
            .map(|i| p.df()[i] - p.f()[i] / nodes[i])
            .collect();
        let psi: Vec<f64> = (0..nodes.len())
            .map(|i| p.df()[i] + p.f()[i] / nodes[i])
            .collect();
        self.dofs.restrict(&phi, &psi)
    }
}

/// Symmetric accumulate of the monomial `c · x_a x_b`; eliminated samples
/// contribute nothing.
fn acc(s: &mut BandedMatrix, a: Option<usize>, b: Option<usize>, c: f64) {
    if let (Some(i), Some(j)) = (a, b) {
        if i == j {
            s.add(i, j, c);
        } else {
            s.add(i, j, 0.5 * c);
        }
    }
}

/// `c · ΔX ΔY` over a cell of width `h`.
#[allow(clippy::too_many_arguments)]
fn kin(
    s: &mut BandedMatrix,
    a0: Option<usize>,
    a1: Option<usize>,
    b0: Option<usize>,
    b1: Option<usize>,
    c: f64,
    h: f64,
) {
    let w = c / (h * h);
    acc(s, a1, b1, w);
    acc(s, a1, b0, -w);
    acc(s, a0, b1, -w);
    acc(s, a0, b0, w);
}

/// `c · ΔX mean(Y)` over a cell of width `h`.
#[allow(clippy::too_many_arguments)]
fn cross(
    s: &mut BandedMatrix,
    a0: Option<usize>,
    a1: Option<usize>,
    b0: Option<usize>,
    b1: Option<usize>,
    c: f64,
    h: f64,
) {
    let w = c * 0.5 / h;
    acc(s, a1, b0, w);
    acc(s, a1, b1, w);
    acc(s, a0, b0, -w);
    acc(s, a0, b1, -w);
}

/// `c · mean(XY)` over a cell.
fn meanp(
    s: &mut BandedMatrix,
    a0: Option<usize>,
    a1: Option<usize>,
    b0: Option<usize>,
    b1: Option<usize>,
    c: f64,
) {
    acc(s, a0, b0, 0.5 * c);
    acc(s, a1, b1, 0.5 * c);
}

/// Assemble the pencil for mode `n` at anisotropy `delta`.
pub fn assemble_mode_operator(p: &Profile, delta: f64, n: u32) -> Result<ModeOperator> {
    if !(delta > -1.0 && delta < 1.0) {
        return Err(Error::Parameter(format!(
            "anisotropy must lie in (-1, 1), got {delta}"
        )));
    }
    let grid = p.grid();
    let n_nodes = grid.len();
    let dofs = DofMap {
        n_nodes,
        psi_origin: n == 1,
    };
    let size = dofs.size();
    let mut s = BandedMatrix::new(size, 3);
    let f = p.f();

    let np = 1.0 + n as f64;
    let nm = 1.0 - n as f64;
    for j in 0..grid.n_cells() {
        let mu = grid.cell_mass()[j];
        let rho = grid.cell_mid()[j];
        let h = grid.cell_width()[j];
        let phi0 = dofs.index(Track::Phi, j);
        let phi1 = dofs.index(Track::Phi, j + 1);
        let psi0 = dofs.index(Track::Psi, j);
        let psi1 = dofs.index(Track::Psi, j + 1);

        if n == 0 {
            // real track u: |u′|² + u²/r² + δ (u′ + u/r)², imaginary track v:
            // |v′|² + v²/r² − δ (v′ + v/r)²
            for (t0, t1, sign) in [(phi0, phi1, 1.0), (psi0, psi1, -1.0)] {
                kin(&mut s, t0, t1, t0, t1, mu * (1.0 + sign * delta), h);
                meanp(&mut s, t0, t1, t0, t1, mu * (1.0 + sign * delta) / (rho * rho));
                cross(&mut s, t0, t1, t0, t1, 2.0 * mu * sign * delta / rho, h);
            }
        } else {
            kin(&mut s, phi0, phi1, phi0, phi1, mu, h);
            kin(&mut s, psi0, psi1, psi0, psi1, mu, h);
            meanp(&mut s, phi0, phi1, phi0, phi1, mu * np * np / (rho * rho));
            meanp(&mut s, psi0, psi1, psi0, psi1, mu * nm * nm / (rho * rho));
            // 2δ [Δφ Δψ + (1−n) Δφ mean(ψ)/ρ + (1+n) mean(φ) Δψ/ρ
            //      + (1−n²) mean(φψ)/ρ²]
            let d2 = 2.0 * delta * mu;
            kin(&mut s, phi0, phi1, psi0, psi1, d2, h);
            cross(&mut s, phi0, phi1, psi0, psi1, d2 * nm / rho, h);
            cross(&mut s, psi0, psi1, phi0, phi1, d2 * np / rho, h);
            meanp(&mut s, phi0, phi1, psi0, psi1, d2 * np * nm / (rho * rho));
        }
    }

    // node-rule potentials
    for (i, &w) in grid.weights().iter().enumerate() {
        let phi = dofs.index(Track::Phi, i);
        let psi = dofs.index(Track::Psi, i);
        let fsq = f[i] * f[i];
        let c = (1.0 + delta) * w;
        if n == 0 {
            acc(&mut s, phi, phi, c * (3.0 * fsq - 1.0));
            acc(&mut s, psi, psi, -c * (1.0 - fsq));
        } else {
            // f²(φ+ψ)² − (1−f²)(φ² + ψ²)
            acc(&mut s, phi, phi, c * (fsq - (1.0 - fsq)));
            acc(&mut s, psi, psi, c * (fsq - (1.0 - fsq)));
            let cross_c = c * 2.0 * fsq;
            if let (Some(a), Some(b)) = (phi, psi) {
                s.add(a, b, 0.5 * cross_c);
            }
        }
    }

    let mut mass = vec![0.0; size];
    for i in 0..n_nodes {
        for t in [Track::Phi, Track::Psi] {
            if let Some(k) = dofs.index(t, i) {
                mass[k] = grid.weights()[i];
            }
        }
    }

    Ok(ModeOperator {
        n,
        delta,
        stiffness: s,
        mass,
        dofs,
    })
}

/// Embed a coefficient vector as a `ModePair` on the profile's grid.
pub fn pair_from_vector(p: &Profile, op: &ModeOperator, x: &[f64]) -> (RadialFunction, RadialFunction) {
    let (phi, psi) = op.dofs.expand(x);
    (
        RadialFunction::new(p.grid(), phi).expect("length"),
        RadialFunction::new(p.grid(), psi).expect("length"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{eval_q0, eval_qn, FormParams, ModePair, TestInputs};
    use crate::grid::{build_grid, GridKind};
    use crate::math;
    use crate::profile::solve_profile;

    fn profile_1024() -> Profile {
        let g = build_grid(1e-3, 40.0, 1024, GridKind::Geometric).unwrap();
        solve_profile(&g, 1e-10).unwrap()
    }

    #[test]
    fn quadratic_form_consistency_with_eval_qn() {
        let p = profile_1024();
        let mut gen = TestInputs::new(3);
        for (delta, n) in [(-0.5, 1u32), (-0.3, 2), (0.4, 5)] {
            let op = assemble_mode_operator(&p, delta, n).unwrap();
            // random interior coefficient vector from bump samples
            let (lo, hi) = (2.0, 19.0);
            let phi = gen.bump(p.grid(), lo, hi);
            let psi = gen.bump(p.grid(), lo, hi);
            let x = op.dofs.restrict(phi.values(), psi.values());
            let sx = op.form_value(&x);
            let direct = eval_qn(
                &p,
                FormParams { delta, n },
                &ModePair::new(phi.clone(), psi.clone()),
            )
            .unwrap()
            .total;
            assert!(
                math::close(sx, direct, 1e-11),
                "n={n} delta={delta}: {sx} vs {direct}"
            );
        }
    }

    #[test]
    fn mode_zero_consistency_and_block_structure() {
        let p = profile_1024();
        let op = assemble_mode_operator(&p, 0.35, 0).unwrap();
        let mut gen = TestInputs::new(9);
        let u = gen.bump(p.grid(), 2.0, 19.0);
        let v = gen.bump(p.grid(), 2.0, 19.0);
        let x = op.dofs.restrict(u.values(), v.values());
        let sx = op.form_value(&x);
        let direct = eval_q0(&p, 0.35, &u, &v).unwrap().total;
        assert!(math::close(sx, direct, 1e-11), "{sx} vs {direct}");

        // tracks decouple: no cross entries
        for i in 0..op.size() - 1 {
            if i % 2 == 0 {
                assert_eq!(op.stiffness.get(i, i + 1), 0.0);
            }
        }
    }

    #[test]
    fn mass_is_positive() {
        let p = profile_1024();
        let op = assemble_mode_operator(&p, -0.2, 3).unwrap();
        assert!(op.mass.iter().all(|&m| m > 0.0));
    }

    #[test]
    fn psi_origin_dof_only_for_mode_one() {
        let p = profile_1024();
        assert!(assemble_mode_operator(&p, 0.0, 1).unwrap().dofs.psi_origin());
        assert!(!assemble_mode_operator(&p, 0.0, 2).unwrap().dofs.psi_origin());
        assert!(!assemble_mode_operator(&p, 0.0, 0).unwrap().dofs.psi_origin());
    }

    #[test]
    fn rejects_delta_out_of_range() {
        let p = profile_1024();
        assert!(assemble_mode_operator(&p, 1.0, 2).is_err());
        assert!(assemble_mode_operator(&p, -1.0, 2).is_err());
    }

    #[test]
    fn kernel_vector_rayleigh_tiny() {
        let p = profile_1024();
        for delta in [-0.9, -0.44, 0.0] {
            let op = assemble_mode_operator(&p, delta, 1).unwrap();
            let k = op.kernel_vector(&p);
            let rayleigh = op.form_value(&k) / op.mass_norm_sq(&k);
            // truncated-domain tail keeps this at O(1/R²)/norm
            assert!(
                math::abs(rayleigh) <= 1e-3,
                "delta {delta}: rayleigh {rayleigh:e}"
            );
        }
    }
}
