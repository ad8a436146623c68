//! Planar evaluation of the second-variation energy on a tensor grid,
//! cross-checking the Fourier block-diagonalization: the 2D value of the
//! full quadratic form must equal `2π` times the sum of the mode forms.
//!
//! Radially the same cell rules as the 1D forms are used; angularly the
//! field is differentiated spectrally (exact on the assembled trigonometric
//! polynomials) and integrated with the uniform trapezoid rule, which is
//! also exact below the Nyquist frequency.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{RadialFunction, RadialGrid};
use crate::math;
use crate::profile::Profile;

use super::{eval_q0, eval_qn, FormParams, ModePair};

/// Complex radial coefficient `w_n(r)` sampled on the grid nodes.
pub type ComplexRadial = Vec<Complex64>;

fn check_mode_len(grid: &RadialGrid, modes: &[(i32, ComplexRadial)]) -> Result<()> {
    for (_, w) in modes {
        if w.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                got: w.len(),
            });
        }
    }
    Ok(())
}

/// Spectral θ-derivative of one periodic row via the direct DFT.
fn theta_derivative(row: &[Complex64]) -> Vec<Complex64> {
    let n = row.len();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for (m, c) in coeffs.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &v) in row.iter().enumerate() {
            let ang = -2.0 * math::PI * (m as f64) * (k as f64) / (n as f64);
            acc += v * Complex64::new(math::cos(ang), math::sin(ang));
        }
        *c = acc / n as f64;
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, &c) in coeffs.iter().enumerate() {
            // signed frequency; drop the unpaired Nyquist line
            let freq = if m <= n / 2 { m as i64 } else { m as i64 - n as i64 };
            if 2 * m == n {
                continue;
            }
            let ang = 2.0 * math::PI * (m as f64) * (k as f64) / (n as f64);
            acc += Complex64::new(0.0, freq as f64) * c * Complex64::new(math::cos(ang), math::sin(ang));
        }
        *o = acc;
    }
    out
}

/// Evaluate the full planar form on `v = e^{iθ} Σ w_n e^{inθ}` by 2D
/// quadrature over `[r_min, r_max] × [0, 2π)` with `n_theta` angular nodes.
pub fn eval_full2d(
    p: &Profile,
    delta: f64,
    modes: &[(i32, ComplexRadial)],
    n_theta: usize,
) -> Result<f64> {
    FormParams::new(delta, 0)?;
    let grid = p.grid();
    check_mode_len(grid, modes)?;
    let max_n = modes.iter().map(|(n, _)| n.unsigned_abs()).max().unwrap_or(0) as usize;
    let needed = 8 * max_n + 16;
    if n_theta < needed {
        return Err(Error::Parameter(format!(
            "angular resolution {n_theta} below the required {needed} for max mode {max_n}"
        )));
    }

    let nr = grid.len();
    let nt = n_theta;
    let dtheta = 2.0 * math::PI / nt as f64;

    // assemble v and its spectral θ-derivative on the tensor grid
    let mut v = vec![Complex64::new(0.0, 0.0); nr * nt];
    for k in 0..nt {
        let theta = dtheta * k as f64;
        for (n, w) in modes {
            let ang = (1.0 + *n as f64) * theta;
            let ph = Complex64::new(math::cos(ang), math::sin(ang));
            for i in 0..nr {
                v[i * nt + k] += w[i] * ph;
            }
        }
    }
    let mut dtv = vec![Complex64::new(0.0, 0.0); nr * nt];
    for i in 0..nr {
        let row: Vec<Complex64> = (0..nt).map(|k| v[i * nt + k]).collect();
        let d = theta_derivative(&row);
        dtv[i * nt..(i + 1) * nt].copy_from_slice(&d);
    }

    let f = p.f();
    let mut total = 0.0;

    // gradient and anisotropic terms: radial cell rule × angular nodes
    for j in 0..grid.n_cells() {
        let mu = grid.cell_mass()[j];
        let rho = grid.cell_mid()[j];
        let h = grid.cell_width()[j];
        for k in 0..nt {
            let v0 = v[j * nt + k];
            let v1 = v[(j + 1) * nt + k];
            let t0 = dtv[j * nt + k];
            let t1 = dtv[(j + 1) * nt + k];
            let dv = (v1 - v0) / h;
            let msq_v = 0.5 * (v0.norm_sqr() + v1.norm_sqr());
            let _ = msq_v;
            let msq_t = 0.5 * (t0.norm_sqr() + t1.norm_sqr());
            let grad = dv.norm_sqr() + msq_t / (rho * rho);

            let dvc = dv.conj();
            let mean_tc = 0.5 * (t0.conj() + t1.conj());
            let msq_tc = 0.5 * (t0.conj() * t0.conj() + t1.conj() * t1.conj());
            let inner = dvc * dvc + Complex64::new(0.0, 2.0 / rho) * dvc * mean_tc
                - msq_tc / (rho * rho);
            let theta = dtheta * k as f64;
            let e2 = Complex64::new(math::cos(2.0 * theta), math::sin(2.0 * theta));
            let aniso = (e2 * inner).re;

            total += mu * dtheta * (grad + delta * aniso);
        }
    }

    // potential terms: radial node rule × angular nodes
    for (i, &w) in grid.weights().iter().enumerate() {
        let fsq = f[i] * f[i];
        for k in 0..nt {
            let theta = dtheta * k as f64;
            let e = Complex64::new(math::cos(theta), math::sin(theta));
            let vv = v[i * nt + k];
            let radial_dot = (e * vv.conj()).re;
            total += w
                * dtheta
                * (1.0 + delta)
                * (2.0 * fsq * radial_dot * radial_dot - (1.0 - fsq) * vv.norm_sqr());
        }
    }

    Ok(total)
}

/// Reference value `2π [Q₀(w₀) + Σ_{n≥1} Q_n(w_n, w_{−n})]` assembled from
/// the 1D mode forms with the complex inputs split into real tracks.
pub fn mode_sum(p: &Profile, delta: f64, modes: &[(i32, ComplexRadial)]) -> Result<f64> {
    let grid = p.grid();
    check_mode_len(grid, modes)?;
    let zeros = vec![Complex64::new(0.0, 0.0); grid.len()];
    let lookup = |n: i32| -> &[Complex64] {
        modes
            .iter()
            .find(|(m, _)| *m == n)
            .map(|(_, w)| w.as_slice())
            .unwrap_or(&zeros)
    };
    let re = |w: &[Complex64]| RadialFunction::new(grid, w.iter().map(|c| c.re).collect()).unwrap();
    let im = |w: &[Complex64]| RadialFunction::new(grid, w.iter().map(|c| c.im).collect()).unwrap();

    let max_n = modes.iter().map(|(n, _)| n.unsigned_abs()).max().unwrap_or(0);
    let mut acc = 0.0;
    let w0 = lookup(0);
    acc += eval_q0(p, delta, &re(w0), &im(w0))?.total;
    for n in 1..=max_n {
        let params = FormParams::new(delta, n)?;
        let wp = lookup(n as i32);
        let wm = lookup(-(n as i32));
        // complex pair splits into two real pairs
        let pair_re = ModePair::new(re(wp), re(wm));
        let neg_im: Vec<f64> = wm.iter().map(|c| -c.im).collect();
        let pair_im = ModePair::new(im(wp), RadialFunction::new(grid, neg_im).unwrap());
        acc += eval_qn(p, params, &pair_re)?.total + eval_qn(p, params, &pair_im)?.total;
    }
    Ok(2.0 * math::PI * acc)
}
