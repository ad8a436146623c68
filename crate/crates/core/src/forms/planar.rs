//! Pointwise checks of the planar anisotropy identities
//! `Re(∂_η ū)² = (∇·u)² − (∇×u)²` and
//! `|∇u|² = (∇·u)² + (∇×u)² − 2 det(∇u)`
//! on a sampled Cartesian patch, with finite-difference gradients.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::math;

/// A 2D vector field `u = u₁ + i u₂` sampled on a uniform Cartesian patch.
pub struct PlanarField {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub values: Vec<Complex64>,
}

impl PlanarField {
    pub fn from_fn(
        nx: usize,
        ny: usize,
        x0: f64,
        y0: f64,
        dx: f64,
        dy: f64,
        mut f: impl FnMut(f64, f64) -> Complex64,
    ) -> PlanarField {
        let mut values = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                values.push(f(x0 + dx * ix as f64, y0 + dy * iy as f64));
            }
        }
        PlanarField {
            nx,
            ny,
            x0,
            y0,
            dx,
            dy,
            values,
        }
    }

    fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[iy * self.nx + ix]
    }
}

/// Maximum defect of the two identities over the interior points.
pub fn pointwise_anisotropy_identity(field: &PlanarField) -> f64 {
    let mut worst = 0.0f64;
    for iy in 1..field.ny - 1 {
        for ix in 1..field.nx - 1 {
            // centered gradients of the complex field and its conjugate
            let ux = (field.at(ix + 1, iy) - field.at(ix - 1, iy)) / (2.0 * field.dx);
            let uy = (field.at(ix, iy + 1) - field.at(ix, iy - 1)) / (2.0 * field.dy);

            // left side: ∂_η ū from complex arithmetic
            let deta_bar = ux.conj() + Complex64::new(0.0, 1.0) * uy.conj();
            let lhs1 = (deta_bar * deta_bar).re;

            // right side: div/curl/det from the component gradients
            let (u1x, u2x) = (ux.re, ux.im);
            let (u1y, u2y) = (uy.re, uy.im);
            let div = u1x + u2y;
            let curl = u2x - u1y;
            let det = u1x * u2y - u1y * u2x;
            let rhs1 = div * div - curl * curl;

            let lhs2 = u1x * u1x + u1y * u1y + u2x * u2x + u2y * u2y;
            let rhs2 = div * div + curl * curl - 2.0 * det;

            worst = worst.max(math::abs(lhs1 - rhs1)).max(math::abs(lhs2 - rhs2));
        }
    }
    worst
}
