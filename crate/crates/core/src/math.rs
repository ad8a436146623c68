//! Float math routed through `libm` so the crate stays `no_std` and results
//! are bit-identical regardless of the host's intrinsics.

pub use libm::{atan2, cbrt, cos, exp, fabs as abs, floor, hypot, log as ln, pow, sin, sqrt};

pub const PI: f64 = core::f64::consts::PI;

/// `a` and `b` agree within `tol` relative to the larger magnitude (absolute
/// when both are below one).
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    let scale = abs(a).max(abs(b)).max(1.0);
    abs(a - b) <= tol * scale
}
