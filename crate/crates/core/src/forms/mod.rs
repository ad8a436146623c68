//! The mode-wise quadratic forms and the identities connecting them.
//!
//! Every form is evaluated through one fixed table of quadrature rules so
//! that algebraic rearrangements of the integrands carry over verbatim to
//! the discrete sums. For nodal arrays `X, Y` and cells `j` (width `h`,
//! midpoint `ρ`, mass `μ = hρ`, node weights `W`):
//!
//! * `∫ a X′Y′ r dr      → Σ_j μ_j a☆_j ΔX ΔY`
//! * `∫ (b/r) X′Y r dr   → Σ_j μ_j b☆_j ΔX mean(Y) / ρ_j`
//! * `∫ (c/r²) X Y r dr  → Σ_j μ_j c☆_j mean(XY) / ρ_j²`
//! * `∫ V X Y r dr       → Σ_i W_i V_i X_i Y_i`
//!
//! with coefficient cell values `f₀² → f_j f_{j+1}`, `(f₀′)² → p_j p_{j+1}`,
//! `(f₀/r)² → q_j q_{j+1}` (`p` the stored derivative, `q = f₀/r`). The term
//! `∫ (2/r³) f₀ f₀′ X Y r dr` is discretized as
//! `Σ_j (μ_j/ρ_j²) mean(q² X Y) − μ_j q_j q_{j+1} Δ(XY/r)`,
//! whose telescoping part pairs exactly with the profile's flux equation.
//! Under these rules the mode-coupling identities and the Hardy
//! decompositions close to the Newton residual on any grid.

mod full2d;
mod inputs;
mod planar;

pub use full2d::{eval_full2d, mode_sum, ComplexRadial};
pub use inputs::{default_support, TestInputs};
pub use planar::{pointwise_anisotropy_identity, PlanarField};

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{cell_delta, cell_mean, RadialFunction, RadialGrid};
use crate::math;
use crate::profile::Profile;

/// Anisotropy and (shifted) Fourier index identifying one mode form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormParams {
    pub delta: f64,
    pub n: u32,
}

impl FormParams {
    pub fn new(delta: f64, n: u32) -> Result<FormParams> {
        if !(delta > -1.0 && delta < 1.0) {
            return Err(Error::Parameter(format!(
                "anisotropy must lie in (-1, 1), got {delta}"
            )));
        }
        Ok(FormParams { delta, n })
    }
}

/// Real-valued test pair (φ, ψ) for the modes `n ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModePair {
    pub phi: RadialFunction,
    pub psi: RadialFunction,
}

impl ModePair {
    pub fn new(phi: RadialFunction, psi: RadialFunction) -> ModePair {
        ModePair { phi, psi }
    }
}

/// Value of a form split into its three integrand groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormBreakdown {
    pub total: f64,
    pub gradient_term: f64,
    pub anisotropic_term: f64,
    pub potential_term: f64,
}

impl FormBreakdown {
    fn assemble(gradient: f64, anisotropic: f64, potential: f64) -> FormBreakdown {
        FormBreakdown {
            total: gradient + anisotropic + potential,
            gradient_term: gradient,
            anisotropic_term: anisotropic,
            potential_term: potential,
        }
    }
}

fn check_same_grid(grid: &RadialGrid, fs: &[&RadialFunction]) -> Result<()> {
    for f in fs {
        grid.check_len(f.values())?;
    }
    Ok(())
}

/// Q₀^δ on the complex track `u + iv`.
pub fn eval_q0(
    p: &Profile,
    delta: f64,
    u: &RadialFunction,
    v: &RadialFunction,
) -> Result<FormBreakdown> {
    FormParams::new(delta, 0)?;
    let grid = p.grid();
    check_same_grid(grid, &[u, v])?;
    let (uu, vv) = (u.values(), v.values());
    let f = p.f();

    let mut gradient = 0.0;
    let mut aniso = 0.0;
    for j in 0..grid.n_cells() {
        let mu = grid.cell_mass()[j];
        let rho = grid.cell_mid()[j];
        let du = cell_delta(grid, uu, j);
        let dv = cell_delta(grid, vv, j);
        let mu_u = cell_mean(uu, j);
        let mu_v = cell_mean(vv, j);
        let msq_u = 0.5 * (uu[j] * uu[j] + uu[j + 1] * uu[j + 1]);
        let msq_v = 0.5 * (vv[j] * vv[j] + vv[j + 1] * vv[j + 1]);
        gradient += mu * (du * du + dv * dv + (msq_u + msq_v) / (rho * rho));
        let part_u = du * du + 2.0 * du * mu_u / rho + msq_u / (rho * rho);
        let part_v = dv * dv + 2.0 * dv * mu_v / rho + msq_v / (rho * rho);
        aniso += mu * (part_u - part_v);
    }
    aniso *= delta;

    let mut potential = 0.0;
    for (i, &w) in grid.weights().iter().enumerate() {
        let fsq = f[i] * f[i];
        potential += w * (2.0 * fsq * uu[i] * uu[i] - (1.0 - fsq) * (uu[i] * uu[i] + vv[i] * vv[i]));
    }
    potential *= 1.0 + delta;

    Ok(FormBreakdown::assemble(gradient, aniso, potential))
}

/// Q_n^δ on a real pair, `n ≥ 1`.
pub fn eval_qn(p: &Profile, params: FormParams, pair: &ModePair) -> Result<FormBreakdown> {
    if params.n == 0 {
        return Err(Error::Parameter(
            "mode 0 is evaluated by eval_q0 on its complex track".into(),
        ));
    }
    let grid = p.grid();
    check_same_grid(grid, &[&pair.phi, &pair.psi])?;
    let (ph, ps) = (pair.phi.values(), pair.psi.values());
    let f = p.f();
    let delta = params.delta;
    let np = 1.0 + params.n as f64;
    let nm = 1.0 - params.n as f64;

    let mut gradient = 0.0;
    let mut aniso = 0.0;
    for j in 0..grid.n_cells() {
        let mu = grid.cell_mass()[j];
        let rho = grid.cell_mid()[j];
        let dph = cell_delta(grid, ph, j);
        let dps = cell_delta(grid, ps, j);
        let m_ph = cell_mean(ph, j);
        let m_ps = cell_mean(ps, j);
        let msq_ph = 0.5 * (ph[j] * ph[j] + ph[j + 1] * ph[j + 1]);
        let msq_ps = 0.5 * (ps[j] * ps[j] + ps[j + 1] * ps[j + 1]);
        let m_cross = 0.5 * (ph[j] * ps[j] + ph[j + 1] * ps[j + 1]);
        gradient +=
            mu * (dph * dph + dps * dps + (np * np * msq_ph + nm * nm * msq_ps) / (rho * rho));
        aniso += mu
            * (dph * dps
                + (nm * dph * m_ps + np * m_ph * dps) / rho
                + np * nm * m_cross / (rho * rho));
    }
    aniso *= 2.0 * delta;

    let mut potential = 0.0;
    for (i, &w) in grid.weights().iter().enumerate() {
        let fsq = f[i] * f[i];
        let sum = ph[i] + ps[i];
        potential += w * (fsq * sum * sum - (1.0 - fsq) * (ph[i] * ph[i] + ps[i] * ps[i]));
    }
    potential *= 1.0 + delta;

    Ok(FormBreakdown::assemble(gradient, aniso, potential))
}

/// A₀ := Q₀⁰ on the complex track `u + iv`.
pub fn eval_a0(p: &Profile, u: &RadialFunction, v: &RadialFunction) -> Result<f64> {
    Ok(eval_q0(p, 0.0, u, v)?.total)
}

/// A₁ := Q₁⁰.
pub fn eval_a1(p: &Profile, pair: &ModePair) -> Result<f64> {
    Ok(eval_qn(p, FormParams { delta: 0.0, n: 1 }, pair)?.total)
}

/// The substituted pair `(f₀′ζ − f₀η/r, f₀′ζ + f₀η/r)`.
pub fn substituted_pair(p: &Profile, zeta: &[f64], eta: &[f64]) -> ModePair {
    let n = p.grid().len();
    let mut phi = Vec::with_capacity(n);
    let mut psi = Vec::with_capacity(n);
    for i in 0..n {
        let a = p.df()[i] * zeta[i];
        let b = p.f()[i] / p.grid().nodes()[i] * eta[i];
        phi.push(a - b);
        psi.push(a + b);
    }
    ModePair {
        phi: RadialFunction::new(p.grid(), phi).expect("matching length"),
        psi: RadialFunction::new(p.grid(), psi).expect("matching length"),
    }
}

/// B_n^δ[ζ, η] = ½ Q_n^δ on the substituted pair.
pub fn eval_bn_direct(
    p: &Profile,
    params: FormParams,
    zeta: &RadialFunction,
    eta: &RadialFunction,
) -> Result<f64> {
    check_same_grid(p.grid(), &[zeta, eta])?;
    let pair = substituted_pair(p, zeta.values(), eta.values());
    Ok(0.5 * eval_qn(p, params, &pair)?.total)
}

/// Result of the rewritten B-form: the four-integral display together with
/// its split into `B¹ + (n−1) B²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnSplit {
    pub total: f64,
    pub b1: f64,
    pub b2: f64,
}

struct BnPieces {
    /// `∫ (f₀/r)² (η′)² r dr`
    i_qq: f64,
    /// `∫ (f₀′)² (ζ′)² r dr`
    i_pp: f64,
    /// `∫ (2/r³) f₀ f₀′ (η−ζ)² r dr`
    g_t: f64,
    /// `∫ [f₀′(η−ζ)/r + f₀η′/r]² r dr`
    l2: f64,
    /// node sums of the `(n−1)`-zone quadratic (without the `n`-dependence)
    z_pp: f64,
    z_qq: f64,
    z_pq: f64,
    /// `∫ (f₀′ − f₀/r) f₀′ ζη / r² r dr`
    rem: f64,
    /// `∫ f₀ f₀′ η′ ζ dr` (the mixed cross of the completed square)
    cr: f64,
}

fn bn_pieces(p: &Profile, zeta: &[f64], eta: &[f64]) -> BnPieces {
    let grid = p.grid();
    let f = p.f();
    let pr = p.df();
    let nodes = grid.nodes();

    let mut i_qq = 0.0;
    let mut i_pp = 0.0;
    let mut g_t = 0.0;
    let mut l2 = 0.0;
    let mut cr = 0.0;
    for j in 0..grid.n_cells() {
        let mu = grid.cell_mass()[j];
        let rho = grid.cell_mid()[j];
        let h = grid.cell_width()[j];
        let (r0, r1) = (nodes[j], nodes[j + 1]);
        let (f0, f1) = (f[j], f[j + 1]);
        let (p0, p1) = (pr[j], pr[j + 1]);
        let (q0, q1) = (f0 / r0, f1 / r1);
        let qq = q0 * q1;
        let pp = p0 * p1;
        let de = (eta[j + 1] - eta[j]) / h;
        let dz = (zeta[j + 1] - zeta[j]) / h;
        let (x0, x1) = (eta[j] - zeta[j], eta[j + 1] - zeta[j + 1]);

        i_qq += mu * qq * de * de;
        i_pp += mu * pp * dz * dz;

        // (2/r³) f f′ X² with the flux-compatible rule
        let mean_q2x2 = 0.5 * (q0 * q0 * x0 * x0 + q1 * q1 * x1 * x1);
        let d_x2_over_r = (x1 * x1 / r1 - x0 * x0 / r0) / h;
        g_t += mu / (rho * rho) * mean_q2x2 - mu * qq * d_x2_over_r;

        // [f′X/r + (f/r) η′]² expanded bilinearly
        let mean_x2 = 0.5 * (x0 * x0 + x1 * x1);
        let mean_px = 0.5 * (p0 * x0 + p1 * x1);
        let mean_q = 0.5 * (q0 + q1);
        l2 += mu * pp * mean_x2 / (rho * rho)
            + 2.0 * h * mean_q * de * mean_px
            + mu * qq * de * de;

        // mixed cross with ζ
        let mean_pz = 0.5 * (p0 * zeta[j] + p1 * zeta[j + 1]);
        cr += h * mean_q * de * mean_pz;
    }

    let mut z_pp = 0.0;
    let mut z_qq = 0.0;
    let mut z_pq = 0.0;
    let mut rem = 0.0;
    for (i, &w) in grid.weights().iter().enumerate() {
        let r = nodes[i];
        let q = f[i] / r;
        let x = pr[i] * zeta[i] / r;
        let y = q * eta[i] / r;
        z_pp += w * x * x;
        z_qq += w * y * y;
        z_pq += w * x * y;
        rem += w * (pr[i] - q) * pr[i] * zeta[i] * eta[i] / (r * r);
    }

    BnPieces {
        i_qq,
        i_pp,
        g_t,
        l2,
        z_pp,
        z_qq,
        z_pq,
        rem,
        cr,
    }
}

/// The rewritten four-integral form of B_n^δ and its `B¹ + (n−1) B²` split.
/// The two routes share one primitive table, so `total == b1 + (n−1) b2` to
/// rounding.
pub fn eval_bn_formula(
    p: &Profile,
    params: FormParams,
    zeta: &RadialFunction,
    eta: &RadialFunction,
) -> Result<BnSplit> {
    if params.n < 1 {
        return Err(Error::Parameter("the B-forms need n >= 1".into()));
    }
    check_same_grid(p.grid(), &[zeta, eta])?;
    let delta = params.delta;
    if 1.0 + delta <= 0.0 {
        return Err(Error::Parameter(
            "the completed square divides by 1 + delta".into(),
        ));
    }
    let nn = params.n as f64;
    let pieces = bn_pieces(p, zeta.values(), eta.values());

    let total = (1.0 + delta) * (pieces.i_qq + pieces.i_pp + pieces.g_t) - 2.0 * delta * pieces.l2
        + (nn - 1.0)
            * ((1.0 - delta) * (nn + 1.0) * pieces.z_pp + (1.0 + delta) * (nn + 1.0) * pieces.z_qq
                - 4.0 * pieces.z_pq)
        + 4.0 * delta * (nn - 1.0) * (pieces.rem + pieces.cr);

    let kappa = 2.0 * delta * (nn - 1.0) / (1.0 + delta);
    let b1 = (1.0 + delta)
        * (pieces.i_qq + 2.0 * kappa * pieces.cr + kappa * kappa * pieces.z_pp + pieces.i_pp)
        + (1.0 + delta) * pieces.g_t
        - 2.0 * delta * pieces.l2;

    let (a_n, b_n) = qn_ab(delta, nn);
    let mut b2 = a_n * pieces.z_pp + b_n * pieces.z_qq;
    // 2 c(r) X Y with c(r) = −2 − 2δ(1 − r f₀′/f₀), node rule
    let grid = p.grid();
    for (i, &w) in grid.weights().iter().enumerate() {
        let r = grid.nodes()[i];
        let c = c_coeff(delta, r, p.df()[i], p.f()[i]);
        let x = p.df()[i] * zeta.values()[i] / r;
        let y = p.f()[i] * eta.values()[i] / (r * r);
        b2 += w * 2.0 * c * x * y;
    }

    Ok(BnSplit { total, b1, b2 })
}

fn qn_ab(delta: f64, n: f64) -> (f64, f64) {
    (
        (1.0 - delta) * (n + 1.0) - 4.0 * delta * delta * (n - 1.0) / (1.0 + delta),
        (1.0 + delta) * (n + 1.0),
    )
}

fn c_coeff(delta: f64, r: f64, df: f64, f: f64) -> f64 {
    -2.0 - 2.0 * delta * (1.0 - r * df / f)
}

/// Coefficients of the pointwise quadratic `q_n^δ(r)[X, Y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QnCoeffs {
    pub a_n: f64,
    pub b_n: f64,
    pub c: f64,
    /// Set when `r` fell between nodes and the profile was interpolated.
    pub interpolated: bool,
}

pub fn qn_coeffs(delta: f64, n: u32, r: f64, p: &Profile) -> Result<QnCoeffs> {
    if !(delta > -1.0) {
        return Err(Error::Parameter(format!(
            "need delta > -1 for the completed square, got {delta}"
        )));
    }
    if n < 2 {
        return Err(Error::Parameter(format!("q_n is defined for n >= 2, got {n}")));
    }
    let (a_n, b_n) = qn_ab(delta, n as f64);
    let i = p.grid().nearest_node(r);
    let node_r = p.grid().nodes()[i];
    let interpolated = math::abs(node_r - r) > 1e-12 * r.max(1.0);
    let (f, df) = if interpolated {
        // linear interpolation between the bracketing nodes
        let nodes = p.grid().nodes();
        let j = if r < node_r && i > 0 { i - 1 } else { i };
        let j = j.min(p.grid().len() - 2);
        let t = ((r - nodes[j]) / (nodes[j + 1] - nodes[j])).clamp(0.0, 1.0);
        (
            p.f()[j] * (1.0 - t) + p.f()[j + 1] * t,
            p.df()[j] * (1.0 - t) + p.df()[j + 1] * t,
        )
    } else {
        (p.f()[i], p.df()[i])
    };
    Ok(QnCoeffs {
        a_n,
        b_n,
        c: c_coeff(delta, r, df, f),
        interpolated,
    })
}

/// Which connecting identity to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityKind {
    Q0A0,
    Q1A1,
    QnQ1,
    A0Dec,
    A1Dec,
}

/// Inputs for `identity_gap`, matched to the identity's shape.
pub enum IdentityInput<'a> {
    /// One complex track `u + iv` (Q0_A0) or the factor `χ` of `f₀χ` (A0_dec).
    ComplexTrack {
        re: &'a RadialFunction,
        im: &'a RadialFunction,
    },
    /// A mode pair (Q1_A1, Qn_Q1).
    Pair(&'a ModePair),
    /// The Hardy factors (A1_dec).
    HardyPair {
        zeta: &'a RadialFunction,
        eta: &'a RadialFunction,
    },
}

/// Absolute difference of the two sides of the named identity, evaluated by
/// quadrature. The boundary terms the derivations discard vanish identically
/// for endpoint-vanishing inputs and are not added back.
pub fn identity_gap(
    p: &Profile,
    delta: f64,
    n: u32,
    input: &IdentityInput<'_>,
    which: IdentityKind,
) -> Result<f64> {
    let grid = p.grid();
    match (which, input) {
        (IdentityKind::Q0A0, IdentityInput::ComplexTrack { re, im }) => {
            let zero = RadialFunction::zeros(grid);
            let lhs = eval_q0(p, delta, re, im)?.total;
            let a0_re = eval_a0(p, re, &zero)?;
            let a0_im = eval_a0(p, &zero, im)?;
            let mut extra = 0.0;
            for (i, &w) in grid.weights().iter().enumerate() {
                let fsq = p.f()[i] * p.f()[i];
                let v = im.values()[i];
                extra += w * (1.0 - fsq) * v * v;
            }
            let rhs = (1.0 + delta) * a0_re + (1.0 - delta) * a0_im - 2.0 * delta * extra;
            Ok(math::abs(lhs - rhs))
        }
        (IdentityKind::Q1A1, IdentityInput::Pair(pair)) => {
            let params = FormParams::new(delta, 1)?;
            let lhs = eval_qn(p, params, pair)?.total;
            let a1 = eval_a1(p, pair)?;
            // −δ ∫ (φ′ + 2φ/r − ψ′)² r dr, expanded bilinearly
            let (ph, ps) = (pair.phi.values(), pair.psi.values());
            let mut square = 0.0;
            for j in 0..grid.n_cells() {
                let mu = grid.cell_mass()[j];
                let rho = grid.cell_mid()[j];
                let dph = cell_delta(grid, ph, j);
                let dps = cell_delta(grid, ps, j);
                let m_ph = cell_mean(ph, j);
                let msq_ph = 0.5 * (ph[j] * ph[j] + ph[j + 1] * ph[j + 1]);
                square += mu
                    * (dph * dph + dps * dps + 4.0 * msq_ph / (rho * rho)
                        + 4.0 * dph * m_ph / rho
                        - 2.0 * dph * dps
                        - 4.0 * m_ph * dps / rho);
            }
            let rhs = (1.0 + delta) * a1 - delta * square;
            Ok(math::abs(lhs - rhs))
        }
        (IdentityKind::QnQ1, IdentityInput::Pair(pair)) => {
            if n < 2 {
                return Err(Error::Parameter("Qn_Q1 needs n >= 2".into()));
            }
            let lhs = eval_qn(p, FormParams::new(delta, n)?, pair)?.total
                - eval_qn(p, FormParams::new(delta, 1)?, pair)?.total;
            let (ph, ps) = (pair.phi.values(), pair.psi.values());
            let nn = n as f64;
            let mut rhs = 0.0;
            for j in 0..grid.n_cells() {
                let mu = grid.cell_mass()[j];
                let rho = grid.cell_mid()[j];
                let dph = cell_delta(grid, ph, j);
                let dps = cell_delta(grid, ps, j);
                let m_ph = cell_mean(ph, j);
                let m_ps = cell_mean(ps, j);
                let msq_ph = 0.5 * (ph[j] * ph[j] + ph[j + 1] * ph[j + 1]);
                let msq_ps = 0.5 * (ps[j] * ps[j] + ps[j + 1] * ps[j + 1]);
                let m_cross = 0.5 * (ph[j] * ps[j] + ph[j + 1] * ps[j + 1]);
                rhs += mu
                    * (((nn + 3.0) * msq_ph + (nn - 1.0) * msq_ps
                        - 2.0 * delta * (nn + 1.0) * m_cross)
                        / (rho * rho)
                        + 2.0 * delta * (m_ph * dps - dph * m_ps) / rho);
            }
            rhs *= nn - 1.0;
            Ok(math::abs(lhs - rhs))
        }
        (IdentityKind::A0Dec, IdentityInput::ComplexTrack { re, im }) => {
            check_same_grid(grid, &[re, im])?;
            let f = p.f();
            let n_pts = grid.len();
            let mut u = Vec::with_capacity(n_pts);
            let mut v = Vec::with_capacity(n_pts);
            for i in 0..n_pts {
                u.push(f[i] * re.values()[i]);
                v.push(f[i] * im.values()[i]);
            }
            let lhs = eval_a0(
                p,
                &RadialFunction::new(grid, u)?,
                &RadialFunction::new(grid, v)?,
            )?;
            let mut rhs = 0.0;
            for j in 0..grid.n_cells() {
                let mu = grid.cell_mass()[j];
                let ff = f[j] * f[j + 1];
                let dre = cell_delta(grid, re.values(), j);
                let dim = cell_delta(grid, im.values(), j);
                rhs += mu * ff * (dre * dre + dim * dim);
            }
            for (i, &w) in grid.weights().iter().enumerate() {
                let x = re.values()[i];
                rhs += w * 2.0 * f[i] * f[i] * f[i] * f[i] * x * x;
            }
            Ok(math::abs(lhs - rhs))
        }
        (IdentityKind::A1Dec, IdentityInput::HardyPair { zeta, eta }) => {
            check_same_grid(grid, &[zeta, eta])?;
            let pair = substituted_pair(p, zeta.values(), eta.values());
            let lhs = eval_a1(p, &pair)?;
            let pieces = bn_pieces(p, zeta.values(), eta.values());
            let rhs = 2.0 * (pieces.i_qq + pieces.i_pp + pieces.g_t);
            Ok(math::abs(lhs - rhs))
        }
        _ => Err(Error::Parameter(
            "input shape does not match the requested identity".into(),
        )),
    }
}
