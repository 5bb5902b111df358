//! Homogeneous and nonhomogeneous Dirichlet problems on the half-space.
//!
//! Per transverse mode the reduced symbol q = (kappa - i xi)^{-mu'} p_hat (kappa + i xi)^{-mu}
//! is factorized as q- q+ and the inverse
//! u = Xi_+^{-mu} e+ (Q+)^{-1} (Q-)^{-1} Xi_{-,+}^{-mu'} f
//! is applied in the Laguerre coefficient space, where the minus factors are
//! upper and the plus factors lower triangular.

use crate::error::{Error, Result};
use crate::halfline::{plus_part, rho_coefficients, xi_minus, Toeplitz};
use crate::halfspace_ops::{
    apply_symbol, project_modes, restrict_extend, spectral_trace, weighted_trace, BoundaryFunction, Direction,
    FieldPart, GridFunction, HalfSpaceGrid, SupportTag, TransmissionField, DEFAULT_COEFFS,
};
use crate::special::{gamma, lstsq};
use crate::symbols::{hatted_symbol, HomogeneousSymbol, SymbolMap, TransmissionData};
use crate::wiener_hopf::{product_factorize, LineSamples};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Laguerre coefficients per transverse mode
    pub coeffs: usize,
    /// modes with amplitude below this fraction of the largest are skipped
    pub skip_relative: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { coeffs: DEFAULT_COEFFS, skip_relative: 1e-14 }
    }
}

/// The factorized operator r+ P_hat on one transverse mode.
#[derive(Clone, Debug)]
pub struct ModeOperator {
    pub kappa: f64,
    pub mu: C64,
    pub mu_prime: C64,
    pub s0: C64,
    q_plus: Toeplitz,
    q_minus: Toeplitz,
    q_full: Toeplitz,
    xi_minus_up: Toeplitz,
    xi_minus_down: Toeplitz,
    g_plus: Vec<C64>,
    f_plus: Vec<C64>,
    pub reconstruction_error: f64,
}

impl ModeOperator {
    /// `slice(xi_n)` = p_hat(xi', xi_n) for the mode with <xi'> = kappa.
    pub fn new(slice: impl Fn(f64) -> C64, kappa: f64, td: &TransmissionData, len: usize) -> Result<Self> {
        let (mu, mup, s0) = (td.mu, td.mu_prime, td.s0);
        let q = LineSamples::from_fn(
            4 * len,
            (kappa * kappa - 1.0).max(0.0).sqrt(),
            kappa,
            |x| C64::new(kappa, -x).powc(-mup) * slice(x) * C64::new(kappa, x).powc(-mu),
            s0,
        );
        let factors = product_factorize(&q, s0)?;
        let reconstruction_error = factors.reconstruction_error(&q);
        let q_plus = Toeplitz::lower_triangular(Toeplitz::from_samples(&factors.q_plus.values, len).lower);
        let q_minus = Toeplitz::upper_triangular(Toeplitz::from_samples(&factors.q_minus.values, len).upper);
        let q_full = Toeplitz::from_samples(&q.values, len);
        let g: Vec<C64> = factors.q_plus.values.iter().map(|v| v - 1.0).collect();
        let g_plus = plus_part(&rho_coefficients(&g, kappa), len);
        let fq: Vec<C64> = q.values.iter().map(|v| v - s0).collect();
        let f_plus = plus_part(&rho_coefficients(&fq, kappa), len);
        Ok(Self {
            kappa,
            mu,
            mu_prime: mup,
            s0,
            q_plus,
            q_minus,
            q_full,
            xi_minus_up: xi_minus(mup, kappa, len),
            xi_minus_down: xi_minus(-mup, kappa, len),
            g_plus,
            f_plus,
            reconstruction_error,
        })
    }

    pub fn len(&self) -> usize {
        self.q_plus.size()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coefficients v with u = Xi_+^{-mu} e+ v solving r+ P_hat u = f.
    pub fn solve(&self, f: &[C64]) -> Vec<C64> {
        let g = self.xi_minus_down.apply(f);
        let w = self.q_minus.solve_upper(&g);
        self.q_plus.solve_lower(&w)
    }

    /// r+ P_hat Xi_+^{-mu} e+ v through the factors.
    pub fn apply_factorized(&self, v: &[C64]) -> Vec<C64> {
        self.xi_minus_up.apply(&self.q_minus.apply(&self.q_plus.apply(v)))
    }

    /// r+ P_hat Xi_+^{-mu} e+ v through the unfactorized Toeplitz matrix of q.
    pub fn apply_direct(&self, v: &[C64]) -> Vec<C64> {
        self.xi_minus_up.apply(&self.q_full.apply(v))
    }

    /// r+ P_hat Xi_+^{-mu+1} e+ (e^{-kappa x_n}), via q- g+ (factorized route).
    pub fn lift_image(&self) -> Vec<C64> {
        self.xi_minus_up.apply(&self.q_minus.apply(&self.g_plus))
    }

    /// Same through the plus part of q - s0.
    pub fn lift_image_direct(&self) -> Vec<C64> {
        self.xi_minus_up.apply(&self.f_plus)
    }
}

/// p_hat along xi_n for transverse frequency xi'.
fn slice_of(ph: &SymbolMap, xi_prime: Vec<f64>) -> impl Fn(f64) -> C64 + '_ {
    move |x| {
        let mut xi = xi_prime.clone();
        xi.push(x);
        ph(&xi)
    }
}

#[derive(Clone, Debug)]
pub struct DirichletSolution {
    pub u: GridFunction,
    pub field: TransmissionField,
    /// relative residual of r+ P_hat u - f through the factorized operator
    pub residual: f64,
    /// same through the unfactorized Toeplitz matrix of q
    pub residual_direct: f64,
    /// same through grid FFT application of p_hat on x_n >= 8h (discretization-limited)
    pub residual_grid: f64,
    pub mu_used: C64,
    pub exponent_fit: f64,
    pub weighted_trace: BoundaryFunction,
    /// max |gamma_0(u / x_n^{mu-1}) - phi| / max |phi| by direct extrapolation
    pub boundary_condition_error: Option<f64>,
}

struct ModeResult {
    t: usize,
    v: Vec<C64>,
    lift: C64,
    res_fact: Vec<C64>,
    res_direct: Vec<C64>,
    /// |f|^2 + |r+ P_hat w|^2 + |Gamma(mu) phi_hat|^2, the residual scale
    scale2: f64,
}

fn weighted_norm2(kappa: f64, v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>() / (2.0 * kappa)
}

fn solve_modes(
    p: &HomogeneousSymbol,
    td: &TransmissionData,
    grid: HalfSpaceGrid,
    f_coeffs: &[Vec<C64>],
    phi_modes: Option<&[C64]>,
    opts: SolveOptions,
) -> Result<Vec<ModeResult>> {
    if !td.strongly_elliptic {
        return Err(Error::NotElliptic(td.ellipticity_constant));
    }
    let ph = hatted_symbol(p);
    let len = opts.coeffs;
    let phi_max = phi_modes.map_or(0.0, |m| m.iter().map(|v| v.norm()).fold(0.0, f64::max));
    let gmu = gamma(td.mu);
    let active: Vec<usize> = (0..grid.transverse_count())
        .filter(|&t| !f_coeffs[t].is_empty() || phi_modes.is_some_and(|m| m[t].norm() > opts.skip_relative * phi_max))
        .collect();
    active
        .par_iter()
        .map(|&t| {
            let kappa = grid.kappa(t);
            let op = ModeOperator::new(slice_of(&ph, grid.transverse_xi(t)), kappa, td, len)?;
            let mut rhs = vec![ZERO; len];
            for (r, c) in rhs.iter_mut().zip(&f_coeffs[t]) {
                *r = *c;
            }
            let lift = phi_modes.map_or(ZERO, |m| m[t] * gmu);
            let (mut data, mut lift_f, mut lift_d) = (rhs.clone(), vec![ZERO; len], vec![ZERO; len]);
            if lift != ZERO {
                lift_f = op.lift_image().into_iter().map(|c| c * lift).collect();
                lift_d = op.lift_image_direct().into_iter().map(|c| c * lift).collect();
                data.iter_mut().zip(&lift_f).for_each(|(d, l)| *d -= l);
            }
            let v = op.solve(&data);
            let res_fact = op.apply_factorized(&v).iter().zip(&lift_f).zip(&rhs).map(|((a, l), f)| a + l - f).collect();
            let res_direct = op.apply_direct(&v).iter().zip(&lift_d).zip(&rhs).map(|((a, l), f)| a + l - f).collect();
            let scale2 = weighted_norm2(kappa, &rhs) + weighted_norm2(kappa, &lift_f) + weighted_norm2(kappa, &[lift]);
            Ok(ModeResult { t, v, lift, res_fact, res_direct, scale2 })
        })
        .collect()
}

fn assemble(grid: HalfSpaceGrid, td: &TransmissionData, modes: &[ModeResult]) -> (TransmissionField, f64, f64) {
    let count = grid.transverse_count();
    let mut v = vec![Vec::new(); count];
    let mut w = vec![Vec::new(); count];
    let (mut rf, mut rd, mut fn2) = (0.0, 0.0, 0.0);
    for m in modes {
        let k = grid.kappa(m.t);
        rf += weighted_norm2(k, &m.res_fact);
        rd += weighted_norm2(k, &m.res_direct);
        fn2 += m.scale2;
        v[m.t] = m.v.clone();
        if m.lift != ZERO {
            w[m.t] = vec![m.lift];
        }
    }
    let mut parts = vec![FieldPart { mu: td.mu, coeffs: v }];
    if w.iter().any(|c| !c.is_empty()) {
        parts.push(FieldPart { mu: td.mu - 1.0, coeffs: w });
    }
    let scale = if fn2 > 0.0 { fn2.sqrt() } else { 1.0 };
    (TransmissionField { grid, parts }, rf.sqrt() / scale, rd.sqrt() / scale)
}

/// Relative residual of the grid route on x_n >= 8h; the boundary layer where
/// Op(p_hat) of the x_n^mu singularity suffers Gibbs oscillation is excluded.
fn grid_residual(p: &HomogeneousSymbol, u: &GridFunction, f: &GridFunction) -> Result<f64> {
    let ph = hatted_symbol(p);
    let pu = restrict_extend(&apply_symbol(&*ph, u)?, Direction::RPlus)?;
    let nl = f.grid.normal_len();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, (a, b)) in pu.values.iter().zip(&f.values).enumerate() {
        if i % nl >= 8 {
            num += (a - b).norm_sqr();
            den += b.norm_sqr();
        }
    }
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

/// Solve r+ P_hat u = f with supp u in the closed half-space.
pub fn solve_homogeneous(
    p: &HomogeneousSymbol,
    td: &TransmissionData,
    f: &GridFunction,
    opts: SolveOptions,
) -> Result<DirichletSolution> {
    if f.support_tag != SupportTag::Restricted {
        return Err(Error::SupportMismatch("Dirichlet data must be restricted".into()));
    }
    let grid = f.grid;
    let f_coeffs = project_modes(&grid, &f.transverse_modes()?, opts.coeffs);
    let modes = solve_modes(p, td, grid, &f_coeffs, None, opts)?;
    let (field, residual, residual_direct) = assemble(grid, td, &modes);
    if residual > 1e-4 {
        return Err(Error::ResidualTooLarge(residual));
    }
    let u = field.to_grid();
    let exponent_fit = if modes.is_empty() { 0.0 } else { boundary_exponent(&u, default_window(&grid))? };
    let weighted_trace = weighted_trace(&field, td.mu)?;
    Ok(DirichletSolution {
        residual_grid: grid_residual(p, &u, f)?,
        u,
        field,
        residual,
        residual_direct,
        mu_used: td.mu,
        exponent_fit,
        weighted_trace,
        boundary_condition_error: None,
    })
}

/// Solve r+ P_hat u = f, gamma_0(u / x_n^{mu-1}) = phi through the lift
/// w = Gamma(mu) Xi_+^{-mu+1} e+ K_0 phi.
pub fn solve_nonhomogeneous(
    p: &HomogeneousSymbol,
    td: &TransmissionData,
    f: &GridFunction,
    phi: &BoundaryFunction,
    opts: SolveOptions,
) -> Result<DirichletSolution> {
    if td.mu.re <= 0.0 {
        return Err(Error::MuNotPositive(td.mu.re));
    }
    if f.support_tag != SupportTag::Restricted {
        return Err(Error::SupportMismatch("Dirichlet data must be restricted".into()));
    }
    let grid = f.grid;
    if grid != phi.grid {
        return Err(Error::GridMismatch("data and boundary value live on different grids".into()));
    }
    let f_coeffs = project_modes(&grid, &f.transverse_modes()?, opts.coeffs);
    let phi_modes = phi.modes();
    let modes = solve_modes(p, td, grid, &f_coeffs, Some(&phi_modes), opts)?;
    let (field, residual, residual_direct) = assemble(grid, td, &modes);
    if residual > 1e-4 {
        return Err(Error::ResidualTooLarge(residual));
    }
    let u = field.to_grid();
    let exponent_fit = if modes.is_empty() { 0.0 } else { boundary_exponent(&u, default_window(&grid))? };
    let lowered = td.mu - 1.0;
    let trace = weighted_trace(&field, lowered)?;
    let direct = crate::halfspace_ops::direct_weighted_trace(&field, lowered);
    let scale = phi.max_abs();
    let bc = if scale > 0.0 { direct.max_diff(phi) / scale } else { direct.max_abs() };
    Ok(DirichletSolution {
        residual_grid: grid_residual(p, &u, f)?,
        u,
        field,
        residual,
        residual_direct,
        mu_used: td.mu,
        exponent_fit,
        weighted_trace: trace,
        boundary_condition_error: Some(bc),
    })
}

/// The lift w = Gamma(mu) Xi_+^{-mu+1} e+ K_0 phi as a transmission field.
pub fn poisson_lift(phi: &BoundaryFunction, mu: C64) -> TransmissionField {
    let gmu = gamma(mu);
    let coeffs = phi.modes().into_iter().map(|m| if m == ZERO { Vec::new() } else { vec![m * gmu] }).collect();
    TransmissionField::single(phi.grid, mu - 1.0, coeffs)
}

/// gamma_0(w / x_n^{mu-1}) of the lift, by the spectral route.
pub fn lift_trace(phi: &BoundaryFunction, mu: C64) -> Result<BoundaryFunction> {
    spectral_trace(&poisson_lift(phi, mu), mu - 1.0)
}

/// Fit window [2h, 10h] for [`boundary_exponent`].
pub fn default_window(grid: &HalfSpaceGrid) -> (f64, f64) {
    (2.0 * grid.h(), 10.0 * grid.h())
}

/// Slope of log|u| against log x_n on the window, at the transverse location
/// where |u| is largest at the window start. The fit carries an intercept and
/// linear and quadratic terms in x_n absorbing the smooth factor.
pub fn boundary_exponent(u: &GridFunction, window: (f64, f64)) -> Result<f64> {
    let g = u.grid;
    let h = g.h();
    let nl = g.normal_len();
    let (stride, offset) = match u.support_tag {
        SupportTag::Restricted => (nl, 0),
        _ => (g.points, nl),
    };
    let js: Vec<usize> = (1..nl)
        .filter(|&j| {
            let x = j as f64 * h;
            x >= window.0 * (1.0 - 1e-12) && x <= window.1 * (1.0 + 1e-12)
        })
        .collect();
    if js.len() < 5 {
        return Err(Error::WindowEmpty);
    }
    let t = (0..g.transverse_count())
        .max_by(|&a, &b| {
            let va = u.values[a * stride + offset + js[0]].norm();
            let vb = u.values[b * stride + offset + js[0]].norm();
            va.total_cmp(&vb)
        })
        .unwrap();
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    for &j in &js {
        let v = u.values[t * stride + offset + j].norm();
        if v > 0.0 {
            let x = j as f64 * h;
            rows.push(vec![x.ln(), 1.0, x, x * x]);
            ys.push(v.ln());
        }
    }
    if rows.len() < 5 {
        return Err(Error::WindowEmpty);
    }
    lstsq(&rows, &ys).map(|c| c[0]).ok_or(Error::WindowEmpty)
}

/// Optional fixed-point iteration u_{k+1} = solve_P_hat(f - r+ P' u_k) toward
/// the full operator P = P_hat + P'. Returns the last solution and the relative
/// size of each update; convergence is reported, not asserted.
pub fn refine_full_operator(
    p: &HomogeneousSymbol,
    td: &TransmissionData,
    f: &GridFunction,
    iterations: usize,
    opts: SolveOptions,
) -> Result<(DirichletSolution, Vec<f64>)> {
    let ph = hatted_symbol(p);
    let pm = p.map();
    let remainder = move |xi: &[f64]| pm(xi) - ph(xi);
    let mut sol = solve_homogeneous(p, td, f, opts)?;
    let mut updates = Vec::new();
    for _ in 0..iterations {
        let pu = restrict_extend(&apply_symbol(&remainder, &sol.u)?, Direction::RPlus)?;
        let mut data = f.clone();
        data.values.iter_mut().zip(&pu.values).for_each(|(d, r)| *d -= r);
        let next = solve_homogeneous(p, td, &data, opts)?;
        let mut diff = next.u.clone();
        diff.values.iter_mut().zip(&sol.u.values).for_each(|(d, o)| *d -= o);
        updates.push(diff.norm() / next.u.norm().max(1e-300));
        sol = next;
    }
    Ok((sol, updates))
}
