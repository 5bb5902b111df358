//! Discretized half-space machinery: periodic-box grids, grid functions,
//! symbol application, restriction and extension, order reduction, Poisson and
//! potential operators, and mode-wise transmission fields.

use crate::error::{Error, Result};
use crate::fourier::{fft_shape, fftn, signed_index, unravel};
use crate::halfline::{
    alternating_sum, eval_field, eval_field_derivative, project_samples, project_symbol, weighted_trace_coeffs,
};
use crate::special::{japanese, rgamma};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Default number of Laguerre coefficients per transverse mode.
pub const DEFAULT_COEFFS: usize = 512;

/// Periodic box [-L, L)^n with N points per axis; x_n = 0 is a grid plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfSpaceGrid {
    pub n: usize,
    pub box_half_length: f64,
    pub points: usize,
}

impl HalfSpaceGrid {
    pub fn new(n: usize, box_half_length: f64, points: usize) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return Err(Error::GridMismatch(format!("dimension {n} not in 2..=3")));
        }
        if !(points.is_power_of_two() && (8..=4096).contains(&points)) {
            return Err(Error::GridMismatch(format!("N = {points} must be a power of two in 8..=4096")));
        }
        if !(box_half_length.is_finite() && box_half_length > 0.0) {
            return Err(Error::GridMismatch(format!("invalid box half-length {box_half_length}")));
        }
        Ok(Self { n, box_half_length, points })
    }

    pub fn h(&self) -> f64 {
        2.0 * self.box_half_length / self.points as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 - (self.points / 2) as f64) * self.h()
    }

    pub fn frequency(&self, k: usize) -> f64 {
        signed_index(k, self.points) as f64 * PI / self.box_half_length
    }

    pub fn total(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    pub fn normal_len(&self) -> usize {
        self.points / 2
    }

    pub fn transverse_count(&self) -> usize {
        self.points.pow(self.n as u32 - 1)
    }

    pub fn transverse_shape(&self) -> Vec<usize> {
        vec![self.points; self.n - 1]
    }

    /// xi' of the transverse mode with flat index t.
    pub fn transverse_xi(&self, t: usize) -> Vec<f64> {
        unravel(t, self.n - 1, self.points).into_iter().map(|k| self.frequency(k)).collect()
    }

    pub fn transverse_x(&self, t: usize) -> Vec<f64> {
        unravel(t, self.n - 1, self.points).into_iter().map(|i| self.coordinate(i)).collect()
    }

    pub fn kappa(&self, t: usize) -> f64 {
        japanese(&self.transverse_xi(t))
    }

    pub fn dual_point(&self, idx: usize) -> Vec<f64> {
        unravel(idx, self.n, self.points).into_iter().map(|k| self.frequency(k)).collect()
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        unravel(idx, self.n, self.points).into_iter().map(|i| self.coordinate(i)).collect()
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportTag {
    Whole,
    PlusSupported,
    Restricted,
}

impl SupportTag {
    fn code(self) -> u8 {
        match self {
            SupportTag::Whole => 0,
            SupportTag::PlusSupported => 1,
            SupportTag::Restricted => 2,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(SupportTag::Whole),
            1 => Ok(SupportTag::PlusSupported),
            2 => Ok(SupportTag::Restricted),
            _ => Err(Error::Parse(format!("unknown support tag {c}"))),
        }
    }
}

/// Samples on the box. Restricted functions hold only the x_n >= 0 half, laid
/// out as [transverse..., normal] with normal index j <-> x_n = jh.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: HalfSpaceGrid,
    pub values: Vec<C64>,
    pub support_tag: SupportTag,
}

const MAGIC: &[u8; 4] = b"PTCG";

impl GridFunction {
    pub fn zeros(grid: HalfSpaceGrid, tag: SupportTag) -> Self {
        let len =
            if tag == SupportTag::Restricted { grid.transverse_count() * grid.normal_len() } else { grid.total() };
        Self { grid, values: vec![ZERO; len], support_tag: tag }
    }

    pub fn from_fn(grid: HalfSpaceGrid, tag: SupportTag, f: impl Fn(&[f64]) -> C64 + Sync) -> Self {
        let mut g = Self::zeros(grid, tag);
        let nl = grid.normal_len();
        let n = grid.points;
        g.values.par_iter_mut().enumerate().for_each(|(idx, v)| {
            let x = if tag == SupportTag::Restricted {
                let mut x = grid.transverse_x(idx / nl);
                x.push((idx % nl) as f64 * grid.h());
                x
            } else {
                grid.point(idx)
            };
            let outside = tag == SupportTag::PlusSupported && idx % n < n / 2;
            *v = if outside { ZERO } else { f(&x) };
        });
        g
    }

    /// Discrete L2 norm (h^n sum |u|^2)^{1/2} over the stored samples.
    pub fn norm(&self) -> f64 {
        (self.grid.h().powi(self.grid.n as i32) * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Discrete inner product h^n sum u conj(w) over the whole box (restricted
    /// arguments are extended by zero).
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.grid.check_same(&other.grid)?;
        let a = self.to_full();
        let b = other.to_full();
        Ok(a.values.iter().zip(&b.values).map(|(x, y)| x * y.conj()).sum::<C64>()
            * self.grid.h().powi(self.grid.n as i32))
    }

    fn to_full(&self) -> Self {
        if self.support_tag == SupportTag::Restricted {
            extend(self)
        } else {
            self.clone()
        }
    }

    /// Largest modulus at x_n < 0 relative to the overall maximum.
    pub fn negative_side_leakage(&self) -> f64 {
        if self.support_tag == SupportTag::Restricted {
            return 0.0;
        }
        let n = self.grid.points;
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        self.values.iter().enumerate().filter(|(i, _)| i % n < n / 2).map(|(_, v)| v.norm()).fold(0.0, f64::max) / m
    }

    /// Per-mode profiles along x_n >= 0: `out[t * (N/2) + j]` is the amplitude of
    /// transverse mode t at x_n = jh, with u = sum_t amplitude e^{i xi'_t x'}.
    pub fn transverse_modes(&self) -> Result<Vec<C64>> {
        let r = match self.support_tag {
            SupportTag::Restricted => self.clone(),
            _ => restrict(self),
        };
        let mut data = r.values;
        let mut shape = self.grid.transverse_shape();
        shape.push(self.grid.normal_len());
        for axis in 0..self.grid.n - 1 {
            fft_shape(&mut data, &shape, axis, false);
        }
        let s = 1.0 / self.grid.transverse_count() as f64;
        data.iter_mut().for_each(|v| *v *= s);
        Ok(data)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 16 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&1u32.to_le_bytes());
        out.extend_from_slice(&(self.grid.n as u32).to_le_bytes());
        out.extend_from_slice(&(self.grid.points as u32).to_le_bytes());
        out.extend_from_slice(&self.grid.box_half_length.to_le_bytes());
        out.push(self.support_tag.code());
        out.extend_from_slice(&[0u8; 3]);
        out.extend_from_slice(&(self.values.len() as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
        out
    }

    /// Decode the little-endian binary format: magic `PTCG`, version, n, N, L,
    /// tag, sample count, then complex128 samples.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        const HEADER: usize = 4 + 4 + 4 + 4 + 8 + 4 + 8;
        if bytes.len() < HEADER || &bytes[..4] != MAGIC {
            return Err(Error::Parse("missing grid-function header".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        if u32_at(4) != 1 {
            return Err(Error::Parse(format!("unsupported version {}", u32_at(4))));
        }
        let n = u32_at(8) as usize;
        let points = u32_at(12) as usize;
        let l = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let tag = SupportTag::from_code(bytes[24])?;
        let count = u64::from_le_bytes(bytes[28..36].try_into().unwrap());
        let grid = HalfSpaceGrid::new(n, l, points).map_err(|e| Error::Parse(e.to_string()))?;
        let expected = Self::zeros_len(&grid, tag);
        if count != expected as u64 || bytes.len() != HEADER + 16 * expected {
            return Err(Error::Parse(format!("sample count {count} does not match grid ({expected})")));
        }
        let values = bytes[HEADER..]
            .chunks_exact(16)
            .map(|c| {
                C64::new(f64::from_le_bytes(c[..8].try_into().unwrap()), f64::from_le_bytes(c[8..].try_into().unwrap()))
            })
            .collect();
        Ok(Self { grid, values, support_tag: tag })
    }

    fn zeros_len(grid: &HalfSpaceGrid, tag: SupportTag) -> usize {
        if tag == SupportTag::Restricted {
            grid.transverse_count() * grid.normal_len()
        } else {
            grid.total()
        }
    }

    /// CSV slice along x_n at the transverse sample nearest to `x_prime`.
    pub fn normal_slice_csv(&self, x_prime: &[f64]) -> String {
        let g = &self.grid;
        let idx: usize = x_prime.iter().fold(0, |acc, &x| {
            let i = ((x / g.h()).round() as i64 + (g.points / 2) as i64).clamp(0, g.points as i64 - 1) as usize;
            acc * g.points + i
        });
        let mut s = String::from("x_n,re,im\n");
        match self.support_tag {
            SupportTag::Restricted => {
                for j in 0..g.normal_len() {
                    let v = self.values[idx * g.normal_len() + j];
                    s.push_str(&format!("{},{},{}\n", j as f64 * g.h(), v.re, v.im));
                }
            }
            _ => {
                for i in 0..g.points {
                    let v = self.values[idx * g.points + i];
                    s.push_str(&format!("{},{},{}\n", g.coordinate(i), v.re, v.im));
                }
            }
        }
        s
    }
}

/// Function on the boundary R^{n-1}, sampled on the transverse grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFunction {
    pub grid: HalfSpaceGrid,
    pub values: Vec<C64>,
}

impl BoundaryFunction {
    pub fn from_fn(grid: HalfSpaceGrid, f: impl Fn(&[f64]) -> C64) -> Self {
        Self { grid, values: (0..grid.transverse_count()).map(|t| f(&grid.transverse_x(t))).collect() }
    }

    /// Mode amplitudes phi_hat_t with phi = sum_t phi_hat_t e^{i xi'_t x'}.
    pub fn modes(&self) -> Vec<C64> {
        let mut d = self.values.clone();
        let shape = self.grid.transverse_shape();
        for axis in 0..shape.len() {
            fft_shape(&mut d, &shape, axis, false);
        }
        let s = 1.0 / self.grid.transverse_count() as f64;
        d.iter_mut().for_each(|v| *v *= s);
        d
    }

    pub fn from_modes(grid: HalfSpaceGrid, modes: &[C64]) -> Self {
        let mut d = modes.to_vec();
        let shape = grid.transverse_shape();
        for axis in 0..shape.len() {
            fft_shape(&mut d, &shape, axis, true);
        }
        let s = grid.transverse_count() as f64;
        d.iter_mut().for_each(|v| *v *= s);
        Self { grid, values: d }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// Op(sym) u = F^{-1}(sym F u) on the periodic box.
pub fn apply_symbol(sym: &(dyn Fn(&[f64]) -> C64 + Sync), u: &GridFunction) -> Result<GridFunction> {
    if u.support_tag == SupportTag::Restricted {
        return Err(Error::SupportMismatch("apply_symbol needs a whole or plus-supported function".into()));
    }
    let g = u.grid;
    let mut d = u.values.clone();
    fftn(&mut d, g.n, g.points, false);
    d.par_iter_mut().enumerate().for_each(|(i, v)| *v *= sym(&g.dual_point(i)));
    fftn(&mut d, g.n, g.points, true);
    Ok(GridFunction { grid: g, values: d, support_tag: SupportTag::Whole })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    RPlus,
    EPlus,
}

fn restrict(u: &GridFunction) -> GridFunction {
    let g = u.grid;
    let (n, nl) = (g.points, g.normal_len());
    let values = (0..g.transverse_count() * nl).map(|i| u.values[(i / nl) * n + nl + i % nl]).collect();
    GridFunction { grid: g, values, support_tag: SupportTag::Restricted }
}

fn extend(u: &GridFunction) -> GridFunction {
    let g = u.grid;
    let (n, nl) = (g.points, g.normal_len());
    let mut values = vec![ZERO; g.total()];
    for (i, v) in u.values.iter().enumerate() {
        values[(i / nl) * n + nl + i % nl] = *v;
    }
    GridFunction { grid: g, values, support_tag: SupportTag::PlusSupported }
}

pub fn restrict_extend(u: &GridFunction, direction: Direction) -> Result<GridFunction> {
    match (direction, u.support_tag) {
        (Direction::RPlus, SupportTag::Restricted) => Err(Error::SupportMismatch("r+ of a restricted function".into())),
        (Direction::RPlus, _) => Ok(restrict(u)),
        (Direction::EPlus, SupportTag::Restricted) => Ok(extend(u)),
        (Direction::EPlus, _) => Err(Error::SupportMismatch("e+ needs a restricted function".into())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Plus,
    MinusTruncated,
}

/// Xi_+^t u, or Xi_{-,+}^t u = r+ Xi_-^t e+ u, via (<xi'> +- i xi_n)^t on the dual grid.
pub fn order_reduce(t: C64, side: Side, u: &GridFunction) -> Result<GridFunction> {
    let sign = match (side, u.support_tag) {
        (Side::Plus, SupportTag::Restricted) => {
            return Err(Error::SupportMismatch("Xi_+ needs a plus-supported or whole function".into()))
        }
        (Side::MinusTruncated, SupportTag::Restricted) => -1.0,
        (Side::MinusTruncated, _) => return Err(Error::SupportMismatch("Xi_-,+ needs a restricted function".into())),
        (Side::Plus, _) => 1.0,
    };
    let input = if sign < 0.0 { extend(u) } else { u.clone() };
    let sym = move |xi: &[f64]| {
        let n = xi.len();
        C64::new(japanese(&xi[..n - 1]), sign * xi[n - 1]).powc(t)
    };
    let out = apply_symbol(&sym, &input)?;
    Ok(match (side, u.support_tag) {
        (Side::MinusTruncated, _) => restrict(&out),
        (_, SupportTag::PlusSupported) => GridFunction { support_tag: SupportTag::PlusSupported, ..out },
        _ => out,
    })
}

/// K0 phi = sum_t phi_hat_t e^{i xi'_t x'} e^{-<xi'_t> x_n} for x_n >= 0.
pub fn poisson_k0(phi: &BoundaryFunction) -> GridFunction {
    let g = phi.grid;
    let modes = phi.modes();
    let nl = g.normal_len();
    let mut r = GridFunction::zeros(g, SupportTag::Restricted);
    r.values.par_chunks_mut(nl).enumerate().for_each(|(t, row)| {
        let k = g.kappa(t);
        for (j, v) in row.iter_mut().enumerate() {
            *v = modes[t] * (-k * j as f64 * g.h()).exp();
        }
    });
    extend(&from_modes(&r))
}

/// Inverse transverse transform of a restricted mode array (layout as
/// [`GridFunction::transverse_modes`]).
fn from_modes(modes: &GridFunction) -> GridFunction {
    let g = modes.grid;
    let mut data = modes.values.clone();
    let mut shape = g.transverse_shape();
    shape.push(g.normal_len());
    for axis in 0..g.n - 1 {
        fft_shape(&mut data, &shape, axis, true);
    }
    let s = g.transverse_count() as f64;
    data.iter_mut().for_each(|v| *v *= s);
    GridFunction { grid: g, values: data, support_tag: SupportTag::Restricted }
}

/// Restricted function from per-mode profiles (layout as [`GridFunction::transverse_modes`]).
pub fn restricted_from_modes(grid: HalfSpaceGrid, modes: Vec<C64>) -> GridFunction {
    from_modes(&GridFunction { grid, values: modes, support_tag: SupportTag::Restricted })
}

/// K_g phi = r+ F^{-1}[g(xi) phi_hat(xi')]: per mode, the inverse transform in
/// xi_n on the dual grid.
pub fn potential_op(g: &(dyn Fn(&[f64]) -> C64 + Sync), phi: &BoundaryFunction) -> Result<GridFunction> {
    let grid = phi.grid;
    let n = grid.points;
    // summability: decay exponent of |g| along xi_n at xi' = 0
    let probe = |x: f64| {
        let mut xi = vec![0.0; grid.n];
        xi[grid.n - 1] = x;
        g(&xi).norm()
    };
    let top = grid.frequency(n / 2 - 1);
    let (a, b) = (probe(top / 4.0), probe(top));
    if a > 1e-300 {
        let slope = (b / a).ln() / 4f64.ln();
        if slope >= -0.5 {
            return Err(Error::NotSummable(slope));
        }
    }
    let modes = phi.modes();
    let nl = grid.normal_len();
    let mut out = vec![ZERO; grid.transverse_count() * nl];
    out.par_chunks_mut(nl).enumerate().for_each(|(t, row)| {
        let mut xi = grid.transverse_xi(t);
        xi.push(0.0);
        let mut line: Vec<C64> = (0..n)
            .map(|k| {
                xi[grid.n - 1] = grid.frequency(k);
                g(&xi)
            })
            .collect();
        crate::fourier::plan(n, true).process(&mut line);
        // (1/2pi) sum_k G_k e^{i xi_k x} (pi/L); x_n = jh lies at FFT index j
        let s = modes[t] / (2.0 * grid.box_half_length);
        for (j, v) in row.iter_mut().enumerate() {
            *v = line[j] * s;
        }
    });
    Ok(restricted_from_modes(grid, out))
}

/// Discrete H^{t - Re mu} norm of e+ r+ Xi_+^mu u (weight <xi>^{t - Re mu}).
pub fn mu_norm(u: &GridFunction, mu: C64, t: f64) -> Result<f64> {
    let g = u.grid;
    let reduced = order_reduce(mu, Side::Plus, &u.to_full())?;
    let mut d = extend(&restrict(&reduced)).values;
    fftn(&mut d, g.n, g.points, false);
    let s = t - mu.re;
    let sum: f64 = d.par_iter().enumerate().map(|(i, v)| japanese(&g.dual_point(i)).powf(2.0 * s) * v.norm_sqr()).sum();
    Ok((sum * g.h().powi(g.n as i32) / g.total() as f64).sqrt())
}

/// One term Xi_+^{-mu} e+ v of a transmission field: per transverse mode, plus
/// coefficients of v in the Laguerre basis with scale <xi'>.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldPart {
    pub mu: C64,
    /// coefficients per transverse mode (empty = zero mode)
    pub coeffs: Vec<Vec<C64>>,
}

/// Sum of parts Xi_+^{-mu_j} e+ v_j, exact per transverse mode.
#[derive(Clone, Debug, PartialEq)]
pub struct TransmissionField {
    pub grid: HalfSpaceGrid,
    pub parts: Vec<FieldPart>,
}

impl TransmissionField {
    pub fn single(grid: HalfSpaceGrid, mu: C64, coeffs: Vec<Vec<C64>>) -> Self {
        Self { grid, parts: vec![FieldPart { mu, coeffs }] }
    }

    /// Xi_+^{-mu} e+ (phi(x') h(x_n)) from a boundary factor and the transform
    /// of the normal profile h (x_n >= 0), projected with `len` coefficients.
    pub fn separable(
        grid: HalfSpaceGrid,
        mu: C64,
        transverse: &BoundaryFunction,
        profile_hat: impl Fn(f64, f64) -> C64 + Sync,
        len: usize,
    ) -> Self {
        let modes = transverse.modes();
        let cutoff = 1e-15 * modes.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let coeffs = (0..grid.transverse_count())
            .into_par_iter()
            .map(|t| {
                if modes[t].norm() <= cutoff {
                    return Vec::new();
                }
                let k = grid.kappa(t);
                project_symbol(|x| profile_hat(k, x), k, 4 * len, len).into_iter().map(|c| c * modes[t]).collect()
            })
            .collect();
        Self::single(grid, mu, coeffs)
    }

    pub fn eval_mode(&self, t: usize, x: f64) -> C64 {
        let k = self.grid.kappa(t);
        self.parts.iter().filter(|p| !p.coeffs[t].is_empty()).map(|p| eval_field(&p.coeffs[t], p.mu, k, x)).sum()
    }

    pub fn derivative_mode(&self, t: usize, x: f64) -> C64 {
        let k = self.grid.kappa(t);
        self.parts
            .iter()
            .filter(|p| !p.coeffs[t].is_empty())
            .map(|p| eval_field_derivative(&p.coeffs[t], p.mu, k, x))
            .sum()
    }

    fn sample(&self, f: impl Fn(usize, f64) -> C64 + Sync) -> GridFunction {
        let g = self.grid;
        let nl = g.normal_len();
        let mut modes = vec![ZERO; g.transverse_count() * nl];
        modes.par_chunks_mut(nl).enumerate().for_each(|(t, row)| {
            if self.parts.iter().all(|p| p.coeffs[t].is_empty()) {
                return;
            }
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(t, j as f64 * g.h());
            }
        });
        extend(&restricted_from_modes(g, modes))
    }

    /// Plus-supported samples. At x_n = 0 the value is the limit for parts with
    /// mu = 0 and 0 otherwise (the sample is excluded from fits when Re mu <= 0).
    pub fn to_grid(&self) -> GridFunction {
        self.sample(|t, x| self.eval_mode(t, x))
    }

    /// Samples of d/dx_n by term-wise differentiation (x_n = 0 set to 0).
    pub fn derivative_to_grid(&self) -> GridFunction {
        self.sample(|t, x| if x > 0.0 { self.derivative_mode(t, x) } else { ZERO })
    }

    /// Xi_+^t acts exactly by lowering every exponent by t.
    pub fn order_reduce(&self, t: C64) -> Self {
        Self {
            grid: self.grid,
            parts: self.parts.iter().map(|p| FieldPart { mu: p.mu - t, coeffs: p.coeffs.clone() }).collect(),
        }
    }

    /// Multiply mode t by w(kappa_t).
    pub fn scale_modes(&self, w: impl Fn(f64) -> C64) -> Self {
        let parts = self
            .parts
            .iter()
            .map(|p| FieldPart {
                mu: p.mu,
                coeffs: p
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(t, c)| {
                        let s = w(self.grid.kappa(t));
                        c.iter().map(|v| v * s).collect()
                    })
                    .collect(),
            })
            .collect();
        Self { grid: self.grid, parts }
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let mut parts = self.parts.clone();
        parts.extend(other.parts.iter().cloned());
        Ok(Self { grid: self.grid, parts })
    }
}

/// u = Xi_+^{-mu} e+ v, v restricted and smooth, with `len` coefficients per mode.
pub fn transmission_function(mu: C64, v: &GridFunction, len: usize) -> Result<TransmissionField> {
    if v.support_tag != SupportTag::Restricted {
        return Err(Error::SupportMismatch("transmission_function needs restricted data".into()));
    }
    let g = v.grid;
    let modes = v.transverse_modes()?;
    Ok(TransmissionField::single(g, mu, project_modes(&g, &modes, len)))
}

/// Per-mode Laguerre coefficients of restricted mode profiles (Filon projection).
pub fn project_modes(g: &HalfSpaceGrid, modes: &[C64], len: usize) -> Vec<Vec<C64>> {
    let nl = g.normal_len();
    let global = modes.iter().map(|v| v.norm()).fold(0.0, f64::max);
    modes
        .par_chunks(nl)
        .enumerate()
        .map(|(t, row)| {
            let m = row.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if m <= 1e-14 * global || m == 0.0 {
                return Vec::new();
            }
            project_samples(row, g.h(), g.kappa(t), 4 * len, len)
        })
        .collect()
}

/// gamma_0(u / x_n^mu), spectral route: parts with exponent mu contribute
/// gamma_0 v / Gamma(1 + mu), parts of higher order contribute 0. Cross-checked
/// against extrapolation of u / x_n^mu toward x_n = 0; TraceUnstable beyond 5%.
pub fn weighted_trace(u: &TransmissionField, mu: C64) -> Result<BoundaryFunction> {
    let spectral = spectral_trace(u, mu)?;
    let direct = direct_weighted_trace(u, mu);
    let scale = spectral.max_abs().max(direct.max_abs());
    if scale > 0.0 {
        let gap = spectral.max_diff(&direct) / scale;
        if gap > 0.05 {
            return Err(Error::TraceUnstable(gap));
        }
    }
    Ok(spectral)
}

pub fn spectral_trace(u: &TransmissionField, mu: C64) -> Result<BoundaryFunction> {
    let g = u.grid;
    let mut modes = vec![ZERO; g.transverse_count()];
    for p in &u.parts {
        let d = p.mu - mu;
        for (t, c) in p.coeffs.iter().enumerate() {
            if c.is_empty() {
                continue;
            }
            if d.norm() < 1e-12 {
                modes[t] += weighted_trace_coeffs(c, mu);
            } else if d.re < 0.0 && alternating_sum(c).norm() > 0.0 {
                return Err(Error::TraceUnstable(f64::INFINITY));
            }
        }
    }
    Ok(BoundaryFunction::from_modes(g, &modes))
}

/// Cubic extrapolation of u / x_n^mu from x_n = j h/8, j = 1..4, per mode.
pub fn direct_weighted_trace(u: &TransmissionField, mu: C64) -> BoundaryFunction {
    let g = u.grid;
    let x0 = g.h() / 8.0;
    let modes: Vec<C64> = (0..g.transverse_count())
        .into_par_iter()
        .map(|t| {
            if u.parts.iter().all(|p| p.coeffs[t].is_empty()) {
                return ZERO;
            }
            let w: Vec<C64> = (1..=4)
                .map(|j| {
                    let x = j as f64 * x0;
                    u.eval_mode(t, x) * (-mu * x.ln()).exp()
                })
                .collect();
            // Lagrange extrapolation to 0 from nodes 1..4
            w[0] * 4.0 - w[1] * 6.0 + w[2] * 4.0 - w[3]
        })
        .collect();
    BoundaryFunction::from_modes(g, &modes)
}

/// z = r+ Xi_+^{mu-1} u, U = Xi_+^{-mu} e+ z, u1 = <D'> U, so that u = u1 + d_n U.
#[allow(non_snake_case)]
pub fn decompose_u1_dnU(u: &TransmissionField, mu: C64) -> Result<(TransmissionField, TransmissionField)> {
    for p in &u.parts {
        if (p.mu - (mu - 1.0)).norm() > 1e-12 {
            return Err(Error::MuOutOfRange(format!("part of order {} is not in the (mu-1) class", p.mu)));
        }
    }
    let big_u = u.order_reduce(C64::new(-1.0, 0.0));
    let u1 = big_u.scale_modes(|k| C64::new(k, 0.0));
    Ok((u1, big_u))
}

/// Gamma(1 + mu) gamma_0(u/x^mu) = gamma_0 v for the key-formula generator.
pub fn key_formula_trace(v_trace: C64, mu: C64) -> C64 {
    v_trace * rgamma(mu + 1.0)
}

/// Relative L2 error of the key formula on a periodic line of N points and
/// half-length L: the inverse DFT of the aliased symbol
/// sum_m (kappa + i(xi_k + m 2pi/h))^{-mu-1} against samples of the periodized
/// x^mu e^{-kappa x} / Gamma(mu+1). By Poisson summation both sides agree exactly,
/// so the error measures the transform pair itself.
pub fn key_formula_kernel_error(mu: C64, kappa: f64, points: usize, half_length: f64) -> Result<f64> {
    if mu.re <= 0.0 {
        return Err(Error::MuOutOfRange(format!("kernel check needs Re mu > 0, got {mu}")));
    }
    if !(kappa > 0.0) || points < 8 || !(half_length > 0.0) {
        return Err(Error::GridMismatch(format!("kappa = {kappa}, N = {points}, L = {half_length}")));
    }
    const TERMS: i64 = 512;
    let h = 2.0 * half_length / points as f64;
    let period = 2.0 * PI / h;
    let s = -(mu + 1.0);
    let aliased: Vec<C64> = (0..points)
        .into_par_iter()
        .map(|k| {
            let xi = signed_index(k, points) as f64 * PI / half_length;
            let base = C64::new(kappa, xi);
            let mut acc: C64 = (-TERMS..=TERMS).map(|m| (base + I * (m as f64 * period)).powc(s)).sum();
            // midpoint-rule tails of the lattice sum
            let edge = I * ((TERMS as f64 + 0.5) * period);
            acc += ((base + edge).powc(-mu) - (base - edge).powc(-mu)) / (mu * I * period);
            acc
        })
        .collect();
    let mut u = aliased;
    fft_shape(&mut u, &[points], 0, true);
    let rg = rgamma(mu + 1.0);
    let (mut num, mut den) = (0.0, 0.0);
    for (j, uj) in u.iter().enumerate() {
        let mut exact = ZERO;
        let mut x = j as f64 * h;
        while x == 0.0 || (-kappa * x).exp() * x.powf(mu.re) > 1e-300 {
            if x > 0.0 {
                exact += (mu * x.ln()).exp() * (-kappa * x).exp() * rg;
            }
            x += 2.0 * half_length;
            if kappa * x > 745.0 {
                break;
            }
        }
        num += (uj / h - exact).norm_sqr();
        den += exact.norm_sqr();
    }
    Ok((num / den).sqrt())
}
