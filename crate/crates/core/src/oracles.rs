//! Independent brute-force references: residue-calculus splits and
//! factorizations of rational functions, the singular-integral fractional
//! Laplacian, and dense truncated half-line solves.

use crate::error::{Error, Result};
use crate::fourier::{plan, signed_index};
use crate::special::{endpoint_weighted_rule, gamma_real, gauss_legendre};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// scale * prod (xi - z) / prod (xi - p).
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFunction {
    pub zeros: Vec<C64>,
    pub poles: Vec<C64>,
    pub scale: C64,
}

impl RationalFunction {
    pub fn new(zeros: Vec<C64>, poles: Vec<C64>, scale: C64) -> Result<Self> {
        if let Some(p) = poles.iter().find(|p| p.im.abs() < 1e-6) {
            return Err(Error::PoleOnAxis(format!("{p}")));
        }
        Ok(Self { zeros, poles, scale })
    }

    pub fn eval(&self, xi: C64) -> C64 {
        let num: C64 = self.zeros.iter().map(|z| xi - z).product();
        let den: C64 = self.poles.iter().map(|p| xi - p).product();
        self.scale * num / den
    }
}

/// sum residue / (xi - pole) over simple poles.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialFractions {
    pub terms: Vec<(C64, C64)>,
}

impl PartialFractions {
    pub fn eval(&self, xi: C64) -> C64 {
        self.terms.iter().map(|(r, p)| r / (xi - p)).sum()
    }
}

/// Partial fractions split into the plus part (poles in the upper half-plane,
/// holomorphic below) and the minus part.
pub fn rational_split(r: &RationalFunction) -> Result<(PartialFractions, PartialFractions)> {
    if r.zeros.len() >= r.poles.len() {
        return Err(Error::ConfigInvalid("rational split needs deg numerator < deg denominator".into()));
    }
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (i, &p) in r.poles.iter().enumerate() {
        if p.im.abs() < 1e-6 {
            return Err(Error::PoleOnAxis(format!("{p}")));
        }
        let mut res = r.scale;
        for z in &r.zeros {
            res *= p - z;
        }
        for (j, q) in r.poles.iter().enumerate() {
            if j != i {
                let d = p - q;
                if d.norm() < 1e-12 {
                    return Err(Error::ConfigInvalid("repeated poles are not supported".into()));
                }
                res /= d;
            }
        }
        if p.im > 0.0 {
            plus.push((res, p));
        } else {
            minus.push((res, p));
        }
    }
    Ok((PartialFractions { terms: plus }, PartialFractions { terms: minus }))
}

/// r = r- r+ with r+ collecting the upper half-plane zeros and poles (so r+ is
/// holomorphic and nonvanishing below and tends to 1).
pub fn rational_factorize(r: &RationalFunction) -> Result<(RationalFunction, RationalFunction)> {
    if let Some(z) = r.zeros.iter().find(|z| z.im.abs() < 1e-12) {
        return Err(Error::NotElliptic(z.im.abs()));
    }
    let up = |v: &Vec<C64>| -> (Vec<C64>, Vec<C64>) { v.iter().partition(|z| z.im > 0.0) };
    let (zu, zl) = up(&r.zeros);
    let (pu, pl) = up(&r.poles);
    if zu.len() != pu.len() {
        return Err(Error::NonzeroWinding(zu.len() as i64 - pu.len() as i64));
    }
    let one = C64::new(1.0, 0.0);
    Ok((
        RationalFunction { zeros: zu, poles: pu, scale: one },
        RationalFunction { zeros: zl, poles: pl, scale: r.scale },
    ))
}

/// c_{n,a} = 4^a Gamma(n/2 + a) / (pi^{n/2} |Gamma(-a)|), the constant making the
/// singular integral the multiplier |xi|^{2a}.
pub fn frac_lap_constant(n: usize, a: f64) -> f64 {
    let nf = n as f64;
    4f64.powf(a) * gamma_real(0.5 * nf + a) / (PI.powf(0.5 * nf) * gamma_real(-a).abs())
}

/// Unit directions and weights on the half sphere (one of each pair +-w).
fn half_sphere(n: usize, m: usize) -> Vec<(Vec<f64>, f64)> {
    match n {
        1 => vec![(vec![1.0], 1.0)],
        2 => (0..m)
            .map(|k| {
                let t = PI * (k as f64 + 0.5) / m as f64;
                (vec![t.cos(), t.sin()], PI / m as f64)
            })
            .collect(),
        3 => {
            let (z, wz) = gauss_legendre(m);
            let mut out = Vec::new();
            for (zi, wi) in z.iter().zip(&wz) {
                let s = (1.0 - zi * zi).sqrt();
                for k in 0..m {
                    let t = PI * (k as f64 + 0.5) / m as f64;
                    out.push((vec![s * t.cos(), s * t.sin(), *zi], wi * PI / m as f64));
                }
            }
            out
        }
        _ => panic!("dimension {n} not supported"),
    }
}

fn frac_lap_at(a: f64, u: &dyn Fn(&[f64]) -> f64, x: &[f64], m: usize, reach: f64) -> f64 {
    let n = x.len();
    let ux = u(x);
    let second_difference = |r: f64, w: &[f64]| {
        let p: Vec<f64> = x.iter().zip(w).map(|(xi, wi)| xi + r * wi).collect();
        let q: Vec<f64> = x.iter().zip(w).map(|(xi, wi)| xi - r * wi).collect();
        2.0 * ux - u(&p) - u(&q)
    };
    let r0 = 0.5f64.min(reach);
    let (near_r, near_w) = endpoint_weighted_rule(m, 1.0 - 2.0 * a, r0);
    let (gl, glw) = gauss_legendre(m);
    // geometric panels on [r0, reach]
    let panels = ((reach / r0).ln() / 2f64.ln()).ceil().max(1.0) as usize;
    let ratio = (reach / r0).powf(1.0 / panels as f64);
    let mut total = 0.0;
    for (w, ww) in half_sphere(n, m) {
        let mut s = 0.0;
        for (r, wr) in near_r.iter().zip(&near_w) {
            s += wr * second_difference(*r, &w) / (r * r);
        }
        let mut lo = r0;
        for _ in 0..panels {
            let hi = lo * ratio;
            for (t, wt) in gl.iter().zip(&glw) {
                let r = lo + 0.5 * (hi - lo) * (1.0 + t);
                s += 0.5 * (hi - lo) * wt * second_difference(r, &w) * r.powf(-1.0 - 2.0 * a);
            }
            lo = hi;
        }
        s += 2.0 * ux * reach.powf(-2.0 * a) / (2.0 * a);
        total += ww * s;
    }
    // the half sphere counts each +-w pair once; the symmetric difference
    // already covers both, so the full-sphere factor 1/2 cancels
    frac_lap_constant(n, a) * total
}

/// (-Delta)^a u at the given points by the principal-value singular integral
/// c_{n,a}/2 int (2u(x) - u(x+z) - u(x-z)) / |z|^{n+2a} dz in polar form, with
/// an endpoint-weighted rule near z = 0 and the tail beyond `reach` taken with
/// u(x +- z) = 0. Orders are doubled until the value settles.
pub fn frac_lap_dense(a: f64, u: &dyn Fn(&[f64]) -> f64, points: &[Vec<f64>], reach: f64) -> Result<Vec<f64>> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::ConfigInvalid(format!("order a = {a} outside (0, 1)")));
    }
    points
        .iter()
        .map(|x| {
            let mut prev = frac_lap_at(a, u, x, 16, reach);
            for m in [32, 64, 128] {
                let next = frac_lap_at(a, u, x, m, reach);
                if (next - prev).abs() <= 1e-11 * next.abs().max(1.0) {
                    return Ok(next);
                }
                prev = next;
            }
            Err(Error::QuadratureFailure(format!("no convergence at {x:?}")))
        })
        .collect()
}

/// Solution of the truncated dense system sum_l k_{j-l} u_l = f_j (x_j = jh,
/// j < M) for r+ Op(slice) e+ on the half-line. The discrete kernel is the
/// inverse FFT of the slice sampled on a periodic window of 4M points.
#[derive(Clone, Debug)]
pub struct DenseSolve {
    pub u: Vec<C64>,
    /// min |U_ii| / max |U_ii| of the LU factor, a crude conditioning report
    pub pivot_ratio: f64,
}

pub fn dense_halfline_solve(slice: impl Fn(f64) -> C64, f: &[C64], h: f64) -> Result<DenseSolve> {
    let m = f.len();
    if m == 0 || m > 4096 {
        return Err(Error::ConfigInvalid(format!("dense size {m} outside 1..=4096")));
    }
    let p = 4 * m;
    let mut kernel: Vec<C64> = (0..p).map(|k| slice(2.0 * PI * signed_index(k, p) as f64 / (p as f64 * h))).collect();
    plan(p, true).process(&mut kernel);
    kernel.iter_mut().for_each(|v| *v /= p as f64);
    let a = DMatrix::from_fn(m, m, |j, l| kernel[(j as i64 - l as i64).rem_euclid(p as i64) as usize]);
    let lu = a.lu();
    let diag: Vec<f64> = (0..m).map(|i| lu.u()[(i, i)].norm()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let pivot_ratio = if max > 0.0 { min / max } else { 0.0 };
    if pivot_ratio < 1e-14 {
        return Err(Error::SingularMatrix(pivot_ratio));
    }
    let b = nalgebra::DVector::from_column_slice(f);
    let x = lu.solve(&b).ok_or(Error::SingularMatrix(pivot_ratio))?;
    Ok(DenseSolve { u: x.iter().copied().collect(), pivot_ratio })
}

/// Dense solves on [0, x_max) with M and 2M points, combined by Richardson
/// extrapolation of the given order at the coarse nodes x_j = j x_max / M.
pub fn dense_halfline_richardson(
    slice: impl Fn(f64) -> C64 + Copy,
    f: impl Fn(f64) -> C64,
    x_max: f64,
    m: usize,
    order: f64,
) -> Result<(Vec<f64>, Vec<C64>)> {
    let h = x_max / m as f64;
    let coarse: Vec<C64> = (0..m).map(|j| f(j as f64 * h)).collect();
    let fine: Vec<C64> = (0..2 * m).map(|j| f(j as f64 * h / 2.0)).collect();
    let uc = dense_halfline_solve(slice, &coarse, h)?.u;
    let uf = dense_halfline_solve(slice, &fine, h / 2.0)?.u;
    let c = 2f64.powf(order) - 1.0;
    let xs = (0..m).map(|j| j as f64 * h).collect();
    let u = (0..m).map(|j| uf[2 * j] + (uf[2 * j] - uc[j]) / c).collect();
    Ok((xs, u))
}

/// Relative L2 distance of two sample sets restricted to x in [lo, hi].
pub fn windowed_relative_error(xs: &[f64], a: &[C64], b: &[C64], lo: f64, hi: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for ((x, u), v) in xs.iter().zip(a).zip(b) {
        if *x >= lo && *x <= hi {
            num += (u - v).norm_sqr();
            den += v.norm_sqr();
        }
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

/// Exact half-line solution of r+ Op((kappa^2 + xi^2)^{1/2}) e+ u = e^{-kappa x}
/// for kappa = 1: u = 2^{-1/2} x^{1/2} e^{-x} / Gamma(3/2).
pub fn half_laplacian_mode_solution(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    0.5f64.sqrt() * x.sqrt() * (-x).exp() / gamma_real(1.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn split_of_lorentzian() {
        let r = RationalFunction::new(vec![], vec![c(0.0, 1.0), c(0.0, -1.0)], c(1.0, 0.0)).unwrap();
        let (p, m) = rational_split(&r).unwrap();
        for xi in [-3.0, 0.0, 0.7, 5.0] {
            let z = c(xi, 0.0);
            assert!((p.eval(z) - c(0.0, -0.5) / (z - c(0.0, 1.0))).norm() < 1e-15);
            assert!((m.eval(z) - c(0.0, 0.5) / (z + c(0.0, 1.0))).norm() < 1e-15);
            assert!((p.eval(z) + m.eval(z) - r.eval(z)).norm() < 1e-14);
        }
        let single = RationalFunction::new(vec![], vec![c(0.0, -2.0)], c(1.0, 0.0)).unwrap();
        let (p, m) = rational_split(&single).unwrap();
        assert!(p.terms.is_empty() && m.terms.len() == 1);
        assert!(RationalFunction::new(vec![], vec![c(1.0, 0.0)], c(1.0, 0.0)).is_err());
    }

    #[test]
    fn factorization_of_ratio() {
        let r = RationalFunction::new(vec![c(0.0, 2.0), c(0.0, -2.0)], vec![c(0.0, 1.0), c(0.0, -1.0)], c(1.0, 0.0))
            .unwrap();
        let (rp, rm) = rational_factorize(&r).unwrap();
        for xi in [-2.0, 0.0, 1.3] {
            let z = c(xi, 0.0);
            assert!((rp.eval(z) - (z - c(0.0, 2.0)) / (z - c(0.0, 1.0))).norm() < 1e-15);
            assert!((rp.eval(z) * rm.eval(z) - r.eval(z)).norm() < 1e-14);
        }
        let k = RationalFunction::new(vec![], vec![], c(3.0, 1.0)).unwrap();
        let (rp, rm) = rational_factorize(&k).unwrap();
        assert_eq!(rp.eval(c(0.3, 0.0)), c(1.0, 0.0));
        assert_eq!(rm.eval(c(0.3, 0.0)), c(3.0, 1.0));
        let wind = RationalFunction::new(vec![c(0.0, 2.0), c(0.0, 3.0)], vec![c(0.0, 1.0), c(0.0, -1.0)], c(1.0, 0.0))
            .unwrap();
        assert!(matches!(rational_factorize(&wind), Err(Error::NonzeroWinding(1))));
    }

    #[test]
    fn constant_calibration_one_dimension() {
        // (-d^2)^{1/2} e^{-x^2} at 0 equals 2/sqrt(pi)
        let v = frac_lap_dense(0.5, &|x: &[f64]| (-x[0] * x[0]).exp(), &[vec![0.0]], 12.0).unwrap();
        assert!((v[0] - 2.0 / PI.sqrt()).abs() < 1e-6, "{}", v[0]);
    }

    #[test]
    fn constant_calibration_two_dimensions() {
        // (-Delta)^a e^{-|x|^2} at 0 = (1/4pi) int |xi|^{2a} pi e^{-|xi|^2/4} dxi = 4^a Gamma(1+a)
        for a in [0.25, 0.5, 0.75] {
            let v =
                frac_lap_dense(a, &|x: &[f64]| (-x[0] * x[0] - x[1] * x[1]).exp(), &[vec![0.0, 0.0]], 12.0).unwrap();
            let exact = 4f64.powf(a) * gamma_real(1.0 + a);
            assert!((v[0] - exact).abs() < 1e-6 * exact, "a = {a}: {} vs {exact}", v[0]);
        }
    }

    #[test]
    fn dense_identity_slice() {
        let f: Vec<C64> = (0..64).map(|j| c((-(j as f64) * 0.1).exp(), 0.0)).collect();
        let s = dense_halfline_solve(|_| c(1.0, 0.0), &f, 0.1).unwrap();
        assert!(s.u.iter().zip(&f).all(|(a, b)| (a - b).norm() < 1e-13));
    }
}
