//! Half-line engine in the tangent-mapped Laguerre basis.
//!
//! On the staggered grid theta_j = -pi + (j + 1/2) 2pi/N, xi_j = sigma tan(theta_j / 2)
//! the functions rho_k(xi) = e^{ik theta}/(sigma - i xi) form a basis of decaying
//! symbols. rho_k with k < 0 are plus functions: rho_{-(m+1)} is the transform of
//! (-1)^m l_m(x), l_m = e^{-sigma x} L_m(2 sigma x), supported in x >= 0.
//! Bounded symbols act on plus coefficient vectors as Toeplitz matrices, plus
//! symbols as lower-triangular and minus symbols as upper-triangular ones.

use crate::fourier::plan;
use crate::special::{binomial_series, laguerre_series_scaled, laguerre_series_shifted, rgamma};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn theta(j: usize, n: usize) -> f64 {
    -PI + (j as f64 + 0.5) * 2.0 * PI / n as f64
}

pub fn theta_grid(n: usize, sigma: f64) -> Vec<f64> {
    (0..n).map(|j| sigma * (0.5 * theta(j, n)).tan()).collect()
}

/// a_k = (1/N) sum_j v_j e^{-ik theta_j}, returned in FFT order (k mod N).
pub fn dft_theta(values: &[C64]) -> Vec<C64> {
    let n = values.len();
    let mut buf = values.to_vec();
    plan(n, false).process(&mut buf);
    for (k, b) in buf.iter_mut().enumerate() {
        let ks = crate::fourier::signed_index(k, n) as f64;
        let sign = if (ks as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        *b *= C64::from_polar(sign / n as f64, -PI * ks / n as f64);
    }
    buf
}

/// Inverse of [`dft_theta`].
pub fn idft_theta(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len();
    let mut buf: Vec<C64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let ks = crate::fourier::signed_index(k, n) as f64;
            let sign = if (ks as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            a * C64::from_polar(sign, PI * ks / n as f64)
        })
        .collect();
    plan(n, true).process(&mut buf);
    buf
}

pub fn signed_coeff(a: &[C64], k: i64) -> C64 {
    let n = a.len() as i64;
    if k < -n / 2 || k >= n / 2 {
        return ZERO;
    }
    a[k.rem_euclid(n) as usize]
}

/// Basis coefficients a_k of a decaying symbol sampled on the theta grid
/// (values at xi_j), i.e. b = sum_k a_k rho_k.
pub fn rho_coefficients(values: &[C64], sigma: f64) -> Vec<C64> {
    let n = values.len();
    let weighted: Vec<C64> = values
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let xi = sigma * (0.5 * theta(j, n)).tan();
            v * C64::new(sigma, -xi)
        })
        .collect();
    dft_theta(&weighted)
}

/// Samples of sum_k a_k rho_k on the theta grid.
pub fn rho_synthesis(coeffs: &[C64], sigma: f64) -> Vec<C64> {
    let n = coeffs.len();
    idft_theta(coeffs)
        .into_iter()
        .enumerate()
        .map(|(j, f)| {
            let xi = sigma * (0.5 * theta(j, n)).tan();
            f / C64::new(sigma, -xi)
        })
        .collect()
}

/// Plus coefficients c_m (coefficient of rho_{-(m+1)}), m < len.
pub fn plus_part(coeffs: &[C64], len: usize) -> Vec<C64> {
    (0..len).map(|m| signed_coeff(coeffs, -(m as i64) - 1)).collect()
}

/// Split the basis coefficients into plus (k < 0) and minus (k >= 0) parts.
pub fn split_coefficients(coeffs: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let n = coeffs.len();
    let mut plus = vec![ZERO; n];
    let mut minus = vec![ZERO; n];
    for k in 0..n {
        if crate::fourier::signed_index(k, n) < 0 {
            plus[k] = coeffs[k];
        } else {
            minus[k] = coeffs[k];
        }
    }
    (plus, minus)
}

/// Truncated Toeplitz matrix T_{m',m} = d_{m-m'} of a bounded symbol acting on
/// plus coefficient vectors of length `size`.
#[derive(Clone, Debug)]
pub struct Toeplitz {
    /// d_0, d_{-1}, d_{-2}, ... (below the diagonal)
    pub lower: Vec<C64>,
    /// d_0, d_1, d_2, ... (above the diagonal)
    pub upper: Vec<C64>,
}

impl Toeplitz {
    pub fn size(&self) -> usize {
        self.lower.len()
    }

    /// Toeplitz matrix of a symbol from its theta-grid samples (length >= 2 size).
    pub fn from_samples(samples: &[C64], size: usize) -> Self {
        let d = dft_theta(samples);
        Self::from_theta_coefficients(&d, size)
    }

    pub fn from_theta_coefficients(d: &[C64], size: usize) -> Self {
        Self {
            lower: (0..size).map(|l| signed_coeff(d, -(l as i64))).collect(),
            upper: (0..size).map(|l| signed_coeff(d, l as i64)).collect(),
        }
    }

    pub fn lower_triangular(lower: Vec<C64>) -> Self {
        let mut upper = vec![ZERO; lower.len()];
        upper[0] = lower[0];
        Self { lower, upper }
    }

    pub fn upper_triangular(upper: Vec<C64>) -> Self {
        let mut lower = vec![ZERO; upper.len()];
        lower[0] = upper[0];
        Self { lower, upper }
    }

    pub fn identity(size: usize) -> Self {
        let mut e = vec![ZERO; size];
        e[0] = C64::new(1.0, 0.0);
        Self::lower_triangular(e)
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        if col >= row {
            self.upper[col - row]
        } else {
            self.lower[row - col]
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let k = self.size();
        let mut out = vec![ZERO; k];
        for (r, o) in out.iter_mut().enumerate() {
            let mut s = ZERO;
            for (c, &vc) in v.iter().enumerate().take(k) {
                if vc != ZERO {
                    s += self.get(r, c) * vc;
                }
            }
            *o = s;
        }
        out
    }

    /// Conjugate transpose, the Toeplitz matrix of the conjugate symbol.
    pub fn adjoint(&self) -> Self {
        Self {
            lower: self.upper.iter().map(|z| z.conj()).collect(),
            upper: self.lower.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Forward substitution for a lower-triangular matrix.
    pub fn solve_lower(&self, rhs: &[C64]) -> Vec<C64> {
        let k = self.size();
        let mut x = vec![ZERO; k];
        for r in 0..k {
            let mut s = rhs.get(r).copied().unwrap_or(ZERO);
            for (c, xc) in x.iter().enumerate().take(r) {
                s -= self.lower[r - c] * xc;
            }
            x[r] = s / self.lower[0];
        }
        x
    }

    /// Back substitution for an upper-triangular matrix.
    pub fn solve_upper(&self, rhs: &[C64]) -> Vec<C64> {
        let k = self.size();
        let mut x = vec![ZERO; k];
        for r in (0..k).rev() {
            let mut s = rhs.get(r).copied().unwrap_or(ZERO);
            for (c, xc) in x.iter().enumerate().skip(r + 1) {
                s -= self.upper[c - r] * xc;
            }
            x[r] = s / self.upper[0];
        }
        x
    }
}

/// (kappa + i xi)^t = (2 kappa)^t (1 + e^{-i theta})^{-t}: lower triangular.
pub fn xi_plus(t: C64, kappa: f64, size: usize) -> Toeplitz {
    let s = (t * (2.0 * kappa).ln()).exp();
    Toeplitz::lower_triangular(binomial_series(-t, size).into_iter().map(|b| b * s).collect())
}

/// (kappa - i xi)^t = (2 kappa)^t (1 + e^{i theta})^{-t}: upper triangular.
pub fn xi_minus(t: C64, kappa: f64, size: usize) -> Toeplitz {
    let s = (t * (2.0 * kappa).ln()).exp();
    Toeplitz::upper_triangular(binomial_series(-t, size).into_iter().map(|b| b * s).collect())
}

/// Value at x > 0 of Xi_+^{-mu} e+ v where v has plus coefficients `v`:
/// x^mu sum_m (-1)^m v_m lambda_m^(mu)(2 kappa x). For mu = 0 this is v itself.
pub fn eval_field(v: &[C64], mu: C64, kappa: f64, x: f64) -> C64 {
    if x <= 0.0 {
        return if mu == ZERO { alternating_sum(v) } else { ZERO };
    }
    let c = alternate(v);
    laguerre_series_scaled(&c, mu, 2.0 * kappa * x, mu * x.ln())
}

/// x-derivative of [`eval_field`] by term-wise differentiation of the
/// Laguerre expansion.
pub fn eval_field_derivative(v: &[C64], mu: C64, kappa: f64, x: f64) -> C64 {
    assert!(x > 0.0);
    let c = alternate(v);
    let y = 2.0 * kappa * x;
    let base = laguerre_series_scaled(&c, mu, y, C64::new(0.0, 0.0));
    let shifted = laguerre_series_shifted(&c, mu, y);
    let xm = (mu * x.ln()).exp();
    mu * xm / x * base - (shifted * 2.0 + base) * kappa * xm
}

/// gamma_0(u / x^mu) = sum_m (-1)^m v_m / Gamma(1 + mu).
pub fn weighted_trace_coeffs(v: &[C64], mu: C64) -> C64 {
    alternating_sum(v) * rgamma(mu + 1.0)
}

pub fn alternating_sum(v: &[C64]) -> C64 {
    v.iter().enumerate().map(|(m, &c)| if m % 2 == 0 { c } else { -c }).sum()
}

fn alternate(v: &[C64]) -> Vec<C64> {
    v.iter().enumerate().map(|(m, &c)| if m % 2 == 0 { c } else { -c }).collect()
}

/// int_0^1 s^k e^{zs} ds for k = 0..=3.
fn moments(z: C64) -> [C64; 4] {
    let mut e = [ZERO; 4];
    if z.norm() < 2.0 {
        // series sum_j z^j / (j! (k + j + 1))
        let mut term = C64::new(1.0, 0.0);
        for j in 0..40 {
            for (k, ek) in e.iter_mut().enumerate() {
                *ek += term / (k + j + 1) as f64;
            }
            term = term * z / (j + 1) as f64;
            if term.norm() < 1e-18 {
                break;
            }
        }
    } else {
        let ez = z.exp();
        e[0] = (ez - 1.0) / z;
        for k in 1..4 {
            e[k] = (ez - e[k - 1] * k as f64) / z;
        }
    }
    e
}

/// Monomial coefficients in s of the cubic through (t_i, y_i), t_i = offset + i.
fn cubic_coefficients(y: [C64; 4], offset: f64) -> [C64; 4] {
    let t: [f64; 4] = [offset, offset + 1.0, offset + 2.0, offset + 3.0];
    let mut out = [ZERO; 4];
    for i in 0..4 {
        // Lagrange basis polynomial for node i expanded in monomials
        let mut poly = [1.0, 0.0, 0.0, 0.0];
        let mut denom = 1.0;
        let mut deg = 0;
        for j in 0..4 {
            if j == i {
                continue;
            }
            denom *= t[i] - t[j];
            let mut next = [0.0; 4];
            for d in 0..=deg {
                next[d + 1] += poly[d];
                next[d] -= t[j] * poly[d];
            }
            poly = next;
            deg += 1;
        }
        for d in 0..4 {
            out[d] += y[i] * (poly[d] / denom);
        }
    }
    out
}

/// Filon-type evaluation of int_0^{(M-1)h} e^{-i xi x} f(x) dx from samples
/// f(jh), exact for piecewise cubics (local Lagrange on four nodes).
pub fn filon_transform(samples: &[C64], h: f64, xis: &[f64]) -> Vec<C64> {
    let m = samples.len();
    assert!(m >= 4, "need at least four samples");
    let cells: Vec<[C64; 4]> = (0..m - 1)
        .map(|i| {
            let (start, offset) = if i == 0 {
                (0, 0.0)
            } else if i + 2 >= m {
                (m - 4, -((i - (m - 4)) as f64))
            } else {
                (i - 1, -1.0)
            };
            let y = [samples[start], samples[start + 1], samples[start + 2], samples[start + 3]];
            cubic_coefficients(y, offset)
        })
        .collect();
    xis.iter()
        .map(|&xi| {
            let z = C64::new(0.0, -xi * h);
            let e = moments(z);
            let step = z.exp();
            let mut phase = C64::new(1.0, 0.0);
            let mut acc = ZERO;
            for c in &cells {
                let local: C64 = (0..4).map(|k| c[k] * e[k]).sum();
                acc += phase * local;
                phase *= step;
            }
            acc * h
        })
        .collect()
}

/// Plus coefficients (length `len`) of a function on [0, (M-1)h] sampled at
/// x = jh, using a theta grid of `n_theta` points and scale `sigma`.
pub fn project_samples(samples: &[C64], h: f64, sigma: f64, n_theta: usize, len: usize) -> Vec<C64> {
    let xis = theta_grid(n_theta, sigma);
    let hat = filon_transform(samples, h, &xis);
    plus_part(&rho_coefficients(&hat, sigma), len)
}

/// Plus coefficients of a symbol given in closed form (decaying at infinity).
pub fn project_symbol(f: impl Fn(f64) -> C64, sigma: f64, n_theta: usize, len: usize) -> Vec<C64> {
    let vals: Vec<C64> = theta_grid(n_theta, sigma).into_iter().map(f).collect();
    plus_part(&rho_coefficients(&vals, sigma), len)
}

/// Coefficients of x^k e^{-kappa x} (x >= 0) in the (-1)^m l_m basis.
pub fn monomial_exponential(k: usize, kappa: f64, len: usize) -> Vec<C64> {
    // k!/(kappa + i xi)^{k+1} = k! (2 kappa)^{-k} sum_l binom(k, l) rho_{-(l+1)}
    let scale = (1..=k).map(|j| j as f64).product::<f64>() / (2.0 * kappa).powi(k as i32);
    binomial_series(C64::new(k as f64, 0.0), len).into_iter().map(|b| b * scale).collect()
}
