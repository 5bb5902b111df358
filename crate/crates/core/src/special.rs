//! Special functions and small numerical kernels: complex gamma, binomial
//! series, normalized Laguerre series, Gauss-Jacobi rules, least squares.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for complex argument (Lanczos, reflection for Re z < 1/2).
pub fn gamma(z: C64) -> C64 {
    if z.re < 0.5 {
        let s = (z * PI).sin();
        return C64::new(PI, 0.0) / (s * gamma(C64::new(1.0, 0.0) - z));
    }
    let z = z - 1.0;
    let mut x = C64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
}

/// 1/Gamma(z), zero at the poles z = 0, -1, -2, ...
pub fn rgamma(z: C64) -> C64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return C64::new(0.0, 0.0);
    }
    C64::new(1.0, 0.0) / gamma(z)
}

pub fn gamma_real(x: f64) -> f64 {
    gamma(C64::new(x, 0.0)).re
}

/// Coefficients of (1+z)^t = sum_l binom(t, l) z^l, l < len.
pub fn binomial_series(t: C64, len: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(len);
    let mut c = C64::new(1.0, 0.0);
    for l in 0..len {
        out.push(c);
        c = c * (t - l as f64) / (l as f64 + 1.0);
    }
    out
}

/// Principal power x^mu for x > 0 and complex mu.
pub fn xpow(x: f64, mu: C64) -> C64 {
    if x <= 0.0 {
        return C64::new(0.0, 0.0);
    }
    (mu * x.ln()).exp()
}

/// sum_n c_n lambda_n^(alpha)(y), where
/// lambda_n^(alpha)(y) = n!/Gamma(n+alpha+1) L_n^(alpha)(y) e^{-y/2}.
pub fn laguerre_series(c: &[C64], alpha: C64, y: f64) -> C64 {
    laguerre_series_scaled(c, alpha, y, C64::new(0.0, 0.0))
}

/// exp(log_prefactor) * sum_n c_n lambda_n^(alpha)(y), with the exponential
/// weight and the prefactor folded in at the end so that large y neither
/// underflows nor overflows.
pub fn laguerre_series_scaled(c: &[C64], alpha: C64, y: f64, log_prefactor: C64) -> C64 {
    const BIG: f64 = 1e150;
    if c.is_empty() {
        return C64::new(0.0, 0.0);
    }
    let mut log_scale = 0.0;
    let mut prev = rgamma(alpha + 1.0);
    let mut acc = c[0] * prev;
    if c.len() > 1 {
        let mut cur = rgamma(alpha + 2.0) * (alpha + 1.0 - y);
        acc += c[1] * cur;
        for (n, &cn) in c.iter().enumerate().skip(2) {
            let m = (n - 1) as f64;
            let next = ((alpha + (2.0 * m + 1.0 - y)) * cur - prev * m) / (alpha + m + 1.0);
            prev = cur;
            cur = next;
            if cur.norm() > BIG {
                prev /= BIG;
                cur /= BIG;
                acc /= BIG;
                log_scale += BIG.ln();
            }
            acc += cn * cur;
        }
    }
    acc * (log_prefactor + (log_scale - 0.5 * y)).exp()
}

/// sum_n c_n n lambda_{n-1}^(alpha+1)(y), the term-wise derivative companion
/// of [`laguerre_series`].
pub fn laguerre_series_shifted(c: &[C64], alpha: C64, y: f64) -> C64 {
    if c.len() < 2 {
        return C64::new(0.0, 0.0);
    }
    let w: Vec<C64> = c.iter().enumerate().skip(1).map(|(n, &v)| v * n as f64).collect();
    laguerre_series(&w, alpha + 1.0, y)
}

/// Gauss-Jacobi rule on [-1, 1] for the weight (1-x)^a (1+x)^b (Golub-Welsch).
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && a > -1.0 && b > -1.0);
    let mut j = DMatrix::<f64>::zeros(n, n);
    let ab = a + b;
    for i in 0..n {
        let fi = i as f64;
        let diag =
            if i == 0 { (b - a) / (ab + 2.0) } else { (b * b - a * a) / ((2.0 * fi + ab) * (2.0 * fi + ab + 2.0)) };
        j[(i, i)] = diag;
        if i + 1 < n {
            let k = fi + 1.0;
            let num = 4.0 * k * (k + a) * (k + b) * (k + ab);
            let den = (2.0 * k + ab).powi(2) * (2.0 * k + ab + 1.0) * (2.0 * k + ab - 1.0);
            let off = (num / den).sqrt();
            j[(i, i + 1)] = off;
            j[(i + 1, i)] = off;
        }
    }
    let mu0 = 2f64.powf(ab + 1.0) * gamma_real(a + 1.0) * gamma_real(b + 1.0) / gamma_real(ab + 2.0);
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> =
        (0..n).map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    pairs.into_iter().unzip()
}

pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_jacobi(n, 0.0, 0.0)
}

/// Nodes and weights for int_0^c x^beta f(x) dx with f smooth.
pub fn endpoint_weighted_rule(n: usize, beta: f64, c: f64) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_jacobi(n, 0.0, beta);
    let s = (0.5 * c).powf(beta + 1.0);
    (t.iter().map(|&t| 0.5 * c * (1.0 + t)).collect(), w.iter().map(|&w| w * s).collect())
}

/// Least-squares solution of `rows * coef = y`.
pub fn lstsq(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let m = rows.len();
    if m == 0 {
        return None;
    }
    let k = rows[0].len();
    if m < k {
        return None;
    }
    let a = DMatrix::from_fn(m, k, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    svd.solve(&b, 1e-13).ok().map(|x| x.iter().copied().collect())
}

/// Quasi-uniform unit vectors: uniform circle for n = 2, Fibonacci lattice for
/// n = 3, seeded Gaussian directions otherwise.
pub fn sphere_points(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * PI * (k as f64 + 0.5) / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
            (0..count)
                .map(|_| loop {
                    let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if r > 1e-3 && r <= 1.0 {
                        break v.iter().map(|x| x / r).collect();
                    }
                })
                .collect()
        }
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn japanese(v: &[f64]) -> f64 {
    (1.0 + v.iter().map(|x| x * x).sum::<f64>()).sqrt()
}
