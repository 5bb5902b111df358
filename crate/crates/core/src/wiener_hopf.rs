//! Plus/minus sum splits and Wiener-Hopf product factorizations of order-zero
//! symbols along one transverse frequency.

use crate::error::{Error, Result};
use crate::halfline::{rho_coefficients, rho_synthesis, split_coefficients, theta_grid};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::fmt::Write as _;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Samples of a symbol slice on the tangent-mapped grid xi_j = sigma tan(theta_j/2),
/// together with its limit at |xi_n| = infinity.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSamples {
    pub xi_prime: f64,
    pub sigma: f64,
    pub values: Vec<C64>,
    pub at_infinity: C64,
}

impl LineSamples {
    pub fn from_fn(n: usize, xi_prime: f64, sigma: f64, f: impl Fn(f64) -> C64, at_infinity: C64) -> Self {
        assert!(n.is_power_of_two() && n >= 4, "grid size must be a power of two");
        let values = theta_grid(n, sigma).into_iter().map(f).collect();
        Self { xi_prime, sigma, values, at_infinity }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn xi(&self) -> Vec<f64> {
        theta_grid(self.len(), self.sigma)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(self.at_infinity.norm(), f64::max)
    }

    fn with_values(&self, values: Vec<C64>, at_infinity: C64) -> Self {
        Self { xi_prime: self.xi_prime, sigma: self.sigma, values, at_infinity }
    }

    fn zip_map(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        self.with_values(
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            f(self.at_infinity, other.at_infinity),
        )
    }

    fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        self.with_values(self.values.iter().map(|&a| f(a)).collect(), f(self.at_infinity))
    }
}

/// Where the constant (zero-frequency-in-x, i.e. the limit at infinity) goes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ZeroModePolicy {
    #[default]
    HalfHalf,
    AllToPlus,
}

/// True when the limit at infinity exceeds a tenth of the slice maximum, so the
/// decaying part carries little of the symbol.
pub fn poor_decay(b: &LineSamples) -> bool {
    b.at_infinity.norm() > 0.1 * b.max_abs()
}

/// b = b_+ + b_-, with b_+ holomorphic in Im xi < 0 (support in x_n >= 0).
pub fn plus_minus_split(b: &LineSamples, policy: ZeroModePolicy) -> (LineSamples, LineSamples) {
    let c = b.at_infinity;
    let decaying: Vec<C64> = b.values.iter().map(|&v| v - c).collect();
    let (p, m) = split_coefficients(&rho_coefficients(&decaying, b.sigma));
    let (cp, cm) = match policy {
        ZeroModePolicy::HalfHalf => (c * 0.5, c * 0.5),
        ZeroModePolicy::AllToPlus => (c, ZERO),
    };
    let plus = rho_synthesis(&p, b.sigma).into_iter().map(|v| v + cp).collect();
    let minus = rho_synthesis(&m, b.sigma).into_iter().map(|v| v + cm).collect();
    (b.with_values(plus, cp), b.with_values(minus, cm))
}

/// f_+ + f_- = q - s0.
pub fn sum_decompose(q: &LineSamples, s0: C64) -> (LineSamples, LineSamples) {
    plus_minus_split(&q.map(|v| v - s0), ZeroModePolicy::HalfHalf)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WienerHopfFactors {
    pub q_plus: LineSamples,
    pub q_minus: LineSamples,
    pub b_plus: LineSamples,
    pub b_minus: LineSamples,
    pub f_plus: LineSamples,
    pub f_minus: LineSamples,
    pub s0: C64,
}

impl WienerHopfFactors {
    /// g+ = q+ - 1
    pub fn g_plus(&self) -> LineSamples {
        self.q_plus.map(|v| v - 1.0)
    }

    /// g- = q-/s0 - 1
    pub fn g_minus(&self) -> LineSamples {
        let s0 = self.s0;
        self.q_minus.map(|v| v / s0 - 1.0)
    }

    /// max|q - q- q+| / max|q|
    pub fn reconstruction_error(&self, q: &LineSamples) -> f64 {
        let prod = self.q_minus.zip_map(&self.q_plus, |a, b| a * b);
        let err = q.values.iter().zip(&prod.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        err / q.max_abs()
    }
}

/// Continuous logarithm of q0 = q/s0 along the closed loop theta in (-pi, pi],
/// anchored at log q0(infinity) = 0.
fn unwrapped_log(q0: &[C64], q0_inf: C64) -> Result<Vec<C64>> {
    let n = q0.len();
    let mut out = vec![ZERO; n];
    let start = q0_inf.ln();
    let mut prev_arg = start.im;
    let mut prev = q0_inf;
    let mut total = 0.0;
    let step = |z: C64, prev: &mut C64| -> Result<f64> {
        let d = (z / *prev).arg();
        if d.abs() > 0.9 * PI {
            return Err(Error::UnresolvedWinding(d.abs()));
        }
        *prev = z;
        Ok(d)
    };
    for (j, &z) in q0.iter().enumerate() {
        let d = step(z, &mut prev)?;
        total += d;
        prev_arg += d;
        out[j] = C64::new(z.norm().ln(), prev_arg);
    }
    total += step(q0_inf, &mut prev)?;
    let winding = (total / (2.0 * PI)).round() as i64;
    if winding != 0 {
        return Err(Error::NonzeroWinding(winding));
    }
    Ok(out)
}

/// q = q- q+ with q+ = exp(b+) -> 1 and q- = s0 exp(b-) -> s0.
pub fn product_factorize(q: &LineSamples, s0: C64) -> Result<WienerHopfFactors> {
    let max = q.max_abs();
    let min = q.values.iter().map(|v| v.norm()).fold(q.at_infinity.norm(), f64::min);
    if !(min >= 1e-8 * max) || s0.norm() == 0.0 {
        return Err(Error::NotElliptic(min / max));
    }
    let q0: Vec<C64> = q.values.iter().map(|&v| v / s0).collect();
    let logs = unwrapped_log(&q0, q.at_infinity / s0)?;
    let b = q.with_values(logs, (q.at_infinity / s0).ln());
    let (b_plus, b_minus) = plus_minus_split(&b, ZeroModePolicy::AllToPlus);
    let q_plus = b_plus.map(|v| v.exp());
    let q_minus = b_minus.map(|v| s0 * v.exp());
    let (f_plus, f_minus) = sum_decompose(q, s0);
    Ok(WienerHopfFactors { q_plus, q_minus, b_plus, b_minus, f_plus, f_minus, s0 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub epsilon: f64,
    pub exponent: f64,
    pub g_plus_exponent: f64,
    pub f_plus_exponent: f64,
    pub passes: bool,
}

/// Pooled log-log slope of |h| against |xi_n| over sigma*[8, 256], one intercept per slice.
fn pooled_slope(slices: &[&LineSamples]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    let mut used = 0;
    for s in slices {
        let pts: Vec<(f64, f64)> = s
            .xi()
            .iter()
            .zip(&s.values)
            .filter(|(x, v)| {
                let r = x.abs() / s.sigma;
                (8.0..=256.0).contains(&r) && v.norm() > 1e-300
            })
            .map(|(x, v)| (x.abs().ln(), v.norm().ln()))
            .collect();
        if pts.len() < 4 {
            continue;
        }
        used += 1;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        for (x, y) in pts {
            num += (x - mx) * (y - my);
            den += (x - mx) * (x - mx);
        }
    }
    if used == 0 || den == 0.0 {
        f64::NEG_INFINITY
    } else {
        num / den
    }
}

/// Empirical decay exponents of g+ and f+ in xi_n at tau = 0; passes when the
/// larger one is at most epsilon - 1 + 0.15.
pub fn estimate_check(factors: &[WienerHopfFactors], epsilon: f64) -> DecayReport {
    let negligible = |s: &LineSamples| s.max_abs() < 1e-14;
    let g: Vec<LineSamples> = factors.iter().map(|f| f.g_plus()).collect();
    let g_refs: Vec<&LineSamples> = g.iter().filter(|s| !negligible(s)).collect();
    let f_refs: Vec<&LineSamples> = factors.iter().map(|f| &f.f_plus).filter(|s| !negligible(s)).collect();
    let ge = pooled_slope(&g_refs);
    let fe = pooled_slope(&f_refs);
    let exponent = ge.max(fe);
    DecayReport {
        epsilon,
        exponent,
        g_plus_exponent: ge,
        f_plus_exponent: fe,
        passes: exponent <= epsilon - 1.0 + 0.15,
    }
}

const DUMP_FIELDS: [&str; 6] = ["q_plus", "q_minus", "b_plus", "b_minus", "f_plus", "f_minus"];

/// Plain-text dump: header lines `s0`, `xi_prime`, `sigma`, `points`, then for
/// each field a line `field <name>`, a line `inf re im` and `points` lines `re im`.
pub fn write_factor_dump(f: &WienerHopfFactors) -> String {
    let mut s = String::from("# wiener-hopf factor dump\n");
    let _ = writeln!(s, "s0 {:.17e} {:.17e}", f.s0.re, f.s0.im);
    let _ = writeln!(s, "xi_prime {:.17e}", f.q_plus.xi_prime);
    let _ = writeln!(s, "sigma {:.17e}", f.q_plus.sigma);
    let _ = writeln!(s, "points {}", f.q_plus.len());
    for (name, field) in DUMP_FIELDS.iter().zip(fields(f)) {
        let _ = writeln!(s, "field {name}");
        let _ = writeln!(s, "inf {:.17e} {:.17e}", field.at_infinity.re, field.at_infinity.im);
        for v in &field.values {
            let _ = writeln!(s, "{:.17e} {:.17e}", v.re, v.im);
        }
    }
    s
}

fn fields(f: &WienerHopfFactors) -> [&LineSamples; 6] {
    [&f.q_plus, &f.q_minus, &f.b_plus, &f.b_minus, &f.f_plus, &f.f_minus]
}

pub fn parse_factor_dump(text: &str) -> Result<WienerHopfFactors> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let mut next = |what: &str| lines.next().ok_or_else(|| Error::Parse(format!("unexpected end before {what}")));
    let keyed = |line: &str, key: &str, count: usize| -> Result<Vec<f64>> {
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(Error::Parse(format!("expected {key}")));
        }
        let v: Vec<f64> = parts.map(parse_f64).collect::<Result<_>>()?;
        if v.len() != count {
            return Err(Error::Parse(format!("{key} expects {count} values")));
        }
        Ok(v)
    };
    let s0 = keyed(next("s0")?, "s0", 2)?;
    let xi_prime = keyed(next("xi_prime")?, "xi_prime", 1)?[0];
    let sigma = keyed(next("sigma")?, "sigma", 1)?[0];
    let points = keyed(next("points")?, "points", 1)?[0];
    if !(sigma > 0.0)
        || points < 4.0
        || points > (1u64 << 24) as f64
        || points.fract() != 0.0
        || !(points as usize).is_power_of_two()
    {
        return Err(Error::Parse("invalid sigma or point count".into()));
    }
    let points = points as usize;
    let mut out = Vec::with_capacity(6);
    for name in DUMP_FIELDS {
        let head = next("field")?;
        if head.split_whitespace().collect::<Vec<_>>() != ["field", name] {
            return Err(Error::Parse(format!("expected field {name}")));
        }
        let inf = keyed(next("inf")?, "inf", 2)?;
        let mut values = Vec::with_capacity(points);
        for _ in 0..points {
            let v: Vec<f64> = next("value")?.split_whitespace().map(parse_f64).collect::<Result<_>>()?;
            if v.len() != 2 {
                return Err(Error::Parse("value lines hold two numbers".into()));
            }
            values.push(C64::new(v[0], v[1]));
        }
        out.push(LineSamples { xi_prime, sigma, values, at_infinity: C64::new(inf[0], inf[1]) });
    }
    if next("end").is_ok() {
        return Err(Error::Parse("trailing content".into()));
    }
    let mut it = out.into_iter();
    let mut take = || it.next().unwrap();
    Ok(WienerHopfFactors {
        q_plus: take(),
        q_minus: take(),
        b_plus: take(),
        b_minus: take(),
        f_plus: take(),
        f_minus: take(),
        s0: C64::new(s0[0], s0[1]),
    })
}

fn parse_f64(s: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Parse(format!("bad number {s:?}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parse("non-finite number".into()))
    }
}

/// Slice xi_n -> q(xi', xi_n) of a reduced symbol, with sigma = <xi'>.
pub fn reduced_slice(q: &crate::symbols::SymbolMap, xi_prime: &[f64], n_points: usize, s0: C64) -> LineSamples {
    let sigma = crate::special::japanese(xi_prime);
    let mut xi = xi_prime.to_vec();
    xi.push(0.0);
    let last = xi.len() - 1;
    LineSamples::from_fn(
        n_points,
        crate::special::norm(xi_prime),
        sigma,
        |t| {
            let mut p = xi.clone();
            p[last] = t;
            q(&p)
        },
        s0,
    )
}
