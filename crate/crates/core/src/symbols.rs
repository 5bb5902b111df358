//! Homogeneous symbols, structural checks and the factorization index.

use crate::error::{Error, Result};
use crate::special::{japanese, norm, sphere_points};
use num_complex::Complex64 as C64;
use rand::Rng;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub type SymbolMap = Arc<dyn Fn(&[f64]) -> C64 + Send + Sync>;

const NORMAL_THRESHOLD: f64 = 1e-14;
const CUT_THRESHOLD: f64 = 1e-12;

/// Positively homogeneous symbol of degree m = 2a on R^n (normal = last axis).
#[derive(Clone)]
pub struct HomogeneousSymbol {
    pub degree: f64,
    pub dimension: usize,
    pub label: String,
    eval: SymbolMap,
}

impl fmt::Debug for HomogeneousSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HomogeneousSymbol")
            .field("label", &self.label)
            .field("degree", &self.degree)
            .field("dimension", &self.dimension)
            .finish()
    }
}

impl HomogeneousSymbol {
    pub fn new(degree: f64, dimension: usize, label: impl Into<String>, eval: SymbolMap) -> Result<Self> {
        if !(degree > 0.0) || !degree.is_finite() {
            return Err(Error::Parse(format!("degree must be positive, got {degree}")));
        }
        if dimension < 2 {
            return Err(Error::Parse(format!("dimension must be at least 2, got {dimension}")));
        }
        Ok(Self { degree, dimension, label: label.into(), eval })
    }

    pub fn a(&self) -> f64 {
        0.5 * self.degree
    }

    pub fn eval(&self, xi: &[f64]) -> C64 {
        debug_assert_eq!(xi.len(), self.dimension);
        if xi.iter().all(|&x| x == 0.0) {
            return C64::new(0.0, 0.0);
        }
        (self.eval)(xi)
    }

    pub fn map(&self) -> SymbolMap {
        let s = self.clone();
        Arc::new(move |xi: &[f64]| s.eval(xi))
    }

    /// p(0,...,0,sign).
    pub fn normal_value(&self, sign: f64) -> C64 {
        let mut xi = vec![0.0; self.dimension];
        xi[self.dimension - 1] = sign;
        self.eval(&xi)
    }

    /// Symbol of the formal adjoint, conj(p(xi)).
    pub fn adjoint(&self) -> Self {
        let s = self.clone();
        Self {
            degree: self.degree,
            dimension: self.dimension,
            label: format!("adj({})", self.label),
            eval: Arc::new(move |xi: &[f64]| s.eval(xi).conj()),
        }
    }

    /// Relabel coordinates so that `axis` becomes the normal (last) axis.
    pub fn with_normal_axis(&self, axis: usize) -> Self {
        let n = self.dimension;
        assert!(axis < n);
        if axis == n - 1 {
            return self.clone();
        }
        let s = self.clone();
        Self {
            degree: self.degree,
            dimension: n,
            label: format!("{}[normal x{}]", self.label, axis + 1),
            eval: Arc::new(move |eta: &[f64]| {
                let mut xi = Vec::with_capacity(n);
                xi.extend_from_slice(&eta[..axis]);
                xi.push(eta[n - 1]);
                xi.extend_from_slice(&eta[axis..n - 1]);
                s.eval(&xi)
            }),
        }
    }

    /// Largest relative homogeneity defect over sampled unit vectors and
    /// t in {0.5, 2, 10}.
    pub fn homogeneity_defect(&self, samples: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for w in sphere_points(self.dimension, samples) {
            let p1 = self.eval(&w);
            if p1.norm() < 1e-300 {
                continue;
            }
            for t in [0.5, 2.0, 10.0] {
                let tw: Vec<f64> = w.iter().map(|x| x * t).collect();
                let d = (self.eval(&tw) - p1 * t.powf(self.degree)).norm() / (t.powf(self.degree) * p1.norm());
                worst = worst.max(d);
            }
        }
        worst
    }
}

pub fn frac_laplacian(a: f64, n: usize) -> Result<HomogeneousSymbol> {
    check_finite(&[a])?;
    if !(a > 0.0 && a < 8.0) {
        return Err(Error::Parse(format!("frac_laplacian order a={a} outside (0, 8)")));
    }
    HomogeneousSymbol::new(
        2.0 * a,
        n,
        format!("frac_laplacian({a})"),
        Arc::new(move |xi: &[f64]| C64::new(xi.iter().map(|x| x * x).sum::<f64>().powf(a), 0.0)),
    )
}

/// |xi| + i b.xi
pub fn l1(b: &[f64]) -> Result<HomogeneousSymbol> {
    check_finite(b)?;
    let b = b.to_vec();
    let label = format!("L1({})", join(&b));
    HomogeneousSymbol::new(1.0, b.len(), label, Arc::new(move |xi: &[f64]| C64::new(norm(xi), dot(&b, xi))))
}

/// |xi_1 + ... + xi_n| + i b.xi
pub fn l2(b: &[f64]) -> Result<HomogeneousSymbol> {
    check_finite(b)?;
    let b = b.to_vec();
    let label = format!("L2({})", join(&b));
    HomogeneousSymbol::new(
        1.0,
        b.len(),
        label,
        Arc::new(move |xi: &[f64]| C64::new(xi.iter().sum::<f64>().abs(), dot(&b, xi))),
    )
}

/// A + iB with A = (sum w_i xi_i^2)^a and
/// B = (c.xi)|xi|^{2a-1} + (d.xi)^3 |xi|^{2a-3}.
pub fn ab_family(a: f64, w: &[f64], c: &[f64], d: &[f64]) -> Result<HomogeneousSymbol> {
    check_finite(&[a])?;
    check_finite(w)?;
    check_finite(c)?;
    check_finite(d)?;
    if !(a > 0.0 && a < 8.0) {
        return Err(Error::Parse(format!("AB order a={a} outside (0, 8)")));
    }
    if w.len() != c.len() || w.len() != d.len() {
        return Err(Error::Parse("AB weight/coefficient lists differ in length".into()));
    }
    if w.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Parse("AB weights must be positive".into()));
    }
    let (w, c, d) = (w.to_vec(), c.to_vec(), d.to_vec());
    let label = format!("AB({a}; {}; {}; {})", join(&w), join(&c), join(&d));
    let n = w.len();
    HomogeneousSymbol::new(
        2.0 * a,
        n,
        label,
        Arc::new(move |xi: &[f64]| {
            let r = norm(xi);
            let q: f64 = w.iter().zip(xi).map(|(w, x)| w * x * x).sum();
            let cx = dot(&c, xi);
            let dx = dot(&d, xi);
            C64::new(q.powf(a), cx * r.powf(2.0 * a - 1.0) + dx.powi(3) * r.powf(2.0 * a - 3.0))
        }),
    )
}

/// |xi_1 + xi_2|^m + i sign(xi_3)|xi_3|^m on R^3.
pub fn example66(m: f64) -> Result<HomogeneousSymbol> {
    check_finite(&[m])?;
    if !(m > 0.0 && m < 8.0) {
        return Err(Error::Parse(format!("ex66 order m={m} outside (0, 8)")));
    }
    HomogeneousSymbol::new(
        m,
        3,
        format!("ex66({m})"),
        Arc::new(move |xi: &[f64]| C64::new((xi[0] + xi[1]).abs().powf(m), xi[2].signum() * xi[2].abs().powf(m))),
    )
}

/// Random strongly elliptic member of the A + iB family.
pub fn random_ab<R: Rng>(n: usize, rng: &mut R) -> HomogeneousSymbol {
    let a = rng.random_range(0.1..1.5);
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let d: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    ab_family(a, &w, &c, &d).expect("valid random AB parameters")
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Parse("non-finite parameter".into()))
    }
}

/// Parse a catalog name such as `L1(0,1)`, `frac_laplacian(0.5)`,
/// `AB(0.5; 1,1; 0,0.3; 0,0.1)` or `ex66(1.5)`. `n` is used by symbols whose
/// dimension is not implied by their parameters.
pub fn parse_symbol(text: &str, n: usize) -> Result<HomogeneousSymbol> {
    let text = text.trim();
    if text.len() > 4096 {
        return Err(Error::Parse("symbol name too long".into()));
    }
    let open = text.find('(').ok_or_else(|| Error::Parse(format!("missing '(' in {text:?}")))?;
    if !text.ends_with(')') {
        return Err(Error::Parse(format!("missing ')' in {text:?}")));
    }
    let name = text[..open].trim();
    let inner = &text[open + 1..text.len() - 1];
    let groups: Vec<Vec<f64>> = inner
        .split(';')
        .map(|g| {
            let g = g.trim();
            if g.is_empty() {
                return Ok(Vec::new());
            }
            g.split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}"))))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let single = |g: &Vec<Vec<f64>>| -> Result<f64> {
        match g.as_slice() {
            [v] if v.len() == 1 => Ok(v[0]),
            _ => Err(Error::Parse(format!("{name} takes one parameter"))),
        }
    };
    let vector = |g: &Vec<Vec<f64>>| -> Result<Vec<f64>> {
        match g.as_slice() {
            [v] if v.len() >= 2 && v.len() <= 8 => Ok(v.clone()),
            _ => Err(Error::Parse(format!("{name} takes 2..8 comma-separated values"))),
        }
    };
    match name {
        "frac_laplacian" => {
            if !(2..=8).contains(&n) {
                return Err(Error::Parse(format!("dimension {n} outside 2..8")));
            }
            frac_laplacian(single(&groups)?, n)
        }
        "L1" => l1(&vector(&groups)?),
        "L2" => l2(&vector(&groups)?),
        "ex66" => example66(single(&groups)?),
        "AB" => {
            if groups.len() != 4 || groups[0].len() != 1 {
                return Err(Error::Parse("AB expects (a; w..; c..; d..)".into()));
            }
            if !(2..=8).contains(&groups[1].len()) {
                return Err(Error::Parse("AB dimension outside 2..8".into()));
            }
            ab_family(groups[0][0], &groups[1], &groups[2], &groups[3])
        }
        _ => Err(Error::Parse(format!("unknown symbol {name:?}"))),
    }
}

/// Tabulated sphere values p(w) for unit w, extended by |xi|^m.
#[derive(Clone, Debug)]
pub struct TabulatedSymbol {
    pub degree: f64,
    pub dimension: usize,
    pub label: String,
    pub nodes: Vec<(Vec<f64>, C64)>,
}

impl TabulatedSymbol {
    /// Format: header lines `degree <m>`, `dimension <n>`, optional
    /// `label <text>`, then one row per node `w_1 .. w_n re im`. `#` starts a
    /// comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut degree = None;
        let mut dimension = None;
        let mut label = String::from("tabulated");
        let mut nodes = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap_or("");
            match head {
                "degree" => degree = Some(parse_num(parts.next(), lineno)?),
                "dimension" => {
                    let d = parse_num(parts.next(), lineno)?;
                    if d != 2.0 && d != 3.0 {
                        return Err(Error::Parse(format!("line {}: dimension must be 2 or 3", lineno + 1)));
                    }
                    dimension = Some(d as usize);
                }
                "label" => label = parts.collect::<Vec<_>>().join(" "),
                _ => {
                    let n = dimension.ok_or_else(|| Error::Parse("dimension must precede data rows".into()))?;
                    let vals: Vec<f64> = line
                        .split_whitespace()
                        .map(|s| {
                            s.parse::<f64>().map_err(|_| Error::Parse(format!("line {}: bad number {s:?}", lineno + 1)))
                        })
                        .collect::<Result<_>>()?;
                    if vals.len() != n + 2 || vals.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Parse(format!("line {}: expected {} finite values", lineno + 1, n + 2)));
                    }
                    let r = norm(&vals[..n]);
                    if !(r > 1e-12) {
                        return Err(Error::Parse(format!("line {}: zero direction", lineno + 1)));
                    }
                    let w: Vec<f64> = vals[..n].iter().map(|x| x / r).collect();
                    nodes.push((w, C64::new(vals[n], vals[n + 1])));
                }
            }
        }
        let degree = degree.ok_or_else(|| Error::Parse("missing degree".into()))?;
        if !(degree > 0.0 && degree < 16.0) {
            return Err(Error::Parse("degree outside (0, 16)".into()));
        }
        let dimension = dimension.ok_or_else(|| Error::Parse("missing dimension".into()))?;
        let needed = if dimension == 2 { 3 } else { 4 };
        if nodes.len() < needed {
            return Err(Error::Parse(format!("need at least {needed} nodes")));
        }
        Ok(Self { degree, dimension, label, nodes })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("degree {}\ndimension {}\nlabel {}\n", self.degree, self.dimension, self.label);
        for (w, v) in &self.nodes {
            for x in w {
                s.push_str(&format!("{x:.17e} "));
            }
            s.push_str(&format!("{:.17e} {:.17e}\n", v.re, v.im));
        }
        s
    }

    /// Value on the unit sphere: linear interpolation in angle for n = 2,
    /// inverse-distance weighting of the three nearest nodes for n = 3.
    pub fn sphere_value(&self, w: &[f64]) -> C64 {
        if self.dimension == 2 {
            let t = w[1].atan2(w[0]);
            let mut angles: Vec<(f64, C64)> = self.nodes.iter().map(|(u, v)| (u[1].atan2(u[0]), *v)).collect();
            angles.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let k = angles.len();
            for i in 0..k {
                let (t0, v0) = angles[i];
                let (mut t1, v1) = angles[(i + 1) % k];
                if i + 1 == k {
                    t1 += 2.0 * PI;
                }
                let mut tt = t;
                if tt < t0 {
                    tt += 2.0 * PI;
                }
                if tt >= t0 && tt <= t1 {
                    let s = if t1 > t0 { (tt - t0) / (t1 - t0) } else { 0.0 };
                    return v0 * (1.0 - s) + v1 * s;
                }
            }
            angles[0].1
        } else {
            let mut d: Vec<(f64, C64)> = self
                .nodes
                .iter()
                .map(|(u, v)| {
                    let c = u.iter().zip(w).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0);
                    (c.acos(), *v)
                })
                .collect();
            d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            if d[0].0 < 1e-12 {
                return d[0].1;
            }
            let (mut num, mut den) = (C64::new(0.0, 0.0), 0.0);
            for &(dist, v) in d.iter().take(3) {
                num += v / dist;
                den += 1.0 / dist;
            }
            num / den
        }
    }

    pub fn to_symbol(&self) -> Result<HomogeneousSymbol> {
        let t = self.clone();
        let m = self.degree;
        HomogeneousSymbol::new(
            m,
            self.dimension,
            self.label.clone(),
            Arc::new(move |xi: &[f64]| {
                let r = norm(xi);
                let w: Vec<f64> = xi.iter().map(|x| x / r).collect();
                t.sphere_value(&w) * r.powf(m)
            }),
        )
    }
}

fn parse_num(tok: Option<&str>, lineno: usize) -> Result<f64> {
    let v = tok
        .ok_or_else(|| Error::Parse(format!("line {}: missing value", lineno + 1)))?
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {}: bad number", lineno + 1)))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("line {}: non-finite value", lineno + 1)));
    }
    Ok(v)
}

/// Factorization data of a symbol with respect to the normal (0,...,0,1).
#[derive(Clone, Debug, PartialEq)]
pub struct TransmissionData {
    pub a: f64,
    pub mu: C64,
    pub delta: C64,
    pub mu_prime: C64,
    pub alpha_plus: C64,
    pub alpha_minus: C64,
    pub s0: C64,
    pub strongly_elliptic: bool,
    pub ellipticity_constant: f64,
    pub principal_condition_residual: f64,
}

fn principal_log(z: C64) -> Result<C64> {
    if z.re < 0.0 && z.im.abs() <= CUT_THRESHOLD * z.norm() {
        return Err(Error::BranchAmbiguity(format!("{z}")));
    }
    Ok(z.ln())
}

/// Factorization index from the principal logs of p(0,+-1). For strongly
/// elliptic symbols |Re delta| < 1/2 holds automatically; in general delta is
/// reduced into [-1/2, 1/2) by an integer shift (the principal condition is
/// invariant under such shifts).
pub fn factorization_index(p: &HomogeneousSymbol) -> Result<TransmissionData> {
    let pp = p.normal_value(1.0);
    let pm = p.normal_value(-1.0);
    if pp.norm() < NORMAL_THRESHOLD {
        return Err(Error::DegenerateNormal(1));
    }
    if pm.norm() < NORMAL_THRESHOLD {
        return Err(Error::DegenerateNormal(-1));
    }
    let alpha_plus = principal_log(pp)?;
    let alpha_minus = principal_log(pm)?;
    let mut delta = (alpha_plus - alpha_minus) / C64::new(0.0, 2.0 * PI);
    let (strongly_elliptic, c0) = check_strong_ellipticity(p, 2000);
    delta -= (delta.re + 0.5).floor();
    let a = p.a();
    let mu = delta + a;
    let s0 = (C64::new(0.0, -PI) * delta).exp() * pp;
    let residual = check_principal_condition(p, mu)?;
    Ok(TransmissionData {
        a,
        mu,
        delta,
        mu_prime: C64::new(a, 0.0) - delta,
        alpha_plus,
        alpha_minus,
        s0,
        strongly_elliptic,
        ellipticity_constant: c0,
        principal_condition_residual: residual,
    })
}

/// min Re p(w) over quasi-uniform unit vectors plus the coordinate
/// directions and their diagonals, and whether it exceeds 1e-12.
pub fn check_strong_ellipticity(p: &HomogeneousSymbol, samples: usize) -> (bool, f64) {
    let n = p.dimension;
    let mut pts = sphere_points(n, samples.max(100));
    let r = 0.5f64.sqrt();
    for i in 0..n {
        for si in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = si;
            pts.push(e);
            for j in i + 1..n {
                for sj in [1.0, -1.0] {
                    let mut d = vec![0.0; n];
                    d[i] = si * r;
                    d[j] = sj * r;
                    pts.push(d);
                }
            }
        }
    }
    let c0 = pts.iter().map(|w| p.eval(w).re).fold(f64::INFINITY, f64::min);
    (c0 > 1e-12, c0)
}

/// |p(0,-1) - e^{i pi (m - 2 mu)} p(0,1)| / |p(0,1)|.
pub fn check_principal_condition(p: &HomogeneousSymbol, mu: C64) -> Result<f64> {
    let pp = p.normal_value(1.0);
    if pp.norm() < NORMAL_THRESHOLD {
        return Err(Error::DegenerateNormal(1));
    }
    let pm = p.normal_value(-1.0);
    let phase = (C64::new(0.0, PI) * (C64::new(p.degree, 0.0) - 2.0 * mu)).exp();
    Ok((pm - phase * pp).norm() / pp.norm())
}

fn fd_derivative(g: &dyn Fn(f64) -> C64, t: f64, k: usize, h: f64) -> C64 {
    let d = |h: f64| -> C64 {
        match k {
            0 => g(t),
            1 => (g(t + h) - g(t - h)) / (2.0 * h),
            2 => (g(t + h) - g(t) * 2.0 + g(t - h)) / (h * h),
            3 => (g(t + 2.0 * h) - g(t + h) * 2.0 + g(t - h) * 2.0 - g(t - 2.0 * h)) / (2.0 * h.powi(3)),
            4 => (g(t + 2.0 * h) - g(t + h) * 4.0 + g(t) * 6.0 - g(t - h) * 4.0 + g(t - 2.0 * h)) / h.powi(4),
            _ => panic!("derivative order {k} > 4"),
        }
    };
    if k == 0 {
        return g(t);
    }
    (d(h / 2.0) * 4.0 - d(h)) / 3.0
}

/// Normal-ray derivative relations for k = 0..=k_max (k_max <= 4).
pub fn check_normal_ray(p: &HomogeneousSymbol, mu: C64, k_max: usize) -> Vec<f64> {
    assert!(k_max <= 4, "k_max must not exceed 4");
    let n = p.dimension;
    let g = |t: f64| {
        let mut xi = vec![0.0; n];
        xi[n - 1] = t;
        p.eval(&xi)
    };
    (0..=k_max)
        .map(|k| {
            let dm = fd_derivative(&g, -1.0, k, 1e-3);
            let dp = fd_derivative(&g, 1.0, k, 1e-3);
            let phase = (C64::new(0.0, PI) * (C64::new(p.degree - k as f64, 0.0) - 2.0 * mu)).exp();
            relative_gap(dm, phase * dp, g(1.0).norm())
        })
        .collect()
}

/// Transversal check of the full condition: the k-th derivative in the
/// direction of axis `j` (< n-1) at (0,+-1).
pub fn check_transversal(p: &HomogeneousSymbol, mu: C64, j: usize, k: usize) -> f64 {
    let n = p.dimension;
    assert!(j < n - 1);
    let at = |sign: f64| {
        let g = move |s: f64| {
            let mut xi = vec![0.0; n];
            xi[j] = s;
            xi[n - 1] = sign;
            p.eval(&xi)
        };
        fd_derivative(&g, 0.0, k, 1e-3)
    };
    let dp = at(1.0);
    let dm = at(-1.0);
    let phase = (C64::new(0.0, PI) * (C64::new(p.degree - k as f64, 0.0) - 2.0 * mu)).exp();
    relative_gap(dm, phase * dp, p.normal_value(1.0).norm())
}

/// |a - b| relative to max(|a|, |b|), or to `scale` when both derivatives
/// are negligible (finite differences then only carry roundoff).
fn relative_gap(a: C64, b: C64, scale: f64) -> f64 {
    let m = a.norm().max(b.norm());
    let floor = 1e-6 * scale;
    (a - b).norm() / if m > floor { m } else { scale.max(1e-300) }
}

/// p_hat(xi', xi_n) = p(<xi'> xi'/|xi'|, xi_n), with the direction e_1 at xi' = 0.
pub fn hatted_symbol(p: &HomogeneousSymbol) -> SymbolMap {
    let p = p.clone();
    Arc::new(move |xi: &[f64]| p.eval(&hat_point(xi)))
}

pub fn hat_point(xi: &[f64]) -> Vec<f64> {
    let n = xi.len();
    let tr = &xi[..n - 1];
    let r = norm(tr);
    let jr = japanese(tr);
    let mut out = vec![0.0; n];
    if r == 0.0 {
        out[0] = 1.0;
    } else {
        for i in 0..n - 1 {
            out[i] = jr * tr[i] / r;
        }
    }
    out[n - 1] = xi[n - 1];
    out
}

/// Least-squares slope of log|p - p_hat| against log|xi| on |xi| in [4, 64],
/// pooled over rays with per-ray intercepts. Returns -inf when the remainder
/// vanishes on every ray.
pub fn remainder_decay_exponent(p: &HomogeneousSymbol) -> Result<f64> {
    let ph = hatted_symbol(p);
    let radii: Vec<f64> = (0..9).map(|i| 4.0 * 2f64.powf(i as f64 * 0.5)).collect();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut rays = 0;
    for w in sphere_points(p.dimension, 24) {
        let pts: Vec<(f64, f64)> = radii
            .iter()
            .filter_map(|&r| {
                let xi: Vec<f64> = w.iter().map(|x| x * r).collect();
                let pv = p.eval(&xi);
                let d = (pv - ph(&xi)).norm();
                (d > 1e-13 * pv.norm().max(1e-300)).then(|| (r.ln(), d.ln()))
            })
            .collect();
        if pts.len() < radii.len() {
            continue;
        }
        rays += 1;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        for (x, y) in pts {
            num += (x - mx) * (y - my);
            den += (x - mx) * (x - mx);
        }
    }
    if rays == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    if rays < 8 {
        return Err(Error::QuadratureFailure(format!("only {rays} usable rays")));
    }
    Ok(num / den)
}

/// Reduced symbol q = chi_{-}^{-mu'} p chi_{+}^{-mu}, with |xi'| (plain) or
/// <xi'> and p_hat (hatted) in the order-reducing factors.
pub fn reduced_symbol(p: &HomogeneousSymbol, td: &TransmissionData, hatted: bool) -> SymbolMap {
    let (mu, mup) = (td.mu, td.mu_prime);
    let p = p.clone();
    let ph = hatted_symbol(&p);
    Arc::new(move |xi: &[f64]| {
        let n = xi.len();
        let tr = &xi[..n - 1];
        let (k, pv) = if hatted { (japanese(tr), ph(xi)) } else { (norm(tr), p.eval(xi)) };
        let xn = xi[n - 1];
        if k == 0.0 && xn == 0.0 {
            return C64::new(0.0, 0.0);
        }
        C64::new(k, -xn).powc(-mup) * pv * C64::new(k, xn).powc(-mu)
    })
}
