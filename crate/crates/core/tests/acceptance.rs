//! Acceptance criteria: one PASS/FAIL line each, tolerances pinned below.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use std::time::{Duration, Instant};
use transmission::dirichlet::{lift_trace, solve_homogeneous, solve_nonhomogeneous, ModeOperator, SolveOptions};
use transmission::halfline::eval_field;
use transmission::halfspace_ops::{
    key_formula_kernel_error, order_reduce, restrict_extend, BoundaryFunction, Direction, GridFunction, HalfSpaceGrid,
    Side, SupportTag,
};
use transmission::identities::{
    refinement_study, verify_example66, verify_halfways_green, verify_ibp, verify_lower_order, SeparableTest,
};
use transmission::oracles::{dense_halfline_richardson, rational_factorize, windowed_relative_error, RationalFunction};
use transmission::symbols::{
    factorization_index, hatted_symbol, parse_symbol, random_ab, reduced_symbol, HomogeneousSymbol, SymbolMap,
};
use transmission::wiener_hopf::{product_factorize, reduced_slice, LineSamples};
use transmission::{Result, C64};

const INDEX_TOL: f64 = 1e-12;
const REDUCED_TOL: f64 = 1e-10;
const WH_RECONSTRUCTION_TOL: f64 = 1e-8;
const RATIONAL_TOL: f64 = 1e-6;
const COMPOSITION_TOL: f64 = 1e-10;
const KERNEL_TOL: f64 = 1e-4;
const SOLVE_RESIDUAL_TOL: f64 = 1e-6;
const DENSE_ORACLE_TOL: f64 = 1e-3;
const EXPONENT_REL_TOL: f64 = 0.02;
const IBP_TOL: f64 = 1e-3;
const REFINEMENT_FACTOR: f64 = 2.0;
const LOWER_ORDER_TOL: f64 = 1e-6;
const GREEN_FL_TOL: f64 = 1e-3;
const GREEN_L1_TOL: f64 = 3e-3;
const ZERO_TRACE_TOL: f64 = 1e-3;
const EX66_TOL: f64 = 5e-2;
const LIFT_TRACE_TOL: f64 = 1e-6;
const EQUATION_TOL: f64 = 1e-4;
const BOUNDARY_CONDITION_TOL: f64 = 1e-3;
const REMAINDER_SLACK: f64 = 0.1;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn sym(text: &str, n: usize) -> HomogeneousSymbol {
    parse_symbol(text, n).expect("catalog symbol")
}

fn grid(n: usize, points: usize) -> HalfSpaceGrid {
    HalfSpaceGrid::new(n, 8.0, points).expect("grid")
}

/// A check returns (pass, one-line detail).
type Outcome = Result<(bool, String)>;

fn index_exactness() -> Outcome {
    let td = factorization_index(&sym("L1(0,1)", 2))?;
    let e1 = (td.delta - 0.25).norm().max((td.mu - 0.75).norm());
    let ex = sym("ex66(1.5)", 3);
    let e3 = (factorization_index(&ex)?.mu - 0.25).norm();
    let e2 = (factorization_index(&ex.with_normal_axis(1))?.mu - 0.75).norm();
    let worst = e1.max(e2).max(e3);
    Ok((worst <= INDEX_TOL, format!("max deviation {worst:.1e} (limit {INDEX_TOL:.0e})")))
}

fn catalog() -> Vec<HomogeneousSymbol> {
    let ex = sym("ex66(1.5)", 3);
    vec![
        sym("frac_laplacian(0.5)", 2),
        sym("frac_laplacian(0.75)", 3),
        sym("L1(0,1)", 2),
        sym("L1(0.3,-0.2,1)", 3),
        sym("L2(0,1)", 2),
        sym("AB(0.5; 1,1; 0,0.3; 0,0.1)", 2),
        ex.with_normal_axis(1),
        ex,
    ]
}

fn reduced_condition() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in catalog() {
        let td = factorization_index(&p)?;
        let q = reduced_symbol(&p, &td, false);
        let mut up = vec![0.0; p.dimension];
        up[p.dimension - 1] = 1.0;
        let mut down = up.clone();
        down[p.dimension - 1] = -1.0;
        let (a, b) = (q(&up), q(&down));
        worst = worst.max((a - b).norm() / a.norm());
    }
    let fl = sym("frac_laplacian(0.5)", 2);
    let td = factorization_index(&fl)?;
    let q = reduced_symbol(&fl, &td, false);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut fl_dev: f64 = 0.0;
    for _ in 0..10_000 {
        let xi = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
        fl_dev = fl_dev.max((q(&xi) - 1.0).norm());
    }
    let pass = worst <= REDUCED_TOL && fl_dev <= REDUCED_TOL;
    Ok((
        pass,
        format!("q(0,1) vs q(0,-1) {worst:.1e}, fractional Laplacian |q - 1| {fl_dev:.1e} (limit {REDUCED_TOL:.0e})"),
    ))
}

fn strong_ellipticity_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut complex = 0;
    for i in 0..1000 {
        let p = random_ab(2 + i % 2, &mut rng);
        let d = factorization_index(&p)?.delta;
        if d.im.abs() > 1e-14 {
            complex += 1;
        }
        worst = worst.max(d.re.abs());
    }
    Ok((complex == 0 && worst < 0.5, format!("1000 symbols, max |delta| {worst:.4}, non-real {complex}")))
}

fn wiener_hopf_reconstruction() -> Outcome {
    let p = sym("L1(0,1)", 2);
    let td = factorization_index(&p)?;
    let q = reduced_symbol(&p, &td, true);
    let mut worst: f64 = 0.0;
    for r in [1.0, 4.0, 16.0] {
        let slice = reduced_slice(&q, &[r], 4096, td.s0);
        worst = worst.max(product_factorize(&slice, td.s0)?.reconstruction_error(&slice));
    }
    let line = LineSamples::from_fn(4096, 0.0, 1.0, |x| c((x * x + 4.0) / (x * x + 1.0)), c(1.0));
    let f = product_factorize(&line, c(1.0))?;
    let i = C64::new(0.0, 1.0);
    let r = RationalFunction::new(vec![i * 2.0, -i * 2.0], vec![i, -i], c(1.0))?;
    let (rp, rm) = rational_factorize(&r)?;
    let mut oracle: f64 = 0.0;
    for (k, x) in line.xi().into_iter().enumerate() {
        let z = c(x);
        oracle = oracle.max((f.q_plus.values[k] - rp.eval(z)).norm()).max((f.q_minus.values[k] - rm.eval(z)).norm());
    }
    let pass = worst <= WH_RECONSTRUCTION_TOL && oracle <= RATIONAL_TOL;
    Ok((pass, format!("L1 reconstruction {worst:.1e} (limit {WH_RECONSTRUCTION_TOL:.0e}), rational oracle {oracle:.1e} (limit {RATIONAL_TOL:.0e})")))
}

fn order_reducing_algebra() -> Outcome {
    let g = HalfSpaceGrid::new(2, 6.0, 128)?;
    let bump = |x: &[f64]| c((-(x[0] * x[0]) - 4.0 * (x[1] - 2.0).powi(2)).exp());
    let u = GridFunction::from_fn(g, SupportTag::PlusSupported, bump);
    let (s, t) = (C64::new(0.4, 0.1), C64::new(-0.7, 0.0));
    let a = order_reduce(s, Side::Plus, &order_reduce(t, Side::Plus, &u)?)?;
    let b = order_reduce(s + t, Side::Plus, &u)?;
    let mut diff = a.clone();
    diff.values.iter_mut().zip(&b.values).for_each(|(x, y)| *x -= y);
    let composition = diff.norm() / b.norm();
    let f = restrict_extend(
        &GridFunction::from_fn(g, SupportTag::Whole, |x| C64::new(0.0, 1.0) * bump(x)),
        Direction::RPlus,
    )?;
    let lhs = order_reduce(t, Side::MinusTruncated, &f)?.inner(&u)?;
    let rhs = f.inner(&order_reduce(t.conj(), Side::Plus, &u)?)?;
    let adjoint = (lhs - rhs).norm() / lhs.norm();
    let mut kernel: f64 = 0.0;
    for mu in [0.25, 0.5, 0.75, 1.5] {
        for kappa in [1.0, 4.0, 16.0] {
            kernel = kernel.max(key_formula_kernel_error(c(mu), kappa, 4096, 8.0)?);
        }
    }
    let pass = composition <= COMPOSITION_TOL && adjoint <= COMPOSITION_TOL && kernel <= KERNEL_TOL;
    Ok((pass, format!("composition {composition:.1e}, adjoint {adjoint:.1e} (limit {COMPOSITION_TOL:.0e}), key-formula kernel {kernel:.1e} (limit {KERNEL_TOL:.0e})")))
}

fn gaussian_data(g: HalfSpaceGrid) -> GridFunction {
    GridFunction::from_fn(g, SupportTag::Restricted, |x| c((-x.iter().map(|t| t * t).sum::<f64>()).exp()))
}

fn rel_dev(value: f64, target: f64) -> f64 {
    (value - target).abs() / target.abs()
}

fn dirichlet_solve() -> Outcome {
    let fl = sym("frac_laplacian(0.5)", 2);
    let td = factorization_index(&fl)?;
    let s = solve_homogeneous(&fl, &td, &gaussian_data(grid(2, 256)), SolveOptions::default())?;
    let fl_exp = rel_dev(s.exponent_fit, 0.5);
    // one transverse mode (kappa = 1, f = e^{-x}) against the dense Toeplitz oracle
    let slice = |x: f64| c((1.0 + x * x).sqrt());
    let (xs, dense) = dense_halfline_richardson(slice, |x| c((-x).exp()), 32.0, 256, 1.0)?;
    let op = ModeOperator::new(slice, 1.0, &td, 256)?;
    let mut f = vec![c(0.0); 256];
    f[0] = c(1.0);
    let v = op.solve(&f);
    let wh: Vec<C64> = xs.iter().map(|&x| eval_field(&v, td.mu, 1.0, x)).collect();
    let oracle = windowed_relative_error(&xs, &dense, &wh, 1.0, 10.0);
    let l1 = sym("L1(0,1)", 2);
    let td1 = factorization_index(&l1)?;
    let s1 = solve_homogeneous(&l1, &td1, &gaussian_data(grid(2, 256)), SolveOptions::default())?;
    let l1_exp = rel_dev(s1.exponent_fit, 0.75);
    let pass = s.residual <= SOLVE_RESIDUAL_TOL
        && oracle <= DENSE_ORACLE_TOL
        && fl_exp <= EXPONENT_REL_TOL
        && l1_exp <= EXPONENT_REL_TOL;
    Ok((
        pass,
        format!(
            "residual {:.1e}, dense oracle {oracle:.1e}, exponent {:.4} ({:.2}%), L1 exponent {:.4} ({:.2}%)",
            s.residual,
            s.exponent_fit,
            100.0 * fl_exp,
            s1.exponent_fit,
            100.0 * l1_exp
        ),
    ))
}

fn tests() -> (SeparableTest, SeparableTest) {
    (SeparableTest::gaussian(1.0, 1.0), SeparableTest::gaussian(1.5, 2.0))
}

fn integration_by_parts() -> Outcome {
    let (v, w) = tests();
    let grids: Vec<HalfSpaceGrid> = [64, 128, 256].iter().map(|&n| grid(2, n)).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["frac_laplacian(0.5)", "L1(0,1)", "L2(0,1)"] {
        let p = sym(name, 2);
        let td = factorization_index(&p)?;
        let r = refinement_study(&grids, |g| verify_ibp(&p, &td, &v, &w, g))?;
        let ratio = r.refinement_ratios.iter().copied().fold(f64::INFINITY, f64::min);
        pass &= r.rel_error <= IBP_TOL && ratio >= REFINEMENT_FACTOR;
        parts.push(format!("{name} {:.1e} (min ratio {ratio:.1})", r.rel_error));
    }
    Ok((pass, parts.join(", ")))
}

fn lower_order() -> Outcome {
    let p = sym("L1(0,1)", 2);
    let (full, hat) = (p.map(), hatted_symbol(&p));
    let s: SymbolMap = Arc::new(move |xi: &[f64]| full(xi) - hat(xi));
    let g = grid(2, 256);
    let data = |width: f64| {
        GridFunction::from_fn(g, SupportTag::PlusSupported, move |x: &[f64]| {
            if x[1] <= 0.0 {
                c(0.0)
            } else {
                c(x[1].powi(6) * (-x[1] * x[1] - x[0] * x[0] / width).exp())
            }
        })
    };
    let r = verify_lower_order(&s, &data(1.0), &data(2.0))?;
    Ok((r.rel_error <= LOWER_ORDER_TOL, format!("|LHS| / scale {:.1e} (limit {LOWER_ORDER_TOL:.0e})", r.rel_error)))
}

fn halfways_green() -> Outcome {
    let (v, w) = tests();
    let zero = SeparableTest::gaussian_zero_trace(1.0, 1.0);
    let g = grid(2, 256);
    let fl = sym("frac_laplacian(0.5)", 2);
    let tf = factorization_index(&fl)?;
    let rf = verify_halfways_green(&fl, &tf, &v, &w, g)?;
    let l1 = sym("L1(0,1)", 2);
    let t1 = factorization_index(&l1)?;
    let r1 = verify_halfways_green(&l1, &t1, &v, &w, g)?;
    let zf = verify_halfways_green(&fl, &tf, &zero, &w, g)?;
    let z1 = verify_halfways_green(&l1, &t1, &zero, &w, g)?;
    let zmax = zf.relative_lhs().max(z1.relative_lhs());
    let zero_rhs = zf.rhs.norm().max(z1.rhs.norm());
    let pass =
        rf.rel_error <= GREEN_FL_TOL && r1.rel_error <= GREEN_L1_TOL && zmax <= ZERO_TRACE_TOL && zero_rhs == 0.0;
    Ok((
        pass,
        format!(
            "fractional Laplacian {:.1e}, L1 {:.1e}, zero trace |LHS| / scale {zmax:.1e}, u1 contribution {:.1e}",
            rf.rel_error,
            r1.rel_error,
            rf.diagnostic.max(r1.diagnostic)
        ),
    ))
}

fn example66() -> Outcome {
    let (x3, x2) = verify_example66(1.5, grid(3, 64))?;
    let pass = x3.rel_error <= EX66_TOL && x2.rel_error <= EX66_TOL && x3.diagnostic < 1e-12 && x2.diagnostic < 1e-12;
    Ok((pass, format!("x3-normal {:.1e}, x2-normal {:.1e} (limit {EX66_TOL:.0e})", x3.rel_error, x2.rel_error)))
}

fn nonhomogeneous() -> Outcome {
    let fl = sym("frac_laplacian(0.5)", 2);
    let td = factorization_index(&fl)?;
    let g = grid(2, 256);
    let phi = BoundaryFunction::from_fn(g, |x| c((-x[0] * x[0]).exp()));
    let lift = lift_trace(&phi, td.mu)?.max_diff(&phi) / phi.max_abs();
    // boundary data only: the solution is the pure large solution
    let s =
        solve_nonhomogeneous(&fl, &td, &GridFunction::zeros(g, SupportTag::Restricted), &phi, SolveOptions::default())?;
    let bc = s.boundary_condition_error.unwrap_or(f64::INFINITY);
    let target = td.mu.re - 1.0;
    let exp = rel_dev(s.exponent_fit, target);
    // with interior data the x^mu companion term biases the fixed-window fit;
    // reported for reference, shrinking under refinement
    let mut info = Vec::new();
    for n in [256, 512] {
        let g = grid(2, n);
        let phi = BoundaryFunction::from_fn(g, |x| c((-x[0] * x[0]).exp()));
        let sg = solve_nonhomogeneous(&fl, &td, &gaussian_data(g), &phi, SolveOptions::default())?;
        info.push(format!("N={n} {:.4}", sg.exponent_fit));
        if sg.residual > EQUATION_TOL || sg.boundary_condition_error.unwrap_or(f64::INFINITY) > BOUNDARY_CONDITION_TOL {
            return Ok((false, format!("Gaussian interior data at N={n}: residual {:.1e}", sg.residual)));
        }
    }
    let pass =
        lift <= LIFT_TRACE_TOL && s.residual <= EQUATION_TOL && bc <= BOUNDARY_CONDITION_TOL && exp <= EXPONENT_REL_TOL;
    Ok((
        pass,
        format!(
            "lift trace {lift:.1e}, residual {:.1e}, boundary condition {bc:.1e}, exponent {:.4} ({:.2}%); with interior data {}",
            s.residual,
            s.exponent_fit,
            100.0 * exp,
            info.join(", ")
        ),
    ))
}

fn remainder_decay() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for p in catalog() {
        let td = factorization_index(&p)?;
        if !td.strongly_elliptic {
            continue;
        }
        let e = transmission::symbols::remainder_decay_exponent(&p)?;
        pass &= e <= 2.0 * p.a() - 1.0 + REMAINDER_SLACK;
        parts.push(format!("{} {e:.3}", p.label));
    }
    Ok((pass, parts.join(", ")))
}

type Check = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Check; 12] = [
        ("factorization index exactness", Duration::from_secs(1), index_exactness),
        ("reduced-symbol condition", Duration::from_secs(5), reduced_condition),
        ("strong-ellipticity bound", Duration::from_secs(30), strong_ellipticity_bound),
        ("Wiener-Hopf reconstruction", Duration::from_secs(10), wiener_hopf_reconstruction),
        ("order-reducing algebra", Duration::from_secs(20), order_reducing_algebra),
        ("Dirichlet solve", Duration::from_secs(120), dirichlet_solve),
        ("integration by parts", Duration::from_secs(300), integration_by_parts),
        ("lower-order cancellation", Duration::from_secs(30), lower_order),
        ("halfways Green formula", Duration::from_secs(300), halfways_green),
        ("non-elliptic 3-D example", Duration::from_secs(600), example66),
        ("nonhomogeneous Dirichlet", Duration::from_secs(120), nonhomogeneous),
        ("remainder decay", Duration::from_secs(10), remainder_decay),
    ];
    let mut failures = 0;
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = check();
        let elapsed = t.elapsed();
        let (pass, detail) = match out {
            Ok((pass, detail)) => (pass && elapsed <= *budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        let status = if pass { "PASS" } else { "FAIL" };
        println!(
            "{status} {:>2} {name}: {detail} [{:.2}s, budget {}s]",
            k + 1,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
