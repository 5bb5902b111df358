use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use transmission::dirichlet::{solve_homogeneous, SolveOptions};
use transmission::halfspace_ops::{apply_symbol, order_reduce, GridFunction, HalfSpaceGrid, Side, SupportTag};
use transmission::identities::{verify_ibp, SeparableTest};
use transmission::oracles::{rational_factorize, rational_split, RationalFunction};
use transmission::symbols::{
    check_principal_condition, factorization_index, frac_laplacian, l1, l2, random_ab, reduced_symbol,
    HomogeneousSymbol, TabulatedSymbol,
};
use transmission::wiener_hopf::{
    parse_factor_dump, plus_minus_split, product_factorize, write_factor_dump, LineSamples, ZeroModePolicy,
};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn l_family() -> impl Strategy<Value = HomogeneousSymbol> {
    (0usize..2, -0.9f64..0.9, -0.9f64..0.9).prop_map(|(k, b1, b2)| {
        let b = [b1, 1.0 + b2.abs()];
        if k == 0 {
            l1(&b).unwrap()
        } else {
            l2(&b).unwrap()
        }
    })
}

fn unit_direction() -> impl Strategy<Value = Vec<f64>> {
    (0.0f64..std::f64::consts::TAU).prop_map(|t| vec![t.cos(), t.sin()])
}

/// Gaussian bump in x_n, negligible at x_n <= 0 and at the box edge.
fn gaussian_plus(grid: HalfSpaceGrid, center: f64, width: f64) -> GridFunction {
    GridFunction::from_fn(grid, SupportTag::PlusSupported, move |x| {
        let n = x.len();
        let r2 = x[..n - 1].iter().map(|s| s * s).sum::<f64>();
        c((-((x[n - 1] - center) / width).powi(2) - r2).exp(), 0.0)
    })
}

fn max_diff(a: &LineSamples, b: &LineSamples) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn slice(q: impl Fn(f64) -> C64) -> LineSamples {
    LineSamples::from_fn(256, 1.0, 1.0, q, c(0.0, 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn random_symbols_have_reduced_delta(seed in any::<u64>(), n in 2usize..4) {
        let p = random_ab(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let td = factorization_index(&p).unwrap();
        prop_assert!(td.delta.re >= -0.5 && td.delta.re < 0.5);
        prop_assert!(td.principal_condition_residual < 1e-10);
    }

    #[test]
    fn l_family_delta_reduced(p in l_family()) {
        let td = factorization_index(&p).unwrap();
        prop_assert!(td.delta.re.abs() < 0.5);
    }

    #[test]
    fn principal_condition_invariant_under_integer_shift(p in l_family(), k in -3i32..4) {
        let td = factorization_index(&p).unwrap();
        let r = check_principal_condition(&p, td.mu + k as f64).unwrap();
        prop_assert!(r < 1e-10, "residual {r}");
    }

    #[test]
    fn reduced_symbol_degree_zero(p in l_family(), w in unit_direction(), xn in -3.0f64..3.0, t in prop::sample::select(vec![0.5, 2.0, 10.0])) {
        let td = factorization_index(&p).unwrap();
        let q = reduced_symbol(&p, &td, false);
        let xi = [w[0], xn];
        let xt = [t * w[0], t * xn];
        prop_assert!((q(&xi) - q(&xt)).norm() <= 1e-10 * q(&xi).norm().max(1.0));
    }

    #[test]
    fn hatted_reduced_symbol_approaches_plain(p in l_family(), r in 2.0f64..200.0, sgn in prop::bool::ANY, xn in -5.0f64..5.0) {
        let td = factorization_index(&p).unwrap();
        let (q, qh) = (reduced_symbol(&p, &td, false), reduced_symbol(&p, &td, true));
        let xi = [if sgn { r } else { -r }, xn * r];
        let gap = (q(&xi) - qh(&xi)).norm() / q(&xi).norm();
        prop_assert!(gap <= 5.0 / r, "gap {gap} at |xi'| = {r}");
    }

    #[test]
    fn plus_minus_split_linear_and_idempotent(a in -2.0f64..2.0, b in 0.2f64..3.0, lam in -3.0f64..3.0) {
        let f = slice(|x| c(1.0, 0.0) / c(b + x * x, a * x));
        let g = slice(|x| c(0.0, x) / c(1.0 + x * x, 0.0).powf(1.5));
        let h = slice(|x| c(1.0, 0.0) / c(b + x * x, a * x) + c(0.0, x) / c(1.0 + x * x, 0.0).powf(1.5) * lam);
        let (fp, fm) = plus_minus_split(&f, ZeroModePolicy::HalfHalf);
        let (gp, gm) = plus_minus_split(&g, ZeroModePolicy::HalfHalf);
        let (hp, hm) = plus_minus_split(&h, ZeroModePolicy::HalfHalf);
        let comb = |u: &LineSamples, v: &LineSamples| {
            LineSamples { values: u.values.iter().zip(&v.values).map(|(x, y)| x + y * lam).collect(), ..u.clone() }
        };
        prop_assert!(max_diff(&hp, &comb(&fp, &gp)) < 1e-12);
        prop_assert!(max_diff(&hm, &comb(&fm, &gm)) < 1e-12);
        let (fpp, fpm) = plus_minus_split(&fp, ZeroModePolicy::HalfHalf);
        prop_assert!(max_diff(&fpp, &fp) < 1e-12);
        prop_assert!(fpm.max_abs() < 1e-12);
    }

    #[test]
    fn split_swaps_under_conjugation(a in -2.0f64..2.0, b in 0.2f64..3.0, lam in -1.0f64..1.0) {
        // conj maps functions holomorphic below to functions holomorphic above.
        let f = slice(|x| c(1.0, 0.0) / c(b + x * x, a * x) + c(lam, 1.0) / c(1.0, x).powf(2.0));
        let g = LineSamples { values: f.values.iter().map(|v| v.conj()).collect(), ..f.clone() };
        let (fp, fm) = plus_minus_split(&f, ZeroModePolicy::HalfHalf);
        let (gp, gm) = plus_minus_split(&g, ZeroModePolicy::HalfHalf);
        let conj = |u: &LineSamples| LineSamples { values: u.values.iter().map(|v| v.conj()).collect(), ..u.clone() };
        prop_assert!(max_diff(&conj(&fp), &gm) < 1e-12);
        prop_assert!(max_diff(&conj(&fm), &gp) < 1e-12);
    }

    #[test]
    fn rational_split_matches_sampled_split(zr in -2.0f64..2.0, p1 in 0.3f64..2.0, p2 in 0.3f64..2.0, s1 in -2.0f64..2.0, s2 in -2.0f64..2.0) {
        let r = RationalFunction::new(vec![c(zr, 0.5)], vec![c(s1, p1), c(s2, -p2)], c(1.0, 0.0)).unwrap();
        let (rp, rm) = rational_split(&r).unwrap();
        let f = slice(|x| r.eval(c(x, 0.0)));
        let (fp, fm) = plus_minus_split(&f, ZeroModePolicy::HalfHalf);
        let ep = slice(|x| rp.eval(c(x, 0.0)));
        let em = slice(|x| rm.eval(c(x, 0.0)));
        let scale = f.max_abs();
        prop_assert!(max_diff(&fp, &ep) < 1e-6 * scale);
        prop_assert!(max_diff(&fm, &em) < 1e-6 * scale);
    }

    #[test]
    fn rational_factorize_matches_product_factorize(z1 in 0.3f64..2.0, z2 in 0.3f64..2.0, p1 in 0.3f64..2.0, p2 in 0.3f64..2.0, s in -1.0f64..1.0) {
        let r = RationalFunction::new(vec![c(s, z1), c(-s, -z2)], vec![c(0.0, p1), c(0.0, -p2)], c(1.0, 0.0)).unwrap();
        let (rp, rm) = rational_factorize(&r).unwrap();
        let q = LineSamples::from_fn(512, 1.0, 1.0, |x| r.eval(c(x, 0.0)), c(1.0, 0.0));
        let wh = product_factorize(&q, c(1.0, 0.0)).unwrap();
        let ep = LineSamples::from_fn(512, 1.0, 1.0, |x| rp.eval(c(x, 0.0)), c(1.0, 0.0));
        let em = LineSamples::from_fn(512, 1.0, 1.0, |x| rm.eval(c(x, 0.0)), c(1.0, 0.0));
        prop_assert!(max_diff(&wh.q_plus, &ep) < 1e-6, "{}", max_diff(&wh.q_plus, &ep));
        prop_assert!(max_diff(&wh.q_minus, &em) < 1e-6);
    }

    #[test]
    fn factor_dump_round_trips(z1 in 0.3f64..2.0, p1 in 0.3f64..2.0) {
        let r = RationalFunction::new(vec![c(0.2, z1), c(0.0, -1.0)], vec![c(0.0, p1), c(0.0, -2.0)], c(1.0, 0.0)).unwrap();
        let q = LineSamples::from_fn(64, 1.0, 1.0, |x| r.eval(c(x, 0.0)), c(1.0, 0.0));
        let wh = product_factorize(&q, c(1.0, 0.0)).unwrap();
        let back = parse_factor_dump(&write_factor_dump(&wh)).unwrap();
        prop_assert_eq!(back, wh);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn apply_symbol_norm_bound(a in 0.1f64..1.5, seed in any::<u64>()) {
        use rand::Rng;
        let grid = HalfSpaceGrid::new(2, 4.0, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = GridFunction::zeros(grid, SupportTag::Whole);
        for v in u.values.iter_mut() {
            *v = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let p = frac_laplacian(a, 2).unwrap();
        let sym = move |xi: &[f64]| p.eval(xi);
        let bound = (0..grid.total()).map(|i| sym(&grid.dual_point(i)).norm()).fold(0.0, f64::max);
        let out = apply_symbol(&sym, &u).unwrap();
        prop_assert!(out.norm() <= bound * u.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn plus_operators_compose_and_keep_support(s in -1.0f64..1.0, t in -1.0f64..1.0) {
        // kernels decay like e^{-x_n}, so the box must be long enough that the
        // periodic wrap-around stays below the leakage bound
        let grid = HalfSpaceGrid::new(2, 24.0, 512).unwrap();
        let u = gaussian_plus(grid, 4.0, 0.7);
        let st = order_reduce(c(s, 0.0), Side::Plus, &order_reduce(c(t, 0.0), Side::Plus, &u).unwrap()).unwrap();
        let direct = order_reduce(c(s + t, 0.0), Side::Plus, &u).unwrap();
        let err = st.values.iter().zip(&direct.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-10 * direct.max_abs().max(1.0));
        prop_assert!(direct.negative_side_leakage() <= 1e-8, "{}", direct.negative_side_leakage());
    }

    #[test]
    fn plus_operator_adjoint(t in -1.0f64..1.0) {
        // (Xi_+^t u, w) = (u, Xi_-^t w) on the whole box.
        let grid = HalfSpaceGrid::new(2, 8.0, 64).unwrap();
        let u = gaussian_plus(grid, 2.0, 0.7);
        let w = GridFunction { support_tag: SupportTag::Whole, ..gaussian_plus(grid, 1.0, 1.5) };
        let lhs = order_reduce(c(t, 0.0), Side::Plus, &u).unwrap().inner(&w).unwrap();
        let minus = move |xi: &[f64]| c((1.0 + xi[0] * xi[0]).sqrt(), -xi[1]).powf(t);
        let rhs = u.inner(&apply_symbol(&minus, &w).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn ibp_is_sesquilinear(lr in -2.0f64..2.0, li in -2.0f64..2.0) {
        let p = frac_laplacian(0.5, 2).unwrap();
        let td = factorization_index(&p).unwrap();
        let grid = HalfSpaceGrid::new(2, 8.0, 64).unwrap();
        let v = SeparableTest::gaussian(1.0, 1.0);
        let w = SeparableTest::gaussian(1.5, 0.7);
        let lam = c(lr, li);
        let base = verify_ibp(&p, &td, &v, &w, grid).unwrap();
        let left = verify_ibp(&p, &td, &v.scaled(lam), &w, grid).unwrap();
        let right = verify_ibp(&p, &td, &v, &w.scaled(lam), grid).unwrap();
        let tol = 1e-12 * base.scale * (1.0 + lam.norm());
        prop_assert!((left.lhs - lam * base.lhs).norm() <= tol);
        prop_assert!((left.rhs - lam * base.rhs).norm() <= tol);
        prop_assert!((right.lhs - lam.conj() * base.lhs).norm() <= tol);
        prop_assert!((right.rhs - lam.conj() * base.rhs).norm() <= tol);
    }

    #[test]
    fn tabulated_text_round_trips(vals in prop::collection::vec((0.5f64..3.0, -1.0f64..1.0), 3..12), m in 0.2f64..3.0) {
        let nodes = vals.iter().enumerate().map(|(k, &(re, im))| {
            let th = k as f64 * std::f64::consts::TAU / vals.len() as f64;
            (vec![th.cos(), th.sin()], c(re, im))
        }).collect();
        let t = TabulatedSymbol { degree: m, dimension: 2, label: "sample".into(), nodes };
        // parsing renormalizes nodes, after which the text form is a fixed point
        let once = TabulatedSymbol::parse(&t.to_text()).unwrap();
        let twice = TabulatedSymbol::parse(&once.to_text()).unwrap();
        prop_assert_eq!(twice.to_text(), once.to_text());
        for ((w0, v0), (w1, v1)) in t.nodes.iter().zip(&once.nodes) {
            prop_assert_eq!(v0, v1);
            prop_assert!(w0.iter().zip(w1).all(|(a, b)| (a - b).abs() < 1e-15));
        }
    }
}

#[test]
fn ibp_boundary_term_sign_for_fractional_laplacian() {
    let grid = HalfSpaceGrid::new(2, 8.0, 64).unwrap();
    for a in [0.25, 0.5, 0.75] {
        let p = frac_laplacian(a, 2).unwrap();
        let td = factorization_index(&p).unwrap();
        assert!((td.s0 - 1.0).norm() < 1e-12);
        let v = SeparableTest::gaussian(1.0, 1.0);
        let r = verify_ibp(&p, &td, &v, &v, grid).unwrap();
        assert!(r.rhs.re > 0.0 && r.rhs.im.abs() < 1e-8 * r.rhs.re, "a = {a}: rhs {}", r.rhs);
    }
}

#[test]
fn solver_is_deterministic_and_zero_data_gives_zero() {
    let p = l1(&[0.3, 1.0]).unwrap();
    let td = factorization_index(&p).unwrap();
    let grid = HalfSpaceGrid::new(2, 8.0, 64).unwrap();
    let f =
        GridFunction::from_fn(grid, SupportTag::Restricted, |x| c((-x.iter().map(|t| t * t).sum::<f64>()).exp(), 0.0));
    let a = solve_homogeneous(&p, &td, &f, SolveOptions::default()).unwrap();
    let b = solve_homogeneous(&p, &td, &f, SolveOptions::default()).unwrap();
    assert_eq!(a.u.values, b.u.values);
    let zero = GridFunction::zeros(grid, SupportTag::Restricted);
    let z = solve_homogeneous(&p, &td, &zero, SolveOptions::default()).unwrap();
    assert!(z.u.norm() <= 1e-12);
}
