use pulselab::dichotomy::slope_interval;
use pulselab::slowfield::{self, lncosh, slopes, solve, solve_bounded, solve_decaying, Side, SlowGrid};
use pulselab::terrain::{SampledPair, Terrain, TerrainKind};

fn max_err(xs: &[f64], us: &[f64], exact: impl Fn(f64) -> f64) -> f64 {
    xs.iter().zip(us).map(|(&x, &u)| (u - exact(x)).abs()).fold(0.0, f64::max)
}

#[test]
fn flat_terrain_solutions() {
    let t = Terrain::flat();
    let grid = SlowGrid::new(20.0, 4001).unwrap();
    let (u, _, _) = solve_bounded(&t, &grid).unwrap();
    assert!(u.iter().all(|v| (v - 1.0).abs() < 1e-14));
    let (up, _) = solve_decaying(&t, Side::Plus, &grid).unwrap();
    let e = max_err(&grid.nodes(), &up, |x| (-x).exp());
    assert!(e <= 1e-6 * 20f64.exp(), "{e}");
    let rel = grid.nodes().iter().zip(&up).map(|(&x, &u)| (u * x.exp() - 1.0).abs()).fold(0.0, f64::max);
    assert!(rel <= 1e-6, "{rel}");
    let sol = solve(&t, &grid).unwrap();
    assert!((sol.cs0 + 1.0).abs() < 1e-9 && (sol.cu0 - 1.0).abs() < 1e-9);
}

#[test]
fn lncosh_closed_forms_satisfy_the_ode() {
    // residual u'' + f u' + g u - u + 1 with u'' from a centered difference of the closed-form u'
    for beta in [0.2, 0.5, 1.0] {
        let t = Terrain::lncosh(beta).unwrap();
        let h = 1e-5;
        let mut worst = 0.0f64;
        for i in 0..1000 {
            let x = -8.0 + 16.0 * i as f64 / 999.0;
            let (f, g) = t.fg(x);
            let (u, du) = lncosh::u_b(beta, x);
            let d2 = (lncosh::u_b(beta, x + h).1 - lncosh::u_b(beta, x - h).1) / (2.0 * h);
            worst = worst.max((d2 + f * du + g * u - u + 1.0).abs());
            for (v, dv, dv2) in [
                (lncosh::u_plus(beta, x), lncosh::du_plus(beta, x), (lncosh::du_plus(beta, x + h) - lncosh::du_plus(beta, x - h)) / (2.0 * h)),
                (lncosh::u_minus(beta, x), lncosh::du_minus(beta, x), (lncosh::du_minus(beta, x + h) - lncosh::du_minus(beta, x - h)) / (2.0 * h)),
            ] {
                worst = worst.max((dv2 + f * dv + g * v - v).abs() / v.abs().max(1.0));
            }
        }
        assert!(worst <= 1e-8, "beta {beta}: {worst}");
    }
}

#[test]
fn bvp_matches_lncosh_closed_forms() {
    for beta in [0.2, 0.5, 1.0] {
        let t = Terrain::lncosh(beta).unwrap();
        let sol = solve(&t, &SlowGrid::for_terrain(&t)).unwrap();
        let inner: Vec<usize> = (0..sol.grid.len()).filter(|&i| sol.grid[i].abs() <= 10.0).step_by(50).collect();
        for &i in &inner {
            let x = sol.grid[i];
            let (ub, dub) = lncosh::u_b(beta, x);
            assert!((sol.u_b[i] - ub).abs() < 1e-6, "beta {beta} x {x}");
            assert!((sol.p_b[i] - dub).abs() < 1e-6, "beta {beta} x {x}");
            assert!((sol.u_plus[i] - lncosh::u_plus(beta, x)).abs() < 1e-6 * lncosh::u_plus(beta, x).max(1.0));
        }
        let cs = lncosh::du_plus(beta, 0.0) / lncosh::u_plus(beta, 0.0);
        assert!((sol.cs0 - cs).abs() < 1e-6);
    }
    let sol = solve(&Terrain::lncosh(1.0).unwrap(), &SlowGrid::new(30.0, 7501).unwrap()).unwrap();
    assert!((sol.cs0 + 2f64.sqrt()).abs() < 1e-7);
}

#[test]
fn second_order_scheme_refines_by_four() {
    let t = Terrain::lncosh(0.5).unwrap();
    let exact = lncosh::u_b(0.5, 0.0).0;
    let err = |n: usize| {
        let (u, _, _) = solve_bounded(&t, &SlowGrid::new(20.0, n).unwrap().second_order()).unwrap();
        (u[(n - 1) / 2] - exact).abs()
    };
    let ratio = err(801) / err(1601);
    assert!((ratio - 4.0).abs() < 0.3, "{ratio}");
}

#[test]
fn symmetric_terrain_gives_even_background() {
    let t = Terrain::gaussian(0.1, 1.0).unwrap();
    let sol = solve(&t, &SlowGrid::for_terrain(&t)).unwrap();
    let n = sol.grid.len();
    for i in (0..n / 2).step_by(97) {
        assert!((sol.u_b[i] - sol.u_b[n - 1 - i]).abs() < 1e-10);
    }
    assert!((sol.cs0 + sol.cu0).abs() < 1e-9);
}

#[test]
fn periodic_terrain_background() {
    let t = Terrain::cosine(0.05, 1.0).unwrap();
    let grid = SlowGrid::for_terrain(&t);
    let sol = solve(&t, &grid).unwrap();
    assert!(sol.periodic);
    // one period apart
    let c = sol.centre();
    let shift = (2.0 * std::f64::consts::PI / grid.step()).round() as usize;
    let x1 = sol.grid[c] + 2.0 * std::f64::consts::PI;
    let s = sol.sample(x1);
    assert!((s.u_b - sol.u_b[c]).abs() < 1e-6, "{} vs {}", s.u_b, sol.u_b[c]);
    assert!(shift > 0);
}

#[test]
fn background_within_dichotomy_bound() {
    // ||u_b - 1|| <= 10 delta / (1 - 2 delta) for delta < 1/4
    let shape = TerrainKind::Custom(SampledPair::from_fn(40.0, 8001, |_| 0.0, |x| (-x * x).exp()).unwrap());
    let t = Terrain::scaled(0.01, shape).unwrap();
    let sol = solve(&t, &SlowGrid::new(39.0, 9751).unwrap()).unwrap();
    let dev = sol.u_b.iter().map(|u| (u - 1.0).abs()).fold(0.0, f64::max);
    let d = t.delta;
    assert!(dev <= 10.0 * d / (1.0 - 2.0 * d), "{dev}");
    let g = slope_interval(d, -1.0).unwrap();
    assert!(g.contains(sol.cs0 + 1.0));
}

#[test]
fn small_coefficients_first_order_expansion() {
    // for (f, g) = delta (0, g~) the bounded solution is 1 + delta w + O(delta^2)
    // with w'' - w = -g~; for g~ = e^{-x^2}: w(0) = int e^{-|z|} e^{-z^2} dz / 2
    let w0 = pulselab::quad::integrate(|z| (-z - z * z).exp(), 0.0, 40.0);
    let mut errs = vec![];
    for d in [0.02, 0.01] {
        let s = SampledPair::from_fn(40.0, 8001, |_| 0.0, |x| d * (-x * x).exp()).unwrap();
        let tc = Terrain::custom(s).unwrap();
        let (u, _, _) = solve_bounded(&tc, &SlowGrid::new(39.0, 9751).unwrap()).unwrap();
        errs.push((u[(u.len() - 1) / 2] - (1.0 + d * w0)).abs());
    }
    // error is O(delta^2)
    assert!(errs[0] < 0.5 * 0.02 * 0.02 && errs[1] < 0.5 * 0.01 * 0.01, "{errs:?}");
    let r = errs[0] / errs[1];
    assert!((r - 4.0).abs() < 0.5, "{r}");
}

#[test]
fn slope_containment_for_small_terrains() {
    for t in [
        Terrain::lncosh(0.03).unwrap(),
        Terrain::scaled(0.05, TerrainKind::Gaussian { amplitude: 1.0, rate: 1.0 }).unwrap(),
        Terrain::sech(0.05, 1.0).unwrap(),
    ] {
        assert!(t.delta < 0.25);
        let sol = solve(&t, &SlowGrid::for_terrain(&t)).unwrap();
        let g = slope_interval(t.delta, -1.0).unwrap();
        assert!(g.contains(sol.cs0 + 1.0), "{:?}: {}", t.kind, sol.cs0);
        let (cs, _) = slopes(&sol).unwrap();
        assert_eq!(cs, sol.cs0);
    }
}

#[test]
fn default_grid_widths() {
    assert_eq!(slowfield::default_half_width(&Terrain::flat()), 30.0);
    assert_eq!(slowfield::default_half_width(&Terrain::gaussian(1.0, 0.5).unwrap()), 60.0);
    let w = slowfield::default_half_width(&Terrain::cosine(0.1, 1.0).unwrap());
    let k = w / std::f64::consts::PI;
    assert!((k - k.round()).abs() < 1e-12);
}
