use pulselab::model::{check_assumptions, derive_scales, ModelParams};
use pulselab::terrain::{terrain_delta, SampledPair, Terrain, TerrainKind};
use pulselab::PulseError;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn scales_reference_point() {
    let s = derive_scales(&ModelParams::new(0.5, 0.45, 0.01).unwrap());
    // direct evaluation, written out independently
    let (a, m, d) = (0.5f64, 0.45f64, 0.01f64);
    assert!(close(s.epsilon, a / m, 1e-15));
    assert!(close(s.mu, m.powf(1.5) * d / (a * a), 1e-15));
    assert!(close(s.epsilon, 1.1111, 1e-4));
    assert!(close(s.mu, 0.012075, 1e-6));
    assert!(close(s.tau, 0.008282, 1e-6));
    assert!(close(s.nu, 0.0081, 1e-9));
}

#[test]
fn scale_identities() {
    for &(a, m, d) in &[(0.5, 0.45, 0.01), (0.4, 0.45, 0.002), (2.0, 3.0, 0.1), (0.01, 1.0, 0.5)] {
        let s = derive_scales(&ModelParams::new(a, m, d).unwrap());
        // mu tau = D^2 and nu = mu sqrt(m)
        assert!(close(s.mu * s.tau, d * d, 1e-14 * d * d));
        assert!(close(s.nu, s.mu * m.sqrt(), 1e-14 * s.nu));
    }
    let s = derive_scales(&ModelParams::new(0.7, 0.7, 3.0).unwrap());
    assert_eq!(s.epsilon, 1.0);
    let s = derive_scales(&ModelParams::new(0.4, 0.45, 0.002).unwrap());
    assert!(close(s.mu, 0.0037735, 2e-7));
}

#[test]
fn params_must_be_positive() {
    assert!(matches!(ModelParams::new(0.0, 1.0, 1.0), Err(PulseError::InvalidParameter(_))));
    assert!(ModelParams::new(1.0, -1.0, 1.0).is_err());
    assert!(ModelParams::new(1.0, 1.0, f64::NAN).is_err());
}

#[test]
fn catalog_values() {
    assert_eq!(Terrain::flat().eval(7.0).unwrap(), (0.0, 0.0));
    let (f, g) = Terrain::lncosh(1.0).unwrap().eval(0.0).unwrap();
    assert!(f.abs() < 1e-15 && close(g, -2.0, 1e-15));
    let (f, g) = Terrain::gaussian(1.0, 0.5).unwrap().eval(0.0).unwrap();
    assert!(f.abs() < 1e-15 && close(g, -1.0, 1e-15));
    // LnCosh closed forms away from the origin
    let beta = 0.7;
    let x = 1.3;
    let (f, g) = Terrain::lncosh(beta).unwrap().eval(x).unwrap();
    assert!(close(f, -2.0 * beta * (beta * x).tanh(), 1e-14));
    assert!(close(g, -2.0 * beta * beta / (beta * x).cosh().powi(2), 1e-14));
}

#[test]
fn height_derived_coefficients_match_finite_differences() {
    let kinds = [
        TerrainKind::Gaussian { amplitude: 1.3, rate: 0.8 },
        TerrainKind::Sech { amplitude: 0.6, rate: 1.7 },
        TerrainKind::Cosine { amplitude: 0.4, wavenumber: 2.1 },
        TerrainKind::LnCosh { beta: 0.9 },
    ];
    let h = 1e-4;
    for k in &kinds {
        for &x in &[-2.3, -0.4, 0.0, 0.75, 3.1] {
            let hx = |t: f64| k.height_jet(t).unwrap()[0];
            let j = k.height_jet(x).unwrap();
            let d1 = (hx(x + h) - hx(x - h)) / (2.0 * h);
            let d2 = (hx(x + h) - 2.0 * hx(x) + hx(x - h)) / (h * h);
            assert!(close(j[1], d1, 1e-7), "{k:?} f at {x}: {} vs {d1}", j[1]);
            assert!(close(j[2], d2, 1e-5), "{k:?} g at {x}: {} vs {d2}", j[2]);
            let c = k.coefficients(x);
            let g = |t: f64| k.coefficients(t).g;
            assert!(close(c.dg, (g(x + h) - g(x - h)) / (2.0 * h), 1e-7));
        }
    }
}

#[test]
fn delta_values() {
    assert_eq!(terrain_delta(&Terrain::flat(), 50.0, 4001).unwrap(), 0.0);
    let d = terrain_delta(&Terrain::lncosh(0.1).unwrap(), 50.0, 4001).unwrap();
    assert!(close(d, 0.2, 1e-3), "{d}");
    let t = Terrain::gaussian(1.0, 0.5).unwrap();
    let d = terrain_delta(&t, 50.0, 4001).unwrap();
    assert!(d >= 1.0);
    // brute-force oracle on a much finer grid
    let brute = (0..200_001)
        .map(|i| -10.0 + 20.0 * i as f64 / 200_000.0)
        .map(|x| {
            let (f, g) = t.fg(x);
            f.hypot(g)
        })
        .fold(0.0, f64::max);
    assert!(close(d, brute, 1e-8), "{d} vs {brute}");
    assert!(terrain_delta(&t, 0.0, 4001).is_err());
}

#[test]
fn assumption_reports() {
    let r = check_assumptions(&ModelParams::new(0.01, 1.0, 0.01).unwrap(), &Terrain::flat());
    assert!(r.a1 && r.a2 && r.a3 && r.a4 && r.a5);
    let p = ModelParams::new(0.5, 0.45, 0.01).unwrap();
    assert!(!check_assumptions(&p, &Terrain::gaussian(1.0, 0.5).unwrap()).a3);
    assert!(!check_assumptions(&p, &Terrain::cosine(1.0, 1.0).unwrap()).a4);
    // a sampled, asymmetric pair fails the symmetry check
    let s = SampledPair::from_fn(60.0, 2001, |x| 0.1 * (-x * x).exp(), |x| 0.1 * (-x * x).exp()).unwrap();
    let r = check_assumptions(&p, &Terrain::custom(s).unwrap());
    assert!(!r.a2);
}

#[test]
fn custom_terrain_refuses_extrapolation() {
    let s = SampledPair::from_fn(5.0, 101, |x| x.sin(), |x| x.cos()).unwrap();
    let t = Terrain::custom(s).unwrap();
    assert!(t.eval(4.9).is_ok());
    assert!(matches!(t.eval(5.5), Err(PulseError::Extrapolation { .. })));
    let (f, g) = t.eval(1.0).unwrap();
    assert!(close(f, 1f64.sin(), 1e-4) && close(g, 1f64.cos(), 1e-4));
}

#[test]
fn spec_strings_parse() {
    for (spec, kind) in [
        ("flat", TerrainKind::Flat),
        ("gaussian:1:0.5", TerrainKind::Gaussian { amplitude: 1.0, rate: 0.5 }),
        ("sech:2:1.5", TerrainKind::Sech { amplitude: 2.0, rate: 1.5 }),
        ("cosine:1:2", TerrainKind::Cosine { amplitude: 1.0, wavenumber: 2.0 }),
        ("lncosh:0.5", TerrainKind::LnCosh { beta: 0.5 }),
    ] {
        assert_eq!(Terrain::parse(spec).unwrap().kind, kind);
    }
    let t = Terrain::parse("scaled:0.01:gaussian:1:1").unwrap();
    assert!(close(t.delta, 0.02, 1e-9), "{}", t.delta);
    assert!(Terrain::parse("gaussian:1").is_err());
    assert!(Terrain::parse("hill").is_err());
}

#[test]
fn sampled_pair_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let mut text = String::from("x,f,g\n");
    for i in 0..201 {
        let x = -10.0 + 0.1 * i as f64;
        text.push_str(&format!("{x},{},{}\n", 0.01 * (-x * x).exp(), 0.02 * (-x * x).exp()));
    }
    std::fs::write(&path, text).unwrap();
    let t = Terrain::parse(&format!("csv:{}", path.display())).unwrap();
    assert_eq!(t.sample_range(), Some((-10.0, 10.0)));
    let (f, g) = t.eval(0.0).unwrap();
    assert!(close(f, 0.01, 1e-9) && close(g, 0.02, 1e-9));
}
