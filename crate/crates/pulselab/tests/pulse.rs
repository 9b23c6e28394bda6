use pulselab::model::{derive_scales, ModelParams};
use pulselab::pulse::*;
use pulselab::terrain::Terrain;
use pulselab::PulseError;

/// `a = 0.5, m = 1` and `D` chosen to hit a given `mu`.
fn params_for_mu(mu: f64) -> ModelParams {
    ModelParams::new(0.5, 1.0, 0.25 * mu).unwrap()
}

fn closed_form_minus(mu: f64) -> f64 {
    (1.0 - (1.0 - 12.0 * mu).sqrt()) / (2.0 * mu)
}

#[test]
fn homoclinic_values() {
    assert_eq!(fast_homoclinic(0.0, 3.0), (0.5, 0.0));
    let (v, q) = fast_homoclinic(80.0, 2.0);
    assert!(v.abs() < 1e-30 && q.abs() < 1e-30);
    assert_eq!(hamiltonian(0.0, 0.0, 4.0), 0.0);
    assert!(hamiltonian(1.0, 0.0, 1.5).abs() < 1e-15);
    // q is the derivative of v
    let h = 1e-5;
    for xi in [-3.0, -0.5, 0.7, 4.0] {
        let d = (fast_homoclinic(xi + h, 2.5).0 - fast_homoclinic(xi - h, 2.5).0) / (2.0 * h);
        assert!((d - fast_homoclinic(xi, 2.5).1).abs() < 1e-9);
    }
}

#[test]
fn homoclinic_lies_on_zero_level_set() {
    for k in 0..10 {
        let u0 = 0.5 + 0.7 * k as f64;
        for i in 0..=400 {
            let xi = -20.0 + 0.1 * i as f64;
            let (v, q) = fast_homoclinic(xi, u0);
            assert!(hamiltonian(v, q, u0).abs() <= 1e-10);
        }
    }
}

#[test]
fn takeoff_touchdown_curves() {
    assert!((takeoff_touchdown(3.0, 0.1, Crossing::TouchDown).unwrap() - 0.1).abs() < 1e-15);
    assert!((takeoff_touchdown(3.0, 0.1, Crossing::TakeOff).unwrap() + 0.1).abs() < 1e-15);
    assert!(takeoff_touchdown(1e12, 0.1, Crossing::TouchDown).unwrap() < 1e-12);
    assert!(matches!(takeoff_touchdown(0.0, 0.1, Crossing::TakeOff), Err(PulseError::OutsideDomain(_))));
}

#[test]
fn amplitude_roots() {
    let r = compute_u0(1.0, -1.0, 1.0 / 12.0).unwrap();
    assert_eq!(r.status, U0Status::DoubleRoot);
    assert!((r.minus.unwrap() - 6.0).abs() < 1e-12 && (r.plus.unwrap() - 6.0).abs() < 1e-12);
    let r = compute_u0(1.0, -1.0, 0.05).unwrap();
    assert!((r.minus.unwrap() - (1.0 - 0.4f64.sqrt()) / 0.1).abs() < 1e-12);
    assert!((r.minus.unwrap() - 3.6754).abs() < 1e-4);
    for mu in [1e-4, 1e-5] {
        let u = compute_u0(1.0, -1.0, mu).unwrap().minus.unwrap();
        assert!((u - 3.0 - 9.0 * mu).abs() < 60.0 * mu * mu, "{mu}: {u}");
    }
    let r = compute_u0(1.0, -1.0, 0.1).unwrap();
    assert_eq!(r.status, U0Status::NoRealRoots);
    assert!(r.minus.is_none());
    assert!(compute_u0(1.0, 0.5, 0.01).is_err());
}

#[test]
fn roots_satisfy_vieta() {
    for &(ub, cs, mu) in &[(1.0, -1.0, 0.01), (0.8, -1.4, 0.02), (1.2, -0.7, 0.001)] {
        let r = compute_u0(ub, cs, mu).unwrap();
        let (a, b) = (r.minus.unwrap(), r.plus.unwrap());
        assert!(((a + b) - ub / mu).abs() < 1e-10 * ub / mu);
        assert!((a * b + 3.0 / (mu * cs)).abs() < 1e-10 * (3.0 / (mu * cs)).abs());
        assert!(a < b);
    }
}

#[test]
fn minus_root_increases_with_mu() {
    let mut prev = 0.0;
    for i in 1..80 {
        let mu = i as f64 / 1000.0;
        let u = compute_u0(1.0, -1.0, mu).unwrap().minus.unwrap();
        assert!(u > prev);
        prev = u;
    }
}

#[test]
fn flat_pipeline_matches_closed_form() {
    for mu in [0.01, 0.05, 1.0 / 12.0 - 1e-6] {
        let p = params_for_mu(mu);
        let mu_p = derive_scales(&p).mu;
        let r = existence_check(&Terrain::flat(), &p).unwrap();
        assert!(r.exists);
        let u = r.roots.unwrap().minus.unwrap();
        let expect = closed_form_minus(mu_p);
        assert!((u - expect).abs() <= 1e-8, "mu {mu}: {u} vs {expect}");
    }
    let r = existence_check(&Terrain::flat(), &params_for_mu(1.0 / 12.0)).unwrap();
    let roots = r.roots.unwrap();
    assert!((roots.minus.unwrap() - 6.0).abs() < 1e-8 && (roots.plus.unwrap() - 6.0).abs() < 1e-8);
}

#[test]
fn existence_conditions() {
    let r = existence_check(&Terrain::flat(), &params_for_mu(0.1)).unwrap();
    assert!(r.positive_background && r.negative_slope && !r.positive_discriminant && !r.exists);
    assert_eq!(r.failure(), Some("u_b(0)^2 + 12 mu/C^s(0) <= 0"));
    let r = existence_check(&Terrain::lncosh(1.0).unwrap(), &params_for_mu(0.01)).unwrap();
    assert!(r.exists);
    assert!((r.cs0 + 2f64.sqrt()).abs() < 1e-6);
    let err = assemble_profile(&Terrain::flat(), &params_for_mu(0.1), Branch::Minus).unwrap_err();
    assert!(matches!(err, PulseError::NoPulse(_)));
}

#[test]
fn flat_profile() {
    let p = params_for_mu(0.05);
    let prof = assemble_profile(&Terrain::flat(), &p, Branch::Minus).unwrap();
    assert!((prof.u0 - 3.6754).abs() < 1e-4);
    let c = (prof.xi.len() - 1) / 2;
    assert!(prof.xi[c].abs() < 1e-12);
    assert!((prof.v[c] - 1.5 / prof.u0).abs() < 1e-10);
    assert!((prof.v[c] - 0.4081).abs() < 1e-4);
    // slow tails (1/mu)(1 - (1 - mu u0) e^{-|x|})
    let mu = prof.mu;
    for (x, u) in prof.slow_x.iter().zip(&prof.slow_u).step_by(211) {
        let expect = (1.0 - (1.0 - mu * prof.u0) * (-x.abs()).exp()) / mu;
        assert!((u - expect).abs() < 1e-6 * expect.abs().max(1.0), "{x}: {u} vs {expect}");
    }
}

#[test]
fn symmetric_profile_is_even() {
    let t = Terrain::gaussian(0.1, 1.0).unwrap();
    let prof = assemble_profile(&t, &params_for_mu(0.02), Branch::Minus).unwrap();
    let n = prof.xi.len();
    for i in (0..n / 2).step_by(37) {
        let j = n - 1 - i;
        assert!((prof.xi[i] + prof.xi[j]).abs() < 1e-9);
        assert!((prof.u[i] - prof.u[j]).abs() < 1e-8 * prof.u[i].abs().max(1.0));
        assert!((prof.v[i] - prof.v[j]).abs() < 1e-10);
        assert!((prof.p[i] + prof.p[j]).abs() < 1e-8 * prof.p[i].abs().max(1.0));
        assert!((prof.q[i] + prof.q[j]).abs() < 1e-10);
    }
}

#[test]
fn profile_csv_has_header() {
    let d = tempfile::tempdir().unwrap();
    let prof = assemble_profile(&Terrain::flat(), &params_for_mu(0.01), Branch::Minus).unwrap();
    let path = d.path().join("p.csv");
    prof.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().next(), Some("xi,u,p,v,q,x,U,V"));
}
