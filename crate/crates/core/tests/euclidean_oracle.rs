mod oracle;

use std::f64::consts::PI;

use qcurv::euclidean::{
    assemble_u, compute_v, default_radii, inv_sq_kernel_mean, log_kernel_mean, log_spaced,
    neg_lap_u_integral, scalar_curvature, volume, RadialFunction, RadialProfile,
    SphericalSolution,
};
use qcurv::minimizer::SolverConfig;
use qcurv::solution::{solve, SolutionRecord};
use qcurv::sphere::{build_grid, SPHERE_VOLUME};
use qcurv::verify::{
    integral_equation_residual, laplacian_limit, polynomial_fit, VerifySettings, IDENTITY_RADII,
};

fn constructed(mu: f64, a: f64) -> SolutionRecord {
    solve(&SolverConfig::with_mu_a(mu, a), &VerifySettings::default()).unwrap()
}

#[test]
fn derivatives_match_central_differences() {
    let record = constructed(0.5, 1.0);
    let u = record.solution();
    for r in [0.5, 2.0, 10.0] {
        let jet = u.jet(r);
        let h = 1e-4 * r;
        let (d1, d2) = oracle::derivatives(|s| u.value(s), r, h);
        assert!((jet.d1 - d1).abs() <= 1e-6 * jet.d1.abs(), "u'({r}) = {} vs {d1}", jet.d1);
        assert!((jet.d2 - d2).abs() <= 1e-5 * jet.d2.abs().max(1.0), "u''({r}) = {} vs {d2}", jet.d2);
    }
}

#[test]
fn laplacian_at_origin_is_limit() {
    let u = constructed(0.5, 1.0).solution();
    let near = u.laplacian(1e-5);
    assert!((u.laplacian(0.0) - near).abs() < 1e-6);
}

#[test]
fn bubble_coefficients_reproduce_bubble() {
    for lambda in [0.5, 2.0] {
        let record = SolutionRecord::spherical_reference(lambda, 64, 256, VerifySettings::default()).unwrap();
        let u = record.solution();
        assert!((u.value(0.0) - (2.0 * lambda).ln()).abs() < 1e-10);
        for r in [0.3, 1.0, 7.0, 40.0] {
            let exact = (2.0 * lambda / (1.0 + lambda * lambda * r * r)).ln();
            assert!((u.value(r) - exact).abs() < 1e-10, "λ = {lambda}, r = {r}");
        }
    }
}

#[test]
fn logarithmic_correction_is_bounded() {
    for mu in [0.25, 0.5, 0.75] {
        let a = 1.0;
        let u = constructed(mu, a).solution();
        let rest: Vec<f64> = log_spaced(1e2, 1e4, 20)
            .into_iter()
            .map(|r| u.value(r) + a * r * r + 2.0 * (1.0 - mu) * r.ln())
            .collect();
        let spread = rest.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - rest.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-2, "mu = {mu}: spread {spread}");
    }
}

#[test]
fn volume_matches_direct_radial_quadrature() {
    let grid = build_grid(1024).unwrap();
    let u = constructed(0.5, 1.0).solution();
    let v = volume(&u, &grid).unwrap();
    let direct = PI * PI * oracle::radial_integral(|s| u.value(s), |_| 1.0, None);
    assert!((v - direct).abs() < 1e-9 * direct);
    assert!((v - PI * PI).abs() < 1e-9);
    for lambda in [1.0, 2.0] {
        let bubble = SphericalSolution::new(lambda).unwrap();
        assert!((volume(&bubble, &grid).unwrap() - SPHERE_VOLUME).abs() < 1e-6 * SPHERE_VOLUME);
    }
}

#[test]
fn kernel_means_match_alternative_closed_forms() {
    let values = [0.0, 0.01, 0.3, 0.99, 1.0, 1.01, 2.0, 50.0, 1e4];
    for &r in &values {
        for &s in &values {
            if r == s {
                continue;
            }
            if r > 0.0 || s > 0.0 {
                let lib = log_kernel_mean(r, s).unwrap();
                let alt = oracle::log_mean(r, s);
                assert!((lib - alt).abs() <= 1e-9 * lib.abs().max(1.0), "L({r}, {s}) = {lib} vs {alt}");
                assert_eq!(lib, log_kernel_mean(s, r).unwrap());
            }
            let lib = inv_sq_kernel_mean(r, s).unwrap();
            let alt = oracle::inv_sq_mean(r, s);
            assert!((lib - alt).abs() <= 1e-9 * lib, "Q({r}, {s}) = {lib} vs {alt}");
            assert_eq!(lib, inv_sq_kernel_mean(s, r).unwrap());
        }
    }
}

#[test]
fn kernel_means_match_surface_quadrature_on_axis_examples() {
    let x = [0.0, 0.6, 0.8];
    let brute_log = oracle::surface_mean(x, 2.0, f64::ln);
    assert!((log_kernel_mean(1.0, 2.0).unwrap() - brute_log).abs() < 1e-8);
    assert!((brute_log - (9.0 * 3f64.ln() / 8.0 - 0.5)).abs() < 1e-8);
    let brute_inv = oracle::surface_mean(x, 2.0, |d| 1.0 / (d * d));
    assert!((inv_sq_kernel_mean(1.0, 2.0).unwrap() - brute_inv).abs() < 1e-8);
    assert!((brute_inv - 3f64.ln() / 4.0).abs() < 1e-8);
}

#[test]
fn v_matches_quadrature_oracle() {
    let u = constructed(0.5, 1.0).solution();
    let radii = [0.05, 0.7, 3.0, 30.0, 3000.0];
    let v = compute_v(&u, &radii).unwrap();
    for (&r, &vr) in radii.iter().zip(&v) {
        let expected = oracle::radial_integral(|s| u.value(s), |s| s.ln() - oracle::log_mean(r, s), Some(r));
        assert!((vr - expected).abs() < 1e-7 * expected.abs().max(1.0), "v({r}) = {vr} vs {expected}");
    }
    let bubble = SphericalSolution::new(1.0).unwrap();
    let v = compute_v(&bubble, &[1.0]).unwrap()[0];
    assert!((v + 2f64.ln()).abs() < 1e-4);
}

#[test]
fn bubble_integral_identity_at_origin() {
    let bubble = SphericalSolution::new(1.0).unwrap();
    let rhs = neg_lap_u_integral(&bubble, 0.0, 0.0).unwrap();
    assert!((rhs - 6.0).abs() < 1e-4);
    assert!((-bubble.laplacian(0.0) - 6.0).abs() < 1e-14);
}

#[test]
fn integral_side_decays_like_alpha_over_r_squared() {
    let u = constructed(0.5, 1.0).solution();
    for r in [1e2, 1e3] {
        let rest = neg_lap_u_integral(&u, r, 0.0).unwrap();
        assert!((rest * r * r - 1.0).abs() < 1e-2 * (1e3 / r), "r = {r}: r²·rest = {}", rest * r * r);
    }
}

#[test]
fn identity_residual_stays_small_as_grid_refines() {
    for grid_size in [128, 256, 512] {
        let config = SolverConfig {
            grid_size,
            ..SolverConfig::default()
        };
        let record = solve(&config, &VerifySettings::default()).unwrap();
        let residual = integral_equation_residual(&record.solution(), &IDENTITY_RADII).unwrap();
        assert!(residual < 1e-8, "M = {grid_size}: {residual:e}");
    }
}

#[test]
fn scalar_curvature_examples() {
    let bubble = SphericalSolution::new(1.0).unwrap();
    assert!((scalar_curvature(&bubble, 0.0) - 6.0).abs() < 1e-14);
    assert!((scalar_curvature(&bubble, 5.0) - 6.0).abs() < 1e-6);
    let u = constructed(0.5, 1.0).solution();
    let tail: Vec<f64> = [2.0, 4.0, 8.0, 16.0].iter().map(|&r| scalar_curvature(&u, r)).collect();
    assert!(tail.windows(2).all(|w| w[1] < w[0]), "{tail:?}");
    assert!(tail[3] < -1e6);
}

#[test]
fn laplacian_tends_to_six_a() {
    for a in [0.5, 1.0, 2.0] {
        let record = constructed(0.5, a);
        let u = record.solution();
        assert!((u.laplacian(100.0) + 6.0 * a).abs() <= 1e-3, "a = {a}");
        let profile = RadialProfile::build(&u, &default_radii()).unwrap();
        assert!((laplacian_limit(&profile).unwrap() + 6.0 * a).abs() <= 1e-2);
        let (a_fit, _) = polynomial_fit(&profile);
        assert!((a_fit - a).abs() <= 1e-2 * a, "a = {a}: a_fit = {a_fit}");
    }
}

#[test]
fn assembled_zero_field_matches_w0_closed_form() {
    let u = assemble_u(&qcurv::sphere::ZonalField::zeros(8), 0.3, 0.0);
    for r in [0.0f64, 0.5, 4.0] {
        let expected = 0.7 * (2f64.ln() - (1.0 + r * r).ln());
        assert!((u.value(r) - expected).abs() < 1e-14);
    }
}
