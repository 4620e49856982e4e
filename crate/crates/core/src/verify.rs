//! Checks of the identities, asymptotics and bounds a solution must obey.

use std::f64::consts::PI;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euclidean::{
    default_radii, neg_lap_u_integral, r_of_theta, w0_eval, AssembledSolution, RadialFunction,
    RadialProfile,
};
use crate::minimizer::{Functional, SolverConfig};
use crate::solution::{solve, SolutionRecord};
use crate::sphere::{beckner_gap, build_grid, SphereGrid, ZonalField, SPHERE_VOLUME};

/// Radii at which the integral identity for `-Δu` is tested.
pub const IDENTITY_RADII: [f64; 3] = [0.1, 1.0, 10.0];

/// Radius at which `Δu + 6a` is required to be small.
pub const LAPLACIAN_PROBE_RADIUS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySettings {
    /// Nodes of the grid used for volume and Pohozaev quadrature.
    pub check_grid_size: usize,
    pub beckner_samples: usize,
    pub beckner_degree: usize,
    pub beckner_grid_size: usize,
    pub beckner_seed: u64,
    pub tol_el_residual: f64,
    pub tol_volume: f64,
    pub tol_spherical_volume: f64,
    pub tol_pohozaev: f64,
    pub tol_alpha: f64,
    pub tol_laplacian: f64,
    pub tol_laplacian_spherical: f64,
    pub tol_integral: f64,
    pub tol_integral_spherical: f64,
    pub tol_beckner: f64,
    /// Bound on `|u(r)|/r²` over the outer tail for the spherical class.
    pub tol_growth: f64,
    pub tol_polynomial: f64,
    pub tol_spherical_spread: f64,
    pub tol_curvature: f64,
    /// Scalar curvature below this counts as unbounded from below.
    pub curvature_floor: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            check_grid_size: 1024,
            beckner_samples: 1000,
            beckner_degree: 16,
            beckner_grid_size: 128,
            beckner_seed: 0,
            tol_el_residual: 1e-8,
            tol_volume: 5e-3,
            tol_spherical_volume: 1e-6,
            tol_pohozaev: 1e-2,
            tol_alpha: 2e-2,
            tol_laplacian: 1e-2,
            tol_laplacian_spherical: 1e-3,
            tol_integral: 1e-2,
            tol_integral_spherical: 1e-3,
            tol_beckner: 1e-10,
            tol_growth: 1e-3,
            tol_polynomial: 1e-2,
            tol_spherical_spread: 1e-4,
            tol_curvature: 1e-6,
            curvature_floor: -10.0,
        }
    }
}

impl VerifySettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol_el_residual", self.tol_el_residual),
            ("tol_volume", self.tol_volume),
            ("tol_spherical_volume", self.tol_spherical_volume),
            ("tol_pohozaev", self.tol_pohozaev),
            ("tol_alpha", self.tol_alpha),
            ("tol_laplacian", self.tol_laplacian),
            ("tol_laplacian_spherical", self.tol_laplacian_spherical),
            ("tol_integral", self.tol_integral),
            ("tol_integral_spherical", self.tol_integral_spherical),
            ("tol_beckner", self.tol_beckner),
            ("tol_growth", self.tol_growth),
            ("tol_polynomial", self.tol_polynomial),
            ("tol_spherical_spread", self.tol_spherical_spread),
            ("tol_curvature", self.tol_curvature),
        ];
        for (key, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::config(key, format!("must be finite and > 0, got {value}")));
            }
        }
        if self.curvature_floor.is_nan() || self.curvature_floor >= 0.0 {
            return Err(Error::config(
                "curvature_floor",
                format!("must be negative, got {}", self.curvature_floor),
            ));
        }
        if self.check_grid_size < 2 {
            return Err(Error::config("check_grid_size", "must be >= 2"));
        }
        if self.beckner_degree < 1 {
            return Err(Error::config("beckner_degree", "must be >= 1"));
        }
        if self.beckner_grid_size <= self.beckner_degree {
            return Err(Error::config(
                "beckner_grid_size",
                format!("must exceed beckner_degree ({})", self.beckner_degree),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Absent when the quantity could not be computed or is not finite.
    pub measured: Option<f64>,
    pub reference: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

impl Check {
    fn new(name: &str, measured: f64, reference: f64, tolerance: f64, passed: bool) -> Self {
        Self {
            name: name.to_string(),
            measured: measured.is_finite().then_some(measured),
            reference,
            tolerance,
            passed,
            detail: (!measured.is_finite()).then(|| format!("measured {measured}")),
        }
    }

    /// `|measured - reference| <= tolerance`.
    pub fn within(name: &str, measured: f64, reference: f64, tolerance: f64) -> Self {
        let passed = (measured - reference).abs() <= tolerance;
        Self::new(name, measured, reference, tolerance, passed)
    }

    /// `measured <= bound`.
    pub fn at_most(name: &str, measured: f64, bound: f64) -> Self {
        Self::new(name, measured, bound, 0.0, measured <= bound)
    }

    /// `measured >= bound`.
    pub fn at_least(name: &str, measured: f64, bound: f64) -> Self {
        Self::new(name, measured, bound, 0.0, measured >= bound)
    }

    pub fn failed(name: &str, reason: impl ToString) -> Self {
        Self {
            name: name.to_string(),
            measured: None,
            reference: f64::NAN,
            tolerance: 0.0,
            passed: false,
            detail: Some(reason.to_string()),
        }
    }

    fn with_detail(mut self, detail: impl ToString) -> Self {
        self.detail = Some(detail.to_string());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Spherical,
    NonSpherical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub spherical_reference: bool,
    pub classification: Option<Classification>,
    pub spectral_tail_ratio: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn new(
        spherical_reference: bool,
        classification: Option<Classification>,
        spectral_tail_ratio: f64,
        checks: Vec<Check>,
    ) -> Self {
        let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
        Self {
            spherical_reference,
            classification,
            spectral_tail_ratio,
            checks,
            passed,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// `(α(α-2), (1/3π²) ∫ x·∇K e^{3w} dx)` with `α = 2(1-μ)`.
///
/// For `K = 2e^{-3a|x|²}`, `x·∇K e^{3w} = -12a|x|² e^{3u}`; the integral
/// is evaluated on S³ as `Σ_j w_j (-12a r_j²) e^{3(u - w₀)}(r_j)`.
pub fn pohozaev_terms(u: &AssembledSolution, grid: &SphereGrid) -> Result<(f64, f64)> {
    let alpha = 2.0 * (1.0 - u.mu());
    let a = u.gaussian_a();
    let mut sum = 0.0;
    for (&theta, &w) in grid.angles().iter().zip(grid.weights()) {
        let r = r_of_theta(theta);
        let density = (3.0 * (u.value(r) - w0_eval(r))).exp();
        sum += w * (-12.0 * a * r * r) * density;
    }
    if !sum.is_finite() {
        return Err(Error::Divergence(format!("Pohozaev integral is {sum}")));
    }
    Ok((alpha * (alpha - 2.0), sum / (3.0 * PI * PI)))
}

/// `|α(α-2) - (1/3π²) ∫ x·∇K e^{3w} dx|`.
pub fn pohozaev_defect(u: &AssembledSolution, grid: &SphereGrid) -> Result<f64> {
    let (lhs, rhs) = pohozaev_terms(u, grid)?;
    Ok((lhs - rhs).abs())
}

/// Least-squares slope `β` of `y ≈ β x + γ`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `α` from `v(r) = -α log r + o(log r)` over the tail window.
pub fn fit_alpha(profile: &RadialProfile) -> Result<f64> {
    let tail = profile.tail_indices();
    if tail.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 tail samples to fit alpha, got {}",
            tail.len()
        )));
    }
    let x: Vec<f64> = tail.iter().map(|&i| profile.radii[i].ln()).collect();
    let y: Vec<f64> = tail.iter().map(|&i| profile.v[i]).collect();
    Ok(-linear_fit(&x, &y).0)
}

/// Mean of `Δu` over the outermost quarter of the tail window.
pub fn laplacian_limit(profile: &RadialProfile) -> Result<f64> {
    let outer = profile.outer_tail_indices();
    if outer.is_empty() {
        return Err(Error::InvalidArgument("profile has no tail samples".into()));
    }
    Ok(outer.iter().map(|&i| profile.delta_u[i]).sum::<f64>() / outer.len() as f64)
}

/// `(passed, margin)` with `margin = 2π² - V`.
pub fn check_volume_bound(
    volume: f64,
    classification: Classification,
    settings: &VerifySettings,
) -> (bool, f64) {
    let margin = SPHERE_VOLUME - volume;
    let passed = match classification {
        Classification::NonSpherical => margin > 0.0,
        Classification::Spherical => margin.abs() <= settings.tol_spherical_volume * SPHERE_VOLUME,
    };
    (passed, margin)
}

/// The three tests of sphericality and their individual verdicts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalityCriteria {
    pub laplacian_limit: f64,
    pub growth: f64,
    pub min_curvature: f64,
    pub flat_laplacian: bool,
    pub subquadratic: bool,
    pub curvature_bounded: bool,
}

pub fn sphericality_criteria(
    profile: &RadialProfile,
    settings: &VerifySettings,
) -> Result<SphericalityCriteria> {
    let laplacian_limit = laplacian_limit(profile)?;
    let growth = profile
        .outer_tail_indices()
        .iter()
        .map(|&i| profile.u[i].abs() / (profile.radii[i] * profile.radii[i]))
        .fold(0.0, f64::max);
    let min_curvature = profile
        .scalar_curvature
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(SphericalityCriteria {
        laplacian_limit,
        growth,
        min_curvature,
        flat_laplacian: laplacian_limit.abs() <= settings.tol_laplacian_spherical,
        subquadratic: growth <= settings.tol_growth,
        curvature_bounded: min_curvature >= settings.curvature_floor,
    })
}

/// Spherical iff `Δu → 0`, `u = o(r²)` and `R` stays above the floor;
/// the three must agree.
pub fn classify_sphericality(
    profile: &RadialProfile,
    settings: &VerifySettings,
) -> Result<Classification> {
    let c = sphericality_criteria(profile, settings)?;
    match (c.flat_laplacian, c.subquadratic, c.curvature_bounded) {
        (true, true, true) => Ok(Classification::Spherical),
        (false, false, false) => Ok(Classification::NonSpherical),
        _ => Err(Error::Inconsistent(format!(
            "lim Δu = {:.3e} ({}), max |u|/r² = {:.3e} ({}), min R = {:.3e} ({})",
            c.laplacian_limit,
            c.flat_laplacian,
            c.growth,
            c.subquadratic,
            c.min_curvature,
            c.curvature_bounded
        ))),
    }
}

/// `max_r |(-Δu(r)) - (1/π²)∫ e^{3u(y)}|x-y|^{-2} dy - 6a| / |Δu(r)|`.
pub fn integral_equation_residual(u: &AssembledSolution, radii: &[f64]) -> Result<f64> {
    let a_int = 6.0 * u.gaussian_a();
    let mut worst: f64 = 0.0;
    for &r in radii {
        let lap = u.laplacian(r);
        let rhs = neg_lap_u_integral(u, r, a_int)?;
        worst = worst.max((-lap - rhs).abs() / lap.abs());
    }
    Ok(worst)
}

/// `(a_fit, c_fit)` in `u - v ≈ -a_fit r² + c_fit`.
pub fn polynomial_fit(profile: &RadialProfile) -> (f64, f64) {
    let x: Vec<f64> = profile.radii.iter().map(|r| -r * r).collect();
    let y: Vec<f64> = profile.u.iter().zip(&profile.v).map(|(u, v)| u - v).collect();
    linear_fit(&x, &y)
}

/// Sampled standard deviation of `u - v`.
pub fn polynomial_spread(profile: &RadialProfile) -> f64 {
    let y: Vec<f64> = profile.u.iter().zip(&profile.v).map(|(u, v)| u - v).collect();
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    (y.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt()
}

/// Smallest Beckner gap over seeded random fields with `‖c‖ ≤ 1`.
///
/// Each sample draws a direction uniformly from the cube and a norm
/// uniformly from `[0, 1]`.
pub fn beckner_sweep(settings: &VerifySettings) -> Result<f64> {
    let grid = build_grid(settings.beckner_grid_size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.beckner_seed);
    let n = settings.beckner_degree;
    let mut worst = f64::INFINITY;
    for _ in 0..settings.beckner_samples {
        let mut coeffs: Vec<f64> = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        let radius: f64 = rng.random_range(0.0..=1.0);
        if norm > 0.0 {
            coeffs.iter_mut().for_each(|c| *c *= radius / norm);
        }
        worst = worst.min(beckner_gap(&ZonalField::new(coeffs)?, &grid)?);
    }
    Ok(worst)
}

fn attempt(name: &str, result: Result<Check>) -> Check {
    result.unwrap_or_else(|err| Check::failed(name, err))
}

/// Runs every check on a record and aggregates the verdicts.
pub fn verify_record(record: &SolutionRecord) -> VerificationReport {
    let settings = &record.settings;
    let spherical = record.is_spherical_reference();
    let mu = record.config.mu;
    let a = record.config.gaussian_a;
    let u = record.solution();
    let alpha_expected = record.expected_alpha();
    let volume_expected = (1.0 - mu) * SPHERE_VOLUME;
    let mut checks = Vec::new();

    checks.push(attempt("el_residual", (|| {
        let functional = Functional::from_config(&record.config)?;
        let residual = functional.residual(&record.coefficients)?;
        Ok(Check::at_most("el_residual", residual, settings.tol_el_residual))
    })()));

    checks.push(attempt("mass_normalization", (|| {
        let functional = Functional::from_config(&record.config)?;
        let log_mass = functional.log_mass(&record.coefficients)?;
        let target = functional.target_mass().ln();
        Ok(Check::within("mass_normalization", log_mass, target, 1e-10))
    })()));

    let check_grid = build_grid(settings.check_grid_size);
    let volume = check_grid
        .as_ref()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
        .and_then(|grid| crate::euclidean::volume(&u, grid));
    checks.push(match &volume {
        Ok(v) => {
            let tol = if spherical {
                settings.tol_spherical_volume
            } else {
                settings.tol_volume
            };
            Check::within("volume_identity", *v, volume_expected, tol * volume_expected)
        }
        Err(err) => Check::failed("volume_identity", err),
    });

    checks.push(attempt("pohozaev", (|| {
        let grid = build_grid(settings.check_grid_size)?;
        let (lhs, rhs) = pohozaev_terms(&u, &grid)?;
        let scale = (4.0 * mu * (1.0 - mu)).max(0.1);
        Ok(Check::within("pohozaev", rhs, lhs, settings.tol_pohozaev * scale))
    })()));

    let profile = RadialProfile::build(&u, &default_radii());
    let (profile, classification) = match profile {
        Ok(p) => {
            let classification = classify_sphericality(&p, settings);
            (Some(p), Some(classification))
        }
        Err(err) => {
            checks.push(Check::failed("profile", err));
            (None, None)
        }
    };

    if let Some(p) = &profile {
        checks.push(attempt("alpha_fit", fit_alpha(p).map(|fit| {
            Check::within("alpha_fit", fit, alpha_expected, settings.tol_alpha * alpha_expected)
        })));

        let scale = (6.0 * a).max(1.0);
        checks.push(Check::within(
            "laplacian_at_100",
            u.laplacian(LAPLACIAN_PROBE_RADIUS),
            -6.0 * a,
            settings.tol_laplacian * scale,
        ));
        checks.push(attempt("laplacian_limit", laplacian_limit(p).map(|lim| {
            if spherical {
                Check::within("laplacian_limit", lim, 0.0, settings.tol_laplacian_spherical)
            } else {
                Check::within("laplacian_limit", lim, -6.0 * a, settings.tol_laplacian * scale)
            }
        })));

        if spherical {
            checks.push(Check::at_most(
                "polynomial_part",
                polynomial_spread(p),
                settings.tol_spherical_spread,
            ));
            let worst = p
                .scalar_curvature
                .iter()
                .map(|r| (r - 6.0).abs())
                .fold(0.0, f64::max);
            checks.push(Check::at_most("scalar_curvature", worst, settings.tol_curvature));
        } else {
            let (a_fit, c_fit) = polynomial_fit(p);
            let tol = settings.tol_polynomial * a.max(1e-4);
            let check = Check::within("polynomial_part", a_fit, a, tol)
                .with_detail(format!("a_fit = {a_fit:.12e}, c_fit = {c_fit:.12e}"));
            checks.push(Check {
                passed: check.passed && a_fit >= -1e-6,
                ..check
            });
            let tail = p.tail_indices();
            let tail_r: Vec<f64> = tail.iter().map(|&i| p.scalar_curvature[i]).collect();
            let last = tail_r.last().copied().unwrap_or(f64::NAN);
            let decreasing = tail_r.windows(2).all(|w| w[1] <= w[0]);
            let check = Check::at_most("scalar_curvature", last, settings.curvature_floor);
            checks.push(Check {
                passed: check.passed && decreasing,
                ..check.with_detail(format!(
                    "R at r = {:.1e} is {last:e}; decreasing over tail: {decreasing}",
                    p.radii.last().copied().unwrap_or(f64::NAN)
                ))
            });
        }
    }

    let tol_integral = if spherical {
        settings.tol_integral_spherical
    } else {
        settings.tol_integral
    };
    checks.push(attempt("integral_identity", integral_equation_residual(&u, &IDENTITY_RADII)
        .map(|res| Check::at_most("integral_identity", res, tol_integral))));

    let classification = match classification {
        Some(Ok(class)) => {
            let expected = if spherical {
                Classification::Spherical
            } else {
                Classification::NonSpherical
            };
            checks.push(
                Check::new("classification", 0.0, 0.0, 0.0, class == expected)
                    .with_detail(format!("{class:?}, expected {expected:?}")),
            );
            if let Ok(v) = &volume {
                let (passed, margin) = check_volume_bound(*v, class, settings);
                checks.push(Check::new("volume_bound", margin, 0.0, 0.0, passed));
            }
            Some(class)
        }
        Some(Err(err)) => {
            checks.push(Check::failed("classification", err));
            None
        }
        None => None,
    };

    checks.push(attempt("beckner_solution", (|| {
        let grid = build_grid(record.config.grid_size)?;
        let gap = beckner_gap(&record.coefficients, &grid)?;
        Ok(Check::at_least("beckner_solution", gap, -settings.tol_beckner))
    })()));
    checks.push(attempt("beckner_sweep", beckner_sweep(settings)
        .map(|gap| Check::at_least("beckner_sweep", gap, -settings.tol_beckner))));

    if !record.converged {
        checks.push(Check::failed("converged", "descent stopped before the gradient tolerance"));
    }

    let report = VerificationReport::new(spherical, classification, record.spectral_tail_ratio, checks);
    for check in report.checks.iter().filter(|c| !c.passed) {
        warn!("check {} failed: {:?}", check.name, check);
    }
    report
}

/// Solves with `config` and verifies the result.
pub fn run_full_report(config: &SolverConfig, settings: &VerifySettings) -> Result<VerificationReport> {
    let record = solve(config, settings)?;
    Ok(verify_record(&record))
}
