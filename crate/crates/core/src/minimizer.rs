//! Minimization of the mean-field functional on S³.
//!
//! For `K(x) = 2 e^{-3a|x|²}` pulled back to S³ and the weighted measure
//! `dV_μ = e^{-3μ w₀∘π} dV₀`, the functional is
//!
//! ```text
//! J(w) = ∫ ( ½|(P³)^{1/2} w|² + 2(1-μ) w ) dV₀ - (1-μ)(4π²/3) log ∫ K̃ e^{3w} dV_μ
//! ```
//!
//! It is invariant under `w ↦ w + c`, so the descent runs on zero-mean
//! fields (`c_0 = 0`) and the constant is fixed afterwards by [`normalize`].
//! All exponential sums are formed in log space.

use std::f64::consts::PI;

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{
    log_weighted_exp_sum, p3_multiplier, BasisTable, SphereGrid, ZonalField, SPHERE_VOLUME,
};

/// Relative slack allowed when comparing successive values of `J`.
pub const VALUE_ROUNDING: f64 = 64.0 * f64::EPSILON;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Volume deficit: the constructed metric has volume `(1-μ)·2π²`.
    pub mu: f64,
    /// Coefficient `a` in `K(x) = 2 e^{-3a|x|²}`.
    pub gaussian_a: f64,
    pub degree_cap: usize,
    pub grid_size: usize,
    pub tol_grad: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Seeded random starts tried in addition to the zero start.
    pub random_starts: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu: 0.5,
            gaussian_a: 1.0,
            degree_cap: 64,
            grid_size: 256,
            tol_grad: 1e-10,
            max_iter: 10_000,
            seed: 0,
            random_starts: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_mu_a(mu: f64, gaussian_a: f64) -> Self {
        Self {
            mu,
            gaussian_a,
            ..Self::default()
        }
    }

    /// Checks every field; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::config("mu", format!("must lie in (0, 1), got {}", self.mu)));
        }
        self.validate_functional()?;
        if self.gaussian_a == 0.0 {
            warn!("gaussian_a = 0: constant K diagnostic run");
        }
        Ok(())
    }

    /// Like [`validate`](Self::validate) but also admits `mu = 0`, the
    /// spherical diagnostic case.
    pub(crate) fn validate_functional(&self) -> Result<()> {
        if !(self.mu >= 0.0 && self.mu < 1.0) {
            return Err(Error::config("mu", format!("must lie in [0, 1), got {}", self.mu)));
        }
        if !(self.gaussian_a >= 0.0 && self.gaussian_a.is_finite()) {
            return Err(Error::config(
                "gaussian_a",
                format!("must be finite and >= 0, got {}", self.gaussian_a),
            ));
        }
        if self.degree_cap < 1 {
            return Err(Error::config("degree_cap", "must be >= 1"));
        }
        if self.grid_size <= self.degree_cap {
            return Err(Error::config(
                "grid_size",
                format!(
                    "must exceed degree_cap ({}), got {}",
                    self.degree_cap, self.grid_size
                ),
            ));
        }
        if !(self.tol_grad > 0.0 && self.tol_grad.is_finite()) {
            return Err(Error::config("tol_grad", format!("must be > 0, got {}", self.tol_grad)));
        }
        if self.max_iter < 1 {
            return Err(Error::config("max_iter", "must be >= 1"));
        }
        Ok(())
    }
}

/// `log G(θ) = log( K̃(θ) e^{-3μ w₀(π(θ))} ) = log 2 - 3a tan²(θ/2) - 3μ log(1 + cos θ)`.
pub fn log_weight_kernel_at(theta: f64, mu: f64, gaussian_a: f64) -> f64 {
    let half = 0.5 * theta;
    let r = half.tan();
    // 1 + cos θ = 2cos²(θ/2), accurate near the south pole
    let one_plus_cos = 2.0 * half.cos().powi(2);
    let gauss = if gaussian_a == 0.0 { 0.0 } else { -3.0 * gaussian_a * r * r };
    let conformal = if mu == 0.0 { 0.0 } else { -3.0 * mu * one_plus_cos.ln() };
    std::f64::consts::LN_2 + gauss + conformal
}

/// Node values `G_j` of the combined weight `K̃ e^{-3μ w₀∘π}`.
pub fn weight_kernel(config: &SolverConfig, grid: &SphereGrid) -> Vec<f64> {
    grid.angles()
        .iter()
        .map(|&theta| log_weight_kernel_at(theta, config.mu, config.gaussian_a).exp())
        .collect()
}

/// `J`, its derivatives and the mass constraint for fixed `(μ, a)` on a grid.
#[derive(Debug, Clone)]
pub struct Functional {
    mu: f64,
    gaussian_a: f64,
    grid: SphereGrid,
    basis: BasisTable,
    /// `log(w_j G_j)`
    log_weights: Vec<f64>,
    multipliers: Vec<f64>,
}

struct MassSample {
    /// `w_j G_j e^{3w_j} / S`
    probabilities: Vec<f64>,
    log_mass: f64,
}

impl Functional {
    pub fn new(mu: f64, gaussian_a: f64, degree_cap: usize, grid: SphereGrid) -> Result<Self> {
        let basis = grid.basis_table(degree_cap)?;
        let log_weights = grid
            .angles()
            .iter()
            .zip(grid.weights())
            .map(|(&theta, &w)| w.ln() + log_weight_kernel_at(theta, mu, gaussian_a))
            .collect();
        Ok(Self {
            mu,
            gaussian_a,
            grid,
            basis,
            log_weights,
            multipliers: (0..=degree_cap).map(p3_multiplier).collect(),
        })
    }

    pub fn from_config(config: &SolverConfig) -> Result<Self> {
        config.validate_functional()?;
        Self::new(
            config.mu,
            config.gaussian_a,
            config.degree_cap,
            SphereGrid::new(config.grid_size)?,
        )
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn gaussian_a(&self) -> f64 {
        self.gaussian_a
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn degree_cap(&self) -> usize {
        self.basis.degree_cap()
    }

    /// `(1-μ)·4π²`, the target of the mass constraint.
    pub fn target_mass(&self) -> f64 {
        (1.0 - self.mu) * 4.0 * PI * PI
    }

    fn check_degree(&self, field: &ZonalField) -> Result<()> {
        if field.degree_cap() != self.degree_cap() {
            return Err(Error::InvalidArgument(format!(
                "field has degree cap {}, functional expects {}",
                field.degree_cap(),
                self.degree_cap()
            )));
        }
        Ok(())
    }

    fn sample(&self, field: &ZonalField) -> Result<MassSample> {
        self.check_degree(field)?;
        let exponents: Vec<f64> = self
            .basis
            .synthesize(field)
            .iter()
            .zip(&self.log_weights)
            .map(|(w, lg)| lg + 3.0 * w)
            .collect();
        let ones = vec![1.0; exponents.len()];
        let log_mass = log_weighted_exp_sum(&ones, &exponents)?;
        let probabilities = exponents.iter().map(|x| (x - log_mass).exp()).collect();
        Ok(MassSample {
            probabilities,
            log_mass,
        })
    }

    /// `log ∫ K̃ e^{3w} dV_μ`.
    pub fn log_mass(&self, field: &ZonalField) -> Result<f64> {
        Ok(self.sample(field)?.log_mass)
    }

    pub fn value(&self, field: &ZonalField) -> Result<f64> {
        let log_mass = self.log_mass(field)?;
        let c = field.coeffs();
        let quadratic: f64 = 0.5
            * c.iter()
                .zip(&self.multipliers)
                .map(|(c, d)| d * c * c)
                .sum::<f64>();
        // ∫ w dV₀ = c_0 √(2π²)
        let linear = 2.0 * (1.0 - self.mu) * c[0] * SPHERE_VOLUME.sqrt();
        Ok(quadratic + linear - self.target_mass() / 3.0 * log_mass)
    }

    /// Coefficient-space gradient on zero-mean fields; `g_0` is pinned to 0.
    pub fn gradient(&self, field: &ZonalField) -> Result<ZonalField> {
        let sample = self.sample(field)?;
        let moments = self.basis.project(&sample.probabilities);
        let scale = self.target_mass();
        let mut g: Vec<f64> = field
            .coeffs()
            .iter()
            .zip(&self.multipliers)
            .zip(&moments)
            .map(|((c, d), m)| d * c - scale * m)
            .collect();
        g[0] = 0.0;
        ZonalField::new(g)
    }

    /// Hessian of `J` restricted to degrees `1..=N`.
    pub fn hessian(&self, field: &ZonalField) -> Result<DMatrix<f64>> {
        let sample = self.sample(field)?;
        let n = self.degree_cap();
        let p = &sample.probabilities;
        let means: Vec<f64> = (1..=n)
            .map(|k| self.basis.row(k).iter().zip(p).map(|(y, p)| y * p).sum())
            .collect();
        let scale = 3.0 * self.target_mass();
        let mut h = DMatrix::zeros(n, n);
        for k in 1..=n {
            let yk = self.basis.row(k);
            for l in k..=n {
                let yl = self.basis.row(l);
                let second: f64 = yk.iter().zip(yl).zip(p).map(|((a, b), p)| a * b * p).sum();
                let cov = second - means[k - 1] * means[l - 1];
                let mut entry = -scale * cov;
                if k == l {
                    entry += self.multipliers[k];
                }
                h[(k - 1, l - 1)] = entry;
                h[(l - 1, k - 1)] = entry;
            }
        }
        Ok(h)
    }

    /// Discrete Euler–Lagrange residual `sup_{k≥1} |g_k|`.
    pub fn residual(&self, field: &ZonalField) -> Result<f64> {
        Ok(sup_norm(&self.gradient(field)?))
    }

    /// Adds the constant `C` that makes `∫ K̃ e^{3ũ} dV_μ = (1-μ)4π²`.
    pub fn normalize(&self, field: &ZonalField) -> Result<(ZonalField, f64)> {
        let log_mass = self.log_mass(field)?;
        let constant = (self.target_mass().ln() - log_mass) / 3.0;
        if !constant.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "normalization constant is {constant}"
            )));
        }
        Ok((field.shifted(constant), constant))
    }

    /// `C_obs` with `(μ/2)‖w‖²_{Ḣ^{3/2}} ≤ J(w) + C_obs` for zero-mean `w`,
    /// from Beckner's inequality and `G ≤ max_j G_j`.
    pub fn coercivity_constant(&self) -> f64 {
        let max_log_g = self
            .grid
            .angles()
            .iter()
            .map(|&t| log_weight_kernel_at(t, self.mu, self.gaussian_a))
            .fold(f64::NEG_INFINITY, f64::max);
        self.target_mass() / 3.0 * (SPHERE_VOLUME.ln() + max_log_g)
    }
}

fn sup_norm(field: &ZonalField) -> f64 {
    field.coeffs().iter().fold(0.0_f64, |m, g| m.max(g.abs()))
}

pub fn evaluate_j(field: &ZonalField, config: &SolverConfig, grid: &SphereGrid) -> Result<f64> {
    Functional::new(config.mu, config.gaussian_a, field.degree_cap(), grid.clone())?.value(field)
}

pub fn gradient_j(field: &ZonalField, config: &SolverConfig, grid: &SphereGrid) -> Result<ZonalField> {
    Functional::new(config.mu, config.gaussian_a, field.degree_cap(), grid.clone())?.gradient(field)
}

pub fn el_residual(field: &ZonalField, config: &SolverConfig, grid: &SphereGrid) -> Result<f64> {
    Functional::new(config.mu, config.gaussian_a, field.degree_cap(), grid.clone())?.residual(field)
}

pub fn normalize(
    field: &ZonalField,
    config: &SolverConfig,
    grid: &SphereGrid,
) -> Result<(ZonalField, f64)> {
    Functional::new(config.mu, config.gaussian_a, field.degree_cap(), grid.clone())?.normalize(field)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub value: f64,
    pub seminorm: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct Minimization {
    /// Zero-mean critical point.
    pub field: ZonalField,
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    /// One entry per accepted iterate, starting with the initial field.
    pub trace: Vec<TracePoint>,
    pub coercivity_constant: f64,
}

/// Runs the zero start plus `random_starts` seeded random starts and keeps
/// the lowest `J` (ties broken by residual).
pub fn minimize(config: &SolverConfig) -> Result<Minimization> {
    config.validate()?;
    let functional = Functional::from_config(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<Minimization> = None;
    let mut failure: Option<Error> = None;
    for start in 0..=config.random_starts {
        let initial = if start == 0 {
            ZonalField::zeros(config.degree_cap)
        } else {
            random_start(config.degree_cap, &mut rng)
        };
        match descend(&functional, initial, config.tol_grad, config.max_iter) {
            Ok(run) => {
                let better = match &best {
                    None => true,
                    Some(b) => {
                        run.value < b.value || (run.value == b.value && run.residual < b.residual)
                    }
                };
                if better {
                    best = Some(run);
                }
            }
            Err(err) => {
                debug!("start {start} failed: {err}");
                let replace = match (&failure, &err) {
                    (None, _) => true,
                    (
                        Some(Error::ConvergenceFailure { residual: old, .. }),
                        Error::ConvergenceFailure { residual: new, .. },
                    ) => new < old,
                    _ => false,
                };
                if replace {
                    failure = Some(err);
                }
            }
        }
    }
    match (best, failure) {
        (Some(run), _) => Ok(run),
        (None, Some(err)) => Err(err),
        (None, None) => unreachable!("at least one start is always run"),
    }
}

/// Zero-mean start with norm at most 0.1.
fn random_start(degree_cap: usize, rng: &mut ChaCha8Rng) -> ZonalField {
    let mut coeffs: Vec<f64> = (0..=degree_cap).map(|_| rng.random_range(-1.0..1.0)).collect();
    coeffs[0] = 0.0;
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let radius = 0.1 * rng.random_range(0.0..1.0);
    if norm > 0.0 {
        coeffs.iter_mut().for_each(|c| *c *= radius / norm);
    }
    ZonalField::new(coeffs).expect("finite random coefficients")
}

/// Damped Newton iteration on degrees `1..=N` with Armijo backtracking.
/// Falls back to the diagonally preconditioned gradient when the Hessian
/// is not positive definite.
pub fn descend(
    functional: &Functional,
    initial: ZonalField,
    tol_grad: f64,
    max_iter: usize,
) -> Result<Minimization> {
    let n = functional.degree_cap();
    let mut field = initial.without_mean();
    let mut value = functional.value(&field)?;
    let mut gradient = functional.gradient(&field)?;
    let mut residual = sup_norm(&gradient);
    let mut trace = vec![TracePoint {
        value,
        seminorm: crate::sphere::h32_seminorm(&field),
        residual,
    }];
    let mut iterations = 0;

    while residual > tol_grad {
        if iterations >= max_iter {
            return Err(Error::ConvergenceFailure {
                iterations,
                residual,
                last: Box::new(field),
            });
        }
        iterations += 1;

        let g = DVector::from_iterator(n, gradient.coeffs()[1..].iter().copied());
        let direction = match functional.hessian(&field)?.cholesky() {
            Some(chol) => -chol.solve(&g),
            None => {
                debug!("iteration {iterations}: Hessian not positive definite");
                DVector::from_iterator(
                    n,
                    (1..=n).map(|k| -g[k - 1] / (p3_multiplier(k) + 1.0)),
                )
            }
        };
        let slope = g.dot(&direction);

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut coeffs = field.coeffs().to_vec();
            for k in 1..=n {
                coeffs[k] += step * direction[k - 1];
            }
            let trial = ZonalField::new(coeffs)?;
            match functional.value(&trial) {
                Ok(trial_value) => {
                    let sufficient = trial_value <= value + ARMIJO * step * slope;
                    // near the optimum J only moves at rounding level; accept
                    // if the residual improves without J increasing beyond that
                    let rounding = trial_value <= value + VALUE_ROUNDING * value.abs().max(1.0);
                    if sufficient {
                        accepted = Some((trial, trial_value, None));
                        break;
                    }
                    if rounding {
                        let trial_gradient = functional.gradient(&trial)?;
                        if sup_norm(&trial_gradient) < residual {
                            accepted = Some((trial, trial_value, Some(trial_gradient)));
                            break;
                        }
                    }
                }
                Err(Error::Overflow { .. }) => {}
                Err(other) => return Err(other),
            }
            step *= 0.5;
        }

        let Some((next, next_value, next_gradient)) = accepted else {
            return Err(Error::ConvergenceFailure {
                iterations,
                residual,
                last: Box::new(field),
            });
        };
        field = next;
        value = next_value;
        gradient = match next_gradient {
            Some(g) => g,
            None => functional.gradient(&field)?,
        };
        residual = sup_norm(&gradient);
        trace.push(TracePoint {
            value,
            seminorm: crate::sphere::h32_seminorm(&field),
            residual,
        });
        debug!("iteration {iterations}: J = {value:.15e}, residual = {residual:.3e}, step = {step}");
    }

    Ok(Minimization {
        field,
        value,
        residual,
        iterations,
        trace,
        coercivity_constant: functional.coercivity_constant(),
    })
}
