//! From a minimizer to a self-contained solution record.

use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euclidean::{alpha, assemble_u, volume, AssembledSolution};
use crate::minimizer::{minimize, Functional, SolverConfig};
use crate::sphere::{build_grid, zonal_analyze, ZonalField};
use crate::verify::{pohozaev_terms, VerifySettings};

/// Tail ratios above this suggest the degree cap is too small.
pub const TAIL_RATIO_WARNING: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionRecord {
    pub config: SolverConfig,
    pub settings: VerifySettings,
    /// Set for the bubble `w_{0,λ}` built by projection instead of descent.
    pub spherical_lambda: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Normalized `ũ`: zonal coefficients on S³.
    pub coefficients: ZonalField,
    /// Constant added to the zero-mean minimizer by normalization.
    pub normalization: f64,
    pub j_value: f64,
    pub el_residual: f64,
    pub spectral_tail_ratio: f64,
    pub volume: Option<f64>,
    pub alpha: Option<f64>,
    pub pohozaev_lhs: Option<f64>,
    pub pohozaev_rhs: Option<f64>,
}

impl SolutionRecord {
    pub fn solution(&self) -> AssembledSolution {
        assemble_u(&self.coefficients, self.config.mu, self.config.gaussian_a)
    }

    pub fn is_spherical_reference(&self) -> bool {
        self.spherical_lambda.is_some()
    }

    /// `α = 2(1-μ)`, the value the volume identity predicts.
    pub fn expected_alpha(&self) -> f64 {
        2.0 * (1.0 - self.config.mu)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    fn assemble(
        config: SolverConfig,
        settings: VerifySettings,
        spherical_lambda: Option<f64>,
        converged: bool,
        iterations: usize,
        zero_mean: &ZonalField,
    ) -> Result<Self> {
        let functional = Functional::from_config(&config)?;
        let (coefficients, normalization) = functional.normalize(zero_mean)?;
        let j_value = functional.value(&coefficients)?;
        let el_residual = functional.residual(&coefficients)?;
        let spectral_tail_ratio = zero_mean.tail_ratio();
        if spectral_tail_ratio > TAIL_RATIO_WARNING {
            warn!(
                "spectral tail ratio {spectral_tail_ratio:.2e} exceeds {TAIL_RATIO_WARNING:.0e}; \
                 consider a larger degree_cap"
            );
        }

        let u = assemble_u(&coefficients, config.mu, config.gaussian_a);
        let check_grid = build_grid(settings.check_grid_size)?;
        let (volume, alpha, pohozaev_lhs, pohozaev_rhs) = match volume(&u, &check_grid) {
            Ok(v) => {
                let (lhs, rhs) = pohozaev_terms(&u, &check_grid)?;
                (Some(v), Some(alpha(v)), Some(lhs), Some(rhs))
            }
            Err(err) => {
                warn!("volume unavailable: {err}");
                (None, None, None, None)
            }
        };

        Ok(Self {
            config,
            settings,
            spherical_lambda,
            converged,
            iterations,
            coefficients,
            normalization,
            j_value,
            el_residual,
            spectral_tail_ratio,
            volume,
            alpha,
            pohozaev_lhs,
            pohozaev_rhs,
        })
    }

    /// The bubble `w_{0,λ} = log(2λ/(1+λ²r²))` as a record with `μ = a = 0`.
    ///
    /// Its pull-back `log(2λ / (1 + t + λ²(1-t)))`, `t = cos θ`, is
    /// projected onto degrees `0..=degree_cap`.
    pub fn spherical_reference(
        lambda: f64,
        degree_cap: usize,
        grid_size: usize,
        settings: VerifySettings,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
        }
        let config = SolverConfig {
            mu: 0.0,
            gaussian_a: 0.0,
            degree_cap,
            grid_size,
            ..SolverConfig::default()
        };
        config.validate_functional()?;
        settings.validate()?;
        let grid = build_grid(grid_size)?;
        let values: Vec<f64> = grid
            .cosines()
            .iter()
            .map(|&t| (2.0 * lambda / (1.0 + t + lambda * lambda * (1.0 - t))).ln())
            .collect();
        let projected = zonal_analyze(&values, &grid, degree_cap)?;
        Self::assemble(config, settings, Some(lambda), true, 0, &projected.without_mean())
    }
}

/// Minimizes, normalizes and measures. A run that stops short of the
/// gradient tolerance still yields a record, with `converged = false`.
pub fn solve(config: &SolverConfig, settings: &VerifySettings) -> Result<SolutionRecord> {
    settings.validate()?;
    let (field, converged, iterations) = match minimize(config) {
        Ok(run) => {
            info!(
                "converged in {} iterations, J = {:.12}, residual {:.2e}",
                run.iterations, run.value, run.residual
            );
            (run.field, true, run.iterations)
        }
        Err(Error::ConvergenceFailure {
            iterations,
            residual,
            last,
        }) => {
            warn!("no convergence after {iterations} iterations (residual {residual:.2e})");
            (*last, false, iterations)
        }
        Err(err) => return Err(err),
    };
    SolutionRecord::assemble(*config, *settings, None, converged, iterations, &field)
}
