//! Flat `key = value` run configuration.
//!
//! Blank lines and text after `#` are ignored. Every key is optional and
//! unknown or repeated keys are rejected.

use std::collections::HashSet;
use std::fmt::{Display, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::minimizer::SolverConfig;
use crate::verify::VerifySettings;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub verify: VerifySettings,
    /// File names inside the `--out` directory.
    pub solution_file: String,
    pub profile_file: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            verify: VerifySettings::default(),
            solution_file: "solution.json".into(),
            profile_file: "profile.csv".into(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| Error::config(key, format!("cannot parse `{value}`: {e}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        let mut seen = HashSet::new();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(
                    line,
                    format!("line {}: expected `key = value`", number + 1),
                ));
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::config(key, "given more than once"));
            }
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        self.verify.validate()?;
        for (key, name) in [
            ("solution_file", &self.solution_file),
            ("profile_file", &self.profile_file),
        ] {
            if name.is_empty() {
                return Err(Error::config(key, "must not be empty"));
            }
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.solver;
        let v = &mut self.verify;
        match key {
            "mu" => s.mu = parse(key, value)?,
            "gaussian_a" => s.gaussian_a = parse(key, value)?,
            "degree_cap" => s.degree_cap = parse(key, value)?,
            "grid_size" => s.grid_size = parse(key, value)?,
            "tol_grad" => s.tol_grad = parse(key, value)?,
            "max_iter" => s.max_iter = parse(key, value)?,
            "seed" => s.seed = parse(key, value)?,
            "random_starts" => s.random_starts = parse(key, value)?,
            "check_grid_size" => v.check_grid_size = parse(key, value)?,
            "beckner_samples" => v.beckner_samples = parse(key, value)?,
            "beckner_degree" => v.beckner_degree = parse(key, value)?,
            "beckner_grid_size" => v.beckner_grid_size = parse(key, value)?,
            "beckner_seed" => v.beckner_seed = parse(key, value)?,
            "tol_el_residual" => v.tol_el_residual = parse(key, value)?,
            "tol_volume" => v.tol_volume = parse(key, value)?,
            "tol_spherical_volume" => v.tol_spherical_volume = parse(key, value)?,
            "tol_pohozaev" => v.tol_pohozaev = parse(key, value)?,
            "tol_alpha" => v.tol_alpha = parse(key, value)?,
            "tol_laplacian" => v.tol_laplacian = parse(key, value)?,
            "tol_laplacian_spherical" => v.tol_laplacian_spherical = parse(key, value)?,
            "tol_integral" => v.tol_integral = parse(key, value)?,
            "tol_integral_spherical" => v.tol_integral_spherical = parse(key, value)?,
            "tol_beckner" => v.tol_beckner = parse(key, value)?,
            "tol_growth" => v.tol_growth = parse(key, value)?,
            "tol_polynomial" => v.tol_polynomial = parse(key, value)?,
            "tol_spherical_spread" => v.tol_spherical_spread = parse(key, value)?,
            "tol_curvature" => v.tol_curvature = parse(key, value)?,
            "curvature_floor" => v.curvature_floor = parse(key, value)?,
            "solution_file" => self.solution_file = value.to_string(),
            "profile_file" => self.profile_file = value.to_string(),
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Serializes every key; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let s = &self.solver;
        let v = &self.verify;
        let mut out = String::new();
        let mut put = |key: &str, value: &dyn Display| {
            let _ = writeln!(out, "{key} = {value}");
        };
        put("mu", &s.mu);
        put("gaussian_a", &s.gaussian_a);
        put("degree_cap", &s.degree_cap);
        put("grid_size", &s.grid_size);
        put("tol_grad", &s.tol_grad);
        put("max_iter", &s.max_iter);
        put("seed", &s.seed);
        put("random_starts", &s.random_starts);
        put("check_grid_size", &v.check_grid_size);
        put("beckner_samples", &v.beckner_samples);
        put("beckner_degree", &v.beckner_degree);
        put("beckner_grid_size", &v.beckner_grid_size);
        put("beckner_seed", &v.beckner_seed);
        put("tol_el_residual", &v.tol_el_residual);
        put("tol_volume", &v.tol_volume);
        put("tol_spherical_volume", &v.tol_spherical_volume);
        put("tol_pohozaev", &v.tol_pohozaev);
        put("tol_alpha", &v.tol_alpha);
        put("tol_laplacian", &v.tol_laplacian);
        put("tol_laplacian_spherical", &v.tol_laplacian_spherical);
        put("tol_integral", &v.tol_integral);
        put("tol_integral_spherical", &v.tol_integral_spherical);
        put("tol_beckner", &v.tol_beckner);
        put("tol_growth", &v.tol_growth);
        put("tol_polynomial", &v.tol_polynomial);
        put("tol_spherical_spread", &v.tol_spherical_spread);
        put("tol_curvature", &v.tol_curvature);
        put("curvature_floor", &v.curvature_floor);
        put("solution_file", &self.solution_file);
        put("profile_file", &self.profile_file);
        out
    }
}
