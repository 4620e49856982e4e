//! Radial functions on R³ obtained from zonal fields on S³.
//!
//! Stereographic projection from the south pole sends the polar angle θ
//! to the radius `r = tan(θ/2)`; the round metric pulls back to
//! `e^{2w₀}|dx|²` with `w₀(x) = log(2/(1+|x|²))`, so `dV₀ = e^{3w₀} dx`.
//!
//! Three-dimensional integrals of radial densities against the kernels
//! `log|x-y|` and `|x-y|^{-2}` reduce to one-dimensional integrals of
//! their means over spheres `|y| = s`, which have closed forms.

use std::f64::consts::{LN_2, PI};
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{SphereGrid, ZonalField};

pub fn theta_of_r(r: f64) -> f64 {
    2.0 * r.atan()
}

pub fn r_of_theta(theta: f64) -> f64 {
    (0.5 * theta).tan()
}

/// `w₀(r) = log 2 - log(1 + r²)`.
pub fn w0_eval(r: f64) -> f64 {
    LN_2 - (r * r).ln_1p()
}

/// The spherical solution `log(2λ / (1 + λ²r²))` centred at the origin.
pub fn spherical_solution(r: f64, lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
    }
    Ok((2.0 * lambda).ln() - (lambda * lambda * r * r).ln_1p())
}

/// Value and first two radial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// A radial function `u(|x|)` on R³ with exact derivatives.
pub trait RadialFunction {
    fn jet(&self, r: f64) -> Jet;

    fn value(&self, r: f64) -> f64 {
        self.jet(r).value
    }

    /// `Δu = u'' + 2u'/r`, with `Δu(0) = 3u''(0)`.
    fn laplacian(&self, r: f64) -> f64 {
        let jet = self.jet(r);
        if r == 0.0 {
            3.0 * jet.d2
        } else {
            jet.d2 + 2.0 * jet.d1 / r
        }
    }
}

/// `w_{0,λ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalSolution {
    lambda: f64,
}

impl SphericalSolution {
    pub fn new(lambda: f64) -> Result<Self> {
        spherical_solution(0.0, lambda)?;
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl RadialFunction for SphericalSolution {
    fn jet(&self, r: f64) -> Jet {
        let l2 = self.lambda * self.lambda;
        let q = 1.0 / (1.0 + l2 * r * r);
        Jet {
            value: (2.0 * self.lambda).ln() - (l2 * r * r).ln_1p(),
            d1: -2.0 * l2 * r * q,
            d2: -2.0 * l2 * (1.0 - l2 * r * r) * q * q,
        }
    }
}

/// `u(x) = ũ(π⁻¹(x)) + (1-μ) w₀(x) - a|x|²` for a normalized zonal `ũ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledSolution {
    field: ZonalField,
    mu: f64,
    gaussian_a: f64,
}

impl AssembledSolution {
    pub fn new(field: ZonalField, mu: f64, gaussian_a: f64) -> Self {
        Self {
            field,
            mu,
            gaussian_a,
        }
    }

    pub fn field(&self) -> &ZonalField {
        &self.field
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn gaussian_a(&self) -> f64 {
        self.gaussian_a
    }

    /// `w = ũ∘π⁻¹ + (1-μ)w₀`, the solution of the prescribed-K problem.
    pub fn w_value(&self, r: f64) -> f64 {
        self.value(r) + self.gaussian_a * r * r
    }
}

/// `u(r) = assemble_u(ũ, config)(r)`.
pub fn assemble_u(field: &ZonalField, mu: f64, gaussian_a: f64) -> AssembledSolution {
    AssembledSolution::new(field.clone(), mu, gaussian_a)
}

impl RadialFunction for AssembledSolution {
    fn jet(&self, r: f64) -> Jet {
        // t = cos θ = (1 - r²)/(1 + r²) and its r-derivatives
        let q = 1.0 / (1.0 + r * r);
        let t = 2.0 * q - 1.0;
        let t1 = -4.0 * r * q * q;
        let t2 = (12.0 * r * r - 4.0) * q * q * q;
        let [f, ft, ftt] = self.field.jet_at(t);

        let w0 = w0_eval(r);
        let w0_1 = -2.0 * r * q;
        let w0_2 = -2.0 * (1.0 - r * r) * q * q;

        let m = 1.0 - self.mu;
        let a = self.gaussian_a;
        Jet {
            value: f + m * w0 - a * r * r,
            d1: ft * t1 + m * w0_1 - 2.0 * a * r,
            d2: ftt * t1 * t1 + ft * t2 + m * w0_2 - 2.0 * a,
        }
    }
}

/// `R_{g_u} = -2 e^{-2u} (2Δu + |∇u|²)`.
pub fn scalar_curvature(u: &impl RadialFunction, r: f64) -> f64 {
    let jet = u.jet(r);
    let laplacian = if r == 0.0 {
        3.0 * jet.d2
    } else {
        jet.d2 + 2.0 * jet.d1 / r
    };
    -2.0 * (-2.0 * jet.value).exp() * (2.0 * laplacian + jet.d1 * jet.d1)
}

/// `V = ∫_{R³} e^{3u} dx`, computed on S³ as `Σ_j w_j e^{3(u - w₀)}(r_j)`.
///
/// Fails with [`Error::Divergence`] when `r³ e^{3u(r)}` (the integrand per
/// unit `log r`) has not started to decrease at the outermost nodes.
pub fn volume(u: &impl RadialFunction, grid: &SphereGrid) -> Result<f64> {
    let radii: Vec<f64> = grid.angles().iter().map(|&t| r_of_theta(t)).collect();
    let log_u: Vec<f64> = radii.iter().map(|&r| 3.0 * u.value(r)).collect();
    let total: f64 = grid
        .weights()
        .iter()
        .zip(&radii)
        .zip(&log_u)
        .map(|((w, &r), lu)| w * (lu - 3.0 * w0_eval(r)).exp())
        .sum();

    let m = radii.len();
    let per_log_r = |j: usize| log_u[j] + 3.0 * radii[j].ln();
    let (last, before) = (per_log_r(m - 1), per_log_r(m - 2));
    if last.is_finite() && last >= before {
        return Err(Error::Divergence(format!(
            "r³e^{{3u}} does not decay: {:.3e} at r = {:.3e} vs {:.3e} at r = {:.3e}",
            last.exp(),
            radii[m - 1],
            before.exp(),
            radii[m - 2]
        )));
    }
    if !total.is_finite() {
        return Err(Error::Divergence(format!("volume sum is {total}")));
    }
    Ok(total)
}

/// `α = V/π²`.
pub fn alpha(volume: f64) -> f64 {
    volume / (PI * PI)
}

/// `[(1+q)² log(1+q) - (1-q)² log(1-q)] / (4q)` for `q ∈ [0, 1]`.
fn log_mean_shape(q: f64) -> f64 {
    if q < 1e-2 {
        // ½ + Σ_{odd n≥3} q^{n-1} / (n(n-1)(n-2))
        let q2 = q * q;
        0.5 + q2 * (1.0 / 6.0 + q2 * (1.0 / 60.0 + q2 * (1.0 / 210.0 + q2 / 504.0)))
    } else if q >= 1.0 {
        LN_2
    } else {
        ((1.0 + q).powi(2) * q.ln_1p() - (1.0 - q).powi(2) * (-q).ln_1p()) / (4.0 * q)
    }
}

/// Mean of `log|x - y|` over the sphere `|y| = s`, where `|x| = r`.
pub fn log_kernel_mean(r: f64, s: f64) -> Result<f64> {
    if !(r >= 0.0 && s >= 0.0) || (r == 0.0 && s == 0.0) {
        return Err(Error::InvalidArgument(format!(
            "log kernel mean needs r, s >= 0 not both zero (r = {r}, s = {s})"
        )));
    }
    let (hi, lo) = if r >= s { (r, s) } else { (s, r) };
    Ok(hi.ln() + log_mean_shape(lo / hi) - 0.5)
}

/// Mean of `|x - y|^{-2}` over the sphere `|y| = s`, where `|x| = r ≠ s`.
pub fn inv_sq_kernel_mean(r: f64, s: f64) -> Result<f64> {
    if !(r >= 0.0 && s >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "inverse-square kernel mean needs r, s >= 0 (r = {r}, s = {s})"
        )));
    }
    if r == s {
        return Err(Error::SingularInput(r));
    }
    let (hi, lo) = if r >= s { (r, s) } else { (s, r) };
    let q = lo / hi;
    // (1/(2rs)) log((r+s)/|r-s|) = atanh(q)/q / hi²
    let shape = if q == 0.0 { 1.0 } else { q.atanh() / q };
    Ok(shape / (hi * hi))
}

/// Composite Gauss–Legendre rule in the angle `θ = 2 arctan s`, with
/// panels graded geometrically toward `θ = 0`, `θ = π` and an optional
/// interior breakpoint where the kernel is singular.
#[derive(Debug, Clone)]
pub struct RadialQuadrature {
    rule: GaussLegendre,
    grading_levels: usize,
    grading_ratio: f64,
    max_panel: f64,
}

impl Default for RadialQuadrature {
    fn default() -> Self {
        Self::new(20, 14, 0.2, 0.05)
    }
}

impl RadialQuadrature {
    pub fn new(points: usize, grading_levels: usize, grading_ratio: f64, max_panel: f64) -> Self {
        let points = NonZeroUsize::new(points.max(1)).expect("nonzero");
        Self {
            rule: GaussLegendre::new(points),
            grading_levels,
            grading_ratio,
            max_panel,
        }
    }

    fn push_graded(&self, a: f64, b: f64, toward_a: bool, breaks: &mut Vec<f64>) {
        // breakpoints strictly inside (a, b], geometric toward one end
        let len = b - a;
        let mut inner: Vec<f64> = (1..=self.grading_levels)
            .map(|k| len * self.grading_ratio.powi(k as i32))
            .collect();
        inner.reverse();
        let mut points: Vec<f64> = inner
            .into_iter()
            .map(|d| if toward_a { a + d } else { b - d })
            .collect();
        if !toward_a {
            points.reverse();
        }
        if toward_a {
            breaks.extend(points);
            self.push_uniform(breaks.last().copied().unwrap_or(a), b, breaks);
        } else {
            let start = points.first().copied().unwrap_or(b);
            self.push_uniform(a, start, breaks);
            breaks.extend(points);
            breaks.push(b);
        }
    }

    fn push_uniform(&self, a: f64, b: f64, breaks: &mut Vec<f64>) {
        let count = ((b - a) / self.max_panel).ceil().max(1.0) as usize;
        for i in 1..=count {
            breaks.push(a + (b - a) * i as f64 / count as f64);
        }
    }

    /// Panel endpoints in θ covering `[0, π]`.
    pub fn breakpoints(&self, singular_theta: Option<f64>) -> Vec<f64> {
        let mut specials = vec![0.0];
        if let Some(t) = singular_theta {
            if t > 0.0 && t < PI {
                specials.push(t);
            }
        }
        specials.push(PI);
        let mut breaks = vec![0.0];
        for pair in specials.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let mid = 0.5 * (a + b);
            self.push_graded(a, mid, true, &mut breaks);
            self.push_graded(mid, b, false, &mut breaks);
        }
        breaks.dedup();
        breaks
    }

    /// `(1/π²) ∫_{R³} k(|y|) e^{3u(y)} dy = (4/π) ∫₀^∞ k(s) e^{3u(s)} s² ds`.
    pub fn integrate<F>(&self, u: &impl RadialFunction, singular_r: Option<f64>, mut kernel: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let breaks = self.breakpoints(singular_r.map(theta_of_r));
        let mut total = 0.0;
        let mut failure = None;
        for pair in breaks.windows(2) {
            total += self.rule.integrate(pair[0], pair[1], |theta| {
                if failure.is_some() {
                    return 0.0;
                }
                let s = r_of_theta(theta);
                // e^{3u} s² ds/dθ with ds/dθ = (1+s²)/2
                let log_density = 3.0 * u.value(s) + 2.0 * s.ln() + (0.5 * (1.0 + s * s)).ln();
                let density = log_density.exp();
                if density == 0.0 {
                    return 0.0;
                }
                match kernel(s) {
                    Ok(k) => k * density,
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                }
            });
        }
        if let Some(e) = failure {
            return Err(e);
        }
        let value = 4.0 / PI * total;
        if !value.is_finite() {
            return Err(Error::Divergence(format!("radial integral is {value}")));
        }
        Ok(value)
    }
}

/// `v(x) = (1/π²) ∫ log(|y|/|x-y|) e^{3u(y)} dy` at each radius.
pub fn compute_v(u: &impl RadialFunction, radii: &[f64]) -> Result<Vec<f64>> {
    let quad = RadialQuadrature::default();
    radii
        .iter()
        .map(|&r| {
            if r == 0.0 {
                return Ok(0.0);
            }
            quad.integrate(u, Some(r), |s| Ok(s.ln() - log_kernel_mean(r, s)?))
        })
        .collect()
}

/// `(1/π²) ∫ e^{3u(y)} / |x-y|² dy + a_int`, the right side of the
/// integral identity for `-Δu`.
pub fn neg_lap_u_integral(u: &impl RadialFunction, r: f64, a_int: f64) -> Result<f64> {
    let quad = RadialQuadrature::default();
    Ok(quad.integrate(u, Some(r), |s| inv_sq_kernel_mean(r, s))? + a_int)
}

pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut radii: Vec<f64> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect();
    radii[0] = lo;
    radii[count - 1] = hi;
    radii
}

/// Inner and outer edge of the asymptotic fitting window.
pub const TAIL_WINDOW: (f64, f64) = (1e2, 1e4);
pub const TAIL_SAMPLES: usize = 24;

/// 35 log-spaced radii in `[10⁻², 10²)` followed by the tail window.
pub fn default_radii() -> Vec<f64> {
    let mut radii = log_spaced(1e-2, TAIL_WINDOW.0, 36);
    radii.pop();
    radii.extend(log_spaced(TAIL_WINDOW.0, TAIL_WINDOW.1, TAIL_SAMPLES));
    radii
}

/// Radial samples of `u`, `v`, `Δu` and the scalar curvature of `e^{2u}|dx|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub delta_u: Vec<f64>,
    pub scalar_curvature: Vec<f64>,
}

impl RadialProfile {
    pub fn build(u: &impl RadialFunction, radii: &[f64]) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::InvalidArgument("profile needs at least one radius".into()));
        }
        if radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "profile radii must be positive and strictly increasing".into(),
            ));
        }
        Ok(Self {
            radii: radii.to_vec(),
            u: radii.iter().map(|&r| u.value(r)).collect(),
            v: compute_v(u, radii)?,
            delta_u: radii.iter().map(|&r| u.laplacian(r)).collect(),
            scalar_curvature: radii.iter().map(|&r| scalar_curvature(u, r)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Indices of samples inside the tail window.
    pub fn tail_indices(&self) -> Vec<usize> {
        let (lo, hi) = TAIL_WINDOW;
        (0..self.len())
            .filter(|&i| self.radii[i] >= lo * (1.0 - 1e-12) && self.radii[i] <= hi * (1.0 + 1e-12))
            .collect()
    }

    /// The outermost quarter of the tail window (at least one sample).
    pub fn outer_tail_indices(&self) -> Vec<usize> {
        let tail = self.tail_indices();
        let keep = (tail.len() / 4).max(1).min(tail.len());
        tail[tail.len() - keep..].to_vec()
    }
}
