//! Zonal spectral calculus on S³.
//!
//! A zonal function depends only on the polar angle θ measured from the
//! north pole. Degree-k zonal harmonics are `U_k(cos θ) / √(2π²)` where
//! `U_k` is the Chebyshev polynomial of the second kind; they are
//! eigenfunctions of `-Δ` with eigenvalue `k(k+2)` and orthonormal in
//! `L²(S³)`. The volume element restricted to zonal functions is
//! `4π sin²θ dθ`.
//!
//! The intertwining operator `P³ = (-Δ+1)^{1/2}(-Δ)` acts diagonally with
//! multiplier `λ_k √(1+λ_k) = k(k+1)(k+2)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// |S³| = 2π².
pub const SPHERE_VOLUME: f64 = 2.0 * PI * PI;

/// Exponents above this are treated as overflow when forming `exp` sums.
pub(crate) const MAX_EXPONENT: f64 = 700.0;

/// `1/√(2π²)`, the value of the normalized constant harmonic.
pub fn constant_mode_value() -> f64 {
    1.0 / SPHERE_VOLUME.sqrt()
}

/// Eigenvalue `λ_k = k(k+2)` of `-Δ` on S³.
pub fn eigenvalue(k: usize) -> f64 {
    let k = k as f64;
    k * (k + 2.0)
}

/// Diagonal multiplier of `P³` on degree k: `λ_k √(1+λ_k)`.
pub fn p3_multiplier(k: usize) -> f64 {
    // √(1 + k(k+2)) = k + 1 exactly
    let k = k as f64;
    k * (k + 1.0) * (k + 2.0)
}

/// Coefficients of a rotationally symmetric function in the normalized
/// zonal basis, degrees `0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ZonalField {
    coeffs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for ZonalField {
    type Error = Error;

    fn try_from(coeffs: Vec<f64>) -> Result<Self> {
        ZonalField::new(coeffs)
    }
}

impl From<ZonalField> for Vec<f64> {
    fn from(field: ZonalField) -> Self {
        field.coeffs
    }
}

impl ZonalField {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "zonal field needs degree cap >= 1, got {} coefficients",
                coeffs.len()
            )));
        }
        if let Some(k) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coefficient {k} is not finite"
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn zeros(degree_cap: usize) -> Self {
        Self {
            coeffs: vec![0.0; degree_cap.max(1) + 1],
        }
    }

    /// The basis element `Y_k` in a field of the given degree cap.
    pub fn unit(degree_cap: usize, k: usize) -> Self {
        let mut field = Self::zeros(degree_cap.max(k));
        field.coeffs[k] = 1.0;
        field
    }

    pub fn degree_cap(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero_mean(&self) -> bool {
        self.coeffs[0] == 0.0
    }

    /// Average over S³.
    pub fn mean(&self) -> f64 {
        self.coeffs[0] * constant_mode_value()
    }

    /// The field plus the constant function `constant`.
    pub fn shifted(&self, constant: f64) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] += constant * SPHERE_VOLUME.sqrt();
        Self { coeffs }
    }

    pub fn without_mean(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] = 0.0;
        Self { coeffs }
    }

    /// `L²(S³)` norm, i.e. the Euclidean norm of the coefficients.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `|c_N| / max_k |c_k|`, a resolution diagnostic.
    pub fn tail_ratio(&self) -> f64 {
        let max = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if max == 0.0 {
            0.0
        } else {
            self.coeffs[self.degree_cap()].abs() / max
        }
    }

    /// Truncate or zero-pad to a new degree cap.
    pub fn resized(&self, degree_cap: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(degree_cap.max(1) + 1, 0.0);
        Self { coeffs }
    }

    pub(crate) fn map_coeffs(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| f(k, c))
                .collect(),
        }
    }

    /// Value at `t = cos θ`.
    pub fn value_at(&self, t: f64) -> f64 {
        // Clenshaw for Σ c_k U_k(t)
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().rev() {
            let b0 = c + 2.0 * t * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        b1 * constant_mode_value()
    }

    /// Value and first two derivatives with respect to `t = cos θ`.
    pub fn jet_at(&self, t: f64) -> [f64; 3] {
        // differentiated three-term recurrence; stays exact at t = ±1
        let (mut u_prev, mut u) = (0.0, 1.0);
        let (mut d1_prev, mut d1) = (0.0, 0.0);
        let (mut d2_prev, mut d2) = (0.0, 0.0);
        let mut acc = [0.0; 3];
        for (k, &c) in self.coeffs.iter().enumerate() {
            acc[0] += c * u;
            acc[1] += c * d1;
            acc[2] += c * d2;
            if k + 1 == self.coeffs.len() {
                break;
            }
            let (u_next, d1_next, d2_next) = if k == 0 {
                (2.0 * t, 2.0, 0.0)
            } else {
                (
                    2.0 * t * u - u_prev,
                    2.0 * u + 2.0 * t * d1 - d1_prev,
                    4.0 * d1 + 2.0 * t * d2 - d2_prev,
                )
            };
            u_prev = u;
            u = u_next;
            d1_prev = d1;
            d1 = d1_next;
            d2_prev = d2;
            d2 = d2_next;
        }
        let norm = constant_mode_value();
        [acc[0] * norm, acc[1] * norm, acc[2] * norm]
    }
}

/// Values `Y_0(t), …, Y_n(t)` written into `out` (length `n + 1`).
pub fn zonal_basis_into(t: f64, out: &mut [f64]) {
    let norm = constant_mode_value();
    let n = out.len();
    if n == 0 {
        return;
    }
    let (mut prev, mut cur) = (0.0, 1.0);
    out[0] = norm;
    for slot in out.iter_mut().skip(1) {
        let next = 2.0 * t * cur - prev;
        prev = cur;
        cur = next;
        *slot = cur * norm;
    }
}

/// Gauss quadrature on S³ for zonal integrands.
///
/// Nodes are the zeros of `U_M(cos θ)`, i.e. `θ_j = jπ/(M+1)`, and the
/// weights absorb the `4π sin²θ` volume factor, so that
/// `∫_{S³} f dV₀ = Σ_j w_j f(θ_j)` for every polynomial `f` in `cos θ` of
/// degree at most `2M - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    angles: Vec<f64>,
    cosines: Vec<f64>,
    weights: Vec<f64>,
}

impl SphereGrid {
    pub fn new(node_count: usize) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::InvalidArgument(format!(
                "sphere grid needs at least 2 nodes, got {node_count}"
            )));
        }
        let step = PI / (node_count as f64 + 1.0);
        let angles: Vec<f64> = (1..=node_count).map(|j| j as f64 * step).collect();
        let cosines = angles.iter().map(|a| a.cos()).collect();
        let weights = angles
            .iter()
            .map(|a| {
                let s = a.sin();
                4.0 * PI * step * s * s
            })
            .collect();
        Ok(Self {
            angles,
            cosines,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn cosines(&self) -> &[f64] {
        &self.cosines
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Largest zonal degree N for which the grid's Gram matrix is exact.
    pub fn degree_capacity(&self) -> usize {
        self.len() - 1
    }

    /// `Σ_j w_j values_j`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn basis_table(&self, degree_cap: usize) -> Result<BasisTable> {
        if degree_cap > self.degree_capacity() {
            return Err(Error::InvalidArgument(format!(
                "degree cap {degree_cap} exceeds grid capacity {} (M = {})",
                self.degree_capacity(),
                self.len()
            )));
        }
        let m = self.len();
        let mut values = vec![0.0; (degree_cap + 1) * m];
        let mut column = vec![0.0; degree_cap + 1];
        for (j, &t) in self.cosines.iter().enumerate() {
            zonal_basis_into(t, &mut column);
            for (k, &y) in column.iter().enumerate() {
                values[k * m + j] = y;
            }
        }
        Ok(BasisTable {
            degree_cap,
            node_count: m,
            values,
        })
    }
}

/// `Y_k(θ_j)` for all degrees and nodes, stored row-per-degree.
#[derive(Debug, Clone)]
pub struct BasisTable {
    degree_cap: usize,
    node_count: usize,
    values: Vec<f64>,
}

impl BasisTable {
    pub fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.node_count..(k + 1) * self.node_count]
    }

    pub fn synthesize(&self, field: &ZonalField) -> Vec<f64> {
        let mut out = vec![0.0; self.node_count];
        for (k, &c) in field.coeffs().iter().enumerate().take(self.degree_cap + 1) {
            if c == 0.0 {
                continue;
            }
            for (o, y) in out.iter_mut().zip(self.row(k)) {
                *o += c * y;
            }
        }
        out
    }

    /// `Σ_j weighted_j Y_k(θ_j)` for every k.
    pub fn project(&self, weighted: &[f64]) -> Vec<f64> {
        (0..=self.degree_cap)
            .map(|k| self.row(k).iter().zip(weighted).map(|(y, v)| y * v).sum())
            .collect()
    }
}

pub fn build_grid(node_count: usize) -> Result<SphereGrid> {
    SphereGrid::new(node_count)
}

/// Field values at the grid nodes.
pub fn zonal_eval(field: &ZonalField, grid: &SphereGrid) -> Result<Vec<f64>> {
    Ok(grid.basis_table(field.degree_cap())?.synthesize(field))
}

/// Discrete projection `c_k = Σ_j w_j values_j Y_k(θ_j)`, k = 0..=N.
pub fn zonal_analyze(values: &[f64], grid: &SphereGrid, degree_cap: usize) -> Result<ZonalField> {
    if values.len() != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "{} values for a grid of {} nodes",
            values.len(),
            grid.len()
        )));
    }
    if degree_cap >= grid.len() {
        return Err(Error::InvalidArgument(format!(
            "degree cap {degree_cap} must be below node count {}",
            grid.len()
        )));
    }
    let weighted: Vec<f64> = values.iter().zip(grid.weights()).map(|(v, w)| v * w).collect();
    ZonalField::new(grid.basis_table(degree_cap)?.project(&weighted))
}

pub fn apply_p3(field: &ZonalField) -> ZonalField {
    field.map_coeffs(|k, c| p3_multiplier(k) * c)
}

pub fn apply_p3_sqrt(field: &ZonalField) -> ZonalField {
    field.map_coeffs(|k, c| p3_multiplier(k).sqrt() * c)
}

/// `‖u‖²_{Ḣ^{3/2}} = Σ_k λ_k √(1+λ_k) c_k²`.
pub fn h32_seminorm(field: &ZonalField) -> f64 {
    field
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| p3_multiplier(k) * c * c)
        .sum()
}

/// `log Σ_j w_j exp(x_j)` evaluated with max subtraction.
pub(crate) fn log_weighted_exp_sum(weights: &[f64], exponents: &[f64]) -> Result<f64> {
    let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() || max > MAX_EXPONENT {
        return Err(Error::Overflow { max_exponent: max });
    }
    let sum: f64 = weights
        .iter()
        .zip(exponents)
        .map(|(w, x)| w * (x - max).exp())
        .sum();
    if sum <= 0.0 || !sum.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "weighted exponential sum is {sum}"
        )));
    }
    Ok(max + sum.ln())
}

/// Right side minus left side of Beckner's inequality
/// `log ⨍ e^{u-ū} dV₀ ≤ ‖u‖²_{Ḣ^{3/2}} / (24π²)`.
pub fn beckner_gap(field: &ZonalField, grid: &SphereGrid) -> Result<f64> {
    let mean = field.mean();
    let exponents: Vec<f64> = zonal_eval(field, grid)?
        .into_iter()
        .map(|u| u - mean)
        .collect();
    let lhs = log_weighted_exp_sum(grid.weights(), &exponents)? - SPHERE_VOLUME.ln();
    let rhs = h32_seminorm(field) / (24.0 * PI * PI);
    Ok(rhs - lhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_volume_and_cos_squared() {
        let grid = build_grid(64).unwrap();
        assert_relative_eq!(grid.weights().iter().sum::<f64>(), SPHERE_VOLUME, epsilon = 1e-12);
        let values: Vec<f64> = grid.cosines().iter().map(|t| t * t).collect();
        // 4π ∫ cos²θ sin²θ dθ = π²/2
        assert_relative_eq!(grid.integrate(&values), PI * PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn smallest_grid_is_interior() {
        let grid = build_grid(2).unwrap();
        assert_eq!(grid.len(), 2);
        assert!(grid.angles().iter().all(|&a| a > 0.0 && a < PI));
        assert!(matches!(build_grid(1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn gauss_exactness_up_to_degree_2m_minus_1() {
        // a 200-node grid is exact for every monomial tested here
        let m = 6;
        let coarse = build_grid(m).unwrap();
        let fine = build_grid(200).unwrap();
        for degree in 0..(2 * m) {
            let f = |t: f64| t.powi(degree as i32);
            let a: f64 = coarse.integrate(&coarse.cosines().iter().map(|&t| f(t)).collect::<Vec<_>>());
            let b: f64 = fine.integrate(&fine.cosines().iter().map(|&t| f(t)).collect::<Vec<_>>());
            assert!((a - b).abs() < 1e-12, "degree {degree}: {a} vs {b}");
        }
    }

    #[test]
    fn constant_mode_evaluates_to_normalization() {
        let grid = build_grid(16).unwrap();
        let values = zonal_eval(&ZonalField::unit(4, 0), &grid).unwrap();
        for v in values {
            assert_relative_eq!(v, 0.225_079_079_039_276_7, epsilon = 1e-15);
        }
        let zeros = zonal_eval(&ZonalField::zeros(4), &grid).unwrap();
        assert!(zeros.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn degree_two_changes_sign() {
        // U_2(t) = 4t² - 1 has roots at t = ±1/2
        let grid = build_grid(32).unwrap();
        let values = zonal_eval(&ZonalField::unit(2, 2), &grid).unwrap();
        let sign_changes = values.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        assert_eq!(sign_changes, 2);
    }

    #[test]
    fn eval_rejects_degree_beyond_capacity() {
        let grid = build_grid(8).unwrap();
        assert!(zonal_eval(&ZonalField::zeros(8), &grid).is_err());
        assert!(zonal_eval(&ZonalField::zeros(7), &grid).is_ok());
        assert!(zonal_analyze(&[0.0; 8], &grid, 8).is_err());
    }

    #[test]
    fn analyze_constant_and_mixed() {
        let grid = build_grid(40).unwrap();
        let values = vec![constant_mode_value(); grid.len()];
        let field = zonal_analyze(&values, &grid, 10).unwrap();
        assert_relative_eq!(field.coeffs()[0], 1.0, epsilon = 1e-13);
        assert!(field.coeffs()[1..].iter().all(|c| c.abs() < 1e-13));

        let mut basis = vec![0.0; 4];
        let values: Vec<f64> = grid
            .cosines()
            .iter()
            .map(|&t| {
                zonal_basis_into(t, &mut basis);
                basis[1] + basis[3]
            })
            .collect();
        let field = zonal_analyze(&values, &grid, 10).unwrap();
        for (k, &c) in field.coeffs().iter().enumerate() {
            let expected = if k == 1 || k == 3 { 1.0 } else { 0.0 };
            assert!((c - expected).abs() <= 1e-12, "c_{k} = {c}");
        }
    }

    #[test]
    fn gram_matrix_is_identity() {
        let grid = build_grid(128).unwrap();
        let table = grid.basis_table(32).unwrap();
        for k in 0..=32 {
            for l in 0..=32 {
                let g: f64 = grid
                    .weights()
                    .iter()
                    .zip(table.row(k).iter().zip(table.row(l)))
                    .map(|(w, (a, b))| w * a * b)
                    .sum();
                let expected = if k == l { 1.0 } else { 0.0 };
                assert!((g - expected).abs() <= 1e-12, "G[{k}][{l}] = {g}");
            }
        }
    }

    #[test]
    fn p3_multipliers() {
        let e1 = apply_p3(&ZonalField::unit(3, 1));
        assert_eq!(e1.coeffs(), &[0.0, 6.0, 0.0, 0.0]);
        let e2 = apply_p3(&ZonalField::unit(3, 2));
        assert_eq!(e2.coeffs()[2], 24.0);
        assert_eq!(apply_p3(&ZonalField::unit(3, 0)).coeffs()[0], 0.0);
        assert_relative_eq!(apply_p3_sqrt(&ZonalField::unit(3, 1)).coeffs()[1], 6.0_f64.sqrt());
        assert_eq!(apply_p3_sqrt(&ZonalField::unit(3, 0)).coeffs()[0], 0.0);
        for k in 0..50 {
            assert_relative_eq!(
                p3_multiplier(k),
                eigenvalue(k) * (1.0 + eigenvalue(k)).sqrt(),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn seminorm_examples() {
        assert_eq!(h32_seminorm(&ZonalField::unit(4, 1)), 6.0);
        assert_eq!(h32_seminorm(&ZonalField::new(vec![7.0, 0.0, 0.0]).unwrap()), 0.0);
        assert_eq!(h32_seminorm(&ZonalField::new(vec![0.0, 1.0, 1.0]).unwrap()), 30.0);
    }

    #[test]
    fn sqrt_twice_is_p3_on_random_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let coeffs: Vec<f64> = (0..=40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let field = ZonalField::new(coeffs).unwrap();
        let twice = apply_p3_sqrt(&apply_p3_sqrt(&field));
        let direct = apply_p3(&field);
        for (a, b) in twice.coeffs().iter().zip(direct.coeffs()) {
            assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
        }
        let l2 = apply_p3_sqrt(&field).l2_norm();
        assert_relative_eq!(l2 * l2, h32_seminorm(&field), max_relative = 1e-13);
    }

    #[test]
    fn beckner_examples() {
        let grid = build_grid(64).unwrap();
        let constant = ZonalField::new(vec![3.0, 0.0, 0.0]).unwrap();
        assert!(beckner_gap(&constant, &grid).unwrap().abs() < 1e-14);
        let mut c1 = ZonalField::zeros(4).coeffs().to_vec();
        c1[1] = 0.1;
        let gap = beckner_gap(&ZonalField::new(c1).unwrap(), &grid).unwrap();
        assert!(gap >= -1e-10, "gap {gap}");
    }

    #[test]
    fn beckner_reports_overflow() {
        let grid = build_grid(64).unwrap();
        let mut coeffs = vec![0.0; 4];
        coeffs[1] = 5000.0;
        match beckner_gap(&ZonalField::new(coeffs).unwrap(), &grid) {
            Err(Error::Overflow { max_exponent }) => assert!(max_exponent > MAX_EXPONENT),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn jet_matches_clenshaw_and_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coeffs: Vec<f64> = (0..=12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let field = ZonalField::new(coeffs).unwrap();
        let h = 1e-5;
        for &t in &[-0.9, -0.3, 0.0, 0.4, 0.8] {
            let jet = field.jet_at(t);
            assert_relative_eq!(jet[0], field.value_at(t), epsilon = 1e-12);
            let d1 = (field.value_at(t + h) - field.value_at(t - h)) / (2.0 * h);
            let d2 = (field.value_at(t + h) - 2.0 * field.value_at(t) + field.value_at(t - h)) / (h * h);
            assert!((jet[1] - d1).abs() < 1e-6 * jet[1].abs().max(1.0));
            assert!((jet[2] - d2).abs() < 1e-3 * jet[2].abs().max(1.0));
        }
        // U_k'(1) = k(k+1)(k+2)/3
        let jet = ZonalField::unit(5, 5).jet_at(1.0);
        assert_relative_eq!(jet[1] / constant_mode_value(), 70.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_finite_coefficients() {
        assert!(ZonalField::new(vec![0.0, f64::NAN]).is_err());
        assert!(ZonalField::new(vec![0.0]).is_err());
    }
}
