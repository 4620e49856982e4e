//! Reference computations that share no code path with the library.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

/// `U_k(cos θ) = sin((k+1)θ) / sin θ`.
pub fn chebyshev_u(k: usize, theta: f64) -> f64 {
    let s = theta.sin();
    if s.abs() < 1e-300 {
        let sign = if theta.cos() < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        return sign * (k + 1) as f64;
    }
    ((k as f64 + 1.0) * theta).sin() / s
}

/// Orthonormal zonal harmonic on S³ at polar angle θ.
pub fn zonal_y(k: usize, theta: f64) -> f64 {
    chebyshev_u(k, theta) / (2.0 * PI * PI).sqrt()
}

/// Double-exponential rule on `[a, b]`; tolerates integrable endpoint
/// singularities. `f` receives the point together with its distances
/// to `a` and `b`.
pub fn tanh_sinh_with<F: FnMut(f64, f64, f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    let h = 1.0 / 64.0;
    let len = b - a;
    let mut sum = 0.0;
    let steps = (4.5 / h) as i64;
    for k in -steps..=steps {
        let t = k as f64 * h;
        let u = FRAC_PI_2 * t.sinh();
        let to_a = len / (1.0 + (2.0 * u).exp());
        let to_b = len / (1.0 + (-2.0 * u).exp());
        if to_a <= 0.0 || to_b <= 0.0 {
            continue;
        }
        let w = 0.5 * len * FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        if w == 0.0 || !w.is_finite() {
            continue;
        }
        let x = if to_a < to_b { a + to_a } else { b - to_b };
        sum += w * f(x, to_a, to_b);
    }
    sum * h
}

pub fn tanh_sinh<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    tanh_sinh_with(a, b, |x, _, _| f(x))
}

/// `∫_a^∞ f` through `s = a + τ/(1-τ)`.
pub fn half_line<F: FnMut(f64) -> f64>(a: f64, mut f: F) -> f64 {
    tanh_sinh_with(0.0, 1.0, |tau, _, one_minus| {
        let s = a + tau / one_minus;
        let jac = 1.0 / (one_minus * one_minus);
        let v = f(s);
        if v == 0.0 {
            0.0
        } else {
            v * jac
        }
    })
}

/// `(4/π) ∫₀^∞ k(s) e^{3u(s)} s² ds`, split around `r`.
pub fn radial_integral(
    u: impl Fn(f64) -> f64,
    kernel: impl Fn(f64) -> f64,
    r: Option<f64>,
) -> f64 {
    let g = |s: f64| {
        let d = (3.0 * u(s)).exp() * s * s;
        let k = kernel(s);
        // nodes that round onto a kernel singularity carry no weight
        if d == 0.0 || !k.is_finite() {
            0.0
        } else {
            k * d
        }
    };
    let mut cuts = vec![0.0];
    if let Some(r) = r.filter(|&r| r > 0.0) {
        cuts.extend([0.5 * r, r, 2.0 * r]);
    }
    let last = *cuts.last().unwrap();
    cuts.extend([last + 1.0, last + 4.0]);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += tanh_sinh(w[0], w[1], g);
    }
    total += half_line(*cuts.last().unwrap(), g);
    4.0 / PI * total
}

/// Mean of `log|x-y|` over `|y| = s` with `|x| = r`, from
/// `(1/4rs) [ρ² log ρ - ρ²/2]_{|r-s|}^{r+s}`.
pub fn log_mean(r: f64, s: f64) -> f64 {
    if r == 0.0 || s == 0.0 {
        return r.max(s).ln();
    }
    let f = |rho: f64| {
        if rho == 0.0 {
            0.0
        } else {
            rho * rho * rho.ln() - 0.5 * rho * rho
        }
    };
    (f(r + s) - f((r - s).abs())) / (4.0 * r * s)
}

/// Mean of `|x-y|^{-2}` over `|y| = s`: `log((r+s)/|r-s|) / (2rs)`.
pub fn inv_sq_mean(r: f64, s: f64) -> f64 {
    if r == 0.0 || s == 0.0 {
        return 1.0 / (r * r).max(s * s);
    }
    ((r + s) / (r - s).abs()).ln() / (2.0 * r * s)
}

/// Surface average of `f(|x - y|)` over `|y| = s` by a tensor rule:
/// Gauss–Legendre in `cos ϑ` and the trapezoid rule in `φ`.
pub fn surface_mean(x: [f64; 3], s: f64, f: impl Fn(f64) -> f64) -> f64 {
    use gauss_quad::GaussLegendre;
    let rule = GaussLegendre::new(std::num::NonZeroUsize::new(400).unwrap());
    let n_phi = 800;
    let mut total = 0.0;
    for (z, wz) in rule.as_node_weight_pairs() {
        let rho = (1.0 - z * z).max(0.0).sqrt();
        let mut ring = 0.0;
        for j in 0..n_phi {
            let phi = 2.0 * PI * j as f64 / n_phi as f64;
            let y = [s * rho * phi.cos(), s * rho * phi.sin(), s * z];
            let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt();
            ring += f(d);
        }
        total += wz * ring / n_phi as f64;
    }
    total / 2.0
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

/// `(u', u'')` by central differences with step `h`.
pub fn derivatives(u: impl Fn(f64) -> f64, r: f64, h: f64) -> (f64, f64) {
    let (p, m, c) = (u(r + h), u(r - h), u(r));
    ((p - m) / (2.0 * h), (p - 2.0 * c + m) / (h * h))
}

pub fn fd_laplacian(u: impl Fn(f64) -> f64, r: f64, h: f64) -> f64 {
    let (d1, d2) = derivatives(u, r, h);
    d2 + 2.0 * d1 / r
}
