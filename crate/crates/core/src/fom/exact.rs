//! Closed-form reference solutions.

use libm::erfc;

/// Viscous Burgers solution on `[0, 1.5]` used as ground truth for the 1D benchmark.
pub fn burgers1d_exact_point(x: f64, t: f64, re: f64) -> f64 {
    let t0 = (re / 8.0).exp();
    let tp = t + 1.0;
    // exp(Re x^2 / (4t+4)) overflows for large Re*x^2; the quotient then tends to 0
    let e = re * x * x / (4.0 * tp);
    let denom_log = 0.5 * (tp.ln() - re / 8.0) + e;
    if denom_log > 700.0 {
        return 0.0;
    }
    (x / tp) / (1.0 + (tp / t0).sqrt() * e.exp())
}

pub fn burgers1d_exact(x: &[f64], t: f64, re: f64) -> Vec<f64> {
    x.iter().map(|&xi| burgers1d_exact_point(xi, t, re)).collect()
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Diffused window `[0.35, 0.65]` advected with unit speed.
pub fn advdiff1d_exact_point(x: f64, t: f64, mu: f64, sigma0: f64) -> f64 {
    let s = (2.0 * mu * (t + sigma0)).sqrt();
    let xi = x - t;
    normal_cdf((xi - 0.35) / s) - normal_cdf((xi - 0.65) / s)
}

pub fn advdiff1d_exact(x: &[f64], t: f64, mu: f64, sigma0: f64) -> Vec<f64> {
    x.iter().map(|&xi| advdiff1d_exact_point(xi, t, mu, sigma0)).collect()
}

/// Narrow Gaussian pulse `0.5 exp(-(x-0.3)^2 / 0.005^2)`.
pub fn pulse(x: f64) -> f64 {
    0.5 * (-((x - 0.3) / 0.005).powi(2)).exp()
}

/// Periodic translate of a profile localized near `center`, with period `len`:
/// evaluates the image of `x - shift` closest to `center`.
pub fn periodic_translate(profile: impl Fn(f64) -> f64, x: f64, shift: f64, len: f64, center: f64) -> f64 {
    let y = x - shift;
    let k = ((y - center) / len).round();
    profile(y - k * len)
}

/// Jump `u = 1` for `x <= t`, else 0.
pub fn jump(x: f64, t: f64) -> f64 {
    if x <= t {
        1.0
    } else {
        0.0
    }
}

/// Characteristics `dχ/dt = u(χ, t)` of the analytic Burgers field, integrated
/// with classical RK4 from `chi(t_from)` to `t_to` in `substeps` steps.
pub fn burgers1d_characteristics(chi: &mut [f64], t_from: f64, t_to: f64, re: f64, substeps: usize) {
    let h = (t_to - t_from) / substeps as f64;
    let f = |c: f64, t: f64| burgers1d_exact_point(c, t, re);
    for s in 0..substeps {
        let t = t_from + s as f64 * h;
        for c in chi.iter_mut() {
            let k1 = f(*c, t);
            let k2 = f(*c + 0.5 * h * k1, t + 0.5 * h);
            let k3 = f(*c + 0.5 * h * k2, t + 0.5 * h);
            let k4 = f(*c + h * k3, t + h);
            *c += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
}
