//! Closed-form fields used as initial data and as test witnesses.

/// exp(x·a − a²/2): the ratio u_star(x − a)/u_star(x) for the standard Gaussian.
#[inline]
pub fn shifted_gaussian_ratio(x: f64, a: f64) -> f64 {
    (x * a - 0.5 * a * a).exp()
}

/// Probabilists' Hermite polynomial He_k, normalised to unit L²(γ) norm.
pub fn hermite_normalized(k: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, x);
    if k == 0 {
        return 1.0;
    }
    let mut norm = 1.0;
    for j in 1..k {
        let h2 = x * h1 - j as f64 * h0;
        h0 = h1;
        h1 = h2;
        norm *= (j + 1) as f64;
    }
    h1 / norm.sqrt()
}

/// Smoothed indicator of [lo, hi] with transition width `width`, lifted by `base`.
pub fn smooth_step(x: f64, lo: f64, hi: f64, width: f64, base: f64, height: f64) -> f64 {
    let s = 0.5 * (((x - lo) / width).tanh() - ((x - hi) / width).tanh());
    base + height * s
}
