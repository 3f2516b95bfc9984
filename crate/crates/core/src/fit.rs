//! Rate fitting and time derivatives of sampled traces.

use crate::error::{Error, Result};

/// Least-squares slope of −ln(values) against time over `window` (inclusive).
pub fn fit_decay_rate(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| (window.0..=window.1).contains(*t))
        .map(|(&t, &v)| (t, v))
        .collect();
    if pts.len() < 10 {
        return Err(Error::Precondition(format!(
            "fit window [{}, {}] holds {} samples, need at least 10",
            window.0,
            window.1,
            pts.len()
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Domain(format!("nonpositive value {v} at t = {t} in fit window")));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| -p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, v) in &pts {
        sxy += (t - tm) * (-v.ln() - ym);
        sxx += (t - tm) * (t - tm);
    }
    Ok(sxy / sxx)
}

/// Three-point derivative on a possibly nonuniform time grid. End points use
/// one-sided differences.
pub fn derivative3(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = times.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            (values[b] - values[a]) / (times[b] - times[a])
        })
        .collect()
}

/// Fourth-order derivative for uniformly spaced samples. The two samples at
/// each end fall back to second-order formulas.
pub fn derivative5(step: f64, values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2]) / (12.0 * step)
            } else if i >= 1 && i + 1 < n {
                (values[i + 1] - values[i - 1]) / (2.0 * step)
            } else if i == 0 && n > 2 {
                (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * step)
            } else if n > 2 {
                (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * step)
            } else {
                0.0
            }
        })
        .collect()
}
