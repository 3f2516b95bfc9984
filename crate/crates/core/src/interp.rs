//! Lagrange interpolation on uniform axes and the operators built from it:
//! sub-cell line shifts for the transport shears and the banded
//! Ornstein-Uhlenbeck transition operator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::quadrature::GaussHermite;
use crate::stencil::StencilRow;

pub const DEFAULT_INTERP_POINTS: usize = 12;
pub const DEFAULT_GH_NODES: usize = 32;

/// Local polynomial interpolation through `points` consecutive nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Lagrange {
    points: usize,
    bary: Vec<f64>,
}

/// Where an interpolation foot landed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Foot {
    pub start: usize,
    pub clamped: bool,
}

impl Lagrange {
    pub fn new(points: usize) -> Result<Self> {
        if !(2..=16).contains(&points) || points % 2 == 1 {
            return Err(Error::Config(format!(
                "interpolation width {points} must be an even number in 2..=16"
            )));
        }
        // Barycentric weights for equispaced nodes: (−1)^k C(m−1, k).
        let mut bary = Vec::with_capacity(points);
        let mut c = 1.0;
        for k in 0..points {
            bary.push(if k % 2 == 0 { c } else { -c });
            c = c * (points - 1 - k) as f64 / (k + 1) as f64;
        }
        Ok(Self { points, bary })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Weights for evaluating at `y`, written into `w` (length `points`).
    pub fn weights(&self, axis: &Axis, y: f64, w: &mut [f64]) -> Foot {
        let n = axis.len();
        let m = self.points;
        let clamped = !(-axis.l..=axis.l).contains(&y);
        let y = y.clamp(-axis.l, axis.l);
        let s = (y + axis.l) / axis.h;
        let cell = (s.floor() as isize).clamp(0, n as isize - 2);
        let start = (cell - (m as isize / 2 - 1)).clamp(0, (n - m) as isize) as usize;
        self.local_weights(s - start as f64, w);
        Foot { start, clamped }
    }

    /// Weights at local coordinate `t` measured from the first stencil node.
    pub fn local_weights(&self, t: f64, w: &mut [f64]) {
        let mut total = 0.0;
        for k in 0..self.points {
            let d = t - k as f64;
            if d == 0.0 {
                w.iter_mut().for_each(|v| *v = 0.0);
                w[k] = 1.0;
                return;
            }
            w[k] = self.bary[k] / d;
            total += w[k];
        }
        w.iter_mut().for_each(|v| *v /= total);
    }

    /// Evaluates the interpolant of the strided line `f[offset + k·stride]` at `y`.
    pub fn eval(&self, axis: &Axis, f: &[f64], offset: usize, stride: usize, y: f64) -> (f64, bool) {
        let mut w = [0.0; 16];
        let foot = self.weights(axis, y, &mut w[..self.points]);
        let v = w[..self.points]
            .iter()
            .enumerate()
            .map(|(k, c)| c * f[offset + (foot.start + k) * stride])
            .sum();
        (v, foot.clamped)
    }
}

/// Counters for interpolation feet that fell outside the grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Defect {
    pub clamped_feet: u64,
    pub negative_clips: u64,
    /// Largest magnitude of a clipped negative value.
    pub max_clip: f64,
}

impl Defect {
    pub fn merge(&mut self, other: &Defect) {
        self.clamped_feet += other.clamped_feet;
        self.negative_clips += other.negative_clips;
        self.max_clip = self.max_clip.max(other.max_clip);
    }

    /// Replaces negative entries by zero and records them.
    pub fn clip(&mut self, values: &mut [f64]) {
        for v in values.iter_mut() {
            if *v < 0.0 {
                self.negative_clips += 1;
                self.max_clip = self.max_clip.max(-*v);
                *v = 0.0;
            }
        }
    }
}

/// The w-form OU transition over time `dt` on one axis:
/// (P_dt w)(x) = E[w(x e^{−dt} + √(1 − e^{−2dt}) ξ)], stored as banded rows.
#[derive(Clone, Debug, PartialEq)]
pub struct OuOperator {
    pub dt: f64,
    pub rows: Vec<StencilRow>,
    /// Quadrature feet that left [−L, L] while building the rows.
    pub clamped_feet: u64,
}

impl OuOperator {
    pub fn new(axis: &Axis, dt: f64, gh: &GaussHermite, interp: &Lagrange) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Precondition(format!("time step {dt} must be positive")));
        }
        let decay = (-dt).exp();
        let spread = (-(-2.0 * dt).exp_m1()).sqrt();
        let m = interp.points();
        let mut clamped_feet = 0;
        let mut w = vec![0.0; m];
        let mut rows = Vec::with_capacity(axis.len());
        for &x in &axis.nodes {
            let mut feet = Vec::with_capacity(gh.len());
            for (&xi, &q) in gh.nodes.iter().zip(&gh.weights) {
                let foot = interp.weights(axis, x * decay + spread * xi, &mut w);
                clamped_feet += foot.clamped as u64;
                feet.push((foot.start, q, w.clone()));
            }
            let lo = feet.iter().map(|f| f.0).min().unwrap_or(0);
            let hi = feet.iter().map(|f| f.0).max().unwrap_or(0) + m;
            let mut row = vec![0.0; hi - lo];
            for (start, q, wk) in &feet {
                for (k, c) in wk.iter().enumerate() {
                    row[start - lo + k] += q * c;
                }
            }
            rows.push(StencilRow { start: lo, weights: row });
        }
        Ok(Self { dt, rows, clamped_feet })
    }

    /// Applies the operator to a strided line, writing a contiguous result.
    ///
    /// Rows reproduce constants, so each output is formed as a correction to
    /// f at its own node; w ≡ 1 then stays exactly 1.
    pub fn apply_line(&self, f: &[f64], offset: usize, stride: usize, out: &mut [f64]) {
        for (i, (o, row)) in out.iter_mut().zip(&self.rows).enumerate() {
            let base = f[offset + i * stride];
            *o = base
                + row
                    .weights
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * (f[offset + (row.start + k) * stride] - base))
                    .sum::<f64>();
        }
    }
}
