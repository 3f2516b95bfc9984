//! Finite-difference stencils on uniform grids.
//!
//! Weights come from Fornberg's recursion. Interior rows are centred; the
//! rows near each end switch to one-sided stencils of the same accuracy.

use serde::{Deserialize, Serialize};

/// Weights for derivatives 0..=`m` at `z` from the nodes `x`.
///
/// Returns `c[k][j]`, the weight of node `j` in the k-th derivative.
pub fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// One row of a differentiation matrix: `out[i] = Σ_k weights[k] · f[start + k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StencilRow {
    pub start: usize,
    pub weights: Vec<f64>,
}

/// Banded differentiation operator of a fixed accuracy order on `n` uniform nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stencil {
    pub derivative: usize,
    pub order: usize,
    pub rows: Vec<StencilRow>,
}

impl Stencil {
    /// Builds the operator for `derivative` ∈ {1, 2} with spacing `h`.
    ///
    /// `order` must be even; the caller guarantees `n` exceeds the stencil width.
    pub fn uniform(n: usize, h: f64, derivative: usize, order: usize) -> Self {
        let half = order / 2 + (derivative - 1) / 2;
        let centred = 2 * half + 1;
        // One-sided stencils need one extra point per derivative beyond the first.
        let sided = order + derivative;
        let offsets: Vec<f64> = (0..centred).map(|k| k as f64 - half as f64).collect();
        let interior = scale(&fornberg(0.0, &offsets, derivative)[derivative], h, derivative);

        let rows = (0..n)
            .map(|i| {
                if i >= half && i + half < n {
                    StencilRow { start: i - half, weights: interior.clone() }
                } else {
                    let start = if i < half { 0 } else { n - sided };
                    let nodes: Vec<f64> = (0..sided).map(|k| (start + k) as f64).collect();
                    let w = fornberg(i as f64, &nodes, derivative);
                    StencilRow { start, weights: scale(&w[derivative], h, derivative) }
                }
            })
            .collect();
        Self { derivative, order, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Applies the stencil to the strided line `f[offset + k·stride]`.
    ///
    /// Derivative weights sum to zero, so values are taken relative to f at
    /// node `i`; a constant line then differentiates to exactly zero.
    #[inline]
    pub fn apply_at(&self, f: &[f64], offset: usize, stride: usize, i: usize) -> f64 {
        let row = &self.rows[i];
        let base = f[offset + i * stride];
        row.weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * (f[offset + (row.start + k) * stride] - base))
            .sum()
    }

    /// Differentiates a contiguous line.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.apply_at(f, 0, 1, i)).collect()
    }
}

fn scale(w: &[f64], h: f64, derivative: usize) -> Vec<f64> {
    let s = h.powi(derivative as i32);
    w.iter().map(|c| c / s).collect()
}
