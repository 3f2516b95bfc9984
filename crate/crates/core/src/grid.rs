//! Uniform quadrature grids for the standard Gaussian measure.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::stencil::Stencil;

pub const DEFAULT_TAIL_TOL: f64 = 1e-10;
pub const DEFAULT_STENCIL_ORDER: usize = 4;
pub const MIN_NODES: usize = 16;

/// Grid parameters as they appear in run configurations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "L")]
    pub l: f64,
    pub n: usize,
    #[serde(default = "default_order")]
    pub stencil_order: usize,
}

fn default_order() -> usize {
    DEFAULT_STENCIL_ORDER
}

/// One axis: uniform nodes on [−L, L] with trapezoid × Gaussian-density weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub l: f64,
    pub h: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub d1: Stencil,
    pub d2: Stencil,
}

impl Axis {
    pub fn new(l: f64, n: usize, stencil_order: usize) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::Config(format!("truncation radius L = {l} must be positive")));
        }
        if n < MIN_NODES {
            return Err(Error::Config(format!("need at least {MIN_NODES} nodes per axis, got {n}")));
        }
        if stencil_order < 2 || stencil_order > 8 || stencil_order % 2 == 1 {
            return Err(Error::Config(format!(
                "stencil order {stencil_order} not in {{2, 4, 6, 8}}"
            )));
        }
        if n < stencil_order + 3 {
            return Err(Error::Config(format!("{n} nodes cannot hold an order-{stencil_order} stencil")));
        }
        let h = 2.0 * l / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n)
            .map(|i| {
                // Mirror the upper half so the node set is exactly symmetric.
                let k = i.min(n - 1 - i) as f64;
                let x = -l + k * h;
                if i < n - 1 - i { x } else { -x }
            })
            .collect();
        let norm = (2.0 * PI).sqrt().recip();
        let weights = nodes
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let trap = if i == 0 || i == n - 1 { 0.5 * h } else { h };
                trap * norm * (-0.5 * x * x).exp()
            })
            .collect();
        Ok(Self {
            l,
            h,
            d1: Stencil::uniform(n, h, 1, stencil_order),
            d2: Stencil::uniform(n, h, 2, stencil_order),
            nodes,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Gaussian mass outside [−L, L].
    pub fn tail_mass(&self) -> f64 {
        erfc(self.l / std::f64::consts::SQRT_2)
    }
}

/// A 1-D grid or the tensor product of two axes. Flat index is `i0 · n1 + i1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub axes: Vec<Axis>,
    pub stencil_order: usize,
    pub tail_tol: f64,
    /// Gaussian mass lost to truncation (analytic).
    pub mass_defect: f64,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    /// Same axis repeated `dimension` times.
    pub fn build(dimension: usize, l: f64, n_per_axis: usize, stencil_order: usize) -> Result<Self> {
        Self::build_with_tol(dimension, l, n_per_axis, stencil_order, DEFAULT_TAIL_TOL)
    }

    pub fn build_with_tol(
        dimension: usize,
        l: f64,
        n_per_axis: usize,
        stencil_order: usize,
        tail_tol: f64,
    ) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return Err(Error::Config(format!("dimension {dimension} not supported")));
        }
        let axis = Axis::new(l, n_per_axis, stencil_order)?;
        Self::from_axes(vec![axis; dimension], tail_tol)
    }

    pub fn from_spec(dimension: usize, spec: &GridSpec) -> Result<Self> {
        Self::build(dimension, spec.l, spec.n, spec.stencil_order)
    }

    /// Tensor grid with possibly different axes.
    pub fn from_axes(axes: Vec<Axis>, tail_tol: f64) -> Result<Self> {
        let inside: f64 = axes.iter().map(|a| 1.0 - a.tail_mass()).product();
        let mass_defect = 1.0 - inside;
        if mass_defect > tail_tol {
            return Err(Error::Config(format!(
                "Gaussian tail mass {mass_defect:.3e} beyond L exceeds tail_tol {tail_tol:.1e}; increase L"
            )));
        }
        let stencil_order = axes[0].d1.order;
        let weights = match axes.as_slice() {
            [a] => a.weights.clone(),
            [a, b] => a
                .weights
                .iter()
                .flat_map(|wa| b.weights.iter().map(move |wb| wa * wb))
                .collect(),
            _ => unreachable!(),
        };
        Ok(Self { axes, stencil_order, tail_tol, mass_defect, weights })
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of nodes along the last axis (the stride of the first axis).
    pub fn inner(&self) -> usize {
        self.axes.last().map_or(0, Axis::len)
    }

    /// Coordinates of node `idx`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self.axes.as_slice() {
            [a] => [a.nodes[idx], 0.0],
            [a, b] => [a.nodes[idx / b.len()], b.nodes[idx % b.len()]],
            _ => unreachable!(),
        }
    }

    /// ∫ f dγ by the grid rule.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let [x, v] = self.point(i);
                f(x, v)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_dimensional_mass() {
        let g = QuadratureGrid::build(1, 8.0, 257, 4).unwrap();
        let m: f64 = g.weights().iter().sum();
        assert!(m >= 1.0 - 1e-10 && m <= 1.0 + 1e-14, "mass {m}");
        assert!(g.mass_defect < 1e-14);
    }

    #[test]
    fn tensor_weights_are_products() {
        let g = QuadratureGrid::build(2, 8.0, 129, 4).unwrap();
        let a = &g.axes[0];
        for &(i, j) in &[(0, 0), (3, 100), (64, 64), (128, 7)] {
            assert_eq!(g.weights()[i * 129 + j], a.weights[i] * a.weights[j]);
        }
        assert_abs_diff_eq!(g.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn short_domain_is_rejected() {
        let err = QuadratureGrid::build(1, 2.0, 65, 4).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("4.550e-2")), "{err}");
    }

    #[test]
    fn nodes_are_symmetric_and_increasing() {
        let g = QuadratureGrid::build(1, 8.0, 129, 4).unwrap();
        let x = &g.axes[0].nodes;
        for i in 0..x.len() {
            assert_eq!(x[i], -x[x.len() - 1 - i]);
            if i > 0 {
                assert!(x[i] > x[i - 1]);
            }
        }
        assert_eq!(x[64], 0.0);
    }

    #[test]
    fn invalid_parameters() {
        assert!(QuadratureGrid::build(1, 8.0, 8, 4).is_err());
        assert!(QuadratureGrid::build(1, 8.0, 65, 3).is_err());
        assert!(QuadratureGrid::build(3, 8.0, 65, 4).is_err());
        assert!(QuadratureGrid::build(1, -1.0, 65, 4).is_err());
    }
}
