//! Sampled fields on a quadrature grid and the scalar functionals on them.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::Float;
use crate::grid::QuadratureGrid;
use crate::phi::PhiFamily;

/// Floor applied before evaluating φ'' or logarithms.
pub const DEFAULT_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct ScalarField {
    pub grid: Arc<QuadratureGrid>,
    pub values: Vec<f64>,
    pub floor: f64,
}

/// Fisher information with a count of nodes that hit the positivity floor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FisherInfo {
    pub value: f64,
    pub floored_nodes: usize,
}

impl ScalarField {
    pub fn new(grid: Arc<QuadratureGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Precondition(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("field value {v} is not a finite nonnegative number")));
        }
        Ok(Self { grid, values, floor: DEFAULT_FLOOR })
    }

    pub fn from_fn(grid: Arc<QuadratureGrid>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = grid.sample(f);
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<QuadratureGrid>, c: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![c; n])
    }

    /// ∫ w dγ.
    pub fn mass(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Rescales to mean one under the quadrature weights, so the mass equals
    /// their total (1 up to the Gaussian tail) and w ≡ 1 is left untouched.
    pub fn normalized(&self) -> Self {
        let s = self.grid.weights().iter().sum::<f64>() / self.mass();
        Self { values: self.values.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    /// E_γ[w] = ∫φ(w)dγ − φ(∫w dγ).
    pub fn entropy(&self, fam: &PhiFamily) -> f64 {
        phi_entropy(self.grid.weights(), self.values.iter().copied(), fam)
    }

    /// Derivative of the given order along `axis`.
    pub fn derivative(&self, axis: usize, order: usize) -> Self {
        Self { values: derivative(&self.grid, &self.values, axis, order), ..self.clone() }
    }

    /// First derivative along `axis`. Not a nonnegative field in general,
    /// so the result is only meant for arithmetic, not for entropies.
    pub fn grad(&self, axis: usize) -> Self {
        self.derivative(axis, 1)
    }

    /// ∫ φ''(w) |∇w|² dγ.
    pub fn fisher_information(&self, fam: &PhiFamily) -> FisherInfo {
        let grads: Vec<Vec<f64>> =
            (0..self.grid.dimension()).map(|a| derivative(&self.grid, &self.values, a, 1)).collect();
        let mut floored_nodes = 0;
        let mut value = 0.0;
        for (i, (&q, &w)) in self.grid.weights().iter().zip(&self.values).enumerate() {
            let s = if w < self.floor {
                floored_nodes += 1;
                self.floor
            } else {
                w
            };
            let g2: f64 = grads.iter().map(|g| g[i] * g[i]).sum();
            value += q * fam.d2phi(s) * g2;
        }
        FisherInfo { value, floored_nodes }
    }

    /// (∫ |w|^p dγ)^{1/p}.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm(&self.grid, &self.values, p)
    }

    /// Both sides of the Csiszár-Kullback inequality:
    /// 2^{−2/p} p min{1, ‖w‖_p^{p−2}} ‖w−1‖_p² and E[w]. Requires unit mass.
    pub fn csiszar_kullback_bound(&self, fam: &PhiFamily) -> Result<(f64, f64)> {
        let m = self.mass();
        if (m - 1.0).abs() > 1e-8 {
            return Err(Error::Precondition(format!("field mass {m} is not 1")));
        }
        let p = fam.p;
        let norm = self.lp_norm(p);
        let dev: Vec<f64> = self.values.iter().map(|w| w - 1.0).collect();
        let dn = lp_norm(&self.grid, &dev, p);
        let bound = 2f64.powf(-2.0 / p) * fam.ck_constant() * norm.powf(p - 2.0).min(1.0) * dn * dn;
        Ok((bound, self.entropy(fam)))
    }

    /// JSON header describing the grid the field lives on.
    pub fn header(&self) -> serde_json::Value {
        let a = &self.grid.axes[0];
        serde_json::json!({
            "dimension": self.grid.dimension(),
            "L": a.l,
            "n": a.len(),
            "stencil_order": self.grid.stencil_order,
            "tail_defect": self.grid.mass_defect,
        })
    }

    /// Flat CSV `index,x[,v],value`.
    pub fn to_csv(&self) -> String {
        let two = self.grid.dimension() == 2;
        let mut out = String::from(if two { "index,x,v,value\n" } else { "index,x,value\n" });
        for (i, w) in self.values.iter().enumerate() {
            let [x, v] = self.grid.point(i);
            if two {
                let _ = writeln!(out, "{i},{},{},{}", Float(x), Float(v), Float(*w));
            } else {
                let _ = writeln!(out, "{i},{},{}", Float(x), Float(*w));
            }
        }
        out
    }
}

/// Derivative of a flat array along `axis` of a 1-D or 2-D grid.
pub fn derivative(grid: &QuadratureGrid, f: &[f64], axis: usize, order: usize) -> Vec<f64> {
    let ax = &grid.axes[axis];
    let st = if order == 1 { &ax.d1 } else { &ax.d2 };
    let inner = grid.inner();
    let (stride, lines, line_step) = match (grid.dimension(), axis) {
        (1, _) => (1, 1, 0),
        (_, 0) => (inner, inner, 1),
        _ => (1, grid.axes[0].len(), inner),
    };
    let mut out = vec![0.0; f.len()];
    for line in 0..lines {
        let offset = line * line_step;
        for i in 0..ax.len() {
            out[offset + i * stride] = st.apply_at(f, offset, stride, i);
        }
    }
    out
}

/// ∫φ(w)dq − Q·φ(∫w dq / Q) for quadrature weights q of total Q.
///
/// Q falls short of 1 by the truncated Gaussian tail; normalising by it keeps
/// the value nonnegative and exactly zero at w ≡ 1.
pub fn phi_entropy(weights: &[f64], values: impl Iterator<Item = f64> + Clone, fam: &PhiFamily) -> f64 {
    let total: f64 = weights.iter().sum();
    let inner: f64 = weights.iter().zip(values.clone()).map(|(q, w)| q * fam.phi(w)).sum();
    let mass: f64 = weights.iter().zip(values).map(|(q, w)| q * w).sum();
    inner - total * fam.phi(mass / total)
}

pub fn lp_norm(grid: &QuadratureGrid, f: &[f64], p: f64) -> f64 {
    let s: f64 = grid.weights().iter().zip(f).map(|(q, v)| q * v.abs().powf(p)).sum();
    s.powf(1.0 / p)
}
