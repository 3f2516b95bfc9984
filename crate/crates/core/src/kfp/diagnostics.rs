//! Gradient functionals of h = g^{p/2} on phase space.

use serde::Serialize;

use super::PhaseField;
use crate::error::{Error, Result};
use crate::field::{derivative, ScalarField};
use crate::hypo::{eigenvalues_m2_closed_form, m0, m1, m2};
use crate::phi::PhiFamily;

const X: usize = 0;
const V: usize = 1;

/// h = max(g, floor)^{p/2}.
pub fn compute_h(pf: &PhaseField, fam: &PhiFamily) -> PhaseField {
    let e = fam.p / 2.0;
    let floor = pf.field.floor;
    let values = pf.field.values.iter().map(|&g| g.max(floor).powf(e)).collect();
    PhaseField { field: ScalarField { values, ..pf.field.clone() }, time: pf.time }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KineticDiagnostics {
    pub p: f64,
    pub t: f64,
    pub entropy: f64,
    pub grad_v_sq: f64,
    pub grad_x_sq: f64,
    pub cross: f64,
    /// ∫|∇_v h|² + ∫|∇_x h|² + ∫∇_x h·∇_v h.
    pub j_half: f64,
    /// ½∫|∇_v h|² + ½∫|∇_x h|² + ½∫|∇_x h + ∇_v h|², evaluated as written.
    pub j_half_expanded: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub j: f64,
    pub floored_nodes: usize,
}

impl KineticDiagnostics {
    /// J_λ = ∫|∇_v h|² + ∫|∇_x h|² + 2λ∫∇_x h·∇_v h.
    pub fn j_lambda(&self, lambda: f64) -> f64 {
        self.grad_v_sq + self.grad_x_sq + 2.0 * lambda * self.cross
    }

    /// d E/dt predicted from the velocity dissipation alone.
    pub fn entropy_production(&self) -> f64 {
        -4.0 / self.p * self.grad_v_sq
    }
}

pub fn kinetic_diagnostics(pf: &PhaseField, fam: &PhiFamily) -> KineticDiagnostics {
    let grid = &pf.field.grid;
    let h = compute_h(pf, fam);
    let hv = derivative(grid, &h.field.values, V, 1);
    let hx = derivative(grid, &h.field.values, X, 1);
    let q = grid.weights();
    let (mut vv, mut xx, mut xv, mut sum_sq) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..q.len() {
        vv += q[i] * hv[i] * hv[i];
        xx += q[i] * hx[i] * hx[i];
        xv += q[i] * hx[i] * hv[i];
        sum_sq += q[i] * (hx[i] + hv[i]).powi(2);
    }
    let floored_nodes = pf.field.values.iter().filter(|&&g| g < pf.field.floor).count();
    let scale = pf.time.exp();
    let (a, b, c) = (scale * vv, scale * xv, scale * xx);
    KineticDiagnostics {
        p: fam.p,
        t: pf.time,
        entropy: pf.field.entropy(fam),
        grad_v_sq: vv,
        grad_x_sq: xx,
        cross: xv,
        j_half: vv + xx + xv,
        j_half_expanded: 0.5 * vv + 0.5 * xx + 0.5 * sum_sq,
        a,
        b,
        c,
        j: a + b + c,
        floored_nodes,
    }
}

/// Both sides of the quadratic-form lemma at (λ, ν) = (½, 1).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaReport {
    pub p: f64,
    pub kappa: f64,
    pub lambda1: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub excluded_nodes: usize,
}

pub fn check_lemma_quadratic_form(pf: &PhaseField, fam: &PhiFamily) -> Result<LemmaReport> {
    if !(1.0..=2.0).contains(&fam.p) {
        return Err(Error::Precondition(format!("lemma needs p in [1, 2], got {}", fam.p)));
    }
    let grid = &pf.field.grid;
    let kappa = fam.kappa();
    let lambda1 = eigenvalues_m2_closed_form(kappa).min();
    let (a0, a1, a2) = (m0(0.5, 1.0), m1(0.5, 1.0), m2(0.5, 1.0, kappa));

    let h = compute_h(pf, fam).field.values;
    let root: Vec<f64> = h.iter().map(|v| v.sqrt()).collect();
    let hv = derivative(grid, &h, V, 1);
    let hx = derivative(grid, &h, X, 1);
    let hvv = derivative(grid, &h, V, 2);
    let hxv = derivative(grid, &hv, X, 1);
    let rv = derivative(grid, &root, V, 1);
    let rx = derivative(grid, &root, X, 1);

    let quad = |m: &[[f64; 2]; 2], x: [f64; 2]| {
        x[0] * (m[0][0] * x[0] + m[0][1] * x[1]) + x[1] * (m[1][0] * x[0] + m[1][1] * x[1])
    };
    let (mut lhs, mut rhs, mut excluded) = (0.0, 0.0, 0);
    for (i, &q) in grid.weights().iter().enumerate() {
        if pf.field.values[i] < pf.field.floor {
            excluded += 1;
            continue;
        }
        let x = [hv[i], hx[i]];
        let y = [hvv[i], hxv[i], rv[i] * rv[i], rx[i] * rv[i]];
        let mut y_m2_y = 0.0;
        for r in 0..4 {
            for s in 0..4 {
                y_m2_y += y[r] * a2[r][s] * y[s];
            }
        }
        let y_sq: f64 = y.iter().map(|c| c * c).sum();
        lhs += q * (quad(&a1, x) + y_m2_y);
        rhs += q * (0.5 * quad(&a0, x) + lambda1 * y_sq);
    }
    Ok(LemmaReport { p: fam.p, kappa, lambda1, lhs, rhs, margin: lhs - rhs, excluded_nodes: excluded })
}
