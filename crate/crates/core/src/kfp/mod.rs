//! Kinetic Fokker-Planck dynamics in phase space (x, v) for the harmonic
//! potential, written for g = f/f_star:
//!
//! ∂g/∂t + v ∂_x g − x ∂_v g = ∂²_v g − v ∂_v g.
//!
//! Transport is a rigid rotation of the (x, v) plane and the velocity part is
//! an OU flow, so both sub-steps are exact up to interpolation. They are
//! composed by Strang splitting, optionally Richardson-extrapolated.

mod controller;
mod diagnostics;
mod evolve;

pub use controller::{estimate_tau, AdaptiveLambdaState, Branch, ControllerConfig, TauEstimate};
pub use diagnostics::{check_lemma_quadratic_form, compute_h, kinetic_diagnostics, KineticDiagnostics, LemmaReport};
pub use evolve::{evolve_kfp, KfpConfig, KfpInitial, KineticChannel, KineticTrace};

use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::ScalarField;
use crate::grid::{Axis, QuadratureGrid};
use crate::interp::{Defect, Lagrange, OuOperator, DEFAULT_GH_NODES, DEFAULT_INTERP_POINTS};
use crate::profiles::shifted_gaussian_ratio;
use crate::quadrature::GaussHermite;

/// g on the tensor grid, x along axis 0 and v along axis 1.
#[derive(Clone, Debug)]
pub struct PhaseField {
    pub field: ScalarField,
    pub time: f64,
}

impl PhaseField {
    pub fn new(field: ScalarField, time: f64) -> Result<Self> {
        if field.grid.dimension() != 2 {
            return Err(Error::Precondition("phase fields live on two-dimensional grids".into()));
        }
        Ok(Self { field, time })
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.field.grid
    }

    /// L²(dμ) distance to another field on the same grid.
    pub fn l2_distance(&self, other: &PhaseField) -> f64 {
        let d: Vec<f64> = self.field.values.iter().zip(&other.field.values).map(|(a, b)| (a - b).powi(2)).collect();
        self.field.grid.integrate(&d).sqrt()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplittingScheme {
    /// transport(dt/2) ∘ ou_v(dt) ∘ transport(dt/2).
    #[default]
    Strang,
    /// (4 S_{dt/2}² − S_dt)/3, fourth order in dt.
    ExtrapolatedStrang,
}

/// Interpolates the strided line `src[offset + k·stride]` at x_i + shift for
/// every node. Feet beyond the axis continue the line linearly from its last
/// two nodes.
fn shift_line(
    axis: &Axis,
    interp: &Lagrange,
    src: &[f64],
    offset: usize,
    stride: usize,
    shift: f64,
    out: &mut [f64],
) -> u64 {
    let n = axis.len();
    let m = interp.points();
    let at = |k: usize| src[offset + k * stride];
    let sigma = shift / axis.h;
    let lead = sigma.floor();
    let back = (m / 2 - 1) as isize;
    // Interior weights depend only on the fractional shift.
    let mut shared = [0.0; 16];
    interp.local_weights(sigma - lead + back as f64, &mut shared[..m]);
    let mut clamped = 0;
    let mut local = [0.0; 16];
    for (i, o) in out.iter_mut().enumerate() {
        let start = i as isize + lead as isize - back;
        let y = axis.nodes[i] + shift;
        if y > axis.l || y < -axis.l {
            clamped += 1;
            let (edge, inner) = if y > 0.0 { (n - 1, n - 2) } else { (0, 1) };
            *o = at(edge) + (y.abs() - axis.l) * (at(edge) - at(inner)) / axis.h;
            continue;
        }
        let (start, w) = if start >= 0 && start + m as isize <= n as isize {
            (start as usize, &shared[..m])
        } else {
            (interp.weights(axis, y, &mut local[..m]).start, &local[..m])
        };
        *o = w.iter().enumerate().map(|(k, c)| c * at(start + k)).sum();
    }
    clamped
}

/// Phase-space stepper with cached OU operators for one time step.
#[derive(Clone, Debug)]
pub struct KfpSolver {
    pub grid: Arc<QuadratureGrid>,
    pub dt: f64,
    pub scheme: SplittingScheme,
    pub exec: Execution,
    interp: Lagrange,
    ou_full: OuOperator,
    ou_half: OuOperator,
}

impl KfpSolver {
    pub fn new(
        grid: Arc<QuadratureGrid>,
        dt: f64,
        scheme: SplittingScheme,
        interp_points: usize,
        gh_nodes: usize,
        exec: Execution,
    ) -> Result<Self> {
        if grid.dimension() != 2 {
            return Err(Error::Precondition("kinetic solver needs a two-dimensional grid".into()));
        }
        let interp = Lagrange::new(interp_points)?;
        let gh = GaussHermite::new(gh_nodes);
        let vaxis = &grid.axes[1];
        let ou_full = OuOperator::new(vaxis, dt, &gh, &interp)?;
        let ou_half = OuOperator::new(vaxis, dt / 2.0, &gh, &interp)?;
        Ok(Self { grid, dt, scheme, exec, interp, ou_full, ou_half })
    }

    pub fn with_defaults(grid: Arc<QuadratureGrid>, dt: f64, scheme: SplittingScheme) -> Result<Self> {
        Self::new(grid, dt, scheme, DEFAULT_INTERP_POINTS, DEFAULT_GH_NODES, Execution::default())
    }

    fn nx(&self) -> usize {
        self.grid.axes[0].len()
    }

    fn nv(&self) -> usize {
        self.grid.axes[1].len()
    }

    /// g ↦ g(x − c v, v).
    fn shear_x(&self, g: &[f64], c: f64, defect: &mut Defect) -> Vec<f64> {
        let (nx, nv) = (self.nx(), self.nv());
        let (ax, av) = (&self.grid.axes[0], &self.grid.axes[1]);
        let lines = self.exec.map(nv, |j| {
            let mut out = vec![0.0; nx];
            let cl = shift_line(ax, &self.interp, g, j, nv, -c * av.nodes[j], &mut out);
            (out, cl)
        });
        let mut res = vec![0.0; g.len()];
        for (j, (line, cl)) in lines.into_iter().enumerate() {
            defect.clamped_feet += cl;
            for (i, v) in line.into_iter().enumerate() {
                res[i * nv + j] = v;
            }
        }
        res
    }

    /// g ↦ g(x, v + c x).
    fn shear_v(&self, g: &[f64], c: f64, defect: &mut Defect) -> Vec<f64> {
        let nv = self.nv();
        let (ax, av) = (&self.grid.axes[0], &self.grid.axes[1]);
        let lines = self.exec.map(self.nx(), |i| {
            let mut out = vec![0.0; nv];
            let cl = shift_line(av, &self.interp, g, i * nv, 1, c * ax.nodes[i], &mut out);
            (out, cl)
        });
        let mut res = Vec::with_capacity(g.len());
        for (line, cl) in lines {
            defect.clamped_feet += cl;
            res.extend(line);
        }
        res
    }

    /// g ↦ g(x cos θ − v sin θ, x sin θ + v cos θ) by three shears per
    /// sub-rotation of at most π/4.
    ///
    /// The shears act on log g: rotation commutes with pointwise maps, log g
    /// is close to linear in the tails where feet leave the box, and the
    /// result stays positive.
    pub fn rotate(&self, g: &[f64], theta: f64, defect: &mut Defect) -> Vec<f64> {
        let pieces = (theta.abs() / FRAC_PI_4).ceil().max(1.0) as usize;
        let th = theta / pieces as f64;
        let (t, s) = ((th / 2.0).tan(), th.sin());
        let mut cur: Vec<f64> = g.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
        for _ in 0..pieces {
            cur = self.shear_x(&cur, t, defect);
            cur = self.shear_v(&cur, s, defect);
            cur = self.shear_x(&cur, t, defect);
        }
        cur.iter().map(|v| v.exp()).collect()
    }

    fn ou_v(&self, g: &[f64], op: &OuOperator) -> Vec<f64> {
        let nv = self.nv();
        let lines = self.exec.map(self.nx(), |i| {
            let mut out = vec![0.0; nv];
            op.apply_line(g, i * nv, 1, &mut out);
            out
        });
        lines.concat()
    }

    fn strang(&self, g: &[f64], dt: f64, op: &OuOperator, defect: &mut Defect) -> Vec<f64> {
        let a = self.rotate(g, dt / 2.0, defect);
        let b = self.ou_v(&a, op);
        self.rotate(&b, dt / 2.0, defect)
    }

    /// Advances by one step of the configured scheme.
    pub fn step(&self, pf: &PhaseField, defect: &mut Defect) -> PhaseField {
        let g = &pf.field.values;
        let mut values = match self.scheme {
            SplittingScheme::Strang => self.strang(g, self.dt, &self.ou_full, defect),
            SplittingScheme::ExtrapolatedStrang => {
                let h = self.dt / 2.0;
                let half = self.strang(g, h, &self.ou_half, defect);
                let two = self.strang(&half, h, &self.ou_half, defect);
                let one = self.strang(g, self.dt, &self.ou_full, defect);
                two.iter().zip(&one).map(|(a, b)| (4.0 * a - b) / 3.0).collect()
            }
        };
        defect.clip(&mut values);
        PhaseField {
            field: ScalarField { values, ..pf.field.clone() },
            time: pf.time + self.dt,
        }
    }
}

/// Exact transport over `dt`: a rotation of phase space by angle `dt`.
pub fn transport_step(pf: &PhaseField, dt: f64) -> Result<(PhaseField, Defect)> {
    let solver = KfpSolver::with_defaults(pf.grid().clone(), 1.0, SplittingScheme::Strang)?;
    let mut defect = Defect::default();
    let mut values = solver.rotate(&pf.field.values, dt, &mut defect);
    defect.clip(&mut values);
    Ok((PhaseField { field: ScalarField { values, ..pf.field.clone() }, time: pf.time + dt }, defect))
}

/// Exact OU flow in v over `dt`, applied on every x-line.
pub fn ou_v_step(pf: &PhaseField, dt: f64) -> Result<(PhaseField, Defect)> {
    let solver = KfpSolver::with_defaults(pf.grid().clone(), dt, SplittingScheme::Strang)?;
    let mut defect = Defect { clamped_feet: solver.ou_full.clamped_feet, ..Default::default() };
    let mut values = solver.ou_v(&pf.field.values, &solver.ou_full);
    defect.clip(&mut values);
    Ok((PhaseField { field: ScalarField { values, ..pf.field.clone() }, time: pf.time + dt }, defect))
}

/// One plain Strang step.
pub fn strang_step(pf: &PhaseField, dt: f64) -> Result<(PhaseField, Defect)> {
    let solver = KfpSolver::with_defaults(pf.grid().clone(), dt, SplittingScheme::Strang)?;
    let mut defect = Defect::default();
    let next = solver.step(pf, &mut defect);
    Ok((next, defect))
}

/// Centre (x_star, v_star)(t) of the decentred solution, from x' = v, v' = −x − v by RK4.
pub fn decentred_center(x0: f64, v0: f64, t: f64) -> (f64, f64) {
    let n = ((t.abs() / 1e-3).ceil() as usize).max(1);
    let h = t / n as f64;
    let f = |x: f64, v: f64| (v, -x - v);
    let (mut x, mut v) = (x0, v0);
    for _ in 0..n {
        let k1 = f(x, v);
        let k2 = f(x + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
        let k3 = f(x + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
        let k4 = f(x + h * k3.0, v + h * k3.1);
        x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (x, v)
}

/// g = f_star(x − x_star, v − v_star)/f_star(x, v) at time `t`.
pub fn exact_kfp_oracle(x0: f64, v0: f64, t: f64, grid: Arc<QuadratureGrid>) -> Result<PhaseField> {
    let (xs, vs) = decentred_center(x0, v0, t);
    let field = ScalarField::from_fn(grid, |x, v| shifted_gaussian_ratio(x, xs) * shifted_gaussian_ratio(v, vs))?;
    PhaseField::new(field, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> Arc<QuadratureGrid> {
        Arc::new(QuadratureGrid::build(2, 8.0, n, 4).unwrap())
    }

    fn constant(n: usize) -> PhaseField {
        PhaseField::new(ScalarField::constant(grid(n), 1.0).unwrap(), 0.0).unwrap()
    }

    #[test]
    fn stationary_state_is_fixed() {
        let pf = constant(65);
        for (next, _) in [
            transport_step(&pf, 0.3).unwrap(),
            ou_v_step(&pf, 0.01).unwrap(),
            strang_step(&pf, 0.01).unwrap(),
        ] {
            assert!(next.field.values.iter().all(|v| (v - 1.0).abs() < 1e-13));
        }
    }

    #[test]
    fn radial_fields_are_rotation_invariant() {
        let g = grid(129);
        let f = ScalarField::from_fn(g, |x, v| 1.0 + (-(x * x + v * v) / 4.0).exp()).unwrap();
        let pf = PhaseField::new(f, 0.0).unwrap();
        let (next, _) = transport_step(&pf, 0.37).unwrap();
        assert!(next.l2_distance(&pf) < 1e-9, "{}", next.l2_distance(&pf));
    }

    #[test]
    fn rotation_matches_rotated_samples() {
        let g = grid(129);
        let f = |x: f64, v: f64| shifted_gaussian_ratio(x, 0.6) * shifted_gaussian_ratio(v, -0.3);
        let pf = PhaseField::new(ScalarField::from_fn(g.clone(), f).unwrap(), 0.0).unwrap();
        let th: f64 = 0.9;
        let (next, _) = transport_step(&pf, th).unwrap();
        // Near the box edge the exact foot lies outside the grid; the disk of
        // radius 6 rotates into itself.
        let mut worst: f64 = 0.0;
        for (i, got) in next.field.values.iter().enumerate() {
            let [x, v] = g.point(i);
            if x * x + v * v <= 36.0 {
                let e = f(x * th.cos() - v * th.sin(), x * th.sin() + v * th.cos());
                worst = worst.max((got - e).abs() / e);
            }
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn full_turn_returns_home() {
        let g = grid(129);
        let f = ScalarField::from_fn(g, |x, v| shifted_gaussian_ratio(x, 0.5) * shifted_gaussian_ratio(v, 0.2)).unwrap();
        let pf = PhaseField::new(f, 0.0).unwrap();
        let (one, _) = transport_step(&pf, FRAC_PI_4).unwrap();
        let single = {
            let (back, _) = transport_step(&one, -FRAC_PI_4).unwrap();
            back.l2_distance(&pf) / 2.0
        };
        let (turn, _) = transport_step(&pf, 2.0 * std::f64::consts::PI).unwrap();
        // Eight sub-rotations, each within the single-step budget.
        assert!(turn.l2_distance(&pf) <= 8.0 * 4.0 * single.max(1e-12), "{} vs {single}", turn.l2_distance(&pf));
    }

    #[test]
    fn velocity_ou_on_linear_modes() {
        let g = grid(129);
        let eps = 0.05;
        let dt = 0.02;
        let pv = PhaseField::new(ScalarField::from_fn(g.clone(), |_, v| 1.0 + eps * v).unwrap(), 0.0).unwrap();
        let (next, _) = ou_v_step(&pv, dt).unwrap();
        let px = PhaseField::new(ScalarField::from_fn(g.clone(), |x, _| 1.0 + eps * x).unwrap(), 0.0).unwrap();
        let (same, _) = ou_v_step(&px, dt).unwrap();
        let nv = 129;
        for i in 0..129 {
            for j in 30..99 {
                let v = g.axes[1].nodes[j];
                assert_abs_diff_eq!(next.field.values[i * nv + j], 1.0 + eps * v * (-dt).exp(), epsilon = 1e-12);
                assert_abs_diff_eq!(same.field.values[i * nv + j], px.field.values[i * nv + j], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn oracle_center() {
        assert_eq!(decentred_center(0.7, -0.2, 0.0), (0.7, -0.2));
        let w = 3f64.sqrt() / 2.0;
        for t in [0.5, 1.0, 3.0, 7.0] {
            let (x, v) = decentred_center(1.0, 0.3, t);
            let printed = ((w * t).cos() * 1.0 + 2.0 / 3f64.sqrt() * (w * t).sin() * (0.3 + 0.5)) * (-t / 2.0).exp();
            assert_abs_diff_eq!(x, printed, epsilon = 1e-10);
            // The consistent v-coefficient is (2/√3)(x0 + v0/2).
            let vv = (-(2.0 / 3f64.sqrt()) * (w * t).sin() * (1.0 + 0.15) + (w * t).cos() * 0.3) * (-t / 2.0).exp();
            assert_abs_diff_eq!(v, vv, epsilon = 1e-10);
        }
    }

    #[test]
    fn strang_tracks_the_oracle() {
        let g = grid(129);
        let dt = 0.01;
        let solver = KfpSolver::new(g.clone(), dt, SplittingScheme::Strang, 12, 32, Execution::Sequential).unwrap();
        let mut pf = exact_kfp_oracle(1.0, 0.0, 0.0, g.clone()).unwrap();
        let mut d = Defect::default();
        for _ in 0..50 {
            pf = solver.step(&pf, &mut d);
        }
        let exact = exact_kfp_oracle(1.0, 0.0, 0.5, g).unwrap();
        assert!(pf.l2_distance(&exact) < 1e-5);
        assert_abs_diff_eq!(pf.field.mass(), 1.0, epsilon = 1e-10);
    }
}
