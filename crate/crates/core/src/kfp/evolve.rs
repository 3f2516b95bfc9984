//! Time stepping of phase-space runs with per-p diagnostics.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::controller::{estimate_tau, AdaptiveLambdaState, Branch, ControllerConfig, TauEstimate};
use super::diagnostics::{kinetic_diagnostics, KineticDiagnostics};
use super::{exact_kfp_oracle, KfpSolver, PhaseField, SplittingScheme};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::ScalarField;
use crate::format::csv_row;
use crate::fit::{derivative3, fit_decay_rate};
use crate::fp::MAX_MASS_DRIFT;
use crate::grid::{Axis, GridSpec, QuadratureGrid, DEFAULT_STENCIL_ORDER, DEFAULT_TAIL_TOL};
use crate::inequality::Mixture;
use crate::interp::{Defect, DEFAULT_GH_NODES, DEFAULT_INTERP_POINTS};
use crate::phi::PhiFamily;
use crate::profiles::shifted_gaussian_ratio;

/// Largest negative undershoot tolerated before a run is declared unstable.
pub const MAX_NEGATIVE_CLIP: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    #[serde(rename = "L")]
    pub l: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KfpInitial {
    /// Stationary state translated to (x0, v0).
    Decentred { x0: f64, v0: f64 },
    /// Even mixture of the x-translates by ±x0: v-independent, so a(0) = 0.
    VIndependent { x0: f64 },
    /// Convex combination of translated stationary states.
    Random { seed: u64, components: usize },
}

impl KfpInitial {
    pub fn sample(&self, grid: Arc<QuadratureGrid>) -> Result<PhaseField> {
        match *self {
            KfpInitial::Decentred { x0, v0 } => exact_kfp_oracle(x0, v0, 0.0, grid),
            KfpInitial::VIndependent { x0 } => {
                let g = |x| 0.5 * (shifted_gaussian_ratio(x, x0) + shifted_gaussian_ratio(x, -x0));
                PhaseField::new(ScalarField::from_fn(grid, |x, _| g(x))?, 0.0)
            }
            KfpInitial::Random { seed, components } => {
                let mix = Mixture::random(components, seed, 1.0);
                PhaseField::new(ScalarField::from_fn(grid, |x, v| mix.eval2(x, v))?, 0.0)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KfpConfig {
    /// x axis, and v axis too unless `v_axis` is given.
    pub grid: GridSpec,
    #[serde(default)]
    pub v_axis: Option<AxisSpec>,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub sample_every: usize,
    pub p_list: Vec<f64>,
    pub initial: KfpInitial,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub scheme: SplittingScheme,
    #[serde(default = "default_interp")]
    pub interp_points: usize,
    #[serde(default = "default_gh")]
    pub gh_nodes: usize,
}

fn default_interp() -> usize {
    DEFAULT_INTERP_POINTS
}

fn default_gh() -> usize {
    DEFAULT_GH_NODES
}

impl KfpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 0.01) {
            return Err(Error::Config(format!("dt = {} must lie in (0, 0.01]", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end <= 50.0) {
            return Err(Error::Config(format!("T = {} must lie in (0, 50]", self.t_end)));
        }
        if self.sample_every == 0 {
            return Err(Error::Config("sample_every must be positive".into()));
        }
        if self.p_list.is_empty() {
            return Err(Error::Config("p_list is empty".into()));
        }
        for &p in &self.p_list {
            PhiFamily::new(p).map_err(|e| Error::Config(e.to_string()))?;
        }
        self.controller.validate()
    }

    pub fn build_grid(&self) -> Result<Arc<QuadratureGrid>> {
        let order = self.grid.stencil_order;
        let x = Axis::new(self.grid.l, self.grid.n, order)?;
        let v = match &self.v_axis {
            Some(a) => Axis::new(a.l, a.n, order)?,
            None => x.clone(),
        };
        Ok(Arc::new(QuadratureGrid::from_axes(vec![x, v], DEFAULT_TAIL_TOL)?))
    }

    /// The reference run used in the examples: oracle data from (1, 0).
    pub fn oracle_run(p_list: Vec<f64>, t_end: f64, dt: f64) -> Self {
        Self {
            grid: GridSpec { l: 8.0, n: 129, stencil_order: DEFAULT_STENCIL_ORDER },
            v_axis: None,
            dt,
            t_end,
            sample_every: 10,
            p_list,
            initial: KfpInitial::Decentred { x0: 1.0, v0: 0.0 },
            controller: ControllerConfig::default(),
            scheme: SplittingScheme::Strang,
            interp_points: DEFAULT_INTERP_POINTS,
            gh_nodes: DEFAULT_GH_NODES,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KineticChannel {
    pub p: f64,
    pub diagnostics: Vec<KineticDiagnostics>,
    pub lambda_t: Vec<f64>,
    pub rho_t: Vec<f64>,
    pub epsilon_t: Vec<f64>,
    pub tau_partial: Vec<f64>,
    pub branch: Vec<Branch>,
    pub zero_events: Vec<f64>,
}

impl KineticChannel {
    pub fn series(&self, f: impl Fn(&KineticDiagnostics) -> f64) -> Vec<f64> {
        self.diagnostics.iter().map(f).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KineticTrace {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub min_value: Vec<f64>,
    pub channels: Vec<KineticChannel>,
    pub defect: Defect,
    pub sample_step: f64,
    pub h: f64,
    pub stencil_order: usize,
    pub controller_enabled: bool,
}

impl KineticTrace {
    pub fn channel(&self, p: f64) -> Option<&KineticChannel> {
        self.channels.iter().find(|c| c.p == p)
    }

    fn require(&self, p: f64) -> Result<&KineticChannel> {
        self.channel(p).ok_or_else(|| Error::Precondition(format!("no channel for p = {p}")))
    }

    pub fn fit_entropy_rate(&self, p: f64, window: (f64, f64)) -> Result<f64> {
        fit_decay_rate(&self.times, &self.require(p)?.series(|d| d.entropy), window)
    }

    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.mass[0];
        self.mass.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max)
    }

    /// dj/dt at every sample.
    pub fn dj_dt(&self, p: f64) -> Result<Vec<f64>> {
        Ok(derivative3(&self.times, &self.require(p)?.series(|d| d.j)))
    }

    /// d/dt log J_{1/2} at every sample.
    pub fn log_j_slope(&self, p: f64) -> Result<Vec<f64>> {
        let logs = self.require(p)?.series(|d| d.j_half.ln());
        Ok(derivative3(&self.times, &logs))
    }

    pub fn tau(&self, p: f64) -> Result<TauEstimate> {
        Ok(estimate_tau(&self.times, &self.require(p)?.rho_t))
    }

    /// CSV `t,p,entropy,J_half,J_lambda,lambda_t,rho_t,a,b,c,j,tau_partial`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,p,entropy,J_half,J_lambda,lambda_t,rho_t,a,b,c,j,tau_partial\n");
        for (i, t) in self.times.iter().enumerate() {
            for c in &self.channels {
                let d = &c.diagnostics[i];
                let row = [
                    *t,
                    c.p,
                    d.entropy,
                    d.j_half,
                    d.j_lambda(c.lambda_t[i]),
                    c.lambda_t[i],
                    c.rho_t[i],
                    d.a,
                    d.b,
                    d.c,
                    d.j,
                    c.tau_partial[i],
                ];
                csv_row(&mut out, &row);
            }
        }
        out
    }
}

/// Evolves `g0` under the configured splitting and samples every p-channel.
pub fn evolve_kfp(g0: &PhaseField, cfg: &KfpConfig, exec: Execution) -> Result<KineticTrace> {
    cfg.validate()?;
    let fams: Vec<PhiFamily> = cfg.p_list.iter().map(|&p| PhiFamily::new(p)).collect::<Result<_>>()?;
    let grid = g0.grid().clone();
    let solver = KfpSolver::new(grid.clone(), cfg.dt, cfg.scheme, cfg.interp_points, cfg.gh_nodes, exec)?;
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut defect = Defect::default();
    let mut state = g0.clone();
    let m0 = g0.field.mass();
    let mut controllers: Vec<AdaptiveLambdaState> =
        fams.iter().map(|f| AdaptiveLambdaState::new(&cfg.controller, f, g0.field.entropy(f))).collect();

    let mut trace = KineticTrace {
        times: vec![],
        mass: vec![],
        min_value: vec![],
        channels: fams
            .iter()
            .map(|f| KineticChannel {
                p: f.p,
                diagnostics: vec![],
                lambda_t: vec![],
                rho_t: vec![],
                epsilon_t: vec![],
                tau_partial: vec![],
                branch: vec![],
                zero_events: vec![],
            })
            .collect(),
        defect: Defect::default(),
        sample_step: cfg.dt * cfg.sample_every as f64,
        h: grid.axes[0].h,
        stencil_order: grid.stencil_order,
        controller_enabled: cfg.controller.enabled,
    };

    for k in 0..=steps {
        if k > 0 {
            state = solver.step(&state, &mut defect);
            state.time = k as f64 * cfg.dt;
            if defect.max_clip > MAX_NEGATIVE_CLIP {
                return Err(Error::Aborted {
                    time: state.time,
                    reason: format!("positivity lost: undershoot {:.3e}", defect.max_clip),
                });
            }
        }
        if k % cfg.sample_every != 0 {
            continue;
        }
        let mass = state.field.mass();
        if (mass - m0).abs() > MAX_MASS_DRIFT {
            return Err(Error::Aborted {
                time: state.time,
                reason: format!("mass drift {:.3e} exceeds {MAX_MASS_DRIFT:e}", mass - m0),
            });
        }
        trace.times.push(state.time);
        trace.mass.push(mass);
        trace.min_value.push(state.field.min());
        let diags = exec.map(fams.len(), |j| kinetic_diagnostics(&state, &fams[j]));
        for ((c, d), ctl) in trace.channels.iter_mut().zip(diags).zip(controllers.iter_mut()) {
            if cfg.controller.enabled {
                ctl.update(&d)?;
            }
            c.lambda_t.push(ctl.lambda_t);
            c.rho_t.push(ctl.rho_t);
            c.epsilon_t.push(ctl.epsilon_t);
            c.tau_partial.push(ctl.tau_partial);
            c.branch.push(ctl.branch);
            c.diagnostics.push(d);
        }
    }
    for (c, ctl) in trace.channels.iter_mut().zip(&controllers) {
        c.zero_events = ctl.zero_events.clone();
    }
    trace.defect = defect;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(initial: KfpInitial) -> KfpConfig {
        KfpConfig {
            grid: GridSpec { l: 8.0, n: 65, stencil_order: 4 },
            sample_every: 5,
            initial,
            ..KfpConfig::oracle_run(vec![1.5, 2.0], 0.2, 0.01)
        }
    }

    #[test]
    fn stationary_trace_is_zero() {
        let mut cfg = small(KfpInitial::Decentred { x0: 0.0, v0: 0.0 });
        cfg.controller.enabled = true;
        let g = cfg.build_grid().unwrap();
        let g0 = PhaseField::new(ScalarField::constant(g, 1.0).unwrap(), 0.0).unwrap();
        let tr = evolve_kfp(&g0, &cfg, Execution::Sequential).unwrap();
        for c in &tr.channels {
            for (i, d) in c.diagnostics.iter().enumerate() {
                assert!(d.entropy.abs() < 1e-12 && d.j.abs() < 1e-20, "{d:?}");
                assert_eq!((c.lambda_t[i], c.rho_t[i], c.tau_partial[i]), (0.5, 0.5, 0.0));
            }
        }
        assert!(tr.to_csv().lines().count() == 1 + 2 * tr.times.len());
    }

    #[test]
    fn config_round_trip() {
        let json = r#"{"grid":{"L":8,"n":65},"v_axis":{"L":7,"n":61},"dt":0.01,"T":1,"sample_every":5,
            "p_list":[1.5],"initial":{"kind":"decentred","x0":1,"v0":0},
            "controller":{"enabled":true,"nu_choice":0.5,"a_star_fraction":0.2},"scheme":"extrapolated_strang"}"#;
        let cfg: KfpConfig = serde_json::from_str(json).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.scheme, SplittingScheme::ExtrapolatedStrang);
        let g = cfg.build_grid().unwrap();
        assert_eq!((g.axes[0].len(), g.axes[1].len()), (65, 61));
        let back: KfpConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<KfpConfig>(&json.replace("\"dt\"", "\"dtt\"")).is_err());
    }

    #[test]
    fn v_independent_start_has_no_velocity_gradient() {
        let mut cfg = small(KfpInitial::VIndependent { x0: 0.8 });
        cfg.controller.enabled = true;
        let g0 = cfg.initial.sample(cfg.build_grid().unwrap()).unwrap();
        let tr = evolve_kfp(&g0, &cfg, Execution::Sequential).unwrap();
        let c = tr.channel(1.5).unwrap();
        assert!(c.diagnostics[0].a.abs() < 1e-20 && c.diagnostics[0].j > 0.0);
        assert_eq!((c.lambda_t[0], c.rho_t[0]), (0.5, 0.5));
        assert!(c.diagnostics[1].a > 0.0);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let cfg = small(KfpInitial::Random { seed: 3, components: 3 });
        let g0 = cfg.initial.sample(cfg.build_grid().unwrap()).unwrap();
        let a = evolve_kfp(&g0, &cfg, Execution::Sequential).unwrap();
        let b = evolve_kfp(&g0, &cfg, Execution::Parallel).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }
}
