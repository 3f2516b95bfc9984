//! The one-dimensional Ornstein-Uhlenbeck flow ∂w/∂t = w'' − x w' and the
//! improved entropy decay estimate.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::ScalarField;
use crate::format::csv_row;
use crate::fit::{derivative5, fit_decay_rate};
use crate::grid::{GridSpec, QuadratureGrid};
use crate::interp::{Defect, Lagrange, OuOperator, DEFAULT_GH_NODES, DEFAULT_INTERP_POINTS};
use crate::phi::PhiFamily;
use crate::profiles::{hermite_normalized, shifted_gaussian_ratio};
use crate::quadrature::GaussHermite;

/// Mass drift beyond which a run is aborted.
pub const MAX_MASS_DRIFT: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct OuState {
    pub field: ScalarField,
    pub time: f64,
}

/// The exact OU transition for one fixed step, applied by a precomputed banded operator.
#[derive(Clone, Debug)]
pub struct OuStepper {
    pub op: OuOperator,
}

impl OuStepper {
    pub fn new(grid: &QuadratureGrid, dt: f64, interp_points: usize, gh_nodes: usize) -> Result<Self> {
        if grid.dimension() != 1 {
            return Err(Error::Precondition("the OU stepper acts on one-dimensional grids".into()));
        }
        let interp = Lagrange::new(interp_points)?;
        let op = OuOperator::new(&grid.axes[0], dt, &GaussHermite::new(gh_nodes), &interp)?;
        Ok(Self { op })
    }

    pub fn step(&self, state: &OuState, defect: &mut Defect) -> OuState {
        let mut values = vec![0.0; state.field.values.len()];
        self.op.apply_line(&state.field.values, 0, 1, &mut values);
        defect.clip(&mut values);
        OuState {
            field: ScalarField { values, ..state.field.clone() },
            time: state.time + self.op.dt,
        }
    }
}

/// One OU step with the default quadrature and interpolation widths.
pub fn ou_step(state: &OuState, dt: f64) -> Result<(OuState, Defect)> {
    let stepper = OuStepper::new(&state.field.grid, dt, DEFAULT_INTERP_POINTS, DEFAULT_GH_NODES)?;
    let mut defect = Defect { clamped_feet: stepper.op.clamped_feet, ..Default::default() };
    let next = stepper.step(state, &mut defect);
    Ok((next, defect))
}

/// The decentred solution w(t, x) = exp(x·x0e^{−t} − (x0e^{−t})²/2).
pub fn exact_fp_oracle(x0: f64, t: f64, grid: Arc<QuadratureGrid>) -> Result<ScalarField> {
    let a = x0 * (-t).exp();
    ScalarField::from_fn(grid, |x, _| shifted_gaussian_ratio(x, a))
}

/// Initial data for an FP run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum FpInitial {
    ShiftedGaussian { x0: f64 },
    /// 1 + eps·He_k/√k!.
    HermitePerturbation { k: usize, eps: f64 },
    /// Convex combination of shifted-Gaussian ratios with seeded centres.
    RandomMixture { components: usize, seed: u64 },
}

impl FpInitial {
    pub fn sample(&self, grid: Arc<QuadratureGrid>) -> Result<ScalarField> {
        match *self {
            FpInitial::ShiftedGaussian { x0 } => exact_fp_oracle(x0, 0.0, grid),
            FpInitial::HermitePerturbation { k, eps } => {
                ScalarField::from_fn(grid, |x, _| 1.0 + eps * hermite_normalized(k, x))
            }
            FpInitial::RandomMixture { components, seed } => {
                let mix = crate::inequality::Mixture::random(components, seed, 1.5);
                ScalarField::from_fn(grid, |x, _| mix.eval(x))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpConfig {
    pub grid: GridSpec,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub sample_every: usize,
    pub p_list: Vec<f64>,
    pub initial: FpInitial,
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

impl FpConfig {
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
        Ok(())
    }
}

/// Per-exponent diagnostics along a trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FpChannel {
    pub p: f64,
    pub entropy: Vec<f64>,
    pub fisher: Vec<f64>,
    pub ck_bound: Vec<f64>,
    /// Comparison-ODE envelope started from the measured E(0).
    pub improved_bound: Vec<f64>,
    pub max_floored_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayTrace {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub min_value: Vec<f64>,
    pub channels: Vec<FpChannel>,
    pub defect: Defect,
    pub sample_step: f64,
    /// Grid spacing and stencil order, for error budgets.
    pub h: f64,
    pub stencil_order: usize,
}

impl DecayTrace {
    pub fn channel(&self, p: f64) -> Option<&FpChannel> {
        self.channels.iter().find(|c| c.p == p)
    }

    pub fn fit_entropy_rate(&self, p: f64, window: (f64, f64)) -> Result<f64> {
        let ch = self.channel(p).ok_or_else(|| Error::Precondition(format!("no channel for p = {p}")))?;
        fit_decay_rate(&self.times, &ch.entropy, window)
    }

    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.mass[0];
        self.mass.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max)
    }

    /// Largest increase of E between consecutive samples, over all channels.
    pub fn max_entropy_increase(&self) -> f64 {
        self.channels
            .iter()
            .flat_map(|c| c.entropy.windows(2).map(|w| w[1] - w[0]))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// max |dE/dt + I| over interior samples, with dE/dt from a five-point difference.
    pub fn production_residual(&self, channel: usize) -> f64 {
        let ch = &self.channels[channel];
        let de = derivative5(self.sample_step, &ch.entropy);
        let n = de.len();
        (2..n.saturating_sub(2)).map(|i| (de[i] + ch.fisher[i]).abs()).fold(0.0, f64::max)
    }

    /// Budget C·(Δ⁴ + h^q) for [`Self::production_residual`], C scaled by I(0).
    pub fn production_budget(&self, channel: usize) -> f64 {
        let i0 = self.channels[channel].fisher.first().copied().unwrap_or(0.0);
        PRODUCTION_BUDGET_C * i0 * (self.sample_step.powi(4) + self.h.powi(self.stencil_order as i32))
    }

    /// CSV `t,p,entropy,fisher,improved_bound,ck_bound`, one row per (sample, p).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,p,entropy,fisher,improved_bound,ck_bound\n");
        for (i, t) in self.times.iter().enumerate() {
            for c in &self.channels {
                let row = [*t, c.p, c.entropy[i], c.fisher[i], c.improved_bound[i], c.ck_bound[i]];
                csv_row(&mut out, &row);
            }
        }
        out
    }
}

/// The shifted-Gaussian oracle from x0 = 1 needs C ≈ 0.19 at L = 8, n = 513;
/// this keeps a tenfold margin.
pub const PRODUCTION_BUDGET_C: f64 = 2.0;

struct FpSample {
    entropy: f64,
    fisher: f64,
    floored: usize,
    ck: f64,
}

fn sample_channel(field: &ScalarField, fam: &PhiFamily) -> FpSample {
    let fi = field.fisher_information(fam);
    let ck = field.normalized().csiszar_kullback_bound(fam).map_or(f64::NAN, |b| b.0);
    FpSample { entropy: field.entropy(fam), fisher: fi.value, floored: fi.floored_nodes, ck }
}

/// Runs the flow from `w0` and records every p-channel at each sample.
pub fn evolve_fp(w0: &ScalarField, cfg: &FpConfig, exec: Execution) -> Result<DecayTrace> {
    cfg.validate()?;
    let fams: Vec<PhiFamily> = cfg.p_list.iter().map(|&p| PhiFamily::new(p)).collect::<Result<_>>()?;
    let stepper = OuStepper::new(&w0.grid, cfg.dt, cfg.interp_points, cfg.gh_nodes)?;
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let sample_step = cfg.dt * cfg.sample_every as f64;
    let mut defect = Defect { clamped_feet: stepper.op.clamped_feet, ..Default::default() };
    let mut state = OuState { field: w0.clone(), time: 0.0 };
    let m0 = w0.mass();

    let mut trace = DecayTrace {
        times: vec![],
        mass: vec![],
        min_value: vec![],
        channels: fams
            .iter()
            .map(|f| FpChannel {
                p: f.p,
                entropy: vec![],
                fisher: vec![],
                ck_bound: vec![],
                improved_bound: vec![],
                max_floored_nodes: 0,
            })
            .collect(),
        defect,
        sample_step,
        h: w0.grid.axes[0].h,
        stencil_order: w0.grid.stencil_order,
    };

    for k in 0..=steps {
        if k > 0 {
            state = stepper.step(&state, &mut defect);
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
        let t = k as f64 * cfg.dt;
        trace.times.push(t);
        trace.mass.push(mass);
        trace.min_value.push(state.field.min());
        let samples = exec.map(fams.len(), |j| sample_channel(&state.field, &fams[j]));
        for (c, s) in trace.channels.iter_mut().zip(samples) {
            c.entropy.push(s.entropy);
            c.fisher.push(s.fisher);
            c.ck_bound.push(s.ck);
            c.max_floored_nodes = c.max_floored_nodes.max(s.floored);
        }
    }
    trace.defect = defect;

    for (c, fam) in trace.channels.iter_mut().zip(&fams) {
        let env = integrate_improved_ode(c.entropy[0], fam, trace.times.last().copied().unwrap_or(0.0), sample_step / 4.0);
        c.improved_bound = (0..trace.times.len()).map(|i| env.values[4 * i]).collect();
    }
    Ok(trace)
}

/// F(s) = [1 + s − (1+s)^{κ_p}]/(1 − κ_p), the improved EEP profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ImprovedDecayModel {
    pub fam: PhiFamily,
}

impl ImprovedDecayModel {
    pub fn new(fam: PhiFamily) -> Self {
        Self { fam }
    }

    pub fn f(&self, s: f64) -> f64 {
        let k = self.fam.kappa_p();
        if k == 0.0 {
            return s;
        }
        // (1+s) − (1+s)^k = (1+s)(1 − (1+s)^{k−1}), written with expm1 for small s.
        -(1.0 + s) * ((k - 1.0) * s.ln_1p()).exp_m1() / (1.0 - k)
    }

    pub fn df(&self, s: f64) -> f64 {
        let k = self.fam.kappa_p();
        (1.0 - k * (1.0 + s).powf(k - 1.0)) / (1.0 - k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Envelope {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// RK4 solution of e' = −2F(e), e(0) = e0, on [0, t_end].
pub fn integrate_improved_ode(e0: f64, fam: &PhiFamily, t_end: f64, dt: f64) -> Envelope {
    let model = ImprovedDecayModel::new(*fam);
    let rhs = |e: f64| -2.0 * model.f(e.max(0.0));
    let steps = (t_end / dt).round() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    let mut e = e0;
    for k in 0..=steps {
        times.push(k as f64 * dt);
        values.push(e);
        let k1 = rhs(e);
        let k2 = rhs(e + 0.5 * dt * k1);
        let k3 = rhs(e + 0.5 * dt * k2);
        let k4 = rhs(e + dt * k3);
        e += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    Envelope { times, values }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ImprovedEepReport {
    pub p: f64,
    /// min_t I − 2F(E).
    pub min_f_margin: f64,
    pub argmin_f_time: f64,
    /// min_t −(dI/dt + 2I) − κ_p I²/(1 + (p−1)E), interior samples only.
    pub min_ode_margin: f64,
    pub argmin_ode_time: f64,
    /// max_t E(t) − envelope(t).
    pub max_envelope_excess: f64,
}

pub fn check_improved_eep(trace: &DecayTrace, fam: &PhiFamily) -> Result<ImprovedEepReport> {
    if !(fam.p > 1.0 && fam.p < 2.0) {
        return Err(Error::Precondition(format!("improved EEP needs p in (1, 2), got {}", fam.p)));
    }
    let ch = trace
        .channel(fam.p)
        .ok_or_else(|| Error::Precondition(format!("trace has no channel for p = {}", fam.p)))?;
    let model = ImprovedDecayModel::new(*fam);
    let kp = fam.kappa_p();
    let (mut min_f, mut arg_f) = (f64::INFINITY, 0.0);
    for (i, (&e, &fi)) in ch.entropy.iter().zip(&ch.fisher).enumerate() {
        let m = fi - 2.0 * model.f(e);
        if m < min_f {
            (min_f, arg_f) = (m, trace.times[i]);
        }
    }
    let di = derivative5(trace.sample_step, &ch.fisher);
    let n = di.len();
    let (mut min_o, mut arg_o) = (f64::INFINITY, 0.0);
    for i in 2..n.saturating_sub(2) {
        let (e, fi) = (ch.entropy[i], ch.fisher[i]);
        let m = -(di[i] + 2.0 * fi) - kp * fi * fi / (1.0 + (fam.p - 1.0) * e);
        if m < min_o {
            (min_o, arg_o) = (m, trace.times[i]);
        }
    }
    let excess = ch
        .entropy
        .iter()
        .zip(&ch.improved_bound)
        .map(|(e, b)| e - b)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ImprovedEepReport {
        p: fam.p,
        min_f_margin: min_f,
        argmin_f_time: arg_f,
        min_ode_margin: if min_o.is_finite() { min_o } else { 0.0 },
        argmin_ode_time: arg_o,
        max_envelope_excess: excess,
    })
}
