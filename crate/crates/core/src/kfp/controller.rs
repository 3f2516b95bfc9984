//! Adaptive choice of λ(t) and the resulting decay exponent ρ(t).

use serde::{Deserialize, Serialize};

use super::KineticDiagnostics;
use crate::error::{Error, Result};
use crate::hypo::{eigenvalues_numeric, m2, zeta};
use crate::phi::PhiFamily;

/// a is treated as zero below this fraction of j.
pub const ZERO_FRACTION: f64 = 1e-3;
/// j at or below this is roundoff from stationary data.
pub const J_ROUNDOFF: f64 = 1e-20;
const LAMBDA_MAX: f64 = 1.0 - 1e-12;
/// ν used inside ζ on the exponential branch, where λ = (1+ε)/2 ties the
/// two perturbations together.
const MAIN_BRANCH_NU: f64 = -0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_nu_choice")]
    pub nu_choice: f64,
    #[serde(default = "default_a_star_fraction")]
    pub a_star_fraction: f64,
}

fn default_nu_choice() -> f64 {
    1.0
}

fn default_a_star_fraction() -> f64 {
    0.1
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self { enabled: false, nu_choice: default_nu_choice(), a_star_fraction: default_a_star_fraction() }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let hi = 1.0 + 3f64.sqrt() / 2.0;
        if !(self.nu_choice > 0.0 && self.nu_choice < hi) {
            return Err(Error::Config(format!("nu_choice must lie in (0, {hi}), got {}", self.nu_choice)));
        }
        if !(self.a_star_fraction > 0.0 && self.a_star_fraction <= 1.0) {
            return Err(Error::Config(format!("a_star_fraction must lie in (0, 1], got {}", self.a_star_fraction)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// a(t) is numerically zero.
    #[default]
    Zero,
    /// ε(t) = ν e^{−t}, λ(t) = (1+ε)/2.
    Exponential,
    /// λ re-anchored at ½ and driven by dλ/dt = ν ε(t).
    Local,
}

#[derive(Clone, Debug, Serialize)]
pub struct AdaptiveLambdaState {
    pub lambda_t: f64,
    pub rho_t: f64,
    pub epsilon_t: f64,
    pub nu_choice: f64,
    pub tau_partial: f64,
    pub branch: Branch,
    pub time: f64,
    /// Times at which a(t) was found to vanish after being positive.
    pub zero_events: Vec<f64>,
    a_star_fraction: f64,
    kappa: f64,
    c0: f64,
    a_history: Vec<f64>,
    started: bool,
}

impl AdaptiveLambdaState {
    /// `initial_entropy` is E[g0] at the start of the run.
    pub fn new(cfg: &ControllerConfig, fam: &PhiFamily, initial_entropy: f64) -> Self {
        Self {
            lambda_t: 0.5,
            rho_t: 0.5,
            epsilon_t: 0.0,
            nu_choice: cfg.nu_choice,
            tau_partial: 0.0,
            branch: Branch::Zero,
            time: 0.0,
            zero_events: Vec::new(),
            a_star_fraction: cfg.a_star_fraction,
            kappa: fam.kappa(),
            c0: 1.0 + (fam.p - 1.0) * initial_entropy,
            a_history: Vec::new(),
            started: false,
        }
    }

    pub fn a_star(&self) -> f64 {
        if self.a_history.is_empty() {
            return 0.0;
        }
        let mut s = self.a_history.clone();
        s.sort_by(f64::total_cmp);
        let k = s.len();
        let median = if k % 2 == 1 { s[k / 2] } else { 0.5 * (s[k / 2 - 1] + s[k / 2]) };
        self.a_star_fraction * median
    }

    fn lambda1(&self) -> Result<f64> {
        Ok(eigenvalues_numeric(&m2(self.lambda_t, 1.0, self.kappa))?[0].max(0.0))
    }

    /// Advances the controller to the time of `diag`.
    pub fn update(&mut self, diag: &KineticDiagnostics) -> Result<()> {
        let dt = if self.started { diag.t - self.time } else { 0.0 };
        let rho_prev = self.rho_t;
        let t = diag.t;
        let zero = diag.j <= J_ROUNDOFF || diag.a < ZERO_FRACTION * diag.j;
        if zero {
            if self.branch != Branch::Zero && self.started {
                self.zero_events.push(t);
            }
            self.branch = Branch::Zero;
            self.lambda_t = 0.5;
            self.epsilon_t = 0.0;
            self.rho_t = 0.5;
        } else {
            self.a_history.push(diag.a);
            let a_star = self.a_star();
            let lambda1 = self.lambda1()?;
            if diag.a >= a_star {
                self.branch = Branch::Exponential;
                let nu = lambda1 / self.c0 * a_star;
                self.epsilon_t = nu * (-t).exp();
                self.lambda_t = ((1.0 + self.epsilon_t) / 2.0).clamp(0.5, LAMBDA_MAX);
                self.rho_t = zeta(self.epsilon_t, self.lambda_t, MAIN_BRANCH_NU)?;
            } else {
                if self.branch != Branch::Local {
                    self.lambda_t = 0.5;
                }
                self.branch = Branch::Local;
                self.epsilon_t = lambda1 / self.c0 * diag.a * (-t).exp();
                self.lambda_t = (self.lambda_t + self.nu_choice * self.epsilon_t * dt).clamp(0.5, LAMBDA_MAX);
                self.rho_t = zeta(self.epsilon_t, self.lambda_t, self.nu_choice)?;
            }
        }
        if self.started {
            self.tau_partial += dt * ((2.0 * rho_prev - 1.0) + (2.0 * self.rho_t - 1.0)) / 2.0;
        }
        self.time = t;
        self.started = true;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TauEstimate {
    pub tau: f64,
    pub converged: bool,
}

/// τ ≈ ∫(2ρ − 1) by the trapezoid rule, flagged converged when the running
/// integral moved by less than 1% over the last quarter of the trace.
pub fn estimate_tau(times: &[f64], rho: &[f64]) -> TauEstimate {
    let n = times.len().min(rho.len());
    if n < 2 {
        return TauEstimate { tau: 0.0, converged: false };
    }
    let mut partial = vec![0.0; n];
    for i in 1..n {
        partial[i] = partial[i - 1] + (times[i] - times[i - 1]) * (rho[i - 1] + rho[i] - 1.0);
    }
    let tau = partial[n - 1];
    let q = partial[(3 * (n - 1)) / 4];
    let converged = (tau - q).abs() <= 0.01 * tau.abs() || (tau - q).abs() < 1e-12;
    TauEstimate { tau, converged }
}
