//! The φ_p entropy generators and their derived constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this distance from 1 the exponent is treated as exactly 1.
pub const P_ONE_TOL: f64 = 1e-12;

/// φ_p(s) = (s^p − 1 − p(s−1))/(p−1) for p ∈ (1,2], and s ln s − (s−1) at p = 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiFamily {
    pub p: f64,
}

impl PhiFamily {
    pub fn new(p: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&p) || p.is_nan() {
            return Err(Error::Domain(format!("exponent p = {p} outside [1, 2]")));
        }
        Ok(Self { p })
    }

    pub fn is_log(&self) -> bool {
        (self.p - 1.0).abs() < P_ONE_TOL
    }

    /// κ = 8(2 − p)/p, the coupling constant in the second-order identities.
    pub fn kappa(&self) -> f64 {
        8.0 * (2.0 - self.p) / self.p
    }

    /// κ_p = (p − 1)(2 − p)/p, the improvement constant of the refined EEP inequality.
    pub fn kappa_p(&self) -> f64 {
        (self.p - 1.0) * (2.0 - self.p) / self.p
    }

    /// Constant A of the Csiszár-Kullback inequality (A = p).
    pub fn ck_constant(&self) -> f64 {
        self.p
    }

    /// φ (order 0), φ' (order 1) or φ'' (order 2) at `s`.
    pub fn eval(&self, s: f64, order: u8) -> Result<f64> {
        if s < 0.0 || s.is_nan() {
            return Err(Error::Domain(format!("phi evaluated at s = {s}")));
        }
        if s == 0.0 && order >= 1 && self.p < 2.0 {
            return Err(Error::Domain(format!(
                "phi derivative of order {order} is singular at s = 0 for p = {}",
                self.p
            )));
        }
        match order {
            0 => Ok(self.phi(s)),
            1 => Ok(self.dphi(s)),
            2 => Ok(self.d2phi(s)),
            _ => Err(Error::Domain(format!("unsupported derivative order {order}"))),
        }
    }

    /// φ(s) without argument checks. Written to stay accurate near s = 1.
    #[inline]
    pub fn phi(&self, s: f64) -> f64 {
        let p = self.p;
        if self.is_log() {
            if s == 0.0 {
                return 1.0;
            }
            let d = s - 1.0;
            return s * d.ln_1p() - d;
        }
        if p == 2.0 {
            let d = s - 1.0;
            return d * d;
        }
        if s == 0.0 {
            return 1.0;
        }
        // s^p − 1 − p(s−1) = expm1(p ln s) − p(s−1); fine away from s=1, and
        // near s=1 the Taylor series avoids the cancellation.
        let d = s - 1.0;
        if d.abs() < 1e-3 {
            // p(p−1)/2 d² + p(p−1)(p−2)/6 d³ + p(p−1)(p−2)(p−3)/24 d⁴ ...
            let mut term = p * d * d / 2.0;
            let mut sum = term;
            for k in 2..8 {
                term *= (p - k as f64) * d / (k as f64 + 1.0);
                sum += term;
            }
            return sum;
        }
        ((p * d.ln_1p()).exp_m1() - p * d) / (p - 1.0)
    }

    #[inline]
    pub fn dphi(&self, s: f64) -> f64 {
        let p = self.p;
        if self.is_log() {
            return (s - 1.0).ln_1p();
        }
        p * ((p - 1.0) * (s - 1.0).ln_1p()).exp_m1() / (p - 1.0)
    }

    #[inline]
    pub fn d2phi(&self, s: f64) -> f64 {
        let p = self.p;
        if self.is_log() {
            return 1.0 / s;
        }
        p * s.powf(p - 2.0)
    }
}
