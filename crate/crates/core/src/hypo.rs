//! The hypocoercivity matrices M0…M3, their spectra, and the rate λ⋆.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, pencil_2x2};

/// Tolerance on the smallest eigenvalue of M2 when testing positivity.
pub const PSD_TOL: f64 = -1e-12;

type M2x2 = [[f64; 2]; 2];
type M4x4 = [[f64; 4]; 4];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypoParams {
    pub lambda: f64,
    pub nu: f64,
    pub kappa: f64,
}

impl HypoParams {
    pub fn new(lambda: f64, nu: f64, kappa: f64) -> Self {
        Self { lambda, nu, kappa }
    }
}

/// Coefficient matrices of the quadratic forms on the scalar blocks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypoMatrixSet {
    pub m0: M2x2,
    pub m1: M2x2,
    pub m2: M4x4,
    pub m3: M2x2,
}

pub fn m0(lambda: f64, nu: f64) -> M2x2 {
    [[1.0, lambda], [lambda, nu]]
}

pub fn m1(lambda: f64, nu: f64) -> M2x2 {
    let off = (1.0 + lambda - nu) / 2.0;
    [[1.0 - lambda, off], [off, lambda]]
}

pub const M3: M2x2 = [[1.0, 0.0], [0.0, 0.0]];

pub fn m2(lambda: f64, nu: f64, kappa: f64) -> M4x4 {
    let (l, n, k) = (lambda, nu, kappa);
    [
        [1.0, l, -k / 2.0, -k * l / 2.0],
        [l, n, -k * l / 2.0, -k * n / 2.0],
        [-k / 2.0, -k * l / 2.0, 2.0 * k, 2.0 * k * l],
        [-k * l / 2.0, -k * n / 2.0, 2.0 * k * l, 2.0 * k * n],
    ]
}

pub fn build_matrices(p: HypoParams) -> HypoMatrixSet {
    HypoMatrixSet {
        m0: m0(p.lambda, p.nu),
        m1: m1(p.lambda, p.nu),
        m2: m2(p.lambda, p.nu, p.kappa),
        m3: M3,
    }
}

fn rows<const N: usize>(m: &[[f64; N]; N]) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

/// Ascending eigenvalues of a symmetric matrix of size at most 4.
pub fn eigenvalues_numeric<const N: usize>(m: &[[f64; N]; N]) -> Result<Vec<f64>> {
    eigenvalues(&rows(m))
}

/// The labelled closed-form eigenvalues of M2(½, 1, κ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormEigenvalues {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
}

impl ClosedFormEigenvalues {
    pub fn as_array(&self) -> [f64; 4] {
        [self.l1, self.l2, self.l3, self.l4]
    }

    pub fn min(&self) -> f64 {
        self.as_array().into_iter().fold(f64::INFINITY, f64::min)
    }
}

pub fn eigenvalues_m2_closed_form(kappa: f64) -> ClosedFormEigenvalues {
    let root = (5.0 * kappa * kappa - 4.0 * kappa + 1.0).sqrt();
    let l1 = (2.0 * kappa + 1.0 - root) / 4.0;
    let l3 = (2.0 * kappa + 1.0 + root) / 4.0;
    ClosedFormEigenvalues { l1, l2: 3.0 * l1, l3, l4: 3.0 * l3 }
}

/// Largest pairwise gap after sorting both sides.
pub fn multiset_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub lambda_sq_le_nu: bool,
    pub m0_min_eigenvalue: f64,
    pub m2_min_eigenvalue: f64,
}

pub fn is_feasible(p: HypoParams) -> Feasibility {
    let mats = build_matrices(p);
    let m0_min = eigenvalues_numeric(&mats.m0).map_or(f64::NAN, |e| e[0]);
    let m2_min = eigenvalues_numeric(&mats.m2).map_or(f64::NAN, |e| e[0]);
    let lambda_sq_le_nu = p.lambda * p.lambda <= p.nu;
    Feasibility {
        feasible: lambda_sq_le_nu && m0_min > 0.0 && m2_min >= PSD_TOL,
        lambda_sq_le_nu,
        m0_min_eigenvalue: m0_min,
        m2_min_eigenvalue: m2_min,
    }
}

/// λ⋆(λ, ν) = min_X (X·M1X)/(X·M0X).
pub fn lambda_star(p: HypoParams) -> Result<f64> {
    Ok(pencil_2x2(m1(p.lambda, p.nu), m0(p.lambda, p.nu))?.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub lambda_range: (f64, f64),
    pub nu_range: (f64, f64),
    pub coarse_step: f64,
    pub fine_step: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { lambda_range: (0.0, 1.0), nu_range: (0.0, 2.0), coarse_step: 0.01, fine_step: 1e-5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub kappa: f64,
    pub lambda_opt: f64,
    pub nu_opt: f64,
    pub value: f64,
}

fn objective(lambda: f64, nu: f64, kappa: f64) -> Option<f64> {
    let p = HypoParams::new(lambda, nu, kappa);
    if !is_feasible(p).feasible {
        return None;
    }
    lambda_star(p).ok()
}

/// Maximises λ⋆ over the feasible set by a coarse grid followed by
/// successively finer local grids.
pub fn optimize_lambda_star(kappa: f64, cfg: &SearchConfig) -> Result<Optimum> {
    if !(0.0..=8.0).contains(&kappa) {
        return Err(Error::Domain(format!("kappa = {kappa} outside [0, 8]")));
    }
    let mut best: Option<(f64, f64, f64)> = None;
    let scan = |lo: (f64, f64), hi: (f64, f64), step: f64, best: &mut Option<(f64, f64, f64)>| {
        let nl = ((hi.0 - lo.0) / step).round() as usize;
        let nn = ((hi.1 - lo.1) / step).round() as usize;
        for i in 0..=nl {
            let l = lo.0 + (hi.0 - lo.0) * i as f64 / nl.max(1) as f64;
            for j in 0..=nn {
                let n = lo.1 + (hi.1 - lo.1) * j as f64 / nn.max(1) as f64;
                if let Some(v) = objective(l, n, kappa) {
                    if best.is_none_or(|b| v > b.2) {
                        *best = Some((l, n, v));
                    }
                }
            }
        }
    };
    let (lr, nr) = (cfg.lambda_range, cfg.nu_range);
    scan((lr.0, nr.0), (lr.1, nr.1), cfg.coarse_step, &mut best);
    let mut step = cfg.coarse_step;
    while step > cfg.fine_step * (1.0 + 1e-9) {
        let Some((l, n, _)) = best else { break };
        let next = (step / 10.0).max(cfg.fine_step);
        let lo = ((l - step).max(lr.0), (n - step).max(nr.0));
        let hi = ((l + step).min(lr.1), (n + step).min(nr.1));
        scan(lo, hi, next, &mut best);
        step = next;
    }
    let (lambda_opt, nu_opt, value) =
        best.ok_or_else(|| Error::Domain(format!("no feasible (lambda, nu) for kappa = {kappa}")))?;
    Ok(Optimum { kappa, lambda_opt, nu_opt, value })
}

/// Both generalised eigenvalues of (M1(λ,1) + ½νεM0(λ,1) + εM3, M0(λ,1)), ascending.
///
/// ν here is the free scalar of the adaptive construction, distinct from the
/// second matrix parameter, which is pinned to 1.
pub fn zeta_pair(epsilon: f64, lambda: f64, nu_param: f64) -> Result<(f64, f64)> {
    let a0 = m0(lambda, 1.0);
    let a1 = m1(lambda, 1.0);
    let mut a = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            a[i][j] = a1[i][j] + 0.5 * nu_param * epsilon * a0[i][j] + epsilon * M3[i][j];
        }
    }
    pencil_2x2(a, a0)
}

/// ζ(ε, λ, ν): the smallest generalised eigenvalue of the perturbed pencil.
pub fn zeta(epsilon: f64, lambda: f64, nu_param: f64) -> Result<f64> {
    Ok(zeta_pair(epsilon, lambda, nu_param)?.0)
}

/// Central difference of ζ along the eigenvalue branch that is the minimum
/// on the positive side of the base point.
///
/// At (0, ½) the pencil is degenerate and the two branches cross, so ζ has a
/// kink there. Following the branch through the crossing means taking the
/// lower eigenvalue at `+h` and the upper one at `−h`.
pub fn zeta_branch_derivative(
    f: impl Fn(f64) -> Result<(f64, f64)>,
    h: f64,
) -> Result<f64> {
    let plus = f(h)?.0;
    let minus = f(-h)?.1;
    Ok((plus - minus) / (2.0 * h))
}
