//! Sampled checks of the static functional inequalities on Gaussian grids.
//!
//! Every check returns a margin that is nonnegative when the inequality holds.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{derivative, phi_entropy, ScalarField};
use crate::grid::QuadratureGrid;
use crate::phi::PhiFamily;
use crate::profiles::{hermite_normalized, shifted_gaussian_ratio, smooth_step};

/// Generated fields stay inside this range, where φ'' is well conditioned.
pub const FIELD_RANGE: (f64, f64) = (0.1, 10.0);

/// Convex combination of shifted-Gaussian ratios in one or two variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub weights: Vec<f64>,
    pub shifts: Vec<[f64; 2]>,
}

impl Mixture {
    /// `components` one-dimensional shifts drawn uniformly from [−max_shift, max_shift].
    pub fn random(components: usize, seed: u64, max_shift: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..components.max(1)).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        Self {
            weights: raw.iter().map(|r| r / total).collect(),
            shifts: (0..raw.len()).map(|_| [rng.random_range(-max_shift..=max_shift), 0.0]).collect(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval2(x, 0.0)
    }

    pub fn eval2(&self, x: f64, v: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.shifts)
            .map(|(w, a)| w * shifted_gaussian_ratio(x, a[0]) * shifted_gaussian_ratio(v, a[1]))
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldFamily {
    HermitePerturbation,
    ShiftedGaussianRatio,
    PositiveMixture,
    StepLike,
}

impl FieldFamily {
    pub const ALL: [FieldFamily; 4] = [
        FieldFamily::HermitePerturbation,
        FieldFamily::ShiftedGaussianRatio,
        FieldFamily::PositiveMixture,
        FieldFamily::StepLike,
    ];

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

/// Seeded source of strictly positive test fields with values in [`FIELD_RANGE`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFieldGenerator {
    pub seed: u64,
    pub family: FieldFamily,
}

/// Largest |a| with exp(|a|·R + a²/2) ≤ 10, R = L·(number of axes).
fn max_shift(reach: f64) -> f64 {
    let ln10 = FIELD_RANGE.1.ln();
    -reach + (reach * reach + 2.0 * ln10).sqrt()
}

fn sup_hermite(k: usize, l: f64) -> f64 {
    // |He_k| is increasing beyond its largest root, so the sup over [−L, L]
    // sits at ±L once L exceeds that root; sample densely to be safe.
    (0..=4000)
        .map(|i| hermite_normalized(k, -l + 2.0 * l * i as f64 / 4000.0).abs())
        .fold(0.0, f64::max)
}

impl TestFieldGenerator {
    pub fn new(seed: u64, family: FieldFamily) -> Self {
        Self { seed, family }
    }

    fn rng(&self, dims: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (self.family.tag() << 8) ^ dims)
    }

    /// A field on the one-dimensional grid.
    pub fn field_1d(&self, grid: Arc<QuadratureGrid>) -> ScalarField {
        let l = grid.axes[0].l;
        let mut rng = self.rng(1);
        let values = match self.family {
            FieldFamily::HermitePerturbation => {
                let k = rng.random_range(1..=4);
                let eps = rng.random_range(-0.9..=0.9) / sup_hermite(k, l);
                grid.sample(|x, _| 1.0 + eps * hermite_normalized(k, x))
            }
            FieldFamily::ShiftedGaussianRatio => {
                let a = rng.random_range(-1.0..=1.0) * max_shift(l);
                grid.sample(|x, _| shifted_gaussian_ratio(x, a))
            }
            FieldFamily::PositiveMixture => {
                let m = Mixture::random(rng.random_range(2..=4), rng.random(), max_shift(l));
                grid.sample(|x, _| m.eval(x))
            }
            FieldFamily::StepLike => {
                let s = random_step(&mut rng);
                grid.sample(|x, _| smooth_step(x, s[0], s[1], s[2], s[3], s[4]))
            }
        };
        ScalarField::new(grid, values).expect("generated fields are positive")
    }

    /// A genuinely two-variable field on a tensor grid.
    pub fn field_2d(&self, grid: Arc<QuadratureGrid>) -> ScalarField {
        let l = grid.axes[0].l.max(grid.axes[1].l);
        let mut rng = self.rng(2);
        let values = match self.family {
            FieldFamily::HermitePerturbation => {
                let j = rng.random_range(0..=3);
                let k = rng.random_range(usize::from(j == 0)..=4 - j);
                let eps = rng.random_range(-0.9..=0.9) / (sup_hermite(j, l) * sup_hermite(k, l));
                grid.sample(|x, v| 1.0 + eps * hermite_normalized(j, x) * hermite_normalized(k, v))
            }
            FieldFamily::ShiftedGaussianRatio => {
                let a = random_shift_2d(&mut rng, l);
                grid.sample(|x, v| shifted_gaussian_ratio(x, a[0]) * shifted_gaussian_ratio(v, a[1]))
            }
            FieldFamily::PositiveMixture => {
                let n = rng.random_range(2..=4);
                let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
                let total: f64 = raw.iter().sum();
                let m = Mixture {
                    weights: raw.iter().map(|r| r / total).collect(),
                    shifts: (0..n).map(|_| random_shift_2d(&mut rng, l)).collect(),
                };
                grid.sample(|x, v| m.eval2(x, v))
            }
            FieldFamily::StepLike => {
                let s = random_step(&mut rng);
                let th: f64 = rng.random_range(0.0..std::f64::consts::PI);
                let (c, sn) = (th.cos(), th.sin());
                grid.sample(|x, v| smooth_step(c * x + sn * v, s[0], s[1], s[2], s[3], s[4]))
            }
        };
        ScalarField::new(grid, values).expect("generated fields are positive")
    }
}

fn random_step(rng: &mut ChaCha8Rng) -> [f64; 5] {
    let lo = rng.random_range(-2.0..=0.0);
    let hi = lo + rng.random_range(0.5..=3.0);
    let width = rng.random_range(0.4..=1.0);
    let base = rng.random_range(0.2..=1.0);
    let height = rng.random_range(0.5..=3.0);
    [lo, hi, width, base, height]
}

fn random_shift_2d(rng: &mut ChaCha8Rng, l: f64) -> [f64; 2] {
    let r = max_shift(2.0 * l);
    [rng.random_range(-r..=r), rng.random_range(-r..=r)]
}

/// Measure dμ = e^{−χ} dγ on the grid with e^{−b} dγ ≤ dμ ≤ e^{−a} dγ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbedMeasure {
    pub weights: Vec<f64>,
    pub a: f64,
    pub b: f64,
    /// ∫ dμ.
    pub total: f64,
}

impl PerturbedMeasure {
    /// Builds the weights from χ sampled at the nodes; χ must lie in [a, b].
    pub fn new(grid: &QuadratureGrid, chi: impl Fn(f64, f64) -> f64, a: f64, b: f64) -> Result<Self> {
        if a > b {
            return Err(Error::Precondition(format!("perturbation bounds a = {a} > b = {b}")));
        }
        let mut weights = Vec::with_capacity(grid.len());
        for (i, q) in grid.weights().iter().enumerate() {
            let [x, v] = grid.point(i);
            let c = chi(x, v);
            if c < a - 1e-15 || c > b + 1e-15 {
                return Err(Error::Precondition(format!("chi = {c} at x = {x} outside [{a}, {b}]")));
            }
            weights.push(q * (-c).exp());
        }
        let total = weights.iter().sum();
        Ok(Self { weights, a, b, total })
    }

    /// χ(x) = amplitude · sin x, with (a, b) = (−amplitude, amplitude).
    pub fn sine(grid: &QuadratureGrid, amplitude: f64) -> Result<Self> {
        let amp = amplitude.abs();
        Self::new(grid, |x, _| amplitude * x.sin(), -amp, amp)
    }

    fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.weights.iter().enumerate().map(|(i, q)| q * f(i)).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TensorizationReport {
    pub lhs: f64,
    /// ∫ E_{γ1}[w] dγ2.
    pub conditional_x: f64,
    /// ∫ E_{γ2}[w] dγ1.
    pub conditional_v: f64,
    pub residual: f64,
}

fn require_2d(w: &ScalarField) -> Result<(&[f64], &[f64])> {
    if w.grid.dimension() != 2 {
        return Err(Error::Precondition("check needs a two-dimensional product grid".into()));
    }
    Ok((&w.grid.axes[0].weights, &w.grid.axes[1].weights))
}

/// E_{γ1⊗γ2}[w] ≤ ∫ E_{γ1}[w] dγ2 + ∫ E_{γ2}[w] dγ1.
pub fn check_tensorization(w: &ScalarField, fam: &PhiFamily) -> Result<TensorizationReport> {
    let (q1, q2) = require_2d(w)?;
    let n2 = q2.len();
    let vals = &w.values;
    let conditional_x: f64 = (0..n2)
        .map(|j| q2[j] * phi_entropy(q1, (0..q1.len()).map(|i| vals[i * n2 + j]), fam))
        .sum();
    let conditional_v: f64 = (0..q1.len())
        .map(|i| q1[i] * phi_entropy(q2, vals[i * n2..(i + 1) * n2].iter().copied(), fam))
        .sum();
    let lhs = w.entropy(fam);
    Ok(TensorizationReport { lhs, conditional_x, conditional_v, residual: conditional_x + conditional_v - lhs })
}

/// ∫ E_{γ1}[w] dγ2 − E_{γ1}[∫ w dγ2].
pub fn check_jensen_lemma(w: &ScalarField, fam: &PhiFamily) -> Result<f64> {
    let (q1, q2) = require_2d(w)?;
    let n2 = q2.len();
    let vals = &w.values;
    let lhs: f64 = (0..n2)
        .map(|j| q2[j] * phi_entropy(q1, (0..q1.len()).map(|i| vals[i * n2 + j]), fam))
        .sum();
    let marginal: Vec<f64> =
        (0..q1.len()).map(|i| (0..n2).map(|j| q2[j] * vals[i * n2 + j]).sum()).collect();
    let rhs = phi_entropy(q1, marginal.iter().copied(), fam);
    Ok(lhs - rhs)
}

/// I[w] − Λ E[w] on a field of any dimension.
pub fn check_gap(w: &ScalarField, fam: &PhiFamily, lambda: f64) -> f64 {
    w.fisher_information(fam).value - lambda * w.entropy(fam)
}

/// t E[w1] + (1−t) E[w0] − E[t w1 + (1−t) w0].
pub fn check_convexity(w0: &ScalarField, w1: &ScalarField, t: f64, fam: &PhiFamily) -> f64 {
    let mid = ScalarField {
        values: w0.values.iter().zip(&w1.values).map(|(a, b)| t * b + (1.0 - t) * a).collect(),
        ..w0.clone()
    };
    t * w1.entropy(fam) + (1.0 - t) * w0.entropy(fam) - mid.entropy(fam)
}

/// Entropy minus the Csiszár-Kullback lower bound, on the mass-normalised field.
pub fn check_csiszar_kullback(w: &ScalarField, fam: &PhiFamily) -> Result<f64> {
    let (bound, entropy) = w.normalized().csiszar_kullback_bound(fam)?;
    Ok(entropy - bound)
}

/// Ratio I/E, or `None` when E is too small to divide by.
pub fn eep_ratio(w: &ScalarField, fam: &PhiFamily) -> Option<f64> {
    let e = w.entropy(fam);
    (e > 1e-20).then(|| w.fisher_information(fam).value / e)
}

/// Λ measured as inf I/E over the one-dimensional generator family and the
/// near-linear witness 1 + εx with small ε.
pub fn measure_lambda(grid: Arc<QuadratureGrid>, fam: &PhiFamily, seeds: u64) -> f64 {
    let mut best = f64::INFINITY;
    for eps in [1e-3, 1e-2] {
        let w = ScalarField::from_fn(grid.clone(), |x, _| 1.0 + eps * x).expect("positive witness");
        if let Some(r) = eep_ratio(&w, fam) {
            best = best.min(r);
        }
    }
    for seed in 0..seeds {
        for family in FieldFamily::ALL {
            let w = TestFieldGenerator::new(seed, family).field_1d(grid.clone());
            if let Some(r) = eep_ratio(&w, fam) {
                best = best.min(r);
            }
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolleyStroockReport {
    /// e^{a−b} Λ ∫[φ(w) − φ(w̃) − φ'(w̃)(w − w̃)] dμ.
    pub lhs: f64,
    /// ∫ φ''(w)|∇w|² dμ.
    pub rhs: f64,
    pub margin: f64,
}

pub fn check_holley_stroock(
    w: &ScalarField,
    fam: &PhiFamily,
    mu: &PerturbedMeasure,
    lambda: f64,
) -> Result<HolleyStroockReport> {
    if mu.weights.len() != w.values.len() {
        return Err(Error::Precondition("measure and field live on different grids".into()));
    }
    let vals = &w.values;
    let wt = mu.integrate(|i| vals[i]) / mu.total;
    let (pw, dpw) = (fam.phi(wt), fam.dphi(wt));
    let bregman = mu.integrate(|i| fam.phi(vals[i]) - pw - dpw * (vals[i] - wt));
    let grads: Vec<Vec<f64>> = (0..w.grid.dimension()).map(|a| derivative(&w.grid, vals, a, 1)).collect();
    let rhs = mu.integrate(|i| {
        let g2: f64 = grads.iter().map(|g| g[i] * g[i]).sum();
        fam.d2phi(vals[i].max(w.floor)) * g2
    });
    let lhs = (mu.a - mu.b).exp() * lambda * bregman;
    Ok(HolleyStroockReport { lhs, rhs, margin: rhs - lhs })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterpolationReport {
    pub q: f64,
    /// (‖f‖₂² − ‖f‖_q²)/(2 − q), or its q = 2 limit.
    pub lhs: f64,
    /// ∫|∇f|² dγ.
    pub gradient_energy: f64,
    /// [(‖f‖₂² − ‖f‖_q²)/(2 − q)] / ∫|∇f|² dγ, Λ = 1. At q = 2 the left side
    /// is its limit ½ ∫ f² ln(f²/‖f‖₂²) dγ.
    pub ratio: f64,
    /// Var(f)/∫|∇f|², the Poincaré form.
    pub poincare_ratio: f64,
    /// The two-norm strengthening with the constant 2/(2−q)².
    pub two_norm_ratio_printed: f64,
    /// The same with constant 1/(2−q)².
    pub two_norm_ratio_normalized: f64,
    pub degenerate: bool,
}

pub fn check_interpolation_family(f: &ScalarField, q: f64) -> Result<InterpolationReport> {
    if !(1.0..=2.0).contains(&q) {
        return Err(Error::Precondition(format!("interpolation exponent q = {q} outside [1, 2]")));
    }
    let grid = &f.grid;
    let vals = &f.values;
    let grad2: f64 = {
        let grads: Vec<Vec<f64>> = (0..grid.dimension()).map(|a| derivative(grid, vals, a, 1)).collect();
        let sq: Vec<f64> = (0..vals.len()).map(|i| grads.iter().map(|g| g[i] * g[i]).sum()).collect();
        grid.integrate(&sq)
    };
    let n2sq = f.lp_norm(2.0).powi(2);
    let lhs = if q < 2.0 {
        (n2sq - f.lp_norm(q).powi(2)) / (2.0 - q)
    } else {
        let s: Vec<f64> = vals
            .iter()
            .map(|v| if *v == 0.0 { 0.0 } else { v * v * (v * v / n2sq).ln() })
            .collect();
        0.5 * grid.integrate(&s)
    };
    let mean = grid.integrate(vals);
    let var = n2sq - mean * mean;
    let degenerate = grad2 < 1e-28;
    let div = |x: f64| if degenerate { 0.0 } else { x / grad2 };
    let two_norm = if q < 2.0 {
        (n2sq - f.lp_norm(q).powf(2.0 * (2.0 - q)) * n2sq.powf(q - 1.0)) / (2.0 - q).powi(2)
    } else {
        f64::NAN
    };
    Ok(InterpolationReport {
        q,
        lhs,
        gradient_energy: grad2,
        ratio: div(lhs),
        poincare_ratio: div(var),
        two_norm_ratio_printed: div(2.0 * two_norm),
        two_norm_ratio_normalized: div(two_norm),
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid1() -> Arc<QuadratureGrid> {
        Arc::new(QuadratureGrid::build(1, 8.0, 257, 8).unwrap())
    }

    fn grid2() -> Arc<QuadratureGrid> {
        Arc::new(QuadratureGrid::build(2, 8.0, 97, 8).unwrap())
    }

    #[test]
    fn generated_fields_stay_in_range() {
        for seed in 0..20 {
            for fam in FieldFamily::ALL {
                let g = TestFieldGenerator::new(seed, fam);
                for w in [g.field_1d(grid1()), g.field_2d(grid2())] {
                    let (lo, hi) = w.values.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
                    assert!(lo >= FIELD_RANGE.0 - 1e-12 && hi <= FIELD_RANGE.1 + 1e-12, "{fam:?} {lo} {hi}");
                }
            }
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let a = TestFieldGenerator::new(7, FieldFamily::PositiveMixture).field_2d(grid2());
        let b = TestFieldGenerator::new(7, FieldFamily::PositiveMixture).field_2d(grid2());
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn tensorization_trivial_cases() {
        let g = grid2();
        let fam = PhiFamily::new(1.5).unwrap();
        let c = ScalarField::constant(g.clone(), 2.0).unwrap();
        let r = check_tensorization(&c, &fam).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.residual.abs() < 1e-12, "{r:?}");
        let x_only = ScalarField::from_fn(g, |x, _| shifted_gaussian_ratio(x, 0.2)).unwrap();
        let r = check_tensorization(&x_only, &fam).unwrap();
        assert!(r.conditional_v.abs() < 1e-14);
        assert_abs_diff_eq!(r.lhs, r.conditional_x, epsilon = 1e-14);
        assert!(check_jensen_lemma(&x_only, &fam).unwrap().abs() < 1e-14);
    }

    #[test]
    fn sum_mode_is_sharp() {
        let g = grid2();
        let fam = PhiFamily::new(2.0).unwrap();
        let eps = 0.01;
        let w = ScalarField::from_fn(g, |x, v| 1.0 + eps * (x + v) / 2f64.sqrt()).unwrap();
        assert_abs_diff_eq!(eep_ratio(&w, &fam).unwrap(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn holley_stroock_reduces_without_perturbation() {
        let g = grid1();
        let fam = PhiFamily::new(2.0).unwrap();
        let flat = PerturbedMeasure::new(&g, |_, _| 0.0, 0.0, 0.0).unwrap();
        let w = TestFieldGenerator::new(3, FieldFamily::StepLike).field_1d(g.clone());
        let r = check_holley_stroock(&w, &fam, &flat, 2.0).unwrap();
        // With μ = γ the Bregman integral is the entropy.
        assert_abs_diff_eq!(r.lhs, 2.0 * w.entropy(&fam), epsilon = 1e-13);
        assert_abs_diff_eq!(r.rhs, w.fisher_information(&fam).value, epsilon = 1e-13);
        let c = ScalarField::constant(g.clone(), 3.0).unwrap();
        let mu = PerturbedMeasure::sine(&g, 0.3).unwrap();
        let r = check_holley_stroock(&c, &fam, &mu, 2.0).unwrap();
        assert!(r.lhs.abs() < 1e-14 && r.rhs.abs() < 1e-14);
        assert!(PerturbedMeasure::new(&g, |x, _| x.sin(), -0.3, 0.3).is_err());
    }

    #[test]
    fn interpolation_witnesses() {
        let g = grid1();
        let one = ScalarField::constant(g.clone(), 1.0).unwrap();
        let r = check_interpolation_family(&one, 1.5).unwrap();
        assert!(r.degenerate && r.ratio == 0.0);

        let x = ScalarField { values: g.sample(|x, _| x), ..one.clone() };
        let r = check_interpolation_family(&x, 1.0).unwrap();
        assert_abs_diff_eq!(r.poincare_ratio, 1.0, epsilon = 1e-12);
        // The absolute-value norm form gives 1 − 2/π for f = x; the kink of |x|
        // limits the trapezoid rule to O(h²).
        assert_abs_diff_eq!(r.ratio, 1.0 - 2.0 / std::f64::consts::PI, epsilon = 1e-3);

        let w = ScalarField::from_fn(g.clone(), |x, _| 1.0 + 0.05 * x).unwrap();
        let r = check_interpolation_family(&w, 1.5).unwrap();
        assert!(r.ratio > 0.95 && r.ratio <= 1.0, "{}", r.ratio);
        let r1 = check_interpolation_family(&w, 1.0).unwrap();
        assert_abs_diff_eq!(r1.ratio, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lambda_is_two() {
        let g = grid1();
        for p in [1.0, 1.5, 2.0] {
            let l = measure_lambda(g.clone(), &PhiFamily::new(p).unwrap(), 10);
            assert!((l - 2.0).abs() < 1e-3, "p = {p}: {l}");
            assert!(l > 2.0 - 1e-9);
        }
    }
}
