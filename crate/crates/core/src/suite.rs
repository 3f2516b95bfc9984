//! Seeded sweep over the static inequality checks, aggregated per check and
//! exponent.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::ScalarField;
use crate::grid::QuadratureGrid;
use crate::inequality::{
    check_convexity, check_csiszar_kullback, check_gap, check_holley_stroock, check_interpolation_family,
    check_jensen_lemma, check_tensorization, eep_ratio, measure_lambda, FieldFamily, PerturbedMeasure,
    TestFieldGenerator,
};
use crate::kfp::{check_lemma_quadratic_form, PhaseField};
use crate::phi::PhiFamily;

pub const DEFAULT_SEEDS: u64 = 200;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Amplitude of the sine perturbation χ = A sin x of the potential.
pub const HOLLEY_STROOCK_AMPLITUDE: f64 = 0.3;
pub const WITNESS_EPS: [f64; 3] = [0.1, 0.05, 0.025];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    #[serde(rename = "ck")]
    CsiszarKullback,
    Tensorization,
    Gap,
    Jensen,
    Convexity,
    HolleyStroock,
    Interpolation,
    LemmaQuadraticForm,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::CsiszarKullback,
        Check::Tensorization,
        Check::Gap,
        Check::Jensen,
        Check::Convexity,
        Check::HolleyStroock,
        Check::Interpolation,
        Check::LemmaQuadraticForm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::CsiszarKullback => "ck",
            Check::Tensorization => "tensorization",
            Check::Gap => "gap",
            Check::Jensen => "jensen",
            Check::Convexity => "convexity",
            Check::HolleyStroock => "holley_stroock",
            Check::Interpolation => "interpolation",
            Check::LemmaQuadraticForm => "lemma_quadratic_form",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown check '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default = "all_checks")]
    pub checks: Vec<Check>,
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    /// Seeds run from `first_seed` to `first_seed + seeds − 1`.
    #[serde(default)]
    pub first_seed: u64,
    #[serde(default = "default_p_list")]
    pub p_list: Vec<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Negates every margin; a harness self-test.
    #[serde(default)]
    pub force_violation: bool,
}

fn all_checks() -> Vec<Check> {
    Check::ALL.to_vec()
}

fn default_seeds() -> u64 {
    DEFAULT_SEEDS
}

fn default_p_list() -> Vec<f64> {
    vec![1.0, 1.25, 1.5, 1.75, 2.0]
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            checks: all_checks(),
            seeds: DEFAULT_SEEDS,
            first_seed: 0,
            p_list: default_p_list(),
            tolerance: DEFAULT_TOLERANCE,
            force_violation: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: Check,
    /// p, or q for the interpolation family.
    pub p_or_q: f64,
    pub seeds: u64,
    pub min_margin: f64,
    pub argmin_seed: u64,
    pub violations: u64,
}

/// A ratio that should approach its sharp value along a one-parameter family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub name: String,
    pub parameter: f64,
    pub eps: f64,
    pub ratio: f64,
    pub sharp_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub reports: Vec<CheckReport>,
    pub witnesses: Vec<WitnessReport>,
    /// Measured inf I/E on the one-dimensional family, per p.
    pub lambda: Vec<(f64, f64)>,
    pub total_violations: u64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.total_violations == 0
    }
}

/// Grids used by the suite: 1-D (L = 8, 257 nodes) and 2-D (L = 8, 97² nodes),
/// both with eighth-order stencils.
pub fn suite_grids() -> Result<(Arc<QuadratureGrid>, Arc<QuadratureGrid>)> {
    Ok((
        Arc::new(QuadratureGrid::build(1, 8.0, 257, 8)?),
        Arc::new(QuadratureGrid::build(2, 8.0, 97, 8)?),
    ))
}

fn generator(seed: u64) -> TestFieldGenerator {
    TestFieldGenerator::new(seed, FieldFamily::ALL[(seed % 4) as usize])
}

struct Context {
    g1: Arc<QuadratureGrid>,
    g2: Arc<QuadratureGrid>,
    mu: PerturbedMeasure,
}

fn margin(ctx: &Context, check: Check, fam: &PhiFamily, lambda: f64, seed: u64) -> Result<f64> {
    let gen = generator(seed);
    Ok(match check {
        Check::CsiszarKullback => check_csiszar_kullback(&gen.field_1d(ctx.g1.clone()), fam)?,
        Check::Tensorization => check_tensorization(&gen.field_2d(ctx.g2.clone()), fam)?.residual,
        Check::Gap => check_gap(&gen.field_2d(ctx.g2.clone()), fam, lambda),
        Check::Jensen => check_jensen_lemma(&gen.field_2d(ctx.g2.clone()), fam)?,
        Check::Convexity => {
            let other = TestFieldGenerator::new(seed + 1_000_003, FieldFamily::ALL[((seed + 1) % 4) as usize]);
            let t = ((seed * 7919) % 97 + 1) as f64 / 98.0;
            check_convexity(&gen.field_1d(ctx.g1.clone()), &other.field_1d(ctx.g1.clone()), t, fam)
        }
        Check::HolleyStroock => check_holley_stroock(&gen.field_1d(ctx.g1.clone()), fam, &ctx.mu, lambda)?.margin,
        Check::Interpolation => {
            let r = check_interpolation_family(&gen.field_1d(ctx.g1.clone()), fam.p)?;
            r.gradient_energy - r.lhs
        }
        Check::LemmaQuadraticForm => {
            let pf = PhaseField::new(gen.field_2d(ctx.g2.clone()), 0.0)?;
            check_lemma_quadratic_form(&pf, fam)?.margin
        }
    })
}

/// Sharpness witnesses: the interpolation ratio of 1 + εx at several q, and
/// the two-dimensional gap ratio of 1 + ε(x1 + x2)/√2 at p = 2.
pub fn witnesses(g1: &Arc<QuadratureGrid>, g2: &Arc<QuadratureGrid>) -> Result<Vec<WitnessReport>> {
    let mut out = Vec::new();
    for q in [1.25, 1.5, 1.75] {
        for eps in WITNESS_EPS {
            let f = ScalarField::from_fn(g1.clone(), |x, _| 1.0 + eps * x)?;
            let r = check_interpolation_family(&f, q)?;
            out.push(WitnessReport { name: "interpolation".into(), parameter: q, eps, ratio: r.ratio, sharp_value: 1.0 });
        }
    }
    // At p = 2 the ratio is exactly 2 for every ε.
    let eps = 0.05;
    let w = ScalarField::from_fn(g2.clone(), |x, v| 1.0 + eps * (x + v) / 2f64.sqrt())?;
    let ratio = eep_ratio(&w, &PhiFamily::new(2.0)?).unwrap_or(f64::NAN);
    out.push(WitnessReport { name: "gap_sum_mode".into(), parameter: 2.0, eps, ratio, sharp_value: 2.0 });
    Ok(out)
}

pub fn run_suite(cfg: &SuiteConfig, exec: Execution) -> Result<SuiteReport> {
    if cfg.seeds == 0 {
        return Err(Error::Config("seeds must be positive".into()));
    }
    let fams: Vec<PhiFamily> = cfg.p_list.iter().map(|&p| PhiFamily::new(p)).collect::<Result<_>>()?;
    for f in &fams {
        if f.p > 2.0 {
            return Err(Error::Config(format!("the suite covers p in [1, 2], got {}", f.p)));
        }
    }
    let (g1, g2) = suite_grids()?;
    let mu = PerturbedMeasure::sine(&g1, HOLLEY_STROOCK_AMPLITUDE)?;
    let ctx = Context { g1: g1.clone(), g2: g2.clone(), mu };
    let lambda: Vec<(f64, f64)> =
        exec.map(fams.len(), |i| (fams[i].p, measure_lambda(g1.clone(), &fams[i], cfg.seeds)));

    let mut checks = cfg.checks.clone();
    checks.sort();
    checks.dedup();
    let sign = if cfg.force_violation { -1.0 } else { 1.0 };
    let mut reports = Vec::new();
    for &check in &checks {
        for (fam, &(_, lam)) in fams.iter().zip(&lambda) {
            let margins = exec.map(cfg.seeds as usize, |s| margin(&ctx, check, fam, lam, cfg.first_seed + s as u64));
            let mut rep = CheckReport {
                check,
                p_or_q: fam.p,
                seeds: cfg.seeds,
                min_margin: f64::INFINITY,
                argmin_seed: 0,
                violations: 0,
            };
            for (s, m) in margins.into_iter().enumerate() {
                let m = sign * m?;
                if m < rep.min_margin {
                    rep.min_margin = m;
                    rep.argmin_seed = cfg.first_seed + s as u64;
                }
                if !(m >= -cfg.tolerance) {
                    rep.violations += 1;
                }
            }
            reports.push(rep);
        }
    }
    let total_violations = reports.iter().map(|r| r.violations).sum();
    Ok(SuiteReport { reports, witnesses: witnesses(&g1, &g2)?, lambda, total_violations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selector_names_round_trip() {
        for c in Check::ALL {
            assert_eq!(Check::parse(c.name()).unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{}\"", c.name()));
        }
        assert!(Check::parse("nope").is_err());
    }

    #[test]
    fn small_suite_passes_and_flipped_suite_fails() {
        let cfg = SuiteConfig { seeds: 8, p_list: vec![1.0, 1.5, 2.0], ..Default::default() };
        let rep = run_suite(&cfg, Execution::Sequential).unwrap();
        assert!(rep.passed(), "{:#?}", rep.reports);
        assert_eq!(rep.reports.len(), 8 * 3);
        let flipped = run_suite(&SuiteConfig { force_violation: true, ..cfg }, Execution::Sequential).unwrap();
        assert!(!flipped.passed());
    }

    #[test]
    fn witnesses_approach_sharp_values() {
        let (g1, g2) = suite_grids().unwrap();
        let w = witnesses(&g1, &g2).unwrap();
        let gap = w.last().unwrap();
        assert!((gap.ratio - 2.0).abs() < 1e-10, "{gap:?}");
        for chunk in w[..w.len() - 1].chunks(3) {
            assert!(chunk.iter().all(|r| r.ratio <= r.sharp_value * (1.0 + 1e-9)));
            assert!(chunk[0].ratio < chunk[1].ratio && chunk[1].ratio < chunk[2].ratio, "{chunk:?}");
            assert!((chunk[2].ratio / chunk[2].sharp_value - 1.0).abs() < 0.05);
        }
    }
}
