//! Self-checks run by `fuselab validate` against a resolved scenario.

use serde::Serialize;

use crate::asymptotics::noncentrality_optimized;
use crate::design::objective_g;
use crate::error::Result;
use crate::fusion::{evaluate, fisher_information, log_likelihood, score, MlSolver, StatisticKind};
use crate::network::{ReceivedVector, Scenario, SensorSpec};

/// Largest network enumerated exhaustively.
pub const MAX_ENUM_K: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }

    fn skipped(name: &'static str, why: &str) -> Self {
        Self::new(name, true, format!("skipped: {why}"))
    }
}

/// All `2^K` received vectors.
pub fn all_patterns(k: usize) -> impl Iterator<Item = ReceivedVector> {
    (0u64..1 << k).map(move |m| ReceivedVector {
        bits: (0..k).map(|i| ((m >> i) & 1) as u8).collect(),
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn likelihood_sums_to_one(sc: &Scenario, theta: f64) -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for t in [0.0, theta] {
        let mut total = 0.0;
        for y in all_patterns(sc.len()) {
            total += log_likelihood(&y, sc, t)?.exp();
        }
        worst = worst.max((total - 1.0).abs());
    }
    Ok(CheckOutcome::new("likelihood-normalization", worst <= 1e-10, format!("max |sum - 1| = {worst:.3e}")))
}

fn fisher_matches_score_variance(sc: &Scenario) -> Result<CheckOutcome> {
    let (mut mean, mut second) = (0.0, 0.0);
    for y in all_patterns(sc.len()) {
        let p = log_likelihood(&y, sc, 0.0)?.exp();
        if p == 0.0 {
            continue;
        }
        let s = score(&y, sc, 0.0)?;
        mean += p * s;
        second += p * s * s;
    }
    let fi = fisher_information(sc, 0.0)?;
    let err = rel(second - mean * mean, fi);
    Ok(CheckOutcome::new("fisher-information", err <= 1e-9, format!("relative error {err:.3e}")))
}

fn score_matches_differences(sc: &Scenario, theta: f64) -> Result<CheckOutcome> {
    let d = 1e-6;
    let mut worst: f64 = 0.0;
    let k = sc.len();
    let patterns = [vec![1u8; k], vec![0u8; k], (0..k).map(|i| (i % 2) as u8).collect()];
    for bits in patterns {
        let y = ReceivedVector { bits };
        for t in [0.0, 0.5 * theta, theta] {
            let a = score(&y, sc, t)?;
            let fd = (log_likelihood(&y, sc, t + d)? - log_likelihood(&y, sc, t - d)?) / (2.0 * d);
            let scale = a.abs().max(1.0);
            worst = worst.max((a - fd).abs() / scale);
        }
    }
    Ok(CheckOutcome::new("score-finite-difference", worst <= 1e-5, format!("max relative gap {worst:.3e}")))
}

fn fisher_is_sum_of_objectives(sc: &Scenario) -> Result<CheckOutcome> {
    let mut sum = 0.0;
    for s in sc.sensors() {
        sum += s.h * s.h * objective_g(&s.noise, s.pe, s.tau)?;
    }
    let fi = fisher_information(sc, 0.0)?;
    let err = rel(sum, fi);
    Ok(CheckOutcome::new("fisher-vs-threshold-objective", err <= 1e-12, format!("relative error {err:.3e}")))
}

fn bsc_scaling(sc: &Scenario, theta: f64) -> Result<CheckOutcome> {
    let lam = noncentrality_optimized(sc, theta)?;
    let clean = Scenario::new(
        sc.sensors()
            .iter()
            .map(|s| SensorSpec { pe: 0.0, ..*s })
            .collect(),
    )?;
    let lam0 = noncentrality_optimized(&clean, theta)?;
    let pe = sc.sensors()[0].pe;
    let equal_pe = sc.sensors().iter().all(|s| s.pe == pe);
    if !equal_pe {
        return Ok(CheckOutcome::skipped("bsc-scaling", "link error rates differ"));
    }
    let err = rel(lam, (1.0 - 2.0 * pe).powi(2) * lam0);
    Ok(CheckOutcome::new("bsc-scaling", err <= 1e-12, format!("relative error {err:.3e}")))
}

fn statistics_nonnegative(sc: &Scenario) -> Result<CheckOutcome> {
    let mut bad = 0usize;
    for y in all_patterns(sc.len()) {
        for kind in [StatisticKind::Rao, StatisticKind::Glrt] {
            let v = evaluate(kind, &y, sc, MlSolver::default())?.value;
            if !(v >= 0.0 && v.is_finite()) {
                bad += 1;
            }
        }
    }
    Ok(CheckOutcome::new("statistics-nonnegative", bad == 0, format!("{bad} bad values")))
}

fn noise_round_trip(sc: &Scenario) -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for s in sc.sensors() {
        for p in [0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99] {
            let x = s.noise.inv_ccdf(p)?;
            worst = worst.max((s.noise.ccdf(x)? - p).abs());
        }
    }
    Ok(CheckOutcome::new("noise-quantile-round-trip", worst <= 1e-9, format!("max |F(F^-1(p)) - p| = {worst:.3e}")))
}

/// Runs every applicable check. Enumeration-based checks are skipped above
/// [`MAX_ENUM_K`] sensors.
pub fn run_checks(sc: &Scenario, theta: f64) -> Result<Vec<CheckOutcome>> {
    let small = sc.len() <= MAX_ENUM_K;
    let too_big = format!("K = {} > {MAX_ENUM_K}", sc.len());
    let mut out = vec![noise_round_trip(sc)?, fisher_is_sum_of_objectives(sc)?, score_matches_differences(sc, theta)?];
    if small {
        out.push(likelihood_sums_to_one(sc, theta)?);
        out.push(fisher_matches_score_variance(sc)?);
        out.push(statistics_nonnegative(sc)?);
    } else {
        for name in ["likelihood-normalization", "fisher-information", "statistics-nonnegative"] {
            out.push(CheckOutcome::skipped(name, &too_big));
        }
    }
    if sc.all_thresholds_zero() {
        out.push(bsc_scaling(sc, theta)?);
    } else {
        out.push(CheckOutcome::skipped("bsc-scaling", "nonzero thresholds"));
    }
    Ok(out)
}
