//! Fusion-center statistics.
//!
//! For received bits `y`, the per-sensor likelihood is
//! `P(y_k = 1; θ) = pe_k + (1 − 2pe_k)·α_k(θ)` with `α_k(θ) = F_w(τ_k − h_k·θ)`.
//! The Rao statistic squares the score at `θ = 0` and divides by the Fisher
//! information; the GLRT maximizes the likelihood over `θ`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{ReceivedVector, Scenario};
use crate::optim::{golden_section_max, linspace};

/// Which fusion statistic to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StatisticKind {
    #[serde(rename = "rao")]
    Rao,
    #[serde(rename = "rao-opt")]
    RaoOptimized,
    #[serde(rename = "glrt")]
    Glrt,
    #[serde(rename = "homog-kl")]
    HomogGlrtKl,
    #[serde(rename = "homog-tvd")]
    HomogRaoTvd,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 5] = [
        Self::Rao,
        Self::RaoOptimized,
        Self::Glrt,
        Self::HomogGlrtKl,
        Self::HomogRaoTvd,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Rao => "rao",
            Self::RaoOptimized => "rao-opt",
            Self::Glrt => "glrt",
            Self::HomogGlrtKl => "homog-kl",
            Self::HomogRaoTvd => "homog-tvd",
        }
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown statistic '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatisticResult {
    pub value: f64,
    pub kind: StatisticKind,
    /// ML estimate, GLRT only.
    pub theta_hat: Option<f64>,
}

/// Settings for the numerical ML search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlSolver {
    /// Initial search half-width; `None` uses 10× the largest `scale/|h|`.
    pub bracket_halfwidth: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MlSolver {
    fn default() -> Self {
        Self {
            bracket_halfwidth: None,
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

const BRACKET_DOUBLINGS: usize = 8;
const ML_SCAN_POINTS: usize = 65;
const RATE_CLAMP: f64 = 1e-12;

/// `ln P(y; θ)`. An impossible outcome gives `−∞`.
pub fn log_likelihood(y: &ReceivedVector, scenario: &Scenario, theta: f64) -> Result<f64> {
    y.check_len(scenario.len())?;
    // summed by bit value so the result does not depend on bit order in a
    // homogeneous network
    let (mut ones, mut zeros) = (0.0, 0.0);
    for (&b, s) in y.bits.iter().zip(scenario.sensors()) {
        if b == 1 {
            ones += s.prob_one(theta).ln();
        } else {
            zeros += s.prob_zero(theta).ln();
        }
    }
    Ok(ones + zeros)
}

/// `∂ ln P(y; θ) / ∂θ`.
pub fn score(y: &ReceivedVector, scenario: &Scenario, theta: f64) -> Result<f64> {
    y.check_len(scenario.len())?;
    // ones and zeros are summed apart so identical sensors cancel exactly
    let (mut up, mut down) = (0.0, 0.0);
    for (&b, s) in y.bits.iter().zip(scenario.sensors()) {
        let p = if b == 1 { s.prob_one(theta) } else { s.prob_zero(theta) };
        let slope = (1.0 - 2.0 * s.pe) * s.h * s.noise.density(s.tau - s.h * theta);
        if slope == 0.0 {
            continue;
        }
        if p == 0.0 {
            return Err(Error::Numerical(format!(
                "score undefined: outcome has zero probability at theta = {theta}"
            )));
        }
        if b == 1 {
            up += slope / p;
        } else {
            down += slope / p;
        }
    }
    Ok(up - down)
}

/// Fisher information `I(θ) = Σ (1 − 2pe)² h² p_w²(τ − hθ) / (P(y=1)·P(y=0))`.
pub fn fisher_information(scenario: &Scenario, theta: f64) -> Result<f64> {
    let mut total = 0.0;
    for s in scenario.sensors() {
        let c = 1.0 - 2.0 * s.pe;
        let p = s.noise.density(s.tau - s.h * theta);
        let num = c * c * s.h * s.h * p * p;
        if num == 0.0 {
            continue;
        }
        total += num / (s.prob_one(theta) * s.prob_zero(theta));
    }
    Ok(total)
}

/// Rao statistic `score(y, 0)² / I(0)` for arbitrary thresholds.
pub fn rao_statistic(y: &ReceivedVector, scenario: &Scenario) -> Result<StatisticResult> {
    let fi = fisher_information(scenario, 0.0)?;
    if !(fi > 0.0) {
        return Err(Error::UninformativeScenario);
    }
    let s = score(y, scenario, 0.0)?;
    Ok(StatisticResult {
        value: s * s / fi,
        kind: StatisticKind::Rao,
        theta_hat: None,
    })
}

/// Rao statistic in the zero-threshold closed form
/// `4·[Σ c_k p_k(0) h_k (y_k − ½)]² / Σ c_k² p_k(0)² h_k²`, `c_k = 1 − 2pe_k`.
pub fn rao_statistic_optimized(y: &ReceivedVector, scenario: &Scenario) -> Result<StatisticResult> {
    y.check_len(scenario.len())?;
    if let Some(k) = scenario.sensors().iter().position(|s| s.tau != 0.0) {
        return Err(Error::RequiresZeroThresholds(k));
    }
    let (mut up, mut down, mut den) = (0.0, 0.0, 0.0);
    for (&b, s) in y.bits.iter().zip(scenario.sensors()) {
        let w = (1.0 - 2.0 * s.pe) * s.noise.density(0.0) * s.h;
        if b == 1 {
            up += w;
        } else {
            down += w;
        }
        den += w * w;
    }
    let num = 0.5 * (up - down);
    if !(den > 0.0) {
        return Err(Error::UninformativeScenario);
    }
    Ok(StatisticResult {
        value: 4.0 * num * num / den,
        kind: StatisticKind::RaoOptimized,
        theta_hat: None,
    })
}

/// Maximum-likelihood estimate of `θ`: closed form for homogeneous scenarios,
/// numerical search otherwise.
pub fn ml_estimate(y: &ReceivedVector, scenario: &Scenario, solver: MlSolver) -> Result<f64> {
    y.check_len(scenario.len())?;
    if scenario.is_homogeneous() {
        ml_estimate_homogeneous(y, scenario)
    } else {
        ml_estimate_numerical(y, scenario, solver)
    }
}

/// Homogeneous closed form `θ̂ = (τ − F_w^{-1}(r)) / h` with
/// `r = clamp((ρ̂ − pe)/(1 − 2pe), 1e−12, 1 − 1e−12)`.
pub fn ml_estimate_homogeneous(y: &ReceivedVector, scenario: &Scenario) -> Result<f64> {
    y.check_len(scenario.len())?;
    if !scenario.is_homogeneous() {
        return Err(Error::NotHomogeneous);
    }
    let s = scenario.sensors()[0];
    if s.h == 0.0 {
        return Err(Error::UninformativeScenario);
    }
    let r = ((y.rho_hat() - s.pe) / (1.0 - 2.0 * s.pe)).clamp(RATE_CLAMP, 1.0 - RATE_CLAMP);
    Ok((s.tau - s.noise.inv_ccdf(r)?) / s.h)
}

/// Grid scan then golden-section refinement of the log-likelihood. The
/// bracket doubles (up to 8 times) while the best grid point sits on its edge.
pub fn ml_estimate_numerical(y: &ReceivedVector, scenario: &Scenario, solver: MlSolver) -> Result<f64> {
    y.check_len(scenario.len())?;
    let mut half = match solver.bracket_halfwidth {
        Some(b) if b > 0.0 => b,
        Some(b) => return Err(Error::InvalidInput(format!("bracket half-width {b}"))),
        None => default_bracket(scenario)?,
    };
    let objective = |t: f64| log_likelihood(y, scenario, t).unwrap_or(f64::NEG_INFINITY);

    for attempt in 0..=BRACKET_DOUBLINGS {
        let grid = linspace(-half, half, ML_SCAN_POINTS);
        let values: Vec<f64> = grid.iter().map(|&t| objective(t)).collect();
        let mut best = ML_SCAN_POINTS / 2;
        for (i, v) in values.iter().enumerate() {
            if *v > values[best] {
                best = i;
            }
        }
        if best == 0 || best == ML_SCAN_POINTS - 1 {
            if attempt == BRACKET_DOUBLINGS {
                return Err(Error::MlNotConverged { best: grid[best] });
            }
            half *= 2.0;
            continue;
        }
        let m = golden_section_max(objective, grid[best - 1], grid[best + 1], solver.tol, solver.max_iter);
        if !m.converged {
            return Err(Error::MlNotConverged { best: m.arg });
        }
        return Ok(m.arg);
    }
    unreachable!("loop returns on the final attempt")
}

fn default_bracket(scenario: &Scenario) -> Result<f64> {
    let widest = scenario
        .sensors()
        .iter()
        .filter(|s| s.h != 0.0)
        .map(|s| s.noise.scale() / s.h.abs())
        .fold(0.0, f64::max);
    if widest > 0.0 {
        Ok(10.0 * widest)
    } else {
        Err(Error::UninformativeScenario)
    }
}

/// GLRT `2·[ln P(y; θ̂) − ln P(y; 0)]`, clamped below at zero.
pub fn glrt_statistic(y: &ReceivedVector, scenario: &Scenario, solver: MlSolver) -> Result<StatisticResult> {
    y.check_len(scenario.len())?;
    // With zero thresholds and symmetric noise, complementing every bit
    // mirrors θ̂ and leaves the statistic unchanged. Evaluate on a canonical
    // member of each {y, 1 − y} pair so the two values are bit-identical.
    let minority = 2 * y.ones() < y.len() || (2 * y.ones() == y.len() && y.bits[0] == 0);
    if scenario.all_thresholds_zero() && minority {
        let flipped = ReceivedVector {
            bits: y.bits.iter().map(|b| 1 - b).collect(),
        };
        let mut r = glrt_statistic(&flipped, scenario, solver)?;
        r.theta_hat = r.theta_hat.map(|t| -t);
        return Ok(r);
    }
    let theta_hat = ml_estimate(y, scenario, solver)?;
    glrt_at(y, scenario, theta_hat)
}

fn glrt_at(y: &ReceivedVector, scenario: &Scenario, theta_hat: f64) -> Result<StatisticResult> {
    let value = 2.0 * (log_likelihood(y, scenario, theta_hat)? - log_likelihood(y, scenario, 0.0)?);
    Ok(StatisticResult {
        value: value.max(0.0),
        kind: StatisticKind::Glrt,
        theta_hat: Some(theta_hat),
    })
}

/// Homogeneous GLRT as a KL divergence: `2K·D_KL(ρ̂ ‖ ½)` with `0·ln 0 = 0`.
pub fn homog_glrt_kl(rho_hat: f64, k: usize) -> f64 {
    let term = |p: f64| if p > 0.0 { p * (2.0 * p).ln() } else { 0.0 };
    (2.0 * k as f64 * (term(rho_hat) + term(1.0 - rho_hat))).max(0.0)
}

/// Homogeneous Rao as a squared total-variation distance: `4K·(ρ̂ − ½)²`.
pub fn homog_rao_tvd(rho_hat: f64, k: usize) -> f64 {
    let d = rho_hat - 0.5;
    4.0 * k as f64 * d * d
}

/// Computes `kind` on `y`. For the GLRT, a likelihood that keeps rising to
/// the widest bracket (e.g. all bits equal) is scored at that bracket edge,
/// where it has reached its supremum to within the remaining tail mass.
pub fn evaluate(
    kind: StatisticKind,
    y: &ReceivedVector,
    scenario: &Scenario,
    solver: MlSolver,
) -> Result<StatisticResult> {
    match kind {
        StatisticKind::Rao => rao_statistic(y, scenario),
        StatisticKind::RaoOptimized => rao_statistic_optimized(y, scenario),
        StatisticKind::Glrt => match glrt_statistic(y, scenario, solver) {
            Err(Error::MlNotConverged { best }) => glrt_at(y, scenario, best),
            other => other,
        },
        StatisticKind::HomogGlrtKl | StatisticKind::HomogRaoTvd => {
            y.check_len(scenario.len())?;
            if !scenario.is_homogeneous() {
                return Err(Error::NotHomogeneous);
            }
            let value = if kind == StatisticKind::HomogGlrtKl {
                homog_glrt_kl(y.rho_hat(), y.len())
            } else {
                homog_rao_tvd(y.rho_hat(), y.len())
            };
            Ok(StatisticResult {
                value,
                kind,
                theta_hat: None,
            })
        }
    }
}
