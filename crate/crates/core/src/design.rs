//! Quantizer threshold design.
//!
//! The non-centrality of the asymptotic test law is a sum of per-sensor
//! terms, so each threshold is chosen on its own by maximizing
//!
//! ```text
//! g(τ) = p_w(τ)² / (Δ + F_w(τ)·(1 − F_w(τ))),    Δ = pe(1 − pe) / (1 − 2pe)²
//! ```
//!
//! `τ = 0` is the maximizer for the Gaussian, Laplace, Cauchy and generalized
//! Gaussian with shape ≤ 2. For shape > 2 the objective is bimodal and the
//! optimum moves away from zero; a noisy channel flattens that gain.

use serde::Serialize;

use crate::config::SensorConfig;
use crate::error::{Error, Result};
use crate::network::{check_pe, Scenario, SensorSpec};
use crate::noise::NoiseModel;
use crate::optim::{golden_section_max, symmetric_grid};

/// Grid-plus-refinement search settings. `half_width` is in units of the
/// noise scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub half_width: f64,
    pub grid_points: usize,
    pub tol: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            half_width: 6.0,
            grid_points: 601,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignResult {
    pub tau_star: f64,
    pub g_at_star: f64,
    pub bimodal: bool,
    /// The coarse grid `(τ, g(τ))`, kept for plotting.
    pub search_trace: Option<Vec<(f64, f64)>>,
}

impl DesignResult {
    /// Objective gain over the `τ = 0` choice.
    pub fn gain_over_zero(&self, noise: &NoiseModel, pe: f64) -> Result<f64> {
        Ok(self.g_at_star - objective_g(noise, pe, 0.0)?)
    }
}

/// `Δ = pe(1 − pe) / (1 − 2pe)²`.
pub fn delta(pe: f64) -> Result<f64> {
    check_pe(pe)?;
    let c = 1.0 - 2.0 * pe;
    Ok(pe * (1.0 - pe) / (c * c))
}

/// Per-sensor threshold objective `g(τ)`.
pub fn objective_g(noise: &NoiseModel, pe: f64, tau: f64) -> Result<f64> {
    let d = delta(pe)?;
    let f = noise.ccdf(tau)?;
    let p = noise.density(tau);
    if p * p == 0.0 {
        // beyond the representable tail; the ratio vanishes in the limit
        return Ok(0.0);
    }
    // F(1 − F) via the mirrored tail keeps precision when F is near 1
    let spread = f * noise.tail(-tau);
    Ok(p * p / (d + spread))
}

/// Grid scan over `[−half_width·scale, half_width·scale]` followed by a
/// golden-section refinement of the best cell.
pub fn optimize_threshold(noise: &NoiseModel, pe: f64, search: SearchParams) -> Result<DesignResult> {
    if !(search.half_width > 0.0) || search.grid_points < 33 || !(search.tol > 0.0) {
        return Err(Error::InvalidInput(format!("bad search parameters {search:?}")));
    }
    check_pe(pe)?;
    let width = search.half_width * noise.scale();
    let grid = symmetric_grid(width, search.grid_points);
    let values = grid
        .iter()
        .map(|&t| {
            let g = objective_g(noise, pe, t)?;
            if g.is_finite() {
                Ok(g)
            } else {
                Err(Error::ObjectiveEvaluation(t))
            }
        })
        .collect::<Result<Vec<f64>>>()?;

    let center = grid.len() / 2;
    let g0 = values[center];

    // g is even, so the argmax is taken over τ ≥ 0; this is also the tie-break
    let mut best = center;
    for i in center..grid.len() {
        if values[i] > values[best] {
            best = i;
        }
    }

    let bimodal = (1..grid.len() - 1).any(|i| {
        i != center
            && values[i] >= values[i - 1]
            && values[i] >= values[i + 1]
            && values[i] > g0 + search.tol
    });

    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let objective = |t: f64| objective_g(noise, pe, t).unwrap_or(f64::NEG_INFINITY);
    let refined = golden_section_max(objective, lo, hi, search.tol, 200);

    let (mut tau_star, mut g_star) = (refined.arg, refined.value);
    if values[best] > g_star {
        tau_star = grid[best];
        g_star = values[best];
    }
    // fold onto the nonnegative maximizer
    tau_star = tau_star.abs();
    if g_star <= g0 + search.tol {
        tau_star = 0.0;
        g_star = g0;
    }

    let edge = values[grid.len() - 1];
    if edge >= g_star && g_star > 0.0 {
        return Err(Error::ObjectiveEvaluation(grid[grid.len() - 1]));
    }

    Ok(DesignResult {
        tau_star,
        g_at_star: g_star,
        bimodal,
        search_trace: Some(grid.into_iter().zip(values).collect()),
    })
}

/// Fills every unset threshold with its own optimized value; explicit
/// thresholds are kept.
pub fn design_all(sensors: &[SensorConfig], search: SearchParams) -> Result<Scenario> {
    let specs = sensors
        .iter()
        .map(|s| {
            let tau = match s.tau {
                Some(t) => t,
                None => optimize_threshold(&s.noise, s.pe, search)?.tau_star,
            };
            SensorSpec::new(s.h, tau, s.pe, s.noise)
        })
        .collect::<Result<Vec<_>>>()?;
    Scenario::new(specs)
}
