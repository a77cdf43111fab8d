//! Analytic detection-performance predictors.
//!
//! Weak-signal law: under the null both statistics are `χ²₁`, under the
//! alternative `χ'²₁(λ)` with `λ = θ₁²·I(0)`. The one-degree-of-freedom tail
//! is exact through two Gaussian tails: `P(χ'²₁(λ) > γ) = Q(√γ − √λ) + Q(√γ + √λ)`.
//!
//! CLT law (homogeneous network, zero thresholds): `Λ_R* = ξ²` with
//! `ξ = Σ(2y_k − 1)/√K`, which is `N(0, 1)` under the null and
//! `N(√K·μ̃₁, σ̃₁²)` under the alternative.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fusion::fisher_information;
use crate::network::Scenario;
use crate::noise::NoiseModel;
use crate::special::{gaussian_q, gaussian_q_inv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AsymptoticLaw {
    WeakSignalChiSq,
    CltNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LawParams {
    WeakSignal { lambda: f64 },
    Clt { mu1_tilde: f64, sigma1_sq_tilde: f64, k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticPrediction {
    pub gamma: f64,
    pub pfa: f64,
    pub pd: f64,
    pub law: AsymptoticLaw,
    pub params: LawParams,
}

/// Parameters of the CLT law for a homogeneous network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CltParams {
    pub mu1_tilde: f64,
    pub sigma1_sq_tilde: f64,
    pub rho1: f64,
}

/// `λ_Q = θ₁²·I(0)`.
pub fn noncentrality(scenario: &Scenario, theta1: f64) -> Result<f64> {
    Ok(theta1 * theta1 * fisher_information(scenario, 0.0)?)
}

/// `λ_Q* = 4θ₁²·Σ (1 − 2pe_k)²·p_k(0)²·h_k²`, valid for zero thresholds.
pub fn noncentrality_optimized(scenario: &Scenario, theta1: f64) -> Result<f64> {
    if let Some(k) = scenario.sensors().iter().position(|s| s.tau != 0.0) {
        return Err(Error::RequiresZeroThresholds(k));
    }
    let sum: f64 = scenario
        .sensors()
        .iter()
        .map(|s| {
            let w = (1.0 - 2.0 * s.pe) * s.noise.density(0.0) * s.h;
            w * w
        })
        .sum();
    Ok(4.0 * theta1 * theta1 * sum)
}

/// Threshold `γ` with `P(χ²₁ > γ) = pfa`.
pub fn weak_signal_threshold(pfa: f64) -> Result<f64> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::QuantileOutOfDomain(pfa));
    }
    let root = gaussian_q_inv(0.5 * pfa)?;
    Ok(root * root)
}

/// `P(χ'²₁(λ) > γ)`.
pub fn weak_signal_pd(lambda: f64, gamma: f64) -> f64 {
    let r = gamma.max(0.0).sqrt();
    let m = lambda.max(0.0).sqrt();
    (gaussian_q(r - m) + gaussian_q(r + m)).min(1.0)
}

pub fn weak_signal_prediction(lambda: f64, pfa: f64) -> Result<AsymptoticPrediction> {
    let gamma = weak_signal_threshold(pfa)?;
    Ok(AsymptoticPrediction {
        gamma,
        pfa: weak_signal_pd(0.0, gamma),
        pd: weak_signal_pd(lambda, gamma),
        law: AsymptoticLaw::WeakSignalChiSq,
        params: LawParams::WeakSignal { lambda },
    })
}

/// `ρ₁ = F_w(−h·θ₁)`, `μ̃₁ = (1 − 2pe)(2ρ₁ − 1)` and
/// `σ̃₁² = 4·[1 + pe(2ρ₁ − 1) − ρ₁]·[ρ₁ + (1 − 2ρ₁)pe]`.
pub fn clt_params(scenario: &Scenario, theta1: f64) -> Result<CltParams> {
    if !scenario.is_homogeneous() {
        return Err(Error::NotHomogeneous);
    }
    let s = scenario.sensors()[0];
    if s.tau != 0.0 {
        return Err(Error::RequiresZeroThresholds(0));
    }
    let rho1 = s.noise.ccdf(-s.h * theta1)?;
    let pe = s.pe;
    let mu1_tilde = (1.0 - 2.0 * pe) * (2.0 * rho1 - 1.0);
    let sigma1_sq_tilde =
        4.0 * (1.0 + pe * (2.0 * rho1 - 1.0) - rho1) * (rho1 + (1.0 - 2.0 * rho1) * pe);
    Ok(CltParams {
        mu1_tilde,
        sigma1_sq_tilde,
        rho1,
    })
}

/// `P(ξ² > γ)` with `ξ ~ N(√K·μ̃₁, σ̃₁²)`.
pub fn clt_pd(k: usize, params: &CltParams, gamma: f64) -> f64 {
    let sd = params.sigma1_sq_tilde.sqrt();
    let r = gamma.max(0.0).sqrt();
    let m = (k as f64).sqrt() * params.mu1_tilde;
    (gaussian_q((r - m) / sd) + gaussian_q((r + m) / sd)).min(1.0)
}

/// `P(ξ² > γ)` under the null, `2Q(√γ)`.
pub fn clt_pfa(gamma: f64) -> f64 {
    (2.0 * gaussian_q(gamma.max(0.0).sqrt())).min(1.0)
}

pub fn clt_prediction(k: usize, params: &CltParams, pfa: f64) -> Result<AsymptoticPrediction> {
    let gamma = weak_signal_threshold(pfa)?;
    Ok(AsymptoticPrediction {
        gamma,
        pfa: clt_pfa(gamma),
        pd: clt_pd(k, params, gamma),
        law: AsymptoticLaw::CltNormal,
        params: LawParams::Clt {
            mu1_tilde: params.mu1_tilde,
            sigma1_sq_tilde: params.sigma1_sq_tilde,
            k,
        },
    })
}

/// Modified deflection coefficient `d_Q = K·μ̃₁²/σ̃₁²`.
pub fn deflection(scenario: &Scenario, theta1: f64) -> Result<f64> {
    let p = clt_params(scenario, theta1)?;
    Ok(scenario.len() as f64 * p.mu1_tilde * p.mu1_tilde / p.sigma1_sq_tilde)
}

/// Non-centrality of the test on unquantized Laplace data, `θ₁²·Σ h_k²/β_k²`.
pub fn lambda_unquantized_laplace(scenario: &Scenario, theta1: f64) -> Result<f64> {
    let mut sum = 0.0;
    for s in scenario.sensors() {
        match s.noise {
            NoiseModel::Laplace { scale } => sum += s.h * s.h / (scale * scale),
            _ => return Err(Error::LaplaceOnly),
        }
    }
    Ok(theta1 * theta1 * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::SensorSpec;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn homog(noise: NoiseModel, pe: f64, k: usize) -> Scenario {
        Scenario::homogeneous(SensorSpec::new(1.0, 0.0, pe, noise).unwrap(), k).unwrap()
    }

    fn laplace_unit() -> NoiseModel {
        NoiseModel::laplace(FRAC_1_SQRT_2).unwrap()
    }

    #[test]
    fn noncentrality_examples() {
        let sc = homog(NoiseModel::gaussian(1.0).unwrap(), 0.0, 1);
        assert_eq!(noncentrality(&sc, 0.0).unwrap(), 0.0);
        assert!((noncentrality(&sc, 0.5).unwrap() - 0.25 * 2.0 / PI).abs() < 1e-15);
        assert!((noncentrality_optimized(&sc, 1.0).unwrap() - 2.0 / PI).abs() < 1e-15);
        let tilted = Scenario::new(vec![SensorSpec::new(1.0, 0.2, 0.0, NoiseModel::gaussian(1.0).unwrap()).unwrap()]).unwrap();
        assert!(noncentrality_optimized(&tilted, 1.0).is_err());
    }

    #[test]
    fn laplace_optimized_equals_unquantized() {
        for beta in [0.3, FRAC_1_SQRT_2, 2.0] {
            let s = SensorSpec::new(1.7, 0.0, 0.0, NoiseModel::laplace(beta).unwrap()).unwrap();
            let sc = Scenario::new(vec![s]).unwrap();
            let a = noncentrality_optimized(&sc, 0.4).unwrap();
            let b = lambda_unquantized_laplace(&sc, 0.4).unwrap();
            assert!((a - b).abs() < 1e-14 * b);
        }
        let g = homog(NoiseModel::gaussian(1.0).unwrap(), 0.0, 2);
        assert!(matches!(lambda_unquantized_laplace(&g, 1.0), Err(Error::LaplaceOnly)));
    }

    #[test]
    fn threshold_examples() {
        assert!((weak_signal_threshold(0.1).unwrap() - 2.705_543_454_095_414_5).abs() < 1e-11);
        let pfa = 2.0 * gaussian_q(1.0);
        assert!((weak_signal_threshold(pfa).unwrap() - 1.0).abs() < 1e-10);
        assert!(weak_signal_threshold(1.0 - 1e-12).unwrap() < 1e-20);
        assert!(weak_signal_threshold(0.0).is_err());
    }

    #[test]
    fn weak_signal_pd_examples() {
        let gamma = 2.705_543_454_095_414_5;
        assert!((weak_signal_pd(0.0, gamma) - 0.1).abs() < 1e-12);
        assert_eq!(weak_signal_pd(3.0, 0.0), 1.0);
        assert!((weak_signal_pd(4.0, gamma) - 0.638_893_803_326_933_8).abs() < 1e-12);
    }

    #[test]
    fn weak_signal_pd_monotone() {
        for i in 0..40 {
            let gamma = 0.25 * i as f64;
            assert!((weak_signal_pd(0.0, gamma) - clt_pfa(gamma)).abs() < 1e-12);
            let mut prev = 0.0;
            for j in 0..30 {
                let pd = weak_signal_pd(0.3 * j as f64, gamma);
                assert!(pd >= prev - 1e-15);
                prev = pd;
            }
        }
        for j in 1..30 {
            let lambda = 0.3 * j as f64;
            let mut prev = 1.0 + 1e-15;
            for i in 0..40 {
                let pd = weak_signal_pd(lambda, 0.25 * i as f64);
                assert!(pd <= prev + 1e-15);
                prev = pd;
            }
        }
    }

    #[test]
    fn clt_examples() {
        let sc = homog(laplace_unit(), 0.0, 30);
        let null = clt_params(&sc, 0.0).unwrap();
        assert_eq!(null.rho1, 0.5);
        assert_eq!(null.mu1_tilde, 0.0);
        assert_eq!(null.sigma1_sq_tilde, 1.0);
        let p = clt_params(&sc, 0.5).unwrap();
        assert!((p.rho1 - 0.753_465_654_302_380_1).abs() < 1e-14);
        assert!((p.mu1_tilde - 0.506_931_308_604_760_2).abs() < 1e-14);
        assert!((p.sigma1_sq_tilde - 0.743_020_648_356_265_4).abs() < 1e-14);
        let noisy = clt_params(&homog(laplace_unit(), 0.2, 30), 0.5).unwrap();
        assert!((noisy.mu1_tilde - 0.6 * p.mu1_tilde).abs() < 1e-15);
        let gamma = weak_signal_threshold(0.1).unwrap();
        assert!((clt_pd(30, &p, gamma) - 0.905_396_021_782_408_5).abs() < 1e-10);
        assert!((clt_pd(7, &null, gamma) - clt_pfa(gamma)).abs() < 1e-15);
        let mut prev = 0.0;
        for k in (10..400).step_by(10) {
            let pd = clt_pd(k, &p, gamma);
            assert!(pd >= prev);
            prev = pd;
        }
        assert!(prev > 0.999_999);
        let mut sensors = sc.sensors().to_vec();
        sensors[1].h = 0.5;
        assert!(matches!(clt_params(&Scenario::new(sensors).unwrap(), 0.5), Err(Error::NotHomogeneous)));
    }

    #[test]
    fn quantization_loss_ratio() {
        let sc = homog(laplace_unit(), 0.0, 1);
        let ratio = lambda_unquantized_laplace(&sc, 0.5).unwrap() / deflection(&sc, 0.5).unwrap();
        assert!((ratio - 1.445_681_615_280_822).abs() < 1e-12, "{ratio}");
        assert_eq!(deflection(&sc, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn predictions_are_consistent() {
        let w = weak_signal_prediction(0.0, 0.1).unwrap();
        assert!((w.pd - w.pfa).abs() < 1e-15);
        let w = weak_signal_prediction(2.0, 0.1).unwrap();
        assert!(w.pd > w.pfa);
        let p = clt_params(&homog(laplace_unit(), 0.1, 20), 0.3).unwrap();
        let c = clt_prediction(20, &p, 0.1).unwrap();
        assert!(c.pd > c.pfa);
        assert_eq!(c.law, AsymptoticLaw::CltNormal);
    }
}
