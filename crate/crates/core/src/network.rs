//! Sensor network model and Monte Carlo trial generation.
//!
//! A trial draws one noise sample per sensor, forms `x_k = h_k·θ + w_k`,
//! quantizes `b_k = u(x_k − τ_k)` and flips each bit with probability `pe_k`.
//! Randomness comes from a [`TrialStream`]: a ChaCha8 generator keyed by a
//! seed and positioned on a stream id, so trial `t` is the same no matter
//! which worker runs it.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseModel;

/// One sensor: observation gain, quantizer threshold, link BEP, noise law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub h: f64,
    pub tau: f64,
    pub pe: f64,
    pub noise: NoiseModel,
}

impl SensorSpec {
    pub fn new(h: f64, tau: f64, pe: f64, noise: NoiseModel) -> Result<Self> {
        if !h.is_finite() {
            return Err(Error::InvalidInput(format!("h must be finite, got {h}")));
        }
        if !tau.is_finite() {
            return Err(Error::InvalidInput(format!("tau must be finite, got {tau}")));
        }
        check_pe(pe)?;
        Ok(Self {
            h,
            tau,
            pe,
            noise: noise.validated()?,
        })
    }

    /// `α_k(θ) = F_w(τ_k − h_k·θ)`, the probability that the sensor emits 1.
    pub fn alpha(&self, theta: f64) -> f64 {
        self.noise.tail(self.tau - self.h * theta)
    }

    /// `P(y_k = 1; θ) = pe + (1 − 2pe)·α_k(θ)`.
    pub fn prob_one(&self, theta: f64) -> f64 {
        self.pe + (1.0 - 2.0 * self.pe) * self.alpha(theta)
    }

    /// `P(y_k = 0; θ)`, evaluated through the mirrored tail to avoid cancellation.
    pub fn prob_zero(&self, theta: f64) -> f64 {
        self.pe + (1.0 - 2.0 * self.pe) * self.noise.tail(self.h * theta - self.tau)
    }
}

pub(crate) fn check_pe(pe: f64) -> Result<()> {
    if (0.0..0.5).contains(&pe) {
        Ok(())
    } else {
        Err(Error::DegenerateChannel(pe))
    }
}

/// Ordered set of sensors observed under a common null `θ₀ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    sensors: Vec<SensorSpec>,
}

impl Scenario {
    pub fn new(sensors: Vec<SensorSpec>) -> Result<Self> {
        if sensors.is_empty() {
            return Err(Error::InvalidInput("scenario needs at least one sensor".into()));
        }
        for s in &sensors {
            SensorSpec::new(s.h, s.tau, s.pe, s.noise)?;
        }
        Ok(Self { sensors })
    }

    /// `K` copies of the same sensor.
    pub fn homogeneous(sensor: SensorSpec, k: usize) -> Result<Self> {
        Self::new(vec![sensor; k])
    }

    pub fn sensors(&self) -> &[SensorSpec] {
        &self.sensors
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    /// Null-hypothesis parameter value; fixed at zero.
    pub fn theta0(&self) -> f64 {
        0.0
    }

    /// True iff every sensor has identical `(h, τ, pe, noise)`.
    pub fn is_homogeneous(&self) -> bool {
        let first = &self.sensors[0];
        self.sensors.iter().all(|s| s == first)
    }

    pub fn all_thresholds_zero(&self) -> bool {
        self.sensors.iter().all(|s| s.tau == 0.0)
    }
}

/// The `K` bits seen at the fusion center for one trial.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReceivedVector {
    pub bits: Vec<u8>,
}

impl ReceivedVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidInput(format!("bit value {b} is not 0 or 1")));
        }
        Ok(Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Empirical rate `ρ̂ = Σ y_k / K`.
    pub fn rho_hat(&self) -> f64 {
        self.ones() as f64 / self.len() as f64
    }

    pub(crate) fn check_len(&self, k: usize) -> Result<()> {
        if self.len() == k {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: k,
                got: self.len(),
            })
        }
    }
}

/// Deterministic random stream for one trial.
#[derive(Debug, Clone)]
pub struct TrialStream {
    rng: ChaCha8Rng,
}

impl TrialStream {
    /// Stream `stream` of the generator keyed by `seed`.
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Uniform variate on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

/// Mixes a master seed with a tag into an independent generator key (SplitMix64 finalizer).
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws `x_k = h_k·θ + w_k` with `w_k = F_w^{-1}(u_k)`.
pub fn sample_measurements(
    scenario: &Scenario,
    theta: f64,
    stream: &mut TrialStream,
) -> Result<Vec<f64>> {
    scenario
        .sensors()
        .iter()
        .map(|s| Ok(s.h * theta + s.noise.inv_ccdf(stream.uniform())?))
        .collect()
}

/// `b_k = 1` iff `x_k ≥ τ_k`.
pub fn quantize(x: &[f64], scenario: &Scenario) -> Result<Vec<u8>> {
    if x.len() != scenario.len() {
        return Err(Error::LengthMismatch {
            expected: scenario.len(),
            got: x.len(),
        });
    }
    Ok(x
        .iter()
        .zip(scenario.sensors())
        .map(|(&x, s)| u8::from(x >= s.tau))
        .collect())
}

/// Passes each bit through its binary symmetric channel.
pub fn bsc_transmit(
    bits: &[u8],
    scenario: &Scenario,
    stream: &mut TrialStream,
) -> Result<ReceivedVector> {
    if bits.len() != scenario.len() {
        return Err(Error::LengthMismatch {
            expected: scenario.len(),
            got: bits.len(),
        });
    }
    let out = bits
        .iter()
        .zip(scenario.sensors())
        .map(|(&b, s)| if stream.uniform() < s.pe { 1 - b } else { b })
        .collect();
    ReceivedVector::new(out)
}

/// One full trial: measurements, quantization and channel.
pub fn simulate_trial(
    scenario: &Scenario,
    theta: f64,
    stream: &mut TrialStream,
) -> ReceivedVector {
    TrialSampler::new(scenario, theta).draw(stream)
}

/// Precomputed per-sensor firing probabilities for repeated trials at one `θ`.
///
/// Since `F_w^{-1}` is decreasing, `h·θ + F_w^{-1}(u) ≥ τ` exactly when
/// `u ≤ F_w(τ − h·θ)`, so the quantized bit is read off the same uniform that
/// [`sample_measurements`] would invert. Draw order matches the explicit
/// pipeline: `K` noise uniforms, then `K` channel uniforms.
#[derive(Debug, Clone)]
pub struct TrialSampler {
    alpha: Vec<f64>,
    pe: Vec<f64>,
}

impl TrialSampler {
    pub fn new(scenario: &Scenario, theta: f64) -> Self {
        Self {
            alpha: scenario.sensors().iter().map(|s| s.alpha(theta)).collect(),
            pe: scenario.sensors().iter().map(|s| s.pe).collect(),
        }
    }

    pub fn draw(&self, stream: &mut TrialStream) -> ReceivedVector {
        let mut bits: Vec<u8> = self
            .alpha
            .iter()
            .map(|&a| u8::from(stream.uniform() <= a))
            .collect();
        for (b, &pe) in bits.iter_mut().zip(&self.pe) {
            if stream.uniform() < pe {
                *b = 1 - *b;
            }
        }
        ReceivedVector { bits }
    }
}
