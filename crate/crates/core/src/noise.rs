//! Symmetric, unimodal, zero-mode noise families.
//!
//! Every formula downstream touches the noise only through [`NoiseModel::pdf`],
//! [`NoiseModel::ccdf`] (the complementary CDF `P(w > x)`) and
//! [`NoiseModel::inv_ccdf`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{gamma_inc_pair, gaussian_pdf, gaussian_q, ln_gamma};

const QUANTILE_TOL: f64 = 1e-12;
const QUANTILE_MAX_ITER: usize = 100;

/// Noise density family. Serialized as
/// `{"type": "gaussian"|"laplace"|"cauchy"|"gengauss", "scale": .., "shape": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum NoiseModel {
    /// Normal with standard deviation `scale`.
    Gaussian { scale: f64 },
    /// Laplace with scale `β`, density `exp(−|x|/β) / 2β`.
    Laplace { scale: f64 },
    /// Cauchy with half-width `scale`.
    Cauchy { scale: f64 },
    /// Generalized Gaussian `ε/(2αΓ(1/ε))·exp(−(|x|/α)^ε)` with `α = scale`, `ε = shape`.
    #[serde(rename = "gengauss")]
    GeneralizedGaussian { scale: f64, shape: f64 },
}

impl NoiseModel {
    pub fn gaussian(scale: f64) -> Result<Self> {
        Self::Gaussian { scale }.validated()
    }

    pub fn laplace(scale: f64) -> Result<Self> {
        Self::Laplace { scale }.validated()
    }

    pub fn cauchy(scale: f64) -> Result<Self> {
        Self::Cauchy { scale }.validated()
    }

    pub fn generalized_gaussian(scale: f64, shape: f64) -> Result<Self> {
        Self::GeneralizedGaussian { scale, shape }.validated()
    }

    /// Checks the parameters; deserialized models should pass through here.
    pub fn validated(self) -> Result<Self> {
        let scale = self.scale();
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "noise scale must be positive and finite, got {scale}"
            )));
        }
        if let Self::GeneralizedGaussian { shape, .. } = self {
            if !(shape > 0.0 && shape.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "generalized Gaussian shape must be positive, got {shape}"
                )));
            }
        }
        Ok(self)
    }

    pub fn scale(&self) -> f64 {
        match *self {
            Self::Gaussian { scale }
            | Self::Laplace { scale }
            | Self::Cauchy { scale }
            | Self::GeneralizedGaussian { scale, .. } => scale,
        }
    }

    /// Same family with the scale multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        let mut out = *self;
        match &mut out {
            Self::Gaussian { scale }
            | Self::Laplace { scale }
            | Self::Cauchy { scale }
            | Self::GeneralizedGaussian { scale, .. } => *scale *= factor,
        }
        out.validated()
    }

    /// Same family rescaled so that `E{w²} = 1`.
    pub fn with_unit_power(&self) -> Result<Self> {
        let m2 = self.second_moment().ok_or(Error::SnrUndefinedForCauchy)?;
        self.rescaled(1.0 / m2.sqrt())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::Laplace { .. } => "laplace",
            Self::Cauchy { .. } => "cauchy",
            Self::GeneralizedGaussian { .. } => "gengauss",
        }
    }

    /// Density `p_w(x)`.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        check_finite(x)?;
        Ok(self.density(x))
    }

    /// Complementary CDF `F_w(x) = P(w > x)`.
    pub fn ccdf(&self, x: f64) -> Result<f64> {
        check_finite(x)?;
        Ok(self.tail(x))
    }

    /// Unchecked density for hot loops; `x` must be finite.
    pub(crate) fn density(&self, x: f64) -> f64 {
        match *self {
            Self::Gaussian { scale } => gaussian_pdf(x / scale) / scale,
            Self::Laplace { scale } => (-x.abs() / scale).exp() / (2.0 * scale),
            Self::Cauchy { scale } => {
                let z = x / scale;
                1.0 / (std::f64::consts::PI * scale * (1.0 + z * z))
            }
            Self::GeneralizedGaussian { scale, shape } => {
                let norm = shape / (2.0 * scale * ln_gamma(1.0 / shape).exp());
                norm * (-(x.abs() / scale).powf(shape)).exp()
            }
        }
    }

    /// Unchecked complementary CDF for hot loops.
    pub(crate) fn tail(&self, x: f64) -> f64 {
        match *self {
            Self::Gaussian { scale } => gaussian_q(x / scale),
            Self::Laplace { scale } => {
                let half = 0.5 * (-x.abs() / scale).exp();
                if x >= 0.0 {
                    half
                } else {
                    1.0 - half
                }
            }
            Self::Cauchy { scale } => {
                if x == 0.0 {
                    return 0.5;
                }
                let upper = (scale / x.abs()).atan() / std::f64::consts::PI;
                if x > 0.0 {
                    upper
                } else {
                    1.0 - upper
                }
            }
            Self::GeneralizedGaussian { scale, shape } => {
                let z = (x.abs() / scale).powf(shape);
                let (lower, upper) = gamma_inc_pair(1.0 / shape, z).unwrap_or((f64::NAN, f64::NAN));
                if x >= 0.0 {
                    0.5 * upper
                } else {
                    0.5 + 0.5 * lower
                }
            }
        }
    }

    /// Inverse complementary CDF: the `x` with `ccdf(x) = p`.
    pub fn inv_ccdf(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::QuantileOutOfDomain(p));
        }
        if p == 0.5 {
            return Ok(0.0);
        }
        if p > 0.5 {
            // 1 − p is exact for p in [1/2, 1)
            return self.upper_quantile(1.0 - p).map(|x| -x);
        }
        self.upper_quantile(p)
    }

    /// Solves `ccdf(x) = p` for `p < 1/2` (so `x > 0`).
    fn upper_quantile(&self, p: f64) -> Result<f64> {
        match *self {
            Self::Laplace { scale } => Ok(-scale * (2.0 * p).ln()),
            Self::Cauchy { scale } => Ok(scale / (std::f64::consts::PI * p).tan()),
            Self::Gaussian { .. } | Self::GeneralizedGaussian { .. } => self.newton_quantile(p),
        }
    }

    /// Safeguarded Newton on `ln ccdf(x) − ln p`, started from the Laplace
    /// quantile whose density at the mode matches this model.
    fn newton_quantile(&self, p: f64) -> Result<f64> {
        let target = p.ln();
        let laplace_scale = 0.5 / self.density(0.0);
        let mut x = -laplace_scale * (2.0 * p).ln();

        let mut lo = 0.0;
        let mut hi = x.max(self.scale());
        while self.tail(hi) > p {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::Numerical(format!("quantile bracket diverged for p = {p}")));
            }
        }

        for _ in 0..QUANTILE_MAX_ITER {
            let tail = self.tail(x);
            let g = tail.ln() - target;
            if g > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let slope = -self.density(x) / tail;
            let mut next = x - g / slope;
            if !next.is_finite() || next <= lo || next >= hi {
                next = 0.5 * (lo + hi);
            }
            let step = (next - x).abs();
            x = next;
            if step <= QUANTILE_TOL * x.abs().max(1.0) || hi - lo <= QUANTILE_TOL * hi {
                return Ok(x);
            }
        }
        Err(Error::Numerical(format!(
            "quantile iteration did not converge for p = {p}"
        )))
    }

    /// `E{w²}`, or `None` for Cauchy where it does not exist.
    pub fn second_moment(&self) -> Option<f64> {
        match *self {
            Self::Gaussian { scale } => Some(scale * scale),
            Self::Laplace { scale } => Some(2.0 * scale * scale),
            Self::Cauchy { .. } => None,
            Self::GeneralizedGaussian { scale, shape } => {
                Some(scale * scale * (ln_gamma(3.0 / shape) - ln_gamma(1.0 / shape)).exp())
            }
        }
    }
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("non-finite argument {x}")))
    }
}
