//! Generalized likelihood ratio (GLR) change-point tests over scalar reward
//! streams.
//!
//! A stream `X_1, ..., X_n` is split at every `s in 1..n` and the split is
//! scored as
//!
//! ```text
//! GLR_s = s * kl(mean(1..=s), mean(1..=n)) + (n - s) * kl(mean(s+1..=n), mean(1..=n))
//! ```
//!
//! A change is declared at the first split whose score reaches
//! [`glr_threshold`]. Two divergence families are supported: Bernoulli (for
//! rewards bounded in `[0, 1]`) and Gaussian with a known variance proxy.

mod buffer;
mod glr;
mod kl;

pub use buffer::ObservationBuffer;
pub use glr::{glr_profile, glr_scan, glr_statistic, glr_threshold, DetectionResult};
pub use kl::{kl_bernoulli, kl_gaussian};

use thiserror::Error;

/// Variance proxy used by the Gaussian test when the noise level is unknown
/// (the sub-Gaussian constant of a reward bounded in `[0, 1]`).
pub const DEFAULT_SIGMA2: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("bernoulli test requires observations in [0, 1], got {0}")]
    OutOfRange(f64),
}

/// Divergence family of the test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GlrFamily {
    Bernoulli,
    Gaussian { sigma2: f64 },
}

impl GlrFamily {
    pub fn gaussian(sigma2: f64) -> Result<Self, DetectError> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(DetectError::Domain(format!(
                "gaussian variance proxy must be positive, got {sigma2}"
            )));
        }
        Ok(GlrFamily::Gaussian { sigma2 })
    }

    /// Divergence between two means under this family.
    pub fn kl(&self, x: f64, y: f64) -> Result<f64, DetectError> {
        match *self {
            GlrFamily::Bernoulli => kl_bernoulli(x, y),
            GlrFamily::Gaussian { sigma2 } => kl_gaussian(x, y, sigma2),
        }
    }
}

/// Configuration of a GLR detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlrConfig {
    pub family: GlrFamily,
    /// False-alarm confidence; the only probability entering the threshold.
    pub delta_f: f64,
    /// Missed-detection probability. Kept for completeness; the threshold
    /// does not depend on it.
    pub delta_d: f64,
    /// Drop the oldest observations beyond this many. `None` keeps everything.
    pub max_history: Option<usize>,
    /// Scan only when the buffer length is a multiple of `stride`.
    pub stride: usize,
}

impl GlrConfig {
    pub fn new(family: GlrFamily, delta_f: f64) -> Result<Self, DetectError> {
        let cfg = Self {
            family,
            delta_f,
            delta_d: delta_f,
            max_history: None,
            stride: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        for (name, v) in [("delta_F", self.delta_f), ("delta_D", self.delta_d)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(DetectError::Domain(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if let GlrFamily::Gaussian { sigma2 } = self.family {
            GlrFamily::gaussian(sigma2)?;
        }
        if self.stride == 0 {
            return Err(DetectError::Domain("scan stride must be at least 1".into()));
        }
        if self.max_history == Some(0) {
            return Err(DetectError::Domain("max_history must be positive".into()));
        }
        Ok(())
    }
}
