//! Real-to-sim signal alignment. Contact parameters are calibrated against a
//! force-response curve; histograms compare the resulting reading distributions.

mod calibration;
mod curve;
mod histogram;

pub use calibration::{
    fit_contact_params, fit_contact_params_with, CalibrationResult, FitOptions, KdConfidence,
};
pub use curve::{
    simulate_response_curve, simulate_response_curve_with, CurveSample, CurveSource,
    ForceResponseCurve, PressScene,
};
pub use histogram::{histogram_compare, read_samples, DivergenceKind, HistogramReport};

#[derive(Debug, thiserror::Error)]
pub enum SignalError {
    #[error("invalid normalization config: {0}")]
    InvalidConfig(String),
    #[error("invalid response curve: {0}")]
    InvalidCurve(String),
    #[error("uninformative curve: all readings are equal")]
    UninformativeCurve,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Contact(#[from] crate::contact::ContactError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Two-stage normalization of raw sensor counts.
///
/// Readings below `tau` are treated as noise-floor values and scaled by the fixed
/// full-scale count; stronger readings are scaled by the current frame maximum.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationConfig {
    pub tau: f64,
    pub s_max_fixed: f64,
    pub epsilon: f64,
}

impl Default for NormalizationConfig {
    /// 5% and 100% of a 10-bit ADC range.
    fn default() -> Self {
        Self {
            tau: 51.0,
            s_max_fixed: 1023.0,
            epsilon: 1e-9,
        }
    }
}

impl NormalizationConfig {
    pub fn validate(&self) -> Result<(), SignalError> {
        if !(self.tau > 0.0 && self.tau < self.s_max_fixed && self.s_max_fixed.is_finite()) {
            return Err(SignalError::InvalidConfig(format!(
                "need 0 < tau < s_max_fixed, got tau = {}, s_max_fixed = {}",
                self.tau, self.s_max_fixed
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(SignalError::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

pub fn normalize_reading(s: f64, cfg: &NormalizationConfig, frame_max: f64) -> f64 {
    let scaled = if s < cfg.tau {
        s / cfg.s_max_fixed
    } else {
        s / frame_max.max(cfg.epsilon)
    };
    if scaled.is_nan() {
        return 0.0;
    }
    scaled.clamp(0.0, 1.0)
}

/// Normalizes one frame of raw counts against its own maximum.
pub fn normalize_counts(counts: &[f64], cfg: &NormalizationConfig) -> Vec<f64> {
    let frame_max = counts.iter().copied().fold(0.0, f64::max);
    counts
        .iter()
        .map(|&s| normalize_reading(s, cfg, frame_max))
        .collect()
}
