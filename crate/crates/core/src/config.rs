//! Analysis configuration shared by the speed, topics, and stats stages.

use chrono::Duration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How the distance sum behind a per-snapshot speed is formed.
///
/// `Multiset` sums one term per retweet event (repeat targets contribute
/// once per repeat); `Support` sums one term per distinct target. Both
/// divide by the total retweet count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummationMode {
    Multiset,
    Support,
}

/// Smoothing applied to the prior-proportion terms of topic variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    None,
    AddOne,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub bin_width: Duration,
    pub min_retweets: u64,
    pub fallback_distance: f64,
    pub summation_mode: SummationMode,
    pub include_first_bin: bool,
    pub smoothing: Smoothing,
    pub monotonicity_threshold: f64,
    pub slow_speed_threshold: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            bin_width: Duration::days(14),
            min_retweets: 50,
            fallback_distance: 1.0,
            summation_mode: SummationMode::Multiset,
            include_first_bin: true,
            smoothing: Smoothing::None,
            monotonicity_threshold: 0.3,
            slow_speed_threshold: 1.5,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.bin_width <= Duration::zero() {
            return Err(ConfigError::Invalid("bin_width must be positive".into()));
        }
        if self.min_retweets < 1 {
            return Err(ConfigError::Invalid("min_retweets must be >= 1".into()));
        }
        if !(self.fallback_distance >= 1.0) {
            return Err(ConfigError::Invalid(
                "fallback_distance must be >= 1".into(),
            ));
        }
        if !(self.monotonicity_threshold > 0.0) {
            return Err(ConfigError::Invalid(
                "monotonicity_threshold must be positive".into(),
            ));
        }
        if !(self.slow_speed_threshold > 0.0) {
            return Err(ConfigError::Invalid(
                "slow_speed_threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}
