use thiserror::Error;

use crate::UserId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid population: {0}")]
    InvalidPopulation(String),
    #[error("horizon {horizon} s is shorter than one epoch ({epoch_length} s)")]
    HorizonTooShort { horizon: f64, epoch_length: f64 },
    #[error("invalid rate or interval: {0}")]
    InvalidRate(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("target epoch would start before time zero (flurry at {flurry_time} s, epoch {epoch_length} s)")]
    WindowUnderflow { flurry_time: f64, epoch_length: f64 },
    #[error("expected a {expected} epoch, got a {found} epoch")]
    LabelMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("user {user} is outside the population of {total_users}")]
    UnknownUser { user: UserId, total_users: usize },
    #[error("no flurries detected in the observed log")]
    NoFlurries,
    #[error("group member gap t - r must be positive (t = {t}, r = {r})")]
    GapNonPositive { t: f64, r: f64 },
    #[error("confidence must lie in (0, 1), got {0}")]
    InvalidConfidence(f64),
    #[error("invalid experiment plan: {0}")]
    PlanInvalid(String),
    #[error("enumeration too large: {0}")]
    TooLarge(String),
    #[error("observed log is not sorted by timestamp at row {0}")]
    Unsorted(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
