//! Flurry detection and epoch extraction over an [`ObservedLog`].

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::observer::ObservedLog;
use crate::{Error, Result, UserId};

/// Thresholds for calling a run of "to Bob" events a flurry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlurryParams {
    /// Largest allowed spacing between consecutive events of one flurry, seconds.
    pub gap_max: f64,
    /// Fewest events that count as a flurry.
    pub min_size: usize,
}

impl Default for FlurryParams {
    fn default() -> Self {
        FlurryParams {
            gap_max: 2.5,
            min_size: 2,
        }
    }
}

impl FlurryParams {
    pub fn new(gap_max: f64, min_size: usize) -> Result<Self> {
        let p = FlurryParams { gap_max, min_size };
        p.validate()?;
        Ok(p)
    }

    /// Defaults with `min_size = max(2, expected_group_size)`.
    pub fn for_group_size(expected_group_size: usize) -> Self {
        FlurryParams {
            min_size: expected_group_size.max(2),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gap_max > 0.0) || !self.gap_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "flurry gap_max must be positive, got {}",
                self.gap_max
            )));
        }
        if self.min_size < 2 {
            return Err(Error::InvalidParameter(format!(
                "flurry min_size must be at least 2, got {}",
                self.min_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Flurry {
    pub start: f64,
    pub end: f64,
    pub size: usize,
}

/// Maximal runs of consecutive to-Bob events spaced at most `gap_max` apart
/// with at least `min_size` events. Runs are disjoint and in time order.
pub fn detect_flurries(log: &ObservedLog, bob: UserId, params: &FlurryParams) -> Vec<Flurry> {
    let mut out = Vec::new();
    let mut run: Option<Flurry> = None;
    for t in log
        .events()
        .iter()
        .filter(|e| e.recipient == bob)
        .map(|e| e.timestamp)
    {
        match run.as_mut() {
            Some(f) if t - f.end <= params.gap_max => {
                f.end = t;
                f.size += 1;
            }
            _ => {
                if let Some(f) = run.take() {
                    if f.size >= params.min_size {
                        out.push(f);
                    }
                }
                run = Some(Flurry {
                    start: t,
                    end: t,
                    size: 1,
                });
            }
        }
    }
    if let Some(f) = run {
        if f.size >= params.min_size {
            out.push(f);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpochLabel {
    Target,
    Random,
}

impl EpochLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            EpochLabel::Target => "target",
            EpochLabel::Random => "random",
        }
    }
}

/// Anything the counting table can consume.
pub trait Epoch {
    fn label(&self) -> EpochLabel;
    /// Users that received at least one message. Duplicates are not allowed.
    fn receivers(&self) -> &[UserId];
}

impl Epoch for crate::traffic::IdealEpochDraw {
    fn label(&self) -> EpochLabel {
        if self.is_target {
            EpochLabel::Target
        } else {
            EpochLabel::Random
        }
    }

    fn receivers(&self) -> &[UserId] {
        &self.receivers
    }
}

/// One epoch cut out of an observed log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSample {
    pub label: EpochLabel,
    /// Ascending, never contains Bob.
    pub receivers: Vec<UserId>,
    pub window_start: f64,
    pub window_end: f64,
}

impl Epoch for EpochSample {
    fn label(&self) -> EpochLabel {
        self.label
    }

    fn receivers(&self) -> &[UserId] {
        &self.receivers
    }
}

fn cut(log: &ObservedLog, start: f64, end: f64, bob: UserId, label: EpochLabel) -> EpochSample {
    let mut receivers: Vec<UserId> = log
        .window(start, end)
        .iter()
        .map(|e| e.recipient)
        .filter(|&u| u != bob)
        .collect();
    receivers.sort_unstable();
    receivers.dedup();
    EpochSample {
        label,
        receivers,
        window_start: start,
        window_end: end,
    }
}

/// The epoch `[flurry_time - L, flurry_time)`.
pub fn extract_target_epoch(
    log: &ObservedLog,
    flurry_time: f64,
    epoch_length: f64,
    bob: UserId,
) -> Result<EpochSample> {
    if flurry_time < epoch_length {
        return Err(Error::WindowUnderflow {
            flurry_time,
            epoch_length,
        });
    }
    Ok(cut(
        log,
        flurry_time - epoch_length,
        flurry_time,
        bob,
        EpochLabel::Target,
    ))
}

/// An epoch whose start is uniform on `[0, horizon - L]`.
pub fn sample_random_epoch<R: Rng + ?Sized>(
    log: &ObservedLog,
    epoch_length: f64,
    rng: &mut R,
    bob: UserId,
) -> Result<EpochSample> {
    let horizon = log.horizon();
    if horizon < epoch_length {
        return Err(Error::HorizonTooShort {
            horizon,
            epoch_length,
        });
    }
    let start = rng.random_range(0.0..=horizon - epoch_length);
    Ok(cut(
        log,
        start,
        start + epoch_length,
        bob,
        EpochLabel::Random,
    ))
}

/// Writes `label,window_start,window_end,receiver_ids` with ids joined by `;`.
pub fn write_epochs_csv<'a, W: Write>(
    w: W,
    epochs: impl IntoIterator<Item = &'a EpochSample>,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["label", "window_start", "window_end", "receiver_ids"])?;
    for e in epochs {
        let ids = e
            .receivers
            .iter()
            .map(|u| u.to_string())
            .collect::<Vec<_>>()
            .join(";");
        out.write_record([
            e.label.as_str().to_string(),
            e.window_start.to_string(),
            e.window_end.to_string(),
            ids,
        ])?;
    }
    out.flush()?;
    Ok(())
}
