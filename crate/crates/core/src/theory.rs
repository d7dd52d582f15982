//! Success lower bound for the counting-table attack.
//!
//! With `m` users, group `G` and `n` target/random pairs, all members outrank
//! all non-members with probability at least
//!
//! ```text
//! 1 - m |G| / C^n,    C = min_{u in G} exp((t_u - r_u)^2 / 4)
//! ```
//!
//! Internally everything is carried in log space, `ln C = min (t_u - r_u)^2 / 4`,
//! so `C^n` is never rounded through `exp` and raised to a large power.

use serde::Serialize;

use crate::traffic::UserProfile;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub m: usize,
    pub group_probs: Vec<UserProfile>,
    pub n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundResult {
    pub c: f64,
    /// Unclamped; negative values are vacuous.
    pub bound: f64,
    pub n_min: Option<u64>,
}

impl BoundResult {
    /// The bound clamped to `[0, 1]` for display.
    pub fn reported(&self) -> f64 {
        self.bound.clamp(0.0, 1.0)
    }
}

fn check_probs(group_probs: &[UserProfile]) -> Result<()> {
    if group_probs.is_empty() {
        return Err(Error::InvalidParameter("group must not be empty".into()));
    }
    for p in group_probs {
        if !(0.0..=1.0).contains(&p.t) || !(0.0..=1.0).contains(&p.r) {
            return Err(Error::InvalidParameter(format!(
                "probabilities must lie in [0, 1], got t = {}, r = {}",
                p.t, p.r
            )));
        }
        if !(p.t > p.r) {
            return Err(Error::GapNonPositive { t: p.t, r: p.r });
        }
    }
    Ok(())
}

fn check_m(m: usize, k: usize) -> Result<()> {
    if m < k + 1 {
        return Err(Error::InvalidParameter(format!(
            "{m} users cannot hold Bob and a group of {k}"
        )));
    }
    Ok(())
}

/// `ln C = min_u (t_u - r_u)^2 / 4`.
pub fn log_c(group_probs: &[UserProfile]) -> Result<f64> {
    check_probs(group_probs)?;
    Ok(group_probs
        .iter()
        .map(|p| {
            let gap = p.t - p.r;
            gap * gap / 4.0
        })
        .fold(f64::INFINITY, f64::min))
}

pub fn compute_c(group_probs: &[UserProfile]) -> Result<f64> {
    log_c(group_probs).map(f64::exp)
}

/// `m k / C^n`, the failure budget.
fn tail(m: usize, k: usize, log_c: f64, n: u64) -> f64 {
    (m as f64 * k as f64) * (-(n as f64) * log_c).exp()
}

/// `1 - m k / C^n`, unclamped.
pub fn bound(inputs: &BoundInputs) -> Result<f64> {
    let k = inputs.group_probs.len();
    let lc = log_c(&inputs.group_probs)?;
    check_m(inputs.m, k)?;
    Ok(1.0 - tail(inputs.m, k, lc, inputs.n))
}

/// Smallest `n` with `bound >= confidence`.
///
/// Closed form `ceil(ln(m k / (1 - confidence)) / ln C)`, then nudged by
/// direct evaluation so the boundary is exact in floating point.
pub fn n_min(m: usize, group_probs: &[UserProfile], confidence: f64) -> Result<u64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidConfidence(confidence));
    }
    let k = group_probs.len();
    let lc = log_c(group_probs)?;
    check_m(m, k)?;
    let at = |n: u64| 1.0 - tail(m, k, lc, n);

    let closed = (((m as f64 * k as f64).ln() - (-confidence).ln_1p()) / lc).ceil();
    let mut n = if closed.is_finite() && closed > 0.0 {
        closed as u64
    } else {
        0
    };
    while at(n) < confidence {
        n += 1;
    }
    while n > 0 && at(n - 1) >= confidence {
        n -= 1;
    }
    Ok(n)
}

pub fn evaluate(inputs: &BoundInputs, confidence: Option<f64>) -> Result<BoundResult> {
    let c = compute_c(&inputs.group_probs)?;
    let bound = bound(inputs)?;
    let n_min = confidence
        .map(|conf| n_min(inputs.m, &inputs.group_probs, conf))
        .transpose()?;
    Ok(BoundResult { c, bound, n_min })
}

/// Convenience for a group whose members all share `(t, r)`.
pub fn uniform_group(k: usize, t: f64, r: f64) -> Vec<UserProfile> {
    vec![UserProfile::new(t, r); k]
}
