//! Browser bindings for the interactive demo in `www/index.html`.
//!
//! Each exported function has a plain-Rust twin (`*_impl`) so the logic is
//! testable natively; the wasm wrappers only convert errors.

use flurry_core::epoch::{detect_flurries, FlurryParams};
use flurry_core::harness::ideal_success_curve;
use flurry_core::theory::{self, uniform_group, BoundInputs};
use flurry_core::{generate_trace, observe, run_attack, AttackConfig, PopulationSpec, TraceConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

type Result<T> = std::result::Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Unclamped bound at `n = 0..=n_max`.
pub fn bound_curve_impl(m: usize, k: usize, t: f64, r: f64, n_max: usize) -> Result<Vec<f64>> {
    let group = uniform_group(k, t, r);
    (0..=n_max as u64)
        .map(|n| {
            theory::bound(&BoundInputs {
                m,
                group_probs: group.clone(),
                n,
            })
            .map_err(err)
        })
        .collect()
}

pub fn n_min_impl(m: usize, k: usize, t: f64, r: f64, confidence: f64) -> Result<u64> {
    theory::n_min(m, &uniform_group(k, t, r), confidence).map_err(err)
}

/// Empirical ideal-mode success rate at `n = 1..=n_max`.
pub fn success_curve_impl(
    m: usize,
    k: usize,
    t: f64,
    r: f64,
    n_max: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let spec = PopulationSpec::uniform(m, k, t, r).map_err(err)?;
    Ok(ideal_success_curve(&spec, n_max, trials, seed))
}

#[derive(Debug, Serialize)]
pub struct Timeline {
    pub horizon: f64,
    pub epoch_length: f64,
    pub sends: Vec<f64>,
    /// Every observed event addressed to Bob.
    pub to_bob: Vec<f64>,
    /// Observed deliveries to group members: `(time, member index 0..k)`.
    pub to_members: Vec<(f64, usize)>,
    /// Deliveries to a handful of non-members: `(time, row index 0..)`.
    pub to_others: Vec<(f64, usize)>,
    pub flurries: Vec<(f64, f64)>,
    /// Top of the final ranking: `(user, count, is_member)`.
    pub top: Vec<(usize, i64, bool)>,
    pub success: Option<bool>,
}

/// One short trace with the flurries the server would detect and the ranking
/// the attack ends with.
pub fn flurry_timeline_impl(
    m: usize,
    k: usize,
    r: f64,
    sends: usize,
    seed: u64,
) -> Result<Timeline> {
    let spec = PopulationSpec::uniform(m, k, 1.0, r).map_err(err)?;
    let epoch_length = 60.0;
    let spacing = 300.0;
    let trace_cfg = TraceConfig {
        horizon: spacing * (sends as f64 + 1.0),
        epoch_length,
        send_times: Some((1..=sends).map(|i| spacing * i as f64 - 30.0).collect()),
        ..TraceConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trace = generate_trace(&spec, &trace_cfg, &mut rng).map_err(err)?;
    let log = observe(&trace);
    let params = FlurryParams::for_group_size(k);
    let flurries = detect_flurries(&log, spec.bob(), &params)
        .iter()
        .map(|f| (f.start, f.end))
        .collect();
    let shown_others = 4.min(m - k - 1);
    let mut tl = Timeline {
        horizon: trace.horizon,
        epoch_length,
        sends: trace.sends.clone(),
        to_bob: Vec::new(),
        to_members: Vec::new(),
        to_others: Vec::new(),
        flurries,
        top: Vec::new(),
        success: None,
    };
    for e in log.events() {
        if e.recipient == spec.bob() {
            tl.to_bob.push(e.timestamp);
        } else if let Some(i) = spec.group().iter().position(|&u| u == e.recipient) {
            tl.to_members.push((e.timestamp, i));
        } else if e.recipient > k && e.recipient <= k + shown_others {
            tl.to_others.push((e.timestamp, e.recipient - k - 1));
        }
    }
    let cfg = AttackConfig {
        flurry: params,
        ..AttackConfig::new(sends.max(1), k, epoch_length)
    };
    if let Ok(mut res) = run_attack(&log, spec.bob(), m, &cfg, &mut rng) {
        tl.success = Some(res.judge(spec.group()));
        tl.top = res
            .ranked
            .iter()
            .take(k + 5)
            .map(|&(u, c)| (u, c, spec.is_member(u)))
            .collect();
    }
    Ok(tl)
}

#[wasm_bindgen]
pub fn bound_curve(
    m: usize,
    k: usize,
    t: f64,
    r: f64,
    n_max: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    bound_curve_impl(m, k, t, r, n_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn n_min(
    m: usize,
    k: usize,
    t: f64,
    r: f64,
    confidence: f64,
) -> std::result::Result<f64, JsError> {
    n_min_impl(m, k, t, r, confidence)
        .map(|n| n as f64)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn success_curve(
    m: usize,
    k: usize,
    t: f64,
    r: f64,
    n_max: usize,
    trials: usize,
    seed: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    success_curve_impl(m, k, t, r, n_max, trials, seed as u64).map_err(|e| JsError::new(&e))
}

/// JSON-encoded [`Timeline`].
#[wasm_bindgen]
pub fn flurry_timeline(
    m: usize,
    k: usize,
    r: f64,
    sends: usize,
    seed: u32,
) -> std::result::Result<String, JsError> {
    flurry_timeline_impl(m, k, r, sends, seed as u64)
        .and_then(|tl| serde_json::to_string(&tl).map_err(err))
        .map_err(|e| JsError::new(&e))
}
