//! Simulator and attack harness for flurry-anchored statistical disclosure
//! against sealed-sender group messaging.
//!
//! The pipeline mirrors what an honest-but-curious server can do:
//!
//! 1. [`traffic`] generates synthetic traffic, either as independent per-epoch
//!    draws (the idealized model) or as a continuous-time trace where Bob's
//!    group sends trigger a burst of delivered receipts back to him.
//! 2. [`observer`] erases senders and message kinds, leaving the server's view.
//! 3. [`epoch`] finds flurries of "to Bob" traffic and cuts target and random
//!    epochs out of the observed log.
//! 4. [`attack`] runs the counting-table attack and ranks users.
//! 5. [`theory`] evaluates the success lower bound `1 - m k / C^n`.
//! 6. [`harness`] sweeps parameter grids, computes exact probabilities for tiny
//!    populations by enumeration, and compares everything against the bound.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod config;
pub mod epoch;
mod error;
pub mod harness;
pub mod observer;
pub mod theory;
pub mod traffic;

pub use error::{Error, Result};

/// Users are numbered `0..m`.
pub type UserId = usize;

pub use attack::{judge_success, run_attack, AttackConfig, AttackResult, CountTable};
pub use epoch::{
    detect_flurries, extract_target_epoch, sample_random_epoch, Epoch, EpochLabel, EpochSample,
    Flurry, FlurryParams,
};
pub use observer::{observe, ObservedEvent, ObservedLog};
pub use theory::{bound, compute_c, n_min, BoundInputs, BoundResult};
pub use traffic::{
    draw_ideal_epoch, generate_trace, EventKind, IdealEpochDraw, PopulationSpec, TraceConfig,
    TraceEvent, TrafficTrace, UserProfile,
};
