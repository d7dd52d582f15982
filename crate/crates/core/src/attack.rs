//! The counting-table attack.
//!
//! Every target epoch adds one to each of its receivers, every random epoch
//! subtracts one. Group members drift upward at rate `t_u - r_u` per pair,
//! everyone else stays centred on zero.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::epoch::{
    detect_flurries, extract_target_epoch, sample_random_epoch, Epoch, EpochLabel, FlurryParams,
};
use crate::observer::ObservedLog;
use crate::{Error, Result, UserId};

/// Signed per-user scores. Bob has a slot but it is never touched or ranked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    counts: Vec<i64>,
    bob: UserId,
    pairs_processed: usize,
}

impl CountTable {
    pub fn new(total_users: usize, bob: UserId) -> Self {
        CountTable {
            counts: vec![0; total_users],
            bob,
            pairs_processed: 0,
        }
    }

    pub fn total_users(&self) -> usize {
        self.counts.len()
    }

    pub fn bob(&self) -> UserId {
        self.bob
    }

    pub fn pairs_processed(&self) -> usize {
        self.pairs_processed
    }

    pub fn count(&self, u: UserId) -> i64 {
        self.counts[u]
    }

    /// Raw counts indexed by user id, Bob's slot included (always zero).
    pub fn counts(&self) -> &[i64] {
        &self.counts
    }

    /// Applies one target/random pair.
    pub fn process_pair(&mut self, target: &impl Epoch, random: &impl Epoch) -> Result<()> {
        for (epoch, expected) in [
            (target.label(), EpochLabel::Target),
            (random.label(), EpochLabel::Random),
        ] {
            if epoch != expected {
                return Err(Error::LabelMismatch {
                    expected: expected.as_str(),
                    found: epoch.as_str(),
                });
            }
        }
        let m = self.counts.len();
        if let Some(&u) = target
            .receivers()
            .iter()
            .chain(random.receivers())
            .find(|&&u| u >= m)
        {
            return Err(Error::UnknownUser {
                user: u,
                total_users: m,
            });
        }
        self.apply(target.receivers(), random.receivers());
        Ok(())
    }

    /// Unchecked inner loop shared with the ideal-mode runner.
    #[inline]
    pub(crate) fn apply(&mut self, target: &[UserId], random: &[UserId]) {
        for &u in target {
            self.counts[u] += 1;
        }
        for &u in random {
            self.counts[u] -= 1;
        }
        self.counts[self.bob] = 0;
        self.pairs_processed += 1;
    }

    /// Every non-Bob user, highest count first, ties broken by lower id.
    pub fn ranked(&self) -> Vec<(UserId, i64)> {
        let mut out: Vec<(UserId, i64)> = self
            .counts
            .iter()
            .enumerate()
            .filter(|&(u, _)| u != self.bob)
            .map(|(u, &c)| (u, c))
            .collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }

    /// `(min count over members, max count over non-members)`; the latter is
    /// `None` when every non-Bob user is a member.
    pub fn separation(&self, is_member: &[bool]) -> (i64, Option<i64>) {
        separation(
            self.counts
                .iter()
                .enumerate()
                .filter(|&(u, _)| u != self.bob)
                .map(|(u, &c)| (u, c)),
            |u| is_member.get(u).copied().unwrap_or(false),
        )
    }
}

fn separation(
    counts: impl Iterator<Item = (UserId, i64)>,
    is_member: impl Fn(UserId) -> bool,
) -> (i64, Option<i64>) {
    let mut min_member = i64::MAX;
    let mut max_other: Option<i64> = None;
    for (u, c) in counts {
        if is_member(u) {
            min_member = min_member.min(c);
        } else {
            max_other = Some(max_other.map_or(c, |m| m.max(c)));
        }
    }
    (min_member, max_other)
}

/// True iff every member strictly outranks every non-member. A tie across
/// the boundary is a failure.
pub fn judge_success(ranked: &[(UserId, i64)], true_group: &[UserId]) -> bool {
    if true_group.is_empty() {
        return false;
    }
    let (min_member, max_other) = separation(ranked.iter().copied(), |u| true_group.contains(&u));
    if min_member == i64::MAX {
        // no member appears in the ranking
        return false;
    }
    max_other.is_none_or(|o| min_member > o)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    /// Number of target/random epoch pairs.
    pub n: usize,
    /// How many top-ranked users to report as the presumed group.
    pub k_hat: usize,
    pub epoch_length: f64,
    pub flurry: FlurryParams,
}

impl AttackConfig {
    pub fn new(n: usize, k_hat: usize, epoch_length: f64) -> Self {
        AttackConfig {
            n,
            k_hat,
            epoch_length,
            flurry: FlurryParams::for_group_size(k_hat),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if self.k_hat == 0 {
            return Err(Error::InvalidParameter("k_hat must be at least 1".into()));
        }
        if !(self.epoch_length > 0.0) || !self.epoch_length.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epoch length must be positive, got {}",
                self.epoch_length
            )));
        }
        self.flurry.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub ranked: Vec<(UserId, i64)>,
    pub top_k: Vec<UserId>,
    /// Filled in by [`AttackResult::judge`] once ground truth is known.
    pub success: Option<bool>,
    pub table: CountTable,
    pub config: AttackConfig,
    pub flurries_detected: usize,
    /// Flurries too close to time zero to fit a target epoch.
    pub flurries_underflow: usize,
    /// Target windows that also contain the start of an earlier flurry.
    pub multi_send_windows: usize,
}

impl AttackResult {
    pub fn pairs_processed(&self) -> usize {
        self.table.pairs_processed()
    }

    /// Pairs asked for but not available because too few flurries were seen.
    pub fn shortfall(&self) -> usize {
        self.config.n.saturating_sub(self.pairs_processed())
    }

    pub fn judge(&mut self, true_group: &[UserId]) -> bool {
        let ok = judge_success(&self.ranked, true_group);
        self.success = Some(ok);
        ok
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        #[derive(Serialize)]
        struct Report<'a> {
            ranked: &'a [(UserId, i64)],
            top_k: &'a [UserId],
            success: Option<bool>,
            pairs_processed: usize,
            config_echo: &'a AttackConfig,
            flurries_detected: usize,
            flurries_underflow: usize,
            multi_send_windows: usize,
            shortfall: usize,
        }
        serde_json::to_writer_pretty(
            w,
            &Report {
                ranked: &self.ranked,
                top_k: &self.top_k,
                success: self.success,
                pairs_processed: self.pairs_processed(),
                config_echo: &self.config,
                flurries_detected: self.flurries_detected,
                flurries_underflow: self.flurries_underflow,
                multi_send_windows: self.multi_send_windows,
                shortfall: self.shortfall(),
            },
        )?;
        Ok(())
    }
}

/// Runs the full attack on an observed log.
///
/// Uses the first `n` flurries that leave room for a target epoch (fewer if
/// fewer exist) and draws one random epoch per target epoch.
pub fn run_attack<R: Rng + ?Sized>(
    log: &ObservedLog,
    bob: UserId,
    total_users: usize,
    cfg: &AttackConfig,
    rng: &mut R,
) -> Result<AttackResult> {
    cfg.validate()?;
    if bob >= total_users {
        return Err(Error::UnknownUser {
            user: bob,
            total_users,
        });
    }
    let flurries = detect_flurries(log, bob, &cfg.flurry);
    if flurries.is_empty() {
        return Err(Error::NoFlurries);
    }
    let usable: Vec<f64> = flurries
        .iter()
        .map(|f| f.start)
        .filter(|&s| s >= cfg.epoch_length)
        .collect();
    if usable.is_empty() {
        return Err(Error::NoFlurries);
    }

    let mut table = CountTable::new(total_users, bob);
    let mut multi_send_windows = 0;
    for (i, &at) in usable.iter().take(cfg.n).enumerate() {
        if i > 0 && usable[i - 1] >= at - cfg.epoch_length {
            multi_send_windows += 1;
        }
        let target = extract_target_epoch(log, at, cfg.epoch_length, bob)?;
        let random = sample_random_epoch(log, cfg.epoch_length, rng, bob)?;
        table.process_pair(&target, &random)?;
    }

    let ranked = table.ranked();
    let top_k = ranked.iter().take(cfg.k_hat).map(|&(u, _)| u).collect();
    Ok(AttackResult {
        ranked,
        top_k,
        success: None,
        table,
        config: cfg.clone(),
        flurries_detected: flurries.len(),
        flurries_underflow: flurries.len() - usable.len(),
        multi_send_windows,
    })
}
