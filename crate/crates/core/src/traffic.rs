//! Generative traffic model.
//!
//! Two modes share one [`PopulationSpec`]:
//!
//! * **Ideal**: every epoch is an independent draw; user `u` receives with
//!   probability `t_u` in a target epoch and `r_u` in a random one.
//! * **Trace**: continuous time. Background deliveries to each user form a
//!   homogeneous Poisson process whose rate is calibrated so that a window of
//!   one epoch length contains at least one delivery with probability `r_u`.
//!   Every group send by Bob delivers to each member and each member answers
//!   with a delivered receipt, which is what produces the flurry.

use std::collections::BTreeSet;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, UserId};

/// Per-user receive probabilities for one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    /// Probability of receiving during a random epoch.
    pub r: f64,
    /// Probability of receiving during a target epoch.
    pub t: f64,
}

impl UserProfile {
    pub fn new(t: f64, r: f64) -> Self {
        UserProfile { r, t }
    }

    /// A non-member: identical behaviour in target and random epochs.
    pub fn background(r: f64) -> Self {
        UserProfile { r, t: r }
    }

    #[inline]
    pub fn probability(&self, is_target: bool) -> f64 {
        if is_target {
            self.t
        } else {
            self.r
        }
    }

    pub fn gap(&self) -> f64 {
        self.t - self.r
    }
}

/// The world being attacked: `m` users, the target Bob and his group.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    total_users: usize,
    bob: UserId,
    group: Vec<UserId>,
    is_member: Vec<bool>,
    profiles: Vec<UserProfile>,
}

impl PopulationSpec {
    /// Validates and builds a population. Members need `t > r`, everyone
    /// else (Bob included) needs `t == r`.
    pub fn new(
        total_users: usize,
        bob: UserId,
        group: impl IntoIterator<Item = UserId>,
        profiles: Vec<UserProfile>,
    ) -> Result<Self> {
        Self::build(total_users, bob, group, profiles, true)
    }

    /// Like [`PopulationSpec::new`] but accepts members with `t == r`.
    /// Only meant for degenerate oracle checks.
    pub fn new_relaxed(
        total_users: usize,
        bob: UserId,
        group: impl IntoIterator<Item = UserId>,
        profiles: Vec<UserProfile>,
    ) -> Result<Self> {
        Self::build(total_users, bob, group, profiles, false)
    }

    /// Bob is user 0, the group is users `1..=k`, members share `(t, r)` and
    /// everyone else receives with probability `r` in any epoch.
    pub fn uniform(total_users: usize, k: usize, t: f64, r: f64) -> Result<Self> {
        Self::uniform_inner(total_users, k, t, r, true)
    }

    pub fn uniform_relaxed(total_users: usize, k: usize, t: f64, r: f64) -> Result<Self> {
        Self::uniform_inner(total_users, k, t, r, false)
    }

    fn uniform_inner(total_users: usize, k: usize, t: f64, r: f64, strict: bool) -> Result<Self> {
        let profiles = (0..total_users)
            .map(|u| {
                if (1..=k).contains(&u) {
                    UserProfile::new(t, r)
                } else {
                    UserProfile::background(r)
                }
            })
            .collect();
        Self::build(total_users, 0, 1..=k, profiles, strict)
    }

    fn build(
        total_users: usize,
        bob: UserId,
        group: impl IntoIterator<Item = UserId>,
        profiles: Vec<UserProfile>,
        strict: bool,
    ) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidPopulation(msg));
        if total_users < 2 {
            return invalid(format!("need at least 2 users, got {total_users}"));
        }
        if bob >= total_users {
            return invalid(format!("bob {bob} is not a user id below {total_users}"));
        }
        let mut seen = BTreeSet::new();
        for u in group {
            if u >= total_users {
                return invalid(format!(
                    "group member {u} is not a user id below {total_users}"
                ));
            }
            if u == bob {
                return invalid("bob cannot be a member of his own group".into());
            }
            if !seen.insert(u) {
                return invalid(format!("group member {u} listed twice"));
            }
        }
        if seen.is_empty() {
            return invalid("group is empty".into());
        }
        if profiles.len() != total_users {
            return invalid(format!(
                "{} profiles for {total_users} users",
                profiles.len()
            ));
        }
        let mut is_member = vec![false; total_users];
        for &u in &seen {
            is_member[u] = true;
        }
        for (u, p) in profiles.iter().enumerate() {
            for (name, v) in [("r", p.r), ("t", p.t)] {
                if !(0.0..=1.0).contains(&v) {
                    return invalid(format!("user {u}: {name} = {v} is not a probability"));
                }
            }
            if is_member[u] {
                let ok = if strict { p.t > p.r } else { p.t >= p.r };
                if !ok {
                    return invalid(format!(
                        "member {u} needs t > r, got t = {}, r = {}",
                        p.t, p.r
                    ));
                }
            } else if p.t != p.r {
                return invalid(format!(
                    "non-member {u} needs t == r, got t = {}, r = {}",
                    p.t, p.r
                ));
            }
        }
        Ok(PopulationSpec {
            total_users,
            bob,
            group: seen.into_iter().collect(),
            is_member,
            profiles,
        })
    }

    pub fn total_users(&self) -> usize {
        self.total_users
    }

    pub fn bob(&self) -> UserId {
        self.bob
    }

    /// Sorted member ids.
    pub fn group(&self) -> &[UserId] {
        &self.group
    }

    pub fn group_size(&self) -> usize {
        self.group.len()
    }

    pub fn is_member(&self, u: UserId) -> bool {
        self.is_member.get(u).copied().unwrap_or(false)
    }

    /// Membership mask indexed by user id.
    pub fn membership(&self) -> &[bool] {
        &self.is_member
    }

    pub fn profile(&self, u: UserId) -> UserProfile {
        self.profiles[u]
    }

    pub fn profiles(&self) -> &[UserProfile] {
        &self.profiles
    }

    pub fn group_profiles(&self) -> Vec<UserProfile> {
        self.group.iter().map(|&u| self.profiles[u]).collect()
    }

    /// Relabels users: user `u` becomes `perm[u]`.
    pub fn permuted(&self, perm: &[UserId]) -> Result<Self> {
        if perm.len() != self.total_users {
            return Err(Error::InvalidPopulation(
                "permutation has wrong length".into(),
            ));
        }
        let mut profiles = vec![UserProfile::background(0.0); self.total_users];
        for (u, p) in self.profiles.iter().enumerate() {
            profiles[perm[u]] = *p;
        }
        Self::build(
            self.total_users,
            perm[self.bob],
            self.group.iter().map(|&u| perm[u]),
            profiles,
            false,
        )
    }
}

/// One idealized epoch: who received at least one message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealEpochDraw {
    pub is_target: bool,
    /// Ascending user ids. May include Bob; the attack ignores him.
    pub receivers: Vec<UserId>,
}

/// Each user is included independently with probability `t_u` (target) or
/// `r_u` (random).
pub fn draw_ideal_epoch<R: Rng + ?Sized>(
    spec: &PopulationSpec,
    is_target: bool,
    rng: &mut R,
) -> IdealEpochDraw {
    let mut receivers = Vec::new();
    draw_ideal_receivers(spec, is_target, rng, &mut receivers);
    IdealEpochDraw {
        is_target,
        receivers,
    }
}

/// Allocation-free variant of [`draw_ideal_epoch`]; clears `out` first.
pub fn draw_ideal_receivers<R: Rng + ?Sized>(
    spec: &PopulationSpec,
    is_target: bool,
    rng: &mut R,
    out: &mut Vec<UserId>,
) {
    out.clear();
    for (u, p) in spec.profiles.iter().enumerate() {
        if rng.random_bool(p.probability(is_target)) {
            out.push(u);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Content,
    Receipt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub timestamp: f64,
    pub sender: UserId,
    pub recipient: UserId,
    pub kind: EventKind,
}

/// Full ground truth of a simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficTrace {
    /// Sorted by timestamp.
    pub events: Vec<TraceEvent>,
    pub horizon: f64,
    /// Times at which Bob sent to the group. Never visible to the server.
    pub sends: Vec<f64>,
}

impl TrafficTrace {
    /// Writes `timestamp,sender,recipient,kind`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for e in &self.events {
            out.serialize(e)?;
        }
        if self.events.is_empty() {
            out.write_record(["timestamp", "sender", "recipient", "kind"])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Continuous-time simulation settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceConfig {
    /// Length of the attack window in seconds.
    pub horizon: f64,
    pub epoch_length: f64,
    /// Poisson rate of Bob's group sends, per second.
    pub send_rate: f64,
    /// Explicit send times; overrides `send_rate` when present.
    pub send_times: Option<Vec<f64>>,
    pub receipt_min: f64,
    pub receipt_max: f64,
    /// Delivery delay of each group copy is uniform on `[0, jitter_max]`.
    pub jitter_max: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            horizon: 36_000.0,
            epoch_length: 60.0,
            send_rate: 1.0 / 300.0,
            send_times: None,
            receipt_min: 0.1,
            receipt_max: 2.0,
            jitter_max: 0.05,
        }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidRate(what));
        if !(self.epoch_length > 0.0) || !self.epoch_length.is_finite() {
            return bad(format!("epoch length {}", self.epoch_length));
        }
        if !self.horizon.is_finite() || self.horizon < self.epoch_length {
            return Err(Error::HorizonTooShort {
                horizon: self.horizon,
                epoch_length: self.epoch_length,
            });
        }
        if !(self.send_rate >= 0.0) || !self.send_rate.is_finite() {
            return bad(format!("send rate {}", self.send_rate));
        }
        if !(self.receipt_min >= 0.0) || !(self.receipt_max >= self.receipt_min) {
            return bad(format!(
                "receipt latency [{}, {}]",
                self.receipt_min, self.receipt_max
            ));
        }
        if !(self.jitter_max >= 0.0) || !self.jitter_max.is_finite() {
            return bad(format!("jitter {}", self.jitter_max));
        }
        if let Some(times) = &self.send_times {
            if let Some(s) = times.iter().find(|s| !(0.0..self.horizon).contains(*s)) {
                return bad(format!("send time {s} outside [0, {})", self.horizon));
            }
        }
        Ok(())
    }
}

/// Poisson rate giving `P(at least one arrival in epoch_length) = r`.
pub fn background_rate(r: f64, epoch_length: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidRate(format!(
            "background probability {r} must lie in [0, 1) in trace mode"
        )));
    }
    Ok(-(-r).ln_1p() / epoch_length)
}

/// Arrival times of a homogeneous Poisson process on `[0, horizon)`.
fn poisson_arrivals<R: Rng + ?Sized>(rate: f64, horizon: f64, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::new();
    let Ok(gap) = Exp::new(rate) else {
        return out;
    };
    if rate == 0.0 {
        return out;
    }
    let mut now = 0.0;
    loop {
        now += gap.sample(rng);
        if now >= horizon {
            return out;
        }
        out.push(now);
    }
}

/// Simulates one attack window.
///
/// Group copies and receipts that spill past the horizon are kept so every
/// send has its full flurry.
pub fn generate_trace<R: Rng + ?Sized>(
    spec: &PopulationSpec,
    sim: &TraceConfig,
    rng: &mut R,
) -> Result<TrafficTrace> {
    sim.validate()?;
    let rates = spec
        .profiles
        .iter()
        .map(|p| background_rate(p.r, sim.epoch_length))
        .collect::<Result<Vec<_>>>()?;

    let mut sends = match &sim.send_times {
        Some(times) => times.clone(),
        None => poisson_arrivals(sim.send_rate, sim.horizon, rng),
    };
    sends.sort_by(f64::total_cmp);

    let bob = spec.bob;
    let mut events = Vec::new();
    for &s in &sends {
        for &u in &spec.group {
            let delivered = s + rng.random_range(0.0..=sim.jitter_max);
            let answered = delivered + rng.random_range(sim.receipt_min..=sim.receipt_max);
            events.push(TraceEvent {
                timestamp: delivered,
                sender: bob,
                recipient: u,
                kind: EventKind::Content,
            });
            events.push(TraceEvent {
                timestamp: answered,
                sender: u,
                recipient: bob,
                kind: EventKind::Receipt,
            });
        }
    }

    let m = spec.total_users;
    for (u, &rate) in rates.iter().enumerate() {
        for at in poisson_arrivals(rate, sim.horizon, rng) {
            // uniform over everyone but the recipient
            let mut sender = rng.random_range(0..m - 1);
            if sender >= u {
                sender += 1;
            }
            events.push(TraceEvent {
                timestamp: at,
                sender,
                recipient: u,
                kind: EventKind::Content,
            });
        }
    }

    events.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok(TrafficTrace {
        events,
        horizon: sim.horizon,
        sends,
    })
}
