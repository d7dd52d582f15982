//! TOML configuration shared by the CLI subcommands.
//!
//! ```toml
//! seed = 7
//! epoch_length = 60.0
//!
//! [population]
//! total_users = 100
//! bob = 0
//! group = [1, 2, 3]
//! t = 1.0
//! r = 0.05
//!
//! [trace]
//! horizon = 36000.0
//! send_rate = 0.0033
//!
//! [attack]
//! n = 50
//!
//! [experiment]
//! mode = "ideal"
//! trials = 1000
//! base_seed = 1
//! m = [50, 100]
//! k = [3]
//! pairs = [[1.0, 0.1], [0.7, 0.4]]
//! confidence = [0.5, 0.95]
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::attack::AttackConfig;
use crate::epoch::FlurryParams;
use crate::harness::{ExperimentPlan, Mode};
use crate::traffic::{PopulationSpec, TraceConfig, UserProfile};
use crate::{Error, Result, UserId};

fn default_epoch_length() -> f64 {
    60.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    #[serde(default = "default_epoch_length")]
    pub epoch_length: f64,
    pub population: Option<PopulationSection>,
    #[serde(default)]
    pub trace: TraceSection,
    #[serde(default)]
    pub attack: AttackSection,
    pub experiment: Option<ExperimentSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSection {
    pub total_users: usize,
    #[serde(default)]
    pub bob: UserId,
    /// Explicit member ids. Defaults to the `k` users after Bob.
    pub group: Option<Vec<UserId>>,
    pub k: Option<usize>,
    /// Target-epoch probability shared by members.
    #[serde(default = "one")]
    pub t: f64,
    /// Random-epoch probability shared by everyone.
    pub r: f64,
    /// Per-user overrides.
    #[serde(default)]
    pub users: Vec<UserOverride>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserOverride {
    pub id: UserId,
    pub r: f64,
    /// Only meaningful for members; non-members always have `t = r`.
    pub t: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceSection {
    pub horizon: f64,
    pub send_rate: f64,
    pub send_times: Option<Vec<f64>>,
    pub receipt_min: f64,
    pub receipt_max: f64,
    pub jitter_max: f64,
}

impl Default for TraceSection {
    fn default() -> Self {
        let d = TraceConfig::default();
        TraceSection {
            horizon: d.horizon,
            send_rate: d.send_rate,
            send_times: d.send_times,
            receipt_min: d.receipt_min,
            receipt_max: d.receipt_max,
            jitter_max: d.jitter_max,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    pub n: Option<usize>,
    pub k_hat: Option<usize>,
    pub gap_max: Option<f64>,
    pub min_size: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "ideal")]
    pub mode: Mode,
    #[serde(default = "thousand")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub m: Vec<usize>,
    pub k: Vec<usize>,
    /// Cartesian with `r`.
    #[serde(default)]
    pub t: Vec<f64>,
    #[serde(default)]
    pub r: Vec<f64>,
    /// Explicit `(t, r)` pairs, in addition to the `t x r` product.
    #[serde(default)]
    pub pairs: Vec<(f64, f64)>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub confidence: Vec<f64>,
}

fn ideal() -> Mode {
    Mode::Ideal
}

fn thousand() -> usize {
    1000
}

impl FileConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn population(&self) -> Result<PopulationSpec> {
        let p = self
            .population
            .as_ref()
            .ok_or_else(|| Error::InvalidPopulation("config has no [population] section".into()))?;
        let group: Vec<UserId> = match (&p.group, p.k) {
            (Some(g), _) => g.clone(),
            (None, Some(k)) => (0..p.total_users).filter(|&u| u != p.bob).take(k).collect(),
            (None, None) => {
                return Err(Error::InvalidPopulation(
                    "[population] needs `group` or `k`".into(),
                ))
            }
        };
        let mut profiles: Vec<UserProfile> = (0..p.total_users)
            .map(|u| {
                if group.contains(&u) {
                    UserProfile::new(p.t, p.r)
                } else {
                    UserProfile::background(p.r)
                }
            })
            .collect();
        for o in &p.users {
            let slot = profiles.get_mut(o.id).ok_or_else(|| {
                Error::InvalidPopulation(format!("override for unknown user {}", o.id))
            })?;
            let t = if group.contains(&o.id) {
                o.t.unwrap_or(p.t)
            } else {
                o.t.unwrap_or(o.r)
            };
            *slot = UserProfile::new(t, o.r);
        }
        PopulationSpec::new(p.total_users, p.bob, group, profiles)
    }

    pub fn trace_config(&self) -> TraceConfig {
        let s = &self.trace;
        TraceConfig {
            horizon: s.horizon,
            epoch_length: self.epoch_length,
            send_rate: s.send_rate,
            send_times: s.send_times.clone(),
            receipt_min: s.receipt_min,
            receipt_max: s.receipt_max,
            jitter_max: s.jitter_max,
        }
    }

    fn flurry_params(&self, k: usize) -> Result<Option<FlurryParams>> {
        let a = &self.attack;
        if a.gap_max.is_none() && a.min_size.is_none() {
            return Ok(None);
        }
        let d = FlurryParams::for_group_size(k);
        FlurryParams::new(
            a.gap_max.unwrap_or(d.gap_max),
            a.min_size.unwrap_or(d.min_size),
        )
        .map(Some)
    }

    /// `k_fallback` is used for `k_hat` and the flurry size when the config
    /// does not pin them.
    pub fn attack_config(&self, k_fallback: usize) -> Result<AttackConfig> {
        let k_hat = self.attack.k_hat.unwrap_or(k_fallback);
        let mut cfg = AttackConfig::new(
            self.attack.n.unwrap_or(usize::MAX),
            k_hat,
            self.epoch_length,
        );
        if let Some(f) = self.flurry_params(k_hat)? {
            cfg.flurry = f;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn experiment_plan(&self) -> Result<ExperimentPlan> {
        let e = self
            .experiment
            .as_ref()
            .ok_or_else(|| Error::PlanInvalid("config has no [experiment] section".into()))?;
        let mut tr = Vec::new();
        for &t in &e.t {
            for &r in &e.r {
                tr.push((t, r));
            }
        }
        if e.t.is_empty() != e.r.is_empty() {
            return Err(Error::PlanInvalid(
                "`t` and `r` must be given together".into(),
            ));
        }
        tr.extend(e.pairs.iter().copied());
        let flurry = match e.k.as_slice() {
            [k] => self.flurry_params(*k)?,
            _ => self.flurry_params(2)?,
        };
        Ok(ExperimentPlan {
            mode: e.mode,
            m: e.m.clone(),
            k: e.k.clone(),
            tr,
            n: e.n.clone(),
            confidence: e.confidence.clone(),
            trials: e.trials,
            base_seed: e.base_seed,
            trace: self.trace_config(),
            flurry,
        })
    }
}
