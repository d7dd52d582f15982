//! Monte Carlo experiments over parameter grids.
//!
//! Ideal mode feeds independent epoch draws straight into the counting table,
//! so target epochs are labelled by construction and only the statistics of
//! the attack are measured. Trace mode runs the whole pipeline: simulate,
//! observe, detect flurries, attack.

pub mod oracle;
pub mod seed;
pub mod stats;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attack::{run_attack, AttackConfig, CountTable};
use crate::epoch::{Flurry, FlurryParams};
use crate::observer::observe;
use crate::theory::{self, uniform_group, BoundInputs};
use crate::traffic::{draw_ideal_receivers, generate_trace, PopulationSpec, TraceConfig};
use crate::{Error, Result};

pub use oracle::brute_force_oracle;
pub use seed::trial_seed;
pub use stats::{standard_error, wilson_interval, MeanVar, Z95};

/// Runs `f` for every trial index and returns results in index order.
pub(crate) fn map_trials<T, F>(trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..trials).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials).map(f).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub success: bool,
    pub pairs_processed: usize,
    pub min_member: i64,
    pub max_nonmember: Option<i64>,
}

impl TrialOutcome {
    fn from_table(table: &CountTable, spec: &PopulationSpec) -> Self {
        let (min_member, max_nonmember) = table.separation(spec.membership());
        TrialOutcome {
            success: max_nonmember.is_none_or(|o| min_member > o),
            pairs_processed: table.pairs_processed(),
            min_member,
            max_nonmember,
        }
    }
}

/// One ideal-mode attack with `n` pairs.
pub fn run_ideal_trial(spec: &PopulationSpec, n: usize, seed: u64) -> TrialOutcome {
    let table = ideal_table(spec, n, seed);
    TrialOutcome::from_table(&table, spec)
}

/// The final counting table of one ideal-mode attack.
pub fn ideal_table(spec: &PopulationSpec, n: usize, seed: u64) -> CountTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = CountTable::new(spec.total_users(), spec.bob());
    let (mut target, mut random) = (Vec::new(), Vec::new());
    for _ in 0..n {
        draw_ideal_receivers(spec, true, &mut rng, &mut target);
        draw_ideal_receivers(spec, false, &mut rng, &mut random);
        table.apply(&target, &random);
    }
    table
}

/// Ideal-mode success rate at every `n` in `1..=n_max`, sharing each trial's
/// draws across all `n` (trial `i` at `n` is the prefix of trial `i` at `n+1`).
pub fn ideal_success_curve(
    spec: &PopulationSpec,
    n_max: usize,
    trials: usize,
    base_seed: u64,
) -> Vec<f64> {
    let per_trial = map_trials(trials, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(base_seed, 0, i as u64));
        let mut table = CountTable::new(spec.total_users(), spec.bob());
        let (mut target, mut random) = (Vec::new(), Vec::new());
        (0..n_max)
            .map(|_| {
                draw_ideal_receivers(spec, true, &mut rng, &mut target);
                draw_ideal_receivers(spec, false, &mut rng, &mut random);
                table.apply(&target, &random);
                TrialOutcome::from_table(&table, spec).success
            })
            .collect::<Vec<bool>>()
    });
    let mut hits = vec![0usize; n_max];
    for row in &per_trial {
        for (h, &ok) in hits.iter_mut().zip(row) {
            *h += ok as usize;
        }
    }
    hits.into_iter()
        .map(|h| h as f64 / trials.max(1) as f64)
        .collect()
}

/// Smallest `n` (1-based) whose rate reaches `level`.
pub fn first_n_reaching(curve: &[f64], level: f64) -> Option<usize> {
    curve.iter().position(|&p| p >= level).map(|i| i + 1)
}

/// Trace-mode trial: simulate, observe, attack. A trial without usable
/// flurries counts as a failure with zero pairs.
pub fn run_trace_trial(
    spec: &PopulationSpec,
    trace: &TraceConfig,
    attack: &AttackConfig,
    seed: u64,
) -> Result<TraceTrialOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = generate_trace(spec, trace, &mut rng)?;
    let log = observe(&truth);
    let flurries = crate::epoch::detect_flurries(&log, spec.bob(), &attack.flurry);
    let recall = flurry_recall(
        &truth.sends,
        &flurries,
        trace.jitter_max + trace.receipt_max,
    );
    let precision = flurry_precision(
        &truth.sends,
        &flurries,
        trace.jitter_max + trace.receipt_max,
    );
    let outcome = match run_attack(&log, spec.bob(), spec.total_users(), attack, &mut rng) {
        Ok(res) => TrialOutcome::from_table(&res.table, spec),
        Err(Error::NoFlurries) => {
            TrialOutcome::from_table(&CountTable::new(spec.total_users(), spec.bob()), spec)
        }
        Err(e) => return Err(e),
    };
    Ok(TraceTrialOutcome {
        outcome,
        recall,
        precision,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceTrialOutcome {
    pub outcome: TrialOutcome,
    /// Fraction of true sends followed by a detected flurry start.
    pub recall: Option<f64>,
    /// Fraction of detected flurries that follow a true send.
    pub precision: Option<f64>,
}

fn matched(send: f64, start: f64, max_delay: f64) -> bool {
    start >= send && start <= send + max_delay
}

/// Fraction of sends with a flurry starting within `max_delay` after them.
pub fn flurry_recall(sends: &[f64], flurries: &[Flurry], max_delay: f64) -> Option<f64> {
    if sends.is_empty() {
        return None;
    }
    let hit = sends
        .iter()
        .filter(|&&s| flurries.iter().any(|f| matched(s, f.start, max_delay)))
        .count();
    Some(hit as f64 / sends.len() as f64)
}

pub fn flurry_precision(sends: &[f64], flurries: &[Flurry], max_delay: f64) -> Option<f64> {
    if flurries.is_empty() {
        return None;
    }
    let hit = flurries
        .iter()
        .filter(|f| sends.iter().any(|&s| matched(s, f.start, max_delay)))
        .count();
    Some(hit as f64 / flurries.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Ideal,
    Trace,
}

/// One grid cell. Bob is user 0 and the group is users `1..=k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub m: usize,
    pub k: usize,
    pub t: f64,
    pub r: f64,
    pub n: usize,
}

impl Cell {
    pub fn population(&self) -> Result<PopulationSpec> {
        PopulationSpec::uniform(self.m, self.k, self.t, self.r)
    }

    pub fn bound(&self) -> Result<theory::BoundResult> {
        theory::evaluate(
            &BoundInputs {
                m: self.m,
                group_probs: uniform_group(self.k, self.t, self.r),
                n: self.n as u64,
            },
            None,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub mode: Mode,
    pub m: Vec<usize>,
    pub k: Vec<usize>,
    /// `(t, r)` combinations for group members.
    pub tr: Vec<(f64, f64)>,
    /// Explicit pair counts.
    pub n: Vec<usize>,
    /// Additional pair counts given as `n_min(confidence)` per cell.
    pub confidence: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    /// Used in trace mode only.
    pub trace: TraceConfig,
    /// Trace mode flurry thresholds; `None` picks defaults from `k`.
    pub flurry: Option<FlurryParams>,
}

impl ExperimentPlan {
    pub fn ideal(m: Vec<usize>, k: Vec<usize>, tr: Vec<(f64, f64)>, n: Vec<usize>) -> Self {
        ExperimentPlan {
            mode: Mode::Ideal,
            m,
            k,
            tr,
            n,
            confidence: Vec::new(),
            trials: 1000,
            base_seed: 0,
            trace: TraceConfig::default(),
            flurry: None,
        }
    }

    /// Expands the grid in `m, k, (t, r), n` order after validating it.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let invalid = |msg: String| Err(Error::PlanInvalid(msg));
        if self.trials == 0 {
            return invalid("trials must be at least 1".into());
        }
        if self.m.is_empty() || self.k.is_empty() || self.tr.is_empty() {
            return invalid("grid needs at least one m, k and (t, r)".into());
        }
        if self.n.is_empty() && self.confidence.is_empty() {
            return invalid("grid needs n values or confidence targets".into());
        }
        for &(t, r) in &self.tr {
            if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&r) {
                return invalid(format!("(t, r) = ({t}, {r}) are not probabilities"));
            }
            if !(t > r) {
                return invalid(format!("group members need t > r, got t = {t}, r = {r}"));
            }
            if self.mode == Mode::Trace && r >= 1.0 {
                return invalid("trace mode needs r < 1".into());
            }
        }
        if let Some(&n) = self.n.iter().find(|&&n| n == 0) {
            return invalid(format!("n = {n} runs no epochs"));
        }
        if self.mode == Mode::Trace {
            self.trace.validate()?;
        }
        let mut cells = Vec::new();
        for &m in &self.m {
            for &k in &self.k {
                if k == 0 || m < k + 1 {
                    return invalid(format!("m = {m} cannot hold Bob and a group of {k}"));
                }
                for &(t, r) in &self.tr {
                    let mut ns = self.n.clone();
                    for &conf in &self.confidence {
                        let n = theory::n_min(m, &uniform_group(k, t, r), conf)
                            .map_err(|e| Error::PlanInvalid(e.to_string()))?;
                        ns.push(n.max(1) as usize);
                    }
                    for n in ns {
                        cells.push(Cell { m, k, t, r, n });
                    }
                }
            }
        }
        Ok(cells)
    }
}

/// One row of `trials.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub m: usize,
    pub k: usize,
    pub t: f64,
    pub r: f64,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub min_member: i64,
    pub max_nonmember: Option<i64>,
    #[serde(skip)]
    pub pairs_processed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    #[serde(flatten)]
    pub cell: Cell,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub standard_error: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub c: f64,
    pub bound: f64,
    /// Wilson lower limit at or above the bound, or the bound is vacuous.
    pub pass: bool,
    /// `rate + 3 SE >= bound`, or the bound is vacuous.
    pub dominates_3se: bool,
    pub mean_pairs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_precision: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub mode: Mode,
    pub base_seed: u64,
    pub trials: usize,
    pub cells: Vec<CellSummary>,
    pub all_pass: bool,
}

impl ExperimentReport {
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn red_flags(&self) -> usize {
        self.cells.iter().filter(|c| !c.pass).count()
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let mut mv = MeanVar::default();
    xs.for_each(|x| mv.push(x));
    (mv.count() > 0).then(|| mv.mean())
}

/// Runs every cell of `plan`, handing each finished cell to `on_cell` in grid
/// order before starting the next one.
pub fn run_experiment<F>(plan: &ExperimentPlan, mut on_cell: F) -> Result<ExperimentReport>
where
    F: FnMut(&CellSummary, &[TrialRecord]) -> Result<()>,
{
    let cells = plan.cells()?;
    let mut summaries = Vec::with_capacity(cells.len());
    for (ci, cell) in cells.iter().enumerate() {
        let spec = cell.population()?;
        let bound = cell.bound()?;
        let attack = AttackConfig {
            flurry: plan
                .flurry
                .unwrap_or_else(|| FlurryParams::for_group_size(cell.k)),
            ..AttackConfig::new(cell.n, cell.k, plan.trace.epoch_length)
        };
        let results = map_trials(plan.trials, |i| {
            let seed = trial_seed(plan.base_seed, ci as u64, i as u64);
            let res = match plan.mode {
                Mode::Ideal => Ok(TraceTrialOutcome {
                    outcome: run_ideal_trial(&spec, cell.n, seed),
                    recall: None,
                    precision: None,
                }),
                Mode::Trace => run_trace_trial(&spec, &plan.trace, &attack, seed),
            };
            res.map(|r| (seed, r))
        });
        let mut records = Vec::with_capacity(plan.trials);
        let mut outcomes = Vec::with_capacity(plan.trials);
        for (i, res) in results.into_iter().enumerate() {
            let (seed, r) = res?;
            let o = r.outcome;
            records.push(TrialRecord {
                m: cell.m,
                k: cell.k,
                t: cell.t,
                r: cell.r,
                n: cell.n,
                trial: i,
                seed,
                success: o.success,
                min_member: o.min_member,
                max_nonmember: o.max_nonmember,
                pairs_processed: o.pairs_processed,
            });
            outcomes.push(r);
        }

        let successes = records.iter().filter(|r| r.success).count();
        let rate = successes as f64 / plan.trials as f64;
        let se = standard_error(rate, plan.trials);
        let (wilson_low, wilson_high) = wilson_interval(successes, plan.trials, Z95);
        let vacuous = bound.bound <= 0.0;
        let summary = CellSummary {
            cell: *cell,
            trials: plan.trials,
            successes,
            rate,
            standard_error: se,
            wilson_low,
            wilson_high,
            c: bound.c,
            bound: bound.bound,
            pass: vacuous || wilson_low >= bound.bound,
            dominates_3se: vacuous || rate + 3.0 * se >= bound.bound,
            mean_pairs: mean(records.iter().map(|r| r.pairs_processed as f64)).unwrap_or(0.0),
            mean_recall: mean(outcomes.iter().filter_map(|o| o.recall)),
            mean_precision: mean(outcomes.iter().filter_map(|o| o.precision)),
        };
        on_cell(&summary, &records)?;
        summaries.push(summary);
    }
    let all_pass = summaries.iter().all(|s| s.pass);
    Ok(ExperimentReport {
        mode: plan.mode,
        base_seed: plan.base_seed,
        trials: plan.trials,
        cells: summaries,
        all_pass,
    })
}

/// CSV writer for [`TrialRecord`]s that emits the header exactly once.
pub struct TrialCsv<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TrialCsv<W> {
    pub fn new(w: W) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        inner.write_record([
            "m",
            "k",
            "t",
            "r",
            "n",
            "trial",
            "seed",
            "success",
            "min_member",
            "max_nonmember",
        ])?;
        Ok(TrialCsv { inner })
    }

    pub fn append(&mut self, records: &[TrialRecord]) -> Result<()> {
        for r in records {
            self.inner.serialize(r)?;
        }
        self.inner.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner
            .into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}
