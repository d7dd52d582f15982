use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use flurry_core::config::FileConfig;
use flurry_core::harness::oracle::brute_force_oracle;
use flurry_core::harness::{run_experiment, run_ideal_trial, trial_seed, Mode, TrialCsv};
use flurry_core::theory::{self, uniform_group, BoundInputs};
use flurry_core::{generate_trace, observe, run_attack, ObservedLog, PopulationSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Exit status when a cell's Wilson lower limit falls below the bound.
const RED_FLAG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "flurry",
    version,
    about = "Flurry-anchored disclosure attack simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trace and its observed (sender-free) view.
    Simulate(SimulateArgs),
    /// Run the attack on an observed log CSV (`timestamp,recipient`).
    Attack(AttackArgs),
    /// Print the success lower bound over a grid as CSV.
    Bound(BoundArgs),
    /// Monte Carlo sweep over the grid in `[experiment]`.
    Experiment(ExperimentArgs),
    /// Exact success probability for a tiny population.
    Oracle(OracleArgs),
    /// Turn an experiment summary into gnuplot-ready columns.
    Plot(PlotArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for trace.csv, observed.csv and sends.csv.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    config: PathBuf,
    /// Observed log to attack.
    #[arg(long)]
    log: PathBuf,
    /// Length of the attack window; defaults to the last timestamp in the log.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for attack.json; prints to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    /// Take the grid from `[experiment]` instead of the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    t: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    r: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Add rows at n_min(confidence).
    #[arg(long, value_delimiter = ',')]
    confidence: Vec<f64>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ideal,
    Trace,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Overrides `base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Directory for trials.csv and summary.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    n: usize,
    /// Allow members with t == r.
    #[arg(long)]
    force: bool,
    /// Also estimate by Monte Carlo with this many trials.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PlotArgs {
    /// summary.json written by `experiment`.
    #[arg(long)]
    summary: PathBuf,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let cfg = FileConfig::from_path(&args.config)?;
    let spec = cfg.population()?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let trace = generate_trace(
        &spec,
        &cfg.trace_config(),
        &mut ChaCha8Rng::seed_from_u64(seed),
    )?;
    trace.write_csv(create(&args.out, "trace.csv")?)?;
    observe(&trace).write_csv(create(&args.out, "observed.csv")?)?;
    let mut sends = create(&args.out, "sends.csv")?;
    writeln!(sends, "send_time")?;
    for s in &trace.sends {
        writeln!(sends, "{s}")?;
    }
    sends.flush()?;
    eprintln!(
        "{} events, {} group sends, horizon {} s -> {}",
        trace.events.len(),
        trace.sends.len(),
        trace.horizon,
        args.out.display()
    );
    Ok(())
}

fn attack(args: AttackArgs) -> Result<()> {
    let cfg = FileConfig::from_path(&args.config)?;
    let pop = cfg
        .population
        .as_ref()
        .context("attack needs a [population] section for bob and total_users")?;
    let log = ObservedLog::read_csv(
        File::open(&args.log).with_context(|| format!("opening {}", args.log.display()))?,
        args.horizon,
    )?;
    // group is optional here; the attacker does not need it
    let spec: Option<PopulationSpec> = cfg.population().ok();
    let k_fallback = spec.as_ref().map_or(2, |s| s.group_size());
    let attack_cfg = cfg.attack_config(k_fallback)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let mut result = run_attack(
        &log,
        pop.bob,
        pop.total_users,
        &attack_cfg,
        &mut ChaCha8Rng::seed_from_u64(seed),
    )?;
    if let Some(spec) = &spec {
        result.judge(spec.group());
    }
    match args.out {
        Some(dir) => {
            let mut w = create(&dir, "attack.json")?;
            result.write_json(&mut w)?;
            w.flush()?;
        }
        None => {
            result.write_json(io::stdout().lock())?;
            println!();
        }
    }
    eprintln!(
        "{} flurries, {} pairs, top {}: {:?}{}",
        result.flurries_detected,
        result.pairs_processed(),
        attack_cfg.k_hat,
        result.top_k,
        result
            .success
            .map_or(String::new(), |s| format!(", success: {s}"))
    );
    Ok(())
}

fn bound(args: BoundArgs) -> Result<()> {
    let (ms, ks, tr, ns, confs) = match &args.config {
        Some(path) => {
            let plan = FileConfig::from_path(path)?.experiment_plan()?;
            (plan.m, plan.k, plan.tr, plan.n, plan.confidence)
        }
        None => {
            let mut tr = Vec::new();
            for &t in &args.t {
                for &r in &args.r {
                    tr.push((t, r));
                }
            }
            (args.m, args.k, tr, args.n, args.confidence)
        }
    };
    if ms.is_empty() || ks.is_empty() || tr.is_empty() || (ns.is_empty() && confs.is_empty()) {
        bail!("bound needs m, k, r and at least one n or confidence");
    }
    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    };
    writeln!(out, "m,k,t,r,n,C,bound")?;
    for &m in &ms {
        for &k in &ks {
            for &(t, r) in &tr {
                let group = uniform_group(k, t, r);
                let c = theory::compute_c(&group)?;
                let mut rows: Vec<u64> = ns.iter().map(|&n| n as u64).collect();
                for &conf in &confs {
                    rows.push(theory::n_min(m, &group, conf)?);
                }
                for n in rows {
                    let b = theory::bound(&BoundInputs {
                        m,
                        group_probs: group.clone(),
                        n,
                    })?;
                    writeln!(out, "{m},{k},{t},{r},{n},{c},{b}")?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<ExitCode> {
    let cfg = FileConfig::from_path(&args.config)?;
    let mut plan = cfg.experiment_plan()?;
    if let Some(mode) = args.mode {
        plan.mode = match mode {
            ModeArg::Ideal => Mode::Ideal,
            ModeArg::Trace => Mode::Trace,
        };
    }
    if let Some(seed) = args.seed {
        plan.base_seed = seed;
    }
    if let Some(trials) = args.trials {
        plan.trials = trials;
    }
    let mut csv = TrialCsv::new(create(&args.out, "trials.csv")?)?;
    let report = run_experiment(&plan, |cell, records| {
        csv.append(records)?;
        let c = &cell.cell;
        eprintln!(
            "m={} k={} t={} r={} n={}: rate {:.4} [{:.4}, {:.4}] bound {:.4} {}",
            c.m,
            c.k,
            c.t,
            c.r,
            c.n,
            cell.rate,
            cell.wilson_low,
            cell.wilson_high,
            cell.bound,
            if cell.pass { "ok" } else { "RED FLAG" }
        );
        Ok(())
    })?;
    csv.into_inner()?.flush()?;
    let mut summary = create(&args.out, "summary.json")?;
    report.write_json(&mut summary)?;
    summary.flush()?;
    let flags = report.red_flags();
    if flags > 0 {
        eprintln!("{flags} cells below the bound");
        return Ok(ExitCode::from(RED_FLAG));
    }
    Ok(ExitCode::SUCCESS)
}

fn oracle(args: OracleArgs) -> Result<()> {
    let spec = if args.force {
        PopulationSpec::uniform_relaxed(args.m, args.k, args.t, args.r)?
    } else {
        PopulationSpec::uniform(args.m, args.k, args.t, args.r)?
    };
    let exact = brute_force_oracle(&spec, args.n)?;
    println!("exact {exact}");
    if let Some(trials) = args.trials {
        let hits = (0..trials)
            .filter(|&i| run_ideal_trial(&spec, args.n, trial_seed(args.seed, 0, i)).success)
            .count();
        let mc = hits as f64 / trials as f64;
        println!("monte_carlo {mc}");
        println!("abs_diff {}", (mc - exact).abs());
    }
    Ok(())
}

fn plot(args: PlotArgs) -> Result<()> {
    let text = fs::read_to_string(&args.summary)
        .with_context(|| format!("reading {}", args.summary.display()))?;
    let summary: serde_json::Value = serde_json::from_str(&text)?;
    let cells = summary["cells"]
        .as_array()
        .context("summary has no cells array")?;
    let mut out = io::stdout().lock();
    writeln!(out, "# m k t r n rate wilson_low wilson_high bound")?;
    for c in cells {
        let f = |key: &str| c[key].as_f64().unwrap_or(f64::NAN);
        writeln!(
            out,
            "{} {} {} {} {} {} {} {} {}",
            f("m"),
            f("k"),
            f("t"),
            f("r"),
            f("n"),
            f("rate"),
            f("wilson_low"),
            f("wilson_high"),
            f("bound").max(0.0)
        )?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Simulate(a) => simulate(a).map(|_| ExitCode::SUCCESS),
        Command::Attack(a) => attack(a).map(|_| ExitCode::SUCCESS),
        Command::Bound(a) => bound(a).map(|_| ExitCode::SUCCESS),
        Command::Experiment(a) => experiment(a),
        Command::Oracle(a) => oracle(a).map(|_| ExitCode::SUCCESS),
        Command::Plot(a) => plot(a).map(|_| ExitCode::SUCCESS),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
