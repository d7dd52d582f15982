//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.
//!
//! Run with `cargo test -p flurry-core --test acceptance`.

use std::time::Instant;

use flurry_core::attack::AttackConfig;
use flurry_core::epoch::FlurryParams;
use flurry_core::harness::oracle::{brute_force_oracle, within_limits};
use flurry_core::harness::{
    first_n_reaching, ideal_success_curve, ideal_table, run_experiment, run_ideal_trial,
    run_trace_trial, trial_seed, ExperimentPlan, MeanVar, Mode, TrialCsv,
};
use flurry_core::theory::{bound, log_c, n_min, uniform_group, BoundInputs};
use flurry_core::traffic::{PopulationSpec, TraceConfig};

/// `(m, k, t, r, confidence, n_min, bound(n_min), bound(n_min - 1))` from
/// `scripts/bound_oracle.py` (50-digit arithmetic, n_min by direct search).
#[rustfmt::skip]
#[allow(clippy::excessive_precision, clippy::type_complexity)]
const BOUND_ORACLE: &[(usize, usize, f64, f64, f64, u64, f64, f64)] = &[
    (10, 2, 1.0, 0.95, 0.5, 5903, 0.50024771156174332601, 0.49993526875326242902),
    (10, 2, 1.0, 0.95, 0.95, 9587, 0.9500205184333882064, 0.94998927149375759238),
    (10, 2, 1.0, 0.95, 0.999, 15846, 0.99900026241302756654, 0.99899963738173377553),
    (10, 2, 1.0, 0.7, 0.5, 164, 0.50055995915447746903, 0.48919518396194533427),
    (10, 2, 1.0, 0.7, 0.95, 267, 0.9507953784742927655, 0.94967572563042666588),
    (10, 2, 1.0, 0.7, 0.999, 441, 0.99901883285087584897, 0.9989965063588764969),
    (10, 2, 1.0, 0.09999999999999998, 0.5, 19, 0.57333995331799778387, 0.47757180292163541343),
    (10, 2, 1.0, 0.09999999999999998, 0.95, 30, 0.95400707627750128541, 0.94368350070374348826),
    (10, 2, 1.0, 0.09999999999999998, 0.999, 49, 0.99901883285087584656, 0.99879859998906461259),
    (10, 3, 1.0, 0.95, 0.5, 6551, 0.50001521865734106307, 0.49970263049537668265),
    (10, 3, 1.0, 0.95, 0.95, 10236, 0.9500285091084097945, 0.94999726716451207288),
    (10, 3, 1.0, 0.95, 0.999, 16495, 0.99900042225018301435, 0.99899979731881867019),
    (10, 3, 1.0, 0.7, 0.5, 182, 0.50032761151274084497, 0.48895754924168296489),
    (10, 3, 1.0, 0.7, 0.95, 285, 0.95077248768292832759, 0.94965231395832267898),
    (10, 3, 1.0, 0.7, 0.999, 459, 0.99901837639593710897, 0.99899603951729003134),
    (10, 3, 1.0, 0.09999999999999998, 0.5, 21, 0.57314146411496553328, 0.47732876081519476284),
    (10, 3, 1.0, 0.09999999999999998, 0.95, 32, 0.95398567962026610268, 0.94365730135100397198),
    (10, 3, 1.0, 0.09999999999999998, 0.999, 51, 0.99901837639593710647, 0.99879804107821146857),
    (100, 2, 1.0, 0.95, 0.5, 9587, 0.50020518433388206398, 0.4998927149375759238),
    (100, 2, 1.0, 0.95, 0.95, 13271, 0.95001626534870976846, 0.94998501575007037673),
    (100, 2, 1.0, 0.95, 0.999, 19530, 0.99900017733874347369, 0.99899955225426163559),
    (100, 2, 1.0, 0.7, 0.5, 267, 0.50795378474292765503, 0.49675725630426665878),
    (100, 2, 1.0, 0.7, 0.95, 369, 0.95042073779830174173, 0.94929255999305407524),
    (100, 2, 1.0, 0.7, 0.999, 543, 0.99901136231025161084, 0.99898886582584512735),
    (100, 2, 1.0, 0.09999999999999998, 0.5, 30, 0.54007076277501285406, 0.43683500703743488257),
    (100, 2, 1.0, 0.09999999999999998, 0.95, 41, 0.95042073779830164017, 0.93929217238422669209),
    (100, 2, 1.0, 0.09999999999999998, 0.999, 61, 0.99913621151957233144, 0.99894232548372820749),
    (100, 3, 1.0, 0.95, 0.5, 10236, 0.50028509108409794497, 0.49997267164512072879),
    (100, 3, 1.0, 0.95, 0.95, 13920, 0.95002425670371074889, 0.94999301210122936952),
    (100, 3, 1.0, 0.95, 0.999, 20179, 0.99900033718950052231, 0.99899971220495663472),
    (100, 3, 1.0, 0.7, 0.5, 285, 0.50772487682928327592, 0.49652313958322678978),
    (100, 3, 1.0, 0.7, 0.95, 387, 0.95039767271799279355, 0.94926897006605469126),
    (100, 3, 1.0, 0.7, 0.999, 561, 0.99901090237989569444, 0.99898839542975824881),
    (100, 3, 1.0, 0.09999999999999998, 0.5, 32, 0.53985679620266102681, 0.43657301351003971983),
    (100, 3, 1.0, 0.09999999999999998, 0.95, 43, 0.95039767271799268699, 0.93926393011402824748),
    (100, 3, 1.0, 0.09999999999999998, 0.999, 63, 0.99913580967110209885, 0.99894183343631614039),
    (100, 10, 1.0, 0.95, 0.5, 12162, 0.50017374003637091314, 0.49986125098123608447),
    (100, 10, 1.0, 0.95, 0.95, 15846, 0.95001312065137832686, 0.9499818690866887763),
    (100, 10, 1.0, 0.95, 0.999, 22105, 0.99900011443548751046, 0.99899948931167884903),
    (100, 10, 1.0, 0.7, 0.5, 338, 0.50204457849672743384, 0.49071358586804939428),
    (100, 10, 1.0, 0.7, 0.95, 441, 0.95094164254379244833, 0.94982531794382484488),
    (100, 10, 1.0, 0.7, 0.999, 615, 0.99902174943666881809, 0.99899948931167882857),
    (100, 10, 1.0, 0.09999999999999998, 0.5, 38, 0.54490301141327922431, 0.44275190261637677929),
    (100, 10, 1.0, 0.09999999999999998, 0.95, 49, 0.95094164254379232823, 0.93992999945323062937),
    (100, 10, 1.0, 0.09999999999999998, 0.999, 69, 0.99914528691719976022, 0.99895343794587960416),
    (1000, 2, 1.0, 0.95, 0.5, 13271, 0.50016265348709768462, 0.49985015750070376735),
    (1000, 2, 1.0, 0.95, 0.95, 16955, 0.95001201190210822298, 0.9499807596442337809),
    (1000, 2, 1.0, 0.95, 0.999, 23214, 0.99900009225721984729, 0.99899946711954543597),
    (1000, 2, 1.0, 0.7, 0.5, 369, 0.50420737798301741726, 0.49292559993054075237),
    (1000, 2, 1.0, 0.7, 0.95, 471, 0.950043244633423395, 0.94890647695831207692),
    (1000, 2, 1.0, 0.7, 0.999, 645, 0.99900383488943395388, 0.99898116711830959444),
    (1000, 2, 1.0, 0.09999999999999998, 0.5, 41, 0.5042073779830164017, 0.39292172384226692091),
    (1000, 2, 1.0, 0.09999999999999998, 0.95, 53, 0.95635198793991530089, 0.94655475143750632446),
    (1000, 2, 1.0, 0.09999999999999998, 0.999, 72, 0.99906885685684338333, 0.99885985238766976183),
    (1000, 3, 1.0, 0.95, 0.5, 13920, 0.50024256703710748893, 0.49993012101229369521),
    (1000, 3, 1.0, 0.95, 0.95, 17604, 0.95002000393714645969, 0.9499887566758551861),
    (1000, 3, 1.0, 0.95, 0.999, 23863, 0.99900025212157965416, 0.99899962708385169774),
    (1000, 3, 1.0, 0.7, 0.5, 387, 0.50397672717992793552, 0.49268970066054691258),
    (1000, 3, 1.0, 0.7, 0.95, 489, 0.95002000393714564567, 0.94888270741919652188),
    (1000, 3, 1.0, 0.7, 0.999, 663, 0.99900337145719926865, 0.99898069314065857604),
    (1000, 3, 1.0, 0.09999999999999998, 0.5, 43, 0.50397672717992686992, 0.39263930114028247481),
    (1000, 3, 1.0, 0.09999999999999998, 0.95, 55, 0.95633168217377871801, 0.94652988783737425848),
    (1000, 3, 1.0, 0.09999999999999998, 0.999, 74, 0.99906842367388699591, 0.99885932197243011033),
    (1000, 10, 1.0, 0.95, 0.5, 15846, 0.50013120651378326859, 0.49981869086688776304),
    (1000, 10, 1.0, 0.95, 0.95, 19530, 0.95000886693717368468, 0.94997761271308177956),
    (1000, 10, 1.0, 0.95, 0.999, 25789, 0.99900002934861102993, 0.99899940417160644871),
    (1000, 10, 1.0, 0.7, 0.5, 441, 0.50941642543792448325, 0.49825317943824844876),
    (1000, 10, 1.0, 0.7, 0.95, 543, 0.95056811551258054211, 0.94944329129225636767),
    (1000, 10, 1.0, 0.7, 0.999, 717, 0.99901430110273247193, 0.99899187149064929266),
    (1000, 10, 1.0, 0.09999999999999998, 0.5, 49, 0.50941642543792328228, 0.39929999453230629368),
    (1000, 10, 1.0, 0.09999999999999998, 0.95, 61, 0.95681057597861657176, 0.94711627418641037455),
    (1000, 10, 1.0, 0.09999999999999998, 0.999, 80, 0.99907863991654338793, 0.99887183135378278224),
    (1000000, 2, 1.0, 0.95, 0.5, 24323, 0.50003503923012613055, 0.49972246345989175304),
    (1000000, 2, 1.0, 0.95, 0.95, 28008, 0.95003049009585052281, 0.94999924939045694388),
    (1000000, 2, 1.0, 0.95, 0.999, 34267, 0.99900046187579620077, 0.99899983696920560584),
    (1000000, 2, 1.0, 0.7, 0.5, 676, 0.50408079639099630726, 0.49279613797006861205),
    (1000000, 2, 1.0, 0.7, 0.95, 778, 0.95003049009584922797, 0.948893432190799658),
    (1000000, 2, 1.0, 0.7, 0.999, 952, 0.99900358055695700343, 0.99898090699848844186),
    (1000000, 2, 1.0, 0.09999999999999998, 0.5, 76, 0.58577346195859628006, 0.49279613797006671156),
    (1000000, 2, 1.0, 0.09999999999999998, 0.95, 87, 0.95534737851333797827, 0.94532464729352517796),
    (1000000, 2, 1.0, 0.09999999999999998, 0.999, 106, 0.99904742552160135033, 0.99883361057309502581),
    (1000000, 3, 1.0, 0.95, 0.5, 24972, 0.50011497318298973841, 0.49980244738709125385),
    (1000000, 3, 1.0, 0.95, 0.95, 28656, 0.95000724346595418232, 0.94997598822687561471),
    (1000000, 3, 1.0, 0.95, 0.999, 34916, 0.99900062168106171868, 0.99899999687438063318),
    (1000000, 3, 1.0, 0.7, 0.5, 694, 0.50385008670008849284, 0.49256017847226212156),
    (1000000, 3, 1.0, 0.7, 0.95, 796, 0.9500072434659528569, 0.94886965658304578678),
    (1000000, 3, 1.0, 0.7, 0.999, 970, 0.99900311700640270743, 0.99898043289982544591),
    (1000000, 3, 1.0, 0.09999999999999998, 0.5, 78, 0.58558075702629703856, 0.49256017847226016948),
    (1000000, 3, 1.0, 0.09999999999999998, 0.95, 89, 0.95532660538653336302, 0.94529921142890975044),
    (1000000, 3, 1.0, 0.09999999999999998, 0.999, 108, 0.99904698236843874092, 0.99883306794973581504),
    (1000000, 10, 1.0, 0.95, 0.5, 26898, 0.50000358422803563061, 0.49969098879228011133),
    (1000000, 10, 1.0, 0.95, 0.95, 30583, 0.95002734629346069944, 0.94999610362257647502),
    (1000000, 10, 1.0, 0.95, 0.999, 36842, 0.99900039899044171922, 0.99899977404453549289),
    (1000000, 10, 1.0, 0.7, 0.5, 748, 0.50929117377597993066, 0.49812507767045719424),
    (1000000, 10, 1.0, 0.7, 0.95, 850, 0.95055549498061383842, 0.94943038357965358816),
    (1000000, 10, 1.0, 0.7, 0.999, 1024, 0.9990140494424008559, 0.99899161410377823286),
    (1000000, 10, 1.0, 0.09999999999999998, 0.5, 84, 0.59012553497848391432, 0.49812507767045511312),
    (1000000, 10, 1.0, 0.09999999999999998, 0.95, 95, 0.95581652148558263051, 0.94589909413725421296),
    (1000000, 10, 1.0, 0.09999999999999998, 0.999, 114, 0.99905743374972327216, 0.99884586524895311376),
];

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Criterion 1: empirical success + 3 SE dominates the bound in every cell
/// with a positive bound.
fn bound_dominance() -> Outcome {
    let plan = ExperimentPlan {
        confidence: vec![0.5, 0.95],
        trials: 1000,
        base_seed: 20_240_601,
        ..ExperimentPlan::ideal(
            vec![50, 100, 500],
            vec![2, 3, 5],
            vec![(1.0, 0.1), (1.0, 0.3), (0.7, 0.4)],
            vec![],
        )
    };
    let report = run_experiment(&plan, |_, _| Ok(())).expect("experiment runs");
    let positive: Vec<_> = report.cells.iter().filter(|c| c.bound > 0.0).collect();
    let failing: Vec<String> = positive
        .iter()
        .filter(|c| c.rate + 3.0 * c.standard_error < c.bound)
        .map(|c| {
            format!(
                "(m={} k={} t={} r={} n={}: rate {} bound {:.4})",
                c.cell.m, c.cell.k, c.cell.t, c.cell.r, c.cell.n, c.rate, c.bound
            )
        })
        .collect();
    let min_margin = positive
        .iter()
        .map(|c| c.rate - c.bound)
        .fold(f64::INFINITY, f64::min);
    outcome(
        failing.is_empty() && !positive.is_empty() && report.cells.len() == 54,
        format!(
            "{} cells, {} with positive bound, smallest rate - bound = {min_margin:.4} {}",
            report.cells.len(),
            positive.len(),
            failing.join(" ")
        ),
    )
}

/// Criterion 2: closed forms agree with the high-precision re-derivation.
fn closed_form_cross_check() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut mismatched = Vec::new();
    for &(m, k, t, r, conf, n_expected, hi, lo) in BOUND_ORACLE {
        let g = uniform_group(k, t, r);
        let n = n_min(m, &g, conf).unwrap();
        if n != n_expected {
            mismatched.push(format!(
                "n_min(m={m}, k={k}, r={r}, conf={conf}) = {n}, want {n_expected}"
            ));
        }
        for (n, want) in [(n_expected, hi), (n_expected - 1, lo)] {
            let got = bound(&BoundInputs {
                m,
                group_probs: g.clone(),
                n,
            })
            .unwrap();
            worst = worst.max((got - want).abs() / want.abs().max(1.0));
        }
    }
    let worked = n_min(1000, &uniform_group(3, 1.0, 0.1), 0.95).unwrap();
    outcome(
        mismatched.is_empty() && worst <= 1e-12 && worked == 55,
        format!(
            "{} grid points, max relative error {worst:.2e}, n_min(1000, 3, 1, 0.1, 0.95) = {worked} {}",
            BOUND_ORACLE.len(),
            mismatched.join("; ")
        ),
    )
}

/// Criterion 3: Monte Carlo at 10^5 trials within 0.01 of exact enumeration.
fn oracle_equivalence() -> Outcome {
    let mut cells = 0;
    let mut worst: f64 = 0.0;
    let mut where_worst = String::new();
    for (pi, &(t, r)) in [(1.0, 0.5), (0.9, 0.3), (0.6, 0.2)].iter().enumerate() {
        for m in 3..=6usize {
            for k in 1..m {
                for n in 1..=4usize {
                    if !within_limits(m, n) {
                        continue;
                    }
                    let spec = PopulationSpec::uniform(m, k, t, r).unwrap();
                    let exact = brute_force_oracle(&spec, n).unwrap();
                    let trials = 100_000u64;
                    let cell = (pi * 1000 + m * 100 + k * 10 + n) as u64;
                    let hits = (0..trials)
                        .filter(|&i| run_ideal_trial(&spec, n, trial_seed(7, cell, i)).success)
                        .count();
                    let mc = hits as f64 / trials as f64;
                    let err = (mc - exact).abs();
                    if err > worst {
                        worst = err;
                        where_worst =
                            format!("m={m} k={k} t={t} r={r} n={n}: exact {exact:.5} mc {mc:.5}");
                    }
                    cells += 1;
                }
            }
        }
    }
    outcome(
        worst <= 0.01,
        format!("{cells} cells, max |mc - exact| = {worst:.4} at {where_worst}"),
    )
}

/// Criterion 4: first moments of the counting table.
fn count_moments() -> Outcome {
    let (m, k, n) = (200, 3, 500);
    let spec = PopulationSpec::uniform(m, k, 1.0, 0.1).unwrap();
    let mut member = MeanVar::default();
    let mut other = MeanVar::default();
    for trial in 0..200 {
        let table = ideal_table(&spec, n, trial_seed(4, 0, trial));
        for u in 1..m {
            let c = table.count(u) as f64;
            if spec.is_member(u) {
                member.push(c);
            } else {
                other.push(c);
            }
        }
    }
    let expected = n as f64 * (1.0 - 0.1);
    let member_ok = (member.mean() - expected).abs() <= 3.0 * member.sem();
    let other_ok = other.mean().abs() <= 3.0 * other.sem();
    outcome(
        member_ok && other_ok,
        format!(
            "member mean {:.3} (want {expected}, SE {:.3}), non-member mean {:.4} (want 0, SE {:.4})",
            member.mean(),
            member.sem(),
            other.mean(),
            other.sem()
        ),
    )
}

/// Criterion 5: full pipeline against ideal mode.
fn trace_pipeline() -> Outcome {
    let (m, k, r, sends, trials) = (100, 3, 0.05, 80usize, 200u64);
    let spec = PopulationSpec::uniform(m, k, 1.0, r).unwrap();
    let send_times: Vec<f64> = (0..sends).map(|i| 120.0 + 300.0 * i as f64).collect();
    let trace = TraceConfig {
        horizon: 120.0 + 300.0 * sends as f64,
        epoch_length: 60.0,
        send_times: Some(send_times),
        ..TraceConfig::default()
    };
    let attack = AttackConfig {
        flurry: FlurryParams::for_group_size(k),
        ..AttackConfig::new(sends, k, 60.0)
    };
    let mut recall = MeanVar::default();
    let mut trace_hits = 0;
    let mut pairs = MeanVar::default();
    for i in 0..trials {
        let res = run_trace_trial(&spec, &trace, &attack, trial_seed(5, 0, i)).unwrap();
        recall.push(res.recall.unwrap());
        pairs.push(res.outcome.pairs_processed as f64);
        trace_hits += res.outcome.success as usize;
    }
    let ideal_hits = (0..trials)
        .filter(|&i| run_ideal_trial(&spec, sends, trial_seed(5, 1, i)).success)
        .count();
    let trace_rate = trace_hits as f64 / trials as f64;
    let ideal_rate = ideal_hits as f64 / trials as f64;
    outcome(
        recall.mean() >= 0.95 && trace_rate >= ideal_rate - 0.10,
        format!(
            "recall {:.4}, mean pairs {:.1}, trace success {trace_rate:.3}, ideal success {ideal_rate:.3}",
            recall.mean(),
            pairs.mean()
        ),
    )
}

/// Criterion 6: the n needed for 95% empirical success grows additively per
/// decade of m.
fn logarithmic_scaling() -> Outcome {
    let (k, t, r) = (3, 1.0, 0.1);
    let step_limit = (10f64.ln() / log_c(&uniform_group(k, t, r)).unwrap()).ceil() as usize + 2;
    let mut needed = Vec::new();
    for m in [100, 1000, 10_000] {
        let spec = PopulationSpec::uniform(m, k, t, r).unwrap();
        let curve = ideal_success_curve(&spec, 80, 1000, 6);
        needed.push(first_n_reaching(&curve, 0.95));
    }
    let steps: Option<Vec<i64>> = needed
        .windows(2)
        .map(|w| Some(w[1]? as i64 - w[0]? as i64))
        .collect();
    let pass = steps
        .as_ref()
        .is_some_and(|s| s.iter().all(|&d| d <= step_limit as i64));
    outcome(
        pass,
        format!("n at 95% for m = 1e2, 1e3, 1e4: {needed:?}, steps {steps:?}, limit {step_limit}"),
    )
}

/// Criterion 7: byte-identical trial CSV on replay, in both modes.
fn determinism() -> Outcome {
    let run = |mode| {
        let mut plan = ExperimentPlan::ideal(
            vec![30, 60],
            vec![2],
            vec![(1.0, 0.2), (0.8, 0.4)],
            vec![3, 9],
        );
        plan.mode = mode;
        plan.trials = 50;
        plan.base_seed = 99;
        plan.trace = TraceConfig {
            horizon: 6000.0,
            send_rate: 1.0 / 200.0,
            ..TraceConfig::default()
        };
        let mut csv = TrialCsv::new(Vec::new()).unwrap();
        run_experiment(&plan, |_, records| csv.append(records)).unwrap();
        csv.into_inner().unwrap()
    };
    let ideal = run(Mode::Ideal) == run(Mode::Ideal);
    let trace = run(Mode::Trace) == run(Mode::Trace);
    let distinct = run(Mode::Ideal) != run(Mode::Trace);
    outcome(
        ideal && trace && distinct,
        format!("ideal replay identical: {ideal}, trace replay identical: {trace}"),
    )
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 bound dominance", bound_dominance),
        ("2 closed-form cross-check", closed_form_cross_check),
        ("3 brute-force oracle equivalence", oracle_equivalence),
        ("4 count-table moments", count_moments),
        ("5 end-to-end trace pipeline", trace_pipeline),
        ("6 logarithmic scaling", logarithmic_scaling),
        ("7 determinism", determinism),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] criterion {name} ({:.1} s): {}",
            started.elapsed().as_secs_f64(),
            o.detail
        );
        failures += (!o.pass) as usize;
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
