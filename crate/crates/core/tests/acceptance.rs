//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints a PASS/FAIL line; exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use botimpact::energy::{sample_feasible_lambda, EnergyConfig, Label, LambdaParams, NodeEnergy};
use botimpact::ghic::{ghic, Removal};
use botimpact::graph::EdgeSemantics;
use botimpact::io::{self, EdgeListOptions};
use botimpact::metrics::{ks_two_sample, retweets_per_target, roc_auc};
use botimpact::mincut::{min_cut_labels, EnergyGraph};
use botimpact::opinion::{
    simulate, solve_equilibrium, HarmonicWeights, OpinionState, SimulationConfig, SolverConfig,
};
use botimpact::pipeline::{detect, DetectConfig};
use botimpact::synth::{
    generate_opinion_network, generate_planted, Intensity, OpinionNetworkConfig, PlantedBotConfig,
};
use botimpact::Labeling;
use common::{brute_force_min, dense_equilibrium, oracle_energy, random_retweet_graph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn c1_centroid() -> Check {
    let l = LambdaParams::centroid();
    let ok = (l.l00() - 0.61).abs() <= 0.005 && (l.l11() - 0.83).abs() <= 0.005 && (l.l10() - 0.44).abs() <= 0.005;
    ensure(ok, || format!("centroid {:?}", l.as_tuple()))?;
    Ok(format!(
        "lambda10={:.4} lambda00={:.4} lambda11={:.4}",
        l.l10(),
        l.l00(),
        l.l11()
    ))
}

fn c2_exact_map() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for k in 0..500 {
        let n = rng.random_range(4..=12);
        let p = rng.random_range(0.15..0.6);
        let g = random_retweet_graph(&mut rng, n, p);
        let node_energy = if k % 2 == 0 {
            NodeEnergy::Zero
        } else {
            NodeEnergy::Prior((0..n).map(|_| Some(rng.random::<f64>())).collect())
        };
        let cfg = EnergyConfig::new(
            sample_feasible_lambda(&mut rng),
            rng.random_range(0.5..3.0),
            rng.random_range(0.5..20.0),
            rng.random_range(0.5..20.0),
            node_energy,
        )
        .map_err(|e| e.to_string())?;
        let eg = EnergyGraph::build(&g, &cfg).map_err(|e| e.to_string())?;
        let cut = min_cut_labels(&eg);
        let (best, _) = brute_force_min(&g, &cfg);
        let got = oracle_energy(&g, &cut.labeling, &cfg);
        let err = (got - best).abs();
        worst = worst.max(err);
        ensure(err <= 1e-9, || format!("instance {k}: cut energy {got} vs brute force {best}"))?;
    }
    Ok(format!("500/500 instances optimal, max gap {worst:.1e}"))
}

fn c3_cut_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for k in 0..50 {
        let n = rng.random_range(2..=40);
        let p = rng.random_range(0.05..0.5);
        let g = random_retweet_graph(&mut rng, n, p);
        let node_energy = if k % 2 == 0 {
            NodeEnergy::Zero
        } else {
            NodeEnergy::Prior((0..n).map(|_| Some(rng.random::<f64>())).collect())
        };
        let cfg = EnergyConfig::new(
            sample_feasible_lambda(&mut rng),
            rng.random_range(0.5..3.0),
            rng.random_range(0.5..20.0),
            rng.random_range(0.5..20.0),
            node_energy,
        )
        .map_err(|e| e.to_string())?;
        let eg = EnergyGraph::build(&g, &cfg).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let l = Labeling::from_bools((0..n).map(|_| rng.random_bool(0.5)));
            let cut = eg.cut_weight(&l).map_err(|e| e.to_string())?;
            let e = oracle_energy(&g, &l, &cfg) + eg.constant();
            let err = (cut - e).abs();
            worst = worst.max(err);
            ensure(err <= 1e-9, || format!("graph {k}: cut {cut} vs energy {e}"))?;
        }
    }
    Ok(format!("5000 labelings, max gap {worst:.1e}"))
}

fn c4_planted_auc() -> Check {
    let mut aucs = Vec::new();
    let mut slowest = Duration::ZERO;
    for seed in 0..10 {
        let t = Instant::now();
        let (g, truth) = generate_planted(&PlantedBotConfig {
            seed,
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let det = detect(&g, &DetectConfig::default()).map_err(|e| e.to_string())?;
        let labeled: Vec<(usize, Label)> = (0..truth.len()).map(|i| (i, truth.get(i))).collect();
        let roc = roc_auc(&det.probabilities, &labeled).map_err(|e| e.to_string())?;
        slowest = slowest.max(t.elapsed());
        aucs.push(roc.auc);
    }
    let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
    ensure(mean >= 0.90, || format!("mean AUC {mean:.4} ({aucs:.3?})"))?;
    ensure(slowest < Duration::from_secs(10), || format!("slowest seed {slowest:?}"))?;
    let min = aucs.iter().copied().fold(1.0, f64::min);
    Ok(format!("mean AUC {mean:.4} (min {min:.4}), slowest seed {slowest:.2?}"))
}

fn c5_equilibrium_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst, mut worst_res) = (0.0f64, 0.0f64);
    for k in 0..100 {
        let state = generate_opinion_network(&OpinionNetworkConfig {
            n: rng.random_range(5..=200),
            stubborn_fraction: rng.random_range(0.05..0.5),
            mean_friends: rng.random_range(0.5..6.0),
            repair: k % 4 != 0,
            seed: k,
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let report = solve_equilibrium(&state, &SolverConfig::default()).map_err(|e| e.to_string())?;
        let dense = dense_equilibrium(&state);
        for (i, (a, b)) in report.opinions.iter().zip(&dense).enumerate() {
            match (a, b) {
                (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
                (None, None) => {}
                _ => return Err(format!("network {k}: solvability of node {i} disagrees")),
            }
        }
        worst_res = worst_res.max(report.residual);
        ensure(worst <= 1e-8, || format!("network {k}: max error {worst:e}"))?;
        ensure(report.residual <= 1e-10, || format!("network {k}: residual {:e}", report.residual))?;
    }
    Ok(format!("max |theta - dense| {worst:.1e}, max residual {worst_res:.1e}"))
}

fn c6_rate_scaling() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let base = generate_opinion_network(&OpinionNetworkConfig {
            n: 150,
            seed: 600 + seed,
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let solve = |c: f64| -> Result<Vec<Option<f64>>, String> {
            let s = base
                .with_rates(base.rates().iter().map(|r| r * c).collect())
                .map_err(|e| e.to_string())?;
            Ok(solve_equilibrium(&s, &SolverConfig::default())
                .map_err(|e| e.to_string())?
                .opinions)
        };
        let reference = solve(1.0)?;
        for c in [0.01, 137.0] {
            for (a, b) in solve(c)?.iter().zip(&reference) {
                if let (Some(a), Some(b)) = (a, b) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    ensure(worst <= 1e-8, || format!("max change {worst:e}"))?;
    Ok(format!("max change {worst:.1e} over c in {{0.01, 1, 137}}"))
}

fn c7_simulator() -> Check {
    let (mut close, mut total) = (0usize, 0usize);
    for seed in 0..20 {
        let state = generate_opinion_network(&OpinionNetworkConfig {
            n: 8 + (seed as usize % 13),
            stubborn_fraction: 0.3,
            mean_friends: 2.0,
            seed: 700 + seed,
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let eq = solve_equilibrium(&state, &SolverConfig::default()).map_err(|e| e.to_string())?;
        let traj = simulate(
            &state,
            &SimulationConfig {
                events: 100_000,
                seed,
                ..Default::default()
            },
            &HarmonicWeights,
        )
        .map_err(|e| e.to_string())?;
        for (i, x) in traj.final_opinions().iter().enumerate() {
            let theta = eq.opinions[i].ok_or("unsolvable node in generated network")?;
            total += 1;
            close += usize::from((x - theta).abs() <= 0.05);
        }
    }
    let frac = close as f64 / total as f64;
    ensure(frac >= 0.95, || format!("{close}/{total} nodes within 0.05"))?;
    Ok(format!("{close}/{total} nodes within 0.05 ({:.1}%)", 100.0 * frac))
}

fn fixture_state(edges: &str, anchors: &str) -> Result<OpinionState, String> {
    let (g, _) = io::read_edge_list(fixture(edges), EdgeSemantics::Follower, EdgeListOptions::default())
        .map_err(|e| e.to_string())?;
    let stubborn = io::read_opinions(fixture(anchors)).map_err(|e| e.to_string())?;
    let anchors = io::align(&g, &stubborn);
    let n = g.node_count();
    OpinionState::new(g, anchors, vec![1.0; n]).map_err(|e| e.to_string())
}

fn c8_ghic_hand_case() -> Check {
    let s = fixture_state("toy_followers.csv", "toy_stubborn.csv")?;
    let b = s.graph().node("b").ok_or("fixture lacks b")?;
    let cfg = SolverConfig::default();
    let r = ghic(&s, &[b], &cfg, Removal::Delete).map_err(|e| e.to_string())?;
    let empty = ghic(&s, &[], &cfg, Removal::Delete).map_err(|e| e.to_string())?;
    ensure((r.delta - 0.5).abs() <= 1e-12, || format!("delta {}", r.delta))?;
    ensure(empty.delta == 0.0, || format!("empty-set delta {}", empty.delta))?;
    Ok(format!("delta {} ; empty set {}", r.delta, empty.delta))
}

fn c9_non_additive() -> Check {
    let s = fixture_state("pair_followers.csv", "pair_stubborn.csv")?;
    ensure(s.node_count() <= 6, || "fixture too large".into())?;
    let (a, b) = (s.graph().node("a").ok_or("no a")?, s.graph().node("b").ok_or("no b")?);
    let cfg = SolverConfig::default();
    let d = |set: &[usize]| ghic(&s, set, &cfg, Removal::Delete).map(|r| r.delta).map_err(|e| e.to_string());
    let (da, db, dab) = (d(&[a])?, d(&[b])?, d(&[a, b])?);
    let gap = (dab - da - db).abs();
    ensure(gap > 0.01, || format!("gap {gap}"))?;
    Ok(format!("D(a)={da:.4} D(b)={db:.4} D(ab)={dab:.4} gap={gap:.4}"))
}

fn c10_behavior() -> Check {
    let mut worst_p = 0.0f64;
    let mut summary = String::new();
    for seed in 0..5 {
        let (g, truth) = generate_planted(&PlantedBotConfig {
            seed: 1000 + seed,
            ..Default::default()
        })
        .map_err(|e| e.to_string())?;
        let rpt = retweets_per_target(&g, &truth).map_err(|e| e.to_string())?;
        let bot_to_human: Vec<f64> = rpt
            .iter()
            .filter(|r| truth.get(r.node).is_bot())
            .filter_map(|r| r.to_humans)
            .collect();
        let human_to_bot: Vec<f64> = rpt
            .iter()
            .filter(|r| !truth.get(r.node).is_bot())
            .filter_map(|r| r.to_bots)
            .collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (bh, hb) = (mean(&bot_to_human), mean(&human_to_bot));
        ensure(bh > hb, || format!("seed {seed}: bot->human {bh} <= human->bot {hb}"))?;
        let ks = ks_two_sample(&bot_to_human, &human_to_bot).map_err(|e| e.to_string())?;
        worst_p = worst_p.max(ks.p_value);
        ensure(ks.p_value < 0.01, || format!("seed {seed}: KS p = {}", ks.p_value))?;
        if seed == 0 {
            summary = format!("bot->human {bh:.3} vs human->bot {hb:.3}, D={:.3}", ks.statistic);
        }
    }
    Ok(format!("{summary}; max p over 5 seeds {worst_p:.1e}"))
}

fn vm_hwm_kib() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn c11_scale() -> Check {
    let cfg = PlantedBotConfig {
        n_humans: 90_000,
        n_bots: 10_000,
        human_to_human: Intensity::new(9.0, 1.5),
        seed: 11,
        ..Default::default()
    };
    let (g, _) = generate_planted(&cfg).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("retweets.csv");
    io::write_edge_list(&path, &g, EdgeListOptions::default()).map_err(|e| e.to_string())?;
    drop(g);

    let t = Instant::now();
    let (g, _) = io::read_edge_list(&path, EdgeSemantics::Retweet, EdgeListOptions::default())
        .map_err(|e| e.to_string())?;
    let det = detect(&g, &DetectConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let hwm = vm_hwm_kib();
    ensure(g.node_count() >= 100_000, || format!("{} nodes", g.node_count()))?;
    ensure(g.edge_count() >= 1_000_000, || format!("{} edges", g.edge_count()))?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    if let Some(kib) = hwm {
        ensure(kib < 2 * 1024 * 1024, || format!("peak RSS {} MiB", kib / 1024))?;
    }
    Ok(format!(
        "{} nodes, {} edges, {} bots, {elapsed:.2?}, peak RSS {}",
        g.node_count(),
        g.edge_count(),
        det.bot_count(),
        hwm.map_or("n/a".into(), |k| format!("{} MiB", k / 1024))
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check, Duration); 11] = [
        ("lambda centroid", c1_centroid, Duration::from_millis(1)),
        ("exact MAP vs brute force", c2_exact_map, Duration::from_secs(30)),
        ("cut weight = energy + C0", c3_cut_identity, Duration::from_secs(10)),
        ("planted-bot detection AUC", c4_planted_auc, Duration::from_secs(100)),
        ("equilibrium vs dense solve", c5_equilibrium_oracle, Duration::from_secs(20)),
        ("rate-scale invariance", c6_rate_scaling, Duration::from_secs(5)),
        ("simulator convergence", c7_simulator, Duration::from_secs(30)),
        ("GHIC hand case", c8_ghic_hand_case, Duration::from_millis(1)),
        ("GHIC non-additivity", c9_non_additive, Duration::from_millis(1)),
        ("behavioral ordering", c10_behavior, Duration::from_secs(5)),
        ("scale smoke test", c11_scale, Duration::from_secs(120)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, run, limit)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || *f == id.to_string()) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = t.elapsed();
        let outcome = outcome.and_then(|msg| {
            if elapsed < *limit {
                Ok(msg)
            } else {
                Err(format!("{msg}; runtime {elapsed:.2?} exceeds {limit:?}"))
            }
        });
        match outcome {
            Ok(msg) => println!("criterion {id:>2} PASS  {name}: {msg} [{elapsed:.2?}]"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {msg} [{elapsed:.2?}]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
