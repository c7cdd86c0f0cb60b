use std::collections::BTreeSet;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use botimpact::energy::Label;
use botimpact::graph::BuildStats;
use botimpact::io::{self, CsvOut, EdgeListOptions};
use botimpact::metrics::{ks_two_sample, retweets_per_target, roc_auc, GroupComparison, KsResult, PercentileSummary};
use botimpact::opinion::{simulate as run_simulation, HarmonicWeights, SimulationConfig, Sweep};
use botimpact::pipeline::{self, AlphaSpec, AssessConfig, DetectConfig, NodeEnergySpec};
use botimpact::stubborn::{label_by_profile_phrases, score_tweets, MatchMode, StubbornConfig, TweetRecord};
use botimpact::synth::{self, Intensity, OpinionLaw, OpinionNetworkConfig, PlantedBotConfig, RateLaw, WeightLaw};
use botimpact::{
    solve_equilibrium, EdgeSemantics, EquilibriumReport, Labeling, LambdaParams, OpinionState, Removal, SocialGraph,
    SolverConfig,
};
use serde_json::{json, Value};

use crate::settings::Settings;
use crate::{
    AssessArgs, BehaviorArgs, CliError, DetectArgs, EquilibriumArgs, EvalArgs, GraphInput, NetworkInputs,
    OpinionInputs, SimulateArgs, SolverArgs, SweepArgs, SynthArgs,
};

type Result<T> = std::result::Result<T, CliError>;

struct Run {
    s: Settings,
    out: PathBuf,
    start: Instant,
}

impl Run {
    fn new(config: Option<&Path>, command: &'static str, out_dir: Option<PathBuf>) -> Result<Self> {
        let start = Instant::now();
        let s = Settings::load(config, command)?;
        let out = s.path(out_dir, "out_dir")?.unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
        Ok(Self { s, out, start })
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Writes the summary next to the other outputs and echoes it to stdout.
    fn emit(&self, name: &str, mut summary: Value) -> Result<()> {
        summary["elapsed_ms"] = json!(self.start.elapsed().as_secs_f64() * 1e3);
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        let path = self.out(name);
        std::fs::write(&path, format!("{text}\n")).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        // The file is the record; a closed stdout is not an error.
        let _ = writeln!(std::io::stdout().lock(), "{text}");
        Ok(())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn show(p: &Path) -> String {
    p.display().to_string()
}

fn edge_options(s: &Settings, input: &GraphInput) -> Result<EdgeListOptions> {
    let delimiter = match s.string(input.delimiter.clone(), "delimiter")?.as_deref() {
        None | Some("comma") | Some(",") => b',',
        Some("tab") | Some("\t") | Some("\\t") => b'\t',
        Some(d) if d.len() == 1 => d.as_bytes()[0],
        Some(d) => return Err(usage(format!("delimiter {d:?} is not comma, tab or one ASCII character"))),
    };
    Ok(EdgeListOptions {
        delimiter,
        has_header: s.flag(input.header, "header")?,
    })
}

fn read_graph(
    s: &Settings,
    flag: Option<PathBuf>,
    key: &str,
    role: EdgeSemantics,
    input: &GraphInput,
) -> Result<(PathBuf, SocialGraph, BuildStats)> {
    let path = s.require_path(flag, key)?;
    let opts = edge_options(s, input)?;
    let (g, stats) = io::read_edge_list(&path, role, opts)?;
    Ok((path, g, stats))
}

fn graph_json(g: &SocialGraph, stats: &BuildStats) -> Value {
    json!({
        "nodes": g.node_count(),
        "edges": g.edge_count(),
        "rows_read": stats.rows_read,
        "self_loops_dropped": stats.self_loops_dropped,
        "parallel_merged": stats.parallel_merged,
    })
}

fn parse_floats(text: &str, what: &str, count: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = text
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("{what}: {text:?} is not a list of numbers")))?;
    if v.len() != count {
        return Err(usage(format!("{what}: expected {count} numbers, got {}", v.len())));
    }
    Ok(v)
}

fn parse_lambda(text: &str) -> Result<LambdaParams> {
    if text.trim() == "centroid" {
        return Ok(LambdaParams::centroid());
    }
    let v = parse_floats(text, "--lambda", 4)?;
    Ok(LambdaParams::new(v[0], v[1], v[2], v[3])?)
}

fn lambda_json(l: &LambdaParams) -> Value {
    let (l10, l00, l11, l01) = l.as_tuple();
    json!({ "l10": l10, "l00": l00, "l11": l11, "l01": l01 })
}

/// `a:b` pairs separated by commas; an empty string is an empty list.
fn parse_intervals(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let bad = || usage(format!("interval {p:?} is not of the form a:b"));
            let (a, b) = p.split_once(':').ok_or_else(bad)?;
            Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

fn solver_config(s: &Settings, a: &SolverArgs) -> Result<(SolverConfig, Value)> {
    let d = SolverConfig::default();
    let tol = s.f64(a.tol, "tol")?.unwrap_or(d.tol);
    let max_iter = s.u64(a.max_iter, "max_iter")?.map_or(d.max_iter, |m| m as usize);
    let name = s.string(a.solver.clone(), "solver")?.unwrap_or_else(|| "gauss-seidel".into());
    let damping = s.f64(a.damping, "damping")?;
    let sweep = match name.as_str() {
        "gauss-seidel" => {
            if damping.is_some() {
                return Err(usage("--damping only applies to --solver jacobi"));
            }
            Sweep::GaussSeidel
        }
        "jacobi" => Sweep::Jacobi {
            damping: damping.unwrap_or(0.5),
        },
        other => return Err(usage(format!("solver {other:?} is not gauss-seidel or jacobi"))),
    };
    let damping = match sweep {
        Sweep::Jacobi { damping } => Some(damping),
        Sweep::GaussSeidel => None,
    };
    Ok((
        SolverConfig { tol, max_iter, sweep },
        json!({ "tol": tol, "max_iter": max_iter, "solver": name, "damping": damping }),
    ))
}

fn report_json(r: &EquilibriumReport, state: &OpinionState) -> Value {
    json!({
        "iterations": r.iterations,
        "residual": r.residual,
        "relative_residual": r.relative_residual,
        "unreachable_count": r.unreachable.len(),
        "mean_free": r.mean_free(state),
    })
}

pub fn detect(a: DetectArgs, config: Option<&Path>, out_dir: Option<PathBuf>) -> Result<()> {
    let run = Run::new(config, "detect", out_dir)?;
    let s = &run.s;
    let (path, graph, stats) = read_graph(s, a.retweets, "retweets", EdgeSemantics::Retweet, &a.input)?;

    let lambda = parse_lambda(&s.string(a.lambda, "lambda")?.unwrap_or_else(|| "centroid".into()))?;
    let gamma = s.f64(a.gamma, "gamma")?.unwrap_or(1.0);
    let explicit = s.string(a.alpha, "alpha")?;
    let percentile = s.f64(a.alpha_percentile, "alpha_percentile")?;
    let alpha = match (explicit, percentile) {
        (Some(_), Some(_)) => return Err(usage("give either --alpha or --alpha-percentile, not both")),
        (Some(text), None) => {
            let v = parse_floats(&text, "--alpha", 2)?;
            AlphaSpec::Explicit {
                alpha_out: v[0],
                alpha_in: v[1],
            }
        }
        (None, q) => AlphaSpec::Percentile(q.unwrap_or(99.0)),
    };
    let mode = s.string(a.node_energy, "node_energy")?.unwrap_or_else(|| "zero".into());
    let seed = s.u64(a.seed, "seed")?.unwrap_or(0);
    let priors = s.path(a.priors, "priors")?;
    let node_energy = match mode.as_str() {
        "zero" => NodeEnergySpec::Zero,
        "uniform" => NodeEnergySpec::Uniform { seed },
        "prior" => {
            let p = priors.as_ref().ok_or_else(|| usage("--node-energy prior needs --priors"))?;
            NodeEnergySpec::Prior(io::read_priors(p)?)
        }
        other => return Err(usage(format!("node energy {other:?} is not zero, uniform or prior"))),
    };

    let cfg = DetectConfig {
        lambda,
        gamma,
        alpha,
        node_energy,
    };
    let det = pipeline::detect(&graph, &cfg)?;

    let labels_path = run.out("labels.csv");
    let probs_path = run.out("probabilities.csv");
    io::write_labels(&labels_path, &graph, &det.cut.labeling)?;
    io::write_scores(&probs_path, &graph, &det.probabilities)?;

    let (alpha_mode, q) = match alpha {
        AlphaSpec::Explicit { .. } => ("explicit", None),
        AlphaSpec::Percentile(q) => ("percentile", Some(q)),
    };
    run.emit(
        "detect_summary.json",
        json!({
            "command": "detect",
            "params": {
                "retweets": show(&path),
                "lambda": lambda_json(&lambda),
                "gamma": gamma,
                "alpha_mode": alpha_mode,
                "alpha_percentile": q,
                "alpha_out": det.energy.alpha_out,
                "alpha_in": det.energy.alpha_in,
                "node_energy": mode,
                "priors": priors.as_deref().map(show),
                "seed": seed,
            },
            "graph": graph_json(&graph, &stats),
            "energy": det.cut.min_energy,
            "cut_value": det.cut.cut_value,
            "bot_count": det.bot_count(),
            "flow": {
                "phases": det.cut.flow_stats.phases,
                "augmentations": det.cut.flow_stats.augmentations,
            },
            "outputs": { "labels": show(&labels_path), "probabilities": show(&probs_path) },
        }),
    )
}

/// Inputs shared by `assess` and `sweep`, loaded and resolved.
struct Loaded {
    followers: SocialGraph,
    tweets: Vec<TweetRecord>,
    bots: BTreeSet<String>,
    solver: SolverConfig,
    removal: Removal,
    params: Value,
    input: Value,
}

fn load_inputs(s: &Settings, a: OpinionInputs) -> Result<Loaded> {
    let (fpath, followers, stats) = read_graph(s, a.followers, "followers", EdgeSemantics::Follower, &a.input)?;
    let tpath = s.require_path(a.tweets, "tweets")?;
    let raw = io::read_tweets(&tpath)?;

    let mode_name = s.string(a.lexicon_mode, "lexicon_mode")?.unwrap_or_else(|| "substring".into());
    let mode = match mode_name.as_str() {
        "substring" => MatchMode::Substring,
        "token" => MatchMode::Token,
        other => return Err(usage(format!("lexicon mode {other:?} is not substring or token"))),
    };
    let lpath = s.path(a.lexicon, "lexicon")?;
    let lexicon = lpath.as_ref().map(|p| io::read_lexicon(p, mode)).transpose()?;
    let ppath = s.path(a.profiles, "profiles")?;

    let unscored = raw.iter().filter(|t| t.score.is_none()).count();
    let mut tweets = match &lexicon {
        Some(lex) => score_tweets(&raw, lex),
        None if unscored > 0 => {
            return Err(usage(format!(
                "{}: {unscored} tweets have no score; pass --lexicon to score their text",
                show(&tpath)
            )))
        }
        None => raw.clone(),
    };
    let text_dropped = raw.len() - tweets.len();

    // Profile opinions only fill in users without a scored tweet; each such
    // user gets one pseudo-tweet.
    let mut from_profiles = 0;
    if let Some(p) = &ppath {
        let lex = lexicon.as_ref().ok_or_else(|| usage("--profiles needs --lexicon"))?;
        let profiles = io::read_profiles(p)?;
        let have: BTreeSet<String> = tweets.iter().map(|t| t.user_id.clone()).collect();
        let labeled = label_by_profile_phrases(profiles.iter().map(|(u, d)| (u.as_str(), d.as_str())), lex);
        for (user, o) in labeled {
            if !have.contains(&user) {
                tweets.push(TweetRecord::scored(user, o));
                from_profiles += 1;
            }
        }
    }

    let bots_path = s.path(a.bots, "bots")?;
    let bot_ids = s.string(a.bot_ids, "bot_ids")?;
    if bots_path.is_none() && bot_ids.is_none() {
        return Err(usage("give the bot set with --bots and/or --bot-ids"));
    }
    let mut bots = BTreeSet::new();
    if let Some(p) = &bots_path {
        bots.extend(io::read_labels(p)?.into_iter().filter(|(_, l)| l.is_bot()).map(|(u, _)| u));
    }
    if let Some(ids) = &bot_ids {
        bots.extend(ids.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from));
    }
    let in_graph = bots.iter().filter(|b| followers.node(b).is_some()).count();

    let (solver, solver_json) = solver_config(s, &a.solver)?;
    let removal_name = s.string(a.removal, "removal")?.unwrap_or_else(|| "delete".into());
    let removal = match removal_name.as_str() {
        "delete" => Removal::Delete,
        "silence" => Removal::Silence,
        other => return Err(usage(format!("removal {other:?} is not delete or silence"))),
    };

    Ok(Loaded {
        params: json!({
            "followers": show(&fpath),
            "tweets": show(&tpath),
            "bots": bots_path.as_deref().map(show),
            "bot_ids": bot_ids,
            "lexicon": lpath.as_deref().map(show),
            "lexicon_mode": mode_name,
            "profiles": ppath.as_deref().map(show),
            "solver": solver_json,
            "removal": removal_name,
        }),
        input: json!({
            "graph": graph_json(&followers, &stats),
            "tweets_read": raw.len(),
            "tweets_unscorable": text_dropped,
            "profile_opinions": from_profiles,
            "bots_listed": bots.len(),
            "bots_in_graph": in_graph,
        }),
        followers,
        tweets,
        bots,
        solver,
        removal,
    })
}

fn summary_json(p: &Option<PercentileSummary>) -> Value {
    match p {
        Some(p) => json!({ "count": p.count, "p5": p.p5, "p50": p.p50, "p95": p.p95 }),
        None => Value::Null,
    }
}

fn ks_json(k: &Option<KsResult>) -> Value {
    match k {
        Some(k) => json!({ "statistic": k.statistic, "p_value": k.p_value, "n1": k.n1, "n2": k.n2 }),
        None => Value::Null,
    }
}

fn comparison_json(c: &GroupComparison) -> Value {
    json!({ "low": summary_json(&c.low), "high": summary_json(&c.high), "ks": ks_json(&c.ks) })
}

pub fn assess(a: AssessArgs, config: Option<&Path>, out_dir: Option<PathBuf>) -> Result<()> {
    let run = Run::new(config, "assess", out_dir)?;
    let s = &run.s;
    let d = StubbornConfig::default();
    let lower = s.f64(a.lower, "lower")?.unwrap_or(d.lower());
    let upper = s.f64(a.upper, "upper")?.unwrap_or(d.upper());
    let uniform_rates = s.flag(a.uniform_rates, "uniform_rates")?;
    let l = load_inputs(s, a.inputs)?;
    let cfg = AssessConfig {
        stubborn: StubbornConfig::new(lower, upper)?,
        solver: l.solver,
        removal: l.removal,
        uniform_rates,
    };
    let res = pipeline::assess(&l.followers, &l.tweets, &l.bots, &cfg)?;
    let state = &res.built.state;

    let eq_path = run.out("equilibrium.csv");
    io::write_equilibrium(&eq_path, state, &res.actual.equilibrium)?;
    let mut outputs = json!({ "equilibrium": show(&eq_path), "summary": show(&run.out("ghic.json")) });
    let uniform = match &res.uniform {
        Some(u) => {
            let p = run.out("equilibrium_uniform.csv");
            let uniform_state = state.with_rates(vec![1.0; state.node_count()])?;
            io::write_equilibrium(&p, &uniform_state, &u.equilibrium)?;
            outputs["equilibrium_uniform"] = json!(show(&p));
            json!({
                "delta": u.centrality.delta,
                "mean_with": u.centrality.mean_with,
                "mean_without": u.centrality.mean_without,
                "dropped_count": u.centrality.dropped.len(),
                "compared": u.centrality.compared,
                "equilibrium": report_json(&u.equilibrium, &uniform_state),
            })
        }
        None => Value::Null,
    };
    let c = &res.actual.centrality;
    let dg = &res.diagnostics;
    let mut params = l.params;
    params["lower"] = json!(lower);
    params["upper"] = json!(upper);
    params["uniform_rates"] = json!(uniform_rates);
    let mut input = l.input;
    input["stubborn_count"] = json!(state.stubborn_count());
    input["users_without_opinion"] = json!(res.built.without_opinion);
    run.emit(
        "ghic.json",
        json!({
            "command": "assess",
            "params": params,
            "delta": c.delta,
            "mean_with": c.mean_with,
            "mean_without": c.mean_without,
            "dropped_count": c.dropped.len(),
            "compared": c.compared,
            "input": input,
            "equilibrium": report_json(&res.actual.equilibrium, state),
            "uniform_rates": uniform,
            "diagnostics": {
                "low_bots": dg.low_bots,
                "high_bots": dg.high_bots,
                "delta_low": dg.delta_low,
                "delta_high": dg.delta_high,
                "rate": comparison_json(&dg.rate),
                "followers": comparison_json(&dg.followers),
            },
            "outputs": outputs,
        }),
    )
}

pub fn sweep(a: SweepArgs, config: Option<&Path>, out_dir: Option<PathBuf>) -> Result<()> {
    let run = Run::new(config, "sweep", out_dir)?;
    let s = &run.s;
    let text = s
        .string(a.intervals, "intervals")?
        .ok_or_else(|| usage("--intervals is required (an empty list is allowed)"))?;
    let intervals = parse_intervals(&text)?;
    let uniform_rates = s.flag(a.uniform_rates, "uniform_rates")?;
    let l = load_inputs(s, a.inputs)?;
    let cfg = AssessConfig {
        stubborn: StubbornConfig::default(),
        solver: l.solver,
        removal: l.removal,
        uniform_rates,
    };
    let rows = pipeline::sweep(&l.followers, &l.tweets, &l.bots, &intervals, &cfg);

    let path = run.out("sweep.csv");
    let mut out = CsvOut::create(
        &path,
        &["lower", "upper", "status", "stubborn_count", "mean_with", "mean_without", "delta", "error"],
    )?;
    for r in &rows {
        let fields = match &r.outcome {
            Ok(m) => [
                "ok".into(),
                m.stubborn_count.to_string(),
                m.mean_with.to_string(),
                m.mean_without.to_string(),
                m.delta.to_string(),
                String::new(),
            ],
            Err(e) => ["failed".into(), String::new(), String::new(), String::new(), String::new(), e.clone()],
        };
        out.row([r.lower.to_string(), r.upper.to_string()].into_iter().chain(fields))?;
    }
    out.finish()?;

    let mut params = l.params;
    params["intervals"] = json!(intervals.iter().map(|(a, b)| [a, b]).collect::<Vec<_>>());
    params["uniform_rates"] = json!(uniform_rates);
    run.emit(
        "sweep_summary.json",
        json!({
            "command": "sweep",
            "params": params,
            "input": l.input,
            "rows": rows.len(),
            "failed": rows.iter().filter(|r| r.outcome.is_err()).count(),
            "outputs": { "sweep": show(&path) },
        }),
    )
}

pub fn eval(a: EvalArgs, config: Option<&Path>, out_dir: Option<PathBuf>) -> Result<()> {
    let run = Run::new(config, "eval", out_dir)?;
    let s = &run.s;
    let spath = s.require_path(a.scores, "scores")?;
    let tpath = s.require_path(a.truth, "truth")?;
    let scores = io::read_scores(&spath)?;
    let truth = io::read_labels(&tpath)?;

    let mut values = Vec::with_capacity(truth.len());
    let mut pairs = Vec::with_capacity(truth.len());
    for (k, (user, label)) in truth.iter().enumerate() {
        let v = scores
            .get(user)
            .ok_or_else(|| botimpact::Error::MissingScore(user.clone()))?;
        values.push(*v);
        pairs.push((k, *label));
    }
    let curve = roc_auc(&values, &pairs)?;
    let roc_path = run.out("roc.csv");
    io::write_roc(&roc_path, &curve)?;
    run.emit(
        "eval_summary.json",
        json!({
            "command": "eval",
            "params": { "scores": show(&spath), "truth": show(&tpath) },
            "auc": curve.auc,
            "positives": curve.positives,
            "negatives": curve.negatives,
            "roc_points": curve.points.len(),
            "scores_without_truth": scores.keys().filter(|u| !truth.contains_key(*u)).count(),
            "outputs": { "roc": show(&roc_path) },
        }),
    )
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn behavior(a: BehaviorArgs, config: Option<&Path>, out_dir: Option<PathBuf>) -> Result<()> {
    let run = Run::new(config, "behavior", out_dir)?;
    let s = &run.s;
    let (gpath, graph, stats) = read_graph(s, a.retweets, "retweets", EdgeSemantics::Retweet, &a.input)?;
    let lpath = s.require_path(a.labels, "labels")?;
    let labels = io::read_labels(&lpath)?;
    let aligned = io::align(&graph, &labels);
    let mut labeling = Vec::with_capacity(aligned.len());
    for (i, l) in aligned.into_iter().enumerate() {
        labeling.push(l.ok_or_else(|| {
            CliError::Io(format!("{}: no label for user {}", show(&lpath), graph.name(i)))
        })?);
    }
    let labeling = Labeling::new(labeling);
    let rows = retweets_per_target(&graph, &labeling)?;

    let path = run.out("rpt.csv");
    let mut out = CsvOut::create(&path, &["user_id", "label", "to_humans", "to_bots"])?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    // samples[from][to]
    let mut samples: [[Vec<f64>; 2]; 2] = Default::default();
    for r in &rows {
        let class = labeling.get(r.node);
        let name = if class.is_bot() { "bot" } else { "human" };
        out.row([graph.name(r.node).to_string(), name.into(), opt(r.to_humans), opt(r.to_bots)])?;
        for to in [Label::Human, Label::Bot] {
            if let Some(v) = r.to_class(to) {
                samples[class.index()][to.index()].push(v);
            }
        }
    }
    out.finish()?;

    let (h, b) = (Label::Human.index(), Label::Bot.index());
    let ks = |x: &[f64], y: &[f64]| ks_json(&ks_two_sample(x, y).ok());
    let class = |from: usize| {
        json!({
            "to_humans": { "count": samples[from][h].len(), "mean": mean(&samples[from][h]) },
            "to_bots": { "count": samples[from][b].len(), "mean": mean(&samples[from][b]) },
        })
    };
    run.emit(
        "behavior_summary.json",
        json!({
            "command": "behavior",
            "params": { "retweets": show(&gpath), "labels": show(&lpath) },
            "graph": graph_json(&graph, &stats),
            "bots": class(b),
            "humans": class(h),
            "ks": {
                "bot_to_human_vs_human_to_human": ks(&samples[b][h], &samples[h][h]),
                "bot_to_bot_vs_human_to_bot": ks(&samples[b][b], &samples[h][b]),
                "bot_to_human_vs_human_to_bot": ks(&samples[b][h], &samples[h][b]),
            },
            "outputs": { "rpt": show(&path) },
        }),
    )
}

pub fn synth(a: SynthArgs, config: Option<&Path>, out_dir: Option<PathBuf>) -> Result<()> {
    let run = Run::new(config, "synth", out_dir)?;
    let s = &run.s;
    let d = PlantedBotConfig::default();
    let intensity = |e: Option<f64>, ek: &str, w: Option<f64>, wk: &str, def: Intensity| -> Result<Intensity> {
        Ok(Intensity {
            mean_edges: s.f64(e, ek)?.unwrap_or(def.mean_edges),
            mean_weight: s.f64(w, wk)?.unwrap_or(def.mean_weight),
        })
    };
    let law = s.string(a.weight_law, "weight_law")?.unwrap_or_else(|| "geometric".into());
    let cfg = PlantedBotConfig {
        n_humans: s.u64(a.humans, "humans")?.map_or(d.n_humans, |x| x as usize),
        n_bots: s.u64(a.bots, "bots")?.map_or(d.n_bots, |x| x as usize),
        bot_to_human: intensity(a.bh_edges, "bh_edges", a.bh_weight, "bh_weight", d.bot_to_human)?,
        human_to_human: intensity(a.hh_edges, "hh_edges", a.hh_weight, "hh_weight", d.human_to_human)?,
        bot_to_bot: intensity(a.bb_edges, "bb_edges", a.bb_weight, "bb_weight", d.bot_to_bot)?,
        human_to_bot: intensity(a.hb_edges, "hb_edges", a.hb_weight, "hb_weight", d.human_to_bot)?,
        weights: match law.as_str() {
            "geometric" => WeightLaw::Geometric,
            "fixed" => WeightLaw::Fixed,
            other => return Err(usage(format!("weight law {other:?} is not geometric or fixed"))),
        },
        seed: s.u64(a.seed, "seed")?.unwrap_or(d.seed),
    };
    let (graph, labels) = synth::generate_planted(&cfg)?;
    let rt_path = run.out("retweets.csv");
    let truth_path = run.out("truth.csv");
    io::write_edge_list(&rt_path, &graph, EdgeListOptions::default())?;
    // An edge list cannot carry isolated users, so the truth file leaves
    // them out too and every labeled user is a node of the written graph.
    let mut truth = CsvOut::create(&truth_path, &["user_id", "label"])?;
    let mut isolated = 0;
    for i in 0..graph.node_count() {
        if graph.out_degree(i) + graph.in_degree(i) == 0 {
            isolated += 1;
            continue;
        }
        let l = if labels.get(i).is_bot() { "bot" } else { "human" };
        truth.row([graph.name(i), l])?;
    }
    truth.finish()?;

    let ij = |i: &Intensity| json!({ "mean_edges": i.mean_edges, "mean_weight": i.mean_weight });
    let mut params = json!({
        "humans": cfg.n_humans,
        "bots": cfg.n_bots,
        "bot_to_human": ij(&cfg.bot_to_human),
        "human_to_human": ij(&cfg.human_to_human),
        "bot_to_bot": ij(&cfg.bot_to_bot),
        "human_to_bot": ij(&cfg.human_to_bot),
        "weight_law": law,
        "seed": cfg.seed,
        "heterophilic": cfg.is_heterophilic(),
        "opinion_network": Value::Null,
    });
    let mut outputs = json!({ "retweets": show(&rt_path), "truth": show(&truth_path) });

    if s.flag(a.opinion_network, "opinion_network")? {
        let od = OpinionNetworkConfig::default();
        let opinions = match (s.f64(a.opinion_alpha, "opinion_alpha")?, s.f64(a.opinion_beta, "opinion_beta")?) {
            (Some(alpha), Some(beta)) => OpinionLaw::Beta { alpha, beta },
            (None, None) => OpinionLaw::Uniform,
            _ => return Err(usage("--opinion-alpha and --opinion-beta go together")),
        };
        let (lo, hi) = match od.rates {
            RateLaw::UniformCount { lo, hi } => (lo, hi),
            RateLaw::Constant(_) => (1, 1),
        };
        let count = |v: Option<u64>, k: &str, def: u32| -> Result<u32> {
            s.u64(v, k)?
                .map_or(Ok(def), |x| u32::try_from(x).map_err(|_| usage(format!("{k} is too large"))))
        };
        let ocfg = OpinionNetworkConfig {
            n: cfg.n_humans + cfg.n_bots,
            stubborn_fraction: s.f64(a.stubborn_fraction, "stubborn_fraction")?.unwrap_or(od.stubborn_fraction),
            opinions,
            mean_friends: s.f64(a.mean_friends, "mean_friends")?.unwrap_or(od.mean_friends),
            rates: RateLaw::UniformCount {
                lo: count(a.min_tweets, "min_tweets", lo)?,
                hi: count(a.max_tweets, "max_tweets", hi)?,
            },
            repair: true,
            seed: cfg.seed,
        };
        let state = synth::generate_opinion_network(&ocfg)?;
        let g = state.graph();
        let paths = ["followers.csv", "tweets.csv", "stubborn.csv", "rates.csv"].map(|n| run.out(n));
        io::write_edge_list(&paths[0], g, EdgeListOptions::default())?;
        let mut tweets = CsvOut::create(&paths[1], &["user_id", "score"])?;
        let mut stubborn = CsvOut::create(&paths[2], &["user_id", "opinion"])?;
        let mut rates = CsvOut::create(&paths[3], &["user_id", "rate"])?;
        for i in 0..g.node_count() {
            let (name, o) = (g.name(i), state.initial()[i].to_string());
            for _ in 0..state.rate(i).round() as u64 {
                tweets.row([name, o.as_str()])?;
            }
            if let Some(psi) = state.stubborn_opinion(i) {
                stubborn.row([name.to_string(), psi.to_string()])?;
            }
            rates.row([name.to_string(), state.rate(i).to_string()])?;
        }
        tweets.finish()?;
        stubborn.finish()?;
        rates.finish()?;
        let law = match ocfg.opinions {
            OpinionLaw::Uniform => json!("uniform"),
            OpinionLaw::Beta { alpha, beta } => json!({ "beta": [alpha, beta] }),
        };
        let (lo, hi) = match ocfg.rates {
            RateLaw::UniformCount { lo, hi } => (lo, hi),
            RateLaw::Constant(_) => unreachable!(),
        };
        params["opinion_network"] = json!({
            "users": ocfg.n,
            "stubborn_fraction": ocfg.stubborn_fraction,
            "opinions": law,
            "mean_friends": ocfg.mean_friends,
            "tweets_per_user": [lo, hi],
            "stubborn_count": state.stubborn_count(),
            "edges": g.edge_count(),
        });
        for (key, p) in ["followers", "tweets", "stubborn", "rates"].iter().zip(&paths) {
            outputs[*key] = json!(show(p));
        }
    }

    run.emit(
        "synth_summary.json",
        json!({
            "command": "synth",
            "params": params,
            "graph": {
                "nodes": graph.node_count(),
                "edges": graph.edge_count(),
                "bots": labels.bot_count(),
                "isolated_dropped": isolated,
            },
            "outputs": outputs,
        }),
    )
}

/// Follower graph with stubborn anchors and rates from files.
fn load_network(s: &Settings, n: NetworkInputs) -> Result<(OpinionState, Value)> {
    let (gpath, graph, stats) = read_graph(s, n.followers, "followers", EdgeSemantics::Follower, &n.input)?;
    let spath = s.require_path(n.stubborn, "stubborn")?;
    let anchors = io::read_opinions(&spath)?;
    if let Some(u) = anchors.keys().find(|u| graph.node(u).is_none()) {
        return Err(botimpact::Error::UnknownUser(u.clone()).into());
    }
    let rpath = s.path(n.rates, "rates")?;
    let rates = match &rpath {
        Some(p) => io::align(&graph, &io::read_rates(p)?)
            .into_iter()
            .map(|r| r.unwrap_or(0.0))
            .collect(),
        None => vec![1.0; graph.node_count()],
    };
    let info = json!({
        "followers": show(&gpath),
        "stubborn": show(&spath),
        "rates": rpath.as_deref().map(show),
        "graph": graph_json(&graph, &stats),
    });
    let anchors = io::align(&graph, &anchors);
    Ok((OpinionState::new(graph, anchors, rates)?, info))
}

pub fn equilibrium(a: EquilibriumArgs, config: Option<&Path>, out_dir: Option<PathBuf>) -> Result<()> {
    let run = Run::new(config, "equilibrium", out_dir)?;
    let s = &run.s;
    let (state, mut params) = load_network(s, a.network)?;
    let (solver, solver_json) = solver_config(s, &a.solver)?;
    params["solver"] = solver_json;
    let report = solve_equilibrium(&state, &solver)?;
    let path = run.out("equilibrium.csv");
    io::write_equilibrium(&path, &state, &report)?;
    run.emit(
        "equilibrium_summary.json",
        json!({
            "command": "equilibrium",
            "params": params,
            "stubborn_count": state.stubborn_count(),
            "equilibrium": report_json(&report, &state),
            "outputs": { "equilibrium": show(&path) },
        }),
    )
}

pub fn simulate(a: SimulateArgs, config: Option<&Path>, out_dir: Option<PathBuf>) -> Result<()> {
    let run = Run::new(config, "simulate", out_dir)?;
    let s = &run.s;
    let (state, mut params) = load_network(s, a.network)?;
    let ipath = s.path(a.initial, "initial")?;
    let initial: Vec<f64> = match &ipath {
        Some(p) => io::align(state.graph(), &io::read_opinions(p)?)
            .into_iter()
            .map(|o| o.unwrap_or(0.5))
            .collect(),
        None => vec![0.5; state.node_count()],
    };
    let state = state.with_initial(initial)?;
    let d = SimulationConfig::default();
    let cfg = SimulationConfig {
        events: s.u64(a.events, "events")?.unwrap_or(d.events),
        seed: s.u64(a.seed, "seed")?.unwrap_or(d.seed),
        noise_sigma: s.f64(a.noise, "noise")?.unwrap_or(d.noise_sigma),
        sample_every: s.u64(a.sample_every, "sample_every")?.unwrap_or(d.sample_every),
    };
    let traj = run_simulation(&state, &cfg, &HarmonicWeights)?;

    let path = run.out("trajectory.csv");
    let mut out = CsvOut::create(&path, &["event", "user_id", "opinion"])?;
    let g = state.graph();
    for (event, opinions) in &traj.samples {
        let event = event.to_string();
        for (i, o) in opinions.iter().enumerate() {
            out.row([event.as_str(), g.name(i), &o.to_string()])?;
        }
    }
    out.finish()?;

    // Distance of the final state from the equilibrium, where it exists.
    let gap = solve_equilibrium(&state, &SolverConfig::default()).ok().map(|r| {
        r.free_opinions(&state)
            .map(|(i, eq)| (traj.final_opinions()[i] - eq).abs())
            .fold(0.0, f64::max)
    });
    let fin = traj.final_opinions();
    let free: Vec<f64> = (0..state.node_count())
        .filter(|&i| !state.is_stubborn(i))
        .map(|i| fin[i])
        .collect();
    params["initial"] = json!(ipath.as_deref().map(show));
    params["events"] = json!(cfg.events);
    params["seed"] = json!(cfg.seed);
    params["noise"] = json!(cfg.noise_sigma);
    params["sample_every"] = json!(cfg.sample_every);
    run.emit(
        "simulate_summary.json",
        json!({
            "command": "simulate",
            "params": params,
            "samples": traj.samples.len(),
            "posts_received": {
                "min": traj.updates.iter().min(),
                "max": traj.updates.iter().max(),
            },
            "final_mean_free": mean(&free),
            "max_gap_to_equilibrium": gap,
            "outputs": { "trajectory": show(&path) },
        }),
    )
}
