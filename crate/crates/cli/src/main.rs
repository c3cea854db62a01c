//! `aegis` — experiment runner and report emitter for the toolkit: batch
//! training runs, the wrapping-equivalence verification suite, detector
//! contract checks, frame dumps, and report aggregation.

mod config;
mod report;
mod svg;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use aegis_core::batch;
use aegis_core::envs::{make_env, make_env_named, EnvConfig, SafetyEnv};
use aegis_core::learn::{
    train_with_monitor, AgentKind, EpisodeRow, ExtractorSpec, LinearConfig, QConfig, TrainConfig,
    TrainError,
};
use aegis_core::monitor::builtins::{AGENT_CLASS, HAZARD_CLASS};
use aegis_core::perceive::{decode_peaks, template_detect, DEFAULT_STRIDE, DEFAULT_TAU};
use aegis_core::pgm;
use aegis_core::shield::ShieldError;
use aegis_core::state::Environment;

// Exit codes: 0 success, 1 failure (checks failed, IO, or training error),
// 2 usage (clap), 3 no safe action available.
const EXIT_FAIL: u8 = 1;
const EXIT_EMPTY_SAFE_SET: u8 = 3;

#[derive(Parser)]
#[command(name = "aegis", version, about = "Runtime-shielded safe exploration toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train an agent, with or without the shield, and write the learning
    /// curve as CSV plus a JSON summary.
    Train(TrainArgs),
    /// Run the wrapping-equivalence verification suite on random MDPs.
    VerifyTheory(VerifyArgs),
    /// Check the detection contract on generated frames.
    DetectCheck(DetectArgs),
    /// Dump environment frames (and optionally detector heatmaps) as PGM.
    Render(RenderArgs),
    /// Aggregate training CSVs into a summary table and SVG curves.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AgentArg {
    Random,
    Q,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExtractorArg {
    Oracle,
    Detector,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    env: String,
    #[arg(long, value_enum, default_value = "random")]
    agent: AgentArg,
    #[arg(long, value_enum, default_value = "on")]
    shield: OnOff,
    #[arg(long, value_enum, default_value = "oracle")]
    extractor: ExtractorArg,
    /// Oracle noise radius in world units, or `half-margin` for half the
    /// environment's declared monitor margin.
    #[arg(long, default_value = "0")]
    epsilon: String,
    #[arg(long, default_value_t = 1000)]
    episodes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory; defaults to $AEGIS_OUT or ./out.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// JSON config file with `env` and/or `monitor` overrides.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 200)]
    instances: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 20)]
    policies: usize,
    #[arg(long, default_value_t = 20)]
    max_states: usize,
    #[arg(long, default_value_t = 5)]
    max_actions: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long, default_value_t = 1000)]
    frames: usize,
    /// One environment name, or `all`.
    #[arg(long, default_value = "all")]
    env: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    env: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    steps: usize,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Also dump per-class detector heatmap channels.
    #[arg(long)]
    heatmaps: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    in_dir: PathBuf,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn out_root(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os("AEGIS_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_FAIL)
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Train(args) => cmd_train(args),
        Cmd::VerifyTheory(args) => cmd_verify(args),
        Cmd::DetectCheck(args) => cmd_detect(args),
        Cmd::Render(args) => cmd_render(args),
        Cmd::Report(args) => cmd_report(args),
    }
}

fn cmd_train(args: TrainArgs) -> ExitCode {
    let overrides = match args.config.as_deref().map(config::load) {
        Some(Ok(c)) => Some(c),
        Some(Err(e)) => return fail(e),
        None => None,
    };
    let env_cfg = match config::env_config(&args.env, overrides.as_ref()) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let eps = match parse_epsilon(&args.epsilon, &env_cfg) {
        Ok(e) => e,
        Err(e) => return fail(e),
    };
    let monitor = match overrides.as_ref().map(|o| config::monitor_override(o, &args.env)) {
        Some(Ok(m)) => m,
        Some(Err(e)) => return fail(e),
        None => None,
    };
    let agent = match args.agent {
        AgentArg::Random => AgentKind::Random,
        AgentArg::Q => AgentKind::Q(QConfig::default()),
        AgentArg::Linear => AgentKind::Linear(LinearConfig::default()),
    };
    let shield = matches!(args.shield, OnOff::On);
    let extractor = match args.extractor {
        ExtractorArg::Oracle => ExtractorSpec::Oracle { eps },
        ExtractorArg::Detector => ExtractorSpec::Detector,
    };
    let cfg = TrainConfig { episodes: args.episodes, seed: args.seed, shield, extractor, agent };

    let outcome = match train_with_monitor(&env_cfg, &cfg, monitor.as_ref()) {
        Ok(o) => o,
        Err(TrainError::Shield(ShieldError::EmptySafeSet)) => {
            eprintln!("error: no safe action available (empty safe set)");
            return ExitCode::from(EXIT_EMPTY_SAFE_SET);
        }
        Err(e) => return fail(e),
    };

    let dir = out_root(args.out_dir);
    if let Err(e) = fs::create_dir_all(&dir) {
        return fail(e);
    }
    let shield_tag = if shield { "on" } else { "off" };
    let stem =
        format!("train_{}_{}_shield-{}_seed{}", args.env, cfg.agent.name(), shield_tag, args.seed);
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut csv = String::from(EpisodeRow::CSV_HEADER);
    csv.push('\n');
    for row in &outcome.rows {
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    if let Err(e) = fs::write(&csv_path, csv) {
        return fail(e);
    }
    let summary = config::RunSummary {
        env: args.env.clone(),
        agent: cfg.agent.name().to_string(),
        shield,
        extractor: match cfg.extractor {
            ExtractorSpec::Oracle { .. } => "oracle".into(),
            ExtractorSpec::Detector => "detector".into(),
        },
        epsilon: eps,
        episodes: args.episodes,
        seed: args.seed,
        total_violations: outcome.total_violations,
        total_interventions: outcome.total_interventions,
        mean_return_last_tenth: report::tail_mean(&outcome.rows),
    };
    let json_path = dir.join(format!("{stem}.json"));
    match serde_json::to_string_pretty(&summary) {
        Ok(s) => {
            if let Err(e) = fs::write(&json_path, s) {
                return fail(e);
            }
        }
        Err(e) => return fail(e),
    }
    println!(
        "wrote {} and {} (violations {}, interventions {})",
        csv_path.display(),
        json_path.display(),
        outcome.total_violations,
        outcome.total_interventions
    );
    ExitCode::SUCCESS
}

fn parse_epsilon(text: &str, env_cfg: &EnvConfig) -> Result<f64, String> {
    if text == "half-margin" {
        let env = make_env(env_cfg, 0).map_err(|e| e.to_string())?;
        return Ok(env.declared_eps() / 2.0);
    }
    text.parse::<f64>()
        .map_err(|_| format!("--epsilon must be a number or `half-margin`, got `{text}`"))
        .and_then(|e| if e >= 0.0 { Ok(e) } else { Err("--epsilon must be nonnegative".into()) })
}

fn cmd_verify(args: VerifyArgs) -> ExitCode {
    let report = aegis_core::mdp::run_equivalence_suite(
        args.instances,
        args.max_states,
        args.max_actions,
        args.tol,
        args.policies,
        args.seed,
    );
    let mut text = format!("wrapping equivalence suite\n{}\n", report.summary());
    if let Some(cx) = &report.counterexample {
        text.push_str("\ncounterexample:\n");
        text.push_str(cx);
    }
    if let Some(path) = &args.out {
        if let Some(parent) = path.parent() {
            let _ = fs::create_dir_all(parent);
        }
        if let Err(e) = fs::write(path, &text) {
            return fail(e);
        }
        println!("wrote {}", path.display());
    }
    println!("{}", report.summary());
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn cmd_detect(args: DetectArgs) -> ExitCode {
    let envs: Vec<String> = if args.env == "all" {
        ["xo", "acc", "gf", "pm"].iter().map(|s| s.to_string()).collect()
    } else {
        vec![args.env.clone()]
    };
    let mut lines = vec!["env,frames,misses,false_positives,max_err_px".to_string()];
    let mut all_ok = true;
    for env_name in &envs {
        if EnvConfig::default_for(env_name).is_none() {
            return fail(format!("unknown environment `{env_name}`"));
        }
        let per_frame = batch::run_indexed(args.frames, |k| {
            let mut env = make_env_named(env_name, args.seed + k as u64).unwrap();
            let frame = env.reset();
            let truth = env.true_symbolic_state();
            let map = env.world_map();
            let z = template_detect(&frame, &env.templates(), DEFAULT_STRIDE, DEFAULT_TAU);
            let detections = decode_peaks(&z, DEFAULT_TAU);
            let mut misses = 0u64;
            let mut false_pos = 0u64;
            let mut max_err = 0.0f64;
            for class in [AGENT_CLASS, HAZARD_CLASS] {
                let truths: Vec<_> = truth.objects_of(class).collect();
                let mut dets: Vec<_> = detections.iter().filter(|d| d.class == class).collect();
                for t in &truths {
                    let (px, py) = map.to_px(t.x, t.y);
                    let best = dets
                        .iter()
                        .enumerate()
                        .map(|(i, d)| (i, (d.x - px).hypot(d.y - py)))
                        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
                    match best {
                        Some((i, err)) if err <= 2.0 => {
                            max_err = max_err.max(err);
                            dets.swap_remove(i);
                        }
                        _ => misses += 1,
                    }
                }
                false_pos += dets.len() as u64;
            }
            (misses, false_pos, max_err)
        });
        let misses: u64 = per_frame.iter().map(|r| r.0).sum();
        let false_pos: u64 = per_frame.iter().map(|r| r.1).sum();
        let max_err = per_frame.iter().map(|r| r.2).fold(0.0, f64::max);
        all_ok &= misses == 0 && false_pos == 0;
        lines.push(format!("{env_name},{},{misses},{false_pos},{max_err:.3}", args.frames));
    }
    let body = lines.join("\n") + "\n";
    if let Some(path) = &args.out {
        if let Some(parent) = path.parent() {
            let _ = fs::create_dir_all(parent);
        }
        if let Err(e) = fs::write(path, &body) {
            return fail(e);
        }
        println!("wrote {}", path.display());
    }
    print!("{body}");
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn cmd_render(args: RenderArgs) -> ExitCode {
    let dir = out_root(args.out_dir);
    if let Err(e) = fs::create_dir_all(&dir) {
        return fail(e);
    }
    let mut env = match make_env_named(&args.env, args.seed) {
        Ok(e) => e,
        Err(e) => return fail(e),
    };
    let grid = env.action_grid();
    let mut frame = env.reset();
    for step in 0..=args.steps {
        let path = dir.join(format!("{}_{:03}.pgm", args.env, step));
        if let Err(e) = pgm::write_file(&frame, &path) {
            return fail(e);
        }
        if args.heatmaps {
            let z = template_detect(&frame, &env.templates(), DEFAULT_STRIDE, DEFAULT_TAU);
            for class in 0..z.n_classes {
                let hm = z.channel_frame(class);
                let path = dir.join(format!("{}_{:03}_class{}.pgm", args.env, step, class));
                if let Err(e) = pgm::write_file(&hm, &path) {
                    return fail(e);
                }
            }
        }
        if step == args.steps {
            break;
        }
        match env.step(grid[step % grid.len()]) {
            Ok(r) => {
                frame = r.observation;
                if r.done {
                    break;
                }
            }
            Err(e) => return fail(e),
        }
    }
    println!("wrote frames under {}", dir.display());
    ExitCode::SUCCESS
}

fn cmd_report(args: ReportArgs) -> ExitCode {
    let out = out_root(args.out_dir.or_else(|| Some(args.in_dir.clone())));
    match report::build(&args.in_dir, &out) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
