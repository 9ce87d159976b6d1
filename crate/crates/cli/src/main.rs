//! Command line front end. Every subcommand takes a commit directory
//! (`pre/<Unit>.dl` + `post/<Unit>.dl`, optional `truth.delta` and
//! `config.ini`) and writes its reports under the out directory.
//!
//! Exit codes: 0 success, 2 malformed input, 3 internal invariant
//! violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use deltaspec_core::assertlang::DomainConfig;
use deltaspec_core::delta::{match_ground_truth, parse_truth, DeltaMode, DeltaReport, MatchResult};
use deltaspec_core::experiments::{simulate_fixed_size, simulate_to_target, SimError};
use deltaspec_core::inference::infer_spec;
use deltaspec_core::minilang::{check_unit, diff_points, parse_unit};
use deltaspec_core::mutation::{generate_mutants, label_relevance, RelevanceMode};
use deltaspec_core::pipeline::config::{parse_mode, parse_relevance};
use deltaspec_core::pipeline::{
    build_candidates, effective_config, load_commit, report_pools, reports, run_pipeline,
    CommitDir, Overrides, PipelineError, RunConfig,
};
use deltaspec_core::testgen::{generate_suite, shared_suite};

#[derive(Parser)]
#[command(
    name = "deltaspec",
    version,
    about = "Infers which assertions a commit adds, removes, and preserves"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Flags shared by every commit-oriented subcommand. Anything left unset
/// falls back to the commit's config.ini, then to built-in defaults.
#[derive(Args, Default)]
struct RunFlags {
    /// Base seed for candidate sampling and test generation.
    #[arg(long)]
    seed: Option<u64>,
    /// Candidate quota per program point.
    #[arg(long)]
    candidates: Option<usize>,
    /// Observations required before an unfalsified assertion counts as valid.
    #[arg(long)]
    min_support: Option<u32>,
    /// Delta membership rule: paper (set difference) or strict
    /// (difference plus falsification evidence).
    #[arg(long, value_parser = parse_mode)]
    mode: Option<DeltaMode>,
    /// Mutant relevance rule: literal or refined.
    #[arg(long, value_parser = parse_relevance)]
    relevance: Option<RelevanceMode>,
    /// Repetitions per simulation cell.
    #[arg(long)]
    reps: Option<u32>,
    /// Report directory. Defaults to config.ini's `out`, then <commit>/out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also draw rq3.svg.
    #[arg(long)]
    svg: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the whole pipeline and write every report file.
    Run {
        commit: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Parse and check one .dl file, or both sides of a commit directory.
    Parse { path: PathBuf },
    /// Generate both test suites; writes suite.pre.json and suite.post.json.
    Testgen {
        commit: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Classify candidate assertions; writes status.<side>.json.
    Infer {
        commit: PathBuf,
        /// pre or post; both when omitted.
        #[arg(long)]
        side: Option<Side>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Enumerate post-version mutants; writes mutants.json without labels.
    Mutants {
        commit: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Label post-version mutants as commit-relevant or not.
    Relevance {
        commit: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Write the kill matrix (kills.csv) and its score summary (kills.json).
    Kills {
        commit: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Fixed-size selection simulation, added pool vs preserved pool.
    Rq3 {
        commit: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Cost-to-target simulation over added, allValidPost, and preserved.
    Rq4 {
        commit: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Compare an inferred delta against the commit's truth.delta.
    MatchTruth {
        commit: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Side {
    Pre,
    Post,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), PipelineError> {
    match cmd {
        Cmd::Run { commit, flags } => cmd_run(&commit, &flags),
        Cmd::Parse { path } => cmd_parse(&path),
        Cmd::Testgen { commit, flags } => cmd_testgen(&commit, &flags),
        Cmd::Infer { commit, side, flags } => cmd_infer(&commit, side, &flags),
        Cmd::Mutants { commit, flags } => cmd_mutants(&commit, &flags),
        Cmd::Relevance { commit, flags } => cmd_relevance(&commit, &flags),
        Cmd::Kills { commit, flags } => cmd_kills(&commit, &flags),
        Cmd::Rq3 { commit, flags } => cmd_rq3(&commit, &flags),
        Cmd::Rq4 { commit, flags } => cmd_rq4(&commit, &flags),
        Cmd::MatchTruth { commit, flags } => cmd_match_truth(&commit, &flags),
    }
}

fn input(e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Input(e.to_string())
}

fn overrides(flags: &RunFlags) -> Overrides {
    Overrides {
        seed: flags.seed,
        candidates: flags.candidates,
        min_support: flags.min_support,
        mode: flags.mode,
        relevance: flags.relevance,
        reps: flags.reps,
        out: flags.out.clone(),
        svg: flags.svg,
    }
}

fn setup(root: &Path, flags: &RunFlags) -> Result<(CommitDir, RunConfig, PathBuf), PipelineError> {
    let commit = load_commit(root)?;
    let (cfg, out) = effective_config(&commit, &overrides(flags))?;
    Ok((commit, cfg, out))
}

fn announce(written: &[PathBuf]) {
    for p in written {
        println!("wrote {}", p.display());
    }
}

fn cmd_run(root: &Path, flags: &RunFlags) -> Result<(), PipelineError> {
    let (commit, cfg, out) = setup(root, flags)?;
    let output = run_pipeline(&commit, &cfg)?;
    let written = reports::write_run_reports(&out, &output)?;
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    let r = &output.report;
    println!(
        "{} ({}): {} added, {} removed, {} preserved, {} undetermined",
        r.unit_name,
        r.commit_id,
        r.added.len(),
        r.removed.len(),
        r.preserved.len(),
        r.undetermined.len()
    );
    if let Some(m) = &output.truth {
        print_match(m);
    }
    announce(&written);
    Ok(())
}

fn cmd_parse(path: &Path) -> Result<(), PipelineError> {
    if path.is_dir() {
        let commit = load_commit(path)?;
        println!(
            "ok: class {} ({} and {})",
            commit.pre.name,
            commit.pre_path.display(),
            commit.post_path.display()
        );
        return Ok(());
    }
    let src = std::fs::read_to_string(path)
        .map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
    let unit = parse_unit(&src).map_err(|e| input(format!("{}: {e}", path.display())))?;
    check_unit(&unit).map_err(|diags| {
        let lines: Vec<String> =
            diags.iter().map(|d| format!("{}: {d}", path.display())).collect();
        input(lines.join("\n"))
    })?;
    println!(
        "ok: class {} ({} fields, {} methods)",
        unit.name,
        unit.fields.len(),
        unit.methods.len()
    );
    Ok(())
}

fn cmd_testgen(root: &Path, flags: &RunFlags) -> Result<(), PipelineError> {
    let (commit, cfg, out) = setup(root, flags)?;
    let gen = cfg.gen_config();
    let pre = generate_suite(&commit.pre, &gen)
        .map_err(|e| input(format!("test generation on pre failed: {e}")))?;
    let post = generate_suite(&commit.post, &gen)
        .map_err(|e| input(format!("test generation on post failed: {e}")))?;
    println!("{} pre tests, {} post tests", pre.tests.len(), post.tests.len());
    let written = vec![
        reports::write_suite_report(&out, "pre", &pre)?,
        reports::write_suite_report(&out, "post", &post)?,
    ];
    announce(&written);
    Ok(())
}

fn cmd_infer(root: &Path, side: Option<Side>, flags: &RunFlags) -> Result<(), PipelineError> {
    let (commit, cfg, out) = setup(root, flags)?;
    let diff = diff_points(&commit.pre, &commit.post).map_err(|e| input(format!("{e}")))?;
    let (candidates, _) =
        build_candidates(&commit.pre, &commit.post, &diff, cfg.candidates, cfg.seed)?;
    let gen = cfg.gen_config();
    let spec = cfg.spec_config();
    let mut written = Vec::new();
    for (name, unit) in [(Side::Pre, &commit.pre), (Side::Post, &commit.post)] {
        if side.is_some_and(|s| s != name) {
            continue;
        }
        let label = if name == Side::Pre { "pre" } else { "post" };
        let suite = generate_suite(unit, &gen)
            .map_err(|e| input(format!("test generation on {label} failed: {e}")))?;
        let inferred = infer_spec(unit, &suite, &candidates, &spec)
            .map_err(|e| PipelineError::Internal(format!("{label} inference: {e}")))?;
        for w in &inferred.warnings {
            eprintln!("warning: {w}");
        }
        written.push(reports::write_status_report(&out, label, &inferred.table, &cfg)?);
    }
    announce(&written);
    Ok(())
}

fn cmd_mutants(root: &Path, flags: &RunFlags) -> Result<(), PipelineError> {
    let (commit, _cfg, out) = setup(root, flags)?;
    let mutants = generate_mutants(&commit.post, &[]);
    println!("{} mutants of {}", mutants.len(), commit.post.name);
    let written = vec![reports::write_mutants_report(&out, &commit.post.name, &mutants, &[])?];
    announce(&written);
    Ok(())
}

fn cmd_relevance(root: &Path, flags: &RunFlags) -> Result<(), PipelineError> {
    let (commit, cfg, out) = setup(root, flags)?;
    let diff = diff_points(&commit.pre, &commit.post).map_err(|e| input(format!("{e}")))?;
    let gen = cfg.gen_config();
    let pre = generate_suite(&commit.pre, &gen)
        .map_err(|e| input(format!("test generation on pre failed: {e}")))?;
    let post = generate_suite(&commit.post, &gen)
        .map_err(|e| input(format!("test generation on post failed: {e}")))?;
    let shared = shared_suite(&pre.tests, &post.tests, &commit.pre, &commit.post);
    let mutants = generate_mutants(&commit.post, &[]);
    let labels = label_relevance(
        &mutants,
        &commit.pre,
        &commit.post,
        &shared,
        &diff.changed_methods,
        cfg.relevance,
        cfg.step_budget,
    )
    .map_err(|e| input(format!("{e}")))?;
    let relevant = labels.iter().filter(|l| l.value.as_str() == "RELEVANT").count();
    println!("{} of {} mutants relevant ({} shared tests)", relevant, mutants.len(), shared.len());
    let written = vec![reports::write_mutants_report(&out, &commit.post.name, &mutants, &labels)?];
    announce(&written);
    Ok(())
}

fn require_matrix(cfg: &RunConfig, what: &str) -> Result<(), PipelineError> {
    if cfg.mutation_filter {
        Ok(())
    } else {
        Err(input(format!("{what} needs the kill matrix; enable mutation_filter")))
    }
}

fn cmd_kills(root: &Path, flags: &RunFlags) -> Result<(), PipelineError> {
    let (commit, cfg, out) = setup(root, flags)?;
    require_matrix(&cfg, "kills")?;
    let output = run_pipeline(&commit, &cfg)?;
    let written = reports::write_kills_reports(&out, &output)?;
    announce(&written);
    Ok(())
}

/// Pool resolution failures mean the report and matrix disagree, which a
/// single run can never produce.
fn sim_err(e: SimError) -> PipelineError {
    match e {
        SimError::InvalidConfig(_) | SimError::NoRelevantMutants => input(e),
        SimError::UnknownRow { .. } | SimError::UnlabeledMutant(_) => {
            PipelineError::Internal(e.to_string())
        }
    }
}

fn cmd_rq3(root: &Path, flags: &RunFlags) -> Result<(), PipelineError> {
    let (commit, cfg, out) = setup(root, flags)?;
    require_matrix(&cfg, "rq3")?;
    let output = run_pipeline(&commit, &cfg)?;
    let matrix = output.post.matrix.as_ref().expect("mutation filter keeps the matrix");
    let (added, preserved, _) = report_pools(&output.report);
    let result =
        simulate_fixed_size(matrix, &output.relevance, &cfg.sim_config(), &added, &preserved)
            .map_err(sim_err)?;
    for (pool, size) in &result.exhausted {
        eprintln!("note: pool {pool} has fewer than {size} assertions; drawing all of them");
    }
    for pool in &result.empty_pools {
        eprintln!("note: pool {pool} is empty; its rows are absent");
    }
    let written = reports::write_rq3(&out, &result, cfg.svg)?;
    announce(&written);
    Ok(())
}

fn cmd_rq4(root: &Path, flags: &RunFlags) -> Result<(), PipelineError> {
    let (commit, cfg, out) = setup(root, flags)?;
    require_matrix(&cfg, "rq4")?;
    let output = run_pipeline(&commit, &cfg)?;
    let matrix = output.post.matrix.as_ref().expect("mutation filter keeps the matrix");
    let (added, preserved, all_valid_post) = report_pools(&output.report);
    let pools = [added, all_valid_post, preserved];
    let result = simulate_to_target(matrix, &output.relevance, &cfg.sim_config(), &pools)
        .map_err(sim_err)?;
    for pool in &result.empty_pools {
        eprintln!("note: pool {pool} is empty; its rows are absent");
    }
    let written = reports::write_rq4(&out, &result)?;
    announce(&written);
    Ok(())
}

fn print_match(m: &MatchResult) {
    let expressible = m
        .lines
        .iter()
        .filter(|(_, o)| !matches!(o, deltaspec_core::delta::TruthOutcome::Inexpressible { .. }))
        .count();
    let matched = m
        .lines
        .iter()
        .filter(|(_, o)| matches!(o, deltaspec_core::delta::TruthOutcome::Matched { .. }))
        .count();
    if m.recall_defined {
        println!(
            "truth: matched {matched} of {expressible} expressible lines (recall {})",
            m.recall
        );
    } else {
        println!("truth: no expressible lines, recall undefined");
    }
}

/// Evaluates the delta a previous `run` wrote to <out>/delta.json, or
/// reruns the pipeline when there is none. Assertion texts are reparsed
/// from the report keys, so a reloaded report matches like a fresh one.
fn cmd_match_truth(root: &Path, flags: &RunFlags) -> Result<(), PipelineError> {
    let (commit, cfg, out) = setup(root, flags)?;
    let Some(truth_text) = commit.truth_text.clone() else {
        return Err(input(format!("no truth.delta in {}", commit.root.display())));
    };
    let truth = parse_truth(&truth_text).map_err(|e| input(format!("truth.delta: {e}")))?;
    let delta_path = out.join("delta.json");
    let report: DeltaReport = if delta_path.is_file() {
        let text = std::fs::read_to_string(&delta_path)
            .map_err(|e| input(format!("cannot read {}: {e}", delta_path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| input(format!("{}: {e}", delta_path.display())))?
    } else {
        run_pipeline(&commit, &cfg)?.report
    };
    let m = match_ground_truth(&report, &truth, &commit.pre, &commit.post, &DomainConfig::default());
    print_match(&m);
    let written = vec![reports::write_truth_report(&out, &commit.id, &m)?];
    announce(&written);
    Ok(())
}
