//! End-to-end orchestration over a commit directory: load both program
//! versions, generate tests and candidate assertions once, infer a spec
//! per version, diff the specs, and assemble everything a report needs.
//!
//! The pipeline is deterministic: with equal inputs and configuration it
//! produces identical results, and the only thing that may differ
//! between two such runs is the timing block of the manifest.

pub mod config;
pub mod reports;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::assertlang::equiv::DomainConfig;
use crate::assertlang::fuzz::{generate_candidates, Candidate};
use crate::assertlang::grammar::{build_grammar, Grammar};
use crate::assertlang::scope::scope_for_point;
use crate::delta::{
    compute_delta, match_ground_truth, parse_truth, reduce_equivalent, DeltaReport, MatchResult,
};
use crate::experiments::Pool;
use crate::inference::{infer_spec, point_seed, recheck_valid, Inferred};
use crate::minilang::ast::Unit;
use crate::minilang::parser::parse_unit;
use crate::minilang::points::{diff_points, PointDiff};
use crate::minilang::typecheck::check_unit;
use crate::mutation::{label_relevance, verify_witnesses, RelevanceLabel};
use crate::testgen::{generate_suite, shared_suite, TestCase, TestSuite};

pub use config::{Overrides, RunConfig};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PipelineError {
    /// Malformed inputs: commit layout, sources, config, truth file.
    #[error("{0}")]
    Input(String),
    /// A should-never-happen condition inside the pipeline itself.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Input(_) => 2,
            PipelineError::Internal(_) => 3,
        }
    }
}

fn input_err(msg: impl Into<String>) -> PipelineError {
    PipelineError::Input(msg.into())
}

/// A loaded commit: one class before, the same class after.
#[derive(Debug, Clone)]
pub struct CommitDir {
    pub root: PathBuf,
    /// Directory name; used as the commit id in reports.
    pub id: String,
    pub pre_path: PathBuf,
    pub post_path: PathBuf,
    pub pre_source: String,
    pub post_source: String,
    pub pre: Unit,
    pub post: Unit,
    pub truth_text: Option<String>,
    pub config_text: Option<String>,
}

fn sole_dl_file(dir: &Path) -> Result<PathBuf, PipelineError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| input_err(format!("cannot read {}: {e}", dir.display())))?;
    let mut dl: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "dl"))
        .collect();
    dl.sort();
    match dl.len() {
        0 => Err(input_err(format!("no .dl file in {}", dir.display()))),
        1 => Ok(dl.remove(0)),
        n => Err(input_err(format!(
            "expected exactly one .dl file in {}, found {n}",
            dir.display()
        ))),
    }
}

fn load_unit(path: &Path) -> Result<(String, Unit), PipelineError> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    let unit = parse_unit(&src)
        .map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    check_unit(&unit).map_err(|diags| {
        let lines: Vec<String> = diags
            .iter()
            .map(|d| format!("{}: {d}", path.display()))
            .collect();
        input_err(lines.join("\n"))
    })?;
    Ok((src, unit))
}

pub fn load_commit(root: &Path) -> Result<CommitDir, PipelineError> {
    if !root.is_dir() {
        return Err(input_err(format!("{} is not a directory", root.display())));
    }
    let pre_dir = root.join("pre");
    let post_dir = root.join("post");
    if !post_dir.is_dir() {
        return Err(input_err(format!("missing post/ directory in {}", root.display())));
    }
    if !pre_dir.is_dir() {
        return Err(input_err(format!("missing pre/ directory in {}", root.display())));
    }
    let pre_path = sole_dl_file(&pre_dir)?;
    let post_path = sole_dl_file(&post_dir)?;
    let (pre_source, pre) = load_unit(&pre_path)?;
    let (post_source, post) = load_unit(&post_path)?;
    if pre.name != post.name {
        return Err(input_err(format!(
            "unit names differ across versions: {} vs {}",
            pre.name, post.name
        )));
    }
    let read_opt = |p: PathBuf| -> Result<Option<String>, PipelineError> {
        if p.is_file() {
            std::fs::read_to_string(&p)
                .map(Some)
                .map_err(|e| input_err(format!("cannot read {}: {e}", p.display())))
        } else {
            Ok(None)
        }
    };
    let id = root
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "commit".to_string());
    Ok(CommitDir {
        id,
        pre_path,
        post_path,
        pre_source,
        post_source,
        pre,
        post,
        truth_text: read_opt(root.join("truth.delta"))?,
        config_text: read_opt(root.join("config.ini"))?,
        root: root.to_path_buf(),
    })
}

/// Effective config for a commit: defaults, then the commit's config.ini,
/// then command line overrides. Also resolves the output directory.
pub fn effective_config(
    commit: &CommitDir,
    ov: &Overrides,
) -> Result<(RunConfig, PathBuf), PipelineError> {
    let mut cfg = RunConfig::default();
    let mut out_from_ini = None;
    if let Some(text) = &commit.config_text {
        out_from_ini = config::apply_ini(&mut cfg, text)?;
    }
    config::apply_overrides(&mut cfg, ov);
    let out = if let Some(o) = &ov.out {
        o.clone()
    } else if let Some(o) = out_from_ini {
        if o.is_absolute() { o } else { commit.root.join(o) }
    } else {
        commit.root.join("out")
    };
    Ok((cfg, out))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub commit_id: String,
    pub unit_name: String,
    pub config: RunConfig,
    /// Hash of the canonical config serialization.
    pub config_hash: String,
    /// sha256 of every input file that can affect the run.
    pub input_hashes: BTreeMap<String, String>,
    /// Derived per-point candidate seeds.
    pub point_seeds: BTreeMap<String, u64>,
    pub suite_hashes: BTreeMap<String, String>,
    /// The only run-to-run varying block.
    pub timings_ms: BTreeMap<String, u64>,
}

pub struct PipelineOutput {
    pub commit_id: String,
    pub unit_name: String,
    pub diff: PointDiff,
    pub candidates: Vec<Candidate>,
    pub grammar_hash: String,
    pub pre_suite: TestSuite,
    pub post_suite: TestSuite,
    pub pre: Inferred,
    pub post: Inferred,
    pub shared: Vec<TestCase>,
    pub relevance: Vec<RelevanceLabel>,
    pub report: DeltaReport,
    pub truth: Option<MatchResult>,
    pub manifest: RunManifest,
    pub warnings: Vec<String>,
}

fn sha(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Identifies one grammar instantiation: the vocabulary inputs per point,
/// independent of the seed that samples from it.
fn hash_grammars(grammars: &[(String, Grammar)], quota: usize) -> String {
    let mut h = Sha256::new();
    h.update(format!("max_nodes={};quota={quota}\n", crate::assertlang::grammar::MAX_NODES));
    for (label, g) in grammars {
        h.update(label.as_bytes());
        h.update(b"|ints:");
        for i in &g.int_lits {
            h.update(format!("{i},"));
        }
        h.update(b"|reals:");
        for r in &g.real_lits {
            h.update(crate::values::format_real(*r));
            h.update(b",");
        }
        h.update(b"|guards:");
        for f in &g.guards {
            h.update(f.print());
            h.update(b";");
        }
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Candidate universes are built once from both versions and shared by
/// both inference passes, so the two status tables always classify the
/// same keys.
pub fn build_candidates(
    pre: &Unit,
    post: &Unit,
    diff: &PointDiff,
    quota: usize,
    seed: u64,
) -> Result<(Vec<Candidate>, String), PipelineError> {
    let mut all = Vec::new();
    let mut grammars = Vec::new();
    for point in &diff.shared {
        let scope = scope_for_point(pre, post, point).map_err(|e| {
            PipelineError::Internal(format!("shared point {} failed to scope: {e}", point.label()))
        })?;
        let grammar = build_grammar(pre, post, &scope);
        all.extend(generate_candidates(&grammar, quota, point_seed(seed, &point.label())));
        grammars.push((point.label(), grammar));
    }
    Ok((all, hash_grammars(&grammars, quota)))
}

/// Run everything: suites, shared candidates, one inference per version,
/// relevance labels, the delta, its reduction, and the optional ground
/// truth match. Soundness audits run on both versions before the result
/// is returned.
pub fn run_pipeline(commit: &CommitDir, cfg: &RunConfig) -> Result<PipelineOutput, PipelineError> {
    let started = Instant::now();
    let mut timings: BTreeMap<String, u64> = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut stage = Instant::now();
    let lap = |timings: &mut BTreeMap<String, u64>, stage: &mut Instant, name: &str| {
        timings.insert(name.to_string(), stage.elapsed().as_millis() as u64);
        *stage = Instant::now();
    };

    let diff = diff_points(&commit.pre, &commit.post)
        .map_err(|e| input_err(format!("{e}")))?;
    lap(&mut timings, &mut stage, "diff_points");

    let (candidates, grammar_hash) =
        build_candidates(&commit.pre, &commit.post, &diff, cfg.candidates, cfg.seed)?;
    lap(&mut timings, &mut stage, "candidates");

    let gen_cfg = cfg.gen_config();
    let pre_suite = generate_suite(&commit.pre, &gen_cfg)
        .map_err(|e| input_err(format!("test generation on pre failed: {e}")))?;
    let post_suite = generate_suite(&commit.post, &gen_cfg)
        .map_err(|e| input_err(format!("test generation on post failed: {e}")))?;
    lap(&mut timings, &mut stage, "testgen");

    let spec_cfg = cfg.spec_config();
    let pre = infer_spec(&commit.pre, &pre_suite, &candidates, &spec_cfg)
        .map_err(|e| PipelineError::Internal(format!("pre inference: {e}")))?;
    lap(&mut timings, &mut stage, "infer_pre");
    let post = infer_spec(&commit.post, &post_suite, &candidates, &spec_cfg)
        .map_err(|e| PipelineError::Internal(format!("post inference: {e}")))?;
    lap(&mut timings, &mut stage, "infer_post");
    warnings.extend(pre.warnings.iter().map(|w| format!("pre: {w}")));
    warnings.extend(post.warnings.iter().map(|w| format!("post: {w}")));

    // soundness audit: a VALID entry must survive re-evaluation
    for (side, inferred, suite) in [("pre", &pre, &pre_suite), ("post", &post, &post_suite)] {
        let offenders = recheck_valid(&inferred.table, &inferred.runs, &spec_cfg);
        if !offenders.is_empty() {
            return Err(PipelineError::Internal(format!(
                "{side}: VALID entries failed re-evaluation: {}",
                offenders.join(", ")
            )));
        }
        if let Some(matrix) = &inferred.matrix {
            let bad = verify_witnesses(matrix, &inferred.table, &inferred.mutants, suite);
            if !bad.is_empty() {
                return Err(PipelineError::Internal(format!(
                    "{side}: kill witnesses failed replay: {}",
                    bad.join(", ")
                )));
            }
        }
    }
    lap(&mut timings, &mut stage, "audit");

    let shared = shared_suite(&pre_suite.tests, &post_suite.tests, &commit.pre, &commit.post);
    let relevance = label_relevance(
        &post.mutants,
        &commit.pre,
        &commit.post,
        &shared,
        &diff.changed_methods,
        cfg.relevance,
        cfg.step_budget,
    )
    .map_err(|e| input_err(format!("{e}")))?;
    lap(&mut timings, &mut stage, "relevance");

    let mut report = compute_delta(&commit.id, &pre.table, &post.table, cfg.mode)
        .map_err(|e| PipelineError::Internal(format!("{e}")))?;
    reduce_equivalent(&mut report, &commit.pre, &commit.post, &DomainConfig::default());
    lap(&mut timings, &mut stage, "delta");

    let truth = match &commit.truth_text {
        Some(text) => {
            let lines = parse_truth(text)
                .map_err(|e| input_err(format!("truth.delta: {e}")))?;
            let m = match_ground_truth(
                &report,
                &lines,
                &commit.pre,
                &commit.post,
                &DomainConfig::default(),
            );
            lap(&mut timings, &mut stage, "truth");
            Some(m)
        }
        None => None,
    };

    let config_json = serde_json::to_string(cfg)
        .map_err(|e| PipelineError::Internal(format!("config serialization: {e}")))?;
    let config_hash = sha(config_json.as_bytes());

    let mut input_hashes = BTreeMap::new();
    input_hashes.insert("pre.dl".to_string(), sha(commit.pre_source.as_bytes()));
    input_hashes.insert("post.dl".to_string(), sha(commit.post_source.as_bytes()));
    if let Some(t) = &commit.truth_text {
        input_hashes.insert("truth.delta".to_string(), sha(t.as_bytes()));
    }
    if let Some(c) = &commit.config_text {
        input_hashes.insert("config.ini".to_string(), sha(c.as_bytes()));
    }

    let point_seeds: BTreeMap<String, u64> = diff
        .shared
        .iter()
        .map(|p| (p.label(), point_seed(cfg.seed, &p.label())))
        .collect();

    let mut suite_hashes = BTreeMap::new();
    suite_hashes.insert("pre".to_string(), pre_suite.content_hash.clone());
    suite_hashes.insert("post".to_string(), post_suite.content_hash.clone());

    report.provenance.insert("seed".to_string(), cfg.seed.to_string());
    report.provenance.insert("config_hash".to_string(), config_hash.clone());
    report.provenance.insert("grammar_hash".to_string(), grammar_hash.clone());
    report
        .provenance
        .insert("suite_pre".to_string(), pre_suite.content_hash.clone());
    report
        .provenance
        .insert("suite_post".to_string(), post_suite.content_hash.clone());
    report
        .provenance
        .insert("tool_version".to_string(), env!("CARGO_PKG_VERSION").to_string());

    timings.insert("total".to_string(), started.elapsed().as_millis() as u64);
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        commit_id: commit.id.clone(),
        unit_name: commit.post.name.clone(),
        config: cfg.clone(),
        config_hash,
        input_hashes,
        point_seeds,
        suite_hashes,
        timings_ms: timings,
    };

    Ok(PipelineOutput {
        commit_id: commit.id.clone(),
        unit_name: commit.post.name.clone(),
        diff,
        candidates,
        grammar_hash,
        pre_suite,
        post_suite,
        pre,
        post,
        shared,
        relevance,
        report,
        truth,
        manifest,
        warnings,
    })
}

/// The three assertion pools the simulations draw from, as post-version
/// kill matrix rows. Pool members are the partition representatives;
/// collapsed aliases and merged equivalents stay out so a pool never
/// holds two copies of the same assertion.
pub fn report_pools(report: &DeltaReport) -> (Pool, Pool, Pool) {
    let rows = |entries: &[crate::delta::DeltaEntry]| -> Vec<(String, String)> {
        entries.iter().map(|e| (e.point.clone(), e.key.clone())).collect()
    };
    let added = Pool::new("added", rows(&report.added));
    let preserved = Pool::new("preserved", rows(&report.preserved));
    let mut all = rows(&report.added);
    all.extend(rows(&report.preserved));
    let all_valid_post = Pool::new("allValidPost", all);
    (added, preserved, all_valid_post)
}
