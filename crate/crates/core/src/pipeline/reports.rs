//! Report files. Every writer is a pure function of pipeline results, so
//! two runs over the same inputs emit byte-identical files; wall-clock
//! timings appear only inside the manifest's timing block.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::delta::{DeltaEntry, Direction, MatchResult, TruthOutcome, TruthTag};
use crate::experiments::{rms, CostResult, ScoreError, SimResult};
use crate::inference::{Discard, StatusTable};
use crate::mutation::{Mutant, Relevance, RelevanceLabel};
use crate::testgen::TestSuite;

use super::{PipelineError, PipelineOutput};

fn io_err(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Input(format!("cannot write {}: {e}", path.display()))
}

fn write_file(out: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, PipelineError> {
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let path = out.join(name);
    std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<PathBuf, PipelineError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| PipelineError::Internal(format!("serializing {name}: {e}")))?;
    text.push('\n');
    write_file(out, name, text.as_bytes())
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// status.<side>.json for one inference table.
pub fn write_status_report(
    out: &Path,
    side: &str,
    table: &StatusTable,
    cfg: &super::RunConfig,
) -> Result<PathBuf, PipelineError> {
    write_json(out, &format!("status.{side}.json"), &status_file(side, table, cfg))
}

/// suite.<side>.json for one generated suite.
pub fn write_suite_report(
    out: &Path,
    side: &str,
    suite: &TestSuite,
) -> Result<PathBuf, PipelineError> {
    write_json(out, &format!("suite.{side}.json"), &suite_file(suite))
}

/// mutants.json; an empty label slice leaves every relevance null.
pub fn write_mutants_report(
    out: &Path,
    unit: &str,
    mutants: &[Mutant],
    labels: &[RelevanceLabel],
) -> Result<PathBuf, PipelineError> {
    write_json(out, "mutants.json", &mutants_file(unit, mutants, labels))
}

/// truth_match.json for a completed ground-truth comparison.
pub fn write_truth_report(
    out: &Path,
    commit: &str,
    m: &MatchResult,
) -> Result<PathBuf, PipelineError> {
    write_json(out, "truth_match.json", &truth_file(commit, m))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct StatusFile {
    version: String,
    config: StatusConfig,
    entries: Vec<StatusLine>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct StatusConfig {
    min_support: u32,
    eval_error_policy: String,
    mutation_filter: bool,
    keep_representatives: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct StatusLine {
    assertion: String,
    status: String,
    eval_count: u32,
    kill_count: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    discard: Option<DiscardLine>,
    #[serde(skip_serializing_if = "Option::is_none")]
    falsified_by: Option<FalsifiedLine>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct DiscardLine {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    representative: Option<String>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct FalsifiedLine {
    test_id: String,
    obs_index: usize,
}

fn status_file(side: &str, table: &StatusTable, cfg: &super::RunConfig) -> StatusFile {
    let entries = table
        .entries
        .iter()
        .map(|((point, key), e)| StatusLine {
            assertion: format!("{point} :: {key}"),
            status: e.status.label().to_string(),
            eval_count: e.eval_count,
            kill_count: e.kill_count,
            discard: e.discard.as_ref().map(|d| match d {
                Discard::NoKills => DiscardLine { kind: "NO_KILLS".into(), representative: None },
                Discard::Redundant { representative } => DiscardLine {
                    kind: "REDUNDANT".into(),
                    representative: Some(representative.clone()),
                },
            }),
            falsified_by: e.falsified_by.as_ref().map(|f| FalsifiedLine {
                test_id: f.test_id.clone(),
                obs_index: f.obs_index,
            }),
        })
        .collect();
    StatusFile {
        version: side.to_string(),
        config: StatusConfig {
            min_support: cfg.min_support,
            eval_error_policy: match cfg.eval_error_policy {
                crate::inference::EvalErrorPolicy::Falsifies => "falsifies".into(),
                crate::inference::EvalErrorPolicy::Skips => "skips".into(),
            },
            mutation_filter: cfg.mutation_filter,
            keep_representatives: cfg.keep_representatives,
        },
        entries,
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SuiteFile {
    unit: String,
    config: SuiteConfig,
    content_hash: String,
    tests: Vec<SuiteTest>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SuiteConfig {
    seed: u64,
    max_tests: usize,
    max_calls_per_test: usize,
    step_budget: u64,
    int_pool: Vec<i64>,
    /// Canonical tokens; JSON cannot hold NaN directly.
    real_pool: Vec<String>,
    array_len_min: usize,
    array_len_max: usize,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SuiteTest {
    id: String,
    calls: Vec<String>,
}

fn suite_file(suite: &TestSuite) -> SuiteFile {
    SuiteFile {
        unit: suite.unit_name.clone(),
        config: SuiteConfig {
            seed: suite.config.seed,
            max_tests: suite.config.max_tests,
            max_calls_per_test: suite.config.max_calls_per_test,
            step_budget: suite.config.step_budget,
            int_pool: suite.config.int_pool.clone(),
            real_pool: suite
                .config
                .real_pool
                .iter()
                .map(|&r| crate::values::format_real(r))
                .collect(),
            array_len_min: suite.config.array_len_min,
            array_len_max: suite.config.array_len_max,
        },
        content_hash: suite.content_hash.clone(),
        tests: suite
            .tests
            .iter()
            .map(|t| SuiteTest {
                id: t.id.clone(),
                calls: t.calls.iter().map(|c| c.canon()).collect(),
            })
            .collect(),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CandidatesFile {
    grammar_hash: String,
    quota: usize,
    /// Normalized candidate texts per point label.
    points: BTreeMap<String, Vec<String>>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct MutantsFile {
    unit: String,
    side: String,
    mutants: Vec<MutantLine>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct MutantLine {
    id: String,
    operator: String,
    location: String,
    change: String,
    relevance: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<String>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct KillsSummary {
    unit: String,
    assertions: usize,
    mutants: usize,
    killed_by_assertions: usize,
    mutation_score: Option<f64>,
    relevant: usize,
    killed_relevant: usize,
    rms: Option<f64>,
    implicit_kills: Vec<String>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct TruthFile {
    commit: String,
    recall: f64,
    recall_defined: bool,
    expressible: usize,
    matched: usize,
    lines: Vec<TruthFileLine>,
    surplus_added: Vec<String>,
    surplus_removed: Vec<String>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct TruthFileLine {
    tag: String,
    point: String,
    text: String,
    outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    matched_key: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

fn truth_file(commit: &str, m: &MatchResult) -> TruthFile {
    let mut expressible = 0usize;
    let mut matched = 0usize;
    let lines = m
        .lines
        .iter()
        .map(|(line, outcome)| {
            let tag = match line.tag {
                TruthTag::Added => "+",
                TruthTag::Removed => "-",
            };
            let (name, matched_key, reason) = match outcome {
                TruthOutcome::Matched { report_key } => {
                    expressible += 1;
                    matched += 1;
                    ("MATCHED", Some(report_key.clone()), None)
                }
                TruthOutcome::Unmatched => {
                    expressible += 1;
                    ("UNMATCHED", None, None)
                }
                TruthOutcome::Inexpressible { reason } => {
                    ("INEXPRESSIBLE", None, Some(reason.clone()))
                }
            };
            TruthFileLine {
                tag: tag.to_string(),
                point: line.point.clone(),
                text: line.text.clone(),
                outcome: name.to_string(),
                matched_key,
                reason,
            }
        })
        .collect();
    TruthFile {
        commit: commit.to_string(),
        recall: m.recall,
        recall_defined: m.recall_defined,
        expressible,
        matched,
        lines,
        surplus_added: m.surplus_added.clone(),
        surplus_removed: m.surplus_removed.clone(),
    }
}

fn delta_md(output: &PipelineOutput) -> String {
    let report = &output.report;
    let mut md = String::new();
    md.push_str(&format!(
        "# delta specification for {} ({})\n",
        report.unit_name, report.commit_id
    ));
    md.push_str(&format!(
        "# mode: {} | seed: {}\n",
        match report.mode {
            crate::delta::DeltaMode::Paper => "paper",
            crate::delta::DeltaMode::Strict => "strict",
        },
        output.manifest.config.seed
    ));

    let render = |md: &mut String, sign: char, entries: &[DeltaEntry]| {
        if entries.is_empty() {
            md.push_str("#   (none)\n");
            return;
        }
        for e in entries {
            md.push_str(&format!("{sign} {} :: {}\n", e.point, e.key));
            for alt in e.aliases.iter().chain(&e.equivalents) {
                md.push_str(&format!("#     (also: {alt})\n"));
            }
        }
    };

    md.push_str("\n# added\n");
    render(&mut md, '+', &report.added);
    md.push_str("\n# removed\n");
    render(&mut md, '-', &report.removed);

    md.push_str("\n# preserved\n");
    if report.preserved.is_empty() {
        md.push_str("#   (none)\n");
    }
    for e in &report.preserved {
        md.push_str(&format!("#   {} :: {}\n", e.point, e.key));
    }

    if !report.undetermined.is_empty() {
        md.push_str("\n# undetermined\n");
        for u in &report.undetermined {
            let dir = match u.direction {
                Direction::WouldBeAdded => "would be added",
                Direction::WouldBeRemoved => "would be removed",
            };
            md.push_str(&format!(
                "#   ~ {} :: {} ({dir}; counterpart {})\n",
                u.point, u.key, u.counterpart_status
            ));
        }
    }
    if !report.reduction_skipped.is_empty() {
        md.push_str(&format!(
            "\n# equivalence reduction skipped at: {}\n",
            report.reduction_skipped.join(", ")
        ));
    }
    md
}

/// Everything `run` owes the output directory. Returns the paths written.
pub fn write_run_reports(
    out: &Path,
    output: &PipelineOutput,
) -> Result<Vec<PathBuf>, PipelineError> {
    let mut written = Vec::new();

    written.push(write_json(out, "delta.json", &output.report)?);
    written.push(write_file(out, "delta.md", delta_md(output).as_bytes())?);

    let cfg = &output.manifest.config;
    written.push(write_json(out, "status.pre.json", &status_file("pre", &output.pre.table, cfg))?);
    written.push(write_json(
        out,
        "status.post.json",
        &status_file("post", &output.post.table, cfg),
    )?);
    written.push(write_json(out, "suite.pre.json", &suite_file(&output.pre_suite))?);
    written.push(write_json(out, "suite.post.json", &suite_file(&output.post_suite))?);

    let mut points: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for c in &output.candidates {
        points.entry(c.point.label()).or_default().push(c.key.clone());
    }
    for texts in points.values_mut() {
        texts.sort();
    }
    written.push(write_json(
        out,
        "candidates.json",
        &CandidatesFile {
            grammar_hash: output.grammar_hash.clone(),
            quota: cfg.candidates,
            points,
        },
    )?);

    written.push(write_json(
        out,
        "mutants.json",
        &mutants_file(&output.unit_name, &output.post.mutants, &output.relevance),
    )?);
    written.extend(write_kills_reports(out, output)?);

    if let Some(truth) = &output.truth {
        written.push(write_json(
            out,
            "truth_match.json",
            &truth_file(&output.commit_id, truth),
        )?);
    }

    written.push(write_json(out, "manifest.json", &output.manifest)?);
    Ok(written)
}

fn mutants_file(unit: &str, mutants: &[Mutant], labels: &[RelevanceLabel]) -> MutantsFile {
    let labels: BTreeMap<&str, &RelevanceLabel> =
        labels.iter().map(|l| (l.mutant_id.as_str(), l)).collect();
    MutantsFile {
        unit: unit.to_string(),
        side: "post".to_string(),
        mutants: mutants
            .iter()
            .map(|m| {
                let id = m.id();
                let label = labels.get(id.as_str());
                MutantLine {
                    operator: m.op.as_str().to_string(),
                    location: m.method.clone(),
                    change: m.change.clone(),
                    relevance: label.map(|l| l.value.as_str().to_string()),
                    witness: label.and_then(|l| l.witness_test_id.clone()),
                    id,
                }
            })
            .collect(),
    }
}

/// kills.csv has one row per assertion and one 0/1 column per mutant;
/// kills.json summarizes scores. Skipped when the mutation filter (and
/// with it the matrix) is disabled.
pub fn write_kills_reports(
    out: &Path,
    output: &PipelineOutput,
) -> Result<Vec<PathBuf>, PipelineError> {
    let Some(matrix) = &output.post.matrix else {
        return Ok(Vec::new());
    };
    let mut csv = String::from("assertion");
    for col in &matrix.cols {
        csv.push(',');
        csv.push_str(&csv_field(col));
    }
    csv.push('\n');
    for (row_key, row) in matrix.rows.iter().zip(&matrix.cells) {
        csv.push_str(&csv_field(&format!("{} :: {}", row_key.0, row_key.1)));
        for cell in row {
            csv.push_str(if cell.is_some() { ",1" } else { ",0" });
        }
        csv.push('\n');
    }

    let cfg = &output.manifest.config;
    let relevant_ids: std::collections::BTreeSet<String> = output
        .relevance
        .iter()
        .filter(|l| match l.value {
            Relevance::Relevant => true,
            Relevance::UntransplantableInChangedCode => cfg.count_untransplantable,
            Relevance::NotRelevant => false,
        })
        .map(|l| l.mutant_id.clone())
        .collect();
    let by_assert = matrix.assertion_killed_cols();
    let killed_relevant: std::collections::BTreeSet<String> = matrix
        .cols
        .iter()
        .enumerate()
        .filter(|(i, id)| by_assert[*i] && relevant_ids.contains(*id))
        .map(|(_, id)| id.clone())
        .collect();
    let rms_value = match rms(&killed_relevant, &relevant_ids) {
        Ok(v) => Some(v),
        Err(ScoreError::UndefinedScore) => None,
        Err(e) => return Err(PipelineError::Internal(format!("kills summary: {e}"))),
    };
    let summary = KillsSummary {
        unit: output.unit_name.clone(),
        assertions: matrix.rows.len(),
        mutants: matrix.cols.len(),
        killed_by_assertions: by_assert.iter().filter(|&&k| k).count(),
        mutation_score: matrix.mutation_score(),
        relevant: relevant_ids.len(),
        killed_relevant: killed_relevant.len(),
        rms: rms_value,
        implicit_kills: matrix
            .cols
            .iter()
            .zip(&matrix.implicit_kill)
            .filter(|(_, &imp)| imp)
            .map(|(id, _)| id.clone())
            .collect(),
    };

    Ok(vec![
        write_file(out, "kills.csv", csv.as_bytes())?,
        write_json(out, "kills.json", &summary)?,
    ])
}

/// rq3.csv, rq3_stats.csv, optionally rq3.svg; refreshes summary.md.
pub fn write_rq3(
    out: &Path,
    result: &SimResult,
    svg: bool,
) -> Result<Vec<PathBuf>, PipelineError> {
    let mut csv = String::from("pool,size,rep,rms\n");
    for r in &result.rows {
        csv.push_str(&format!("{},{},{},{}\n", csv_field(&r.pool), r.size, r.rep, r.rms));
    }
    let mut stats = String::from("size,u,p,a12\n");
    for s in &result.stats {
        stats.push_str(&format!("{},{},{},{}\n", s.size, s.u, s.p, s.a12));
    }
    let mut written = vec![
        write_file(out, "rq3.csv", csv.as_bytes())?,
        write_file(out, "rq3_stats.csv", stats.as_bytes())?,
    ];
    if svg {
        written.push(write_file(out, "rq3.svg", rq3_svg(result).as_bytes())?);
    }
    written.push(write_summary(out)?);
    Ok(written)
}

/// rq4.csv; refreshes summary.md.
pub fn write_rq4(out: &Path, result: &CostResult) -> Result<Vec<PathBuf>, PipelineError> {
    let mut csv = String::from("pool,target,rep,cost\n");
    for r in &result.rows {
        let cost = match r.cost {
            Some(c) => c.to_string(),
            None => "UNREACHED".to_string(),
        };
        csv.push_str(&format!("{},{},{},{cost}\n", csv_field(&r.pool), r.target, r.rep));
    }
    Ok(vec![
        write_file(out, "rq4.csv", csv.as_bytes())?,
        write_summary(out)?,
    ])
}

/// Mean rMS against selection size, one polyline per pool.
fn rq3_svg(result: &SimResult) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 20.0, 20.0, 50.0);
    let sizes: Vec<usize> = {
        let mut s: Vec<usize> = result.means.iter().map(|m| m.size).collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    let max_size = sizes.last().copied().unwrap_or(1).max(1) as f64;
    let x = |size: f64| left + (size - 1.0) / (max_size - 1.0).max(1.0) * (w - left - right);
    let y = |v: f64| h - bottom - v * (h - top - bottom);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - bottom,
        w - right,
        h - bottom
    ));
    svg.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - bottom
    ));
    for tick in 0..=4 {
        let v = tick as f64 / 4.0;
        let ty = y(v);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{ty:.1}\" x2=\"{left}\" y2=\"{ty:.1}\" stroke=\"black\"/>\n",
            left - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{v}</text>\n",
            left - 9.0,
            ty + 4.0
        ));
    }
    for &s in &sizes {
        let tx = x(s as f64);
        svg.push_str(&format!(
            "<line x1=\"{tx:.1}\" y1=\"{}\" x2=\"{tx:.1}\" y2=\"{}\" stroke=\"black\"/>\n",
            h - bottom,
            h - bottom + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{tx:.1}\" y=\"{}\" text-anchor=\"middle\">{s}</text>\n",
            h - bottom + 18.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">selection size</text>\n",
        (left + w - right) / 2.0,
        h - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">mean rMS</text>\n",
        (top + h - bottom) / 2.0,
        (top + h - bottom) / 2.0
    ));

    let colors = ["#c0392b", "#2e6da4", "#1f8a4c", "#8e44ad"];
    let pools: Vec<String> = {
        let mut p: Vec<String> = result.means.iter().map(|m| m.pool.clone()).collect();
        p.dedup();
        p
    };
    for (pi, pool) in pools.iter().enumerate() {
        let color = colors[pi % colors.len()];
        let pts: Vec<String> = result
            .means
            .iter()
            .filter(|m| &m.pool == pool)
            .map(|m| format!("{:.1},{:.1}", x(m.size as f64), y(m.mean)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        for m in result.means.iter().filter(|m| &m.pool == pool) {
            svg.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>\n",
                x(m.size as f64),
                y(m.mean)
            ));
        }
        let ly = top + 16.0 * pi as f64;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n",
            left + 10.0,
            ly
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.1}\">{pool}</text>\n",
            left + 27.0,
            ly + 10.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// summary.md regenerated from whichever experiment CSVs exist, so the
/// rq3 and rq4 subcommands can run in either order.
pub fn write_summary(out: &Path) -> Result<PathBuf, PipelineError> {
    let mut md = String::from("# experiment summary\n");

    if let Ok(text) = std::fs::read_to_string(out.join("rq3.csv")) {
        // mean per (pool, size), preserving first-appearance order
        let mut order: Vec<(String, usize)> = Vec::new();
        let mut acc: BTreeMap<(String, usize), (f64, u32)> = BTreeMap::new();
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                continue;
            }
            let key = (cols[0].to_string(), cols[1].parse().unwrap_or(0));
            let v: f64 = cols[3].parse().unwrap_or(0.0);
            if !acc.contains_key(&key) {
                order.push(key.clone());
            }
            let e = acc.entry(key).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
        md.push_str("\n## fixed-size selection: mean rMS\n\n");
        md.push_str("| pool | size | mean rMS |\n|---|---|---|\n");
        for key in &order {
            let (sum, n) = acc[key];
            md.push_str(&format!("| {} | {} | {:.4} |\n", key.0, key.1, sum / f64::from(n)));
        }
    }

    if let Ok(text) = std::fs::read_to_string(out.join("rq3_stats.csv")) {
        md.push_str("\n## fixed-size selection: first pool vs second pool\n\n");
        md.push_str("| size | U | p | A12 |\n|---|---|---|---|\n");
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() == 4 {
                let p: f64 = cols[2].parse().unwrap_or(1.0);
                let a: f64 = cols[3].parse().unwrap_or(0.5);
                md.push_str(&format!("| {} | {} | {p:.4} | {a:.4} |\n", cols[0], cols[1]));
            }
        }
    }

    if let Ok(text) = std::fs::read_to_string(out.join("rq4.csv")) {
        let mut order: Vec<(String, String)> = Vec::new();
        let mut acc: BTreeMap<(String, String), (f64, u32, u32)> = BTreeMap::new();
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                continue;
            }
            let key = (cols[0].to_string(), cols[1].to_string());
            if !acc.contains_key(&key) {
                order.push(key.clone());
            }
            let e = acc.entry(key).or_insert((0.0, 0, 0));
            e.2 += 1;
            if let Ok(cost) = cols[3].parse::<f64>() {
                e.0 += cost;
                e.1 += 1;
            }
        }
        md.push_str("\n## cost to reach target rMS\n\n");
        md.push_str("| pool | target | mean cost (reached reps) | reach rate |\n|---|---|---|---|\n");
        for key in &order {
            let (sum, reached, total) = acc[key];
            let mean = if reached > 0 {
                format!("{:.2}", sum / f64::from(reached))
            } else {
                "n/a".to_string()
            };
            md.push_str(&format!(
                "| {} | {} | {mean} | {:.2} |\n",
                key.0,
                key.1,
                f64::from(reached) / f64::from(total)
            ));
        }
        md.push_str("\nUnreached reps are excluded from mean cost and reported through the reach rate.\n");
    }

    write_file(out, "summary.md", md.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{load_commit, run_pipeline, RunConfig};

    fn commit(root: &Path) {
        let write = |p: PathBuf, c: &str| {
            std::fs::create_dir_all(p.parent().unwrap()).unwrap();
            std::fs::write(p, c).unwrap();
        };
        write(
            root.join("pre/Counter.dl"),
            "class Counter {\n  field n: int;\n  ctor(start: int) {\n    if (start < 0) { n := 0; } else { n := start; }\n  }\n  method bump(): int {\n    n := n + 1;\n    return n;\n  }\n}\n",
        );
        write(
            root.join("post/Counter.dl"),
            "class Counter {\n  field n: int;\n  ctor(start: int) {\n    if (start < 0) { n := 0; } else { n := start; }\n  }\n  method bump(): int {\n    n := n + 2;\n    return n;\n  }\n}\n",
        );
        write(root.join("truth.delta"), "+ post:bump :: result == old(n) + 2\n- post:bump :: result == old(n) + 1\n");
    }

    #[test]
    fn run_reports_are_written_and_byte_stable() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("c1");
        commit(&root);
        let c = load_commit(&root).unwrap();
        let cfg = RunConfig { candidates: 300, max_tests: 20, ..RunConfig::default() };
        let output = run_pipeline(&c, &cfg).unwrap();

        let out1 = tmp.path().join("out1");
        let out2 = tmp.path().join("out2");
        let written = write_run_reports(&out1, &output).unwrap();
        assert!(written.iter().any(|p| p.ends_with("delta.json")));
        assert!(written.iter().any(|p| p.ends_with("delta.md")));
        assert!(written.iter().any(|p| p.ends_with("manifest.json")));
        assert!(written.iter().any(|p| p.ends_with("truth_match.json")));

        // second run, separately written: identical bytes except timings
        let output2 = run_pipeline(&c, &cfg).unwrap();
        write_run_reports(&out2, &output2).unwrap();
        for name in [
            "delta.json",
            "delta.md",
            "status.pre.json",
            "status.post.json",
            "suite.pre.json",
            "suite.post.json",
            "candidates.json",
            "mutants.json",
            "kills.csv",
            "kills.json",
            "truth_match.json",
        ] {
            let a = std::fs::read(out1.join(name)).unwrap();
            let b = std::fs::read(out2.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
        let strip = |path: PathBuf| {
            let v: serde_json::Value =
                serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
            let mut m = v.as_object().unwrap().clone();
            m.remove("timings_ms");
            serde_json::Value::Object(m)
        };
        assert_eq!(strip(out1.join("manifest.json")), strip(out2.join("manifest.json")));
    }

    #[test]
    fn experiment_files_and_summary_cover_both_questions() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("c1");
        commit(&root);
        let c = load_commit(&root).unwrap();
        let cfg = RunConfig { candidates: 300, max_tests: 20, reps: 10, ..RunConfig::default() };
        let output = run_pipeline(&c, &cfg).unwrap();
        let (added, preserved, all_post) = crate::pipeline::report_pools(&output.report);
        let matrix = output.post.matrix.as_ref().unwrap();
        let sim_cfg = cfg.sim_config();

        let out = tmp.path().join("out");
        let rq3 = crate::experiments::simulate_fixed_size(
            matrix,
            &output.relevance,
            &sim_cfg,
            &added,
            &preserved,
        )
        .unwrap();
        write_rq3(&out, &rq3, true).unwrap();
        let rq4 = crate::experiments::simulate_to_target(
            matrix,
            &output.relevance,
            &sim_cfg,
            &[added, all_post, preserved],
        )
        .unwrap();
        write_rq4(&out, &rq4).unwrap();

        let csv = std::fs::read_to_string(out.join("rq3.csv")).unwrap();
        assert!(csv.starts_with("pool,size,rep,rms\n"));
        let rq4_csv = std::fs::read_to_string(out.join("rq4.csv")).unwrap();
        assert!(rq4_csv.starts_with("pool,target,rep,cost\n"));
        let summary = std::fs::read_to_string(out.join("summary.md")).unwrap();
        assert!(summary.contains("fixed-size selection"));
        assert!(summary.contains("cost to reach target rMS"));
        let svg = std::fs::read_to_string(out.join("rq3.svg")).unwrap();
        assert!(svg.contains("<polyline"));
    }
}
