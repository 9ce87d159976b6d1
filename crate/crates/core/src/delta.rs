//! The commit-relevant specification: which assertions the change added,
//! removed, and preserved, computed as a diff over the two per-version
//! specs, with bounded-domain equivalence reduction and ground-truth
//! matching.
//!
//! Membership in a version's spec means: classified VALID and not
//! discarded as irrelevant (zero kills). Assertions collapsed as
//! redundant still count as members; they surface through their
//! representative's alias list.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::assertlang::ast::Formula;
use crate::assertlang::equiv::{signature, DomainConfig};
use crate::assertlang::normalize::normalize;
use crate::assertlang::parser::parse_formula;
use crate::assertlang::scope::{check_formula, scope_for_point, PointScope};
use crate::inference::{Discard, Status, StatusTable};
use crate::minilang::ast::Unit;
use crate::minilang::points::ProgramPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeltaMode {
    /// Pure set difference over the two specs.
    Paper,
    /// Added/removed additionally demand an explicit falsification on
    /// the other side; the rest lands in the undetermined bucket.
    Strict,
}

impl DeltaMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DeltaMode::Paper => "paper",
            DeltaMode::Strict => "strict",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaEntry {
    pub point: String,
    /// Normalized text of the representative.
    pub key: String,
    /// Same-kill-vector members collapsed under this key (within the
    /// same partition).
    pub aliases: Vec<String>,
    /// Bounded-equivalent members merged by reduction.
    pub equivalents: Vec<String>,
    /// Kills in the defining version (post for added/preserved, pre for
    /// removed), when the mutation filter ran.
    pub kill_count: Option<u32>,
    #[serde(skip)]
    pub formula: Option<Formula>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    WouldBeAdded,
    WouldBeRemoved,
}

/// Strict mode's leftover bucket: valid on one side without a
/// falsification on the other.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UndeterminedEntry {
    pub point: String,
    pub key: String,
    pub direction: Direction,
    /// Status label of the non-valid side ("UNDETERMINED", or "VALID"
    /// when that side merely filtered the assertion out as irrelevant).
    pub counterpart_status: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaReport {
    pub commit_id: String,
    pub unit_name: String,
    pub mode: DeltaMode,
    pub added: Vec<DeltaEntry>,
    pub removed: Vec<DeltaEntry>,
    pub preserved: Vec<DeltaEntry>,
    pub undetermined: Vec<UndeterminedEntry>,
    /// Points where equivalence reduction hit the domain cap and left
    /// entries unmerged.
    pub reduction_skipped: Vec<String>,
    /// Seeds, config and suite hashes; filled by the pipeline.
    pub provenance: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DeltaError {
    #[error("the two tables classify different candidate universes: {detail}")]
    CandidateMismatch { detail: String },
}

fn in_spec(e: &crate::inference::StatusEntry) -> bool {
    e.status == Status::Valid && e.discard != Some(Discard::NoKills)
}

/// Builds the partition's entries from its defining table, collapsing
/// kill-vector aliases that landed in the same partition.
fn build_entries(
    keys: &BTreeSet<(String, String)>,
    defining: &StatusTable,
) -> Vec<DeltaEntry> {
    let mut out = Vec::new();
    for k in keys {
        let e = &defining.entries[k];
        if let Some(Discard::Redundant { representative }) = &e.discard {
            let rep_key = (k.0.clone(), representative.clone());
            if keys.contains(&rep_key) {
                continue;
            }
        }
        let aliases: Vec<String> = e
            .aliases
            .iter()
            .filter(|a| keys.contains(&(k.0.clone(), (*a).clone())))
            .cloned()
            .collect();
        out.push(DeltaEntry {
            point: k.0.clone(),
            key: k.1.clone(),
            aliases,
            equivalents: Vec::new(),
            kill_count: e.kill_count,
            formula: Some(e.candidate.formula.clone()),
        });
    }
    out
}

pub fn compute_delta(
    commit_id: &str,
    pre: &StatusTable,
    post: &StatusTable,
    mode: DeltaMode,
) -> Result<DeltaReport, DeltaError> {
    if pre.entries.len() != post.entries.len()
        || !pre.entries.keys().eq(post.entries.keys())
    {
        let only_pre = pre.entries.keys().find(|k| !post.entries.contains_key(*k));
        let only_post = post.entries.keys().find(|k| !pre.entries.contains_key(*k));
        let detail = match (only_pre, only_post) {
            (Some((p, k)), _) => format!("{p} :: {k} only in the pre table"),
            (_, Some((p, k))) => format!("{p} :: {k} only in the post table"),
            _ => "universes differ".to_string(),
        };
        return Err(DeltaError::CandidateMismatch { detail });
    }

    let mut added = BTreeSet::new();
    let mut removed = BTreeSet::new();
    let mut preserved = BTreeSet::new();
    let mut undetermined = Vec::new();

    for (k, pe) in &pre.entries {
        let qe = &post.entries[k];
        let in_pre = in_spec(pe);
        let in_post = in_spec(qe);
        if in_pre && in_post {
            preserved.insert(k.clone());
            continue;
        }
        match mode {
            DeltaMode::Paper => {
                if in_post && !in_pre {
                    added.insert(k.clone());
                } else if in_pre && !in_post {
                    removed.insert(k.clone());
                }
            }
            DeltaMode::Strict => {
                if in_post && !in_pre {
                    if pe.status == Status::Invalid {
                        added.insert(k.clone());
                    } else {
                        undetermined.push(UndeterminedEntry {
                            point: k.0.clone(),
                            key: k.1.clone(),
                            direction: Direction::WouldBeAdded,
                            counterpart_status: pe.status.label().to_string(),
                        });
                    }
                } else if in_pre && !in_post {
                    if qe.status == Status::Invalid {
                        removed.insert(k.clone());
                    } else {
                        undetermined.push(UndeterminedEntry {
                            point: k.0.clone(),
                            key: k.1.clone(),
                            direction: Direction::WouldBeRemoved,
                            counterpart_status: qe.status.label().to_string(),
                        });
                    }
                }
            }
        }
    }

    Ok(DeltaReport {
        commit_id: commit_id.to_string(),
        unit_name: post.unit_name.clone(),
        mode,
        added: build_entries(&added, post),
        removed: build_entries(&removed, pre),
        preserved: build_entries(&preserved, post),
        undetermined,
        reduction_skipped: Vec::new(),
        provenance: BTreeMap::new(),
    })
}

fn scope_of(pre: &Unit, post: &Unit, label: &str) -> Option<PointScope> {
    let point = ProgramPoint::from_label(label)?;
    scope_for_point(pre, post, &point).ok()
}

/// Merges bounded-equivalent entries within each partition, per point.
/// The representative is the shortest key (ties lexicographic); merged
/// keys, their aliases, and their equivalents land in `equivalents`.
/// Points whose domain overflows the cap are left unmerged and listed
/// in `reduction_skipped`.
pub fn reduce_equivalent(
    report: &mut DeltaReport,
    pre: &Unit,
    post: &Unit,
    d: &DomainConfig,
) {
    let mut skipped = BTreeSet::new();
    for part in [&mut report.added, &mut report.removed, &mut report.preserved] {
        reduce_partition(part, pre, post, d, &mut skipped);
    }
    report.reduction_skipped = skipped.into_iter().collect();
}

fn reduce_partition(
    entries: &mut Vec<DeltaEntry>,
    pre: &Unit,
    post: &Unit,
    d: &DomainConfig,
    skipped: &mut BTreeSet<String>,
) {
    let mut by_class: BTreeMap<(String, Vec<u8>), Vec<DeltaEntry>> = BTreeMap::new();
    let mut untouched = Vec::new();
    for e in entries.drain(..) {
        let scope = scope_of(pre, post, &e.point);
        let sig = match (&e.formula, &scope) {
            (Some(f), Some(s)) => signature(f, s, d).ok(),
            _ => None,
        };
        match sig {
            Some(sig) => by_class.entry((e.point.clone(), sig)).or_default().push(e),
            None => {
                skipped.insert(e.point.clone());
                untouched.push(e);
            }
        }
    }
    let mut merged = Vec::new();
    for (_, mut class) in by_class {
        class.sort_by(|a, b| (a.key.len(), &a.key).cmp(&(b.key.len(), &b.key)));
        let mut rep = class.remove(0);
        for other in class {
            rep.equivalents.push(other.key.clone());
            rep.equivalents.extend(other.aliases);
            rep.equivalents.extend(other.equivalents);
        }
        rep.equivalents.sort();
        rep.equivalents.dedup();
        merged.push(rep);
    }
    merged.extend(untouched);
    merged.sort_by(|a, b| (&a.point, &a.key).cmp(&(&b.point, &b.key)));
    *entries = merged;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TruthTag {
    Added,
    Removed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthLine {
    pub tag: TruthTag,
    pub point: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TruthOutcome {
    Matched { report_key: String },
    Unmatched,
    Inexpressible { reason: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchResult {
    pub lines: Vec<(TruthLine, TruthOutcome)>,
    /// matched / expressible; 1.0 by convention when nothing is
    /// expressible (flagged below).
    pub recall: f64,
    pub recall_defined: bool,
    /// Report entries in added/removed no truth line matched.
    pub surplus_added: Vec<String>,
    pub surplus_removed: Vec<String>,
}

/// Parses a ground-truth delta file: one assertion per line,
/// `+ <point> :: <formula>` or `- <point> :: <formula>`, with `#` or
/// `//` comments. Points may be written as `inv`, `ctor`, a bare method
/// name, or a full `post:<name>` label.
pub fn parse_truth(src: &str) -> Result<Vec<TruthLine>, String> {
    let mut out = Vec::new();
    for (ln, raw) in src.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let line = match line.find("//") {
            Some(i) => &line[..i],
            None => line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (tag, rest) = match line.split_at(1) {
            ("+", r) => (TruthTag::Added, r),
            ("-", r) => (TruthTag::Removed, r),
            _ => return Err(format!("line {}: expected `+` or `-`", ln + 1)),
        };
        let Some((point_raw, text)) = rest.split_once("::") else {
            return Err(format!("line {}: expected `<point> :: <formula>`", ln + 1));
        };
        let point_raw = point_raw.trim();
        let point = match point_raw {
            "inv" => "inv".to_string(),
            p if p.starts_with("post:") => p.to_string(),
            p => format!("post:{p}"),
        };
        let text = text.trim();
        if text.is_empty() {
            return Err(format!("line {}: empty formula", ln + 1));
        }
        out.push(TruthLine { tag, point, text: text.to_string() });
    }
    Ok(out)
}

/// Every text the entry answers to: representative, aliases,
/// equivalents.
fn entry_texts(e: &DeltaEntry) -> Vec<&str> {
    let mut v = vec![e.key.as_str()];
    v.extend(e.aliases.iter().map(|s| s.as_str()));
    v.extend(e.equivalents.iter().map(|s| s.as_str()));
    v
}

/// Matches each truth line against its partition by bounded-domain
/// equivalence (falling back to normalized-text equality on a domain
/// overflow). Inexpressible lines (parse or type failure) are excluded
/// from the recall denominator.
pub fn match_ground_truth(
    report: &DeltaReport,
    truth: &[TruthLine],
    pre: &Unit,
    post: &Unit,
    d: &DomainConfig,
) -> MatchResult {
    let mut lines = Vec::new();
    let mut matched_keys: BTreeSet<(TruthTag, String, String)> = BTreeSet::new();
    let mut expressible = 0usize;
    let mut matched = 0usize;

    for t in truth {
        let outcome = match_one(report, t, pre, post, d);
        if let TruthOutcome::Inexpressible { .. } = outcome {
            lines.push((t.clone(), outcome));
            continue;
        }
        expressible += 1;
        if let TruthOutcome::Matched { report_key } = &outcome {
            matched += 1;
            matched_keys.insert((t.tag, t.point.clone(), report_key.clone()));
        }
        lines.push((t.clone(), outcome));
    }

    let surplus = |part: &[DeltaEntry], tag: TruthTag| -> Vec<String> {
        part.iter()
            .filter(|e| !matched_keys.contains(&(tag, e.point.clone(), e.key.clone())))
            .map(|e| format!("{} :: {}", e.point, e.key))
            .collect()
    };

    MatchResult {
        recall: if expressible == 0 { 1.0 } else { matched as f64 / expressible as f64 },
        recall_defined: expressible > 0,
        surplus_added: surplus(&report.added, TruthTag::Added),
        surplus_removed: surplus(&report.removed, TruthTag::Removed),
        lines,
    }
}

fn match_one(
    report: &DeltaReport,
    t: &TruthLine,
    pre: &Unit,
    post: &Unit,
    d: &DomainConfig,
) -> TruthOutcome {
    let formula = match parse_formula(&t.text) {
        Ok(f) => normalize(&f),
        Err(e) => return TruthOutcome::Inexpressible { reason: e.to_string() },
    };
    let Some(scope) = scope_of(pre, post, &t.point) else {
        return TruthOutcome::Inexpressible { reason: format!("unknown point `{}`", t.point) };
    };
    if let Err(e) = check_formula(&scope, &formula) {
        return TruthOutcome::Inexpressible { reason: e.to_string() };
    }

    let part = match t.tag {
        TruthTag::Added => &report.added,
        TruthTag::Removed => &report.removed,
    };
    let truth_sig = signature(&formula, &scope, d).ok();
    let truth_key = formula.print();

    for e in part.iter().filter(|e| e.point == t.point) {
        for text in entry_texts(e) {
            if text == truth_key {
                return TruthOutcome::Matched { report_key: e.key.clone() };
            }
            if let Some(ts) = &truth_sig {
                let Ok(cf) = parse_formula(text) else { continue };
                let cf = normalize(&cf);
                if check_formula(&scope, &cf).is_ok()
                    && signature(&cf, &scope, d).ok().as_ref() == Some(ts)
                {
                    return TruthOutcome::Matched { report_key: e.key.clone() };
                }
            }
        }
    }
    TruthOutcome::Unmatched
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertlang::fuzz::Candidate;
    use crate::inference::StatusEntry;

    fn cand(label: &str, src: &str) -> Candidate {
        let f = normalize(&parse_formula(src).unwrap());
        Candidate {
            point: ProgramPoint::from_label(label).unwrap(),
            key: f.print(),
            formula: f,
        }
    }

    /// Hand-built table: statuses forced per key, no execution.
    fn table(unit_name: &str, rows: &[(&str, &str, Status)]) -> StatusTable {
        let mut entries = BTreeMap::new();
        for (label, text, status) in rows {
            let c = cand(label, text);
            entries.insert(
                (label.to_string(), c.key.clone()),
                StatusEntry {
                    candidate: c,
                    status: *status,
                    eval_count: if *status == Status::Valid { 10 } else { 0 },
                    falsified_by: None,
                    kill_count: if *status == Status::Valid { Some(2) } else { None },
                    discard: None,
                    aliases: Vec::new(),
                },
            );
        }
        StatusTable { unit_name: unit_name.to_string(), entries }
    }

    const V: Status = Status::Valid;
    const I: Status = Status::Invalid;
    const U: Status = Status::Undetermined;

    #[test]
    fn paper_mode_is_set_difference() {
        let pre = table("C", &[("inv", "0 <= n", V), ("inv", "n <= 5", V), ("inv", "n == 0", I)]);
        let post = table("C", &[("inv", "0 <= n", V), ("inv", "n <= 5", I), ("inv", "n == 0", V)]);
        let r = compute_delta("c1", &pre, &post, DeltaMode::Paper).unwrap();
        assert_eq!(r.added.iter().map(|e| &e.key).collect::<Vec<_>>(), ["n == 0"]);
        assert_eq!(r.removed.iter().map(|e| &e.key).collect::<Vec<_>>(), ["n <= 5"]);
        assert_eq!(r.preserved.iter().map(|e| &e.key).collect::<Vec<_>>(), ["0 <= n"]);
        assert!(r.undetermined.is_empty());
    }

    #[test]
    fn strict_mode_demands_falsification() {
        let pre = table("C", &[("inv", "0 <= n", U), ("inv", "n == 0", I)]);
        let post = table("C", &[("inv", "0 <= n", V), ("inv", "n == 0", V)]);
        let r = compute_delta("c1", &pre, &post, DeltaMode::Strict).unwrap();
        assert_eq!(r.added.iter().map(|e| &e.key).collect::<Vec<_>>(), ["n == 0"]);
        assert_eq!(r.undetermined.len(), 1);
        assert_eq!(r.undetermined[0].key, "0 <= n");
        assert_eq!(r.undetermined[0].direction, Direction::WouldBeAdded);
        assert_eq!(r.undetermined[0].counterpart_status, "UNDETERMINED");
    }

    #[test]
    fn version_swap_swaps_added_and_removed() {
        let pre = table("C", &[("inv", "0 <= n", V), ("inv", "n <= 5", V), ("inv", "n == 0", I)]);
        let post = table("C", &[("inv", "0 <= n", V), ("inv", "n <= 5", I), ("inv", "n == 0", V)]);
        for mode in [DeltaMode::Paper, DeltaMode::Strict] {
            let fwd = compute_delta("c", &pre, &post, mode).unwrap();
            let back = compute_delta("c", &post, &pre, mode).unwrap();
            let keys = |v: &[DeltaEntry]| v.iter().map(|e| e.key.clone()).collect::<Vec<_>>();
            assert_eq!(keys(&fwd.added), keys(&back.removed));
            assert_eq!(keys(&fwd.removed), keys(&back.added));
            assert_eq!(keys(&fwd.preserved), keys(&back.preserved));
        }
    }

    #[test]
    fn mismatched_universes_are_rejected() {
        let pre = table("C", &[("inv", "n >= 0", V)]);
        let post = table("C", &[("inv", "n <= 5", V)]);
        assert!(compute_delta("c", &pre, &post, DeltaMode::Paper).is_err());
    }

    #[test]
    fn nokills_are_out_of_the_spec_but_redundant_stay_in() {
        let mut pre = table("C", &[("inv", "0 <= n", V), ("inv", "n <= 100", V)]);
        let post = table("C", &[("inv", "0 <= n", V), ("inv", "n <= 100", V)]);
        // pre side collapsed `n <= 100` into `0 <= n`; still preserved
        let k = ("inv".to_string(), "n <= 100".to_string());
        pre.entries.get_mut(&k).unwrap().discard =
            Some(Discard::Redundant { representative: "0 <= n".to_string() });
        let r = compute_delta("c", &pre, &post, DeltaMode::Paper).unwrap();
        assert_eq!(r.preserved.len(), 2);
        assert!(r.added.is_empty() && r.removed.is_empty());

        // a zero-kill discard on one side moves the key out of that spec
        let mut pre2 = table("C", &[("inv", "0 <= n", V)]);
        pre2.entries.get_mut(&("inv".to_string(), "0 <= n".to_string())).unwrap().discard =
            Some(Discard::NoKills);
        let post2 = table("C", &[("inv", "0 <= n", V)]);
        let r2 = compute_delta("c", &pre2, &post2, DeltaMode::Paper).unwrap();
        assert_eq!(r2.added.len(), 1);
        assert!(r2.preserved.is_empty());
    }

    fn counter() -> Unit {
        crate::minilang::typecheck::load_unit(
            "class Counter {\n  field n: int;\n  ctor() { n := 0; }\n  method bump(): void { n := n + 1; }\n}",
        )
        .unwrap()
    }

    #[test]
    fn reduction_merges_equivalent_forms() {
        // `!(n < 0)` and `0 <= n` agree everywhere over int domains
        let pre = table("C", &[("inv", "!(n < 0)", I), ("inv", "0 <= n", I)]);
        let post = table("C", &[("inv", "!(n < 0)", V), ("inv", "0 <= n", V)]);
        let u = counter();
        let mut r = compute_delta("c", &pre, &post, DeltaMode::Strict).unwrap();
        assert_eq!(r.added.len(), 2);
        reduce_equivalent(&mut r, &u, &u, &DomainConfig::default());
        assert_eq!(r.added.len(), 1);
        assert_eq!(r.added[0].key, "0 <= n");
        assert_eq!(r.added[0].equivalents, vec!["!(n < 0)".to_string()]);
        assert!(r.reduction_skipped.is_empty());
    }

    #[test]
    fn truth_parsing_and_matching() {
        let truth_src = "# change to the counter\n+ inv :: !(n < 0)\n+ bump :: n == old(n) + 1\n- inv :: n == nonsense(n)\n";
        let lines = parse_truth(truth_src).unwrap();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].point, "post:bump");

        let pre = table(
            "Counter",
            &[("inv", "0 <= n", I), ("post:bump", "n == old(n) + 1", I)],
        );
        let post = table(
            "Counter",
            &[("inv", "0 <= n", V), ("post:bump", "n == old(n) + 1", V)],
        );
        let u = counter();
        let r = compute_delta("c", &pre, &post, DeltaMode::Strict).unwrap();
        let m = match_ground_truth(&r, &lines, &u, &u, &DomainConfig::default());
        // `!(n < 0)` matches `0 <= n` by equivalence, the bump line
        // matches syntactically, the third line cannot parse
        assert!(m.recall_defined);
        assert_eq!(m.recall, 1.0);
        assert!(matches!(m.lines[0].1, TruthOutcome::Matched { .. }));
        assert!(matches!(m.lines[1].1, TruthOutcome::Matched { .. }));
        assert!(matches!(m.lines[2].1, TruthOutcome::Inexpressible { .. }));
        assert!(m.surplus_added.is_empty());
        assert!(m.surplus_removed.is_empty());
    }

    #[test]
    fn unmatched_truth_and_surplus_are_reported() {
        let pre = table("Counter", &[("inv", "0 <= n", I), ("inv", "n <= 100", I)]);
        let post = table("Counter", &[("inv", "0 <= n", V), ("inv", "n <= 100", V)]);
        let u = counter();
        let r = compute_delta("c", &pre, &post, DeltaMode::Strict).unwrap();
        let lines = parse_truth("+ inv :: n >= 1\n").unwrap();
        let m = match_ground_truth(&r, &lines, &u, &u, &DomainConfig::default());
        assert_eq!(m.recall, 0.0);
        assert!(matches!(m.lines[0].1, TruthOutcome::Unmatched));
        assert_eq!(m.surplus_added.len(), 2);
    }

    #[test]
    fn empty_truth_gives_conventional_recall() {
        let pre = table("Counter", &[("inv", "0 <= n", V)]);
        let post = table("Counter", &[("inv", "0 <= n", V)]);
        let u = counter();
        let r = compute_delta("c", &pre, &post, DeltaMode::Strict).unwrap();
        let m = match_ground_truth(&r, &[], &u, &u, &DomainConfig::default());
        assert_eq!(m.recall, 1.0);
        assert!(!m.recall_defined);
    }
}
