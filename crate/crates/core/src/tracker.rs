//! Matching violations across consecutive revisions.
//!
//! For every parent/child revision pair, parent violations are matched to
//! child violations in three global passes: location first, then snippet,
//! then context hash. A candidate is consumed by at most one match, and a
//! later pass only sees violations the earlier passes left unmatched.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ast::{self, Fnv1a, NodeType, Span};
use crate::corpus::{span_text, DiffHunk, Revision, RevisionHistory, ViolationRecord};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrackError {
    #[error("violation in project {found} attached to history of {expected}")]
    WrongProject { expected: String, found: String },
    #[error("violation names unknown commit {0}")]
    UnknownCommit(String),
    #[error("violation file {path} is not in the snapshot of {commit}")]
    UnknownFile { commit: String, path: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Heuristic {
    Location,
    Snippet,
    Hash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Fixed,
    Unfixed,
    Disappeared,
}

/// Matching thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackConfig {
    /// Largest accepted difference between in-hunk offsets, in lines.
    pub max_offset: u32,
    /// Tokens hashed on each side of a violation.
    pub hash_window: usize,
}

impl Default for TrackConfig {
    fn default() -> Self {
        TrackConfig {
            max_offset: 3,
            hash_window: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationLineage {
    pub chain: Vec<ViolationRecord>,
    /// `matched_by[i]` links `chain[i]` to `chain[i + 1]`.
    pub matched_by: Vec<Heuristic>,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fix_commit: Option<String>,
}

impl ViolationLineage {
    pub fn first(&self) -> &ViolationRecord {
        &self.chain[0]
    }

    pub fn last(&self) -> &ViolationRecord {
        self.chain.last().expect("chains are non-empty")
    }
}

/// Instrumentation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackStats {
    pub location_matches: usize,
    pub snippet_attempts: usize,
    pub snippet_matches: usize,
    pub hash_attempts: usize,
    pub hash_matches: usize,
    pub ambiguous_hashes: usize,
}

impl TrackStats {
    pub fn merge(&mut self, other: &TrackStats) {
        self.location_matches += other.location_matches;
        self.snippet_attempts += other.snippet_attempts;
        self.snippet_matches += other.snippet_matches;
        self.hash_attempts += other.hash_attempts;
        self.hash_matches += other.hash_matches;
        self.ambiguous_hashes += other.ambiguous_hashes;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackResult {
    pub lineages: Vec<ViolationLineage>,
    pub stats: TrackStats,
}

/// Violations of one project grouped by revision, in input order.
#[derive(Debug, Clone)]
pub struct ViolationSet {
    by_revision: Vec<Vec<ViolationRecord>>,
}

impl ViolationSet {
    pub fn new<'a>(
        history: &RevisionHistory,
        records: impl IntoIterator<Item = &'a ViolationRecord>,
    ) -> Result<ViolationSet, TrackError> {
        let mut by_revision = vec![Vec::new(); history.revisions.len()];
        let index: BTreeMap<&str, usize> = history
            .revisions
            .iter()
            .enumerate()
            .map(|(i, r)| (r.commit_id.as_str(), i))
            .collect();
        for r in records {
            if r.project != history.project {
                return Err(TrackError::WrongProject {
                    expected: history.project.clone(),
                    found: r.project.clone(),
                });
            }
            let i = *index
                .get(r.commit_id.as_str())
                .ok_or_else(|| TrackError::UnknownCommit(r.commit_id.clone()))?;
            if !history.revisions[i].snapshot.contains_key(&r.file_path) {
                return Err(TrackError::UnknownFile {
                    commit: r.commit_id.clone(),
                    path: r.file_path.clone(),
                });
            }
            by_revision[i].push(r.clone());
        }
        Ok(ViolationSet { by_revision })
    }

    pub fn at(&self, revision: usize) -> &[ViolationRecord] {
        &self.by_revision[revision]
    }

    pub fn len(&self) -> usize {
        self.by_revision.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn source_of<'a>(revision: &'a Revision, record: &ViolationRecord) -> &'a str {
    revision
        .snapshot
        .get(&record.file_path)
        .map(String::as_str)
        .unwrap_or("")
}

/// Location heuristic.
///
/// When `v` overlaps a hunk, candidates overlapping the same hunk's after
/// side are compared by offset from the hunk start; the smallest offset
/// difference within `max_offset` wins, then the earliest start line.
/// Outside every hunk, `v`'s span is shifted by the preceding hunks and
/// must match a candidate span exactly. Candidates of another type or file
/// are ignored.
pub fn match_by_location(
    v: &ViolationRecord,
    hunks: &[DiffHunk],
    candidates: &[ViolationRecord],
    max_offset: u32,
) -> Option<usize> {
    let refs: Vec<(usize, &ViolationRecord)> = candidates.iter().enumerate().collect();
    location(v, hunks, &refs, max_offset)
}

fn location(
    v: &ViolationRecord,
    hunks: &[DiffHunk],
    candidates: &[(usize, &ViolationRecord)],
    max_offset: u32,
) -> Option<usize> {
    let same =
        |c: &ViolationRecord| c.violation_type == v.violation_type && c.file_path == v.file_path;
    let span = v.span();
    if let Some(hunk) = hunks.iter().find(|h| h.before_span.intersects(&span)) {
        let offset = i64::from(v.start_line) - i64::from(hunk.before_span.start);
        return candidates
            .iter()
            .filter(|(_, c)| same(c) && hunk.after_span.intersects(&c.span()))
            .filter_map(|&(i, c)| {
                let delta = (i64::from(c.start_line) - i64::from(hunk.after_span.start) - offset)
                    .unsigned_abs();
                (delta <= u64::from(max_offset)).then_some((delta, c.start_line, i))
            })
            .min()
            .map(|(_, _, i)| i);
    }
    let shift: i64 = hunks
        .iter()
        .filter(|h| h.before_span.start <= v.start_line && !h.before_span.intersects(&span))
        .map(|h| i64::from(h.after_span.len()) - i64::from(h.before_span.len()))
        .sum();
    let start = i64::from(v.start_line) + shift;
    let end = i64::from(v.end_line) + shift;
    candidates
        .iter()
        .find(|(_, c)| same(c) && i64::from(c.start_line) == start && i64::from(c.end_line) == end)
        .map(|&(i, _)| i)
}

/// Snippet heuristic: exact text equality of the violation spans, same type
/// and file path; the first candidate in line order wins.
pub fn match_by_snippet(
    v: &ViolationRecord,
    parent_source: &str,
    candidates: &[ViolationRecord],
    child_source: &str,
) -> Option<usize> {
    let refs: Vec<(usize, &ViolationRecord)> = candidates.iter().enumerate().collect();
    snippet(v, parent_source, &refs, |_| child_source)
}

fn snippet<'s>(
    v: &ViolationRecord,
    parent_source: &str,
    candidates: &[(usize, &ViolationRecord)],
    child_source: impl Fn(&ViolationRecord) -> &'s str,
) -> Option<usize> {
    let text = span_text(parent_source, v.span())?;
    candidates
        .iter()
        .filter(|(_, c)| c.violation_type == v.violation_type && c.file_path == v.file_path)
        .filter(|(_, c)| span_text(child_source(c), c.span()).as_deref() == Some(text.as_str()))
        .min_by_key(|(i, c)| (c.start_line, *i))
        .map(|&(i, _)| i)
}

/// FNV-1a hash of the `window` lexical tokens before and after `span`.
///
/// Tokens come from the lenient lexer so any text can be hashed. A newline
/// separates the two sides so that a window cannot slide across them.
pub fn context_hash(source: &str, span: Span, window: usize) -> u64 {
    let tokens = ast::lex_lenient(source);
    let before: Vec<&str> = tokens
        .iter()
        .filter(|t| t.line < span.start)
        .map(|t| t.text.as_str())
        .collect();
    let after = tokens
        .iter()
        .filter(|t| t.line > span.end)
        .map(|t| t.text.as_str())
        .take(window);
    let mut joined = before[before.len().saturating_sub(window)..].join(" ");
    joined.push('\n');
    joined.push_str(&after.collect::<Vec<_>>().join(" "));
    Fnv1a::hash(joined.as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HashMatch {
    Unique(usize),
    Ambiguous,
    None,
}

/// Hash heuristic: the single same-type candidate anywhere in the child
/// revision whose context hash equals `v`'s.
pub fn match_by_hash(
    v: &ViolationRecord,
    parent_source: &str,
    child: &Revision,
    candidates: &[ViolationRecord],
    window: usize,
) -> HashMatch {
    let refs: Vec<(usize, &ViolationRecord)> = candidates.iter().enumerate().collect();
    hash(v, parent_source, child, &refs, window, &mut BTreeMap::new())
}

fn hash(
    v: &ViolationRecord,
    parent_source: &str,
    child: &Revision,
    candidates: &[(usize, &ViolationRecord)],
    window: usize,
    cache: &mut BTreeMap<(String, Span), u64>,
) -> HashMatch {
    let target = context_hash(parent_source, v.span(), window);
    let mut found = None;
    for &(i, c) in candidates {
        if c.violation_type != v.violation_type {
            continue;
        }
        let h = *cache
            .entry((c.file_path.clone(), c.span()))
            .or_insert_with(|| context_hash(source_of(child, c), c.span(), window));
        if h == target {
            if found.is_some() {
                return HashMatch::Ambiguous;
            }
            found = Some(i);
        }
    }
    found.map_or(HashMatch::None, HashMatch::Unique)
}

fn hunks_of<'a>(child: &'a Revision, path: &str) -> &'a [DiffHunk] {
    child
        .change(path)
        .map(|c| c.hunks.as_slice())
        .unwrap_or(&[])
}

/// Whether a hunk touches the violation: its before side overlaps the span,
/// or it inserts lines directly inside or next to it.
fn touched(span: Span, hunk: &DiffHunk) -> bool {
    if hunk.before_span.is_empty() {
        let at = hunk.before_span.start;
        span.start <= at && at <= span.end + 1
    } else {
        hunk.before_span.intersects(&span)
    }
}

fn declared_methods(source: &str) -> Option<BTreeSet<String>> {
    let tree = ast::parse(source).ok()?;
    Some(
        tree.walk()
            .into_iter()
            .filter(|(_, n)| n.node_type == NodeType::MethodDeclaration)
            .map(|(_, n)| n.label.clone())
            .collect(),
    )
}

/// Outcome of a lineage whose last record is `last`.
///
/// * reaching the head revision: `Unfixed`;
/// * file gone in the next revision, or its enclosing method no longer
///   declared there: `Disappeared`;
/// * a hunk of the next revision touches the violation: `Fixed` by that
///   revision;
/// * anything else (the violation vanished with its code untouched):
///   `Disappeared`.
pub fn classify_outcome(
    last: &ViolationRecord,
    history: &RevisionHistory,
) -> (Outcome, Option<String>) {
    let Some(index) = history.index_of(&last.commit_id) else {
        return (Outcome::Disappeared, None);
    };
    let Some(child) = history.revisions.get(index + 1) else {
        return (Outcome::Unfixed, None);
    };
    let parent = &history.revisions[index];
    let Some(child_source) = child.snapshot.get(&last.file_path) else {
        return (Outcome::Disappeared, None);
    };
    if let Some(method) = last.enclosing_method() {
        let before = declared_methods(source_of(parent, last));
        let after = declared_methods(child_source);
        if let (Some(before), Some(after)) = (before, after) {
            if before.contains(method) && !after.contains(method) {
                return (Outcome::Disappeared, None);
            }
        }
    }
    if hunks_of(child, &last.file_path)
        .iter()
        .any(|h| touched(last.span(), h))
    {
        return (Outcome::Fixed, Some(child.commit_id.clone()));
    }
    (Outcome::Disappeared, None)
}

struct Open {
    chain: Vec<ViolationRecord>,
    matched_by: Vec<Heuristic>,
}

/// Build lineages for every violation of one project.
pub fn track(
    history: &RevisionHistory,
    violations: &ViolationSet,
    config: &TrackConfig,
) -> TrackResult {
    let mut stats = TrackStats::default();
    let mut finished: Vec<(usize, ViolationLineage)> = Vec::new();
    // (creation order, lineage) for lineages alive at the current revision.
    let mut open: Vec<(usize, Open)> = Vec::new();
    let mut created = 0;
    for v in violations.at(0) {
        open.push((
            created,
            Open {
                chain: vec![v.clone()],
                matched_by: Vec::new(),
            },
        ));
        created += 1;
    }
    for i in 1..history.revisions.len() {
        let parent = &history.revisions[i - 1];
        let child = &history.revisions[i];
        let candidates = violations.at(i);
        let mut consumed = vec![false; candidates.len()];
        let mut matched: Vec<Option<(usize, Heuristic)>> = vec![None; open.len()];
        let available = |consumed: &[bool]| -> Vec<(usize, &ViolationRecord)> {
            candidates
                .iter()
                .enumerate()
                .filter(|(j, _)| !consumed[*j])
                .collect()
        };

        for (k, (_, lineage)) in open.iter().enumerate() {
            let v = lineage.chain.last().expect("non-empty");
            if !child.snapshot.contains_key(&v.file_path) {
                continue;
            }
            let pool = available(&consumed);
            if let Some(j) = location(v, hunks_of(child, &v.file_path), &pool, config.max_offset) {
                consumed[j] = true;
                matched[k] = Some((j, Heuristic::Location));
                stats.location_matches += 1;
            }
        }
        for (k, (_, lineage)) in open.iter().enumerate() {
            if matched[k].is_some() {
                continue;
            }
            let v = lineage.chain.last().expect("non-empty");
            stats.snippet_attempts += 1;
            let pool = available(&consumed);
            if let Some(j) = snippet(v, source_of(parent, v), &pool, |c| source_of(child, c)) {
                consumed[j] = true;
                matched[k] = Some((j, Heuristic::Snippet));
                stats.snippet_matches += 1;
            }
        }
        let mut cache = BTreeMap::new();
        for (k, (_, lineage)) in open.iter().enumerate() {
            if matched[k].is_some() {
                continue;
            }
            let v = lineage.chain.last().expect("non-empty");
            stats.hash_attempts += 1;
            let pool = available(&consumed);
            match hash(
                v,
                source_of(parent, v),
                child,
                &pool,
                config.hash_window,
                &mut cache,
            ) {
                HashMatch::Unique(j) => {
                    consumed[j] = true;
                    matched[k] = Some((j, Heuristic::Hash));
                    stats.hash_matches += 1;
                }
                HashMatch::Ambiguous => stats.ambiguous_hashes += 1,
                HashMatch::None => {}
            }
        }

        let mut next = Vec::with_capacity(candidates.len());
        for ((order, mut lineage), m) in open.into_iter().zip(matched) {
            match m {
                Some((j, how)) => {
                    lineage.chain.push(candidates[j].clone());
                    lineage.matched_by.push(how);
                    next.push((order, lineage));
                }
                None => finished.push((order, close(lineage, history))),
            }
        }
        for (j, c) in candidates.iter().enumerate() {
            if !consumed[j] {
                next.push((
                    created,
                    Open {
                        chain: vec![c.clone()],
                        matched_by: Vec::new(),
                    },
                ));
                created += 1;
            }
        }
        open = next;
    }
    for (order, lineage) in open {
        finished.push((order, close(lineage, history)));
    }
    finished.sort_by_key(|(order, _)| *order);
    TrackResult {
        lineages: finished.into_iter().map(|(_, l)| l).collect(),
        stats,
    }
}

fn close(open: Open, history: &RevisionHistory) -> ViolationLineage {
    let (outcome, fix_commit) = classify_outcome(open.chain.last().expect("non-empty"), history);
    ViolationLineage {
        chain: open.chain,
        matched_by: open.matched_by,
        outcome,
        fix_commit,
    }
}

/// Lineage dump record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineageDump {
    pub violation_type: String,
    pub project: String,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fix_commit: Option<String>,
    pub chain: Vec<(String, String, u32, u32)>,
    pub matched_by: Vec<Heuristic>,
}

impl From<&ViolationLineage> for LineageDump {
    fn from(l: &ViolationLineage) -> Self {
        LineageDump {
            violation_type: l.first().violation_type.clone(),
            project: l.first().project.clone(),
            outcome: l.outcome,
            fix_commit: l.fix_commit.clone(),
            chain: l
                .chain
                .iter()
                .map(|r| {
                    (
                        r.commit_id.clone(),
                        r.file_path.clone(),
                        r.start_line,
                        r.end_line,
                    )
                })
                .collect(),
            matched_by: l.matched_by.clone(),
        }
    }
}
