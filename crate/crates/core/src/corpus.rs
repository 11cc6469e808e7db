//! Violation reports, revision histories and category metadata.
//!
//! # On-disk formats
//!
//! *Violation report*: one JSON object per line with the fields
//! `violation_type`, `project`, `commit_id`, `file_path`, `start_line`,
//! `end_line` and optionally `enclosing_entity`. Blank lines are ignored.
//!
//! *Corpus layout*: `<root>/manifest` plus one directory per commit holding
//! the complete snapshot of the project at that commit
//! (`<root>/<commit_id>/<file_path>`). Manifest lines are tab separated:
//!
//! ```text
//! # commit  parent  changed paths...
//! c1    -
//! c2    c1    src/A.java
//! @@    src/A.java    3,4    3,5
//! ```
//!
//! A `@@` line attaches a hunk (`before_start,before_end` and
//! `after_start,after_end`, inclusive, `n,n-1` for an empty side) to the
//! preceding commit. Files with manifest hunks use them verbatim; all other
//! changed files are diffed line by line.
//!
//! *Category map*: `VIOLATION_TYPE<whitespace>Category name` per line.
//!
//! *Dataset archive*: the line `VIOPAT1` followed by a JSON document.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, BufRead, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ast::Span;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("report line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("report line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("report line {line}: span inverted ({start} > {end})")]
    SpanInverted { line: usize, start: u32, end: u32 },
    #[error("manifest {path} line {line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("project {project}: {message}")]
    History { project: String, message: String },
    #[error("project {project}: cycle in parent links through commit {commit}")]
    Cycle { project: String, commit: String },
    #[error("project {project}: missing snapshot {path} for commit {commit}")]
    MissingSnapshot {
        project: String,
        commit: String,
        path: String,
    },
    #[error("category map line {line}: {message}")]
    Category { line: usize, message: String },
    #[error("dataset archive: {0}")]
    Archive(String),
    #[error("dataset archive version {found} is not supported (expected {expected})")]
    Version {
        found: String,
        expected: &'static str,
    },
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One reported violation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub violation_type: String,
    pub project: String,
    pub commit_id: String,
    pub file_path: String,
    pub start_line: u32,
    pub end_line: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enclosing_entity: Option<String>,
}

impl ViolationRecord {
    pub fn span(&self) -> Span {
        Span::new(self.start_line, self.end_line)
    }

    /// Last segment of the enclosing entity (`pkg.A.run` gives `run`).
    pub fn enclosing_method(&self) -> Option<&str> {
        let entity = self.enclosing_entity.as_deref()?;
        let name = entity.rsplit(['.', '#', ':']).next().unwrap_or(entity);
        (!name.is_empty()).then_some(name)
    }
}

/// Read a line-delimited violation report.
pub fn ingest_violations(reader: impl BufRead) -> Result<Vec<ViolationRecord>, CorpusError> {
    let mut out = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let number = index + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            line: number,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_record(&line, number)?);
    }
    Ok(out)
}

fn parse_record(line: &str, number: usize) -> Result<ViolationRecord, CorpusError> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
            line: number,
            message: e.to_string(),
        })?;
    let serde_json::Value::Object(map) = value else {
        return Err(CorpusError::Malformed {
            line: number,
            message: "record is not an object".into(),
        });
    };
    let text = |field: &'static str| -> Result<String, CorpusError> {
        match map.get(field) {
            None | Some(serde_json::Value::Null) => Err(CorpusError::MissingField {
                line: number,
                field,
            }),
            Some(serde_json::Value::String(s)) => Ok(s.clone()),
            Some(other) => Err(CorpusError::Malformed {
                line: number,
                message: format!("field `{field}` must be a string, found {other}"),
            }),
        }
    };
    let line_no = |field: &'static str| -> Result<u32, CorpusError> {
        match map.get(field) {
            None | Some(serde_json::Value::Null) => Err(CorpusError::MissingField {
                line: number,
                field,
            }),
            Some(v) => v
                .as_u64()
                .filter(|&n| n >= 1 && n <= u64::from(u32::MAX))
                .map(|n| n as u32)
                .ok_or_else(|| CorpusError::Malformed {
                    line: number,
                    message: format!("field `{field}` must be a positive integer, found {v}"),
                }),
        }
    };
    let enclosing_entity = match map.get("enclosing_entity") {
        None | Some(serde_json::Value::Null) => None,
        Some(serde_json::Value::String(s)) => Some(s.clone()),
        Some(other) => {
            return Err(CorpusError::Malformed {
                line: number,
                message: format!("field `enclosing_entity` must be a string, found {other}"),
            })
        }
    };
    let record = ViolationRecord {
        violation_type: text("violation_type")?,
        project: text("project")?,
        commit_id: text("commit_id")?,
        file_path: text("file_path")?,
        start_line: line_no("start_line")?,
        end_line: line_no("end_line")?,
        enclosing_entity,
    };
    if record.start_line > record.end_line {
        return Err(CorpusError::SpanInverted {
            line: number,
            start: record.start_line,
            end: record.end_line,
        });
    }
    Ok(record)
}

/// Serialize records in the report format.
pub fn write_violations(records: &[ViolationRecord], mut out: impl Write) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// A contiguous change between a parent file and a child file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiffHunk {
    pub before_span: Span,
    pub after_span: Span,
    pub before_text: String,
    pub after_text: String,
}

impl DiffHunk {
    /// Build a hunk from spans, cutting the text out of both files.
    pub fn from_spans(before: &str, after: &str, before_span: Span, after_span: Span) -> DiffHunk {
        DiffHunk {
            before_span,
            after_span,
            before_text: span_text(before, before_span).unwrap_or_default(),
            after_text: span_text(after, after_span).unwrap_or_default(),
        }
    }
}

/// Text of the inclusive line range, or `None` when it runs past the end.
pub fn span_text(source: &str, span: Span) -> Option<String> {
    if span.is_empty() {
        return Some(String::new());
    }
    let lines: Vec<&str> = source.lines().collect();
    if span.start == 0 || span.end as usize > lines.len() {
        return None;
    }
    Some(lines[span.start as usize - 1..span.end as usize].join("\n"))
}

/// Line-level diff as hunks, computed from a longest common subsequence.
///
/// Ties in the LCS backtrack prefer keeping earlier lines of `before`, so the
/// result is deterministic.
pub fn line_diff(before: &str, after: &str) -> Vec<DiffHunk> {
    let a: Vec<&str> = before.lines().collect();
    let b: Vec<&str> = after.lines().collect();
    let prefix = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let suffix = a[prefix..]
        .iter()
        .rev()
        .zip(b[prefix..].iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let am = &a[prefix..a.len() - suffix];
    let bm = &b[prefix..b.len() - suffix];
    let (n, m) = (am.len(), bm.len());
    // lcs[i][j] = LCS length of am[i..] and bm[j..]
    let mut lcs = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            lcs[i][j] = if am[i] == bm[j] {
                lcs[i + 1][j + 1] + 1
            } else {
                lcs[i + 1][j].max(lcs[i][j + 1])
            };
        }
    }
    let mut hunks = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        if i < n && j < m && am[i] == bm[j] {
            i += 1;
            j += 1;
            continue;
        }
        let (i0, j0) = (i, j);
        while (i < n || j < m) && !(i < n && j < m && am[i] == bm[j]) {
            if j >= m || (i < n && lcs[i + 1][j] >= lcs[i][j + 1]) {
                i += 1;
            } else {
                j += 1;
            }
        }
        let bs = Span::new((prefix + i0 + 1) as u32, (prefix + i) as u32);
        let as_ = Span::new((prefix + j0 + 1) as u32, (prefix + j) as u32);
        hunks.push(DiffHunk {
            before_span: bs,
            after_span: as_,
            before_text: am[i0..i].join("\n"),
            after_text: bm[j0..j].join("\n"),
        });
    }
    hunks
}

/// Hunks touching one file in one revision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    pub hunks: Vec<DiffHunk>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Revision {
    pub commit_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    pub snapshot: BTreeMap<String, String>,
    #[serde(default)]
    pub changed_files: Vec<FileChange>,
}

impl Revision {
    pub fn change(&self, path: &str) -> Option<&FileChange> {
        self.changed_files.iter().find(|c| c.path == path)
    }
}

/// Input for [`RevisionHistory::build`].
#[derive(Debug, Clone, Default)]
pub struct RevisionSpec {
    pub commit_id: String,
    pub parent_id: Option<String>,
    pub snapshot: BTreeMap<String, String>,
    /// Paths declared as changed in addition to those whose content differs.
    pub listed_paths: Vec<String>,
    /// Hunks supplied explicitly; they replace the computed diff for a path.
    pub hunks: BTreeMap<String, Vec<(Span, Span)>>,
}

/// Linear revision history of one project, ordered root to head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevisionHistory {
    pub project: String,
    pub revisions: Vec<Revision>,
}

impl RevisionHistory {
    /// Order revisions from the root and compute changed files.
    ///
    /// Histories must be linear: one root, and each commit is the parent of
    /// at most one other commit.
    pub fn build(project: &str, specs: Vec<RevisionSpec>) -> Result<RevisionHistory, CorpusError> {
        let err = |message: String| CorpusError::History {
            project: project.to_string(),
            message,
        };
        let mut by_id: BTreeMap<String, RevisionSpec> = BTreeMap::new();
        for spec in specs {
            if by_id.contains_key(&spec.commit_id) {
                return Err(err(format!("duplicate commit {}", spec.commit_id)));
            }
            by_id.insert(spec.commit_id.clone(), spec);
        }
        if by_id.is_empty() {
            return Err(err("no revisions".into()));
        }
        for spec in by_id.values() {
            if spec.parent_id.as_deref() == Some(spec.commit_id.as_str()) {
                return Err(CorpusError::Cycle {
                    project: project.into(),
                    commit: spec.commit_id.clone(),
                });
            }
            if let Some(parent) = &spec.parent_id {
                if !by_id.contains_key(parent) {
                    return Err(err(format!(
                        "commit {} names unknown parent {parent}",
                        spec.commit_id
                    )));
                }
            }
        }
        let mut child_of: BTreeMap<&str, &str> = BTreeMap::new();
        for spec in by_id.values() {
            if let Some(parent) = &spec.parent_id {
                if let Some(other) = child_of.insert(parent, &spec.commit_id) {
                    return Err(err(format!(
                        "commit {parent} has several children ({other}, {}); histories must be linear",
                        spec.commit_id
                    )));
                }
            }
        }
        let roots: Vec<&str> = by_id
            .values()
            .filter(|s| s.parent_id.is_none())
            .map(|s| s.commit_id.as_str())
            .collect();
        if roots.is_empty() {
            let commit = by_id.keys().next().cloned().unwrap_or_default();
            return Err(CorpusError::Cycle {
                project: project.into(),
                commit,
            });
        }
        if roots.len() > 1 {
            return Err(err(format!("several root commits: {}", roots.join(", "))));
        }
        let mut order = vec![roots[0].to_string()];
        while let Some(next) = child_of.get(order.last().unwrap().as_str()) {
            order.push(next.to_string());
        }
        if order.len() != by_id.len() {
            let stray = by_id
                .keys()
                .find(|k| !order.contains(k))
                .cloned()
                .unwrap_or_default();
            return Err(CorpusError::Cycle {
                project: project.into(),
                commit: stray,
            });
        }
        let mut revisions: Vec<Revision> = Vec::with_capacity(order.len());
        for id in &order {
            let spec = by_id.remove(id).expect("ordered id exists");
            let changed_files = match revisions.last() {
                None => Vec::new(),
                Some(parent) => changes(project, &parent.snapshot, &spec)?,
            };
            revisions.push(Revision {
                commit_id: spec.commit_id,
                parent_id: spec.parent_id,
                snapshot: spec.snapshot,
                changed_files,
            });
        }
        Ok(RevisionHistory {
            project: project.to_string(),
            revisions,
        })
    }

    pub fn head(&self) -> &Revision {
        self.revisions.last().expect("histories are non-empty")
    }

    pub fn index_of(&self, commit_id: &str) -> Option<usize> {
        self.revisions.iter().position(|r| r.commit_id == commit_id)
    }

    pub fn revision(&self, commit_id: &str) -> Option<&Revision> {
        self.revisions.iter().find(|r| r.commit_id == commit_id)
    }
}

fn changes(
    project: &str,
    parent: &BTreeMap<String, String>,
    spec: &RevisionSpec,
) -> Result<Vec<FileChange>, CorpusError> {
    let mut paths: BTreeSet<&str> = spec.listed_paths.iter().map(String::as_str).collect();
    paths.extend(spec.hunks.keys().map(String::as_str));
    for (path, text) in &spec.snapshot {
        if parent.get(path) != Some(text) {
            paths.insert(path);
        }
    }
    for path in parent.keys() {
        if !spec.snapshot.contains_key(path) {
            paths.insert(path);
        }
    }
    let mut out = Vec::new();
    for path in paths {
        let before = parent.get(path);
        let after = spec.snapshot.get(path);
        if before.is_none() && after.is_none() {
            return Err(CorpusError::MissingSnapshot {
                project: project.into(),
                commit: spec.commit_id.clone(),
                path: path.into(),
            });
        }
        let before = before.map(String::as_str).unwrap_or("");
        let after = after.map(String::as_str).unwrap_or("");
        let hunks = match spec.hunks.get(path) {
            Some(spans) => spans
                .iter()
                .map(|&(b, a)| DiffHunk::from_spans(before, after, b, a))
                .collect(),
            None => line_diff(before, after),
        };
        out.push(FileChange {
            path: path.to_string(),
            hunks,
        });
    }
    Ok(out)
}

/// Read `<root>/manifest` and the per-commit snapshot directories.
///
/// The project name is the last component of `root`.
pub fn ingest_history(root: &Path) -> Result<RevisionHistory, CorpusError> {
    let project = root
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let manifest_path = root.join("manifest");
    let text = fs::read_to_string(&manifest_path).map_err(io_error(&manifest_path))?;
    let specs = parse_manifest(&text, &manifest_path)?;
    let mut loaded = Vec::with_capacity(specs.len());
    for mut spec in specs {
        let dir = root.join(&spec.commit_id);
        if !dir.is_dir() {
            return Err(CorpusError::MissingSnapshot {
                project: project.clone(),
                commit: spec.commit_id.clone(),
                path: String::new(),
            });
        }
        read_tree(&dir, &dir, &mut spec.snapshot)?;
        loaded.push(spec);
    }
    // A listed path must exist in the commit or in its parent.
    let snapshots: BTreeMap<String, BTreeSet<String>> = loaded
        .iter()
        .map(|s| (s.commit_id.clone(), s.snapshot.keys().cloned().collect()))
        .collect();
    for spec in &loaded {
        let parent_files = spec.parent_id.as_ref().and_then(|p| snapshots.get(p));
        for path in spec.listed_paths.iter().chain(spec.hunks.keys()) {
            let known =
                spec.snapshot.contains_key(path) || parent_files.is_some_and(|f| f.contains(path));
            if !known {
                return Err(CorpusError::MissingSnapshot {
                    project: project.clone(),
                    commit: spec.commit_id.clone(),
                    path: path.clone(),
                });
            }
        }
    }
    RevisionHistory::build(&project, loaded)
}

fn read_tree(
    base: &Path,
    dir: &Path,
    out: &mut BTreeMap<String, String>,
) -> Result<(), CorpusError> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(io_error(dir))?
        .collect::<Result<_, _>>()
        .map_err(io_error(dir))?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let path = entry.path();
        if path.is_dir() {
            read_tree(base, &path, out)?;
        } else {
            let text = fs::read_to_string(&path).map_err(io_error(&path))?;
            let rel = path
                .strip_prefix(base)
                .expect("walked below base")
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            out.insert(rel, text);
        }
    }
    Ok(())
}

fn parse_manifest(text: &str, path: &Path) -> Result<Vec<RevisionSpec>, CorpusError> {
    let err = |line: usize, message: String| CorpusError::Manifest {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut specs: Vec<RevisionSpec> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let number = index + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields[0] == "@@" {
            let spec = specs
                .last_mut()
                .ok_or_else(|| err(number, "hunk before any commit".into()))?;
            if fields.len() != 4 {
                return Err(err(
                    number,
                    "hunk lines need path, before span and after span".into(),
                ));
            }
            let before = parse_span(fields[2])
                .ok_or_else(|| err(number, format!("bad span `{}`", fields[2])))?;
            let after = parse_span(fields[3])
                .ok_or_else(|| err(number, format!("bad span `{}`", fields[3])))?;
            if before.is_empty() && after.is_empty() {
                return Err(err(number, "hunk with two empty sides".into()));
            }
            spec.hunks
                .entry(fields[1].to_string())
                .or_default()
                .push((before, after));
            continue;
        }
        if fields.len() < 2 {
            return Err(err(number, "expected commit and parent columns".into()));
        }
        let parent = match fields[1] {
            "-" | "" => None,
            p => Some(p.to_string()),
        };
        specs.push(RevisionSpec {
            commit_id: fields[0].to_string(),
            parent_id: parent,
            listed_paths: fields[2..]
                .iter()
                .filter(|p| !p.is_empty())
                .map(|p| p.to_string())
                .collect(),
            ..RevisionSpec::default()
        });
    }
    Ok(specs)
}

fn parse_span(text: &str) -> Option<Span> {
    let (s, e) = text.split_once(',')?;
    let span = Span::new(s.trim().parse().ok()?, e.trim().parse().ok()?);
    (span.start >= 1 && span.end + 1 >= span.start).then_some(span)
}

/// Category names accepted in a category map, besides [`OTHER_CATEGORY`].
pub const CATEGORIES: &[&str] = &[
    "Bad practice",
    "Correctness",
    "Dodgy code",
    "Experimental",
    "Internationalization",
    "Malicious code vulnerability",
    "Multithreaded correctness",
    "Performance",
    "Security",
];

pub const OTHER_CATEGORY: &str = "Other";

/// Violation type to category lookup; unlisted types fall into `Other`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoryMap {
    entries: BTreeMap<String, String>,
}

impl CategoryMap {
    pub fn parse(text: &str) -> Result<CategoryMap, CorpusError> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| CorpusError::Category {
                line: index + 1,
                message,
            };
            let (ty, category) = line
                .split_once(char::is_whitespace)
                .map(|(t, c)| (t, c.trim()))
                .ok_or_else(|| err("expected a type and a category".into()))?;
            if category != OTHER_CATEGORY && !CATEGORIES.contains(&category) {
                return Err(err(format!("unknown category `{category}`")));
            }
            match entries.get(ty) {
                Some(existing) if existing != category => {
                    return Err(err(format!(
                        "{ty} mapped to both `{existing}` and `{category}`"
                    )))
                }
                _ => {
                    entries.insert(ty.to_string(), category.to_string());
                }
            }
        }
        Ok(CategoryMap { entries })
    }

    pub fn lookup(&self, violation_type: &str) -> &str {
        self.entries
            .get(violation_type)
            .map(String::as_str)
            .unwrap_or(OTHER_CATEGORY)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn load_category_map(path: &Path) -> Result<CategoryMap, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    CategoryMap::parse(&text)
}

/// Everything ingested for a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub violations: Vec<ViolationRecord>,
    pub histories: BTreeMap<String, RevisionHistory>,
    pub categories: CategoryMap,
}

impl Dataset {
    /// Check that every record points at a known commit and file.
    pub fn validate(&self) -> Result<(), CorpusError> {
        for r in &self.violations {
            let history = self
                .histories
                .get(&r.project)
                .ok_or_else(|| CorpusError::History {
                    project: r.project.clone(),
                    message: "violation for a project without history".into(),
                })?;
            let revision = history
                .revision(&r.commit_id)
                .ok_or_else(|| CorpusError::History {
                    project: r.project.clone(),
                    message: format!("violation names unknown commit {}", r.commit_id),
                })?;
            if !revision.snapshot.contains_key(&r.file_path) {
                return Err(CorpusError::MissingSnapshot {
                    project: r.project.clone(),
                    commit: r.commit_id.clone(),
                    path: r.file_path.clone(),
                });
            }
        }
        Ok(())
    }
}

pub const ARCHIVE_MAGIC: &str = "VIOPAT";
pub const ARCHIVE_VERSION: &str = "VIOPAT1";

pub fn write_dataset(dataset: &Dataset, mut out: impl Write) -> io::Result<()> {
    out.write_all(ARCHIVE_VERSION.as_bytes())?;
    out.write_all(b"\n")?;
    serde_json::to_writer(&mut out, dataset)?;
    out.write_all(b"\n")
}

pub fn read_dataset(mut input: impl Read) -> Result<Dataset, CorpusError> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| CorpusError::Archive(e.to_string()))?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .unwrap_or(bytes.len());
    let header = String::from_utf8_lossy(&bytes[..newline])
        .trim_end()
        .to_string();
    if header != ARCHIVE_VERSION {
        if header.starts_with(ARCHIVE_MAGIC) {
            return Err(CorpusError::Version {
                found: header,
                expected: ARCHIVE_VERSION,
            });
        }
        return Err(CorpusError::Archive("missing VIOPAT header".into()));
    }
    let body = bytes.get(newline + 1..).unwrap_or(&[]);
    serde_json::from_slice(body).map_err(|e| CorpusError::Archive(e.to_string()))
}

pub fn persist_dataset(dataset: &Dataset, path: &Path) -> Result<(), CorpusError> {
    let mut buf = Vec::new();
    write_dataset(dataset, &mut buf).map_err(io_error(path))?;
    fs::write(path, buf).map_err(io_error(path))
}

pub fn load_dataset(path: &Path) -> Result<Dataset, CorpusError> {
    let file = fs::File::open(path).map_err(io_error(path))?;
    read_dataset(io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"{"violation_type":"DM_CONVERT_CASE","project":"p","commit_id":"c1","file_path":"src/A.java","start_line":3,"end_line":4,"enclosing_entity":"A.run"}"#;

    #[test]
    fn ingests_records_verbatim() {
        let records = ingest_violations(LINE.as_bytes()).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(r.violation_type, "DM_CONVERT_CASE");
        assert_eq!(r.span(), Span::new(3, 4));
        assert_eq!(r.enclosing_method(), Some("run"));
        assert!(ingest_violations(&b""[..]).unwrap().is_empty());
    }

    #[test]
    fn reports_line_and_field() {
        let text = format!("{LINE}\n{}", LINE.replace(r#""project":"p","#, ""));
        match ingest_violations(text.as_bytes()) {
            Err(CorpusError::MissingField {
                line: 2,
                field: "project",
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let inverted = LINE.replace(r#""start_line":3"#, r#""start_line":5"#);
        let e = ingest_violations(inverted.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("span inverted"), "{e}");
    }

    #[test]
    fn one_line_change_diff() {
        let hunks = line_diff("a\nb\nc\n", "a\nB\nc\n");
        assert_eq!(hunks.len(), 1);
        assert_eq!(hunks[0].before_span, Span::line(2));
        assert_eq!(hunks[0].after_span, Span::line(2));
        assert_eq!(
            (hunks[0].before_text.as_str(), hunks[0].after_text.as_str()),
            ("b", "B")
        );
    }

    #[test]
    fn pure_insertion_has_empty_before_side() {
        let hunks = line_diff("a\nc\n", "a\nb\nc\n");
        assert_eq!(hunks[0].before_span, Span::empty_at(2));
        assert_eq!(hunks[0].after_span, Span::line(2));
    }

    fn spec(id: &str, parent: Option<&str>, files: &[(&str, &str)]) -> RevisionSpec {
        RevisionSpec {
            commit_id: id.into(),
            parent_id: parent.map(Into::into),
            snapshot: files
                .iter()
                .map(|(p, t)| (p.to_string(), t.to_string()))
                .collect(),
            ..RevisionSpec::default()
        }
    }

    #[test]
    fn history_orders_and_rejects_cycles() {
        let h = RevisionHistory::build(
            "p",
            vec![
                spec("b", Some("a"), &[("f", "2")]),
                spec("a", None, &[("f", "1")]),
            ],
        )
        .unwrap();
        assert_eq!(h.revisions[0].commit_id, "a");
        assert_eq!(h.revisions[1].changed_files[0].hunks.len(), 1);
        assert!(h.revisions[0].changed_files.is_empty());

        let selfish = RevisionHistory::build("p", vec![spec("a", Some("a"), &[])]);
        assert!(matches!(selfish, Err(CorpusError::Cycle { .. })));
        let loop2 = RevisionHistory::build(
            "p",
            vec![spec("a", Some("b"), &[]), spec("b", Some("a"), &[])],
        );
        assert!(matches!(loop2, Err(CorpusError::Cycle { .. })));
    }

    #[test]
    fn category_lookup() {
        let map = CategoryMap::parse(
            "DM_CONVERT_CASE\tInternationalization\n# c\nSE_BAD_FIELD Bad practice\n",
        )
        .unwrap();
        assert_eq!(map.lookup("DM_CONVERT_CASE"), "Internationalization");
        assert_eq!(map.lookup("SE_BAD_FIELD"), "Bad practice");
        assert_eq!(map.lookup("NOPE"), "Other");
        assert!(CategoryMap::parse("A Performance\nA Correctness\n").is_err());
        assert!(CategoryMap::parse("A Made up\n").is_err());
    }

    #[test]
    fn archive_header_checks() {
        let mut buf = Vec::new();
        write_dataset(&Dataset::default(), &mut buf).unwrap();
        assert_eq!(read_dataset(&buf[..]).unwrap(), Dataset::default());
        let v2 = String::from_utf8(buf.clone())
            .unwrap()
            .replacen("VIOPAT1", "VIOPAT2", 1);
        assert!(matches!(
            read_dataset(v2.as_bytes()),
            Err(CorpusError::Version { .. })
        ));
        assert!(matches!(
            read_dataset(&b"JUNK\n{}"[..]),
            Err(CorpusError::Archive(_))
        ));
    }
}
