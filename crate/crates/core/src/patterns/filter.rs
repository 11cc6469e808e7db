use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Exclusion, FilterReport, FixCandidate, ViolationInstance};
use crate::corpus::DiffHunk;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub max_tokens: usize,
    /// Fix hunks must lie within this many lines of the violation.
    pub locality: u32,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            max_tokens: 40,
            locality: 3,
        }
    }
}

/// A code-corpus entry: a located violation, or one that could not be
/// parsed.
#[derive(Debug, Clone)]
pub enum CodeItem {
    Located(Box<ViolationInstance>),
    Unparsed { id: String, message: String },
}

/// Keep violations whose fragment has at most `max_tokens` tokens.
pub fn filter_code_corpus(
    items: Vec<CodeItem>,
    max_tokens: usize,
) -> FilterReport<ViolationInstance> {
    let mut report = FilterReport::default();
    for item in items {
        let (id, reason) = match item {
            CodeItem::Unparsed { id, .. } => (id, "parse"),
            CodeItem::Located(v) if v.tokens.len() > max_tokens => (v.id.clone(), "token-count"),
            CodeItem::Located(v) => {
                report.kept.push(*v);
                continue;
            }
        };
        *report.counters.entry(reason.to_string()).or_default() += 1;
        report.excluded.push(Exclusion {
            id,
            reason: reason.to_string(),
        });
    }
    report
}

/// Test sources: a `test`/`tests` directory component or a file stem ending
/// in `Test`.
pub fn is_test_path(path: &str) -> bool {
    let p = Path::new(path);
    let in_test_dir = p.parent().is_some_and(|d| {
        d.components()
            .any(|c| matches!(c.as_os_str().to_str(), Some("test" | "tests")))
    });
    let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    in_test_dir || stem.ends_with("Test")
}

/// Lines a hunk occupies in the buggy file; an insertion occupies the gap
/// between the line before it and the line it precedes.
fn hunk_lines(h: &DiffHunk) -> (u32, u32) {
    if h.before_span.is_empty() {
        let at = h.before_span.start;
        (at.saturating_sub(1), at)
    } else {
        (h.before_span.start, h.before_span.end)
    }
}

fn test_file(c: &FixCandidate, _: &FilterConfig) -> bool {
    is_test_path(&c.record.file_path)
}

fn cross_file(c: &FixCandidate, _: &FilterConfig) -> bool {
    c.hunks.is_empty()
}

fn non_local(c: &FixCandidate, _: &FilterConfig) -> bool {
    let Some(method) = c.method_span else {
        return true;
    };
    c.hunks.iter().any(|h| {
        let (lo, hi) = hunk_lines(h);
        lo < method.start || hi > method.end
    })
}

fn far_from_violation(c: &FixCandidate, config: &FilterConfig) -> bool {
    let lo_bound = c.record.start_line.saturating_sub(config.locality);
    let hi_bound = c.record.end_line + config.locality;
    c.hunks.iter().any(|h| {
        if h.before_span.is_empty() {
            let (before, at) = hunk_lines(h);
            at < lo_bound || before > hi_bound
        } else {
            h.before_span.start < lo_bound || h.before_span.end > hi_bound
        }
    })
}

fn token_count(c: &FixCandidate, config: &FilterConfig) -> bool {
    c.code_tokens > config.max_tokens || c.fix_tokens > config.max_tokens
}

pub type FixFilter = fn(&FixCandidate, &FilterConfig) -> bool;

/// The fix-corpus filters in their canonical order; each returns `true` for
/// a candidate it rejects.
pub const FIX_FILTERS: [(&str, FixFilter); 5] = [
    ("test-file", test_file),
    ("cross-file", cross_file),
    ("non-local", non_local),
    ("far-from-violation", far_from_violation),
    ("token-count", token_count),
];

pub fn filter_fix_corpus(
    candidates: Vec<FixCandidate>,
    config: &FilterConfig,
) -> FilterReport<FixCandidate> {
    filter_fix_corpus_ordered(candidates, config, &[0, 1, 2, 3, 4])
}

/// Apply the filters in the given order (indices into [`FIX_FILTERS`]). The
/// kept set and the counters do not depend on the order; the recorded
/// reason is the first rejecting filter in that order.
pub fn filter_fix_corpus_ordered(
    candidates: Vec<FixCandidate>,
    config: &FilterConfig,
    order: &[usize],
) -> FilterReport<FixCandidate> {
    let mut report = FilterReport::default();
    for (name, _) in FIX_FILTERS {
        report.counters.insert(name.to_string(), 0);
    }
    for c in candidates {
        let failing: Vec<&str> = order
            .iter()
            .map(|&i| FIX_FILTERS[i])
            .filter(|(_, f)| f(&c, config))
            .map(|(n, _)| n)
            .collect();
        for name in &failing {
            *report
                .counters
                .get_mut(*name)
                .expect("every filter has a counter") += 1;
        }
        match failing.first() {
            Some(reason) => report.excluded.push(Exclusion {
                id: c.id.clone(),
                reason: reason.to_string(),
            }),
            None => report.kept.push(c),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_paths() {
        assert!(is_test_path("src/test/java/A.java"));
        assert!(is_test_path("tests/A.java"));
        assert!(is_test_path("src/main/FooTest.java"));
        assert!(!is_test_path("src/main/Testing.java"));
        assert!(!is_test_path("src/main/Contest.java"));
    }
}
