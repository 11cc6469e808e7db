//! Distribution analytics over violation datasets: occurrence and spread
//! rankings, category shares, fluctuation ratios and size histograms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{CategoryMap, ViolationRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeCount {
    pub violation_type: String,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeSpread {
    pub violation_type: String,
    pub projects: usize,
}

/// Counts sorted by count descending, then key ascending.
fn ranked(counts: BTreeMap<String, usize>) -> Vec<TypeCount> {
    let total: usize = counts.values().sum();
    let mut out: Vec<TypeCount> = counts
        .into_iter()
        .map(|(violation_type, count)| TypeCount {
            violation_type,
            count,
            percent: 100.0 * count as f64 / total as f64,
        })
        .collect();
    out.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.violation_type.cmp(&b.violation_type))
    });
    out
}

fn tally<'a>(keys: impl Iterator<Item = &'a str>) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for k in keys {
        *counts.entry(k.to_string()).or_default() += 1;
    }
    counts
}

pub fn occurrence_distribution(violations: &[ViolationRecord]) -> Vec<TypeCount> {
    ranked(tally(violations.iter().map(|v| v.violation_type.as_str())))
}

/// Number of distinct projects each type occurs in, most widespread first.
pub fn spread_distribution(violations: &[ViolationRecord]) -> Vec<TypeSpread> {
    let mut projects: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for v in violations {
        projects
            .entry(&v.violation_type)
            .or_default()
            .insert(&v.project);
    }
    let mut out: Vec<TypeSpread> = projects
        .into_iter()
        .map(|(t, p)| TypeSpread {
            violation_type: t.to_string(),
            projects: p.len(),
        })
        .collect();
    out.sort_by(|a, b| {
        b.projects
            .cmp(&a.projects)
            .then_with(|| a.violation_type.cmp(&b.violation_type))
    });
    out
}

/// Occurrences per category; `violation_type` holds the category name.
pub fn category_distribution(
    violations: &[ViolationRecord],
    categories: &CategoryMap,
) -> Vec<TypeCount> {
    ranked(tally(
        violations
            .iter()
            .map(|v| categories.lookup(&v.violation_type)),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationEntry {
    pub violation_type: String,
    /// Percent of all detected occurrences.
    pub ratio_detected: f64,
    /// Percent of all fixed occurrences.
    pub ratio_fixed: f64,
    pub fr_detected_over_fixed: Option<f64>,
    pub fr_fixed_over_detected: Option<f64>,
}

impl FluctuationEntry {
    pub fn from_ratios(
        violation_type: impl Into<String>,
        ratio_detected: f64,
        ratio_fixed: f64,
    ) -> Self {
        let both = ratio_detected > 0.0 && ratio_fixed > 0.0;
        FluctuationEntry {
            violation_type: violation_type.into(),
            ratio_detected,
            ratio_fixed,
            fr_detected_over_fixed: both.then(|| ratio_detected / ratio_fixed),
            fr_fixed_over_detected: both.then(|| ratio_fixed / ratio_detected),
        }
    }
}

/// Two-decimal display used in every report.
pub fn format_ratio(value: f64) -> String {
    format!("{value:.2}")
}

fn format_optional(value: Option<f64>) -> String {
    value.map(format_ratio).unwrap_or_default()
}

/// Fluctuation entries for every type present in either set, ordered by
/// R1/R2 descending (undefined ratios last), then type.
pub fn fluctuation_ratios(
    detected: &[ViolationRecord],
    fixed: &[ViolationRecord],
) -> Vec<FluctuationEntry> {
    let d = tally(detected.iter().map(|v| v.violation_type.as_str()));
    let f = tally(fixed.iter().map(|v| v.violation_type.as_str()));
    let (dt, ft) = (detected.len() as f64, fixed.len() as f64);
    let types: BTreeSet<&String> = d.keys().chain(f.keys()).collect();
    let percent = |map: &BTreeMap<String, usize>, t: &str, total: f64| {
        map.get(t).map_or(0.0, |&c| 100.0 * c as f64 / total)
    };
    let mut out: Vec<FluctuationEntry> = types
        .into_iter()
        .map(|t| FluctuationEntry::from_ratios(t.clone(), percent(&d, t, dt), percent(&f, t, ft)))
        .collect();
    out.sort_by(
        |a, b| match (a.fr_detected_over_fixed, b.fr_detected_over_fixed) {
            (Some(x), Some(y)) => y
                .total_cmp(&x)
                .then_with(|| a.violation_type.cmp(&b.violation_type)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.violation_type.cmp(&b.violation_type),
        },
    );
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub value: usize,
    pub count: usize,
    pub cumulative_percent: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub buckets: Vec<Bucket>,
}

impl Histogram {
    /// One bucket per distinct value, ascending.
    pub fn from_values(values: &[usize]) -> Self {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &v in values {
            *counts.entry(v).or_default() += 1;
        }
        let total = values.len() as f64;
        let mut running = 0;
        let buckets = counts
            .into_iter()
            .map(|(value, count)| {
                running += count;
                Bucket {
                    value,
                    count,
                    cumulative_percent: 100.0 * running as f64 / total,
                }
            })
            .collect();
        Histogram { buckets }
    }

    pub fn total(&self) -> usize {
        self.buckets.iter().map(|b| b.count).sum()
    }

    /// Percent of values `<= value`.
    pub fn cumulative_at(&self, value: usize) -> f64 {
        let below: usize = self
            .buckets
            .iter()
            .filter(|b| b.value <= value)
            .map(|b| b.count)
            .sum();
        if self.buckets.is_empty() {
            0.0
        } else {
            100.0 * below as f64 / self.total() as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SizeHistograms {
    /// Hunk sizes in lines.
    pub hunk_lines: Histogram,
    /// Token counts of violation fragments.
    pub tokens: Histogram,
}

pub fn size_histograms(hunk_line_sizes: &[usize], token_counts: &[usize]) -> SizeHistograms {
    SizeHistograms {
        hunk_lines: Histogram::from_values(hunk_line_sizes),
        tokens: Histogram::from_values(token_counts),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub occurrence: Vec<TypeCount>,
    pub spread: Vec<TypeSpread>,
    pub categories: Vec<TypeCount>,
    pub fluctuation: Vec<FluctuationEntry>,
    pub histograms: SizeHistograms,
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(&row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 input")
}

impl DistributionReport {
    pub fn occurrence_csv(&self) -> String {
        csv_table(
            &["rank", "type", "count", "percent"],
            self.occurrence.iter().enumerate().map(|(i, t)| {
                vec![
                    (i + 1).to_string(),
                    t.violation_type.clone(),
                    t.count.to_string(),
                    format_ratio(t.percent),
                ]
            }),
        )
    }

    pub fn spread_csv(&self) -> String {
        csv_table(
            &["rank", "type", "projects"],
            self.spread.iter().enumerate().map(|(i, t)| {
                vec![
                    (i + 1).to_string(),
                    t.violation_type.clone(),
                    t.projects.to_string(),
                ]
            }),
        )
    }

    pub fn category_csv(&self) -> String {
        csv_table(
            &["category", "count", "percent"],
            self.categories.iter().map(|t| {
                vec![
                    t.violation_type.clone(),
                    t.count.to_string(),
                    format_ratio(t.percent),
                ]
            }),
        )
    }

    pub fn fluctuation_csv(&self) -> String {
        csv_table(
            &[
                "order",
                "type",
                "ratio_1",
                "ratio_2",
                "r1_over_r2",
                "r2_over_r1",
            ],
            self.fluctuation.iter().enumerate().map(|(i, e)| {
                vec![
                    (i + 1).to_string(),
                    e.violation_type.clone(),
                    format_ratio(e.ratio_detected),
                    format_ratio(e.ratio_fixed),
                    format_optional(e.fr_detected_over_fixed),
                    format_optional(e.fr_fixed_over_detected),
                ]
            }),
        )
    }

    pub fn histogram_csv(&self) -> String {
        let rows = [
            ("hunk-lines", &self.histograms.hunk_lines),
            ("tokens", &self.histograms.tokens),
        ]
        .into_iter()
        .flat_map(|(name, h)| {
            h.buckets.iter().map(move |b| {
                vec![
                    name.to_string(),
                    b.value.to_string(),
                    b.count.to_string(),
                    format_ratio(b.cumulative_percent),
                ]
            })
        })
        .collect::<Vec<_>>();
        csv_table(&["histogram", "value", "count", "cumulative_percent"], rows)
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Violation distributions\n\n## Occurrences\n\n| Rank | Type | Count | % |\n|---|---|---|---|\n");
        for (i, t) in self.occurrence.iter().enumerate() {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} |",
                i + 1,
                t.violation_type,
                t.count,
                format_ratio(t.percent)
            );
        }
        out.push_str("\n## Spread\n\n| Rank | Type | Projects |\n|---|---|---|\n");
        for (i, t) in self.spread.iter().enumerate() {
            let _ = writeln!(out, "| {} | {} | {} |", i + 1, t.violation_type, t.projects);
        }
        out.push_str("\n## Categories\n\n| Category | Count | % |\n|---|---|---|\n");
        for t in &self.categories {
            let _ = writeln!(
                out,
                "| {} | {} | {} |",
                t.violation_type,
                t.count,
                format_ratio(t.percent)
            );
        }
        out.push_str("\n## Fluctuation\n\n| Order | Type | Ratio_1 | Ratio_2 | R1/R2 | R2/R1 |\n|---|---|---|---|---|---|\n");
        for (i, e) in self.fluctuation.iter().enumerate() {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} |",
                i + 1,
                e.violation_type,
                format_ratio(e.ratio_detected),
                format_ratio(e.ratio_fixed),
                format_optional(e.fr_detected_over_fixed),
                format_optional(e.fr_fixed_over_detected)
            );
        }
        for (name, h) in [
            ("Hunk sizes (lines)", &self.histograms.hunk_lines),
            ("Token counts", &self.histograms.tokens),
        ] {
            let _ = write!(
                out,
                "\n## {name}\n\n| Value | Count | Cumulative % |\n|---|---|---|\n"
            );
            for b in &h.buckets {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} |",
                    b.value,
                    b.count,
                    format_ratio(b.cumulative_percent)
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: &str, project: &str) -> ViolationRecord {
        ViolationRecord {
            violation_type: t.into(),
            project: project.into(),
            commit_id: "c".into(),
            file_path: "A.java".into(),
            start_line: 1,
            end_line: 1,
            enclosing_entity: None,
        }
    }

    #[test]
    fn occurrence_percentages() {
        let v = vec![rec("A", "p"), rec("B", "p"), rec("A", "p"), rec("A", "q")];
        let d = occurrence_distribution(&v);
        assert_eq!(d[0].violation_type, "A");
        assert_eq!(d[0].percent, 75.0);
        assert_eq!(d[1].percent, 25.0);
        assert_eq!(occurrence_distribution(&[rec("X", "p")])[0].percent, 100.0);
    }

    #[test]
    fn spread_counts_projects() {
        let v = vec![
            rec("A", "p1"),
            rec("A", "p2"),
            rec("A", "p3"),
            rec("A", "p3"),
            rec("B", "p4"),
        ];
        let s = spread_distribution(&v);
        assert_eq!(
            s[0],
            TypeSpread {
                violation_type: "A".into(),
                projects: 3
            }
        );
        assert!(!s.iter().any(|t| t.violation_type == "C"));
    }

    #[test]
    fn fluctuation_from_ratios() {
        let e = FluctuationEntry::from_ratios("T", 5.0, 5.0);
        assert_eq!(e.fr_detected_over_fixed, Some(1.0));
        let z = FluctuationEntry::from_ratios("T", 0.0, 5.0);
        assert_eq!(z.fr_detected_over_fixed, None);
        assert_eq!(format_ratio(8.19 / 2.19), "3.74");
    }

    #[test]
    fn histogram_cumulative() {
        let h = Histogram::from_values(&[1, 1, 1]);
        assert_eq!(h.buckets.len(), 1);
        assert_eq!(h.cumulative_at(1), 100.0);
        assert!(Histogram::from_values(&[]).buckets.is_empty());
    }

    #[test]
    fn csv_quotes_awkward_names() {
        let report = DistributionReport {
            occurrence: occurrence_distribution(&[rec("A,\"B\"", "p")]),
            ..Default::default()
        };
        assert!(report.occurrence_csv().contains("\"A,\"\"B\"\"\""));
    }
}
