use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use viopat::corpus::{
    ingest_history, ingest_violations, load_category_map, read_dataset, write_dataset, CategoryMap,
    Dataset, ViolationRecord,
};
use viopat::embed::EmbeddingTable;
use viopat::features::FeatureModel;
use viopat::patterns::{
    build_fix_candidate, extract_fix_instance, filter_code_corpus, filter_fix_corpus,
    generate_patch_candidate, match_fix_patterns, mine_code_library, mine_fix_library, record_id,
    CodeItem, CodePattern, Exclusion, FeatureSpace, FixCandidate, FixPattern, Patch, PatternError,
    RankedCandidates, ViolationInstance,
};
use viopat::stats::{
    category_distribution, fluctuation_ratios, occurrence_distribution, size_histograms,
    spread_distribution, DistributionReport,
};
use viopat::tracker::{track, Outcome, TrackStats, ViolationLineage, ViolationSet};

use crate::config::PipelineConfig;
use crate::store::{InputDigest, Store};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Track,
    Stats,
    MineCode,
    MineFix,
    Match,
    Apply,
    Report,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Track => "track",
            Stage::Stats => "stats",
            Stage::MineCode => "mine-code",
            Stage::MineFix => "mine-fix",
            Stage::Match => "match",
            Stage::Apply => "apply",
            Stage::Report => "report",
        }
    }

    /// Every stage whose outputs this stage reads, directly or not, in
    /// pipeline order.
    pub fn dependencies(self) -> &'static [Stage] {
        use Stage::*;
        match self {
            Ingest => &[],
            Track => &[Ingest],
            Stats | MineCode | MineFix => &[Ingest, Track],
            Match => &[Ingest, Track, MineFix],
            Apply => &[Ingest, Track, MineFix, Match],
            Report => &[Ingest, Track, Stats, MineCode, MineFix, Match, Apply],
        }
    }

    /// Config keys the stage's outputs depend on.
    fn config_keys(self) -> &'static [&'static str] {
        match self {
            Stage::Ingest => &["corpus."],
            Stage::Track => &["track."],
            Stage::Stats | Stage::Report | Stage::Apply => &[],
            Stage::MineCode => &["embed.", "cnn.", "xmeans.", "filter.max_tokens"],
            Stage::MineFix => &["embed.", "cnn.", "xmeans.", "filter."],
            Stage::Match => &["filter.max_tokens", "match."],
        }
    }
}

fn corpus_files(dir: &Path, out: &mut Vec<(String, std::path::PathBuf)>) -> anyhow::Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let path = e.path();
        if path.is_dir() {
            corpus_files(&path, out)?;
        } else {
            out.push((path.display().to_string(), path));
        }
    }
    Ok(())
}

/// Digest of everything `stage` reads under the current config.
fn input_digest(stage: Stage, config: &PipelineConfig, store: &Store) -> Result<String, CliError> {
    let mut d = InputDigest::default();
    d.add("stage", stage.name().as_bytes());
    d.add("config", config.section(stage.config_keys()).as_bytes());
    if stage == Stage::Ingest {
        let read = |p: &Path| fs::read(p).with_context(|| format!("reading {}", p.display()));
        d.add("violations", &read(&config.violations)?);
        if let Some(c) = &config.categories {
            d.add("categories", &read(c)?);
        }
        let mut files = Vec::new();
        corpus_files(&config.projects, &mut files)?;
        let base = config.projects.display().to_string();
        for (name, path) in files {
            d.add(name.strip_prefix(&base).unwrap_or(&name), &read(&path)?);
        }
    }
    for &dep in stage.dependencies() {
        let m = store.manifest(dep).ok_or(CliError::Missing(dep))?;
        d.add(
            dep.name(),
            serde_json::to_string(&m.outputs)
                .expect("string map")
                .as_bytes(),
        );
    }
    Ok(d.finish())
}

/// Fail unless every upstream stage ran with the current inputs.
fn check_dependencies(
    stage: Stage,
    config: &PipelineConfig,
    store: &Store,
) -> Result<(), CliError> {
    for &dep in stage.dependencies() {
        let m = store.manifest(dep).ok_or(CliError::Missing(dep))?;
        if input_digest(dep, config, store)? != m.inputs {
            return Err(CliError::Stale {
                stage: dep,
                reason: "its inputs changed since it ran".into(),
            });
        }
        for name in m.outputs.keys() {
            store.read(dep, name)?;
        }
    }
    Ok(())
}

pub fn run(stage: Stage, config: &PipelineConfig) -> Result<String, CliError> {
    let store = Store::new(&config.output);
    check_dependencies(stage, config, &store)?;
    let inputs = input_digest(stage, config, &store)?;
    let ctx = Ctx {
        config,
        store: &store,
    };
    let (outputs, summary) = match stage {
        Stage::Ingest => ingest(&ctx)?,
        Stage::Track => track_stage(&ctx)?,
        Stage::Stats => stats(&ctx)?,
        Stage::MineCode => mine_code(&ctx)?,
        Stage::MineFix => mine_fix(&ctx)?,
        Stage::Match => match_stage(&ctx)?,
        Stage::Apply => apply(&ctx)?,
        Stage::Report => report(&ctx)?,
    };
    store.commit(stage, inputs, &outputs)?;
    Ok(summary)
}

type Outputs = BTreeMap<String, Vec<u8>>;

struct Ctx<'a> {
    config: &'a PipelineConfig,
    store: &'a Store,
}

fn json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("artifacts serialize");
    bytes.push(b'\n');
    bytes
}

#[derive(Debug, Serialize, Deserialize)]
struct ProjectLineages {
    project: String,
    stats: TrackStats,
    lineages: Vec<ViolationLineage>,
}

impl Ctx<'_> {
    fn dataset(&self) -> Result<Dataset, CliError> {
        let bytes = self.store.read(Stage::Ingest, DATASET)?;
        read_dataset(&bytes[..]).map_err(|e| CliError::Stale {
            stage: Stage::Ingest,
            reason: e.to_string(),
        })
    }

    fn lineages(&self) -> Result<Vec<ProjectLineages>, CliError> {
        self.store.read_json(Stage::Track, LINEAGES)
    }

    fn fix_library(&self) -> Result<(Vec<FixPattern>, FeatureSpace), CliError> {
        let patterns: Vec<FixPattern> = self.store.read_json(Stage::MineFix, FIX_PATTERNS)?;
        let stale = |reason: String| CliError::Stale {
            stage: Stage::MineFix,
            reason,
        };
        let table = EmbeddingTable::from_text(
            &String::from_utf8(self.store.read(Stage::MineFix, CODE_EMBEDDINGS)?)
                .map_err(|e| stale(e.to_string()))?,
        )
        .map_err(|e| stale(e.to_string()))?;
        let model = FeatureModel::from_bytes(&self.store.read(Stage::MineFix, CODE_MODEL)?)
            .map_err(|e| stale(e.to_string()))?;
        Ok((patterns, FeatureSpace { table, model }))
    }
}

const DATASET: &str = "dataset.viopat";
const LINEAGES: &str = "lineages.json";
const CODE_PATTERNS: &str = "code-patterns.json";
const FIX_PATTERNS: &str = "fix-patterns.json";
const FIX_CORPUS: &str = "fix-corpus.json";
const CODE_EMBEDDINGS: &str = "code-space.emb";
const CODE_MODEL: &str = "code-space.cnn";
const MATCHES: &str = "matches.json";
const PATCHES: &str = "patches.diff";
const APPLY: &str = "apply.json";
const DISTRIBUTIONS: &str = "stats/distributions.md";

fn ingest(ctx: &Ctx) -> Result<(Outputs, String), CliError> {
    let c = ctx.config;
    let file = fs::File::open(&c.violations)
        .with_context(|| format!("opening {}", c.violations.display()))?;
    let violations = ingest_violations(BufReader::new(file)).context("reading violations")?;
    let mut dirs: Vec<_> = fs::read_dir(&c.projects)
        .with_context(|| format!("reading {}", c.projects.display()))?
        .collect::<Result<Vec<_>, _>>()
        .context("listing projects")?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    let histories = dirs
        .par_iter()
        .map(|d| ingest_history(d).map(|h| (h.project.clone(), h)))
        .collect::<Result<BTreeMap<_, _>, _>>()
        .context("reading project histories")?;
    let categories = match &c.categories {
        Some(p) => load_category_map(p).context("reading categories")?,
        None => CategoryMap::default(),
    };
    let dataset = Dataset {
        violations,
        histories,
        categories,
    };
    dataset.validate().context("checking the corpus")?;
    let mut bytes = Vec::new();
    write_dataset(&dataset, &mut bytes).context("encoding the dataset")?;
    let summary = format!(
        "ingest: {} violation records, {} projects, {} revisions",
        dataset.violations.len(),
        dataset.histories.len(),
        dataset
            .histories
            .values()
            .map(|h| h.revisions.len())
            .sum::<usize>()
    );
    Ok((BTreeMap::from([(DATASET.to_string(), bytes)]), summary))
}

fn track_stage(ctx: &Ctx) -> Result<(Outputs, String), CliError> {
    let dataset = ctx.dataset()?;
    let config = ctx.config.track;
    let projects = dataset
        .histories
        .par_iter()
        .map(|(name, history)| {
            let records = dataset.violations.iter().filter(|r| &r.project == name);
            let set = ViolationSet::new(history, records)?;
            let result = track(history, &set, &config);
            Ok(ProjectLineages {
                project: name.clone(),
                stats: result.stats,
                lineages: result.lineages,
            })
        })
        .collect::<Result<Vec<_>, viopat::tracker::TrackError>>()
        .context("tracking violations")?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in projects.iter().flat_map(|p| &p.lineages) {
        *counts.entry(outcome_name(l.outcome)).or_default() += 1;
    }
    let summary = format!(
        "track: {} lineages ({})",
        counts.values().sum::<usize>(),
        counts
            .iter()
            .map(|(k, v)| format!("{v} {k}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok((
        BTreeMap::from([(LINEAGES.to_string(), json(&projects))]),
        summary,
    ))
}

fn outcome_name(o: Outcome) -> &'static str {
    match o {
        Outcome::Fixed => "fixed",
        Outcome::Unfixed => "unfixed",
        Outcome::Disappeared => "disappeared",
    }
}

fn lineages_with(projects: &[ProjectLineages], outcome: Outcome) -> Vec<&ViolationLineage> {
    projects
        .iter()
        .flat_map(|p| &p.lineages)
        .filter(|l| l.outcome == outcome)
        .collect()
}

fn fix_candidates(
    dataset: &Dataset,
    projects: &[ProjectLineages],
) -> Vec<(String, Result<FixCandidate, PatternError>)> {
    lineages_with(projects, Outcome::Fixed)
        .par_iter()
        .map(|l| {
            let history = &dataset.histories[&l.last().project];
            (record_id(l.last()), build_fix_candidate(l, history))
        })
        .collect()
}

fn stats(ctx: &Ctx) -> Result<(Outputs, String), CliError> {
    let dataset = ctx.dataset()?;
    let projects = ctx.lineages()?;
    let all: Vec<&ViolationLineage> = projects.iter().flat_map(|p| &p.lineages).collect();
    let detected: Vec<ViolationRecord> = all.iter().map(|l| l.first().clone()).collect();
    let fixed: Vec<ViolationRecord> = all
        .iter()
        .filter(|l| l.outcome == Outcome::Fixed)
        .map(|l| l.last().clone())
        .collect();
    let mut hunk_sizes = Vec::new();
    let mut tokens = Vec::new();
    for (_, c) in fix_candidates(&dataset, &projects) {
        if let Ok(c) = c {
            hunk_sizes.extend(
                c.hunks
                    .iter()
                    .map(|h| h.before_span.len().max(h.after_span.len()) as usize),
            );
            tokens.push(c.code_tokens);
        }
    }
    let report = DistributionReport {
        occurrence: occurrence_distribution(&detected),
        spread: spread_distribution(&detected),
        categories: category_distribution(&detected, &dataset.categories),
        fluctuation: fluctuation_ratios(&detected, &fixed),
        histograms: size_histograms(&hunk_sizes, &tokens),
    };
    let outputs = BTreeMap::from([
        (
            "stats/occurrence.csv".to_string(),
            report.occurrence_csv().into_bytes(),
        ),
        (
            "stats/spread.csv".to_string(),
            report.spread_csv().into_bytes(),
        ),
        (
            "stats/categories.csv".to_string(),
            report.category_csv().into_bytes(),
        ),
        (
            "stats/fluctuation.csv".to_string(),
            report.fluctuation_csv().into_bytes(),
        ),
        (
            "stats/histograms.csv".to_string(),
            report.histogram_csv().into_bytes(),
        ),
        (DISTRIBUTIONS.to_string(), report.to_markdown().into_bytes()),
    ]);
    let summary = format!(
        "stats: {} violation types, {} detected, {} fixed",
        report.occurrence.len(),
        detected.len(),
        fixed.len()
    );
    Ok((outputs, summary))
}

/// Locate each record in the snapshot of its own commit.
fn locate_all(dataset: &Dataset, records: &[&ViolationRecord]) -> Vec<CodeItem> {
    records
        .par_iter()
        .map(|r| {
            let source = dataset
                .histories
                .get(&r.project)
                .and_then(|h| h.revision(&r.commit_id))
                .and_then(|rev| rev.snapshot.get(&r.file_path));
            match source.map(|s| ViolationInstance::locate(r, s)) {
                Some(Ok(v)) => CodeItem::Located(Box::new(v)),
                Some(Err(e)) => CodeItem::Unparsed {
                    id: record_id(r),
                    message: e.to_string(),
                },
                None => CodeItem::Unparsed {
                    id: record_id(r),
                    message: "source not available".into(),
                },
            }
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct CodePatternEntry {
    violation_type: String,
    support: usize,
    cluster_size: usize,
    /// Ids of the cluster members.
    members: Vec<String>,
    pattern: CodePattern,
}

#[derive(Debug, Serialize, Deserialize)]
struct CodePatternsArtifact {
    violations: usize,
    counters: BTreeMap<String, usize>,
    excluded: Vec<Exclusion>,
    patterns: Vec<CodePatternEntry>,
}

fn mine_code(ctx: &Ctx) -> Result<(Outputs, String), CliError> {
    let dataset = ctx.dataset()?;
    let projects = ctx.lineages()?;
    let records: Vec<&ViolationRecord> = lineages_with(&projects, Outcome::Fixed)
        .into_iter()
        .map(|l| l.last())
        .collect();
    let report = filter_code_corpus(locate_all(&dataset, &records), ctx.config.filter.max_tokens);
    let mut patterns = Vec::new();
    if !report.kept.is_empty() {
        let lib =
            mine_code_library(&report.kept, &ctx.config.mining).context("mining code patterns")?;
        for (pattern, members) in lib.patterns.into_iter().zip(lib.clusters) {
            patterns.push(CodePatternEntry {
                violation_type: report.kept[members[0]].record.violation_type.clone(),
                support: pattern.support,
                cluster_size: members.len(),
                members: members.iter().map(|&i| report.kept[i].id.clone()).collect(),
                pattern,
            });
        }
    }
    let summary = format!(
        "mine-code: {} code patterns from {} violations ({} excluded)",
        patterns.len(),
        report.kept.len(),
        report.excluded.len()
    );
    let artifact = CodePatternsArtifact {
        violations: records.len(),
        counters: report.counters,
        excluded: report.excluded,
        patterns,
    };
    Ok((
        BTreeMap::from([(CODE_PATTERNS.to_string(), json(&artifact))]),
        summary,
    ))
}

#[derive(Debug, Serialize, Deserialize)]
struct FixCorpusArtifact {
    candidates: usize,
    counters: BTreeMap<String, usize>,
    excluded: Vec<Exclusion>,
    /// Ids of the fix instances, and the pattern mined from their cluster.
    instances: Vec<(String, usize)>,
}

fn mine_fix(ctx: &Ctx) -> Result<(Outputs, String), CliError> {
    let dataset = ctx.dataset()?;
    let projects = ctx.lineages()?;
    let built = fix_candidates(&dataset, &projects);
    let total = built.len();
    let mut excluded = Vec::new();
    let mut candidates = Vec::new();
    for (id, c) in built {
        match c {
            Ok(c) => candidates.push(c),
            Err(e) => excluded.push(Exclusion {
                id,
                reason: format!("unavailable: {e}"),
            }),
        }
    }
    let mut report = filter_fix_corpus(candidates, &ctx.config.filter);
    excluded.append(&mut report.excluded);
    let extracted: Vec<_> = report.kept.par_iter().map(extract_fix_instance).collect();
    let mut instances = Vec::new();
    for (c, r) in report.kept.iter().zip(extracted) {
        match r {
            Ok(i) => instances.push(i),
            Err(e) => excluded.push(Exclusion {
                id: c.id.clone(),
                reason: format!("extraction: {e}"),
            }),
        }
    }
    if instances.is_empty() {
        return Err(anyhow::anyhow!(
            "no fix instances survived filtering ({total} fixed violations)"
        )
        .into());
    }
    let lib = mine_fix_library(&instances, &ctx.config.mining).context("mining fix patterns")?;
    let mut membership = Vec::new();
    for (p, members) in lib.clusters.iter().enumerate() {
        membership.extend(members.iter().map(|&i| (instances[i].id.clone(), p)));
    }
    membership.sort();
    let summary = format!(
        "mine-fix: {} fix patterns from {} fix instances ({} excluded)",
        lib.patterns.len(),
        instances.len(),
        excluded.len()
    );
    let artifact = FixCorpusArtifact {
        candidates: total,
        counters: report.counters,
        excluded,
        instances: membership,
    };
    let outputs = BTreeMap::from([
        (FIX_PATTERNS.to_string(), json(&lib.patterns)),
        (FIX_CORPUS.to_string(), json(&artifact)),
        (
            CODE_EMBEDDINGS.to_string(),
            lib.code_space.table.to_text().into_bytes(),
        ),
        (CODE_MODEL.to_string(), lib.code_space.model.to_bytes()),
    ]);
    Ok((outputs, summary))
}

#[derive(Debug, Serialize, Deserialize)]
struct MatchEntry {
    id: String,
    record: ViolationRecord,
    ranked: RankedCandidates,
}

#[derive(Debug, Serialize, Deserialize)]
struct MatchesArtifact {
    matched: Vec<MatchEntry>,
    excluded: Vec<Exclusion>,
}

fn match_stage(ctx: &Ctx) -> Result<(Outputs, String), CliError> {
    let dataset = ctx.dataset()?;
    let projects = ctx.lineages()?;
    let (library, space) = ctx.fix_library()?;
    let records: Vec<&ViolationRecord> = lineages_with(&projects, Outcome::Unfixed)
        .into_iter()
        .map(|l| l.last())
        .collect();
    let report = filter_code_corpus(locate_all(&dataset, &records), ctx.config.filter.max_tokens);
    let mut excluded = report.excluded;
    let results: Vec<_> = report
        .kept
        .par_iter()
        .map(|v| {
            let f = space.features(&v.tokens)?;
            match_fix_patterns(
                &f,
                &v.record.violation_type,
                &library,
                ctx.config.top_k,
                ctx.config.cross_type,
            )
        })
        .collect();
    let mut matched = Vec::new();
    for (v, r) in report.kept.iter().zip(results) {
        match r {
            Ok(ranked) if ranked.entries.is_empty() => excluded.push(Exclusion {
                id: v.id.clone(),
                reason: "no pattern of this type".into(),
            }),
            Ok(ranked) => matched.push(MatchEntry {
                id: v.id.clone(),
                record: v.record.clone(),
                ranked,
            }),
            Err(e) => excluded.push(Exclusion {
                id: v.id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    let summary = format!(
        "match: {} unfixed violations ranked, {} excluded",
        matched.len(),
        excluded.len()
    );
    let artifact = MatchesArtifact { matched, excluded };
    Ok((
        BTreeMap::from([(MATCHES.to_string(), json(&artifact))]),
        summary,
    ))
}

#[derive(Debug, Serialize, Deserialize)]
struct ApplyEntry {
    id: String,
    /// Library index of the pattern that produced the patch.
    pattern: Option<usize>,
    status: String,
    /// Verification or application failures of higher-ranked patterns.
    failures: Vec<String>,
}

fn apply(ctx: &Ctx) -> Result<(Outputs, String), CliError> {
    let dataset = ctx.dataset()?;
    let (library, _) = ctx.fix_library()?;
    let matches: MatchesArtifact = ctx.store.read_json(Stage::Match, MATCHES)?;
    let results: Vec<(ApplyEntry, Option<Patch>)> = matches
        .matched
        .par_iter()
        .map(|m| {
            let r = &m.record;
            let source = dataset
                .histories
                .get(&r.project)
                .and_then(|h| h.revision(&r.commit_id))
                .and_then(|rev| rev.snapshot.get(&r.file_path));
            let mut entry = ApplyEntry {
                id: m.id.clone(),
                pattern: None,
                status: "no-patch".into(),
                failures: Vec::new(),
            };
            let v = match source.map(|s| ViolationInstance::locate(r, s)) {
                Some(Ok(v)) => v,
                Some(Err(e)) => {
                    entry.status = format!("unparsable: {e}");
                    return (entry, None);
                }
                None => {
                    entry.status = "source not available".into();
                    return (entry, None);
                }
            };
            for c in &m.ranked.entries {
                match generate_patch_candidate(&v, &library[c.index]) {
                    Ok(Some(mut patch)) => {
                        patch.file_path = format!("{}/{}", r.project, r.file_path);
                        entry.pattern = Some(c.index);
                        entry.status = "patched".into();
                        return (entry, Some(patch));
                    }
                    Ok(None) => {}
                    Err(e) => entry.failures.push(format!("pattern {}: {e}", c.index)),
                }
            }
            (entry, None)
        })
        .collect();
    let mut diff = String::new();
    let mut entries = Vec::new();
    for (entry, patch) in results {
        if let Some(p) = patch {
            let _ = writeln!(diff, "# {}", entry.id);
            diff.push_str(&p.to_unified_diff());
        }
        entries.push(entry);
    }
    let patched = entries.iter().filter(|e| e.pattern.is_some()).count();
    let summary = format!(
        "apply: {patched} of {} matched violations patched",
        entries.len()
    );
    let outputs = BTreeMap::from([
        (PATCHES.to_string(), diff.into_bytes()),
        (APPLY.to_string(), json(&entries)),
    ]);
    Ok((outputs, summary))
}

fn report(ctx: &Ctx) -> Result<(Outputs, String), CliError> {
    let dataset = ctx.dataset()?;
    let projects = ctx.lineages()?;
    let distributions =
        String::from_utf8_lossy(&ctx.store.read(Stage::Stats, DISTRIBUTIONS)?).into_owned();
    let code: CodePatternsArtifact = ctx.store.read_json(Stage::MineCode, CODE_PATTERNS)?;
    let (library, _) = ctx.fix_library()?;
    let corpus: FixCorpusArtifact = ctx.store.read_json(Stage::MineFix, FIX_CORPUS)?;
    let matches: MatchesArtifact = ctx.store.read_json(Stage::Match, MATCHES)?;
    let applied: Vec<ApplyEntry> = ctx.store.read_json(Stage::Apply, APPLY)?;

    let mut out = String::from("# Pipeline report\n\n## Corpus\n\n");
    let _ = writeln!(out, "- projects: {}", dataset.histories.len());
    let _ = writeln!(
        out,
        "- revisions: {}",
        dataset
            .histories
            .values()
            .map(|h| h.revisions.len())
            .sum::<usize>()
    );
    let _ = writeln!(out, "- violation records: {}", dataset.violations.len());

    out.push_str("\n## Tracking\n\n| Project | Lineages | Fixed | Unfixed | Disappeared | Location | Snippet | Hash |\n|---|---|---|---|---|---|---|---|\n");
    for p in &projects {
        let count = |o| p.lineages.iter().filter(|l| l.outcome == o).count();
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} |",
            p.project,
            p.lineages.len(),
            count(Outcome::Fixed),
            count(Outcome::Unfixed),
            count(Outcome::Disappeared),
            p.stats.location_matches,
            p.stats.snippet_matches,
            p.stats.hash_matches
        );
    }

    out.push('\n');
    out.push_str(
        distributions
            .trim_start_matches("# Violation distributions\n")
            .trim_start(),
    );
    if !out.ends_with('\n') {
        out.push('\n');
    }

    out.push_str("\n## Code patterns\n\n| # | Type | Support | Cluster | Fragment |\n|---|---|---|---|---|\n");
    for (i, p) in code.patterns.iter().enumerate() {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | `{}` |",
            i + 1,
            p.violation_type,
            p.support,
            p.cluster_size,
            p.pattern.fragment.canonical()
        );
    }

    out.push_str("\n## Fix corpus\n\n");
    let _ = writeln!(out, "- fixed violations: {}", corpus.candidates);
    let _ = writeln!(out, "- fix instances: {}", corpus.instances.len());
    for (name, n) in &corpus.counters {
        let _ = writeln!(out, "- rejected by {name}: {n}");
    }

    out.push_str(
        "\n## Fix patterns\n\n| # | Type | Support | Cluster | Context |\n|---|---|---|---|---|\n",
    );
    for (i, p) in library.iter().enumerate() {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | `{}` |",
            i,
            p.violation_type,
            p.support,
            p.cluster_size,
            p.context().to_node().canonical()
        );
    }

    let patched = applied.iter().filter(|e| e.pattern.is_some()).count();
    out.push_str("\n## Unfixed violations\n\n");
    let _ = writeln!(
        out,
        "- ranked against the library: {}",
        matches.matched.len()
    );
    let _ = writeln!(out, "- excluded: {}", matches.excluded.len());
    let _ = writeln!(out, "- patched: {patched}");
    let summary = format!("report: {} bytes", out.len());
    Ok((
        BTreeMap::from([("report.md".to_string(), out.into_bytes())]),
        summary,
    ))
}
