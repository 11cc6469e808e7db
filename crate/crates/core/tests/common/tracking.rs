//! Synthetic project histories with known violation identities.
//!
//! Each file is a class of small methods. A method may hold one violation
//! line whose text is unique, so the true identity of every reported
//! violation is known. Revisions apply random edits: lines inserted above
//! a violation, methods moved verbatim to the end of the class, files
//! renamed or deleted, methods deleted, violation lines rewritten (fixes)
//! and new methods appended.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use viopat::corpus::{RevisionHistory, RevisionSpec, ViolationRecord};
use viopat::tracker::{Outcome, TrackResult};

pub const PROJECT: &str = "gen";
const TYPES: [&str; 4] = ["NP_NULL", "DM_CONVERT_CASE", "SE_BAD_FIELD", "UC_USELESS"];

#[derive(Debug, Clone)]
struct Block {
    name: u32,
    fills: Vec<u32>,
    /// (violation id, type index) while the violation is alive.
    violation: Option<(u32, usize)>,
    /// Rewritten middle line after a fix.
    fixed: Option<u32>,
    tail: u32,
}

#[derive(Debug, Clone)]
struct File {
    path: String,
    blocks: Vec<Block>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truth {
    /// (commit, path, line) per revision the violation is reported in.
    pub chain: Vec<(String, String, u32)>,
    pub outcome: Outcome,
    pub fix_commit: Option<String>,
}

pub struct Generated {
    pub history: RevisionHistory,
    pub violations: Vec<ViolationRecord>,
    pub truth: BTreeMap<u32, Truth>,
    /// How often each kind of edit was applied.
    pub edits: BTreeMap<&'static str, usize>,
}

fn commit(r: usize) -> String {
    format!("r{r:02}")
}

fn render(file: &File) -> (String, Vec<(u32, usize, u32)>) {
    let mut lines = vec!["class A {".to_string()];
    let mut found = Vec::new();
    for b in &file.blocks {
        lines.push(format!("  void m{}() {{", b.name));
        for f in &b.fills {
            lines.push(format!("    int f{f} = {f};"));
        }
        match (b.violation, b.fixed) {
            (Some((id, ty)), _) => {
                lines.push(format!("    int v{id} = check{ty}(v{id}, {id});"));
                found.push((id, ty, lines.len() as u32));
            }
            (None, Some(id)) => lines.push(format!("    int w{id} = 0;")),
            (None, None) => {}
        }
        lines.push(format!("    int f{t} = {t};", t = b.tail));
        lines.push(format!("  }} // m{}", b.name));
    }
    lines.push("}".to_string());
    (lines.join("\n") + "\n", found)
}

struct Gen {
    rng: ChaCha8Rng,
    counter: u32,
    next_id: u32,
    next_file: u32,
}

impl Gen {
    fn fresh(&mut self) -> u32 {
        self.counter += 1;
        self.counter
    }

    fn block(&mut self) -> Block {
        let id = self.next_id;
        self.next_id += 1;
        let ty = self.rng.random_range(0..TYPES.len());
        Block {
            name: id,
            fills: vec![self.fresh()],
            violation: Some((id, ty)),
            fixed: None,
            tail: self.fresh(),
        }
    }
}

/// `total` violations over `revisions` revisions, five files.
pub fn generate(seed: u64, total: u32, revisions: usize) -> Generated {
    assert!(revisions >= 2);
    let per_revision = total / 10;
    let initial = total - per_revision * (revisions as u32 - 1);
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        counter: 10_000,
        next_id: 1,
        next_file: 0,
    };
    let mut files: Vec<File> = Vec::new();
    for _ in 0..5 {
        g.next_file += 1;
        files.push(File {
            path: format!("src/F{}.java", g.next_file),
            blocks: Vec::new(),
        });
    }
    for i in 0..initial {
        let b = g.block();
        files[i as usize % 5].blocks.push(b);
    }

    let mut truth: BTreeMap<u32, Truth> = BTreeMap::new();
    let mut specs = Vec::new();
    let mut violations = Vec::new();
    let mut edits: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut snapshot_of = |files: &[File],
                           r: usize,
                           truth: &mut BTreeMap<u32, Truth>,
                           violations: &mut Vec<ViolationRecord>| {
        let mut snapshot = BTreeMap::new();
        for f in files {
            let (text, found) = render(f);
            for (id, ty, line) in found {
                truth
                    .entry(id)
                    .or_insert_with(|| Truth {
                        chain: Vec::new(),
                        outcome: Outcome::Unfixed,
                        fix_commit: None,
                    })
                    .chain
                    .push((commit(r), f.path.clone(), line));
                violations.push(ViolationRecord {
                    violation_type: TYPES[ty].into(),
                    project: PROJECT.into(),
                    commit_id: commit(r),
                    file_path: f.path.clone(),
                    start_line: line,
                    end_line: line,
                    enclosing_entity: Some(format!("A.m{id}")),
                });
            }
            snapshot.insert(f.path.clone(), text);
        }
        specs.push(RevisionSpec {
            commit_id: commit(r),
            parent_id: r.checked_sub(1).map(commit),
            snapshot,
            ..RevisionSpec::default()
        });
    };
    snapshot_of(&files, 0, &mut truth, &mut violations);

    for r in 1..revisions {
        let gone = |id: u32, outcome: Outcome, truth: &mut BTreeMap<u32, Truth>| {
            let t = truth.get_mut(&id).expect("reported violation");
            t.outcome = outcome;
            if outcome == Outcome::Fixed {
                t.fix_commit = Some(commit(r));
            }
        };
        let mut next_files = Vec::new();
        let mut alive = files.len();
        for mut file in std::mem::take(&mut files) {
            let roll: f64 = g.rng.random();
            if roll < 0.04 && alive > 3 {
                alive -= 1;
                *edits.entry("delete-file").or_default() += 1;
                for b in &file.blocks {
                    if let Some((id, _)) = b.violation {
                        gone(id, Outcome::Disappeared, &mut truth);
                    }
                }
                continue;
            }
            if roll < 0.10 {
                *edits.entry("rename-file").or_default() += 1;
                g.next_file += 1;
                file.path = format!("src/F{}.java", g.next_file);
                next_files.push(file);
                continue;
            }
            let n = file.blocks.len();
            let mut kept = Vec::new();
            let mut moved = Vec::new();
            for (i, mut b) in file.blocks.into_iter().enumerate() {
                let last = i + 1 == n;
                let u: f64 = g.rng.random();
                match b.violation {
                    Some((id, _)) if u < 0.08 => {
                        *edits.entry("fix").or_default() += 1;
                        gone(id, Outcome::Fixed, &mut truth);
                        b.violation = None;
                        b.fixed = Some(id);
                    }
                    Some((id, _)) if u < 0.12 && !last => {
                        *edits.entry("delete-method").or_default() += 1;
                        gone(id, Outcome::Disappeared, &mut truth);
                        continue;
                    }
                    Some(_) if u < 0.16 && i + 2 < n && moved.is_empty() => {
                        *edits.entry("move").or_default() += 1;
                        moved.push(b);
                        continue;
                    }
                    _ if u < 0.30 => {
                        *edits.entry("shift").or_default() += 1;
                        for _ in 0..g.rng.random_range(1..=3) {
                            let f = g.fresh();
                            b.fills.insert(0, f);
                        }
                    }
                    _ => {}
                }
                kept.push(b);
            }
            kept.extend(moved);
            file.blocks = kept;
            next_files.push(file);
        }
        files = next_files;
        for _ in 0..per_revision {
            let b = g.block();
            let f = g.rng.random_range(0..files.len());
            files[f].blocks.push(b);
            *edits.entry("new").or_default() += 1;
        }
        snapshot_of(&files, r, &mut truth, &mut violations);
    }
    let history = RevisionHistory::build(PROJECT, specs).expect("generated history is linear");
    Generated {
        history,
        violations,
        truth,
        edits,
    }
}

/// Differences between tracked lineages and the hidden identities.
pub fn errors(result: &TrackResult, generated: &Generated) -> Vec<String> {
    let mut owner: BTreeMap<(String, String, u32), u32> = BTreeMap::new();
    for (id, t) in &generated.truth {
        for c in &t.chain {
            owner.insert(c.clone(), *id);
        }
    }
    let mut errors = Vec::new();
    let mut seen: BTreeMap<u32, usize> = BTreeMap::new();
    for l in &result.lineages {
        let coords: Vec<(String, String, u32)> = l
            .chain
            .iter()
            .map(|r| (r.commit_id.clone(), r.file_path.clone(), r.start_line))
            .collect();
        let id = owner[&coords[0]];
        *seen.entry(id).or_default() += 1;
        let t = &generated.truth[&id];
        if coords != t.chain {
            errors.push(format!("v{id}: chain {coords:?}, expected {:?}", t.chain));
        } else if l.outcome != t.outcome || l.fix_commit != t.fix_commit {
            errors.push(format!(
                "v{id}: {:?} {:?}, expected {:?} {:?}",
                l.outcome, l.fix_commit, t.outcome, t.fix_commit
            ));
        }
    }
    for (id, n) in seen {
        if n != 1 {
            errors.push(format!("v{id}: split over {n} lineages"));
        }
    }
    errors
}
