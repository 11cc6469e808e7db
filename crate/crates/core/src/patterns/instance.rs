use serde::{Deserialize, Serialize};

use super::PatternError;
use crate::ast::{context_root, parse, refine, tokenize, AstNode, NodeType, Span, TokenSequence};
use crate::corpus::{DiffHunk, RevisionHistory, ViolationRecord};
use crate::diff::{
    compute_edit_script, compute_edit_script_forest, Action, ChangeOperation, EditScript,
};
use crate::tracker::ViolationLineage;

/// Stable identifier of a violation instance.
pub fn record_id(r: &ViolationRecord) -> String {
    format!(
        "{}:{}:{}:{}-{}:{}",
        r.project, r.commit_id, r.file_path, r.start_line, r.end_line, r.violation_type
    )
}

fn parse_refined(source: &str) -> Result<AstNode, PatternError> {
    Ok(refine(&parse(source)?))
}

/// A located violation: its file tree and the root of its code fragment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationInstance {
    pub id: String,
    pub record: ViolationRecord,
    pub source: String,
    pub tree: AstNode,
    /// Path of the fragment root inside `tree`.
    pub path: Vec<usize>,
    pub tokens: TokenSequence,
}

impl ViolationInstance {
    pub fn locate(record: &ViolationRecord, source: &str) -> Result<Self, PatternError> {
        let tree = parse_refined(source)?;
        let span = record.span();
        let path = context_root(&tree, span)?;
        let tokens = tokenize(&tree, Some(span));
        Ok(ViolationInstance {
            id: record_id(record),
            record: record.clone(),
            source: source.to_string(),
            tree,
            path,
            tokens,
        })
    }

    pub fn fragment(&self) -> &AstNode {
        self.tree.get(&self.path).expect("fragment path is valid")
    }
}

/// Everything the fix-corpus filters look at, for one fixed violation.
#[derive(Debug, Clone, PartialEq)]
pub struct FixCandidate {
    pub id: String,
    /// Last instance of the violation, in the parent of the fixing commit.
    pub record: ViolationRecord,
    pub fix_commit: String,
    /// Hunks of the fixing commit in the violation's file.
    pub hunks: Vec<DiffHunk>,
    /// Span of the method enclosing the violation, in the buggy file.
    pub method_span: Option<Span>,
    pub code_tokens: usize,
    /// Tokens of the fixed code in the hunks' after spans.
    pub fix_tokens: usize,
    pub before: AstNode,
    pub after: AstNode,
}

fn enclosing_method(tree: &AstNode, line: u32) -> Option<Vec<usize>> {
    tree.walk()
        .into_iter()
        .filter(|(_, n)| n.node_type == NodeType::MethodDeclaration && n.span.contains_line(line))
        .map(|(p, _)| p)
        .max_by_key(Vec::len)
}

/// Same-named method of `after`, matching overloads by declaration order.
fn counterpart_method(before: &AstNode, path: &[usize], after: &AstNode) -> Option<Vec<usize>> {
    let label = &before.get(path)?.label;
    let methods = |t: &AstNode| -> Vec<Vec<usize>> {
        t.walk()
            .into_iter()
            .filter(|(_, n)| n.node_type == NodeType::MethodDeclaration && n.label == *label)
            .map(|(p, _)| p)
            .collect()
    };
    let ordinal = methods(before).iter().position(|p| p == path)?;
    let candidates = methods(after);
    candidates.get(ordinal).or(candidates.first()).cloned()
}

/// Gather the facts about a `Fixed` lineage that the fix filters need.
pub fn build_fix_candidate(
    lineage: &ViolationLineage,
    history: &RevisionHistory,
) -> Result<FixCandidate, PatternError> {
    let record = lineage.last().clone();
    let id = record_id(&record);
    let missing = || PatternError::MissingSource(id.clone());
    let fix_commit = lineage.fix_commit.clone().ok_or_else(missing)?;
    let parent = history.revision(&record.commit_id).ok_or_else(missing)?;
    let child = history.revision(&fix_commit).ok_or_else(missing)?;
    let before_source = parent.snapshot.get(&record.file_path).ok_or_else(missing)?;
    let after_source = child.snapshot.get(&record.file_path).ok_or_else(missing)?;
    let hunks = child
        .change(&record.file_path)
        .map(|c| c.hunks.clone())
        .unwrap_or_default();
    let before = parse_refined(before_source)?;
    let after = parse_refined(after_source)?;
    let method_span = enclosing_method(&before, record.start_line)
        .map(|p| before.get(&p).expect("valid path").span);
    let code_tokens = tokenize(&before, Some(record.span())).len();
    let fix_span = hunks
        .iter()
        .map(|h| h.after_span)
        .fold(Span::empty_at(1), |acc, s| acc.cover(&s));
    let fix_tokens = if fix_span.is_empty() {
        0
    } else {
        tokenize(&after, Some(fix_span)).len()
    };
    Ok(FixCandidate {
        id,
        record,
        fix_commit,
        hunks,
        method_span,
        code_tokens,
        fix_tokens,
        before,
        after,
    })
}

/// A fix focused on the statements it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixInstance {
    pub id: String,
    pub violation_type: String,
    /// Buggy anchor: one statement, or (when `window`) a block built from a
    /// run of consecutive statements.
    pub before: AstNode,
    pub after: Vec<AstNode>,
    pub window: bool,
    pub script: EditScript,
    /// Tokens of the buggy violation fragment.
    pub code_tokens: TokenSequence,
}

fn is_prefix(prefix: &[usize], path: &[usize]) -> bool {
    path.len() >= prefix.len() && path[..prefix.len()] == *prefix
}

fn is_anchor_statement(t: &NodeType) -> bool {
    t.is_statement()
        && !matches!(
            t,
            NodeType::Block | NodeType::MethodDeclaration | NodeType::TypeDeclaration
        )
}

/// Positions of a child list edit, in result order: `(old index, new index)`
/// with `None` for deleted or inserted children.
fn alignment(
    old_len: usize,
    ops: &[ChangeOperation],
    moved_out: &[usize],
) -> Vec<(Option<usize>, Option<usize>)> {
    let deleted: Vec<usize> = ops
        .iter()
        .filter(|o| o.action == Action::Del)
        .map(|o| o.index)
        .collect();
    let inserted: Vec<usize> = ops
        .iter()
        .filter(|o| matches!(o.action, Action::Ins | Action::Mov))
        .map(|o| o.index)
        .collect();
    let survivors: Vec<usize> = (0..old_len)
        .filter(|i| !deleted.contains(i) && !moved_out.contains(i))
        .collect();
    let total = survivors.len() + inserted.len();
    let mut out = Vec::new();
    let mut next_old = 0;
    let mut survivor = survivors.iter();
    for slot in 0..total {
        if inserted.contains(&slot) {
            out.push((None, Some(slot)));
            continue;
        }
        let s = *survivor.next().expect("slot count matches");
        while next_old < s {
            out.push((Some(next_old), None));
            next_old += 1;
        }
        out.push((Some(s), Some(slot)));
        next_old = s + 1;
    }
    while next_old < old_len {
        out.push((Some(next_old), None));
        next_old += 1;
    }
    out
}

fn window_block(nodes: Vec<AstNode>, fallback: Span) -> AstNode {
    let span = nodes
        .iter()
        .map(|n| n.span)
        .reduce(|a, b| a.cover(&b))
        .unwrap_or(fallback);
    AstNode::new(NodeType::Block, "", span).with_children(nodes)
}

/// Focus a fix on the lowest statement (or run of statements) holding all
/// of its changes inside the violation's method, and compute the edit
/// script of that region.
pub fn extract_fix_instance(candidate: &FixCandidate) -> Result<FixInstance, PatternError> {
    let id = candidate.id.clone();
    let line = candidate.record.start_line;
    let bpath = enclosing_method(&candidate.before, line)
        .ok_or_else(|| PatternError::NoMethod(id.clone()))?;
    let apath = counterpart_method(&candidate.before, &bpath, &candidate.after)
        .ok_or_else(|| PatternError::NonLocal(id.clone()))?;
    let bm = candidate.before.get(&bpath).expect("valid path");
    let am = candidate.after.get(&apath).expect("valid path");
    let method_script = compute_edit_script(bm, am);
    if method_script.is_empty() {
        return Err(PatternError::NoChange(id));
    }
    // Move sources, relative to the method.
    let moves: Vec<Vec<usize>> = method_script
        .move_sources()
        .into_iter()
        .map(|p| p[1..].to_vec())
        .collect();

    let mut op = &method_script.roots[0];
    let mut b_path: Vec<usize> = Vec::new();
    let mut a_path: Vec<usize> = Vec::new();
    let mut chain = vec![(b_path.clone(), a_path.clone())];
    while op.action == Action::Upd
        && op.new_label.is_none()
        && op.children.len() == 1
        && op.children[0].action == Action::Upd
    {
        let child = &op.children[0];
        let mut next = b_path.clone();
        next.push(child.index);
        if !moves.iter().all(|m| is_prefix(&next, m)) {
            break;
        }
        // a lone UPD child keeps its position
        b_path = next;
        a_path.push(child.index);
        chain.push((b_path.clone(), a_path.clone()));
        op = child;
    }
    if op.action != Action::Upd {
        return Err(PatternError::NonLocal(id));
    }

    let b = bm.get(&b_path).expect("valid path");
    let a = am.get(&a_path).expect("valid path");
    let (before, after, window) = if b.node_type == NodeType::Block && !op.children.is_empty() {
        let direct_moves: Vec<usize> = moves
            .iter()
            .filter(|m| m.len() == b_path.len() + 1 && is_prefix(&b_path, m))
            .map(|m| m[b_path.len()])
            .collect();
        let entries = alignment(b.children.len(), &op.children, &direct_moves);
        let touched_old = |i: usize| {
            op.children
                .iter()
                .any(|o| matches!(o.action, Action::Upd | Action::Del) && o.index == i)
                || moves.iter().any(|m| {
                    m.len() > b_path.len() && is_prefix(&b_path, m) && m[b_path.len()] == i
                })
                || b.children[i].span.contains_line(line)
        };
        let touched_new = |j: usize| {
            op.children
                .iter()
                .any(|o| matches!(o.action, Action::Ins | Action::Mov) && o.index == j)
        };
        let touched: Vec<usize> = entries
            .iter()
            .enumerate()
            .filter(|(_, (o, n))| o.is_some_and(touched_old) || n.is_some_and(touched_new))
            .map(|(k, _)| k)
            .collect();
        let (mut lo, mut hi) = (touched[0], *touched.last().expect("non-empty"));
        if !entries[lo..=hi].iter().any(|(o, _)| o.is_some()) {
            if let Some(k) = (hi + 1..entries.len()).find(|&k| entries[k].0.is_some()) {
                hi = k;
            } else if let Some(k) = (0..lo).rev().find(|&k| entries[k].0.is_some()) {
                lo = k;
            }
        }
        let olds: Vec<usize> = entries[lo..=hi].iter().filter_map(|e| e.0).collect();
        let news: Vec<AstNode> = entries[lo..=hi]
            .iter()
            .filter_map(|e| e.1)
            .map(|j| a.children[j].clone())
            .collect();
        match olds.len() {
            0 => (b.clone(), vec![a.clone()], false),
            1 if is_anchor_statement(&b.children[olds[0]].node_type) => {
                (b.children[olds[0]].clone(), news, false)
            }
            _ => {
                let before = window_block(
                    olds.iter().map(|&i| b.children[i].clone()).collect(),
                    b.span,
                );
                let after = window_block(news, a.span);
                (before, vec![after], true)
            }
        }
    } else {
        let (bp, ap) = chain
            .iter()
            .rev()
            .find(|(p, _)| is_anchor_statement(&bm.get(p).expect("valid path").node_type))
            .ok_or_else(|| PatternError::NonLocal(id.clone()))?;
        (
            bm.get(bp).expect("valid path").clone(),
            vec![am.get(ap).expect("valid path").clone()],
            false,
        )
    };
    let script = compute_edit_script_forest(&before, &after);
    if script.is_empty() {
        return Err(PatternError::NoChange(id));
    }
    Ok(FixInstance {
        id,
        violation_type: candidate.record.violation_type.clone(),
        before,
        after,
        window,
        script,
        code_tokens: tokenize(&candidate.before, Some(candidate.record.span())),
    })
}
