//! Hierarchical edit scripts between refined trees.
//!
//! # Script semantics
//!
//! A script edits a *forest*: its root operations act on the children of a
//! virtual parent whose only original child is the anchor node. Paths are
//! child-index lists from that virtual parent, so the anchor itself is
//! `[0]`.
//!
//! * `UPD` and `DEL` address an original child by its old index. `UPD`
//!   optionally relabels the node (`new_label`) and applies its nested
//!   operations to the node's children; `DEL` removes the node (its nested
//!   `DEL`s only describe the removed subtree).
//! * `INS` and `MOV` address a slot of the resulting child list by its new
//!   index. `INS` builds a node from its entity and nested operations; `MOV`
//!   places a copy of the unchanged subtree found at path `from` in the
//!   original forest, and that source is removed from its old place.
//! * Untouched children keep their relative order and fill the slots not
//!   taken by insertions.
//!
//! Interior `UPD` operations without a new label are structural containers
//! leading to the changed nodes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::abstraction::{Bindings, WILDCARD};
use crate::ast::{AstNode, CodeContext, Sce, TokenSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "UPD")]
    Upd,
    #[serde(rename = "DEL")]
    Del,
    #[serde(rename = "INS")]
    Ins,
    #[serde(rename = "MOV")]
    Mov,
}

impl Action {
    pub fn as_str(&self) -> &'static str {
        match self {
            Action::Upd => "UPD",
            Action::Del => "DEL",
            Action::Ins => "INS",
            Action::Mov => "MOV",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChangeOperation {
    pub action: Action,
    #[serde(flatten)]
    pub sce: Sce,
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ChangeOperation>,
}

impl ChangeOperation {
    fn describe(&self) -> String {
        format!("{} {} at index {}", self.action, self.sce, self.index)
    }

    fn count(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(ChangeOperation::count)
            .sum::<usize>()
    }

    fn preorder<'a>(&'a self, out: &mut Vec<&'a ChangeOperation>) {
        out.push(self);
        for c in &self.children {
            c.preorder(out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EditScript {
    /// Context of the edited (buggy) anchor node.
    pub anchor: CodeContext,
    /// Whether identifiers are placeholders to be resolved through bindings.
    #[serde(default)]
    pub abstracted: bool,
    pub roots: Vec<ChangeOperation>,
}

impl EditScript {
    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Number of operations at every depth.
    pub fn len(&self) -> usize {
        self.roots.iter().map(ChangeOperation::count).sum()
    }

    /// Every operation in depth-first order.
    pub fn operations(&self) -> Vec<&ChangeOperation> {
        let mut out = Vec::new();
        for r in &self.roots {
            r.preorder(&mut out);
        }
        out
    }

    /// Paths of all move sources.
    pub fn move_sources(&self) -> Vec<Vec<usize>> {
        self.operations()
            .into_iter()
            .filter_map(|op| op.from.clone())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scripts serialize")
    }
}

/// `(action, type, identifier)` triples in depth-first order. An empty
/// identifier is written as `_` so the sequence is always three tokens per
/// operation.
pub fn tokenize_script(script: &EditScript) -> TokenSequence {
    let mut tokens = Vec::with_capacity(script.len() * 3);
    for op in script.operations() {
        tokens.push(op.action.as_str().to_string());
        tokens.push(op.sce.node_type.as_str().to_string());
        tokens.push(if op.sce.identifier.is_empty() {
            "_".to_string()
        } else {
            op.sce.identifier.clone()
        });
    }
    TokenSequence { tokens }
}

// ---- computation ----

struct RawOp<'a> {
    action: Action,
    node: &'a AstNode,
    /// For UPD: the after node.
    after: Option<&'a AstNode>,
    index: usize,
    path: Vec<usize>,
    from: Option<Vec<usize>>,
    removed: bool,
    children: Vec<RawOp<'a>>,
}

/// Longest common subsequence alignment; ties keep earlier items of `a`.
fn lcs_pairs<T>(a: &[T], b: &[T], eq: impl Fn(&T, &T) -> bool) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    let mut table = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            table[i][j] = if eq(&a[i], &b[j]) {
                table[i + 1][j + 1] + 1
            } else {
                table[i + 1][j].max(table[i][j + 1])
            };
        }
    }
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if eq(&a[i], &b[j]) && table[i][j] == table[i + 1][j + 1] + 1 {
            out.push((i, j));
            i += 1;
            j += 1;
        } else if table[i + 1][j] >= table[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

fn child_path(base: &[usize], i: usize) -> Vec<usize> {
    let mut p = base.to_vec();
    p.push(i);
    p
}

fn del_op<'a>(node: &'a AstNode, path: Vec<usize>, index: usize) -> RawOp<'a> {
    let children = node
        .children
        .iter()
        .enumerate()
        .map(|(i, c)| del_op(c, child_path(&path, i), i))
        .collect();
    RawOp {
        action: Action::Del,
        node,
        after: None,
        index,
        path,
        from: None,
        removed: false,
        children,
    }
}

fn ins_op<'a>(node: &'a AstNode, path: Vec<usize>, index: usize) -> RawOp<'a> {
    let children = node
        .children
        .iter()
        .enumerate()
        .map(|(i, c)| ins_op(c, child_path(&path, i), i))
        .collect();
    RawOp {
        action: Action::Ins,
        node,
        after: None,
        index,
        path,
        from: None,
        removed: false,
        children,
    }
}

/// Operations turning `old` children into `new` children.
fn diff_children<'a>(
    old: &'a [AstNode],
    new: &'a [AstNode],
    old_base: &[usize],
    new_base: &[usize],
) -> Vec<RawOp<'a>> {
    let old_hashes: Vec<u64> = old.iter().map(AstNode::structure_hash).collect();
    let new_hashes: Vec<u64> = new.iter().map(AstNode::structure_hash).collect();
    let exact = lcs_pairs(
        &(0..old.len()).collect::<Vec<_>>(),
        &(0..new.len()).collect::<Vec<_>>(),
        |&i, &j| old_hashes[i] == new_hashes[j] && old[i].same_structure(&new[j]),
    );
    let mut ops = Vec::new();
    let mut bounds = exact.clone();
    bounds.push((old.len(), new.len()));
    let (mut i0, mut j0) = (0, 0);
    for (i1, j1) in bounds {
        // Gap old[i0..i1] vs new[j0..j1]: pair by node type, in order.
        let gap_old: Vec<usize> = (i0..i1).collect();
        let gap_new: Vec<usize> = (j0..j1).collect();
        let typed = lcs_pairs(&gap_old, &gap_new, |&i, &j| {
            old[i].node_type == new[j].node_type
        });
        let (mut i, mut j) = (i0, j0);
        for (pi, pj) in typed
            .into_iter()
            .map(|(a, b)| (gap_old[a], gap_new[b]))
            .chain([(i1, j1)])
        {
            while i < pi {
                ops.push(del_op(&old[i], child_path(old_base, i), i));
                i += 1;
            }
            while j < pj {
                ops.push(ins_op(&new[j], child_path(new_base, j), j));
                j += 1;
            }
            if pi < i1 {
                if !old[pi].same_structure(&new[pj]) {
                    ops.push(upd_op(
                        &old[pi],
                        &new[pj],
                        child_path(old_base, pi),
                        child_path(new_base, pj),
                        pi,
                    ));
                }
                i = pi + 1;
                j = pj + 1;
            }
        }
        i0 = i1 + 1;
        j0 = j1 + 1;
    }
    ops
}

fn upd_op<'a>(
    before: &'a AstNode,
    after: &'a AstNode,
    old_path: Vec<usize>,
    new_path: Vec<usize>,
    index: usize,
) -> RawOp<'a> {
    let children = diff_children(&before.children, &after.children, &old_path, &new_path);
    RawOp {
        action: Action::Upd,
        node: before,
        after: Some(after),
        index,
        path: old_path,
        from: None,
        removed: false,
        children,
    }
}

fn collect<'a>(
    op: &RawOp<'a>,
    dels: &mut Vec<(Vec<usize>, &'a AstNode)>,
    ins: &mut Vec<(Vec<usize>, &'a AstNode)>,
) {
    match op.action {
        Action::Del => dels.push((op.path.clone(), op.node)),
        Action::Ins => ins.push((op.path.clone(), op.node)),
        _ => {}
    }
    for c in &op.children {
        collect(c, dels, ins);
    }
}

fn is_prefix(prefix: &[usize], path: &[usize]) -> bool {
    path.len() >= prefix.len() && path[..prefix.len()] == *prefix
}

/// Turn (deleted, inserted) pairs of identical subtrees into moves, largest
/// subtrees first.
fn detect_moves(ops: &mut [RawOp<'_>]) {
    let mut dels = Vec::new();
    let mut ins = Vec::new();
    for op in ops.iter() {
        collect(op, &mut dels, &mut ins);
    }
    if dels.is_empty() || ins.is_empty() {
        return;
    }
    dels.sort_by(|a, b| a.0.cmp(&b.0));
    ins.sort_by(|a, b| b.1.size().cmp(&a.1.size()).then_with(|| a.0.cmp(&b.0)));
    let del_hashes: Vec<u64> = dels.iter().map(|(_, n)| n.structure_hash()).collect();
    let mut used_sources: Vec<Vec<usize>> = Vec::new();
    let mut used_targets: Vec<Vec<usize>> = Vec::new();
    let mut moves: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (target_path, target) in &ins {
        if used_targets.iter().any(|t| is_prefix(t, target_path)) {
            continue;
        }
        let hash = target.structure_hash();
        let source = dels.iter().enumerate().find(|(k, (path, node))| {
            del_hashes[*k] == hash
                && node.same_structure(target)
                && !used_sources
                    .iter()
                    .any(|u| is_prefix(u, path) || is_prefix(path, u))
        });
        if let Some((_, (path, _))) = source {
            used_sources.push(path.clone());
            used_targets.push(target_path.clone());
            moves.insert(target_path.clone(), path.clone());
        }
    }
    let sources: BTreeSet<Vec<usize>> = used_sources.into_iter().collect();
    for op in ops.iter_mut() {
        rewrite(op, &sources, &moves);
    }
}

fn rewrite(
    op: &mut RawOp<'_>,
    sources: &BTreeSet<Vec<usize>>,
    moves: &BTreeMap<Vec<usize>, Vec<usize>>,
) {
    match op.action {
        Action::Del if sources.contains(&op.path) => {
            op.removed = true;
            return;
        }
        Action::Ins => {
            if let Some(from) = moves.get(&op.path) {
                op.action = Action::Mov;
                op.from = Some(from.clone());
                op.children.clear();
                return;
            }
        }
        _ => {}
    }
    for c in op.children.iter_mut() {
        rewrite(c, sources, moves);
    }
}

fn finish(op: RawOp<'_>) -> Option<ChangeOperation> {
    if op.removed {
        return None;
    }
    let new_label = match (op.action, op.after) {
        (Action::Upd, Some(after)) if after.label != op.node.label => Some(after.label.clone()),
        _ => None,
    };
    Some(ChangeOperation {
        action: op.action,
        sce: op.node.sce(),
        index: op.index,
        new_label,
        from: op.from,
        children: op.children.into_iter().filter_map(finish).collect(),
    })
}

/// Script turning `before` into `after`.
pub fn compute_edit_script(before: &AstNode, after: &AstNode) -> EditScript {
    compute_edit_script_forest(before, std::slice::from_ref(after))
}

/// Script turning the single tree `before` into the sequence `after`
/// (which may be empty, or hold several statements).
pub fn compute_edit_script_forest(before: &AstNode, after: &[AstNode]) -> EditScript {
    let mut raw = diff_children(std::slice::from_ref(before), after, &[], &[]);
    detect_moves(&mut raw);
    EditScript {
        anchor: CodeContext::from_node(before, None),
        abstracted: false,
        roots: raw.into_iter().filter_map(finish).collect(),
    }
}

// ---- application ----

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiffError {
    #[error("{op}: no binding for abstract entity {entity}")]
    Unbound { op: String, entity: Sce },
    #[error("{op}: {message}")]
    Mismatch { op: String, message: String },
    #[error("script produced {0} trees where one was expected")]
    ResultCount(usize),
    #[error("path {path:?} does not exist in the target tree")]
    BadPath { path: Vec<usize> },
}

struct Applier<'a> {
    bindings: &'a Bindings,
    abstracted: bool,
    moved: BTreeMap<Vec<usize>, AstNode>,
    new_span: crate::ast::Span,
}

impl Applier<'_> {
    fn resolve(&self, op: &ChangeOperation, sce: &Sce) -> Result<String, DiffError> {
        if !self.abstracted {
            return Ok(sce.identifier.clone());
        }
        self.bindings
            .resolve(sce)
            .ok_or_else(|| DiffError::Unbound {
                op: op.describe(),
                entity: sce.clone(),
            })
    }

    fn check(&self, op: &ChangeOperation, old: &[AstNode]) -> Result<(), DiffError> {
        let node = old.get(op.index).ok_or_else(|| DiffError::Mismatch {
            op: op.describe(),
            message: format!("target has only {} children", old.len()),
        })?;
        if node.node_type != op.sce.node_type {
            return Err(DiffError::Mismatch {
                op: op.describe(),
                message: format!("target node is {}", node.sce()),
            });
        }
        if op.sce.identifier == WILDCARD {
            return Ok(());
        }
        let expected = self.resolve(op, &op.sce)?;
        if expected != node.label {
            return Err(DiffError::Mismatch {
                op: op.describe(),
                message: format!("expected label {expected:?}, target has {:?}", node.label),
            });
        }
        Ok(())
    }

    fn children(
        &self,
        old_base: Option<&[usize]>,
        old: &[AstNode],
        ops: &[ChangeOperation],
    ) -> Result<Vec<AstNode>, DiffError> {
        let mut updates: BTreeMap<usize, &ChangeOperation> = BTreeMap::new();
        let mut deletes: BTreeSet<usize> = BTreeSet::new();
        let mut inserts: BTreeMap<usize, AstNode> = BTreeMap::new();
        for op in ops {
            let duplicate = || DiffError::Mismatch {
                op: op.describe(),
                message: "index addressed twice".into(),
            };
            match op.action {
                Action::Upd | Action::Del => {
                    if old_base.is_none() {
                        return Err(DiffError::Mismatch {
                            op: op.describe(),
                            message: "inside an inserted node".into(),
                        });
                    }
                    self.check(op, old)?;
                    let fresh = if op.action == Action::Upd {
                        updates.insert(op.index, op).is_none()
                    } else {
                        deletes.insert(op.index)
                    };
                    if !fresh || (updates.contains_key(&op.index) && deletes.contains(&op.index)) {
                        return Err(duplicate());
                    }
                }
                Action::Ins => {
                    let mut node = AstNode::new(
                        op.sce.node_type.clone(),
                        self.resolve(op, &op.sce)?,
                        self.new_span,
                    );
                    node.children = self.children(None, &[], &op.children)?;
                    if inserts.insert(op.index, node).is_some() {
                        return Err(duplicate());
                    }
                }
                Action::Mov => {
                    let from = op.from.as_ref().ok_or_else(|| DiffError::Mismatch {
                        op: op.describe(),
                        message: "move without a source path".into(),
                    })?;
                    let node = self
                        .moved
                        .get(from)
                        .cloned()
                        .ok_or_else(|| DiffError::BadPath { path: from.clone() })?;
                    if inserts.insert(op.index, node).is_some() {
                        return Err(duplicate());
                    }
                }
            }
        }
        let mut survivors = Vec::new();
        for (i, node) in old.iter().enumerate() {
            let path = old_base.map(|b| child_path(b, i));
            if deletes.contains(&i) || path.as_ref().is_some_and(|p| self.moved.contains_key(p)) {
                continue;
            }
            match updates.get(&i) {
                Some(op) => {
                    let mut updated = node.clone();
                    if let Some(label) = &op.new_label {
                        let sce = Sce::new(op.sce.node_type.clone(), label.clone());
                        updated.label = self.resolve(op, &sce)?;
                    }
                    updated.children =
                        self.children(path.as_deref(), &node.children, &op.children)?;
                    survivors.push(updated);
                }
                None => survivors.push(node.clone()),
            }
        }
        let total = survivors.len() + inserts.len();
        let mut survivors = survivors.into_iter();
        let mut out = Vec::with_capacity(total);
        for slot in 0..total {
            match inserts.remove(&slot) {
                Some(node) => out.push(node),
                None => out.push(survivors.next().expect("slot count matches")),
            }
        }
        if let Some((index, _)) = inserts.into_iter().next() {
            return Err(DiffError::Mismatch {
                op: format!("insertion at index {index}"),
                message: format!("result has only {total} children"),
            });
        }
        Ok(out)
    }
}

/// Apply `script` to `target`, producing the resulting sequence of trees.
///
/// Abstract scripts resolve placeholders through `bindings`; concrete
/// scripts ignore them.
pub fn apply_edit_script_forest(
    target: &AstNode,
    script: &EditScript,
    bindings: &Bindings,
) -> Result<Vec<AstNode>, DiffError> {
    let forest = std::slice::from_ref(target);
    let mut moved = BTreeMap::new();
    for path in script.move_sources() {
        let node = path
            .split_first()
            .filter(|(first, _)| **first == 0)
            .and_then(|(_, rest)| target.get(rest))
            .ok_or_else(|| DiffError::BadPath { path: path.clone() })?;
        moved.insert(path, node.clone());
    }
    let applier = Applier {
        bindings,
        abstracted: script.abstracted,
        moved,
        new_span: target.span,
    };
    applier.children(Some(&[]), forest, &script.roots)
}

/// Apply `script` to `target`; the result must be a single tree.
pub fn apply_edit_script(
    target: &AstNode,
    script: &EditScript,
    bindings: &Bindings,
) -> Result<AstNode, DiffError> {
    let mut out = apply_edit_script_forest(target, script, bindings)?;
    if out.len() != 1 {
        return Err(DiffError::ResultCount(out.len()));
    }
    Ok(out.remove(0))
}

/// Apply `script` to the node at `path` inside `tree`, splicing the result
/// into the parent's children.
pub fn apply_at(
    tree: &AstNode,
    path: &[usize],
    script: &EditScript,
    bindings: &Bindings,
) -> Result<AstNode, DiffError> {
    let target = tree.get(path).ok_or_else(|| DiffError::BadPath {
        path: path.to_vec(),
    })?;
    let replacement = apply_edit_script_forest(target, script, bindings)?;
    let Some((&last, parent_path)) = path.split_last() else {
        if replacement.len() != 1 {
            return Err(DiffError::ResultCount(replacement.len()));
        }
        return Ok(replacement.into_iter().next().expect("one tree"));
    };
    let mut out = tree.clone();
    let parent = out.get_mut(parent_path).expect("parent of a valid path");
    parent.children.splice(last..=last, replacement);
    Ok(out)
}
