use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{FixInstance, PatternError};
use crate::abstraction::{abstract_tree, is_placeholder, Abstractor, Bindings, WILDCARD};
use crate::ast::{AstNode, CodeContext, Sce, TokenSequence};
use crate::cluster::sq_dist;
use crate::diff::{tokenize_script, Action, ChangeOperation, EditScript};

/// Abstract form of a code fragment (fresh placeholder numbering).
pub fn abstract_fragment(node: &AstNode) -> AstNode {
    abstract_tree(node)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodePattern {
    pub abstract_entities: BTreeSet<Sce>,
    pub concrete_entities: BTreeSet<Sce>,
    /// The modal abstract fragment.
    pub fragment: AstNode,
    /// Contexts of the members realizing the fragment.
    pub contexts: Vec<CodeContext>,
    pub support: usize,
}

/// Most common abstract fragment of a cluster; ties go to the
/// lexicographically smallest canonical form.
pub fn mine_code_pattern(fragments: &[&AstNode]) -> Result<CodePattern, PatternError> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let abstracted: Vec<AstNode> = fragments.iter().map(|f| abstract_fragment(f)).collect();
    for (i, a) in abstracted.iter().enumerate() {
        groups.entry(a.canonical()).or_default().push(i);
    }
    let (_, members) = groups
        .into_iter()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| b.0.cmp(&a.0)))
        .ok_or(PatternError::EmptyCluster)?;
    let fragment = abstracted[members[0]].clone();
    let mut abstract_entities = BTreeSet::new();
    let mut concrete_entities = BTreeSet::new();
    for (_, node) in fragment.walk() {
        let sce = node.sce();
        if is_placeholder(&sce) {
            abstract_entities.insert(sce);
        } else if !sce.identifier.is_empty() {
            concrete_entities.insert(sce);
        }
    }
    Ok(CodePattern {
        abstract_entities,
        concrete_entities,
        contexts: members
            .iter()
            .map(|&i| CodeContext::from_node(fragments[i], None))
            .collect(),
        support: members.len(),
        fragment,
    })
}

/// A fix instance with placeholders in place of its identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractFix {
    /// Buggy anchor with moved subtrees elided to wildcards.
    pub context: AstNode,
    pub script: EditScript,
    /// Concrete values of the placeholders that only the fixed code uses.
    pub fresh: Bindings,
    /// Serialized abstract script, the grouping key for mining.
    pub key: String,
}

impl AbstractFix {
    pub fn tokens(&self) -> TokenSequence {
        tokenize_script(&self.script)
    }
}

fn abstract_op(op: &ChangeOperation, ab: &mut Abstractor) -> ChangeOperation {
    ChangeOperation {
        action: op.action,
        sce: ab.sce(&op.sce),
        index: op.index,
        new_label: op
            .new_label
            .as_ref()
            .map(|l| ab.identifier(&op.sce.node_type, l)),
        from: op.from.clone(),
        children: op.children.iter().map(|c| abstract_op(c, ab)).collect(),
    }
}

fn collect_fresh(
    abs: &ChangeOperation,
    conc: &ChangeOperation,
    known: &BTreeSet<Sce>,
    fresh: &mut Bindings,
) {
    if abs.action == Action::Ins && is_placeholder(&abs.sce) && !known.contains(&abs.sce) {
        let _ = fresh.bind(&abs.sce, &conc.sce);
    }
    if let (Some(a), Some(c)) = (&abs.new_label, &conc.new_label) {
        let sce = Sce::new(abs.sce.node_type.clone(), a.clone());
        if is_placeholder(&sce) && !known.contains(&sce) {
            let _ = fresh.bind(&sce, &Sce::new(conc.sce.node_type.clone(), c.clone()));
        }
    }
    for (a, c) in abs.children.iter().zip(&conc.children) {
        collect_fresh(a, c, known, fresh);
    }
}

pub fn abstract_fix(instance: &FixInstance) -> AbstractFix {
    let mut elided = instance.before.clone();
    for source in instance.script.move_sources() {
        if let Some(node) = elided.get_mut(&source[1..]) {
            *node = AstNode::new(node.node_type.clone(), WILDCARD, node.span);
        }
    }
    let mut ab = Abstractor::new();
    let context = ab.tree(&elided);
    let roots: Vec<ChangeOperation> = instance
        .script
        .roots
        .iter()
        .map(|op| abstract_op(op, &mut ab))
        .collect();
    let known: BTreeSet<Sce> = context.walk().into_iter().map(|(_, n)| n.sce()).collect();
    let mut fresh = Bindings::new();
    for (a, c) in roots.iter().zip(&instance.script.roots) {
        collect_fresh(a, c, &known, &mut fresh);
    }
    let key = serde_json::to_string(&(instance.window, &roots)).expect("operations serialize");
    let script = EditScript {
        anchor: CodeContext::from_node(&context, None),
        abstracted: true,
        roots,
    };
    AbstractFix {
        context,
        script,
        fresh,
        key,
    }
}

/// Members of a fix cluster.
#[derive(Debug, Clone, Copy)]
pub struct FixMember<'a> {
    pub instance: &'a FixInstance,
    /// Features of the fix (edit script) tokens.
    pub patch_features: &'a [f64],
    /// Features of the buggy code tokens.
    pub code_features: &'a [f64],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixPattern {
    pub violation_type: String,
    /// Abstract script; its anchor is the pattern's code context.
    pub script: EditScript,
    /// Whether the context is a run of statements rather than one statement.
    pub window: bool,
    /// Code features of the cluster member nearest the cluster's mean fix
    /// features.
    pub centroid_features: Vec<f64>,
    /// Id of the member supplying `centroid_features`.
    pub centroid_member: String,
    pub support: usize,
    pub cluster_size: usize,
    /// Default values for placeholders introduced by the fix.
    pub fresh_bindings: Bindings,
    /// Ids of the members realizing the pattern.
    pub members: Vec<String>,
}

impl FixPattern {
    pub fn context(&self) -> &CodeContext {
        &self.script.anchor
    }
}

/// `(abstract script key, support)` for every form in a cluster, most
/// frequent first, ties by key.
pub fn fix_form_frequencies(instances: &[&FixInstance]) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for i in instances {
        *counts.entry(abstract_fix(i).key).or_default() += 1;
    }
    let mut out: Vec<(String, usize)> = counts.into_iter().collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// The most recurring abstract edit script of a cluster.
///
/// Among the members realizing it, the most common abstract context (ties:
/// smallest canonical form) becomes the pattern's context, and its first
/// member by id supplies the defaults for fix-only placeholders.
pub fn mine_fix_pattern(members: &[FixMember<'_>]) -> Result<FixPattern, PatternError> {
    if members.is_empty() {
        return Err(PatternError::EmptyCluster);
    }
    let abstracted: Vec<AbstractFix> = members.iter().map(|m| abstract_fix(m.instance)).collect();
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, a) in abstracted.iter().enumerate() {
        groups.entry(&a.key).or_default().push(i);
    }
    let (_, group) = groups
        .into_iter()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| b.0.cmp(a.0)))
        .expect("non-empty cluster");
    let mut contexts: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for &i in &group {
        contexts
            .entry(abstracted[i].context.canonical())
            .or_default()
            .push(i);
    }
    let (_, with_context) = contexts
        .into_iter()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| b.0.cmp(&a.0)))
        .expect("non-empty group");
    let representative = *with_context
        .iter()
        .min_by(|&&a, &&b| members[a].instance.id.cmp(&members[b].instance.id))
        .expect("non-empty group");

    let dim = members[0].patch_features.len();
    let mut mean = vec![0.0; dim];
    for m in members {
        for (acc, v) in mean.iter_mut().zip(m.patch_features) {
            *acc += v / members.len() as f64;
        }
    }
    let centroid = (0..members.len())
        .min_by(|&a, &b| {
            sq_dist(members[a].patch_features, &mean)
                .total_cmp(&sq_dist(members[b].patch_features, &mean))
                .then(a.cmp(&b))
        })
        .expect("non-empty cluster");

    let mut ids: Vec<String> = group
        .iter()
        .map(|&i| members[i].instance.id.clone())
        .collect();
    ids.sort();
    let rep = &abstracted[representative];
    Ok(FixPattern {
        violation_type: members[representative].instance.violation_type.clone(),
        script: rep.script.clone(),
        window: members[representative].instance.window,
        centroid_features: members[centroid].code_features.to_vec(),
        centroid_member: members[centroid].instance.id.clone(),
        support: group.len(),
        cluster_size: members.len(),
        fresh_bindings: rep.fresh.clone(),
        members: ids,
    })
}
