use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{abstract_fragment, FixPattern, PatternError, ViolationInstance};
use crate::abstraction::{is_placeholder, Bindings, WILDCARD};
use crate::ast::{
    context_root, parse, refine, render_lines, AstNode, CodeContext, NodeType, Span, TokenSequence,
};
use crate::diff::apply_edit_script_forest;
use crate::embed::{
    cosine_similarity, embed_sequence, train_embeddings, EmbedParams, EmbeddingTable,
};
use crate::features::{extract_features, train_feature_extractor, CnnConfig, FeatureModel};

/// Token embeddings plus a trained extractor: maps token sequences to
/// feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    pub table: EmbeddingTable,
    pub model: FeatureModel,
}

impl FeatureSpace {
    /// Train on a corpus; matrices are padded to the longest sequence (or
    /// the smallest height the network accepts, if larger).
    pub fn train(
        sequences: &[TokenSequence],
        labels: &[String],
        embed: &EmbedParams,
        cnn: &CnnConfig,
    ) -> Result<Self, PatternError> {
        let table = train_embeddings(sequences, embed)?;
        let rows = sequences
            .iter()
            .map(TokenSequence::len)
            .max()
            .unwrap_or(0)
            .max(cnn.min_rows());
        let matrices = sequences
            .iter()
            .map(|s| embed_sequence(&s.tokens, &table, rows))
            .collect::<Result<Vec<_>, _>>()?;
        let model = train_feature_extractor(&matrices, labels, cnn)?;
        Ok(FeatureSpace { table, model })
    }

    pub fn rows(&self) -> usize {
        self.model.rows
    }

    pub fn features(&self, tokens: &TokenSequence) -> Result<Vec<f64>, PatternError> {
        if tokens.is_empty() || tokens.len() > self.rows() {
            return Err(PatternError::Untokenizable {
                tokens: tokens.len(),
                max: self.rows(),
            });
        }
        let m = embed_sequence(&tokens.tokens, &self.table, self.rows())?;
        Ok(extract_features(&m, &self.model)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPattern {
    /// Index into the library.
    pub index: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidates {
    pub entries: Vec<RankedPattern>,
}

/// Top `k` library patterns by cosine similarity between `features` (of the
/// violation's code) and each pattern's centroid features. Only patterns of
/// `violation_type` are considered unless `cross_type` is set. Ties keep
/// library order; a pattern with a zero centroid scores 0.
pub fn match_fix_patterns(
    features: &[f64],
    violation_type: &str,
    library: &[FixPattern],
    k: usize,
    cross_type: bool,
) -> Result<RankedCandidates, PatternError> {
    if library.is_empty() {
        return Err(PatternError::EmptyLibrary);
    }
    if features.iter().all(|v| *v == 0.0) {
        return Err(crate::embed::EmbedError::ZeroVector.into());
    }
    let mut entries = Vec::new();
    for (index, p) in library.iter().enumerate() {
        if !cross_type && p.violation_type != violation_type {
            continue;
        }
        let score = match cosine_similarity(features, &p.centroid_features) {
            Ok(s) => s,
            Err(crate::embed::EmbedError::ZeroVector) => 0.0,
            Err(e) => return Err(e.into()),
        };
        entries.push(RankedPattern { index, score });
    }
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
    entries.truncate(k);
    Ok(RankedCandidates { entries })
}

struct Unifier {
    bindings: Bindings,
    /// Concrete variable name to the placeholder bound to it.
    vars: BTreeMap<String, String>,
}

impl Unifier {
    fn unify(&mut self, ctx: &CodeContext, node: &AstNode) -> bool {
        if ctx.sce.node_type != node.node_type {
            return false;
        }
        if ctx.sce.identifier == WILDCARD {
            return true;
        }
        if is_placeholder(&ctx.sce) {
            if ctx.sce.node_type == NodeType::Variable {
                match self.vars.get(&node.label) {
                    Some(p) if *p != ctx.sce.identifier => return false,
                    _ => {
                        self.vars
                            .insert(node.label.clone(), ctx.sce.identifier.clone());
                    }
                }
            }
            if self.bindings.bind(&ctx.sce, &node.sce()).is_err() {
                return false;
            }
        } else if ctx.sce.identifier != node.label {
            return false;
        }
        ctx.children.len() == node.children.len()
            && ctx
                .children
                .iter()
                .zip(&node.children)
                .all(|(c, n)| self.unify(c, n))
    }
}

/// Bind the placeholders of an abstract context to the entities of
/// `target`. Types must agree everywhere, concrete identifiers must be
/// equal, a placeholder binds one value (distinct variable placeholders
/// bind distinct variables) and a wildcard matches any subtree of its type.
pub fn unify(context: &CodeContext, target: &AstNode) -> Option<Bindings> {
    let mut u = Unifier {
        bindings: Bindings::new(),
        vars: BTreeMap::new(),
    };
    u.unify(context, target).then_some(u.bindings)
}

/// A buggy fragment and its replacement, as whole source lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patch {
    pub file_path: String,
    pub start_line: u32,
    pub frag_b: Vec<String>,
    pub frag_f: Vec<String>,
}

impl Patch {
    /// `source` with the buggy lines replaced.
    pub fn apply_to(&self, source: &str) -> String {
        let lines: Vec<&str> = source.lines().collect();
        let start = (self.start_line as usize)
            .saturating_sub(1)
            .min(lines.len());
        let end = (start + self.frag_b.len()).min(lines.len());
        let mut out: Vec<&str> = lines[..start].to_vec();
        out.extend(self.frag_f.iter().map(String::as_str));
        out.extend(&lines[end..]);
        let mut text = out.join("\n");
        if source.ends_with('\n') {
            text.push('\n');
        }
        text
    }

    pub fn to_unified_diff(&self) -> String {
        let mut out = format!("--- a/{}\n+++ b/{}\n", self.file_path, self.file_path);
        let new_start = if self.frag_f.is_empty() {
            self.start_line.saturating_sub(1)
        } else {
            self.start_line
        };
        out.push_str(&format!(
            "@@ -{},{} +{},{} @@\n",
            self.start_line,
            self.frag_b.len(),
            new_start,
            self.frag_f.len()
        ));
        for l in &self.frag_b {
            out.push_str(&format!("-{l}\n"));
        }
        for l in &self.frag_f {
            out.push_str(&format!("+{l}\n"));
        }
        out
    }
}

/// A place in the violation's tree where the pattern's context unifies.
struct Site {
    /// Path of the parent whose children `first..first + count` are replaced.
    parent: Vec<usize>,
    first: usize,
    count: usize,
    target: AstNode,
    bindings: Bindings,
}

fn find_site(v: &ViolationInstance, pattern: &FixPattern) -> Option<Site> {
    let context = pattern.context();
    for len in (1..=v.path.len()).rev() {
        let path = &v.path[..len];
        let (parent, index) = (path[..len - 1].to_vec(), path[len - 1]);
        if !pattern.window {
            let target = v.tree.get(path).expect("prefix of a valid path");
            if let Some(bindings) = unify(context, target) {
                return Some(Site {
                    parent,
                    first: index,
                    count: 1,
                    target: target.clone(),
                    bindings,
                });
            }
            continue;
        }
        let block = v.tree.get(&parent).expect("prefix of a valid path");
        let k = context.children.len();
        if block.node_type != NodeType::Block || k == 0 || k > block.children.len() {
            continue;
        }
        for first in index.saturating_sub(k - 1)..=index.min(block.children.len() - k) {
            let run = block.children[first..first + k].to_vec();
            let span = run
                .iter()
                .map(|n| n.span)
                .reduce(|a, b| a.cover(&b))
                .expect("k > 0");
            let target = AstNode::new(NodeType::Block, "", span).with_children(run);
            if let Some(bindings) = unify(context, &target) {
                return Some(Site {
                    parent,
                    first,
                    count: k,
                    target,
                    bindings,
                });
            }
        }
    }
    None
}

fn leading_whitespace(line: &str) -> &str {
    &line[..line.len() - line.trim_start().len()]
}

/// Apply a fix pattern to a violation.
///
/// The pattern context is unified with the violation's fragment root and
/// then with each enclosing node in turn; without any match there is no
/// patch. The edited code must reparse and its fragment must no longer have
/// the violation's abstract form, otherwise verification fails.
pub fn generate_patch_candidate(
    v: &ViolationInstance,
    pattern: &FixPattern,
) -> Result<Option<Patch>, PatternError> {
    let Some(site) = find_site(v, pattern) else {
        return Ok(None);
    };
    let mut bindings = site.bindings;
    bindings.extend_missing(&pattern.fresh_bindings);
    let mut replacement = apply_edit_script_forest(&site.target, &pattern.script, &bindings)?;
    if pattern.window {
        match replacement.as_slice() {
            [block] if block.node_type == NodeType::Block => replacement = block.children.clone(),
            _ => {
                return Err(PatternError::Verification(
                    "window pattern did not produce a block".into(),
                ))
            }
        }
    }
    debug_assert!(
        site.count >= 1
            && v.tree
                .get(&site.parent)
                .is_some_and(|p| p.children.len() >= site.first + site.count)
    );

    let lines: Vec<&str> = v.source.lines().collect();
    let span: Span = site.target.span;
    if span.is_empty() || span.end as usize > lines.len() {
        return Err(PatternError::Verification(
            "target has no source lines".into(),
        ));
    }
    let frag_b: Vec<String> = lines[span.start as usize - 1..span.end as usize]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let indent = leading_whitespace(&frag_b[0]).to_string();
    let frag_f: Vec<String> = replacement
        .iter()
        .flat_map(|n| render_lines(n, &indent))
        .collect();
    let patch = Patch {
        file_path: v.record.file_path.clone(),
        start_line: span.start,
        frag_b,
        frag_f,
    };

    let edited = patch.apply_to(&v.source);
    let tree =
        refine(&parse(&edited).map_err(|e| {
            PatternError::Verification(format!("patched code does not parse: {e}"))
        })?);
    if !patch.frag_f.is_empty() {
        let new_span = Span::new(span.start, span.start + patch.frag_f.len() as u32 - 1);
        if let Ok(path) = context_root(&tree, new_span) {
            let before = abstract_fragment(v.fragment()).canonical();
            let after = abstract_fragment(tree.get(&path).expect("valid path")).canonical();
            if before == after {
                return Err(PatternError::Verification(
                    "edited code still has the violation's pattern".into(),
                ));
            }
        }
    }
    Ok(Some(patch))
}
