use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AstNode, NodeType, Span};

/// Flat token list produced by a depth-first walk.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

impl From<Vec<String>> for TokenSequence {
    fn from(tokens: Vec<String>) -> Self {
        TokenSequence { tokens }
    }
}

/// Declared type text of every variable declared anywhere in `tree`.
///
/// The first declaration of a name wins.
pub fn variable_types(tree: &AstNode) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for (_, node) in tree.walk() {
        if !matches!(
            node.node_type,
            NodeType::VariableDeclaration
                | NodeType::SingleVariableDeclaration
                | NodeType::FieldDeclaration
        ) {
            continue;
        }
        let ty = node.children.iter().find(|c| c.node_type.is_type());
        let name = node
            .children
            .iter()
            .find(|c| c.node_type == NodeType::Variable);
        if let (Some(ty), Some(name)) = (ty, name) {
            out.entry(name.label.clone())
                .or_insert_with(|| ty.label.clone());
        }
    }
    out
}

/// Depth-first `(type, identifier)` tokens of a refined tree.
///
/// Structural wrappers (blocks, statement and declaration containers,
/// parentheses) contribute nothing; other nodes contribute their type and,
/// when non-empty, their label. Variable identifiers are replaced by their
/// declared type followed by `Var` (`int a` gives `intVar`); variables with
/// no visible declaration become `Var`.
///
/// With a span, nodes wholly inside it are emitted and nodes straddling its
/// boundary are only descended into.
pub fn tokenize(tree: &AstNode, span: Option<Span>) -> TokenSequence {
    let types = variable_types(tree);
    let mut tokens = Vec::new();
    emit(tree, span.as_ref(), &types, &mut tokens);
    TokenSequence { tokens }
}

fn emit(
    node: &AstNode,
    span: Option<&Span>,
    types: &BTreeMap<String, String>,
    out: &mut Vec<String>,
) {
    let inside = match span {
        None => true,
        Some(s) if s.contains(&node.span) => true,
        Some(s) if s.intersects(&node.span) => false,
        Some(_) => return,
    };
    if inside && !node.node_type.is_container() {
        out.push(node.node_type.as_str().to_string());
        if node.node_type == NodeType::Variable {
            let ty = types.get(&node.label).map(String::as_str).unwrap_or("");
            out.push(format!("{ty}Var"));
        } else if !node.label.is_empty() {
            out.push(node.label.clone());
        }
    }
    let span = if inside { None } else { span };
    for child in &node.children {
        emit(child, span, types, out);
    }
}
