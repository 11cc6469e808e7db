use serde::{Deserialize, Serialize};

use super::{AstError, AstNode, NodeType, Sce, Span};

/// Hierarchical code context: an entity, its parent entity and the contexts
/// of its children.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodeContext {
    pub sce: Sce,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<Sce>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<CodeContext>,
}

impl CodeContext {
    /// Context of `node` and its whole subtree.
    pub fn from_node(node: &AstNode, parent: Option<&Sce>) -> CodeContext {
        let sce = node.sce();
        let children = node
            .children
            .iter()
            .map(|c| CodeContext::from_node(c, Some(&sce)))
            .collect();
        CodeContext {
            sce,
            parent: parent.cloned(),
            children,
        }
    }

    pub fn is_root(&self) -> bool {
        self.parent.is_none()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Rebuild a span-less tree from the context.
    pub fn to_node(&self) -> AstNode {
        AstNode::new(
            self.sce.node_type.clone(),
            self.sce.identifier.clone(),
            Span::line(1),
        )
        .with_children(self.children.iter().map(CodeContext::to_node).collect())
    }

    /// Every entity in pre-order.
    pub fn entities(&self) -> Vec<&Sce> {
        let mut out = vec![&self.sce];
        for c in &self.children {
            out.extend(c.entities());
        }
        out
    }
}

/// Path of the smallest node covering the nodes that lie wholly inside
/// `span`.
///
/// Starting from the lowest common ancestor of the maximal contained nodes,
/// the result descends through single-child wrappers (a compilation unit or
/// block holding one statement) so that a one-statement span is rooted at
/// the statement itself.
pub fn context_root(tree: &AstNode, span: Span) -> Result<Vec<usize>, AstError> {
    let mut maximal: Vec<Vec<usize>> = Vec::new();
    collect_maximal(tree, &span, &mut Vec::new(), &mut maximal);
    let Some(first) = maximal.first() else {
        return Err(AstError::EmptySpan {
            start: span.start,
            end: span.end,
        });
    };
    let mut lca = first.clone();
    for path in &maximal[1..] {
        let common = lca.iter().zip(path).take_while(|(a, b)| a == b).count();
        lca.truncate(common);
    }
    let mut node = tree.get(&lca).expect("lca path is valid");
    while node.children.len() == 1
        && matches!(node.node_type, NodeType::CompilationUnit | NodeType::Block)
    {
        lca.push(0);
        node = &node.children[0];
    }
    Ok(lca)
}

fn collect_maximal(node: &AstNode, span: &Span, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if span.contains(&node.span) {
        out.push(path.clone());
        return;
    }
    if !span.intersects(&node.span) {
        return;
    }
    for (i, child) in node.children.iter().enumerate() {
        path.push(i);
        collect_maximal(child, span, path, out);
        path.pop();
    }
}

/// Code context rooted at [`context_root`]; the root has no parent.
pub fn extract_context(tree: &AstNode, span: Span) -> Result<CodeContext, AstError> {
    let path = context_root(tree, span)?;
    Ok(CodeContext::from_node(
        tree.get(&path).expect("valid path"),
        None,
    ))
}
