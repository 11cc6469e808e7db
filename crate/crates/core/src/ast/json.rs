//! Generic-tree ingestion from JSON.
//!
//! ```json
//! {"type": "ReturnStatement", "label": "return", "span": [3, 3], "children": [...]}
//! ```
//!
//! `label` and `children` may be omitted. Node types outside the built-in
//! vocabulary are kept verbatim.

use super::{AstError, AstNode};

pub fn from_json(text: &str) -> Result<AstNode, AstError> {
    let tree: AstNode = serde_json::from_str(text).map_err(|e| AstError::Json(e.to_string()))?;
    check_spans(&tree, &mut Vec::new())?;
    Ok(tree)
}

pub fn to_json(tree: &AstNode) -> String {
    serde_json::to_string(tree).expect("trees always serialize")
}

fn check_spans(node: &AstNode, path: &mut Vec<usize>) -> Result<(), AstError> {
    if node.span.is_empty() {
        return Err(AstError::Json(format!(
            "node at {path:?} has an inverted span {}",
            node.span
        )));
    }
    for (i, child) in node.children.iter().enumerate() {
        path.push(i);
        if !node.span.contains(&child.span) {
            return Err(AstError::Json(format!(
                "span {} of node at {path:?} is outside its parent span {}",
                child.span, node.span
            )));
        }
        check_spans(child, path)?;
        path.pop();
    }
    Ok(())
}
