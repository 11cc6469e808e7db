use super::{AstNode, NodeType};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Value,
    /// Receiver of an invocation or field access: `Math` in `Math.max(..)`.
    Qualifier,
}

/// Collapse label-bearing `SimpleName` children into their parents.
///
/// * Type nodes become leaves labelled with the full type text.
/// * `MethodInvocation` becomes `Method` when it has a receiver and
///   `LocalMethod` otherwise; the name child is removed.
/// * Any other node whose non-empty label is repeated by a `SimpleName`
///   child loses that child (declarations, `FieldAccess`).
/// * Remaining `SimpleName` leaves become `Variable`, except capitalized
///   receivers, which name a type and become `SimpleType`.
///
/// A receiver whose name equals the invoked method and whose first argument
/// has that name as well (`foo.foo(x)` vs `foo(foo, x)`) is read as the
/// qualified form.
pub fn refine(tree: &AstNode) -> AstNode {
    refine_node(tree, Role::Value)
}

fn refine_node(node: &AstNode, role: Role) -> AstNode {
    let mut out = AstNode::new(node.node_type.clone(), node.label.clone(), node.span);
    if node.node_type.is_type() {
        return out;
    }
    match node.node_type {
        NodeType::SimpleName => {
            let capitalized = node.label.chars().next().is_some_and(char::is_uppercase);
            out.node_type = if role == Role::Qualifier && capitalized {
                NodeType::SimpleType
            } else {
                NodeType::Variable
            };
            return out;
        }
        NodeType::MethodInvocation => {
            let is_name = |i: usize| {
                node.children
                    .get(i)
                    .is_some_and(|c| c.node_type == NodeType::SimpleName && c.label == node.label)
            };
            if is_name(1) {
                out.node_type = NodeType::Method;
                out.children
                    .push(refine_node(&node.children[0], Role::Qualifier));
                out.children.extend(
                    node.children[2..]
                        .iter()
                        .map(|c| refine_node(c, Role::Value)),
                );
                return out;
            }
            if is_name(0) {
                out.node_type = NodeType::LocalMethod;
                out.children.extend(
                    node.children[1..]
                        .iter()
                        .map(|c| refine_node(c, Role::Value)),
                );
                return out;
            }
        }
        NodeType::FieldAccess => {
            let named = node.children.len() == 2
                && node.children[1].node_type == NodeType::SimpleName
                && node.children[1].label == node.label;
            if named {
                out.children
                    .push(refine_node(&node.children[0], Role::Qualifier));
                return out;
            }
        }
        _ => {}
    }
    let name_index = if node.label.is_empty() {
        None
    } else {
        node.children
            .iter()
            .position(|c| c.node_type == NodeType::SimpleName && c.label == node.label)
    };
    out.children = node
        .children
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != name_index)
        .map(|(_, c)| refine_node(c, Role::Value))
        .collect();
    out
}
