//! Source rendering of refined trees.
//!
//! Rendering is used to turn edited trees back into patch text. Parentheses
//! are inserted wherever a child binds more loosely than its position
//! requires, so edited trees never change meaning when printed.

use super::{AstNode, NodeType};

const INDENT: &str = "    ";

/// Render a refined node as source text; statements span several lines when
/// they contain blocks.
pub fn render(node: &AstNode) -> String {
    render_lines(node, "").join("\n")
}

/// Render a node as lines, each prefixed with `indent`.
pub fn render_lines(node: &AstNode, indent: &str) -> Vec<String> {
    let mut out = Vec::new();
    statement(node, indent, &mut out);
    out
}

fn statement(node: &AstNode, indent: &str, out: &mut Vec<String>) {
    let nested = format!("{indent}{INDENT}");
    match node.node_type {
        NodeType::CompilationUnit => {
            for c in &node.children {
                statement(c, indent, out);
            }
        }
        NodeType::Block => {
            out.push(format!("{indent}{{"));
            for c in &node.children {
                statement(c, &nested, out);
            }
            out.push(format!("{indent}}}"));
        }
        NodeType::VariableDeclaration | NodeType::FieldDeclaration => {
            out.push(format!("{indent}{};", declaration(node)));
        }
        NodeType::ExpressionStatement => {
            let body = node
                .children
                .first()
                .map(|c| expr(c, 0))
                .unwrap_or_default();
            out.push(format!("{indent}{body};"));
        }
        NodeType::ReturnStatement => match node.children.first() {
            Some(value) => out.push(format!("{indent}return {};", expr(value, 0))),
            None => out.push(format!("{indent}return;")),
        },
        NodeType::IfStatement => if_statement(node, indent, out, ""),
        NodeType::MethodDeclaration => {
            let mut head = Vec::new();
            let mut params = Vec::new();
            let mut body = None;
            let mut has_type = false;
            for c in &node.children {
                match c.node_type {
                    NodeType::Modifier => head.push(c.label.clone()),
                    NodeType::SingleVariableDeclaration => params.push(declaration(c)),
                    NodeType::Block => body = Some(c),
                    _ if c.node_type.is_type() && !has_type => {
                        has_type = true;
                        head.push(c.label.clone());
                    }
                    _ => {}
                }
            }
            head.push(format!("{}({})", node.label, params.join(", ")));
            let head = head.join(" ");
            match body {
                Some(block) => {
                    let mut lines = render_lines(block, indent);
                    lines[0] = format!("{indent}{head} {{");
                    out.extend(lines);
                }
                None => out.push(format!("{indent}{head};")),
            }
        }
        NodeType::TypeDeclaration => {
            let mut head = Vec::new();
            let mut supertypes = Vec::new();
            for c in &node.children {
                if c.node_type == NodeType::Modifier {
                    head.push(c.label.clone());
                } else if c.node_type.is_type() {
                    supertypes.push(c.label.clone());
                }
            }
            head.push(format!("class {}", node.label));
            // The tree does not record which supertype was `extends`; the
            // first one is printed that way.
            if let Some((first, rest)) = supertypes.split_first() {
                head.push(format!("extends {first}"));
                if !rest.is_empty() {
                    head.push(format!("implements {}", rest.join(", ")));
                }
            }
            out.push(format!("{indent}{} {{", head.join(" ")));
            for c in &node.children {
                if c.node_type != NodeType::Modifier && !c.node_type.is_type() {
                    statement(c, &nested, out);
                }
            }
            out.push(format!("{indent}}}"));
        }
        _ => out.push(format!("{indent}{}", expr(node, 0))),
    }
}

fn if_statement(node: &AstNode, indent: &str, out: &mut Vec<String>, prefix: &str) {
    let cond = node
        .children
        .first()
        .map(|c| expr(c, 0))
        .unwrap_or_default();
    let head = format!("{indent}{prefix}if ({cond})");
    let Some(then) = node.children.get(1) else {
        out.push(format!("{head} {{"));
        out.push(format!("{indent}}}"));
        return;
    };
    let else_branch = node.children.get(2);
    attach(then, indent, out, head);
    if let Some(other) = else_branch {
        if other.node_type == NodeType::IfStatement {
            let last = out.pop().unwrap_or_default();
            let joined = if last.trim_end().ends_with('}') {
                format!("{} ", last.trim_end())
            } else {
                out.push(last);
                indent.to_string()
            };
            let mut nested = Vec::new();
            if_statement(other, indent, &mut nested, "else ");
            let first = nested.remove(0);
            out.push(format!("{joined}{}", first.trim_start()));
            out.extend(nested);
        } else {
            let last = out.pop().unwrap_or_default();
            let head = if last.trim_end().ends_with('}') {
                format!("{} else", last.trim_end())
            } else {
                out.push(last);
                format!("{indent}else")
            };
            attach(other, indent, out, head);
        }
    }
}

/// Place `body` after `head`: blocks open on the head line, single
/// statements stay on it.
fn attach(body: &AstNode, indent: &str, out: &mut Vec<String>, head: String) {
    if body.node_type == NodeType::Block {
        let mut lines = render_lines(body, indent);
        lines[0] = format!("{head} {{");
        out.extend(lines);
    } else {
        let lines = render_lines(body, indent);
        if lines.len() == 1 {
            out.push(format!("{head} {}", lines[0].trim_start()));
        } else {
            out.push(head);
            out.extend(render_lines(body, &format!("{indent}{INDENT}")));
        }
    }
}

fn declaration(node: &AstNode) -> String {
    let mut parts = Vec::new();
    let mut init = None;
    let mut seen_name = false;
    for c in &node.children {
        match c.node_type {
            NodeType::Modifier => parts.push(c.label.clone()),
            _ if c.node_type.is_type() && !seen_name => parts.push(c.label.clone()),
            NodeType::Variable | NodeType::SimpleName if !seen_name => {
                seen_name = true;
                parts.push(c.label.clone());
            }
            _ => init = Some(c),
        }
    }
    let mut text = parts.join(" ");
    if let Some(value) = init {
        text.push_str(" = ");
        text.push_str(&expr(value, 1));
    }
    text
}

fn precedence(node: &AstNode) -> u8 {
    match node.node_type {
        NodeType::Assignment => 1,
        NodeType::ConditionalExpression => 2,
        NodeType::InfixExpression => binary_precedence(&node.label),
        NodeType::InstanceofExpression => 9,
        NodeType::PrefixExpression | NodeType::CastExpression => 13,
        NodeType::PostfixExpression => 14,
        _ => 15,
    }
}

fn binary_precedence(op: &str) -> u8 {
    match op {
        "||" => 3,
        "&&" => 4,
        "|" => 5,
        "^" => 6,
        "&" => 7,
        "==" | "!=" => 8,
        "<" | ">" | "<=" | ">=" => 9,
        "<<" | ">>" | ">>>" => 10,
        "+" | "-" => 11,
        _ => 12,
    }
}

fn args(children: &[AstNode]) -> String {
    children
        .iter()
        .map(|c| expr(c, 1))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Render an expression that must bind at least as tightly as `min`.
fn expr(node: &AstNode, min: u8) -> String {
    let prec = precedence(node);
    let text = expr_inner(node, prec);
    if prec < min {
        format!("({text})")
    } else {
        text
    }
}

fn expr_inner(node: &AstNode, prec: u8) -> String {
    let c = &node.children;
    let child = |i: usize, min: u8| c.get(i).map(|n| expr(n, min)).unwrap_or_default();
    match node.node_type {
        NodeType::Assignment => format!("{} {} {}", child(0, 2), node.label, child(1, 1)),
        NodeType::ConditionalExpression => {
            format!("{} ? {} : {}", child(0, 3), child(1, 1), child(2, 2))
        }
        NodeType::InfixExpression => {
            format!("{} {} {}", child(0, prec), node.label, child(1, prec + 1))
        }
        NodeType::InstanceofExpression => format!("{} instanceof {}", child(0, 9), child(1, 15)),
        NodeType::PrefixExpression => {
            let operand = child(0, 13);
            let sep = if operand.starts_with(['+', '-']) && node.label.starts_with(['+', '-']) {
                " "
            } else {
                ""
            };
            format!("{}{sep}{operand}", node.label)
        }
        NodeType::PostfixExpression => format!("{}{}", child(0, 14), node.label),
        NodeType::CastExpression => format!("({}) {}", child(0, 15), child(1, 13)),
        NodeType::ParenthesizedExpression => format!("({})", child(0, 0)),
        NodeType::Method | NodeType::MethodInvocation => match c.first() {
            Some(receiver) => {
                let rest = if node.node_type == NodeType::MethodInvocation {
                    // Generic form: receiver, name, args.
                    &c[2.min(c.len())..]
                } else {
                    &c[1..]
                };
                format!("{}.{}({})", expr(receiver, 15), node.label, args(rest))
            }
            None => format!("{}()", node.label),
        },
        NodeType::LocalMethod => format!("{}({})", node.label, args(c)),
        NodeType::FieldAccess => match c.first() {
            Some(receiver) => format!("{}.{}", expr(receiver, 15), node.label),
            None => node.label.clone(),
        },
        NodeType::ArrayAccess => format!("{}[{}]", child(0, 15), child(1, 0)),
        NodeType::ArrayCreation => {
            let ty = c.first().map(|t| t.label.as_str()).unwrap_or("");
            let rank = ty.matches("[]").count();
            let base = ty.trim_end_matches("[]");
            let mut text = format!("new {base}");
            let mut dims = 0;
            let mut init = None;
            for d in c.iter().skip(1) {
                if d.node_type == NodeType::ArrayInitializer {
                    init = Some(d);
                } else {
                    text.push_str(&format!("[{}]", expr(d, 0)));
                    dims += 1;
                }
            }
            for _ in dims..rank.max(dims) {
                text.push_str("[]");
            }
            if let Some(init) = init {
                text.push(' ');
                text.push_str(&expr(init, 0));
            }
            text
        }
        NodeType::ArrayInitializer => format!("{{{}}}", args(c)),
        NodeType::ClassInstanceCreation => {
            let ty = c.first().map(|t| t.label.as_str()).unwrap_or("");
            format!("new {ty}({})", args(c.get(1..).unwrap_or(&[])))
        }
        _ if c.is_empty() => node.label.clone(),
        _ => format!("{}({})", node.label, args(c)),
    }
}
