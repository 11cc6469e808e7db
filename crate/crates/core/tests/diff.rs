use proptest::prelude::*;
use viopat::abstraction::Bindings;
use viopat::ast::{AstNode, NodeType, Span};
use viopat::diff::{
    apply_edit_script, apply_edit_script_forest, compute_edit_script, compute_edit_script_forest,
    tokenize_script, Action,
};

const TYPES: [NodeType; 4] = [
    NodeType::Block,
    NodeType::IfStatement,
    NodeType::Variable,
    NodeType::Method,
];

fn tree() -> impl Strategy<Value = AstNode> {
    let leaf = (0..4usize, 0..3u8)
        .prop_map(|(t, l)| AstNode::new(TYPES[t].clone(), format!("l{l}"), Span::line(1)));
    leaf.prop_recursive(4, 40, 4, |inner| {
        (0..4usize, 0..3u8, prop::collection::vec(inner, 0..4)).prop_map(|(t, l, children)| {
            AstNode::new(TYPES[t].clone(), format!("l{l}"), Span::line(1)).with_children(children)
        })
    })
}

proptest! {
    #[test]
    fn replay_reconstructs_the_target(a in tree(), b in tree()) {
        let script = compute_edit_script(&a, &b);
        let out = apply_edit_script(&a, &script, &Bindings::new()).unwrap();
        prop_assert!(out.same_structure(&b));
        prop_assert_eq!(tokenize_script(&script).tokens.len(), script.len() * 3);
        prop_assert_eq!(script.is_empty(), a.same_structure(&b));
    }

    #[test]
    fn forest_replay(a in tree(), b in prop::collection::vec(tree(), 0..3)) {
        let script = compute_edit_script_forest(&a, &b);
        let out = apply_edit_script_forest(&a, &script, &Bindings::new()).unwrap();
        prop_assert_eq!(out.len(), b.len());
        for (x, y) in out.iter().zip(&b) {
            prop_assert!(x.same_structure(y));
        }
    }

    #[test]
    fn json_round_trip(a in tree(), b in tree()) {
        let script = compute_edit_script(&a, &b);
        let back: viopat::diff::EditScript = serde_json::from_str(&script.to_json()).unwrap();
        prop_assert_eq!(back, script);
    }
}

#[test]
fn moves_are_detected_between_siblings() {
    let leaf = |l: &str| AstNode::new(NodeType::Variable, l, Span::line(1));
    let block = |ls: &[&str]| {
        AstNode::new(NodeType::Block, "", Span::line(1))
            .with_children(ls.iter().map(|l| leaf(l)).collect())
    };
    let a = AstNode::new(NodeType::IfStatement, "if", Span::line(1))
        .with_children(vec![block(&["a", "b"]), block(&[])]);
    let b = AstNode::new(NodeType::IfStatement, "if", Span::line(1))
        .with_children(vec![block(&["b"]), block(&["a"])]);
    let script = compute_edit_script(&a, &b);
    assert!(script
        .operations()
        .iter()
        .any(|op| op.action == Action::Mov));
    assert!(apply_edit_script(&a, &script, &Bindings::new())
        .unwrap()
        .same_structure(&b));
}
