use std::collections::BTreeMap;

use proptest::prelude::*;
use viopat::ast::{parse, refine, tokenize, AstNode, NodeType, Sce, Span};
use viopat::corpus::{DiffHunk, ViolationRecord};
use viopat::patterns::{
    abstract_fix, extract_fix_instance, filter_code_corpus, filter_fix_corpus,
    filter_fix_corpus_ordered, fix_form_frequencies, generate_patch_candidate, match_fix_patterns,
    mine_code_pattern, mine_fix_pattern, unify, CodeItem, FilterConfig, FixCandidate, FixInstance,
    FixMember, FixPattern, PatternError, ViolationInstance, FIX_FILTERS,
};

fn record(ty: &str, path: &str, start: u32, end: u32) -> ViolationRecord {
    ViolationRecord {
        violation_type: ty.into(),
        project: "p".into(),
        commit_id: "c1".into(),
        file_path: path.into(),
        start_line: start,
        end_line: end,
        enclosing_entity: None,
    }
}

/// `body` wrapped in a method; body line `i` (0-based) lands on line `i + 3`.
fn class(body: &[&str]) -> String {
    let mut s = String::from("class A {\n  void m(Object x) {\n");
    for l in body {
        s.push_str("    ");
        s.push_str(l);
        s.push('\n');
    }
    s.push_str("  }\n}\n");
    s
}

fn tree(src: &str) -> AstNode {
    refine(&parse(src).unwrap())
}

fn candidate(id: &str, ty: &str, before: &[&str], after: &[&str], line: u32) -> FixCandidate {
    let (b, a) = (class(before), class(after));
    let rec = record(ty, "src/A.java", line, line);
    let bt = tree(&b);
    FixCandidate {
        id: id.into(),
        fix_commit: "c2".into(),
        hunks: vec![DiffHunk {
            before_span: Span::line(line),
            after_span: Span::line(line),
            before_text: String::new(),
            after_text: String::new(),
        }],
        method_span: Some(Span::new(2, before.len() as u32 + 3)),
        code_tokens: tokenize(&bt, Some(rec.span())).len(),
        fix_tokens: 1,
        record: rec,
        before: bt,
        after: tree(&a),
    }
}

fn fix(id: &str, ty: &str, before: &[&str], after: &[&str], line: u32) -> FixInstance {
    extract_fix_instance(&candidate(id, ty, before, after, line)).unwrap()
}

fn null_check(id: &str, var: &str, call: &str) -> FixInstance {
    fix(
        id,
        "RCN_REDUNDANT_NULLCHECK",
        &[
            "int k = 1;",
            &format!("if ({var} != null) {{"),
            &format!("  {call}();"),
            "}",
            "k++;",
        ],
        &["int k = 1;", &format!("{call}();"), "k++;"],
        4,
    )
}

fn members<'a>(instances: &'a [FixInstance], feats: &'a [Vec<f64>]) -> Vec<FixMember<'a>> {
    instances
        .iter()
        .zip(feats)
        .map(|(i, f)| FixMember {
            instance: i,
            patch_features: f,
            code_features: f,
        })
        .collect()
}

#[test]
fn toarray_code_pattern_entities() {
    let t = tree("return (Integer[]) xs.toArray(new Integer[0]);");
    let p = mine_code_pattern(&[&t.children[0]]).unwrap();
    let a: Vec<Sce> = p.abstract_entities.into_iter().collect();
    let mut expect_a = vec![
        Sce::new(NodeType::ArrayType, "T[]"),
        Sce::new(NodeType::Variable, "var"),
        Sce::new(NodeType::NumberLiteral, "#"),
    ];
    expect_a.sort();
    assert_eq!(a, expect_a);
    let c: Vec<Sce> = p.concrete_entities.into_iter().collect();
    let mut expect_c = vec![
        Sce::new(NodeType::ReturnStatement, "return"),
        Sce::new(NodeType::Method, "toArray"),
    ];
    expect_c.sort();
    assert_eq!(c, expect_c);
    assert_eq!(p.support, 1);
}

#[test]
fn code_pattern_is_modal() {
    let srcs = [
        "return a.size();",
        "return b.size();",
        "return c.size();",
        "return d.length();",
        "return e.length();",
    ];
    let trees: Vec<AstNode> = srcs.iter().map(|s| tree(s).children[0].clone()).collect();
    let refs: Vec<&AstNode> = trees.iter().collect();
    let p = mine_code_pattern(&refs).unwrap();
    assert_eq!(p.support, 3);
    assert!(p
        .concrete_entities
        .contains(&Sce::new(NodeType::Method, "size")));
    assert_eq!(p.contexts.len(), 3);
    assert!(matches!(
        mine_code_pattern(&[]),
        Err(PatternError::EmptyCluster)
    ));
}

#[test]
fn unification_binds_by_type() {
    let pattern = tree("return (String[]) list.toArray(new String[5]);");
    let ctx = viopat::ast::CodeContext::from_node(
        &viopat::abstraction::abstract_tree(&pattern.children[0]),
        None,
    );
    let target = tree("return (Integer[]) xs.toArray(new Integer[0]);");
    let b = unify(&ctx, &target.children[0]).expect("unifies");
    let got: BTreeMap<String, String> = b
        .entities()
        .map(|(a, c)| (a.identifier.clone(), c.identifier.clone()))
        .collect();
    assert_eq!(got["T[]"], "Integer[]");
    assert_eq!(got["var"], "xs");
    assert_eq!(got["#"], "0");

    let other = tree("return (Integer[]) xs.toList(new Integer[0]);");
    assert!(unify(&ctx, &other.children[0]).is_none());
    // two element types cannot share one type variable
    let mixed = tree("return (Integer[]) xs.toArray(new Long[0]);");
    assert!(unify(&ctx, &mixed.children[0]).is_none());
}

#[test]
fn distinct_placeholders_need_distinct_variables() {
    let ctx = viopat::ast::CodeContext::from_node(
        &viopat::abstraction::abstract_tree(&tree("a = b;").children[0]),
        None,
    );
    assert!(unify(&ctx, &tree("x = y;").children[0]).is_some());
    assert!(unify(&ctx, &tree("x = x;").children[0]).is_none());
}

#[test]
fn null_check_fix_is_focused_on_the_if() {
    let f = null_check("n1", "x", "f");
    assert_eq!(f.before.node_type, NodeType::IfStatement);
    assert!(!f.window);
    assert_eq!(f.after.len(), 1);
    assert_eq!(f.after[0].node_type, NodeType::ExpressionStatement);
    let a = abstract_fix(&f);
    // the kept call is moved out of the if, so the pattern does not name it
    assert!(
        a.context
            .canonical()
            .contains("(ExpressionStatement \"*\")"),
        "{}",
        a.context.canonical()
    );
    assert_eq!(a.key, abstract_fix(&null_check("n2", "y", "g")).key);
}

fn null_check_pattern() -> FixPattern {
    let fixes = [
        null_check("n1", "x", "f"),
        null_check("n2", "y", "g"),
        null_check("n3", "o", "h"),
    ];
    let feats = vec![vec![1.0, 0.0], vec![0.9, 0.1], vec![1.0, 0.1]];
    mine_fix_pattern(&members(&fixes, &feats)).unwrap()
}

#[test]
fn null_check_patch() {
    let pattern = null_check_pattern();
    assert_eq!(pattern.support, 3);
    let src = class(&["if (conn != null) {", "  close();", "}"]);
    let v = ViolationInstance::locate(&record("RCN_REDUNDANT_NULLCHECK", "src/B.java", 3, 3), &src)
        .unwrap();
    let patch = generate_patch_candidate(&v, &pattern)
        .unwrap()
        .expect("pattern applies");
    assert_eq!(patch.start_line, 3);
    assert_eq!(
        patch.frag_b,
        vec!["    if (conn != null) {", "      close();", "    }"]
    );
    assert_eq!(patch.frag_f, vec!["    close();"]);
    let fixed = patch.apply_to(&src);
    assert_eq!(fixed, class(&["close();"]));
    assert!(parse(&fixed).is_ok());
    let diff = patch.to_unified_diff();
    assert!(diff.contains("@@ -3,3 +3,1 @@"), "{diff}");
    assert!(diff.contains("-    if (conn != null) {"));
}

#[test]
fn pattern_does_not_apply_to_other_shapes() {
    let pattern = null_check_pattern();
    let src = class(&["if (conn == null) {", "  close();", "}"]);
    let v = ViolationInstance::locate(&record("RCN_REDUNDANT_NULLCHECK", "src/B.java", 3, 3), &src)
        .unwrap();
    assert_eq!(generate_patch_candidate(&v, &pattern).unwrap(), None);
}

#[test]
fn toarray_fix_pattern_applies_to_new_types() {
    let mk = |id: &str, ty: &str, var: &str| {
        fix(
            id,
            "BC_IMPOSSIBLE_DOWNCAST_OF_TOARRAY",
            &[&format!("return ({ty}[]) {var}.toArray();")],
            &[&format!("return {var}.toArray(new {ty}[0]);")],
            3,
        )
    };
    let fixes = [mk("a", "String", "list"), mk("b", "Integer", "xs")];
    let feats = vec![vec![1.0], vec![1.0]];
    let pattern = mine_fix_pattern(&members(&fixes, &feats)).unwrap();
    assert_eq!(pattern.support, 2);
    let src = class(&["return (Long[]) ids.toArray();"]);
    let v = ViolationInstance::locate(
        &record("BC_IMPOSSIBLE_DOWNCAST_OF_TOARRAY", "src/C.java", 3, 3),
        &src,
    )
    .unwrap();
    let patch = generate_patch_candidate(&v, &pattern).unwrap().unwrap();
    assert_eq!(patch.frag_f, vec!["    return ids.toArray(new Long[0]);"]);
}

#[test]
fn fix_mining_takes_the_modal_script() {
    let mut fixes = Vec::new();
    for i in 0..4 {
        fixes.push(null_check(
            &format!("n{i}"),
            &format!("v{i}"),
            &format!("f{i}"),
        ));
    }
    for i in 0..2 {
        fixes.push(fix(
            &format!("r{i}"),
            "RCN",
            &[&format!("int y{i} = 1;")],
            &[&format!("int y{i} = 2;")],
            3,
        ));
    }
    let feats: Vec<Vec<f64>> = (0..fixes.len()).map(|i| vec![i as f64, 1.0]).collect();
    let pattern = mine_fix_pattern(&members(&fixes, &feats)).unwrap();
    assert_eq!(pattern.support, 4);
    assert_eq!(pattern.cluster_size, 6);
    let refs: Vec<&FixInstance> = fixes.iter().collect();
    let freq = fix_form_frequencies(&refs);
    assert_eq!(freq.iter().map(|f| f.1).collect::<Vec<_>>(), vec![4, 2]);
    // centroid: member nearest the mean (2.5, 1) → index 2
    assert_eq!(pattern.centroid_features, feats[2]);
    assert_eq!(pattern.centroid_member, fixes[2].id);
}

fn library() -> Vec<FixPattern> {
    let base = null_check_pattern();
    let mut lib = Vec::new();
    for (ty, f) in [
        ("A", vec![1.0, 0.0, 0.0]),
        ("A", vec![0.0, 1.0, 0.0]),
        ("B", vec![0.0, 0.0, 1.0]),
        ("A", vec![0.0, 0.0, 0.0]),
    ] {
        let mut p = base.clone();
        p.violation_type = ty.into();
        p.centroid_features = f;
        lib.push(p);
    }
    lib
}

#[test]
fn matching_ranks_by_cosine() {
    let lib = library();
    let r = match_fix_patterns(&[0.2, 1.0, 0.9], "A", &lib, 10, false).unwrap();
    assert_eq!(
        r.entries.iter().map(|e| e.index).collect::<Vec<_>>(),
        vec![1, 0, 3]
    );
    assert_eq!(r.entries[2].score, 0.0);
    let r = match_fix_patterns(&[0.2, 1.0, 0.9], "A", &lib, 10, true).unwrap();
    assert_eq!(
        r.entries.iter().map(|e| e.index).collect::<Vec<_>>(),
        vec![1, 2, 0, 3]
    );
    let r = match_fix_patterns(&[0.2, 1.0, 0.9], "A", &lib, 1, true).unwrap();
    assert_eq!(r.entries.len(), 1);
    assert!(matches!(
        match_fix_patterns(&[1.0], "A", &[], 10, false),
        Err(PatternError::EmptyLibrary)
    ));
    assert!(match_fix_patterns(&[0.0, 0.0, 0.0], "A", &lib, 10, false).is_err());
}

#[test]
fn code_corpus_token_cutoff() {
    let body = ["int a = 1;"];
    let src = class(&body);
    let v = ViolationInstance::locate(&record("T", "src/A.java", 3, 3), &src).unwrap();
    let n = v.tokens.len();
    let report = filter_code_corpus(
        vec![
            CodeItem::Located(Box::new(v.clone())),
            CodeItem::Unparsed {
                id: "u".into(),
                message: "bad".into(),
            },
        ],
        n,
    );
    assert_eq!(report.kept.len(), 1);
    assert_eq!(report.excluded[0].reason, "parse");
    let report = filter_code_corpus(vec![CodeItem::Located(Box::new(v))], n - 1);
    assert_eq!(report.excluded[0].reason, "token-count");
    assert!(filter_code_corpus(Vec::new(), 40).kept.is_empty());
}

fn with_tokens(mut c: FixCandidate, code: usize, fix: usize) -> FixCandidate {
    c.code_tokens = code;
    c.fix_tokens = fix;
    c
}

fn with_hunk(mut c: FixCandidate, start: u32, end: u32) -> FixCandidate {
    c.hunks[0].before_span = Span::new(start, end);
    c
}

#[test]
fn fix_corpus_boundaries() {
    let body: Vec<String> = (0..12).map(|i| format!("int v{i} = {i};")).collect();
    let refs: Vec<&str> = body.iter().map(String::as_str).collect();
    let base = candidate("c", "T", &refs, &refs, 8);
    let cfg = FilterConfig::default();
    let kept = |c: FixCandidate| filter_fix_corpus(vec![c], &cfg).kept.len() == 1;
    assert!(kept(with_hunk(base.clone(), 5, 5)));
    assert!(kept(with_hunk(base.clone(), 11, 11)));
    assert!(!kept(with_hunk(base.clone(), 4, 4)));
    assert!(!kept(with_hunk(base.clone(), 12, 12)));
    // an insertion just before line 5 sits between lines 4 and 5
    assert!(kept(with_hunk(base.clone(), 5, 4)));
    assert!(kept(with_tokens(base.clone(), 40, 40)));
    assert!(!kept(with_tokens(base.clone(), 41, 1)));
    assert!(!kept(with_tokens(base.clone(), 1, 41)));

    let mut test = base.clone();
    test.record.file_path = "src/test/java/A.java".into();
    let mut cross = base.clone();
    cross.hunks.clear();
    let mut outside = with_hunk(base.clone(), 1, 1);
    outside.record.start_line = 2;
    outside.record.end_line = 2;
    let r = filter_fix_corpus(vec![test, cross, outside], &cfg);
    let reasons: Vec<&str> = r.excluded.iter().map(|e| e.reason.as_str()).collect();
    assert_eq!(reasons, vec!["test-file", "cross-file", "non-local"]);
}

fn permutation() -> impl Strategy<Value = Vec<usize>> {
    Just((0..FIX_FILTERS.len()).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filters_are_order_independent(
        order in permutation(),
        specs in prop::collection::vec((any::<bool>(), any::<bool>(), 0u32..14, 30usize..45, 30usize..45), 1..12),
    ) {
        let body: Vec<String> = (0..12).map(|i| format!("int v{i} = {i};")).collect();
        let refs: Vec<&str> = body.iter().map(String::as_str).collect();
        let base = candidate("c", "T", &refs, &refs, 8);
        let cands: Vec<FixCandidate> = specs
            .iter()
            .enumerate()
            .map(|(i, &(test, cross, line, code, fixt))| {
                let mut c = with_tokens(with_hunk(base.clone(), line + 1, line + 1), code, fixt);
                c.id = format!("c{i}");
                if test {
                    c.record.file_path = "tests/A.java".into();
                }
                if cross {
                    c.hunks.clear();
                }
                c
            })
            .collect();
        let cfg = FilterConfig::default();
        let a = filter_fix_corpus(cands.clone(), &cfg);
        let b = filter_fix_corpus_ordered(cands, &cfg, &order);
        let ids = |r: &Vec<FixCandidate>| r.iter().map(|c| c.id.clone()).collect::<Vec<_>>();
        prop_assert_eq!(ids(&a.kept), ids(&b.kept));
        prop_assert_eq!(a.counters, b.counters);
    }
}
