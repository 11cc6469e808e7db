use std::fs;

use proptest::prelude::*;
use viopat::corpus::{
    ingest_history, ingest_violations, line_diff, load_dataset, persist_dataset, CategoryMap,
    CorpusError, Dataset,
};

/// Textbook LCS length, filled forwards.
fn lcs_len(a: &[&str], b: &[&str]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t[a.len()][b.len()]
}

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..12)
        .prop_map(|ls| ls.iter().map(|l| format!("{l}\n")).collect())
}

proptest! {
    #[test]
    fn hunks_rewrite_before_into_after(before in text(), after in text()) {
        let hunks = line_diff(&before, &after);
        let a: Vec<&str> = before.lines().collect();
        let b: Vec<&str> = after.lines().collect();
        let mut out: Vec<&str> = Vec::new();
        let mut next = 1u32;
        for h in &hunks {
            let start = h.before_span.start;
            prop_assert!(start >= next);
            out.extend(&a[(next - 1) as usize..(start - 1) as usize]);
            out.extend(h.after_text.lines());
            prop_assert_eq!(h.after_text.lines().count(), h.after_span.len() as usize);
            prop_assert_eq!(h.before_text.lines().count(), h.before_span.len() as usize);
            next = h.before_span.end + 1;
            if h.before_span.is_empty() {
                next = start;
            }
        }
        out.extend(&a[(next - 1) as usize..]);
        prop_assert_eq!(&out, &b);
        let removed: usize = hunks.iter().map(|h| h.before_span.len() as usize).sum();
        prop_assert_eq!(removed, a.len() - lcs_len(&a, &b));
    }
}

#[test]
fn history_ingest_and_archive_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("demo");
    let write = |path: &str, text: &str| {
        let p = root.join(path);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, text).unwrap();
    };
    write("c1/src/A.java", "class A {\n  int x;\n}\n");
    write("c2/src/A.java", "class A {\n  int x;\n  int y;\n}\n");
    write("c2/src/B.java", "class B {}\n");
    write(
        "manifest",
        "# commit\tparent\tchanged\nc2\tc1\tsrc/A.java\tsrc/B.java\nc1\t-\n",
    );

    let history = ingest_history(&root).unwrap();
    assert_eq!(history.project, "demo");
    let ids: Vec<&str> = history
        .revisions
        .iter()
        .map(|r| r.commit_id.as_str())
        .collect();
    assert_eq!(ids, ["c1", "c2"]);
    let change = history.head().change("src/A.java").unwrap();
    assert_eq!(change.hunks.len(), 1);
    assert_eq!(change.hunks[0].after_text, "  int y;");

    let violations = ingest_violations(
        &br#"{"violation_type":"URF_UNREAD_FIELD","project":"demo","commit_id":"c2","file_path":"src/A.java","start_line":3,"end_line":3}"#[..],
    )
    .unwrap();
    let dataset = Dataset {
        violations,
        histories: [("demo".to_string(), history)].into(),
        categories: CategoryMap::parse("URF_UNREAD_FIELD Performance\n").unwrap(),
    };
    dataset.validate().unwrap();
    let archive = dir.path().join("data.viopat");
    persist_dataset(&dataset, &archive).unwrap();
    assert_eq!(load_dataset(&archive).unwrap(), dataset);

    let mut broken = dataset.clone();
    broken.violations[0].file_path = "src/C.java".into();
    assert!(matches!(
        broken.validate(),
        Err(CorpusError::MissingSnapshot { .. })
    ));
}
