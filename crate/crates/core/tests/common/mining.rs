//! Fix corpora drawn from a few edit templates with randomized identifiers.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use viopat::ast::{parse, refine, tokenize, Span};
use viopat::corpus::{DiffHunk, ViolationRecord};
use viopat::embed::EmbedParams;
use viopat::features::{CnnConfig, ConvSpec};
use viopat::patterns::{
    abstract_fix, extract_fix_instance, FixCandidate, FixInstance, MiningParams, ViolationInstance,
};

const VARS: [&str; 10] = [
    "conn", "list", "item", "buf", "node", "cfg", "data", "out", "peer", "ctx",
];
const CALLS: [&str; 6] = ["close", "flush", "reset", "run", "stop", "clear"];
const TYPES: [&str; 5] = ["String", "Integer", "Long", "Object", "Double"];

pub const TEMPLATES: [&str; 3] = [
    "RCN_REDUNDANT_NULLCHECK",
    "BC_IMPOSSIBLE_DOWNCAST_OF_TOARRAY",
    "DM_NUMBER_CTOR",
];

/// `body` wrapped in a method; body line `i` (0-based) lands on line `i + 3`.
pub fn class(body: &[String]) -> String {
    let mut s = String::from("class A {\n  void m(Object x) {\n");
    for l in body {
        s.push_str("    ");
        s.push_str(l);
        s.push('\n');
    }
    s.push_str("  }\n}\n");
    s
}

pub struct Sample {
    pub template: usize,
    pub before: Vec<String>,
    pub after: Vec<String>,
    /// Body index of the violation line.
    pub line: usize,
}

/// One instance of `template` with random identifiers and a random
/// unrelated statement in front.
pub fn sample(template: usize, rng: &mut ChaCha8Rng) -> Sample {
    let v = *VARS.choose(rng).unwrap();
    let w = loop {
        let w = *VARS.choose(rng).unwrap();
        if w != v {
            break w;
        }
    };
    let call = *CALLS.choose(rng).unwrap();
    let ty = *TYPES.choose(rng).unwrap();
    let pre = format!(
        "int k{} = {};",
        rng.random_range(0..100),
        rng.random_range(0..100)
    );
    let (before, after) = match template {
        0 => (
            vec![
                pre.clone(),
                format!("if ({v} != null) {{"),
                format!("  {call}();"),
                "}".into(),
            ],
            vec![pre, format!("{call}();")],
        ),
        1 => (
            vec![pre.clone(), format!("return ({ty}[]) {v}.toArray();")],
            vec![pre, format!("return {v}.toArray(new {ty}[0]);")],
        ),
        _ => (
            vec![pre.clone(), format!("Integer {v} = new Integer({w});")],
            vec![pre, format!("Integer {v} = Integer.valueOf({w});")],
        ),
    };
    Sample {
        template,
        before,
        after,
        line: 1,
    }
}

fn record(template: usize, id: usize, line: usize) -> ViolationRecord {
    ViolationRecord {
        violation_type: TEMPLATES[template].into(),
        project: "mine".into(),
        commit_id: format!("c{id}"),
        file_path: format!("src/A{id}.java"),
        start_line: line as u32 + 3,
        end_line: line as u32 + 3,
        enclosing_entity: None,
    }
}

pub fn instance(s: &Sample, id: usize) -> FixInstance {
    let rec = record(s.template, id, s.line);
    let before = refine(&parse(&class(&s.before)).unwrap());
    let after = refine(&parse(&class(&s.after)).unwrap());
    let candidate = FixCandidate {
        id: format!("fix{id:03}"),
        fix_commit: format!("c{id}-fix"),
        hunks: vec![DiffHunk {
            before_span: rec.span(),
            after_span: rec.span(),
            before_text: String::new(),
            after_text: String::new(),
        }],
        method_span: Some(Span::new(2, s.before.len() as u32 + 3)),
        code_tokens: tokenize(&before, Some(rec.span())).len(),
        fix_tokens: 1,
        record: rec,
        before,
        after,
    };
    extract_fix_instance(&candidate).unwrap()
}

pub fn violation(s: &Sample, id: usize) -> ViolationInstance {
    ViolationInstance::locate(&record(s.template, id, s.line), &class(&s.before)).unwrap()
}

pub struct Corpus {
    pub instances: Vec<FixInstance>,
    /// Template of each instance.
    pub templates: Vec<usize>,
    /// One unseen violation per template.
    pub held_out: Vec<(Sample, ViolationInstance)>,
}

/// `supports[t]` instances of template `t`, shuffled.
pub fn corpus(seed: u64, supports: &[usize]) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = supports
        .iter()
        .enumerate()
        .flat_map(|(t, &n)| std::iter::repeat_n(t, n))
        .collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut instances = Vec::new();
    for (id, &t) in order.iter().enumerate() {
        instances.push(instance(&sample(t, &mut rng), id));
    }
    let held_out = (0..supports.len())
        .map(|t| {
            let s = sample(t, &mut rng);
            let v = violation(&s, 1000 + t);
            (s, v)
        })
        .collect();
    Corpus {
        instances,
        templates: order,
        held_out,
    }
}

/// Largest number of instances sharing one abstract edit script, by
/// pairwise comparison.
pub fn brute_force_support(instances: &[&FixInstance]) -> usize {
    let scripts: Vec<_> = instances.iter().map(|i| abstract_fix(i)).collect();
    (0..scripts.len())
        .map(|a| {
            (0..scripts.len())
                .filter(|&b| {
                    scripts[a].script.roots == scripts[b].script.roots
                        && instances[a].window == instances[b].window
                })
                .count()
        })
        .max()
        .unwrap_or(0)
}

/// Small, fast settings for tests.
pub fn params() -> MiningParams {
    MiningParams {
        embed: EmbedParams {
            dim: 16,
            epochs: 10,
            ..EmbedParams::default()
        },
        cnn: CnnConfig {
            conv: vec![
                ConvSpec {
                    height: 3,
                    filters: 8,
                },
                ConvSpec {
                    height: 2,
                    filters: 8,
                },
            ],
            hidden_nodes: 32,
            epochs: 10,
            learning_rate: 0.01,
            ..CnnConfig::default()
        },
        ..MiningParams::default()
    }
}
