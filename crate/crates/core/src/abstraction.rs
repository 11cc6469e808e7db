//! Identifier abstraction and placeholder bindings.
//!
//! Abstraction replaces identifiers that do not carry the meaning of a code
//! fragment with numbered placeholders, assigned in order of first
//! occurrence during a depth-first walk:
//!
//! | entity | placeholder |
//! |---|---|
//! | `Variable` | `var`, `var2`, ... |
//! | `NumberLiteral` | `#`, `#2`, ... |
//! | `StringLiteral` | `"s"`, `"s2"`, ... |
//! | array element types, type arguments | `T`, `T2`, ... (`T[]`, `List<T>`) |
//!
//! Statement keywords, operators, method names and plain types stay
//! concrete. The identifier `*` is a wildcard standing for any subtree of
//! the same node type.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ast::{AstNode, NodeType, Sce};

pub const WILDCARD: &str = "*";

/// Placeholder assignment shared across the trees of one instance (for a
/// fix: the buggy tree, then the fixed tree).
#[derive(Debug, Clone, Default)]
pub struct Abstractor {
    vars: BTreeMap<String, String>,
    numbers: BTreeMap<String, String>,
    strings: BTreeMap<String, String>,
    types: BTreeMap<String, String>,
}

fn numbered(prefix: &str, n: usize, suffix: &str) -> String {
    if n == 1 {
        format!("{prefix}{suffix}")
    } else {
        format!("{prefix}{n}{suffix}")
    }
}

fn assign(map: &mut BTreeMap<String, String>, key: &str, make: impl Fn(usize) -> String) -> String {
    if let Some(p) = map.get(key) {
        return p.clone();
    }
    let p = make(map.len() + 1);
    map.insert(key.to_string(), p.clone());
    p
}

impl Abstractor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Abstract identifier of one entity.
    pub fn identifier(&mut self, node_type: &NodeType, identifier: &str) -> String {
        if identifier == WILDCARD {
            return identifier.to_string();
        }
        match node_type {
            NodeType::Variable => assign(&mut self.vars, identifier, |n| numbered("var", n, "")),
            NodeType::NumberLiteral => {
                assign(&mut self.numbers, identifier, |n| numbered("#", n, ""))
            }
            NodeType::StringLiteral => {
                assign(&mut self.strings, identifier, |n| numbered("\"s", n, "\""))
            }
            NodeType::ArrayType => {
                let base = identifier.trim_end_matches("[]");
                let dims = &identifier[base.len()..];
                format!("{}{dims}", self.type_var(base))
            }
            NodeType::ParameterizedType => match identifier.find('<') {
                Some(open) if identifier.ends_with('>') => {
                    let args = split_type_args(&identifier[open + 1..identifier.len() - 1]);
                    let abstracted: Vec<String> = args.iter().map(|a| self.type_var(a)).collect();
                    format!("{}<{}>", &identifier[..open], abstracted.join(","))
                }
                _ => identifier.to_string(),
            },
            _ => identifier.to_string(),
        }
    }

    fn type_var(&mut self, concrete: &str) -> String {
        if concrete == "?" {
            return "?".into();
        }
        assign(&mut self.types, concrete, |n| numbered("T", n, ""))
    }

    /// Abstract every identifier of a tree (spans are kept).
    pub fn tree(&mut self, node: &AstNode) -> AstNode {
        let label = self.identifier(&node.node_type, &node.label);
        let mut out = AstNode::new(node.node_type.clone(), label, node.span);
        out.children = node.children.iter().map(|c| self.tree(c)).collect();
        out
    }

    pub fn sce(&mut self, sce: &Sce) -> Sce {
        Sce::new(
            sce.node_type.clone(),
            self.identifier(&sce.node_type, &sce.identifier),
        )
    }
}

/// Abstract a single tree with a fresh placeholder assignment.
pub fn abstract_tree(node: &AstNode) -> AstNode {
    Abstractor::new().tree(node)
}

/// Split top-level comma separated type arguments.
fn split_type_args(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '<' => depth += 1,
            '>' => depth -= 1,
            ',' if depth == 0 => {
                out.push(current.trim().to_string());
                current.clear();
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    if !current.trim().is_empty() {
        out.push(current.trim().to_string());
    }
    out
}

fn is_numbered(text: &str, prefix: &str) -> bool {
    text.strip_prefix(prefix).is_some_and(|rest| {
        rest.is_empty()
            || (rest.chars().all(|c| c.is_ascii_digit())
                && !rest.starts_with('0')
                && rest.parse::<usize>().is_ok_and(|n| n >= 2))
    })
}

fn is_type_var(text: &str) -> bool {
    is_numbered(text, "T")
}

/// Identifier pieces of a type string (`Map<K,V>[]` gives `Map`, `K`, `V`).
fn type_words(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '$' || c == '.'))
        .filter(|w| !w.is_empty())
}

/// Whether the identifier of `sce` is a placeholder.
pub fn is_placeholder(sce: &Sce) -> bool {
    let id = sce.identifier.as_str();
    if id == WILDCARD {
        return true;
    }
    match sce.node_type {
        NodeType::Variable => is_numbered(id, "var"),
        NodeType::NumberLiteral => is_numbered(id, "#"),
        NodeType::StringLiteral => id.strip_suffix('"').is_some_and(|s| is_numbered(s, "\"s")),
        NodeType::ArrayType | NodeType::ParameterizedType => type_words(id).any(is_type_var),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BindingError {
    #[error("{placeholder} is bound to both {first} and {second}")]
    Conflict {
        placeholder: String,
        first: String,
        second: String,
    },
}

/// Placeholder to concrete entity mapping, with type variables derived from
/// bound type entities (`T[]` bound to `Integer[]` binds `T` to `Integer`).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bindings {
    #[serde(with = "pairs")]
    entities: BTreeMap<Sce, Sce>,
    type_vars: BTreeMap<String, String>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty() && self.type_vars.is_empty()
    }

    pub fn entities(&self) -> impl Iterator<Item = (&Sce, &Sce)> {
        self.entities.iter()
    }

    /// Record that `abstract_sce` stands for `concrete`.
    pub fn bind(&mut self, abstract_sce: &Sce, concrete: &Sce) -> Result<(), BindingError> {
        if let Some(existing) = self.entities.get(abstract_sce) {
            if existing != concrete {
                return Err(BindingError::Conflict {
                    placeholder: abstract_sce.to_string(),
                    first: existing.to_string(),
                    second: concrete.to_string(),
                });
            }
            return Ok(());
        }
        if matches!(
            abstract_sce.node_type,
            NodeType::ArrayType | NodeType::ParameterizedType
        ) {
            let mut derived = BTreeMap::new();
            if unify_types(&abstract_sce.identifier, &concrete.identifier, &mut derived) {
                for (var, value) in derived {
                    match self.type_vars.get(&var) {
                        Some(v) if *v != value => {
                            return Err(BindingError::Conflict {
                                placeholder: var,
                                first: v.clone(),
                                second: value,
                            })
                        }
                        _ => {
                            self.type_vars.insert(var, value);
                        }
                    }
                }
            }
        }
        self.entities.insert(abstract_sce.clone(), concrete.clone());
        Ok(())
    }

    /// Add every binding of `other` that does not conflict with this one.
    pub fn extend_missing(&mut self, other: &Bindings) {
        for (a, c) in &other.entities {
            if !self.entities.contains_key(a) {
                let _ = self.bind(a, c);
            }
        }
        for (v, t) in &other.type_vars {
            self.type_vars.entry(v.clone()).or_insert_with(|| t.clone());
        }
    }

    /// Concrete identifier for an entity of an abstract script, or `None`
    /// when it is a placeholder with no binding.
    pub fn resolve(&self, sce: &Sce) -> Option<String> {
        if let Some(c) = self.entities.get(sce) {
            return Some(c.identifier.clone());
        }
        if !is_placeholder(sce) {
            return Some(sce.identifier.clone());
        }
        if matches!(
            sce.node_type,
            NodeType::ArrayType | NodeType::ParameterizedType
        ) {
            return substitute_type_vars(&sce.identifier, &self.type_vars);
        }
        None
    }
}

/// Replace type variables in a type string; `None` if one is unbound.
fn substitute_type_vars(text: &str, vars: &BTreeMap<String, String>) -> Option<String> {
    let mut out = String::new();
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| -> Option<()> {
        if word.is_empty() {
            return Some(());
        }
        if is_type_var(word) {
            out.push_str(vars.get(word.as_str())?);
        } else {
            out.push_str(word);
        }
        word.clear();
        Some(())
    };
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' || c == '$' || c == '.' {
            word.push(c);
        } else {
            flush(&mut word, &mut out)?;
            out.push(c);
        }
    }
    flush(&mut word, &mut out)?;
    Some(out)
}

/// Match an abstract type string against a concrete one, collecting type
/// variable values. Each variable matches one complete type (with its own
/// arguments, but not trailing array brackets of the pattern).
fn unify_types(pattern: &str, concrete: &str, out: &mut BTreeMap<String, String>) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let c: Vec<char> = concrete.chars().collect();
    let (mut i, mut j) = (0, 0);
    let ident = |s: &[char], k: usize| {
        s.get(k)
            .is_some_and(|ch| ch.is_alphanumeric() || *ch == '_' || *ch == '$' || *ch == '.')
    };
    while i < p.len() {
        if ident(&p, i) {
            let start = i;
            while ident(&p, i) {
                i += 1;
            }
            let word: String = p[start..i].iter().collect();
            if is_type_var(&word) {
                // Consume one type from the concrete side: a name with
                // optional balanced `<...>`.
                let cstart = j;
                while ident(&c, j) {
                    j += 1;
                }
                if j == cstart {
                    return false;
                }
                if c.get(j) == Some(&'<') {
                    let mut depth = 0;
                    while j < c.len() {
                        match c[j] {
                            '<' => depth += 1,
                            '>' => {
                                depth -= 1;
                                if depth == 0 {
                                    j += 1;
                                    break;
                                }
                            }
                            _ => {}
                        }
                        j += 1;
                    }
                }
                let value: String = c[cstart..j].iter().collect();
                if out.get(&word).is_some_and(|v| *v != value) {
                    return false;
                }
                out.insert(word, value);
            } else {
                let cstart = j;
                while ident(&c, j) {
                    j += 1;
                }
                if c[cstart..j].iter().collect::<String>() != word {
                    return false;
                }
            }
        } else {
            if c.get(j) != Some(&p[i]) {
                return false;
            }
            i += 1;
            j += 1;
        }
    }
    j == c.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{parse, refine};

    #[test]
    fn toarray_abstraction() {
        let tree = refine(&parse("return (String[]) list.toArray(new String[0]);").unwrap());
        let a = abstract_tree(&tree.children[0]);
        assert_eq!(
            a.canonical(),
            concat!(
                r#"(ReturnStatement "return" (CastExpression (ArrayType "T[]")"#,
                r##" (Method "toArray" (Variable "var") (ArrayCreation (ArrayType "T[]") (NumberLiteral "#")))))"##
            )
        );
    }

    #[test]
    fn numbering_by_first_occurrence() {
        let mut ab = Abstractor::new();
        assert_eq!(ab.identifier(&NodeType::Variable, "b"), "var");
        assert_eq!(ab.identifier(&NodeType::Variable, "a"), "var2");
        assert_eq!(ab.identifier(&NodeType::Variable, "b"), "var");
        assert_eq!(ab.identifier(&NodeType::StringLiteral, "\"x\""), "\"s\"");
        assert_eq!(
            ab.identifier(&NodeType::ParameterizedType, "Map<String,List<Integer>>"),
            "Map<T,T2>"
        );
        assert_eq!(ab.identifier(&NodeType::ArrayType, "String[][]"), "T[][]");
    }

    #[test]
    fn placeholder_recognition() {
        let yes = [
            (NodeType::Variable, "var2"),
            (NodeType::NumberLiteral, "#"),
            (NodeType::StringLiteral, "\"s3\""),
            (NodeType::ArrayType, "T[]"),
            (NodeType::ParameterizedType, "List<T2>"),
            (NodeType::Block, "*"),
        ];
        for (t, id) in yes {
            assert!(is_placeholder(&Sce::new(t, id)), "{id}");
        }
        let no = [
            (NodeType::Variable, "variable"),
            (NodeType::Variable, "var1"),
            (NodeType::NumberLiteral, "0"),
            (NodeType::ArrayType, "String[]"),
            (NodeType::Method, "toArray"),
        ];
        for (t, id) in no {
            assert!(!is_placeholder(&Sce::new(t, id)), "{id}");
        }
    }

    #[test]
    fn type_variables_are_derived() {
        let mut b = Bindings::new();
        b.bind(
            &Sce::new(NodeType::ArrayType, "T[]"),
            &Sce::new(NodeType::ArrayType, "Integer[]"),
        )
        .unwrap();
        assert_eq!(
            b.resolve(&Sce::new(NodeType::ParameterizedType, "List<T>"))
                .as_deref(),
            Some("List<Integer>")
        );
        assert_eq!(b.resolve(&Sce::new(NodeType::ArrayType, "T2[]")), None);
        assert_eq!(b.resolve(&Sce::new(NodeType::Variable, "var")), None);
        assert_eq!(
            b.resolve(&Sce::new(NodeType::Method, "size")).as_deref(),
            Some("size")
        );
        let err = b.bind(
            &Sce::new(NodeType::ArrayType, "T[]"),
            &Sce::new(NodeType::ArrayType, "Long[]"),
        );
        assert!(err.is_err());
    }
}

/// Maps with structured keys, stored as a list of pairs.
mod pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<K: Serialize, V: Serialize, S: Serializer>(
        map: &BTreeMap<K, V>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, K, V, D>(d: D) -> Result<BTreeMap<K, V>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        V: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        Ok(Vec::<(K, V)>::deserialize(d)?.into_iter().collect())
    }
}
