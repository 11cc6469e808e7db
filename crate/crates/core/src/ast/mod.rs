//! Abstract syntax trees for a Java-like mini-language.
//!
//! Source text is parsed into a *generic* tree that mirrors the concrete
//! syntax (names appear as `SimpleName` leaves), then [`refine`]d into a
//! tree where every label-bearing node is a single `(type, identifier)`
//! entity. Refined trees feed tokenization, code-context extraction and
//! edit-script computation.

mod context;
mod json;
mod lexer;
mod parser;
mod refine;
mod render;
mod tokenize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use context::{context_root, extract_context, CodeContext};
pub use json::{from_json, to_json};
pub use lexer::{lex, lex_lenient, LexToken, TokenKind};
pub use parser::parse;
pub use refine::refine;
pub use render::{render, render_lines};
pub use tokenize::{tokenize, variable_types, TokenSequence};

/// Error produced while parsing source text or a JSON tree.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AstError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: u32,
        column: u32,
        message: String,
    },
    #[error("invalid JSON tree: {0}")]
    Json(String),
    #[error("span {start}..{end} covers no node")]
    EmptySpan { start: u32, end: u32 },
}

/// Inclusive range of 1-based source lines.
///
/// An empty range is encoded as `end == start - 1`; it marks the position
/// before `start` (used for pure insertions and deletions in diffs).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct Span {
    pub start: u32,
    pub end: u32,
}

impl Span {
    pub const fn new(start: u32, end: u32) -> Self {
        Span { start, end }
    }

    pub const fn line(line: u32) -> Self {
        Span {
            start: line,
            end: line,
        }
    }

    /// Empty span positioned before `line`.
    pub const fn empty_at(line: u32) -> Self {
        Span {
            start: line,
            end: line.saturating_sub(1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn len(&self) -> u32 {
        if self.is_empty() {
            0
        } else {
            self.end - self.start + 1
        }
    }

    pub fn contains_line(&self, line: u32) -> bool {
        self.start <= line && line <= self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        !other.is_empty() && self.start <= other.start && other.end <= self.end
    }

    pub fn intersects(&self, other: &Span) -> bool {
        !self.is_empty() && !other.is_empty() && self.start <= other.end && other.start <= self.end
    }

    /// Smallest span covering both.
    pub fn cover(&self, other: &Span) -> Span {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

impl From<[u32; 2]> for Span {
    fn from([start, end]: [u32; 2]) -> Self {
        Span { start, end }
    }
}

impl From<Span> for [u32; 2] {
    fn from(span: Span) -> Self {
        [span.start, span.end]
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

macro_rules! node_types {
    ($($variant:ident),* $(,)?) => {
        /// AST node type.
        ///
        /// Generic trees use the syntax-level names (`MethodInvocation`,
        /// `SimpleName`, ...). Refinement introduces `Variable`, `Method`
        /// and `LocalMethod`. Types outside the vocabulary (from JSON input)
        /// are carried verbatim in `Other`.
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum NodeType {
            $($variant,)*
            Other(String),
        }

        impl NodeType {
            pub fn as_str(&self) -> &str {
                match self {
                    $(NodeType::$variant => stringify!($variant),)*
                    NodeType::Other(name) => name,
                }
            }
        }

        impl FromStr for NodeType {
            type Err = std::convert::Infallible;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Ok(match s {
                    $(stringify!($variant) => NodeType::$variant,)*
                    other => NodeType::Other(other.to_string()),
                })
            }
        }
    };
}

node_types! {
    CompilationUnit,
    TypeDeclaration,
    FieldDeclaration,
    MethodDeclaration,
    SingleVariableDeclaration,
    Modifier,
    Block,
    VariableDeclaration,
    ExpressionStatement,
    IfStatement,
    ReturnStatement,
    Assignment,
    MethodInvocation,
    FieldAccess,
    CastExpression,
    ArrayCreation,
    ArrayInitializer,
    ArrayAccess,
    ClassInstanceCreation,
    InfixExpression,
    PrefixExpression,
    PostfixExpression,
    InstanceofExpression,
    ConditionalExpression,
    ParenthesizedExpression,
    NumberLiteral,
    StringLiteral,
    CharacterLiteral,
    BooleanLiteral,
    NullLiteral,
    ThisExpression,
    PrimitiveType,
    SimpleType,
    ArrayType,
    ParameterizedType,
    SimpleName,
    Variable,
    Method,
    LocalMethod,
}

impl NodeType {
    pub fn is_statement(&self) -> bool {
        matches!(
            self,
            NodeType::VariableDeclaration
                | NodeType::ExpressionStatement
                | NodeType::IfStatement
                | NodeType::ReturnStatement
                | NodeType::Block
                | NodeType::FieldDeclaration
                | NodeType::MethodDeclaration
                | NodeType::TypeDeclaration
        )
    }

    pub fn is_type(&self) -> bool {
        matches!(
            self,
            NodeType::PrimitiveType
                | NodeType::SimpleType
                | NodeType::ArrayType
                | NodeType::ParameterizedType
        )
    }

    /// Purely structural wrappers that contribute no token of their own.
    pub fn is_container(&self) -> bool {
        matches!(
            self,
            NodeType::CompilationUnit
                | NodeType::Block
                | NodeType::ExpressionStatement
                | NodeType::ParenthesizedExpression
                | NodeType::VariableDeclaration
                | NodeType::FieldDeclaration
                | NodeType::SingleVariableDeclaration
        )
    }

    pub fn is_literal(&self) -> bool {
        matches!(
            self,
            NodeType::NumberLiteral
                | NodeType::StringLiteral
                | NodeType::CharacterLiteral
                | NodeType::BooleanLiteral
                | NodeType::NullLiteral
        )
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for NodeType {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for NodeType {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        Ok(name.parse().unwrap_or_else(|never| match never {}))
    }
}

/// Source code entity: a node type paired with its identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sce {
    #[serde(rename = "type")]
    pub node_type: NodeType,
    pub identifier: String,
}

impl Sce {
    pub fn new(node_type: NodeType, identifier: impl Into<String>) -> Self {
        Sce {
            node_type,
            identifier: identifier.into(),
        }
    }
}

impl fmt::Display for Sce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.node_type, self.identifier)
    }
}

/// A node of a generic or refined syntax tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AstNode {
    #[serde(rename = "type")]
    pub node_type: NodeType,
    #[serde(default)]
    pub label: String,
    pub span: Span,
    #[serde(default)]
    pub children: Vec<AstNode>,
}

impl AstNode {
    pub fn new(node_type: NodeType, label: impl Into<String>, span: Span) -> Self {
        AstNode {
            node_type,
            label: label.into(),
            span,
            children: Vec::new(),
        }
    }

    pub fn with_children(mut self, children: Vec<AstNode>) -> Self {
        self.children = children;
        self
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn sce(&self) -> Sce {
        Sce::new(self.node_type.clone(), self.label.clone())
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(AstNode::size).sum::<usize>()
    }

    /// Structural equality: types, labels and shape, ignoring spans.
    pub fn same_structure(&self, other: &AstNode) -> bool {
        self.node_type == other.node_type
            && self.label == other.label
            && self.children.len() == other.children.len()
            && self
                .children
                .iter()
                .zip(&other.children)
                .all(|(a, b)| a.same_structure(b))
    }

    /// 64-bit FNV-1a digest of the structure (spans excluded).
    pub fn structure_hash(&self) -> u64 {
        let mut hasher = Fnv1a::default();
        self.feed_structure(&mut hasher);
        hasher.finish()
    }

    fn feed_structure(&self, hasher: &mut Fnv1a) {
        hasher.write(self.node_type.as_str().as_bytes());
        hasher.write(&[0]);
        hasher.write(self.label.as_bytes());
        hasher.write(&[0]);
        hasher.write(&(self.children.len() as u64).to_le_bytes());
        for child in &self.children {
            child.feed_structure(hasher);
        }
    }

    pub fn get(&self, path: &[usize]) -> Option<&AstNode> {
        match path.split_first() {
            None => Some(self),
            Some((&first, rest)) => self.children.get(first)?.get(rest),
        }
    }

    pub fn get_mut(&mut self, path: &[usize]) -> Option<&mut AstNode> {
        match path.split_first() {
            None => Some(self),
            Some((&first, rest)) => self.children.get_mut(first)?.get_mut(rest),
        }
    }

    /// Pre-order traversal yielding `(path, node)`.
    pub fn walk(&self) -> Vec<(Vec<usize>, &AstNode)> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.walk_into(&mut path, &mut out);
        out
    }

    fn walk_into<'a>(&'a self, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, &'a AstNode)>) {
        out.push((path.clone(), self));
        for (i, child) in self.children.iter().enumerate() {
            path.push(i);
            child.walk_into(path, out);
            path.pop();
        }
    }

    /// Canonical one-line rendering of the structure, used for ordering and
    /// as a map key.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        self.write_canonical(&mut out);
        out
    }

    fn write_canonical(&self, out: &mut String) {
        out.push('(');
        out.push_str(self.node_type.as_str());
        if !self.label.is_empty() {
            out.push(' ');
            out.push_str(&serde_json::to_string(&self.label).expect("string serializes"));
        }
        for child in &self.children {
            out.push(' ');
            child.write_canonical(out);
        }
        out.push(')');
    }
}

/// 64-bit FNV-1a.
#[derive(Debug, Clone, Copy)]
pub struct Fnv1a(u64);

impl Default for Fnv1a {
    fn default() -> Self {
        Fnv1a(0xcbf2_9ce4_8422_2325)
    }
}

impl Fnv1a {
    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub fn finish(&self) -> u64 {
        self.0
    }

    pub fn hash(bytes: &[u8]) -> u64 {
        let mut h = Fnv1a::default();
        h.write(bytes);
        h.finish()
    }
}
