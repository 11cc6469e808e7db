//! Tokenizer for the mini-language.
//!
//! The lexer is also used in *lenient* mode by the violation tracker, where
//! arbitrary text must be split into tokens without failing.

use super::AstError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Keyword,
    Number,
    Str,
    Char,
    Punct,
    /// Unrecognized character (lenient mode only).
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexToken {
    pub kind: TokenKind,
    pub text: String,
    pub line: u32,
    pub column: u32,
}

const KEYWORDS: &[&str] = &[
    "class",
    "interface",
    "if",
    "else",
    "return",
    "new",
    "instanceof",
    "null",
    "true",
    "false",
    "this",
    "public",
    "private",
    "protected",
    "static",
    "final",
    "abstract",
    "synchronized",
    "transient",
    "volatile",
    "native",
    "void",
    "int",
    "long",
    "short",
    "byte",
    "char",
    "boolean",
    "float",
    "double",
];

pub(crate) const PRIMITIVES: &[&str] = &[
    "void", "int", "long", "short", "byte", "char", "boolean", "float", "double",
];

pub(crate) const MODIFIERS: &[&str] = &[
    "public",
    "private",
    "protected",
    "static",
    "final",
    "abstract",
    "synchronized",
    "transient",
    "volatile",
    "native",
];

// Longest first so that greedy matching works.
const PUNCT: &[&str] = &[
    "<<=", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=",
    "|=", "^=", "<<", "(", ")", "{", "}", "[", "]", ";", ",", ".", "=", "<", ">", "+", "-", "*",
    "/", "%", "!", "~", "?", ":", "&", "|", "^", "@",
];

/// Split `source` into tokens, skipping whitespace and comments.
///
/// `>>` and `>>>` are deliberately not single tokens so that nested generic
/// closers (`List<List<T>>`) lex as separate `>`; the parser reassembles
/// shift operators from adjacent `>` tokens.
pub fn lex(source: &str) -> Result<Vec<LexToken>, AstError> {
    Lexer::new(source, false).run()
}

/// Like [`lex`] but never fails: unterminated literals run to end of line and
/// unknown characters become [`TokenKind::Unknown`] tokens.
pub fn lex_lenient(source: &str) -> Vec<LexToken> {
    Lexer::new(source, true)
        .run()
        .expect("lenient lexing is infallible")
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    column: u32,
    lenient: bool,
}

impl Lexer {
    fn new(src: &str, lenient: bool) -> Self {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            column: 1,
            lenient,
        }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, line: u32, column: u32, message: impl Into<String>) -> AstError {
        AstError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn run(mut self) -> Result<Vec<LexToken>, AstError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek(0) {
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            if c == '/' && self.peek(1) == Some('/') {
                while let Some(c) = self.peek(0) {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            if c == '/' && self.peek(1) == Some('*') {
                let (line, column) = (self.line, self.column);
                self.bump();
                self.bump();
                loop {
                    match self.peek(0) {
                        None if self.lenient => break,
                        None => return Err(self.error(line, column, "unterminated comment")),
                        Some('*') if self.peek(1) == Some('/') => {
                            self.bump();
                            self.bump();
                            break;
                        }
                        Some(_) => {
                            self.bump();
                        }
                    }
                }
                continue;
            }
            let (line, column) = (self.line, self.column);
            let start = self.pos;
            let kind = if c.is_alphabetic() || c == '_' || c == '$' {
                while matches!(self.peek(0), Some(c) if c.is_alphanumeric() || c == '_' || c == '$')
                {
                    self.bump();
                }
                let word: String = self.chars[start..self.pos].iter().collect();
                if KEYWORDS.contains(&word.as_str()) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Ident
                }
            } else if c.is_ascii_digit() {
                self.number();
                TokenKind::Number
            } else if c == '"' || c == '\'' {
                self.bump();
                loop {
                    match self.peek(0) {
                        None | Some('\n') => {
                            if self.lenient {
                                break;
                            }
                            return Err(self.error(line, column, "unterminated literal"));
                        }
                        Some('\\') => {
                            self.bump();
                            self.bump();
                        }
                        Some(q) if q == c => {
                            self.bump();
                            break;
                        }
                        Some(_) => {
                            self.bump();
                        }
                    }
                }
                if c == '"' {
                    TokenKind::Str
                } else {
                    TokenKind::Char
                }
            } else if let Some(p) = self.punct() {
                for _ in 0..p.chars().count() {
                    self.bump();
                }
                TokenKind::Punct
            } else if self.lenient {
                self.bump();
                TokenKind::Unknown
            } else {
                return Err(self.error(line, column, format!("unexpected character {c:?}")));
            };
            out.push(LexToken {
                kind,
                text: self.chars[start..self.pos].iter().collect(),
                line,
                column,
            });
        }
        Ok(out)
    }

    fn number(&mut self) {
        if self.peek(0) == Some('0') && matches!(self.peek(1), Some('x' | 'X')) {
            self.bump();
            self.bump();
            while matches!(self.peek(0), Some(c) if c.is_ascii_hexdigit() || c == '_') {
                self.bump();
            }
        } else {
            while matches!(self.peek(0), Some(c) if c.is_ascii_digit() || c == '_') {
                self.bump();
            }
            if self.peek(0) == Some('.') && matches!(self.peek(1), Some(c) if c.is_ascii_digit()) {
                self.bump();
                while matches!(self.peek(0), Some(c) if c.is_ascii_digit() || c == '_') {
                    self.bump();
                }
            }
            if matches!(self.peek(0), Some('e' | 'E')) {
                let sign = usize::from(matches!(self.peek(1), Some('+' | '-')));
                if matches!(self.peek(1 + sign), Some(c) if c.is_ascii_digit()) {
                    for _ in 0..=sign {
                        self.bump();
                    }
                    while matches!(self.peek(0), Some(c) if c.is_ascii_digit()) {
                        self.bump();
                    }
                }
            }
        }
        if matches!(self.peek(0), Some('L' | 'l' | 'f' | 'F' | 'd' | 'D')) {
            self.bump();
        }
    }

    fn punct(&self) -> Option<&'static str> {
        PUNCT.iter().copied().find(|p| {
            p.chars()
                .enumerate()
                .all(|(i, pc)| self.peek(i) == Some(pc))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<String> {
        lex(src).unwrap().into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn splits_statement() {
        assert_eq!(
            texts("int a = b.c(1.5e3, \"x\\\"y\");"),
            [
                "int",
                "a",
                "=",
                "b",
                ".",
                "c",
                "(",
                "1.5e3",
                ",",
                "\"x\\\"y\"",
                ")",
                ";"
            ]
        );
    }

    #[test]
    fn generic_closers_stay_separate() {
        assert_eq!(
            texts("List<List<T>> x"),
            ["List", "<", "List", "<", "T", ">", ">", "x"]
        );
    }

    #[test]
    fn tracks_positions_and_skips_comments() {
        let toks = lex("a // c\n  /* x\n */ b").unwrap();
        assert_eq!((toks[1].line, toks[1].column), (3, 5));
    }

    #[test]
    fn strict_rejects_what_lenient_accepts() {
        assert!(lex("a # b").is_err());
        assert!(lex("\"open").is_err());
        let toks = lex_lenient("a # \"open");
        assert_eq!(toks.len(), 3);
        assert_eq!(toks[1].kind, TokenKind::Unknown);
    }
}
