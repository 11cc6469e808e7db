//! Recursive-descent parser producing generic trees.
//!
//! Grammar summary (Java-like subset):
//!
//! ```text
//! unit      := item*
//! item      := typeDecl | methodDecl | fieldDecl | statement
//! typeDecl  := modifier* ("class" | "interface") Name [extends T] [implements T,..] "{" member* "}"
//! member    := typeDecl | methodDecl | fieldDecl | constructor
//! statement := block | varDecl | "if" "(" expr ")" statement ["else" statement]
//!            | "return" [expr] ";" | expr ";" | ";"
//! expr      := assignment with Java operator precedence, casts, `new`,
//!              invocations, field and array access, instanceof, ?:
//! ```
//!
//! Declarations carry one declarator each (`int a, b;` is rejected). The
//! final statement of the input may omit its semicolon so that bare
//! fragments such as `int a` parse.

use super::lexer::{lex, LexToken, TokenKind, MODIFIERS, PRIMITIVES};
use super::{AstError, AstNode, NodeType, Span};

/// Parse a compilation unit into a generic tree rooted at `CompilationUnit`.
pub fn parse(source: &str) -> Result<AstNode, AstError> {
    let tokens = lex(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        furthest: None,
    };
    let mut items = Vec::new();
    while !parser.at_end() {
        match parser.item() {
            Ok(item) => items.push(item),
            Err(e) => return Err(parser.furthest_of(e)),
        }
    }
    let span = match (items.first(), items.last()) {
        (Some(first), Some(last)) => Span::new(first.span.start, last.span.end),
        _ => Span::line(1),
    };
    Ok(AstNode::new(NodeType::CompilationUnit, "", span).with_children(items))
}

type PResult<T> = Result<T, AstError>;

struct Parser {
    tokens: Vec<LexToken>,
    pos: usize,
    /// Deepest error seen inside an abandoned speculative parse; reported
    /// instead of the final error when it got further into the input.
    furthest: Option<AstError>,
}

fn error_position(e: &AstError) -> (u32, u32) {
    match e {
        AstError::Syntax { line, column, .. } => (*line, *column),
        _ => (0, 0),
    }
}

fn node(ty: NodeType, label: impl Into<String>, span: Span, children: Vec<AstNode>) -> AstNode {
    AstNode::new(ty, label, span).with_children(children)
}

fn simple_name(tok: &LexToken) -> AstNode {
    AstNode::new(NodeType::SimpleName, tok.text.clone(), Span::line(tok.line))
}

impl Parser {
    fn furthest_of(&mut self, e: AstError) -> AstError {
        match self.furthest.take() {
            Some(f) if error_position(&f) > error_position(&e) => f,
            _ => e,
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek_at(&self, ahead: usize) -> Option<&LexToken> {
        self.tokens.get(self.pos + ahead)
    }

    fn peek_text(&self, ahead: usize) -> Option<&str> {
        self.peek_at(ahead).map(|t| t.text.as_str())
    }

    fn check(&self, text: &str) -> bool {
        self.peek_text(0) == Some(text)
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.check(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error_here(&self, message: impl Into<String>) -> AstError {
        let (line, column) = match self.peek_at(0) {
            Some(t) => (t.line, t.column),
            None => self
                .tokens
                .last()
                .map(|t| (t.line, t.column + t.text.chars().count() as u32))
                .unwrap_or((1, 1)),
        };
        AstError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn expect(&mut self, text: &str) -> PResult<&LexToken> {
        if self.check(text) {
            self.pos += 1;
            Ok(&self.tokens[self.pos - 1])
        } else {
            let found = self.peek_text(0).unwrap_or("end of input").to_string();
            Err(self.error_here(format!("expected `{text}`, found `{found}`")))
        }
    }

    /// Statement terminator; optional at the very end of the input.
    fn expect_semi(&mut self) -> PResult<()> {
        if self.at_end() {
            return Ok(());
        }
        self.expect(";").map(|_| ())
    }

    fn ident(&mut self) -> PResult<LexToken> {
        match self.peek_at(0) {
            Some(t) if t.kind == TokenKind::Ident => {
                let t = t.clone();
                self.pos += 1;
                Ok(t)
            }
            other => {
                let found = other
                    .map(|t| t.text.clone())
                    .unwrap_or_else(|| "end of input".into());
                Err(self.error_here(format!("expected identifier, found `{found}`")))
            }
        }
    }

    fn start_line(&self) -> u32 {
        self.peek_at(0)
            .or_else(|| self.tokens.last())
            .map(|t| t.line)
            .unwrap_or(1)
    }

    fn end_line(&self) -> u32 {
        self.pos
            .checked_sub(1)
            .and_then(|i| self.tokens.get(i))
            .map(|t| t.line)
            .unwrap_or(1)
    }

    fn span_from(&self, start: u32) -> Span {
        Span::new(start, self.end_line().max(start))
    }

    /// Run `f` speculatively, restoring the position when it fails.
    fn attempt<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> Option<T> {
        let saved = self.pos;
        match f(self) {
            Ok(v) => Some(v),
            Err(e) => {
                self.pos = saved;
                let further = self
                    .furthest
                    .as_ref()
                    .is_none_or(|f| error_position(&e) > error_position(f));
                if further {
                    self.furthest = Some(e);
                }
                None
            }
        }
    }

    // ---- declarations ----

    fn modifiers(&mut self) -> PResult<Vec<AstNode>> {
        let mut out = Vec::new();
        loop {
            let start = self.start_line();
            if let Some(t) = self.peek_text(0) {
                if MODIFIERS.contains(&t) {
                    let text = t.to_string();
                    self.pos += 1;
                    out.push(AstNode::new(NodeType::Modifier, text, Span::line(start)));
                    continue;
                }
                if t == "@" {
                    self.pos += 1;
                    let name = self.ident()?;
                    out.push(AstNode::new(
                        NodeType::Modifier,
                        format!("@{}", name.text),
                        Span::line(start),
                    ));
                    continue;
                }
            }
            return Ok(out);
        }
    }

    fn item(&mut self) -> PResult<AstNode> {
        let starts_member = matches!(self.peek_text(0), Some(t) if MODIFIERS.contains(&t) || t == "@" || t == "class" || t == "interface");
        if starts_member {
            return self.member(None);
        }
        if let Some(method) =
            self.attempt(|p| p.method_declaration(Vec::new(), p.start_line(), None))
        {
            return Ok(method);
        }
        self.statement()
    }

    /// A class member; `class_name` enables constructor recognition.
    fn member(&mut self, class_name: Option<&str>) -> PResult<AstNode> {
        let start = self.start_line();
        let mods = self.modifiers()?;
        if self.check("class") || self.check("interface") {
            return self.type_declaration(mods, start);
        }
        if let Some(name) = class_name {
            if self.check(name) && self.peek_text(1) == Some("(") {
                return self.method_declaration(mods, start, Some(name));
            }
        }
        let saved = self.pos;
        if let Some(method) = self.attempt(|p| p.method_declaration(mods.clone(), start, None)) {
            return Ok(method);
        }
        self.pos = saved;
        let ty = self.parse_type()?;
        let name = self.ident()?;
        let mut children = mods;
        children.push(ty);
        children.push(simple_name(&name));
        if self.eat("=") {
            children.push(self.variable_initializer()?);
        }
        if self.check(",") {
            return Err(self.error_here("multiple declarators are not supported"));
        }
        self.expect_semi()?;
        Ok(node(
            NodeType::FieldDeclaration,
            "",
            self.span_from(start),
            children,
        ))
    }

    fn type_declaration(&mut self, mods: Vec<AstNode>, start: u32) -> PResult<AstNode> {
        self.pos += 1; // class | interface
        let name = self.ident()?;
        let mut children = mods;
        children.push(simple_name(&name));
        if self.peek_text(0) == Some("extends") {
            self.pos += 1;
            children.push(self.parse_type()?);
        }
        if self.peek_text(0) == Some("implements") {
            self.pos += 1;
            loop {
                children.push(self.parse_type()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect("{")?;
        while !self.check("}") {
            if self.at_end() {
                return Err(self.error_here("unterminated class body"));
            }
            if self.eat(";") {
                continue;
            }
            children.push(self.member(Some(&name.text))?);
        }
        self.expect("}")?;
        Ok(node(
            NodeType::TypeDeclaration,
            name.text,
            self.span_from(start),
            children,
        ))
    }

    fn method_declaration(
        &mut self,
        mods: Vec<AstNode>,
        start: u32,
        constructor: Option<&str>,
    ) -> PResult<AstNode> {
        let mut children = mods;
        if constructor.is_none() {
            children.push(self.parse_type()?);
        }
        let name = self.ident()?;
        children.push(simple_name(&name));
        self.expect("(")?;
        if !self.check(")") {
            loop {
                let pstart = self.start_line();
                let mut pchildren = self.modifiers()?;
                pchildren.push(self.parse_type()?);
                let pname = self.ident()?;
                pchildren.push(simple_name(&pname));
                children.push(node(
                    NodeType::SingleVariableDeclaration,
                    "",
                    self.span_from(pstart),
                    pchildren,
                ));
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        if self.peek_text(0) == Some("throws") {
            self.pos += 1;
            loop {
                self.parse_type()?;
                if !self.eat(",") {
                    break;
                }
            }
        }
        if !self.eat(";") {
            if !self.check("{") {
                return Err(self.error_here("expected method body"));
            }
            children.push(self.block()?);
        }
        Ok(node(
            NodeType::MethodDeclaration,
            name.text,
            self.span_from(start),
            children,
        ))
    }

    // ---- types ----

    fn parse_type(&mut self) -> PResult<AstNode> {
        let start = self.start_line();
        let base = match self.peek_at(0) {
            Some(t) if t.kind == TokenKind::Keyword && PRIMITIVES.contains(&t.text.as_str()) => {
                let text = t.text.clone();
                self.pos += 1;
                AstNode::new(NodeType::PrimitiveType, text, Span::line(start))
            }
            Some(t) if t.kind == TokenKind::Ident => self.class_type()?,
            _ => return Err(self.error_here("expected type")),
        };
        self.array_dims(base, start)
    }

    fn array_dims(&mut self, mut ty: AstNode, start: u32) -> PResult<AstNode> {
        while self.check("[") && self.peek_text(1) == Some("]") {
            self.pos += 2;
            let label = format!("{}[]", ty.label);
            ty = node(NodeType::ArrayType, label, self.span_from(start), vec![ty]);
        }
        Ok(ty)
    }

    /// `Name(.Name)*` with optional type arguments.
    fn class_type(&mut self) -> PResult<AstNode> {
        let start = self.start_line();
        let mut name = self.ident()?.text;
        while self.check(".") && matches!(self.peek_at(1), Some(t) if t.kind == TokenKind::Ident) {
            self.pos += 1;
            name.push('.');
            name.push_str(&self.ident()?.text);
        }
        let simple = node(
            NodeType::SimpleType,
            name.clone(),
            Span::line(start),
            vec![AstNode::new(
                NodeType::SimpleName,
                name.clone(),
                Span::line(start),
            )],
        );
        if !self.check("<") {
            return Ok(simple);
        }
        self.pos += 1;
        let mut args = Vec::new();
        if !self.check(">") {
            loop {
                if self.eat("?") {
                    args.push(AstNode::new(
                        NodeType::SimpleType,
                        "?",
                        Span::line(self.end_line()),
                    ));
                } else {
                    args.push(self.parse_type()?);
                }
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(">")?;
        let label = format!(
            "{}<{}>",
            name,
            args.iter()
                .map(|a| a.label.as_str())
                .collect::<Vec<_>>()
                .join(",")
        );
        let mut children = vec![simple];
        children.extend(args);
        Ok(node(
            NodeType::ParameterizedType,
            label,
            self.span_from(start),
            children,
        ))
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<AstNode> {
        let start = self.start_line();
        self.expect("{")?;
        let mut children = Vec::new();
        while !self.check("}") {
            if self.at_end() {
                return Err(self.error_here("unterminated block"));
            }
            if self.eat(";") {
                continue;
            }
            children.push(self.statement()?);
        }
        self.expect("}")?;
        Ok(node(NodeType::Block, "", self.span_from(start), children))
    }

    fn statement(&mut self) -> PResult<AstNode> {
        let start = self.start_line();
        match self.peek_text(0) {
            Some("{") => return self.block(),
            Some("if") => {
                self.pos += 1;
                self.expect("(")?;
                let cond = self.expression()?;
                self.expect(")")?;
                let mut children = vec![cond, self.statement()?];
                if self.eat("else") {
                    children.push(self.statement()?);
                }
                return Ok(node(
                    NodeType::IfStatement,
                    "if",
                    self.span_from(start),
                    children,
                ));
            }
            Some("return") => {
                self.pos += 1;
                let mut children = Vec::new();
                if !self.check(";") && !self.at_end() {
                    children.push(self.expression()?);
                }
                self.expect_semi()?;
                return Ok(node(
                    NodeType::ReturnStatement,
                    "return",
                    self.span_from(start),
                    children,
                ));
            }
            Some("final") => {
                let mods = self.modifiers()?;
                return self.local_declaration(mods, start);
            }
            None => return Err(self.error_here("expected statement")),
            _ => {}
        }
        if let Some(decl) = self.attempt(|p| p.local_declaration(Vec::new(), start)) {
            return Ok(decl);
        }
        let expr = self.expression()?;
        self.expect_semi()?;
        Ok(node(
            NodeType::ExpressionStatement,
            "",
            self.span_from(start),
            vec![expr],
        ))
    }

    fn local_declaration(&mut self, mods: Vec<AstNode>, start: u32) -> PResult<AstNode> {
        let ty = self.parse_type()?;
        let name = self.ident()?;
        let mut children = mods;
        children.push(ty);
        children.push(simple_name(&name));
        if self.eat("=") {
            children.push(self.variable_initializer()?);
        }
        if self.check(",") {
            return Err(self.error_here("multiple declarators are not supported"));
        }
        self.expect_semi()?;
        Ok(node(
            NodeType::VariableDeclaration,
            "",
            self.span_from(start),
            children,
        ))
    }

    fn variable_initializer(&mut self) -> PResult<AstNode> {
        if self.check("{") {
            self.array_initializer()
        } else {
            self.expression()
        }
    }

    fn array_initializer(&mut self) -> PResult<AstNode> {
        let start = self.start_line();
        self.expect("{")?;
        let mut children = Vec::new();
        while !self.check("}") {
            children.push(self.variable_initializer()?);
            if !self.eat(",") {
                break;
            }
        }
        self.expect("}")?;
        Ok(node(
            NodeType::ArrayInitializer,
            "",
            self.span_from(start),
            children,
        ))
    }

    // ---- expressions ----

    fn expression(&mut self) -> PResult<AstNode> {
        let start = self.start_line();
        let lhs = self.conditional()?;
        if let Some((op, width)) = self.assignment_op() {
            self.pos += width;
            let rhs = if self.check("{") {
                self.array_initializer()?
            } else {
                self.expression()?
            };
            return Ok(node(
                NodeType::Assignment,
                op,
                self.span_from(start),
                vec![lhs, rhs],
            ));
        }
        Ok(lhs)
    }

    fn adjacent(&self, ahead: usize) -> bool {
        match (self.peek_at(ahead), self.peek_at(ahead + 1)) {
            (Some(a), Some(b)) => {
                a.line == b.line && a.column + a.text.chars().count() as u32 == b.column
            }
            _ => false,
        }
    }

    /// Operators starting with `>` are assembled from adjacent tokens.
    fn greater_op(&self) -> Option<(String, usize)> {
        if !self.check(">") {
            return None;
        }
        let mut text = String::from(">");
        let mut width = 1;
        while width < 3 && self.adjacent(width - 1) {
            match self.peek_text(width) {
                Some(">") => {
                    text.push('>');
                    width += 1;
                }
                Some(">=") => {
                    text.push_str(">=");
                    width += 1;
                    break;
                }
                _ => break,
            }
        }
        Some((text, width))
    }

    fn assignment_op(&self) -> Option<(String, usize)> {
        let t = self.peek_text(0)?;
        if matches!(
            t,
            "=" | "+=" | "-=" | "*=" | "/=" | "%=" | "&=" | "|=" | "^=" | "<<="
        ) {
            return Some((t.to_string(), 1));
        }
        self.greater_op()
            .filter(|(op, _)| op.len() > 2 && op.ends_with('='))
    }

    fn conditional(&mut self) -> PResult<AstNode> {
        let start = self.start_line();
        let cond = self.binary(0)?;
        if self.eat("?") {
            let a = self.expression()?;
            self.expect(":")?;
            let b = self.conditional()?;
            return Ok(node(
                NodeType::ConditionalExpression,
                "?:",
                self.span_from(start),
                vec![cond, a, b],
            ));
        }
        Ok(cond)
    }

    fn binary_op(&self) -> Option<(String, usize, u8)> {
        const LEVELS: &[&[&str]] = &[
            &["||"],
            &["&&"],
            &["|"],
            &["^"],
            &["&"],
            &["==", "!="],
            &["<", "<=", ">", ">=", "instanceof"],
            &["<<", ">>", ">>>"],
            &["+", "-"],
            &["*", "/", "%"],
        ];
        let (text, width) = match self.greater_op() {
            Some(g) => g,
            None => (self.peek_text(0)?.to_string(), 1),
        };
        LEVELS
            .iter()
            .position(|ops| ops.contains(&text.as_str()))
            .map(|level| (text, width, level as u8))
    }

    fn binary(&mut self, min_level: u8) -> PResult<AstNode> {
        let start = self.start_line();
        let mut lhs = self.unary()?;
        while let Some((op, width, level)) = self.binary_op() {
            if level < min_level {
                break;
            }
            self.pos += width;
            if op == "instanceof" {
                let ty = self.parse_type()?;
                lhs = node(
                    NodeType::InstanceofExpression,
                    "instanceof",
                    self.span_from(start),
                    vec![lhs, ty],
                );
                continue;
            }
            let rhs = self.binary(level + 1)?;
            lhs = node(
                NodeType::InfixExpression,
                op,
                self.span_from(start),
                vec![lhs, rhs],
            );
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<AstNode> {
        let start = self.start_line();
        if let Some(op) = self.peek_text(0) {
            if matches!(op, "!" | "~" | "-" | "+" | "++" | "--") {
                let op = op.to_string();
                self.pos += 1;
                let operand = self.unary()?;
                return Ok(node(
                    NodeType::PrefixExpression,
                    op,
                    self.span_from(start),
                    vec![operand],
                ));
            }
        }
        if self.check("(") {
            if let Some(cast) = self.attempt(|p| p.cast(start)) {
                return Ok(cast);
            }
        }
        let mut expr = self.postfix_chain()?;
        while let Some(op @ ("++" | "--")) = self.peek_text(0) {
            let op = op.to_string();
            self.pos += 1;
            expr = node(
                NodeType::PostfixExpression,
                op,
                self.span_from(start),
                vec![expr],
            );
        }
        Ok(expr)
    }

    fn cast(&mut self, start: u32) -> PResult<AstNode> {
        self.expect("(")?;
        let ty = self.parse_type()?;
        self.expect(")")?;
        let primitive = ty.node_type == NodeType::PrimitiveType;
        let next = self
            .peek_at(0)
            .ok_or_else(|| self.error_here("expected cast operand"))?;
        let operand_start = match next.kind {
            TokenKind::Ident | TokenKind::Number | TokenKind::Str | TokenKind::Char => true,
            TokenKind::Keyword => matches!(
                next.text.as_str(),
                "new" | "this" | "null" | "true" | "false"
            ),
            TokenKind::Punct => {
                matches!(next.text.as_str(), "(" | "!" | "~")
                    || (primitive && matches!(next.text.as_str(), "-" | "+"))
            }
            TokenKind::Unknown => false,
        };
        if !operand_start {
            return Err(self.error_here("not a cast"));
        }
        let operand = self.unary()?;
        Ok(node(
            NodeType::CastExpression,
            "",
            self.span_from(start),
            vec![ty, operand],
        ))
    }

    fn postfix_chain(&mut self) -> PResult<AstNode> {
        let start = self.start_line();
        let mut expr = self.primary()?;
        loop {
            if self.eat(".") {
                let name = self.ident()?;
                if self.check("(") {
                    let args = self.arguments()?;
                    let mut children = vec![expr, simple_name(&name)];
                    children.extend(args);
                    expr = node(
                        NodeType::MethodInvocation,
                        name.text,
                        self.span_from(start),
                        children,
                    );
                } else {
                    expr = node(
                        NodeType::FieldAccess,
                        name.text.clone(),
                        self.span_from(start),
                        vec![expr, simple_name(&name)],
                    );
                }
            } else if self.check("[") {
                self.pos += 1;
                let index = self.expression()?;
                self.expect("]")?;
                expr = node(
                    NodeType::ArrayAccess,
                    "",
                    self.span_from(start),
                    vec![expr, index],
                );
            } else {
                return Ok(expr);
            }
        }
    }

    fn arguments(&mut self) -> PResult<Vec<AstNode>> {
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.check(")") {
            loop {
                args.push(self.expression()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        Ok(args)
    }

    fn primary(&mut self) -> PResult<AstNode> {
        let start = self.start_line();
        let tok = match self.peek_at(0) {
            Some(t) => t.clone(),
            None => return Err(self.error_here("expected expression")),
        };
        let leaf = |ty| Ok(AstNode::new(ty, tok.text.clone(), Span::line(tok.line)));
        match tok.kind {
            TokenKind::Number => {
                self.pos += 1;
                leaf(NodeType::NumberLiteral)
            }
            TokenKind::Str => {
                self.pos += 1;
                leaf(NodeType::StringLiteral)
            }
            TokenKind::Char => {
                self.pos += 1;
                leaf(NodeType::CharacterLiteral)
            }
            TokenKind::Ident => {
                self.pos += 1;
                if self.check("(") {
                    let args = self.arguments()?;
                    let mut children = vec![simple_name(&tok)];
                    children.extend(args);
                    return Ok(node(
                        NodeType::MethodInvocation,
                        tok.text,
                        self.span_from(start),
                        children,
                    ));
                }
                Ok(simple_name(&tok))
            }
            TokenKind::Keyword => match tok.text.as_str() {
                "true" | "false" => {
                    self.pos += 1;
                    leaf(NodeType::BooleanLiteral)
                }
                "null" => {
                    self.pos += 1;
                    leaf(NodeType::NullLiteral)
                }
                "this" => {
                    self.pos += 1;
                    leaf(NodeType::ThisExpression)
                }
                "new" => {
                    self.pos += 1;
                    self.creation(start)
                }
                _ => Err(self.error_here(format!("unexpected `{}`", tok.text))),
            },
            TokenKind::Punct if tok.text == "(" => {
                self.pos += 1;
                let inner = self.expression()?;
                self.expect(")")?;
                Ok(node(
                    NodeType::ParenthesizedExpression,
                    "",
                    self.span_from(start),
                    vec![inner],
                ))
            }
            _ => Err(self.error_here(format!("unexpected `{}`", tok.text))),
        }
    }

    /// After `new`: array creation or class instance creation.
    fn creation(&mut self, start: u32) -> PResult<AstNode> {
        let base_start = self.start_line();
        let base = match self.peek_at(0) {
            Some(t) if t.kind == TokenKind::Keyword && PRIMITIVES.contains(&t.text.as_str()) => {
                let text = t.text.clone();
                self.pos += 1;
                AstNode::new(NodeType::PrimitiveType, text, Span::line(base_start))
            }
            Some(t) if t.kind == TokenKind::Ident => self.class_type()?,
            _ => return Err(self.error_here("expected type after `new`")),
        };
        if self.check("(") {
            let args = self.arguments()?;
            let mut children = vec![base];
            children.extend(args);
            return Ok(node(
                NodeType::ClassInstanceCreation,
                "new",
                self.span_from(start),
                children,
            ));
        }
        if !self.check("[") {
            return Err(self.error_here("expected `(` or `[` after type"));
        }
        let mut dims = Vec::new();
        let mut ty = base;
        while self.check("[") {
            self.pos += 1;
            if !self.check("]") {
                dims.push(self.expression()?);
            }
            self.expect("]")?;
            let label = format!("{}[]", ty.label);
            ty = node(
                NodeType::ArrayType,
                label,
                self.span_from(base_start),
                vec![ty],
            );
        }
        let mut children = vec![ty];
        children.extend(dims);
        if self.check("{") {
            children.push(self.array_initializer()?);
        }
        Ok(node(
            NodeType::ArrayCreation,
            "",
            self.span_from(start),
            children,
        ))
    }
}
