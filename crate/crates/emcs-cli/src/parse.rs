//! Parsing of system descriptions and observation documents.
//!
//! The system grammar is line-oriented with `#` comments:
//!
//! ```text
//! context <name> kind (asp|factstore) signature { a, b, ... }
//! kb <context-name> { <kb-element>; ... }
//! cost <context-name> { add = 1, del = 1 }
//! distance <context-name> symdiff
//! aggregator (max|avg)
//! observer <name> language { q, r, ... }
//! bridge <context-name> { [next] <op>(<kb-element>) <- (<ctx>:<atom>), not (<obs>@<atom>); ... }
//! ```
//!
//! Observation documents hold one time step per `step:` line:
//!
//! ```text
//! step: o1 = { q } ; o2 = { }
//! ```
//!
//! Every error carries the line and column it was detected at.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use emcs_core::{
    Aggregator, Atom, BridgeHead, BridgeLiteral, BridgeRule, BridgeTarget, DistanceKind, Emcs,
    EvolvingContext, InstantObservation, KbElement, KnowledgeBase, Logic, LogicKind,
    ObservationContext, ObservationSequence, OpFormula, OpName,
};
use thiserror::Error;

#[derive(Clone, PartialEq, Eq, Debug, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// A parsed system: the engine structure plus the name table and the
/// system-wide distance aggregator.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SystemDescription {
    pub system: Emcs,
    pub aggregator: Aggregator,
    pub context_names: Vec<String>,
    pub observer_names: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum TokenKind {
    Ident,
    Number,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    At,
    Eq,
    Dot,
    Arrow,    // <-
    RuleSep,  // :-
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokenKind,
    text: String,
    line: usize,
    col: usize,
}

fn tokenize(input: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    for (line_idx, line) in input.lines().enumerate() {
        let line_no = line_idx + 1;
        let bytes: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            let col = i + 1;
            match c {
                '#' => break,
                c if c.is_whitespace() => {
                    i += 1;
                }
                c if c.is_ascii_alphanumeric() || c == '_' => {
                    let start = i;
                    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                        i += 1;
                    }
                    let text: String = bytes[start..i].iter().collect();
                    let kind = if text.bytes().all(|b| b.is_ascii_digit()) {
                        TokenKind::Number
                    } else {
                        TokenKind::Ident
                    };
                    tokens.push(Token {
                        kind,
                        text,
                        line: line_no,
                        col,
                    });
                }
                '{' | '}' | '(' | ')' | ',' | ';' | '@' | '=' | '.' => {
                    let kind = match c {
                        '{' => TokenKind::LBrace,
                        '}' => TokenKind::RBrace,
                        '(' => TokenKind::LParen,
                        ')' => TokenKind::RParen,
                        ',' => TokenKind::Comma,
                        ';' => TokenKind::Semi,
                        '@' => TokenKind::At,
                        '=' => TokenKind::Eq,
                        _ => TokenKind::Dot,
                    };
                    tokens.push(Token {
                        kind,
                        text: c.to_string(),
                        line: line_no,
                        col,
                    });
                    i += 1;
                }
                '<' if bytes.get(i + 1) == Some(&'-') => {
                    tokens.push(Token {
                        kind: TokenKind::Arrow,
                        text: "<-".into(),
                        line: line_no,
                        col,
                    });
                    i += 2;
                }
                ':' if bytes.get(i + 1) == Some(&'-') => {
                    tokens.push(Token {
                        kind: TokenKind::RuleSep,
                        text: ":-".into(),
                        line: line_no,
                        col,
                    });
                    i += 2;
                }
                ':' => {
                    tokens.push(Token {
                        kind: TokenKind::Colon,
                        text: ":".into(),
                        line: line_no,
                        col,
                    });
                    i += 1;
                }
                other => {
                    return Err(ParseError {
                        line: line_no,
                        col,
                        message: format!("unexpected character `{other}`"),
                    })
                }
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(tokens: Vec<Token>) -> Self {
        Parser { tokens, pos: 0 }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn here(&self) -> (usize, usize) {
        match self.peek() {
            Some(t) => (t.line, t.col),
            None => self
                .tokens
                .last()
                .map(|t| (t.line, t.col + t.text.len()))
                .unwrap_or((1, 1)),
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }

    fn advance(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<Token, ParseError> {
        match self.peek() {
            Some(t) if t.kind == kind => Ok(self.advance().unwrap()),
            Some(t) => Err(self.error(format!("expected {what}, found `{}`", t.text))),
            None => Err(self.error(format!("expected {what}, found end of input"))),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<Token, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident || t.kind == TokenKind::Number => {
                Ok(self.advance().unwrap())
            }
            Some(t) => Err(self.error(format!("expected {what}, found `{}`", t.text))),
            None => Err(self.error(format!("expected {what}, found end of input"))),
        }
    }

    fn expect_keyword(&mut self, word: &str) -> Result<Token, ParseError> {
        let t = self.expect_ident(&format!("`{word}`"))?;
        if t.text != word {
            return Err(ParseError {
                line: t.line,
                col: t.col,
                message: format!("expected `{word}`, found `{}`", t.text),
            });
        }
        Ok(t)
    }

    fn eat(&mut self, kind: TokenKind) -> bool {
        if self.peek().map(|t| t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn atom(&mut self, what: &str) -> Result<(Atom, Token), ParseError> {
        let t = self.expect_ident(what)?;
        match Atom::new(t.text.clone()) {
            Ok(a) => Ok((a, t)),
            Err(e) => Err(ParseError {
                line: t.line,
                col: t.col,
                message: e.to_string(),
            }),
        }
    }

    /// `{ a, b, ... }` possibly empty.
    fn atom_set(&mut self) -> Result<BTreeSet<Atom>, ParseError> {
        self.expect(TokenKind::LBrace, "`{`")?;
        let mut out = BTreeSet::new();
        if self.eat(TokenKind::RBrace) {
            return Ok(out);
        }
        loop {
            let (a, _) = self.atom("an atom")?;
            out.insert(a);
            if self.eat(TokenKind::Comma) {
                continue;
            }
            self.expect(TokenKind::RBrace, "`}`")?;
            return Ok(out);
        }
    }

    /// One kb-element, without its terminating dot: `h` or `h :- a, not b`.
    fn kb_element_body(&mut self) -> Result<KbElement, ParseError> {
        let (head, _) = self.atom("a kb-element head atom")?;
        if !self.eat(TokenKind::RuleSep) {
            return Ok(KbElement::Fact(head));
        }
        let mut pos = BTreeSet::new();
        let mut neg = BTreeSet::new();
        loop {
            let negated = matches!(self.peek(), Some(t) if t.kind == TokenKind::Ident && t.text == "not");
            if negated {
                self.advance();
            }
            let (a, _) = self.atom("a body atom")?;
            if negated {
                neg.insert(a);
            } else {
                pos.insert(a);
            }
            if !self.eat(TokenKind::Comma) {
                break;
            }
        }
        Ok(KbElement::Rule { head, pos, neg })
    }
}

#[derive(Debug)]
enum Statement {
    Context {
        name: Token,
        kind: LogicKind,
        signature: BTreeSet<Atom>,
    },
    Kb {
        name: Token,
        elements: Vec<KbElement>,
    },
    Cost {
        name: Token,
        costs: BTreeMap<String, (u64, Token)>,
    },
    Distance {
        name: Token,
    },
    Aggregator {
        value: Aggregator,
    },
    Observer {
        name: Token,
        language: BTreeSet<Atom>,
    },
    Bridge {
        name: Token,
        rules: Vec<RawBridgeRule>,
    },
}

#[derive(Debug)]
struct RawBridgeRule {
    deferred: bool,
    op: Token,
    arg: KbElement,
    body: Vec<RawLiteral>,
}

#[derive(Debug)]
struct RawLiteral {
    negated: bool,
    target: Token,
    observer_query: bool,
    atom: Atom,
    atom_token: Token,
}

fn parse_statements(p: &mut Parser) -> Result<Vec<Statement>, ParseError> {
    let mut out = Vec::new();
    while !p.at_end() {
        let keyword = p.expect_ident("a statement keyword")?;
        match keyword.text.as_str() {
            "context" => {
                let name = p.expect_ident("a context name")?;
                p.expect_keyword("kind")?;
                let kind_tok = p.expect_ident("`asp` or `factstore`")?;
                let kind = match kind_tok.text.as_str() {
                    "asp" => LogicKind::Asp,
                    "factstore" => LogicKind::FactStore,
                    other => {
                        return Err(ParseError {
                            line: kind_tok.line,
                            col: kind_tok.col,
                            message: format!("unknown logic kind `{other}`"),
                        })
                    }
                };
                p.expect_keyword("signature")?;
                let signature = p.atom_set()?;
                out.push(Statement::Context {
                    name,
                    kind,
                    signature,
                });
            }
            "kb" => {
                let name = p.expect_ident("a context name")?;
                p.expect(TokenKind::LBrace, "`{`")?;
                let mut elements = Vec::new();
                while !p.eat(TokenKind::RBrace) {
                    let e = p.kb_element_body()?;
                    p.expect(TokenKind::Dot, "`.`")?;
                    p.eat(TokenKind::Semi);
                    elements.push(e);
                }
                out.push(Statement::Kb { name, elements });
            }
            "cost" => {
                let name = p.expect_ident("a context name")?;
                p.expect(TokenKind::LBrace, "`{`")?;
                let mut costs = BTreeMap::new();
                if !p.eat(TokenKind::RBrace) {
                    loop {
                        let op = p.expect_ident("an operation name")?;
                        p.expect(TokenKind::Eq, "`=`")?;
                        let value = p.expect(TokenKind::Number, "a non-negative integer")?;
                        let parsed: u64 = value.text.parse().map_err(|_| ParseError {
                            line: value.line,
                            col: value.col,
                            message: format!("cost `{}` out of range", value.text),
                        })?;
                        costs.insert(op.text.clone(), (parsed, op));
                        if p.eat(TokenKind::Comma) {
                            continue;
                        }
                        p.expect(TokenKind::RBrace, "`}`")?;
                        break;
                    }
                }
                out.push(Statement::Cost { name, costs });
            }
            "distance" => {
                let name = p.expect_ident("a context name")?;
                p.expect_keyword("symdiff")?;
                out.push(Statement::Distance { name });
            }
            "aggregator" => {
                let tok = p.expect_ident("`max` or `avg`")?;
                let value = match tok.text.as_str() {
                    "max" => Aggregator::Max,
                    "avg" => Aggregator::Avg,
                    other => {
                        return Err(ParseError {
                            line: tok.line,
                            col: tok.col,
                            message: format!("unknown aggregator `{other}`"),
                        })
                    }
                };
                out.push(Statement::Aggregator { value });
            }
            "observer" => {
                let name = p.expect_ident("an observer name")?;
                p.expect_keyword("language")?;
                let language = p.atom_set()?;
                out.push(Statement::Observer { name, language });
            }
            "bridge" => {
                let name = p.expect_ident("a context name")?;
                p.expect(TokenKind::LBrace, "`{`")?;
                let mut rules = Vec::new();
                while !p.eat(TokenKind::RBrace) {
                    rules.push(parse_bridge_rule(p)?);
                    p.eat(TokenKind::Semi);
                }
                out.push(Statement::Bridge { name, rules });
            }
            other => {
                return Err(ParseError {
                    line: keyword.line,
                    col: keyword.col,
                    message: format!("unknown statement `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

fn parse_bridge_rule(p: &mut Parser) -> Result<RawBridgeRule, ParseError> {
    let first = p.expect_ident("an operation or `next`")?;
    let (deferred, op) = if first.text == "next" {
        p.expect(TokenKind::LParen, "`(`")?;
        let op = p.expect_ident("an operation name")?;
        (true, op)
    } else {
        (false, first)
    };
    p.expect(TokenKind::LParen, "`(`")?;
    let arg = p.kb_element_body()?;
    p.eat(TokenKind::Dot);
    p.expect(TokenKind::RParen, "`)`")?;
    if deferred {
        p.expect(TokenKind::RParen, "`)` closing `next(`")?;
    }

    let mut body = Vec::new();
    if p.eat(TokenKind::Arrow) {
        loop {
            let negated = matches!(p.peek(), Some(t) if t.kind == TokenKind::Ident && t.text == "not");
            if negated {
                p.advance();
            }
            p.expect(TokenKind::LParen, "`(`")?;
            let target = p.expect_ident("a context or observer name")?;
            let observer_query = match p.advance() {
                Some(t) if t.kind == TokenKind::Colon => false,
                Some(t) if t.kind == TokenKind::At => true,
                _ => {
                    return Err(p.error("expected `:` or `@` in bridge literal"));
                }
            };
            let (atom, atom_token) = p.atom("an atom")?;
            p.expect(TokenKind::RParen, "`)`")?;
            body.push(RawLiteral {
                negated,
                target,
                observer_query,
                atom,
                atom_token,
            });
            if !p.eat(TokenKind::Comma) {
                break;
            }
        }
    }
    Ok(RawBridgeRule {
        deferred,
        op,
        arg,
        body,
    })
}

fn semantic_error(token: &Token, message: impl Into<String>) -> ParseError {
    ParseError {
        line: token.line,
        col: token.col,
        message: message.into(),
    }
}

/// Parses and semantically resolves a system description document.
pub fn parse_system(text: &str) -> Result<SystemDescription, ParseError> {
    let mut parser = Parser::new(tokenize(text)?);
    let statements = parse_statements(&mut parser)?;

    let mut context_names: Vec<String> = Vec::new();
    let mut observer_names: Vec<String> = Vec::new();
    let mut contexts: Vec<EvolvingContext> = Vec::new();
    let mut observers: Vec<ObservationContext> = Vec::new();
    let mut aggregator = Aggregator::default();

    // first pass: declarations
    for st in &statements {
        match st {
            Statement::Context {
                name,
                kind,
                signature,
            } => {
                if context_names.contains(&name.text) || observer_names.contains(&name.text) {
                    return Err(semantic_error(name, format!("duplicate name `{}`", name.text)));
                }
                context_names.push(name.text.clone());
                contexts.push(EvolvingContext::new(
                    Logic::new(*kind, signature.iter().cloned()),
                    KnowledgeBase::default(),
                    Vec::new(),
                ));
            }
            Statement::Observer { name, language } => {
                if context_names.contains(&name.text) || observer_names.contains(&name.text) {
                    return Err(semantic_error(name, format!("duplicate name `{}`", name.text)));
                }
                observer_names.push(name.text.clone());
                observers.push(ObservationContext::new(language.iter().cloned()));
            }
            _ => {}
        }
    }
    if contexts.is_empty() {
        return Err(ParseError {
            line: 1,
            col: 1,
            message: "system must declare at least one context".into(),
        });
    }

    let context_index = |name: &Token| -> Result<usize, ParseError> {
        context_names
            .iter()
            .position(|n| n == &name.text)
            .ok_or_else(|| semantic_error(name, format!("undeclared context `{}`", name.text)))
    };

    // second pass: everything referring to declarations
    for st in &statements {
        match st {
            Statement::Kb { name, elements } => {
                let i = context_index(name)?;
                contexts[i].kb = KnowledgeBase::new(elements.iter().cloned());
                if let Err(vs) = contexts[i].logic.validate_kb(&contexts[i].kb) {
                    return Err(semantic_error(
                        name,
                        format!("invalid kb for `{}`: {}", name.text, vs[0]),
                    ));
                }
            }
            Statement::Cost { name, costs } => {
                let i = context_index(name)?;
                for (op, (value, token)) in costs {
                    match op.as_str() {
                        "add" => contexts[i].costs.add = *value,
                        "del" => contexts[i].costs.del = *value,
                        other => {
                            return Err(semantic_error(
                                token,
                                format!("unknown operation `{other}` in cost statement"),
                            ))
                        }
                    }
                }
            }
            Statement::Distance { name } => {
                let i = context_index(name)?;
                contexts[i].distance = DistanceKind::SymDiff;
            }
            Statement::Aggregator { value } => {
                aggregator = *value;
            }
            Statement::Bridge { name, rules } => {
                let i = context_index(name)?;
                for raw in rules {
                    let op = match raw.op.text.as_str() {
                        "add" => OpName::Add,
                        "del" => OpName::Del,
                        other => {
                            return Err(semantic_error(
                                &raw.op,
                                format!("unknown operation `{other}` in bridge-rule head"),
                            ))
                        }
                    };
                    if let Err(vs) = contexts[i].logic.validate_element(&raw.arg) {
                        return Err(semantic_error(
                            &raw.op,
                            format!("invalid head argument: {}", vs[0]),
                        ));
                    }
                    let mut body = BTreeSet::new();
                    for lit in &raw.body {
                        let (target, pool) = if lit.observer_query {
                            let r = observer_names
                                .iter()
                                .position(|n| n == &lit.target.text)
                                .ok_or_else(|| {
                                    semantic_error(
                                        &lit.target,
                                        format!("undeclared observer `{}`", lit.target.text),
                                    )
                                })?;
                            (BridgeTarget::Observer(r), &observers[r].language)
                        } else {
                            let r = context_index(&lit.target)?;
                            (BridgeTarget::Context(r), &contexts[r].logic.signature)
                        };
                        if !pool.contains(&lit.atom) {
                            return Err(semantic_error(
                                &lit.atom_token,
                                format!(
                                    "atom `{}` not declared for `{}`",
                                    lit.atom, lit.target.text
                                ),
                            ));
                        }
                        body.insert(BridgeLiteral {
                            negated: lit.negated,
                            target,
                            atom: lit.atom.clone(),
                        });
                    }
                    contexts[i].bridge_rules.push(BridgeRule {
                        head: BridgeHead {
                            formula: OpFormula {
                                op,
                                arg: raw.arg.clone(),
                            },
                            deferred: raw.deferred,
                        },
                        body,
                    });
                }
            }
            Statement::Context { .. } | Statement::Observer { .. } => {}
        }
    }

    let system = Emcs {
        contexts,
        observers,
    };
    if let Err(vs) = system.validate() {
        return Err(ParseError {
            line: 1,
            col: 1,
            message: format!("invalid system: {}", vs[0]),
        });
    }
    Ok(SystemDescription {
        system,
        aggregator,
        context_names,
        observer_names,
    })
}

/// Parses an observation document against a system description. Observers
/// omitted from a step default to the empty observation.
pub fn parse_observations(
    text: &str,
    sys: &SystemDescription,
) -> Result<ObservationSequence, ParseError> {
    let mut p = Parser::new(tokenize(text)?);
    let mut steps = Vec::new();
    while !p.at_end() {
        p.expect_keyword("step")?;
        p.expect(TokenKind::Colon, "`:`")?;
        let mut per_observer = vec![BTreeSet::new(); sys.observer_names.len()];
        loop {
            match p.peek() {
                Some(t) if t.kind == TokenKind::Ident && t.text != "step" => {
                    let name = p.advance().unwrap();
                    let r = sys
                        .observer_names
                        .iter()
                        .position(|n| n == &name.text)
                        .ok_or_else(|| {
                            semantic_error(&name, format!("undeclared observer `{}`", name.text))
                        })?;
                    p.expect(TokenKind::Eq, "`=`")?;
                    let atoms = p.atom_set()?;
                    for a in &atoms {
                        if !sys.system.observers[r].language.contains(a) {
                            return Err(semantic_error(
                                &name,
                                format!("atom `{a}` not in language of observer `{}`", name.text),
                            ));
                        }
                    }
                    per_observer[r] = atoms;
                    if p.eat(TokenKind::Semi) {
                        continue;
                    }
                }
                _ => {}
            }
            break;
        }
        steps.push(InstantObservation(per_observer));
    }
    Ok(ObservationSequence(steps))
}

fn write_atom_set(out: &mut String, atoms: &BTreeSet<Atom>) {
    out.push('{');
    let mut first = true;
    for a in atoms {
        if !first {
            out.push(',');
        }
        out.push(' ');
        out.push_str(a.as_str());
        first = false;
    }
    if !first {
        out.push(' ');
    }
    out.push('}');
}

fn element_inline(e: &KbElement) -> String {
    // same shape as Display but without the trailing dot
    let s = e.to_string();
    s.trim_end_matches('.').to_string()
}

impl fmt::Display for SystemDescription {
    /// Canonical serialization; `parse_system` accepts its own output and
    /// round-trips to an equal description.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for (i, ctx) in self.system.contexts.iter().enumerate() {
            let name = &self.context_names[i];
            out.push_str(&format!("context {name} kind {} signature ", ctx.logic.kind));
            write_atom_set(&mut out, &ctx.logic.signature);
            out.push('\n');
            if !ctx.kb.is_empty() {
                out.push_str(&format!("kb {name} {{ "));
                for e in ctx.kb.elements() {
                    out.push_str(&format!("{e} "));
                }
                out.push_str("}\n");
            }
            out.push_str(&format!(
                "cost {name} {{ add = {}, del = {} }}\n",
                ctx.costs.add, ctx.costs.del
            ));
            out.push_str(&format!("distance {name} {}\n", ctx.distance));
            if !ctx.bridge_rules.is_empty() {
                out.push_str(&format!("bridge {name} {{\n"));
                for rule in &ctx.bridge_rules {
                    out.push_str("  ");
                    let op_text = format!(
                        "{}({})",
                        rule.head.formula.op,
                        element_inline(&rule.head.formula.arg)
                    );
                    if rule.head.deferred {
                        out.push_str(&format!("next({op_text})"));
                    } else {
                        out.push_str(&op_text);
                    }
                    if !rule.body.is_empty() {
                        out.push_str(" <- ");
                        let mut first = true;
                        for lit in &rule.body {
                            if !first {
                                out.push_str(", ");
                            }
                            if lit.negated {
                                out.push_str("not ");
                            }
                            match lit.target {
                                BridgeTarget::Context(r) => out.push_str(&format!(
                                    "({}:{})",
                                    self.context_names[r], lit.atom
                                )),
                                BridgeTarget::Observer(r) => out.push_str(&format!(
                                    "({}@{})",
                                    self.observer_names[r], lit.atom
                                )),
                            }
                            first = false;
                        }
                    }
                    out.push_str(";\n");
                }
                out.push_str("}\n");
            }
        }
        for (i, obs) in self.system.observers.iter().enumerate() {
            out.push_str(&format!("observer {} language ", self.observer_names[i]));
            write_atom_set(&mut out, &obs.language);
            out.push('\n');
        }
        out.push_str(&format!("aggregator {}\n", self.aggregator));
        f.write_str(&out)
    }
}

/// Canonical serialization of an observation sequence.
pub fn observations_to_text(obs: &ObservationSequence, sys: &SystemDescription) -> String {
    let mut out = String::new();
    for step in &obs.0 {
        out.push_str("step:");
        let mut first = true;
        for (r, atoms) in step.0.iter().enumerate() {
            if atoms.is_empty() {
                continue;
            }
            out.push_str(if first { " " } else { " ; " });
            out.push_str(&format!("{} = ", sys.observer_names[r]));
            write_atom_set(&mut out, atoms);
            first = false;
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
# instantaneous and persistent reaction to one observation
context c kind factstore signature { p }
kb c { }
cost c { add = 1, del = 1 }
distance c symdiff
aggregator max
observer o language { q }
bridge c {
  add(p) <- (o@q);
  next(add(p)) <- (o@q);
}
"#;

    #[test]
    fn parses_the_worked_example() {
        let sys = parse_system(EXAMPLE).unwrap();
        assert_eq!(sys.context_names, vec!["c"]);
        assert_eq!(sys.observer_names, vec!["o"]);
        assert_eq!(sys.system.contexts[0].bridge_rules.len(), 2);
        assert_eq!(sys.aggregator, Aggregator::Max);
    }

    #[test]
    fn parses_asp_rules_and_costs() {
        let text = r#"
context k kind asp signature { a, b }
kb k { a :- not b. ; b :- not a. }
cost k { add = 2, del = 0 }
distance k symdiff
aggregator avg
"#;
        let sys = parse_system(text).unwrap();
        assert_eq!(sys.system.contexts[0].kb.len(), 2);
        assert_eq!(sys.system.contexts[0].costs.add, 2);
        assert_eq!(sys.system.contexts[0].costs.del, 0);
        assert_eq!(sys.aggregator, Aggregator::Avg);
    }

    #[test]
    fn undeclared_observer_is_semantic_error() {
        let text = r#"
context c kind factstore signature { p }
bridge c { add(p) <- (ghost@q); }
"#;
        let err = parse_system(text).unwrap_err();
        assert!(err.message.contains("undeclared observer"));
        assert_eq!(err.line, 3);
    }

    #[test]
    fn empty_document_is_rejected() {
        let err = parse_system("").unwrap_err();
        assert!(err.message.contains("at least one context"));
    }

    #[test]
    fn duplicate_context_name_is_rejected() {
        let text = "context c kind factstore signature { p }\ncontext c kind asp signature { a }\n";
        let err = parse_system(text).unwrap_err();
        assert!(err.message.contains("duplicate"));
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_system("context c kind factstore signature { p ! }").unwrap_err();
        assert_eq!((err.line, err.col), (1, 40));
    }

    #[test]
    fn undeclared_atom_in_bridge_body() {
        let text = r#"
context c kind factstore signature { p }
observer o language { q }
bridge c { add(p) <- (o@zz); }
"#;
        let err = parse_system(text).unwrap_err();
        assert!(err.message.contains("not declared"));
    }

    #[test]
    fn observation_parsing_and_defaults() {
        let sys = parse_system(EXAMPLE).unwrap();
        let obs = parse_observations("step: o = { q }\nstep:\nstep: o = { }\n", &sys).unwrap();
        assert_eq!(obs.len(), 3);
        assert_eq!(obs.0[0].0[0].len(), 1);
        assert!(obs.0[1].0[0].is_empty());
        assert!(obs.0[2].0[0].is_empty());
    }

    #[test]
    fn observation_atom_outside_language() {
        let sys = parse_system(EXAMPLE).unwrap();
        let err = parse_observations("step: o = { zz }\n", &sys).unwrap_err();
        assert!(err.message.contains("not in language"));
    }

    #[test]
    fn round_trip_is_identity() {
        let sys = parse_system(EXAMPLE).unwrap();
        let text = sys.to_string();
        let reparsed = parse_system(&text).unwrap();
        assert_eq!(sys, reparsed);

        let obs = parse_observations("step: o = { q }\nstep:\n", &sys).unwrap();
        let obs_text = observations_to_text(&obs, &sys);
        assert_eq!(parse_observations(&obs_text, &sys).unwrap(), obs);
    }
}
