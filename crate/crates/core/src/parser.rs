//! Lexer, recursive-descent parser, and canonical printer for `.smcdel` scenes.
//!
//! ```text
//! scene    := "VARS" props "LAW" form "OBS" obsdecl* "VALID?" form
//! props    := int ("," int)*
//! obsdecl  := ident ":" props?
//! form     := iff ;  iff := imp ("<->" imp)* ;  imp := disj ("->" imp)?
//! disj     := conj ("|" conj)* ;  conj := unary ("&" unary)*
//! unary    := "~" unary | "[" "!" form "]" unary | ident "knows" ("whether"|"that") unary
//!           | "AND" "(" form ("," form)* ")" | "OR" "(" form ("," form)* ")"
//!           | "Top" | "Bot" | int | "(" form ")"
//! ```
//!
//! Line comments start with `--`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::formula::{AgentName, Formula, Proposition, Scene, SceneError};

/// 1-based line and column (in characters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SourcePos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: expected {expected}, found {found}")]
pub struct ParseError {
    pub pos: SourcePos,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SceneParseError {
    #[error(transparent)]
    Syntax(#[from] ParseError),
    #[error("{pos}: proposition {prop} declared twice in VARS")]
    DuplicateProposition { prop: Proposition, pos: SourcePos },
    #[error("{pos}: agent {agent} declared twice in OBS")]
    DuplicateAgent { agent: AgentName, pos: SourcePos },
    #[error("{pos}: missing section {section} (found {found})")]
    MissingSection {
        section: &'static str,
        pos: SourcePos,
        found: String,
    },
    #[error(transparent)]
    Invalid(#[from] SceneError),
}

impl SceneParseError {
    /// Source position for syntax-level errors.
    pub fn pos(&self) -> Option<SourcePos> {
        match self {
            SceneParseError::Syntax(e) => Some(e.pos),
            SceneParseError::DuplicateProposition { pos, .. }
            | SceneParseError::DuplicateAgent { pos, .. }
            | SceneParseError::MissingSection { pos, .. } => Some(*pos),
            SceneParseError::Invalid(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Int(String),
    Ident(String),
    Vars,
    Law,
    Obs,
    ValidQ,
    Top,
    Bot,
    And,
    Or,
    Knows,
    Whether,
    That,
    Comma,
    Colon,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Bang,
    Tilde,
    Amp,
    Pipe,
    Arrow,
    DoubleArrow,
    Eof,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Token::Int(s) | Token::Ident(s) => return f.write_str(s),
            Token::Vars => "VARS",
            Token::Law => "LAW",
            Token::Obs => "OBS",
            Token::ValidQ => "VALID?",
            Token::Top => "Top",
            Token::Bot => "Bot",
            Token::And => "AND",
            Token::Or => "OR",
            Token::Knows => "knows",
            Token::Whether => "whether",
            Token::That => "that",
            Token::Comma => ",",
            Token::Colon => ":",
            Token::LParen => "(",
            Token::RParen => ")",
            Token::LBracket => "[",
            Token::RBracket => "]",
            Token::Bang => "!",
            Token::Tilde => "~",
            Token::Amp => "&",
            Token::Pipe => "|",
            Token::Arrow => "->",
            Token::DoubleArrow => "<->",
            Token::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spanned {
    pub token: Token,
    pub pos: SourcePos,
}

/// Splits `text` into tokens, ending with [`Token::Eof`].
pub fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        let pos = SourcePos { line, column: col };
        let peek = chars.get(i + 1).copied();
        let single = |t: Token| Some((t, 1));
        let lexed: Option<(Token, usize)> = match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
                continue;
            }
            '-' if peek == Some('-') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '-' if peek == Some('>') => Some((Token::Arrow, 2)),
            '<' if peek == Some('-') && chars.get(i + 2) == Some(&'>') => {
                Some((Token::DoubleArrow, 3))
            }
            ',' => single(Token::Comma),
            ':' => single(Token::Colon),
            '(' => single(Token::LParen),
            ')' => single(Token::RParen),
            '[' => single(Token::LBracket),
            ']' => single(Token::RBracket),
            '!' => single(Token::Bang),
            '~' => single(Token::Tilde),
            '&' => single(Token::Amp),
            '|' => single(Token::Pipe),
            c if c.is_ascii_digit() => {
                let len = chars[i..].iter().take_while(|c| c.is_ascii_digit()).count();
                Some((Token::Int(chars[i..i + len].iter().collect()), len))
            }
            c if c.is_ascii_alphabetic() => {
                let len = chars[i..]
                    .iter()
                    .take_while(|c| c.is_ascii_alphanumeric())
                    .count();
                let word: String = chars[i..i + len].iter().collect();
                let token = match word.as_str() {
                    "VALID" if chars.get(i + len) == Some(&'?') => {
                        out.push(Spanned {
                            token: Token::ValidQ,
                            pos,
                        });
                        i += len + 1;
                        col += len + 1;
                        continue;
                    }
                    "VARS" => Token::Vars,
                    "LAW" => Token::Law,
                    "OBS" => Token::Obs,
                    "Top" => Token::Top,
                    "Bot" => Token::Bot,
                    "AND" => Token::And,
                    "OR" => Token::Or,
                    "knows" => Token::Knows,
                    "whether" => Token::Whether,
                    "that" => Token::That,
                    _ => Token::Ident(word),
                };
                Some((token, len))
            }
            _ => None,
        };
        match lexed {
            Some((token, len)) => {
                out.push(Spanned { token, pos });
                i += len;
                col += len;
            }
            None => {
                return Err(ParseError {
                    pos,
                    expected: "a token".into(),
                    found: format!("{c:?}"),
                })
            }
        }
    }
    out.push(Spanned {
        token: Token::Eof,
        pos: SourcePos { line, column: col },
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Spanned>,
    at: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            tokens: tokenize(text)?,
            at: 0,
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.at].token
    }

    fn pos(&self) -> SourcePos {
        self.tokens[self.at].pos
    }

    fn bump(&mut self) -> Spanned {
        let t = self.tokens[self.at].clone();
        if t.token != Token::Eof {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError {
            pos: self.pos(),
            expected: expected.to_string(),
            found: self.peek().to_string(),
        }
    }

    fn eat(&mut self, token: &Token) -> bool {
        if self.peek() == token {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: Token) -> Result<(), ParseError> {
        if self.eat(&token) {
            Ok(())
        } else {
            Err(self.error(&format!("'{token}'")))
        }
    }

    fn expect_eof(&self) -> Result<(), ParseError> {
        match self.peek() {
            Token::Eof => Ok(()),
            _ => Err(self.error("end of input")),
        }
    }

    fn proposition(&mut self) -> Result<Proposition, ParseError> {
        match self.peek().clone() {
            Token::Int(digits) => {
                let prop = digits.parse::<u32>().ok().and_then(Proposition::new);
                match prop {
                    Some(p) => {
                        self.bump();
                        Ok(p)
                    }
                    None => Err(self.error("a proposition id between 1 and 4294967295")),
                }
            }
            _ => Err(self.error("a proposition id")),
        }
    }

    fn agent(&mut self) -> Result<AgentName, ParseError> {
        match self.peek().clone() {
            Token::Ident(name) => {
                let name = AgentName::new(name).map_err(|_| self.error("an agent name"))?;
                self.bump();
                Ok(name)
            }
            _ => Err(self.error("an agent name")),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.implication()?;
        while self.eat(&Token::DoubleArrow) {
            let rhs = self.implication()?;
            lhs = Formula::equiv(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.eat(&Token::Arrow) {
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut items = vec![self.conjunction()?];
        while self.eat(&Token::Pipe) {
            items.push(self.conjunction()?);
        }
        Ok(Formula::disj(items))
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut items = vec![self.unary()?];
        while self.eat(&Token::Amp) {
            items.push(self.unary()?);
        }
        Ok(Formula::conj(items))
    }

    fn arguments(&mut self) -> Result<Vec<Formula>, ParseError> {
        self.expect(Token::LParen)?;
        let mut items = vec![self.formula()?];
        while self.eat(&Token::Comma) {
            items.push(self.formula()?);
        }
        self.expect(Token::RParen)?;
        Ok(items)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Token::Tilde => {
                self.bump();
                Ok(Formula::neg(self.unary()?))
            }
            Token::LBracket => {
                self.bump();
                self.expect(Token::Bang)?;
                let announced = self.formula()?;
                self.expect(Token::RBracket)?;
                Ok(Formula::announce(announced, self.unary()?))
            }
            Token::Ident(_) => {
                let agent = self.agent()?;
                self.expect(Token::Knows)?;
                if self.eat(&Token::Whether) {
                    Ok(Formula::knows_whether(agent, self.unary()?))
                } else if self.eat(&Token::That) {
                    Ok(Formula::knows_that(agent, self.unary()?))
                } else {
                    Err(self.error("'whether' or 'that'"))
                }
            }
            Token::And => {
                self.bump();
                Ok(Formula::conj(self.arguments()?))
            }
            Token::Or => {
                self.bump();
                Ok(Formula::disj(self.arguments()?))
            }
            Token::Top => {
                self.bump();
                Ok(Formula::Top)
            }
            Token::Bot => {
                self.bump();
                Ok(Formula::Bot)
            }
            Token::Int(_) => Ok(Formula::Prop(self.proposition()?)),
            Token::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Token::RParen)?;
                Ok(f)
            }
            _ => Err(self.error("a formula")),
        }
    }

    fn section(&mut self, token: Token, section: &'static str) -> Result<(), SceneParseError> {
        if self.eat(&token) {
            Ok(())
        } else {
            Err(SceneParseError::MissingSection {
                section,
                pos: self.pos(),
                found: self.peek().to_string(),
            })
        }
    }

    fn scene(&mut self) -> Result<Scene, SceneParseError> {
        self.section(Token::Vars, "VARS")?;
        let mut vocabulary = BTreeSet::new();
        loop {
            let pos = self.pos();
            let prop = self.proposition()?;
            if !vocabulary.insert(prop) {
                return Err(SceneParseError::DuplicateProposition { prop, pos });
            }
            if !self.eat(&Token::Comma) {
                break;
            }
        }

        self.section(Token::Law, "LAW")?;
        let law = self.formula()?;

        self.section(Token::Obs, "OBS")?;
        let mut observations = BTreeMap::new();
        while matches!(self.peek(), Token::Ident(_)) {
            let pos = self.pos();
            let agent = self.agent()?;
            self.expect(Token::Colon)?;
            let mut seen = BTreeSet::new();
            if matches!(self.peek(), Token::Int(_)) {
                seen.insert(self.proposition()?);
                while self.eat(&Token::Comma) {
                    seen.insert(self.proposition()?);
                }
            }
            if observations.contains_key(&agent) {
                return Err(SceneParseError::DuplicateAgent { agent, pos });
            }
            observations.insert(agent, seen);
        }

        self.section(Token::ValidQ, "VALID?")?;
        let query = self.formula()?;
        self.expect_eof()?;

        let scene = Scene {
            vocabulary,
            law,
            observations,
            query,
        };
        scene.validate()?;
        Ok(scene)
    }
}

/// Parses and validates a scene.
pub fn parse_scene(text: &str) -> Result<Scene, SceneParseError> {
    Parser::new(text)?.scene()
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    p.expect_eof()?;
    Ok(f)
}

/// Canonical text: binary and n-ary connectives are parenthesized, atoms and
/// prefix operators are not.
pub fn print_formula(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(&mut out, f);
    out
}

fn write_formula(out: &mut String, f: &Formula) {
    let join = |out: &mut String, items: &[&Formula], sep: &str| {
        out.push('(');
        for (i, g) in items.iter().enumerate() {
            if i > 0 {
                out.push_str(sep);
            }
            write_formula(out, g);
        }
        out.push(')');
    };
    match f {
        Formula::Top => out.push_str("Top"),
        Formula::Bot => out.push_str("Bot"),
        Formula::Prop(p) => write!(out, "{p}").unwrap(),
        Formula::Neg(g) => {
            out.push('~');
            write_formula(out, g);
        }
        Formula::Conj(gs) => join(out, &gs.iter().collect::<Vec<_>>(), " & "),
        Formula::Disj(gs) => join(out, &gs.iter().collect::<Vec<_>>(), " | "),
        Formula::Impl(a, b) => join(out, &[a, b], " -> "),
        Formula::Equiv(a, b) => join(out, &[a, b], " <-> "),
        Formula::KnowsThat(a, g) => {
            write!(out, "{a} knows that ").unwrap();
            write_formula(out, g);
        }
        Formula::KnowsWhether(a, g) => {
            write!(out, "{a} knows whether ").unwrap();
            write_formula(out, g);
        }
        Formula::Announce(a, g) => {
            out.push_str("[! ");
            write_formula(out, a);
            out.push_str("] ");
            write_formula(out, g);
        }
    }
}

fn join_props<'a>(props: impl IntoIterator<Item = &'a Proposition>) -> String {
    props
        .into_iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Four-section scene text, one OBS declaration per line.
pub fn print_scene(s: &Scene) -> String {
    let mut out = String::new();
    writeln!(out, "VARS {}", join_props(&s.vocabulary)).unwrap();
    writeln!(out, "LAW {}", print_formula(&s.law)).unwrap();
    out.push_str("OBS");
    for (i, (agent, seen)) in s.observations.iter().enumerate() {
        let indent = if i == 0 { " " } else { "    " };
        writeln!(out, "{indent}{agent}:{}", join_props(seen)).unwrap();
    }
    if s.observations.is_empty() {
        out.push('\n');
    }
    writeln!(out, "VALID? {}", print_formula(&s.query)).unwrap();
    out
}
