//! Bimodal formulas over the primitives `dia` and `ex`, with the derived
//! modalities expanded at construction time so that evaluation and subterm
//! logic work on a single canonical tree.
//!
//! Surface syntax (ASCII, Unicode aliases accepted on input):
//!
//! ```text
//! phi ::= 'true' | 'false' | ident | '~' phi | '<>' phi | '[]' phi
//!       | 'E' phi | 'A' phi | '<#>' phi | '[#]' phi | '<+>' phi
//!       | '(' phi ')' | phi '&' phi | phi '|' phi | phi '->' phi
//! ```
//!
//! Precedence: prefix operators bind tightest, then `&`, then `|`, then `->`
//! (right-associative).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Var(String),
    Top,
    Bot,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    Dia(Box<Formula>),
    Ex(Box<Formula>),
}

impl Formula {
    pub fn var(name: impl Into<String>) -> Formula {
        Formula::Var(name.into())
    }

    pub fn not(phi: Formula) -> Formula {
        Formula::Not(Box::new(phi))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn imp(a: Formula, b: Formula) -> Formula {
        Formula::Imp(Box::new(a), Box::new(b))
    }

    pub fn dia(phi: Formula) -> Formula {
        Formula::Dia(Box::new(phi))
    }

    pub fn ex(phi: Formula) -> Formula {
        Formula::Ex(Box::new(phi))
    }

    /// `[] phi  =  ~<>~phi`
    pub fn boxed(phi: Formula) -> Formula {
        Formula::not(Formula::dia(Formula::not(phi)))
    }

    /// `A phi  =  ~E~phi`
    pub fn all(phi: Formula) -> Formula {
        Formula::not(Formula::ex(Formula::not(phi)))
    }

    /// `<#> phi  =  <>E phi`
    pub fn bdia(phi: Formula) -> Formula {
        Formula::dia(Formula::ex(phi))
    }

    /// `[#] phi  =  ~<#>~phi`
    pub fn bbox(phi: Formula) -> Formula {
        Formula::not(Formula::bdia(Formula::not(phi)))
    }

    /// `<+> phi  =  <>phi | E phi`
    pub fn sdia(phi: Formula) -> Formula {
        Formula::or(Formula::dia(phi.clone()), Formula::ex(phi))
    }

    /// i-fold application of `<+>`; zero applications give `phi` back.
    pub fn sdia_iter(i: usize, phi: Formula) -> Formula {
        (0..i).fold(phi, |acc, _| Formula::sdia(acc))
    }

    pub fn parse(text: &str) -> Result<Formula, ParseError> {
        Parser::new(text).parse()
    }

    /// Free variables in sorted order.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Var(name) => {
                out.insert(name.clone());
            }
            Formula::Top | Formula::Bot => {}
            Formula::Not(a) | Formula::Dia(a) | Formula::Ex(a) => a.collect_vars(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// All subformulas, deduplicated, in post-order of first occurrence.
    /// Children therefore always precede their parents.
    pub fn subterms(&self) -> Vec<Formula> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        self.collect_subterms(&mut seen, &mut out);
        out
    }

    fn collect_subterms(&self, seen: &mut std::collections::HashSet<Formula>, out: &mut Vec<Formula>) {
        match self {
            Formula::Var(_) | Formula::Top | Formula::Bot => {}
            Formula::Not(a) | Formula::Dia(a) | Formula::Ex(a) => a.collect_subterms(seen, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.collect_subterms(seen, out);
                b.collect_subterms(seen, out);
            }
        }
        if seen.insert(self.clone()) {
            out.push(self.clone());
        }
    }

    /// Replaces every `dia` node with `dia . ex`. Not idempotent; apply once.
    pub fn zero_transform(&self) -> Formula {
        match self {
            Formula::Var(_) | Formula::Top | Formula::Bot => self.clone(),
            Formula::Not(a) => Formula::not(a.zero_transform()),
            Formula::And(a, b) => Formula::and(a.zero_transform(), b.zero_transform()),
            Formula::Or(a, b) => Formula::or(a.zero_transform(), b.zero_transform()),
            Formula::Imp(a, b) => Formula::imp(a.zero_transform(), b.zero_transform()),
            Formula::Dia(a) => Formula::dia(Formula::ex(a.zero_transform())),
            Formula::Ex(a) => Formula::ex(a.zero_transform()),
        }
    }

    /// Simultaneous substitution of formulas for variables. Unmapped
    /// variables are left alone.
    pub fn substitute(&self, map: &BTreeMap<String, Formula>) -> Formula {
        match self {
            Formula::Var(name) => map.get(name).cloned().unwrap_or_else(|| self.clone()),
            Formula::Top | Formula::Bot => self.clone(),
            Formula::Not(a) => Formula::not(a.substitute(map)),
            Formula::And(a, b) => Formula::and(a.substitute(map), b.substitute(map)),
            Formula::Or(a, b) => Formula::or(a.substitute(map), b.substitute(map)),
            Formula::Imp(a, b) => Formula::imp(a.substitute(map), b.substitute(map)),
            Formula::Dia(a) => Formula::dia(a.substitute(map)),
            Formula::Ex(a) => Formula::ex(a.substitute(map)),
        }
    }

    pub fn is_modality_free(&self) -> bool {
        match self {
            Formula::Var(_) | Formula::Top | Formula::Bot => true,
            Formula::Not(a) => a.is_modality_free(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.is_modality_free() && b.is_modality_free()
            }
            Formula::Dia(_) | Formula::Ex(_) => false,
        }
    }

    /// True when the tree contains no `ex` node (so only `dia` matters for
    /// evaluation).
    pub fn is_ex_free(&self) -> bool {
        match self {
            Formula::Var(_) | Formula::Top | Formula::Bot => true,
            Formula::Not(a) | Formula::Dia(a) => a.is_ex_free(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                a.is_ex_free() && b.is_ex_free()
            }
            Formula::Ex(_) => false,
        }
    }
}

// Printing. The printer re-sugars the handful of patterns the derived
// constructors produce; parsing the output re-expands them to the same tree.

const PREC_IMP: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_UNARY: u8 = 4;

impl Formula {
    fn sugar(&self) -> Option<(&'static str, &Formula)> {
        match self {
            // [#] phi = ~<>E~phi  (checked before [] since the bodies differ)
            Formula::Not(a) => match &**a {
                Formula::Dia(b) => match &**b {
                    Formula::Ex(c) => match &**c {
                        Formula::Not(d) => Some(("[#]", d)),
                        _ => None,
                    },
                    Formula::Not(c) => Some(("[]", c)),
                    _ => None,
                },
                Formula::Ex(b) => match &**b {
                    Formula::Not(c) => Some(("A ", c)),
                    _ => None,
                },
                _ => None,
            },
            Formula::Dia(a) => match &**a {
                Formula::Ex(b) => Some(("<#>", b)),
                _ => None,
            },
            Formula::Or(a, b) => match (&**a, &**b) {
                (Formula::Dia(x), Formula::Ex(y)) if x == y => Some(("<+>", x)),
                _ => None,
            },
            _ => None,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if let Some((tok, body)) = self.sugar() {
            return Self::fmt_wrapped(f, min, PREC_UNARY, |f| {
                write!(f, "{tok}")?;
                body.fmt_prec(f, PREC_UNARY)
            });
        }
        match self {
            Formula::Var(name) => write!(f, "{name}"),
            Formula::Top => write!(f, "true"),
            Formula::Bot => write!(f, "false"),
            Formula::Not(a) => Self::fmt_wrapped(f, min, PREC_UNARY, |f| {
                write!(f, "~")?;
                a.fmt_prec(f, PREC_UNARY)
            }),
            Formula::Dia(a) => Self::fmt_wrapped(f, min, PREC_UNARY, |f| {
                write!(f, "<>")?;
                a.fmt_prec(f, PREC_UNARY)
            }),
            Formula::Ex(a) => Self::fmt_wrapped(f, min, PREC_UNARY, |f| {
                write!(f, "E ")?;
                a.fmt_prec(f, PREC_UNARY)
            }),
            Formula::And(a, b) => Self::fmt_wrapped(f, min, PREC_AND, |f| {
                a.fmt_prec(f, PREC_AND)?;
                write!(f, " & ")?;
                b.fmt_prec(f, PREC_AND)
            }),
            Formula::Or(a, b) => Self::fmt_wrapped(f, min, PREC_OR, |f| {
                a.fmt_prec(f, PREC_OR)?;
                write!(f, " | ")?;
                b.fmt_prec(f, PREC_OR)
            }),
            Formula::Imp(a, b) => Self::fmt_wrapped(f, min, PREC_IMP, |f| {
                a.fmt_prec(f, PREC_IMP + 1)?;
                write!(f, " -> ")?;
                b.fmt_prec(f, PREC_IMP)
            }),
        }
    }

    fn fmt_wrapped(
        f: &mut fmt::Formatter<'_>,
        min: u8,
        level: u8,
        body: impl FnOnce(&mut fmt::Formatter<'_>) -> fmt::Result,
    ) -> fmt::Result {
        if level < min {
            write!(f, "(")?;
            body(f)?;
            write!(f, ")")
        } else {
            body(f)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Formula::parse(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    True,
    False,
    Not,
    Dia,
    Box,
    Ex,
    All,
    BDia,
    BBox,
    SDia,
    LParen,
    RParen,
    And,
    Or,
    Imp,
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn new(text: &str) -> Parser {
        Parser { tokens: Vec::new(), pos: 0, end: text.len() }
            .tokenize(text)
            .unwrap_or_else(|e| Parser { tokens: vec![], pos: usize::MAX, end: e.position })
    }

    fn tokenize(mut self, text: &str) -> Result<Parser, ParseError> {
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let rest = &text[i..];
            let c = rest.chars().next().unwrap();
            if c.is_whitespace() {
                i += c.len_utf8();
                continue;
            }
            let (tok, len) = if rest.starts_with("<#>") || rest.starts_with('\u{29eb}') {
                // ⧫
                (Token::BDia, if rest.starts_with("<#>") { 3 } else { '\u{29eb}'.len_utf8() })
            } else if rest.starts_with("[#]") || rest.starts_with('\u{25a0}') {
                // ■
                (Token::BBox, if rest.starts_with("[#]") { 3 } else { '\u{25a0}'.len_utf8() })
            } else if rest.starts_with("<+>") || rest.starts_with('\u{25c6}') {
                // ◆
                (Token::SDia, if rest.starts_with("<+>") { 3 } else { '\u{25c6}'.len_utf8() })
            } else if rest.starts_with("<>") || rest.starts_with('\u{25ca}') {
                // ◊
                (Token::Dia, if rest.starts_with("<>") { 2 } else { '\u{25ca}'.len_utf8() })
            } else if rest.starts_with("[]") || rest.starts_with('\u{25a1}') {
                // □
                (Token::Box, if rest.starts_with("[]") { 2 } else { '\u{25a1}'.len_utf8() })
            } else if rest.starts_with("->") || rest.starts_with('\u{2192}') {
                // →
                (Token::Imp, if rest.starts_with("->") { 2 } else { '\u{2192}'.len_utf8() })
            } else if c == '~' || c == '\u{ac}' {
                // ¬
                (Token::Not, c.len_utf8())
            } else if c == '&' || c == '\u{2227}' {
                // ∧
                (Token::And, c.len_utf8())
            } else if c == '|' || c == '\u{2228}' {
                // ∨
                (Token::Or, c.len_utf8())
            } else if c == 'E' || c == '\u{2203}' {
                // ∃
                (Token::Ex, c.len_utf8())
            } else if c == 'A' || c == '\u{2200}' {
                // ∀
                (Token::All, c.len_utf8())
            } else if c == '\u{22a4}' {
                // ⊤
                (Token::True, c.len_utf8())
            } else if c == '\u{22a5}' {
                // ⊥
                (Token::False, c.len_utf8())
            } else if c == '(' {
                (Token::LParen, 1)
            } else if c == ')' {
                (Token::RParen, 1)
            } else if c.is_ascii_lowercase() {
                let len = rest
                    .char_indices()
                    .find(|(_, ch)| !(ch.is_ascii_alphanumeric() || *ch == '_'))
                    .map(|(j, _)| j)
                    .unwrap_or(rest.len());
                let word = &rest[..len];
                let tok = match word {
                    "true" => Token::True,
                    "false" => Token::False,
                    _ => Token::Ident(word.to_string()),
                };
                (tok, len)
            } else {
                return Err(ParseError {
                    position: i,
                    message: format!("unexpected character {c:?}"),
                });
            };
            self.tokens.push((i, tok));
            i += len;
        }
        Ok(self)
    }

    fn parse(mut self) -> Result<Formula, ParseError> {
        if self.pos == usize::MAX {
            return Err(ParseError {
                position: self.end,
                message: "unexpected character".to_string(),
            });
        }
        let phi = self.parse_imp()?;
        if let Some((at, tok)) = self.tokens.get(self.pos) {
            return Err(ParseError {
                position: *at,
                message: format!("unexpected token {tok:?} after formula"),
            });
        }
        Ok(phi)
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(_, t)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map(|(at, _)| *at).unwrap_or(self.end)
    }

    fn parse_imp(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.parse_or()?;
        if matches!(self.peek(), Some(Token::Imp)) {
            self.bump();
            let rhs = self.parse_imp()?;
            Ok(Formula::imp(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn parse_or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_and()?;
        while matches!(self.peek(), Some(Token::Or)) {
            self.bump();
            let rhs = self.parse_and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_unary()?;
        while matches!(self.peek(), Some(Token::And)) {
            self.bump();
            let rhs = self.parse_unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Formula, ParseError> {
        let at = self.here();
        match self.bump() {
            Some(Token::Not) => Ok(Formula::not(self.parse_unary()?)),
            Some(Token::Dia) => Ok(Formula::dia(self.parse_unary()?)),
            Some(Token::Box) => Ok(Formula::boxed(self.parse_unary()?)),
            Some(Token::Ex) => Ok(Formula::ex(self.parse_unary()?)),
            Some(Token::All) => Ok(Formula::all(self.parse_unary()?)),
            Some(Token::BDia) => Ok(Formula::bdia(self.parse_unary()?)),
            Some(Token::BBox) => Ok(Formula::bbox(self.parse_unary()?)),
            Some(Token::SDia) => Ok(Formula::sdia(self.parse_unary()?)),
            Some(Token::True) => Ok(Formula::Top),
            Some(Token::False) => Ok(Formula::Bot),
            Some(Token::Ident(name)) => Ok(Formula::Var(name)),
            Some(Token::LParen) => {
                let inner = self.parse_imp()?;
                match self.bump() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(ParseError {
                        position: self.here(),
                        message: "expected ')'".to_string(),
                    }),
                }
            }
            Some(tok) => Err(ParseError {
                position: at,
                message: format!("unexpected token {tok:?}"),
            }),
            None => Err(ParseError {
                position: at,
                message: "unexpected end of input".to_string(),
            }),
        }
    }
}

/// Named axiom schemas. The depth families are indexed from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxiomName {
    /// Left commutativity: `E<>p -> <>E p`.
    Ms4Ax,
    /// Barcan: `<>E p -> E<>p`.
    Bar,
    /// `[#]([]([]p -> [#]p) -> [#]p) -> [#]p`.
    MCasPlus,
    /// `[]([](p -> []p) -> p) -> p`.
    Grz,
    /// `[]([]p -> q) | []([]q -> p)`.
    Sc,
    /// `E p -> <>p`.
    Ed,
    /// Depth bound n.
    P(u32),
    /// Q-depth bound n (`P(n)` with every `<>` replaced by `<#>`).
    P0(u32),
    /// Reducible path bound m.
    Rp(u32),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AxiomError {
    #[error("axiom index must be at least 1")]
    ZeroIndex,
    #[error("unknown axiom name: {0}")]
    UnknownName(String),
}

impl fmt::Display for AxiomName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxiomName::Ms4Ax => write!(f, "ms4"),
            AxiomName::Bar => write!(f, "bar"),
            AxiomName::MCasPlus => write!(f, "mcas+"),
            AxiomName::Grz => write!(f, "grz"),
            AxiomName::Sc => write!(f, "sc"),
            AxiomName::Ed => write!(f, "ed"),
            AxiomName::P(n) => write!(f, "P{n}"),
            AxiomName::P0(n) => write!(f, "P0_{n}"),
            AxiomName::Rp(m) => write!(f, "rp{m}"),
        }
    }
}

impl FromStr for AxiomName {
    type Err = AxiomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        let parse_index = |digits: &str| -> Result<u32, AxiomError> {
            digits
                .parse::<u32>()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| match digits.parse::<u32>() {
                    Ok(0) => AxiomError::ZeroIndex,
                    _ => AxiomError::UnknownName(s.to_string()),
                })
        };
        match lower.as_str() {
            "ms4" => Ok(AxiomName::Ms4Ax),
            "bar" => Ok(AxiomName::Bar),
            "mcas+" | "mcas_plus" | "m+cas" => Ok(AxiomName::MCasPlus),
            "grz" => Ok(AxiomName::Grz),
            "sc" => Ok(AxiomName::Sc),
            "ed" => Ok(AxiomName::Ed),
            _ => {
                if let Some(rest) = lower.strip_prefix("p0_").or_else(|| lower.strip_prefix("p0")) {
                    if !rest.is_empty() {
                        return Ok(AxiomName::P0(parse_index(rest)?));
                    }
                }
                if let Some(rest) = lower.strip_prefix("rp") {
                    return Ok(AxiomName::Rp(parse_index(rest)?));
                }
                if let Some(rest) = lower.strip_prefix('p') {
                    return Ok(AxiomName::P(parse_index(rest)?));
                }
                Err(AxiomError::UnknownName(s.to_string()))
            }
        }
    }
}

impl AxiomName {
    /// Every axiom name the workbench knows, with depth/path families up to
    /// the given index.
    pub fn catalog(max_index: u32) -> Vec<AxiomName> {
        let mut out = vec![
            AxiomName::Ms4Ax,
            AxiomName::Bar,
            AxiomName::MCasPlus,
            AxiomName::Grz,
            AxiomName::Sc,
            AxiomName::Ed,
        ];
        for n in 1..=max_index {
            out.push(AxiomName::P(n));
        }
        for n in 1..=max_index {
            out.push(AxiomName::P0(n));
        }
        for m in 1..=max_index {
            out.push(AxiomName::Rp(m));
        }
        out
    }
}

/// Instantiates an axiom schema over its canonical fresh variables
/// (`p`, `q`, `q1..qn`, `p0..p_{m+1}`).
pub fn build_axiom(name: AxiomName) -> Result<Formula, AxiomError> {
    let p = || Formula::var("p");
    let q = || Formula::var("q");
    match name {
        AxiomName::Ms4Ax => Ok(Formula::imp(
            Formula::ex(Formula::dia(p())),
            Formula::dia(Formula::ex(p())),
        )),
        AxiomName::Bar => Ok(Formula::imp(
            Formula::dia(Formula::ex(p())),
            Formula::ex(Formula::dia(p())),
        )),
        AxiomName::MCasPlus => {
            let inner = Formula::boxed(Formula::imp(Formula::boxed(p()), Formula::bbox(p())));
            Ok(Formula::imp(
                Formula::bbox(Formula::imp(inner, Formula::bbox(p()))),
                Formula::bbox(p()),
            ))
        }
        AxiomName::Grz => Ok(Formula::imp(
            Formula::boxed(Formula::imp(
                Formula::boxed(Formula::imp(p(), Formula::boxed(p()))),
                p(),
            )),
            p(),
        )),
        AxiomName::Sc => Ok(Formula::or(
            Formula::boxed(Formula::imp(Formula::boxed(p()), q())),
            Formula::boxed(Formula::imp(Formula::boxed(q()), p())),
        )),
        AxiomName::Ed => Ok(Formula::imp(Formula::ex(p()), Formula::dia(p()))),
        AxiomName::P(n) => {
            if n == 0 {
                return Err(AxiomError::ZeroIndex);
            }
            Ok(depth_formula(n))
        }
        AxiomName::P0(n) => {
            if n == 0 {
                return Err(AxiomError::ZeroIndex);
            }
            Ok(depth_formula(n).zero_transform())
        }
        AxiomName::Rp(m) => {
            if m == 0 {
                return Err(AxiomError::ZeroIndex);
            }
            Ok(reducible_path_formula(m as usize))
        }
    }
}

/// `P1 = <>[]q1 -> []q1`, `Pn = <>([]qn & ~P_{n-1}) -> []qn`.
fn depth_formula(n: u32) -> Formula {
    let qv = |i: u32| Formula::var(format!("q{i}"));
    let mut phi = Formula::imp(
        Formula::dia(Formula::boxed(qv(1))),
        Formula::boxed(qv(1)),
    );
    for i in 2..=n {
        phi = Formula::imp(
            Formula::dia(Formula::and(Formula::boxed(qv(i)), Formula::not(phi))),
            Formula::boxed(qv(i)),
        );
    }
    phi
}

/// `p0 & <+>(p1 & <+>(... & <+>p_{m+1}))
///    -> V_{i<j<=m+1} <+>^i(p_i & p_j)  |  V_{i<j<=m} <+>^i(p_i & <+>p_{j+1})`
fn reducible_path_formula(m: usize) -> Formula {
    let pv = |i: usize| Formula::var(format!("p{i}"));

    // p0 & <+>(p1 & <+>(p2 & ... & <+>p_{m+1}))
    let mut chain = pv(m + 1);
    for i in (1..=m).rev() {
        chain = Formula::and(pv(i), Formula::sdia(chain));
    }
    let antecedent = Formula::and(pv(0), Formula::sdia(chain));

    let mut disjuncts = Vec::new();
    for j in 1..=m + 1 {
        for i in 0..j {
            disjuncts.push(Formula::sdia_iter(i, Formula::and(pv(i), pv(j))));
        }
    }
    for j in 1..=m {
        for i in 0..j {
            disjuncts.push(Formula::sdia_iter(
                i,
                Formula::and(pv(i), Formula::sdia(pv(j + 1))),
            ));
        }
    }
    let consequent = disjuncts
        .into_iter()
        .reduce(Formula::or)
        .expect("at least one disjunct for m >= 1");
    Formula::imp(antecedent, consequent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_atomic() {
        assert_eq!(Formula::parse("p").unwrap(), Formula::var("p"));
        assert_eq!(Formula::parse("true").unwrap(), Formula::Top);
    }

    #[test]
    fn parse_depth_one_axiom() {
        let parsed = Formula::parse("<>[]q1 -> []q1").unwrap();
        assert_eq!(parsed, build_axiom(AxiomName::P(1)).unwrap());
    }

    #[test]
    fn parse_cas_axiom() {
        let parsed = Formula::parse("[#]([](([]p -> [#]p)) -> [#]p) -> [#]p").unwrap();
        assert_eq!(parsed, build_axiom(AxiomName::MCasPlus).unwrap());
    }

    #[test]
    fn parse_unicode_aliases() {
        assert_eq!(
            Formula::parse("\u{2203}\u{25ca}p \u{2192} \u{25ca}\u{2203}p").unwrap(),
            build_axiom(AxiomName::Ms4Ax).unwrap()
        );
        assert_eq!(
            Formula::parse("\u{25a1}p").unwrap(),
            Formula::boxed(Formula::var("p"))
        );
    }

    #[test]
    fn parse_reports_position() {
        let err = Formula::parse("p -> $q").unwrap_err();
        assert_eq!(err.position, 5);
        assert!(Formula::parse("p &").is_err());
        assert!(Formula::parse("(p").is_err());
        assert!(Formula::parse("p q").is_err());
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            Formula::parse("a & b | c -> d -> e").unwrap(),
            Formula::imp(
                Formula::or(Formula::and(Formula::var("a"), Formula::var("b")), Formula::var("c")),
                Formula::imp(Formula::var("d"), Formula::var("e")),
            )
        );
        assert_eq!(
            Formula::parse("~<>p & q").unwrap(),
            Formula::and(Formula::not(Formula::dia(Formula::var("p"))), Formula::var("q"))
        );
    }

    #[test]
    fn build_rp1_matches_expected_tree() {
        let p = |i: usize| Formula::var(format!("p{i}"));
        let expected = Formula::imp(
            Formula::and(
                p(0),
                Formula::sdia(Formula::and(p(1), Formula::sdia(p(2)))),
            ),
            Formula::or(
                Formula::or(
                    Formula::or(
                        Formula::and(p(0), p(1)),
                        Formula::and(p(0), p(2)),
                    ),
                    Formula::sdia(Formula::and(p(1), p(2))),
                ),
                Formula::and(p(0), Formula::sdia(p(2))),
            ),
        );
        assert_eq!(build_axiom(AxiomName::Rp(1)).unwrap(), expected);
    }

    #[test]
    fn build_ed() {
        assert_eq!(
            build_axiom(AxiomName::Ed).unwrap(),
            Formula::imp(Formula::ex(Formula::var("p")), Formula::dia(Formula::var("p")))
        );
    }

    #[test]
    fn build_rejects_zero_index() {
        assert_eq!(build_axiom(AxiomName::P(0)), Err(AxiomError::ZeroIndex));
        assert_eq!(build_axiom(AxiomName::Rp(0)), Err(AxiomError::ZeroIndex));
        assert_eq!("p0".parse::<AxiomName>(), Err(AxiomError::ZeroIndex));
    }

    #[test]
    fn axiom_names_round_trip() {
        for name in AxiomName::catalog(3) {
            let text = name.to_string();
            assert_eq!(text.parse::<AxiomName>().unwrap(), name, "{text}");
        }
        assert_eq!("P01".parse::<AxiomName>().unwrap(), AxiomName::P0(1));
    }

    #[test]
    fn depth_axioms_use_n_variables() {
        for n in 1..=4 {
            let phi = build_axiom(AxiomName::P(n)).unwrap();
            let vars = phi.vars();
            assert_eq!(vars.len(), n as usize);
            for i in 1..=n {
                assert!(vars.contains(&format!("q{i}")));
            }
        }
    }

    #[test]
    fn zero_transform_examples() {
        let p = Formula::var("p");
        assert_eq!(Formula::dia(p.clone()).zero_transform(), Formula::bdia(p.clone()));
        assert_eq!(p.clone().zero_transform(), p);
        let boxed_q = Formula::boxed(Formula::var("q"));
        assert_eq!(
            boxed_q.zero_transform(),
            Formula::not(Formula::dia(Formula::ex(Formula::not(Formula::var("q")))))
        );
    }

    #[test]
    fn subterm_examples() {
        let p = Formula::var("p");
        assert_eq!(
            Formula::dia(p.clone()).subterms(),
            vec![p.clone(), Formula::dia(p.clone())]
        );
        assert_eq!(
            Formula::and(p.clone(), p.clone()).subterms(),
            vec![p.clone(), Formula::and(p.clone(), p.clone())]
        );
    }

    /// Naive oracle: gather every subtree with duplicates, then dedup.
    fn naive_subterms(phi: &Formula) -> std::collections::HashSet<Formula> {
        fn walk(phi: &Formula, out: &mut Vec<Formula>) {
            out.push(phi.clone());
            match phi {
                Formula::Var(_) | Formula::Top | Formula::Bot => {}
                Formula::Not(a) | Formula::Dia(a) | Formula::Ex(a) => walk(a, out),
                Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut all = Vec::new();
        walk(phi, &mut all);
        all.into_iter().collect()
    }

    #[test]
    fn subterms_of_ms4_axiom_match_naive_oracle() {
        let phi = build_axiom(AxiomName::Ms4Ax).unwrap();
        let fast = phi.subterms();
        let oracle = naive_subterms(&phi);
        assert_eq!(fast.len(), oracle.len());
        assert_eq!(fast.iter().cloned().collect::<std::collections::HashSet<_>>(), oracle);
        // Children precede parents.
        for (i, t) in fast.iter().enumerate() {
            for child in t.subterms() {
                if child != *t {
                    assert!(fast[..i].contains(&child));
                }
            }
        }
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            Just(Formula::Top),
            Just(Formula::Bot),
            "[a-c][0-9]?".prop_map(Formula::Var),
        ];
        leaf.prop_recursive(6, 64, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                inner.clone().prop_map(Formula::dia),
                inner.clone().prop_map(Formula::ex),
                inner.clone().prop_map(Formula::boxed),
                inner.clone().prop_map(Formula::bdia),
                inner.clone().prop_map(Formula::sdia),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| Formula::imp(a, b)),
            ]
        })
    }

    fn arb_modality_free() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            Just(Formula::Top),
            Just(Formula::Bot),
            "[a-c]".prop_map(Formula::Var),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| Formula::or(a, b)),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 1000, rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha, ..ProptestConfig::default() })]

        #[test]
        fn parse_print_round_trip(phi in arb_formula()) {
            let printed = phi.to_string();
            let reparsed = Formula::parse(&printed).unwrap();
            prop_assert_eq!(reparsed, phi);
        }
    }

    proptest! {
        #[test]
        fn zero_transform_commutes_with_modality_free_substitution(
            phi in arb_formula(),
            sub in arb_modality_free(),
        ) {
            let mut map = BTreeMap::new();
            map.insert("a".to_string(), sub);
            prop_assert_eq!(
                phi.substitute(&map).zero_transform(),
                phi.zero_transform().substitute(&map)
            );
        }
    }
}
