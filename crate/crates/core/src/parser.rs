//! Text to [`Program`] and back.
//!
//! The concrete syntax is the usual rule notation: `head :- b1, ..., bn.`
//! with `not` for negative literals, `#sum{T1,...,Tk : atom} <cmp> term` for
//! aggregates, `%` comments, and `p(0..N).` interval facts that expand to
//! `N+1` facts. Generated magic predicates print and reparse as `m#p#bf`-style
//! names; `#` is not otherwise a legal identifier character.

use std::fmt;

use crate::ast::{
    Aggregate, Atom, BodyElem, Comparator, Literal, Program, Rule, SymbolTable, Term, VarId,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub token: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "parse error at {}:{}: {} (near '{}')",
            self.line, self.column, self.message, self.token
        )
    }
}

impl std::error::Error for ParseError {}

/// A parsed query atom together with the names of its variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub atom: Atom,
    pub var_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Arrow, // :-
    Dot,
    DotDot,
    Question,
    Not,
    SumAgg,
    Cmp(Comparator),
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Ident(s) => s.clone(),
            Token::Int(n) => n.to_string(),
            Token::LParen => "(".into(),
            Token::RParen => ")".into(),
            Token::LBrace => "{".into(),
            Token::RBrace => "}".into(),
            Token::Comma => ",".into(),
            Token::Colon => ":".into(),
            Token::Arrow => ":-".into(),
            Token::Dot => ".".into(),
            Token::DotDot => "..".into(),
            Token::Question => "?".into(),
            Token::Not => "not".into(),
            Token::SumAgg => "#sum".into(),
            Token::Cmp(c) => c.to_string(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

struct Spanned {
    token: Token,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>, token: impl Into<String>) -> ParseError {
        ParseError { line: self.line, column: self.col, message: message.into(), token: token.into() }
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'%') => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn next_token(&mut self) -> Result<Option<Spanned>, ParseError> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        let spanned = |token| Some(Spanned { token, line, col });
        let c = match self.peek() {
            None => return Ok(None),
            Some(c) => c,
        };
        let token = match c {
            b'(' => {
                self.bump();
                Token::LParen
            }
            b')' => {
                self.bump();
                Token::RParen
            }
            b'{' => {
                self.bump();
                Token::LBrace
            }
            b'}' => {
                self.bump();
                Token::RBrace
            }
            b',' => {
                self.bump();
                Token::Comma
            }
            b'?' => {
                self.bump();
                Token::Question
            }
            b'.' => {
                self.bump();
                if self.peek() == Some(b'.') {
                    self.bump();
                    Token::DotDot
                } else {
                    Token::Dot
                }
            }
            b':' => {
                self.bump();
                if self.peek() == Some(b'-') {
                    self.bump();
                    Token::Arrow
                } else {
                    Token::Colon
                }
            }
            b'<' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Token::Cmp(Comparator::Le)
                } else {
                    Token::Cmp(Comparator::Lt)
                }
            }
            b'>' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Token::Cmp(Comparator::Ge)
                } else {
                    Token::Cmp(Comparator::Gt)
                }
            }
            b'=' => {
                self.bump();
                Token::Cmp(Comparator::Eq)
            }
            b'!' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Token::Cmp(Comparator::Ne)
                } else {
                    return Err(self.error("expected '=' after '!'", "!"));
                }
            }
            b'#' => {
                self.bump();
                let name = self.lex_ident_tail();
                if name == "sum" {
                    Token::SumAgg
                } else {
                    return Err(self.error("unknown aggregate (only #sum is supported)", format!("#{}", name)));
                }
            }
            b'-' => {
                self.bump();
                if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    let n = self.lex_int()?;
                    Token::Int(-n)
                } else {
                    return Err(self.error("expected digits after '-'", "-"));
                }
            }
            c if c.is_ascii_digit() => Token::Int(self.lex_int()?),
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let name = self.lex_ident_tail();
                if name == "not" {
                    Token::Not
                } else {
                    if name.contains('#') && magic_name_parts(&name).is_none() {
                        return Err(self.error(
                            "'#' is only legal inside generated magic names m#<pred>#<adornment>",
                            name,
                        ));
                    }
                    Token::Ident(name)
                }
            }
            other => {
                return Err(self.error("unexpected character", (other as char).to_string()));
            }
        };
        Ok(spanned(token))
    }

    fn lex_ident_tail(&mut self) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' || c == b'#' {
                self.bump();
            } else {
                break;
            }
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn lex_int(&mut self) -> Result<i64, ParseError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<i64>().map_err(|_| self.error("integer literal out of range", text))
    }
}

/// Splits a magic predicate name `m#<base>#<adornment>` into base name and
/// adornment string. Returns `None` for names without that shape.
pub fn magic_name_parts(name: &str) -> Option<(&str, &str)> {
    let rest = name.strip_prefix("m#")?;
    let sep = rest.rfind('#')?;
    let (base, adornment) = (&rest[..sep], &rest[sep + 1..]);
    if base.is_empty() || base.contains('#') {
        return None;
    }
    if !adornment.bytes().all(|c| c == b'b' || c == b'f') {
        return None;
    }
    Some((base, adornment))
}

/// Term as parsed inside an atom; intervals are legal only in fact heads and
/// are expanded away before rules are built.
enum RawTerm {
    Plain(Term),
    Interval(i64, i64),
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    lookahead: Option<Spanned>,
    symbols: &'a mut SymbolTable,
    // variable scope of the rule currently being parsed
    var_names: Vec<String>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, symbols: &'a mut SymbolTable) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(src);
        let lookahead = lexer.next_token()?;
        Ok(Parser { lexer, lookahead, symbols, var_names: Vec::new() })
    }

    fn peek(&self) -> Option<&Token> {
        self.lookahead.as_ref().map(|s| &s.token)
    }

    fn advance(&mut self) -> Result<Option<Spanned>, ParseError> {
        let next = self.lexer.next_token()?;
        Ok(std::mem::replace(&mut self.lookahead, next))
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        match &self.lookahead {
            Some(s) => ParseError {
                line: s.line,
                column: s.col,
                message: message.into(),
                token: s.token.describe(),
            },
            None => ParseError {
                line: self.lexer.line,
                column: self.lexer.col,
                message: message.into(),
                token: "<end of input>".into(),
            },
        }
    }

    fn expect(&mut self, wanted: &Token) -> Result<(), ParseError> {
        if self.peek() == Some(wanted) {
            self.advance()?;
            Ok(())
        } else {
            Err(self.error_here(format!("expected '{}'", wanted.describe())))
        }
    }

    fn var_id(&mut self, name: &str) -> VarId {
        if let Some(i) = self.var_names.iter().position(|n| n == name) {
            VarId(i as u32)
        } else {
            self.var_names.push(name.to_string());
            VarId((self.var_names.len() - 1) as u32)
        }
    }

    fn parse_raw_term(&mut self) -> Result<RawTerm, ParseError> {
        match self.peek() {
            Some(Token::Int(_)) => {
                let Some(Spanned { token: Token::Int(n), .. }) = self.advance()? else {
                    unreachable!()
                };
                if self.peek() == Some(&Token::DotDot) {
                    self.advance()?;
                    match self.advance()? {
                        Some(Spanned { token: Token::Int(hi), .. }) => Ok(RawTerm::Interval(n, hi)),
                        _ => Err(self.error_here("expected integer upper bound after '..'")),
                    }
                } else {
                    Ok(RawTerm::Plain(Term::Constant(self.symbols.intern_int(n))))
                }
            }
            Some(Token::Ident(name)) => {
                let first_upper = name.chars().next().is_some_and(|c| c.is_ascii_uppercase());
                let name = name.clone();
                self.advance()?;
                if first_upper {
                    Ok(RawTerm::Plain(Term::Variable(self.var_id(&name))))
                } else {
                    Ok(RawTerm::Plain(Term::Constant(self.symbols.intern_symbol(&name))))
                }
            }
            _ => Err(self.error_here("expected a term")),
        }
    }

    fn parse_term(&mut self) -> Result<Term, ParseError> {
        match self.parse_raw_term()? {
            RawTerm::Plain(t) => Ok(t),
            RawTerm::Interval(..) => {
                Err(self.error_here("intervals are only allowed in fact heads"))
            }
        }
    }

    /// Parses `name` or `name(t1,...,tn)`; intervals allowed iff requested.
    fn parse_atom_raw(&mut self, intervals_ok: bool) -> Result<(String, Vec<RawTerm>), ParseError> {
        let name = match self.peek() {
            Some(Token::Ident(n)) => n.clone(),
            _ => return Err(self.error_here("expected a predicate name")),
        };
        self.advance()?;
        let mut terms = Vec::new();
        if self.peek() == Some(&Token::LParen) {
            self.advance()?;
            if self.peek() == Some(&Token::RParen) {
                self.advance()?;
                return Ok((name, terms));
            }
            loop {
                let t = self.parse_raw_term()?;
                if matches!(t, RawTerm::Interval(..)) && !intervals_ok {
                    return Err(self.error_here("intervals are only allowed in fact heads"));
                }
                terms.push(t);
                match self.peek() {
                    Some(Token::Comma) => {
                        self.advance()?;
                    }
                    Some(Token::RParen) => {
                        self.advance()?;
                        break;
                    }
                    _ => return Err(self.error_here("expected ',' or ')'")),
                }
            }
        }
        Ok((name, terms))
    }

    fn intern_atom(&mut self, name: &str, terms: Vec<Term>) -> Atom {
        let predicate = self.symbols.intern_predicate(name, terms.len() as u32);
        Atom::new(predicate, terms)
    }

    fn parse_atom(&mut self) -> Result<Atom, ParseError> {
        let (name, raw) = self.parse_atom_raw(false)?;
        let terms = raw
            .into_iter()
            .map(|t| match t {
                RawTerm::Plain(t) => t,
                RawTerm::Interval(..) => unreachable!("rejected by parse_atom_raw"),
            })
            .collect();
        Ok(self.intern_atom(&name, terms))
    }

    fn parse_body_elem(&mut self) -> Result<BodyElem, ParseError> {
        match self.peek() {
            Some(Token::Not) => {
                self.advance()?;
                let atom = self.parse_atom()?;
                Ok(BodyElem::Literal(Literal::negative(atom)))
            }
            Some(Token::SumAgg) => {
                self.advance()?;
                self.expect(&Token::LBrace)?;
                let mut head_terms = vec![self.parse_term()?];
                while self.peek() == Some(&Token::Comma) {
                    self.advance()?;
                    head_terms.push(self.parse_term()?);
                }
                self.expect(&Token::Colon)?;
                let inner = self.parse_atom()?;
                self.expect(&Token::RBrace)?;
                let comparator = match self.peek() {
                    Some(Token::Cmp(c)) => *c,
                    _ => return Err(self.error_here("expected a comparator after '}'")),
                };
                self.advance()?;
                let guard = self.parse_term()?;
                Ok(BodyElem::Aggregate(Aggregate { head_terms, inner, comparator, guard }))
            }
            _ => {
                let atom = self.parse_atom()?;
                Ok(BodyElem::Literal(Literal::positive(atom)))
            }
        }
    }

    /// Parses one statement and appends the resulting rule(s) to `rules`.
    fn parse_statement(&mut self, rules: &mut Vec<Rule>) -> Result<(), ParseError> {
        self.var_names.clear();
        let (name, raw_head) = self.parse_atom_raw(true)?;
        let has_interval = raw_head.iter().any(|t| matches!(t, RawTerm::Interval(..)));

        if has_interval {
            // Interval facts expand immediately; no body may follow.
            if self.peek() == Some(&Token::Arrow) {
                return Err(self.error_here("intervals are only allowed in fact heads"));
            }
            self.expect(&Token::Dot)?;
            for (lo, hi) in raw_head.iter().filter_map(|t| match t {
                RawTerm::Interval(lo, hi) => Some((*lo, *hi)),
                RawTerm::Plain(_) => None,
            }) {
                if lo > hi {
                    return Err(self.error_here(format!("empty interval {}..{}", lo, hi)));
                }
            }
            let mut expansions: Vec<Vec<Term>> = vec![Vec::new()];
            for t in &raw_head {
                match t {
                    RawTerm::Plain(t) => {
                        for e in &mut expansions {
                            e.push(*t);
                        }
                    }
                    RawTerm::Interval(lo, hi) => {
                        let mut next = Vec::with_capacity(expansions.len() * (hi - lo + 1) as usize);
                        for e in expansions {
                            for v in *lo..=*hi {
                                let mut e2 = e.clone();
                                e2.push(Term::Constant(self.symbols.intern_int(v)));
                                next.push(e2);
                            }
                        }
                        expansions = next;
                    }
                }
            }
            for terms in expansions {
                let atom = self.intern_atom(&name, terms);
                rules.push(Rule::fact(atom));
            }
            return Ok(());
        }

        let terms = raw_head
            .into_iter()
            .map(|t| match t {
                RawTerm::Plain(t) => t,
                RawTerm::Interval(..) => unreachable!(),
            })
            .collect();
        let head = self.intern_atom(&name, terms);

        let mut body = Vec::new();
        if self.peek() == Some(&Token::Arrow) {
            self.advance()?;
            loop {
                body.push(self.parse_body_elem()?);
                match self.peek() {
                    Some(Token::Comma) => {
                        self.advance()?;
                    }
                    _ => break,
                }
            }
        }
        self.expect(&Token::Dot)?;
        rules.push(Rule { head, body, var_names: std::mem::take(&mut self.var_names) });
        Ok(())
    }
}

/// Parses a full program. Safety is not enforced here: unsafe rules parse
/// fine and carry their verdict via [`Program::safety_report`].
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut symbols = SymbolTable::new();
    let rules = parse_rules_into(text, &mut symbols)?;
    Ok(Program { rules, symbols })
}

/// Parses rules into an existing symbol table (used when several files make
/// up one program).
pub fn parse_rules_into(text: &str, symbols: &mut SymbolTable) -> Result<Vec<Rule>, ParseError> {
    let mut parser = Parser::new(text, symbols)?;
    let mut rules = Vec::new();
    while parser.peek().is_some() {
        parser.parse_statement(&mut rules)?;
    }
    Ok(rules)
}

/// Parses a query: a single atom, optionally terminated by `?`. The query is
/// interned into the program's symbol table so that its constants and
/// predicate line up with the program's ids.
pub fn parse_query(text: &str, symbols: &mut SymbolTable) -> Result<Query, ParseError> {
    let mut parser = Parser::new(text, symbols)?;
    let atom = parser.parse_atom()?;
    if parser.peek() == Some(&Token::Question) {
        parser.advance()?;
    }
    if let Some(tok) = parser.peek() {
        let tok = tok.describe();
        return Err(parser.error_here(format!("unexpected trailing input '{}'", tok)));
    }
    Ok(Query { atom, var_names: parser.var_names })
}

pub fn render_term(term: &Term, var_names: &[String], symbols: &SymbolTable) -> String {
    match term {
        Term::Constant(c) => symbols.constant(*c).to_string(),
        Term::Variable(v) => var_names
            .get(v.0 as usize)
            .cloned()
            .unwrap_or_else(|| format!("V{}", v.0)),
    }
}

pub fn render_atom(atom: &Atom, var_names: &[String], symbols: &SymbolTable) -> String {
    let name = symbols.predicate_name(atom.predicate);
    if atom.terms.is_empty() {
        return name.to_string();
    }
    let args: Vec<String> =
        atom.terms.iter().map(|t| render_term(t, var_names, symbols)).collect();
    format!("{}({})", name, args.join(","))
}

fn render_body_elem(elem: &BodyElem, var_names: &[String], symbols: &SymbolTable) -> String {
    match elem {
        BodyElem::Literal(l) => {
            let atom = render_atom(&l.atom, var_names, symbols);
            if l.negated {
                format!("not {}", atom)
            } else {
                atom
            }
        }
        BodyElem::Aggregate(a) => {
            let heads: Vec<String> =
                a.head_terms.iter().map(|t| render_term(t, var_names, symbols)).collect();
            format!(
                "#sum{{{} : {}}} {} {}",
                heads.join(","),
                render_atom(&a.inner, var_names, symbols),
                a.comparator,
                render_term(&a.guard, var_names, symbols)
            )
        }
    }
}

pub fn render_rule(rule: &Rule, symbols: &SymbolTable) -> String {
    let head = render_atom(&rule.head, &rule.var_names, symbols);
    if rule.is_fact() {
        return format!("{}.", head);
    }
    let body: Vec<String> =
        rule.body.iter().map(|e| render_body_elem(e, &rule.var_names, symbols)).collect();
    format!("{} :- {}.", head, body.join(", "))
}

/// Deterministic pretty-print of a whole program, one rule per line. The
/// output reparses to an equal program.
pub fn render(program: &Program) -> String {
    let mut out = String::new();
    for rule in &program.rules {
        out.push_str(&render_rule(rule, &program.symbols));
        out.push('\n');
    }
    out
}
