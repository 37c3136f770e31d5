//! Textual syntax for terms, atoms and clauses, with list sugar.
//!
//! `[a,b]` is `f(a,f(b,*))`, `[x|y]` is `f(x,y)` and `[]` is `*`.

use std::fmt;

use crate::logic::language::{Language, LIST_CONS, LIST_NIL};
use crate::logic::term::{Atom, Clause, Term, Var, CANONICAL_VARS, FALSE_NAME, TRUE_NAME};
use crate::sym::Sym;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Bar,
    Comma,
    Neck,
    Dot,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Neck => f.write_str("`:-`"),
            Tok::Dot => f.write_str("`.`"),
        }
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '*' || c == '\''
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_col: usize,
    line: usize,
    lang: Option<&'a Language>,
}

impl<'a> Parser<'a> {
    fn new(text: &str, line: usize, lang: Option<&'a Language>) -> Result<Self, ParseError> {
        let mut toks = Vec::new();
        let chars: Vec<char> = text.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let tok = match c {
                c if c.is_whitespace() => {
                    i += 1;
                    continue;
                }
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                '|' => Tok::Bar,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                ':' if chars.get(i + 1) == Some(&'-') => {
                    i += 2;
                    toks.push((Tok::Neck, col));
                    continue;
                }
                c if is_ident_char(c) => {
                    let start = i;
                    while i < chars.len() && is_ident_char(chars[i]) {
                        i += 1;
                    }
                    toks.push((Tok::Ident(chars[start..i].iter().collect()), col));
                    continue;
                }
                other => {
                    return Err(ParseError {
                        line,
                        column: col,
                        message: format!("unexpected character `{other}`"),
                    })
                }
            };
            toks.push((tok, col));
            i += 1;
        }
        Ok(Parser { toks, pos: 0, end_col: chars.len() + 1, line, lang })
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let column = self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end_col);
        Err(ParseError { line: self.line, column, message: message.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            match self.peek() {
                Some(t) => self.err(format!("expected {tok}, found {t}")),
                None => self.err(format!("expected {tok}, found end of input")),
            }
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(t) => self.err(format!("expected a name, found {t}")),
            None => self.err("expected a name, found end of input"),
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        self.eat(&Tok::Dot);
        match self.peek() {
            None => Ok(()),
            Some(t) => self.err(format!("unexpected trailing {t}")),
        }
    }

    fn is_var(&self, name: &str) -> bool {
        match self.lang {
            Some(l) => l.is_variable(Sym::new(name)),
            None => CANONICAL_VARS.contains(&name),
        }
    }

    fn args(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut args = vec![self.term()?];
        while self.eat(&Tok::Comma) {
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        if self.peek() == Some(&Tok::LBrack) {
            return self.list();
        }
        let start = self.pos;
        let name = self.ident()?;
        if self.eat(&Tok::LParen) {
            let args = self.args()?;
            if let Some(l) = self.lang {
                match l.function_arity(Sym::new(&name)) {
                    Some(a) if a == args.len() => {}
                    Some(a) => {
                        self.pos = start;
                        return self.err(format!(
                            "function `{name}` has arity {a}, applied to {} arguments",
                            args.len()
                        ));
                    }
                    None => {
                        self.pos = start;
                        return self.err(format!("undeclared function symbol `{name}`"));
                    }
                }
            }
            return Ok(Term::Fn(Sym::new(&name), args));
        }
        if self.is_var(&name) {
            return Ok(Term::Var(Var::new(name.as_str())));
        }
        if let Some(l) = self.lang {
            if !l.is_constant(Sym::new(&name)) {
                self.pos = start;
                return self.err(format!("undeclared constant `{name}`"));
            }
        }
        Ok(Term::constant(&name))
    }

    fn list(&mut self) -> Result<Term, ParseError> {
        if let Some(l) = self.lang {
            if !l.has_lists() {
                return self.err("list notation needs `func f/2` and `const *`");
            }
        }
        self.expect(Tok::LBrack)?;
        if self.eat(&Tok::RBrack) {
            return Ok(Term::constant(LIST_NIL));
        }
        let mut items = vec![self.term()?];
        while self.eat(&Tok::Comma) {
            items.push(self.term()?);
        }
        let tail = if self.eat(&Tok::Bar) { self.term()? } else { Term::constant(LIST_NIL) };
        self.expect(Tok::RBrack)?;
        Ok(items.into_iter().rev().fold(tail, |t, h| Term::func(LIST_CONS, vec![h, t])))
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let start = self.pos;
        let name = self.ident()?;
        let args = if self.eat(&Tok::LParen) { self.args()? } else { vec![] };
        if name == TRUE_NAME || name == FALSE_NAME {
            if !args.is_empty() {
                self.pos = start;
                return self.err(format!("`{name}` is reserved"));
            }
        } else if let Some(l) = self.lang {
            match l.predicate_arity(Sym::new(&name)) {
                Some(a) if a == args.len() => {}
                Some(a) => {
                    self.pos = start;
                    return self.err(format!(
                        "predicate `{name}` has arity {a}, given {} arguments",
                        args.len()
                    ));
                }
                None => {
                    self.pos = start;
                    return self.err(format!("undeclared predicate `{name}`"));
                }
            }
        }
        Ok(Atom { pred: Sym::new(&name), args })
    }

    fn clause(&mut self) -> Result<Clause, ParseError> {
        let head = self.atom()?;
        let mut body = Vec::new();
        if self.eat(&Tok::Neck) {
            body.push(self.atom()?);
            while self.eat(&Tok::Comma) {
                body.push(self.atom()?);
            }
        }
        Ok(Clause { head, body })
    }
}

pub fn parse_term(text: &str, lang: Option<&Language>) -> Result<Term, ParseError> {
    let mut p = Parser::new(text, 1, lang)?;
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_atom(text: &str, lang: Option<&Language>) -> Result<Atom, ParseError> {
    parse_atom_at(text, lang, 1)
}

pub fn parse_atom_at(text: &str, lang: Option<&Language>, line: usize) -> Result<Atom, ParseError> {
    let mut p = Parser::new(text, line, lang)?;
    let a = p.atom()?;
    p.finish()?;
    Ok(a)
}

/// Parses `head.` or `head :- b1, ..., bn.`; the final period is optional.
pub fn parse_clause(text: &str, lang: Option<&Language>) -> Result<Clause, ParseError> {
    parse_clause_at(text, lang, 1)
}

pub fn parse_clause_at(
    text: &str,
    lang: Option<&Language>,
    line: usize,
) -> Result<Clause, ParseError> {
    let mut p = Parser::new(text, line, lang)?;
    let c = p.clause()?;
    p.finish()?;
    Ok(c)
}

/// Renders syntax, optionally with list sugar.
#[derive(Clone, Copy, Debug)]
pub struct Printer {
    pub lists: bool,
}

impl Printer {
    pub fn plain() -> Printer {
        Printer { lists: false }
    }

    pub fn for_language(lang: &Language) -> Printer {
        Printer { lists: lang.has_lists() }
    }

    pub fn term(&self, t: &Term) -> String {
        let mut out = String::new();
        self.write_term(t, &mut out);
        out
    }

    fn write_term(&self, t: &Term, out: &mut String) {
        let cons = Sym::new(LIST_CONS);
        let nil = Sym::new(LIST_NIL);
        match t {
            Term::Const(c) if self.lists && *c == nil => out.push_str("[]"),
            Term::Fn(f, args) if self.lists && *f == cons && args.len() == 2 => {
                out.push('[');
                self.write_term(&args[0], out);
                let mut tail = &args[1];
                loop {
                    match tail {
                        Term::Fn(g, rest) if *g == cons && rest.len() == 2 => {
                            out.push(',');
                            self.write_term(&rest[0], out);
                            tail = &rest[1];
                        }
                        Term::Const(c) if *c == nil => break,
                        other => {
                            out.push('|');
                            self.write_term(other, out);
                            break;
                        }
                    }
                }
                out.push(']');
            }
            Term::Fn(f, args) => {
                out.push_str(f.as_str());
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    self.write_term(a, out);
                }
                out.push(')');
            }
            other => out.push_str(&other.to_string()),
        }
    }

    pub fn atom(&self, a: &Atom) -> String {
        if a.args.is_empty() {
            return a.pred.to_string();
        }
        let args: Vec<String> = a.args.iter().map(|t| self.term(t)).collect();
        format!("{}({})", a.pred, args.join(","))
    }

    pub fn clause(&self, c: &Clause) -> String {
        let mut out = self.atom(&c.head);
        for (i, b) in c.body.iter().enumerate() {
            out.push_str(if i == 0 { " :- " } else { ", " });
            out.push_str(&self.atom(b));
        }
        out
    }
}
