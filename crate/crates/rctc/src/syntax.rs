//! Text syntax: lexer, recursive-descent parser and renderer.
//!
//! ```text
//! proc  := sum
//! sum   := par ("+" par)*
//! par   := post ("|" par)?
//! post  := seq ("\" "{" labels "}" | "[" renames "]")*
//! seq   := unit ("." unit)*
//! unit  := "nil" | CONST | acts | keyed | "(" proc ")"
//! acts  := act | "(" act ("||" act)+ ")"
//! keyed := act "[" NAT "]" | "(" act "[" NAT "]" ("||" act "[" NAT "]")+ ")"
//! act   := "tau" | NAME | "~" NAME
//! ```
//!
//! A `.`-chain folds to the right: an action list becomes a prefix, a keyed
//! list an executed prefix, and any other unit a sequential composition.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::Error;
use crate::term::{is_standard, Action, Definitions, Key, Label, Process, RelabelMap};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Nil,
    Tau,
    Name(String),
    Const(String),
    Nat(u64),
    Tilde,
    Dot,
    Plus,
    Bar,
    BarBar,
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Backslash,
    Comma,
    Arrow,
    Eof,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str, first_line: usize) -> Result<Vec<Spanned>, Error> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, first_line, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let err = |msg: String| Error::Syntax { line: l0, col: c0, msg };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let two = |s: &str| chars[i..].iter().take(2).collect::<String>() == s;
        let (tok, len) = if c.is_ascii_alphabetic() {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            let tok = match word.as_str() {
                "nil" => Tok::Nil,
                "tau" => Tok::Tau,
                _ if c.is_ascii_uppercase() => Tok::Const(word),
                _ => Tok::Name(word),
            };
            (tok, j - i)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let digits: String = chars[i..j].iter().collect();
            let n = digits.parse::<u64>().map_err(|_| err(format!("number `{digits}` too large")))?;
            (Tok::Nat(n), j - i)
        } else if two("||") {
            (Tok::BarBar, 2)
        } else if two("->") {
            (Tok::Arrow, 2)
        } else {
            let tok = match c {
                '~' => Tok::Tilde,
                '.' => Tok::Dot,
                '+' => Tok::Plus,
                '|' => Tok::Bar,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '\\' => Tok::Backslash,
                ',' => Tok::Comma,
                _ => return Err(err(format!("unexpected character `{c}`"))),
            };
            (tok, 1)
        };
        out.push(Spanned { tok, line: l0, col: c0 });
        i += len;
        col += len;
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

enum Unit {
    Acts(Vec<Action>),
    Keyed(Vec<Action>, Key),
    Proc(Process),
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, Error> {
        let s = &self.toks[self.pos];
        Err(Error::Syntax { line: s.line, col: s.col, msg: msg.into() })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), Error> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn sum(&mut self) -> Result<Process, Error> {
        let mut acc = self.par()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let rhs = self.par()?;
            acc = Process::sum(acc, rhs);
        }
        Ok(acc)
    }

    fn par(&mut self) -> Result<Process, Error> {
        let lhs = self.post()?;
        if *self.peek() == Tok::Bar {
            self.bump();
            let rhs = self.par()?;
            return Ok(Process::par(lhs, rhs));
        }
        Ok(lhs)
    }

    fn post(&mut self) -> Result<Process, Error> {
        let mut acc = self.seq()?;
        loop {
            match self.peek() {
                Tok::Backslash => {
                    self.bump();
                    let labels = self.label_set()?;
                    acc = Process::restrict(acc, labels);
                }
                Tok::LBrack => {
                    let f = self.renames()?;
                    acc = Process::relabel(acc, f);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn seq(&mut self) -> Result<Process, Error> {
        let mut units = vec![self.unit()?];
        while *self.peek() == Tok::Dot {
            self.bump();
            units.push(self.unit()?);
        }
        let mut acc = match units.pop().unwrap() {
            Unit::Acts(a) => Process::Prefix(a, Arc::new(Process::Nil)),
            Unit::Keyed(a, k) => Process::Past(a, k, Arc::new(Process::Nil)),
            Unit::Proc(p) => p,
        };
        while let Some(u) = units.pop() {
            acc = match u {
                Unit::Acts(a) => Process::Prefix(a, Arc::new(acc)),
                Unit::Keyed(a, k) => Process::Past(a, k, Arc::new(acc)),
                Unit::Proc(p) => Process::seq(p, acc),
            };
        }
        Ok(acc)
    }

    fn starts_act(&self, n: usize) -> bool {
        matches!(self.peek_at(n), Tok::Tau | Tok::Name(_) | Tok::Tilde)
    }

    fn unit(&mut self) -> Result<Unit, Error> {
        match self.peek().clone() {
            Tok::Nil => {
                self.bump();
                Ok(Unit::Proc(Process::Nil))
            }
            Tok::Const(n) => {
                self.bump();
                Ok(Unit::Proc(Process::Const(n)))
            }
            Tok::LParen if self.starts_act(1) => {
                let save = self.pos;
                self.bump();
                let first = self.keyed_act()?;
                if *self.peek() != Tok::BarBar {
                    self.pos = save;
                    return self.paren_proc();
                }
                let mut items = vec![first];
                while *self.peek() == Tok::BarBar {
                    self.bump();
                    items.push(self.keyed_act()?);
                }
                self.expect(Tok::RParen, "`)`")?;
                self.group(items)
            }
            Tok::LParen => self.paren_proc(),
            _ if self.starts_act(0) => {
                let item = self.keyed_act()?;
                self.group(vec![item])
            }
            t => self.error(format!("expected a process, found {}", describe(&t))),
        }
    }

    fn paren_proc(&mut self) -> Result<Unit, Error> {
        self.expect(Tok::LParen, "`(`")?;
        let p = self.sum()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(Unit::Proc(p))
    }

    fn group(&self, items: Vec<(Action, Option<Key>)>) -> Result<Unit, Error> {
        let keys: BTreeSet<Option<Key>> = items.iter().map(|(_, k)| *k).collect();
        let acts = items.into_iter().map(|(a, _)| a).collect();
        match keys.into_iter().collect::<Vec<_>>().as_slice() {
            [None] => Ok(Unit::Acts(acts)),
            [Some(k)] => Ok(Unit::Keyed(acts, *k)),
            _ => self.error("all actions of a group must share one key, or none"),
        }
    }

    fn act(&mut self) -> Result<Action, Error> {
        match self.bump() {
            Tok::Tau => Ok(Action::Tau),
            Tok::Name(n) => Ok(Action::Vis(Label::plain(&n))),
            Tok::Tilde => match self.bump() {
                Tok::Name(n) => Ok(Action::Vis(Label::co(&n))),
                t => {
                    self.pos -= 1;
                    self.error(format!("expected a name after `~`, found {}", describe(&t)))
                }
            },
            t => {
                self.pos -= 1;
                self.error(format!("expected an action, found {}", describe(&t)))
            }
        }
    }

    /// An action optionally followed by `[n]`.
    fn keyed_act(&mut self) -> Result<(Action, Option<Key>), Error> {
        let a = self.act()?;
        if *self.peek() == Tok::LBrack && matches!(self.peek_at(1), Tok::Nat(_)) {
            self.bump();
            let Tok::Nat(n) = self.bump() else { unreachable!() };
            if n == 0 || n > Key::MAX as u64 {
                self.pos -= 1;
                return self.error(format!("malformed key `{n}`: keys are naturals from 1"));
            }
            self.expect(Tok::RBrack, "`]`")?;
            return Ok((a, Some(n as Key)));
        }
        Ok((a, None))
    }

    fn label(&mut self) -> Result<Label, Error> {
        match self.act()? {
            Action::Vis(l) => Ok(l),
            Action::Tau => {
                self.pos -= 1;
                self.error("tau cannot be restricted or relabelled")
            }
        }
    }

    fn label_set(&mut self) -> Result<BTreeSet<Label>, Error> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = BTreeSet::new();
        if *self.peek() != Tok::RBrace {
            out.insert(self.label()?);
            while *self.peek() == Tok::Comma {
                self.bump();
                out.insert(self.label()?);
            }
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(out)
    }

    fn renames(&mut self) -> Result<RelabelMap, Error> {
        self.expect(Tok::LBrack, "`[`")?;
        let mut map = BTreeMap::new();
        if *self.peek() != Tok::RBrack {
            loop {
                let src = match self.bump() {
                    Tok::Name(n) => n,
                    t => {
                        self.pos -= 1;
                        return self.error(format!("expected a plain name, found {}", describe(&t)));
                    }
                };
                self.expect(Tok::Arrow, "`->`")?;
                let dst = self.label()?;
                if map.insert(src.clone(), dst).is_some() {
                    return self.error(format!("`{src}` relabelled twice"));
                }
                if *self.peek() != Tok::Comma {
                    break;
                }
                self.bump();
            }
        }
        self.expect(Tok::RBrack, "`]`")?;
        Ok(RelabelMap(map))
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Eof => "end of input".into(),
        Tok::Name(n) | Tok::Const(n) => format!("`{n}`"),
        Tok::Nat(n) => format!("`{n}`"),
        Tok::Nil => "`nil`".into(),
        Tok::Tau => "`tau`".into(),
        other => format!("{other:?}"),
    }
}

fn parse_at(src: &str, line: usize) -> Result<Process, Error> {
    let mut p = Parser { toks: lex(src, line)?, pos: 0 };
    let proc = p.sum()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {}", describe(p.peek())));
    }
    Ok(proc)
}

pub fn parse(src: &str) -> Result<Process, Error> {
    parse_at(src, 1)
}

/// Parse `Name := term` lines; `#` starts a comment.
pub fn parse_defs(src: &str) -> Result<Definitions, Error> {
    let mut defs = Definitions::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((name, body)) = line.split_once(":=") else {
            return Err(Error::Syntax { line: i + 1, col: 1, msg: "expected `Name := term`".into() });
        };
        let name = name.trim();
        let valid =
            name.chars().next().is_some_and(|c| c.is_ascii_uppercase()) && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid {
            return Err(Error::Syntax { line: i + 1, col: 1, msg: format!("bad constant name `{name}`") });
        }
        let body = parse_at(body, i + 1)?;
        if !is_standard(&body) {
            return Err(Error::NonStandardDefinition(name.to_string()));
        }
        if defs.map.insert(name.to_string(), body).is_some() {
            return Err(Error::DuplicateDefinition(name.to_string()));
        }
    }
    Ok(defs)
}

pub fn render_defs(defs: &Definitions) -> String {
    defs.map.iter().map(|(n, p)| format!("{n} := {}\n", render(p))).collect()
}

fn prec(p: &Process) -> u8 {
    match p {
        Process::Sum(..) => 0,
        Process::Par(..) => 1,
        Process::Restrict(..) | Process::Relabel(..) => 2,
        Process::Prefix(..) | Process::Past(..) | Process::Seq(..) => 3,
        Process::Nil | Process::Const(_) => 4,
    }
}

pub fn render_actions(acts: &[Action], key: Option<Key>) -> String {
    let one = |a: &Action| match key {
        Some(k) => format!("{a}[{k}]"),
        None => a.to_string(),
    };
    if acts.len() == 1 {
        one(&acts[0])
    } else {
        format!("({})", acts.iter().map(one).collect::<Vec<_>>().join(" || "))
    }
}

pub fn render_labels(labels: &BTreeSet<Label>) -> String {
    labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ")
}

pub fn render_relabel(f: &RelabelMap) -> String {
    f.0.iter().map(|(k, v)| format!("{k}->{v}")).collect::<Vec<_>>().join(", ")
}

/// Canonical text with minimal parentheses.
pub fn render(p: &Process) -> String {
    let mut out = String::new();
    render_into(p, 0, &mut out);
    out
}

fn render_into(p: &Process, min: u8, out: &mut String) {
    if prec(p) < min {
        out.push('(');
        render_into(p, 0, out);
        out.push(')');
        return;
    }
    match p {
        Process::Nil => out.push_str("nil"),
        Process::Const(n) => out.push_str(n),
        Process::Prefix(acts, b) => {
            out.push_str(&render_actions(acts, None));
            out.push('.');
            render_into(b, 3, out);
        }
        Process::Past(acts, k, b) => {
            out.push_str(&render_actions(acts, Some(*k)));
            out.push('.');
            render_into(b, 3, out);
        }
        Process::Seq(l, r) => {
            render_into(l, 4, out);
            out.push('.');
            render_into(r, 3, out);
        }
        Process::Sum(l, r) => {
            render_into(l, 0, out);
            out.push_str(" + ");
            render_into(r, 1, out);
        }
        Process::Par(l, r) => {
            render_into(l, 2, out);
            out.push_str(" | ");
            render_into(r, 1, out);
        }
        Process::Restrict(b, l) => {
            render_into(b, 2, out);
            out.push_str(" \\ {");
            out.push_str(&render_labels(l));
            out.push('}');
        }
        Process::Relabel(b, f) => {
            render_into(b, 2, out);
            out.push('[');
            out.push_str(&render_relabel(f));
            out.push(']');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Process::*;

    fn a(n: &str) -> Action {
        Action::Vis(Label::plain(n))
    }

    #[test]
    fn parses_basic_forms() {
        assert_eq!(parse("a.nil").unwrap(), Process::prefix(a("a"), Nil));
        assert_eq!(
            parse("a.nil | ~a.nil").unwrap(),
            Process::par(Process::prefix(a("a"), Nil), Process::prefix(Action::Vis(Label::co("a")), Nil))
        );
        assert_eq!(parse("(a || b).nil").unwrap(), Prefix(vec![a("a"), a("b")], Arc::new(Nil)));
        assert_eq!(parse("a[3].nil").unwrap(), Process::past(a("a"), 3, Nil));
        assert_eq!(parse("(a[2] || tau[2]).nil").unwrap(), Past(vec![a("a"), Action::Tau], 2, Arc::new(Nil)));
    }

    #[test]
    fn precedence() {
        let p = parse("a.nil + b.nil | c.nil").unwrap();
        assert!(matches!(p, Sum(_, ref r) if matches!(**r, Par(..))));
        let p = parse("a.nil | b.nil | c.nil").unwrap();
        assert!(matches!(p, Par(_, ref r) if matches!(**r, Par(..))));
        let p = parse("a.nil + b.nil + c.nil").unwrap();
        assert!(matches!(p, Sum(ref l, _) if matches!(**l, Sum(..))));
        let p = parse("a.nil \\ {b}").unwrap();
        assert_eq!(p, Process::restrict(Process::prefix(a("a"), Nil), [Label::plain("b")].into()));
        let p = parse("a.nil | b.nil[b->c]").unwrap();
        assert!(matches!(p, Par(_, ref r) if matches!(**r, Relabel(..))));
    }

    #[test]
    fn sequential_forms() {
        let p = parse("(a.nil).b[3]").unwrap();
        assert_eq!(p, Process::seq(Process::prefix(a("a"), Nil), Process::past(a("b"), 3, Nil)));
        assert_eq!(parse("a.b").unwrap(), Process::prefix(a("a"), Process::prefix(a("b"), Nil)));
        assert_eq!(parse("A.a").unwrap(), Process::seq(Const("A".into()), Process::prefix(a("a"), Nil)));
    }

    #[test]
    fn renders() {
        assert_eq!(render(&Nil), "nil");
        assert_eq!(render(&Process::past(a("a"), 3, Nil)), "a[3].nil");
        assert_eq!(render(&Process::restrict(Process::prefix(a("a"), Nil), [Label::plain("b")].into())), "a.nil \\ {b}");
        assert_eq!(render(&parse("(a.nil + b.nil) | c.nil").unwrap()), "(a.nil + b.nil) | c.nil");
        assert_eq!(render(&parse("a.(b.nil | c.nil)").unwrap()), "a.(b.nil | c.nil)");
        assert_eq!(render(&parse("x.nil[a->~b, c->d]").unwrap()), "x.nil[a->~b, c->d]");
    }

    #[test]
    fn round_trips_awkward_terms() {
        for src in [
            "(a.nil).b[3].nil",
            "((a.nil).nil).nil",
            "nil.nil.nil",
            "a.nil + (b.nil + c.nil)",
            "(a.nil | b.nil) | c.nil",
            "(a.nil \\ {a}) \\ {b}",
            "(a.nil + b.nil)[a->b] \\ {c}",
            "(tau[1] || ~a[1]).(b.nil + c.nil)",
            "A + (B | C).A",
            "a.nil[]",
            "a.nil \\ {}",
        ] {
            let p = parse(src).unwrap();
            assert_eq!(parse(&render(&p)).unwrap(), p, "{src} -> {}", render(&p));
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(parse("a.nil | "), Err(Error::Syntax { .. })));
        assert!(matches!(parse("(a.nil"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("a.nil)"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("a[0].nil"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("a$"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("(a[1] || b[2]).nil"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("a.nil \\ {tau}"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("a.nil[a->b, a->c]"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn definitions() {
        let d = parse_defs("A := a.nil").unwrap();
        assert_eq!(d.map["A"], Process::prefix(a("a"), Nil));
        let d = parse_defs("A := a.A").unwrap();
        assert_eq!(d.map["A"], Process::prefix(a("a"), Const("A".into())));
        assert!(parse_defs("").unwrap().map.is_empty());
        let d = parse_defs("# comment\n\nA := a.B  # trailing\nB := b.A\n").unwrap();
        assert_eq!(d.map.len(), 2);
        assert_eq!(parse_defs("A := a.nil\nA := b.nil"), Err(Error::DuplicateDefinition("A".into())));
        assert!(matches!(parse_defs("A := a.\n"), Err(Error::Syntax { line: 1, .. })));
        assert!(matches!(parse_defs("\nA := (a\n"), Err(Error::Syntax { line: 2, .. })));
        assert!(matches!(parse_defs("A := a[1].nil"), Err(Error::NonStandardDefinition(_))));
        assert_eq!(parse_defs(&render_defs(&d)).unwrap(), d);
    }
}
