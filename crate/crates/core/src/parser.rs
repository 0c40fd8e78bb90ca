//! Recursive-descent parser for the ASCII machine notation.
//!
//! Expression precedence, tightest first: function application, the
//! restriction/subtraction operators (`<|`, `|>`, `<<|`, `|>>`), `<+`, `/\`,
//! then `\/` and `-` (equal, left-associative), then `|->`. Relational atoms
//! (`:`, `<:`, `=`, `/=`) bind looser than every expression operator and `&`
//! is loosest. The normative grammar is `docs/grammar.ebnf`.

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::ast::*;

/// Source text plus a line index covering every byte offset.
#[derive(Debug, Clone)]
pub struct SourceFile {
    pub path: Option<PathBuf>,
    pub text: String,
    line_starts: Vec<usize>,
}

impl SourceFile {
    pub fn new(path: Option<PathBuf>, text: impl Into<String>) -> Self {
        let text = text.into();
        let mut line_starts = vec![0];
        line_starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        SourceFile { path, text, line_starts }
    }

    pub fn from_str(text: &str) -> Self {
        SourceFile::new(None, text)
    }

    /// 1-based line and column of a byte offset (clamped to the text end).
    pub fn position(&self, offset: usize) -> (usize, usize) {
        let offset = offset.min(self.text.len());
        let line = match self.line_starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let col = self.text[self.line_starts[line]..offset].chars().count() + 1;
        (line + 1, col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: expected {}, found {}",
            self.line, self.column, self.expected, self.found
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

// Longest first so that prefix matching picks the longest operator.
const SYMBOLS: &[&str] = &[
    "+->>", "-->>", ">->>", "<<|", "|>>", "|->", "<->", "+->", "-->", ">+>", ">->", "<--", ":=",
    "<:", "==", "/=", "\\/", "/\\", "<+", "<|", "|>", "||", "(", ")", "{", "}", ",", ";", ":",
    "=", "&", "-",
];

const KEYWORDS: &[&str] = &[
    "MACHINE",
    "REFINEMENT",
    "REFINES",
    "SETS",
    "VARIABLES",
    "DEFINITIONS",
    "INCLUDES",
    "EXTENDS",
    "PROMOTES",
    "INVARIANT",
    "INITIALISATION",
    "OPERATIONS",
    "END",
    "PRE",
    "THEN",
    "BEGIN",
    "skip",
    "dom",
    "ran",
    "not",
    "btrue",
    "bfalse",
];

const MAX_DEPTH: usize = 256;

struct Lexed {
    toks: Vec<(Tok, usize)>,
}

fn lex(src: &SourceFile) -> Result<Lexed, ParseError> {
    let text = src.text.as_str();
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if text[i..].starts_with("/*") {
            match text[i + 2..].find("*/") {
                Some(end) => {
                    i = i + 2 + end + 2;
                    continue;
                }
                None => return Err(err_at(src, i, "`*/` closing the comment", "end of input")),
            }
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            toks.push((Tok::Ident(text[start..i].to_string()), start));
            continue;
        }
        match SYMBOLS.iter().find(|s| text[i..].starts_with(**s)) {
            Some(s) => {
                toks.push((Tok::Sym(s), i));
                i += s.len();
            }
            None => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(err_at(src, i, "a token", &format!("`{ch}`")));
            }
        }
    }
    toks.push((Tok::Eof, text.len()));
    Ok(Lexed { toks })
}

fn err_at(src: &SourceFile, offset: usize, expected: &str, found: &str) -> ParseError {
    let (line, column) = src.position(offset);
    ParseError { line, column, expected: expected.to_string(), found: found.to_string() }
}

struct Parser<'a> {
    src: &'a SourceFile,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    depth: usize,
}

type PResult<T> = Result<T, ParseError>;

const CLAUSES: &[&str] = &[
    "REFINES",
    "SETS",
    "VARIABLES",
    "DEFINITIONS",
    "INCLUDES",
    "EXTENDS",
    "PROMOTES",
    "INVARIANT",
    "INITIALISATION",
    "OPERATIONS",
];

impl<'a> Parser<'a> {
    fn new(src: &'a SourceFile) -> PResult<Self> {
        let Lexed { toks } = lex(src)?;
        Ok(Parser { src, toks, pos: 0, depth: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        let (tok, off) = &self.toks[self.pos];
        err_at(self.src, *off, expected, &tok.to_string())
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(&format!("`{s}`")))
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            Err(self.error(&format!("`{k}`")))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("an identifier")),
        }
    }

    fn is_plain_ident(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()))
    }

    fn ident_list(&mut self) -> PResult<Vec<String>> {
        let mut v = vec![self.ident()?];
        while self.eat_sym(",") {
            v.push(self.ident()?);
        }
        Ok(v)
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("a shallower nesting"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn expect_eof(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error("end of input"))
        }
    }

    // ---- machines ----

    fn machine(&mut self) -> PResult<Machine> {
        let kind = if self.eat_kw("MACHINE") {
            MachineKind::Abstract
        } else if self.eat_kw("REFINEMENT") {
            MachineKind::Refinement
        } else {
            return Err(self.error("`MACHINE` or `REFINEMENT`"));
        };
        let name = self.ident()?;
        let mut m = Machine::new(kind, name);
        if self.eat_sym("(") {
            m.parameters = self.ident_list()?;
            self.expect_sym(")")?;
        }
        let mut next_clause = 0;
        loop {
            let kw = match self.peek() {
                Tok::Ident(k) if CLAUSES.contains(&k.as_str()) => k.clone(),
                _ => break,
            };
            let idx = CLAUSES.iter().position(|c| *c == kw).unwrap_or(0);
            if idx < next_clause {
                return Err(self.error(&format!("a clause after {}", CLAUSES[next_clause - 1])));
            }
            next_clause = idx + 1;
            self.bump();
            match kw.as_str() {
                "REFINES" => {
                    if kind == MachineKind::Abstract {
                        self.pos -= 1;
                        return Err(self.error("a clause allowed in MACHINE"));
                    }
                    m.refines = Some(self.ident()?);
                }
                "SETS" => {
                    m.sets.push(self.set_decl()?);
                    while self.eat_sym(";") {
                        m.sets.push(self.set_decl()?);
                    }
                }
                "VARIABLES" => m.variables = self.ident_list()?,
                "DEFINITIONS" => {
                    loop {
                        let start = self.pos;
                        let new = self.ident()?;
                        self.expect_sym("==")?;
                        let old = self.ident()?;
                        if m.definitions.insert(new, old).is_err() {
                            self.pos = start;
                            return Err(self.error("an injective renaming"));
                        }
                        if !self.eat_sym(";") {
                            break;
                        }
                    }
                }
                "INCLUDES" => m.includes = self.instances()?,
                "EXTENDS" => m.extends = self.instances()?,
                "PROMOTES" => m.promotes = self.ident_list()?,
                "INVARIANT" => m.invariant = self.pred()?,
                "INITIALISATION" => m.initialisation = self.subst()?,
                "OPERATIONS" => {
                    m.operations.push(self.operation()?);
                    while self.eat_sym(";") {
                        m.operations.push(self.operation()?);
                    }
                }
                _ => unreachable!("clause keyword list is closed"),
            }
        }
        if kind == MachineKind::Refinement && m.refines.is_none() {
            return Err(self.error("`REFINES`"));
        }
        if !self.is_kw("END") {
            return Err(self.error("a clause keyword or `END`"));
        }
        self.bump();
        self.expect_eof()?;
        Ok(m)
    }

    fn set_decl(&mut self) -> PResult<SetDecl> {
        let name = self.ident()?;
        if self.eat_sym("=") {
            self.expect_sym("{")?;
            let start = self.pos;
            let els = self.ident_list()?;
            self.expect_sym("}")?;
            let mut seen = std::collections::BTreeSet::new();
            if !els.iter().all(|e| seen.insert(e)) {
                self.pos = start;
                return Err(self.error("pairwise distinct enumeration elements"));
            }
            Ok(SetDecl { name, elements: Some(els) })
        } else {
            Ok(SetDecl { name, elements: None })
        }
    }

    fn instances(&mut self) -> PResult<Vec<Instance>> {
        let mut v = vec![self.instance()?];
        while self.eat_sym(",") {
            v.push(self.instance()?);
        }
        Ok(v)
    }

    fn instance(&mut self) -> PResult<Instance> {
        let machine = self.ident()?;
        let mut actuals = Vec::new();
        if self.eat_sym("(") {
            actuals.push(self.expr()?);
            while self.eat_sym(",") {
                actuals.push(self.expr()?);
            }
            self.expect_sym(")")?;
        }
        Ok(Instance { machine, actuals })
    }

    fn operation(&mut self) -> PResult<Operation> {
        let first = self.ident_list()?;
        let (outputs, name) = if self.eat_sym("<--") {
            (first, self.ident()?)
        } else if first.len() == 1 {
            (Vec::new(), first.into_iter().next().unwrap_or_default())
        } else {
            return Err(self.error("`<--`"));
        };
        let mut inputs = Vec::new();
        if self.eat_sym("(") {
            inputs = self.ident_list()?;
            self.expect_sym(")")?;
        }
        self.expect_sym("=")?;
        let body = self.subst()?;
        Ok(Operation { name, outputs, inputs, body })
    }

    // ---- substitutions ----

    fn subst(&mut self) -> PResult<Subst> {
        self.enter()?;
        let mut s = self.subst_branch()?;
        while self.eat_sym("||") {
            let r = self.subst_branch()?;
            s = Subst::Parallel(Box::new(s), Box::new(r));
        }
        self.leave();
        Ok(s)
    }

    fn subst_branch(&mut self) -> PResult<Subst> {
        if self.eat_kw("skip") {
            return Ok(Subst::Skip);
        }
        if self.eat_kw("PRE") {
            let p = self.pred()?;
            self.expect_kw("THEN")?;
            let body = self.subst()?;
            self.expect_kw("END")?;
            return Ok(Subst::Pre(p, Box::new(body)));
        }
        if self.eat_kw("BEGIN") {
            let body = self.subst()?;
            self.expect_kw("END")?;
            return Ok(body);
        }
        if !self.is_plain_ident() {
            return Err(self.error("a substitution"));
        }
        let start = self.pos;
        let names = self.ident_list()?;
        if self.eat_sym(":=") {
            let mut values = vec![self.expr()?];
            while self.eat_sym(",") {
                values.push(self.expr()?);
            }
            if values.len() != names.len() {
                self.pos = start;
                return Err(self.error("as many values as assignment targets"));
            }
            let mut seen = std::collections::BTreeSet::new();
            if !names.iter().all(|n| seen.insert(n)) {
                self.pos = start;
                return Err(self.error("pairwise distinct assignment targets"));
            }
            return Ok(Subst::Assign(names, values));
        }
        if self.eat_sym("<--") {
            let op = self.ident()?;
            let args = self.call_args()?;
            return Ok(Subst::Call { outputs: names, op, args });
        }
        if names.len() != 1 {
            return Err(self.error("`:=` or `<--`"));
        }
        let name = names.into_iter().next().unwrap_or_default();
        let args = self.call_args()?;
        if self.is_sym(":=") {
            if args.len() != 1 {
                return Err(self.error("a single index in a function assignment"));
            }
            self.bump();
            let value = self.expr()?;
            let index = args.into_iter().next().unwrap_or(Expr::Empty);
            return Ok(Subst::FunAssign(name, index, value));
        }
        Ok(Subst::Call { outputs: Vec::new(), op: name, args })
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if self.eat_sym("(") {
            args.push(self.expr()?);
            while self.eat_sym(",") {
                args.push(self.expr()?);
            }
            self.expect_sym(")")?;
        }
        Ok(args)
    }

    // ---- predicates ----

    fn pred(&mut self) -> PResult<Pred> {
        self.enter()?;
        let mut p = self.pred_atom()?;
        while self.eat_sym("&") {
            let r = self.pred_atom()?;
            p = Pred::And(Box::new(p), Box::new(r));
        }
        self.leave();
        Ok(p)
    }

    fn pred_atom(&mut self) -> PResult<Pred> {
        if self.eat_kw("btrue") {
            return Ok(Pred::True);
        }
        if self.eat_kw("bfalse") {
            return Ok(Pred::False);
        }
        if self.is_kw("not") && matches!(self.peek_at(1), Tok::Sym("(")) {
            self.bump();
            self.bump();
            let p = self.pred()?;
            self.expect_sym(")")?;
            return Ok(Pred::Not(Box::new(p)));
        }
        if self.is_sym("(") {
            let save = self.pos;
            match self.relational_atom() {
                Ok(p) => return Ok(p),
                Err(first_err) => {
                    self.pos = save;
                    self.bump();
                    return match self.pred() {
                        Ok(p) if self.is_sym(")") => {
                            self.bump();
                            Ok(p)
                        }
                        Ok(_) => Err(self.error("`)`")),
                        Err(_) => Err(first_err),
                    };
                }
            }
        }
        self.relational_atom()
    }

    fn relational_atom(&mut self) -> PResult<Pred> {
        let lhs = self.expr()?;
        if self.eat_sym(":") {
            let set = self.expr()?;
            if let Tok::Sym(s) = self.peek() {
                if let Some(k) = RelKind::ALL.iter().find(|k| k.arrow() == *s) {
                    let k = *k;
                    self.bump();
                    let dst = self.expr()?;
                    return Ok(Pred::Rel(lhs, set, dst, k));
                }
            }
            return Ok(Pred::In(lhs, set));
        }
        if self.eat_sym("<:") {
            return Ok(Pred::Subset(lhs, self.expr()?));
        }
        if self.eat_sym("=") {
            return Ok(Pred::Eq(lhs, self.expr()?));
        }
        if self.eat_sym("/=") {
            return Ok(Pred::Neq(lhs, self.expr()?));
        }
        Err(self.error("`:`, `<:`, `=` or `/=`"))
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        self.enter()?;
        let mut e = self.expr_union()?;
        while self.eat_sym("|->") {
            let r = self.expr_union()?;
            e = Expr::Maplet(Box::new(e), Box::new(r));
        }
        self.leave();
        Ok(e)
    }

    fn expr_union(&mut self) -> PResult<Expr> {
        let mut e = self.expr_inter()?;
        loop {
            if self.eat_sym("\\/") {
                e = Expr::Union(Box::new(e), Box::new(self.expr_inter()?));
            } else if self.eat_sym("-") {
                e = Expr::Diff(Box::new(e), Box::new(self.expr_inter()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn expr_inter(&mut self) -> PResult<Expr> {
        let mut e = self.expr_override()?;
        while self.eat_sym("/\\") {
            e = Expr::Inter(Box::new(e), Box::new(self.expr_override()?));
        }
        Ok(e)
    }

    fn expr_override(&mut self) -> PResult<Expr> {
        let mut e = self.expr_restrict()?;
        while self.eat_sym("<+") {
            e = Expr::Override(Box::new(e), Box::new(self.expr_restrict()?));
        }
        Ok(e)
    }

    fn expr_restrict(&mut self) -> PResult<Expr> {
        let mut e = self.expr_primary()?;
        loop {
            let ctor: fn(Box<Expr>, Box<Expr>) -> Expr = if self.eat_sym("<<|") {
                Expr::DomSub
            } else if self.eat_sym("|>>") {
                Expr::RanSub
            } else if self.eat_sym("<|") {
                Expr::DomRes
            } else if self.eat_sym("|>") {
                Expr::RanRes
            } else {
                return Ok(e);
            };
            let r = self.expr_primary()?;
            e = ctor(Box::new(e), Box::new(r));
        }
    }

    fn expr_primary(&mut self) -> PResult<Expr> {
        self.enter()?;
        let mut e = if self.is_kw("dom") || self.is_kw("ran") {
            let is_dom = self.is_kw("dom");
            self.bump();
            self.expect_sym("(")?;
            let inner = self.expr()?;
            self.expect_sym(")")?;
            if is_dom {
                Expr::Dom(Box::new(inner))
            } else {
                Expr::Ran(Box::new(inner))
            }
        } else if self.eat_sym("{") {
            if self.eat_sym("}") {
                Expr::Empty
            } else {
                let start = self.pos;
                let mut els = vec![self.expr()?];
                while self.eat_sym(",") {
                    els.push(self.expr()?);
                }
                self.expect_sym("}")?;
                let mut seen = std::collections::BTreeSet::new();
                if !els.iter().all(|e| seen.insert(e.clone())) {
                    self.pos = start;
                    return Err(self.error("pairwise distinct set elements"));
                }
                Expr::SetLit(els)
            }
        } else if self.eat_sym("(") {
            let inner = self.expr()?;
            self.expect_sym(")")?;
            inner
        } else if self.is_plain_ident() {
            Expr::Ident(self.ident()?)
        } else {
            return Err(self.error("an expression"));
        };
        while self.is_sym("(") && !matches!(e, Expr::SetLit(_) | Expr::Empty) {
            self.bump();
            let arg = self.expr()?;
            self.expect_sym(")")?;
            e = Expr::Apply(Box::new(e), Box::new(arg));
        }
        self.leave();
        Ok(e)
    }
}

pub fn parse_machine(src: &SourceFile) -> Result<Machine, ParseError> {
    Parser::new(src)?.machine()
}

pub fn parse_machine_str(text: &str) -> Result<Machine, ParseError> {
    parse_machine(&SourceFile::from_str(text))
}

fn parse_whole<T>(text: &str, f: impl FnOnce(&mut Parser) -> PResult<T>) -> Result<T, ParseError> {
    let src = SourceFile::from_str(text);
    let mut p = Parser::new(&src)?;
    let v = f(&mut p)?;
    p.expect_eof()?;
    Ok(v)
}

pub fn parse_pred(text: &str) -> Result<Pred, ParseError> {
    parse_whole(text, |p| p.pred())
}

pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    parse_whole(text, |p| p.expr())
}

pub fn parse_subst(text: &str) -> Result<Subst, ParseError> {
    parse_whole(text, |p| p.subst())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_machine() {
        let m = parse_machine_str("MACHINE M END").unwrap();
        assert_eq!(m, Machine::new(MachineKind::Abstract, "M"));
    }

    #[test]
    fn precedence_of_restriction_over_union() {
        let e = parse_expr("A \\/ {x} <<| f").unwrap();
        assert_eq!(
            e,
            Expr::union(Expr::id("A"), Expr::dom_sub(Expr::singleton(Expr::id("x")), Expr::id("f")))
        );
        let e = parse_expr("A - B \\/ C").unwrap();
        assert_eq!(e, Expr::union(Expr::diff(Expr::id("A"), Expr::id("B")), Expr::id("C")));
        let e = parse_expr("f <+ g /\\ h").unwrap();
        assert_eq!(e, Expr::inter(Expr::override_(Expr::id("f"), Expr::id("g")), Expr::id("h")));
    }

    #[test]
    fn relation_membership_and_function_assignment() {
        let p = parse_pred("Father : Component +->> Composite").unwrap();
        assert_eq!(
            p,
            Pred::Rel(
                Expr::id("Father"),
                Expr::id("Component"),
                Expr::id("Composite"),
                RelKind::PartialSurjection
            )
        );
        let s = parse_subst("State(el) := protected || Usable := Usable \\/ {el}").unwrap();
        assert!(matches!(s, Subst::Parallel(ref a, _) if matches!(**a, Subst::FunAssign(..))));
    }

    #[test]
    fn parenthesized_predicate_and_expression() {
        let p = parse_pred("(A \\/ B) = C & (x : A & y : B)").unwrap();
        assert_eq!(p.conjuncts().len(), 3);
        assert!(parse_pred("(x : A").is_err());
    }

    #[test]
    fn calls_with_and_without_outputs() {
        let s = parse_subst("c <-- GetChild(f) || Remove_Leaf(x) || Tick").unwrap();
        let b = s.parallel_branches();
        assert!(matches!(b[0], Subst::Call { outputs, .. } if outputs.len() == 1));
        assert!(matches!(b[2], Subst::Call { args, .. } if args.is_empty()));
    }

    #[test]
    fn comments_are_discarded_and_unterminated_ones_rejected() {
        let m = parse_machine_str("/* head */ MACHINE M /* x */ END").unwrap();
        assert_eq!(m.name, "M");
        let e = parse_machine_str("MACHINE M /* x END").unwrap_err();
        assert_eq!((e.line, e.column), (1, 11));
    }

    #[test]
    fn clause_order_is_enforced() {
        let e = parse_machine_str("MACHINE M INVARIANT btrue VARIABLES x END").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(parse_machine_str("MACHINE M REFINES N END").is_err());
        assert!(parse_machine_str("REFINEMENT R END").is_err());
    }

    #[test]
    fn error_positions_are_in_bounds() {
        let src = SourceFile::from_str("MACHINE M\nVARIABLES x\nINVARIANT x <: \nEND");
        let e = parse_machine(&src).unwrap_err();
        assert_eq!(e.line, 4);
        assert_eq!(e.column, 1);
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let text = format!("{}x{}", "(".repeat(10_000), ")".repeat(10_000));
        assert!(parse_expr(&text).is_err());
    }

    #[test]
    fn duplicate_set_elements_rejected() {
        assert!(parse_expr("{a, a}").is_err());
        assert!(parse_machine_str("MACHINE M SETS S = {a, a} END").is_err());
    }
}
