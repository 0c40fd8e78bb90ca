//! Terminating rewrite system over predicates and set expressions. Every
//! rule either shrinks the term or pushes `dom`/`ran` towards the leaves.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::*;

/// What the rules may assume about the carrier sets.
#[derive(Debug, Clone, Default)]
pub struct SimpContext {
    /// Carrier sets: every well-typed element of the right type is a member.
    pub carriers: BTreeSet<String>,
    /// Enumerated element -> its set.
    pub enum_of: BTreeMap<String, String>,
}

impl SimpContext {
    fn is_carrier(&self, e: &Expr) -> bool {
        matches!(e, Expr::Ident(n) if self.carriers.contains(n))
    }

    fn enum_const(&self, e: &Expr) -> Option<&str> {
        match e {
            Expr::Ident(n) => self.enum_of.get(n).map(String::as_str),
            _ => None,
        }
    }
}

const MAX_ROUNDS: usize = 32;

pub fn simplify_pred(p: &Pred, cx: &SimpContext) -> Pred {
    let mut cur = p.clone();
    for _ in 0..MAX_ROUNDS {
        let next = pred_step(&cur, cx);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

pub fn simplify_expr(e: &Expr) -> Expr {
    let mut cur = e.clone();
    for _ in 0..MAX_ROUNDS {
        let next = expr_step(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

fn b<T>(t: T) -> Box<T> {
    Box::new(t)
}

fn maplet_parts(els: &[Expr]) -> Option<(Vec<Expr>, Vec<Expr>)> {
    let mut d = Vec::new();
    let mut r = Vec::new();
    for e in els {
        match e {
            Expr::Maplet(a, c) => {
                if !d.contains(&**a) {
                    d.push((**a).clone());
                }
                if !r.contains(&**c) {
                    r.push((**c).clone());
                }
            }
            _ => return None,
        }
    }
    Some((d, r))
}

fn expr_step(e: &Expr) -> Expr {
    use Expr::*;
    // Children first.
    let e = match e {
        Ident(_) | Empty => return e.clone(),
        SetLit(es) => SetLit(es.iter().map(expr_step).collect()),
        Union(x, y) => Union(b(expr_step(x)), b(expr_step(y))),
        Inter(x, y) => Inter(b(expr_step(x)), b(expr_step(y))),
        Diff(x, y) => Diff(b(expr_step(x)), b(expr_step(y))),
        Dom(x) => Dom(b(expr_step(x))),
        Ran(x) => Ran(b(expr_step(x))),
        DomSub(x, y) => DomSub(b(expr_step(x)), b(expr_step(y))),
        RanSub(x, y) => RanSub(b(expr_step(x)), b(expr_step(y))),
        DomRes(x, y) => DomRes(b(expr_step(x)), b(expr_step(y))),
        RanRes(x, y) => RanRes(b(expr_step(x)), b(expr_step(y))),
        Override(x, y) => Override(b(expr_step(x)), b(expr_step(y))),
        Maplet(x, y) => Maplet(b(expr_step(x)), b(expr_step(y))),
        Apply(x, y) => Apply(b(expr_step(x)), b(expr_step(y))),
    };
    match e {
        Union(x, y) if *x == Empty => *y,
        Union(x, y) if *y == Empty || x == y => *x,
        Inter(x, y) if *x == Empty || *y == Empty => Empty,
        Inter(x, y) if x == y => *x,
        Diff(x, _) if *x == Empty => Empty,
        Diff(x, y) if x == y => Empty,
        Diff(x, y) if *y == Empty => *x,
        Dom(x) | Ran(x) if *x == Empty => Empty,
        Dom(x) => match *x {
            Union(p, q) => Union(b(Dom(p)), b(Dom(q))),
            Override(p, q) => Union(b(Dom(p)), b(Dom(q))),
            DomSub(s, r) => Diff(b(Dom(r)), s),
            DomRes(s, r) => Inter(b(Dom(r)), s),
            SetLit(els) => match maplet_parts(&els) {
                Some((d, _)) => SetLit(d),
                None => Dom(b(SetLit(els))),
            },
            other => Dom(b(other)),
        },
        Ran(x) => match *x {
            Union(p, q) => Union(b(Ran(p)), b(Ran(q))),
            RanSub(r, s) => Diff(b(Ran(r)), s),
            RanRes(r, s) => Inter(b(Ran(r)), s),
            SetLit(els) => match maplet_parts(&els) {
                Some((_, r)) => SetLit(r),
                None => Ran(b(SetLit(els))),
            },
            other => Ran(b(other)),
        },
        DomSub(s, r) if *s == Empty => *r,
        DomSub(_, r) | DomRes(_, r) if *r == Empty => Empty,
        DomRes(s, _) if *s == Empty => Empty,
        RanSub(r, s) if *s == Empty => *r,
        RanSub(r, _) | RanRes(r, _) if *r == Empty => Empty,
        RanRes(_, s) if *s == Empty => Empty,
        Override(f, g) if *g == Empty => *f,
        Override(f, g) if *f == Empty => *g,
        other => other,
    }
}

/// `x : s` decided syntactically, when possible.
fn member(x: &Expr, s: &Expr, cx: &SimpContext) -> Option<bool> {
    match s {
        Expr::Empty => Some(false),
        Expr::SetLit(els) if els.contains(x) => Some(true),
        Expr::SetLit(els) => {
            let c = cx.enum_const(x)?;
            let all_distinct = els.iter().all(|e| cx.enum_const(e) == Some(c) && e != x);
            all_distinct.then_some(false)
        }
        Expr::Union(a, c) => match (member(x, a, cx), member(x, c, cx)) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
        Expr::Inter(a, c) => match (member(x, a, cx), member(x, c, cx)) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
        Expr::Diff(a, c) => match (member(x, a, cx), member(x, c, cx)) {
            (_, Some(true)) | (Some(false), _) => Some(false),
            (Some(true), Some(false)) => Some(true),
            _ => None,
        },
        _ if cx.is_carrier(s) => Some(true),
        _ => None,
    }
}

fn truth(v: bool) -> Pred {
    if v {
        Pred::True
    } else {
        Pred::False
    }
}

fn pred_step(p: &Pred, cx: &SimpContext) -> Pred {
    use Pred::*;
    match p {
        True | False => p.clone(),
        And(a, c) => match (pred_step(a, cx), pred_step(c, cx)) {
            (False, _) | (_, False) => False,
            (True, q) | (q, True) => q,
            (x, y) => And(b(x), b(y)),
        },
        Not(a) => match pred_step(a, cx) {
            True => False,
            False => True,
            Not(q) => *q,
            q => Not(b(q)),
        },
        In(x, s) => {
            let (x, s) = (simplify_expr(x), simplify_expr(s));
            match member(&x, &s, cx) {
                Some(v) => truth(v),
                None => In(x, s),
            }
        }
        Subset(a, c) => {
            let (a, c) = (simplify_expr(a), simplify_expr(c));
            if a == Expr::Empty || a == c || cx.is_carrier(&c) || union_operand(&a, &c) {
                True
            } else if let Expr::SetLit(els) = &a {
                let known: Vec<Option<bool>> = els.iter().map(|e| member(e, &c, cx)).collect();
                if known.iter().all(|k| *k == Some(true)) {
                    True
                } else if known.iter().any(|k| *k == Some(false)) {
                    False
                } else {
                    Subset(a, c)
                }
            } else {
                Subset(a, c)
            }
        }
        Eq(a, c) | Neq(a, c) => {
            let (a, c) = (simplify_expr(a), simplify_expr(c));
            let eq = if a == c {
                Some(true)
            } else {
                match (cx.enum_const(&a), cx.enum_const(&c)) {
                    (Some(s1), Some(s2)) if s1 == s2 => Some(false),
                    _ => None,
                }
            };
            let neg = matches!(p, Neq(..));
            match eq {
                Some(v) => truth(v != neg),
                None if neg => Neq(a, c),
                None => Eq(a, c),
            }
        }
        Rel(f, s, t, k) => {
            let (f, s, t) = (simplify_expr(f), simplify_expr(s), simplify_expr(t));
            override_law(&f, &s, &t, *k).unwrap_or(Rel(f, s, t, *k))
        }
    }
}

/// `a` is literally one operand of the union `c`.
fn union_operand(a: &Expr, c: &Expr) -> bool {
    match c {
        Expr::Union(x, y) => **x == *a || **y == *a || union_operand(a, x) || union_operand(a, y),
        _ => false,
    }
}

/// `f <+ {x |-> v} : D k T` for a relation or partial function arrow becomes
/// `{x} <<| f : D k T & x : D & v : T`.
fn override_law(f: &Expr, d: &Expr, t: &Expr, k: RelKind) -> Option<Pred> {
    if !matches!(k, RelKind::Relation | RelKind::PartialFunction) {
        return None;
    }
    let Expr::Override(g, upd) = f else { return None };
    let Expr::SetLit(els) = &**upd else { return None };
    let [Expr::Maplet(x, v)] = els.as_slice() else { return None };
    Some(Pred::conj([
        Pred::Rel(Expr::dom_sub(Expr::singleton((**x).clone()), (**g).clone()), d.clone(), t.clone(), k),
        Pred::In((**x).clone(), d.clone()),
        Pred::In((**v).clone(), t.clone()),
    ]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_expr, parse_pred};

    fn cx() -> SimpContext {
        SimpContext {
            carriers: ["ELEMENT", "STATE"].iter().map(|s| s.to_string()).collect(),
            enum_of: [("write", "STATE"), ("protected", "STATE")]
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        }
    }

    fn s(p: &str) -> Pred {
        simplify_pred(&parse_pred(p).unwrap(), &cx())
    }

    #[test]
    fn membership_rules() {
        assert_eq!(s("x : S - {x}"), Pred::False);
        assert_eq!(s("x : A \\/ {x}"), Pred::True);
        assert_eq!(s("x : {}"), Pred::False);
        assert_eq!(s("x : ELEMENT"), Pred::True);
        assert_eq!(s("write = protected"), Pred::False);
        assert_eq!(s("protected : STATE"), Pred::True);
    }

    #[test]
    fn subset_and_equality_rules() {
        assert_eq!(s("{} <: S"), Pred::True);
        assert_eq!(s("S <: S"), Pred::True);
        assert_eq!(s("A \\/ B = A \\/ B"), Pred::True);
        assert_eq!(s("not(x : {x}) & btrue"), Pred::False);
    }

    #[test]
    fn domain_and_range_laws() {
        let e = |t: &str| simplify_expr(&parse_expr(t).unwrap()).to_string();
        assert_eq!(e("dom({a |-> b})"), "{a}");
        assert_eq!(e("dom(S <<| R)"), "dom(R) - S");
        assert_eq!(e("ran(R |>> S)"), "ran(R) - S");
        assert_eq!(e("dom(f <+ g)"), "dom(f) \\/ dom(g)");
        assert_eq!(e("dom(R \\/ {a |-> b})"), "dom(R) \\/ {a}");
        assert_eq!(e("dom(S <| R)"), "dom(R) /\\ S");
    }

    #[test]
    fn file_in_domain_after_removal_is_false() {
        assert_eq!(s("file : dom({file} <<| Father)"), Pred::False);
    }

    #[test]
    fn override_membership_law() {
        let p = s("State <+ {el |-> protected} : Usable \\/ {el} +-> STATE");
        assert_eq!(p, parse_pred("{el} <<| State : Usable \\/ {el} +-> STATE").unwrap());
    }
}
