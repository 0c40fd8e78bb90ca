//! Decides one finite model by bit-blasting into propositional logic.
//!
//! An element of a type of size `n` is a one-hot vector of `n` formulas, a
//! set is its characteristic vector over the element universe. Used when
//! explicit enumeration would exceed its budget; every counterexample it
//! finds is re-evaluated by the enumerating evaluator.

use std::cell::RefCell;
use std::collections::BTreeMap;

use super::{Compiler, OracleError, Target};
use crate::ast::*;
use crate::discharge::sat::{Formula, Solver};
use crate::typecheck::SetType;

type Bits = Vec<Formula>;

struct Blaster<'c, 'm> {
    cmp: &'c Compiler<'m>,
    /// Application results that must be defined.
    defined: RefCell<Vec<Formula>>,
}

fn unsupported(what: &dyn std::fmt::Display) -> OracleError {
    OracleError::Unsupported(what.to_string())
}

fn exactly_one(bs: &[Formula]) -> Formula {
    let mut cs = vec![Formula::or(bs.to_vec())];
    for i in 0..bs.len() {
        for j in i + 1..bs.len() {
            cs.push(Formula::or(vec![Formula::not(bs[i].clone()), Formula::not(bs[j].clone())]));
        }
    }
    Formula::and(cs)
}

fn at_most_one(bs: &[Formula]) -> Formula {
    let mut cs = Vec::new();
    for i in 0..bs.len() {
        for j in i + 1..bs.len() {
            cs.push(Formula::or(vec![Formula::not(bs[i].clone()), Formula::not(bs[j].clone())]));
        }
    }
    Formula::and(cs)
}

fn one_hot(n: u64, i: u64) -> Bits {
    (0..n).map(|u| Formula::Const(u == i)).collect()
}

impl Blaster<'_, '_> {
    fn size(&self, t: &SetType) -> Result<u64, OracleError> {
        self.cmp.model.type_size(t)
    }

    fn ty(&self, e: &Expr) -> Result<SetType, OracleError> {
        self.cmp.ty(e)
    }

    /// Element universe of a set-typed expression.
    fn universe(&self, e: &Expr) -> Result<u64, OracleError> {
        self.cmp.model.universe(&self.ty(e)?)
    }

    /// `(|A|, |B|)` for a relation-typed expression.
    fn rel_sizes(&self, e: &Expr) -> Result<(u64, u64), OracleError> {
        match self.ty(e)? {
            SetType::Power(p) => match *p {
                SetType::Pair(a, b) => Ok((self.size(&a)?, self.size(&b)?)),
                _ => Err(unsupported(e)),
            },
            _ => Err(unsupported(e)),
        }
    }

    fn elem(&self, e: &Expr, vars: &BTreeMap<String, Bits>) -> Result<Bits, OracleError> {
        let t = self.ty(e)?;
        if matches!(t, SetType::Power(_)) {
            return Err(unsupported(&format!("set-valued element {e}")));
        }
        let n = self.size(&t)?;
        match e {
            Expr::Ident(x) => match (vars.get(x), self.cmp.consts.get(x)) {
                (Some(b), _) => Ok(b.clone()),
                (None, Some(i)) => Ok(one_hot(n, *i)),
                _ => Err(OracleError::Untypeable(x.clone())),
            },
            Expr::Maplet(x, y) => {
                let (bx, by) = (self.elem(x, vars)?, self.elem(y, vars)?);
                let mut out = Vec::new();
                for a in &bx {
                    for b in &by {
                        out.push(Formula::and(vec![a.clone(), b.clone()]));
                    }
                }
                Ok(out)
            }
            Expr::Apply(f, x) => {
                let (na, nb) = self.rel_sizes(f)?;
                let bf = self.set(f, na * nb, vars)?;
                let bx = self.elem(x, vars)?;
                let out: Bits = (0..nb)
                    .map(|j| {
                        Formula::or((0..na).map(|i| Formula::and(vec![bx[i as usize].clone(), bf[(i * nb + j) as usize].clone()])).collect())
                    })
                    .collect();
                self.defined.borrow_mut().push(exactly_one(&out));
                Ok(out)
            }
            other => Err(unsupported(other)),
        }
    }

    /// Characteristic vector over a universe of `n` elements.
    fn set(&self, e: &Expr, n: u64, vars: &BTreeMap<String, Bits>) -> Result<Bits, OracleError> {
        let zip = |a: Bits, b: Bits, f: &dyn Fn(Formula, Formula) -> Formula| -> Bits {
            a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
        };
        if super::is_empty_built(e) {
            return Ok(vec![Formula::Const(false); n as usize]);
        }
        Ok(match e {
            Expr::Ident(x) => match (vars.get(x), self.cmp.consts.get(x)) {
                (Some(b), _) => b.clone(),
                (None, Some(mask)) => (0..n).map(|u| Formula::Const(mask >> u & 1 == 1)).collect(),
                _ => return Err(OracleError::Untypeable(x.clone())),
            },
            Expr::Empty => vec![Formula::Const(false); n as usize],
            Expr::SetLit(els) => {
                let mut acc = vec![Formula::Const(false); n as usize];
                for el in els {
                    acc = zip(acc, self.elem(el, vars)?, &|a, b| Formula::or(vec![a, b]));
                }
                acc
            }
            Expr::Union(a, b) => zip(self.set(a, n, vars)?, self.set(b, n, vars)?, &|x, y| Formula::or(vec![x, y])),
            Expr::Inter(a, b) => zip(self.set(a, n, vars)?, self.set(b, n, vars)?, &|x, y| Formula::and(vec![x, y])),
            Expr::Diff(a, b) => {
                zip(self.set(a, n, vars)?, self.set(b, n, vars)?, &|x, y| Formula::and(vec![x, Formula::not(y)]))
            }
            Expr::Dom(r) | Expr::Ran(r) => {
                let (na, nb) = self.rel_sizes(r)?;
                let br = self.set(r, na * nb, vars)?;
                let at = |i: u64, j: u64| br[(i * nb + j) as usize].clone();
                if matches!(e, Expr::Dom(_)) {
                    (0..na).map(|i| Formula::or((0..nb).map(|j| at(i, j)).collect())).collect()
                } else {
                    (0..nb).map(|j| Formula::or((0..na).map(|i| at(i, j)).collect())).collect()
                }
            }
            Expr::DomSub(s, r) | Expr::DomRes(s, r) | Expr::RanSub(r, s) | Expr::RanRes(r, s) => {
                let (na, nb) = self.rel_sizes(e)?;
                let br = self.set(r, na * nb, vars)?;
                let on_dom = matches!(e, Expr::DomSub(..) | Expr::DomRes(..));
                let bs = self.set(s, if on_dom { na } else { nb }, vars)?;
                let keep_in = matches!(e, Expr::DomRes(..) | Expr::RanRes(..));
                (0..na * nb)
                    .map(|k| {
                        let m = bs[(if on_dom { k / nb } else { k % nb }) as usize].clone();
                        let m = if keep_in { m } else { Formula::not(m) };
                        Formula::and(vec![br[k as usize].clone(), m])
                    })
                    .collect()
            }
            Expr::Override(f, g) => {
                let (na, nb) = self.rel_sizes(e)?;
                let (bf, bg) = (self.set(f, na * nb, vars)?, self.set(g, na * nb, vars)?);
                let dg: Bits = (0..na)
                    .map(|i| Formula::or((0..nb).map(|j| bg[(i * nb + j) as usize].clone()).collect()))
                    .collect();
                (0..na * nb)
                    .map(|k| {
                        let kept = Formula::and(vec![bf[k as usize].clone(), Formula::not(dg[(k / nb) as usize].clone())]);
                        Formula::or(vec![kept, bg[k as usize].clone()])
                    })
                    .collect()
            }
            other => return Err(unsupported(other)),
        })
    }

    fn side_type(&self, a: &Expr, b: &Expr) -> Result<SetType, OracleError> {
        self.ty(a).or_else(|_| self.ty(b))
    }

    fn pred(&self, p: &Pred, vars: &BTreeMap<String, Bits>) -> Result<Formula, OracleError> {
        Ok(match p {
            Pred::True => Formula::Const(true),
            Pred::False => Formula::Const(false),
            Pred::And(a, b) => Formula::and(vec![self.pred(a, vars)?, self.pred(b, vars)?]),
            Pred::Not(a) => Formula::not(self.pred(a, vars)?),
            Pred::In(x, s) => {
                let bx = self.elem(x, vars)?;
                let bs = self.set(s, bx.len() as u64, vars)?;
                Formula::or(bx.into_iter().zip(bs).map(|(a, b)| Formula::and(vec![a, b])).collect())
            }
            Pred::Subset(a, b) => {
                let n = match self.side_type(a, b) {
                    Ok(t) => self.cmp.model.universe(&t)?,
                    Err(_) => 0,
                };
                let (ba, bb) = (self.set(a, n, vars)?, self.set(b, n, vars)?);
                Formula::and(ba.into_iter().zip(bb).map(|(x, y)| Formula::implies(x, y)).collect())
            }
            Pred::Eq(a, b) | Pred::Neq(a, b) => {
                // Untyped only when both sides are built from empty sets.
                let t = self.side_type(a, b).ok();
                let (ba, bb) = if t.as_ref().map_or(true, |t| matches!(t, SetType::Power(_))) {
                    let n = match &t {
                        Some(t) => self.cmp.model.universe(t)?,
                        None => 0,
                    };
                    (self.set(a, n, vars)?, self.set(b, n, vars)?)
                } else {
                    (self.elem(a, vars)?, self.elem(b, vars)?)
                };
                let eq = Formula::and(ba.into_iter().zip(bb).map(|(x, y)| Formula::iff(x, y)).collect());
                if matches!(p, Pred::Neq(..)) {
                    Formula::not(eq)
                } else {
                    eq
                }
            }
            Pred::Rel(f, a, b, kind) => {
                let sizes = self.rel_sizes(f).unwrap_or((0, 0));
                let (na, nb) = (self.universe(a).unwrap_or(sizes.0), self.universe(b).unwrap_or(sizes.1));
                let bf = self.set(f, na * nb, vars)?;
                let (ba, bb) = (self.set(a, na, vars)?, self.set(b, nb, vars)?);
                let at = |i: u64, j: u64| bf[(i * nb + j) as usize].clone();
                let mut cs = Vec::new();
                for i in 0..na {
                    for j in 0..nb {
                        cs.push(Formula::implies(at(i, j), Formula::and(vec![ba[i as usize].clone(), bb[j as usize].clone()])));
                    }
                }
                if kind.is_functional() {
                    cs.extend((0..na).map(|i| at_most_one(&(0..nb).map(|j| at(i, j)).collect::<Bits>())));
                }
                if kind.is_injective() {
                    cs.extend((0..nb).map(|j| at_most_one(&(0..na).map(|i| at(i, j)).collect::<Bits>())));
                }
                if kind.is_total() {
                    cs.extend((0..na).map(|i| Formula::implies(ba[i as usize].clone(), Formula::or((0..nb).map(|j| at(i, j)).collect()))));
                }
                if kind.is_surjective() {
                    cs.extend((0..nb).map(|j| Formula::implies(bb[j as usize].clone(), Formula::or((0..na).map(|i| at(i, j)).collect()))));
                }
                Formula::and(cs)
            }
        })
    }

    /// Post-state bits after a substitution, plus its guards.
    fn subst(
        &self,
        s: &Subst,
        pre: &BTreeMap<String, Bits>,
        post: &mut BTreeMap<String, Bits>,
        guards: &mut Vec<Formula>,
    ) -> Result<(), OracleError> {
        match s {
            Subst::Skip => {}
            Subst::Assign(xs, es) => {
                for (x, e) in xs.iter().zip(es) {
                    let n = pre[x].len() as u64;
                    let bits = match self.ty(&Expr::id(x.clone()))? {
                        SetType::Power(_) => self.set(e, n, pre)?,
                        _ => self.elem(e, pre)?,
                    };
                    post.insert(x.clone(), bits);
                }
            }
            Subst::FunAssign(f, x, v) => {
                let upd = Expr::override_(Expr::id(f.clone()), Expr::singleton(Expr::maplet(x.clone(), v.clone())));
                post.insert(f.clone(), self.set(&upd, pre[f].len() as u64, pre)?);
            }
            Subst::Parallel(a, b) => {
                self.subst(a, pre, post, guards)?;
                self.subst(b, pre, post, guards)?;
            }
            Subst::Pre(p, body) => {
                guards.push(self.pred(p, pre)?);
                self.subst(body, pre, post, guards)?;
            }
            Subst::Call { op, .. } => return Err(OracleError::Unsupported(format!("call of {op}"))),
        }
        Ok(())
    }
}

/// A valuation, in the enumerator's encoding, satisfying `hyps` and
/// falsifying `target`; `None` when there is none in this model.
pub(super) fn refute(
    cmp: &Compiler,
    vars: &[String],
    types: &BTreeMap<String, SetType>,
    hyps: &[Pred],
    target: &Target,
) -> Result<Option<Vec<u64>>, OracleError> {
    let bl = Blaster { cmp, defined: RefCell::new(Vec::new()) };
    let mut solver = Solver::new();
    let mut bits: BTreeMap<String, Bits> = BTreeMap::new();
    for v in vars {
        let t = types.get(v).ok_or_else(|| OracleError::Untypeable(v.clone()))?;
        let (n, elem) = match t {
            SetType::Power(_) => (cmp.model.universe(t)?, false),
            _ => (cmp.model.type_size(t)?, true),
        };
        let b: Bits = (0..n).map(|_| Formula::Var(solver.fresh())).collect();
        if elem {
            solver.assert(&exactly_one(&b));
        }
        bits.insert(v.clone(), b);
    }
    for h in hyps {
        solver.assert(&bl.pred(h, &bits)?);
    }
    match target {
        Target::Goal(g) => solver.assert(&Formula::not(bl.pred(g, &bits)?)),
        Target::Transition(s, p) => {
            let mut post = bits.clone();
            let mut guards = Vec::new();
            bl.subst(s, &bits, &mut post, &mut guards)?;
            for g in guards {
                solver.assert(&g);
            }
            solver.assert(&Formula::not(bl.pred(p, &post)?));
        }
    }
    for d in bl.defined.take() {
        solver.assert(&d);
    }
    let Some(model) = solver.solve() else { return Ok(None) };
    let value = |f: &Formula| match f {
        Formula::Var(i) => model[*i as usize],
        Formula::Const(b) => *b,
        _ => false,
    };
    Ok(Some(
        vars.iter()
            .map(|v| {
                let b = &bits[v];
                if matches!(types[v], SetType::Power(_)) {
                    b.iter().enumerate().filter(|(_, f)| value(f)).fold(0u64, |acc, (i, _)| acc | 1 << i)
                } else {
                    b.iter().position(value).unwrap_or(0) as u64
                }
            })
            .collect(),
    ))
}
