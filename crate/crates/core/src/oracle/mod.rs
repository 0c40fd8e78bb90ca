//! Finite-model oracle: decides proof obligations on small carrier sets by
//! exhaustive enumeration.
//!
//! Every value is a `u64`. An element of a given set is its index in the
//! carrier, a pair `(a, b)` is `a * |B| + b`, and a set is a bitset over the
//! universe of its element type. Sets of sets are sets of bitsets, so any
//! set whose element universe exceeds 64 is rejected.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::ast::*;
use crate::discharge::prover::env_from_types;
use crate::pogen::{GivenSet, PoContext, ProofObligation};
use crate::typecheck::{type_of, SetType, TypeEnv};

mod blast;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("model too large: {0}")]
    ModelTooLarge(String),
    #[error("valuation budget of {0} exceeded")]
    BudgetExceeded(u64),
    #[error("cannot type `{0}`")]
    Untypeable(String),
    #[error("unsupported construct: {0}")]
    Unsupported(String),
    #[error("decision procedures disagree on {0}")]
    Disagreement(String),
}

/// Carrier sets of all given sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiniteModel {
    pub sets: BTreeMap<String, Vec<String>>,
}

impl FiniteModel {
    /// Largest carrier.
    pub fn size(&self) -> usize {
        self.sets.values().map(Vec::len).max().unwrap_or(0)
    }

    fn carrier(&self, g: &str) -> Result<&[String], OracleError> {
        self.sets
            .get(g)
            .map(Vec::as_slice)
            .ok_or_else(|| OracleError::Untypeable(g.to_string()))
    }

    fn type_size(&self, t: &SetType) -> Result<u64, OracleError> {
        let too_large = || OracleError::ModelTooLarge(t.to_string());
        match t {
            SetType::Given(g) => Ok(self.carrier(g)?.len() as u64),
            SetType::Pair(a, b) => self.type_size(a)?.checked_mul(self.type_size(b)?).ok_or_else(too_large),
            SetType::Power(u) => {
                let n = self.type_size(u)?;
                if n >= 63 {
                    return Err(too_large());
                }
                Ok(1 << n)
            }
        }
    }

    /// Universe size of the elements of a set-typed value, at most 64.
    fn universe(&self, set_type: &SetType) -> Result<u64, OracleError> {
        match set_type {
            SetType::Power(u) => {
                let n = self.type_size(u)?;
                if n > 64 {
                    return Err(OracleError::ModelTooLarge(set_type.to_string()));
                }
                Ok(n)
            }
            other => Err(OracleError::Untypeable(other.to_string())),
        }
    }

    /// A value as an expression over carrier element names.
    pub fn render(&self, t: &SetType, v: u64) -> Result<Expr, OracleError> {
        Ok(match t {
            SetType::Given(g) => Expr::id(self.carrier(g)?[v as usize].clone()),
            SetType::Pair(a, b) => {
                let nb = self.type_size(b)?;
                Expr::maplet(self.render(a, v / nb)?, self.render(b, v % nb)?)
            }
            SetType::Power(u) => {
                let els: Result<Vec<Expr>, _> = bits(v).map(|i| self.render(u, i)).collect();
                let els = els?;
                if els.is_empty() {
                    Expr::Empty
                } else {
                    Expr::SetLit(els)
                }
            }
        })
    }
}

fn deferred_element(set: &str, i: usize) -> String {
    format!("{set}_{}", i + 1)
}

/// Models giving every deferred set in `varying` each of `sizes`, the other
/// deferred sets one element, and enumerated sets their elements. Ordered by
/// total size.
pub fn models(given: &[GivenSet], varying: &BTreeSet<String>, sizes: &[usize]) -> Vec<FiniteModel> {
    let mut out = vec![FiniteModel { sets: BTreeMap::new() }];
    for g in given {
        let choices: Vec<Vec<String>> = match &g.elements {
            Some(els) => vec![els.clone()],
            None if varying.contains(&g.name) => sizes
                .iter()
                .map(|&n| (0..n).map(|i| deferred_element(&g.name, i)).collect())
                .collect(),
            None => vec![vec![deferred_element(&g.name, 0)]],
        };
        out = out
            .into_iter()
            .flat_map(|m| {
                choices.iter().map(move |c| {
                    let mut m = m.clone();
                    m.sets.insert(g.name.clone(), c.clone());
                    m
                })
            })
            .collect();
    }
    out.sort_by_key(|m| m.sets.values().map(Vec::len).sum::<usize>());
    out
}

fn bits(mut v: u64) -> impl Iterator<Item = u64> {
    std::iter::from_fn(move || {
        if v == 0 {
            return None;
        }
        let i = v.trailing_zeros() as u64;
        v &= v - 1;
        Some(i)
    })
}

fn bit(i: u64) -> u64 {
    1u64 << i
}

/// Compiled expression; sizes are carrier sizes of pair components.
#[derive(Debug, Clone)]
enum C {
    Var(usize),
    Lit(u64),
    Set(Vec<C>),
    Union(Box<C>, Box<C>),
    Inter(Box<C>, Box<C>),
    Diff(Box<C>, Box<C>),
    Dom(Box<C>, u64),
    Ran(Box<C>, u64),
    DomSub(Box<C>, Box<C>, u64),
    DomRes(Box<C>, Box<C>, u64),
    RanSub(Box<C>, Box<C>, u64),
    RanRes(Box<C>, Box<C>, u64),
    Override(Box<C>, Box<C>, u64),
    Maplet(Box<C>, Box<C>, u64),
    Apply(Box<C>, Box<C>, u64),
}

#[derive(Debug, Clone)]
enum CP {
    Const(bool),
    And(Box<CP>, Box<CP>),
    Not(Box<CP>),
    In(C, C),
    Subset(C, C),
    Eq(C, C),
    Rel(C, C, C, RelKind, u64),
}

fn dom_of(r: u64, nb: u64) -> u64 {
    bits(r).fold(0, |acc, i| acc | bit(i / nb))
}

fn ran_of(r: u64, nb: u64) -> u64 {
    bits(r).fold(0, |acc, i| acc | bit(i % nb))
}

fn keep(r: u64, f: impl Fn(u64) -> bool) -> u64 {
    bits(r).filter(|&i| f(i)).fold(0, |acc, i| acc | bit(i))
}

fn eval(c: &C, v: &[u64]) -> Option<u64> {
    let b2 = |x: &C, y: &C| Some((eval(x, v)?, eval(y, v)?));
    Some(match c {
        C::Var(s) => v[*s],
        C::Lit(x) => *x,
        C::Set(els) => {
            let mut acc = 0;
            for e in els {
                acc |= bit(eval(e, v)?);
            }
            acc
        }
        C::Union(x, y) => b2(x, y).map(|(a, b)| a | b)?,
        C::Inter(x, y) => b2(x, y).map(|(a, b)| a & b)?,
        C::Diff(x, y) => b2(x, y).map(|(a, b)| a & !b)?,
        C::Dom(r, nb) => dom_of(eval(r, v)?, *nb),
        C::Ran(r, nb) => ran_of(eval(r, v)?, *nb),
        C::DomSub(s, r, nb) => {
            let (s, r) = b2(s, r)?;
            keep(r, |i| s & bit(i / nb) == 0)
        }
        C::DomRes(s, r, nb) => {
            let (s, r) = b2(s, r)?;
            keep(r, |i| s & bit(i / nb) != 0)
        }
        C::RanSub(r, s, nb) => {
            let (r, s) = b2(r, s)?;
            keep(r, |i| s & bit(i % nb) == 0)
        }
        C::RanRes(r, s, nb) => {
            let (r, s) = b2(r, s)?;
            keep(r, |i| s & bit(i % nb) != 0)
        }
        C::Override(f, g, nb) => {
            let (f, g) = b2(f, g)?;
            let dg = dom_of(g, *nb);
            keep(f, |i| dg & bit(i / nb) == 0) | g
        }
        C::Maplet(x, y, nb) => b2(x, y).map(|(a, b)| a * nb + b)?,
        C::Apply(f, x, nb) => {
            let (f, x) = b2(f, x)?;
            let mut hits = bits(f).filter(|&i| i / nb == x);
            let first = hits.next()?;
            if hits.next().is_some() {
                return None;
            }
            first % nb
        }
    })
}

/// Three-valued: `None` when some function application is undefined.
fn holds(p: &CP, v: &[u64]) -> Option<bool> {
    match p {
        CP::Const(b) => Some(*b),
        CP::And(a, b) => match (holds(a, v), holds(b, v)) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
        CP::Not(a) => holds(a, v).map(|b| !b),
        CP::In(x, s) => Some(eval(s, v)? & bit(eval(x, v)?) != 0),
        CP::Subset(x, y) => Some(eval(x, v)? & !eval(y, v)? == 0),
        CP::Eq(x, y) => Some(eval(x, v)? == eval(y, v)?),
        CP::Rel(f, a, b, kind, nb) => {
            let (f, a, b) = (eval(f, v)?, eval(a, v)?, eval(b, v)?);
            let (d, r) = (dom_of(f, *nb), ran_of(f, *nb));
            let typed = d & !a == 0 && r & !b == 0;
            let distinct = |key: &dyn Fn(u64) -> u64| {
                let mut seen = 0u64;
                bits(f).all(|i| {
                    let k = bit(key(i));
                    let fresh = seen & k == 0;
                    seen |= k;
                    fresh
                })
            };
            Some(
                typed
                    && (!kind.is_functional() || distinct(&|i| i / nb))
                    && (!kind.is_injective() || distinct(&|i| i % nb))
                    && (!kind.is_total() || d == a)
                    && (!kind.is_surjective() || r == b),
            )
        }
    }
}

/// Translates predicates for one model, given the variable slots.
struct Compiler<'m> {
    model: &'m FiniteModel,
    env: TypeEnv,
    slots: BTreeMap<String, usize>,
    consts: BTreeMap<String, u64>,
}

impl<'m> Compiler<'m> {
    fn new(
        model: &'m FiniteModel,
        types: &BTreeMap<String, SetType>,
        slots: BTreeMap<String, usize>,
    ) -> Result<Self, OracleError> {
        let mut types = types.clone();
        let mut consts = BTreeMap::new();
        for (g, els) in &model.sets {
            if els.len() > 64 {
                return Err(OracleError::ModelTooLarge(g.clone()));
            }
            consts.insert(g.clone(), (1u128 << els.len()).wrapping_sub(1) as u64);
            types.insert(g.clone(), SetType::power(SetType::given(g.clone())));
            for (i, e) in els.iter().enumerate() {
                consts.insert(e.clone(), i as u64);
                types.insert(e.clone(), SetType::given(g.clone()));
            }
        }
        Ok(Compiler { model, env: env_from_types(&types), slots, consts })
    }

    fn ty(&self, e: &Expr) -> Result<SetType, OracleError> {
        type_of(e, &self.env).map_err(|_| OracleError::Untypeable(e.to_string()))
    }

    /// Size of the range component of a relation-typed expression.
    fn range_size(&self, rel: &Expr) -> Result<u64, OracleError> {
        match self.ty(rel)? {
            SetType::Power(p) => match *p {
                SetType::Pair(_, b) => self.model.type_size(&b),
                _ => Err(OracleError::Untypeable(rel.to_string())),
            },
            _ => Err(OracleError::Untypeable(rel.to_string())),
        }
    }

    fn set_universe(&self, e: &Expr) -> Result<(), OracleError> {
        if let Ok(t) = type_of(e, &self.env) {
            if matches!(t, SetType::Power(_)) {
                self.model.universe(&t)?;
            }
        }
        Ok(())
    }

    fn expr(&self, e: &Expr) -> Result<C, OracleError> {
        let bx = |x: &Expr| self.expr(x).map(Box::new);
        if is_empty_built(e) {
            return Ok(C::Lit(0));
        }
        self.set_universe(e)?;
        Ok(match e {
            Expr::Ident(n) => match (self.slots.get(n), self.consts.get(n)) {
                (Some(s), _) => C::Var(*s),
                (None, Some(c)) => C::Lit(*c),
                (None, None) => return Err(OracleError::Untypeable(n.clone())),
            },
            Expr::Empty => C::Lit(0),
            Expr::SetLit(els) => C::Set(els.iter().map(|x| self.expr(x)).collect::<Result<_, _>>()?),
            Expr::Union(a, b) => C::Union(bx(a)?, bx(b)?),
            Expr::Inter(a, b) => C::Inter(bx(a)?, bx(b)?),
            Expr::Diff(a, b) => C::Diff(bx(a)?, bx(b)?),
            Expr::Dom(r) => C::Dom(bx(r)?, self.range_size(r)?),
            Expr::Ran(r) => C::Ran(bx(r)?, self.range_size(r)?),
            Expr::DomSub(s, r) => C::DomSub(bx(s)?, bx(r)?, self.range_size(e)?),
            Expr::DomRes(s, r) => C::DomRes(bx(s)?, bx(r)?, self.range_size(e)?),
            Expr::RanSub(r, s) => C::RanSub(bx(r)?, bx(s)?, self.range_size(e)?),
            Expr::RanRes(r, s) => C::RanRes(bx(r)?, bx(s)?, self.range_size(e)?),
            Expr::Override(f, g) => C::Override(bx(f)?, bx(g)?, self.range_size(e)?),
            Expr::Maplet(x, y) => C::Maplet(bx(x)?, bx(y)?, self.model.type_size(&self.ty(y)?)?),
            Expr::Apply(f, x) => C::Apply(bx(f)?, bx(x)?, self.range_size(f)?),
        })
    }

    fn pred(&self, p: &Pred) -> Result<CP, OracleError> {
        Ok(match p {
            Pred::True => CP::Const(true),
            Pred::False => CP::Const(false),
            Pred::And(a, b) => CP::And(Box::new(self.pred(a)?), Box::new(self.pred(b)?)),
            Pred::Not(a) => CP::Not(Box::new(self.pred(a)?)),
            Pred::In(x, s) => CP::In(self.expr(x)?, self.expr(s)?),
            Pred::Subset(x, y) => CP::Subset(self.expr(x)?, self.expr(y)?),
            Pred::Eq(x, y) => CP::Eq(self.expr(x)?, self.expr(y)?),
            Pred::Neq(x, y) => CP::Not(Box::new(CP::Eq(self.expr(x)?, self.expr(y)?))),
            Pred::Rel(f, a, b, k) => {
                let nb = match self.ty(b) {
                    Ok(SetType::Power(t)) => self.model.type_size(&t)?,
                    // Untyped only when every side is built from empty sets.
                    _ => self.range_size(f).unwrap_or(1),
                };
                CP::Rel(self.expr(f)?, self.expr(a)?, self.expr(b)?, *k, nb)
            }
        })
    }
}

/// Built from `{}` by set operators alone, hence denotes the empty set
/// whatever its (undeterminable) type.
pub(crate) fn is_empty_built(e: &Expr) -> bool {
    match e {
        Expr::Empty => true,
        Expr::Union(a, b) | Expr::Inter(a, b) | Expr::Override(a, b) => is_empty_built(a) && is_empty_built(b),
        Expr::Diff(a, _) | Expr::RanSub(a, _) | Expr::RanRes(a, _) => is_empty_built(a),
        Expr::DomSub(_, r) | Expr::DomRes(_, r) => is_empty_built(r),
        Expr::Dom(a) | Expr::Ran(a) => is_empty_built(a),
        _ => false,
    }
}

/// How the values of one variable are enumerated.
#[derive(Debug, Clone)]
enum Gen {
    /// The value of an expression.
    Eq(C),
    /// The members of a set.
    In(C),
    /// The subsets of a set.
    Sub(C),
    /// The relations between two sets, with the range carrier size.
    Rel(C, C, u64),
    /// Every value of a type of the given size.
    All(u64),
}

fn submasks(mask: u64) -> impl Iterator<Item = u64> {
    let mut next = Some(mask);
    std::iter::from_fn(move || {
        let s = next?;
        next = if s == 0 { None } else { Some((s - 1) & mask) };
        Some(s)
    })
}

fn candidates(g: &Gen, v: &[u64]) -> Box<dyn Iterator<Item = u64>> {
    match g {
        Gen::Eq(c) => Box::new(eval(c, v).into_iter()),
        Gen::In(c) => Box::new(bits(eval(c, v).unwrap_or(0))),
        Gen::Sub(c) => match eval(c, v) {
            Some(m) => Box::new(submasks(m)),
            None => Box::new(std::iter::empty()),
        },
        Gen::Rel(a, b, nb) => match (eval(a, v), eval(b, v)) {
            (Some(a), Some(b)) => {
                let mut m = 0u64;
                for i in bits(a) {
                    for j in bits(b) {
                        m |= bit(i * nb + j);
                    }
                }
                Box::new(submasks(m))
            }
            _ => Box::new(std::iter::empty()),
        },
        Gen::All(n) => Box::new(0..*n),
    }
}

/// A bound on a variable read off a hypothesis, with its dependencies and
/// rank (lower is tighter).
fn bound_of(p: &Pred, var: &str, cmp: &Compiler) -> Option<(Gen, BTreeSet<String>, u8)> {
    let deps = |es: &[&Expr]| -> BTreeSet<String> {
        es.iter()
            .flat_map(|e| e.free_identifiers())
            .filter(|n| cmp.slots.contains_key(n))
            .collect()
    };
    let is_var = |e: &Expr| matches!(e, Expr::Ident(n) if n == var);
    let (g, d, rank) = match p {
        Pred::Eq(x, e) | Pred::Eq(e, x) if is_var(x) => (Gen::Eq(cmp.expr(e).ok()?), deps(&[e]), 0),
        Pred::In(x, e) if is_var(x) => (Gen::In(cmp.expr(e).ok()?), deps(&[e]), 1),
        Pred::Subset(x, e) if is_var(x) => (Gen::Sub(cmp.expr(e).ok()?), deps(&[e]), 2),
        Pred::Rel(x, a, b, _) if is_var(x) => {
            let nb = cmp.range_size(x).ok()?;
            (Gen::Rel(cmp.expr(a).ok()?, cmp.expr(b).ok()?, nb), deps(&[a, b]), 2)
        }
        _ => return None,
    };
    (!d.contains(var)).then_some((g, d, rank))
}

struct Plan {
    order: Vec<usize>,
    gens: Vec<Gen>,
    /// Per position, the hypotheses that become decidable there.
    checks: Vec<Vec<usize>>,
}

fn plan(
    vars: &[String],
    hyps: &[(Pred, BTreeSet<String>)],
    cmp: &Compiler,
    types: &BTreeMap<String, SetType>,
) -> Result<Plan, OracleError> {
    let mut placed: BTreeSet<String> = BTreeSet::new();
    let mut order = Vec::new();
    let mut gens = Vec::new();
    while placed.len() < vars.len() {
        let mut best: Option<(u8, u64, String, Gen)> = None;
        for v in vars.iter().filter(|v| !placed.contains(*v)) {
            let t = types.get(v).ok_or_else(|| OracleError::Untypeable(v.clone()))?;
            let size = cmp.model.type_size(t)?;
            let mut cand = (3u8, size, v.clone(), Gen::All(size));
            for (h, _) in hyps {
                if let Some((g, deps, rank)) = bound_of(h, v, cmp) {
                    if rank < cand.0 && deps.is_subset(&placed) {
                        cand = (rank, size, v.clone(), g);
                    }
                }
            }
            if best.as_ref().map_or(true, |b| (cand.0, cand.1) < (b.0, b.1)) {
                best = Some(cand);
            }
        }
        let (_, _, v, g) = best.expect("an unplaced variable remains");
        placed.insert(v.clone());
        order.push(cmp.slots[&v]);
        gens.push(g);
    }
    let pos: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut checks = vec![Vec::new(); order.len()];
    for (i, (_, vs)) in hyps.iter().enumerate() {
        if let Some(last) = vs.iter().map(|v| pos[&cmp.slots[v]]).max() {
            checks[last].push(i);
        }
    }
    Ok(Plan { order, gens, checks })
}

struct Budget {
    used: u64,
    limit: u64,
    /// Per-model enumeration limit after which the model is decided by
    /// bit-blasting instead.
    switch_after: Option<u64>,
}

impl Budget {
    fn tick(&mut self) -> Result<(), OracleError> {
        self.used += 1;
        if self.used > self.limit {
            return Err(OracleError::BudgetExceeded(self.limit));
        }
        Ok(())
    }
}

/// Depth-first search for an assignment satisfying every hypothesis and,
/// once complete, `leaf`.
fn search(
    plan: &Plan,
    hyps: &[CP],
    val: &mut Vec<u64>,
    at: usize,
    budget: &mut Budget,
    leaf: &dyn Fn(&[u64]) -> bool,
) -> Result<bool, OracleError> {
    if at == plan.order.len() {
        return Ok(leaf(val));
    }
    let slot = plan.order[at];
    for x in candidates(&plan.gens[at], val) {
        budget.tick()?;
        val[slot] = x;
        if plan.checks[at].iter().all(|&h| holds(&hyps[h], val) == Some(true))
            && search(plan, hyps, val, at + 1, budget, leaf)?
        {
            return Ok(true);
        }
    }
    Ok(false)
}

/// A model and a complete valuation of the free variables, as expressions
/// over carrier element names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub model: FiniteModel,
    pub valuation: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// No counterexample in any of the models tried.
    Valid { models: usize },
    Refuted(Counterexample),
}

/// What must fail once the hypotheses hold.
enum Leaf {
    Goal(CP),
    Transition { guards: Vec<CP>, assigns: Vec<(usize, C)>, post: CP },
}

impl Leaf {
    fn hit(&self, v: &[u64]) -> bool {
        match self {
            Leaf::Goal(g) => holds(g, v) == Some(false),
            Leaf::Transition { guards, assigns, post } => {
                if !guards.iter().all(|g| holds(g, v) == Some(true)) {
                    return false;
                }
                let mut next = v.to_vec();
                for (s, c) in assigns {
                    match eval(c, v) {
                        Some(x) => next[*s] = x,
                        None => return false,
                    }
                }
                holds(post, &next) == Some(false)
            }
        }
    }
}

fn compile_subst(
    s: &Subst,
    cmp: &Compiler,
    guards: &mut Vec<CP>,
    assigns: &mut Vec<(usize, C)>,
) -> Result<(), OracleError> {
    match s {
        Subst::Skip => {}
        Subst::Assign(xs, es) => {
            for (x, e) in xs.iter().zip(es) {
                assigns.push((cmp.slots[x], cmp.expr(e)?));
            }
        }
        Subst::FunAssign(f, x, v) => {
            let upd = Expr::override_(Expr::id(f.clone()), Expr::singleton(Expr::maplet(x.clone(), v.clone())));
            assigns.push((cmp.slots[f], cmp.expr(&upd)?));
        }
        Subst::Parallel(a, b) => {
            compile_subst(a, cmp, guards, assigns)?;
            compile_subst(b, cmp, guards, assigns)?;
        }
        Subst::Pre(p, body) => {
            guards.push(cmp.pred(p)?);
            compile_subst(body, cmp, guards, assigns)?;
        }
        Subst::Call { op, .. } => return Err(OracleError::Unsupported(format!("call of {op}"))),
    }
    Ok(())
}

enum Target<'a> {
    Goal(&'a Pred),
    Transition(&'a Subst, &'a Pred),
}

impl Target<'_> {
    fn idents(&self) -> BTreeSet<String> {
        match self {
            Target::Goal(g) => g.free_identifiers(),
            Target::Transition(s, p) => {
                let mut out = s.free_identifiers();
                out.extend(p.free_identifiers());
                out
            }
        }
    }

    fn compile(&self, cmp: &Compiler) -> Result<Leaf, OracleError> {
        match self {
            Target::Goal(g) => Ok(Leaf::Goal(cmp.pred(g)?)),
            Target::Transition(s, p) => {
                let (mut guards, mut assigns) = (Vec::new(), Vec::new());
                compile_subst(s, cmp, &mut guards, &mut assigns)?;
                Ok(Leaf::Transition { guards, assigns, post: cmp.pred(p)? })
            }
        }
    }
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    parent[i] = r;
    r
}

fn model_constants(model: &FiniteModel) -> BTreeSet<String> {
    model.sets.iter().flat_map(|(g, els)| std::iter::once(g.clone()).chain(els.iter().cloned())).collect()
}

/// A valuation of the hypotheses' and target's variables satisfying the
/// hypotheses and falsifying the target, within one model.
fn refute_model(
    model: &FiniteModel,
    types: &BTreeMap<String, SetType>,
    hyps: &[Pred],
    target: &Target,
    budget: &mut Budget,
) -> Result<Option<Counterexample>, OracleError> {
    if budget.switch_after.is_none() {
        return enumerate_model(model, types, hyps, target, budget);
    }
    let mut local = Budget { used: 0, limit: budget.switch_after.unwrap_or(0), switch_after: None };
    match enumerate_model(model, types, hyps, target, &mut local) {
        Err(OracleError::BudgetExceeded(_)) => {}
        other => return other,
    }
    let consts = model_constants(model);
    let mut vars: BTreeSet<String> = target.idents();
    for h in hyps {
        vars.extend(h.free_identifiers());
    }
    let vars: Vec<String> = vars.difference(&consts).cloned().collect();
    let slots: BTreeMap<String, usize> = vars.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    let cmp = Compiler::new(model, types, slots)?;
    let Some(val) = blast::refute(&cmp, &vars, types, hyps, target)? else { return Ok(None) };
    // Confirm with the evaluator before reporting.
    let leaf = target.compile(&cmp)?;
    for h in hyps {
        if holds(&cmp.pred(h)?, &val) != Some(true) {
            return Err(OracleError::Disagreement(h.to_string()));
        }
    }
    if !leaf.hit(&val) {
        return Err(OracleError::Disagreement("target".into()));
    }
    let mut valuation = BTreeMap::new();
    for v in &vars {
        valuation.insert(v.clone(), model.render(&types[v], val[cmp.slots[v]])?.to_string());
    }
    Ok(Some(Counterexample { model: model.clone(), valuation }))
}

fn enumerate_model(
    model: &FiniteModel,
    types: &BTreeMap<String, SetType>,
    hyps: &[Pred],
    target: &Target,
    budget: &mut Budget,
) -> Result<Option<Counterexample>, OracleError> {
    let consts = model_constants(model);
    let free = |p: &Pred| -> BTreeSet<String> { p.free_identifiers().difference(&consts).cloned().collect() };
    let leaf_vars: BTreeSet<String> = target.idents().difference(&consts).cloned().collect();
    let hyp_vars: Vec<BTreeSet<String>> = hyps.iter().map(free).collect();
    let vars: Vec<String> = hyp_vars.iter().flatten().chain(&leaf_vars).cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let slots: BTreeMap<String, usize> = vars.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    let cmp = Compiler::new(model, types, slots)?;
    let compiled: Vec<CP> = hyps.iter().map(|h| cmp.pred(h)).collect::<Result<_, _>>()?;
    let leaf = target.compile(&cmp)?;

    let mut parent: Vec<usize> = (0..vars.len()).collect();
    let mut join = |vs: &BTreeSet<String>| {
        let mut it = vs.iter().map(|v| cmp.slots[v]);
        if let Some(first) = it.next() {
            for s in it {
                let (a, b) = (find(&mut parent, first), find(&mut parent, s));
                parent[a] = b;
            }
        }
    };
    for vs in &hyp_vars {
        join(vs);
    }
    join(&leaf_vars);
    let mut comps: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for v in &vars {
        let r = find(&mut parent, cmp.slots[v]);
        comps.entry(r).or_default().push(v.clone());
    }

    let mut val = vec![0u64; vars.len()];
    for (h, vs) in compiled.iter().zip(&hyp_vars) {
        if vs.is_empty() && holds(h, &val) != Some(true) {
            return Ok(None);
        }
    }
    let leaf_root = leaf_vars.iter().next().map(|v| find(&mut parent, cmp.slots[v]));
    if leaf_root.is_none() && !leaf.hit(&val) {
        return Ok(None);
    }
    // The target's component first: it is the one most likely to fail.
    let mut ordered: Vec<(usize, Vec<String>)> = comps.into_iter().collect();
    ordered.sort_by_key(|(r, _)| Some(*r) != leaf_root);
    for (root, cvars) in ordered {
        let members: Vec<usize> = (0..hyps.len())
            .filter(|&i| hyp_vars[i].iter().next().is_some_and(|v| find(&mut parent, cmp.slots[v]) == root))
            .collect();
        let local: Vec<(Pred, BTreeSet<String>)> =
            members.iter().map(|&i| (hyps[i].clone(), hyp_vars[i].clone())).collect();
        let local_cp: Vec<CP> = members.iter().map(|&i| compiled[i].clone()).collect();
        let p = plan(&cvars, &local, &cmp, types)?;
        let found = if Some(root) == leaf_root {
            search(&p, &local_cp, &mut val, 0, budget, &|v| leaf.hit(v))?
        } else {
            search(&p, &local_cp, &mut val, 0, budget, &|_| true)?
        };
        if !found {
            return Ok(None);
        }
    }
    let mut valuation = BTreeMap::new();
    for v in &vars {
        valuation.insert(v.clone(), model.render(&types[v], val[cmp.slots[v]])?.to_string());
    }
    Ok(Some(Counterexample { model: model.clone(), valuation }))
}

fn given_names(t: &SetType, out: &mut BTreeSet<String>) {
    match t {
        SetType::Given(g) => {
            out.insert(g.clone());
        }
        SetType::Power(u) => given_names(u, out),
        SetType::Pair(a, b) => {
            given_names(a, out);
            given_names(b, out);
        }
    }
}

/// Exhaustive checker with per-obligation valuation budget.
#[derive(Debug, Clone)]
pub struct Oracle {
    /// Carrier sizes tried for each deferred set.
    pub sizes: Vec<usize>,
    /// Candidate values examined per obligation before giving up.
    pub budget: u64,
    /// When set, a model whose enumeration examines more candidates than this
    /// is decided by bit-blasting; the budget then no longer applies.
    pub switch_after: Option<u64>,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle { sizes: vec![1, 2, 3], budget: 10_000_000, switch_after: Some(20_000) }
    }
}

impl Oracle {
    pub fn with_sizes(sizes: Vec<usize>) -> Self {
        Oracle { sizes, ..Oracle::default() }
    }

    /// Pure enumeration, bounded by the budget.
    pub fn enumerating(sizes: Vec<usize>) -> Self {
        Oracle { sizes, switch_after: None, ..Oracle::default() }
    }

    fn new_budget(&self) -> Budget {
        Budget { used: 0, limit: self.budget, switch_after: self.switch_after }
    }

    /// Deferred sets whose size matters: those in the types of the free
    /// variables. The others get a single element.
    fn varying(ctx: &PoContext, idents: &BTreeSet<String>) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for n in idents {
            if let Some(t) = ctx.types.get(n) {
                given_names(t, &mut out);
            }
        }
        out
    }

    fn run(&self, ctx: &PoContext, hyps: &[Pred], target: Target) -> Result<Outcome, OracleError> {
        let mut idents = target.idents();
        for h in hyps {
            idents.extend(h.free_identifiers());
        }
        let ms = models(&ctx.given, &Self::varying(ctx, &idents), &self.sizes);
        let mut budget = self.new_budget();
        for m in &ms {
            if let Some(c) = refute_model(m, &ctx.types, hyps, &target, &mut budget)? {
                return Ok(Outcome::Refuted(c));
            }
        }
        Ok(Outcome::Valid { models: ms.len() })
    }

    /// The models `check` tries for `po`, smallest first.
    pub fn models_for(&self, po: &ProofObligation) -> Vec<FiniteModel> {
        let mut idents = po.goal.free_identifiers();
        for h in &po.hypotheses {
            idents.extend(h.free_identifiers());
        }
        models(&po.context.given, &Self::varying(&po.context, &idents), &self.sizes)
    }

    pub fn check(&self, po: &ProofObligation) -> Result<Outcome, OracleError> {
        self.run(&po.context, &po.hypotheses, Target::Goal(&po.goal))
    }

    /// Checks one model only.
    pub fn check_in(&self, po: &ProofObligation, model: &FiniteModel) -> Result<Option<Counterexample>, OracleError> {
        let mut budget = self.new_budget();
        refute_model(model, &po.context.types, &po.hypotheses, &Target::Goal(&po.goal), &mut budget)
    }

    /// Direct state-transition check: a pre-state satisfying `hyps` (and the
    /// preconditions inside `body`) whose successor falsifies `post`.
    pub fn check_transition(
        &self,
        ctx: &PoContext,
        hyps: &[Pred],
        body: &Subst,
        post: &Pred,
    ) -> Result<Outcome, OracleError> {
        self.run(ctx, hyps, Target::Transition(body, post))
    }

    pub fn check_transition_in(
        &self,
        ctx: &PoContext,
        model: &FiniteModel,
        hyps: &[Pred],
        body: &Subst,
        post: &Pred,
    ) -> Result<Option<Counterexample>, OracleError> {
        let mut budget = self.new_budget();
        refute_model(model, &ctx.types, hyps, &Target::Transition(body, post), &mut budget)
    }
}

/// Re-evaluates a stored counterexample: every hypothesis true and the goal
/// false under the valuation.
pub fn is_counterexample(po: &ProofObligation, cex: &Counterexample) -> Result<bool, OracleError> {
    let mut binding = Binding::new();
    for (v, text) in &cex.valuation {
        let e = crate::parser::parse_expr(text).map_err(|_| OracleError::Untypeable(text.clone()))?;
        binding.insert(v.clone(), e);
    }
    let cmp = Compiler::new(&cex.model, &po.context.types, BTreeMap::new())?;
    for h in &po.hypotheses {
        if holds(&cmp.pred(&h.substitute(&binding))?, &[]) != Some(true) {
            return Ok(false);
        }
    }
    Ok(holds(&cmp.pred(&po.goal.substitute(&binding))?, &[]) == Some(false))
}
