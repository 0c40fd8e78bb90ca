//! Static typing. Types are built from given sets with powerset and
//! cartesian product; variables and operation inputs take the type of their
//! first typing conjunct, outputs the type of their first assignment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ast::*;
use crate::library::MachineSource;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SetType {
    Given(String),
    Power(Box<SetType>),
    Pair(Box<SetType>, Box<SetType>),
}

impl SetType {
    pub fn given(n: impl Into<String>) -> Self {
        SetType::Given(n.into())
    }
    pub fn power(t: SetType) -> Self {
        SetType::Power(Box::new(t))
    }
    pub fn pair(a: SetType, b: SetType) -> Self {
        SetType::Pair(Box::new(a), Box::new(b))
    }
    pub fn relation(a: SetType, b: SetType) -> Self {
        SetType::power(SetType::pair(a, b))
    }

    /// Replaces given sets according to `map`.
    pub fn subst_given(&self, map: &BTreeMap<String, SetType>) -> SetType {
        match self {
            SetType::Given(g) => map.get(g).cloned().unwrap_or_else(|| self.clone()),
            SetType::Power(t) => SetType::power(t.subst_given(map)),
            SetType::Pair(a, b) => SetType::pair(a.subst_given(map), b.subst_given(map)),
        }
    }
}

impl fmt::Display for SetType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetType::Given(g) => f.write_str(g),
            SetType::Power(t) => write!(f, "POW({t})"),
            SetType::Pair(a, b) => write!(f, "({a} * {b})"),
        }
    }
}

/// Inference-time type; `Any` is the unknown element type of `{}`.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Ty {
    Any,
    Given(String),
    Power(Box<Ty>),
    Pair(Box<Ty>, Box<Ty>),
}

impl Ty {
    fn power(t: Ty) -> Ty {
        Ty::Power(Box::new(t))
    }
    fn pair(a: Ty, b: Ty) -> Ty {
        Ty::Pair(Box::new(a), Box::new(b))
    }
    fn from_set(t: &SetType) -> Ty {
        match t {
            SetType::Given(g) => Ty::Given(g.clone()),
            SetType::Power(t) => Ty::power(Ty::from_set(t)),
            SetType::Pair(a, b) => Ty::pair(Ty::from_set(a), Ty::from_set(b)),
        }
    }
    fn to_set(&self) -> Option<SetType> {
        Some(match self {
            Ty::Any => return None,
            Ty::Given(g) => SetType::Given(g.clone()),
            Ty::Power(t) => SetType::power(t.to_set()?),
            Ty::Pair(a, b) => SetType::pair(a.to_set()?, b.to_set()?),
        })
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Any => f.write_str("?"),
            Ty::Given(g) => f.write_str(g),
            Ty::Power(t) => write!(f, "POW({t})"),
            Ty::Pair(a, b) => write!(f, "({a} * {b})"),
        }
    }
}

fn unify(a: &Ty, b: &Ty) -> Option<Ty> {
    match (a, b) {
        (Ty::Any, t) | (t, Ty::Any) => Some(t.clone()),
        (Ty::Given(x), Ty::Given(y)) if x == y => Some(a.clone()),
        (Ty::Power(x), Ty::Power(y)) => Some(Ty::power(unify(x, y)?)),
        (Ty::Pair(a1, b1), Ty::Pair(a2, b2)) => Some(Ty::pair(unify(a1, a2)?, unify(b1, b2)?)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("{context}: undeclared identifier `{name}`")]
    UndeclaredIdentifier { name: String, context: String },
    #[error("{context}: type mismatch in `{expr}`: expected {expected}, found {found}")]
    TypeMismatch { expr: String, expected: String, found: String, context: String },
    #[error("{context}: the type of `{expr}` cannot be determined")]
    Ambiguous { expr: String, context: String },
    #[error("{context}: no typing conjunct for `{name}`")]
    MissingTypingConjunct { name: String, context: String },
    #[error("{context}: `{name}` ({owner}) cannot be assigned here")]
    VisibilityViolation { name: String, owner: String, context: String },
    #[error("{context}: parallel branches both modify `{name}`")]
    ParallelClash { name: String, context: String },
    #[error("{context}: unknown operation `{name}`")]
    UnknownOperation { name: String, context: String },
    #[error("{context}: `{name}` expects {expected} argument(s), found {found}")]
    Arity { name: String, expected: usize, found: usize, context: String },
    #[error("{context}: `{name}` is declared twice")]
    Duplicate { name: String, context: String },
    #[error("unresolved machine `{0}`")]
    UnresolvedMachine(String),
    #[error("cyclic inclusion through `{0}`")]
    CyclicInclude(String),
}

impl TypeError {
    /// Variant name, for diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            TypeError::UndeclaredIdentifier { .. } => "UndeclaredIdentifier",
            TypeError::TypeMismatch { .. } => "TypeMismatch",
            TypeError::Ambiguous { .. } => "Ambiguous",
            TypeError::MissingTypingConjunct { .. } => "MissingTypingConjunct",
            TypeError::VisibilityViolation { .. } => "VisibilityViolation",
            TypeError::ParallelClash { .. } => "ParallelClash",
            TypeError::UnknownOperation { .. } => "UnknownOperation",
            TypeError::Arity { .. } => "Arity",
            TypeError::Duplicate { .. } => "Duplicate",
            TypeError::UnresolvedMachine(_) => "UnresolvedMachine",
            TypeError::CyclicInclude(_) => "CyclicInclude",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IdentKind {
    Parameter,
    Set,
    EnumConst,
    Variable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Origin {
    Own,
    Included(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Entry {
    pub ty: SetType,
    pub kind: IdentKind,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OpSig {
    pub machine: String,
    pub inputs: Vec<(String, SetType)>,
    pub outputs: Vec<(String, SetType)>,
    pub origin: Origin,
    /// State variables the operation may modify.
    pub writes: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TypeEnv {
    entries: BTreeMap<String, Entry>,
    aliases: BTreeMap<String, String>,
    pub ops: BTreeMap<String, OpSig>,
    /// Given sets in declaration order, with their elements when enumerated.
    pub given: Vec<(String, Option<Vec<String>>)>,
}

impl TypeEnv {
    pub fn lookup(&self, name: &str) -> Option<&Entry> {
        let n = self.aliases.get(name).map(String::as_str).unwrap_or(name);
        self.entries.get(n)
    }

    pub fn resolve_alias<'a>(&'a self, name: &'a str) -> &'a str {
        self.aliases.get(name).map(String::as_str).unwrap_or(name)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &Entry)> {
        self.entries.iter()
    }

    pub fn variables(&self) -> impl Iterator<Item = (&String, &Entry)> {
        self.entries.iter().filter(|(_, e)| e.kind == IdentKind::Variable)
    }

    pub fn insert(&mut self, name: impl Into<String>, entry: Entry) {
        self.entries.insert(name.into(), entry);
    }

    fn declare_given(&mut self, name: &str, elements: Option<Vec<String>>) {
        if !self.given.iter().any(|(g, _)| g == name) {
            self.given.push((name.to_string(), elements));
        }
    }
}

/// Result of typing a machine.
#[derive(Debug, Clone)]
pub struct TypedMachine {
    pub machine: Machine,
    pub env: TypeEnv,
    /// Types of operation inputs and outputs, per operation.
    pub locals: BTreeMap<String, BTreeMap<String, SetType>>,
    /// Operations visible to a machine that includes this one.
    pub exported: Vec<String>,
}

impl TypedMachine {
    /// Type of an identifier as seen inside `op` (or at machine level).
    pub fn type_in(&self, op: Option<&str>, name: &str) -> Option<SetType> {
        if let Some(t) = op.and_then(|o| self.locals.get(o)).and_then(|l| l.get(name)) {
            return Some(t.clone());
        }
        self.env.lookup(name).map(|e| e.ty.clone())
    }
}

struct Checker<'e> {
    env: &'e TypeEnv,
    locals: BTreeMap<String, Ty>,
    ctx: String,
}

impl Checker<'_> {
    fn ident(&self, n: &str) -> Result<Ty, TypeError> {
        if let Some(t) = self.locals.get(n) {
            return Ok(t.clone());
        }
        match self.env.lookup(n) {
            Some(e) => Ok(Ty::from_set(&e.ty)),
            None => Err(TypeError::UndeclaredIdentifier { name: n.into(), context: self.ctx.clone() }),
        }
    }

    fn mismatch(&self, e: &dyn fmt::Display, expected: &dyn fmt::Display, found: &Ty) -> TypeError {
        TypeError::TypeMismatch {
            expr: e.to_string(),
            expected: expected.to_string(),
            found: found.to_string(),
            context: self.ctx.clone(),
        }
    }

    fn expect(&self, e: &Expr, want: &Ty) -> Result<Ty, TypeError> {
        let t = self.infer(e)?;
        unify(&t, want).ok_or_else(|| self.mismatch(e, want, &t))
    }

    fn elem_of(&self, e: &Expr) -> Result<Ty, TypeError> {
        match self.infer(e)? {
            Ty::Power(t) => Ok(*t),
            Ty::Any => Ok(Ty::Any),
            t => Err(self.mismatch(e, &"a set", &t)),
        }
    }

    fn relation_of(&self, e: &Expr) -> Result<(Ty, Ty), TypeError> {
        match self.expect(e, &Ty::power(Ty::pair(Ty::Any, Ty::Any)))? {
            Ty::Power(p) => match *p {
                Ty::Pair(a, b) => Ok((*a, *b)),
                _ => Ok((Ty::Any, Ty::Any)),
            },
            _ => Ok((Ty::Any, Ty::Any)),
        }
    }

    fn infer(&self, e: &Expr) -> Result<Ty, TypeError> {
        match e {
            Expr::Ident(n) => self.ident(n),
            Expr::Empty => Ok(Ty::power(Ty::Any)),
            Expr::SetLit(els) => {
                let mut t = Ty::Any;
                for x in els {
                    let tx = self.infer(x)?;
                    t = unify(&t, &tx).ok_or_else(|| self.mismatch(x, &t, &tx))?;
                }
                Ok(Ty::power(t))
            }
            Expr::Union(a, b) | Expr::Inter(a, b) | Expr::Diff(a, b) => {
                let ta = self.expect(a, &Ty::power(Ty::Any))?;
                self.expect(b, &ta)
            }
            Expr::Override(a, b) => {
                let ta = self.expect(a, &Ty::power(Ty::pair(Ty::Any, Ty::Any)))?;
                self.expect(b, &ta)
            }
            Expr::Dom(r) => Ok(Ty::power(self.relation_of(r)?.0)),
            Expr::Ran(r) => Ok(Ty::power(self.relation_of(r)?.1)),
            Expr::DomSub(s, r) | Expr::DomRes(s, r) => {
                let (a, b) = self.relation_of(r)?;
                let ts = self.expect(s, &Ty::power(a))?;
                let a = match ts {
                    Ty::Power(a) => *a,
                    _ => Ty::Any,
                };
                Ok(Ty::power(Ty::pair(a, b)))
            }
            Expr::RanSub(r, s) | Expr::RanRes(r, s) => {
                let (a, b) = self.relation_of(r)?;
                let ts = self.expect(s, &Ty::power(b))?;
                let b = match ts {
                    Ty::Power(b) => *b,
                    _ => Ty::Any,
                };
                Ok(Ty::power(Ty::pair(a, b)))
            }
            Expr::Maplet(a, b) => Ok(Ty::pair(self.infer(a)?, self.infer(b)?)),
            Expr::Apply(f, x) => {
                let (a, b) = self.relation_of(f)?;
                self.expect(x, &a)?;
                Ok(b)
            }
        }
    }

    fn check_pred(&self, p: &Pred) -> Result<(), TypeError> {
        match p {
            Pred::True | Pred::False => Ok(()),
            Pred::And(a, b) => {
                self.check_pred(a)?;
                self.check_pred(b)
            }
            Pred::Not(a) => self.check_pred(a),
            Pred::In(x, s) => {
                let el = self.elem_of(s)?;
                let t = self.expect(x, &el)?;
                self.determined(x, &t)
            }
            Pred::Subset(a, b) | Pred::Eq(a, b) | Pred::Neq(a, b) => {
                let ta = self.infer(a)?;
                let t = self.expect(b, &ta)?;
                self.determined(a, &t)
            }
            Pred::Rel(f, a, b, _) => {
                let ea = self.elem_of(a)?;
                let eb = self.elem_of(b)?;
                let t = self.expect(f, &Ty::power(Ty::pair(ea, eb)))?;
                self.determined(f, &t)
            }
        }
    }

    fn determined(&self, e: &Expr, t: &Ty) -> Result<(), TypeError> {
        if t.to_set().is_some() {
            Ok(())
        } else {
            Err(TypeError::Ambiguous { expr: e.to_string(), context: self.ctx.clone() })
        }
    }
}

/// Type of a closed expression in `env`.
pub fn type_of(e: &Expr, env: &TypeEnv) -> Result<SetType, TypeError> {
    let c = Checker { env, locals: BTreeMap::new(), ctx: "expression".into() };
    let t = c.infer(e)?;
    t.to_set().ok_or_else(|| TypeError::Ambiguous { expr: e.to_string(), context: c.ctx.clone() })
}

/// Checks `e` against `expected` in `env`.
pub fn check_expr(e: &Expr, env: &TypeEnv, expected: &SetType) -> Result<(), TypeError> {
    let c = Checker { env, locals: BTreeMap::new(), ctx: "expression".into() };
    c.expect(e, &Ty::from_set(expected)).map(|_| ())
}

/// Checks a predicate in `env`, with extra local identifiers.
pub fn check_pred(
    p: &Pred,
    env: &TypeEnv,
    locals: &BTreeMap<String, SetType>,
) -> Result<(), TypeError> {
    let c = Checker {
        env,
        locals: locals.iter().map(|(k, v)| (k.clone(), Ty::from_set(v))).collect(),
        ctx: "predicate".into(),
    };
    c.check_pred(p)
}

/// Whether variable `a` of one machine and `b` of another may be merged:
/// their types must coincide once each machine's given-set parameters are
/// replaced by the actual sets of `binding_a` / `binding_b`.
pub fn unifiable(
    a: &str,
    b: &str,
    env_a: &TypeEnv,
    env_b: &TypeEnv,
    binding_a: &BTreeMap<String, SetType>,
    binding_b: &BTreeMap<String, SetType>,
) -> Result<(), TypeError> {
    let ty = |n: &str, env: &TypeEnv, bind: &BTreeMap<String, SetType>| {
        env.lookup(n)
            .filter(|e| e.kind == IdentKind::Variable)
            .map(|e| e.ty.subst_given(bind))
            .ok_or_else(|| TypeError::UndeclaredIdentifier { name: n.to_string(), context: "unification".into() })
    };
    let (ta, tb) = (ty(a, env_a, binding_a)?, ty(b, env_b, binding_b)?);
    if ta == tb {
        Ok(())
    } else {
        Err(TypeError::TypeMismatch {
            expr: format!("{a} = {b}"),
            expected: ta.to_string(),
            found: tb.to_string(),
            context: "unification".into(),
        })
    }
}

/// Types `m`, resolving included, extended and refined machines via `src`.
pub fn typecheck(m: &Machine, src: &dyn MachineSource) -> Result<TypedMachine, TypeError> {
    let mut stack = Vec::new();
    check_machine(m, src, &mut stack)
}

fn check_machine(
    m: &Machine,
    src: &dyn MachineSource,
    stack: &mut Vec<String>,
) -> Result<TypedMachine, TypeError> {
    if stack.contains(&m.name) {
        return Err(TypeError::CyclicInclude(m.name.clone()));
    }
    stack.push(m.name.clone());
    let r = check_machine_inner(m, src, stack);
    stack.pop();
    r
}

fn declare(env: &mut TypeEnv, name: &str, entry: Entry, context: &str) -> Result<(), TypeError> {
    match env.entries.get(name) {
        Some(old) if *old == entry => Ok(()),
        Some(_) => Err(TypeError::Duplicate { name: name.into(), context: context.into() }),
        None if env.aliases.contains_key(name) => {
            Err(TypeError::Duplicate { name: name.into(), context: context.into() })
        }
        None => {
            env.entries.insert(name.into(), entry);
            Ok(())
        }
    }
}

fn import(
    env: &mut TypeEnv,
    t: &TypedMachine,
    map: &BTreeMap<String, SetType>,
    context: &str,
) -> Result<Vec<String>, TypeError> {
    let via = &t.machine.name;
    for (name, e) in &t.env.entries {
        if e.kind == IdentKind::Parameter {
            continue;
        }
        let origin = match &e.origin {
            Origin::Own => Origin::Included(via.clone()),
            o => o.clone(),
        };
        declare(env, name, Entry { ty: e.ty.subst_given(map), kind: e.kind, origin }, context)?;
    }
    for (g, els) in &t.env.given {
        if !map.contains_key(g) {
            env.declare_given(g, els.clone());
        }
    }
    let mut names = Vec::new();
    for name in &t.exported {
        let Some(sig) = t.env.ops.get(name) else { continue };
        let sub = |v: &[(String, SetType)]| {
            v.iter().map(|(n, ty)| (n.clone(), ty.subst_given(map))).collect::<Vec<_>>()
        };
        let sig = OpSig {
            machine: sig.machine.clone(),
            inputs: sub(&sig.inputs),
            outputs: sub(&sig.outputs),
            origin: Origin::Included(via.clone()),
            writes: sig.writes.clone(),
        };
        match env.ops.get(name) {
            Some(old) if *old == sig => {}
            Some(_) => return Err(TypeError::Duplicate { name: name.clone(), context: context.into() }),
            None => {
                env.ops.insert(name.clone(), sig);
            }
        }
        names.push(name.clone());
    }
    Ok(names)
}

/// First conjunct of the shape `v : S`, `v <: S`, `v : A k B` or `v = e`
/// whose right-hand side types, for every name in `names`.
fn infer_from_conjuncts(
    names: &[String],
    conjuncts: &[&Pred],
    env: &TypeEnv,
    locals: &BTreeMap<String, Ty>,
    context: &str,
) -> Result<BTreeMap<String, Ty>, TypeError> {
    let mut typed: BTreeMap<String, Ty> = BTreeMap::new();
    for c in conjuncts {
        let (v, rhs): (&str, Box<dyn Fn(&Checker) -> Result<Ty, TypeError>>) = match c {
            Pred::In(Expr::Ident(v), s) => (v, Box::new(move |ch: &Checker| ch.elem_of(s))),
            Pred::Subset(Expr::Ident(v), s) | Pred::Eq(Expr::Ident(v), s) => {
                (v, Box::new(move |ch: &Checker| ch.infer(s)))
            }
            Pred::Rel(Expr::Ident(v), a, b, _) => (
                v,
                Box::new(move |ch: &Checker| Ok(Ty::power(Ty::pair(ch.elem_of(a)?, ch.elem_of(b)?)))),
            ),
            _ => continue,
        };
        if !names.iter().any(|n| n == v) || typed.contains_key(v) {
            continue;
        }
        let mut all = locals.clone();
        all.extend(typed.iter().map(|(k, t)| (k.clone(), t.clone())));
        let ch = Checker { env, locals: all, ctx: context.into() };
        if let Ok(t) = rhs(&ch) {
            if t.to_set().is_some() {
                typed.insert(v.to_string(), t);
            }
        }
    }
    for n in names {
        if !typed.contains_key(n) {
            return Err(TypeError::MissingTypingConjunct { name: n.clone(), context: context.into() });
        }
    }
    Ok(typed)
}

fn writes(s: &Subst, env: &TypeEnv) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    match s {
        Subst::Skip => {}
        Subst::Assign(xs, _) => out.extend(xs.iter().map(|x| env.resolve_alias(x).to_string())),
        Subst::FunAssign(f, _, _) => {
            out.insert(env.resolve_alias(f).to_string());
        }
        Subst::Parallel(a, b) => {
            out.extend(writes(a, env));
            out.extend(writes(b, env));
        }
        Subst::Pre(_, b) => out.extend(writes(b, env)),
        Subst::Call { outputs, op, .. } => {
            out.extend(outputs.iter().map(|x| env.resolve_alias(x).to_string()));
            if let Some(sig) = env.ops.get(op) {
                out.extend(sig.writes.iter().cloned());
            }
        }
    }
    out
}

struct Scope<'a> {
    inputs: &'a [String],
    outputs: &'a [String],
}

impl Checker<'_> {
    fn assignable(&self, name: &str, scope: &Scope) -> Result<Ty, TypeError> {
        let violation = |owner: String| TypeError::VisibilityViolation {
            name: name.into(),
            owner,
            context: self.ctx.clone(),
        };
        if scope.outputs.iter().any(|o| o == name) {
            return self.ident(name);
        }
        if scope.inputs.iter().any(|o| o == name) {
            return Err(violation("input parameter".into()));
        }
        match self.env.lookup(name) {
            Some(Entry { kind: IdentKind::Variable, origin: Origin::Own, ty }) => Ok(Ty::from_set(ty)),
            Some(Entry { kind: IdentKind::Variable, origin: Origin::Included(m), .. }) => {
                Err(violation(format!("variable of {m}")))
            }
            Some(_) => Err(violation("constant".into())),
            None => self.ident(name),
        }
    }

    fn check_subst(&self, s: &Subst, scope: &Scope) -> Result<(), TypeError> {
        match s {
            Subst::Skip => Ok(()),
            Subst::Assign(xs, es) => {
                for (x, e) in xs.iter().zip(es) {
                    let t = self.assignable(x, scope)?;
                    self.expect(e, &t)?;
                }
                Ok(())
            }
            Subst::FunAssign(f, x, v) => {
                let t = self.assignable(f, scope)?;
                let (a, b) = self.relation_of(&Expr::id(f.clone())).map_err(|_| {
                    self.mismatch(&Expr::id(f.clone()), &"a relation", &t)
                })?;
                self.expect(x, &a)?;
                self.expect(v, &b)?;
                Ok(())
            }
            Subst::Parallel(a, b) => {
                self.check_subst(a, scope)?;
                self.check_subst(b, scope)?;
                let wa = writes(a, self.env);
                if let Some(n) = writes(b, self.env).iter().find(|n| wa.contains(*n)) {
                    return Err(TypeError::ParallelClash { name: n.clone(), context: self.ctx.clone() });
                }
                Ok(())
            }
            Subst::Pre(p, b) => {
                self.check_pred(p)?;
                self.check_subst(b, scope)
            }
            Subst::Call { outputs, op, args } => {
                let sig = match self.env.ops.get(op) {
                    Some(sig) if sig.origin != Origin::Own => sig,
                    _ => {
                        return Err(TypeError::UnknownOperation { name: op.clone(), context: self.ctx.clone() })
                    }
                };
                if sig.inputs.len() != args.len() {
                    return Err(self.arity(op, sig.inputs.len(), args.len()));
                }
                if sig.outputs.len() != outputs.len() {
                    return Err(self.arity(op, sig.outputs.len(), outputs.len()));
                }
                for (a, (_, t)) in args.iter().zip(&sig.inputs) {
                    self.expect(a, &Ty::from_set(t))?;
                }
                for (o, (_, t)) in outputs.iter().zip(&sig.outputs) {
                    let to = self.assignable(o, scope)?;
                    let want = Ty::from_set(t);
                    unify(&to, &want).ok_or_else(|| self.mismatch(&Expr::id(o.clone()), &want, &to))?;
                }
                Ok(())
            }
        }
    }

    fn arity(&self, name: &str, expected: usize, found: usize) -> TypeError {
        TypeError::Arity { name: name.into(), expected, found, context: self.ctx.clone() }
    }
}

/// Type of each output from its first assignment in `s`.
fn infer_outputs(
    s: &Subst,
    outputs: &[String],
    ch: &Checker,
    typed: &mut BTreeMap<String, Ty>,
) {
    match s {
        Subst::Assign(xs, es) => {
            for (x, e) in xs.iter().zip(es) {
                if outputs.contains(x) && !typed.contains_key(x) {
                    if let Ok(t) = ch.infer(e) {
                        if t.to_set().is_some() {
                            typed.insert(x.clone(), t);
                        }
                    }
                }
            }
        }
        Subst::Parallel(a, b) => {
            infer_outputs(a, outputs, ch, typed);
            infer_outputs(b, outputs, ch, typed);
        }
        Subst::Pre(_, b) => infer_outputs(b, outputs, ch, typed),
        Subst::Call { outputs: outs, op, .. } => {
            if let Some(sig) = ch.env.ops.get(op) {
                for (x, (_, t)) in outs.iter().zip(&sig.outputs) {
                    if outputs.contains(x) && !typed.contains_key(x) {
                        typed.insert(x.clone(), Ty::from_set(t));
                    }
                }
            }
        }
        Subst::Skip | Subst::FunAssign(..) => {}
    }
}

fn check_machine_inner(
    m: &Machine,
    src: &dyn MachineSource,
    stack: &mut Vec<String>,
) -> Result<TypedMachine, TypeError> {
    let ctx = |clause: &str| format!("machine {}, {}", m.name, clause);
    let mut env = TypeEnv::default();
    let own = |ty: SetType, kind: IdentKind| Entry { ty, kind, origin: Origin::Own };

    for p in &m.parameters {
        declare(&mut env, p, own(SetType::power(SetType::given(p)), IdentKind::Parameter), &ctx("parameters"))?;
        env.declare_given(p, None);
    }
    for s in &m.sets {
        declare(&mut env, &s.name, own(SetType::power(SetType::given(&s.name)), IdentKind::Set), &ctx("SETS"))?;
        env.declare_given(&s.name, s.elements.clone());
        for el in s.elements.iter().flatten() {
            declare(&mut env, el, own(SetType::given(&s.name), IdentKind::EnumConst), &ctx("SETS"))?;
        }
    }

    let mut exported = Vec::new();
    let n_includes = m.includes.len();
    for (i, inst) in m.instances().enumerate() {
        let clause = if i < n_includes { "INCLUDES" } else { "EXTENDS" };
        let inc = src
            .machine(&inst.machine)
            .ok_or_else(|| TypeError::UnresolvedMachine(inst.machine.clone()))?;
        let t = check_machine(inc, src, stack)?;
        if inst.actuals.len() != inc.parameters.len() {
            return Err(TypeError::Arity {
                name: inst.machine.clone(),
                expected: inc.parameters.len(),
                found: inst.actuals.len(),
                context: ctx(clause),
            });
        }
        let ch = Checker { env: &env, locals: BTreeMap::new(), ctx: ctx(clause) };
        let mut map = BTreeMap::new();
        for (formal, actual) in inc.parameters.iter().zip(&inst.actuals) {
            let ty = ch.infer(actual)?;
            match ty.to_set() {
                Some(SetType::Power(el)) => {
                    map.insert(formal.clone(), *el);
                }
                _ => return Err(ch.mismatch(actual, &"a set", &ty)),
            }
        }
        let names = import(&mut env, &t, &map, &ctx(clause))?;
        if i >= n_includes {
            exported.extend(names);
        }
    }

    if let Some(a) = &m.refines {
        let am = src.machine(a).ok_or_else(|| TypeError::UnresolvedMachine(a.clone()))?;
        let t = check_machine(am, src, stack)?;
        for (name, e) in &t.env.entries {
            if e.origin == Origin::Own && !env.entries.contains_key(name) {
                let entry = Entry { origin: Origin::Included(a.clone()), ..e.clone() };
                env.entries.insert(name.clone(), entry);
            }
        }
        for (g, els) in &t.env.given {
            env.declare_given(g, els.clone());
        }
    }

    for (new, old) in m.definitions.pairs() {
        let target = env.resolve_alias(old).to_string();
        if !env.entries.contains_key(&target) {
            return Err(TypeError::UndeclaredIdentifier { name: old.clone(), context: ctx("DEFINITIONS") });
        }
        if env.lookup(new).is_some() {
            return Err(TypeError::Duplicate { name: new.clone(), context: ctx("DEFINITIONS") });
        }
        env.aliases.insert(new.clone(), target);
    }

    let conj = m.invariant.conjuncts();
    for v in &m.variables {
        if env.lookup(v).is_some() {
            return Err(TypeError::Duplicate { name: v.clone(), context: ctx("VARIABLES") });
        }
    }
    let vt = infer_from_conjuncts(&m.variables, &conj, &env, &BTreeMap::new(), &ctx("INVARIANT"))?;
    for v in &m.variables {
        let ty = vt[v].to_set().unwrap_or_else(|| SetType::given("?"));
        env.entries.insert(v.clone(), own(ty, IdentKind::Variable));
    }
    let ch = Checker { env: &env, locals: BTreeMap::new(), ctx: ctx("INVARIANT") };
    ch.check_pred(&m.invariant)?;

    let ch = Checker { env: &env, locals: BTreeMap::new(), ctx: ctx("INITIALISATION") };
    ch.check_subst(&m.initialisation, &Scope { inputs: &[], outputs: &[] })?;

    let mut locals = BTreeMap::new();
    let mut sigs = Vec::new();
    let mut seen = BTreeSet::new();
    for op in &m.operations {
        let octx = format!("machine {}, operation {}", m.name, op.name);
        if !seen.insert(op.name.clone()) {
            return Err(TypeError::Duplicate { name: op.name.clone(), context: ctx("OPERATIONS") });
        }
        let mut names_seen = BTreeSet::new();
        for n in op.inputs.iter().chain(&op.outputs) {
            if env.lookup(n).is_some() || !names_seen.insert(n) {
                return Err(TypeError::Duplicate { name: n.clone(), context: octx.clone() });
            }
        }
        let (pre, _) = op.split_pre();
        let it = infer_from_conjuncts(&op.inputs, &pre.conjuncts(), &env, &BTreeMap::new(), &octx)?;
        let mut ch = Checker { env: &env, locals: it.clone(), ctx: octx.clone() };
        let mut ot = BTreeMap::new();
        infer_outputs(&op.body, &op.outputs, &ch, &mut ot);
        for o in &op.outputs {
            if !ot.contains_key(o) {
                return Err(TypeError::MissingTypingConjunct { name: o.clone(), context: octx.clone() });
            }
        }
        ch.locals.extend(ot.clone());
        ch.check_subst(&op.body, &Scope { inputs: &op.inputs, outputs: &op.outputs })?;
        let to_set = |names: &[String], tys: &BTreeMap<String, Ty>| -> Vec<(String, SetType)> {
            names
                .iter()
                .map(|n| (n.clone(), tys[n].to_set().unwrap_or_else(|| SetType::given("?"))))
                .collect()
        };
        let inputs = to_set(&op.inputs, &it);
        let outputs = to_set(&op.outputs, &ot);
        let mut w = writes(&op.body, &env);
        for o in &op.outputs {
            w.remove(o);
        }
        locals.insert(op.name.clone(), inputs.iter().chain(&outputs).cloned().collect());
        sigs.push((op.name.clone(), OpSig {
            machine: m.name.clone(),
            inputs,
            outputs,
            origin: Origin::Own,
            writes: w,
        }));
    }

    for p in &m.promotes {
        match env.ops.get(p) {
            Some(sig) if sig.origin != Origin::Own => {}
            _ => return Err(TypeError::UnknownOperation { name: p.clone(), context: ctx("PROMOTES") }),
        }
        if seen.contains(p) {
            return Err(TypeError::Duplicate { name: p.clone(), context: ctx("PROMOTES") });
        }
    }
    for (name, sig) in sigs {
        exported.push(name.clone());
        env.ops.insert(name, sig);
    }
    exported.extend(m.promotes.iter().cloned());
    exported.sort();
    exported.dedup();

    Ok(TypedMachine { machine: m.clone(), env, locals, exported })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::Library;
    use crate::parser::{parse_expr, parse_machine_str};

    fn check(text: &str) -> Result<TypedMachine, TypeError> {
        typecheck(&parse_machine_str(text).unwrap(), &Library::embedded())
    }

    #[test]
    fn corpus_typechecks() {
        let lib = Library::embedded();
        for name in ["Composite_Pattern", "Resource_Allocation", "Comp_By_Unif_Inst", "Extension"] {
            let m = lib.machine(name).unwrap();
            if let Err(e) = typecheck(m, &lib) {
                panic!("{name}: {e}");
            }
        }
    }

    #[test]
    fn variable_types_follow_first_typing_conjunct() {
        let t = typecheck(Library::embedded().machine("Composite_Pattern").unwrap(), &Library::embedded())
            .unwrap();
        let c = SetType::given("COMPONENT");
        assert_eq!(t.env.lookup("Component").unwrap().ty, SetType::power(c.clone()));
        assert_eq!(t.env.lookup("Father").unwrap().ty, SetType::relation(c.clone(), c.clone()));
        assert_eq!(t.locals["GetChild"]["children"], SetType::power(c.clone()));
        assert_eq!(t.locals["Add_Leaf"]["cpt"], c);
    }

    #[test]
    fn included_types_are_instantiated() {
        let t = typecheck(Library::embedded().machine("Comp_By_Unif_Inst").unwrap(), &Library::embedded())
            .unwrap();
        let el = SetType::given("ELEMENT");
        assert_eq!(t.env.lookup("Directory").unwrap().ty, SetType::power(el.clone()));
        assert_eq!(t.env.lookup("Provides").unwrap().ty, SetType::relation(el, SetType::given("FACILITY")));
        assert_eq!(t.env.lookup("Father").unwrap().origin, Origin::Included("Composite_Pattern".into()));
    }

    #[test]
    fn missing_typing_conjunct_names_the_variable() {
        let e = check("MACHINE M VARIABLES x, y INVARIANT y = {} END").unwrap_err();
        assert!(matches!(e, TypeError::MissingTypingConjunct { ref name, .. } if name == "x"), "{e}");
    }

    #[test]
    fn mismatch_reports_both_types() {
        let e = check("MACHINE M SETS A; B VARIABLES x, y INVARIANT x <: A & y <: B & x = y END")
            .unwrap_err();
        match e {
            TypeError::TypeMismatch { expected, found, .. } => {
                assert_eq!(expected, "POW(A)");
                assert_eq!(found, "POW(B)");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn assigning_included_variable_is_rejected() {
        let e = check(
            "MACHINE M SETS E INCLUDES Composite_Pattern(E) \
             OPERATIONS op = Leaf := {} END",
        )
        .unwrap_err();
        assert!(matches!(e, TypeError::VisibilityViolation { ref name, .. } if name == "Leaf"), "{e}");
    }

    #[test]
    fn parallel_calls_into_same_machine_clash() {
        let e = check(
            "MACHINE M SETS E INCLUDES Composite_Pattern(E) \
             OPERATIONS op(a, b) = PRE a : E & b : E THEN New_Leaf(a) || New_Leaf(b) END END",
        )
        .unwrap_err();
        assert!(matches!(e, TypeError::ParallelClash { .. }), "{e}");
    }

    #[test]
    fn undeclared_and_ambiguous() {
        let env = TypeEnv::default();
        assert!(matches!(
            type_of(&parse_expr("x").unwrap(), &env),
            Err(TypeError::UndeclaredIdentifier { .. })
        ));
        assert!(matches!(type_of(&Expr::Empty, &env), Err(TypeError::Ambiguous { .. })));
    }

    #[test]
    fn cyclic_include_detected() {
        let mut lib = Library::new();
        lib.insert(parse_machine_str("MACHINE A INCLUDES B END").unwrap());
        lib.insert(parse_machine_str("MACHINE B INCLUDES A END").unwrap());
        let e = typecheck(lib.machine("A").unwrap(), &lib).unwrap_err();
        assert_eq!(e, TypeError::CyclicInclude("A".into()));
    }
}
