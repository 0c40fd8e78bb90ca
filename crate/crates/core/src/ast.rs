//! Abstract syntax for machines, predicates, set expressions and generalized
//! substitutions, together with the identifier-level transformations every
//! other module builds on (renaming, substitution, free identifiers).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Set expressions. Scalars (elements, pairs) share this type; typing tells
/// them apart.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Ident(String),
    SetLit(Vec<Expr>),
    Empty,
    Union(Box<Expr>, Box<Expr>),
    Inter(Box<Expr>, Box<Expr>),
    Diff(Box<Expr>, Box<Expr>),
    Dom(Box<Expr>),
    Ran(Box<Expr>),
    /// `s <<| r`
    DomSub(Box<Expr>, Box<Expr>),
    /// `r |>> s`
    RanSub(Box<Expr>, Box<Expr>),
    /// `s <| r`
    DomRes(Box<Expr>, Box<Expr>),
    /// `r |> s`
    RanRes(Box<Expr>, Box<Expr>),
    /// `f <+ g`
    Override(Box<Expr>, Box<Expr>),
    Maplet(Box<Expr>, Box<Expr>),
    Apply(Box<Expr>, Box<Expr>),
}

/// The relation arrows admitted on the right of `:`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelKind {
    Relation,
    PartialFunction,
    TotalFunction,
    PartialInjection,
    TotalInjection,
    PartialSurjection,
    TotalSurjection,
    Bijection,
}

impl RelKind {
    pub const ALL: [RelKind; 8] = [
        RelKind::Relation,
        RelKind::PartialFunction,
        RelKind::TotalFunction,
        RelKind::PartialInjection,
        RelKind::TotalInjection,
        RelKind::PartialSurjection,
        RelKind::TotalSurjection,
        RelKind::Bijection,
    ];

    pub fn arrow(self) -> &'static str {
        match self {
            RelKind::Relation => "<->",
            RelKind::PartialFunction => "+->",
            RelKind::TotalFunction => "-->",
            RelKind::PartialInjection => ">+>",
            RelKind::TotalInjection => ">->",
            RelKind::PartialSurjection => "+->>",
            RelKind::TotalSurjection => "-->>",
            RelKind::Bijection => ">->>",
        }
    }

    pub fn is_functional(self) -> bool {
        !matches!(self, RelKind::Relation)
    }

    pub fn is_total(self) -> bool {
        matches!(
            self,
            RelKind::TotalFunction
                | RelKind::TotalInjection
                | RelKind::TotalSurjection
                | RelKind::Bijection
        )
    }

    pub fn is_injective(self) -> bool {
        matches!(
            self,
            RelKind::PartialInjection | RelKind::TotalInjection | RelKind::Bijection
        )
    }

    pub fn is_surjective(self) -> bool {
        matches!(
            self,
            RelKind::PartialSurjection | RelKind::TotalSurjection | RelKind::Bijection
        )
    }
}

/// Quantifier-free predicates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pred {
    True,
    False,
    And(Box<Pred>, Box<Pred>),
    Not(Box<Pred>),
    In(Expr, Expr),
    Subset(Expr, Expr),
    Eq(Expr, Expr),
    Neq(Expr, Expr),
    /// `e : src k dst`
    Rel(Expr, Expr, Expr, RelKind),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subst {
    Skip,
    Assign(Vec<String>, Vec<Expr>),
    /// `f(index) := value`
    FunAssign(String, Expr, Expr),
    Parallel(Box<Subst>, Box<Subst>),
    Pre(Pred, Box<Subst>),
    Call {
        outputs: Vec<String>,
        op: String,
        args: Vec<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Operation {
    pub name: String,
    pub outputs: Vec<String>,
    pub inputs: Vec<String>,
    pub body: Subst,
}

impl Operation {
    /// The precondition (truth when the body has none) and the guarded body.
    pub fn split_pre(&self) -> (&Pred, &Subst) {
        const TRUE: &Pred = &Pred::True;
        match &self.body {
            Subst::Pre(p, s) => (p, s),
            s => (TRUE, s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MachineKind {
    Abstract,
    Refinement,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SetDecl {
    pub name: String,
    pub elements: Option<Vec<String>>,
}

impl SetDecl {
    pub fn deferred(name: impl Into<String>) -> Self {
        SetDecl { name: name.into(), elements: None }
    }
}

/// A reference to another machine with its actual parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance {
    pub machine: String,
    pub actuals: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Machine {
    pub kind: MachineKind,
    pub name: String,
    pub parameters: Vec<String>,
    pub refines: Option<String>,
    pub sets: Vec<SetDecl>,
    pub variables: Vec<String>,
    pub definitions: RenamingMap,
    pub includes: Vec<Instance>,
    pub extends: Vec<Instance>,
    pub promotes: Vec<String>,
    pub invariant: Pred,
    pub initialisation: Subst,
    pub operations: Vec<Operation>,
}

impl Machine {
    pub fn new(kind: MachineKind, name: impl Into<String>) -> Self {
        Machine {
            kind,
            name: name.into(),
            parameters: Vec::new(),
            refines: None,
            sets: Vec::new(),
            variables: Vec::new(),
            definitions: RenamingMap::default(),
            includes: Vec::new(),
            extends: Vec::new(),
            promotes: Vec::new(),
            invariant: Pred::True,
            initialisation: Subst::Skip,
            operations: Vec::new(),
        }
    }

    pub fn operation(&self, name: &str) -> Option<&Operation> {
        self.operations.iter().find(|o| o.name == name)
    }

    /// Every include and extend, in clause order.
    pub fn instances(&self) -> impl Iterator<Item = &Instance> {
        self.includes.iter().chain(self.extends.iter())
    }

    /// Every name the machine declares or mentions, excluding machine names.
    pub fn all_identifiers(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        out.extend(self.parameters.iter().cloned());
        for s in &self.sets {
            out.insert(s.name.clone());
            if let Some(els) = &s.elements {
                out.extend(els.iter().cloned());
            }
        }
        out.extend(self.variables.iter().cloned());
        for (n, o) in self.definitions.pairs() {
            out.insert(n.clone());
            out.insert(o.clone());
        }
        for inst in self.instances() {
            for a in &inst.actuals {
                out.extend(a.free_identifiers());
            }
        }
        out.extend(self.promotes.iter().cloned());
        out.extend(self.invariant.free_identifiers());
        out.extend(self.initialisation.free_identifiers());
        for op in &self.operations {
            out.insert(op.name.clone());
            out.extend(op.outputs.iter().cloned());
            out.extend(op.inputs.iter().cloned());
            out.extend(op.body.free_identifiers());
            op.body.collect_called_ops(&mut out);
        }
        out
    }
}

/// Ordered `new -> old` pairs, injective in both directions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct RenamingMap {
    pairs: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AstError {
    #[error("renaming is not injective: `{0}` appears twice")]
    NotInjective(String),
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("new name `{0}` collides with an existing name")]
    Collision(String),
    #[error("call to `{0}` cannot be resolved")]
    UnresolvedCall(String),
}

impl RenamingMap {
    pub fn new<I, A, B>(pairs: I) -> Result<Self, AstError>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let mut map = RenamingMap::default();
        for (n, o) in pairs {
            map.insert(n.into(), o.into())?;
        }
        Ok(map)
    }

    pub fn insert(&mut self, new: String, old: String) -> Result<(), AstError> {
        if self.pairs.iter().any(|(n, _)| *n == new) {
            return Err(AstError::NotInjective(new));
        }
        if self.pairs.iter().any(|(_, o)| *o == old) {
            return Err(AstError::NotInjective(old));
        }
        self.pairs.push((new, old));
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn inverse(&self) -> RenamingMap {
        RenamingMap { pairs: self.pairs.iter().map(|(n, o)| (o.clone(), n.clone())).collect() }
    }

    pub fn new_for(&self, old: &str) -> Option<&str> {
        self.pairs.iter().find(|(_, o)| o == old).map(|(n, _)| n.as_str())
    }

    pub fn old_for(&self, new: &str) -> Option<&str> {
        self.pairs.iter().find(|(n, _)| n == new).map(|(_, o)| o.as_str())
    }

    /// The `old -> new` direction as a lookup table.
    pub fn forward(&self) -> BTreeMap<String, String> {
        self.pairs.iter().map(|(n, o)| (o.clone(), n.clone())).collect()
    }
}

/// Applies a total identifier map to every identifier occurrence.
pub trait MapIdents: Sized {
    fn map_idents(&self, f: &dyn Fn(&str) -> String) -> Self;
}

fn bx<T>(t: T) -> Box<T> {
    Box::new(t)
}

impl MapIdents for Expr {
    fn map_idents(&self, f: &dyn Fn(&str) -> String) -> Self {
        let m = |e: &Expr| bx(e.map_idents(f));
        match self {
            Expr::Ident(n) => Expr::Ident(f(n)),
            Expr::SetLit(es) => Expr::SetLit(es.iter().map(|e| e.map_idents(f)).collect()),
            Expr::Empty => Expr::Empty,
            Expr::Union(a, b) => Expr::Union(m(a), m(b)),
            Expr::Inter(a, b) => Expr::Inter(m(a), m(b)),
            Expr::Diff(a, b) => Expr::Diff(m(a), m(b)),
            Expr::Dom(a) => Expr::Dom(m(a)),
            Expr::Ran(a) => Expr::Ran(m(a)),
            Expr::DomSub(a, b) => Expr::DomSub(m(a), m(b)),
            Expr::RanSub(a, b) => Expr::RanSub(m(a), m(b)),
            Expr::DomRes(a, b) => Expr::DomRes(m(a), m(b)),
            Expr::RanRes(a, b) => Expr::RanRes(m(a), m(b)),
            Expr::Override(a, b) => Expr::Override(m(a), m(b)),
            Expr::Maplet(a, b) => Expr::Maplet(m(a), m(b)),
            Expr::Apply(a, b) => Expr::Apply(m(a), m(b)),
        }
    }
}

impl MapIdents for Pred {
    fn map_idents(&self, f: &dyn Fn(&str) -> String) -> Self {
        match self {
            Pred::True => Pred::True,
            Pred::False => Pred::False,
            Pred::And(a, b) => Pred::And(bx(a.map_idents(f)), bx(b.map_idents(f))),
            Pred::Not(a) => Pred::Not(bx(a.map_idents(f))),
            Pred::In(a, b) => Pred::In(a.map_idents(f), b.map_idents(f)),
            Pred::Subset(a, b) => Pred::Subset(a.map_idents(f), b.map_idents(f)),
            Pred::Eq(a, b) => Pred::Eq(a.map_idents(f), b.map_idents(f)),
            Pred::Neq(a, b) => Pred::Neq(a.map_idents(f), b.map_idents(f)),
            Pred::Rel(e, s, t, k) => Pred::Rel(e.map_idents(f), s.map_idents(f), t.map_idents(f), *k),
        }
    }
}

impl MapIdents for Subst {
    fn map_idents(&self, f: &dyn Fn(&str) -> String) -> Self {
        match self {
            Subst::Skip => Subst::Skip,
            Subst::Assign(ts, vs) => Subst::Assign(
                ts.iter().map(|t| f(t)).collect(),
                vs.iter().map(|v| v.map_idents(f)).collect(),
            ),
            Subst::FunAssign(g, i, v) => Subst::FunAssign(f(g), i.map_idents(f), v.map_idents(f)),
            Subst::Parallel(a, b) => Subst::Parallel(bx(a.map_idents(f)), bx(b.map_idents(f))),
            Subst::Pre(p, s) => Subst::Pre(p.map_idents(f), bx(s.map_idents(f))),
            Subst::Call { outputs, op, args } => Subst::Call {
                outputs: outputs.iter().map(|o| f(o)).collect(),
                op: f(op),
                args: args.iter().map(|a| a.map_idents(f)).collect(),
            },
        }
    }
}

impl MapIdents for Operation {
    fn map_idents(&self, f: &dyn Fn(&str) -> String) -> Self {
        Operation {
            name: f(&self.name),
            outputs: self.outputs.iter().map(|o| f(o)).collect(),
            inputs: self.inputs.iter().map(|o| f(o)).collect(),
            body: self.body.map_idents(f),
        }
    }
}

impl MapIdents for Machine {
    /// Machine names (own, refined, included) are left alone.
    fn map_idents(&self, f: &dyn Fn(&str) -> String) -> Self {
        Machine {
            kind: self.kind,
            name: self.name.clone(),
            parameters: self.parameters.iter().map(|p| f(p)).collect(),
            refines: self.refines.clone(),
            sets: self
                .sets
                .iter()
                .map(|s| SetDecl {
                    name: f(&s.name),
                    elements: s.elements.as_ref().map(|els| els.iter().map(|e| f(e)).collect()),
                })
                .collect(),
            variables: self.variables.iter().map(|v| f(v)).collect(),
            definitions: RenamingMap {
                pairs: self.definitions.pairs.iter().map(|(n, o)| (f(n), f(o))).collect(),
            },
            includes: map_instances(&self.includes, f),
            extends: map_instances(&self.extends, f),
            promotes: self.promotes.iter().map(|p| f(p)).collect(),
            invariant: self.invariant.map_idents(f),
            initialisation: self.initialisation.map_idents(f),
            operations: self.operations.iter().map(|o| o.map_idents(f)).collect(),
        }
    }
}

fn map_instances(insts: &[Instance], f: &dyn Fn(&str) -> String) -> Vec<Instance> {
    insts
        .iter()
        .map(|i| Instance {
            machine: i.machine.clone(),
            actuals: i.actuals.iter().map(|a| a.map_idents(f)).collect(),
        })
        .collect()
}

/// Renames every occurrence of each old name in `r` to its new name.
pub fn rename(m: &Machine, r: &RenamingMap) -> Result<Machine, AstError> {
    if r.is_empty() {
        return Ok(m.clone());
    }
    let used = m.all_identifiers();
    for (new, old) in r.pairs() {
        if !used.contains(old) {
            return Err(AstError::UnknownName(old.clone()));
        }
        if used.contains(new) && r.new_for(new).is_none() {
            return Err(AstError::Collision(new.clone()));
        }
    }
    let fwd = r.forward();
    Ok(m.map_idents(&|n| fwd.get(n).cloned().unwrap_or_else(|| n.to_string())))
}

/// Identifier-level renaming without existence checks.
pub fn rename_idents<T: MapIdents>(node: &T, map: &BTreeMap<String, String>) -> T {
    node.map_idents(&|n| map.get(n).cloned().unwrap_or_else(|| n.to_string()))
}

pub trait FreeIdents {
    fn collect_idents(&self, out: &mut BTreeSet<String>);

    fn free_identifiers(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_idents(&mut out);
        out
    }
}

impl FreeIdents for Expr {
    fn collect_idents(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Ident(n) => {
                out.insert(n.clone());
            }
            Expr::SetLit(es) => es.iter().for_each(|e| e.collect_idents(out)),
            Expr::Empty => {}
            Expr::Dom(a) | Expr::Ran(a) => a.collect_idents(out),
            Expr::Union(a, b)
            | Expr::Inter(a, b)
            | Expr::Diff(a, b)
            | Expr::DomSub(a, b)
            | Expr::RanSub(a, b)
            | Expr::DomRes(a, b)
            | Expr::RanRes(a, b)
            | Expr::Override(a, b)
            | Expr::Maplet(a, b)
            | Expr::Apply(a, b) => {
                a.collect_idents(out);
                b.collect_idents(out);
            }
        }
    }
}

impl FreeIdents for Pred {
    fn collect_idents(&self, out: &mut BTreeSet<String>) {
        match self {
            Pred::True | Pred::False => {}
            Pred::And(a, b) => {
                a.collect_idents(out);
                b.collect_idents(out);
            }
            Pred::Not(a) => a.collect_idents(out),
            Pred::In(a, b) | Pred::Subset(a, b) | Pred::Eq(a, b) | Pred::Neq(a, b) => {
                a.collect_idents(out);
                b.collect_idents(out);
            }
            Pred::Rel(e, s, t, _) => {
                e.collect_idents(out);
                s.collect_idents(out);
                t.collect_idents(out);
            }
        }
    }
}

impl FreeIdents for Subst {
    /// Operation names of calls are not identifiers; outputs and arguments are.
    fn collect_idents(&self, out: &mut BTreeSet<String>) {
        match self {
            Subst::Skip => {}
            Subst::Assign(ts, vs) => {
                out.extend(ts.iter().cloned());
                vs.iter().for_each(|v| v.collect_idents(out));
            }
            Subst::FunAssign(f, i, v) => {
                out.insert(f.clone());
                i.collect_idents(out);
                v.collect_idents(out);
            }
            Subst::Parallel(a, b) => {
                a.collect_idents(out);
                b.collect_idents(out);
            }
            Subst::Pre(p, s) => {
                p.collect_idents(out);
                s.collect_idents(out);
            }
            Subst::Call { outputs, args, .. } => {
                out.extend(outputs.iter().cloned());
                args.iter().for_each(|a| a.collect_idents(out));
            }
        }
    }
}

impl Subst {
    fn collect_called_ops(&self, out: &mut BTreeSet<String>) {
        match self {
            Subst::Parallel(a, b) => {
                a.collect_called_ops(out);
                b.collect_called_ops(out);
            }
            Subst::Pre(_, s) => s.collect_called_ops(out),
            Subst::Call { op, .. } => {
                out.insert(op.clone());
            }
            _ => {}
        }
    }

    pub fn called_operations(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_called_ops(&mut out);
        out
    }

    /// Flattens nested parallel composition into its branches.
    pub fn parallel_branches(&self) -> Vec<&Subst> {
        match self {
            Subst::Parallel(a, b) => {
                let mut v = a.parallel_branches();
                v.extend(b.parallel_branches());
                v
            }
            s => vec![s],
        }
    }

    /// Left-nested parallel composition of `branches` (skip when empty).
    pub fn parallel(branches: Vec<Subst>) -> Subst {
        let mut it = branches.into_iter();
        match it.next() {
            None => Subst::Skip,
            Some(first) => it.fold(first, |acc, s| Subst::Parallel(bx(acc), bx(s))),
        }
    }
}

/// Variables written by `s`; calls contribute only their output targets.
pub fn modified_variables(s: &Subst) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_modified(s, &mut out);
    out
}

fn collect_modified(s: &Subst, out: &mut BTreeSet<String>) {
    match s {
        Subst::Skip => {}
        Subst::Assign(ts, _) => out.extend(ts.iter().cloned()),
        Subst::FunAssign(f, _, _) => {
            out.insert(f.clone());
        }
        Subst::Parallel(a, b) => {
            collect_modified(a, out);
            collect_modified(b, out);
        }
        Subst::Pre(_, b) => collect_modified(b, out),
        Subst::Call { outputs, .. } => out.extend(outputs.iter().cloned()),
    }
}

/// Variables written by `s`, following calls through `lookup`. The callee's
/// own output parameters are reported under the caller's actual names.
pub fn modified_variables_transitive<'a>(
    s: &Subst,
    lookup: &dyn Fn(&str) -> Option<&'a Operation>,
) -> Result<BTreeSet<String>, AstError> {
    let mut out = BTreeSet::new();
    collect_modified_transitive(s, lookup, &mut out, 0)?;
    Ok(out)
}

fn collect_modified_transitive<'a>(
    s: &Subst,
    lookup: &dyn Fn(&str) -> Option<&'a Operation>,
    out: &mut BTreeSet<String>,
    depth: usize,
) -> Result<(), AstError> {
    match s {
        Subst::Parallel(a, b) => {
            collect_modified_transitive(a, lookup, out, depth)?;
            collect_modified_transitive(b, lookup, out, depth)
        }
        Subst::Pre(_, b) => collect_modified_transitive(b, lookup, out, depth),
        Subst::Call { outputs, op, .. } => {
            let callee = lookup(op).ok_or_else(|| AstError::UnresolvedCall(op.clone()))?;
            if depth > 64 {
                return Err(AstError::UnresolvedCall(op.clone()));
            }
            let mut inner = BTreeSet::new();
            collect_modified_transitive(&callee.body, lookup, &mut inner, depth + 1)?;
            for v in inner {
                if let Some(i) = callee.outputs.iter().position(|o| *o == v) {
                    if let Some(actual) = outputs.get(i) {
                        out.insert(actual.clone());
                    }
                } else if !callee.inputs.contains(&v) {
                    out.insert(v);
                }
            }
            Ok(())
        }
        other => {
            collect_modified(other, out);
            Ok(())
        }
    }
}

pub type Binding = BTreeMap<String, Expr>;

/// Simultaneous replacement of identifiers by expressions. The language has
/// no binders, so no capture can occur.
pub trait Substitute: Sized {
    fn substitute(&self, b: &Binding) -> Self;
}

impl Substitute for Expr {
    fn substitute(&self, b: &Binding) -> Self {
        if b.is_empty() {
            return self.clone();
        }
        let s = |e: &Expr| bx(e.substitute(b));
        match self {
            Expr::Ident(n) => b.get(n).cloned().unwrap_or_else(|| self.clone()),
            Expr::SetLit(es) => Expr::SetLit(es.iter().map(|e| e.substitute(b)).collect()),
            Expr::Empty => Expr::Empty,
            Expr::Union(x, y) => Expr::Union(s(x), s(y)),
            Expr::Inter(x, y) => Expr::Inter(s(x), s(y)),
            Expr::Diff(x, y) => Expr::Diff(s(x), s(y)),
            Expr::Dom(x) => Expr::Dom(s(x)),
            Expr::Ran(x) => Expr::Ran(s(x)),
            Expr::DomSub(x, y) => Expr::DomSub(s(x), s(y)),
            Expr::RanSub(x, y) => Expr::RanSub(s(x), s(y)),
            Expr::DomRes(x, y) => Expr::DomRes(s(x), s(y)),
            Expr::RanRes(x, y) => Expr::RanRes(s(x), s(y)),
            Expr::Override(x, y) => Expr::Override(s(x), s(y)),
            Expr::Maplet(x, y) => Expr::Maplet(s(x), s(y)),
            Expr::Apply(x, y) => Expr::Apply(s(x), s(y)),
        }
    }
}

impl Substitute for Pred {
    fn substitute(&self, b: &Binding) -> Self {
        if b.is_empty() {
            return self.clone();
        }
        match self {
            Pred::True => Pred::True,
            Pred::False => Pred::False,
            Pred::And(x, y) => Pred::And(bx(x.substitute(b)), bx(y.substitute(b))),
            Pred::Not(x) => Pred::Not(bx(x.substitute(b))),
            Pred::In(x, y) => Pred::In(x.substitute(b), y.substitute(b)),
            Pred::Subset(x, y) => Pred::Subset(x.substitute(b), y.substitute(b)),
            Pred::Eq(x, y) => Pred::Eq(x.substitute(b), y.substitute(b)),
            Pred::Neq(x, y) => Pred::Neq(x.substitute(b), y.substitute(b)),
            Pred::Rel(e, s, t, k) => Pred::Rel(e.substitute(b), s.substitute(b), t.substitute(b), *k),
        }
    }
}

/// Substitution inside the expressions of a substitution; assignment
/// targets are left in place.
impl Substitute for Subst {
    fn substitute(&self, b: &Binding) -> Self {
        match self {
            Subst::Skip => Subst::Skip,
            Subst::Assign(ts, vs) => {
                Subst::Assign(ts.clone(), vs.iter().map(|v| v.substitute(b)).collect())
            }
            Subst::FunAssign(f, i, v) => Subst::FunAssign(f.clone(), i.substitute(b), v.substitute(b)),
            Subst::Parallel(x, y) => Subst::Parallel(bx(x.substitute(b)), bx(y.substitute(b))),
            Subst::Pre(p, s) => Subst::Pre(p.substitute(b), bx(s.substitute(b))),
            Subst::Call { outputs, op, args } => Subst::Call {
                outputs: outputs.clone(),
                op: op.clone(),
                args: args.iter().map(|a| a.substitute(b)).collect(),
            },
        }
    }
}

pub fn substitute(p: &Pred, binding: &Binding) -> Pred {
    p.substitute(binding)
}

// Convenience constructors, mostly for tests and generated code.
impl Expr {
    pub fn id(n: impl Into<String>) -> Expr {
        Expr::Ident(n.into())
    }
    pub fn singleton(e: Expr) -> Expr {
        Expr::SetLit(vec![e])
    }
    pub fn union(a: Expr, b: Expr) -> Expr {
        Expr::Union(bx(a), bx(b))
    }
    pub fn inter(a: Expr, b: Expr) -> Expr {
        Expr::Inter(bx(a), bx(b))
    }
    pub fn diff(a: Expr, b: Expr) -> Expr {
        Expr::Diff(bx(a), bx(b))
    }
    pub fn dom(a: Expr) -> Expr {
        Expr::Dom(bx(a))
    }
    pub fn ran(a: Expr) -> Expr {
        Expr::Ran(bx(a))
    }
    pub fn dom_sub(s: Expr, r: Expr) -> Expr {
        Expr::DomSub(bx(s), bx(r))
    }
    pub fn ran_sub(r: Expr, s: Expr) -> Expr {
        Expr::RanSub(bx(r), bx(s))
    }
    pub fn dom_res(s: Expr, r: Expr) -> Expr {
        Expr::DomRes(bx(s), bx(r))
    }
    pub fn ran_res(r: Expr, s: Expr) -> Expr {
        Expr::RanRes(bx(r), bx(s))
    }
    pub fn override_(f: Expr, g: Expr) -> Expr {
        Expr::Override(bx(f), bx(g))
    }
    pub fn maplet(a: Expr, b: Expr) -> Expr {
        Expr::Maplet(bx(a), bx(b))
    }
    pub fn apply(f: Expr, x: Expr) -> Expr {
        Expr::Apply(bx(f), bx(x))
    }
}

impl Pred {
    pub fn and(a: Pred, b: Pred) -> Pred {
        Pred::And(bx(a), bx(b))
    }
    pub fn not(a: Pred) -> Pred {
        Pred::Not(bx(a))
    }

    /// Left-nested conjunction; truth for an empty list.
    pub fn conj(ps: impl IntoIterator<Item = Pred>) -> Pred {
        let mut it = ps.into_iter();
        match it.next() {
            None => Pred::True,
            Some(first) => it.fold(first, Pred::and),
        }
    }

    /// The conjuncts of a (possibly nested) conjunction, in order. Truth
    /// contributes nothing.
    pub fn conjuncts(&self) -> Vec<&Pred> {
        match self {
            Pred::True => vec![],
            Pred::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            p => vec![p],
        }
    }
}

impl fmt::Display for RelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.arrow())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_expr, parse_pred, parse_subst};

    fn ids(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn free_identifiers_of_invariant_conjunct() {
        let p = parse_pred("Leaf \\/ Composite = Component").unwrap();
        assert_eq!(p.free_identifiers(), ids(&["Leaf", "Composite", "Component"]));
    }

    #[test]
    fn free_identifiers_skip_and_assignment() {
        assert!(Subst::Skip.free_identifiers().is_empty());
        let s = parse_subst("CompRes := {thing} <<| CompRes").unwrap();
        assert_eq!(s.free_identifiers(), ids(&["CompRes", "thing"]));
    }

    #[test]
    fn substitute_single_replacement() {
        let p = parse_pred("res : Resource").unwrap();
        let b: Binding = [("Resource".to_string(), parse_expr("Resource - {res}").unwrap())].into();
        assert_eq!(p.substitute(&b), parse_pred("res : Resource - {res}").unwrap());
        assert_eq!(p.substitute(&Binding::new()), p);
    }

    #[test]
    fn substitute_is_simultaneous() {
        let p = parse_pred("State : Usable +-> STATE").unwrap();
        let b: Binding = [
            ("State".to_string(), parse_expr("{file} <<| State").unwrap()),
            ("Usable".to_string(), parse_expr("Usable - {file}").unwrap()),
        ]
        .into();
        assert_eq!(
            p.substitute(&b),
            parse_pred("{file} <<| State : Usable - {file} +-> STATE").unwrap()
        );
    }

    #[test]
    fn modified_variables_of_initialisation() {
        let s = parse_subst("Usable, State := {}, {}").unwrap();
        assert_eq!(modified_variables(&s), ids(&["Usable", "State"]));
        assert!(modified_variables(&Subst::Skip).is_empty());
    }

    #[test]
    fn transitive_modification_reports_unresolved_calls() {
        let s = parse_subst("Nope(x)").unwrap();
        let err = modified_variables_transitive(&s, &|_| None).unwrap_err();
        assert_eq!(err, AstError::UnresolvedCall("Nope".into()));
    }

    #[test]
    fn renaming_map_rejects_non_injective_pairs() {
        assert!(RenamingMap::new([("A", "X"), ("A", "Y")]).is_err());
        assert!(RenamingMap::new([("A", "X"), ("B", "X")]).is_err());
        assert!(RenamingMap::new([("A", "X"), ("B", "Y")]).is_ok());
    }
}
