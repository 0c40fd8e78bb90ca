//! Decision procedure for the Boolean set-algebra fragment, extended with
//! facts about domains, ranges and functionality.
//!
//! Set constraints are reduced to element level: a universal constraint
//! `X <: Y` is instantiated at every named element of the right type, an
//! existential one (the negated goal, `not(X <: Y)`) introduces a witness.
//! Named elements are the element terms of the problem plus witnesses, so
//! the reduction is complete for the pure set-algebra part. Operators the
//! procedure does not interpret (`dom`, `ran`, restrictions, overriding,
//! application) become opaque atoms related by sound extra facts.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::*;
use crate::discharge::sat::{Formula, Solver};
use crate::discharge::simplify::{simplify_expr, simplify_pred, SimpContext};
use crate::typecheck::{type_of, Entry, IdentKind, Origin, SetType, TypeEnv};

#[derive(Debug, Clone)]
enum Constraint {
    /// `X <: Y` over elements of the given type.
    Sub(Expr, Expr, SetType),
    /// Some element lies in `X` but not in `Y`.
    NotSub(Expr, Expr, SetType),
    /// Some element lies in exactly one of `X`, `Y`.
    NotEq(Expr, Expr, SetType),
    Member(Expr, Expr, bool),
    ElemEq(Expr, Expr, bool),
}

/// Facts derived from the hypotheses, reused for every goal.
#[derive(Debug, Clone)]
pub struct Knowledge {
    env: TypeEnv,
    constraints: Vec<Constraint>,
    functional: BTreeSet<Expr>,
    injective: BTreeSet<Expr>,
    carriers: BTreeSet<String>,
    enum_of: BTreeMap<String, String>,
    cx: SimpContext,
}

pub fn env_from_types(types: &BTreeMap<String, SetType>) -> TypeEnv {
    let mut env = TypeEnv::default();
    for (n, t) in types {
        env.insert(n.clone(), Entry { ty: t.clone(), kind: IdentKind::Variable, origin: Origin::Own });
    }
    env
}

fn elem_type(e: &Expr, env: &TypeEnv) -> Option<SetType> {
    match type_of(e, env).ok()? {
        SetType::Power(t) => Some(*t),
        _ => None,
    }
}

fn is_set(e: &Expr, env: &TypeEnv) -> Option<bool> {
    type_of(e, env).ok().map(|t| matches!(t, SetType::Power(_)))
}

impl Knowledge {
    pub fn new(hyps: &[Pred], types: &BTreeMap<String, SetType>, cx: &SimpContext) -> Self {
        let mut k = Knowledge {
            env: env_from_types(types),
            constraints: Vec::new(),
            functional: BTreeSet::new(),
            injective: BTreeSet::new(),
            carriers: cx.carriers.clone(),
            enum_of: cx.enum_of.clone(),
            cx: cx.clone(),
        };
        for h in hyps {
            k.add_hyp(h, true);
        }
        k
    }

    fn add_hyp(&mut self, p: &Pred, pos: bool) {
        if let Some(c) = self.literal(p, pos) {
            self.constraints.extend(c);
            return;
        }
        if let (Pred::Rel(f, a, b, kind), true) = (p, pos) {
            let (f, a, b) = (simplify_expr(f), simplify_expr(a), simplify_expr(b));
            let dom = simplify_expr(&Expr::dom(f.clone()));
            let ran = simplify_expr(&Expr::ran(f.clone()));
            let mut add = |x: &Expr, y: &Expr| {
                if let Some(t) = elem_type(x, &self.env) {
                    self.constraints.push(Constraint::Sub(x.clone(), y.clone(), t));
                }
            };
            add(&dom, &a);
            add(&ran, &b);
            if kind.is_total() {
                add(&a, &dom);
            }
            if kind.is_surjective() {
                add(&b, &ran);
            }
            if kind.is_functional() {
                self.functional.insert(f.clone());
            }
            if kind.is_injective() {
                self.injective.insert(f);
            }
        }
    }

    /// Element-level reading of a literal, or `None` when it is outside the
    /// fragment.
    fn literal(&self, p: &Pred, pos: bool) -> Option<Vec<Constraint>> {
        let env = &self.env;
        Some(match p {
            Pred::True | Pred::False => {
                // Constant literals are resolved by the caller.
                return None;
            }
            Pred::Not(q) => return self.literal(q, !pos),
            Pred::And(a, b) if pos => {
                let mut v = self.literal(a, true).unwrap_or_default();
                v.extend(self.literal(b, true).unwrap_or_default());
                v
            }
            Pred::In(x, s) => vec![Constraint::Member(simplify_expr(x), simplify_expr(s), pos)],
            Pred::Subset(x, y) => {
                let t = elem_type(x, env).or_else(|| elem_type(y, env))?;
                let (x, y) = (simplify_expr(x), simplify_expr(y));
                if pos {
                    vec![Constraint::Sub(x, y, t)]
                } else {
                    vec![Constraint::NotSub(x, y, t)]
                }
            }
            Pred::Eq(x, y) | Pred::Neq(x, y) => {
                let pos = pos == matches!(p, Pred::Eq(..));
                let (x, y) = (simplify_expr(x), simplify_expr(y));
                if is_set(&x, env).or_else(|| is_set(&y, env))? {
                    let t = elem_type(&x, env).or_else(|| elem_type(&y, env))?;
                    if pos {
                        vec![Constraint::Sub(x.clone(), y.clone(), t.clone()), Constraint::Sub(y, x, t)]
                    } else {
                        vec![Constraint::NotEq(x, y, t)]
                    }
                } else {
                    vec![Constraint::ElemEq(x, y, pos)]
                }
            }
            _ => return None,
        })
    }

    /// Does the knowledge entail `goal`? `goal` is a simplified conjunct.
    pub fn proves(&self, goal: &Pred) -> bool {
        match &simplify_pred(goal, &self.cx) {
            Pred::True => true,
            Pred::False => self.clone().inconsistent(),
            Pred::And(a, b) => self.proves(a) && self.proves(b),
            Pred::Rel(f, a, b, kind) => {
                let (f, a, b) = (simplify_expr(f), simplify_expr(a), simplify_expr(b));
                let dom = simplify_expr(&Expr::dom(f.clone()));
                let ran = simplify_expr(&Expr::ran(f.clone()));
                let sub = |x: &Expr, y: &Expr| self.proves(&Pred::Subset(x.clone(), y.clone()));
                sub(&dom, &a)
                    && sub(&ran, &b)
                    && (!kind.is_total() || sub(&a, &dom))
                    && (!kind.is_surjective() || sub(&b, &ran))
                    && (!kind.is_functional() || self.functional_term(&f, 0))
                    && (!kind.is_injective() || self.injective_term(&f, 0))
            }
            Pred::Subset(_, c) if self.is_carrier(c) => true,
            g => {
                let mut k = self.clone();
                k.add_hyp(g, false);
                if k.constraints.len() == self.constraints.len() {
                    return false;
                }
                k.inconsistent()
            }
        }
    }

    fn is_carrier(&self, e: &Expr) -> bool {
        matches!(e, Expr::Ident(n) if self.carriers.contains(n))
    }

    fn functional_term(&self, f: &Expr, depth: usize) -> bool {
        if depth > 8 {
            return false;
        }
        if self.functional.contains(f) {
            return true;
        }
        match f {
            Expr::Empty => true,
            Expr::SetLit(els) => els.len() == 1,
            Expr::DomSub(_, g) | Expr::DomRes(_, g) | Expr::RanSub(g, _) | Expr::RanRes(g, _) => {
                self.functional_term(g, depth + 1)
            }
            Expr::Diff(g, _) => self.functional_term(g, depth + 1),
            Expr::Inter(g, h) => self.functional_term(g, depth + 1) || self.functional_term(h, depth + 1),
            Expr::Override(g, h) => self.functional_term(g, depth + 1) && self.functional_term(h, depth + 1),
            Expr::Union(g, h) => {
                self.functional_term(g, depth + 1)
                    && self.functional_term(h, depth + 1)
                    && self.proves(&Pred::Subset(
                        simplify_expr(&Expr::inter(Expr::dom((**g).clone()), Expr::dom((**h).clone()))),
                        Expr::Empty,
                    ))
            }
            _ => false,
        }
    }

    fn injective_term(&self, f: &Expr, depth: usize) -> bool {
        if depth > 8 {
            return false;
        }
        if self.injective.contains(f) {
            return true;
        }
        match f {
            Expr::Empty => true,
            Expr::SetLit(els) => els.len() == 1,
            Expr::DomSub(_, g) | Expr::DomRes(_, g) | Expr::RanSub(g, _) | Expr::RanRes(g, _) => {
                self.injective_term(g, depth + 1)
            }
            Expr::Diff(g, _) => self.injective_term(g, depth + 1),
            Expr::Inter(g, h) => self.injective_term(g, depth + 1) || self.injective_term(h, depth + 1),
            Expr::Union(g, h) => {
                self.injective_term(g, depth + 1)
                    && self.injective_term(h, depth + 1)
                    && self.proves(&Pred::Subset(
                        simplify_expr(&Expr::inter(Expr::ran((**g).clone()), Expr::ran((**h).clone()))),
                        Expr::Empty,
                    ))
            }
            _ => false,
        }
    }

    /// Unsatisfiability of the constraints over named elements.
    fn inconsistent(mut self) -> bool {
        self.add_atom_facts();
        let mut enc = Encoder::new(&self);
        enc.encode();
        enc.solver.solve().is_none()
    }

    /// Sound facts about opaque atoms, closed a bounded number of times.
    fn add_atom_facts(&mut self) {
        let mut done: BTreeSet<Expr> = BTreeSet::new();
        for _ in 0..3 {
            let mut atoms = BTreeSet::new();
            for c in &self.constraints {
                match c {
                    Constraint::Sub(x, y, _) | Constraint::NotSub(x, y, _) | Constraint::NotEq(x, y, _) => {
                        collect_atoms(x, &mut atoms);
                        collect_atoms(y, &mut atoms);
                    }
                    Constraint::Member(_, s, _) => collect_atoms(s, &mut atoms),
                    Constraint::ElemEq(..) => {}
                }
            }
            let fresh: Vec<Expr> = atoms.into_iter().filter(|a| done.insert(a.clone())).collect();
            if fresh.is_empty() {
                break;
            }
            for a in fresh {
                for (x, y) in atom_facts(&a) {
                    if let Some(t) = elem_type(&x, &self.env) {
                        self.constraints.push(Constraint::Sub(x, y, t));
                    }
                }
            }
        }
    }
}

fn collect_atoms(e: &Expr, out: &mut BTreeSet<Expr>) {
    match e {
        Expr::Union(a, b) | Expr::Inter(a, b) | Expr::Diff(a, b) => {
            collect_atoms(a, out);
            collect_atoms(b, out);
        }
        Expr::SetLit(_) | Expr::Empty => {}
        other => {
            out.insert(other.clone());
        }
    }
}

/// `(x, y)` pairs with `x <: y` valid for the shape of atom `a`.
fn atom_facts(a: &Expr) -> Vec<(Expr, Expr)> {
    let s = simplify_expr;
    match a {
        Expr::DomSub(_, r) | Expr::DomRes(_, r) | Expr::RanSub(r, _) | Expr::RanRes(r, _) => {
            vec![(a.clone(), (**r).clone())]
        }
        Expr::Override(f, g) => vec![
            (a.clone(), Expr::union((**f).clone(), (**g).clone())),
            ((**g).clone(), a.clone()),
        ],
        Expr::Ran(r) => match &**r {
            Expr::DomSub(_, q) | Expr::DomRes(_, q) => vec![(a.clone(), s(&Expr::ran((**q).clone())))],
            Expr::Override(f, g) => vec![
                (a.clone(), s(&Expr::union(Expr::ran((**f).clone()), Expr::ran((**g).clone())))),
                (s(&Expr::ran((**g).clone())), a.clone()),
            ],
            _ => vec![],
        },
        Expr::Dom(r) => match &**r {
            Expr::RanSub(q, _) | Expr::RanRes(q, _) => vec![(a.clone(), s(&Expr::dom((**q).clone())))],
            _ => vec![],
        },
        _ => vec![],
    }
}

/// Builds the propositional problem: one variable per (element, atom) of
/// matching type and per pair of same-typed elements.
struct Encoder<'k> {
    k: &'k Knowledge,
    solver: Solver,
    elems: Vec<(Option<Expr>, SetType)>,
    elem_index: BTreeMap<Expr, usize>,
    atoms: BTreeMap<Expr, SetType>,
    mem: BTreeMap<(usize, Expr), u32>,
    eqs: BTreeMap<(usize, usize), u32>,
}

impl<'k> Encoder<'k> {
    fn new(k: &'k Knowledge) -> Self {
        Encoder {
            k,
            solver: Solver::new(),
            elems: Vec::new(),
            elem_index: BTreeMap::new(),
            atoms: BTreeMap::new(),
            mem: BTreeMap::new(),
            eqs: BTreeMap::new(),
        }
    }

    fn element(&mut self, e: &Expr) -> Option<usize> {
        if let Some(i) = self.elem_index.get(e) {
            return Some(*i);
        }
        let t = type_of(e, &self.k.env).ok()?;
        let i = self.elems.len();
        self.elems.push((Some(e.clone()), t));
        self.elem_index.insert(e.clone(), i);
        Some(i)
    }

    fn collect_elements(&mut self, s: &Expr) {
        match s {
            Expr::SetLit(els) => {
                for e in els {
                    self.element(e);
                }
            }
            Expr::Union(a, b) | Expr::Inter(a, b) | Expr::Diff(a, b) => {
                self.collect_elements(a);
                self.collect_elements(b);
            }
            Expr::Empty => {}
            other => {
                if !self.k.is_carrier(other) {
                    if let Some(t) = elem_type(other, &self.k.env) {
                        self.atoms.insert(other.clone(), t);
                    }
                }
            }
        }
    }

    fn encode(&mut self) {
        let cs = self.k.constraints.clone();
        // Named elements and atoms first, then witnesses.
        for c in &cs {
            match c {
                Constraint::Sub(x, y, _) | Constraint::NotSub(x, y, _) | Constraint::NotEq(x, y, _) => {
                    self.collect_elements(x);
                    self.collect_elements(y);
                }
                Constraint::Member(e, s, _) => {
                    self.element(e);
                    self.collect_elements(s);
                }
                Constraint::ElemEq(a, b, _) => {
                    self.element(a);
                    self.element(b);
                }
            }
        }
        let mut ground = Vec::new();
        let mut universal = Vec::new();
        for c in &cs {
            match c {
                Constraint::Sub(x, y, t) => universal.push((x.clone(), y.clone(), t.clone())),
                Constraint::NotSub(x, y, t) | Constraint::NotEq(x, y, t) => {
                    let w = self.elems.len();
                    self.elems.push((None, t.clone()));
                    let (fx, fy) = (self.member(w, x), self.member(w, y));
                    ground.push(match c {
                        Constraint::NotSub(..) => Formula::and(vec![fx, Formula::not(fy)]),
                        _ => Formula::not(Formula::iff(fx, fy)),
                    });
                }
                Constraint::Member(e, s, pos) => {
                    let Some(i) = self.element(e) else { continue };
                    let f = self.member(i, s);
                    ground.push(if *pos { f } else { Formula::not(f) });
                }
                Constraint::ElemEq(a, b, pos) => {
                    let (Some(i), Some(j)) = (self.element(a), self.element(b)) else { continue };
                    let f = self.eq(i, j);
                    ground.push(if *pos { f } else { Formula::not(f) });
                }
            }
        }
        for f in &ground {
            self.solver.assert(f);
        }
        let n = self.elems.len();
        for (x, y, t) in &universal {
            for i in 0..n {
                if self.elems[i].1 == *t {
                    let f = Formula::implies(self.member(i, x), self.member(i, y));
                    self.solver.assert(&f);
                }
            }
        }
        self.equality_axioms();
    }

    fn equality_axioms(&mut self) {
        let n = self.elems.len();
        let atoms: Vec<(Expr, SetType)> = self.atoms.iter().map(|(a, t)| (a.clone(), t.clone())).collect();
        for i in 0..n {
            for j in i + 1..n {
                if self.elems[i].1 != self.elems[j].1 {
                    continue;
                }
                let e = self.eq(i, j);
                for (a, t) in &atoms {
                    if *t == self.elems[i].1 {
                        let (mi, mj) = (self.atom_var(i, a), self.atom_var(j, a));
                        self.solver.assert(&Formula::implies(e.clone(), Formula::iff(mi, mj)));
                    }
                }
                for k in 0..n {
                    if k == i || k == j || self.elems[k].1 != self.elems[i].1 {
                        continue;
                    }
                    let (ik, jk) = (self.eq(i, k), self.eq(j, k));
                    self.solver.assert(&Formula::implies(Formula::and(vec![e.clone(), ik.clone()]), jk.clone()));
                }
                let distinct_consts = match (&self.elems[i].0, &self.elems[j].0) {
                    (Some(Expr::Ident(a)), Some(Expr::Ident(b))) => {
                        self.k.enum_of.contains_key(a) && self.k.enum_of.contains_key(b)
                    }
                    _ => false,
                };
                if distinct_consts {
                    self.solver.assert(&Formula::not(e));
                }
            }
        }
    }

    fn eq(&mut self, i: usize, j: usize) -> Formula {
        if i == j {
            return Formula::Const(true);
        }
        if self.elems[i].1 != self.elems[j].1 {
            return Formula::Const(false);
        }
        let key = (i.min(j), i.max(j));
        if let Some(v) = self.eqs.get(&key) {
            return Formula::Var(*v);
        }
        let v = self.solver.fresh();
        self.eqs.insert(key, v);
        Formula::Var(v)
    }

    fn atom_var(&mut self, i: usize, a: &Expr) -> Formula {
        let key = (i, a.clone());
        if let Some(v) = self.mem.get(&key) {
            return Formula::Var(*v);
        }
        let v = self.solver.fresh();
        self.mem.insert(key, v);
        Formula::Var(v)
    }

    /// Formula for "element `i` belongs to `s`".
    fn member(&mut self, i: usize, s: &Expr) -> Formula {
        match s {
            Expr::Empty => Formula::Const(false),
            Expr::SetLit(els) => {
                let mut fs = Vec::new();
                for e in els {
                    match self.element(e) {
                        Some(j) => fs.push(self.eq(i, j)),
                        None => return self.opaque(i, s),
                    }
                }
                Formula::or(fs)
            }
            Expr::Union(a, b) => {
                let (fa, fb) = (self.member(i, a), self.member(i, b));
                Formula::or(vec![fa, fb])
            }
            Expr::Inter(a, b) => {
                let (fa, fb) = (self.member(i, a), self.member(i, b));
                Formula::and(vec![fa, fb])
            }
            Expr::Diff(a, b) => {
                let (fa, fb) = (self.member(i, a), self.member(i, b));
                Formula::and(vec![fa, Formula::not(fb)])
            }
            Expr::Ident(g) if self.k.carriers.contains(g) => {
                Formula::Const(self.elems[i].1 == SetType::given(g.clone()))
            }
            other => self.opaque(i, other),
        }
    }

    fn opaque(&mut self, i: usize, s: &Expr) -> Formula {
        match elem_type(s, &self.k.env) {
            Some(t) if t == self.elems[i].1 => {
                self.atoms.entry(s.clone()).or_insert(t);
                self.atom_var(i, s)
            }
            _ => Formula::Const(false),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_pred;

    fn types() -> BTreeMap<String, SetType> {
        let e = SetType::given("E");
        let pe = SetType::power(e.clone());
        let mut m = BTreeMap::new();
        for v in ["A", "B", "C", "Component", "Resource", "Leaf", "Composite", "E"] {
            m.insert(v.to_string(), pe.clone());
        }
        for v in ["x", "y", "leaf"] {
            m.insert(v.to_string(), e.clone());
        }
        m.insert("Father".into(), SetType::relation(e.clone(), e));
        m
    }

    fn entails(hyps: &[&str], goal: &str) -> bool {
        let cx = SimpContext { carriers: ["E".to_string()].into_iter().collect(), ..Default::default() };
        let hs: Vec<Pred> = hyps.iter().map(|h| parse_pred(h).unwrap()).collect();
        let k = Knowledge::new(&hs, &types(), &cx);
        let g = crate::discharge::simplify::simplify_pred(&parse_pred(goal).unwrap(), &cx);
        k.proves(&g)
    }

    #[test]
    fn boolean_algebra_basics() {
        assert!(entails(&["A <: B", "B <: C"], "A <: C"));
        assert!(!entails(&["A <: B"], "B <: A"));
        assert!(entails(&["x : A", "A <: B"], "x : B"));
        assert!(entails(&["not(x : A)", "A = B"], "not(x : B)"));
        assert!(entails(&["Component = Resource"], "Component \\/ {x} = Resource \\/ {x}"));
        assert!(!entails(&["x : A"], "y : A"));
        assert!(entails(&["x : A", "y = x"], "y : A"));
    }

    #[test]
    fn leaf_removal_keeps_partition() {
        let hyps = [
            "Leaf \\/ Composite = Component",
            "Leaf /\\ Composite = {}",
            "Father : Component +->> Composite",
            "leaf : Leaf",
        ];
        let goal = "Leaf - {leaf} \\/ (Composite - ran({leaf} <<| Father)) \\/ ran({leaf} <<| Father) \
                    = Component - {leaf}";
        assert!(entails(&hyps, goal));
        assert!(entails(&hyps, "{leaf} <<| Father : Component - {leaf} +->> ran({leaf} <<| Father)"));
    }

    #[test]
    fn functional_union_needs_disjoint_domains() {
        let hyps = ["Father : Component +-> Composite", "x : Component", "y : Composite"];
        assert!(!entails(&hyps, "Father \\/ {x |-> y} : Component +-> Composite"));
        let mut more = hyps.to_vec();
        more.push("not(x : dom(Father))");
        assert!(entails(&more, "Father \\/ {x |-> y} : Component +-> Composite"));
    }
}
