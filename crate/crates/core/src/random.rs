//! Seeded generators of small well-typed machines, substitutions and
//! renamings, for cross-checking the prover, the WP calculus and the reuse
//! engine against the oracle.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ast::*;
use crate::library::Library;
use crate::typecheck::typecheck;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Shape {
    /// Subset of a carrier.
    Set(String),
    /// Relation between two carriers; the typing conjunct may use set
    /// variables of those carriers as source and target.
    Rel(String, String),
}

#[derive(Debug, Clone)]
struct Var {
    name: String,
    shape: Shape,
}

pub struct Generator {
    rng: ChaCha8Rng,
}

const KINDS: &[RelKind] = &[
    RelKind::Relation,
    RelKind::PartialFunction,
    RelKind::TotalFunction,
    RelKind::PartialInjection,
    RelKind::PartialSurjection,
    RelKind::Bijection,
];

impl Generator {
    pub fn new(seed: u64) -> Self {
        Generator { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        xs.choose(&mut self.rng).expect("nonempty")
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }
}

/// Per-machine vocabulary while generating.
struct Scope {
    carriers: Vec<String>,
    enums: BTreeMap<String, Vec<String>>,
    vars: Vec<Var>,
}

impl Scope {
    fn sets_of(&self, c: &str) -> Vec<&Var> {
        self.vars.iter().filter(|v| v.shape == Shape::Set(c.to_string())).collect()
    }

    fn rels(&self) -> Vec<&Var> {
        self.vars.iter().filter(|v| matches!(v.shape, Shape::Rel(..))).collect()
    }
}

/// Parameters of one operation, created on demand.
struct Params {
    names: Vec<(String, String)>,
}

impl Params {
    fn of(&mut self, g: &mut Generator, carrier: &str) -> Expr {
        let existing: Vec<String> =
            self.names.iter().filter(|(_, c)| c == carrier).map(|(n, _)| n.clone()).collect();
        if !existing.is_empty() && (self.names.len() >= 3 || g.chance(0.5)) {
            return Expr::id(g.pick(&existing).clone());
        }
        let n = format!("p{}", self.names.len() + 1);
        self.names.push((n.clone(), carrier.to_string()));
        Expr::id(n)
    }
}

impl Generator {
    fn element(&mut self, sc: &Scope, ps: &mut Params, c: &str) -> Expr {
        if let Some(els) = sc.enums.get(c) {
            if self.chance(0.3) {
                return Expr::id(self.pick(els).clone());
            }
        }
        ps.of(self, c)
    }

    fn endpoint(&mut self, sc: &Scope, c: &str) -> Expr {
        let sets: Vec<String> = sc.sets_of(c).iter().map(|v| v.name.clone()).collect();
        if !sets.is_empty() && self.chance(0.6) {
            Expr::id(self.pick(&sets).clone())
        } else {
            Expr::id(c)
        }
    }

    fn typing(&mut self, sc: &Scope, v: &Var) -> Pred {
        match &v.shape {
            Shape::Set(c) => Pred::Subset(Expr::id(v.name.clone()), Expr::id(c.clone())),
            Shape::Rel(a, b) => {
                let (s, t) = (self.endpoint(sc, a), self.endpoint(sc, b));
                let carrier_src = s == Expr::id(a.clone());
                let kinds: Vec<RelKind> =
                    KINDS.iter().copied().filter(|k| !(carrier_src && k.is_total())).collect();
                let k = *self.pick(&kinds);
                Pred::Rel(Expr::id(v.name.clone()), s, t, k)
            }
        }
    }

    fn extra_conjunct(&mut self, sc: &Scope) -> Option<Pred> {
        let c = self.pick(&sc.carriers).clone();
        let sets: Vec<String> = sc.sets_of(&c).iter().map(|v| v.name.clone()).collect();
        let rels: Vec<(String, String, String)> = sc
            .rels()
            .iter()
            .filter_map(|v| match &v.shape {
                Shape::Rel(a, b) => Some((v.name.clone(), a.clone(), b.clone())),
                _ => None,
            })
            .collect();
        match self.rng.gen_range(0..3) {
            0 if sets.len() >= 2 => {
                let (a, b) = (self.pick(&sets).clone(), self.pick(&sets).clone());
                (a != b).then(|| Pred::Subset(Expr::id(a), Expr::id(b)))
            }
            1 if sets.len() >= 2 => {
                let (a, b) = (self.pick(&sets).clone(), self.pick(&sets).clone());
                (a != b).then(|| Pred::Eq(Expr::inter(Expr::id(a), Expr::id(b)), Expr::Empty))
            }
            _ if !rels.is_empty() => {
                let (r, a, _) = self.pick(&rels).clone();
                let doms: Vec<String> = sc.sets_of(&a).iter().map(|v| v.name.clone()).collect();
                if doms.is_empty() {
                    return None;
                }
                let d = self.pick(&doms).clone();
                Some(Pred::Subset(Expr::dom(Expr::id(r)), Expr::id(d)))
            }
            _ => None,
        }
    }

    fn update(&mut self, sc: &Scope, ps: &mut Params, v: &Var) -> Subst {
        let me = Expr::id(v.name.clone());
        let assign = |e: Expr| Subst::Assign(vec![v.name.clone()], vec![e]);
        match &v.shape {
            Shape::Set(c) => {
                let others: Vec<String> =
                    sc.sets_of(c).iter().filter(|w| w.name != v.name).map(|w| w.name.clone()).collect();
                let projections: Vec<Expr> = sc
                    .rels()
                    .iter()
                    .flat_map(|r| match &r.shape {
                        Shape::Rel(a, b) => {
                            let mut out = Vec::new();
                            if a == c {
                                out.push(Expr::dom(Expr::id(r.name.clone())));
                            }
                            if b == c {
                                out.push(Expr::ran(Expr::id(r.name.clone())));
                            }
                            out
                        }
                        _ => vec![],
                    })
                    .collect();
                match self.rng.gen_range(0..6) {
                    0 => assign(Expr::union(me, Expr::singleton(self.element(sc, ps, c)))),
                    1 => assign(Expr::diff(me, Expr::singleton(self.element(sc, ps, c)))),
                    2 => assign(Expr::Empty),
                    3 if !others.is_empty() => assign(Expr::inter(me, Expr::id(self.pick(&others).clone()))),
                    4 if !projections.is_empty() => assign(self.pick(&projections).clone()),
                    _ => assign(Expr::union(me, Expr::singleton(self.element(sc, ps, c)))),
                }
            }
            Shape::Rel(a, b) => match self.rng.gen_range(0..8) {
                1 => assign(Expr::dom_sub(Expr::singleton(self.element(sc, ps, a)), me)),
                2 => assign(Expr::ran_sub(me, Expr::singleton(self.element(sc, ps, b)))),
                5 => assign(Expr::Empty),
                6 => assign(Expr::dom_res(self.endpoint(sc, a), me)),
                7 => assign(Expr::ran_res(me, self.endpoint(sc, b))),
                k => {
                    let x = self.element(sc, ps, a);
                    let y = self.element(sc, ps, b);
                    let pair = Expr::singleton(Expr::maplet(x.clone(), y.clone()));
                    match k {
                        0 => assign(Expr::union(me, pair)),
                        3 => assign(Expr::override_(me, pair)),
                        _ => Subst::FunAssign(v.name.clone(), x, y),
                    }
                }
            },
        }
    }

    fn pre_atom(&mut self, sc: &Scope, ps: &Params) -> Option<Pred> {
        let (p, c) = self.pick(&ps.names).clone();
        let p = Expr::id(p);
        let sets: Vec<String> = sc.sets_of(&c).iter().map(|v| v.name.clone()).collect();
        let doms: Vec<String> = sc
            .rels()
            .iter()
            .filter(|r| matches!(&r.shape, Shape::Rel(a, _) if *a == c))
            .map(|r| r.name.clone())
            .collect();
        let same: Vec<String> =
            ps.names.iter().filter(|(n, d)| *d == c && Expr::id(n.clone()) != p).map(|(n, _)| n.clone()).collect();
        match self.rng.gen_range(0..5) {
            0 | 1 if !sets.is_empty() => {
                let s = Expr::id(self.pick(&sets).clone());
                Some(if self.chance(0.5) { Pred::In(p, s) } else { Pred::not(Pred::In(p, s)) })
            }
            2 | 3 if !doms.is_empty() => {
                let d = Expr::dom(Expr::id(self.pick(&doms).clone()));
                Some(if self.chance(0.5) { Pred::In(p, d) } else { Pred::not(Pred::In(p, d)) })
            }
            4 if !same.is_empty() => Some(Pred::Neq(p, Expr::id(self.pick(&same).clone()))),
            _ => None,
        }
    }
}

impl Generator {
    fn scope(&mut self) -> (Scope, Vec<String>, Vec<SetDecl>) {
        let mut params = vec!["S".to_string()];
        if self.chance(0.5) {
            params.push("T".to_string());
        }
        let mut sets = Vec::new();
        let mut enums = BTreeMap::new();
        if self.chance(0.3) {
            let els = vec!["e1".to_string(), "e2".to_string()];
            sets.push(SetDecl { name: "E".into(), elements: Some(els.clone()) });
            enums.insert("E".to_string(), els);
        }
        let mut carriers = params.clone();
        carriers.extend(enums.keys().cloned());
        let n = self.rng.gen_range(2..=4);
        let mut vars = Vec::new();
        for i in 0..n {
            let shape = if self.chance(0.5) {
                Shape::Set(self.pick(&carriers).clone())
            } else {
                Shape::Rel(self.pick(&carriers).clone(), self.pick(&carriers).clone())
            };
            let prefix = if matches!(shape, Shape::Set(_)) { "v" } else { "r" };
            vars.push(Var { name: format!("{prefix}{}", i + 1), shape });
        }
        (Scope { carriers, enums, vars }, params, sets)
    }

    fn operation(&mut self, sc: &Scope, name: String) -> Operation {
        let mut ps = Params { names: Vec::new() };
        let k = self.rng.gen_range(1..=2.min(sc.vars.len()));
        let targets: Vec<Var> = sc.vars.choose_multiple(&mut self.rng, k).cloned().collect();
        let body = Subst::parallel(targets.iter().map(|v| self.update(sc, &mut ps, v)).collect());
        let mut pre: Vec<Pred> =
            ps.names.iter().map(|(p, c)| Pred::In(Expr::id(p.clone()), Expr::id(c.clone()))).collect();
        if !ps.names.is_empty() {
            for _ in 0..self.rng.gen_range(0..=2) {
                if let Some(a) = self.pre_atom(sc, &ps) {
                    if !pre.contains(&a) {
                        pre.push(a);
                    }
                }
            }
        }
        let pre = Pred::conj(pre);
        Operation {
            name,
            outputs: vec![],
            inputs: ps.names.iter().map(|(p, _)| p.clone()).collect(),
            body: if pre == Pred::True { body } else { Subst::Pre(pre, Box::new(body)) },
        }
    }

    /// A machine in the shape of a pattern: given sets as parameters, set
    /// and relation variables, a typed invariant and a few operations.
    pub fn machine(&mut self, name: &str) -> Machine {
        self.machine_with_probes(name, 0).0
    }

    /// A machine together with `k` extra predicates over its variables,
    /// drawn like invariant conjuncts.
    pub fn machine_with_probes(&mut self, name: &str, k: usize) -> (Machine, Vec<Pred>) {
        loop {
            let (sc, params, sets) = self.scope();
            let mut m = Machine::new(MachineKind::Abstract, name);
            m.parameters = params;
            m.sets = sets;
            m.variables = sc.vars.iter().map(|v| v.name.clone()).collect();
            let mut inv = Vec::new();
            for v in &sc.vars {
                inv.push(self.typing(&sc, v));
            }
            for _ in 0..self.rng.gen_range(0..=2) {
                if let Some(c) = self.extra_conjunct(&sc) {
                    if !inv.contains(&c) {
                        inv.push(c);
                    }
                }
            }
            m.invariant = Pred::conj(inv);
            m.initialisation =
                Subst::parallel(sc.vars.iter().map(|v| Subst::Assign(vec![v.name.clone()], vec![Expr::Empty])).collect());
            let n = self.rng.gen_range(1..=3);
            m.operations = (0..n).map(|i| self.operation(&sc, format!("Op{}", i + 1))).collect();
            if typecheck(&m, &Library::new()).is_ok() {
                let mut probes = Vec::new();
                while probes.len() < k {
                    let p = if self.chance(0.5) {
                        let v = self.pick(&sc.vars).clone();
                        self.typing(&sc, &v)
                    } else {
                        match self.extra_conjunct(&sc) {
                            Some(p) => p,
                            None => continue,
                        }
                    };
                    probes.push(p);
                }
                return (m, probes);
            }
        }
    }

    /// An injective renaming of some variables and operations of `m` to
    /// fresh names.
    pub fn renaming(&mut self, m: &Machine) -> RenamingMap {
        let mut olds: Vec<String> = m.variables.clone();
        olds.extend(m.operations.iter().map(|o| o.name.clone()));
        let k = self.rng.gen_range(1..=olds.len());
        let chosen: Vec<String> = olds.choose_multiple(&mut self.rng, k).cloned().collect();
        RenamingMap::new(chosen.into_iter().map(|o| (format!("{o}_x"), o))).expect("fresh names are injective")
    }
}

impl Generator {
    /// An instantiation of the pattern-shaped machine `p`: actual sets named
    /// after the formals, some variables renamed, each operation promoted,
    /// wrapped or dropped.
    pub fn instantiation(&mut self, p: &Machine, name: &str) -> crate::reuse::InstantiationSpec {
        use crate::reuse::{InstantiationSpec, OpDirective};
        let binding: BTreeMap<String, String> = p.parameters.iter().map(|f| (f.clone(), format!("{f}_A"))).collect();
        let sets = binding.values().map(|a| SetDecl::deferred(a.clone())).collect();
        let k = self.rng.gen_range(0..=p.variables.len());
        let renamed: Vec<String> = p.variables.choose_multiple(&mut self.rng, k).cloned().collect();
        let renaming =
            RenamingMap::new(renamed.into_iter().map(|v| (format!("N_{v}"), v))).expect("fresh names are injective");
        let directives = p
            .operations
            .iter()
            .map(|o| {
                let d = match self.rng.gen_range(0..3) {
                    0 => OpDirective::Promote,
                    1 => OpDirective::Drop,
                    _ => OpDirective::Wrap {
                        name: format!("W_{}", o.name),
                        params: (1..=o.outputs.len() + o.inputs.len()).map(|i| format!("w{i}")).collect(),
                    },
                };
                (o.name.clone(), d)
            })
            .collect();
        InstantiationSpec { pattern: p.name.clone(), name: name.to_string(), sets, binding, renaming, directives }
    }
}
