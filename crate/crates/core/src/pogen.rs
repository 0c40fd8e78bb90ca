//! Flattening over includes, weakest preconditions and proof-obligation
//! generation for machines and refinements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::ast::*;
use crate::library::MachineSource;
use crate::typecheck::{type_of, typecheck, SetType, TypeError, TypedMachine};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PogenError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("unresolved machine `{0}`")]
    UnresolvedMachine(String),
    #[error("call to `{0}` cannot be resolved")]
    UnresolvedCall(String),
    #[error("call to `{0}` must be inlined before computing a weakest precondition")]
    UnflattenedCall(String),
    #[error("parallel branches both assign `{0}`")]
    ParallelClash(String),
    #[error("abstract operation `{0}` has no refinement")]
    MissingAbstractOp(String),
    #[error("`{0}` is not a refinement")]
    NotARefinement(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GivenSet {
    pub name: String,
    pub elements: Option<Vec<String>>,
}

/// An invariant conjunct and the machine that declared it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conjunct {
    pub pred: Pred,
    pub machine: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSite {
    pub callee: String,
    pub machine: String,
    /// The callee precondition with actual arguments in place.
    pub pre: Pred,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpOrigin {
    Own,
    Promoted(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatOp {
    pub name: String,
    pub machine: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub pre: Pred,
    /// Guarded body with every call inlined.
    pub body: Subst,
    pub calls: Vec<CallSite>,
    pub origin: OpOrigin,
    pub locals: BTreeMap<String, SetType>,
}

/// A machine with its includes inlined: no calls, no aliases, no parameters
/// other than its own.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatMachine {
    pub name: String,
    pub kind: MachineKind,
    pub refines: Option<String>,
    pub parameters: Vec<String>,
    pub given: Vec<GivenSet>,
    pub variables: Vec<String>,
    pub invariant: Vec<Conjunct>,
    pub init: Subst,
    pub ops: Vec<FlatOp>,
    pub var_types: BTreeMap<String, SetType>,
}

impl FlatMachine {
    pub fn op(&self, name: &str) -> Option<&FlatOp> {
        self.ops.iter().find(|o| o.name == name)
    }

    pub fn own_conjuncts(&self) -> impl Iterator<Item = (usize, &Conjunct)> {
        self.invariant.iter().enumerate().filter(move |(_, c)| c.machine == self.name)
    }

    /// Replaces the machine parameters by actual set expressions.
    fn instantiate(mut self, b: &Binding, types: &BTreeMap<String, SetType>) -> FlatMachine {
        self.given.retain(|g| !b.contains_key(&g.name));
        self.parameters.clear();
        for c in &mut self.invariant {
            c.pred = c.pred.substitute(b);
        }
        self.init = self.init.substitute(b);
        for op in &mut self.ops {
            op.pre = op.pre.substitute(b);
            op.body = op.body.substitute(b);
            for c in &mut op.calls {
                c.pre = c.pre.substitute(b);
            }
            for t in op.locals.values_mut() {
                *t = t.subst_given(types);
            }
        }
        for t in self.var_types.values_mut() {
            *t = t.subst_given(types);
        }
        self
    }
}

/// Typechecks `m` and inlines its includes.
pub fn flatten(m: &Machine, src: &dyn MachineSource) -> Result<FlatMachine, PogenError> {
    let t = typecheck(m, src)?;
    flatten_typed(&t, src)
}

pub fn flatten_typed(t: &TypedMachine, src: &dyn MachineSource) -> Result<FlatMachine, PogenError> {
    let m = &t.machine;
    let aliases: BTreeMap<String, String> =
        m.definitions.pairs().iter().map(|(n, o)| (n.clone(), o.clone())).collect();
    let expand = |p: &Pred| rename_idents(p, &aliases);

    let mut given: Vec<GivenSet> =
        m.parameters.iter().map(|p| GivenSet { name: p.clone(), elements: None }).collect();
    given.extend(m.sets.iter().map(|s| GivenSet { name: s.name.clone(), elements: s.elements.clone() }));
    let mut invariant = Vec::new();
    let mut inits = Vec::new();
    let mut variables = Vec::new();
    let mut callees: BTreeMap<String, FlatOp> = BTreeMap::new();
    let mut promoted: Vec<FlatOp> = Vec::new();

    let n_includes = m.includes.len();
    for (i, inst) in m.instances().enumerate() {
        let inc = src
            .machine(&inst.machine)
            .ok_or_else(|| PogenError::UnresolvedMachine(inst.machine.clone()))?;
        let it = typecheck(inc, src)?;
        let mut binding = Binding::new();
        let mut types = BTreeMap::new();
        for (formal, actual) in inc.parameters.iter().zip(&inst.actuals) {
            binding.insert(formal.clone(), actual.clone());
            if let SetType::Power(el) = type_of(actual, &t.env)? {
                types.insert(formal.clone(), *el);
            }
        }
        let fi = flatten_typed(&it, src)?.instantiate(&binding, &types);
        for g in fi.given {
            if !given.iter().any(|h| h.name == g.name) {
                given.push(g);
            }
        }
        invariant.extend(fi.invariant);
        inits.push(fi.init);
        variables.extend(fi.variables);
        for op in fi.ops {
            if !it.exported.contains(&op.name) {
                continue;
            }
            let mut p = op.clone();
            p.origin = OpOrigin::Promoted(inc.name.clone());
            p.calls.clear();
            if i >= n_includes || m.promotes.contains(&op.name) {
                promoted.push(p);
            }
            callees.insert(op.name.clone(), op);
        }
    }

    for c in m.invariant.conjuncts() {
        if *c != Pred::True {
            invariant.push(Conjunct { pred: expand(c), machine: m.name.clone() });
        }
    }
    let mut init_sites = Vec::new();
    inits.push(inline(&rename_idents(&m.initialisation, &aliases), &callees, &mut init_sites)?);
    let init = Subst::parallel(inits.into_iter().filter(|s| *s != Subst::Skip).collect());
    variables.extend(m.variables.iter().cloned());

    let mut ops = Vec::new();
    for op in &m.operations {
        let (pre, body) = op.split_pre();
        let mut calls = Vec::new();
        let body = inline(&rename_idents(body, &aliases), &callees, &mut calls)?;
        ops.push(FlatOp {
            name: op.name.clone(),
            machine: m.name.clone(),
            inputs: op.inputs.clone(),
            outputs: op.outputs.clone(),
            pre: expand(pre),
            body,
            calls,
            origin: OpOrigin::Own,
            locals: t.locals.get(&op.name).cloned().unwrap_or_default(),
        });
    }
    ops.extend(promoted);

    let mut var_types = BTreeMap::new();
    for v in &variables {
        if let Some(e) = t.env.lookup(v) {
            var_types.insert(v.clone(), e.ty.clone());
        }
    }
    Ok(FlatMachine {
        name: m.name.clone(),
        kind: m.kind,
        refines: m.refines.clone(),
        parameters: m.parameters.clone(),
        given,
        variables,
        invariant,
        init,
        ops,
        var_types,
    })
}

fn inline(
    s: &Subst,
    callees: &BTreeMap<String, FlatOp>,
    sites: &mut Vec<CallSite>,
) -> Result<Subst, PogenError> {
    Ok(match s {
        Subst::Call { outputs, op, args } => {
            let c = callees.get(op).ok_or_else(|| PogenError::UnresolvedCall(op.clone()))?;
            // Move the callee's locals out of the way first so that actuals
            // mentioning the same names are not captured.
            let fresh: BTreeMap<String, String> = c
                .inputs
                .iter()
                .chain(&c.outputs)
                .map(|n| (n.clone(), format!("{op}.{n}")))
                .collect();
            let outs: BTreeMap<String, String> =
                c.outputs.iter().zip(outputs).map(|(n, a)| (format!("{op}.{n}"), a.clone())).collect();
            let b: Binding =
                c.inputs.iter().zip(args).map(|(n, a)| (format!("{op}.{n}"), a.clone())).collect();
            let body = rename_idents(&rename_idents(&c.body, &fresh), &outs).substitute(&b);
            let pre = rename_idents(&c.pre, &fresh).substitute(&b);
            sites.push(CallSite { callee: op.clone(), machine: c.machine.clone(), pre });
            body
        }
        Subst::Parallel(a, b) => {
            Subst::Parallel(Box::new(inline(a, callees, sites)?), Box::new(inline(b, callees, sites)?))
        }
        Subst::Pre(p, b) => Subst::Pre(p.clone(), Box::new(inline(b, callees, sites)?)),
        other => other.clone(),
    })
}

/// A substitution in normal form: hoisted preconditions and one
/// simultaneous assignment.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Normal {
    pub pres: Vec<Pred>,
    pub assigns: BTreeMap<String, Expr>,
}

pub fn normalize(s: &Subst) -> Result<Normal, PogenError> {
    let mut n = Normal::default();
    normalize_into(s, &mut n)?;
    Ok(n)
}

fn normalize_into(s: &Subst, n: &mut Normal) -> Result<(), PogenError> {
    let assign = |x: &str, e: Expr, n: &mut Normal| {
        if n.assigns.insert(x.to_string(), e).is_some() {
            return Err(PogenError::ParallelClash(x.to_string()));
        }
        Ok(())
    };
    match s {
        Subst::Skip => Ok(()),
        Subst::Assign(xs, es) => {
            for (x, e) in xs.iter().zip(es) {
                assign(x, e.clone(), n)?;
            }
            Ok(())
        }
        Subst::FunAssign(f, x, v) => {
            let e = Expr::override_(Expr::id(f.clone()), Expr::singleton(Expr::maplet(x.clone(), v.clone())));
            assign(f, e, n)
        }
        Subst::Parallel(a, b) => {
            normalize_into(a, n)?;
            normalize_into(b, n)
        }
        Subst::Pre(p, b) => {
            n.pres.push(p.clone());
            normalize_into(b, n)
        }
        Subst::Call { op, .. } => Err(PogenError::UnflattenedCall(op.clone())),
    }
}

/// Weakest precondition of `s` for `post`.
pub fn wp(s: &Subst, post: &Pred) -> Result<Pred, PogenError> {
    let n = normalize(s)?;
    let mut parts = n.pres;
    parts.push(post.substitute(&n.assigns));
    Ok(Pred::conj(parts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoKind {
    Init,
    OpPreservesInvariant,
    CallPrecondition,
    RefinementPrecondition,
    RefinementOp,
    RefinementInit,
}

impl PoKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PoKind::Init => "init",
            PoKind::OpPreservesInvariant => "op-preserves-invariant",
            PoKind::CallPrecondition => "call-precondition",
            PoKind::RefinementPrecondition => "refinement-precondition",
            PoKind::RefinementOp => "refinement-op",
            PoKind::RefinementInit => "refinement-init",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PoLabel {
    pub machine: String,
    pub kind: PoKind,
    pub operation: Option<String>,
    pub index: usize,
}

impl fmt::Display for PoLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.machine, self.kind.as_str())?;
        if let Some(op) = &self.operation {
            write!(f, "/{op}")?;
        }
        write!(f, "/{}", self.index)
    }
}

/// What the oracle needs to interpret a PO: carrier sets and typing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PoContext {
    pub given: Vec<GivenSet>,
    pub types: BTreeMap<String, SetType>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofObligation {
    pub label: PoLabel,
    pub hypotheses: Vec<Pred>,
    pub goal: Pred,
    pub context: Arc<PoContext>,
}

impl ProofObligation {
    /// The PO with every identifier mapped through `map`, label dropped.
    pub fn renamed(&self, map: &BTreeMap<String, String>) -> (Vec<Pred>, Pred) {
        (
            self.hypotheses.iter().map(|h| rename_idents(h, map)).collect(),
            rename_idents(&self.goal, map),
        )
    }
}

/// Hypotheses stating that deferred sets are nonempty and enumerated sets
/// consist of distinct elements.
pub fn context_hypotheses(given: &[GivenSet]) -> Vec<Pred> {
    let mut out = Vec::new();
    for g in given {
        match &g.elements {
            None => out.push(Pred::not(Pred::Eq(Expr::id(g.name.clone()), Expr::Empty))),
            Some(els) => {
                out.push(Pred::Eq(
                    Expr::id(g.name.clone()),
                    Expr::SetLit(els.iter().map(|e| Expr::id(e.clone())).collect()),
                ));
                for (i, a) in els.iter().enumerate() {
                    for b in &els[i + 1..] {
                        out.push(Pred::not(Pred::Eq(Expr::id(a.clone()), Expr::id(b.clone()))));
                    }
                }
            }
        }
    }
    out
}

fn po_context(given: &[GivenSet], types: impl IntoIterator<Item = (String, SetType)>) -> Arc<PoContext> {
    let mut all: BTreeMap<String, SetType> = types.into_iter().collect();
    for g in given {
        all.insert(g.name.clone(), SetType::power(SetType::given(g.name.clone())));
        for e in g.elements.iter().flatten() {
            all.insert(e.clone(), SetType::given(g.name.clone()));
        }
    }
    Arc::new(PoContext { given: given.to_vec(), types: all })
}

fn split(p: &Pred) -> Vec<Pred> {
    p.conjuncts().into_iter().filter(|c| **c != Pred::True).cloned().collect()
}

fn dedup(v: Vec<Pred>) -> Vec<Pred> {
    let mut seen = std::collections::BTreeSet::new();
    v.into_iter().filter(|p| seen.insert(p.clone())).collect()
}

/// Initialisation, invariant-preservation and call-precondition POs.
///
/// Own operations are checked against every conjunct of the flattened
/// invariant, promoted ones only against the machine's own conjuncts. A call
/// whose callee precondition is literally among the caller's hypotheses
/// produces no PO.
pub fn machine_pos(f: &FlatMachine) -> Result<Vec<ProofObligation>, PogenError> {
    machine_pos_under(f, &[])
}

/// As [`machine_pos`], with `assumed` added to the operation hypotheses. A
/// refinement assumes the invariant of its abstraction.
pub fn machine_pos_under(f: &FlatMachine, assumed: &[Pred]) -> Result<Vec<ProofObligation>, PogenError> {
    let ctx_hyps = context_hypotheses(&f.given);
    let inv: Vec<Pred> = f.invariant.iter().map(|c| c.pred.clone()).collect();
    let label = |kind, operation: Option<&str>, index| PoLabel {
        machine: f.name.clone(),
        kind,
        operation: operation.map(str::to_string),
        index,
    };
    let mut out = Vec::new();

    let init_ctx = po_context(&f.given, f.var_types.clone());
    for (k, c) in f.own_conjuncts() {
        out.push(ProofObligation {
            label: label(PoKind::Init, None, k),
            hypotheses: ctx_hyps.clone(),
            goal: wp(&f.init, &c.pred)?,
            context: init_ctx.clone(),
        });
    }

    for op in &f.ops {
        let ctx = po_context(
            &f.given,
            f.var_types.iter().map(|(k, v)| (k.clone(), v.clone())).chain(op.locals.clone()),
        );
        let pre = split(&op.pre);
        let mut hyps = ctx_hyps.clone();
        hyps.extend(assumed.iter().cloned());
        hyps.extend(inv.iter().cloned());
        hyps.extend(pre.iter().cloned());
        let hyps = dedup(hyps);
        let conjuncts: Vec<(usize, &Conjunct)> = match op.origin {
            OpOrigin::Own => f.invariant.iter().enumerate().collect(),
            OpOrigin::Promoted(_) => f.own_conjuncts().collect(),
        };
        for (k, c) in conjuncts {
            out.push(ProofObligation {
                label: label(PoKind::OpPreservesInvariant, Some(&op.name), k),
                hypotheses: hyps.clone(),
                goal: wp(&op.body, &c.pred)?,
                context: ctx.clone(),
            });
        }
        for (j, site) in op.calls.iter().enumerate() {
            if split(&site.pre).iter().all(|c| pre.contains(c)) {
                continue;
            }
            out.push(ProofObligation {
                label: label(PoKind::CallPrecondition, Some(&op.name), j),
                hypotheses: hyps.clone(),
                goal: site.pre.clone(),
                context: ctx.clone(),
            });
        }
    }
    Ok(out)
}

/// The gluing invariant: the refinement's own conjuncts, minus reflexive
/// equalities between same-named abstract and concrete variables.
pub fn gluing(c: &FlatMachine) -> Vec<Pred> {
    c.own_conjuncts()
        .map(|(_, k)| k.pred.clone())
        .filter(|p| !matches!(p, Pred::Eq(a, b) if a == b))
        .collect()
}

/// Refinement POs of `c` against its abstraction `a`.
///
/// For each abstract operation with precondition `Pa` and body `Ta`, refined
/// by `Pc`/`Tc`: one PO with goal `Pc`, and per gluing conjunct `J` one PO with
/// goal `[Tc][Ta]J` whose hypotheses also hold `[Tc]Pa`, the antecedent of
/// `[Tc](Pa => [Ta]J)` for deterministic bodies. Shared variable names denote
/// the same variable on both sides.
pub fn refinement_pos(c: &FlatMachine, a: &FlatMachine) -> Result<Vec<ProofObligation>, PogenError> {
    if c.kind != MachineKind::Refinement {
        return Err(PogenError::NotARefinement(c.name.clone()));
    }
    let glue = gluing(c);
    let ctx_hyps = context_hypotheses(&c.given);
    let abs_inv: Vec<Pred> = a.invariant.iter().map(|k| k.pred.clone()).collect();
    let types: BTreeMap<String, SetType> =
        a.var_types.iter().chain(&c.var_types).map(|(k, v)| (k.clone(), v.clone())).collect();
    let label = |kind, operation: Option<&str>, index| PoLabel {
        machine: c.name.clone(),
        kind,
        operation: operation.map(str::to_string),
        index,
    };
    let mut out = Vec::new();

    let init_ctx = po_context(&c.given, types.clone());
    for (k, j) in glue.iter().enumerate() {
        out.push(ProofObligation {
            label: label(PoKind::RefinementInit, None, k),
            hypotheses: ctx_hyps.clone(),
            goal: wp(&c.init, &wp(&a.init, j)?)?,
            context: init_ctx.clone(),
        });
    }

    for oa in a.ops.iter().filter(|o| o.origin == OpOrigin::Own) {
        let oc = c.op(&oa.name).ok_or_else(|| PogenError::MissingAbstractOp(oa.name.clone()))?;
        let ctx = po_context(
            &c.given,
            types.clone().into_iter().chain(oa.locals.clone()).chain(oc.locals.clone()),
        );
        let mut hyps = ctx_hyps.clone();
        hyps.extend(abs_inv.iter().cloned());
        hyps.extend(glue.iter().cloned());
        hyps.extend(split(&oa.pre));
        let hyps = dedup(hyps);
        out.push(ProofObligation {
            label: label(PoKind::RefinementPrecondition, Some(&oa.name), 0),
            hypotheses: hyps.clone(),
            goal: oc.pre.clone(),
            context: ctx.clone(),
        });
        let mut op_hyps = hyps;
        op_hyps.extend(split(&wp(&oc.body, &oa.pre)?));
        let op_hyps = dedup(op_hyps);
        for (k, j) in glue.iter().enumerate() {
            out.push(ProofObligation {
                label: label(PoKind::RefinementOp, Some(&oa.name), k),
                hypotheses: op_hyps.clone(),
                goal: wp(&oc.body, &wp(&oa.body, j)?)?,
                context: ctx.clone(),
            });
        }
    }
    Ok(out)
}

/// Every PO of a machine: its own, plus refinement POs when it refines.
pub fn generate(m: &Machine, src: &dyn MachineSource) -> Result<Vec<ProofObligation>, PogenError> {
    let f = flatten(m, src)?;
    let Some(abs) = &m.refines else { return machine_pos(&f) };
    let am = src.machine(abs).ok_or_else(|| PogenError::UnresolvedMachine(abs.clone()))?;
    let fa = flatten(am, src)?;
    let assumed: Vec<Pred> = fa.invariant.iter().map(|c| c.pred.clone()).collect();
    // Conjuncts over variables only the abstraction has are gluing; the
    // refinement POs answer for them.
    let abstract_only: BTreeSet<&String> = fa.variables.iter().filter(|v| !f.variables.contains(v)).collect();
    let gluing_only = |k: usize| {
        f.invariant[k].pred.free_identifiers().iter().any(|v| abstract_only.contains(v))
    };
    let mut pos = machine_pos_under(&f, &assumed)?;
    pos.retain(|po| {
        !matches!(po.label.kind, PoKind::Init | PoKind::OpPreservesInvariant) || !gluing_only(po.label.index)
    });
    pos.extend(refinement_pos(&f, &fa)?);
    Ok(pos)
}

pub fn is_given_set(ctx: &PoContext, name: &str) -> bool {
    ctx.given.iter().any(|g| g.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::Library;
    use crate::parser::{parse_pred, parse_subst};

    #[test]
    fn wp_of_simultaneous_assignment() {
        let s = parse_subst("x := y || y := x").unwrap();
        let p = parse_pred("x <: y").unwrap();
        assert_eq!(wp(&s, &p).unwrap(), parse_pred("y <: x").unwrap());
    }

    #[test]
    fn wp_hoists_preconditions_and_desugars_function_update() {
        let s = parse_subst("PRE a : S THEN f(a) := b END").unwrap();
        let w = wp(&s, &parse_pred("f : S +-> T").unwrap()).unwrap();
        assert_eq!(w, parse_pred("a : S & f <+ {a |-> b} : S +-> T").unwrap());
        assert!(matches!(
            wp(&parse_subst("Op(x)").unwrap(), &Pred::True),
            Err(PogenError::UnflattenedCall(_))
        ));
    }

    #[test]
    fn flattened_composition_has_both_pattern_states() {
        let lib = Library::embedded();
        let f = flatten(lib.machine("Comp_By_Unif_Inst").unwrap(), &lib).unwrap();
        let mut want: Vec<String> = Vec::new();
        for p in ["Composite_Pattern", "Resource_Allocation"] {
            want.extend(lib.machine(p).unwrap().variables.iter().cloned());
        }
        assert_eq!(f.variables, want);
        assert_eq!(f.invariant.last().unwrap().pred, parse_pred("Component = Resource").unwrap());
        let rf = f.op("Remove_File").unwrap();
        assert_eq!(rf.pre, parse_pred("file : Leaf & file : dom(Father)").unwrap());
        assert_eq!(rf.calls.len(), 2);
        assert!(f.op("GetChild").is_some());
        assert!(f.given.iter().any(|g| g.name == "DATE"));
        assert!(!f.given.iter().any(|g| g.name == "COMPONENT"));
    }

    #[test]
    fn promoted_ops_without_own_invariant_give_no_pos() {
        let lib = Library::embedded();
        let f = flatten(lib.machine("Comp_By_Unif_Inst").unwrap(), &lib).unwrap();
        let pos = machine_pos(&f).unwrap();
        assert!(pos.iter().any(|p| p.label.operation.as_deref() == Some("GetChild")));
        let own = lib.machine("Composite_Pattern").unwrap();
        let fp = flatten(own, &lib).unwrap();
        let n = machine_pos(&fp).unwrap().len();
        // 6 init POs plus 10 operations times 6 conjuncts.
        assert_eq!(n, 6 + 10 * 6);
    }

    #[test]
    fn refinement_pos_cover_every_abstract_operation() {
        let lib = Library::embedded();
        let m = lib.machine("Extension").unwrap();
        let pos = generate(m, &lib).unwrap();
        let refs: Vec<_> = pos.iter().filter(|p| p.label.kind == PoKind::RefinementOp).collect();
        // six abstract operations, two gluing conjuncts each
        assert_eq!(refs.len(), 12);
        let rf = refs
            .iter()
            .find(|p| p.label.operation.as_deref() == Some("Remove_File"))
            .unwrap();
        assert!(rf.hypotheses.contains(&parse_pred("file : dom(Father)").unwrap()));
        assert!(rf.hypotheses.contains(&parse_pred("file : dom({file} <<| Father)").unwrap()));
    }

    #[test]
    fn missing_abstract_operation_is_reported() {
        let mut lib = Library::embedded();
        let mut ext = lib.machine("Extension").unwrap().clone();
        ext.operations.retain(|o| o.name != "Write_Mode");
        lib.insert(ext.clone());
        assert_eq!(generate(&ext, &lib).unwrap_err(), PogenError::MissingAbstractOp("Write_Mode".into()));
    }
}
