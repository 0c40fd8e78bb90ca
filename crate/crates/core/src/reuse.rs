//! Reuse mechanisms as machine-to-machine transformations: instantiation,
//! composition (juxtaposition, inter-pattern links, unification) and
//! extension by refinement.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ast::*;
use crate::library::MachineSource;
use crate::typecheck::{typecheck, unifiable, SetType, TypeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReuseError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Renaming(#[from] AstError),
    #[error("unknown machine `{0}`")]
    UnknownMachine(String),
    #[error("`{pattern}` expects {expected} parameter(s), {found} bound")]
    ParameterCount { pattern: String, expected: usize, found: usize },
    #[error("parameter `{param}` of `{pattern}` is not bound")]
    UnboundParameter { pattern: String, param: String },
    #[error("`{0}` is not a set of the new machine")]
    UndeclaredSet(String),
    #[error("directive names `{0}`, which the pattern does not define")]
    DanglingDirective(String),
    #[error("operation `{0}` has no directive")]
    MissingDirective(String),
    #[error("operation `{0}` has more than one directive")]
    DuplicateDirective(String),
    #[error("wrapper `{name}` needs {expected} parameter name(s), {found} given")]
    WrapperArity { name: String, expected: usize, found: usize },
    #[error("`{0}` is exported by more than one pattern")]
    NameClash(String),
    #[error("pattern `{0}` appears more than once")]
    DuplicatePattern(String),
    #[error("a composition needs at least two patterns")]
    TooFewPatterns,
    #[error("unified patterns share no actual parameter")]
    MissingSharedParameter,
    #[error("`{0}` is not a variable of any composed pattern")]
    UnknownVariable(String),
    #[error("extension of `{op}` modifies `{var}`, which is not a new variable")]
    RefinementViolation { op: String, var: String },
    #[error("new operation `{0}` already has a non-skip body in the abstraction")]
    NewOpNotSkip(String),
    #[error("`{0}` is not an operation of the extended machine")]
    UnknownOperation(String),
}

/// What becomes of one pattern operation in an instantiation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OpDirective {
    Promote,
    /// A wrapper operation calling the pattern operation, with its input
    /// parameters renamed.
    Wrap { name: String, params: Vec<String> },
    Drop,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstantiationSpec {
    pub pattern: String,
    pub name: String,
    pub sets: Vec<SetDecl>,
    /// Formal parameter -> actual set.
    pub binding: BTreeMap<String, String>,
    pub renaming: RenamingMap,
    pub directives: Vec<(String, OpDirective)>,
}

/// A pattern with its actual parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternUse {
    pub name: String,
    pub actuals: Vec<String>,
}

/// An operation built from calls to pattern operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComposedOp {
    pub name: String,
    pub outputs: Vec<String>,
    pub params: Vec<String>,
    pub pre: Pred,
    pub calls: Vec<Subst>,
    /// Substitution on the composition's own variables, run in parallel.
    pub extra: Subst,
}

impl ComposedOp {
    fn operation(&self) -> Operation {
        let mut branches = self.calls.clone();
        branches.extend(self.extra.parallel_branches().into_iter().filter(|s| **s != Subst::Skip).cloned());
        let body = Subst::parallel(branches);
        Operation {
            name: self.name.clone(),
            outputs: self.outputs.clone(),
            inputs: self.params.clone(),
            body: if self.pre == Pred::True { body } else { Subst::Pre(self.pre.clone(), Box::new(body)) },
        }
    }
}

/// Juxtaposition, links and unification share this shape; the unused parts
/// are left empty.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CompositionSpec {
    pub name: String,
    pub sets: Vec<SetDecl>,
    pub patterns: Vec<PatternUse>,
    pub renaming: RenamingMap,
    /// New variables (inter-pattern links).
    pub variables: Vec<String>,
    /// Conjuncts over the new variables.
    pub invariant: Pred,
    pub initialisation: Subst,
    /// Variable pairs merged by unification, `(first pattern, second)`.
    pub unify: Vec<(String, String)>,
    pub promotes: Vec<String>,
    pub operations: Vec<ComposedOp>,
}

impl Default for Pred {
    fn default() -> Self {
        Pred::True
    }
}

impl Default for Subst {
    fn default() -> Self {
        Subst::Skip
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewOperation {
    pub name: String,
    pub outputs: Vec<String>,
    pub params: Vec<String>,
    pub pre: Pred,
    pub body: Subst,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExtensionSpec {
    pub name: String,
    pub sets: Vec<SetDecl>,
    pub variables: Vec<String>,
    pub invariant: Pred,
    pub initialisation: Subst,
    /// Existing operation -> substitution on new variables run in parallel
    /// with its body.
    pub extra: Vec<(String, Subst)>,
    pub new_operations: Vec<NewOperation>,
}

fn lookup<'a>(src: &'a dyn MachineSource, name: &str) -> Result<&'a Machine, ReuseError> {
    src.machine(name).ok_or_else(|| ReuseError::UnknownMachine(name.to_string()))
}

/// Source holding one extra machine in front of `src`.
struct With<'a> {
    m: &'a Machine,
    src: &'a dyn MachineSource,
}

impl MachineSource for With<'_> {
    fn machine(&self, name: &str) -> Option<&Machine> {
        if name == self.m.name {
            Some(self.m)
        } else {
            self.src.machine(name)
        }
    }
}

fn check_output(m: &Machine, src: &dyn MachineSource) -> Result<(), ReuseError> {
    typecheck(m, &With { m, src })?;
    Ok(())
}

fn check_actuals(p: &Machine, actuals: &[String], sets: &[SetDecl]) -> Result<(), ReuseError> {
    if p.parameters.len() != actuals.len() {
        return Err(ReuseError::ParameterCount {
            pattern: p.name.clone(),
            expected: p.parameters.len(),
            found: actuals.len(),
        });
    }
    for a in actuals {
        if !sets.iter().any(|s| &s.name == a) {
            return Err(ReuseError::UndeclaredSet(a.clone()));
        }
    }
    Ok(())
}

fn instance(name: &str, actuals: &[String]) -> Instance {
    Instance { machine: name.to_string(), actuals: actuals.iter().map(|a| Expr::id(a.clone())).collect() }
}

/// Names the patterns export: variables, sets, set elements and operations.
fn exported_names(ms: &[&Machine], src: &dyn MachineSource) -> Result<BTreeSet<String>, ReuseError> {
    let mut visible = BTreeSet::new();
    for m in ms {
        let t = typecheck(m, src)?;
        visible.extend(t.env.entries().map(|(n, _)| n.clone()));
        visible.extend(t.env.ops.keys().cloned());
    }
    Ok(visible)
}

/// Every old name of a renaming must be exported by a pattern; no new name
/// may be.
fn check_renaming(r: &RenamingMap, visible: &BTreeSet<String>) -> Result<(), ReuseError> {
    for (new, old) in r.pairs() {
        if !visible.contains(old) {
            return Err(AstError::UnknownName(old.clone()).into());
        }
        if visible.contains(new) {
            return Err(AstError::Collision(new.clone()).into());
        }
    }
    Ok(())
}

/// Builds a machine that includes the pattern with actual sets, renames its
/// vocabulary through DEFINITIONS and exposes its operations as directed.
pub fn instantiate(spec: &InstantiationSpec, src: &dyn MachineSource) -> Result<Machine, ReuseError> {
    let p = lookup(src, &spec.pattern)?;
    for f in &p.parameters {
        if !spec.binding.contains_key(f) {
            return Err(ReuseError::UnboundParameter { pattern: p.name.clone(), param: f.clone() });
        }
    }
    if spec.binding.len() != p.parameters.len() {
        let extra = spec.binding.keys().find(|k| !p.parameters.contains(k)).cloned().unwrap_or_default();
        return Err(ReuseError::UnboundParameter { pattern: p.name.clone(), param: extra });
    }
    let actuals: Vec<String> = p.parameters.iter().map(|f| spec.binding[f].clone()).collect();
    check_actuals(p, &actuals, &spec.sets)?;
    let typed = typecheck(p, src)?;
    let mut visible: BTreeSet<String> = typed.env.entries().map(|(n, _)| n.clone()).collect();
    visible.retain(|n| !p.parameters.contains(n));
    check_renaming(&spec.renaming, &visible)?;

    let mut seen = BTreeSet::new();
    for (op, _) in &spec.directives {
        if !typed.exported.contains(op) {
            return Err(ReuseError::DanglingDirective(op.clone()));
        }
        if !seen.insert(op.clone()) {
            return Err(ReuseError::DuplicateDirective(op.clone()));
        }
    }
    if let Some(op) = typed.exported.iter().find(|o| !seen.contains(*o)) {
        return Err(ReuseError::MissingDirective(op.clone()));
    }

    let mut m = Machine::new(MachineKind::Abstract, spec.name.clone());
    m.sets = spec.sets.clone();
    m.definitions = spec.renaming.clone();
    m.includes.push(instance(&p.name, &actuals));
    let mut names = spec.renaming.forward();
    names.extend(spec.binding.iter().map(|(f, a)| (f.clone(), a.clone())));
    for (op, d) in &spec.directives {
        match d {
            OpDirective::Promote => m.promotes.push(op.clone()),
            OpDirective::Drop => {}
            OpDirective::Wrap { name, params } => m.operations.push(wrapper(p, &typed, op, name, params, &names)?),
        }
    }
    check_output(&m, src)?;
    Ok(m)
}

/// An operation named `name` whose precondition is the pattern's, renamed,
/// and whose body calls `op`.
fn wrapper(
    p: &Machine,
    typed: &crate::typecheck::TypedMachine,
    op: &str,
    name: &str,
    params: &[String],
    names: &BTreeMap<String, String>,
) -> Result<Operation, ReuseError> {
    let sig = &typed.env.ops[op];
    if params.len() != sig.inputs.len() + sig.outputs.len() {
        return Err(ReuseError::WrapperArity {
            name: name.to_string(),
            expected: sig.inputs.len() + sig.outputs.len(),
            found: params.len(),
        });
    }
    let (outs, ins) = params.split_at(sig.outputs.len());
    let mut map = names.clone();
    for ((formal, _), new) in sig.outputs.iter().chain(&sig.inputs).zip(outs.iter().chain(ins)) {
        map.insert(formal.clone(), new.clone());
    }
    let pre = match p.operation(op) {
        Some(o) => rename_idents(o.split_pre().0, &map),
        None => Pred::True,
    };
    let call = Subst::Call {
        outputs: outs.to_vec(),
        op: op.to_string(),
        args: ins.iter().map(|a| Expr::id(a.clone())).collect(),
    };
    Ok(Operation {
        name: name.to_string(),
        outputs: outs.to_vec(),
        inputs: ins.to_vec(),
        body: if pre == Pred::True { call } else { Subst::Pre(pre, Box::new(call)) },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Composition {
    Juxtaposition,
    Links,
    Unification,
}

fn pattern_names(p: &Machine, src: &dyn MachineSource) -> Result<BTreeSet<String>, ReuseError> {
    let mut names = exported_names(&[p], src)?;
    names.retain(|n| !p.parameters.contains(n));
    Ok(names)
}

/// Composes the patterns of `spec`. Juxtaposition extends every pattern and
/// ignores variables, links and operations; the other two include them.
pub fn compose(kind: Composition, spec: &CompositionSpec, src: &dyn MachineSource) -> Result<Machine, ReuseError> {
    if spec.patterns.len() < 2 {
        return Err(ReuseError::TooFewPatterns);
    }
    let mut ms = Vec::new();
    let mut owner: BTreeMap<String, usize> = BTreeMap::new();
    for (i, u) in spec.patterns.iter().enumerate() {
        if spec.patterns[..i].iter().any(|v| v.name == u.name) {
            return Err(ReuseError::DuplicatePattern(u.name.clone()));
        }
        let p = lookup(src, &u.name)?;
        check_actuals(p, &u.actuals, &spec.sets)?;
        for n in pattern_names(p, src)? {
            if owner.insert(n.clone(), i).is_some() {
                return Err(ReuseError::NameClash(n));
            }
        }
        ms.push(p);
    }
    let mut visible: BTreeSet<String> = owner.keys().cloned().collect();
    visible.extend(spec.variables.iter().cloned());
    check_renaming(&spec.renaming, &visible)?;

    let mut m = Machine::new(MachineKind::Abstract, spec.name.clone());
    m.sets = spec.sets.clone();
    m.definitions = spec.renaming.clone();
    let insts: Vec<Instance> = spec.patterns.iter().map(|u| instance(&u.name, &u.actuals)).collect();
    if kind == Composition::Juxtaposition {
        m.extends = insts;
        check_output(&m, src)?;
        return Ok(m);
    }
    m.includes = insts;
    m.promotes = spec.promotes.clone();
    if kind == Composition::Links {
        m.variables = spec.variables.clone();
        m.invariant = spec.invariant.clone();
        m.initialisation = spec.initialisation.clone();
    } else {
        m.invariant = unification_invariant(spec, &ms, &owner, src)?;
    }
    m.operations = spec.operations.iter().map(ComposedOp::operation).collect();
    check_output(&m, src)?;
    Ok(m)
}

/// `a = b` for each unified pair, after checking the pair is well typed and
/// the patterns share an actual set.
fn unification_invariant(
    spec: &CompositionSpec,
    ms: &[&Machine],
    owner: &BTreeMap<String, usize>,
    src: &dyn MachineSource,
) -> Result<Pred, ReuseError> {
    let shared = spec.patterns.iter().enumerate().any(|(i, u)| {
        spec.patterns[i + 1..].iter().any(|v| u.actuals.iter().any(|a| v.actuals.contains(a)))
    });
    if !shared {
        return Err(ReuseError::MissingSharedParameter);
    }
    let typed: Vec<_> = ms.iter().map(|p| typecheck(p, src)).collect::<Result<_, _>>()?;
    let binding = |i: usize| -> BTreeMap<String, SetType> {
        ms[i].parameters
            .iter()
            .zip(&spec.patterns[i].actuals)
            .map(|(f, a)| (f.clone(), SetType::given(a.clone())))
            .collect()
    };
    let mut conj = Vec::new();
    for (a, b) in &spec.unify {
        let ia = *owner.get(a).ok_or_else(|| ReuseError::UnknownVariable(a.clone()))?;
        let ib = *owner.get(b).ok_or_else(|| ReuseError::UnknownVariable(b.clone()))?;
        unifiable(a, b, &typed[ia].env, &typed[ib].env, &binding(ia), &binding(ib))?;
        conj.push(Pred::Eq(Expr::id(a.clone()), Expr::id(b.clone())));
    }
    Ok(Pred::conj(conj))
}

fn check_writes(op: &str, s: &Subst, allowed: &[String]) -> Result<(), ReuseError> {
    match modified_variables(s).into_iter().find(|v| !allowed.contains(v)) {
        Some(var) => Err(ReuseError::RefinementViolation { op: op.to_string(), var }),
        None => Ok(()),
    }
}

fn guarded(pre: &Pred, body: Subst) -> Subst {
    if *pre == Pred::True {
        body
    } else {
        Subst::Pre(pre.clone(), Box::new(body))
    }
}

/// Extends `before` with new variables and operations. Returns the
/// abstraction with every new operation added as a guarded skip, and the
/// refinement carrying the added behaviour.
pub fn extend(
    before: &Machine,
    spec: &ExtensionSpec,
    src: &dyn MachineSource,
) -> Result<(Machine, Machine), ReuseError> {
    typecheck(before, src)?;
    let mut abs = before.clone();
    for n in &spec.new_operations {
        check_writes(&n.name, &n.body, &spec.variables)?;
        let skip = Operation {
            name: n.name.clone(),
            outputs: n.outputs.clone(),
            inputs: n.params.clone(),
            body: guarded(&n.pre, Subst::Skip),
        };
        match abs.operations.iter().find(|o| o.name == n.name) {
            Some(o) if *o.split_pre().1 != Subst::Skip => return Err(ReuseError::NewOpNotSkip(n.name.clone())),
            Some(_) => {}
            None => abs.operations.push(skip),
        }
    }
    let mut seen = BTreeSet::new();
    for (op, s) in &spec.extra {
        if abs.operation(op).is_none() {
            return Err(ReuseError::UnknownOperation(op.clone()));
        }
        if spec.new_operations.iter().any(|n| n.name == *op) || !seen.insert(op.clone()) {
            return Err(ReuseError::DuplicateDirective(op.clone()));
        }
        check_writes(op, s, &spec.variables)?;
    }
    check_output(&abs, src)?;

    let mut r = Machine::new(MachineKind::Refinement, spec.name.clone());
    r.refines = Some(abs.name.clone());
    r.sets = abs.sets.iter().cloned().chain(spec.sets.iter().cloned()).collect();
    r.variables = spec.variables.clone();
    r.definitions = abs.definitions.clone();
    r.includes = abs.includes.clone();
    r.extends = abs.extends.clone();
    r.promotes = abs.promotes.clone();
    r.invariant = spec.invariant.clone();
    r.initialisation = spec.initialisation.clone();
    for o in &abs.operations {
        let (pre, body) = o.split_pre();
        let body = if let Some(n) = spec.new_operations.iter().find(|n| n.name == o.name) {
            n.body.clone()
        } else if let Some((_, s)) = spec.extra.iter().find(|(n, _)| *n == o.name) {
            let mut branches: Vec<Subst> = body.parallel_branches().into_iter().cloned().collect();
            branches.retain(|b| *b != Subst::Skip);
            branches.extend(s.parallel_branches().into_iter().cloned());
            Subst::parallel(branches)
        } else {
            body.clone()
        };
        r.operations.push(Operation { body: guarded(pre, body), ..o.clone() });
    }
    typecheck(&r, &With { m: &abs, src })?;
    Ok((abs, r))
}
