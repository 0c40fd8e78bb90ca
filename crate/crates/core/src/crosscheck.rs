//! Cross-checks between independent procedures: the prover against the
//! oracle, weakest preconditions against direct execution, and renaming
//! against instantiation.

use rayon::prelude::*;

use crate::ast::*;
use crate::discharge::{Status, Verdict};
use crate::library::Library;
use crate::oracle::{Counterexample, Oracle, Outcome};
use crate::pogen::{flatten, generate, machine_pos, wp, PoKind, PogenError, ProofObligation};
use crate::reuse::{instantiate, InstantiationSpec, ReuseError};

#[derive(Debug, Clone, Default)]
pub struct Soundness {
    /// Obvious or automatic obligations given to the oracle.
    pub checked: usize,
    /// Proved obligations the oracle refuted.
    pub unsound: Vec<(String, Counterexample)>,
    /// Obligations the oracle could not decide.
    pub undecided: Vec<(String, String)>,
}

/// Runs the oracle on every obligation the prover claims.
pub fn prover_soundness(pos: &[ProofObligation], verdicts: &[Verdict], oracle: &Oracle) -> Soundness {
    let results: Vec<_> = pos
        .par_iter()
        .zip(verdicts)
        .filter(|(_, v)| matches!(v.status, Status::Obvious | Status::Auto))
        .map(|(po, _)| (po.label.to_string(), oracle.check(po)))
        .collect();
    let mut s = Soundness { checked: results.len(), ..Soundness::default() };
    for (label, r) in results {
        match r {
            Ok(Outcome::Valid { .. }) => {}
            Ok(Outcome::Refuted(c)) => s.unsound.push((label, c)),
            Err(e) => s.undecided.push((label, e.to_string())),
        }
    }
    s
}

#[derive(Debug, Clone, Default)]
pub struct WpAgreement {
    /// (operation, postcondition, model) triples compared.
    pub triples: usize,
    /// Triples where both sides found a counterexample.
    pub refuted: usize,
    pub disagreements: Vec<String>,
    pub undecided: Vec<String>,
}

impl WpAgreement {
    pub fn merge(&mut self, o: WpAgreement) {
        self.triples += o.triples;
        self.refuted += o.refuted;
        self.disagreements.extend(o.disagreements);
        self.undecided.extend(o.undecided);
    }
}

/// For each operation of `m` and each postcondition (the invariant
/// conjuncts plus `probes`), and each model, compares the validity of
/// `hyps => wp(op, post)` with direct execution of the operation.
pub fn wp_vs_transition(m: &Machine, probes: &[Pred], oracle: &Oracle) -> Result<WpAgreement, PogenError> {
    let f = flatten(m, &Library::new())?;
    let pos = machine_pos(&f)?;
    let mut posts: Vec<Pred> = f.invariant.iter().map(|c| c.pred.clone()).collect();
    posts.extend(probes.iter().cloned());
    let mut out = WpAgreement::default();
    for op in &f.ops {
        let Some(base) = pos
            .iter()
            .find(|p| p.label.kind == PoKind::OpPreservesInvariant && p.label.operation.as_deref() == Some(&op.name))
        else {
            continue;
        };
        for post in &posts {
            let po = ProofObligation { goal: wp(&op.body, post)?, ..base.clone() };
            for model in oracle.models_for(&po) {
                out.triples += 1;
                let by_wp = oracle.check_in(&po, &model);
                let by_run = oracle.check_transition_in(&po.context, &model, &po.hypotheses, &op.body, post);
                let tag = || format!("{}: {} after {} on {:?}", m.name, post, op.name, model.sets);
                match (by_wp, by_run) {
                    (Ok(a), Ok(b)) if a.is_some() == b.is_some() => out.refuted += a.is_some() as usize,
                    (Ok(_), Ok(_)) => out.disagreements.push(tag()),
                    (Err(e), _) | (_, Err(e)) => out.undecided.push(format!("{} ({e})", tag())),
                }
            }
        }
    }
    Ok(out)
}

/// The same instantiation with every pattern name mapped through `r`.
fn adjust(spec: &InstantiationSpec, r: &RenamingMap) -> InstantiationSpec {
    let fwd = r.forward();
    let map = |n: &String| fwd.get(n).cloned().unwrap_or_else(|| n.clone());
    let renaming = RenamingMap::new(spec.renaming.pairs().iter().map(|(n, o)| (n.clone(), map(o))))
        .expect("renaming stays injective");
    let directives = spec
        .directives
        .iter()
        .map(|(op, d)| (map(op), d.clone()))
        .collect();
    InstantiationSpec { renaming, directives, ..spec.clone() }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum CrossError {
    #[error(transparent)]
    Reuse(#[from] ReuseError),
    #[error(transparent)]
    Pogen(#[from] PogenError),
    #[error(transparent)]
    Renaming(#[from] AstError),
}

/// `instantiate(rename(p, r), r(spec)) == rename(instantiate(p, spec), r)`,
/// both for the machines and, element-wise with labels erased, for their
/// proof obligations.
pub fn renaming_commutes(p: &Machine, spec: &InstantiationSpec, r: &RenamingMap) -> Result<bool, CrossError> {
    let fwd = r.forward();
    let mut lib = Library::new();
    lib.insert(p.clone());
    let inst = instantiate(spec, &lib)?;
    let mut renamed_lib = Library::new();
    renamed_lib.insert(rename(p, r)?);
    let via_renamed = instantiate(&adjust(spec, r), &renamed_lib)?;
    if rename_idents(&inst, &fwd) != via_renamed {
        return Ok(false);
    }
    lib.insert(inst.clone());
    renamed_lib.insert(via_renamed.clone());
    let before = generate(&inst, &lib)?;
    let after = generate(&via_renamed, &renamed_lib)?;
    Ok(before.len() == after.len()
        && before.iter().zip(&after).all(|(b, a)| b.renamed(&fwd) == (a.hypotheses.clone(), a.goal.clone())))
}
