//! Automatic discharge of proof obligations.
//!
//! Each obligation ends up in one of four classes: obvious (the goal is
//! trivially true or literally among the hypotheses), automatic (proved by a
//! named rule), interactive (left over, with the residual goal) or refuted
//! (the finite-model oracle found a counterexample to a leftover).

pub mod prover;
pub mod sat;
pub mod simplify;

use rayon::prelude::*;
use serde::Serialize;

use crate::ast::Pred;
use crate::oracle::{Counterexample, Oracle, Outcome};
use crate::pogen::{PoContext, ProofObligation};
use prover::Knowledge;
use simplify::{simplify_pred, SimpContext};

/// Tag carried by obligations whose proof does not depend on the particular
/// operation bodies, only on a contradiction among the hypotheses.
pub const REUSABLE_TAG: &str = "reusable-class";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Obvious,
    Auto,
    Interactive,
    Refuted,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Obvious => "obvious",
            Status::Auto => "auto",
            Status::Interactive => "interactive",
            Status::Refuted => "refuted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Goal simplifies to true or is a hypothesis.
    Trivial,
    /// Some hypothesis simplifies to false.
    FalseHypothesis,
    /// Set-algebra decision procedure.
    Saturation,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Trivial => "trivial",
            Rule::FalseHypothesis => "false-hypothesis",
            Rule::Saturation => "saturation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    pub rule: Option<Rule>,
    pub tags: Vec<&'static str>,
    /// What is left to prove, for interactive and refuted obligations.
    pub residual: Option<Pred>,
    pub counterexample: Option<Counterexample>,
    /// Outcome of the oracle run on a leftover, when not a refutation.
    pub oracle: Option<String>,
}

impl Verdict {
    fn proved(status: Status, rule: Rule) -> Self {
        let tags = if rule == Rule::FalseHypothesis { vec![REUSABLE_TAG] } else { vec![] };
        Verdict { status, rule: Some(rule), tags, residual: None, counterexample: None, oracle: None }
    }

    pub fn is_reusable(&self) -> bool {
        self.tags.contains(&REUSABLE_TAG)
    }
}

pub fn simp_context(cx: &PoContext) -> SimpContext {
    let mut s = SimpContext::default();
    for g in &cx.given {
        s.carriers.insert(g.name.clone());
        for e in g.elements.iter().flatten() {
            s.enum_of.insert(e.clone(), g.name.clone());
        }
    }
    s
}

fn split(p: &Pred, out: &mut Vec<Pred>) {
    match p {
        Pred::True => {}
        Pred::And(a, b) => {
            split(a, out);
            split(b, out);
        }
        Pred::Not(q) if matches!(**q, Pred::Not(_)) => {
            if let Pred::Not(r) = &**q {
                split(r, out)
            }
        }
        other => out.push(other.clone()),
    }
}

pub fn classify(po: &ProofObligation) -> Verdict {
    let cx = simp_context(&po.context);
    let goal = simplify_pred(&po.goal, &cx);
    let mut goals = Vec::new();
    split(&goal, &mut goals);
    if goals.is_empty() {
        return Verdict::proved(Status::Obvious, Rule::Trivial);
    }
    let mut hyps = Vec::new();
    for h in &po.hypotheses {
        split(&simplify_pred(h, &cx), &mut hyps);
    }
    if goals.iter().all(|g| hyps.contains(g)) {
        return Verdict::proved(Status::Obvious, Rule::Trivial);
    }
    if hyps.contains(&Pred::False) {
        return Verdict::proved(Status::Auto, Rule::FalseHypothesis);
    }
    let k = Knowledge::new(&hyps, &po.context.types, &cx);
    let open: Vec<Pred> = goals
        .into_iter()
        .filter(|g| !hyps.contains(g) && !k.proves(g))
        .collect();
    if open.is_empty() {
        Verdict::proved(Status::Auto, Rule::Saturation)
    } else {
        Verdict {
            status: Status::Interactive,
            rule: None,
            tags: vec![],
            residual: Some(Pred::conj(open)),
            counterexample: None,
            oracle: None,
        }
    }
}

/// Classifies every obligation, in parallel, preserving order.
pub fn classify_all(pos: &[ProofObligation]) -> Vec<Verdict> {
    pos.par_iter().map(classify).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub obvious: usize,
    pub auto: usize,
    pub interactive: usize,
    pub refuted: usize,
    pub reusable: usize,
}

pub fn summarize(vs: &[Verdict]) -> Summary {
    let mut s = Summary { total: vs.len(), ..Summary::default() };
    for v in vs {
        match v.status {
            Status::Obvious => s.obvious += 1,
            Status::Auto => s.auto += 1,
            Status::Interactive => s.interactive += 1,
            Status::Refuted => s.refuted += 1,
        }
        if v.is_reusable() {
            s.reusable += 1;
        }
    }
    s
}

/// Runs the oracle on an interactive obligation. A counterexample turns it
/// into a refuted one; otherwise the oracle's finding is noted.
pub fn validate(po: &ProofObligation, v: &mut Verdict, oracle: &Oracle) {
    if v.status != Status::Interactive {
        return;
    }
    match oracle.check(po) {
        Ok(Outcome::Refuted(c)) => {
            v.status = Status::Refuted;
            v.counterexample = Some(c);
        }
        Ok(Outcome::Valid { models }) => {
            let max = oracle.sizes.iter().max().copied().unwrap_or(0);
            v.oracle = Some(format!("no counterexample in {models} model(s) of size <= {max}"));
        }
        Err(e) => v.oracle = Some(format!("oracle gave up: {e}")),
    }
}

/// Classifies every obligation and, given an oracle, validates the
/// leftovers. Order is preserved.
pub fn discharge(pos: &[ProofObligation], oracle: Option<&Oracle>) -> Vec<Verdict> {
    pos.par_iter()
        .map(|po| {
            let mut v = classify(po);
            if let Some(o) = oracle {
                validate(po, &mut v, o);
            }
            v
        })
        .collect()
}
