//! Proof-obligation reports: a serializable record of what was generated,
//! how each obligation was discharged, and from which inputs.

use std::fmt::Write;

use serde::Serialize;

use crate::discharge::{summarize, Status, Summary, Verdict};
use crate::oracle::Counterexample;
use crate::pogen::ProofObligation;

/// Bumped whenever a field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub machine: String,
    /// File path, or `embedded` for the built-in library.
    pub source: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PoEntry {
    pub label: String,
    pub kind: &'static str,
    pub operation: Option<String>,
    pub index: usize,
    pub status: Status,
    pub rule: Option<&'static str>,
    pub tags: Vec<&'static str>,
    pub goal: String,
    pub residual: Option<String>,
    pub counterexample: Option<Counterexample>,
    pub oracle: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MachineReport {
    pub machine: String,
    pub summary: Summary,
    pub obligations: Vec<PoEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub schema: u32,
    pub inputs: Vec<InputDigest>,
    /// Carrier sizes tried by the oracle; empty when it was not run.
    pub oracle_sizes: Vec<usize>,
    pub machines: Vec<MachineReport>,
    pub summary: Summary,
}

fn entry(po: &ProofObligation, v: &Verdict) -> PoEntry {
    PoEntry {
        label: po.label.to_string(),
        kind: po.label.kind.as_str(),
        operation: po.label.operation.clone(),
        index: po.label.index,
        status: v.status,
        rule: v.rule.map(|r| r.as_str()),
        tags: v.tags.clone(),
        goal: po.goal.to_string(),
        residual: v.residual.as_ref().map(ToString::to_string),
        counterexample: v.counterexample.clone(),
        oracle: v.oracle.clone(),
    }
}

impl Report {
    /// Groups obligations by the machine named in their label, sorted by
    /// label.
    pub fn new(
        version: &str,
        inputs: Vec<InputDigest>,
        oracle_sizes: Vec<usize>,
        pos: &[ProofObligation],
        verdicts: &[Verdict],
    ) -> Report {
        let mut pairs: Vec<(&ProofObligation, &Verdict)> = pos.iter().zip(verdicts).collect();
        pairs.sort_by(|a, b| a.0.label.cmp(&b.0.label));
        let mut machines: Vec<MachineReport> = Vec::new();
        let mut grouped: Vec<Vec<Verdict>> = Vec::new();
        for (po, v) in pairs {
            if machines.last().map(|m| &m.machine) != Some(&po.label.machine) {
                machines.push(MachineReport {
                    machine: po.label.machine.clone(),
                    summary: Summary::default(),
                    obligations: Vec::new(),
                });
                grouped.push(Vec::new());
            }
            machines.last_mut().unwrap().obligations.push(entry(po, v));
            grouped.last_mut().unwrap().push(v.clone());
        }
        for (m, vs) in machines.iter_mut().zip(&grouped) {
            m.summary = summarize(vs);
        }
        let mut inputs = inputs;
        inputs.sort_by(|a, b| a.machine.cmp(&b.machine));
        Report {
            tool: "bpat".into(),
            version: version.into(),
            schema: SCHEMA_VERSION,
            inputs,
            oracle_sizes,
            machines,
            summary: summarize(verdicts),
        }
    }

    /// Exit status of `pogen`: 5 if anything is refuted, 4 if anything is
    /// left interactive, 0 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.refuted > 0 {
            5
        } else if self.summary.interactive > 0 {
            4
        } else {
            0
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} (report schema {})", self.tool, self.version, self.schema);
        for i in &self.inputs {
            let _ = writeln!(out, "input {} {} sha256:{}", i.machine, i.source, i.sha256);
        }
        if self.oracle_sizes.is_empty() {
            let _ = writeln!(out, "oracle: off");
        } else {
            let sizes: Vec<String> = self.oracle_sizes.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "oracle: sizes {}", sizes.join(","));
        }
        for m in &self.machines {
            let _ = writeln!(out, "\n{}: {}", m.machine, summary_line(&m.summary));
            for e in &m.obligations {
                let mut notes: Vec<&str> = e.rule.into_iter().collect();
                notes.extend(e.tags.iter().copied());
                let notes = if notes.is_empty() { String::new() } else { format!(" [{}]", notes.join(", ")) };
                let _ = writeln!(out, "  {:<11} {}{}", e.status.as_str(), e.label, notes);
                if let Some(r) = &e.residual {
                    let _ = writeln!(out, "      residual: {r}");
                }
                if let Some(o) = &e.oracle {
                    let _ = writeln!(out, "      oracle: {o}");
                }
                if let Some(c) = &e.counterexample {
                    let sets: Vec<String> =
                        c.model.sets.iter().map(|(s, els)| format!("{s} = {{{}}}", els.join(", "))).collect();
                    let _ = writeln!(out, "      model: {}", sets.join("; "));
                    for (v, val) in &c.valuation {
                        let _ = writeln!(out, "      {v} = {val}");
                    }
                }
            }
        }
        let _ = writeln!(out, "\ntotal: {}", summary_line(&self.summary));
        out
    }
}

pub fn summary_line(s: &Summary) -> String {
    format!(
        "{} PO(s), {} obvious, {} auto, {} interactive, {} refuted ({} {})",
        s.total,
        s.obvious,
        s.auto,
        s.interactive,
        s.refuted,
        s.reusable,
        crate::discharge::REUSABLE_TAG
    )
}
