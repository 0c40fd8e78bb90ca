//! Specification-pattern workbench for B machines: parsing, typing, the reuse
//! operators, proof-obligation generation and automatic discharge.

pub mod ast;
pub mod crosscheck;
pub mod discharge;
pub mod library;
pub mod oracle;
pub mod parser;
pub mod pogen;
pub mod pretty;
pub mod random;
pub mod report;
pub mod reuse;
pub mod specfile;
pub mod typecheck;

pub use ast::{Expr, Machine, MachineKind, Operation, Pred, RelKind, RenamingMap, SetDecl, Subst};
pub use parser::{parse_expr, parse_machine, parse_machine_str, parse_pred, parse_subst, ParseError, SourceFile};
pub use pretty::pretty_print;
pub use library::{Library, MachineSource};
pub use reuse::{compose, extend, instantiate, Composition, ReuseError};
pub use report::{InputDigest, Report};
pub use specfile::{apply as apply_spec, parse_spec, Spec, SpecError, SpecFile};
pub use typecheck::{typecheck, SetType, TypeEnv, TypeError, TypedMachine};
pub use pogen::{flatten, generate, machine_pos, machine_pos_under, refinement_pos, wp, FlatMachine, PoKind, PoLabel, ProofObligation};
pub use discharge::{classify, classify_all, discharge, summarize, Rule, Status, Summary, Verdict};
pub use oracle::{Counterexample, FiniteModel, Oracle, OracleError, Outcome};
