//! TOML reuse specifications, as consumed by `bpat transform`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::ast::*;
use crate::library::{Layered, Library, LoadError, MachineSource};
use crate::parser::{parse_pred, parse_subst, ParseError};
use crate::reuse::*;

#[derive(Debug, Clone, Error)]
pub enum SpecError {
    #[error("malformed specification: {0}")]
    Toml(String),
    #[error("in `{field}`: {err}")]
    Parse { field: String, err: ParseError },
    #[error("invalid renaming: {0}")]
    Renaming(#[from] AstError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Reuse(#[from] ReuseError),
    #[error("unknown action `{0}` (expected promote, wrap or drop)")]
    Action(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RawSet {
    Deferred(String),
    Enumerated { name: String, elements: Vec<String> },
}

impl From<&RawSet> for SetDecl {
    fn from(r: &RawSet) -> Self {
        match r {
            RawSet::Deferred(n) => SetDecl::deferred(n.clone()),
            RawSet::Enumerated { name, elements } => SetDecl { name: name.clone(), elements: Some(elements.clone()) },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDirective {
    op: String,
    action: String,
    #[serde(rename = "as")]
    as_: Option<String>,
    #[serde(default)]
    params: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPattern {
    name: String,
    #[serde(default)]
    actuals: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOp {
    name: String,
    #[serde(default)]
    outputs: Vec<String>,
    #[serde(default)]
    params: Vec<String>,
    pre: Option<String>,
    #[serde(default)]
    calls: Vec<String>,
    extra: Option<String>,
    body: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExtra {
    op: String,
    subst: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: String,
    name: String,
    #[serde(default)]
    sets: Vec<RawSet>,
    pattern: Option<String>,
    #[serde(default)]
    parameters: BTreeMap<String, String>,
    #[serde(default)]
    renaming: Vec<(String, String)>,
    #[serde(default)]
    patterns: Vec<RawPattern>,
    #[serde(default)]
    unify: Vec<(String, String)>,
    #[serde(default)]
    promotes: Vec<String>,
    #[serde(default)]
    variables: Vec<String>,
    invariant: Option<String>,
    initialisation: Option<String>,
    #[serde(default)]
    operations: Vec<toml::Value>,
    before: Option<String>,
    #[serde(default)]
    extra: Vec<RawExtra>,
    #[serde(default)]
    new_operations: Vec<RawOp>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Spec {
    Instantiate(InstantiationSpec),
    Compose(Composition, CompositionSpec),
    Extend { before: String, spec: ExtensionSpec },
}

/// A parsed specification with the machine files it refers to by path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecFile {
    pub spec: Spec,
    pub files: Vec<PathBuf>,
}

fn toml_err(e: impl std::fmt::Display) -> SpecError {
    SpecError::Toml(e.to_string().trim().to_string())
}

fn pred(field: &str, s: &Option<String>) -> Result<Pred, SpecError> {
    match s {
        None => Ok(Pred::True),
        Some(t) => parse_pred(t).map_err(|err| SpecError::Parse { field: field.to_string(), err }),
    }
}

fn subst(field: &str, s: &Option<String>) -> Result<Subst, SpecError> {
    match s {
        None => Ok(Subst::Skip),
        Some(t) => parse_subst(t).map_err(|err| SpecError::Parse { field: field.to_string(), err }),
    }
}

fn is_path(r: &str) -> bool {
    r.ends_with(".mch") || r.ends_with(".ref")
}

/// Machine name of a reference: a path names the file stem's machine, which
/// is only known after loading, so it is kept verbatim until then.
fn reference(r: &str, base: Option<&Path>, files: &mut Vec<PathBuf>) -> String {
    if is_path(r) {
        let p = base.map(|b| b.join(r)).unwrap_or_else(|| PathBuf::from(r));
        files.push(p.clone());
        p.display().to_string()
    } else {
        r.to_string()
    }
}

fn composed(op: &RawOp) -> Result<ComposedOp, SpecError> {
    let ctx = |f: &str| format!("operations.{}.{f}", op.name);
    Ok(ComposedOp {
        name: op.name.clone(),
        outputs: op.outputs.clone(),
        params: op.params.clone(),
        pre: pred(&ctx("pre"), &op.pre)?,
        calls: op
            .calls
            .iter()
            .map(|c| subst(&ctx("calls"), &Some(c.clone())))
            .collect::<Result<_, _>>()?,
        extra: subst(&ctx("extra"), &op.extra)?,
    })
}

/// Parses a specification; relative machine paths are resolved against
/// `base`.
pub fn parse_spec(text: &str, base: Option<&Path>) -> Result<SpecFile, SpecError> {
    let raw: RawSpec = toml::from_str(text).map_err(toml_err)?;
    let mut files = Vec::new();
    let sets: Vec<SetDecl> = raw.sets.iter().map(SetDecl::from).collect();
    let renaming = RenamingMap::new(raw.renaming.iter().cloned())?;
    let spec = match raw.kind.as_str() {
        "instantiate" => {
            let pattern = raw.pattern.as_deref().ok_or_else(|| SpecError::Toml("missing `pattern`".into()))?;
            let mut directives = Vec::new();
            for v in &raw.operations {
                let d: RawDirective = v.clone().try_into().map_err(toml_err)?;
                let dir = match d.action.as_str() {
                    "promote" => OpDirective::Promote,
                    "drop" => OpDirective::Drop,
                    "wrap" => OpDirective::Wrap { name: d.as_.clone().unwrap_or_else(|| d.op.clone()), params: d.params },
                    other => return Err(SpecError::Action(other.to_string())),
                };
                directives.push((d.op, dir));
            }
            Spec::Instantiate(InstantiationSpec {
                pattern: reference(pattern, base, &mut files),
                name: raw.name,
                sets,
                binding: raw.parameters,
                renaming,
                directives,
            })
        }
        k @ ("juxtapose" | "links" | "unify" | "unify+instantiate") => {
            let kind = match k {
                "juxtapose" => Composition::Juxtaposition,
                "links" => Composition::Links,
                _ => Composition::Unification,
            };
            let mut operations = Vec::new();
            for v in &raw.operations {
                let op: RawOp = v.clone().try_into().map_err(toml_err)?;
                operations.push(composed(&op)?);
            }
            let patterns = raw
                .patterns
                .iter()
                .map(|p| PatternUse { name: reference(&p.name, base, &mut files), actuals: p.actuals.clone() })
                .collect();
            Spec::Compose(kind, CompositionSpec {
                name: raw.name,
                sets,
                patterns,
                renaming,
                variables: raw.variables,
                invariant: pred("invariant", &raw.invariant)?,
                initialisation: subst("initialisation", &raw.initialisation)?,
                unify: raw.unify,
                promotes: raw.promotes,
                operations,
            })
        }
        "extend" => {
            let before = raw.before.as_deref().ok_or_else(|| SpecError::Toml("missing `before`".into()))?;
            let extra = raw
                .extra
                .iter()
                .map(|e| Ok((e.op.clone(), subst(&format!("extra.{}", e.op), &Some(e.subst.clone()))?)))
                .collect::<Result<_, SpecError>>()?;
            let new_operations = raw
                .new_operations
                .iter()
                .map(|o| {
                    let ctx = |f: &str| format!("new_operations.{}.{f}", o.name);
                    Ok(NewOperation {
                        name: o.name.clone(),
                        outputs: o.outputs.clone(),
                        params: o.params.clone(),
                        pre: pred(&ctx("pre"), &o.pre)?,
                        body: subst(&ctx("body"), &o.body)?,
                    })
                })
                .collect::<Result<_, SpecError>>()?;
            Spec::Extend {
                before: reference(before, base, &mut files),
                spec: ExtensionSpec {
                    name: raw.name,
                    sets,
                    variables: raw.variables,
                    invariant: pred("invariant", &raw.invariant)?,
                    initialisation: subst("initialisation", &raw.initialisation)?,
                    extra,
                    new_operations,
                },
            }
        }
        other => return Err(SpecError::Toml(format!("unknown kind `{other}`"))),
    };
    Ok(SpecFile { spec, files })
}

fn resolve(name: &mut String, loaded: &BTreeMap<String, String>) {
    if let Some(n) = loaded.get(name.as_str()) {
        *name = n.clone();
    }
}

/// Runs a specification. Machines named by path are loaded first, together
/// with the other machines of their directory; everything else comes from
/// `src`. Returns the generated machines (two for an extension).
pub fn apply(file: &SpecFile, src: &dyn MachineSource) -> Result<Vec<Machine>, SpecError> {
    let mut lib = Library::new();
    let mut loaded = BTreeMap::new();
    for p in &file.files {
        if let Some(dir) = p.parent().filter(|d| d.is_dir()) {
            // Siblings only serve to resolve includes; unreadable ones are
            // reported when actually needed.
            let _ = lib.load_dir(dir);
        }
        loaded.insert(p.display().to_string(), lib.load_file(p)?);
    }
    let src = Layered { first: &lib, then: src };
    let out = match &file.spec {
        Spec::Instantiate(s) => {
            let mut s = s.clone();
            resolve(&mut s.pattern, &loaded);
            vec![instantiate(&s, &src)?]
        }
        Spec::Compose(k, s) => {
            let mut s = s.clone();
            for p in &mut s.patterns {
                resolve(&mut p.name, &loaded);
            }
            vec![compose(*k, &s, &src)?]
        }
        Spec::Extend { before, spec } => {
            let mut b = before.clone();
            resolve(&mut b, &loaded);
            let m = src.machine(&b).ok_or(ReuseError::UnknownMachine(b.clone()))?;
            let (a, r) = extend(m, spec, &src)?;
            vec![a, r]
        }
    };
    Ok(out)
}
