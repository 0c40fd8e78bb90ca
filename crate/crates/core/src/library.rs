//! Machine lookup by name: the embedded pattern corpus plus anything loaded
//! from disk.

use std::collections::BTreeMap;
use std::path::Path;

use crate::ast::Machine;
use crate::parser::{parse_machine, ParseError, SourceFile};

/// Resolves machine names referenced by INCLUDES, EXTENDS and REFINES.
pub trait MachineSource {
    fn machine(&self, name: &str) -> Option<&Machine>;
}

/// Embedded corpus: `(file name, text)`.
pub const CORPUS: &[(&str, &str)] = &[
    ("composite_pattern.mch", include_str!("../corpus/composite_pattern.mch")),
    ("resource_allocation.mch", include_str!("../corpus/resource_allocation.mch")),
    ("comp_by_unif_inst.mch", include_str!("../corpus/comp_by_unif_inst.mch")),
    ("extension.ref", include_str!("../corpus/extension.ref")),
];

/// Embedded reuse specifications: `(file name, text)`.
pub const SPECS: &[(&str, &str)] = &[
    ("directory_renaming.toml", include_str!("../corpus/specs/directory_renaming.toml")),
    ("juxtaposition.toml", include_str!("../corpus/specs/juxtaposition.toml")),
    ("links.toml", include_str!("../corpus/specs/links.toml")),
    ("unification.toml", include_str!("../corpus/specs/unification.toml")),
    ("comp_by_unif_inst.toml", include_str!("../corpus/specs/comp_by_unif_inst.toml")),
    ("extension.toml", include_str!("../corpus/specs/extension.toml")),
    ("links_broken.toml", include_str!("../corpus/specs/links_broken.toml")),
    ("unification_broken.toml", include_str!("../corpus/specs/unification_broken.toml")),
];

/// Names of the machines that play the role of reusable patterns.
pub const PATTERNS: &[&str] = &["Composite_Pattern", "Resource_Allocation"];

#[derive(Debug, Clone, Default)]
pub struct Library {
    machines: BTreeMap<String, Machine>,
    texts: BTreeMap<String, String>,
}

impl Library {
    pub fn new() -> Self {
        Library::default()
    }

    /// The bundled corpus. Every entry is known to parse.
    pub fn embedded() -> Self {
        let mut lib = Library::new();
        for (file, text) in CORPUS {
            let src = SourceFile::new(Some((*file).into()), *text);
            let m = parse_machine(&src)
                .unwrap_or_else(|e| panic!("embedded corpus file {file} is malformed: {e}"));
            lib.texts.insert(m.name.clone(), text.to_string());
            lib.machines.insert(m.name.clone(), m);
        }
        lib
    }

    pub fn insert(&mut self, m: Machine) {
        self.texts.remove(&m.name);
        self.machines.insert(m.name.clone(), m);
    }

    pub fn insert_with_text(&mut self, m: Machine, text: String) {
        self.texts.insert(m.name.clone(), text);
        self.machines.insert(m.name.clone(), m);
    }

    /// Parses and adds a file; returns the machine name.
    pub fn load_file(&mut self, path: &Path) -> Result<String, LoadError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LoadError::Io(path.display().to_string(), e.to_string()))?;
        let src = SourceFile::new(Some(path.to_path_buf()), text.clone());
        let m = parse_machine(&src)
            .map_err(|e| LoadError::Parse(path.display().to_string(), e))?;
        let name = m.name.clone();
        self.machines.insert(name.clone(), m);
        self.texts.insert(name.clone(), text);
        Ok(name)
    }

    /// Loads every `.mch`/`.ref` file of a directory (not recursive).
    pub fn load_dir(&mut self, dir: &Path) -> Result<Vec<String>, LoadError> {
        let rd = std::fs::read_dir(dir)
            .map_err(|e| LoadError::Io(dir.display().to_string(), e.to_string()))?;
        let mut paths: Vec<_> = rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| matches!(p.extension().and_then(|x| x.to_str()), Some("mch" | "ref")))
            .collect();
        paths.sort();
        paths.iter().map(|p| self.load_file(p)).collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.machines.keys().map(String::as_str)
    }

    pub fn source_text(&self, name: &str) -> Option<&str> {
        self.texts.get(name).map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.machines.contains_key(name)
    }
}

impl MachineSource for Library {
    fn machine(&self, name: &str) -> Option<&Machine> {
        self.machines.get(name)
    }
}

/// A source consulted first, falling back on a second one.
pub struct Layered<'a> {
    pub first: &'a dyn MachineSource,
    pub then: &'a dyn MachineSource,
}

impl MachineSource for Layered<'_> {
    fn machine(&self, name: &str) -> Option<&Machine> {
        self.first.machine(name).or_else(|| self.then.machine(name))
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum LoadError {
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("{0}:{1}")]
    Parse(String, ParseError),
}

/// Text with its comments removed, along with any line that held nothing
/// but comment. Used to compare corpus files with canonical printer output.
pub fn strip_comments(text: &str) -> String {
    let mut out = String::new();
    let mut rest = text;
    while let Some(i) = rest.find("/*") {
        out.push_str(&rest[..i]);
        match rest[i + 2..].find("*/") {
            Some(j) => rest = &rest[i + 2 + j + 2..],
            None => {
                rest = "";
            }
        }
        out.push('\u{0}');
    }
    out.push_str(rest);
    out.lines()
        .filter(|l| !(l.contains('\u{0}') && l.replace('\u{0}', "").trim().is_empty()))
        .map(|l| l.replace('\u{0}', ""))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strip_removes_comment_lines_only() {
        let t = "/* a\n b */\nMACHINE M\n\n/* c */\nEND\n";
        assert_eq!(strip_comments(t), "MACHINE M\n\nEND\n");
        assert_eq!(strip_comments("x /* y */ z\n"), "x  z\n");
    }
}

#[cfg(test)]
mod corpus_tests {
    use super::*;
    use crate::pretty::pretty_print;

    #[test]
    fn corpus_is_in_canonical_form() {
        for (file, text) in CORPUS {
            let m = crate::parser::parse_machine_str(text).unwrap();
            assert_eq!(pretty_print(&m), strip_comments(text), "{file}");
        }
    }
}
