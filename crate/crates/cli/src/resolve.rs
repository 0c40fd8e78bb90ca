//! Assembling the machines a command can see: files named on the command
//! line first, then the directory of the input, then the embedded library.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use bpat_core::ast::Machine;
use bpat_core::library::{LoadError, MachineSource};
use bpat_core::{InputDigest, Library};
use sha2::{Digest, Sha256};

/// Where each machine came from, for digests and collision warnings.
#[derive(Debug, Default)]
pub struct Workspace {
    lib: Library,
    embedded: Library,
    sources: BTreeMap<String, PathBuf>,
    /// Machine names of the input files, in order.
    pub roots: Vec<String>,
    pub warnings: Vec<String>,
}

impl MachineSource for Workspace {
    fn machine(&self, name: &str) -> Option<&Machine> {
        self.lib.machine(name).or_else(|| self.embedded.machine(name))
    }
}

impl Workspace {
    pub fn new() -> Self {
        Workspace { embedded: Library::embedded(), ..Workspace::default() }
    }

    /// Loads one file. A later file never displaces an earlier one of the
    /// same machine name, so explicit paths win over sibling files.
    pub fn add_file(&mut self, path: &Path) -> Result<String, LoadError> {
        let mut one = Library::new();
        let name = one.load_file(path)?;
        if self.sources.contains_key(&name) {
            return Ok(name);
        }
        if self.embedded.contains(&name) {
            self.warnings.push(format!(
                "warning: {} defines `{name}`, overriding the embedded machine",
                path.display()
            ));
        }
        let text = one.source_text(&name).unwrap_or_default().to_string();
        let m = one.machine(&name).cloned().expect("just loaded");
        self.lib.insert_with_text(m, text);
        self.sources.insert(name.clone(), path.to_path_buf());
        Ok(name)
    }

    /// Loads every machine file of `dir` that parses; the others are
    /// skipped, since they are only candidates for resolution.
    pub fn add_dir(&mut self, dir: &Path) {
        let Ok(rd) = std::fs::read_dir(dir) else { return };
        let mut paths: Vec<PathBuf> = rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| matches!(p.extension().and_then(|x| x.to_str()), Some("mch" | "ref")))
            .collect();
        paths.sort();
        for p in paths {
            let _ = self.add_file(&p);
        }
    }

    /// Explicit library directories, then the siblings of `input`.
    pub fn with_inputs(library_path: &[PathBuf], inputs: &[&Path]) -> Result<Self, (PathBuf, LoadError)> {
        let mut ws = Workspace::new();
        for p in inputs {
            let name = ws.add_file(p).map_err(|e| (p.to_path_buf(), e))?;
            ws.roots.push(name);
        }
        for d in library_path {
            ws.add_dir(d);
        }
        for p in inputs {
            if let Some(dir) = p.parent() {
                ws.add_dir(if dir.as_os_str().is_empty() { Path::new(".") } else { dir });
            }
        }
        Ok(ws)
    }

    /// Digests of `root` and everything it includes, extends or refines.
    pub fn digests(&self, root: &str) -> Vec<InputDigest> {
        let mut seen = BTreeSet::new();
        let mut todo = vec![root.to_string()];
        let mut out = Vec::new();
        while let Some(n) = todo.pop() {
            if !seen.insert(n.clone()) {
                continue;
            }
            let Some(m) = self.machine(&n) else { continue };
            todo.extend(m.instances().map(|i| i.machine.clone()));
            todo.extend(m.refines.iter().cloned());
            let (source, text) = match self.sources.get(&n) {
                Some(p) => (p.display().to_string(), self.lib.source_text(&n)),
                None => ("embedded".to_string(), self.embedded.source_text(&n)),
            };
            let sha256 = format!("{:x}", Sha256::digest(text.unwrap_or_default().as_bytes()));
            out.push(InputDigest { machine: n, source, sha256 });
        }
        out.sort_by(|a, b| a.machine.cmp(&b.machine));
        out
    }

    pub fn embedded(&self) -> &Library {
        &self.embedded
    }
}
