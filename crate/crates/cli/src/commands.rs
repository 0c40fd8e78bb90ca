use std::path::{Path, PathBuf};

use bpat_core::library::{LoadError, MachineSource, PATTERNS};
use bpat_core::specfile::{apply, parse_spec, SpecError};
use bpat_core::{discharge, generate, pretty_print, typecheck, Oracle, Report};
use serde::Serialize;

use crate::{exit, write_atomic, Cli, Command, Format, Io, LibraryAction, Workspace};

pub(crate) fn dispatch(cli: &Cli, io: &mut Io) -> i32 {
    match &cli.command {
        Command::Check { paths } => check(cli, paths, io),
        Command::Transform { spec, output } => transform(cli, spec, output, io),
        Command::Pogen { machine, report, oracle, no_oracle } => {
            let sizes = if *no_oracle { None } else { Some(oracle.clone()) };
            pogen(cli, machine, report, sizes, io)
        }
        Command::Library { action } => library(cli, action, io),
        Command::Sweep { machines, oracle } => crate::sweep::sweep(cli, *machines, oracle, io),
    }
}

fn load_status(e: &LoadError) -> i32 {
    match e {
        LoadError::Io(..) => exit::USAGE,
        LoadError::Parse(..) => exit::PARSE,
    }
}

#[derive(Serialize)]
struct CheckLine {
    path: String,
    machine: Option<String>,
    status: &'static str,
    error: Option<String>,
}

fn check_one(cli: &Cli, path: &Path) -> (CheckLine, i32) {
    let mut line = CheckLine { path: path.display().to_string(), machine: None, status: "ok", error: None };
    let ws = match Workspace::with_inputs(&cli.library_path, &[path]) {
        Ok(ws) => ws,
        Err((_, e)) => {
            let code = load_status(&e);
            line.status = if code == exit::PARSE { "parse-error" } else { "io-error" };
            line.error = Some(e.to_string());
            return (line, code);
        }
    };
    let name = ws.roots[0].clone();
    line.machine = Some(name.clone());
    let m = ws.machine(&name).expect("loaded");
    match typecheck(m, &ws) {
        Ok(_) => (line, exit::OK),
        Err(e) => {
            line.status = "type-error";
            line.error = Some(format!("{}: {}: {e}", path.display(), e.kind()));
            (line, exit::TYPE)
        }
    }
}

/// The first failing file decides the status.
fn check(cli: &Cli, paths: &[PathBuf], io: &mut Io) -> i32 {
    let mut status = exit::OK;
    for p in paths {
        let (line, code) = check_one(cli, p);
        if status == exit::OK {
            status = code;
        }
        match cli.format {
            Format::Structured => {
                let _ = writeln!(io.out, "{}", serde_json::to_string(&line).expect("serializable"));
            }
            Format::Text => match &line.error {
                None => {
                    let _ = writeln!(io.out, "ok {} ({})", line.path, line.machine.as_deref().unwrap_or(""));
                }
                Some(e) => {
                    let _ = writeln!(io.err, "{e}");
                }
            },
        }
    }
    status
}

fn spec_status(e: &SpecError) -> i32 {
    match e {
        SpecError::Toml(_) | SpecError::Parse { .. } => exit::PARSE,
        SpecError::Load(l) => load_status(l),
        SpecError::Renaming(_) | SpecError::Reuse(_) | SpecError::Action(_) => exit::REUSE,
    }
}

#[derive(Serialize)]
struct Written {
    machine: String,
    path: String,
}

fn transform(cli: &Cli, spec: &Path, output: &Path, io: &mut Io) -> i32 {
    let text = match std::fs::read_to_string(spec) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(io.err, "{}: {e}", spec.display());
            return exit::USAGE;
        }
    };
    let fail = |io: &mut Io, e: SpecError| {
        let _ = writeln!(io.err, "{}: {e}", spec.display());
        spec_status(&e)
    };
    let file = match parse_spec(&text, spec.parent()) {
        Ok(f) => f,
        Err(e) => return fail(io, e),
    };
    let ws = match Workspace::with_inputs(&cli.library_path, &[]) {
        Ok(ws) => ws,
        Err((p, e)) => {
            let _ = writeln!(io.err, "{}: {e}", p.display());
            return load_status(&e);
        }
    };
    let machines = match apply(&file, &ws) {
        Ok(ms) => ms,
        Err(e) => return fail(io, e),
    };
    if let Err(e) = std::fs::create_dir_all(output) {
        let _ = writeln!(io.err, "{}: {e}", output.display());
        return exit::USAGE;
    }
    let mut written = Vec::new();
    for m in &machines {
        let ext = if m.refines.is_some() { "ref" } else { "mch" };
        let path = output.join(format!("{}.{ext}", m.name));
        if let Err(e) = write_atomic(&path, &pretty_print(m)) {
            let _ = writeln!(io.err, "{}: {e}", path.display());
            return exit::USAGE;
        }
        written.push(Written { machine: m.name.clone(), path: path.display().to_string() });
    }
    for w in &written {
        let line = match cli.format {
            Format::Structured => serde_json::to_string(w).expect("serializable"),
            Format::Text => format!("wrote {} -> {}", w.machine, w.path),
        };
        let _ = writeln!(io.out, "{line}");
    }
    exit::OK
}

fn pogen(cli: &Cli, machine: &Path, report: &Path, sizes: Option<Vec<usize>>, io: &mut Io) -> i32 {
    let ws = match Workspace::with_inputs(&cli.library_path, &[machine]) {
        Ok(ws) => ws,
        Err((p, e)) => {
            let _ = writeln!(io.err, "{}: {e}", p.display());
            return load_status(&e);
        }
    };
    for w in &ws.warnings {
        let _ = writeln!(io.err, "{w}");
    }
    let name = ws.roots[0].clone();
    let m = ws.machine(&name).expect("loaded");
    if let Err(e) = typecheck(m, &ws) {
        let _ = writeln!(io.err, "{}: {}: {e}", machine.display(), e.kind());
        return exit::TYPE;
    }
    let pos = match generate(m, &ws) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(io.err, "{}: {e}", machine.display());
            return exit::TYPE;
        }
    };
    let oracle = sizes.as_ref().map(|s| Oracle::with_sizes(s.clone()));
    let verdicts = discharge(&pos, oracle.as_ref());
    for v in &verdicts {
        if let Some(note) = v.oracle.as_deref().filter(|n| n.starts_with("oracle gave up")) {
            let _ = writeln!(io.err, "warning: {note}");
        }
    }
    let rep = Report::new(env!("CARGO_PKG_VERSION"), ws.digests(&name), sizes.unwrap_or_default(), &pos, &verdicts);
    let text = match cli.format {
        Format::Structured => serde_json::to_string_pretty(&rep).expect("serializable") + "\n",
        Format::Text => rep.to_text(),
    };
    if report == Path::new("-") {
        let _ = io.out.write_all(text.as_bytes());
    } else {
        if let Err(e) = write_atomic(report, &text) {
            let _ = writeln!(io.err, "{}: {e}", report.display());
            return exit::USAGE;
        }
        let _ = writeln!(io.out, "{name}: {}", bpat_core::report::summary_line(&rep.summary));
    }
    rep.exit_code()
}

fn library(cli: &Cli, action: &LibraryAction, io: &mut Io) -> i32 {
    let ws = Workspace::new();
    match action {
        LibraryAction::List => {
            for p in PATTERNS {
                let _ = writeln!(io.out, "{p}");
            }
            exit::OK
        }
        LibraryAction::Show { name } => match ws.embedded().machine(name) {
            Some(m) if PATTERNS.contains(&name.as_str()) => {
                let text = pretty_print(m);
                match cli.format {
                    Format::Text => {
                        let _ = io.out.write_all(text.as_bytes());
                    }
                    Format::Structured => {
                        let v = serde_json::json!({ "name": name, "text": text });
                        let _ = writeln!(io.out, "{v}");
                    }
                }
                exit::OK
            }
            _ => {
                let _ = writeln!(io.err, "unknown pattern `{name}`; try `bpat library list`");
                exit::USAGE
            }
        },
    }
}
