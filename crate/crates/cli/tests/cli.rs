use std::path::{Path, PathBuf};

use bpat_cli::{exit, run_with, Io};
use bpat_core::{parse_machine_str, Library, MachineSource};

fn bpat(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("bpat").chain(args.iter().copied()).map(String::from).collect();
    let code = run_with(argv, &mut Io { out: &mut out, err: &mut err });
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn corpus(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(rel).display().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Transforms `spec` into `dir` (which is also on the library path).
fn transform(dir: &Path, spec: &str) -> (i32, String, String) {
    bpat(&["--library-path", s(dir), "transform", &corpus(&format!("specs/{spec}")), "-o", s(dir)])
}

#[test]
fn check_corpus_machines() {
    for f in ["composite_pattern.mch", "resource_allocation.mch", "comp_by_unif_inst.mch", "extension.ref"] {
        let (code, out, err) = bpat(&["check", &corpus(f)]);
        assert_eq!(code, exit::OK, "{f}: {err}");
        assert!(out.starts_with("ok "), "{out}");
    }
}

#[test]
fn check_minimal_machine() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "empty.mch", "MACHINE M END\n");
    assert_eq!(bpat(&["check", &p]).0, exit::OK);
}

#[test]
fn check_missing_typing_conjunct() {
    let (code, _, err) = bpat(&["check", &corpus("negative/missing_typing.mch")]);
    assert_eq!(code, exit::TYPE);
    assert!(err.contains("MissingTypingConjunct"), "{err}");
}

#[test]
fn check_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.mch", "MACHINE M\nVARIABLES\nEND\n");
    let (code, _, err) = bpat(&["check", &p]);
    assert_eq!(code, exit::PARSE);
    assert!(err.contains("bad.mch"), "{err}");
}

#[test]
fn check_first_failure_decides() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.mch", "MACHINE\n");
    let typing = corpus("negative/missing_typing.mch");
    assert_eq!(bpat(&["check", &typing, &bad]).0, exit::TYPE);
    assert_eq!(bpat(&["check", &bad, &typing]).0, exit::PARSE);
}

#[test]
fn check_structured_lines() {
    let (code, out, _) = bpat(&[
        "--format",
        "structured",
        "check",
        &corpus("composite_pattern.mch"),
        &corpus("negative/missing_typing.mch"),
    ]);
    assert_eq!(code, exit::TYPE);
    let lines: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["status"], "ok");
    assert_eq!(lines[0]["machine"], "Composite_Pattern");
    assert_eq!(lines[1]["status"], "type-error");
}

#[test]
fn usage_errors() {
    assert_eq!(bpat(&[]).0, exit::USAGE);
    assert_eq!(bpat(&["frobnicate"]).0, exit::USAGE);
    assert_eq!(bpat(&["check"]).0, exit::USAGE);
    assert_eq!(bpat(&["--format", "yaml", "library", "list"]).0, exit::USAGE);
    assert_eq!(bpat(&["pogen", "x.mch", "-", "--oracle", "2", "--no-oracle"]).0, exit::USAGE);
    assert_eq!(bpat(&["check", "/nonexistent/m.mch"]).0, exit::USAGE);
    assert_eq!(bpat(&["--help"]).0, exit::OK);
}

#[test]
fn library_list_and_show() {
    let (code, out, _) = bpat(&["library", "list"]);
    assert_eq!(code, exit::OK);
    assert_eq!(out, "Composite_Pattern\nResource_Allocation\n");

    let (code, out, _) = bpat(&["library", "show", "Composite_Pattern"]);
    assert_eq!(code, exit::OK);
    let lib = Library::embedded();
    assert_eq!(&parse_machine_str(&out).unwrap(), lib.machine("Composite_Pattern").unwrap());

    assert_eq!(bpat(&["library", "show", "Nope"]).0, exit::USAGE);
    assert_eq!(bpat(&["library", "show", "Extension"]).0, exit::USAGE);
}

#[test]
fn transform_instantiation() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = transform(dir.path(), "directory_renaming.toml");
    assert_eq!(code, exit::OK, "{err}");
    assert_eq!(out.lines().count(), 1);
    let text = std::fs::read_to_string(dir.path().join("Directory_Renaming.mch")).unwrap();
    assert!(text.contains("PROMOTES"));
    assert!(text.contains("Remove_File(file) ="));
    assert!(text.contains("Remove_Leaf(file)"));
}

#[test]
fn transform_unify_instantiate() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(transform(dir.path(), "comp_by_unif_inst.toml").0, exit::OK);
    let text = std::fs::read_to_string(dir.path().join("Comp_By_Unif_Inst.mch")).unwrap();
    let m = parse_machine_str(&text).unwrap();
    assert_eq!(m.definitions.len(), 7);
    assert!(text.contains("Component = Resource"));
}

#[test]
fn transform_extension() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(transform(dir.path(), "comp_by_unif_inst.toml").0, exit::OK);
    let (code, out, err) = transform(dir.path(), "extension.toml");
    assert_eq!(code, exit::OK, "{err}");
    assert_eq!(out.lines().count(), 2);
    let text = std::fs::read_to_string(dir.path().join("Extension.ref")).unwrap();
    assert!(text.contains("STATE = {write, protected}"));
    assert!(text.contains("Protect_Element(el)"));
    let before = std::fs::read_to_string(dir.path().join("Comp_By_Unif_Inst.mch")).unwrap();
    assert!(before.contains("Protect_Element(el)"));
}

#[test]
fn emitted_machines_check() {
    let dir = tempfile::tempdir().unwrap();
    for spec in ["directory_renaming.toml", "juxtaposition.toml", "links.toml", "unification.toml", "comp_by_unif_inst.toml", "extension.toml"] {
        assert_eq!(transform(dir.path(), spec).0, exit::OK, "{spec}");
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), 6);
    for f in &files {
        let (code, _, err) = bpat(&["--library-path", s(dir.path()), "check", s(f)]);
        assert_eq!(code, exit::OK, "{}: {err}", f.display());
    }
}

#[test]
fn transform_reuse_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "one.toml",
        "kind = \"juxtapose\"\nname = \"J\"\nsets = [\"C\"]\n\n[[patterns]]\nname = \"Composite_Pattern\"\nactuals = [\"C\"]\n",
    );
    let (code, _, err) = bpat(&["transform", &spec, "-o", s(dir.path())]);
    assert_eq!(code, exit::REUSE, "{err}");
    assert!(!dir.path().join("J.mch").exists());
}

#[test]
fn transform_bad_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bad.toml", "kind = \n");
    assert_eq!(bpat(&["transform", &spec, "-o", s(dir.path())]).0, exit::PARSE);
    let spec = write(dir.path(), "unknown.toml", "kind = \"merge\"\nname = \"X\"\n");
    assert_eq!(bpat(&["transform", &spec, "-o", s(dir.path())]).0, exit::PARSE);
    assert_eq!(bpat(&["transform", "/nonexistent.toml", "-o", s(dir.path())]).0, exit::USAGE);
}

#[test]
fn pogen_minimal_machine() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "m.mch", "MACHINE M END\n");
    let (code, out, _) = bpat(&["--format", "structured", "pogen", &p, "-"]);
    assert_eq!(code, exit::OK);
    let r: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["summary"]["total"], 0);
    assert_eq!(r["schema"], 1);
}

#[test]
fn pogen_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("directory_renaming.toml", "Directory_Renaming", exit::OK),
        ("links.toml", "Composition_By_InterPatterns_Links", exit::INTERACTIVE),
        ("unification_broken.toml", "Broken_Unification", exit::REFUTED),
    ];
    for (spec, name, expected) in cases {
        assert_eq!(transform(dir.path(), spec).0, exit::OK);
        let m = dir.path().join(format!("{name}.mch"));
        let report = dir.path().join(format!("{name}.txt"));
        let (code, out, err) = bpat(&["pogen", s(&m), s(&report)]);
        assert_eq!(code, expected, "{name}: {err}");
        assert!(out.starts_with(&format!("{name}: ")), "{out}");
        assert!(report.exists());
    }
}

#[test]
fn pogen_without_oracle_leaves_refutable_po_interactive() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(transform(dir.path(), "links_broken.toml").0, exit::OK);
    let m = dir.path().join("Broken_Links.mch");
    let (code, out, _) = bpat(&["--format", "structured", "pogen", s(&m), "-", "--no-oracle"]);
    assert_eq!(code, exit::INTERACTIVE);
    let r: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(r["oracle_sizes"], serde_json::json!([]));
    assert_eq!(r["summary"]["refuted"], 0);
}

#[test]
fn pogen_refutation_carries_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(transform(dir.path(), "links_broken.toml").0, exit::OK);
    let m = dir.path().join("Broken_Links.mch");
    let (code, out, _) = bpat(&["--format", "structured", "pogen", s(&m), "-", "--oracle", "1,2"]);
    assert_eq!(code, exit::REFUTED);
    let r: serde_json::Value = serde_json::from_str(&out).unwrap();
    let refuted: Vec<&serde_json::Value> = r["machines"][0]["obligations"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["status"] == "refuted")
        .collect();
    assert_eq!(refuted.len(), 1);
    assert_eq!(refuted[0]["operation"], "Remove_Thing_1");
    assert!(refuted[0]["counterexample"]["valuation"].as_object().is_some_and(|v| !v.is_empty()));
}

#[test]
fn pogen_type_error() {
    let (code, _, err) = bpat(&["pogen", &corpus("negative/missing_typing.mch"), "-"]);
    assert_eq!(code, exit::TYPE);
    assert!(err.contains("MissingTypingConjunct"));
}

#[test]
fn pogen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(transform(dir.path(), "comp_by_unif_inst.toml").0, exit::OK);
    assert_eq!(transform(dir.path(), "extension.toml").0, exit::OK);
    let m = dir.path().join("Extension.ref");
    let lp = s(dir.path());
    for format in ["text", "structured"] {
        let a = bpat(&["--library-path", lp, "--format", format, "pogen", s(&m), "-"]);
        let b = bpat(&["--library-path", lp, "--format", format, "pogen", s(&m), "-"]);
        assert_eq!(a.0, exit::OK);
        assert_eq!(a.1, b.1);
    }
}

#[test]
fn report_records_input_digests() {
    let (code, out, _) = bpat(&["--format", "structured", "pogen", &corpus("comp_by_unif_inst.mch"), "-"]);
    assert_eq!(code, exit::OK);
    let r: serde_json::Value = serde_json::from_str(&out).unwrap();
    let names: Vec<&str> = r["inputs"].as_array().unwrap().iter().map(|i| i["machine"].as_str().unwrap()).collect();
    assert_eq!(names, ["Comp_By_Unif_Inst", "Composite_Pattern", "Resource_Allocation"]);
    assert!(r["inputs"].as_array().unwrap().iter().all(|i| i["sha256"].as_str().unwrap().len() == 64));
}

#[test]
fn file_overriding_embedded_machine_warns() {
    let dir = tempfile::tempdir().unwrap();
    let lib = Library::embedded();
    let text = lib.source_text("Composite_Pattern").unwrap();
    let p = write(dir.path(), "composite.mch", text);
    let (code, _, err) = bpat(&["pogen", &p, "-"]);
    assert_eq!(code, exit::OK);
    assert!(err.contains("overriding the embedded machine"), "{err}");
}

#[test]
fn sweep_is_seeded() {
    let a = bpat(&["--seed", "7", "sweep", "--machines", "5"]);
    let b = bpat(&["--seed", "7", "sweep", "--machines", "5"]);
    assert_eq!(a.0, exit::OK);
    assert_eq!(a.1, b.1);
    assert!(a.1.starts_with("seed 7: 5 machine(s)"));
}
