//! Acceptance suite. Each criterion prints one PASS/FAIL line with its
//! elapsed time against the pinned limit; the test fails if any line fails.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use bpat_core::ast::modified_variables;
use bpat_core::crosscheck::{prover_soundness, renaming_commutes, wp_vs_transition, WpAgreement};
use bpat_core::library::CORPUS;
use bpat_core::random::Generator;
use bpat_core::reuse::OpDirective;
use bpat_core::*;
use serde_json::Value;

const RANDOM_MACHINES: u64 = 200;
const WP_MACHINES: u64 = 60;
const MIN_WP_TRIPLES: usize = 500;
const COMMUTE_PAIRS: u64 = 100;
const ORACLE_SIZES: [usize; 3] = [1, 2, 3];

fn specs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus/specs")
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["bpat".to_string()];
    argv.extend(args.iter().map(|a| a.to_string()));
    let code = bpat_cli::run_with(argv, &mut bpat_cli::Io { out: &mut out, err: &mut err });
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Runs `spec` through `transform` into `dir`, then `pogen` with a
/// structured report on the machine named `machine`.
fn transform_and_pogen(dir: &Path, spec: &str, machine: &str, ext: &str) -> Result<(i32, Value), String> {
    let out = dir.to_str().unwrap();
    let spec = specs_dir().join(spec);
    let (code, _, err) = cli(&["--library-path", out, "transform", spec.to_str().unwrap(), "-o", out]);
    if code != 0 {
        return Err(format!("transform exited {code}: {err}"));
    }
    let input = dir.join(format!("{machine}.{ext}"));
    let report = dir.join(format!("{machine}.json"));
    let (code, _, err) = cli(&[
        "--format",
        "structured",
        "--library-path",
        out,
        "pogen",
        input.to_str().unwrap(),
        report.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&report).map_err(|e| format!("no report ({e}); pogen exited {code}: {err}"))?;
    Ok((code, serde_json::from_str(&text).map_err(|e| e.to_string())?))
}

fn summary(report: &Value, field: &str) -> u64 {
    report["summary"][field].as_u64().unwrap_or(u64::MAX)
}

fn generated(spec: &str) -> Vec<Machine> {
    let lib = Library::embedded();
    let text = std::fs::read_to_string(specs_dir().join(spec)).unwrap();
    let file = parse_spec(&text, Some(&specs_dir())).unwrap();
    apply_spec(&file, &lib).unwrap()
}

fn with(machines: &[Machine]) -> Library {
    let mut lib = Library::embedded();
    for m in machines {
        lib.insert(m.clone());
    }
    lib
}

type Outcome = Result<String, String>;

fn corpus_fidelity() -> Outcome {
    for (file, text) in CORPUS {
        let m = parse_machine_str(text).map_err(|e| format!("{file}: {e}"))?;
        typecheck(&m, &Library::embedded()).map_err(|e| format!("{file}: {e}"))?;
        let printed = pretty_print(&m);
        if printed != library::strip_comments(text) {
            return Err(format!("{file}: printed text differs from the file"));
        }
        let again = parse_machine_str(&printed).map_err(|e| format!("{file} reparse: {e}"))?;
        if again != m || pretty_print(&again) != printed {
            return Err(format!("{file}: round trip is not the identity"));
        }
    }
    Ok(format!("{} machines", CORPUS.len()))
}

fn juxtaposition(dir: &Path) -> Outcome {
    let (code, r) = transform_and_pogen(dir, "juxtaposition.toml", "Composition_By_Juxtaposition", "mch")?;
    let (i, x) = (summary(&r, "interactive"), summary(&r, "refuted"));
    if code == 0 && i == 0 && x == 0 {
        Ok(format!("{} PO(s), 0 interactive, 0 refuted", summary(&r, "total")))
    } else {
        Err(format!("exit {code}, {i} interactive, {x} refuted"))
    }
}

/// Every obligation of a wrapper operation must be, up to the parameter
/// binding and the wrapper's parameter names, an obligation of the pattern
/// operation it calls.
fn wrapper_pos_match(spec: &reuse::InstantiationSpec, inst: &Machine) -> Result<usize, String> {
    let lib = with(std::slice::from_ref(inst));
    let pattern = lib.machine(&spec.pattern).ok_or("pattern not in library")?;
    let pattern_pos = generate(pattern, &lib).map_err(|e| e.to_string())?;
    let inst_pos = generate(inst, &lib).map_err(|e| e.to_string())?;
    let mut matched = 0;
    for (op, d) in &spec.directives {
        let OpDirective::Wrap { name, params } = d else { continue };
        let sig = pattern.operation(op).ok_or(format!("no pattern operation {op}"))?;
        let mut map: BTreeMap<String, String> = spec.binding.clone();
        for (formal, new) in sig.outputs.iter().chain(&sig.inputs).zip(params) {
            map.insert(formal.clone(), new.clone());
        }
        let candidates: Vec<_> = pattern_pos
            .iter()
            .filter(|p| p.label.operation.as_deref() == Some(op.as_str()))
            .map(|p| p.renamed(&map))
            .collect();
        for po in inst_pos.iter().filter(|p| p.label.operation.as_deref() == Some(name.as_str())) {
            let erased = (po.hypotheses.clone(), po.goal.clone());
            if !candidates.contains(&erased) {
                return Err(format!("{} has no counterpart among the {op} obligations", po.label));
            }
            matched += 1;
        }
    }
    Ok(matched)
}

fn directory_renaming(dir: &Path) -> Outcome {
    let (code, r) = transform_and_pogen(dir, "directory_renaming.toml", "Directory_Renaming", "mch")?;
    let i = summary(&r, "interactive");
    if code != 0 || i != 0 {
        return Err(format!("exit {code}, {i} interactive"));
    }
    let text = std::fs::read_to_string(specs_dir().join("directory_renaming.toml")).unwrap();
    let Spec::Instantiate(spec) = parse_spec(&text, None).map_err(|e| e.to_string())?.spec else {
        return Err("not an instantiation".into());
    };
    let inst = generated("directory_renaming.toml").remove(0);
    let n = wrapper_pos_match(&spec, &inst)?;
    if n == 0 {
        return Err("no wrapper obligations".into());
    }
    Ok(format!("0 interactive, {n} wrapper PO(s) equal to pattern POs"))
}

fn unify_instantiate(dir: &Path) -> Outcome {
    let (code, r) = transform_and_pogen(dir, "comp_by_unif_inst.toml", "Comp_By_Unif_Inst", "mch")?;
    let i = summary(&r, "interactive");
    if code == 0 && i == 0 {
        Ok(format!("{} PO(s), 0 interactive", summary(&r, "total")))
    } else {
        Err(format!("exit {code}, {i} interactive"))
    }
}

fn extension(dir: &Path) -> Outcome {
    transform_and_pogen(dir, "comp_by_unif_inst.toml", "Comp_By_Unif_Inst", "mch")?;
    let (code, r) = transform_and_pogen(dir, "extension.toml", "Extension", "ref")?;
    if code != 0 {
        return Err(format!("pogen exited {code}"));
    }
    let entries: Vec<&Value> = r["machines"]
        .as_array()
        .into_iter()
        .flatten()
        .flat_map(|m| m["obligations"].as_array().into_iter().flatten())
        .collect();
    let reusable = entries
        .iter()
        .filter(|e| e["kind"].as_str().is_some_and(|k| k.starts_with("refinement")))
        .filter(|e| e["rule"] == "false-hypothesis")
        .filter(|e| e["tags"].as_array().is_some_and(|t| t.iter().any(|t| t == "reusable-class")))
        .count();
    if reusable == 0 {
        return Err("no reusable-class refinement PO".into());
    }

    let machines = generated("extension.toml");
    let lib = with(&machines);
    let ext = lib.machine("Extension").ok_or("no Extension")?;
    let flat = flatten(ext, &lib).map_err(|e| e.to_string())?;
    let target = parse_pred("State : Usable +-> STATE").unwrap();
    let k = flat
        .invariant
        .iter()
        .position(|c| c.pred == target)
        .ok_or("no State conjunct in the invariant")?;
    let mut modifying = 0;
    for op in flat.ops.iter().filter(|o| modified_variables(&o.body).contains("State")) {
        modifying += 1;
        let found = entries.iter().any(|e| {
            e["kind"] == "op-preserves-invariant" && e["operation"] == op.name.as_str() && e["index"] == k
        });
        if !found {
            return Err(format!("no State obligation for {}", op.name));
        }
    }
    if modifying == 0 {
        return Err("no operation modifies State".into());
    }
    Ok(format!("{reusable} reusable-class refinement PO(s); State PO for each of {modifying} op(s)"))
}

fn soundness_sweep() -> Outcome {
    let oracle = Oracle::with_sizes(ORACLE_SIZES.to_vec());
    let lib = Library::embedded();
    let mut machines: Vec<(Machine, Library)> = CORPUS
        .iter()
        .map(|(_, text)| (parse_machine_str(text).unwrap(), lib.clone()))
        .collect();
    let mut g = Generator::new(0);
    for i in 0..RANDOM_MACHINES {
        machines.push((g.machine(&format!("Random_{i}")), Library::new()));
    }
    let (mut checked, mut undecided, mut pos_total) = (0, 0, 0);
    for (m, src) in &machines {
        let pos = generate(m, src).map_err(|e| format!("{}: {e}", m.name))?;
        let s = prover_soundness(&pos, &classify_all(&pos), &oracle);
        if let Some((label, c)) = s.unsound.first() {
            return Err(format!("{label} proved but refuted on {:?}", c.model.sets));
        }
        pos_total += pos.len();
        checked += s.checked;
        undecided += s.undecided.len();
    }
    Ok(format!(
        "{} machines, {pos_total} PO(s), {checked} proved, 0 refuted, {undecided} undecided within budget",
        machines.len()
    ))
}

fn wp_agreement() -> Outcome {
    let oracle = Oracle::with_sizes(ORACLE_SIZES.to_vec());
    let mut agg = WpAgreement::default();
    let mut g = Generator::new(500);
    for i in 0..WP_MACHINES {
        let (m, probes) = g.machine_with_probes(&format!("Random_{i}"), 2);
        agg.merge(wp_vs_transition(&m, &probes, &oracle).map_err(|e| e.to_string())?);
    }
    if let Some(d) = agg.disagreements.first().or(agg.undecided.first()) {
        return Err(format!("{} disagreement(s), {} undecided, e.g. {d}", agg.disagreements.len(), agg.undecided.len()));
    }
    if agg.triples < MIN_WP_TRIPLES {
        return Err(format!("only {} triples", agg.triples));
    }
    Ok(format!("{} triples agree ({} refuted by both)", agg.triples, agg.refuted))
}

fn broken_compositions(dir: &Path) -> Outcome {
    let mut sizes = Vec::new();
    for (spec, machine) in [("links_broken.toml", "Broken_Links"), ("unification_broken.toml", "Broken_Unification")] {
        let (code, r) = transform_and_pogen(dir, spec, machine, "mch")?;
        if code != 5 {
            return Err(format!("{machine}: exit {code}"));
        }
        let size = r["machines"]
            .as_array()
            .into_iter()
            .flatten()
            .flat_map(|m| m["obligations"].as_array().into_iter().flatten())
            .filter(|e| e["status"] == "refuted")
            .filter_map(|e| e["counterexample"]["model"]["sets"].as_object())
            .map(|sets| sets.values().filter_map(|v| v.as_array().map(Vec::len)).max().unwrap_or(0))
            .min()
            .ok_or(format!("{machine}: no stored counterexample"))?;
        if size > 2 {
            return Err(format!("{machine}: smallest counterexample has size {size}"));
        }
        sizes.push(format!("{machine} size {size}"));
    }
    Ok(format!("exit 5 with counterexamples: {}", sizes.join(", ")))
}

fn renaming_commutation() -> Outcome {
    let mut g = Generator::new(1000);
    for i in 0..COMMUTE_PAIRS {
        let p = g.machine(&format!("Pattern_{i}"));
        let spec = g.instantiation(&p, &format!("Instance_{i}"));
        let r = g.renaming(&p);
        match renaming_commutes(&p, &spec, &r) {
            Ok(true) => {}
            Ok(false) => return Err(format!("pair {i} does not commute")),
            Err(e) => return Err(format!("pair {i}: {e}")),
        }
    }
    Ok(format!("{COMMUTE_PAIRS} pairs commute"))
}

#[test]
fn acceptance_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let criteria: Vec<(&str, u64, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("corpus fidelity", 1, Box::new(corpus_fidelity)),
        ("juxtaposition proves", 5, Box::new(|| juxtaposition(d))),
        ("instantiation adds no obligations", 5, Box::new(|| directory_renaming(d))),
        ("unify+instantiate proves", 5, Box::new(|| unify_instantiate(d))),
        ("extension reusable proofs", 10, Box::new(|| extension(d))),
        ("prover soundness sweep", 300, Box::new(soundness_sweep)),
        ("wp agrees with execution", 120, Box::new(wp_agreement)),
        ("broken compositions refuted", 10, Box::new(|| broken_compositions(d))),
        ("renaming commutes", 60, Box::new(renaming_commutation)),
    ];
    let mut failed = Vec::new();
    for (n, (name, limit, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = run();
        let elapsed = t.elapsed();
        let in_time = elapsed <= Duration::from_secs(*limit);
        let (tag, detail) = match (&result, in_time) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; over time")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        // Straight to the stream so the line shows even when output is captured.
        let line = format!("{tag} {} {name} [{:.2}s / {limit}s]: {detail}\n", n + 1, elapsed.as_secs_f64());
        let _ = std::io::stderr().write_all(line.as_bytes());
        if tag == "FAIL" {
            failed.push(n + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
