use bpat_core::report::SCHEMA_VERSION;
use bpat_core::*;

fn spec_output(file: &str) -> (Vec<Machine>, Library) {
    let mut lib = Library::embedded();
    let text = std::fs::read_to_string(format!("{}/corpus/specs/{file}", env!("CARGO_MANIFEST_DIR"))).unwrap();
    let out = apply_spec(&parse_spec(&text, None).unwrap(), &lib).unwrap();
    for m in &out {
        lib.insert(m.clone());
    }
    (out, lib)
}

#[test]
fn empty_report() {
    let r = Report::new("0", vec![], vec![], &[], &[]);
    assert_eq!(r.summary, Summary::default());
    assert!(r.machines.is_empty());
    assert_eq!(r.exit_code(), 0);
    assert_eq!(r.schema, SCHEMA_VERSION);
    assert!(r.to_text().ends_with("total: 0 PO(s), 0 obvious, 0 auto, 0 interactive, 0 refuted (0 reusable-class)\n"));
}

#[test]
fn exit_code_prefers_refutation() {
    let (out, lib) = spec_output("links_broken.toml");
    let pos = generate(&out[0], &lib).unwrap();
    let without = Report::new("0", vec![], vec![], &pos, &discharge(&pos, None));
    assert_eq!(without.exit_code(), 4);
    let with = Report::new("0", vec![], vec![1, 2], &pos, &discharge(&pos, Some(&Oracle::with_sizes(vec![1, 2]))));
    assert_eq!(with.exit_code(), 5);
    assert!(with.to_text().contains("      model: "));
}

#[test]
fn report_groups_by_machine_in_label_order() {
    let lib = Library::embedded();
    let pos = generate(lib.machine("Extension").unwrap(), &lib).unwrap();
    let mut shuffled = pos.clone();
    shuffled.reverse();
    let a = Report::new("0", vec![], vec![], &pos, &classify_all(&pos));
    let b = Report::new("0", vec![], vec![], &shuffled, &classify_all(&shuffled));
    assert_eq!(a, b);
    assert_eq!(a.to_text(), b.to_text());
    assert_eq!(a.machines.len(), 1);
    let labels: Vec<&str> = a.machines[0].obligations.iter().map(|e| e.label.as_str()).collect();
    assert_eq!(labels.len(), 130);
    let mut sorted_labels = pos.iter().map(|p| p.label.clone()).collect::<Vec<_>>();
    sorted_labels.sort();
    let expected: Vec<String> = sorted_labels.iter().map(|l| l.to_string()).collect();
    assert_eq!(labels, expected);
}
