use bpat_core::oracle::is_counterexample;
use bpat_core::random::Generator;
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

fn pos_of(text: &str) -> Vec<ProofObligation> {
    generate(&parse_machine_str(text).unwrap(), &Library::new()).unwrap()
}

#[test]
fn empty_subset_is_valid() {
    let pos = pos_of("MACHINE M(S)\nVARIABLES\n    x\nINVARIANT\n    x <: S\nINITIALISATION\n    x := {}\nEND\n");
    match Oracle::default().check(&pos[0]).unwrap() {
        Outcome::Valid { models } => assert_eq!(models, 3),
        o => panic!("{o:?}"),
    }
}

#[test]
fn lost_element_is_refuted_minimally() {
    let text = "MACHINE M(S)\nVARIABLES\n    x\nINVARIANT\n    x <: S & x /= {}\nINITIALISATION\n    x := S\nOPERATIONS\n    del(e) =\n        PRE\n            e : x\n        THEN\n            x := x - {e}\n        END\nEND\n";
    let pos = pos_of(text);
    let po = pos.iter().find(|p| p.goal.to_string().contains("x - {e} /= {}")).unwrap();
    let Outcome::Refuted(c) = Oracle::default().check(po).unwrap() else { panic!("not refuted") };
    assert_eq!(c.model.size(), 1);
    assert_eq!(c.valuation["x"], "{S_1}");
    assert!(is_counterexample(po, &c).unwrap());
}

#[test]
fn broken_links_refuted_on_two_elements() {
    let (out, lib) = spec_output("links_broken.toml");
    let pos = generate(&out[0], &lib).unwrap();
    let oracle = Oracle::with_sizes(vec![1, 2]);
    let refuted: Vec<_> = pos
        .iter()
        .filter_map(|p| match oracle.check(p).unwrap() {
            Outcome::Refuted(c) => Some((p, c)),
            Outcome::Valid { .. } => None,
        })
        .collect();
    assert_eq!(refuted.len(), 1);
    let (po, c) = &refuted[0];
    assert_eq!(po.label.operation.as_deref(), Some("Remove_Thing_1"));
    assert!(po.goal.to_string().contains(">->>"));
    assert_eq!(c.model.size(), 2);
    assert!(is_counterexample(po, c).unwrap());
}

#[test]
fn broken_unification_refuted_on_two_elements() {
    let (out, lib) = spec_output("unification_broken.toml");
    let pos = generate(&out[0], &lib).unwrap();
    let vs = discharge(&pos, Some(&Oracle::with_sizes(vec![1, 2])));
    let refuted: Vec<_> = pos.iter().zip(&vs).filter(|(_, v)| v.status == Status::Refuted).collect();
    assert_eq!(refuted.len(), 1);
    assert!(refuted[0].0.goal.to_string().contains("Component"));
    assert!(refuted[0].1.counterexample.as_ref().unwrap().model.size() <= 2);
}

#[test]
fn composite_pattern_valid_up_to_three() {
    let lib = Library::embedded();
    let pos = generate(lib.machine("Composite_Pattern").unwrap(), &lib).unwrap();
    let oracle = Oracle::default();
    for p in &pos {
        assert!(matches!(oracle.check(p), Ok(Outcome::Valid { .. })), "{}", p.label);
    }
}

/// Bit-blasting and plain enumeration must reach the same verdicts.
#[test]
fn decision_procedures_agree_on_random_machines() {
    let fast = Oracle { switch_after: Some(0), ..Oracle::with_sizes(vec![1, 2]) };
    let slow = Oracle::enumerating(vec![1, 2]);
    let mut g = Generator::new(77);
    let mut compared = 0;
    for i in 0..25 {
        let m = g.machine(&format!("R{i}"));
        for p in generate(&m, &Library::new()).unwrap() {
            let (a, b) = (fast.check(&p), slow.check(&p));
            if let (Ok(a), Ok(b)) = (&a, &b) {
                assert_eq!(matches!(a, Outcome::Valid { .. }), matches!(b, Outcome::Valid { .. }), "{}", p.label);
                compared += 1;
            }
        }
    }
    assert!(compared > 100, "{compared}");
}

#[test]
fn models_respect_sizes() {
    let pos = pos_of("MACHINE M(S, T)\nVARIABLES\n    r\nINVARIANT\n    r : S <-> T\nINITIALISATION\n    r := {}\nEND\n");
    let models = Oracle::with_sizes(vec![1, 2]).models_for(&pos[0]);
    assert!(!models.is_empty());
    assert!(models.iter().all(|m| m.size() <= 2 && m.sets.len() == 2));
}
