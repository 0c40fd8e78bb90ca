use bpat_core::discharge::simp_context;
use bpat_core::discharge::simplify::simplify_pred;
use bpat_core::*;

fn p(s: &str) -> Pred {
    parse_pred(s).unwrap()
}

fn s(t: &str) -> Subst {
    parse_subst(t).unwrap()
}

#[test]
fn wp_of_skip_is_identity() {
    let post = p("Leaf \\/ Composite = Component");
    assert_eq!(wp(&Subst::Skip, &post).unwrap(), post);
}

#[test]
fn wp_of_resource_removal() {
    let body = s("Resource := Resource - {res} || Provides := {res} <<| Provides || Allocated := Allocated |>> {res}");
    let post = p("Provides : Resource <-> ResourceFacility & ran(Allocated) <: Resource");
    assert_eq!(
        wp(&body, &post).unwrap(),
        p("{res} <<| Provides : Resource - {res} <-> ResourceFacility & ran(Allocated |>> {res}) <: Resource - {res}")
    );
}

#[test]
fn wp_of_state_removal() {
    let body = s("State := {file} <<| State || Usable := Usable - {file}");
    assert_eq!(
        wp(&body, &p("State : Usable +-> STATE")).unwrap(),
        p("{file} <<| State : Usable - {file} +-> STATE")
    );
}

#[test]
fn protect_element_goal() {
    let lib = Library::embedded();
    let f = flatten(lib.machine("Extension").unwrap(), &lib).unwrap();
    let k = f.invariant.iter().position(|c| c.pred == p("State : Usable +-> STATE")).unwrap();
    let pos = machine_pos(&f).unwrap();
    let po = pos
        .iter()
        .find(|po| {
            po.label.kind == PoKind::OpPreservesInvariant
                && po.label.operation.as_deref() == Some("Protect_Element")
                && po.label.index == k
        })
        .unwrap();
    assert_eq!(po.goal, p("State <+ {el |-> protected} : Usable \\/ {el} +-> STATE"));
    assert!(po.hypotheses.contains(&p("el : Resource")), "Element is an alias of Resource");
}

#[test]
fn empty_initialisation_goal_simplifies_to_truth() {
    let m = parse_machine_str("MACHINE M(S)\nVARIABLES\n    x\nINVARIANT\n    x <: S\nINITIALISATION\n    x := {}\nEND\n").unwrap();
    let pos = generate(&m, &Library::new()).unwrap();
    assert_eq!(pos.len(), 1);
    assert_eq!(pos[0].goal, p("{} <: S"));
    assert_eq!(simplify_pred(&pos[0].goal, &simp_context(&pos[0].context)), Pred::True);
}

/// Own-operation POs: one per (operation or initialisation, conjunct), plus
/// a PO per call whose precondition is not already assumed.
fn expected_count(m: &Machine) -> usize {
    (m.operations.len() + 1) * m.invariant.conjuncts().len()
}

#[test]
fn pattern_po_counts() {
    let lib = Library::embedded();
    for (name, frozen) in [("Composite_Pattern", 66), ("Resource_Allocation", 81)] {
        let m = lib.machine(name).unwrap();
        let pos = generate(m, &lib).unwrap();
        assert_eq!(pos.len(), expected_count(m), "{name}");
        assert_eq!(pos.len(), frozen, "{name}");
    }
}

#[test]
fn corpus_po_counts_are_frozen() {
    let lib = Library::embedded();
    for (name, frozen) in [("Comp_By_Unif_Inst", 102), ("Extension", 130)] {
        let pos = generate(lib.machine(name).unwrap(), &lib).unwrap();
        assert_eq!(pos.len(), frozen, "{name}");
    }
}

#[test]
fn labels_are_unique_and_sorted_per_machine() {
    let lib = Library::embedded();
    let pos = generate(lib.machine("Extension").unwrap(), &lib).unwrap();
    let mut labels: Vec<_> = pos.iter().map(|p| p.label.clone()).collect();
    let n = labels.len();
    labels.sort();
    labels.dedup();
    assert_eq!(labels.len(), n);
}

#[test]
fn copy_refinement_is_proved() {
    let abs = "MACHINE A(S)\nVARIABLES\n    x\nINVARIANT\n    x <: S\nINITIALISATION\n    x := {}\nOPERATIONS\n    add(e) =\n        PRE\n            e : S\n        THEN\n            x := x \\/ {e}\n        END\nEND\n";
    let conc = "REFINEMENT R\nREFINES\n    A\nSETS\n    S\nVARIABLES\n    y\nINVARIANT\n    y <: S &\n    y = x\nINITIALISATION\n    y := {}\nOPERATIONS\n    add(e) =\n        PRE\n            e : S\n        THEN\n            y := y \\/ {e}\n        END\nEND\n";
    let mut lib = Library::new();
    lib.insert(parse_machine_str(abs).unwrap());
    let r = parse_machine_str(conc).unwrap();
    let pos = generate(&r, &lib).unwrap();
    assert!(pos.iter().any(|p| p.label.kind == PoKind::RefinementOp));
    let s = summarize(&classify_all(&pos));
    assert_eq!(s.interactive, 0);
    assert_eq!(s.obvious + s.auto, pos.len());
}
