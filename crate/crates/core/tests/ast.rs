use std::collections::BTreeMap;

use bpat_core::ast::{modified_variables_transitive, rename, substitute, FreeIdents};
use bpat_core::*;

fn p(s: &str) -> Pred {
    parse_pred(s).unwrap()
}

fn e(s: &str) -> Expr {
    parse_expr(s).unwrap()
}

fn embedded(name: &str) -> Machine {
    Library::embedded().machine(name).unwrap().clone()
}

#[test]
fn rename_composite_to_directory() {
    let r = RenamingMap::new([("Directory", "Composite"), ("File", "Leaf")]).unwrap();
    let m = rename(&embedded("Composite_Pattern"), &r).unwrap();
    let inv = m.invariant.conjuncts();
    assert_eq!(*inv[1], p("Directory <: Component"));
    assert_eq!(*inv[2], p("File <: Component"));
    assert!(!m.all_identifiers().contains("Leaf"));
}

#[test]
fn rename_by_empty_map_is_identity() {
    for name in ["Composite_Pattern", "Resource_Allocation", "Comp_By_Unif_Inst"] {
        let m = embedded(name);
        assert_eq!(rename(&m, &RenamingMap::default()).unwrap(), m);
    }
}

#[test]
fn rename_then_inverse_round_trips() {
    let m = embedded("Resource_Allocation");
    let r = RenamingMap::new([("Element", "Resource")]).unwrap();
    let there = rename(&m, &r).unwrap();
    assert_ne!(there, m);
    assert!(there.all_identifiers().contains("Element"));
    assert_eq!(rename(&there, &r.inverse()).unwrap(), m);
}

#[test]
fn rename_onto_existing_name_is_rejected() {
    let r = RenamingMap::new([("Leaf", "Composite")]).unwrap();
    assert!(rename(&embedded("Composite_Pattern"), &r).is_err());
}

#[test]
fn substitute_function_removal() {
    let binding = BTreeMap::from([
        ("State".to_string(), e("{file} <<| State")),
        ("Usable".to_string(), e("Usable - {file}")),
    ]);
    assert_eq!(
        substitute(&p("State : Usable +-> STATE"), &binding),
        p("{file} <<| State : Usable - {file} +-> STATE")
    );
    assert_eq!(substitute(&p("x : S"), &BTreeMap::new()), p("x : S"));
}

#[test]
fn free_identifiers_of_link_update() {
    let s = parse_subst("CompRes := {thing} <<| CompRes").unwrap();
    let ids: Vec<String> = s.free_identifiers().into_iter().collect();
    assert_eq!(ids, ["CompRes", "thing"]);
}

#[test]
fn transitive_modification_of_remove_thing() {
    let lib = Library::embedded();
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/specs/links.toml")).unwrap();
    let m = apply_spec(&parse_spec(&text, None).unwrap(), &lib).unwrap().remove(0);
    let pats = [lib.machine("Composite_Pattern").unwrap(), lib.machine("Resource_Allocation").unwrap()];
    let lookup = |name: &str| pats.iter().find_map(|m| m.operation(name));
    let op = m.operation("Remove_Thing_1").unwrap();
    let got: Vec<String> = modified_variables_transitive(&op.body, &lookup).unwrap().into_iter().collect();
    // Frozen from the pattern bodies: Remove_Leaf and Remove_Resource.
    assert_eq!(got, ["Allocated", "CompRes", "Component", "Composite", "Father", "Leaf", "Provides", "Resource"]);
}

#[test]
fn composite_pattern_structure() {
    let m = embedded("Composite_Pattern");
    assert_eq!(m.parameters, ["COMPONENT"]);
    assert_eq!(m.variables, ["Component", "Composite", "Leaf", "Father"]);
    assert_eq!(m.invariant.conjuncts().len(), 6);
    assert_eq!(m.kind, MachineKind::Abstract);
}

#[test]
fn extension_structure() {
    let m = embedded("Extension");
    assert_eq!(m.kind, MachineKind::Refinement);
    assert_eq!(m.refines.as_deref(), Some("Comp_By_Unif_Inst"));
    let state = m.sets.iter().find(|s| s.name == "STATE").unwrap();
    assert_eq!(state.elements.as_deref(), Some(&["write".to_string(), "protected".to_string()][..]));
    assert!(pretty_print(&m).contains("STATE = {write, protected}"));
}

#[test]
fn corpus_reparses_to_equal_machines() {
    for (file, text) in library::CORPUS {
        let m = parse_machine_str(text).unwrap();
        let again = parse_machine_str(&pretty_print(&m)).unwrap();
        assert_eq!(again, m, "{file}");
    }
}
