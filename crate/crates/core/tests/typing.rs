use std::collections::BTreeMap;

use bpat_core::typecheck::{type_of, unifiable, Entry, IdentKind, Origin};
use bpat_core::*;

fn spec_machine(file: &str) -> (Machine, Library) {
    let mut lib = Library::embedded();
    let text = std::fs::read_to_string(format!("{}/corpus/specs/{file}", env!("CARGO_MANIFEST_DIR"))).unwrap();
    let out = apply_spec(&parse_spec(&text, None).unwrap(), &lib).unwrap();
    for m in &out {
        lib.insert(m.clone());
    }
    (out.last().unwrap().clone(), lib)
}

fn rel(a: &str, b: &str) -> SetType {
    SetType::relation(SetType::given(a), SetType::given(b))
}

fn local(set: &str) -> Entry {
    Entry { ty: SetType::given(set), kind: IdentKind::Variable, origin: Origin::Own }
}

#[test]
fn father_is_a_relation_on_components() {
    let lib = Library::embedded();
    let t = typecheck(lib.machine("Composite_Pattern").unwrap(), &lib).unwrap();
    assert_eq!(t.env.lookup("Father").unwrap().ty, rel("COMPONENT", "COMPONENT"));
}

#[test]
fn link_variable_typed_by_bijection() {
    let (m, lib) = spec_machine("links.toml");
    let t = typecheck(&m, &lib).unwrap();
    assert_eq!(t.env.lookup("CompRes").unwrap().ty, rel("COMPONENT", "RESOURCE"));
}

#[test]
fn missing_typing_conjunct() {
    let m = parse_machine_str("MACHINE M\nVARIABLES\n    x\nINVARIANT\n    x = x\nINITIALISATION\n    x := {}\nEND\n").unwrap();
    let err = typecheck(&m, &Library::new()).unwrap_err();
    assert_eq!(err.kind(), "MissingTypingConjunct");
}

#[test]
fn type_of_expressions() {
    let lib = Library::embedded();
    let ra = typecheck(lib.machine("Resource_Allocation").unwrap(), &lib).unwrap();
    let mut env = ra.env.clone();
    env.insert("res", local("RESOURCE"));
    let provides = type_of(&parse_expr("Provides").unwrap(), &env).unwrap();
    assert_eq!(type_of(&parse_expr("{res} <<| Provides").unwrap(), &env).unwrap(), provides);

    let ext = typecheck(lib.machine("Extension").unwrap(), &lib).unwrap();
    let mut env = ext.env.clone();
    env.insert("el", local("ELEMENT"));
    assert_eq!(
        type_of(&parse_expr("Usable \\/ {el}").unwrap(), &env).unwrap(),
        SetType::power(SetType::given("ELEMENT"))
    );
}

#[test]
fn empty_set_takes_its_type_from_context() {
    let lib = Library::embedded();
    let m = parse_machine_str(
        "MACHINE M(S)\nVARIABLES\n    r\nINVARIANT\n    r : S <-> S & dom(r) <: {}\nINITIALISATION\n    r := {}\nEND\n",
    )
    .unwrap();
    assert!(typecheck(&m, &lib).is_ok());
}

#[test]
fn unification_depends_on_the_binding() {
    let lib = Library::embedded();
    let cp = typecheck(lib.machine("Composite_Pattern").unwrap(), &lib).unwrap();
    let ra = typecheck(lib.machine("Resource_Allocation").unwrap(), &lib).unwrap();
    let elem = SetType::given("ELEMENT");
    let ba = BTreeMap::from([("COMPONENT".to_string(), elem.clone())]);
    let same = BTreeMap::from([("RESOURCE".to_string(), elem.clone()), ("FACILITY".to_string(), SetType::given("F"))]);
    assert!(unifiable("Component", "Resource", &cp.env, &ra.env, &ba, &same).is_ok());

    let apart = BTreeMap::from([("RESOURCE".to_string(), SetType::given("R"))]);
    let err = unifiable("Component", "Resource", &cp.env, &ra.env, &ba, &apart).unwrap_err();
    assert_eq!(err.kind(), "TypeMismatch");

    let err = unifiable("Father", "Provides", &cp.env, &ra.env, &ba, &same).unwrap_err();
    assert_eq!(err.kind(), "TypeMismatch");
}

#[test]
fn generated_machines_typecheck() {
    for file in ["directory_renaming.toml", "juxtaposition.toml", "links.toml", "unification.toml", "comp_by_unif_inst.toml", "extension.toml"] {
        let (m, lib) = spec_machine(file);
        typecheck(&m, &lib).unwrap_or_else(|e| panic!("{file}: {e}"));
    }
}
