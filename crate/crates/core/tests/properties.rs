use bpat_core::ast::rename;
use bpat_core::crosscheck::{renaming_commutes, wp_vs_transition};
use bpat_core::random::Generator;
use bpat_core::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let m = Generator::new(seed).machine("Rand");
        let text = pretty_print(&m);
        let back = parse_machine_str(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(pretty_print(&back), text);
    }

    #[test]
    fn rename_inverse_is_identity(seed in any::<u64>()) {
        let mut g = Generator::new(seed);
        let m = g.machine("Rand");
        let r = g.renaming(&m);
        let there = rename(&m, &r).unwrap();
        prop_assert_eq!(rename(&there, &r.inverse()).unwrap(), m);
    }

    #[test]
    fn generated_machines_typecheck(seed in any::<u64>()) {
        let m = Generator::new(seed).machine("Rand");
        prop_assert!(typecheck(&m, &Library::new()).is_ok());
    }

    #[test]
    fn instances_reparse_and_typecheck(seed in any::<u64>()) {
        let mut g = Generator::new(seed);
        let p = g.machine("Pat");
        let spec = g.instantiation(&p, "Inst");
        let mut lib = Library::new();
        lib.insert(p);
        let inst = instantiate(&spec, &lib).unwrap();
        prop_assert_eq!(&parse_machine_str(&pretty_print(&inst)).unwrap(), &inst);
        prop_assert!(typecheck(&inst, &lib).is_ok());
    }

    #[test]
    fn renaming_commutes_with_instantiation(seed in any::<u64>()) {
        let mut g = Generator::new(seed);
        let p = g.machine("Pat");
        let spec = g.instantiation(&p, "Inst");
        let r = g.renaming(&p);
        prop_assert!(renaming_commutes(&p, &spec, &r).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wp_agrees_with_execution(seed in any::<u64>()) {
        let (m, probes) = Generator::new(seed).machine_with_probes("Rand", 2);
        let r = wp_vs_transition(&m, &probes, &Oracle::with_sizes(vec![1, 2])).unwrap();
        prop_assert!(r.disagreements.is_empty(), "{:?}", r.disagreements);
    }

    #[test]
    fn proved_obligations_hold_on_small_models(seed in any::<u64>()) {
        let m = Generator::new(seed).machine("Rand");
        let pos = generate(&m, &Library::new()).unwrap();
        let s = crosscheck::prover_soundness(&pos, &classify_all(&pos), &Oracle::with_sizes(vec![1, 2]));
        prop_assert!(s.unsound.is_empty(), "{:?}", s.unsound);
    }
}

#[test]
fn generator_is_deterministic() {
    let a = Generator::new(5).machine("Rand");
    let b = Generator::new(5).machine("Rand");
    assert_eq!(a, b);
}
