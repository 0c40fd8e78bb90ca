//! `bpat sweep`: prover soundness on random machines, seeded by `--seed`.


use bpat_core::crosscheck::prover_soundness;
use bpat_core::random::Generator;
use bpat_core::{classify_all, generate, Library, Oracle};
use serde::Serialize;

use crate::{exit, Cli, Format, Io};

#[derive(Serialize)]
struct SweepSummary {
    seed: u64,
    machines: usize,
    obligations: usize,
    checked: usize,
    unsound: Vec<String>,
    undecided: usize,
}

pub(crate) fn sweep(cli: &Cli, machines: usize, sizes: &[usize], io: &mut Io) -> i32 {
    let oracle = Oracle::with_sizes(sizes.to_vec());
    let mut g = Generator::new(cli.seed);
    let lib = Library::new();
    let mut s = SweepSummary { seed: cli.seed, machines, obligations: 0, checked: 0, unsound: vec![], undecided: 0 };
    for i in 0..machines {
        let m = g.machine(&format!("Random_{i}"));
        let pos = match generate(&m, &lib) {
            Ok(p) => p,
            Err(e) => {
                let _ = writeln!(io.err, "Random_{i}: {e}");
                return exit::TYPE;
            }
        };
        let r = prover_soundness(&pos, &classify_all(&pos), &oracle);
        s.obligations += pos.len();
        s.checked += r.checked;
        s.undecided += r.undecided.len();
        s.unsound.extend(r.unsound.into_iter().map(|(l, _)| l));
    }
    match cli.format {
        Format::Structured => {
            let _ = writeln!(io.out, "{}", serde_json::to_string(&s).expect("serializable"));
        }
        Format::Text => {
            let _ = writeln!(
                io.out,
                "seed {}: {} machine(s), {} PO(s), {} proved and checked, {} unsound, {} undecided",
                s.seed,
                s.machines,
                s.obligations,
                s.checked,
                s.unsound.len(),
                s.undecided
            );
            for l in &s.unsound {
                let _ = writeln!(io.out, "  unsound: {l}");
            }
        }
    }
    if s.unsound.is_empty() {
        exit::OK
    } else {
        exit::REFUTED
    }
}
