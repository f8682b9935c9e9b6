//! Valence spaces, qubit layout, pool enumeration and interaction decoupling.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use nsvqe::adapt::OperatorPool;
use nsvqe::fock::{build_sparse_h, FockBasis};
use nsvqe::hamiltonian::{decouple_to_mscheme, Interaction};
use nsvqe::valence::{build_valence_space, ShellName, Species};
use nsvqe::Complex64;

fn layout() -> String {
    let mut out = String::new();
    for shell in [ShellName::P, ShellName::Sd, ShellName::Pf] {
        for species in [Species::Neutrons, Species::Protons, Species::Both] {
            let sp = build_valence_space(shell, species).unwrap();
            writeln!(out, "# {shell:?} {species:?}").unwrap();
            for l in sp.qubit_map() {
                writeln!(out, "{} {} {} {}", l.qubit, l.orbital, l.m2, l.tz2).unwrap();
            }
        }
    }
    out
}

#[test]
fn qubit_layout_matches_golden_file() {
    let golden = include_str!("golden/qubit_layout.txt");
    assert_eq!(layout(), golden);
    let sp = build_valence_space(ShellName::Pf, Species::Both).unwrap();
    let mut seen: Vec<usize> = sp.states.iter().map(|s| s.qubit).collect();
    seen.sort_unstable();
    assert_eq!(seen, (0..40).collect::<Vec<_>>());
}

#[test]
fn pool_matches_exhaustive_scan() {
    for (shell, species) in
        [(ShellName::Sd, Species::Both), (ShellName::P, Species::Neutrons), (ShellName::Pf, Species::Neutrons)]
    {
        let sp = build_valence_space(shell, species).unwrap();
        let n = sp.n_qubits();
        let st = &sp.states;
        let mut count = 0;
        for p in 0..n {
            for q in p + 1..n {
                for r in 0..n {
                    for s in r + 1..n {
                        if (p, q) >= (r, s) {
                            continue;
                        }
                        if st[p].m2 + st[q].m2 == st[r].m2 + st[s].m2 && st[p].tz2 + st[q].tz2 == st[r].tz2 + st[s].tz2
                        {
                            count += 1;
                        }
                    }
                }
            }
        }
        let pool = OperatorPool::build(&sp);
        assert_eq!(pool.len(), count, "{shell:?} {species:?}");
        assert!(pool.ops.iter().all(|o| (o.p, o.q) != (o.r, o.s)));
    }
}

fn spectrum(m: DMatrix<Complex64>) -> Vec<f64> {
    let mut e: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// A rotationally invariant Hamiltonian has every M-sector spectrum inside the M=0 (or 1/2) one.
#[test]
fn decoupled_hamiltonian_is_rotationally_invariant() {
    for (shell, n, z, seed) in
        [(ShellName::P, 1, 1, 1u64), (ShellName::P, 2, 1, 2), (ShellName::Sd, 1, 1, 3), (ShellName::Sd, 2, 0, 4)]
    {
        let sp = build_valence_space(shell, Species::Both).unwrap();
        let h = decouple_to_mscheme(&Interaction::random(&sp, seed), &sp).unwrap();
        let top = sp.max_m2(n, z);
        let low = top.rem_euclid(2);
        let base = spectrum(build_sparse_h(&h, &FockBasis::m_scheme(&sp, n, z, low).unwrap()).to_dense());
        for m in (low + 2..=top).step_by(2) {
            for e in spectrum(build_sparse_h(&h, &FockBasis::m_scheme(&sp, n, z, m).unwrap()).to_dense()) {
                let hit = base.iter().map(|b| (b - e).abs()).fold(f64::INFINITY, f64::min);
                assert!(hit < 1e-9, "{shell:?} {n}n{z}p M2={m}: {e} missing from M2={low}");
            }
        }
    }
}
