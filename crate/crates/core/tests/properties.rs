//! Property tests over random inputs.

mod common;

use common::{creation, max_diff, random_sector_state, restrict};
use nalgebra::DMatrix;
use nsvqe::adapt::{Backend, CircuitBackend, MatrixBackend, OperatorPool, PoolOp};
use nsvqe::fock::{apply_exp_pool, build_sparse_h, FockBasis};
use nsvqe::hamiltonian::{decouple_to_mscheme, Interaction, MSchemeHamiltonian};
use nsvqe::measure::exact_energy;
use nsvqe::qsim::{compile_fswap, Circuit, Gate, StateVector};
use nsvqe::synth::measurement::measurement_plan;
use nsvqe::synth::{conjugate_sum, synthesize_exponential, Connectivity};
use nsvqe::valence::{build_valence_space, ShellName, Species};
use nsvqe::{Complex64, PauliSum};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pauli_sum(n: usize, seed: u64, len: usize) -> PauliSum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = PauliSum::zero(n);
    let full = (1u64 << n) - 1;
    for _ in 0..len {
        let x = rng.random::<u64>() & full;
        let z = rng.random::<u64>() & full;
        s.add_term(x, z, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    }
    s
}

fn random_gate<R: Rng>(n: usize, rng: &mut R) -> Gate {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    match rng.random_range(0..6) {
        0 => Gate::X(a),
        1 => Gate::H(a),
        2 => Gate::Rx(a, rng.random_range(-3.0..3.0)),
        3 => Gate::Rz(a, rng.random_range(-3.0..3.0)),
        4 => Gate::Cnot { control: a, target: b },
        _ => Gate::Fswap(a, b),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn canonicalization_is_idempotent(seed in any::<u64>(), len in 0usize..40) {
        let s = random_pauli_sum(5, seed, len);
        let c = s.canonical();
        prop_assert_eq!(c.canonical(), c.clone());
        prop_assert!(max_diff(&c.to_dense(), &s.to_dense()) < 1e-12);
    }

    #[test]
    fn product_matches_dense_product(a in any::<u64>(), b in any::<u64>()) {
        let (x, y) = (random_pauli_sum(4, a, 6), random_pauli_sum(4, b, 6));
        prop_assert!(max_diff(&x.mul(&y).to_dense(), &(x.to_dense() * y.to_dense())) < 1e-12);
    }

    #[test]
    fn ladder_images_match_matrices(i in 0usize..6) {
        let got = nsvqe::jw::ladder(6, i, true).to_dense();
        prop_assert!(max_diff(&got, &creation(6, i)) < 1e-12);
    }

    #[test]
    fn long_circuits_preserve_norm(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 6;
        let mut c = Circuit::new(n);
        for _ in 0..10_000 {
            c.push(random_gate(n, &mut rng)).unwrap();
        }
        let sv = StateVector::random(n, &mut rng).applied(&c).unwrap();
        prop_assert!((sv.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn compiled_fswap_matches_native(seed in any::<u64>(), a in 0usize..5, d in 1usize..5) {
        let n = 5;
        let b = (a + d) % n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = StateVector::random(n, &mut rng);
        let mut native = Circuit::new(n);
        native.push(Gate::Fswap(a, b)).unwrap();
        let mut compiled = Circuit::new(n);
        for g in compile_fswap(a, b) {
            compiled.push(g).unwrap();
        }
        let (x, y) = (psi.applied(&native).unwrap(), psi.applied(&compiled).unwrap());
        let phase = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
        let dev = x.amps.iter().zip(&y.amps).fold(0.0f64, |m, (p, q)| m.max((p * phase - q).norm()));
        prop_assert!(dev < 1e-12);
    }

    #[test]
    fn expectation_is_linear(seed in any::<u64>(), alpha in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = StateVector::random(4, &mut rng);
        let a = random_pauli_sum(4, seed ^ 1, 5);
        let b = random_pauli_sum(4, seed ^ 2, 5);
        let (a, b) = (a.add(&a.adjoint()), b.add(&b.adjoint()));
        let lhs = psi.expectation(&a.scale(alpha.into()).add(&b)).unwrap();
        let rhs = alpha * psi.expectation(&a).unwrap() + psi.expectation(&b).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10);
        prop_assert!((psi.expectation(&PauliSum::identity(4)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn layers_are_exact(seed in any::<u64>(), n in 6usize..=10, linear in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pick = || {
            let mut v: Vec<usize> = (0..n).collect();
            for k in 0..4 {
                let j = rng.random_range(k..n);
                v.swap(k, j);
            }
            v
        };
        let v = pick();
        let (p, q) = (v[0].min(v[1]), v[0].max(v[1]));
        let (r, s) = (v[2].min(v[3]), v[2].max(v[3]));
        let theta = (seed % 1000) as f64 / 137.0 - 3.0;
        let conn = if linear { Connectivity::Linear } else { Connectivity::All };
        let layer = synthesize_exponential(n, [p, q, r, s], theta, conn).unwrap();
        let mut r2 = ChaCha8Rng::seed_from_u64(seed ^ 7);
        let psi = StateVector::random(n, &mut r2);
        let basis = FockBasis::full(n).unwrap();
        let want = apply_exp_pool(&PoolOp::new(p, q, r, s).unwrap().sparse(&basis), theta, &restrict(&psi, &basis));
        let got = restrict(&psi.applied(&layer.circuit).unwrap(), &basis);
        let dev = got.iter().zip(&want).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        prop_assert!(dev < 1e-10);
        prop_assert!(layer.cnots <= 16 * (n - 1) + 3 * layer.routing_fswaps);
        if linear {
            prop_assert!(layer.routing_fswaps <= 4 * (n - 4));
            for g in layer.circuit.gates() {
                if let Gate::Cnot { control, target } | Gate::Fswap(control, target) = *g {
                    prop_assert_eq!(control.abs_diff(target), 1);
                }
            }
        }
    }

    #[test]
    fn decoupled_elements_are_symmetric_and_conserving(seed in any::<u64>()) {
        let sp = build_valence_space(ShellName::P, Species::Both).unwrap();
        let h = decouple_to_mscheme(&Interaction::random(&sp, seed), &sp).unwrap();
        let st = &sp.states;
        for (&(i, j, k, l), &v) in &h.tbme {
            prop_assert!((h.vbar(j, i, k, l) + v).abs() < 1e-12);
            prop_assert!((h.vbar(i, j, l, k) + v).abs() < 1e-12);
            prop_assert!((h.vbar(k, l, i, j) - v).abs() < 1e-12);
            prop_assert_eq!(st[i].m2 + st[j].m2, st[k].m2 + st[l].m2);
            prop_assert_eq!(st[i].tz2 + st[j].tz2, st[k].tz2 + st[l].tz2);
        }
    }

    #[test]
    fn measurement_plan_is_exact(seed in any::<u64>(), grouped in any::<bool>()) {
        let sp = build_valence_space(ShellName::P, Species::Both).unwrap();
        let h = MSchemeHamiltonian::random(&sp, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = StateVector::random(sp.n_qubits(), &mut rng);
        let plan = measurement_plan(&h, grouped).unwrap();
        let direct = psi.expectation(&h.pauli_sum()).unwrap();
        prop_assert!((exact_energy(&psi, &plan).unwrap() - direct).abs() < 1e-10);
    }
}

#[test]
fn basis_partitions_over_projections() {
    for shell in [ShellName::P, ShellName::Sd] {
        for species in [Species::Neutrons, Species::Both] {
            let sp = build_valence_space(shell, species).unwrap();
            let half = sp.n_qubits() / if species == Species::Both { 2 } else { 1 };
            let z_max = if species == Species::Both { half } else { 0 };
            for n in 0..=half.min(4) {
                for z in 0..=z_max.min(3) {
                    let top = sp.max_m2(n, z);
                    let total: usize = (-top..=top).map(|m| sp.enumerate_m_basis(n, z, m).unwrap().len()).sum();
                    assert_eq!(total as u128, sp.dim_mb(n, z).unwrap(), "{shell:?} {species:?} {n} {z}");
                }
            }
        }
    }
}

#[test]
fn diagonal_energy_is_the_matrix_diagonal() {
    let sp = build_valence_space(ShellName::P, Species::Both).unwrap();
    let h = decouple_to_mscheme(&Interaction::random(&sp, 21), &sp).unwrap();
    for (n, z) in [(1, 0), (0, 2), (1, 1), (2, 2), (3, 2)] {
        let top = sp.max_m2(n, z);
        for m in (-top..=top).step_by(2) {
            let basis = FockBasis::m_scheme(&sp, n, z, m).unwrap();
            let dense: DMatrix<Complex64> = build_sparse_h(&h, &basis).to_dense();
            for (k, d) in basis.dets.iter().enumerate() {
                assert!((dense[(k, k)].re - h.diagonal_energy(*d)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn conjugated_groups_are_diagonal_dense() {
    let sp = build_valence_space(ShellName::P, Species::Neutrons).unwrap();
    let h = MSchemeHamiltonian::random(&sp, 5);
    for grouped in [false, true] {
        let plan = measurement_plan(&h, grouped).unwrap();
        for c in &plan.circuits {
            for &t in &c.terms {
                let img = conjugate_sum(&c.basis_change, &plan.terms[t].unit_pauli(6)).unwrap().to_dense();
                let off = (0..64).flat_map(|r| (0..64).map(move |s| (r, s))).filter(|(r, s)| r != s);
                assert!(off.map(|(r, s)| img[(r, s)].norm()).fold(0.0, f64::max) < 1e-12, "{}", c.label);
            }
        }
    }
}

#[test]
fn backends_agree_on_random_ansatze() {
    let sp = build_valence_space(ShellName::P, Species::Both).unwrap();
    let h = MSchemeHamiltonian::random(&sp, 8);
    let basis = FockBasis::m_scheme(&sp, 2, 2, 0).unwrap();
    let pool = OperatorPool::build(&sp).restricted_to(&basis);
    let reference = h.lowest_reference(&basis.dets).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut m = MatrixBackend::new(&h, basis.clone(), reference, &pool).unwrap();
    let mut c = CircuitBackend::new(&h, basis.clone(), reference, &pool, Connectivity::Linear).unwrap();
    for _ in 0..10 {
        let k = rng.random_range(1..8);
        let ops: Vec<PoolOp> = (0..k).map(|_| pool.ops[rng.random_range(0..pool.len())]).collect();
        let th: Vec<f64> = (0..k).map(|_| rng.random_range(-1.5..1.5)).collect();
        assert!((m.energy(&ops, &th).unwrap() - c.energy(&ops, &th).unwrap()).abs() < 1e-10);
        let psi = random_sector_state(&basis, &mut rng);
        assert!((psi.norm() - 1.0).abs() < 1e-12);
    }
}
