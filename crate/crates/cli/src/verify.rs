use anyhow::Result;
use nsvqe::adapt::{Backend, MatrixBackend, OperatorPool};
use nsvqe::fock::{apply_exp_pool, build_sparse_h, expectation};
use nsvqe::measure::exact_energy;
use nsvqe::qsim::occ_to_index;
use nsvqe::synth::measurement::{count_measurement_circuits, measurement_plan};
use nsvqe::synth::synthesize_exponential;
use nsvqe::{Complex64, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::problem::{self, Problem};

/// Register size up to which statevector checks run.
const MAX_VERIFY_QUBITS: usize = 20;

struct Check {
    name: &'static str,
    ok: bool,
    detail: String,
}

fn within(name: &'static str, err: f64, tol: f64) -> Check {
    Check { name, ok: err <= tol, detail: format!("max error {err:.2e} (tolerance {tol:.0e})") }
}

fn random_coeffs(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let v: Vec<Complex64> =
        (0..dim).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|c| c / norm).collect()
}

fn embed(p: &Problem, coeffs: &[Complex64]) -> Result<StateVector> {
    let n = p.space.n_qubits();
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    for (d, c) in p.basis.dets.iter().zip(coeffs) {
        amps[occ_to_index(d.occupation, n)] = *c;
    }
    Ok(StateVector::from_amplitudes(n, amps)?)
}

fn hamiltonian_checks(p: &Problem, out: &mut Vec<Check>) {
    let st = &p.space.states;
    let mut antisym = 0.0f64;
    let mut broken = 0;
    for (&(i, j, k, l), &v) in &p.h.tbme {
        antisym = antisym.max((p.h.vbar(j, i, k, l) + v).abs()).max((p.h.vbar(k, l, i, j) - v).abs());
        if st[i].m2 + st[j].m2 != st[k].m2 + st[l].m2 || st[i].tz2 + st[j].tz2 != st[k].tz2 + st[l].tz2 {
            broken += 1;
        }
    }
    out.push(within("two-body antisymmetry and hermiticity", antisym, 1e-12));
    out.push(Check {
        name: "two-body elements conserve M and Tz",
        ok: broken == 0,
        detail: format!("{} elements, {broken} violations", p.h.tbme.len()),
    });
    let hs = build_sparse_h(&p.h, &p.basis);
    out.push(within("sparse Hamiltonian hermiticity", hs.hermiticity_error(), 1e-12));
    let diag = p
        .basis
        .dets
        .iter()
        .enumerate()
        .map(|(a, &d)| (hs.get(a, a).re - p.h.diagonal_energy(d)).abs())
        .fold(0.0, f64::max);
    out.push(within("diagonal energies", diag, 1e-10));
}

fn statevector_checks(p: &Problem, cfg: &RunConfig, out: &mut Vec<Check>) -> Result<()> {
    let n = p.space.n_qubits();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let hs = build_sparse_h(&p.h, &p.basis);
    let coeffs = random_coeffs(p.basis.dim(), &mut rng);
    let sv = embed(p, &coeffs)?;
    let e_sparse = expectation(&hs, &coeffs);
    let e_pauli = sv.expectation(&p.h.pauli_sum())?;
    out.push(within("Pauli energy vs sparse matrix", (e_pauli - e_sparse).abs(), 1e-10));
    let mut est = 0.0f64;
    for grouped in [false, true] {
        est = est.max((exact_energy(&sv, &measurement_plan(&p.h, grouped)?)? - e_sparse).abs());
    }
    out.push(within("measurement plans reproduce the energy", est, 1e-10));

    let pool = OperatorPool::build(&p.space).restricted_to(&p.basis);
    let mut layer_err = 0.0f64;
    for op in pool.ops.iter().take(24) {
        let theta = rng.random_range(-1.0..1.0);
        let want = apply_exp_pool(&op.sparse(&p.basis), theta, &coeffs);
        let got = sv.applied(&synthesize_exponential(n, op.indices(), theta, cfg.connectivity)?.circuit)?;
        for (d, w) in p.basis.dets.iter().zip(&want) {
            layer_err = layer_err.max((got.amplitude_of(*d) - w).norm());
        }
    }
    out.push(within("circuit layers vs matrix exponentials", layer_err, 1e-10));
    Ok(())
}

fn gradient_check(p: &Problem, out: &mut Vec<Check>) -> Result<()> {
    let pool = OperatorPool::build(&p.space).restricted_to(&p.basis);
    if pool.is_empty() {
        return Ok(());
    }
    let reference = p.h.lowest_reference(&p.basis.dets)?;
    let mut m = MatrixBackend::new(&p.h, p.basis.clone(), reference, &pool)?;
    let at_reference = m.screen(&[], &[], &pool)?;
    let best =
        (0..pool.len()).max_by(|&a, &b| at_reference[a].abs().total_cmp(&at_reference[b].abs())).expect("nonempty");
    let ops = vec![pool.ops[best]];
    let thetas = vec![0.37];
    let grads = m.screen(&ops, &thetas, &pool)?;
    let step = 1e-5;
    let mut worst = 0.0f64;
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| grads[b].abs().total_cmp(&grads[a].abs()));
    for j in order.into_iter().take(24) {
        let op = &pool.ops[j];
        let ext = [ops.clone(), vec![*op]].concat();
        let ep = m.energy(&ext, &[0.37, step])?;
        let em = m.energy(&ext, &[0.37, -step])?;
        worst = worst.max(((ep - em) / (2.0 * step) - grads[j]).abs());
    }
    out.push(within("screened gradients vs finite differences", worst, 1e-6));
    Ok(())
}

/// Runs the invariant suite on the configured problem; returns whether everything held.
pub fn cmd_verify(cfg: &RunConfig) -> Result<bool> {
    let p = problem::build(cfg)?;
    let mut checks = Vec::new();
    hamiltonian_checks(&p, &mut checks);
    if p.space.n_qubits() <= MAX_VERIFY_QUBITS {
        statevector_checks(&p, cfg, &mut checks)?;
    } else {
        println!("skipping statevector checks above {MAX_VERIFY_QUBITS} qubits");
    }
    gradient_check(&p, &mut checks)?;
    let c = count_measurement_circuits(&p.space);
    checks.push(Check {
        name: "circuit totals",
        ok: c.n_tot == c.n_h + c.n_hh + 1 && c.n_hh_grouped <= c.n_hh,
        detail: format!("{} = {} + {} + 1, grouped {}", c.n_tot, c.n_h, c.n_hh, c.n_hh_grouped),
    });
    for ch in &checks {
        println!("{}: {} ({})", ch.name, if ch.ok { "PASS" } else { "FAIL" }, ch.detail);
    }
    Ok(checks.iter().all(|c| c.ok))
}
