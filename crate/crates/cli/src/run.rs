use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use nsvqe::adapt::{read_checkpoint, write_checkpoint, AdaptEngine, AdaptOutcome, LayerTrace};
use nsvqe::measure::{sample_energy, ShotPlan, SymmetrySector};
use nsvqe::synth::measurement::{count_measurement_circuits, measurement_plan, MeasurementCounts};
use nsvqe::synth::synthesize_exponential;
use nsvqe::{Error, StateVector};
use serde::Serialize;

use crate::config::RunConfig;
use crate::problem::{self, Problem};

/// Largest register the sampling stage simulates.
const MAX_SAMPLED_QUBITS: usize = 24;

#[derive(Serialize)]
struct SamplingSummary {
    shots_per_circuit: usize,
    circuits: usize,
    mitigation: String,
    flip_rate: f64,
    energy: f64,
    std_error: f64,
    discard_fraction: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a RunConfig,
    n_qubits: usize,
    dim_sp: usize,
    dim_mb: u128,
    n_sd: usize,
    pool_size: usize,
    reference: String,
    stop_reason: String,
    layers: usize,
    final_energy: f64,
    exact_energy: Option<f64>,
    eps_e: Option<f64>,
    infidelity: Option<f64>,
    n_cnot: usize,
    total_fc: usize,
    measurement_counts: MeasurementCounts,
    hamiltonian_circuits: usize,
    sampling: Option<SamplingSummary>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn trace_csv(traces: &[LayerTrace]) -> String {
    let mut s = String::from("layer,op,grad,energy,eps_E,infidelity,mean_entropy_err,n_cnot,n_fc\n");
    for t in traces {
        let op = t.op.map(|o| o.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},\"{op}\",{},{},{},{},{},{},{}",
            t.layer,
            t.max_gradient,
            t.energy,
            opt(t.eps_e),
            opt(t.infidelity),
            opt(t.mean_entropy_err),
            t.n_cnot_total,
            t.n_fc
        );
    }
    s
}

fn final_state(p: &Problem, cfg: &RunConfig, out: &AdaptOutcome) -> Result<StateVector, Error> {
    let n = p.space.n_qubits();
    if n > MAX_SAMPLED_QUBITS {
        return Err(Error::Resource(format!("sampling needs a {n}-qubit statevector (limit {MAX_SAMPLED_QUBITS})")));
    }
    let mut sv = StateVector::from_det(n, out.state.reference)?;
    for (op, &theta) in out.state.ops.iter().zip(&out.state.thetas) {
        sv.apply(&synthesize_exponential(n, op.indices(), theta, cfg.connectivity)?.circuit)?;
    }
    Ok(sv)
}

fn sample(p: &Problem, cfg: &RunConfig, out: &AdaptOutcome, dir: &Path) -> Result<SamplingSummary> {
    let sv = final_state(p, cfg, out)?;
    let plan = measurement_plan(&p.h, cfg.grouped)?;
    let mut shots = ShotPlan::new(cfg.shots, cfg.seed)?;
    shots.flip_rate = cfg.flip_rate;
    let sector = SymmetrySector::new(&p.space, cfg.neutrons, cfg.protons, cfg.m2);
    let est = sample_energy(&sv, &plan, &shots, cfg.mitigation_policy(), &sector)?;
    fs::write(dir.join("measurement.csv"), est.tallies_csv())?;
    Ok(SamplingSummary {
        shots_per_circuit: cfg.shots,
        circuits: plan.n_circuits(),
        mitigation: cfg.mitigation.clone(),
        flip_rate: cfg.flip_rate,
        energy: est.energy,
        std_error: est.std_error,
        discard_fraction: est.discard_fraction,
    })
}

pub fn cmd_run(cfg: &RunConfig, resume: Option<&Path>, quiet: bool) -> Result<()> {
    let p = problem::build(cfg)?;
    let n = p.space.n_qubits();
    let mut engine = AdaptEngine::new(&p.h, p.basis.clone(), cfg.adapt_config(n)?)?;
    if let Some(path) = resume {
        let file = File::open(path).with_context(|| format!("opening checkpoint {}", path.display()))?;
        let (ops, thetas) = read_checkpoint(std::io::BufReader::new(file))?;
        engine.resume(ops, thetas)?;
    }
    let mut shown = 0;
    let stop = loop {
        let reason = engine.step()?;
        for t in engine.traces.iter().skip(shown).filter(|_| !quiet) {
            let op = t.op.map(|o| o.to_string()).unwrap_or_else(|| "reference".into());
            let eps = t.eps_e.map(|e| format!(" eps {e:.3e}")).unwrap_or_default();
            eprintln!("layer {:>3} {op:<14} E {:.10}{eps}", t.layer, t.energy);
        }
        shown = engine.traces.len();
        if let Some(r) = reason {
            break r;
        }
    };
    let out = engine.finish(stop);

    fs::create_dir_all(&cfg.output).with_context(|| format!("creating {}", cfg.output.display()))?;
    let dir = cfg.output.as_path();
    let mut jsonl = BufWriter::new(File::create(dir.join("trace.jsonl"))?);
    for t in &out.traces {
        serde_json::to_writer(&mut jsonl, t)?;
        jsonl.write_all(b"\n")?;
    }
    jsonl.flush()?;
    fs::write(dir.join("trace.csv"), trace_csv(&out.traces))?;
    let mut ck = BufWriter::new(File::create(dir.join("checkpoint.bin"))?);
    write_checkpoint(&mut ck, &out.state.ops, &out.state.thetas)?;
    ck.flush()?;

    let sampling = if cfg.shots > 0 { Some(sample(&p, cfg, &out, dir)?) } else { None };
    let last = out.traces.last().expect("reference trace");
    let summary = Summary {
        config: cfg,
        n_qubits: n,
        dim_sp: p.space.dim_sp(),
        dim_mb: p.dim_mb,
        n_sd: p.basis.dim(),
        pool_size: out.pool_size,
        reference: out.state.reference.ket(n),
        stop_reason: out.stop.to_string(),
        layers: out.state.ops.len(),
        final_energy: last.energy,
        exact_energy: out.exact_energy,
        eps_e: last.eps_e,
        infidelity: last.infidelity,
        n_cnot: last.n_cnot_total,
        total_fc: out.total_fc,
        measurement_counts: count_measurement_circuits(&p.space),
        hamiltonian_circuits: measurement_plan(&p.h, cfg.grouped)?.n_circuits(),
        sampling,
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(dir.join("summary.json"), text)?;
    if !quiet {
        eprintln!(
            "{}: {} layers, E = {:.10}, outputs in {}",
            out.stop,
            out.state.ops.len(),
            last.energy,
            dir.display()
        );
    }
    Ok(())
}
