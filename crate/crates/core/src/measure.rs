//! Finite-shot energy estimation, readout bit flips and symmetry post-selection.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{index_to_occ, Circuit, StateVector};
use crate::synth::clifford::conjugate_string;
use crate::synth::measurement::{eval_rules, MeasurementCounts, MeasurementPlan};
use crate::valence::{iter_bits, SlaterDet, ValenceSpace, TZ2_NEUTRON, TZ2_PROTON};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotPlan {
    pub shots_per_circuit: usize,
    pub seed: u64,
    /// Independent per-qubit readout flip probability.
    pub flip_rate: f64,
}

impl ShotPlan {
    pub fn new(shots_per_circuit: usize, seed: u64) -> Result<Self> {
        if shots_per_circuit == 0 {
            return Err(Error::Config("at least one shot per circuit is required".into()));
        }
        Ok(Self { shots_per_circuit, seed, flip_rate: 0.0 })
    }

    /// Circuit executions for one energy evaluation.
    pub fn total_executions(&self, plan: &MeasurementPlan) -> usize {
        self.shots_per_circuit * plan.n_circuits()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MitigationPolicy {
    pub number: bool,
    pub m: bool,
    pub tz: bool,
}

impl MitigationPolicy {
    pub const OFF: Self = Self { number: false, m: false, tz: false };
    pub const NUMBER: Self = Self { number: true, m: false, tz: false };
    pub const ALL: Self = Self { number: true, m: true, tz: true };

    pub fn is_off(&self) -> bool {
        !(self.number || self.m || self.tz)
    }
}

impl FromStr for MitigationPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "off" | "none" => Ok(Self::OFF),
            "number" => Ok(Self::NUMBER),
            "number+mtz" | "all" => Ok(Self::ALL),
            other => Err(Error::Config(format!("unknown mitigation '{other}' (off|number|number+mtz)"))),
        }
    }
}

impl std::fmt::Display for MitigationPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.number, self.m, self.tz) {
            (false, false, false) => f.write_str("off"),
            (true, false, false) => f.write_str("number"),
            (true, true, true) => f.write_str("number+mtz"),
            (n, m, t) => write!(f, "number={n},m={m},tz={t}"),
        }
    }
}

/// Quantum numbers the measured state is known to carry.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetrySector {
    pub n_qubits: usize,
    pub neutron_mask: u64,
    pub proton_mask: u64,
    pub m2_of: Vec<i32>,
    pub neutrons: usize,
    pub protons: usize,
    pub m2: i32,
}

impl SymmetrySector {
    pub fn new(space: &ValenceSpace, neutrons: usize, protons: usize, m2: i32) -> Self {
        Self {
            n_qubits: space.n_qubits(),
            neutron_mask: space.species_mask(TZ2_NEUTRON),
            proton_mask: space.species_mask(TZ2_PROTON),
            m2_of: space.states.iter().map(|s| s.m2).collect(),
            neutrons,
            protons,
            m2,
        }
    }

    pub fn of_det(space: &ValenceSpace, det: SlaterDet) -> Self {
        let (n, z) = space.det_counts(det);
        Self::new(space, n, z, space.det_m2(det))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Check {
    Count { mask: u64, want: usize },
    Parity { mask: u64, neg: bool, want: usize },
    M { want: i32 },
    Tz { want: i64 },
}

/// Bitstring filter for one circuit. Each `Z_q` is pulled through the basis change; checks
/// whose qubits all stay diagonal are evaluated literally, a species count falls back to its
/// parity when only the parity image is diagonal, and anything else is left unchecked.
#[derive(Clone, Debug, PartialEq)]
pub struct PostSelector {
    /// Per qubit: Z-mask and sign of the image of `Z_q`, when diagonal.
    images: Vec<Option<(u64, bool)>>,
    m2_of: Vec<i32>,
    neutron_mask: u64,
    proton_mask: u64,
    checks: Vec<Check>,
}

impl PostSelector {
    pub fn new(sector: &SymmetrySector, policy: MitigationPolicy, basis_change: &Circuit) -> Result<Self> {
        let n = sector.n_qubits;
        let mut images = Vec::with_capacity(n);
        for q in 0..n {
            let s = conjugate_string(basis_change, 0, 1 << q)?;
            images.push((s.x == 0).then_some((s.z, s.neg)));
        }
        let diag = |mask: u64| iter_bits(mask).all(|q| images[q].is_some());
        let mut checks = Vec::new();
        if policy.number {
            for (mask, want) in [(sector.neutron_mask, sector.neutrons), (sector.proton_mask, sector.protons)] {
                if mask == 0 {
                    continue;
                }
                if diag(mask) {
                    checks.push(Check::Count { mask, want });
                } else {
                    let s = conjugate_string(basis_change, 0, mask)?;
                    if s.x == 0 {
                        checks.push(Check::Parity { mask: s.z, neg: s.neg, want: want % 2 });
                    }
                }
            }
        }
        let all = sector.neutron_mask | sector.proton_mask;
        if policy.m && diag(all) {
            checks.push(Check::M { want: sector.m2 });
        }
        if policy.tz && diag(all) {
            checks.push(Check::Tz { want: sector.protons as i64 - sector.neutrons as i64 });
        }
        Ok(Self {
            images,
            m2_of: sector.m2_of.clone(),
            neutron_mask: sector.neutron_mask,
            proton_mask: sector.proton_mask,
            checks,
        })
    }

    /// No filtering at all.
    pub fn is_trivial(&self) -> bool {
        self.checks.is_empty()
    }

    #[inline]
    fn occupied(&self, q: usize, b: u64) -> bool {
        let (z, neg) = self.images[q].expect("checked qubit has a diagonal image");
        ((b & z).count_ones() % 2 == 1) ^ neg
    }

    fn count(&self, mask: u64, b: u64) -> usize {
        iter_bits(mask).filter(|&q| self.occupied(q, b)).count()
    }

    pub fn accepts(&self, b: u64) -> bool {
        self.checks.iter().all(|c| match *c {
            Check::Count { mask, want } => self.count(mask, b) == want,
            Check::Parity { mask, neg, want } => (((b & mask).count_ones() % 2 == 1) ^ neg) as usize == want,
            Check::M { want } => {
                iter_bits(self.neutron_mask | self.proton_mask)
                    .filter(|&q| self.occupied(q, b))
                    .map(|q| self.m2_of[q])
                    .sum::<i32>()
                    == want
            }
            Check::Tz { want } => {
                self.count(self.proton_mask, b) as i64 - self.count(self.neutron_mask, b) as i64 == want
            }
        })
    }
}

/// Independent per-qubit flips of sampled readout strings.
pub fn inject_bitflips(samples: &[u64], n_qubits: usize, rate: f64, seed: u64) -> Result<Vec<u64>> {
    let coin = Bernoulli::new(rate).map_err(|_| Error::Domain(format!("flip rate {rate} outside [0, 1]")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(samples
        .iter()
        .map(|&b| (0..n_qubits).fold(b, |acc, q| if coin.sample(&mut rng) { acc ^ (1 << q) } else { acc }))
        .collect())
}

/// Measurement outcomes (occupation bitstrings) of `state` after `basis_change`.
pub fn sample_circuit(
    state: &StateVector,
    basis_change: &Circuit,
    shots: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<u64>> {
    let rotated = state.applied(basis_change)?;
    let probs = rotated.probability_vector();
    let dist = WeightedIndex::new(&probs).map_err(|e| Error::Domain(format!("cannot sample state: {e}")))?;
    let n = state.n_qubits;
    Ok((0..shots).map(|_| index_to_occ(dist.sample(rng), n)).collect())
}

/// Exact outcome distribution (occupation bitstring, probability) after `basis_change`.
pub fn outcome_distribution(state: &StateVector, basis_change: &Circuit) -> Result<Vec<(u64, f64)>> {
    let rotated = state.applied(basis_change)?;
    let n = state.n_qubits;
    Ok(rotated
        .probability_vector()
        .into_iter()
        .enumerate()
        .filter(|(_, p)| *p > 0.0)
        .map(|(i, p)| (index_to_occ(i, n), p))
        .collect())
}

/// `⟨H⟩` from the exact outcome distributions of every circuit of the plan.
pub fn exact_energy(state: &StateVector, plan: &MeasurementPlan) -> Result<f64> {
    let dists =
        plan.circuits.par_iter().map(|c| outcome_distribution(state, &c.basis_change)).collect::<Result<Vec<_>>>()?;
    Ok(plan.energy_from_distributions(&dists))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitTally {
    pub circuit: usize,
    pub label: String,
    pub kept: usize,
    pub discarded: usize,
    pub mean: f64,
    pub variance_of_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledEnergy {
    pub energy: f64,
    pub std_error: f64,
    pub discard_fraction: f64,
    pub tallies: Vec<CircuitTally>,
}

impl SampledEnergy {
    pub fn tallies_csv(&self) -> String {
        let mut s = String::from("circuit,label,kept,discarded,mean,variance_of_mean\n");
        for t in &self.tallies {
            let _ =
                writeln!(s, "{},{},{},{},{},{}", t.circuit, t.label, t.kept, t.discarded, t.mean, t.variance_of_mean);
        }
        s
    }
}

/// Samples every circuit of the plan, post-selects and assembles the energy estimate.
/// Circuit `c` draws from its own stream of a generator seeded by `shots.seed`.
pub fn sample_energy(
    state: &StateVector,
    plan: &MeasurementPlan,
    shots: &ShotPlan,
    policy: MitigationPolicy,
    sector: &SymmetrySector,
) -> Result<SampledEnergy> {
    if shots.shots_per_circuit == 0 {
        return Err(Error::Config("at least one shot per circuit is required".into()));
    }
    if state.n_qubits != plan.n_qubits || sector.n_qubits != plan.n_qubits {
        return Err(Error::Domain("state, plan and sector disagree on the qubit count".into()));
    }
    let tallies = plan
        .circuits
        .par_iter()
        .enumerate()
        .map(|(cid, circ)| -> Result<CircuitTally> {
            let mut rng = ChaCha8Rng::seed_from_u64(shots.seed);
            rng.set_stream(cid as u64);
            let mut samples = sample_circuit(state, &circ.basis_change, shots.shots_per_circuit, &mut rng)?;
            if shots.flip_rate > 0.0 {
                let flip_seed = shots.seed ^ (cid as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                samples = inject_bitflips(&samples, plan.n_qubits, shots.flip_rate, flip_seed)?;
            }
            let filter = PostSelector::new(sector, policy, &circ.basis_change)?;
            let values: Vec<f64> = samples
                .iter()
                .filter(|&&b| filter.accepts(b))
                .map(|&b| {
                    circ.terms
                        .iter()
                        .zip(&circ.rules)
                        .map(|(tid, rules)| plan.terms[*tid].coeff() * eval_rules(rules, b).re)
                        .sum()
                })
                .collect();
            let kept = values.len();
            if kept == 0 {
                return Err(Error::Estimator {
                    circuit: cid,
                    msg: format!("all shots of '{}' were discarded", circ.label),
                });
            }
            let mean = values.iter().sum::<f64>() / kept as f64;
            let var =
                if kept > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (kept - 1) as f64 } else { 0.0 };
            Ok(CircuitTally {
                circuit: cid,
                label: circ.label.clone(),
                kept,
                discarded: samples.len() - kept,
                mean,
                variance_of_mean: var / kept as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let energy = tallies.iter().map(|t| t.mean).sum();
    let std_error = tallies.iter().map(|t| t.variance_of_mean).sum::<f64>().sqrt();
    let discarded: usize = tallies.iter().map(|t| t.discarded).sum();
    let total = shots.shots_per_circuit * tallies.len();
    Ok(SampledEnergy { energy, std_error, discard_fraction: discarded as f64 / total as f64, tallies })
}

/// Circuit executions for a whole run: shots × circuits × objective calls.
/// With no layers the reference energy is measured once.
pub fn required_circuit_budget(
    counts: &MeasurementCounts,
    grouped: bool,
    n_fc_per_layer: &[usize],
    shots: usize,
) -> u128 {
    let n_tot = if grouped { counts.n_tot_grouped } else { counts.n_tot } as u128;
    let calls: u128 = n_fc_per_layer.iter().map(|&c| c as u128).sum();
    shots as u128 * n_tot * calls.max(1)
}

/// Shots per circuit for a target standard error, from one calibration estimate.
pub fn shots_for_precision(calibration_error: f64, calibration_shots: usize, target: f64) -> Result<usize> {
    if target.is_nan()
        || target <= 0.0
        || calibration_error.is_nan()
        || calibration_error < 0.0
        || calibration_shots == 0
    {
        return Err(Error::Config("precision target and calibration must be positive".into()));
    }
    let n = calibration_shots as f64 * (calibration_error / target).powi(2);
    Ok(n.ceil().max(1.0) as usize)
}
