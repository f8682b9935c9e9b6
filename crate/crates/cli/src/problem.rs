use nsvqe::fock::FockBasis;
use nsvqe::hamiltonian::{decouple_to_mscheme, Interaction, MSchemeHamiltonian};
use nsvqe::valence::build_valence_space;
use nsvqe::{Error, ValenceSpace};

use crate::config::RunConfig;

/// Largest m-scheme basis a run will attempt.
pub const MAX_BASIS: usize = 2_000_000;

pub struct Problem {
    pub space: ValenceSpace,
    pub h: MSchemeHamiltonian,
    pub basis: FockBasis,
    pub dim_mb: u128,
}

/// Resolves `random:<seed>`, `pairing:<strength>[:<spe>,<spe>,...]` or a path to an interaction file.
pub fn load_interaction(spec: &str, normalization: &str, space: &ValenceSpace) -> Result<Interaction, Error> {
    let bad = |what: &str| Error::Config(format!("invalid {what} in interaction '{spec}'"));
    if let Some(seed) = spec.strip_prefix("random:") {
        return Ok(Interaction::random(space, seed.parse().map_err(|_| bad("seed"))?));
    }
    if let Some(rest) = spec.strip_prefix("pairing:") {
        let (g, spe) = rest.split_once(':').unwrap_or((rest, ""));
        let g: f64 = g.parse().map_err(|_| bad("strength"))?;
        let mut energies = vec![0.0; space.orbitals.len()];
        if !spe.is_empty() {
            let vals: Vec<f64> =
                spe.split(',').map(str::parse).collect::<Result<_, _>>().map_err(|_| bad("energies"))?;
            if vals.len() != energies.len() {
                return Err(Error::Config(format!(
                    "{} orbital energies given, the space has {}",
                    vals.len(),
                    energies.len()
                )));
            }
            energies = vals;
        }
        return Interaction::pairing(space, g, &energies);
    }
    let mut text = std::fs::read_to_string(spec)
        .map_err(|e| Error::Config(format!("cannot read interaction file {spec}: {e}")))?;
    // Records are applied in order, so a trailing header overrides the file's own.
    if normalization != "file" {
        text.push_str(&format!("\nNORMALIZATION {normalization}\n"));
    }
    Interaction::parse(&text, space)
}

pub fn build(cfg: &RunConfig) -> Result<Problem, Error> {
    let space = build_valence_space(cfg.shell, cfg.species)?;
    let as_config = |e: Error| match e {
        Error::Domain(m) => Error::Config(m),
        other => other,
    };
    let dim_mb = space.dim_mb(cfg.neutrons, cfg.protons).map_err(as_config)?;
    if (cfg.m2 - (cfg.neutrons + cfg.protons) as i32).rem_euclid(2) != 0 {
        return Err(Error::Config(format!(
            "2M = {} has the wrong parity for {} particles",
            cfg.m2,
            cfg.neutrons + cfg.protons
        )));
    }
    let inter = load_interaction(&cfg.interaction, &cfg.normalization, &space)?;
    let h = decouple_to_mscheme(&inter, &space)?;
    let dets = space.enumerate_m_basis(cfg.neutrons, cfg.protons, cfg.m2).map_err(as_config)?;
    if dets.len() > MAX_BASIS {
        return Err(Error::Resource(format!("m-scheme basis of {} determinants exceeds {MAX_BASIS}", dets.len())));
    }
    let basis = FockBasis::from_dets(space.n_qubits(), dets);
    Ok(Problem { space, h, basis, dim_mb })
}
