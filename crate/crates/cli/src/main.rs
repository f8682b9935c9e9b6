mod config;
mod problem;
mod run;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use nsvqe::synth::measurement::count_measurement_circuits;
use nsvqe::valence::build_valence_space;
use nsvqe::{Error, ShellName, Species};

use config::Settings;

#[derive(Parser)]
#[command(name = "nsvqe", version, about = "Shell-model ADAPT-VQE simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive ansatz loop and write traces, a summary and a checkpoint.
    Run {
        #[command(flatten)]
        opts: RunOpts,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Suppress per-layer progress on stderr.
        #[arg(short, long)]
        quiet: bool,
    },
    /// Measurement-circuit counts per valence space.
    Counts {
        /// p, sd or pf; all six standard spaces when omitted.
        #[arg(long)]
        shell: Option<String>,
        /// neutrons or both.
        #[arg(long, default_value = "neutrons")]
        species: String,
    },
    /// Single-particle and many-body dimensions.
    Dims {
        #[arg(long)]
        shell: String,
        #[arg(long, default_value_t = 0)]
        neutrons: usize,
        #[arg(long, default_value_t = 0)]
        protons: usize,
        /// Twice the total angular-momentum projection; lowest allowed value when omitted.
        #[arg(long, allow_hyphen_values = true)]
        m2: Option<i32>,
    },
    /// Check Hamiltonian, circuit and measurement invariants for a configuration.
    Verify {
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Args)]
struct RunOpts {
    /// key = value configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    shell: Option<String>,
    #[arg(long)]
    species: Option<String>,
    #[arg(long)]
    neutrons: Option<usize>,
    #[arg(long)]
    protons: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    m2: Option<i32>,
    /// random:<seed>, pairing:<strength>[:<e1>,<e2>,...] or a path to an interaction file.
    #[arg(long)]
    interaction: Option<String>,
    /// matrix or circuit.
    #[arg(long)]
    backend: Option<String>,
    /// all or linear.
    #[arg(long)]
    connectivity: Option<String>,
    #[arg(long)]
    max_layers: Option<usize>,
    #[arg(long)]
    eps_target: Option<f64>,
    /// Reference determinant as a bitstring, qubit 0 first.
    #[arg(long)]
    reference: Option<String>,
    /// Shots per measurement circuit for the final sampled energy (0 disables sampling).
    #[arg(long)]
    shots: Option<usize>,
    /// off, number or number+mtz.
    #[arg(long)]
    mitigation: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Any other key, e.g. --set flip_rate=0.01.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunOpts {
    fn resolve(&self) -> Result<config::RunConfig, Error> {
        let mut s = match &self.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        let flags: [(&str, Option<String>); 14] = [
            ("shell", self.shell.clone()),
            ("species", self.species.clone()),
            ("neutrons", self.neutrons.map(|v| v.to_string())),
            ("protons", self.protons.map(|v| v.to_string())),
            ("m2", self.m2.map(|v| v.to_string())),
            ("interaction", self.interaction.clone()),
            ("backend", self.backend.clone()),
            ("connectivity", self.connectivity.clone()),
            ("max_layers", self.max_layers.map(|v| v.to_string())),
            ("eps_target", self.eps_target.map(|v| v.to_string())),
            ("reference", self.reference.clone()),
            ("shots", self.shots.map(|v| v.to_string())),
            ("mitigation", self.mitigation.clone()),
            ("seed", self.seed.map(|v| v.to_string())),
        ];
        for pair in &self.set {
            s.set_pair(pair)?;
        }
        for (k, v) in flags {
            if let Some(v) = v {
                s.set(k, &v)?;
            }
        }
        if let Some(o) = &self.output {
            s.set("output", &o.to_string_lossy())?;
        }
        s.resolve()
    }
}

fn cmd_counts(shell: Option<&str>, species: &str) -> Result<()> {
    let rows: Vec<(ShellName, Species)> = match shell {
        Some(s) => vec![(s.parse()?, species.parse()?)],
        None => [ShellName::P, ShellName::Sd, ShellName::Pf]
            .into_iter()
            .flat_map(|s| [(s, Species::Neutrons), (s, Species::Both)])
            .collect(),
    };
    println!("shell species n_qb n_h n_hh n_hh_grouped n_tot n_tot_grouped");
    for (shell, species) in rows {
        let c = count_measurement_circuits(&build_valence_space(shell, species)?);
        println!(
            "{shell} {species} {} {} {} {} {} {}",
            c.n_qubits, c.n_h, c.n_hh, c.n_hh_grouped, c.n_tot, c.n_tot_grouped
        );
    }
    Ok(())
}

fn cmd_dims(shell: &str, neutrons: usize, protons: usize, m2: Option<i32>) -> Result<()> {
    let space = build_valence_space(shell.parse()?, Species::Both)?;
    let m2 = m2.unwrap_or(((neutrons + protons) % 2) as i32);
    let config = |e: Error| match e {
        Error::Domain(m) => Error::Config(m),
        other => other,
    };
    let dim_mb = space.dim_mb(neutrons, protons).map_err(config)?;
    let n_sd = space.enumerate_m_basis(neutrons, protons, m2).map_err(config)?.len();
    println!("dim_sp dim_mb n_sd");
    println!("{} {dim_mb} {n_sd}", space.dim_sp());
    Ok(())
}

/// Exit status for a failed command: 2 configuration, 3 resource ceiling, 4 solver, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_) | Error::Parse { .. } | Error::Validation(_) | Error::Domain(_)) => 2,
        Some(Error::Resource(_)) => 3,
        Some(Error::Solver(_) | Error::Estimator { .. }) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { opts, resume, quiet } => {
            opts.resolve().map_err(anyhow::Error::from).and_then(|cfg| run::cmd_run(&cfg, resume.as_deref(), quiet))
        }
        Command::Counts { shell, species } => cmd_counts(shell.as_deref(), &species),
        Command::Dims { shell, neutrons, protons, m2 } => cmd_dims(&shell, neutrons, protons, m2),
        Command::Verify { opts } => {
            match opts.resolve().map_err(anyhow::Error::from).and_then(|c| verify::cmd_verify(&c)) {
                Ok(true) => Ok(()),
                Ok(false) => {
                    eprintln!("error: invariant checks failed");
                    return ExitCode::FAILURE;
                }
                Err(e) => Err(e),
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
