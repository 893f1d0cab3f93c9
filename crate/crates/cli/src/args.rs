use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "fswt", version, about = "Floquet Schrieffer-Wolff transform of the dipole-driven Hubbard chain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sector size, drive components, closed-form coefficients and resonance margins.
    ModelInfo(Flags),
    /// Generators and effective Hamiltonian: h_eff.json, generators.json, report.txt.
    Fswt(Flags),
    /// Effective Hamiltonian against the high-frequency expansion.
    CompareHfe(Flags),
    /// CDW return rates (exact, FSWT, HFE): dynamics.csv.
    Evolve(Flags),
    /// Return-rate error versus frequency at fixed g/ω: sweep.csv.
    SweepOmega(Flags),
    /// Block-diagonalization of the Sambe Hamiltonian by the micro-motion.
    SambeCheck(Flags),
    /// Ground-state filling versus chemical potential: mu_scan.csv.
    MuScan(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::ModelInfo(_) => "model-info",
            Command::Fswt(_) => "fswt",
            Command::CompareHfe(_) => "compare-hfe",
            Command::Evolve(_) => "evolve",
            Command::SweepOmega(_) => "sweep-omega",
            Command::SambeCheck(_) => "sambe-check",
            Command::MuScan(_) => "mu-scan",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::ModelInfo(f)
            | Command::Fswt(f)
            | Command::CompareHfe(f)
            | Command::Evolve(f)
            | Command::SweepOmega(f)
            | Command::SambeCheck(f)
            | Command::MuScan(f) => f,
        }
    }
}

/// Every flag is optional here; required values are enforced after merging
/// with the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Number of sites
    #[arg(long = "L", value_name = "SITES")]
    pub sites: Option<String>,
    /// Hopping amplitude [default: 1]
    #[arg(long = "J")]
    pub hopping: Option<String>,
    /// On-site interaction [default: 0]
    #[arg(long = "U")]
    pub interaction: Option<String>,
    /// Chemical potential [default: 0]
    #[arg(long)]
    pub mu: Option<String>,
    /// Drive strength [default: 0]
    #[arg(long)]
    pub g: Option<String>,
    /// Drive frequency
    #[arg(long)]
    pub omega: Option<String>,
    /// Spin-up particles [default: ceil(L/2)]
    #[arg(long)]
    pub nup: Option<String>,
    /// Spin-down particles [default: ceil(L/2)]
    #[arg(long)]
    pub ndown: Option<String>,
    /// Highest order in g of the effective Hamiltonian, ≤ 4 [default: 2]
    #[arg(long)]
    pub orders: Option<String>,
    /// spectral | series:N [default: spectral; series:2 for evolve and sweep-omega]
    #[arg(long)]
    pub method: Option<String>,
    /// Midpoint steps per drive period for exact evolution [default: 128]
    #[arg(long = "steps-per-period")]
    pub steps_per_period: Option<String>,
    /// Sambe harmonic cutoff [default: 8]
    #[arg(long = "M")]
    pub cutoff: Option<String>,
    /// Output directory [default: .]
    #[arg(long)]
    pub out: Option<String>,
    /// key=value file; flags given on the command line take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Origin shift c of the dipole coordinate j + c [default: 0]
    #[arg(long = "dipole-offset", allow_hyphen_values = true)]
    pub dipole_offset: Option<String>,
    /// Final time for evolve and sweep-omega [default: 60]
    #[arg(long = "t-final")]
    pub t_final: Option<String>,
    /// Frequency grid: comma list or start:stop:count
    #[arg(long, allow_hyphen_values = true)]
    pub omegas: Option<String>,
    /// Fixed drive ratio g/ω for sweep-omega [default: 0.25]
    #[arg(long = "g-over-omega")]
    pub g_over_omega: Option<String>,
    /// Chemical-potential grid: comma list or start:stop:count [default: U/2 ± (U/2 + 6), 121 points]
    #[arg(long = "mu-grid", allow_hyphen_values = true)]
    pub mu_grid: Option<String>,
}

impl Flags {
    /// Explicitly given flags under their config-file keys.
    pub fn to_map(&self) -> BTreeMap<&'static str, String> {
        let pairs: [(&'static str, &Option<String>); 18] = [
            ("L", &self.sites),
            ("J", &self.hopping),
            ("U", &self.interaction),
            ("mu", &self.mu),
            ("g", &self.g),
            ("omega", &self.omega),
            ("nup", &self.nup),
            ("ndown", &self.ndown),
            ("orders", &self.orders),
            ("method", &self.method),
            ("steps-per-period", &self.steps_per_period),
            ("M", &self.cutoff),
            ("out", &self.out),
            ("dipole-offset", &self.dipole_offset),
            ("t-final", &self.t_final),
            ("omegas", &self.omegas),
            ("g-over-omega", &self.g_over_omega),
            ("mu-grid", &self.mu_grid),
        ];
        pairs.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k, v))).collect()
    }
}
