//! Per-experiment TOML schemas. Unknown keys are rejected everywhere;
//! optional fields have their resolved defaults echoed back into the
//! JSON summary, so no consumed parameter stays hidden.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))
}

fn default_engine_bosonic() -> String {
    "bosonic".to_string()
}

fn default_engine_exact() -> String {
    "exact".to_string()
}

fn default_profile() -> String {
    "cosine".to_string()
}

fn default_state_fock() -> String {
    "fock".to_string()
}

fn default_tail_tol() -> f64 {
    1e-4
}

fn default_bath_modes() -> usize {
    crate::dynamics::DEFAULT_BATH_MODES
}

/// Single-event fidelity scans (spinflip-scan, symflip-scan,
/// phaseflip-scan, and loss-scan with Fock states).
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// Atom numbers; sorted before running.
    pub n_list: Vec<usize>,
    /// Stored excitation numbers.
    pub quanta: Vec<usize>,
    /// "exact" or "bosonic"; flips default to bosonic, phase flip and
    /// loss only support exact.
    #[serde(default = "default_engine_bosonic")]
    pub engine: String,
}

/// Loss scan over Fock or weak coherent storage.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LossScanConfig {
    pub n_list: Vec<usize>,
    /// "fock" or "coherent".
    #[serde(default = "default_state_fock")]
    pub state: String,
    /// Excitation numbers for Fock storage.
    #[serde(default)]
    pub quanta: Vec<usize>,
    /// Amplitudes for coherent storage.
    #[serde(default)]
    pub alpha_list: Vec<f64>,
    #[serde(default = "default_engine_exact")]
    pub engine: String,
}

/// Monte-Carlo motion dephasing.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MotionConfig {
    pub n_atoms: usize,
    pub n_quanta: usize,
    pub diffusion: f64,
    pub t_final: f64,
    pub dt: f64,
    pub n_trajectories: usize,
    /// Master seed; may instead come from --seed. Missing both is a
    /// config error (reproducibility contract).
    pub seed: Option<u64>,
    /// Time window for the exponential rate fit; defaults to the full
    /// curve.
    pub fit_window: Option<(f64, f64)>,
}

/// Full spin-flip Liouvillian against the reduced pumping chain.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LiouvillianConfig {
    pub n_atoms: usize,
    pub gamma: f64,
    pub t_final: f64,
    pub snapshots: usize,
    pub dt: f64,
}

/// Thermal-equilibrium preparation diagnostics.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalConfig {
    pub n_atoms: usize,
    pub theta: f64,
    pub beta_omega: f64,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
}

/// Adiabatic store-and-retrieve round trips over a sweep-time grid.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TransferConfig {
    pub n_atoms: usize,
    pub g: f64,
    pub gamma: f64,
    /// Dimensionless sweep times g sqrt(N) T; sorted before running.
    pub gn_t_list: Vec<f64>,
    #[serde(default = "default_profile")]
    pub profile: String,
}

/// Linear nonadiabatic model: structural decoupling of spin waves.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IsolationConfig {
    pub kappa: f64,
    #[serde(default = "default_bath_modes")]
    pub n_bath: usize,
    pub theta_end: f64,
    pub duration: f64,
    #[serde(default = "default_profile")]
    pub profile: String,
    pub dt: f64,
    /// How many momentum-carrying spin waves to seed, one at a time.
    pub n_spin_waves: usize,
    /// Amplitude seeded into the bright partner for the contrast check.
    pub bright_seed: f64,
}

/// The formula-discrepancy ledger takes no parameters.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerConfig {}

pub fn parse_profile(name: &str) -> Result<crate::dynamics::SweepProfile> {
    use crate::dynamics::SweepProfile;
    match name {
        "linear" => Ok(SweepProfile::Linear),
        "cosine" => Ok(SweepProfile::Cosine),
        "tanh" => Ok(SweepProfile::Tanh),
        other => Err(Error::ConfigInvalid(format!(
            "unknown sweep profile '{other}' (expected linear, cosine, or tanh)"
        ))),
    }
}
