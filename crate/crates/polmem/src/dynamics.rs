//! Time evolution: collective three-level dynamics under a swept control
//! field, adiabatic storage/retrieval of a cavity photon, and reduced
//! polariton-frame models (optical-pumping decay of spin waves, linear
//! nonadiabatic coupling to a discretized output continuum).

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

use ndarray::Array2;

use crate::statespace::{
    apply_atomic_flip, apply_cavity, BasisSpec, Ladder, Level, PureState, Sector,
};
use crate::{C64, Error, Result};

/// Floor below which a mixing-angle schedule is treated as singular when
/// the control field enters through cot(theta).
pub const THETA_FLOOR: f64 = 1e-3;

/// Physical couplings of the memory. Working on two-photon resonance in
/// the rotating frame: the only energy left is the excited-level decay.
#[derive(Clone, Copy, Debug)]
pub struct HamiltonianParams {
    /// Vacuum Rabi coupling of the cavity mode to the b-a transition.
    pub g: f64,
    /// Amplitude decay rate of the excited level.
    pub gamma: f64,
    pub n_atoms: usize,
}

impl HamiltonianParams {
    pub fn g_root_n(&self) -> f64 {
        self.g * (self.n_atoms as f64).sqrt()
    }

    /// Control field realizing mixing angle theta:
    /// omega = g sqrt(N) cot(theta) (the dark-resonance condition).
    pub fn omega_for(&self, theta: f64) -> f64 {
        self.g_root_n() * theta.cos() / theta.sin()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepProfile {
    Linear,
    Cosine,
    Tanh,
}

/// Mixing-angle schedule theta(t) over a fixed duration.
#[derive(Clone, Copy, Debug)]
pub struct SweepSchedule {
    pub profile: SweepProfile,
    pub theta_start: f64,
    pub theta_end: f64,
    pub duration: f64,
}

const TANH_STEEPNESS: f64 = 4.0;

impl SweepSchedule {
    /// Storage leg: photon-like (small angle) to fully atomic.
    pub fn store(theta0: f64, duration: f64, profile: SweepProfile) -> Self {
        SweepSchedule {
            profile,
            theta_start: theta0,
            theta_end: FRAC_PI_2,
            duration,
        }
    }

    /// Retrieval leg: fully atomic back to photon-like.
    pub fn retrieve(theta0: f64, duration: f64, profile: SweepProfile) -> Self {
        SweepSchedule {
            profile,
            theta_start: FRAC_PI_2,
            theta_end: theta0,
            duration,
        }
    }

    fn window(&self, t: f64) -> (f64, f64) {
        let x = (t / self.duration).clamp(0.0, 1.0);
        match self.profile {
            SweepProfile::Linear => (x, 1.0 / self.duration),
            SweepProfile::Cosine => (
                0.5 * (1.0 - (PI * x).cos()),
                0.5 * PI * (PI * x).sin() / self.duration,
            ),
            SweepProfile::Tanh => {
                let s = TANH_STEEPNESS;
                let norm = 2.0 * s.tanh();
                let u = s * (2.0 * x - 1.0);
                (
                    (u.tanh() + s.tanh()) / norm,
                    2.0 * s / (norm * u.cosh().powi(2) * self.duration),
                )
            }
        }
    }

    pub fn theta(&self, t: f64) -> f64 {
        let (w, _) = self.window(t);
        self.theta_start + (self.theta_end - self.theta_start) * w
    }

    pub fn theta_dot(&self, t: f64) -> f64 {
        let (_, wdot) = self.window(t);
        (self.theta_end - self.theta_start) * wdot
    }

    pub fn min_theta(&self) -> f64 {
        // All profiles are monotone, so the minimum sits at an endpoint.
        self.theta_start.min(self.theta_end)
    }
}

/// Symmetric three-level sector: states |k_a, k_c; p> with k_a atoms
/// excited, k_c in storage, the rest in b, and p photons. Index order is
/// lexicographic in (k_a, k_c, p).
pub struct AbcBasis {
    pub n_atoms: usize,
    pub n_max: usize,
    states: Vec<(usize, usize, usize)>,
    index: HashMap<(usize, usize, usize), usize>,
}

impl AbcBasis {
    pub fn new(n_atoms: usize, n_max: usize) -> Self {
        let mut states = Vec::new();
        for ka in 0..=n_atoms {
            for kc in 0..=(n_atoms - ka) {
                for p in 0..=n_max {
                    states.push((ka, kc, p));
                }
            }
        }
        let index = states
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, i))
            .collect();
        AbcBasis {
            n_atoms,
            n_max,
            states,
            index,
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> (usize, usize, usize) {
        self.states[i]
    }

    pub fn index_of(&self, ka: usize, kc: usize, p: usize) -> usize {
        self.index[&(ka, kc, p)]
    }

    /// Pure cavity photon, all atoms in b.
    pub fn photon_state(&self, p: usize) -> Vec<C64> {
        let mut v = vec![C64::ZERO; self.dim()];
        v[self.index_of(0, 0, p)] = C64::ONE;
        v
    }
}

/// Sparse real coupling term, sum of amp * |row><col| plus h.c.
type Couplings = Vec<(usize, usize, f64)>;

/// Hamiltonian pieces over an [`AbcBasis`]: H = g C_g + omega(t) C_omega
/// - i gamma D_a, with C_* stored as upper couplings (h.c. implicit).
pub struct AbcHamiltonian {
    pub basis: AbcBasis,
    couple_g: Couplings,
    couple_omega: Couplings,
    a_count: Vec<f64>,
}

impl AbcHamiltonian {
    pub fn new(n_atoms: usize, n_max: usize) -> Self {
        let basis = AbcBasis::new(n_atoms, n_max);
        let mut couple_g = Vec::new();
        let mut couple_omega = Vec::new();
        let mut a_count = vec![0.0; basis.dim()];
        for i in 0..basis.dim() {
            let (ka, kc, p) = basis.state(i);
            a_count[i] = ka as f64;
            let nb = n_atoms - ka - kc;
            // a * sum_j sigma_ab^j : (ka, kc, p) -> (ka+1, kc, p-1).
            if p > 0 && nb > 0 {
                let j = basis.index_of(ka + 1, kc, p - 1);
                let amp = (p as f64).sqrt() * (((ka + 1) * nb) as f64).sqrt();
                couple_g.push((j, i, amp));
            }
            // omega * sum_j sigma_ac^j : (ka, kc, p) -> (ka+1, kc-1, p).
            if kc > 0 {
                let j = basis.index_of(ka + 1, kc - 1, p);
                let amp = (((ka + 1) * kc) as f64).sqrt();
                couple_omega.push((j, i, amp));
            }
        }
        AbcHamiltonian {
            basis,
            couple_g,
            couple_omega,
            a_count,
        }
    }

    /// out = -i H psi with H = g C_g + omega C_omega - i gamma D_a.
    pub fn apply_minus_i_h(
        &self,
        psi: &[C64],
        g: f64,
        omega: f64,
        gamma: f64,
        out: &mut [C64],
    ) {
        let mi = C64::new(0.0, -1.0);
        for (i, o) in out.iter_mut().enumerate() {
            // -i * (-i gamma ka) = -gamma ka.
            *o = psi[i] * C64::new(-gamma * self.a_count[i], 0.0);
        }
        for &(r, c, amp) in &self.couple_g {
            let w = mi * C64::new(g * amp, 0.0);
            out[r] += w * psi[c];
            out[c] += w * psi[r];
        }
        for &(r, c, amp) in &self.couple_omega {
            let w = mi * C64::new(omega * amp, 0.0);
            out[r] += w * psi[c];
            out[c] += w * psi[r];
        }
    }

    pub fn a_population(&self, psi: &[C64]) -> f64 {
        psi.iter()
            .zip(&self.a_count)
            .map(|(z, &k)| k * z.norm_sqr())
            .sum()
    }
}

/// History of a propagated state.
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub a_population: Vec<f64>,
    pub state: Vec<C64>,
}

fn norm_of(psi: &[C64]) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Fixed-step RK4 propagation under the non-hermitian Hamiltonian with a
/// time-dependent control field `omega(t)`. The norm may only shrink; a
/// growth of more than 1e-3 in one step flags a too-coarse grid.
pub fn evolve_symmetric<F: Fn(f64) -> f64>(
    ham: &AbcHamiltonian,
    params: &HamiltonianParams,
    omega: F,
    psi0: &[C64],
    t_final: f64,
    dt: f64,
    record_every: usize,
) -> Result<EvolutionRecord> {
    let dim = ham.basis.dim();
    if psi0.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "state has {} amplitudes, basis dimension is {}",
            psi0.len(),
            dim
        )));
    }
    let steps = (t_final / dt).ceil().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let every = record_every.max(1);

    let mut psi = psi0.to_vec();
    let mut k1 = vec![C64::ZERO; dim];
    let mut k2 = vec![C64::ZERO; dim];
    let mut k3 = vec![C64::ZERO; dim];
    let mut k4 = vec![C64::ZERO; dim];
    let mut tmp = vec![C64::ZERO; dim];

    let mut times = vec![0.0];
    let mut norms = vec![norm_of(&psi)];
    let mut a_population = vec![ham.a_population(&psi)];

    for step in 0..steps {
        let t = step as f64 * dt;
        let prev_norm = norm_of(&psi);
        ham.apply_minus_i_h(&psi, params.g, omega(t), params.gamma, &mut k1);
        for i in 0..dim {
            tmp[i] = psi[i] + k1[i] * C64::new(0.5 * dt, 0.0);
        }
        ham.apply_minus_i_h(&tmp, params.g, omega(t + 0.5 * dt), params.gamma, &mut k2);
        for i in 0..dim {
            tmp[i] = psi[i] + k2[i] * C64::new(0.5 * dt, 0.0);
        }
        ham.apply_minus_i_h(&tmp, params.g, omega(t + 0.5 * dt), params.gamma, &mut k3);
        for i in 0..dim {
            tmp[i] = psi[i] + k3[i] * C64::new(dt, 0.0);
        }
        ham.apply_minus_i_h(&tmp, params.g, omega(t + dt), params.gamma, &mut k4);
        for i in 0..dim {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * C64::new(2.0, 0.0) + k4[i])
                * C64::new(dt / 6.0, 0.0);
        }
        let new_norm = norm_of(&psi);
        if new_norm > prev_norm + 1e-3 {
            return Err(Error::StepTooLarge(format!(
                "norm grew from {prev_norm} to {new_norm} in one step at t = {t}; reduce dt"
            )));
        }
        if (step + 1) % every == 0 || step + 1 == steps {
            times.push((step + 1) as f64 * dt);
            norms.push(new_norm);
            a_population.push(ham.a_population(&psi));
        }
    }
    Ok(EvolutionRecord {
        times,
        norms,
        a_population,
        state: psi,
    })
}

/// Reduced photon density matrix of a symmetric three-level state.
pub fn readout_photon_density(ham: &AbcHamiltonian, psi: &[C64]) -> Array2<C64> {
    let d = ham.basis.n_max + 1;
    let mut rho = Array2::zeros((d, d));
    let n = ham.basis.n_atoms;
    for ka in 0..=n {
        for kc in 0..=(n - ka) {
            for p1 in 0..d {
                let a1 = psi[ham.basis.index_of(ka, kc, p1)];
                if a1 == C64::ZERO {
                    continue;
                }
                for p2 in 0..d {
                    let a2 = psi[ham.basis.index_of(ka, kc, p2)];
                    rho[(p1, p2)] += a1 * a2.conj();
                }
            }
        }
    }
    rho
}

/// Default integrator resolution for a swept transfer: 20 points per
/// cycle of the fastest scale (g sqrt(N) or the peak control field).
pub fn transfer_dt(params: &HamiltonianParams, theta0: f64) -> f64 {
    let omega_max = params.omega_for(theta0).abs();
    let fastest = params.g_root_n().max(omega_max);
    (2.0 * PI / fastest) / 20.0
}

/// Result of a full store-and-retrieve round trip of one cavity photon.
pub struct RoundTrip {
    /// Overlap of the retrieved field density operator (normalized to
    /// unit trace; spontaneous loss is reported separately through
    /// `final_norm`) with the target single-photon state.
    pub fidelity: f64,
    /// Weight of the stored collective excitation after the storage
    /// sweep, normalized the same way.
    pub stored_atomic_weight: f64,
    /// Surviving amplitude norm after the full round trip; 1 minus this
    /// is the accumulated spontaneous-emission loss.
    pub final_norm: f64,
    pub theta0: f64,
    pub dt: f64,
}

/// Adiabatic round trip: sweep theta0 -> pi/2 (storage), then back
/// (retrieval), each over `duration`. The endpoint angle shrinks with the
/// sweep time as theta0 = 1/(g sqrt(N) duration) so that both the
/// endpoint mismatch and the nonadiabatic leakage vanish as the sweep
/// slows down.
pub fn photon_round_trip(
    params: &HamiltonianParams,
    duration: f64,
    profile: SweepProfile,
) -> Result<RoundTrip> {
    let theta0 = 1.0 / (params.g_root_n() * duration);
    let ham = AbcHamiltonian::new(params.n_atoms, 1);
    let dt = transfer_dt(params, theta0);
    let psi0 = ham.basis.photon_state(1);

    let store = SweepSchedule::store(theta0, duration, profile);
    let rec = evolve_symmetric(
        &ham,
        params,
        |t| params.omega_for(store.theta(t)),
        &psi0,
        duration,
        dt,
        usize::MAX,
    )?;
    let stored_atomic_weight =
        rec.state[ham.basis.index_of(0, 1, 0)].norm_sqr() / norm_of(&rec.state).powi(2);

    let retrieve = SweepSchedule::retrieve(theta0, duration, profile);
    let rec = evolve_symmetric(
        &ham,
        params,
        |t| params.omega_for(retrieve.theta(t)),
        &rec.state,
        duration,
        dt,
        usize::MAX,
    )?;
    let final_norm = norm_of(&rec.state);
    let fidelity = rec.state[ham.basis.index_of(0, 0, 1)].norm_sqr() / final_norm.powi(2);
    Ok(RoundTrip {
        fidelity,
        stored_atomic_weight,
        final_norm,
        theta0,
        dt,
    })
}

/// Dense Hamiltonian pieces on the full-product {a, b, c} basis, for
/// cross-checking the symmetric sector and for states that are not
/// permutation symmetric (momentum-carrying spin waves).
pub struct FullProductHamiltonian {
    pub spec: BasisSpec,
    h_g: Array2<C64>,
    h_omega: Array2<C64>,
    a_count: Vec<f64>,
}

impl FullProductHamiltonian {
    pub fn new(spec: BasisSpec) -> Result<Self> {
        if spec.sector != Sector::FullProduct || !spec.levels.contains(Level::A) {
            return Err(Error::SectorMismatch {
                required: "full-product over {a, b, c}",
                actual: spec.sector.name(),
            });
        }
        let dim = spec.dimension()?;
        let n = spec.n_atoms;
        let mut h_g = Array2::zeros((dim, dim));
        let mut h_omega = Array2::zeros((dim, dim));
        let mut a_count = vec![0.0; dim];
        for col in 0..dim {
            let mut unit = PureState::zero(spec.clone())?;
            unit.amplitudes_mut()[col] = C64::ONE;
            let (config, _) = spec.config_full(col);
            a_count[col] = config.iter().filter(|&&l| l == Level::A).count() as f64;

            // g (a sum_j sigma_ab + a^dag sum_j sigma_ba).
            let down = apply_cavity(&unit, Ladder::Annihilate).state;
            let up = apply_cavity(&unit, Ladder::Create).state;
            for j in 0..n {
                let absorb = apply_atomic_flip(&down, j, Level::B, Level::A)?;
                let emit = apply_atomic_flip(&up, j, Level::A, Level::B)?;
                for r in 0..dim {
                    h_g[(r, col)] += absorb.amplitudes()[r] + emit.amplitudes()[r];
                }
                // omega (sum_j sigma_ac + sigma_ca).
                let raise = apply_atomic_flip(&unit, j, Level::C, Level::A)?;
                let lower = apply_atomic_flip(&unit, j, Level::A, Level::C)?;
                for r in 0..dim {
                    h_omega[(r, col)] += raise.amplitudes()[r] + lower.amplitudes()[r];
                }
            }
        }
        Ok(FullProductHamiltonian {
            spec,
            h_g,
            h_omega,
            a_count,
        })
    }

    pub fn apply_minus_i_h(&self, psi: &[C64], g: f64, omega: f64, gamma: f64, out: &mut [C64]) {
        let dim = psi.len();
        let mi = C64::new(0.0, -1.0);
        for r in 0..dim {
            let mut acc = C64::ZERO;
            for c in 0..dim {
                acc += (self.h_g[(r, c)] * C64::new(g, 0.0)
                    + self.h_omega[(r, c)] * C64::new(omega, 0.0))
                    * psi[c];
            }
            out[r] = mi * acc - psi[r] * C64::new(gamma * self.a_count[r], 0.0);
        }
    }
}

/// RK4 propagation on the full-product {a, b, c} basis with a
/// time-dependent control field `omega(t)`.
pub fn evolve_full_product<F: Fn(f64) -> f64>(
    ham: &FullProductHamiltonian,
    params: &HamiltonianParams,
    omega: F,
    psi0: &PureState,
    t_final: f64,
    dt: f64,
) -> Result<(PureState, Vec<(f64, f64)>)> {
    let dim = psi0.amplitudes().len();
    let steps = (t_final / dt).ceil().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let mut psi = psi0.amplitudes().to_vec();
    let mut k1 = vec![C64::ZERO; dim];
    let mut k2 = vec![C64::ZERO; dim];
    let mut k3 = vec![C64::ZERO; dim];
    let mut k4 = vec![C64::ZERO; dim];
    let mut tmp = vec![C64::ZERO; dim];
    let mut norms = vec![(0.0, norm_of(&psi))];
    for step in 0..steps {
        let t = step as f64 * dt;
        let prev = norm_of(&psi);
        ham.apply_minus_i_h(&psi, params.g, omega(t), params.gamma, &mut k1);
        for i in 0..dim {
            tmp[i] = psi[i] + k1[i] * C64::new(0.5 * dt, 0.0);
        }
        ham.apply_minus_i_h(&tmp, params.g, omega(t + 0.5 * dt), params.gamma, &mut k2);
        for i in 0..dim {
            tmp[i] = psi[i] + k2[i] * C64::new(0.5 * dt, 0.0);
        }
        ham.apply_minus_i_h(&tmp, params.g, omega(t + 0.5 * dt), params.gamma, &mut k3);
        for i in 0..dim {
            tmp[i] = psi[i] + k3[i] * C64::new(dt, 0.0);
        }
        ham.apply_minus_i_h(&tmp, params.g, omega(t + dt), params.gamma, &mut k4);
        for i in 0..dim {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * C64::new(2.0, 0.0) + k4[i])
                * C64::new(dt / 6.0, 0.0);
        }
        let now = norm_of(&psi);
        if now > prev + 1e-3 {
            return Err(Error::StepTooLarge(format!(
                "norm grew from {prev} to {now}; reduce dt"
            )));
        }
        norms.push(((step + 1) as f64 * dt, now));
    }
    let out = PureState::new(ham.spec.clone(), psi)?;
    Ok((out, norms))
}

/// Optical-pumping amplitude decay rate of a momentum-carrying spin wave
/// held at mixing angle theta: (g^2 N / gamma) cot^2(theta).
pub fn spin_wave_pump_rate(params: &HamiltonianParams, theta: f64) -> f64 {
    let cot = theta.cos() / theta.sin();
    params.g * params.g * params.n_atoms as f64 * cot * cot / params.gamma
}

/// Polariton-frame reduced evolution under a theta schedule: the dark
/// amplitude rides along unchanged while every momentum-carrying spin
/// wave decays at the instantaneous pumping rate. Rejects schedules that
/// dip below [`THETA_FLOOR`], where the rate expression blows up.
pub fn evolve_polariton_frame(
    params: &HamiltonianParams,
    schedule: &SweepSchedule,
    dark0: C64,
    spin_waves0: &[C64],
    dt: f64,
) -> Result<(C64, Vec<C64>)> {
    if schedule.min_theta() < THETA_FLOOR {
        return Err(Error::SingularSchedule { floor: THETA_FLOOR });
    }
    let steps = (schedule.duration / dt).ceil().max(1.0) as usize;
    let dt = schedule.duration / steps as f64;
    // The rate is common to all spin waves: integrate it once.
    // Simpson-like accumulation via RK4 on log-amplitude is overkill for
    // a scalar exponential; midpoint sampling is fourth-order adequate
    // for the smooth schedules used here.
    let mut integral = 0.0;
    for step in 0..steps {
        let t0 = step as f64 * dt;
        let r0 = spin_wave_pump_rate(params, schedule.theta(t0));
        let rm = spin_wave_pump_rate(params, schedule.theta(t0 + 0.5 * dt));
        let r1 = spin_wave_pump_rate(params, schedule.theta(t0 + dt));
        integral += dt * (r0 + 4.0 * rm + r1) / 6.0;
    }
    let damp = C64::new((-integral).exp(), 0.0);
    Ok((dark0, spin_waves0.iter().map(|&a| a * damp).collect()))
}

/// Default number of output-continuum modes in the linear model.
pub const DEFAULT_BATH_MODES: usize = 32;

/// Parameters of the linear nonadiabatic model: dark and bright-partner
/// amplitudes coupled by the sweep rate, both leaking into `n_bath`
/// equally-weighted resonant output modes through the cavity component of
/// each polariton.
#[derive(Clone, Copy, Debug)]
pub struct LinearModelParams {
    pub kappa: f64,
    pub n_bath: usize,
}

impl Default for LinearModelParams {
    fn default() -> Self {
        LinearModelParams {
            kappa: 1.0,
            n_bath: DEFAULT_BATH_MODES,
        }
    }
}

pub struct LinearModelResult {
    pub dark: C64,
    pub bright: C64,
    pub bath_weight: f64,
    /// Final amplitude of every momentum-carrying spin wave. Spin waves
    /// carry no cavity component, so their coupling row is structurally
    /// zero and they pass through the integration untouched.
    pub spin_waves: Vec<C64>,
    pub norm_defect: f64,
}

/// Propagate the linear model
///   d dark/dt   = -theta_dot * bright + i kappa cos(theta) sum_k b_k,
///   d bright/dt = +theta_dot * dark   + i kappa sin(theta) sum_k b_k,
///   d b_k/dt    = i kappa cos(theta) dark + i kappa sin(theta) bright,
/// where cos(theta) and sin(theta) are the cavity components of the dark
/// and bright polaritons. The bath modes are degenerate and resonant with
/// a uniform coupling. The generator is anti-hermitian, so the total norm
/// over (dark, bright, bath) is conserved; the residual integration drift
/// is reported as `norm_defect`. Momentum-carrying spin waves appear in
/// the state vector with identically zero coupling coefficients.
pub fn nonadiabatic_linear(
    schedule: &SweepSchedule,
    params: &LinearModelParams,
    dark0: C64,
    bright0: C64,
    spin_waves0: &[C64],
    dt: f64,
) -> Result<LinearModelResult> {
    let kb = params.n_bath;
    let nw = spin_waves0.len();
    let dim = 2 + kb + nw;
    // Coupling coefficients of every non-bath row to the bath: the
    // spin-wave entries are structural zeros, never just numerically
    // small.
    let cavity_component = |t: f64, row: usize| -> f64 {
        let theta = schedule.theta(t);
        match row {
            0 => theta.cos(),
            1 => theta.sin(),
            _ => 0.0,
        }
    };
    let rhs = |t: f64, x: &[C64], out: &mut [C64]| {
        let td = schedule.theta_dot(t);
        let bath_sum: C64 = x[2..2 + kb].iter().sum();
        let kc = C64::new(0.0, params.kappa * cavity_component(t, 0));
        let ks = C64::new(0.0, params.kappa * cavity_component(t, 1));
        out[0] = -x[1] * C64::new(td, 0.0) + kc * bath_sum;
        out[1] = x[0] * C64::new(td, 0.0) + ks * bath_sum;
        let pump = kc * x[0] + ks * x[1];
        for k in 0..kb {
            out[2 + k] = pump;
        }
        for w in 0..nw {
            let coupling = C64::new(0.0, params.kappa * cavity_component(t, 2 + w));
            out[2 + kb + w] = coupling * bath_sum;
        }
    };
    let steps = (schedule.duration / dt).ceil().max(1.0) as usize;
    let dt = schedule.duration / steps as f64;
    let mut x = vec![C64::ZERO; dim];
    x[0] = dark0;
    x[1] = bright0;
    x[2 + kb..].copy_from_slice(spin_waves0);
    let norm0 = norm_of(&x[..2 + kb]);
    let mut k1 = vec![C64::ZERO; dim];
    let mut k2 = vec![C64::ZERO; dim];
    let mut k3 = vec![C64::ZERO; dim];
    let mut k4 = vec![C64::ZERO; dim];
    let mut tmp = vec![C64::ZERO; dim];
    for step in 0..steps {
        let t = step as f64 * dt;
        rhs(t, &x, &mut k1);
        for i in 0..dim {
            tmp[i] = x[i] + k1[i] * C64::new(0.5 * dt, 0.0);
        }
        rhs(t + 0.5 * dt, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = x[i] + k2[i] * C64::new(0.5 * dt, 0.0);
        }
        rhs(t + 0.5 * dt, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = x[i] + k3[i] * C64::new(dt, 0.0);
        }
        rhs(t + dt, &tmp, &mut k4);
        for i in 0..dim {
            x[i] += (k1[i] + (k2[i] + k3[i]) * C64::new(2.0, 0.0) + k4[i])
                * C64::new(dt / 6.0, 0.0);
        }
    }
    let bath_weight = x[2..2 + kb].iter().map(|z| z.norm_sqr()).sum();
    Ok(LinearModelResult {
        dark: x[0],
        bright: x[1],
        bath_weight,
        spin_waves: x[2 + kb..].to_vec(),
        norm_defect: (norm_of(&x[..2 + kb]) - norm0).abs(),
    })
}
