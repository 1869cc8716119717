//! Single-atom decoherence channels.
//!
//! Discrete error events (flips, phase kicks, loss, auxiliary-level
//! marking) on the exact spin engine, the continuous spin-flip master
//! equation and its reduced dark-mode pumping chain, Monte-Carlo atomic
//! motion dephasing, and thermal-occupation preparation diagnostics.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::polariton::PolaritonFrame;
use crate::statespace::{
    apply_atomic_flip, apply_phase_z, DensityOperator, Level, PureState,
};
use crate::{C64, Error, Result};

pub use crate::statespace::{fidelity_after_atom_loss, partial_trace_atom, partial_trace_atom_pure};

/// Discrete single-atom error events. All act on the full-product spin
/// engine; `j` selects which atom is hit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventFlavor {
    /// Raising flip sigma_cb (populates the storage level).
    FlipCb,
    /// Lowering flip sigma_bc.
    FlipBc,
    /// Hermitian flip sigma_cb + sigma_bc.
    SymmetricFlip,
    /// Phase flip: -1 on the storage level (unitary).
    PhaseFlip,
    /// Swap of |b> and |d| at the hit atom (unitary). Marks which atom
    /// was touched in a distinguishable auxiliary level, the naive
    /// scaling scenario.
    AuxFlipBd,
}

/// Outcome of a discrete event: the normalized post-event state and the
/// probability weight |K psi|^2 of the event branch (1 for unitaries).
pub struct EventOutcome {
    pub state: PureState,
    pub weight: f64,
}

/// Event operator K applied without normalization.
pub fn apply_event_raw(state: &PureState, flavor: EventFlavor, j: usize) -> Result<PureState> {
    Ok(match flavor {
        EventFlavor::FlipCb => apply_atomic_flip(state, j, Level::B, Level::C)?,
        EventFlavor::FlipBc => apply_atomic_flip(state, j, Level::C, Level::B)?,
        EventFlavor::SymmetricFlip => {
            let mut up = apply_atomic_flip(state, j, Level::B, Level::C)?;
            let down = apply_atomic_flip(state, j, Level::C, Level::B)?;
            up.add_scaled(&down, C64::ONE);
            up
        }
        EventFlavor::PhaseFlip => apply_phase_z(state, j)?,
        EventFlavor::AuxFlipBd => {
            // b <-> d swap, identity on every other level. The projector
            // terms are realized as same-level "flips".
            let mut out = apply_atomic_flip(state, j, Level::B, Level::D)?;
            out.add_scaled(&apply_atomic_flip(state, j, Level::D, Level::B)?, C64::ONE);
            out.add_scaled(&apply_atomic_flip(state, j, Level::C, Level::C)?, C64::ONE);
            out
        }
    })
}

pub fn apply_event_pure(state: &PureState, flavor: EventFlavor, j: usize) -> Result<EventOutcome> {
    let raw = apply_event_raw(state, flavor, j)?;
    let weight = raw.norm().powi(2);
    if weight < 1e-300 {
        return Err(Error::ZeroProbability);
    }
    let state = raw.normalized()?;
    Ok(EventOutcome { state, weight })
}

/// Event channel K W K^dag / Tr on a density operator. Returns the
/// normalized post-event operator and the branch weight Tr{K W K^dag}.
pub fn apply_event_density(
    rho: &DensityOperator,
    flavor: EventFlavor,
    j: usize,
) -> Result<(DensityOperator, f64)> {
    let spec = rho.spec().clone();
    let dim = spec.dimension()?;
    let w = rho.matrix();

    // K W: apply K to every column; then K (K W)^dag, transposed back,
    // gives K W K^dag because W is hermitian.
    let apply_to_columns = |m: &Array2<C64>| -> Result<Array2<C64>> {
        let mut out = Array2::zeros((dim, dim));
        for c in 0..dim {
            let col = PureState::new(spec.clone(), m.column(c).to_vec())?;
            let hit = apply_event_raw(&col, flavor, j)?;
            for (r, amp) in hit.amplitudes().iter().enumerate() {
                out[(r, c)] = *amp;
            }
        }
        Ok(out)
    };
    let kw = apply_to_columns(w)?;
    let kw_dag = kw.t().mapv(|z| z.conj());
    let kwk = apply_to_columns(&kw_dag)?.t().mapv(|z| z.conj());

    let weight: f64 = (0..dim).map(|i| kwk[(i, i)].re).sum();
    if weight < 1e-300 {
        return Err(Error::ZeroProbability);
    }
    let normalized = kwk.mapv(|z| z / weight);
    Ok((DensityOperator::new(spec, normalized)?, weight))
}

/// A decoherence event with either a fixed or a uniformly random target
/// atom.
#[derive(Clone, Copy, Debug)]
pub struct ChannelSpec {
    pub flavor: EventFlavor,
    /// Fixed target atom, or `None` to draw uniformly per event.
    pub target: Option<usize>,
}

impl ChannelSpec {
    pub fn target_for<R: Rng>(&self, n_atoms: usize, rng: &mut R) -> usize {
        match self.target {
            Some(j) => j,
            None => rng.random_range(0..n_atoms),
        }
    }
}

fn rk4_matrix<F: Fn(&Array2<C64>) -> Array2<C64>>(rho: &mut Array2<C64>, dt: f64, rhs: F) {
    let k1 = rhs(rho);
    let k2 = rhs(&(&*rho + &(&k1 * C64::new(dt / 2.0, 0.0))));
    let k3 = rhs(&(&*rho + &(&k2 * C64::new(dt / 2.0, 0.0))));
    let k4 = rhs(&(&*rho + &(&k3 * C64::new(dt, 0.0))));
    *rho = &*rho
        + &((k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4)
            * C64::new(dt / 6.0, 0.0));
}

/// Full incoherent spin-flip master equation on the product basis:
/// each atom is pumped b -> c at rate `gamma` with the standard
/// dissipator. Trace preservation is monitored; a drift beyond 1e-8
/// aborts with [`Error::StepTooLarge`].
pub fn evolve_spin_flip(
    rho0: &DensityOperator,
    gamma: f64,
    t_final: f64,
    dt: f64,
) -> Result<DensityOperator> {
    let spec = rho0.spec().clone();
    if spec.sector != crate::statespace::Sector::FullProduct {
        return Err(Error::SectorMismatch {
            required: "full-product",
            actual: spec.sector.name(),
        });
    }
    let b_digit = spec
        .levels
        .index_of(Level::B)
        .ok_or_else(|| Error::InvalidArgument("basis has no level b".into()))?;
    let c_digit = spec
        .levels
        .index_of(Level::C)
        .ok_or_else(|| Error::InvalidArgument("basis has no level c".into()))?;
    let dim = spec.dimension()?;
    let n = spec.n_atoms;
    let base = spec.levels.len();

    // Precompute per-index: number of atoms in b, and flip targets.
    let strides: Vec<usize> = (0..n).map(|j| spec.atom_stride(j)).collect();
    let count_b: Vec<usize> = (0..dim)
        .map(|idx| {
            (0..n)
                .filter(|&j| (idx / strides[j]) % base == b_digit)
                .count()
        })
        .collect();

    let rhs = |rho: &Array2<C64>| -> Array2<C64> {
        let mut out = Array2::zeros((dim, dim));
        for r in 0..dim {
            for c in 0..dim {
                let v = rho[(r, c)];
                if v == C64::ZERO {
                    continue;
                }
                // Anticommutator: -gamma/2 (n_b(r) + n_b(c)) rho.
                out[(r, c)] -=
                    v * C64::new(0.5 * gamma * (count_b[r] + count_b[c]) as f64, 0.0);
                // Jump terms J_j rho J_j^dag for atoms in b on both sides.
                for j in 0..n {
                    let s = strides[j];
                    if (r / s) % base == b_digit && (c / s) % base == b_digit {
                        let rr = r + s * (c_digit - b_digit);
                        let cc = c + s * (c_digit - b_digit);
                        out[(rr, cc)] += v * C64::new(gamma, 0.0);
                    }
                }
            }
        }
        out
    };

    let steps = (t_final / dt).ceil().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let mut rho = rho0.matrix().clone();
    let tr0 = rho0.trace().re;
    for _ in 0..steps {
        rk4_matrix(&mut rho, dt, rhs);
        let tr: C64 = (0..dim).map(|i| rho[(i, i)]).sum();
        if (tr.re - tr0).abs() > 1e-8 {
            return Err(Error::StepTooLarge(format!(
                "trace drifted by {:.3e} during spin-flip evolution; reduce dt",
                (tr.re - tr0).abs()
            )));
        }
    }
    DensityOperator::new(spec, rho)
}

/// Reduced dark-mode pumping chain induced by incoherent single-atom
/// flips after tracing the bright polaritons:
/// dp_n/dt = gamma [ n p_{n-1} - (n+1) p_n ].
/// The per-quantum rate equals the single-atom rate, independent of the
/// atom number. `p0` is consumed as the initial occupation distribution;
/// probability pushed past its top entry leaves the truncation window,
/// and more than 1e-6 of such leakage aborts the evolution.
pub fn evolve_reduced_pump_chain(
    p0: &[f64],
    gamma: f64,
    t_final: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    let d = p0.len();
    let rhs = |p: &Vec<f64>| -> Vec<f64> {
        let mut out = vec![0.0; d];
        for n in 0..d {
            out[n] -= gamma * (n + 1) as f64 * p[n];
            if n > 0 {
                out[n] += gamma * n as f64 * p[n - 1];
            }
        }
        out
    };
    let steps = (t_final / dt).ceil().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let mut p = p0.to_vec();
    for _ in 0..steps {
        let k1 = rhs(&p);
        let mut p2 = p.clone();
        for i in 0..d {
            p2[i] += 0.5 * dt * k1[i];
        }
        let k2 = rhs(&p2);
        let mut p3 = p.clone();
        for i in 0..d {
            p3[i] += 0.5 * dt * k2[i];
        }
        let k3 = rhs(&p3);
        let mut p4 = p.clone();
        for i in 0..d {
            p4[i] += dt * k3[i];
        }
        let k4 = rhs(&p4);
        for i in 0..d {
            p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    let total0: f64 = p0.iter().sum();
    let leaked = total0 - p.iter().sum::<f64>();
    if leaked > 1e-6 {
        return Err(Error::CutoffExceeded(format!(
            "pump chain leaked {leaked:.3e} probability past its top level; \
             enlarge the chain"
        )));
    }
    Ok(p)
}

const SPLITMIX_GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(SPLITMIX_GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent per-trajectory seed derived from a master seed; index k
/// always maps to the same stream regardless of scheduling.
pub fn trajectory_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ index.wrapping_mul(SPLITMIX_GOLDEN))
}

/// Minimum Monte-Carlo sample size for meaningful error bars.
pub const MIN_TRAJECTORIES: usize = 100;

#[derive(Clone, Copy, Debug)]
pub struct MotionParams {
    pub n_atoms: usize,
    /// Stored excitation number n; the instantaneous fidelity is
    /// |(1/N) sum_j exp(i phi_j)|^{2n}.
    pub n_quanta: usize,
    /// Phase diffusion constant: Var[phi_j(t)] = D t per atom.
    pub diffusion: f64,
    pub t_final: f64,
    pub dt: f64,
    pub n_trajectories: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct MotionCurve {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Monte-Carlo dephasing by independent atomic phase diffusion.
/// Euler-Maruyama phase updates; requires D dt <= 0.01 for an acceptable
/// discretization bias. Error bars are standard errors of the mean.
pub fn motion_sample_fidelity(params: &MotionParams) -> Result<MotionCurve> {
    if params.diffusion < 0.0 || params.t_final <= 0.0 || params.dt <= 0.0 {
        return Err(Error::InvalidArgument(
            "motion needs D >= 0, t_final > 0, dt > 0".into(),
        ));
    }
    if params.diffusion * params.dt > 0.01 {
        return Err(Error::StepTooLarge(format!(
            "D dt = {:.3e} exceeds 0.01; shrink the time step",
            params.diffusion * params.dt
        )));
    }
    if params.n_trajectories < MIN_TRAJECTORIES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_TRAJECTORIES} trajectories, got {}",
            params.n_trajectories
        )));
    }
    let steps = (params.t_final / params.dt).ceil().max(1.0) as usize;
    let dt = params.t_final / steps as f64;
    let n = params.n_atoms as f64;
    let sigma = (params.diffusion * dt).sqrt();
    let power = params.n_quanta as i32;

    let per_traj: Vec<Vec<f64>> = (0..params.n_trajectories)
        .into_par_iter()
        .map(|traj| {
            let mut rng =
                ChaCha12Rng::seed_from_u64(trajectory_seed(params.seed, traj as u64));
            let mut phases = vec![0.0f64; params.n_atoms];
            let mut curve = Vec::with_capacity(steps + 1);
            curve.push(1.0);
            for _ in 0..steps {
                let mut re = 0.0;
                let mut im = 0.0;
                for phi in &mut phases {
                    let xi: f64 = rng.sample(StandardNormal);
                    *phi += sigma * xi;
                    re += phi.cos();
                    im += phi.sin();
                }
                let contrast = ((re / n).powi(2) + (im / n).powi(2)).sqrt();
                curve.push(contrast.powi(2 * power));
            }
            curve
        })
        .collect();

    let m = params.n_trajectories as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut mean = vec![0.0; steps + 1];
    let mut var = vec![0.0; steps + 1];
    for k in 0..=steps {
        times.push(k as f64 * dt);
        for c in &per_traj {
            mean[k] += c[k];
        }
        mean[k] /= m;
        for c in &per_traj {
            var[k] += (c[k] - mean[k]).powi(2);
        }
    }
    let stderr = var
        .iter()
        .map(|&v| if m > 1.0 { (v / (m * (m - 1.0))).sqrt() } else { 0.0 })
        .collect();
    Ok(MotionCurve {
        times,
        mean,
        stderr,
    })
}

/// Asymptotic fidelity floor of the motion channel: fully randomized
/// phases retain 1/N of a one-quantum state and (2N - 1)/N^3 of a
/// two-quantum state.
pub fn motion_fidelity_floor(n_atoms: usize, n_quanta: usize) -> f64 {
    let n = n_atoms as f64;
    match n_quanta {
        0 => 1.0,
        1 => 1.0 / n,
        2 => (2.0 * n - 1.0) / n.powi(3),
        _ => f64::NAN,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ThermalParams {
    pub n_atoms: usize,
    pub theta: f64,
    /// beta hbar omega_c of the cavity-frequency reservoir; all N + 1
    /// polariton modes thermalize at this ratio.
    pub beta_omega: f64,
    /// Tail-probability tolerance beyond which preparation fails.
    pub tail_tol: f64,
}

#[derive(Clone, Debug)]
pub struct ThermalReport {
    /// Closed-form Bose occupation exp(-bw)/(1 - exp(-bw)).
    pub nbar_exact: f64,
    /// Dark-mode occupation from the truncated geometric marginal.
    pub dark_occupation: f64,
    /// Mean storage-level population density (1/N) sum_j <sigma_cc^j>,
    /// assembled independently from the mode transform columns.
    pub atomic_density: f64,
    /// Per-mode occupation cutoff actually used.
    pub cutoff: usize,
    /// Truncated tail probability per mode.
    pub tail: f64,
}

const THERMAL_CUTOFF_CAP: usize = 512;
const THERMAL_TAIL_TARGET: f64 = 1e-12;

/// Thermal preparation in the polariton frame: every mode carries an
/// independent geometric (Bose) occupation distribution, truncated at an
/// adaptive cutoff. Errors with [`Error::CutoffWarning`] when even the
/// capped cutoff leaves more than `tail_tol` probability outside.
pub fn thermal_prepare(params: &ThermalParams) -> Result<ThermalReport> {
    if params.beta_omega <= 0.0 {
        return Err(Error::ConfigInvalid(
            "thermal preparation needs beta * omega > 0".into(),
        ));
    }
    let q = (-params.beta_omega).exp();
    let nbar_exact = q / (1.0 - q);

    // Adaptive cutoff: tail of the geometric distribution is q^(K+1).
    let mut cutoff = 1usize;
    while q.powi(cutoff as i32 + 1) > THERMAL_TAIL_TARGET && cutoff < THERMAL_CUTOFF_CAP {
        cutoff += 1;
    }
    let tail = q.powi(cutoff as i32 + 1);
    if tail > params.tail_tol {
        return Err(Error::CutoffWarning {
            tail,
            tol: params.tail_tol,
        });
    }

    // Truncated, renormalized per-mode mean occupation.
    let mut z = 0.0;
    let mut first = 0.0;
    for k in 0..=cutoff {
        let p = q.powi(k as i32);
        z += p;
        first += k as f64 * p;
    }
    let mode_mean = first / z;

    // Atomic excitation density through the mode transform:
    // <sigma_cc^j> = sum_l |T_{l j}|^2 <n_l>.
    let frame = PolaritonFrame::at_angle(params.theta, params.n_atoms);
    let t = frame.transform();
    let mut density = 0.0;
    for j in 1..=params.n_atoms {
        for l in 0..=params.n_atoms {
            density += t[(l, j)].norm_sqr() * mode_mean;
        }
    }
    density /= params.n_atoms as f64;

    Ok(ThermalReport {
        nbar_exact,
        dark_occupation: mode_mean,
        atomic_density: density,
        cutoff,
        tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::{embed_symmetric, BasisSpec, LevelSet, PureState};
    use std::f64::consts::FRAC_PI_2;

    fn stored_fock(n_atoms: usize, n: usize, levels: LevelSet) -> PureState {
        let sym = BasisSpec::symmetric(n_atoms, 0);
        let full = BasisSpec::full_product(n_atoms, levels, 0);
        let s = PureState::basis_state_symmetric(sym, n, 0).unwrap();
        embed_symmetric(&s, &full).unwrap()
    }

    #[test]
    fn phase_flip_overlap() {
        // <psi| Z_j |psi> = 1 - 2n/N on a stored n-quantum state.
        for &(n_atoms, n) in &[(4usize, 1usize), (8, 2), (6, 3)] {
            let psi = stored_fock(n_atoms, n, LevelSet::bc());
            let out = apply_event_pure(&psi, EventFlavor::PhaseFlip, 0).unwrap();
            assert!((out.weight - 1.0).abs() < 1e-13);
            let ov = psi.inner(&out.state).unwrap();
            let want = 1.0 - 2.0 * n as f64 / n_atoms as f64;
            assert!((ov.re - want).abs() < 1e-13, "N={n_atoms} n={n}");
            assert!(ov.im.abs() < 1e-14);
        }
    }

    #[test]
    fn aux_swap_marks_the_atom() {
        // b <-> d swap on a one-quantum stored state: overlap with the
        // original collapses to 1/N because every branch where the hit
        // atom sat in b is now flagged.
        for &n_atoms in &[2usize, 4, 7] {
            let psi = stored_fock(n_atoms, 1, LevelSet::bcd());
            let out = apply_event_pure(&psi, EventFlavor::AuxFlipBd, 0).unwrap();
            assert!((out.weight - 1.0).abs() < 1e-13);
            let ov = psi.inner(&out.state).unwrap();
            assert!((ov.re - 1.0 / n_atoms as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn flip_cb_weight() {
        // P(flip possible) = fraction of branches with the atom in b.
        let psi = stored_fock(5, 2, LevelSet::bc());
        let out = apply_event_pure(&psi, EventFlavor::FlipCb, 3).unwrap();
        assert!((out.weight - 3.0 / 5.0).abs() < 1e-13);
        assert!((out.state.norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn full_flip_master_equation_single_atom() {
        // N = 1: p_c(t) = 1 - exp(-gamma t).
        let spec = BasisSpec::full_product(1, LevelSet::bc(), 0);
        let psi = PureState::ground(spec.clone(), 0).unwrap();
        let rho0 = DensityOperator::from_pure(&psi);
        let gamma = 0.7;
        let t = 1.3;
        let rho = evolve_spin_flip(&rho0, gamma, t, 1e-3).unwrap();
        let want = 1.0 - (-gamma * t).exp();
        assert!((rho.matrix()[(1, 1)].re - want).abs() < 1e-9);
        assert!((rho.trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reduced_chain_vacuum_decay() {
        // From the dark vacuum, p_0(t) = exp(-gamma t).
        let gamma = 0.5;
        let t = 2.0;
        // Pumping feeds a geometric tail upward, so the chain is padded
        // far past the occupied levels to keep truncation losses tiny.
        let mut p0 = vec![0.0; 40];
        p0[0] = 1.0;
        let p = evolve_reduced_pump_chain(&p0, gamma, t, 1e-3).unwrap();
        assert!((p[0] - (-gamma * t).exp()).abs() < 1e-9);
        let total: f64 = p.iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reduced_chain_flags_truncation_leakage() {
        // A two-level chain run long enough loses probability past the
        // top and must refuse to return a silently truncated answer.
        let mut p0 = vec![0.0; 2];
        p0[0] = 1.0;
        assert!(matches!(
            evolve_reduced_pump_chain(&p0, 1.0, 3.0, 1e-3),
            Err(Error::CutoffExceeded(_))
        ));
    }

    #[test]
    fn zero_storage_sector_decays_superradiantly() {
        // From |b...b> the probability of remaining flip-free is
        // exp(-N gamma t): every atom is an independent decay channel.
        let n = 3usize;
        let spec = BasisSpec::full_product(n, LevelSet::bc(), 0);
        let psi = PureState::ground(spec.clone(), 0).unwrap();
        let rho0 = DensityOperator::from_pure(&psi);
        let gamma = 0.4;
        let t = 0.9;
        let rho = evolve_spin_flip(&rho0, gamma, t, 1e-3).unwrap();
        let survive = rho.matrix()[(0, 0)].re;
        let want = (-(n as f64) * gamma * t).exp();
        assert!((survive - want).abs() < 1e-9, "got {survive}, want {want}");
    }

    #[test]
    fn density_events_preserve_positivity_and_trace() {
        // Mixed input, every flavor: the channel output stays a valid
        // density operator (eigenvalue floor -1e-10) and the pure and
        // density routes agree on pure input.
        use crate::linalg::min_eigenvalue;
        let spec = BasisSpec::full_product(3, LevelSet::bcd(), 0);
        let a = stored_fock(3, 1, LevelSet::bcd());
        let b = stored_fock(3, 2, LevelSet::bcd());
        let mut mixed = DensityOperator::from_pure(&a).matrix().clone();
        mixed = mixed.mapv(|z| z * C64::new(0.6, 0.0))
            + DensityOperator::from_pure(&b)
                .matrix()
                .mapv(|z| z * C64::new(0.4, 0.0));
        let rho = DensityOperator::new(spec, mixed).unwrap();
        for flavor in [
            EventFlavor::FlipCb,
            EventFlavor::FlipBc,
            EventFlavor::SymmetricFlip,
            EventFlavor::PhaseFlip,
            EventFlavor::AuxFlipBd,
        ] {
            let (out, weight) = apply_event_density(&rho, flavor, 1).unwrap();
            assert!(weight > 0.0);
            assert!((out.trace().re - 1.0).abs() < 1e-10, "{flavor:?}");
            assert!(out.hermiticity_defect() < 1e-12);
            assert!(min_eigenvalue(out.matrix()) > -1e-10, "{flavor:?}");

            let pure = apply_event_pure(&a, flavor, 1).unwrap();
            let (dens, dw) =
                apply_event_density(&DensityOperator::from_pure(&a), flavor, 1).unwrap();
            assert!((pure.weight - dw).abs() < 1e-12);
            let expect = dens.expectation(&pure.state).unwrap();
            assert!((expect.re - 1.0).abs() < 1e-10, "{flavor:?}");
        }
    }

    #[test]
    fn channel_spec_targets() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let fixed = ChannelSpec {
            flavor: EventFlavor::FlipCb,
            target: Some(2),
        };
        assert_eq!(fixed.target_for(6, &mut rng), 2);
        let random = ChannelSpec {
            flavor: EventFlavor::FlipCb,
            target: None,
        };
        let mut seen = [false; 4];
        for _ in 0..200 {
            seen[random.target_for(4, &mut rng)] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn motion_short_time_and_floor() {
        // n = 1: f(t) = (1 + (N-1) exp(-D t)) / N.
        let params = MotionParams {
            n_atoms: 8,
            n_quanta: 1,
            diffusion: 1.0,
            t_final: 1.0,
            dt: 0.005,
            n_trajectories: 4000,
            seed: 7,
        };
        let curve = motion_sample_fidelity(&params).unwrap();
        let last = *curve.times.last().unwrap();
        let want = (1.0 + 7.0 * (-last).exp()) / 8.0;
        let got = *curve.mean.last().unwrap();
        let err = *curve.stderr.last().unwrap();
        assert!(
            (got - want).abs() < 5.0 * err.max(2e-3),
            "got {got}, want {want}, stderr {err}"
        );
        assert!((motion_fidelity_floor(8, 1) - 0.125).abs() < 1e-15);
        assert!((motion_fidelity_floor(8, 2) - 15.0 / 512.0).abs() < 1e-15);
    }

    #[test]
    fn motion_is_deterministic_given_seed() {
        let params = MotionParams {
            n_atoms: 4,
            n_quanta: 2,
            diffusion: 0.5,
            t_final: 0.5,
            dt: 0.01,
            n_trajectories: 128,
            seed: 123,
        };
        let a = motion_sample_fidelity(&params).unwrap();
        let b = motion_sample_fidelity(&params).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.stderr, b.stderr);
    }

    #[test]
    fn motion_step_guard() {
        let params = MotionParams {
            n_atoms: 2,
            n_quanta: 1,
            diffusion: 10.0,
            t_final: 1.0,
            dt: 0.01,
            n_trajectories: 100,
            seed: 0,
        };
        assert!(matches!(
            motion_sample_fidelity(&params),
            Err(Error::StepTooLarge(_))
        ));
    }

    #[test]
    fn thermal_occupation_matches_bose_formula() {
        let params = ThermalParams {
            n_atoms: 6,
            theta: 0.9,
            beta_omega: std::f64::consts::LN_2,
            tail_tol: 1e-4,
        };
        let r = thermal_prepare(&params).unwrap();
        // exp(-bw) = 1/2 -> nbar = 1.
        assert!((r.nbar_exact - 1.0).abs() < 1e-14);
        assert!((r.dark_occupation - 1.0).abs() < 1e-9);
        // Columns of the unitary transform are normalized, so the atomic
        // density equals the per-mode occupation.
        assert!((r.atomic_density - r.dark_occupation).abs() < 1e-9);
        assert!(r.tail < 1e-12);
    }

    #[test]
    fn thermal_rejects_nonpositive_temperature_ratio() {
        let params = ThermalParams {
            n_atoms: 2,
            theta: FRAC_PI_2,
            beta_omega: 0.0,
            tail_tol: 1e-4,
        };
        assert!(matches!(
            thermal_prepare(&params),
            Err(Error::ConfigInvalid(_))
        ));
    }

    #[test]
    fn trajectory_seeds_differ() {
        let a = trajectory_seed(42, 0);
        let b = trajectory_seed(42, 1);
        let c = trajectory_seed(43, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }
}
