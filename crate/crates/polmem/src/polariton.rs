//! Polariton constructors and meters.
//!
//! The dark superposition of the cavity field and the collective storage
//! coherence, its bright partner, and the family of stored dark states
//! |D, n>, together with diagnostics probing how bosonic the collective
//! operators actually are at finite atom number.

use ndarray::Array2;

use crate::bosonic::{self, PureModeState};
use crate::statespace::{
    apply_cavity, apply_collective_flip_symmetric, binomial, BasisSpec, CollectiveFlip, Ladder,
    Level, LevelSet, PureState, Sector,
};
use crate::{C64, Error, Result};

/// Mixing frame: the dark mode is cos(theta) a - sin(theta) S with S the
/// normalized collective lowering operator, and tan(theta) = g sqrt(N) / Omega.
#[derive(Clone, Copy, Debug)]
pub struct PolaritonFrame {
    pub theta: f64,
    pub n_atoms: usize,
}

impl PolaritonFrame {
    pub fn at_angle(theta: f64, n_atoms: usize) -> Self {
        assert!(n_atoms >= 1);
        PolaritonFrame { theta, n_atoms }
    }

    /// Frame fixed by the physical couplings: vacuum Rabi coupling `g` and
    /// control Rabi frequency `omega`, tan(theta) = g sqrt(N) / omega.
    pub fn from_fields(g: f64, omega: f64, n_atoms: usize) -> Result<Self> {
        if g <= 0.0 || omega < 0.0 {
            return Err(Error::InvalidArgument(
                "couplings must satisfy g > 0 and omega >= 0".into(),
            ));
        }
        let theta = (g * (n_atoms as f64).sqrt()).atan2(omega);
        Ok(PolaritonFrame { theta, n_atoms })
    }

    pub fn cos(&self) -> f64 {
        self.theta.cos()
    }

    pub fn sin(&self) -> f64 {
        self.theta.sin()
    }

    /// Full (N+1)-mode transform, rows (dark; bright partner; spin waves).
    pub fn transform(&self) -> Array2<C64> {
        bosonic::polariton_transform(self.theta, self.n_atoms)
    }

    /// Polariton-frame creation coefficients of the single-atom raising
    /// operator sigma_cb^j (atom j counted from 0): column j+1 of the
    /// transform. At theta = pi/2 this is the exact identity
    /// sigma_cb^j = (1/sqrt(N)) (sum_l eta_jl SpinWave_l^dag - Dark^dag).
    pub fn sigma_cb_polariton_coefficients(&self, j: usize) -> Vec<C64> {
        let t = self.transform();
        (0..=self.n_atoms).map(|l| t[(l, j + 1)]).collect()
    }
}

/// Expansion coefficient of the stored dark states,
/// xi(n, k) = sqrt(n! / (k! (n-k)!)).
pub fn xi(n: usize, k: usize) -> f64 {
    binomial(n, k).sqrt()
}

/// Stored dark state with n quanta on the symmetric sector:
/// |D, n> = sum_k xi(n,k) (-sin t)^k (cos t)^{n-k} |c^k, n-k photons>.
/// Requires n <= n_max (the photon branch must be representable even when
/// its amplitude vanishes at the working angle) and n <= N.
pub fn dark_state_exact(frame: &PolaritonFrame, n_max: usize, n: usize) -> Result<PureState> {
    if n > n_max {
        return Err(Error::ExcitationOverflow { n, cap: n_max });
    }
    if n > frame.n_atoms {
        return Err(Error::ExcitationOverflow {
            n,
            cap: frame.n_atoms,
        });
    }
    let spec = BasisSpec::symmetric(frame.n_atoms, n_max);
    let mut st = PureState::zero(spec.clone())?;
    let (s, c) = frame.theta.sin_cos();
    for k in 0..=n {
        let w = xi(n, k) * (-s).powi(k as i32) * c.powi((n - k) as i32);
        let idx = spec.index_symmetric(k, n - k);
        st.amplitudes_mut()[idx] = C64::new(w, 0.0);
    }
    Ok(st)
}

/// Stored dark state in the bosonic engine's polariton frame: n quanta in
/// mode 0.
pub fn dark_state_bosonic(n_atoms: usize, e_max: usize, n: usize) -> Result<PureModeState> {
    PureModeState::fock(n_atoms + 1, e_max, 0, n)
}

/// Same state expressed over the site modes (cavity; atoms).
pub fn dark_state_site(frame: &PolaritonFrame, e_max: usize, n: usize) -> Result<PureModeState> {
    let polariton = dark_state_bosonic(frame.n_atoms, e_max, n)?;
    polariton.change_basis(&bosonic::inverse_transform(&frame.transform()))
}

fn require_symmetric(spec: &BasisSpec) -> Result<()> {
    if spec.sector != Sector::SymmetricDicke {
        return Err(Error::SectorMismatch {
            required: "symmetric-Dicke",
            actual: spec.sector.name(),
        });
    }
    Ok(())
}

/// (1/sqrt(N)) times the collective flip, on the symmetric sector.
fn collective_normalized(state: &PureState, which: CollectiveFlip) -> Result<PureState> {
    let mut out = apply_collective_flip_symmetric(state, which)?;
    let inv = 1.0 / (state.spec().n_atoms as f64).sqrt();
    out.scale(C64::new(inv, 0.0));
    Ok(out)
}

fn cavity_checked(state: &PureState, which: Ladder, weight: f64) -> Result<PureState> {
    let r = apply_cavity(state, which);
    if r.truncated && weight.abs() > 1e-300 {
        return Err(Error::CutoffExceeded(
            "cavity creation hit the photon cutoff inside a polariton operator".into(),
        ));
    }
    Ok(r.state)
}

/// Dark-mode ladder operator on the exact symmetric sector:
/// annihilate: cos t a - sin t S, create: cos t a^dag - sin t S^dag.
pub fn apply_dark(state: &PureState, frame: &PolaritonFrame, which: Ladder) -> Result<PureState> {
    require_symmetric(state.spec())?;
    let (s, c) = frame.theta.sin_cos();
    let (flip, cav) = match which {
        Ladder::Annihilate => (CollectiveFlip::Lower, Ladder::Annihilate),
        Ladder::Create => (CollectiveFlip::Raise, Ladder::Create),
    };
    let mut out = cavity_checked(state, cav, c)?;
    out.scale(C64::new(c, 0.0));
    let coll = collective_normalized(state, flip)?;
    out.add_scaled(&coll, C64::new(-s, 0.0));
    Ok(out)
}

/// Bright-partner ladder operator on the exact symmetric sector:
/// annihilate: sin t a + cos t S, create: sin t a^dag + cos t S^dag.
/// The momentum-carrying spin waves are not symmetric and are rejected by
/// the sector guard of the single-atom operators that generate them.
pub fn apply_bright(state: &PureState, frame: &PolaritonFrame, which: Ladder) -> Result<PureState> {
    require_symmetric(state.spec())?;
    let (s, c) = frame.theta.sin_cos();
    let (flip, cav) = match which {
        Ladder::Annihilate => (CollectiveFlip::Lower, Ladder::Annihilate),
        Ladder::Create => (CollectiveFlip::Raise, Ladder::Create),
    };
    let mut out = cavity_checked(state, cav, s)?;
    out.scale(C64::new(s, 0.0));
    let coll = collective_normalized(state, flip)?;
    out.add_scaled(&coll, C64::new(c, 0.0));
    Ok(out)
}

/// Expectation of the dark-mode commutator defect,
/// <[Dark, Dark^dag]> - 1 = |Dark^dag psi|^2 - |Dark psi|^2 - 1.
/// Exactly zero for a true boson; on the spin system it is depressed by
/// the stored excitation density. The state needs one photon of headroom
/// below the cutoff whenever cos(theta) != 0.
pub fn commutator_defect(state: &PureState, frame: &PolaritonFrame) -> Result<f64> {
    let up = apply_dark(state, frame, Ladder::Create)?;
    let down = apply_dark(state, frame, Ladder::Annihilate)?;
    let n2 = state.norm().powi(2);
    if n2 < 1e-300 {
        return Err(Error::ZeroProbability);
    }
    Ok((up.norm().powi(2) - down.norm().powi(2)) / n2 - 1.0)
}

/// Product form of a stored weak coherent state at theta = pi/2:
/// every atom in (|b> - (alpha/sqrt(N)) |c>)/sqrt(1 + alpha^2/N),
/// built on the full-product {b, c} basis with no photons.
pub fn coherent_spin_product(n_atoms: usize, alpha: f64) -> Result<PureState> {
    let spec = BasisSpec::full_product(n_atoms, LevelSet::bc(), 0);
    let dim = spec.dimension()?;
    let w = -alpha / (n_atoms as f64).sqrt();
    let norm1 = (1.0 + w * w).sqrt();
    let mut st = PureState::zero(spec.clone())?;
    for idx in 0..dim {
        let (config, _) = spec.config_full(idx);
        let k = config.iter().filter(|&&l| l == Level::C).count();
        st.amplitudes_mut()[idx] = C64::new(w.powi(k as i32) / norm1.powi(n_atoms as i32), 0.0);
    }
    Ok(st)
}

/// The same state as a symmetric-sector series:
/// sum_k sqrt(C(N,k)) (-alpha/sqrt(N))^k |c^k>, normalized. Agrees with
/// the product form because the commuting, nilpotent single-atom raising
/// operators make the exponential series factorize exactly.
pub fn coherent_spin_series(n_atoms: usize, alpha: f64) -> Result<PureState> {
    let spec = BasisSpec::symmetric(n_atoms, 0);
    let mut st = PureState::zero(spec.clone())?;
    let w = -alpha / (n_atoms as f64).sqrt();
    for k in 0..=n_atoms {
        let idx = spec.index_symmetric(k, 0);
        st.amplitudes_mut()[idx] = C64::new(binomial(n_atoms, k).sqrt() * w.powi(k as i32), 0.0);
    }
    st.normalize()?;
    Ok(st)
}
