//! C ABI over the polmem core: opaque state handles, integer status
//! codes, and scalar fidelity evaluators.
//!
//! The contract mirrors `include/polmem.h`, which is maintained by hand;
//! the `header_lists_every_symbol` test keeps the two in sync. All
//! functions are null-safe: a null required pointer yields
//! `PM_STATUS_NULL_POINTER` and leaves outputs untouched.

use std::os::raw::c_int;

use polmem::analysis::{
    atom_loss_fock_fidelity, coherent_loss_fidelity, fidelity_pure, phase_flip_fidelity,
    spin_flip_fidelity, stored_fock_state, symmetric_flip_fidelity,
};
use polmem::channels::{
    apply_event_pure, motion_sample_fidelity, thermal_prepare, EventFlavor, MotionParams,
    ThermalParams,
};
use polmem::statespace::PureState;
use polmem::Error;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ResourceExhausted = 3,
    ZeroProbability = 4,
    Internal = 5,
}

fn status_of(err: &Error) -> PmStatus {
    match err {
        Error::DimensionOverflow { .. }
        | Error::ExcitationOverflow { .. }
        | Error::CutoffExceeded(_)
        | Error::CutoffLoss(_)
        | Error::CutoffWarning { .. } => PmStatus::ResourceExhausted,
        Error::ZeroProbability => PmStatus::ZeroProbability,
        Error::InvalidArgument(_)
        | Error::ConfigInvalid(_)
        | Error::UnknownScenario(_)
        | Error::SeedMissing
        | Error::SectorMismatch { .. }
        | Error::StepTooLarge(_)
        | Error::SingularSchedule { .. } => PmStatus::InvalidArgument,
        Error::DimensionMismatch(_) | Error::Io(_) => PmStatus::Internal,
    }
}

/// Opaque stored-state handle: a pure state of N two-level {b, c} atoms.
pub struct PmState {
    inner: PureState,
}

fn event_flavor(code: c_int) -> Option<EventFlavor> {
    match code {
        0 => Some(EventFlavor::FlipCb),
        1 => Some(EventFlavor::FlipBc),
        2 => Some(EventFlavor::SymmetricFlip),
        3 => Some(EventFlavor::PhaseFlip),
        _ => None,
    }
}

fn write_scalar(out: *mut f64, value: polmem::Result<f64>) -> PmStatus {
    if out.is_null() {
        return PmStatus::NullPointer;
    }
    match value {
        Ok(v) => {
            unsafe { *out = v };
            PmStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Create the symmetric n-quantum stored state of `n_atoms` atoms.
///
/// # Safety
/// `out` must point to a writable `PmState*`; on success it receives a
/// handle that must be released with `pm_state_free`.
#[no_mangle]
pub unsafe extern "C" fn pm_state_dark_new(
    n_atoms: usize,
    n_quanta: usize,
    out: *mut *mut PmState,
) -> PmStatus {
    if out.is_null() {
        return PmStatus::NullPointer;
    }
    match stored_fock_state(n_atoms, n_quanta, 0) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(PmState { inner }));
            PmStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Apply one decoherence event in place and report its branch weight.
///
/// `flavor` is one of the `PM_EVENT_*` codes; `atom` is zero-based.
/// The state is renormalized after non-unitary events.
///
/// # Safety
/// `state` must be a live handle from this library; `weight_out` may be
/// null if the branch weight is not wanted.
#[no_mangle]
pub unsafe extern "C" fn pm_state_apply_event(
    state: *mut PmState,
    flavor: c_int,
    atom: usize,
    weight_out: *mut f64,
) -> PmStatus {
    let Some(state) = state.as_mut() else {
        return PmStatus::NullPointer;
    };
    let Some(flavor) = event_flavor(flavor) else {
        return PmStatus::InvalidArgument;
    };
    match apply_event_pure(&state.inner, flavor, atom) {
        Ok(outcome) => {
            state.inner = outcome.state;
            if !weight_out.is_null() {
                *weight_out = outcome.weight;
            }
            PmStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Squared overlap |<a|b>|^2 of two state handles.
///
/// # Safety
/// Both handles must be live handles from this library.
#[no_mangle]
pub unsafe extern "C" fn pm_state_fidelity(
    a: *const PmState,
    b: *const PmState,
    out: *mut f64,
) -> PmStatus {
    let (Some(a), Some(b)) = (a.as_ref(), b.as_ref()) else {
        return PmStatus::NullPointer;
    };
    write_scalar(out, fidelity_pure(&a.inner, &b.inner))
}

/// Release a state handle. Null is a no-op.
///
/// # Safety
/// `state` must be null or a live handle; the handle is dead afterwards.
#[no_mangle]
pub unsafe extern "C" fn pm_state_free(state: *mut PmState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Read-out fidelity after one raising spin flip, bosonic engine.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn pm_spin_flip_fidelity(
    n_atoms: usize,
    n_quanta: usize,
    out: *mut f64,
) -> PmStatus {
    write_scalar(out, spin_flip_fidelity(n_atoms, n_quanta))
}

/// Read-out fidelity after one hermitian spin flip, bosonic engine.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn pm_symmetric_flip_fidelity(
    n_atoms: usize,
    n_quanta: usize,
    out: *mut f64,
) -> PmStatus {
    write_scalar(out, symmetric_flip_fidelity(n_atoms, n_quanta))
}

/// Fidelity after one single-atom phase flip, exact engine.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn pm_phase_flip_fidelity(
    n_atoms: usize,
    n_quanta: usize,
    out: *mut f64,
) -> PmStatus {
    write_scalar(out, phase_flip_fidelity(n_atoms, n_quanta))
}

/// Fidelity of Fock storage after losing one atom (1 - n/N exactly).
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn pm_atom_loss_fidelity(
    n_atoms: usize,
    n_quanta: usize,
    out: *mut f64,
) -> PmStatus {
    write_scalar(out, atom_loss_fock_fidelity(n_atoms, n_quanta))
}

/// Fidelity of coherent-amplitude storage after losing one atom.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn pm_coherent_loss_fidelity(
    n_atoms: usize,
    alpha: f64,
    out: *mut f64,
) -> PmStatus {
    write_scalar(out, coherent_loss_fidelity(n_atoms, alpha))
}

/// Mean Monte-Carlo motion fidelity of an n-quantum storage at the end
/// of a phase-diffusion run (variance D t per atom).
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn pm_motion_fidelity(
    n_atoms: usize,
    n_quanta: usize,
    diffusion: f64,
    t_final: f64,
    n_trajectories: usize,
    seed: u64,
    out: *mut f64,
) -> PmStatus {
    let params = MotionParams {
        n_atoms,
        n_quanta,
        diffusion,
        t_final,
        dt: 0.005 / diffusion.max(1e-12),
        n_trajectories,
        seed,
    };
    write_scalar(
        out,
        motion_sample_fidelity(&params).map(|curve| *curve.mean.last().unwrap()),
    )
}

/// Thermal dark-mode occupation at preparation; equals the Bose factor
/// exp(-beta omega)/(1 - exp(-beta omega)) up to the truncated tail.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn pm_thermal_dark_occupation(
    n_atoms: usize,
    theta: f64,
    beta_omega: f64,
    out: *mut f64,
) -> PmStatus {
    let params = ThermalParams {
        n_atoms,
        theta,
        beta_omega,
        tail_tol: 1e-4,
    };
    write_scalar(out, thermal_prepare(&params).map(|r| r.dark_occupation))
}
