/* C ABI for the polmem dark-state polariton memory library.
 *
 * Maintained by hand alongside crates/polmem-ffi/src/lib.rs; the crate's
 * header-sync test checks that every exported pm_ symbol appears here.
 *
 * Conventions:
 *   - every fallible function returns a pm_status code and writes its
 *     result through an out-pointer on PM_STATUS_OK only;
 *   - pm_state handles are opaque and must be released with
 *     pm_state_free; handles are not thread-safe to mutate concurrently;
 *   - atom indices are zero-based; n_quanta is the stored excitation
 *     number and must not exceed n_atoms.
 */

#ifndef POLMEM_H
#define POLMEM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pm_status {
  PM_STATUS_OK = 0,
  PM_STATUS_NULL_POINTER = 1,
  PM_STATUS_INVALID_ARGUMENT = 2,
  /* Dimension or excitation-cutoff cap exceeded. */
  PM_STATUS_RESOURCE_EXHAUSTED = 3,
  /* The requested event branch has zero probability on this state. */
  PM_STATUS_ZERO_PROBABILITY = 4,
  PM_STATUS_INTERNAL = 5,
} pm_status;

/* Decoherence event selectors for pm_state_apply_event. */
enum {
  PM_EVENT_FLIP_CB = 0,        /* raising flip sigma_cb               */
  PM_EVENT_FLIP_BC = 1,        /* lowering flip sigma_bc              */
  PM_EVENT_SYMMETRIC_FLIP = 2, /* hermitian flip sigma_cb + sigma_bc  */
  PM_EVENT_PHASE_FLIP = 3,     /* -1 phase on the storage level       */
};

/* Opaque pure state of N two-level {b, c} atoms. */
typedef struct PmState PmState;

/* Create the symmetric n-quantum stored state of n_atoms atoms. */
pm_status pm_state_dark_new(size_t n_atoms, size_t n_quanta, PmState **out);

/* Apply one event in place; weight_out (optional, may be NULL) receives
 * the branch probability |K psi|^2 (1 for unitary events). The state is
 * renormalized after non-unitary events. */
pm_status pm_state_apply_event(PmState *state, int flavor, size_t atom,
                               double *weight_out);

/* Squared overlap |<a|b>|^2 of two states on the same atom count. */
pm_status pm_state_fidelity(const PmState *a, const PmState *b, double *out);

/* Release a handle; NULL is a no-op. */
void pm_state_free(PmState *state);

/* Closed-path scalar evaluators (no handle needed). */

/* Read-out fidelity after one raising spin flip, bosonic engine:
 * (N - 1)/(N + n). */
pm_status pm_spin_flip_fidelity(size_t n_atoms, size_t n_quanta, double *out);

/* Read-out fidelity after one hermitian spin flip, bosonic engine:
 * (N - 1)/(N + 2n). */
pm_status pm_symmetric_flip_fidelity(size_t n_atoms, size_t n_quanta,
                                     double *out);

/* Fidelity after one single-atom phase flip, exact engine:
 * (1 - 2n/N)^2. */
pm_status pm_phase_flip_fidelity(size_t n_atoms, size_t n_quanta, double *out);

/* Fidelity of n-quantum Fock storage after losing one atom: 1 - n/N. */
pm_status pm_atom_loss_fidelity(size_t n_atoms, size_t n_quanta, double *out);

/* Fidelity of coherent-amplitude storage after losing one atom;
 * infidelity ~ alpha^2 / (4 N^2). */
pm_status pm_coherent_loss_fidelity(size_t n_atoms, double alpha, double *out);

/* Mean Monte-Carlo fidelity under atomic-motion phase diffusion
 * (variance D t per atom) at t_final, averaged over n_trajectories
 * seeded trajectories. */
pm_status pm_motion_fidelity(size_t n_atoms, size_t n_quanta,
                             double diffusion, double t_final,
                             size_t n_trajectories, uint64_t seed,
                             double *out);

/* Thermal dark-mode occupation at preparation angle theta and reservoir
 * ratio beta*omega; equals the Bose factor up to the truncated tail. */
pm_status pm_thermal_dark_occupation(size_t n_atoms, double theta,
                                     double beta_omega, double *out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* POLMEM_H */
