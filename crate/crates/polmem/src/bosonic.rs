//! Multimode bosonic engine.
//!
//! At low excitation density the N storage-level coherences behave as N
//! independent bosonic modes; together with the cavity mode the system is
//! N + 1 oscillators. In this picture the polariton change of basis is an
//! exact linear-optics unitary and discarding the bright polaritons is a
//! genuine partial trace.
//!
//! Mode ordering conventions:
//! * site frame: mode 0 is the cavity, modes 1..=N are the atomic
//!   coherence modes of atoms 1..=N;
//! * polariton frame: mode 0 is the dark mode, mode 1 the bright partner,
//!   modes 2..=N the remaining spin-wave modes (momentum labels 1..N-1).
//!
//! Occupation tuples are truncated at a total excitation `e_max` and, when
//! enumerated, ordered lexicographically. Pure states are kept sparse in
//! a sorted map so every reduction sums in a deterministic order.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;

use crate::{C64, Error, Result};

/// Occupation tuple over the modes, one entry per mode.
pub type Occupation = Vec<u8>;

/// Enumerated basis of occupation tuples with total excitation <= e_max,
/// in lexicographic order. Used by the dense (mixed-state) code paths.
#[derive(Debug)]
pub struct ModeBasis {
    pub n_modes: usize,
    pub e_max: usize,
    tuples: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
}

impl ModeBasis {
    pub fn new(n_modes: usize, e_max: usize) -> Result<Arc<Self>> {
        assert!(n_modes >= 1);
        let mut tuples = Vec::new();
        let mut current = vec![0u8; n_modes];
        enumerate(&mut current, 0, e_max, &mut tuples);
        if tuples.len() > crate::statespace::DEFAULT_DIM_CAP {
            return Err(Error::DimensionOverflow {
                dim: tuples.len(),
                cap: crate::statespace::DEFAULT_DIM_CAP,
            });
        }
        let index = tuples
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Arc::new(ModeBasis {
            n_modes,
            e_max,
            tuples,
            index,
        }))
    }

    pub fn dim(&self) -> usize {
        self.tuples.len()
    }

    pub fn tuple(&self, i: usize) -> &Occupation {
        &self.tuples[i]
    }

    pub fn index_of(&self, t: &Occupation) -> Option<usize> {
        self.index.get(t).copied()
    }
}

fn enumerate(current: &mut Occupation, mode: usize, budget: usize, out: &mut Vec<Occupation>) {
    if mode == current.len() {
        out.push(current.clone());
        return;
    }
    for n in 0..=budget {
        current[mode] = n as u8;
        enumerate(current, mode + 1, budget - n, out);
    }
    current[mode] = 0;
}

/// Sparse pure state over occupation tuples with total excitation capped
/// at `e_max`. The sorted map fixes the reduction/summation order.
#[derive(Clone, Debug)]
pub struct PureModeState {
    pub n_modes: usize,
    pub e_max: usize,
    amp: BTreeMap<Occupation, C64>,
}

impl PureModeState {
    pub fn vacuum(n_modes: usize, e_max: usize) -> Self {
        let mut amp = BTreeMap::new();
        amp.insert(vec![0u8; n_modes], C64::ONE);
        PureModeState {
            n_modes,
            e_max,
            amp,
        }
    }

    pub fn zero(n_modes: usize, e_max: usize) -> Self {
        PureModeState {
            n_modes,
            e_max,
            amp: BTreeMap::new(),
        }
    }

    /// Fock state: `n` quanta in `mode`, all others empty.
    pub fn fock(n_modes: usize, e_max: usize, mode: usize, n: usize) -> Result<Self> {
        if n > e_max {
            return Err(Error::ExcitationOverflow { n, cap: e_max });
        }
        let mut t = vec![0u8; n_modes];
        t[mode] = n as u8;
        let mut amp = BTreeMap::new();
        amp.insert(t, C64::ONE);
        Ok(PureModeState {
            n_modes,
            e_max,
            amp,
        })
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &C64)> {
        self.amp.iter()
    }

    pub fn amplitude(&self, t: &Occupation) -> C64 {
        self.amp.get(t).copied().unwrap_or(C64::ZERO)
    }

    pub fn set_amplitude(&mut self, t: Occupation, a: C64) {
        debug_assert_eq!(t.len(), self.n_modes);
        if a == C64::ZERO {
            self.amp.remove(&t);
        } else {
            self.amp.insert(t, a);
        }
    }

    pub fn add_amplitude(&mut self, t: Occupation, a: C64) {
        let entry = self.amp.entry(t).or_insert(C64::ZERO);
        *entry += a;
    }

    pub fn n_terms(&self) -> usize {
        self.amp.len()
    }

    pub fn norm(&self) -> f64 {
        self.amp.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(Error::ZeroProbability);
        }
        let inv = 1.0 / n;
        for z in self.amp.values_mut() {
            *z *= inv;
        }
        Ok(n)
    }

    pub fn scale(&mut self, factor: C64) {
        for z in self.amp.values_mut() {
            *z *= factor;
        }
    }

    pub fn add_scaled(&mut self, other: &PureModeState, factor: C64) {
        for (t, &a) in &other.amp {
            self.add_amplitude(t.clone(), factor * a);
        }
    }

    pub fn inner(&self, other: &PureModeState) -> C64 {
        // Iterate the smaller map.
        let (small, big, conj_small) = if self.amp.len() <= other.amp.len() {
            (&self.amp, &other.amp, true)
        } else {
            (&other.amp, &self.amp, false)
        };
        let mut acc = C64::ZERO;
        for (t, &a) in small {
            if let Some(&b) = big.get(t) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        acc
    }

    /// Apply the creation combination sum_i coeffs[i] a_i^dag.
    /// Errors when any produced tuple would exceed the excitation cap.
    pub fn apply_creation(&self, coeffs: &[C64]) -> Result<PureModeState> {
        debug_assert_eq!(coeffs.len(), self.n_modes);
        let mut out = PureModeState::zero(self.n_modes, self.e_max);
        for (t, &a) in &self.amp {
            if a == C64::ZERO {
                continue;
            }
            let total: usize = t.iter().map(|&x| x as usize).sum();
            for (i, &ci) in coeffs.iter().enumerate() {
                if ci == C64::ZERO {
                    continue;
                }
                if total + 1 > self.e_max {
                    return Err(Error::CutoffExceeded(format!(
                        "creation on a tuple with total excitation {} at cap {}",
                        total, self.e_max
                    )));
                }
                let mut nt = t.clone();
                nt[i] += 1;
                let w = (nt[i] as f64).sqrt();
                out.add_amplitude(nt, a * ci * w);
            }
        }
        Ok(out)
    }

    /// Apply the annihilation combination sum_i coeffs[i] a_i.
    pub fn apply_annihilation(&self, coeffs: &[C64]) -> PureModeState {
        debug_assert_eq!(coeffs.len(), self.n_modes);
        let mut out = PureModeState::zero(self.n_modes, self.e_max);
        for (t, &a) in &self.amp {
            if a == C64::ZERO {
                continue;
            }
            for (i, &ci) in coeffs.iter().enumerate() {
                if ci == C64::ZERO || t[i] == 0 {
                    continue;
                }
                let w = (t[i] as f64).sqrt();
                let mut nt = t.clone();
                nt[i] -= 1;
                out.add_amplitude(nt, a * ci * w);
            }
        }
        out
    }

    /// Re-express the state in a new mode frame. `u[(r, c)]` is the
    /// coefficient of new-mode creation operator r in old-mode creation
    /// operator c: old_c^dag = sum_r u[(r, c)] new_r^dag. Total excitation
    /// is conserved term by term, so no weight can be lost; the norm is
    /// asserted to survive to within 1e-10.
    pub fn change_basis(&self, u: &Array2<C64>) -> Result<PureModeState> {
        if u.nrows() != self.n_modes || u.ncols() != self.n_modes {
            return Err(Error::DimensionMismatch(format!(
                "mode transform is {}x{}, state has {} modes",
                u.nrows(),
                u.ncols(),
                self.n_modes
            )));
        }
        let mut out = PureModeState::zero(self.n_modes, self.e_max);
        for (t, &a) in &self.amp {
            if a == C64::ZERO {
                continue;
            }
            // Normalization of the source monomial: prod_c sqrt(n_c!).
            let mut denom = 1.0f64;
            let mut branch = PureModeState::vacuum(self.n_modes, self.e_max);
            for (c, &n_c) in t.iter().enumerate() {
                let col: Vec<C64> = (0..self.n_modes).map(|r| u[(r, c)]).collect();
                for q in 0..n_c as usize {
                    denom *= ((q + 1) as f64).sqrt();
                    branch = branch.apply_creation(&col)?;
                }
            }
            out.add_scaled(&branch, a / denom);
        }
        let before = self.norm();
        let after = out.norm();
        if (before - after).abs() > 1e-10 * before.max(1.0) {
            return Err(Error::CutoffLoss(format!(
                "norm changed from {before} to {after} during the mode transform"
            )));
        }
        Ok(out)
    }

    /// Reduced density matrix of mode 0 after tracing out all the others,
    /// indexed by occupation 0..=e_max.
    pub fn trace_out_rest(&self) -> Array2<C64> {
        let d = self.e_max + 1;
        let mut rho = Array2::zeros((d, d));
        // Group amplitudes by the occupation pattern of modes 1.. ; within
        // a group the mode-0 occupations form a conditional vector whose
        // outer product accumulates into rho. BTreeMap order puts equal
        // tails adjacent only per head, so collect explicitly.
        let mut groups: BTreeMap<&[u8], Vec<(usize, C64)>> = BTreeMap::new();
        for (t, &a) in &self.amp {
            groups.entry(&t[1..]).or_default().push((t[0] as usize, a));
        }
        for (_, members) in groups {
            for &(n, an) in &members {
                for &(m, am) in &members {
                    rho[(n, m)] += an * am.conj();
                }
            }
        }
        rho
    }

    pub fn max_amp_deviation(&self, other: &PureModeState) -> f64 {
        let mut worst = 0.0f64;
        for (t, &a) in &self.amp {
            worst = worst.max((a - other.amplitude(t)).norm());
        }
        for (t, &b) in &other.amp {
            worst = worst.max((self.amplitude(t) - b).norm());
        }
        worst
    }
}

/// Dense mixed state over an enumerated [`ModeBasis`].
#[derive(Clone, Debug)]
pub struct MixedModeState {
    pub basis: Arc<ModeBasis>,
    pub mat: Array2<C64>,
}

impl MixedModeState {
    pub fn from_pure(basis: Arc<ModeBasis>, psi: &PureModeState) -> Result<Self> {
        let d = basis.dim();
        let mut vec = vec![C64::ZERO; d];
        for (t, &a) in psi.terms() {
            let i = basis.index_of(t).ok_or_else(|| {
                Error::DimensionMismatch("pure state has support outside the basis".into())
            })?;
            vec[i] = a;
        }
        let mut mat = Array2::zeros((d, d));
        for i in 0..d {
            if vec[i] == C64::ZERO {
                continue;
            }
            for j in 0..d {
                mat[(i, j)] = vec[i] * vec[j].conj();
            }
        }
        Ok(MixedModeState { basis, mat })
    }

    pub fn trace(&self) -> C64 {
        (0..self.mat.nrows()).map(|i| self.mat[(i, i)]).sum()
    }

    /// Conjugate by the Fock-space unitary induced by the mode transform
    /// `u` (same convention as [`PureModeState::change_basis`]).
    pub fn change_basis(&self, u: &Array2<C64>) -> Result<MixedModeState> {
        let d = self.basis.dim();
        let mut big_u = Array2::zeros((d, d));
        for c in 0..d {
            let mut unit = PureModeState::zero(self.basis.n_modes, self.basis.e_max);
            unit.set_amplitude(self.basis.tuple(c).clone(), C64::ONE);
            let img = unit.change_basis(u)?;
            for (t, &a) in img.terms() {
                let r = self.basis.index_of(t).ok_or_else(|| {
                    Error::CutoffLoss("transform left the enumerated basis".into())
                })?;
                big_u[(r, c)] = a;
            }
        }
        let tmp = big_u.dot(&self.mat);
        let mat = tmp.dot(&big_u.mapv(|z| z.conj()).reversed_axes());
        Ok(MixedModeState {
            basis: Arc::clone(&self.basis),
            mat,
        })
    }

    /// Reduced density matrix of mode 0, indexed by occupation 0..=e_max.
    pub fn trace_out_rest(&self) -> Array2<C64> {
        let d = self.basis.e_max + 1;
        let mut rho = Array2::zeros((d, d));
        // Bucket basis states by their tail (modes 1..).
        let mut groups: BTreeMap<&[u8], Vec<(usize, usize)>> = BTreeMap::new();
        for i in 0..self.basis.dim() {
            let t = self.basis.tuple(i);
            groups.entry(&t[1..]).or_default().push((t[0] as usize, i));
        }
        for (_, members) in groups {
            for &(n, i) in &members {
                for &(m, j) in &members {
                    rho[(n, m)] += self.mat[(i, j)];
                }
            }
        }
        rho
    }
}

/// Polariton mode transform for mixing angle `theta` and `n_atoms` atoms.
///
/// Rows are the polariton modes (dark; bright partner; spin waves with
/// momentum labels 1..N-1), columns the site modes (cavity; atoms 1..=N).
/// The dark row is (cos t, -sin t/sqrt(N), ..), the bright-partner row
/// (sin t, cos t/sqrt(N), ..) and spin-wave row l has atom-j entry
/// exp(2 pi i l j / N)/sqrt(N) with j counted from 1.
pub fn polariton_transform(theta: f64, n_atoms: usize) -> Array2<C64> {
    let n = n_atoms;
    let m = n + 1;
    let mut t = Array2::zeros((m, m));
    let (s, c) = theta.sin_cos();
    let root_n = (n as f64).sqrt();
    t[(0, 0)] = C64::new(c, 0.0);
    t[(1, 0)] = C64::new(s, 0.0);
    for j in 1..=n {
        t[(0, j)] = C64::new(-s / root_n, 0.0);
        t[(1, j)] = C64::new(c / root_n, 0.0);
    }
    for l in 1..n {
        for j in 1..=n {
            let phi = 2.0 * PI * (l as f64) * (j as f64) / (n as f64);
            t[(l + 1, j)] = C64::from_polar(1.0 / root_n, phi);
        }
    }
    t
}

/// Inverse of a unitary mode transform (conjugate transpose), in the
/// orientation expected by [`PureModeState::change_basis`].
pub fn inverse_transform(u: &Array2<C64>) -> Array2<C64> {
    u.mapv(|z| z.conj()).reversed_axes().to_owned()
}

/// Embed a full-product spin state over levels {b, c} into site modes:
/// mode 0 carries the photon number, mode j+1 is 1 when atom j sits in c.
pub fn embed_spin_state(psi: &crate::statespace::PureState) -> Result<PureModeState> {
    use crate::statespace::{Level, Sector};
    let spec = psi.spec();
    if spec.sector != Sector::FullProduct || spec.levels != crate::statespace::LevelSet::bc() {
        return Err(Error::SectorMismatch {
            required: "full-product over {b, c}",
            actual: spec.sector.name(),
        });
    }
    let n = spec.n_atoms;
    let e_max = n + spec.n_max;
    let mut out = PureModeState::zero(n + 1, e_max);
    let dim = spec.dimension()?;
    for idx in 0..dim {
        let a = psi.amplitudes()[idx];
        if a == C64::ZERO {
            continue;
        }
        let (config, photons) = spec.config_full(idx);
        let mut t = vec![0u8; n + 1];
        t[0] = photons as u8;
        for (j, &l) in config.iter().enumerate() {
            if l == Level::C {
                t[j + 1] = 1;
            }
        }
        out.set_amplitude(t, a);
    }
    Ok(out)
}

/// Embed a full-product spin density matrix into a [`MixedModeState`]
/// over the given enumerated basis.
pub fn embed_spin_density(
    rho: &crate::statespace::DensityOperator,
    basis: Arc<ModeBasis>,
) -> Result<MixedModeState> {
    use crate::statespace::{Level, Sector};
    let spec = rho.spec();
    if spec.sector != Sector::FullProduct || spec.levels != crate::statespace::LevelSet::bc() {
        return Err(Error::SectorMismatch {
            required: "full-product over {b, c}",
            actual: spec.sector.name(),
        });
    }
    let n = spec.n_atoms;
    if basis.n_modes != n + 1 {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} modes, embedding needs {}",
            basis.n_modes,
            n + 1
        )));
    }
    let dim = spec.dimension()?;
    let map_index = |idx: usize| -> Result<usize> {
        let (config, photons) = spec.config_full(idx);
        let mut t = vec![0u8; n + 1];
        t[0] = photons as u8;
        for (j, &l) in config.iter().enumerate() {
            if l == Level::C {
                t[j + 1] = 1;
            }
        }
        basis.index_of(&t).ok_or_else(|| {
            Error::CutoffExceeded("spin state exceeds the bosonic excitation cap".into())
        })
    };
    let d = basis.dim();
    let mut mat = Array2::zeros((d, d));
    for i in 0..dim {
        let bi = map_index(i)?;
        for j in 0..dim {
            let v = rho.matrix()[(i, j)];
            if v == C64::ZERO {
                continue;
            }
            mat[(bi, map_index(j)?)] += v;
        }
    }
    Ok(MixedModeState { basis, mat })
}
