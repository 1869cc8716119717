//! Exact finite-dimensional state engine: N atoms tensored with one
//! cavity mode truncated at `n_max` photons.
//!
//! Basis ordering is lexicographic in (atom configuration, photon number):
//! the flattened index is `config_index * (n_max + 1) + photons`, where
//! `config_index` reads the atom levels as a base-|levels| number with
//! atom 0 as the most significant digit. In the symmetric Dicke sector
//! (levels {b, c} only) states are labelled (k, p) with k atoms excited to
//! c and p photons, index `k * (n_max + 1) + p`. All emitted data depends
//! on this ordering.

use ndarray::Array2;

use crate::{C64, Error, Result};

/// Default hard cap on the number of amplitudes of a basis.
pub const DEFAULT_DIM_CAP: usize = 2_000_000;

/// Atomic level. `b` is the ground/storage-reference level, `c` the
/// storage level, `a` the optically excited level and `d` an auxiliary
/// level used only by the naive-scaling demonstration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    A,
    B,
    C,
    D,
}

impl Level {
    pub fn label(self) -> char {
        match self {
            Level::A => 'a',
            Level::B => 'b',
            Level::C => 'c',
            Level::D => 'd',
        }
    }
}

/// Ordered set of atomic levels carried by a basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelSet(Vec<Level>);

impl LevelSet {
    pub fn bc() -> Self {
        LevelSet(vec![Level::B, Level::C])
    }

    pub fn abc() -> Self {
        LevelSet(vec![Level::A, Level::B, Level::C])
    }

    pub fn bcd() -> Self {
        LevelSet(vec![Level::B, Level::C, Level::D])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, level: Level) -> bool {
        self.0.contains(&level)
    }

    pub fn index_of(&self, level: Level) -> Option<usize> {
        self.0.iter().position(|&l| l == level)
    }

    pub fn get(&self, digit: usize) -> Level {
        self.0[digit]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sector {
    FullProduct,
    SymmetricDicke,
}

impl Sector {
    pub fn name(self) -> &'static str {
        match self {
            Sector::FullProduct => "full-product",
            Sector::SymmetricDicke => "symmetric-Dicke",
        }
    }
}

/// Descriptor of a truncated atoms-plus-cavity Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisSpec {
    pub n_atoms: usize,
    pub levels: LevelSet,
    pub n_max: usize,
    pub sector: Sector,
    pub dim_cap: usize,
}

impl BasisSpec {
    pub fn full_product(n_atoms: usize, levels: LevelSet, n_max: usize) -> Self {
        assert!(n_atoms >= 1, "need at least one atom");
        BasisSpec {
            n_atoms,
            levels,
            n_max,
            sector: Sector::FullProduct,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }

    /// Symmetric Dicke sector over levels {b, c}.
    pub fn symmetric(n_atoms: usize, n_max: usize) -> Self {
        assert!(n_atoms >= 1, "need at least one atom");
        BasisSpec {
            n_atoms,
            levels: LevelSet::bc(),
            n_max,
            sector: Sector::SymmetricDicke,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.dim_cap = cap;
        self
    }

    /// Checked dimension; errors when the cap is exceeded.
    pub fn dimension(&self) -> Result<usize> {
        let photons = self.n_max + 1;
        let dim = match self.sector {
            Sector::FullProduct => {
                let mut d: usize = photons;
                for _ in 0..self.n_atoms {
                    d = d.checked_mul(self.levels.len()).ok_or(Error::DimensionOverflow {
                        dim: usize::MAX,
                        cap: self.dim_cap,
                    })?;
                }
                d
            }
            Sector::SymmetricDicke => (self.n_atoms + 1) * photons,
        };
        if dim > self.dim_cap {
            return Err(Error::DimensionOverflow {
                dim,
                cap: self.dim_cap,
            });
        }
        Ok(dim)
    }

    fn photons_stride(&self) -> usize {
        self.n_max + 1
    }

    /// Stride of atom `j`'s digit in the flattened index (full product).
    pub(crate) fn atom_stride(&self, j: usize) -> usize {
        let base = self.levels.len();
        let mut s = self.photons_stride();
        for _ in 0..(self.n_atoms - 1 - j) {
            s *= base;
        }
        s
    }

    pub fn index_full(&self, config: &[Level], photons: usize) -> usize {
        debug_assert_eq!(config.len(), self.n_atoms);
        debug_assert!(photons <= self.n_max);
        let base = self.levels.len();
        let mut idx = 0usize;
        for &l in config {
            idx = idx * base + self.levels.index_of(l).expect("level not in basis");
        }
        idx * self.photons_stride() + photons
    }

    pub fn config_full(&self, index: usize) -> (Vec<Level>, usize) {
        let photons = index % self.photons_stride();
        let mut cfg_idx = index / self.photons_stride();
        let base = self.levels.len();
        let mut config = vec![Level::B; self.n_atoms];
        for j in (0..self.n_atoms).rev() {
            config[j] = self.levels.get(cfg_idx % base);
            cfg_idx /= base;
        }
        (config, photons)
    }

    pub fn index_symmetric(&self, k: usize, photons: usize) -> usize {
        debug_assert!(k <= self.n_atoms && photons <= self.n_max);
        k * self.photons_stride() + photons
    }

    pub fn split_symmetric(&self, index: usize) -> (usize, usize) {
        (index / self.photons_stride(), index % self.photons_stride())
    }

    pub fn photons_of(&self, index: usize) -> usize {
        index % self.photons_stride()
    }

    /// Level digit of atom `j` in the full-product index.
    pub fn atom_digit(&self, index: usize, j: usize) -> usize {
        (index / self.atom_stride(j)) % self.levels.len()
    }
}

/// Pure state over a [`BasisSpec`].
#[derive(Clone, Debug)]
pub struct PureState {
    spec: BasisSpec,
    amp: Vec<C64>,
}

impl PureState {
    pub fn new(spec: BasisSpec, amp: Vec<C64>) -> Result<Self> {
        let dim = spec.dimension()?;
        if amp.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "amplitude vector has {} entries, basis dimension is {}",
                amp.len(),
                dim
            )));
        }
        Ok(PureState { spec, amp })
    }

    pub fn zero(spec: BasisSpec) -> Result<Self> {
        let dim = spec.dimension()?;
        Ok(PureState {
            spec,
            amp: vec![C64::ZERO; dim],
        })
    }

    /// All atoms in |b>, `photons` cavity quanta.
    pub fn ground(spec: BasisSpec, photons: usize) -> Result<Self> {
        let mut st = PureState::zero(spec)?;
        let idx = match st.spec.sector {
            Sector::FullProduct => {
                let config = vec![Level::B; st.spec.n_atoms];
                st.spec.index_full(&config, photons)
            }
            Sector::SymmetricDicke => st.spec.index_symmetric(0, photons),
        };
        st.amp[idx] = C64::ONE;
        Ok(st)
    }

    pub fn basis_state_full(spec: BasisSpec, config: &[Level], photons: usize) -> Result<Self> {
        let mut st = PureState::zero(spec)?;
        let idx = st.spec.index_full(config, photons);
        st.amp[idx] = C64::ONE;
        Ok(st)
    }

    pub fn basis_state_symmetric(spec: BasisSpec, k: usize, photons: usize) -> Result<Self> {
        let mut st = PureState::zero(spec)?;
        let idx = st.spec.index_symmetric(k, photons);
        st.amp[idx] = C64::ONE;
        Ok(st)
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amp
    }

    pub fn norm(&self) -> f64 {
        self.amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(Error::ZeroProbability);
        }
        let inv = 1.0 / n;
        for z in &mut self.amp {
            *z *= inv;
        }
        Ok(n)
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.spec != other.spec {
            return Err(Error::DimensionMismatch(
                "inner product between different bases".into(),
            ));
        }
        Ok(self
            .amp
            .iter()
            .zip(&other.amp)
            .map(|(x, y)| x.conj() * y)
            .sum())
    }

    pub fn scale(&mut self, factor: C64) {
        for z in &mut self.amp {
            *z *= factor;
        }
    }

    pub fn add_scaled(&mut self, other: &PureState, factor: C64) {
        debug_assert_eq!(self.amp.len(), other.amp.len());
        for (z, w) in self.amp.iter_mut().zip(&other.amp) {
            *z += factor * w;
        }
    }

    pub fn max_amp_deviation(&self, other: &PureState) -> f64 {
        self.amp
            .iter()
            .zip(&other.amp)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

/// Density operator over a [`BasisSpec`]. The matrix is kept dense; the
/// engine's dimension cap keeps it desk-sized.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    spec: BasisSpec,
    mat: Array2<C64>,
}

impl DensityOperator {
    pub fn new(spec: BasisSpec, mat: Array2<C64>) -> Result<Self> {
        let dim = spec.dimension()?;
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, basis dimension is {}",
                mat.nrows(),
                mat.ncols(),
                dim
            )));
        }
        Ok(DensityOperator { spec, mat })
    }

    pub fn from_pure(state: &PureState) -> Self {
        let d = state.amp.len();
        let mut mat = Array2::zeros((d, d));
        for i in 0..d {
            if state.amp[i] == C64::ZERO {
                continue;
            }
            for j in 0..d {
                mat[(i, j)] = state.amp[i] * state.amp[j].conj();
            }
        }
        DensityOperator {
            spec: state.spec.clone(),
            mat,
        }
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn matrix_mut(&mut self) -> &mut Array2<C64> {
        &mut self.mat
    }

    pub fn trace(&self) -> C64 {
        (0..self.mat.nrows()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn normalize(&mut self) -> Result<f64> {
        let t = self.trace().re;
        if t.abs() < 1e-300 {
            return Err(Error::ZeroProbability);
        }
        self.mat.mapv_inplace(|z| z / t);
        Ok(t)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        crate::linalg::hermiticity_defect(&self.mat)
    }

    /// <psi| rho |psi>.
    pub fn expectation(&self, psi: &PureState) -> Result<C64> {
        if psi.spec != self.spec {
            return Err(Error::DimensionMismatch(
                "expectation between different bases".into(),
            ));
        }
        let d = psi.amp.len();
        let mut acc = C64::ZERO;
        for i in 0..d {
            if psi.amp[i] == C64::ZERO {
                continue;
            }
            let mut row = C64::ZERO;
            for j in 0..d {
                row += self.mat[(i, j)] * psi.amp[j];
            }
            acc += psi.amp[i].conj() * row;
        }
        Ok(acc)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Create,
    Annihilate,
}

/// Result of a cavity ladder application; `truncated` flags weight pushed
/// past the photon cutoff (annihilated by the truncation contract).
pub struct CavityResult {
    pub state: PureState,
    pub truncated: bool,
}

fn require_full(spec: &BasisSpec, what: &'static str) -> Result<()> {
    if spec.sector != Sector::FullProduct {
        return Err(Error::SectorMismatch {
            required: "full-product",
            actual: spec.sector.name(),
        });
    }
    let _ = what;
    Ok(())
}

/// sigma_{to,from}^j |psi>, unnormalized. Annihilates components where
/// atom `j` is not in `from`.
pub fn apply_atomic_flip(state: &PureState, j: usize, from: Level, to: Level) -> Result<PureState> {
    let spec = state.spec();
    require_full(spec, "single-atom flip")?;
    if j >= spec.n_atoms {
        return Err(Error::InvalidArgument(format!(
            "atom index {} out of range (N = {})",
            j, spec.n_atoms
        )));
    }
    let (from_d, to_d) = match (spec.levels.index_of(from), spec.levels.index_of(to)) {
        (Some(f), Some(t)) => (f, t),
        _ => {
            return Err(Error::InvalidArgument(
                "flip levels not contained in the basis".into(),
            ))
        }
    };
    let stride = spec.atom_stride(j);
    let base = spec.levels.len();
    let mut out = PureState::zero(spec.clone())?;
    for (idx, &a) in state.amplitudes().iter().enumerate() {
        if a == C64::ZERO {
            continue;
        }
        if (idx / stride) % base == from_d {
            let new_idx = idx + stride * to_d - stride * from_d;
            out.amp[new_idx] += a;
        }
    }
    Ok(out)
}

/// Cavity ladder operator with the usual sqrt(n) factors. Creation on the
/// cutoff photon number annihilates and sets the truncation flag.
pub fn apply_cavity(state: &PureState, which: Ladder) -> CavityResult {
    let spec = state.spec().clone();
    let ps = spec.photons_stride();
    let mut out = PureState::zero(spec.clone()).expect("same spec");
    let mut truncated = false;
    for (idx, &a) in state.amplitudes().iter().enumerate() {
        if a == C64::ZERO {
            continue;
        }
        let p = idx % ps;
        match which {
            Ladder::Create => {
                if p == spec.n_max {
                    truncated = true;
                } else {
                    out.amp[idx + 1] += a * ((p + 1) as f64).sqrt();
                }
            }
            Ladder::Annihilate => {
                if p > 0 {
                    out.amp[idx - 1] += a * (p as f64).sqrt();
                }
            }
        }
    }
    CavityResult {
        state: out,
        truncated,
    }
}

/// Exact single-atom phase flip Z_j: +1 on |b>, -1 on |c| (identity on
/// any other level). A diagonal unitary, never routed through the bosonic
/// approximation.
pub fn apply_phase_z(state: &PureState, j: usize) -> Result<PureState> {
    let spec = state.spec();
    require_full(spec, "phase flip")?;
    if j >= spec.n_atoms {
        return Err(Error::InvalidArgument(format!(
            "atom index {} out of range (N = {})",
            j, spec.n_atoms
        )));
    }
    let c_digit = spec
        .levels
        .index_of(Level::C)
        .ok_or_else(|| Error::InvalidArgument("basis has no level c".into()))?;
    let stride = spec.atom_stride(j);
    let base = spec.levels.len();
    let mut out = state.clone();
    for (idx, z) in out.amp.iter_mut().enumerate() {
        if (idx / stride) % base == c_digit {
            *z = -*z;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CollectiveFlip {
    /// sum_j sigma_cb^j (raises the number of c-excitations).
    Raise,
    /// sum_j sigma_bc^j (lowers it).
    Lower,
}

/// Collective flip on the symmetric Dicke sector:
/// Raise: |c^k> -> sqrt((k+1)(N-k)) |c^{k+1}>,
/// Lower: |c^k> -> sqrt(k(N-k+1)) |c^{k-1}>.
pub fn apply_collective_flip_symmetric(
    state: &PureState,
    which: CollectiveFlip,
) -> Result<PureState> {
    let spec = state.spec();
    if spec.sector != Sector::SymmetricDicke {
        return Err(Error::SectorMismatch {
            required: "symmetric-Dicke",
            actual: spec.sector.name(),
        });
    }
    let n = spec.n_atoms;
    let ps = spec.photons_stride();
    let mut out = PureState::zero(spec.clone())?;
    for (idx, &a) in state.amplitudes().iter().enumerate() {
        if a == C64::ZERO {
            continue;
        }
        let (k, p) = spec.split_symmetric(idx);
        match which {
            CollectiveFlip::Raise => {
                if k < n {
                    let w = (((k + 1) * (n - k)) as f64).sqrt();
                    out.amp[(k + 1) * ps + p] += a * w;
                }
            }
            CollectiveFlip::Lower => {
                if k > 0 {
                    let w = ((k * (n - k + 1)) as f64).sqrt();
                    out.amp[(k - 1) * ps + p] += a * w;
                }
            }
        }
    }
    Ok(out)
}

fn reduced_spec(spec: &BasisSpec) -> Result<BasisSpec> {
    if spec.n_atoms < 2 {
        return Err(Error::InvalidArgument(
            "partial trace needs at least two atoms".into(),
        ));
    }
    let mut out = spec.clone();
    out.n_atoms -= 1;
    Ok(out)
}

/// Index arithmetic for inserting atom `j` with digit `s` into a reduced
/// (N-1 atom) index, producing the full N-atom index.
fn insert_digit(spec: &BasisSpec, reduced_index: usize, j: usize, s: usize) -> usize {
    let ps = spec.photons_stride();
    let base = spec.levels.len();
    let p = reduced_index % ps;
    let rc = reduced_index / ps;
    let mut low_stride = 1usize;
    for _ in 0..(spec.n_atoms - 1 - j) {
        low_stride *= base;
    }
    let high = rc / low_stride;
    let low = rc % low_stride;
    (((high * base + s) * low_stride) + low) * ps + p
}

/// Partial trace over atom `j` of a full-product operator. Works for any
/// matrix (hermitian or not), which the off-diagonal Dicke rules rely on.
pub fn partial_trace_atom(w: &DensityOperator, j: usize) -> Result<DensityOperator> {
    let spec = w.spec();
    require_full(spec, "partial trace")?;
    let rspec = reduced_spec(spec)?;
    let rdim = rspec.dimension()?;
    let base = spec.levels.len();
    let mut mat = Array2::zeros((rdim, rdim));
    for s in 0..base {
        for r1 in 0..rdim {
            let f1 = insert_digit(spec, r1, j, s);
            for r2 in 0..rdim {
                let f2 = insert_digit(spec, r2, j, s);
                mat[(r1, r2)] += w.matrix()[(f1, f2)];
            }
        }
    }
    DensityOperator::new(rspec, mat)
}

/// Partial trace over atom `j` of a pure state, without materializing the
/// full N-atom density matrix.
pub fn partial_trace_atom_pure(psi: &PureState, j: usize) -> Result<DensityOperator> {
    let spec = psi.spec();
    require_full(spec, "partial trace")?;
    let rspec = reduced_spec(spec)?;
    let rdim = rspec.dimension()?;
    let base = spec.levels.len();
    let mut mat = Array2::zeros((rdim, rdim));
    for s in 0..base {
        // Gather the conditional branch <s|_j psi and accumulate its
        // outer product.
        let mut branch = vec![C64::ZERO; rdim];
        for r in 0..rdim {
            branch[r] = psi.amplitudes()[insert_digit(spec, r, j, s)];
        }
        for r1 in 0..rdim {
            if branch[r1] == C64::ZERO {
                continue;
            }
            for r2 in 0..rdim {
                mat[(r1, r2)] += branch[r1] * branch[r2].conj();
            }
        }
    }
    DensityOperator::new(rspec, mat)
}

/// Overlap-sum fidelity after tracing out atom `j`:
/// sum_s |<ref| <s|_j psi>|^2, evaluated without any matrix.
pub fn fidelity_after_atom_loss(psi: &PureState, j: usize, reference: &PureState) -> Result<f64> {
    let spec = psi.spec();
    require_full(spec, "partial trace")?;
    let rspec = reduced_spec(spec)?;
    if *reference.spec() != rspec {
        return Err(Error::DimensionMismatch(
            "reference state does not live on the reduced basis".into(),
        ));
    }
    let rdim = rspec.dimension()?;
    let base = spec.levels.len();
    let mut f = 0.0;
    for s in 0..base {
        let mut ov = C64::ZERO;
        for r in 0..rdim {
            let a = reference.amplitudes()[r];
            if a == C64::ZERO {
                continue;
            }
            ov += a.conj() * psi.amplitudes()[insert_digit(spec, r, j, s)];
        }
        f += ov.norm_sqr();
    }
    Ok(f)
}

/// Exact binomial coefficient as f64 (arguments stay desk-scale).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Visit every k-subset of {0, .., n-1} in lexicographic order.
pub fn for_each_subset<F: FnMut(&[usize])>(n: usize, k: usize, mut f: F) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // Advance to the next combination.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Embed a symmetric-sector state into a full-product basis: |c^k> maps to
/// the normalized sum over all k-subsets of atoms in c, the rest in b.
/// The target may carry extra levels (e.g. {a,b,c}) or a larger photon
/// cutoff; amplitudes outside the image are zero.
pub fn embed_symmetric(state: &PureState, target: &BasisSpec) -> Result<PureState> {
    let spec = state.spec();
    if spec.sector != Sector::SymmetricDicke {
        return Err(Error::SectorMismatch {
            required: "symmetric-Dicke",
            actual: spec.sector.name(),
        });
    }
    if target.sector != Sector::FullProduct
        || target.n_atoms != spec.n_atoms
        || target.n_max < spec.n_max
        || !target.levels.contains(Level::B)
        || !target.levels.contains(Level::C)
    {
        return Err(Error::DimensionMismatch(
            "embedding target must be a full-product basis over >= {b,c} with the same atom count and a photon cutoff at least as large".into(),
        ));
    }
    let n = spec.n_atoms;
    let b_digit = target.levels.index_of(Level::B).unwrap();
    let c_digit = target.levels.index_of(Level::C).unwrap();
    let base = target.levels.len();
    let tps = target.photons_stride();

    // Config index with every atom in b.
    let mut all_b = 0usize;
    for _ in 0..n {
        all_b = all_b * base + b_digit;
    }

    let mut out = PureState::zero(target.clone())?;
    for (idx, &a) in state.amplitudes().iter().enumerate() {
        if a == C64::ZERO {
            continue;
        }
        let (k, p) = spec.split_symmetric(idx);
        let w = a / binomial(n, k).sqrt();
        for_each_subset(n, k, |subset| {
            let mut cfg = all_b;
            for &j in subset {
                let mut stride = 1usize;
                for _ in 0..(n - 1 - j) {
                    stride *= base;
                }
                cfg = cfg + (c_digit - b_digit) * stride;
            }
            out.amp[cfg * tps + p] += w;
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn dimensions() {
        let s = BasisSpec::full_product(2, LevelSet::bc(), 1);
        assert_eq!(s.dimension().unwrap(), 8);
        let s = BasisSpec::symmetric(3, 0);
        assert_eq!(s.dimension().unwrap(), 4);
        let s = BasisSpec::full_product(1, LevelSet::abc(), 2);
        assert_eq!(s.dimension().unwrap(), 9);
    }

    #[test]
    fn dimension_cap() {
        let s = BasisSpec::full_product(30, LevelSet::bc(), 0);
        assert!(matches!(
            s.dimension(),
            Err(Error::DimensionOverflow { .. })
        ));
    }

    #[test]
    fn index_roundtrip() {
        let s = BasisSpec::full_product(3, LevelSet::abc(), 2);
        let dim = s.dimension().unwrap();
        for idx in 0..dim {
            let (cfg, p) = s.config_full(idx);
            assert_eq!(s.index_full(&cfg, p), idx);
        }
    }

    #[test]
    fn atomic_flip_examples() {
        // sigma_bc^1 on |c,b> (x) |0>  ->  |b,b> (x) |0>   (atom 0 in code)
        let spec = BasisSpec::full_product(2, LevelSet::bc(), 1);
        let cb0 = PureState::basis_state_full(spec.clone(), &[Level::C, Level::B], 0).unwrap();
        let out = apply_atomic_flip(&cb0, 0, Level::C, Level::B).unwrap();
        let bb0 = PureState::basis_state_full(spec.clone(), &[Level::B, Level::B], 0).unwrap();
        assert!((out.inner(&bb0).unwrap() - c(1.0)).norm() < 1e-15);
        assert!((out.norm() - 1.0).abs() < 1e-15);

        // sigma_cb^1 on |c,b> -> 0 (atom 0 already in c).
        let out = apply_atomic_flip(&cb0, 0, Level::B, Level::C).unwrap();
        assert!(out.norm() < 1e-15);

        // sigma_cb^2 on (|cb>+|bc>)/sqrt(2) -> |cc>/sqrt(2).
        let mut sup = PureState::zero(spec.clone()).unwrap();
        let i1 = spec.index_full(&[Level::C, Level::B], 0);
        let i2 = spec.index_full(&[Level::B, Level::C], 0);
        sup.amplitudes_mut()[i1] = c(1.0 / 2f64.sqrt());
        sup.amplitudes_mut()[i2] = c(1.0 / 2f64.sqrt());
        let out = apply_atomic_flip(&sup, 1, Level::B, Level::C).unwrap();
        assert!((out.norm() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let cc = PureState::basis_state_full(spec, &[Level::C, Level::C], 0).unwrap();
        assert!((out.inner(&cc).unwrap() - c(1.0 / 2f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn cavity_ladders() {
        let spec = BasisSpec::full_product(1, LevelSet::bc(), 2);
        let b0 = PureState::basis_state_full(spec.clone(), &[Level::B], 0).unwrap();
        let r = apply_cavity(&b0, Ladder::Create);
        assert!(!r.truncated);
        let b1 = PureState::basis_state_full(spec.clone(), &[Level::B], 1).unwrap();
        assert!((r.state.inner(&b1).unwrap() - c(1.0)).norm() < 1e-15);

        let b2 = PureState::basis_state_full(spec.clone(), &[Level::B], 2).unwrap();
        let r = apply_cavity(&b2, Ladder::Annihilate);
        assert!((r.state.inner(&b1).unwrap() - c(2f64.sqrt())).norm() < 1e-15);

        // Creation at the cutoff annihilates with the flag set.
        let r = apply_cavity(&b2, Ladder::Create);
        assert!(r.truncated);
        assert!(r.state.norm() < 1e-15);
    }

    #[test]
    fn symmetric_sector_rejects_single_atom_ops() {
        let spec = BasisSpec::symmetric(3, 0);
        let st = PureState::ground(spec, 0).unwrap();
        assert!(matches!(
            apply_atomic_flip(&st, 0, Level::B, Level::C),
            Err(Error::SectorMismatch { .. })
        ));
    }

    #[test]
    fn bell_marginal() {
        let spec = BasisSpec::full_product(2, LevelSet::bc(), 0);
        let mut bell = PureState::zero(spec.clone()).unwrap();
        bell.amplitudes_mut()[spec.index_full(&[Level::C, Level::B], 0)] = c(1.0 / 2f64.sqrt());
        bell.amplitudes_mut()[spec.index_full(&[Level::B, Level::C], 0)] = c(1.0 / 2f64.sqrt());
        let rho = partial_trace_atom_pure(&bell, 1).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 0.5).abs() < 1e-14);
        assert!((rho.matrix()[(1, 1)].re - 0.5).abs() < 1e-14);
        assert!(rho.matrix()[(0, 1)].norm() < 1e-14);
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn product_state_marginal() {
        let spec = BasisSpec::full_product(2, LevelSet::bc(), 0);
        let bb = PureState::basis_state_full(spec, &[Level::B, Level::B], 0).unwrap();
        let rho = partial_trace_atom_pure(&bb, 0).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dense_vs_pure_partial_trace_agree() {
        let spec = BasisSpec::full_product(3, LevelSet::bc(), 1);
        let dim = spec.dimension().unwrap();
        let mut psi = PureState::zero(spec.clone()).unwrap();
        for i in 0..dim {
            psi.amplitudes_mut()[i] = C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos());
        }
        psi.normalize().unwrap();
        let w = DensityOperator::from_pure(&psi);
        for j in 0..3 {
            let a = partial_trace_atom(&w, j).unwrap();
            let b = partial_trace_atom_pure(&psi, j).unwrap();
            let d = (a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(d < 1e-13);
            assert!((a.trace().re - 1.0).abs() < 1e-12);
            assert!(a.hermiticity_defect() < 1e-13);
        }
    }

    #[test]
    fn embed_symmetric_examples() {
        // |c^1> (N=3) -> (|cbb>+|bcb>+|bbc>)/sqrt(3)
        let sym = BasisSpec::symmetric(3, 0);
        let full = BasisSpec::full_product(3, LevelSet::bc(), 0);
        let s = PureState::basis_state_symmetric(sym.clone(), 1, 0).unwrap();
        let e = embed_symmetric(&s, &full).unwrap();
        let w = 1.0 / 3f64.sqrt();
        for cfg in [
            [Level::C, Level::B, Level::B],
            [Level::B, Level::C, Level::B],
            [Level::B, Level::B, Level::C],
        ] {
            let idx = full.index_full(&cfg, 0);
            assert!((e.amplitudes()[idx] - c(w)).norm() < 1e-15);
        }
        assert!((e.norm() - 1.0).abs() < 1e-14);

        // |c^0> -> |bbb>
        let s = PureState::basis_state_symmetric(sym.clone(), 0, 0).unwrap();
        let e = embed_symmetric(&s, &full).unwrap();
        let idx = full.index_full(&[Level::B, Level::B, Level::B], 0);
        assert!((e.amplitudes()[idx] - c(1.0)).norm() < 1e-15);

        // |c^2> (N=3) -> (|ccb>+|cbc>+|bcc>)/sqrt(3)
        let s = PureState::basis_state_symmetric(sym, 2, 0).unwrap();
        let e = embed_symmetric(&s, &full).unwrap();
        let idx = full.index_full(&[Level::C, Level::C, Level::B], 0);
        assert!((e.amplitudes()[idx] - c(w)).norm() < 1e-15);
    }

    #[test]
    fn embedding_preserves_inner_products() {
        let sym = BasisSpec::symmetric(4, 1);
        let full = BasisSpec::full_product(4, LevelSet::bc(), 1);
        let dim = sym.dimension().unwrap();
        let mut x = PureState::zero(sym.clone()).unwrap();
        let mut y = PureState::zero(sym.clone()).unwrap();
        for i in 0..dim {
            x.amplitudes_mut()[i] = C64::new((i as f64).sin(), 0.2 * i as f64);
            y.amplitudes_mut()[i] = C64::new(0.3 - i as f64, (i as f64).cos());
        }
        x.normalize().unwrap();
        y.normalize().unwrap();
        let ex = embed_symmetric(&x, &full).unwrap();
        let ey = embed_symmetric(&y, &full).unwrap();
        assert!((x.inner(&y).unwrap() - ex.inner(&ey).unwrap()).norm() < 1e-13);
    }

    #[test]
    fn dicke_loss_two_term_decomposition() {
        // Tr_N{|c^n><c^n|_N} = ((N-n)/N)|c^n><c^n|_{N-1} + (n/N)|c^{n-1}><c^{n-1}|_{N-1}
        for n_atoms in 2..=8usize {
            for n in 1..n_atoms {
                let sym = BasisSpec::symmetric(n_atoms, 0);
                let full = BasisSpec::full_product(n_atoms, LevelSet::bc(), 0);
                let psi = embed_symmetric(
                    &PureState::basis_state_symmetric(sym, n, 0).unwrap(),
                    &full,
                )
                .unwrap();
                let rho = partial_trace_atom_pure(&psi, n_atoms - 1).unwrap();
                assert!((rho.trace().re - 1.0).abs() < 1e-12);

                let sym_r = BasisSpec::symmetric(n_atoms - 1, 0);
                let full_r = BasisSpec::full_product(n_atoms - 1, LevelSet::bc(), 0);
                let keep = embed_symmetric(
                    &PureState::basis_state_symmetric(sym_r.clone(), n, 0).unwrap(),
                    &full_r,
                )
                .unwrap();
                let drop = embed_symmetric(
                    &PureState::basis_state_symmetric(sym_r, n - 1, 0).unwrap(),
                    &full_r,
                )
                .unwrap();
                let w_keep = rho.expectation(&keep).unwrap().re;
                let w_drop = rho.expectation(&drop).unwrap().re;
                let expect_keep = (n_atoms - n) as f64 / n_atoms as f64;
                let expect_drop = n as f64 / n_atoms as f64;
                assert!((w_keep - expect_keep).abs() < 1e-12, "N={n_atoms} n={n}");
                assert!((w_drop - expect_drop).abs() < 1e-12, "N={n_atoms} n={n}");
            }
        }
    }

    #[test]
    fn dicke_loss_off_diagonal_rule() {
        // Tr_N{|c^n><c^m|_N} = (sqrt((N-n)(N-m))/N)|c^n><c^m|_{N-1}
        //                    + (sqrt(n m)/N)|c^{n-1}><c^{m-1}|_{N-1},
        // the coherence-transfer rule behind exact off-diagonal fidelity
        // statements. Checked on the raw (non-hermitian) outer product.
        for &(n_atoms, n, m) in &[(5usize, 2usize, 1usize), (4, 3, 1), (6, 2, 4)] {
            let sym = BasisSpec::symmetric(n_atoms, 0);
            let full = BasisSpec::full_product(n_atoms, LevelSet::bc(), 0);
            let ket = embed_symmetric(
                &PureState::basis_state_symmetric(sym.clone(), n, 0).unwrap(),
                &full,
            )
            .unwrap();
            let bra = embed_symmetric(
                &PureState::basis_state_symmetric(sym, m, 0).unwrap(),
                &full,
            )
            .unwrap();
            let dim = full.dimension().unwrap();
            let mut mat = Array2::zeros((dim, dim));
            for r in 0..dim {
                for col in 0..dim {
                    mat[(r, col)] = ket.amplitudes()[r] * bra.amplitudes()[col].conj();
                }
            }
            let w = DensityOperator::new(full, mat).unwrap();
            let red = partial_trace_atom(&w, n_atoms - 1).unwrap();

            let sym_r = BasisSpec::symmetric(n_atoms - 1, 0);
            let full_r = BasisSpec::full_product(n_atoms - 1, LevelSet::bc(), 0);
            let emb = |k: usize| {
                embed_symmetric(
                    &PureState::basis_state_symmetric(sym_r.clone(), k, 0).unwrap(),
                    &full_r,
                )
                .unwrap()
            };
            let nn = n_atoms as f64;
            let keep = (((n_atoms - n) * (n_atoms - m)) as f64).sqrt() / nn;
            let lost = ((n * m) as f64).sqrt() / nn;
            // <c^n| red |c^m> and <c^{n-1}| red |c^{m-1}>.
            let element = |x: &PureState, y: &PureState| -> C64 {
                let mut acc = C64::ZERO;
                for r in 0..x.amplitudes().len() {
                    for col in 0..y.amplitudes().len() {
                        acc += x.amplitudes()[r].conj()
                            * red.matrix()[(r, col)]
                            * y.amplitudes()[col];
                    }
                }
                acc
            };
            let got_keep = element(&emb(n), &emb(m));
            let got_lost = element(&emb(n - 1), &emb(m - 1));
            assert!((got_keep - c(keep)).norm() < 1e-12, "N={n_atoms} n={n} m={m}");
            assert!((got_lost - c(lost)).norm() < 1e-12, "N={n_atoms} n={n} m={m}");
        }
    }

    #[test]
    fn flip_pair_is_projector() {
        // sigma_{mu nu}^j sigma_{nu mu}^j acts as a projector on basis states.
        let spec = BasisSpec::full_product(4, LevelSet::bc(), 0);
        let dim = spec.dimension().unwrap();
        for j in 0..4 {
            for idx in 0..dim {
                let mut st = PureState::zero(spec.clone()).unwrap();
                st.amplitudes_mut()[idx] = c(1.0);
                let once = apply_atomic_flip(
                    &apply_atomic_flip(&st, j, Level::B, Level::C).unwrap(),
                    j,
                    Level::C,
                    Level::B,
                )
                .unwrap();
                let twice = apply_atomic_flip(
                    &apply_atomic_flip(&once, j, Level::B, Level::C).unwrap(),
                    j,
                    Level::C,
                    Level::B,
                )
                .unwrap();
                assert!(once.max_amp_deviation(&twice) < 1e-15);
            }
        }
    }
}
