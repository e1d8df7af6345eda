//! Finite Hilbert spaces built from mode layouts.
//!
//! A layout is an ordered list of modes: fermionic ones (matter sites and
//! link rishons) followed by spin-1/2 ones (spin links or spin-chain sites).
//! Basis states are occupation bit-strings with mode 0 as the least
//! significant bit, ordered lexicographically (i.e. by the integer value of
//! the bit-string). Spin label 0 means `S^z = -1/2`, label 1 means
//! `S^z = +1/2`.
//!
//! Fermionic modes carry a global position used by the Jordan-Wigner signs in
//! [`crate::operators`]; the position is simply the declaration order.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};

/// One mode of a layout, identified by its tag and indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeKind {
    /// Fermionic matter mode at `site`, with a color and species index
    /// (both 0 for single-component models).
    FermionSite { site: u32, color: u32, species: u32 },
    /// Left rishon of site `site` (lives on the link entering from the left).
    RishonLeft { site: u32, color: u32 },
    /// Right rishon of site `site` (lives on the link leaving to the right).
    RishonRight { site: u32, color: u32 },
    /// Spin-1/2 gauge link between sites `link` and `link + 1`.
    SpinLink { link: u32 },
    /// Spin-1/2 site of a spin chain.
    SpinSite { site: u32 },
}

impl ModeKind {
    pub fn is_fermionic(&self) -> bool {
        matches!(
            self,
            ModeKind::FermionSite { .. } | ModeKind::RishonLeft { .. } | ModeKind::RishonRight { .. }
        )
    }

    pub fn is_spin(&self) -> bool {
        !self.is_fermionic()
    }
}

impl std::fmt::Display for ModeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModeKind::FermionSite { site, color, species } => {
                write!(f, "psi[site={site},color={color},species={species}]")
            }
            ModeKind::RishonLeft { site, color } => write!(f, "l[site={site},color={color}]"),
            ModeKind::RishonRight { site, color } => write!(f, "r[site={site},color={color}]"),
            ModeKind::SpinLink { link } => write!(f, "S[link={link}]"),
            ModeKind::SpinSite { site } => write!(f, "s[site={site}]"),
        }
    }
}

/// Diagonal counting function over occupation strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CountingFn {
    /// Total occupation of all fermionic modes.
    TotalFermions,
    /// Occupation summed over an explicit set of mode positions.
    ModeSubsetSum(Vec<usize>),
    /// Signed integer-weighted occupation sum plus an offset. Gauss-law
    /// constraints are of this form once spin values are expressed in
    /// half-units.
    WeightedSum { terms: Vec<(usize, i64)>, offset: i64 },
}

/// One sector constraint: a counting function pinned to an integer value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorConstraint {
    pub counting: CountingFn,
    pub value: i64,
}

/// A conjunction of diagonal constraints selecting a symmetry sector.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SectorFilter {
    pub constraints: Vec<SectorConstraint>,
}

impl SectorFilter {
    pub fn new(constraints: Vec<SectorConstraint>) -> Self {
        Self { constraints }
    }

    /// Fix the total fermion number.
    pub fn fermion_number(n: u32) -> Self {
        Self {
            constraints: vec![SectorConstraint {
                counting: CountingFn::TotalFermions,
                value: n as i64,
            }],
        }
    }

    pub fn and_subset_sum(mut self, modes: Vec<usize>, value: u32) -> Self {
        self.constraints.push(SectorConstraint {
            counting: CountingFn::ModeSubsetSum(modes),
            value: value as i64,
        });
        self
    }

    pub fn and_weighted_sum(mut self, terms: Vec<(usize, i64)>, offset: i64, value: i64) -> Self {
        self.constraints
            .push(SectorConstraint { counting: CountingFn::WeightedSum { terms, offset }, value });
        self
    }

    fn admits(&self, occ: u64, fermion_mask: u64) -> bool {
        self.constraints.iter().all(|c| {
            let count: i64 = match &c.counting {
                CountingFn::TotalFermions => (occ & fermion_mask).count_ones() as i64,
                CountingFn::ModeSubsetSum(modes) => {
                    modes.iter().map(|&m| ((occ >> m) & 1) as i64).sum()
                }
                CountingFn::WeightedSum { terms, offset } => {
                    offset + terms.iter().map(|&(m, w)| ((occ >> m) & 1) as i64 * w).sum::<i64>()
                }
            };
            count == c.value
        })
    }
}

/// A finite Hilbert space over a mode layout, optionally sector-restricted.
///
/// Immutable after construction; share via [`Arc`].
#[derive(Debug)]
pub struct HilbertSpace {
    modes: Vec<ModeKind>,
    n_fermion_modes: usize,
    sector: Option<SectorFilter>,
    /// Occupation string of every basis state, ascending.
    states: Vec<u64>,
    index_map: HashMap<u64, usize>,
    parent_dim: usize,
    fingerprint: u64,
}

/// Build a space from a layout and an optional sector filter.
///
/// The basis ordering is deterministic: ascending occupation bit-strings,
/// with declared mode 0 as the least significant bit.
pub fn build_space(layout: Vec<ModeKind>, sector: Option<SectorFilter>) -> Result<Arc<HilbertSpace>> {
    if layout.is_empty() {
        return Err(Error::EmptyLayout);
    }
    if layout.len() > 63 {
        return Err(Error::InvalidParameter(format!("{} modes exceed the 63-mode limit", layout.len())));
    }
    let mut seen = HashMap::new();
    for (k, mode) in layout.iter().enumerate() {
        if seen.insert(*mode, k).is_some() {
            return Err(Error::DuplicateMode(mode.to_string()));
        }
    }
    let n_fermion_modes = layout.iter().take_while(|m| m.is_fermionic()).count();
    if let Some(k) = layout[n_fermion_modes..].iter().position(|m| m.is_fermionic()) {
        return Err(Error::ModeOrdering(n_fermion_modes + k));
    }

    let n_modes = layout.len();
    let parent_dim = 1usize << n_modes;
    let fermion_mask = if n_fermion_modes == 64 { u64::MAX } else { (1u64 << n_fermion_modes) - 1 };

    let states: Vec<u64> = match &sector {
        None => (0..parent_dim as u64).collect(),
        Some(filter) => (0..parent_dim as u64)
            .filter(|&occ| filter.admits(occ, fermion_mask))
            .collect(),
    };
    if states.is_empty() {
        return Err(Error::EmptySector);
    }
    let index_map = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    let mut fingerprint = 0xcbf29ce484222325u64;
    let mut mix = |w: u64| {
        fingerprint ^= w;
        fingerprint = fingerprint.wrapping_mul(0x100000001b3);
    };
    for mode in &layout {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        use std::hash::{Hash, Hasher};
        mode.hash(&mut h);
        mix(h.finish());
    }
    for &s in &states {
        mix(s);
    }

    Ok(Arc::new(HilbertSpace {
        modes: layout,
        n_fermion_modes,
        sector,
        states,
        index_map,
        parent_dim,
        fingerprint,
    }))
}

impl HilbertSpace {
    /// Number of basis states (after any sector restriction).
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Dimension of the unrestricted parent space, `2^n_modes`.
    pub fn parent_dim(&self) -> usize {
        self.parent_dim
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn n_fermion_modes(&self) -> usize {
        self.n_fermion_modes
    }

    pub fn modes(&self) -> &[ModeKind] {
        &self.modes
    }

    pub fn sector(&self) -> Option<&SectorFilter> {
        self.sector.as_ref()
    }

    /// Position of a mode in the layout, if present.
    pub fn mode_position(&self, mode: &ModeKind) -> Option<usize> {
        self.modes.iter().position(|m| m == mode)
    }

    /// Positions of all modes matching a predicate.
    pub fn mode_positions(&self, pred: impl Fn(&ModeKind) -> bool) -> Vec<usize> {
        self.modes
            .iter()
            .enumerate()
            .filter_map(|(k, m)| pred(m).then_some(k))
            .collect()
    }

    /// Basis index of an occupation string.
    pub fn index_of(&self, occupation: u64) -> Result<usize> {
        if occupation >= self.parent_dim as u64 {
            return Err(Error::MalformedOccupation { got: 64 - occupation.leading_zeros() as usize, want: self.n_modes() });
        }
        self.index_map.get(&occupation).copied().ok_or(Error::OutsideSector(occupation))
    }

    /// Occupation string of basis state `index`.
    pub fn occupation_of(&self, index: usize) -> u64 {
        self.states[index]
    }

    /// All occupation strings, ascending. `states()[i] == occupation_of(i)`.
    pub fn states(&self) -> &[u64] {
        &self.states
    }

    /// Indices (into this space's basis) of states admitted by `filter`.
    ///
    /// Sorted ascending; may be empty. Use [`build_space`] when an empty
    /// sector should be an error.
    pub fn sector_indices(&self, filter: &SectorFilter) -> Vec<usize> {
        let fermion_mask = if self.n_fermion_modes == 64 {
            u64::MAX
        } else {
            (1u64 << self.n_fermion_modes) - 1
        };
        (0..self.dim())
            .filter(|&i| filter.admits(self.states[i], fermion_mask))
            .collect()
    }

    /// Occupation of mode `k` in basis state `index` (0 or 1).
    pub fn occ_bit(&self, index: usize, k: usize) -> u64 {
        (self.states[index] >> k) & 1
    }

    /// Structural identity used for cheap space-compatibility checks.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn same_space(&self, other: &HilbertSpace) -> bool {
        self.fingerprint == other.fingerprint && self.dim() == other.dim()
    }
}
