//! U(2) quantum link model with fermionic rishon links.
//!
//! Each building block `x` holds two-color matter fermions `psi_x^c` on the
//! site plus right/left rishons `r_x^c`, `l_x^c` on the adjacent links; the
//! link operator is `U^{cd}_{x,x+1} = r_x^c l_{x+1}^{d dag}`. The ideal
//! dynamics is the color-contracted correlated hop
//!
//! ```text
//! H_J = J sum_x sum_{c,d} psi_x^{c dag} r_x^c l_{x+1}^{d dag} psi_{x+1}^d + h.c.
//! H_m = m sum_x (-1)^x psi_x^{c dag} psi_x^c
//! ```
//!
//! The gauge symmetry splits into a U(1) generator `G_x` (density balance of
//! the block) and an SU(2) triplet `G_x^a` built from Pauli bilinears of all
//! block fermions, with `[G_x^a, G_y^b] = 2i delta_xy eps_abc G_x^c`.
//!
//! A cold-atom realization produces `H_J` from spin-changing collisions
//! together with a zoo of companion scattering processes. The full registry
//! of processes, with the relative strengths used in the reference numerics,
//! is in [`default_couplings`]; the constraint-violating Hamiltonian is the
//! sum of all registered processes minus the ideal `H_J` already counted in
//! `H0`. Processes named `*_even`/`*_odd` act only on blocks of that parity
//! (intra-species collisions differ between the two sublattice species).
//!
//! Everything is built in the one-rishon-per-link sector with one matter
//! fermion per block, where the rishon density-density processes (barred in
//! the registry) vanish identically.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hilbert::{build_space, HilbertSpace, ModeKind, SectorFilter};
use crate::operators::{creation_product_occupation, fermion_lowering, fermion_raising};
use crate::sparse::{SparseOperator, StateVector, C64};

use super::{restrict_to_sector, Boundary, ModelBundle, ModelKind};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct U2Params {
    /// Number of building blocks (sites); the ring has as many links.
    pub n_blocks: u32,
    pub j: f64,
    /// Staggered mass.
    pub m: f64,
    pub boundary: Boundary,
    /// Relative strength of every scattering process, in units of `J`.
    pub couplings: BTreeMap<String, f64>,
    /// Include processes that vanish in the one-rishon sector anyway.
    pub include_barred: bool,
}

impl Default for U2Params {
    fn default() -> Self {
        Self {
            n_blocks: 2,
            j: 1.0,
            m: 0.0,
            boundary: Boundary::Periodic,
            couplings: default_couplings(),
            include_barred: false,
        }
    }
}

/// Which blocks a registered process acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Parity {
    All,
    Even,
    Odd,
}

struct ProcessSpec {
    name: &'static str,
    default: f64,
    parity: Parity,
    barred: bool,
}

/// Registered scattering processes. Strengths are relative to `J`; values
/// for intra-species rows already include the factor 2 from exchange
/// contributions.
const REGISTRY: &[ProcessSpec] = &[
    ProcessSpec { name: "j11", default: 2.03, parity: Parity::All, barred: false },
    ProcessSpec { name: "j12", default: -0.03, parity: Parity::All, barred: false },
    ProcessSpec { name: "color_change_pair", default: 0.05, parity: Parity::All, barred: false },
    ProcessSpec { name: "color_change_hop", default: 1.97, parity: Parity::All, barred: false },
    ProcessSpec { name: "site_link_exchange_even", default: 0.64, parity: Parity::Even, barred: false },
    ProcessSpec { name: "site_link_exchange_odd", default: 0.60, parity: Parity::Odd, barred: false },
    ProcessSpec { name: "onsite_density_even", default: 0.92, parity: Parity::Even, barred: false },
    ProcessSpec { name: "onsite_density_odd", default: 0.74, parity: Parity::Odd, barred: false },
    ProcessSpec { name: "site_rishon_density_same_even", default: 0.18, parity: Parity::Even, barred: false },
    ProcessSpec { name: "site_rishon_density_same_odd", default: 0.14, parity: Parity::Odd, barred: false },
    ProcessSpec { name: "site_rishon_density_cross_even", default: 0.84, parity: Parity::Even, barred: false },
    ProcessSpec { name: "site_rishon_density_cross_odd", default: 0.74, parity: Parity::Odd, barred: false },
    ProcessSpec { name: "neighbor_rishon_density_same", default: 0.92, parity: Parity::All, barred: false },
    ProcessSpec { name: "neighbor_rishon_density_cross_12", default: 0.87, parity: Parity::All, barred: false },
    ProcessSpec { name: "neighbor_rishon_density_cross_21", default: 1.16, parity: Parity::All, barred: false },
    ProcessSpec { name: "site_link_color_flip", default: 0.39, parity: Parity::All, barred: false },
    ProcessSpec { name: "diagonal_hop", default: 1.91, parity: Parity::All, barred: false },
    ProcessSpec { name: "rishon_pair_density_even", default: 1.10, parity: Parity::Even, barred: true },
    ProcessSpec { name: "rishon_pair_density_odd", default: 0.88, parity: Parity::Odd, barred: true },
    ProcessSpec { name: "link_density_cross", default: 4.21, parity: Parity::All, barred: true },
    ProcessSpec { name: "link_density_11", default: 64.77, parity: Parity::All, barred: true },
    ProcessSpec { name: "link_density_22", default: 66.54, parity: Parity::All, barred: true },
    ProcessSpec { name: "rishon_exchange", default: 59.67, parity: Parity::All, barred: true },
];

/// The default coupling table (all registered processes).
pub fn default_couplings() -> BTreeMap<String, f64> {
    REGISTRY.iter().map(|p| (p.name.to_string(), p.default)).collect()
}

/// Names of processes that vanish identically in the one-rishon sector.
pub fn barred_process_names() -> Vec<&'static str> {
    REGISTRY.iter().filter(|p| p.barred).map(|p| p.name).collect()
}

fn spec_of(name: &str) -> Option<&'static ProcessSpec> {
    REGISTRY.iter().find(|p| p.name == name)
}

// Colors are 0-based internally; paper colors 1, 2 map to 0, 1.
fn psi(x: u32, c: u32) -> ModeKind {
    ModeKind::FermionSite { site: x, color: c, species: 0 }
}

fn rishon_r(x: u32, c: u32) -> ModeKind {
    ModeKind::RishonRight { site: x, color: c }
}

fn rishon_l(x: u32, c: u32) -> ModeKind {
    ModeKind::RishonLeft { site: x, color: c }
}

fn layout(p: &U2Params) -> Vec<ModeKind> {
    let mut modes = Vec::new();
    for x in 1..=p.n_blocks {
        for c in 0..2 {
            modes.push(psi(x, c));
        }
        for c in 0..2 {
            modes.push(rishon_r(x, c));
        }
        for c in 0..2 {
            modes.push(rishon_l(x, c));
        }
    }
    modes
}

impl U2Params {
    fn validate(&self) -> Result<()> {
        if self.boundary != Boundary::Periodic {
            return Err(Error::InvalidParameter(
                "the U(2) chain is defined on a periodic ring of blocks".into(),
            ));
        }
        if self.n_blocks < 2 || !self.n_blocks.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "n_blocks = {} must be even and >= 2",
                self.n_blocks
            )));
        }
        for name in self.couplings.keys() {
            if spec_of(name).is_none() {
                return Err(Error::UnknownProcess(name.clone()));
            }
        }
        if let (Some(w11), Some(w12)) = (self.couplings.get("j11"), self.couplings.get("j12")) {
            if ((w11 + w12) / 2.0 - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "(j11 + j12)/2 = {} must equal 1 (couplings are in units of J)",
                    (w11 + w12) / 2.0
                )));
            }
        }
        Ok(())
    }

    fn wrap(&self, x: i64) -> u32 {
        let n = self.n_blocks as i64;
        (((x - 1).rem_euclid(n)) + 1) as u32
    }
}

/// `op1 * op2 * ...` of raising (true) / lowering (false) operators on the
/// unrestricted parent space, applied as written left to right.
fn product(parent: &Arc<HilbertSpace>, ops: &[(ModeKind, bool)]) -> Result<SparseOperator> {
    let mut acc: Option<SparseOperator> = None;
    for (mode, dagger) in ops {
        let op = if *dagger {
            fermion_raising(parent, mode)?
        } else {
            fermion_lowering(parent, mode)?
        };
        acc = Some(match acc {
            None => op,
            Some(a) => a.matmul(&op)?,
        });
    }
    Ok(acc.expect("empty operator product"))
}

fn number(parent: &Arc<HilbertSpace>, mode: ModeKind) -> Result<SparseOperator> {
    crate::operators::fermion_number(parent, &mode)
}

/// One block's worth of a named process, on the parent space (coefficient 1,
/// h.c. included where the process is not already Hermitian).
fn process_term(parent: &Arc<HilbertSpace>, p: &U2Params, name: &str, x: u32) -> Result<SparseOperator> {
    let xm = p.wrap(x as i64 - 1);
    let xp = p.wrap(x as i64 + 1);
    let dag = true;
    let low = false;

    let with_hc = |t: SparseOperator| -> Result<SparseOperator> { t.add(&t.adjoint()) };

    match name {
        "j11" | "j12" => {
            // sum_c psi_{x-1}^{c dag} r_{x-1}^c l_x^{c' dag} psi_x^{c'}, with
            // c' = c for j11 and the flipped color for j12.
            let mut t = SparseOperator::zero(parent.clone());
            for c in 0..2u32 {
                let cp = if name == "j11" { c } else { 1 - c };
                t = t.add(&product(
                    parent,
                    &[(psi(xm, c), dag), (rishon_r(xm, c), low), (rishon_l(x, cp), dag), (psi(x, cp), low)],
                )?)?;
            }
            with_hc(t)
        }
        "color_change_pair" => {
            let mut t = SparseOperator::zero(parent.clone());
            for c in 0..2u32 {
                t = t.add(&product(
                    parent,
                    &[(psi(x, 1), dag), (rishon_l(x, 0), low), (psi(xm, c), dag), (rishon_r(xm, c), low)],
                )?)?;
                t = t.add(&product(
                    parent,
                    &[(rishon_l(x, c), dag), (psi(x, c), low), (rishon_r(xm, 0), dag), (psi(xm, 1), low)],
                )?)?;
            }
            with_hc(t)
        }
        "color_change_hop" => with_hc(product(
            parent,
            &[(psi(x, 1), dag), (rishon_l(x, 0), low), (rishon_r(xm, 0), dag), (psi(xm, 1), low)],
        )?),
        "site_link_exchange_even" | "site_link_exchange_odd" => {
            let t = product(
                parent,
                &[(psi(x, 1), dag), (rishon_r(x, 1), low), (rishon_r(x, 0), dag), (psi(x, 0), low)],
            )?
            .add(&product(
                parent,
                &[(psi(x, 1), dag), (rishon_l(x, 1), low), (rishon_l(x, 0), dag), (psi(x, 0), low)],
            )?)?;
            with_hc(t)
        }
        "onsite_density_even" | "onsite_density_odd" => {
            number(parent, psi(x, 0))?.matmul(&number(parent, psi(x, 1))?)
        }
        "site_rishon_density_same_even" | "site_rishon_density_same_odd" => {
            let mut t = SparseOperator::zero(parent.clone());
            for c in 0..2u32 {
                let n_site = number(parent, psi(x, c))?;
                let n_link = number(parent, rishon_r(x, c))?.add(&number(parent, rishon_l(x, c))?)?;
                t = t.add(&n_site.matmul(&n_link)?)?;
            }
            Ok(t)
        }
        "site_rishon_density_cross_even" | "site_rishon_density_cross_odd" => {
            let mut t = SparseOperator::zero(parent.clone());
            for c in 0..2u32 {
                let n_site = number(parent, psi(x, c))?;
                let n_link =
                    number(parent, rishon_r(x, 1 - c))?.add(&number(parent, rishon_l(x, 1 - c))?)?;
                t = t.add(&n_site.matmul(&n_link)?)?;
            }
            Ok(t)
        }
        "neighbor_rishon_density_same" => {
            let mut t = SparseOperator::zero(parent.clone());
            for c in 0..2u32 {
                let n_site = number(parent, psi(x, c))?;
                let n_nb = number(parent, rishon_r(xm, c))?.add(&number(parent, rishon_l(xp, c))?)?;
                t = t.add(&n_site.matmul(&n_nb)?)?;
            }
            Ok(t)
        }
        "neighbor_rishon_density_cross_12" => {
            let n_site = number(parent, psi(x, 0))?;
            let n_nb = number(parent, rishon_r(xm, 1))?.add(&number(parent, rishon_l(xp, 1))?)?;
            n_site.matmul(&n_nb)
        }
        "neighbor_rishon_density_cross_21" => {
            let n_site = number(parent, psi(x, 1))?;
            let n_nb = number(parent, rishon_r(xm, 0))?.add(&number(parent, rishon_l(xp, 0))?)?;
            n_site.matmul(&n_nb)
        }
        "site_link_color_flip" => {
            let flip_site = product(parent, &[(psi(x, 1), dag), (psi(x, 0), low)])?;
            let flips = product(parent, &[(rishon_l(xp, 0), dag), (rishon_l(xp, 1), low)])?
                .add(&product(parent, &[(rishon_r(xm, 0), dag), (rishon_r(xm, 1), low)])?)?;
            with_hc(flip_site.matmul(&flips)?)
        }
        "diagonal_hop" => with_hc(product(
            parent,
            &[(psi(xp, 0), dag), (rishon_l(xp, 1), low), (rishon_r(x, 1), dag), (psi(x, 0), low)],
        )?),
        "rishon_pair_density_even" | "rishon_pair_density_odd" => {
            let t = number(parent, rishon_r(x, 0))?.matmul(&number(parent, rishon_r(x, 1))?)?;
            t.add(&number(parent, rishon_l(x, 0))?.matmul(&number(parent, rishon_l(x, 1))?)?)
        }
        "link_density_cross" => {
            let a = number(parent, rishon_r(x, 0))?.matmul(&number(parent, rishon_l(xp, 1))?)?;
            let b = number(parent, rishon_r(x, 1))?.matmul(&number(parent, rishon_l(xp, 0))?)?;
            a.add(&b)
        }
        "link_density_11" => {
            number(parent, rishon_r(x, 0))?.matmul(&number(parent, rishon_l(xp, 0))?)
        }
        "link_density_22" => {
            number(parent, rishon_r(x, 1))?.matmul(&number(parent, rishon_l(xp, 1))?)
        }
        "rishon_exchange" => with_hc(product(
            parent,
            &[(rishon_r(x, 1), dag), (rishon_r(x, 0), low), (rishon_l(xp, 0), dag), (rishon_l(xp, 1), low)],
        )?),
        other => Err(Error::UnknownProcess(other.to_string())),
    }
}

/// Sum a process over all blocks of the right parity, on the parent space.
fn process_sum(parent: &Arc<HilbertSpace>, p: &U2Params, name: &str) -> Result<SparseOperator> {
    let spec = spec_of(name).ok_or_else(|| Error::UnknownProcess(name.to_string()))?;
    let mut total = SparseOperator::zero(parent.clone());
    for x in 1..=p.n_blocks {
        let applies = match spec.parity {
            Parity::All => true,
            Parity::Even => x % 2 == 0,
            Parity::Odd => x % 2 == 1,
        };
        if applies {
            total = total.add(&process_term(parent, p, name, x)?)?;
        }
    }
    Ok(total)
}

/// The ideal color-contracted correlated hop (unit coefficient).
fn ideal_hop(parent: &Arc<HilbertSpace>, p: &U2Params) -> Result<SparseOperator> {
    process_sum(parent, p, "j11")?.add(&process_sum(parent, p, "j12")?)
}

fn sector(p: &U2Params) -> SectorFilter {
    let modes = layout(p);
    let pos = |m: &ModeKind| modes.iter().position(|x| x == m).unwrap();
    let mut filter = SectorFilter::default();
    for x in 1..=p.n_blocks {
        let xp = p.wrap(x as i64 + 1);
        filter = filter.and_subset_sum(
            vec![
                pos(&rishon_r(x, 0)),
                pos(&rishon_r(x, 1)),
                pos(&rishon_l(xp, 0)),
                pos(&rishon_l(xp, 1)),
            ],
            1,
        );
    }
    let site_modes: Vec<usize> =
        (1..=p.n_blocks).flat_map(|x| (0..2).map(move |c| (x, c))).map(|(x, c)| pos(&psi(x, c))).collect();
    filter.and_subset_sum(site_modes, p.n_blocks)
}

/// Pauli-bilinear triplet summand `sum_{cd} f^{c dag} sigma^a_{cd} f^d` for
/// one fermion pair (colors 0, 1).
fn pauli_bilinear(
    parent: &Arc<HilbertSpace>,
    a: usize,
    mode_of: impl Fn(u32) -> ModeKind,
) -> Result<SparseOperator> {
    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    // sigma^1, sigma^2, sigma^3 entries (row, col, value)
    let entries: [&[(u32, u32, C64)]; 3] = [
        &[(0, 1, one), (1, 0, one)],
        &[(0, 1, -i), (1, 0, i)],
        &[(0, 0, one), (1, 1, -one)],
    ];
    let mut t = SparseOperator::zero(parent.clone());
    for &(c, d, v) in entries[a] {
        let term = product(parent, &[(mode_of(c), true), (mode_of(d), false)])?;
        t = t.add(&term.scale(v))?;
    }
    Ok(t)
}

/// Build the U(2) quantum link model bundle in the one-rishon sector.
pub fn build_u2_model(p: &U2Params) -> Result<ModelBundle> {
    p.validate()?;
    let parent = build_space(layout(p), None)?;
    let space = build_space(layout(p), Some(sector(p)))?;
    let j = C64::new(p.j, 0.0);

    // H0 = H_J + H_m
    let h_j = ideal_hop(&parent, p)?.scale(j);
    let mass_diag: Vec<C64> = parent
        .states()
        .iter()
        .map(|&occ| {
            let mut e = 0.0;
            for x in 1..=p.n_blocks {
                let sign = if x % 2 == 0 { 1.0 } else { -1.0 };
                for c in 0..2u32 {
                    let pos = ((x - 1) * 6 + c) as usize;
                    if occ >> pos & 1 == 1 {
                        e += p.m * sign;
                    }
                }
            }
            C64::new(e, 0.0)
        })
        .collect();
    let h_m = SparseOperator::from_diagonal(parent.clone(), &mass_diag);
    let h0 = restrict_to_sector(&h_j.add(&h_m)?, &space);

    // H1 = all registered processes at their strengths, minus the ideal hop.
    let mut h1_parent = h_j.scale(C64::new(-1.0, 0.0));
    for (name, &weight) in &p.couplings {
        let spec = spec_of(name).expect("validated");
        if spec.barred && !p.include_barred {
            continue;
        }
        if weight == 0.0 {
            continue;
        }
        h1_parent = h1_parent.add(&process_sum(&parent, p, name)?.scale(j * C64::new(weight, 0.0)))?;
    }
    let h1 = restrict_to_sector(&h1_parent, &space);

    // U(1) generators: diagonal density balances.
    let mut generators = Vec::new();
    let mut labels = Vec::new();
    for x in 1..=p.n_blocks {
        let xm = p.wrap(x as i64 - 1);
        let xp = p.wrap(x as i64 + 1);
        let diag: Vec<C64> = space
            .states()
            .iter()
            .map(|&occ| {
                let modes = layout(p);
                let pos = |m: &ModeKind| modes.iter().position(|q| q == m).unwrap();
                let n = |m: ModeKind| (occ >> pos(&m) & 1) as f64;
                let mut g = -1.0;
                for c in 0..2u32 {
                    g += n(psi(x, c));
                    g -= (n(rishon_l(xp, c)) - n(rishon_r(x, c))) / 2.0;
                    g += (n(rishon_l(x, c)) - n(rishon_r(xm, c))) / 2.0;
                }
                C64::new(g, 0.0)
            })
            .collect();
        generators.push(SparseOperator::from_diagonal(space.clone(), &diag));
        labels.push(format!("G_x={x}"));
    }
    // SU(2) generators: Pauli bilinears over site + both rishons of a block.
    for x in 1..=p.n_blocks {
        for a in 0..3usize {
            let g_parent = pauli_bilinear(&parent, a, |c| psi(x, c))?
                .add(&pauli_bilinear(&parent, a, |c| rishon_r(x, c))?)?
                .add(&pauli_bilinear(&parent, a, |c| rishon_l(x, c))?)?;
            generators.push(restrict_to_sector(&g_parent, &space));
            labels.push(format!("G^{}_x={x}", a + 1));
        }
    }

    let n_fermions_diag: Vec<C64> = space
        .states()
        .iter()
        .map(|&occ| C64::new(occ.count_ones() as f64, 0.0))
        .collect();
    let n_total = SparseOperator::from_diagonal(space.clone(), &n_fermions_diag);

    let max_weight = p.couplings.values().fold(1.0f64, |m, w| m.max(w.abs()));
    let energy_scale = (p.j.abs() * max_weight).max(p.m.abs());
    ModelBundle::assemble(
        ModelKind::U2(p.clone()),
        space,
        h0,
        h1,
        generators,
        labels,
        vec![("fermion_number".into(), n_total)],
        p.n_blocks as usize,
        energy_scale,
    )
}

/// The gauge-invariant product of per-block color singlets,
/// `prod_x (l_x^{1 dag} psi_x^{2 dag} - l_x^{2 dag} psi_x^{1 dag}) / sqrt(2) |0>`.
pub fn singlet_initial_state(bundle: &ModelBundle) -> Result<StateVector> {
    let p = match &bundle.kind {
        ModelKind::U2(p) => p,
        _ => return Err(Error::InvalidParameter("singlet_initial_state needs a U(2) bundle".into())),
    };
    let space = &bundle.space;
    let parent = build_space(layout(p), None)?;
    let mut amplitudes = DVector::zeros(space.dim());
    let norm = (1.0 / 2f64.sqrt()).powi(p.n_blocks as i32);

    // Expand the singlet product: one term per color assignment.
    let n = p.n_blocks;
    for assignment in 0..(1u32 << n) {
        let mut modes: Vec<ModeKind> = Vec::with_capacity(2 * n as usize);
        let mut coeff = norm;
        for x in 1..=n {
            // color bit 0: l^1 psi^2 (+), bit 1: l^2 psi^1 (-)
            let bit = assignment >> (x - 1) & 1;
            if bit == 0 {
                modes.push(rishon_l(x, 0));
                modes.push(psi(x, 1));
            } else {
                modes.push(rishon_l(x, 1));
                modes.push(psi(x, 0));
                coeff = -coeff;
            }
        }
        let mode_refs: Vec<&ModeKind> = modes.iter().collect();
        if let Some((occ, sign)) = creation_product_occupation(&parent, &mode_refs)? {
            let idx = space.index_of(occ).map_err(|_| Error::SectorLeak(1.0))?;
            amplitudes[idx] += C64::new(coeff * sign, 0.0);
        }
    }
    let psi0 = StateVector::new(space.clone(), amplitudes)?;
    let norm_err = (psi0.norm() - 1.0).abs();
    if norm_err > 1e-12 {
        return Err(Error::SectorLeak(norm_err));
    }
    Ok(psi0)
}
