//! Hamiltonians of the ℤ₂ gauge theory in its four formulations.
//!
//! * fermionic: `H = hΣZ + bΣXXXX + JΣ(ψ†_x X_ℓ ψ_y + h.c.) + mΣ(−1)^x N_x`,
//!   with Jordan–Wigner fermions over the global site order (oracle only);
//! * hardcore `H⁽¹⁾` (matter spins, links);
//! * gauge-eliminated `H⁽⁰⁾` (matter only, open chains);
//! * matter-eliminated `Ĥ = Ĥ_E + Ĥ_m + Ĥ_GM` (links only).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use log::warn;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lattice::{Boundary, LatticeLayout, RegisterKind, RegisterLayout, SectorSpec};
use crate::pauli::{OperatorSum, PauliAxis, PauliString, C64};
use crate::term_spec::TermSpec;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub h: f64,
    pub b: f64,
    pub j: f64,
    pub m: f64,
}

impl ModelParams {
    pub fn new(h: f64, j: f64, m: f64) -> Self {
        Self { h, b: 0.0, j, m }
    }

    pub fn with_b(mut self, b: f64) -> Self {
        self.b = b;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FrameTag {
    Fermionic,
    Hardcore,
    GaugeEliminated,
    MatterEliminated,
}

impl FrameTag {
    pub const ALL: [FrameTag; 4] =
        [FrameTag::Fermionic, FrameTag::Hardcore, FrameTag::GaugeEliminated, FrameTag::MatterEliminated];

    pub fn name(self) -> &'static str {
        match self {
            FrameTag::Fermionic => "fermionic",
            FrameTag::Hardcore => "hardcore",
            FrameTag::GaugeEliminated => "gauge_eliminated",
            FrameTag::MatterEliminated => "matter_eliminated",
        }
    }
}

impl fmt::Display for FrameTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FrameTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FrameTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown frame `{s}`")))
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianFrame {
    pub tag: FrameTag,
    pub operator: OperatorSum,
    pub layout: LatticeLayout,
    pub register: RegisterLayout,
    /// Set for frames whose operator is only meaningful inside one sector.
    pub sector: Option<SectorSpec>,
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn z_string(reg: usize, qubits: impl IntoIterator<Item = usize>, c: f64) -> Result<OperatorSum> {
    OperatorSum::from_string(reg, re(c), PauliString::uniform(qubits, PauliAxis::Z)?)
}

fn sum_all(reg: usize, parts: impl IntoIterator<Item = Result<OperatorSum>>) -> Result<OperatorSum> {
    let mut acc = OperatorSum::zero(reg);
    for p in parts {
        acc = acc.add(&p?)?;
    }
    Ok(acc)
}

/// `H_fermionic − H⁽¹⁾` is this constant, `(m/2)Σ_x(−1)^x`; it vanishes
/// whenever the lattice has as many even as odd sites.
pub fn mass_offset(layout: &LatticeLayout, params: &ModelParams) -> f64 {
    0.5 * params.m * (0..layout.num_sites()).map(|s| layout.site_sign(s)).sum::<f64>()
}

fn warn_b(layout: &LatticeLayout, params: &ModelParams) {
    if layout.dim() == 1 && params.b != 0.0 {
        warn!("b = {} ignored: chains have no plaquettes", params.b);
    }
}

/// `ψ_s = (Π_{k<s} Z_k) σ^-_s` on the full register.
pub fn jw_annihilator(reg: &RegisterLayout, site: usize) -> Result<OperatorSum> {
    let n = reg.total();
    let string = z_string(n, (0..site).map(|k| reg.site_qubit(k).unwrap()), 1.0)?;
    string.mul(&OperatorSum::sigma_minus(n, reg.site_qubit(site).unwrap())?)
}

/// Jordan–Wigner image of the fermionic Hamiltonian on the full register.
pub fn build_fermionic(layout: &LatticeLayout, params: &ModelParams) -> Result<HamiltonianFrame> {
    warn_b(layout, params);
    let reg = RegisterLayout::full(layout);
    let n = reg.total();
    let mut parts = Vec::new();
    for l in 0..layout.num_links() {
        parts.push(z_string(n, [reg.link_qubit(l).unwrap()], params.h));
    }
    if layout.dim() == 2 && params.b != 0.0 {
        for p in layout.plaquettes() {
            let s = PauliString::uniform(p.iter().map(|&l| reg.link_qubit(l).unwrap()), PauliAxis::X)?;
            parts.push(OperatorSum::from_string(n, re(params.b), s));
        }
    }
    let psi: Vec<OperatorSum> = (0..layout.num_sites()).map(|s| jw_annihilator(&reg, s)).collect::<Result<_>>()?;
    for (l, link) in layout.links().iter().enumerate() {
        let x = OperatorSum::pauli(n, reg.link_qubit(l).unwrap(), PauliAxis::X)?;
        let hop = psi[link.from].adjoint().mul(&x)?.mul(&psi[link.to])?;
        parts.push(Ok(hop.add(&hop.adjoint())?.scale_re(params.j)));
    }
    for s in 0..layout.num_sites() {
        let num = psi[s].adjoint().mul(&psi[s])?;
        parts.push(Ok(num.scale_re(params.m * layout.site_sign(s))));
    }
    Ok(HamiltonianFrame {
        tag: FrameTag::Fermionic,
        operator: sum_all(n, parts)?,
        layout: layout.clone(),
        register: reg,
        sector: None,
    })
}

/// Dense fermionic Hamiltonian on the full register.
pub fn build_fermionic_dense(layout: &LatticeLayout, params: &ModelParams, cap: usize) -> Result<DMatrix<C64>> {
    let n = RegisterLayout::full(layout).total();
    if n > cap {
        return Err(Error::CapExceeded { qubits: n, cap });
    }
    build_fermionic(layout, params)?.operator.to_dense(cap)
}

/// Hardcore-boson Hamiltonian `H⁽¹⁾`. Chains use the closed form
/// `hΣZ_n − Σ(iJ Z_{n−1}σ^+_n X_n σ^-_{n+1} + h.c.) + (m/2)Σ(−1)^n σ^z_n`;
/// square lattices take hopping and plaquette terms from `term_spec`.
pub fn build_hardcore_h1(
    layout: &LatticeLayout,
    params: &ModelParams,
    term_spec: Option<&TermSpec>,
) -> Result<HamiltonianFrame> {
    warn_b(layout, params);
    let reg = RegisterLayout::full(layout);
    let n = reg.total();
    let mut parts = Vec::new();
    for l in 0..layout.num_links() {
        parts.push(z_string(n, [reg.link_qubit(l).unwrap()], params.h));
    }
    for s in 0..layout.num_sites() {
        parts.push(z_string(n, [reg.site_qubit(s).unwrap()], 0.5 * params.m * layout.site_sign(s)));
    }
    match layout.dim() {
        1 => {
            let nl = layout.num_links() as i64;
            for k in 1..=nl {
                let site_q = |m: i64| reg.site_qubit(layout.chain_site(m).unwrap()).unwrap();
                let link_q = |m: i64| layout.chain_link(m).map(|l| reg.link_qubit(l).unwrap());
                let mut core = OperatorSum::sigma_plus(n, site_q(k))?
                    .mul(&OperatorSum::pauli(n, link_q(k).unwrap(), PauliAxis::X)?)?
                    .mul(&OperatorSum::sigma_minus(n, site_q(k + 1))?)?;
                if let Some(q) = link_q(k - 1) {
                    core = OperatorSum::pauli(n, q, PauliAxis::Z)?.mul(&core)?;
                }
                let t = core.scale(C64::new(0.0, params.j));
                parts.push(Ok(t.add(&t.adjoint())?.scale_re(-1.0)));
            }
        }
        _ => {
            let spec = term_spec
                .ok_or_else(|| Error::InvalidArgument("square lattices need a term spec for H1".into()))?;
            parts.push(spec.instantiate(layout, params));
        }
    }
    let op = sum_all(n, parts)?;
    check_gauge_invariance(layout, &op)?;
    Ok(HamiltonianFrame { tag: FrameTag::Hardcore, operator: op, layout: layout.clone(), register: reg, sector: None })
}

/// Every Gauss operator must commute exactly with `op` (full register).
pub fn check_gauge_invariance(layout: &LatticeLayout, op: &OperatorSum) -> Result<()> {
    for s in 0..layout.num_sites() {
        let g = crate::lattice::gauss_operator(layout, s, crate::lattice::MatterKind::Hardcore)?;
        if !op.commutes_with(&g)? {
            return Err(Error::GaugeViolation(format!("{:?}", layout.coords(s))));
        }
    }
    Ok(())
}

/// `Π_{k≤n} (−e^{iπq_k})`: the sign of the electric string on link `n`.
pub fn electric_string_sign(sector: &SectorSpec, n: usize) -> f64 {
    (0..n).map(|k| sector.matter_sign(k)).product()
}

/// Gauge-eliminated `H⁽⁰⁾` on `L` site qubits (open chain):
/// `Σ_n [h·s_n Z_1⋯Z_n − (J/2)(X_nX_{n+1} + Y_nY_{n+1})] + (m/2)Σ(−1)^n Z_n`.
pub fn build_gauge_eliminated_h0(layout: &LatticeLayout, params: &ModelParams, sector: &SectorSpec) -> Result<HamiltonianFrame> {
    if layout.dim() != 1 || layout.boundary() != Boundary::Open {
        return Err(Error::Unsupported("gauge elimination needs an open chain".into()));
    }
    warn_b(layout, params);
    let l = layout.chain_len();
    let mut parts = Vec::new();
    for k in 1..l {
        parts.push(z_string(l, 0..k, params.h * electric_string_sign(sector, k)));
        for axis in [PauliAxis::X, PauliAxis::Y] {
            let s = PauliString::uniform([k - 1, k], axis)?;
            parts.push(OperatorSum::from_string(l, re(-0.5 * params.j), s));
        }
    }
    for s in 0..l {
        parts.push(z_string(l, [s], 0.5 * params.m * layout.site_sign(s)));
    }
    Ok(HamiltonianFrame {
        tag: FrameTag::GaugeEliminated,
        operator: sum_all(l, parts)?,
        layout: layout.clone(),
        register: RegisterLayout::new(layout, RegisterKind::MatterOnly),
        sector: Some(sector.clone()),
    })
}

/// `Π(−σ^z)` eigenvalue forced by the sector on an open chain.
pub fn sector_parity(sector: &SectorSpec) -> f64 {
    (0..sector.q.len()).map(|s| sector.charge_sign(s)).product()
}

/// The three pieces of `Ĥ` and their sum.
#[derive(Clone, Debug)]
pub struct MatterEliminated {
    pub electric: OperatorSum,
    pub mass: OperatorSum,
    pub interaction: OperatorSum,
    pub total: OperatorSum,
}

impl MatterEliminated {
    pub fn frame(&self, layout: &LatticeLayout) -> HamiltonianFrame {
        HamiltonianFrame {
            tag: FrameTag::MatterEliminated,
            operator: self.total.clone(),
            layout: layout.clone(),
            register: RegisterLayout::new(layout, RegisterKind::LinksOnly),
            sector: Some(SectorSpec::staggered(layout)),
        }
    }
}

/// `S_n` on the link-only register.
pub fn star_links(layout: &LatticeLayout, site: usize, coeff: f64) -> Result<OperatorSum> {
    z_string(layout.num_links(), layout.star(site)?, coeff)
}

/// Closed-form chain `Ĥ` in the staggered sector:
/// `Ĥ_E = Σ(hZ_n + (J/2)Y_n)`, `Ĥ_m = −(m/2)Σ S_n`,
/// `Ĥ_GM = (J/2)Σ Z_{n−1}Y_nZ_{n+1}` (missing links dropped at open ends).
pub fn build_matter_eliminated_hat(layout: &LatticeLayout, params: &ModelParams) -> Result<MatterEliminated> {
    if layout.dim() != 1 {
        return Err(Error::Unsupported("square-lattice Ĥ comes from the transformation pipeline".into()));
    }
    warn_b(layout, params);
    let nl = layout.num_links();
    let mut e = Vec::new();
    let mut gm = Vec::new();
    for k in 1..=nl as i64 {
        let q = layout.chain_link(k).unwrap();
        e.push(z_string(nl, [q], params.h));
        e.push(OperatorSum::pauli(nl, q, PauliAxis::Y).map(|o| o.scale_re(0.5 * params.j)));
        let mut ops = vec![(q, PauliAxis::Y)];
        for nb in [k - 1, k + 1] {
            if let Some(p) = layout.chain_link(nb) {
                ops.push((p, PauliAxis::Z));
            }
        }
        // L = 2 periodic: both neighbors are the same link and cancel
        let (phase, s) = ops.iter().fold((0u8, PauliString::identity()), |(k0, acc), &(q, a)| {
            let (k1, s) = acc.mul(&PauliString::single(q, a));
            ((k0 + k1) % 4, s)
        });
        gm.push(OperatorSum::from_string(nl, crate::pauli::i_pow(phase) * (0.5 * params.j), s));
    }
    let mass: Vec<_> = (0..layout.num_sites()).map(|s| star_links(layout, s, -0.5 * params.m)).collect();
    let electric = sum_all(nl, e)?;
    let interaction = sum_all(nl, gm)?;
    let mass = sum_all(nl, mass)?;
    let total = electric.add(&mass)?.add(&interaction)?;
    Ok(MatterEliminated { electric, mass, interaction, total })
}

/// Link pairs `(n, n+1)` (and `(L, 1)` when periodic) that carry the CZ
/// gates of `U^CZ`, as link-register indices; odd `n` first, then even, so
/// each half is a layer of disjoint pairs.
pub fn cz_pairs(layout: &LatticeLayout) -> Vec<(usize, usize)> {
    let nl = layout.num_links() as i64;
    let last = if layout.boundary() == Boundary::Periodic { nl } else { nl - 1 };
    let pair = |k: i64| (layout.chain_link(k).unwrap(), layout.chain_link(k + 1).unwrap());
    (1..=last).step_by(2).chain((2..=last).step_by(2)).map(pair).collect()
}

#[derive(Clone, Debug)]
pub struct HybridPieces {
    pub h_z: OperatorSum,
    pub h_y: OperatorSum,
    pub h_z_hat: OperatorSum,
    pub h_e_hat: OperatorSum,
}

/// `H_Z` with `e^{−iεH_Z} ∝ U^CZ`, `H_Y = (J/2)ΣY`, `Ĥ_Z = H_Z + Ĥ_m`, `Ĥ_E`.
/// `H_Z` drops its constant: `Σ_pairs [−(π/4ε) Z_aZ_b + (π/4ε)(Z_a + Z_b)]`.
pub fn build_hybrid_pieces(layout: &LatticeLayout, params: &ModelParams, eps: f64) -> Result<HybridPieces> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("Trotter step must be positive, got {eps}")));
    }
    let hat = build_matter_eliminated_hat(layout, params)?;
    let nl = layout.num_links();
    let w = PI / (4.0 * eps);
    let mut hz = Vec::new();
    for (a, b) in cz_pairs(layout) {
        hz.push(z_string(nl, [a, b], -w));
        hz.push(z_string(nl, [a], w));
        hz.push(z_string(nl, [b], w));
    }
    let h_z = sum_all(nl, hz)?;
    let h_y = sum_all(nl, (0..nl).map(|q| OperatorSum::pauli(nl, q, PauliAxis::Y).map(|o| o.scale_re(0.5 * params.j))))?;
    let h_z_hat = h_z.add(&hat.mass)?;
    Ok(HybridPieces { h_z, h_y, h_z_hat, h_e_hat: hat.electric })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(l: usize, b: Boundary) -> LatticeLayout {
        LatticeLayout::chain(l, b).unwrap()
    }

    #[test]
    fn h1_term_count_periodic_l4() {
        let lay = chain(4, Boundary::Periodic);
        let h1 = build_hardcore_h1(&lay, &ModelParams::new(1.0, 1.0, 1.0), None).unwrap();
        assert_eq!(h1.operator.len(), 16);
        assert!(h1.operator.is_hermitian(0.0));
    }

    #[test]
    fn h1_hopping_expansion() {
        // −(iJ σ^+_a σ^-_b + h.c.) = −(J/2)(X_aY_b − Y_aX_b) for a bare bond
        let lay = chain(2, Boundary::Open);
        let h1 = build_hardcore_h1(&lay, &ModelParams::new(0.0, 2.0, 0.0), None).unwrap();
        let want = OperatorSum::from_text("-1 0 X0 X2 Y1\n1 0 Y0 X1 X2\n").unwrap();
        let want = want.remap(3, |q| q).unwrap();
        assert!(h1.operator.approx_eq(&want, 1e-15), "{}", h1.operator.to_text());
    }

    #[test]
    fn h0_two_sites() {
        let lay = chain(2, Boundary::Open);
        let p = ModelParams::new(0.3, 0.7, 1.1);
        let h0 = build_gauge_eliminated_h0(&lay, &p, &SectorSpec::staggered(&lay)).unwrap();
        let want = OperatorSum::from_text(&format!(
            "{} 0 Z0\n{} 0 X0 X1\n{} 0 Y0 Y1\n{} 0 Z0\n{} 0 Z1\n",
            p.h,
            -p.j / 2.0,
            -p.j / 2.0,
            -p.m / 2.0,
            p.m / 2.0
        ))
        .unwrap();
        assert!(h0.operator.approx_eq(&want, 1e-15));
        assert!(build_gauge_eliminated_h0(&chain(4, Boundary::Periodic), &p, &SectorSpec::staggered(&lay)).is_err());
    }

    #[test]
    fn electric_sign_sequence() {
        let lay = chain(4, Boundary::Open);
        let s = SectorSpec::staggered(&lay);
        let signs: Vec<f64> = (1..=4).map(|n| electric_string_sign(&s, n)).collect();
        assert_eq!(signs, vec![1.0, -1.0, -1.0, 1.0]);
        for n in 1..=12usize {
            let closed = if (n * (n + 3) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let lay = chain(12, Boundary::Open);
            assert_eq!(electric_string_sign(&SectorSpec::staggered(&lay), n), closed);
        }
    }

    #[test]
    fn hat_term_counts() {
        let lay = chain(4, Boundary::Periodic);
        let hat = build_matter_eliminated_hat(&lay, &ModelParams::new(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(hat.electric.len(), 8);
        assert_eq!(hat.mass.len(), 4);
        assert_eq!(hat.interaction.len(), 4);
        assert_eq!(hat.total.len(), 16);
        let ising = build_matter_eliminated_hat(&lay, &ModelParams::new(1.0, 0.0, 1.0)).unwrap();
        assert!(ising.total.terms().iter().all(|t| t.string.iter().all(|(_, a)| a == PauliAxis::Z)));
    }

    #[test]
    fn hybrid_requires_positive_step() {
        let lay = chain(4, Boundary::Periodic);
        assert!(build_hybrid_pieces(&lay, &ModelParams::new(1.0, 1.0, 1.0), 0.0).is_err());
        let p = build_hybrid_pieces(&lay, &ModelParams::new(1.0, 1.0, 0.0), 0.1).unwrap();
        assert!(p.h_z_hat.approx_eq(&p.h_z, 0.0));
    }

    #[test]
    fn frame_names_round_trip() {
        for t in FrameTag::ALL {
            assert_eq!(t.name().parse::<FrameTag>().unwrap(), t);
        }
        assert!("bogus".parse::<FrameTag>().is_err());
    }
}
