//! Gauge- and matter-elimination transformations.
//!
//! `U0` (open chains) decouples the links so each can be fixed to `Z = +1`;
//! `U2` (any dimension) rotates the Gauss law onto the matter spins, which
//! are then projected onto `|out⟩` (all down) and dropped. `V` removes the
//! residual staggering in the staggered sector.
//!
//! Every controlled factor is a [`GateKind::ParityCtrlX`], so the symbolic
//! route is exact Clifford propagation; the dense builders below go through
//! the defining operator products instead and serve as independent checks.

use log::info;
use nalgebra::DMatrix;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::clifford::conjugate_by_gates;
use crate::error::{Error, Result};
use crate::exact::Statevector;
use crate::lattice::{Boundary, LatticeLayout, RegisterLayout, SectorSpec};
use crate::pauli::{OperatorSum, PauliAxis, PauliString, PauliTerm, C64};

fn sign_i8(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else {
        -1
    }
}

fn require_open_chain(layout: &LatticeLayout) -> Result<()> {
    if layout.dim() != 1 || layout.boundary() != Boundary::Open {
        return Err(Error::Unsupported("gauge-field elimination needs an open chain".into()));
    }
    Ok(())
}

/// `U0 = Π_n (P⁺_{X_n} + P⁻_{X_n} D_n)` with `D_n = Π_{k≤n} e^{iπ(N_k+q_k)}`,
/// i.e. `X_n` applied when `D_n = −1`; full register.
pub fn u0_circuit(layout: &LatticeLayout, sector: &SectorSpec) -> Result<Circuit> {
    require_open_chain(layout)?;
    let reg = RegisterLayout::full(layout);
    let mut c = Circuit::new(reg.total());
    let mut sign = 1.0;
    for n in 0..layout.num_links() {
        sign *= sector.matter_sign(n);
        let controls = (0..=n).map(|k| reg.site_qubit(k).unwrap()).collect();
        let target = reg.link_qubit(n).unwrap();
        c.push(Gate::labeled(GateKind::ParityCtrlX { controls, target, sign: sign_i8(-sign) }, "U0"));
    }
    Ok(c)
}

/// Dense `U0` from its defining product (no circuit involved).
pub fn build_u0(layout: &LatticeLayout, sector: &SectorSpec, cap: usize) -> Result<DMatrix<C64>> {
    require_open_chain(layout)?;
    let reg = RegisterLayout::full(layout);
    let n = reg.total();
    if n > cap {
        return Err(Error::CapExceeded { qubits: n, cap });
    }
    let one = OperatorSum::identity(n);
    let mut u = one.clone();
    let mut sign = 1.0;
    for l in 0..layout.num_links() {
        sign *= sector.matter_sign(l);
        let x = OperatorSum::pauli(n, reg.link_qubit(l).unwrap(), PauliAxis::X)?;
        let plus = one.add(&x)?.scale_re(0.5);
        let minus = one.sub(&x)?.scale_re(0.5);
        let d = OperatorSum::from_string(
            n,
            C64::new(sign, 0.0),
            PauliString::uniform((0..=l).map(|k| reg.site_qubit(k).unwrap()), PauliAxis::Z)?,
        )?;
        u = u.mul(&plus.add(&minus.mul(&d)?)?)?;
    }
    u.to_dense(cap)
}

/// `U2 = Π_x (P⁺_x σ^x_x + P⁻_x)` with `P^± = (1 ± c_x S_x)/2`, where
/// `c_x = −(−1)^{q_x}`; full register.
pub fn u2_circuit(layout: &LatticeLayout, sector: &SectorSpec) -> Result<Circuit> {
    let reg = RegisterLayout::full(layout);
    let mut c = Circuit::new(reg.total());
    for s in 0..layout.num_sites() {
        let controls = layout.star(s)?.into_iter().map(|l| reg.link_qubit(l).unwrap()).collect();
        let target = reg.site_qubit(s).unwrap();
        c.push(Gate::labeled(GateKind::ParityCtrlX { controls, target, sign: sign_i8(sector.matter_sign(s)) }, "U2"));
    }
    Ok(c)
}

/// The factors `𝒰_x` as operator sums on the full register.
pub fn u2_factors(layout: &LatticeLayout, sector: &SectorSpec) -> Result<Vec<OperatorSum>> {
    let reg = RegisterLayout::full(layout);
    let n = reg.total();
    let one = OperatorSum::identity(n);
    (0..layout.num_sites())
        .map(|s| {
            let star = OperatorSum::from_string(
                n,
                C64::new(sector.matter_sign(s), 0.0),
                PauliString::uniform(layout.star(s)?.into_iter().map(|l| reg.link_qubit(l).unwrap()), PauliAxis::Z)?,
            )?;
            let plus = one.add(&star)?.scale_re(0.5);
            let minus = one.sub(&star)?.scale_re(0.5);
            plus.mul(&OperatorSum::pauli(n, reg.site_qubit(s).unwrap(), PauliAxis::X)?)?.add(&minus)
        })
        .collect()
}

/// Dense `U2` from the product of its factors.
pub fn build_u2(layout: &LatticeLayout, sector: &SectorSpec, cap: usize) -> Result<DMatrix<C64>> {
    let n = RegisterLayout::full(layout).total();
    if n > cap {
        return Err(Error::CapExceeded { qubits: n, cap });
    }
    let mut u = OperatorSum::identity(n);
    for f in u2_factors(layout, sector)? {
        u = u.mul(&f)?;
    }
    u.to_dense(cap)
}

/// Links flipped by `V`: even 1-based labels on chains, links leaving
/// sites with even `x1 + x2` on square lattices.
pub fn destagger_links(layout: &LatticeLayout) -> Result<Vec<usize>> {
    match layout.dim() {
        1 => {
            if layout.chain_len() % 2 == 1 {
                return Err(Error::InvalidArgument(format!(
                    "destaggering needs an even number of sites, got {}",
                    layout.chain_len()
                )));
            }
            Ok((0..layout.num_links()).filter(|l| l % 2 == 1).collect())
        }
        _ => Ok((0..layout.num_links())
            .filter(|&l| {
                let c = layout.coords(layout.links()[l].from);
                (c[0] + c[1]).is_multiple_of(2)
            })
            .collect()),
    }
}

/// `V` as a layer of `Z` gates on the link-only register.
pub fn destagger_v(layout: &LatticeLayout) -> Result<Circuit> {
    let mut c = Circuit::new(layout.num_links());
    for l in destagger_links(layout)? {
        c.push(Gate::labeled(GateKind::Pauli { q: l, axis: PauliAxis::Z }, "V"));
    }
    Ok(c)
}

/// Replaces `Z` on each fixed qubit by its value and drops those qubits;
/// the kept qubits are renumbered in order. Every term must act as `I` or
/// `Z` on the fixed qubits, which is checked through commutation with `Z`.
pub fn fix_qubits(a: &OperatorSum, fixed: &[(usize, f64)]) -> Result<OperatorSum> {
    let n = a.register_size();
    for &(q, _) in fixed {
        if !a.commutes_with(&OperatorSum::pauli(n, q, PauliAxis::Z)?)? {
            return Err(Error::NotBlockDiagonal(q));
        }
    }
    let mut value = vec![None; n];
    for &(q, v) in fixed {
        value[q] = Some(v);
    }
    let mut new_index = vec![usize::MAX; n];
    let mut k = 0;
    for q in 0..n {
        if value[q].is_none() {
            new_index[q] = k;
            k += 1;
        }
    }
    let mut terms = Vec::with_capacity(a.len());
    for t in a.terms() {
        let mut c = t.coeff;
        let mut ops = Vec::new();
        for (q, axis) in t.string.iter() {
            match value[q] {
                Some(v) => c *= v,
                None => ops.push((new_index[q], axis)),
            }
        }
        terms.push(PauliTerm::new(c, PauliString::new(ops)?));
    }
    OperatorSum::from_terms(k, terms)
}

/// `⟨out| A |out⟩` with every matter spin down; full → link-only register.
pub fn project_out(a: &OperatorSum, layout: &LatticeLayout) -> Result<OperatorSum> {
    let reg = RegisterLayout::full(layout);
    if a.register_size() != reg.total() {
        return Err(Error::RegisterMismatch(a.register_size(), reg.total()));
    }
    let fixed: Vec<_> = (0..layout.num_sites()).map(|s| (reg.site_qubit(s).unwrap(), -1.0)).collect();
    fix_qubits(a, &fixed)
}

/// Fixes every link to `Z = +1`; full → matter-only register.
pub fn project_links(a: &OperatorSum, layout: &LatticeLayout) -> Result<OperatorSum> {
    let reg = RegisterLayout::full(layout);
    if a.register_size() != reg.total() {
        return Err(Error::RegisterMismatch(a.register_size(), reg.total()));
    }
    let fixed: Vec<_> = (0..layout.num_links()).map(|l| (reg.link_qubit(l).unwrap(), 1.0)).collect();
    fix_qubits(a, &fixed)
}

/// `U0 A U0†` with links fixed to `+1`: the gauge-eliminated image of a
/// full-register operator.
pub fn eliminate_gauge_fields(a: &OperatorSum, layout: &LatticeLayout, sector: &SectorSpec) -> Result<OperatorSum> {
    project_links(&conjugate_by_gates(a, &u0_circuit(layout, sector)?)?, layout)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MassHandling {
    /// Replace matter `σ^z_x` by `c_x S_x` before conjugating.
    #[default]
    Effective,
    /// Conjugate the bare mass term.
    Raw,
}

/// Terms built only from `Z`s get every matter `σ^z_x` replaced by its
/// sector value `c_x S_x`.
pub fn effective_mass(a: &OperatorSum, layout: &LatticeLayout, sector: &SectorSpec) -> Result<OperatorSum> {
    let reg = RegisterLayout::full(layout);
    let n = reg.total();
    let site_of: Vec<Option<usize>> =
        (0..n).map(|q| (0..layout.num_sites()).find(|&s| reg.site_qubit(s) == Some(q))).collect();
    let mut out = OperatorSum::zero(n);
    for t in a.terms() {
        let all_z = t.string.iter().all(|(_, ax)| ax == PauliAxis::Z);
        let touches_matter = t.string.qubits().any(|q| site_of[q].is_some());
        if !(all_z && touches_matter) {
            out = out.add(&OperatorSum::from_terms(n, vec![t.clone()])?)?;
            continue;
        }
        let mut acc = OperatorSum::scalar(n, t.coeff);
        for q in t.string.qubits() {
            let f = match site_of[q] {
                Some(s) => OperatorSum::from_string(
                    n,
                    C64::new(sector.matter_sign(s), 0.0),
                    PauliString::uniform(layout.star(s)?.into_iter().map(|l| reg.link_qubit(l).unwrap()), PauliAxis::Z)?,
                )?,
                None => OperatorSum::pauli(n, q, PauliAxis::Z)?,
            };
            acc = acc.mul(&f)?;
        }
        out = out.add(&acc)?;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct Stage {
    pub name: &'static str,
    pub operator: OperatorSum,
}

#[derive(Clone, Debug)]
pub struct Derivation {
    pub stages: Vec<Stage>,
    pub result: OperatorSum,
}

impl Derivation {
    /// All stages in the operator text format, each preceded by a
    /// `# stage <name>` line.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for st in &self.stages {
            s.push_str(&format!("# stage {}\n", st.name));
            s.push_str(&st.operator.to_text());
        }
        s
    }
}

/// Runs `H⁽¹⁾` through `U2`, `⟨out|·|out⟩` and (staggered sector only) `V`.
pub fn derive_matter_eliminated(
    h1: &OperatorSum,
    layout: &LatticeLayout,
    sector: &SectorSpec,
    mass: MassHandling,
) -> Result<Derivation> {
    let mut stages = vec![Stage { name: "input", operator: h1.clone() }];
    let mut op = h1.clone();
    if mass == MassHandling::Effective {
        op = effective_mass(&op, layout, sector)?;
        stages.push(Stage { name: "effective_mass", operator: op.clone() });
    }
    op = conjugate_by_gates(&op, &u2_circuit(layout, sector)?)?;
    stages.push(Stage { name: "U2", operator: op.clone() });
    op = project_out(&op, layout)?;
    stages.push(Stage { name: "project_out", operator: op.clone() });
    if sector.is_staggered(layout) {
        op = conjugate_by_gates(&op, &destagger_v(layout)?)?;
        stages.push(Stage { name: "destagger_V", operator: op.clone() });
    } else {
        info!("sector {:?} is not staggered; skipping V", sector.q);
    }
    Ok(Derivation { stages, result: op })
}

/// Keeps amplitudes whose bits on `qubits` equal `pattern` and drops those
/// qubits. Fails if more than `1e-10` of the norm lives elsewhere.
fn slice_state(psi: &Statevector, qubits: &[usize], pattern: u64) -> Result<Statevector> {
    let n = psi.register_size();
    let mask: u64 = qubits.iter().map(|q| 1u64 << q).sum();
    let want: u64 = qubits.iter().filter(|q| pattern >> *q & 1 == 1).map(|q| 1u64 << q).sum();
    let kept: Vec<usize> = (0..n).filter(|q| mask >> q & 1 == 0).collect();
    let mut out = vec![C64::new(0.0, 0.0); 1 << kept.len()];
    let mut leaked = 0.0;
    for (b, z) in psi.amps.iter().enumerate() {
        let b = b as u64;
        if b & mask != want {
            leaked += z.norm_sqr();
            continue;
        }
        let idx = kept.iter().enumerate().fold(0usize, |acc, (k, q)| acc | (((b >> q) & 1) as usize) << k);
        out[idx] = *z;
    }
    if leaked.sqrt() > 1e-10 {
        return Err(Error::LeavesSector);
    }
    Statevector::from_amps(out)
}

/// `|ψ̂⟩ = V ⟨out| U2 |ψ⁽¹⁾⟩` for a full-register state in the sector.
pub fn map_state_to_matter_eliminated(psi: &Statevector, layout: &LatticeLayout, sector: &SectorSpec) -> Result<Statevector> {
    let reg = RegisterLayout::full(layout);
    let mut full = psi.clone();
    u2_circuit(layout, sector)?.apply(&mut full.amps)?;
    let matter: Vec<usize> = (0..layout.num_sites()).map(|s| reg.site_qubit(s).unwrap()).collect();
    let all_down: u64 = matter.iter().map(|q| 1u64 << q).sum();
    let mut out = slice_state(&full, &matter, all_down)?;
    if sector.is_staggered(layout) {
        destagger_v(layout)?.apply(&mut out.amps)?;
    }
    Ok(out)
}

/// `⟨Z=+1| U0 |ψ⟩` for a full-register state in the sector.
pub fn map_state_to_gauge_eliminated(psi: &Statevector, layout: &LatticeLayout, sector: &SectorSpec) -> Result<Statevector> {
    let reg = RegisterLayout::full(layout);
    let mut full = psi.clone();
    u0_circuit(layout, sector)?.apply(&mut full.amps)?;
    let links: Vec<usize> = (0..layout.num_links()).map(|l| reg.link_qubit(l).unwrap()).collect();
    slice_state(&full, &links, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(l: usize, b: Boundary) -> LatticeLayout {
        LatticeLayout::chain(l, b).unwrap()
    }

    #[test]
    fn project_out_examples() {
        let lay = chain(2, Boundary::Open);
        let n = 3;
        let z = OperatorSum::pauli(n, 0, PauliAxis::Z).unwrap();
        assert!(project_out(&z, &lay).unwrap().approx_eq(&OperatorSum::scalar(1, C64::new(-1.0, 0.0)), 0.0));
        let num = OperatorSum::sigma_plus(n, 1).unwrap().mul(&OperatorSum::sigma_minus(n, 1).unwrap()).unwrap();
        assert!(project_out(&num, &lay).unwrap().is_zero());
        let x = OperatorSum::pauli(n, 0, PauliAxis::X).unwrap();
        assert_eq!(project_out(&x, &lay), Err(Error::NotBlockDiagonal(0)));
    }

    #[test]
    fn destagger_needs_even_chain() {
        assert!(destagger_v(&chain(3, Boundary::Open)).is_err());
        assert_eq!(destagger_links(&chain(4, Boundary::Periodic)).unwrap(), vec![1, 3]);
    }

    #[test]
    fn u0_rejects_periodic() {
        let lay = chain(4, Boundary::Periodic);
        assert!(u0_circuit(&lay, &SectorSpec::staggered(&lay)).is_err());
    }

    #[test]
    fn fixing_qubits_renumbers() {
        let a: OperatorSum = OperatorSum::from_string(4, C64::new(2.0, 0.0), "Z0 X1 Z2 Y3".parse().unwrap()).unwrap();
        let r = fix_qubits(&a, &[(0, -1.0), (2, 1.0)]).unwrap();
        let want = OperatorSum::from_string(2, C64::new(-2.0, 0.0), "X0 Y1".parse().unwrap()).unwrap();
        assert!(r.approx_eq(&want, 0.0));
    }
}
