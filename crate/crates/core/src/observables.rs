//! Gauge-invariant observables in each frame and Hadamard-test circuits
//! for measuring Pauli strings.
//!
//! Chain sites and links use 1-based labels `n` here, matching the
//! Hamiltonian builders; register indices are resolved through the layout.

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::exact::Statevector;
use crate::hamiltonian::{electric_string_sign, jw_annihilator, FrameTag};
use crate::lattice::{Boundary, LatticeLayout, RegisterLayout, SectorSpec};
use crate::pauli::{OperatorSum, PauliAxis, PauliString, PauliTerm, C64};
use crate::transform::{derive_matter_eliminated, eliminate_gauge_fields, MassHandling};

fn require_chain(layout: &LatticeLayout) -> Result<()> {
    if layout.dim() != 1 {
        return Err(Error::Unsupported("string observables are defined on chains".into()));
    }
    Ok(())
}

fn link_label(layout: &LatticeLayout, n: i64) -> Result<usize> {
    layout.chain_link(n).ok_or_else(|| Error::InvalidSite(n.max(0) as usize))
}

fn site_label(layout: &LatticeLayout, n: i64) -> Result<usize> {
    layout.chain_site(n).ok_or_else(|| Error::InvalidSite(n.max(0) as usize))
}

/// `Z_n` on link `n` as seen in `frame`. In the gauge-eliminated frame the
/// link is replaced by its electric string `s_n Z_1⋯Z_n`.
pub fn link_field(layout: &LatticeLayout, frame: FrameTag, sector: &SectorSpec, n: usize) -> Result<OperatorSum> {
    require_chain(layout)?;
    let l = link_label(layout, n as i64)?;
    match frame {
        FrameTag::Fermionic | FrameTag::Hardcore => {
            let reg = RegisterLayout::full(layout);
            OperatorSum::pauli(reg.total(), reg.link_qubit(l).unwrap(), PauliAxis::Z)
        }
        FrameTag::MatterEliminated => OperatorSum::pauli(layout.num_links(), l, PauliAxis::Z),
        FrameTag::GaugeEliminated => {
            if layout.boundary() != Boundary::Open {
                return Err(Error::Unsupported("gauge elimination needs an open chain".into()));
            }
            OperatorSum::from_string(
                layout.chain_len(),
                C64::new(electric_string_sign(sector, n), 0.0),
                PauliString::uniform(0..n, PauliAxis::Z)?,
            )
        }
    }
}

/// Occupation of site `n`. Frames with matter measure `σ^+σ^-`; the
/// matter-eliminated frame measures `P⁺_n = (1 + c_n S_n)/2`, which agrees
/// inside the sector.
pub fn charge_density(layout: &LatticeLayout, frame: FrameTag, sector: &SectorSpec, n: usize) -> Result<OperatorSum> {
    require_chain(layout)?;
    let s = site_label(layout, n as i64)?;
    match frame {
        FrameTag::Fermionic | FrameTag::Hardcore => {
            let reg = RegisterLayout::full(layout);
            OperatorSum::number(reg.total(), reg.site_qubit(s).unwrap())
        }
        FrameTag::GaugeEliminated => OperatorSum::number(layout.chain_len(), s),
        FrameTag::MatterEliminated => {
            let nl = layout.num_links();
            let star = OperatorSum::from_string(
                nl,
                C64::new(sector.matter_sign(s), 0.0),
                PauliString::uniform(layout.star(s)?, PauliAxis::Z)?,
            )?;
            Ok(OperatorSum::identity(nl).add(&star)?.scale_re(0.5))
        }
    }
}

/// `(n, R)` of the shorter string between sites `a` and `b` (1-based).
/// Periodic ties go forward from the smaller label.
pub fn between(layout: &LatticeLayout, a: usize, b: usize) -> Result<(usize, usize)> {
    require_chain(layout)?;
    let l = layout.chain_len();
    if a == 0 || b == 0 || a > l || b > l {
        return Err(Error::InvalidSite(a.max(b)));
    }
    let (lo, hi) = (a.min(b), a.max(b));
    Ok(match layout.boundary() {
        Boundary::Open => (lo, hi - lo),
        Boundary::Periodic => {
            let fwd = hi - lo;
            if fwd <= l - fwd {
                (lo, fwd)
            } else {
                (hi, l - fwd)
            }
        }
    })
}

fn check_string(layout: &LatticeLayout, n: usize, r: usize) -> Result<()> {
    require_chain(layout)?;
    let l = layout.chain_len();
    if n == 0 || n > l {
        return Err(Error::InvalidSite(n));
    }
    match layout.boundary() {
        Boundary::Open if n + r > l => Err(Error::InvalidArgument(format!("string ({n}, {n}+{r}) leaves the open chain of {l} sites"))),
        Boundary::Periodic if r >= l => Err(Error::InvalidArgument(format!("string length {r} wraps the whole ring of {l} sites"))),
        _ => Ok(()),
    }
}

/// Fermionic string `ψ†_n [Π_{m=n}^{n+R−1} X_m] ψ_{n+R}` (full register,
/// Jordan–Wigner over the site order). `R = 0` is the number operator.
pub fn mesonic_string_fermionic(layout: &LatticeLayout, n: usize, r: usize) -> Result<OperatorSum> {
    check_string(layout, n, r)?;
    let reg = RegisterLayout::full(layout);
    let total = reg.total();
    let a = jw_annihilator(&reg, site_label(layout, n as i64)?)?;
    let b = jw_annihilator(&reg, site_label(layout, (n + r) as i64)?)?;
    let mut out = a.adjoint();
    for m in n..n + r {
        out = out.mul(&OperatorSum::pauli(total, reg.link_qubit(link_label(layout, m as i64)?).unwrap(), PauliAxis::X)?)?;
    }
    out.mul(&b)
}

/// Hardcore string `i(−1)^R Z_{n−1} σ^+_n [Π_{m=n}^{n+R−2} Y_m] X_{n+R−1} σ^-_{n+R}`
/// (missing `Z_{n−1}` dropped at an open end). `R = 0` is `σ^+_nσ^-_n`.
pub fn mesonic_string_hardcore(layout: &LatticeLayout, n: usize, r: usize) -> Result<OperatorSum> {
    check_string(layout, n, r)?;
    let reg = RegisterLayout::full(layout);
    let total = reg.total();
    let site = |k: usize| -> Result<usize> { Ok(reg.site_qubit(site_label(layout, k as i64)?).unwrap()) };
    let link = |k: i64| layout.chain_link(k).map(|l| reg.link_qubit(l).unwrap());
    if r == 0 {
        return OperatorSum::number(total, site(n)?);
    }
    let (ni, ri) = (n as i64, r as i64);
    let mut out = OperatorSum::scalar(total, C64::new(0.0, if r.is_multiple_of(2) { 1.0 } else { -1.0 }));
    if let Some(q) = link(ni - 1) {
        out = out.mul(&OperatorSum::pauli(total, q, PauliAxis::Z)?)?;
    }
    out = out.mul(&OperatorSum::sigma_plus(total, site(n)?)?)?;
    for m in ni..=ni + ri - 2 {
        out = out.mul(&OperatorSum::pauli(total, link(m).unwrap(), PauliAxis::Y)?)?;
    }
    out = out.mul(&OperatorSum::pauli(total, link(ni + ri - 1).unwrap(), PauliAxis::X)?)?;
    out.mul(&OperatorSum::sigma_minus(total, site(n + r)?)?)
}

/// The four strings `M̂_α(n, n+R)` on the link register, each with its
/// own prefactor; `Z` factors on links past an open end are dropped.
pub fn mesonic_terms_hat(layout: &LatticeLayout, n: usize, r: usize) -> Result<[OperatorSum; 4]> {
    check_string(layout, n, r)?;
    if r == 0 {
        return Err(Error::InvalidArgument("R = 0 is the charge density".into()));
    }
    let nl = layout.num_links();
    let (ni, ri) = (n as i64, r as i64);
    let sgn = |k: i64| if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let build = |c: C64, ops: Vec<(i64, PauliAxis)>| -> Result<OperatorSum> {
        let mut out = OperatorSum::scalar(nl, c);
        for (k, a) in ops {
            match layout.chain_link(k) {
                Some(q) => out = out.mul(&OperatorSum::pauli(nl, q, a)?)?,
                None if a == PauliAxis::Z => {}
                None => return Err(Error::InvalidSite(k.max(0) as usize)),
            }
        }
        Ok(out)
    };
    use PauliAxis::*;
    let ys = |from: i64, to: i64| (from..=to).map(|m| (m, Y)).collect::<Vec<_>>();
    let cat = |mut a: Vec<(i64, PauliAxis)>, b: Vec<(i64, PauliAxis)>, c: Vec<(i64, PauliAxis)>| {
        a.extend(b);
        a.extend(c);
        a
    };
    let m1 = build(C64::new(1.0, 0.0), cat(vec![(ni - 1, Z)], ys(ni, ni + ri - 2), vec![(ni + ri - 1, X)]))?;
    // at R = 1 the two X factors share a link and fold into −iY
    let m2 = if r == 1 {
        build(C64::new(0.0, -sgn(ni)), vec![(ni, Y)])?
    } else {
        build(C64::new(0.0, sgn(ni)), cat(vec![(ni, X)], ys(ni + 1, ni + ri - 2), vec![(ni + ri - 1, X)]))?
    };
    let m3 = build(C64::new(0.0, sgn(ni + ri)), cat(vec![(ni - 1, Z)], ys(ni, ni + ri - 1), vec![(ni + ri, Z)]))?;
    let m4 = build(C64::new(sgn(ri + 1), 0.0), cat(vec![(ni, X)], ys(ni + 1, ni + ri - 1), vec![(ni + ri, Z)]))?;
    Ok([m1, m2, m3, m4])
}

/// `(i/4)(−1)^{R(2n+R−1)/2} Σ_α M̂_α(n, n+R)`; the `i/4` matches the
/// normalization of the hardcore string with `σ^± = (X ± iY)/2`.
pub fn mesonic_string_hat(layout: &LatticeLayout, n: usize, r: usize) -> Result<OperatorSum> {
    let terms = mesonic_terms_hat(layout, n, r)?;
    let e = r * (2 * n + r - 1) / 2;
    let mut out = OperatorSum::zero(layout.num_links());
    for t in &terms {
        out = out.add(t)?;
    }
    Ok(out.scale(C64::new(0.0, if e.is_multiple_of(2) { 0.25 } else { -0.25 })))
}

/// The mesonic string `ℳ(n, n+R)` as represented in `frame`. The
/// matter-eliminated and gauge-eliminated forms are obtained by pushing
/// the hardcore / fermionic operator through the corresponding transform.
pub fn mesonic_string(layout: &LatticeLayout, frame: FrameTag, sector: &SectorSpec, n: usize, r: usize) -> Result<OperatorSum> {
    match frame {
        FrameTag::Fermionic => mesonic_string_fermionic(layout, n, r),
        FrameTag::Hardcore => mesonic_string_hardcore(layout, n, r),
        FrameTag::GaugeEliminated => eliminate_gauge_fields(&mesonic_string_fermionic(layout, n, r)?, layout, sector),
        FrameTag::MatterEliminated => {
            if r == 0 {
                return charge_density(layout, frame, sector, n);
            }
            let h = mesonic_string_hardcore(layout, n, r)?;
            Ok(derive_matter_eliminated(&h, layout, sector, MassHandling::Raw)?.result)
        }
    }
}

/// `((A + A†)/2, (A − A†)/2i)`, so `⟨A⟩ = ⟨re⟩ + i⟨im⟩` with both parts
/// hermitian.
pub fn hermitian_parts(a: &OperatorSum) -> Result<(OperatorSum, OperatorSum)> {
    let ad = a.adjoint();
    let re = a.add(&ad)?.scale_re(0.5);
    let im = a.sub(&ad)?.scale(C64::new(0.0, -0.5));
    Ok((re, im))
}

/// Hadamard test for a unit-modulus Pauli term `cP` on `n` qubits; the
/// ancilla is qubit `n`. `⟨X_anc⟩ + i⟨Y_anc⟩ = ⟨cP⟩`.
pub fn compile_string_measurement(term: &PauliTerm, n: usize) -> Result<Circuit> {
    if (term.coeff.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("coefficient {} is not a phase", term.coeff)));
    }
    if let Some(q) = term.string.max_qubit() {
        if q >= n {
            return Err(Error::QubitOutOfRange { qubit: q, size: n });
        }
    }
    let anc = n;
    let mut c = Circuit::new(n + 1);
    c.push(Gate::labeled(GateKind::Hadamard { q: anc }, "prep"));
    let phase = term.coeff.arg();
    if phase != 0.0 {
        c.push(Gate::labeled(GateKind::PhaseShift { q: anc, angle: phase }, "prep"));
    }
    for (q, axis) in term.string.iter() {
        c.push(Gate::labeled(GateKind::ControlledPauli { control: anc, target: q, axis }, "string"));
    }
    Ok(c)
}

/// Runs the Hadamard test densely on `psi ⊗ |0⟩_anc`.
pub fn hadamard_test_expectation(term: &PauliTerm, psi: &Statevector) -> Result<C64> {
    let n = psi.register_size();
    let c = compile_string_measurement(term, n)?;
    let mut amps = psi.amps.clone();
    amps.resize(1 << (n + 1), C64::new(0.0, 0.0));
    c.apply(&mut amps)?;
    let x = OperatorSum::pauli(n + 1, n, PauliAxis::X)?.expectation(&amps);
    let y = OperatorSum::pauli(n + 1, n, PauliAxis::Y)?.expectation(&amps);
    Ok(C64::new(x.re, 0.0) + C64::new(0.0, 1.0) * y.re)
}

/// `⟨A⟩` assembled term by term from Hadamard tests.
pub fn measure_by_hadamard_tests(a: &OperatorSum, psi: &Statevector) -> Result<C64> {
    let mut total = C64::new(0.0, 0.0);
    for t in a.terms() {
        let mag = t.coeff.norm();
        let unit = PauliTerm::new(t.coeff / mag, t.string.clone());
        total += hadamard_test_expectation(&unit, psi)? * mag;
    }
    Ok(total)
}
