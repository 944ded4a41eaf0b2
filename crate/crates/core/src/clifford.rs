//! Heisenberg-picture propagation of Pauli sums through Clifford-like gates.
//!
//! Every controlled gate is written as `C = P⁺·Q + P⁻` with
//! `P^± = (1 ± A)/2`, `A` a signed Pauli string and `Q` a Pauli string
//! commuting with `A`. Then `C P C†` is one of `P`, `P·Q`, `−P·A`, `P·Q·A`
//! depending on which of `A`, `Q` anticommute with `P`.

use std::f64::consts::FRAC_PI_2;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::pauli::{i_pow, OperatorSum, PauliAxis, PauliString, PauliTerm, C64};

/// `C A C†` for the circuit unitary `C = g_k ⋯ g_1`.
pub fn conjugate_by_gates(a: &OperatorSum, c: &Circuit) -> Result<OperatorSum> {
    if c.num_qubits != a.register_size() {
        return Err(Error::RegisterMismatch(a.register_size(), c.num_qubits));
    }
    c.validate()?;
    let mut terms: Vec<PauliTerm> = a.terms().to_vec();
    for g in &c.gates {
        for t in terms.iter_mut() {
            *t = conjugate_term(t, g)?;
        }
    }
    OperatorSum::from_terms(a.register_size(), terms)
}

/// `g P g†` for a single term.
pub fn conjugate_term(t: &PauliTerm, g: &Gate) -> Result<PauliTerm> {
    let z = |q: usize| PauliString::single(q, PauliAxis::Z);
    match &g.kind {
        GateKind::Pauli { q, axis } => {
            let s = PauliString::single(*q, *axis);
            Ok(if t.string.commutes_with(&s) { t.clone() } else { neg(t) })
        }
        GateKind::Hadamard { q } => Ok(map_axis(t, *q, |a| match a {
            PauliAxis::X => (1.0, PauliAxis::Z),
            PauliAxis::Z => (1.0, PauliAxis::X),
            PauliAxis::Y => (-1.0, PauliAxis::Y),
            PauliAxis::I => (1.0, PauliAxis::I),
        })),
        GateKind::PhaseShift { q, angle } => {
            let k = quarter_turns(*angle).ok_or_else(|| Error::NoHeisenbergRule(g.to_string()))?;
            // S: X → Y, Y → −X
            let mut out = t.clone();
            for _ in 0..k {
                out = map_axis(&out, *q, |a| match a {
                    PauliAxis::X => (1.0, PauliAxis::Y),
                    PauliAxis::Y => (-1.0, PauliAxis::X),
                    other => (1.0, other),
                });
            }
            Ok(out)
        }
        GateKind::Cnot { control, target } => {
            Ok(controlled(t, -1.0, &z(*control), &PauliString::single(*target, PauliAxis::X)))
        }
        GateKind::Cz { a, b } => Ok(controlled(t, -1.0, &z(*a), &z(*b))),
        GateKind::ControlledPauli { control, target, axis } => {
            Ok(controlled(t, -1.0, &z(*control), &PauliString::single(*target, *axis)))
        }
        GateKind::ParityCtrlX { controls, target, sign } => {
            let a = PauliString::uniform(controls.iter().copied(), PauliAxis::Z)?;
            Ok(controlled(t, *sign as f64, &a, &PauliString::single(*target, PauliAxis::X)))
        }
        // Rotations act trivially on commuting terms; anything else would
        // leave the Pauli group (or needs a dense treatment).
        GateKind::RotX { q, angle } => rotation(t, g, *angle, PauliString::single(*q, PauliAxis::X)),
        GateKind::RotY { q, angle } => rotation(t, g, *angle, PauliString::single(*q, PauliAxis::Y)),
        GateKind::RotZ { q, angle } => rotation(t, g, *angle, PauliString::single(*q, PauliAxis::Z)),
        GateKind::RotZZ { a, b, angle } => rotation(t, g, *angle, PauliString::uniform([*a, *b], PauliAxis::Z)?),
        GateKind::RotXX { a, b, angle } => rotation(t, g, *angle, PauliString::uniform([*a, *b], PauliAxis::X)?),
        GateKind::RotYY { a, b, angle } => rotation(t, g, *angle, PauliString::uniform([*a, *b], PauliAxis::Y)?),
        GateKind::RotAxisZY { q, angle, .. } => {
            if *angle == 0.0 || t.string.get(*q) == PauliAxis::I {
                Ok(t.clone())
            } else {
                Err(Error::NoHeisenbergRule(g.to_string()))
            }
        }
    }
}

fn rotation(t: &PauliTerm, g: &Gate, angle: f64, gen: PauliString) -> Result<PauliTerm> {
    if angle == 0.0 || t.string.commutes_with(&gen) {
        Ok(t.clone())
    } else {
        Err(Error::NoHeisenbergRule(g.to_string()))
    }
}

fn quarter_turns(angle: f64) -> Option<usize> {
    let k = angle / FRAC_PI_2;
    let r = k.round();
    ((k - r).abs() <= 1e-12).then(|| r.rem_euclid(4.0) as usize)
}

fn neg(t: &PauliTerm) -> PauliTerm {
    PauliTerm::new(-t.coeff, t.string.clone())
}

fn map_axis(t: &PauliTerm, q: usize, f: impl Fn(PauliAxis) -> (f64, PauliAxis)) -> PauliTerm {
    let a = t.string.get(q);
    if a == PauliAxis::I {
        return t.clone();
    }
    let (s, b) = f(a);
    let ops = t.string.iter().map(|(k, ax)| if k == q { (k, b) } else { (k, ax) });
    PauliTerm::new(t.coeff * s, PauliString::new(ops).expect("same support"))
}

/// Controlled rule with `A = a_sign · a`, `Q = q`.
fn controlled(t: &PauliTerm, a_sign: f64, a: &PauliString, q: &PauliString) -> PauliTerm {
    let ca = t.string.commutes_with(a);
    let cq = t.string.commutes_with(q);
    let mul = |x: &PauliTerm, s: &PauliString| {
        let (k, out) = x.string.mul(s);
        PauliTerm::new(x.coeff * i_pow(k), out)
    };
    match (ca, cq) {
        (true, true) => t.clone(),
        (false, true) => mul(t, q),
        (true, false) => {
            let r = mul(t, a);
            PauliTerm::new(r.coeff * C64::new(-a_sign, 0.0), r.string)
        }
        (false, false) => {
            let r = mul(&mul(t, q), a);
            PauliTerm::new(r.coeff * C64::new(a_sign, 0.0), r.string)
        }
    }
}
