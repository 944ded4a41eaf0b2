//! Gate-list circuits: dense gate kernels, a line-oriented text format,
//! OpenQASM 2 export and layer counting.
//!
//! Rotation convention: `rot_P(angle) = exp(−i·angle·P)`.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pauli::{PauliAxis, C64};

#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    RotX { q: usize, angle: f64 },
    RotY { q: usize, angle: f64 },
    RotZ { q: usize, angle: f64 },
    /// `exp(−i·angle·(cosθ Z + sinθ Y))`.
    RotAxisZY { q: usize, angle: f64, theta: f64 },
    RotXX { a: usize, b: usize, angle: f64 },
    RotYY { a: usize, b: usize, angle: f64 },
    RotZZ { a: usize, b: usize, angle: f64 },
    Cnot { control: usize, target: usize },
    Cz { a: usize, b: usize },
    /// X on `target` exactly when `sign · Π Z(controls) = +1`.
    ParityCtrlX { controls: Vec<usize>, target: usize, sign: i8 },
    Pauli { q: usize, axis: PauliAxis },
    Hadamard { q: usize },
    /// `diag(1, e^{i·angle})`.
    PhaseShift { q: usize, angle: f64 },
    /// `axis` on `target` when `control` is `|1⟩`.
    ControlledPauli { control: usize, target: usize, axis: PauliAxis },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    /// Name of the generator this gate belongs to, e.g. `"omega_GM"`.
    pub label: String,
}

impl Gate {
    pub fn new(kind: GateKind) -> Self {
        Self { kind, label: String::new() }
    }

    pub fn labeled(kind: GateKind, label: &str) -> Self {
        Self { kind, label: label.to_string() }
    }

    pub fn name(&self) -> &'static str {
        match &self.kind {
            GateKind::RotX { .. } => "rot_x",
            GateKind::RotY { .. } => "rot_y",
            GateKind::RotZ { .. } => "rot_z",
            GateKind::RotAxisZY { .. } => "rot_axis_zy",
            GateKind::RotXX { .. } => "rot_xx",
            GateKind::RotYY { .. } => "rot_yy",
            GateKind::RotZZ { .. } => "rot_zz",
            GateKind::Cnot { .. } => "cnot",
            GateKind::Cz { .. } => "cz",
            GateKind::ParityCtrlX { .. } => "parity_ctrl_x",
            GateKind::Pauli { axis: PauliAxis::X, .. } => "x",
            GateKind::Pauli { axis: PauliAxis::Y, .. } => "y",
            GateKind::Pauli { axis: PauliAxis::Z, .. } => "z",
            GateKind::Pauli { axis: PauliAxis::I, .. } => "id",
            GateKind::Hadamard { .. } => "h",
            GateKind::PhaseShift { .. } => "phase",
            GateKind::ControlledPauli { .. } => "cpauli",
        }
    }

    /// Qubits in the order used by `local_matrix` (entry `k` ↔ local bit `k`).
    pub fn qubits(&self) -> Vec<usize> {
        match &self.kind {
            GateKind::RotX { q, .. }
            | GateKind::RotY { q, .. }
            | GateKind::RotZ { q, .. }
            | GateKind::RotAxisZY { q, .. }
            | GateKind::Pauli { q, .. }
            | GateKind::Hadamard { q }
            | GateKind::PhaseShift { q, .. } => vec![*q],
            GateKind::RotXX { a, b, .. } | GateKind::RotYY { a, b, .. } | GateKind::RotZZ { a, b, .. } => {
                vec![*a, *b]
            }
            GateKind::Cz { a, b } => vec![*a, *b],
            GateKind::Cnot { control, target } | GateKind::ControlledPauli { control, target, .. } => {
                vec![*control, *target]
            }
            GateKind::ParityCtrlX { controls, target, .. } => {
                let mut v = controls.clone();
                v.push(*target);
                v
            }
        }
    }

    /// Dense `2^k × 2^k` matrix on `qubits()`.
    pub fn local_matrix(&self) -> DMatrix<C64> {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let cis = |x: f64| C64::from_polar(1.0, x);
        let single = |m: [[C64; 2]; 2]| DMatrix::from_fn(2, 2, |r, c| m[r][c]);
        let rot1 = |axis: PauliAxis, angle: f64| {
            let p = axis.matrix();
            let (c, s) = (angle.cos(), angle.sin());
            DMatrix::from_fn(2, 2, |r, k| {
                let id = if r == k { one } else { zero };
                id * c - C64::new(0.0, s) * p[r][k]
            })
        };
        let rot2 = |axis: PauliAxis, angle: f64| {
            let p = axis.matrix();
            let (c, s) = (angle.cos(), angle.sin());
            DMatrix::from_fn(4, 4, |r, k| {
                let pp = p[r & 1][k & 1] * p[r >> 1][k >> 1];
                let id = if r == k { one } else { zero };
                id * c - C64::new(0.0, s) * pp
            })
        };
        match &self.kind {
            GateKind::RotX { angle, .. } => rot1(PauliAxis::X, *angle),
            GateKind::RotY { angle, .. } => rot1(PauliAxis::Y, *angle),
            GateKind::RotZ { angle, .. } => rot1(PauliAxis::Z, *angle),
            GateKind::RotAxisZY { angle, theta, .. } => {
                let (z, y) = (PauliAxis::Z.matrix(), PauliAxis::Y.matrix());
                let (c, s) = (angle.cos(), angle.sin());
                DMatrix::from_fn(2, 2, |r, k| {
                    let id = if r == k { one } else { zero };
                    let n = z[r][k] * theta.cos() + y[r][k] * theta.sin();
                    id * c - C64::new(0.0, s) * n
                })
            }
            GateKind::RotXX { angle, .. } => rot2(PauliAxis::X, *angle),
            GateKind::RotYY { angle, .. } => rot2(PauliAxis::Y, *angle),
            GateKind::RotZZ { angle, .. } => rot2(PauliAxis::Z, *angle),
            GateKind::Cnot { .. } => controlled(&PauliAxis::X.matrix()),
            GateKind::ControlledPauli { axis, .. } => controlled(&axis.matrix()),
            GateKind::Cz { .. } => DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![one, one, one, -one])),
            GateKind::ParityCtrlX { controls, sign, .. } => {
                let k = controls.len();
                let dim = 1usize << (k + 1);
                let mut m = DMatrix::zeros(dim, dim);
                for b in 0..dim {
                    let parity = (b & ((1 << k) - 1)).count_ones() % 2;
                    let a = if parity == 0 { *sign as i32 } else { -(*sign as i32) };
                    let out = if a == 1 { b ^ (1 << k) } else { b };
                    m[(out, b)] = one;
                }
                m
            }
            GateKind::Pauli { axis, .. } => single(axis.matrix()),
            GateKind::Hadamard { .. } => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                DMatrix::from_fn(2, 2, |r, c| C64::new(if r == 1 && c == 1 { -h } else { h }, 0.0))
            }
            GateKind::PhaseShift { angle, .. } => single([[one, zero], [zero, cis(*angle)]]),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(
            self.kind,
            GateKind::RotZ { .. }
                | GateKind::RotZZ { .. }
                | GateKind::Cz { .. }
                | GateKind::PhaseShift { .. }
                | GateKind::Pauli { axis: PauliAxis::Z | PauliAxis::I, .. }
                | GateKind::ControlledPauli { axis: PauliAxis::Z | PauliAxis::I, .. }
        )
    }

    /// Exact commutation test: disjoint support, both diagonal, or a dense
    /// check on the union of supports.
    pub fn commutes_with(&self, other: &Gate) -> bool {
        let (qa, qb) = (self.qubits(), other.qubits());
        if qa.iter().all(|q| !qb.contains(q)) {
            return true;
        }
        if self.is_diagonal() && other.is_diagonal() {
            return true;
        }
        let mut union: Vec<usize> = qa.iter().chain(&qb).copied().collect();
        union.sort_unstable();
        union.dedup();
        let local = |g: &Gate| {
            let mut g2 = g.clone();
            relabel(&mut g2.kind, &|q| union.binary_search(&q).unwrap());
            let mut c = Circuit::new(union.len());
            c.push(g2);
            c.unitary().expect("small")
        };
        let (a, b) = (local(self), local(other));
        (&a * &b - &b * &a).iter().all(|z| z.norm() < 1e-12)
    }

    pub fn max_qubit(&self) -> usize {
        self.qubits().into_iter().max().unwrap_or(0)
    }
}

fn controlled(p: &[[C64; 2]; 2]) -> DMatrix<C64> {
    // local bit 0 = control, bit 1 = target
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = C64::new(1.0, 0.0);
    m[(2, 2)] = C64::new(1.0, 0.0);
    for r in 0..2 {
        for c in 0..2 {
            m[(1 | (r << 1), 1 | (c << 1))] = p[r][c];
        }
    }
    m
}

fn relabel(kind: &mut GateKind, f: &dyn Fn(usize) -> usize) {
    match kind {
        GateKind::RotX { q, .. }
        | GateKind::RotY { q, .. }
        | GateKind::RotZ { q, .. }
        | GateKind::RotAxisZY { q, .. }
        | GateKind::Pauli { q, .. }
        | GateKind::Hadamard { q }
        | GateKind::PhaseShift { q, .. } => *q = f(*q),
        GateKind::RotXX { a, b, .. } | GateKind::RotYY { a, b, .. } | GateKind::RotZZ { a, b, .. } | GateKind::Cz { a, b } => {
            *a = f(*a);
            *b = f(*b);
        }
        GateKind::Cnot { control, target } | GateKind::ControlledPauli { control, target, .. } => {
            *control = f(*control);
            *target = f(*target);
        }
        GateKind::ParityCtrlX { controls, target, .. } => {
            for c in controls.iter_mut() {
                *c = f(*c);
            }
            *target = f(*target);
        }
    }
}

/// Applies a gate in place. Each output block depends only on its own input
/// block, so the result is independent of traversal order.
pub fn apply_gate(amps: &mut [C64], gate: &Gate) {
    let qs = gate.qubits();
    let m = gate.local_matrix();
    let k = qs.len();
    let mask: usize = qs.iter().map(|&q| 1usize << q).sum();
    let local_dim = 1usize << k;
    let offsets: Vec<usize> = (0..local_dim)
        .map(|j| (0..k).filter(|&bit| j >> bit & 1 == 1).map(|bit| 1usize << qs[bit]).sum())
        .collect();
    let mut buf = vec![C64::new(0.0, 0.0); local_dim];
    for base in 0..amps.len() {
        if base & mask != 0 {
            continue;
        }
        for j in 0..local_dim {
            buf[j] = amps[base + offsets[j]];
        }
        for r in 0..local_dim {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..local_dim {
                let v = m[(r, c)];
                if v.re != 0.0 || v.im != 0.0 {
                    acc += v * buf[c];
                }
            }
            amps[base + offsets[r]] = acc;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
}

/// Layering rule for depth counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerModel {
    /// Greedy as-soon-as-possible packing of disjoint-support gates.
    DisjointSupport,
    /// Greedy packing of consecutive mutually commuting gates.
    Commuting,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, gates: Vec::new() }
    }

    pub fn push(&mut self, g: Gate) {
        self.gates.push(g);
    }

    pub fn extend(&mut self, other: &Circuit) {
        self.gates.extend(other.gates.iter().cloned());
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn count(&self, name: &str) -> usize {
        self.gates.iter().filter(|g| g.name() == name).count()
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.gates {
            let qs = g.qubits();
            for &q in &qs {
                if q >= self.num_qubits {
                    return Err(Error::QubitOutOfRange { qubit: q, size: self.num_qubits });
                }
            }
            let mut s = qs.clone();
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidArgument(format!("gate {} repeats a qubit", g.name())));
            }
        }
        Ok(())
    }

    /// Gates in reverse order with inverted parameters.
    pub fn inverse(&self) -> Circuit {
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| {
                let kind = match &g.kind {
                    GateKind::RotX { q, angle } => GateKind::RotX { q: *q, angle: -angle },
                    GateKind::RotY { q, angle } => GateKind::RotY { q: *q, angle: -angle },
                    GateKind::RotZ { q, angle } => GateKind::RotZ { q: *q, angle: -angle },
                    GateKind::RotAxisZY { q, angle, theta } => GateKind::RotAxisZY { q: *q, angle: -angle, theta: *theta },
                    GateKind::RotXX { a, b, angle } => GateKind::RotXX { a: *a, b: *b, angle: -angle },
                    GateKind::RotYY { a, b, angle } => GateKind::RotYY { a: *a, b: *b, angle: -angle },
                    GateKind::RotZZ { a, b, angle } => GateKind::RotZZ { a: *a, b: *b, angle: -angle },
                    GateKind::PhaseShift { q, angle } => GateKind::PhaseShift { q: *q, angle: -angle },
                    k => k.clone(),
                };
                Gate { kind, label: g.label.clone() }
            })
            .collect();
        Circuit { num_qubits: self.num_qubits, gates }
    }

    pub fn apply(&self, amps: &mut [C64]) -> Result<()> {
        self.validate()?;
        if amps.len() != 1usize << self.num_qubits {
            return Err(Error::RegisterMismatch(amps.len().trailing_zeros() as usize, self.num_qubits));
        }
        for g in &self.gates {
            apply_gate(amps, g);
        }
        Ok(())
    }

    /// Dense unitary `g_k ⋯ g_1`.
    pub fn unitary(&self) -> Result<DMatrix<C64>> {
        self.validate()?;
        let dim = 1usize << self.num_qubits;
        let mut u = DMatrix::<C64>::zeros(dim, dim);
        let mut col = vec![C64::new(0.0, 0.0); dim];
        for j in 0..dim {
            col.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            col[j] = C64::new(1.0, 0.0);
            for g in &self.gates {
                apply_gate(&mut col, g);
            }
            for (i, z) in col.iter().enumerate() {
                u[(i, j)] = *z;
            }
        }
        Ok(u)
    }

    pub fn depth(&self, model: LayerModel) -> usize {
        match model {
            LayerModel::DisjointSupport => {
                let mut front = vec![0usize; self.num_qubits.max(1 + self.gates.iter().map(Gate::max_qubit).max().unwrap_or(0))];
                let mut depth = 0;
                for g in &self.gates {
                    let qs = g.qubits();
                    let l = qs.iter().map(|&q| front[q]).max().unwrap_or(0) + 1;
                    for q in qs {
                        front[q] = l;
                    }
                    depth = depth.max(l);
                }
                depth
            }
            LayerModel::Commuting => {
                let mut layers = 0;
                let mut current: Vec<&Gate> = Vec::new();
                for g in &self.gates {
                    if current.is_empty() || !current.iter().all(|h| h.commutes_with(g)) {
                        layers += 1;
                        current.clear();
                    }
                    current.push(g);
                }
                layers
            }
        }
    }

    /// Depth of each contiguous run of equally labeled gates.
    pub fn depth_by_label(&self, model: LayerModel) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        let mut start = 0;
        for i in 1..=self.gates.len() {
            if i == self.gates.len() || self.gates[i].label != self.gates[start].label {
                let seg = Circuit { num_qubits: self.num_qubits, gates: self.gates[start..i].to_vec() };
                out.push((self.gates[start].label.clone(), seg.depth(model)));
                start = i;
            }
        }
        out
    }

    /// Text gate list: `# qubits N` header, then `name q1,q2 [params] [@label]`.
    pub fn to_text(&self) -> String {
        let mut s = format!("# qubits {}\n", self.num_qubits);
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut n: Option<usize> = None;
        let mut gates = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("qubits") {
                    n = it.next().and_then(|v| v.parse().ok());
                }
                continue;
            }
            gates.push(parse_gate(line).map_err(|msg| Error::Parse { line: ln + 1, msg })?);
        }
        let n = match n {
            Some(n) => n,
            None => gates.iter().map(|g| g.max_qubit() + 1).max().unwrap_or(0),
        };
        let c = Circuit { num_qubits: n, gates };
        c.validate()?;
        Ok(c)
    }

    /// OpenQASM 2.0 with `qelib1.inc` gates; rotations are exported up to
    /// global phase.
    pub fn to_qasm(&self) -> String {
        let mut s = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
        s.push_str(&format!("qreg q[{}];\n", self.num_qubits));
        for g in &self.gates {
            for line in qasm_lines(g) {
                s.push_str(&line);
                s.push('\n');
            }
        }
        s
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let qs: Vec<String> = self.qubits().iter().map(|q| q.to_string()).collect();
        write!(f, "{} {}", self.name(), qs.join(","))?;
        match &self.kind {
            GateKind::RotX { angle, .. }
            | GateKind::RotY { angle, .. }
            | GateKind::RotZ { angle, .. }
            | GateKind::RotXX { angle, .. }
            | GateKind::RotYY { angle, .. }
            | GateKind::RotZZ { angle, .. }
            | GateKind::PhaseShift { angle, .. } => write!(f, " {angle:?}")?,
            GateKind::RotAxisZY { angle, theta, .. } => write!(f, " {angle:?} {theta:?}")?,
            GateKind::ParityCtrlX { sign, .. } => write!(f, " {sign:+}")?,
            GateKind::ControlledPauli { axis, .. } => write!(f, " {}", axis.symbol())?,
            _ => {}
        }
        if !self.label.is_empty() {
            write!(f, " @{}", self.label)?;
        }
        Ok(())
    }
}

fn parse_gate(line: &str) -> std::result::Result<Gate, String> {
    let mut toks: Vec<&str> = line.split_whitespace().collect();
    let label = match toks.last() {
        Some(t) if t.starts_with('@') => {
            let l = t[1..].to_string();
            toks.pop();
            l
        }
        _ => String::new(),
    };
    if toks.len() < 2 {
        return Err(format!("expected `name qubits ...`, got `{line}`"));
    }
    let name = toks[0];
    let qs: Vec<usize> = toks[1]
        .split(',')
        .map(|t| t.parse().map_err(|_| format!("bad qubit `{t}`")))
        .collect::<std::result::Result<_, _>>()?;
    let params = &toks[2..];
    let num = |i: usize| -> std::result::Result<f64, String> {
        params.get(i).ok_or_else(|| format!("{name}: missing parameter"))?.parse().map_err(|_| format!("{name}: bad number"))
    };
    let arity = |n: usize| if qs.len() == n { Ok(()) } else { Err(format!("{name}: expected {n} qubits")) };
    let axis = |i: usize| -> std::result::Result<PauliAxis, String> {
        params
            .get(i)
            .and_then(|t| t.chars().next())
            .and_then(PauliAxis::from_symbol)
            .ok_or_else(|| format!("{name}: bad axis"))
    };
    let kind = match name {
        "rot_x" => arity(1).and(num(0)).map(|angle| GateKind::RotX { q: qs[0], angle })?,
        "rot_y" => arity(1).and(num(0)).map(|angle| GateKind::RotY { q: qs[0], angle })?,
        "rot_z" => arity(1).and(num(0)).map(|angle| GateKind::RotZ { q: qs[0], angle })?,
        "rot_axis_zy" => {
            arity(1)?;
            GateKind::RotAxisZY { q: qs[0], angle: num(0)?, theta: num(1)? }
        }
        "rot_xx" => arity(2).and(num(0)).map(|angle| GateKind::RotXX { a: qs[0], b: qs[1], angle })?,
        "rot_yy" => arity(2).and(num(0)).map(|angle| GateKind::RotYY { a: qs[0], b: qs[1], angle })?,
        "rot_zz" => arity(2).and(num(0)).map(|angle| GateKind::RotZZ { a: qs[0], b: qs[1], angle })?,
        "cnot" => arity(2).map(|_| GateKind::Cnot { control: qs[0], target: qs[1] })?,
        "cz" => arity(2).map(|_| GateKind::Cz { a: qs[0], b: qs[1] })?,
        "parity_ctrl_x" => {
            if qs.len() < 2 {
                return Err("parity_ctrl_x: need controls and a target".into());
            }
            let sign: i8 = params.first().ok_or("parity_ctrl_x: missing sign")?.parse().map_err(|_| "parity_ctrl_x: bad sign")?;
            if sign != 1 && sign != -1 {
                return Err("parity_ctrl_x: sign must be ±1".into());
            }
            GateKind::ParityCtrlX { controls: qs[..qs.len() - 1].to_vec(), target: qs[qs.len() - 1], sign }
        }
        "x" | "y" | "z" => {
            arity(1)?;
            GateKind::Pauli { q: qs[0], axis: PauliAxis::from_symbol(name.to_ascii_uppercase().chars().next().unwrap()).unwrap() }
        }
        "h" => arity(1).map(|_| GateKind::Hadamard { q: qs[0] })?,
        "phase" => arity(1).and(num(0)).map(|angle| GateKind::PhaseShift { q: qs[0], angle })?,
        "cpauli" => {
            arity(2)?;
            GateKind::ControlledPauli { control: qs[0], target: qs[1], axis: axis(0)? }
        }
        other => return Err(format!("unknown gate `{other}`")),
    };
    Ok(Gate { kind, label })
}

fn qasm_lines(g: &Gate) -> Vec<String> {
    let q = |i: usize| format!("q[{i}]");
    match &g.kind {
        GateKind::RotX { q: a, angle } => vec![format!("rx({:?}) {};", 2.0 * angle, q(*a))],
        GateKind::RotY { q: a, angle } => vec![format!("ry({:?}) {};", 2.0 * angle, q(*a))],
        GateKind::RotZ { q: a, angle } => vec![format!("rz({:?}) {};", 2.0 * angle, q(*a))],
        GateKind::RotAxisZY { q: a, angle, theta } => vec![
            format!("rx({:?}) {};", theta, q(*a)),
            format!("rz({:?}) {};", 2.0 * angle, q(*a)),
            format!("rx({:?}) {};", -theta, q(*a)),
        ],
        GateKind::RotZZ { a, b, angle } => vec![
            format!("cx {},{};", q(*a), q(*b)),
            format!("rz({:?}) {};", 2.0 * angle, q(*b)),
            format!("cx {},{};", q(*a), q(*b)),
        ],
        GateKind::RotXX { a, b, angle } => vec![
            format!("h {};", q(*a)),
            format!("h {};", q(*b)),
            format!("cx {},{};", q(*a), q(*b)),
            format!("rz({:?}) {};", 2.0 * angle, q(*b)),
            format!("cx {},{};", q(*a), q(*b)),
            format!("h {};", q(*a)),
            format!("h {};", q(*b)),
        ],
        GateKind::RotYY { a, b, angle } => vec![
            format!("sdg {};", q(*a)),
            format!("sdg {};", q(*b)),
            format!("h {};", q(*a)),
            format!("h {};", q(*b)),
            format!("cx {},{};", q(*a), q(*b)),
            format!("rz({:?}) {};", 2.0 * angle, q(*b)),
            format!("cx {},{};", q(*a), q(*b)),
            format!("h {};", q(*a)),
            format!("h {};", q(*b)),
            format!("s {};", q(*a)),
            format!("s {};", q(*b)),
        ],
        GateKind::Cnot { control, target } => vec![format!("cx {},{};", q(*control), q(*target))],
        GateKind::Cz { a, b } => vec![format!("cz {},{};", q(*a), q(*b))],
        GateKind::ParityCtrlX { controls, target, sign } => {
            let mut v: Vec<String> = controls.iter().map(|c| format!("cx {},{};", q(*c), q(*target))).collect();
            // cx chain flips on odd parity; the sign=+1 rule flips on even
            if *sign == 1 {
                v.push(format!("x {};", q(*target)));
            }
            v
        }
        GateKind::Pauli { q: a, axis } => match axis {
            PauliAxis::I => vec![format!("id {};", q(*a))],
            ax => vec![format!("{} {};", ax.symbol().to_ascii_lowercase(), q(*a))],
        },
        GateKind::Hadamard { q: a } => vec![format!("h {};", q(*a))],
        GateKind::PhaseShift { q: a, angle } => vec![format!("u1({:?}) {};", angle, q(*a))],
        GateKind::ControlledPauli { control, target, axis } => match axis {
            PauliAxis::I => vec![],
            ax => vec![format!("c{} {},{};", ax.symbol().to_ascii_lowercase(), q(*control), q(*target))],
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n: usize, b: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); 1 << n];
        v[b] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn cnot_and_cz_on_basis_states() {
        let mut c = Circuit::new(2);
        c.push(Gate::new(GateKind::Cnot { control: 0, target: 1 }));
        let mut v = basis(2, 0b01);
        c.apply(&mut v).unwrap();
        assert_eq!(v[0b11], C64::new(1.0, 0.0));
        let mut c = Circuit::new(2);
        c.push(Gate::new(GateKind::Cz { a: 0, b: 1 }));
        let mut v = basis(2, 0b11);
        c.apply(&mut v).unwrap();
        assert_eq!(v[0b11], C64::new(-1.0, 0.0));
    }

    #[test]
    fn parity_controlled_x_truth_table() {
        let g = Gate::new(GateKind::ParityCtrlX { controls: vec![0, 1], target: 2, sign: -1 });
        let mut c = Circuit::new(3);
        c.push(g);
        for b in 0..4usize {
            let mut v = basis(3, b);
            c.apply(&mut v).unwrap();
            // sign·Z0Z1 = +1 ⇔ odd parity when sign = −1
            let flipped = (b.count_ones() % 2) == 1;
            let out = if flipped { b | 4 } else { b };
            assert_eq!(v[out], C64::new(1.0, 0.0), "input {b:03b}");
        }
    }

    #[test]
    fn out_of_range_target_is_rejected() {
        let mut c = Circuit::new(2);
        c.push(Gate::new(GateKind::RotZ { q: 2, angle: 0.1 }));
        let mut v = basis(2, 0);
        assert!(matches!(c.apply(&mut v), Err(Error::QubitOutOfRange { .. })));
    }

    #[test]
    fn text_round_trip() {
        let mut c = Circuit::new(5);
        c.push(Gate::labeled(GateKind::RotAxisZY { q: 0, angle: 0.1118, theta: 0.4636476090008061 }, "omega_E"));
        c.push(Gate::new(GateKind::RotZZ { a: 1, b: 2, angle: -0.05 }));
        c.push(Gate::new(GateKind::ParityCtrlX { controls: vec![3, 4], target: 0, sign: -1 }));
        c.push(Gate::new(GateKind::ControlledPauli { control: 4, target: 1, axis: PauliAxis::Y }));
        c.push(Gate::labeled(GateKind::Pauli { q: 2, axis: PauliAxis::Z }, "V"));
        c.push(Gate::new(GateKind::PhaseShift { q: 3, angle: std::f64::consts::FRAC_PI_2 }));
        let back = Circuit::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert!(Circuit::from_text("frob 0\n").is_err());
        assert!(Circuit::from_text("cnot 0\n").is_err());
    }

    #[test]
    fn qasm_header_and_gates() {
        let mut c = Circuit::new(2);
        c.push(Gate::new(GateKind::Cnot { control: 0, target: 1 }));
        c.push(Gate::new(GateKind::RotZ { q: 1, angle: 0.25 }));
        let q = c.to_qasm();
        assert!(q.starts_with("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\n"));
        assert!(q.contains("cx q[0],q[1];"));
        assert!(q.contains("rz(0.5) q[1];"));
    }

    #[test]
    fn inverse_undoes_circuit() {
        let mut c = Circuit::new(3);
        c.push(Gate::new(GateKind::RotAxisZY { q: 0, angle: 0.3, theta: 0.7 }));
        c.push(Gate::new(GateKind::RotYY { a: 0, b: 2, angle: 0.2 }));
        c.push(Gate::new(GateKind::ParityCtrlX { controls: vec![0, 2], target: 1, sign: 1 }));
        c.push(Gate::new(GateKind::PhaseShift { q: 1, angle: 0.4 }));
        let mut full = c.clone();
        full.extend(&c.inverse());
        let u = full.unitary().unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((u[(i, j)] - C64::new(want, 0.0)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn layer_models() {
        let mut c = Circuit::new(4);
        for (a, b) in [(0, 1), (2, 3), (1, 2), (3, 0)] {
            c.push(Gate::new(GateKind::Cz { a, b }));
        }
        assert_eq!(c.depth(LayerModel::DisjointSupport), 2);
        assert_eq!(c.depth(LayerModel::Commuting), 1);
        c.push(Gate::new(GateKind::RotY { q: 0, angle: 0.1 }));
        c.push(Gate::new(GateKind::RotY { q: 1, angle: 0.1 }));
        assert_eq!(c.depth(LayerModel::Commuting), 2);
    }
}
