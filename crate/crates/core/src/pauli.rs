//! Pauli strings with exact phase tracking, and normalized sums of them.
//!
//! Qubit 0 is the least-significant bit of a basis index. A `PauliString`
//! stores only its non-identity factors, sorted by qubit.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative tolerance below which merged coefficients are dropped.
pub const PRUNE_TOL: f64 = 1e-14;

/// Default largest register realised as a dense matrix.
pub const DEFAULT_DENSE_CAP: usize = 14;

/// Largest register whose norm is computed exactly (an SVD is cubic).
pub const NORM_DENSE_CAP: usize = 11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliAxis {
    I,
    X,
    Y,
    Z,
}

impl PauliAxis {
    /// `self · other = i^k · axis`, returned as `(k, axis)`.
    pub fn mul(self, other: Self) -> (u8, PauliAxis) {
        use PauliAxis::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (a, b) if a == b => (0, I),
            (X, Y) => (1, Z),
            (Y, X) => (3, Z),
            (Y, Z) => (1, X),
            (Z, Y) => (3, X),
            (Z, X) => (1, Y),
            (X, Z) => (3, Y),
            _ => unreachable!(),
        }
    }

    pub fn commutes_with(self, other: Self) -> bool {
        self == PauliAxis::I || other == PauliAxis::I || self == other
    }

    pub fn symbol(self) -> char {
        match self {
            PauliAxis::I => 'I',
            PauliAxis::X => 'X',
            PauliAxis::Y => 'Y',
            PauliAxis::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'I' => Some(PauliAxis::I),
            'X' => Some(PauliAxis::X),
            'Y' => Some(PauliAxis::Y),
            'Z' => Some(PauliAxis::Z),
            _ => None,
        }
    }

    /// 2×2 matrix in the computational basis.
    pub fn matrix(self) -> [[C64; 2]; 2] {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            PauliAxis::I => [[l, o], [o, l]],
            PauliAxis::X => [[o, l], [l, o]],
            PauliAxis::Y => [[o, -i], [i, o]],
            PauliAxis::Z => [[l, o], [o, -l]],
        }
    }
}

/// `i^k`.
pub fn i_pow(k: u8) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    ops: Vec<(usize, PauliAxis)>,
}

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(qubit: usize, axis: PauliAxis) -> Self {
        if axis == PauliAxis::I {
            Self::identity()
        } else {
            Self { ops: vec![(qubit, axis)] }
        }
    }

    /// Builds a string from distinct-qubit factors; identity factors are dropped.
    pub fn new(ops: impl IntoIterator<Item = (usize, PauliAxis)>) -> Result<Self> {
        let mut ops: Vec<_> = ops.into_iter().filter(|&(_, a)| a != PauliAxis::I).collect();
        ops.sort_unstable();
        if let Some(w) = ops.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateQubit(w[0].0));
        }
        Ok(Self { ops })
    }

    /// Same axis on every listed qubit.
    pub fn uniform(qubits: impl IntoIterator<Item = usize>, axis: PauliAxis) -> Result<Self> {
        Self::new(qubits.into_iter().map(|q| (q, axis)))
    }

    pub fn get(&self, qubit: usize) -> PauliAxis {
        match self.ops.binary_search_by_key(&qubit, |&(q, _)| q) {
            Ok(k) => self.ops[k].1,
            Err(_) => PauliAxis::I,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, PauliAxis)> + '_ {
        self.ops.iter().copied()
    }

    pub fn weight(&self) -> usize {
        self.ops.len()
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.ops.iter().map(|&(q, _)| q)
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.ops.last().map(|&(q, _)| q)
    }

    /// `self · other = i^k · string`.
    pub fn mul(&self, other: &Self) -> (u8, PauliString) {
        let (a, b) = (&self.ops, &other.ops);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let mut k = 0u8;
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let (dk, ax) = a[i].1.mul(b[j].1);
                    k = (k + dk) % 4;
                    if ax != PauliAxis::I {
                        out.push((a[i].0, ax));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        (k, PauliString { ops: out })
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        let (a, b) = (&self.ops, &other.ops);
        let (mut i, mut j) = (0, 0);
        let mut anti = false;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    if !a[i].1.commutes_with(b[j].1) {
                        anti = !anti;
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        !anti
    }

    /// Relabels qubits; `f` must be injective on the support.
    pub fn remap(&self, f: impl Fn(usize) -> usize) -> Result<Self> {
        Self::new(self.ops.iter().map(|&(q, a)| (f(q), a)))
    }

    /// Bit masks `(x, z, #Y)` such that `P = i^{#Y} X^x Z^z`.
    pub fn masks(&self) -> (u64, u64, u32) {
        let (mut x, mut z, mut ny) = (0u64, 0u64, 0u32);
        for &(q, a) in &self.ops {
            assert!(q < 64, "basis-state action needs qubits below 64");
            match a {
                PauliAxis::X => x |= 1 << q,
                PauliAxis::Z => z |= 1 << q,
                PauliAxis::Y => {
                    x |= 1 << q;
                    z |= 1 << q;
                    ny += 1;
                }
                PauliAxis::I => {}
            }
        }
        (x, z, ny)
    }
}

/// Action of a string on basis states, with masks precomputed.
#[derive(Clone, Copy, Debug)]
pub struct BasisAction {
    x: u64,
    z: u64,
    base: C64,
}

impl BasisAction {
    pub fn new(s: &PauliString, coeff: C64) -> Self {
        let (x, z, ny) = s.masks();
        Self { x, z, base: coeff * i_pow((ny % 4) as u8) }
    }

    /// `c·P|b⟩ = amplitude·|b'⟩`.
    #[inline]
    pub fn apply(&self, b: u64) -> (C64, u64) {
        let amp = if (b & self.z).count_ones() % 2 == 1 { -self.base } else { self.base };
        (amp, b ^ self.x)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ops.is_empty() {
            return write!(f, "I");
        }
        for (k, &(q, a)) in self.ops.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}{}", a.symbol(), q)?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses words like `"Z3 Y4 Z5"`; `"I"` or `""` is the identity.
    fn from_str(s: &str) -> Result<Self> {
        let mut ops = Vec::new();
        for tok in s.split_whitespace() {
            if tok == "I" {
                continue;
            }
            let mut chars = tok.chars();
            let axis = chars
                .next()
                .and_then(PauliAxis::from_symbol)
                .ok_or_else(|| Error::Parse { line: 0, msg: format!("bad Pauli factor `{tok}`") })?;
            let q: usize = chars
                .as_str()
                .parse()
                .map_err(|_| Error::Parse { line: 0, msg: format!("bad qubit index in `{tok}`") })?;
            ops.push((q, axis));
        }
        Self::new(ops)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    pub coeff: C64,
    pub string: PauliString,
}

impl PauliTerm {
    pub fn new(coeff: C64, string: PauliString) -> Self {
        Self { coeff, string }
    }

    pub fn multiply(&self, other: &Self) -> Self {
        let (k, s) = self.string.mul(&other.string);
        Self { coeff: self.coeff * other.coeff * i_pow(k), string: s }
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        self.string.commutes_with(&other.string)
    }

    pub fn adjoint(&self) -> Self {
        Self { coeff: self.coeff.conj(), string: self.string.clone() }
    }
}

/// Sum of weighted Pauli strings, always kept normalized: sorted by string,
/// merged, dust-pruned.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSum {
    register_size: usize,
    terms: Vec<PauliTerm>,
}

impl OperatorSum {
    pub fn zero(register_size: usize) -> Self {
        Self { register_size, terms: Vec::new() }
    }

    pub fn identity(register_size: usize) -> Self {
        Self::scalar(register_size, C64::new(1.0, 0.0))
    }

    pub fn scalar(register_size: usize, c: C64) -> Self {
        Self::from_terms(register_size, vec![PauliTerm::new(c, PauliString::identity())])
            .expect("identity fits any register")
    }

    pub fn pauli(register_size: usize, qubit: usize, axis: PauliAxis) -> Result<Self> {
        Self::from_terms(register_size, vec![PauliTerm::new(C64::new(1.0, 0.0), PauliString::single(qubit, axis))])
    }

    pub fn from_string(register_size: usize, coeff: C64, string: PauliString) -> Result<Self> {
        Self::from_terms(register_size, vec![PauliTerm::new(coeff, string)])
    }

    /// `σ^+ = (X + iY)/2 = |0⟩⟨1|`.
    pub fn sigma_plus(register_size: usize, qubit: usize) -> Result<Self> {
        Self::ladder(register_size, qubit, 1.0)
    }

    /// `σ^- = (X − iY)/2 = |1⟩⟨0|`.
    pub fn sigma_minus(register_size: usize, qubit: usize) -> Result<Self> {
        Self::ladder(register_size, qubit, -1.0)
    }

    fn ladder(register_size: usize, qubit: usize, s: f64) -> Result<Self> {
        Self::from_terms(
            register_size,
            vec![
                PauliTerm::new(C64::new(0.5, 0.0), PauliString::single(qubit, PauliAxis::X)),
                PauliTerm::new(C64::new(0.0, 0.5 * s), PauliString::single(qubit, PauliAxis::Y)),
            ],
        )
    }

    /// `N = (1 + Z)/2`, the projector on `|0⟩`.
    pub fn number(register_size: usize, qubit: usize) -> Result<Self> {
        Self::from_terms(
            register_size,
            vec![
                PauliTerm::new(C64::new(0.5, 0.0), PauliString::identity()),
                PauliTerm::new(C64::new(0.5, 0.0), PauliString::single(qubit, PauliAxis::Z)),
            ],
        )
    }

    pub fn from_terms(register_size: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        for t in &terms {
            if let Some(q) = t.string.max_qubit() {
                if q >= register_size {
                    return Err(Error::QubitOutOfRange { qubit: q, size: register_size });
                }
            }
        }
        Ok(Self { register_size, terms: normalize(terms) })
    }

    pub fn register_size(&self) -> usize {
        self.register_size
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `s` (zero when absent).
    pub fn coeff_of(&self, s: &PauliString) -> C64 {
        match self.terms.binary_search_by(|t| t.string.cmp(s)) {
            Ok(k) => self.terms[k].coeff,
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.register_size != other.register_size {
            return Err(Error::RegisterMismatch(self.register_size, other.register_size));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut t = self.terms.clone();
        t.extend(other.terms.iter().cloned());
        Ok(Self { register_size: self.register_size, terms: normalize(t) })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        let t = self.terms.iter().map(|t| PauliTerm::new(t.coeff * c, t.string.clone())).collect();
        Self { register_size: self.register_size, terms: normalize(t) }
    }

    pub fn scale_re(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    /// Operator product `self · other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut t = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                t.push(a.multiply(b));
            }
        }
        Ok(Self { register_size: self.register_size, terms: normalize(t) })
    }

    /// `AB − BA`; only anticommuting pairs contribute, so the result is
    /// exactly zero when every pair commutes.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut t = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                if !a.commutes_with(b) {
                    let mut p = a.multiply(b);
                    p.coeff *= 2.0;
                    t.push(p);
                }
            }
        }
        Ok(Self { register_size: self.register_size, terms: normalize(t) })
    }

    pub fn commutes_with(&self, other: &Self) -> Result<bool> {
        Ok(self.commutator(other)?.is_zero())
    }

    pub fn adjoint(&self) -> Self {
        Self { register_size: self.register_size, terms: self.terms.iter().map(PauliTerm::adjoint).collect() }
    }

    /// Largest imaginary part of any coefficient; zero for hermitian sums.
    pub fn antihermitian_part_max(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.antihermitian_part_max() <= tol
    }

    /// Largest coefficient difference against `other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        let d = self.sub(other)?;
        Ok(d.terms.iter().map(|t| t.coeff.norm()).fold(0.0, f64::max))
    }

    /// Same register and every coefficient within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other).map(|d| d <= tol).unwrap_or(false)
    }

    /// Moves every qubit `q` to `f(q)` in a register of `new_size` qubits.
    pub fn remap(&self, new_size: usize, f: impl Fn(usize) -> usize) -> Result<Self> {
        let mut t = Vec::with_capacity(self.terms.len());
        for term in &self.terms {
            t.push(PauliTerm::new(term.coeff, term.string.remap(&f)?));
        }
        Self::from_terms(new_size, t)
    }

    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).sum()
    }

    /// Qubits touched by any term.
    pub fn support(&self) -> Vec<usize> {
        let mut q: Vec<usize> = self.terms.iter().flat_map(|t| t.string.qubits()).collect();
        q.sort_unstable();
        q.dedup();
        q
    }

    pub fn to_dense(&self, cap: usize) -> Result<DMatrix<C64>> {
        let n = self.register_size;
        if n > cap {
            return Err(Error::CapExceeded { qubits: n, cap });
        }
        let dim = 1usize << n;
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for t in &self.terms {
            let act = BasisAction::new(&t.string, t.coeff);
            for b in 0..dim as u64 {
                let (a, b2) = act.apply(b);
                m[(b2 as usize, b as usize)] += a;
            }
        }
        Ok(m)
    }

    /// Matrix-free `A|ψ⟩`.
    pub fn apply(&self, amps: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); amps.len()];
        for t in &self.terms {
            let act = BasisAction::new(&t.string, t.coeff);
            for (b, &psi) in amps.iter().enumerate() {
                if psi == C64::new(0.0, 0.0) {
                    continue;
                }
                let (a, b2) = act.apply(b as u64);
                out[b2 as usize] += a * psi;
            }
        }
        out
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, amps: &[C64]) -> C64 {
        let a = self.apply(amps);
        amps.iter().zip(&a).map(|(x, y)| x.conj() * y).sum()
    }

    /// Spectral norm when the register fits `cap`, else the triangle bound.
    /// The flag reports which one was returned.
    pub fn operator_norm(&self, cap: usize) -> (f64, bool) {
        if self.is_zero() {
            return (0.0, true);
        }
        if self.register_size > cap {
            return (self.one_norm(), false);
        }
        if self.terms.len() == 1 {
            return (self.terms[0].coeff.norm(), true);
        }
        let m = self.to_dense(cap).expect("size checked");
        let herm = self.is_hermitian(1e-14 * self.one_norm());
        let antiherm = self.terms.iter().all(|t| t.coeff.re.abs() <= 1e-14 * self.one_norm());
        let v = if herm || antiherm {
            let m = if herm { m } else { m * C64::new(0.0, -1.0) };
            m.symmetric_eigenvalues().iter().map(|x| x.abs()).fold(0.0, f64::max)
        } else {
            m.singular_values().max()
        };
        (v, true)
    }

    /// One line per term, `re im word`, after a `# register_size N` header.
    /// Floats use the shortest round-trip representation.
    pub fn to_text(&self) -> String {
        let mut s = format!("# register_size {}\n", self.register_size);
        for t in &self.terms {
            s.push_str(&format!("{:?} {:?} {}\n", t.coeff.re, t.coeff.im, t.string));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut size: Option<usize> = None;
        let mut terms = Vec::new();
        let mut max_q = 0usize;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("register_size") {
                    let v = it.next().and_then(|v| v.parse().ok());
                    size = Some(v.ok_or_else(|| Error::Parse { line: ln + 1, msg: "bad register_size".into() })?);
                }
                continue;
            }
            let (re, rest) = split_tok(line);
            let (im, word) = split_tok(rest);
            let perr = |m: &str| Error::Parse { line: ln + 1, msg: m.to_string() };
            let re: f64 = re.parse().map_err(|_| perr("bad real part"))?;
            let im: f64 = im.parse().map_err(|_| perr("bad imaginary part"))?;
            let string: PauliString = word.parse().map_err(|e| match e {
                Error::Parse { msg, .. } => Error::Parse { line: ln + 1, msg },
                other => other,
            })?;
            if let Some(q) = string.max_qubit() {
                max_q = max_q.max(q + 1);
            }
            terms.push(PauliTerm::new(C64::new(re, im), string));
        }
        Self::from_terms(size.unwrap_or(max_q), terms)
    }
}

fn split_tok(s: &str) -> (&str, &str) {
    let s = s.trim_start();
    match s.find(char::is_whitespace) {
        Some(k) => (&s[..k], s[k..].trim_start()),
        None => (s, ""),
    }
}

/// Sort, merge equal strings, drop coefficients below `PRUNE_TOL` relative to
/// the largest input coefficient. Independent of input order.
fn normalize(mut terms: Vec<PauliTerm>) -> Vec<PauliTerm> {
    let scale = terms.iter().map(|t| t.coeff.norm()).fold(0.0, f64::max);
    // Ties broken by coefficient so the floating-point merge order, and hence
    // the result, does not depend on the input order.
    terms.sort_by(|a, b| {
        a.string
            .cmp(&b.string)
            .then(a.coeff.re.total_cmp(&b.coeff.re))
            .then(a.coeff.im.total_cmp(&b.coeff.im))
    });
    let mut out: Vec<PauliTerm> = Vec::with_capacity(terms.len());
    for t in terms {
        match out.last_mut() {
            Some(last) if last.string == t.string => last.coeff += t.coeff,
            _ => out.push(t),
        }
    }
    out.retain(|t| t.coeff.norm() > PRUNE_TOL * scale && t.coeff != C64::new(0.0, 0.0));
    out
}
