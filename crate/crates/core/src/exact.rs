//! Dense linear algebra: sector-restricted diagonalization, exact time
//! evolution, statevectors and norms.

use nalgebra::{DMatrix, DVector};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::pauli::{BasisAction, OperatorSum, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    pub amps: Vec<C64>,
}

impl Statevector {
    pub fn basis(n: usize, index: u64) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[index as usize] = C64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn from_amps(amps: Vec<C64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidArgument(format!("statevector length {} is not a power of two", amps.len())));
        }
        Ok(Self { amps })
    }

    /// Expands a vector given on sorted basis states into the full register.
    pub fn from_restricted(n: usize, basis: &[u64], v: &[C64]) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        for (b, z) in basis.iter().zip(v) {
            amps[*b as usize] = *z;
        }
        Self { amps }
    }

    pub fn register_size(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        self.amps.iter_mut().for_each(|z| *z /= n);
        self
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn expectation(&self, op: &OperatorSum) -> C64 {
        op.expectation(&self.amps)
    }

    pub fn to_dvector(&self) -> DVector<C64> {
        DVector::from_vec(self.amps.clone())
    }
}

/// Sorted spectrum with provenance for reports.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub frame: String,
    pub layout: String,
    pub sector: Option<Vec<u8>>,
    pub params: Vec<(String, f64)>,
}

impl SpectrumReport {
    /// `# key=value` header lines, then `index,eigenvalue` rows with 17
    /// significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# frame={}\n# layout={}\n", self.frame, self.layout);
        if let Some(q) = &self.sector {
            let q: Vec<String> = q.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("# sector={}\n", q.join("")));
        }
        for (k, v) in &self.params {
            s.push_str(&format!("# {k}={v:.16e}\n"));
        }
        s.push_str("index,eigenvalue\n");
        for (i, e) in self.eigenvalues.iter().enumerate() {
            s.push_str(&format!("{i},{e:.16e}\n"));
        }
        s
    }
}

/// `⟨b_i|A|b_j⟩` over sorted basis states; fails if `A` leaks out of the span.
pub fn restricted_matrix(op: &OperatorSum, basis: &[u64]) -> Result<DMatrix<C64>> {
    let dim = basis.len();
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for t in op.terms() {
        let act = BasisAction::new(&t.string, t.coeff);
        for (j, &b) in basis.iter().enumerate() {
            let (a, b2) = act.apply(b);
            match basis.binary_search(&b2) {
                Ok(i) => m[(i, j)] += a,
                Err(_) => return Err(Error::LeavesSector),
            }
        }
    }
    Ok(m)
}

/// Eigen-decomposition of a hermitian matrix, ascending eigenvalues with
/// matching eigenvector columns. Rejects asymmetry above `1e-10` (relative to
/// the largest entry, floored at one).
pub fn hermitian_eigen(m: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let asym = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if asym > 1e-10 * scale {
        return Err(Error::NotHermitian(asym));
    }
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let vals = idx.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, idx[c])]);
    Ok((vals, vecs))
}

pub fn eigenvalues(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(m)?.0)
}

/// Sorted eigenvalues of `op`, or of `op` restricted to the span of the
/// given basis states.
pub fn diagonalize(op: &OperatorSum, basis: Option<&[u64]>, cap: usize) -> Result<Vec<f64>> {
    match basis {
        Some(b) => {
            if op.register_size() > 63 {
                return Err(Error::CapExceeded { qubits: op.register_size(), cap: 63 });
            }
            eigenvalues(&restricted_matrix(op, b)?)
        }
        None => eigenvalues(&op.to_dense(cap)?),
    }
}

/// `e^{−iMt}` for hermitian `M`.
pub fn expm_hermitian(m: &DMatrix<C64>, t: f64) -> Result<DMatrix<C64>> {
    let (vals, vecs) = hermitian_eigen(m)?;
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&e| C64::from_polar(1.0, -e * t)),
    ));
    Ok(&vecs * phases * vecs.adjoint())
}

/// `e^{−iAt}|ψ0⟩` via eigendecomposition.
pub fn evolve_exact(op: &OperatorSum, t: f64, psi0: &Statevector, cap: usize) -> Result<Statevector> {
    if psi0.register_size() != op.register_size() {
        return Err(Error::RegisterMismatch(psi0.register_size(), op.register_size()));
    }
    let u = expm_hermitian(&op.to_dense(cap)?, t)?;
    let out = u * psi0.to_dvector();
    Ok(Statevector { amps: out.iter().copied().collect() })
}

pub fn apply_circuit(c: &Circuit, psi: &Statevector) -> Result<Statevector> {
    let mut out = psi.clone();
    c.apply(&mut out.amps)?;
    Ok(out)
}

/// Largest singular value of `U − V`.
pub fn spectral_norm_diff(u: &DMatrix<C64>, v: &DMatrix<C64>) -> Result<f64> {
    if u.shape() != v.shape() {
        return Err(Error::InvalidArgument(format!("shape mismatch {:?} vs {:?}", u.shape(), v.shape())));
    }
    Ok((u - v).singular_values().max())
}

/// `‖U − e^{iφ}V‖` with `e^{iφ}` aligned to `tr(V†U)`.
pub fn phase_aligned_diff(u: &DMatrix<C64>, v: &DMatrix<C64>) -> Result<f64> {
    let tr = (v.adjoint() * u).trace();
    let ph = if tr.norm() > 0.0 { tr / tr.norm() } else { C64::new(1.0, 0.0) };
    spectral_norm_diff(u, &(v * ph))
}

/// `M^k` by repeated squaring.
pub fn matrix_power(m: &DMatrix<C64>, mut k: usize) -> DMatrix<C64> {
    let mut result = DMatrix::<C64>::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        base = &base * &base;
        k >>= 1;
    }
    result
}

/// Groups ascending eigenvalues into degenerate levels: `(start, end)` ranges.
pub fn degenerate_levels(vals: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=vals.len() {
        if i == vals.len() || vals[i] - vals[i - 1] > tol {
            out.push((start, i));
            start = i;
        }
    }
    out
}

/// Compares two sorted spectra; returns the largest deviation.
pub fn spectrum_distance(a: &[f64], b: &[f64]) -> Option<f64> {
    (a.len() == b.len()).then(|| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}
