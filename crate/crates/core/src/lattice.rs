//! Lattice geometry, qubit registers, Gauss-law operators and
//! superselection sectors.
//!
//! Chains label sites `1..=L`; link `n` joins sites `n` and `n+1` (periodic:
//! link `L` joins `L` and `1`). Square lattices use coordinates
//! `(x1, x2)` with `0 ≤ xi < Li`, row-major with `x1` fastest; link `(x, i)`
//! emanates from `x` in direction `i ∈ {1, 2}`.
//!
//! Spin convention: `|↑⟩ = |0⟩` is occupied, `N = (1+σ^z)/2`, so
//! `e^{iπN} = −σ^z` and `Θ(x) = −S(x)·σ^z(x)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::pauli::{OperatorSum, PauliAxis, PauliString, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Link {
    pub from: usize,
    /// Direction `1` or `2`.
    pub dir: usize,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeLayout {
    dim: usize,
    extents: Vec<usize>,
    boundary: Boundary,
    links: Vec<Link>,
}

impl LatticeLayout {
    pub fn chain(l: usize, boundary: Boundary) -> Result<Self> {
        Self::new(1, &[l], boundary)
    }

    pub fn square(l1: usize, l2: usize, boundary: Boundary) -> Result<Self> {
        Self::new(2, &[l1, l2], boundary)
    }

    pub fn new(dim: usize, extents: &[usize], boundary: Boundary) -> Result<Self> {
        if !(dim == 1 || dim == 2) || extents.len() != dim {
            return Err(Error::InvalidLayout(format!("need d ∈ {{1,2}} with d extents, got d={dim}, {extents:?}")));
        }
        if extents.iter().any(|&e| e < 2) {
            return Err(Error::InvalidLayout(format!("every extent must be at least 2, got {extents:?}")));
        }
        if boundary == Boundary::Periodic && extents.iter().any(|e| e % 2 == 1) {
            return Err(Error::InvalidLayout(format!("periodic extents must be even, got {extents:?}")));
        }
        let mut layout = Self { dim, extents: extents.to_vec(), boundary, links: Vec::new() };
        for s in 0..layout.num_sites() {
            for dir in 1..=dim {
                if let Some(to) = layout.neighbor(s, dir, true) {
                    layout.links.push(Link { from: s, dir, to });
                }
            }
        }
        Ok(layout)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn num_sites(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Chain length `L` (d=1 only).
    pub fn chain_len(&self) -> usize {
        self.extents[0]
    }

    /// Chain: `[n]` with `n` 1-based. Square: `[x1, x2]`, 0-based.
    pub fn coords(&self, site: usize) -> Vec<usize> {
        match self.dim {
            1 => vec![site + 1],
            _ => vec![site % self.extents[0], site / self.extents[0]],
        }
    }

    /// `(−1)^{x1+…+xd}`, which for chains is `(−1)^n`.
    pub fn site_sign(&self, site: usize) -> f64 {
        if self.coords(site).iter().sum::<usize>() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site < self.num_sites() {
            Ok(())
        } else {
            Err(Error::InvalidSite(site))
        }
    }

    /// Neighbor of `site` one step along `±e_dir`, if it exists.
    pub fn neighbor(&self, site: usize, dir: usize, forward: bool) -> Option<usize> {
        let mut c: Vec<i64> = match self.dim {
            1 => vec![site as i64],
            _ => vec![(site % self.extents[0]) as i64, (site / self.extents[0]) as i64],
        };
        let k = dir - 1;
        c[k] += if forward { 1 } else { -1 };
        let e = self.extents[k] as i64;
        if c[k] < 0 || c[k] >= e {
            match self.boundary {
                Boundary::Open => return None,
                Boundary::Periodic => c[k] = c[k].rem_euclid(e),
            }
        }
        Some(match self.dim {
            1 => c[0] as usize,
            _ => (c[0] + c[1] * self.extents[0] as i64) as usize,
        })
    }

    /// Site index of 0-based square coordinates, wrapping when periodic.
    pub fn site_at(&self, x1: i64, x2: i64) -> Option<usize> {
        let (e1, e2) = (self.extents[0] as i64, *self.extents.get(1).unwrap_or(&1) as i64);
        let (mut a, mut b) = (x1, x2);
        if self.boundary == Boundary::Periodic {
            a = a.rem_euclid(e1);
            b = b.rem_euclid(e2);
        }
        (0..e1).contains(&a).then_some(())?;
        (0..e2).contains(&b).then_some(())?;
        Some((a + b * e1) as usize)
    }

    pub fn link_index(&self, from: usize, dir: usize) -> Option<usize> {
        self.links.iter().position(|l| l.from == from && l.dir == dir)
    }

    /// Site of chain label `n` (1-based); wraps when periodic.
    pub fn chain_site(&self, n: i64) -> Option<usize> {
        let l = self.chain_len() as i64;
        match self.boundary {
            Boundary::Periodic => Some((n - 1).rem_euclid(l) as usize),
            Boundary::Open => (1..=l).contains(&n).then(|| (n - 1) as usize),
        }
    }

    /// Index of chain link `n` (1-based); wraps when periodic, `None` past
    /// the open ends.
    pub fn chain_link(&self, n: i64) -> Option<usize> {
        let l = self.chain_len() as i64;
        match self.boundary {
            Boundary::Periodic => Some((n - 1).rem_euclid(l) as usize),
            Boundary::Open => (1..l).contains(&n).then(|| (n - 1) as usize),
        }
    }

    /// Links incident on `site`.
    pub fn star(&self, site: usize) -> Result<Vec<usize>> {
        self.check_site(site)?;
        let mut v: Vec<usize> =
            self.links.iter().enumerate().filter(|(_, l)| l.from == site || l.to == site).map(|(i, _)| i).collect();
        v.sort_unstable();
        Ok(v)
    }

    /// Plaquettes as link quadruples `[(x,1), (x+e1,2), (x+e2,1), (x,2)]`.
    pub fn plaquettes(&self) -> Vec<[usize; 4]> {
        if self.dim != 2 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for s in 0..self.num_sites() {
            let (Some(r), Some(u)) = (self.neighbor(s, 1, true), self.neighbor(s, 2, true)) else { continue };
            let ls = [self.link_index(s, 1), self.link_index(r, 2), self.link_index(u, 1), self.link_index(s, 2)];
            if let [Some(a), Some(b), Some(c), Some(d)] = ls {
                out.push([a, b, c, d]);
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegisterKind {
    /// Matter block (one qubit per site) followed by the link block.
    Full,
    /// Sites only, after the gauge field is eliminated.
    MatterOnly,
    /// Links only, after the matter is eliminated.
    LinksOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    pub kind: RegisterKind,
    pub num_sites: usize,
    pub num_links: usize,
}

impl RegisterLayout {
    pub fn new(layout: &LatticeLayout, kind: RegisterKind) -> Self {
        Self { kind, num_sites: layout.num_sites(), num_links: layout.num_links() }
    }

    pub fn full(layout: &LatticeLayout) -> Self {
        Self::new(layout, RegisterKind::Full)
    }

    pub fn site_qubit(&self, site: usize) -> Option<usize> {
        match self.kind {
            RegisterKind::Full | RegisterKind::MatterOnly if site < self.num_sites => Some(site),
            _ => None,
        }
    }

    pub fn link_qubit(&self, link: usize) -> Option<usize> {
        match self.kind {
            RegisterKind::Full if link < self.num_links => Some(self.num_sites + link),
            RegisterKind::LinksOnly if link < self.num_links => Some(link),
            _ => None,
        }
    }

    pub fn total(&self) -> usize {
        match self.kind {
            RegisterKind::Full => self.num_sites + self.num_links,
            RegisterKind::MatterOnly => self.num_sites,
            RegisterKind::LinksOnly => self.num_links,
        }
    }
}

/// Static charges `q(x) ∈ {0,1}`; Gauss' law reads `Θ(x) = e^{iπq(x)}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectorSpec {
    pub q: Vec<u8>,
}

impl SectorSpec {
    /// `e^{iπq(x)} = (−1)^{x1+…+xd}`.
    pub fn staggered(layout: &LatticeLayout) -> Self {
        Self { q: (0..layout.num_sites()).map(|s| u8::from(layout.site_sign(s) < 0.0)).collect() }
    }

    pub fn explicit(layout: &LatticeLayout, q: Vec<u8>) -> Result<Self> {
        if q.len() != layout.num_sites() || q.iter().any(|&v| v > 1) {
            return Err(Error::InvalidArgument(format!(
                "sector needs {} charges in {{0,1}}, got {q:?}",
                layout.num_sites()
            )));
        }
        Ok(Self { q })
    }

    pub fn is_staggered(&self, layout: &LatticeLayout) -> bool {
        *self == Self::staggered(layout)
    }

    /// `e_x = e^{iπq(x)}`.
    pub fn charge_sign(&self, site: usize) -> f64 {
        if self.q[site] == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `c_x = −e_x`: inside the sector `σ^z(x) = c_x S(x)`.
    pub fn matter_sign(&self, site: usize) -> f64 {
        -self.charge_sign(site)
    }

    /// All `2^{#sites}` sectors.
    pub fn all(layout: &LatticeLayout) -> Vec<Self> {
        let n = layout.num_sites();
        (0..1u64 << n).map(|m| Self { q: (0..n).map(|s| ((m >> s) & 1) as u8).collect() }).collect()
    }
}

/// Hardcore matter, or fermion number after Jordan–Wigner; both give the same
/// spin-language Gauss operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatterKind {
    FermionNumber,
    Hardcore,
}

/// `S(x)` on the full register.
pub fn star_operator(layout: &LatticeLayout, site: usize) -> Result<OperatorSum> {
    let reg = RegisterLayout::full(layout);
    let qs = layout.star(site)?.into_iter().map(|l| reg.link_qubit(l).unwrap());
    OperatorSum::from_string(reg.total(), C64::new(1.0, 0.0), PauliString::uniform(qs, PauliAxis::Z)?)
}

/// `Θ(x) = S(x) e^{iπN(x)} = −S(x) σ^z(x)` on the full register.
pub fn gauss_operator(layout: &LatticeLayout, site: usize, _kind: MatterKind) -> Result<OperatorSum> {
    let reg = RegisterLayout::full(layout);
    let mut qs: Vec<usize> = layout.star(site)?.into_iter().map(|l| reg.link_qubit(l).unwrap()).collect();
    qs.push(reg.site_qubit(site).unwrap());
    OperatorSum::from_string(reg.total(), C64::new(-1.0, 0.0), PauliString::uniform(qs, PauliAxis::Z)?)
}

/// Sector basis states of the full register, built from link
/// configurations: in a fixed sector the links determine the matter.
/// Sorted ascending.
pub fn sector_basis(layout: &LatticeLayout, sector: &SectorSpec) -> Result<Vec<u64>> {
    let reg = RegisterLayout::full(layout);
    if reg.total() > 63 {
        return Err(Error::CapExceeded { qubits: reg.total(), cap: 63 });
    }
    let stars: Vec<Vec<usize>> = (0..layout.num_sites()).map(|s| layout.star(s)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(1 << layout.num_links());
    for links in 0..1u64 << layout.num_links() {
        let mut b = links << layout.num_sites();
        for (s, star) in stars.iter().enumerate() {
            let flips = star.iter().filter(|&&l| links >> l & 1 == 1).count();
            let star_sign = if flips % 2 == 0 { 1.0 } else { -1.0 };
            // −S σ^z = e  ⇒  σ^z = c·S
            if sector.matter_sign(s) * star_sign < 0.0 {
                b |= 1 << s;
            }
        }
        out.push(b);
    }
    out.sort_unstable();
    Ok(out)
}

/// Same set by scanning every basis state; an independent check.
pub fn sector_basis_bruteforce(layout: &LatticeLayout, sector: &SectorSpec, cap: usize) -> Result<Vec<u64>> {
    let reg = RegisterLayout::full(layout);
    let n = reg.total();
    if n > cap {
        return Err(Error::CapExceeded { qubits: n, cap });
    }
    let gauss: Vec<(u64, f64)> = (0..layout.num_sites())
        .map(|s| {
            let mut mask = 1u64 << s;
            for l in layout.star(s).unwrap() {
                mask |= 1 << reg.link_qubit(l).unwrap();
            }
            (mask, sector.charge_sign(s))
        })
        .collect();
    Ok((0..1u64 << n)
        .filter(|b| {
            gauss.iter().all(|&(mask, e)| {
                let zprod = if (b & mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                -zprod == e
            })
        })
        .collect())
}

/// Orthogonal projector onto the sector, as a dense diagonal matrix.
pub fn sector_projector(layout: &LatticeLayout, sector: &SectorSpec, cap: usize) -> Result<DMatrix<C64>> {
    let n = RegisterLayout::full(layout).total();
    if n > cap {
        return Err(Error::CapExceeded { qubits: n, cap });
    }
    let mut d = DVector::from_element(1 << n, C64::new(0.0, 0.0));
    for b in sector_basis(layout, sector)? {
        d[b as usize] = C64::new(1.0, 0.0);
    }
    Ok(DMatrix::from_diagonal(&d))
}

/// `Π e^{iπN} = Π (−σ^z)` over the given site qubits.
pub fn global_parity_operator(register_size: usize, site_qubits: &[usize]) -> Result<OperatorSum> {
    let sign = if site_qubits.len().is_multiple_of(2) { 1.0 } else { -1.0 };
    OperatorSum::from_string(
        register_size,
        C64::new(sign, 0.0),
        PauliString::uniform(site_qubits.iter().copied(), PauliAxis::Z)?,
    )
}

/// Basis states of `n` site qubits with `Π(−σ^z) = parity`.
pub fn parity_basis(n: usize, parity: f64) -> Vec<u64> {
    (0..1u64 << n)
        .filter(|b| {
            // −σ^z = −1 on |0⟩, +1 on |1⟩
            let zeros = n as u32 - b.count_ones();
            let p = if zeros.is_multiple_of(2) { 1.0 } else { -1.0 };
            p == parity
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn link_counts() {
        assert_eq!(LatticeLayout::chain(4, Boundary::Open).unwrap().num_links(), 3);
        assert_eq!(LatticeLayout::chain(4, Boundary::Periodic).unwrap().num_links(), 4);
        assert_eq!(LatticeLayout::square(2, 2, Boundary::Periodic).unwrap().num_links(), 8);
        assert_eq!(LatticeLayout::square(3, 2, Boundary::Open).unwrap().num_links(), 7);
        assert!(LatticeLayout::chain(5, Boundary::Periodic).is_err());
        assert!(LatticeLayout::chain(1, Boundary::Open).is_err());
    }

    #[test]
    fn stars() {
        let p = LatticeLayout::chain(4, Boundary::Periodic).unwrap();
        // site 2 (index 1) touches links 1 and 2
        assert_eq!(p.star(1).unwrap(), vec![0, 1]);
        let o = LatticeLayout::chain(4, Boundary::Open).unwrap();
        assert_eq!(o.star(0).unwrap(), vec![0]);
        let sq = LatticeLayout::square(2, 2, Boundary::Periodic).unwrap();
        assert_eq!(sq.star(0).unwrap().len(), 4);
        assert!(p.star(9).is_err());
    }

    #[test]
    fn gauss_operator_form() {
        let p = LatticeLayout::chain(4, Boundary::Periodic).unwrap();
        let g = gauss_operator(&p, 1, MatterKind::Hardcore).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.terms()[0].string.to_string(), "Z1 Z4 Z5");
        assert_eq!(g.terms()[0].coeff, C64::new(-1.0, 0.0));
        let sq = g.mul(&g).unwrap();
        assert!(sq.approx_eq(&OperatorSum::identity(8), 0.0));
        let mut prod = OperatorSum::identity(8);
        for s in 0..4 {
            prod = prod.mul(&gauss_operator(&p, s, MatterKind::Hardcore).unwrap()).unwrap();
        }
        let parity = global_parity_operator(8, &[0, 1, 2, 3]).unwrap();
        assert!(prod.approx_eq(&parity, 0.0));
    }

    #[test]
    fn sector_dimensions() {
        for (l, b, dim) in [(4, Boundary::Periodic, 16), (4, Boundary::Open, 8), (2, Boundary::Open, 2)] {
            let lay = LatticeLayout::chain(l, b).unwrap();
            let s = SectorSpec::staggered(&lay);
            let fast = sector_basis(&lay, &s).unwrap();
            assert_eq!(fast.len(), dim);
            assert_eq!(fast, sector_basis_bruteforce(&lay, &s, 14).unwrap());
        }
    }

    #[test]
    fn sectors_are_complete() {
        let lay = LatticeLayout::chain(3, Boundary::Open).unwrap();
        let mut all: Vec<u64> = SectorSpec::all(&lay).iter().flat_map(|s| sector_basis(&lay, s).unwrap()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..32).collect::<Vec<_>>());
    }

    #[test]
    fn staggered_signs() {
        let sq = LatticeLayout::square(2, 2, Boundary::Periodic).unwrap();
        assert_eq!(sq.site_sign(sq.site_at(1, 1).unwrap()), 1.0);
        let c = LatticeLayout::chain(4, Boundary::Open).unwrap();
        assert_eq!(SectorSpec::staggered(&c).q, vec![1, 0, 1, 0]);
    }

    #[test]
    fn parity_projector_rank() {
        assert_eq!(parity_basis(4, 1.0).len(), 8);
        // all-empty state: every site |1⟩, −σ^z = +1
        assert!(parity_basis(2, 1.0).contains(&0b11));
    }
}
