//! Text-described hopping and plaquette templates for square lattices.
//!
//! One template per line:
//!
//! ```text
//! <coupling> <hc|nohc> <re> <im> <factor> <factor> ...
//! ```
//!
//! `coupling` is one of `J`, `b`, `h`, `m`, `1`. A factor is either
//! `P@L(dx,dy;i)` (Pauli `P` on the link leaving `x + dx·e1 + dy·e2` along
//! `e_i`) or `P@S(dx,dy)` (a Pauli or ladder `+`/`-` on that site). Factors
//! multiply left to right. A template is instantiated at every site; `Z`
//! link factors falling off an open boundary are dropped, any other missing
//! factor skips the instance.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exact::{diagonalize, spectrum_distance};
use crate::hamiltonian::{build_fermionic, build_hardcore_h1, ModelParams};
use crate::lattice::{sector_basis, Boundary, LatticeLayout, RegisterLayout, SectorSpec};
use crate::pauli::{OperatorSum, PauliAxis, C64};

pub const DEFAULT_2D: &str = include_str!("../data/default_2d.terms");

const VALIDATION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coupling {
    J,
    B,
    H,
    M,
    One,
}

impl Coupling {
    fn value(self, p: &ModelParams) -> f64 {
        match self {
            Coupling::J => p.j,
            Coupling::B => p.b,
            Coupling::H => p.h,
            Coupling::M => p.m,
            Coupling::One => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorOp {
    Pauli(PauliAxis),
    Raise,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Link { dx: i64, dy: i64, dir: usize },
    Site { dx: i64, dy: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Factor {
    pub op: FactorOp,
    pub target: Target,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TermTemplate {
    pub coupling: Coupling,
    pub hermitian_conjugate: bool,
    pub coeff: C64,
    pub factors: Vec<Factor>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TermSpec {
    pub templates: Vec<TermTemplate>,
}

/// Outcome of checking a spec against the fermionic reference.
#[derive(Clone, Debug, PartialEq)]
pub struct TermSpecReport {
    /// `(description, max eigenvalue deviation)` per comparison.
    pub checks: Vec<(String, f64)>,
}

impl TermSpecReport {
    pub fn max_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.1).fold(0.0, f64::max)
    }
}

impl TermSpec {
    pub fn default_2d() -> Self {
        DEFAULT_2D.parse().expect("bundled term spec parses")
    }

    /// Sum over all sites of every template, on the full register.
    pub fn instantiate(&self, layout: &LatticeLayout, params: &ModelParams) -> Result<OperatorSum> {
        if layout.dim() != 2 {
            return Err(Error::Unsupported("term specs describe square lattices".into()));
        }
        let reg = RegisterLayout::full(layout);
        let n = reg.total();
        let mut acc = OperatorSum::zero(n);
        for t in &self.templates {
            let scale = t.coeff * t.coupling.value(params);
            if scale == C64::new(0.0, 0.0) {
                continue;
            }
            for site in 0..layout.num_sites() {
                let Some(op) = self.instance(t, layout, &reg, site)? else { continue };
                let op = op.scale(scale);
                acc = acc.add(&op)?;
                if t.hermitian_conjugate {
                    acc = acc.add(&op.adjoint())?;
                }
            }
        }
        Ok(acc)
    }

    fn instance(
        &self,
        t: &TermTemplate,
        layout: &LatticeLayout,
        reg: &RegisterLayout,
        site: usize,
    ) -> Result<Option<OperatorSum>> {
        let n = reg.total();
        let c = layout.coords(site);
        let (x1, x2) = (c[0] as i64, c[1] as i64);
        let mut out = OperatorSum::identity(n);
        for f in &t.factors {
            let q = match f.target {
                Target::Link { dx, dy, dir } => layout
                    .site_at(x1 + dx, x2 + dy)
                    .and_then(|s| layout.link_index(s, dir))
                    .and_then(|l| reg.link_qubit(l)),
                Target::Site { dx, dy } => layout.site_at(x1 + dx, x2 + dy).and_then(|s| reg.site_qubit(s)),
            };
            let q = match (q, f.op, f.target) {
                (Some(q), _, _) => q,
                (None, FactorOp::Pauli(PauliAxis::Z), Target::Link { .. }) => continue,
                (None, _, _) => return Ok(None),
            };
            let factor = match f.op {
                FactorOp::Pauli(a) => OperatorSum::pauli(n, q, a)?,
                FactorOp::Raise => OperatorSum::sigma_plus(n, q)?,
                FactorOp::Lower => OperatorSum::sigma_minus(n, q)?,
            };
            out = out.mul(&factor)?;
        }
        Ok(Some(out))
    }

    /// Accepts the spec only if the resulting `H⁽¹⁾` is gauge invariant and
    /// reproduces the fermionic spectrum (to `1e-10`) on small square
    /// lattices, at `params` and at a generic coupling point.
    pub fn validate(&self, params: &ModelParams) -> Result<TermSpecReport> {
        let generic = ModelParams::new(0.7, 1.1, 0.9).with_b(0.6);
        let layouts = [
            LatticeLayout::square(2, 2, Boundary::Periodic)?,
            LatticeLayout::square(2, 2, Boundary::Open)?,
            LatticeLayout::square(3, 2, Boundary::Open)?,
        ];
        let mut report = TermSpecReport { checks: Vec::new() };
        for layout in &layouts {
            let sectors = [SectorSpec::staggered(layout), SectorSpec::explicit(layout, vec![0; layout.num_sites()])?];
            for p in [params, &generic] {
                let hc = build_hardcore_h1(layout, p, Some(self))
                    .map_err(|e| Error::TermSpecRejected(format!("{e}")))?;
                let fe = build_fermionic(layout, p)?;
                for sector in &sectors {
                    let basis = sector_basis(layout, sector)?;
                    let a = diagonalize(&hc.operator, Some(&basis), 64)?;
                    let b = diagonalize(&fe.operator, Some(&basis), 64)?;
                    let d = spectrum_distance(&a, &b).unwrap_or(f64::INFINITY);
                    let desc = format!("{:?} {:?} q={:?} h={} J={} m={} b={}", layout.extents(), layout.boundary(), sector.q, p.h, p.j, p.m, p.b);
                    if d.is_nan() || d > VALIDATION_TOL {
                        return Err(Error::TermSpecRejected(format!("spectrum deviates by {d:e} on {desc}")));
                    }
                    report.checks.push((desc, d));
                }
            }
        }
        Ok(report)
    }
}

impl FromStr for TermSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut templates = Vec::new();
        for (i, raw) in s.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            templates.push(parse_template(line).map_err(|msg| Error::Parse { line: i + 1, msg })?);
        }
        Ok(Self { templates })
    }
}

fn parse_template(line: &str) -> std::result::Result<TermTemplate, String> {
    let tok: Vec<&str> = line.split_whitespace().collect();
    if tok.len() < 5 {
        return Err(format!("expected coupling, hc flag, re, im and factors in `{line}`"));
    }
    let coupling = match tok[0] {
        "J" => Coupling::J,
        "b" => Coupling::B,
        "h" => Coupling::H,
        "m" => Coupling::M,
        "1" => Coupling::One,
        other => return Err(format!("unknown coupling `{other}`")),
    };
    let hermitian_conjugate = match tok[1] {
        "hc" => true,
        "nohc" => false,
        other => return Err(format!("expected hc or nohc, got `{other}`")),
    };
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("bad number `{s}`: {e}"));
    let coeff = C64::new(num(tok[2])?, num(tok[3])?);
    let factors = tok[4..].iter().map(|f| parse_factor(f)).collect::<std::result::Result<_, _>>()?;
    Ok(TermTemplate { coupling, hermitian_conjugate, coeff, factors })
}

fn parse_factor(s: &str) -> std::result::Result<Factor, String> {
    let bad = || format!("malformed factor `{s}`");
    let (op, rest) = s.split_once('@').ok_or_else(bad)?;
    let op = match op {
        "+" => FactorOp::Raise,
        "-" => FactorOp::Lower,
        p => FactorOp::Pauli(
            PauliAxis::from_symbol(p.chars().next().ok_or_else(bad)?)
                .filter(|a| *a != PauliAxis::I && p.len() == 1)
                .ok_or_else(bad)?,
        ),
    };
    let kind = rest.chars().next().ok_or_else(bad)?;
    let inner = rest[1..].strip_prefix('(').and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
    let int = |v: &str| v.trim().parse::<i64>().map_err(|_| bad());
    let target = match kind {
        'L' => {
            let (offs, dir) = inner.split_once(';').ok_or_else(bad)?;
            let (dx, dy) = offs.split_once(',').ok_or_else(bad)?;
            let dir = dir.trim().parse::<usize>().map_err(|_| bad())?;
            if !(1..=2).contains(&dir) {
                return Err(format!("link direction must be 1 or 2 in `{s}`"));
            }
            Target::Link { dx: int(dx)?, dy: int(dy)?, dir }
        }
        'S' => {
            let (dx, dy) = inner.split_once(',').ok_or_else(bad)?;
            Target::Site { dx: int(dx)?, dy: int(dy)? }
        }
        _ => return Err(bad()),
    };
    if matches!(target, Target::Link { .. }) && !matches!(op, FactorOp::Pauli(_)) {
        return Err(format!("ladder operators act on sites only: `{s}`"));
    }
    Ok(Factor { op, target })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_spec_parses() {
        let s = TermSpec::default_2d();
        assert_eq!(s.templates.len(), 3);
        assert_eq!(s.templates[2].coupling, Coupling::B);
        assert_eq!(s.templates[0].factors[3], Factor { op: FactorOp::Raise, target: Target::Site { dx: 0, dy: 0 } });
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = "# header\nJ hc 0 1 X@L(0,0;3)".parse::<TermSpec>().unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!("q hc 0 1 X@S(0,0)".parse::<TermSpec>().is_err());
        assert!("J hc 0 1 +@L(0,0;1)".parse::<TermSpec>().is_err());
        assert!("J maybe 0 1 X@S(0,0)".parse::<TermSpec>().is_err());
    }

    #[test]
    fn plaquette_on_two_by_two_loses_its_z_dressing() {
        let l = LatticeLayout::square(2, 2, Boundary::Periodic).unwrap();
        let spec: TermSpec = DEFAULT_2D.lines().filter(|l| l.starts_with('b')).collect::<Vec<_>>().join("\n").parse().unwrap();
        let op = spec.instantiate(&l, &ModelParams::new(0.0, 0.0, 0.0).with_b(1.0)).unwrap();
        assert!(op.terms().iter().all(|t| t.string.iter().all(|(_, a)| a == PauliAxis::Y)));
        assert_eq!(op.len(), 4);
    }
}
