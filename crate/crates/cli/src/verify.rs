//! The invariant suite behind `z2lgt verify`.

use std::path::Path;

use anyhow::Result;
use serde::Serialize;
use serde_json::json;
use z2lgt::circuit::Circuit;
use z2lgt::exact::{
    degenerate_levels, diagonalize, expm_hermitian, hermitian_eigen, phase_aligned_diff, restricted_matrix,
    spectrum_distance, Statevector,
};
use z2lgt::hamiltonian::{
    build_fermionic, build_gauge_eliminated_h0, build_hardcore_h1, build_matter_eliminated_hat, mass_offset,
    sector_parity, FrameTag, ModelParams,
};
use z2lgt::lattice::{parity_basis, sector_basis, sector_basis_bruteforce, Boundary, LatticeLayout, SectorSpec};
use z2lgt::observables::{charge_density, link_field, mesonic_string_hardcore, mesonic_string_hat};
use z2lgt::pauli::{OperatorSum, C64};
use z2lgt::term_spec::TermSpec;
use z2lgt::transform::{derive_matter_eliminated, map_state_to_matter_eliminated, MassHandling};
use z2lgt::trotter::{
    commutator_audit, compile_omega_e, compile_omega_e0, compile_omega_gm, compile_omega_m, error_bound,
    expected_commutators, layer_report, measured_error, Scheme, TrotterPlan,
};

use crate::config::{ExperimentConfig, Resolved};
use crate::output::write_json;

const TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type CheckResult = std::result::Result<Outcome, z2lgt::Error>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

struct Suite {
    params: ModelParams,
    cap: usize,
    fault: bool,
    checks: Vec<Check>,
}

impl Suite {
    fn run(&mut self, name: String, f: impl FnOnce(&Self) -> CheckResult) {
        let (status, detail) = match f(self) {
            Ok(Outcome::Pass(d)) => (Status::Pass, d),
            Ok(Outcome::Fail(d)) => (Status::Fail, d),
            Ok(Outcome::Skip(d)) => (Status::Skipped, d),
            Err(z2lgt::Error::CapExceeded { qubits, cap }) => (Status::Skipped, format!("needs {qubits} qubits, cap {cap}")),
            Err(e) => (Status::Fail, e.to_string()),
        };
        log::info!("{name}: {status:?} {detail}");
        self.checks.push(Check { name, status, detail });
    }

    fn over_cap(&self, qubits: usize) -> Option<Outcome> {
        (qubits > self.cap).then(|| Outcome::Skip(format!("needs {qubits} qubits, cap {}", self.cap)))
    }

    /// Closed-form matter-eliminated Hamiltonian; the fault hook flips the
    /// sign of its interaction part.
    fn hat(&self, lay: &LatticeLayout) -> z2lgt::Result<OperatorSum> {
        let hat = build_matter_eliminated_hat(lay, &self.params)?;
        if self.fault {
            hat.electric.add(&hat.mass)?.sub(&hat.interaction)
        } else {
            Ok(hat.total)
        }
    }

    fn frame_spectra(&self, lay: &LatticeLayout) -> CheckResult {
        if let Some(s) = self.over_cap(lay.num_links()) {
            return Ok(s);
        }
        let p = &self.params;
        let sector = SectorSpec::staggered(lay);
        let basis = sector_basis(lay, &sector)?;
        let shift = mass_offset(lay, p);
        let fe = diagonalize(&build_fermionic(lay, p)?.operator, Some(&basis), 64)?;
        let mut others = vec![
            diagonalize(&build_hardcore_h1(lay, p, None)?.operator, Some(&basis), 64)?,
            diagonalize(&self.hat(lay)?, None, self.cap)?,
        ];
        if lay.boundary() == Boundary::Open {
            let h0 = build_gauge_eliminated_h0(lay, p, &sector)?.operator;
            others.push(diagonalize(&h0, Some(&parity_basis(lay.chain_len(), sector_parity(&sector))), 64)?);
        }
        let mut worst: f64 = 0.0;
        for o in &others {
            let shifted: Vec<f64> = o.iter().map(|e| e + shift).collect();
            worst = worst.max(spectrum_distance(&fe, &shifted).unwrap_or(f64::INFINITY));
        }
        Ok(verdict(worst <= TOL, format!("{} frames, max deviation {worst:.2e}", others.len() + 1)))
    }

    fn dimension(&self, lay: &LatticeLayout) -> CheckResult {
        let full = lay.num_sites() + lay.num_links();
        if let Some(s) = self.over_cap(full.saturating_sub(8)) {
            return Ok(s);
        }
        let n = sector_basis_bruteforce(lay, &SectorSpec::staggered(lay), full)?.len();
        let want = 1usize << lay.num_links();
        Ok(verdict(n == want, format!("{n} states, expected {want}")))
    }

    fn pipeline(&self, lay: &LatticeLayout) -> CheckResult {
        let h1 = build_hardcore_h1(lay, &self.params, None)?.operator;
        let d = derive_matter_eliminated(&h1, lay, &SectorSpec::staggered(lay), MassHandling::Effective)?;
        let dev = d.result.max_abs_diff(&self.hat(lay)?)?;
        Ok(verdict(dev <= 1e-12, format!("max coefficient deviation {dev:.2e}")))
    }

    fn gates(&self, lay: &LatticeLayout) -> CheckResult {
        if let Some(s) = self.over_cap(lay.num_links()) {
            return Ok(s);
        }
        let p = &self.params;
        let eps = 0.1;
        let hat = build_matter_eliminated_hat(lay, p)?;
        let cases: [(Circuit, &OperatorSum); 3] = [
            (compile_omega_e(lay, p.h, p.j, eps)?, &hat.electric),
            (compile_omega_m(lay, p.m, eps)?, &hat.mass),
            (compile_omega_gm(lay, p.j, eps)?, &hat.interaction),
        ];
        let mut worst: f64 = 0.0;
        for (c, gen) in cases {
            let want = expm_hermitian(&gen.to_dense(self.cap)?, eps)?;
            worst = worst.max(phase_aligned_diff(&c.unitary()?, &want)?);
        }
        if lay.boundary() == Boundary::Open {
            let sector = SectorSpec::staggered(lay);
            let gen = build_gauge_eliminated_h0(lay, &ModelParams::new(p.h, 0.0, 0.0), &sector)?.operator;
            let want = expm_hermitian(&gen.to_dense(self.cap)?, eps)?;
            worst = worst.max(phase_aligned_diff(&compile_omega_e0(lay, p.h, eps, &sector)?.unitary()?, &want)?);
        }
        Ok(verdict(worst <= 1e-12, format!("max deviation {worst:.2e}")))
    }

    fn commutators(&self, lay: &LatticeLayout) -> CheckResult {
        let audit = match commutator_audit(&self.params, lay) {
            Ok(a) => a,
            Err(z2lgt::Error::InvalidArgument(m)) => return Ok(Outcome::Fail(m)),
            Err(e) => return Err(e),
        };
        let (gm_m, gm_e) = expected_commutators(&self.params, lay)?;
        let ok = audit.gm_m.approx_eq(&gm_m, 1e-12) && audit.gm_e.approx_eq(&gm_e, 1e-12);
        Ok(verdict(ok, format!("[GM,m] {} terms, [GM,E] {} terms", audit.gm_m.len(), audit.gm_e.len())))
    }

    fn observables(&self, lay: &LatticeLayout) -> CheckResult {
        if let Some(s) = self.over_cap((lay.num_sites() + lay.num_links()).saturating_sub(4)) {
            return Ok(s);
        }
        let sector = SectorSpec::staggered(lay);
        let l = lay.chain_len();
        let h1 = build_hardcore_h1(lay, &self.params, None)?.operator;
        let basis = sector_basis(lay, &sector)?;
        let (vals, vecs) = hermitian_eigen(&restricted_matrix(&h1, &basis)?)?;
        let mut pairs = Vec::new();
        for n in 1..=l {
            pairs.push((link_field(lay, FrameTag::Hardcore, &sector, n)?, link_field(lay, FrameTag::MatterEliminated, &sector, n)?));
            pairs.push((
                charge_density(lay, FrameTag::Hardcore, &sector, n)?,
                charge_density(lay, FrameTag::MatterEliminated, &sector, n)?,
            ));
            for r in 1..l.min(4) {
                pairs.push((mesonic_string_hardcore(lay, n, r)?, mesonic_string_hat(lay, n, r)?));
            }
        }
        let levels = degenerate_levels(&vals, 1e-8);
        let mut worst: f64 = 0.0;
        for &(a, b) in &levels {
            let mut x = vec![C64::new(0.0, 0.0); pairs.len()];
            for k in a..b {
                let col: Vec<C64> = vecs.column(k).iter().cloned().collect();
                let s = Statevector::from_restricted(h1.register_size(), &basis, &col);
                let t = map_state_to_matter_eliminated(&s, lay, &sector)?;
                for (i, (p, q)) in pairs.iter().enumerate() {
                    x[i] += s.expectation(p) - t.expectation(q);
                }
            }
            worst = x.iter().map(|z| z.norm()).fold(worst, f64::max);
        }
        Ok(verdict(worst <= TOL, format!("{} levels x {} observables, max deviation {worst:.2e}", levels.len(), pairs.len())))
    }

    fn trotter(&self, lay: &LatticeLayout) -> CheckResult {
        if let Some(s) = self.over_cap(lay.num_links()) {
            return Ok(s);
        }
        let sector = SectorSpec::staggered(lay);
        let l = lay.chain_len();
        let e = |n: usize| -> z2lgt::Result<f64> {
            measured_error(&TrotterPlan::new(Scheme::MatterEliminated, 1.0, n)?, lay, &self.params, &sector, self.cap)
        };
        let (a, b) = (e(32)?, e(64)?);
        let bound = error_bound(&self.params, l, 1.0, 64)?;
        let ok = b < a && b <= 3.0 * bound;
        Ok(verdict(ok, format!("N=32: {a:.3e}, N=64: {b:.3e}, bound {bound:.3e}")))
    }
}

pub fn verify(cfg: &ExperimentConfig, out: &Path, inject_fault: bool) -> Result<bool> {
    let r: Resolved = cfg.validate()?;
    let mut suite = Suite {
        params: r.params,
        cap: r.cap,
        fault: inject_fault || cfg.verify.inject_fault,
        checks: Vec::new(),
    };
    for &l in &cfg.verify.sizes {
        for b in [Boundary::Open, Boundary::Periodic] {
            let tag = format!("L={l} {}", if b == Boundary::Open { "open" } else { "periodic" });
            let lay = match LatticeLayout::chain(l, b) {
                Ok(lay) => lay,
                Err(e) => {
                    suite.checks.push(Check { name: format!("layout {tag}"), status: Status::Skipped, detail: e.to_string() });
                    continue;
                }
            };
            suite.run(format!("frame_spectra {tag}"), |s| s.frame_spectra(&lay));
            suite.run(format!("dimension {tag}"), |s| s.dimension(&lay));
            suite.run(format!("pipeline {tag}"), |s| s.pipeline(&lay));
            suite.run(format!("gates {tag}"), |s| s.gates(&lay));
            if b == Boundary::Periodic {
                suite.run(format!("commutators {tag}"), |s| s.commutators(&lay));
                suite.run(format!("observables {tag}"), |s| s.observables(&lay));
                suite.run(format!("trotter {tag}"), |s| s.trotter(&lay));
            }
        }
    }
    suite.run("layers".into(), |s| {
        let mut counts = Vec::new();
        for l in [4, 8, 12] {
            let lay = LatticeLayout::chain(l, Boundary::Periodic)?;
            let plan = TrotterPlan::new(Scheme::MatterEliminated, 1.0, 1)?;
            counts.push(layer_report(&plan, &lay, &s.params, &SectorSpec::staggered(&lay))?.total_commuting);
        }
        Ok(verdict(counts.windows(2).all(|w| w[0] == w[1]), format!("layers {counts:?} at L=4,8,12")))
    });
    suite.run("ladder".into(), |_| {
        let mut g = Vec::new();
        for l in [10, 20, 40] {
            let lay = LatticeLayout::chain(l, Boundary::Open)?;
            g.push(compile_omega_e0(&lay, 1.0, 0.1, &SectorSpec::staggered(&lay))?.len());
        }
        Ok(verdict(g[2] - g[1] == 2 * (g[1] - g[0]), format!("gates {g:?} at L=10,20,40")))
    });
    suite.run("term_spec 2d".into(), |s| {
        if let Some(o) = s.over_cap(8) {
            return Ok(o);
        }
        let p = s.params.with_b(if s.params.b == 0.0 { 1.0 } else { s.params.b });
        match TermSpec::default_2d().validate(&p) {
            Ok(rep) => Ok(Outcome::Pass(format!("{} checks, max deviation {:.2e}", rep.checks.len(), rep.max_deviation()))),
            Err(e) => Ok(Outcome::Fail(e.to_string())),
        }
    });

    let count = |st: Status| suite.checks.iter().filter(|c| c.status == st).count();
    let (pass, fail, skip) = (count(Status::Pass), count(Status::Fail), count(Status::Skipped));
    write_json(
        &out.join("verify.json"),
        &json!({
            "params": {"h": r.params.h, "J": r.params.j, "m": r.params.m, "b": r.params.b},
            "sizes": cfg.verify.sizes,
            "cap": r.cap,
            "fault_injected": suite.fault,
            "passed": pass,
            "failed": fail,
            "skipped": skip,
            "checks": suite.checks,
        }),
    )?;
    for c in &suite.checks {
        println!("{:<8} {:<32} {}", format!("{:?}", c.status).to_uppercase(), c.name, c.detail);
    }
    println!("{pass} passed, {fail} failed, {skip} skipped");
    Ok(fail == 0)
}
