//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.

use std::time::Instant;

use nalgebra::DMatrix;
use z2lgt::exact::{
    degenerate_levels, diagonalize, expm_hermitian, hermitian_eigen, phase_aligned_diff, restricted_matrix,
    spectrum_distance, Statevector,
};
use z2lgt::hamiltonian::{
    build_fermionic, build_gauge_eliminated_h0, build_hardcore_h1, build_matter_eliminated_hat, mass_offset,
    sector_parity, FrameTag, ModelParams,
};
use z2lgt::lattice::{parity_basis, sector_basis, sector_basis_bruteforce, Boundary, LatticeLayout, SectorSpec};
use z2lgt::observables::*;
use z2lgt::pauli::{OperatorSum, C64};
use z2lgt::term_spec::TermSpec;
use z2lgt::transform::{derive_matter_eliminated, map_state_to_matter_eliminated, MassHandling};
use z2lgt::trotter::*;

const SPECTRUM_TOL: f64 = 1e-10;
const COEFF_TOL: f64 = 1e-12;
const GATE_TOL: f64 = 1e-12;
const RATIO_RANGE: (f64, f64) = (0.4, 0.6);
const BOUND_SLACK: f64 = 3.0;
const OBSERVABLE_TOL: f64 = 1e-10;
const HADAMARD_TOL: f64 = 1e-12;
const MAX_2D_SUPPORT: usize = 5;
const CAP: usize = 12;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn chain(l: usize, b: Boundary) -> LatticeLayout {
    LatticeLayout::chain(l, b).unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> Result<f64, String> {
    spectrum_distance(a, b).ok_or_else(|| format!("dimension mismatch {} vs {}", a.len(), b.len()))
}

fn exp_of(op: &OperatorSum, eps: f64) -> Result<DMatrix<C64>, String> {
    ok(expm_hermitian(&ok(op.to_dense(CAP))?, eps))
}

fn frame_spectra() -> Outcome {
    let grid = [0.5, 1.0, 2.0];
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for b in [Boundary::Open, Boundary::Periodic] {
        let lay = chain(4, b);
        let sector = SectorSpec::staggered(&lay);
        let basis = ok(sector_basis(&lay, &sector))?;
        for &h in &grid {
            for &j in &grid {
                for &m in &grid {
                    let p = ModelParams::new(h, j, m);
                    let shift = mass_offset(&lay, &p);
                    let fe = ok(diagonalize(&ok(build_fermionic(&lay, &p))?.operator, Some(&basis), 64))?;
                    let h1: Vec<f64> = ok(diagonalize(&ok(build_hardcore_h1(&lay, &p, None))?.operator, Some(&basis), 64))?
                        .iter()
                        .map(|e| e + shift)
                        .collect();
                    let hat: Vec<f64> = ok(diagonalize(&ok(build_matter_eliminated_hat(&lay, &p))?.total, None, CAP))?
                        .iter()
                        .map(|e| e + shift)
                        .collect();
                    let mut all = vec![fe, h1, hat];
                    if b == Boundary::Open {
                        let h0 = ok(build_gauge_eliminated_h0(&lay, &p, &sector))?.operator;
                        let pb = parity_basis(4, sector_parity(&sector));
                        all.push(ok(diagonalize(&h0, Some(&pb), 64))?.iter().map(|e| e + shift).collect());
                    }
                    for x in 0..all.len() {
                        for y in x + 1..all.len() {
                            worst = worst.max(dist(&all[x], &all[y])?);
                        }
                    }
                    cases += 1;
                }
            }
        }
    }
    ensure!(worst <= SPECTRUM_TOL, "max spectral deviation {worst:.2e}");
    Ok(format!("{cases} parameter/boundary cases, max deviation {worst:.2e}"))
}

fn dimensions() -> Outcome {
    let cases = [
        (chain(2, Boundary::Open), 2),
        (chain(4, Boundary::Open), 8),
        (chain(6, Boundary::Open), 32),
        (chain(4, Boundary::Periodic), 16),
        (LatticeLayout::square(2, 2, Boundary::Periodic).unwrap(), 256),
    ];
    let mut got = Vec::new();
    for (lay, want) in cases {
        let sector = SectorSpec::staggered(&lay);
        let n = ok(sector_basis_bruteforce(&lay, &sector, 16))?.len();
        ensure!(n == want && n == 1 << lay.num_links(), "expected {want}, counted {n}");
        ensure!(ok(sector_basis(&lay, &sector))?.len() == n, "enumeration disagrees with brute force");
        got.push(n.to_string());
    }
    Ok(format!("dimensions {}", got.join(", ")))
}

fn pipeline() -> Outcome {
    let p = ModelParams::new(0.8, 1.2, 0.7);
    let mut worst: f64 = 0.0;
    for l in [4, 6, 8] {
        let lay = chain(l, Boundary::Periodic);
        let h1 = ok(build_hardcore_h1(&lay, &p, None))?.operator;
        let derived = ok(derive_matter_eliminated(&h1, &lay, &SectorSpec::staggered(&lay), MassHandling::Effective))?.result;
        let closed = ok(build_matter_eliminated_hat(&lay, &p))?.total;
        let d = ok(derived.max_abs_diff(&closed))?;
        ensure!(d <= COEFF_TOL, "L={l}: coefficient deviation {d:.2e}");
        worst = worst.max(d);
    }
    Ok(format!("L=4,6,8 periodic, max coefficient deviation {worst:.2e}"))
}

fn gate_exactness() -> Outcome {
    let p = ModelParams::new(0.9, 0.7, 1.3);
    let mut worst: f64 = 0.0;
    for eps in [0.01, 0.1] {
        for lay in [chain(6, Boundary::Periodic), chain(6, Boundary::Open)] {
            let hat = ok(build_matter_eliminated_hat(&lay, &p))?;
            let pairs = [
                (ok(compile_omega_e(&lay, p.h, p.j, eps))?, &hat.electric),
                (ok(compile_omega_m(&lay, p.m, eps))?, &hat.mass),
                (ok(compile_omega_gm(&lay, p.j, eps))?, &hat.interaction),
            ];
            for (c, gen) in pairs {
                worst = worst.max(ok(phase_aligned_diff(&ok(c.unitary())?, &exp_of(gen, eps)?))?);
            }
            let sector = SectorSpec::staggered(&lay);
            let plan = ok(TrotterPlan::new(Scheme::MatterEliminated, eps, 1))?;
            let digital = ok(ok(compile_step(&plan, &lay, &p, &sector))?.unitary())?;
            let hybrid = ok(hybrid_step(&lay, &p, eps, CAP))?;
            worst = worst.max(ok(phase_aligned_diff(&digital, &hybrid))?);
        }
        let lay = chain(6, Boundary::Open);
        for sector in [SectorSpec::staggered(&lay), ok(SectorSpec::explicit(&lay, vec![1, 0, 0, 1, 1, 0]))?] {
            let ladder = ok(ok(compile_omega_e0(&lay, p.h, eps, &sector))?.unitary())?;
            let gen = ok(build_gauge_eliminated_h0(&lay, &ModelParams::new(p.h, 0.0, 0.0), &sector))?.operator;
            worst = worst.max(ok(phase_aligned_diff(&ladder, &exp_of(&gen, eps)?))?);
        }
    }
    ensure!(worst <= GATE_TOL, "max deviation {worst:.2e}");
    Ok(format!("L=6, eps 0.01/0.1, max deviation {worst:.2e}"))
}

fn trotter_scaling() -> Outcome {
    let lay = chain(8, Boundary::Periodic);
    let sector = SectorSpec::staggered(&lay);
    let p = ModelParams::new(1.0, 1.0, 1.0);
    let steps = [32, 64, 128, 256];
    let mut errs = Vec::new();
    for &n in &steps {
        let e = ok(measured_error(&ok(TrotterPlan::new(Scheme::MatterEliminated, 1.0, n))?, &lay, &p, &sector, CAP))?;
        let bound = ok(error_bound(&p, 8, 1.0, n))?;
        ensure!(e <= BOUND_SLACK * bound, "N={n}: measured {e:.3e} above {BOUND_SLACK}x bound {bound:.3e}");
        errs.push(e);
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[1] / w[0]).collect();
    for r in &ratios {
        ensure!((RATIO_RANGE.0..=RATIO_RANGE.1).contains(r), "ratio {r:.3} outside {RATIO_RANGE:?}");
    }
    let mut bounds = Vec::new();
    let mut measured = Vec::new();
    for m in [0.0, 1.0, 5.0] {
        let q = ModelParams::new(1.0, 1.0, m);
        bounds.push(ok(error_bound(&q, 8, 1.0, 64))?);
        measured.push(ok(measured_error(&ok(TrotterPlan::new(Scheme::MatterEliminated, 1.0, 64))?, &lay, &q, &sector, CAP))?);
    }
    ensure!(bounds.iter().all(|b| *b == bounds[0]), "bound depends on m: {bounds:?}");
    ensure!(
        measured.windows(2).any(|w| (w[0] - w[1]).abs() > 1e-6),
        "measured error shows no m dependence: {measured:?}"
    );
    Ok(format!(
        "ratios {:.3}/{:.3}/{:.3}; bound at N=64 is {:.4e} for m=0,1,5 while measured is {:.3e}/{:.3e}/{:.3e}",
        ratios[0], ratios[1], ratios[2], bounds[0], measured[0], measured[1], measured[2]
    ))
}

fn commutators() -> Outcome {
    let p = ModelParams::new(0.7, 1.3, 0.9);
    let mut sizes = Vec::new();
    for l in [4, 6, 8] {
        let lay = chain(l, Boundary::Periodic);
        let audit = ok(commutator_audit(&p, &lay))?;
        ensure!(audit.cancellation.is_zero(), "L={l}: [GM,m]+[m,E] leaves {} terms", audit.cancellation.len());
        let (gm_m, gm_e) = ok(expected_commutators(&p, &lay))?;
        ensure!(audit.gm_m.approx_eq(&gm_m, COEFF_TOL), "L={l}: [GM,m] differs from closed form");
        ensure!(audit.gm_e.approx_eq(&gm_e, COEFF_TOL), "L={l}: [GM,E] differs from closed form");
        sizes.push(format!("{}+{}", audit.gm_m.len(), audit.gm_e.len()));
    }
    Ok(format!("cancellation exact, closed forms matched ({} terms)", sizes.join(", ")))
}

fn observables() -> Outcome {
    let lay = chain(4, Boundary::Periodic);
    let sector = SectorSpec::staggered(&lay);
    let p = ModelParams::new(1.0, 1.0, 1.0);
    let h1 = ok(build_hardcore_h1(&lay, &p, None))?.operator;
    let basis = ok(sector_basis(&lay, &sector))?;
    let (vals, vecs) = ok(hermitian_eigen(&ok(restricted_matrix(&h1, &basis))?))?;
    let mut pairs = Vec::new();
    for n in 1..=4 {
        pairs.push((ok(link_field(&lay, FrameTag::Hardcore, &sector, n))?, ok(link_field(&lay, FrameTag::MatterEliminated, &sector, n))?));
        pairs.push((
            ok(charge_density(&lay, FrameTag::Hardcore, &sector, n))?,
            ok(charge_density(&lay, FrameTag::MatterEliminated, &sector, n))?,
        ));
        for r in 1..=3 {
            pairs.push((ok(mesonic_string_hardcore(&lay, n, r))?, ok(mesonic_string_hat(&lay, n, r))?));
        }
    }
    let levels = degenerate_levels(&vals, 1e-8);
    let mut worst: f64 = 0.0;
    let mut mapped_states = Vec::new();
    for &(a, b) in &levels {
        let mut orig = Vec::new();
        let mut mapped = Vec::new();
        for k in a..b {
            let col: Vec<C64> = vecs.column(k).iter().cloned().collect();
            let s = Statevector::from_restricted(h1.register_size(), &basis, &col);
            mapped.push(ok(map_state_to_matter_eliminated(&s, &lay, &sector))?);
            orig.push(s);
        }
        for (x, y) in &pairs {
            let tx: C64 = orig.iter().map(|s| s.expectation(x)).sum();
            let ty: C64 = mapped.iter().map(|s| s.expectation(y)).sum();
            worst = worst.max((tx - ty).norm());
        }
        mapped_states.extend(mapped);
    }
    ensure!(worst <= OBSERVABLE_TOL, "frame deviation {worst:.2e}");
    let mut had: f64 = 0.0;
    for psi in &mapped_states {
        for n in 1..=4 {
            for r in 1..=3 {
                for t in ok(mesonic_terms_hat(&lay, n, r))?.iter().flat_map(|a| a.terms().to_vec()) {
                    let got = ok(hadamard_test_expectation(&t, psi))?;
                    let want = psi.expectation(&ok(OperatorSum::from_terms(4, vec![t]))?);
                    had = had.max((got - want).norm());
                }
            }
        }
    }
    ensure!(had <= HADAMARD_TOL, "Hadamard-test deviation {had:.2e}");
    Ok(format!("{} levels, frame deviation {worst:.2e}, Hadamard deviation {had:.2e}", levels.len()))
}

fn two_dimensions() -> Outcome {
    let lay = LatticeLayout::square(2, 2, Boundary::Periodic).unwrap();
    let p = ModelParams::new(1.0, 1.0, 1.0).with_b(1.0);
    let spec = TermSpec::default_2d();
    let report = ok(spec.validate(&p))?;
    let h1 = ok(build_hardcore_h1(&lay, &p, Some(&spec)))?.operator;
    let sector = SectorSpec::staggered(&lay);
    let hat = ok(derive_matter_eliminated(&h1, &lay, &sector, MassHandling::Effective))?.result;
    ensure!(hat.register_size() == lay.num_links(), "register has {} qubits, expected {} links", hat.register_size(), lay.num_links());
    let max_support = hat.terms().iter().map(|t| t.string.weight()).max().unwrap_or(0);
    let over: Vec<String> = hat.terms().iter().filter(|t| t.string.weight() > MAX_2D_SUPPORT).map(|t| t.string.to_string()).collect();
    let a = ok(diagonalize(&hat, None, CAP))?;
    let b = ok(diagonalize(&h1, Some(&ok(sector_basis(&lay, &sector))?), 64))?;
    ensure!(a.len() == 256, "{} levels", a.len());
    let d = dist(&a, &b)?;
    ensure!(d <= SPECTRUM_TOL, "spectral deviation {d:.2e}");
    ensure!(
        over.is_empty(),
        "max support {max_support} > {MAX_2D_SUPPORT}: {} of {} terms, e.g. {}",
        over.len(),
        hat.len(),
        over[0]
    );
    Ok(format!(
        "term spec accepted ({:.1e}), {} terms, max support {max_support}, spectral deviation {d:.2e}",
        report.max_deviation(),
        hat.len()
    ))
}

fn depth_counts() -> Outcome {
    let p = ModelParams::new(1.0, 1.0, 1.0);
    let mut layers = Vec::new();
    for l in [4, 8, 12] {
        let lay = chain(l, Boundary::Periodic);
        let plan = ok(TrotterPlan::new(Scheme::MatterEliminated, 1.0, 10))?;
        layers.push(ok(layer_report(&plan, &lay, &p, &SectorSpec::staggered(&lay)))?.total_commuting);
    }
    ensure!(layers.windows(2).all(|w| w[0] == w[1]), "layer counts vary: {layers:?}");
    let mut gates = Vec::new();
    for l in [10, 20, 40] {
        let lay = chain(l, Boundary::Open);
        gates.push(ok(compile_omega_e0(&lay, 1.0, 0.1, &SectorSpec::staggered(&lay)))?.len());
    }
    let (d1, d2) = (gates[1] - gates[0], gates[2] - gates[1]);
    ensure!(d2 == 2 * d1, "ladder counts {gates:?} are not linear");
    let ratio = gates[2] as f64 / gates[1] as f64;
    ensure!((1.8..=2.2).contains(&ratio), "ladder ratio {ratio:.3}");
    Ok(format!("step layers {layers:?} at L=4,8,12; ladder gates {gates:?} at L=10,20,40"))
}

// Runs without the libtest harness so the PASS/FAIL lines are never captured.
fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("frame-equivalence spectra", frame_spectra),
        ("restricted dimensions", dimensions),
        ("pipeline identity", pipeline),
        ("gate exactness", gate_exactness),
        ("Trotter error scaling", trotter_scaling),
        ("commutator audit", commutators),
        ("observable equivalence", observables),
        ("2D generation", two_dimensions),
        ("depth counts", depth_counts),
    ];
    let mut failed = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = f();
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("PASS criterion {} ({name}): {msg} [{secs:.1}s]", k + 1),
            Err(msg) => {
                println!("FAIL criterion {} ({name}): {msg} [{secs:.1}s]", k + 1);
                failed.push(k + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
