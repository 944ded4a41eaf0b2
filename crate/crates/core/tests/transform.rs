use nalgebra::DMatrix;
use z2lgt::clifford::conjugate_by_gates;
use z2lgt::exact::{diagonalize, hermitian_eigen, restricted_matrix, spectrum_distance, Statevector};
use z2lgt::hamiltonian::{
    build_fermionic, build_gauge_eliminated_h0, build_hardcore_h1, build_matter_eliminated_hat, ModelParams,
};
use z2lgt::lattice::{sector_basis, Boundary, LatticeLayout, RegisterLayout, SectorSpec};
use z2lgt::pauli::{OperatorSum, PauliAxis, PauliString, C64};
use z2lgt::term_spec::TermSpec;
use z2lgt::transform::*;

fn chain(l: usize, b: Boundary) -> LatticeLayout {
    LatticeLayout::chain(l, b).unwrap()
}

fn op(n: usize, c: f64, s: &str) -> OperatorSum {
    OperatorSum::from_string(n, C64::new(c, 0.0), s.parse().unwrap()).unwrap()
}

fn dense_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn params() -> ModelParams {
    ModelParams::new(0.8, 1.2, 0.7)
}

#[test]
fn u0_circuit_matches_defining_product() {
    for l in [2, 3, 4] {
        let lay = chain(l, Boundary::Open);
        for sector in SectorSpec::all(&lay) {
            let c = u0_circuit(&lay, &sector).unwrap().unitary().unwrap();
            let d = build_u0(&lay, &sector, 12).unwrap();
            assert!(dense_diff(&c, &d) < 1e-13);
            let id = DMatrix::<C64>::identity(c.nrows(), c.ncols());
            assert!(dense_diff(&(c.adjoint() * &c), &id) < 1e-12);
        }
    }
}

#[test]
fn u0_is_identity_on_empty_trivial_sector() {
    let lay = chain(4, Boundary::Open);
    let sector = SectorSpec::explicit(&lay, vec![0; 4]).unwrap();
    let u = u0_circuit(&lay, &sector).unwrap();
    // all matter down (N = 0): bits of the four site qubits set
    let psi = Statevector::basis(7, 0b1111);
    let mut out = psi.clone();
    u.apply(&mut out.amps).unwrap();
    assert_eq!(out, psi);
}

#[test]
fn u0_fixes_links_to_plus_one() {
    let p = params();
    for l in [2, 4] {
        let lay = chain(l, Boundary::Open);
        let reg = RegisterLayout::full(&lay);
        let h = build_fermionic(&lay, &p).unwrap().operator;
        for sector in SectorSpec::all(&lay) {
            let u = u0_circuit(&lay, &sector).unwrap();
            for b in sector_basis(&lay, &sector).unwrap() {
                let mut psi = Statevector::basis(reg.total(), b);
                u.apply(&mut psi.amps).unwrap();
                let nz = psi.amps.iter().position(|z| z.norm() > 0.5).unwrap() as u64;
                assert_eq!(nz >> l, 0, "links not all up for basis state {b:b}");
            }
            let hc = conjugate_by_gates(&h, &u).unwrap();
            for k in 0..lay.num_links() {
                let z = OperatorSum::pauli(reg.total(), reg.link_qubit(k).unwrap(), PauliAxis::Z).unwrap();
                assert!(hc.commutes_with(&z).unwrap());
            }
        }
    }
}

#[test]
fn gauge_elimination_reproduces_closed_form() {
    let p = params();
    for l in [2, 4, 6] {
        let lay = chain(l, Boundary::Open);
        let h = build_fermionic(&lay, &p).unwrap().operator;
        for sector in SectorSpec::all(&lay) {
            let derived = eliminate_gauge_fields(&h, &lay, &sector).unwrap();
            let closed = build_gauge_eliminated_h0(&lay, &p, &sector).unwrap().operator;
            assert!(derived.approx_eq(&closed, 1e-14), "L={l} q={:?}\n{}", sector.q, derived.sub(&closed).unwrap().to_text());
        }
    }
}

#[test]
fn two_site_hop_loses_its_link() {
    let lay = chain(2, Boundary::Open);
    let p = ModelParams::new(0.0, 1.5, 0.0);
    let h = build_fermionic(&lay, &p).unwrap().operator;
    let sector = SectorSpec::staggered(&lay);
    let derived = eliminate_gauge_fields(&h, &lay, &sector).unwrap();
    let hop = OperatorSum::sigma_plus(2, 0).unwrap().mul(&OperatorSum::sigma_minus(2, 1).unwrap()).unwrap();
    let want = hop.add(&hop.adjoint()).unwrap().scale_re(-1.5);
    assert!(derived.approx_eq(&want, 1e-15));
}

#[test]
fn u2_circuit_matches_factors() {
    let lays = [chain(2, Boundary::Open), chain(4, Boundary::Open), chain(4, Boundary::Periodic)];
    for lay in &lays {
        for sector in SectorSpec::all(lay) {
            let c = u2_circuit(lay, &sector).unwrap().unitary().unwrap();
            let d = build_u2(lay, &sector, 12).unwrap();
            assert!(dense_diff(&c, &d) < 1e-13);
            assert!(dense_diff(&c, &c.adjoint()) < 1e-13);
            assert!(dense_diff(&(&c * &c), &DMatrix::identity(c.nrows(), c.ncols())) < 1e-13);
            let f = u2_factors(lay, &sector).unwrap();
            for a in &f {
                for b in &f {
                    assert!(a.commutes_with(b).unwrap());
                }
            }
        }
    }
}

#[test]
fn u2_conjugation_table() {
    // L=4 periodic, staggered: sites 0..3 are n=1..4, links 4..7
    let lay = chain(4, Boundary::Periodic);
    let sector = SectorSpec::staggered(&lay);
    let u = u2_circuit(&lay, &sector).unwrap();
    let n = 8;
    let conj = |a: &OperatorSum| conjugate_by_gates(a, &u).unwrap();
    // σ^z_n → (−1)^n S_n σ^z_n; S_1 = Z(link 4) Z(link 1)
    assert!(conj(&op(n, 1.0, "Z0")).approx_eq(&op(n, -1.0, "Z0 Z4 Z7"), 0.0));
    assert!(conj(&op(n, 1.0, "Z1")).approx_eq(&op(n, 1.0, "Z1 Z4 Z5"), 0.0));
    // X_n → σ^x_n X_n σ^x_{n+1}
    assert!(conj(&op(n, 1.0, "X5")).approx_eq(&op(n, 1.0, "X1 X2 X5"), 0.0));
    assert!(conj(&op(n, 1.0, "Z6")).approx_eq(&op(n, 1.0, "Z6"), 0.0));
    // σ^± → P⁺σ^∓ + P⁻σ^±, P^± = (1 ± (−1)^{n+1} S_n)/2
    for (site, sign) in [(0usize, 1.0), (1, -1.0)] {
        let s = OperatorSum::from_string(n, C64::new(sign, 0.0), PauliString::uniform(lay.star(site).unwrap().iter().map(|l| l + 4), PauliAxis::Z).unwrap()).unwrap();
        let one = OperatorSum::identity(n);
        let pp = one.add(&s).unwrap().scale_re(0.5);
        let pm = one.sub(&s).unwrap().scale_re(0.5);
        let sp = OperatorSum::sigma_plus(n, site).unwrap();
        let sm = OperatorSum::sigma_minus(n, site).unwrap();
        let want = pp.mul(&sm).unwrap().add(&pm.mul(&sp).unwrap()).unwrap();
        assert!(conj(&sp).approx_eq(&want, 1e-15));
    }
}

#[test]
fn u2_moves_gauss_law_onto_matter() {
    for lay in [chain(4, Boundary::Periodic), chain(3, Boundary::Open)] {
        let reg = RegisterLayout::full(&lay);
        for sector in SectorSpec::all(&lay) {
            let u = u2_circuit(&lay, &sector).unwrap();
            for b in sector_basis(&lay, &sector).unwrap() {
                let mut psi = Statevector::basis(reg.total(), b);
                u.apply(&mut psi.amps).unwrap();
                for s in 0..lay.num_sites() {
                    let z = OperatorSum::pauli(reg.total(), reg.site_qubit(s).unwrap(), PauliAxis::Z).unwrap();
                    assert!((psi.expectation(&z) + 1.0).norm() < 1e-14);
                }
            }
        }
    }
}

#[test]
fn destagger_flips_even_y() {
    let lay = chain(4, Boundary::Periodic);
    let v = destagger_v(&lay).unwrap();
    assert!(conjugate_by_gates(&op(4, 1.0, "Y1"), &v).unwrap().approx_eq(&op(4, -1.0, "Y1"), 0.0));
    assert!(conjugate_by_gates(&op(4, 1.0, "Y2"), &v).unwrap().approx_eq(&op(4, 1.0, "Y2"), 0.0));
    assert!(conjugate_by_gates(&op(4, 1.0, "Z1"), &v).unwrap().approx_eq(&op(4, 1.0, "Z1"), 0.0));
    let d = v.unitary().unwrap();
    assert!(dense_diff(&(&d * &d), &DMatrix::identity(16, 16)) < 1e-15);
}

#[test]
fn projected_interaction_before_destaggering() {
    let lay = chain(4, Boundary::Periodic);
    let sector = SectorSpec::staggered(&lay);
    let j = 1.3;
    let h1 = build_hardcore_h1(&lay, &ModelParams::new(0.0, j, 0.0), None).unwrap().operator;
    let tilde = project_out(&conjugate_by_gates(&h1, &u2_circuit(&lay, &sector).unwrap()).unwrap(), &lay).unwrap();
    // (J/2)Σ(−1)^{n+1} Y_n (1 + Z_{n−1}Z_{n+1})
    let mut want = OperatorSum::zero(4);
    for k in 1..=4i64 {
        let q = lay.chain_link(k).unwrap();
        let (a, b) = (lay.chain_link(k - 1).unwrap(), lay.chain_link(k + 1).unwrap());
        let s = if k % 2 == 0 { -0.5 * j } else { 0.5 * j };
        want = want.add(&op(4, s, &format!("Y{q}"))).unwrap();
        want = want.add(&OperatorSum::from_string(4, C64::new(s, 0.0), PauliString::new([(a, PauliAxis::Z), (q, PauliAxis::Y), (b, PauliAxis::Z)]).unwrap()).unwrap()).unwrap();
    }
    assert!(tilde.approx_eq(&want, 1e-15), "{}", tilde.to_text());
}

#[test]
fn chain_pipeline_equals_closed_form() {
    let p = params();
    for lay in [chain(4, Boundary::Periodic), chain(6, Boundary::Periodic), chain(4, Boundary::Open), chain(6, Boundary::Open)] {
        let sector = SectorSpec::staggered(&lay);
        let h1 = build_hardcore_h1(&lay, &p, None).unwrap().operator;
        let closed = build_matter_eliminated_hat(&lay, &p).unwrap().total;
        for mass in [MassHandling::Effective, MassHandling::Raw] {
            let d = derive_matter_eliminated(&h1, &lay, &sector, mass).unwrap();
            assert!(d.result.approx_eq(&closed, 1e-14), "{mass:?} {}", d.result.sub(&closed).unwrap().to_text());
            assert_eq!(d.result.register_size(), lay.num_links());
        }
    }
}

#[test]
fn pipeline_without_hopping() {
    let lay = chain(4, Boundary::Periodic);
    let (h, m) = (0.9, 0.4);
    let h1 = build_hardcore_h1(&lay, &ModelParams::new(h, 0.0, m), None).unwrap().operator;
    let d = derive_matter_eliminated(&h1, &lay, &SectorSpec::staggered(&lay), MassHandling::Effective).unwrap();
    let mut want = OperatorSum::zero(4);
    for k in 0..4 {
        want = want.add(&op(4, h, &format!("Z{k}"))).unwrap();
        want = want.add(&op(4, -0.5 * m, &format!("Z{k} Z{}", (k + 1) % 4))).unwrap();
    }
    assert!(d.result.approx_eq(&want, 1e-15));
}

#[test]
fn effective_mass_agrees_on_sector_states() {
    let lay = chain(4, Boundary::Open);
    let p = ModelParams::new(0.0, 0.0, 0.8);
    let h1 = build_hardcore_h1(&lay, &p, None).unwrap().operator;
    for sector in SectorSpec::all(&lay) {
        let eff = effective_mass(&h1, &lay, &sector).unwrap();
        let basis = sector_basis(&lay, &sector).unwrap();
        let a = restricted_matrix(&h1, &basis).unwrap();
        let b = restricted_matrix(&eff, &basis).unwrap();
        assert!(dense_diff(&a, &b) < 1e-15);
    }
}

#[test]
fn unitary_stages_preserve_spectra() {
    let p = params();
    let lay = chain(4, Boundary::Periodic);
    let sector = SectorSpec::staggered(&lay);
    let h1 = build_hardcore_h1(&lay, &p, None).unwrap().operator;
    let before = diagonalize(&h1, None, 12).unwrap();
    let after = diagonalize(&conjugate_by_gates(&h1, &u2_circuit(&lay, &sector).unwrap()).unwrap(), None, 12).unwrap();
    assert!(spectrum_distance(&before, &after).unwrap() < 1e-12);

    let lay = chain(4, Boundary::Open);
    let h = build_fermionic(&lay, &p).unwrap().operator;
    let before = diagonalize(&h, None, 12).unwrap();
    let after = diagonalize(&conjugate_by_gates(&h, &u0_circuit(&lay, &sector_for(&lay)).unwrap()).unwrap(), None, 12).unwrap();
    assert!(spectrum_distance(&before, &after).unwrap() < 1e-12);
}

fn sector_for(lay: &LatticeLayout) -> SectorSpec {
    SectorSpec::staggered(lay)
}

#[test]
fn pipeline_preserves_sector_spectra() {
    let p = params();
    for lay in [chain(4, Boundary::Periodic), chain(4, Boundary::Open), chain(5, Boundary::Open)] {
        let h1 = build_hardcore_h1(&lay, &p, None).unwrap().operator;
        for sector in SectorSpec::all(&lay) {
            if lay.chain_len() % 2 == 1 && sector.is_staggered(&lay) {
                continue; // V needs an even chain
            }
            let d = derive_matter_eliminated(&h1, &lay, &sector, MassHandling::Effective).unwrap();
            let a = diagonalize(&d.result, None, 12).unwrap();
            let b = diagonalize(&h1, Some(&sector_basis(&lay, &sector).unwrap()), 64).unwrap();
            assert_eq!(a.len(), 1 << lay.num_links());
            assert!(spectrum_distance(&a, &b).unwrap() < 1e-10, "q={:?}", sector.q);
        }
    }
}

#[test]
fn state_map_sends_eigenstates_to_eigenstates() {
    let p = params();
    let lay = chain(4, Boundary::Periodic);
    let sector = SectorSpec::staggered(&lay);
    let reg = RegisterLayout::full(&lay);
    let h1 = build_hardcore_h1(&lay, &p, None).unwrap().operator;
    let hat = build_matter_eliminated_hat(&lay, &p).unwrap().total;
    let basis = sector_basis(&lay, &sector).unwrap();
    let (vals, vecs) = hermitian_eigen(&restricted_matrix(&h1, &basis).unwrap()).unwrap();
    for (k, e) in vals.iter().enumerate() {
        let col: Vec<C64> = vecs.column(k).iter().copied().collect();
        let psi = Statevector::from_restricted(reg.total(), &basis, &col);
        let mapped = map_state_to_matter_eliminated(&psi, &lay, &sector).unwrap();
        assert!((mapped.norm() - 1.0).abs() < 1e-12);
        let residual: f64 = hat
            .apply(&mapped.amps)
            .iter()
            .zip(&mapped.amps)
            .map(|(a, b)| (a - b * *e).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(residual < 1e-10);
    }
}

#[test]
fn gauge_state_map_sends_eigenstates_to_eigenstates() {
    let p = params();
    let lay = chain(4, Boundary::Open);
    let sector = SectorSpec::staggered(&lay);
    let reg = RegisterLayout::full(&lay);
    let h = build_fermionic(&lay, &p).unwrap().operator;
    let h0 = build_gauge_eliminated_h0(&lay, &p, &sector).unwrap().operator;
    let basis = sector_basis(&lay, &sector).unwrap();
    let (vals, vecs) = hermitian_eigen(&restricted_matrix(&h, &basis).unwrap()).unwrap();
    for (k, e) in vals.iter().enumerate() {
        let col: Vec<C64> = vecs.column(k).iter().copied().collect();
        let psi = Statevector::from_restricted(reg.total(), &basis, &col);
        let mapped = map_state_to_gauge_eliminated(&psi, &lay, &sector).unwrap();
        let residual: f64 =
            h0.apply(&mapped.amps).iter().zip(&mapped.amps).map(|(a, b)| (a - b * *e).norm_sqr()).sum::<f64>().sqrt();
        assert!(residual < 1e-10);
    }
}

#[test]
fn square_pipeline_preserves_spectrum() {
    let p = ModelParams::new(0.7, 1.1, 0.9).with_b(0.6);
    let spec = TermSpec::default_2d();
    for (l1, l2, b) in [(2, 2, Boundary::Periodic), (2, 2, Boundary::Open), (3, 2, Boundary::Open)] {
        let lay = LatticeLayout::square(l1, l2, b).unwrap();
        let h1 = build_hardcore_h1(&lay, &p, Some(&spec)).unwrap().operator;
        let sector = SectorSpec::staggered(&lay);
        let d = derive_matter_eliminated(&h1, &lay, &sector, MassHandling::Effective).unwrap();
        let a = diagonalize(&d.result, None, 12).unwrap();
        let b = diagonalize(&h1, Some(&sector_basis(&lay, &sector).unwrap()), 64).unwrap();
        assert_eq!(a.len(), 1 << lay.num_links());
        assert!(spectrum_distance(&a, &b).unwrap() < 1e-10, "{l1}x{l2} {b:?}");
    }
}

/// Periodic Chebyshev distance between the origin sites of two links.
fn link_distance(lay: &LatticeLayout, a: usize, b: usize) -> usize {
    let (ca, cb) = (lay.coords(lay.links()[a].from), lay.coords(lay.links()[b].from));
    (0..2)
        .map(|k| {
            let e = lay.extents()[k];
            let d = ca[k].abs_diff(cb[k]);
            d.min(e - d)
        })
        .max()
        .unwrap()
}

#[test]
fn square_pipeline_output_is_local() {
    let p = ModelParams::new(0.7, 1.1, 0.9).with_b(0.6);
    let lay = LatticeLayout::square(4, 4, Boundary::Periodic).unwrap();
    let h1 = build_hardcore_h1(&lay, &p, Some(&TermSpec::default_2d())).unwrap().operator;
    let d = derive_matter_eliminated(&h1, &lay, &SectorSpec::staggered(&lay), MassHandling::Effective).unwrap();
    assert_eq!(d.result.register_size(), lay.num_links());
    for t in d.result.terms() {
        let q: Vec<usize> = t.string.qubits().collect();
        assert!(q.len() <= 8, "{}", t.string);
        for &a in &q {
            for &b in &q {
                assert!(link_distance(&lay, a, b) <= 2, "{}", t.string);
            }
        }
    }
}

#[test]
fn plaquette_keeps_its_support_size() {
    let lay = LatticeLayout::square(4, 4, Boundary::Periodic).unwrap();
    let p = ModelParams::new(0.0, 0.0, 0.0).with_b(1.0);
    let h = build_fermionic(&lay, &p).unwrap().operator;
    let d = derive_matter_eliminated(&h, &lay, &SectorSpec::staggered(&lay), MassHandling::Effective).unwrap();
    assert_eq!(d.result.len(), lay.plaquettes().len());
    assert!(d.result.terms().iter().all(|t| t.string.weight() == 4));
}

#[test]
fn stage_dump_lists_every_stage() {
    let lay = chain(4, Boundary::Periodic);
    let h1 = build_hardcore_h1(&lay, &params(), None).unwrap().operator;
    let d = derive_matter_eliminated(&h1, &lay, &SectorSpec::staggered(&lay), MassHandling::Effective).unwrap();
    let names: Vec<_> = d.stages.iter().map(|s| s.name).collect();
    assert_eq!(names, ["input", "effective_mass", "U2", "project_out", "destagger_V"]);
    let text = d.dump();
    assert_eq!(text.matches("# stage").count(), 5);
}
