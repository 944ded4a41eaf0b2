use z2lgt::exact::{diagonalize, spectrum_distance};
use z2lgt::hamiltonian::{
    build_fermionic, build_gauge_eliminated_h0, build_hardcore_h1, mass_offset, sector_parity, ModelParams,
};
use z2lgt::lattice::{parity_basis, sector_basis, Boundary, LatticeLayout, SectorSpec};
use z2lgt::term_spec::TermSpec;
use z2lgt::Error;

fn spectra_match(a: &[f64], b: &[f64], tol: f64) {
    let d = spectrum_distance(a, b).expect("dimension mismatch");
    assert!(d <= tol, "spectra differ by {d:e}");
}

#[test]
fn hardcore_chain_matches_fermions_in_every_sector() {
    let p = ModelParams::new(0.8, 1.3, 0.6);
    for (l, b) in [(4, Boundary::Open), (5, Boundary::Open), (4, Boundary::Periodic)] {
        let layout = LatticeLayout::chain(l, b).unwrap();
        let fe = build_fermionic(&layout, &p).unwrap();
        let hc = build_hardcore_h1(&layout, &p, None).unwrap();
        for sector in SectorSpec::all(&layout) {
            let basis = sector_basis(&layout, &sector).unwrap();
            let a = diagonalize(&fe.operator, Some(&basis), 64).unwrap();
            let shift = mass_offset(&layout, &p);
            let c: Vec<f64> = diagonalize(&hc.operator, Some(&basis), 64).unwrap().iter().map(|e| e + shift).collect();
            spectra_match(&a, &c, 1e-10);
        }
    }
}

#[test]
fn two_site_fermionic_spectrum() {
    let m = 0.7;
    let layout = LatticeLayout::chain(2, Boundary::Open).unwrap();
    let fe = build_fermionic(&layout, &ModelParams::new(0.0, 0.0, m)).unwrap();
    let e = diagonalize(&fe.operator, None, 8).unwrap();
    spectra_match(&e, &[-m, -m, 0.0, 0.0, 0.0, 0.0, m, m], 1e-14);
}

#[test]
fn gauge_eliminated_chain_matches_h1() {
    let p = ModelParams::new(0.9, 1.1, 0.5);
    for l in [3, 4, 6] {
        let layout = LatticeLayout::chain(l, Boundary::Open).unwrap();
        let hc = build_hardcore_h1(&layout, &p, None).unwrap();
        for sector in SectorSpec::all(&layout) {
            let h0 = build_gauge_eliminated_h0(&layout, &p, &sector).unwrap();
            let basis = parity_basis(l, sector_parity(&sector));
            let a = diagonalize(&h0.operator, Some(&basis), 64).unwrap();
            let b = diagonalize(&hc.operator, Some(&sector_basis(&layout, &sector).unwrap()), 64).unwrap();
            spectra_match(&a, &b, 1e-10);
        }
    }
}

#[test]
fn bundled_square_terms_are_accepted() {
    let report = TermSpec::default_2d().validate(&ModelParams::new(1.0, 1.0, 1.0).with_b(1.0)).unwrap();
    assert!(report.max_deviation() <= 1e-10);
    assert!(!report.checks.is_empty());
}

#[test]
fn corrupted_square_terms_are_rejected() {
    let p = ModelParams::new(1.0, 1.0, 1.0).with_b(1.0);
    // dropping a dressing factor breaks gauge invariance
    let no_dressing = z2lgt::term_spec::DEFAULT_2D.replacen("Z@L(0,-1;2) Z@L(1,0;1) ", "", 1);
    let e = no_dressing.parse::<TermSpec>().unwrap().validate(&p).unwrap_err();
    assert!(matches!(e, Error::TermSpecRejected(_)), "{e}");
    // a rescaled hop keeps the symmetry but not the spectrum
    let rescaled = z2lgt::term_spec::DEFAULT_2D.replacen("J hc 0 -1", "J hc 0 -2", 1);
    let e = rescaled.parse::<TermSpec>().unwrap().validate(&p).unwrap_err();
    assert!(matches!(e, Error::TermSpecRejected(_)), "{e}");
}
