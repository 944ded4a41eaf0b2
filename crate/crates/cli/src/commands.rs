use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::info;
use rayon::prelude::*;
use serde_json::json;
use z2lgt::exact::{
    degenerate_levels, diagonalize, expm_hermitian, hermitian_eigen, restricted_matrix, spectrum_distance,
    SpectrumReport, Statevector,
};
use z2lgt::hamiltonian::{
    build_fermionic, build_gauge_eliminated_h0, build_hardcore_h1, mass_offset, sector_parity, FrameTag, ModelParams,
};
use z2lgt::lattice::{parity_basis, sector_basis, Boundary, LatticeLayout};
use z2lgt::observables::{
    charge_density, compile_string_measurement, link_field, measure_by_hadamard_tests, mesonic_string,
    mesonic_string_hardcore, mesonic_terms_hat,
};
use z2lgt::pauli::{OperatorSum, C64};
use z2lgt::term_spec::TermSpec;
use z2lgt::transform::{
    derive_matter_eliminated, map_state_to_gauge_eliminated, map_state_to_matter_eliminated, Derivation, MassHandling,
};
use z2lgt::trotter::{error_bound, measured_error, scheme_hamiltonian, trotter_evolve, Ordering, Scheme, TrotterPlan};

use crate::config::{ConfigError, ExperimentConfig, InitialState, ObservableSpec, Resolved};
use crate::output::{num, write_csv, write_json, write_text, Plot, Style};

const AGREEMENT_TOL: f64 = 1e-10;

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn layout_name(l: &LatticeLayout) -> String {
    let ext: Vec<String> = l.extents().iter().map(|e| e.to_string()).collect();
    let b = match l.boundary() {
        Boundary::Open => "open",
        Boundary::Periodic => "periodic",
    };
    format!("{}:{}", ext.join("x"), b)
}

fn param_list(p: &ModelParams) -> Vec<(String, f64)> {
    vec![("h".into(), p.h), ("J".into(), p.j), ("m".into(), p.m), ("b".into(), p.b)]
}

/// Restricted sector dimensions are `2^#links`; refuse anything above the cap.
fn check_cap(r: &Resolved) -> Result<()> {
    let n = r.layout.num_links();
    if n > r.cap {
        bail!(z2lgt::Error::CapExceeded { qubits: n, cap: r.cap });
    }
    Ok(())
}

fn require_chain(r: &Resolved, what: &str) -> Result<()> {
    if r.layout.dim() != 1 {
        return Err(config_err(format!("{what} runs on d = 1 chains")));
    }
    Ok(())
}

pub fn load_term_spec(cfg: &ExperimentConfig, path: Option<&Path>) -> Result<Option<TermSpec>> {
    let path = path.or(cfg.term_spec.as_deref());
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading term spec {}", p.display()))?;
            let spec = text.parse::<TermSpec>().map_err(|e| config_err(format!("{}: {e}", p.display())))?;
            Ok(Some(spec))
        }
        None => Ok(None),
    }
}

fn term_spec_for(r: &Resolved, spec: &Option<TermSpec>) -> Option<TermSpec> {
    if r.layout.dim() == 2 {
        Some(spec.clone().unwrap_or_else(TermSpec::default_2d))
    } else {
        None
    }
}

fn dump_derivation(out: &Path, d: &Derivation) -> Result<()> {
    write_text(&out.join("stages.txt"), &d.dump())
}

pub fn spectrum(cfg: &ExperimentConfig, out: &Path, dump_stages: bool) -> Result<()> {
    let r = cfg.validate()?;
    let frames = cfg.frames()?;
    let explicit = cfg.frames.as_ref().is_some_and(|f| !f.iter().any(|n| n == "all"));
    check_cap(&r)?;
    let spec = term_spec_for(&r, &load_term_spec(cfg, None)?);
    let (lay, p, sector) = (&r.layout, &r.params, &r.sector);
    let chain_open = lay.dim() == 1 && lay.boundary() == Boundary::Open;
    if explicit && frames.contains(&FrameTag::GaugeEliminated) && !chain_open {
        return Err(config_err("the gauge-eliminated frame needs an open d = 1 chain"));
    }
    let basis = sector_basis(lay, sector)?;
    let h1 = build_hardcore_h1(lay, p, spec.as_ref())?.operator;
    let offset = mass_offset(lay, p);
    let mut spectra: Vec<(FrameTag, Vec<f64>)> = Vec::new();
    for &frame in &frames {
        let vals = match frame {
            FrameTag::Fermionic => diagonalize(&build_fermionic(lay, p)?.operator, Some(&basis), 64)?,
            FrameTag::Hardcore => diagonalize(&h1, Some(&basis), 64)?,
            FrameTag::GaugeEliminated => {
                if !chain_open {
                    info!("skipping gauge_eliminated: needs an open chain");
                    continue;
                }
                let h0 = build_gauge_eliminated_h0(lay, p, sector)?.operator;
                diagonalize(&h0, Some(&parity_basis(lay.chain_len(), sector_parity(sector))), 64)?
            }
            FrameTag::MatterEliminated => {
                let d = derive_matter_eliminated(&h1, lay, sector, MassHandling::Effective)?;
                if dump_stages {
                    dump_derivation(out, &d)?;
                }
                diagonalize(&d.result, None, r.cap)?
            }
        };
        let shift = if frame == FrameTag::Fermionic { 0.0 } else { offset };
        let mut params = param_list(p);
        params.push(("mass_offset".into(), shift));
        let report = SpectrumReport {
            eigenvalues: vals.clone(),
            frame: frame.name().into(),
            layout: layout_name(lay),
            sector: Some(sector.q.clone()),
            params,
        };
        write_text(&out.join(format!("spectrum_{}.csv", frame.name())), &report.to_csv())?;
        spectra.push((frame, vals.iter().map(|e| e + shift).collect()));
    }
    if dump_stages && !frames.contains(&FrameTag::MatterEliminated) {
        dump_derivation(out, &derive_matter_eliminated(&h1, lay, sector, MassHandling::Effective)?)?;
    }
    let mut worst: f64 = 0.0;
    let mut pairs = Vec::new();
    for a in 0..spectra.len() {
        for b in a + 1..spectra.len() {
            let d = spectrum_distance(&spectra[a].1, &spectra[b].1).unwrap_or(f64::INFINITY);
            worst = worst.max(d);
            pairs.push(json!({"a": spectra[a].0.name(), "b": spectra[b].0.name(), "max_deviation": d}));
        }
    }
    let mut plot = Plot::new(&format!("Spectra, {}", layout_name(lay)), "level index", "energy (fermionic frame)");
    for (f, v) in &spectra {
        plot.add(f.name(), v.iter().enumerate().map(|(i, e)| (i as f64, *e)).collect(), Style::Points);
    }
    plot.write(&out.join("spectrum.svg"))?;
    write_json(
        &out.join("spectrum_summary.json"),
        &json!({
            "layout": layout_name(lay),
            "sector": sector.q,
            "dimension": basis.len(),
            "frames": spectra.iter().map(|s| s.0.name()).collect::<Vec<_>>(),
            "pairs": pairs,
            "agree": worst <= AGREEMENT_TOL,
        }),
    )?;
    println!("{} frames, dimension {}, max pairwise deviation {:.3e}", spectra.len(), basis.len(), worst);
    Ok(())
}

fn scheme_frame(s: Scheme) -> FrameTag {
    match s {
        Scheme::GaugeEliminated => FrameTag::GaugeEliminated,
        Scheme::MatterEliminated | Scheme::Hybrid => FrameTag::MatterEliminated,
    }
}

fn observable_operator(
    spec: &ObservableSpec,
    frame: FrameTag,
    r: &Resolved,
    h: &OperatorSum,
) -> Result<OperatorSum> {
    let (lay, sector) = (&r.layout, &r.sector);
    Ok(match spec {
        ObservableSpec::Link(n) => link_field(lay, frame, sector, *n)?,
        ObservableSpec::Charge(n) => charge_density(lay, frame, sector, *n)?,
        ObservableSpec::Meson(n, k) => mesonic_string(lay, frame, sector, *n, *k)?,
        ObservableSpec::Energy => h.clone(),
    })
}

fn lowest_vector(h: &OperatorSum, basis: &[u64]) -> Result<Statevector> {
    let (_, vecs) = hermitian_eigen(&restricted_matrix(h, basis)?)?;
    let col: Vec<C64> = vecs.column(0).iter().cloned().collect();
    Ok(Statevector::from_restricted(h.register_size(), basis, &col))
}

fn initial_state(cfg: &ExperimentConfig, r: &Resolved, scheme: Scheme, h: &OperatorSum) -> Result<Statevector> {
    let n = h.register_size();
    let target = scheme_frame(scheme);
    match &cfg.initial_state {
        None => Ok(Statevector::basis(n, 0)),
        Some(InitialState::Basis(s)) => {
            if s.len() != n {
                return Err(config_err(format!("basis state `{s}` has {} qubits, the {target} register has {n}", s.len())));
            }
            let idx = s.chars().enumerate().filter(|(_, c)| *c == '1').map(|(k, _)| 1u64 << k).sum();
            Ok(Statevector::basis(n, idx))
        }
        Some(InitialState::Ground(name)) => {
            let frame: FrameTag = name.parse().map_err(|_| config_err(format!("unknown frame `{name}`")))?;
            let (lay, p, sector) = (&r.layout, &r.params, &r.sector);
            match (frame, target) {
                (f, t) if f == t => {
                    let basis: Vec<u64> = match t {
                        FrameTag::GaugeEliminated => parity_basis(lay.chain_len(), sector_parity(sector)),
                        _ => (0..1u64 << n).collect(),
                    };
                    lowest_vector(h, &basis)
                }
                (FrameTag::Hardcore, FrameTag::MatterEliminated) => {
                    let h1 = build_hardcore_h1(lay, p, None)?.operator;
                    let psi = lowest_vector(&h1, &sector_basis(lay, sector)?)?;
                    Ok(map_state_to_matter_eliminated(&psi, lay, sector)?)
                }
                (FrameTag::Fermionic, FrameTag::GaugeEliminated) => {
                    let hf = build_fermionic(lay, p)?.operator;
                    let psi = lowest_vector(&hf, &sector_basis(lay, sector)?)?;
                    Ok(map_state_to_gauge_eliminated(&psi, lay, sector)?)
                }
                (f, t) => Err(config_err(format!("no state map from the {f} frame into the {t} frame"))),
            }
        }
    }
}

pub fn evolve(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let r = cfg.validate()?;
    require_chain(&r, "evolve")?;
    let scheme = cfg.scheme()?;
    let ordering = cfg.orderings()?.ok_or_else(|| config_err("evolve needs a single ordering"))?;
    let steps = cfg.steps(&r)?.ok_or_else(|| config_err("evolve needs one of eps, N, delta"))?;
    let t = cfg.time()?;
    let frame = scheme_frame(scheme);
    let h = scheme_hamiltonian(scheme, &r.layout, &r.params, &r.sector)?;
    if h.register_size() > r.cap {
        bail!(z2lgt::Error::CapExceeded { qubits: h.register_size(), cap: r.cap });
    }
    let specs: Vec<ObservableSpec> = cfg.observables()?.into_iter().filter(|s| *s != ObservableSpec::Energy).collect();
    let mut ops = Vec::new();
    for s in &specs {
        ops.push(observable_operator(s, frame, &r, &h)?);
    }
    ops.push(h.clone());
    let psi0 = initial_state(cfg, &r, scheme, &h)?;
    let plan = TrotterPlan::new(scheme, t, steps)?.with_ordering(ordering);
    let trace = trotter_evolve(&plan, &r.layout, &r.params, &r.sector, &psi0, &ops, r.cap)?;

    let u = expm_hermitian(&h.to_dense(r.cap)?, plan.eps())?;
    let mut exact = psi0.to_dvector();
    let mut exact_rows: Vec<Vec<C64>> = Vec::new();
    for k in 0..=steps {
        if k > 0 {
            exact = &u * exact;
        }
        let s = Statevector { amps: exact.iter().copied().collect() };
        exact_rows.push(ops.iter().map(|o| s.expectation(o)).collect());
    }
    let final_exact = Statevector { amps: exact.iter().copied().collect() };
    let fidelity = final_exact.inner(&trace.state).norm_sqr();

    let mut header = vec!["time".to_string()];
    for s in &specs {
        let l = s.label();
        if matches!(s, ObservableSpec::Meson(..)) {
            header.extend([format!("{l}_exact_re"), format!("{l}_exact_im"), format!("{l}_trotter_re"), format!("{l}_trotter_im")]);
        } else {
            header.extend([format!("{l}_exact"), format!("{l}_trotter")]);
        }
    }
    header.extend(["energy_exact".into(), "energy_trotter".into()]);
    let mut rows = Vec::new();
    for (k, time) in trace.times.iter().enumerate() {
        let mut row = vec![num(*time)];
        for (j, s) in specs.iter().enumerate() {
            let (a, b) = (exact_rows[k][j], trace.expectations[k][j]);
            if matches!(s, ObservableSpec::Meson(..)) {
                row.extend([num(a.re), num(a.im), num(b.re), num(b.im)]);
            } else {
                row.extend([num(a.re), num(b.re)]);
            }
        }
        let e = ops.len() - 1;
        row.extend([num(exact_rows[k][e].re), num(trace.expectations[k][e].re)]);
        rows.push(row);
    }
    let header_ref: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    write_csv(&out.join("evolve.csv"), &header_ref, &rows)?;

    let mut plot = Plot::new(&format!("{scheme} evolution, N = {steps}"), "t", "expectation");
    for (j, s) in specs.iter().enumerate().take(4) {
        plot.add(&format!("{} exact", s.label()), trace.times.iter().zip(&exact_rows).map(|(t, r)| (*t, r[j].re)).collect(), Style::Line);
        plot.add(
            &format!("{} trotter", s.label()),
            trace.times.iter().zip(&trace.expectations).map(|(t, r)| (*t, r[j].re)).collect(),
            Style::Points,
        );
    }
    plot.write(&out.join("evolve.svg"))?;
    write_json(
        &out.join("evolve_summary.json"),
        &json!({"scheme": scheme.name(), "ordering": ordering.to_string(), "t": t, "steps": steps, "final_fidelity": fidelity}),
    )?;
    println!("{scheme}: t = {t}, N = {steps}, final fidelity {fidelity:.12}");
    Ok(())
}

pub fn trotter_error(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let r = cfg.validate()?;
    require_chain(&r, "trotter-error")?;
    let scheme = cfg.scheme()?;
    let orderings: Vec<Ordering> = match cfg.orderings()? {
        Some(o) => vec![o],
        None => Ordering::all().to_vec(),
    };
    let t = cfg.time()?;
    if t == 0.0 {
        return Err(config_err("trotter-error needs t > 0"));
    }
    let sweep: Vec<usize> = match (&cfg.sweep, cfg.steps(&r)?) {
        (Some(s), _) => s.clone(),
        (None, Some(n)) => vec![n, 2 * n, 4 * n, 8 * n],
        (None, None) => vec![8, 16, 32, 64, 128],
    };
    let jobs: Vec<(Ordering, usize)> = orderings.iter().flat_map(|&o| sweep.iter().map(move |&n| (o, n))).collect();
    let measured: Vec<f64> = jobs
        .par_iter()
        .map(|&(o, n)| {
            let plan = TrotterPlan::new(scheme, t, n)?.with_ordering(o);
            measured_error(&plan, &r.layout, &r.params, &r.sector, r.cap)
        })
        .collect::<std::result::Result<_, _>>()?;
    let l = r.layout.num_sites();
    let mut rows = Vec::new();
    let mut by_order: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (&(o, n), &d) in jobs.iter().zip(&measured) {
        let bound = error_bound(&r.params, l, t, n)?;
        rows.push(vec![o.to_string(), n.to_string(), num(d), num(bound)]);
        by_order.entry(o.to_string()).or_default().push((n as f64, d));
    }
    write_csv(&out.join("trotter_error.csv"), &["ordering", "N", "measured", "bound"], &rows)?;
    let mut plot = Plot::new(&format!("Trotter error, {scheme}, L = {l}"), "N", "error").log_log();
    for o in &orderings {
        plot.add(&format!("measured {o}"), by_order[&o.to_string()].clone(), Style::Line);
    }
    let bounds: Vec<(f64, f64)> = sweep.iter().map(|&n| Ok((n as f64, error_bound(&r.params, l, t, n)?))).collect::<Result<_>>()?;
    plot.add("bound", bounds, Style::Line);
    plot.write(&out.join("trotter_error.svg"))?;
    println!("{} series x {} step counts written", orderings.len(), sweep.len());
    Ok(())
}

pub fn derive2d(cfg: &ExperimentConfig, out: &Path, term_spec: Option<&Path>, dump_stages: bool) -> Result<()> {
    let r = cfg.validate()?;
    if r.layout.dim() != 2 {
        return Err(config_err("derive2d needs a d = 2 lattice"));
    }
    let spec = load_term_spec(cfg, term_spec)?.unwrap_or_else(TermSpec::default_2d);
    let (lay, p, sector) = (&r.layout, &r.params, &r.sector);
    let mut verdict = json!({"layout": layout_name(lay)});
    let report = match spec.validate(p) {
        Ok(rep) => rep,
        Err(e) => {
            verdict["term_spec"] = json!("rejected");
            verdict["reason"] = json!(e.to_string());
            write_json(&out.join("verdict.json"), &verdict)?;
            return Err(e.into());
        }
    };
    verdict["term_spec"] = json!("accepted");
    verdict["validation_max_deviation"] = json!(report.max_deviation());
    let h1 = build_hardcore_h1(lay, p, Some(&spec))?.operator;
    let d = derive_matter_eliminated(&h1, lay, sector, MassHandling::Effective)?;
    if dump_stages {
        dump_derivation(out, &d)?;
    }
    let hat = &d.result;
    write_text(&out.join("hamiltonian.txt"), &hat.to_text())?;
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for t in hat.terms() {
        *hist.entry(t.string.weight()).or_default() += 1;
    }
    let rows: Vec<Vec<String>> = hist.iter().map(|(k, v)| vec![k.to_string(), v.to_string()]).collect();
    write_csv(&out.join("locality.csv"), &["support", "count"], &rows)?;
    let max_support = hist.keys().last().copied().unwrap_or(0);
    verdict["num_terms"] = json!(hat.len());
    verdict["max_support"] = json!(max_support);
    verdict["register"] = json!({"qubits": hat.register_size(), "links": lay.num_links()});
    verdict["gauge_invariance"] = json!("pass");
    let mut failed = false;
    if lay.num_links() <= r.cap {
        let a = diagonalize(hat, None, r.cap)?;
        let b = diagonalize(&h1, Some(&sector_basis(lay, sector)?), 64)?;
        let dev = spectrum_distance(&a, &b).unwrap_or(f64::INFINITY);
        failed = !(dev <= AGREEMENT_TOL);
        verdict["spectrum_equivalence"] = json!(if failed { "fail" } else { "pass" });
        verdict["spectrum_deviation"] = json!(dev);
    } else {
        verdict["spectrum_equivalence"] = json!("skipped");
    }
    write_json(&out.join("verdict.json"), &verdict)?;
    println!("{} terms on {} links, max support {max_support}", hat.len(), lay.num_links());
    if failed {
        bail!("generated Hamiltonian does not reproduce the sector spectrum");
    }
    Ok(())
}

pub fn observables(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let r = cfg.validate()?;
    require_chain(&r, "observables")?;
    check_cap(&r)?;
    let (lay, p, sector) = (&r.layout, &r.params, &r.sector);
    let full = lay.num_sites() + lay.num_links();
    if full > 24 {
        bail!(z2lgt::Error::CapExceeded { qubits: full, cap: 24 });
    }
    let mut specs = cfg.observables()?;
    if specs.is_empty() {
        specs.extend((1..=lay.num_links()).map(ObservableSpec::Link));
        specs.extend((1..=lay.num_sites()).map(ObservableSpec::Charge));
        specs.push(ObservableSpec::Meson(1, 1));
    }
    let h1 = build_hardcore_h1(lay, p, None)?.operator;
    let hat = derive_matter_eliminated(&h1, lay, sector, MassHandling::Raw)?.result;
    let basis = sector_basis(lay, sector)?;
    let (vals, vecs) = hermitian_eigen(&restricted_matrix(&h1, &basis)?)?;
    let levels = degenerate_levels(&vals, 1e-8);

    let mut pairs = Vec::new();
    for s in &specs {
        let a = match s {
            ObservableSpec::Meson(n, k) => mesonic_string_hardcore(lay, *n, *k)?,
            _ => observable_operator(s, FrameTag::Hardcore, &r, &h1)?,
        };
        let b = observable_operator(s, FrameTag::MatterEliminated, &r, &hat)?;
        pairs.push((s, a, b));
    }
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (li, &(lo, hi)) in levels.iter().take(cfg.levels).enumerate() {
        let deg = (hi - lo) as f64;
        let mut orig = Vec::new();
        let mut mapped = Vec::new();
        for k in lo..hi {
            let col: Vec<C64> = vecs.column(k).iter().cloned().collect();
            let s = Statevector::from_restricted(h1.register_size(), &basis, &col);
            mapped.push(map_state_to_matter_eliminated(&s, lay, sector)?);
            orig.push(s);
        }
        for (s, a, b) in &pairs {
            let x: C64 = orig.iter().map(|v| v.expectation(a)).sum::<C64>() / deg;
            let y: C64 = mapped.iter().map(|v| v.expectation(b)).sum::<C64>() / deg;
            let mut z = C64::new(0.0, 0.0);
            for v in &mapped {
                z += measure_by_hadamard_tests(b, v)?;
            }
            z /= deg;
            let dev = (x - y).norm().max((y - z).norm());
            worst = worst.max(dev);
            rows.push(vec![
                li.to_string(),
                num(vals[lo]),
                (hi - lo).to_string(),
                s.label(),
                num(x.re),
                num(x.im),
                num(y.re),
                num(y.im),
                num(z.re),
                num(z.im),
                num(dev),
            ]);
        }
    }
    write_csv(
        &out.join("observables.csv"),
        &[
            "level",
            "energy",
            "degeneracy",
            "observable",
            "hardcore_re",
            "hardcore_im",
            "matter_eliminated_re",
            "matter_eliminated_im",
            "hadamard_re",
            "hadamard_im",
            "deviation",
        ],
        &rows,
    )?;
    let mut circuits = String::new();
    for s in &specs {
        if let ObservableSpec::Meson(n, k) = s {
            for (alpha, term) in mesonic_terms_hat(lay, *n, *k)?.iter().enumerate() {
                for t in term.terms() {
                    circuits.push_str(&format!("# {} alpha={} term {}\n", s.label(), alpha + 1, t.string));
                    circuits.push_str(&compile_string_measurement(t, lay.num_links())?.to_text());
                }
            }
        }
    }
    write_text(&out.join("circuits.txt"), &circuits)?;
    write_json(
        &out.join("observables_summary.json"),
        &json!({"levels": levels.len().min(cfg.levels), "observables": specs.len(), "max_deviation": worst, "agree": worst <= AGREEMENT_TOL}),
    )?;
    println!("{} observables over {} levels, max deviation {worst:.3e}", specs.len(), levels.len().min(cfg.levels));
    Ok(())
}
