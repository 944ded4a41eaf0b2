//! First-order Trotter circuits for the gauge-eliminated and
//! matter-eliminated chains, dense hybrid steps, and error estimates.
//!
//! Rotation gates follow `R_P(θ) = exp(−iθP)`, so a circuit factor for
//! `e^{−iεcP}` is a rotation by `εc`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::circuit::{Circuit, Gate, GateKind, LayerModel};
use crate::error::{Error, Result};
use crate::exact::{expm_hermitian, matrix_power, spectral_norm_diff, Statevector};
use crate::hamiltonian::{
    build_gauge_eliminated_h0, build_hybrid_pieces, build_matter_eliminated_hat, cz_pairs, electric_string_sign,
    ModelParams,
};
use crate::lattice::{Boundary, LatticeLayout, SectorSpec};
use crate::pauli::{OperatorSum, PauliAxis, C64, NORM_DENSE_CAP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    GaugeEliminated,
    MatterEliminated,
    Hybrid,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::GaugeEliminated, Scheme::MatterEliminated, Scheme::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::GaugeEliminated => "gauge_eliminated",
            Scheme::MatterEliminated => "matter_eliminated",
            Scheme::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme `{s}`")))
    }
}

/// One of the three Trotter factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Piece {
    Electric,
    Mass,
    Interaction,
}

impl Piece {
    pub fn label(self) -> &'static str {
        match self {
            Piece::Electric => "E",
            Piece::Mass => "m",
            Piece::Interaction => "GM",
        }
    }
}

/// Factor order as written: `[GM, m, E]` means `Ω_GM Ω_m Ω_E`, so `Ω_E`
/// acts first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ordering(pub [Piece; 3]);

impl Default for Ordering {
    fn default() -> Self {
        Ordering([Piece::Interaction, Piece::Mass, Piece::Electric])
    }
}

impl Ordering {
    pub fn all() -> Vec<Ordering> {
        use Piece::*;
        let p = [Electric, Mass, Interaction];
        let mut out = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    if a != b && b != c && a != c {
                        out.push(Ordering([p[a], p[b], p[c]]));
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0].label(), self.0[1].label(), self.0[2].label())
    }
}

impl FromStr for Ordering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("ordering must be a permutation of GM,m,E, got `{s}`"));
        let parts: Vec<Piece> = s
            .split(',')
            .map(|p| match p.trim() {
                "E" => Ok(Piece::Electric),
                "m" => Ok(Piece::Mass),
                "GM" => Ok(Piece::Interaction),
                _ => Err(bad()),
            })
            .collect::<Result<_>>()?;
        let arr: [Piece; 3] = parts.try_into().map_err(|_| bad())?;
        if arr[0] == arr[1] || arr[1] == arr[2] || arr[0] == arr[2] {
            return Err(bad());
        }
        Ok(Ordering(arr))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrotterPlan {
    pub scheme: Scheme,
    pub t: f64,
    pub steps: usize,
    pub ordering: Ordering,
}

impl TrotterPlan {
    pub fn new(scheme: Scheme, t: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("need steps ≥ 1 and finite t, got N={steps}, t={t}")));
        }
        Ok(Self { scheme, t, steps, ordering: Ordering::default() })
    }

    pub fn with_ordering(mut self, ordering: Ordering) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn eps(&self) -> f64 {
        self.t / self.steps as f64
    }
}

fn gate(kind: GateKind, label: &str) -> Gate {
    Gate::labeled(kind, label)
}

fn require_chain(layout: &LatticeLayout) -> Result<()> {
    if layout.dim() != 1 {
        return Err(Error::Unsupported("Trotter circuits are compiled for chains".into()));
    }
    Ok(())
}

fn require_open_chain(layout: &LatticeLayout) -> Result<()> {
    require_chain(layout)?;
    if layout.boundary() != Boundary::Open {
        return Err(Error::Unsupported("the gauge-eliminated scheme needs an open chain".into()));
    }
    Ok(())
}

/// `e^{−iεH⁽⁰⁾_E}` as a parity ladder: `V_1`, then `CNOT(n−1→n)` followed by
/// `V_n` for `n = 2..L−1`, then the CNOTs undone. `3L − 5` gates.
pub fn compile_omega_e0(layout: &LatticeLayout, h: f64, eps: f64, sector: &SectorSpec) -> Result<Circuit> {
    require_open_chain(layout)?;
    let l = layout.chain_len();
    let mut c = Circuit::new(l);
    let v = |n: usize| gate(GateKind::RotZ { q: n - 1, angle: eps * h * electric_string_sign(sector, n) }, "E");
    c.push(v(1));
    for n in 2..l {
        c.push(gate(GateKind::Cnot { control: n - 2, target: n - 1 }, "E"));
        c.push(v(n));
    }
    for n in (2..l).rev() {
        c.push(gate(GateKind::Cnot { control: n - 2, target: n - 1 }, "E"));
    }
    Ok(c)
}

/// `e^{−iεH⁽⁰⁾_m}`: `Z` rotations by `(m/2)(−1)^n ε`.
pub fn compile_omega_m0(layout: &LatticeLayout, m: f64, eps: f64) -> Result<Circuit> {
    require_open_chain(layout)?;
    let mut c = Circuit::new(layout.chain_len());
    if m != 0.0 {
        for s in 0..layout.chain_len() {
            c.push(gate(GateKind::RotZ { q: s, angle: 0.5 * m * layout.site_sign(s) * eps }, "m"));
        }
    }
    Ok(c)
}

/// Hopping `−(J/2)Σ(XX + YY)`, even bonds then odd bonds (bonds within a
/// parity class commute, so this is itself a first-order split).
pub fn compile_omega_gm0(layout: &LatticeLayout, j: f64, eps: f64) -> Result<Circuit> {
    require_open_chain(layout)?;
    let l = layout.chain_len();
    let mut c = Circuit::new(l);
    if j != 0.0 {
        for parity in [0, 1] {
            for a in (parity..l - 1).step_by(2) {
                c.push(gate(GateKind::RotXX { a, b: a + 1, angle: -0.5 * j * eps }, "GM"));
                c.push(gate(GateKind::RotYY { a, b: a + 1, angle: -0.5 * j * eps }, "GM"));
            }
        }
    }
    Ok(c)
}

/// Axis of `hZ + (J/2)Y`: `(r, θ)` with `r = √(h² + J²/4)`, `θ = atan2(J/2, h)`.
pub fn electric_axis(h: f64, j: f64) -> (f64, f64) {
    ((h * h + 0.25 * j * j).sqrt(), (0.5 * j).atan2(h))
}

/// `Ω_E = Π_n e^{−irε(cosθ Z_n + sinθ Y_n)}`; plain `Z`/`Y` rotations when
/// the axis degenerates.
pub fn compile_omega_e(layout: &LatticeLayout, h: f64, j: f64, eps: f64) -> Result<Circuit> {
    require_chain(layout)?;
    let nl = layout.num_links();
    let mut c = Circuit::new(nl);
    let (r, theta) = electric_axis(h, j);
    for q in 0..nl {
        let kind = if j == 0.0 {
            GateKind::RotZ { q, angle: eps * h }
        } else if h == 0.0 {
            GateKind::RotY { q, angle: eps * 0.5 * j }
        } else {
            GateKind::RotAxisZY { q, angle: eps * r, theta }
        };
        if h != 0.0 || j != 0.0 {
            c.push(gate(kind, "E"));
        }
    }
    Ok(c)
}

/// `Ω_m = e^{iε(m/2)ΣS_n}`: a `ZZ` rotation per neighbouring link pair
/// (plus `Z` rotations on the two end links of an open chain).
pub fn compile_omega_m(layout: &LatticeLayout, m: f64, eps: f64) -> Result<Circuit> {
    require_chain(layout)?;
    let nl = layout.num_links();
    let mut c = Circuit::new(nl);
    if m == 0.0 {
        return Ok(c);
    }
    let angle = -0.5 * m * eps;
    for (a, b) in cz_pairs(layout) {
        c.push(gate(GateKind::RotZZ { a, b, angle }, "m"));
    }
    if layout.boundary() == Boundary::Open {
        c.push(gate(GateKind::RotZ { q: 0, angle }, "m"));
        c.push(gate(GateKind::RotZ { q: nl - 1, angle }, "m"));
    }
    Ok(c)
}

/// `Ω_GM = U^CZ U_Y U^CZ` with `U_Y = Π_n e^{−iε(J/2)Y_n}`; exact, since
/// `U^CZ Y_n U^CZ = Z_{n−1}Y_nZ_{n+1}`.
pub fn compile_omega_gm(layout: &LatticeLayout, j: f64, eps: f64) -> Result<Circuit> {
    require_chain(layout)?;
    let nl = layout.num_links();
    let mut c = Circuit::new(nl);
    let pairs = cz_pairs(layout);
    for &(a, b) in &pairs {
        c.push(gate(GateKind::Cz { a, b }, "GM"));
    }
    if j != 0.0 {
        for q in 0..nl {
            c.push(gate(GateKind::RotY { q, angle: 0.5 * j * eps }, "GM"));
        }
    }
    for &(a, b) in &pairs {
        c.push(gate(GateKind::Cz { a, b }, "GM"));
    }
    Ok(c)
}

fn require_staggered(layout: &LatticeLayout, sector: &SectorSpec) -> Result<()> {
    if !sector.is_staggered(layout) {
        return Err(Error::Unsupported("the matter-eliminated chain is built for the staggered sector".into()));
    }
    Ok(())
}

/// One Trotter step as a circuit (digital schemes only).
pub fn compile_step(plan: &TrotterPlan, layout: &LatticeLayout, params: &ModelParams, sector: &SectorSpec) -> Result<Circuit> {
    let eps = plan.eps();
    let piece = |p: Piece| -> Result<Circuit> {
        match plan.scheme {
            Scheme::GaugeEliminated => match p {
                Piece::Electric => compile_omega_e0(layout, params.h, eps, sector),
                Piece::Mass => compile_omega_m0(layout, params.m, eps),
                Piece::Interaction => compile_omega_gm0(layout, params.j, eps),
            },
            Scheme::MatterEliminated => {
                require_staggered(layout, sector)?;
                match p {
                    Piece::Electric => compile_omega_e(layout, params.h, params.j, eps),
                    Piece::Mass => compile_omega_m(layout, params.m, eps),
                    Piece::Interaction => compile_omega_gm(layout, params.j, eps),
                }
            }
            Scheme::Hybrid => Err(Error::Unsupported("the hybrid scheme has no gate-level step".into())),
        }
    };
    let mut step: Option<Circuit> = None;
    for &p in plan.ordering.0.iter().rev() {
        let c = piece(p)?;
        match step.as_mut() {
            None => step = Some(c),
            Some(s) => s.extend(&c),
        }
    }
    Ok(step.expect("three pieces"))
}

/// The Hamiltonian a scheme approximates.
pub fn scheme_hamiltonian(scheme: Scheme, layout: &LatticeLayout, params: &ModelParams, sector: &SectorSpec) -> Result<OperatorSum> {
    match scheme {
        Scheme::GaugeEliminated => Ok(build_gauge_eliminated_h0(layout, params, sector)?.operator),
        Scheme::MatterEliminated | Scheme::Hybrid => {
            require_staggered(layout, sector)?;
            Ok(build_matter_eliminated_hat(layout, params)?.total)
        }
    }
}

/// `e^{−iεH_Z} e^{−iεH_Y} e^{−iεĤ_Z} e^{−iεĤ_E}`, the `(GM, m, E)` step with
/// both `U^CZ` factors written as exponentials of `H_Z` and the inner one
/// merged with `Ω_m`. Equals the digital step up to a global phase.
pub fn hybrid_step(layout: &LatticeLayout, params: &ModelParams, eps: f64, cap: usize) -> Result<DMatrix<C64>> {
    let p = build_hybrid_pieces(layout, params, eps)?;
    let e = |op: &OperatorSum| -> Result<DMatrix<C64>> { expm_hermitian(&op.to_dense(cap)?, eps) };
    Ok(e(&p.h_z)? * e(&p.h_y)? * e(&p.h_z_hat)? * e(&p.h_e_hat)?)
}

/// Dense single-step unitary.
pub fn step_unitary(plan: &TrotterPlan, layout: &LatticeLayout, params: &ModelParams, sector: &SectorSpec, cap: usize) -> Result<DMatrix<C64>> {
    match plan.scheme {
        Scheme::Hybrid => {
            require_staggered(layout, sector)?;
            if plan.ordering != Ordering::default() {
                return Err(Error::InvalidArgument("the hybrid scheme fixes the ordering GM,m,E".into()));
            }
            hybrid_step(layout, params, plan.eps(), cap)
        }
        _ => {
            let c = compile_step(plan, layout, params, sector)?;
            if c.num_qubits > cap {
                return Err(Error::CapExceeded { qubits: c.num_qubits, cap });
            }
            c.unitary()
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrotterTrace {
    /// `k·ε` for `k = 0..=N`.
    pub times: Vec<f64>,
    /// Per time, the expectation of each requested observable.
    pub expectations: Vec<Vec<C64>>,
    pub state: Statevector,
}

/// Applies `N` Trotter steps to `psi0`, recording observables after each.
pub fn trotter_evolve(
    plan: &TrotterPlan,
    layout: &LatticeLayout,
    params: &ModelParams,
    sector: &SectorSpec,
    psi0: &Statevector,
    observables: &[OperatorSum],
    cap: usize,
) -> Result<TrotterTrace> {
    enum Step {
        Gates(Circuit),
        Dense(DMatrix<C64>),
    }
    let step = match plan.scheme {
        Scheme::Hybrid => Step::Dense(step_unitary(plan, layout, params, sector, cap)?),
        _ => Step::Gates(compile_step(plan, layout, params, sector)?),
    };
    let n = match &step {
        Step::Gates(c) => c.num_qubits,
        Step::Dense(m) => m.nrows().trailing_zeros() as usize,
    };
    if psi0.register_size() != n {
        return Err(Error::RegisterMismatch(psi0.register_size(), n));
    }
    for o in observables {
        if o.register_size() != n {
            return Err(Error::RegisterMismatch(o.register_size(), n));
        }
    }
    let record = |s: &Statevector| observables.iter().map(|o| s.expectation(o)).collect::<Vec<_>>();
    let mut state = psi0.clone();
    let mut times = vec![0.0];
    let mut expectations = vec![record(&state)];
    for k in 1..=plan.steps {
        match &step {
            Step::Gates(c) => c.apply(&mut state.amps)?,
            Step::Dense(m) => {
                let v = m * state.to_dvector();
                state.amps = v.iter().copied().collect();
            }
        }
        times.push(k as f64 * plan.eps());
        expectations.push(record(&state));
    }
    Ok(TrotterTrace { times, expectations, state })
}

/// `‖e^{−iHt} − (step)^N‖`; the hybrid scheme's known constant phase is
/// removed first.
pub fn measured_error(plan: &TrotterPlan, layout: &LatticeLayout, params: &ModelParams, sector: &SectorSpec, cap: usize) -> Result<f64> {
    let h = scheme_hamiltonian(plan.scheme, layout, params, sector)?;
    let exact = expm_hermitian(&h.to_dense(cap)?, plan.t)?;
    let approx = matrix_power(&step_unitary(plan, layout, params, sector, cap)?, plan.steps);
    match plan.scheme {
        Scheme::Hybrid => {
            let phase = C64::from_polar(1.0, -hybrid_phase(layout) * plan.steps as f64);
            spectral_norm_diff(&exact, &(approx * phase))
        }
        _ => spectral_norm_diff(&exact, &approx),
    }
}

/// Phase `φ` with hybrid step `= e^{iφ} ×` digital step: each `e^{−iεH_Z}`
/// is `e^{−iπ/4}` per pair times `U^CZ`, and a step holds two of them.
pub fn hybrid_phase(layout: &LatticeLayout) -> f64 {
    -std::f64::consts::FRAC_PI_2 * cz_pairs(layout).len() as f64
}

fn bound_rate(params: &ModelParams, l: usize) -> f64 {
    (params.j * params.j + (params.j * params.h).abs()) * l as f64
}

/// Leading-order estimate `δ ≈ (t²/2N)(J² + |Jh|)L`, independent of `m`.
pub fn error_bound(params: &ModelParams, l: usize, t: f64, steps: usize) -> Result<f64> {
    if steps == 0 || l == 0 || !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("need N ≥ 1, L ≥ 1, t > 0; got N={steps}, L={l}, t={t}")));
    }
    Ok(t * t / (2.0 * steps as f64) * bound_rate(params, l))
}

/// Smallest `N` with `error_bound ≤ δ` (at least 1).
pub fn recommend_steps(params: &ModelParams, l: usize, t: f64, delta: f64) -> Result<usize> {
    if l == 0 || !(t > 0.0) || !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("need L ≥ 1, t > 0, δ > 0; got L={l}, t={t}, δ={delta}")));
    }
    let n = t * t / (2.0 * delta) * bound_rate(params, l);
    // guard against `800.0000000000001`-style rounding before the ceiling
    Ok(((n * (1.0 - 1e-12)).ceil() as usize).max(1))
}

#[derive(Clone, Debug)]
pub struct CommutatorAudit {
    pub gm_m: OperatorSum,
    pub gm_e: OperatorSum,
    pub m_e: OperatorSum,
    /// `[Ĥ_GM, Ĥ_m] + [Ĥ_m, Ĥ_E]`, zero exactly.
    pub cancellation: OperatorSum,
    /// Operator norms `(‖[GM,m]‖, ‖[GM,E]‖, ‖[m,E]‖)` and whether they are
    /// exact (dense) or one-norm upper bounds.
    pub norms: [(f64, bool); 3],
}

/// Symbolic commutators of the three pieces of the chain `Ĥ`.
pub fn commutator_audit(params: &ModelParams, layout: &LatticeLayout) -> Result<CommutatorAudit> {
    require_chain(layout)?;
    let hat = build_matter_eliminated_hat(layout, params)?;
    let gm_m = hat.interaction.commutator(&hat.mass)?;
    let gm_e = hat.interaction.commutator(&hat.electric)?;
    let m_e = hat.mass.commutator(&hat.electric)?;
    let cancellation = gm_m.add(&m_e)?;
    if !cancellation.is_zero() {
        return Err(Error::InvalidArgument(format!("[GM,m] + [m,E] left {} terms", cancellation.len())));
    }
    let norms = [gm_m.operator_norm(NORM_DENSE_CAP), gm_e.operator_norm(NORM_DENSE_CAP), m_e.operator_norm(NORM_DENSE_CAP)];
    Ok(CommutatorAudit { gm_m, gm_e, m_e, cancellation, norms })
}

fn link_op(layout: &LatticeLayout, ops: &[(i64, PauliAxis)], c: C64) -> Option<Result<OperatorSum>> {
    let mut acc = OperatorSum::scalar(layout.num_links(), c);
    for &(k, a) in ops {
        let q = layout.chain_link(k)?;
        acc = match OperatorSum::pauli(layout.num_links(), q, a).and_then(|p| acc.mul(&p)) {
            Ok(x) => x,
            Err(e) => return Some(Err(e)),
        };
    }
    Some(Ok(acc))
}

/// Closed forms of the nonzero commutators on periodic chains:
/// `[Ĥ_GM, Ĥ_m] = −(imJ/2)Σ X_n(Z_{n−1} + Z_{n+1})` and
/// `[Ĥ_GM, Ĥ_E] = ihJ Σ Z_{n−1}X_nZ_{n+1} − (iJ²/2)Σ X_n(Z_{n−2}Y_{n−1} + Y_{n+1}Z_{n+2})`.
pub fn expected_commutators(params: &ModelParams, layout: &LatticeLayout) -> Result<(OperatorSum, OperatorSum)> {
    require_chain(layout)?;
    if layout.boundary() != Boundary::Periodic {
        return Err(Error::Unsupported("closed forms are stated for periodic chains".into()));
    }
    use PauliAxis::*;
    let nl = layout.num_links();
    let (h, j, m) = (params.h, params.j, params.m);
    let mut gm_m = OperatorSum::zero(nl);
    let mut gm_e = OperatorSum::zero(nl);
    let i = C64::new(0.0, 1.0);
    for n in 1..=nl as i64 {
        for (ops, c, target) in [
            (vec![(n, X), (n - 1, Z)], -i * (0.5 * m * j), 0),
            (vec![(n, X), (n + 1, Z)], -i * (0.5 * m * j), 0),
            (vec![(n - 1, Z), (n, X), (n + 1, Z)], i * (h * j), 1),
            (vec![(n, X), (n - 2, Z), (n - 1, Y)], -i * (0.5 * j * j), 1),
            (vec![(n, X), (n + 1, Y), (n + 2, Z)], -i * (0.5 * j * j), 1),
        ] {
            let t = link_op(layout, &ops, c).expect("periodic")?;
            if target == 0 {
                gm_m = gm_m.add(&t)?;
            } else {
                gm_e = gm_e.add(&t)?;
            }
        }
    }
    Ok((gm_m, gm_e))
}

/// Circuit depth of one step, per factor and in total, under both layer
/// models: `(label, commuting layers, disjoint-support layers)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerReport {
    pub pieces: Vec<(String, usize, usize)>,
    pub total_commuting: usize,
    pub total_disjoint: usize,
    pub gate_count: usize,
}

pub fn layer_report(plan: &TrotterPlan, layout: &LatticeLayout, params: &ModelParams, sector: &SectorSpec) -> Result<LayerReport> {
    let c = compile_step(plan, layout, params, sector)?;
    let comm = c.depth_by_label(LayerModel::Commuting);
    let disj = c.depth_by_label(LayerModel::DisjointSupport);
    let pieces = comm.into_iter().zip(disj).map(|((l, a), (_, b))| (l, a, b)).collect();
    Ok(LayerReport {
        pieces,
        total_commuting: c.depth(LayerModel::Commuting),
        total_disjoint: c.depth(LayerModel::DisjointSupport),
        gate_count: c.len(),
    })
}
