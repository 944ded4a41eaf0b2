use std::fmt;
use std::path::PathBuf;

use serde::Deserialize;
use z2lgt::hamiltonian::{FrameTag, ModelParams};
use z2lgt::lattice::{Boundary, LatticeLayout, SectorSpec};
use z2lgt::trotter::{recommend_steps, Ordering, Scheme};

/// Rejected configuration; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

macro_rules! bail_config {
    ($($t:tt)*) => { return Err(ConfigError(format!($($t)*))) };
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "one")]
    pub d: usize,
    pub extents: Vec<usize>,
    pub boundary: String,
    pub h: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub m: f64,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(untagged)]
pub enum SectorConfig {
    #[default]
    #[serde(skip)]
    Staggered,
    Named(String),
    Explicit { q: Vec<u8> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialState {
    /// Computational basis string, character `k` is qubit `k`.
    Basis(String),
    /// Lowest eigenvector of the named frame, mapped into the scheme frame.
    Ground(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub inject_fault: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { sizes: default_sizes(), inject_fault: false }
    }
}

fn default_sizes() -> Vec<usize> {
    vec![4, 6]
}

fn default_cap() -> usize {
    12
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub sector: SectorConfig,
    pub frames: Option<Vec<String>>,
    pub t: Option<f64>,
    pub eps: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub delta: Option<f64>,
    /// Step counts for `trotter-error`; derived from `eps`/`N`/`delta` when absent.
    pub sweep: Option<Vec<usize>>,
    pub scheme: Option<String>,
    pub ordering: Option<String>,
    #[serde(default)]
    pub observables: Vec<String>,
    pub initial_state: Option<InitialState>,
    /// Number of lowest levels reported by `observables`.
    #[serde(default = "one")]
    pub levels: usize,
    pub term_spec: Option<PathBuf>,
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default)]
    pub verify: VerifyConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig { d: 1, extents: vec![4], boundary: "periodic".into(), h: 1.0, b: 0.0, j: 1.0, m: 1.0 },
            sector: SectorConfig::Staggered,
            frames: None,
            t: None,
            eps: None,
            n: None,
            delta: None,
            sweep: None,
            scheme: None,
            ordering: None,
            observables: Vec::new(),
            initial_state: None,
            levels: 1,
            term_spec: None,
            cap: default_cap(),
            verify: VerifyConfig::default(),
        }
    }
}

/// A requested observable.
#[derive(Clone, Debug, PartialEq)]
pub enum ObservableSpec {
    /// `Z<n>`: electric field on link `n`.
    Link(usize),
    /// `N<n>`: occupation of site `n`.
    Charge(usize),
    /// `M<n>,<R>`: mesonic string from site `n` of length `R`.
    Meson(usize, usize),
    /// `E`: the Hamiltonian.
    Energy,
}

impl ObservableSpec {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        let s = s.trim();
        let num = |x: &str| x.parse::<usize>().map_err(|_| ConfigError(format!("bad observable `{s}`")));
        match s.chars().next() {
            Some('E') if s == "E" => Ok(Self::Energy),
            Some('Z') => Ok(Self::Link(num(&s[1..])?)),
            Some('N') => Ok(Self::Charge(num(&s[1..])?)),
            Some('M') => {
                let (a, b) = s[1..].split_once(',').ok_or_else(|| ConfigError(format!("mesonic string `{s}` needs M<n>,<R>")))?;
                Ok(Self::Meson(num(a)?, num(b)?))
            }
            _ => Err(ConfigError(format!("unknown observable `{s}` (use Z<n>, N<n>, M<n>,<R> or E)"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Link(n) => format!("Z{n}"),
            Self::Charge(n) => format!("N{n}"),
            Self::Meson(n, r) => format!("M{n}_{r}"),
            Self::Energy => "E".into(),
        }
    }
}

/// The validated, typed form of a config.
pub struct Resolved {
    pub layout: LatticeLayout,
    pub params: ModelParams,
    pub sector: SectorSpec,
    pub cap: usize,
}

impl ExperimentConfig {
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let m = &self.model;
        if !(1..=2).contains(&m.d) {
            bail_config!("d must be 1 or 2, got {}", m.d);
        }
        if m.extents.len() != m.d {
            bail_config!("extents {:?} do not match d = {}", m.extents, m.d);
        }
        let boundary = match m.boundary.as_str() {
            "open" => Boundary::Open,
            "periodic" => Boundary::Periodic,
            other => bail_config!("boundary must be `open` or `periodic`, got `{other}`"),
        };
        for (name, v) in [("h", m.h), ("b", m.b), ("J", m.j), ("m", m.m)] {
            if !v.is_finite() {
                bail_config!("coupling {name} is not finite");
            }
        }
        if self.cap == 0 || self.cap > 24 {
            bail_config!("cap must lie in 1..=24, got {}", self.cap);
        }
        let layout = LatticeLayout::new(m.d, &m.extents, boundary).map_err(|e| ConfigError(e.to_string()))?;
        let sector = match &self.sector {
            SectorConfig::Staggered => SectorSpec::staggered(&layout),
            SectorConfig::Named(s) if s == "staggered" => SectorSpec::staggered(&layout),
            SectorConfig::Named(s) => bail_config!("unknown sector `{s}` (use \"staggered\" or {{\"q\": [...]}})"),
            SectorConfig::Explicit { q } => SectorSpec::explicit(&layout, q.clone()).map_err(|e| ConfigError(e.to_string()))?,
        };
        Ok(Resolved { layout, params: ModelParams::new(m.h, m.j, m.m).with_b(m.b), sector, cap: self.cap })
    }

    pub fn frames(&self) -> Result<Vec<FrameTag>, ConfigError> {
        let names = self.frames.clone().unwrap_or_else(|| vec!["all".into()]);
        if names.iter().any(|n| n == "all") {
            return Ok(FrameTag::ALL.to_vec());
        }
        let mut out = Vec::new();
        for n in names {
            let f: FrameTag = n.parse().map_err(|_| ConfigError(format!("unknown frame `{n}`")))?;
            if !out.contains(&f) {
                out.push(f);
            }
        }
        if out.is_empty() {
            bail_config!("no frames requested");
        }
        Ok(out)
    }

    pub fn scheme(&self) -> Result<Scheme, ConfigError> {
        match &self.scheme {
            None => Ok(Scheme::MatterEliminated),
            Some(s) => s.parse().map_err(|_| ConfigError(format!("unknown scheme `{s}`"))),
        }
    }

    /// `None` means "every permutation".
    pub fn orderings(&self) -> Result<Option<Ordering>, ConfigError> {
        match self.ordering.as_deref() {
            None => Ok(Some(Ordering::default())),
            Some("all") => Ok(None),
            Some(s) => s.parse().map(Some).map_err(|_| ConfigError(format!("bad ordering `{s}` (e.g. GM,m,E)"))),
        }
    }

    pub fn time(&self) -> Result<f64, ConfigError> {
        match self.t {
            Some(t) if t.is_finite() && t >= 0.0 => Ok(t),
            Some(t) => bail_config!("t must be finite and non-negative, got {t}"),
            None => Ok(1.0),
        }
    }

    /// Step count from exactly one of `eps`, `N`, `delta`.
    pub fn steps(&self, r: &Resolved) -> Result<Option<usize>, ConfigError> {
        let given = [self.eps.is_some(), self.n.is_some(), self.delta.is_some()].iter().filter(|x| **x).count();
        if given > 1 {
            bail_config!("give exactly one of eps, N, delta");
        }
        let t = self.time()?;
        if let Some(eps) = self.eps {
            if !(eps > 0.0) || !eps.is_finite() {
                bail_config!("eps must be positive, got {eps}");
            }
            let n = (t / eps).round();
            if n < 1.0 || (n * eps - t).abs() > 1e-9 * t.max(1.0) {
                bail_config!("t = {t} is not a whole number of steps eps = {eps}");
            }
            return Ok(Some(n as usize));
        }
        if let Some(n) = self.n {
            if n == 0 {
                bail_config!("N must be at least 1");
            }
            return Ok(Some(n));
        }
        if let Some(delta) = self.delta {
            if !(delta > 0.0) || !delta.is_finite() {
                bail_config!("delta must be positive, got {delta}");
            }
            if t == 0.0 {
                return Ok(Some(1));
            }
            let n = recommend_steps(&r.params, r.layout.num_sites(), t, delta).map_err(|e| ConfigError(e.to_string()))?;
            return Ok(Some(n));
        }
        Ok(None)
    }

    pub fn observables(&self) -> Result<Vec<ObservableSpec>, ConfigError> {
        self.observables.iter().map(|s| ObservableSpec::parse(s)).collect()
    }

    /// Full validation: everything any command may read.
    pub fn validate(&self) -> Result<Resolved, ConfigError> {
        let r = self.resolve()?;
        let frames = self.frames()?;
        if r.layout.dim() == 1 && r.layout.num_sites() % 2 == 1 && frames.contains(&FrameTag::MatterEliminated) {
            bail_config!("the matter-eliminated frame needs an even number of sites; pick other frames for odd chains");
        }
        self.scheme()?;
        self.orderings()?;
        self.time()?;
        self.steps(&r)?;
        self.observables()?;
        if self.levels == 0 {
            bail_config!("levels must be at least 1");
        }
        if let Some(s) = &self.sweep {
            if s.is_empty() || s.contains(&0) {
                bail_config!("sweep must list positive step counts");
            }
        }
        if let Some(InitialState::Basis(b)) = &self.initial_state {
            if b.is_empty() || b.chars().any(|c| c != '0' && c != '1') {
                bail_config!("basis state `{b}` must be a 0/1 string");
            }
        }
        if self.verify.sizes.iter().any(|&l| l < 2) {
            bail_config!("verify sizes must be at least 2");
        }
        Ok(r)
    }
}
