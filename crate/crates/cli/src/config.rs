//! Experiment configuration files.
//!
//! Configs are TOML documents. Top-level keys describe the system and the
//! protocol; `[initial]`, `[bipartite]`, `[copies]` and `[sweep]` sections
//! carry the per-kind details:
//!
//! ```toml
//! kind = "single"
//! d = 2
//! rounds = 4                 # or { from = 0, to = 12 } or [1, 2, 8]
//! basis = "param2d"          # or "fourier"
//! theta = "pi/4"
//! targets = [0]
//! trajectories = 100000
//! seed = 7
//!
//! [initial]
//! kind = "pure"
//! index = 1
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use serde::Deserialize;

/// Largest Hilbert-space dimension an experiment may build.
pub const MAX_DIM: usize = 1024;

/// Largest round count accepted.
pub const MAX_ROUNDS: usize = 100_000;

/// Largest number of rows a single config may expand to.
pub const MAX_POINTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{}{message}", if path.is_empty() { String::new() } else { format!("{path}: ") })]
pub struct ConfigError {
    /// Dotted path of the offending field; empty for document-level errors.
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Single,
    Sweep,
    HaarAverage,
    Figure1a,
    Figure1b,
    Bipartite,
    Copies,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Single => "single",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::HaarAverage => "haar_average",
            ExperimentKind::Figure1a => "figure1a",
            ExperimentKind::Figure1b => "figure1b",
            ExperimentKind::Bipartite => "bipartite",
            ExperimentKind::Copies => "copies",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisChoice {
    #[default]
    Fourier,
    Param2d,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactMethod {
    #[default]
    Markov,
    BruteForce,
}

/// An angle in radians, written either as a number or as a multiple of pi
/// such as `"pi/4"`, `"3pi/8"` or `"-2*pi/3"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(pub f64);

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Number(x) => Ok(Angle(x)),
            Raw::Text(s) => parse_angle(&s).map(Angle).map_err(serde::de::Error::custom),
        }
    }
}

pub fn parse_angle(text: &str) -> Result<f64, String> {
    let s: String = text
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_lowercase();
    let bad = || format!("invalid angle `{text}`");
    let value = match s.find("pi") {
        None => s.parse::<f64>().map_err(|_| bad())?,
        Some(at) => {
            let coef = s[..at].strip_suffix('*').unwrap_or(&s[..at]);
            let coef = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().map_err(|_| bad())?,
            };
            let rest = &s[at + 2..];
            let denom = match rest {
                "" => 1.0,
                r => r
                    .strip_prefix('/')
                    .ok_or_else(bad)?
                    .parse::<f64>()
                    .map_err(|_| bad())?,
            };
            if denom == 0.0 {
                return Err(bad());
            }
            coef * PI / denom
        }
    };
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value)
}

/// A complex number written as a real number, `[re, im]`, or
/// `{ re = .., im = .. }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexValue(pub qsteer::Complex64);

impl<'de> Deserialize<'de> for ComplexValue {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Real(f64),
            Pair([f64; 2]),
            Parts {
                re: f64,
                #[serde(default)]
                im: f64,
            },
        }
        let (re, im) = match Raw::deserialize(de)? {
            Raw::Real(re) => (re, 0.0),
            Raw::Pair([re, im]) => (re, im),
            Raw::Parts { re, im } => (re, im),
        };
        Ok(ComplexValue(qsteer::Complex64::new(re, im)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum Rounds {
    Single(usize),
    Range { from: usize, to: usize },
    List(Vec<usize>),
}

impl Rounds {
    pub fn expand(&self) -> Vec<usize> {
        match self {
            Rounds::Single(n) => vec![*n],
            Rounds::Range { from, to } => (*from..=*to).collect(),
            Rounds::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Pure,
    #[default]
    MaximallyMixed,
    QubitLike,
    File,
}

/// The `[initial]` table as written. Which keys apply depends on `kind`;
/// [`InitialSection::resolve`] checks the combination.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub kind: InitialKind,
    pub index: Option<usize>,
    pub amplitudes: Option<Vec<ComplexValue>>,
    pub p: Option<f64>,
    pub gamma: Option<ComplexValue>,
    pub psi: Option<usize>,
    pub psi_perp: Option<usize>,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// Target-basis vector `index`.
    BasisVector(usize),
    /// Amplitudes in the target basis, normalized on use.
    Amplitudes(Vec<qsteer::Complex64>),
    MaximallyMixed,
    /// Populations `p`, `1 - p` on target-basis vectors `psi`, `psi_perp`
    /// with coherence `gamma √(p(1-p))`.
    QubitLike {
        p: f64,
        gamma: qsteer::Complex64,
        psi: usize,
        psi_perp: usize,
    },
    /// A density matrix stored in a text file, see [`crate::matrix`].
    File(PathBuf),
}

impl InitialSection {
    pub fn resolve(&self) -> Result<InitialState, ConfigError> {
        let kind = match self.kind {
            InitialKind::Pure => "pure",
            InitialKind::MaximallyMixed => "maximally_mixed",
            InitialKind::QubitLike => "qubit_like",
            InitialKind::File => "file",
        };
        let allowed: &[&str] = match self.kind {
            InitialKind::Pure => &["index", "amplitudes"],
            InitialKind::MaximallyMixed => &[],
            InitialKind::QubitLike => &["p", "gamma", "psi", "psi_perp"],
            InitialKind::File => &["path"],
        };
        let present = [
            ("index", self.index.is_some()),
            ("amplitudes", self.amplitudes.is_some()),
            ("p", self.p.is_some()),
            ("gamma", self.gamma.is_some()),
            ("psi", self.psi.is_some()),
            ("psi_perp", self.psi_perp.is_some()),
            ("path", self.path.is_some()),
        ];
        for (key, set) in present {
            if set && !allowed.contains(&key) {
                return Err(ConfigError::new(
                    format!("initial.{key}"),
                    format!("not used by kind = \"{kind}\""),
                ));
            }
        }
        Ok(match self.kind {
            InitialKind::Pure => match (self.index, &self.amplitudes) {
                (Some(i), None) => InitialState::BasisVector(i),
                (None, Some(a)) => InitialState::Amplitudes(a.iter().map(|c| c.0).collect()),
                _ => {
                    return Err(ConfigError::new(
                        "initial",
                        "give exactly one of `index` or `amplitudes`",
                    ))
                }
            },
            InitialKind::MaximallyMixed => InitialState::MaximallyMixed,
            InitialKind::QubitLike => {
                let p = self
                    .p
                    .ok_or_else(|| ConfigError::new("initial.p", "is required"))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(ConfigError::new(
                        "initial.p",
                        format!("{p} is outside [0, 1]"),
                    ));
                }
                let gamma = self.gamma.map_or(qsteer::Complex64::new(0.0, 0.0), |g| g.0);
                if !(gamma.norm() <= 1.0 + 1e-12) {
                    return Err(ConfigError::new(
                        "initial.gamma",
                        "|gamma| must not exceed 1",
                    ));
                }
                let psi = self.psi.unwrap_or(0);
                let psi_perp = self.psi_perp.unwrap_or(1);
                if psi == psi_perp {
                    return Err(ConfigError::new(
                        "initial.psi_perp",
                        "must differ from initial.psi",
                    ));
                }
                InitialState::QubitLike {
                    p,
                    gamma,
                    psi,
                    psi_perp,
                }
            }
            InitialKind::File => InitialState::File(
                self.path
                    .clone()
                    .ok_or_else(|| ConfigError::new("initial.path", "is required"))?,
            ),
        })
    }
}

fn zero_complex() -> ComplexValue {
    ComplexValue(qsteer::Complex64::new(0.0, 0.0))
}

fn two() -> usize {
    2
}

fn first_target() -> Vec<usize> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BipartiteSection {
    pub alpha: ComplexValue,
    pub beta: ComplexValue,
    pub p: f64,
    #[serde(default = "zero_complex")]
    pub gamma: ComplexValue,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CopiesSection {
    /// Number of copies `l`.
    pub copies: usize,
    /// `⟨ψ_k|ρ|ψ_k⟩` for each of the `m` target states.
    pub overlaps: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepBase {
    #[default]
    Single,
    Bipartite,
    Copies,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AngleGrid {
    Points(Vec<Angle>),
    Linear {
        from: Angle,
        to: Angle,
        points: usize,
    },
}

impl AngleGrid {
    pub fn len(&self) -> usize {
        match self {
            AngleGrid::Points(v) => v.len(),
            AngleGrid::Linear { points, .. } => *points,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn expand(&self) -> Vec<f64> {
        match self {
            AngleGrid::Points(v) => v.iter().map(|a| a.0).collect(),
            AngleGrid::Linear { from, to, points } => match points {
                0 => Vec::new(),
                1 => vec![from.0],
                n => (0..*n)
                    .map(|i| from.0 + (to.0 - from.0) * i as f64 / (*n - 1) as f64)
                    .collect(),
            },
        }
    }
}

/// Axes of a parameter sweep. Points expand in the order d, theta,
/// gamma_sq, then the round count.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub over: SweepBase,
    pub d: Option<Vec<usize>>,
    pub theta: Option<AngleGrid>,
    pub gamma_sq: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Experiment id written to the first CSV column; defaults to the kind.
    pub name: Option<String>,
    pub seed: Option<u64>,
    /// Monte Carlo trajectories (Haar samples for `haar_average`). Monte
    /// Carlo columns are filled only when this is set.
    pub trajectories: Option<usize>,
    #[serde(default)]
    pub exact_only: bool,
    #[serde(default)]
    pub method: ExactMethod,
    #[serde(default = "two")]
    pub d: usize,
    pub rounds: Option<Rounds>,
    #[serde(default)]
    pub basis: BasisChoice,
    pub theta: Option<Angle>,
    pub phi: Option<Angle>,
    #[serde(default = "first_target")]
    pub targets: Vec<usize>,
    #[serde(default)]
    pub initial: InitialSection,
    pub bipartite: Option<BipartiteSection>,
    pub copies: Option<CopiesSection>,
    pub sweep: Option<SweepSection>,
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn of_kind(kind: ExperimentKind) -> Self {
        Self {
            kind,
            name: None,
            seed: None,
            trajectories: None,
            exact_only: false,
            method: ExactMethod::Markov,
            d: 2,
            rounds: None,
            basis: BasisChoice::Fourier,
            theta: None,
            phi: None,
            targets: first_target(),
            initial: InitialSection::default(),
            bipartite: None,
            copies: None,
            sweep: None,
        }
    }

    pub fn experiment_id(&self) -> String {
        if let Some(name) = &self.name {
            return name.clone();
        }
        match (self.kind, &self.sweep) {
            (ExperimentKind::Sweep, Some(s)) => match s.over {
                SweepBase::Single => "single",
                SweepBase::Bipartite => "bipartite",
                SweepBase::Copies => "copies",
            }
            .to_string(),
            _ => self.kind.as_str().to_string(),
        }
    }

    pub fn seed_or_default(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn monte_carlo_requested(&self) -> bool {
        !self.exact_only && self.trajectories.is_some()
    }

    /// Round counts to evaluate; the figures default to `0..=12`.
    pub fn round_list(&self) -> Vec<usize> {
        match (&self.rounds, self.kind) {
            (Some(r), _) => r.expand(),
            (None, ExperimentKind::Figure1a | ExperimentKind::Figure1b) => (0..=12).collect(),
            (None, _) => Vec::new(),
        }
    }

    /// Structural checks that do not need any linear algebra.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let initial = self.initial.resolve()?;
        check_dim("d", self.d)?;
        let figure = matches!(
            self.kind,
            ExperimentKind::Figure1a | ExperimentKind::Figure1b
        );
        if !figure && self.rounds.is_none() {
            return Err(ConfigError::new("rounds", "is required"));
        }
        if let Some(Rounds::Range { from, to }) = &self.rounds {
            if from > to {
                return Err(ConfigError::new(
                    "rounds",
                    format!("empty range {from}..={to}"),
                ));
            }
            if to - from >= MAX_POINTS {
                return Err(ConfigError::new(
                    "rounds",
                    format!("range has more than {MAX_POINTS} entries"),
                ));
            }
        }
        if let Some(n) = self
            .rounds
            .as_ref()
            .and_then(|r| r.expand().into_iter().max())
        {
            if n > MAX_ROUNDS {
                return Err(ConfigError::new(
                    "rounds",
                    format!("{n} exceeds the maximum of {MAX_ROUNDS}"),
                ));
            }
        }
        if self.round_list().is_empty() {
            return Err(ConfigError::new(
                "rounds",
                "must name at least one round count",
            ));
        }
        if self.trajectories == Some(0) {
            return Err(ConfigError::new("trajectories", "must be at least 1"));
        }
        if let Some(name) = &self.name {
            if name.contains(['\n', '\r']) {
                return Err(ConfigError::new("name", "must be a single line"));
            }
        }
        if self.targets.is_empty() {
            return Err(ConfigError::new("targets", "must name at least one index"));
        }
        for (i, a) in [("theta", self.theta), ("phi", self.phi)] {
            if let Some(Angle(x)) = a {
                if !x.is_finite() {
                    return Err(ConfigError::new(i, "must be finite"));
                }
            }
        }

        let dims: Vec<usize> = match self.sweep.as_ref().and_then(|s| s.d.clone()) {
            Some(list) => list,
            None => vec![self.d],
        };
        for (i, &d) in dims.iter().enumerate() {
            if self.sweep.as_ref().is_some_and(|s| s.d.is_some()) {
                check_dim(&format!("sweep.d[{i}]"), d)?;
            }
            self.validate_indices(&initial, d)?;
        }

        match self.kind {
            ExperimentKind::Sweep => {
                let sweep = self.sweep.as_ref().ok_or_else(|| {
                    ConfigError::new("sweep", "section is required for kind = \"sweep\"")
                })?;
                self.validate_sweep(sweep)?;
            }
            _ => {
                if self.sweep.is_some() {
                    return Err(ConfigError::new(
                        "sweep",
                        format!("not allowed for kind = \"{}\"", self.kind.as_str()),
                    ));
                }
            }
        }
        let base = self.base_kind();
        if base == ExperimentKind::Bipartite && self.bipartite.is_none() {
            return Err(ConfigError::new("bipartite", "section is required"));
        }
        if base == ExperimentKind::Copies && self.copies.is_none() {
            return Err(ConfigError::new("copies", "section is required"));
        }
        if let Some(b) = &self.bipartite {
            if !(0.0..=1.0).contains(&b.p) {
                return Err(ConfigError::new(
                    "bipartite.p",
                    format!("{} is outside [0, 1]", b.p),
                ));
            }
            if !(b.gamma.0.norm() <= 1.0 + 1e-12) {
                return Err(ConfigError::new(
                    "bipartite.gamma",
                    "|gamma| must not exceed 1",
                ));
            }
        }
        if let Some(c) = &self.copies {
            if c.copies == 0 {
                return Err(ConfigError::new("copies.copies", "must be at least 1"));
            }
            if c.overlaps.is_empty() {
                return Err(ConfigError::new(
                    "copies.overlaps",
                    "must name at least one target",
                ));
            }
            for (i, q) in c.overlaps.iter().enumerate() {
                if !(0.0..=1.0).contains(q) {
                    return Err(ConfigError::new(
                        format!("copies.overlaps[{i}]"),
                        format!("{q} is outside [0, 1]"),
                    ));
                }
            }
        }
        if matches!(base, ExperimentKind::Bipartite | ExperimentKind::Copies)
            && self.basis == BasisChoice::Param2d
        {
            return Err(ConfigError::new(
                "basis",
                "composite experiments use the Fourier intermediate basis",
            ));
        }
        if self.basis == BasisChoice::Param2d && !figure {
            if dims.iter().any(|&d| d != 2) {
                return Err(ConfigError::new("basis", "\"param2d\" requires d = 2"));
            }
            let swept_theta = self.sweep.as_ref().is_some_and(|s| s.theta.is_some());
            if self.theta.is_none() && !swept_theta {
                return Err(ConfigError::new(
                    "theta",
                    "is required for basis = \"param2d\"",
                ));
            }
        }
        Ok(())
    }

    fn validate_indices(&self, initial: &InitialState, d: usize) -> Result<(), ConfigError> {
        let composite = matches!(
            self.base_kind(),
            ExperimentKind::Bipartite | ExperimentKind::Copies
        );
        if !composite {
            for (i, &t) in self.targets.iter().enumerate() {
                if t >= d {
                    return Err(ConfigError::new(
                        format!("targets[{i}]"),
                        format!("index {t} is out of range for d = {d}"),
                    ));
                }
            }
        }
        match initial {
            InitialState::BasisVector(i) if *i >= d => Err(ConfigError::new(
                "initial.index",
                format!("index {i} is out of range for d = {d}"),
            )),
            InitialState::Amplitudes(a) if a.len() != d => Err(ConfigError::new(
                "initial.amplitudes",
                format!("expected {d} amplitudes, found {}", a.len()),
            )),
            InitialState::QubitLike { psi, psi_perp, .. } => {
                if *psi >= d {
                    return Err(ConfigError::new(
                        "initial.psi",
                        format!("index {psi} is out of range for d = {d}"),
                    ));
                }
                if *psi_perp >= d {
                    return Err(ConfigError::new(
                        "initial.psi_perp",
                        format!("index {psi_perp} is out of range for d = {d}"),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn validate_sweep(&self, sweep: &SweepSection) -> Result<(), ConfigError> {
        if let Some(d) = &sweep.d {
            if d.is_empty() {
                return Err(ConfigError::new("sweep.d", "axis is empty"));
            }
        }
        let mut points = self.round_list().len();
        for (axis, len) in [
            ("sweep.d", sweep.d.as_ref().map(Vec::len)),
            ("sweep.theta", sweep.theta.as_ref().map(AngleGrid::len)),
            ("sweep.gamma_sq", sweep.gamma_sq.as_ref().map(Vec::len)),
        ] {
            points = points.saturating_mul(len.unwrap_or(1));
            if points > MAX_POINTS {
                return Err(ConfigError::new(
                    axis,
                    format!("sweep expands to more than {MAX_POINTS} rows"),
                ));
            }
        }
        if let Some(theta) = &sweep.theta {
            let grid = theta.expand();
            if grid.is_empty() {
                return Err(ConfigError::new("sweep.theta", "axis is empty"));
            }
            if grid.iter().any(|t| !t.is_finite()) {
                return Err(ConfigError::new("sweep.theta", "angles must be finite"));
            }
            if self.basis != BasisChoice::Param2d {
                return Err(ConfigError::new("sweep.theta", "needs basis = \"param2d\""));
            }
        }
        if let Some(g) = &sweep.gamma_sq {
            if g.is_empty() {
                return Err(ConfigError::new("sweep.gamma_sq", "axis is empty"));
            }
            for (i, x) in g.iter().enumerate() {
                if !(0.0..=1.0).contains(x) {
                    return Err(ConfigError::new(
                        format!("sweep.gamma_sq[{i}]"),
                        format!("{x} is outside [0, 1]"),
                    ));
                }
            }
            let coherent = match sweep.over {
                SweepBase::Bipartite => true,
                SweepBase::Single => matches!(self.initial.kind, InitialKind::QubitLike),
                SweepBase::Copies => false,
            };
            if !coherent {
                return Err(ConfigError::new(
                    "sweep.gamma_sq",
                    "needs a bipartite sweep or a qubit_like initial state",
                ));
            }
        }
        if sweep.d.is_none()
            && sweep.theta.is_none()
            && sweep.gamma_sq.is_none()
            && self.rounds.is_none()
        {
            return Err(ConfigError::new("sweep", "no axis defined"));
        }
        Ok(())
    }

    /// The experiment a sweep point runs, or the kind itself otherwise.
    pub fn base_kind(&self) -> ExperimentKind {
        match (self.kind, &self.sweep) {
            (ExperimentKind::Sweep, Some(s)) => match s.over {
                SweepBase::Single => ExperimentKind::Single,
                SweepBase::Bipartite => ExperimentKind::Bipartite,
                SweepBase::Copies => ExperimentKind::Copies,
            },
            (ExperimentKind::Sweep, None) => ExperimentKind::Single,
            (k, _) => k,
        }
    }
}

fn check_dim(path: &str, d: usize) -> Result<(), ConfigError> {
    if d < 2 {
        return Err(ConfigError::new(
            path,
            format!("must be at least 2, got {d}"),
        ));
    }
    if d > MAX_DIM {
        return Err(ConfigError::new(
            path,
            format!("{d} exceeds the maximum of {MAX_DIM}"),
        ));
    }
    Ok(())
}

/// Parses and validates a config document. Errors carry the dotted path of
/// the offending field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let value: toml::Value = toml::from_str(text).map_err(|e| ConfigError::new("", e.message()))?;
    let config: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        ConfigError::new(path, e.into_inner())
    })?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

    #[test]
    fn angles() {
        assert_abs_diff_eq!(parse_angle("pi/4").unwrap(), FRAC_PI_4);
        assert_abs_diff_eq!(parse_angle(" 3 pi / 8").unwrap(), 3.0 * FRAC_PI_8);
        assert_abs_diff_eq!(parse_angle("-2*pi/3").unwrap(), -2.0 * PI / 3.0);
        assert_abs_diff_eq!(parse_angle("PI").unwrap(), PI);
        assert_abs_diff_eq!(parse_angle("0.25").unwrap(), 0.25);
        for bad in [
            "", "pi/0", "pi/", "xpi", "pi/4/2", "pipi", "nan", "inf", "2pi3",
        ] {
            assert!(parse_angle(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn minimal_single() {
        let cfg = parse_config("kind = \"single\"\nrounds = 4\n").unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Single);
        assert_eq!(cfg.d, 2);
        assert_eq!(cfg.round_list(), vec![4]);
        assert_eq!(cfg.targets, vec![0]);
        assert_eq!(cfg.initial.resolve().unwrap(), InitialState::MaximallyMixed);
        assert!(!cfg.monte_carlo_requested());
        assert_eq!(cfg.experiment_id(), "single");
    }

    #[test]
    fn full_single() {
        let cfg = parse_config(
            r#"
            kind = "single"
            name = "anchor"
            seed = 9
            trajectories = 1000
            d = 2
            rounds = { from = 0, to = 12 }
            basis = "param2d"
            theta = "pi/4"
            phi = 0.5
            targets = [0]

            [initial]
            kind = "qubit_like"
            p = 0.25
            gamma = [0.3, -0.4]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.round_list(), (0..=12).collect::<Vec<_>>());
        assert_eq!(cfg.theta, Some(Angle(FRAC_PI_4)));
        assert!(cfg.monte_carlo_requested());
        match cfg.initial.resolve().unwrap() {
            InitialState::QubitLike {
                p,
                gamma,
                psi,
                psi_perp,
            } => {
                assert_eq!(p, 0.25);
                assert_eq!(gamma, qsteer::Complex64::new(0.3, -0.4));
                assert_eq!((psi, psi_perp), (0, 1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        let err = parse_config("kind = \"single\"\nrounds = 1\ntargets = [0, 5]\n").unwrap_err();
        assert_eq!(err.path, "targets[1]");

        let err = parse_config(
            "kind = \"single\"\nrounds = 1\n[initial]\nkind = \"pure\"\nindex = \"x\"\n",
        )
        .unwrap_err();
        assert_eq!(err.path, "initial.index");

        let err = parse_config(
            "kind = \"single\"\nrounds = 1\n[initial]\nkind = \"qubit_like\"\np = 1.5\n",
        )
        .unwrap_err();
        assert_eq!(err.path, "initial.p");

        let err = parse_config(
            "kind = \"single\"\nrounds = 1\n[initial]\nkind = \"pure\"\nindex = 0\np = 0.5\n",
        )
        .unwrap_err();
        assert_eq!(err.path, "initial.p");

        let err = parse_config("kind = \"single\"\nrounds = 1\nbogus = 3\n").unwrap_err();
        assert!(err.message.contains("bogus"), "{err}");

        let err = parse_config("kind = \"nope\"\nrounds = 1\n").unwrap_err();
        assert_eq!(err.path, "kind");

        let err = parse_config("kind = \"single\"\n").unwrap_err();
        assert_eq!(err.path, "rounds");

        let err = parse_config("kind = \"single\"\nrounds = { from = 5, to = 2 }\n").unwrap_err();
        assert_eq!(err.path, "rounds");

        let err = parse_config(
            "kind = \"single\"\nrounds = 1\nbasis = \"param2d\"\nd = 3\ntheta = 0.1\n",
        )
        .unwrap_err();
        assert_eq!(err.path, "basis");

        let err = parse_config("kind = \"single\"\nrounds = 1\ntrajectories = 0\n").unwrap_err();
        assert_eq!(err.path, "trajectories");

        let err = parse_config("kind = \"sweep\"\nrounds = 1\n[sweep]\nd = []\n").unwrap_err();
        assert_eq!(err.path, "sweep.d");

        let err = parse_config("kind = \"single\"\nrounds = { from = 0, to = 100000000000 }\n")
            .unwrap_err();
        assert_eq!(err.path, "rounds");

        let err = parse_config("kind = \"single\"\nrounds = 1\nd = 100000\n").unwrap_err();
        assert_eq!(err.path, "d");

        let err = parse_config(
            "kind = \"sweep\"\nrounds = 1\nbasis = \"param2d\"\n[sweep]\ntheta = { from = 0, to = 1, points = 100000000000 }\n",
        )
        .unwrap_err();
        assert_eq!(err.path, "sweep.theta");

        let err = parse_config("kind = [\n").unwrap_err();
        assert_eq!(err.path, "");
    }

    #[test]
    fn sweep_sections() {
        let cfg = parse_config(
            r#"
            kind = "sweep"
            rounds = 5
            basis = "param2d"
            [initial]
            kind = "pure"
            index = 1
            [sweep]
            theta = { from = 0.0, to = "pi/2", points = 181 }
            "#,
        )
        .unwrap();
        let grid = cfg.sweep.as_ref().unwrap().theta.as_ref().unwrap().expand();
        assert_eq!(grid.len(), 181);
        assert_abs_diff_eq!(grid[90], FRAC_PI_4, epsilon = 1e-15);
        assert_eq!(cfg.base_kind(), ExperimentKind::Single);
        assert_eq!(cfg.experiment_id(), "single");

        let err =
            parse_config("kind = \"sweep\"\nrounds = 1\n[sweep]\ngamma_sq = [0.5]\n").unwrap_err();
        assert_eq!(err.path, "sweep.gamma_sq");
    }

    #[test]
    fn bipartite_and_copies_sections() {
        let cfg = parse_config(
            "kind = \"bipartite\"\nrounds = 3\n[bipartite]\nalpha = 0.6\nbeta = { re = 0.0, im = 0.8 }\np = 0.5\ngamma = 1.0\n",
        )
        .unwrap();
        let b = cfg.bipartite.unwrap();
        assert_eq!(b.beta.0, qsteer::Complex64::new(0.0, 0.8));

        let err = parse_config("kind = \"copies\"\nrounds = 3\n").unwrap_err();
        assert_eq!(err.path, "copies");
        let err =
            parse_config("kind = \"copies\"\nrounds = 3\n[copies]\ncopies = 2\noverlaps = [1.5]\n")
                .unwrap_err();
        assert_eq!(err.path, "copies.overlaps[0]");
    }
}
