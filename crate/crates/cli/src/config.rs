//! Experiment configs: `[section]` headers followed by `key = value` lines,
//! `#` starts a comment. Parsing names every unknown or misplaced key, and
//! `Display` writes a canonical form that parses back to an equal config.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use widomlab::Domain;

use crate::descriptors::{
    format_domain, format_list, format_vectors, parse_domain, parse_list, parse_vectors,
    AffineWeight, DescriptorError, FunctionSpec, Grid, SymbolSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ExperimentKind {
    #[serde(rename = "trace2")]
    Trace2,
    #[serde(rename = "traceF")]
    TraceF,
    #[serde(rename = "gamma-decay")]
    GammaDecay,
    #[serde(rename = "entropy-lattice")]
    EntropyLattice,
    #[serde(rename = "entropy-continuum")]
    EntropyContinuum,
    #[serde(rename = "roccaforte")]
    Roccaforte,
    #[serde(rename = "lemma51")]
    Lemma51,
    #[serde(rename = "fit")]
    Fit,
}

use ExperimentKind::*;

pub const ALL_KINDS: [ExperimentKind; 8] = [
    Trace2,
    TraceF,
    GammaDecay,
    EntropyLattice,
    EntropyContinuum,
    Roccaforte,
    Lemma51,
    Fit,
];

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Trace2 => "trace2",
            TraceF => "traceF",
            GammaDecay => "gamma-decay",
            EntropyLattice => "entropy-lattice",
            EntropyContinuum => "entropy-continuum",
            Roccaforte => "roccaforte",
            Lemma51 => "lemma51",
            Fit => "fit",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_KINDS
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ALL_KINDS.iter().map(|k| k.as_str()).collect();
                format!(
                    "unknown experiment `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

/// Numerical route requested by `numerics.method`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Auto,
    Radial,
    Overlap,
    Nystrom,
    Mc,
    Closed,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Radial => "radial",
            Method::Overlap => "overlap",
            Method::Nystrom => "nystrom",
            Method::Mc => "mc",
            Method::Closed => "closed",
        }
    }

    fn allowed(kind: ExperimentKind) -> &'static [Method] {
        match kind {
            Trace2 => &[
                Method::Auto,
                Method::Radial,
                Method::Overlap,
                Method::Nystrom,
            ],
            TraceF => &[Method::Auto, Method::Nystrom, Method::Mc],
            Roccaforte => &[Method::Auto, Method::Closed, Method::Mc],
            _ => &[],
        }
    }
}

/// Nyström nodes per axis, or a size derived from `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    Auto,
    Fixed(usize),
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::Auto => f.write_str("auto"),
            Resolution::Fixed(n) => write!(f, "{n}"),
        }
    }
}

/// Status a `fit` experiment attaches to its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Theorem,
    Conjectural,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: key `{key}` does not apply to {kind} experiments")]
    Inapplicable {
        line: usize,
        key: String,
        kind: ExperimentKind,
    },
    #[error("line {line}: `{key}`: {message}")]
    InvalidValue {
        line: usize,
        key: String,
        message: String,
    },
    #[error("missing key `{key}`{}", kind.map(|k| format!(" required by {k} experiments")).unwrap_or_default())]
    Missing {
        key: String,
        kind: Option<ExperimentKind>,
    },
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    /// The offending key, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax { .. } => None,
            ConfigError::UnknownKey { key, .. }
            | ConfigError::DuplicateKey { key, .. }
            | ConfigError::Inapplicable { key, .. }
            | ConfigError::InvalidValue { key, .. }
            | ConfigError::Missing { key, .. }
            | ConfigError::Invalid { key, .. } => Some(key),
        }
    }
}

const ANY: &[ExperimentKind] = &ALL_KINDS;

/// Every accepted key with the experiments that read it.
const KEYS: &[(&str, &[ExperimentKind])] = &[
    ("experiment.kind", ANY),
    ("experiment.seed", ANY),
    (
        "domain.omega",
        &[Trace2, TraceF, EntropyContinuum, Roccaforte],
    ),
    (
        "domain.gamma",
        &[Trace2, TraceF, GammaDecay, EntropyContinuum],
    ),
    ("symbol.alpha", &[Trace2, TraceF]),
    ("symbol.function", &[TraceF]),
    ("grid.r", &[Trace2, TraceF, EntropyContinuum, Fit]),
    ("grid.v", &[GammaDecay]),
    ("grid.sites", &[EntropyLattice]),
    ("grid.eps", &[Roccaforte]),
    ("numerics.method", &[Trace2, TraceF, Roccaforte]),
    ("numerics.resolution", &[Trace2, TraceF, EntropyContinuum]),
    ("numerics.samples", &[TraceF, Roccaforte]),
    ("numerics.directions", &[GammaDecay]),
    ("numerics.fermi_momentum", &[EntropyLattice]),
    ("numerics.betas", &[EntropyLattice, EntropyContinuum]),
    ("numerics.vectors", &[Roccaforte]),
    ("numerics.weight", &[Roccaforte]),
    ("numerics.length", &[Lemma51]),
    ("numerics.trials", &[Lemma51]),
    ("fit.values", &[Fit]),
    ("fit.dim", &[Fit]),
    ("fit.leading", &[Fit]),
    ("fit.target", &[Fit]),
    ("fit.status", &[Fit]),
    (
        "tolerance.relative",
        &[Trace2, TraceF, EntropyLattice, EntropyContinuum, Fit],
    ),
    ("tolerance.absolute", &[GammaDecay, Roccaforte, Lemma51]),
    ("output.timing", ANY),
];

pub fn known_keys() -> impl Iterator<Item = &'static str> {
    KEYS.iter().map(|(k, _)| *k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    #[serde(serialize_with = "ser_domain")]
    pub omega: Option<Domain>,
    #[serde(serialize_with = "ser_domain")]
    pub gamma: Option<Domain>,
    #[serde(serialize_with = "ser_display")]
    pub alpha: Option<SymbolSpec>,
    #[serde(serialize_with = "ser_display")]
    pub function: Option<FunctionSpec>,
    #[serde(serialize_with = "ser_display")]
    pub r_grid: Option<Grid>,
    #[serde(serialize_with = "ser_display")]
    pub v_grid: Option<Grid>,
    #[serde(serialize_with = "ser_display")]
    pub sites: Option<Grid>,
    #[serde(serialize_with = "ser_display")]
    pub eps_grid: Option<Grid>,
    pub method: Option<Method>,
    pub resolution: Option<Resolution>,
    pub samples: Option<usize>,
    pub directions: Option<usize>,
    pub fermi_momentum: Option<f64>,
    pub betas: Option<Vec<f64>>,
    pub vectors: Option<Vec<Vec<f64>>>,
    #[serde(serialize_with = "ser_display")]
    pub weight: Option<AffineWeight>,
    pub length: Option<usize>,
    pub trials: Option<usize>,
    pub values: Option<Vec<f64>>,
    pub dim: Option<usize>,
    pub leading: Option<f64>,
    pub target: Option<f64>,
    pub status: Option<Status>,
    pub relative_tolerance: Option<f64>,
    pub absolute_tolerance: Option<f64>,
    pub timing: Option<bool>,
}

fn ser_domain<S: serde::Serializer>(d: &Option<Domain>, s: S) -> Result<S::Ok, S::Error> {
    match d {
        Some(d) => s.serialize_str(&format_domain(d)),
        None => s.serialize_none(),
    }
}

fn ser_display<T: fmt::Display, S: serde::Serializer>(
    v: &Option<T>,
    s: S,
) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

impl ExperimentConfig {
    /// A config of the given kind with nothing set.
    pub fn empty(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            seed: 0,
            omega: None,
            gamma: None,
            alpha: None,
            function: None,
            r_grid: None,
            v_grid: None,
            sites: None,
            eps_grid: None,
            method: None,
            resolution: None,
            samples: None,
            directions: None,
            fermi_momentum: None,
            betas: None,
            vectors: None,
            weight: None,
            length: None,
            trials: None,
            values: None,
            dim: None,
            leading: None,
            target: None,
            status: None,
            relative_tolerance: None,
            absolute_tolerance: None,
            timing: None,
        }
    }

    /// Parses and validates. The text must name its experiment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::parse_as(text, None)
    }

    /// Parses with `kind` as the experiment when the text names none. If
    /// both are present they must agree.
    pub fn parse_as(text: &str, kind: Option<ExperimentKind>) -> Result<Self, ConfigError> {
        let entries = lex(text)?;
        let named = match entries.iter().find(|e| e.key == "experiment.kind") {
            Some(e) => Some((
                e.line,
                e.value
                    .parse::<ExperimentKind>()
                    .map_err(|message| ConfigError::InvalidValue {
                        line: e.line,
                        key: "experiment.kind".into(),
                        message,
                    })?,
            )),
            None => None,
        };
        let kind = match (named, kind) {
            (Some((line, a)), Some(b)) if a != b => {
                return Err(ConfigError::InvalidValue {
                    line,
                    key: "experiment.kind".into(),
                    message: format!("config is for {a} but {b} was requested"),
                })
            }
            (Some((_, a)), _) => a,
            (None, Some(b)) => b,
            (None, None) => {
                return Err(ConfigError::Missing {
                    key: "experiment.kind".into(),
                    kind: None,
                })
            }
        };
        let mut cfg = ExperimentConfig::empty(kind);
        for e in &entries {
            let applies = KEYS
                .iter()
                .find(|(k, _)| *k == e.key)
                .map(|(_, kinds)| kinds.contains(&kind));
            match applies {
                None => {
                    return Err(ConfigError::UnknownKey {
                        line: e.line,
                        key: e.key.clone(),
                    })
                }
                Some(false) => {
                    return Err(ConfigError::Inapplicable {
                        line: e.line,
                        key: e.key.clone(),
                        kind,
                    })
                }
                Some(true) => {}
            }
            cfg.set(&e.key, &e.value)
                .map_err(|message| ConfigError::InvalidValue {
                    line: e.line,
                    key: e.key.clone(),
                    message,
                })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        fn d<T>(r: Result<T, DescriptorError>) -> Result<T, String> {
            r.map_err(|e| e.0)
        }
        fn num<T: FromStr>(v: &str) -> Result<T, String> {
            v.parse::<T>()
                .map_err(|_| format!("`{v}` is not a valid number"))
        }
        fn finite(v: &str) -> Result<f64, String> {
            match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(format!("`{v}` is not a finite number")),
            }
        }
        match key {
            "experiment.kind" => {}
            "experiment.seed" => self.seed = num(v)?,
            "domain.omega" => self.omega = Some(d(parse_domain(v))?),
            "domain.gamma" => self.gamma = Some(d(parse_domain(v))?),
            "symbol.alpha" => self.alpha = Some(d(v.parse())?),
            "symbol.function" => self.function = Some(d(v.parse())?),
            "grid.r" => self.r_grid = Some(d(v.parse())?),
            "grid.v" => self.v_grid = Some(d(v.parse())?),
            "grid.sites" => self.sites = Some(d(v.parse())?),
            "grid.eps" => self.eps_grid = Some(d(v.parse())?),
            "numerics.method" => {
                let m = Method::allowed(self.kind)
                    .iter()
                    .find(|m| m.as_str() == v)
                    .ok_or_else(|| {
                        let names: Vec<&str> = Method::allowed(self.kind)
                            .iter()
                            .map(|m| m.as_str())
                            .collect();
                        format!("method `{v}` is not one of {}", names.join(", "))
                    })?;
                self.method = Some(*m);
            }
            "numerics.resolution" => {
                self.resolution = Some(if v == "auto" {
                    Resolution::Auto
                } else {
                    Resolution::Fixed(num(v)?)
                })
            }
            "numerics.samples" => self.samples = Some(num(v)?),
            "numerics.directions" => self.directions = Some(num(v)?),
            "numerics.fermi_momentum" => self.fermi_momentum = Some(finite(v)?),
            "numerics.betas" => self.betas = Some(d(parse_list(v))?),
            "numerics.vectors" => self.vectors = Some(d(parse_vectors(v))?),
            "numerics.weight" => self.weight = Some(d(v.parse())?),
            "numerics.length" => self.length = Some(num(v)?),
            "numerics.trials" => self.trials = Some(num(v)?),
            "fit.values" => self.values = Some(d(parse_list(v))?),
            "fit.dim" => self.dim = Some(num(v)?),
            "fit.leading" => self.leading = Some(finite(v)?),
            "fit.target" => self.target = Some(finite(v)?),
            "fit.status" => {
                self.status = Some(match v {
                    "theorem" => Status::Theorem,
                    "conjectural" => Status::Conjectural,
                    _ => return Err(format!("status `{v}` is neither theorem nor conjectural")),
                })
            }
            "tolerance.relative" => self.relative_tolerance = Some(finite(v)?),
            "tolerance.absolute" => self.absolute_tolerance = Some(finite(v)?),
            "output.timing" => {
                self.timing = Some(match v {
                    "on" | "true" => true,
                    "off" | "false" => false,
                    _ => return Err(format!("`{v}` is not on or off")),
                })
            }
            _ => return Err(format!("no setter for `{key}`")),
        }
        Ok(())
    }

    /// Checks required keys and cross-key consistency.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let kind = self.kind;
        let missing = |key: &str| ConfigError::Missing {
            key: key.into(),
            kind: Some(kind),
        };
        let invalid = |key: &str, message: String| ConfigError::Invalid {
            key: key.into(),
            message,
        };
        let need = |present: bool, key: &str| if present { Ok(()) } else { Err(missing(key)) };
        for (key, present) in [
            ("domain.omega", self.omega.is_some()),
            ("domain.gamma", self.gamma.is_some()),
            ("symbol.function", self.function.is_some()),
            ("grid.r", self.r_grid.is_some()),
            ("grid.v", self.v_grid.is_some()),
            ("grid.sites", self.sites.is_some()),
            ("grid.eps", self.eps_grid.is_some()),
            ("numerics.vectors", self.vectors.is_some()),
            ("fit.values", self.values.is_some()),
        ] {
            if required(kind, key) {
                need(present, key)?;
            }
        }
        if let (Some(o), Some(g)) = (&self.omega, &self.gamma) {
            if o.dim() != g.dim() {
                return Err(invalid(
                    "domain.gamma",
                    format!(
                        "dimension {} differs from domain.omega ({})",
                        g.dim(),
                        o.dim()
                    ),
                ));
            }
        }
        let dim = self.omega.as_ref().or(self.gamma.as_ref()).map(|d| d.dim());
        if let (Some(SymbolSpec::Product { x_powers, .. }), Some(dim)) = (&self.alpha, dim) {
            if x_powers.len() != dim {
                return Err(invalid(
                    "symbol.alpha",
                    format!("has {} coordinates, domains have {dim}", x_powers.len()),
                ));
            }
        }
        for (key, grid) in [
            ("grid.r", &self.r_grid),
            ("grid.v", &self.v_grid),
            ("grid.eps", &self.eps_grid),
        ] {
            if let Some(g) = grid {
                if g.values().iter().any(|x| *x <= 0.0) {
                    return Err(invalid(key, "entries must be positive".into()));
                }
            }
        }
        if let Some(g) = &self.sites {
            let ls = g.integer_values().map_err(|e| invalid("grid.sites", e.0))?;
            if ls
                .iter()
                .any(|&l| !(2..=widomlab::entropy::MAX_LATTICE).contains(&l))
            {
                return Err(invalid(
                    "grid.sites",
                    format!("sizes must lie in 2..={}", widomlab::entropy::MAX_LATTICE),
                ));
            }
        }
        if let Some(Resolution::Fixed(n)) = self.resolution {
            if n < 2 {
                return Err(invalid(
                    "numerics.resolution",
                    "needs at least two nodes per axis".into(),
                ));
            }
        }
        for (key, v) in [
            ("numerics.samples", self.samples),
            ("numerics.directions", self.directions),
            ("numerics.trials", self.trials),
        ] {
            if v == Some(0) {
                return Err(invalid(key, "must be positive".into()));
            }
        }
        if let Some(n) = self.length {
            if !(1..=widomlab::lemmas::MAX_IDENTITY_LEN).contains(&n) {
                return Err(invalid(
                    "numerics.length",
                    format!("must lie in 1..={}", widomlab::lemmas::MAX_IDENTITY_LEN),
                ));
            }
        }
        if let Some(bs) = &self.betas {
            if bs.iter().any(|b| *b <= 0.0) {
                return Err(invalid("numerics.betas", "orders must be positive".into()));
            }
        }
        if let Some(k) = self.fermi_momentum {
            if !(k > 0.0 && k < std::f64::consts::PI) {
                return Err(invalid(
                    "numerics.fermi_momentum",
                    "must lie in (0, pi)".into(),
                ));
            }
        }
        if let (Some(vs), Some(o)) = (&self.vectors, &self.omega) {
            if vs[0].len() != o.dim() {
                return Err(invalid(
                    "numerics.vectors",
                    format!(
                        "vectors have {} coordinates, domain.omega has {}",
                        vs[0].len(),
                        o.dim()
                    ),
                ));
            }
        }
        if let (Some(w), Some(o)) = (&self.weight, &self.omega) {
            if w.gradient.len() != o.dim() {
                return Err(invalid(
                    "numerics.weight",
                    format!(
                        "gradient has {} coordinates, domain.omega has {}",
                        w.gradient.len(),
                        o.dim()
                    ),
                ));
            }
        }
        if let (Some(vals), Some(r)) = (&self.values, &self.r_grid) {
            if vals.len() != r.len() {
                return Err(invalid(
                    "fit.values",
                    format!("{} values for {} grid points", vals.len(), r.len()),
                ));
            }
        }
        if let Some(d) = self.dim {
            if !(1..=widomlab::geometry::MAX_DIM).contains(&d) {
                return Err(invalid(
                    "fit.dim",
                    format!("must lie in 1..={}", widomlab::geometry::MAX_DIM),
                ));
            }
        }
        for (key, t) in [
            ("tolerance.relative", self.relative_tolerance),
            ("tolerance.absolute", self.absolute_tolerance),
        ] {
            if let Some(t) = t {
                if t <= 0.0 {
                    return Err(invalid(key, "must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// `output.timing`, on unless switched off.
    pub fn timing(&self) -> bool {
        self.timing.unwrap_or(true)
    }
}

fn required(kind: ExperimentKind, key: &str) -> bool {
    matches!(
        (kind, key),
        (
            Trace2 | TraceF | EntropyContinuum,
            "domain.omega" | "domain.gamma" | "grid.r"
        ) | (TraceF, "symbol.function")
            | (GammaDecay, "domain.gamma" | "grid.v")
            | (EntropyLattice, "grid.sites")
            | (Roccaforte, "domain.omega" | "grid.eps" | "numerics.vectors")
            | (Fit, "grid.r" | "fit.values")
    )
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExperimentConfig::parse(s)
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut section = String::new();
        let mut line = |f: &mut fmt::Formatter<'_>, key: &str, value: String| -> fmt::Result {
            let (sec, name) = key.split_once('.').expect("keys are section.name");
            if sec != section {
                if !section.is_empty() {
                    writeln!(f)?;
                }
                writeln!(f, "[{sec}]")?;
                section = sec.to_string();
            }
            writeln!(f, "{name} = {value}")
        };
        line(f, "experiment.kind", self.kind.to_string())?;
        line(f, "experiment.seed", self.seed.to_string())?;
        macro_rules! opt {
            ($key:literal, $field:expr, $fmt:expr) => {
                if let Some(v) = &$field {
                    line(f, $key, $fmt(v))?;
                }
            };
        }
        opt!("domain.omega", self.omega, format_domain);
        opt!("domain.gamma", self.gamma, format_domain);
        opt!("symbol.alpha", self.alpha, |v: &SymbolSpec| v.to_string());
        opt!("symbol.function", self.function, |v: &FunctionSpec| v
            .to_string());
        opt!("grid.r", self.r_grid, |v: &Grid| v.to_string());
        opt!("grid.v", self.v_grid, |v: &Grid| v.to_string());
        opt!("grid.sites", self.sites, |v: &Grid| v.to_string());
        opt!("grid.eps", self.eps_grid, |v: &Grid| v.to_string());
        opt!("numerics.method", self.method, |v: &Method| v
            .as_str()
            .to_string());
        opt!("numerics.resolution", self.resolution, |v: &Resolution| v
            .to_string());
        opt!("numerics.samples", self.samples, |v: &usize| v.to_string());
        opt!("numerics.directions", self.directions, |v: &usize| v
            .to_string());
        opt!("numerics.fermi_momentum", self.fermi_momentum, |v: &f64| v
            .to_string());
        opt!("numerics.betas", self.betas, |v: &Vec<f64>| format_list(v));
        opt!("numerics.vectors", self.vectors, |v: &Vec<Vec<f64>>| {
            format_vectors(v)
        });
        opt!("numerics.weight", self.weight, |v: &AffineWeight| v
            .to_string());
        opt!("numerics.length", self.length, |v: &usize| v.to_string());
        opt!("numerics.trials", self.trials, |v: &usize| v.to_string());
        opt!("fit.values", self.values, |v: &Vec<f64>| format_list(v));
        opt!("fit.dim", self.dim, |v: &usize| v.to_string());
        opt!("fit.leading", self.leading, |v: &f64| v.to_string());
        opt!("fit.target", self.target, |v: &f64| v.to_string());
        opt!("fit.status", self.status, |v: &Status| match v {
            Status::Theorem => "theorem".to_string(),
            Status::Conjectural => "conjectural".to_string(),
        });
        opt!("tolerance.relative", self.relative_tolerance, |v: &f64| v
            .to_string());
        opt!("tolerance.absolute", self.absolute_tolerance, |v: &f64| v
            .to_string());
        opt!("output.timing", self.timing, |v: &bool| if *v {
            "on".to_string()
        } else {
            "off".to_string()
        });
        Ok(())
    }
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

/// Splits the text into `section.key = value` entries, rejecting duplicates
/// and unknown keys.
fn lex(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut section: Option<String> = None;
    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split_once('#').map_or(raw, |(head, _)| head).trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("unterminated section header `{content}`"),
                });
            };
            let name = name.trim();
            if name.is_empty()
                || !name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("bad section name `{name}`"),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            });
        };
        let Some(sec) = &section else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("key `{}` appears before any section header", key.trim()),
            });
        };
        let key = format!("{sec}.{}", key.trim());
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(ConfigError::UnknownKey { line, key });
        }
        if entries.iter().any(|e| e.key == key) {
            return Err(ConfigError::DuplicateKey { line, key });
        }
        entries.push(Entry {
            line,
            key,
            value: value.trim().to_string(),
        });
    }
    Ok(entries)
}
