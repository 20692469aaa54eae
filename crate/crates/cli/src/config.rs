//! Scenario configuration files.
//!
//! The format is a flat list of `key = value [unit]` lines. `#` starts a
//! comment. Values are numbers (`1e5`, `-2`, `40/9`), bare words
//! (`surface`, `true`), quoted strings, or bracketed arrays that may nest
//! (`[[12, 14], [16, 6]]`). A quoted string holding a number and a unit
//! (`"10 kPa"`) is read as that quantity. The grammar is documented in
//! `docs/config.md`.
//!
//! Every dimensional key requires a unit from its dimension's table and is
//! converted to SI on load. The literal text of each entry is kept, so
//! [`ScenarioConfig::dump`] reproduces the values exactly in the units the
//! file declared.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use octoarm_core::muscles::MuscleKind;
use octoarm_core::shaping::{
    DEFAULT_GRASP_WEIGHT, DEFAULT_LEARNING_RATE, DEFAULT_OBSTACLE_PENALTY, DEFAULT_TIP_WEIGHT,
};
use octoarm_core::{Circle, GraspDistance, Musculature, Obstacle, Point, RodModel, Strain};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}, key `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "key `{k}`: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            key: None,
            message: message.into(),
        }
    }

    fn entry(entry: &Entry, message: impl Into<String>) -> Self {
        Self {
            line: Some(entry.line),
            key: Some(entry.key.clone()),
            message: message.into(),
        }
    }

    fn field(key: &str, message: impl Into<String>) -> Self {
        Self {
            line: None,
            key: Some(key.to_string()),
            message: message.into(),
        }
    }
}

/// Physical dimension of a configuration key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Pressure,
    Density,
    Dissipation,
    Time,
    Curvature,
    PerArea,
    PerVolume,
    Dimensionless,
    Count,
    Word,
    Path,
}

impl Dimension {
    /// Accepted units with their conversion `(multiply, divide)` to SI.
    pub fn units(self) -> &'static [(&'static str, f64, f64)] {
        match self {
            Dimension::Length => &[("m", 1.0, 1.0), ("cm", 1.0, 100.0), ("mm", 1.0, 1000.0)],
            Dimension::Pressure => &[("Pa", 1.0, 1.0), ("kPa", 1000.0, 1.0), ("MPa", 1e6, 1.0)],
            Dimension::Density => &[("kg/m^3", 1.0, 1.0), ("g/cm^3", 1000.0, 1.0)],
            Dimension::Dissipation => &[("kg/s", 1.0, 1.0), ("g/s", 1.0, 1000.0)],
            Dimension::Time => &[("s", 1.0, 1.0), ("ms", 1.0, 1000.0), ("us", 1.0, 1e6)],
            Dimension::Curvature => &[("1/m", 1.0, 1.0), ("1/cm", 100.0, 1.0)],
            Dimension::PerArea => &[("1/m^2", 1.0, 1.0), ("1/cm^2", 1e4, 1.0)],
            Dimension::PerVolume => &[("1/m^3", 1.0, 1.0), ("1/cm^3", 1e6, 1.0)],
            Dimension::Dimensionless | Dimension::Count | Dimension::Word | Dimension::Path => &[],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Dimension::Length => "length",
            Dimension::Pressure => "pressure",
            Dimension::Density => "density",
            Dimension::Dissipation => "dissipation",
            Dimension::Time => "time",
            Dimension::Curvature => "curvature",
            Dimension::PerArea => "weight per area",
            Dimension::PerVolume => "weight per volume",
            Dimension::Dimensionless => "dimensionless number",
            Dimension::Count => "count",
            Dimension::Word => "word",
            Dimension::Path => "path",
        }
    }
}

/// Shape of the value expected for a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    Pair,
    Triple,
    List,
    ListOfPairs,
    ListOfTriples,
}

/// Every key the loader understands.
pub const KEYS: &[(&str, Dimension, Shape, &str)] = &[
    (
        "name",
        Dimension::Word,
        Shape::Scalar,
        "scenario label used in the summary",
    ),
    ("L0", Dimension::Length, Shape::Scalar, "rest arm length"),
    (
        "base_radius",
        Dimension::Length,
        Shape::Scalar,
        "radius at the clamped base",
    ),
    (
        "tip_radius",
        Dimension::Length,
        Shape::Scalar,
        "radius at the tip",
    ),
    ("E", Dimension::Pressure, Shape::Scalar, "Young's modulus"),
    ("G", Dimension::Pressure, Shape::Scalar, "shear modulus"),
    ("rho", Dimension::Density, Shape::Scalar, "density"),
    (
        "gamma",
        Dimension::Dissipation,
        Shape::Scalar,
        "dissipation",
    ),
    (
        "rest_stretch",
        Dimension::Dimensionless,
        Shape::Scalar,
        "rest stretch strain",
    ),
    (
        "rest_shear",
        Dimension::Dimensionless,
        Shape::Scalar,
        "rest shear strain",
    ),
    (
        "rest_curvature",
        Dimension::Curvature,
        Shape::Scalar,
        "rest curvature",
    ),
    (
        "n_elements",
        Dimension::Count,
        Shape::Scalar,
        "number of elements",
    ),
    (
        "lm_top.max_stress",
        Dimension::Pressure,
        Shape::Scalar,
        "top longitudinal muscle max stress",
    ),
    (
        "lm_top.area_fraction",
        Dimension::Dimensionless,
        Shape::Scalar,
        "top longitudinal muscle area / A",
    ),
    (
        "lm_top.offset_fraction",
        Dimension::Dimensionless,
        Shape::Scalar,
        "top longitudinal muscle offset / radius",
    ),
    (
        "lm_bottom.max_stress",
        Dimension::Pressure,
        Shape::Scalar,
        "bottom longitudinal muscle max stress",
    ),
    (
        "lm_bottom.area_fraction",
        Dimension::Dimensionless,
        Shape::Scalar,
        "bottom longitudinal muscle area / A",
    ),
    (
        "lm_bottom.offset_fraction",
        Dimension::Dimensionless,
        Shape::Scalar,
        "bottom longitudinal muscle offset / radius",
    ),
    (
        "tm.max_stress",
        Dimension::Pressure,
        Shape::Scalar,
        "transverse muscle max stress",
    ),
    (
        "tm.area_fraction",
        Dimension::Dimensionless,
        Shape::Scalar,
        "transverse muscle area / A",
    ),
    (
        "targets",
        Dimension::Length,
        Shape::ListOfPairs,
        "reaching waypoints",
    ),
    (
        "durations",
        Dimension::Time,
        Shape::List,
        "simulated time spent on each waypoint",
    ),
    (
        "warm_start",
        Dimension::Word,
        Shape::Scalar,
        "warm-start each target from the previous one (true/false)",
    ),
    (
        "tip_weight",
        Dimension::PerArea,
        Shape::Scalar,
        "tip cost weight",
    ),
    (
        "object_center",
        Dimension::Length,
        Shape::Pair,
        "grasp object center",
    ),
    (
        "object_radius",
        Dimension::Length,
        Shape::Scalar,
        "grasp object radius",
    ),
    (
        "grasp_weight",
        Dimension::PerArea,
        Shape::Scalar,
        "grasp cost weight",
    ),
    (
        "grasp_window",
        Dimension::Length,
        Shape::Pair,
        "arc-length window of the grasp cost",
    ),
    (
        "grasp_distance",
        Dimension::Word,
        Shape::Scalar,
        "surface or centerline",
    ),
    (
        "obstacles",
        Dimension::Length,
        Shape::ListOfTriples,
        "extra circular obstacles [x, y, radius]",
    ),
    (
        "obstacle_penalty",
        Dimension::PerVolume,
        Shape::Scalar,
        "penalty weight on obstacle violation",
    ),
    (
        "learning_rate",
        Dimension::Dimensionless,
        Shape::Scalar,
        "gradient ascent step",
    ),
    (
        "max_iters",
        Dimension::Count,
        Shape::Scalar,
        "optimizer iteration budget",
    ),
    (
        "tolerance",
        Dimension::Dimensionless,
        Shape::Scalar,
        "projected gradient stopping tolerance",
    ),
    (
        "backoff_patience",
        Dimension::Count,
        Shape::Scalar,
        "non-decreasing iterations before the step shrinks",
    ),
    (
        "backoff_factor",
        Dimension::Dimensionless,
        Shape::Scalar,
        "step shrink factor",
    ),
    ("duration", Dimension::Time, Shape::Scalar, "simulated time"),
    ("dt", Dimension::Time, Shape::Scalar, "time step"),
    (
        "sample_stride",
        Dimension::Count,
        Shape::Scalar,
        "steps between trajectory samples",
    ),
    (
        "perturbation",
        Dimension::Length,
        Shape::Scalar,
        "initial tip displacement",
    ),
    (
        "activations",
        Dimension::Dimensionless,
        Shape::Triple,
        "uniform activations [LM_top, LM_bottom, TM]",
    ),
    (
        "activation_file",
        Dimension::Path,
        Shape::Scalar,
        "activation CSV to simulate",
    ),
    (
        "seed",
        Dimension::Count,
        Shape::Scalar,
        "random seed for sampled checks",
    ),
];

fn key_spec(key: &str) -> Option<(Dimension, Shape)> {
    KEYS.iter().find(|k| k.0 == key).map(|k| (k.1, k.2))
}

/// A value as written in the file.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number { value: f64, text: String },
    Word(String),
    Text(String),
    List(Vec<Value>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number { text, .. } => f.write_str(text),
            Value::Word(w) => f.write_str(w),
            Value::Text(t) => write!(f, "\"{t}\""),
            Value::List(items) => {
                f.write_char('[')?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_char(']')
            }
        }
    }
}

/// One `key = value [unit]` line.
#[derive(Debug, Clone)]
pub struct Entry {
    pub key: String,
    pub value: Value,
    pub unit: Option<String>,
    pub line: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.value == other.value && self.unit == other.unit
    }
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    text: &'a str,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        Self {
            chars: text.char_indices().peekable(),
            text,
            line,
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some((_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn pos(&mut self) -> usize {
        self.chars
            .peek()
            .map(|(i, _)| *i)
            .unwrap_or(self.text.len())
    }

    fn value(&mut self) -> Result<Value, ConfigError> {
        self.skip_ws();
        match self.chars.peek().map(|(_, c)| *c) {
            Some('[') => {
                self.chars.next();
                let mut items = Vec::new();
                self.skip_ws();
                if matches!(self.chars.peek(), Some((_, ']'))) {
                    self.chars.next();
                    return Ok(Value::List(items));
                }
                loop {
                    items.push(self.value()?);
                    self.skip_ws();
                    match self.chars.next() {
                        Some((_, ',')) => continue,
                        Some((_, ']')) => return Ok(Value::List(items)),
                        Some((_, c)) => {
                            return Err(ConfigError::at(
                                self.line,
                                format!("expected `,` or `]`, found `{c}`"),
                            ))
                        }
                        None => return Err(ConfigError::at(self.line, "unterminated array")),
                    }
                }
            }
            Some('"') => {
                self.chars.next();
                let start = self.pos();
                loop {
                    match self.chars.next() {
                        Some((i, '"')) => return Ok(Value::Text(self.text[start..i].to_string())),
                        Some(_) => {}
                        None => return Err(ConfigError::at(self.line, "unterminated string")),
                    }
                }
            }
            Some(_) => {
                let start = self.pos();
                while matches!(self.chars.peek(), Some((_, c)) if !c.is_whitespace() && *c != ',' && *c != ']' && *c != '[')
                {
                    self.chars.next();
                }
                let token = &self.text[start..self.pos()];
                Ok(parse_token(token))
            }
            None => Err(ConfigError::at(self.line, "missing value")),
        }
    }

    fn rest(&mut self) -> &'a str {
        let p = self.pos();
        self.text[p..].trim()
    }
}

fn parse_number(token: &str) -> Option<f64> {
    if let Ok(v) = token.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let (num, den) = token.split_once('/')?;
    let (num, den) = (num.parse::<f64>().ok()?, den.parse::<f64>().ok()?);
    let v = num / den;
    (den != 0.0 && v.is_finite()).then_some(v)
}

fn parse_token(token: &str) -> Value {
    match parse_number(token) {
        Some(value) => Value::Number {
            value,
            text: token.to_string(),
        },
        None => Value::Word(token.to_string()),
    }
}

fn valid_key(key: &str) -> bool {
    let mut chars = key.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Parse the raw entries of a configuration text without interpreting them.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut entries: Vec<Entry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        let (key, rhs) = body
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, "expected `key = value [unit]`"))?;
        let key = key.trim();
        if !valid_key(key) {
            return Err(ConfigError::at(line, format!("invalid key `{key}`")));
        }
        if let Some(prev) = entries.iter().find(|e| e.key == key) {
            return Err(ConfigError::at(
                line,
                format!("duplicate key `{key}` (first set on line {})", prev.line),
            ));
        }
        let mut cursor = Cursor::new(rhs, line);
        let mut value = cursor.value()?;
        let rest = cursor.rest();
        let mut unit = if rest.is_empty() {
            None
        } else if rest.split_whitespace().count() == 1 {
            Some(rest.to_string())
        } else {
            return Err(ConfigError::at(
                line,
                format!("unexpected text `{rest}` after the value"),
            ));
        };
        if let Value::Text(t) = value.clone() {
            let mut parts = t.split_whitespace();
            if let (Some(n), Some(u), None) = (parts.next(), parts.next(), parts.next()) {
                if let Some(v) = parse_number(n) {
                    if unit.is_some() {
                        return Err(ConfigError::at(
                            line,
                            "unit given both inside and after the quoted value",
                        ));
                    }
                    value = Value::Number {
                        value: v,
                        text: n.to_string(),
                    };
                    unit = Some(u.to_string());
                }
            } else if let Some(v) = parse_number(t.trim()) {
                value = Value::Number {
                    value: v,
                    text: t.trim().to_string(),
                };
            }
        }
        entries.push(Entry {
            key: key.to_string(),
            value,
            unit,
            line,
        });
    }
    Ok(entries)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspSetup {
    pub object: Circle,
    pub weight: f64,
    pub window: (f64, f64),
    pub distance: GraspDistance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    pub learning_rate: f64,
    pub max_iters: usize,
    pub tolerance: f64,
    pub backoff_patience: usize,
    pub backoff_factor: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            max_iters: 100_000,
            tolerance: 1e-6,
            backoff_patience: 50,
            backoff_factor: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSettings {
    /// Simulated time for `simulate` and `grasp`; `None` selects the verb's default.
    pub duration: Option<f64>,
    pub dt: f64,
    pub sample_stride: usize,
    pub perturbation: f64,
    pub activations: [f64; 3],
    pub activation_file: Option<PathBuf>,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            duration: None,
            dt: 1e-5,
            sample_stride: 1000,
            perturbation: 0.0,
            activations: [0.0; 3],
            activation_file: None,
        }
    }
}

/// Default simulated time per reaching waypoint [s]: activations switch at
/// 1.5 s and 3.5 s, then the last profile is held for 2 s.
pub const DEFAULT_WAYPOINT_DURATIONS: [f64; 3] = [1.5, 2.0, 2.0];

/// A validated scenario in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: RodModel,
    pub musculature: Musculature,
    pub targets: Vec<Point>,
    pub durations: Vec<f64>,
    pub warm_start: bool,
    pub tip_weight: f64,
    pub grasp: Option<GraspSetup>,
    pub obstacles: Vec<Obstacle>,
    pub obstacle_penalty: f64,
    pub optimizer: OptimizerSettings,
    pub simulation: SimulationSettings,
    pub seed: u64,
    /// Entries as written, in file order.
    pub entries: Vec<Entry>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            model: RodModel::default(),
            musculature: Musculature::default(),
            targets: Vec::new(),
            durations: Vec::new(),
            warm_start: true,
            tip_weight: DEFAULT_TIP_WEIGHT,
            grasp: None,
            obstacles: Vec::new(),
            obstacle_penalty: DEFAULT_OBSTACLE_PENALTY,
            optimizer: OptimizerSettings::default(),
            simulation: SimulationSettings::default(),
            seed: 0,
            entries: Vec::new(),
        }
    }
}

fn quantity(entry: &Entry, v: &Value, dim: Dimension) -> Result<f64, ConfigError> {
    let Value::Number { value, .. } = v else {
        return Err(ConfigError::entry(
            entry,
            format!("expected a number, found `{v}`"),
        ));
    };
    let units = dim.units();
    match (&entry.unit, units.is_empty()) {
        (None, true) => Ok(*value),
        (Some(u), true) if u == "1" => Ok(*value),
        (Some(u), true) => Err(ConfigError::entry(
            entry,
            format!("unit mismatch: `{u}` given for a {}", dim.name()),
        )),
        (None, false) => Err(ConfigError::entry(
            entry,
            format!(
                "missing unit; expected a {} in one of {}",
                dim.name(),
                unit_list(dim)
            ),
        )),
        (Some(u), false) => match units.iter().find(|(name, _, _)| name == u) {
            Some((_, mul, div)) => Ok(value * mul / div),
            None => Err(ConfigError::entry(
                entry,
                format!(
                    "unit mismatch: `{u}` is not a {} unit; expected one of {}",
                    dim.name(),
                    unit_list(dim)
                ),
            )),
        },
    }
}

fn unit_list(dim: Dimension) -> String {
    dim.units()
        .iter()
        .map(|u| u.0)
        .collect::<Vec<_>>()
        .join(", ")
}

fn list<'v>(entry: &Entry, v: &'v Value, len: Option<usize>) -> Result<&'v [Value], ConfigError> {
    match v {
        Value::List(items) if len.is_none_or(|n| items.len() == n) => Ok(items),
        Value::List(items) => Err(ConfigError::entry(
            entry,
            format!(
                "expected {} values, found {}",
                len.unwrap_or(0),
                items.len()
            ),
        )),
        other => Err(ConfigError::entry(
            entry,
            format!("expected an array, found `{other}`"),
        )),
    }
}

fn count(entry: &Entry, v: &Value) -> Result<u64, ConfigError> {
    let x = quantity(entry, v, Dimension::Count)?;
    if x < 0.0 || x.fract() != 0.0 || x > 9.0e15 {
        return Err(ConfigError::entry(
            entry,
            format!("expected a non-negative integer, found {x}"),
        ));
    }
    Ok(x as u64)
}

fn word(entry: &Entry) -> Result<&str, ConfigError> {
    match &entry.value {
        Value::Word(w) | Value::Text(w) => Ok(w),
        other => Err(ConfigError::entry(
            entry,
            format!("expected a word, found `{other}`"),
        )),
    }
}

fn check(key: &str, ok: bool, message: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::field(key, message))
    }
}

impl ScenarioConfig {
    /// Parse and validate configuration text, filling unspecified values
    /// with the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let entries = parse_entries(text)?;
        let mut cfg = ScenarioConfig::default();
        let mut grasp_center: Option<Point> = None;
        let mut grasp_radius: Option<f64> = None;
        let mut grasp_weight = DEFAULT_GRASP_WEIGHT;
        let mut grasp_window: Option<(f64, f64)> = None;
        let mut grasp_distance = GraspDistance::Surface;
        for e in &entries {
            let (dim, _shape) =
                key_spec(&e.key).ok_or_else(|| ConfigError::entry(e, "unknown key"))?;
            let q = |v: &Value| quantity(e, v, dim);
            let pair = |v: &Value| -> Result<Point, ConfigError> {
                let xs = list(e, v, Some(2))?;
                Ok(Point::new(q(&xs[0])?, q(&xs[1])?))
            };
            let m = &mut cfg.model;
            match e.key.as_str() {
                "name" => cfg.name = word(e)?.to_string(),
                "L0" => m.rest_length = q(&e.value)?,
                "base_radius" => m.base_radius = q(&e.value)?,
                "tip_radius" => m.tip_radius = q(&e.value)?,
                "E" => m.youngs_modulus = q(&e.value)?,
                "G" => m.shear_modulus = q(&e.value)?,
                "rho" => m.density = q(&e.value)?,
                "gamma" => m.damping = q(&e.value)?,
                "rest_stretch" => m.rest_strain.stretch = q(&e.value)?,
                "rest_shear" => m.rest_strain.shear = q(&e.value)?,
                "rest_curvature" => m.rest_strain.curvature = q(&e.value)?,
                "n_elements" => m.n_elements = count(e, &e.value)? as usize,
                k if k.contains('.') => {
                    let (group, field) = k.split_once('.').unwrap_or_default();
                    let kind = match group {
                        "lm_top" => MuscleKind::LongitudinalTop,
                        "lm_bottom" => MuscleKind::LongitudinalBottom,
                        _ => MuscleKind::Transverse,
                    };
                    let spec = &mut cfg.musculature.muscles[kind.index()];
                    let v = q(&e.value)?;
                    match field {
                        "max_stress" => spec.max_stress = v,
                        "area_fraction" => spec.area_fraction = v,
                        _ => spec.offset_fraction = v,
                    }
                }
                "targets" => {
                    let items = list(e, &e.value, None)?;
                    if items.is_empty() {
                        return Err(ConfigError::entry(e, "empty task list"));
                    }
                    cfg.targets = items.iter().map(pair).collect::<Result<_, _>>()?;
                }
                "durations" => {
                    cfg.durations = list(e, &e.value, None)?
                        .iter()
                        .map(q)
                        .collect::<Result<_, _>>()?;
                }
                "warm_start" => {
                    cfg.warm_start = match word(e)? {
                        "true" => true,
                        "false" => false,
                        other => {
                            return Err(ConfigError::entry(
                                e,
                                format!("expected true or false, found `{other}`"),
                            ))
                        }
                    }
                }
                "tip_weight" => cfg.tip_weight = q(&e.value)?,
                "object_center" => grasp_center = Some(pair(&e.value)?),
                "object_radius" => grasp_radius = Some(q(&e.value)?),
                "grasp_weight" => grasp_weight = q(&e.value)?,
                "grasp_window" => {
                    let p = pair(&e.value)?;
                    grasp_window = Some((p.x, p.y));
                }
                "grasp_distance" => {
                    grasp_distance = match word(e)? {
                        "surface" => GraspDistance::Surface,
                        "centerline" => GraspDistance::Centerline,
                        other => {
                            return Err(ConfigError::entry(
                                e,
                                format!("expected surface or centerline, found `{other}`"),
                            ))
                        }
                    }
                }
                "obstacles" => {
                    cfg.obstacles = list(e, &e.value, None)?
                        .iter()
                        .map(|o| {
                            let xs = list(e, o, Some(3))?;
                            Ok(Obstacle {
                                shape: Circle::new(q(&xs[0])?, q(&xs[1])?, q(&xs[2])?),
                                penalty: DEFAULT_OBSTACLE_PENALTY,
                            })
                        })
                        .collect::<Result<_, ConfigError>>()?;
                }
                "obstacle_penalty" => cfg.obstacle_penalty = q(&e.value)?,
                "learning_rate" => cfg.optimizer.learning_rate = q(&e.value)?,
                "max_iters" => cfg.optimizer.max_iters = count(e, &e.value)? as usize,
                "tolerance" => cfg.optimizer.tolerance = q(&e.value)?,
                "backoff_patience" => cfg.optimizer.backoff_patience = count(e, &e.value)? as usize,
                "backoff_factor" => cfg.optimizer.backoff_factor = q(&e.value)?,
                "duration" => cfg.simulation.duration = Some(q(&e.value)?),
                "dt" => cfg.simulation.dt = q(&e.value)?,
                "sample_stride" => cfg.simulation.sample_stride = count(e, &e.value)? as usize,
                "perturbation" => cfg.simulation.perturbation = q(&e.value)?,
                "activations" => {
                    let xs = list(e, &e.value, Some(3))?;
                    cfg.simulation.activations = [q(&xs[0])?, q(&xs[1])?, q(&xs[2])?];
                }
                "activation_file" => cfg.simulation.activation_file = Some(PathBuf::from(word(e)?)),
                "seed" => cfg.seed = count(e, &e.value)?,
                _ => return Err(ConfigError::entry(e, "unknown key")),
            }
        }
        for o in &mut cfg.obstacles {
            o.penalty = cfg.obstacle_penalty;
        }
        match (grasp_center, grasp_radius) {
            (Some(c), Some(r)) => {
                cfg.grasp = Some(GraspSetup {
                    object: Circle {
                        center: c,
                        radius: r,
                    },
                    weight: grasp_weight,
                    window: grasp_window
                        .unwrap_or((0.4 * cfg.model.rest_length, cfg.model.rest_length)),
                    distance: grasp_distance,
                })
            }
            (None, None) => {}
            _ => {
                return Err(ConfigError::field(
                    "object_center",
                    "object_center and object_radius must be given together",
                ))
            }
        }
        cfg.entries = entries;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::field("config", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Bounds and cross-field checks.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model
            .validate()
            .map_err(|e| ConfigError::field("rod", e.to_string()))?;
        self.musculature
            .validate()
            .map_err(|e| ConfigError::field("muscles", e.to_string()))?;
        let l0 = self.model.rest_length;
        if let Some(g) = &self.grasp {
            check("object_radius", g.object.radius > 0.0, "must be positive")?;
            check("grasp_weight", g.weight >= 0.0, "must be non-negative")?;
            check(
                "grasp_window",
                g.window.0 >= 0.0 && g.window.0 <= g.window.1 && g.window.1 <= l0 * (1.0 + 1e-12),
                "must be an ordered interval within [0, L0]",
            )?;
        }
        for o in &self.obstacles {
            check(
                "obstacles",
                o.shape.radius > 0.0,
                "obstacle radii must be positive",
            )?;
        }
        check(
            "obstacle_penalty",
            self.obstacle_penalty >= 0.0,
            "must be non-negative",
        )?;
        check("tip_weight", self.tip_weight >= 0.0, "must be non-negative")?;
        check(
            "durations",
            self.durations.iter().all(|d| *d >= 0.0),
            "must be non-negative",
        )?;
        check(
            "durations",
            self.durations.is_empty() || self.durations.len() == self.targets.len(),
            "needs one duration per target",
        )?;
        let o = &self.optimizer;
        check("learning_rate", o.learning_rate > 0.0, "must be positive")?;
        check("tolerance", o.tolerance >= 0.0, "must be non-negative")?;
        check(
            "backoff_patience",
            o.backoff_patience > 0,
            "must be positive",
        )?;
        check(
            "backoff_factor",
            o.backoff_factor > 0.0 && o.backoff_factor < 1.0,
            "must lie in (0, 1)",
        )?;
        let s = &self.simulation;
        check("dt", s.dt > 0.0, "must be positive")?;
        check(
            "duration",
            s.duration.is_none_or(|d| d >= 0.0),
            "must be non-negative",
        )?;
        check("sample_stride", s.sample_stride > 0, "must be at least 1")?;
        check(
            "activations",
            s.activations.iter().all(|a| (0.0..=1.0).contains(a)),
            "must lie in [0, 1]",
        )?;
        Ok(())
    }

    /// Simulated time per waypoint, falling back to the defaults.
    pub fn waypoint_durations(&self) -> Vec<f64> {
        if !self.durations.is_empty() {
            return self.durations.clone();
        }
        (0..self.targets.len())
            .map(|k| DEFAULT_WAYPOINT_DURATIONS.get(k).copied().unwrap_or(2.0))
            .collect()
    }

    /// Canonical text form: one entry per line in file order, values and
    /// units exactly as declared.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let _ = write!(out, "{} = {}", e.key, e.value);
            if let Some(u) = &e.unit {
                let _ = write!(out, " {u}");
            }
            out.push('\n');
        }
        out
    }

    /// Replace or append an entry and re-validate. Used for command-line overrides.
    pub fn with_override(&self, key: &str, literal: &str) -> Result<Self, ConfigError> {
        let mut text = String::new();
        let mut replaced = false;
        for e in &self.entries {
            if e.key == key {
                let _ = writeln!(text, "{key} = {literal}");
                replaced = true;
            } else {
                let _ = write!(text, "{} = {}", e.key, e.value);
                if let Some(u) = &e.unit {
                    let _ = write!(text, " {u}");
                }
                text.push('\n');
            }
        }
        if !replaced {
            let _ = writeln!(text, "{key} = {literal}");
        }
        Self::parse(&text)
    }

    pub fn rest_strain(&self) -> Strain {
        self.model.rest_strain
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_quantity_is_converted() {
        let cfg = ScenarioConfig::parse("E = \"10 kPa\"\n").unwrap();
        assert_eq!(cfg.model.youngs_modulus, 10_000.0);
        assert_eq!(cfg.entries[0].unit.as_deref(), Some("kPa"));
    }

    #[test]
    fn nested_arrays_with_units() {
        let cfg = ScenarioConfig::parse("targets = [[12,14],[16,6],[2,-2]] cm").unwrap();
        assert_eq!(
            cfg.targets,
            vec![
                Point::new(0.12, 0.14),
                Point::new(0.16, 0.06),
                Point::new(0.02, -0.02)
            ]
        );
    }

    #[test]
    fn rational_literals() {
        let cfg = ScenarioConfig::parse("G = 40/9 kPa").unwrap();
        assert_eq!(cfg.model.shear_modulus, 40.0 / 9.0 * 1000.0);
    }

    #[test]
    fn diagnostics_carry_line_and_key() {
        let err = ScenarioConfig::parse("# header\n\nL0 = 20 kPa\n").unwrap_err();
        assert_eq!(err.line, Some(3));
        assert_eq!(err.key.as_deref(), Some("L0"));
        assert!(err.message.contains("unit mismatch"), "{err}");

        let err = ScenarioConfig::parse("bogus = 1").unwrap_err();
        assert!(err.to_string().contains("unknown key"));

        let err = ScenarioConfig::parse("targets = [] cm").unwrap_err();
        assert!(err.to_string().contains("empty task list"));

        let err = ScenarioConfig::parse("L0 = 20").unwrap_err();
        assert!(err.to_string().contains("missing unit"));

        let err = ScenarioConfig::parse("tip_radius = 5 cm").unwrap_err();
        assert_eq!(err.key.as_deref(), Some("rod"));

        let err = ScenarioConfig::parse("L0 = 20 cm\nL0 = 30 cm").unwrap_err();
        assert!(err.to_string().contains("duplicate"));

        let err = ScenarioConfig::parse("targets = [[1,2,3]] cm").unwrap_err();
        assert!(err.to_string().contains("expected 2 values"));

        let err = ScenarioConfig::parse("n_elements = 2.5").unwrap_err();
        assert!(err.to_string().contains("integer"));
    }

    #[test]
    fn comments_and_strings() {
        let cfg = ScenarioConfig::parse(
            "name = \"demo # not a comment\" # comment\nactivation_file = \"a b.csv\"",
        )
        .unwrap();
        assert_eq!(cfg.name, "demo # not a comment");
        assert_eq!(
            cfg.simulation.activation_file,
            Some(PathBuf::from("a b.csv"))
        );
    }

    #[test]
    fn dump_round_trips() {
        let text = "name = demo\nE = \"10 kPa\"\nG = 40/9 kPa\ntargets = [[12, 14], [16, 6]] cm\ndurations = [1500, 2000] ms\n\
                    object_center = [12, 12] cm\nobject_radius = 2 cm\ntip_weight = 1e5 1/m^2\nrest_stretch = 1\n";
        let a = ScenarioConfig::parse(text).unwrap();
        let b = ScenarioConfig::parse(&a.dump()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dump(), b.dump());
        assert!(a.dump().contains("E = 10 kPa\n"));
        assert!(a.dump().contains("G = 40/9 kPa\n"));
    }

    #[test]
    fn grasp_defaults_window_to_distal_arm() {
        let cfg =
            ScenarioConfig::parse("object_center = [12, 12] cm\nobject_radius = 2 cm").unwrap();
        let g = cfg.grasp.unwrap();
        assert_eq!(g.window, (0.4 * 0.2, 0.2));
        assert_eq!(g.object.center, Point::new(0.12, 0.12));
        assert!(ScenarioConfig::parse("object_radius = 2 cm").is_err());
    }

    #[test]
    fn overrides_replace_entries() {
        let cfg = ScenarioConfig::parse("max_iters = 10\ndt = 10 us").unwrap();
        let cfg = cfg.with_override("max_iters", "5").unwrap();
        assert_eq!(cfg.optimizer.max_iters, 5);
        assert_eq!(cfg.simulation.dt, 1e-5);
        let cfg = cfg.with_override("dt", "2e-5 s").unwrap();
        assert_eq!(cfg.simulation.dt, 2e-5);
    }

    #[test]
    fn defaults_match_the_reference_arm() {
        let cfg = ScenarioConfig::parse("").unwrap();
        assert_eq!(cfg.model, RodModel::default());
        assert_eq!(cfg.obstacle_penalty, DEFAULT_OBSTACLE_PENALTY);
        assert_eq!(cfg.waypoint_durations(), Vec::<f64>::new());
    }
}
