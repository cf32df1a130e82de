use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    TdRun,
    Verify,
    Analyze,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::TdRun => "td-run",
            Subcommand::Verify => "verify",
            Subcommand::Analyze => "analyze",
        }
    }
}

/// Value type of a configuration key.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kind {
    Int,
    Float,
    Bool,
    Text,
    Path,
    /// Comma-separated floats (`inf` allowed).
    Floats,
    /// Comma-separated integers.
    Ints,
    /// A float, or `auto` to defer to the consumer's default.
    AutoFloat,
    Choice(&'static [&'static str]),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(u64),
    Float(f64),
    Bool(bool),
    Text(String),
    Floats(Vec<f64>),
    Ints(Vec<i64>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let float = |x: &f64| {
            if x.is_infinite() {
                "inf".to_string()
            } else {
                format!("{x:?}")
            }
        };
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => f.write_str(&float(v)),
            Value::Bool(v) => write!(f, "{v}"),
            Value::Text(v) => f.write_str(v),
            Value::Floats(v) => f.write_str(&v.iter().map(float).collect::<Vec<_>>().join(",")),
            Value::Ints(v) => f.write_str(&v.iter().map(i64::to_string).collect::<Vec<_>>().join(",")),
        }
    }
}

const SUBCOMMANDS: &[&str] = &["simulate", "td-run", "verify", "analyze"];

/// Every accepted key with its kind and default; `None` marks a required key.
pub const KEYS: &[(&str, Kind, Option<&str>)] = &[
    ("subcommand", Kind::Choice(SUBCOMMANDS), None),
    ("run_id", Kind::Text, Some("run")),
    ("seed", Kind::Int, Some("2024")),
    ("output_dir", Kind::Path, Some("out")),
    ("grid.n", Kind::Int, Some("256")),
    ("grid.period", Kind::Float, Some("6.283185307179586")),
    ("grid.dealias", Kind::Float, Some("0.6666666666666666")),
    // simulate
    ("sim.alpha", Kind::Float, Some("1.0")),
    ("sim.dt", Kind::Float, Some("0.002")),
    ("sim.t_end", Kind::Float, Some("5.0")),
    ("sim.cfl_safety", Kind::Float, Some("0.5")),
    ("sim.advect", Kind::Bool, Some("true")),
    ("sim.initial", Kind::Choice(&["desk", "random", "snapshot"]), Some("desk")),
    ("sim.snapshot_in", Kind::Path, Some("")),
    ("sim.slope", Kind::Float, Some("-2.5")),
    ("sim.p_list", Kind::Floats, Some("2,4,inf")),
    ("sim.monitor_stride", Kind::Int, Some("50")),
    ("sim.snapshot_stride", Kind::Int, Some("500")),
    ("sim.gamma_budget", Kind::Bool, Some("true")),
    ("sim.gamma_p", Kind::Float, Some("4.0")),
    // td-run
    ("td.alpha", Kind::Float, Some("1.0")),
    ("td.dt", Kind::Float, Some("0.005")),
    ("td.t_end", Kind::Float, Some("1.0")),
    ("td.cfl_safety", Kind::Float, Some("0.5")),
    ("td.stride", Kind::Int, Some("1")),
    ("td.dissipation", Kind::Bool, Some("true")),
    ("td.p_list", Kind::Floats, Some("2,4,inf")),
    ("td.initial", Kind::Choice(&["sine", "desk", "random"]), Some("sine")),
    ("td.slope", Kind::Float, Some("-2.0")),
    ("td.velocity", Kind::Choice(&["zero", "shear", "cellular", "random"]), Some("zero")),
    ("td.amplitude", Kind::Float, Some("1.0")),
    ("td.forcing", Kind::Choice(&["zero", "steady", "pulsating"]), Some("zero")),
    ("td.forcing_amplitude", Kind::Float, Some("1.0")),
    ("td.besov_s", Kind::Float, Some("0.5")),
    ("td.besov_r", Kind::Float, Some("2.0")),
    // verify
    (
        "verify.estimate",
        Kind::Choice(&["thm33p1", "thm33p2", "lemma43", "lemma32", "genbernstein", "bernstein"]),
        Some("thm33p1"),
    ),
    ("verify.members", Kind::Int, Some("100")),
    ("verify.n_list", Kind::Ints, Some("64,128")),
    ("verify.slope", Kind::Float, Some("-2.0")),
    ("verify.p", Kind::AutoFloat, Some("auto")),
    ("verify.r", Kind::AutoFloat, Some("auto")),
    ("verify.rho", Kind::Float, Some("2.0")),
    ("verify.eps", Kind::Float, Some("0.5")),
    ("verify.m", Kind::Float, Some("inf")),
    ("verify.p_even", Kind::Int, Some("4")),
    ("verify.shells", Kind::Ints, Some("0,1,2")),
    ("verify.max_drift", Kind::Float, Some("2.0")),
    // analyze
    ("analyze.input", Kind::Path, Some("")),
    ("analyze.p_list", Kind::Floats, Some("2,4,inf")),
    ("analyze.besov_s", Kind::Float, Some("0.0")),
    ("analyze.besov_r", Kind::Float, Some("1.0")),
];

/// A validated configuration: every key of [`KEYS`] resolved to a value.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, Value>,
}

fn schema(key: &str) -> Option<&'static (&'static str, Kind, Option<&'static str>)> {
    KEYS.iter().find(|(k, _, _)| *k == key)
}

fn parse_value(kind: Kind, raw: &str) -> std::result::Result<Value, String> {
    let float = |s: &str| -> std::result::Result<f64, String> {
        let s = s.trim();
        match s.parse::<f64>() {
            Ok(v) if !v.is_nan() => Ok(v),
            _ => Err(format!("expected a number, got '{s}'")),
        }
    };
    match kind {
        Kind::Int => raw
            .parse::<u64>()
            .map(Value::Int)
            .map_err(|_| format!("expected a non-negative integer, got '{raw}'")),
        Kind::Float => float(raw).map(Value::Float),
        Kind::AutoFloat if raw == "auto" => Ok(Value::Text(raw.to_string())),
        Kind::AutoFloat => float(raw)
            .map(Value::Float)
            .map_err(|_| format!("expected a number or auto, got '{raw}'")),
        Kind::Bool => match raw {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(format!("expected true or false, got '{raw}'")),
        },
        Kind::Text | Kind::Path => Ok(Value::Text(raw.to_string())),
        Kind::Floats => raw.split(',').map(float).collect::<std::result::Result<_, _>>().map(Value::Floats),
        Kind::Ints => raw
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<i64>()
                    .map_err(|_| format!("expected an integer, got '{}'", s.trim()))
            })
            .collect::<std::result::Result<_, _>>()
            .map(Value::Ints),
        Kind::Choice(options) => {
            if options.contains(&raw) {
                Ok(Value::Text(raw.to_string()))
            } else {
                Err(format!("expected one of {}, got '{raw}'", options.join("|")))
            }
        }
    }
}

/// Per-key validation beyond the type.
fn check_value(key: &str, value: &Value) -> std::result::Result<(), String> {
    match (key, value) {
        ("grid.n", Value::Int(n)) if !(n.is_power_of_two() && *n >= 8) => {
            Err(format!("n must be a power of two (>= 8), got {n}"))
        }
        ("grid.period", Value::Float(p)) if !(*p > 0.0 && p.is_finite()) => {
            Err(format!("period must be positive, got {p}"))
        }
        ("grid.dealias", Value::Float(f)) if !(*f > 0.0 && *f <= 1.0) => {
            Err(format!("dealias fraction must lie in (0, 1], got {f}"))
        }
        (k, Value::Float(a)) if k.ends_with(".alpha") && !(*a > 0.0 && *a <= 2.0) => {
            Err(format!("alpha must lie in (0, 2], got {a}"))
        }
        (k, Value::Float(v)) if (k.ends_with(".dt") || k.ends_with(".t_end")) && !(*v > 0.0 && v.is_finite()) => {
            Err(format!("{k} must be positive, got {v}"))
        }
        (k, Value::Float(v)) if k.ends_with(".cfl_safety") && !(*v > 0.0 && *v <= 1.0) => {
            Err(format!("cfl_safety must lie in (0, 1], got {v}"))
        }
        (k, Value::Floats(ps)) if k.ends_with(".p_list") => match ps.iter().find(|p| !(**p >= 1.0)) {
            Some(p) => Err(format!("L^p exponents must be >= 1, got {p}")),
            None => Ok(()),
        },
        ("td.stride" | "verify.members", Value::Int(0)) => Err(format!("{key} must be at least 1")),
        _ => Ok(()),
    }
}

/// Parses `key = value` lines (`#` starts a comment). Unknown or repeated
/// keys, bad values and missing required keys are reported with a line
/// number.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &[])
}

fn config_err(line: usize, message: String) -> Error {
    Error::Config { line, message }
}

impl RunConfig {
    /// Applies `key=value` overrides on top of a parsed config. Overrides
    /// are numbered after the file's lines in error reports.
    pub fn with_overrides(text: &str, overrides: &[String]) -> Result<RunConfig> {
        parse_config_with(text, overrides)
    }
}

fn parse_config_with(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut seen: BTreeMap<&'static str, (usize, Value)> = BTreeMap::new();
    let line_count = text.lines().count();
    let mut assign = |line: usize, raw_line: &str, is_override: bool| -> Result<()> {
        let content = match raw_line.find('#') {
            Some(i) => &raw_line[..i],
            None => raw_line,
        }
        .trim();
        if content.is_empty() {
            return Ok(());
        }
        let (key, raw) = content
            .split_once('=')
            .ok_or_else(|| config_err(line, format!("expected 'key = value', got '{content}'")))?;
        let (key, raw) = (key.trim(), raw.trim());
        let &(name, kind, _) =
            schema(key).ok_or_else(|| config_err(line, format!("unknown key '{key}'")))?;
        if !is_override {
            if let Some((first, _)) = seen.get(name) {
                return Err(config_err(line, format!("key '{key}' already set on line {first}")));
            }
        }
        let value = parse_value(kind, raw).map_err(|m| config_err(line, format!("{key}: {m}")))?;
        check_value(name, &value).map_err(|m| config_err(line, m))?;
        seen.insert(name, (line, value));
        Ok(())
    };
    for (i, l) in text.lines().enumerate() {
        assign(i + 1, l, false)?;
    }
    for (i, o) in overrides.iter().enumerate() {
        assign(line_count + i + 1, o, true)?;
    }
    let mut values = BTreeMap::new();
    for &(key, kind, default) in KEYS {
        let v = match (seen.remove(key), default) {
            (Some((_, v)), _) => v,
            (None, Some(d)) => parse_value(kind, d).expect("defaults parse"),
            (None, None) => {
                return Err(config_err(
                    line_count + overrides.len(),
                    format!("missing required key '{key}'"),
                ))
            }
        };
        values.insert(key, v);
    }
    let cfg = RunConfig { values };
    cfg.grid().map_err(|e| config_err(0, e.to_string()))?;
    Ok(cfg)
}

impl RunConfig {
    pub fn value(&self, key: &str) -> &Value {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("'{key}' is not a configuration key"))
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.value(key) {
            Value::Float(v) => *v,
            v => panic!("'{key}' holds {v:?}, not a float"),
        }
    }

    /// `None` for `auto`.
    pub fn auto_float(&self, key: &str) -> Option<f64> {
        match self.value(key) {
            Value::Float(v) => Some(*v),
            Value::Text(t) if t == "auto" => None,
            v => panic!("'{key}' holds {v:?}, not a float or auto"),
        }
    }

    pub fn int(&self, key: &str) -> u64 {
        match self.value(key) {
            Value::Int(v) => *v,
            v => panic!("'{key}' holds {v:?}, not an integer"),
        }
    }

    pub fn usize(&self, key: &str) -> usize {
        self.int(key) as usize
    }

    pub fn boolean(&self, key: &str) -> bool {
        match self.value(key) {
            Value::Bool(v) => *v,
            v => panic!("'{key}' holds {v:?}, not a bool"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.value(key) {
            Value::Text(v) => v,
            v => panic!("'{key}' holds {v:?}, not text"),
        }
    }

    pub fn floats(&self, key: &str) -> &[f64] {
        match self.value(key) {
            Value::Floats(v) => v,
            v => panic!("'{key}' holds {v:?}, not a float list"),
        }
    }

    pub fn ints(&self, key: &str) -> &[i64] {
        match self.value(key) {
            Value::Ints(v) => v,
            v => panic!("'{key}' holds {v:?}, not an integer list"),
        }
    }

    pub fn subcommand(&self) -> Subcommand {
        match self.text("subcommand") {
            "simulate" => Subcommand::Simulate,
            "td-run" => Subcommand::TdRun,
            "verify" => Subcommand::Verify,
            _ => Subcommand::Analyze,
        }
    }

    pub fn seed(&self) -> u64 {
        self.int("seed")
    }

    pub fn run_id(&self) -> &str {
        self.text("run_id")
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.text("output_dir"))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::with_dealias(self.usize("grid.n"), self.float("grid.period"), self.float("grid.dealias"))
    }

    /// Every key with its resolved value, one `key = value` per line, in
    /// schema order. Parsing the echo reproduces this config.
    pub fn resolved(&self) -> String {
        let mut out = String::new();
        for (key, _, _) in KEYS {
            out.push_str(&format!("{key} = {}\n", self.values[key]));
        }
        out
    }
}
