//! Run configuration: TOML parsing with aggregated validation, unknown-key
//! rejection with nearest-key suggestions, and a canonical echo writer
//! whose output is a parse fixed point.

use std::collections::BTreeMap;
use std::path::Path;

use toml::Value;

use crate::error::{Error, Result};
use crate::oscillator::OscillatorKind;
use crate::qubit::PresetKind;
use crate::schedule::{Schedule, ScheduleKind};

#[derive(Debug, Clone, PartialEq)]
pub struct SheetConfig {
    pub n_nodes: usize,
    pub sheet_length: f64,
    pub b0: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleConfig {
    pub kind: String,
    pub total_time: f64,
    pub dt: f64,
    pub d_final: f64,
    pub snapshot_stride: usize,
    pub points: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FibreKindConfig {
    Qubit,
    Oscillator,
}

impl FibreKindConfig {
    pub fn name(&self) -> &'static str {
        match self {
            FibreKindConfig::Qubit => "qubit",
            FibreKindConfig::Oscillator => "oscillator",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FibreConfig {
    pub kind: FibreKindConfig,
    pub preset: String,
    pub mu: f64,
    pub coupling_length: f64,
    pub initial_state: String,
    pub n_f: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingConfig {
    pub beta: f64,
    pub law: String,
    pub fp_tol: f64,
    pub max_inner: usize,
    pub fp_enabled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericsConfig {
    pub newton_tol: f64,
    pub max_newton: usize,
    pub seed_amplitude: f64,
    pub branch_sign: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub sheet: SheetConfig,
    pub schedule: ScheduleConfig,
    pub fibre: FibreConfig,
    pub coupling: CouplingConfig,
    pub numerics: NumericsConfig,
    pub output: OutputConfig,
}

impl SimConfig {
    /// The schedule object this configuration describes.
    pub fn build_schedule(&self) -> Result<Schedule> {
        let kind = match self.schedule.kind.as_str() {
            "hold" => ScheduleKind::Hold,
            "ramp" => ScheduleKind::Ramp,
            "piecewise" => ScheduleKind::Piecewise(
                self.schedule
                    .points
                    .clone()
                    .expect("validated piecewise schedule has points"),
            ),
            other => {
                return Err(Error::ConfigInvalid(vec![format!(
                    "schedule.kind must be hold, ramp, or piecewise, got {other}"
                )]))
            }
        };
        Schedule::new(
            kind,
            self.schedule.total_time,
            self.schedule.dt,
            self.schedule.d_final,
            self.sheet.sheet_length,
        )
    }
}

// ---------------------------------------------------------------------------
// Parsing.
// ---------------------------------------------------------------------------

fn levenshtein(a: &str, b: &str) -> usize {
    let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn nearest_key<'a>(unknown: &str, known: &[&'a str]) -> &'a str {
    known
        .iter()
        .min_by_key(|k| levenshtein(unknown, k))
        .expect("key sets are never empty")
}

/// One section of the raw TOML, with unknown-key detection.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a toml::value::Table>,
    known: &'static [&'static str],
    issues: &'a mut Vec<String>,
}

impl<'a> Section<'a> {
    fn check_unknown(&mut self) {
        if let Some(table) = self.table {
            for key in table.keys() {
                if !self.known.contains(&key.as_str()) {
                    self.issues.push(format!(
                        "unknown key `{key}` in [{}]; did you mean `{}`?",
                        self.name,
                        nearest_key(key, self.known)
                    ));
                }
            }
        }
    }

    fn raw(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn f64_req(&mut self, key: &str) -> f64 {
        match self.raw(key) {
            Some(Value::Float(f)) => *f,
            Some(Value::Integer(i)) => *i as f64,
            Some(_) => {
                self.issues
                    .push(format!("[{}] {key} must be a number", self.name));
                f64::NAN
            }
            None => {
                self.issues
                    .push(format!("missing required key {key} in [{}]", self.name));
                f64::NAN
            }
        }
    }

    fn f64_opt(&mut self, key: &str, default: f64) -> f64 {
        match self.raw(key) {
            Some(Value::Float(f)) => *f,
            Some(Value::Integer(i)) => *i as f64,
            Some(_) => {
                self.issues
                    .push(format!("[{}] {key} must be a number", self.name));
                f64::NAN
            }
            None => default,
        }
    }

    fn usize_req(&mut self, key: &str) -> usize {
        match self.raw(key) {
            Some(Value::Integer(i)) if *i >= 0 => *i as usize,
            Some(_) => {
                self.issues.push(format!(
                    "[{}] {key} must be a nonnegative integer",
                    self.name
                ));
                0
            }
            None => {
                self.issues
                    .push(format!("missing required key {key} in [{}]", self.name));
                0
            }
        }
    }

    fn usize_opt(&mut self, key: &str, default: usize) -> usize {
        match self.raw(key) {
            Some(Value::Integer(i)) if *i >= 0 => *i as usize,
            Some(_) => {
                self.issues.push(format!(
                    "[{}] {key} must be a nonnegative integer",
                    self.name
                ));
                default
            }
            None => default,
        }
    }

    fn i8_opt(&mut self, key: &str, default: i8) -> i8 {
        match self.raw(key) {
            Some(Value::Integer(i)) => *i as i8,
            Some(_) => {
                self.issues
                    .push(format!("[{}] {key} must be an integer", self.name));
                default
            }
            None => default,
        }
    }

    fn string_req(&mut self, key: &str) -> String {
        match self.raw(key) {
            Some(Value::String(s)) => s.clone(),
            Some(_) => {
                self.issues
                    .push(format!("[{}] {key} must be a string", self.name));
                String::new()
            }
            None => {
                self.issues
                    .push(format!("missing required key {key} in [{}]", self.name));
                String::new()
            }
        }
    }

    fn string_opt(&mut self, key: &str, default: &str) -> String {
        match self.raw(key) {
            Some(Value::String(s)) => s.clone(),
            Some(_) => {
                self.issues
                    .push(format!("[{}] {key} must be a string", self.name));
                default.to_string()
            }
            None => default.to_string(),
        }
    }

    fn bool_opt(&mut self, key: &str, default: bool) -> bool {
        match self.raw(key) {
            Some(Value::Boolean(b)) => *b,
            Some(_) => {
                self.issues
                    .push(format!("[{}] {key} must be a boolean", self.name));
                default
            }
            None => default,
        }
    }

    fn points_opt(&mut self, key: &str) -> Option<Vec<(f64, f64)>> {
        let value = self.raw(key)?;
        let Value::Array(rows) = value else {
            self.issues.push(format!(
                "[{}] {key} must be an array of [t, d] pairs",
                self.name
            ));
            return None;
        };
        let mut out = Vec::with_capacity(rows.len());
        for row in rows {
            let pair = match row {
                Value::Array(pair) if pair.len() == 2 => {
                    let as_f64 = |v: &Value| match v {
                        Value::Float(f) => Some(*f),
                        Value::Integer(i) => Some(*i as f64),
                        _ => None,
                    };
                    match (as_f64(&pair[0]), as_f64(&pair[1])) {
                        (Some(t), Some(d)) => Some((t, d)),
                        _ => None,
                    }
                }
                _ => None,
            };
            match pair {
                Some(p) => out.push(p),
                None => {
                    self.issues.push(format!(
                        "[{}] {key} entries must be numeric [t, d] pairs",
                        self.name
                    ));
                    return None;
                }
            }
        }
        Some(out)
    }
}

const SHEET_KEYS: &[&str] = &["n_nodes", "sheet_length", "B0", "S"];
const SCHEDULE_KEYS: &[&str] = &["kind", "T", "dt", "d_final", "snapshot_stride", "points"];
const FIBRE_KEYS: &[&str] = &["kind", "preset", "mu", "L_c", "initial_state", "N_f"];
const COUPLING_KEYS: &[&str] = &["beta", "law", "fp_tol", "max_inner", "fp_enabled"];
const NUMERICS_KEYS: &[&str] = &["newton_tol", "max_newton", "seed_amplitude", "branch_sign"];
const OUTPUT_KEYS: &[&str] = &["directory", "formats"];
const SECTIONS: &[&str] = &["sheet", "schedule", "fibre", "coupling", "numerics", "output"];

/// Parse and validate a configuration from TOML text. All validation
/// problems are collected and reported together, not just the first.
pub fn parse_config_str(text: &str, origin: &str) -> Result<SimConfig> {
    let root: Value = toml::from_str(text).map_err(|e| Error::ConfigSyntax {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    let Value::Table(root) = root else {
        return Err(Error::ConfigSyntax {
            path: origin.to_string(),
            message: "top level must be a table".into(),
        });
    };

    let mut issues: Vec<String> = Vec::new();
    for key in root.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            issues.push(format!(
                "unknown section [{key}]; did you mean [{}]?",
                nearest_key(key, SECTIONS)
            ));
        }
    }
    let table_of = |name: &str| -> Option<&toml::value::Table> {
        match root.get(name) {
            Some(Value::Table(t)) => Some(t),
            _ => None,
        }
    };
    for name in SECTIONS {
        if !root.contains_key(*name) {
            issues.push(format!("missing section [{name}]"));
        } else if table_of(name).is_none() {
            issues.push(format!("[{name}] must be a table"));
        }
    }

    let mut sheet = Section {
        name: "sheet",
        table: table_of("sheet"),
        known: SHEET_KEYS,
        issues: &mut issues,
    };
    sheet.check_unknown();
    let sheet_cfg = SheetConfig {
        n_nodes: sheet.usize_req("n_nodes"),
        sheet_length: sheet.f64_req("sheet_length"),
        b0: sheet.f64_req("B0"),
        s: sheet.f64_req("S"),
    };

    let mut schedule = Section {
        name: "schedule",
        table: table_of("schedule"),
        known: SCHEDULE_KEYS,
        issues: &mut issues,
    };
    schedule.check_unknown();
    let kind = schedule.string_req("kind");
    let points = schedule.points_opt("points");
    let mut schedule_cfg = ScheduleConfig {
        total_time: schedule.f64_req("T"),
        dt: schedule.f64_req("dt"),
        d_final: if kind == "piecewise" {
            schedule.f64_opt("d_final", f64::NAN)
        } else {
            schedule.f64_req("d_final")
        },
        snapshot_stride: schedule.usize_opt("snapshot_stride", 1),
        kind,
        points,
    };

    let mut fibre = Section {
        name: "fibre",
        table: table_of("fibre"),
        known: FIBRE_KEYS,
        issues: &mut issues,
    };
    fibre.check_unknown();
    let fibre_kind_name = fibre.string_req("kind");
    let fibre_kind = match fibre_kind_name.as_str() {
        "qubit" => FibreKindConfig::Qubit,
        "oscillator" => FibreKindConfig::Oscillator,
        other => {
            if !other.is_empty() {
                fibre.issues.push(format!(
                    "fibre.kind must be `qubit` or `oscillator`, got `{other}`"
                ));
            }
            FibreKindConfig::Qubit
        }
    };
    let default_state = match fibre_kind {
        FibreKindConfig::Qubit => "up",
        FibreKindConfig::Oscillator => "ground",
    };
    let fibre_cfg = FibreConfig {
        kind: fibre_kind,
        preset: fibre.string_req("preset"),
        mu: fibre.f64_req("mu"),
        coupling_length: fibre.f64_opt("L_c", sheet_cfg.sheet_length),
        initial_state: fibre.string_opt("initial_state", default_state),
        n_f: fibre.usize_opt("N_f", 16),
    };

    let mut coupling = Section {
        name: "coupling",
        table: table_of("coupling"),
        known: COUPLING_KEYS,
        issues: &mut issues,
    };
    coupling.check_unknown();
    let coupling_cfg = CouplingConfig {
        beta: coupling.f64_req("beta"),
        law: coupling.string_opt("law", "multiplicative-quadratic"),
        fp_tol: coupling.f64_opt("fp_tol", 1e-8),
        max_inner: coupling.usize_opt("max_inner", 50),
        fp_enabled: coupling.bool_opt("fp_enabled", false),
    };

    let mut numerics = Section {
        name: "numerics",
        table: table_of("numerics"),
        known: NUMERICS_KEYS,
        issues: &mut issues,
    };
    numerics.check_unknown();
    let numerics_cfg = NumericsConfig {
        newton_tol: numerics.f64_opt("newton_tol", 1e-10),
        max_newton: numerics.usize_opt("max_newton", 100),
        seed_amplitude: numerics.f64_opt("seed_amplitude", 0.01),
        branch_sign: numerics.i8_opt("branch_sign", 1),
    };

    let mut output = Section {
        name: "output",
        table: table_of("output"),
        known: OUTPUT_KEYS,
        issues: &mut issues,
    };
    output.check_unknown();
    let formats = match output.raw("formats") {
        Some(Value::Array(items)) => {
            let mut out = Vec::new();
            for item in items {
                match item {
                    Value::String(s) => out.push(s.clone()),
                    _ => output
                        .issues
                        .push("[output] formats entries must be strings".into()),
                }
            }
            out
        }
        Some(_) => {
            output
                .issues
                .push("[output] formats must be an array of strings".into());
            vec!["csv".into()]
        }
        None => vec!["csv".into()],
    };
    let output_cfg = OutputConfig {
        directory: output.string_opt("directory", "out"),
        formats,
    };

    validate_ranges(
        &sheet_cfg,
        &mut schedule_cfg,
        &fibre_cfg,
        &coupling_cfg,
        &numerics_cfg,
        &output_cfg,
        &mut issues,
    );

    if issues.is_empty() {
        Ok(SimConfig {
            sheet: sheet_cfg,
            schedule: schedule_cfg,
            fibre: fibre_cfg,
            coupling: coupling_cfg,
            numerics: numerics_cfg,
            output: output_cfg,
        })
    } else {
        Err(Error::ConfigInvalid(issues))
    }
}

fn validate_ranges(
    sheet: &SheetConfig,
    schedule: &mut ScheduleConfig,
    fibre: &FibreConfig,
    coupling: &CouplingConfig,
    numerics: &NumericsConfig,
    output: &OutputConfig,
    issues: &mut Vec<String>,
) {
    if sheet.n_nodes < 5 || sheet.n_nodes % 2 == 0 {
        issues.push(format!(
            "sheet.n_nodes must be odd and at least 5, got {}",
            sheet.n_nodes
        ));
    }
    for (key, v) in [
        ("sheet.sheet_length", sheet.sheet_length),
        ("sheet.B0", sheet.b0),
        ("sheet.S", sheet.s),
        ("fibre.mu", fibre.mu),
    ] {
        if !(v > 0.0) {
            issues.push(format!("{key} must be positive, got {v}"));
        }
    }
    if !(fibre.coupling_length >= 0.0) {
        issues.push(format!(
            "fibre.L_c must be nonnegative, got {}",
            fibre.coupling_length
        ));
    }

    match schedule.kind.as_str() {
        "hold" | "ramp" => {
            if schedule.points.is_some() {
                issues.push(format!(
                    "schedule.points is only valid for kind = \"piecewise\" (kind is {})",
                    schedule.kind
                ));
            }
        }
        "piecewise" => match &schedule.points {
            None => issues.push("schedule.kind = piecewise requires schedule.points".into()),
            Some(points) => {
                if let Some(&(_, d_last)) = points.last() {
                    if schedule.d_final.is_nan() {
                        schedule.d_final = d_last;
                    } else if (schedule.d_final - d_last).abs() > 1e-12 {
                        issues.push(format!(
                            "schedule.d_final ({}) disagrees with the last piecewise point ({d_last})",
                            schedule.d_final
                        ));
                    }
                }
            }
        },
        "" => {}
        other => issues.push(format!(
            "schedule.kind must be hold, ramp, or piecewise, got `{other}`"
        )),
    }
    if !(schedule.total_time > 0.0) {
        issues.push(format!(
            "schedule.T must be positive, got {}",
            schedule.total_time
        ));
    }
    if !(schedule.dt > 0.0 && schedule.dt <= schedule.total_time) {
        issues.push(format!(
            "schedule.dt must satisfy 0 < dt <= T (dt = {}, T = {})",
            schedule.dt, schedule.total_time
        ));
    }
    if !schedule.d_final.is_nan()
        && !(schedule.d_final > 0.0 && schedule.d_final <= sheet.sheet_length * (1.0 + 1e-12))
    {
        issues.push(format!(
            "schedule.d_final must lie in (0, sheet_length], got {}",
            schedule.d_final
        ));
    }

    match fibre.kind {
        FibreKindConfig::Qubit => {
            if PresetKind::from_name(&fibre.preset).is_none() && !fibre.preset.is_empty() {
                let names: Vec<&str> = PresetKind::ALL.iter().map(|p| p.name()).collect();
                issues.push(format!(
                    "fibre.preset `{}` is not a qubit preset; known: {}",
                    fibre.preset,
                    names.join(", ")
                ));
            }
            if !matches!(
                fibre.initial_state.as_str(),
                "up" | "down" | "plus" | "minus"
            ) {
                issues.push(format!(
                    "fibre.initial_state for the qubit fibre must be up, down, plus, or minus, got `{}`",
                    fibre.initial_state
                ));
            }
        }
        FibreKindConfig::Oscillator => {
            if OscillatorKind::from_name(&fibre.preset).is_none() && !fibre.preset.is_empty() {
                let names: Vec<&str> = OscillatorKind::ALL.iter().map(|p| p.name()).collect();
                issues.push(format!(
                    "fibre.preset `{}` is not an oscillator preset; known: {}",
                    fibre.preset,
                    names.join(", ")
                ));
            }
            if fibre.n_f < 4 {
                issues.push(format!("fibre.N_f must be at least 4, got {}", fibre.n_f));
            }
            let ok = fibre.initial_state == "ground"
                || fibre
                    .initial_state
                    .strip_prefix("fock:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .is_some_and(|k| k < fibre.n_f);
            if !ok {
                issues.push(format!(
                    "fibre.initial_state for the oscillator fibre must be ground or fock:<level below N_f>, got `{}`",
                    fibre.initial_state
                ));
            }
        }
    }

    if !(coupling.beta >= 0.0) {
        issues.push(format!(
            "coupling.beta must be nonnegative, got {}",
            coupling.beta
        ));
    }
    if coupling.law != "multiplicative-quadratic" {
        issues.push(format!(
            "coupling.law must be `multiplicative-quadratic`, got `{}`",
            coupling.law
        ));
    }
    if !(coupling.fp_tol > 0.0) {
        issues.push(format!(
            "coupling.fp_tol must be positive, got {}",
            coupling.fp_tol
        ));
    }
    if coupling.max_inner == 0 {
        issues.push("coupling.max_inner must be at least 1".into());
    }

    if !(numerics.newton_tol > 0.0) {
        issues.push(format!(
            "numerics.newton_tol must be positive, got {}",
            numerics.newton_tol
        ));
    }
    if numerics.max_newton == 0 {
        issues.push("numerics.max_newton must be at least 1".into());
    }
    if !(numerics.seed_amplitude > 0.0) {
        issues.push(format!(
            "numerics.seed_amplitude must be positive, got {}",
            numerics.seed_amplitude
        ));
    }
    if numerics.branch_sign != 1 && numerics.branch_sign != -1 {
        issues.push(format!(
            "numerics.branch_sign must be 1 or -1, got {}",
            numerics.branch_sign
        ));
    }

    if output.formats.is_empty() {
        issues.push("output.formats must list at least one format".into());
    }
    for f in &output.formats {
        if f != "csv" {
            issues.push(format!("output.formats entry `{f}` is not supported (csv)"));
        }
    }
}

/// Parse and validate a configuration file.
pub fn parse_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigRead {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_config_str(&text, &path.display().to_string())
}

// ---------------------------------------------------------------------------
// Canonical echo.
// ---------------------------------------------------------------------------

fn fmt_f64(v: f64) -> String {
    // Debug formatting keeps a decimal point or exponent, which TOML
    // requires for floats, while staying shortest-round-trip.
    format!("{v:?}")
}

/// Serialize a configuration in the canonical key order. Parsing the echo
/// reproduces the configuration exactly, and echoing a parsed echo is the
/// identity on bytes.
pub fn echo_config(cfg: &SimConfig) -> String {
    let mut out = String::new();
    let mut push = |line: String| {
        out.push_str(&line);
        out.push('\n');
    };
    push("[sheet]".into());
    push(format!("n_nodes = {}", cfg.sheet.n_nodes));
    push(format!("sheet_length = {}", fmt_f64(cfg.sheet.sheet_length)));
    push(format!("B0 = {}", fmt_f64(cfg.sheet.b0)));
    push(format!("S = {}", fmt_f64(cfg.sheet.s)));
    push(String::new());
    push("[schedule]".into());
    push(format!("kind = \"{}\"", cfg.schedule.kind));
    push(format!("T = {}", fmt_f64(cfg.schedule.total_time)));
    push(format!("dt = {}", fmt_f64(cfg.schedule.dt)));
    push(format!("d_final = {}", fmt_f64(cfg.schedule.d_final)));
    push(format!("snapshot_stride = {}", cfg.schedule.snapshot_stride));
    if let Some(points) = &cfg.schedule.points {
        let rows: Vec<String> = points
            .iter()
            .map(|(t, d)| format!("[{}, {}]", fmt_f64(*t), fmt_f64(*d)))
            .collect();
        push(format!("points = [{}]", rows.join(", ")));
    }
    push(String::new());
    push("[fibre]".into());
    push(format!("kind = \"{}\"", cfg.fibre.kind.name()));
    push(format!("preset = \"{}\"", cfg.fibre.preset));
    push(format!("mu = {}", fmt_f64(cfg.fibre.mu)));
    push(format!("L_c = {}", fmt_f64(cfg.fibre.coupling_length)));
    push(format!("initial_state = \"{}\"", cfg.fibre.initial_state));
    push(format!("N_f = {}", cfg.fibre.n_f));
    push(String::new());
    push("[coupling]".into());
    push(format!("beta = {}", fmt_f64(cfg.coupling.beta)));
    push(format!("law = \"{}\"", cfg.coupling.law));
    push(format!("fp_tol = {}", fmt_f64(cfg.coupling.fp_tol)));
    push(format!("max_inner = {}", cfg.coupling.max_inner));
    push(format!("fp_enabled = {}", cfg.coupling.fp_enabled));
    push(String::new());
    push("[numerics]".into());
    push(format!("newton_tol = {}", fmt_f64(cfg.numerics.newton_tol)));
    push(format!("max_newton = {}", cfg.numerics.max_newton));
    push(format!(
        "seed_amplitude = {}",
        fmt_f64(cfg.numerics.seed_amplitude)
    ));
    push(format!("branch_sign = {}", cfg.numerics.branch_sign));
    push(String::new());
    push("[output]".into());
    push(format!("directory = \"{}\"", cfg.output.directory));
    let formats: Vec<String> = cfg
        .output
        .formats
        .iter()
        .map(|f| format!("\"{f}\""))
        .collect();
    push(format!("formats = [{}]", formats.join(", ")));
    out
}

/// Override one numeric/boolean leaf by dotted path (used by the sweep
/// subcommand), e.g. `coupling.beta = 0.5`.
pub fn set_param(cfg: &mut SimConfig, dotted_key: &str, value: &str) -> Result<()> {
    let parse_f64 = |v: &str| -> Result<f64> {
        v.parse::<f64>().map_err(|_| {
            Error::ConfigInvalid(vec![format!(
                "cannot parse `{v}` as a number for {dotted_key}"
            )])
        })
    };
    let parse_usize = |v: &str| -> Result<usize> {
        v.parse::<usize>().map_err(|_| {
            Error::ConfigInvalid(vec![format!(
                "cannot parse `{v}` as an integer for {dotted_key}"
            )])
        })
    };
    match dotted_key {
        "sheet.n_nodes" => cfg.sheet.n_nodes = parse_usize(value)?,
        "sheet.sheet_length" => cfg.sheet.sheet_length = parse_f64(value)?,
        "sheet.B0" => cfg.sheet.b0 = parse_f64(value)?,
        "sheet.S" => cfg.sheet.s = parse_f64(value)?,
        "schedule.T" => cfg.schedule.total_time = parse_f64(value)?,
        "schedule.dt" => cfg.schedule.dt = parse_f64(value)?,
        "schedule.d_final" => cfg.schedule.d_final = parse_f64(value)?,
        "schedule.snapshot_stride" => cfg.schedule.snapshot_stride = parse_usize(value)?,
        "fibre.mu" => cfg.fibre.mu = parse_f64(value)?,
        "fibre.L_c" => cfg.fibre.coupling_length = parse_f64(value)?,
        "fibre.N_f" => cfg.fibre.n_f = parse_usize(value)?,
        "coupling.beta" => cfg.coupling.beta = parse_f64(value)?,
        "coupling.fp_tol" => cfg.coupling.fp_tol = parse_f64(value)?,
        "coupling.max_inner" => cfg.coupling.max_inner = parse_usize(value)?,
        "coupling.fp_enabled" => {
            cfg.coupling.fp_enabled = match value {
                "true" => true,
                "false" => false,
                other => {
                    return Err(Error::ConfigInvalid(vec![format!(
                        "cannot parse `{other}` as a boolean for {dotted_key}"
                    )]))
                }
            }
        }
        "numerics.newton_tol" => cfg.numerics.newton_tol = parse_f64(value)?,
        "numerics.max_newton" => cfg.numerics.max_newton = parse_usize(value)?,
        "numerics.seed_amplitude" => cfg.numerics.seed_amplitude = parse_f64(value)?,
        other => {
            return Err(Error::ConfigInvalid(vec![format!(
                "`{other}` is not a sweepable parameter"
            )]))
        }
    }
    // Re-validate the mutated configuration as a whole.
    let echoed = echo_config(cfg);
    *cfg = parse_config_str(&echoed, "<sweep override>")?;
    Ok(())
}

/// The default desk-scale configuration (decoupled paper-example ramp).
pub fn default_config() -> SimConfig {
    SimConfig {
        sheet: SheetConfig {
            n_nodes: 101,
            sheet_length: 1.0,
            b0: 1.0,
            s: 1000.0,
        },
        schedule: ScheduleConfig {
            kind: "ramp".into(),
            total_time: 5.0,
            dt: 0.05,
            d_final: 0.8,
            snapshot_stride: 10,
            points: None,
        },
        fibre: FibreConfig {
            kind: FibreKindConfig::Qubit,
            preset: "paper-example".into(),
            mu: 1.0,
            coupling_length: 1.0,
            initial_state: "up".into(),
            n_f: 16,
        },
        coupling: CouplingConfig {
            beta: 0.0,
            law: "multiplicative-quadratic".into(),
            fp_tol: 1e-8,
            max_inner: 50,
            fp_enabled: false,
        },
        numerics: NumericsConfig {
            newton_tol: 1e-10,
            max_newton: 100,
            seed_amplitude: 0.01,
            branch_sign: 1,
        },
        output: OutputConfig {
            directory: "out".into(),
            formats: vec!["csv".into()],
        },
    }
}

/// Known dotted keys accepted by [`set_param`], for CLI help.
pub fn sweepable_keys() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("sheet.n_nodes", "node count"),
        ("sheet.sheet_length", "reference length"),
        ("sheet.B0", "base bending stiffness"),
        ("sheet.S", "axial stiffness"),
        ("schedule.T", "total time"),
        ("schedule.dt", "time step"),
        ("schedule.d_final", "final end distance"),
        ("schedule.snapshot_stride", "snapshot stride"),
        ("fibre.mu", "fibre energy scale"),
        ("fibre.L_c", "coupling length"),
        ("fibre.N_f", "Fock truncation"),
        ("coupling.beta", "back-coupling gain"),
        ("coupling.fp_tol", "fixed-point tolerance"),
        ("coupling.max_inner", "fixed-point budget"),
        ("coupling.fp_enabled", "fixed-point switch"),
        ("numerics.newton_tol", "Newton tolerance"),
        ("numerics.max_newton", "Newton budget"),
        ("numerics.seed_amplitude", "buckling seed amplitude"),
    ])
}
