//! Configuration ingestion: a single JSON file with dotted-path overrides,
//! validated against the module contracts, with every default documented in
//! one place and an effective-config echo for reproducible runs.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use fracsurf_core::cifs::{Germ, ParameterMap, ScaleField, ScaleKind};
use fracsurf_core::partition::{Axis, AxisPartition, KnotGenerator, Partition};

/// Configuration failure; always maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: &str, message: impl Into<String>) -> Self {
        Self { path: path.to_string(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "config error: {}", self.message)
        } else {
            write!(f, "config error at `{}`: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSpec {
    pub ratio: f64,
    pub prefix: Option<Vec<f64>>,
    pub truncation: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScaleSpec {
    Constant { value: f64 },
    Affine { coeffs: [f64; 3] },
    CellTable { rows: u32, cols: u32, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum GermSpec {
    Constant { value: f64 },
    SinProduct { amplitude: f64, freq_x: f64, freq_y: f64, phase_x: f64, phase_y: f64 },
    Polynomial { terms: Vec<(u32, u32, f64)> },
    Tabulated { nx: u32, ny: u32, values: Vec<f64> },
    KnotVanishing { amplitude: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapSpec {
    Identity,
    CornerBilinear,
    Blend { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSpec {
    pub lattice: u32,
    pub tol: f64,
    pub max_iter: u32,
    pub boundary_limit_index: Option<(u32, u32)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttractorModeSpec {
    Chaos,
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightingSpec {
    Uniform,
    CellArea,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttractorSpec {
    pub mode: AttractorModeSpec,
    pub budget: u32,
    pub seed: u64,
    pub schedule: Vec<(u32, u32)>,
    pub weighting: WeightingSpec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditSpec {
    pub lattice: u32,
    pub k_lattice: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub formats: Vec<String>,
}

/// Fully validated configuration with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolkitConfig {
    pub domain: (f64, f64, f64, f64),
    pub x_partition: PartitionSpec,
    pub y_partition: PartitionSpec,
    pub scale: ScaleSpec,
    pub germ: GermSpec,
    pub parameter_map: MapSpec,
    pub solve: SolveSpec,
    pub attractor: AttractorSpec,
    pub audit: AuditSpec,
    pub output: OutputSpec,
}

// ---------------------------------------------------------------------------
// JSON walking helpers
// ---------------------------------------------------------------------------

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn as_object<'v>(v: &'v Value, path: &str) -> CResult<&'v Map<String, Value>> {
    v.as_object().ok_or_else(|| ConfigError::new(path, "expected an object"))
}

fn reject_unknown(map: &Map<String, Value>, allowed: &[&str], path: &str) -> CResult<()> {
    let allowed: BTreeSet<&str> = allowed.iter().copied().collect();
    for key in map.keys() {
        if !allowed.contains(key.as_str()) {
            return Err(ConfigError::new(&join(path, key), "unknown key"));
        }
    }
    Ok(())
}

fn get_f64(map: &Map<String, Value>, key: &str, path: &str, default: Option<f64>) -> CResult<f64> {
    match map.get(key) {
        None => default.ok_or_else(|| ConfigError::new(&join(path, key), "missing required number")),
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| ConfigError::new(&join(path, key), "expected a finite number")),
    }
}

fn get_u32(map: &Map<String, Value>, key: &str, path: &str, default: Option<u32>) -> CResult<u32> {
    match map.get(key) {
        None => default.ok_or_else(|| ConfigError::new(&join(path, key), "missing required integer")),
        Some(v) => v
            .as_u64()
            .and_then(|x| u32::try_from(x).ok())
            .ok_or_else(|| ConfigError::new(&join(path, key), "expected a small nonnegative integer")),
    }
}

fn get_str<'v>(
    map: &'v Map<String, Value>,
    key: &str,
    path: &str,
    default: Option<&'static str>,
) -> CResult<&'v str> {
    match map.get(key) {
        None => default.ok_or_else(|| ConfigError::new(&join(path, key), "missing required string")),
        Some(v) => v.as_str().ok_or_else(|| ConfigError::new(&join(path, key), "expected a string")),
    }
}

fn f64_list(v: &Value, path: &str) -> CResult<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| ConfigError::new(path, "expected an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(k, x)| {
            x.as_f64()
                .filter(|y| y.is_finite())
                .ok_or_else(|| ConfigError::new(&format!("{path}[{k}]"), "expected a finite number"))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Section parsers
// ---------------------------------------------------------------------------

fn parse_domain(v: &Value, path: &str) -> CResult<(f64, f64, f64, f64)> {
    let map = as_object(v, path)?;
    reject_unknown(map, &["a", "b", "c", "d"], path)?;
    let a = get_f64(map, "a", path, None)?;
    let b = get_f64(map, "b", path, None)?;
    let c = get_f64(map, "c", path, None)?;
    let d = get_f64(map, "d", path, None)?;
    if !(b > a) {
        return Err(ConfigError::new(&join(path, "b"), "domain needs b > a"));
    }
    if !(d > c) {
        return Err(ConfigError::new(&join(path, "d"), "domain needs d > c"));
    }
    Ok((a, b, c, d))
}

fn parse_partition(v: &Value, path: &str) -> CResult<PartitionSpec> {
    let map = as_object(v, path)?;
    reject_unknown(map, &["kind", "ratio", "prefix", "truncation"], path)?;
    let kind = get_str(map, "kind", path, Some("geometric"))?;
    if kind != "geometric" {
        return Err(ConfigError::new(
            &join(path, "kind"),
            "unsupported partition kind (expected \"geometric\")",
        ));
    }
    let ratio = get_f64(map, "ratio", path, Some(0.5))?;
    let truncation = get_u32(map, "truncation", path, Some(12))?;
    let prefix = match map.get("prefix") {
        None | Some(Value::Null) => None,
        Some(v) => Some(f64_list(v, &join(path, "prefix"))?),
    };
    Ok(PartitionSpec { ratio, prefix, truncation })
}

fn parse_scale(v: &Value, path: &str) -> CResult<ScaleSpec> {
    let map = as_object(v, path)?;
    reject_unknown(map, &["kind", "value", "coeffs", "rows", "cols", "values"], path)?;
    match get_str(map, "kind", path, Some("constant"))? {
        "constant" => Ok(ScaleSpec::Constant { value: get_f64(map, "value", path, Some(0.3))? }),
        "affine" => {
            let coeffs = f64_list(
                map.get("coeffs")
                    .ok_or_else(|| ConfigError::new(&join(path, "coeffs"), "missing coefficients"))?,
                &join(path, "coeffs"),
            )?;
            if coeffs.len() != 3 {
                return Err(ConfigError::new(&join(path, "coeffs"), "expected [c0, cx, cy]"));
            }
            Ok(ScaleSpec::Affine { coeffs: [coeffs[0], coeffs[1], coeffs[2]] })
        }
        "cell_table" => {
            let rows = get_u32(map, "rows", path, None)?;
            let cols = get_u32(map, "cols", path, None)?;
            let values = f64_list(
                map.get("values")
                    .ok_or_else(|| ConfigError::new(&join(path, "values"), "missing values"))?,
                &join(path, "values"),
            )?;
            Ok(ScaleSpec::CellTable { rows, cols, values })
        }
        other => Err(ConfigError::new(&join(path, "kind"), format!("unknown scale kind `{other}`"))),
    }
}

fn parse_germ(v: &Value, path: &str) -> CResult<GermSpec> {
    let map = as_object(v, path)?;
    reject_unknown(
        map,
        &["kind", "value", "amplitude", "freq_x", "freq_y", "phase_x", "phase_y", "terms", "nx", "ny", "values"],
        path,
    )?;
    match get_str(map, "kind", path, None)? {
        "constant" => Ok(GermSpec::Constant { value: get_f64(map, "value", path, None)? }),
        "sin_product" => Ok(GermSpec::SinProduct {
            amplitude: get_f64(map, "amplitude", path, Some(1.0))?,
            freq_x: get_f64(map, "freq_x", path, Some(std::f64::consts::PI))?,
            freq_y: get_f64(map, "freq_y", path, Some(std::f64::consts::PI))?,
            phase_x: get_f64(map, "phase_x", path, Some(0.0))?,
            phase_y: get_f64(map, "phase_y", path, Some(0.0))?,
        }),
        "polynomial" => {
            let terms_path = join(path, "terms");
            let arr = map
                .get("terms")
                .and_then(Value::as_array)
                .ok_or_else(|| ConfigError::new(&terms_path, "expected an array of [p, q, coeff]"))?;
            let mut terms = Vec::with_capacity(arr.len());
            for (k, t) in arr.iter().enumerate() {
                let tp = format!("{terms_path}[{k}]");
                let triple = t.as_array().ok_or_else(|| ConfigError::new(&tp, "expected [p, q, coeff]"))?;
                if triple.len() != 3 {
                    return Err(ConfigError::new(&tp, "expected [p, q, coeff]"));
                }
                let p = triple[0]
                    .as_u64()
                    .and_then(|x| u32::try_from(x).ok())
                    .ok_or_else(|| ConfigError::new(&tp, "power must be a small nonnegative integer"))?;
                let q = triple[1]
                    .as_u64()
                    .and_then(|x| u32::try_from(x).ok())
                    .ok_or_else(|| ConfigError::new(&tp, "power must be a small nonnegative integer"))?;
                let c = triple[2]
                    .as_f64()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| ConfigError::new(&tp, "coefficient must be a finite number"))?;
                terms.push((p, q, c));
            }
            Ok(GermSpec::Polynomial { terms })
        }
        "tabulated" => Ok(GermSpec::Tabulated {
            nx: get_u32(map, "nx", path, None)?,
            ny: get_u32(map, "ny", path, None)?,
            values: f64_list(
                map.get("values")
                    .ok_or_else(|| ConfigError::new(&join(path, "values"), "missing values"))?,
                &join(path, "values"),
            )?,
        }),
        "knot_vanishing" => {
            Ok(GermSpec::KnotVanishing { amplitude: get_f64(map, "amplitude", path, Some(1.0))? })
        }
        other => Err(ConfigError::new(&join(path, "kind"), format!("unknown germ kind `{other}`"))),
    }
}

fn parse_map(v: &Value, path: &str) -> CResult<MapSpec> {
    let map = as_object(v, path)?;
    reject_unknown(map, &["kind", "lambda"], path)?;
    match get_str(map, "kind", path, Some("corner_bilinear"))? {
        "identity" => Ok(MapSpec::Identity),
        "corner_bilinear" => Ok(MapSpec::CornerBilinear),
        "blend" => {
            let lambda = get_f64(map, "lambda", path, None)?;
            if !(0.0..=1.0).contains(&lambda) {
                return Err(ConfigError::new(&join(path, "lambda"), "lambda must lie in [0, 1]"));
            }
            Ok(MapSpec::Blend { lambda })
        }
        other => Err(ConfigError::new(&join(path, "kind"), format!("unknown map kind `{other}`"))),
    }
}

fn parse_solve(v: &Value, path: &str) -> CResult<SolveSpec> {
    let map = as_object(v, path)?;
    reject_unknown(map, &["lattice", "tol", "max_iter", "boundary_limit_index"], path)?;
    let lattice = get_u32(map, "lattice", path, Some(257))?;
    let tol = get_f64(map, "tol", path, Some(1e-10))?;
    let max_iter = get_u32(map, "max_iter", path, Some(200))?;
    if lattice < 2 {
        return Err(ConfigError::new(&join(path, "lattice"), "lattice needs at least 2 points"));
    }
    if !(tol > 0.0) {
        return Err(ConfigError::new(&join(path, "tol"), "tol must be positive"));
    }
    if max_iter == 0 {
        return Err(ConfigError::new(&join(path, "max_iter"), "max_iter must be at least 1"));
    }
    let boundary_limit_index = match map.get("boundary_limit_index") {
        None | Some(Value::Null) => None,
        Some(v) => {
            let p2 = join(path, "boundary_limit_index");
            let pair = v.as_array().ok_or_else(|| ConfigError::new(&p2, "expected [i, j]"))?;
            if pair.len() != 2 {
                return Err(ConfigError::new(&p2, "expected [i, j]"));
            }
            let i = pair[0]
                .as_u64()
                .and_then(|x| u32::try_from(x).ok())
                .filter(|&x| x >= 1)
                .ok_or_else(|| ConfigError::new(&p2, "indices must be positive integers"))?;
            let j = pair[1]
                .as_u64()
                .and_then(|x| u32::try_from(x).ok())
                .filter(|&x| x >= 1)
                .ok_or_else(|| ConfigError::new(&p2, "indices must be positive integers"))?;
            Some((i, j))
        }
    };
    Ok(SolveSpec { lattice, tol, max_iter, boundary_limit_index })
}

fn parse_attractor(v: &Value, path: &str) -> CResult<AttractorSpec> {
    let map = as_object(v, path)?;
    reject_unknown(map, &["mode", "budget", "seed", "schedule", "weighting"], path)?;
    let mode = match get_str(map, "mode", path, Some("chaos"))? {
        "chaos" => AttractorModeSpec::Chaos,
        "deterministic" => AttractorModeSpec::Deterministic,
        other => {
            return Err(ConfigError::new(&join(path, "mode"), format!("unknown attractor mode `{other}`")))
        }
    };
    let budget = get_u32(map, "budget", path, Some(60_000))?;
    if budget < 2 {
        return Err(ConfigError::new(&join(path, "budget"), "budget must be at least 2"));
    }
    let seed = match map.get("seed") {
        None => 20260809,
        Some(v) => v
            .as_u64()
            .ok_or_else(|| ConfigError::new(&join(path, "seed"), "expected a nonnegative integer"))?,
    };
    let weighting = match get_str(map, "weighting", path, Some("uniform"))? {
        "uniform" => WeightingSpec::Uniform,
        "cell_area" => WeightingSpec::CellArea,
        other => {
            return Err(ConfigError::new(&join(path, "weighting"), format!("unknown weighting `{other}`")))
        }
    };
    let schedule = match map.get("schedule") {
        None => vec![(2, 2), (4, 4), (8, 8), (12, 12)],
        Some(v) => {
            let sp = join(path, "schedule");
            let arr = v.as_array().ok_or_else(|| ConfigError::new(&sp, "expected an array of [m, n]"))?;
            if arr.is_empty() {
                return Err(ConfigError::new(&sp, "schedule must not be empty"));
            }
            let mut schedule = Vec::with_capacity(arr.len());
            for (k, e) in arr.iter().enumerate() {
                let ep = format!("{sp}[{k}]");
                let pair = e.as_array().ok_or_else(|| ConfigError::new(&ep, "expected [m, n]"))?;
                if pair.len() != 2 {
                    return Err(ConfigError::new(&ep, "expected [m, n]"));
                }
                let m = pair[0]
                    .as_u64()
                    .and_then(|x| u32::try_from(x).ok())
                    .filter(|&x| x >= 1)
                    .ok_or_else(|| ConfigError::new(&ep, "entries must be positive integers"))?;
                let n = pair[1]
                    .as_u64()
                    .and_then(|x| u32::try_from(x).ok())
                    .filter(|&x| x >= 1)
                    .ok_or_else(|| ConfigError::new(&ep, "entries must be positive integers"))?;
                schedule.push((m, n));
            }
            schedule
        }
    };
    Ok(AttractorSpec { mode, budget, seed, schedule, weighting })
}

fn parse_audit(v: &Value, path: &str) -> CResult<AuditSpec> {
    let map = as_object(v, path)?;
    reject_unknown(map, &["lattice", "k_lattice"], path)?;
    let lattice = get_u32(map, "lattice", path, Some(513))?;
    let k_lattice = get_u32(map, "k_lattice", path, Some(512))?;
    if lattice < 2 || k_lattice < 2 {
        return Err(ConfigError::new(path, "audit lattices need at least 2 points"));
    }
    Ok(AuditSpec { lattice, k_lattice })
}

fn parse_output(v: &Value, path: &str) -> CResult<OutputSpec> {
    let map = as_object(v, path)?;
    reject_unknown(map, &["directory", "formats"], path)?;
    let directory = PathBuf::from(get_str(map, "directory", path, Some("out"))?);
    let formats = match map.get("formats") {
        None => vec!["csv".to_string(), "pgm".to_string()],
        Some(v) => {
            let fp = join(path, "formats");
            let arr = v.as_array().ok_or_else(|| ConfigError::new(&fp, "expected an array of strings"))?;
            let mut formats = Vec::with_capacity(arr.len());
            for (k, e) in arr.iter().enumerate() {
                let s = e
                    .as_str()
                    .ok_or_else(|| ConfigError::new(&format!("{fp}[{k}]"), "expected a string"))?;
                if s != "csv" && s != "pgm" {
                    return Err(ConfigError::new(
                        &format!("{fp}[{k}]"),
                        format!("unknown format `{s}` (supported: csv, pgm)"),
                    ));
                }
                formats.push(s.to_string());
            }
            formats
        }
    };
    Ok(OutputSpec { directory, formats })
}

// ---------------------------------------------------------------------------
// Top-level load, overrides, echo
// ---------------------------------------------------------------------------

/// Applies one `key.path=value` override to the raw JSON tree. The value is
/// parsed as JSON when possible, otherwise taken as a string.
pub fn apply_override(root: &mut Value, spec: &str) -> CResult<()> {
    let (key_path, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::new("", format!("override `{spec}` is not KEY=VALUE")))?;
    let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cursor = root;
    let segments: Vec<&str> = key_path.split('.').collect();
    for (k, seg) in segments.iter().enumerate() {
        if seg.is_empty() {
            return Err(ConfigError::new(key_path, "empty key segment in override"));
        }
        let map = cursor
            .as_object_mut()
            .ok_or_else(|| ConfigError::new(&segments[..k].join("."), "override path crosses a non-object"))?;
        if k + 1 == segments.len() {
            map.insert(seg.to_string(), value);
            return Ok(());
        }
        cursor = map.entry(seg.to_string()).or_insert_with(|| json!({}));
    }
    unreachable!("override paths have at least one segment");
}

fn validate(root: &Value) -> CResult<ToolkitConfig> {
    let map = as_object(root, "")?;
    reject_unknown(
        map,
        &["domain", "x_partition", "y_partition", "scale", "germ", "parameter_map", "solve", "attractor", "audit", "output"],
        "",
    )?;
    let domain = parse_domain(
        map.get("domain").ok_or_else(|| ConfigError::new("domain", "missing required section"))?,
        "domain",
    )?;
    let empty = json!({});
    let x_partition = parse_partition(map.get("x_partition").unwrap_or(&empty), "x_partition")?;
    let y_partition = parse_partition(map.get("y_partition").unwrap_or(&empty), "y_partition")?;
    let scale = parse_scale(map.get("scale").unwrap_or(&empty), "scale")?;
    let germ = parse_germ(
        map.get("germ").ok_or_else(|| ConfigError::new("germ", "missing required section"))?,
        "germ",
    )?;
    let parameter_map = parse_map(map.get("parameter_map").unwrap_or(&empty), "parameter_map")?;
    let solve = parse_solve(map.get("solve").unwrap_or(&empty), "solve")?;
    let attractor = parse_attractor(map.get("attractor").unwrap_or(&empty), "attractor")?;
    let audit = parse_audit(map.get("audit").unwrap_or(&empty), "audit")?;
    let output = parse_output(map.get("output").unwrap_or(&empty), "output")?;

    let cfg = ToolkitConfig {
        domain,
        x_partition,
        y_partition,
        scale,
        germ,
        parameter_map,
        solve,
        attractor,
        audit,
        output,
    };

    // Semantic checks that need the assembled pieces: build the partition and
    // certify the scale bounds now so bad values fail at load time.
    let partition = cfg.build_partition().map_err(|e| ConfigError::new("x_partition", e.to_string()))?;
    ScaleField::new(cfg.scale_kind(), &partition)
        .map_err(|e| ConfigError::new("scale", e.to_string()))?;
    for (k, &(m, n)) in cfg.attractor.schedule.iter().enumerate() {
        if m > cfg.x_partition.truncation || n > cfg.y_partition.truncation {
            return Err(ConfigError::new(
                &format!("attractor.schedule[{k}]"),
                "schedule entry exceeds the truncation level",
            ));
        }
    }
    if let GermSpec::Tabulated { nx, ny, values } = &cfg.germ {
        if (*nx as usize) * (*ny as usize) != values.len() || *nx < 2 || *ny < 2 {
            return Err(ConfigError::new("germ.values", "tabulated germ needs nx*ny values, nx, ny >= 2"));
        }
    }
    Ok(cfg)
}

/// Loads, overrides, validates; returns the config plus the effective JSON
/// echo (loading the echo reproduces the same effective config).
pub fn load_config(path: &Path, overrides: &[String]) -> CResult<(ToolkitConfig, Value)> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
    let mut root: Value = serde_json::from_str(&text).map_err(|e| {
        ConfigError::new("", format!("parse error at line {}, column {}: {e}", e.line(), e.column()))
    })?;
    for spec in overrides {
        apply_override(&mut root, spec)?;
    }
    if let Ok(seed) = std::env::var("FRACSURF_SEED") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| ConfigError::new("attractor.seed", "FRACSURF_SEED must be a nonnegative integer"))?;
        apply_override(&mut root, &format!("attractor.seed={seed}"))?;
    }
    let cfg = validate(&root)?;
    let echo = cfg.to_effective_json();
    Ok((cfg, echo))
}

impl ToolkitConfig {
    pub fn build_partition(&self) -> fracsurf_core::Result<Partition> {
        let (a, b, c, d) = self.domain;
        let gen_for = |spec: &PartitionSpec| match &spec.prefix {
            None => KnotGenerator::Geometric { ratio: spec.ratio },
            Some(prefix) => {
                KnotGenerator::PrefixGeometric { prefix: prefix.clone(), ratio: spec.ratio }
            }
        };
        let x = AxisPartition::new(Axis::X, a, b, gen_for(&self.x_partition), self.x_partition.truncation)?;
        let y = AxisPartition::new(Axis::Y, c, d, gen_for(&self.y_partition), self.y_partition.truncation)?;
        Ok(Partition::new(x, y))
    }

    pub fn scale_kind(&self) -> ScaleKind {
        match &self.scale {
            ScaleSpec::Constant { value } => ScaleKind::Constant(*value),
            ScaleSpec::Affine { coeffs } => {
                ScaleKind::Affine { c0: coeffs[0], cx: coeffs[1], cy: coeffs[2] }
            }
            ScaleSpec::CellTable { rows, cols, values } => {
                ScaleKind::CellTable { rows: *rows, cols: *cols, values: values.clone() }
            }
        }
    }

    pub fn germ(&self, partition: &Partition) -> Germ {
        match &self.germ {
            GermSpec::Constant { value } => Germ::Constant(*value),
            GermSpec::SinProduct { amplitude, freq_x, freq_y, phase_x, phase_y } => Germ::SinProduct {
                amplitude: *amplitude,
                fx: *freq_x,
                fy: *freq_y,
                px: *phase_x,
                py: *phase_y,
            },
            GermSpec::Polynomial { terms } => Germ::Polynomial { terms: terms.clone() },
            GermSpec::Tabulated { nx, ny, values } => Germ::Tabulated {
                rect: self.domain,
                nx: *nx,
                ny: *ny,
                values: values.clone(),
            },
            GermSpec::KnotVanishing { amplitude } => Germ::KnotVanishing {
                amplitude: *amplitude,
                x_axis: partition.x().clone(),
                y_axis: partition.y().clone(),
            },
        }
    }

    pub fn parameter_map(&self) -> ParameterMap {
        match self.parameter_map {
            MapSpec::Identity => ParameterMap::Identity,
            MapSpec::CornerBilinear => ParameterMap::CornerBilinear,
            MapSpec::Blend { lambda } => ParameterMap::Blend { lambda },
        }
    }

    /// Effective configuration as JSON, defaults included.
    pub fn to_effective_json(&self) -> Value {
        let partition_json = |p: &PartitionSpec| match &p.prefix {
            None => json!({"kind": "geometric", "ratio": p.ratio, "truncation": p.truncation}),
            Some(prefix) => json!({
                "kind": "geometric", "ratio": p.ratio, "prefix": prefix, "truncation": p.truncation
            }),
        };
        let scale_json = match &self.scale {
            ScaleSpec::Constant { value } => json!({"kind": "constant", "value": value}),
            ScaleSpec::Affine { coeffs } => json!({"kind": "affine", "coeffs": coeffs.to_vec()}),
            ScaleSpec::CellTable { rows, cols, values } => {
                json!({"kind": "cell_table", "rows": rows, "cols": cols, "values": values})
            }
        };
        let germ_json = match &self.germ {
            GermSpec::Constant { value } => json!({"kind": "constant", "value": value}),
            GermSpec::SinProduct { amplitude, freq_x, freq_y, phase_x, phase_y } => json!({
                "kind": "sin_product", "amplitude": amplitude,
                "freq_x": freq_x, "freq_y": freq_y, "phase_x": phase_x, "phase_y": phase_y
            }),
            GermSpec::Polynomial { terms } => json!({
                "kind": "polynomial",
                "terms": terms.iter().map(|(p, q, c)| json!([p, q, c])).collect::<Vec<_>>()
            }),
            GermSpec::Tabulated { nx, ny, values } => {
                json!({"kind": "tabulated", "nx": nx, "ny": ny, "values": values})
            }
            GermSpec::KnotVanishing { amplitude } => {
                json!({"kind": "knot_vanishing", "amplitude": amplitude})
            }
        };
        let map_json = match self.parameter_map {
            MapSpec::Identity => json!({"kind": "identity"}),
            MapSpec::CornerBilinear => json!({"kind": "corner_bilinear"}),
            MapSpec::Blend { lambda } => json!({"kind": "blend", "lambda": lambda}),
        };
        let solve_json = match self.solve.boundary_limit_index {
            None => json!({
                "lattice": self.solve.lattice, "tol": self.solve.tol, "max_iter": self.solve.max_iter
            }),
            Some((i, j)) => json!({
                "lattice": self.solve.lattice, "tol": self.solve.tol,
                "max_iter": self.solve.max_iter, "boundary_limit_index": [i, j]
            }),
        };
        json!({
            "domain": {"a": self.domain.0, "b": self.domain.1, "c": self.domain.2, "d": self.domain.3},
            "x_partition": partition_json(&self.x_partition),
            "y_partition": partition_json(&self.y_partition),
            "scale": scale_json,
            "germ": germ_json,
            "parameter_map": map_json,
            "solve": solve_json,
            "attractor": {
                "mode": match self.attractor.mode {
                    AttractorModeSpec::Chaos => "chaos",
                    AttractorModeSpec::Deterministic => "deterministic",
                },
                "budget": self.attractor.budget,
                "seed": self.attractor.seed,
                "schedule": self.attractor.schedule.iter().map(|(m, n)| json!([m, n])).collect::<Vec<_>>(),
                "weighting": match self.attractor.weighting {
                    WeightingSpec::Uniform => "uniform",
                    WeightingSpec::CellArea => "cell_area",
                },
            },
            "audit": {"lattice": self.audit.lattice, "k_lattice": self.audit.k_lattice},
            "output": {
                "directory": self.output.directory.to_string_lossy(),
                "formats": self.output.formats,
            },
        })
    }
}
