//! Run configuration: a sectioned TOML file with every key optional.
//!
//! Values are resolved in order: built-in defaults, then the file, then
//! environment variables named `PCQC_<SECTION>_<KEY>`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;
use toml::{Table, Value};

pub const ENV_PREFIX: &str = "PCQC_";

/// Where a configuration value came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Env(String),
    Unknown,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Env(name) => write!(f, "environment variable {name}"),
            Origin::Unknown => write!(f, "unknown location"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("{field} ({origin}): expected {expected}, found {found}")]
    Type {
        field: String,
        origin: Origin,
        expected: &'static str,
        found: String,
    },
    #[error("{field} ({origin}): {value} is out of range, {constraint}")]
    Range {
        field: String,
        origin: Origin,
        value: String,
        constraint: &'static str,
    },
    #[error("missing key {field}: {reason}")]
    Missing { field: String, reason: &'static str },
    #[error("{field} ({origin}): {reason}")]
    Invalid {
        field: String,
        origin: Origin,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalSection {
    pub lattice_a: f64,
    pub wavelength: f64,
    pub dipole_mu10: f64,
    pub g0: Option<f64>,
    pub v_a: f64,
    pub v_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CavitySource {
    Gaussian { width_sigma: f64, center: f64, span: f64 },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CavitySection {
    pub source: CavitySource,
    pub samples_per_a: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WaveguideSource {
    Lobed { lobe_period: f64, envelope_sigma: f64 },
    Files(Vec<PathBuf>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveguideSection {
    pub source: WaveguideSource,
    pub zone_starts: Vec<f64>,
    pub zone_length: f64,
    pub zone_area: f64,
    pub samples_per_a: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSection {
    pub target_area_b: f64,
    pub target_area_a: f64,
    pub injection_position: f64,
    /// `None` places the detector where A is when B reaches 31a.
    pub detector_position: Option<f64>,
    pub readout_entry: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputSection {
    pub theta: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DetuningChoice {
    Auto,
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutSection {
    pub detunings: DetuningChoice,
    pub grid_points: usize,
    /// `None` uses four times the zone-averaged Rabi frequency.
    pub half_width: Option<f64>,
    pub sweep_points: usize,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotsSection {
    pub accepted_per_delta: usize,
    pub seed: u64,
    pub detector_efficiency: f64,
    pub emission_loss_per_zone: f64,
    pub workers: Option<usize>,
    pub write_records: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub physical: PhysicalSection,
    pub cavity: CavitySection,
    pub waveguide: WaveguideSection,
    pub calibration: CalibrationSection,
    pub input: InputSection,
    pub readout: ReadoutSection,
    pub shots: ShotsSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            physical: PhysicalSection {
                lattice_a: 2.202e-3,
                wavelength: 5.9e-3,
                dipole_mu10: 2e-26,
                g0: None,
                v_a: 987.0,
                v_b: 767.7,
            },
            cavity: CavitySection {
                source: CavitySource::Gaussian {
                    width_sigma: 2.5,
                    center: 9.0,
                    span: 43.0,
                },
                samples_per_a: 65,
            },
            waveguide: WaveguideSection {
                source: WaveguideSource::Lobed {
                    lobe_period: 2.0,
                    envelope_sigma: 6.0,
                },
                zone_starts: vec![43.0, 61.0],
                zone_length: 18.0,
                zone_area: FRAC_PI_2,
                samples_per_a: 65,
            },
            calibration: CalibrationSection {
                target_area_b: 9.0 * PI / 4.0,
                target_area_a: 7.0 * PI / 4.0,
                injection_position: 18.0,
                detector_position: None,
                readout_entry: 43.0,
            },
            input: InputSection {
                theta: FRAC_PI_4,
                phi: -FRAC_PI_6,
            },
            readout: ReadoutSection {
                detunings: DetuningChoice::Auto,
                grid_points: 33,
                half_width: None,
                sweep_points: 401,
                step: 44e-9,
            },
            shots: ShotsSection {
                accepted_per_delta: 100_000,
                seed: 1,
                detector_efficiency: 1.0,
                emission_loss_per_zone: 0.0,
                workers: None,
                write_records: false,
            },
            output: OutputSection { dir: PathBuf::from("out") },
        }
    }
}

/// A parsed configuration and the unknown keys that were skipped.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

const KNOWN: &[(&str, &[&str])] = &[
    ("physical", &["lattice_a", "wavelength", "dipole_mu10", "g0", "v_a", "v_b"]),
    ("cavity", &["model", "width_sigma", "center", "span", "file", "samples_per_a"]),
    (
        "waveguide",
        &["model", "lobe_period", "envelope_sigma", "files", "zone_starts", "zone_length", "zone_area", "samples_per_a"],
    ),
    (
        "calibration",
        &["target_area_b", "target_area_a", "injection_position", "detector_position", "readout_entry"],
    ),
    ("input", &["theta", "phi"]),
    ("readout", &["deltas", "grid_points", "half_width", "sweep_points", "step"]),
    (
        "shots",
        &["accepted_per_delta", "seed", "detector_efficiency", "emission_loss_per_zone", "workers", "write_records"],
    ),
    ("output", &["dir"]),
];

/// Line of `key = ...` inside `[section]`, 1-based.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim().trim_matches('"') == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn section_line(text: &str, section: &str) -> Option<usize> {
    text.lines()
        .position(|l| l.trim().trim_start_matches('[').trim_end_matches(']').trim() == section && l.trim().starts_with('['))
        .map(|i| i + 1)
}

fn type_name(v: &Value) -> String {
    match v {
        Value::String(s) => format!("string \"{s}\""),
        Value::Integer(i) => format!("integer {i}"),
        Value::Float(x) => format!("float {x}"),
        Value::Boolean(b) => format!("boolean {b}"),
        Value::Datetime(d) => format!("datetime {d}"),
        Value::Array(_) => "array".into(),
        Value::Table(_) => "table".into(),
    }
}

fn parse_env_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Resolved key-value store with origins.
struct Source<'a> {
    text: &'a str,
    table: Table,
    env: BTreeMap<(String, String), (Value, String)>,
}

impl Source<'_> {
    fn get(&self, section: &str, key: &str) -> Option<(Value, Origin)> {
        if let Some((v, name)) = self.env.get(&(section.to_string(), key.to_string())) {
            return Some((v.clone(), Origin::Env(name.clone())));
        }
        let v = self.table.get(section)?.as_table()?.get(key)?.clone();
        let origin = locate(self.text, section, key).map_or(Origin::Unknown, Origin::Line);
        Some((v, origin))
    }

    fn f64(&self, section: &str, key: &str) -> Result<Option<(f64, Origin)>, ConfigError> {
        let Some((v, origin)) = self.get(section, key) else {
            return Ok(None);
        };
        let x = match &v {
            Value::Float(x) => *x,
            Value::Integer(i) => *i as f64,
            other => {
                return Err(ConfigError::Type {
                    field: format!("{section}.{key}"),
                    origin,
                    expected: "number",
                    found: type_name(other),
                })
            }
        };
        Ok(Some((x, origin)))
    }

    fn float(&self, section: &str, key: &str, default: f64, check: Check) -> Result<f64, ConfigError> {
        match self.f64(section, key)? {
            None => Ok(default),
            Some((x, origin)) => check.apply(section, key, x, origin),
        }
    }

    fn opt_float(&self, section: &str, key: &str, check: Check) -> Result<Option<f64>, ConfigError> {
        self.f64(section, key)?
            .map(|(x, origin)| check.apply(section, key, x, origin))
            .transpose()
    }

    fn uint(&self, section: &str, key: &str, default: usize, min: usize) -> Result<usize, ConfigError> {
        let Some((v, origin)) = self.get(section, key) else {
            return Ok(default);
        };
        let field = format!("{section}.{key}");
        match v {
            Value::Integer(i) if i >= min as i64 => Ok(i as usize),
            Value::Integer(i) => Err(ConfigError::Range {
                field,
                origin,
                value: i.to_string(),
                constraint: if min == 0 { "must be non-negative" } else { "must be at least 1" },
            }),
            other => Err(ConfigError::Type {
                field,
                origin,
                expected: "integer",
                found: type_name(&other),
            }),
        }
    }

    fn boolean(&self, section: &str, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(section, key) {
            None => Ok(default),
            Some((Value::Boolean(b), _)) => Ok(b),
            Some((other, origin)) => Err(ConfigError::Type {
                field: format!("{section}.{key}"),
                origin,
                expected: "boolean",
                found: type_name(&other),
            }),
        }
    }

    fn string(&self, section: &str, key: &str) -> Result<Option<(String, Origin)>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some((Value::String(s), origin)) => Ok(Some((s, origin))),
            Some((other, origin)) => Err(ConfigError::Type {
                field: format!("{section}.{key}"),
                origin,
                expected: "string",
                found: type_name(&other),
            }),
        }
    }

    fn array(&self, section: &str, key: &str) -> Result<Option<(Vec<Value>, Origin)>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some((Value::Array(a), origin)) => Ok(Some((a, origin))),
            Some((other, origin)) => Err(ConfigError::Type {
                field: format!("{section}.{key}"),
                origin,
                expected: "array",
                found: type_name(&other),
            }),
        }
    }

    fn float_array(&self, section: &str, key: &str) -> Result<Option<(Vec<f64>, Origin)>, ConfigError> {
        let Some((items, origin)) = self.array(section, key)? else {
            return Ok(None);
        };
        let mut out = Vec::with_capacity(items.len());
        for v in items {
            match v {
                Value::Float(x) if x.is_finite() => out.push(x),
                Value::Integer(i) => out.push(i as f64),
                other => {
                    return Err(ConfigError::Type {
                        field: format!("{section}.{key}"),
                        origin,
                        expected: "array of finite numbers",
                        found: type_name(&other),
                    })
                }
            }
        }
        Ok(Some((out, origin)))
    }
}

#[derive(Clone, Copy)]
enum Check {
    Positive,
    Finite,
    Probability,
}

impl Check {
    fn apply(self, section: &str, key: &str, x: f64, origin: Origin) -> Result<f64, ConfigError> {
        let (ok, constraint) = match self {
            Check::Positive => (x.is_finite() && x > 0.0, "must be positive"),
            Check::Finite => (x.is_finite(), "must be finite"),
            Check::Probability => ((0.0..=1.0).contains(&x), "must lie in [0, 1]"),
        };
        if ok {
            Ok(x)
        } else {
            Err(ConfigError::Range {
                field: format!("{section}.{key}"),
                origin,
                value: x.to_string(),
                constraint,
            })
        }
    }
}

fn env_overrides<I>(vars: I, warnings: &mut Vec<String>) -> BTreeMap<(String, String), (Value, String)>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut out = BTreeMap::new();
    for (name, raw) in vars {
        let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        let lower = rest.to_ascii_lowercase();
        let hit = KNOWN.iter().find_map(|(section, _)| {
            lower
                .strip_prefix(section)
                .and_then(|k| k.strip_prefix('_'))
                .map(|k| (section.to_string(), k.to_string()))
        });
        match hit {
            Some((section, key)) if known_key(&section, &key) => {
                out.insert((section, key), (parse_env_value(&raw), name));
            }
            _ => warnings.push(format!("ignoring unknown environment override {name}")),
        }
    }
    out
}

fn known_key(section: &str, key: &str) -> bool {
    KNOWN
        .iter()
        .any(|(s, keys)| *s == section && keys.contains(&key))
}

fn unknown_keys(text: &str, table: &Table) -> Vec<String> {
    let mut warnings = Vec::new();
    for (section, value) in table {
        let Some(entries) = KNOWN.iter().find(|(s, _)| s == section).map(|(_, k)| *k) else {
            let at = section_line(text, section).map_or(Origin::Unknown, Origin::Line);
            warnings.push(format!("unknown section [{section}] ({at}) ignored"));
            continue;
        };
        let Some(inner) = value.as_table() else {
            warnings.push(format!("top-level key {section} is not a section; ignored"));
            continue;
        };
        for key in inner.keys().filter(|k| !entries.contains(&k.as_str())) {
            let at = locate(text, section, key).map_or(Origin::Unknown, Origin::Line);
            warnings.push(format!("unknown key {section}.{key} ({at}) ignored"));
        }
    }
    warnings
}

fn resolve_path(base: Option<&Path>, p: &str) -> PathBuf {
    let path = PathBuf::from(p);
    match base {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path,
    }
}

/// Parses configuration text. Relative file paths resolve against `base_dir`.
pub fn parse_config_str<I>(text: &str, env: I, base_dir: Option<&Path>) -> Result<Parsed, ConfigError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].lines().count().max(1));
        match line {
            Some(l) => ConfigError::Syntax(format!("line {l}: {}", e.message())),
            None => ConfigError::Syntax(e.message().to_string()),
        }
    })?;
    let mut warnings = unknown_keys(text, &table);
    let env = env_overrides(env, &mut warnings);
    let src = Source { text, table, env };
    let d = RunConfig::default();

    let physical = PhysicalSection {
        lattice_a: src.float("physical", "lattice_a", d.physical.lattice_a, Check::Positive)?,
        wavelength: src.float("physical", "wavelength", d.physical.wavelength, Check::Positive)?,
        dipole_mu10: src.float("physical", "dipole_mu10", d.physical.dipole_mu10, Check::Positive)?,
        g0: src.opt_float("physical", "g0", Check::Positive)?,
        v_a: src.float("physical", "v_a", d.physical.v_a, Check::Positive)?,
        v_b: src.float("physical", "v_b", d.physical.v_b, Check::Positive)?,
    };

    let cavity_model = src.string("cavity", "model")?;
    let cavity_source = match cavity_model.as_ref().map(|(s, o)| (s.as_str(), o.clone())) {
        None | Some(("gaussian", _)) => {
            let CavitySource::Gaussian {
                width_sigma,
                center,
                span,
            } = d.cavity.source
            else {
                unreachable!()
            };
            CavitySource::Gaussian {
                width_sigma: src.float("cavity", "width_sigma", width_sigma, Check::Positive)?,
                center: src.float("cavity", "center", center, Check::Finite)?,
                span: src.float("cavity", "span", span, Check::Positive)?,
            }
        }
        Some(("file", _)) => match src.string("cavity", "file")? {
            Some((p, _)) => CavitySource::File(resolve_path(base_dir, &p)),
            None => {
                return Err(ConfigError::Missing {
                    field: "cavity.file".into(),
                    reason: "required when cavity.model = \"file\"",
                })
            }
        },
        Some((other, origin)) => {
            return Err(ConfigError::Invalid {
                field: "cavity.model".into(),
                origin,
                reason: format!("unknown model \"{other}\" (expected \"gaussian\" or \"file\")"),
            })
        }
    };
    let cavity = CavitySection {
        source: cavity_source,
        samples_per_a: src.uint("cavity", "samples_per_a", d.cavity.samples_per_a, 1)?,
    };

    let zone_starts = match src.float_array("waveguide", "zone_starts")? {
        None => d.waveguide.zone_starts.clone(),
        Some((v, origin)) if v.is_empty() => {
            return Err(ConfigError::Invalid {
                field: "waveguide.zone_starts".into(),
                origin,
                reason: "at least one zone is required".into(),
            })
        }
        Some((v, _)) => v,
    };
    let wg_model = src.string("waveguide", "model")?;
    let wg_source = match wg_model.as_ref().map(|(s, o)| (s.as_str(), o.clone())) {
        None | Some(("lobed", _)) => {
            let WaveguideSource::Lobed {
                lobe_period,
                envelope_sigma,
            } = d.waveguide.source
            else {
                unreachable!()
            };
            WaveguideSource::Lobed {
                lobe_period: src.float("waveguide", "lobe_period", lobe_period, Check::Positive)?,
                envelope_sigma: src.float("waveguide", "envelope_sigma", envelope_sigma, Check::Positive)?,
            }
        }
        Some(("file", _)) => {
            let Some((items, origin)) = src.array("waveguide", "files")? else {
                return Err(ConfigError::Missing {
                    field: "waveguide.files".into(),
                    reason: "required when waveguide.model = \"file\"",
                });
            };
            let mut files = Vec::new();
            for v in items {
                match v {
                    Value::String(s) => files.push(resolve_path(base_dir, &s)),
                    other => {
                        return Err(ConfigError::Type {
                            field: "waveguide.files".into(),
                            origin,
                            expected: "array of strings",
                            found: type_name(&other),
                        })
                    }
                }
            }
            if files.is_empty() {
                return Err(ConfigError::Invalid {
                    field: "waveguide.files".into(),
                    origin,
                    reason: "at least one zone file is required".into(),
                });
            }
            WaveguideSource::Files(files)
        }
        Some((other, origin)) => {
            return Err(ConfigError::Invalid {
                field: "waveguide.model".into(),
                origin,
                reason: format!("unknown model \"{other}\" (expected \"lobed\" or \"file\")"),
            })
        }
    };
    let waveguide = WaveguideSection {
        source: wg_source,
        zone_starts,
        zone_length: src.float("waveguide", "zone_length", d.waveguide.zone_length, Check::Positive)?,
        zone_area: src.float("waveguide", "zone_area", d.waveguide.zone_area, Check::Positive)?,
        samples_per_a: src.uint("waveguide", "samples_per_a", d.waveguide.samples_per_a, 1)?,
    };

    let calibration = CalibrationSection {
        target_area_b: src.float("calibration", "target_area_b", d.calibration.target_area_b, Check::Positive)?,
        target_area_a: src.float("calibration", "target_area_a", d.calibration.target_area_a, Check::Positive)?,
        injection_position: src.float(
            "calibration",
            "injection_position",
            d.calibration.injection_position,
            Check::Positive,
        )?,
        detector_position: src.opt_float("calibration", "detector_position", Check::Positive)?,
        readout_entry: src.float("calibration", "readout_entry", d.calibration.readout_entry, Check::Positive)?,
    };

    let input = InputSection {
        theta: src.float("input", "theta", d.input.theta, Check::Finite)?,
        phi: src.float("input", "phi", d.input.phi, Check::Finite)?,
    };
    if let Some((_, origin)) = src.f64("input", "theta")? {
        if !(0.0..=PI).contains(&input.theta) {
            return Err(ConfigError::Range {
                field: "input.theta".into(),
                origin,
                value: input.theta.to_string(),
                constraint: "must lie in [0, π]",
            });
        }
    }

    let detunings = match src.get("readout", "deltas") {
        None => DetuningChoice::Auto,
        Some((Value::String(s), _)) if s == "auto" => DetuningChoice::Auto,
        Some((Value::Array(_), origin)) => {
            let (v, _) = src.float_array("readout", "deltas")?.expect("present");
            let mut sorted = v.clone();
            sorted.sort_by(f64::total_cmp);
            sorted.dedup();
            if sorted.len() < 4 || sorted.len() != v.len() {
                return Err(ConfigError::Invalid {
                    field: "readout.deltas".into(),
                    origin,
                    reason: format!("need at least 4 distinct detunings, got {v:?}"),
                });
            }
            DetuningChoice::Fixed(v)
        }
        Some((other, origin)) => {
            return Err(ConfigError::Type {
                field: "readout.deltas".into(),
                origin,
                expected: "array of numbers or \"auto\"",
                found: type_name(&other),
            })
        }
    };
    let readout = ReadoutSection {
        detunings,
        grid_points: src.uint("readout", "grid_points", d.readout.grid_points, 4)?,
        half_width: src.opt_float("readout", "half_width", Check::Positive)?,
        sweep_points: src.uint("readout", "sweep_points", d.readout.sweep_points, 2)?,
        step: src.float("readout", "step", d.readout.step, Check::Positive)?,
    };

    let seed = match src.get("shots", "seed") {
        None => d.shots.seed,
        Some((Value::Integer(i), _)) if i >= 0 => i as u64,
        Some((Value::Integer(i), origin)) => {
            return Err(ConfigError::Range {
                field: "shots.seed".into(),
                origin,
                value: i.to_string(),
                constraint: "must be non-negative",
            })
        }
        Some((other, origin)) => {
            return Err(ConfigError::Type {
                field: "shots.seed".into(),
                origin,
                expected: "integer",
                found: type_name(&other),
            })
        }
    };
    let workers = match src.get("shots", "workers") {
        None => None,
        Some(_) => Some(src.uint("shots", "workers", 1, 1)?),
    };
    let shots = ShotsSection {
        accepted_per_delta: src.uint("shots", "accepted_per_delta", d.shots.accepted_per_delta, 1)?,
        seed,
        detector_efficiency: src.float(
            "shots",
            "detector_efficiency",
            d.shots.detector_efficiency,
            Check::Probability,
        )?,
        emission_loss_per_zone: src.float(
            "shots",
            "emission_loss_per_zone",
            d.shots.emission_loss_per_zone,
            Check::Probability,
        )?,
        workers,
        write_records: src.boolean("shots", "write_records", d.shots.write_records)?,
    };

    let output = OutputSection {
        dir: match src.string("output", "dir")? {
            Some((p, _)) => resolve_path(base_dir, &p),
            None => d.output.dir,
        },
    };

    let config = RunConfig {
        physical,
        cavity,
        waveguide,
        calibration,
        input,
        readout,
        shots,
        output,
    };
    check_files(&config)?;
    Ok(Parsed { config, warnings })
}

fn check_files(config: &RunConfig) -> Result<(), ConfigError> {
    let mut files: Vec<(&str, &PathBuf)> = Vec::new();
    if let CavitySource::File(p) = &config.cavity.source {
        files.push(("cavity.file", p));
    }
    if let WaveguideSource::Files(ps) = &config.waveguide.source {
        files.extend(ps.iter().map(|p| ("waveguide.files", p)));
    }
    for (field, p) in files {
        if !p.is_file() {
            return Err(ConfigError::Invalid {
                field: field.into(),
                origin: Origin::Unknown,
                reason: format!("file {} does not exist", p.display()),
            });
        }
    }
    Ok(())
}

/// Reads and parses a configuration file, applying `PCQC_*` environment overrides.
pub fn parse_config(path: &Path) -> Result<Parsed, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text, std::env::vars(), path.parent())
}
