//! JSON configuration and plot-ready output.
//!
//! A config file is one JSON object. Parameters come either as a preset
//! (`"h1"`, `"h2"`) with optional overrides, as explicit scaled values, or
//! as a dimensional `raw` block that is rescaled. Each subcommand reads its
//! own optional section:
//!
//! ```json
//! {
//!   "params": { "preset": "h2", "theta": 0.662, "d2": 0.15 },
//!   "normal_form": { "kind": "hopf", "s": 0 },
//!   "simulate": { "t_end": 2000, "initial": { "constant": { "u0": 0.0903, "v0": 0.1233 } } }
//! }
//! ```
//!
//! Errors carry a JSON pointer in URI-fragment form (`#/params/n`).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{rescale, RawParams, ScaledParams};
use crate::normal_form::HSign;
use crate::simulate::{Field, Grid1D, InitialCondition, RunConfig, Thresholds, TimeStep};

type Params = ScaledParams<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    H1,
    H2,
}

impl Preset {
    /// Default θ and d2 fill in whatever the file leaves out.
    pub fn params(self) -> Params {
        match self {
            Preset::H1 => ScaledParams::h1(0.7),
            Preset::H2 => ScaledParams::h2(0.68, 0.4),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<RawParams<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<f64>,
}

impl ParamsSpec {
    pub fn explicit(p: &Params) -> Self {
        ParamsSpec {
            m: Some(p.m),
            n: Some(p.n),
            c: Some(p.c),
            theta: Some(p.theta),
            d1: Some(p.d1),
            d2: Some(p.d2),
            ..ParamsSpec::default()
        }
    }

    /// Preset or rescaled base, then explicit fields on top, then the
    /// admissibility checks.
    pub fn resolve(&self) -> Result<Params> {
        let base = match (self.preset, &self.raw) {
            (Some(_), Some(_)) => {
                return Err(Error::config("#/params", "give either preset or raw, not both"))
            }
            (Some(pr), None) => Some(pr.params()),
            (None, Some(raw)) => Some(rescale(raw)?),
            (None, None) => None,
        };
        let pick = |field: Option<f64>, from: Option<f64>, name: &str| {
            field.or(from).ok_or_else(|| {
                Error::config(format!("#/params/{name}"), "missing field (no preset given)")
            })
        };
        let p = ScaledParams {
            m: pick(self.m, base.map(|b| b.m), "m")?,
            n: pick(self.n, base.map(|b| b.n), "n")?,
            c: pick(self.c, base.map(|b| b.c), "c")?,
            theta: pick(self.theta, base.map(|b| b.theta), "theta")?,
            d1: pick(self.d1, base.map(|b| b.d1), "d1")?,
            d2: pick(self.d2, base.map(|b| b.d2), "d2")?,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Span {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Span {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => vec![],
            1 => vec![self.min],
            n => (0..n)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvesSection {
    #[serde(default = "default_d2_span")]
    pub d2: Span,
    /// θ values at which to sample the dispersion relation.
    #[serde(default)]
    pub dispersion_thetas: Vec<f64>,
    /// Upper end of the `k^2` axis for the dispersion relation.
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_x_samples")]
    pub x_samples: usize,
}

fn default_d2_span() -> Span {
    Span {
        min: 0.0,
        max: 0.5,
        count: 101,
    }
}

fn default_x_max() -> f64 {
    25.0
}

fn default_x_samples() -> usize {
    501
}

impl Default for CurvesSection {
    fn default() -> Self {
        CurvesSection {
            d2: default_d2_span(),
            dispersion_thetas: vec![],
            x_max: default_x_max(),
            x_samples: default_x_samples(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalFormKind {
    Hopf,
    Pitchfork,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalFormSection {
    pub kind: NormalFormKind,
    pub s: u32,
    /// Defaults to `params.d2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<f64>,
    /// Defaults to `params.theta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default)]
    pub sign: HSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    #[serde(default = "default_cells")]
    pub n_cells: usize,
    pub t_end: f64,
    #[serde(default)]
    pub dt: TimeStep<f64>,
    pub initial: InitialCondition<f64>,
    #[serde(default = "default_every")]
    pub output_every: f64,
    #[serde(default)]
    pub thresholds: Thresholds<f64>,
    #[serde(default = "yes")]
    pub reaction: bool,
}

fn default_cells() -> usize {
    128
}

fn default_every() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl SimulateSection {
    pub fn run_config(&self, params: Params) -> Result<RunConfig<f64>> {
        let as_config = |e| match e {
            Error::Precondition(m) => Error::config("#/simulate", m),
            e => e,
        };
        let cfg = RunConfig {
            params,
            grid: Grid1D::new(self.n_cells).map_err(as_config)?,
            t_end: self.t_end,
            dt: self.dt,
            initial: self.initial.clone(),
            output_every: self.output_every,
            thresholds: self.thresholds,
            reaction: self.reaction,
        };
        cfg.validate().map_err(as_config)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub theta: Span,
    pub d2: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproduceSection {
    pub figure: String,
}

/// Config file as written on disk.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curves: Option<CurvesSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal_form: Option<NormalFormSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reproduce: Option<ReproduceSection>,
}

/// Validated request with parameters resolved to scaled values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub params: Option<Params>,
    pub curves: Option<CurvesSection>,
    pub normal_form: Option<NormalFormSection>,
    pub simulate: Option<SimulateSection>,
    pub scan: Option<ScanSection>,
    pub reproduce: Option<ReproduceSection>,
}

impl Config {
    pub fn params(&self) -> Result<Params> {
        self.params
            .ok_or_else(|| Error::config("#/params", "missing section"))
    }

    pub fn to_file(&self) -> ConfigFile {
        ConfigFile {
            params: self.params.as_ref().map(ParamsSpec::explicit),
            curves: self.curves.clone(),
            normal_form: self.normal_form.clone(),
            simulate: self.simulate.clone(),
            scan: self.scan.clone(),
            reproduce: self.reproduce.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        to_json(&self.to_file())
    }
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::from("#");
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => write!(out, "/{index}").unwrap(),
            Segment::Map { key } | Segment::Enum { variant: key } => {
                out.push('/');
                out.push_str(&key.replace('~', "~0").replace('/', "~1"));
            }
            Segment::Unknown => {}
        }
    }
    out
}

/// Sets `dotted.key` inside `root`, creating intermediate objects.
pub fn apply_override(root: &mut Value, key: &str, raw: &str) -> Result<()> {
    let at = format!("#/{}", key.replace('.', "/"));
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::config(at, "empty key in override"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::config(at.clone(), "override path crosses a non-object value"))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("loop returns on the last segment")
}

/// Parses `key=value` strings from the command line.
pub fn split_override(s: &str) -> Result<(&str, &str)> {
    s.split_once('=')
        .ok_or_else(|| Error::config("#", format!("override '{s}' is not key=value")))
}

pub fn parse_config_str(text: &str, overrides: &[(&str, &str)]) -> Result<Config> {
    let mut value: Value = if text.trim().is_empty() {
        return Err(Error::config("#", "empty document; expected a JSON object"));
    } else {
        serde_json::from_str(text)
            .map_err(|e| Error::config("#", format!("malformed JSON: {e}")))?
    };
    if !value.is_object() {
        return Err(Error::config("#", "expected a JSON object"));
    }
    for (k, v) in overrides {
        apply_override(&mut value, k, v)?;
    }
    let file: ConfigFile = serde_path_to_error::deserialize(value).map_err(|e| {
        let at = pointer(e.path());
        Error::config(at, e.into_inner().to_string())
    })?;
    resolve(file)
}

pub fn resolve(file: ConfigFile) -> Result<Config> {
    let params = file.params.as_ref().map(ParamsSpec::resolve).transpose()?;
    if let (Some(p), Some(sim)) = (params, &file.simulate) {
        sim.run_config(p)?;
    }
    Ok(Config {
        params,
        curves: file.curves,
        normal_form: file.normal_form,
        simulate: file.simulate,
        scan: file.scan,
        reproduce: file.reproduce,
    })
}

pub fn parse_config(path: &Path, overrides: &[(&str, &str)]) -> Result<Config> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config("#", format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text, overrides)
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x.into())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

/// `17` significant digits in scientific notation.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => fmt_float(*x),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(s) => s.clone(),
                    Cell::Empty => String::new(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Space-time matrix of one component: first column `t`, then one column
/// per cell center.
pub fn field_table(snapshots: &[Field<f64>], grid: &Grid1D, prey: bool) -> Table {
    let xs = grid.xs::<f64>();
    let mut header = vec!["t".to_string()];
    header.extend(xs.iter().map(|x| format!("x={}", fmt_float(*x))));
    let rows = snapshots
        .iter()
        .map(|f| {
            let data = if prey { &f.u } else { &f.v };
            std::iter::once(Cell::Num(f.t))
                .chain(data.iter().map(|&x| Cell::Num(x)))
                .collect()
        })
        .collect();
    Table { header, rows }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Writes files into one output directory.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(OutDir { root })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn csv(&self, name: &str, table: &Table) -> Result<PathBuf> {
        self.text(name, &table.to_csv())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        self.text(name, &to_json(value))
    }

    pub fn text(&self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, body)?;
        Ok(path)
    }
}
