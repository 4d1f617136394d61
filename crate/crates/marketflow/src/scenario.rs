//! Scenario documents.
//!
//! A scenario is a JSON tree:
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "name": "table1",
//!   "scale": { "min": 1, "max": 10 },
//!   "segments": ["segment 1", "segment 2", "segment 3"],
//!   "attributes": ["quality", "price"],
//!   "panel": { "csv": "table1_attributes.csv" },
//!   "initial_sizes": [100, 100, 100],
//!   "new_customers": 20,
//!   "behavior": { "wta": 0.3, "s": 0.2, "k": 0.5, "allocator": "redistribution" },
//!   "integrator": { "method": "euler", "dt": 0.05, "horizon": 6 }
//! }
//! ```
//!
//! Loading happens in four stages, each with its own error class: JSON
//! syntax (line and column), overrides applied to the raw tree, schema
//! (path of the offending field), and domain and panel validation (path of
//! the offending value or cell).

use std::fs;
use std::path::Path;

use marketflow_core::{
    validate_panel, Allocator, AttributePanel, BehaviorParams, DecayScores, DynamicsOptions,
    FitParam, IntegratorConfig, Interpolation, LossKind, Method, ModifierOrder, NewCustomerSeries,
    ParamBound, ParamSpec, RefreshMode, ScalarParam, Scenario, ScoreScale, Violation,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::attributes::load_attribute_csv_path;
use crate::error::{Diagnostic, Error, Result};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub format_version: u64,
    pub name: String,
    pub scale: ScaleDoc,
    pub segments: Vec<String>,
    pub attributes: Vec<String>,
    pub panel: PanelDoc,
    pub initial_sizes: Vec<f64>,
    pub new_customers: NewCustomersDoc,
    #[serde(default)]
    pub behavior: BehaviorDoc,
    pub integrator: IntegratorDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<OptionsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleDoc {
    pub min: f64,
    pub max: f64,
}

/// Either inline tables or a reference to a long-form CSV, resolved
/// relative to the scenario file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PanelDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    /// `[stamp][segment][attribute]`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perf: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imp: Option<ImportanceDoc>,
    #[serde(default)]
    pub interpolation: Interpolation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ImportanceDoc {
    /// `[stamp][segment][attribute]`
    PerSegment(Vec<Vec<Vec<f64>>>),
    /// `[stamp][attribute]`, shared by every segment.
    Market(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NewCustomersDoc {
    Constant(f64),
    Stamped {
        times: Vec<f64>,
        rates: Vec<f64>,
        #[serde(default)]
        interpolation: Interpolation,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BehaviorDoc {
    pub wta: f64,
    pub s: f64,
    pub k: f64,
    pub gamma: f64,
    pub c: f64,
    pub allocator: Allocator,
    pub modifier_order: ModifierOrder,
    pub refresh_mode: RefreshMode,
}

impl Default for BehaviorDoc {
    fn default() -> Self {
        BehaviorDoc::from(&BehaviorParams::default())
    }
}

impl From<&BehaviorParams> for BehaviorDoc {
    fn from(b: &BehaviorParams) -> Self {
        Self {
            wta: b.wta(),
            s: b.stickiness(),
            k: b.decay(),
            gamma: b.gamma(),
            c: b.c(),
            allocator: b.allocator(),
            modifier_order: b.modifier_order(),
            refresh_mode: b.refresh_mode(),
        }
    }
}

impl BehaviorDoc {
    fn get(&self, p: ScalarParam) -> f64 {
        match p {
            ScalarParam::Wta => self.wta,
            ScalarParam::Stickiness => self.s,
            ScalarParam::Decay => self.k,
            ScalarParam::Gamma => self.gamma,
            ScalarParam::C => self.c,
        }
    }

    pub fn to_params(&self) -> Result<BehaviorParams> {
        let mut b = BehaviorParams::default()
            .with_allocator(self.allocator)
            .with_modifier_order(self.modifier_order)
            .with_refresh_mode(self.refresh_mode);
        for p in ScalarParam::ALL {
            let value = self.get(p);
            b = b.with(p, value).map_err(|_| {
                Error::domain(
                    format!("behavior.{}", p.key()),
                    format!("{value} is outside {}", p.domain()),
                )
            })?;
        }
        Ok(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorDoc {
    #[serde(default)]
    pub method: Method,
    pub dt: f64,
    /// Absolute end time.
    pub horizon: f64,
}

impl From<IntegratorDoc> for IntegratorConfig {
    fn from(d: IntegratorDoc) -> Self {
        IntegratorConfig {
            method: d.method,
            dt: d.dt,
            horizon: d.horizon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptionsDoc {
    pub decay_scores: DecayScores,
    pub familiarity_bias: f64,
    pub softmax_temperature: f64,
}

impl Default for OptionsDoc {
    fn default() -> Self {
        let o = DynamicsOptions::default();
        Self {
            decay_scores: o.decay_scores,
            familiarity_bias: o.familiarity_bias,
            softmax_temperature: o.softmax_temperature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossDoc {
    #[default]
    Shares,
    Sizes,
}

impl From<LossDoc> for LossKind {
    fn from(l: LossDoc) -> Self {
        match l {
            LossDoc::Shares => LossKind::Shares,
            LossDoc::Sizes => LossKind::Sizes,
        }
    }
}

fn default_multistart() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationDoc {
    #[serde(default = "default_multistart")]
    pub multistart: usize,
    #[serde(default)]
    pub loss: LossDoc,
    pub params: Vec<ParamDoc>,
}

/// `name` is a behavior key (`wta`, `s`, `k`, `gamma`, `c`) or
/// `importance.<attribute>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDoc {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    /// Defaults to the scenario's current value, clamped into the box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<f64>,
    #[serde(default)]
    pub fixed: bool,
}

/// A scenario document together with the model objects built from it.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub doc: ScenarioDoc,
    pub scenario: Scenario,
    pub integrator: IntegratorConfig,
    pub calibration: Option<ParamSpec>,
    /// Unknown fields skipped in lax mode.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    /// Unknown fields are schema errors.
    Strict,
    /// Unknown fields are reported as warnings and skipped.
    Lax,
}

pub fn parse_tree(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Parses `path=value` as given on the command line. The value is read as
/// JSON when it parses as JSON and as a bare string otherwise, so
/// `behavior.allocator=softmax` needs no quotes.
pub fn parse_override(arg: &str) -> Result<(String, Value), String> {
    let (path, raw) = arg
        .split_once('=')
        .ok_or_else(|| format!("override '{arg}' is not of the form path=value"))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(format!("override '{arg}' has an empty path"));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((path.to_string(), value))
}

#[derive(Debug, Clone, PartialEq)]
enum Step {
    Key(String),
    Index(usize),
}

fn override_steps(path: &str) -> Result<Vec<Step>> {
    let bad = || Error::schema(path, "malformed override path");
    let mut steps = Vec::new();
    for token in path.split('.') {
        let (key, mut rest) = match token.find('[') {
            Some(at) => token.split_at(at),
            None => (token, ""),
        };
        if !key.is_empty() {
            steps.push(match key.parse::<usize>() {
                Ok(i) => Step::Index(i),
                Err(_) => Step::Key(key.to_string()),
            });
        } else if rest.is_empty() {
            return Err(bad());
        }
        while !rest.is_empty() {
            let close = rest.find(']').ok_or_else(bad)?;
            let index = rest[1..close].parse::<usize>().map_err(|_| bad())?;
            steps.push(Step::Index(index));
            rest = &rest[close + 1..];
            if !rest.is_empty() && !rest.starts_with('[') {
                return Err(bad());
            }
        }
    }
    Ok(steps)
}

fn lookup<'a>(tree: &'a Value, steps: &[Step]) -> Option<&'a Value> {
    steps.iter().try_fold(tree, |node, step| match step {
        Step::Key(k) => node.as_object()?.get(k),
        Step::Index(i) => node.as_array()?.get(*i),
    })
}

/// Sets `path` in the raw document tree, creating missing object levels.
/// Whether the path names a real field is checked after the schema stage.
pub fn apply_override(tree: &mut Value, path: &str, value: Value) -> Result<()> {
    let steps = override_steps(path)?;
    let mut node = tree;
    for (k, step) in steps.iter().enumerate() {
        let last = k + 1 == steps.len();
        node = match step {
            Step::Key(key) => {
                if node.is_null() {
                    *node = Value::Object(Default::default());
                }
                let map = node.as_object_mut().ok_or_else(|| {
                    Error::schema(path, format!("'{key}' is not inside an object"))
                })?;
                map.entry(key.clone()).or_insert(Value::Null)
            }
            Step::Index(i) => {
                let items = node
                    .as_array_mut()
                    .ok_or_else(|| Error::schema(path, format!("[{i}] is not inside a list")))?;
                let len = items.len();
                items.get_mut(*i).ok_or_else(|| {
                    Error::schema(path, format!("index {i} out of range for a list of {len}"))
                })?
            }
        };
        if last {
            *node = value;
            return Ok(());
        }
    }
    Err(Error::schema(path, "malformed override path"))
}

fn schema_error(e: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let mut path = e.path().to_string();
    let message = e.into_inner().to_string();
    // name the missing field itself rather than its parent
    if let Some(field) = message
        .strip_prefix("missing field `")
        .and_then(|rest| rest.split('`').next())
    {
        path = if path == "." {
            field.to_string()
        } else {
            format!("{path}.{field}")
        };
    }
    Error::schema(path, message)
}

/// Schema stage: typed document from a raw tree.
pub fn doc_from_tree(tree: Value, strictness: Strictness) -> Result<(ScenarioDoc, Vec<String>)> {
    let mut unknown = Vec::new();
    let mut record = |path: serde_ignored::Path| unknown.push(path.to_string());
    let de = serde_ignored::Deserializer::new(tree, &mut record);
    let doc: ScenarioDoc = serde_path_to_error::deserialize(de).map_err(schema_error)?;
    if strictness == Strictness::Strict {
        if let Some(path) = unknown.first() {
            return Err(Error::schema(path.clone(), "unknown field"));
        }
    }
    let warnings = unknown
        .into_iter()
        .map(|p| format!("unknown field '{p}' ignored"))
        .collect();
    Ok((doc, warnings))
}

/// Full pipeline from text: syntax, overrides, schema, domain.
pub fn parse_scenario(
    text: &str,
    base_dir: Option<&Path>,
    overrides: &[(String, Value)],
    strictness: Strictness,
) -> Result<LoadedScenario> {
    let mut tree = parse_tree(text)?;
    load_tree(&mut tree, base_dir, overrides, strictness)
}

pub fn load_tree(
    tree: &mut Value,
    base_dir: Option<&Path>,
    overrides: &[(String, Value)],
    strictness: Strictness,
) -> Result<LoadedScenario> {
    for (path, value) in overrides {
        apply_override(tree, path, value.clone())?;
    }
    let (doc, warnings) = doc_from_tree(tree.clone(), strictness)?;
    if !overrides.is_empty() {
        // an override of a field the schema does not know is always an error
        let canonical = serde_json::to_value(&doc).expect("document serializes");
        for (path, _) in overrides {
            if lookup(&canonical, &override_steps(path)?).is_none() {
                return Err(Error::schema(
                    path.clone(),
                    "override names no field of the scenario schema",
                ));
            }
        }
    }
    let mut loaded = doc.build(base_dir)?;
    loaded.warnings = warnings;
    Ok(loaded)
}

pub fn load_scenario_file(
    path: &Path,
    overrides: &[(String, Value)],
    strictness: Strictness,
) -> Result<LoadedScenario> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text, path.parent(), overrides, strictness)
}

fn unique(names: &[String], path: &str) -> Result<()> {
    if names.is_empty() {
        return Err(Error::domain(path, "must not be empty"));
    }
    for (i, name) in names.iter().enumerate() {
        if names[..i].contains(name) {
            return Err(Error::domain(
                format!("{path}[{i}]"),
                format!("duplicate name '{name}'"),
            ));
        }
    }
    Ok(())
}

fn flatten3(rows: &[Vec<Vec<f64>>], path: &str, n: usize, k: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(rows.len() * n * k);
    for (s, stamp) in rows.iter().enumerate() {
        if stamp.len() != n {
            return Err(Error::schema(
                format!("{path}[{s}]"),
                format!("expected {n} segments, found {}", stamp.len()),
            ));
        }
        for (i, row) in stamp.iter().enumerate() {
            if row.len() != k {
                return Err(Error::schema(
                    format!("{path}[{s}][{i}]"),
                    format!("expected {k} attributes, found {}", row.len()),
                ));
            }
            out.extend_from_slice(row);
        }
    }
    Ok(out)
}

impl ScenarioDoc {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("document serializes");
        text.push('\n');
        text
    }

    fn panel(&self, base_dir: Option<&Path>) -> Result<AttributePanel> {
        let scale = ScoreScale::new(self.scale.min, self.scale.max).map_err(|_| {
            Error::domain(
                "scale",
                format!(
                    "need finite 0 <= min < max, got [{}, {}]",
                    self.scale.min, self.scale.max
                ),
            )
        })?;
        let (n, k) = (self.segments.len(), self.attributes.len());
        let p = &self.panel;
        let (times, perf, imp) = match &p.csv {
            Some(file) => {
                if p.times.is_some() || p.perf.is_some() || p.imp.is_some() {
                    return Err(Error::schema(
                        "panel",
                        "give either 'csv' or inline 'times', 'perf' and 'imp', not both",
                    ));
                }
                let dir = base_dir.ok_or_else(|| {
                    Error::domain(
                        "panel.csv",
                        "CSV references are only resolved for scenario files",
                    )
                })?;
                let table =
                    load_attribute_csv_path(&dir.join(file), &self.segments, &self.attributes)?;
                (table.times, table.perf, table.imp)
            }
            None => {
                let need = |field: &str| {
                    Error::schema(format!("panel.{field}"), format!("missing field `{field}`"))
                };
                let times = p.times.clone().ok_or_else(|| need("times"))?;
                let perf_rows = p.perf.as_ref().ok_or_else(|| need("perf"))?;
                let imp_doc = p.imp.as_ref().ok_or_else(|| need("imp"))?;
                let stamps = |path: &str, len: usize| {
                    if len == times.len() {
                        Ok(())
                    } else {
                        Err(Error::schema(
                            path,
                            format!("expected {} stamps, found {len}", times.len()),
                        ))
                    }
                };
                stamps("panel.perf", perf_rows.len())?;
                let perf = flatten3(perf_rows, "panel.perf", n, k)?;
                let imp = match imp_doc {
                    ImportanceDoc::PerSegment(rows) => {
                        stamps("panel.imp", rows.len())?;
                        flatten3(rows, "panel.imp", n, k)?
                    }
                    ImportanceDoc::Market(rows) => {
                        stamps("panel.imp", rows.len())?;
                        let mut out = Vec::with_capacity(times.len() * n * k);
                        for (s, row) in rows.iter().enumerate() {
                            if row.len() != k {
                                return Err(Error::schema(
                                    format!("panel.imp[{s}]"),
                                    format!("expected {k} attributes, found {}", row.len()),
                                ));
                            }
                            for _ in 0..n {
                                out.extend_from_slice(row);
                            }
                        }
                        out
                    }
                };
                (times, perf, imp)
            }
        };
        if times.is_empty() {
            return Err(Error::schema("panel.times", "no time stamps"));
        }
        let panel = AttributePanel::new(scale, n, k, times, perf, imp)
            .map_err(|e| Error::schema("panel", e.to_string()))?
            .with_interpolation(p.interpolation);
        let report = validate_panel(&panel);
        if !report.is_ok() {
            return Err(Error::Validation(
                report
                    .violations
                    .iter()
                    .map(|v| self.locate(&panel, v))
                    .collect(),
            ));
        }
        Ok(panel)
    }

    /// Turns a panel violation into a diagnostic pointing at the document.
    fn locate(&self, panel: &AttributePanel, v: &Violation) -> Diagnostic {
        let from_csv = self.panel.csv.is_some();
        let market_imp = matches!(self.panel.imp, Some(ImportanceDoc::Market(_)));
        let (path, message) = match *v {
            Violation::OutOfRange {
                table,
                stamp,
                segment,
                attribute,
                value,
            } => {
                let table = table.to_string();
                let scale = panel.scale();
                let path = if from_csv {
                    "panel.csv".to_string()
                } else if table == "imp" && market_imp {
                    format!("panel.imp[{stamp}][{attribute}]")
                } else {
                    format!("panel.{table}[{stamp}][{segment}][{attribute}]")
                };
                (
                    path,
                    format!(
                        "{table} = {value} at t={}, segment '{}', attribute '{}' is outside the scale [{}, {}]",
                        panel.times()[stamp],
                        self.segments[segment],
                        self.attributes[attribute],
                        scale.min(),
                        scale.max()
                    ),
                )
            }
            Violation::ZeroImportance { stamp, segment } => (
                if from_csv {
                    "panel.csv".to_string()
                } else if market_imp {
                    format!("panel.imp[{stamp}]")
                } else {
                    format!("panel.imp[{stamp}][{segment}]")
                },
                format!(
                    "every importance score of segment '{}' is zero at t={}",
                    self.segments[segment],
                    panel.times()[stamp]
                ),
            ),
            Violation::TimeOrder { index, value } => (
                if from_csv {
                    "panel.csv".to_string()
                } else {
                    format!("panel.times[{index}]")
                },
                format!("time stamp {value} does not increase on its predecessor"),
            ),
        };
        Diagnostic {
            code: "validation",
            message,
            path: Some(path),
        }
    }

    fn new_customers(&self) -> Result<NewCustomerSeries> {
        let series = match &self.new_customers {
            NewCustomersDoc::Constant(rate) => NewCustomerSeries::Constant(*rate),
            NewCustomersDoc::Stamped {
                times,
                rates,
                interpolation,
            } => NewCustomerSeries::Stamped {
                times: times.clone(),
                rates: rates.clone(),
                interpolation: *interpolation,
            },
        };
        series
            .validate()
            .map_err(|e| Error::domain("new_customers", e.to_string()))?;
        Ok(series)
    }

    fn options(&self) -> Result<DynamicsOptions> {
        let o = self.options.unwrap_or_default();
        let options = DynamicsOptions {
            decay_scores: o.decay_scores,
            familiarity_bias: o.familiarity_bias,
            softmax_temperature: o.softmax_temperature,
        };
        options.validate().map_err(|e| match e {
            marketflow_core::Error::OutOfDomain {
                name,
                value,
                domain,
            } => Error::domain(
                format!("options.{name}"),
                format!("{value} is outside {domain}"),
            ),
            other => Error::domain("options", other.to_string()),
        })?;
        Ok(options)
    }

    fn fit_param(&self, name: &str) -> Option<FitParam> {
        if let Some(attr) = name.strip_prefix("importance.") {
            return self
                .attributes
                .iter()
                .position(|a| a == attr)
                .map(FitParam::Importance);
        }
        ScalarParam::from_key(name).map(FitParam::Behavior)
    }

    fn calibration_spec(&self, scenario: &Scenario) -> Result<Option<ParamSpec>> {
        let Some(cal) = &self.calibration else {
            return Ok(None);
        };
        let mut params = Vec::with_capacity(cal.params.len());
        for (i, p) in cal.params.iter().enumerate() {
            let param = self.fit_param(&p.name).ok_or_else(|| {
                Error::domain(
                    format!("calibration.params[{i}].name"),
                    format!(
                        "unknown parameter '{}' (expected wta, s, k, gamma, c or importance.<attribute>)",
                        p.name
                    ),
                )
            })?;
            if cal.params[..i]
                .iter()
                .any(|q| self.fit_param(&q.name) == Some(param))
            {
                return Err(Error::domain(
                    format!("calibration.params[{i}].name"),
                    format!("parameter '{}' listed twice", p.name),
                ));
            }
            let current = match param {
                FitParam::Behavior(s) => scenario.behavior().get(s),
                FitParam::Importance(z) => scenario.panel().imp(0, 0, z),
            };
            params.push(ParamBound {
                param,
                lower: p.lower,
                upper: p.upper,
                initial: p
                    .initial
                    .unwrap_or(current.clamp(p.lower.min(p.upper), p.upper)),
                fixed: p.fixed,
            });
        }
        let spec = ParamSpec {
            params,
            multistart: cal.multistart.max(1),
            loss: cal.loss.into(),
        };
        spec.check(scenario).map_err(|e| {
            let index = match &e {
                marketflow_core::Error::InfeasibleBounds { name, .. } => {
                    spec.params.iter().position(|p| &p.param.name() == name)
                }
                _ => None,
            };
            match index {
                Some(i) => Error::domain(format!("calibration.params[{i}]"), e.to_string()),
                None => Error::domain("calibration.params", e.to_string()),
            }
        })?;
        Ok(Some(spec))
    }

    /// Domain stage: checks every value and builds the model objects.
    pub fn build(&self, base_dir: Option<&Path>) -> Result<LoadedScenario> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::domain(
                "format_version",
                format!(
                    "unsupported format version {} (supported: {FORMAT_VERSION})",
                    self.format_version
                ),
            ));
        }
        unique(&self.segments, "segments")?;
        unique(&self.attributes, "attributes")?;
        let behavior = self.behavior.to_params()?;
        let options = self.options()?;
        let new_customers = self.new_customers()?;
        if self.initial_sizes.len() != self.segments.len() {
            return Err(Error::schema(
                "initial_sizes",
                format!(
                    "expected {} sizes, found {}",
                    self.segments.len(),
                    self.initial_sizes.len()
                ),
            ));
        }
        if let Some(i) = self.initial_sizes.iter().position(|d| !(*d >= 0.0)) {
            return Err(Error::domain(
                format!("initial_sizes[{i}]"),
                format!("{} is negative", self.initial_sizes[i]),
            ));
        }
        let panel = self.panel(base_dir)?;
        let integrator = IntegratorConfig::from(self.integrator);
        if !(integrator.dt > 0.0 && integrator.dt.is_finite()) {
            return Err(Error::domain(
                "integrator.dt",
                format!("{} is not a positive step", integrator.dt),
            ));
        }
        let start = panel.times()[0];
        if !(integrator.horizon > start && integrator.horizon.is_finite()) {
            return Err(Error::domain(
                "integrator.horizon",
                format!(
                    "end time {} must lie after the first stamp {start}",
                    integrator.horizon
                ),
            ));
        }
        let scenario = Scenario::new(
            self.name.clone(),
            panel,
            self.initial_sizes.clone(),
            new_customers,
            behavior,
            options,
        )?;
        let calibration = self.calibration_spec(&scenario)?;
        Ok(LoadedScenario {
            doc: self.clone(),
            scenario,
            integrator,
            calibration,
            warnings: Vec::new(),
        })
    }
}

impl LoadedScenario {
    /// The document with its panel written out inline, so it stands alone.
    pub fn inline_doc(&self) -> ScenarioDoc {
        let panel = self.scenario.panel();
        let (n, k) = (panel.segment_count(), panel.attribute_count());
        let stamps = panel.times().len();
        let table = |f: &dyn Fn(usize, usize, usize) -> f64| -> Vec<Vec<Vec<f64>>> {
            (0..stamps)
                .map(|s| {
                    (0..n)
                        .map(|i| (0..k).map(|z| f(s, i, z)).collect())
                        .collect()
                })
                .collect()
        };
        let mut doc = self.doc.clone();
        doc.panel = PanelDoc {
            csv: None,
            times: Some(panel.times().to_vec()),
            perf: Some(table(&|s, i, z| panel.perf(s, i, z))),
            imp: Some(ImportanceDoc::PerSegment(table(&|s, i, z| {
                panel.imp(s, i, z)
            }))),
            interpolation: panel.interpolation(),
        };
        doc
    }

    /// Document reflecting different behavior parameters, e.g. after a fit.
    pub fn with_behavior(&self, behavior: &BehaviorParams) -> ScenarioDoc {
        let mut doc = self.doc.clone();
        doc.behavior = BehaviorDoc::from(behavior);
        doc
    }

    /// Name used for a fit parameter in documents and reports.
    pub fn param_name(&self, param: FitParam) -> String {
        match param {
            FitParam::Behavior(s) => s.key().to_string(),
            FitParam::Importance(z) => format!("importance.{}", self.doc.attributes[z]),
        }
    }
}
