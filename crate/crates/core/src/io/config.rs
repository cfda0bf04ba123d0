//! Scenario configuration files (TOML).
//!
//! ```toml
//! schema_version = 1
//! topology = { ring = 1000.0 }   # or "open"
//! outputs = ["trace", "minmax_svg"]
//!
//! [params]
//! kappa = 10.0
//! omega = 10.0
//!
//! [generator]                     # or one [[vehicles]] table per vehicle
//! density = 0.5                   # or count = 500
//! v_max = 6.0                     # or one value per vehicle
//! placement = "two_region"        # or "uniform"
//! jam_fraction = 0.3
//! rho_jam = 1.03
//!
//! [integrator]
//! dt = 0.01
//! horizon = 500.0
//! sample_every = 10
//! ```

use std::fmt;

use toml::de::{DeTable, DeValue};
use toml::Spanned;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Scenario, Topology};
use crate::numeric::{build_two_region_ring, IntegratorConfig};

pub const SCHEMA_VERSION: i64 = 1;

/// One problem found while reading a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line, when the problem can be tied to one.
    pub line: Option<usize>,
    /// Dotted path of the offending field.
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

/// Every problem found in a configuration, in document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration ({} problem", self.0.len())?;
        if self.0.len() != 1 {
            write!(f, "s")?;
        }
        write!(f, ")")?;
        for e in &self.0 {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, PartialEq)]
pub enum FleetSize {
    Count(usize),
    /// Vehicles per metre.
    Density(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    Uniform,
    TwoRegion { jam_fraction: f64, rho_jam: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpeedSpec {
    Scalar(f64),
    PerVehicle(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub size: FleetSize,
    pub placement: Placement,
    pub v_max: SpeedSpec,
    /// Open-link spacing (m); required there together with `count`.
    pub spacing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VehicleSource {
    /// `(v_max, x0)` pairs, leader first on open links.
    Explicit(Vec<(f64, f64)>),
    Generator(GeneratorConfig),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntegratorOverrides {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub sample_every: Option<usize>,
    pub adaptive: Option<bool>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    Trace,
    TimeSpaceSvg,
    MinMaxSvg,
}

impl Output {
    pub const ALL: [Output; 3] = [Output::Trace, Output::TimeSpaceSvg, Output::MinMaxSvg];

    pub fn name(self) -> &'static str {
        match self {
            Output::Trace => "trace",
            Output::TimeSpaceSvg => "timespace_svg",
            Output::MinMaxSvg => "minmax_svg",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub schema_version: i64,
    pub topology: Topology,
    pub params: ModelParams,
    pub vehicles: VehicleSource,
    pub integrator: IntegratorOverrides,
    pub outputs: Vec<Output>,
}

impl ScenarioConfig {
    /// Materialises the vehicle list.
    pub fn build_scenario(&self) -> Result<Scenario> {
        match &self.vehicles {
            VehicleSource::Explicit(pairs) => {
                Scenario::from_pairs(self.topology, self.params, pairs)
            }
            VehicleSource::Generator(g) => self.generate(g),
        }
    }

    fn generate(&self, g: &GeneratorConfig) -> Result<Scenario> {
        let speed_of = |k: usize| match &g.v_max {
            SpeedSpec::Scalar(v) => *v,
            SpeedSpec::PerVehicle(list) => list[k],
        };
        let check_speeds = |count: usize| match &g.v_max {
            SpeedSpec::PerVehicle(list) if list.len() != count => Err(Error::invalid(format!(
                "generator.v_max lists {} speeds for {count} vehicles",
                list.len()
            ))),
            _ => Ok(()),
        };
        match (self.topology, &g.placement) {
            (
                Topology::Ring { length },
                Placement::TwoRegion {
                    jam_fraction,
                    rho_jam,
                },
            ) => {
                let rho = match g.size {
                    FleetSize::Density(rho) => rho,
                    FleetSize::Count(n) => n as f64 / length,
                };
                let base = build_two_region_ring(
                    length,
                    rho,
                    *jam_fraction,
                    *rho_jam,
                    speed_of(0),
                    self.params,
                )?;
                check_speeds(base.len())?;
                let pairs: Vec<(f64, f64)> = base
                    .vehicles
                    .iter()
                    .map(|v| (speed_of(v.id), v.x0))
                    .collect();
                Scenario::from_pairs(self.topology, self.params, &pairs)
            }
            (Topology::Ring { length }, Placement::Uniform) => {
                let count = match g.size {
                    FleetSize::Count(n) => n,
                    FleetSize::Density(rho) => (rho * length).round() as usize,
                };
                if count == 0 {
                    return Err(Error::invalid("generator places no vehicle on the ring"));
                }
                check_speeds(count)?;
                let pairs: Vec<(f64, f64)> = (0..count)
                    .map(|k| (speed_of(k), k as f64 * length / count as f64))
                    .collect();
                Scenario::from_pairs(self.topology, self.params, &pairs)
            }
            (Topology::OpenLink, Placement::TwoRegion { .. }) => Err(Error::invalid(
                "generator.placement = \"two_region\" needs a ring topology",
            )),
            (Topology::OpenLink, Placement::Uniform) => {
                let (count, spacing) = match (&g.size, g.spacing) {
                    (FleetSize::Count(n), Some(s)) => (*n, s),
                    (FleetSize::Density(rho), None) => {
                        return Err(Error::invalid(format!(
                            "an open-link generator needs generator.count (density {rho} gives spacing only)"
                        )))
                    }
                    (FleetSize::Density(_), Some(_)) => {
                        return Err(Error::invalid("an open-link generator needs generator.count"))
                    }
                    (FleetSize::Count(_), None) => {
                        return Err(Error::invalid("an open-link generator needs generator.spacing"))
                    }
                };
                check_speeds(count)?;
                let pairs: Vec<(f64, f64)> = (0..count)
                    .map(|k| (speed_of(k), (count - 1 - k) as f64 * spacing))
                    .collect();
                Scenario::from_pairs(self.topology, self.params, &pairs)
            }
        }
    }

    /// `base` with every override from the file applied.
    pub fn integrator_config(&self, base: IntegratorConfig) -> IntegratorConfig {
        let o = &self.integrator;
        IntegratorConfig {
            dt: o.dt.unwrap_or(base.dt),
            horizon: o.horizon.unwrap_or(base.horizon),
            sample_every: o.sample_every.unwrap_or(base.sample_every),
            adaptive: o.adaptive.unwrap_or(base.adaptive),
            tolerance: o.tolerance.unwrap_or(base.tolerance),
            permissive: base.permissive,
        }
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("schema_version = {}\n", self.schema_version));
        match self.topology {
            Topology::OpenLink => out.push_str("topology = \"open\"\n"),
            Topology::Ring { length } => {
                out.push_str(&format!("topology = {{ ring = {} }}\n", num(length)))
            }
        }
        let outputs: Vec<String> = self
            .outputs
            .iter()
            .map(|o| format!("\"{}\"", o.name()))
            .collect();
        out.push_str(&format!("outputs = [{}]\n", outputs.join(", ")));
        out.push_str(&format!(
            "\n[params]\nkappa = {}\nomega = {}\n",
            num(self.params.kappa),
            num(self.params.omega)
        ));
        let o = &self.integrator;
        if *o != IntegratorOverrides::default() {
            out.push_str("\n[integrator]\n");
            if let Some(v) = o.dt {
                out.push_str(&format!("dt = {}\n", num(v)));
            }
            if let Some(v) = o.horizon {
                out.push_str(&format!("horizon = {}\n", num(v)));
            }
            if let Some(v) = o.sample_every {
                out.push_str(&format!("sample_every = {v}\n"));
            }
            if let Some(v) = o.adaptive {
                out.push_str(&format!("adaptive = {v}\n"));
            }
            if let Some(v) = o.tolerance {
                out.push_str(&format!("tolerance = {}\n", num(v)));
            }
        }
        match &self.vehicles {
            VehicleSource::Explicit(pairs) => {
                for (v, x) in pairs {
                    out.push_str(&format!(
                        "\n[[vehicles]]\nv_max = {}\nx0 = {}\n",
                        num(*v),
                        num(*x)
                    ));
                }
            }
            VehicleSource::Generator(g) => {
                out.push_str("\n[generator]\n");
                match g.size {
                    FleetSize::Count(n) => out.push_str(&format!("count = {n}\n")),
                    FleetSize::Density(rho) => out.push_str(&format!("density = {}\n", num(rho))),
                }
                if let Some(s) = g.spacing {
                    out.push_str(&format!("spacing = {}\n", num(s)));
                }
                match &g.v_max {
                    SpeedSpec::Scalar(v) => out.push_str(&format!("v_max = {}\n", num(*v))),
                    SpeedSpec::PerVehicle(list) => {
                        let items: Vec<String> = list.iter().map(|v| num(*v)).collect();
                        out.push_str(&format!("v_max = [{}]\n", items.join(", ")));
                    }
                }
                match g.placement {
                    Placement::Uniform => out.push_str("placement = \"uniform\"\n"),
                    Placement::TwoRegion {
                        jam_fraction,
                        rho_jam,
                    } => out.push_str(&format!(
                        "placement = \"two_region\"\njam_fraction = {}\nrho_jam = {}\n",
                        num(jam_fraction),
                        num(rho_jam)
                    )),
                }
            }
        }
        out
    }
}

/// Shortest round-trip float text, always valid TOML.
fn num(v: f64) -> String {
    format!("{v:?}")
}

struct Checker<'s> {
    text: &'s str,
    strict: bool,
    errors: Vec<ConfigError>,
}

impl<'s> Checker<'s> {
    fn line(&self, span: std::ops::Range<usize>) -> usize {
        self.text[..span.start.min(self.text.len())]
            .matches('\n')
            .count()
            + 1
    }

    fn error(
        &mut self,
        span: Option<std::ops::Range<usize>>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) {
        let line = span.map(|s| self.line(s));
        self.errors.push(ConfigError {
            line,
            field: field.into(),
            message: message.into(),
        });
    }

    fn unknown_keys(&mut self, table: &DeTable<'_>, path: &str, allowed: &[&str]) {
        for (key, _) in table.iter() {
            let name: &str = key.get_ref();
            if !allowed.contains(&name) {
                let field = join(path, name);
                if self.strict {
                    self.error(Some(key.span()), field, "unknown key");
                } else {
                    log::warn!(
                        "line {}: ignoring unknown key {field}",
                        self.line(key.span())
                    );
                }
            }
        }
    }

    fn table<'t, 'i>(
        &mut self,
        parent: &'t DeTable<'i>,
        path: &str,
        key: &str,
    ) -> Option<&'t Spanned<DeValue<'i>>> {
        parent.get(key).and_then(|v| match v.get_ref() {
            DeValue::Table(_) => Some(v),
            other => {
                self.error(
                    Some(v.span()),
                    join(path, key),
                    format!("expected a table, found {}", other.type_str()),
                );
                None
            }
        })
    }

    fn number(&mut self, value: &Spanned<DeValue<'_>>, field: &str) -> Option<f64> {
        let parsed = match value.get_ref() {
            DeValue::Float(f) => f.as_str().replace('_', "").parse::<f64>().ok(),
            DeValue::Integer(i) => i64::from_str_radix(&i.as_str().replace('_', ""), i.radix())
                .ok()
                .map(|v| v as f64),
            other => {
                self.error(
                    Some(value.span()),
                    field,
                    format!("expected a number, found {}", other.type_str()),
                );
                return None;
            }
        };
        match parsed {
            Some(v) if v.is_finite() => Some(v),
            _ => {
                self.error(Some(value.span()), field, "must be a finite number");
                None
            }
        }
    }

    fn positive(
        &mut self,
        table: &DeTable<'_>,
        path: &str,
        key: &str,
        required: bool,
    ) -> Option<f64> {
        let field = join(path, key);
        let Some(value) = table.get(key) else {
            if required {
                self.error(None, field, "missing required field");
            }
            return None;
        };
        let v = self.number(value, &field)?;
        if v <= 0.0 {
            self.error(Some(value.span()), field, format!("must be > 0, got {v}"));
            return None;
        }
        Some(v)
    }

    fn integer(&mut self, table: &DeTable<'_>, path: &str, key: &str, min: i64) -> Option<i64> {
        let field = join(path, key);
        let value = table.get(key)?;
        let DeValue::Integer(i) = value.get_ref() else {
            self.error(
                Some(value.span()),
                field,
                format!("expected an integer, found {}", value.get_ref().type_str()),
            );
            return None;
        };
        match i64::from_str_radix(&i.as_str().replace('_', ""), i.radix()) {
            Ok(v) if v >= min => Some(v),
            Ok(v) => {
                self.error(
                    Some(value.span()),
                    field,
                    format!("must be >= {min}, got {v}"),
                );
                None
            }
            Err(_) => {
                self.error(Some(value.span()), field, "integer out of range");
                None
            }
        }
    }

    fn string<'t>(
        &mut self,
        table: &'t DeTable<'_>,
        path: &str,
        key: &str,
    ) -> Option<(&'t str, std::ops::Range<usize>)> {
        let value = table.get(key)?;
        match value.get_ref() {
            DeValue::String(s) => Some((s.as_ref(), value.span())),
            other => {
                self.error(
                    Some(value.span()),
                    join(path, key),
                    format!("expected a string, found {}", other.type_str()),
                );
                None
            }
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn as_table<'t, 'i>(value: &'t Spanned<DeValue<'i>>) -> &'t DeTable<'i> {
    value.get_ref().as_table().expect("checked to be a table")
}

/// Parses and validates a configuration, rejecting unknown keys.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigErrors> {
    parse_scenario_with(text, true)
}

/// As [`parse_scenario`]; with `strict = false` unknown keys are only logged.
pub fn parse_scenario_with(text: &str, strict: bool) -> Result<ScenarioConfig, ConfigErrors> {
    let mut c = Checker {
        text,
        strict,
        errors: Vec::new(),
    };
    let (doc, syntax) = DeTable::parse_recoverable(text);
    for e in syntax {
        let span = e.span();
        c.error(span, "<document>", e.message().to_string());
    }
    if !c.errors.is_empty() {
        return Err(ConfigErrors(c.errors));
    }
    let root = doc.get_ref();
    c.unknown_keys(
        root,
        "",
        &[
            "schema_version",
            "topology",
            "outputs",
            "params",
            "vehicles",
            "generator",
            "integrator",
        ],
    );

    match root.get("schema_version") {
        None => c.error(None, "schema_version", "missing required field"),
        Some(v) => match c.integer(root, "", "schema_version", i64::MIN) {
            Some(SCHEMA_VERSION) => {}
            Some(other) => c.error(
                Some(v.span()),
                "schema_version",
                format!("unsupported version {other}; this build reads version {SCHEMA_VERSION}"),
            ),
            None => {}
        },
    }

    let topology = parse_topology(&mut c, root);
    let params = parse_params(&mut c, root);
    let outputs = parse_outputs(&mut c, root);
    let integrator = parse_integrator(&mut c, root);
    let vehicles = parse_vehicles(&mut c, root, topology);

    if !c.errors.is_empty() {
        c.errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
        return Err(ConfigErrors(c.errors));
    }
    Ok(ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        topology: topology.expect("validated"),
        params: params.expect("validated"),
        vehicles: vehicles.expect("validated"),
        integrator,
        outputs,
    })
}

fn parse_topology(c: &mut Checker<'_>, root: &DeTable<'_>) -> Option<Topology> {
    let Some(value) = root.get("topology") else {
        c.error(None, "topology", "missing required field");
        return None;
    };
    match value.get_ref() {
        DeValue::String(s) if s.as_ref() == "open" => Some(Topology::OpenLink),
        DeValue::String(s) => {
            c.error(
                Some(value.span()),
                "topology",
                format!("expected \"open\" or {{ ring = L }}, found \"{s}\""),
            );
            None
        }
        DeValue::Table(t) => {
            c.unknown_keys(t, "topology", &["ring"]);
            let length = c.positive(t, "topology", "ring", true)?;
            Some(Topology::Ring { length })
        }
        other => {
            c.error(
                Some(value.span()),
                "topology",
                format!(
                    "expected \"open\" or {{ ring = L }}, found {}",
                    other.type_str()
                ),
            );
            None
        }
    }
}

fn parse_params(c: &mut Checker<'_>, root: &DeTable<'_>) -> Option<ModelParams> {
    let Some(value) = c.table(root, "", "params") else {
        if root.get("params").is_none() {
            c.error(None, "params", "missing required table");
        }
        return None;
    };
    let t = as_table(value);
    c.unknown_keys(t, "params", &["kappa", "omega"]);
    let kappa = c.positive(t, "params", "kappa", true);
    let omega = c.positive(t, "params", "omega", true);
    Some(ModelParams {
        kappa: kappa?,
        omega: omega?,
    })
}

fn parse_outputs(c: &mut Checker<'_>, root: &DeTable<'_>) -> Vec<Output> {
    let Some(value) = root.get("outputs") else {
        return vec![Output::Trace];
    };
    let DeValue::Array(items) = value.get_ref() else {
        c.error(
            Some(value.span()),
            "outputs",
            "expected an array of strings",
        );
        return Vec::new();
    };
    let mut outputs = Vec::new();
    for (k, item) in items.iter().enumerate() {
        let field = format!("outputs[{k}]");
        match item.get_ref() {
            DeValue::String(s) => match Output::ALL.iter().find(|o| o.name() == s.as_ref()) {
                Some(o) if !outputs.contains(o) => outputs.push(*o),
                Some(_) => c.error(
                    Some(item.span()),
                    field,
                    format!("duplicate output \"{s}\""),
                ),
                None => c.error(
                    Some(item.span()),
                    field,
                    format!("unknown output \"{s}\" (expected trace, timespace_svg or minmax_svg)"),
                ),
            },
            other => c.error(
                Some(item.span()),
                field,
                format!("expected a string, found {}", other.type_str()),
            ),
        }
    }
    outputs
}

fn parse_integrator(c: &mut Checker<'_>, root: &DeTable<'_>) -> IntegratorOverrides {
    let Some(value) = c.table(root, "", "integrator") else {
        return IntegratorOverrides::default();
    };
    let t = as_table(value);
    let path = "integrator";
    c.unknown_keys(
        t,
        path,
        &["dt", "horizon", "sample_every", "adaptive", "tolerance"],
    );
    let horizon = t.get("horizon").and_then(|v| {
        let h = c.number(v, "integrator.horizon")?;
        if h < 0.0 {
            c.error(
                Some(v.span()),
                "integrator.horizon",
                format!("must be >= 0, got {h}"),
            );
            return None;
        }
        Some(h)
    });
    let adaptive = t.get("adaptive").and_then(|v| match v.get_ref() {
        DeValue::Boolean(b) => Some(*b),
        other => {
            c.error(
                Some(v.span()),
                "integrator.adaptive",
                format!("expected a boolean, found {}", other.type_str()),
            );
            None
        }
    });
    IntegratorOverrides {
        dt: c.positive(t, path, "dt", false),
        horizon,
        sample_every: c.integer(t, path, "sample_every", 1).map(|v| v as usize),
        adaptive,
        tolerance: c.positive(t, path, "tolerance", false),
    }
}

fn parse_vehicles(
    c: &mut Checker<'_>,
    root: &DeTable<'_>,
    topology: Option<Topology>,
) -> Option<VehicleSource> {
    match (root.get("vehicles"), root.get("generator")) {
        (Some(v), Some(g)) => {
            let span = if v.span().start < g.span().start {
                g.span()
            } else {
                v.span()
            };
            c.error(
                Some(span),
                "vehicles",
                "give either [[vehicles]] or [generator], not both",
            );
            None
        }
        (None, None) => {
            c.error(
                None,
                "vehicles",
                "missing: give [[vehicles]] entries or a [generator] table",
            );
            None
        }
        (Some(v), None) => parse_explicit(c, v),
        (None, Some(_)) => {
            let g = c.table(root, "", "generator")?;
            parse_generator(c, as_table(g), topology)
        }
    }
}

fn parse_explicit(c: &mut Checker<'_>, value: &Spanned<DeValue<'_>>) -> Option<VehicleSource> {
    let DeValue::Array(items) = value.get_ref() else {
        c.error(
            Some(value.span()),
            "vehicles",
            "expected an array of tables ([[vehicles]])",
        );
        return None;
    };
    if items.is_empty() {
        c.error(
            Some(value.span()),
            "vehicles",
            "at least one vehicle is required",
        );
        return None;
    }
    let mut pairs = Vec::with_capacity(items.len());
    let mut ok = true;
    for (k, item) in items.iter().enumerate() {
        let path = format!("vehicles[{k}]");
        let DeValue::Table(t) = item.get_ref() else {
            c.error(Some(item.span()), path, "expected a table");
            ok = false;
            continue;
        };
        c.unknown_keys(t, &path, &["v_max", "x0"]);
        let v = c.positive(t, &path, "v_max", true);
        let x = match t.get("x0") {
            Some(x) => c.number(x, &join(&path, "x0")),
            None => {
                c.error(
                    Some(item.span()),
                    join(&path, "x0"),
                    "missing required field",
                );
                None
            }
        };
        match (v, x) {
            (Some(v), Some(x)) => pairs.push((v, x)),
            _ => ok = false,
        }
    }
    ok.then_some(VehicleSource::Explicit(pairs))
}

fn parse_generator(
    c: &mut Checker<'_>,
    t: &DeTable<'_>,
    topology: Option<Topology>,
) -> Option<VehicleSource> {
    let path = "generator";
    c.unknown_keys(
        t,
        path,
        &[
            "count",
            "density",
            "spacing",
            "v_max",
            "placement",
            "jam_fraction",
            "rho_jam",
        ],
    );
    let size = match (t.get("count"), t.get("density")) {
        (Some(_), Some(d)) => {
            c.error(
                Some(d.span()),
                "generator.density",
                "give either count or density, not both",
            );
            None
        }
        (Some(_), None) => c
            .integer(t, path, "count", 1)
            .map(|n| FleetSize::Count(n as usize)),
        (None, Some(_)) => c.positive(t, path, "density", true).map(FleetSize::Density),
        (None, None) => {
            c.error(None, "generator.count", "missing: give count or density");
            None
        }
    };
    let spacing = c.positive(t, path, "spacing", false);
    let v_max = match t.get("v_max") {
        None => {
            c.error(None, "generator.v_max", "missing required field");
            None
        }
        Some(v) => match v.get_ref() {
            DeValue::Array(items) => {
                let mut list = Vec::with_capacity(items.len());
                for (k, item) in items.iter().enumerate() {
                    let field = format!("generator.v_max[{k}]");
                    match c.number(item, &field) {
                        Some(s) if s > 0.0 => list.push(s),
                        Some(s) => {
                            c.error(Some(item.span()), field, format!("must be > 0, got {s}"))
                        }
                        None => {}
                    }
                }
                (list.len() == items.len() && !list.is_empty())
                    .then_some(SpeedSpec::PerVehicle(list))
            }
            _ => c.positive(t, path, "v_max", true).map(SpeedSpec::Scalar),
        },
    };
    let placement = match c.string(t, path, "placement") {
        None | Some(("uniform", _)) => {
            for key in ["jam_fraction", "rho_jam"] {
                if let Some(v) = t.get(key) {
                    c.error(
                        Some(v.span()),
                        join(path, key),
                        "only used with placement = \"two_region\"",
                    );
                }
            }
            Some(Placement::Uniform)
        }
        Some(("two_region", span)) => {
            if topology == Some(Topology::OpenLink) {
                c.error(
                    Some(span),
                    "generator.placement",
                    "two_region placement needs a ring topology",
                );
            }
            let fraction = match t.get("jam_fraction") {
                None => {
                    c.error(None, "generator.jam_fraction", "missing required field");
                    None
                }
                Some(v) => c.number(v, "generator.jam_fraction").and_then(|f| {
                    if (0.0..=1.0).contains(&f) {
                        Some(f)
                    } else {
                        c.error(
                            Some(v.span()),
                            "generator.jam_fraction",
                            format!("must lie in [0, 1], got {f}"),
                        );
                        None
                    }
                }),
            };
            let rho_jam = c.positive(t, path, "rho_jam", true);
            Some(Placement::TwoRegion {
                jam_fraction: fraction?,
                rho_jam: rho_jam?,
            })
        }
        Some((other, span)) => {
            c.error(
                Some(span),
                "generator.placement",
                format!("unknown placement \"{other}\" (expected uniform or two_region)"),
            );
            None
        }
    };
    Some(VehicleSource::Generator(GeneratorConfig {
        size: size?,
        placement: placement?,
        v_max: v_max?,
        spacing,
    }))
}

/// Reads and parses a configuration file.
pub fn load_scenario(path: &std::path::Path, strict: bool) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(parse_scenario_with(&text, strict)?)
}
