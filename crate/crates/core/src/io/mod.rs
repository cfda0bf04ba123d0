//! Configuration files, CSV traces and SVG figures.

mod config;
mod svg;
mod trace;

pub use config::{
    load_scenario, parse_scenario, parse_scenario_with, ConfigError, ConfigErrors, FleetSize,
    GeneratorConfig, IntegratorOverrides, Output, Placement, ScenarioConfig, SpeedSpec,
    VehicleSource, SCHEMA_VERSION,
};
pub use svg::{render_diagram_svg, render_minmax_svg, render_timespace_svg};
pub use trace::{
    read_trace, write_diagram, write_events, write_samples, write_trace, DIAGRAM_HEADER,
    EVENTS_HEADER, TRACE_HEADER,
};
