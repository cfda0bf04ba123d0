//! Scalar capacity model of lane-free traffic.
//!
//! Each vehicle moves at `v_i = V_i (1 - Γ_i)`, where the congestion factor
//! `Γ_i = (1/κ) Σ_{j ahead} exp((x_i - x_j) / ω)` counts the vehicles ahead,
//! weighted by distance. On an open link the model is solved exactly (see
//! [`analytic`]); [`numeric`] integrates it directly and is the only solver
//! for rings.

// `!(a > b)` reads as "not strictly greater, or NaN" and is used on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod analytic;
pub mod error;
pub mod io;
pub mod model;
pub mod numeric;

pub use error::{Error, ErrorKind, Result};
pub use model::{
    classify_regime, congestion_factors_fast, congestion_factors_naive, max_jam_density,
    passing_condition, velocities, LinkState, ModelParams, PassingEvent, Regime, RegimeReport,
    Scenario, Topology, VehicleSpec,
};
