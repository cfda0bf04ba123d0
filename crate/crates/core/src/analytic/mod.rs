//! Closed-form trajectories on an open link.
//!
//! With `z_i = exp(-x_i/ω)` the model becomes the lower-triangular linear
//! system `dz_i/dt = -(V_i/ω) z_i + (V_i/(κω)) Σ_{j<i} z_j`. Solving it front to
//! back gives every `z_i` as a sum of `c · t^d · exp(-V_j t/ω)` terms, with the
//! degree rising whenever a maximum speed repeats. Between passing events the
//! order is fixed, so a passing-regime trajectory is a chain of such segments.

mod expoly;
mod passing;

pub use passing::{next_passing_event, solve_passing, ScanOptions};

use crate::error::{Error, Result};
use crate::model::{
    ordered_open_congestion, ModelParams, PassingEvent, Scenario, Topology, VehicleSpec,
};
use crate::numeric::{SimTrace, TraceSamples};
use expoly::{solve_row, ExpPoly};

/// Largest `|x - x_ref| / ω` accepted when mapping positions to `z`.
const MAX_Z_EXPONENT: f64 = 700.0;

/// `z_i = exp(-x_i / ω)` for every vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct ZState {
    pub z: Vec<f64>,
}

pub fn to_z(positions: &[f64], omega: f64) -> ZState {
    ZState {
        z: positions.iter().map(|x| (-x / omega).exp()).collect(),
    }
}

pub fn from_z(state: &ZState, omega: f64) -> Result<Vec<f64>> {
    state
        .z
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            if z > 0.0 && z.is_finite() {
                Ok(-omega * z.ln())
            } else {
                Err(Error::invalid(format!(
                    "z[{i}] = {z} is not a positive finite number"
                )))
            }
        })
        .collect()
}

/// One coefficient `c` of `c · τ^degree · exp(-speed · τ / ω)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    /// Vehicle that first carries `speed` in the segment's order.
    pub owner: usize,
    pub speed: f64,
    pub degree: usize,
    pub coeff: f64,
}

/// Exact solution on `[t_start, t_end]` for a fixed front-to-back order.
///
/// Rows are stored in segment-local time `τ = t - t_start` and relative to a
/// reference position: `x_i = x_ref - ω ln z_i(τ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSegment {
    pub t_start: f64,
    pub t_end: f64,
    /// Vehicle ids front to back.
    pub order: Vec<usize>,
    pub omega: f64,
    pub x_ref: f64,
    rows: Vec<ExpPoly>,
}

impl AnalyticSegment {
    /// Solves rows `order[from..]` against the rows already present for
    /// `order[..from]`, using `positions` (by id) as initial conditions.
    #[allow(clippy::too_many_arguments)]
    fn fit(
        t_start: f64,
        order: Vec<usize>,
        x_ref: f64,
        mut rows: Vec<ExpPoly>,
        from: usize,
        positions: &[f64],
        speeds: &[f64],
        params: &ModelParams,
    ) -> Result<Self> {
        let omega = params.omega;
        let mut forcing = ExpPoly::default();
        for &id in &order[..from] {
            forcing.add_assign(&rows[id]);
        }
        for &id in &order[from..] {
            let exponent = -(positions[id] - x_ref) / omega;
            if !(exponent.abs() <= MAX_Z_EXPONENT) {
                return Err(Error::invalid(format!(
                    "vehicle {id} is {} horizons from the reference position; the fleet is too spread out for the z representation",
                    exponent.abs()
                )));
            }
            let row = solve_row(
                &forcing,
                speeds[id],
                id,
                params.kappa,
                omega,
                exponent.exp(),
            );
            forcing.add_assign(&row);
            rows[id] = row;
        }
        Ok(AnalyticSegment {
            t_start,
            t_end: f64::INFINITY,
            order,
            omega,
            x_ref,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Coefficient table of one vehicle.
    pub fn terms(&self, id: usize) -> Vec<ExpTerm> {
        self.rows[id]
            .groups
            .iter()
            .flat_map(|g| {
                g.poly
                    .iter()
                    .enumerate()
                    .map(move |(degree, &coeff)| ExpTerm {
                        owner: g.owner,
                        speed: g.speed,
                        degree,
                        coeff,
                    })
            })
            .collect()
    }

    /// `z_i(t)` relative to `x_ref`, evaluated directly.
    pub fn z(&self, id: usize, t: f64) -> f64 {
        self.rows[id].value(t - self.t_start, self.omega)
    }

    /// `dz_i/dt` from the coefficient table.
    pub fn z_rate(&self, id: usize, t: f64) -> f64 {
        self.rows[id].derivative(t - self.t_start, self.omega)
    }

    /// `(s*, ln S)` with `z = exp(-s* τ/ω) · S`.
    fn log_parts(&self, id: usize, t: f64) -> Result<(f64, f64)> {
        match self.rows[id].scaled(t - self.t_start, self.omega) {
            Some((speed, sum)) if sum > 0.0 && sum.is_finite() => Ok((speed, sum.ln())),
            _ => Err(Error::NonPositiveZ { vehicle: id, t }),
        }
    }

    pub fn position(&self, id: usize, t: f64) -> Result<f64> {
        let (speed, log_sum) = self.log_parts(id, t)?;
        Ok(self.x_ref + speed * (t - self.t_start) - self.omega * log_sum)
    }

    /// Positions by vehicle id.
    pub fn positions(&self, t: f64) -> Result<Vec<f64>> {
        (0..self.rows.len())
            .map(|id| self.position(id, t))
            .collect()
    }

    /// `x_ahead - x_behind`, formed so that common drift cancels exactly.
    pub fn gap(&self, ahead: usize, behind: usize, t: f64) -> Result<f64> {
        let (sa, la) = self.log_parts(ahead, t)?;
        let (sb, lb) = self.log_parts(behind, t)?;
        let drift = if sa == sb {
            0.0
        } else {
            (sa - sb) * (t - self.t_start)
        };
        Ok(drift + self.omega * (lb - la))
    }

    /// Velocities by id, using this segment's order to decide who is ahead.
    pub fn velocities(
        &self,
        t: f64,
        specs: &[VehicleSpec],
        params: &ModelParams,
    ) -> Result<Vec<f64>> {
        let positions = self.positions(t)?;
        Ok(ordered_velocities(&self.order, &positions, specs, params))
    }
}

pub(crate) fn ordered_velocities(
    order: &[usize],
    positions: &[f64],
    specs: &[VehicleSpec],
    params: &ModelParams,
) -> Vec<f64> {
    let ordered: Vec<f64> = order.iter().map(|&id| positions[id]).collect();
    let mut gammas = vec![0.0; order.len()];
    ordered_open_congestion(&ordered, params, &mut gammas);
    let mut v = vec![0.0; order.len()];
    for (p, &id) in order.iter().enumerate() {
        v[id] = specs[id].v_max * (1.0 - gammas[p]);
    }
    v
}

fn reference_position(positions: &[f64]) -> f64 {
    let hi = positions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = positions.iter().copied().fold(f64::INFINITY, f64::min);
    0.5 * (hi + lo)
}

fn require_open(scenario: &Scenario, operation: &'static str) -> Result<()> {
    match scenario.topology {
        Topology::OpenLink => Ok(()),
        Topology::Ring { .. } => Err(Error::RequiresOpenLink { operation }),
    }
}

/// Exact solution for the scenario's initial order, valid for all `t ≥ 0` when
/// no pass occurs (always the case for `κ ≤ 1`).
pub fn solve_blocking(scenario: &Scenario) -> Result<AnalyticSegment> {
    require_open(scenario, "the analytic solver")?;
    let positions: Vec<f64> = scenario.vehicles.iter().map(|v| v.x0).collect();
    let speeds = scenario.speeds();
    let n = positions.len();
    AnalyticSegment::fit(
        0.0,
        (0..n).collect(),
        reference_position(&positions),
        vec![ExpPoly::default(); n],
        0,
        &positions,
        &speeds,
        &scenario.params,
    )
}

/// Segments glued at passing events.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseTrajectory {
    pub segments: Vec<AnalyticSegment>,
    pub events: Vec<PassingEvent>,
    pub specs: Vec<VehicleSpec>,
    pub params: ModelParams,
}

impl PiecewiseTrajectory {
    pub fn t_start(&self) -> f64 {
        self.segments[0].t_start
    }

    pub fn t_end(&self) -> f64 {
        self.segments.last().map_or(f64::NAN, |s| s.t_end)
    }

    /// Segment owning `t`; at an event time the later segment is returned.
    pub fn segment_at(&self, t: f64) -> Result<&AnalyticSegment> {
        let (start, end) = (self.t_start(), self.t_end());
        if !(t >= start && t <= end) {
            return Err(Error::OutsideSpan { t, start, end });
        }
        let k = self.segments.partition_point(|s| s.t_start <= t);
        Ok(&self.segments[k.saturating_sub(1)])
    }

    /// Final front-to-back order.
    pub fn final_order(&self) -> &[usize] {
        &self
            .segments
            .last()
            .expect("trajectory has a segment")
            .order
    }

    /// Samples the trajectory every `dt` seconds, always including both ends.
    pub fn to_trace(&self, dt: f64) -> Result<SimTrace> {
        if !(dt > 0.0) {
            return Err(Error::invalid(format!(
                "sampling step must be > 0, got {dt}"
            )));
        }
        let (start, end) = (self.t_start(), self.t_end());
        if !end.is_finite() {
            return Err(Error::invalid("cannot sample an unbounded trajectory"));
        }
        let mut samples = TraceSamples::new(self.specs.len());
        let count = ((end - start) / dt - 1e-9).ceil().max(0.0) as usize;
        for k in 0..=count {
            let t = if k == count {
                end
            } else {
                start + k as f64 * dt
            };
            let (x, v) = evaluate(self, t)?;
            samples.push(t, &x, &v);
        }
        Ok(SimTrace {
            samples,
            topology: Topology::OpenLink,
            events: self.events.clone(),
        })
    }
}

/// Positions and velocities (by id) at time `t`.
pub fn evaluate(traj: &PiecewiseTrajectory, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let seg = traj.segment_at(t)?;
    let x = seg.positions(t)?;
    let v = ordered_velocities(&seg.order, &x, &traj.specs, &traj.params);
    Ok((x, v))
}
