//! Passing-event detection and the piecewise event loop.

use super::{reference_position, require_open, AnalyticSegment, PiecewiseTrajectory};
use crate::error::{Error, Result};
use crate::model::{ModelParams, PassingEvent, Scenario, VehicleSpec};

/// Root-scanning controls for [`next_passing_event`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Grid step (s) on which gap sign changes are looked for.
    pub step: f64,
    /// Bisection stops once the bracket is narrower than this (s).
    pub time_tolerance: f64,
    /// How many times [`solve_passing`] may halve `step` after a failed minimality check.
    pub max_halvings: u32,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            step: 0.05,
            time_tolerance: 1e-10,
            max_halvings: 10,
        }
    }
}

/// Earliest time at which a faster follower reaches its leader within
/// `[t_start, min(t_end, until)]`.
///
/// Every adjacent pair whose follower has the larger maximum speed is scanned
/// for the first grid point with a negative gap; the crossing is then bracketed
/// by bisection. At the start of the chosen bracket every adjacent gap must
/// still be non-negative, otherwise some other pass was skipped and the grid
/// is too coarse.
pub fn next_passing_event(
    segment: &AnalyticSegment,
    specs: &[VehicleSpec],
    until: f64,
    options: &ScanOptions,
) -> Result<Option<PassingEvent>> {
    let order = &segment.order;
    let candidates: Vec<usize> = (0..order.len().saturating_sub(1))
        .filter(|&p| specs[order[p + 1]].v_max > specs[order[p]].v_max)
        .collect();
    if candidates.is_empty() {
        return Ok(None);
    }
    let t0 = segment.t_start;
    let span = until.min(segment.t_end) - t0;
    if !(span >= 0.0) {
        return Ok(None);
    }
    let gap = |p: usize, tau: f64| segment.gap(order[p], order[p + 1], t0 + tau);

    let mut crossed: Vec<(usize, f64, f64)> = Vec::new();
    for &p in &candidates {
        if gap(p, 0.0)? < 0.0 {
            crossed.push((p, 0.0, 0.0));
        }
    }
    let mut prev = 0.0;
    let mut k = 0usize;
    while crossed.is_empty() && prev < span {
        k += 1;
        let tau = (k as f64 * options.step).min(span);
        for &p in &candidates {
            if gap(p, tau)? < 0.0 {
                let (mut lo, mut hi) = (prev, tau);
                while hi - lo > options.time_tolerance {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if gap(p, mid)? < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                crossed.push((p, lo, hi));
            }
        }
        prev = tau;
    }
    let Some(&(p, lo, hi)) = crossed
        .iter()
        .min_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)))
    else {
        return Ok(None);
    };

    let mut already = 0;
    for q in 0..order.len() - 1 {
        if gap(q, lo)? < 0.0 {
            already += 1;
        }
    }
    if already > 0 {
        return Err(Error::Minimality {
            t: t0 + hi,
            crossed: already + 1,
            step: options.step,
        });
    }
    Ok(Some(PassingEvent {
        t: t0 + hi,
        passer: order[p + 1],
        passed: order[p],
    }))
}

/// Piecewise-exact solution up to `horizon`.
///
/// After each event the passing pair swaps; the rows of the vehicles ahead of
/// the pair are carried over (shifted to the new time origin) and only the pair
/// and its followers are re-solved from their positions at the event.
pub fn solve_passing(
    scenario: &Scenario,
    horizon: f64,
    options: &ScanOptions,
) -> Result<PiecewiseTrajectory> {
    require_open(scenario, "the analytic solver")?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!(
            "horizon must be finite and >= 0, got {horizon}"
        )));
    }
    let specs = &scenario.vehicles;
    let params: ModelParams = scenario.params;
    let speeds = scenario.speeds();
    let n = specs.len();
    let limit = n * (n - 1) / 2;

    let mut current = super::solve_blocking(scenario)?;
    let mut segments = Vec::new();
    let mut events: Vec<PassingEvent> = Vec::new();
    loop {
        let mut scan = *options;
        let mut halvings = 0;
        let found = loop {
            match next_passing_event(&current, specs, horizon, &scan) {
                Err(Error::Minimality { .. }) if halvings < options.max_halvings => {
                    halvings += 1;
                    scan.step *= 0.5;
                    log::debug!(
                        "minimality check failed; rescanning with step {}",
                        scan.step
                    );
                }
                other => break other?,
            }
        };
        let Some(event) = found else {
            current.t_end = horizon;
            segments.push(current);
            break;
        };
        events.push(event);
        if events.len() > limit {
            return Err(Error::EventLimit {
                count: events.len(),
                limit,
            });
        }

        let positions = current.positions(event.t)?;
        let p = current
            .order
            .iter()
            .position(|&id| id == event.passed)
            .expect("passed vehicle is in the order");
        let mut order = current.order.clone();
        order.swap(p, p + 1);

        let x_ref = reference_position(&positions);
        let delta = event.t - current.t_start;
        let log_scale = (x_ref - current.x_ref) / params.omega;
        let mut rows = vec![Default::default(); n];
        for &id in &order[..p] {
            rows[id] = current.rows[id].rebased(delta, log_scale, params.omega);
        }
        let next =
            AnalyticSegment::fit(event.t, order, x_ref, rows, p, &positions, &speeds, &params)?;
        current.t_end = event.t;
        segments.push(std::mem::replace(&mut current, next));
    }
    Ok(PiecewiseTrajectory {
        segments,
        events,
        specs: specs.clone(),
        params,
    })
}
