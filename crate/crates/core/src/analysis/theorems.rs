//! Executable checks of the model's qualitative guarantees on a finished run.

use std::fmt;

use crate::model::{classify_regime, Regime, Scenario, Topology};
use crate::numeric::SimTrace;

/// Velocities below this count as negative.
pub const VELOCITY_FLOOR: f64 = -1e-12;

/// Growth (in units of `ω`) the trailing gap must show between the midpoint and
/// the end of the run for the platoon-splitting check.
pub const SPLIT_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Check {
    /// (a) velocities stay non-negative.
    NonNegativeVelocity,
    /// (b) only a faster vehicle passes a slower one.
    NoSlowOvertaking,
    /// (c) `κ ≤ 1` allows no passing at all.
    BlockingNoPass,
    /// (d) order changes stop; at most one pass per pair.
    OrderSettles,
    /// (e) above the sorting threshold the fleet ends sorted by speed.
    SortedAboveThreshold,
    /// (f) two vehicles: a pass happens exactly when `κ > V_1 / (V_1 - V_0)`.
    TwoVehicleThreshold,
    /// (g) a trailing vehicle no faster than the leader drifts away from a platoon.
    PlatoonSplit,
}

impl Check {
    pub const ALL: [Check; 7] = [
        Check::NonNegativeVelocity,
        Check::NoSlowOvertaking,
        Check::BlockingNoPass,
        Check::OrderSettles,
        Check::SortedAboveThreshold,
        Check::TwoVehicleThreshold,
        Check::PlatoonSplit,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Check::NonNegativeVelocity => "(a) non-negative velocity",
            Check::NoSlowOvertaking => "(b) no overtaking by slower vehicles",
            Check::BlockingNoPass => "(c) no passing when kappa <= 1",
            Check::OrderSettles => "(d) order changes cease",
            Check::SortedAboveThreshold => "(e) sorted above the threshold",
            Check::TwoVehicleThreshold => "(f) two-vehicle passing threshold",
            Check::PlatoonSplit => "(g) platoon splitting",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    /// First counterexample found.
    Fail(String),
    NotApplicable,
}

impl Verdict {
    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail(_))
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "pass"),
            Verdict::Fail(why) => write!(f, "FAIL: {why}"),
            Verdict::NotApplicable => write!(f, "n/a"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremReport {
    pub checks: Vec<(Check, Verdict)>,
    pub events: usize,
    /// Time of the last order change; no change happens after it within the run.
    pub t_last: Option<f64>,
    pub horizon: f64,
}

impl TheoremReport {
    pub fn verdict(&self, check: Check) -> &Verdict {
        &self
            .checks
            .iter()
            .find(|(c, _)| *c == check)
            .expect("every check is reported")
            .1
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|(_, v)| !v.is_fail())
    }
}

impl fmt::Display for TheoremReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "passing events: {}", self.events)?;
        match self.t_last {
            Some(t) => writeln!(
                f,
                "last order change: t = {t} s (none after it up to {} s)",
                self.horizon
            )?,
            None => writeln!(f, "no order change up to {} s", self.horizon)?,
        }
        for (check, verdict) in &self.checks {
            writeln!(f, "{}: {verdict}", check.label())?;
        }
        Ok(())
    }
}

/// Runs every check on a finished trace of `scenario`.
///
/// Analytic trajectories are checked through their sampled trace, so both
/// solvers go through the same code.
pub fn verify_theorems(trace: &SimTrace, scenario: &Scenario) -> TheoremReport {
    let specs = &scenario.vehicles;
    let samples = &trace.samples;
    let horizon = samples.times.last().copied().unwrap_or(0.0);
    let open = trace.topology == Topology::OpenLink;
    let kappa = scenario.params.kappa;
    let n = specs.len();

    let mut checks = Vec::with_capacity(Check::ALL.len());

    let mut worst: Option<(f64, usize, f64)> = None;
    'outer: for k in 0..samples.len() {
        for (id, &v) in samples.velocities(k).iter().enumerate() {
            if v < VELOCITY_FLOOR {
                worst = Some((samples.times[k], id, v));
                break 'outer;
            }
        }
    }
    checks.push((
        Check::NonNegativeVelocity,
        match worst {
            None => Verdict::Pass,
            Some((t, id, v)) => {
                Verdict::Fail(format!("vehicle {id} has velocity {v:e} m/s at t = {t} s"))
            }
        },
    ));

    let slow = trace
        .events
        .iter()
        .find(|e| specs[e.passer].v_max <= specs[e.passed].v_max);
    checks.push((
        Check::NoSlowOvertaking,
        match slow {
            None => Verdict::Pass,
            Some(e) => Verdict::Fail(format!(
                "vehicle {} (V = {}) passed vehicle {} (V = {}) at t = {} s",
                e.passer, specs[e.passer].v_max, e.passed, specs[e.passed].v_max, e.t
            )),
        },
    ));

    checks.push((
        Check::BlockingNoPass,
        if kappa > 1.0 {
            Verdict::NotApplicable
        } else if let Some(e) = trace.events.first() {
            Verdict::Fail(format!(
                "kappa = {kappa} but vehicle {} passed {} at t = {} s",
                e.passer, e.passed, e.t
            ))
        } else {
            Verdict::Pass
        },
    ));

    let limit = n * n.saturating_sub(1) / 2;
    checks.push((
        Check::OrderSettles,
        if !open {
            Verdict::NotApplicable
        } else if trace.events.len() > limit {
            Verdict::Fail(format!(
                "{} order changes exceed one per pair ({limit})",
                trace.events.len()
            ))
        } else {
            Verdict::Pass
        },
    ));

    let regime = classify_regime(specs, &scenario.params);
    checks.push((
        Check::SortedAboveThreshold,
        if !open || regime.regime != Regime::PassingTotal || samples.is_empty() {
            Verdict::NotApplicable
        } else {
            let order = trace.final_order();
            match order.windows(2).find(|w| specs[w[0]].v_max < specs[w[1]].v_max) {
                None => Verdict::Pass,
                Some(w) => Verdict::Fail(format!(
                    "final order {order:?}: vehicle {} (V = {}) is still behind vehicle {} (V = {})",
                    w[1], specs[w[1]].v_max, w[0], specs[w[0]].v_max
                )),
            }
        },
    ));

    checks.push((
        Check::TwoVehicleThreshold,
        if !open || n != 2 || specs[0].v_max == specs[1].v_max {
            Verdict::NotApplicable
        } else {
            let (v0, v1) = (specs[0].v_max, specs[1].v_max);
            let expected = v1 > v0 && kappa > v1 / (v1 - v0);
            let observed = !trace.events.is_empty();
            if expected == observed {
                Verdict::Pass
            } else if expected {
                Verdict::Fail(format!(
                    "kappa = {kappa} > {} but no pass within {horizon} s",
                    v1 / (v1 - v0)
                ))
            } else {
                Verdict::Fail(format!(
                    "pass observed at t = {} s but kappa = {kappa} is below the threshold",
                    trace.events[0].t
                ))
            }
        },
    ));

    checks.push((Check::PlatoonSplit, platoon_split(trace, scenario)));

    TheoremReport {
        checks,
        events: trace.events.len(),
        t_last: trace.events.last().map(|e| e.t),
        horizon,
    }
}

fn platoon_split(trace: &SimTrace, scenario: &Scenario) -> Verdict {
    let specs = &scenario.vehicles;
    let samples = &trace.samples;
    if trace.topology != Topology::OpenLink || !trace.events.is_empty() || samples.len() < 3 {
        return Verdict::NotApplicable;
    }
    let v0 = specs[0].v_max;
    let Some(n) = (2..specs.len()).find(|&n| specs[n].v_max <= v0) else {
        return Verdict::NotApplicable;
    };
    if specs[1..n].iter().any(|s| s.v_max <= v0) {
        return Verdict::NotApplicable;
    }
    let end = samples.len() - 1;
    let t_mid = 0.5 * (samples.times[0] + samples.times[end]);
    let mid = samples.times.partition_point(|&t| t < t_mid).min(end);
    let gap = |k: usize| samples.positions(k)[n - 1] - samples.positions(k)[n];
    let margin = SPLIT_MARGIN * scenario.params.omega;
    let (g_mid, g_end) = (gap(mid), gap(end));
    if g_end > g_mid + margin {
        Verdict::Pass
    } else {
        Verdict::Fail(format!(
            "gap ahead of vehicle {n} went from {g_mid} m at t = {} s to {g_end} m at t = {} s (needs growth > {margin} m)",
            samples.times[mid], samples.times[end]
        ))
    }
}
