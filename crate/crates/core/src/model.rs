//! Model state and the congestion/velocity laws.
//!
//! Each vehicle moves at `v_i = V_i (1 - Γ_i)` where the congestion factor
//! `Γ_i = (1/κ) Σ_{j ahead of i} exp((x_i - x_j)/ω)` weights every vehicle in
//! front of `i` by its distance. On an open link vehicle 0 leads and travels at
//! its maximum speed. On a ring every vehicle sees all others at their forward
//! wrapped distance.

use crate::error::{Error, Result};

/// Link geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Topology {
    /// Infinite one-directional link; vehicle 0 is the leader.
    OpenLink,
    /// Periodic road of circumference `length` metres.
    Ring { length: f64 },
}

impl Topology {
    pub fn is_ring(&self) -> bool {
        matches!(self, Topology::Ring { .. })
    }

    /// Reduces a position into `[0, L)` on a ring; identity on an open link.
    pub fn wrap(&self, x: f64) -> f64 {
        match *self {
            Topology::OpenLink => x,
            Topology::Ring { length } => {
                let p = x.rem_euclid(length);
                if p >= length {
                    0.0
                } else {
                    p
                }
            }
        }
    }
}

/// Per-vehicle constants: maximum free-flow speed (m/s) and initial position (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleSpec {
    pub id: usize,
    pub v_max: f64,
    pub x0: f64,
}

/// Capacity `κ` (dimensionless) and horizon `ω` (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub kappa: f64,
    pub omega: f64,
}

impl ModelParams {
    pub fn new(kappa: f64, omega: f64) -> Result<Self> {
        let params = ModelParams { kappa, omega };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::invalid(format!(
                "kappa must be finite and > 0, got {}",
                self.kappa
            )));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::invalid(format!(
                "omega must be finite and > 0, got {}",
                self.omega
            )));
        }
        Ok(())
    }
}

/// Positions of all vehicles at time `t`, indexed by vehicle id.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    pub t: f64,
    pub positions: Vec<f64>,
    pub topology: Topology,
}

impl LinkState {
    pub fn new(t: f64, positions: Vec<f64>, topology: Topology) -> Self {
        let positions = positions.into_iter().map(|x| topology.wrap(x)).collect();
        LinkState {
            t,
            positions,
            topology,
        }
    }
}

/// A vehicle overtaking the vehicle directly ahead of it at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassingEvent {
    pub t: f64,
    pub passer: usize,
    pub passed: usize,
}

/// Behaviour class implied by the capacity and the set of maximum speeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// No vehicle can ever pass another.
    Blocking,
    /// Passing is possible; initial positions decide the final order.
    PassingPartial,
    /// Every faster vehicle eventually ends up ahead of every slower one.
    PassingTotal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    /// All maximum speeds are equal, so no pass can complete whatever `κ` is.
    pub equal_speeds: bool,
    /// `max V_j / (V_j - V_i)` over pairs with `V_j > V_i`; `None` when all speeds are equal.
    pub sort_threshold: Option<f64>,
}

/// A validated fleet on a link.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: Topology,
    pub params: ModelParams,
    pub vehicles: Vec<VehicleSpec>,
}

impl Scenario {
    /// Builds a scenario from `(v_max, x0)` pairs; ids are assigned in order.
    pub fn from_pairs(
        topology: Topology,
        params: ModelParams,
        pairs: &[(f64, f64)],
    ) -> Result<Self> {
        let vehicles = pairs
            .iter()
            .enumerate()
            .map(|(id, &(v_max, x0))| VehicleSpec { id, v_max, x0 })
            .collect();
        Scenario::new(topology, params, vehicles)
    }

    pub fn new(
        topology: Topology,
        params: ModelParams,
        vehicles: Vec<VehicleSpec>,
    ) -> Result<Self> {
        params.validate()?;
        if vehicles.is_empty() {
            return Err(Error::invalid("a scenario needs at least one vehicle"));
        }
        if let Topology::Ring { length } = topology {
            if !(length.is_finite() && length > 0.0) {
                return Err(Error::invalid(format!(
                    "ring length must be finite and > 0, got {length}"
                )));
            }
        }
        for (k, v) in vehicles.iter().enumerate() {
            if v.id != k {
                return Err(Error::invalid(format!(
                    "vehicle ids must be contiguous from 0; found id {} at slot {k}",
                    v.id
                )));
            }
            if !(v.v_max.is_finite() && v.v_max > 0.0) {
                return Err(Error::invalid(format!(
                    "vehicle {k}: v_max must be finite and > 0, got {}",
                    v.v_max
                )));
            }
            if !v.x0.is_finite() {
                return Err(Error::invalid(format!(
                    "vehicle {k}: x0 must be finite, got {}",
                    v.x0
                )));
            }
        }
        if topology == Topology::OpenLink {
            for w in vehicles.windows(2) {
                if w[1].x0 > w[0].x0 {
                    return Err(Error::invalid(format!(
                        "open link vehicles must be ordered front to back: vehicle {} at {} is ahead of vehicle {} at {}",
                        w[1].id, w[1].x0, w[0].id, w[0].x0
                    )));
                }
            }
        }
        Ok(Scenario {
            topology,
            params,
            vehicles,
        })
    }

    pub fn len(&self) -> usize {
        self.vehicles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.vehicles.iter().map(|v| v.v_max).collect()
    }

    pub fn initial_state(&self) -> LinkState {
        LinkState::new(
            0.0,
            self.vehicles.iter().map(|v| v.x0).collect(),
            self.topology,
        )
    }

    /// Rejects initial states in which some vehicle would be prescribed a
    /// negative velocity, unless `permissive` is set.
    pub fn check_initial_load(&self, permissive: bool) -> Result<()> {
        if permissive {
            return Ok(());
        }
        let gammas = congestion_factors_naive(&self.initial_state(), &self.vehicles, &self.params)?;
        match gammas.iter().enumerate().find(|(_, &g)| g > 1.0) {
            Some((vehicle, &gamma)) => Err(Error::InitialOverload { vehicle, gamma }),
            None => Ok(()),
        }
    }
}

fn validate_state(state: &LinkState, specs: &[VehicleSpec]) -> Result<()> {
    if state.positions.is_empty() {
        return Err(Error::invalid("state has no vehicles"));
    }
    if state.positions.len() != specs.len() {
        return Err(Error::invalid(format!(
            "state has {} positions but {} vehicle specs",
            state.positions.len(),
            specs.len()
        )));
    }
    if let Some((i, x)) = state
        .positions
        .iter()
        .enumerate()
        .find(|(_, x)| !x.is_finite())
    {
        return Err(Error::invalid(format!(
            "vehicle {i} has non-finite position {x}"
        )));
    }
    Ok(())
}

/// Direct O(N²) evaluation of every congestion factor.
///
/// On an open link "ahead" is decided by position, with the lower index ahead
/// when two vehicles coincide. On a ring each other vehicle contributes once at
/// its forward distance `(x_j - x_i) mod L`.
pub fn congestion_factors_naive(
    state: &LinkState,
    specs: &[VehicleSpec],
    params: &ModelParams,
) -> Result<Vec<f64>> {
    validate_state(state, specs)?;
    params.validate()?;
    let x = &state.positions;
    let n = x.len();
    let mut gammas = vec![0.0; n];
    match state.topology {
        Topology::OpenLink => {
            for i in 0..n {
                let mut sum = 0.0;
                for j in 0..n {
                    let ahead = x[j] > x[i] || (x[j] == x[i] && j < i);
                    if ahead {
                        sum += ((x[i] - x[j]) / params.omega).exp();
                    }
                }
                gammas[i] = sum / params.kappa;
            }
        }
        Topology::Ring { length } => {
            for i in 0..n {
                let mut sum = 0.0;
                for j in 0..n {
                    if j != i {
                        let d = (x[j] - x[i]).rem_euclid(length);
                        sum += (-d / params.omega).exp();
                    }
                }
                gammas[i] = sum / params.kappa;
            }
        }
    }
    Ok(gammas)
}

/// Linear-time congestion factors.
///
/// On an open link the positions must already be ordered front to back by
/// index. The prefix sum `Σ_{j<i} exp(-x_j/ω)` is carried relative to the most
/// recent vehicle, so every multiplier is `exp(-gap/ω) ≤ 1` and nothing
/// overflows however far the fleet spreads. On a ring the vehicles are sorted
/// by wrapped position and the same recursion runs over the ring unrolled once.
pub fn congestion_factors_fast(
    state: &LinkState,
    specs: &[VehicleSpec],
    params: &ModelParams,
) -> Result<Vec<f64>> {
    validate_state(state, specs)?;
    params.validate()?;
    let mut gammas = vec![0.0; state.positions.len()];
    match state.topology {
        Topology::OpenLink => {
            if let Some(w) = state.positions.windows(2).position(|w| w[1] > w[0]) {
                return Err(Error::invalid(format!(
                    "fast open-link kernel needs positions ordered by index; vehicle {} is ahead of vehicle {}",
                    w + 1,
                    w
                )));
            }
            ordered_open_congestion(&state.positions, params, &mut gammas);
        }
        Topology::Ring { length } => {
            let mut scratch = RingScratch::default();
            ring_congestion(&state.positions, length, params, &mut scratch, &mut gammas);
        }
    }
    Ok(gammas)
}

/// Open-link congestion for positions listed front to back.
pub(crate) fn ordered_open_congestion(
    front_to_back: &[f64],
    params: &ModelParams,
    out: &mut [f64],
) {
    let inv_kappa = 1.0 / params.kappa;
    let mut carried = 0.0;
    out[0] = 0.0;
    for i in 1..front_to_back.len() {
        carried =
            ((front_to_back[i] - front_to_back[i - 1]) / params.omega).exp() * (1.0 + carried);
        out[i] = carried * inv_kappa;
    }
}

#[derive(Debug, Default)]
pub(crate) struct RingScratch {
    order: Vec<usize>,
    wrapped: Vec<f64>,
    group_pos: Vec<f64>,
    group_count: Vec<f64>,
    group_of: Vec<usize>,
    forward: Vec<f64>,
}

/// Ring congestion in O(N log N). Positions may be unwrapped.
pub(crate) fn ring_congestion(
    positions: &[f64],
    length: f64,
    params: &ModelParams,
    s: &mut RingScratch,
    out: &mut [f64],
) {
    let n = positions.len();
    let topo = Topology::Ring { length };
    s.wrapped.clear();
    s.wrapped.extend(positions.iter().map(|&x| topo.wrap(x)));
    s.order.clear();
    s.order.extend(0..n);
    let wrapped = &s.wrapped;
    s.order
        .sort_by(|&a, &b| wrapped[a].total_cmp(&wrapped[b]).then(a.cmp(&b)));

    // Coincident vehicles form one group; members see each other at distance 0.
    s.group_pos.clear();
    s.group_count.clear();
    s.group_of.resize(n, 0);
    for &id in &s.order {
        let p = s.wrapped[id];
        if s.group_pos.last() != Some(&p) {
            s.group_pos.push(p);
            s.group_count.push(0.0);
        }
        *s.group_count.last_mut().unwrap() += 1.0;
        s.group_of[id] = s.group_pos.len() - 1;
    }

    // Backward recursion over the groups followed by their images shifted by L.
    let g = s.group_pos.len();
    let pos_at = |k: usize| {
        if k < g {
            s.group_pos[k]
        } else {
            s.group_pos[k - g] + length
        }
    };
    s.forward.clear();
    s.forward.resize(2 * g, 0.0);
    for k in (0..2 * g - 1).rev() {
        let next_count = s.group_count[(k + 1) % g];
        s.forward[k] =
            (-(pos_at(k + 1) - pos_at(k)) / params.omega).exp() * (next_count + s.forward[k + 1]);
    }
    let lap = (-length / params.omega).exp();
    let inv_kappa = 1.0 / params.kappa;
    for id in 0..n {
        let k = s.group_of[id];
        // Drop the group's own image one lap ahead and everything beyond it.
        let one_lap = s.forward[k] - lap * (s.group_count[k] + s.forward[k + g]);
        out[id] = ((s.group_count[k] - 1.0) + one_lap.max(0.0)) * inv_kappa;
    }
}

/// `v_i = V_i (1 - Γ_i)`.
pub fn velocities_from_gammas(specs: &[VehicleSpec], gammas: &[f64]) -> Vec<f64> {
    specs
        .iter()
        .zip(gammas)
        .map(|(s, g)| s.v_max * (1.0 - g))
        .collect()
}

/// Velocities of every vehicle in `state`.
pub fn velocities(
    state: &LinkState,
    specs: &[VehicleSpec],
    params: &ModelParams,
) -> Result<Vec<f64>> {
    let sorted = state.positions.windows(2).all(|w| w[1] <= w[0]);
    let gammas = match state.topology {
        Topology::OpenLink if !sorted => congestion_factors_naive(state, specs, params)?,
        _ => congestion_factors_fast(state, specs, params)?,
    };
    Ok(velocities_from_gammas(specs, &gammas))
}

/// Whether a faster follower at the same position as its leader completes the pass:
/// `κ (1 - Γ_i) > V_{i+1} / (V_{i+1} - V_i)`.
pub fn passing_condition(
    kappa: f64,
    gamma_leader: f64,
    v_leader: f64,
    v_follower: f64,
) -> Result<bool> {
    if v_follower <= v_leader {
        return Err(Error::invalid(format!(
            "passing condition needs a faster follower (follower {v_follower} <= leader {v_leader})"
        )));
    }
    if !(0.0..=1.0).contains(&gamma_leader) {
        return Err(Error::invalid(format!(
            "leader congestion factor must lie in [0, 1], got {gamma_leader}"
        )));
    }
    Ok(kappa * (1.0 - gamma_leader) > v_follower / (v_follower - v_leader))
}

/// Largest `V_j / (V_j - V_i)` over pairs with `V_j > V_i`.
pub fn sort_threshold(speeds: &[f64]) -> Option<f64> {
    let mut distinct: Vec<f64> = speeds.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    // For a fixed faster speed the ratio is largest against the closest slower one.
    distinct
        .windows(2)
        .map(|w| w[1] / (w[1] - w[0]))
        .max_by(f64::total_cmp)
}

pub fn classify_regime(specs: &[VehicleSpec], params: &ModelParams) -> RegimeReport {
    let speeds: Vec<f64> = specs.iter().map(|s| s.v_max).collect();
    let threshold = sort_threshold(&speeds);
    let regime = match threshold {
        _ if params.kappa <= 1.0 => Regime::Blocking,
        None => Regime::Blocking,
        Some(m) if params.kappa > m => Regime::PassingTotal,
        Some(_) => Regime::PassingPartial,
    };
    RegimeReport {
        regime,
        equal_speeds: threshold.is_none(),
        sort_threshold: threshold,
    }
}

/// Density (veh/m) at which an infinite uniformly spaced queue reaches `Γ = 1`.
pub fn max_jam_density(params: &ModelParams) -> f64 {
    1.0 / (params.omega * (1.0 / params.kappa).ln_1p())
}
