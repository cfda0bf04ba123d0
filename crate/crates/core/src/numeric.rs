//! Fixed-step RK4 integration of the model, on open links and rings.
//!
//! On an open link the engine keeps the current front-to-back order as discrete
//! state. Within a step the right-hand side uses that frozen order, which keeps
//! it smooth; when a step ends with an adjacent pair out of order the crossing
//! time is located on the cubic Hermite interpolant of the step, the step is
//! redone up to that instant, the pair swaps and integration resumes.

use crate::error::{Error, Result};
use crate::model::{
    ordered_open_congestion, ring_congestion, velocities, LinkState, ModelParams, PassingEvent,
    RingScratch, Scenario, Topology, VehicleSpec,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Step size (s).
    pub dt: f64,
    /// End time (s).
    pub horizon: f64,
    /// Record every k-th step.
    pub sample_every: usize,
    /// Refine each step by step doubling until the error estimate meets `tolerance`.
    pub adaptive: bool,
    /// Relative tolerance for adaptive refinement.
    pub tolerance: f64,
    /// Accept initial states with some `Γ_i > 1`.
    pub permissive: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 0.01,
            horizon: 100.0,
            sample_every: 1,
            adaptive: false,
            tolerance: 1e-8,
            permissive: false,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid(format!(
                "dt must be finite and > 0, got {}",
                self.dt
            )));
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::invalid(format!(
                "horizon must be finite and >= 0, got {}",
                self.horizon
            )));
        }
        if self.sample_every == 0 {
            return Err(Error::invalid("sample_every must be >= 1"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid(format!(
                "tolerance must be finite and > 0, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// Time-sampled positions and velocities, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSamples {
    n_vehicles: usize,
    pub times: Vec<f64>,
    positions: Vec<f64>,
    velocities: Vec<f64>,
}

impl TraceSamples {
    pub fn new(n_vehicles: usize) -> Self {
        TraceSamples {
            n_vehicles,
            times: Vec::new(),
            positions: Vec::new(),
            velocities: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, positions: &[f64], velocities: &[f64]) {
        debug_assert_eq!(positions.len(), self.n_vehicles);
        debug_assert_eq!(velocities.len(), self.n_vehicles);
        self.times.push(t);
        self.positions.extend_from_slice(positions);
        self.velocities.extend_from_slice(velocities);
    }

    pub fn n_vehicles(&self) -> usize {
        self.n_vehicles
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn positions(&self, sample: usize) -> &[f64] {
        &self.positions[sample * self.n_vehicles..(sample + 1) * self.n_vehicles]
    }

    pub fn velocities(&self, sample: usize) -> &[f64] {
        &self.velocities[sample * self.n_vehicles..(sample + 1) * self.n_vehicles]
    }
}

/// Output of [`simulate`]. Ring positions are reduced into `[0, L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub samples: TraceSamples,
    pub topology: Topology,
    /// Adjacent-order swaps (open link only).
    pub events: Vec<PassingEvent>,
}

impl SimTrace {
    /// Front-to-back order at the last sample (open link).
    pub fn final_order(&self) -> Vec<usize> {
        let last = self.samples.positions(self.samples.len() - 1);
        order_by_position(last)
    }
}

pub(crate) fn order_by_position(positions: &[f64]) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..positions.len()).collect();
    ids.sort_by(|&a, &b| positions[b].total_cmp(&positions[a]).then(a.cmp(&b)));
    ids
}

/// Velocities prescribed by the model; the right-hand side of the ODE.
pub fn derivative(
    state: &LinkState,
    specs: &[VehicleSpec],
    params: &ModelParams,
) -> Result<Vec<f64>> {
    velocities(state, specs, params)
}

enum Rhs {
    /// Speeds listed in the current front-to-back order.
    Open { speeds: Vec<f64>, gammas: Vec<f64> },
    /// Speeds by id.
    Ring {
        speeds: Vec<f64>,
        gammas: Vec<f64>,
        length: f64,
        scratch: RingScratch,
    },
}

impl Rhs {
    fn eval(&mut self, params: &ModelParams, x: &[f64], out: &mut [f64]) {
        match self {
            Rhs::Open { speeds, gammas } => {
                ordered_open_congestion(x, params, gammas);
                for ((o, v), g) in out.iter_mut().zip(speeds.iter()).zip(gammas.iter()) {
                    *o = v * (1.0 - g);
                }
            }
            Rhs::Ring {
                speeds,
                gammas,
                length,
                scratch,
            } => {
                ring_congestion(x, *length, params, scratch, gammas);
                for ((o, v), g) in out.iter_mut().zip(speeds.iter()).zip(gammas.iter()) {
                    *o = v * (1.0 - g);
                }
            }
        }
    }
}

struct Work {
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Work {
    fn new(n: usize) -> Self {
        Work {
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

fn rk4(
    rhs: &mut Rhs,
    params: &ModelParams,
    x: &[f64],
    k1: &[f64],
    h: f64,
    w: &mut Work,
    out: &mut [f64],
) {
    let half = 0.5 * h;
    for i in 0..x.len() {
        w.tmp[i] = x[i] + half * k1[i];
    }
    rhs.eval(params, &w.tmp, &mut w.k2);
    for i in 0..x.len() {
        w.tmp[i] = x[i] + half * w.k2[i];
    }
    rhs.eval(params, &w.tmp, &mut w.k3);
    for i in 0..x.len() {
        w.tmp[i] = x[i] + h * w.k3[i];
    }
    rhs.eval(params, &w.tmp, &mut w.k4);
    let sixth = h / 6.0;
    for i in 0..x.len() {
        out[i] = x[i] + sixth * (k1[i] + 2.0 * w.k2[i] + 2.0 * w.k3[i] + w.k4[i]);
    }
}

/// One step of size `h`, optionally refined by step doubling.
#[allow(clippy::too_many_arguments)]
fn step(
    rhs: &mut Rhs,
    params: &ModelParams,
    config: &IntegratorConfig,
    x: &[f64],
    k1: &[f64],
    h: f64,
    w: &mut Work,
    out: &mut [f64],
    depth: u32,
) {
    if !config.adaptive {
        rk4(rhs, params, x, k1, h, w, out);
        return;
    }
    let n = x.len();
    let mut full = vec![0.0; n];
    rk4(rhs, params, x, k1, h, w, &mut full);
    let mut mid = vec![0.0; n];
    rk4(rhs, params, x, k1, 0.5 * h, w, &mut mid);
    let mut k_mid = vec![0.0; n];
    rhs.eval(params, &mid, &mut k_mid);
    rk4(rhs, params, &mid, &k_mid, 0.5 * h, w, out);
    let err = out
        .iter()
        .zip(&full)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / 15.0;
    let scale = out.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if err <= config.tolerance * scale || depth >= 20 {
        return;
    }
    step(rhs, params, config, x, k1, 0.5 * h, w, &mut mid, depth + 1);
    rhs.eval(params, &mid, &mut k_mid);
    step(
        rhs,
        params,
        config,
        &mid,
        &k_mid,
        0.5 * h,
        w,
        out,
        depth + 1,
    );
}

fn hermite(x0: f64, f0: f64, x1: f64, f1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * x0
        + (s3 - 2.0 * s2 + s) * h * f0
        + (-2.0 * s3 + 3.0 * s2) * x1
        + (s3 - s2) * h * f1
}

/// First time in `(0, h]` at which the interpolated gap `x[p] - x[p+1]` turns negative.
fn crossing_offset(p: usize, x0: &[f64], f0: &[f64], x1: &[f64], f1: &[f64], h: f64) -> f64 {
    let gap = |s: f64| {
        hermite(x0[p], f0[p], x1[p], f1[p], h, s)
            - hermite(x0[p + 1], f0[p + 1], x1[p + 1], f1[p + 1], h, s)
    };
    if x0[p] - x0[p + 1] < 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..64 {
        if (hi - lo) * h <= 1e-13 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if gap(mid) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi * h
}

fn check_finite(x: &[f64], step: usize, t: f64) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(vehicle) => Err(Error::NonFiniteState { step, t, vehicle }),
        None => Ok(()),
    }
}

/// Integrates the scenario with classic RK4 steps of `config.dt`.
pub fn simulate(scenario: &Scenario, config: &IntegratorConfig) -> Result<SimTrace> {
    config.validate()?;
    scenario.check_initial_load(config.permissive)?;
    let params = scenario.params;
    let n = scenario.len();
    let topology = scenario.topology;
    // Open link: state is held front to back, `order[p]` is the id at slot p.
    let mut order: Vec<usize> = (0..n).collect();
    let mut x: Vec<f64> = scenario.vehicles.iter().map(|v| v.x0).collect();
    let mut rhs = match topology {
        Topology::OpenLink => Rhs::Open {
            speeds: scenario.speeds(),
            gammas: vec![0.0; n],
        },
        Topology::Ring { length } => Rhs::Ring {
            speeds: scenario.speeds(),
            gammas: vec![0.0; n],
            length,
            scratch: RingScratch::default(),
        },
    };
    let mut f = vec![0.0; n];
    rhs.eval(&params, &x, &mut f);

    let mut samples = TraceSamples::new(n);
    let mut by_id_x = vec![0.0; n];
    let mut by_id_v = vec![0.0; n];
    let mut record = |t: f64, x: &[f64], f: &[f64], order: &[usize], samples: &mut TraceSamples| {
        for (p, &id) in order.iter().enumerate() {
            by_id_x[id] = topology.wrap(x[p]);
            by_id_v[id] = f[p];
        }
        samples.push(t, &by_id_x, &by_id_v);
    };
    record(0.0, &x, &f, &order, &mut samples);

    let steps = if config.horizon == 0.0 {
        0
    } else {
        (config.horizon / config.dt - 1e-9).ceil() as usize
    };
    let mut work = Work::new(n);
    let mut x1 = vec![0.0; n];
    let mut f1 = vec![0.0; n];
    let mut events = Vec::new();
    let mut t = 0.0;
    for k in 1..=steps {
        let target = if k == steps {
            config.horizon
        } else {
            k as f64 * config.dt
        };
        let mut swaps_this_step = 0;
        while target - t > 0.0 {
            let h = target - t;
            step(&mut rhs, &params, config, &x, &f, h, &mut work, &mut x1, 0);
            rhs.eval(&params, &x1, &mut f1);
            check_finite(&x1, k, target)?;

            let crossing = match topology {
                Topology::Ring { .. } => None,
                Topology::OpenLink => (0..n.saturating_sub(1))
                    .filter(|&p| x1[p] - x1[p + 1] < 0.0)
                    .map(|p| (crossing_offset(p, &x, &f, &x1, &f1, h), p))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))),
            };
            let Some((theta, p)) = crossing else {
                std::mem::swap(&mut x, &mut x1);
                std::mem::swap(&mut f, &mut f1);
                t = target;
                break;
            };

            swaps_this_step += 1;
            if swaps_this_step > n * n {
                return Err(Error::NonFiniteState {
                    step: k,
                    t,
                    vehicle: order[p],
                });
            }
            if theta > 0.0 {
                step(
                    &mut rhs, &params, config, &x, &f, theta, &mut work, &mut x1, 0,
                );
                check_finite(&x1, k, t + theta)?;
                std::mem::swap(&mut x, &mut x1);
                t = if theta >= h { target } else { t + theta };
            }
            x.swap(p, p + 1);
            order.swap(p, p + 1);
            if let Rhs::Open { speeds, .. } = &mut rhs {
                speeds.swap(p, p + 1);
            }
            if x[p] < x[p + 1] {
                x[p + 1] = x[p];
            }
            events.push(PassingEvent {
                t,
                passer: order[p],
                passed: order[p + 1],
            });
            rhs.eval(&params, &x, &mut f);
        }
        if k % config.sample_every == 0 || k == steps {
            record(t, &x, &f, &order, &mut samples);
        }
    }
    Ok(SimTrace {
        samples,
        topology,
        events,
    })
}

/// Ring of `round(ρL)` identical vehicles: `⌊ρ_jam f L⌋` spread evenly over an
/// arc of length `f L` starting at 0, the rest spread evenly over the remainder.
pub fn build_two_region_ring(
    length: f64,
    rho_global: f64,
    jam_fraction: f64,
    rho_jam: f64,
    v_max: f64,
    params: ModelParams,
) -> Result<Scenario> {
    for (name, value) in [
        ("ring length", length),
        ("global density", rho_global),
        ("jam density", rho_jam),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::invalid(format!(
                "{name} must be finite and > 0, got {value}"
            )));
        }
    }
    if !(0.0..=1.0).contains(&jam_fraction) {
        return Err(Error::invalid(format!(
            "jam fraction must lie in [0, 1], got {jam_fraction}"
        )));
    }
    let total = (rho_global * length).round() as usize;
    if total == 0 {
        return Err(Error::invalid(format!(
            "density {rho_global} on a {length} m ring places no vehicle"
        )));
    }
    let jam_len = jam_fraction * length;
    let jam_count = (rho_jam * jam_len + 1e-9).floor() as usize;
    if jam_count > total {
        return Err(Error::invalid(format!(
            "jam region needs {jam_count} vehicles but the ring only holds {total} at density {rho_global}"
        )));
    }
    let rest = total - jam_count;
    let rest_len = length - jam_len;
    if rest > 0 && rest_len <= 0.0 {
        return Err(Error::invalid(format!(
            "{rest} vehicles remain outside a jam region that covers the whole ring"
        )));
    }
    let mut pairs = Vec::with_capacity(total);
    for k in 0..jam_count {
        pairs.push((v_max, k as f64 * jam_len / jam_count as f64));
    }
    for k in 0..rest {
        pairs.push((v_max, jam_len + k as f64 * rest_len / rest as f64));
    }
    Scenario::from_pairs(Topology::Ring { length }, params, &pairs)
}
