use crate::error::{Error, Result};
use crate::model::{ModelParams, VehicleSpec};

/// Steady speed of a uniformly spaced ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingEquilibrium {
    /// `max(raw, 0)`.
    pub v_eq: f64,
    /// Unclamped closed-form value; negative above capacity.
    pub raw: f64,
    pub over_capacity: bool,
}

/// Closed form for `N = ρL` identical vehicles evenly spaced on a ring of length `L`.
///
/// Each vehicle sees the other `N - 1` at gaps `s, 2s, ...` with `s = 1/ρ`, a
/// finite geometric series.
pub fn ring_equilibrium_velocity(
    rho: f64,
    params: &ModelParams,
    length: f64,
    v_max: f64,
) -> Result<RingEquilibrium> {
    params.validate()?;
    for (name, value) in [
        ("density", rho),
        ("ring length", length),
        ("maximum speed", v_max),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::invalid(format!(
                "{name} must be finite and > 0, got {value}"
            )));
        }
    }
    if rho * length < 1.0 - 1e-12 {
        return Err(Error::invalid(format!(
            "density {rho} on a {length} m ring holds fewer than one vehicle"
        )));
    }
    let (kappa, omega) = (params.kappa, params.omega);
    let ratio = (-length / omega).exp_m1() / (-1.0 / (rho * omega)).exp_m1();
    let raw = v_max * (1.0 + 1.0 / kappa - ratio / kappa);
    Ok(RingEquilibrium {
        v_eq: raw.max(0.0),
        raw,
        over_capacity: raw < 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramPoint {
    pub rho: f64,
    pub v_eq: f64,
    pub q: f64,
}

/// Flow-density curve sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramSeries {
    pub points: Vec<DiagramPoint>,
    /// Index of the largest flow on the grid.
    pub peak_index: usize,
}

impl DiagramSeries {
    pub fn peak(&self) -> DiagramPoint {
        self.points[self.peak_index]
    }
}

pub fn fundamental_diagram(
    params: &ModelParams,
    v_max: f64,
    length: f64,
    rho_grid: &[f64],
) -> Result<DiagramSeries> {
    if rho_grid.is_empty() {
        return Err(Error::invalid("density grid is empty"));
    }
    if rho_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("density grid must be strictly ascending"));
    }
    let mut points = Vec::with_capacity(rho_grid.len());
    for &rho in rho_grid {
        let v_eq = ring_equilibrium_velocity(rho, params, length, v_max)?.v_eq;
        points.push(DiagramPoint {
            rho,
            v_eq,
            q: rho * v_eq,
        });
    }
    let peak_index = points.iter().enumerate().fold(
        0,
        |best, (k, p)| if p.q > points[best].q { k } else { best },
    );
    Ok(DiagramSeries { points, peak_index })
}

/// Parses `start:stop:step` into an inclusive ascending grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, step] = parts[..] else {
        return Err(Error::invalid(format!(
            "grid \"{spec}\" is not START:STOP:STEP"
        )));
    };
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                Error::invalid(format!("grid \"{spec}\": \"{s}\" is not a finite number"))
            })
    };
    let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
    if !(step > 0.0) || stop < start {
        return Err(Error::invalid(format!(
            "grid \"{spec}\" needs STEP > 0 and STOP >= START"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    if count > 10_000_000 {
        return Err(Error::invalid(format!(
            "grid \"{spec}\" has more than 10^7 points"
        )));
    }
    Ok((0..=count).map(|k| start + k as f64 * step).collect())
}

/// Golden-section maximisation of the flow on `[lo, hi]`.
pub fn refine_peak(
    params: &ModelParams,
    v_max: f64,
    length: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<DiagramPoint> {
    let flow = |rho: f64| -> Result<f64> {
        Ok(rho * ring_equilibrium_velocity(rho, params, length, v_max)?.v_eq)
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (flow(c)?, flow(d)?);
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = flow(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = flow(d)?;
        }
    }
    let rho = 0.5 * (a + b);
    let v_eq = ring_equilibrium_velocity(rho, params, length, v_max)?.v_eq;
    Ok(DiagramPoint {
        rho,
        v_eq,
        q: rho * v_eq,
    })
}

/// Steady state of an open-link platoon behind a leader at `V_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSpec {
    pub v_eq: f64,
    /// `gaps[n - 1]` is the distance from vehicle `n - 1` to vehicle `n`.
    pub gaps: Vec<f64>,
}

impl EquilibriumSpec {
    /// Positions with the leader at `leader_x`.
    pub fn positions(&self, leader_x: f64) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.gaps.len() + 1);
        x.push(leader_x);
        for g in &self.gaps {
            let last = *x.last().expect("leader pushed");
            x.push(last - g);
        }
        x
    }
}

/// Gaps at which every follower travels at the leader's speed.
///
/// Solved front to back: with the gaps ahead fixed, the speed of vehicle `n`
/// increases monotonically with its own gap, so one bisection per vehicle.
pub fn platoon_equilibrium_gaps(
    specs: &[VehicleSpec],
    params: &ModelParams,
) -> Result<EquilibriumSpec> {
    params.validate()?;
    let Some(leader) = specs.first() else {
        return Err(Error::invalid("platoon has no vehicles"));
    };
    let v0 = leader.v_max;
    let (kappa, omega) = (params.kappa, params.omega);
    let mut gaps = Vec::with_capacity(specs.len() - 1);
    // Σ_{i<n-1} exp(-(x_i - x_{n-1})/ω), the weight seen from vehicle n-1.
    let mut behind_sum = 0.0;
    for spec in &specs[1..] {
        let vn = spec.v_max;
        if !(vn > v0) {
            return Err(Error::invalid(format!(
                "follower {} has maximum speed {vn} <= leader speed {v0}; it cannot stay in the platoon",
                spec.id
            )));
        }
        let weight = 1.0 + behind_sum;
        let excess = |s: f64| vn * (1.0 - (-s / omega).exp() * weight / kappa) - v0;
        if excess(0.0) >= 0.0 {
            return Err(Error::NoEquilibrium { vehicle: spec.id });
        }
        let mut hi = omega;
        while excess(hi) < 0.0 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if excess(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        gaps.push(s);
        behind_sum = (-s / omega).exp() * weight;
    }
    Ok(EquilibriumSpec { v_eq: v0, gaps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{congestion_factors_naive, LinkState, Topology};

    fn params(kappa: f64, omega: f64) -> ModelParams {
        ModelParams::new(kappa, omega).unwrap()
    }

    fn specs(speeds: &[f64]) -> Vec<VehicleSpec> {
        speeds
            .iter()
            .enumerate()
            .map(|(id, &v_max)| VehicleSpec { id, v_max, x0: 0.0 })
            .collect()
    }

    #[test]
    fn ring_formula_against_direct_sum() {
        let p = params(10.0, 10.0);
        let eq = ring_equilibrium_velocity(0.5, &p, 1000.0, 6.0).unwrap();
        let x: Vec<f64> = (0..500).map(|k| 2.0 * k as f64).collect();
        let ring = Topology::Ring { length: 1000.0 };
        let g = congestion_factors_naive(&LinkState::new(0.0, x, ring), &specs(&[6.0; 500]), &p)
            .unwrap();
        let direct = 6.0 * (1.0 - g[0]);
        assert!(
            (eq.v_eq - direct).abs() <= 1e-9 * direct,
            "{} vs {direct}",
            eq.v_eq
        );
        assert!((eq.v_eq - 3.290).abs() < 5e-4);
        assert!(!eq.over_capacity);
    }

    #[test]
    fn ring_limits() {
        let p = params(10.0, 10.0);
        let one = ring_equilibrium_velocity(1.0 / 1000.0, &p, 1000.0, 6.0).unwrap();
        assert!((one.v_eq - 6.0).abs() < 1e-12);
        let jammed = ring_equilibrium_velocity(2.0, &p, 1000.0, 6.0).unwrap();
        assert!(jammed.over_capacity);
        assert_eq!(jammed.v_eq, 0.0);
        assert!(ring_equilibrium_velocity(0.0, &p, 1000.0, 6.0).is_err());
        assert!(ring_equilibrium_velocity(1e-4, &p, 1000.0, 6.0).is_err());
    }

    #[test]
    fn diagram_points_are_consistent() {
        let grid = parse_grid("0.01:1.2:0.01").unwrap();
        assert_eq!(grid.len(), 120);
        let series = fundamental_diagram(&params(10.0, 10.0), 6.0, 1000.0, &grid).unwrap();
        for p in &series.points {
            assert_eq!(p.q, p.rho * p.v_eq);
        }
        let peak = series.peak();
        assert!(series.points.iter().all(|p| p.q <= peak.q));
        let fine = refine_peak(&params(10.0, 10.0), 6.0, 1000.0, 0.01, 1.2, 1e-10).unwrap();
        assert!(fine.q >= peak.q);
        assert!((fine.rho - peak.rho).abs() <= 0.01);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1").is_err());
    }

    #[test]
    fn two_vehicle_gap_closed_form() {
        let eq = platoon_equilibrium_gaps(&specs(&[4.0, 6.0]), &params(1.0, 10.0)).unwrap();
        assert_eq!(eq.v_eq, 4.0);
        assert!((eq.gaps[0] - 10.0 * 3f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn faster_followers_sit_closer() {
        let p = params(1.0, 10.0);
        let fast = platoon_equilibrium_gaps(&specs(&[4.0, 12.0]), &p).unwrap();
        let slow = platoon_equilibrium_gaps(&specs(&[4.0, 4.5]), &p).unwrap();
        assert!(fast.gaps[0] < slow.gaps[0]);
        assert!(platoon_equilibrium_gaps(&specs(&[4.0]), &p)
            .unwrap()
            .gaps
            .is_empty());
        assert!(platoon_equilibrium_gaps(&specs(&[4.0, 4.0]), &p).is_err());
    }

    #[test]
    fn platoon_rows_match_recursive_closed_form() {
        let p = params(0.8, 7.0);
        let v = [4.0, 6.0, 5.0, 9.0];
        let eq = platoon_equilibrium_gaps(&specs(&v), &p).unwrap();
        let mut gamma_prev = 0.0;
        for n in 1..v.len() {
            let expected =
                p.omega * ((1.0 + p.kappa * gamma_prev) / (p.kappa * (1.0 - v[0] / v[n]))).ln();
            assert!((eq.gaps[n - 1] - expected).abs() < 1e-9, "{n}");
            gamma_prev = 1.0 - v[0] / v[n];
        }
        let x = eq.positions(100.0);
        let g =
            congestion_factors_naive(&LinkState::new(0.0, x, Topology::OpenLink), &specs(&v), &p)
                .unwrap();
        for n in 1..v.len() {
            assert!((v[n] * (1.0 - g[n]) - 4.0).abs() < 1e-10);
        }
    }
}
