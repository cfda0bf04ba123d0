use super::equilibrium::{platoon_equilibrium_gaps, EquilibriumSpec};
use crate::error::{Error, Result};
use crate::model::{ModelParams, Scenario, Topology, VehicleSpec};
use crate::numeric::{simulate, IntegratorConfig, SimTrace};

/// Fitting window for `|y_n|`, as fractions of the equilibrium gap.
pub const FIT_WINDOW: (f64, f64) = (1e-6, 1e-1);

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Predicted `λ_n` for followers `n = 1..N-1` (1/s).
    pub eigenvalues: Vec<f64>,
    /// Fitted decay rates, same indexing.
    pub fitted: Vec<f64>,
    /// `|fitted - λ| / |λ|`.
    pub relative_error: Vec<f64>,
}

impl StabilityReport {
    pub fn max_relative_error(&self) -> f64 {
        self.relative_error.iter().copied().fold(0.0, f64::max)
    }
}

/// Linearised decay rates `(V_0 - V_n) / ω` of the gap deviations.
pub fn string_stability_eigenvalues(
    specs: &[VehicleSpec],
    params: &ModelParams,
) -> Result<Vec<f64>> {
    params.validate()?;
    let Some(leader) = specs.first() else {
        return Err(Error::invalid("platoon has no vehicles"));
    };
    specs[1..]
        .iter()
        .map(|s| {
            if s.v_max > leader.v_max {
                Ok((leader.v_max - s.v_max) / params.omega)
            } else {
                Err(Error::invalid(format!(
                    "follower {} has maximum speed {} <= leader speed {}; no single platoon",
                    s.id, s.v_max, leader.v_max
                )))
            }
        })
        .collect()
}

/// Least-squares slope of `ln|y|` against time over the samples with
/// `|y| / s_eq` inside [`FIT_WINDOW`].
pub fn fit_decay_rate(times: &[f64], deviations: &[f64], s_eq: f64, vehicle: usize) -> Result<f64> {
    let (lo, hi) = (FIT_WINDOW.0 * s_eq, FIT_WINDOW.1 * s_eq);
    let (mut n, mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&t, &y) in times.iter().zip(deviations) {
        let a = y.abs();
        if a >= lo && a <= hi {
            let ly = a.ln();
            n += 1.0;
            st += t;
            sy += ly;
            stt += t * t;
            sty += t * ly;
        }
    }
    let denom = n * stt - st * st;
    if n < 3.0 || denom <= 0.0 {
        return Err(Error::EmptyFitWindow { vehicle });
    }
    Ok((n * sty - st * sy) / denom)
}

fn gap_deviation(trace: &SimTrace, eq: &EquilibriumSpec, n: usize) -> Vec<f64> {
    let s = &trace.samples;
    (0..s.len())
        .map(|k| {
            let x = s.positions(k);
            x[n - 1] - x[n] - eq.gaps[n - 1]
        })
        .collect()
}

/// Fits every follower's gap deviation in `trace` and compares with the prediction.
pub fn measure_decay_rates(
    trace: &SimTrace,
    equilibrium: &EquilibriumSpec,
    specs: &[VehicleSpec],
    params: &ModelParams,
) -> Result<StabilityReport> {
    let eigenvalues = string_stability_eigenvalues(specs, params)?;
    let mut fitted = Vec::with_capacity(eigenvalues.len());
    for n in 1..specs.len() {
        let y = gap_deviation(trace, equilibrium, n);
        fitted.push(fit_decay_rate(
            &trace.samples.times,
            &y,
            equilibrium.gaps[n - 1],
            n,
        )?);
    }
    Ok(report(eigenvalues, fitted))
}

fn report(eigenvalues: Vec<f64>, fitted: Vec<f64>) -> StabilityReport {
    let relative_error = eigenvalues
        .iter()
        .zip(&fitted)
        .map(|(l, f)| ((f - l) / l).abs())
        .collect();
    StabilityReport {
        eigenvalues,
        fitted,
        relative_error,
    }
}

/// One simulation per follower: the platoon starts at equilibrium except for
/// follower `n`, moved back by `amplitude · s_n`; the decay of its own gap
/// deviation is fitted. Vehicles ahead of `n` are unaffected, so each fit sees
/// a single mode.
pub fn decay_experiment(
    speeds: &[f64],
    params: &ModelParams,
    amplitude: f64,
    config: &IntegratorConfig,
) -> Result<StabilityReport> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::invalid(format!(
            "perturbation amplitude must be finite and >= 0, got {amplitude}"
        )));
    }
    let specs: Vec<VehicleSpec> = speeds
        .iter()
        .enumerate()
        .map(|(id, &v_max)| VehicleSpec { id, v_max, x0: 0.0 })
        .collect();
    let eq = platoon_equilibrium_gaps(&specs, params)?;
    let eigenvalues = string_stability_eigenvalues(&specs, params)?;
    let x_eq = eq.positions(0.0);
    let mut fitted = Vec::with_capacity(eigenvalues.len());
    for n in 1..speeds.len() {
        let mut x = x_eq.clone();
        x[n] -= amplitude * eq.gaps[n - 1];
        let pairs: Vec<(f64, f64)> = speeds.iter().copied().zip(x).collect();
        let scenario = Scenario::from_pairs(Topology::OpenLink, *params, &pairs)?;
        let trace = simulate(&scenario, config)?;
        let y = gap_deviation(&trace, &eq, n);
        fitted.push(fit_decay_rate(&trace.samples.times, &y, eq.gaps[n - 1], n)?);
    }
    Ok(report(eigenvalues, fitted))
}
