//! Equilibria, the fundamental diagram, string stability and theorem checks.

mod equilibrium;
mod stability;
mod theorems;

pub use equilibrium::{
    fundamental_diagram, parse_grid, platoon_equilibrium_gaps, refine_peak,
    ring_equilibrium_velocity, DiagramPoint, DiagramSeries, EquilibriumSpec, RingEquilibrium,
};
pub use stability::{
    decay_experiment, fit_decay_rate, measure_decay_rates, string_stability_eigenvalues,
    StabilityReport, FIT_WINDOW,
};
pub use theorems::{verify_theorems, Check, TheoremReport, Verdict, SPLIT_MARGIN, VELOCITY_FLOOR};
