//! Sums of polynomial-times-exponential terms, `Σ_g P_g(τ) exp(-s_g τ / ω)`.

/// All terms decaying at the rate of one maximum speed.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RateGroup {
    /// Maximum speed `s` that sets the decay rate `s / ω`.
    pub speed: f64,
    /// First vehicle (front to back) carrying this speed.
    pub owner: usize,
    /// `poly[d]` multiplies `τ^d`.
    pub poly: Vec<f64>,
}

impl RateGroup {
    fn is_zero(&self) -> bool {
        self.poly.iter().all(|&c| c == 0.0)
    }
}

fn horner(poly: &[f64], tau: f64) -> f64 {
    poly.iter().rev().fold(0.0, |acc, &c| acc * tau + c)
}

fn horner_derivative(poly: &[f64], tau: f64) -> f64 {
    poly.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (d, &c)| acc * tau + d as f64 * c)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct ExpPoly {
    pub groups: Vec<RateGroup>,
}

impl ExpPoly {
    pub fn add_assign(&mut self, other: &ExpPoly) {
        for g in &other.groups {
            match self.groups.iter_mut().find(|h| h.speed == g.speed) {
                Some(h) => {
                    if h.poly.len() < g.poly.len() {
                        h.poly.resize(g.poly.len(), 0.0);
                    }
                    for (a, b) in h.poly.iter_mut().zip(&g.poly) {
                        *a += b;
                    }
                }
                None => self.groups.push(g.clone()),
            }
        }
    }

    /// Plain evaluation; underflows for large `τ`.
    pub fn value(&self, tau: f64, omega: f64) -> f64 {
        self.groups
            .iter()
            .map(|g| horner(&g.poly, tau) * (-g.speed * tau / omega).exp())
            .sum()
    }

    pub fn derivative(&self, tau: f64, omega: f64) -> f64 {
        self.groups
            .iter()
            .map(|g| {
                let rate = g.speed / omega;
                (horner_derivative(&g.poly, tau) - rate * horner(&g.poly, tau))
                    * (-rate * tau).exp()
            })
            .sum()
    }

    /// Splits the value as `exp(-s* τ / ω) · S` with `s*` the slowest decaying
    /// speed present, so `S` stays representable at any `τ ≥ 0`.
    pub fn scaled(&self, tau: f64, omega: f64) -> Option<(f64, f64)> {
        let dominant = self
            .groups
            .iter()
            .filter(|g| !g.is_zero())
            .map(|g| g.speed)
            .min_by(f64::total_cmp)?;
        let sum = self
            .groups
            .iter()
            .map(|g| horner(&g.poly, tau) * (-(g.speed - dominant) * tau / omega).exp())
            .sum();
        Some((dominant, sum))
    }

    /// Re-expresses the function in a time origin moved forward by `delta`,
    /// multiplied by `exp(log_scale)`.
    pub fn rebased(&self, delta: f64, log_scale: f64, omega: f64) -> ExpPoly {
        let groups = self
            .groups
            .iter()
            .map(|g| {
                let factor = (log_scale - g.speed * delta / omega).exp();
                let n = g.poly.len();
                let mut poly = vec![0.0; n];
                // (τ + Δ)^d = Σ_e C(d, e) Δ^(d-e) τ^e
                for (d, &c) in g.poly.iter().enumerate() {
                    let mut binom = 1.0;
                    let mut power = 1.0;
                    for e in (0..=d).rev() {
                        poly[e] += c * binom * power;
                        binom = binom * e as f64 / (d - e + 1) as f64;
                        power *= delta;
                    }
                }
                for c in &mut poly {
                    *c *= factor;
                }
                RateGroup {
                    speed: g.speed,
                    owner: g.owner,
                    poly,
                }
            })
            .collect();
        ExpPoly { groups }
    }
}

/// Solves `dz/dτ = -(V/ω) z + (V/(κω)) F(τ)` with `z(0) = z0` for a known forcing
/// `F` (the sum of every row ahead). Forcing terms at the vehicle's own decay
/// rate are resonant and raise the polynomial degree by one.
pub(crate) fn solve_row(
    forcing: &ExpPoly,
    speed: f64,
    id: usize,
    kappa: f64,
    omega: f64,
    z0: f64,
) -> ExpPoly {
    let gain = speed / (kappa * omega);
    let mut groups = Vec::with_capacity(forcing.groups.len() + 1);
    for g in &forcing.groups {
        let p = &g.poly;
        let q = if g.speed == speed {
            let mut q = vec![0.0; p.len() + 1];
            for (d, &c) in p.iter().enumerate() {
                q[d + 1] = gain * c / (d + 1) as f64;
            }
            q
        } else {
            let gap = speed - g.speed;
            if gap.abs() < 1e-9 * speed {
                log::warn!(
                    "vehicle {id}: maximum speed {speed} is within 1e-9 relative of {} (vehicle {}); analytic coefficients are ill-conditioned",
                    g.speed,
                    g.owner
                );
            }
            // Q' + δ Q = b P, δ = gap/ω; written with b/δ = V/(κ gap) so that
            // exact speed ratios stay exact.
            let ratio = speed / (kappa * gap);
            let inv_delta = omega / gap;
            let mut q = vec![0.0; p.len()];
            let mut higher = 0.0;
            for d in (0..p.len()).rev() {
                q[d] = ratio * p[d] - (d + 1) as f64 * higher * inv_delta;
                higher = q[d];
            }
            q
        };
        groups.push(RateGroup {
            speed: g.speed,
            owner: g.owner,
            poly: q,
        });
    }
    let particular_at_zero: f64 = groups.iter().map(|g| g.poly[0]).sum();
    let homogeneous = z0 - particular_at_zero;
    match groups.iter_mut().find(|g| g.speed == speed) {
        Some(g) => g.poly[0] += homogeneous,
        None => groups.push(RateGroup {
            speed,
            owner: id,
            poly: vec![homogeneous],
        }),
    }
    ExpPoly { groups }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rebase_matches_direct_evaluation() {
        let f = ExpPoly {
            groups: vec![
                RateGroup {
                    speed: 4.0,
                    owner: 0,
                    poly: vec![1.5, -0.25, 0.125],
                },
                RateGroup {
                    speed: 6.0,
                    owner: 1,
                    poly: vec![-0.5, 2.0],
                },
            ],
        };
        let omega = 10.0;
        let delta = 3.7;
        let g = f.rebased(delta, 0.3, omega);
        for tau in [0.0, 0.5, 2.0, 11.0] {
            let direct = f.value(tau + delta, omega) * 0.3f64.exp();
            assert!((g.value(tau, omega) - direct).abs() < 1e-13 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn scaled_form_agrees_with_plain() {
        let f = ExpPoly {
            groups: vec![
                RateGroup {
                    speed: 6.0,
                    owner: 1,
                    poly: vec![0.7],
                },
                RateGroup {
                    speed: 4.0,
                    owner: 0,
                    poly: vec![0.3, 0.01],
                },
            ],
        };
        for tau in [0.0, 1.0, 30.0] {
            let (s, sum) = f.scaled(tau, 10.0).unwrap();
            assert_eq!(s, 4.0);
            let plain = f.value(tau, 10.0);
            assert!((sum * (-s * tau / 10.0).exp() - plain).abs() < 1e-14 * plain);
        }
        assert!(ExpPoly::default().scaled(1.0, 1.0).is_none());
    }

    #[test]
    fn resonant_row_has_linear_term() {
        let lead = solve_row(&ExpPoly::default(), 5.0, 0, 1.0, 10.0, 1.0);
        let follow = solve_row(&lead, 5.0, 1, 1.0, 10.0, 2.0);
        assert_eq!(follow.groups.len(), 1);
        assert_eq!(follow.groups[0].poly.len(), 2);
        assert_eq!(follow.groups[0].poly[0], 2.0);
        assert!((follow.groups[0].poly[1] - 0.5).abs() < 1e-15);
    }
}
