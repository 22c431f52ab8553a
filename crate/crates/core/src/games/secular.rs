//! Maximization of `½ Σ ((cᵢ + xᵢ)/κᵢ)²` over the ball `Σ xᵢ² ≤ B`, the
//! intervention problem written in an eigenbasis of `I − γ𝕎`.
//!
//! At the optimum `xᵢ = cᵢ / (ν κᵢ² − 1)` with `ν > 1/κ_min²`; in terms of
//! the multiplier `L` of `θ̂ = −[I + L(I − γ𝕎)²]⁻¹ θ` this is `ν = −L`.
//! The search runs over `t = ν − 1/κ_min² > 0` so that the denominators
//! near the pole are formed without cancellation.

use crate::error::{Error, Result};

pub const MAX_BISECTIONS: usize = 200;
pub const RELATIVE_TOL: f64 = 1e-10;
/// Coefficients on the top eigenspace below this fraction of `‖c‖` count
/// as zero when testing for the hard case.
pub const DEGENERATE_TOL: f64 = 1e-12;
/// `κᵢ` within this relative distance of `κ_min` belong to the top group.
const GROUP_TOL: f64 = 1e-12;
const MAX_EXPANSIONS: usize = 600;

#[derive(Clone, Debug, PartialEq)]
pub struct SecularSolution {
    pub x: Vec<f64>,
    /// `ν = −L`; `None` when the budget is zero.
    pub nu: Option<f64>,
    pub hard_case: bool,
    pub iterations: usize,
}

impl SecularSolution {
    pub fn multiplier(&self) -> Option<f64> {
        self.nu.map(|v| -v)
    }
}

pub fn objective(kappa: &[f64], c: &[f64], x: &[f64]) -> f64 {
    0.5 * kappa
        .iter()
        .zip(c.iter().zip(x))
        .map(|(k, (ci, xi))| ((ci + xi) / k).powi(2))
        .sum::<f64>()
}

struct Shifted<'a> {
    c: &'a [f64],
    /// `κᵢ²/κ_min² − 1 ≥ 0`
    offset: Vec<f64>,
    kappa_sq: Vec<f64>,
}

impl Shifted<'_> {
    fn denom(&self, i: usize, t: f64) -> f64 {
        self.offset[i] + t * self.kappa_sq[i]
    }

    fn psi(&self, t: f64) -> f64 {
        (0..self.c.len())
            .map(|i| (self.c[i] / self.denom(i, t)).powi(2))
            .sum()
    }

    fn x(&self, t: f64) -> Vec<f64> {
        (0..self.c.len()).map(|i| self.c[i] / self.denom(i, t)).collect()
    }
}

/// Solve the ball-constrained problem for `κᵢ > 0`.
pub fn solve(kappa: &[f64], c: &[f64], budget: f64) -> Result<SecularSolution> {
    if kappa.len() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: kappa.len(),
            found: c.len(),
        });
    }
    if kappa.is_empty() {
        return Err(Error::Secular("no directions to spend the budget on".into()));
    }
    if !(budget >= 0.0) || !budget.is_finite() {
        return Err(Error::invalid(format!("budget {budget} must be a nonnegative number")));
    }
    if let Some(k) = kappa.iter().find(|k| !(**k > 0.0)) {
        return Err(Error::Secular(format!("kappa = {k} is not positive")));
    }
    if budget == 0.0 {
        return Ok(SecularSolution {
            x: vec![0.0; c.len()],
            nu: None,
            hard_case: false,
            iterations: 0,
        });
    }
    let kmin = kappa.iter().cloned().fold(f64::INFINITY, f64::min);
    let nu_inf = 1.0 / (kmin * kmin);
    let top: Vec<usize> = (0..kappa.len())
        .filter(|&i| kappa[i] - kmin <= GROUP_TOL * kmin)
        .collect();
    let shifted = Shifted {
        c,
        offset: kappa
            .iter()
            .enumerate()
            .map(|(i, k)| if top.contains(&i) { 0.0 } else { (k / kmin).powi(2) - 1.0 })
            .collect(),
        kappa_sq: kappa.iter().map(|k| k * k).collect(),
    };

    let c_norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let top_mass = top.iter().map(|&i| c[i] * c[i]).sum::<f64>().sqrt();
    if top_mass <= DEGENERATE_TOL * c_norm {
        let mut x: Vec<f64> = (0..c.len())
            .map(|i| if top.contains(&i) { 0.0 } else { c[i] / shifted.offset[i] })
            .collect();
        let rest: f64 = x.iter().map(|v| v * v).sum();
        if rest <= budget {
            let lead = top[0];
            let sign = if c[lead] < 0.0 { -1.0 } else { 1.0 };
            x[lead] = sign * (budget - rest).sqrt();
            return Ok(SecularSolution {
                x,
                nu: Some(nu_inf),
                hard_case: true,
                iterations: 0,
            });
        }
    }

    // ψ is decreasing in t; find ψ(lo) > B ≥ ψ(hi).
    let mut hi = nu_inf;
    let mut expansions = 0;
    while shifted.psi(hi) > budget {
        hi *= 4.0;
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::Secular("upper bracket did not close".into()));
        }
    }
    let mut lo = hi / 4.0;
    while shifted.psi(lo) <= budget {
        lo /= 4.0;
        expansions += 1;
        if expansions > MAX_EXPANSIONS || lo == 0.0 {
            return Err(Error::Secular("lower bracket did not close".into()));
        }
    }
    debug_assert!(shifted.psi(lo) > budget && shifted.psi(hi) <= budget);

    let mut t = hi;
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS {
        iterations += 1;
        t = if hi > 4.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        let psi = shifted.psi(t);
        if (psi - budget).abs() <= RELATIVE_TOL * budget {
            break;
        }
        if psi > budget {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let mut x = shifted.x(t);
    // Land exactly on the sphere; the optimum lies on it.
    let norm_sq: f64 = x.iter().map(|v| v * v).sum();
    if norm_sq > 0.0 {
        let s = (budget / norm_sq).sqrt();
        x.iter_mut().for_each(|v| *v *= s);
    }
    Ok(SecularSolution {
        x,
        nu: Some(nu_inf + t),
        hard_case: false,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn norm_sq(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    #[test]
    fn identity_operator_aligns_with_c() {
        let c = [1.0, 2.0, 2.0];
        let s = solve(&[1.0; 3], &c, 4.0).unwrap();
        // √B · c/‖c‖ = 2/3 · c
        for (x, ci) in s.x.iter().zip(c) {
            assert!((x - 2.0 * ci / 3.0).abs() < 1e-12);
        }
        // 1 + L = −‖c‖/√B
        assert!((s.multiplier().unwrap() + 1.0 + 1.5).abs() < 1e-9);
    }

    #[test]
    fn zero_budget() {
        let s = solve(&[0.5, 1.0], &[1.0, 1.0], 0.0).unwrap();
        assert_eq!(s.x, vec![0.0, 0.0]);
        assert_eq!(s.nu, None);
    }

    #[test]
    fn hard_case_spends_rest_on_top_direction() {
        // c has no weight on the κ = 0.5 direction.
        let s = solve(&[0.5, 1.0], &[0.0, 0.3], 1.0).unwrap();
        assert!(s.hard_case);
        // x₂ = c₂/(κ₂²/κ₁² − 1) = 0.3/3 = 0.1
        assert!((s.x[1] - 0.1).abs() < 1e-15);
        assert!((norm_sq(&s.x) - 1.0).abs() < 1e-15);
        // Zero c: the whole budget goes to the top direction.
        let s = solve(&[0.9, 0.5, 1.0], &[0.0; 3], 2.0).unwrap();
        assert!(s.hard_case && (s.x[1] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_but_budget_small_is_regular() {
        // ψ_rest(t=0) = (1/3)² > B, so the root lies at t > 0.
        let s = solve(&[0.5, 1.0], &[0.0, 1.0], 0.01).unwrap();
        assert!(!s.hard_case);
        assert!((norm_sq(&s.x) - 0.01).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(solve(&[0.0], &[1.0], 1.0).is_err());
        assert!(solve(&[1.0], &[1.0], -1.0).is_err());
        assert!(solve(&[1.0, 2.0], &[1.0], 1.0).is_err());
    }

    #[test]
    fn stiff_pole_still_converges() {
        // Tiny top coefficient: the root sits very close to the pole.
        let s = solve(&[0.01, 1.0, 1.0], &[1e-9, 1.0, -1.0], 100.0).unwrap();
        assert!(!s.hard_case);
        assert!((norm_sq(&s.x) - 100.0).abs() < 1e-8 * 100.0);
        assert!(s.x[0].abs() > 9.0);
    }

    fn sphere_best(kappa: &[f64], c: &[f64], budget: f64) -> f64 {
        // Dense sampling of the circle for 2-d instances.
        let r = budget.sqrt();
        (0..200_000)
            .map(|k| {
                let a = k as f64 / 200_000.0 * std::f64::consts::TAU;
                objective(kappa, c, &[r * a.cos(), r * a.sin()])
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn beats_circle_search(k1 in 0.05f64..2.0, k2 in 0.05f64..2.0, c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, b in 0.01f64..10.0) {
            let (kappa, c) = ([k1, k2], [c1, c2]);
            let s = solve(&kappa, &c, b).unwrap();
            prop_assert!((norm_sq(&s.x) - b).abs() <= 1e-8 * b);
            prop_assert!(objective(&kappa, &c, &s.x) >= sphere_best(&kappa, &c, b) - 1e-9 * (1.0 + objective(&kappa, &c, &s.x)));
        }

        #[test]
        fn homogeneous_in_c(scale in 0.1f64..10.0, c in proptest::collection::vec(-2.0f64..2.0, 4), b in 0.1f64..5.0) {
            let kappa = [0.3, 0.7, 1.0, 1.4];
            let s1 = solve(&kappa, &c, b).unwrap();
            let cs: Vec<f64> = c.iter().map(|v| v * scale).collect();
            let s2 = solve(&kappa, &cs, b * scale * scale).unwrap();
            for (a, b2) in s1.x.iter().zip(&s2.x) {
                prop_assert!((a * scale - b2).abs() <= 1e-7 * (1.0 + b2.abs()));
            }
        }
    }
}
