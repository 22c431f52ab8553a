use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::secular::{self, DEGENERATE_TOL};
use crate::error::{Error, Result};
use crate::graphon::Adjacency;
use crate::spectral::{
    cg_solve, is_symmetric, spectral_norm, symmetric_eigen_sorted, top_eigenpair, LinearOperator,
};

/// Above this size the spectral condition is checked with Lanczos rather
/// than a dense eigendecomposition.
pub const DENSE_EIGEN_MAX: usize = 1024;
const EQUILIBRIUM_RESIDUAL_TOL: f64 = 1e-8;
const LANCZOS_ITERS: usize = 300;
const LANCZOS_TOL: f64 = 1e-10;

/// LQ network game `G(A, θ)` with peer effect `γ`; the equilibrium solves
/// `(I − γA/n) s = θ + θ̂`.
#[derive(Clone, Debug)]
pub struct NetworkGame {
    adjacency: Adjacency,
    gamma: f64,
    theta: DVector<f64>,
}

impl NetworkGame {
    /// Checks `γ‖A‖_op/n < 1`, first through the row-sum bound and only if
    /// that fails through the spectrum.
    pub fn new(adjacency: Adjacency, gamma: f64, theta: DVector<f64>) -> Result<Self> {
        let n = adjacency.dim();
        if n == 0 {
            return Err(Error::invalid("empty network"));
        }
        if theta.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: theta.len() });
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::invalid(format!("gamma = {gamma} must be nonnegative")));
        }
        let symmetric = match &adjacency {
            Adjacency::Dense(m) => is_symmetric(m, 1e-12),
            Adjacency::Sparse(s) => s.is_symmetric(),
        };
        if !symmetric {
            return Err(Error::invalid("network matrix must be symmetric"));
        }
        let game = NetworkGame { adjacency, gamma, theta };
        let row_bound = game.max_abs_row_sum();
        if gamma * row_bound / n as f64 >= 1.0 {
            let norm = game.operator_norm()?;
            let value = gamma * norm / n as f64;
            if value >= 1.0 {
                return Err(Error::SpectralCondition {
                    what: "gamma * ||A||_op / n".into(),
                    value,
                });
            }
        }
        Ok(game)
    }

    pub fn from_dense(a: DMatrix<f64>, gamma: f64, theta: DVector<f64>) -> Result<Self> {
        Self::new(Adjacency::Dense(a), gamma, theta)
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    fn max_abs_row_sum(&self) -> f64 {
        match &self.adjacency {
            Adjacency::Dense(m) => m
                .row_iter()
                .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            Adjacency::Sparse(s) => {
                let mut sums = vec![0.0; s.dim()];
                for (i, _, v) in s.iter() {
                    sums[i] += v.abs();
                }
                sums.into_iter().fold(0.0, f64::max)
            }
        }
    }

    /// `‖A‖_op`: dense eigenvalues up to `DENSE_EIGEN_MAX`, else Lanczos on
    /// `A` and `−A`.
    pub fn operator_norm(&self) -> Result<f64> {
        if let Adjacency::Dense(m) = &self.adjacency {
            if m.nrows() <= DENSE_EIGEN_MAX {
                return Ok(spectral_norm(m));
            }
        }
        let (top, _) = top_eigenpair(&self.adjacency, LANCZOS_ITERS, LANCZOS_TOL, 1)?;
        let (bottom, _) = top_eigenpair(&Negated(&self.adjacency), LANCZOS_ITERS, LANCZOS_TOL, 2)?;
        Ok(top.abs().max(bottom.abs()))
    }

    /// `x − (γ/n) A x`
    pub fn apply_k(&self, x: &DVector<f64>) -> DVector<f64> {
        x - self.adjacency.mul_vec(x) * (self.gamma / self.n() as f64)
    }

    pub fn equilibrium(&self, theta_hat: &DVector<f64>) -> Result<DVector<f64>> {
        if theta_hat.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: theta_hat.len() });
        }
        let rhs = &self.theta + theta_hat;
        let s = match &self.adjacency {
            Adjacency::Dense(a) => {
                let k = DMatrix::identity(self.n(), self.n()) - a * (self.gamma / self.n() as f64);
                k.lu()
                    .solve(&rhs)
                    .ok_or_else(|| Error::Residual { what: "singular I - gamma A / n".into(), value: 0.0 })?
            }
            Adjacency::Sparse(_) => cg_solve(|x| self.apply_k(x), &rhs, 1e-12, 10 * self.n() + 100)?,
        };
        let residual = (self.apply_k(&s) - &rhs).norm();
        if residual > EQUILIBRIUM_RESIDUAL_TOL * rhs.norm().max(f64::MIN_POSITIVE) {
            return Err(Error::Residual {
                what: "equilibrium residual".into(),
                value: residual,
            });
        }
        Ok(s)
    }

    /// `½ (1/n) ‖s*‖²`, the graphon welfare of the associated step functions.
    pub fn welfare(&self, theta_hat: &DVector<f64>) -> Result<f64> {
        let s = self.equilibrium(theta_hat)?;
        Ok(0.5 * s.norm_squared() / self.n() as f64)
    }
}

struct Negated<'a, Op: ?Sized>(&'a Op);

impl<Op: LinearOperator + ?Sized> LinearOperator for Negated<'_, Op> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        -self.0.apply(x)
    }
}

/// Eigendecomposition of a symmetric network matrix, reusable across
/// interventions and welfare evaluations on the same network.
#[derive(Clone, Debug)]
pub struct NetworkSpectrum {
    /// Descending.
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl NetworkSpectrum {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (values, vectors) = symmetric_eigen_sorted(a);
        NetworkSpectrum { values, vectors }
    }

    pub fn of_game(game: &NetworkGame) -> Self {
        match &game.adjacency {
            Adjacency::Dense(a) => Self::new(a),
            Adjacency::Sparse(s) => Self::new(&crate::spectral::MatOps::to_dense(s)),
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// `κᵢ = 1 − γλᵢ/n`
    pub fn kappa(&self, gamma: f64) -> Vec<f64> {
        let n = self.n() as f64;
        self.values.iter().map(|l| 1.0 - gamma * l / n).collect()
    }

    /// `(I − γA/n)⁻¹ v`
    pub fn resolve(&self, gamma: f64, v: &DVector<f64>) -> DVector<f64> {
        let coeffs = self.vectors.tr_mul(v);
        let kappa = self.kappa(gamma);
        let scaled = DVector::from_fn(self.n(), |i, _| coeffs[i] / kappa[i]);
        &self.vectors * scaled
    }

    pub fn welfare(&self, gamma: f64, theta: &DVector<f64>, theta_hat: &DVector<f64>) -> f64 {
        0.5 * self.resolve(gamma, &(theta + theta_hat)).norm_squared() / self.n() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterventionSolution {
    pub theta_hat: DVector<f64>,
    /// `L` in `θ̂ = −[I + L(I − γA/n)²]⁻¹ θ`; `None` when `B = 0`.
    pub multiplier: Option<f64>,
    pub welfare: f64,
    pub equilibrium: DVector<f64>,
    /// `|‖θ̂‖² − B|`
    pub budget_residual: f64,
    pub hard_case: bool,
}

impl InterventionSolution {
    pub fn flags(&self) -> Vec<String> {
        let mut flags = Vec::new();
        if self.hard_case {
            flags.push("hard_case".to_string());
        }
        if self.multiplier.is_none() {
            flags.push("zero_budget".to_string());
        }
        flags
    }
}

fn check_budget(budget: f64) -> Result<()> {
    if !(budget >= 0.0) || !budget.is_finite() {
        return Err(Error::invalid(format!("budget {budget} must be nonnegative")));
    }
    Ok(())
}

/// Optimal intervention through a full eigendecomposition.
pub fn optimal_intervention(game: &NetworkGame, budget: f64) -> Result<InterventionSolution> {
    optimal_intervention_with(game, &NetworkSpectrum::of_game(game), budget)
}

/// As [`optimal_intervention`] with a precomputed spectrum of the game's matrix.
pub fn optimal_intervention_with(
    game: &NetworkGame,
    spectrum: &NetworkSpectrum,
    budget: f64,
) -> Result<InterventionSolution> {
    check_budget(budget)?;
    if spectrum.n() != game.n() {
        return Err(Error::DimensionMismatch { expected: game.n(), found: spectrum.n() });
    }
    let kappa = spectrum.kappa(game.gamma);
    let c: Vec<f64> = spectrum.vectors.tr_mul(&game.theta).iter().cloned().collect();
    let sol = secular::solve(&kappa, &c, budget)?;
    let x = DVector::from_column_slice(&sol.x);
    let theta_hat = &spectrum.vectors * &x;
    let s_coeffs = DVector::from_fn(c.len(), |i, _| (c[i] + sol.x[i]) / kappa[i]);
    let equilibrium = &spectrum.vectors * s_coeffs;
    Ok(InterventionSolution {
        welfare: secular::objective(&kappa, &c, &sol.x) / game.n() as f64,
        budget_residual: (theta_hat.norm_squared() - budget).abs(),
        multiplier: sol.multiplier(),
        hard_case: sol.hard_case,
        theta_hat,
        equilibrium,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgOptions {
    /// Relative budget tolerance `|‖θ̂‖² − B| ≤ tol·B` for the outer iteration.
    pub tol: f64,
    /// Relative residual for every inner conjugate-gradient solve.
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub max_outer: usize,
    pub seed: u64,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            tol: 1e-10,
            cg_tol: 1e-12,
            cg_max_iters: 5000,
            max_outer: 200,
            seed: 0,
        }
    }
}

/// Matrix-free optimal intervention.
///
/// The top eigenpair `(λ₁, v₁)` of `A` comes from Lanczos. With
/// `ν = 1/κ₁² + t` every trial solves `(νK² − I) x = θ`, `K = I − γA/n`, by
/// conjugate gradients, and `t` is updated by an Illinois secant step on
/// `h(t) = 1/‖x(t)‖ − 1/√B`, which is nearly linear near the pole.
pub fn optimal_intervention_cg(game: &NetworkGame, budget: f64, opts: &CgOptions) -> Result<InterventionSolution> {
    check_budget(budget)?;
    let n = game.n();
    if budget == 0.0 {
        let zero = DVector::zeros(n);
        let equilibrium = game.equilibrium(&zero)?;
        return Ok(InterventionSolution {
            welfare: 0.5 * equilibrium.norm_squared() / n as f64,
            theta_hat: zero,
            multiplier: None,
            equilibrium,
            budget_residual: 0.0,
            hard_case: false,
        });
    }
    let (lambda1, v1) = match top_eigenpair(&game.adjacency, LANCZOS_ITERS, LANCZOS_TOL, opts.seed) {
        Ok(pair) => pair,
        Err(_) if n <= DENSE_EIGEN_MAX => {
            let sp = NetworkSpectrum::of_game(game);
            (sp.values[0], sp.vectors.column(0).into_owned())
        }
        Err(e) => return Err(e),
    };
    let kappa1 = 1.0 - game.gamma * lambda1 / n as f64;
    let nu_inf = 1.0 / (kappa1 * kappa1);
    let solve_at = |t: f64, rhs: &DVector<f64>| -> Result<DVector<f64>> {
        let nu = nu_inf + t;
        cg_solve(
            |x| game.apply_k(&game.apply_k(x)) * nu - x,
            rhs,
            opts.cg_tol,
            opts.cg_max_iters,
        )
    };

    let theta = &game.theta;
    let c1 = v1.dot(theta);
    let mut rhs = theta.clone();
    let mut lo = (0.0, -1.0 / budget.sqrt());
    if c1.abs() <= DEGENERATE_TOL * theta.norm() {
        rhs.axpy(-c1, &v1, 1.0);
        let x0 = solve_at(0.0, &rhs)?;
        let x0 = &x0 - &v1 * v1.dot(&x0);
        let rest = x0.norm_squared();
        if rest <= budget {
            let theta_hat = x0 + &v1 * (budget - rest).sqrt();
            return finish(game, theta_hat, budget, Some(-nu_inf), true);
        }
        lo = (0.0, 1.0 / rest.sqrt() - 1.0 / budget.sqrt());
    }

    let h = |x: &DVector<f64>| 1.0 / x.norm() - 1.0 / budget.sqrt();
    let mut t_hi = nu_inf;
    let mut x = solve_at(t_hi, &rhs)?;
    let mut h_hi = h(&x);
    let mut outer = 0;
    while h_hi < 0.0 {
        lo = (t_hi, h_hi);
        t_hi *= 4.0;
        x = solve_at(t_hi, &rhs)?;
        h_hi = h(&x);
        outer += 1;
        if outer > opts.max_outer {
            return Err(Error::Secular("upper bracket did not close".into()));
        }
    }
    let mut hi = (t_hi, h_hi);
    let mut t = t_hi;
    let mut side = 0i8;
    loop {
        if (x.norm_squared() - budget).abs() <= opts.tol * budget {
            break;
        }
        outer += 1;
        if outer > opts.max_outer {
            return Err(Error::Secular(format!(
                "budget iteration stalled with relative residual {:.3e}",
                (x.norm_squared() - budget).abs() / budget
            )));
        }
        let secant = hi.0 - hi.1 * (hi.0 - lo.0) / (hi.1 - lo.1);
        t = if secant > lo.0 && secant < hi.0 { secant } else { 0.5 * (lo.0 + hi.0) };
        x = solve_at(t, &rhs)?;
        let ht = h(&x);
        if ht < 0.0 {
            lo = (t, ht);
            if side == -1 {
                hi.1 *= 0.5;
            }
            side = -1;
        } else {
            hi = (t, ht);
            if side == 1 {
                lo.1 *= 0.5;
            }
            side = 1;
        }
    }
    let theta_hat = &x * (budget / x.norm_squared()).sqrt();
    finish(game, theta_hat, budget, Some(-(nu_inf + t)), false)
}

fn finish(
    game: &NetworkGame,
    theta_hat: DVector<f64>,
    budget: f64,
    multiplier: Option<f64>,
    hard_case: bool,
) -> Result<InterventionSolution> {
    let equilibrium = game.equilibrium(&theta_hat)?;
    Ok(InterventionSolution {
        welfare: 0.5 * equilibrium.norm_squared() / game.n() as f64,
        budget_residual: (theta_hat.norm_squared() - budget).abs(),
        theta_hat,
        multiplier,
        equilibrium,
        hard_case,
    })
}

/// JSON record of a solved problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterventionRecord {
    pub n: usize,
    pub gamma: f64,
    pub budget: f64,
    pub theta: Vec<f64>,
    #[serde(rename = "A_ref", default, skip_serializing_if = "Option::is_none")]
    pub a_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graphon_ref: Option<String>,
    pub theta_hat: Vec<f64>,
    #[serde(rename = "L")]
    pub multiplier: Option<f64>,
    pub welfare: f64,
    pub flags: Vec<String>,
}

impl InterventionRecord {
    pub fn new(game: &NetworkGame, budget: f64, sol: &InterventionSolution, a_ref: Option<String>) -> Self {
        InterventionRecord {
            n: game.n(),
            gamma: game.gamma,
            budget,
            theta: game.theta.iter().cloned().collect(),
            a_ref,
            graphon_ref: None,
            theta_hat: sol.theta_hat.iter().cloned().collect(),
            multiplier: sol.multiplier,
            welfare: sol.welfare,
            flags: sol.flags(),
        }
    }
}
