//! Closed-form rates of escape for the block length.
//!
//! Three routes compute the same limit of l(Z_n)/n:
//! - the exit-time route through the type chain and 1/Lambda,
//! - the double-generating-function route (a ratio of two sums over factors),
//! - the group route, valid when every factor is vertex-transitive.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::Factor;
use crate::model::ModelSpec;
use crate::xi::{normalization_sum, solve_xi, xi_derivative_fd, SolverOptions, XiSolution};

/// Hard gate on agreement between the independent drift formulas.
pub const AGREEMENT_TOL: f64 = 1e-9;
const NU_TOL: f64 = 1e-8;
const XI_PRIME_FD_TOL: f64 = 1e-4;
const CRITICAL_EPS: f64 = 1e-12;

/// Transition matrix of the exit-point types and its invariant law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeChain {
    pub qhat: Vec<Vec<f64>>,
    /// Invariant law from the explicit product formula.
    pub nu: Vec<f64>,
    /// Invariant law from a direct linear solve of nu Q = nu.
    pub nu_solved: Vec<f64>,
}

impl TypeChain {
    /// max_j |sum_i nu(i) q(i,j) - nu(j)|
    pub fn stationarity_residual(&self) -> f64 {
        let r = self.nu.len();
        (0..r)
            .map(|j| {
                let flow: f64 = (0..r).map(|i| self.nu[i] * self.qhat[i][j]).sum();
                (flow - self.nu[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn formula_vs_solve(&self) -> f64 {
        self.nu
            .iter()
            .zip(&self.nu_solved)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub ell_exit_time: f64,
    pub ell_dgf: f64,
    pub ell_group: Option<f64>,
    /// Lambda = lim e_k / k, the reciprocal of the drift.
    pub lambda_exit: f64,
    pub type_chain: TypeChain,
    pub partial: Vec<f64>,
    /// Rate of escape of the Markovian length, lambda = ell * sigma.
    pub markovian: Option<f64>,
    pub sigma: Option<f64>,
    pub residuals: BTreeMap<String, f64>,
    pub xi: XiSolution,
}

impl DriftReport {
    pub fn ell(&self) -> f64 {
        self.ell_dgf
    }
}

fn check_noncritical(sol: &XiSolution) -> Result<()> {
    for (i, &x) in sol.xi.iter().enumerate() {
        if x < CRITICAL_EPS || 1.0 - x < CRITICAL_EPS {
            return Err(Error::NearCritical(format!("xi_{i} = {x}")));
        }
    }
    Ok(())
}

/// q(i, j) = (a_j/a_i)(x_i/x_j)((1-x_j)/(1-x_i)) (1/((1-x_j) G_j(x_j)) - 1)
pub fn type_chain(model: &ModelSpec, sol: &XiSolution) -> Result<TypeChain> {
    check_noncritical(sol)?;
    let r = model.len();
    let alpha = model.weights();
    let (xi, g) = (&sol.xi, &sol.green_at_xi);
    let mut qhat = vec![vec![0.0; r]; r];
    for i in 0..r {
        for j in 0..r {
            if i != j {
                qhat[i][j] = alpha[j] / alpha[i] * xi[i] / xi[j] * (1.0 - xi[j])
                    / (1.0 - xi[i])
                    * (1.0 / ((1.0 - xi[j]) * g[j]) - 1.0);
            }
        }
    }
    let weights: Vec<f64> = (0..r)
        .map(|i| alpha[i] * (1.0 - xi[i]) / xi[i] * (1.0 - (1.0 - xi[i]) * g[i]))
        .collect();
    let c: f64 = weights.iter().sum();
    let nu: Vec<f64> = weights.iter().map(|w| w / c).collect();
    let nu_solved = stationary_law(&qhat)?;
    let chain = TypeChain {
        qhat,
        nu,
        nu_solved,
    };
    let gap = chain.formula_vs_solve();
    if gap > NU_TOL {
        return Err(Error::Inconsistent(format!(
            "invariant law by formula and by solve differ by {gap:e}"
        )));
    }
    Ok(chain)
}

/// Solve nu (Q - I) = 0 with sum nu = 1, replacing one balance equation by
/// the normalization.
pub fn stationary_law(q: &[Vec<f64>]) -> Result<Vec<f64>> {
    let r = q.len();
    let mut a = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in 0..r {
            a[(j, i)] = q[i][j] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for i in 0..r {
        a[(r - 1, i)] = 1.0;
    }
    let mut b = DVector::zeros(r);
    b[r - 1] = 1.0;
    let nu = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Degenerate("type chain has no unique invariant law".into()))?;
    Ok(nu.iter().copied().collect())
}

/// gamma_{i,j}'(1) from the chain rule on
/// gamma_{i,j}(z) = (1/a_i)(xi_i/xi_j)(1/((1-xi_j) G_j(xi_j)) - 1).
fn gamma_prime(model: &ModelSpec, sol: &XiSolution, i: usize, j: usize) -> f64 {
    let (xi, dxi) = (&sol.xi, &sol.xi_prime);
    let g = sol.green_at_xi[j];
    let dg = sol.green_prime_at_xi[j];
    let s = (1.0 - xi[j]) * g;
    let rest = 1.0 / s - 1.0;
    let rest_prime = dxi[j] * (g - (1.0 - xi[j]) * dg) / (s * s);
    let ratio_prime = dxi[i] / xi[j] - xi[i] * dxi[j] / (xi[j] * xi[j]);
    (ratio_prime * rest + xi[i] / xi[j] * rest_prime) / model.weight(i)
}

/// Lambda = sum_{i != j} nu(i) a_j (1-xi_j)/(1-xi_i) gamma'_{i,j}(1); ell = 1/Lambda.
pub fn drift_exit_time(
    model: &ModelSpec,
    sol: &XiSolution,
    chain: &TypeChain,
) -> Result<(f64, f64)> {
    check_noncritical(sol)?;
    let r = model.len();
    let mut lambda = 0.0;
    for i in 0..r {
        for j in 0..r {
            if i != j {
                lambda += chain.nu[i] * model.weight(j) * (1.0 - sol.xi[j])
                    / (1.0 - sol.xi[i])
                    * gamma_prime(model, sol, i, j);
            }
        }
    }
    if !(lambda > 0.0) {
        return Err(Error::Inconsistent(format!("Lambda = {lambda} is not positive")));
    }
    Ok((lambda, 1.0 / lambda))
}

/// ell = sum_i (1-(1-x_i)G_i) G_i (1-x_i) / sum_i x_i' (G_i - (1-x_i) G_i').
pub fn drift_dgf(sol: &XiSolution) -> Result<f64> {
    check_noncritical(sol)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..sol.xi.len() {
        let (x, g, dg) = (sol.xi[i], sol.green_at_xi[i], sol.green_prime_at_xi[i]);
        num += (1.0 - (1.0 - x) * g) * g * (1.0 - x);
        den += sol.xi_prime[i] * (g - (1.0 - x) * dg);
    }
    if den.abs() < f64::MIN_POSITIVE || !den.is_finite() {
        return Err(Error::Degenerate(format!("denominator {den} vanishes")));
    }
    Ok(num / den)
}

/// ell = sum_i a_i (1-x_i)/x_i (1 - (1-x_i) G_i(x_i)); free products of groups only.
pub fn drift_group(model: &ModelSpec, sol: &XiSolution) -> Result<f64> {
    if let Some(i) = model.factors().iter().position(|f| !f.is_transitive()) {
        return Err(Error::NotTransitive { factor: i });
    }
    check_noncritical(sol)?;
    Ok((0..model.len())
        .map(|i| {
            let (x, g) = (sol.xi[i], sol.green_at_xi[i]);
            model.weight(i) * (1.0 - x) / x * (1.0 - (1.0 - x) * g)
        })
        .sum())
}

/// Rates of the partial block lengths: ell_i = nu(i) ell.
pub fn partial_rates(chain: &TypeChain, ell: f64) -> Vec<f64> {
    chain.nu.iter().map(|n| n * ell).collect()
}

/// sigma and lambda = ell sigma for the Markovian length. Needs every factor
/// finite so that the sphere sums are finite.
pub fn markovian_rate(
    model: &ModelSpec,
    sol: &XiSolution,
    chain: &TypeChain,
    ell: f64,
) -> Result<(f64, f64)> {
    let r = model.len();
    let mut moments = Vec::with_capacity(r);
    for (j, factor) in model.factors().iter().enumerate() {
        let Factor::Finite(f) = factor else {
            return Err(Error::Unsupported {
                factor: j,
                reason: "the Markovian rate needs finite sphere sums".into(),
            });
        };
        let last_exit = f.last_exit_from_root(sol.xi[j])?;
        let moment: f64 = f
            .spheres()
            .iter()
            .map(|(m, states)| *m as f64 * states.iter().map(|&y| last_exit[y]).sum::<f64>())
            .sum();
        moments.push(moment);
    }
    let alpha = model.weights();
    let xi = &sol.xi;
    let mut sigma = 0.0;
    for i in 0..r {
        for j in 0..r {
            if i != j {
                sigma += chain.nu[i] * alpha[j] / alpha[i] * xi[i] / xi[j] * (1.0 - xi[j])
                    / (1.0 - xi[i])
                    * moments[j];
            }
        }
    }
    Ok((sigma, ell * sigma))
}

/// Run the whole pipeline and cross-check the routes against each other.
/// Disagreement beyond [`AGREEMENT_TOL`] is an error, not a warning.
pub fn analyze(model: &ModelSpec, opts: SolverOptions) -> Result<DriftReport> {
    let report = analyze_unchecked(model, opts)?;
    check_agreement(&report)?;
    Ok(report)
}

/// All formulas and residuals, without the agreement gates.
pub fn analyze_unchecked(model: &ModelSpec, opts: SolverOptions) -> Result<DriftReport> {
    let sol = solve_xi(model, opts)?;
    let chain = type_chain(model, &sol)?;
    let (lambda_exit, ell_exit) = drift_exit_time(model, &sol, &chain)?;
    let ell_dgf = drift_dgf(&sol)?;
    let ell_group = if model.all_transitive() {
        Some(drift_group(model, &sol)?)
    } else {
        None
    };
    let partial = partial_rates(&chain, ell_dgf);
    let (sigma, markovian) = if model.all_finite() {
        let (s, l) = markovian_rate(model, &sol, &chain, ell_dgf)?;
        (Some(s), Some(l))
    } else {
        (None, None)
    };

    let mut residuals = BTreeMap::new();
    residuals.insert("exit_vs_dgf".to_string(), (ell_exit - ell_dgf).abs());
    if let Some(g) = ell_group {
        residuals.insert("group_vs_dgf".to_string(), (g - ell_dgf).abs());
    }
    residuals.insert("nu_formula_vs_solve".to_string(), chain.formula_vs_solve());
    residuals.insert("nu_stationarity".to_string(), chain.stationarity_residual());
    residuals.insert(
        "normalization".to_string(),
        (normalization_sum(&sol) - 1.0).abs(),
    );
    // rho(i): escape to infinity through factor i without revisiting the
    // other factors; G(o,o|1) sum_i rho(i) = 1.
    let rho: Vec<f64> = sol
        .xi
        .iter()
        .zip(&sol.green_at_xi)
        .map(|(x, g)| (1.0 - (1.0 - x) * g) / sol.g_root)
        .collect();
    let rho_sum: f64 = rho.iter().map(|r| sol.g_root * r).sum();
    residuals.insert("return_decomposition".to_string(), (rho_sum - 1.0).abs());
    residuals.insert("xi_fixed_point".to_string(), sol.residual);
    residuals.insert(
        "partial_sum".to_string(),
        (partial.iter().sum::<f64>() - ell_dgf).abs(),
    );
    if let Ok(fd) = xi_derivative_fd(model, 1e-5, opts) {
        let rel = fd
            .iter()
            .zip(&sol.xi_prime)
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        residuals.insert("xi_prime_vs_fd".to_string(), rel);
    }

    Ok(DriftReport {
        ell_exit_time: ell_exit,
        ell_dgf,
        ell_group,
        lambda_exit,
        type_chain: chain,
        partial,
        markovian,
        sigma,
        residuals,
        xi: sol,
    })
}

/// The hard gates: formula agreement, the xi' finite-difference check and
/// 0 < ell <= 1.
pub fn check_agreement(report: &DriftReport) -> Result<()> {
    for (name, value) in [
        ("exit_vs_dgf", report.residuals["exit_vs_dgf"]),
        ("group_vs_dgf", report.residuals.get("group_vs_dgf").copied().unwrap_or(0.0)),
    ] {
        if !(value < AGREEMENT_TOL) {
            return Err(Error::Inconsistent(format!(
                "{name} disagreement {value:e} exceeds {AGREEMENT_TOL:e}"
            )));
        }
    }
    if let Some(&rel) = report.residuals.get("xi_prime_vs_fd") {
        if !(rel < XI_PRIME_FD_TOL) {
            return Err(Error::Inconsistent(format!(
                "xi'(1) differs from its finite difference by {rel:e} (relative)"
            )));
        }
    }
    if !(report.ell_dgf > 0.0 && report.ell_dgf <= 1.0) {
        return Err(Error::Inconsistent(format!(
            "drift {} outside (0, 1]",
            report.ell_dgf
        )));
    }
    Ok(())
}
