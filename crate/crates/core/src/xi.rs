//! The coupled system xi_i(z) = alpha_i z / (1 - Hbar_i(z)) at z = 1.
//!
//! With H_j(z) = (alpha_j z / xi_j) U_j(o_j, o_j | xi_j) and
//! Hbar_i = sum_{j != i} H_j, the iteration started at xi_i = alpha_i z is
//! monotone and converges to the minimal fixed point, which is the one
//! carrying the probabilistic meaning.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-13,
            max_iter: 1_000_000,
        }
    }
}

/// Converged values of the xi-system at z = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiSolution {
    pub xi: Vec<f64>,
    pub xi_prime: Vec<f64>,
    /// H_i(1): returns to the root whose first step is in factor i.
    pub h: Vec<f64>,
    /// Hbar_i(1) = U(o,o|1) - H_i(1).
    pub h_bar: Vec<f64>,
    pub u_root: f64,
    pub g_root: f64,
    /// G_i(o_i, o_i | xi_i).
    pub green_at_xi: Vec<f64>,
    /// G_i'(o_i, o_i | xi_i).
    pub green_prime_at_xi: Vec<f64>,
    pub iterations: usize,
    /// max_i |xi_i (1 - Hbar_i) - alpha_i|
    pub residual: f64,
}

/// Raw fixed point at a given z, before derivatives are attached.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub z: f64,
    pub xi: Vec<f64>,
    pub green: Vec<f64>,
    pub h: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Solve the xi-system at z = 1 and attach H, U, G(o,o|1) and xi'(1).
pub fn solve_xi(model: &ModelSpec, opts: SolverOptions) -> Result<XiSolution> {
    let fp = fixed_point(model, 1.0, opts, None)?;
    let r = model.len();
    let u_root: f64 = fp.h.iter().sum();
    if u_root >= 1.0 - opts.tol {
        return Err(Error::NonTransient(format!(
            "U(o,o|1) = {u_root} is not below 1"
        )));
    }
    let h_bar: Vec<f64> = fp.h.iter().map(|h| u_root - h).collect();
    let green_prime_at_xi = (0..r)
        .map(|i| model.factor(i).green_derivative(fp.xi[i]))
        .collect::<Result<Vec<_>>>()?;
    let mut sol = XiSolution {
        xi: fp.xi,
        xi_prime: vec![0.0; r],
        h: fp.h,
        h_bar,
        u_root,
        g_root: 1.0 / (1.0 - u_root),
        green_at_xi: fp.green,
        green_prime_at_xi,
        iterations: fp.iterations,
        residual: fp.residual,
    };
    sol.xi_prime = xi_derivative(model, &sol)?;
    Ok(sol)
}

/// Run the monotone iteration at argument `z`. When `trajectory` is given,
/// every iterate is appended to it.
pub fn fixed_point(
    model: &ModelSpec,
    z: f64,
    opts: SolverOptions,
    mut trajectory: Option<&mut Vec<Vec<f64>>>,
) -> Result<FixedPoint> {
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!("tolerance {} must be positive", opts.tol)));
    }
    let r = model.len();
    let alpha = model.weights();
    let mut xi: Vec<f64> = alpha.iter().map(|a| a * z).collect();
    let mut green = vec![0.0; r];
    let mut h = vec![0.0; r];
    if let Some(t) = trajectory.as_deref_mut() {
        t.push(xi.clone());
    }
    let mut iterations = 0;
    loop {
        evaluate_h(model, z, &xi, &mut green, &mut h)?;
        let total: f64 = h.iter().sum();
        let mut next = vec![0.0; r];
        let mut step = 0.0f64;
        for i in 0..r {
            let denom = 1.0 - (total - h[i]);
            if denom <= 0.0 {
                return Err(Error::NonTransient(format!(
                    "Hbar_{i} reached {} during iteration",
                    total - h[i]
                )));
            }
            next[i] = alpha[i] * z / denom;
            if next[i] >= 1.0 - opts.tol {
                return Err(Error::NonTransient(format!(
                    "xi_{i} reached {} during iteration",
                    next[i]
                )));
            }
            step = step.max((next[i] - xi[i]).abs());
        }
        xi = next;
        iterations += 1;
        if let Some(t) = trajectory.as_deref_mut() {
            t.push(xi.clone());
        }
        if step < opts.tol {
            break;
        }
        if iterations >= opts.max_iter {
            return Err(Error::Convergence {
                iterations,
                residual: step,
            });
        }
    }
    evaluate_h(model, z, &xi, &mut green, &mut h)?;
    let total: f64 = h.iter().sum();
    let residual = (0..r)
        .map(|i| (xi[i] * (1.0 - (total - h[i])) - alpha[i] * z).abs())
        .fold(0.0, f64::max);
    Ok(FixedPoint {
        z,
        xi,
        green,
        h,
        iterations,
        residual,
    })
}

// H_j = alpha_j z (1 - 1/G_j(xi_j)) / xi_j
fn evaluate_h(
    model: &ModelSpec,
    z: f64,
    xi: &[f64],
    green: &mut [f64],
    h: &mut [f64],
) -> Result<()> {
    for (j, factor) in model.factors().iter().enumerate() {
        let g = factor.green(xi[j]).map_err(|e| match e {
            Error::Domain(_) | Error::NumericalInstability(_) => Error::NonTransient(format!(
                "factor {j} Green function undefined at xi = {}",
                xi[j]
            )),
            other => other,
        })?;
        green[j] = g;
        h[j] = model.weight(j) * z * (1.0 - 1.0 / g) / xi[j];
    }
    Ok(())
}

/// xi_i'(1) by implicit differentiation of xi_i (1 - Hbar_i(z)) = alpha_i z.
///
/// Writing phi_j(t) = (1 - 1/G_j(t)) / t, so that H_j = alpha_j z phi_j(xi_j),
/// the derivative at z = 1 solves
/// (alpha_i / xi_i) xi_i' - xi_i sum_{j != i} alpha_j phi_j'(xi_j) xi_j' = xi_i.
pub fn xi_derivative(model: &ModelSpec, sol: &XiSolution) -> Result<Vec<f64>> {
    let r = model.len();
    let alpha = model.weights();
    let phi_prime: Vec<f64> = (0..r)
        .map(|j| {
            let t = sol.xi[j];
            let g = sol.green_at_xi[j];
            let dg = sol.green_prime_at_xi[j];
            (t * dg / (g * g) - (1.0 - 1.0 / g)) / (t * t)
        })
        .collect();
    let mut a = DMatrix::zeros(r, r);
    let mut b = DVector::zeros(r);
    for i in 0..r {
        a[(i, i)] = 1.0 - sol.h_bar[i];
        for j in 0..r {
            if j != i {
                a[(i, j)] = -sol.xi[i] * alpha[j] * phi_prime[j];
            }
        }
        b[i] = alpha[i] + sol.xi[i] * sol.h_bar[i];
    }
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Degenerate("singular system for xi'(1)".into()))?;
    if x.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::Degenerate(format!(
            "xi'(1) is not positive: {:?}",
            x.as_slice()
        )));
    }
    Ok(x.iter().copied().collect())
}

/// Central difference of the fixed point at z = 1 +- h.
pub fn xi_derivative_fd(model: &ModelSpec, h: f64, opts: SolverOptions) -> Result<Vec<f64>> {
    let up = fixed_point(model, 1.0 + h, opts, None)?;
    let down = fixed_point(model, 1.0 - h, opts, None)?;
    Ok(up
        .xi
        .iter()
        .zip(&down.xi)
        .map(|(u, d)| (u - d) / (2.0 * h))
        .collect())
}

/// G(o, o | 1) = 1 / (1 - sum_i H_i(1)).
pub fn product_green(sol: &XiSolution) -> Result<f64> {
    let u: f64 = sol.h.iter().sum();
    if u >= 1.0 {
        return Err(Error::NonTransient(format!("U(o,o|1) = {u}")));
    }
    Ok(1.0 / (1.0 - u))
}

/// sum_i (1 - (1 - xi_i) G_i(xi_i)); equals 1 on every solution.
pub fn normalization_sum(sol: &XiSolution) -> f64 {
    sol.xi
        .iter()
        .zip(&sol.green_at_xi)
        .map(|(x, g)| 1.0 - (1.0 - x) * g)
        .sum()
}
