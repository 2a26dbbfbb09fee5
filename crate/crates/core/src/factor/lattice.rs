//! Simple random walks on Z and Z^2, described by closed forms of their
//! root Green functions.
//!
//! For Z^2 the Green function is G(z) = (2/pi) K(z), with K the complete
//! elliptic integral of the first kind at modulus z, evaluated through the
//! arithmetic-geometric mean. The double integral over the torus is kept as
//! an independent quadrature route.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::finite::check_unit_interval;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LatticeKind {
    #[serde(rename = "Z1-SRW")]
    Z1,
    #[serde(rename = "Z2-SRW")]
    Z2,
}

impl LatticeKind {
    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Z1 => "Z1-SRW",
            LatticeKind::Z2 => "Z2-SRW",
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            LatticeKind::Z1 => 1,
            LatticeKind::Z2 => 2,
        }
    }
}

/// A factor whose root Green function is known in closed form. Both lattice
/// walks are group walks, hence always vertex-transitive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalyticFactor {
    kind: LatticeKind,
}

// Below this modulus the derivative is summed from the return-probability
// series; the AGM expression E/(k(1-k^2)) - K/k cancels badly near zero.
const SERIES_CUTOFF: f64 = 0.5;

impl AnalyticFactor {
    pub fn new(kind: LatticeKind) -> Self {
        AnalyticFactor { kind }
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn green(&self, z: f64) -> Result<f64> {
        check_unit_interval(z)?;
        Ok(match self.kind {
            LatticeKind::Z1 => (1.0 - z * z).powf(-0.5),
            LatticeKind::Z2 => 2.0 / PI * elliptic_k(z),
        })
    }

    pub fn green_derivative(&self, z: f64) -> Result<f64> {
        check_unit_interval(z)?;
        Ok(match self.kind {
            LatticeKind::Z1 => z * (1.0 - z * z).powf(-1.5),
            LatticeKind::Z2 if z < SERIES_CUTOFF => {
                let mut sum = 0.0;
                let mut zp = z;
                for (m, c) in z2_return_probabilities(60).into_iter().enumerate().skip(1) {
                    sum += 2.0 * m as f64 * c * zp;
                    zp *= z * z;
                }
                sum
            }
            LatticeKind::Z2 => {
                let (k, e) = elliptic_ke(z);
                2.0 / PI * (e / (z * (1.0 - z * z)) - k / z)
            }
        })
    }

    /// p^(n)(0, 0) for n = 0..=max_n.
    pub fn series_coefficients(&self, max_n: usize) -> Vec<f64> {
        let half = match self.kind {
            LatticeKind::Z1 => central_binomial_ratios(max_n / 2),
            LatticeKind::Z2 => z2_return_probabilities(max_n / 2),
        };
        (0..=max_n)
            .map(|n| if n % 2 == 0 { half[n / 2] } else { 0.0 })
            .collect()
    }
}

/// C(2m, m) / 4^m for m = 0..=m_max.
fn central_binomial_ratios(m_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m_max + 1);
    let mut c = 1.0;
    for m in 0..=m_max {
        out.push(c);
        c *= (2 * m + 1) as f64 / (2 * m + 2) as f64;
    }
    out
}

/// Return probabilities of the planar walk at time 2m: (C(2m,m)/4^m)^2.
fn z2_return_probabilities(m_max: usize) -> Vec<f64> {
    central_binomial_ratios(m_max)
        .into_iter()
        .map(|c| c * c)
        .collect()
}

/// Complete elliptic integral of the first kind, K(k) = pi / (2 AGM(1, k')).
pub fn elliptic_k(k: f64) -> f64 {
    let mut a = 1.0;
    let mut b = (1.0 - k * k).sqrt();
    for _ in 0..64 {
        if (a - b).abs() <= f64::EPSILON * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    PI / (2.0 * a)
}

/// Both complete elliptic integrals (K, E) from one AGM sequence:
/// E = K (1 - sum_n 2^(n-1) c_n^2) with c_0 = k.
pub fn elliptic_ke(k: f64) -> (f64, f64) {
    let mut a = 1.0;
    let mut b = (1.0 - k * k).sqrt();
    let mut c = k;
    let mut sum = 0.5 * c * c;
    let mut pow = 0.5;
    for _ in 0..64 {
        if c.abs() <= f64::EPSILON * a {
            break;
        }
        let next = 0.5 * (a + b);
        c = 0.5 * (a - b);
        b = (a * b).sqrt();
        a = next;
        pow *= 2.0;
        sum += pow * c * c;
    }
    let kk = PI / (2.0 * a);
    (kk, kk * (1.0 - sum))
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// W(z) = z G(z) for the planar walk, from the torus integral
/// (1/4pi^2) \int 2z / (2 - z(cos a + cos b)) over (-pi, pi]^2.
///
/// The integrand is even in both angles, so the square [0, pi]^2 suffices.
/// Its peak sits at the corner (0, 0); each axis is split into panels that
/// shrink geometrically toward zero, with `nodes` Gauss-Legendre points per
/// panel.
pub fn z2_w_by_quadrature(z: f64, nodes: usize) -> f64 {
    let (x, w) = gauss_legendre(nodes);
    let mut edges = vec![0.0];
    let mut edge = PI / 2f64.powi(8);
    while edge < PI {
        edges.push(edge);
        edge *= 2.0;
    }
    edges.push(PI);
    let mut pts = Vec::new();
    for pair in edges.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let half = 0.5 * (hi - lo);
        for (xi, wi) in x.iter().zip(&w) {
            pts.push((lo + half * (xi + 1.0), half * wi));
        }
    }
    let cosines: Vec<(f64, f64)> = pts.iter().map(|&(t, wt)| (t.cos(), wt)).collect();
    let mut total = 0.0;
    for &(ca, wa) in &cosines {
        let mut inner = 0.0;
        for &(cb, wb) in &cosines {
            inner += wb / (2.0 - z * (ca + cb));
        }
        total += wa * inner;
    }
    2.0 * z * total / (PI * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn green_at_zero_is_one() {
        for kind in [LatticeKind::Z1, LatticeKind::Z2] {
            assert_eq!(AnalyticFactor::new(kind).green(0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn elliptic_values() {
        // K(1/sqrt 2) = Gamma(1/4)^2 / (4 sqrt(pi))
        let gamma_quarter = 3.625_609_908_221_908;
        let expect = gamma_quarter * gamma_quarter / (4.0 * PI.sqrt());
        assert_relative_eq!(elliptic_k(0.5f64.sqrt()), expect, epsilon = 1e-14);
        let (k, e) = elliptic_ke(0.0);
        assert_relative_eq!(k, PI / 2.0);
        assert_relative_eq!(e, PI / 2.0);
        // Legendre relation at k = k': 2EK - K^2 = pi/2.
        let (k, e) = elliptic_ke(0.5f64.sqrt());
        assert_relative_eq!(2.0 * e * k - k * k, PI / 2.0, epsilon = 1e-13);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert_relative_eq!(integral, 2.0 / 19.0, epsilon = 1e-14);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn z2_series_matches_closed_form_at_small_z() {
        let f = AnalyticFactor::new(LatticeKind::Z2);
        let coeffs = f.series_coefficients(80);
        let z: f64 = 0.3;
        let series: f64 = coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c);
        assert_relative_eq!(f.green(z).unwrap(), series, epsilon = 1e-15);
    }

    #[test]
    fn derivative_branches_meet() {
        let f = AnalyticFactor::new(LatticeKind::Z2);
        let below = f.green_derivative(SERIES_CUTOFF - 1e-9).unwrap();
        let above = f.green_derivative(SERIES_CUTOFF + 1e-9).unwrap();
        assert_relative_eq!(below, above, max_relative = 1e-7);
    }
}
