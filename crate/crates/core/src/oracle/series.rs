use std::fmt;

use serde::{Deserialize, Serialize};

const EPS: f64 = f64::EPSILON;

/// Power series truncated after `t^order`, in double precision with a
/// running bound on the absolute error of every coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
    err: f64,
}

impl TruncatedSeries {
    pub fn zero(order: usize) -> Self {
        TruncatedSeries {
            coeffs: vec![0.0; order + 1],
            err: 0.0,
        }
    }

    pub fn constant(c: f64, order: usize) -> Self {
        let mut s = TruncatedSeries::zero(order);
        s.coeffs[0] = c;
        s
    }

    /// The series `t`.
    pub fn identity(order: usize) -> Self {
        let mut s = TruncatedSeries::zero(order);
        if order >= 1 {
            s.coeffs[1] = 1.0;
        }
        s
    }

    /// Exact input coefficients, padded or cut to `order`.
    pub fn from_coeffs(mut coeffs: Vec<f64>, order: usize) -> Self {
        coeffs.resize(order + 1, 0.0);
        TruncatedSeries { coeffs, err: 0.0 }
    }

    pub fn with_error(mut self, err: f64) -> Self {
        self.err = err;
        self
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Bound on the absolute rounding error of each coefficient.
    pub fn error_bound(&self) -> f64 {
        self.err
    }

    fn norm1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn check_order(&self, other: &Self) {
        assert_eq!(self.order(), other.order(), "series orders differ");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_order(other);
        let coeffs: Vec<f64> = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        let mut out = TruncatedSeries { coeffs, err: 0.0 };
        out.err = self.err + other.err + EPS * out.max_abs();
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Self {
        let coeffs: Vec<f64> = self.coeffs.iter().map(|a| a * c).collect();
        let mut out = TruncatedSeries { coeffs, err: 0.0 };
        out.err = self.err * c.abs() + EPS * out.max_abs();
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_order(other);
        let n = self.order();
        let mut coeffs = vec![0.0; n + 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs[..=n - i].iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        let (na, nb) = (self.norm1(), other.norm1());
        let err = self.err * nb
            + other.err * na
            + (n + 1) as f64 * self.err * other.err
            + (n + 1) as f64 * EPS * na * nb;
        TruncatedSeries { coeffs, err }
    }

    /// Multiplicative inverse; the constant term must be nonzero.
    pub fn inverse(&self) -> Self {
        let a0 = self.coeffs[0];
        assert!(a0 != 0.0, "series with zero constant term has no inverse");
        let n = self.order();
        let mut b = vec![0.0; n + 1];
        let mut e = vec![0.0; n + 1];
        let rel0 = self.err / a0.abs() + EPS;
        b[0] = 1.0 / a0;
        e[0] = b[0].abs() * rel0;
        for k in 1..=n {
            let mut s = 0.0;
            let mut mag = 0.0;
            let mut prop = 0.0;
            for i in 1..=k {
                s += self.coeffs[i] * b[k - i];
                mag += (self.coeffs[i] * b[k - i]).abs();
                prop += self.coeffs[i].abs() * e[k - i] + self.err * b[k - i].abs();
            }
            b[k] = -s / a0;
            e[k] = (prop + k as f64 * EPS * mag) / a0.abs() + b[k].abs() * rel0;
        }
        let err = e.iter().fold(0.0f64, |m, &x| m.max(x));
        TruncatedSeries { coeffs: b, err }
    }

    /// `self / other`; `other` must have a nonzero constant term.
    pub fn div(&self, other: &Self) -> Self {
        self.mul(&other.inverse())
    }

    /// `self(inner(t))`; `inner` must have zero constant term.
    pub fn compose(&self, inner: &Self) -> Self {
        self.check_order(inner);
        assert!(inner.coeffs[0] == 0.0, "inner series must vanish at 0");
        let n = self.order();
        let mut acc = TruncatedSeries::constant(self.coeffs[n], n);
        for k in (0..n).rev() {
            acc = acc.mul(inner);
            acc.coeffs[0] += self.coeffs[k];
        }
        acc.err += self.err * (0..=n).map(|k| inner.norm1().powi(k as i32)).sum::<f64>();
        acc
    }

    /// `self / t`, keeping the order; the constant term must vanish. The top
    /// coefficient of the result is unknown and is set to the caller's value.
    pub fn shift_down(&self, top: f64) -> Self {
        assert!(self.coeffs[0] == 0.0, "constant term must vanish");
        let mut coeffs = self.coeffs[1..].to_vec();
        coeffs.push(top);
        TruncatedSeries { coeffs, err: self.err }
    }

    /// `t * self`, dropping the top coefficient.
    pub fn shift_up(&self) -> Self {
        let mut coeffs = vec![0.0];
        coeffs.extend_from_slice(&self.coeffs[..self.order()]);
        TruncatedSeries { coeffs, err: self.err }
    }

    /// Partial sum at `z`.
    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    /// Largest coefficient difference from `other`.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c} t")?,
                _ => write!(f, "{c} t^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(t^{})", self.order() + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_inverse() {
        let one_minus_t = TruncatedSeries::from_coeffs(vec![1.0, -1.0], 8);
        let g = one_minus_t.inverse();
        assert!(g.coeffs().iter().all(|&c| c == 1.0));
        let back = g.mul(&one_minus_t);
        assert_eq!(back.coeff(0), 1.0);
        assert!(back.coeffs()[1..].iter().all(|&c| c.abs() <= back.error_bound()));
    }

    #[test]
    fn composition_with_t_squared() {
        let n = 10;
        let g = TruncatedSeries::from_coeffs(vec![1.0, -1.0], n).inverse();
        let t2 = TruncatedSeries::identity(n).mul(&TruncatedSeries::identity(n));
        let h = g.compose(&t2);
        for k in 0..=n {
            assert_eq!(h.coeff(k), if k % 2 == 0 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn shifts() {
        let s = TruncatedSeries::from_coeffs(vec![0.0, 1.0, 2.0, 3.0], 3);
        assert_eq!(s.shift_down(0.0).coeffs(), &[1.0, 2.0, 3.0, 0.0]);
        assert_eq!(s.shift_up().coeffs(), &[0.0, 0.0, 1.0, 2.0]);
        assert_eq!(s.eval(0.5), 0.5 + 0.5 + 3.0 / 8.0);
    }
}
