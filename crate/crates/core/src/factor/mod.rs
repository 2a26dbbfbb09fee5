//! Factors of the free product and their root-based generating functions.

mod finite;
mod lattice;

pub use finite::FiniteFactor;
pub use lattice::{
    elliptic_k, elliptic_ke, gauss_legendre, z2_w_by_quadrature, AnalyticFactor, LatticeKind,
};

use crate::error::Result;

/// One factor V_i: either an explicit finite chain or a built-in lattice walk.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    Finite(FiniteFactor),
    Analytic(AnalyticFactor),
}

impl Factor {
    pub fn flip() -> Self {
        Factor::Finite(FiniteFactor::flip())
    }

    pub fn lattice(kind: LatticeKind) -> Self {
        Factor::Analytic(AnalyticFactor::new(kind))
    }

    /// G_i(o_i, o_i | z) for 0 <= z < 1.
    pub fn green(&self, z: f64) -> Result<f64> {
        match self {
            Factor::Finite(f) => f.root_green(z),
            Factor::Analytic(f) => f.green(z),
        }
    }

    /// d/dz G_i(o_i, o_i | z).
    pub fn green_derivative(&self, z: f64) -> Result<f64> {
        match self {
            Factor::Finite(f) => f.root_green_derivative(z),
            Factor::Analytic(f) => f.green_derivative(z),
        }
    }

    /// U_i(o_i, o_i | z) = 1 - 1 / G_i(o_i, o_i | z).
    pub fn first_return(&self, z: f64) -> Result<f64> {
        Ok(1.0 - 1.0 / self.green(z)?)
    }

    pub fn is_transitive(&self) -> bool {
        match self {
            Factor::Finite(f) => f.is_transitive(),
            Factor::Analytic(_) => true,
        }
    }

    /// Number of states, or `None` for the infinite lattice factors.
    pub fn state_count(&self) -> Option<usize> {
        match self {
            Factor::Finite(f) => Some(f.len()),
            Factor::Analytic(_) => None,
        }
    }

    pub fn as_finite(&self) -> Option<&FiniteFactor> {
        match self {
            Factor::Finite(f) => Some(f),
            Factor::Analytic(_) => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Factor::Finite(f) => format!("finite({} states)", f.len()),
            Factor::Analytic(f) => f.kind().name().to_string(),
        }
    }
}

impl From<FiniteFactor> for Factor {
    fn from(f: FiniteFactor) -> Self {
        Factor::Finite(f)
    }
}

impl From<AnalyticFactor> for Factor {
    fn from(f: AnalyticFactor) -> Self {
        Factor::Analytic(f)
    }
}
