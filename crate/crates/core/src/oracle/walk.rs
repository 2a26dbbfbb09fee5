use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::BuildHasherDefault;

use crate::error::{Error, Result};
use crate::factor::FiniteFactor;
use crate::model::ModelSpec;

/// A block as (factor, state). Words are stored as plain letter vectors so
/// the exact DP tables stay small.
pub type Letter = (u16, u16);
pub type Letters = Vec<Letter>;

/// Hash map with a fixed hasher, so iteration order (and therefore floating
/// point summation order) is the same on every run.
pub type Table<K, V> = HashMap<K, V, BuildHasherDefault<DefaultHasher>>;

/// Which generating function a DP computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Passage {
    /// G(x, y): all visits to y.
    Green,
    /// F(x, y): first visit to y, at time 0 if x = y.
    First,
    /// U(x, x): first return to x at a positive time.
    Return,
    /// L(x, y): visits to y before any return to x.
    LastExit,
}

impl Passage {
    fn absorbs(self) -> bool {
        matches!(self, Passage::First | Passage::Return)
    }
}

#[derive(Debug, Clone)]
struct FactorTable {
    root: u16,
    succ: Vec<Vec<(u16, f64)>>,
}

/// Exact transition structure of a finite-factor free product.
#[derive(Debug, Clone)]
pub struct ProductWalk {
    weights: Vec<f64>,
    factors: Vec<FactorTable>,
}

impl ProductWalk {
    pub fn new(model: &ModelSpec) -> Result<Self> {
        let mut factors = Vec::with_capacity(model.len());
        for (i, f) in model.factors().iter().enumerate() {
            let f = f.as_finite().ok_or_else(|| Error::Unsupported {
                factor: i,
                reason: "exact enumeration needs finite factors".into(),
            })?;
            if f.len() > u16::MAX as usize {
                return Err(Error::Unsupported {
                    factor: i,
                    reason: "too many states for the enumeration tables".into(),
                });
            }
            factors.push(FactorTable {
                root: f.root() as u16,
                succ: (0..f.len())
                    .map(|x| f.successors(x).map(|(y, p)| (y as u16, p)).collect())
                    .collect(),
            });
        }
        Ok(ProductWalk {
            weights: model.weights().to_vec(),
            factors,
        })
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn root(&self, factor: usize) -> u16 {
        self.factors[factor].root
    }

    /// Word for a single factor state: empty at the root, one block otherwise.
    pub fn embed(&self, factor: usize, state: usize) -> Letters {
        if state as u16 == self.factors[factor].root {
            Vec::new()
        } else {
            vec![(factor as u16, state as u16)]
        }
    }

    /// Call `visit(next, prob)` for every one-step successor of `w`.
    pub fn for_each_step(&self, w: &[Letter], mut visit: impl FnMut(Letters, f64)) {
        let top = w.last().copied();
        for (i, (f, &a)) in self.factors.iter().zip(&self.weights).enumerate() {
            let i = i as u16;
            match top {
                Some((ti, s)) if ti == i => {
                    let base = &w[..w.len() - 1];
                    for &(t, p) in &f.succ[s as usize] {
                        let mut next = base.to_vec();
                        if t != f.root {
                            next.push((i, t));
                        }
                        visit(next, a * p);
                    }
                }
                _ => {
                    for &(t, p) in &f.succ[f.root as usize] {
                        let mut next = Vec::with_capacity(w.len() + 1);
                        next.extend_from_slice(w);
                        next.push((i, t));
                        visit(next, a * p);
                    }
                }
            }
        }
    }

    /// Coefficients 0..=order of the chosen generating function from `x` to
    /// `y`, by forward DP over words. Words that cannot reach `y` in the
    /// remaining steps are dropped, which keeps the tables small.
    pub fn passage_series(&self, x: &[Letter], y: &[Letter], order: usize, kind: Passage) -> Vec<f64> {
        let mut out = vec![0.0; order + 1];
        if kind == Passage::LastExit && x == y {
            out[0] = 1.0;
            return out;
        }
        let mut layer: Table<Letters, f64> = Table::default();
        if x == y && kind != Passage::Return {
            out[0] = 1.0;
            if kind == Passage::First {
                return out;
            }
        }
        if steps_lower_bound(x, y) <= order {
            layer.insert(x.to_vec(), 1.0);
        }
        for n in 1..=order {
            let budget = order - n;
            let mut next: Table<Letters, f64> = Table::default();
            for (w, &m) in &layer {
                self.for_each_step(w, |v, p| {
                    if v == y {
                        out[n] += m * p;
                        if kind.absorbs() {
                            return;
                        }
                    }
                    if kind == Passage::LastExit && v == x {
                        return;
                    }
                    if steps_lower_bound(&v, y) <= budget {
                        *next.entry(v).or_insert(0.0) += m * p;
                    }
                });
            }
            layer = next;
        }
        out
    }
}

/// Lower bound on the number of steps from `w` to `y`: every block past the
/// common prefix has to be removed or rewritten, one block per step.
pub fn steps_lower_bound(w: &[Letter], y: &[Letter]) -> usize {
    let cp = w.iter().zip(y).take_while(|(a, b)| a == b).count();
    let (a, b) = (w.len() - cp, y.len() - cp);
    if a > 0 && b > 0 && w[cp].0 == y[cp].0 {
        a + b - 1
    } else {
        a + b
    }
}

/// The same generating functions inside a single finite factor.
pub fn factor_passage_series(
    f: &FiniteFactor,
    x: usize,
    y: usize,
    order: usize,
    kind: Passage,
) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; order + 1];
    if kind == Passage::LastExit && x == y {
        out[0] = 1.0;
        return out;
    }
    if x == y && kind != Passage::Return {
        out[0] = 1.0;
        if kind == Passage::First {
            return out;
        }
    }
    let mut v = vec![0.0; n];
    v[x] = 1.0;
    for k in 1..=order {
        let mut next = vec![0.0; n];
        for (s, &m) in v.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for (t, p) in f.successors(s) {
                next[t] += m * p;
            }
        }
        out[k] = next[y];
        if kind.absorbs() {
            next[y] = 0.0;
        }
        if kind == Passage::LastExit {
            next[x] = 0.0;
        }
        v = next;
    }
    out
}
