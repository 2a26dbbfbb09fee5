//! Slow exact checks: truncated power series and word-level dynamic
//! programming on the free product.
//!
//! Everything here works coefficient by coefficient and never calls the
//! linear-solve Green functions, so agreement with the fast path is a real
//! cross-check.

mod series;
mod walk;

pub use series::TruncatedSeries;
pub use walk::{factor_passage_series, steps_lower_bound, Letter, Letters, Passage, ProductWalk, Table};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::FiniteFactor;
use crate::model::ModelSpec;

pub const MAX_XI_ORDER: usize = 30;
pub const MAX_ENUMERATION_STEPS: usize = 14;
pub const MAX_IDENTITY_ORDER: usize = 12;
pub const WORD_LIMIT: usize = 10_000_000;
pub const IDENTITY_TOL: f64 = 1e-10;
pub const MASS_TOL: f64 = 1e-12;

fn finite_factors(model: &ModelSpec) -> Result<Vec<&FiniteFactor>> {
    model
        .factors()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            f.as_finite().ok_or_else(|| Error::Unsupported {
                factor: i,
                reason: "series oracle needs finite factors".into(),
            })
        })
        .collect()
}

/// Error bound attached to DP coefficients: each is a sum of at most a few
/// million products of probabilities, all at most 1.
fn dp_series(coeffs: Vec<f64>, order: usize) -> TruncatedSeries {
    let err = 1e3 * (order + 1) as f64 * f64::EPSILON;
    TruncatedSeries::from_coeffs(coeffs, order).with_error(err)
}

/// U_i(o_i,o_i|t)/t for every factor, through `t^order`.
fn reduced_returns(factors: &[&FiniteFactor], order: usize) -> Vec<TruncatedSeries> {
    factors
        .iter()
        .map(|f| {
            let u = factor_passage_series(f, f.root(), f.root(), order + 1, Passage::Return);
            dp_series(u[1..].to_vec(), order)
        })
        .collect()
}

/// H_j(z) = alpha_j z U_j(xi_j(z)) / xi_j(z) for each factor.
fn h_from_xi(model: &ModelSpec, reduced: &[TruncatedSeries], xi: &[TruncatedSeries]) -> Vec<TruncatedSeries> {
    reduced
        .iter()
        .zip(xi)
        .zip(model.weights())
        .map(|((v, x), &a)| v.compose(x).shift_up().scale(a))
        .collect()
}

fn xi_step(model: &ModelSpec, reduced: &[TruncatedSeries], xi: &[TruncatedSeries]) -> Vec<TruncatedSeries> {
    let order = xi[0].order();
    let h = h_from_xi(model, reduced, xi);
    let total = h
        .iter()
        .fold(TruncatedSeries::zero(order), |acc, s| acc.add(s));
    let one = TruncatedSeries::constant(1.0, order);
    let z = TruncatedSeries::identity(order);
    (0..model.len())
        .map(|i| {
            let h_bar = total.sub(&h[i]);
            z.scale(model.weight(i)).div(&one.sub(&h_bar))
        })
        .collect()
}

/// Power series of xi_i(z) through `z^order`, by iterating the defining
/// equations in the ring of truncated series. Coefficient k is final after
/// k iterations, so order + 1 rounds suffice.
pub fn xi_series(model: &ModelSpec, order: usize) -> Result<Vec<TruncatedSeries>> {
    if order > MAX_XI_ORDER {
        return Err(Error::Domain(format!("series order {order} exceeds {MAX_XI_ORDER}")));
    }
    let factors = finite_factors(model)?;
    let reduced = reduced_returns(&factors, order);
    let z = TruncatedSeries::identity(order);
    let mut xi: Vec<TruncatedSeries> = model.weights().iter().map(|&a| z.scale(a)).collect();
    for _ in 0..=order {
        xi = xi_step(model, &reduced, &xi);
    }
    Ok(xi)
}

/// One more round of the series iteration, for idempotence checks.
pub fn xi_series_step(model: &ModelSpec, xi: &[TruncatedSeries]) -> Result<Vec<TruncatedSeries>> {
    let factors = finite_factors(model)?;
    let reduced = reduced_returns(&factors, xi[0].order());
    Ok(xi_step(model, &reduced, xi))
}

/// H_i(z) series built from `xi_series`.
pub fn h_series(model: &ModelSpec, xi: &[TruncatedSeries]) -> Result<Vec<TruncatedSeries>> {
    let factors = finite_factors(model)?;
    let reduced = reduced_returns(&factors, xi[0].order());
    Ok(h_from_xi(model, &reduced, xi))
}

/// G(o,o|z) = 1 / (1 - sum_i H_i(z)) as a series.
pub fn root_green_series(model: &ModelSpec, order: usize) -> Result<TruncatedSeries> {
    let xi = xi_series(model, order)?;
    let total = h_series(model, &xi)?
        .iter()
        .fold(TruncatedSeries::zero(order), |acc, s| acc.add(s));
    Ok(TruncatedSeries::constant(1.0, order).sub(&total).inverse())
}

/// Per-step summary of an exact law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub step: usize,
    pub words: usize,
    pub total_mass: f64,
    pub return_probability: f64,
    pub mean_length: f64,
}

/// Neumaier summation; layers can hold millions of tiny masses.
#[derive(Debug, Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Exact law of Z_n, advanced one step at a time.
#[derive(Debug, Clone)]
pub struct Enumerator {
    walk: ProductWalk,
    law: Table<Letters, f64>,
    step: usize,
    limit: usize,
}

impl Enumerator {
    pub fn new(model: &ModelSpec) -> Result<Self> {
        let mut law = Table::default();
        law.insert(Vec::new(), 1.0);
        Ok(Enumerator {
            walk: ProductWalk::new(model)?,
            law,
            step: 0,
            limit: WORD_LIMIT,
        })
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn law(&self) -> &Table<Letters, f64> {
        &self.law
    }

    pub fn summary(&self) -> LayerSummary {
        let mut total = Compensated::default();
        let mut mean = Compensated::default();
        for (w, &m) in &self.law {
            total.add(m);
            mean.add(m * w.len() as f64);
        }
        LayerSummary {
            step: self.step,
            words: self.law.len(),
            total_mass: total.value(),
            return_probability: self.law.get(&Vec::new()).copied().unwrap_or(0.0),
            mean_length: mean.value(),
        }
    }

    /// Move to the law of Z_{n+1}. Fails without changing state if the new
    /// support would exceed the word limit.
    pub fn advance(&mut self) -> Result<()> {
        let mut next: Table<Letters, f64> = Table::default();
        let mut over = false;
        for (w, &m) in &self.law {
            self.walk.for_each_step(w, |v, p| {
                *next.entry(v).or_insert(0.0) += m * p;
            });
            if next.len() > self.limit {
                over = true;
                break;
            }
        }
        if over {
            return Err(Error::Explosion {
                limit: self.limit,
                step: self.step + 1,
            });
        }
        self.law = next;
        self.step += 1;
        Ok(())
    }
}

/// Laws of Z_0, ..., Z_{n_max}.
pub fn enumerate_distribution(model: &ModelSpec, n_max: usize) -> Result<Vec<Table<Letters, f64>>> {
    if n_max > MAX_ENUMERATION_STEPS {
        return Err(Error::Domain(format!(
            "enumeration horizon {n_max} exceeds {MAX_ENUMERATION_STEPS}"
        )));
    }
    let mut e = Enumerator::new(model)?;
    let mut out = vec![e.law().clone()];
    for _ in 0..n_max {
        e.advance()?;
        out.push(e.law().clone());
    }
    Ok(out)
}

/// E l(Z_{n+1}) - E l(Z_n) against the drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub layers: Vec<LayerSummary>,
    pub increments: Vec<f64>,
    /// Largest |increment - ell| over the last two increments.
    pub final_gap: f64,
    /// Same quantity over the first two increments.
    pub initial_gap: f64,
    pub max_mass_error: f64,
    /// Step at which the word limit stopped the enumeration, if it did.
    pub stopped_at: Option<usize>,
}

impl TrendReport {
    pub fn conserves_mass(&self) -> bool {
        self.max_mass_error <= MASS_TOL
    }

    /// Increments end closer to ell than they start.
    pub fn approaches(&self) -> bool {
        self.final_gap <= self.initial_gap
    }
}

/// Enumerate up to `n_max` steps (stopping early at the word limit) and
/// compare the expected block-length increments with `ell`.
pub fn drift_trend(model: &ModelSpec, n_max: usize, ell: f64, limit: usize) -> Result<TrendReport> {
    if n_max > MAX_ENUMERATION_STEPS {
        return Err(Error::Domain(format!(
            "enumeration horizon {n_max} exceeds {MAX_ENUMERATION_STEPS}"
        )));
    }
    let mut e = Enumerator::new(model)?.with_limit(limit);
    let mut layers = vec![e.summary()];
    let mut stopped_at = None;
    while e.step() < n_max {
        match e.advance() {
            Ok(()) => layers.push(e.summary()),
            Err(Error::Explosion { step, .. }) => {
                stopped_at = Some(step);
                break;
            }
            Err(err) => return Err(err),
        }
    }
    let increments: Vec<f64> = layers
        .windows(2)
        .map(|w| w[1].mean_length - w[0].mean_length)
        .collect();
    let gap = |s: &[f64]| s.iter().fold(0.0f64, |m, d| m.max((d - ell).abs()));
    let k = increments.len();
    Ok(TrendReport {
        final_gap: gap(&increments[k.saturating_sub(2)..]),
        initial_gap: gap(&increments[..k.min(2)]),
        max_mass_error: layers
            .iter()
            .fold(0.0f64, |m, l| m.max((l.total_mass - 1.0).abs())),
        layers,
        increments,
        stopped_at,
    })
}

/// Outcome of one family of coefficient identities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    /// Number of concrete instances compared.
    pub cases: usize,
    pub max_discrepancy: f64,
    /// Instance that produced the largest discrepancy.
    pub worst_case: String,
    pub error_bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub order: usize,
    pub tolerance: f64,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Tally {
    name: &'static str,
    cases: usize,
    worst: f64,
    worst_case: String,
    bound: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            cases: 0,
            worst: 0.0,
            worst_case: String::new(),
            bound: 0.0,
        }
    }

    fn record(&mut self, case: impl FnOnce() -> String, lhs: &TruncatedSeries, rhs: &TruncatedSeries) {
        let d = lhs.max_diff(rhs);
        self.cases += 1;
        self.bound = self.bound.max(lhs.error_bound() + rhs.error_bound());
        if d > self.worst || self.worst_case.is_empty() {
            self.worst = self.worst.max(d);
            self.worst_case = case();
        }
    }

    fn finish(self, tol: f64) -> IdentityCheck {
        IdentityCheck {
            name: self.name.into(),
            cases: self.cases,
            max_discrepancy: self.worst,
            worst_case: self.worst_case,
            error_bound: self.bound,
            passed: self.cases > 0 && self.worst <= tol,
        }
    }
}

/// Memoized product-walk series.
struct Cache<'a> {
    walk: &'a ProductWalk,
    order: usize,
    memo: HashMap<(Letters, Letters, u8), TruncatedSeries>,
}

impl Cache<'_> {
    fn get(&mut self, x: &[Letter], y: &[Letter], kind: Passage) -> TruncatedSeries {
        let key = (x.to_vec(), y.to_vec(), kind as u8);
        if let Some(s) = self.memo.get(&key) {
            return s.clone();
        }
        let s = dp_series(self.walk.passage_series(x, y, self.order, kind), self.order);
        self.memo.insert(key, s.clone());
        s
    }
}

fn show(w: &[Letter], factors: &[&FiniteFactor]) -> String {
    if w.is_empty() {
        return "o".into();
    }
    w.iter()
        .map(|&(i, s)| format!("{}:{}", i + 1, factors[i as usize].labels()[s as usize]))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Words used as sample points: one near and one far state per factor, and
/// a two-block word.
fn sample_letters(factors: &[&FiniteFactor]) -> (Vec<Letter>, Vec<Letter>) {
    let near = factors
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let s = f.successors(f.root()).map(|(s, _)| s).min().expect("root has successors");
            (i as u16, s as u16)
        })
        .collect();
    let far = factors
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let s = (0..f.len())
                .filter(|&s| s != f.root())
                .max_by_key(|&s| (f.distance(s), std::cmp::Reverse(s)))
                .expect("factor has a non-root state");
            (i as u16, s as u16)
        })
        .collect();
    (near, far)
}

/// Coefficient checks of the generating-function identities on the free
/// product, through `z^order`:
///
/// * G(x,x) = 1/(1-U(x,x)), G(x,y) = F(x,y) G(y,y), G(x,y) = G(x,x) L(x,y);
/// * F(o,xw) = F(o,x) F(x,xw), L(o,xw) = L(o,x) L(x,xw), L(x,xw) = L(o,w)
///   whenever the first block of w is not of the type of x;
/// * F(x,y|z) = F_i(x,y|xi_i(z)) and L(x,y|z) = L_i(x,y|xi_i(z)) for x, y
///   in one factor;
/// * p^(n)(o,o) against 1/(1 - sum_i H_i(z)).
///
/// Product-side series come from word DP, factor-side series from DP inside
/// each factor composed with `xi_series`.
pub fn check_lemma_identities(model: &ModelSpec, order: usize) -> Result<IdentityReport> {
    if order > MAX_IDENTITY_ORDER {
        return Err(Error::Domain(format!("identity order {order} exceeds {MAX_IDENTITY_ORDER}")));
    }
    let factors = finite_factors(model)?;
    let walk = ProductWalk::new(model)?;
    let mut cache = Cache {
        walk: &walk,
        order,
        memo: HashMap::new(),
    };
    let tol = IDENTITY_TOL;
    let one = TruncatedSeries::constant(1.0, order);
    let (near, far) = sample_letters(&factors);
    let r = factors.len();

    let mut points: Vec<Letters> = vec![Vec::new()];
    points.extend(near.iter().map(|&l| vec![l]));
    points.push(vec![far[0], near[1 % r]]);

    let mut t_i = Tally::new("G(x,x) = 1/(1-U(x,x))");
    let mut t_ii = Tally::new("G(x,y) = F(x,y) G(y,y)");
    let mut t_iii = Tally::new("G(x,y) = G(x,x) L(x,y)");
    for x in &points {
        let g = cache.get(x, x, Passage::Green);
        let u = cache.get(x, x, Passage::Return);
        t_i.record(|| show(x, &factors), &g, &one.sub(&u).inverse());
        for y in &points {
            let gxy = cache.get(x, y, Passage::Green);
            let f = cache.get(x, y, Passage::First);
            let gyy = cache.get(y, y, Passage::Green);
            let l = cache.get(x, y, Passage::LastExit);
            let case = || format!("x = {}, y = {}", show(x, &factors), show(y, &factors));
            t_ii.record(case, &gxy, &f.mul(&gyy));
            t_iii.record(case, &gxy, &g.mul(&l));
        }
    }

    let mut t_iv = Tally::new("F(o,xw) = F(o,x) F(x,xw)");
    let mut t_v = Tally::new("L(o,xw) = L(o,x) L(x,xw)");
    let mut t_vi = Tally::new("L(x,xw) = L(o,w)");
    let mut xs: Vec<Letters> = near.iter().map(|&l| vec![l]).collect();
    xs.extend(far.iter().filter(|l| !near.contains(l)).map(|&l| vec![l]));
    xs.push(vec![near[1 % r], far[0]]);
    for x in &xs {
        let tau = x.last().expect("nonempty").0;
        let mut ws: Vec<Letters> = Vec::new();
        for j in (0..r as u16).filter(|&j| j != tau) {
            ws.push(vec![near[j as usize]]);
            if far[j as usize] != near[j as usize] {
                ws.push(vec![far[j as usize]]);
            }
        }
        let j = (tau as usize + 1) % r;
        ws.push(vec![far[j], near[(j + 1) % r]]);
        for w in &ws {
            let xw: Letters = x.iter().chain(w).copied().collect();
            let case = || format!("x = {}, w = {}", show(x, &factors), show(w, &factors));
            let f_lhs = cache.get(&[], &xw, Passage::First);
            let f_rhs = cache.get(&[], x, Passage::First).mul(&cache.get(x, &xw, Passage::First));
            t_iv.record(case, &f_lhs, &f_rhs);
            let l_x_xw = cache.get(x, &xw, Passage::LastExit);
            let l_lhs = cache.get(&[], &xw, Passage::LastExit);
            let l_rhs = cache.get(&[], x, Passage::LastExit).mul(&l_x_xw);
            t_v.record(case, &l_lhs, &l_rhs);
            t_vi.record(case, &l_x_xw, &cache.get(&[], w, Passage::LastExit));
        }
    }

    let xi = xi_series(model, order)?;
    let mut t_f = Tally::new("F(x,y|z) = F_i(x,y|xi_i(z))");
    let mut t_l = Tally::new("L(x,y|z) = L_i(x,y|xi_i(z))");
    for (i, f) in factors.iter().enumerate() {
        for s in 0..f.len() {
            for t in (0..f.len()).filter(|&t| t != s) {
                let (ws, wt) = (walk.embed(i, s), walk.embed(i, t));
                let case = || format!("factor {}, x = {}, y = {}", i + 1, f.labels()[s], f.labels()[t]);
                let fi = dp_series(factor_passage_series(f, s, t, order, Passage::First), order);
                t_f.record(case, &cache.get(&ws, &wt, Passage::First), &fi.compose(&xi[i]));
                let li = dp_series(factor_passage_series(f, s, t, order, Passage::LastExit), order);
                t_l.record(case, &cache.get(&ws, &wt, Passage::LastExit), &li.compose(&xi[i]));
            }
        }
    }

    let mut t_g = Tally::new("p^(n)(o,o) = [z^n] 1/(1 - sum_i H_i(z))");
    let total = h_series(model, &xi)?
        .iter()
        .fold(TruncatedSeries::zero(order), |acc, s| acc.add(s));
    t_g.record(|| "o".into(), &cache.get(&[], &[], Passage::Green), &one.sub(&total).inverse());

    let checks = [t_i, t_ii, t_iii, t_iv, t_v, t_vi, t_f, t_l, t_g]
        .into_iter()
        .map(|t| t.finish(tol))
        .collect();
    Ok(IdentityReport {
        order,
        tolerance: tol,
        checks,
    })
}
