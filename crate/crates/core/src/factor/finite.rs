use std::collections::{BTreeMap, VecDeque};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

/// A factor with finitely many states and an explicit transition matrix.
///
/// Construction validates row sums, the zero diagonal and reachability from
/// the root, so every evaluation downstream can assume a proper stochastic
/// matrix on a single communicating class seen from the root.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteFactor {
    labels: Vec<String>,
    root: usize,
    p: DMatrix<f64>,
    transitive: bool,
    distance: Vec<usize>,
}

impl FiniteFactor {
    pub fn new(
        labels: Vec<String>,
        root: usize,
        rows: Vec<Vec<f64>>,
        transitive: bool,
    ) -> Result<Self> {
        let n = labels.len();
        if n < 2 {
            return Err(Error::InvalidFactor(format!(
                "a factor needs at least 2 states, got {n}"
            )));
        }
        if root >= n {
            return Err(Error::InvalidFactor(format!(
                "root index {root} out of range for {n} states"
            )));
        }
        if rows.len() != n {
            return Err(Error::InvalidFactor(format!(
                "expected {n} rows, got {}",
                rows.len()
            )));
        }
        let mut p = DMatrix::zeros(n, n);
        for (x, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidFactor(format!(
                    "row {} has {} entries, expected {n}",
                    labels[x],
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for (y, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidFactor(format!(
                        "p({}, {}) = {v} is not a probability",
                        labels[x], labels[y]
                    )));
                }
                p[(x, y)] = v;
                sum += v;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidFactor(format!(
                    "row {} sums to {sum}, not 1",
                    labels[x]
                )));
            }
            if p[(x, x)] != 0.0 {
                return Err(Error::InvalidFactor(format!(
                    "self-loop at {} (p(x,x) must be 0)",
                    labels[x]
                )));
            }
        }
        let distance = bfs_distances(&p, root);
        if let Some(x) = distance.iter().position(|&d| d == usize::MAX) {
            return Err(Error::InvalidFactor(format!(
                "state {} is not reachable from the root {}",
                labels[x], labels[root]
            )));
        }
        let factor = FiniteFactor {
            labels,
            root,
            p,
            transitive,
            distance,
        };
        if transitive {
            factor.check_transitive()?;
        }
        Ok(factor)
    }

    /// The walk on the two-element group: o <-> a with probability one.
    pub fn flip() -> Self {
        FiniteFactor::new(
            vec!["o".into(), "a".into()],
            0,
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            true,
        )
        .expect("flip factor is valid")
    }

    /// Random walk on the cyclic group Z/n driven by `increments[k]`, the
    /// probability of moving from x to x + k. `increments[0]` must be zero.
    pub fn cyclic(increments: &[f64]) -> Result<Self> {
        let n = increments.len();
        let labels = (0..n).map(|k| k.to_string()).collect();
        let rows = (0..n)
            .map(|x| (0..n).map(|y| increments[(y + n - x) % n]).collect())
            .collect();
        FiniteFactor::new(labels, 0, rows, true)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn is_transitive(&self) -> bool {
        self.transitive
    }

    pub fn transition(&self, x: usize, y: usize) -> f64 {
        self.p[(x, y)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// Nonzero entries of row `x` as `(state, probability)`.
    pub fn successors(&self, x: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len())
            .map(move |y| (y, self.p[(x, y)]))
            .filter(|&(_, v)| v > 0.0)
    }

    /// Markovian distance from the root: least n with p^(n)(o, x) > 0.
    pub fn distance(&self, x: usize) -> usize {
        self.distance[x]
    }

    /// Non-root states grouped by their distance from the root.
    pub fn spheres(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut spheres: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (x, &d) in self.distance.iter().enumerate() {
            if x != self.root {
                spheres.entry(d).or_default().push(x);
            }
        }
        spheres
    }

    fn resolvent_matrix(&self, z: f64) -> Result<DMatrix<f64>> {
        check_unit_interval(z)?;
        let n = self.len();
        Ok(DMatrix::identity(n, n) - &self.p * z)
    }

    /// Column `y` of (I - zP)^-1, i.e. G(x, y | z) for every x.
    pub fn green_to(&self, y: usize, z: f64) -> Result<Vec<f64>> {
        let a = self.resolvent_matrix(z)?;
        solve(a, y, z)
    }

    /// Row `x` of (I - zP)^-1, i.e. G(x, y | z) for every y.
    pub fn green_from(&self, x: usize, z: f64) -> Result<Vec<f64>> {
        let a = self.resolvent_matrix(z)?.transpose();
        solve(a, x, z)
    }

    pub fn green(&self, x: usize, y: usize, z: f64) -> Result<f64> {
        Ok(self.green_to(y, z)?[x])
    }

    pub fn root_green(&self, z: f64) -> Result<f64> {
        self.green(self.root, self.root, z)
    }

    /// d/dz G(o, o | z) as the root-root entry of R P R with R = (I - zP)^-1.
    pub fn root_green_derivative(&self, z: f64) -> Result<f64> {
        let row = DVector::from_vec(self.green_from(self.root, z)?);
        let col = DVector::from_vec(self.green_to(self.root, z)?);
        Ok(row.dot(&(&self.p * col)))
    }

    /// First-visit function F(x, y | z) = G(x, y) / G(y, y).
    pub fn first_passage(&self, x: usize, y: usize, z: f64) -> Result<f64> {
        let col = self.green_to(y, z)?;
        Ok(col[x] / col[y])
    }

    /// Last-exit function L(x, y | z) = G(x, y) / G(x, x).
    pub fn last_exit(&self, x: usize, y: usize, z: f64) -> Result<f64> {
        let row = self.green_from(x, z)?;
        Ok(row[y] / row[x])
    }

    /// L(o, y | z) for every y, from a single solve.
    pub fn last_exit_from_root(&self, z: f64) -> Result<Vec<f64>> {
        let row = self.green_from(self.root, z)?;
        let g = row[self.root];
        Ok(row.into_iter().map(|v| v / g).collect())
    }

    /// First-return function U(o, o | z) = 1 - 1 / G(o, o | z).
    pub fn first_return(&self, z: f64) -> Result<f64> {
        Ok(1.0 - 1.0 / self.root_green(z)?)
    }

    /// p^(n)(o, o) for n = 0..=max_n.
    pub fn series_coefficients(&self, max_n: usize) -> Vec<f64> {
        self.green_series(self.root, self.root, max_n)
    }

    /// p^(n)(x, y) for n = 0..=max_n by repeated vector-matrix products.
    pub fn green_series(&self, x: usize, y: usize, max_n: usize) -> Vec<f64> {
        let mut dist = DVector::zeros(self.len());
        dist[x] = 1.0;
        let pt = self.p.transpose();
        let mut out = Vec::with_capacity(max_n + 1);
        for n in 0..=max_n {
            out.push(dist[y]);
            if n < max_n {
                dist = &pt * dist;
            }
        }
        out
    }

    // A vertex-transitive walk has the same return function at every state.
    fn check_transitive(&self) -> Result<()> {
        let a = self.resolvent_matrix(0.5)?;
        let inv = a
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::NumericalInstability("singular I - P/2".into()))?;
        let g = inv[(self.root, self.root)];
        for x in 0..self.len() {
            if (inv[(x, x)] - g).abs() > 1e-10 * g {
                return Err(Error::InvalidFactor(format!(
                    "factor flagged transitive but G(x,x|1/2) differs at state {}",
                    self.labels[x]
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_unit_interval(z: f64) -> Result<()> {
    if !(0.0..1.0).contains(&z) {
        return Err(Error::Domain(format!("z = {z} is outside [0, 1)")));
    }
    Ok(())
}

fn solve(a: DMatrix<f64>, unit: usize, z: f64) -> Result<Vec<f64>> {
    let n = a.nrows();
    let mut e = DVector::zeros(n);
    e[unit] = 1.0;
    let x = a.lu().solve(&e).ok_or_else(|| {
        Error::NumericalInstability(format!("I - zP is singular at z = {z}"))
    })?;
    if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::NumericalInstability(format!(
            "Green function solve lost positivity at z = {z}"
        )));
    }
    Ok(x.iter().copied().collect())
}

fn bfs_distances(p: &DMatrix<f64>, root: usize) -> Vec<usize> {
    let n = p.nrows();
    let mut dist = vec![usize::MAX; n];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        for y in 0..n {
            if p[(x, y)] > 0.0 && dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                queue.push_back(y);
            }
        }
    }
    dist
}
