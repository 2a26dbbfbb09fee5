mod common;

use common::*;
use escape_rate::catalog::{flip_tree, lattice_flip_model, non_cayley_model};
use escape_rate::oracle::{
    check_lemma_identities, drift_trend, enumerate_distribution, root_green_series, xi_series, xi_series_step,
    Enumerator, TruncatedSeries,
};
use escape_rate::xi::fixed_point;
use escape_rate::{analyze, Error, SolverOptions};

#[test]
fn xi_series_is_a_fixed_point_of_the_iteration() {
    for m in [non_cayley_model(), flip_tree(4), random_model(1), random_model(2)] {
        let xi = xi_series(&m, 20).unwrap();
        let again = xi_series_step(&m, &xi).unwrap();
        for (a, b) in xi.iter().zip(&again) {
            assert!(a.max_diff(b) <= a.error_bound() + b.error_bound() + 1e-15);
        }
    }
}

#[test]
fn xi_series_agrees_with_the_solver_inside_the_disc() {
    let opts = SolverOptions::default();
    for m in [non_cayley_model(), flip_tree(3), random_model(4), random_model(5), random_model(6)] {
        let xi = xi_series(&m, 30).unwrap();
        for z in [0.1, 0.3] {
            let fp = fixed_point(&m, z, opts, None).unwrap();
            for (s, &x) in xi.iter().zip(&fp.xi) {
                // Coefficients are nonnegative with sum xi_i(1) < 1, so the tail
                // past order 30 is below z^31.
                let tail = z.powi(31);
                assert!((s.eval(z) - x).abs() <= tail + s.error_bound() + 1e-13, "z = {z}");
            }
        }
    }
}

#[test]
fn xi_series_low_orders_from_finite_differences() {
    // The solution at small z pins the first Taylor coefficients: xi_i(z) = a_i z + O(z^2).
    let m = non_cayley_model();
    let xi = xi_series(&m, 10).unwrap();
    let opts = SolverOptions { tol: 1e-16, max_iter: 1_000_000 };
    let h = 1e-3;
    let p = fixed_point(&m, h, opts, None).unwrap();
    let q = fixed_point(&m, 2.0 * h, opts, None).unwrap();
    for i in 0..m.len() {
        assert!(close(xi[i].coeff(0), 0.0, 0.0));
        assert!(close(xi[i].coeff(1), m.weight(i), 1e-15));
        // Richardson: (4 xi(h) - xi(2h)) / (2 h) kills the quadratic term.
        let d1 = (4.0 * p.xi[i] - q.xi[i]) / (2.0 * h);
        assert!(close(d1, xi[i].coeff(1), 1e-5), "{d1}");
        let c2 = (q.xi[i] - 2.0 * p.xi[i]) / (2.0 * h * h);
        assert!(close(c2, xi[i].coeff(2), 1e-2), "{c2} vs {}", xi[i].coeff(2));
    }
}

#[test]
fn series_arithmetic() {
    let z = TruncatedSeries::identity(8);
    let one = TruncatedSeries::constant(1.0, 8);
    let geo = one.sub(&z).inverse();
    for k in 0..=8 {
        assert_eq!(geo.coeff(k), 1.0);
    }
    assert!(geo.mul(&one.sub(&z)).max_diff(&one) < 1e-15);
    let sq = z.mul(&z);
    let composed = geo.compose(&sq);
    for k in 0..=8 {
        assert_eq!(composed.coeff(k), if k % 2 == 0 { 1.0 } else { 0.0 });
    }
    assert!(close(geo.eval(0.5), (1.0 - 0.5f64.powi(9)) / 0.5, 1e-15));
}

#[test]
fn enumeration_conserves_mass_and_matches_return_series() {
    for (m, horizon) in [(non_cayley_model(), 8), (flip_tree(3), 12), (random_model(7), 7)] {
        let g = root_green_series(&m, horizon).unwrap();
        let mut e = Enumerator::new(&m).unwrap();
        for n in 0..=horizon {
            if n > 0 {
                e.advance().unwrap();
            }
            let s = e.summary();
            assert_eq!(s.step, n);
            assert!((s.total_mass - 1.0).abs() < 1e-12, "step {n}: {}", s.total_mass);
            assert!(e.law().values().all(|&p| p > 0.0));
            let ret = e.law().get(&Vec::new()).copied().unwrap_or(0.0);
            assert_eq!(ret, s.return_probability);
            assert!((ret - g.coeff(n)).abs() < 1e-12, "step {n}: {ret} vs {}", g.coeff(n));
            // Z_n has at most n blocks.
            assert!(e.law().keys().all(|w| w.len() <= n));
        }
    }
    let laws = enumerate_distribution(&flip_tree(3), 4).unwrap();
    assert_eq!(laws.len(), 5);
    // Even lengths only: 1 + 3*2 + 3*2*2*2 words.
    assert_eq!(laws[4].len(), 31);
}

#[test]
fn enumerator_guard_and_unsupported_models() {
    let mut e = Enumerator::new(&flip_tree(5)).unwrap().with_limit(100);
    let mut err = None;
    for _ in 0..10 {
        if let Err(x) = e.advance() {
            err = Some(x);
            break;
        }
    }
    assert!(matches!(err, Some(Error::Explosion { .. })));
    assert!(Enumerator::new(&lattice_flip_model()).is_err());
    assert!(xi_series(&lattice_flip_model(), 4).is_err());
    assert!(xi_series(&flip_tree(3), 31).is_err());
}

#[test]
fn identities_on_random_models() {
    for k in 0..6 {
        let m = random_model(k);
        let report = check_lemma_identities(&m, 7).unwrap();
        let bad: Vec<_> = report.failures().map(|c| (&c.name, c.max_discrepancy)).collect();
        assert!(bad.is_empty(), "model {k}: {bad:?}");
        assert_eq!(report.checks.len(), 9);
    }
}

#[test]
fn expected_increments_approach_the_drift() {
    for r in [3, 4] {
        let m = flip_tree(r);
        let ell = analyze(&m, SolverOptions::default()).unwrap().ell_dgf;
        let t = drift_trend(&m, 12, ell, 10_000_000).unwrap();
        assert!(t.conserves_mass());
        assert!(t.approaches());
        assert!(t.stopped_at.is_none());
        assert!(t.final_gap < 0.05, "r = {r}: {}", t.final_gap);
        // The first step always leaves the root.
        assert_eq!(t.increments[0], 1.0);
    }
}
