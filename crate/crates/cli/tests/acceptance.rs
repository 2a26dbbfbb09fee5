//! Acceptance criteria, one line each. Runs as its own test binary without
//! the libtest harness so the lines print in order.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use escape_rate::catalog::{flip_tree, lattice_flip_model, non_cayley_model, random_model, seven_state_factor};
use escape_rate::drift::{analyze_unchecked, DriftReport};
use escape_rate::factor::z2_w_by_quadrature;
use escape_rate::oracle::{check_lemma_identities, factor_passage_series, Passage};
use escape_rate::simulate::{simulate, SimulationConfig};
use escape_rate::xi::normalization_sum;
use escape_rate::{analyze, Factor, LatticeKind, ModelSpec, SolverOptions};

type Outcome = Result<String, String>;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn near(what: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what} = {got}, expected {want} +- {tol:e}"))
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    if t < limit {
        Ok(())
    } else {
        Err(format!("took {t:.2?}, limit {limit:?}"))
    }
}

fn report(d: &DriftReport) -> String {
    format!("ell = {:.6} (exit) / {:.6} (dgf)", d.ell_exit_time, d.ell_dgf)
}

fn non_cayley_regression() -> Outcome {
    let start = Instant::now();
    let u = factor_passage_series(&seven_state_factor(), 0, 0, 10, Passage::Return);
    for (k, c) in u.iter().enumerate() {
        let want = match k {
            2 => 0.6,
            3 => 0.4,
            _ => 0.0,
        };
        near(&format!("[z^{k}] U_1"), *c, want, 1e-15)?;
    }
    let d = analyze(&non_cayley_model(), opts()).map_err(|e| e.to_string())?;
    let tol = 1e-4;
    near("xi_1", d.xi.xi[0], 0.66571, tol)?;
    near("xi_2", d.xi.xi[1], 0.37231, tol)?;
    near("xi_3", d.xi.xi[2], 0.37231, tol)?;
    let q = [[0.0, 0.5, 0.5], [0.62769, 0.0, 0.37231], [0.62769, 0.37231, 0.0]];
    for i in 0..3 {
        for j in 0..3 {
            near(&format!("qhat({},{})", i + 1, j + 1), d.type_chain.qhat[i][j], q[i][j], tol)?;
        }
    }
    near("nu(1)", d.type_chain.nu[0], 0.38563, tol)?;
    near("nu(2)", d.type_chain.nu[1], 0.30718, tol)?;
    near("nu(3)", d.type_chain.nu[2], 0.30718, tol)?;
    near("ell (exit time)", d.ell_exit_time, 0.33089, tol)?;
    near("ell (dgf)", d.ell_dgf, 0.33089, tol)?;
    within(Duration::from_secs(1), start)?;
    Ok(format!("{}, {:.1?}", report(&d), start.elapsed()))
}

fn lattice_regression() -> Outcome {
    let start = Instant::now();
    let d = analyze(&lattice_flip_model(), opts()).map_err(|e| e.to_string())?;
    let tol = 5e-4;
    near("xi_1", d.xi.xi[0], 0.84426, tol)?;
    near("W(1)", d.xi.g_root, 1.40724, tol)?;
    near("G_1(xi_1)", d.xi.green_at_xi[0], 1.33347, tol)?;
    near("xi_2", d.xi.xi[1], 0.26212, tol)?;
    near("G_2(xi_2)", d.xi.green_at_xi[1], 1.07378, tol)?;
    let group = d.ell_group.ok_or("no group formula")?;
    near("ell (group)", group, 0.23386, tol)?;
    near("ell (dgf)", d.ell_dgf, 0.23386, tol)?;
    // Planar Green function by quadrature against the elliptic integral.
    let x = d.xi.xi[0];
    for z in [0.2, 0.5, 0.8, 0.95, x] {
        let planar = Factor::lattice(LatticeKind::Z2);
        let by_k = z * planar.green(z).map_err(|e| e.to_string())?;
        near(&format!("W_1({z}) by quadrature"), z2_w_by_quadrature(z, 64), by_k, 1e-8)?;
    }
    within(Duration::from_secs(5), start)?;
    Ok(format!("ell = {:.6} (group) / {:.6} (dgf), {:.1?}", group, d.ell_dgf, start.elapsed()))
}

fn trees() -> Outcome {
    for r in 3..=5 {
        let d = analyze(&flip_tree(r), opts()).map_err(|e| e.to_string())?;
        let rf = r as f64;
        for x in &d.xi.xi {
            near(&format!("r = {r}: xi"), *x, 1.0 / (rf - 1.0), 1e-10)?;
        }
        let ell = (rf - 2.0) / rf;
        near(&format!("r = {r}: ell (exit)"), d.ell_exit_time, ell, 1e-10)?;
        near(&format!("r = {r}: ell (dgf)"), d.ell_dgf, ell, 1e-10)?;
        near(&format!("r = {r}: ell (group)"), d.ell_group.ok_or("no group formula")?, ell, 1e-10)?;
    }
    Ok("r = 3, 4, 5".into())
}

fn random_agreement() -> Outcome {
    let (mut worst, mut worst_group, mut transitive) = (0.0f64, 0.0f64, 0);
    let mut sizes = std::collections::BTreeSet::new();
    let mut arities = std::collections::BTreeSet::new();
    for k in 0..25 {
        let m = random_model(k);
        arities.insert(m.len());
        sizes.extend(m.factors().iter().filter_map(|f| f.state_count()));
        let d = analyze_unchecked(&m, opts()).map_err(|e| format!("model {k}: {e}"))?;
        let gap = (d.ell_exit_time - d.ell_dgf).abs();
        worst = worst.max(gap);
        if gap >= 1e-9 {
            return Err(format!("model {k}: |exit - dgf| = {gap:e}"));
        }
        if let Some(g) = d.ell_group {
            transitive += 1;
            let gap = (g - d.ell_dgf).abs();
            worst_group = worst_group.max(gap);
            if gap >= 1e-9 {
                return Err(format!("model {k}: |group - dgf| = {gap:e}"));
            }
        }
    }
    Ok(format!(
        "25 models, r in {arities:?}, sizes {}..{}, {transitive} transitive; max gaps {worst:.1e} / {worst_group:.1e}",
        sizes.first().unwrap(),
        sizes.last().unwrap()
    ))
}

fn identity_suite() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (name, m) in [("tree-r3", flip_tree(3)), ("non-Cayley", non_cayley_model())] {
        let r = check_lemma_identities(&m, 12).map_err(|e| e.to_string())?;
        if r.tolerance > 1e-10 {
            return Err(format!("tolerance {:e} is looser than 1e-10", r.tolerance));
        }
        if r.check("p^(n)(o,o) = [z^n] 1/(1 - sum_i H_i(z))").is_none() {
            return Err("return-probability check missing".into());
        }
        if let Some(c) = r.failures().next() {
            return Err(format!("{name}: {} off by {:e} at {}", c.name, c.max_discrepancy, c.worst_case));
        }
        worst = r.checks.iter().map(|c| c.max_discrepancy).fold(worst, f64::max);
    }
    within(Duration::from_secs(30), start)?;
    Ok(format!("9 identities through order 12, max discrepancy {worst:.1e}, {:.1?}", start.elapsed()))
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let cfg = SimulationConfig::new(20_000, 200, 7);
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for (name, m) in [("tree-r3", flip_tree(3)), ("non-Cayley", non_cayley_model()), ("lattice", lattice_flip_model())] {
        let d = analyze(&m, opts()).map_err(|e| e.to_string())?;
        let s = simulate(&m, &cfg).map_err(|e| e.to_string())?;
        let z = s.drift.z_score(d.ell());
        worst.0 = worst.0.max(z);
        if z > 4.0 {
            return Err(format!("{name}: drift {} vs {} is {z:.2} SE off", s.drift.mean, d.ell()));
        }
        for (i, (e, nu)) in s.partial_share.iter().zip(&d.type_chain.nu).enumerate() {
            let z = e.z_score(*nu);
            worst.1 = worst.1.max(z);
            if z > 3.0 {
                return Err(format!("{name}: share {} = {} vs nu = {nu} is {z:.2} SE off", i + 1, e.mean));
            }
        }
        if name == "non-Cayley" {
            let lambda = d.markovian.ok_or("no Markovian rate")?;
            let z = s.markovian.z_score(lambda);
            worst.2 = z;
            if z > 3.0 {
                return Err(format!("{name}: lambda {} vs {lambda} is {z:.2} SE off", s.markovian.mean));
            }
        }
    }
    within(Duration::from_secs(60), start)?;
    Ok(format!(
        "max |z|: drift {:.2}, shares {:.2}, lambda {:.2}; {:.1?}",
        worst.0,
        worst.1,
        worst.2,
        start.elapsed()
    ))
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

const EXAMPLES: [&str; 3] = ["tree-r3.json", "non-cayley.json", "lattice-flip.json"];

fn determinism() -> Outcome {
    for ex in EXAMPLES {
        let mut outputs = Vec::new();
        for threads in ["1", "4", "8"] {
            let o = Command::new(env!("CARGO_BIN_EXE_escape-rate"))
                .args(["simulate", example(ex).to_str().unwrap(), "--steps", "20000", "--trials", "200", "--seed", "7"])
                .env("ESCAPE_RATE_THREADS", threads)
                .output()
                .map_err(|e| e.to_string())?;
            if !o.status.success() {
                return Err(format!("{ex}: {}", String::from_utf8_lossy(&o.stderr)));
            }
            outputs.push(o.stdout);
        }
        if outputs.iter().any(|o| *o != outputs[0]) {
            return Err(format!("{ex}: reports differ across thread counts"));
        }
    }
    Ok("3 configs, 1/4/8 threads, byte-identical".into())
}

fn structural() -> Outcome {
    let mut corpus: Vec<(String, ModelSpec)> = (3..=5).map(|r| (format!("tree-r{r}"), flip_tree(r))).collect();
    corpus.push(("non-Cayley".into(), non_cayley_model()));
    corpus.push(("lattice".into(), lattice_flip_model()));
    corpus.push((
        "Z * Z/2".into(),
        ModelSpec::new(vec![Factor::lattice(LatticeKind::Z1), Factor::flip()], vec![0.5, 0.5]).unwrap(),
    ));
    corpus.extend((0..25).map(|k| (format!("random {k}"), random_model(k))));
    for ex in EXAMPLES {
        let cfg = escape_rate_cli::config::load_file(&example(ex)).map_err(|e| e.to_string())?;
        corpus.push((ex.into(), cfg.model));
    }
    let (mut norm, mut stat) = (0.0f64, 0.0f64);
    for (name, m) in &corpus {
        let d = analyze_unchecked(m, opts()).map_err(|e| format!("{name}: {e}"))?;
        let n = (normalization_sum(&d.xi) - 1.0).abs();
        let s = d.type_chain.stationarity_residual();
        if n >= 1e-9 {
            return Err(format!("{name}: normalization off by {n:e}"));
        }
        if s >= 1e-10 {
            return Err(format!("{name}: stationarity residual {s:e}"));
        }
        norm = norm.max(n);
        stat = stat.max(s);
    }
    Ok(format!("{} models, max residuals {norm:.1e} / {stat:.1e}", corpus.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("non-Cayley regression", non_cayley_regression),
        ("lattice regression", lattice_regression),
        ("regular trees", trees),
        ("cross-method agreement", random_agreement),
        ("oracle identities", identity_suite),
        ("Monte Carlo consistency", monte_carlo),
        ("determinism", determinism),
        ("structural invariants", structural),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
