//! Ready-made models used throughout the tests and the bundled configs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::factor::{Factor, FiniteFactor, LatticeKind};
use crate::model::ModelSpec;

/// Seven-state factor with U(o, o | z) = 3/5 z^2 + 2/5 z^3.
///
/// The root moves to A, C, D, E, F with probability 1/5 each. D and F step
/// straight back; A and E return directly or through B with probability 1/2
/// each; C always passes through B. This realizes
/// F(A,o) = F(E,o) = z/2 + z^2/2, F(C,o) = z^2, F(D,o) = F(F,o) = z.
pub fn seven_state_factor() -> FiniteFactor {
    let labels: Vec<String> = ["o", "A", "B", "C", "D", "E", "F"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let fifth = 0.2;
    let rows = vec![
        vec![0.0, fifth, 0.0, fifth, fifth, fifth, fifth],
        vec![0.5, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.5, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    ];
    FiniteFactor::new(labels, 0, rows, false).expect("seven-state factor is valid")
}

/// Three-state star: the root jumps to one of two leaves, which jump back.
/// G(o, o | z) = 1 / (1 - z^2), as for the two-element group, but the graph
/// is not vertex-transitive.
pub fn star_factor(leaves: [&str; 2]) -> FiniteFactor {
    FiniteFactor::new(
        vec!["o".into(), leaves[0].into(), leaves[1].into()],
        0,
        vec![
            vec![0.0, 0.5, 0.5],
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
        ],
        false,
    )
    .expect("star factor is valid")
}

/// Seven-state factor and two stars with weights (5/9, 2/9, 2/9).
pub fn non_cayley_model() -> ModelSpec {
    ModelSpec::new(
        vec![
            seven_state_factor().into(),
            star_factor(["G", "H"]).into(),
            star_factor(["I", "J"]).into(),
        ],
        vec![5.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0],
    )
    .expect("valid model")
}

/// Simple random walk on Z^2 * Z/2 with weights (4/5, 1/5).
pub fn lattice_flip_model() -> ModelSpec {
    ModelSpec::new(
        vec![Factor::lattice(LatticeKind::Z2), Factor::flip()],
        vec![0.8, 0.2],
    )
    .expect("valid model")
}

/// Free product of `r` copies of Z/2 with equal weights: the simple random
/// walk on the (r)-regular tree.
pub fn flip_tree(r: usize) -> ModelSpec {
    ModelSpec::uniform((0..r).map(|_| Factor::flip()).collect()).expect("valid model")
}

/// Reversible walk on a random connected graph: symmetric edge weights on a
/// random spanning tree plus a few extra edges, rows normalized after a mild
/// perturbation of the nonzero entries, so reversibility is only rough.
pub fn random_finite(rng: &mut impl Rng, n: usize) -> FiniteFactor {
    let mut w = vec![vec![0.0; n]; n];
    for y in 1..n {
        let x = rng.random_range(0..y);
        let v = rng.random_range(0.2..1.0);
        w[x][y] = v;
        w[y][x] = v;
    }
    for _ in 0..n {
        let (x, y) = (rng.random_range(0..n), rng.random_range(0..n));
        if x != y {
            let v = rng.random_range(0.1..1.0);
            w[x][y] = v;
            w[y][x] = v;
        }
    }
    for row in &mut w {
        for v in row.iter_mut().filter(|v| **v > 0.0) {
            *v *= rng.random_range(0.8..1.25);
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    let labels = (0..n).map(|k| format!("s{k}")).collect();
    FiniteFactor::new(labels, 0, w, false).expect("random factor is valid")
}

/// Random walk on Z/n with random increments; the step +1 always has weight.
pub fn random_cyclic(rng: &mut impl Rng, n: usize) -> FiniteFactor {
    let mut inc: Vec<f64> = (0..n)
        .map(|k| if k == 0 { 0.0 } else { rng.random_range(0.0..1.0) })
        .collect();
    inc[1] += 0.3;
    let s: f64 = inc.iter().sum();
    inc.iter_mut().for_each(|v| *v /= s);
    FiniteFactor::cyclic(&inc).expect("cyclic factor is valid")
}

pub fn random_weights(rng: &mut impl Rng, r: usize) -> Vec<f64> {
    let mut a: Vec<f64> = (0..r).map(|_| rng.random_range(0.2..1.0)).collect();
    let s: f64 = a.iter().sum();
    a.iter_mut().for_each(|v| *v /= s);
    a
}

/// Model `k` of the randomized corpus: 2 to 4 factors of 2 to 8 states.
/// When `k` is a multiple of 3 every factor is a cyclic group walk, so the
/// group formula applies. Draws that hit the excluded two flips are redrawn.
pub fn random_model(k: u64) -> ModelSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + k);
    let r = rng.random_range(2..=4usize);
    loop {
        let factors: Vec<Factor> = (0..r)
            .map(|_| {
                let n = rng.random_range(2..=8usize);
                if k.is_multiple_of(3) {
                    random_cyclic(&mut rng, n).into()
                } else {
                    random_finite(&mut rng, n).into()
                }
            })
            .collect();
        if let Ok(m) = ModelSpec::new(factors, random_weights(&mut rng, r)) {
            return m;
        }
    }
}
