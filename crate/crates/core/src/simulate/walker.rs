use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::word::{Block, Move, Site, Word};
use crate::factor::{Factor, LatticeKind};
use crate::model::ModelSpec;

#[derive(Debug, Clone)]
enum FactorSampler {
    Finite {
        root: usize,
        targets: Vec<Vec<usize>>,
        rows: Vec<WeightedIndex<f64>>,
        distance: Vec<usize>,
    },
    Lattice(LatticeKind),
}

impl FactorSampler {
    fn new(factor: &Factor) -> Self {
        match factor {
            Factor::Finite(f) => {
                let mut targets = Vec::with_capacity(f.len());
                let mut rows = Vec::with_capacity(f.len());
                for x in 0..f.len() {
                    let (t, w): (Vec<usize>, Vec<f64>) = f.successors(x).unzip();
                    rows.push(WeightedIndex::new(w).expect("rows are validated"));
                    targets.push(t);
                }
                FactorSampler::Finite {
                    root: f.root(),
                    targets,
                    rows,
                    distance: (0..f.len()).map(|x| f.distance(x)).collect(),
                }
            }
            Factor::Analytic(a) => FactorSampler::Lattice(a.kind()),
        }
    }

    fn root(&self) -> Site {
        match self {
            FactorSampler::Finite { root, .. } => Site::Finite(*root),
            FactorSampler::Lattice(_) => Site::Lattice(0, 0),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, from: Site, rng: &mut R) -> Site {
        match (self, from) {
            (FactorSampler::Finite { targets, rows, .. }, Site::Finite(x)) => {
                Site::Finite(targets[x][rows[x].sample(rng)])
            }
            (FactorSampler::Lattice(LatticeKind::Z1), Site::Lattice(x, y)) => {
                if rng.random_bool(0.5) {
                    Site::Lattice(x + 1, y)
                } else {
                    Site::Lattice(x - 1, y)
                }
            }
            (FactorSampler::Lattice(LatticeKind::Z2), Site::Lattice(x, y)) => {
                match rng.random_range(0..4u8) {
                    0 => Site::Lattice(x + 1, y),
                    1 => Site::Lattice(x - 1, y),
                    2 => Site::Lattice(x, y + 1),
                    _ => Site::Lattice(x, y - 1),
                }
            }
            _ => unreachable!("site kind does not match factor kind"),
        }
    }

    fn distance(&self, site: Site) -> usize {
        match (self, site) {
            (FactorSampler::Finite { distance, .. }, Site::Finite(x)) => distance[x],
            (FactorSampler::Lattice(_), Site::Lattice(x, y)) => (x.unsigned_abs() + y.unsigned_abs()) as usize,
            _ => unreachable!("site kind does not match factor kind"),
        }
    }
}

/// Samples moves of the lifted walk P = sum_i alpha_i P_i on words.
#[derive(Debug, Clone)]
pub struct Walker {
    choose: WeightedIndex<f64>,
    factors: Vec<FactorSampler>,
}

impl Walker {
    pub fn new(model: &ModelSpec) -> Self {
        Walker {
            choose: WeightedIndex::new(model.weights().iter().copied())
                .expect("weights are validated"),
            factors: model.factors().iter().map(FactorSampler::new).collect(),
        }
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn root_site(&self, factor: usize) -> Site {
        self.factors[factor].root()
    }

    pub fn is_root(&self, block: &Block) -> bool {
        block.site == self.root_site(block.factor)
    }

    /// Markovian distance of a block from its factor root.
    pub fn block_distance(&self, block: &Block) -> usize {
        self.factors[block.factor].distance(block.site)
    }

    /// Markovian length |x|: the within-factor distances summed over blocks.
    pub fn markovian_length(&self, word: &Word) -> usize {
        word.blocks().iter().map(|b| self.block_distance(b)).sum()
    }

    /// Site that factor `factor` currently occupies in `word`.
    pub fn current_site(&self, word: &Word, factor: usize) -> Site {
        match word.top() {
            Some(top) if top.factor == factor => top.site,
            _ => self.root_site(factor),
        }
    }

    /// Sample the factor to move and its destination, without applying it.
    pub fn sample_move<R: Rng + ?Sized>(&self, word: &Word, rng: &mut R) -> (usize, Site) {
        let i = self.choose.sample(rng);
        let from = self.current_site(word, i);
        (i, self.factors[i].sample(from, rng))
    }

    /// Apply a move of factor `factor` to `site`.
    pub fn apply(&self, word: &mut Word, factor: usize, site: Site) -> Move {
        let is_root = site == self.root_site(factor);
        word.apply(factor, site, is_root)
    }

    /// One step of the walk on the free product.
    pub fn step<R: Rng + ?Sized>(&self, word: &mut Word, rng: &mut R) -> Move {
        let (i, site) = self.sample_move(word, rng);
        self.apply(word, i, site)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forced_push_and_pop() {
        let model = catalog::non_cayley_model();
        let walker = Walker::new(&model);
        let mut w = Word::new();
        assert_eq!(walker.apply(&mut w, 0, Site::Finite(1)), Move::Push);
        assert_eq!(w.len(), 1);
        assert_eq!(walker.apply(&mut w, 0, Site::Finite(0)), Move::Pop);
        assert!(w.is_empty());
    }

    #[test]
    fn lattice_sites_and_distance() {
        let model = catalog::lattice_flip_model();
        let walker = Walker::new(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut w = Word::new();
        for _ in 0..500 {
            walker.step(&mut w, &mut rng);
            assert!(w.is_reduced(|b| walker.is_root(b)));
        }
        for b in w.blocks() {
            match (b.factor, b.site) {
                (0, Site::Lattice(x, y)) => {
                    assert_eq!(walker.block_distance(b), (x.abs() + y.abs()) as usize)
                }
                (1, Site::Finite(1)) => assert_eq!(walker.block_distance(b), 1),
                other => panic!("unexpected block {other:?}"),
            }
        }
    }
}
