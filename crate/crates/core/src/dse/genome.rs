// SPDX-License-Identifier: Apache-2.0

//! Genome encoding and variation operators.
//!
//! A genome is the conv PE vector followed by the FC PE count.

use rand::Rng;

use super::config::MogaConfig;
use super::DseError;
use crate::costmodel::{allocation_bounds, PEAllocation};
use crate::netgraph::NetworkGraph;

/// Inclusive per-gene bounds; the last gene is the FC PE count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenomeBounds {
    pub lb: Vec<u64>,
    pub ub: Vec<u64>,
}

impl GenomeBounds {
    pub fn for_graph(g: &NetworkGraph, fixed_fc_pe: Option<u64>) -> Self {
        let (mut ub, fc_ub) = allocation_bounds(g);
        let mut lb = vec![1; ub.len()];
        match fixed_fc_pe {
            Some(f) => {
                let f = f.min(fc_ub);
                lb.push(f);
                ub.push(f);
            }
            None => {
                lb.push(1);
                ub.push(fc_ub);
            }
        }
        Self { lb, ub }
    }

    pub fn len(&self) -> usize {
        self.lb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lb.is_empty()
    }

    /// Number of distinct genomes.
    pub fn space_size(&self) -> u128 {
        self.lb.iter().zip(&self.ub).map(|(&l, &u)| u128::from(u - l + 1)).product()
    }

    pub fn lower(&self) -> PEAllocation {
        from_genes(&self.lb)
    }

    pub fn upper(&self) -> PEAllocation {
        from_genes(&self.ub)
    }

    pub fn contains(&self, a: &PEAllocation) -> bool {
        let g = to_genes(a);
        g.len() == self.len() && g.iter().zip(self.lb.iter().zip(&self.ub)).all(|(&x, (&l, &u))| l <= x && x <= u)
    }

    /// Every genome in lexicographic order; intended for small spaces.
    pub fn enumerate(&self) -> Vec<PEAllocation> {
        let mut out = Vec::new();
        let mut cur = self.lb.clone();
        loop {
            out.push(from_genes(&cur));
            let mut i = cur.len();
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if cur[i] < self.ub[i] {
                    cur[i] += 1;
                    break;
                }
                cur[i] = self.lb[i];
            }
        }
    }
}

pub(crate) fn to_genes(a: &PEAllocation) -> Vec<u64> {
    let mut g = a.conv_pe.clone();
    g.push(a.fc_pe);
    g
}

pub(crate) fn from_genes(g: &[u64]) -> PEAllocation {
    let (fc, conv) = g.split_last().expect("genome carries an FC gene");
    PEAllocation::new(conv.to_vec(), *fc)
}

/// Uniformly sampled genomes within the graph's bounds.
pub fn initialize_population<R: Rng>(bounds: &GenomeBounds, size: usize, rng: &mut R) -> Vec<PEAllocation> {
    (0..size)
        .map(|_| {
            let genes: Vec<u64> = bounds.lb.iter().zip(&bounds.ub).map(|(&l, &u)| rng.random_range(l..=u)).collect();
            from_genes(&genes)
        })
        .collect()
}

/// Seeded initial population for `g` under `cfg`.
pub fn initial_population_for(g: &NetworkGraph, cfg: &MogaConfig) -> Vec<PEAllocation> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    initialize_population(&GenomeBounds::for_graph(g, cfg.fixed_fc_pe), cfg.population_size, &mut rng)
}

/// One gene of the power mutation for step `s` and threshold `r`.
///
/// With `t = (x - lb)/(ub - lb)`, the gene moves towards `lb` by `s·(x - lb)` when `t < r`,
/// otherwise towards `ub` by `s·(ub - x)`; the result is rounded and clamped.
pub fn mutate_gene(x: u64, lb: u64, ub: u64, s: f64, r: f64) -> u64 {
    if ub <= lb {
        return lb;
    }
    let (xf, lf, uf) = (x as f64, lb as f64, ub as f64);
    let t = (xf - lf) / (uf - lf);
    let y = if t < r { xf - s * (xf - lf) } else { xf + s * (uf - xf) };
    (y.round() as u64).clamp(lb, ub)
}

/// Mutates each gene with probability `rate`, drawing `s = u^p` and `r ~ U(0, 1)`.
pub fn mutate<R: Rng>(
    genome: &PEAllocation,
    bounds: &GenomeBounds,
    rate: f64,
    exponent: f64,
    rng: &mut R,
) -> PEAllocation {
    let mut genes = to_genes(genome);
    for (i, x) in genes.iter_mut().enumerate() {
        if rng.random::<f64>() < rate {
            let s = rng.random::<f64>().powf(exponent);
            let r = rng.random::<f64>();
            *x = mutate_gene(*x, bounds.lb[i], bounds.ub[i], s, r);
        }
    }
    from_genes(&genes)
}

/// Uniform crossover: each gene position is swapped between the children with probability 1/2.
pub fn crossover<R: Rng>(
    a: &PEAllocation,
    b: &PEAllocation,
    rng: &mut R,
) -> Result<(PEAllocation, PEAllocation), DseError> {
    let (mut x, mut y) = (to_genes(a), to_genes(b));
    if x.len() != y.len() {
        return Err(DseError::LengthMismatch { left: x.len(), right: y.len() });
    }
    for i in 0..x.len() {
        if rng.random::<bool>() {
            std::mem::swap(&mut x[i], &mut y[i]);
        }
    }
    Ok((from_genes(&x), from_genes(&y)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{conv_pool_ladder, Shape};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bounds(ub: &[u64]) -> GenomeBounds {
        let mut lb = vec![1; ub.len()];
        lb.push(1);
        let mut ub = ub.to_vec();
        ub.push(1);
        GenomeBounds { lb, ub }
    }

    #[test]
    fn degenerate_bounds_give_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for a in initialize_population(&bounds(&[1, 1]), 10, &mut rng) {
            assert_eq!(a, PEAllocation::new(vec![1, 1], 1));
        }
    }

    #[test]
    fn seeded_population_is_reproducible() {
        let g = conv_pool_ladder("n", Shape::new(16, 16, 1), &[8, 16, 32], 10).unwrap();
        let cfg = MogaConfig { seed: 11, ..MogaConfig::default() };
        assert_eq!(initial_population_for(&g, &cfg), initial_population_for(&g, &cfg));
        let other = MogaConfig { seed: 12, ..cfg.clone() };
        assert_ne!(initial_population_for(&g, &cfg), initial_population_for(&g, &other));
    }

    #[test]
    fn thousand_samples_within_bounds() {
        let b = bounds(&[8, 16, 32]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for a in initialize_population(&b, 1000, &mut rng) {
            assert!(b.contains(&a), "{a}");
        }
    }

    #[test]
    fn mutation_fixed_points() {
        assert_eq!(mutate_gene(3, 3, 3, 0.9, 0.1), 3);
        for x in 1..=8 {
            assert_eq!(mutate_gene(x, 1, 8, 0.0, 0.5), x);
        }
        assert_eq!(mutate_gene(5, 1, 9, 1.0, 0.9), 1);
        assert_eq!(mutate_gene(5, 1, 9, 1.0, 0.1), 9);
    }

    #[test]
    fn ten_thousand_mutations_stay_in_bounds() {
        let b = bounds(&[8, 16, 32]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut a = PEAllocation::new(vec![4, 8, 16], 1);
        for _ in 0..10_000 {
            a = mutate(&a, &b, 1.0, 4.0, &mut rng);
            assert!(b.contains(&a), "{a}");
        }
    }

    #[test]
    fn enumerate_covers_space() {
        let b = bounds(&[4, 4]);
        let all = b.enumerate();
        assert_eq!(all.len() as u128, b.space_size());
        assert_eq!(all.len(), 16);
        assert_eq!(all[0], PEAllocation::new(vec![1, 1], 1));
        assert_eq!(all[15], PEAllocation::new(vec![4, 4], 1));
    }

    #[test]
    fn crossover_length_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = crossover(&PEAllocation::new(vec![1], 1), &PEAllocation::new(vec![1, 2], 1), &mut rng);
        assert!(matches!(r, Err(DseError::LengthMismatch { .. })));
    }

    #[test]
    fn crossover_of_extremes_stays_in_gene_pool() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lo = PEAllocation::new(vec![1, 1, 1], 1);
        let hi = PEAllocation::new(vec![8, 16, 32], 32);
        for _ in 0..100 {
            let (c, d) = crossover(&lo, &hi, &mut rng).unwrap();
            for (i, (&x, &y)) in c.conv_pe.iter().zip(&d.conv_pe).enumerate() {
                assert!(x == 1 || x == hi.conv_pe[i]);
                assert_eq!(x + y, 1 + hi.conv_pe[i]);
            }
        }
    }

    proptest! {
        #[test]
        fn children_genes_come_from_one_parent(
            pairs in proptest::collection::vec((1u64..50, 1u64..50), 1..8),
            seed in any::<u64>(),
        ) {
            let a = PEAllocation::new(pairs.iter().map(|p| p.0).collect(), 1);
            let b = PEAllocation::new(pairs.iter().map(|p| p.1).collect(), 2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (c, d) = crossover(&a, &b, &mut rng).unwrap();
            for i in 0..pairs.len() {
                let (x, y) = (c.conv_pe[i], d.conv_pe[i]);
                prop_assert!((x, y) == (a.conv_pe[i], b.conv_pe[i]) || (x, y) == (b.conv_pe[i], a.conv_pe[i]));
            }
        }

        #[test]
        fn identical_parents_give_identical_children(genes in proptest::collection::vec(1u64..50, 1..8), seed in any::<u64>()) {
            let a = PEAllocation::new(genes, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (c, d) = crossover(&a, &a, &mut rng).unwrap();
            prop_assert_eq!(&c, &a);
            prop_assert_eq!(&d, &a);
        }

        #[test]
        fn mutate_gene_in_bounds(lb in 1u64..20, span in 0u64..40, off in 0u64..40, s in 0.0f64..=1.0, r in 0.0f64..=1.0) {
            let ub = lb + span;
            let x = lb + off.min(span);
            let y = mutate_gene(x, lb, ub, s, r);
            prop_assert!(lb <= y && y <= ub);
        }
    }
}
