// SPDX-License-Identifier: Apache-2.0

//! The evolutionary loop.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ConstraintSet, MogaConfig};
use super::genome::{crossover, initialize_population, mutate, GenomeBounds};
use super::sort::{crowding_distance, hypervolume_2d, non_dominated_sort, pareto_dominates, Fitness};
use super::DseError;
use crate::costmodel::{estimate, CostEstimate, LatencyTerms, PEAllocation};
use crate::netgraph::{DeviceProfile, NetworkGraph};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontEntry<T> {
    pub allocation: PEAllocation,
    pub estimate: CostEstimate<T>,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront<T> {
    /// Feasible, mutually non-dominated designs ordered by DSP then latency.
    pub entries: Vec<FrontEntry<T>>,
    /// Slightly infeasible designs not dominated by any feasible one; reported, never selected.
    pub near_feasible: Vec<FrontEntry<T>>,
    pub generations_run: usize,
    pub evaluations: usize,
    pub seed: u64,
    /// Archive hypervolume after initialization and after each generation, normalized to the
    /// reference box.
    pub hypervolume_history: Vec<f64>,
}

/// Estimates a batch on `jobs` threads (0 = all cores); the output order follows the input.
pub fn evaluate<T: Scalar>(
    g: &NetworkGraph,
    allocs: &[PEAllocation],
    dev: &DeviceProfile,
    terms: &LatencyTerms<T>,
    jobs: usize,
) -> Result<Vec<CostEstimate<T>>, DseError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| DseError::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| allocs.par_iter().map(|a| estimate(g, a, dev, terms).map_err(DseError::from)).collect())
}

struct Evaluated<T> {
    estimate: CostEstimate<T>,
    fitness: Fitness,
}

struct Search<'a, T> {
    g: &'a NetworkGraph,
    dev: &'a DeviceProfile,
    terms: &'a LatencyTerms<T>,
    cons: &'a ConstraintSet,
    jobs: usize,
    margin: f64,
    cache: HashMap<PEAllocation, Evaluated<T>>,
    archive: Vec<PEAllocation>,
    near: Vec<PEAllocation>,
}

impl<T: Scalar> Search<'_, T> {
    fn evaluate_all(&mut self, allocs: &[PEAllocation]) -> Result<(), DseError> {
        let mut seen = HashSet::new();
        let fresh: Vec<PEAllocation> =
            allocs.iter().filter(|a| !self.cache.contains_key(*a) && seen.insert(*a)).cloned().collect();
        let ests = evaluate(self.g, &fresh, self.dev, self.terms, self.jobs)?;
        for (a, e) in fresh.into_iter().zip(ests) {
            let fitness = Fitness::of(&e, self.cons);
            self.cache.insert(a.clone(), Evaluated { estimate: e, fitness });
            self.offer(a);
        }
        Ok(())
    }

    fn fit(&self, a: &PEAllocation) -> Fitness {
        self.cache[a].fitness
    }

    fn offer(&mut self, a: PEAllocation) {
        let f = self.fit(&a);
        let list = if f.feasible() {
            &mut self.archive
        } else if f.violation <= self.margin {
            &mut self.near
        } else {
            return;
        };
        let cache = &self.cache;
        if list.iter().any(|b| pareto_dominates(&cache[b].fitness, &f)) {
            return;
        }
        list.retain(|b| !pareto_dominates(&f, &cache[b].fitness));
        list.push(a);
    }

    fn hypervolume(&self, reference: (f64, f64)) -> f64 {
        let pts: Vec<(f64, f64)> = self.archive.iter().map(|a| (self.fit(a).latency, self.fit(a).dsp)).collect();
        hypervolume_2d(&pts, reference) / (reference.0 * reference.1)
    }

    fn entries(&self, list: &[PEAllocation], feasible: bool) -> Vec<FrontEntry<T>> {
        let mut out: Vec<FrontEntry<T>> = list
            .iter()
            .map(|a| FrontEntry { allocation: a.clone(), estimate: self.cache[a].estimate.clone(), feasible })
            .collect();
        out.sort_by(|x, y| {
            x.estimate
                .dsp
                .cmp(&y.estimate.dsp)
                .then(x.estimate.latency_s.as_f64().total_cmp(&y.estimate.latency_s.as_f64()))
                .then(x.allocation.cmp(&y.allocation))
        });
        out
    }
}

/// Rank and crowding of each individual, from a feasibility-first sort.
fn rank_and_crowding(fit: &[Fitness]) -> (Vec<Vec<usize>>, Vec<usize>, Vec<f64>) {
    let fronts = non_dominated_sort(fit);
    let mut rank = vec![0; fit.len()];
    let mut crowd = vec![0.0; fit.len()];
    for (r, f) in fronts.iter().enumerate() {
        for (k, d) in f.iter().zip(crowding_distance(fit, f)) {
            rank[*k] = r;
            crowd[*k] = d;
        }
    }
    (fronts, rank, crowd)
}

fn tournament<R: Rng>(rank: &[usize], crowd: &[f64], rng: &mut R) -> usize {
    let i = rng.random_range(0..rank.len());
    let j = rng.random_range(0..rank.len());
    let better = |a: usize, b: usize| rank[a] < rank[b] || (rank[a] == rank[b] && crowd[a] > crowd[b]);
    if better(j, i) {
        j
    } else {
        i
    }
}

/// Runs the constrained search and returns every feasible non-dominated design it met.
pub fn explore<T: Scalar>(
    g: &NetworkGraph,
    dev: &DeviceProfile,
    terms: &LatencyTerms<T>,
    cons: &ConstraintSet,
    cfg: &MogaConfig,
) -> Result<ParetoFront<T>, DseError> {
    cfg.validate()?;
    cons.validate()?;
    let bounds = GenomeBounds::for_graph(g, cfg.fixed_fc_pe);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut s = Search {
        g,
        dev,
        terms,
        cons,
        jobs: cfg.jobs,
        margin: cfg.near_feasible_margin,
        cache: HashMap::new(),
        archive: Vec::new(),
        near: Vec::new(),
    };

    // Resources only grow with the genome, so the lower corner decides resource feasibility.
    let (lower, upper) = (bounds.lower(), bounds.upper());
    s.evaluate_all(&[lower.clone(), upper.clone()])?;
    let lower_est = &s.cache[&lower].estimate;
    if cons.resource_violation(lower_est) > 0.0 {
        return Err(DseError::NoFeasibleDesign(format!(
            "smallest allocation {lower} needs dsp={}, lut={}, bram={}",
            lower_est.dsp, lower_est.lut, lower_est.bram
        )));
    }
    let reference = (s.fit(&lower).latency * 1.1, s.fit(&upper).dsp * 1.1 + 1.0);

    let n = cfg.population_size;
    let mut pop = initialize_population(&bounds, n, &mut rng);
    s.evaluate_all(&pop)?;
    let mut history = vec![s.hypervolume(reference)];
    let mut generations_run = 0;

    for _ in 0..cfg.max_generations {
        let fit: Vec<Fitness> = pop.iter().map(|a| s.fit(a)).collect();
        let (_, rank, crowd) = rank_and_crowding(&fit);
        let mut offspring = Vec::with_capacity(n);
        while offspring.len() < n {
            let a = &pop[tournament(&rank, &crowd, &mut rng)];
            let b = &pop[tournament(&rank, &crowd, &mut rng)];
            let (c, d) = if rng.random::<f64>() < cfg.crossover_rate {
                crossover(a, b, &mut rng)?
            } else {
                (a.clone(), b.clone())
            };
            offspring.push(mutate(&c, &bounds, cfg.mutation_rate, cfg.mutation_exponent, &mut rng));
            if offspring.len() < n {
                offspring.push(mutate(&d, &bounds, cfg.mutation_rate, cfg.mutation_exponent, &mut rng));
            }
        }
        s.evaluate_all(&offspring)?;

        let mut seen = HashSet::new();
        let combined: Vec<PEAllocation> = pop.into_iter().chain(offspring).filter(|a| seen.insert(a.clone())).collect();
        let fit: Vec<Fitness> = combined.iter().map(|a| s.fit(a)).collect();
        let (fronts, _, crowd) = rank_and_crowding(&fit);
        let mut next = Vec::with_capacity(n);
        for f in fronts {
            if next.len() + f.len() <= n {
                next.extend(f.iter().map(|&i| combined[i].clone()));
            } else {
                let mut f = f;
                f.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]).then(a.cmp(&b)));
                next.extend(f.iter().take(n - next.len()).map(|&i| combined[i].clone()));
            }
            if next.len() >= n {
                break;
            }
        }
        pop = next;
        generations_run += 1;

        history.push(s.hypervolume(reference));
        let len = history.len();
        if cfg.stagnation_window > 0
            && len > cfg.stagnation_window
            && history[len - 1] - history[len - 1 - cfg.stagnation_window] < 1e-6
        {
            log::debug!("hypervolume stagnated after {generations_run} generations");
            break;
        }
    }

    if s.archive.is_empty() {
        return Err(DseError::NoFeasibleDesign(format!(
            "no evaluated allocation met the constraints after {generations_run} generations"
        )));
    }
    let entries = s.entries(&s.archive, true);
    let near: Vec<PEAllocation> =
        s.near.iter().filter(|a| !s.archive.iter().any(|b| pareto_dominates(&s.fit(b), &s.fit(a)))).cloned().collect();
    let near_feasible = s.entries(&near, false);
    log::info!("front of {} designs after {generations_run} generations, {} evaluations", entries.len(), s.cache.len());
    Ok(ParetoFront {
        entries,
        near_feasible,
        generations_run,
        evaluations: s.cache.len(),
        seed: cfg.seed,
        hypervolume_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::{SequentialBuilder, Shape};

    fn two_layer() -> NetworkGraph {
        SequentialBuilder::new("two", Shape::new(8, 8, 1))
            .conv("c1", 4, 3, 1, 1)
            .conv("c2", 4, 3, 1, 1)
            .fc("fc", 10)
            .build()
            .unwrap()
    }

    #[test]
    fn hypervolume_never_decreases() {
        let g = two_layer();
        let dev = DeviceProfile::zynq7100();
        let terms = LatencyTerms::<f64>::for_device(&dev);
        let cfg = MogaConfig { population_size: 10, max_generations: 30, seed: 4, ..Default::default() };
        let f = explore(&g, &dev, &terms, &ConstraintSet::from_device(&dev), &cfg).unwrap();
        assert!(f.hypervolume_history.windows(2).all(|w| w[1] >= w[0]));
        assert!(f.hypervolume_history.iter().all(|&h| (0.0..=1.0).contains(&h)));
    }

    #[test]
    fn tiny_budget_is_infeasible() {
        let g = two_layer();
        let dev = DeviceProfile::zynq7100();
        let terms = LatencyTerms::<f64>::for_device(&dev);
        let cons = ConstraintSet { max_dsp: Some(18 + 9), ..ConstraintSet::from_device(&dev) };
        let r = explore(&g, &dev, &terms, &cons, &MogaConfig::default());
        assert!(matches!(r, Err(DseError::NoFeasibleDesign(_))));
    }

    #[test]
    fn unreachable_latency_is_infeasible() {
        let g = two_layer();
        let dev = DeviceProfile::zynq7100();
        let terms = LatencyTerms::<f64>::for_device(&dev);
        let cons = ConstraintSet { max_latency_s: Some(1e-12), ..ConstraintSet::from_device(&dev) };
        let cfg = MogaConfig { population_size: 8, max_generations: 5, ..Default::default() };
        assert!(matches!(explore(&g, &dev, &terms, &cons, &cfg), Err(DseError::NoFeasibleDesign(_))));
    }

    #[test]
    fn parallel_and_serial_agree() {
        let g = two_layer();
        let dev = DeviceProfile::zynq7100();
        let terms = LatencyTerms::<f64>::for_device(&dev);
        let cons = ConstraintSet::from_device(&dev);
        let one = MogaConfig { population_size: 12, max_generations: 10, jobs: 1, seed: 2, ..Default::default() };
        let four = MogaConfig { jobs: 4, ..one.clone() };
        assert_eq!(explore(&g, &dev, &terms, &cons, &one).unwrap(), explore(&g, &dev, &terms, &cons, &four).unwrap());
    }
}
