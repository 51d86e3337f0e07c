// SPDX-License-Identifier: Apache-2.0

//! Feasibility-first non-dominated sorting, crowding, and 2-D hypervolume.

use serde::{Deserialize, Serialize};

use super::config::ConstraintSet;
use crate::costmodel::CostEstimate;
use crate::scalar::Scalar;

/// Minimized objectives plus aggregate constraint violation (0 when feasible).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub latency: f64,
    pub dsp: f64,
    pub violation: f64,
}

impl Fitness {
    pub fn new(latency: f64, dsp: f64, violation: f64) -> Self {
        Self { latency, dsp, violation }
    }

    pub fn of<T: Scalar>(e: &CostEstimate<T>, cons: &ConstraintSet) -> Self {
        Self::new(e.latency_s.as_f64(), e.dsp as f64, cons.violation(e))
    }

    pub fn feasible(&self) -> bool {
        self.violation == 0.0
    }
}

/// Feasible beats infeasible; among infeasible, smaller violation wins; among feasible,
/// plain Pareto dominance on (latency, dsp).
pub fn dominates(a: &Fitness, b: &Fitness) -> bool {
    match (a.feasible(), b.feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => pareto_dominates(a, b),
    }
}

pub(crate) fn pareto_dominates(a: &Fitness, b: &Fitness) -> bool {
    a.latency <= b.latency && a.dsp <= b.dsp && (a.latency < b.latency || a.dsp < b.dsp)
}

/// Fronts of indices; front 0 is non-dominated. Indices within a front are ascending.
pub fn non_dominated_sort(pop: &[Fitness]) -> Vec<Vec<usize>> {
    let n = pop.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dominates(&pop[i], &pop[j]) {
                dominated_by[i].push(j);
                count[j] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                count[j] -= 1;
                if count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (same order); boundary points get infinity.
pub fn crowding_distance(pop: &[Fitness], front: &[usize]) -> Vec<f64> {
    let m = front.len();
    let mut d = vec![0.0; m];
    if m <= 2 {
        return vec![f64::INFINITY; m];
    }
    let objectives: [fn(&Fitness) -> f64; 2] = [|f| f.latency, |f| f.dsp];
    for obj in objectives {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| obj(&pop[front[a]]).total_cmp(&obj(&pop[front[b]])).then(a.cmp(&b)));
        let lo = obj(&pop[front[order[0]]]);
        let hi = obj(&pop[front[order[m - 1]]]);
        d[order[0]] = f64::INFINITY;
        d[order[m - 1]] = f64::INFINITY;
        if hi > lo {
            for k in 1..m - 1 {
                let gap = obj(&pop[front[order[k + 1]]]) - obj(&pop[front[order[k - 1]]]);
                d[order[k]] += gap / (hi - lo);
            }
        }
    }
    d
}

/// Area dominated by `points` (minimization) inside the box bounded by `reference`.
pub fn hypervolume_2d(points: &[(f64, f64)], reference: (f64, f64)) -> f64 {
    let mut pts: Vec<(f64, f64)> =
        points.iter().copied().filter(|&(x, y)| x < reference.0 && y < reference.1).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut area = 0.0;
    let mut y_bound = reference.1;
    for (x, y) in pts {
        if y < y_bound {
            area += (reference.0 - x) * (y_bound - y);
            y_bound = y;
        }
    }
    area
}
