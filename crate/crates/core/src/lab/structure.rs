//! Move-graph constants: local maxima of the kinetic term, reach radius,
//! largest single-move changes and the smallest proposal probability.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{QaeError, Result};
use crate::lab::chains::ChainModel;

const LEVEL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralConstants {
    /// Smallest worst-case distance from a state outside `s_m` to every state.
    pub r: usize,
    pub l0: f64,
    pub l1: f64,
    pub w_min: f64,
    /// Local maxima of `F1` (empty when the chain has no kinetic term).
    pub s_m: Vec<usize>,
    /// First minimizer of the eccentricity outside `s_m`.
    pub x_star: usize,
    /// Minimum of the cost term over all states.
    pub cost_min: f64,
}

/// Largest BFS distance from `source`, or `None` if some state is unreachable.
pub fn eccentricity(n_states: usize, source: usize, neighbors: &dyn Fn(usize) -> Vec<usize>) -> Option<usize> {
    let mut dist = vec![usize::MAX; n_states];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    let mut seen = 1;
    let mut far = 0;
    while let Some(x) = queue.pop_front() {
        for y in neighbors(x) {
            if dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                far = far.max(dist[y]);
                seen += 1;
                queue.push_back(y);
            }
        }
    }
    (seen == n_states).then_some(far)
}

/// `(R, x*)`: minimum eccentricity over non-excluded states and its first minimizer.
pub fn graph_radius(
    n_states: usize,
    excluded: &[bool],
    neighbors: &dyn Fn(usize) -> Vec<usize>,
) -> Option<(usize, usize)> {
    let floor = usize::from(n_states > 1);
    let mut best: Option<(usize, usize)> = None;
    for x in (0..n_states).filter(|x| !excluded[*x]) {
        if let Some(e) = eccentricity(n_states, x, neighbors) {
            if best.map_or(true, |(r, _)| e < r) {
                best = Some((e, x));
                if e == floor {
                    break;
                }
            }
        }
    }
    best
}

pub fn structural_constants(model: &dyn ChainModel) -> Result<StructuralConstants> {
    let n = model.n_states();
    let edges: Vec<Vec<(usize, f64)>> = (0..n).map(|x| model.proposals(x)).collect();

    let mut in_s_m = vec![false; n];
    if model.kinetic(0).is_some() {
        for x in 0..n {
            let fx = model.kinetic(x).unwrap_or(0.0);
            in_s_m[x] = edges[x].iter().all(|(y, _)| model.kinetic(*y).unwrap_or(0.0) <= fx + LEVEL_TOL);
        }
    }
    if in_s_m.iter().all(|v| *v) {
        return Err(QaeError::Model("every state is a local maximum of the kinetic term".into()));
    }

    let neighbors = |x: usize| edges[x].iter().map(|(y, _)| *y).collect::<Vec<_>>();
    let (r, x_star) = graph_radius(n, &in_s_m, &neighbors)
        .ok_or_else(|| QaeError::Model("move graph is not strongly connected".into()))?;

    let mut l0: f64 = 0.0;
    let mut l1: f64 = 0.0;
    let mut w_min = f64::INFINITY;
    for (x, out) in edges.iter().enumerate() {
        for &(y, p) in out {
            l0 = l0.max((model.cost(y) - model.cost(x)).abs());
            if let (Some(a), Some(b)) = (model.kinetic(x), model.kinetic(y)) {
                l1 = l1.max((a - b).abs());
            }
            w_min = w_min.min(p);
        }
    }
    let cost_min = (0..n).map(|x| model.cost(x)).fold(f64::INFINITY, f64::min);
    Ok(StructuralConstants {
        r,
        l0,
        l1,
        w_min,
        s_m: (0..n).filter(|x| in_s_m[*x]).collect(),
        x_star,
        cost_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfmc::Variant;
    use crate::ising::{IsingInstance, MoveSet};
    use crate::lab::chains::{build_chain, ChainSpec};
    use crate::pimc::AcceptanceSpec;
    use crate::schedules::ScheduleSpec;

    fn replica(inst: IsingInstance, m: usize) -> StructuralConstants {
        let spec = ChainSpec::pimc(
            inst,
            1.0,
            m,
            AcceptanceSpec::named("heat_bath"),
            ScheduleSpec::new("constant_T1").param("value", 1.0),
        );
        structural_constants(build_chain(&spec).unwrap().as_ref()).unwrap()
    }

    #[test]
    fn walker_chain_radius_is_n() {
        for n in 1..=5 {
            let spec = ChainSpec::gfmc(
                Variant::G1,
                IsingInstance::complete(n, 1.0).unwrap(),
                0.01,
                0.0,
                ScheduleSpec::new("constant").param("value", 1.0),
            );
            let c = structural_constants(build_chain(&spec).unwrap().as_ref()).unwrap();
            assert_eq!(c.r, n);
            assert!(c.s_m.is_empty());
            assert_eq!(c.w_min, 1.0 / n as f64);
            assert_eq!(c.x_star, 0);
        }
    }

    #[test]
    fn replica_chain_kinetic_constants() {
        let c = replica(IsingInstance::new(1).unwrap(), 3);
        assert_eq!(c.l1, 4.0);
        let c2 = replica(IsingInstance::new(1).unwrap(), 2);
        assert_eq!(c2.l1, 4.0);
        assert_eq!(c2.r, 2);
        assert_eq!(c2.s_m, vec![1, 2]);
        assert_eq!(c2.x_star, 0);
        assert_eq!(c2.w_min, 0.5);
    }

    #[test]
    fn kinetic_constants_ignore_couplings() {
        let a = replica(IsingInstance::from_parts(2, &[(0, 1, 1.0)], &[]).unwrap(), 3);
        let b = replica(IsingInstance::from_parts(2, &[(0, 1, -2.5)], &[(1, 0.7)]).unwrap(), 3);
        assert_eq!((a.r, a.l1, &a.s_m), (b.r, b.l1, &b.s_m));
        assert!(a.l0 != b.l0);
        assert_eq!(a.r, 6);
    }

    #[test]
    fn all_to_all_radius_is_one() {
        for n in 1..=4 {
            let states = 1usize << n;
            let excluded = vec![false; states];
            let nb = |x: usize| MoveSet::AllToAll.neighbor_indices(x, n);
            assert_eq!(graph_radius(states, &excluded, &nb), Some((1, 0)));
            let single = |x: usize| MoveSet::SingleSpinFlip.neighbor_indices(x, n);
            assert_eq!(graph_radius(states, &excluded, &single), Some((n, 0)));
        }
    }

    #[test]
    fn flat_kinetic_term_is_rejected() {
        let spec = ChainSpec::pimc(
            IsingInstance::new(2).unwrap(),
            1.0,
            1,
            AcceptanceSpec::named("metropolis"),
            ScheduleSpec::new("constant_T1").param("value", 1.0),
        );
        assert!(matches!(structural_constants(build_chain(&spec).unwrap().as_ref()), Err(QaeError::Model(_))));
    }
}
