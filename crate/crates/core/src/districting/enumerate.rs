//! Exhaustive state spaces of tiny flip-chain instances.

use std::collections::{HashMap, VecDeque};

use super::flip::FlipChain;
use super::validity::is_valid;
use super::Districting;
use crate::chain::TransitionMatrix;
use crate::error::{invalid, Error, Result};

/// Largest state space [`enumerate_states`] will build.
pub const MAX_STATES: usize = 100_000;

/// Every districting reachable from a seed, with the exact regularized
/// transition matrix between them.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub states: Vec<Vec<u32>>,
    pub transition: TransitionMatrix,
    pub n_max: usize,
    index: HashMap<Vec<u32>, usize>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, assignment: &[u32]) -> Option<usize> {
        self.index.get(assignment).copied()
    }
}

/// Flood fill over single-precinct moves from every plan in `seeds`.
///
/// Each candidate move is checked with the full from-scratch validator, not
/// the incremental one the chain uses, so the matrix is an independent
/// reference for the chain's behaviour. Entry `(σ, τ)` is `1/N_max` for each
/// valid move from `σ` to `τ`; the diagonal takes the remaining mass.
pub fn enumerate_states(chain: &FlipChain<'_>, seeds: &[Districting], max_states: usize) -> Result<StateSpace> {
    let geo = chain.geography();
    let constraints = chain.constraints();
    let d = seeds
        .first()
        .ok_or_else(|| invalid("at least one seed districting is required"))?
        .n_districts();
    let n_max = chain.n_max();
    let mut states: Vec<Vec<u32>> = Vec::new();
    let mut index = HashMap::new();
    let mut queue = VecDeque::new();
    for seed in seeds {
        if seed.n_districts() != d {
            return Err(invalid("seed districtings disagree on the district count"));
        }
        if let Some(reason) = is_valid(geo, seed, constraints).reason() {
            return Err(Error::Config(format!("seed districting is invalid: {reason}")));
        }
        if !index.contains_key(seed.assignment()) {
            if states.len() >= max_states {
                return Err(Error::Resource(format!("more than {max_states} reachable states")));
            }
            index.insert(seed.assignment().to_vec(), states.len());
            queue.push_back(states.len());
            states.push(seed.assignment().to_vec());
        }
    }
    let mut edges: Vec<Vec<usize>> = Vec::new();
    while let Some(s) = queue.pop_front() {
        let plan = Districting::new(geo, states[s].clone(), d)?;
        let mut out = Vec::new();
        for (rho, to) in plan.boundary().sorted_pairs() {
            let mut next = plan.clone();
            next.move_precinct(geo, rho, to);
            if next.stats().iter().any(|st| st.precincts == 0) || !is_valid(geo, &next, constraints).is_valid() {
                continue;
            }
            let key = next.assignment().to_vec();
            let t = match index.get(&key) {
                Some(&t) => t,
                None => {
                    if states.len() >= max_states {
                        return Err(Error::Resource(format!("more than {max_states} reachable states")));
                    }
                    let t = states.len();
                    index.insert(key.clone(), t);
                    states.push(key);
                    queue.push_back(t);
                    t
                }
            };
            out.push(t);
        }
        if edges.len() <= s {
            edges.resize(s + 1, Vec::new());
        }
        edges[s] = out;
    }
    let n = states.len();
    let rows = (0..n)
        .map(|s| {
            let mut row = vec![0.0; n];
            for &t in &edges[s] {
                row[t] += 1.0 / n_max as f64;
            }
            row[s] += (n_max - edges[s].len()) as f64 / n_max as f64;
            row
        })
        .collect();
    Ok(StateSpace {
        states,
        transition: TransitionMatrix::from_rows(rows)?,
        n_max,
        index,
    })
}

/// Every valid assignment of `d` labeled districts, by brute force over all
/// `d^n` assignments.
pub fn enumerate_all_valid(chain: &FlipChain<'_>, d: usize, max_assignments: u64) -> Result<Vec<Vec<u32>>> {
    let geo = chain.geography();
    let n = geo.len();
    let total = (d as u64)
        .checked_pow(n as u32)
        .filter(|&t| t <= max_assignments)
        .ok_or_else(|| Error::Resource(format!("{d}^{n} assignments exceed {max_assignments}")))?;
    if d == 0 {
        return Err(invalid("need at least one district"));
    }
    let mut found = Vec::new();
    let mut assignment = vec![0u32; n];
    for code in 0..total {
        let mut c = code;
        for slot in assignment.iter_mut() {
            *slot = (c % d as u64) as u32;
            c /= d as u64;
        }
        let Ok(plan) = Districting::new(geo, assignment.clone(), d) else {
            continue;
        };
        if is_valid(geo, &plan, chain.constraints()).is_valid() {
            found.push(assignment.clone());
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::districting::{grid_geography, CompactnessMode, ValidityConstraints};

    #[test]
    fn equal_halves_of_a_2x2_grid() {
        let g = grid_geography(2, 2, Default::default(), Default::default(), 0).unwrap();
        let c = ValidityConstraints::new(0.1, CompactnessMode::Perimeter, 1e6).unwrap();
        let chain = FlipChain::new(&g, c).unwrap();
        let mut all = enumerate_all_valid(&chain, 2, 1 << 20).unwrap();
        all.sort();
        assert_eq!(
            all,
            vec![vec![0, 0, 1, 1], vec![0, 1, 0, 1], vec![1, 0, 1, 0], vec![1, 1, 0, 0]]
        );
        // No single flip keeps both halves at two cells, so each is isolated.
        let seed = Districting::new(&g, all[0].clone(), 2).unwrap();
        let space = enumerate_states(&chain, std::slice::from_ref(&seed), MAX_STATES).unwrap();
        assert_eq!(space.len(), 1);
        assert_eq!(space.transition.get(0, 0), 1.0);
        let seeds: Vec<_> = all.iter().map(|a| Districting::new(&g, a.clone(), 2).unwrap()).collect();
        let space = enumerate_states(&chain, &seeds, MAX_STATES).unwrap();
        assert_eq!(space.len(), 4);
        assert_eq!(space.transition.max_asymmetry(), 0.0);
    }

    #[test]
    fn loose_2x2_is_symmetric() {
        let g = grid_geography(2, 2, Default::default(), Default::default(), 0).unwrap();
        let c = ValidityConstraints::new(0.5, CompactnessMode::Perimeter, 1e6).unwrap();
        let chain = FlipChain::new(&g, c).unwrap();
        let seed = Districting::new(&g, vec![0, 0, 1, 1], 2).unwrap();
        let space = enumerate_states(&chain, &[seed], MAX_STATES).unwrap();
        assert_eq!(space.len(), 12);
        assert_eq!(space.transition.max_asymmetry(), 0.0);
        for i in 0..space.len() {
            assert!((space.transition.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(enumerate_all_valid(&chain, 2, 1 << 20).unwrap().len(), 12);
    }

    #[test]
    fn state_guard() {
        let g = grid_geography(4, 4, Default::default(), Default::default(), 0).unwrap();
        let c = ValidityConstraints::new(0.5, CompactnessMode::Perimeter, 1e6).unwrap();
        let chain = FlipChain::new(&g, c).unwrap();
        let seed = Districting::new(&g, (0..16).map(|i| ((i % 4) / 2) as u32).collect(), 2).unwrap();
        assert!(matches!(enumerate_states(&chain, &[seed], 10), Err(Error::Resource(_))));
    }
}
