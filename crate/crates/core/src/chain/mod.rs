//! Steppable chains, seeded trajectories, and exact small-instance oracles.

mod cycle;
mod finite;
mod oracle;

pub use cycle::{cycle_first_dominance_exact, cycle_first_dominance_probability, CycleWalk};
pub use finite::{
    stationary_distribution, verify_reversibility, FiniteChain, TransitionMatrix, DIRECT_SOLVE_LIMIT, ROW_SUM_TOL,
    STATIONARY_TOL,
};
pub use oracle::{exact_ell_small_probability, exact_ell_small_table, EllSmallTable, MAX_ENUMERATED_PATHS};

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::rng::{self, GENERATOR_ID};
use crate::significance::LabeledTrajectory;

/// A Markov chain that can advance a state in place.
pub trait Chain {
    type State: Clone;

    /// Rejects states that are not part of the state space.
    fn validate_state(&self, state: &Self::State) -> Result<()>;

    /// One transition. Self-loops leave `state` untouched.
    fn step<R: Rng + ?Sized>(&self, state: &mut Self::State, rng: &mut R);
}

/// `X₀, …, X_k` together with the provenance needed to regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySample<S> {
    pub states: Vec<S>,
    pub seed: u64,
    pub generator_id: &'static str,
}

impl<S> TrajectorySample<S> {
    pub fn k(&self) -> u64 {
        (self.states.len() - 1) as u64
    }
}

pub fn sample_trajectory<C: Chain>(
    chain: &C,
    start: C::State,
    k: u64,
    seed: u64,
) -> Result<TrajectorySample<C::State>> {
    chain.validate_state(&start)?;
    let mut rng = rng::generator(seed);
    let mut states = Vec::with_capacity(k as usize + 1);
    let mut current = start;
    states.push(current.clone());
    for _ in 0..k {
        chain.step(&mut current, &mut rng);
        states.push(current.clone());
    }
    Ok(TrajectorySample {
        states,
        seed,
        generator_id: GENERATOR_ID,
    })
}

/// Runs `k` steps from `start` and records only the labels, for chains whose
/// states are too large to keep. Consumes the same random stream as
/// [`sample_trajectory`] with the same seed.
pub fn sample_labels<C, F>(chain: &C, start: C::State, k: u64, seed: u64, mut label: F) -> Result<LabeledTrajectory>
where
    C: Chain,
    F: FnMut(&C::State) -> f64,
{
    chain.validate_state(&start)?;
    let mut rng = rng::generator(seed);
    let mut labels = Vec::with_capacity(k as usize + 1);
    let mut current = start;
    labels.push(label(&current));
    for _ in 0..k {
        chain.step(&mut current, &mut rng);
        labels.push(label(&current));
    }
    LabeledTrajectory::new(labels)
}
