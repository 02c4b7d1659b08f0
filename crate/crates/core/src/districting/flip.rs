//! The self-loop regularized single-precinct flip chain.
//!
//! Every state has exactly `N_max` equally likely outgoing transitions: one
//! per boundary pair `(ρ, D)` (a loop when moving `ρ` into `D` would be
//! invalid) plus `N_max − N_S` padding loops. The transition matrix is
//! therefore symmetric and the uniform distribution on valid districtings is
//! stationary.

use rand::Rng;
use serde::Serialize;

use super::labels::{vote_shares, LabelFunction};
use super::validity::{compactness_score, is_valid, neighbors_stay_connected, population_deviation, shape};
use super::{Districting, Geography, ValidityConstraints};
use crate::chain::Chain;
use crate::error::{invalid, Error, Result};
use crate::rng::{self, GENERATOR_ID};
use crate::significance::LabeledTrajectory;

/// Default spacing of full validity audits during long runs.
pub const AUDIT_INTERVAL: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepOutcome {
    /// Padding loop: the slot drawn was beyond `N_S`.
    Loop,
    /// The drawn pair would have produced an invalid districting.
    Rejected { precinct: usize, district: usize },
    Moved { precinct: usize, from: usize, to: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct FlipChain<'g> {
    geo: &'g Geography,
    constraints: ValidityConstraints,
    n_max: usize,
    total_population: u64,
}

impl<'g> FlipChain<'g> {
    /// Uses the degree-sum bound `2·|adjacencies|` for `N_max`.
    pub fn new(geo: &'g Geography, constraints: ValidityConstraints) -> Result<Self> {
        constraints.validate()?;
        if geo.adjacency().is_empty() {
            return Err(invalid("geography has no adjacencies; the chain cannot move"));
        }
        Ok(Self {
            geo,
            constraints,
            n_max: geo.degree_sum(),
            total_population: geo.total_population(),
        })
    }

    /// Overrides `N_max`; it may only grow past the degree-sum bound, which
    /// adds loops and keeps the uniform distribution stationary.
    pub fn with_n_max(mut self, n_max: usize) -> Result<Self> {
        if n_max < self.geo.degree_sum() {
            return Err(invalid(format!(
                "N_max {n_max} is below the degree-sum bound {}",
                self.geo.degree_sum()
            )));
        }
        self.n_max = n_max;
        Ok(self)
    }

    pub fn geography(&self) -> &'g Geography {
        self.geo
    }

    pub fn constraints(&self) -> &ValidityConstraints {
        &self.constraints
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    fn mean_population(&self, plan: &Districting) -> f64 {
        self.total_population as f64 / plan.n_districts() as f64
    }

    /// Whether moving `rho` into `to` leaves a valid districting, assuming
    /// the current one is valid. Only the two affected districts are
    /// re-examined.
    pub fn move_is_valid(&self, plan: &mut Districting, rho: usize, to: usize) -> bool {
        let geo = self.geo;
        let from = plan.district_of(rho);
        if from == to || to >= plan.n_districts() || plan.district(from).precincts <= 1 {
            return false;
        }
        let pop = geo.precinct(rho).population;
        let mean = self.mean_population(plan);
        let tol = self.constraints.pop_tolerance;
        if population_deviation(plan.district(from).population - pop, mean) > tol
            || population_deviation(plan.district(to).population + pop, mean) > tol
        {
            return false;
        }
        let [after_from, after_to] = plan.shape_after_move(geo, rho, to);
        let shapes = plan.stats().iter().enumerate().map(|(d, s)| {
            if d == from {
                after_from
            } else if d == to {
                after_to
            } else {
                shape(s)
            }
        });
        if compactness_score(self.constraints.compactness, shapes) > self.constraints.compactness_threshold {
            return false;
        }
        let mut scratch = std::mem::take(&mut plan.scratch);
        let assignment = plan.assignment();
        let ok = neighbors_stay_connected(geo, &mut scratch, rho, |u| assignment[u] as usize == from, false)
            && neighbors_stay_connected(geo, &mut scratch, rho, |u| assignment[u] as usize != to, true);
        plan.scratch = scratch;
        ok
    }

    /// Applies transition number `slot ∈ 0..N_max`: slots below `N_S` select
    /// the boundary pair stored there, the rest are loops.
    pub fn apply_slot(&self, plan: &mut Districting, slot: usize) -> StepOutcome {
        if slot >= plan.boundary().len() {
            return StepOutcome::Loop;
        }
        let (rho, to) = plan.boundary().get(slot);
        if self.move_is_valid(plan, rho, to) {
            let from = plan.district_of(rho);
            plan.move_precinct(self.geo, rho, to);
            StepOutcome::Moved {
                precinct: rho,
                from,
                to,
            }
        } else {
            StepOutcome::Rejected {
                precinct: rho,
                district: to,
            }
        }
    }

    /// One transition: a uniform slot out of `N_max`.
    pub fn step_outcome<R: Rng + ?Sized>(&self, plan: &mut Districting, rng: &mut R) -> StepOutcome {
        let slot = rng.random_range(0..self.n_max);
        self.apply_slot(plan, slot)
    }

    /// Checks that `plan` belongs to this chain's geography and is valid.
    pub fn check_start(&self, plan: &Districting) -> Result<()> {
        match is_valid(self.geo, plan, &self.constraints).reason() {
            None => Ok(()),
            Some(reason) => Err(Error::Config(format!("initial districting is invalid: {reason}"))),
        }
    }
}

impl Chain for FlipChain<'_> {
    type State = Districting;

    fn validate_state(&self, state: &Districting) -> Result<()> {
        self.check_start(state)
    }

    fn step<R: Rng + ?Sized>(&self, state: &mut Districting, rng: &mut R) {
        self.step_outcome(state, rng);
    }
}

/// Counts of what happened during a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RunCounts {
    pub loops: u64,
    pub rejected: u64,
    pub moved: u64,
    pub audits: u64,
}

#[derive(Debug, Clone)]
pub struct FlipRun {
    /// One trajectory per requested label function, in request order.
    pub labels: Vec<LabeledTrajectory>,
    pub counts: RunCounts,
    pub final_plan: Districting,
    pub seed: u64,
    pub generator_id: &'static str,
}

/// Runs `k` steps from `start`, recording every label in `labels` after
/// every step (loops included). Every `audit_every` steps the districting is re-validated from
/// scratch and its caches compared against recomputation.
pub fn run_flip_chain(
    chain: &FlipChain<'_>,
    start: Districting,
    k: u64,
    seed: u64,
    labels: &[LabelFunction],
    audit_every: Option<u64>,
) -> Result<FlipRun> {
    chain.check_start(&start)?;
    let mut rng = rng::generator(seed);
    let mut plan = start;
    let mut series = vec![Vec::with_capacity(k as usize + 1); labels.len()];
    let record = |plan: &Districting, series: &mut [Vec<f64>]| -> Result<()> {
        let shares = vote_shares(plan)?;
        for (out, f) in series.iter_mut().zip(labels) {
            out.push(f.eval_shares(&shares)?);
        }
        Ok(())
    };
    record(&plan, &mut series)?;
    let mut counts = RunCounts::default();
    for step in 1..=k {
        match chain.step_outcome(&mut plan, &mut rng) {
            StepOutcome::Loop => counts.loops += 1,
            StepOutcome::Rejected { .. } => counts.rejected += 1,
            StepOutcome::Moved { .. } => counts.moved += 1,
        }
        record(&plan, &mut series)?;
        if audit_every.is_some_and(|every| every > 0 && step % every == 0) {
            audit(chain, &plan, step)?;
            counts.audits += 1;
        }
    }
    Ok(FlipRun {
        labels: series.into_iter().map(LabeledTrajectory::new).collect::<Result<_>>()?,
        counts,
        final_plan: plan,
        seed,
        generator_id: GENERATOR_ID,
    })
}

/// Advances `plan` by `k` steps without recording labels.
pub fn advance(chain: &FlipChain<'_>, plan: &mut Districting, k: u64, seed: u64) -> RunCounts {
    let mut rng = rng::generator(seed);
    let mut counts = RunCounts::default();
    for _ in 0..k {
        match chain.step_outcome(plan, &mut rng) {
            StepOutcome::Loop => counts.loops += 1,
            StepOutcome::Rejected { .. } => counts.rejected += 1,
            StepOutcome::Moved { .. } => counts.moved += 1,
        }
    }
    counts
}

/// Full validity and cache audit.
pub fn audit(chain: &FlipChain<'_>, plan: &Districting, step: u64) -> Result<()> {
    if let Some(reason) = is_valid(chain.geography(), plan, chain.constraints()).reason() {
        return Err(Error::Config(format!("audit at step {step}: invalid districting: {reason}")));
    }
    plan.audit_caches(chain.geography(), 1e-9)
        .map_err(|e| Error::Config(format!("audit at step {step}: {e}")))
}
