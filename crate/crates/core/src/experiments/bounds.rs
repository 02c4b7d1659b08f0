use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::report::{Check, ExperimentReport};
use crate::chain::{exact_ell_small_table, verify_reversibility, FiniteChain, TransitionMatrix};
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, generator};
use crate::significance::theorem_bound;

pub const BOUND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    pub n_chains: usize,
    pub k_max: usize,
    pub min_states: usize,
    pub max_states: usize,
    /// Labels are drawn from `0..label_levels`, so ties are common.
    pub label_levels: u32,
    pub seed: u64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            n_chains: 50,
            k_max: 8,
            min_states: 3,
            max_states: 5,
            label_levels: 3,
            seed: 1,
        }
    }
}

/// Worst cases found on one chain over every `ℓ ≤ k ≤ k_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainOutcome {
    pub index: usize,
    pub n_states: usize,
    pub pi: Vec<f64>,
    pub labels: Vec<f64>,
    pub min_slack: f64,
    pub min_slack_at: (usize, usize),
    pub max_symmetry_defect: f64,
    pub detailed_balance_defect: f64,
}

/// A random reversible chain: symmetric positive weights normalized by row,
/// which is reversible for `π` proportional to the row sums.
pub fn random_reversible_chain(n: usize, label_levels: u32, seed: u64) -> Result<FiniteChain> {
    if n == 0 || label_levels == 0 {
        return Err(invalid("need at least one state and one label level"));
    }
    let mut rng = generator(seed);
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            // Some zero off-diagonal weights, so not every move is possible.
            let x = if i != j && rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.05..1.0) };
            w[i][j] = x;
            w[j][i] = x;
        }
    }
    let labels = (0..n).map(|_| rng.random_range(0..label_levels) as f64).collect();
    FiniteChain::from_symmetric_weights(&w, labels)
}

/// Checks `ρ_{0,ℓ}^k` against the bound and `ρ_{j,ℓ}^k = ρ_{k−j,ℓ}^k`.
pub fn check_chain(chain: &FiniteChain, k_max: usize, index: usize) -> Result<ChainOutcome> {
    let mut min_slack = f64::INFINITY;
    let mut min_slack_at = (0, 0);
    let mut max_symmetry_defect = 0.0f64;
    for k in 0..=k_max {
        let table = exact_ell_small_table(chain, k)?;
        for ell in 0..=k {
            let slack = theorem_bound(ell as u64, k as u64) - table.get(0, ell);
            if slack < min_slack {
                min_slack = slack;
                min_slack_at = (k, ell);
            }
            for j in 0..=k {
                max_symmetry_defect = max_symmetry_defect.max((table.get(j, ell) - table.get(k - j, ell)).abs());
            }
        }
    }
    Ok(ChainOutcome {
        index,
        n_states: chain.n_states(),
        pi: chain.pi().to_vec(),
        labels: chain.labels().to_vec(),
        min_slack,
        min_slack_at,
        max_symmetry_defect,
        detailed_balance_defect: chain.transition().detailed_balance_defect(chain.pi()),
    })
}

/// The fair two-state chain with labels (0, 1).
pub fn reference_chain() -> FiniteChain {
    let p = TransitionMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).expect("stochastic");
    FiniteChain::new(p, Some(vec![0.5, 0.5]), vec![0.0, 1.0]).expect("valid")
}

pub fn bound_verification(config: &BoundConfig) -> Result<ExperimentReport> {
    if config.min_states == 0 || config.min_states > config.max_states {
        return Err(invalid("state range is empty"));
    }
    let outcomes = (0..config.n_chains)
        .into_par_iter()
        .map(|i| {
            let mut rng = generator(derive_seed(config.seed, i as u64));
            let n = rng.random_range(config.min_states..=config.max_states);
            let chain = random_reversible_chain(n, config.label_levels, rng.random())?;
            if !verify_reversibility(&chain, 1e-12) {
                return Err(invalid(format!("chain {i} failed detailed balance")));
            }
            check_chain(&chain, config.k_max, i)
        })
        .collect::<Result<Vec<_>>>()?;

    let reference = exact_ell_small_table(&reference_chain(), 1)?.get(0, 0);
    let reference_slack = theorem_bound(0, 1) - reference;
    let min_slack = outcomes.iter().map(|o| o.min_slack).fold(f64::INFINITY, f64::min);
    let max_symmetry = outcomes.iter().map(|o| o.max_symmetry_defect).fold(0.0, f64::max);
    let max_balance = outcomes.iter().map(|o| o.detailed_balance_defect).fold(0.0, f64::max);
    let summary = json!({
        "chains": outcomes.len(),
        "min_slack": min_slack,
        "max_symmetry_defect": max_symmetry,
        "max_detailed_balance_defect": max_balance,
        "reference_rho": reference,
        "reference_slack": reference_slack,
    });
    let mut checks = Vec::new();
    if !outcomes.is_empty() {
        checks.push(Check::at_least("min over chains of bound - rho_0", min_slack, -BOUND_TOL));
        checks.push(Check::at_most("max |rho_j - rho_(k-j)|", max_symmetry, BOUND_TOL));
    }
    checks.push(Check::at_most(
        "|reference slack - (sqrt(1/2) - 1/4)|",
        (reference_slack - (0.5f64.sqrt() - 0.25)).abs(),
        BOUND_TOL,
    ));
    Ok(ExperimentReport::new(
        "bound-verify",
        config.seed,
        serde_json::to_value(config).expect("config serializes"),
        outcomes.iter().map(|o| serde_json::to_value(o).expect("outcome serializes")).collect(),
        summary,
        checks,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes() {
        let cfg = BoundConfig {
            n_chains: 4,
            k_max: 5,
            ..Default::default()
        };
        let r = bound_verification(&cfg).unwrap();
        assert!(r.passed, "{}", r.to_text());
        assert_eq!(r.trials.len(), 4);
        assert_eq!(r, bound_verification(&cfg).unwrap());
    }

    #[test]
    fn random_chains_are_reversible() {
        for s in 0..20 {
            let c = random_reversible_chain(4, 3, s).unwrap();
            assert!(verify_reversibility(&c, 1e-12));
        }
    }

    #[test]
    fn reference_slack() {
        let rho = exact_ell_small_table(&reference_chain(), 1).unwrap().get(0, 0);
        assert!((theorem_bound(0, 1) - rho - (0.5f64.sqrt() - 0.25)).abs() < 1e-15);
        // At k = 0 the bound is met with equality.
        assert_eq!(check_chain(&reference_chain(), 1, 0).unwrap().min_slack, 0.0);
    }
}
