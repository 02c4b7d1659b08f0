use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::report::{Check, ExperimentReport};
use crate::chain::{cycle_first_dominance_exact, cycle_first_dominance_probability, Chain, CycleWalk};
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, generator};

const CHUNK: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessConfig {
    pub k_list: Vec<u64>,
    pub trials: u64,
    pub n_positions: u64,
    pub seed: u64,
    /// Allowed |Monte Carlo − exact| in binomial standard errors.
    pub z_tolerance: f64,
}

impl Default for TightnessConfig {
    fn default() -> Self {
        Self {
            k_list: vec![2, 4, 10, 50, 100, 200],
            trials: 200_000,
            n_positions: 1_000_000,
            seed: 1,
            z_tolerance: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessRow {
    pub k: u64,
    pub exact: f64,
    /// Numerator over `2^(k+1)`, as a decimal string.
    pub exact_numerator: String,
    pub sqrt_eps_over_2pi: f64,
    pub ratio_to_sqrt_2eps: f64,
    pub ratio_to_asymptotic: f64,
    pub monte_carlo: Option<f64>,
    pub standard_error: Option<f64>,
    pub z: Option<f64>,
}

/// Runs `trials` cycle walks of `k` steps from the middle of the cycle and
/// counts those whose starting position stays the strict minimum.
pub fn cycle_minimum_hits(n_positions: u64, k: u64, trials: u64, seed: u64) -> Result<u64> {
    if n_positions <= 2 * k + 2 {
        return Err(invalid(format!("need more than 2k+2 = {} positions, got {n_positions}", 2 * k + 2)));
    }
    let walk = CycleWalk::new(n_positions)?;
    let chunks = trials.div_ceil(CHUNK);
    let hits = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = generator(derive_seed(seed, c));
            let n = CHUNK.min(trials - c * CHUNK);
            let start = n_positions / 2;
            let mut hits = 0u64;
            for _ in 0..n {
                let mut x = start;
                let mut minimal = true;
                for _ in 0..k {
                    walk.step(&mut x, &mut rng);
                    if x <= start {
                        minimal = false;
                    }
                }
                hits += u64::from(minimal);
            }
            hits
        })
        .sum();
    Ok(hits)
}

/// How close the cycle walk comes to the test's bound: the chance that the
/// start is a strict minimum is about `√(ε/2π)` with `ε = 1/(k+1)`, within a
/// constant factor of the `√(2ε)` the test charges.
pub fn tightness_experiment(config: &TightnessConfig) -> Result<ExperimentReport> {
    if config.k_list.is_empty() {
        return Err(invalid("k list is empty"));
    }
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for &k in &config.k_list {
        let exact = cycle_first_dominance_probability(k)?;
        let (numerator, _) = cycle_first_dominance_exact(k)?;
        let eps = 1.0 / (k as f64 + 1.0);
        let mut row = TightnessRow {
            k,
            exact,
            exact_numerator: numerator.to_string(),
            sqrt_eps_over_2pi: (eps / (2.0 * std::f64::consts::PI)).sqrt(),
            ratio_to_sqrt_2eps: exact / (2.0 * eps).sqrt(),
            ratio_to_asymptotic: exact * (2.0 * std::f64::consts::PI * k as f64).sqrt(),
            monte_carlo: None,
            standard_error: None,
            z: None,
        };
        if config.trials > 0 {
            let hits = cycle_minimum_hits(config.n_positions, k, config.trials, derive_seed(config.seed, k))?;
            let mc = hits as f64 / config.trials as f64;
            let se = (exact * (1.0 - exact) / config.trials as f64).sqrt();
            let z = (mc - exact) / se;
            row.monte_carlo = Some(mc);
            row.standard_error = Some(se);
            row.z = Some(z);
            checks.push(Check::at_most(format!("k={k} |monte carlo - exact| / se"), z.abs(), config.z_tolerance));
        }
        rows.push(row);
    }
    let last = rows.last().expect("nonempty");
    let summary = json!({
        "largest_k": last.k,
        "ratio_to_sqrt_2eps_at_largest_k": last.ratio_to_sqrt_2eps,
        "limit_of_ratio_to_sqrt_2eps": 0.5 / std::f64::consts::PI.sqrt(),
        "ratio_to_asymptotic_at_largest_k": last.ratio_to_asymptotic,
    });
    Ok(ExperimentReport::new(
        "tightness",
        config.seed,
        serde_json::to_value(config).expect("config serializes"),
        rows.iter().map(|r| serde_json::to_value(r).expect("row serializes")).collect(),
        summary,
        checks,
    ))
}
