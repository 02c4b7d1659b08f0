use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::report::{Check, ExperimentReport};
use crate::districting::{
    advance, grid_geography, planted_districting, run_flip_chain, CompactnessMode, FlipChain, LabelFunction,
    ValidityConstraints,
};
use crate::error::{invalid, Result};
use crate::rng::derive_seed;
use crate::significance::{run_sqrt_eps_test, LabeledTrajectory, OutlierReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub width: usize,
    pub height: usize,
    pub districts: usize,
    pub pop_tolerance: f64,
    pub compactness: CompactnessMode,
    pub threshold: f64,
    pub geography_seed: u64,
    pub steps: u64,
    pub seeds: u64,
    pub seed: u64,
    /// Steps of pre-run from the planted state before each negative-control
    /// run; zero disables the control.
    pub burn_in: u64,
    pub significance: f64,
    pub min_power: f64,
    pub max_control_rate: f64,
    /// Extra step counts at which the planted runs are also tested, using
    /// prefixes of one longer run.
    pub scaling_steps: Vec<u64>,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            width: 12,
            height: 12,
            districts: 4,
            pop_tolerance: 0.1,
            compactness: CompactnessMode::Perimeter,
            threshold: 200.0,
            geography_seed: 7,
            steps: 1 << 18,
            seeds: 20,
            seed: 1,
            burn_in: 1 << 22,
            significance: 0.05,
            min_power: 0.8,
            max_control_rate: 0.15,
            scaling_steps: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelOutcome {
    pub label: LabelFunction,
    pub report: OutlierReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub k: u64,
    pub p_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedOutcome {
    pub index: u64,
    pub run_seed: u64,
    pub planted: Vec<LabelOutcome>,
    pub control_seeds: Option<(u64, u64)>,
    pub control: Option<Vec<LabelOutcome>>,
    pub scaling: Vec<ScalingPoint>,
}

fn test_all(labels: &[LabeledTrajectory], k: Option<u64>) -> Result<Vec<LabelOutcome>> {
    LabelFunction::ALL
        .iter()
        .zip(labels)
        .map(|(&label, traj)| {
            let report = match k {
                Some(k) => run_sqrt_eps_test(&LabeledTrajectory::new(traj.labels()[..=k as usize].to_vec())?, None)?,
                None => run_sqrt_eps_test(traj, None)?,
            };
            Ok(LabelOutcome { label, report })
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Least-squares slope of `y` on `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Runs the test from a planted packed districting on many seeds, and, as a
/// negative control, from states reached by a long pre-run from it.
pub fn planted_experiment(config: &PlantedConfig) -> Result<ExperimentReport> {
    if config.seeds == 0 {
        return Err(invalid("need at least one seed"));
    }
    let geo = grid_geography(
        config.width,
        config.height,
        Default::default(),
        Default::default(),
        config.geography_seed,
    )?;
    let constraints = ValidityConstraints::new(config.pop_tolerance, config.compactness, config.threshold)?;
    let chain = FlipChain::new(&geo, constraints)?;
    let planted = planted_districting(&geo, config.districts)?;
    chain.check_start(&planted)?;
    let run_steps = config.scaling_steps.iter().copied().fold(config.steps, u64::max);

    let outcomes = (0..config.seeds)
        .into_par_iter()
        .map(|i| -> Result<SeedOutcome> {
            let run_seed = derive_seed(config.seed, 3 * i);
            let run = run_flip_chain(&chain, planted.clone(), run_steps, run_seed, &LabelFunction::ALL, None)?;
            let planted_reports = test_all(&run.labels, (run_steps != config.steps).then_some(config.steps))?;
            let scaling = config
                .scaling_steps
                .iter()
                .map(|&k| {
                    Ok(ScalingPoint {
                        k,
                        p_values: test_all(&run.labels, Some(k))?.iter().map(|o| o.report.p_value).collect(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let (control_seeds, control) = if config.burn_in > 0 {
                let (burn_seed, control_seed) = (derive_seed(config.seed, 3 * i + 1), derive_seed(config.seed, 3 * i + 2));
                let mut start = planted.clone();
                advance(&chain, &mut start, config.burn_in, burn_seed);
                let run = run_flip_chain(&chain, start, config.steps, control_seed, &LabelFunction::ALL, None)?;
                (Some((burn_seed, control_seed)), Some(test_all(&run.labels, None)?))
            } else {
                (None, None)
            };
            Ok(SeedOutcome {
                index: i,
                run_seed,
                planted: planted_reports,
                control_seeds,
                control,
                scaling,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = outcomes.len() as f64;
    let rate = |pick: &dyn Fn(&SeedOutcome) -> Option<&Vec<LabelOutcome>>, li: usize| {
        outcomes
            .iter()
            .filter(|o| pick(o).is_some_and(|r| r[li].report.p_value <= config.significance))
            .count() as f64
            / n
    };
    let mut summary = Map::new();
    let mut checks = Vec::new();
    let mut best_power = 0.0f64;
    for (li, label) in LabelFunction::ALL.iter().enumerate() {
        let power = rate(&|o| Some(&o.planted), li);
        best_power = best_power.max(power);
        let p_values: Vec<f64> = outcomes.iter().map(|o| o.planted[li].report.p_value).collect();
        let mut entry = json!({
            "planted_significant_fraction": power,
            "planted_median_p": median(p_values),
        });
        if config.burn_in > 0 {
            let false_rate = rate(&|o| o.control.as_ref(), li);
            entry["control_significant_fraction"] = json!(false_rate);
            checks.push(Check::at_most(
                format!("control {label} significant fraction"),
                false_rate,
                config.max_control_rate,
            ));
        }
        if config.scaling_steps.len() >= 2 {
            let ks: Vec<f64> = config.scaling_steps.iter().map(|&k| (k as f64).ln()).collect();
            let medians: Vec<f64> = (0..config.scaling_steps.len())
                .map(|si| median(outcomes.iter().map(|o| o.scaling[si].p_values[li]).collect()))
                .collect();
            entry["scaling_median_p"] = json!(medians);
            entry["scaling_log_log_slope"] = json!(slope(&ks, &medians.iter().map(|p| p.ln()).collect::<Vec<_>>()));
        }
        summary.insert(label.to_string(), entry);
    }
    summary.insert("planted_shares".into(), json!(crate::districting::vote_shares(&planted)?));
    summary.insert("best_planted_significant_fraction".into(), json!(best_power));
    checks.insert(
        0,
        Check::at_least("best label planted significant fraction", best_power, config.min_power),
    );
    Ok(ExperimentReport::new(
        "planted",
        config.seed,
        serde_json::to_value(config).expect("config serializes"),
        outcomes.iter().map(|o| serde_json::to_value(o).expect("outcome serializes")).collect(),
        Value::Object(summary),
        checks,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> PlantedConfig {
        PlantedConfig {
            width: 6,
            height: 6,
            districts: 3,
            threshold: 80.0,
            steps: 2_000,
            seeds: 3,
            burn_in: 5_000,
            min_power: 0.0,
            max_control_rate: 1.0,
            scaling_steps: vec![500, 1_000, 2_000, 4_000],
            ..Default::default()
        }
    }

    #[test]
    fn reproducible_and_shaped() {
        let r = planted_experiment(&small()).unwrap();
        assert_eq!(r.trials.len(), 3);
        assert!(r.passed);
        assert_eq!(r.to_json(), planted_experiment(&small()).unwrap().to_json());
        assert!(r.summary["var"]["scaling_log_log_slope"].is_number());
        assert_eq!(r.trials[0]["planted"][0]["report"]["k"], 2_000);
    }

    #[test]
    fn invalid_planted_state_is_a_config_error() {
        let cfg = PlantedConfig {
            threshold: 10.0,
            ..small()
        };
        assert!(matches!(planted_experiment(&cfg), Err(crate::Error::Config(_))));
    }
}
