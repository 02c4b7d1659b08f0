use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::report::{Check, ExperimentReport};
use crate::districting::{
    enumerate_all_valid, enumerate_states, grid_geography, planted_districting, CompactnessMode, Districting,
    FlipChain, StateSpace, ValidityConstraints, MAX_STATES,
};
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, generator};

/// Brute-force enumeration of all `d^n` assignments is used up to this size.
pub const BRUTE_FORCE_LIMIT: u64 = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityInstance {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub districts: usize,
    pub pop_tolerance: f64,
    pub compactness: CompactnessMode,
    pub threshold: f64,
}

impl StationarityInstance {
    pub fn new(name: &str, width: usize, height: usize, districts: usize, pop_tolerance: f64) -> Self {
        Self {
            name: name.to_owned(),
            width,
            height,
            districts,
            pop_tolerance,
            compactness: CompactnessMode::Perimeter,
            threshold: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityConfig {
    pub instances: Vec<StationarityInstance>,
    pub steps: u64,
    pub batches: u64,
    pub seed: u64,
    pub symmetry_tolerance: f64,
    pub z_tolerance: f64,
}

impl Default for StationarityConfig {
    fn default() -> Self {
        Self {
            instances: vec![
                // Equal halves: the four domino states, none reachable from another.
                StationarityInstance::new("2x2-equal", 2, 2, 2, 0.02),
                StationarityInstance::new("2x2-loose", 2, 2, 2, 0.5),
                StationarityInstance::new("3x3", 3, 3, 2, 0.12),
            ],
            steps: 1_000_000,
            batches: 100,
            seed: 1,
            symmetry_tolerance: 1e-12,
            z_tolerance: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceOutcome {
    pub name: String,
    pub states: usize,
    pub brute_force_states: Option<usize>,
    pub components: usize,
    pub start_component_size: usize,
    pub n_max: usize,
    pub max_asymmetry: f64,
    pub uniform_stationarity_defect: f64,
    pub max_visit_z: f64,
    pub max_transition_z: f64,
    pub min_visit_frequency: f64,
    pub max_visit_frequency: f64,
}

/// Connected components of the move graph, as a component id per state.
fn components(space: &StateSpace) -> (Vec<usize>, usize) {
    let n = space.len();
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = count;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for (v, &p) in space.transition.row(u).iter().enumerate() {
                if p > 0.0 && comp[v] == usize::MAX {
                    comp[v] = count;
                    queue.push_back(v);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        (diff / se).abs()
    }
}

pub fn run_instance(instance: &StationarityInstance, steps: u64, batches: u64, seed: u64) -> Result<InstanceOutcome> {
    if batches == 0 || steps < batches {
        return Err(invalid("need at least one step per batch"));
    }
    let geo = grid_geography(instance.width, instance.height, Default::default(), Default::default(), 0)?;
    let constraints = ValidityConstraints::new(instance.pop_tolerance, instance.compactness, instance.threshold)?;
    let chain = FlipChain::new(&geo, constraints)?;
    let start = planted_districting(&geo, instance.districts)?;
    chain.check_start(&start)?;

    let brute = (instance.districts as u64)
        .checked_pow(geo.len() as u32)
        .filter(|&t| t <= BRUTE_FORCE_LIMIT)
        .map(|_| enumerate_all_valid(&chain, instance.districts, BRUTE_FORCE_LIMIT))
        .transpose()?;
    let mut seeds = vec![start.clone()];
    if let Some(all) = &brute {
        for a in all {
            seeds.push(Districting::new(&geo, a.clone(), instance.districts)?);
        }
    }
    let space = enumerate_states(&chain, &seeds, MAX_STATES)?;
    let n = space.len();
    let uniform = vec![1.0 / n as f64; n];
    let (comp, n_comp) = components(&space);
    let start_index = space.index_of(start.assignment()).expect("start was a seed");
    let members: Vec<usize> = (0..n).filter(|&s| comp[s] == comp[start_index]).collect();

    let mut rng = generator(seed);
    let mut plan = start;
    let batch_len = steps / batches;
    let used = batch_len * batches;
    let mut visits = vec![vec![0u64; n]; batches as usize];
    let mut transitions: HashMap<(usize, usize), u64> = HashMap::new();
    let mut from_counts = vec![0u64; n];
    let mut prev = start_index;
    for step in 0..used {
        chain.step_outcome(&mut plan, &mut rng);
        let s = space
            .index_of(plan.assignment())
            .ok_or_else(|| Error::Chain(format!("step {step} left the enumerated state space")))?;
        visits[(step / batch_len) as usize][s] += 1;
        *transitions.entry((prev, s)).or_default() += 1;
        from_counts[prev] += 1;
        prev = s;
    }

    let target = 1.0 / members.len() as f64;
    let mut max_visit_z = 0.0f64;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &s in &members {
        let freqs: Vec<f64> = visits.iter().map(|b| b[s] as f64 / batch_len as f64).collect();
        let mean = freqs.iter().sum::<f64>() / batches as f64;
        let var = freqs.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / (batches as f64 - 1.0).max(1.0);
        let se = (var / batches as f64).sqrt();
        max_visit_z = max_visit_z.max(z_score(mean - target, se));
        lo = lo.min(mean);
        hi = hi.max(mean);
    }
    let mut max_transition_z = 0.0f64;
    for &s in &members {
        let m = from_counts[s];
        if m == 0 {
            continue;
        }
        for t in 0..n {
            let p = space.transition.get(s, t);
            let observed = transitions.get(&(s, t)).copied().unwrap_or(0) as f64 / m as f64;
            let se = (p * (1.0 - p) / m as f64).sqrt();
            max_transition_z = max_transition_z.max(z_score(observed - p, se));
        }
    }
    Ok(InstanceOutcome {
        name: instance.name.clone(),
        states: n,
        brute_force_states: brute.map(|b| b.len()),
        components: n_comp,
        start_component_size: members.len(),
        n_max: space.n_max,
        max_asymmetry: space.transition.max_asymmetry(),
        uniform_stationarity_defect: space.transition.stationarity_defect(&uniform),
        max_visit_z,
        max_transition_z,
        min_visit_frequency: lo,
        max_visit_frequency: hi,
    })
}

/// Enumerates each instance, checks that its transition matrix is symmetric
/// (so the uniform distribution is stationary), then runs the chain and
/// compares visit and transition frequencies against the exact values.
///
/// Visit frequencies are compared with uniform over the start's component,
/// with standard errors from batch means.
pub fn stationarity_experiment(config: &StationarityConfig) -> Result<ExperimentReport> {
    let outcomes = config
        .instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| run_instance(inst, config.steps, config.batches, derive_seed(config.seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();
    for o in &outcomes {
        checks.push(Check::at_most(format!("{} max asymmetry", o.name), o.max_asymmetry, config.symmetry_tolerance));
        checks.push(Check::at_most(
            format!("{} uniform stationarity defect", o.name),
            o.uniform_stationarity_defect,
            config.symmetry_tolerance,
        ));
        checks.push(Check::at_most(format!("{} max visit z", o.name), o.max_visit_z, config.z_tolerance));
        checks.push(Check::at_most(
            format!("{} max transition z", o.name),
            o.max_transition_z,
            config.z_tolerance,
        ));
        if let Some(b) = o.brute_force_states {
            checks.push(Check::at_most(
                format!("{} states missed by enumeration", o.name),
                b.abs_diff(o.states) as f64,
                0.0,
            ));
        }
    }
    let summary = json!({
        "instances": outcomes.len(),
        "states": outcomes.iter().map(|o| o.states).collect::<Vec<_>>(),
    });
    Ok(ExperimentReport::new(
        "stationarity",
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
    fn default_instances_small_run() {
        let cfg = StationarityConfig {
            steps: 100_000,
            ..Default::default()
        };
        let r = stationarity_experiment(&cfg).unwrap();
        assert!(r.passed, "{}", r.to_text());
        assert_eq!(r.trials[0]["states"], 4);
        assert_eq!(r.trials[0]["components"], 4);
        assert_eq!(r.trials[1]["states"], 12);
        assert_eq!(r.trials[1]["components"], 1);
        println!("{}", r.to_text());
    }
}
