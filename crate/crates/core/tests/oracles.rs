//! Distributional and structural checks against independent oracles.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sqrteps::chain::{sample_trajectory, FiniteChain};
use sqrteps::districting::{
    boundary_pairs, enumerate_all_valid, enumerate_states, grid_geography, is_valid, planted_districting,
    CompactnessMode, Districting, FlipChain, StepOutcome, ValidityConstraints, MAX_STATES,
};
use sqrteps::rng::{derive_seed, generator};

fn three_state() -> FiniteChain {
    let w = vec![vec![1.0, 2.0, 0.5], vec![2.0, 0.3, 1.0], vec![0.5, 1.0, 2.5]];
    FiniteChain::from_symmetric_weights(&w, vec![0.0, 1.0, 2.0]).unwrap()
}

#[test]
fn trajectory_path_frequencies_match_exact_probabilities() {
    let chain = three_state();
    let (p, pi) = (chain.transition(), chain.pi());
    let runs = 1_000_000u64;
    let mut counts = [0u64; 81];
    let mut start_rng = ChaCha8Rng::seed_from_u64(11);
    for r in 0..runs {
        let u: f64 = start_rng.random();
        let x0 = if u < pi[0] { 0 } else if u < pi[0] + pi[1] { 1 } else { 2 };
        let t = sample_trajectory(&chain, x0, 3, derive_seed(99, r)).unwrap();
        let code = t.states.iter().fold(0, |acc, &s| acc * 3 + s);
        counts[code] += 1;
    }
    let mut worst = 0.0f64;
    for (code, &count) in counts.iter().enumerate() {
        let s = [code / 27, code / 9 % 3, code / 3 % 3, code % 3];
        let exact = pi[s[0]] * p.get(s[0], s[1]) * p.get(s[1], s[2]) * p.get(s[2], s[3]);
        let freq = count as f64 / runs as f64;
        let se = (exact * (1.0 - exact) / runs as f64).sqrt();
        let z = if exact == 0.0 { freq * f64::INFINITY } else { (freq - exact).abs() / se };
        assert!(z <= 4.0, "path {s:?}: frequency {freq}, exact {exact}, z {z}");
        worst = worst.max(z);
    }
    println!("worst path z {worst:.2}");
}

#[test]
fn flip_chain_transition_frequencies_match_enumeration() {
    let geo = grid_geography(2, 2, Default::default(), Default::default(), 0).unwrap();
    let c = ValidityConstraints::new(0.5, CompactnessMode::Perimeter, 1e6).unwrap();
    let chain = FlipChain::new(&geo, c).unwrap();
    let start = planted_districting(&geo, 2).unwrap();
    let space = enumerate_states(&chain, std::slice::from_ref(&start), MAX_STATES).unwrap();
    assert_eq!(space.len(), 12);
    let mut plan = start;
    let mut rng = generator(8);
    let mut from = vec![0u64; space.len()];
    let mut pairs: HashMap<(usize, usize), u64> = HashMap::new();
    let mut prev = space.index_of(plan.assignment()).unwrap();
    for _ in 0..1_000_000 {
        chain.step_outcome(&mut plan, &mut rng);
        let s = space.index_of(plan.assignment()).unwrap();
        from[prev] += 1;
        *pairs.entry((prev, s)).or_default() += 1;
        prev = s;
    }
    for s in 0..space.len() {
        for t in 0..space.len() {
            let exact = space.transition.get(s, t);
            let freq = pairs.get(&(s, t)).copied().unwrap_or(0) as f64 / from[s] as f64;
            if exact == 0.0 {
                assert_eq!(freq, 0.0, "impossible transition {s} -> {t} observed");
                continue;
            }
            let se = (exact * (1.0 - exact) / from[s] as f64).sqrt();
            assert!((freq - exact).abs() <= 4.0 * se, "{s} -> {t}: {freq} vs {exact}");
        }
    }
}

#[test]
fn enumeration_reaches_every_valid_state() {
    let geo = grid_geography(3, 3, Default::default(), Default::default(), 0).unwrap();
    let c = ValidityConstraints::new(0.12, CompactnessMode::Perimeter, 1e6).unwrap();
    let chain = FlipChain::new(&geo, c).unwrap();
    let all: BTreeSet<Vec<u32>> = enumerate_all_valid(&chain, 2, 1 << 20).unwrap().into_iter().collect();
    let start = planted_districting(&geo, 2).unwrap();
    let space = enumerate_states(&chain, &[start], MAX_STATES).unwrap();
    let reached: BTreeSet<Vec<u32>> = space.states.iter().cloned().collect();
    assert_eq!(reached, all);
    assert_eq!(space.transition.max_asymmetry(), 0.0);
    for s in 0..space.len() {
        // Every state has N_max equiprobable slots, so off-diagonal entries
        // are whole multiples of 1/N_max.
        for t in 0..space.len() {
            let x = space.transition.get(s, t) * space.n_max as f64;
            if s != t {
                assert!(x == 0.0 || (x - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn boundary_updates_are_local() {
    let geo = grid_geography(8, 8, Default::default(), Default::default(), 4).unwrap();
    let c = ValidityConstraints::new(0.2, CompactnessMode::Perimeter, 120.0).unwrap();
    let chain = FlipChain::new(&geo, c).unwrap();
    let mut plan = planted_districting(&geo, 4).unwrap();
    let mut rng = generator(21);
    let mut moves = 0;
    for _ in 0..20_000 {
        let before: BTreeSet<_> = plan.boundary().sorted_pairs().into_iter().collect();
        let outcome = chain.step_outcome(&mut plan, &mut rng);
        let after: BTreeSet<_> = plan.boundary().sorted_pairs().into_iter().collect();
        let fresh: BTreeSet<_> = boundary_pairs(&geo, &plan).sorted_pairs().into_iter().collect();
        assert_eq!(after, fresh);
        assert!(plan.boundary().len() <= chain.n_max());
        match outcome {
            StepOutcome::Moved { precinct, .. } => {
                moves += 1;
                let mut near: BTreeSet<usize> = geo.neighbors(precinct).iter().map(|n| n.precinct).collect();
                near.insert(precinct);
                for (r, _) in before.symmetric_difference(&after) {
                    assert!(near.contains(r), "pair at precinct {r} changed after moving {precinct}");
                }
            }
            _ => assert_eq!(before, after),
        }
    }
    assert!(moves > 100);
}

#[test]
fn caches_match_recomputation_after_many_steps() {
    let geo = grid_geography(10, 10, Default::default(), Default::default(), 3).unwrap();
    let c = ValidityConstraints::new(0.25, CompactnessMode::L2, 40.0).unwrap();
    let chain = FlipChain::new(&geo, c).unwrap();
    let start = planted_districting(&geo, 5).unwrap();
    assert!(is_valid(&geo, &start, &c).is_valid());
    let mut plan = start;
    let mut rng = generator(5);
    for _ in 0..10_000 {
        chain.step_outcome(&mut plan, &mut rng);
    }
    let fresh = Districting::new(&geo, plan.assignment().to_vec(), 5).unwrap();
    for (a, b) in plan.stats().iter().zip(fresh.stats()) {
        assert_eq!((a.precincts, a.population, a.votes_dem, a.votes_total), (b.precincts, b.population, b.votes_dem, b.votes_total));
        assert!((a.area - b.area).abs() <= 1e-9 && (a.perimeter - b.perimeter).abs() <= 1e-9);
    }
    assert!(is_valid(&geo, &plan, &c).is_valid());
}
