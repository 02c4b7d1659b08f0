//! Exact ℓ-smallness probabilities by enumerating every trajectory.
//!
//! ℓ-smallness couples all `k + 1` labels of a path, so there is no
//! convenient recursion; instead every path of length `k + 1` is visited with
//! its probability under a stationary start.

use super::FiniteChain;
use crate::error::{invalid, Error, Result};

/// Upper limit on `n_states^(k+1)`.
pub const MAX_ENUMERATED_PATHS: u64 = 10_000_000;

/// `ρ_{j,ℓ}^k` for every `0 ≤ j ≤ k` and `0 ≤ ℓ ≤ k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllSmallTable {
    k: usize,
    /// Row `j`, column `ℓ`; cumulative in `ℓ`.
    rho: Vec<Vec<f64>>,
}

impl EllSmallTable {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Probability that `X_j` is ℓ-small among `X₀, …, X_k`. Any `ℓ ≥ k` gives
    /// the total mass.
    pub fn get(&self, j: usize, ell: usize) -> f64 {
        self.rho[j][ell.min(self.k)]
    }
}

fn path_count(n: usize, k: usize) -> Option<u64> {
    (n as u64).checked_pow(u32::try_from(k + 1).ok()?)
}

/// Full table of `ρ_{j,ℓ}^k` under `X₀ ~ π`.
pub fn exact_ell_small_table(chain: &FiniteChain, k: usize) -> Result<EllSmallTable> {
    let n = chain.n_states();
    match path_count(n, k) {
        Some(c) if c <= MAX_ENUMERATED_PATHS => {}
        _ => {
            return Err(Error::Resource(format!(
                "{n}^{} paths exceed the enumeration limit of {MAX_ENUMERATED_PATHS}",
                k + 1
            )))
        }
    }
    let p = chain.transition();
    let labels = chain.labels();
    let len = k + 1;

    // hist[j][c]: mass of paths where exactly c indices i != j have label <= label_j.
    let mut hist = vec![vec![0.0f64; len]; len];
    let mut path = vec![0usize; len];
    let mut prefix = vec![0.0f64; len];
    let mut path_labels = vec![0.0f64; len];

    // Odometer over all paths; prefix[d] is Pr(X_0..X_d = path[0..=d]).
    let mut depth = 0usize;
    path[0] = 0;
    loop {
        let s = path[depth];
        prefix[depth] = if depth == 0 {
            chain.pi()[s]
        } else {
            prefix[depth - 1] * p.get(path[depth - 1], s)
        };
        path_labels[depth] = labels[s];
        if depth + 1 < len {
            depth += 1;
            path[depth] = 0;
            continue;
        }
        let mass = prefix[depth];
        if mass > 0.0 {
            for j in 0..len {
                let pivot = path_labels[j];
                let c = path_labels.iter().filter(|&&x| x <= pivot).count() - 1;
                hist[j][c] += mass;
            }
        }
        // Advance to the next path.
        loop {
            path[depth] += 1;
            if path[depth] < n {
                break;
            }
            if depth == 0 {
                let rho = hist
                    .into_iter()
                    .map(|h| {
                        h.iter()
                            .scan(0.0, |acc, &x| {
                                *acc += x;
                                Some(*acc)
                            })
                            .collect()
                    })
                    .collect();
                return Ok(EllSmallTable { k, rho });
            }
            depth -= 1;
        }
    }
}

/// `ρ_{j,ℓ}^k`: probability under a stationary start that `X_j` is ℓ-small
/// among `X₀, …, X_k`.
pub fn exact_ell_small_probability(chain: &FiniteChain, k: usize, ell: usize, j: usize) -> Result<f64> {
    if j > k {
        return Err(invalid(format!("index j = {j} exceeds k = {k}")));
    }
    Ok(exact_ell_small_table(chain, k)?.get(j, ell))
}
