//! Simple random walk on an `N`-cycle, the chain for which the √ε rate is
//! essentially attained.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::Rng;

use super::Chain;
use crate::error::{invalid, Result};

/// `X_i = X_{i−1} ± 1 (mod N)` with equal probability; labels are positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleWalk {
    n_positions: u64,
}

impl CycleWalk {
    pub fn new(n_positions: u64) -> Result<Self> {
        if n_positions < 3 {
            return Err(invalid(format!("cycle needs at least 3 positions, got {n_positions}")));
        }
        Ok(Self { n_positions })
    }

    pub fn n_positions(&self) -> u64 {
        self.n_positions
    }
}

impl Chain for CycleWalk {
    type State = u64;

    fn validate_state(&self, state: &u64) -> Result<()> {
        if *state < self.n_positions {
            Ok(())
        } else {
            Err(invalid(format!("position {state} outside 0..{}", self.n_positions)))
        }
    }

    fn step<R: Rng + ?Sized>(&self, state: &mut u64, rng: &mut R) {
        *state = if rng.random::<bool>() {
            (*state + 1) % self.n_positions
        } else {
            (*state + self.n_positions - 1) % self.n_positions
        };
    }
}

/// `C(k, k/2) / 2^(k+1)` as an exact pair `(C(k, k/2), k + 1)`.
pub fn cycle_first_dominance_exact(k: u64) -> Result<(BigUint, u64)> {
    if k < 2 || k % 2 == 1 {
        return Err(invalid(format!("k must be even and at least 2, got {k}")));
    }
    let half = k / 2;
    let mut c = BigUint::one();
    // C(k, h) = Π_{i=1..h} (h + i) / i, exact at every step.
    for i in 1..=half {
        c = c * (half + i) / i;
    }
    Ok((c, k + 1))
}

/// Probability that `X₀` is the strict minimum of a `k`-step walk started far
/// from the wrap point: `C(k, k/2) / 2^(k+1)`.
pub fn cycle_first_dominance_probability(k: u64) -> Result<f64> {
    let (num, pow2) = cycle_first_dominance_exact(k)?;
    // Keep the top 64 bits of the numerator so huge k does not overflow f64.
    let bits = num.bits();
    let shift = bits.saturating_sub(64);
    let top = (num >> shift).to_f64().expect("fits in 64 bits");
    let exp = shift as i64 - pow2 as i64;
    Ok(top * 2f64.powi(exp.clamp(i32::MIN as i64, i32::MAX as i64) as i32))
}
