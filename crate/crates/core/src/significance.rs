//! Arithmetic of the √ε outlier test.
//!
//! A presented state `σ₀` is an ε-outlier on a trajectory `σ₀, …, σ_k` when at
//! most `ε(k+1)` of the observed labels (index 0 included) are `≤` its own
//! label. Under the null hypothesis that `σ₀` was drawn from a stationary
//! distribution of a reversible chain, observing this is significant at
//! `p = √(2ε)`, whatever the mixing time of the chain.

use serde::{Deserialize, Serialize};

use std::path::Path;

use crate::error::{invalid, Error, Result};

/// Labels `ω(X₀), …, ω(X_k)` observed along a trajectory. Index 0 is the
/// presented state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledTrajectory {
    labels: Vec<f64>,
}

impl LabeledTrajectory {
    pub fn new(labels: Vec<f64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(invalid("trajectory must contain at least the presented state"));
        }
        if let Some(i) = labels.iter().position(|x| !x.is_finite()) {
            return Err(invalid(format!("label at index {i} is not finite")));
        }
        Ok(Self { labels })
    }

    /// Number of steps `k`; the trajectory holds `k + 1` labels.
    pub fn k(&self) -> u64 {
        (self.labels.len() - 1) as u64
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn presented(&self) -> f64 {
        self.labels[0]
    }

    pub fn into_labels(self) -> Vec<f64> {
        self.labels
    }

    /// Parses one real per line, the presented state's label first. Blank
    /// lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut labels = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let x: f64 = line.parse().map_err(|_| Error::Parse {
                what: "labels file",
                line: i + 1,
                message: format!("not a number: {line:?}"),
            })?;
            if !x.is_finite() {
                return Err(Error::Parse {
                    what: "labels file",
                    line: i + 1,
                    message: format!("label is not finite: {line:?}"),
                });
            }
            labels.push(x);
        }
        if labels.is_empty() {
            return Err(Error::Parse {
                what: "labels file",
                line: 1,
                message: "no labels".into(),
            });
        }
        Self::new(labels)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}

impl TryFrom<Vec<f64>> for LabeledTrajectory {
    type Error = crate::Error;

    fn try_from(labels: Vec<f64>) -> Result<Self> {
        Self::new(labels)
    }
}

/// Result of running the test on one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub k: u64,
    pub count_le: u64,
    pub epsilon: f64,
    pub ell: u64,
    pub p_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tv_slack: Option<f64>,
}

/// Parameters of the closed-form power statement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    /// Stationary tail mass `Pr_π(ω(σ) ≤ ω(σ₀))`.
    pub epsilon: f64,
    pub k: u64,
    /// Relaxation time `1/(1 − λ₂)`.
    pub tau2: f64,
    pub pi_min: f64,
}

impl PowerParams {
    pub fn new(epsilon: f64, k: u64, tau2: f64, pi_min: f64) -> Result<Self> {
        let p = Self {
            epsilon,
            k,
            tau2,
            pi_min,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(invalid(format!("epsilon {} outside [0, 1]", self.epsilon)));
        }
        if !(self.tau2 > 0.0 && self.tau2.is_finite()) {
            return Err(invalid(format!("relaxation time {} must be positive", self.tau2)));
        }
        if !(self.pi_min > 0.0 && self.pi_min <= 1.0) {
            return Err(invalid(format!("pi_min {} outside (0, 1]", self.pi_min)));
        }
        Ok(())
    }
}

/// `#{i ∈ 0..=k : label_i ≤ label_0}`. Index 0 always counts itself.
pub fn count_le(traj: &LabeledTrajectory) -> u64 {
    let first = traj.presented();
    traj.labels().iter().filter(|&&x| x <= first).count() as u64
}

/// `#{i ≠ j : label_i ≤ label_j}`; label `j` is ℓ-small iff the result is `≤ ℓ`.
pub fn ell_small_count(labels: &[f64], j: usize) -> Result<usize> {
    let pivot = *labels
        .get(j)
        .ok_or_else(|| invalid(format!("index {j} out of range for {} labels", labels.len())))?;
    Ok(labels
        .iter()
        .enumerate()
        .filter(|&(i, &x)| i != j && x <= pivot)
        .count())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if (0.0..=1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(invalid(format!("epsilon {epsilon} outside [0, 1]")))
    }
}

/// `min(1, √(2ε))`.
pub fn sqrt_eps_pvalue(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    Ok((2.0 * epsilon).sqrt().min(1.0))
}

/// `min(1, √(2ε) + ε₁)` for a start within total variation `ε₁` of stationarity.
pub fn pvalue_with_tv(epsilon: f64, epsilon1: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if !(epsilon1 >= 0.0 && epsilon1.is_finite()) {
        return Err(invalid(format!("total-variation slack {epsilon1} must be finite and >= 0")));
    }
    Ok(((2.0 * epsilon).sqrt() + epsilon1).min(1.0))
}

pub fn run_sqrt_eps_test(traj: &LabeledTrajectory, tv_slack: Option<f64>) -> Result<OutlierReport> {
    let k = traj.k();
    let count = count_le(traj);
    let epsilon = count as f64 / (k + 1) as f64;
    let p_value = pvalue_with_tv(epsilon, tv_slack.unwrap_or(0.0))?;
    Ok(OutlierReport {
        k,
        count_le: count,
        epsilon,
        ell: count - 1,
        p_value,
        tv_slack,
    })
}

/// `min(1, √((2ℓ+1)/(k+1)))`, the bound on the probability that `X₀` is
/// ℓ-small among `X₀, …, X_k` under a stationary start.
pub fn theorem_bound(ell: u64, k: u64) -> f64 {
    ((2 * ell + 1) as f64 / (k + 1) as f64).sqrt().min(1.0)
}

/// Lower bound on the probability that a presented state with stationary tail
/// mass `ε` shows up as a `2ε`-outlier on a `k`-step trajectory.
pub fn power_lower_bound(p: &PowerParams) -> Result<f64> {
    p.validate()?;
    let k = p.k as f64;
    let eps = p.epsilon;
    let deficit = (1.0 + eps * k / (10.0 * p.tau2))
        * (-(eps * eps) * k / (20.0 * p.tau2)).exp()
        / p.pi_min.sqrt();
    Ok((1.0 - deficit).clamp(0.0, 1.0))
}

/// Gillman's tail bound on `Pr(N_n(A)/n − π(A) > γ)`. Not clamped to 1.
///
/// `chi` is `√(Σ_σ Pr(X₀ = σ)² / π(σ))`, which is `1/√π(σ₀)` for a point start.
pub fn gillman_bound(gamma: f64, n: u64, tau2: f64, chi: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("gamma {gamma} must be positive")));
    }
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    if !(tau2 > 0.0 && tau2.is_finite()) {
        return Err(invalid(format!("relaxation time {tau2} must be positive")));
    }
    if !(chi >= 1.0 && chi.is_finite()) {
        return Err(invalid(format!("chi {chi} must be >= 1")));
    }
    let n = n as f64;
    Ok((1.0 + gamma * n / (10.0 * tau2)) * chi * (-(gamma * gamma) * n / (20.0 * tau2)).exp())
}
