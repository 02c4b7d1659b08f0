//! Label functions on districtings, computed from district-level Democratic
//! vote shares `δ_i = dem votes / total votes`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Districting;
use crate::error::{invalid, Result};

/// `δ_i` for every district.
pub fn vote_shares(plan: &Districting) -> Result<Vec<f64>> {
    plan.stats()
        .iter()
        .enumerate()
        .map(|(d, s)| {
            if s.votes_total == 0 {
                Err(invalid(format!("district {d} has no votes")))
            } else {
                Ok(s.votes_dem as f64 / s.votes_total as f64)
            }
        })
        .collect()
}

fn check_shares(shares: &[f64]) -> Result<()> {
    if shares.len() < 2 {
        return Err(invalid("label functions need at least two districts"));
    }
    Ok(())
}

/// Negative population variance of the shares.
pub fn omega_var_of(shares: &[f64]) -> Result<f64> {
    check_shares(shares)?;
    let d = shares.len() as f64;
    let mean = shares.iter().sum::<f64>() / d;
    Ok(-shares.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / d)
}

/// Median minus mean of the shares; an even count uses the midpoint of the
/// two central values.
pub fn omega_mm_of(shares: &[f64]) -> Result<f64> {
    check_shares(shares)?;
    let mut sorted = shares.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    Ok(median - shares.iter().sum::<f64>() / m as f64)
}

pub fn omega_var(plan: &Districting) -> Result<f64> {
    omega_var_of(&vote_shares(plan)?)
}

pub fn omega_mm(plan: &Districting) -> Result<f64> {
    omega_mm_of(&vote_shares(plan)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelFunction {
    Var,
    Mm,
}

impl LabelFunction {
    pub const ALL: [LabelFunction; 2] = [LabelFunction::Var, LabelFunction::Mm];

    pub fn eval(self, plan: &Districting) -> Result<f64> {
        match self {
            Self::Var => omega_var(plan),
            Self::Mm => omega_mm(plan),
        }
    }

    pub fn eval_shares(self, shares: &[f64]) -> Result<f64> {
        match self {
            Self::Var => omega_var_of(shares),
            Self::Mm => omega_mm_of(shares),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Var => "var",
            Self::Mm => "mm",
        }
    }
}

impl fmt::Display for LabelFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LabelFunction {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "var" => Ok(Self::Var),
            "mm" => Ok(Self::Mm),
            other => Err(invalid(format!("unknown label function {other:?} (expected var or mm)"))),
        }
    }
}
