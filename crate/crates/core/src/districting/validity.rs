//! Validity of districtings: contiguity, no holes, population balance,
//! compactness.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::plan::{DistrictStats, Scratch};
use super::{Districting, Geography};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompactnessMode {
    /// `Σ P_D ≤ T`.
    Perimeter,
    /// `Σ 1/C_D ≤ T`.
    L1,
    /// `Σ 1/C_D² ≤ T`.
    L2,
    /// `max 1/C_D ≤ T`.
    Linf,
}

impl CompactnessMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Perimeter => "perimeter",
            Self::L1 => "l1",
            Self::L2 => "l2",
            Self::Linf => "linf",
        }
    }
}

impl fmt::Display for CompactnessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CompactnessMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "perimeter" => Ok(Self::Perimeter),
            "l1" => Ok(Self::L1),
            "l2" => Ok(Self::L2),
            "linf" => Ok(Self::Linf),
            other => Err(invalid(format!("unknown compactness mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityConstraints {
    /// Largest allowed `|pop_D − mean| / mean`.
    pub pop_tolerance: f64,
    pub compactness: CompactnessMode,
    pub compactness_threshold: f64,
}

impl ValidityConstraints {
    pub fn new(pop_tolerance: f64, compactness: CompactnessMode, compactness_threshold: f64) -> Result<Self> {
        let c = Self {
            pop_tolerance,
            compactness,
            compactness_threshold,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pop_tolerance > 0.0) {
            return Err(invalid(format!("population tolerance {} must be positive", self.pop_tolerance)));
        }
        if !(self.compactness_threshold > 0.0) {
            return Err(invalid(format!(
                "compactness threshold {} must be positive",
                self.compactness_threshold
            )));
        }
        Ok(())
    }
}

/// First reason a districting fails validation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InvalidReason {
    Structure { message: String },
    Contiguity { district: usize },
    SimpleConnectivity { district: usize },
    Population { district: usize, deviation: f64, tolerance: f64 },
    Compactness { mode: CompactnessMode, score: f64, threshold: f64 },
}

impl InvalidReason {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Structure { .. } => "structure",
            Self::Contiguity { .. } => "contiguity",
            Self::SimpleConnectivity { .. } => "simple-connectivity",
            Self::Population { .. } => "population",
            Self::Compactness { .. } => "compactness",
        }
    }
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Structure { message } => write!(f, "structure: {message}"),
            Self::Contiguity { district } => write!(f, "contiguity: district {district} is not connected"),
            Self::SimpleConnectivity { district } => write!(f, "simple-connectivity: district {district} has a hole"),
            Self::Population {
                district,
                deviation,
                tolerance,
            } => write!(
                f,
                "population: district {district} deviates {deviation:.6} from the mean (tolerance {tolerance})"
            ),
            Self::Compactness { mode, score, threshold } => {
                write!(f, "compactness: {mode} score {score:.6} exceeds threshold {threshold}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Validity {
    Valid,
    Invalid(InvalidReason),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Self::Valid)
    }

    pub fn reason(&self) -> Option<&InvalidReason> {
        match self {
            Self::Valid => None,
            Self::Invalid(r) => Some(r),
        }
    }
}

/// `4πA / P²`.
pub fn polsby_popper_from(area: f64, perimeter: f64) -> Result<f64> {
    if !(perimeter > 0.0) {
        return Err(invalid(format!("perimeter {perimeter} must be positive")));
    }
    Ok(4.0 * PI * area / (perimeter * perimeter))
}

pub fn polsby_popper(plan: &Districting, district: usize) -> Result<f64> {
    let s = plan
        .stats()
        .get(district)
        .ok_or_else(|| invalid(format!("no district {district}")))?;
    polsby_popper_from(s.area, s.perimeter)
}

/// Compactness score compared against the threshold; shapes are `(area, perimeter)`.
pub fn compactness_score(mode: CompactnessMode, shapes: impl Iterator<Item = (f64, f64)>) -> f64 {
    let inverse = |(a, p): (f64, f64)| if a > 0.0 { p * p / (4.0 * PI * a) } else { f64::INFINITY };
    match mode {
        CompactnessMode::Perimeter => shapes.map(|(_, p)| p).sum(),
        CompactnessMode::L1 => shapes.map(inverse).sum(),
        CompactnessMode::L2 => shapes.map(|s| inverse(s).powi(2)).sum(),
        CompactnessMode::Linf => shapes.map(inverse).fold(0.0, f64::max),
    }
}

pub(crate) fn population_deviation(pop: u64, mean: f64) -> f64 {
    (pop as f64 - mean).abs() / mean
}

/// True iff the district's precincts form one connected component.
pub fn is_contiguous(geo: &Geography, plan: &Districting, district: usize) -> bool {
    let members: Vec<usize> = plan.members(district).collect();
    let Some(&start) = members.first() else {
        return false;
    };
    let mut seen = vec![false; geo.len()];
    let mut stack = vec![start];
    seen[start] = true;
    let mut reached = 1;
    while let Some(v) = stack.pop() {
        for nb in geo.neighbors(v) {
            let u = nb.precinct;
            if !seen[u] && plan.district_of(u) == district {
                seen[u] = true;
                reached += 1;
                stack.push(u);
            }
        }
    }
    reached == members.len()
}

/// True iff the precincts outside the district, together with the outer
/// face, form one connected region, so the district encloses no hole.
pub fn is_simply_connected(geo: &Geography, plan: &Districting, district: usize) -> bool {
    let n = geo.len();
    let outside = (0..n).filter(|&i| plan.district_of(i) != district).count();
    if outside == 0 {
        return true;
    }
    // Search from the outer face.
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = (0..n)
        .filter(|&i| plan.district_of(i) != district && geo.is_exterior(i))
        .collect();
    for &i in &stack {
        seen[i] = true;
    }
    let mut reached = stack.len();
    while let Some(v) = stack.pop() {
        for nb in geo.neighbors(v) {
            let u = nb.precinct;
            if !seen[u] && plan.district_of(u) != district {
                seen[u] = true;
                reached += 1;
                stack.push(u);
            }
        }
    }
    reached == outside
}

/// Full validation. Checks run in the order contiguity, simple
/// connectivity, population, compactness; the first failure is reported.
pub fn is_valid(geo: &Geography, plan: &Districting, constraints: &ValidityConstraints) -> Validity {
    if plan.assignment().len() != geo.len() {
        return Validity::Invalid(InvalidReason::Structure {
            message: "assignment does not match geography".into(),
        });
    }
    let d = plan.n_districts();
    if let Some(district) = plan.stats().iter().position(|s| s.precincts == 0) {
        return Validity::Invalid(InvalidReason::Structure {
            message: format!("district {district} is empty"),
        });
    }
    for district in 0..d {
        if !is_contiguous(geo, plan, district) {
            return Validity::Invalid(InvalidReason::Contiguity { district });
        }
    }
    for district in 0..d {
        if !is_simply_connected(geo, plan, district) {
            return Validity::Invalid(InvalidReason::SimpleConnectivity { district });
        }
    }
    let mean = geo.total_population() as f64 / d as f64;
    for (district, s) in plan.stats().iter().enumerate() {
        let deviation = population_deviation(s.population, mean);
        if deviation > constraints.pop_tolerance {
            return Validity::Invalid(InvalidReason::Population {
                district,
                deviation,
                tolerance: constraints.pop_tolerance,
            });
        }
    }
    let score = compactness_score(constraints.compactness, plan.stats().iter().map(shape));
    if score > constraints.compactness_threshold {
        return Validity::Invalid(InvalidReason::Compactness {
            mode: constraints.compactness,
            score,
            threshold: constraints.compactness_threshold,
        });
    }
    Validity::Valid
}

pub(crate) fn shape(s: &DistrictStats) -> (f64, f64) {
    (s.area, s.perimeter)
}

/// Whether the neighbors of `removed` that satisfy `member` (plus the outer
/// face, when `with_outer` and `removed` touches it) stay in one component of
/// `{v : member(v)} \ {removed}` (plus the outer face). Stops as soon as all
/// of them are reached.
pub(crate) fn neighbors_stay_connected(
    geo: &Geography,
    scratch: &mut Scratch,
    removed: usize,
    member: impl Fn(usize) -> bool,
    with_outer: bool,
) -> bool {
    let n = geo.len();
    // Node n stands for the outer face.
    let mark = scratch.begin(n + 1);
    let outer = n;
    let mut targets: Vec<usize> = geo
        .neighbors(removed)
        .iter()
        .map(|nb| nb.precinct)
        .filter(|&u| member(u))
        .collect();
    if with_outer && geo.is_exterior(removed) {
        targets.push(outer);
    }
    if targets.len() <= 1 {
        return true;
    }
    // Mark the removed precinct so the search never passes through it.
    scratch.stamp[removed] = mark;
    let mut remaining = targets.len() - 1;
    let start = targets[0];
    let is_target = |u: usize| targets[1..].contains(&u);
    scratch.stamp[start] = mark;
    scratch.queue.push(start);
    let mut head = 0;
    while head < scratch.queue.len() {
        let v = scratch.queue[head];
        head += 1;
        let mut visit = |u: usize, scratch: &mut Scratch| -> bool {
            if scratch.stamp[u] != mark {
                scratch.stamp[u] = mark;
                scratch.queue.push(u);
                if is_target(u) {
                    remaining -= 1;
                    return remaining == 0;
                }
            }
            false
        };
        if v == outer {
            for u in 0..n {
                if geo.is_exterior(u) && member(u) && visit(u, scratch) {
                    return true;
                }
            }
            continue;
        }
        for nb in geo.neighbors(v) {
            let u = nb.precinct;
            if member(u) && visit(u, scratch) {
                return true;
            }
        }
        if with_outer && geo.is_exterior(v) && visit(outer, scratch) {
            return true;
        }
    }
    false
}
