//! Districtings with cached per-district aggregates and boundary pairs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Geography;
use crate::error::{invalid, Error, Result};

const NO_SLOT: u32 = u32::MAX;

/// Aggregates of one district.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct DistrictStats {
    pub precincts: usize,
    pub population: u64,
    pub area: f64,
    pub perimeter: f64,
    pub votes_dem: u64,
    pub votes_total: u64,
}

/// The set `S` of pairs `(ρ, D)` where `D` is not `ρ`'s district but contains
/// a neighbor of `ρ`, stored for O(1) uniform sampling and update.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySet {
    n_districts: usize,
    pairs: Vec<(u32, u32)>,
    /// `slot[ρ·d + D]` is the position of `(ρ, D)` in `pairs`.
    slot: Vec<u32>,
    /// `neighbor_count[ρ·d + D]`: neighbors of `ρ` inside `D`.
    neighbor_count: Vec<u32>,
    capacity: usize,
}

impl BoundarySet {
    fn build(geo: &Geography, assignment: &[u32], n_districts: usize) -> Self {
        let n = geo.len();
        let mut set = Self {
            n_districts,
            pairs: Vec::new(),
            slot: vec![NO_SLOT; n * n_districts],
            neighbor_count: vec![0; n * n_districts],
            capacity: geo.degree_sum(),
        };
        for rho in 0..n {
            for nb in geo.neighbors(rho) {
                set.neighbor_count[rho * n_districts + assignment[nb.precinct] as usize] += 1;
            }
            for d in 0..n_districts {
                set.refresh(rho, d, assignment[rho] as usize);
            }
        }
        set
    }

    /// Inserts or removes `(ρ, D)` so membership matches the neighbor counts.
    fn refresh(&mut self, rho: usize, district: usize, own: usize) {
        let key = rho * self.n_districts + district;
        let should = district != own && self.neighbor_count[key] > 0;
        let slot = self.slot[key];
        if should && slot == NO_SLOT {
            self.slot[key] = self.pairs.len() as u32;
            self.pairs.push((rho as u32, district as u32));
        } else if !should && slot != NO_SLOT {
            let last = self.pairs.pop().expect("slot implies nonempty");
            if (slot as usize) < self.pairs.len() {
                self.pairs[slot as usize] = last;
                self.slot[last.0 as usize * self.n_districts + last.1 as usize] = slot;
            }
            self.slot[key] = NO_SLOT;
        }
    }

    /// `N_S`.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `N_max`, the degree-sum bound.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> (usize, usize) {
        let (r, d) = self.pairs[i];
        (r as usize, d as usize)
    }

    pub fn contains(&self, rho: usize, district: usize) -> bool {
        self.slot[rho * self.n_districts + district] != NO_SLOT
    }

    /// Pairs in a canonical (sorted) order.
    pub fn sorted_pairs(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = self.pairs.iter().map(|&(r, d)| (r as usize, d as usize)).collect();
        v.sort_unstable();
        v
    }

    /// Neighbors of `ρ` inside `district`.
    pub fn neighbors_in(&self, rho: usize, district: usize) -> u32 {
        self.neighbor_count[rho * self.n_districts + district]
    }
}

/// Recomputes `S` from scratch.
pub fn boundary_pairs(geo: &Geography, plan: &Districting) -> BoundarySet {
    BoundarySet::build(geo, &plan.assignment, plan.n_districts())
}

/// Reusable buffers for graph searches.
#[derive(Debug, Clone, Default)]
pub(crate) struct Scratch {
    pub stamp: Vec<u32>,
    pub generation: u32,
    pub queue: Vec<usize>,
}

impl Scratch {
    /// Starts a new search over `n` nodes; returns the mark for this search.
    pub fn begin(&mut self, n: usize) -> u32 {
        if self.stamp.len() != n {
            self.stamp = vec![0; n];
            self.generation = 0;
        }
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        self.queue.clear();
        self.generation
    }
}

/// Assignment of every precinct to one of `d` districts, with cached
/// aggregates kept in step with every move.
#[derive(Debug, Clone)]
pub struct Districting {
    assignment: Vec<u32>,
    stats: Vec<DistrictStats>,
    boundary: BoundarySet,
    pub(crate) scratch: Scratch,
}

impl PartialEq for Districting {
    fn eq(&self, other: &Self) -> bool {
        self.assignment == other.assignment && self.stats.len() == other.stats.len()
    }
}

impl Eq for Districting {}

/// On-disk districting: precinct id → district index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistrictingFile {
    pub format: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub districts: Option<usize>,
    pub assignment: BTreeMap<String, u32>,
}

fn compute_stats(geo: &Geography, assignment: &[u32], n_districts: usize) -> Vec<DistrictStats> {
    let mut stats = vec![DistrictStats::default(); n_districts];
    for (i, &d) in assignment.iter().enumerate() {
        let p = geo.precinct(i);
        let s = &mut stats[d as usize];
        s.precincts += 1;
        s.population += p.population;
        s.area += p.area;
        s.perimeter += p.exterior_boundary_length;
        s.votes_dem += p.votes_dem;
        s.votes_total += p.votes_total;
    }
    for e in geo.adjacency() {
        let (da, db) = (assignment[e.a], assignment[e.b]);
        if da != db {
            stats[da as usize].perimeter += e.shared_length;
            stats[db as usize].perimeter += e.shared_length;
        }
    }
    stats
}

impl Districting {
    /// Every precinct must be assigned a district in `0..n_districts` and
    /// every district must be nonempty.
    pub fn new(geo: &Geography, assignment: Vec<u32>, n_districts: usize) -> Result<Self> {
        if assignment.len() != geo.len() {
            return Err(invalid(format!(
                "assignment covers {} precincts, geography has {}",
                assignment.len(),
                geo.len()
            )));
        }
        if n_districts == 0 {
            return Err(invalid("need at least one district"));
        }
        if let Some(i) = assignment.iter().position(|&d| d as usize >= n_districts) {
            return Err(invalid(format!(
                "precinct {:?} assigned to district {} of {n_districts}",
                geo.precinct(i).id,
                assignment[i]
            )));
        }
        let stats = compute_stats(geo, &assignment, n_districts);
        if let Some(d) = stats.iter().position(|s| s.precincts == 0) {
            return Err(invalid(format!("district {d} is empty")));
        }
        let boundary = BoundarySet::build(geo, &assignment, n_districts);
        Ok(Self {
            assignment,
            stats,
            boundary,
            scratch: Scratch::default(),
        })
    }

    pub fn from_file(geo: &Geography, file: &DistrictingFile) -> Result<Self> {
        if file.format != 1 {
            return Err(invalid(format!("unsupported districting format {}", file.format)));
        }
        let mut assignment = vec![u32::MAX; geo.len()];
        for (id, &d) in &file.assignment {
            let i = geo
                .index_of(id)
                .ok_or_else(|| invalid(format!("districting names unknown precinct {id:?}")))?;
            assignment[i] = d;
        }
        if let Some(i) = assignment.iter().position(|&d| d == u32::MAX) {
            return Err(invalid(format!("precinct {:?} has no district", geo.precinct(i).id)));
        }
        let d = match file.districts {
            Some(d) => d,
            None => assignment.iter().max().map_or(0, |&m| m as usize + 1),
        };
        Self::new(geo, assignment, d)
    }

    pub fn to_file(&self, geo: &Geography) -> DistrictingFile {
        DistrictingFile {
            format: 1,
            districts: Some(self.n_districts()),
            assignment: self
                .assignment
                .iter()
                .enumerate()
                .map(|(i, &d)| (geo.precinct(i).id.clone(), d))
                .collect(),
        }
    }

    pub fn load(geo: &Geography, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: DistrictingFile = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_file(geo, &file)
    }

    pub fn n_districts(&self) -> usize {
        self.stats.len()
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    #[inline]
    pub fn district_of(&self, precinct: usize) -> usize {
        self.assignment[precinct] as usize
    }

    pub fn stats(&self) -> &[DistrictStats] {
        &self.stats
    }

    pub fn district(&self, d: usize) -> &DistrictStats {
        &self.stats[d]
    }

    pub fn boundary(&self) -> &BoundarySet {
        &self.boundary
    }

    /// Area and perimeter of `from` and `to` if `rho` moved from `from` to `to`.
    pub(crate) fn shape_after_move(&self, geo: &Geography, rho: usize, to: usize) -> [(f64, f64); 2] {
        let from = self.district_of(rho);
        let p = geo.precinct(rho);
        let (mut per_from, mut per_to) = (self.stats[from].perimeter, self.stats[to].perimeter);
        per_from -= p.exterior_boundary_length;
        per_to += p.exterior_boundary_length;
        for nb in geo.neighbors(rho) {
            let dn = self.district_of(nb.precinct);
            if dn == from {
                per_from += nb.shared_length;
            } else {
                per_from -= nb.shared_length;
            }
            if dn == to {
                per_to -= nb.shared_length;
            } else {
                per_to += nb.shared_length;
            }
        }
        [
            (self.stats[from].area - p.area, per_from),
            (self.stats[to].area + p.area, per_to),
        ]
    }

    /// Moves `rho` into district `to`, updating every cache. Does not check
    /// validity of the result.
    pub fn move_precinct(&mut self, geo: &Geography, rho: usize, to: usize) {
        let from = self.district_of(rho);
        if from == to {
            return;
        }
        let p = geo.precinct(rho);
        // Perimeters: every edge at rho changes side for from/to and for the
        // neighbor's own district.
        self.stats[from].perimeter -= p.exterior_boundary_length;
        self.stats[to].perimeter += p.exterior_boundary_length;
        for nb in geo.neighbors(rho) {
            let dn = self.district_of(nb.precinct);
            let s = nb.shared_length;
            // Before: edge counted for `from` and `dn` iff dn != from.
            if dn != from {
                self.stats[from].perimeter -= s;
                self.stats[dn].perimeter -= s;
            }
            // After: counted for `to` and `dn` iff dn != to.
            if dn != to {
                self.stats[to].perimeter += s;
                self.stats[dn].perimeter += s;
            }
        }
        for (d, sign) in [(from, -1i64), (to, 1)] {
            let s = &mut self.stats[d];
            if sign < 0 {
                s.precincts -= 1;
                s.population -= p.population;
                s.area -= p.area;
                s.votes_dem -= p.votes_dem;
                s.votes_total -= p.votes_total;
            } else {
                s.precincts += 1;
                s.population += p.population;
                s.area += p.area;
                s.votes_dem += p.votes_dem;
                s.votes_total += p.votes_total;
            }
        }
        self.assignment[rho] = to as u32;

        let d = self.n_districts();
        for nb in geo.neighbors(rho) {
            let n = nb.precinct;
            self.boundary.neighbor_count[n * d + from] -= 1;
            self.boundary.neighbor_count[n * d + to] += 1;
            let own = self.district_of(n);
            self.boundary.refresh(n, from, own);
            self.boundary.refresh(n, to, own);
        }
        self.boundary.refresh(rho, from, to);
        self.boundary.refresh(rho, to, to);
    }

    /// Compares every cache against a from-scratch recomputation. Integer
    /// aggregates and the boundary set must match exactly, lengths within
    /// `length_tol`.
    pub fn audit_caches(&self, geo: &Geography, length_tol: f64) -> std::result::Result<(), String> {
        let fresh = compute_stats(geo, &self.assignment, self.n_districts());
        for (d, (a, b)) in self.stats.iter().zip(&fresh).enumerate() {
            if a.precincts != b.precincts
                || a.population != b.population
                || a.votes_dem != b.votes_dem
                || a.votes_total != b.votes_total
            {
                return Err(format!("district {d}: cached counts {a:?} != recomputed {b:?}"));
            }
            if (a.area - b.area).abs() > length_tol || (a.perimeter - b.perimeter).abs() > length_tol {
                return Err(format!("district {d}: cached shape {a:?} != recomputed {b:?}"));
            }
        }
        let fresh = boundary_pairs(geo, self);
        if fresh.neighbor_count != self.boundary.neighbor_count {
            return Err("boundary neighbor counts diverged".into());
        }
        if fresh.sorted_pairs() != self.boundary.sorted_pairs() {
            return Err("boundary pairs diverged".into());
        }
        Ok(())
    }

    /// Precincts of `district`, in index order.
    pub fn members(&self, district: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |&(_, &d)| d as usize == district)
            .map(|(i, _)| i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::districting::grid_geography;

    fn grid(w: usize, h: usize) -> Geography {
        grid_geography(w, h, Default::default(), Default::default(), 11).unwrap()
    }

    fn columns(w: usize, h: usize, d: usize) -> Vec<u32> {
        (0..w * h).map(|i| ((i % w) * d / w) as u32).collect()
    }

    #[test]
    fn construction_errors() {
        let g = grid(2, 2);
        assert!(Districting::new(&g, vec![0, 0, 0], 1).is_err());
        assert!(Districting::new(&g, vec![0, 0, 0, 2], 2).is_err());
        assert!(Districting::new(&g, vec![0, 0, 0, 0], 2).is_err());
    }

    #[test]
    fn column_perimeters() {
        let g = grid(4, 4);
        let plan = Districting::new(&g, columns(4, 4, 4), 4).unwrap();
        for s in plan.stats() {
            assert_eq!(s.precincts, 4);
            assert_eq!(s.area, 4.0);
            assert_eq!(s.perimeter, 10.0);
        }
    }

    #[test]
    fn boundary_examples() {
        let g = grid(2, 2);
        // Left column vs right column: each of 4 cells has one neighbor across.
        let plan = Districting::new(&g, vec![0, 1, 0, 1], 2).unwrap();
        assert_eq!(plan.boundary().len(), 4);
        let plan = Districting::new(&g, vec![0; 4], 1).unwrap();
        assert_eq!(plan.boundary().len(), 0);
        assert_eq!(plan.boundary().capacity(), 8);
    }

    #[test]
    fn moves_keep_caches_coherent() {
        let g = grid(6, 5);
        let mut plan = Districting::new(&g, columns(6, 5, 3), 3).unwrap();
        let moves = [(2, 0), (8, 0), (3, 2), (14, 1), (2, 1), (29, 0), (0, 2)];
        for (rho, to) in moves {
            plan.move_precinct(&g, rho, to);
            plan.audit_caches(&g, 1e-9).unwrap();
        }
    }

    #[test]
    fn shape_prediction_matches_move() {
        let g = grid(5, 5);
        let mut plan = Districting::new(&g, columns(5, 5, 2), 2).unwrap();
        let predicted = plan.shape_after_move(&g, 13, 0);
        let from = plan.district_of(13);
        assert_ne!(from, 0);
        plan.move_precinct(&g, 13, 0);
        assert_eq!(predicted[0], (plan.district(from).area, plan.district(from).perimeter));
        assert_eq!(predicted[1], (plan.district(0).area, plan.district(0).perimeter));
    }

    #[test]
    fn file_roundtrip() {
        let g = grid(3, 3);
        let plan = Districting::new(&g, columns(3, 3, 3), 3).unwrap();
        let file = plan.to_file(&g);
        let text = serde_json::to_string(&file).unwrap();
        let back = Districting::from_file(&g, &serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, plan);
    }
}
