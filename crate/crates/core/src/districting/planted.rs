//! Deterministic packed starting districtings for grid geographies.
//!
//! The construction finds the map edge (left, right, top or bottom cell
//! line) with the highest Democratic vote share, then sweeps the grid in
//! lines parallel to that edge, starting from it, alternating direction on
//! each line. Precincts are dealt out in sweep order: district `i` receives a
//! precinct when the population before it plus half its own population falls
//! in `[i·P/d, (i+1)·P/d)`, with `P` the total population. The first
//! `⌈d/3⌉` districts thus absorb the most Democratic territory, packing those
//! voters together. Every district is a run of consecutive cells in a
//! boustrophedon sweep, so it is contiguous and leaves no hole.

use super::{Districting, Geography};
use crate::error::{invalid, Result};

/// Number of districts that hold the densest opposing (Democratic) territory.
pub fn packed_district_count(d: usize) -> usize {
    d.div_ceil(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edge {
    Left,
    Right,
    Top,
    Bottom,
}

/// Cells of a `w × h` grid in sweep order starting from `edge`.
fn sweep(w: usize, h: usize, edge: Edge) -> Vec<usize> {
    let mut order = Vec::with_capacity(w * h);
    match edge {
        Edge::Left | Edge::Right => {
            for line in 0..w {
                let x = if edge == Edge::Left { line } else { w - 1 - line };
                for step in 0..h {
                    let y = if line % 2 == 0 { step } else { h - 1 - step };
                    order.push(y * w + x);
                }
            }
        }
        Edge::Top | Edge::Bottom => {
            for line in 0..h {
                let y = if edge == Edge::Top { line } else { h - 1 - line };
                for step in 0..w {
                    let x = if line % 2 == 0 { step } else { w - 1 - step };
                    order.push(y * w + x);
                }
            }
        }
    }
    order
}

/// The packed districting of a grid geography into `d` districts.
pub fn planted_districting(geo: &Geography, d: usize) -> Result<Districting> {
    let layout = geo
        .layout()
        .ok_or_else(|| invalid("planted districtings need a grid geography"))?;
    let (w, h) = (layout.width, layout.height);
    if d == 0 || d > w * h {
        return Err(invalid(format!("cannot split {} precincts into {d} districts", w * h)));
    }
    let share = |cells: &mut dyn Iterator<Item = usize>| {
        let (dem, total) = cells.fold((0u64, 0u64), |(a, b), i| {
            let p = geo.precinct(i);
            (a + p.votes_dem, b + p.votes_total)
        });
        if total == 0 {
            0.0
        } else {
            dem as f64 / total as f64
        }
    };
    let candidates = [
        (Edge::Left, share(&mut (0..h).map(|y| y * w))),
        (Edge::Right, share(&mut (0..h).map(|y| y * w + w - 1))),
        (Edge::Top, share(&mut (0..w))),
        (Edge::Bottom, share(&mut (0..w).map(|x| (h - 1) * w + x))),
    ];
    // First maximum wins ties, keeping the choice deterministic.
    let edge = candidates
        .iter()
        .fold(candidates[0], |best, &c| if c.1 > best.1 { c } else { best })
        .0;

    let total = geo.total_population() as f64;
    let mut assignment = vec![0u32; w * h];
    let mut before = 0.0;
    for cell in sweep(w, h, edge) {
        let pop = geo.precinct(cell).population as f64;
        let position = if total > 0.0 { (before + pop / 2.0) / total } else { 0.0 };
        assignment[cell] = ((position * d as f64) as usize).min(d - 1) as u32;
        before += pop;
    }
    Districting::new(geo, assignment, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::districting::{grid_geography, is_valid, vote_shares, CompactnessMode, ValidityConstraints, VoteModel};

    #[test]
    fn planted_is_valid_and_packed() {
        let g = grid_geography(12, 12, Default::default(), Default::default(), 1).unwrap();
        let plan = planted_districting(&g, 4).unwrap();
        for s in plan.stats() {
            assert_eq!(s.precincts, 36);
        }
        let c = ValidityConstraints::new(0.01, CompactnessMode::Perimeter, 1e6).unwrap();
        assert!(is_valid(&g, &plan, &c).is_valid());
        let shares = vote_shares(&plan).unwrap();
        // The gradient rises to the east, so the sweep starts there and
        // the first districts are the most Democratic.
        assert!(shares.windows(2).all(|w| w[0] > w[1]), "{shares:?}");
        assert_eq!(packed_district_count(4), 2);
        assert_eq!(packed_district_count(3), 1);
    }

    #[test]
    fn uneven_counts_still_valid() {
        let vm = VoteModel::Gradient {
            base: 0.5,
            slope: -0.5,
            noise: 0.05,
            turnout: 0.5,
        };
        let g = grid_geography(7, 5, Default::default(), vm, 3).unwrap();
        let plan = planted_districting(&g, 3).unwrap();
        let c = ValidityConstraints::new(0.1, CompactnessMode::Perimeter, 1e6).unwrap();
        assert!(is_valid(&g, &plan, &c).is_valid());
        assert_eq!(plan.assignment()[0], 0, "west edge is the Democratic one");
    }

    #[test]
    fn needs_a_grid() {
        let g = grid_geography(3, 3, Default::default(), Default::default(), 1).unwrap();
        let mut file = g.to_file();
        file.grid = None;
        let g = Geography::from_file(file).unwrap();
        assert!(planted_districting(&g, 2).is_err());
    }
}
