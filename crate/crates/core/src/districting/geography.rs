//! Precinct geographies: measures, votes, and the shared-border graph.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, GeographyError, Result};
use crate::rng;

/// Tolerance for `exterior + Σ shared = perimeter`.
pub const PERIMETER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precinct {
    pub id: String,
    /// Square kilometres.
    pub area: f64,
    /// Boundary length shared with the outside of the map, in kilometres.
    pub exterior_boundary_length: f64,
    pub population: u64,
    pub votes_dem: u64,
    pub votes_rep: u64,
    pub votes_total: u64,
}

/// One undirected adjacency; `a < b` are precinct indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adjacency {
    pub a: usize,
    pub b: usize,
    pub shared_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub precinct: usize,
    pub shared_length: f64,
}

/// Row-major `width × height` cell layout, present for generated grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridLayout {
    pub width: usize,
    pub height: usize,
}

impl GridLayout {
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }
}

/// An immutable precinct map. Precincts meeting only at a point are not
/// adjacent; every adjacency has a strictly positive shared border.
#[derive(Debug, Clone, PartialEq)]
pub struct Geography {
    precincts: Vec<Precinct>,
    adjacency: Vec<Adjacency>,
    neighbors: Vec<Vec<Neighbor>>,
    index: HashMap<String, usize>,
    layout: Option<GridLayout>,
}

// On-disk representation. Adjacency is listed in both directions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeographyFile {
    pub format: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridLayout>,
    pub precincts: Vec<PrecinctRecord>,
    pub adjacency: Vec<AdjacencyRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrecinctRecord {
    #[serde(flatten)]
    pub precinct: Precinct,
    /// Total perimeter; when present it must equal exterior plus shared lengths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perimeter: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdjacencyRecord {
    pub a: String,
    pub b: String,
    pub shared_length: f64,
}

fn measure_ok(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

impl Geography {
    /// Validates a parsed file and builds the geography.
    pub fn from_file(file: GeographyFile) -> std::result::Result<Self, GeographyError> {
        if file.format != 1 {
            return Err(GeographyError::Format(file.format));
        }
        if file.precincts.is_empty() {
            return Err(GeographyError::Empty);
        }
        let mut index = HashMap::with_capacity(file.precincts.len());
        for (i, rec) in file.precincts.iter().enumerate() {
            let p = &rec.precinct;
            if index.insert(p.id.clone(), i).is_some() {
                return Err(GeographyError::DuplicateId(p.id.clone()));
            }
            for (field, value) in [("area", p.area), ("exterior_boundary_length", p.exterior_boundary_length)] {
                if !measure_ok(value) {
                    return Err(GeographyError::BadMeasure { id: p.id.clone(), field });
                }
            }
            if let Some(per) = rec.perimeter {
                if !measure_ok(per) {
                    return Err(GeographyError::BadMeasure {
                        id: p.id.clone(),
                        field: "perimeter",
                    });
                }
            }
            if p.votes_dem.checked_add(p.votes_rep).is_none_or(|s| s > p.votes_total) {
                return Err(GeographyError::Votes(p.id.clone()));
            }
        }

        let mut directed: HashMap<(usize, usize), f64> = HashMap::with_capacity(file.adjacency.len());
        for rec in &file.adjacency {
            let a = *index.get(&rec.a).ok_or_else(|| GeographyError::UnknownId(rec.a.clone()))?;
            let b = *index.get(&rec.b).ok_or_else(|| GeographyError::UnknownId(rec.b.clone()))?;
            if a == b {
                return Err(GeographyError::SelfAdjacency(rec.a.clone()));
            }
            if !(rec.shared_length > 0.0 && rec.shared_length.is_finite()) {
                return Err(GeographyError::NonpositiveLength {
                    a: rec.a.clone(),
                    b: rec.b.clone(),
                    length: rec.shared_length,
                });
            }
            if directed.insert((a, b), rec.shared_length).is_some() {
                return Err(GeographyError::DuplicateAdjacency {
                    a: rec.a.clone(),
                    b: rec.b.clone(),
                });
            }
        }
        let id = |i: usize| file.precincts[i].precinct.id.clone();
        let mut adjacency = Vec::with_capacity(directed.len() / 2);
        // Walk the records in file order so errors and edge order are deterministic.
        for rec in &file.adjacency {
            let (a, b) = (index[&rec.a], index[&rec.b]);
            match directed.get(&(b, a)) {
                None => return Err(GeographyError::Asymmetric { a: id(a), b: id(b) }),
                Some(&back) if back != rec.shared_length => {
                    return Err(GeographyError::LengthMismatch {
                        a: id(a),
                        b: id(b),
                        forward: rec.shared_length,
                        backward: back,
                    })
                }
                Some(_) if a < b => adjacency.push(Adjacency {
                    a,
                    b,
                    shared_length: rec.shared_length,
                }),
                Some(_) => {}
            }
        }

        let precincts: Vec<Precinct> = file.precincts.iter().map(|r| r.precinct.clone()).collect();
        let geo = Self::assemble(precincts, adjacency, index, file.grid);
        for (i, rec) in file.precincts.iter().enumerate() {
            if let Some(declared) = rec.perimeter {
                let computed = geo.precinct_perimeter(i);
                if (computed - declared).abs() > PERIMETER_TOL {
                    return Err(GeographyError::PerimeterMismatch {
                        id: id(i),
                        declared,
                        computed,
                    });
                }
            }
        }
        if let Some(layout) = file.grid {
            if layout.width * layout.height != geo.len() {
                return Err(GeographyError::BadMeasure {
                    id: "grid".into(),
                    field: "width*height",
                });
            }
        }
        Ok(geo)
    }

    fn assemble(
        precincts: Vec<Precinct>,
        adjacency: Vec<Adjacency>,
        index: HashMap<String, usize>,
        layout: Option<GridLayout>,
    ) -> Self {
        let mut neighbors = vec![Vec::new(); precincts.len()];
        for e in &adjacency {
            neighbors[e.a].push(Neighbor {
                precinct: e.b,
                shared_length: e.shared_length,
            });
            neighbors[e.b].push(Neighbor {
                precinct: e.a,
                shared_length: e.shared_length,
            });
        }
        Self {
            precincts,
            adjacency,
            neighbors,
            index,
            layout,
        }
    }

    pub fn to_file(&self) -> GeographyFile {
        let precincts = self
            .precincts
            .iter()
            .enumerate()
            .map(|(i, p)| PrecinctRecord {
                precinct: p.clone(),
                perimeter: Some(self.precinct_perimeter(i)),
            })
            .collect();
        let mut adjacency = Vec::with_capacity(2 * self.adjacency.len());
        for e in &self.adjacency {
            for (a, b) in [(e.a, e.b), (e.b, e.a)] {
                adjacency.push(AdjacencyRecord {
                    a: self.precincts[a].id.clone(),
                    b: self.precincts[b].id.clone(),
                    shared_length: e.shared_length,
                });
            }
        }
        GeographyFile {
            format: 1,
            grid: self.layout,
            precincts,
            adjacency,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: GeographyFile = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_file(file)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.to_file()).expect("geography serializes");
        std::fs::write(path, text + "\n").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.precincts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.precincts.is_empty()
    }

    pub fn precincts(&self) -> &[Precinct] {
        &self.precincts
    }

    pub fn precinct(&self, i: usize) -> &Precinct {
        &self.precincts[i]
    }

    /// Undirected adjacencies, each listed once.
    pub fn adjacency(&self) -> &[Adjacency] {
        &self.adjacency
    }

    pub fn neighbors(&self, i: usize) -> &[Neighbor] {
        &self.neighbors[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn layout(&self) -> Option<GridLayout> {
        self.layout
    }

    /// Whether the precinct touches the outside of the map.
    pub fn is_exterior(&self, i: usize) -> bool {
        self.precincts[i].exterior_boundary_length > 0.0
    }

    pub fn precinct_perimeter(&self, i: usize) -> f64 {
        self.precincts[i].exterior_boundary_length + self.neighbors[i].iter().map(|n| n.shared_length).sum::<f64>()
    }

    pub fn total_population(&self) -> u64 {
        self.precincts.iter().map(|p| p.population).sum()
    }

    /// Degree-sum bound on the number of (precinct, neighboring district)
    /// pairs any districting can have.
    pub fn degree_sum(&self) -> usize {
        2 * self.adjacency.len()
    }
}

/// How populations are assigned to grid cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PopulationModel {
    Uniform { per_cell: u64 },
}

impl Default for PopulationModel {
    fn default() -> Self {
        Self::Uniform { per_cell: 1000 }
    }
}

/// Democratic share of cell `(x, y)` is
/// `clamp(base + slope·(x/(w−1) − ½) + noise·U(−1, 1), 0.02, 0.98)`;
/// `turnout` of the population votes, split between the two parties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VoteModel {
    Gradient {
        base: f64,
        slope: f64,
        noise: f64,
        turnout: f64,
    },
}

impl Default for VoteModel {
    fn default() -> Self {
        Self::Gradient {
            base: 0.5,
            slope: 0.6,
            noise: 0.1,
            turnout: 0.6,
        }
    }
}

/// `w × h` unit-square cells with rook adjacency (shared length 1). Cell
/// `(x, y)` has id `"x{x}y{y}"` and index `y·w + x`.
pub fn grid_geography(w: usize, h: usize, pop_model: PopulationModel, vote_model: VoteModel, seed: u64) -> Result<Geography> {
    if w < 2 || h < 2 {
        return Err(invalid(format!("grid must be at least 2x2, got {w}x{h}")));
    }
    let VoteModel::Gradient {
        base,
        slope,
        noise,
        turnout,
    } = vote_model;
    if !(0.0..=1.0).contains(&turnout) || !base.is_finite() || !slope.is_finite() || !(noise >= 0.0) {
        return Err(invalid("vote model parameters out of range"));
    }
    let PopulationModel::Uniform { per_cell } = pop_model;
    let mut rng = rng::generator(seed);
    let layout = GridLayout { width: w, height: h };
    let mut precincts = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let mut exterior = 0.0;
            if x == 0 {
                exterior += 1.0;
            }
            if x == w - 1 {
                exterior += 1.0;
            }
            if y == 0 {
                exterior += 1.0;
            }
            if y == h - 1 {
                exterior += 1.0;
            }
            let jitter: f64 = rng.random_range(-1.0..=1.0);
            let share = (base + slope * (x as f64 / (w - 1) as f64 - 0.5) + noise * jitter).clamp(0.02, 0.98);
            let total = (turnout * per_cell as f64).round() as u64;
            let dem = (share * total as f64).round() as u64;
            precincts.push(Precinct {
                id: format!("x{x}y{y}"),
                area: 1.0,
                exterior_boundary_length: exterior,
                population: per_cell,
                votes_dem: dem,
                votes_rep: total - dem,
                votes_total: total,
            });
        }
    }
    let mut adjacency = Vec::with_capacity(2 * w * h);
    for y in 0..h {
        for x in 0..w {
            let i = layout.index(x, y);
            if x + 1 < w {
                adjacency.push(Adjacency {
                    a: i,
                    b: i + 1,
                    shared_length: 1.0,
                });
            }
            if y + 1 < h {
                adjacency.push(Adjacency {
                    a: i,
                    b: i + w,
                    shared_length: 1.0,
                });
            }
        }
    }
    let index = precincts.iter().enumerate().map(|(i, p)| (p.id.clone(), i)).collect();
    Ok(Geography::assemble(precincts, adjacency, index, Some(layout)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, exterior: f64, perimeter: Option<f64>) -> PrecinctRecord {
        PrecinctRecord {
            precinct: Precinct {
                id: id.into(),
                area: 1.0,
                exterior_boundary_length: exterior,
                population: 10,
                votes_dem: 3,
                votes_rep: 4,
                votes_total: 8,
            },
            perimeter,
        }
    }

    fn edge(a: &str, b: &str, len: f64) -> AdjacencyRecord {
        AdjacencyRecord {
            a: a.into(),
            b: b.into(),
            shared_length: len,
        }
    }

    fn two_precincts(adjacency: Vec<AdjacencyRecord>) -> GeographyFile {
        GeographyFile {
            format: 1,
            grid: None,
            precincts: vec![record("a", 3.0, Some(4.0)), record("b", 3.0, Some(4.0))],
            adjacency,
        }
    }

    #[test]
    fn valid_two_precinct_file() {
        let geo = Geography::from_file(two_precincts(vec![edge("a", "b", 1.0), edge("b", "a", 1.0)])).unwrap();
        assert_eq!(geo.len(), 2);
        assert_eq!(geo.adjacency().len(), 1);
        assert_eq!(geo.neighbors(0)[0].precinct, 1);
    }

    #[test]
    fn one_directional_adjacency_rejected() {
        let err = Geography::from_file(two_precincts(vec![edge("a", "b", 1.0)])).unwrap_err();
        assert_eq!(err, GeographyError::Asymmetric { a: "a".into(), b: "b".into() });
    }

    #[test]
    fn zero_length_rejected() {
        let err = Geography::from_file(two_precincts(vec![edge("a", "b", 0.0), edge("b", "a", 0.0)])).unwrap_err();
        assert!(matches!(err, GeographyError::NonpositiveLength { .. }));
    }

    #[test]
    fn other_validation_errors() {
        let mut f = two_precincts(vec![edge("a", "b", 1.0), edge("b", "a", 1.0)]);
        f.precincts[1].precinct.id = "a".into();
        assert_eq!(Geography::from_file(f).unwrap_err(), GeographyError::DuplicateId("a".into()));

        let mut f = two_precincts(vec![edge("a", "b", 1.0), edge("b", "a", 1.0)]);
        f.precincts[0].perimeter = Some(5.0);
        assert!(matches!(
            Geography::from_file(f).unwrap_err(),
            GeographyError::PerimeterMismatch { ref id, .. } if id == "a"
        ));

        let f = two_precincts(vec![edge("a", "a", 1.0)]);
        assert_eq!(Geography::from_file(f).unwrap_err(), GeographyError::SelfAdjacency("a".into()));

        let f = two_precincts(vec![edge("a", "c", 1.0)]);
        assert_eq!(Geography::from_file(f).unwrap_err(), GeographyError::UnknownId("c".into()));

        let f = two_precincts(vec![edge("a", "b", 1.0), edge("b", "a", 2.0)]);
        assert!(matches!(Geography::from_file(f).unwrap_err(), GeographyError::LengthMismatch { .. }));

        let mut f = two_precincts(vec![edge("a", "b", 1.0), edge("b", "a", 1.0)]);
        f.precincts[0].precinct.votes_dem = 5;
        assert_eq!(Geography::from_file(f).unwrap_err(), GeographyError::Votes("a".into()));

        let mut f = two_precincts(vec![]);
        f.format = 2;
        assert_eq!(Geography::from_file(f).unwrap_err(), GeographyError::Format(2));
    }

    #[test]
    fn grid_shape() {
        let g = grid_geography(2, 2, Default::default(), Default::default(), 0).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.adjacency().len(), 4);

        let g = grid_geography(5, 4, Default::default(), Default::default(), 0).unwrap();
        for y in 1..3 {
            for x in 1..4 {
                let i = g.layout().unwrap().index(x, y);
                assert_eq!(g.neighbors(i).len(), 4);
                assert!(!g.is_exterior(i));
            }
        }
        for i in 0..g.len() {
            assert!((g.precinct_perimeter(i) - 4.0).abs() < 1e-12);
        }
        assert!(grid_geography(1, 5, Default::default(), Default::default(), 0).is_err());
    }

    #[test]
    fn grid_is_seeded() {
        let a = grid_geography(6, 6, Default::default(), Default::default(), 3).unwrap();
        let b = grid_geography(6, 6, Default::default(), Default::default(), 3).unwrap();
        let c = grid_geography(6, 6, Default::default(), Default::default(), 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn file_roundtrip() {
        let g = grid_geography(4, 3, Default::default(), Default::default(), 1).unwrap();
        let text = serde_json::to_string(&g.to_file()).unwrap();
        let back = Geography::from_file(serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
