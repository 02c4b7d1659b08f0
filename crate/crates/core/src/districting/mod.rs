//! Synthetic precinct maps, districting validity, and the regularized flip
//! chain whose stationary distribution is uniform over valid districtings.

mod enumerate;
mod flip;
mod geography;
mod labels;
mod planted;
mod plan;
mod validity;

pub use enumerate::{enumerate_all_valid, enumerate_states, StateSpace, MAX_STATES};
pub use flip::{advance, audit, run_flip_chain, FlipChain, FlipRun, RunCounts, StepOutcome, AUDIT_INTERVAL};
pub use geography::{
    grid_geography, Adjacency, AdjacencyRecord, Geography, GeographyFile, GridLayout, Neighbor, PopulationModel,
    Precinct, PrecinctRecord, VoteModel, PERIMETER_TOL,
};
pub use labels::{omega_mm, omega_mm_of, omega_var, omega_var_of, vote_shares, LabelFunction};
pub use plan::{boundary_pairs, BoundarySet, DistrictStats, Districting, DistrictingFile};
pub use planted::{packed_district_count, planted_districting};
pub use validity::{
    compactness_score, is_contiguous, is_simply_connected, is_valid, polsby_popper, polsby_popper_from,
    CompactnessMode, InvalidReason, Validity, ValidityConstraints,
};
