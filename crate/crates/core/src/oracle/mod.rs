//! Brackets for the Carnot–Carathéodory distance `d`.
//!
//! Upper bounds come from explicit horizontal paths: the two-step
//! constructive connector (planar flow, then a square loop for the vertical
//! gap) and the refiner that shortens any warm start. The lower bound is
//! analytic; see [`bounds`].

pub mod bounds;
pub mod lift;
pub mod refine;
pub mod scan;

pub use bounds::lower_bound;
pub use lift::{connect_constructive, square_path, stokes_lift};
pub use refine::{refine_distance, DistanceEstimate, OptimizerStatus, RefineOptions};
pub use scan::{empirical_equivalence_scan, EquivalenceReport, EquivalenceRow, Region};
