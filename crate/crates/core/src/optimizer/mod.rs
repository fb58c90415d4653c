//! Utility evaluation and the candidate / surface-fit / descent pipeline that
//! searches for the best execution schedule.

mod minimize;
mod output;
mod pipeline;
mod sampling;
mod surface;
mod utility;

pub use minimize::{minimize_surface, project_capped_simplex, SurfaceMinimum};
pub use output::{write_candidates_csv, write_results_csv};
pub use pipeline::{
    ac_optimal_strategy, efficient_frontier, optimize, optimize_methods, strategy_map, Budget, Diagnostics,
    FrontierPoint, MapCell, OptMethod, OptReport, OptResult,
};
pub use sampling::{binomial, min_fit_size, sample_strategies, CandidateSet, DEFAULT_MAX_RAW};
pub use surface::{fit_poly_surface, monomial_exponents, PolySurface};
pub use utility::{evaluate_utility, UtilityEvaluation};
