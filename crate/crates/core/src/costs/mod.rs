//! Transaction-cost formulas, closed-form moments for arithmetic dynamics,
//! benchmark costs and Monte Carlo cost samples.

mod benchmark;
mod formulas;
mod simulate;

pub use benchmark::{benchmark_price, cost_vs_benchmark, BenchmarkKind, MarketBin, MarketTape};
pub use formulas::{
    cost_ac_closed, cost_geometric, cost_is, expected_cost_ac, variance_ac, Fill, FillSequence, PathCost,
};
pub use simulate::{simulate_cost_sample, CostKernel, CostSample, NoiseMatrix};
