// Negated comparisons such as `!(x > 0.0)` are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod scalar;

pub mod costs;
pub mod domain;
pub mod empirics;
pub mod error;
pub mod format;
pub mod impact;
pub mod optimizer;
pub mod stochastic;

pub use error::{Result, TcaError};
pub use scalar::Scalar;

/// Double-precision instantiations of the generic types.
pub mod f64 {
    pub type OrderSpec = crate::domain::OrderSpec<f64>;
    pub type MarketParams = crate::domain::MarketParams<f64>;
    pub type ExecutionStrategy = crate::domain::ExecutionStrategy<f64>;
    pub type ScenarioSpec = crate::domain::ScenarioSpec<f64>;
    pub type UtilitySpec = crate::domain::UtilitySpec<f64>;
    pub type CostSample = crate::costs::CostSample<f64>;
    pub type FillSequence = crate::costs::FillSequence<f64>;
    pub type MarketTape = crate::costs::MarketTape<f64>;
    pub type OptResult = crate::optimizer::OptResult<f64>;
}

/// Single-precision instantiations of the generic types.
pub mod f32 {
    pub type OrderSpec = crate::domain::OrderSpec<f32>;
    pub type MarketParams = crate::domain::MarketParams<f32>;
    pub type ExecutionStrategy = crate::domain::ExecutionStrategy<f32>;
    pub type ScenarioSpec = crate::domain::ScenarioSpec<f32>;
    pub type UtilitySpec = crate::domain::UtilitySpec<f32>;
    pub type CostSample = crate::costs::CostSample<f32>;
    pub type FillSequence = crate::costs::FillSequence<f32>;
    pub type MarketTape = crate::costs::MarketTape<f32>;
    pub type OptResult = crate::optimizer::OptResult<f32>;
}
