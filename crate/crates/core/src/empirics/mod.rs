//! Statistics over simulated cost samples: moments, empirical tail
//! probabilities, histograms, maximum-likelihood fits and KS tests.

mod fit;
mod ks;
mod stats;

pub use fit::{fit_gaussian, fit_student_t, log_likelihood, FitResult, MIN_NU};
pub use ks::{cdf_intersection, kolmogorov_sf, ks_test, KsReport};
pub use stats::{
    body_probability, histogram, moments, tail_probability, two_tail_probability, BinRule, Histogram, MomentReport,
};

pub(crate) use stats::mean_var;
