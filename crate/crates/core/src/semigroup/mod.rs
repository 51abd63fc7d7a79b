//! The hypoelliptic semigroup `e^{t(-iku + nu d_y^2)}` on one `x`-mode.

mod norm;
mod propagator;
mod rate;
mod wei;

pub(crate) use norm::estimate as norm_estimate;
pub use norm::{operator_norm, operator_norm_with, NormEstimate, NormMethod, NormOptions};
pub use propagator::{
    adjoint_propagate, propagate, truncated_velocity, EnergyReport, Propagator, PropagatorConfig, Scheme,
};
pub use rate::{auto_dt, decay_rate, RateFlags, RateOptions, RatePoint};
pub use wei::{f_inverse, wei_bound, WeiBound};

