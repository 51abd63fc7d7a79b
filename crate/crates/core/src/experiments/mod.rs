//! Sweeps, exponent fits, bound comparison and prevalence studies.

mod fit;
mod prevalence;
mod sweep;
mod verdicts;

pub use fit::{compare_bounds, fit_exponent, rate_exponents, BoundVerdict, ExponentFit};
pub use prevalence::{
    prevalence_study, wilson_interval, PrevalenceSpec, PrevalenceSummary, PrevalenceTarget, SeedCurve,
    StabilityRule,
};
pub use sweep::{rate_sweep, RateCell, RateTable, SweepSpec};
pub use verdicts::{headline_verdict, wei_domination, HeadlineVerdict, SeriesVerdict, WeiCheck};
