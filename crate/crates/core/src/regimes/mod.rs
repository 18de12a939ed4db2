//! Variant regimes: symmetric information, organic links, cohort targeting.

mod cohort;
mod organic;
mod symmetric;

pub use cohort::{cohort_equilibrium, cohort_gamma_bar, cohort_report, validity_range, CohortSolution};
pub use organic::{
    organic_equilibrium, organic_outside_option, organic_report, OrganicSolution, OrganicStats,
};
pub use symmetric::{
    budget_with_known_values, corollary_sequence, garbled_expectations, mixture_measure, mixture_quality,
    symmetric_info_outside_option, symmetric_info_report, CorollaryPoint,
};
