//! Large-sample inference for the least-squares estimate and normality
//! diagnostics for its sampling distribution.

pub mod normal;
pub mod normality;
pub mod sandwich;

pub use normal::{normal_cdf, normal_quantile, normal_sf};
pub use normality::{
    histogram, jarque_bera, qq_data, shapiro_wilk, HistogramBin, NormalityReport, TestOutcome,
};
pub use sandwich::{
    confidence_intervals, sandwich_covariance, ConfidenceInterval, SandwichCovariance,
};
