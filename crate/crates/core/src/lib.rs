//! The E-Rule: a composite recession indicator built from the 10-year minus
//! 2-year Treasury spread and the Sahm unemployment rule.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the bottom of this file fix the scalar to `f64`.

pub mod backtest;
pub mod error;
pub mod indicators;
pub mod ingest;
pub mod ml;
pub mod scalar;
pub mod series;
pub mod signal;
pub mod simulation;

pub use error::{Error, Result};
pub use indicators::{build_bundle, e_rule, sahm_rule, yield_spread, Composition};
pub use scalar::Scalar;
pub use series::{MonthDate, Unit};
pub use signal::{detect_signals, Phase, SignalKind};

pub type Series = series::MonthlySeries<f64>;
pub type Bundle = indicators::IndicatorBundle<f64>;
pub type Band = signal::Band<f64>;
pub type Event = signal::SignalEvent<f64>;
pub type LeadLag = backtest::LeadLagReport<f64>;
pub type CaseStudy = backtest::CaseStudyReport<f64>;
pub type Scenario = simulation::Scenario<f64>;
pub use simulation::ScenarioParams;
pub type Dataset = ml::Dataset<f64>;
pub type Model = ml::ClassifierModel<f64>;
