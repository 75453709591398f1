//! Command-line and HTTP front ends for riskgrid assessments.

pub mod app;
pub mod cli;
pub mod error;
pub mod report;
pub mod service;

pub use error::AppError;
pub use report::{ComparisonDocument, Format, ReportDocument};
