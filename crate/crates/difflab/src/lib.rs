//! Scenario harness: configuration, data, training runs, records and charts.

pub mod config;
pub mod data;
pub mod experiment;
pub mod record;
pub mod savings;
pub mod plot;
