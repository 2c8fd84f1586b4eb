//! Adaptive data selection for distilling a large teacher into a small
//! student classifier.
//!
//! Each training batch is filtered by two class-wise adaptive thresholds: one
//! over the teacher's confidence in its pseudo-label and one over the
//! student's predictive entropy. Only samples that are confidently labeled and
//! still hard for the student contribute to the update.

pub mod baselines;
pub mod config;
pub mod data;
pub mod error;
pub mod metrics;
pub mod report;
pub mod runner;
pub mod selector;
pub mod student;
pub mod synth;
pub mod teacher;

pub use error::{Error, Result};
