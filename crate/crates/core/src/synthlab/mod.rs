//! Synthetic shelf scenes, premise noise and scoring.

pub mod generate;
pub mod metrics;
pub mod noise;

pub use generate::{generate_scene, ground_truth_violations, render_scene, GenerateError, SceneSpec, SizeRange};
pub use metrics::{format_table, score, CategoryScore, MetricsReport, ScoreError};
pub use noise::apply_relation_noise;
