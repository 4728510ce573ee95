//! Layered knowledge graphs, spatial semantics and bounded evidential
//! reasoning for labeling the rectangles of a shelf image as shelves,
//! products or other objects.

pub mod foa;
pub mod geometry;
pub mod graph;
pub mod hash;
pub mod percept;
pub mod pipeline;
pub mod reasoner;
pub mod scene;
pub mod semantics;
pub mod synthlab;
pub mod truth;

pub use foa::{build_covers, reason_with_foa, Cover, FoAParams};
pub use geometry::{GeomParams, Rect, SpatialRelation};
pub use graph::{merge_graphs, Edge, GraphError, Layer, LayeredGraph, Node, NodeKind, RelationType, Symmetry};
pub use percept::{GrayImage, HoughParams, Segment};
pub use pipeline::{run_pipeline, RunConfig};
pub use reasoner::{classify, infer, Belief, Category, ExpertAxioms, InferOutcome, Reasoner, ReasonerBudget};
pub use scene::{Label, Scene};
pub use synthlab::{MetricsReport, SceneSpec};
pub use truth::{Stamp, TruthValue};
