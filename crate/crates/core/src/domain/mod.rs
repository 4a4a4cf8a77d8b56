//! Domain types: points, labels, finite distributions, target functions,
//! labeled sources and datasets.

mod dataset;
mod distribution;
mod point;
mod source;
pub mod synthetic;
mod target;

pub use dataset::{sample, Dataset, ExampleStore, VirtualDataset};
pub use distribution::FiniteDistribution;
pub(crate) use point::point_key;
pub use point::{dot, embed_hypercube, hypercube_bits, norm, Label, Point, BALL_TOLERANCE};
pub use source::{classification_error, exact_margin, LabeledSource, SourceFile};
pub use target::{Classifier, DlItem, ExplicitTable, TargetFunction, TargetSpec};
