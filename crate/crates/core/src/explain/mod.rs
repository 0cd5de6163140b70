//! Explanation generation: distances, kernel weights, interpretable feature
//! selection, surrogate training and explanation extraction.

pub mod distance;
pub mod ridge;
pub mod selection;
pub mod surrogate;

pub use distance::{
    hamming_distance, kernel_weights, mixed_distance, DistanceDomain, DistanceMetric, GowerMetric,
    KernelConfig,
};
pub use ridge::{fit_weighted_ridge, weighted_rss, RidgeFit};
pub use selection::{select_features, FeatureSelectionConfig, SelectionMethod};
pub use surrogate::{
    extract_explanation, fit_tree_surrogate, Explanation, LinearSurrogate, Surrogate,
    SurrogateInput, TreeSurrogate,
};
