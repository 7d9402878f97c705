//! Distribution element trees (DETs) for nonparametric density estimation
//! and smooth-bootstrap resampling.
//!
//! A [`DetTree`] partitions a box containing the data into cuboids by
//! repeated midpoint splits. Each leaf carries its sample count and an
//! independent product of constant or linear marginal densities, so the
//! estimate is piecewise linear, exactly normalized, and cheap to sample:
//! pick a leaf by mass, then invert each marginal CDF. Conditioning on some
//! coordinates only reweights the leaves that contain the prescribed values.
//!
//! ```
//! use det_core::{build_tree, sample_conditional, BuildConfig, Condition, Ensemble};
//! use det_core::reference::{sample_gaussian, GaussianSpec};
//!
//! let spec = GaussianSpec::new(vec![0.0, 0.0], vec![vec![1.0, 0.8], vec![0.8, 1.0]]).unwrap();
//! let data: Ensemble = sample_gaussian(&spec, 7, 5_000);
//! let tree = build_tree(&data, &BuildConfig::default()).unwrap();
//!
//! let cond = Condition::new([(1, 0.5)], 2).unwrap();
//! let draws = sample_conditional(&tree, &cond, 42, 100).unwrap();
//! assert!(draws.rows().all(|r| r[1] == 0.5));
//! ```

pub mod build;
pub mod cli;
pub mod cuboid;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod marginal;
pub mod reference;
pub mod sample;
pub mod stats;
pub mod tree;

pub use build::{
    build_tree, estimate_theta, marginal_fit_pvalue, quadrant_independence_pvalue, root_cuboid,
    split_pvalue, BuildConfig, FitTest,
};
pub use cuboid::Cuboid;
pub use ensemble::Ensemble;
pub use error::{DetError, Result};
pub use marginal::{marginal_cdf, marginal_density, marginal_quantile, MarginalModel, Order};
pub use sample::{
    categorical_pick, conditional_marginal_estimate, find_conditioned_leaves, sample_conditional,
    sample_unconditional, WeightedLeafSet,
};
pub use tree::{
    det_density, element_density, leaf_mass, Condition, DetNode, DetTree, DistributionElement,
    LeafId, NodeBody, NodeId, RawNode,
};
