//! Training and evaluation core for name-embedding fairness penalties.
//!
//! A single-layer softmax classifier is trained with class-weighted
//! cross-entropy plus an optional penalty that discourages correlation
//! between the predicted probability of each record's true label and a word
//! embedding of the individual's name. Two penalties are provided: a
//! cluster-based one (`Variant::Clucl`) and a covariance-based one
//! (`Variant::Cocl`). Group attributes such as race and gender are only ever
//! used by [`metrics`] to quantify bias; they never reach the classifier.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, IO and the
//! command line live in the companion `namefair` crate.
#![no_std]

extern crate alloc;

pub mod clustering;
pub mod data;
pub mod embeddings;
mod error;
pub mod features;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod synthetic;
pub mod training;

pub use clustering::{assign, kmeans, kmeans_pp_init, ClusterModel, KMeansConfig};
pub use data::Dataset;
pub use embeddings::{name_vector, Coverage, EmbeddingTable, NameVector};
pub use error::{Error, Result};
pub use features::{FeatureMatrix, RowView};
pub use losses::{
    clucl_penalty, cocl_penalty, penalty_gradient, total_loss, CompositeLossConfig, PenaltyInputs,
    Variant,
};
pub use metrics::{balanced_tpr, bias_report, gap_rms, tpr, BiasReport, GroupAttribute, GroupLabels};
pub use model::{class_weights, loss_and_gradient, weighted_cross_entropy, ModelParams, Prediction};
pub use optim::{adam_step, AdamConfig, AdamState};
pub use training::{
    batch_loss_and_gradient, train, train_with_name_vectors, PenaltyTerm, TrainConfig, TrainHistory, TrainOutcome,
};
