//! Boosted Haar-feature cascades for face detection.
//!
//! Features are evaluated on summed-area tables ([`features`]), combined into
//! strong classifiers by discrete AdaBoost over decision stumps
//! ([`adaboost`]), and staged into an early-rejection [`Cascade`] that slides
//! over an image at several scales ([`cascade`]).

pub mod adaboost;
pub mod cascade;
pub mod features;

use thiserror::Error;

pub use adaboost::{
    adaboost_train, adaboost_train_traced, alpha_for, best_stump, AdaBoost, BoostRound,
    FeatureMatrix, LabeledSample, RoundTrace, StrongClassifier, WeakStump,
};
pub use cascade::{
    detect_faces, detect_faces_counted, train_cascade, train_cascade_with, NegativeRefill, Cascade, CascadeParams, EvalCounters,
    FaceScan, StageReport, mine_negatives, MINE_IOU,
};
pub use features::{
    enumerate_features, enumerate_kinds, eval_feature, HaarFeature, HaarKind, WindowIntegrals,
    BASE_WINDOW,
};

#[derive(Debug, Error, PartialEq)]
pub enum BoostError {
    #[error("training data has a single label")]
    DegenerateInput,
    #[error("feature {0} missing from the value row")]
    MissingFeature(usize),
    #[error("need at least 20 windows per class, got {positives} positive and {negatives} negative")]
    InsufficientData { positives: usize, negatives: usize },
    #[error("image {width}x{height} is smaller than the detection window")]
    ImageTooSmall { width: u32, height: u32 },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cascade model: {0}")]
    Model(String),
    #[error("cascade model io: {0}")]
    Io(String),
    #[error(transparent)]
    Image(#[from] crate::imgcore::ImageError),
}
