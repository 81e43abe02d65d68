//! People analytics over frame streams.
//!
//! The crate bundles three detectors and the bookkeeping around them:
//!
//! * [`boostcascade`]: Haar features over integral images, AdaBoost decision
//!   stumps and an early-rejection cascade for faces.
//! * [`fisher`]: PCA followed by Fisher's linear discriminant for gender.
//! * [`hogdetect`]: per-cell HOG descriptors scored by a linear SVM for people.
//!
//! [`analytics`] turns detections into heat grids, tracks and line-crossing
//! counts, [`eventstore`] persists them and serves reports, and [`pipeline`]
//! wires everything to a paced frame source. The `crowdlens` binary in
//! [`cli`] exposes training, running, reporting and serving.

pub mod analytics;
pub mod boostcascade;
pub mod cli;
pub mod detection;
pub mod eventstore;
pub mod fisher;
pub mod hogdetect;
pub mod imgcore;
pub mod numeric;
pub mod pipeline;
pub mod synth;

pub use detection::{nms, Detection};
pub use imgcore::{GrayImage, IntegralImage, PixelBuffer, Rect};

/// Binary class label used by the boosted stumps and the SVM.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    /// `-1.0` or `+1.0`.
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    /// Maps a real margin to a label with `sign(0) = +1`.
    #[inline]
    pub fn from_margin(m: f64) -> Self {
        if m >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}
