//! Evolved perturbation explanations for black-box image classifiers.
//!
//! Images are segmented into superpixels, explained with a kernel-weighted
//! ridge surrogate, and the three segmentation parameters are searched with
//! NSGA-II so the explanation is tuned automatically. Cross-seed agreement is
//! measured with pixel-wise relative standard deviations.

pub mod analysis;
pub mod classifier;
pub mod imaging;
pub mod lime;
pub mod moo;
pub mod rng;
pub mod segmentation;
