//! Growth of random trees and forests by cluster-mass attachment.
//!
//! Every cluster of vertices carries a random mass whose distribution is the
//! Laplace convolution of its members' mass distributions. Normalizing a joint
//! draw of cluster masses yields a random probability vector over clusters,
//! which new vertices use to pick attachment targets. Gamma masses give the
//! Dirichlet distribution (whose mean is classic preferential attachment);
//! one-sided stable masses give a fat-tailed alternative with closed-form
//! marginals in the Levy case.
//!
//! Layout:
//! - [`distributions`]: densities, Laplace transforms, samplers, convolution.
//! - [`normalized_mass`]: sampling and densities of normalized mass vectors.
//! - [`tree`]: the forest data model (clusters, leaves, deep vertices).
//! - [`growth`]: leaf, free, mean-based, random-forest and CRP growth.
//! - [`analysis`]: degree histograms, KS statistics, the validation battery.
//! - [`cli`]: the `cluster-mass` command-line front end.

#![forbid(unsafe_code)]

pub mod analysis;
pub mod cli;
pub mod distributions;
mod error;
pub mod growth;
pub mod normalized_mass;
pub mod quadrature;
pub mod rng;
pub mod tree;

pub use error::{Error, Result};
pub use rng::RngStream;
