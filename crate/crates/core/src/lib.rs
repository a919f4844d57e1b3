//! Numerical laboratory for sign patterns, logarithmic correlations and
//! Fourier-uniformity statistics of the Liouville function and of model
//! sequences built to imitate it.
//!
//! Module map:
//! - [`arith`]: sieved λ, μ, smallest prime factors; multiplicative-function decomposition.
//! - [`models`]: sequence generators and frequency sets.
//! - [`logstats`]: logarithmic averages and upper-density proxies.
//! - [`words`]: word (sign-pattern) counting and growth fits.
//! - [`correlators`]: log correlations, Chowla products, local Fourier/periodic suprema.
//! - [`vinogradov`]: Vinogradov mean-value solution counts and prime phase sums.
//! - [`info`]: entropy, mutual information and concentration-lemma checks.

pub mod arith;
pub mod correlators;
pub mod error;
pub mod info;
pub mod logstats;
pub mod models;
pub mod numeric;
pub mod vinogradov;
pub mod words;

pub use error::{Error, Result};
pub use num_complex::Complex64;
