//! Clustering of two- and K-component mixtures with an unknown covariance
//! matrix shared by all components.
//!
//! The two-component problem is cast as Max-Cut over the projection onto the
//! column space of the data ([`maxcut`]). Around it sit polynomial-time
//! estimators: a fourth-moment spectral initializer ([`spectral`]), projected
//! power iteration and EM ([`iterative`]), and a Burer–Monteiro SDP
//! relaxation. The K-component problem is handled by k-means on whitened data
//! with a cross-validated variant ([`multiclass`]). [`harness`] runs the
//! Monte-Carlo phase-transition grid.

pub mod cli;
pub mod detect;
pub mod error;
pub mod harness;
pub mod iterative;
pub mod maxcut;
pub mod metrics;
pub mod model;
pub mod multiclass;
pub mod numerics;
pub mod pursuit;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{DataMatrix, MembershipMatrix, SignLabels};
pub use numerics::ProjectionMatrix;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere a seed is accepted.
pub type Rng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives a child seed from a parent seed and a path of indices
/// (splitmix64 finalizer applied per component).
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(seed), |acc, &p| mix(acc ^ mix(p)))
}
