//! Security analysis of coherent-state continuous-variable QKD against
//! individual Gaussian attacks, for both homodyne and heterodyne detection.
//!
//! The crate is organized around the standard eavesdropping model: Alice's
//! Gaussian-modulated signal mode is coupled by Eve to vacuum ancillas through
//! a symplectic transformation that does not mix the X and P quadratures, and
//! Eve measures one quadrature per ancilla.
//!
//! - [`gaussian`]: symplectic matrices, Iwasawa composition, covariance
//!   propagation, conditional variances, symplectic invariants.
//! - [`attacks`]: channel parameters of an attack, the one-parameter family of
//!   symmetric attacks, and the four explicit optimal heterodyne attacks
//!   (feed-forward, cloning, teleportation, entangling cloner).
//! - [`bounds`]: closed-form eavesdropping bounds, mutual informations and
//!   secret-key rates, bound-coincidence channels, and the symplectic-invariant
//!   cross-derivation of the heterodyne bound.
//! - [`search`]: randomized verification of the homodyne optimality theorem
//!   and the heterodyne bound over Iwasawa-parameterized attacks.
//!
//! All variances are in shot-noise units (`N0 = 1`); informations are in bits
//! per channel symbol and logarithms are base 2.

pub mod attacks;
pub mod bounds;
pub mod error;
pub mod gaussian;
pub mod report;
pub mod search;

pub use error::{Error, Result};

/// Central numeric tolerances. Constructors and verification routines use
/// these defaults; the acceptance tests reference the same record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Max-norm residual of `S beta S^T - beta` for symplectic matrices.
    pub symplectic_residual: f64,
    /// Deviation of `det(S)` from one.
    pub determinant: f64,
    /// Max-norm residual of `S_X S_P^T - I` for block-diagonal maps.
    pub block_inverse_transpose: f64,
    /// Orthogonality residual for Iwasawa passive stages.
    pub orthogonality: f64,
    /// Orthogonality residual for generated random orthogonal matrices.
    pub generator_orthogonality: f64,
    /// Allowed asymmetry of covariance matrices.
    pub covariance_symmetry: f64,
    /// Slack on symplectic eigenvalues in the physicality check.
    pub physicality: f64,
    /// Agreement between Schur-complement and determinant-ratio conditionals.
    pub schur_vs_det_ratio: f64,
    /// Defect of the identity `chi = 1/T + eps - 1` in channel parameters.
    pub chi_identity: f64,
    /// Allowed X/P asymmetry for symmetrized channels.
    pub channel_symmetry: f64,
    /// Channel round-trip error of the named attacks.
    pub round_trip: f64,
    /// Bound-saturation residual of the named attacks.
    pub saturation: f64,
    /// Equality tolerance for bound coincidences and cross-derivations.
    pub equality: f64,
    /// Deviation/violation tolerance of the randomized search harness.
    pub harness_deviation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symplectic_residual: 1e-10,
            determinant: 1e-8,
            block_inverse_transpose: 1e-10,
            orthogonality: 1e-10,
            generator_orthogonality: 1e-12,
            covariance_symmetry: 1e-12,
            physicality: 1e-8,
            schur_vs_det_ratio: 1e-10,
            chi_identity: 1e-12,
            channel_symmetry: 1e-10,
            round_trip: 1e-10,
            saturation: 1e-8,
            equality: 1e-9,
            harness_deviation: 1e-8,
        }
    }
}
