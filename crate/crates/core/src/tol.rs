use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by every check in the crate.
///
/// `rank` is relative to the largest singular value (or eigenvalue) of the
/// matrix being ranked; all others are absolute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Maximum spectral-norm deviation `‖M − M*‖` accepted as Hermitian.
    pub herm: f64,
    /// Eigenvalues in `(−psd, 0)` are treated as round-off zeros.
    pub psd: f64,
    /// Operator identities are checked to this spectral-norm accuracy.
    pub eq: f64,
    /// Relative singular value cutoff for numerical rank.
    pub rank: f64,
    /// Smallest eigenvalue accepted as strictly positive.
    pub pd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-8,
            psd: 1e-10,
            eq: 1e-8,
            rank: 1e-10,
            pd: 1e-10,
        }
    }
}

impl Tolerances {
    /// Slack allowed on certificate sandwiches, `10·psd`.
    pub fn certificate_slack(&self) -> f64 {
        10.0 * self.psd
    }
}
