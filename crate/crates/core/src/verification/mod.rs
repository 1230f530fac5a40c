//! Numerical audits of the structural sign conditions, the decomposition
//! function and the convergence certificate built on the embedding system.

mod audit;
mod certify;
pub mod faults;
mod survey;

pub use audit::{
    audit, check_assumptions, check_decomposition, AuditOptions, AuditReport, Condition,
    ConditionResult, Witness,
};
pub use certify::{
    certify_convergence, CertificateStatus, CertifyOptions, ConvergenceCertificate, Hint, TailPoint,
};
pub use survey::{jacobian_sign_survey, SignClass, SignEntry, SignSurvey};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Default sign tolerance for finite-difference checks.
pub const FD_TOL: f64 = 1e-6;
/// Tolerance of the diagonal identity `g(x, x) = F(x)`.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Uniform sample of the box shrunk by twice the kink-exclusion radius, so
/// every probe of `jacobian_fd` stays inside `[0, jam]`.
pub(crate) fn sample_interior(rng: &mut ChaCha8Rng, jam: &[f64]) -> Vec<f64> {
    jam.iter()
        .map(|&hi| {
            let margin = 2.0 * crate::numerics::FdSpec::REL_EXCLUSION * hi;
            rng.random_range(margin..hi - margin)
        })
        .collect()
}
