use thiserror::Error;

/// Crate-wide error type. Every failure mode a caller can act on has its own
/// variant; evaluators embedded in field objects report through these as well.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The spatial Jacobian dropped below the admissibility gate. The
    /// transformation is not invertible (or not orientation-preserving) at the
    /// evaluation point.
    #[error("singular jacobian: det = {det:.3e} is below the admissibility gate {tol:.1e}")]
    SingularJacobian { det: f64, tol: f64 },

    /// A grid axis has too few nodes for a central-difference stencil.
    #[error("domain too small: axis `{axis}` has {n} nodes, need at least 3")]
    DomainTooSmall { axis: String, n: usize },

    /// Deposition kernel width exceeds a quarter of the grid extent; the
    /// smoothed charge would leak out of the domain.
    #[error("kernel too wide: width {width:.3e} exceeds a quarter of the domain extent {extent:.3e}")]
    KernelTooWide { width: f64, extent: f64 },

    /// Trajectory integration drifted in energy beyond tolerance on a
    /// conservative force field; the step size is too coarse.
    #[error("step size too large: relative energy drift {drift:.3e} exceeds {tol:.1e}")]
    StepSizeTooLarge { drift: f64, tol: f64 },

    /// Doubling the quadrature nodes moved a momentum moment by more than the
    /// requested tolerance.
    #[error("quadrature under-resolved: doubling nodes shifted the moment by {delta:.3e} (tol {tol:.1e})")]
    QuadratureUnderResolved { delta: f64, tol: f64 },

    /// A graded map must be strictly increasing; its slope vanished or turned
    /// negative.
    #[error("non-monotone map: f'(z) = {slope:.3e} at z = {z:.6}")]
    NonMonotoneMap { z: f64, slope: f64 },

    /// The reduced Helmholtz solve is not defined for this frequency.
    #[error("resonant frequency: helmholtz solve undefined for omega = {omega:.6e}")]
    ResonantFrequency { omega: f64 },

    /// The completion source term must be divergence-free by construction;
    /// a violation signals a corrupted input field.
    #[error("completion source not divergence-free: identity residual {residual:.3e} (tol {tol:.1e})")]
    NotDivergenceFree { residual: f64, tol: f64 },

    /// Slab displacement grew beyond the validity range of the uniform
    /// displacement ansatz.
    #[error("amplitude too large: |d| = {d:.3e} exceeds half the slab half-width (a = {a:.3e})")]
    AmplitudeTooLarge { d: f64, a: f64 },

    /// Equilibrium construction could not meet the neutrality tolerance.
    #[error("normalization failure: neutrality residual {residual:.3e} exceeds {tol:.1e}")]
    NormalizationFailure { residual: f64, tol: f64 },

    /// The completion source does not decay inside the padded window, so the
    /// outgoing-wave potential would depend on the window size and the
    /// corrected tensor would keep a cyclic-identity defect.
    #[error("completion source not localized: gauge defect {defect:.3e} exceeds {tol:.1e}; the divergence source must decay inside the padded window")]
    SourceNotLocalized { defect: f64, tol: f64 },

    /// A field was evaluated outside the grid it was sampled on.
    #[error("point outside sampled grid: axis `{axis}` value {value:.6e} not in [{min:.6e}, {max:.6e}]")]
    OutOfDomain {
        axis: String,
        value: f64,
        min: f64,
        max: f64,
    },

    /// A specification carries values that cannot describe a valid object.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// Malformed tabulated field data.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
