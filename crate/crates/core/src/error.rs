use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |m - m^dagger| = {deviation:.3e})")]
    NonHermitianInput { deviation: f64 },

    #[error("spectral function is not finite at eigenvalue {eigenvalue}")]
    NonFiniteFunctionValue { eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("reference state is rank-deficient (min eigenvalue {min_eigenvalue:.3e})")]
    SingularReference { min_eigenvalue: f64 },

    #[error("vector is not normalized (norm = {norm})")]
    UnnormalizedVector { norm: f64 },

    #[error("target entropy {target} outside [0, {max}]")]
    TargetOutOfRange { target: f64, max: f64 },

    #[error("Hamiltonian is proportional to the identity; Gibbs entropy does not depend on beta")]
    ConstantEntropy,

    #[error("time {t} outside protocol domain [0, {end}]")]
    ProtocolDomain { t: f64, end: f64 },

    #[error("integration unstable: {0}")]
    Stability(String),

    #[error("positivity lost at t = {t}: min eigenvalue {min_eigenvalue:.3e}")]
    Positivity { t: f64, min_eigenvalue: f64 },

    #[error("driven model supplied where an undriven one is required")]
    DrivenModelSupplied,

    #[error("misaligned series: {0}")]
    MisalignedSeries(String),

    #[error("no bath temperature configured")]
    NoBathTemperature,

    #[error("dark-state condition violated: {0}")]
    DarkStateViolation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
