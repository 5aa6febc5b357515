use thiserror::Error;

/// Errors surfaced by the simulation toolkit.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid couplings: {0}")]
    Couplings(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("system too large: {n_spins} spins exceeds the dense-matrix limit of 12")]
    TooManySpins { n_spins: usize },

    #[error("matrix is not Hermitian (max deviation {max_dev:.3e})")]
    NotHermitian { max_dev: f64 },

    #[error("operator mixes S_z sectors (max off-sector element {max_mix:.3e})")]
    SectorMixing { max_mix: f64 },

    #[error("matrix is not unitary within tolerance (deviation {dev:.3e})")]
    NotUnitary { dev: f64 },

    #[error("invalid noise spec: {0}")]
    NoiseSpec(String),

    #[error("trace does not decay within the simulated window; lower bound {lower_bound_us:.3} us")]
    NoDecay { lower_bound_us: f64 },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("unknown gate name: {0}")]
    UnknownGate(String),

    #[error("requested rotation is infeasible: {0}")]
    Infeasible(String),

    #[error("gate compilation failed: {0}")]
    CompilationFailure(String),

    #[error("adiabaticity regime violated: J_c = {jc_mhz} MHz must be below J_0/2 = {limit_mhz} MHz")]
    RegimeViolation { jc_mhz: f64, limit_mhz: f64 },

    #[error("degeneracy structure violated: {0}")]
    DegeneracyViolation(String),

    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error("record config hash {found} does not match current config {expected}")]
    RecordHashMismatch { found: String, expected: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;
