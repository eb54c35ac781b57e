use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed domain document: {0}")]
    MalformedDomain(String),

    #[error("logarithmic capacity must be positive and finite, got {0}")]
    InvalidCapacity(f64),

    #[error("area theorem violated: sum k|a_k|^2 gamma^(-2k) = {sum} exceeds gamma^2 = {bound}")]
    AreaTheorem { sum: f64, bound: f64 },

    #[error("point w = {w} lies inside the disk |w| < gamma = {gamma}")]
    OutsideDomain { w: num_complex::Complex64, gamma: f64 },

    #[error("map derivative vanishes (|psi'| = {derivative:e}) at w = {w}: cusp on the boundary")]
    Cusp { w: num_complex::Complex64, derivative: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("Grunsky identity residual {residual:e} at (m, k) = ({m}, {k}) exceeds tolerance {tolerance:e}")]
    GrunskyIdentity {
        m: usize,
        k: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("row l2 bound violated in row {row}: sum = {sum}")]
    RowBound { row: usize, sum: f64 },

    #[error("largest singular value {sigma} exceeds the operator norm bound 1/2")]
    NormBound { sigma: f64 },

    #[error("eigensolver failed: {0}")]
    EigenSolver(String),

    #[error("eigenpair residual {0:e} exceeds tolerance")]
    EigenResidual(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("quadrature nodes {i} and {j} coincide")]
    NodeCoincidence { i: usize, j: usize },

    #[error("oracle eigenvalue imaginary residue {0:e} too large; refine the quadrature")]
    ImaginaryResidue(f64),

    #[error("eigenvalue magnitudes are not paired: jitter {jitter:e} exceeds {tolerance:e}")]
    Unpaired { jitter: f64, tolerance: f64 },

    #[error("zero eigenvalue at k = {0} inside the fit range")]
    ZeroEigenvalue(usize),

    #[error("inverse map did not converge for z = {0}")]
    InverseMap(num_complex::Complex64),

    #[error("not enough data: {0}")]
    InsufficientData(String),
}
