use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A - A†| = {max_deviation:e} exceeds {tolerance:e}")]
    NotHermitian { max_deviation: f64, tolerance: f64 },

    #[error("matrix is not unitary: max |U†U - I| = {max_deviation:e} exceeds {tolerance:e}")]
    NotUnitary { max_deviation: f64, tolerance: f64 },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not a valid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid projector set: {0}")]
    InvalidProjectors(String),

    #[error("function undefined at eigenvalue {eigenvalue:e}")]
    FunctionUndefined { eigenvalue: f64 },

    #[error("unitary logarithm branch ambiguity: eigenphase {phase} lies within {tolerance:e} of -π; perturb the input")]
    BranchAmbiguity { phase: f64, tolerance: f64 },

    #[error("inverse temperature must be positive, got {0}")]
    NonPositiveBeta(f64),

    #[error("Boltzmann weights overflow: β·(E_max - E_min) = {0} > 700")]
    BoltzmannOverflow(f64),

    #[error("energy {energy} outside the open interval ({ground}, {infinite_temperature}) reachable at β > 0")]
    EnergyOutOfRange {
        energy: f64,
        ground: f64,
        infinite_temperature: f64,
    },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid level system: {0}")]
    InvalidLevelSystem(String),

    #[error(
        "combinatorial budget exceeded: {pairs} composition pairs at N = {n} (budget {budget})"
    )]
    BudgetExceeded { n: usize, pairs: u128, budget: u128 },

    #[error("coupling does not conserve the bare energy: max |[V, H0]| = {0:e}")]
    NonConservingCoupling(f64),

    #[error(
        "no resonant pairs: the commutant of the bare Hamiltonian has no off-diagonal freedom"
    )]
    TrivialCommutant,

    #[error("zero eigenvalue in state (p = {0:e}); mix with a small multiple of I/d before running the protocol")]
    ZeroProbability(f64),

    #[error("invalid cycle: {0}")]
    InvalidCycle(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
