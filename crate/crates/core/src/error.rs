use thiserror::Error;

pub type Result<T> = std::result::Result<T, OjaError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OjaError {
    /// Full enumeration of index tuples would exceed the configured cap.
    #[error("enumeration of C({n}, {m}) = {count} tuples exceeds the cap of {cap}")]
    Overflow { n: usize, m: usize, count: u128, cap: u64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("need more than k = {k} observations, got n = {n}")]
    TooFewObservations { n: usize, k: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("line does not cross any hyperplane inside the admissible range")]
    NoIntersection,

    #[error("bounded region became empty")]
    EmptyRegion,

    #[error("scatter matrix is singular (eigenvalue ratio {ratio:e})")]
    SingularScatter { ratio: f64 },

    #[error("grid would need {knots} knots (limit {limit})")]
    GridTooLarge { knots: u128, limit: u128 },

    #[error("all score vectors of the hyperplane sample are zero")]
    DegenerateSample,

    #[error("brute force oracle would need {solves} linear solves (limit {limit})")]
    OracleTooLarge { solves: u128, limit: u128 },
}

impl OjaError {
    /// True for the resource guards (enumeration cap, grid size, oracle size).
    pub fn is_resource_guard(&self) -> bool {
        matches!(
            self,
            OjaError::Overflow { .. } | OjaError::GridTooLarge { .. } | OjaError::OracleTooLarge { .. }
        )
    }
}
