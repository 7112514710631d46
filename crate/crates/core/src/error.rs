use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex index {index} out of range for side with {len} vertices")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("ambient size ({0},{1}) does not match ({2},{3})")]
    AmbientMismatch(usize, usize, usize, usize),

    #[error("ambient size ({n},{d}) unsupported: both sides must be between 1 and 64")]
    AmbientUnsupported { n: usize, d: usize },

    #[error("expected a forest, found a cycle")]
    NotAForest,

    #[error("expected a spanning tree on its support")]
    NotATree,

    #[error("vertex has no incident edges")]
    EmptySupport,

    #[error("duplicate cell at index {0}")]
    DuplicateCell(usize),

    #[error("graph misses right vertex {0} entirely, so it has no cell position")]
    NotACell(usize),

    #[error("lattice point {coords:?} has level {found}, expected {expected}")]
    BadLevel {
        coords: Vec<usize>,
        expected: usize,
        found: usize,
    },

    #[error("no cell at position {0:?}")]
    NoCellAtPosition(Vec<usize>),

    #[error("collection is not position-indexed: two cells share position {0:?}")]
    PositionCollision(Vec<usize>),

    #[error("type graph contains a cycle: {0}")]
    CyclicType(String),

    #[error("semitype has no honest refinement in this matroid")]
    NoHonestRefinement,

    #[error("matching field is missing an assignment for subset {0:?}")]
    MissingAssignment(Vec<usize>),

    #[error("assignment for {0:?} is not a perfect matching onto the right side")]
    NotABijection(Vec<usize>),

    #[error("pointed vertex {vertex} must be matched to its forced partner {partner}")]
    PointedViolation { vertex: usize, partner: usize },

    #[error("operation requires a pointed matching field")]
    NotPointed,

    #[error("matching stack is missing the pair ({0:?}, {1:?})")]
    MissingPair(Vec<usize>, Vec<usize>),

    #[error("linkage covector for {0:?} is not a spanning tree; field fails linkage")]
    CovectorNotTree(Vec<usize>),

    #[error("amalgamation exceeds the left vertex count")]
    ThicknessExhausted,

    #[error("tope at position {0:?} disagrees between two sources")]
    TopeConflict(Vec<usize>),

    #[error("no tope found at position {0:?}")]
    TopeMissing(Vec<usize>),

    #[error("nabla covector at {0:?} contains a cycle; refinement check inapplicable")]
    NablaCyclic(Vec<usize>),

    #[error("validation failed in `{stage}`: {report}")]
    InvalidObject { stage: &'static str, report: String },

    #[error("object kind `{0}` does not support this operation")]
    UnsupportedKind(String),

    #[error("unknown conversion target `{0}`")]
    UnknownKind(String),

    #[error("enumeration task out of desk-scale bounds: {0}")]
    SizeLimit(String),

    #[error("node budget of {budget} exhausted after visiting {visited} nodes")]
    BudgetExceeded { budget: u64, visited: u64 },

    #[error("tree-linkage covectors need at least two left vertices")]
    TooFewLeftVertices,

    #[error("invalid input: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
