use std::fmt;

/// Pipeline stage of [`crate::solver::solve`], attached to errors raised inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Transform,
    Background,
    Homogenize,
    LeafSolve,
    Merge,
    Recover,
    Dense,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Transform => "transform",
            Stage::Background => "background",
            Stage::Homogenize => "homogenize",
            Stage::LeafSolve => "leaf solve",
            Stage::Merge => "merge",
            Stage::Recover => "recover",
            Stage::Dense => "dense solve",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is singular to working precision (pivot {pivot:.3e}, threshold {threshold:.3e})")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("matrix exponential overflowed")]
    Overflow,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("point {x} lies outside the panel [{a}, {c}]")]
    OutOfPanel { x: f64, a: f64, c: f64 },

    #[error("point {x} lies outside the domain [{a}, {c}]")]
    OutOfDomain { x: f64, a: f64, c: f64 },

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("boundary condition matrix D0 is singular for this background")]
    SingularD0,

    #[error("boundary conditions are degenerate: rank([A | C]) = {rank} < {n}")]
    DegenerateBc { rank: usize, n: usize },

    #[error("diagonal scaling did not produce a nonsingular boundary matrix (lambda = {lambda})")]
    ScalingDiverged { lambda: f64 },

    #[error("local Nystrom matrix on leaf {leaf} is singular")]
    SingularLeaf { leaf: usize },

    #[error("merge factor is singular at node covering [{a}, {c}]")]
    SingularMerge { a: f64, c: f64 },

    #[error("malformed boundary condition: {0}")]
    MalformedBc(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{stage}: {source}")]
    InStage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, stage: Stage) -> Error {
        match self {
            e @ Error::InStage { .. } => e,
            e => Error::InStage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Strips any stage wrapper.
    pub fn root(&self) -> &Error {
        match self {
            Error::InStage { source, .. } => source.root(),
            e => e,
        }
    }

    /// True when the error comes from malformed user input rather than a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self.root(),
            Error::Syntax { .. }
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::Invalid(_)
                | Error::MalformedBc(_)
                | Error::Dimension(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
