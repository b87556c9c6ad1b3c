use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The displacement problem has no Dirichlet dofs, so the elastic energy is not coercive.
    #[error("displacement problem is not coercive: no Dirichlet dofs on the mesh")]
    NoDirichlet,

    /// An iterative solver hit its iteration cap. `best` is the last accepted iterate.
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    /// The alternate minimization at one time step did not settle.
    #[error("staggered loop did not converge after {iterations} inner iterations (increment {increment:.3e})")]
    StaggeredNonConvergence {
        iterations: usize,
        increment: f64,
        last_u: Vec<f64>,
        last_z: Vec<f64>,
        descent_log: Vec<f64>,
    },

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("linear algebra failure: {0}")]
    Linear(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Strips `Step` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_non_convergence(&self) -> bool {
        matches!(
            self.root(),
            Error::NonConvergence { .. } | Error::StaggeredNonConvergence { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
