use thiserror::Error;

/// Errors shared by the kernel algebra and the certificate machinery.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("operands live on different state spaces")]
    SpaceMismatch,
    #[error("state {0} is outside a finite space of size {1}")]
    StateOutOfRange(usize, usize),
    #[error("rows carry tail mass but the function declares no sup bound beyond the window")]
    MissingTailBound,
    #[error("row support exceeds the window and the weight has no tail model")]
    IncompatibleTail,
    #[error("invalid construction: {0}")]
    Invalid(String),
    #[error("Doeblin condition violated at state {x}: witness set of nu-mass {nu_mass} carries kernel mass {kernel_mass} > rho^ell = {threshold}")]
    DoeblinViolated {
        x: usize,
        witness: Vec<usize>,
        nu_mass: f64,
        kernel_mass: f64,
        threshold: f64,
    },
    #[error("reference row {0} has zero mass on a cell where the kernel has mass")]
    ZeroMassRow(usize),
    #[error("residual kernel has a negative entry at ({x}, {y})")]
    NotDominated { x: usize, y: usize },
    #[error("density family is not uniformly integrable: ui tail {tail} above tolerance {tol} at cutoff {cutoff}")]
    NotUniformlyIntegrable { tail: f64, tol: f64, cutoff: f64 },
    #[error("T_{{nu,alpha}} is not Markov: row {row} has mass {mass}")]
    NotMarkov { row: usize, mass: f64 },
    #[error("minorization fails at ({x}, {y}): P = {p} < b T = {bt}")]
    NotMinorized { x: usize, y: usize, p: f64, bt: f64 },
    #[error("drift inequality fails at state {x}: Pw = {lhs} > {rhs}")]
    DriftViolated { x: usize, lhs: f64, rhs: f64 },
    #[error("hitting-time solve diverged (r outside the convergence region)")]
    Divergent,
    #[error("bracket too wide to decide: {0}; try a larger window")]
    Inconclusive(String),
    #[error("problem size {0} exceeds the dense-oracle limit {1}")]
    SizeLimit(usize, usize),
    #[error("operation requires a finite state space")]
    FiniteOnly,
    #[error("no invariant probability found: residual {0}")]
    NoConvergence(f64),
    #[error("decay envelope violated at n = {n}, test function {f}, state {x}")]
    EnvelopeViolated { n: usize, f: usize, x: usize },
    #[error("certificate synthesis failed: {0}")]
    NotFound(String),
}

pub type Result<T> = std::result::Result<T, Error>;
