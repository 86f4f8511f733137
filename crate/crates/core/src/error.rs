use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Hamiltonian evaluated at t = 0 with a nonzero 1/t term")]
    SingularTime,

    #[error("branch of the gap is ambiguous near t = {at} (|gap| = {gap:.3e})")]
    BranchAmbiguity { at: Complex64, gap: f64 },

    #[error("level slopes are degenerate at tau = {tau}")]
    DegenerateSlopes { tau: f64 },

    #[error("operation requires real couplings")]
    ComplexCouplingUnsupported,

    #[error("q-deformation is singular at level {n}")]
    DeformationSingular { n: usize },

    #[error("reduction needs at least one nonzero coupling to the eliminated level")]
    DegenerateReduction,

    #[error("square-root argument {discriminant} is negative; exponents would be complex")]
    ComplexExponents { discriminant: f64 },

    #[error("probabilities not converged: window deviation {deviation:.3e} at t_max = {t_max}")]
    NotConverged { deviation: f64, t_max: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { t: f64, max_steps: u64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
