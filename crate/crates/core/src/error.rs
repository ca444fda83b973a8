use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{name}` = {value} out of range: expected {expected}")]
    ParameterDomain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("reflection branch degenerate: denominator {denominator:e} vanishes")]
    BranchDegenerate { denominator: f64 },
    #[error("boundary motions incompatible at a vertex (mismatch {mismatch:e})")]
    InvalidTrace { mismatch: f64 },
    #[error("boundary motions match none of the admissible configurations")]
    UnclassifiedTrace,
    #[error("gradient is not in the attainable set (defect {distance:e})")]
    NotInK { distance: f64 },
    #[error("numerical inconsistency: {0}")]
    Inconsistent(String),
    #[error("ratio undefined: {0}")]
    UndefinedRatio(&'static str),
    #[error("inadmissible rotation pair: Se1.Re1 = {scalar} < 0")]
    Admissibility { scalar: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("no finite-energy starting point")]
    InfeasibleStart,
    #[error("minimizer did not converge after {iterations} iterations (gradient residual {residual:e})")]
    ConvergenceFailure { residual: f64, iterations: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate regression: {0}")]
    DegenerateRegression(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::ParameterDomain {
            name,
            value,
            expected: "(0, 1)",
        })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterDomain {
            name,
            value,
            expected: "a finite positive number",
        })
    }
}
