use thiserror::Error;

/// Errors produced by construction, evaluation and flow drivers.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A space or surface could not be built from the given parameters.
    #[error("construction error: {0}")]
    Construction(String),

    /// A quadrature, root find or time integration failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A surface profile violates smoothness or range requirements.
    #[error("malformed profile: {0}")]
    MalformedProfile(String),

    /// The inverse-mean-curvature speed 1/H is undefined at a node.
    #[error("speed undefined at node {node}: H = {h:e} below floor")]
    SpeedUndefined { node: usize, h: f64 },

    /// An explicit step was rejected more times than allowed.
    #[error("step collapse at t = {t}: {halvings} halvings exhausted ({reason})")]
    StepCollapse {
        t: f64,
        halvings: u32,
        reason: String,
    },

    /// A spec string, config file or CSV could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn construction(msg: impl Into<String>) -> Self {
        Error::Construction(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
