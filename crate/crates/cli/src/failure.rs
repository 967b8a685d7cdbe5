use std::fmt;

/// Error classified by the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or infeasible configuration (exit 1).
    Usage(anyhow::Error),
    /// Missing, malformed or inconsistent input data (exit 2).
    Data(anyhow::Error),
    /// Estimation or bootstrap failure (exit 3).
    Numerical(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        Failure::Usage(anyhow::anyhow!("{msg}"))
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        Failure::Data(anyhow::anyhow!("{msg}"))
    }

    /// Classifies a library error and attaches `context`.
    pub fn from_core(err: hsicts::Error, context: impl fmt::Display) -> Self {
        use hsicts::Error as E;
        let kind = match &err {
            e if e.is_numerical() => 3,
            E::InvalidParameter(_) | E::LagTooLarge { .. } => 1,
            _ => 2,
        };
        let err = anyhow::Error::new(err).context(context.to_string());
        match kind {
            1 => Failure::Usage(err),
            2 => Failure::Data(err),
            _ => Failure::Numerical(err),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (label, err) = match self {
            Failure::Usage(e) => ("usage error", e),
            Failure::Data(e) => ("data error", e),
            Failure::Numerical(e) => ("numerical failure", e),
        };
        write!(f, "{label}: {err:#}")
    }
}

impl std::error::Error for Failure {}

/// Shorthand for attaching context to core results.
pub trait CoreContext<T> {
    fn ctx(self, context: impl fmt::Display) -> Result<T, Failure>;
}

impl<T> CoreContext<T> for hsicts::Result<T> {
    fn ctx(self, context: impl fmt::Display) -> Result<T, Failure> {
        self.map_err(|e| Failure::from_core(e, context))
    }
}
