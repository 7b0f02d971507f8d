use std::fmt;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage = 1,
    Data = 2,
    Backend = 3,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            kind: Kind::Data,
            error: e.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Failure>;

pub fn usage(msg: impl fmt::Display) -> Failure {
    Failure {
        kind: Kind::Usage,
        error: anyhow::anyhow!("{msg}"),
    }
}

pub trait Classify<T> {
    fn backend(self) -> Result<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for std::result::Result<T, E> {
    fn backend(self) -> Result<T> {
        self.map_err(|e| Failure {
            kind: Kind::Backend,
            error: e.into(),
        })
    }
}
