use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A function was called outside its documented domain.
    Contract(String),
    /// A scenario or configuration value failed validation. `field` is a
    /// dotted path such as `drugs[3].qoh`.
    Invalid { field: String, reason: String },
    UnknownDrug(String),
    MissingAction(String),
    UnknownAgent(String),
    UnknownScenarioSet(u8),
    EmptyDrugSet,
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::Invalid { field, reason } => write!(f, "invalid `{field}`: {reason}"),
            Error::UnknownDrug(id) => write!(f, "unknown drug `{id}` in joint action"),
            Error::MissingAction(id) => write!(f, "no action assigned to drug `{id}`"),
            Error::UnknownAgent(name) => write!(f, "unknown agent kind `{name}`"),
            Error::UnknownScenarioSet(set) => write!(f, "unknown scenario set {set} (expected 1, 2 or 3)"),
            Error::EmptyDrugSet => f.write_str("operation requires at least one drug"),
        }
    }
}

impl core::error::Error for Error {}
