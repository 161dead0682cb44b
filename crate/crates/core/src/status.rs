//! Evaluation outcomes shared by every layer of the engine.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Outcome classification for any evaluation, registry mutation or file operation.
///
/// The service envelope and the CLI both render these names verbatim, so the
/// wire vocabulary is generated from [`Status::ALL`] rather than copied by hand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "ok")]
    Ok,
    SyntaxError,
    UnknownSymbol,
    ArityError,
    DivideByZero,
    DomainError,
    FieldNotFound,
    EmptyField,
    TypeError,
    NoConvergence,
    NoSignChange,
    NeverRecovered,
    CrossSpace,
    UnknownEvent,
    CyclicDefinition,
    DuplicateName,
    BuiltInProtected,
    IoError,
}

impl Status {
    pub const ALL: [Status; 18] = [
        Status::Ok,
        Status::SyntaxError,
        Status::UnknownSymbol,
        Status::ArityError,
        Status::DivideByZero,
        Status::DomainError,
        Status::FieldNotFound,
        Status::EmptyField,
        Status::TypeError,
        Status::NoConvergence,
        Status::NoSignChange,
        Status::NeverRecovered,
        Status::CrossSpace,
        Status::UnknownEvent,
        Status::CyclicDefinition,
        Status::DuplicateName,
        Status::BuiltInProtected,
        Status::IoError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::SyntaxError => "SyntaxError",
            Status::UnknownSymbol => "UnknownSymbol",
            Status::ArityError => "ArityError",
            Status::DivideByZero => "DivideByZero",
            Status::DomainError => "DomainError",
            Status::FieldNotFound => "FieldNotFound",
            Status::EmptyField => "EmptyField",
            Status::TypeError => "TypeError",
            Status::NoConvergence => "NoConvergence",
            Status::NoSignChange => "NoSignChange",
            Status::NeverRecovered => "NeverRecovered",
            Status::CrossSpace => "CrossSpace",
            Status::UnknownEvent => "UnknownEvent",
            Status::CyclicDefinition => "CyclicDefinition",
            Status::DuplicateName => "DuplicateName",
            Status::BuiltInProtected => "BuiltInProtected",
            Status::IoError => "IoError",
        }
    }

    pub fn parse(name: &str) -> Option<Status> {
        Status::ALL.into_iter().find(|s| s.as_str() == name)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A non-`Ok` outcome. The detail message is never empty.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{status}: {detail}")]
pub struct CalcError {
    pub status: Status,
    pub detail: String,
}

impl CalcError {
    pub fn new(status: Status, detail: impl Into<String>) -> Self {
        debug_assert!(status != Status::Ok, "CalcError cannot carry Ok");
        let mut detail = detail.into();
        if detail.trim().is_empty() {
            detail = status.as_str().to_string();
        }
        CalcError { status, detail }
    }

    pub fn syntax(detail: impl Into<String>) -> Self {
        Self::new(Status::SyntaxError, detail)
    }

    pub fn unknown_symbol(detail: impl Into<String>) -> Self {
        Self::new(Status::UnknownSymbol, detail)
    }

    pub fn arity(detail: impl Into<String>) -> Self {
        Self::new(Status::ArityError, detail)
    }

    pub fn type_error(detail: impl Into<String>) -> Self {
        Self::new(Status::TypeError, detail)
    }

    pub fn domain(detail: impl Into<String>) -> Self {
        Self::new(Status::DomainError, detail)
    }

    pub fn divide_by_zero(detail: impl Into<String>) -> Self {
        Self::new(Status::DivideByZero, detail)
    }

    pub fn unknown_event(detail: impl Into<String>) -> Self {
        Self::new(Status::UnknownEvent, detail)
    }

    pub fn field_not_found(name: &str) -> Self {
        Self::new(
            Status::FieldNotFound,
            format!("field `{name}` does not exist"),
        )
    }

    pub fn io(detail: impl Into<String>) -> Self {
        Self::new(Status::IoError, detail)
    }
}

/// Value-or-status outcome of an evaluation.
pub type CalcResult<T = f64> = Result<T, CalcError>;

/// Rejects non-finite values so that `Ok` always carries a finite number.
pub(crate) fn finite(value: f64, what: &str) -> CalcResult {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(CalcError::domain(format!("{what} is not a finite number ({value})")))
    }
}
