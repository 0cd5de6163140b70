use std::fmt;

use serde_json::{json, Value};
use surrogate_core::Error;

/// Anything that stops a command or a request.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or request shape.
    Usage(String),
    /// Reading or writing a file.
    Io(String),
    Core(Error),
    /// The service could not bind its port.
    Bind(String),
}

impl Failure {
    /// True when the caller supplied something wrong rather than something
    /// going wrong at run time.
    pub fn is_user_error(&self) -> bool {
        match self {
            Failure::Usage(_) => true,
            Failure::Io(_) | Failure::Bind(_) => false,
            Failure::Core(e) => matches!(
                e.root(),
                Error::Validation(_)
                    | Error::Config(_)
                    | Error::Unsupported(_)
                    | Error::Input(_)
                    | Error::Parse { .. }
                    | Error::Type(_)
            ),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Bind(_) => 3,
            f if f.is_user_error() => 1,
            _ => 2,
        }
    }

    pub fn http_status(&self) -> u16 {
        if self.is_user_error() {
            400
        } else {
            500
        }
    }

    pub fn stage(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "request",
            Failure::Io(_) => "io",
            Failure::Bind(_) => "startup",
            Failure::Core(e) => e.stage().unwrap_or(match e.root() {
                Error::Validation(_) | Error::Config(_) => "config",
                _ => "input",
            }),
        }
    }

    /// Message without the stage prefix.
    pub fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Bind(m) => m.clone(),
            Failure::Core(e) => e.root().to_string(),
        }
    }

    /// Body of an error response.
    pub fn to_json(&self) -> Value {
        let mut error = json!({"stage": self.stage(), "message": self.message()});
        if let Failure::Core(e) = self {
            if let Error::Validation(violations) = e.root() {
                error["violations"] = json!(violations);
            }
        }
        json!({"version": 1, "error": error})
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Bind(m) => f.write_str(m),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}
