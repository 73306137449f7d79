use std::fmt;

use normint::ErrorClass;

/// A failed run: the message and the class that picks the exit code.
#[derive(Debug)]
pub struct Failure {
    pub class: ErrorClass,
    pub message: String,
}

impl Failure {
    pub fn io(message: impl Into<String>) -> Self {
        Self { class: ErrorClass::Io, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self { class: ErrorClass::Config, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class {
            ErrorClass::Io => 2,
            ErrorClass::Config => 3,
            ErrorClass::Solver => 4,
        }
    }

    /// Prefixes the message, keeping the class.
    pub fn context(self, what: impl fmt::Display) -> Self {
        Self { class: self.class, message: format!("{what}: {}", self.message) }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let class = match self.class {
            ErrorClass::Io => "I/O error",
            ErrorClass::Config => "configuration error",
            ErrorClass::Solver => "solver error",
        };
        write!(f, "{class}: {}", self.message)
    }
}

impl From<normint::Error> for Failure {
    fn from(e: normint::Error) -> Self {
        Self { class: e.class(), message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}

impl From<image::ImageError> for Failure {
    fn from(e: image::ImageError) -> Self {
        Self::io(e.to_string())
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;
