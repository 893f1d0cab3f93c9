//! Machine-readable failures: `{kind, message, context}` on stderr plus an exit code.

use std::fmt;
use std::path::Path;

use fswt_core::Error;
use serde_json::{Map, Value};

use crate::format::json_float;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RESONANCE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Clone)]
pub struct CliError {
    pub kind: String,
    pub message: String,
    pub context: Map<String, Value>,
    pub code: i32,
    /// Human text for stdout (usage on argument errors).
    pub help: Option<String>,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { kind: "usage".into(), message: message.into(), context: Map::new(), code: EXIT_USAGE, help: None }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        let mut e = CliError::usage(format!("{}: {err}", path.display()));
        e.kind = "io".into();
        e.context.insert("path".into(), path.display().to_string().into());
        e
    }

    pub fn with_help(mut self, help: String) -> Self {
        self.help = Some(help);
        self
    }

    pub fn with_context(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.context.insert(key.into(), value.into());
        self
    }

    pub fn is_resonance(&self) -> bool {
        self.code == EXIT_RESONANCE
    }

    pub fn to_json(&self) -> String {
        let mut m = Map::new();
        m.insert("kind".into(), self.kind.clone().into());
        m.insert("message".into(), self.message.clone().into());
        m.insert("context".into(), Value::Object(self.context.clone()));
        serde_json::to_string(&Value::Object(m)).expect("plain JSON")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Resonance(_) => EXIT_RESONANCE,
            Error::Numeric(_) | Error::Contract(_) => EXIT_NUMERIC,
            Error::Domain(_) | Error::Unsupported(_) => EXIT_USAGE,
        };
        let mut context = Map::new();
        if let Error::Resonance(r) = &e {
            context.insert("gap".into(), json_float(r.gap));
            context.insert("shift".into(), json_float(r.shift));
            context.insert("what".into(), r.what.clone().into());
            if let Some(n) = r.order {
                context.insert("order".into(), n.into());
            }
            if let Some(j) = r.harmonic {
                context.insert("harmonic".into(), j.into());
            }
            if let Some(k) = r.hopping_order {
                context.insert("hopping_order".into(), k.into());
            }
        }
        CliError { kind: e.kind().into(), message: e.to_string(), context, code, help: None }
    }
}
