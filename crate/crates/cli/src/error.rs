use std::path::Path;

/// Failure of a command: exit code plus a machine-readable report.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            kind: "Usage".into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        torusnf::Error::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        }
        .into()
    }

    /// A numeric check that did not hold.
    pub fn numeric(kind: &str, message: impl Into<String>) -> Self {
        Self {
            code: 1,
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind,
                "message": self.message,
                "exit_code": self.code,
            }
        })
        .to_string()
    }
}

impl From<torusnf::Error> for CliError {
    fn from(e: torusnf::Error) -> Self {
        let debug = format!("{:?}", e.root());
        let kind = debug
            .split(|c: char| !c.is_alphanumeric())
            .next()
            .unwrap_or("Error")
            .to_string();
        Self {
            code: if e.is_numeric() { 1 } else { 2 },
            kind,
            message: e.to_string(),
        }
    }
}
