use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Format {
    Csv,
    Svg,
    Psx,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Svg => "svg",
            Format::Psx => "psx",
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes the artifacts of one command into the output directory, each with a
/// provenance header (tool version, manifest hash).
pub struct Outputs {
    dir: PathBuf,
    command: &'static str,
    manifest_sha: String,
    /// Requested formats; empty means the command's defaults.
    requested: BTreeSet<Format>,
    offered: BTreeSet<Format>,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path, command: &'static str, manifest_sha: String, requested: &[Format]) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            manifest_sha,
            requested: requested.iter().copied().collect(),
            offered: BTreeSet::new(),
            written: Vec::new(),
        })
    }

    fn header_lines(&self) -> [String; 3] {
        [
            format!("torusnf {}", env!("CARGO_PKG_VERSION")),
            format!("command {}", self.command),
            format!("manifest sha256 {}", self.manifest_sha),
        ]
    }

    /// Write `body` as `name` unless formats were requested and `format` is
    /// not among them. `default` says whether the file is written when no
    /// format was requested.
    pub fn emit(&mut self, name: &str, format: Format, default: bool, body: &str) -> Result<(), CliError> {
        self.offered.insert(format);
        let wanted = if self.requested.is_empty() {
            default
        } else {
            self.requested.contains(&format)
        };
        if !wanted {
            return Ok(());
        }
        let text = match format {
            Format::Csv | Format::Psx => {
                let mut s: String = self.header_lines().iter().map(|l| format!("# {l}\n")).collect();
                s.push_str(body);
                s
            }
            Format::Svg => {
                let comment: String = self.header_lines().iter().map(|l| format!("<!-- {l} -->\n")).collect();
                match body.split_once('\n') {
                    Some((decl, rest)) if decl.starts_with("<?xml") => format!("{decl}\n{comment}{rest}"),
                    _ => format!("{comment}{body}"),
                }
            }
        };
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// Fails when a requested format has no artifact in this command.
    pub fn finish(self) -> Result<Vec<PathBuf>, CliError> {
        if let Some(f) = self.requested.iter().find(|f| !self.offered.contains(f)) {
            return Err(CliError::usage(format!("command {} has no {f} output", self.command)));
        }
        Ok(self.written)
    }
}

/// `key,index,value` rows.
#[derive(Default)]
pub struct Summary {
    rows: Vec<(String, usize, String)>,
}

impl Summary {
    pub fn value(&mut self, key: &str, v: impl fmt::Display) {
        self.rows.push((key.to_string(), 0, v.to_string()));
    }

    pub fn real(&mut self, key: &str, v: f64) {
        self.value(key, format!("{:.16e}", v + 0.0));
    }

    pub fn reals(&mut self, key: &str, vs: &[f64]) {
        for (i, v) in vs.iter().enumerate() {
            self.rows.push((key.to_string(), i, format!("{:.16e}", v + 0.0)));
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("key,index,value\n");
        for (k, i, v) in &self.rows {
            s.push_str(&format!("{k},{i},{v}\n"));
        }
        s
    }
}
