//! File helpers shared by the subcommands. Every tabular output starts with
//! a `# config_hash=` comment line.

use std::fs;
use std::path::{Path, PathBuf};

use ghz_core::protocol::fmt_f64;

use crate::error::{CliError, Result};

pub const HASH_PREFIX: &str = "# config_hash=";

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<PathBuf> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))?;
    Ok(path.to_path_buf())
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// The hash recorded in a file's leading comment lines.
pub fn read_hash(text: &str) -> Option<&str> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix(HASH_PREFIX))
        .map(str::trim)
}

/// Builds a CSV document with the hash comment, a header and rows of
/// already-formatted cells.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(hash: &str, header: &[&str]) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(format!("{HASH_PREFIX}{hash}\n").as_bytes());
        let mut writer = csv::Writer::from_writer(buf);
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(cells).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

/// A float cell with 17 significant digits; non-finite values are written
/// as `nan`, `inf` or `-inf`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        fmt_f64(x)
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}
