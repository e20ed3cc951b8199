//! Helpers shared by the text file formats. All formats are line oriented,
//! whitespace separated, with `#` starting a comment.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats a float with 17 significant digits, enough for `f64` values to
/// round-trip bit-exactly through the text formats.
pub fn fmt_full(v: f64) -> String {
    format!("{v:.16e}")
}

/// Formats a float with 9 significant digits (score files).
pub fn fmt_score(v: f64) -> String {
    format!("{v:.8e}")
}

/// Reads a whole file and returns the non-empty, non-comment lines together
/// with their 1-based line numbers. Trailing `# ...` comments are stripped.
pub fn read_data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if !line.is_empty() {
            out.push((idx + 1, line.to_string()));
        }
    }
    Ok(out)
}

pub fn parse_f64(path: &Path, line: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::parse(path, line, format!("expected a number, got '{tok}'")))
}

pub fn parse_usize(path: &Path, line: usize, tok: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::parse(path, line, format!("expected a non-negative integer, got '{tok}'")))
}

/// Writes `contents` to `path`, mapping IO errors to the crate error type.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}
