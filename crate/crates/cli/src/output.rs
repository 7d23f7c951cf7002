//! Writes tables, summaries and JSON mirrors, each stamped with the config
//! hash and the mesh levels.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::error::CliError;

/// SHA-256 of the config bytes followed by any command-line overrides.
pub fn config_hash(config: &[u8], overrides: &str) -> String {
    let mut h = Sha256::new();
    h.update(config);
    h.update(overrides.as_bytes());
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

pub struct Output {
    pub dir: PathBuf,
    pub format: Format,
    pub command: &'static str,
    pub hash: String,
    pub written: Vec<PathBuf>,
}

fn join_levels(levels: &[u32]) -> String {
    levels.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

impl Output {
    pub fn new(dir: &Path, format: Format, command: &'static str, hash: String) -> Result<Output, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Output { dir: dir.to_path_buf(), format, command, hash, written: Vec::new() })
    }

    fn header(&self, levels: &[u32]) -> String {
        format!(
            "# surfcrit {}\n# config_sha256: {}\n# levels: {}\n",
            self.command,
            self.hash,
            join_levels(levels)
        )
    }

    fn write(&mut self, name: &str, body: &str, levels: &[u32]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, format!("{}{body}", self.header(levels)))?;
        self.written.push(path);
        Ok(())
    }

    /// CSV table, written for the `csv` and `both` formats.
    pub fn table(&mut self, name: &str, body: &str, levels: &[u32]) -> Result<(), CliError> {
        if self.format.csv() {
            self.write(&format!("{name}.csv"), body, levels)?;
        }
        Ok(())
    }

    /// Keyed-text summary, always written.
    pub fn summary(&mut self, name: &str, body: &str, levels: &[u32]) -> Result<(), CliError> {
        self.write(&format!("{name}.txt"), body, levels)
    }

    /// Plain file that is not a table, always written.
    pub fn file(&mut self, name: &str, body: &str, levels: &[u32]) -> Result<(), CliError> {
        self.write(name, body, levels)
    }

    /// JSON mirror, written for the `json` and `both` formats.
    pub fn json<T: Serialize>(&mut self, name: &str, result: &T, levels: &[u32]) -> Result<(), CliError> {
        if !self.format.json() {
            return Ok(());
        }
        #[derive(Serialize)]
        struct Envelope<'a, T> {
            command: &'a str,
            config_sha256: &'a str,
            levels: &'a [u32],
            result: &'a T,
        }
        let env = Envelope { command: self.command, config_sha256: &self.hash, levels, result };
        let text = serde_json::to_string_pretty(&env).map_err(|e| CliError::Numerical(e.to_string()))?;
        let path = self.dir.join(format!("{name}.json"));
        fs::write(&path, text + "\n")?;
        self.written.push(path);
        Ok(())
    }
}

/// `key = value` lines.
#[derive(Default)]
pub struct Keyed(String);

impl Keyed {
    pub fn put(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        writeln!(self.0, "{key} = {value}").unwrap();
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.put(key, format_args!("{value:.12e}"))
    }

    pub fn text(&self) -> &str {
        &self.0
    }
}

/// Fixed-format float for tables, so outputs are byte-stable.
pub fn f(v: f64) -> String {
    format!("{v:.12e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_hex_sha256() {
        let h = config_hash(b"", "");
        assert_eq!(h, "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        assert_ne!(config_hash(b"a", ""), config_hash(b"a", "levels=1,2,3"));
    }

    #[test]
    fn keyed_lines() {
        let mut k = Keyed::default();
        k.put("a", 1).num("b", 0.5);
        assert_eq!(k.text(), "a = 1\nb = 5.000000000000e-1\n");
    }
}
