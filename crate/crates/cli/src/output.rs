//! Output files and the run manifest.
//!
//! CSV dialect: comma separators, `.` decimal point, one header row, LF line
//! endings. Floats print in Rust's shortest round-trip form, so identical
//! runs produce byte-identical files.

use flate2::write::GzEncoder;
use flate2::Compression;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct OutputWriter {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutputWriter {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write_csv<I>(&mut self, name: &str, header: &str, rows: I) -> std::io::Result<()>
    where
        I: IntoIterator<Item = String>,
    {
        let mut buf = String::new();
        buf.push_str(header);
        buf.push('\n');
        for row in rows {
            buf.push_str(&row);
            buf.push('\n');
        }
        self.write_bytes(name, buf.as_bytes())
    }

    pub fn write_csv_gz<I>(&mut self, name: &str, header: &str, rows: I) -> std::io::Result<()>
    where
        I: IntoIterator<Item = String>,
    {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(header.as_bytes())?;
        enc.write_all(b"\n")?;
        for row in rows {
            enc.write_all(row.as_bytes())?;
            enc.write_all(b"\n")?;
        }
        let bytes = enc.finish()?;
        self.write_bytes(name, &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.write_bytes(name, &buf)
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }
}

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub experiment: &'a str,
    pub crate_version: &'a str,
    pub seed: u64,
    pub config: &'a serde_json::Value,
    /// Wall time of the run; the only field allowed to differ between
    /// identical reruns.
    pub wall_time_ms: u128,
    pub files: &'a [String],
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> std::io::Result<()> {
    let mut buf = serde_json::to_vec_pretty(manifest)?;
    buf.push(b'\n');
    fs::write(dir.join("manifest.json"), buf)
}
