//! Output directory handling and the run manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> io::Result<()> {
        fs::write(self.root.join(name), contents)?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes `run_meta.txt`: the settings, then a SHA-256 line per file.
    pub fn finish(mut self, settings: &[(&str, String)]) -> io::Result<PathBuf> {
        let mut meta = format!("drsim {}\n", env!("CARGO_PKG_VERSION"));
        for (k, v) in settings {
            meta += &format!("{k} = {v}\n");
        }
        self.written.sort();
        for name in &self.written {
            let bytes = fs::read(self.root.join(name))?;
            meta += &format!("sha256 {} {name}\n", hex(&Sha256::digest(&bytes)));
        }
        fs::write(self.root.join("run_meta.txt"), meta)?;
        Ok(self.root)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Rows of `f64` cells with a header, written without quoting.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out += &row.join(",");
        out.push('\n');
    }
    out
}

pub fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x}")
    }
}
