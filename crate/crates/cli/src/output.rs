use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

/// Output root with fixed `sequences/`, `reports/` and `csv/` subdirectories.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn sequence(&self, name: &str, text: &str) -> std::io::Result<PathBuf> {
        self.write("sequences", name, text)
    }

    pub fn report(&self, name: &str, text: &str) -> std::io::Result<PathBuf> {
        self.write("reports", name, text)
    }

    pub fn csv(&self, name: &str, text: &str) -> std::io::Result<PathBuf> {
        self.write("csv", name, text)
    }

    fn write(&self, sub: &str, name: &str, text: &str) -> std::io::Result<PathBuf> {
        let dir = self.root.join(sub);
        fs::create_dir_all(&dir)?;
        let path = dir.join(name);
        write_atomic(&path, text)?;
        Ok(path)
    }
}

/// Writes to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
