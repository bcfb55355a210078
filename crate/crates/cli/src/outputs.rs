//! Atomic output files: stages write to a temporary sibling and rename on
//! commit, so a failed stage leaves no partial outputs behind.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub struct StagedFile {
    final_path: PathBuf,
    tmp_path: PathBuf,
    committed: bool,
}

impl StagedFile {
    /// Plans an atomic write to `path`. The temporary name keeps the real
    /// extension so compression-by-extension still applies.
    pub fn plan(path: &Path) -> Result<Self> {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .with_context(|| format!("{} has no file name", path.display()))?;
        let tmp_path = path.with_file_name(format!(".tmp.{name}"));
        Ok(StagedFile {
            final_path: path.to_path_buf(),
            tmp_path,
            committed: false,
        })
    }

    pub fn tmp(&self) -> &Path {
        &self.tmp_path
    }

    pub fn commit(mut self) -> Result<PathBuf> {
        std::fs::rename(&self.tmp_path, &self.final_path)
            .with_context(|| format!("committing {}", self.final_path.display()))?;
        self.committed = true;
        Ok(self.final_path.clone())
    }
}

impl Drop for StagedFile {
    fn drop(&mut self) {
        if !self.committed {
            let _ = std::fs::remove_file(&self.tmp_path);
        }
    }
}

/// Writes a pretty JSON value atomically.
pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let staged = StagedFile::plan(path)?;
    let json = serde_json::to_string_pretty(value)?;
    std::fs::write(staged.tmp(), json + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    staged.commit()?;
    Ok(())
}

/// Writes a string atomically.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let staged = StagedFile::plan(path)?;
    std::fs::write(staged.tmp(), text).with_context(|| format!("writing {}", path.display()))?;
    staged.commit()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_renames_and_drop_cleans_up() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.jsonl");

        let staged = StagedFile::plan(&path).unwrap();
        std::fs::write(staged.tmp(), "data").unwrap();
        let tmp = staged.tmp().to_path_buf();
        staged.commit().unwrap();
        assert!(path.exists());
        assert!(!tmp.exists());

        let staged = StagedFile::plan(&path).unwrap();
        std::fs::write(staged.tmp(), "partial").unwrap();
        let tmp = staged.tmp().to_path_buf();
        drop(staged);
        assert!(!tmp.exists());
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "data");
    }

    #[test]
    fn tmp_name_keeps_compression_extension() {
        let staged = StagedFile::plan(Path::new("/x/chunks.jsonl.zst")).unwrap();
        assert_eq!(staged.tmp().extension().unwrap(), "zst");
        // avoid the Drop arm touching /x
        std::mem::forget(staged);
    }
}
