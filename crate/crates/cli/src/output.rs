//! Outputs are assembled in memory and written only once every computation
//! has succeeded; each file goes through a temporary sibling and a rename.

use std::fs;
use std::path::{Path, PathBuf};

use multidomain::{json, Error, Result};
use serde::Serialize;

#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents.into_bytes()));
    }

    pub fn bytes(&mut self, name: &str, contents: Vec<u8>) {
        self.files.push((name.to_string(), contents));
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        self.text(name, json::to_string(value)?);
        Ok(())
    }

    /// Write every file into `dir`; on failure no temporary file is left.
    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let tmp = dir.join(format!(".{name}.partial"));
            if let Err(e) = fs::write(&tmp, contents) {
                cleanup(&staged);
                let _ = fs::remove_file(&tmp);
                return Err(Error::Io(e));
            }
            staged.push((tmp, dir.join(name)));
        }
        for (tmp, dest) in &staged {
            fs::rename(tmp, dest)?;
        }
        Ok(staged.into_iter().map(|(_, d)| d).collect())
    }
}

fn cleanup(staged: &[(PathBuf, PathBuf)]) {
    for (tmp, _) in staged {
        let _ = fs::remove_file(tmp);
    }
}
