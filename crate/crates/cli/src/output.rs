//! Outputs are collected in memory and written only once the whole run has
//! succeeded, so a failing run leaves no partial files behind.

use std::fs;
use std::path::{Path, PathBuf};

use crate::failure::{Failure, Outcome};

#[derive(Default)]
pub struct Staged {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Staged {
    pub fn add(&mut self, path: &Path, bytes: Vec<u8>) {
        self.files.push((path.to_path_buf(), bytes));
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    /// Writes every file to a temporary sibling, then renames them all into
    /// place. Temporaries are removed if any write fails.
    pub fn commit(self) -> Outcome<()> {
        let mut temps: Vec<(PathBuf, &Path)> = Vec::new();
        for (path, bytes) in &self.files {
            let tmp = temp_name(path);
            if let Err(e) = fs::write(&tmp, bytes) {
                let _ = fs::remove_file(&tmp);
                for (t, _) in &temps {
                    let _ = fs::remove_file(t);
                }
                return Err(Failure::io(format!("writing {}: {e}", path.display())));
            }
            temps.push((tmp, path));
        }
        for (tmp, path) in &temps {
            fs::rename(tmp, path).map_err(|e| Failure::io(format!("writing {}: {e}", path.display())))?;
        }
        Ok(())
    }
}

fn temp_name(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.{}.partial", std::process::id()))
}
