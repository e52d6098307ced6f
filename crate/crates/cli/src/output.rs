use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// A finished output: file name (relative to `--out`) and contents.
pub struct Artifact {
    pub path: PathBuf,
    pub contents: String,
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Writes every artifact, or prints a single one to stdout when `out` is
/// absent.
pub fn emit(out: Option<&Path>, artifacts: Vec<Artifact>) -> Result<()> {
    match out {
        Some(_) => {
            for a in &artifacts {
                write_atomic(&a.path, &a.contents)?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            for a in &artifacts {
                stdout.write_all(a.contents.as_bytes())?;
            }
        }
    }
    Ok(())
}

/// `out` with `suffix` appended to the file name, e.g. `run` → `run_j2.csv`.
pub fn with_suffix(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    out.with_file_name(name)
}
