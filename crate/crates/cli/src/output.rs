use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use tempfile::NamedTempFile;

/// Writes through a temporary file in the same directory, then renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).context("creating temporary file")?;
    tmp.write_all(bytes).context("writing temporary file")?;
    tmp.as_file().sync_all().context("syncing temporary file")?;
    tmp.persist(path).context("renaming into place")?;
    Ok(())
}

/// Stages every file before renaming any, so a failure while writing leaves
/// the directory untouched.
pub fn write_all_atomic(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    std::fs::create_dir_all(dir).context("creating output directory")?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, body) in files {
        let mut tmp = NamedTempFile::new_in(dir).context("creating temporary file")?;
        tmp.write_all(body.as_bytes())
            .with_context(|| format!("writing {name}"))?;
        tmp.as_file()
            .sync_all()
            .with_context(|| format!("syncing {name}"))?;
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, path) in staged {
        tmp.persist(&path)
            .with_context(|| format!("renaming {}", path.display()))?;
    }
    Ok(())
}
