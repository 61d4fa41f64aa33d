use std::fs;
use std::io::Write;
use std::path::Path;

use crate::exit::{CliError, Outcome};

/// Writes through a sibling temp file and renames it into place, so a
/// crashed run never leaves a truncated artifact.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Outcome<()> {
    let fail =
        |e: std::io::Error| CliError::missing(format!("cannot write {}: {e}", path.display()));
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(fail)?;
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("artifact");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(contents)?;
            f.sync_all()
        })
        .and_then(|()| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(fail)
}

pub fn read(path: &Path, what: &str) -> Outcome<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::missing(format!("cannot read {what} {}: {e}", path.display())))
}
