use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Render a float with the shortest representation that round-trips, so
/// reruns with the same config produce byte-identical files.
pub fn num(v: f64) -> String {
    v.to_string()
}

/// Write a CSV file: one `#` comment line recording the artifact version,
/// the command, and its effective configuration, then a header row, then
/// data rows.
pub fn write_csv(
    dir: &Path,
    name: &str,
    command: &str,
    config_note: &str,
    header: &[&str],
    rows: &[Vec<String>],
    extra_comments: &[String],
) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut text = String::new();
    text.push_str(&format!(
        "# biphoton-cli {ARTIFACT_VERSION} | {command} | {config_note}\n"
    ));
    for line in extra_comments {
        text.push_str(&format!("# {line}\n"));
    }
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn write_text(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
