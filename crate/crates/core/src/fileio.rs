//! Shared on-disk plumbing: atomic writes and format versioning.
//!
//! Every text format in the toolkit is versioned. Tabular files (CSV/TSV)
//! carry a leading `# format_version=1` comment line (tolerated if absent on
//! read); JSON documents carry a top-level `"format_version"` field. Partial
//! files are never left behind: writers emit to a temporary file in the
//! destination directory and rename it into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::FORMAT_VERSION;

#[derive(Debug, Error)]
pub enum IoFormatError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: unsupported format_version {found} (supported: {supported})")]
    Version {
        path: String,
        found: String,
        supported: u32,
    },
}

impl IoFormatError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        Self::Parse {
            path: path.display().to_string(),
            line,
            message: message.into(),
        }
    }
}

/// Writes `bytes` to `path` atomically: a unique temporary file in the same
/// directory is written, flushed, and renamed over the destination.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), IoFormatError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let stem = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    // unique-enough temp name: pid + a monotonic counter
    use std::sync::atomic::{AtomicU64, Ordering};
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let tmp_name = format!(
        ".{stem}.tmp.{}.{}",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    );
    let tmp = match dir {
        Some(d) => d.join(&tmp_name),
        None => std::path::PathBuf::from(&tmp_name),
    };
    let write_all = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        Ok(())
    };
    write_all().map_err(|e| IoFormatError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        IoFormatError::io(path, e)
    })
}

/// The leading comment line carried by tabular files.
pub fn version_comment() -> String {
    format!("# format_version={FORMAT_VERSION}\n")
}

/// Strips an optional leading `# format_version=N` comment, validating `N`.
/// Returns the remaining lines paired with their original 1-based line
/// numbers so parse errors can cite the true location.
pub fn strip_version_comment<'a>(
    path: &Path,
    text: &'a str,
) -> Result<Vec<(usize, &'a str)>, IoFormatError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("format_version=") {
                let parsed: Result<u32, _> = v.trim().parse();
                match parsed {
                    Ok(n) if n == FORMAT_VERSION => {}
                    _ => {
                        return Err(IoFormatError::Version {
                            path: path.display().to_string(),
                            found: v.trim().to_string(),
                            supported: FORMAT_VERSION,
                        })
                    }
                }
            }
            // other comment lines are skipped
            continue;
        }
        out.push((lineno, line));
    }
    Ok(out)
}

/// Reads a whole file as UTF-8 text.
pub fn read_text(path: &Path) -> Result<String, IoFormatError> {
    fs::read_to_string(path).map_err(|e| IoFormatError::io(path, e))
}

/// Reads a whole file as raw bytes.
pub fn read_bytes(path: &Path) -> Result<Vec<u8>, IoFormatError> {
    fs::read(path).map_err(|e| IoFormatError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.csv");
        atomic_write(&path, b"first").unwrap();
        atomic_write(&path, b"second").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second");
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .filter(|n| n.contains(".tmp."))
            .collect();
        assert!(
            leftovers.is_empty(),
            "temp files left behind: {leftovers:?}"
        );
    }

    #[test]
    fn version_comment_round_trips() {
        let path = Path::new("mem.csv");
        let text = format!("{}a,b\n1,2\n", version_comment());
        let lines = strip_version_comment(path, &text).unwrap();
        assert_eq!(lines, vec![(2, "a,b"), (3, "1,2")]);
    }

    #[test]
    fn missing_version_comment_is_tolerated() {
        let path = Path::new("mem.csv");
        let lines = strip_version_comment(path, "a,b\n1,2\n").unwrap();
        assert_eq!(lines.len(), 2);
    }

    #[test]
    fn future_version_is_rejected() {
        let path = Path::new("mem.csv");
        let err = strip_version_comment(path, "# format_version=99\na,b\n").unwrap_err();
        assert!(matches!(err, IoFormatError::Version { .. }));
    }
}
