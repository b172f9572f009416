//! Atomic artifact writing and run metadata.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::config::Settings;
use crate::error::CliError;

/// One output document. Named artifacts go into the output directory under
/// their name; an unnamed one is the output file itself.
pub struct Artifact {
    pub name: Option<String>,
    pub content: String,
}

pub struct RunResult {
    pub artifacts: Vec<Artifact>,
    /// One-line human summary printed to stdout.
    pub summary: Option<String>,
    /// Command-specific resolved inputs for the metadata file.
    pub meta: Value,
    /// A partial failure reported after every artifact has been written.
    pub failure: Option<CliError>,
}

/// Write `content` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(content.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

fn metadata_path(output: &Path, directory: bool) -> PathBuf {
    if directory {
        output.join("run.meta.json")
    } else {
        let mut name = output.as_os_str().to_owned();
        name.push(".meta.json");
        PathBuf::from(name)
    }
}

pub fn emit(
    command: &str,
    settings: &Settings,
    result: RunResult,
    started: SystemTime,
    elapsed: Duration,
) -> Result<(), CliError> {
    let named = result.artifacts.iter().any(|a| a.name.is_some());
    let Some(output) = &settings.output else {
        if named {
            return Err(CliError::Validation(format!(
                "`{command}` writes several files; pass --output <DIR>"
            )));
        }
        if let Some(s) = &result.summary {
            println!("{s}");
        }
        if result.summary.is_none() {
            for a in &result.artifacts {
                print!("{}", a.content);
            }
        }
        return result.failure.map_or(Ok(()), Err);
    };

    for a in &result.artifacts {
        let path = match &a.name {
            Some(n) => output.join(n),
            None => output.clone(),
        };
        write_atomic(&path, &a.content)?;
    }
    if let Some(s) = &result.summary {
        println!("{s}");
    }
    let meta = json!({
        "command": command,
        "settings": settings,
        "resolved": result.meta,
        "version": env!("CARGO_PKG_VERSION"),
        "threads": rayon::current_num_threads(),
        "started_unix_seconds": started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
        "wall_time_seconds": elapsed.as_secs_f64(),
    });
    let text = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    write_atomic(&metadata_path(output, named), &text)?;
    result.failure.map_or(Ok(()), Err)
}
