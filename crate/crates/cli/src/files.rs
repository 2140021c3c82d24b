//! File access with errors mapped onto the CLI exit codes.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use vdlo::{Mesh, MeshFile};

use crate::error::CliError;

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    let path = path.display().to_string();
    if source.kind() == std::io::ErrorKind::NotFound {
        CliError::NotFound { path }
    } else {
        CliError::Io { path, source }
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io_error(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|source| CliError::Parse { path: path.display().to_string(), source })
}

pub fn read_mesh(path: &Path) -> Result<Mesh, CliError> {
    let file: MeshFile = read_json(path)?;
    Ok(file.into_mesh()?)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| io_error(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| io_error(path, e))
}
