//! Batch front-end: named scenarios and config files in, CSV/JSON data plus
//! a manifest out.

pub mod config;
pub mod presets;
pub mod run;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use virodyn::dynamics::Tolerances;

pub use config::{ConfigError, ScenarioConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub struct RunSettings {
    /// Directory receiving the data files and the manifest.
    pub dir: PathBuf,
    pub format: Format,
    pub tol: Tolerances,
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub figure: Option<String>,
    pub analysis: String,
    pub inputs: String,
    pub tolerances: Tolerances,
    pub format: String,
    pub versions: Versions,
    pub wall_time_s: f64,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub virodyn_core: &'static str,
    pub virodyn_cli: &'static str,
}

/// Loads a scenario by preset name.
pub fn preset_config(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let p = presets::find(name).ok_or_else(|| ConfigError::new(format!("unknown preset `{name}` (see `virodyn list`)")))?;
    ScenarioConfig::parse(p.config)
}

/// Loads a scenario file.
pub fn file_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ConfigError::new(format!("config not found: {}", path.display())),
        _ => ConfigError::new(format!("cannot read {}: {e}", path.display())),
    })?;
    ScenarioConfig::parse(&text).map_err(|e| ConfigError {
        line: e.line,
        message: format!("{}: {}", path.display(), e.message),
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn partial(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Runs a scenario into `settings.dir`. Data files are written as
/// `*.partial` and renamed once the whole scenario succeeds; on failure the
/// partial files stay behind and no manifest is written.
pub fn run_scenario(name: &str, cfg: &ScenarioConfig, settings: &RunSettings) -> Result<Manifest> {
    fs::create_dir_all(&settings.dir)
        .map_err(|e| ConfigError::new(format!("output directory {} not writable: {e}", settings.dir.display())))?;
    let start = Instant::now();
    let mut written: Vec<(PathBuf, FileEntry)> = Vec::new();
    let mut emit = |a: run::Artifact| -> Result<()> {
        let (ext, body) = match (settings.format, a.table) {
            (Format::Csv, Some(t)) => ("csv", t.to_csv()),
            _ => ("json", serde_json::to_string_pretty(&a.value)? + "\n"),
        };
        let file = format!("{}.{ext}", a.stem);
        let path = settings.dir.join(&file);
        fs::write(partial(&path), &body).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {file}");
        written.push((
            path,
            FileEntry {
                name: file,
                sha256: sha256_hex(body.as_bytes()),
                bytes: body.len(),
            },
        ));
        Ok(())
    };
    run::execute(cfg, settings.tol, &mut emit)?;
    let mut files = Vec::new();
    for (path, entry) in written {
        fs::rename(partial(&path), &path).with_context(|| format!("renaming {}", path.display()))?;
        files.push(entry);
    }
    let manifest = Manifest {
        scenario: name.to_string(),
        figure: cfg.figure.clone(),
        analysis: cfg.analysis.kind().to_string(),
        inputs: cfg.source.clone(),
        tolerances: settings.tol,
        format: format!("{:?}", settings.format).to_lowercase(),
        versions: Versions {
            virodyn_core: virodyn::VERSION,
            virodyn_cli: env!("CARGO_PKG_VERSION"),
        },
        wall_time_s: start.elapsed().as_secs_f64(),
        files,
    };
    fs::write(settings.dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

/// Process exit status for an error: 2 for usage and configuration
/// problems, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.chain().any(|e| e.is::<ConfigError>()) {
        2
    } else {
        1
    }
}
