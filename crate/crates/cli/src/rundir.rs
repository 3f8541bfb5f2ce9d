use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use scarn_core::harness::config_hash;

use crate::config::RUNS_DIR_ENV;
use crate::CliError;

/// Output directory of one command invocation, with a log mirrored to stderr.
pub struct RunDir {
    path: PathBuf,
    log: File,
}

#[derive(Serialize)]
struct Meta<'a> {
    command: &'a str,
    config_hash: String,
    seeds: &'a [u64],
    timestamp: u64,
    version: &'a str,
}

impl RunDir {
    /// Uses `explicit` if given, else `<runs root>/<command>-<config hash>`.
    pub fn create<C: Serialize>(explicit: Option<PathBuf>, command: &str, config: &C) -> Result<RunDir, CliError> {
        let path = explicit.unwrap_or_else(|| {
            let root = std::env::var_os(RUNS_DIR_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
            root.join(format!("{command}-{}", &config_hash(config)[..12]))
        });
        fs::create_dir_all(&path).map_err(|e| io_err(&path, e))?;
        let log_path = path.join("logs.txt");
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(|e| io_err(&log_path, e))?;
        let dir = RunDir { path, log };
        dir.write_json("config.json", config)?;
        Ok(dir)
    }

    /// Opens an existing run directory for appending outputs.
    pub fn open(path: PathBuf) -> Result<RunDir, CliError> {
        if !path.join("config.json").is_file() {
            return Err(CliError::Usage(format!("{} is not a run directory (no config.json)", path.display())));
        }
        let log_path = path.join("logs.txt");
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(|e| io_err(&log_path, e))?;
        Ok(RunDir { path, log })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn log(&mut self, msg: impl AsRef<str>) {
        let msg = msg.as_ref();
        eprintln!("{msg}");
        // a failing log write should not abort a finished computation
        let _ = writeln!(self.log, "{msg}");
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let p = self.file(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        fs::write(&p, contents).map_err(|e| io_err(&p, e))?;
        Ok(p)
    }

    pub fn write_json<S: Serialize + ?Sized>(&self, name: &str, value: &S) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(scarn_core::Error::from)?;
        text.push('\n');
        self.write(name, text)
    }

    /// Provenance record kept apart from results.csv so the CSV stays byte-stable.
    pub fn write_meta(&self, command: &str, config_hash: String, seeds: &[u64]) -> Result<(), CliError> {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let meta = Meta {
            command,
            config_hash,
            seeds,
            timestamp,
            version: env!("CARGO_PKG_VERSION"),
        };
        self.write_json("meta.json", &meta)?;
        Ok(())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
