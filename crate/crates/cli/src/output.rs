//! CSV and JSON writers. Every file starts with the tool version and the
//! fully resolved configuration.
//!
//! CSV files open with `#` comment lines followed by a header row:
//!
//! - densities: `x,density`
//! - mean square displacement: `t,msd,stderr`
//! - characteristic function: `k,re,im`
//! - simulated paths: `seed,n_tumbles,final_position`

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use teleswim_core::montecarlo::RNG_VERSION;
use teleswim_core::pde::SCHEME;

use crate::config::RunConfig;
use crate::CliError;

pub const VERSION: &str = concat!("teleswim ", env!("CARGO_PKG_VERSION"));

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}

pub struct Sink {
    dir: PathBuf,
    config_json: String,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        let dir = PathBuf::from(&config.out);
        fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
        Ok(Self {
            dir,
            config_json: serde_json::to_string(config).expect("config serializes"),
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn csv<R, I>(&mut self, name: &str, columns: &[&str], rows: R) -> Result<(), CliError>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = String>,
    {
        let path = self.dir.join(name);
        let mut file = BufWriter::new(File::create(&path).map_err(|e| io(&path, e))?);
        writeln!(file, "# version: {VERSION}; rng: {RNG_VERSION}; pde: {SCHEME}").map_err(|e| io(&path, e))?;
        writeln!(file, "# config: {}", self.config_json).map_err(|e| io(&path, e))?;
        let mut writer = csv::Writer::from_writer(file);
        let fail = |e: csv::Error| CliError::Runtime(format!("cannot write {}: {e}", path.display()));
        writer.write_record(columns).map_err(fail)?;
        for row in rows {
            writer.write_record(row).map_err(fail)?;
        }
        writer.flush().map_err(|e| io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, results: &T) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let config: Value = serde_json::from_str(&self.config_json).expect("round trip");
        let doc = json!({
            "version": VERSION,
            "rng": RNG_VERSION,
            "pde_scheme": SCHEME,
            "config": config,
            "results": results,
        });
        let text = serde_json::to_string_pretty(&doc).expect("results serialize");
        fs::write(&path, text + "\n").map_err(|e| io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}

/// File-name tag for a time, e.g. `t0.5`.
pub fn tag(t: f64) -> String {
    format!("t{t}")
}

/// Shortest round-trip representation.
pub fn num(v: f64) -> String {
    format!("{v}")
}
