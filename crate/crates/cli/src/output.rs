use std::collections::BTreeMap;
use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use mimpact::hidden_orders::{self, HiddenOrderSet};
use mimpact::orderflow::{self, FormatSpec};
use mimpact::TransactionSeries;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const TRANSACTIONS_FILE: &str = "transactions.csv";
pub const ORDERS_FILE: &str = "orders.csv";
pub const PIECES_FILE: &str = "pieces.csv";
pub const CONFIG_FILE: &str = "sim.cfg";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to reproduce a run. No timestamps, so identical runs
/// give identical manifests.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a, P: Serialize> {
    pub command: &'a str,
    pub params: &'a P,
    /// Input path -> sha256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub outputs: Vec<String>,
}

/// Collects input digests and written files for one run.
pub struct Run {
    dir: PathBuf,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    pub seed: Option<u64>,
}

impl Run {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            seed: None,
        })
    }

    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.inputs
            .insert(path.display().to_string(), hex::encode(Sha256::digest(&bytes)));
        Ok(bytes)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Renders with a `Write`-based exporter and saves the bytes.
    pub fn write_with<F>(&mut self, name: &str, render: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> mimpact::Result<()>,
    {
        let mut buf = Vec::new();
        render(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn finish<P: Serialize>(mut self, command: &str, params: &P) -> Result<(), CliError> {
        let manifest = RunManifest {
            command,
            params,
            inputs: std::mem::take(&mut self.inputs),
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION"),
            outputs: std::mem::take(&mut self.outputs),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join(MANIFEST_FILE);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

/// A transaction series plus ground-truth orders when the input is a
/// simulation directory that carries them.
pub struct Loaded {
    pub series: TransactionSeries,
    pub truth: Option<HiddenOrderSet>,
}

impl Loaded {
    pub fn orders(&self, window: usize) -> Result<HiddenOrderSet, CliError> {
        match &self.truth {
            Some(o) => Ok(o.clone()),
            None => Ok(hidden_orders::reconstruct(&self.series, window)?),
        }
    }
}

pub fn load(run: &mut Run, path: &Path, delimiter: char) -> Result<Loaded, CliError> {
    let delimiter = u8::try_from(delimiter)
        .map_err(|_| CliError::Usage(format!("delimiter {delimiter:?} is not a single byte")))?;
    let format = FormatSpec { delimiter };
    if !path.is_dir() {
        let bytes = run.read(path)?;
        let series = orderflow::parse_transactions(Cursor::new(bytes), format)?;
        return Ok(Loaded { series, truth: None });
    }
    let bytes = run.read(&path.join(TRANSACTIONS_FILE))?;
    let series = orderflow::parse_transactions(Cursor::new(bytes), format)?;
    let (orders, pieces) = (path.join(ORDERS_FILE), path.join(PIECES_FILE));
    let truth = if orders.exists() && pieces.exists() {
        let pieces = run.read(&pieces)?;
        let orders = run.read(&orders)?;
        Some(hidden_orders::read_order_set(
            &series,
            Cursor::new(pieces),
            Cursor::new(orders),
        )?)
    } else {
        None
    };
    Ok(Loaded { series, truth })
}
