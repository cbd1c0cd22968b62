//! Persistent L-value cache: append-only line-delimited JSON keyed by
//! (q, character index, method). Entries from a different library version
//! are ignored, corrupt lines are skipped with a warning and recomputed.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use qaspect::lcentral::{CentralValue, Method};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheLine {
    q: u64,
    idx: u64,
    re: f64,
    im: f64,
    err: f64,
    method: String,
    version: String,
}

#[derive(Debug, Default)]
pub struct LvalueCache {
    path: Option<PathBuf>,
    entries: HashMap<(u64, u64, &'static str), CentralValue>,
}

fn method_tag(m: Method) -> &'static str {
    m.as_str()
}

impl LvalueCache {
    /// In-memory cache with no backing file.
    pub fn ephemeral() -> Self {
        Self::default()
    }

    /// Load (or start) a cache at `path`.
    pub fn open(path: &Path) -> Result<Self> {
        let mut cache = Self {
            path: Some(path.to_path_buf()),
            entries: HashMap::new(),
        };
        let file = match std::fs::File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(cache),
            Err(e) => return Err(e).with_context(|| format!("opening {}", path.display())),
        };
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<CacheLine>(&line) {
                Ok(entry) => {
                    if entry.version != VERSION {
                        continue; // stale version: recompute
                    }
                    let method = match entry.method.as_str() {
                        "afe" => Method::Afe,
                        "hurwitz" => Method::Hurwitz,
                        _ => continue,
                    };
                    cache.entries.insert(
                        (entry.q, entry.idx, method_tag(method)),
                        CentralValue::new(
                            Complex64::new(entry.re, entry.im),
                            method,
                            entry.err,
                        ),
                    );
                }
                Err(e) => {
                    eprintln!(
                        "warning: skipping corrupt cache line {} in {}: {e}",
                        lineno + 1,
                        path.display()
                    );
                }
            }
        }
        Ok(cache)
    }

    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, q: u64, idx: u64, method: Method) -> Option<CentralValue> {
        self.entries.get(&(q, idx, method_tag(method))).copied()
    }

    /// Append entries to the backing file (if any) and the in-memory map.
    pub fn append(&mut self, q: u64, items: &[(u64, CentralValue)]) -> Result<()> {
        if let Some(path) = &self.path {
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir)?;
                }
            }
            let mut file = OpenOptions::new().create(true).append(true).open(path)?;
            for &(idx, cv) in items {
                let line = CacheLine {
                    q,
                    idx,
                    re: cv.value.re,
                    im: cv.value.im,
                    err: cv.est_error,
                    method: cv.method.as_str().to_string(),
                    version: VERSION.to_string(),
                };
                writeln!(file, "{}", serde_json::to_string(&line)?)?;
            }
        }
        for &(idx, cv) in items {
            self.entries.insert((q, idx, method_tag(cv.method)), cv);
        }
        Ok(())
    }
}
