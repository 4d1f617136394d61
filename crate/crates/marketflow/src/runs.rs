//! Run directories.
//!
//! Each persisted run lives in `runs/<id>/`:
//!
//! - `run.json`: the [`SessionRun`] record
//! - `trajectory.json`
//! - `fit.json` (fit runs only)
//! - `manifest.json`: SHA-256 of every other file
//!
//! The id is a prefix of the SHA-256 of the run's inputs (scenario snapshot,
//! integrator, and for fits the observations, spec, budget and seed), so the
//! same inputs always map to the same directory. A run is written into a
//! private temporary directory and renamed into place; when two writers race,
//! the first rename wins and both report the winner's record.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use marketflow_core::{BehaviorParams, Trajectory};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::report::FitReport;
use crate::scenario::{IntegratorDoc, ScenarioDoc};
use crate::trajectory::{parse_trajectory_json, trajectory_json};

pub const ID_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Simulate,
    Fit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub final_shares: Vec<f64>,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRun {
    pub id: String,
    pub kind: RunKind,
    /// Self-contained copy of the scenario the run was made from.
    pub scenario: ScenarioDoc,
    /// Behavior used for the stored trajectory (the fitted one for fits).
    pub params: BehaviorParams,
    pub integrator: IntegratorDoc,
    pub summary: RunSummary,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
}

impl SessionRun {
    /// `extra` carries inputs beyond the scenario that change the result.
    pub fn new(
        kind: RunKind,
        scenario: ScenarioDoc,
        params: BehaviorParams,
        extra: &Value,
        trajectory: &Trajectory,
    ) -> Self {
        let integrator = scenario.integrator;
        let id = run_id(kind, &scenario, extra);
        Self {
            id,
            kind,
            scenario,
            params,
            integrator,
            summary: RunSummary {
                final_shares: trajectory.last().shares(),
                steps: trajectory.rates.len(),
            },
            created_at: 0,
        }
    }
}

pub fn run_id(kind: RunKind, scenario: &ScenarioDoc, extra: &Value) -> String {
    let key = serde_json::json!({ "kind": kind, "scenario": scenario, "extra": extra });
    let digest = Sha256::digest(serde_json::to_vec(&key).expect("run key serializes"));
    hex::encode(digest)[..ID_LEN].to_string()
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub id: String,
    /// File name to SHA-256 of its contents.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredRun {
    pub run: SessionRun,
    pub trajectory: Trajectory,
    pub fit: Option<FitReport>,
}

#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("record serializes");
    out.push(b'\n');
    out
}

impl RunStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, id: &str) -> Result<PathBuf> {
        let valid = id.len() == ID_LEN
            && id
                .bytes()
                .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
        if !valid {
            return Err(Error::NotFound {
                kind: "run",
                name: id.to_string(),
            });
        }
        Ok(self.root.join(id))
    }

    /// Persists a run and returns the stored record. If the run already
    /// exists, nothing is written and the existing record is returned.
    pub fn save(
        &self,
        mut run: SessionRun,
        trajectory: &Trajectory,
        fit: Option<&FitReport>,
    ) -> Result<SessionRun> {
        let target = self.dir(&run.id)?;
        if target.exists() {
            return Ok(self.load(&run.id)?.run);
        }
        fs::create_dir_all(&self.root).map_err(|e| Error::io(&self.root, e))?;
        run.created_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());

        let mut files: Vec<(&str, Vec<u8>)> = vec![
            ("run.json", json_bytes(&run)),
            ("trajectory.json", trajectory_json(trajectory)),
        ];
        if let Some(fit) = fit {
            files.push(("fit.json", fit.to_json()));
        }
        let manifest = Manifest {
            id: run.id.clone(),
            files: files
                .iter()
                .map(|(name, bytes)| (name.to_string(), sha256_hex(bytes)))
                .collect(),
        };
        files.push(("manifest.json", json_bytes(&manifest)));

        let temp = self.root.join(format!(
            ".tmp-{}-{}-{}",
            run.id,
            std::process::id(),
            TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let write = || -> io::Result<()> {
            fs::create_dir(&temp)?;
            for (name, bytes) in &files {
                fs::write(temp.join(name), bytes)?;
            }
            Ok(())
        };
        if let Err(e) = write() {
            let _ = fs::remove_dir_all(&temp);
            return Err(Error::io(&temp, e));
        }
        match fs::rename(&temp, &target) {
            Ok(()) => Ok(run),
            Err(e) => {
                let _ = fs::remove_dir_all(&temp);
                if target.exists() {
                    Ok(self.load(&run.id)?.run)
                } else {
                    Err(Error::io(&target, e))
                }
            }
        }
    }

    /// Loads a run, checking every file against the manifest.
    pub fn load(&self, id: &str) -> Result<StoredRun> {
        let dir = self.dir(id)?;
        if !dir.is_dir() {
            return Err(Error::NotFound {
                kind: "run",
                name: id.to_string(),
            });
        }
        let read = |name: &str| -> Result<Vec<u8>> {
            let path = dir.join(name);
            fs::read(&path).map_err(|e| Error::io(path, e))
        };
        let corrupt = |name: &str, detail: String| {
            Error::io(
                dir.join(name),
                io::Error::new(io::ErrorKind::InvalidData, detail),
            )
        };
        let manifest: Manifest = serde_json::from_slice(&read("manifest.json")?)
            .map_err(|e| corrupt("manifest.json", e.to_string()))?;
        let mut contents = BTreeMap::new();
        for (name, hash) in &manifest.files {
            let bytes = read(name)?;
            if &sha256_hex(&bytes) != hash {
                return Err(corrupt(name, "content does not match the manifest".into()));
            }
            contents.insert(name.as_str(), bytes);
        }
        let get = |name: &str| {
            contents
                .get(name)
                .ok_or_else(|| corrupt(name, "missing from the manifest".into()))
        };
        let run: SessionRun = serde_json::from_slice(get("run.json")?)
            .map_err(|e| corrupt("run.json", e.to_string()))?;
        let trajectory = parse_trajectory_json(get("trajectory.json")?)?;
        let fit = match contents.get("fit.json") {
            Some(bytes) => Some(
                serde_json::from_slice(bytes).map_err(|e| corrupt("fit.json", e.to_string()))?,
            ),
            None => None,
        };
        Ok(StoredRun {
            run,
            trajectory,
            fit,
        })
    }
}
