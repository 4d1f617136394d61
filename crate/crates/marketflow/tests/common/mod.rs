#![allow(dead_code)]

use std::path::{Path, PathBuf};

use marketflow::scenario::{load_scenario_file, Strictness};
use marketflow::trajectory::observations_csv;
use marketflow_core::{simulate, LossKind, Observation};
use serde_json::Value;

pub fn shipped_scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

/// Copies the shipped scenarios into a fresh directory so runs and exports
/// never land in the source tree.
pub fn scenario_workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(shipped_scenarios()).unwrap() {
        let path = entry.unwrap().path();
        if path.is_file() {
            std::fs::copy(&path, dir.path().join(path.file_name().unwrap())).unwrap();
        }
    }
    dir
}

/// Shares of `scenario` simulated with the given overrides, sampled at the
/// panel stamps, as observation CSV.
pub fn synthetic_observations(scenario: &Path, overrides: &[(String, Value)]) -> Vec<u8> {
    let loaded = load_scenario_file(scenario, overrides, Strictness::Strict).unwrap();
    let traj = simulate(&loaded.scenario, &loaded.integrator).unwrap();
    let observed: Vec<Observation> = loaded
        .scenario
        .panel()
        .times()
        .iter()
        .map(|&t| Observation {
            t,
            values: traj.states[traj.nearest_index(t)].shares(),
        })
        .collect();
    observations_csv(&observed, LossKind::Shares)
}

pub fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("marketflow").chain(args.iter().copied());
    let code = marketflow::cli::run_cli(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}
