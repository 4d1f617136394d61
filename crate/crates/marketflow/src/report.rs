//! Fit results as a JSON tree.

use marketflow_core::calibration::{fit, FitResult};
use marketflow_core::{BehaviorParams, Observation, ParamSpec};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scenario::LoadedScenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedParam {
    pub name: String,
    pub value: f64,
}

/// Loss with each fitted value moved 5% down and up. `null` marks a
/// perturbed point that could not be simulated or left the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub name: String,
    pub value: f64,
    pub loss_down: Option<f64>,
    pub loss_up: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub scenario: String,
    pub params: Vec<FittedParam>,
    pub final_loss: f64,
    /// Best loss after each evaluation.
    pub loss_trace: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
    pub seed: u64,
    pub budget: usize,
    pub sensitivity: Vec<SensitivityRow>,
    /// Behavior of the fitted scenario.
    pub behavior: BehaviorParams,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl FitReport {
    pub fn new(loaded: &LoadedScenario, result: &FitResult, budget: usize) -> Self {
        Self {
            scenario: loaded.doc.name.clone(),
            params: result
                .params
                .iter()
                .map(|&(p, value)| FittedParam {
                    name: loaded.param_name(p),
                    value,
                })
                .collect(),
            final_loss: result.final_loss,
            loss_trace: result.loss_trace.clone(),
            evaluations: result.evaluations,
            converged: result.converged,
            seed: result.seed,
            budget,
            sensitivity: result
                .sensitivity
                .iter()
                .map(|s| SensitivityRow {
                    name: loaded.param_name(s.param),
                    value: s.value,
                    loss_down: finite(s.loss_down),
                    loss_up: finite(s.loss_up),
                })
                .collect(),
            behavior: *result.scenario.behavior(),
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serializes");
        out.push(b'\n');
        out
    }
}

pub fn run_fit(
    loaded: &LoadedScenario,
    spec: &ParamSpec,
    observed: &[Observation],
    budget: usize,
    seed: u64,
) -> Result<(FitResult, FitReport)> {
    let result = fit(
        &loaded.scenario,
        &loaded.integrator,
        spec,
        observed,
        budget,
        seed,
    )?;
    let report = FitReport::new(loaded, &result, budget);
    Ok((result, report))
}
