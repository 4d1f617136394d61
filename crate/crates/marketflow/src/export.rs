//! Plot data as long-form CSV (`series,t,value`), one file per chart:
//!
//! - `attribute_scores.csv`: performance per segment and attribute, and
//!   importance per attribute, at each stamp
//! - `competitiveness.csv`: raw and modified market scores at each stamp
//! - `allocation.csv`: share of each step's inflow taken by each segment,
//!   at the scenario's winner-take-all factor and at full winner-take-all
//! - `shares.csv`: market shares over time for the same two runs

use marketflow_core::behavior::modify;
use marketflow_core::competitiveness::competitiveness_view;
use marketflow_core::{simulate, Trajectory};

use crate::error::Result;
use crate::scenario::LoadedScenario;

struct LongForm(csv::Writer<Vec<u8>>);

impl LongForm {
    fn new() -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["series", "t", "value"])
            .expect("write to memory");
        Self(w)
    }

    fn push(&mut self, series: &str, t: f64, value: f64) {
        self.0
            .write_record([series, &t.to_string(), &value.to_string()])
            .expect("write to memory");
    }

    fn finish(self) -> Vec<u8> {
        self.0.into_inner().expect("flush to memory")
    }
}

fn wta_label(wta: f64) -> String {
    format!("wta={wta}")
}

/// Runs at the scenario's own winner-take-all factor and at 1, labelled.
fn comparison_runs(loaded: &LoadedScenario) -> Result<Vec<(String, Trajectory)>> {
    let behavior = *loaded.scenario.behavior();
    let mut levels = vec![behavior.wta()];
    if behavior.wta() != 1.0 {
        levels.push(1.0);
    }
    levels
        .into_iter()
        .map(|wta| {
            let scenario = loaded.scenario.with_behavior(behavior.with_wta(wta)?);
            Ok((wta_label(wta), simulate(&scenario, &loaded.integrator)?))
        })
        .collect()
}

pub fn export(loaded: &LoadedScenario) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let doc = &loaded.doc;
    let panel = loaded.scenario.panel();
    let behavior = loaded.scenario.behavior();

    let mut scores = LongForm::new();
    for (s, &t) in panel.times().iter().enumerate() {
        for (i, segment) in doc.segments.iter().enumerate() {
            for (z, attribute) in doc.attributes.iter().enumerate() {
                scores.push(
                    &format!("perf/{segment}/{attribute}"),
                    t,
                    panel.perf(s, i, z),
                );
            }
        }
        let shared = (0..doc.attributes.len())
            .all(|z| (1..doc.segments.len()).all(|i| panel.imp(s, i, z) == panel.imp(s, 0, z)));
        for (z, attribute) in doc.attributes.iter().enumerate() {
            if shared {
                scores.push(&format!("imp/{attribute}"), t, panel.imp(s, 0, z));
            } else {
                for (i, segment) in doc.segments.iter().enumerate() {
                    scores.push(&format!("imp/{segment}/{attribute}"), t, panel.imp(s, i, z));
                }
            }
        }
    }

    let mut competitiveness = LongForm::new();
    for &t in panel.times() {
        let view = competitiveness_view(panel, t)?;
        let modified = modify(&view, behavior)?;
        for (i, segment) in doc.segments.iter().enumerate() {
            competitiveness.push(&format!("raw/{segment}"), t, view.market[i]);
            competitiveness.push(&format!("modified/{segment}"), t, modified.market[i]);
        }
    }

    let mut allocation = LongForm::new();
    let mut shares = LongForm::new();
    for (label, traj) in comparison_runs(loaded)? {
        for (state, rates) in traj.states.iter().zip(&traj.rates) {
            let inflow = rates.inflow();
            let total: f64 = inflow.iter().sum();
            if total > 0.0 {
                for (segment, v) in doc.segments.iter().zip(&inflow) {
                    allocation.push(&format!("{label}/{segment}"), state.t, v / total);
                }
            }
        }
        for state in &traj.states {
            for (segment, v) in doc.segments.iter().zip(state.shares()) {
                shares.push(&format!("{label}/{segment}"), state.t, v);
            }
        }
    }

    Ok(vec![
        ("attribute_scores.csv", scores.finish()),
        ("competitiveness.csv", competitiveness.finish()),
        ("allocation.csv", allocation.finish()),
        ("shares.csv", shares.finish()),
    ])
}
