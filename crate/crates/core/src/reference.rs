//! The three-segment, two-attribute reference market: quality and price
//! scores on a 1..10 scale at six stamps, with equal importance for both
//! attributes.

use alloc::vec;
use alloc::vec::Vec;

use crate::allocation::Allocator;
use crate::behavior::ModifierOrder;
use crate::dynamics::{
    DynamicsOptions, IntegratorConfig, NewCustomerSeries, RefreshMode, Scenario,
};
use crate::model::{AttributePanel, BehaviorParams, ScoreScale};
use crate::ode::Method;

/// `[stamp][segment] = (quality, price)`
pub const TABLE1_SCORES: [[(f64, f64); 3]; 6] = [
    [(4.0, 8.0), (8.0, 4.0), (2.0, 8.0)],
    [(5.0, 8.0), (8.0, 5.0), (2.0, 8.0)],
    [(6.0, 7.0), (7.0, 6.0), (2.0, 8.0)],
    [(7.0, 6.0), (6.0, 7.0), (2.0, 8.0)],
    [(8.0, 5.0), (5.0, 8.0), (3.0, 8.0)],
    [(8.0, 4.0), (4.0, 8.0), (3.0, 8.0)],
];

pub const TABLE1_TIMES: [f64; 6] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];

/// Importance given to each attribute at every stamp.
pub const EQUAL_IMPORTANCE: f64 = 5.0;

pub fn table1_panel() -> AttributePanel {
    let perf: Vec<f64> = TABLE1_SCORES
        .iter()
        .flat_map(|stamp| stamp.iter().flat_map(|&(q, p)| [q, p]))
        .collect();
    let imp = vec![EQUAL_IMPORTANCE; TABLE1_TIMES.len() * 2];
    AttributePanel::with_market_importance(
        ScoreScale::new(1.0, 10.0).expect("valid scale"),
        3,
        2,
        TABLE1_TIMES.to_vec(),
        perf,
        &imp,
    )
    .expect("reference panel is well formed")
}

pub fn table1_behavior() -> BehaviorParams {
    BehaviorParams::default()
        .with_wta(0.3)
        .and_then(|b| b.with_stickiness(0.2))
        .and_then(|b| b.with_decay(0.5))
        .and_then(|b| b.with_gamma(-1.0))
        .and_then(|b| b.with_c(0.0))
        .expect("reference behavior is in domain")
        .with_allocator(Allocator::Redistribution)
        .with_modifier_order(ModifierOrder::PsychologyThenWta)
        .with_refresh_mode(RefreshMode::PairwiseMatrix)
}

pub const TABLE1_INITIAL_SIZES: [f64; 3] = [100.0, 100.0, 100.0];
pub const TABLE1_NEW_CUSTOMER_RATE: f64 = 20.0;

pub fn table1_scenario() -> Scenario {
    Scenario::new(
        "table1",
        table1_panel(),
        TABLE1_INITIAL_SIZES.to_vec(),
        NewCustomerSeries::Constant(TABLE1_NEW_CUSTOMER_RATE),
        table1_behavior(),
        DynamicsOptions::default(),
    )
    .expect("reference scenario is valid")
}

pub fn table1_integrator() -> IntegratorConfig {
    IntegratorConfig {
        method: Method::Euler,
        dt: 0.05,
        horizon: 6.0,
    }
}
