//! Market-share flow model.
//!
//! Segments are real-valued populations of products. Each segment loses
//! members to obsolescence, regains them through refresh purchases, and gains
//! new customers entering the market. Where refreshed and new demand goes is
//! decided by attribute-weighted competitiveness scores, optionally bent by
//! winner-take-all and customer-psychology modifiers, and then turned into
//! normalized shares by one of several allocation functions.
//!
//! The crate is `no_std` (it needs `alloc`) and carries no IO. File formats,
//! the command-line tool and the HTTP service live in the `marketflow` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod allocation;
pub mod behavior;
pub mod calibration;
pub mod competitiveness;
pub mod dynamics;
mod error;
pub mod matrix;
pub mod model;
pub mod ode;
pub mod reference;

pub use allocation::{Allocation, AllocationFlag, AllocationMatrix, Allocator};
pub use behavior::{ModifiedScores, ModifierOrder, ScoreKind};
pub use calibration::{FitParam, FitResult, LossKind, Observation, ParamBound, ParamSpec};
pub use competitiveness::CompetitivenessView;
pub use dynamics::{
    simulate, DecayScores, DynamicsOptions, FlowRates, IntegratorConfig, NewCustomerSeries,
    RefreshMode, Scenario,
};
pub use error::{Error, Result};
pub use matrix::SquareMatrix;
pub use model::{
    validate_panel, AttributePanel, BehaviorParams, Interpolation, MarketState, ScalarParam,
    ScoreScale, Trajectory, ValidationReport, Violation,
};
pub use ode::Method;
