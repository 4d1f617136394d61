//! Shared domain types: score scale, attribute panel, behavior parameters,
//! market state and trajectories.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::allocation::Allocator;
use crate::behavior::ModifierOrder;
use crate::dynamics::{FlowRates, RefreshMode};
use crate::error::{Error, Result};

/// Closed interval on which attribute performance and importance are scored.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ScoreScale {
    min: f64,
    max: f64,
}

impl ScoreScale {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min >= 0.0 && min < max) {
            return Err(Error::InvalidScale { min, max });
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    /// Maps a score on this scale to `[0, 1]`. Values outside the scale are
    /// clamped.
    pub fn normalize(&self, value: f64) -> f64 {
        ((value - self.min) / self.width()).clamp(0.0, 1.0)
    }
}

/// How stamped series are read between stamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Interpolation {
    /// Hold the value of the last stamp at or before `t`.
    #[default]
    LeftHold,
    Linear,
}

/// Position of a time inside a stamp sequence: `value = v[lo] * (1 - frac) + v[hi] * frac`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StampPosition {
    pub lo: usize,
    pub hi: usize,
    pub frac: f64,
}

impl StampPosition {
    pub fn blend(&self, lo: f64, hi: f64) -> f64 {
        if self.frac == 0.0 {
            lo
        } else {
            lo * (1.0 - self.frac) + hi * self.frac
        }
    }
}

/// Locates `t` in strictly increasing `times`, clamping outside the range.
pub(crate) fn locate(times: &[f64], t: f64, interpolation: Interpolation) -> StampPosition {
    let last = times.len() - 1;
    if t <= times[0] {
        return StampPosition {
            lo: 0,
            hi: 0,
            frac: 0.0,
        };
    }
    if t >= times[last] {
        return StampPosition {
            lo: last,
            hi: last,
            frac: 0.0,
        };
    }
    // first stamp strictly greater than t; in 1..=last here
    let hi = times.partition_point(|&s| s <= t);
    let lo = hi - 1;
    match interpolation {
        Interpolation::LeftHold => StampPosition {
            lo,
            hi: lo,
            frac: 0.0,
        },
        Interpolation::Linear => StampPosition {
            lo,
            hi,
            frac: (t - times[lo]) / (times[hi] - times[lo]),
        },
    }
}

/// Performance and importance scores per stamp, segment and attribute.
///
/// Cells are stored densely, indexed `[stamp][segment][attribute]`. A panel
/// may hold out-of-range values; [`validate_panel`] reports them and
/// [`crate::Scenario::new`] refuses to run on an invalid panel.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributePanel {
    scale: ScoreScale,
    segments: usize,
    attributes: usize,
    times: Vec<f64>,
    perf: Vec<f64>,
    imp: Vec<f64>,
    interpolation: Interpolation,
}

impl AttributePanel {
    /// Builds a panel from flat `[stamp][segment][attribute]` buffers.
    pub fn new(
        scale: ScoreScale,
        segments: usize,
        attributes: usize,
        times: Vec<f64>,
        perf: Vec<f64>,
        imp: Vec<f64>,
    ) -> Result<Self> {
        if segments == 0 || attributes == 0 {
            return Err(Error::PanelShape(format!(
                "need at least one segment and one attribute, got {segments} x {attributes}"
            )));
        }
        if times.is_empty() {
            return Err(Error::PanelShape("no time stamps".into()));
        }
        let cells = times.len() * segments * attributes;
        for (name, buf) in [("perf", &perf), ("imp", &imp)] {
            if buf.len() != cells {
                return Err(Error::PanelShape(format!(
                    "{name} has {} cells, expected {} stamps x {segments} segments x {attributes} attributes = {cells}",
                    buf.len(),
                    times.len()
                )));
            }
        }
        Ok(Self {
            scale,
            segments,
            attributes,
            times,
            perf,
            imp,
            interpolation: Interpolation::LeftHold,
        })
    }

    /// Builds a panel whose importance row is shared by every segment,
    /// `imp[stamp][attribute]`.
    pub fn with_market_importance(
        scale: ScoreScale,
        segments: usize,
        attributes: usize,
        times: Vec<f64>,
        perf: Vec<f64>,
        market_imp: &[f64],
    ) -> Result<Self> {
        if market_imp.len() != times.len() * attributes {
            return Err(Error::PanelShape(format!(
                "market importance has {} cells, expected {} stamps x {attributes} attributes",
                market_imp.len(),
                times.len()
            )));
        }
        let imp = market_imp
            .chunks(attributes)
            .flat_map(|row| core::iter::repeat_n(row, segments).flatten().copied())
            .collect();
        Self::new(scale, segments, attributes, times, perf, imp)
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    pub fn scale(&self) -> ScoreScale {
        self.scale
    }

    pub fn segment_count(&self) -> usize {
        self.segments
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    #[inline]
    fn index(&self, stamp: usize, segment: usize, attribute: usize) -> usize {
        (stamp * self.segments + segment) * self.attributes + attribute
    }

    /// Performance score at a stamp index.
    pub fn perf(&self, stamp: usize, segment: usize, attribute: usize) -> f64 {
        self.perf[self.index(stamp, segment, attribute)]
    }

    /// Importance score at a stamp index.
    pub fn imp(&self, stamp: usize, segment: usize, attribute: usize) -> f64 {
        self.imp[self.index(stamp, segment, attribute)]
    }

    pub(crate) fn position(&self, t: f64) -> StampPosition {
        locate(&self.times, t, self.interpolation)
    }

    /// Performance row of one segment at time `t`, interpolated.
    pub fn perf_at(&self, t: f64, segment: usize) -> Vec<f64> {
        let pos = self.position(t);
        (0..self.attributes)
            .map(|z| pos.blend(self.perf(pos.lo, segment, z), self.perf(pos.hi, segment, z)))
            .collect()
    }

    /// Importance row of one segment at time `t`, interpolated.
    pub fn imp_at(&self, t: f64, segment: usize) -> Vec<f64> {
        let pos = self.position(t);
        (0..self.attributes)
            .map(|z| pos.blend(self.imp(pos.lo, segment, z), self.imp(pos.hi, segment, z)))
            .collect()
    }

    /// Returns a copy with the importance of `attribute` set to `value` at
    /// every stamp and segment.
    pub fn with_importance(&self, attribute: usize, value: f64) -> Result<Self> {
        if attribute >= self.attributes {
            return Err(Error::AttributeIndex {
                index: attribute,
                count: self.attributes,
            });
        }
        let mut out = self.clone();
        for cell in out.imp.iter_mut().skip(attribute).step_by(self.attributes) {
            *cell = value;
        }
        Ok(out)
    }
}

/// Which score table a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreTable {
    Perf,
    Imp,
}

impl fmt::Display for ScoreTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreTable::Perf => "perf",
            ScoreTable::Imp => "imp",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// A score outside the scale (or not finite).
    OutOfRange {
        table: ScoreTable,
        stamp: usize,
        segment: usize,
        attribute: usize,
        value: f64,
    },
    /// All importance scores of a segment are zero at a stamp.
    ZeroImportance { stamp: usize, segment: usize },
    /// `times[index]` is not strictly greater than its predecessor, or not finite.
    TimeOrder { index: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfRange {
                table,
                stamp,
                segment,
                attribute,
                value,
            } => write!(
                f,
                "{table}[{stamp}][{segment}][{attribute}] = {value} is outside the score scale"
            ),
            Violation::ZeroImportance { stamp, segment } => {
                write!(f, "zero importance row at imp[{stamp}][{segment}]")
            }
            Violation::TimeOrder { index, value } => {
                write!(f, "times[{index}] = {value} is not strictly increasing")
            }
        }
    }
}

/// Outcome of [`validate_panel`]: empty when the panel is usable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every panel invariant and lists each offending cell.
pub fn validate_panel(panel: &AttributePanel) -> ValidationReport {
    let mut violations = Vec::new();
    for (index, pair) in panel.times.windows(2).enumerate() {
        if !(pair[1] > pair[0]) {
            violations.push(Violation::TimeOrder {
                index: index + 1,
                value: pair[1],
            });
        }
    }
    if !panel.times[0].is_finite() {
        violations.push(Violation::TimeOrder {
            index: 0,
            value: panel.times[0],
        });
    }
    let scale = panel.scale;
    for stamp in 0..panel.times.len() {
        for segment in 0..panel.segments {
            let mut any_importance = false;
            for attribute in 0..panel.attributes {
                for (table, value) in [
                    (ScoreTable::Perf, panel.perf(stamp, segment, attribute)),
                    (ScoreTable::Imp, panel.imp(stamp, segment, attribute)),
                ] {
                    if !scale.contains(value) {
                        violations.push(Violation::OutOfRange {
                            table,
                            stamp,
                            segment,
                            attribute,
                            value,
                        });
                    }
                }
                any_importance |= panel.imp(stamp, segment, attribute) > 0.0;
            }
            if !any_importance {
                violations.push(Violation::ZeroImportance { stamp, segment });
            }
        }
    }
    ValidationReport { violations }
}

/// Scalar behavior parameters, addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarParam {
    Wta,
    Stickiness,
    Decay,
    Gamma,
    C,
}

impl ScalarParam {
    pub const ALL: [ScalarParam; 5] = [
        ScalarParam::Wta,
        ScalarParam::Stickiness,
        ScalarParam::Decay,
        ScalarParam::Gamma,
        ScalarParam::C,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScalarParam::Wta => "wta",
            ScalarParam::Stickiness => "stickiness",
            ScalarParam::Decay => "decay",
            ScalarParam::Gamma => "gamma",
            ScalarParam::C => "c",
        }
    }

    /// Short key used in scenario files and overrides.
    pub fn key(self) -> &'static str {
        match self {
            ScalarParam::Stickiness => "s",
            ScalarParam::Decay => "k",
            other => other.name(),
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.key() == key || p.name() == key)
    }

    pub fn domain(self) -> &'static str {
        match self {
            ScalarParam::Wta | ScalarParam::Stickiness => "[0, 1]",
            ScalarParam::Decay => "[0, 50]",
            ScalarParam::Gamma => "(-inf, 0)",
            ScalarParam::C => "[0, inf)",
        }
    }

    pub fn admits(self, value: f64) -> bool {
        match self {
            ScalarParam::Wta | ScalarParam::Stickiness => (0.0..=1.0).contains(&value),
            ScalarParam::Decay => (0.0..=50.0).contains(&value),
            ScalarParam::Gamma => value < 0.0 && value.is_finite(),
            ScalarParam::C => value >= 0.0 && value.is_finite(),
        }
    }

    pub fn check(self, value: f64) -> Result<f64> {
        if self.admits(value) {
            Ok(value)
        } else {
            Err(Error::OutOfDomain {
                name: self.name(),
                value,
                domain: self.domain(),
            })
        }
    }
}

/// Market behavior: winner-take-all factor, stickiness, decay rate,
/// resistance shape, and the choice of allocator and modifier order.
///
/// Scalar fields can only be set through checked setters, so a value of this
/// type is always within its domain.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawBehavior"))]
pub struct BehaviorParams {
    wta: f64,
    #[cfg_attr(feature = "serde", serde(rename = "s"))]
    stickiness: f64,
    #[cfg_attr(feature = "serde", serde(rename = "k"))]
    decay: f64,
    gamma: f64,
    c: f64,
    allocator: Allocator,
    modifier_order: ModifierOrder,
    refresh_mode: RefreshMode,
}

impl Default for BehaviorParams {
    fn default() -> Self {
        Self {
            wta: 0.0,
            stickiness: 0.0,
            decay: 1.0,
            gamma: -1.0,
            c: 0.0,
            allocator: Allocator::Ratio,
            modifier_order: ModifierOrder::PsychologyThenWta,
            refresh_mode: RefreshMode::MarketVector,
        }
    }
}

impl BehaviorParams {
    pub fn wta(&self) -> f64 {
        self.wta
    }
    pub fn stickiness(&self) -> f64 {
        self.stickiness
    }
    pub fn decay(&self) -> f64 {
        self.decay
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn allocator(&self) -> Allocator {
        self.allocator
    }
    pub fn modifier_order(&self) -> ModifierOrder {
        self.modifier_order
    }
    pub fn refresh_mode(&self) -> RefreshMode {
        self.refresh_mode
    }

    pub fn get(&self, param: ScalarParam) -> f64 {
        match param {
            ScalarParam::Wta => self.wta,
            ScalarParam::Stickiness => self.stickiness,
            ScalarParam::Decay => self.decay,
            ScalarParam::Gamma => self.gamma,
            ScalarParam::C => self.c,
        }
    }

    pub fn with(mut self, param: ScalarParam, value: f64) -> Result<Self> {
        let value = param.check(value)?;
        match param {
            ScalarParam::Wta => self.wta = value,
            ScalarParam::Stickiness => self.stickiness = value,
            ScalarParam::Decay => self.decay = value,
            ScalarParam::Gamma => self.gamma = value,
            ScalarParam::C => self.c = value,
        }
        Ok(self)
    }

    pub fn with_wta(self, wta: f64) -> Result<Self> {
        self.with(ScalarParam::Wta, wta)
    }
    pub fn with_stickiness(self, s: f64) -> Result<Self> {
        self.with(ScalarParam::Stickiness, s)
    }
    pub fn with_decay(self, k: f64) -> Result<Self> {
        self.with(ScalarParam::Decay, k)
    }
    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        self.with(ScalarParam::Gamma, gamma)
    }
    pub fn with_c(self, c: f64) -> Result<Self> {
        self.with(ScalarParam::C, c)
    }

    pub fn with_allocator(mut self, allocator: Allocator) -> Self {
        self.allocator = allocator;
        self
    }
    pub fn with_modifier_order(mut self, order: ModifierOrder) -> Self {
        self.modifier_order = order;
        self
    }
    pub fn with_refresh_mode(mut self, mode: RefreshMode) -> Self {
        self.refresh_mode = mode;
        self
    }
}

#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
struct RawBehavior {
    wta: f64,
    #[serde(rename = "s")]
    stickiness: f64,
    #[serde(rename = "k")]
    decay: f64,
    gamma: f64,
    c: f64,
    allocator: Allocator,
    modifier_order: ModifierOrder,
    refresh_mode: RefreshMode,
}

#[cfg(feature = "serde")]
impl TryFrom<RawBehavior> for BehaviorParams {
    type Error = Error;

    fn try_from(raw: RawBehavior) -> Result<Self> {
        Ok(BehaviorParams::default()
            .with_wta(raw.wta)?
            .with_stickiness(raw.stickiness)?
            .with_decay(raw.decay)?
            .with_gamma(raw.gamma)?
            .with_c(raw.c)?
            .with_allocator(raw.allocator)
            .with_modifier_order(raw.modifier_order)
            .with_refresh_mode(raw.refresh_mode))
    }
}

/// Segment sizes at one time, with the flows accumulated since the start.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MarketState {
    pub t: f64,
    pub sizes: Vec<f64>,
    pub cum_bnd: Vec<f64>,
    pub cum_rd: Vec<f64>,
    pub cum_od: Vec<f64>,
}

impl MarketState {
    pub fn initial(t: f64, sizes: Vec<f64>) -> Self {
        let n = sizes.len();
        Self {
            t,
            sizes,
            cum_bnd: alloc::vec![0.0; n],
            cum_rd: alloc::vec![0.0; n],
            cum_od: alloc::vec![0.0; n],
        }
    }

    pub fn total(&self) -> f64 {
        self.sizes.iter().sum()
    }

    /// Segment sizes divided by their total. All zeros when the market is empty.
    pub fn shares(&self) -> Vec<f64> {
        let total = self.total();
        if total > 0.0 {
            self.sizes.iter().map(|d| d / total).collect()
        } else {
            alloc::vec![0.0; self.sizes.len()]
        }
    }
}

/// States at every integrator step and the rates that advanced them:
/// `rates[k]` carries `states[k]` to `states[k + 1]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    pub scenario_id: String,
    pub params_used: BehaviorParams,
    pub states: Vec<MarketState>,
    pub rates: Vec<FlowRates>,
}

impl Trajectory {
    pub fn segment_count(&self) -> usize {
        self.states.first().map_or(0, |s| s.sizes.len())
    }

    pub fn last(&self) -> &MarketState {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }

    /// Index of the state nearest to `t`; the earlier state wins a tie.
    pub fn nearest_index(&self, t: f64) -> usize {
        let hi = self.states.partition_point(|s| s.t < t);
        if hi == 0 {
            return 0;
        }
        if hi == self.states.len() {
            return hi - 1;
        }
        if (self.states[hi].t - t) < (t - self.states[hi - 1].t) {
            hi
        } else {
            hi - 1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn scale() -> ScoreScale {
        ScoreScale::new(1.0, 10.0).unwrap()
    }

    #[test]
    fn scale_bounds() {
        assert!(ScoreScale::new(0.0, 10.0).is_ok());
        assert!(ScoreScale::new(5.0, 5.0).is_err());
        assert!(ScoreScale::new(-1.0, 5.0).is_err());
        assert_eq!(scale().normalize(5.5), 0.5);
    }

    #[test]
    fn out_of_range_cell_is_named() {
        let panel =
            AttributePanel::new(scale(), 1, 2, vec![0.0], vec![11.0, 5.0], vec![5.0, 5.0]).unwrap();
        let report = validate_panel(&panel);
        assert_eq!(
            report.violations,
            vec![Violation::OutOfRange {
                table: ScoreTable::Perf,
                stamp: 0,
                segment: 0,
                attribute: 0,
                value: 11.0
            }]
        );
    }

    #[test]
    fn zero_importance_row_reported() {
        let s = ScoreScale::new(0.0, 10.0).unwrap();
        let panel =
            AttributePanel::new(s, 1, 2, vec![0.0], vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let report = validate_panel(&panel);
        assert_eq!(
            report.violations,
            vec![Violation::ZeroImportance {
                stamp: 0,
                segment: 0
            }]
        );
        assert!(report.to_string().contains("zero importance row"));
    }

    #[test]
    fn times_must_increase() {
        let panel = AttributePanel::new(
            scale(),
            1,
            1,
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert!(matches!(
            validate_panel(&panel).violations[..],
            [Violation::TimeOrder { index: 1, .. }]
        ));
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(AttributePanel::new(scale(), 2, 2, vec![0.0], vec![1.0; 3], vec![1.0; 4]).is_err());
        assert!(AttributePanel::new(scale(), 0, 2, vec![0.0], vec![], vec![]).is_err());
    }

    #[test]
    fn left_hold_and_linear_lookup() {
        let panel = AttributePanel::new(
            scale(),
            1,
            1,
            vec![1.0, 2.0, 4.0],
            vec![2.0, 4.0, 8.0],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        assert_eq!(panel.perf_at(1.5, 0), vec![2.0]);
        assert_eq!(panel.perf_at(2.0, 0), vec![4.0]);
        assert_eq!(panel.perf_at(0.0, 0), vec![2.0]);
        assert_eq!(panel.perf_at(9.0, 0), vec![8.0]);
        let linear = panel.with_interpolation(Interpolation::Linear);
        assert_eq!(linear.perf_at(1.5, 0), vec![3.0]);
        assert_eq!(linear.perf_at(3.0, 0), vec![6.0]);
        assert_eq!(linear.perf_at(4.0, 0), vec![8.0]);
    }

    #[test]
    fn market_importance_is_broadcast() {
        let panel = AttributePanel::with_market_importance(
            scale(),
            2,
            2,
            vec![0.0],
            vec![1.0, 2.0, 3.0, 4.0],
            &[8.0, 2.0],
        )
        .unwrap();
        assert_eq!(panel.imp_at(0.0, 1), vec![8.0, 2.0]);
        let changed = panel.with_importance(1, 5.0).unwrap();
        assert_eq!(changed.imp_at(0.0, 0), vec![8.0, 5.0]);
        assert_eq!(changed.imp_at(0.0, 1), vec![8.0, 5.0]);
    }

    #[test]
    fn behavior_setters_enforce_domains() {
        let p = BehaviorParams::default();
        assert!(p.with_wta(1.5).is_err());
        assert!(p.with_gamma(0.0).is_err());
        assert!(p.with_decay(50.0).is_ok());
        assert!(p.with_decay(50.1).is_err());
        assert!(p.with_c(-0.1).is_err());
        assert!(p.with_stickiness(f64::NAN).is_err());
        assert_eq!(p.with_wta(0.3).unwrap().wta(), 0.3);
    }

    #[test]
    fn nearest_state_prefers_earlier_on_tie() {
        let states = [0.0, 1.0, 2.0]
            .iter()
            .map(|&t| MarketState::initial(t, vec![1.0]))
            .collect();
        let traj = Trajectory {
            scenario_id: "x".into(),
            params_used: BehaviorParams::default(),
            states,
            rates: vec![],
        };
        assert_eq!(traj.nearest_index(0.5), 0);
        assert_eq!(traj.nearest_index(0.6), 1);
        assert_eq!(traj.nearest_index(5.0), 2);
        assert_eq!(traj.nearest_index(-1.0), 0);
    }
}
