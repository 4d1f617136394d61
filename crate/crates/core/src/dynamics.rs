//! Segment flow equations and their integration.
//!
//! Each segment loses `d_od` to obsolescence and gains `d_rd` (refreshed
//! purchases) plus `d_bnd` (customers new to the market):
//!
//! ```text
//! dD_i/dt = d_bnd_i + d_rd_i - d_od_i
//! ```
//!
//! Refresh redistributes exactly what obsolescence removes, so the total
//! only grows by the new-customer rate. The cumulative flows are integrated
//! alongside the sizes, which keeps `D = D0 + cum_bnd + cum_rd - cum_od`
//! checkable at every step.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::allocation::{
    allocate, allocation_matrix, Allocation, AllocationFlag, AllocationMatrix,
};
use crate::behavior::{modify, ModifiedScores};
use crate::competitiveness::competitiveness_view;
use crate::error::{Error, Result};
use crate::model::{
    locate, validate_panel, AttributePanel, BehaviorParams, Interpolation, MarketState, Trajectory,
};
use crate::ode::{step_slope, Method};

/// How obsolescence outflow is handed back to the segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RefreshMode {
    /// One share vector from market-level scores, applied to the pooled outflow.
    #[default]
    MarketVector,
    /// One share column per source segment, from pairwise scores.
    PairwiseMatrix,
}

/// Which market scores drive obsolescence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DecayScores {
    /// True competitiveness; modifiers only shape purchase decisions.
    #[default]
    Raw,
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsOptions {
    pub decay_scores: DecayScores,
    /// Extra diagonal weight in the pairwise refresh matrix, in `[0, 1]`.
    pub familiarity_bias: f64,
    pub softmax_temperature: f64,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        Self {
            decay_scores: DecayScores::Raw,
            familiarity_bias: 0.0,
            softmax_temperature: 1.0,
        }
    }
}

impl DynamicsOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.familiarity_bias) {
            return Err(Error::OutOfDomain {
                name: "familiarity_bias",
                value: self.familiarity_bias,
                domain: "[0, 1]",
            });
        }
        if !(self.softmax_temperature > 0.0 && self.softmax_temperature.is_finite()) {
            return Err(Error::OutOfDomain {
                name: "softmax_temperature",
                value: self.softmax_temperature,
                domain: "(0, inf)",
            });
        }
        Ok(())
    }
}

/// Rate at which customers new to the market arrive.
#[derive(Debug, Clone, PartialEq)]
pub enum NewCustomerSeries {
    Constant(f64),
    Stamped {
        times: Vec<f64>,
        rates: Vec<f64>,
        interpolation: Interpolation,
    },
}

impl NewCustomerSeries {
    pub fn rate_at(&self, t: f64) -> f64 {
        match self {
            NewCustomerSeries::Constant(rate) => *rate,
            NewCustomerSeries::Stamped {
                times,
                rates,
                interpolation,
            } => {
                let pos = locate(times, t, *interpolation);
                pos.blend(rates[pos.lo], rates[pos.hi])
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |value: f64| Error::OutOfDomain {
            name: "new_customers",
            value,
            domain: "[0, inf)",
        };
        match self {
            NewCustomerSeries::Constant(rate) => {
                if !(*rate >= 0.0 && rate.is_finite()) {
                    return Err(bad(*rate));
                }
            }
            NewCustomerSeries::Stamped { times, rates, .. } => {
                if times.is_empty() || times.len() != rates.len() {
                    return Err(Error::Dimension(alloc::format!(
                        "new-customer series has {} stamps and {} rates",
                        times.len(),
                        rates.len()
                    )));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) || !times[0].is_finite() {
                    return Err(Error::Dimension(
                        "new-customer stamps must be strictly increasing".into(),
                    ));
                }
                if let Some(&r) = rates.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
                    return Err(bad(r));
                }
            }
        }
        Ok(())
    }
}

/// Everything a simulation needs apart from the integrator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    id: String,
    panel: AttributePanel,
    initial_sizes: Vec<f64>,
    new_customers: NewCustomerSeries,
    behavior: BehaviorParams,
    options: DynamicsOptions,
}

impl Scenario {
    pub fn new(
        id: impl Into<String>,
        panel: AttributePanel,
        initial_sizes: Vec<f64>,
        new_customers: NewCustomerSeries,
        behavior: BehaviorParams,
        options: DynamicsOptions,
    ) -> Result<Self> {
        let report = validate_panel(&panel);
        if !report.is_ok() {
            return Err(Error::InvalidPanel(report));
        }
        if initial_sizes.len() != panel.segment_count() {
            return Err(Error::Dimension(alloc::format!(
                "{} initial sizes for {} segments",
                initial_sizes.len(),
                panel.segment_count()
            )));
        }
        if let Some(&d) = initial_sizes
            .iter()
            .find(|d| !(**d >= 0.0 && d.is_finite()))
        {
            return Err(Error::OutOfDomain {
                name: "initial_sizes",
                value: d,
                domain: "[0, inf)",
            });
        }
        new_customers.validate()?;
        options.validate()?;
        Ok(Self {
            id: id.into(),
            panel,
            initial_sizes,
            new_customers,
            behavior,
            options,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn panel(&self) -> &AttributePanel {
        &self.panel
    }
    pub fn initial_sizes(&self) -> &[f64] {
        &self.initial_sizes
    }
    pub fn new_customers(&self) -> &NewCustomerSeries {
        &self.new_customers
    }
    pub fn behavior(&self) -> &BehaviorParams {
        &self.behavior
    }
    pub fn options(&self) -> &DynamicsOptions {
        &self.options
    }
    pub fn segment_count(&self) -> usize {
        self.panel.segment_count()
    }
    pub fn start_time(&self) -> f64 {
        self.panel.times()[0]
    }

    pub fn with_behavior(&self, behavior: BehaviorParams) -> Self {
        Self {
            behavior,
            ..self.clone()
        }
    }

    pub fn with_panel(&self, panel: AttributePanel) -> Result<Self> {
        Self::new(
            self.id.clone(),
            panel,
            self.initial_sizes.clone(),
            self.new_customers.clone(),
            self.behavior,
            self.options,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt: f64,
    /// Absolute end time.
    pub horizon: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Euler,
            dt: 0.05,
            horizon: 1.0,
        }
    }
}

impl IntegratorConfig {
    /// Number of steps from `start` to the horizon. The last step is
    /// shortened when the span is not a whole number of steps.
    pub fn step_count(&self, start: f64) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::StepSize(self.dt));
        }
        if !(self.horizon >= start) || !self.horizon.is_finite() {
            return Err(Error::Horizon {
                horizon: self.horizon,
                first: start,
            });
        }
        let raw = (self.horizon - start) / self.dt;
        let whole = libm::round(raw);
        let steps = if (raw - whole).abs() < 1e-9 {
            whole
        } else {
            libm::ceil(raw)
        };
        Ok(steps as usize)
    }

    /// True when an explicit Euler step could remove more than a segment
    /// holds (`k * dt >= 1`).
    pub fn euler_unstable(&self, decay: f64) -> bool {
        self.method == Method::Euler && decay * self.dt >= 1.0
    }
}

/// Flow rates at one instant (or, for multi-stage steps, the effective rates
/// of the step).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlowRates {
    /// Obsolescence outflow, non-negative.
    pub od: Vec<f64>,
    /// Refresh inflow, non-negative; sums to the total of `od`.
    pub rd: Vec<f64>,
    /// New-customer inflow, non-negative; sums to `nc_rate`.
    pub bnd: Vec<f64>,
    /// `bnd + rd - od`.
    pub net: Vec<f64>,
    pub nc_rate: f64,
    /// Most competitive segment after modification.
    pub i_max: usize,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Vec::is_empty")
    )]
    pub flags: Vec<AllocationFlag>,
}

impl FlowRates {
    fn assemble(
        od: Vec<f64>,
        rd: Vec<f64>,
        bnd: Vec<f64>,
        nc_rate: f64,
        i_max: usize,
        flags: Vec<AllocationFlag>,
    ) -> Self {
        let net = bnd
            .iter()
            .zip(&rd)
            .zip(&od)
            .map(|((b, r), o)| b + (r - o))
            .collect();
        Self {
            od,
            rd,
            bnd,
            net,
            nc_rate,
            i_max,
            flags,
        }
    }

    /// Combined inflow `rd + bnd`.
    pub fn inflow(&self) -> Vec<f64> {
        self.rd.iter().zip(&self.bnd).map(|(r, b)| r + b).collect()
    }
}

/// Outflow per segment: `k * (1 - a_norm) * (1 - s) * D`, where `a_norm` is
/// the market score mapped onto `[0, 1]`.
pub fn obsolescence_rate(
    sizes: &[f64],
    market_norm: &[f64],
    decay: f64,
    stickiness: f64,
) -> Vec<f64> {
    sizes
        .iter()
        .zip(market_norm)
        .map(|(d, a)| decay * (1.0 - a) * (1.0 - stickiness) * d)
        .collect()
}

/// Where refreshed demand goes, independent of how much there is.
#[derive(Debug, Clone, PartialEq)]
pub enum RefreshPlan {
    Vector(Allocation),
    Matrix(AllocationMatrix),
}

impl RefreshPlan {
    pub fn build(
        scores: &ModifiedScores,
        params: &BehaviorParams,
        options: &DynamicsOptions,
    ) -> Self {
        match params.refresh_mode() {
            RefreshMode::MarketVector => RefreshPlan::Vector(allocate(
                &scores.market,
                params.allocator(),
                params.wta(),
                scores.i_max,
                options.softmax_temperature,
            )),
            RefreshMode::PairwiseMatrix => RefreshPlan::Matrix(
                allocation_matrix(
                    &scores.pairwise,
                    params.allocator(),
                    params.wta(),
                    scores.i_max,
                    options.softmax_temperature,
                )
                .with_familiarity_bias(options.familiarity_bias),
            ),
        }
    }

    pub fn apply(&self, outflow: &[f64]) -> Vec<f64> {
        match self {
            RefreshPlan::Vector(h) => {
                let pool: f64 = outflow.iter().sum();
                h.shares.iter().map(|s| s * pool).collect()
            }
            RefreshPlan::Matrix(h) => h.apply(outflow),
        }
    }

    fn flags(&self) -> Vec<AllocationFlag> {
        match self {
            RefreshPlan::Vector(h) => h.flag.into_iter().collect(),
            RefreshPlan::Matrix(h) => h.flags.iter().flatten().copied().collect(),
        }
    }
}

/// Refresh inflow for a given obsolescence outflow.
pub fn refresh_rates(
    outflow: &[f64],
    scores: &ModifiedScores,
    params: &BehaviorParams,
    options: &DynamicsOptions,
) -> (Vec<f64>, Vec<AllocationFlag>) {
    let plan = RefreshPlan::build(scores, params, options);
    (plan.apply(outflow), plan.flags())
}

/// New-customer inflow, allocated on market-level modified scores.
pub fn new_entrant_rates(
    nc_rate: f64,
    scores: &ModifiedScores,
    params: &BehaviorParams,
    options: &DynamicsOptions,
) -> (Vec<f64>, Option<AllocationFlag>) {
    let h = allocate(
        &scores.market,
        params.allocator(),
        params.wta(),
        scores.i_max,
        options.softmax_temperature,
    );
    (h.shares.iter().map(|s| s * nc_rate).collect(), h.flag)
}

/// Flows at `(t, sizes)` with the refresh allocation kept separate, so the
/// outflow can be rescaled without re-scoring.
struct FlowPlan {
    od: Vec<f64>,
    bnd: Vec<f64>,
    nc_rate: f64,
    refresh: RefreshPlan,
    i_max: usize,
    flags: Vec<AllocationFlag>,
}

impl FlowPlan {
    fn at(scenario: &Scenario, sizes: &[f64], t: f64) -> Result<Self> {
        let params = scenario.behavior();
        let options = scenario.options();
        let scale = scenario.panel().scale();
        let view = competitiveness_view(scenario.panel(), t)?;
        let scores = modify(&view, params)?;

        let decay_source = match options.decay_scores {
            DecayScores::Raw => &view.market,
            DecayScores::Modified => &scores.market,
        };
        let market_norm: Vec<f64> = decay_source.iter().map(|&a| scale.normalize(a)).collect();
        let od = obsolescence_rate(sizes, &market_norm, params.decay(), params.stickiness());

        let nc_rate = scenario.new_customers().rate_at(t);
        let (bnd, bnd_flag) = new_entrant_rates(nc_rate, &scores, params, options);
        let refresh = RefreshPlan::build(&scores, params, options);
        let mut flags: Vec<AllocationFlag> = bnd_flag.into_iter().collect();
        for f in refresh.flags() {
            if !flags.contains(&f) {
                flags.push(f);
            }
        }
        Ok(Self {
            od,
            bnd,
            nc_rate,
            refresh,
            i_max: scores.i_max,
            flags,
        })
    }

    fn rates(&self) -> FlowRates {
        FlowRates::assemble(
            self.od.clone(),
            self.refresh.apply(&self.od),
            self.bnd.clone(),
            self.nc_rate,
            self.i_max,
            self.flags.clone(),
        )
    }

    /// Rates for a step of length `h` with outflows scaled down wherever the
    /// unlimited step would leave a segment negative. Scaled segments land
    /// at zero; the refresh pool shrinks with them.
    fn limited_rates(&self, sizes: &[f64], h: f64) -> FlowRates {
        let mut od = self.od.clone();
        let mut rd = self.refresh.apply(&od);
        for _ in 0..100 {
            let mut changed = false;
            for i in 0..od.len() {
                let next = sizes[i] + h * (self.bnd[i] + (rd[i] - od[i]));
                if next < 0.0 && od[i] > 0.0 {
                    od[i] = ((sizes[i] + h * (self.bnd[i] + rd[i])) / h).max(0.0);
                    changed = true;
                }
            }
            rd = self.refresh.apply(&od);
            if !changed {
                break;
            }
        }
        FlowRates::assemble(
            od,
            rd,
            self.bnd.clone(),
            self.nc_rate,
            self.i_max,
            self.flags.clone(),
        )
    }
}

/// Instantaneous flow rates. Negative sizes are read as zero.
pub fn rhs(scenario: &Scenario, sizes: &[f64], t: f64) -> Result<FlowRates> {
    let clamped: Vec<f64> = sizes.iter().map(|d| d.max(0.0)).collect();
    Ok(FlowPlan::at(scenario, &clamped, t)?.rates())
}

fn would_go_negative(sizes: &[f64], h: f64, rates: &FlowRates) -> bool {
    sizes.iter().zip(&rates.net).any(|(d, r)| d + h * r < 0.0)
}

fn advance(
    scenario: &Scenario,
    method: Method,
    sizes: &[f64],
    t: f64,
    h: f64,
) -> Result<FlowRates> {
    let plan = FlowPlan::at(scenario, sizes, t)?;
    let euler = plan.rates();
    if method == Method::Euler {
        return Ok(if would_go_negative(sizes, h, &euler) {
            plan.limited_rates(sizes, h)
        } else {
            euler
        });
    }

    // Integrate sizes with the flow accountants and the new-customer count,
    // y = [D, cum_bnd, cum_rd, cum_od, cum_nc], so the recorded rates are the
    // step's effective rates.
    let n = sizes.len();
    let mut y0 = vec![0.0; 4 * n + 1];
    y0[..n].copy_from_slice(sizes);
    let slope = step_slope(method, t, &y0, h, |ts, y| -> Result<Vec<f64>> {
        let r = rhs(scenario, &y[..n], ts)?;
        let mut k = Vec::with_capacity(4 * n + 1);
        k.extend_from_slice(&r.net);
        k.extend_from_slice(&r.bnd);
        k.extend_from_slice(&r.rd);
        k.extend_from_slice(&r.od);
        k.push(r.nc_rate);
        Ok(k)
    })?;
    let rates = FlowRates::assemble(
        slope[3 * n..4 * n].to_vec(),
        slope[2 * n..3 * n].to_vec(),
        slope[n..2 * n].to_vec(),
        slope[4 * n],
        plan.i_max,
        plan.flags.clone(),
    );
    if would_go_negative(sizes, h, &rates) {
        // multi-stage rates cannot be rescaled consistently; take a limited
        // Euler step instead
        return Ok(plan.limited_rates(sizes, h));
    }
    Ok(rates)
}

/// Integrates a scenario from its first stamp to the configured horizon.
///
/// Runs are deterministic: equal inputs give bit-identical trajectories.
pub fn simulate(scenario: &Scenario, config: &IntegratorConfig) -> Result<Trajectory> {
    let start = scenario.start_time();
    let steps = config.step_count(start)?;
    let mut state = MarketState::initial(start, scenario.initial_sizes().to_vec());
    let mut states = Vec::with_capacity(steps + 1);
    let mut rates = Vec::with_capacity(steps);

    for k in 0..steps {
        let t = state.t;
        let t_next = if k + 1 == steps {
            config.horizon
        } else {
            start + (k + 1) as f64 * config.dt
        };
        let h = t_next - t;
        let r = advance(scenario, config.method, &state.sizes, t, h)?;

        let mut next = state.clone();
        next.t = t_next;
        for i in 0..next.sizes.len() {
            // the limiter lands scaled segments on zero up to rounding
            next.sizes[i] = (state.sizes[i] + h * r.net[i]).max(0.0);
            next.cum_bnd[i] += h * r.bnd[i];
            next.cum_rd[i] += h * r.rd[i];
            next.cum_od[i] += h * r.od[i];
        }
        states.push(core::mem::replace(&mut state, next));
        rates.push(r);
    }
    states.push(state);

    Ok(Trajectory {
        scenario_id: scenario.id().into(),
        params_used: *scenario.behavior(),
        states,
        rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::Allocator;
    use crate::behavior::ModifierOrder;
    use crate::model::ScoreScale;
    use crate::reference;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn scores_with(market: Vec<f64>, i_max: usize) -> ModifiedScores {
        let n = market.len();
        ModifiedScores {
            market,
            pairwise: crate::matrix::SquareMatrix::zeros(n),
            i_max,
            provenance: crate::behavior::Provenance {
                wta: 0.0,
                gamma: -1.0,
                c: 0.0,
                order: ModifierOrder::None,
            },
        }
    }

    #[test]
    fn obsolescence_examples() {
        let out = obsolescence_rate(&[100.0], &[0.9], 2.0, 0.5);
        assert!((out[0] - 10.0).abs() < 1e-12);
        assert_eq!(obsolescence_rate(&[100.0], &[1.0], 2.0, 0.5), vec![0.0]);
        assert_eq!(obsolescence_rate(&[100.0], &[0.2], 2.0, 1.0), vec![0.0]);
    }

    #[test]
    fn refresh_examples() {
        let od = [5.0, 3.0, 2.0];
        let wta_one = BehaviorParams::default().with_wta(1.0).unwrap();
        let opts = DynamicsOptions::default();
        let (rd, _) = refresh_rates(&od, &scores_with(vec![1.0, 2.0, 3.0], 1), &wta_one, &opts);
        assert_eq!(rd, vec![0.0, 10.0, 0.0]);

        // ratio shares (0.5, 0.3, 0.2)
        let ratio = BehaviorParams::default();
        let (rd, _) = refresh_rates(&od, &scores_with(vec![5.0, 3.0, 2.0], 0), &ratio, &opts);
        assert!(close(&rd, &[5.0, 3.0, 2.0], 1e-12));

        let (rd, _) = refresh_rates(
            &[0.0; 3],
            &scores_with(vec![5.0, 3.0, 2.0], 0),
            &ratio,
            &opts,
        );
        assert_eq!(rd, vec![0.0; 3]);
    }

    #[test]
    fn new_entrant_examples() {
        let opts = DynamicsOptions::default();
        let ratio = BehaviorParams::default();
        let scores = scores_with(vec![5.0, 3.0, 2.0], 0);
        let (bnd, _) = new_entrant_rates(50.0, &scores, &ratio, &opts);
        assert!(close(&bnd, &[25.0, 15.0, 10.0], 1e-12));
        assert_eq!(
            new_entrant_rates(0.0, &scores, &ratio, &opts).0,
            vec![0.0; 3]
        );
        let wta_one = ratio.with_wta(1.0).unwrap();
        assert_eq!(
            new_entrant_rates(50.0, &scores, &wta_one, &opts).0,
            vec![50.0, 0.0, 0.0]
        );
    }

    #[test]
    fn frozen_market() {
        let sc = reference::table1_scenario();
        let frozen = Scenario::new(
            "frozen",
            sc.panel().clone(),
            sc.initial_sizes().to_vec(),
            NewCustomerSeries::Constant(0.0),
            sc.behavior().with_stickiness(1.0).unwrap(),
            DynamicsOptions::default(),
        )
        .unwrap();
        let r = rhs(&frozen, frozen.initial_sizes(), 1.0).unwrap();
        assert_eq!(r.net, vec![0.0; 3]);
        let traj = simulate(&frozen, &reference::table1_integrator()).unwrap();
        assert!(traj
            .states
            .iter()
            .all(|s| s.sizes == frozen.initial_sizes()));
    }

    #[test]
    fn single_segment_returns_all_outflow() {
        let panel = AttributePanel::new(
            ScoreScale::new(1.0, 10.0).unwrap(),
            1,
            1,
            vec![0.0],
            vec![4.0],
            vec![1.0],
        )
        .unwrap();
        for allocator in [
            Allocator::Ratio,
            Allocator::Softmax,
            Allocator::Redistribution,
        ] {
            for mode in [RefreshMode::MarketVector, RefreshMode::PairwiseMatrix] {
                let behavior = BehaviorParams::default()
                    .with_wta(0.4)
                    .unwrap()
                    .with_allocator(allocator)
                    .with_refresh_mode(mode);
                let sc = Scenario::new(
                    "one",
                    panel.clone(),
                    vec![50.0],
                    NewCustomerSeries::Constant(3.0),
                    behavior,
                    DynamicsOptions::default(),
                )
                .unwrap();
                let r = rhs(&sc, &[50.0], 0.0).unwrap();
                assert_eq!(r.rd, r.od);
                assert_eq!(r.net, r.bnd);
            }
        }
    }

    #[test]
    fn table1_refresh_conserves_outflow() {
        let sc = reference::table1_scenario();
        let r = rhs(&sc, sc.initial_sizes(), 1.0).unwrap();
        let out: f64 = r.od.iter().sum();
        let back: f64 = r.rd.iter().sum();
        assert!(out > 0.0);
        assert!((out - back).abs() <= 1e-9 * out.max(1.0));
        assert!((r.bnd.iter().sum::<f64>() - 20.0).abs() <= 1e-9 * 20.0);
    }

    #[test]
    fn step_count_and_errors() {
        let cfg = IntegratorConfig {
            method: Method::Euler,
            dt: 0.05,
            horizon: 6.0,
        };
        assert_eq!(cfg.step_count(1.0).unwrap(), 100);
        let odd = IntegratorConfig { dt: 0.3, ..cfg };
        assert_eq!(odd.step_count(1.0).unwrap(), 17);
        assert!(matches!(
            IntegratorConfig { dt: 0.0, ..cfg }.step_count(1.0),
            Err(Error::StepSize(_))
        ));
        assert!(matches!(
            IntegratorConfig {
                horizon: 0.5,
                ..cfg
            }
            .step_count(1.0),
            Err(Error::Horizon { .. })
        ));
        assert_eq!(
            IntegratorConfig {
                horizon: 1.0,
                ..cfg
            }
            .step_count(1.0)
            .unwrap(),
            0
        );
    }

    #[test]
    fn shortened_last_step_lands_on_horizon() {
        let sc = reference::table1_scenario();
        let cfg = IntegratorConfig {
            method: Method::Euler,
            dt: 0.3,
            horizon: 6.0,
        };
        let traj = simulate(&sc, &cfg).unwrap();
        assert_eq!(traj.states.len(), 18);
        assert_eq!(traj.last().t, 6.0);
        assert_eq!(traj.rates.len(), traj.states.len() - 1);
    }

    #[test]
    fn limiter_keeps_sizes_nonnegative_and_conserves() {
        // k * dt = 5: an unlimited Euler step would overshoot badly
        let sc = reference::table1_scenario();
        let harsh = sc.with_behavior(
            sc.behavior()
                .with_decay(50.0)
                .unwrap()
                .with_stickiness(0.0)
                .unwrap(),
        );
        let cfg = IntegratorConfig {
            method: Method::Euler,
            dt: 0.1,
            horizon: 6.0,
        };
        assert!(cfg.euler_unstable(50.0));
        let traj = simulate(&harsh, &cfg).unwrap();
        for (state, r) in traj.states.iter().zip(&traj.rates) {
            assert!(state.sizes.iter().all(|&d| d >= 0.0));
            let out: f64 = r.od.iter().sum();
            let back: f64 = r.rd.iter().sum();
            assert!((out - back).abs() <= 1e-9 * out.max(1.0));
        }
        let first: f64 = traj.states[0].total();
        let last: f64 = traj.last().total();
        // mass only enters through new customers
        assert!((last - first - 20.0 * 5.0).abs() < 1e-6);
    }

    #[test]
    fn rk4_runs_and_records_effective_rates() {
        let sc = reference::table1_scenario();
        let cfg = IntegratorConfig {
            method: Method::Rk4,
            dt: 0.05,
            horizon: 6.0,
        };
        let traj = simulate(&sc, &cfg).unwrap();
        for (w, r) in traj.states.windows(2).zip(&traj.rates) {
            let h = w[1].t - w[0].t;
            for i in 0..3 {
                let expected = w[0].sizes[i] + h * r.net[i];
                assert!((w[1].sizes[i] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stamped_new_customers() {
        let series = NewCustomerSeries::Stamped {
            times: vec![0.0, 2.0],
            rates: vec![10.0, 30.0],
            interpolation: Interpolation::Linear,
        };
        assert!(series.validate().is_ok());
        assert_eq!(series.rate_at(1.0), 20.0);
        assert_eq!(series.rate_at(5.0), 30.0);
        let bad = NewCustomerSeries::Stamped {
            times: vec![0.0],
            rates: vec![-1.0],
            interpolation: Interpolation::LeftHold,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn scenario_rejects_invalid_inputs() {
        let sc = reference::table1_scenario();
        let bad_sizes = Scenario::new(
            "x",
            sc.panel().clone(),
            vec![1.0, 2.0],
            NewCustomerSeries::Constant(1.0),
            *sc.behavior(),
            DynamicsOptions::default(),
        );
        assert!(matches!(bad_sizes, Err(Error::Dimension(_))));
        let bad_opts = Scenario::new(
            "x",
            sc.panel().clone(),
            sc.initial_sizes().to_vec(),
            NewCustomerSeries::Constant(1.0),
            *sc.behavior(),
            DynamicsOptions {
                familiarity_bias: 2.0,
                ..DynamicsOptions::default()
            },
        );
        assert!(bad_opts.is_err());
    }
}
