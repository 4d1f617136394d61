//! Fitting behavior parameters and attribute importance to observed market
//! shares.
//!
//! The search is a Nelder-Mead simplex run in the unit box (every free
//! parameter rescaled to `[0, 1]`), with candidates projected onto the box,
//! restarted from points drawn by a seeded ChaCha generator. The objective is
//! piecewise smooth at best (winner switches make it kink), so no gradients
//! are used.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{simulate, IntegratorConfig, Scenario};
use crate::error::{Error, Result};
use crate::model::{ScalarParam, Trajectory};

/// A parameter the fitter can move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitParam {
    Behavior(ScalarParam),
    /// Market-wide importance of one attribute, at every stamp.
    Importance(usize),
}

impl FitParam {
    pub fn name(&self) -> String {
        match self {
            FitParam::Behavior(p) => p.name().to_string(),
            FitParam::Importance(z) => format!("importance[{z}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamBound {
    pub param: FitParam,
    pub lower: f64,
    pub upper: f64,
    pub initial: f64,
    pub fixed: bool,
}

impl ParamBound {
    pub fn free(param: FitParam, lower: f64, upper: f64, initial: f64) -> Self {
        Self {
            param,
            lower,
            upper,
            initial,
            fixed: false,
        }
    }

    fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Moves with the search: not fixed and with a box of positive width.
    fn searched(&self) -> bool {
        !self.fixed && self.width() > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    /// Mean squared error of segment shares.
    #[default]
    Shares,
    /// Mean squared error of absolute segment sizes.
    Sizes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub params: Vec<ParamBound>,
    /// Number of local searches, the first from the initial point.
    pub multistart: usize,
    pub loss: LossKind,
}

impl ParamSpec {
    pub fn new(params: Vec<ParamBound>) -> Self {
        Self {
            params,
            multistart: 5,
            loss: LossKind::Shares,
        }
    }

    /// Checks the boxes against the scenario: ordered bounds, initial inside,
    /// every bound within the parameter's domain.
    pub fn check(&self, scenario: &Scenario) -> Result<()> {
        if !self.params.iter().any(|p| !p.fixed) {
            return Err(Error::NoFreeParameters);
        }
        let scale = scenario.panel().scale();
        for p in &self.params {
            let infeasible = |detail: String| Error::InfeasibleBounds {
                name: p.param.name(),
                detail,
            };
            if !(p.lower <= p.upper) {
                return Err(infeasible(format!("lower {} > upper {}", p.lower, p.upper)));
            }
            if !(p.lower <= p.initial && p.initial <= p.upper) {
                return Err(infeasible(format!(
                    "initial {} outside [{}, {}]",
                    p.initial, p.lower, p.upper
                )));
            }
            let admits = |v: f64| match p.param {
                FitParam::Behavior(s) => s.admits(v),
                FitParam::Importance(_) => scale.contains(v),
            };
            if !admits(p.lower) || !admits(p.upper) {
                return Err(infeasible(format!(
                    "box [{}, {}] leaves the parameter's domain",
                    p.lower, p.upper
                )));
            }
            if let FitParam::Importance(z) = p.param {
                if z >= scenario.panel().attribute_count() {
                    return Err(Error::AttributeIndex {
                        index: z,
                        count: scenario.panel().attribute_count(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Observed shares (or sizes) at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub t: f64,
    pub values: Vec<f64>,
}

fn mse(observed: &[Observation], traj: &Trajectory, kind: LossKind) -> Result<f64> {
    if observed.is_empty() {
        return Err(Error::EmptyObservations);
    }
    let n = traj.segment_count();
    let (first, last) = (traj.states[0].t, traj.last().t);
    let mut total = 0.0;
    for obs in observed {
        if obs.values.len() != n {
            return Err(Error::Observation {
                t: obs.t,
                detail: format!("{} values for {n} segments", obs.values.len()),
            });
        }
        if !(obs.t >= first && obs.t <= last) {
            return Err(Error::Observation {
                t: obs.t,
                detail: format!("outside the simulated span [{first}, {last}]"),
            });
        }
        let state = &traj.states[traj.nearest_index(obs.t)];
        let simulated = match kind {
            LossKind::Shares => {
                let sum: f64 = obs.values.iter().sum();
                if (sum - 1.0).abs() > 1e-6 {
                    return Err(Error::Observation {
                        t: obs.t,
                        detail: format!("shares sum to {sum}, not 1"),
                    });
                }
                state.shares()
            }
            LossKind::Sizes => state.sizes.clone(),
        };
        total += obs
            .values
            .iter()
            .zip(&simulated)
            .map(|(o, s)| (o - s) * (o - s))
            .sum::<f64>();
    }
    Ok(total / (observed.len() * n) as f64)
}

/// Mean squared share error over every observed stamp and segment, each
/// stamp matched to the nearest trajectory state.
pub fn share_loss(observed: &[Observation], traj: &Trajectory) -> Result<f64> {
    mse(observed, traj, LossKind::Shares)
}

pub fn size_loss(observed: &[Observation], traj: &Trajectory) -> Result<f64> {
    mse(observed, traj, LossKind::Sizes)
}

/// Loss change when one fitted parameter moves by 5% at the optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct Sensitivity {
    pub param: FitParam,
    pub value: f64,
    pub loss_down: f64,
    pub loss_up: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Best value of every parameter in the spec, in spec order.
    pub params: Vec<(FitParam, f64)>,
    /// The scenario with the best parameters applied.
    pub scenario: Scenario,
    pub final_loss: f64,
    /// Best loss seen after each evaluation.
    pub loss_trace: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
    pub seed: u64,
    pub sensitivity: Vec<Sensitivity>,
}

/// Applies parameter values to a scenario.
pub fn apply_params(scenario: &Scenario, values: &[(FitParam, f64)]) -> Result<Scenario> {
    let mut behavior = *scenario.behavior();
    let mut panel = None;
    for &(param, value) in values {
        match param {
            FitParam::Behavior(p) => behavior = behavior.with(p, value)?,
            FitParam::Importance(z) => {
                let base = panel.as_ref().unwrap_or(scenario.panel());
                panel = Some(base.with_importance(z, value)?);
            }
        }
    }
    let out = scenario.with_behavior(behavior);
    match panel {
        Some(p) => out.with_panel(p),
        None => Ok(out),
    }
}

struct Objective<'a> {
    scenario: &'a Scenario,
    config: &'a IntegratorConfig,
    spec: &'a ParamSpec,
    observed: &'a [Observation],
    /// Indices into `spec.params` of the searched parameters.
    searched: Vec<usize>,
    evaluations: usize,
    budget: usize,
    best: Option<(f64, Vec<f64>)>,
    trace: Vec<f64>,
}

impl Objective<'_> {
    fn exhausted(&self) -> bool {
        self.evaluations >= self.budget
    }

    /// Full parameter vector for a point of the unit box.
    fn values(&self, unit: &[f64]) -> Vec<(FitParam, f64)> {
        let mut values: Vec<(FitParam, f64)> = self
            .spec
            .params
            .iter()
            .map(|p| (p.param, p.initial))
            .collect();
        for (&k, &u) in self.searched.iter().zip(unit) {
            let p = &self.spec.params[k];
            values[k].1 = (p.lower + u.clamp(0.0, 1.0) * p.width()).clamp(p.lower, p.upper);
        }
        values
    }

    fn loss_at(&self, values: &[(FitParam, f64)]) -> f64 {
        let run = apply_params(self.scenario, values)
            .and_then(|sc| simulate(&sc, self.config))
            .and_then(|traj| mse(self.observed, &traj, self.spec.loss));
        match run {
            Ok(loss) if loss.is_finite() => loss,
            _ => f64::INFINITY,
        }
    }

    fn eval(&mut self, unit: &[f64]) -> f64 {
        let loss = self.loss_at(&self.values(unit));
        self.evaluations += 1;
        if self.best.as_ref().is_none_or(|(b, _)| loss < *b) {
            self.best = Some((loss, unit.to_vec()));
        }
        self.trace.push(self.best.as_ref().map_or(loss, |b| b.0));
        loss
    }
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
const X_TOL: f64 = 1e-9;
const F_TOL: f64 = 1e-15;

fn project(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t * (b - a)
    let mut out: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect();
    project(&mut out);
    out
}

/// One bounded Nelder-Mead run from `start` (given with its loss).
/// Returns whether the simplex collapsed before the budget ran out.
fn nelder_mead(obj: &mut Objective<'_>, start: Vec<f64>, f_start: f64, budget: usize) -> bool {
    let dim = start.len();
    let stop_at = (obj.evaluations + budget).min(obj.budget);
    let over = |o: &Objective<'_>| o.evaluations >= stop_at;

    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.clone(), f_start)];
    for d in 0..dim {
        if over(obj) {
            return false;
        }
        let mut v = start.clone();
        v[d] = if v[d] + 0.1 <= 1.0 {
            v[d] + 0.1
        } else {
            v[d] - 0.1
        };
        let f = obj.eval(&v);
        simplex.push((v, f));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[dim].1 - simplex[0].1;
        let size = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if size < X_TOL || (spread.is_finite() && spread.abs() < F_TOL && size < 1e-6) {
            return true;
        }
        if over(obj) {
            return false;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|d| simplex[..dim].iter().map(|(v, _)| v[d]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();

        let reflected = lerp(&centroid, &worst.0, -REFLECT);
        let f_r = obj.eval(&reflected);
        if f_r < simplex[0].1 {
            if over(obj) {
                simplex[dim] = (reflected, f_r);
                continue;
            }
            let expanded = lerp(&centroid, &worst.0, -EXPAND);
            let f_e = obj.eval(&expanded);
            simplex[dim] = if f_e < f_r {
                (expanded, f_e)
            } else {
                (reflected, f_r)
            };
            continue;
        }
        if f_r < simplex[dim - 1].1 {
            simplex[dim] = (reflected, f_r);
            continue;
        }
        if over(obj) {
            return false;
        }
        let (contracted, f_c) = if f_r < worst.1 {
            let c = lerp(&centroid, &reflected, CONTRACT);
            let f = obj.eval(&c);
            (c, f)
        } else {
            let c = lerp(&centroid, &worst.0, CONTRACT);
            let f = obj.eval(&c);
            (c, f)
        };
        if f_c < worst.1.min(f_r) {
            simplex[dim] = (contracted, f_c);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if over(obj) {
                return false;
            }
            let v = lerp(&best, &vertex.0, SHRINK);
            let f = obj.eval(&v);
            *vertex = (v, f);
        }
    }
}

/// Fits the free parameters of `spec` to `observed`.
///
/// Deterministic for a given seed. The first evaluation is the initial
/// point, so the reported loss never exceeds it.
pub fn fit(
    scenario: &Scenario,
    config: &IntegratorConfig,
    spec: &ParamSpec,
    observed: &[Observation],
    budget: usize,
    seed: u64,
) -> Result<FitResult> {
    spec.check(scenario)?;
    if budget == 0 {
        return Err(Error::ZeroBudget);
    }
    if observed.is_empty() {
        return Err(Error::EmptyObservations);
    }
    // surface malformed observations as errors rather than infinite loss
    let initial_values: Vec<(FitParam, f64)> =
        spec.params.iter().map(|p| (p.param, p.initial)).collect();
    let initial_scenario = apply_params(scenario, &initial_values)?;
    mse(observed, &simulate(&initial_scenario, config)?, spec.loss)?;

    let searched: Vec<usize> = (0..spec.params.len())
        .filter(|&k| spec.params[k].searched())
        .collect();
    let mut obj = Objective {
        scenario,
        config,
        spec,
        observed,
        searched,
        evaluations: 0,
        budget,
        best: None,
        trace: Vec::new(),
    };

    let start: Vec<f64> = obj
        .searched
        .iter()
        .map(|&k| {
            let p = &spec.params[k];
            (p.initial - p.lower) / p.width()
        })
        .collect();
    let f_start = obj.eval(&start);

    let converged = if obj.searched.is_empty() {
        true
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let starts = spec.multistart.max(1);
        let mut best_converged = false;
        for s in 0..starts {
            if obj.exhausted() {
                break;
            }
            let (x0, f0) = if s == 0 {
                (start.clone(), f_start)
            } else {
                let x: Vec<f64> = (0..start.len()).map(|_| rng.random::<f64>()).collect();
                let f = obj.eval(&x);
                (x, f)
            };
            let share = (obj.budget - obj.evaluations) / (starts - s);
            let before = obj.best.as_ref().map(|b| b.0);
            let done = nelder_mead(&mut obj, x0, f0, share.max(1));
            let after = obj.best.as_ref().map(|b| b.0);
            if s == 0 || after < before {
                best_converged = done;
            }
        }
        best_converged
    };

    let (final_loss, best_unit) = obj.best.clone().expect("at least one evaluation");
    let values = obj.values(&best_unit);
    let best_scenario = apply_params(scenario, &values)?;

    let sensitivity = obj
        .searched
        .iter()
        .map(|&k| {
            let p = &spec.params[k];
            let value = values[k].1;
            let step = if value != 0.0 {
                0.05 * value.abs()
            } else {
                0.05 * p.width()
            };
            let probe = |v: f64| {
                let mut vals = values.clone();
                vals[k].1 = v.clamp(p.lower, p.upper);
                obj.loss_at(&vals)
            };
            Sensitivity {
                param: p.param,
                value,
                loss_down: probe(value - step),
                loss_up: probe(value + step),
            }
        })
        .collect();

    Ok(FitResult {
        params: values,
        scenario: best_scenario,
        final_loss,
        loss_trace: obj.trace,
        evaluations: obj.evaluations,
        converged,
        seed,
        sensitivity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MarketState;
    use crate::reference;
    use crate::BehaviorParams;

    fn trajectory_with_shares(shares: &[f64]) -> Trajectory {
        Trajectory {
            scenario_id: "t".into(),
            params_used: BehaviorParams::default(),
            states: vec![MarketState::initial(0.0, shares.to_vec())],
            rates: vec![],
        }
    }

    #[test]
    fn loss_examples() {
        let traj = trajectory_with_shares(&[50.0, 25.0, 25.0]);
        let same = [Observation {
            t: 0.0,
            values: vec![0.5, 0.25, 0.25],
        }];
        assert_eq!(share_loss(&same, &traj).unwrap(), 0.0);

        let uniform = [Observation {
            t: 0.0,
            values: vec![1.0 / 3.0; 3],
        }];
        let expected = ((1.0f64 / 6.0).powi(2) + 2.0 * (1.0f64 / 12.0).powi(2)) / 3.0;
        let got = share_loss(&uniform, &traj).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.013889).abs() < 1e-6);

        let single = trajectory_with_shares(&[7.0]);
        let obs = [Observation {
            t: 0.0,
            values: vec![1.0],
        }];
        assert_eq!(share_loss(&obs, &single).unwrap(), 0.0);
    }

    #[test]
    fn loss_errors() {
        let traj = trajectory_with_shares(&[1.0, 1.0]);
        assert!(matches!(
            share_loss(&[], &traj),
            Err(Error::EmptyObservations)
        ));
        let off = [Observation {
            t: 0.0,
            values: vec![0.7, 0.7],
        }];
        assert!(share_loss(&off, &traj).is_err());
        let late = [Observation {
            t: 3.0,
            values: vec![0.5, 0.5],
        }];
        assert!(share_loss(&late, &traj).is_err());
    }

    fn synthetic(wta: f64) -> Vec<Observation> {
        let sc = reference::table1_scenario();
        let truth = sc.with_behavior(sc.behavior().with_wta(wta).unwrap());
        let traj = simulate(&truth, &reference::table1_integrator()).unwrap();
        reference::TABLE1_TIMES
            .iter()
            .map(|&t| Observation {
                t,
                values: traj.states[traj.nearest_index(t)].shares(),
            })
            .collect()
    }

    fn wta_spec(lower: f64, upper: f64, initial: f64) -> ParamSpec {
        ParamSpec::new(vec![ParamBound::free(
            FitParam::Behavior(ScalarParam::Wta),
            lower,
            upper,
            initial,
        )])
    }

    #[test]
    fn degenerate_box_takes_one_evaluation() {
        let sc = reference::table1_scenario();
        let r = fit(
            &sc,
            &reference::table1_integrator(),
            &wta_spec(0.4, 0.4, 0.4),
            &synthetic(0.3),
            100,
            7,
        )
        .unwrap();
        assert_eq!(r.evaluations, 1);
        assert_eq!(r.params[0].1, 0.4);
    }

    #[test]
    fn budget_of_one_reports_initial_loss() {
        let sc = reference::table1_scenario();
        let obs = synthetic(0.3);
        let cfg = reference::table1_integrator();
        let r = fit(&sc, &cfg, &wta_spec(0.0, 0.9, 0.6), &obs, 1, 7).unwrap();
        assert_eq!(r.evaluations, 1);
        let initial = sc.with_behavior(sc.behavior().with_wta(0.6).unwrap());
        let expected = share_loss(&obs, &simulate(&initial, &cfg).unwrap()).unwrap();
        assert_eq!(r.final_loss, expected);
        assert_eq!(r.params[0].1, 0.6);
    }

    #[test]
    fn infeasible_and_empty_specs() {
        let sc = reference::table1_scenario();
        let cfg = reference::table1_integrator();
        let obs = synthetic(0.3);
        assert!(matches!(
            fit(&sc, &cfg, &wta_spec(0.6, 0.4, 0.5), &obs, 10, 0),
            Err(Error::InfeasibleBounds { .. })
        ));
        let mut fixed = wta_spec(0.0, 1.0, 0.5);
        fixed.params[0].fixed = true;
        assert!(matches!(
            fit(&sc, &cfg, &fixed, &obs, 10, 0),
            Err(Error::NoFreeParameters)
        ));
        assert!(matches!(
            fit(&sc, &cfg, &wta_spec(0.0, 1.0, 0.5), &obs, 0, 0),
            Err(Error::ZeroBudget)
        ));
        let gamma = ParamSpec::new(vec![ParamBound::free(
            FitParam::Behavior(ScalarParam::Gamma),
            -2.0,
            0.0,
            -1.0,
        )]);
        assert!(fit(&sc, &cfg, &gamma, &obs, 10, 0).is_err());
    }

    #[test]
    fn trace_never_increases_and_candidates_stay_in_box() {
        let sc = reference::table1_scenario();
        let cfg = reference::table1_integrator();
        let spec = ParamSpec::new(vec![
            ParamBound::free(FitParam::Behavior(ScalarParam::Wta), 0.1, 0.8, 0.7),
            ParamBound::free(FitParam::Importance(0), 1.0, 10.0, 5.0),
        ]);
        let r = fit(&sc, &cfg, &spec, &synthetic(0.3), 60, 3).unwrap();
        assert!(r.loss_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.final_loss <= r.loss_trace[0]);
        assert!(r.evaluations <= 60);
        assert!((0.1..=0.8).contains(&r.params[0].1));
        assert!((1.0..=10.0).contains(&r.params[1].1));
        assert_eq!(r.sensitivity.len(), 2);
    }
}
