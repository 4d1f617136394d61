//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p marketflow --test acceptance`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use marketflow::cli::{run_cli, EXIT_OK};
use marketflow::scenario::{load_scenario_file, LoadedScenario, Strictness};
use marketflow::trajectory::observations_csv;
use marketflow_core::allocation::{allocate, allocate_wta, allocation_matrix};
use marketflow_core::behavior::{apply_psychology, apply_wta, modify_vector, ScoreKind};
use marketflow_core::calibration::fit;
use marketflow_core::competitiveness::{argmax, competitiveness_view};
use marketflow_core::dynamics::obsolescence_rate;
use marketflow_core::{
    simulate, Allocator, AttributePanel, BehaviorParams, DynamicsOptions, IntegratorConfig, Method,
    ModifierOrder, NewCustomerSeries, Observation, RefreshMode, Scenario, ScoreScale, SquareMatrix,
    Trajectory,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Check = std::result::Result<String, String>;

/// Name, runtime budget, check.
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn table1(overrides: &[(&str, Value)]) -> LoadedScenario {
    let overrides: Vec<(String, Value)> = overrides
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect();
    load_scenario_file(
        &scenario_path("table1.scenario"),
        &overrides,
        Strictness::Strict,
    )
    .expect("bundled scenario loads")
}

fn random_scores(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

fn random_allocator(rng: &mut ChaCha8Rng) -> Allocator {
    [
        Allocator::Ratio,
        Allocator::Softmax,
        Allocator::Redistribution,
    ][rng.random_range(0..3)]
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn wta_limit() -> Check {
    let loaded = table1(&[("behavior.wta", Value::from(1.0))]);
    let traj = simulate(&loaded.scenario, &loaded.integrator).map_err(|e| e.to_string())?;
    for (k, r) in traj.rates.iter().enumerate() {
        let inflow = r.inflow();
        let nonzero: Vec<usize> = (0..inflow.len()).filter(|&i| inflow[i] != 0.0).collect();
        ensure(nonzero == [r.i_max], || {
            format!("step {k}: inflow {inflow:?}, i_max {}", r.i_max)
        })?;
    }
    Ok(format!(
        "{} steps, each inflow a single entry at i_max",
        traj.rates.len()
    ))
}

fn allocator_agreement() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1000 {
        let n = rng.random_range(2..=8);
        let a = random_scores(&mut rng, n);
        let i_max = argmax(&a);
        let delta = allocate_wta(n, i_max).shares;
        for alloc in [
            Allocator::Ratio,
            Allocator::Softmax,
            Allocator::Redistribution,
        ] {
            let shares = allocate(&a, alloc, 1.0, i_max, 1.0).shares;
            ensure(shares == delta, || {
                format!("case {case} {alloc:?}: {shares:?} on {a:?}")
            })?;
            let columns = allocation_matrix(
                &SquareMatrix::from_fn(n, |i, _| a[i]),
                alloc,
                1.0,
                i_max,
                1.0,
            );
            for j in 0..n {
                ensure(columns.matrix.column(j) == delta, || {
                    format!("case {case} {alloc:?}: column {j} is not the delta")
                })?;
            }
        }
        // Winner-take-all applied to the scores alone also leaves ratio
        // allocation with a delta when the winner's score is positive.
        if a[i_max] > 0.0 {
            let shares = allocate(
                &apply_wta(&a, i_max, 1.0),
                Allocator::Ratio,
                0.0,
                i_max,
                1.0,
            )
            .shares;
            ensure(shares == delta, || {
                format!("case {case}: ratio after wta=1 gives {shares:?}")
            })?;
        }
    }
    Ok("1000 vectors, n in [2, 8], all allocators give the delta".into())
}

fn normalization() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for case in 0..10_000 {
        let n = rng.random_range(1..=8);
        let alloc = random_allocator(&mut rng);
        let wta = if rng.random_bool(0.1) {
            1.0
        } else {
            rng.random_range(0.0..1.0)
        };
        let a = random_scores(&mut rng, n);
        let shares = allocate(&a, alloc, wta, argmax(&a), 1.0).shares;
        let err = (shares.iter().sum::<f64>() - 1.0).abs();
        worst = worst.max(err);
        ensure(err <= 1e-12 && shares.iter().all(|&h| h >= 0.0), || {
            format!("vector case {case}: {shares:?}")
        })?;

        let m = SquareMatrix::from_fn(n, |i, j| {
            if i == j {
                0.0
            } else {
                rng.random_range(-1.0..=1.0)
            }
        });
        let h = allocation_matrix(&m, alloc, wta, rng.random_range(0..n), 1.0);
        for j in 0..n {
            let err = (h.matrix.column_sum(j) - 1.0).abs();
            worst = worst.max(err);
            ensure(err <= 1e-12, || {
                format!("matrix case {case}: column {j} sums off by {err:e}")
            })?;
        }
    }
    Ok(format!(
        "10000 vectors and matrices, worst deviation {worst:e}"
    ))
}

fn random_panel(rng: &mut ChaCha8Rng) -> AttributePanel {
    let (n, k, stamps) = (
        rng.random_range(1..=8),
        rng.random_range(1..=5),
        rng.random_range(1..=3),
    );
    let cells = n * k * stamps;
    let perf = (0..cells).map(|_| rng.random_range(1.0..=10.0)).collect();
    // importance differs per segment so the row weights genuinely differ
    let imp = (0..cells).map(|_| rng.random_range(1.0..=10.0)).collect();
    AttributePanel::new(
        ScoreScale::new(1.0, 10.0).unwrap(),
        n,
        k,
        (0..stamps).map(|s| s as f64).collect(),
        perf,
        imp,
    )
    .unwrap()
}

fn antisymmetry() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..10_000 {
        let panel = random_panel(&mut rng);
        let t = rng.random_range(0.0..3.0);
        let view = competitiveness_view(&panel, t).map_err(|e| e.to_string())?;
        let n = panel.segment_count();
        for i in 0..n {
            for j in 0..n {
                let sum = view.pairwise.get(i, j) + view.pairwise.get(j, i);
                ensure(sum == 0.0, || {
                    format!("case {case}: ({i},{j}) sums to {sum:e}")
                })?;
            }
        }
    }
    Ok("10000 panels, pairwise + transpose is exactly zero".into())
}

fn check_conservation(
    label: &str,
    scenario: &Scenario,
    traj: &Trajectory,
) -> std::result::Result<(), String> {
    for (k, r) in traj.rates.iter().enumerate() {
        let (od, rd, bnd): (f64, f64, f64) =
            (r.od.iter().sum(), r.rd.iter().sum(), r.bnd.iter().sum());
        ensure(rel_close(rd, od, 1e-9), || {
            format!("{label} step {k}: sum rd {rd} vs sum od {od}")
        })?;
        ensure(rel_close(bnd, r.nc_rate, 1e-9), || {
            format!("{label} step {k}: sum bnd {bnd} vs nc {}", r.nc_rate)
        })?;
    }
    let d0 = scenario.initial_sizes();
    for (k, s) in traj.states.iter().enumerate() {
        for i in 0..d0.len() {
            let identity = d0[i] + s.cum_bnd[i] + s.cum_rd[i] - s.cum_od[i];
            ensure(rel_close(s.sizes[i], identity, 1e-9), || {
                format!(
                    "{label} state {k} segment {i}: D {} vs {identity}",
                    s.sizes[i]
                )
            })?;
        }
    }
    Ok(())
}

fn conservation() -> Check {
    let mut runs = 0;
    for (label, overrides) in [
        ("table1", vec![]),
        ("table1 wta=1", vec![("behavior.wta", Value::from(1.0))]),
        (
            "table1 rk4",
            vec![("integrator.method", Value::from("rk4"))],
        ),
        (
            "table1 softmax",
            vec![("behavior.allocator", Value::from("softmax"))],
        ),
    ] {
        let loaded = table1(&overrides);
        let traj = simulate(&loaded.scenario, &loaded.integrator).map_err(|e| e.to_string())?;
        check_conservation(label, &loaded.scenario, &traj)?;
        runs += 1;
    }
    Ok(format!(
        "{runs} table1 runs, per-step and integrated identities within 1e-9"
    ))
}

fn hand_oracle() -> Check {
    let loaded = table1(&[]);
    let panel = loaded.scenario.panel();
    // equal weights 1/2, scale width 9:
    //   a_im = (q + p) / 2
    //   a_ij = ((q_i - q_j) + (p_i - p_j)) / 18
    let cases: [(f64, [f64; 3], [[f64; 3]; 3]); 2] = [
        (
            1.0,
            [6.0, 6.0, 5.0],
            [
                [0.0, 0.0, 1.0 / 9.0],
                [0.0, 0.0, 1.0 / 9.0],
                [-1.0 / 9.0, -1.0 / 9.0, 0.0],
            ],
        ),
        (
            6.0,
            [6.0, 6.0, 5.5],
            [
                [0.0, 0.0, 1.0 / 18.0],
                [0.0, 0.0, 1.0 / 18.0],
                [-1.0 / 18.0, -1.0 / 18.0, 0.0],
            ],
        ),
    ];
    for (t, market, pairwise) in cases {
        let view = competitiveness_view(panel, t).map_err(|e| e.to_string())?;
        for i in 0..3 {
            ensure((view.market[i] - market[i]).abs() <= 1e-12, || {
                format!(
                    "t={t} market[{i}] = {} expected {}",
                    view.market[i], market[i]
                )
            })?;
            for j in 0..3 {
                let got = view.pairwise.get(i, j);
                ensure((got - pairwise[i][j]).abs() <= 1e-12, || {
                    format!(
                        "t={t} pairwise[{i}][{j}] = {got} expected {}",
                        pairwise[i][j]
                    )
                })?;
            }
        }
        ensure(view.i_max == 0, || {
            format!("t={t} i_max {} expected 0 (tie to lowest)", view.i_max)
        })?;
    }
    Ok("market and pairwise scores at t=1 and t=6 match by hand".into())
}

fn behavior_modifiers() -> Check {
    let close = |a: &[f64], b: &[f64]| {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9)
    };
    let mut table = 0;

    let mut wta_cases: Vec<(Vec<f64>, usize, f64, Vec<f64>)> = vec![
        (
            vec![0.4, 0.2, -0.2, 0.0],
            0,
            0.5,
            vec![0.4, 0.1, -0.3, -0.5],
        ),
        (vec![0.4, 0.2, -0.2, 0.0], 0, 0.0, vec![0.4, 0.2, -0.2, 0.0]),
        (
            vec![0.4, 0.2, -0.2, 0.0],
            0,
            1.0,
            vec![0.4, 0.0, -0.4, -1.0],
        ),
    ];
    for (a, i_max, wta, want) in wta_cases.drain(..) {
        let got = apply_wta(&a, i_max, wta);
        ensure(close(&got, &want), || {
            format!("wta {wta} on {a:?}: {got:?}, expected {want:?}")
        })?;
        table += 1;
    }

    let e = std::f64::consts::E;
    let psy_cases = [
        (0.5, -1.0, 0.0, 0.5 * (1.0 - e.powf(-0.5))),
        (-0.4, -1.0, 0.0, -0.8),
        (-0.4, -3.0, 0.7, -0.8),
        (0.0, -1.0, 0.0, 0.0),
        // resistance clamps to 1, so all perceived advantage is lost
        (0.1, -1.0, 0.5, 0.0),
    ];
    for (a, gamma, c, want) in psy_cases {
        let got =
            apply_psychology(&[a], gamma, c, ScoreKind::Pairwise).map_err(|e| e.to_string())?;
        ensure(close(&got, &[want]), || {
            format!("psychology on {a} (gamma {gamma}, c {c}): {got:?}, expected {want}")
        })?;
        table += 1;
    }

    let params = BehaviorParams::default()
        .with_wta(1.0)
        .and_then(|b| b.with_gamma(-1.0))
        .and_then(|b| b.with_c(0.0))
        .map_err(|e| e.to_string())?
        .with_modifier_order(ModifierOrder::PsychologyThenWta);
    let (got, i_max) = modify_vector(&[0.4, 0.2, -0.2], ScoreKind::Pairwise, &params)
        .map_err(|e| e.to_string())?;
    let want = [0.4 * (1.0 - e.powf(-0.4)), 0.0, -0.8];
    ensure(close(&got, &want) && i_max == 0, || {
        format!("psychology then wta: {got:?}, expected {want:?}")
    })?;
    table += 1;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..10_000 {
        let n = rng.random_range(1..=8);
        let a = random_scores(&mut rng, n);
        let wta = rng.random_range(0.0..=1.0);
        let gamma = rng.random_range(-5.0..-0.01);
        let c = rng.random_range(0.0..1.0);
        let w = apply_wta(&a, argmax(&a), wta);
        let p = apply_psychology(&a, gamma, c, ScoreKind::Pairwise).map_err(|e| e.to_string())?;
        for i in 0..n {
            let x = a[i];
            for (name, y) in [("wta", w[i]), ("psychology", p[i])] {
                let ok = if x > 0.0 {
                    (0.0..=x).contains(&y)
                } else if x < 0.0 {
                    y <= x
                } else {
                    true
                };
                ensure(ok, || format!("case {case}: {name} maps {x} to {y}"))?;
            }
            ensure(p[i] == 0.0 || p[i].signum() == x.signum(), || {
                format!("case {case}: psychology flips {x} to {}", p[i])
            })?;
        }
    }
    Ok(format!(
        "{table} worked cases, 10000 random vectors keep sign and contract"
    ))
}

fn obsolescence_edges() -> Check {
    let out = obsolescence_rate(&[100.0], &[0.9], 2.0, 0.5)[0];
    ensure((out - 10.0).abs() <= 1e-12, || {
        format!("k=2 s=0.5 a=0.9 D=100 gives {out}")
    })?;
    let top = obsolescence_rate(&[100.0, 50.0], &[1.0, 1.0], 2.0, 0.5);
    ensure(top == [0.0, 0.0], || format!("a_norm = 1 gives {top:?}"))?;
    let sticky = obsolescence_rate(&[100.0, 50.0], &[0.2, 0.0], 2.0, 1.0);
    ensure(sticky == [0.0, 0.0], || format!("s = 1 gives {sticky:?}"))?;
    Ok("outflow 10, and zero at a_norm = 1 and s = 1".into())
}

fn stamp_shares(scenario: &Scenario, traj: &Trajectory) -> Vec<Observation> {
    scenario
        .panel()
        .times()
        .iter()
        .map(|&t| Observation {
            t,
            values: traj.states[traj.nearest_index(t)].shares(),
        })
        .collect()
}

const RECOVERY_SEED: u64 = 20;

fn calibration_recovery() -> Check {
    let truth = table1(&[("behavior.wta", Value::from(0.3))]);
    let traj = simulate(&truth.scenario, &truth.integrator).map_err(|e| e.to_string())?;
    let observed = stamp_shares(&truth.scenario, &traj);
    let spec = truth
        .calibration
        .clone()
        .ok_or("table1 has no calibration section")?;
    ensure(
        spec.params.len() == 1 && spec.params[0].initial != 0.3,
        || "calibration should fit wta alone from an initial value away from the truth".into(),
    )?;
    let result = fit(
        &truth.scenario,
        &truth.integrator,
        &spec,
        &observed,
        500,
        RECOVERY_SEED,
    )
    .map_err(|e| e.to_string())?;
    let wta = result.params[0].1;
    ensure((wta - 0.3).abs() <= 0.05, || format!("recovered wta {wta}"))?;
    ensure(result.final_loss < 1e-6, || {
        format!("final loss {:e}", result.final_loss)
    })?;
    Ok(format!(
        "wta {wta:.6} after {} evaluations, loss {:e}",
        result.evaluations, result.final_loss
    ))
}

fn cli(args: &[&str]) -> std::result::Result<Vec<u8>, String> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_cli(
        std::iter::once("marketflow").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    ensure(code == EXIT_OK, || {
        format!("{args:?} exited {code}: {}", String::from_utf8_lossy(&err))
    })?;
    Ok(out)
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scenario = scenario_path("table1.scenario");
    let scenario = scenario.to_str().unwrap();
    let truth = table1(&[("behavior.wta", Value::from(0.4))]);
    let traj = simulate(&truth.scenario, &truth.integrator).map_err(|e| e.to_string())?;
    let observed = dir.path().join("observed.csv");
    std::fs::write(
        &observed,
        observations_csv(
            &stamp_shares(&truth.scenario, &traj),
            marketflow_core::LossKind::Shares,
        ),
    )
    .map_err(|e| e.to_string())?;
    let observed = observed.to_str().unwrap();

    let invocations: [&[&str]; 4] = [
        &["simulate", scenario],
        &[
            "simulate",
            scenario,
            "--format",
            "json",
            "--set",
            "integrator.method=\"rk4\"",
        ],
        &["fit", scenario, observed, "--seed", "11"],
        &["fit", scenario, observed, "--seed", "11", "--budget", "120"],
    ];
    for args in invocations {
        let first = cli(args)?;
        let second = cli(args)?;
        ensure(!first.is_empty() && first == second, || {
            format!("{args:?} differs between runs")
        })?;
    }
    Ok(format!(
        "{} invocations byte-identical on repeat",
        invocations.len()
    ))
}

/// Constant panel, softmax on the market vector and no modifiers: the
/// right-hand side is linear in the sizes, so the solution is smooth.
fn smooth_scenario() -> std::result::Result<Scenario, String> {
    let panel = AttributePanel::with_market_importance(
        ScoreScale::new(1.0, 10.0).unwrap(),
        3,
        2,
        vec![0.0],
        vec![4.0, 8.0, 8.0, 4.0, 2.0, 8.0],
        &[5.0, 5.0],
    )
    .map_err(|e| e.to_string())?;
    let behavior = BehaviorParams::default()
        .with_wta(0.3)
        .and_then(|b| b.with_stickiness(0.2))
        .and_then(|b| b.with_decay(0.5))
        .map_err(|e| e.to_string())?
        .with_allocator(Allocator::Softmax)
        .with_modifier_order(ModifierOrder::None)
        .with_refresh_mode(RefreshMode::MarketVector);
    Scenario::new(
        "smooth",
        panel,
        vec![300.0, 50.0, 10.0],
        NewCustomerSeries::Constant(20.0),
        behavior,
        DynamicsOptions::default(),
    )
    .map_err(|e| e.to_string())
}

fn final_error(
    scenario: &Scenario,
    method: Method,
    dt: f64,
    horizon: f64,
    reference: &[f64],
) -> std::result::Result<f64, String> {
    let traj = simulate(
        scenario,
        &IntegratorConfig {
            method,
            dt,
            horizon,
        },
    )
    .map_err(|e| e.to_string())?;
    Ok(traj
        .last()
        .sizes
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

fn integrator_order() -> Check {
    let scenario = smooth_scenario()?;
    let horizon = 4.0;
    let mut report = Vec::new();
    for (method, dt, expected, tol) in [
        (Method::Euler, 0.1, 2.0, 0.2),
        (Method::Rk4, 0.5, 16.0, 0.3),
    ] {
        let reference = simulate(
            &scenario,
            &IntegratorConfig {
                method,
                dt: dt / 64.0,
                horizon,
            },
        )
        .map_err(|e| e.to_string())?
        .last()
        .sizes
        .clone();
        let coarse = final_error(&scenario, method, dt, horizon, &reference)?;
        let fine = final_error(&scenario, method, dt / 2.0, horizon, &reference)?;
        let ratio = coarse / fine;
        ensure((ratio - expected).abs() <= tol * expected, || {
            format!("{method:?} error ratio {ratio:.3} (errors {coarse:e}, {fine:e}), expected {expected} +/- {}%", tol * 100.0)
        })?;
        report.push(format!("{method:?} {ratio:.3}"));
    }
    Ok(format!("error ratios {}", report.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("wta limit on table1", Duration::from_secs(1), wta_limit),
        (
            "allocator agreement at wta=1",
            Duration::from_secs(5),
            allocator_agreement,
        ),
        (
            "allocation normalization",
            Duration::from_secs(10),
            normalization,
        ),
        (
            "pairwise antisymmetry",
            Duration::from_secs(10),
            antisymmetry,
        ),
        ("conservation", Duration::from_secs(1), conservation),
        ("hand-oracle scoring", Duration::from_secs(1), hand_oracle),
        (
            "behavior modifiers",
            Duration::from_secs(5),
            behavior_modifiers,
        ),
        (
            "obsolescence edge cases",
            Duration::from_secs(1),
            obsolescence_edges,
        ),
        (
            "calibration recovery",
            Duration::from_secs(30),
            calibration_recovery,
        ),
        ("determinism", Duration::from_secs(5), determinism),
        (
            "integrator order",
            Duration::from_secs(10),
            integrator_order,
        ),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => {
                Err(format!("{detail}; took {elapsed:?}, budget {budget:?}"))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} ({:.0?})", elapsed),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} ({:.0?})", elapsed);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
