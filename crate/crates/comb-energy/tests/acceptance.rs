//! Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::f64::consts::{PI, SQRT_2};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestError, TestRng, TestRunner};
use rand::Rng;

use comb_energy::comb::{random_comb, Battery, Comb};
use comb_energy::dilation::{dilate, verify_dilation};
use comb_energy::ico::{battery_separation_examples, hierarchy_experiment};
use comb_energy::local::{default_p0_grid, fisher_optimize, narrow_prior_curve};
use comb_energy::metrology::SeesawOptions;
use comb_energy::phase::{
    asymptotic_lower_bound, lower_bound, matched_sine_cost, optimized_cost, qubit_cost_closed_form,
    qubit_optimal_instrument, sine_cost_closed_form, sine_probe_strategy,
};
use comb_energy::random::{random_kraus, rng};
use comb_energy::tensor::{choi_of_kraus, SpaceLabel};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
type PropertyCheck = (&'static str, fn(u64) -> common::Check);

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn within_time(t: Duration, limit: Duration, detail: String) -> Outcome {
    if t <= limit {
        Ok(format!("{detail}, {:.1}s", t.as_secs_f64()))
    } else {
        Err(format!("{detail}, took {:.1}s > {:.0}s", t.as_secs_f64(), limit.as_secs_f64()))
    }
}

fn opts(restarts: usize) -> SeesawOptions {
    SeesawOptions { restarts, seed: 1, ..Default::default() }
}

fn qubit_closed_form() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for e in grid(0.0, 1.5, 0.05) {
        let r = optimized_cost(e, 2, Battery::Global, &opts(4)).map_err(err)?;
        let dev = (r.cost - qubit_cost_closed_form(e)).abs();
        if dev > 1e-5 {
            return Err(format!("E={e:.2}: cost {} vs closed form {}", r.cost, qubit_cost_closed_form(e)));
        }
        worst = worst.max(dev);
    }
    within_time(start.elapsed(), Duration::from_secs(30), format!("31 points, max deviation {worst:.2e}"))
}

fn energy_constants() -> Outcome {
    let s = battery_separation_examples().map_err(err)?;
    let checks = [
        ("Hadamard E", s.gate_energy, SQRT_2 / 2.0),
        ("C1 E_loc", s.c1_local, SQRT_2),
        ("C1 E_gl", s.c1_global, SQRT_2 / 2.0),
        ("C2 E_ind", s.c2_individual, SQRT_2 / 2.0),
        ("C2 E_sh", s.c2_shared, SQRT_2 / 4.0),
    ];
    for (name, got, want) in checks {
        if (got - want).abs() > 1e-9 {
            return Err(format!("{name} = {got}, expected {want}"));
        }
    }
    Ok(format!(
        "E={:.9} E_loc={:.9} E_gl={:.9} E_ind={:.9} E_sh={:.9}",
        s.gate_energy, s.c1_local, s.c1_global, s.c2_individual, s.c2_shared
    ))
}

fn explicit_instrument() -> Outcome {
    for e in [0.1, 0.4, 0.75] {
        let q = qubit_optimal_instrument(e).map_err(err)?;
        let comb = q.comb().map_err(err)?;
        if !comb.is_valid() {
            return Err(format!("E={e}: instrument is not a valid comb"));
        }
        let a = comb.energy_audit().map_err(err)?;
        let first = q.first[(1, 1)].re;
        let pattern = [q.kappa, e];
        let eq = a.per_prefix_global.len() == 2
            && a.per_prefix_global.iter().zip(pattern).all(|(g, w)| (g - w).abs() <= 1e-9)
            && (first - q.kappa).abs() <= 1e-9;
        if !eq {
            return Err(format!("E={e}: prefixes {:?}, Tr[H T1] {first}, kappa {}", a.per_prefix_global, q.kappa));
        }
        if a.e_global > e + 1e-9 || a.e_local > e + 1e-9 {
            return Err(format!("E={e}: E_gl {} E_loc {} exceed budget", a.e_global, a.e_local));
        }
        let cost = q.cost().map_err(err)?;
        if (cost - qubit_cost_closed_form(e)).abs() > 1e-9 {
            return Err(format!("E={e}: cost {cost} vs {}", qubit_cost_closed_form(e)));
        }
    }
    Ok("E in {0.1, 0.4, 0.75}".into())
}

fn sine_strategy() -> Outcome {
    for d in 2..=16 {
        let p = sine_probe_strategy(d).map_err(err)?.point;
        if (p.cost - sine_cost_closed_form(d)).abs() > 1e-9 {
            return Err(format!("d={d}: cost {} vs {}", p.cost, sine_cost_closed_form(d)));
        }
        if (p.probe_energy - d as f64 / 2.0).abs() > 1e-9 {
            return Err(format!("d={d}: probe energy {}", p.probe_energy));
        }
        if p.measurement_energy > d as f64 - 1.0 + 1e-9 {
            return Err(format!("d={d}: measurement energy {}", p.measurement_energy));
        }
    }
    Ok("d = 2..16".into())
}

fn sandwich() -> Outcome {
    let mut min_slack = f64::INFINITY;
    for e in [0.25, 0.5, 1.0] {
        for d in [2, 3, 4] {
            let lb = lower_bound(e, d).map_err(err)?;
            let opt = optimized_cost(e, d, Battery::Global, &opts(4)).map_err(err)?.cost;
            let sine = matched_sine_cost(e, d).map_err(err)?;
            let slack = (opt - lb).min(sine - opt);
            min_slack = min_slack.min(slack);
            if slack < -1e-6 {
                return Err(format!("E={e} d={d}: {lb} <= {opt} <= {sine} violated"));
            }
        }
    }
    Ok(format!("9 points, min slack {min_slack:.2e}"))
}

fn scaling_bracket() -> Outcome {
    let mut parts = Vec::new();
    for e in [50.0, 200.0] {
        let v = asymptotic_lower_bound(e) * e * e;
        if !(1.5..=2.1).contains(&v) {
            return Err(format!("E={e}: lower bound * E^2 = {v}"));
        }
        parts.push(format!("LB*E^2({e})={v:.4}"));
    }
    for e in [15.0_f64, 30.0] {
        let d = (2.0 * e / 3.0).ceil() as usize;
        let v = sine_probe_strategy(d).map_err(err)?.point.cost * e * e;
        if v > 30.0 {
            return Err(format!("E={e} d={d}: sine cost * E^2 = {v}"));
        }
        parts.push(format!("sine*E^2({e})={v:.3}"));
    }
    Ok(parts.join(" "))
}

fn hierarchy() -> Outcome {
    let start = Instant::now();
    let rows = hierarchy_experiment(&grid(0.05, 1.5, 0.05), false, &opts(2)).map_err(err)?;
    let mut strict = None;
    for r in &rows {
        if let Some(e) = &r.error {
            return Err(format!("E={:.2}: {e}", r.e));
        }
        if r.cost_sup_ind > r.cost_def_global + 1e-6 || r.cost_def_global > r.cost_def_local + 1e-6 {
            return Err(format!(
                "E={:.2}: order broken {} {} {}",
                r.e, r.cost_sup_ind, r.cost_def_global, r.cost_def_local
            ));
        }
        if strict.is_none() && r.gap_sup_gl >= 1e-3 && r.gap_gl_loc >= 1e-3 {
            strict = Some(r);
        }
    }
    let r = strict.ok_or("no point with both gaps >= 1e-3")?;
    let detail = format!(
        "{} points, strict at E={:.2} (sup {:.4} < gl {:.4} < loc {:.4})",
        rows.len(),
        r.e,
        r.cost_sup_ind,
        r.cost_def_global,
        r.cost_def_local
    );
    within_time(start.elapsed(), Duration::from_secs(600), detail)
}

fn check_dilation(c: &Comb, seed: u64, worst: &mut (f64, f64)) -> Result<(), String> {
    let plan = dilate(c).map_err(err)?;
    let rep = verify_dilation(c, &plan, 50, seed).map_err(err)?;
    worst.0 = worst.0.max(rep.choi_error);
    worst.1 = worst.1.max(rep.max_energy_deviation);
    if rep.choi_error > 1e-7 || rep.max_energy_deviation > 1e-8 {
        return Err(format!(
            "seed {seed}: Choi error {:.2e}, energy deviation {:.2e}",
            rep.choi_error, rep.max_energy_deviation
        ));
    }
    Ok(())
}

fn dilation_round_trip() -> Outcome {
    let mut r = rng(2024);
    let mut worst = (0.0, 0.0);
    for k in 0..25u64 {
        let d = if k % 2 == 0 { 2 } else { 3 };
        let rank = r.random_range(1..=if d == 2 { 4 } else { 5 });
        let (a, b) = (SpaceLabel::equally_spaced("in", d), SpaceLabel::equally_spaced("out", d));
        let choi = choi_of_kraus(&random_kraus(d, d, rank, &mut r), &a, &b, false).map_err(err)?;
        let c = Comb::channel(choi, "in", "out").map_err(err)?;
        check_dilation(&c, k, &mut worst)?;
    }
    for k in 0..5u64 {
        let m1 = r.random_range(1..=2);
        let m2 = r.random_range(m1..=4);
        let steps =
            [(SpaceLabel::qubit("i1"), SpaceLabel::qubit("o1")), (SpaceLabel::qubit("i2"), SpaceLabel::qubit("o2"))];
        let c = random_comb(&steps, &[m1, m2], &mut r).map_err(err)?;
        check_dilation(&c, 100 + k, &mut worst)?;
    }
    Ok(format!("30 processes x 50 inputs, max Choi error {:.2e}, max energy deviation {:.2e}", worst.0, worst.1))
}

fn fisher_and_prior() -> Outcome {
    let p0 = default_p0_grid();
    let mut prev = f64::NEG_INFINITY;
    let mut curve = Vec::new();
    for e in grid(0.0, 2.0, 0.25) {
        let f = fisher_optimize(e, PI, &p0, 1e-7).map_err(err)?.best_f;
        if f < prev - 1e-6 {
            return Err(format!("Fisher decreases at E={e}: {f} < {prev}"));
        }
        curve.push(f);
        prev = f;
    }
    if curve[0].abs() > 1e-9 {
        return Err(format!("F(0) = {}", curve[0]));
    }
    let f2 = *curve.last().unwrap();
    if f2 < 0.999 {
        return Err(format!("F(2) = {f2}"));
    }
    let rows = narrow_prior_curve(&grid(0.0, 1.5, 0.25), PI, 0.5, &opts(4)).map_err(err)?;
    let c0 = rows[0].1.cost;
    let want = 2.0 - 2.0 * (-0.125f64).exp();
    if (c0 - want).abs() > 1e-6 {
        return Err(format!("narrow prior cost(0) = {c0}, expected {want}"));
    }
    for w in rows.windows(2) {
        if w[1].1.cost > w[0].1.cost + 1e-6 {
            return Err(format!("narrow prior cost increases at E={}: {} > {}", w[1].0, w[1].1.cost, w[0].1.cost));
        }
    }
    Ok(format!("F(0)={:.1e} F(2)={f2:.6}, prior cost(0)={c0:.9}", curve[0]))
}

fn property_suites() -> Outcome {
    let checks: [PropertyCheck; 5] = [
        ("link associativity", common::link_associativity),
        ("neutralization", common::neutralization),
        ("subadditivity", common::subadditivity),
        ("E_gl <= E_loc", common::global_below_local),
        ("fixed vs free estimator", common::fixed_vs_free),
    ];
    for (name, check) in checks {
        let config = Config { cases: 200, failure_persistence: None, ..Config::default() };
        let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
        let res = runner.run(&any::<u64>(), |seed| check(seed).map_err(TestCaseError::fail));
        match res {
            Ok(()) => {}
            Err(TestError::Fail(msg, seed)) => return Err(format!("{name}: seed {seed}: {msg}")),
            Err(e) => return Err(format!("{name}: {e}")),
        }
    }
    Ok("5 suites x 200 instances, no violations".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("qubit closed form", qubit_closed_form),
        ("energy constants", energy_constants),
        ("explicit qubit instrument", explicit_instrument),
        ("sine strategy", sine_strategy),
        ("sandwich", sandwich),
        ("scaling bracket", scaling_bracket),
        ("causal-order hierarchy", hierarchy),
        ("dilation round trip", dilation_round_trip),
        ("Fisher curve and narrow prior", fisher_and_prior),
        ("property suites", property_suites),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(k + 1)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = run();
        eprintln!("criterion {} took {:.1}s", k + 1, start.elapsed().as_secs_f64());
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
