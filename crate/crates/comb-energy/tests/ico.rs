use std::f64::consts::PI;

use comb_energy::comb::Battery;
use comb_energy::ico::*;
use comb_energy::metrology::SeesawOptions;

fn opts() -> SeesawOptions {
    SeesawOptions { restarts: 2, ..Default::default() }
}

const SUP: IcoStrategy =
    IcoStrategy::Superposition { spacetime: SpacetimeBattery::Individual, battery: Battery::Global, uniform: false };

#[test]
fn hierarchy_is_ordered_with_strict_gaps() {
    let setup = IcoSetup::hierarchy().unwrap();
    let row = hierarchy_point(&setup, 0.3, true, &opts()).unwrap();
    assert!(row.ordered(1e-6), "{row:?}");
    assert!(row.gap_sup_gl >= 1e-3 && row.gap_gl_loc >= 1e-3, "{row:?}");
    let cq = row.cost_def_causality_qubit.unwrap();
    assert!((cq - row.cost_def_global).abs() < 1e-5, "{cq} vs {}", row.cost_def_global);
}

#[test]
fn zero_budget_reuses_channel_energy() {
    let setup = IcoSetup::hierarchy().unwrap();
    let row = hierarchy_point(&setup, 0.0, false, &opts()).unwrap();
    assert!(row.ordered(1e-6), "{row:?}");
    assert!(row.cost_def_local <= 2.0 + 1e-6);
    assert!(row.cost_def_global < 2.0 - 1e-3, "{row:?}");
}

#[test]
fn superposition_strategy_is_consistent() {
    let setup = IcoSetup::hierarchy().unwrap();
    let e = 0.5;
    let r = optimize_ico(&setup, SUP, e, &opts()).unwrap();
    let s = &r.strategy;
    let p = s.p_tau();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-7, "{p:?}");
    assert!(p.iter().all(|&x| x >= -1e-9));
    assert!(s.coupling_residual() < 1e-6, "{}", s.coupling_residual());
    for (k, &pk) in p.iter().enumerate() {
        if pk > 1e-6 {
            let c = s.branch_comb(k).unwrap();
            assert!(c.is_valid());
        }
    }
    assert!(s.energy_individual(Battery::Global).unwrap() <= e + 1e-5);
    let t = s.coherent().unwrap();
    assert!((t.matrix().trace().re - setup.normalization()).abs() < 1e-6);
}

#[test]
fn sector_restriction_matches_full_program() {
    let setup = IcoSetup::hierarchy().unwrap();
    let full = setup.unreduced();
    let phases = [0.3, PI - 0.2, 1.1, -2.0];
    for kind in [SUP, IcoStrategy::Definite { order: Order::Swapped, battery: Battery::Local, oc_outcomes: 1 }] {
        let n = kind.outcomes();
        let mut a = build_ico_program(&setup, kind, 0.4).unwrap();
        let mut b = build_ico_program(&full, kind, 0.4).unwrap();
        a.set_phases(&setup.j, &phases[..n]).unwrap();
        b.set_phases(&full.j, &phases[..n]).unwrap();
        let va = a.problem.solve(1e-8).unwrap().require_optimal().unwrap().value;
        let vb = b.problem.solve(1e-8).unwrap().require_optimal().unwrap().value;
        assert!((va - vb).abs() < 1e-5, "{kind:?}: {va} vs {vb}");
    }
}

#[test]
fn shared_battery_never_costs_more() {
    let setup = IcoSetup::ind_vs_shared().unwrap();
    let row = ind_vs_shared_point(&setup, 0.1, &opts()).unwrap();
    assert!(row.cost_shared <= row.cost_individual + 1e-6, "{row:?}");
    assert!(row.cost_individual - row.cost_shared >= 1e-3, "{row:?}");
}

#[test]
fn lift_repeats_each_phase() {
    assert_eq!(lift_phases(&[1.0, 2.0], 2), vec![1.0, 1.0, 2.0, 2.0]);
}
