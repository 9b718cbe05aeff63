//! Phase channels `|n⟩ ↦ e^{inθ}|n⟩`: closed forms, bounds and strategies.

use std::f64::consts::PI;

use serde::Serialize;

use crate::comb::{Battery, Comb};
use crate::error::{Error, Result};
use crate::metrology::{
    assemble_probe, average_cost, seesaw, task_operator, uniform_phases, ParamFamily, Prior, SeesawOptions,
    StrategyResult, TaskOperator,
};
use crate::tensor::{cr, fourier, CMat, CVec, LabeledOperator, SpaceLabel};

/// First zero of the Airy function Ai.
pub const AIRY_A1: f64 = -2.33811;

/// `a = −a₁ / 2^{1/3}`.
pub fn airy_constant() -> f64 {
    -AIRY_A1 / 2f64.powf(1.0 / 3.0)
}

pub fn phase_family(d: usize) -> Result<ParamFamily> {
    ParamFamily::phase(d, Prior::Uniform)
}

pub fn phase_choi(d: usize, theta: f64) -> Result<LabeledOperator> {
    phase_family(d)?.choi(theta)
}

pub fn phase_comb(d: usize, theta: f64) -> Result<Comb> {
    phase_family(d)?.comb(theta)
}

pub fn phase_task_operator(d: usize) -> Result<TaskOperator> {
    task_operator(&phase_family(d)?)
}

/// `2 − 4(1−√(1−E))√(1−E)` for `E ≤ 3/4`, else 1.
pub fn qubit_cost_closed_form(e: f64) -> f64 {
    if e > 0.75 {
        return 1.0;
    }
    let s = (1.0 - e.max(0.0)).sqrt();
    2.0 - 4.0 * (1.0 - s) * s
}

/// Optimal qubit instrument for `E ≤ 3/4` with `κ = 1 − √(1−E)`.
#[derive(Clone, Debug)]
pub struct QubitInstrument {
    pub kappa: f64,
    pub t0: CMat,
    pub t1: CMat,
    /// Reduced first level `T^(1)` on the probe's first output.
    pub first: CMat,
}

impl QubitInstrument {
    pub fn instrument(&self) -> Vec<CMat> {
        vec![self.t0.clone(), self.t1.clone()]
    }

    pub fn comb(&self) -> Result<Comb> {
        assemble_probe(&phase_family(2)?.layout(2), &self.instrument(), true)
    }

    pub fn cost(&self) -> Result<f64> {
        Ok(average_cost(&self.instrument(), &phase_task_operator(2)?).0)
    }
}

pub fn qubit_optimal_instrument(e: f64) -> Result<QubitInstrument> {
    if !(0.0..=0.75).contains(&e) {
        return Err(Error::InvalidArgument(format!("E = {e} outside [0, 3/4]")));
    }
    let k = 1.0 - (1.0 - e).sqrt();
    let m = |d: [f64; 4], off: f64| {
        let mut t = CMat::from_diagonal(&CVec::from_iterator(4, d.iter().map(|&v| cr(v))));
        t[(0, 3)] = cr(off);
        t[(3, 0)] = cr(off);
        t
    };
    let kk = k * (1.0 - k);
    Ok(QubitInstrument {
        kappa: k,
        t0: m([(1.0 - k).powi(2), 0.0, k, k * k], kk),
        t1: m([kk, 1.0 - k, 0.0, kk], -kk),
        first: CMat::from_diagonal(&CVec::from_vec(vec![cr(1.0 - k), cr(k)])),
    })
}

/// `|ψ_d⟩ = √(2/d) Σ_j sin(πj/d)|j⟩`.
pub fn sine_state(d: usize) -> CVec {
    let s = (2.0 / d as f64).sqrt();
    CVec::from_iterator(d, (0..d).map(|j| cr(s * (PI * j as f64 / d as f64).sin())))
}

/// `(I⊗F)|Ω⟩⟨Ω|(I⊗F†)` from `out1` to the register.
pub fn fourier_measurement(d: usize) -> Result<LabeledOperator> {
    let f = fourier(d);
    let mut v = CVec::zeros(d * d);
    for j in 0..d {
        for k in 0..d {
            v[j * d + k] = f[(k, j)];
        }
    }
    LabeledOperator::from_ket(
        vec![SpaceLabel::equally_spaced("out1", d), SpaceLabel::equally_spaced(crate::metrology::REGISTER, d)],
        &v,
    )
}

pub fn sine_cost_closed_form(d: usize) -> f64 {
    2.0 - 2.0 * (PI / d as f64).cos()
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingPoint {
    pub d: usize,
    pub cost: f64,
    pub cost_closed_form: f64,
    pub probe_energy: f64,
    pub measurement_energy: f64,
    pub total_energy_bound: f64,
    pub e_global: f64,
}

#[derive(Clone, Debug)]
pub struct SineStrategy {
    pub point: ScalingPoint,
    pub comb: Comb,
    pub instrument: Vec<CMat>,
}

/// Sine probe followed by a Fourier-basis measurement.
pub fn sine_probe_strategy(d: usize) -> Result<SineStrategy> {
    if d < 2 {
        return Err(Error::InvalidArgument("sine strategy needs d >= 2".into()));
    }
    let psi = sine_state(d);
    let prep = LabeledOperator::from_ket(vec![SpaceLabel::equally_spaced("in1", d)], &psi)?;
    let t = prep.tensor(&fourier_measurement(d)?)?;
    let layout = phase_family(d)?.layout(d);
    let dim = d * d;
    let instrument: Vec<CMat> =
        (0..d).map(|x| CMat::from_fn(dim, dim, |i, k| t.matrix()[(i * d + x, k * d + x)])).collect();
    let comb = assemble_probe(&layout, &instrument, true)?;
    let audit = comb.energy_audit()?;
    let j = phase_task_operator(d)?;
    let (cost, _) = average_cost(&instrument, &j);
    let probe_energy = audit.per_step_local[0];
    let measurement_energy = audit.per_step_local[1];
    Ok(SineStrategy {
        point: ScalingPoint {
            d,
            cost,
            cost_closed_form: sine_cost_closed_form(d),
            probe_energy,
            measurement_energy,
            total_energy_bound: 1.5 * d as f64 - 1.0,
            e_global: audit.e_global,
        },
        comb,
        instrument,
    })
}

/// Best sine-strategy cost over `d' ≤ d` whose global energy fits in `E`;
/// the ground-state probe (cost 2) is always available.
pub fn matched_sine_cost(e: f64, d: usize) -> Result<f64> {
    let mut best: f64 = 2.0;
    for dd in 2..=d {
        let s = sine_probe_strategy(dd)?;
        if s.point.e_global <= e + 1e-12 {
            best = best.min(s.point.cost);
        }
    }
    Ok(best)
}

/// Smallest eigenvalue of the symmetric tridiagonal matrix by Sturm bisection.
pub fn tridiagonal_lambda_min(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    let count_below = |x: f64| -> usize {
        let mut c = 0;
        let mut q = 1.0;
        for i in 0..n {
            let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
            q = diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
            if q == 0.0 {
                q = -f64::MIN_POSITIVE;
            }
            if q < 0.0 {
                c += 1;
            }
        }
        c
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    hi = hi.min(diag.iter().cloned().fold(f64::INFINITY, f64::min));
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `Eγ − λ_min(γH_d + 2A_d)`.
pub fn lower_bound_objective(e: f64, d: usize, gamma: f64) -> f64 {
    let diag: Vec<f64> = (0..d).map(|n| gamma * n as f64).collect();
    let off = vec![1.0; d - 1];
    e * gamma - tridiagonal_lambda_min(&diag, &off)
}

/// `2 − min_{γ≥0} [Eγ − λ_min(γH_d + 2A_d)]`.
pub fn lower_bound(e: f64, d: usize) -> Result<f64> {
    if d < 2 || !(e >= 0.0) {
        return Err(Error::InvalidArgument(format!("lower bound needs d >= 2 and E >= 0 (d={d}, E={e})")));
    }
    let f = |g: f64| lower_bound_objective(e, d, g);
    let mut gmax = 1.0;
    while f(2.0 * gmax) < f(gmax) - 1e-10 && gmax < 1e15 {
        gmax *= 2.0;
    }
    let (mut a, mut b) = (0.0, 2.0 * gmax);
    while b - a > 1e-10 * (1.0 + b) {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f(m1) <= f(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let best = f(0.5 * (a + b)).min(f(0.0));
    Ok(2.0 - best)
}

/// `(E+1) / (((3E+3)/(2a))³ + (3E+3)/2)`.
pub fn asymptotic_lower_bound(e: f64) -> f64 {
    let a = airy_constant();
    let s = (3.0 * e + 3.0) / 2.0;
    (e + 1.0) / ((s / a).powi(3) + s)
}

/// See-saw optimum for the `d`-level phase channel, warm-started from the
/// evenly spaced estimator.
pub fn optimized_cost(e: f64, d: usize, battery: Battery, opts: &SeesawOptions) -> Result<StrategyResult> {
    let fam = phase_family(d)?;
    let j = task_operator(&fam)?;
    let mut opts = opts.clone();
    opts.warm.insert(0, uniform_phases(d));
    seesaw(&j, battery, e, &fam.layout(d), &opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comb::compose;

    #[test]
    fn closed_form_values() {
        assert_eq!(qubit_cost_closed_form(0.0), 2.0);
        assert!((qubit_cost_closed_form(0.75) - 1.0).abs() < 1e-15);
        assert!((qubit_cost_closed_form(0.5) - 1.1715729).abs() < 1e-7);
        assert_eq!(qubit_cost_closed_form(1.2), 1.0);
    }

    #[test]
    fn phase_choi_basics() {
        let c0 = phase_choi(3, 0.0).unwrap();
        let d = 3;
        let mut omega = CMat::zeros(9, 9);
        for j in 0..d {
            for k in 0..d {
                omega[(j * d + j, k * d + k)] = cr(1.0);
            }
        }
        assert!((c0.matrix() - omega).iter().all(|z| z.norm() < 1e-15));
        for th in [0.3, 1.7, 4.0] {
            assert!(phase_comb(3, th).unwrap().energy_global().unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn phases_compose() {
        let a = phase_comb(2, 0.4).unwrap();
        let b = phase_comb(2, 1.1).unwrap();
        let ab = compose(&a, &b).unwrap();
        let want = phase_choi(2, 1.5).unwrap();
        let got = ab.op().permute(&want.ids()).unwrap();
        assert!((got.matrix() - want.matrix()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn qubit_instrument_is_feasible() {
        for e in [0.0, 0.1, 0.4, 0.75] {
            let q = qubit_optimal_instrument(e).unwrap();
            let comb = q.comb().unwrap();
            assert!(comb.is_valid());
            let audit = comb.energy_audit().unwrap();
            assert!((audit.per_prefix_global[0] - q.kappa).abs() < 1e-12);
            assert!(audit.e_global <= e + 1e-12);
            assert!((q.cost().unwrap() - qubit_cost_closed_form(e)).abs() < 1e-12);
        }
        assert!((qubit_optimal_instrument(0.75).unwrap().t0[(3, 0)].re - 0.25).abs() < 1e-15);
        assert!(qubit_optimal_instrument(0.8).is_err());
    }

    #[test]
    fn sine_strategy_small_d() {
        let s2 = sine_probe_strategy(2).unwrap();
        assert!((s2.point.cost - 2.0).abs() < 1e-12);
        let s4 = sine_probe_strategy(4).unwrap();
        assert!((s4.point.cost - (2.0 - 2f64.sqrt())).abs() < 1e-9);
        assert!((s4.point.probe_energy - 2.0).abs() < 1e-9);
        assert!(s4.point.measurement_energy <= 3.0 + 1e-9);
    }

    #[test]
    fn lower_bound_properties() {
        for d in [2, 3, 5] {
            assert!((lower_bound(0.0, d).unwrap() - 2.0).abs() < 1e-6);
            let want = -2.0 * (d as f64 * PI / (d as f64 + 1.0)).cos();
            assert!((lower_bound_objective(0.7, d, 0.0) - want).abs() < 1e-12);
        }
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let v = lower_bound(0.1 * k as f64, 4).unwrap();
            assert!(v <= prev + 1e-9);
            prev = v;
        }
    }

    #[test]
    fn asymptotic_constants() {
        assert!((airy_constant() - 1.85576).abs() < 1e-5);
        assert!((asymptotic_lower_bound(9.0) - 0.018414).abs() < 1e-6);
        let a = airy_constant();
        let ratio = asymptotic_lower_bound(1e3) * 1e6 / (8.0 * a.powi(3) / 27.0);
        assert!((ratio - 1.0).abs() < 0.01);
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let diag = [0.0, 0.5, 1.0, 1.5];
        let off = [1.0, 1.0, 1.0];
        let m = nalgebra::DMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                diag[i]
            } else if i.abs_diff(j) == 1 {
                1.0
            } else {
                0.0
            }
        });
        let e = nalgebra::SymmetricEigen::new(m).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((tridiagonal_lambda_min(&diag, &off) - e).abs() < 1e-12);
    }
}
