//! Local estimation: Fisher information of energy-limited qubit probes and
//! Bayesian estimation under a narrow Gaussian prior.

use serde::Serialize;

use crate::comb::Battery;
use crate::conic::LinearForm;
use crate::error::{Error, Result};
use crate::metrology::{
    build_probe_program, seesaw, task_operator, ParamFamily, Prior, SeesawOptions, StrategyResult, TaskOperator,
};
use crate::phase::phase_family;
use crate::tensor::{CMat, LabeledOperator, C64};

/// `dC_θ/dθ` for the `d`-level phase channel.
pub fn phase_choi_derivative(d: usize, theta: f64) -> Result<LabeledOperator> {
    let c = phase_family(d)?.choi(0.0)?;
    let m = CMat::from_fn(d * d, d * d, |r, s| {
        if r % (d + 1) != 0 || s % (d + 1) != 0 {
            return C64::new(0.0, 0.0);
        }
        let (j, k) = ((r / (d + 1)) as f64, (s / (d + 1)) as f64);
        C64::new(0.0, j - k) * C64::from_polar(1.0, (j - k) * theta)
    });
    LabeledOperator::new(c.labels().to_vec(), m)
}

pub fn default_p0_grid() -> Vec<f64> {
    (1..=99).map(|k| k as f64 / 100.0).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct FisherPoint {
    pub p0: f64,
    pub slope_plus: f64,
    pub slope_minus: f64,
    pub fisher: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FisherResult {
    pub e: f64,
    pub best_f: f64,
    pub p0_star: Option<f64>,
    /// `'+'` or `'-'`: which slope sign attained the best value.
    pub branch: Option<char>,
    pub p0_range: (f64, f64),
    pub curve: Vec<FisherPoint>,
    pub skipped: Vec<f64>,
    /// `{T₀, T₁}` at `p0_star` on the winning branch.
    #[serde(skip)]
    pub instrument: Option<Vec<CMat>>,
}

impl FisherResult {
    /// Reciprocal Fisher information, as plotted.
    pub fn nu_rep(&self) -> f64 {
        1.0 / self.best_f
    }
}

/// Maximize the classical Fisher information of the qubit phase channel at `θ`
/// over globally energy-limited probes, scanning the outcome probability `p₀`.
pub fn fisher_optimize(e: f64, theta: f64, p0_grid: &[f64], tol: f64) -> Result<FisherResult> {
    if p0_grid.is_empty() || p0_grid.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::InvalidArgument("p0 grid must be nonempty and inside (0, 1)".into()));
    }
    let fam = phase_family(2)?;
    let layout = fam.layout(2);
    let j = task_operator(&fam)?;
    let base = build_probe_program(&j, Battery::Global, e, &[0.0, 0.0], &layout, true)?;
    let t0 = base.instrument[0];
    let c_t = fam.choi(theta)?.matrix().transpose();
    let d_t = phase_choi_derivative(2, theta)?.matrix().transpose();

    let extreme = |sign: f64| -> Result<f64> {
        let mut p = base.problem.clone();
        p.set_objective(LinearForm::new().herm(t0, c_t.clone() * C64::new(sign, 0.0)), 0.0)?;
        Ok(sign * p.solve(tol)?.require_optimal()?.value)
    };
    let pmin = extreme(-1.0)?;
    let pmax = extreme(1.0)?;

    let mut curve = Vec::new();
    let mut skipped = Vec::new();
    let mut best: Option<(f64, f64, char, Vec<CMat>)> = None;
    for &p0 in p0_grid {
        if p0 < pmin - tol || p0 > pmax + tol {
            skipped.push(p0);
            continue;
        }
        let mut prog = base.problem.clone();
        prog.add_equality(LinearForm::new().herm(t0, c_t.clone()), p0)?;
        let mut slope = |sign: f64| -> Result<Option<(f64, Vec<CMat>)>> {
            prog.set_objective(LinearForm::new().herm(t0, d_t.clone() * C64::new(sign, 0.0)), 0.0)?;
            let r = prog.solve(tol)?;
            Ok(r.is_optimal().then(|| (r.value, base.instrument.iter().map(|v| r.herm(*v).clone()).collect())))
        };
        let ((sp, ip), (sm, im)) = match (slope(1.0)?, slope(-1.0)?) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                skipped.push(p0);
                continue;
            }
        };
        let s = sp.max(sm).max(0.0);
        let f = s * s * (1.0 / p0 + 1.0 / (1.0 - p0));
        curve.push(FisherPoint { p0, slope_plus: sp, slope_minus: sm, fisher: f });
        let branch = if sp >= sm { '+' } else { '-' };
        if best.as_ref().is_none_or(|b| f > b.0) {
            best = Some((f, p0, branch, if sp >= sm { ip } else { im }));
        }
    }
    Ok(FisherResult {
        e,
        best_f: best.as_ref().map_or(0.0, |b| b.0),
        p0_star: best.as_ref().map(|b| b.1),
        branch: best.as_ref().map(|b| b.2),
        p0_range: (pmin, pmax),
        curve,
        skipped,
        instrument: best.map(|b| b.3),
    })
}

/// Task operator of the `d`-level phase channel under `θ ∼ 𝒩(μ, σ²)`.
pub fn gaussian_task_operator(d: usize, mu: f64, sigma: f64) -> Result<TaskOperator> {
    task_operator(&ParamFamily::phase(d, Prior::Gaussian { mean: mu, std: sigma })?)
}

#[derive(Clone, Debug, Serialize)]
pub struct NarrowPriorPoint {
    pub e: f64,
    pub cost: f64,
}

/// See-saw costs along an increasing energy grid; each point is warm-started
/// from the previous point's estimator so the curve is nonincreasing.
pub fn narrow_prior_curve(
    e_grid: &[f64],
    mu: f64,
    sigma: f64,
    opts: &SeesawOptions,
) -> Result<Vec<(f64, StrategyResult)>> {
    let j = gaussian_task_operator(2, mu, sigma)?;
    let layout = phase_family(2)?.layout(2);
    let mut out: Vec<(f64, StrategyResult)> = Vec::new();
    let mut order: Vec<usize> = (0..e_grid.len()).collect();
    order.sort_by(|&a, &b| e_grid[a].total_cmp(&e_grid[b]));
    let mut warm: Option<Vec<f64>> = None;
    for &k in &order {
        let mut o = opts.clone();
        if let Some(w) = &warm {
            o.warm.insert(0, w.clone());
        }
        let r = seesaw(&j, Battery::Global, e_grid[k], &layout, &o)?;
        warm = Some(r.estimator.clone());
        out.push((e_grid[k], r));
    }
    let mut sorted: Vec<Option<(f64, StrategyResult)>> = vec![None; e_grid.len()];
    for (slot, item) in order.iter().zip(out) {
        sorted[*slot] = Some(item);
    }
    Ok(sorted.into_iter().map(|x| x.expect("filled")).collect())
}

pub fn narrow_prior_cost(e: f64, mu: f64, sigma: f64, opts: &SeesawOptions) -> Result<StrategyResult> {
    Ok(narrow_prior_curve(&[e], mu, sigma, opts)?.remove(0).1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrology::characteristic;

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-4;
        for d in [2, 3] {
            for th in [0.0, 1.0, std::f64::consts::PI] {
                let fam = phase_family(d).unwrap();
                let fd =
                    (fam.choi(th + h).unwrap().matrix() - fam.choi(th - h).unwrap().matrix()) / C64::new(2.0 * h, 0.0);
                let an = phase_choi_derivative(d, th).unwrap();
                let err = (fd - an.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
                assert!(err < 1e-6, "{err}");
                for i in 0..d * d {
                    assert_eq!(an.matrix()[(i, i)], C64::new(0.0, 0.0));
                }
            }
        }
        let d2 = phase_choi_derivative(2, 0.0).unwrap();
        assert_eq!(d2.matrix()[(0, 3)], C64::new(0.0, -1.0));
        assert_eq!(d2.matrix()[(3, 0)], C64::new(0.0, 1.0));
    }

    #[test]
    fn gaussian_entries() {
        let (mu, s) = (1.3, 0.5);
        let j = gaussian_task_operator(3, mu, s).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let v = j.matrix()[(a * 4, b * 4)];
                let t = b as f64 - a as f64 - 1.0;
                let want = C64::from_polar((-0.5 * t * t * s * s).exp(), t * mu);
                assert!((v - want).norm() < 1e-14);
                assert!((characteristic(Prior::Gaussian { mean: mu, std: s }, t) - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn gaussian_matches_quadrature() {
        let fam = phase_family(3).unwrap();
        let g = fam.clone();
        let cb = ParamFamily::from_callback(
            fam.labels.clone(),
            fam.steps.clone(),
            std::sync::Arc::new(move |t| g.choi(t)),
            Prior::Gaussian { mean: std::f64::consts::PI, std: 0.5 },
        );
        let quad = task_operator(&cb).unwrap();
        let exact = gaussian_task_operator(3, std::f64::consts::PI, 0.5).unwrap();
        let err = (quad.matrix() - exact.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn narrow_gaussian_approaches_delta() {
        let mu = 0.7;
        let j = gaussian_task_operator(2, mu, 1e-6).unwrap();
        let want = phase_family(2).unwrap().choi(mu).unwrap().matrix().transpose() * C64::from_polar(1.0, -mu);
        let err = (j.matrix() - want).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn fisher_zero_energy_is_zero() {
        let r = fisher_optimize(0.0, std::f64::consts::PI, &[0.25, 0.5, 0.75], 1e-8).unwrap();
        assert_eq!(r.best_f, 0.0);
    }

    #[test]
    fn narrow_prior_ground_cost() {
        let r = narrow_prior_cost(0.0, std::f64::consts::PI, 0.5, &SeesawOptions { restarts: 2, ..Default::default() })
            .unwrap();
        assert!((r.cost - (2.0 - 2.0 * (-0.125f64).exp())).abs() < 1e-6, "{}", r.cost);
    }
}
