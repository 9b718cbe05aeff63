//! Randomized property checks shared by the proptest suites and the
//! acceptance runner. Each check returns `Err` with a message on violation.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;

use comb_energy::comb::{compose, link, random_comb, Battery, Comb};
use comb_energy::metrology::{optimize_fixed, seesaw, task_operator, ParamFamily, Prior, SeesawOptions};
use comb_energy::random::{random_density, random_hermitian, random_unitary, rng, SeededRng};
use comb_energy::tensor::{cr, CMat, LabeledOperator, SpaceLabel};
use nalgebra::DVector;

pub type Check = Result<(), String>;

/// Random Hamiltonian with zero ground energy in a random eigenbasis.
fn label(id: &str, d: usize, r: &mut SeededRng) -> SpaceLabel {
    let mut levels: Vec<f64> = (0..d).map(|k| if k == 0 { 0.0 } else { r.random_range(0.0..2.0) }).collect();
    levels.sort_by(f64::total_cmp);
    let u = random_unitary(d, r);
    let diag = CMat::from_diagonal(&DVector::from_iterator(d, levels.iter().map(|&e| cr(e))));
    let h = &u * diag * u.adjoint();
    let h = (&h + h.adjoint()) * cr(0.5);
    SpaceLabel::with_hamiltonian(id, h).expect("hamiltonian")
}

fn random_op(labels: Vec<SpaceLabel>, r: &mut SeededRng) -> LabeledOperator {
    let d = labels.iter().map(|l| l.dim).product();
    LabeledOperator::new(labels, random_hermitian(d, r)).expect("dims")
}

/// Random comb with the given step dims and random Hamiltonians.
pub fn random_energy_comb(n: usize, dims: &[(usize, usize)], prefix: (&str, &str), r: &mut SeededRng) -> Comb {
    let steps: Vec<(SpaceLabel, SpaceLabel)> = (0..n)
        .map(|k| (label(&format!("{}{k}", prefix.0), dims[k].0, r), label(&format!("{}{k}", prefix.1), dims[k].1, r)))
        .collect();
    let mut memory = Vec::new();
    let mut mem = 1;
    for (i, o) in &steps {
        mem = (i.dim * mem).div_ceil(o.dim).max(1) * r.random_range(1..=2);
        memory.push(mem);
    }
    random_comb(&steps, &memory, r).expect("random comb")
}

pub fn link_associativity(seed: u64) -> Check {
    let mut r = rng(seed);
    let d: Vec<usize> = (0..4).map(|_| r.random_range(1..=3)).collect();
    let l: Vec<SpaceLabel> = ["a", "b", "c", "e"].iter().zip(&d).map(|(id, &k)| SpaceLabel::new(*id, k)).collect();
    let a = random_op(vec![l[0].clone(), l[1].clone()], &mut r);
    let b = random_op(vec![l[1].clone(), l[2].clone()], &mut r);
    let c = random_op(vec![l[2].clone(), l[3].clone()], &mut r);
    let left = link(&link(&a, &b).map_err(|e| e.to_string())?, &c).map_err(|e| e.to_string())?;
    let right = link(&a, &link(&b, &c).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let err = left.distance(&right).map_err(|e| e.to_string())?;
    let scale = left.matrix().norm().max(1.0);
    if err <= 1e-9 * scale {
        Ok(())
    } else {
        Err(format!("associativity error {err:.3e} (scale {scale:.3e})"))
    }
}

pub fn neutralization(seed: u64) -> Check {
    let mut r = rng(seed);
    let dims: Vec<(usize, usize)> = (0..2).map(|_| (r.random_range(2..=3), r.random_range(2..=3))).collect();
    let c = random_energy_comb(2, &dims, ("i", "o"), &mut r);
    let rho1 = LabeledOperator::new(vec![c.label("i0").clone()], random_density(dims[0].0, 2, &mut r)).unwrap();
    let rho2 = LabeledOperator::new(vec![c.label("i1").clone()], random_density(dims[1].0, 2, &mut r)).unwrap();
    let full = link(c.op(), &rho1.tensor(&rho2).unwrap()).map_err(|e| e.to_string())?;
    let lhs = full.partial_trace(&["o1"]).map_err(|e| e.to_string())?;
    let rhs = link(&c.reduced(1).map_err(|e| e.to_string())?, &rho1).map_err(|e| e.to_string())?;
    let err = lhs.distance(&rhs).map_err(|e| e.to_string())?;
    if err <= 1e-9 {
        Ok(())
    } else {
        Err(format!("neutralization error {err:.3e}"))
    }
}

pub fn subadditivity(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(1..=2);
    let mid: Vec<usize> = (0..n).map(|_| r.random_range(2..=3)).collect();
    let da: Vec<(usize, usize)> = mid.iter().map(|&m| (2, m)).collect();
    let db: Vec<(usize, usize)> = mid.iter().map(|&m| (m, 2)).collect();
    let a = random_energy_comb(n, &da, ("x", "m"), &mut r);
    let b = random_energy_comb(n, &db, ("m", "y"), &mut r);
    let mut op = b.op().clone();
    for k in 0..n {
        let id = format!("m{k}");
        op = retarget(&op, &id, a.label(&id).clone());
    }
    let b = Comb::new(op, b.steps().to_vec()).map_err(|e| e.to_string())?;
    let ab = compose(&a, &b).map_err(|e| e.to_string())?;
    for model in [Battery::Global, Battery::Local] {
        let (eab, ea, eb) = (
            ab.energy(model).map_err(|e| e.to_string())?,
            a.energy(model).map_err(|e| e.to_string())?,
            b.energy(model).map_err(|e| e.to_string())?,
        );
        if eab > ea + eb + 1e-9 {
            return Err(format!("{model:?}: {eab} > {ea} + {eb}"));
        }
    }
    Ok(())
}

/// Give the factor `id` the Hamiltonian of `like`; a composed wire carries one.
fn retarget(op: &LabeledOperator, id: &str, like: SpaceLabel) -> LabeledOperator {
    let labels: Vec<SpaceLabel> =
        op.labels().iter().map(|l| if l.id == id { like.clone() } else { l.clone() }).collect();
    LabeledOperator::new(labels, op.matrix().clone()).unwrap()
}

pub fn global_below_local(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(1..=3);
    let dmax = if n == 3 { 2 } else { 3 };
    let dims: Vec<(usize, usize)> = (0..n).map(|_| (r.random_range(2..=dmax), r.random_range(2..=dmax))).collect();
    let c = random_energy_comb(n, &dims, ("i", "o"), &mut r);
    let audit = c.energy_audit().map_err(|e| e.to_string())?;
    if audit.e_global <= audit.e_local + 1e-9 {
        Ok(())
    } else {
        Err(format!("E_gl {} > E_loc {}", audit.e_global, audit.e_local))
    }
}

/// Free see-saw from random starts reaches the `{0, π}` optimum.
pub fn fixed_vs_free(seed: u64) -> Check {
    let mut r = rng(seed);
    let e: f64 = r.random_range(0.0..1.5);
    let battery = if r.random_bool(0.5) { Battery::Global } else { Battery::Local };
    let fam = ParamFamily::phase(2, Prior::Uniform).map_err(|e| e.to_string())?;
    let j = task_operator(&fam).map_err(|e| e.to_string())?;
    let layout = fam.layout(2);
    let opts = SeesawOptions { restarts: 2, seed, ..Default::default() };
    let fixed = optimize_fixed(&j, battery, e, &layout, &[0.0, PI], &opts).map_err(|e| e.to_string())?;
    let free = seesaw(&j, battery, e, &layout, &opts).map_err(|e| e.to_string())?;
    if (fixed.cost - free.cost).abs() <= 1e-6 {
        Ok(())
    } else {
        Err(format!("E={e:.4} {battery:?}: fixed {} vs free {}", fixed.cost, free.cost))
    }
}
