//! Quantum combs: causality checks, link product, sequential composition and
//! the global/local energy-consumption functionals.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::random_isometry;
use crate::tensor::{
    cr, factor_permutation, hermitian_basis, tensor_product, traceless_basis, CMat, LabeledOperator, OperatorJson,
    SpaceLabel,
};

/// Frobenius tolerance for the causality residuals.
pub const COMB_TOL: f64 = 1e-8;
/// Smallest eigenvalue accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-9;

/// Battery model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Battery {
    Global,
    Local,
}

/// One step of a comb: the labels it receives and the labels it emits.
///
/// An empty input list is the trivial space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl Step {
    pub fn new(inputs: &[&str], outputs: &[&str]) -> Self {
        Step {
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn single(input: &str, output: &str) -> Self {
        Step::new(&[input], &[output])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comb {
    op: LabeledOperator,
    steps: Vec<Step>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidityReport {
    /// `‖Tr_{out_n}[C^(n)] − C^(n−1)⊗I_{in_n}‖_F` for n = 1..N.
    pub level_residuals: Vec<f64>,
    /// `|C^(0) − 1|`.
    pub normalization_residual: f64,
    pub min_eigenvalue: f64,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyAudit {
    pub per_step_local: Vec<f64>,
    pub per_prefix_global: Vec<f64>,
    pub e_local: f64,
    pub e_global: f64,
}

impl Comb {
    /// Attach a step structure; every label must occur in exactly one step.
    pub fn new(op: LabeledOperator, steps: Vec<Step>) -> Result<Self> {
        let mut seen: Vec<&str> = Vec::new();
        for s in &steps {
            for id in s.inputs.iter().chain(&s.outputs) {
                if !op.has(id) {
                    return Err(Error::DimensionMismatch(format!("step label `{id}` not in operator")));
                }
                if seen.contains(&id.as_str()) {
                    return Err(Error::DuplicateLabel(id.clone()));
                }
                seen.push(id);
            }
        }
        if seen.len() != op.labels().len() {
            return Err(Error::DimensionMismatch("operator has labels outside the steps".into()));
        }
        Ok(Comb { op, steps })
    }

    /// Single-step comb from a channel Choi operator on `(in, out)`.
    pub fn channel(choi: LabeledOperator, input: &str, output: &str) -> Result<Self> {
        Comb::new(choi, vec![Step::single(input, output)])
    }

    pub fn op(&self) -> &LabeledOperator {
        &self.op
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn label(&self, id: &str) -> &SpaceLabel {
        self.op.label(id).expect("step labels belong to the operator")
    }

    pub fn input_ids(&self) -> Vec<&str> {
        self.steps.iter().flat_map(|s| s.inputs.iter().map(String::as_str)).collect()
    }

    pub fn output_ids(&self) -> Vec<&str> {
        self.steps.iter().flat_map(|s| s.outputs.iter().map(String::as_str)).collect()
    }

    fn dim_of(&self, ids: &[String]) -> usize {
        ids.iter().map(|id| self.label(id).dim).product()
    }

    pub fn input_dim(&self) -> usize {
        self.steps.iter().map(|s| self.dim_of(&s.inputs)).product()
    }

    /// Labels in step order `in_1, out_1, …, in_N, out_N`.
    pub fn step_order(&self) -> Vec<&str> {
        self.steps.iter().flat_map(|s| s.inputs.iter().chain(&s.outputs).map(String::as_str)).collect()
    }

    /// `C^(n)` for `n = 0..=N`; `C^(0)` is a scalar operator.
    pub fn reduced(&self, n: usize) -> Result<LabeledOperator> {
        if n > self.n_steps() {
            return Err(Error::InvalidArgument(format!("level {n} exceeds {} steps", self.n_steps())));
        }
        let mut cur = self.op.clone();
        for s in self.steps[n..].iter().rev() {
            let ids: Vec<&str> = s.inputs.iter().chain(&s.outputs).map(String::as_str).collect();
            let d = self.dim_of(&s.inputs) as f64;
            cur = cur.partial_trace(&ids)?.scale(cr(1.0 / d));
        }
        Ok(cur)
    }

    pub fn validate(&self, tol: f64) -> Result<ValidityReport> {
        let mut residuals = vec![0.0; self.n_steps()];
        let mut cur = self.op.clone();
        for n in (0..self.n_steps()).rev() {
            let s = &self.steps[n];
            let outs: Vec<&str> = s.outputs.iter().map(String::as_str).collect();
            let ins: Vec<&str> = s.inputs.iter().map(String::as_str).collect();
            let traced = cur.partial_trace(&outs)?;
            let d = self.dim_of(&s.inputs) as f64;
            let prev = traced.partial_trace(&ins)?.scale(cr(1.0 / d));
            let in_labels: Vec<SpaceLabel> = s.inputs.iter().map(|id| self.label(id).clone()).collect();
            let rebuilt = tensor_product(&prev, &LabeledOperator::identity(in_labels)?)?;
            residuals[n] = traced.distance(&rebuilt)?;
            cur = prev;
        }
        let normalization_residual = (cur.trace() - cr(1.0)).norm();
        let min_eigenvalue = self.op.lambda_min()?;
        let valid = residuals.iter().all(|&r| r <= tol) && normalization_residual <= tol && min_eigenvalue >= -PSD_TOL;
        Ok(ValidityReport { level_residuals: residuals, normalization_residual, min_eigenvalue, valid })
    }

    pub fn is_valid(&self) -> bool {
        self.validate(COMB_TOL).map(|r| r.valid).unwrap_or(false)
    }

    fn require_valid(&self) -> Result<()> {
        let r = self.validate(COMB_TOL)?;
        if r.valid {
            Ok(())
        } else {
            Err(Error::InvalidComb(format!(
                "residuals {:?}, normalization {:.3e}, λ_min {:.3e}",
                r.level_residuals, r.normalization_residual, r.min_eigenvalue
            )))
        }
    }

    /// `Tr_outs[(H_out ⊗ I) C] − H_in^T ⊗ I` over the given step range, on all inputs.
    fn energy_operator(&self, steps: std::ops::Range<usize>) -> Result<LabeledOperator> {
        let out_ids: Vec<&str> =
            self.steps[steps.clone()].iter().flat_map(|s| s.outputs.iter().map(String::as_str)).collect();
        let in_ids: Vec<&str> = self.steps[steps].iter().flat_map(|s| s.inputs.iter().map(String::as_str)).collect();
        let all_ins = self.input_ids();
        let in_labels: Vec<SpaceLabel> = all_ins.iter().map(|id| self.label(id).clone()).collect();
        let mut acc = LabeledOperator::hamiltonian_sum(&in_labels, &in_ids)?.transpose().scale(cr(-1.0));
        for id in out_ids {
            let mut keep = all_ins.clone();
            keep.push(id);
            let local = self.op.reduce_to(&keep)?;
            let h = LabeledOperator::hamiltonian_sum(local.labels(), &[id])?;
            acc = acc.add(&h.mul(&local)?.partial_trace(&[id])?)?;
        }
        Ok(acc)
    }

    /// `O_n` of the global functional, `n` in `1..=N`.
    pub fn global_operator(&self, n: usize) -> Result<LabeledOperator> {
        self.energy_operator(0..n)
    }

    /// `O'_n` of the local functional, `n` in `1..=N`.
    pub fn local_operator(&self, n: usize) -> Result<LabeledOperator> {
        self.energy_operator(n - 1..n)
    }

    /// Energy audit without checking causality first.
    pub fn energy_audit_unchecked(&self) -> Result<EnergyAudit> {
        let n = self.n_steps();
        let mut per_prefix_global = Vec::with_capacity(n);
        let mut per_step_local = Vec::with_capacity(n);
        for k in 1..=n {
            per_prefix_global.push(herm_lambda_max(&self.global_operator(k)?)?);
            per_step_local.push(herm_lambda_max(&self.local_operator(k)?)?.max(0.0));
        }
        let e_global = per_prefix_global.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e_local = per_step_local.iter().sum();
        Ok(EnergyAudit { per_step_local, per_prefix_global, e_local, e_global })
    }

    pub fn energy_audit(&self) -> Result<EnergyAudit> {
        self.require_valid()?;
        self.energy_audit_unchecked()
    }

    /// `E_gl(C) = max_n λ_max(O_n)`.
    pub fn energy_global(&self) -> Result<f64> {
        Ok(self.energy_audit()?.e_global)
    }

    /// `E_loc(C) = Σ_n max(λ_max(O'_n), 0)`.
    pub fn energy_local(&self) -> Result<f64> {
        Ok(self.energy_audit()?.e_local)
    }

    pub fn energy(&self, model: Battery) -> Result<f64> {
        match model {
            Battery::Global => self.energy_global(),
            Battery::Local => self.energy_local(),
        }
    }

    /// Whether the comb runs on budget `e` under `model` (slack 1e-9).
    pub fn is_energy_constrained(&self, e: f64, model: Battery) -> Result<bool> {
        Ok(self.energy(model)? <= e + 1e-9)
    }

    pub fn to_json(&self) -> CombJson {
        CombJson {
            op: self.op.to_json(),
            steps: self.steps.iter().map(|s| (LabelSet::from_ids(&s.inputs), LabelSet::from_ids(&s.outputs))).collect(),
        }
    }

    pub fn from_json(j: &CombJson) -> Result<Self> {
        let op = LabeledOperator::from_json(&j.op)?;
        let steps = j.steps.iter().map(|(i, o)| Step { inputs: i.ids(), outputs: o.ids() }).collect();
        Comb::new(op, steps)
    }
}

fn herm_lambda_max(op: &LabeledOperator) -> Result<f64> {
    let m = op.matrix();
    let h = (m + m.adjoint()) * cr(0.5);
    crate::tensor::lambda_max(&h)
}

/// Either a single label id or a list of ids; `""` and `"TRIVIAL"` mean no label.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelSet {
    One(String),
    Many(Vec<String>),
}

impl LabelSet {
    fn from_ids(ids: &[String]) -> Self {
        if ids.len() == 1 {
            LabelSet::One(ids[0].clone())
        } else {
            LabelSet::Many(ids.to_vec())
        }
    }

    fn ids(&self) -> Vec<String> {
        let keep = |s: &String| !s.is_empty() && s != "TRIVIAL";
        match self {
            LabelSet::One(s) => std::iter::once(s).filter(|s| keep(s)).cloned().collect(),
            LabelSet::Many(v) => v.iter().filter(|s| keep(s)).cloned().collect(),
        }
    }
}

/// Comb file: the operator format plus `"steps":[["in","out"],…]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CombJson {
    #[serde(flatten)]
    pub op: OperatorJson,
    pub steps: Vec<(LabelSet, LabelSet)>,
}

/// Link product `Tr_S[(A^{T_S} ⊗ I)(I ⊗ B)]` over the shared labels `S`.
pub fn link(a: &LabeledOperator, b: &LabeledOperator) -> Result<LabeledOperator> {
    let shared: Vec<&str> = a.ids().into_iter().filter(|id| b.has(id)).collect();
    for id in &shared {
        if a.label(id).unwrap().dim != b.label(id).unwrap().dim {
            return Err(Error::DimensionMismatch(format!("shared label `{id}`")));
        }
    }
    if shared.is_empty() {
        return tensor_product(a, b);
    }
    let mut all = a.labels().to_vec();
    all.extend(b.labels().iter().filter(|l| !a.has(&l.id)).cloned());
    let at = a.partial_transpose(&shared)?.embed(&all)?;
    let be = b.embed(&all)?;
    let prod = LabeledOperator::new(all, at.matrix() * be.matrix())?;
    prod.partial_trace(&shared)
}

fn fresh_id(taken: &[String], base: &str) -> String {
    let mut id = format!("{base}'");
    while taken.iter().any(|t| t == &id) {
        id.push('\'');
    }
    id
}

/// Sequential composition: output `n` of `a` feeds input `n` of `b`.
///
/// Step `n` of the result has the inputs of `a` and the outputs of `b`.
/// Output labels of `b` that clash with the inputs of `a` get primes appended.
pub fn compose(a: &Comb, b: &Comb) -> Result<Comb> {
    if a.n_steps() != b.n_steps() {
        return Err(Error::WiringMismatch(format!("{} vs {} steps", a.n_steps(), b.n_steps())));
    }
    let mut renames: Vec<(String, String)> = Vec::new();
    for (sa, sb) in a.steps.iter().zip(&b.steps) {
        if sa.outputs.len() != sb.inputs.len() {
            return Err(Error::WiringMismatch("output/input label counts differ".into()));
        }
        for (o, i) in sa.outputs.iter().zip(&sb.inputs) {
            if a.label(o).dim != b.label(i).dim {
                return Err(Error::WiringMismatch(format!("`{o}` and `{i}` have different dims")));
            }
            renames.push((i.clone(), o.clone()));
        }
    }
    let a_ids: Vec<String> = a.op.ids().iter().map(|s| s.to_string()).collect();
    let mut taken: Vec<String> = a_ids.clone();
    taken.extend(b.op.ids().iter().map(|s| s.to_string()));
    let mut temp: Vec<(String, String)> = Vec::new();
    for id in b.output_ids() {
        let t = format!("__tmp:{id}");
        renames.push((id.to_string(), t.clone()));
        temp.push((t, id.to_string()));
    }
    let map: Vec<(&str, &str)> = renames.iter().map(|(x, y)| (x.as_str(), y.as_str())).collect();
    let b_op = b.op.relabel(&map)?;
    let linked = link(&a.op, &b_op)?;
    let in_ids: Vec<String> = a.input_ids().iter().map(|s| s.to_string()).collect();
    let mut final_names: Vec<(String, String)> = Vec::new();
    for (t, orig) in &temp {
        let name = if in_ids.contains(orig) || final_names.iter().any(|(_, n)| n == orig) {
            let n = fresh_id(&taken, orig);
            taken.push(n.clone());
            n
        } else {
            orig.clone()
        };
        final_names.push((t.clone(), name));
    }
    let map: Vec<(&str, &str)> = final_names.iter().map(|(x, y)| (x.as_str(), y.as_str())).collect();
    let op = linked.relabel(&map)?;
    let lookup = |id: &str| -> String {
        final_names
            .iter()
            .find(|(t, _)| t == &format!("__tmp:{id}"))
            .map(|(_, n)| n.clone())
            .unwrap_or_else(|| id.to_string())
    };
    let steps: Vec<Step> = a
        .steps
        .iter()
        .zip(&b.steps)
        .map(|(sa, sb)| Step { inputs: sa.inputs.clone(), outputs: sb.outputs.iter().map(|o| lookup(o)).collect() })
        .collect();
    let order: Vec<String> = steps.iter().flat_map(|s| s.inputs.iter().chain(&s.outputs).cloned()).collect();
    let order_ref: Vec<&str> = order.iter().map(String::as_str).collect();
    Comb::new(op.permute(&order_ref)?, steps)
}

/// Homogeneous linear functionals whose vanishing on an operator `X` over
/// `labels` expresses the causality conditions, up to normalization.
///
/// `steps` lists, in causal order, the input and output labels of each step;
/// the outputs of the final step may be absent from `labels` (they are then
/// summed over by the caller). Each functional is `B ⊗ G ⊗ I` with `B` from a
/// Hermitian basis on all earlier steps, `G` traceless on the inputs of step
/// `n`, and the identity elsewhere; the collection is linearly independent
/// and orthogonal to the identity.
pub fn causality_functionals(labels: &[SpaceLabel], steps: &[Step]) -> Result<Vec<LabeledOperator>> {
    let find = |id: &str| -> Result<SpaceLabel> {
        labels.iter().find(|l| l.id == id).cloned().ok_or_else(|| Error::UnknownLabel(id.into()))
    };
    let mut out = Vec::new();
    let mut prefix: Vec<SpaceLabel> = Vec::new();
    for (n, s) in steps.iter().enumerate() {
        let ins: Vec<SpaceLabel> = s.inputs.iter().map(|id| find(id)).collect::<Result<_>>()?;
        let d_in: usize = ins.iter().map(|l| l.dim).product();
        if d_in > 1 {
            let d_pre: usize = prefix.iter().map(|l| l.dim).product();
            let bs = hermitian_basis(d_pre);
            let gs = traceless_basis(d_in);
            for b in &bs {
                let bop = LabeledOperator::new(prefix.clone(), b.clone())?;
                for g in &gs {
                    let gop = LabeledOperator::new(ins.clone(), g.clone())?;
                    out.push(tensor_product(&bop, &gop)?.embed(labels)?);
                }
            }
        }
        prefix.extend(ins);
        if n + 1 < steps.len() {
            for id in &s.outputs {
                prefix.push(find(id)?);
            }
        }
    }
    Ok(out)
}

/// Random valid comb built from sequential random isometries with memory.
///
/// `steps` holds `(input, output)` labels; `memory[n]` is the memory
/// dimension after step `n` (the last entry bounds the rank of the comb).
pub fn random_comb<R: Rng>(steps: &[(SpaceLabel, SpaceLabel)], memory: &[usize], rng: &mut R) -> Result<Comb> {
    if memory.len() != steps.len() {
        return Err(Error::InvalidArgument("one memory dimension per step".into()));
    }
    let mut w = CMat::from_element(1, 1, cr(1.0));
    let mut out_dims: Vec<usize> = Vec::new();
    let mut mem = 1usize;
    for ((inp, outp), &m_next) in steps.iter().zip(memory) {
        let (di, d_o) = (inp.dim, outp.dim);
        if d_o * m_next < di * mem {
            return Err(Error::InvalidArgument("memory too small for an isometry".into()));
        }
        // w: rows (outs.., mem), cols ins..; append in_n as identity factor.
        let wi = w.kronecker(&CMat::identity(di, di));
        let mut dims = out_dims.clone();
        dims.push(mem);
        dims.push(di);
        let k = dims.len();
        let mut perm: Vec<usize> = (0..k - 2).collect();
        perm.push(k - 1);
        perm.push(k - 2);
        let map = factor_permutation(&dims, &perm);
        let wp = CMat::from_fn(wi.nrows(), wi.ncols(), |r, c| wi[(map[r], c)]);
        let v = random_isometry(d_o * m_next, di * mem, rng);
        let d_prev: usize = out_dims.iter().product();
        let full = CMat::identity(d_prev, d_prev).kronecker(&v);
        w = full * wp;
        out_dims.push(d_o);
        mem = m_next;
    }
    let in_labels: Vec<SpaceLabel> = steps.iter().map(|(i, _)| i.clone()).collect();
    let out_labels: Vec<SpaceLabel> = steps.iter().map(|(_, o)| o.clone()).collect();
    let d_in: usize = in_labels.iter().map(|l| l.dim).product();
    let d_out: usize = out_labels.iter().map(|l| l.dim).product();
    let big = d_in * d_out * mem;
    let vec = crate::tensor::CVec::from_fn(big, |idx, _| {
        let i = idx / (d_out * mem);
        let r = idx % (d_out * mem);
        w[(r, i)]
    });
    let mut labels = in_labels.clone();
    labels.extend(out_labels.iter().cloned());
    let mem_label = SpaceLabel::new("__memory", mem);
    labels.push(mem_label.clone());
    let rho = LabeledOperator::from_ket(labels, &vec)?.partial_trace(&[mem_label.id.as_str()])?;
    let order: Vec<&str> = steps.iter().flat_map(|(i, o)| [i.id.as_str(), o.id.as_str()]).collect();
    let step_list = steps.iter().map(|(i, o)| Step::single(&i.id, &o.id)).collect();
    Comb::new(rho.permute(&order)?, step_list)
}
