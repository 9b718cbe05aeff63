//! Task operators, Holevo cost, and energy-constrained probe programs.
//!
//! A probe interleaves with an environment comb `C_θ` whose steps are
//! `(in_n → out_n)`. The probe's steps are `(∅ → in_1)`, `(out_1 → in_2)`,
//! …, `(out_N → x)`, where `x` is a classical register measured in its
//! energy eigenbasis; its Hamiltonian charges the measurement to the probe.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::comb::{causality_functionals, Battery, Comb, EnergyAudit, Step};
use crate::conic::{independent_forms, ConicProblem, HermId, LinearForm, ScalarId, Sense, SolveReport, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::random::rng;
use crate::tensor::{cr, factor_permutation, CMat, LabeledOperator, SpaceLabel, C64};

/// Label id of the measured register appended to probe combs.
pub const REGISTER: &str = "x";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Prior {
    Uniform,
    Gaussian { mean: f64, std: f64 },
    Delta { theta: f64 },
}

pub type ChoiFn = Arc<dyn Fn(f64) -> Result<LabeledOperator> + Send + Sync>;

#[derive(Clone)]
pub enum Generator {
    /// `C_θ = Σ_m e^{imθ} C_m`.
    Fourier(Vec<(i64, LabeledOperator)>),
    Callback(ChoiFn),
}

/// A parameterized environment comb together with its prior.
#[derive(Clone)]
pub struct ParamFamily {
    pub labels: Vec<SpaceLabel>,
    pub steps: Vec<Step>,
    pub generator: Generator,
    pub prior: Prior,
}

impl ParamFamily {
    /// `|n⟩ ↦ e^{inθ}|n⟩` on a `d`-level system with `H_d = Σ n|n⟩⟨n|`.
    pub fn phase(d: usize, prior: Prior) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument("phase family needs d >= 2".into()));
        }
        let a = SpaceLabel::equally_spaced("in1", d);
        let b = SpaceLabel::equally_spaced("out1", d);
        let mut terms = Vec::new();
        for m in -(d as i64 - 1)..=(d as i64 - 1) {
            let mut cm = CMat::zeros(d * d, d * d);
            for j in 0..d {
                let k = j as i64 - m;
                if (0..d as i64).contains(&k) {
                    let k = k as usize;
                    cm[(j * d + j, k * d + k)] = cr(1.0);
                }
            }
            terms.push((m, LabeledOperator::new(vec![a.clone(), b.clone()], cm)?));
        }
        Ok(ParamFamily {
            labels: vec![a, b],
            steps: vec![Step::single("in1", "out1")],
            generator: Generator::Fourier(terms),
            prior,
        })
    }

    pub fn from_callback(labels: Vec<SpaceLabel>, steps: Vec<Step>, f: ChoiFn, prior: Prior) -> Self {
        ParamFamily { labels, steps, generator: Generator::Callback(f), prior }
    }

    pub fn choi(&self, theta: f64) -> Result<LabeledOperator> {
        let op = match &self.generator {
            Generator::Fourier(terms) => {
                let mut m = CMat::zeros(terms[0].1.dim(), terms[0].1.dim());
                for (k, c) in terms {
                    m += c.matrix() * C64::from_polar(1.0, *k as f64 * theta);
                }
                LabeledOperator::new(terms[0].1.labels().to_vec(), m)?
            }
            Generator::Callback(f) => f(theta)?,
        };
        op.permute(&self.ids())
    }

    pub fn comb(&self, theta: f64) -> Result<Comb> {
        Comb::new(self.choi(theta)?, self.steps.clone())
    }

    fn ids(&self) -> Vec<&str> {
        self.labels.iter().map(|l| l.id.as_str()).collect()
    }

    pub fn layout(&self, outcomes: usize) -> ProbeLayout {
        ProbeLayout::new(self.labels.clone(), self.steps.clone(), outcomes)
    }
}

/// `𝒥 = ∫ e^{−iθ} C_θ^T p(θ) dθ` on the family's labels.
#[derive(Clone, Debug)]
pub struct TaskOperator {
    pub op: LabeledOperator,
}

impl TaskOperator {
    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }
}

/// Characteristic function `E[e^{itθ}]` of a prior.
pub fn characteristic(prior: Prior, t: f64) -> C64 {
    match prior {
        Prior::Uniform => {
            if t == 0.0 {
                cr(1.0)
            } else if t.fract() == 0.0 {
                cr(0.0)
            } else {
                // Non-integer frequencies over [0, 2π).
                let z = C64::new(0.0, 2.0 * PI * t).exp() - 1.0;
                z / C64::new(0.0, 2.0 * PI * t)
            }
        }
        Prior::Gaussian { mean, std } => C64::from_polar((-0.5 * t * t * std * std).exp(), t * mean),
        Prior::Delta { theta } => C64::from_polar(1.0, t * theta),
    }
}

const QUAD_START: usize = 512;
const QUAD_MAX: usize = 1 << 15;
const QUAD_TOL: f64 = 1e-8;

pub fn task_operator(fam: &ParamFamily) -> Result<TaskOperator> {
    if let Prior::Gaussian { std, .. } = fam.prior {
        if !(std > 0.0) {
            return Err(Error::InvalidArgument("Gaussian prior needs std > 0".into()));
        }
    }
    let labels = fam.labels.clone();
    let d: usize = labels.iter().map(|l| l.dim).product();
    let op = match (&fam.generator, fam.prior) {
        (Generator::Fourier(terms), prior) => {
            let mut m = CMat::zeros(d, d);
            for (k, c) in terms {
                let c = c.permute(&fam.ids())?;
                m += c.matrix().transpose() * characteristic(prior, (*k - 1) as f64);
            }
            LabeledOperator::new(labels, m)?
        }
        (Generator::Callback(_), Prior::Delta { theta }) => {
            let c = fam.choi(theta)?;
            LabeledOperator::new(labels, c.matrix().transpose() * C64::from_polar(1.0, -theta))?
        }
        (Generator::Callback(_), prior) => {
            let mut k = QUAD_START;
            let mut prev = quadrature(fam, prior, k)?;
            loop {
                k *= 2;
                let next = quadrature(fam, prior, k)?;
                let change = (&next - &prev).iter().map(|z| z.norm()).fold(0.0, f64::max);
                if change <= QUAD_TOL {
                    break LabeledOperator::new(labels, next)?;
                }
                if k >= QUAD_MAX {
                    return Err(Error::QuadratureNonConvergence(change));
                }
                prev = next;
            }
        }
    };
    Ok(TaskOperator { op })
}

/// Trapezoid rule with `k` panels.
fn quadrature(fam: &ParamFamily, prior: Prior, k: usize) -> Result<CMat> {
    let (nodes, weights): (Vec<f64>, Vec<f64>) = match prior {
        Prior::Uniform => ((0..k).map(|i| 2.0 * PI * i as f64 / k as f64).collect(), vec![1.0 / k as f64; k]),
        Prior::Gaussian { mean, std } => {
            let (a, b) = (mean - 8.0 * std, mean + 8.0 * std);
            let h = (b - a) / k as f64;
            let xs: Vec<f64> = (0..=k).map(|i| a + h * i as f64).collect();
            let mut ws: Vec<f64> = xs
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    let end = if i == 0 || i == k { 0.5 } else { 1.0 };
                    end * h * (-(x - mean).powi(2) / (2.0 * std * std)).exp() / (std * (2.0 * PI).sqrt())
                })
                .collect();
            let total: f64 = ws.iter().sum();
            for w in &mut ws {
                *w /= total;
            }
            (xs, ws)
        }
        Prior::Delta { theta } => (vec![theta], vec![1.0]),
    };
    let mut acc: Option<CMat> = None;
    for (t, w) in nodes.iter().zip(&weights) {
        let c = fam.choi(*t)?;
        let term = c.matrix().transpose() * C64::from_polar(*w, -t);
        acc = Some(match acc {
            Some(a) => a + term,
            None => term,
        });
    }
    Ok(acc.expect("nonempty quadrature"))
}

/// Maximizing estimator `θ̂ = −arg t` in `[0, 2π)`; `arg 0 = 0`.
pub fn optimal_phase(t: C64) -> f64 {
    if t.norm() == 0.0 {
        return 0.0;
    }
    (-t.arg()).rem_euclid(2.0 * PI)
}

pub fn outcome_traces(instrument: &[CMat], j: &TaskOperator) -> Vec<C64> {
    instrument.iter().map(|t| (t * j.matrix()).trace()).collect()
}

/// `(cost, θ̂)` with the optimal estimator.
pub fn average_cost(instrument: &[CMat], j: &TaskOperator) -> (f64, Vec<f64>) {
    let tr = outcome_traces(instrument, j);
    let est: Vec<f64> = tr.iter().map(|&t| optimal_phase(t)).collect();
    (cost_with_estimator(instrument, j, &est), est)
}

/// `2 − 2 Σ_x Re[e^{iθ̂(x)} Tr[T_x 𝒥]]`.
pub fn cost_with_estimator(instrument: &[CMat], j: &TaskOperator, phases: &[f64]) -> f64 {
    let tr = outcome_traces(instrument, j);
    2.0 - 2.0 * tr.iter().zip(phases).map(|(t, &p)| (C64::from_polar(1.0, p) * t).re).sum::<f64>()
}

/// `|Σ_x Tr[T_x 𝒥]|`.
pub fn outcome_sum_check(instrument: &[CMat], j: &TaskOperator) -> f64 {
    outcome_traces(instrument, j).iter().sum::<C64>().norm()
}

/// Where the probe sits relative to the environment and how many outcomes it has.
#[derive(Clone, Debug)]
pub struct ProbeLayout {
    pub env_labels: Vec<SpaceLabel>,
    pub env_steps: Vec<Step>,
    pub outcomes: usize,
}

impl ProbeLayout {
    pub fn new(env_labels: Vec<SpaceLabel>, env_steps: Vec<Step>, outcomes: usize) -> Self {
        ProbeLayout { env_labels, env_steps, outcomes }
    }

    /// Probe steps over the environment labels; the register is not included.
    pub fn probe_steps(&self) -> Vec<Step> {
        let mut steps = Vec::with_capacity(self.env_steps.len() + 1);
        let mut prev: Vec<String> = Vec::new();
        for s in &self.env_steps {
            steps.push(Step { inputs: prev.clone(), outputs: s.inputs.clone() });
            prev = s.outputs.clone();
        }
        steps.push(Step { inputs: prev, outputs: vec![] });
        steps
    }

    pub fn register(&self, diagonal_final: bool) -> SpaceLabel {
        let levels: Vec<f64> = (0..self.outcomes).map(|k| if diagonal_final { k as f64 } else { 0.0 }).collect();
        SpaceLabel::with_levels(REGISTER, &levels).expect("valid register levels")
    }

    pub fn dim(&self) -> usize {
        self.env_labels.iter().map(|l| l.dim).product()
    }
}

/// One variable contributing to a comb-valued expression, possibly with its
/// tensor factors in a different order than the expression's labels.
#[derive(Clone, Debug)]
pub struct CombTerm {
    pub var: HermId,
    pub weight: f64,
    /// Expression flat index for each variable flat index; may cover only
    /// part of the expression space (block-restricted variables).
    pub index_map: Option<Vec<usize>>,
}

impl CombTerm {
    pub fn new(var: HermId, weight: f64) -> Self {
        CombTerm { var, weight, index_map: None }
    }

    /// Variable living on the expression indices `map`.
    pub fn mapped(var: HermId, weight: f64, map: Vec<usize>) -> Self {
        CombTerm { var, weight, index_map: Some(map) }
    }

    /// Variable whose factors are `var_ids`, a reordering of the expression labels.
    pub fn permuted(var: HermId, weight: f64, labels: &[SpaceLabel], var_ids: &[&str]) -> Result<Self> {
        let perm: Vec<usize> = var_ids
            .iter()
            .map(|id| labels.iter().position(|l| l.id == *id).ok_or_else(|| Error::UnknownLabel(id.to_string())))
            .collect::<Result<_>>()?;
        if perm.len() != labels.len() {
            return Err(Error::NotAPermutation);
        }
        let dims: Vec<usize> = labels.iter().map(|l| l.dim).collect();
        Ok(CombTerm { var, weight, index_map: Some(factor_permutation(&dims, &perm)) })
    }

    fn coefficient(&self, f: &CMat) -> CMat {
        let m = match &self.index_map {
            None => f.clone(),
            Some(map) => CMat::from_fn(map.len(), map.len(), |i, j| f[(map[i], map[j])]),
        };
        m * cr(self.weight)
    }
}

/// `T = Σ_x (Σ_terms w·X) ⊗ |x⟩⟨x|` constrained to be a comb with the
/// register appended to the outputs of the last step.
#[derive(Clone, Debug)]
pub struct CombExpr {
    pub labels: Vec<SpaceLabel>,
    pub steps: Vec<Step>,
    pub levels: Vec<f64>,
    pub blocks: Vec<Vec<CombTerm>>,
}

/// How the energy budget enters the constraints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    /// Fixed right-hand side for a normalized comb.
    Absolute(f64),
    /// `E` scaled by `Tr[T]/D`; constraints homogeneous in `T`.
    Homogeneous { e: f64, d: f64 },
}

impl CombExpr {
    fn dim(&self) -> usize {
        self.labels.iter().map(|l| l.dim).product()
    }

    /// `Σ_x Re Tr[F_x T_x]`.
    pub fn form<F: Fn(usize) -> CMat>(&self, f: F) -> LinearForm {
        let mut out = LinearForm::new();
        for (x, terms) in self.blocks.iter().enumerate() {
            if terms.is_empty() {
                continue;
            }
            let fx = f(x);
            for t in terms {
                out.push_herm(t.var, t.coefficient(&fx));
            }
        }
        out
    }

    pub fn trace_form(&self) -> LinearForm {
        let d = self.dim();
        self.form(|_| CMat::identity(d, d))
    }

    pub fn input_dim(&self) -> usize {
        self.steps.iter().flat_map(|s| s.inputs.iter()).map(|id| self.label(id).map(|l| l.dim).unwrap_or(1)).product()
    }

    fn label(&self, id: &str) -> Result<&SpaceLabel> {
        self.labels.iter().find(|l| l.id == id).ok_or_else(|| Error::UnknownLabel(id.into()))
    }

    /// Causality rows; `normalization = Some(D)` adds `Tr T = D`.
    pub fn add_causality(&self, p: &mut ConicProblem, normalization: Option<f64>) -> Result<()> {
        let forms: Vec<LinearForm> = causality_functionals(&self.labels, &self.steps)?
            .iter()
            .map(|f| self.form(|_| f.matrix().clone()))
            .collect();
        for f in independent_forms(&forms, 1e-9) {
            p.add_equality(f, 0.0)?;
        }
        if let Some(d) = normalization {
            p.add_equality(self.trace_form(), d)?;
        }
        Ok(())
    }

    /// Energy constraints for every level; returns the local allocation scalars.
    pub fn add_energy(
        &self,
        p: &mut ConicProblem,
        battery: Battery,
        budget: Budget,
        tag: &str,
    ) -> Result<Vec<ScalarId>> {
        let n = self.steps.len();
        let mut allocs = Vec::new();
        for level in 1..=n {
            let range = match battery {
                Battery::Global => 0..level,
                Battery::Local => level - 1..level,
            };
            let alloc = match battery {
                Battery::Local => {
                    let s = p.add_scalar(format!("{tag}:e{level}"));
                    allocs.push(s);
                    Some(s)
                }
                Battery::Global => None,
            };
            self.add_level(p, level, range, budget, alloc, tag)?;
        }
        if battery == Battery::Local {
            let mut f = LinearForm::new();
            for s in &allocs {
                f.push_scalar(*s, 1.0);
            }
            match budget {
                Budget::Absolute(e) => p.add_equality(f, e)?,
                Budget::Homogeneous { e, d } => {
                    f.extend(self.trace_form().scaled(-e / d));
                    p.add_equality(f, 0.0)?
                }
            }
        }
        Ok(allocs)
    }

    fn add_level(
        &self,
        p: &mut ConicProblem,
        level: usize,
        range: std::ops::Range<usize>,
        budget: Budget,
        alloc: Option<ScalarId>,
        tag: &str,
    ) -> Result<()> {
        let n = self.steps.len();
        let ids = |r: std::ops::Range<usize>, inputs: bool| -> Vec<String> {
            self.steps[r].iter().flat_map(|s| if inputs { s.inputs.clone() } else { s.outputs.clone() }).collect()
        };
        let prefix_ins = ids(0..level, true);
        let later_ins = ids(level..n, true);
        let charged_outs = ids(range.clone(), false);
        let charged_ins = ids(range.clone(), true);
        let charges_register = range.end == n;

        let ins_labels: Vec<SpaceLabel> = prefix_ins.iter().map(|id| self.label(id).cloned()).collect::<Result<_>>()?;
        let d_in: usize = ins_labels.iter().map(|l| l.dim).product();
        let scale: f64 = later_ins.iter().map(|id| self.label(id).map(|l| l.dim as f64)).product::<Result<f64>>()?;

        let out_refs: Vec<&str> = charged_outs.iter().map(String::as_str).collect();
        let h_out = LabeledOperator::hamiltonian_sum(&self.labels, &out_refs)?.into_matrix();
        let in_refs: Vec<&str> = charged_ins.iter().map(String::as_str).collect();
        let h_in_t = LabeledOperator::hamiltonian_sum(&ins_labels, &in_refs)?.into_matrix().transpose();
        let d = self.dim();

        let energy_bound = match budget {
            Budget::Absolute(e) | Budget::Homogeneous { e, .. } => e,
        };
        let global_e = if alloc.is_none() { energy_bound } else { 0.0 };
        let rhs_const = &h_in_t + CMat::identity(d_in, d_in) * cr(global_e);

        let levels = self.levels.clone();
        let labels = self.labels.clone();
        let adjoint = |g: &CMat| -> LinearForm {
            let gop = LabeledOperator::new(ins_labels.clone(), g.clone()).expect("dims match");
            let gemb = gop.embed(&labels).expect("labels present").into_matrix();
            let base = &h_out * &gemb;
            let mut form = self.form(|x| {
                let mut f = base.clone();
                if charges_register {
                    f += &gemb * cr(levels.get(x).copied().unwrap_or(0.0));
                }
                f * cr(1.0 / scale)
            });
            if let Budget::Homogeneous { d: dd, .. } = budget {
                let k = crate::conic::re_trace_product(g, &rhs_const) / dd;
                form.extend(self.form(|_| CMat::identity(d, d) * cr(-k)));
            }
            if let Some(s) = alloc {
                let tr = g.trace().re;
                form.push_scalar(s, -tr);
            }
            form
        };
        let rhs = match budget {
            Budget::Absolute(_) => rhs_const.clone(),
            Budget::Homogeneous { .. } => CMat::zeros(d_in, d_in),
        };
        p.add_psd_le(&rhs, format!("{tag}:energy{level}"), adjoint)?;
        Ok(())
    }
}

/// A built probe program with handles to its instrument variables.
#[derive(Clone, Debug)]
pub struct ProbeProgram {
    pub problem: ConicProblem,
    pub instrument: Vec<HermId>,
    pub expr: CombExpr,
}

impl ProbeProgram {
    pub fn set_phases(&mut self, j: &TaskOperator, phases: &[f64]) -> Result<()> {
        if phases.len() != self.instrument.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} phases for {} outcomes",
                phases.len(),
                self.instrument.len()
            )));
        }
        let mut f = LinearForm::new();
        for (v, &ph) in self.instrument.iter().zip(phases) {
            f.push_herm(*v, j.matrix() * C64::from_polar(1.0, ph));
        }
        self.problem.set_objective(f, 0.0)
    }

    pub fn instrument(&self, report: &SolveReport) -> Vec<CMat> {
        self.instrument.iter().map(|v| report.herm(*v).clone()).collect()
    }
}

/// Maximize `Σ_x Re[e^{iθ̂(x)} Tr[T_x 𝒥]]` over energy-limited probes.
pub fn build_probe_program(
    j: &TaskOperator,
    battery: Battery,
    e: f64,
    phases: &[f64],
    layout: &ProbeLayout,
    diagonal_final: bool,
) -> Result<ProbeProgram> {
    if !(e >= 0.0) {
        return Err(Error::InvalidArgument(format!("energy budget {e} must be >= 0")));
    }
    if phases.len() != layout.outcomes {
        return Err(Error::DimensionMismatch(format!("{} phases for {} outcomes", phases.len(), layout.outcomes)));
    }
    if j.op.ids() != layout.env_labels.iter().map(|l| l.id.as_str()).collect::<Vec<_>>() {
        return Err(Error::DimensionMismatch("task operator labels differ from the layout".into()));
    }
    let mut p = ConicProblem::new(Sense::Maximize);
    let dim = layout.dim();
    let instrument: Vec<HermId> = (0..layout.outcomes).map(|x| p.add_var(dim, format!("T{x}"))).collect();
    let register = layout.register(diagonal_final);
    let levels: Vec<f64> = (0..layout.outcomes).map(|k| register.hamiltonian[(k, k)].re).collect();
    let expr = CombExpr {
        labels: layout.env_labels.clone(),
        steps: layout.probe_steps(),
        levels,
        blocks: instrument.iter().map(|v| vec![CombTerm::new(*v, 1.0)]).collect(),
    };
    let norm = expr.input_dim() as f64;
    expr.add_causality(&mut p, Some(norm))?;
    expr.add_energy(&mut p, battery, Budget::Absolute(e), "probe")?;
    let mut prog = ProbeProgram { problem: p, instrument, expr };
    prog.set_phases(j, phases)?;
    Ok(prog)
}

/// Assembled probe `Σ_x T_x ⊗ |x⟩⟨x|` as a comb.
pub fn assemble_probe(layout: &ProbeLayout, instrument: &[CMat], diagonal_final: bool) -> Result<Comb> {
    assemble_register_comb(&layout.env_labels, &layout.probe_steps(), layout.register(diagonal_final), instrument)
}

/// `Σ_x T_x ⊗ |x⟩⟨x|` with the register appended to the last step's outputs.
pub fn assemble_register_comb(
    env_labels: &[SpaceLabel],
    probe_steps: &[Step],
    register: SpaceLabel,
    instrument: &[CMat],
) -> Result<Comb> {
    let n = instrument.len();
    if register.dim != n {
        return Err(Error::DimensionMismatch(format!("register of dim {} for {n} outcomes", register.dim)));
    }
    let dim: usize = env_labels.iter().map(|l| l.dim).product();
    let mut m = CMat::zeros(dim * n, dim * n);
    for (x, t) in instrument.iter().enumerate() {
        for i in 0..dim {
            for k in 0..dim {
                m[(i * n + x, k * n + x)] = t[(i, k)];
            }
        }
    }
    let mut labels = env_labels.to_vec();
    let reg_id = register.id.clone();
    labels.push(register);
    let mut steps = probe_steps.to_vec();
    steps.last_mut().ok_or_else(|| Error::InvalidArgument("no probe steps".into()))?.outputs.push(reg_id);
    let steps: Vec<Step> = steps.into_iter().filter(|s| !(s.inputs.is_empty() && s.outputs.is_empty())).collect();
    Comb::new(LabeledOperator::new(labels, m)?, steps)
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverSummary {
    pub status: crate::conic::SolveStatus,
    pub value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl From<&SolveReport> for SolverSummary {
    fn from(r: &SolveReport) -> Self {
        SolverSummary {
            status: r.status,
            value: r.value,
            dual_value: r.dual_value,
            gap: r.gap,
            primal_residual: r.primal_residual,
            dual_residual: r.dual_residual,
            iterations: r.iterations,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StrategyResult {
    pub cost: f64,
    pub instrument: Vec<CMat>,
    pub estimator: Vec<f64>,
    pub audit: EnergyAudit,
    pub solver: SolverSummary,
    pub seesaw_iterations: usize,
    /// Objective after each see-saw iteration of the winning restart.
    pub trace: Vec<f64>,
}

#[derive(Serialize)]
pub struct StrategyJson<'a> {
    pub cost: f64,
    pub estimator: &'a [f64],
    pub audit: &'a EnergyAudit,
    pub solver: &'a SolverSummary,
    pub seesaw_iterations: usize,
    pub instrument: Vec<Vec<Vec<[f64; 2]>>>,
}

impl StrategyResult {
    pub fn to_json(&self) -> StrategyJson<'_> {
        StrategyJson {
            cost: self.cost,
            estimator: &self.estimator,
            audit: &self.audit,
            solver: &self.solver,
            seesaw_iterations: self.seesaw_iterations,
            instrument: self.instrument.iter().map(crate::tensor::matrix_to_json).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SeesawOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub min_gain: f64,
    pub tol: f64,
    pub diagonal_final: bool,
    /// Extra starting phase vectors tried before the random restarts.
    pub warm: Vec<Vec<f64>>,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        SeesawOptions {
            restarts: 8,
            seed: 0,
            max_iter: 50,
            min_gain: 1e-8,
            tol: DEFAULT_TOL,
            diagonal_final: true,
            warm: Vec::new(),
        }
    }
}

/// Evenly spaced estimator phases `2πk/n`.
pub fn uniform_phases(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

/// Solve with fixed estimator phases.
pub fn optimize_fixed(
    j: &TaskOperator,
    battery: Battery,
    e: f64,
    layout: &ProbeLayout,
    phases: &[f64],
    opts: &SeesawOptions,
) -> Result<StrategyResult> {
    let prog = build_probe_program(j, battery, e, phases, layout, opts.diagonal_final)?;
    let report = prog.problem.solve(opts.tol)?.require_optimal()?;
    let instrument = prog.instrument(&report);
    let cost = cost_with_estimator(&instrument, j, phases);
    finish(layout, j, instrument, phases.to_vec(), cost, &report, 1, vec![report.value], opts)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    layout: &ProbeLayout,
    _j: &TaskOperator,
    instrument: Vec<CMat>,
    estimator: Vec<f64>,
    cost: f64,
    report: &SolveReport,
    iterations: usize,
    trace: Vec<f64>,
    opts: &SeesawOptions,
) -> Result<StrategyResult> {
    let audit = assemble_probe(layout, &instrument, opts.diagonal_final)?.energy_audit_unchecked()?;
    Ok(StrategyResult {
        cost,
        instrument,
        estimator,
        audit,
        solver: SolverSummary::from(report),
        seesaw_iterations: iterations,
        trace,
    })
}

/// Best run of a see-saw over several starting estimators.
#[derive(Clone, Debug)]
pub struct SeesawOutcome {
    pub cost: f64,
    pub instrument: Vec<CMat>,
    pub estimator: Vec<f64>,
    pub report: SolveReport,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

/// Starting estimators: `opts.warm` first, then seeded random draws.
pub fn seesaw_starts(outcomes: usize, opts: &SeesawOptions) -> Vec<Vec<f64>> {
    let mut starts: Vec<Vec<f64>> = opts.warm.clone();
    let mut r = rng(opts.seed);
    for _ in 0..opts.restarts {
        starts.push((0..outcomes).map(|_| r.random_range(0.0..2.0 * PI)).collect());
    }
    starts
}

/// Alternate `solve(phases)`, which returns the optimal instrument for fixed
/// estimator phases, with the closed-form estimator update.
pub fn seesaw_core<F>(j: &TaskOperator, outcomes: usize, opts: &SeesawOptions, mut solve: F) -> Result<SeesawOutcome>
where
    F: FnMut(&[f64]) -> Result<(Vec<CMat>, SolveReport)>,
{
    if opts.restarts == 0 && opts.warm.is_empty() {
        return Err(Error::InvalidArgument("see-saw needs at least one start".into()));
    }
    let mut best: Option<SeesawOutcome> = None;
    for (k, start) in seesaw_starts(outcomes, opts).into_iter().enumerate() {
        if start.len() != outcomes {
            return Err(Error::DimensionMismatch(format!(
                "start {k} has {} phases for {outcomes} outcomes",
                start.len()
            )));
        }
        let mut phases = start;
        let mut prev = f64::NEG_INFINITY;
        let mut trace = Vec::new();
        let mut last: Option<(Vec<CMat>, SolveReport)> = None;
        for it in 0..opts.max_iter {
            let (instrument, report) =
                solve(&phases).map_err(|err| Error::Solver(format!("start {k}, iteration {it}: {err}")))?;
            let value = report.value;
            trace.push(value);
            let next: Vec<f64> = outcome_traces(&instrument, j).into_iter().map(optimal_phase).collect();
            last = Some((instrument, report));
            if value - prev < opts.min_gain {
                break;
            }
            prev = value;
            phases = next;
        }
        let (instrument, report) = last.expect("at least one iteration");
        let (cost, estimator) = average_cost(&instrument, j);
        if best.as_ref().is_none_or(|b| cost < b.cost - 1e-12) {
            best = Some(SeesawOutcome { cost, instrument, estimator, report, iterations: trace.len(), trace });
        }
    }
    Ok(best.expect("at least one start"))
}

/// Alternate the instrument SDP with the closed-form estimator update.
pub fn seesaw(
    j: &TaskOperator,
    battery: Battery,
    e: f64,
    layout: &ProbeLayout,
    opts: &SeesawOptions,
) -> Result<StrategyResult> {
    let mut prog = build_probe_program(j, battery, e, &vec![0.0; layout.outcomes], layout, opts.diagonal_final)?;
    let out = seesaw_core(j, layout.outcomes, opts, |phases| {
        prog.set_phases(j, phases)?;
        let report = prog.problem.solve(opts.tol)?.require_optimal()?;
        Ok((prog.instrument(&report), report))
    })?;
    finish(layout, j, out.instrument, out.estimator, out.cost, &out.report, out.iterations, out.trace, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::c;

    fn qubit() -> (ParamFamily, TaskOperator) {
        let fam = ParamFamily::phase(2, Prior::Uniform).unwrap();
        let j = task_operator(&fam).unwrap();
        (fam, j)
    }

    #[test]
    fn qubit_task_operator() {
        let (_, j) = qubit();
        let mut want = CMat::zeros(4, 4);
        want[(0, 3)] = cr(1.0);
        assert!((j.matrix() - want).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn qudit_task_operator_is_shift() {
        let fam = ParamFamily::phase(4, Prior::Uniform).unwrap();
        let j = task_operator(&fam).unwrap();
        for a in 0..16 {
            for b in 0..16 {
                let (j1, j2) = (a / 4, a % 4);
                let (k1, k2) = (b / 4, b % 4);
                let want = if j1 == j2 && k1 == k2 && k1 == j1 + 1 { 1.0 } else { 0.0 };
                assert!((j.matrix()[(a, b)] - cr(want)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn callback_quadrature_matches_fourier() {
        let fam = ParamFamily::phase(3, Prior::Gaussian { mean: 1.0, std: 0.5 }).unwrap();
        let exact = task_operator(&fam).unwrap();
        let f2 = fam.clone();
        let cb =
            ParamFamily::from_callback(fam.labels.clone(), fam.steps.clone(), Arc::new(move |t| f2.choi(t)), fam.prior);
        let quad = task_operator(&cb).unwrap();
        let err = (exact.matrix() - quad.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn theta_independent_family_gives_zero() {
        let fam = ParamFamily::phase(2, Prior::Uniform).unwrap();
        let c0 = fam.choi(0.0).unwrap();
        let cb = ParamFamily::from_callback(
            fam.labels.clone(),
            fam.steps.clone(),
            Arc::new(move |_| Ok(c0.clone())),
            Prior::Uniform,
        );
        let j = task_operator(&cb).unwrap();
        assert!(j.matrix().iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn qubit_program_values() {
        let (fam, j) = qubit();
        let layout = fam.layout(2);
        for (e, want) in [(0.75, 0.5), (0.0, 0.0), (0.5, 0.5 * (2.0 - 1.1715728752538097))] {
            let prog = build_probe_program(&j, Battery::Global, e, &[0.0, PI], &layout, true).unwrap();
            let r = prog.problem.solve(1e-9).unwrap();
            assert!(r.is_optimal());
            assert!((r.value - want).abs() < 1e-6, "E={e}: {} vs {want}", r.value);
            let cert = prog.problem.certify(&r);
            assert!(cert.valid, "{cert:?}");
            if e == 0.75 {
                assert!((r.herm(prog.instrument[0])[(3, 0)].re - 0.25).abs() < 1e-6);
            }
            let t = prog.instrument(&r);
            assert!(outcome_sum_check(&t, &j) < 1e-7);
        }
    }

    #[test]
    fn estimator_tie_break() {
        assert_eq!(optimal_phase(cr(0.0)), 0.0);
        assert!((optimal_phase(c(0.0, 1.0)) - 1.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn ground_probe_costs_two() {
        let (_, j) = qubit();
        let mut t0 = CMat::zeros(4, 4);
        t0[(0, 0)] = cr(1.0);
        t0[(1, 1)] = cr(1.0);
        let (cost, est) = average_cost(&[t0, CMat::zeros(4, 4)], &j);
        assert_eq!(cost, 2.0);
        assert_eq!(est, vec![0.0, 0.0]);
    }

    #[test]
    fn seesaw_is_deterministic_and_monotone() {
        let (fam, j) = qubit();
        let layout = fam.layout(2);
        let opts = SeesawOptions { restarts: 3, seed: 7, ..Default::default() };
        let a = seesaw(&j, Battery::Global, 0.3, &layout, &opts).unwrap();
        let b = seesaw(&j, Battery::Global, 0.3, &layout, &opts).unwrap();
        assert_eq!(a.cost, b.cost);
        for w in a.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-7);
        }
    }

    #[test]
    fn negative_budget_rejected() {
        let (fam, j) = qubit();
        assert!(build_probe_program(&j, Battery::Global, -0.1, &[0.0, PI], &fam.layout(2), true).is_err());
    }
}
