//! Superpositions of two causal orders for a pair of parameterized channels.
//!
//! The environment is `in1 → out1` and `in2 → out2`. A probe in the identity
//! order queries channel 1 first; the swapped order queries channel 2 first.
//! The order-control system is degenerate and measured in an arbitrary basis,
//! which adds a second outcome index `y` next to the energy register `x`.
//!
//! Programs restrict every variable to the blocks of the per-channel parities
//! `Z_in ⊗ Z_out` whenever the task operator commutes with them. The parities
//! are energy-preserving local unitaries, so twirling any feasible strategy
//! over them keeps it feasible with the same objective.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use serde::Serialize;

use crate::comb::{Battery, Comb, Step};
use crate::conic::{ConicProblem, HermId, LinearForm, Sense, SolveReport};
use crate::error::{Error, Result};
use crate::metrology::{
    assemble_register_comb, seesaw_core, task_operator, Budget, CombExpr, CombTerm, ParamFamily, Prior, SeesawOptions,
    SolverSummary, TaskOperator, REGISTER,
};
use crate::tensor::{
    choi_of_kraus, choi_of_unitary, cr, factor_permutation, hadamard, omega, pauli_rotation, pauli_x, pauli_z, CMat,
    CVec, LabeledOperator, SpaceLabel,
};

pub const IN: [&str; 2] = ["in1", "in2"];
pub const OUT: [&str; 2] = ["out1", "out2"];
/// Order-control label of the coherent operator.
pub const OC: &str = "oc";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    Identity,
    Swapped,
}

impl Order {
    pub const ALL: [Order; 2] = [Order::Identity, Order::Swapped];

    /// Channel indices in query order.
    pub fn sequence(self) -> [usize; 2] {
        match self {
            Order::Identity => [0, 1],
            Order::Swapped => [1, 0],
        }
    }

    pub fn probe_steps(self) -> Vec<Step> {
        let [a, b] = self.sequence();
        vec![Step::new(&[], &[IN[a]]), Step::new(&[OUT[a]], &[IN[b]]), Step::new(&[OUT[b]], &[])]
    }

    /// Environment ids as seen after moving this order onto the identity order.
    fn canonical_ids(self) -> [&'static str; 4] {
        let [a, b] = self.sequence();
        let mut ids = [""; 4];
        ids[2 * a] = IN[0];
        ids[2 * a + 1] = OUT[0];
        ids[2 * b] = IN[1];
        ids[2 * b + 1] = OUT[1];
        ids
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpacetimeBattery {
    /// One battery per order branch.
    Individual,
    /// One battery for the branch mixture.
    Shared,
}

/// `ρ ↦ U(½ρ + ½XρX)U†`.
pub fn flipped_channel_choi(u: &CMat, input: &SpaceLabel, output: &SpaceLabel) -> Result<LabeledOperator> {
    choi_of_kraus(&[u * cr(FRAC_1_SQRT_2), u * pauli_x() * cr(FRAC_1_SQRT_2)], input, output, false)
}

fn env_labels() -> Vec<SpaceLabel> {
    vec![SpaceLabel::qubit(IN[0]), SpaceLabel::qubit(OUT[0]), SpaceLabel::qubit(IN[1]), SpaceLabel::qubit(OUT[1])]
}

/// Channel `n` is `exp(−iθ g_n/2)` after a bit flip; `g_n` must be involutory.
pub fn flipped_rotation_family(g1: CMat, g2: CMat) -> ParamFamily {
    let labels = env_labels();
    let l = labels.clone();
    let f = move |theta: f64| -> Result<LabeledOperator> {
        let c1 = flipped_channel_choi(&pauli_rotation(&g1, theta), &l[0], &l[1])?;
        let c2 = flipped_channel_choi(&pauli_rotation(&g2, theta), &l[2], &l[3])?;
        c1.tensor(&c2)
    };
    let steps = vec![Step::single(IN[0], OUT[0]), Step::single(IN[1], OUT[1])];
    ParamFamily::from_callback(labels, steps, Arc::new(f), Prior::Uniform)
}

/// `e^{−iθZ/2}` and `e^{+iθZ/2}`, each after a bit flip.
pub fn hierarchy_family() -> ParamFamily {
    flipped_rotation_family(pauli_z(), -pauli_z())
}

/// `e^{−iθZ/2}` and `e^{+iθX/2}`, each after a bit flip.
pub fn ind_vs_shared_family() -> ParamFamily {
    flipped_rotation_family(pauli_z(), -pauli_x())
}

/// Parity blocks of the environment space, or one block if `j` mixes them.
pub fn parity_sectors(labels: &[SpaceLabel], steps: &[Step], j: &CMat) -> Vec<Vec<usize>> {
    let dims: Vec<usize> = labels.iter().map(|l| l.dim).collect();
    let d: usize = dims.iter().product();
    let step_of: Vec<Option<usize>> = labels
        .iter()
        .map(|l| steps.iter().position(|s| s.inputs.contains(&l.id) || s.outputs.contains(&l.id)))
        .collect();
    let key = |mut i: usize| -> Vec<usize> {
        let mut k = vec![0; steps.len()];
        for f in (0..dims.len()).rev() {
            let digit = i % dims[f];
            i /= dims[f];
            if let Some(s) = step_of[f] {
                k[s] = (k[s] + digit) % 2;
            }
        }
        k
    };
    let keys: Vec<Vec<usize>> = (0..d).map(key).collect();
    let mixes = (0..d).any(|a| (0..d).any(|b| keys[a] != keys[b] && j[(a, b)].norm() > 1e-12));
    if mixes {
        return vec![(0..d).collect()];
    }
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (i, k) in keys.into_iter().enumerate() {
        groups.entry(k).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Family, task operator and symmetry blocks for two-channel experiments.
#[derive(Clone)]
pub struct IcoSetup {
    pub family: ParamFamily,
    pub j: TaskOperator,
    pub sectors: Vec<Vec<usize>>,
}

impl IcoSetup {
    pub fn new(family: ParamFamily) -> Result<Self> {
        let ids = family.labels.iter().map(|l| l.id.as_str()).collect::<Vec<_>>();
        if ids != [IN[0], OUT[0], IN[1], OUT[1]] {
            return Err(Error::Unsupported("causal superpositions need exactly two intermediate channels".into()));
        }
        let j = task_operator(&family)?;
        let sectors = parity_sectors(&family.labels, &family.steps, j.matrix());
        Ok(IcoSetup { family, j, sectors })
    }

    pub fn hierarchy() -> Result<Self> {
        Self::new(hierarchy_family())
    }

    pub fn ind_vs_shared() -> Result<Self> {
        Self::new(ind_vs_shared_family())
    }

    /// Same family without the block restriction.
    pub fn unreduced(&self) -> Self {
        let d = self.j.matrix().nrows();
        IcoSetup { family: self.family.clone(), j: self.j.clone(), sectors: vec![(0..d).collect()] }
    }

    fn dim(&self) -> usize {
        self.j.matrix().nrows()
    }

    /// Comb normalization `D`: product of the probe's input dims.
    pub fn normalization(&self) -> f64 {
        self.family.labels.iter().filter(|l| OUT.contains(&l.id.as_str())).map(|l| l.dim as f64).product()
    }
}

/// One Hermitian operator on the environment space stored block by block.
#[derive(Clone, Debug)]
struct BlockVar {
    ids: Vec<HermId>,
}

impl BlockVar {
    fn new(p: &mut ConicProblem, sectors: &[Vec<usize>], name: &str) -> Self {
        let ids = sectors.iter().enumerate().map(|(s, b)| p.add_var(b.len(), format!("{name}/{s}"))).collect();
        BlockVar { ids }
    }

    fn terms(&self, sectors: &[Vec<usize>], relabel: Option<&[usize]>) -> Vec<CombTerm> {
        self.ids
            .iter()
            .zip(sectors)
            .map(|(v, b)| CombTerm::mapped(*v, 1.0, b.iter().map(|&i| relabel.map_or(i, |m| m[i])).collect()))
            .collect()
    }

    fn form(&self, sectors: &[Vec<usize>], f: &CMat) -> LinearForm {
        let mut out = LinearForm::new();
        for (v, b) in self.ids.iter().zip(sectors) {
            out.push_herm(*v, CMat::from_fn(b.len(), b.len(), |i, k| f[(b[i], b[k])]));
        }
        out
    }

    fn assemble(&self, sectors: &[Vec<usize>], dim: usize, report: &SolveReport) -> CMat {
        let mut m = CMat::zeros(dim, dim);
        for (v, b) in self.ids.iter().zip(sectors) {
            let x = report.herm(*v);
            for (i, &bi) in b.iter().enumerate() {
                for (k, &bk) in b.iter().enumerate() {
                    m[(bi, bk)] = x[(i, k)];
                }
            }
        }
        m
    }
}

/// Which strategy class and battery model to optimize over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IcoStrategy {
    /// Fixed order; `oc_outcomes = 2` adjoins a coherent degenerate qubit
    /// measured at the end.
    Definite { order: Order, battery: Battery, oc_outcomes: usize },
    /// Both orders in superposition; `uniform` fixes `p_τ = 1/2`.
    Superposition { spacetime: SpacetimeBattery, battery: Battery, uniform: bool },
}

impl IcoStrategy {
    pub fn outcomes(&self) -> usize {
        match self {
            IcoStrategy::Definite { oc_outcomes, .. } => 2 * oc_outcomes,
            IcoStrategy::Superposition { .. } => 4,
        }
    }

    pub fn oc_outcomes(&self) -> usize {
        self.outcomes() / 2
    }
}

const REGISTER_LEVELS: [f64; 2] = [0.0, 1.0];

/// A built program: instrument elements `T_{x,y}` (index `x·oc + y`) and,
/// for superpositions, branch operators `W_{τ,x}`.
pub struct IcoProgram {
    pub problem: ConicProblem,
    strategy: IcoStrategy,
    normalization: f64,
    sectors: Vec<Vec<usize>>,
    dim: usize,
    outcomes: Vec<BlockVar>,
    branches: Vec<Vec<BlockVar>>,
}

/// A block variable, optionally restricted to some of its sectors.
type VarRef<'a> = (&'a BlockVar, Option<&'a [usize]>);

pub fn build_ico_program(setup: &IcoSetup, strategy: IcoStrategy, e: f64) -> Result<IcoProgram> {
    if !(e >= 0.0) {
        return Err(Error::InvalidArgument(format!("energy budget {e} must be >= 0")));
    }
    let sectors = setup.sectors.clone();
    let labels = setup.family.labels.clone();
    let d_norm = setup.normalization();
    let oc = strategy.oc_outcomes();
    if oc == 0 || oc > 2 {
        return Err(Error::InvalidArgument("the order-control measurement has 1 or 2 outcomes".into()));
    }
    let mut p = ConicProblem::new(Sense::Maximize);
    let outcomes: Vec<BlockVar> =
        (0..2 * oc).map(|k| BlockVar::new(&mut p, &sectors, &format!("T{}{}", k / oc, k % oc))).collect();
    let expr = |steps: Vec<Step>, vars: Vec<Vec<VarRef>>| CombExpr {
        labels: labels.clone(),
        steps,
        levels: REGISTER_LEVELS.to_vec(),
        blocks: vars.into_iter().map(|vs| vs.into_iter().flat_map(|(v, m)| v.terms(&sectors, m)).collect()).collect(),
    };
    let mut branches = Vec::new();
    match strategy {
        IcoStrategy::Definite { order, battery, .. } => {
            let blocks = (0..2).map(|x| (0..oc).map(|y| (&outcomes[x * oc + y], None)).collect()).collect();
            let t = expr(order.probe_steps(), blocks);
            t.add_causality(&mut p, Some(d_norm))?;
            t.add_energy(&mut p, battery, Budget::Absolute(e), "probe")?;
        }
        IcoStrategy::Superposition { spacetime, battery, uniform } => {
            for order in Order::ALL {
                let name = format!("W{}", order.sequence()[0] + 1);
                branches
                    .push((0..2).map(|x| BlockVar::new(&mut p, &sectors, &format!("{name}{x}"))).collect::<Vec<_>>());
            }
            let mut total = LinearForm::new();
            for (order, w) in Order::ALL.iter().zip(&branches) {
                let e_tau = expr(order.probe_steps(), w.iter().map(|v| vec![(v, None)]).collect());
                e_tau.add_causality(&mut p, None)?;
                if uniform {
                    p.add_equality(e_tau.trace_form(), d_norm / 2.0)?;
                }
                total.extend(e_tau.trace_form());
                if spacetime == SpacetimeBattery::Individual {
                    let tag = format!("{order:?}");
                    e_tau.add_energy(&mut p, battery, Budget::Homogeneous { e, d: d_norm }, &tag)?;
                }
            }
            if !uniform {
                p.add_equality(total, d_norm)?;
            }
            for x in 0..2 {
                for (s, b) in sectors.iter().enumerate() {
                    let zero = CMat::zeros(b.len(), b.len());
                    let (ts, ws) = (&outcomes, &branches);
                    p.add_matrix_equality(&zero, |g| {
                        let mut f = LinearForm::new();
                        for y in 0..oc {
                            f.push_herm(ts[x * oc + y].ids[s], g.clone());
                        }
                        for w in ws {
                            f.push_herm(w[x].ids[s], -g.clone());
                        }
                        f
                    })?;
                }
            }
            if spacetime == SpacetimeBattery::Shared {
                let dims: Vec<usize> = labels.iter().map(|l| l.dim).collect();
                let maps: Vec<Vec<usize>> = Order::ALL
                    .iter()
                    .map(|o| {
                        let ids = o.canonical_ids();
                        let perm: Vec<usize> =
                            ids.iter().map(|id| labels.iter().position(|l| l.id == *id).expect("env label")).collect();
                        factor_permutation(&dims, &perm)
                    })
                    .collect();
                let blocks = (0..2)
                    .map(|x| branches.iter().zip(&maps).map(|(w, m)| (&w[x], Some(m.as_slice()))).collect())
                    .collect();
                let mix = expr(Order::Identity.probe_steps(), blocks);
                mix.add_energy(&mut p, battery, Budget::Absolute(e), "shared")?;
            }
        }
    }
    let dim = setup.dim();
    let mut prog = IcoProgram { problem: p, strategy, normalization: d_norm, sectors, dim, outcomes, branches };
    prog.set_phases(&setup.j, &vec![0.0; 2 * oc])?;
    Ok(prog)
}

impl IcoProgram {
    pub fn set_phases(&mut self, j: &TaskOperator, phases: &[f64]) -> Result<()> {
        if phases.len() != self.outcomes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} phases for {} outcomes",
                phases.len(),
                self.outcomes.len()
            )));
        }
        let mut f = LinearForm::new();
        for (v, &ph) in self.outcomes.iter().zip(phases) {
            f.extend(v.form(&self.sectors, &(j.matrix() * crate::tensor::C64::from_polar(1.0, ph))));
        }
        self.problem.set_objective(f, 0.0)
    }

    pub fn instrument(&self, report: &SolveReport) -> Vec<CMat> {
        self.outcomes.iter().map(|v| v.assemble(&self.sectors, self.dim, report)).collect()
    }

    pub fn strategy_from(&self, report: &SolveReport) -> SupStrategy {
        let instrument = self.instrument(report);
        let oc = self.strategy.oc_outcomes();
        let (orders, branches) = match self.strategy {
            IcoStrategy::Definite { order, .. } => {
                let w = (0..2).map(|x| (0..oc).map(|y| instrument[x * oc + y].clone()).sum()).collect();
                (vec![order], vec![w])
            }
            IcoStrategy::Superposition { .. } => (
                Order::ALL.to_vec(),
                self.branches
                    .iter()
                    .map(|w| w.iter().map(|v| v.assemble(&self.sectors, self.dim, report)).collect())
                    .collect(),
            ),
        };
        SupStrategy { orders, branches, instrument, oc_dim: oc, normalization: self.normalization }
    }
}

/// A causal-superposition strategy after measurement of the order control.
#[derive(Clone, Debug)]
pub struct SupStrategy {
    pub orders: Vec<Order>,
    /// `W_{τ,x} = p_τ T^τ_x` per order and register outcome.
    pub branches: Vec<Vec<CMat>>,
    /// `T_{x,y}`, index `x·oc_dim + y`.
    pub instrument: Vec<CMat>,
    pub oc_dim: usize,
    pub normalization: f64,
}

impl SupStrategy {
    pub fn p_tau(&self) -> Vec<f64> {
        self.branches.iter().map(|w| w.iter().map(|m| m.trace().re).sum::<f64>() / self.normalization).collect()
    }

    /// `T = Σ_{x,y} T_{x,y} ⊗ |x⟩⟨x| ⊗ |y⟩⟨y|_oc`.
    pub fn coherent(&self) -> Result<LabeledOperator> {
        let dim = self.instrument[0].nrows();
        let (nx, ny) = (2, self.oc_dim);
        let n = nx * ny;
        let mut m = CMat::zeros(dim * n, dim * n);
        for (k, t) in self.instrument.iter().enumerate() {
            for i in 0..dim {
                for j in 0..dim {
                    m[(i * n + k, j * n + k)] = t[(i, j)];
                }
            }
        }
        let mut labels = env_labels();
        labels.push(SpaceLabel::with_levels(REGISTER, &REGISTER_LEVELS)?);
        labels.push(SpaceLabel::new(OC, ny));
        LabeledOperator::new(labels, m)
    }

    /// `max_x ‖Σ_y T_{x,y} − Σ_τ W_{τ,x}‖_max`.
    pub fn coupling_residual(&self) -> f64 {
        (0..2)
            .map(|x| {
                let t: CMat = (0..self.oc_dim).map(|y| self.instrument[x * self.oc_dim + y].clone()).sum();
                let w: CMat = self.branches.iter().map(|b| b[x].clone()).sum();
                (t - w).iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Normalized branch comb `T^τ` in its own order.
    pub fn branch_comb(&self, k: usize) -> Result<Comb> {
        let p = self.p_tau()[k];
        if p <= 0.0 {
            return Err(Error::InvalidArgument(format!("branch {k} has zero weight")));
        }
        let blocks: Vec<CMat> = self.branches[k].iter().map(|m| m / cr(p)).collect();
        register_comb(self.orders[k], &blocks)
    }

    /// `Σ_τ ι_τ(W_τ)` on the identity order.
    pub fn shared_comb(&self) -> Result<Comb> {
        let mut acc: Option<LabeledOperator> = None;
        for (order, w) in self.orders.iter().zip(&self.branches) {
            let c = register_comb(*order, w)?;
            let ids = order.canonical_ids();
            let map: Vec<(&str, &str)> = [IN[0], OUT[0], IN[1], OUT[1]].iter().copied().zip(ids).collect();
            let moved = c.op().relabel(&map)?;
            acc = Some(match acc {
                None => moved,
                Some(a) => a.add(&moved)?,
            });
        }
        let op = acc.ok_or_else(|| Error::InvalidArgument("no branches".into()))?;
        let mut steps = Order::Identity.probe_steps();
        steps.last_mut().expect("three steps").outputs.push(REGISTER.into());
        steps.retain(|s| !(s.inputs.is_empty() && s.outputs.is_empty()));
        Comb::new(op, steps)
    }

    /// `max_τ E(T^τ)` over branches with weight above `1e-9`.
    pub fn energy_individual(&self, battery: Battery) -> Result<f64> {
        let mut e: f64 = 0.0;
        for (k, p) in self.p_tau().into_iter().enumerate() {
            if p > 1e-9 {
                e = e.max(self.branch_comb(k)?.energy(battery)?);
            }
        }
        Ok(e)
    }

    pub fn energy_shared(&self, battery: Battery) -> Result<f64> {
        self.shared_comb()?.energy(battery)
    }
}

fn register_comb(order: Order, blocks: &[CMat]) -> Result<Comb> {
    let reg = SpaceLabel::with_levels(REGISTER, &REGISTER_LEVELS)?;
    assemble_register_comb(&env_labels(), &order.probe_steps(), reg, blocks)
}

#[derive(Clone, Debug)]
pub struct IcoResult {
    pub strategy_kind: IcoStrategy,
    pub e: f64,
    pub cost: f64,
    pub estimator: Vec<f64>,
    pub strategy: SupStrategy,
    pub solver: SolverSummary,
    pub seesaw_iterations: usize,
}

/// See-saw over estimator phases for one strategy class at budget `e`.
pub fn optimize_ico(setup: &IcoSetup, kind: IcoStrategy, e: f64, opts: &SeesawOptions) -> Result<IcoResult> {
    let mut prog = build_ico_program(setup, kind, e)?;
    let out = seesaw_core(&setup.j, kind.outcomes(), opts, |phases| {
        prog.set_phases(&setup.j, phases)?;
        let report = prog.problem.solve(opts.tol)?.require_optimal()?;
        Ok((prog.instrument(&report), report))
    })?;
    let strategy = prog.strategy_from(&out.report);
    Ok(IcoResult {
        strategy_kind: kind,
        e,
        cost: out.cost,
        estimator: out.estimator,
        strategy,
        solver: SolverSummary::from(&out.report),
        seesaw_iterations: out.iterations,
    })
}

/// Repeat register phases for each order-control outcome.
pub fn lift_phases(phases: &[f64], oc: usize) -> Vec<f64> {
    phases.iter().flat_map(|&p| std::iter::repeat_n(p, oc)).collect()
}

fn with_warm(opts: &SeesawOptions, warm: Vec<Vec<f64>>, restarts: usize) -> SeesawOptions {
    SeesawOptions { warm, restarts, ..opts.clone() }
}

#[derive(Clone, Debug, Serialize)]
pub struct HierarchyRow {
    pub e: f64,
    pub cost_sup_ind: f64,
    pub cost_def_global: f64,
    pub cost_def_local: f64,
    /// Definite order with a coherent degenerate qubit, if requested.
    pub cost_def_causality_qubit: Option<f64>,
    pub gap_sup_gl: f64,
    pub gap_gl_loc: f64,
    pub error: Option<String>,
}

impl HierarchyRow {
    pub fn ordered(&self, slack: f64) -> bool {
        self.error.is_none()
            && self.cost_sup_ind <= self.cost_def_global + slack
            && self.cost_def_global <= self.cost_def_local + slack
    }
}

/// Best definite-order cost over both orders, see-saw started at `{0, π}`
/// plus any extra warm starts.
fn best_definite(
    setup: &IcoSetup,
    battery: Battery,
    oc: usize,
    e: f64,
    extra: &[Vec<f64>],
    opts: &SeesawOptions,
) -> Result<IcoResult> {
    let mut best: Option<IcoResult> = None;
    for order in Order::ALL {
        let mut warm = vec![lift_phases(&[0.0, PI], oc)];
        warm.extend(extra.iter().map(|p| if p.len() == 2 * oc { p.clone() } else { lift_phases(p, oc) }));
        let o = with_warm(opts, warm, 0);
        let r = optimize_ico(setup, IcoStrategy::Definite { order, battery, oc_outcomes: oc }, e, &o)?;
        if best.as_ref().is_none_or(|b| r.cost < b.cost) {
            best = Some(r);
        }
    }
    Ok(best.expect("two orders"))
}

/// The three optimized costs at one budget; superposition restarts come
/// from `opts.restarts`, after warm starts lifted from the definite optima.
pub fn hierarchy_point(setup: &IcoSetup, e: f64, causality_qubit: bool, opts: &SeesawOptions) -> Result<HierarchyRow> {
    let loc = best_definite(setup, Battery::Local, 1, e, &[], opts)?;
    let gl = best_definite(setup, Battery::Global, 1, e, std::slice::from_ref(&loc.estimator), opts)?;
    let cq = if causality_qubit {
        Some(best_definite(setup, Battery::Global, 2, e, std::slice::from_ref(&gl.estimator), opts)?.cost)
    } else {
        None
    };
    let warm = vec![lift_phases(&gl.estimator, 2), lift_phases(&loc.estimator, 2)];
    let kind = IcoStrategy::Superposition {
        spacetime: SpacetimeBattery::Individual,
        battery: Battery::Global,
        uniform: false,
    };
    let sup = optimize_ico(setup, kind, e, &with_warm(opts, warm, opts.restarts))?;
    Ok(HierarchyRow {
        e,
        cost_sup_ind: sup.cost,
        cost_def_global: gl.cost,
        cost_def_local: loc.cost,
        cost_def_causality_qubit: cq,
        gap_sup_gl: gl.cost - sup.cost,
        gap_gl_loc: loc.cost - gl.cost,
        error: None,
    })
}

pub fn hierarchy_experiment(e_grid: &[f64], causality_qubit: bool, opts: &SeesawOptions) -> Result<Vec<HierarchyRow>> {
    let setup = IcoSetup::hierarchy()?;
    Ok(crate::par::map(e_grid, |&e| {
        hierarchy_point(&setup, e, causality_qubit, opts).unwrap_or_else(|err| HierarchyRow {
            e,
            cost_sup_ind: f64::NAN,
            cost_def_global: f64::NAN,
            cost_def_local: f64::NAN,
            cost_def_causality_qubit: None,
            gap_sup_gl: f64::NAN,
            gap_gl_loc: f64::NAN,
            error: Some(err.to_string()),
        })
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct BatteryRow {
    pub e: f64,
    pub cost_individual: f64,
    pub cost_shared: f64,
    pub error: Option<String>,
}

fn structured_starts() -> Vec<Vec<f64>> {
    vec![vec![0.0, 0.0, PI, PI], vec![0.0, PI, 0.0, PI], vec![0.0, PI, PI, 0.0]]
}

/// Uniform two-order superposition under individual and shared global batteries.
pub fn ind_vs_shared_point(setup: &IcoSetup, e: f64, opts: &SeesawOptions) -> Result<BatteryRow> {
    let kind = |spacetime| IcoStrategy::Superposition { spacetime, battery: Battery::Global, uniform: true };
    let ind = optimize_ico(
        setup,
        kind(SpacetimeBattery::Individual),
        e,
        &with_warm(opts, structured_starts(), opts.restarts),
    )?;
    let mut warm = vec![ind.estimator.clone()];
    warm.extend(structured_starts());
    let sh = optimize_ico(setup, kind(SpacetimeBattery::Shared), e, &with_warm(opts, warm, opts.restarts))?;
    Ok(BatteryRow { e, cost_individual: ind.cost, cost_shared: sh.cost, error: None })
}

pub fn ind_vs_shared_experiment(e_grid: &[f64], opts: &SeesawOptions) -> Result<Vec<BatteryRow>> {
    let setup = IcoSetup::ind_vs_shared()?;
    Ok(crate::par::map(e_grid, |&e| {
        ind_vs_shared_point(&setup, e, opts).unwrap_or_else(|err| BatteryRow {
            e,
            cost_individual: f64::NAN,
            cost_shared: f64::NAN,
            error: Some(err.to_string()),
        })
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct BatterySeparation {
    pub gate_energy: f64,
    pub c1_local: f64,
    pub c1_global: f64,
    pub c2_individual: f64,
    pub c2_shared: f64,
}

/// Two-step comb applying `gate` at step 1 or step 2 depending on a
/// degenerate control qubit `c` that is returned as `c2` at the end.
pub fn controlled_gate_comb(gate: &CMat) -> Result<Comb> {
    let labels = vec![
        SpaceLabel::new("c", 2),
        SpaceLabel::qubit("a1"),
        SpaceLabel::qubit("b1"),
        SpaceLabel::qubit("a2"),
        SpaceLabel::qubit("b2"),
        SpaceLabel::new("c2", 2),
    ];
    let id = CMat::identity(2, 2);
    let vec_of = |u: &CMat| CVec::from_fn(4, |k, _| u[(k % 2, k / 2)]);
    let mut v = CVec::zeros(64);
    for j in 0..2 {
        let (u1, u2) = if j == 0 { (gate, &id) } else { (&id, gate) };
        let (w1, w2) = (vec_of(u1), vec_of(u2));
        for p in 0..4 {
            for q in 0..4 {
                v[((j * 4 + p) * 4 + q) * 2 + j] = w1[p] * w2[q];
            }
        }
    }
    let op = LabeledOperator::from_ket(labels, &v)?;
    Comb::new(op, vec![Step::new(&["c", "a1"], &["b1"]), Step::new(&["a2"], &["b2", "c2"])])
}

/// `max_τ E(C^τ)` for branches already on a common wiring.
pub fn energy_individual(branches: &[(f64, Comb)], battery: Battery) -> Result<f64> {
    let mut e = f64::NEG_INFINITY;
    for (p, c) in branches {
        if *p > 0.0 {
            e = e.max(c.energy(battery)?);
        }
    }
    Ok(e)
}

/// `E(Σ_τ p_τ C^τ)` for branches already on a common wiring.
pub fn energy_shared(branches: &[(f64, Comb)], battery: Battery) -> Result<f64> {
    let first = branches.first().ok_or_else(|| Error::InvalidArgument("no branches".into()))?;
    let mut acc = first.1.op().scale(cr(first.0));
    for (p, c) in &branches[1..] {
        if c.steps() != first.1.steps() {
            return Err(Error::WiringMismatch("branches must share one wiring".into()));
        }
        acc = acc.add(&c.op().scale(cr(*p)))?;
    }
    Comb::new(acc, first.1.steps().to_vec())?.energy(battery)
}

pub fn battery_separation_with(gate: &CMat) -> Result<BatterySeparation> {
    let (a, b) = (SpaceLabel::qubit("in"), SpaceLabel::qubit("out"));
    let g = Comb::channel(choi_of_unitary(gate, &a, &b)?, "in", "out")?;
    let idc = Comb::channel(omega(&a, &b)?, "in", "out")?;
    let c1 = controlled_gate_comb(gate)?;
    let branches = [(0.5, g.clone()), (0.5, idc)];
    Ok(BatterySeparation {
        gate_energy: g.energy_global()?,
        c1_local: c1.energy_local()?,
        c1_global: c1.energy_global()?,
        c2_individual: energy_individual(&branches, Battery::Global)?,
        c2_shared: energy_shared(&branches, Battery::Global)?,
    })
}

/// Hadamard-based separation between battery models.
pub fn battery_separation_examples() -> Result<BatterySeparation> {
    battery_separation_with(&hadamard())
}
