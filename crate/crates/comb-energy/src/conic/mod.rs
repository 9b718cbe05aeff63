//! Linear programs over Hermitian PSD variables.
//!
//! A [`ConicProblem`] is lowered to a real block SDP (each Hermitian
//! `n × n` variable becomes a symmetric `2n × 2n` block, each scalar a
//! `1 × 1` block) and handed to the interior-point solver in [`ipm`].

mod ipm;

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::{cr, eig_hermitian_matrix, hermitian_basis, CMat, C64};

pub const DEFAULT_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HermId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScalarId(pub usize);

#[derive(Clone, Debug)]
pub struct HermVar {
    pub id: HermId,
    pub dim: usize,
    pub role: String,
}

/// Nonnegative real scalar variable.
#[derive(Clone, Debug)]
pub struct ScalarVar {
    pub id: ScalarId,
    pub role: String,
}

/// `Σ Re Tr[A_v X_v] + Σ a_s s`.
#[derive(Clone, Debug, Default)]
pub struct LinearForm {
    pub herm: Vec<(HermId, CMat)>,
    pub scalar: Vec<(ScalarId, f64)>,
}

impl LinearForm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn herm(mut self, v: HermId, a: CMat) -> Self {
        self.herm.push((v, a));
        self
    }

    pub fn scalar(mut self, s: ScalarId, a: f64) -> Self {
        self.scalar.push((s, a));
        self
    }

    pub fn push_herm(&mut self, v: HermId, a: CMat) {
        self.herm.push((v, a));
    }

    pub fn push_scalar(&mut self, s: ScalarId, a: f64) {
        self.scalar.push((s, a));
    }

    pub fn extend(&mut self, other: LinearForm) {
        self.herm.extend(other.herm);
        self.scalar.extend(other.scalar);
    }

    pub fn scaled(mut self, k: f64) -> Self {
        for (_, a) in &mut self.herm {
            *a *= cr(k);
        }
        for (_, a) in &mut self.scalar {
            *a *= k;
        }
        self
    }

    pub fn evaluate(&self, x: &Assignment) -> f64 {
        let h: f64 = self.herm.iter().map(|(v, a)| re_trace_product(a, &x.herm[v.0])).sum();
        let s: f64 = self.scalar.iter().map(|(v, a)| a * x.scalar[v.0]).sum();
        h + s
    }
}

/// `Re Tr[A B]`.
pub fn re_trace_product(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (a[(i, j)], b[(j, i)]);
            s += x.re * y.re - x.im * y.im;
        }
    }
    s
}

/// Orthonormal basis (in coefficient coordinates) of the span of homogeneous
/// forms; equivalent as a set of `= 0` rows, without dependent rows.
pub fn independent_forms(forms: &[LinearForm], tol: f64) -> Vec<LinearForm> {
    use std::collections::BTreeMap;
    let mut layout: BTreeMap<(u8, usize), (usize, usize)> = BTreeMap::new();
    for f in forms {
        for (v, a) in &f.herm {
            layout.entry((0, v.0)).or_insert((0, a.nrows()));
        }
        for (s, _) in &f.scalar {
            layout.entry((1, s.0)).or_insert((0, 1));
        }
    }
    let mut len = 0;
    for (key, (off, n)) in layout.iter_mut() {
        *off = len;
        len += if key.0 == 0 { *n * *n } else { 1 };
    }
    let r2 = std::f64::consts::SQRT_2;
    let flatten = |f: &LinearForm| -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (v, a) in &f.herm {
            let (off, n) = layout[&(0, v.0)];
            let mut k = off;
            for i in 0..n {
                out[k] += a[(i, i)].re;
                k += 1;
                for j in i + 1..n {
                    let h = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
                    out[k] += r2 * h.re;
                    out[k + 1] += r2 * h.im;
                    k += 2;
                }
            }
        }
        for (s, a) in &f.scalar {
            out[layout[&(1, s.0)].0] += a;
        }
        out
    };
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for f in forms {
        let mut v = flatten(f);
        let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > tol * norm0 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    basis
        .iter()
        .map(|b| {
            let mut f = LinearForm::new();
            for (key, &(off, n)) in &layout {
                if key.0 == 1 {
                    if b[off] != 0.0 {
                        f.push_scalar(ScalarId(key.1), b[off]);
                    }
                    continue;
                }
                let mut a = CMat::zeros(n, n);
                let mut k = off;
                for i in 0..n {
                    a[(i, i)] = cr(b[k]);
                    k += 1;
                    for j in i + 1..n {
                        let h = C64::new(b[k], b[k + 1]) / r2;
                        a[(i, j)] = h;
                        a[(j, i)] = h.conj();
                        k += 2;
                    }
                }
                if a.iter().any(|z| z.norm() > 0.0) {
                    f.push_herm(HermId(key.1), a);
                }
            }
            f
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug)]
struct Row {
    form: LinearForm,
    rhs: f64,
}

/// Bookkeeping for a lowered `L(X) ⪯ B` constraint.
#[derive(Clone, Debug)]
pub struct PsdInequality {
    pub role: String,
    pub dim: usize,
    pub slack: HermId,
    rows: std::ops::Range<usize>,
    rhs: CMat,
}

#[derive(Clone, Debug)]
pub struct ConicProblem {
    sense: Sense,
    vars: Vec<HermVar>,
    scalars: Vec<ScalarVar>,
    hidden: Vec<bool>,
    objective: LinearForm,
    constant: f64,
    rows: Vec<Row>,
    psd: Vec<PsdInequality>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Assignment {
    pub herm: Vec<CMat>,
    pub scalar: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NumericalTrouble,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub value: f64,
    pub dual_value: f64,
    pub assignment: Assignment,
    /// Multipliers of the equality rows, in the minimization form.
    pub dual: Vec<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub tol: f64,
    pub iterations: usize,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn herm(&self, v: HermId) -> &CMat {
        &self.assignment.herm[v.0]
    }

    pub fn scalar(&self, s: ScalarId) -> f64 {
        self.assignment.scalar[s.0]
    }

    pub fn require_optimal(self) -> Result<Self> {
        match self.status {
            SolveStatus::Optimal => Ok(self),
            s => Err(Error::Solver(format!(
                "status {:?} after {} iterations (pinf {:.2e}, dinf {:.2e}, gap {:.2e})",
                s, self.iterations, self.primal_residual, self.dual_residual, self.gap
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub valid: bool,
    pub max_row_residual: f64,
    pub max_psd_violation: f64,
    pub min_variable_eigenvalue: f64,
    pub min_dual_slack_eigenvalue: f64,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
}

impl ConicProblem {
    pub fn new(sense: Sense) -> Self {
        ConicProblem {
            sense,
            vars: Vec::new(),
            scalars: Vec::new(),
            hidden: Vec::new(),
            objective: LinearForm::new(),
            constant: 0.0,
            rows: Vec::new(),
            psd: Vec::new(),
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn variables(&self) -> &[HermVar] {
        &self.vars
    }

    pub fn scalars(&self) -> &[ScalarVar] {
        &self.scalars
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn psd_inequalities(&self) -> &[PsdInequality] {
        &self.psd
    }

    pub fn add_var(&mut self, dim: usize, role: impl Into<String>) -> HermId {
        assert!(dim >= 1, "variable dimension must be positive");
        let id = HermId(self.vars.len());
        self.vars.push(HermVar { id, dim, role: role.into() });
        self.hidden.push(false);
        id
    }

    pub fn add_scalar(&mut self, role: impl Into<String>) -> ScalarId {
        let id = ScalarId(self.scalars.len());
        self.scalars.push(ScalarVar { id, role: role.into() });
        id
    }

    pub fn var_dim(&self, v: HermId) -> usize {
        self.vars[v.0].dim
    }

    fn check_form(&self, f: &LinearForm) -> Result<()> {
        for (v, a) in &f.herm {
            let var = self.vars.get(v.0).ok_or_else(|| Error::InvalidArgument(format!("unknown variable {}", v.0)))?;
            if a.nrows() != var.dim || a.ncols() != var.dim {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient {}x{} for variable `{}` of dim {}",
                    a.nrows(),
                    a.ncols(),
                    var.role,
                    var.dim
                )));
            }
        }
        for (s, _) in &f.scalar {
            if s.0 >= self.scalars.len() {
                return Err(Error::InvalidArgument(format!("unknown scalar {}", s.0)));
            }
        }
        Ok(())
    }

    pub fn set_objective(&mut self, form: LinearForm, constant: f64) -> Result<()> {
        self.check_form(&form)?;
        self.objective = form;
        self.constant = constant;
        Ok(())
    }

    /// `form(X) = rhs`.
    pub fn add_equality(&mut self, form: LinearForm, rhs: f64) -> Result<()> {
        self.check_form(&form)?;
        self.rows.push(Row { form, rhs });
        Ok(())
    }

    /// `L(X) = B` for a Hermitian-valued affine map given through its adjoint:
    /// `adjoint(G)` must return the form `X ↦ Re Tr[G L(X)]`.
    pub fn add_matrix_equality<F>(&mut self, rhs: &CMat, adjoint: F) -> Result<()>
    where
        F: Fn(&CMat) -> LinearForm,
    {
        check_hermitian(rhs)?;
        for g in hermitian_basis(rhs.nrows()) {
            let form = adjoint(&g);
            let b = re_trace_product(&g, rhs);
            self.add_equality(form, b)?;
        }
        Ok(())
    }

    /// `L(X) ⪯ B`, lowered to `L(X) + S = B` with a fresh slack `S ⪰ 0`.
    pub fn add_psd_le<F>(&mut self, rhs: &CMat, role: impl Into<String>, adjoint: F) -> Result<HermId>
    where
        F: Fn(&CMat) -> LinearForm,
    {
        check_hermitian(rhs)?;
        let role = role.into();
        let dim = rhs.nrows();
        let slack = self.add_var(dim, format!("slack:{role}"));
        self.hidden[slack.0] = true;
        let start = self.rows.len();
        for g in hermitian_basis(dim) {
            let mut form = adjoint(&g);
            form.push_herm(slack, g.clone());
            let b = re_trace_product(&g, rhs);
            self.add_equality(form, b)?;
        }
        self.psd.push(PsdInequality { role, dim, slack, rows: start..self.rows.len(), rhs: rhs.clone() });
        Ok(slack)
    }

    /// Value of the objective in the problem's own sense.
    pub fn objective_value(&self, x: &Assignment) -> f64 {
        self.objective.evaluate(x) + self.constant
    }

    fn block_of(&self, v: HermId) -> usize {
        v.0
    }

    fn scalar_block(&self, s: ScalarId) -> usize {
        self.vars.len() + s.0
    }

    fn lower_form(&self, f: &LinearForm, sign: f64) -> Vec<ipm::BlockEntries> {
        let mut per_block: std::collections::BTreeMap<usize, Vec<(u32, u32, f64)>> = Default::default();
        for (v, a) in &f.herm {
            let n = self.vars[v.0].dim;
            let e = per_block.entry(self.block_of(*v)).or_default();
            for i in 0..n {
                for j in 0..n {
                    // Hermitian part of A; Re Tr[A X] only sees it.
                    let h = (a[(i, j)] + a[(j, i)].conj()) * 0.5 * sign;
                    let (ui, uj, un) = (i as u32, j as u32, n as u32);
                    if h.re != 0.0 {
                        e.push((ui, uj, 0.5 * h.re));
                        e.push((ui + un, uj + un, 0.5 * h.re));
                    }
                    if h.im != 0.0 {
                        e.push((ui, uj + un, -0.5 * h.im));
                        e.push((ui + un, uj, 0.5 * h.im));
                    }
                }
            }
        }
        for (s, a) in &f.scalar {
            per_block.entry(self.scalar_block(*s)).or_default().push((0, 0, a * sign));
        }
        per_block.into_iter().map(|(b, e)| ipm::BlockEntries::new(b, e)).filter(|b| !b.entries.is_empty()).collect()
    }

    fn sign(&self) -> f64 {
        match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }

    fn lower(&self) -> ipm::RealSdp {
        let mut blocks: Vec<usize> = self.vars.iter().map(|v| 2 * v.dim).collect();
        blocks.extend(std::iter::repeat_n(1, self.scalars.len()));
        let mut c: Vec<nalgebra::DMatrix<f64>> = blocks.iter().map(|&n| nalgebra::DMatrix::zeros(n, n)).collect();
        for be in self.lower_form(&self.objective, self.sign()) {
            for (r, col, v) in be.entries {
                c[be.block][(r as usize, col as usize)] += v;
            }
        }
        let rows =
            self.rows.iter().map(|r| ipm::RealRow { parts: self.lower_form(&r.form, 1.0), rhs: r.rhs }).collect();
        ipm::RealSdp { blocks, c, rows }
    }

    pub fn solve(&self, tol: f64) -> Result<SolveReport> {
        if !(1e-10..=1e-4).contains(&tol) {
            return Err(Error::InvalidArgument(format!("tolerance {tol} outside [1e-10, 1e-4]")));
        }
        let sdp = self.lower();
        let sol = ipm::solve(&sdp, &ipm::IpmOptions { tol, max_iter: 150 });
        let herm = self.vars.iter().map(|v| unrealify(&sol.x[self.block_of(v.id)])).collect();
        let scalar = self.scalars.iter().map(|s| sol.x[self.scalar_block(s.id)][(0, 0)]).collect();
        let assignment = Assignment { herm, scalar };
        let status = match sol.status {
            ipm::IpmStatus::Optimal => SolveStatus::Optimal,
            ipm::IpmStatus::PrimalInfeasible | ipm::IpmStatus::DualInfeasible => SolveStatus::Infeasible,
            ipm::IpmStatus::Stalled => SolveStatus::NumericalTrouble,
        };
        let sign = self.sign();
        Ok(SolveReport {
            status,
            value: self.objective_value(&assignment),
            dual_value: sign * sol.dobj + self.constant,
            assignment,
            dual: sol.y,
            primal_residual: sol.pinf,
            dual_residual: sol.dinf,
            gap: sol.relgap,
            tol,
            iterations: sol.iterations,
        })
    }

    /// Solves with the default tolerance and fails unless optimal.
    pub fn solve_optimal(&self) -> Result<SolveReport> {
        self.solve(DEFAULT_TOL)?.require_optimal()
    }

    /// Matrix `L(X)` of a PSD inequality at an assignment.
    pub fn inequality_lhs(&self, k: usize, x: &Assignment) -> CMat {
        let p = &self.psd[k];
        let basis = hermitian_basis(p.dim);
        let mut m = CMat::zeros(p.dim, p.dim);
        for (row, g) in self.rows[p.rows.clone()].iter().zip(&basis) {
            let v: f64 = row
                .form
                .herm
                .iter()
                .filter(|(id, _)| *id != p.slack)
                .map(|(id, a)| re_trace_product(a, &x.herm[id.0]))
                .sum::<f64>()
                + row.form.scalar.iter().map(|(s, a)| a * x.scalar[s.0]).sum::<f64>();
            m += g * cr(v);
        }
        m
    }

    /// Independent check of a reported solution: primal rows, PSD
    /// inequalities, variable cones, dual slack cone and duality gap.
    pub fn certify(&self, report: &SolveReport) -> Certificate {
        let x = &report.assignment;
        let tol = report.tol;
        let max_row_residual = self.rows.iter().map(|r| (r.form.evaluate(x) - r.rhs).abs()).fold(0.0, f64::max);
        let max_psd_violation = (0..self.psd.len())
            .map(|k| {
                let d = &self.inequality_lhs(k, x) - &self.psd[k].rhs;
                eig_hermitian_matrix(&d).map(|e| e.0[e.0.len() - 1]).unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max);
        let mut min_var = f64::INFINITY;
        for (v, m) in self.vars.iter().zip(&x.herm) {
            if self.hidden[v.id.0] {
                continue;
            }
            let e = eig_hermitian_matrix(m).map(|e| e.0[0]).unwrap_or(f64::NEG_INFINITY);
            min_var = min_var.min(e);
        }
        for &s in &x.scalar {
            min_var = min_var.min(s);
        }
        if min_var == f64::INFINITY {
            min_var = 0.0;
        }

        // Dual slack Z = C − Σ y_i A_i in minimization form.
        let sign = self.sign();
        let mut z: Vec<CMat> = self.vars.iter().map(|v| CMat::zeros(v.dim, v.dim)).collect();
        let mut zs = vec![0.0; self.scalars.len()];
        let add = |f: &LinearForm, k: f64, z: &mut Vec<CMat>, zs: &mut Vec<f64>| {
            for (v, a) in &f.herm {
                let h = (a + a.adjoint()) * cr(0.5 * k);
                z[v.0] += h;
            }
            for (s, a) in &f.scalar {
                zs[s.0] += a * k;
            }
        };
        add(&self.objective, sign, &mut z, &mut zs);
        let mut dual_value = self.constant * sign;
        for (row, &yi) in self.rows.iter().zip(&report.dual) {
            add(&row.form, -yi, &mut z, &mut zs);
            dual_value += yi * row.rhs;
        }
        let mut min_dual = zs.iter().cloned().fold(f64::INFINITY, f64::min);
        for m in &z {
            let e = eig_hermitian_matrix(m).map(|e| e.0[0]).unwrap_or(f64::NEG_INFINITY);
            min_dual = min_dual.min(e);
        }
        if min_dual == f64::INFINITY {
            min_dual = 0.0;
        }
        let primal_value = self.objective_value(x);
        let dual_value = sign * dual_value;
        let gap = (primal_value - dual_value).abs() / (1.0 + primal_value.abs() + dual_value.abs());
        let slack = 10.0 * tol;
        let rhs_scale = 1.0 + self.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        let valid = report.is_optimal()
            && max_row_residual <= slack * rhs_scale
            && max_psd_violation <= slack * rhs_scale
            && min_var >= -slack * rhs_scale
            && min_dual >= -slack * (1.0 + dual_value.abs())
            && gap <= slack;
        Certificate {
            valid,
            max_row_residual,
            max_psd_violation,
            min_variable_eigenvalue: min_var,
            min_dual_slack_eigenvalue: min_dual,
            primal_value,
            dual_value,
            gap,
        }
    }

    /// Plain-text sparse triplet dump (`var i j re im`).
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# sense {}", if self.sense == Sense::Maximize { "max" } else { "min" });
        let _ = writeln!(s, "# constant {:e}", self.constant);
        for v in &self.vars {
            let _ = writeln!(s, "# var {} dim {} role {}", v.id.0, v.dim, v.role);
        }
        for v in &self.scalars {
            let _ = writeln!(s, "# scalar {} role {}", v.id.0, v.role);
        }
        let write_form = |s: &mut String, f: &LinearForm| {
            for (v, a) in &f.herm {
                for i in 0..a.nrows() {
                    for j in 0..a.ncols() {
                        let z = a[(i, j)];
                        if z != C64::new(0.0, 0.0) {
                            let _ = writeln!(s, "x{} {} {} {:e} {:e}", v.0, i, j, z.re, z.im);
                        }
                    }
                }
            }
            for (v, a) in &f.scalar {
                let _ = writeln!(s, "s{} 0 0 {:e} 0", v.0, a);
            }
        };
        let _ = writeln!(s, "objective");
        write_form(&mut s, &self.objective);
        for (k, r) in self.rows.iter().enumerate() {
            let _ = writeln!(s, "row {} rhs {:e}", k, r.rhs);
            write_form(&mut s, &r.form);
        }
        s
    }
}

fn check_hermitian(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    let dev = (m - m.adjoint()).amax_complex();
    if dev > 1e-10 * (1.0 + m.camax()) {
        return Err(Error::NotHermitian(dev));
    }
    Ok(())
}

trait AmaxComplex {
    fn amax_complex(&self) -> f64;
}

impl AmaxComplex for CMat {
    fn amax_complex(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// `M ↦ [[Re M, −Im M], [Im M, Re M]]`.
pub fn realify(m: &CMat) -> nalgebra::DMatrix<f64> {
    let n = m.nrows();
    nalgebra::DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = m[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of [`realify`], averaging the redundant blocks.
pub fn unrealify(y: &nalgebra::DMatrix<f64>) -> CMat {
    let n = y.nrows() / 2;
    CMat::from_fn(n, n, |i, j| {
        let re = 0.5 * (y[(i, j)] + y[(i + n, j + n)]);
        let im = 0.5 * (y[(i + n, j)] - y[(i, j + n)]);
        C64::new(re, im)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, rng};
    use crate::tensor::{c, lambda_min};

    #[test]
    fn realify_identity_and_roundtrip() {
        let i3 = CMat::identity(3, 3);
        assert_eq!(realify(&i3), nalgebra::DMatrix::<f64>::identity(6, 6));
        let mut r = rng(3);
        for _ in 0..10 {
            let h = random_hermitian(4, &mut r);
            assert!((unrealify(&realify(&h)) - &h).amax_complex() < 1e-14);
        }
    }

    #[test]
    fn realify_preserves_spectrum() {
        let mut r = rng(5);
        let h = random_hermitian(5, &mut r);
        let e = nalgebra::SymmetricEigen::new(realify(&h)).eigenvalues;
        let lo = e.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((lo - lambda_min(&h).unwrap()).abs() < 1e-10);
        let y = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => c(0.0, -1.0),
            (1, 0) => c(0.0, 1.0),
            _ => c(0.0, 0.0),
        });
        let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(realify(&y)).eigenvalues.iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn trace_box(n: usize) -> (ConicProblem, HermId) {
        let mut p = ConicProblem::new(Sense::Maximize);
        let x = p.add_var(n, "X");
        p.set_objective(LinearForm::new().herm(x, CMat::identity(n, n)), 0.0).unwrap();
        p.add_psd_le(&CMat::identity(n, n), "X <= I", |g| LinearForm::new().herm(x, g.clone())).unwrap();
        (p, x)
    }

    #[test]
    fn trace_in_unit_box() {
        for n in 1..=4 {
            let (p, _) = trace_box(n);
            let r = p.solve(1e-8).unwrap();
            assert!(r.is_optimal(), "{:?}", r.status);
            assert!((r.value - n as f64).abs() < 1e-7, "{}", r.value);
            let cert = p.certify(&r);
            assert!(cert.valid, "{cert:?}");
        }
    }

    #[test]
    fn perturbed_assignment_fails_certification() {
        let (p, x) = trace_box(2);
        let mut r = p.solve(1e-8).unwrap();
        r.assignment.herm[x.0] *= cr(1.01);
        assert!(!p.certify(&r).valid);
    }

    #[test]
    fn infeasible_is_reported() {
        let mut p = ConicProblem::new(Sense::Minimize);
        let x = p.add_var(2, "X");
        p.set_objective(LinearForm::new().herm(x, CMat::identity(2, 2)), 0.0).unwrap();
        p.add_equality(LinearForm::new().herm(x, CMat::identity(2, 2)), -1.0).unwrap();
        let r = p.solve(1e-7).unwrap();
        assert_ne!(r.status, SolveStatus::Optimal);
    }

    #[test]
    fn scalar_and_complex_coefficients() {
        // max Re Tr[σ_y X] with Tr X = 1, X ⪰ 0 → 1; plus s ≤ 2 via s + t = 2.
        let mut p = ConicProblem::new(Sense::Maximize);
        let x = p.add_var(2, "X");
        let s = p.add_scalar("s");
        let t = p.add_scalar("t");
        let y = crate::tensor::pauli_y();
        p.set_objective(LinearForm::new().herm(x, y).scalar(s, 1.0), 0.5).unwrap();
        p.add_equality(LinearForm::new().herm(x, CMat::identity(2, 2)), 1.0).unwrap();
        p.add_equality(LinearForm::new().scalar(s, 1.0).scalar(t, 1.0), 2.0).unwrap();
        let r = p.solve_optimal().unwrap();
        assert!((r.value - 3.5).abs() < 1e-6, "{}", r.value);
        assert!(p.certify(&r).valid);
    }

    #[test]
    fn dimension_mismatch_raises() {
        let mut p = ConicProblem::new(Sense::Maximize);
        let x = p.add_var(2, "X");
        assert!(p.add_equality(LinearForm::new().herm(x, CMat::identity(3, 3)), 1.0).is_err());
    }

    #[test]
    fn dump_has_triplets() {
        let (p, _) = trace_box(2);
        let d = p.dump();
        assert!(d.contains("objective"));
        assert!(d.lines().any(|l| l.starts_with("x0 0 0 ")));
    }
}
