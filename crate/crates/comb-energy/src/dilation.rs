//! Sequential isometric implementation of a comb with a control ancilla
//! `ℋ_C = ℋ_A^⊗3` whose energy stays at `3Ē` throughout.

use rand::Rng;
use serde::Serialize;

use crate::comb::Comb;
use crate::error::{Error, Result};
use crate::random::{random_isometry, random_ket, rng};
use crate::tensor::{cr, eig_hermitian_matrix, fourier, matrix_to_json, CMat, CVec, C64};

/// Eigenvalues below this are dropped from Kraus decompositions and
/// singular values below it count as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Largest `d_A³ · max(d_in, d_out)` accepted by [`dilate`].
pub const MAX_STEP_DIM: usize = 512;

/// Kraus operators of every level `C^(n)`, padded with zeros to a common count.
#[derive(Clone, Debug)]
pub struct KrausHierarchy {
    /// `(d_in, d_out)` of each step.
    pub step_dims: Vec<(usize, usize)>,
    /// `levels[n-1][j]` maps `in_1 … in_n` to `out_1 … out_n`.
    pub levels: Vec<Vec<CMat>>,
    /// Numerical rank of each level.
    pub ranks: Vec<usize>,
}

impl KrausHierarchy {
    pub fn m(&self) -> usize {
        self.levels.first().map_or(0, Vec::len)
    }

    /// `max_n ‖Σ_j K_j†K_j − I‖_max`.
    pub fn completeness_error(&self) -> f64 {
        self.levels
            .iter()
            .map(|ks| {
                let d = ks[0].ncols();
                let s: CMat = ks.iter().map(|k| k.adjoint() * k).sum();
                (s - CMat::identity(d, d)).camax()
            })
            .fold(0.0, f64::max)
    }
}

fn step_dims(c: &Comb) -> Vec<(usize, usize)> {
    c.steps()
        .iter()
        .map(|s| {
            let dim = |ids: &[String]| ids.iter().map(|id| c.label(id).dim).product::<usize>();
            (dim(&s.inputs), dim(&s.outputs))
        })
        .collect()
}

/// Kraus operators `K_j^(n)` with `C^(n) = Σ_j |K_j⟩⟩⟨⟨K_j|` for every level.
pub fn kraus_hierarchy(c: &Comb) -> Result<KrausHierarchy> {
    if !c.is_valid() {
        return Err(Error::InvalidComb("dilation needs a valid comb".into()));
    }
    let dims = step_dims(c);
    let mut raw = Vec::new();
    for n in 1..=c.n_steps() {
        let steps = &c.steps()[..n];
        let order: Vec<&str> = steps
            .iter()
            .flat_map(|s| s.inputs.iter())
            .chain(steps.iter().flat_map(|s| s.outputs.iter()))
            .map(String::as_str)
            .collect();
        let level = c.reduced(n)?.permute(&order)?;
        let d_in: usize = dims[..n].iter().map(|d| d.0).product();
        let d_out: usize = dims[..n].iter().map(|d| d.1).product();
        let (vals, vecs) = eig_hermitian_matrix(level.matrix())?;
        let ks: Vec<CMat> = vals
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &v)| v > RANK_TOL)
            .map(|(k, &v)| {
                let s = v.sqrt();
                CMat::from_fn(d_out, d_in, |o, i| vecs[(i * d_out + o, k)] * s)
            })
            .collect();
        raw.push(ks);
    }
    let ranks: Vec<usize> = raw.iter().map(Vec::len).collect();
    let m = ranks.iter().copied().max().unwrap_or(1).max(1);
    let levels = raw
        .into_iter()
        .map(|mut ks| {
            let (r, cdim) = ks.first().map_or((1, 1), |k| (k.nrows(), k.ncols()));
            ks.resize(m, CMat::zeros(r, cdim));
            ks
        })
        .collect();
    Ok(KrausHierarchy { step_dims: dims, levels, ranks })
}

/// `|φ_j⟩ = M^{-1/2} Σ_k ω_M^{jk} F|e_j⟩⊗F|e_k⟩⊗F|e_k⟩` for `j < M`.
pub fn phi_states(m: usize, d_a: usize) -> Result<Vec<CVec>> {
    if m == 0 || d_a < m {
        return Err(Error::InvalidArgument(format!("ancilla dimension {d_a} below Kraus count {m}")));
    }
    let f = fourier(d_a);
    let fe = |k: usize| f.column(k).into_owned();
    let s = cr(1.0 / (m as f64).sqrt());
    Ok((0..m)
        .map(|j| {
            let mut v = CVec::zeros(d_a * d_a * d_a);
            for k in 0..m {
                let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * ((j * k) % m) as f64 / m as f64);
                v += fe(j).kronecker(&fe(k)).kronecker(&fe(k)) * (w * s);
            }
            v
        })
        .collect())
}

/// Mean ancilla level `Ē`.
pub fn mean_level(levels: &[f64]) -> f64 {
    levels.iter().sum::<f64>() / levels.len() as f64
}

/// Diagonal of `H_A⊗I⊗I + I⊗H_A⊗I + I⊗I⊗H_A`.
fn control_energies(levels: &[f64]) -> Vec<f64> {
    let d = levels.len();
    (0..d * d * d).map(|i| levels[i / (d * d)] + levels[(i / d) % d] + levels[i % d]).collect()
}

#[derive(Clone, Debug)]
pub struct DilationPlan {
    pub m: usize,
    pub d_a: usize,
    /// Spectrum of `H_A` in its eigenbasis.
    pub levels: Vec<f64>,
    pub phi_states: Vec<CVec>,
    /// `U_n : in_n⊗ℋ_C → out_n⊗ℋ_C`, system factor first.
    pub steps: Vec<CMat>,
    pub step_dims: Vec<(usize, usize)>,
    pub ranks: Vec<usize>,
}

impl DilationPlan {
    pub fn d_c(&self) -> usize {
        self.d_a.pow(3)
    }

    pub fn e_bar(&self) -> f64 {
        mean_level(&self.levels)
    }

    /// `max_n ‖U_n†U_n − I‖_max`.
    pub fn isometry_error(&self) -> f64 {
        self.steps.iter().map(|u| (u.adjoint() * u - CMat::identity(u.ncols(), u.ncols())).camax()).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> PlanJson {
        PlanJson {
            m: self.m,
            d_a: self.d_a,
            levels: self.levels.clone(),
            e_bar: self.e_bar(),
            ranks: self.ranks.clone(),
            step_dims: self.step_dims.clone(),
            phi_states: self.phi_states.iter().map(|v| v.iter().map(|z| [z.re, z.im]).collect()).collect(),
            steps: self.steps.iter().map(matrix_to_json).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PlanJson {
    pub m: usize,
    pub d_a: usize,
    pub levels: Vec<f64>,
    pub e_bar: f64,
    pub ranks: Vec<usize>,
    pub step_dims: Vec<(usize, usize)>,
    pub phi_states: Vec<Vec<[f64; 2]>>,
    pub steps: Vec<Vec<Vec<[f64; 2]>>>,
}

/// Orthonormal columns spanning the complement of the orthonormal columns `q`.
fn complement(q: &CMat) -> CMat {
    let (n, r) = q.shape();
    let mut aug = CMat::zeros(n, r + n);
    aug.columns_mut(0, r).copy_from(q);
    aug.columns_mut(r, n).copy_from(&CMat::identity(n, n));
    aug.qr().q().columns(r, n - r).into_owned()
}

/// `U_1` sending `|i⟩⊗|φ_0⟩` to `Σ_j K_j|i⟩⊗|φ_j⟩`, completed to an isometry.
fn first_step(kraus: &[CMat], phis: &[CVec], d_c: usize) -> CMat {
    let (d_out, d_in) = kraus[0].shape();
    let mut y = CMat::zeros(d_out * d_c, d_in);
    for (k, phi) in kraus.iter().zip(phis) {
        for i in 0..d_in {
            let img = k.column(i).into_owned().kronecker(phi);
            let mut col = y.column_mut(i);
            col += img;
        }
    }
    let mut basis_c = CMat::zeros(d_c, d_c);
    basis_c.column_mut(0).copy_from(&phis[0]);
    basis_c.columns_mut(1, d_c - 1).copy_from(&complement(&CMat::from_columns(&[phis[0].clone()])));
    let rest = complement(&y);
    let mut u = CMat::zeros(d_out * d_c, d_in * d_c);
    let mut used = 0;
    for i in 0..d_in {
        let e_i = CVec::from_fn(d_in, |r, _| cr(if r == i { 1.0 } else { 0.0 }));
        for c in 0..d_c {
            let input = e_i.kronecker(&basis_c.column(c).into_owned());
            let image = if c == 0 {
                y.column(i).into_owned()
            } else {
                used += 1;
                rest.column(used - 1).into_owned()
            };
            u += image * input.adjoint();
        }
    }
    u
}

/// Isometry `V` on `in_n⊗ℂ^M → out_n⊗ℂ^M` relating consecutive Kraus levels:
/// `(I⊗⟨l|)K_j^(n) = Σ_{l',k} V_{lj,l'k} K_k^(n-1)⊗⟨l'|`.
fn relating_isometry(prev: &[CMat], cur: &[CMat], d_in: usize, d_out: usize) -> Result<CMat> {
    let m = cur.len();
    let (d_po, d_pi) = prev[0].shape();
    let (d_i, d_o) = (d_pi * d_in, d_po);
    let vec_len = d_o * d_i;
    let vectorize = |x: &CMat| CVec::from_fn(vec_len, |idx, _| x[(idx % d_o, idx / d_o)]);
    let mut a_cols = Vec::with_capacity(d_out * m);
    for l in 0..d_out {
        for k in cur {
            let rows = CMat::from_fn(d_o, d_i, |o, i| k[(o * d_out + l, i)]);
            a_cols.push(vectorize(&rows));
        }
    }
    let mut b_cols = Vec::with_capacity(d_in * m);
    for lp in 0..d_in {
        for k in prev {
            let x = CMat::from_fn(d_o, d_i, |o, i| if i % d_in == lp { k[(o, i / d_in)] } else { cr(0.0) });
            b_cols.push(vectorize(&x));
        }
    }
    let a = CMat::from_columns(&a_cols);
    let b = CMat::from_columns(&b_cols);
    let svd = b.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max).max(1.0);
    let keep: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] > RANK_TOL * smax).collect();
    let r = keep.len();
    let u_r = CMat::from_fn(u.nrows(), r, |i, k| u[(i, keep[k])]);
    let v_r = CMat::from_fn(vt.ncols(), r, |i, k| vt[(keep[k], i)].conj());
    let s_inv = CMat::from_fn(r, r, |i, k| cr(if i == k { 1.0 / svd.singular_values[keep[i]] } else { 0.0 }));
    let g = a.adjoint() * &u_r * &s_inv;
    let w0 = &v_r * g.adjoint();
    let residual = (&b * &w0 - &a).camax();
    if residual > 1e-8 {
        return Err(Error::InvalidComb(format!(
            "Kraus levels are not related by an isometry (residual {residual:.3e})"
        )));
    }
    let rows_free = d_in * m - r;
    let kernel = complement(&v_r);
    let fill = complement(&g).columns(0, rows_free).into_owned();
    let w = w0 + kernel * fill.adjoint();
    Ok(w.transpose())
}

/// `B_k = F diag(ω_M^{jk})`, an isometry `ℂ^M → ℋ_A`.
fn phase_basis(m: usize, d_a: usize, k: usize) -> CMat {
    let f = fourier(d_a);
    CMat::from_fn(d_a, m, |r, j| {
        f[(r, j)] * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * ((j * k) % m) as f64 / m as f64)
    })
}

fn controlled_step(v: &CMat, m: usize, d_a: usize, d_in: usize, d_out: usize) -> CMat {
    let f = fourier(d_a);
    let embed = CMat::from_fn(d_out, d_in, |r, c| cr(if r == c { 1.0 } else { 0.0 }));
    let mut u = CMat::zeros(d_out * d_a.pow(3), d_in * d_a.pow(3));
    for k in 0..d_a {
        let b = phase_basis(m, d_a, k % m);
        let outer = |d: usize| {
            let mut x = CMat::zeros(d * d_a, d * m);
            for blk in 0..d {
                x.view_mut((blk * d_a, blk * m), (d_a, m)).copy_from(&b);
            }
            x
        };
        let mut uk = outer(d_out) * v * outer(d_in).adjoint();
        if d_a > m {
            let perp = CMat::identity(d_a, d_a) - &b * b.adjoint();
            uk += embed.kronecker(&perp);
        }
        let fk = f.column(k).into_owned();
        let proj = &fk * fk.adjoint();
        u += uk.kronecker(&proj).kronecker(&CMat::identity(d_a, d_a));
    }
    u
}

/// Dilation with `d_A = M` and equally spaced ancilla levels.
pub fn dilate(c: &Comb) -> Result<DilationPlan> {
    dilate_with(c, None)
}

/// Dilation with an optional ancilla spectrum; its length is `d_A ≥ M`.
pub fn dilate_with(c: &Comb, levels: Option<&[f64]>) -> Result<DilationPlan> {
    let h = kraus_hierarchy(c)?;
    let m = h.m();
    let levels: Vec<f64> = match levels {
        Some(l) => l.to_vec(),
        None => (0..m).map(|k| k as f64).collect(),
    };
    let d_a = levels.len();
    let phis = phi_states(m, d_a)?;
    let d_c = d_a.pow(3);
    for &(d_in, d_out) in &h.step_dims {
        if d_out < d_in {
            return Err(Error::Unsupported(format!("step output dim {d_out} below input dim {d_in}")));
        }
        if d_c * d_out > MAX_STEP_DIM {
            return Err(Error::SizeBudget(format!("d_C·d_out = {} exceeds {MAX_STEP_DIM}", d_c * d_out)));
        }
    }
    let mut steps = vec![first_step(&h.levels[0], &phis, d_c)];
    for n in 1..h.levels.len() {
        let (d_in, d_out) = h.step_dims[n];
        let v = relating_isometry(&h.levels[n - 1], &h.levels[n], d_in, d_out)?;
        steps.push(controlled_step(&v, m, d_a, d_in, d_out));
    }
    Ok(DilationPlan { m, d_a, levels, phi_states: phis, steps, step_dims: h.step_dims, ranks: h.ranks })
}

#[derive(Clone, Debug, Serialize)]
pub struct DilationReport {
    /// `‖reconstructed Choi − C‖_max`.
    pub choi_error: f64,
    pub isometry_error: f64,
    pub target_energy: f64,
    /// Ancilla energy per trial, before step 1 and after every step.
    pub ancilla_energies: Vec<Vec<f64>>,
    pub max_energy_deviation: f64,
}

/// `Ψ ↦ Ψ·Uᵀ` where the columns of `Ψ` index `(system, control)`.
fn apply_step(psi: &CMat, u: &CMat) -> CMat {
    psi * u.transpose()
}

fn regroup(psi: &CMat, cols: usize) -> CMat {
    let total = psi.nrows() * psi.ncols();
    CMat::from_fn(total / cols, cols, |r, c| {
        let idx = r * cols + c;
        psi[(idx / psi.ncols(), idx % psi.ncols())]
    })
}

fn ancilla_energy(psi: &CMat, h_c: &[f64]) -> f64 {
    (0..psi.ncols()).map(|c| psi.column(c).norm_squared() * h_c[c]).sum()
}

/// Reconstructed Choi operator in step order `in_1, out_1, …, in_N, out_N`.
pub fn reconstruct_choi(plan: &DilationPlan) -> CMat {
    let d_c = plan.d_c();
    let mut psi = CMat::from_fn(1, d_c, |_, c| plan.phi_states[0][c]);
    for (u, &(d_in, d_out)) in plan.steps.iter().zip(&plan.step_dims) {
        let d_x = psi.nrows();
        let mut phi = CMat::zeros(d_x * d_in, d_in * d_c);
        for x in 0..d_x {
            for i in 0..d_in {
                for c in 0..d_c {
                    phi[(x * d_in + i, i * d_c + c)] = psi[(x, c)];
                }
            }
        }
        psi = regroup(&apply_step(&phi, u), d_c);
        debug_assert_eq!(psi.nrows(), d_x * d_in * d_out);
    }
    &psi * psi.adjoint()
}

/// Choi round trip and ancilla energy along `trials` random testers that keep
/// a reference system entangled with every input.
pub fn verify_dilation(c: &Comb, plan: &DilationPlan, trials: usize, seed: u64) -> Result<DilationReport> {
    let target = c.op().permute(&c.step_order())?;
    let choi = reconstruct_choi(plan);
    if choi.shape() != target.matrix().shape() {
        return Err(Error::DimensionMismatch("plan does not match the comb".into()));
    }
    let choi_error = (choi - target.matrix()).camax();
    let h_c = control_energies(&plan.levels);
    let e3 = 3.0 * plan.e_bar();
    let mut r = rng(seed);
    let mut energies = Vec::with_capacity(trials);
    for _ in 0..trials {
        energies.push(tester_run(plan, &h_c, &mut r));
    }
    let dev = energies.iter().flatten().map(|e| (e - e3).abs()).fold(0.0, f64::max);
    Ok(DilationReport {
        choi_error,
        isometry_error: plan.isometry_error(),
        target_energy: e3,
        ancilla_energies: energies,
        max_energy_deviation: dev,
    })
}

fn tester_run<R: Rng>(plan: &DilationPlan, h_c: &[f64], r: &mut R) -> Vec<f64> {
    let d_c = plan.d_c();
    let (d_in0, _) = plan.step_dims[0];
    let mut d_ref = d_in0.max(2);
    let ket = random_ket(d_ref * d_in0, r);
    let mut psi = CMat::zeros(d_ref * d_in0, d_c);
    for s in 0..d_ref * d_in0 {
        for cc in 0..d_c {
            psi[(s, cc)] = ket[s] * plan.phi_states[0][cc];
        }
    }
    let mut out = vec![ancilla_energy(&psi, h_c)];
    for (n, (u, &(d_in, d_out))) in plan.steps.iter().zip(&plan.step_dims).enumerate() {
        let phi = regroup(&psi, d_in * d_c);
        psi = regroup(&apply_step(&phi, u), d_c);
        out.push(ancilla_energy(&psi, h_c));
        if let Some(&(next_in, _)) = plan.step_dims.get(n + 1) {
            let d_now = d_ref * d_out;
            let d_next_ref = d_now.div_ceil(next_in);
            let t = random_isometry(d_next_ref * next_in, d_now, r);
            psi = t * psi;
            d_ref = d_next_ref;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comb::random_comb;
    use crate::random::random_kraus;
    use crate::tensor::{choi_of_kraus, choi_of_unitary, hadamard, SpaceLabel};

    fn channel(kraus: &[CMat], d: usize) -> Comb {
        let (a, b) = (SpaceLabel::equally_spaced("in", d), SpaceLabel::equally_spaced("out", d));
        Comb::channel(choi_of_kraus(kraus, &a, &b, false).unwrap(), "in", "out").unwrap()
    }

    #[test]
    fn phi_states_orthonormal_with_constant_energy() {
        for (m, d_a) in [(1, 1), (2, 2), (3, 4), (4, 4)] {
            let phis = phi_states(m, d_a).unwrap();
            let levels: Vec<f64> = (0..d_a).map(|k| k as f64).collect();
            let h = control_energies(&levels);
            for (j, p) in phis.iter().enumerate() {
                for (k, q) in phis.iter().enumerate() {
                    let want = if j == k { 1.0 } else { 0.0 };
                    assert!((p.dotc(q) - cr(want)).norm() < 1e-12);
                }
                let e: f64 = p.iter().zip(&h).map(|(z, e)| z.norm_sqr() * e).sum();
                assert!((e - 3.0 * mean_level(&levels)).abs() < 1e-10);
            }
        }
        assert!(phi_states(3, 2).is_err());
    }

    #[test]
    fn identity_channel_single_kraus() {
        let c = channel(&[CMat::identity(2, 2)], 2);
        let h = kraus_hierarchy(&c).unwrap();
        assert_eq!(h.m(), 1);
        let k = &h.levels[0][0];
        let ph = k[(0, 0)];
        assert!((k - CMat::identity(2, 2) * ph).camax() < 1e-12 && (ph.norm() - 1.0).abs() < 1e-12);
        let plan = dilate(&c).unwrap();
        let rep = verify_dilation(&c, &plan, 5, 1).unwrap();
        assert!(rep.choi_error < 1e-12 && rep.max_energy_deviation < 1e-12);
    }

    #[test]
    fn depolarizing_has_four_kraus() {
        let p: f64 = 0.3;
        let paulis =
            [CMat::identity(2, 2), crate::tensor::pauli_x(), crate::tensor::pauli_y(), crate::tensor::pauli_z()];
        let ws = [1.0 - 3.0 * p / 4.0, p / 4.0, p / 4.0, p / 4.0];
        let ks: Vec<CMat> = paulis.iter().zip(ws).map(|(s, w)| s * cr(w.sqrt())).collect();
        let h = kraus_hierarchy(&channel(&ks, 2)).unwrap();
        assert_eq!(h.m(), 4);
        assert!(h.completeness_error() < 1e-9);
    }

    #[test]
    fn hadamard_round_trip() {
        let (a, b) = (SpaceLabel::qubit("in"), SpaceLabel::qubit("out"));
        let c = Comb::channel(choi_of_unitary(&hadamard(), &a, &b).unwrap(), "in", "out").unwrap();
        let plan = dilate(&c).unwrap();
        let rep = verify_dilation(&c, &plan, 10, 2).unwrap();
        assert!(rep.choi_error < 1e-8, "{rep:?}");
        assert!(rep.isometry_error < 1e-10);
    }

    #[test]
    fn random_channels_and_combs() {
        let mut r = rng(7);
        for d in [2, 3] {
            let ks = random_kraus(d, d, 3, &mut r);
            let c = channel(&ks, d);
            let plan = dilate(&c).unwrap();
            let rep = verify_dilation(&c, &plan, 20, 3).unwrap();
            assert!(rep.choi_error < 1e-8 && rep.max_energy_deviation < 1e-8, "{d}: {}", rep.choi_error);
            assert!(rep.isometry_error < 1e-10);
        }
        let steps =
            [(SpaceLabel::qubit("i1"), SpaceLabel::qubit("o1")), (SpaceLabel::qubit("i2"), SpaceLabel::qubit("o2"))];
        let c = random_comb(&steps, &[2, 4], &mut r).unwrap();
        let h = kraus_hierarchy(&c).unwrap();
        assert!(h.completeness_error() < 1e-9);
        let plan = dilate(&c).unwrap();
        let rep = verify_dilation(&c, &plan, 20, 4).unwrap();
        assert!(rep.choi_error < 1e-7, "{}", rep.choi_error);
        assert!(rep.max_energy_deviation < 1e-8);
        assert!(rep.isometry_error < 1e-10);
    }

    #[test]
    fn larger_ancilla_spectrum() {
        let mut r = rng(9);
        let c = channel(&random_kraus(2, 2, 2, &mut r), 2);
        let plan = dilate_with(&c, Some(&[0.0, 0.5, 2.0])).unwrap();
        let rep = verify_dilation(&c, &plan, 10, 5).unwrap();
        assert!(rep.choi_error < 1e-8 && rep.max_energy_deviation < 1e-8, "{rep:?}");
        assert!((rep.target_energy - 2.5).abs() < 1e-12);
    }
}
