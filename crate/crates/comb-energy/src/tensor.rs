//! Labeled multi-space complex linear algebra.
//!
//! A [`LabeledOperator`] is a dense square matrix acting on an ordered tensor
//! product of labeled factors. Factor order is row-major: the first label is
//! the most significant index. Binary operations align the second operand to
//! the label order of the first.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Absolute tolerance on the max-abs deviation from Hermiticity.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// A Hilbert-space factor with a dimension and a Hamiltonian whose ground energy is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceLabel {
    pub id: String,
    pub dim: usize,
    pub hamiltonian: CMat,
}

impl SpaceLabel {
    /// Factor with the zero (degenerate) Hamiltonian.
    pub fn new(id: impl Into<String>, dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        SpaceLabel { id: id.into(), dim, hamiltonian: CMat::zeros(dim, dim) }
    }

    /// One-dimensional factor standing for "no system".
    pub fn trivial(id: impl Into<String>) -> Self {
        SpaceLabel::new(id, 1)
    }

    /// Factor with a user Hamiltonian; it must be Hermitian with minimum eigenvalue 0.
    pub fn with_hamiltonian(id: impl Into<String>, hamiltonian: CMat) -> Result<Self> {
        let id = id.into();
        let dim = hamiltonian.nrows();
        if dim == 0 || hamiltonian.ncols() != dim {
            return Err(Error::InvalidHamiltonian(id, "not a nonempty square matrix".into()));
        }
        let dev = hermitian_deviation(&hamiltonian);
        if dev > 1e-12 {
            return Err(Error::InvalidHamiltonian(id, format!("not Hermitian ({dev:.3e})")));
        }
        let (vals, _) = eig_hermitian_matrix(&hamiltonian)?;
        if vals[0].abs() > 1e-9 {
            return Err(Error::InvalidHamiltonian(id, format!("ground energy {} is not zero", vals[0])));
        }
        Ok(SpaceLabel { id, dim, hamiltonian })
    }

    /// Factor with a diagonal Hamiltonian given by its energy levels.
    pub fn with_levels(id: impl Into<String>, levels: &[f64]) -> Result<Self> {
        let h = CMat::from_diagonal(&CVec::from_iterator(levels.len(), levels.iter().map(|&e| cr(e))));
        SpaceLabel::with_hamiltonian(id, h)
    }

    /// Equally spaced spectrum `0, 1, …, dim−1`.
    pub fn equally_spaced(id: impl Into<String>, dim: usize) -> Self {
        let levels: Vec<f64> = (0..dim).map(|n| n as f64).collect();
        SpaceLabel::with_levels(id, &levels).expect("valid spectrum")
    }

    /// Qubit with `H = |1⟩⟨1|`.
    pub fn qubit(id: impl Into<String>) -> Self {
        SpaceLabel::equally_spaced(id, 2)
    }

    pub fn renamed(&self, id: impl Into<String>) -> Self {
        SpaceLabel { id: id.into(), dim: self.dim, hamiltonian: self.hamiltonian.clone() }
    }
}

/// Dense operator on an ordered list of labeled factors.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledOperator {
    labels: Vec<SpaceLabel>,
    matrix: CMat,
}

impl LabeledOperator {
    pub fn new(labels: Vec<SpaceLabel>, matrix: CMat) -> Result<Self> {
        check_distinct(&labels)?;
        let d = product(&labels);
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, labels require {d}x{d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(LabeledOperator { labels, matrix })
    }

    /// Scalar operator with no factors.
    pub fn scalar(value: C64) -> Self {
        LabeledOperator { labels: vec![], matrix: CMat::from_element(1, 1, value) }
    }

    pub fn identity(labels: Vec<SpaceLabel>) -> Result<Self> {
        let d = product(&labels);
        LabeledOperator::new(labels, CMat::identity(d, d))
    }

    pub fn zeros(labels: Vec<SpaceLabel>) -> Result<Self> {
        let d = product(&labels);
        LabeledOperator::new(labels, CMat::zeros(d, d))
    }

    /// Rank-one projector-like operator `|v⟩⟨v|`.
    pub fn from_ket(labels: Vec<SpaceLabel>, ket: &CVec) -> Result<Self> {
        let m = ket * ket.adjoint();
        LabeledOperator::new(labels, m)
    }

    /// Operator from the Hamiltonian of a single label.
    pub fn hamiltonian_of(label: &SpaceLabel) -> Self {
        LabeledOperator { labels: vec![label.clone()], matrix: label.hamiltonian.clone() }
    }

    pub fn labels(&self) -> &[SpaceLabel] {
        &self.labels
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn ids(&self) -> Vec<&str> {
        self.labels.iter().map(|l| l.id.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.id == id)
    }

    pub fn label(&self, id: &str) -> Option<&SpaceLabel> {
        self.labels.iter().find(|l| l.id == id)
    }

    pub fn has(&self, id: &str) -> bool {
        self.position(id).is_some()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        LabeledOperator { labels: self.labels.clone(), matrix: &self.matrix * s }
    }

    pub fn adjoint(&self) -> Self {
        LabeledOperator { labels: self.labels.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn transpose(&self) -> Self {
        LabeledOperator { labels: self.labels.clone(), matrix: self.matrix.transpose() }
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.matrix)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= HERMITIAN_TOL
    }

    pub fn tensor(&self, other: &LabeledOperator) -> Result<Self> {
        tensor_product(self, other)
    }

    pub fn partial_trace(&self, ids: &[&str]) -> Result<Self> {
        partial_trace(self, ids)
    }

    pub fn partial_transpose(&self, ids: &[&str]) -> Result<Self> {
        partial_transpose(self, ids)
    }

    pub fn permute(&self, order: &[&str]) -> Result<Self> {
        permute_spaces(self, order)
    }

    /// Trace out every factor not listed in `keep`, then order as `keep`.
    pub fn reduce_to(&self, keep: &[&str]) -> Result<Self> {
        for id in keep {
            if !self.has(id) {
                return Err(Error::UnknownLabel((*id).to_string()));
            }
        }
        let drop: Vec<&str> = self.ids().into_iter().filter(|id| !keep.contains(id)).collect();
        self.partial_trace(&drop)?.permute(keep)
    }

    /// Rename factor ids; `map` pairs are (old, new).
    pub fn relabel(&self, map: &[(&str, &str)]) -> Result<Self> {
        for (old, _) in map {
            if !self.has(old) {
                return Err(Error::UnknownLabel((*old).to_string()));
            }
        }
        let labels: Vec<SpaceLabel> = self
            .labels
            .iter()
            .map(|l| match map.iter().find(|(o, _)| *o == l.id) {
                Some((_, n)) => l.renamed(*n),
                None => l.clone(),
            })
            .collect();
        LabeledOperator::new(labels, self.matrix.clone())
    }

    /// Tensor with identities on the labels of `target` missing here, then order as `target`.
    pub fn embed(&self, target: &[SpaceLabel]) -> Result<Self> {
        for l in &self.labels {
            match target.iter().find(|t| t.id == l.id) {
                Some(t) if t.dim == l.dim => {}
                Some(_) => return Err(Error::DimensionMismatch(format!("label `{}`", l.id))),
                None => return Err(Error::UnknownLabel(l.id.clone())),
            }
        }
        let missing: Vec<SpaceLabel> = target.iter().filter(|t| !self.has(&t.id)).cloned().collect();
        let full =
            if missing.is_empty() { self.clone() } else { tensor_product(self, &LabeledOperator::identity(missing)?)? };
        let order: Vec<&str> = target.iter().map(|l| l.id.as_str()).collect();
        full.permute(&order)
    }

    /// Reorder `other` to the label order of `self`; label sets must coincide.
    pub fn align(&self, other: &LabeledOperator) -> Result<LabeledOperator> {
        if self.labels.len() != other.labels.len() {
            return Err(Error::DimensionMismatch("label sets differ".into()));
        }
        for l in &self.labels {
            match other.label(&l.id) {
                Some(o) if o.dim == l.dim => {}
                Some(_) => return Err(Error::DimensionMismatch(format!("label `{}`", l.id))),
                None => return Err(Error::UnknownLabel(l.id.clone())),
            }
        }
        other.permute(&self.ids())
    }

    pub fn add(&self, other: &LabeledOperator) -> Result<Self> {
        let o = self.align(other)?;
        Ok(LabeledOperator { labels: self.labels.clone(), matrix: &self.matrix + o.matrix })
    }

    pub fn sub(&self, other: &LabeledOperator) -> Result<Self> {
        let o = self.align(other)?;
        Ok(LabeledOperator { labels: self.labels.clone(), matrix: &self.matrix - o.matrix })
    }

    /// Matrix product `self · other` on a common label set.
    pub fn mul(&self, other: &LabeledOperator) -> Result<Self> {
        let o = self.align(other)?;
        Ok(LabeledOperator { labels: self.labels.clone(), matrix: &self.matrix * o.matrix })
    }

    /// Frobenius distance after alignment.
    pub fn distance(&self, other: &LabeledOperator) -> Result<f64> {
        Ok(self.sub(other)?.matrix.norm())
    }

    pub fn eig_hermitian(&self) -> Result<(Vec<f64>, CMat)> {
        eig_hermitian(self)
    }

    pub fn lambda_max(&self) -> Result<f64> {
        lambda_max(&self.matrix)
    }

    pub fn lambda_min(&self) -> Result<f64> {
        lambda_min(&self.matrix)
    }

    /// Sum of the Hamiltonians of the listed factors, embedded on all factors.
    pub fn hamiltonian_sum(labels: &[SpaceLabel], ids: &[&str]) -> Result<Self> {
        let mut acc = LabeledOperator::zeros(labels.to_vec())?;
        for id in ids {
            let l = labels.iter().find(|l| l.id == *id).ok_or_else(|| Error::UnknownLabel((*id).into()))?;
            let h = LabeledOperator::hamiltonian_of(l).embed(labels)?;
            acc.matrix += h.matrix;
        }
        Ok(acc)
    }

    pub fn to_json(&self) -> OperatorJson {
        OperatorJson {
            labels: self
                .labels
                .iter()
                .map(|l| LabelJson { id: l.id.clone(), dim: l.dim, hamiltonian: Some(matrix_to_json(&l.hamiltonian)) })
                .collect(),
            matrix: matrix_to_json(&self.matrix),
        }
    }

    pub fn from_json(j: &OperatorJson) -> Result<Self> {
        let labels = j.labels.iter().map(LabelJson::to_label).collect::<Result<Vec<_>>>()?;
        let m = matrix_from_json(&j.matrix)?;
        LabeledOperator::new(labels, m)
    }
}

/// Serialized label: `{"id":"H1","dim":2,"hamiltonian":[[[re,im],…]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LabelJson {
    pub id: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<Vec<Vec<[f64; 2]>>>,
}

impl LabelJson {
    pub fn to_label(&self) -> Result<SpaceLabel> {
        if self.dim == 0 {
            return Err(Error::Parse(format!("label `{}` has dimension 0", self.id)));
        }
        match &self.hamiltonian {
            None => Ok(SpaceLabel::new(self.id.clone(), self.dim)),
            Some(h) => {
                let h = matrix_from_json(h)?;
                if h.nrows() != self.dim {
                    return Err(Error::Parse(format!("hamiltonian of `{}` has wrong size", self.id)));
                }
                SpaceLabel::with_hamiltonian(self.id.clone(), h)
            }
        }
    }
}

/// Serialized operator, row-major with complex entries as `[re, im]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorJson {
    pub labels: Vec<LabelJson>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

pub fn matrix_to_json(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn matrix_from_json(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse("matrix is not square".into()));
    }
    Ok(CMat::from_fn(n, n, |i, j| c(rows[i][j][0], rows[i][j][1])))
}

fn product(labels: &[SpaceLabel]) -> usize {
    labels.iter().map(|l| l.dim).product()
}

fn check_distinct(labels: &[SpaceLabel]) -> Result<()> {
    for (i, a) in labels.iter().enumerate() {
        if labels[..i].iter().any(|b| b.id == a.id) {
            return Err(Error::DuplicateLabel(a.id.clone()));
        }
    }
    Ok(())
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// For factors reordered as `perm` (new position → old position), the old flat
/// index of every new flat index.
pub fn factor_permutation(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    subset_offsets(dims, perm)
}

/// Flat offsets of the multi-indices over `positions`, enumerated row-major.
fn subset_offsets(dims: &[usize], positions: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut offs = vec![0usize];
    for &p in positions {
        let mut next = Vec::with_capacity(offs.len() * dims[p]);
        for &o in &offs {
            for k in 0..dims[p] {
                next.push(o + k * st[p]);
            }
        }
        offs = next;
    }
    offs
}

fn positions_of(a: &LabeledOperator, ids: &[&str]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let p = a.position(id).ok_or_else(|| Error::UnknownLabel((*id).to_string()))?;
        if out.contains(&p) {
            return Err(Error::DuplicateLabel((*id).to_string()));
        }
        out.push(p);
    }
    Ok(out)
}

pub fn hermitian_deviation(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Kronecker product; labels are concatenated.
pub fn tensor_product(a: &LabeledOperator, b: &LabeledOperator) -> Result<LabeledOperator> {
    let mut labels = a.labels.clone();
    labels.extend(b.labels.iter().cloned());
    check_distinct(&labels)?;
    Ok(LabeledOperator { labels, matrix: a.matrix.kronecker(&b.matrix) })
}

pub fn partial_trace(a: &LabeledOperator, ids: &[&str]) -> Result<LabeledOperator> {
    let traced = positions_of(a, ids)?;
    if traced.is_empty() {
        return Ok(a.clone());
    }
    let dims = a.dims();
    let kept: Vec<usize> = (0..dims.len()).filter(|p| !traced.contains(p)).collect();
    let koff = subset_offsets(&dims, &kept);
    let toff = subset_offsets(&dims, &traced);
    let n = koff.len();
    let m = &a.matrix;
    let out = CMat::from_fn(n, n, |i, j| {
        let mut s = C64::new(0.0, 0.0);
        for &t in &toff {
            s += m[(koff[i] + t, koff[j] + t)];
        }
        s
    });
    let labels = kept.iter().map(|&p| a.labels[p].clone()).collect();
    Ok(LabeledOperator { labels, matrix: out })
}

/// Transpose on the listed factors only.
pub fn partial_transpose(a: &LabeledOperator, ids: &[&str]) -> Result<LabeledOperator> {
    let tp = positions_of(a, ids)?;
    if tp.is_empty() {
        return Ok(a.clone());
    }
    let dims = a.dims();
    let kept: Vec<usize> = (0..dims.len()).filter(|p| !tp.contains(p)).collect();
    let koff = subset_offsets(&dims, &kept);
    let toff = subset_offsets(&dims, &tp);
    let d = a.dim();
    let mut out = CMat::zeros(d, d);
    let m = &a.matrix;
    for &ak in &koff {
        for &at in &toff {
            for &bk in &koff {
                for &bt in &toff {
                    out[(ak + at, bk + bt)] = m[(ak + bt, bk + at)];
                }
            }
        }
    }
    Ok(LabeledOperator { labels: a.labels.clone(), matrix: out })
}

/// Reorder factors to `order`, which must be a permutation of the labels.
pub fn permute_spaces(a: &LabeledOperator, order: &[&str]) -> Result<LabeledOperator> {
    if order.len() != a.labels.len() {
        return Err(Error::NotAPermutation);
    }
    let perm = positions_of(a, order).map_err(|_| Error::NotAPermutation)?;
    if perm.iter().enumerate().all(|(i, &p)| i == p) {
        return Ok(a.clone());
    }
    let map = subset_offsets(&a.dims(), &perm);
    let d = a.dim();
    let m = &a.matrix;
    let out = CMat::from_fn(d, d, |i, j| m[(map[i], map[j])]);
    let labels = perm.iter().map(|&p| a.labels[p].clone()).collect();
    Ok(LabeledOperator { labels, matrix: out })
}

/// Eigen-decomposition of a Hermitian operator with ascending eigenvalues.
pub fn eig_hermitian(a: &LabeledOperator) -> Result<(Vec<f64>, CMat)> {
    eig_hermitian_matrix(&a.matrix)
}

/// Convergence thresholds tried in turn; exact zeros can stall the QR sweep
/// at machine precision.
const EIG_EPS: [f64; 4] = [f64::EPSILON, 1e-15, 1e-14, 1e-13];

pub fn eig_hermitian_matrix(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let dev = hermitian_deviation(m);
    if dev > HERMITIAN_TOL * m.norm().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok((vec![], CMat::zeros(0, 0)));
    }
    let herm = (m + m.adjoint()) * cr(0.5);
    let finite = |e: &SymmetricEigen<C64, nalgebra::Dyn>| {
        e.eigenvalues.iter().chain(e.eigenvectors.iter().map(|z| &z.re)).all(|x| x.is_finite())
    };
    let Some(eig) = EIG_EPS.iter().filter_map(|&eps| SymmetricEigen::try_new(herm.clone(), eps, 0)).find(|e| finite(e))
    else {
        return eig_via_rotation(&herm).or_else(|_| eig_via_real_embedding(&herm));
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, idx[k])]);
    Ok((vals, vecs))
}

/// Eigenpairs of `QMQ†` for a fixed generic unitary `Q`, rotated back.
fn eig_via_rotation(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = m.nrows();
    let g = CMat::from_fn(n, n, |i, j| {
        let t = (i * n + j + 1) as f64;
        C64::new((t * 0.618_033_988_75).fract() - 0.5, (t * 0.414_213_562_37).fract() - 0.5)
    });
    let q = g.qr().q();
    let r = &q * m * q.adjoint();
    let r = (&r + r.adjoint()) * cr(0.5);
    let eig = EIG_EPS
        .iter()
        .filter_map(|&eps| SymmetricEigen::try_new(r.clone(), eps, 0))
        .find(|e| e.eigenvalues.iter().chain(e.eigenvectors.iter().map(|z| &z.re)).all(|x| x.is_finite()))
        .ok_or_else(|| Error::InvalidArgument("eigendecomposition did not converge".into()))?;
    let vecs = q.adjoint() * &eig.eigenvectors;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    Ok((idx.iter().map(|&i| eig.eigenvalues[i]).collect(), CMat::from_fn(n, n, |r, k| vecs[(r, idx[k])])))
}

/// Eigenpairs from `[[A, −B], [B, A]]` for `M = A + iB`; each eigenvalue
/// appears twice there, and `(u; v) ↦ u + iv` spans the complex eigenspace.
fn eig_via_real_embedding(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = m.nrows();
    let r = nalgebra::DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = m[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let eig = EIG_EPS
        .iter()
        .filter_map(|&eps| SymmetricEigen::try_new(r.clone(), eps, 0))
        .find(|e| e.eigenvalues.iter().chain(e.eigenvectors.iter()).all(|x| x.is_finite()))
        .ok_or_else(|| Error::InvalidArgument("eigendecomposition did not converge".into()))?;
    let mut cands: Vec<(f64, CVec)> = (0..2 * n)
        .map(|k| {
            (
                eig.eigenvalues[k],
                CVec::from_fn(n, |i, _| C64::new(eig.eigenvectors[(i, k)], eig.eigenvectors[(i + n, k)])),
            )
        })
        .collect();
    let mut vals = Vec::with_capacity(n);
    let mut vecs: Vec<CVec> = Vec::with_capacity(n);
    while vecs.len() < n && !cands.is_empty() {
        let (k, norm) = cands
            .iter()
            .enumerate()
            .map(|(k, c)| (k, c.1.norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if norm < 1e-3 {
            break;
        }
        let (val, z) = cands.swap_remove(k);
        let q = z / cr(norm);
        for c in cands.iter_mut() {
            let d = q.dotc(&c.1);
            c.1 -= &q * d;
        }
        vals.push(val);
        vecs.push(q);
    }
    if vecs.len() != n {
        return Err(Error::InvalidArgument("eigendecomposition did not converge".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let cols: Vec<CVec> = idx.iter().map(|&i| vecs[i].clone()).collect();
    Ok((idx.iter().map(|&i| vals[i]).collect(), CMat::from_columns(&cols)))
}

/// Index sets of the connected components of the nonzero pattern of `m`.
fn sparsity_blocks(m: &CMat) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for j in 0..n {
        for i in 0..j {
            if m[(i, j)] != C64::new(0.0, 0.0) || m[(j, i)] != C64::new(0.0, 0.0) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

/// `(λ_min, λ_max)`, diagonalizing each decoupled block separately.
pub fn extreme_eigenvalues(m: &CMat) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for b in sparsity_blocks(m) {
        let sub = CMat::from_fn(b.len(), b.len(), |i, j| m[(b[i], b[j])]);
        let vals = if b.len() == 1 { vec![sub[(0, 0)].re] } else { eig_hermitian_matrix(&sub)?.0 };
        lo = lo.min(vals[0]);
        hi = hi.max(*vals.last().expect("nonempty"));
    }
    Ok((lo, hi))
}

pub fn lambda_max(m: &CMat) -> Result<f64> {
    Ok(extreme_eigenvalues(m)?.1)
}

pub fn lambda_min(m: &CMat) -> Result<f64> {
    Ok(extreme_eigenvalues(m)?.0)
}

/// Choi operator `Σ_k |K_k⟩⟩⟨⟨K_k|` on `(in, out)` with `|K⟩⟩ = Σ_i |i⟩⊗K|i⟩`.
///
/// Set `sub_normalized` to accept trace-nonincreasing Kraus sets.
pub fn choi_of_kraus(
    kraus: &[CMat],
    in_label: &SpaceLabel,
    out_label: &SpaceLabel,
    sub_normalized: bool,
) -> Result<LabeledOperator> {
    let (din, dout) = (in_label.dim, out_label.dim);
    if kraus.is_empty() {
        return Err(Error::InconsistentKraus("empty Kraus set".into()));
    }
    let mut completeness = CMat::zeros(din, din);
    for k in kraus {
        if k.nrows() != dout || k.ncols() != din {
            return Err(Error::InconsistentKraus(format!("expected {dout}x{din}, got {}x{}", k.nrows(), k.ncols())));
        }
        completeness += k.adjoint() * k;
    }
    let dev = (&completeness - CMat::identity(din, din)).camax();
    if !sub_normalized && dev > 1e-10 {
        return Err(Error::InconsistentKraus(format!("not trace preserving ({dev:.3e})")));
    }
    let d = din * dout;
    let mut m = CMat::zeros(d, d);
    for k in kraus {
        let v = CVec::from_fn(d, |idx, _| k[(idx % dout, idx / dout)]);
        m += &v * v.adjoint();
    }
    LabeledOperator::new(vec![in_label.clone(), out_label.clone()], m)
}

/// Choi operator of a unitary (or isometry) `U` from `in` to `out`.
pub fn choi_of_unitary(u: &CMat, in_label: &SpaceLabel, out_label: &SpaceLabel) -> Result<LabeledOperator> {
    choi_of_kraus(std::slice::from_ref(u), in_label, out_label, false)
}

/// Unnormalized maximally entangled projector `|Ω⟩⟨Ω|` on `(a, b)`.
pub fn omega(a: &SpaceLabel, b: &SpaceLabel) -> Result<LabeledOperator> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch("omega requires equal dims".into()));
    }
    choi_of_unitary(&CMat::identity(a.dim, a.dim), a, b)
}

/// Unitary discrete Fourier matrix `F_{kj} = ω^{jk}/√d`.
pub fn fourier(d: usize) -> CMat {
    let s = 1.0 / (d as f64).sqrt();
    CMat::from_fn(d, d, |k, j| {
        let ang = 2.0 * std::f64::consts::PI * ((j * k) % d) as f64 / d as f64;
        C64::from_polar(s, ang)
    })
}

pub fn hadamard() -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_row_slice(2, 2, &[cr(s), cr(s), cr(s), cr(-s)])
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)])
}

/// `exp(−i a G/2)` for a Pauli generator `G` (involutory).
pub fn pauli_rotation(g: &CMat, a: f64) -> CMat {
    let id = CMat::identity(g.nrows(), g.ncols());
    id * cr((a / 2.0).cos()) - g * c(0.0, (a / 2.0).sin())
}

pub fn basis_ket(d: usize, k: usize) -> CVec {
    let mut v = CVec::zeros(d);
    v[k] = cr(1.0);
    v
}

pub fn projector(d: usize, k: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    m[(k, k)] = cr(1.0);
    m
}

/// Orthonormal Hermitian basis of `d×d` matrices under `Re Tr[A B]`.
///
/// Order: diagonal units, then for each pair `a<b` the symmetric and antisymmetric units.
pub fn hermitian_basis(d: usize) -> Vec<CMat> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        out.push(projector(d, a));
    }
    for a in 0..d {
        for b in a + 1..d {
            let mut m = CMat::zeros(d, d);
            m[(a, b)] = cr(s);
            m[(b, a)] = cr(s);
            out.push(m);
            let mut m = CMat::zeros(d, d);
            m[(a, b)] = c(0.0, s);
            m[(b, a)] = c(0.0, -s);
            out.push(m);
        }
    }
    out
}

/// Linearly independent spanning set of traceless Hermitian `d×d` matrices.
pub fn traceless_basis(d: usize) -> Vec<CMat> {
    let mut out: Vec<CMat> = hermitian_basis(d).into_iter().skip(d).collect();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for k in 1..d {
        let mut m = CMat::zeros(d, d);
        m[(0, 0)] = cr(s);
        m[(k, k)] = cr(-s);
        out.push(m);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, rng};

    #[test]
    fn real_embedding_matches_direct() {
        let mut r = rng(3);
        for n in [1, 2, 5, 9] {
            let m = random_hermitian(n, &mut r);
            let (a, _) = eig_hermitian_matrix(&m).unwrap();
            let (b, v) = eig_via_real_embedding(&m).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10);
            }
            let recon = &v * CMat::from_diagonal(&CVec::from_iterator(n, b.iter().map(|&x| cr(x)))) * v.adjoint();
            assert!((recon - &m).iter().all(|z| z.norm() < 1e-10));
        }
    }

    #[test]
    fn structured_rank_one_is_finite() {
        let mut v = CVec::zeros(64);
        for j in 0..2 {
            for p in [0, 3] {
                for q in [0, 3] {
                    v[((j * 4 + p) * 4 + q) * 2 + j] = cr(1.0);
                }
            }
        }
        let (vals, _) = eig_hermitian_matrix(&(&v * v.adjoint())).unwrap();
        assert!(vals.iter().all(|x| x.is_finite()));
        assert!((vals[63] - 8.0).abs() < 1e-12 && vals[0].abs() < 1e-12);
    }
}
