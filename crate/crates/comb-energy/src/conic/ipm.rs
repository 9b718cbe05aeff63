//! Infeasible primal-dual interior-point method for real block SDPs.
//!
//! Primal: min ⟨C,X⟩ s.t. ⟨A_i,X⟩ = b_i, X ⪰ 0 (block diagonal).
//! Dual:   max bᵀy   s.t. Σ y_i A_i + Z = C, Z ⪰ 0.
//! Search direction: HKM with a Mehrotra predictor-corrector.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

/// Sparse symmetric coefficient restricted to one block; both triangles stored.
#[derive(Clone, Debug, Default)]
pub(crate) struct BlockEntries {
    pub block: usize,
    pub entries: Vec<(u32, u32, f64)>,
    /// Distinct row indices touched.
    pub rows: Vec<u32>,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct RealRow {
    pub parts: Vec<BlockEntries>,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct RealSdp {
    pub blocks: Vec<usize>,
    pub c: Vec<DMatrix<f64>>,
    pub rows: Vec<RealRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    Stalled,
}

#[derive(Clone, Debug)]
pub(crate) struct IpmSolution {
    pub status: IpmStatus,
    pub x: Vec<DMatrix<f64>>,
    pub y: Vec<f64>,
    pub dobj: f64,
    pub pinf: f64,
    pub dinf: f64,
    pub relgap: f64,
    pub iterations: usize,
}

pub(crate) struct IpmOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl BlockEntries {
    pub fn new(block: usize, mut entries: Vec<(u32, u32, f64)>) -> Self {
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(u32, u32, f64)> = Vec::with_capacity(entries.len());
        for e in entries {
            match merged.last_mut() {
                Some(last) if last.0 == e.0 && last.1 == e.1 => last.2 += e.2,
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.2 != 0.0);
        let mut rows: Vec<u32> = merged.iter().map(|e| e.0).collect();
        rows.dedup();
        BlockEntries { block, entries: merged, rows }
    }

    fn inner(&self, w: &DMatrix<f64>) -> f64 {
        self.entries.iter().map(|&(r, c, v)| v * w[(r as usize, c as usize)]).sum()
    }

    fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.2 * e.2).sum()
    }
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

impl RealSdp {
    fn a_op(&self, w: &[DMatrix<f64>]) -> Vec<f64> {
        self.rows.iter().map(|r| r.parts.iter().map(|p| p.inner(&w[p.block])).sum()).collect()
    }

    fn a_adj(&self, y: &[f64]) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.blocks.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (row, &yi) in self.rows.iter().zip(y) {
            if yi == 0.0 {
                continue;
            }
            for p in &row.parts {
                let o = &mut out[p.block];
                for &(r, c, v) in &p.entries {
                    o[(r as usize, c as usize)] += yi * v;
                }
            }
        }
        out
    }

    /// Rows touching each block, as (row index, part index).
    fn block_rows(&self) -> Vec<Vec<(usize, usize)>> {
        let mut br = vec![Vec::new(); self.blocks.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for (k, p) in row.parts.iter().enumerate() {
                br[p.block].push((i, k));
            }
        }
        br
    }

    /// Schur complement `M_ij = ⟨A_i, X A_j Z⁻¹⟩`, lower triangle in a row-major buffer.
    fn schur(&self, x: &[DMatrix<f64>], zinv: &[DMatrix<f64>], block_rows: &[Vec<(usize, usize)>]) -> Vec<f64> {
        let m = self.rows.len();
        let mut out = vec![0.0; m * m];
        for (b, rows) in block_rows.iter().enumerate() {
            let n = self.blocks[b];
            let xb = &x[b];
            let zb = &zinv[b];
            if n == 1 {
                let s = xb[(0, 0)] * zb[(0, 0)];
                for (jj, &(j, kj)) in rows.iter().enumerate() {
                    let aj = self.rows[j].parts[kj].entries[0].2;
                    for &(i, ki) in &rows[..=jj] {
                        let ai = self.rows[i].parts[ki].entries[0].2;
                        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
                        out[hi * m + lo] += ai * s * aj;
                    }
                }
                continue;
            }
            let xs = xb.as_slice();
            let zs = zb.as_slice();
            let mut p: Vec<f64> = Vec::new();
            let mut g = vec![0.0f64; n * n];
            for (jj, &(j, kj)) in rows.iter().enumerate() {
                let aj = &self.rows[j].parts[kj];
                let nr = aj.rows.len();
                // Rows of P = A_j Z⁻¹ on the touched rows; Z⁻¹ is symmetric so
                // row c of Z⁻¹ is its contiguous column c.
                p.clear();
                p.resize(nr * n, 0.0);
                let mut k = 0;
                for &(r, c, v) in &aj.entries {
                    while aj.rows[k] != r {
                        k += 1;
                    }
                    let c = c as usize;
                    let dst = &mut p[k * n..(k + 1) * n];
                    for (d, s) in dst.iter_mut().zip(&zs[c * n..(c + 1) * n]) {
                        *d += v * s;
                    }
                }
                // G = X[:, R] P[R, :], column-major.
                g.iter_mut().for_each(|v| *v = 0.0);
                for col in 0..n {
                    let gcol = &mut g[col * n..(col + 1) * n];
                    for (k, &r) in aj.rows.iter().enumerate() {
                        let prc = p[k * n + col];
                        if prc == 0.0 {
                            continue;
                        }
                        let r = r as usize;
                        for (gi, xi) in gcol.iter_mut().zip(&xs[r * n..(r + 1) * n]) {
                            *gi += xi * prc;
                        }
                    }
                }
                for &(i, ki) in &rows[..=jj] {
                    let v: f64 = self.rows[i].parts[ki]
                        .entries
                        .iter()
                        .map(|&(r, c, v)| v * g[r as usize + c as usize * n])
                        .sum();
                    let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
                    out[hi * m + lo] += v;
                }
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// In-place Cholesky of the lower triangle of a row-major matrix.
///
/// Pivots that collapse relative to the original diagonal are replaced by a
/// huge value, which freezes the corresponding (dependent) constraint.
fn cholesky(a: &mut [f64], n: usize, shift: f64) -> usize {
    let mut frozen = 0;
    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    for i in 0..n {
        a[i * n + i] += shift * diag[i].abs().max(1e-300);
    }
    for j in 0..n {
        let (head, tail) = a.split_at_mut(j * n);
        let _ = head;
        let rowj = &tail[..n];
        let s = rowj[j] - dot(&rowj[..j], &rowj[..j]);
        let ljj = if s <= 1e-13 * diag[j].abs() || !s.is_finite() {
            frozen += 1;
            1e64
        } else {
            s.sqrt()
        };
        tail[j] = ljj;
        let (rj, rest) = tail.split_at_mut(n);
        let rj = &rj[..j];
        for i in (j + 1)..n {
            let ri = &mut rest[(i - j - 1) * n..(i - j) * n];
            let s = ri[j] - dot(&ri[..j], rj);
            ri[j] = s / ljj;
        }
    }
    frozen
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        let s = y[i] - dot(&l[i * n..i * n + i], &y[..i]);
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

fn chol_inverse(z: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if z.nrows() == 1 {
        let v = z[(0, 0)];
        return if v > 0.0 { Some(DMatrix::from_element(1, 1, 1.0 / v)) } else { None };
    }
    let ch = Cholesky::new(z.clone())?;
    Some(sym(&ch.inverse()))
}

/// Largest α with `X + αD ⪰ 0` (∞ when D ⪰ 0).
fn max_step(x: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    if x.nrows() == 1 {
        let (xv, dv) = (x[(0, 0)], d[(0, 0)]);
        return if dv < 0.0 { -xv / dv } else { f64::INFINITY };
    }
    let ch = match Cholesky::new(x.clone()) {
        Some(c) => c,
        None => return 0.0,
    };
    let l = ch.l();
    let t = l.solve_lower_triangular(d).unwrap_or_else(|| d.clone());
    let w = l.solve_lower_triangular(&t.transpose()).unwrap_or(t);
    let eig = SymmetricEigen::new(sym(&w));
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

pub(crate) fn solve(sdp: &RealSdp, opts: &IpmOptions) -> IpmSolution {
    let m = sdp.rows.len();
    let nblk = sdp.blocks.len();
    let ntot: usize = sdp.blocks.iter().sum();
    let b: Vec<f64> = sdp.rows.iter().map(|r| r.rhs).collect();
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let norm_c = sdp.c.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();
    let block_rows = sdp.block_rows();

    let mut xi: f64 = 10f64.max((ntot as f64).sqrt());
    let mut eta: f64 = 10f64.max((ntot as f64).sqrt()).max(norm_c);
    for (row, &bi) in sdp.rows.iter().zip(&b) {
        let na = row.parts.iter().map(BlockEntries::norm_sq).sum::<f64>().sqrt();
        xi = xi.max((1.0 + bi.abs()) / (1.0 + na));
        eta = eta.max(na);
    }
    let mut x: Vec<DMatrix<f64>> = sdp.blocks.iter().map(|&n| DMatrix::identity(n, n) * xi).collect();
    let mut z: Vec<DMatrix<f64>> = sdp.blocks.iter().map(|&n| DMatrix::identity(n, n) * eta).collect();
    let mut y = vec![0.0; m];

    let mut best: Option<IpmSolution> = None;
    let mut stall = 0usize;
    let mut status = IpmStatus::Stalled;
    let mut iterations = 0usize;

    for iter in 0..opts.max_iter {
        iterations = iter;
        let ax = sdp.a_op(&x);
        let rp: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let aty = sdp.a_adj(&y);
        let rd: Vec<DMatrix<f64>> = (0..nblk).map(|k| &sdp.c[k] - &aty[k] - &z[k]).collect();
        let pobj = inner(&sdp.c, &x);
        let dobj: f64 = b.iter().zip(&y).map(|(a, b)| a * b).sum();
        let mu = inner(&x, &z) / ntot as f64;
        let pinf = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + norm_b);
        let dinf = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt() / (1.0 + norm_c);
        let relgap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let snapshot =
            |status| IpmSolution { status, x: x.clone(), y: y.clone(), dobj, pinf, dinf, relgap, iterations: iter };
        let merit = pinf.max(dinf).max(relgap);
        if best.as_ref().is_none_or(|s| merit < s.pinf.max(s.dinf).max(s.relgap)) {
            best = Some(snapshot(IpmStatus::Stalled));
        }
        if pinf <= opts.tol && dinf <= opts.tol && relgap <= opts.tol {
            return snapshot(IpmStatus::Optimal);
        }
        let ynorm = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let xnorm = x.iter().map(|v| v.amax()).fold(0.0, f64::max);
        if dinf <= opts.tol && ynorm > 1e10 && dobj > 1e8 * (1.0 + pobj.abs().min(1e8)) {
            status = IpmStatus::PrimalInfeasible;
            break;
        }
        if pinf <= opts.tol && xnorm > 1e10 && pobj < -1e8 {
            status = IpmStatus::DualInfeasible;
            break;
        }

        let zinv: Vec<DMatrix<f64>> = match z.iter().map(chol_inverse).collect::<Option<Vec<_>>>() {
            Some(v) => v,
            None => break,
        };
        let mut mat = sdp.schur(&x, &zinv, &block_rows);
        let mut lfac = mat.clone();
        let mut shift = 0.0;
        loop {
            let frozen = cholesky(&mut lfac, m, shift);
            if frozen < m || m == 0 {
                break;
            }
            shift = if shift == 0.0 { 1e-12 } else { shift * 100.0 };
            if shift > 1e-4 {
                break;
            }
            lfac.copy_from_slice(&mat);
        }
        mat.clear();

        // X Rd Z⁻¹ appears in both right-hand sides.
        let xrdz: Vec<DMatrix<f64>> = (0..nblk).map(|k| &x[k] * &rd[k] * &zinv[k]).collect();
        let direction = |rc: &[DMatrix<f64>]| {
            let t: Vec<DMatrix<f64>> = (0..nblk).map(|k| &rc[k] - &xrdz[k]).collect();
            let at = sdp.a_op(&t);
            let rhs: Vec<f64> = rp.iter().zip(&at).map(|(r, a)| r - a).collect();
            let dy = cholesky_solve(&lfac, m, &rhs);
            let atdy = sdp.a_adj(&dy);
            let dz: Vec<DMatrix<f64>> = (0..nblk).map(|k| &rd[k] - &atdy[k]).collect();
            let dx: Vec<DMatrix<f64>> = (0..nblk).map(|k| sym(&(&rc[k] - &x[k] * &dz[k] * &zinv[k]))).collect();
            (dx, dy, dz)
        };
        let steps = |dx: &[DMatrix<f64>], dz: &[DMatrix<f64>]| {
            let ap = (0..nblk).map(|k| max_step(&x[k], &dx[k])).fold(f64::INFINITY, f64::min);
            let ad = (0..nblk).map(|k| max_step(&z[k], &dz[k])).fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        // Predictor.
        let rc0: Vec<DMatrix<f64>> = x.iter().map(|xk| -xk).collect();
        let (dx_p, _, dz_p) = direction(&rc0);
        let (ap, ad) = steps(&dx_p, &dz_p);
        let (ap1, ad1) = (ap.min(1.0), ad.min(1.0));
        let xa: Vec<DMatrix<f64>> = (0..nblk).map(|k| &x[k] + &dx_p[k] * ap1).collect();
        let za: Vec<DMatrix<f64>> = (0..nblk).map(|k| &z[k] + &dz_p[k] * ad1).collect();
        let mu_aff = inner(&xa, &za) / ntot as f64;
        let expon = (3.0 * ap1.min(ad1).powi(2)).max(1.0);
        let sigma = (mu_aff / mu).max(0.0).powf(expon).min(1.0);

        // Corrector.
        let rc: Vec<DMatrix<f64>> =
            (0..nblk).map(|k| &zinv[k] * (sigma * mu) - &x[k] - &dx_p[k] * &dz_p[k] * &zinv[k]).collect();
        let (dx, dy, dz) = direction(&rc);
        let (ap, ad) = steps(&dx, &dz);
        let gamma = 0.9 + 0.09 * ap1.min(ad1);
        let alpha_p = (gamma * ap).min(1.0);
        let alpha_d = (gamma * ad).min(1.0);
        if alpha_p < 1e-10 && alpha_d < 1e-10 {
            stall += 1;
            if stall > 3 {
                break;
            }
        }
        for k in 0..nblk {
            x[k] += &dx[k] * alpha_p;
            z[k] += &dz[k] * alpha_d;
        }
        for (yi, di) in y.iter_mut().zip(&dy) {
            *yi += alpha_d * di;
        }
    }
    let mut out = best.unwrap_or(IpmSolution {
        status,
        x,
        y,
        dobj: f64::NAN,
        pinf: f64::INFINITY,
        dinf: f64::INFINITY,
        relgap: f64::INFINITY,
        iterations,
    });
    out.status = status;
    out.iterations = out.iterations.max(iterations);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let n = 5;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = 1.0 / (1.0 + (i + j) as f64) + if i == j { 1.0 } else { 0.0 };
            }
        }
        let orig = a.clone();
        let mut l = a.clone();
        assert_eq!(cholesky(&mut l, n, 0.0), 0);
        let b: Vec<f64> = (0..n).map(|i| i as f64 + 1.0).collect();
        let x = cholesky_solve(&l, n, &b);
        for i in 0..n {
            let s: f64 = (0..n).map(|j| orig[i * n + j] * x[j]).sum();
            assert!((s - b[i]).abs() < 1e-12);
        }
        a.clear();
    }

    #[test]
    fn max_step_matches_scalar_case() {
        let x = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0]));
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-0.5, 1.0]));
        assert!((max_step(&x, &d) - 2.0).abs() < 1e-12);
    }
}
