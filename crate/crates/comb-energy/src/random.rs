//! Seeded random matrices for tests and sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::tensor::{c, cr, CMat, CVec};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    })
}

pub fn random_hermitian<R: Rng>(d: usize, rng: &mut R) -> CMat {
    let g = ginibre(d, d, rng);
    (&g + g.adjoint()) * cr(0.5)
}

/// Haar-distributed isometry with `rows ≥ cols`.
pub fn random_isometry<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let g = ginibre(rows, cols, rng);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut q = q.columns(0, cols).into_owned();
    for j in 0..cols {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { cr(1.0) };
        let mut col = q.column_mut(j);
        col *= ph;
    }
    q
}

pub fn random_unitary<R: Rng>(d: usize, rng: &mut R) -> CMat {
    random_isometry(d, d, rng)
}

pub fn random_ket<R: Rng>(d: usize, rng: &mut R) -> CVec {
    let g = ginibre(d, 1, rng);
    let n = g.norm();
    CVec::from_iterator(d, g.iter().map(|z| z / n))
}

/// Random density matrix of rank at most `rank`.
pub fn random_density<R: Rng>(d: usize, rank: usize, rng: &mut R) -> CMat {
    let g = ginibre(d, rank.max(1), rng);
    let m = &g * g.adjoint();
    let t = m.trace();
    m / t
}

/// Kraus operators of a random channel `d_in → d_out` with `rank` operators.
pub fn random_kraus<R: Rng>(d_in: usize, d_out: usize, rank: usize, rng: &mut R) -> Vec<CMat> {
    let v = random_isometry(d_out * rank, d_in, rng);
    (0..rank).map(|k| v.rows(k * d_out, d_out).into_owned()).collect()
}
