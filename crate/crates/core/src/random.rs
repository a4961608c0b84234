//! Random matrices and states for property checks and demos.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::matcore::{c, norm, ComplexMatrix, C64};

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Complex Ginibre matrix with i.i.d. standard normal entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    ginibre(n, n, rng).hermitian_part()
}

/// Haar-random unitary via Gram-Schmidt on Ginibre columns.
pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(n, n, rng);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        // two passes keep the columns orthonormal to machine precision
        for _ in 0..2 {
            for u in &cols {
                let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let nv = norm(&v);
        v.iter_mut().for_each(|z| *z /= nv);
        cols.push(v);
    }
    ComplexMatrix::from_columns(&cols)
}

/// Normalized random state vector.
pub fn state_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n).map(|_| gaussian(rng)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|z| *z /= nv);
    v
}

/// Full-rank random density matrix `G G^dagger / tr(G G^dagger)`.
pub fn density_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    density_matrix_with_rank(n, n, rng)
}

pub fn density_matrix_with_rank<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(n, rank, rng);
    let w = g.matmul(&g.dagger());
    let tr = w.trace().re;
    w.scale_re(1.0 / tr).hermitian_part()
}

/// Real symmetric density matrix (zero imaginary part).
pub fn real_density_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| c(rng.sample(StandardNormal), 0.0));
    let w = g.matmul(&g.transpose());
    let tr = w.trace().re;
    w.scale_re(1.0 / tr)
}
