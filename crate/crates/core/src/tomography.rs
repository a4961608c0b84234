//! Simulation of the (N+1)-basis measurement series and linear-inversion
//! reconstruction of the density matrix.

use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ladder::{tomography_family, ObservableFamily, SPECTRUM_GAP_TOL};
use crate::matcore::{c, eig_hermitian, re, ComplexMatrix, C64};
use crate::measurement::{born_probabilities, sample_from_probabilities, Analyzer};
use crate::states::{DensityMatrix, Dims};

/// Tolerance on each series vector summing to one.
pub const SERIES_SUM_TOL: f64 = 1e-9;
/// Residual threshold for series marked exact.
pub const EXACT_RESIDUAL_TOL: f64 = 1e-8;
/// Singular values below this fraction of the largest count as zero. Squared
/// singular values come from `A^T A`, which resolves them only down to about
/// `1e-8` of the largest.
pub const RANK_TOL: f64 = 1e-6;

/// Probability vectors, one per family member, in ascending-eigenvalue order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographySeries {
    pub n: usize,
    pub exact: bool,
    pub shots: Option<u64>,
    pub series: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<Vec<u64>>>,
}

impl TomographySeries {
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSeries(msg));
        if self.n < 2 {
            return Err(Error::DimTooSmall(self.n));
        }
        if self.series.len() != self.n + 1 {
            return bad(format!("expected {} vectors, found {}", self.n + 1, self.series.len()));
        }
        for (m, v) in self.series.iter().enumerate() {
            if v.len() != self.n {
                return Err(Error::DimMismatch {
                    expected: self.n,
                    found: v.len(),
                });
            }
            if v.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return bad(format!("vector {m} has a negative or non-finite entry"));
            }
            let sum: f64 = v.iter().sum();
            if (sum - 1.0).abs() > SERIES_SUM_TOL {
                return bad(format!("vector {m} sums to {sum}"));
            }
        }
        if !self.exact && self.shots.is_none() {
            return bad("sampled series without a shot count".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesMode {
    Exact,
    Sampled { shots: u64, seed: u64 },
}

/// Multiplies `v` by the phase that makes its largest-magnitude component
/// positive real. Ties go to the lowest index.
fn align_phase(v: &mut [C64]) {
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() + 1e-12 {
            best = i;
        }
    }
    let pivot = v[best];
    if pivot.norm() == 0.0 {
        return;
    }
    let phase = pivot.conj() / pivot.norm();
    v.iter_mut().for_each(|z| *z *= phase);
}

/// Eigenbasis of each family member, eigenvalues ascending, as unitary columns.
pub fn measurement_bases(family: &ObservableFamily) -> Result<Vec<ComplexMatrix>> {
    family
        .members
        .iter()
        .enumerate()
        .map(|(m, member)| {
            let eig = eig_hermitian(member)?;
            let gap = eig
                .eigenvalues
                .windows(2)
                .map(|w| w[0] - w[1])
                .fold(f64::INFINITY, f64::min);
            if gap < SPECTRUM_GAP_TOL {
                return Err(Error::IllConditioned(format!(
                    "family member {m} has an eigenvalue gap of {gap:.3e}"
                )));
            }
            let cols: Vec<Vec<C64>> = (0..eig.dim())
                .rev()
                .map(|k| {
                    let mut v = eig.vector(k);
                    align_phase(&mut v);
                    v
                })
                .collect();
            Ok(ComplexMatrix::from_columns(&cols))
        })
        .collect()
}

/// Exact or sampled probabilities of `rho` in every family eigenbasis.
/// Member `m` samples from stream `m` of the seed.
pub fn simulate_series(rho: &DensityMatrix, mode: SeriesMode) -> Result<TomographySeries> {
    let report = rho.validate();
    if !report.is_valid() {
        return Err(Error::InvalidState(Box::new(report)));
    }
    let n = rho.dim();
    let bases = measurement_bases(&tomography_family(n)?)?;
    let exact: Vec<Vec<f64>> = bases
        .iter()
        .map(|b| born_probabilities(rho, &Analyzer::from_basis(b)?))
        .collect::<Result<_>>()?;
    match mode {
        SeriesMode::Exact => Ok(TomographySeries {
            n,
            exact: true,
            shots: None,
            series: exact,
            counts: None,
        }),
        SeriesMode::Sampled { shots, seed } => {
            let counts: Vec<Vec<u64>> = exact
                .iter()
                .enumerate()
                .map(|(m, p)| sample_from_probabilities(p, shots, seed, m as u64))
                .collect::<Result<_>>()?;
            let series = counts
                .iter()
                .map(|row| row.iter().map(|&k| k as f64 / shots as f64).collect())
                .collect();
            Ok(TomographySeries {
                n,
                exact: false,
                shots: Some(shots),
                series,
                counts: Some(counts),
            })
        }
    }
}

/// Orthogonal basis of traceless Hermitian `N x N` matrices with
/// `tr(G_a G_b) = 2 delta_ab`: diagonal, symmetric and antisymmetric
/// generalized Gell-Mann matrices.
pub fn traceless_basis(n: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(n * n - 1);
    for l in 1..n {
        let scale = (2.0 / (l * (l + 1)) as f64).sqrt();
        let diag: Vec<f64> = (0..n)
            .map(|i| match i.cmp(&l) {
                std::cmp::Ordering::Less => scale,
                std::cmp::Ordering::Equal => -(l as f64) * scale,
                std::cmp::Ordering::Greater => 0.0,
            })
            .collect();
        out.push(ComplexMatrix::from_diag(&diag));
    }
    for j in 0..n {
        for k in j + 1..n {
            let mut sym = ComplexMatrix::zeros(n, n);
            sym[(j, k)] = re(1.0);
            sym[(k, j)] = re(1.0);
            out.push(sym);
            let mut anti = ComplexMatrix::zeros(n, n);
            anti[(j, k)] = c(0.0, -1.0);
            anti[(k, j)] = c(0.0, 1.0);
            out.push(anti);
        }
    }
    out
}

/// Linear map from traceless coordinates `x` (with `rho = I/N + sum x_a G_a`)
/// to the stacked series minus `1/N`.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub n: usize,
    pub matrix: DMatrix<f64>,
    gram: NormalEquations,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// Ratio of the largest to the smallest of the `N^2 - 1` singular values;
    /// infinite when the map is rank deficient.
    pub condition: f64,
}

pub fn design_matrix(n: usize) -> Result<DesignMatrix> {
    let bases = measurement_bases(&tomography_family(n)?)?;
    Ok(build_design(n, &bases))
}

fn build_design(n: usize, bases: &[ComplexMatrix]) -> DesignMatrix {
    let coords = traceless_basis(n);
    let rows = bases.len() * n;
    let mut matrix = DMatrix::<f64>::zeros(rows, coords.len());
    for (m, basis) in bases.iter().enumerate() {
        for k in 0..n {
            let v = basis.column(k);
            for (a, g) in coords.iter().enumerate() {
                let gv = g.mul_vec(&v);
                let val: C64 = v.iter().zip(&gv).map(|(x, y)| x.conj() * y).sum();
                matrix[(m * n + k, a)] = val.re;
            }
        }
    }
    let gram = NormalEquations::new(&matrix);
    let singular_values = gram.singular_values();
    let top = singular_values[0];
    let rank = singular_values.iter().filter(|&&s| s > RANK_TOL * top).count();
    let bottom = *singular_values.last().expect("N^2 - 1 >= 3");
    let condition = if bottom > RANK_TOL * top {
        top / bottom
    } else {
        f64::INFINITY
    };
    DesignMatrix {
        n,
        matrix,
        gram,
        singular_values,
        rank,
        condition,
    }
}

/// Eigendecomposition of `A^T A`, used for singular values and the
/// minimum-norm least-squares solution.
#[derive(Debug, Clone)]
struct NormalEquations {
    eigen: SymmetricEigen<f64, Dyn>,
}

impl NormalEquations {
    fn new(a: &DMatrix<f64>) -> Self {
        Self {
            eigen: SymmetricEigen::new(a.transpose() * a),
        }
    }

    /// Descending.
    fn singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self.eigen.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// `x = sum_{sigma_i > cutoff} v_i v_i^T A^T b / sigma_i^2`
    fn solve(&self, a: &DMatrix<f64>, b: &DVector<f64>, cutoff: f64) -> DVector<f64> {
        let atb = a.transpose() * b;
        let mut x = DVector::zeros(a.ncols());
        for (i, &lambda) in self.eigen.eigenvalues.iter().enumerate() {
            if lambda > cutoff * cutoff {
                let v = self.eigen.eigenvectors.column(i);
                x += v * (v.dot(&atb) / lambda);
            }
        }
        x
    }
}

/// Result of [`reconstruct_detailed`].
#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// Least-squares Hermitian unit-trace estimate before PSD projection.
    pub estimate: ComplexMatrix,
    pub state: DensityMatrix,
    /// Euclidean norm of the least-squares residual.
    pub residual: f64,
    pub rank: usize,
    pub condition: f64,
}

/// Nearest density matrix in Frobenius norm: the spectrum is projected onto
/// the probability simplex, `lambda_i -> max(lambda_i - tau, 0)` with `tau`
/// fixed by unit trace. Matches clipping and renormalizing when no eigenvalue
/// is negative.
pub fn project_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(m)?;
    let tau = simplex_shift(&eig.eigenvalues);
    Ok(eig.rebuild_with(|x| (x - tau).max(0.0)).hermitian_part())
}

/// Shift `tau` of the Euclidean projection onto `{x >= 0, sum x = 1}` for
/// values sorted descending.
fn simplex_shift(desc: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut tau = 0.0;
    for (i, &x) in desc.iter().enumerate() {
        acc += x;
        let t = (acc - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    tau
}

fn residual_threshold(series: &TomographySeries) -> f64 {
    match (series.exact, series.shots) {
        (false, Some(shots)) => 10.0 / (shots.max(1) as f64).sqrt(),
        _ => EXACT_RESIDUAL_TOL,
    }
}

pub fn reconstruct_detailed(series: &TomographySeries) -> Result<Reconstruction> {
    series.check()?;
    let n = series.n;
    let bases = measurement_bases(&tomography_family(n)?)?;
    let design = build_design(n, &bases);
    let target = DVector::from_iterator(
        design.matrix.nrows(),
        series.series.iter().flatten().map(|&p| p - 1.0 / n as f64),
    );
    let x = design
        .gram
        .solve(&design.matrix, &target, RANK_TOL * design.singular_values[0]);
    let residual = (&design.matrix * &x - &target).norm();
    let limit = residual_threshold(series);
    if residual > limit {
        return Err(Error::IllConditioned(format!(
            "least-squares residual {residual:.3e} exceeds {limit:.3e}"
        )));
    }
    let mut estimate = ComplexMatrix::identity(n).scale_re(1.0 / n as f64);
    for (g, &xa) in traceless_basis(n).iter().zip(x.iter()) {
        estimate = &estimate + &g.scale_re(xa);
    }
    let projected = project_psd(&estimate)?;
    Ok(Reconstruction {
        estimate,
        state: DensityMatrix::from_parts(projected, Dims::Single(n)),
        residual,
        rank: design.rank,
        condition: design.condition,
    })
}

pub fn reconstruct(series: &TomographySeries) -> Result<DensityMatrix> {
    Ok(reconstruct_detailed(series)?.state)
}

/// Qubit state from the probabilities of outcome 0 in the z, x and y Pauli
/// bases. Bloch vectors longer than one are scaled back onto the sphere.
pub fn qubit_bloch_tomography(p_z: f64, p_x: f64, p_y: f64) -> Result<DensityMatrix> {
    for (name, p) in [("p_z", p_z), ("p_x", p_x), ("p_y", p_y)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ParamOutOfRange {
                name,
                value: p,
                range: "[0, 1]",
            });
        }
    }
    let mut r = [2.0 * p_x - 1.0, 2.0 * p_y - 1.0, 2.0 * p_z - 1.0];
    let len = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    if len > 1.0 {
        r.iter_mut().for_each(|x| *x /= len);
    }
    let [x, y, z] = r;
    let m = ComplexMatrix::new(
        2,
        2,
        vec![
            re((1.0 + z) / 2.0),
            c(x / 2.0, -y / 2.0),
            c(x / 2.0, y / 2.0),
            re((1.0 - z) / 2.0),
        ],
    )?;
    Ok(DensityMatrix::from_parts(m, Dims::Single(2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(m: ComplexMatrix) -> DensityMatrix {
        DensityMatrix::single(m).unwrap()
    }

    #[test]
    fn gell_mann_basis_is_orthogonal() {
        for n in 2..=5 {
            let g = traceless_basis(n);
            assert_eq!(g.len(), n * n - 1);
            for (a, ga) in g.iter().enumerate() {
                assert!(ga.trace().norm() < 1e-15);
                assert!(ga.hermiticity_residual() < 1e-15);
                for (b, gb) in g.iter().enumerate() {
                    let want = if a == b { 2.0 } else { 0.0 };
                    assert!((ga.matmul(gb).trace() - re(want)).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn bases_are_ordered_and_aligned() {
        for n in 2..=6 {
            let fam = tomography_family(n).unwrap();
            let bases = measurement_bases(&fam).unwrap();
            assert_eq!(bases.len(), n + 1);
            for (member, u) in fam.members.iter().zip(&bases) {
                assert!(u.dagger().matmul(u).max_abs_diff(&ComplexMatrix::identity(n)) < 1e-12);
                let d = member.conjugate_by(&u.dagger());
                let diag: Vec<f64> = d.diagonal().iter().map(|z| z.re).collect();
                assert!(diag.windows(2).all(|w| w[0] < w[1]));
                for k in 0..n {
                    let v = u.column(k);
                    let big = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    let pivot = v.iter().find(|z| z.norm() >= big - 1e-12).unwrap();
                    assert!(pivot.im.abs() < 1e-14 && pivot.re > 0.0);
                }
            }
        }
    }

    #[test]
    fn series_examples() {
        for n in 2..=5 {
            let s = simulate_series(&DensityMatrix::maximally_mixed(Dims::Single(n)), SeriesMode::Exact).unwrap();
            assert!(s.series.iter().flatten().all(|&p| (p - 1.0 / n as f64).abs() < 1e-14));
        }
        let up = single(ComplexMatrix::from_diag(&[1.0, 0.0]));
        let s = simulate_series(&up, SeriesMode::Exact).unwrap();
        assert!((s.series[0][0] - 1.0).abs() < 1e-15 && s.series[0][1].abs() < 1e-15);
    }

    #[test]
    fn sampled_agrees_with_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = single(random::density_matrix(3, &mut rng));
        let exact = simulate_series(&rho, SeriesMode::Exact).unwrap();
        let sampled = simulate_series(
            &rho,
            SeriesMode::Sampled {
                shots: 1_000_000,
                seed: 8,
            },
        )
        .unwrap();
        for (a, b) in exact.series.iter().flatten().zip(sampled.series.iter().flatten()) {
            assert!((a - b).abs() < 5e-3);
        }
        assert_eq!(sampled.counts.as_ref().unwrap()[0].iter().sum::<u64>(), 1_000_000);
    }

    #[test]
    fn design_rank_of_real_family() {
        for n in 2..=6 {
            let d = design_matrix(n).unwrap();
            assert_eq!(d.matrix.nrows(), (n + 1) * n);
            assert_eq!(d.matrix.ncols(), n * n - 1);
            assert_eq!(d.rank, n * (n + 1) / 2 - 1);
            assert!(d.condition.is_infinite());
        }
    }

    #[test]
    fn identity_round_trip() {
        for n in 2..=6 {
            let mixed = DensityMatrix::maximally_mixed(Dims::Single(n));
            let s = simulate_series(&mixed, SeriesMode::Exact).unwrap();
            assert!(reconstruct(&s).unwrap().matrix().frobenius_distance(mixed.matrix()) < 1e-12);
        }
    }

    #[test]
    fn real_states_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 2..=6 {
            for _ in 0..100 {
                let rho = single(random::real_density_matrix(n, &mut rng));
                let s = simulate_series(&rho, SeriesMode::Exact).unwrap();
                let out = reconstruct(&s).unwrap();
                assert!(out.matrix().frobenius_distance(rho.matrix()) <= 1e-8);
            }
        }
    }

    #[test]
    fn complex_states_lose_only_the_imaginary_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..=5 {
            let rho = single(random::density_matrix(n, &mut rng));
            let s = simulate_series(&rho, SeriesMode::Exact).unwrap();
            let rec = reconstruct_detailed(&s).unwrap();
            let real_part = rho.matrix().map(|z| re(z.re));
            assert!(rec.estimate.frobenius_distance(&real_part) <= 1e-8);
        }
    }

    #[test]
    fn sampled_real_qubits_are_accurate() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = single(random::real_density_matrix(2, &mut rng));
        let mut good = 0;
        for seed in 0..40 {
            let s = simulate_series(&rho, SeriesMode::Sampled { shots: 100_000, seed }).unwrap();
            if reconstruct(&s).unwrap().matrix().frobenius_distance(rho.matrix()) < 0.02 {
                good += 1;
            }
        }
        assert!(good >= 38, "{good}/40");
    }

    #[test]
    fn psd_projection_contracts_near_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=4 {
            for _ in 0..20 {
                let rho = single(random::density_matrix_with_rank(n, 1, &mut rng).map(|z| re(z.re)));
                let rho = single(project_psd(rho.matrix()).unwrap());
                let mut s = simulate_series(&rho, SeriesMode::Exact).unwrap();
                for v in s.series.iter_mut() {
                    let delta = rand::Rng::gen_range(&mut rng, -1e-6..1e-6);
                    v[0] += delta;
                    v[1] -= delta;
                    v.iter_mut().for_each(|p| *p = p.max(0.0));
                    let t: f64 = v.iter().sum();
                    v.iter_mut().for_each(|p| *p /= t);
                }
                s.exact = false;
                s.shots = Some(1_000_000);
                let rec = reconstruct_detailed(&s).unwrap();
                let before = rec.estimate.frobenius_distance(rho.matrix());
                let after = rec.state.matrix().frobenius_distance(rho.matrix());
                assert!(after <= before + 1e-12, "{after} > {before}");
            }
        }
    }

    #[test]
    fn simplex_shift_examples() {
        assert_eq!(simplex_shift(&[0.5, 0.5]), 0.0);
        assert!((simplex_shift(&[1.2, -0.2]) - 0.2).abs() < 1e-15);
        let tau = simplex_shift(&[0.7, 0.4, -0.1]);
        assert!(((0.7 - tau) + (0.4 - tau) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_series_rejected() {
        let good = simulate_series(&DensityMatrix::maximally_mixed(Dims::Single(3)), SeriesMode::Exact).unwrap();
        let mut short = good.clone();
        short.series.pop();
        assert!(matches!(reconstruct(&short), Err(Error::InvalidSeries(_))));
        let mut unnormalized = good.clone();
        unnormalized.series[0][0] += 0.1;
        assert!(matches!(reconstruct(&unnormalized), Err(Error::InvalidSeries(_))));
        let mut inconsistent = good.clone();
        inconsistent.series[0] = vec![1.0, 0.0, 0.0];
        inconsistent.series[1] = vec![1.0, 0.0, 0.0];
        assert!(matches!(reconstruct(&inconsistent), Err(Error::IllConditioned(_))));
        let mut wrong_len = good;
        wrong_len.series[2] = vec![0.5, 0.5];
        assert!(matches!(reconstruct(&wrong_len), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn series_json_layout() {
        let s = simulate_series(&DensityMatrix::maximally_mixed(Dims::Single(2)), SeriesMode::Exact).unwrap();
        let v = serde_json::to_value(&s).unwrap();
        let mut keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        keys.sort();
        assert_eq!(keys, ["exact", "n", "series", "shots"]);
        assert!(v["shots"].is_null());
        let back: TomographySeries = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn bloch_examples() {
        let north = qubit_bloch_tomography(1.0, 0.5, 0.5).unwrap();
        assert!(north.matrix().max_abs_diff(&ComplexMatrix::from_diag(&[1.0, 0.0])) < 1e-15);
        let origin = qubit_bloch_tomography(0.5, 0.5, 0.5).unwrap();
        assert!(origin.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale_re(0.5)) < 1e-15);
        let plus = qubit_bloch_tomography(0.5, 1.0, 0.5).unwrap();
        assert!(
            plus.matrix()
                .max_abs_diff(&ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]))
                < 1e-15
        );
        let clipped = qubit_bloch_tomography(1.0, 1.0, 1.0).unwrap();
        assert!((clipped.purity() - 1.0).abs() < 1e-14);
        assert!(qubit_bloch_tomography(1.2, 0.5, 0.5).is_err());
    }

    #[test]
    fn bloch_matches_pauli_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x_plus = vec![re(s), re(s)];
        let y_plus = vec![re(s), c(0.0, s)];
        for _ in 0..50 {
            let rho = single(random::density_matrix(2, &mut rng));
            let expect = |v: &[C64]| {
                let w = rho.matrix().mul_vec(v);
                v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum::<C64>().re
            };
            let out = qubit_bloch_tomography(rho.matrix()[(0, 0)].re, expect(&x_plus), expect(&y_plus)).unwrap();
            assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-12);
        }
    }
}
