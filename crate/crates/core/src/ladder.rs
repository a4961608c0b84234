//! Ladder operators attached to an ordered basis and the N+1 member
//! observable family used for tomography.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::matcore::{eig_hermitian, ComplexMatrix};

/// Minimum eigenvalue gap for an observable to count as nondegenerate.
pub const SPECTRUM_GAP_TOL: f64 = 1e-8;

/// `L+`, `L-` and `L3 = (L+ L- - L- L+)/2` for an ordered basis.
#[derive(Debug, Clone)]
pub struct LadderTriple {
    pub n: usize,
    pub raise: ComplexMatrix,
    pub lower: ComplexMatrix,
    pub l3: ComplexMatrix,
}

impl LadderTriple {
    /// `(L+ + L-)/2`
    pub fn x(&self) -> ComplexMatrix {
        (&self.raise + &self.lower).scale_re(0.5)
    }

    /// `(L+ - L-)/2`, the anti-Hermitian generator appearing in family commutators.
    pub fn commutator_generator(&self) -> ComplexMatrix {
        (&self.raise - &self.lower).scale_re(0.5)
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::DimTooSmall(n));
    }
    Ok(())
}

/// Ladder operators of the standard basis `|1>, ..., |N>`:
/// `L+ |k> = sqrt((N-k)k) |k+1>`, `L- |k> = sqrt((N+1-k)(k-1)) |k-1>`.
///
/// `L3` is the half-commutator and comes out as `diag(k - 1 - (N-1)/2)`.
pub fn ladder_operators(n: usize) -> Result<LadderTriple> {
    ladder_operators_for_basis(&ComplexMatrix::identity(n))
}

/// Ladder operators associated to the ordered basis given by the columns of `basis`.
pub fn ladder_operators_for_basis(basis: &ComplexMatrix) -> Result<LadderTriple> {
    let n = basis.cols();
    check_dim(n)?;
    if basis.rows() != n {
        return Err(Error::NotSquare {
            rows: basis.rows(),
            cols: n,
        });
    }
    let nf = n as f64;
    let mut raise = ComplexMatrix::zeros(n, n);
    let mut lower = ComplexMatrix::zeros(n, n);
    for k in 1..=n {
        let kf = k as f64;
        let up = ((nf - kf) * kf).sqrt();
        let down = ((nf + 1.0 - kf) * (kf - 1.0)).sqrt();
        let from = basis.column(k - 1);
        if k < n {
            let to = basis.column(k);
            raise = &raise + &ComplexMatrix::outer(&to, &from).scale_re(up);
        }
        if k > 1 {
            let to = basis.column(k - 2);
            lower = &lower + &ComplexMatrix::outer(&to, &from).scale_re(down);
        }
    }
    let l3 = (&raise.matmul(&lower) - &lower.matmul(&raise)).scale_re(0.5);
    Ok(LadderTriple { n, raise, lower, l3 })
}

/// `L3` eigenvalues `k - 1 - (N-1)/2`, `k = 1..N`, ascending.
pub fn l3_eigenvalues(n: usize) -> Vec<f64> {
    let shift = (n as f64 - 1.0) / 2.0;
    (0..n).map(|k| k as f64 - shift).collect()
}

/// Observable diagonal in the associated basis with the given eigenvalues.
pub fn diagonal_observable(values: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_diag(values)
}

/// `o(L3)`: the diagonal observable whose eigenvalues interpolate `o` on the `L3` spectrum.
pub fn function_of_l3(n: usize, o: impl Fn(f64) -> f64) -> ComplexMatrix {
    let values: Vec<f64> = l3_eigenvalues(n).into_iter().map(o).collect();
    diagonal_observable(&values)
}

/// The `N + 1` observables `cos(phi_m) L3 + sin(phi_m) (L+ + L-)/2`, `phi_m = m pi/(N+1)`.
#[derive(Debug, Clone)]
pub struct ObservableFamily {
    pub n: usize,
    pub ladder: LadderTriple,
    pub angles: Vec<f64>,
    pub members: Vec<ComplexMatrix>,
}

impl ObservableFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Closed form of `[A_m, A_n]` following from `[L3, L+-] = +-L+-`:
    /// `sin(phi_n - phi_m) (L+ - L-)/2`.
    pub fn commutator_closed_form(&self, m: usize, n: usize) -> ComplexMatrix {
        self.ladder
            .commutator_generator()
            .scale_re((self.angles[n] - self.angles[m]).sin())
    }

    /// Smallest gap between consecutive eigenvalues of member `m`.
    pub fn spectral_gap(&self, m: usize) -> f64 {
        let ev = eig_hermitian(&self.members[m])
            .expect("family members are Hermitian")
            .eigenvalues;
        ev.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min)
    }
}

pub fn tomography_family(n: usize) -> Result<ObservableFamily> {
    let ladder = ladder_operators(n)?;
    let x = ladder.x();
    let angles: Vec<f64> = (0..=n).map(|m| m as f64 * PI / (n as f64 + 1.0)).collect();
    let members = angles
        .iter()
        .map(|&phi| &ladder.l3.scale_re(phi.cos()) + &x.scale_re(phi.sin()))
        .collect();
    Ok(ObservableFamily {
        n,
        ladder,
        angles,
        members,
    })
}

/// Is `m` diagonal with off-diagonal magnitude at most `tol`?
#[cfg(test)]
pub(crate) fn is_diagonal(m: &ComplexMatrix, tol: f64) -> bool {
    (0..m.rows()).all(|i| (0..m.cols()).all(|j| i == j || m[(i, j)].norm() <= tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::re;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn n2_ladder() {
        let t = ladder_operators(2).unwrap();
        assert_eq!(t.raise, ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]));
        assert!(t.l3.max_abs_diff(&ComplexMatrix::from_diag(&[-0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn n3_ladder() {
        let t = ladder_operators(3).unwrap();
        let s2 = 2f64.sqrt();
        assert!((t.raise[(1, 0)] - re(s2)).norm() < 1e-15);
        assert!((t.raise[(2, 1)] - re(s2)).norm() < 1e-15);
        assert!(t.l3.max_abs_diff(&ComplexMatrix::from_diag(&[-1.0, 0.0, 1.0])) < 1e-14);
    }

    #[test]
    fn too_small() {
        assert!(matches!(ladder_operators(1), Err(Error::DimTooSmall(1))));
        assert!(matches!(tomography_family(0), Err(Error::DimTooSmall(0))));
    }

    #[test]
    fn lower_is_adjoint_of_raise() {
        for n in 2..=8 {
            let t = ladder_operators(n).unwrap();
            assert_eq!(t.lower, t.raise.dagger());
        }
    }

    #[test]
    fn half_commutator_has_unit_spacing() {
        for n in 2..=8 {
            let t = ladder_operators(n).unwrap();
            assert!(is_diagonal(&t.l3, 1e-10));
            let expected = ComplexMatrix::from_diag(&l3_eigenvalues(n));
            assert!(t.l3.max_abs_diff(&expected) <= 1e-10);
            // [L3, L+] = +L+
            assert!(t.l3.commutator(&t.raise).max_abs_diff(&t.raise) <= 1e-10);
        }
    }

    #[test]
    fn diagonal_observables() {
        assert_eq!(diagonal_observable(&[0.0; 3]), ComplexMatrix::zeros(3, 3));
        let t = ladder_operators(4).unwrap();
        assert!(diagonal_observable(&l3_eigenvalues(4)).max_abs_diff(&t.l3) < 1e-14);
        assert_eq!(
            diagonal_observable(&[1.0, -1.0]),
            ComplexMatrix::from_diag(&[1.0, -1.0])
        );
        assert!(function_of_l3(4, |x| x).max_abs_diff(&t.l3) < 1e-14);
    }

    #[test]
    fn family_examples_n2() {
        let fam = tomography_family(2).unwrap();
        assert_eq!(fam.len(), 3);
        assert!(fam.members[0].max_abs_diff(&ComplexMatrix::from_diag(&[-0.5, 0.5])) < 1e-15);
        let ev = eig_hermitian(&fam.members[1]).unwrap().eigenvalues;
        assert!((ev[0] - 0.5).abs() < 1e-14 && (ev[1] + 0.5).abs() < 1e-14);
        assert!((fam.angles[1] - PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn family_members_hermitian_and_nondegenerate() {
        for n in 2..=6 {
            let fam = tomography_family(n).unwrap();
            for m in 0..fam.len() {
                assert!(fam.members[m].hermiticity_residual() <= 1e-12);
                assert!(fam.spectral_gap(m) > SPECTRUM_GAP_TOL);
            }
        }
    }

    #[test]
    fn family_commutators_match_closed_form() {
        for n in 2..=8 {
            let fam = tomography_family(n).unwrap();
            for a in 0..fam.len() {
                for b in 0..fam.len() {
                    let direct = fam.members[a].commutator(&fam.members[b]);
                    assert!(direct.max_abs_diff(&fam.commutator_closed_form(a, b)) <= 1e-10);
                    if a != b {
                        assert!(direct.max_abs() > 1e-3, "members {a},{b} commute at n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn ladder_follows_basis_change() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=6 {
            let u = random::unitary(n, &mut rng);
            let std = ladder_operators(n).unwrap();
            let moved = ladder_operators_for_basis(&u).unwrap();
            assert!(moved.raise.max_abs_diff(&std.raise.conjugate_by(&u)) < 1e-12);
            assert!(moved.lower.max_abs_diff(&std.lower.conjugate_by(&u)) < 1e-12);
            assert!(moved.l3.max_abs_diff(&std.l3.conjugate_by(&u)) < 1e-12);
        }
    }
}
