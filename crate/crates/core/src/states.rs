//! Physical states: density matrices, pure state vectors, qubit Bloch
//! parametrization and the named two-qubit states.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{self, c, eig_hermitian, re, BipartiteDims, ComplexMatrix, Subsystem, C64};

/// Tolerance used by the density-matrix invariants (Hermiticity, PSD, trace).
pub const STATE_TOL: f64 = 1e-9;
const NORM_EXACT_TOL: f64 = 1e-10;
const NORM_RENORMALIZE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dims {
    Single(usize),
    Bipartite(BipartiteDims),
}

impl Dims {
    pub fn total(&self) -> usize {
        match self {
            Dims::Single(n) => *n,
            Dims::Bipartite(d) => d.total(),
        }
    }

    pub fn bipartite(&self) -> Result<BipartiteDims> {
        match self {
            Dims::Bipartite(d) => Ok(*d),
            Dims::Single(_) => Err(Error::NotBipartite),
        }
    }

    pub fn as_vec(&self) -> Vec<usize> {
        match self {
            Dims::Single(n) => vec![*n],
            Dims::Bipartite(d) => vec![d.a, d.b],
        }
    }
}

impl From<BipartiteDims> for Dims {
    fn from(d: BipartiteDims) -> Self {
        Dims::Bipartite(d)
    }
}

/// Outcome of checking a matrix against the density-matrix invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub hermiticity_residual: f64,
    /// `None` when the matrix is too far from Hermitian to diagonalize.
    pub min_eigenvalue: Option<f64>,
    pub trace_deviation: f64,
    pub hermitian: bool,
    pub positive: bool,
    pub unit_trace: bool,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.hermitian && self.positive && self.unit_trace
    }
}

impl std::fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "hermiticity residual {:.3e} ({}), min eigenvalue {} ({}), trace deviation {:.3e} ({})",
            self.hermiticity_residual,
            pass_fail(self.hermitian),
            self.min_eigenvalue
                .map_or_else(|| "n/a".to_string(), |x| format!("{x:.6e}")),
            pass_fail(self.positive),
            self.trace_deviation,
            pass_fail(self.unit_trace),
        )
    }
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

/// Check an arbitrary square matrix against the density-matrix invariants.
pub fn validate_matrix(m: &ComplexMatrix) -> ValidityReport {
    let hermiticity_residual = m.hermiticity_residual();
    let hermitian = hermiticity_residual <= STATE_TOL;
    let min_eigenvalue = if hermitian {
        eig_hermitian(m).ok().map(|es| es.min_eigenvalue())
    } else {
        None
    };
    let trace_deviation = if m.is_square() {
        (m.trace() - re(1.0)).norm()
    } else {
        f64::INFINITY
    };
    ValidityReport {
        hermiticity_residual,
        min_eigenvalue,
        trace_deviation,
        hermitian,
        positive: min_eigenvalue.is_some_and(|x| x >= -STATE_TOL),
        unit_trace: trace_deviation <= STATE_TOL,
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix with dimension labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    dims: Dims,
}

impl DensityMatrix {
    /// Validates `mat` and attaches `dims`.
    pub fn new(mat: ComplexMatrix, dims: Dims) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotSquare {
                rows: mat.rows(),
                cols: mat.cols(),
            });
        }
        if mat.rows() != dims.total() {
            return Err(Error::DimMismatch {
                expected: dims.total(),
                found: mat.rows(),
            });
        }
        let report = validate_matrix(&mat);
        if !report.is_valid() {
            return Err(Error::InvalidState(Box::new(report)));
        }
        Ok(Self { mat, dims })
    }

    pub fn single(mat: ComplexMatrix) -> Result<Self> {
        let n = mat.rows();
        Self::new(mat, Dims::Single(n))
    }

    pub fn bipartite(mat: ComplexMatrix, dims: BipartiteDims) -> Result<Self> {
        Self::new(mat, Dims::Bipartite(dims))
    }

    /// Wraps a matrix known to be a valid state by construction.
    pub(crate) fn from_parts(mat: ComplexMatrix, dims: Dims) -> Self {
        debug_assert_eq!(mat.rows(), dims.total());
        Self { mat, dims }
    }

    pub fn maximally_mixed(dims: Dims) -> Self {
        let n = dims.total();
        Self::from_parts(ComplexMatrix::identity(n).scale_re(1.0 / n as f64), dims)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn bipartite_dims(&self) -> Result<BipartiteDims> {
        self.dims.bipartite()
    }

    pub fn validate(&self) -> ValidityReport {
        validate_matrix(&self.mat)
    }

    /// `tr(rho^2)`
    pub fn purity(&self) -> f64 {
        self.mat.matmul(&self.mat).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eig_hermitian(&self.mat)
            .expect("density matrix is Hermitian by construction")
            .eigenvalues
    }

    /// Reduced state of the subsystem that is kept.
    pub fn marginal(&self, keep: Subsystem) -> Result<DensityMatrix> {
        let dims = self.bipartite_dims()?;
        let over = match keep {
            Subsystem::A => Subsystem::B,
            Subsystem::B => Subsystem::A,
        };
        let m = matcore::partial_trace(&self.mat, dims, over)?;
        Ok(Self::from_parts(
            m,
            Dims::Single(match keep {
                Subsystem::A => dims.a,
                Subsystem::B => dims.b,
            }),
        ))
    }

    /// `rho_A (x) rho_B` as a bipartite state.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let dims = BipartiteDims {
            a: self.dim(),
            b: other.dim(),
        };
        Self::from_parts(matcore::tensor(&self.mat, &other.mat), Dims::Bipartite(dims))
    }

    /// `U rho U^dagger`. `u` must be unitary of matching size.
    pub fn evolve(&self, u: &ComplexMatrix) -> Result<DensityMatrix> {
        if u.rows() != self.dim() || !u.is_square() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: u.rows(),
            });
        }
        Ok(Self::from_parts(self.mat.conjugate_by(u).hermitian_part(), self.dims))
    }

    /// Convex combination `sum_k w_k rho_k`; all states must share dims.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<DensityMatrix> {
        let first = parts
            .first()
            .ok_or_else(|| Error::WeightInvalid("empty mixture".into()))?
            .1;
        check_weights(parts.iter().map(|p| p.0))?;
        let mut acc = ComplexMatrix::zeros(first.dim(), first.dim());
        for (w, rho) in parts {
            if rho.dims != first.dims {
                return Err(Error::DimMismatch {
                    expected: first.dim(),
                    found: rho.dim(),
                });
            }
            acc = &acc + &rho.mat.scale_re(*w);
        }
        Ok(Self::from_parts(acc, first.dims))
    }
}

/// Weights must be nonnegative and sum to one within 1e-10.
pub(crate) fn check_weights(weights: impl IntoIterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    for w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::WeightInvalid(format!("weight {w} is negative or not finite")));
        }
        sum += w;
    }
    if (sum - 1.0).abs() > 1e-10 {
        return Err(Error::WeightInvalid(format!("weights sum to {sum}, not 1")));
    }
    Ok(())
}

/// Normalized pure-state vector (a ray representative; no phase canonicalization).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
    dims: Dims,
}

impl StateVector {
    /// Accepts norms within 1e-10 of one as is and silently renormalizes
    /// up to 1e-6; anything further off is [`Error::NotNormalized`].
    pub fn new(amps: Vec<C64>, dims: Dims) -> Result<Self> {
        if amps.len() != dims.total() {
            return Err(Error::DimMismatch {
                expected: dims.total(),
                found: amps.len(),
            });
        }
        let n = matcore::norm(&amps);
        let dev = (n - 1.0).abs();
        if !n.is_finite() || dev > NORM_RENORMALIZE_TOL {
            return Err(Error::NotNormalized { norm: n });
        }
        let amps = if dev > NORM_EXACT_TOL {
            amps.into_iter().map(|z| z / n).collect()
        } else {
            amps
        };
        Ok(Self { amps, dims })
    }

    pub fn single(amps: Vec<C64>) -> Result<Self> {
        let n = amps.len();
        Self::new(amps, Dims::Single(n))
    }

    pub fn bipartite(amps: Vec<C64>, dims: BipartiteDims) -> Result<Self> {
        Self::new(amps, Dims::Bipartite(dims))
    }

    /// Normalizes any nonzero vector.
    pub fn normalized(amps: Vec<C64>, dims: Dims) -> Result<Self> {
        let n = matcore::norm(&amps);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized { norm: n });
        }
        Self::new(amps.into_iter().map(|z| z / n).collect(), dims)
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        matcore::inner(&self.amps, &other.amps)
    }

    pub fn to_density(&self) -> DensityMatrix {
        pure_from_vector(self)
    }
}

/// Bloch-sphere angles of a qubit pure state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochParams {
    pub theta: f64,
    pub phi: f64,
}

impl BlochParams {
    /// `theta` in `[0, pi]`, `phi` in `[0, 2pi)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::ParamOutOfRange {
                name: "theta",
                value: theta,
                range: "[0, pi]",
            });
        }
        if !(0.0..2.0 * PI).contains(&phi) {
            return Err(Error::ParamOutOfRange {
                name: "phi",
                value: phi,
                range: "[0, 2pi)",
            });
        }
        Ok(Self { theta, phi })
    }

    /// State vector `(cos(theta/2), e^{i phi/2} sin(theta/2))`.
    pub fn vector(&self) -> Vec<C64> {
        let half = self.theta / 2.0;
        vec![re(half.cos()), C64::from_polar(half.sin(), self.phi / 2.0)]
    }
}

fn check_weight(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ParamOutOfRange {
            name,
            value: p,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// Projector `rho(theta, phi)`: diagonal `((1+cos)/2, (1-cos)/2)`,
/// off-diagonal `(sin/2) e^{-i phi/2}` above and its conjugate below.
pub fn qubit_pure(params: BlochParams) -> DensityMatrix {
    let (s, cth) = params.theta.sin_cos();
    let off = C64::from_polar(s / 2.0, -params.phi / 2.0);
    let m = ComplexMatrix::new(
        2,
        2,
        vec![re((1.0 + cth) / 2.0), off, off.conj(), re((1.0 - cth) / 2.0)],
    )
    .expect("finite entries");
    DensityMatrix::from_parts(m, Dims::Single(2))
}

/// Mixed qubit state with weight `p` on the state orthogonal to `rho(theta, phi)`:
/// `p I + (1 - 2p) rho(theta, phi)`, equal to `2p (I/2) + (1-2p) rho(theta, phi)`.
pub fn qubit_mixed(p: f64, params: BlochParams) -> Result<DensityMatrix> {
    check_weight("p", p)?;
    let pure = qubit_pure(params);
    let m = &ComplexMatrix::identity(2).scale_re(p) + &pure.mat.scale_re(1.0 - 2.0 * p);
    Ok(DensityMatrix::from_parts(m, Dims::Single(2)))
}

/// `|v><v|`
pub fn pure_from_vector(v: &StateVector) -> DensityMatrix {
    let m = ComplexMatrix::outer(&v.amps, &v.amps);
    DensityMatrix::from_parts(m, v.dims)
}

/// `(e^{i phi/2}|0>|1> + e^{-i phi/2}|1>|0>)/sqrt(2)` in the 2x2 induced basis.
pub fn epr_state(phi: f64) -> StateVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let amps = vec![
        re(0.0),
        C64::from_polar(s, phi / 2.0),
        C64::from_polar(s, -phi / 2.0),
        re(0.0),
    ];
    StateVector {
        amps,
        dims: Dims::Bipartite(BipartiteDims { a: 2, b: 2 }),
    }
}

/// `p |00><00| + (1-p) |11><11|`: perfectly correlated classical mix.
pub fn classical_correlated_mix(p: f64) -> Result<DensityMatrix> {
    check_weight("p", p)?;
    Ok(DensityMatrix::from_parts(
        ComplexMatrix::from_diag(&[p, 0.0, 0.0, 1.0 - p]),
        Dims::Bipartite(BipartiteDims { a: 2, b: 2 }),
    ))
}

/// Same as [`DensityMatrix::validate`], for API symmetry with the other operations.
pub fn validate(rho: &DensityMatrix) -> ValidityReport {
    rho.validate()
}

/// Computational basis vector `|k>` of dimension `n`.
pub fn basis_vector(n: usize, k: usize) -> Vec<C64> {
    let mut v = vec![c(0.0, 0.0); n];
    v[k] = re(1.0);
    v
}
