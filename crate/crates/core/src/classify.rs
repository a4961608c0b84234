//! Entropies, spectrum degeneracy and the independent / separable /
//! entangled verdict for bipartite states.

use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::{d_family_weights, paraqutrit_d_family, CoupledBasis, CoupledWeights, HalfInt};
use crate::error::{Error, Result};
use crate::matcore::{eig_hermitian, partial_transpose, BipartiteDims, Subsystem};
use crate::states::{DensityMatrix, StateVector};

/// Eigenvalues below this are dropped from entropy sums.
pub const ENTROPY_CUTOFF: f64 = 1e-12;
pub const ZERO_THRESHOLD: f64 = 1e-10;
pub const DEFAULT_TOL: f64 = 1e-9;

/// `-sum p log2 p` over the entries above [`ENTROPY_CUTOFF`].
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > ENTROPY_CUTOFF)
        .map(|&x| -x * x.log2())
        .sum::<f64>()
        .max(0.0)
}

/// `H2(x) = -x log2 x - (1-x) log2 (1-x)`
pub fn binary_entropy(x: f64) -> f64 {
    shannon_entropy(&[x, 1.0 - x])
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    shannon_entropy(&rho.eigenvalues())
}

/// Entropy of the A marginal of a pure bipartite state.
pub fn entanglement_entropy(psi: &StateVector) -> Result<f64> {
    let rho = psi.to_density();
    rho.bipartite_dims()?;
    Ok(von_neumann_entropy(&rho.marginal(Subsystem::A)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyProfile {
    /// `(representative eigenvalue, multiplicity)`, descending.
    pub clusters: Vec<(f64, usize)>,
    pub zero_rank: usize,
    pub tol: f64,
}

impl DegeneracyProfile {
    pub fn multiplicities(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.1).collect()
    }
}

/// Clustering tolerance used when none is given: `1e-9 max(1, lambda_max)`.
pub fn default_degeneracy_tol(rho: &DensityMatrix) -> f64 {
    let top = rho.eigenvalues().first().copied().unwrap_or(0.0);
    DEFAULT_TOL * top.max(1.0)
}

/// Single-linkage clustering of the spectrum: consecutive eigenvalues closer
/// than `tol` share a cluster, represented by its mean.
pub fn degeneracy_profile(rho: &DensityMatrix, tol: f64) -> DegeneracyProfile {
    let ev = rho.eigenvalues();
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for &x in &ev {
        match groups.last_mut() {
            Some(g) if g.last().is_some_and(|&prev| prev - x <= tol) => g.push(x),
            _ => groups.push(vec![x]),
        }
    }
    DegeneracyProfile {
        clusters: groups
            .iter()
            .map(|g| (g.iter().sum::<f64>() / g.len() as f64, g.len()))
            .collect(),
        zero_rank: ev.iter().filter(|&&x| x <= ZERO_THRESHOLD).count(),
        tol,
    }
}

/// Smallest eigenvalue of the partial transpose on B.
pub fn ppt_min_eigenvalue(rho: &DensityMatrix) -> Result<f64> {
    let dims = rho.bipartite_dims()?;
    let pt = partial_transpose(rho.matrix(), dims, Subsystem::B)?;
    Ok(eig_hermitian(&pt)?.min_eigenvalue())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Independent,
    SeparableMix,
    Entangled,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub dims: BipartiteDims,
    pub tol: f64,
    /// `||rho - rho_A (x) rho_B||_F`
    pub product_distance: f64,
    pub ppt_min_eigenvalue: f64,
    pub degeneracy: DegeneracyProfile,
    pub s_sys: f64,
    pub s_a: f64,
    pub s_b: f64,
}

/// The positive-partial-transpose test decides separability here.
fn ppt_is_decisive(dims: BipartiteDims) -> bool {
    matches!((dims.a.min(dims.b), dims.a.max(dims.b)), (2, 2) | (2, 3))
}

pub fn classify_state(rho: &DensityMatrix, tol: f64) -> Result<Classification> {
    let dims = rho.bipartite_dims()?;
    let ra = rho.marginal(Subsystem::A)?;
    let rb = rho.marginal(Subsystem::B)?;
    let product_distance = rho.matrix().frobenius_distance(ra.tensor(&rb).matrix());
    let ppt = ppt_min_eigenvalue(rho)?;
    let verdict = if product_distance <= tol {
        Verdict::Independent
    } else if !ppt_is_decisive(dims) {
        Verdict::Undecided
    } else if ppt >= -tol {
        Verdict::SeparableMix
    } else {
        Verdict::Entangled
    };
    Ok(Classification {
        verdict,
        dims,
        tol,
        product_distance,
        ppt_min_eigenvalue: ppt,
        degeneracy: degeneracy_profile(rho, default_degeneracy_tol(rho)),
        s_sys: von_neumann_entropy(rho),
        s_a: von_neumann_entropy(&ra),
        s_b: von_neumann_entropy(&rb),
    })
}

/// Families with closed-form interference residuals.
#[derive(Debug, Clone)]
pub enum Family {
    Paraqubit {
        p_s: f64,
        p_00: f64,
        p_11: f64,
        p_0: f64,
    },
    /// Any weights over the 2x3 coupled basis.
    Paraqutrit(CoupledWeights),
    ParaqutritD {
        d: f64,
    },
}

/// Magnitudes of the off-diagonal blocks that separate the family from a
/// diagonal (classically correlated) matrix in the induced basis.
pub fn disentanglement_residual(family: &Family) -> Result<Vec<f64>> {
    let r23 = 2f64.sqrt() / 3.0;
    match family {
        Family::Paraqubit { p_s, p_00, p_11, p_0 } => {
            crate::states::check_weights([*p_s, *p_00, *p_11, *p_0])?;
            Ok(vec![(p_0 - p_s).abs() / 2.0])
        }
        Family::Paraqutrit(w) => {
            let basis = CoupledBasis::new(BipartiteDims { a: 2, b: 3 })?;
            for (label, _) in w.entries() {
                basis.index_of(label.j, label.m)?;
            }
            let h = HalfInt::from_twice;
            Ok(vec![
                r23 * (w.get(h(3), h(1)) - w.get(h(1), h(1))).abs(),
                r23 * (w.get(h(3), h(-1)) - w.get(h(1), h(-1))).abs(),
            ])
        }
        Family::ParaqutritD { d } => {
            if !(-1.0..=1.0).contains(d) {
                return Err(Error::ParamOutOfRange {
                    name: "d",
                    value: *d,
                    range: "[-1, 1]",
                });
            }
            let w = d_family_weights(*d);
            let h = HalfInt::from_twice;
            Ok(vec![r23 * (w.get(h(3), h(1)) - w.get(h(1), h(1))).abs()])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub d: f64,
    pub s_sys: f64,
    pub s_a: f64,
    pub s_b: f64,
}

/// Entropies of the d-family on `steps` evenly spaced points of `[0, 1]`,
/// computed from the constructed matrices.
pub fn entropy_sweep(steps: usize) -> Result<Vec<SweepRow>> {
    if steps < 2 {
        return Err(Error::ParamOutOfRange {
            name: "steps",
            value: steps as f64,
            range: ">= 2",
        });
    }
    (0..steps)
        .into_par_iter()
        .map(|i| {
            let d = i as f64 / (steps - 1) as f64;
            let rho = paraqutrit_d_family(d)?;
            Ok(SweepRow {
                d,
                s_sys: von_neumann_entropy(&rho),
                s_a: von_neumann_entropy(&rho.marginal(Subsystem::A)?),
                s_b: von_neumann_entropy(&rho.marginal(Subsystem::B)?),
            })
        })
        .collect()
}
