//! Projective measurement: Born probabilities, state reduction by an analyzer,
//! bipartite joint statistics and seeded sampling of detector clicks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{tensor, BipartiteDims, ComplexMatrix};
use crate::states::{qubit_pure, BlochParams, DensityMatrix, Dims};

/// Tolerance for orthogonality, idempotence and completeness of analyzers.
pub const ANALYZER_TOL: f64 = 1e-10;
/// Probabilities down to this value are treated as rounding and clipped.
pub const NEGATIVE_CLIP: f64 = 1e-12;

const SHOT_CHUNK: u64 = 1 << 16;

/// A complete set of orthogonal projectors.
#[derive(Debug, Clone)]
pub struct Analyzer {
    projectors: Vec<ComplexMatrix>,
    ranks: Vec<usize>,
    dim: usize,
}

impl Analyzer {
    pub fn new(projectors: Vec<ComplexMatrix>) -> Result<Self> {
        let first = projectors
            .first()
            .ok_or_else(|| Error::IncompleteAnalyzer("no projectors".into()))?;
        let dim = first.rows();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        let mut ranks = Vec::with_capacity(projectors.len());
        for (k, p) in projectors.iter().enumerate() {
            if !p.is_square() || p.rows() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: p.rows().max(p.cols()),
                });
            }
            if p.hermiticity_residual() > ANALYZER_TOL {
                return Err(Error::IncompleteAnalyzer(format!("projector {k} is not Hermitian")));
            }
            for (m, q) in projectors.iter().enumerate().skip(k) {
                let prod = p.matmul(q);
                let want = if m == k {
                    p.clone()
                } else {
                    ComplexMatrix::zeros(dim, dim)
                };
                if prod.max_abs_diff(&want) > ANALYZER_TOL {
                    let what = if m == k {
                        format!("projector {k} is not idempotent")
                    } else {
                        format!("projectors {k} and {m} are not orthogonal")
                    };
                    return Err(Error::IncompleteAnalyzer(what));
                }
            }
            ranks.push(p.trace().re.round() as usize);
            sum = &sum + p;
        }
        if sum.max_abs_diff(&ComplexMatrix::identity(dim)) > ANALYZER_TOL {
            return Err(Error::IncompleteAnalyzer(
                "projectors do not sum to the identity".into(),
            ));
        }
        Ok(Self { projectors, ranks, dim })
    }

    /// Rank-one analyzer onto the columns of a unitary `basis`.
    pub fn from_basis(basis: &ComplexMatrix) -> Result<Self> {
        let projectors = (0..basis.cols())
            .map(|k| {
                let v = basis.column(k);
                ComplexMatrix::outer(&v, &v)
            })
            .collect();
        Self::new(projectors)
    }

    /// Analyzer of the computational basis.
    pub fn standard(n: usize) -> Self {
        Self::from_basis(&ComplexMatrix::identity(n)).expect("identity columns form a complete analyzer")
    }

    /// Qubit analyzer `{rho(theta, phi), I - rho(theta, phi)}`.
    pub fn qubit(params: BlochParams) -> Self {
        let p0 = qubit_pure(params).into_matrix();
        let p1 = &ComplexMatrix::identity(2) - &p0;
        Self::new(vec![p0, p1]).expect("qubit projector pair is complete")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: n,
            });
        }
        Ok(())
    }

    fn require_rank_one(&self) -> Result<()> {
        match self.ranks.iter().position(|&r| r != 1) {
            Some(index) => Err(Error::AmbiguousAnalyzer {
                index,
                rank: self.ranks[index],
            }),
            None => Ok(()),
        }
    }
}

/// `Re tr(A B)` without forming the product.
fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

/// Clips rounding-level negatives to zero and renormalizes.
fn clean_probabilities(mut p: Vec<f64>) -> Result<Vec<f64>> {
    for x in p.iter_mut() {
        if *x < -NEGATIVE_CLIP {
            return Err(Error::NegativeProbability { value: *x });
        }
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    Ok(p)
}

/// `p_k = tr(P_k rho)`
pub fn born_probabilities(rho: &DensityMatrix, analyzer: &Analyzer) -> Result<Vec<f64>> {
    analyzer.check_dim(rho.dim())?;
    let p = analyzer
        .projectors
        .iter()
        .map(|proj| trace_product(proj, rho.matrix()))
        .collect();
    clean_probabilities(p)
}

/// `sum_k P_k rho P_k`
pub fn reduce_general(rho: &DensityMatrix, analyzer: &Analyzer) -> Result<DensityMatrix> {
    analyzer.check_dim(rho.dim())?;
    let n = rho.dim();
    let mut out = ComplexMatrix::zeros(n, n);
    for p in &analyzer.projectors {
        out = &out + &p.matmul(rho.matrix()).matmul(p);
    }
    Ok(DensityMatrix::from_parts(out.hermitian_part(), rho.dims()))
}

/// White-noise form of qubit reduction.
///
/// Returns the reduced state `(1-|p|) I/2 + |p| rho'` and the signed weight
/// `p = 2 <theta,phi|rho|theta,phi> - 1`, where `rho'` is `rho(theta,phi)` for
/// `p >= 0` and the orthogonal projector otherwise.
pub fn reduce_qubit(rho: &DensityMatrix, params: BlochParams) -> Result<(DensityMatrix, f64)> {
    if rho.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            found: rho.dim(),
        });
    }
    let pure = qubit_pure(params).into_matrix();
    let p = 2.0 * trace_product(&pure, rho.matrix()) - 1.0;
    let eye = ComplexMatrix::identity(2);
    let target = if p >= 0.0 { pure } else { &eye - &pure };
    let m = &eye.scale_re((1.0 - p.abs()) / 2.0) + &target.scale_re(p.abs());
    Ok((DensityMatrix::from_parts(m, Dims::Single(2)), p))
}

/// `table[m][n] = tr(rho P^A_m (x) P^B_n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDistribution {
    pub dims: BipartiteDims,
    pub table: Vec<Vec<f64>>,
}

impl JointDistribution {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        let a = table.len();
        let b = table.first().map_or(0, Vec::len);
        let dims = BipartiteDims::new(a, b)?;
        if table.iter().any(|row| row.len() != b) {
            return Err(Error::BadShape {
                expected: a * b,
                found: table.iter().map(Vec::len).sum(),
            });
        }
        let flat = clean_probabilities(table.into_iter().flatten().collect())?;
        Ok(Self {
            dims,
            table: flat.chunks(b).map(<[f64]>::to_vec).collect(),
        })
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.table[m][n]
    }
}

pub fn joint_distribution(
    rho: &DensityMatrix,
    analyzer_a: &Analyzer,
    analyzer_b: &Analyzer,
) -> Result<JointDistribution> {
    let dims = rho.bipartite_dims()?;
    analyzer_a.check_dim(dims.a)?;
    analyzer_b.check_dim(dims.b)?;
    let table = analyzer_a
        .projectors
        .iter()
        .map(|pa| {
            analyzer_b
                .projectors
                .iter()
                .map(|pb| trace_product(&tensor(pa, pb), rho.matrix()))
                .collect()
        })
        .collect();
    JointDistribution::new(table)
}

/// Marginals and conditionals of a joint table. Conditionals on zero-probability
/// events are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Correlations {
    pub marginal_a: Vec<f64>,
    pub marginal_b: Vec<f64>,
    /// `a_given_b[k][n] = P(A = k | B = n)`
    pub a_given_b: Vec<Vec<Option<f64>>>,
    /// `b_given_a[k][n] = P(B = n | A = k)`
    pub b_given_a: Vec<Vec<Option<f64>>>,
}

pub fn conditional_and_marginals(joint: &JointDistribution) -> Correlations {
    let BipartiteDims { a, b } = joint.dims;
    let t = &joint.table;
    let marginal_a: Vec<f64> = t.iter().map(|row| row.iter().sum()).collect();
    let marginal_b: Vec<f64> = (0..b).map(|n| t.iter().map(|row| row[n]).sum()).collect();
    let cond = |num: f64, den: f64| (den > 0.0).then(|| num / den);
    Correlations {
        a_given_b: (0..a)
            .map(|k| (0..b).map(|n| cond(t[k][n], marginal_b[n])).collect())
            .collect(),
        b_given_a: (0..a)
            .map(|k| (0..b).map(|n| cond(t[k][n], marginal_a[k])).collect())
            .collect(),
        marginal_a,
        marginal_b,
    }
}

/// Index drawn by inverse CDF from a uniform `u` in `[0, 1)`.
fn inverse_cdf(cdf: &[f64], u: f64) -> usize {
    let k = cdf.partition_point(|&c| c <= u);
    // u beyond the last cumulative value can only come from rounding
    k.min(cdf.len() - 1)
}

/// Multinomial counts for `probs`. Shot `i` consumes the `i`-th `f64` of the
/// ChaCha8 stream `(seed, stream)`, so the result depends only on
/// `(probs, shots, seed, stream)` and not on the thread pool.
pub fn sample_from_probabilities(probs: &[f64], shots: u64, seed: u64, stream: u64) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::ParamOutOfRange {
            name: "shots",
            value: 0.0,
            range: ">= 1",
        });
    }
    let probs = clean_probabilities(probs.to_vec())?;
    let mut cdf: Vec<f64> = probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    // outcomes past the last nonzero probability must never be drawn
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    cdf[last..].iter_mut().for_each(|c| *c = f64::INFINITY);

    let chunks = shots.div_ceil(SHOT_CHUNK);
    let k = probs.len();
    let counts = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * SHOT_CHUNK;
            let end = (start + SHOT_CHUNK).min(shots);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            rng.set_word_pos(2 * start as u128);
            let mut local = vec![0u64; k];
            for _ in start..end {
                local[inverse_cdf(&cdf, rng.gen::<f64>())] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; k],
            |mut x, y| {
                x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                x
            },
        );
    Ok(counts)
}

/// Detector click counts for `shots` independent copies of `rho`.
pub fn sample_counts(rho: &DensityMatrix, analyzer: &Analyzer, shots: u64, seed: u64) -> Result<Vec<u64>> {
    analyzer.require_rank_one()?;
    let p = born_probabilities(rho, analyzer)?;
    sample_from_probabilities(&p, shots, seed, 0)
}

/// Joint click counts `[m][n]` for a bipartite source and two local analyzers.
pub fn sample_joint_counts(
    rho: &DensityMatrix,
    analyzer_a: &Analyzer,
    analyzer_b: &Analyzer,
    shots: u64,
    seed: u64,
) -> Result<Vec<Vec<u64>>> {
    analyzer_a.require_rank_one()?;
    analyzer_b.require_rank_one()?;
    let joint = joint_distribution(rho, analyzer_a, analyzer_b)?;
    let flat: Vec<f64> = joint.table.iter().flatten().copied().collect();
    let counts = sample_from_probabilities(&flat, shots, seed, 0)?;
    Ok(counts.chunks(joint.dims.b).map(<[u64]>::to_vec).collect())
}
