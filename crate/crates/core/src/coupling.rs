//! Angular-momentum style coupling of two subsystems.
//!
//! Subsystem A (dimension `2s+1`) and subsystem B (dimension `2l+1`, `s <= l`)
//! are combined into irreducible blocks `j = l-s, ..., l+s`. Within each
//! subsystem, local index `i` carries projection `s - i` (A) or `l - i` (B),
//! so index 0 is the highest projection. Coupled vectors are
//!
//! ```text
//! |j, m> = sum_{m_s} C_{j,m;m_s} |l, m - m_s>_B (x) |s, m_s>_A
//! ```
//!
//! with Condon-Shortley phases, stored in the induced (A slow, B fast) basis.

use std::fmt;

use crate::error::{Error, Result};
use crate::matcore::{re, BipartiteDims, ComplexMatrix, C64};
use crate::states::{check_weights, DensityMatrix, Dims, StateVector};

/// A half-integer stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn from_twice(twice: i32) -> Self {
        Self(twice)
    }

    pub const fn from_int(n: i32) -> Self {
        Self(2 * n)
    }

    /// Parses `x` if `2x` is an integer (within 1e-9).
    pub fn from_f64(x: f64) -> Result<Self> {
        let twice = (2.0 * x).round();
        if !x.is_finite() || (2.0 * x - twice).abs() > 1e-9 || twice.abs() > i32::MAX as f64 {
            return Err(Error::InvalidLabels(format!("{x} is not a half-integer")));
        }
        Ok(Self(twice as i32))
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub const fn abs(self) -> Self {
        Self(self.0.abs())
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl std::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl std::ops::Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// `n!` as f64. Exact integer arithmetic up to 34!, which covers every
/// argument reached by subsystems of dimension up to 12.
fn factorial(n: i32) -> f64 {
    debug_assert!(n >= 0);
    if n <= 34 {
        (1..=n as u128).product::<u128>() as f64
    } else {
        (35..=n).fold((1..=34u128).product::<u128>() as f64, |acc, k| acc * k as f64)
    }
}

/// Integer value of a sum of half-integers known to be integral.
fn int(h: HalfInt) -> i32 {
    debug_assert!(h.is_integer(), "{h} is not integral");
    h.0 / 2
}

fn sign(n: i32) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn triangle(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
    (a - b).abs() <= c && c <= a + b && (a + b + c).is_integer()
}

/// Wigner 3j symbol by the Racah sum. Returns 0 for projection sets that
/// violate the selection rules (`m1 + m2 + m3 != 0`, `|m_i| > j_i`, triangle).
pub fn wigner_3j(j1: HalfInt, j2: HalfInt, j3: HalfInt, m1: HalfInt, m2: HalfInt, m3: HalfInt) -> f64 {
    if (m1 + m2 + m3).twice() != 0 || !triangle(j1, j2, j3) {
        return 0.0;
    }
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        if m.abs() > j || !(j + m).is_integer() || j.twice() < 0 {
            return 0.0;
        }
    }
    let a = int(j1 + j2 - j3);
    let b = int(j1 - j2 + j3);
    let cc = int(-j1 + j2 + j3);
    let total = int(j1 + j2 + j3) + 1;
    let delta = factorial(a) * factorial(b) * factorial(cc) / factorial(total);
    let norm = [j1 + m1, j1 - m1, j2 + m2, j2 - m2, j3 + m3, j3 - m3]
        .into_iter()
        .map(|x| factorial(int(x)))
        .product::<f64>();

    let t1 = int(j3 - j2 + m1);
    let t2 = int(j3 - j1 - m2);
    let t3 = int(j1 + j2 - j3);
    let t4 = int(j1 - m1);
    let t5 = int(j2 + m2);
    let t_min = 0.max(-t1).max(-t2);
    let t_max = t3.min(t4).min(t5);
    let sum: f64 = (t_min..=t_max)
        .map(|t| {
            sign(t)
                / (factorial(t)
                    * factorial(t1 + t)
                    * factorial(t2 + t)
                    * factorial(t3 - t)
                    * factorial(t4 - t)
                    * factorial(t5 - t))
        })
        .sum();
    sign(int(j1 - j2 - m3)) * (delta * norm).sqrt() * sum
}

/// `C_{j,m;m_s} = <l, m-m_s; s, m_s | j, m>`, written through the 3j symbol as
/// `(-1)^{l-s+m} sqrt(2j+1) (l s j; m-m_s, m_s, -m)`.
///
/// Zero when `|m - m_s| > l`.
pub fn clebsch_gordan(l: HalfInt, s: HalfInt, j: HalfInt, m: HalfInt, m_s: HalfInt) -> Result<f64> {
    let bad = |what: &str| {
        Err(Error::InvalidLabels(format!(
            "l={l} s={s} j={j} m={m} m_s={m_s}: {what}"
        )))
    };
    if l.twice() < 0 || s.twice() < 0 {
        return bad("negative spin");
    }
    if m_s.abs() > s || !(s + m_s).is_integer() {
        return bad("m_s out of range");
    }
    if !triangle(l, s, j) {
        return bad("triangle rule violated");
    }
    if m.abs() > j || !(j + m).is_integer() {
        return bad("m out of range");
    }
    let m_l = m - m_s;
    if m_l.abs() > l {
        return Ok(0.0);
    }
    let phase = sign(int(l - s + m));
    Ok(phase * (j.value() * 2.0 + 1.0).sqrt() * wigner_3j(l, s, j, m_l, m_s, -m))
}

/// `l = (N_B - 1)/2`, `s = (N_A - 1)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinLabels {
    pub l: HalfInt,
    pub s: HalfInt,
}

impl SpinLabels {
    pub fn from_dims(dims: BipartiteDims) -> Result<Self> {
        if dims.a > dims.b {
            return Err(Error::DimOrder { a: dims.a, b: dims.b });
        }
        Ok(Self {
            l: HalfInt::from_twice(dims.b as i32 - 1),
            s: HalfInt::from_twice(dims.a as i32 - 1),
        })
    }

    /// Projection carried by local index `i` of subsystem A.
    pub fn m_s(&self, i: usize) -> HalfInt {
        self.s - HalfInt::from_int(i as i32)
    }

    /// Projection carried by local index `i` of subsystem B.
    pub fn m_l(&self, i: usize) -> HalfInt {
        self.l - HalfInt::from_int(i as i32)
    }

    pub fn a_index(&self, m_s: HalfInt) -> Option<usize> {
        index_for(self.s, m_s)
    }

    pub fn b_index(&self, m_l: HalfInt) -> Option<usize> {
        index_for(self.l, m_l)
    }

    pub fn blocks(&self) -> Vec<HalfInt> {
        let lo = (self.l - self.s).twice();
        let hi = (self.l + self.s).twice();
        (lo..=hi).step_by(2).map(HalfInt::from_twice).collect()
    }
}

fn index_for(spin: HalfInt, m: HalfInt) -> Option<usize> {
    let d = spin - m;
    (m.abs() <= spin && d.is_integer()).then(|| int(d) as usize)
}

/// Label of one coupled basis vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoupledLabel {
    pub j: HalfInt,
    pub m: HalfInt,
}

impl fmt::Display for CoupledLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}>", self.j, self.m)
    }
}

/// The coupled basis `|j, m>` of a bipartite space.
#[derive(Debug, Clone)]
pub struct CoupledBasis {
    pub dims: BipartiteDims,
    pub labels: SpinLabels,
    /// `(j, 2j+1)` for `j = l-s .. l+s`.
    pub blocks: Vec<(HalfInt, usize)>,
    /// Column order of [`unitary`](Self::unitary): blocks ascending in `j`,
    /// `m` descending within a block.
    pub states: Vec<CoupledLabel>,
    /// Columns are the coupled vectors in induced coordinates:
    /// `induced = U coupled`, `coupled = U^dagger induced`.
    pub unitary: ComplexMatrix,
    /// `cg[col][i] = C_{j,m;m_s}` with `m_s` the projection of A-index `i`.
    pub cg: Vec<Vec<f64>>,
}

impl CoupledBasis {
    pub fn new(dims: BipartiteDims) -> Result<Self> {
        let labels = SpinLabels::from_dims(dims)?;
        let mut blocks = Vec::new();
        let mut states = Vec::new();
        for j in labels.blocks() {
            blocks.push((j, j.twice() as usize + 1));
            let mut m = j;
            while m >= -j {
                states.push(CoupledLabel { j, m });
                m = m - HalfInt::from_int(1);
            }
        }
        let mut cg = Vec::with_capacity(states.len());
        let mut columns = Vec::with_capacity(states.len());
        for st in &states {
            let coeffs: Vec<f64> = (0..dims.a)
                .map(|i| clebsch_gordan(labels.l, labels.s, st.j, st.m, labels.m_s(i)))
                .collect::<Result<_>>()?;
            let mut col = vec![re(0.0); dims.total()];
            for (ia, &coef) in coeffs.iter().enumerate() {
                if coef == 0.0 {
                    continue;
                }
                let m_l = st.m - labels.m_s(ia);
                let ib = labels.b_index(m_l).expect("nonzero CG implies |m_l| <= l");
                col[dims.flat(ia, ib)] = re(coef);
            }
            cg.push(coeffs);
            columns.push(col);
        }
        Ok(Self {
            dims,
            labels,
            blocks,
            states,
            unitary: ComplexMatrix::from_columns(&columns),
            cg,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, j: HalfInt, m: HalfInt) -> Result<usize> {
        self.states
            .iter()
            .position(|st| st.j == j && st.m == m)
            .ok_or_else(|| Error::InvalidLabels(format!("|{j},{m}> is not a state of the {} basis", self.dims)))
    }

    pub fn vector(&self, j: HalfInt, m: HalfInt) -> Result<StateVector> {
        let col = self.index_of(j, m)?;
        StateVector::bipartite(self.unitary.column(col), self.dims)
    }

    /// `C_{j,m;m_s}` looked up in the table.
    pub fn coefficient(&self, j: HalfInt, m: HalfInt, m_s: HalfInt) -> Result<f64> {
        let col = self.index_of(j, m)?;
        let ia = self
            .labels
            .a_index(m_s)
            .ok_or_else(|| Error::InvalidLabels(format!("m_s={m_s} out of range")))?;
        Ok(self.cg[col][ia])
    }

    /// `|j,m><j,m|`
    pub fn pure_state(&self, j: HalfInt, m: HalfInt) -> Result<DensityMatrix> {
        Ok(self.vector(j, m)?.to_density())
    }

    /// Weights aligned with column order; labels must belong to this basis.
    fn column_weights(&self, weights: &CoupledWeights) -> Result<Vec<f64>> {
        let mut w = vec![0.0; self.len()];
        for &(label, p) in &weights.entries {
            w[self.index_of(label.j, label.m)?] += p;
        }
        Ok(w)
    }

    /// `sum p_{j,m} |j,m><j,m|`
    pub fn mixture(&self, weights: &CoupledWeights) -> Result<DensityMatrix> {
        let w = self.column_weights(weights)?;
        let n = self.dims.total();
        let mut m = ComplexMatrix::zeros(n, n);
        for (col, &p) in w.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let v = self.unitary.column(col);
            m = &m + &ComplexMatrix::outer(&v, &v).scale_re(p);
        }
        Ok(DensityMatrix::from_parts(m, Dims::Bipartite(self.dims)))
    }

    /// Marginal of A from the closed form `p_n = sum_{j,m} p_{j,m} C^2_{j,m;n}`.
    pub fn predicted_marginal_a(&self, weights: &CoupledWeights) -> Result<Vec<f64>> {
        let w = self.column_weights(weights)?;
        Ok((0..self.dims.a)
            .map(|ia| w.iter().zip(&self.cg).map(|(p, row)| p * row[ia].powi(2)).sum())
            .collect())
    }

    /// Marginal of B from `p_k = sum_{j,m} p_{j,m} C^2_{j,m;m-k}`.
    pub fn predicted_marginal_b(&self, weights: &CoupledWeights) -> Result<Vec<f64>> {
        let w = self.column_weights(weights)?;
        let mut out = vec![0.0; self.dims.b];
        for (col, st) in self.states.iter().enumerate() {
            for (ib, slot) in out.iter_mut().enumerate() {
                let m_s = st.m - self.labels.m_l(ib);
                if let Some(ia) = self.labels.a_index(m_s) {
                    *slot += w[col] * self.cg[col][ia].powi(2);
                }
            }
        }
        Ok(out)
    }

    /// Joint detection table `[i_A][i_B]` from
    /// `P_{k,n} = sum_j p_{j,k+n} C^2_{j,k+n;n}` (n on A, k on B).
    pub fn predicted_joint(&self, weights: &CoupledWeights) -> Result<Vec<Vec<f64>>> {
        let w = self.column_weights(weights)?;
        let mut table = vec![vec![0.0; self.dims.b]; self.dims.a];
        for (ia, row) in table.iter_mut().enumerate() {
            let n = self.labels.m_s(ia);
            for (ib, cell) in row.iter_mut().enumerate() {
                let m = n + self.labels.m_l(ib);
                *cell = self
                    .states
                    .iter()
                    .enumerate()
                    .filter(|(_, st)| st.m == m)
                    .map(|(col, _)| w[col] * self.cg[col][ia].powi(2))
                    .sum();
            }
        }
        Ok(table)
    }
}

/// Nonnegative weights `p_{j,m}` summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledWeights {
    entries: Vec<(CoupledLabel, f64)>,
}

impl CoupledWeights {
    pub fn new(entries: impl IntoIterator<Item = (HalfInt, HalfInt, f64)>) -> Result<Self> {
        let entries: Vec<(CoupledLabel, f64)> = entries
            .into_iter()
            .map(|(j, m, p)| (CoupledLabel { j, m }, p))
            .collect();
        check_weights(entries.iter().map(|e| e.1))?;
        Ok(Self { entries })
    }

    pub fn single(j: HalfInt, m: HalfInt) -> Self {
        Self {
            entries: vec![(CoupledLabel { j, m }, 1.0)],
        }
    }

    pub fn uniform(basis: &CoupledBasis) -> Self {
        let p = 1.0 / basis.len() as f64;
        Self {
            entries: basis.states.iter().map(|&st| (st, p)).collect(),
        }
    }

    pub fn get(&self, j: HalfInt, m: HalfInt) -> f64 {
        self.entries
            .iter()
            .filter(|(st, _)| st.j == j && st.m == m)
            .map(|e| e.1)
            .sum()
    }

    pub fn entries(&self) -> &[(CoupledLabel, f64)] {
        &self.entries
    }
}

pub fn coupled_basis(dims: BipartiteDims) -> Result<CoupledBasis> {
    CoupledBasis::new(dims)
}

/// `|j,m><j,m|` of the coupled basis for `dims`.
pub fn coupled_pure(dims: BipartiteDims, j: HalfInt, m: HalfInt) -> Result<DensityMatrix> {
    CoupledBasis::new(dims)?.pure_state(j, m)
}

/// `sum p_{j,m} |j,m><j,m|`
pub fn coupled_mixture(dims: BipartiteDims, weights: &CoupledWeights) -> Result<DensityMatrix> {
    CoupledBasis::new(dims)?.mixture(weights)
}

/// Point on the Riemann sphere labelling product states of the top block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ManifoldPoint {
    Finite(C64),
    Infinity,
}

impl ManifoldPoint {
    /// `-1/conj(k)`, the diametrically opposite point.
    pub fn antipode(self) -> Self {
        match self {
            ManifoldPoint::Infinity => ManifoldPoint::Finite(re(0.0)),
            ManifoldPoint::Finite(k) if k.norm() == 0.0 => ManifoldPoint::Infinity,
            ManifoldPoint::Finite(k) => ManifoldPoint::Finite(-1.0 / k.conj()),
        }
    }
}

/// Product state inside the top block `j = l + s` for the 2x2 and 2x3 systems.
///
/// 2x2: `a|1,-1> + b|1,0> + c|1,1>` with `a = k^2 c`, `b = sqrt(2) k c`,
/// `c = 1/(1+|k|^2)`. 2x3: `a|3/2,3/2> + b|3/2,1/2> + c|3/2,-1/2> + d|3/2,-3/2>`
/// with `a = k^3 d`, `b = sqrt(3) k^2 d`, `c = sqrt(3) k d`,
/// `d = (1+|k|^2)^{-3/2}`. The point at infinity is the limit of these.
pub fn product_manifold_state(dims: BipartiteDims, point: ManifoldPoint) -> Result<StateVector> {
    let basis = CoupledBasis::new(dims)?;
    let h = HalfInt::from_twice;
    let terms: Vec<(HalfInt, HalfInt, C64)> = match (dims.a, dims.b) {
        (2, 2) => {
            let (a, b, cc) = match point {
                ManifoldPoint::Infinity => (re(1.0), re(0.0), re(0.0)),
                ManifoldPoint::Finite(k) => {
                    let cc = 1.0 / (1.0 + k.norm_sqr());
                    (k * k * cc, k * (2f64.sqrt() * cc), re(cc))
                }
            };
            vec![(h(2), h(-2), a), (h(2), h(0), b), (h(2), h(2), cc)]
        }
        (2, 3) => {
            let (a, b, cc, d) = match point {
                ManifoldPoint::Infinity => (re(1.0), re(0.0), re(0.0), re(0.0)),
                ManifoldPoint::Finite(k) => {
                    let d = (1.0 + k.norm_sqr()).powf(-1.5);
                    let s3 = 3f64.sqrt();
                    (k * k * k * d, k * k * (s3 * d), k * (s3 * d), re(d))
                }
            };
            vec![(h(3), h(3), a), (h(3), h(1), b), (h(3), h(-1), cc), (h(3), h(-3), d)]
        }
        (a, b) => {
            return Err(Error::UnsupportedDims {
                a,
                b,
                what: "product manifold closed forms exist for 2x2 and 2x3 only",
            })
        }
    };
    let mut amps = vec![re(0.0); dims.total()];
    for (j, m, coef) in terms {
        let col = basis.index_of(j, m)?;
        for (slot, v) in amps.iter_mut().zip(basis.unitary.column(col)) {
            *slot += coef * v;
        }
    }
    StateVector::bipartite(amps, dims)
}

/// Paraqubit mix `p_s |s><s| + p_00 |1,1><1,1| + p_11 |1,-1><1,-1| + p_0 |1,0><1,0|`.
///
/// In the induced basis: diagonal `(p_00, (p_0+p_s)/2, (p_0+p_s)/2, p_11)` and
/// `(p_0 - p_s)/2` between `|01>` and `|10>`.
pub fn paraqubit_family(p_s: f64, p_00: f64, p_11: f64, p_0: f64) -> Result<DensityMatrix> {
    let h = HalfInt::from_twice;
    let weights = CoupledWeights::new([
        (h(0), h(0), p_s),
        (h(2), h(2), p_00),
        (h(2), h(-2), p_11),
        (h(2), h(0), p_0),
    ])?;
    coupled_mixture(BipartiteDims { a: 2, b: 2 }, &weights)
}

/// Qubit-qutrit mix `(1+d)/2 |3/2,1/2><3/2,1/2| + (1-d)/2 |1/2,1/2><1/2,1/2|`.
pub fn paraqutrit_d_family(d: f64) -> Result<DensityMatrix> {
    if !(-1.0..=1.0).contains(&d) {
        return Err(Error::ParamOutOfRange {
            name: "d",
            value: d,
            range: "[-1, 1]",
        });
    }
    coupled_mixture(BipartiteDims { a: 2, b: 3 }, &d_family_weights(d))
}

pub(crate) fn d_family_weights(d: f64) -> CoupledWeights {
    let h = HalfInt::from_twice;
    CoupledWeights {
        entries: vec![
            (CoupledLabel { j: h(3), m: h(1) }, (1.0 + d) / 2.0),
            (CoupledLabel { j: h(1), m: h(1) }, (1.0 - d) / 2.0),
        ],
    }
}
