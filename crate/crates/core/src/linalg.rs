//! Dense complex linear algebra on tensor-product spaces.
//!
//! Every operator in this crate is a [`DenseOperator`]: a square complex
//! matrix, optionally tagged with the [`SpaceLayout`] it acts on. The global
//! basis index is the mixed-radix number over the layout factors in declared
//! order, most significant factor first. Permutations of tensor factors are
//! kept both as index maps ([`BasisPermutation`]) and, on demand, as dense
//! 0/1 matrices.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Relative hermiticity tolerance used by [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Default sign-classification tolerance for eigenvalues.
pub const CLASSIFY_TOL: f64 = 1e-9;
/// Eigenvalues below `-PSD_FLOOR` make an operator non-positive.
pub const PSD_FLOOR: f64 = 1e-10;

#[inline]
pub fn c64(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Which party holds a tensor factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Whole,
    Alice,
    Bob,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Whole => "whole",
            Party::Alice => "alice",
            Party::Bob => "bob",
        })
    }
}

/// One tensor factor: a system (0 = input, 1 and 2 = references), the party
/// holding it, and its local dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Factor {
    pub system: u8,
    pub party: Party,
    pub dim: usize,
}

impl Factor {
    pub fn new(system: u8, party: Party, dim: usize) -> Self {
        Self { system, party, dim }
    }
}

/// Ordered tensor-factor structure of a three-system space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpaceLayout {
    factors: Vec<Factor>,
}

impl SpaceLayout {
    /// Validates that systems 0, 1, 2 each appear exactly once, or twice as an
    /// Alice/Bob pair.
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        for system in 0..3u8 {
            let parties: Vec<Party> = factors
                .iter()
                .filter(|f| f.system == system)
                .map(|f| f.party)
                .collect();
            let ok = match parties.as_slice() {
                [_] => true,
                [a, b] => {
                    (*a == Party::Alice && *b == Party::Bob)
                        || (*a == Party::Bob && *b == Party::Alice)
                }
                _ => false,
            };
            if !ok {
                return Err(Error::InvalidLayout(format!(
                    "system {system} appears with parties {parties:?}"
                )));
            }
        }
        if factors.iter().any(|f| f.system > 2) {
            return Err(Error::InvalidLayout("system id must be 0, 1 or 2".into()));
        }
        if factors.iter().any(|f| f.dim == 0) {
            return Err(Error::InvalidLayout("zero local dimension".into()));
        }
        Ok(Self { factors })
    }

    /// `(C^d)^{⊗3}` with unsplit systems.
    pub fn triple(d: usize) -> Self {
        Self::local_triple(Party::Whole, d)
    }

    /// One party's share of the three systems.
    pub fn local_triple(party: Party, d: usize) -> Self {
        Self {
            factors: (0..3).map(|s| Factor::new(s, party, d)).collect(),
        }
    }

    /// `(0a, 0b, 1a, 1b, 2a, 2b)`: the natural order of the joint d³ space.
    pub fn system_major(d_a: usize, d_b: usize) -> Self {
        let mut factors = Vec::with_capacity(6);
        for s in 0..3 {
            factors.push(Factor::new(s, Party::Alice, d_a));
            factors.push(Factor::new(s, Party::Bob, d_b));
        }
        Self { factors }
    }

    /// `(0a, 1a, 2a, 0b, 1b, 2b)`: Alice's triple followed by Bob's.
    pub fn party_major(d_a: usize, d_b: usize) -> Self {
        let mut factors = Vec::with_capacity(6);
        for (party, d) in [(Party::Alice, d_a), (Party::Bob, d_b)] {
            for s in 0..3 {
                factors.push(Factor::new(s, party, d));
            }
        }
        Self { factors }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    /// Layout obtained by placing old factor `perm[k]` at position `k`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_bijection(perm, self.factors.len())?;
        Ok(Self {
            factors: perm.iter().map(|&p| self.factors[p]).collect(),
        })
    }

    /// The position map taking `self` to `target` (same factors, new order).
    pub fn permutation_to(&self, target: &SpaceLayout) -> Result<Vec<usize>> {
        if self.factors.len() != target.factors.len() {
            return Err(Error::InvalidPermutation(
                "layouts have different factor counts".into(),
            ));
        }
        target
            .factors
            .iter()
            .map(|t| {
                self.factors.iter().position(|f| f == t).ok_or_else(|| {
                    Error::InvalidPermutation(format!("factor {t:?} missing from source"))
                })
            })
            .collect()
    }
}

fn check_bijection(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "expected {n} positions, got {}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidPermutation(format!(
                "{perm:?} is not a bijection"
            )));
        }
        seen[p] = true;
    }
    Ok(())
}

/// A permutation of computational basis states, `P|i⟩ = |images[i]⟩`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisPermutation {
    images: Vec<usize>,
}

impl BasisPermutation {
    pub fn identity(n: usize) -> Self {
        Self {
            images: (0..n).collect(),
        }
    }

    /// Basis map that moves old factor `perm[k]` to position `k`.
    pub fn from_factors(dims: &[usize], perm: &[usize]) -> Result<Self> {
        check_bijection(perm, dims.len())?;
        let n: usize = dims.iter().product();
        let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
        let old_strides = strides(dims);
        let new_strides = strides(&new_dims);
        // stride of old factor f inside the new index
        let mut stride_of_old = vec![0usize; dims.len()];
        for (k, &p) in perm.iter().enumerate() {
            stride_of_old[p] = new_strides[k];
        }
        let images = (0..n)
            .map(|i| {
                dims.iter()
                    .enumerate()
                    .map(|(f, &d)| ((i / old_strides[f]) % d) * stride_of_old[f])
                    .sum()
            })
            .collect();
        Ok(Self { images })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.images.len()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j] = i;
        }
        Self { images: inv }
    }

    /// The map `self ∘ other` (apply `other` first).
    pub fn after(&self, other: &BasisPermutation) -> Self {
        Self {
            images: other.images.iter().map(|&j| self.images[j]).collect(),
        }
    }

    /// Parity of the permutation (+1 or -1).
    pub fn sign(&self) -> i32 {
        let mut visited = vec![false; self.images.len()];
        let mut sign = 1;
        for start in 0..self.images.len() {
            if visited[start] {
                continue;
            }
            let mut len = 0;
            let mut j = start;
            while !visited[j] {
                visited[j] = true;
                j = self.images[j];
                len += 1;
            }
            if len % 2 == 0 {
                sign = -sign;
            }
        }
        sign
    }

    pub fn to_dense(&self) -> DenseOperator {
        let n = self.images.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &j) in self.images.iter().enumerate() {
            m[(j, i)] = c64(1.0);
        }
        DenseOperator::from_matrix(m)
    }

    /// `P · X`
    pub fn left_mul(&self, x: &DenseOperator) -> DenseOperator {
        let n = self.images.len();
        let src = x.matrix();
        let mut out = DMatrix::zeros(n, src.ncols());
        for (i, &j) in self.images.iter().enumerate() {
            out.row_mut(j).copy_from(&src.row(i));
        }
        DenseOperator::from_matrix(out)
    }

    /// `X · P`
    pub fn right_mul(&self, x: &DenseOperator) -> DenseOperator {
        let src = x.matrix();
        let mut out = DMatrix::zeros(src.nrows(), self.images.len());
        for (c, &j) in self.images.iter().enumerate() {
            out.column_mut(c).copy_from(&src.column(j));
        }
        DenseOperator::from_matrix(out)
    }

    /// `P · X · P†`
    pub fn conjugate(&self, x: &DenseOperator) -> DenseOperator {
        let n = self.images.len();
        let src = x.matrix();
        let mut out = DMatrix::zeros(n, n);
        for c in 0..n {
            let jc = self.images[c];
            for r in 0..n {
                out[(self.images[r], jc)] = src[(r, c)];
            }
        }
        DenseOperator::from_matrix(out)
    }

    pub fn apply_vec(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(v.len());
        for (i, &j) in self.images.iter().enumerate() {
            out[j] = v[i];
        }
        out
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Square complex matrix, optionally tagged with the layout it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<C64>,
    layout: Option<SpaceLayout>,
}

impl DenseOperator {
    pub fn from_matrix(matrix: DMatrix<C64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "operator must be square");
        Self {
            matrix,
            layout: None,
        }
    }

    pub fn from_real(n: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), n * n);
        Self::from_matrix(DMatrix::from_row_iterator(
            n,
            n,
            entries.iter().map(|&x| c64(x)),
        ))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_matrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_matrix(DMatrix::zeros(n, n))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let v = DVector::from_iterator(values.len(), values.iter().map(|&x| c64(x)));
        Self::from_matrix(DMatrix::from_diagonal(&v))
    }

    /// `|v⟩⟨v|`
    pub fn outer(v: &DVector<C64>) -> Self {
        Self::from_matrix(v * v.adjoint())
    }

    pub fn with_layout(mut self, layout: SpaceLayout) -> Result<Self> {
        if layout.total_dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: layout.total_dim(),
            });
        }
        self.layout = Some(layout);
        Ok(self)
    }

    pub fn layout(&self) -> Option<&SpaceLayout> {
        self.layout.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            layout: self.layout.clone(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            matrix: self.matrix.map(|z| z * s),
            layout: self.layout.clone(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `tr[self · other]` without forming the product.
    pub fn trace_product(&self, other: &DenseOperator) -> C64 {
        let (a, b) = (&self.matrix, &other.matrix);
        let n = a.nrows();
        let mut acc = c64(0.0);
        for i in 0..n {
            for j in 0..n {
                acc += a[(i, j)] * b[(j, i)];
            }
        }
        acc
    }

    /// `Re ⟨v|self|v⟩`
    pub fn expectation(&self, v: &DVector<C64>) -> f64 {
        v.dotc(&(&self.matrix * v)).re
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.matrix * v
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |M - M†|` entrywise.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let m = &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= HERMITIAN_TOL * self.max_abs()
    }

    /// Hermitian with `max |M² - M| <= tol`.
    pub fn is_projector(&self, tol: f64) -> bool {
        if self.hermiticity_defect() > tol {
            return false;
        }
        let sq = self * self;
        sq.max_abs_diff(self) <= tol
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &DenseOperator) -> DenseOperator {
        &(self * other) - &(other * self)
    }

    /// Restricts to the real part when all imaginary parts vanish exactly.
    fn as_real(&self) -> Option<DMatrix<f64>> {
        if self.matrix.iter().all(|z| z.im == 0.0) {
            Some(self.matrix.map(|z| z.re))
        } else {
            None
        }
    }

    fn merged_layout(&self, other: &DenseOperator) -> Option<SpaceLayout> {
        self.layout.clone().or_else(|| other.layout.clone())
    }
}

impl Add for &DenseOperator {
    type Output = DenseOperator;
    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator {
            matrix: &self.matrix + &rhs.matrix,
            layout: self.merged_layout(rhs),
        }
    }
}

impl Sub for &DenseOperator {
    type Output = DenseOperator;
    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator {
            matrix: &self.matrix - &rhs.matrix,
            layout: self.merged_layout(rhs),
        }
    }
}

impl Mul for &DenseOperator {
    type Output = DenseOperator;
    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator {
            matrix: &self.matrix * &rhs.matrix,
            layout: self.merged_layout(rhs),
        }
    }
}

impl Neg for &DenseOperator {
    type Output = DenseOperator;
    fn neg(self) -> DenseOperator {
        self.scale(-1.0)
    }
}

impl std::iter::Sum for DenseOperator {
    fn sum<I: Iterator<Item = DenseOperator>>(mut iter: I) -> DenseOperator {
        let first = iter.next().expect("sum of an empty operator list");
        iter.fold(first, |acc, x| &acc + &x)
    }
}

/// Kronecker product; the result's factors are `a`'s followed by `b`'s.
pub fn kron(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    let matrix = a.matrix.kronecker(&b.matrix);
    let layout = match (&a.layout, &b.layout) {
        (Some(la), Some(lb)) => {
            let mut factors = la.factors.clone();
            factors.extend_from_slice(&lb.factors);
            SpaceLayout::new(factors).ok()
        }
        _ => None,
    };
    DenseOperator { matrix, layout }
}

/// Kronecker product of state vectors.
pub fn kron_vec(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    a.kronecker(b)
}

/// Eigen-decomposition of a hermitian operator, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, paired with `eigenvalues`.
    pub eigenvectors: DMatrix<C64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, k: usize) -> DVector<C64> {
        self.eigenvectors.column(k).into_owned()
    }

    /// `max_k |H v_k - λ_k v_k|`
    pub fn max_residual(&self, h: &DenseOperator) -> f64 {
        (0..self.len())
            .map(|k| {
                let v = self.vector(k);
                (h.apply(&v) - v.map(|z| z * self.eigenvalues[k]))
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// `max |V†V - 1|`
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.eigenvectors.adjoint() * &self.eigenvectors;
        let n = g.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - c64(target)).norm());
            }
        }
        worst
    }

    /// `Σ f(λ_k) v_k v_k†`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DenseOperator {
        let n = self.eigenvectors.nrows();
        let mut scaled = self.eigenvectors.clone();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= w);
        }
        let m = if n == 0 {
            DMatrix::zeros(0, 0)
        } else {
            scaled * self.eigenvectors.adjoint()
        };
        DenseOperator::from_matrix(m)
    }

    /// Projector onto the span of eigenvectors selected by `keep`.
    pub fn projector_where(&self, keep: impl Fn(f64) -> bool) -> DenseOperator {
        let cols: Vec<usize> = (0..self.len())
            .filter(|&k| keep(self.eigenvalues[k]))
            .collect();
        let n = self.eigenvectors.nrows();
        if cols.is_empty() {
            return DenseOperator::zeros(n);
        }
        let v = self.eigenvectors.select_columns(cols.iter());
        DenseOperator::from_matrix(&v * v.adjoint())
    }
}

/// Full eigendecomposition of a hermitian operator.
///
/// Real symmetric input takes the real solver; eigenvectors are lifted back
/// to complex vectors.
pub fn hermitian_eig(h: &DenseOperator) -> Result<Spectrum> {
    let defect = h.hermiticity_defect();
    let allowed = HERMITIAN_TOL * h.max_abs();
    if defect > allowed {
        return Err(Error::NotHermitian { defect, allowed });
    }
    let n = h.dim();
    let (values, vectors): (Vec<f64>, DMatrix<C64>) = match h.as_real() {
        Some(real) => {
            let sym = (&real + real.transpose()) * 0.5;
            let eig = SymmetricEigen::new(sym);
            (
                eig.eigenvalues.iter().copied().collect(),
                eig.eigenvectors.map(c64),
            )
        }
        None => {
            let herm = (&h.matrix + h.matrix.adjoint()).map(|z| z * 0.5);
            let eig = SymmetricEigen::new(herm);
            (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    let eigenvectors = if n == 0 {
        vectors
    } else {
        vectors.select_columns(order.iter())
    };
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, descending.
pub fn hermitian_eigenvalues(h: &DenseOperator) -> Result<Vec<f64>> {
    let defect = h.hermiticity_defect();
    let allowed = HERMITIAN_TOL * h.max_abs();
    if defect > allowed {
        return Err(Error::NotHermitian { defect, allowed });
    }
    let mut values: Vec<f64> = match h.as_real() {
        Some(real) => {
            let sym = (&real + real.transpose()) * 0.5;
            sym.symmetric_eigenvalues().iter().copied().collect()
        }
        None => {
            let herm = (&h.matrix + h.matrix.adjoint()).map(|z| z * 0.5);
            herm.symmetric_eigenvalues().iter().copied().collect()
        }
    };
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Orthogonal projector onto the eigenvectors of `h` with eigenvalue above `tol`.
pub fn positive_part_projector(h: &DenseOperator, tol: f64) -> Result<DenseOperator> {
    let spec = hermitian_eig(h)?;
    check_band(&spec.eigenvalues, tol)?;
    Ok(spec.projector_where(|l| l > tol))
}

pub(crate) fn check_band(values: &[f64], tol: f64) -> Result<()> {
    let lo = tol / 10.0;
    if let Some(&value) = values.iter().find(|&&l| l >= lo && l <= tol) {
        return Err(Error::AmbiguousEigenvalue { value, lo, hi: tol });
    }
    Ok(())
}

/// Principal square root of a PSD operator; eigenvalues within the floor are
/// clamped to zero.
pub fn psd_sqrt(e: &DenseOperator) -> Result<DenseOperator> {
    let spec = hermitian_eig(e)?;
    if let Some(&low) = spec.eigenvalues.last() {
        if low < -PSD_FLOOR {
            return Err(Error::NotPositive(low));
        }
    }
    Ok(spec.reconstruct_with(|l| l.max(0.0).sqrt()))
}

/// Smallest eigenvalue, or `None` for the empty operator.
pub fn min_eigenvalue(h: &DenseOperator) -> Result<Option<f64>> {
    Ok(hermitian_eigenvalues(h)?.last().copied())
}

/// Dense permutation operator on the space of `layout` moving old factor
/// `perm[k]` to position `k`. Permuted dimensions must match position-wise.
pub fn factor_permutation(layout: &SpaceLayout, perm: &[usize]) -> Result<DenseOperator> {
    let dims = layout.dims();
    check_bijection(perm, dims.len())?;
    for (k, &p) in perm.iter().enumerate() {
        if dims[p] != dims[k] {
            return Err(Error::DimensionMismatch {
                expected: dims[k],
                actual: dims[p],
            });
        }
    }
    BasisPermutation::from_factors(&dims, perm)?
        .to_dense()
        .with_layout(layout.clone())
}

/// Basis permutation `R` mapping the `from` ordering to the `to` ordering,
/// so that `R X R†` re-expresses an operator given in `from` order.
pub fn regroup(from: &SpaceLayout, to: &SpaceLayout) -> Result<BasisPermutation> {
    let perm = from.permutation_to(to)?;
    BasisPermutation::from_factors(&from.dims(), &perm)
}
