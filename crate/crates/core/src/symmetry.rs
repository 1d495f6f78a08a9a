//! Permutation-symmetry operators on `(C^d)^{⊗3}`.
//!
//! Builds the pairwise (anti)symmetrizers, the totally symmetric /
//! antisymmetric / mixed projectors `S₃`, `A₃`, `M₃` and the two operators
//! `D = S(01) - S(02)` and `A = S(01) + S(02) - 1`, together with the exact
//! integer dimension bookkeeping.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{c64, BasisPermutation, DenseOperator, Party, SpaceLayout};

/// A pair of the three systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pair {
    P01,
    P02,
    P12,
}

/// Symmetric or antisymmetric under a pair exchange.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Exchange {
    Symmetric,
    Antisymmetric,
}

impl Exchange {
    fn sign(self) -> f64 {
        match self {
            Exchange::Symmetric => 1.0,
            Exchange::Antisymmetric => -1.0,
        }
    }
}

const SIX_PERMS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [1, 0, 2],
    [2, 1, 0],
    [0, 2, 1],
    [1, 2, 0],
    [2, 0, 1],
];

fn perm_sign(p: &[usize; 3]) -> f64 {
    let mut inversions = 0;
    for i in 0..3 {
        for j in i + 1..3 {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// The permutation-symmetry operator algebra for one local dimension.
#[derive(Debug)]
pub struct SymmetryToolkit {
    pub d: usize,
    pub t01: BasisPermutation,
    pub t02: BasisPermutation,
    pub t12: BasisPermutation,
    pub s01: DenseOperator,
    pub s02: DenseOperator,
    pub a01: DenseOperator,
    pub a02: DenseOperator,
    /// Projector onto the totally symmetric subspace.
    pub s3: DenseOperator,
    /// Projector onto the totally antisymmetric subspace.
    pub a3: DenseOperator,
    /// Projector onto the mixed-symmetry subspace, `1 - S₃ - A₃`.
    pub m3: DenseOperator,
    /// `D = S(01) - S(02) = (T(01) - T(02)) / 2`
    pub d_op: DenseOperator,
    /// `A = S(01) + S(02) - 1 = (T(01) + T(02)) / 2`
    pub a_op: DenseOperator,
}

impl SymmetryToolkit {
    pub fn dim(&self) -> usize {
        self.d * self.d * self.d
    }

    pub fn swap(&self, pair: Pair) -> &BasisPermutation {
        match pair {
            Pair::P01 => &self.t01,
            Pair::P02 => &self.t02,
            Pair::P12 => &self.t12,
        }
    }

    /// `S(ij)` or `A(ij)`.
    pub fn pair_projector(&self, pair: Pair, kind: Exchange) -> DenseOperator {
        match (pair, kind) {
            (Pair::P01, Exchange::Symmetric) => self.s01.clone(),
            (Pair::P02, Exchange::Symmetric) => self.s02.clone(),
            (Pair::P01, Exchange::Antisymmetric) => self.a01.clone(),
            (Pair::P02, Exchange::Antisymmetric) => self.a02.clone(),
            (Pair::P12, kind) => {
                let n = self.dim();
                let t = self.t12.to_dense();
                (&DenseOperator::identity(n) + &t.scale(kind.sign())).scale(0.5)
            }
        }
    }

    /// `M₃ S(ij)` or `M₃ A(ij)`; a projector since `M₃` is central.
    pub fn mixed_pair(&self, pair: Pair, kind: Exchange) -> DenseOperator {
        let m_t = self.swap(pair).right_mul(&self.m3);
        (&self.m3 + &m_t.scale(kind.sign())).scale(0.5)
    }

    /// `X · S(ij)` (or `A(ij)`) evaluated through the swap's index map.
    pub fn times_pair(&self, x: &DenseOperator, pair: Pair, kind: Exchange) -> DenseOperator {
        let x_t = self.swap(pair).right_mul(x);
        (x + &x_t.scale(kind.sign())).scale(0.5)
    }

    /// `T(12) X T(12)`
    pub fn exchange_references(&self, x: &DenseOperator) -> DenseOperator {
        self.t12.conjugate(x)
    }

    pub fn layout(&self) -> SpaceLayout {
        SpaceLayout::triple(self.d)
    }
}

/// Builds the toolkit for local dimension `d >= 2`.
pub fn build_toolkit(d: usize) -> Result<SymmetryToolkit> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    build_local(d)
}

/// Same as [`build_toolkit`] but admits the trivial `d = 1` factor.
pub(crate) fn build_local(d: usize) -> Result<SymmetryToolkit> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    let dims = [d, d, d];
    let n = d * d * d;
    let mut s3 = DMatrix::zeros(n, n);
    let mut a3 = DMatrix::zeros(n, n);
    for p in &SIX_PERMS {
        let sign = perm_sign(p);
        let perm = BasisPermutation::from_factors(&dims, p)?;
        for (i, &j) in perm.images().iter().enumerate() {
            s3[(j, i)] += c64(1.0 / 6.0);
            a3[(j, i)] += c64(sign / 6.0);
        }
    }
    let s3 = DenseOperator::from_matrix(s3);
    let a3 = DenseOperator::from_matrix(a3);
    let id = DenseOperator::identity(n);
    let m3 = &(&id - &s3) - &a3;

    let t01 = BasisPermutation::from_factors(&dims, &[1, 0, 2])?;
    let t02 = BasisPermutation::from_factors(&dims, &[2, 1, 0])?;
    let t12 = BasisPermutation::from_factors(&dims, &[0, 2, 1])?;
    let t01d = t01.to_dense();
    let t02d = t02.to_dense();
    let s01 = (&id + &t01d).scale(0.5);
    let s02 = (&id + &t02d).scale(0.5);
    let a01 = (&id - &t01d).scale(0.5);
    let a02 = (&id - &t02d).scale(0.5);
    let d_op = (&t01d - &t02d).scale(0.5);
    let a_op = (&t01d + &t02d).scale(0.5);

    let layout = SpaceLayout::triple(d);
    let tag = |op: DenseOperator| op.with_layout(layout.clone());
    Ok(SymmetryToolkit {
        d,
        t01,
        t02,
        t12,
        s01: tag(s01)?,
        s02: tag(s02)?,
        a01: tag(a01)?,
        a02: tag(a02)?,
        s3: tag(s3)?,
        a3: tag(a3)?,
        m3: tag(m3)?,
        d_op: tag(d_op)?,
        a_op: tag(a_op)?,
    })
}

fn cache() -> &'static Mutex<HashMap<usize, Arc<SymmetryToolkit>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SymmetryToolkit>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cached toolkit for `d >= 2`.
pub fn toolkit(d: usize) -> Result<Arc<SymmetryToolkit>> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    cached(d)
}

fn cached(d: usize) -> Result<Arc<SymmetryToolkit>> {
    if let Some(t) = cache().lock().expect("toolkit cache poisoned").get(&d) {
        return Ok(Arc::clone(t));
    }
    // built outside the lock; concurrent builders agree, first insert wins
    let built = Arc::new(build_local(d)?);
    let mut guard = cache().lock().expect("toolkit cache poisoned");
    Ok(Arc::clone(guard.entry(d).or_insert(built)))
}

/// Exact subspace dimensions for local dimension `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct DimensionTable {
    pub d: u64,
    /// `d_n = C(n+d-1, d-1)` for n = 1, 2, 3.
    pub d1: u64,
    pub d2: u64,
    pub d3: u64,
    pub dim_vs: u64,
    pub dim_va: u64,
    pub dim_vm: u64,
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Symmetric-subspace dimension `C(n+d-1, d-1)`.
pub fn sym_dim(n: u64, d: u64) -> u64 {
    binomial(n + d - 1, d - 1)
}

pub fn dimension_table(d: u64) -> DimensionTable {
    let dim_vs = d * (d + 1) * (d + 2) / 6;
    let dim_va = if d >= 2 { d * (d - 1) * (d - 2) / 6 } else { 0 };
    let dim_vm = 2 * d * (d * d - 1) / 3;
    DimensionTable {
        d,
        d1: sym_dim(1, d),
        d2: sym_dim(2, d),
        d3: sym_dim(3, d),
        dim_vs,
        dim_va,
        dim_vm,
    }
}

/// Both sides of the bipartite mixed-subspace dimension identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct DimRelation {
    pub d_a: u64,
    pub d_b: u64,
    pub lhs: i64,
    pub rhs: i64,
    pub residual: i64,
}

/// `dim V_M(d_a d_b)` against `S_a M_b + A_a M_b + M_a S_b + M_a A_b + M_a M_b / 2`.
pub fn check_dim_relation(d_a: u64, d_b: u64) -> DimRelation {
    let a = dimension_table(d_a);
    let b = dimension_table(d_b);
    let whole = dimension_table(d_a * d_b);
    let mm = a.dim_vm * b.dim_vm;
    debug_assert_eq!(mm % 2, 0);
    let rhs = a.dim_vs * b.dim_vm
        + a.dim_va * b.dim_vm
        + a.dim_vm * b.dim_vs
        + a.dim_vm * b.dim_va
        + mm / 2;
    let lhs = whole.dim_vm as i64;
    let rhs = rhs as i64;
    DimRelation {
        d_a,
        d_b,
        lhs,
        rhs,
        residual: lhs - rhs,
    }
}

/// Local toolkits of Alice and Bob plus the regrouping from system-major
/// `(0a,0b,1a,1b,2a,2b)` to party-major `(0a,1a,2a,0b,1b,2b)` order.
#[derive(Debug, Clone)]
pub struct BipartiteToolkit {
    pub d_a: usize,
    pub d_b: usize,
    pub alice: Arc<SymmetryToolkit>,
    pub bob: Arc<SymmetryToolkit>,
    /// `R` with `R X_sys R† = X_party`.
    pub regroup: BasisPermutation,
}

impl BipartiteToolkit {
    pub fn local(&self, party: Party) -> &SymmetryToolkit {
        match party {
            Party::Bob => &self.bob,
            _ => &self.alice,
        }
    }

    pub fn local_dim(&self, party: Party) -> usize {
        match party {
            Party::Bob => self.d_b,
            _ => self.d_a,
        }
    }

    /// Party-major operator to system-major order: `R† X R`.
    pub fn to_system_major(&self, x: &DenseOperator) -> DenseOperator {
        self.regroup.inverse().conjugate(x)
    }

    /// System-major operator to party-major order: `R X R†`.
    pub fn to_party_major(&self, x: &DenseOperator) -> DenseOperator {
        self.regroup.conjugate(x)
    }

    pub fn joint_dim(&self) -> usize {
        (self.d_a * self.d_b).pow(3)
    }
}

pub fn bipartite_toolkit(d_a: usize, d_b: usize) -> Result<BipartiteToolkit> {
    if d_a == 0 || d_b == 0 || (d_a < 2 && d_b < 2) {
        return Err(Error::InvalidDimension(d_a.min(d_b)));
    }
    let sys = SpaceLayout::system_major(d_a, d_b);
    let party = SpaceLayout::party_major(d_a, d_b);
    Ok(BipartiteToolkit {
        d_a,
        d_b,
        alice: cached(d_a)?,
        bob: cached(d_b)?,
        regroup: crate::linalg::regroup(&sys, &party)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigenvalues, kron};

    fn tr(x: &DenseOperator) -> f64 {
        x.trace().re
    }

    #[test]
    fn rejects_small_d() {
        assert!(build_toolkit(1).is_err());
        assert!(toolkit(0).is_err());
        assert!(bipartite_toolkit(1, 1).is_err());
        assert!(bipartite_toolkit(1, 2).is_ok());
    }

    #[test]
    fn traces_d3() {
        let t = toolkit(3).unwrap();
        assert!((tr(&t.s3) - 10.0).abs() < 1e-10);
        assert!((tr(&t.a3) - 1.0).abs() < 1e-10);
        assert!((tr(&t.m3) - 16.0).abs() < 1e-10);
        let t2 = toolkit(2).unwrap();
        assert!(tr(&t2.a3).abs() < 1e-12);
    }

    #[test]
    fn dimension_tables() {
        let t = dimension_table(2);
        assert_eq!((t.d1, t.d2, t.d3), (2, 3, 4));
        assert_eq!((t.dim_vs, t.dim_va, t.dim_vm), (4, 0, 4));
        assert_eq!(dimension_table(4).dim_vm, 40);
        let t = dimension_table(6);
        assert_eq!((t.dim_vs, t.dim_va, t.dim_vm), (56, 20, 140));
        assert_eq!(t.dim_vs + t.dim_va + t.dim_vm, 216);
        assert_eq!(t.dim_vs, t.d3);
    }

    #[test]
    fn dim_relation_examples() {
        let r = check_dim_relation(2, 2);
        assert_eq!((r.lhs, r.rhs, r.residual), (40, 40, 0));
        let r = check_dim_relation(2, 3);
        assert_eq!((r.lhs, r.residual), (140, 0));
        assert_eq!(check_dim_relation(3, 3).residual, 0);
    }

    #[test]
    fn d_spectrum_multiplicities() {
        for d in 2..=4usize {
            let t = toolkit(d).unwrap();
            let dims = dimension_table(d as u64);
            let ev = hermitian_eigenvalues(&t.d_op).unwrap();
            let h = 3f64.sqrt() / 2.0;
            let plus = ev.iter().filter(|&&l| (l - h).abs() < 1e-9).count() as u64;
            let minus = ev.iter().filter(|&&l| (l + h).abs() < 1e-9).count() as u64;
            let zero = ev.iter().filter(|&&l| l.abs() < 1e-9).count() as u64;
            assert_eq!(plus, dims.dim_vm / 2);
            assert_eq!(minus, dims.dim_vm / 2);
            assert_eq!(zero, dims.dim_vs + dims.dim_va);
        }
    }

    #[test]
    fn mixed_pair_is_projector() {
        let t = toolkit(3).unwrap();
        for pair in [Pair::P01, Pair::P02, Pair::P12] {
            for kind in [Exchange::Symmetric, Exchange::Antisymmetric] {
                let p = t.mixed_pair(pair, kind);
                assert!(p.is_projector(1e-10));
                let direct = &t.m3 * &t.pair_projector(pair, kind);
                assert!(p.max_abs_diff(&direct) < 1e-12);
            }
        }
    }

    #[test]
    fn bipartite_d_identity_2_2() {
        let bt = bipartite_toolkit(2, 2).unwrap();
        let g = toolkit(4).unwrap();
        let (a, b) = (&bt.alice, &bt.bob);
        let d_local = &kron(&a.d_op, &b.a_op) + &kron(&a.a_op, &b.d_op);
        let a_local = &kron(&a.d_op, &b.d_op) + &kron(&a.a_op, &b.a_op);
        assert!(bt.to_system_major(&d_local).max_abs_diff(&g.d_op) < 1e-10);
        assert!(bt.to_system_major(&a_local).max_abs_diff(&g.a_op) < 1e-10);
    }

    #[test]
    fn trivial_party_toolkit() {
        let bt = bipartite_toolkit(1, 2).unwrap();
        assert_eq!(bt.alice.dim(), 1);
        assert!((tr(&bt.alice.s3) - 1.0).abs() < 1e-15);
        assert!(bt.alice.m3.max_abs() < 1e-15);
    }
}
