//! Unambiguous identification at equal priors.
//!
//! The global optimum is `E₁ = (2/3) M₃ A(02)`, `E₂ = (2/3) M₃ A(01)` with
//! success `(d-1)/(3d)`. The separable family is a six-term sum of local
//! products; its optimum (`α = 2/3`, `β = 1/2`) is reached by an LOCC
//! protocol and falls short of the global value.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigenvalues, kron, kron_vec, min_eigenvalue, DenseOperator, Party, PSD_FLOOR,
};
use crate::minerr::Priors;
use crate::povm::{Label, Povm, PovmElement};
use crate::simulate::haar::HaarSampler;
use crate::simulate::protocol::{Branch, LocalStep, LoccProtocol, ProtocolNode};
use crate::symmetry::{
    bipartite_toolkit, dimension_table, toolkit, Exchange, Pair, SymmetryToolkit,
};

/// Bound on `‖E₁S(02)‖`, `‖E₂S(01)‖` and the exchange-symmetry defects.
pub const NO_ERROR_TOL: f64 = 1e-10;
/// Beyond this, `unamb_success` refuses to evaluate.
pub const NO_ERROR_REJECT: f64 = 1e-8;
const COEFF_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UnambKind {
    Global,
    Separable,
}

/// Three-outcome POVM on the joint system-major space of local dimension
/// `d_a · d_b` (a global POVM has `d_b = 1`).
#[derive(Clone, Debug)]
pub struct UnambPovm {
    pub e1: DenseOperator,
    pub e2: DenseOperator,
    pub e0: DenseOperator,
    pub kind: UnambKind,
    pub d_a: usize,
    pub d_b: usize,
}

impl UnambPovm {
    pub fn from_parts(
        e1: DenseOperator,
        e2: DenseOperator,
        e0: DenseOperator,
        kind: UnambKind,
        d_a: usize,
        d_b: usize,
    ) -> Result<Self> {
        let n = (d_a * d_b).pow(3);
        for e in [&e1, &e2, &e0] {
            if e.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: e.dim(),
                });
            }
        }
        Ok(Self {
            e1,
            e2,
            e0,
            kind,
            d_a,
            d_b,
        })
    }

    /// Joint local dimension `d = d_a d_b`.
    pub fn d(&self) -> usize {
        self.d_a * self.d_b
    }

    pub fn element(&self, label: Label) -> &DenseOperator {
        match label {
            Label::First => &self.e1,
            Label::Second => &self.e2,
            Label::Inconclusive => &self.e0,
        }
    }

    pub fn completeness_defect(&self) -> f64 {
        let sum = &(&self.e1 + &self.e2) + &self.e0;
        sum.max_abs_diff(&DenseOperator::identity(sum.dim()))
    }

    /// Smallest eigenvalue over the three elements.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let mut low = f64::INFINITY;
        for e in [&self.e1, &self.e2, &self.e0] {
            if let Some(v) = min_eigenvalue(e)? {
                low = low.min(v);
            }
        }
        Ok(low)
    }

    /// Frobenius norms of `E₁S(02)` and `E₂S(01)`.
    pub fn no_error_defects(&self) -> Result<(f64, f64)> {
        let t = toolkit(self.d())?;
        Ok((
            t.times_pair(&self.e1, Pair::P02, Exchange::Symmetric)
                .frobenius_norm(),
            t.times_pair(&self.e2, Pair::P01, Exchange::Symmetric)
                .frobenius_norm(),
        ))
    }

    /// `max(‖T E₁ T - E₂‖, ‖T E₀ T - E₀‖)` with `T = T(12)`.
    pub fn exchange_defect(&self) -> Result<f64> {
        let t = toolkit(self.d())?;
        Ok(t.exchange_references(&self.e1)
            .max_abs_diff(&self.e2)
            .max(t.exchange_references(&self.e0).max_abs_diff(&self.e0)))
    }

    /// Largest `‖[E_μ, W^{⊗3}]‖` over the given local unitaries, where `W` is
    /// `u` (global) or `u ⊗ v` for each `(u, v)` (separable).
    pub fn unitary_commutator_defect(&self, frames: &[(DenseOperator, DenseOperator)]) -> f64 {
        let mut worst: f64 = 0.0;
        for (u, v) in frames {
            let w = match self.kind {
                UnambKind::Global => u.clone(),
                UnambKind::Separable => kron(u, v),
            };
            let w3 = kron(&kron(&w, &w), &w);
            for e in [&self.e1, &self.e2, &self.e0] {
                worst = worst.max(e.commutator(&w3).max_abs());
            }
        }
        worst
    }

    /// Labels "1", "2", "0"; PSD and completeness are checked.
    pub fn to_povm(&self) -> Result<Povm> {
        Povm::complete(vec![
            PovmElement::new("1", self.e1.clone()),
            PovmElement::new("2", self.e2.clone()),
            PovmElement::new("0", self.e0.clone()),
        ])
    }
}

/// `(d-1)/(3d)`
pub fn pmax_unamb_global(d: u64) -> f64 {
    let d = d as f64;
    (d - 1.0) / (3.0 * d)
}

/// `(11 d_a² d_b² + d_a² + d_b² - 13) / (36 d_a d_b (d_a d_b + 1))`
pub fn pmax_unamb_locc(d_a: u64, d_b: u64) -> f64 {
    let (a, b) = (d_a as f64, d_b as f64);
    (11.0 * a * a * b * b + a * a + b * b - 13.0) / (36.0 * a * b * (a * b + 1.0))
}

pub fn global_unamb_povm(d: usize) -> Result<UnambPovm> {
    let t = toolkit(d)?;
    let e1 = t
        .mixed_pair(Pair::P02, Exchange::Antisymmetric)
        .scale(2.0 / 3.0);
    let e2 = t
        .mixed_pair(Pair::P01, Exchange::Antisymmetric)
        .scale(2.0 / 3.0);
    let e0 = inconclusive_global(&t);
    UnambPovm::from_parts(e1, e2, e0, UnambKind::Global, d, 1)
}

/// `(1/3) M₃ (1 + 2A) + S₃ + A₃`
fn inconclusive_global(t: &SymmetryToolkit) -> DenseOperator {
    let m_a = &t.m3 * &t.a_op;
    let mixed = (&t.m3 + &m_a.scale(2.0)).scale(1.0 / 3.0);
    &(&mixed + &t.s3) + &t.a3
}

/// `(1/(2 d₂ d₁)) (tr[E₁ S(01)] + tr[E₂ S(02)])`
pub fn unamb_success(povm: &UnambPovm) -> Result<f64> {
    let (n1, n2) = povm.no_error_defects()?;
    if n1 > NO_ERROR_REJECT {
        return Err(Error::NoErrorViolated {
            which: "E1 S(02)",
            norm: n1,
        });
    }
    if n2 > NO_ERROR_REJECT {
        return Err(Error::NoErrorViolated {
            which: "E2 S(01)",
            norm: n2,
        });
    }
    let t = toolkit(povm.d())?;
    let tr1 = t
        .times_pair(&povm.e1, Pair::P01, Exchange::Symmetric)
        .trace()
        .re;
    let tr2 = t
        .times_pair(&povm.e2, Pair::P02, Exchange::Symmetric)
        .trace()
        .re;
    let table = dimension_table(povm.d() as u64);
    Ok((tr1 + tr2) / (2.0 * (table.d2 * table.d1) as f64))
}

/// Coefficients of the separable family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeparableCoeffs {
    pub alpha: [f64; 4],
    pub beta1: f64,
    pub beta2: f64,
}

impl SeparableCoeffs {
    /// `α = 2/3`, `β₁ = β₂ = 1/2`.
    pub fn optimal() -> Self {
        Self {
            alpha: [2.0 / 3.0; 4],
            beta1: 0.5,
            beta2: 0.5,
        }
    }

    pub fn zero() -> Self {
        Self {
            alpha: [0.0; 4],
            beta1: 0.0,
            beta2: 0.0,
        }
    }

    pub fn beta(&self) -> f64 {
        0.5 * (self.beta1 + self.beta2)
    }

    pub fn delta(&self) -> f64 {
        0.5 * (self.beta1 - self.beta2)
    }

    pub fn validate(&self) -> Result<()> {
        let all = self.alpha.iter().chain([&self.beta1, &self.beta2]);
        for (k, &c) in all.enumerate() {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::Infeasible {
                    constraint: format!("coefficient {k} >= 0"),
                    value: c,
                    bound: 0.0,
                });
            }
        }
        for (k, &a) in self.alpha.iter().enumerate() {
            if a > 2.0 / 3.0 + COEFF_SLACK {
                return Err(Error::Infeasible {
                    constraint: format!("alpha{} <= 2/3", k + 1),
                    value: a,
                    bound: 2.0 / 3.0,
                });
            }
        }
        let f = beta_feasibility(self.beta1, self.beta2);
        if !f.feasible {
            return Err(Error::Infeasible {
                constraint: "5/4 beta + sqrt(9/16 beta^2 + delta^2) <= 1".into(),
                value: f.gamma_plus,
                bound: 1.0,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BetaFeasibility {
    pub gamma_plus: f64,
    pub feasible: bool,
}

/// `γ₊ = (5/4)β + √((9/16)β² + δ²)`; feasible iff `γ₊ ≤ 1`.
pub fn beta_feasibility(beta1: f64, beta2: f64) -> BetaFeasibility {
    let beta = 0.5 * (beta1 + beta2);
    let delta = 0.5 * (beta1 - beta2);
    let gamma_plus = 1.25 * beta + (0.5625 * beta * beta + delta * delta).sqrt();
    BetaFeasibility {
        gamma_plus,
        feasible: gamma_plus <= 1.0 + COEFF_SLACK,
    }
}

/// Largest eigenvalue of
/// `X = β₁(S(02)⊗A(02) + S(01)⊗A(01)) + β₂(A(02)⊗S(02) + A(01)⊗S(01))`
/// restricted to `V_M ⊗ V_M`, assembled explicitly in party-major order.
pub fn x_operator_max_eigenvalue(d_a: usize, d_b: usize, beta1: f64, beta2: f64) -> Result<f64> {
    let bt = bipartite_toolkit(d_a, d_b)?;
    let (a, b) = (&bt.alice, &bt.bob);
    let x = [
        kron(&a.s02, &b.a02).scale(beta1),
        kron(&a.s01, &b.a01).scale(beta1),
        kron(&a.a02, &b.s02).scale(beta2),
        kron(&a.a01, &b.s01).scale(beta2),
    ]
    .into_iter()
    .sum::<DenseOperator>();
    let mm = kron(&a.m3, &b.m3);
    let x_m = &(&mm * &x) * &mm;
    Ok(hermitian_eigenvalues(&x_m)?.first().copied().unwrap_or(0.0))
}

/// Six-term `E₁ᴸ` in party-major order.
fn separable_e1_party_major(
    a: &SymmetryToolkit,
    b: &SymmetryToolkit,
    c: &SeparableCoeffs,
) -> DenseOperator {
    use Exchange::{Antisymmetric as Anti, Symmetric as Sym};
    let mp = |t: &SymmetryToolkit, kind| t.mixed_pair(Pair::P02, kind);
    [
        kron(&a.s3, &mp(b, Anti)).scale(c.alpha[0]),
        kron(&a.a3, &mp(b, Sym)).scale(c.alpha[1]),
        kron(&mp(a, Sym), &b.a3).scale(c.alpha[2]),
        kron(&mp(a, Anti), &b.s3).scale(c.alpha[3]),
        kron(&mp(a, Sym), &mp(b, Anti)).scale(c.beta1),
        kron(&mp(a, Anti), &mp(b, Sym)).scale(c.beta2),
    ]
    .into_iter()
    .sum()
}

/// Separable POVM; `E₀ᴸ ≥ 0` is verified by a full eigensolve.
pub fn separable_unamb_povm(d_a: usize, d_b: usize, coeffs: SeparableCoeffs) -> Result<UnambPovm> {
    coeffs.validate()?;
    let bt = bipartite_toolkit(d_a, d_b)?;
    let joint = toolkit(d_a * d_b)?;
    let e1 = bt.to_system_major(&separable_e1_party_major(&bt.alice, &bt.bob, &coeffs));
    let e2 = joint.exchange_references(&e1);
    let n = e1.dim();
    let e0 = &(&DenseOperator::identity(n) - &e1) - &e2;
    if let Some(low) = min_eigenvalue(&e0)? {
        if low < -PSD_FLOOR {
            return Err(Error::Infeasible {
                constraint: "E0 >= 0".into(),
                value: low,
                bound: 0.0,
            });
        }
    }
    UnambPovm::from_parts(e1, e2, e0, UnambKind::Separable, d_a, d_b)
}

/// `tr[E₁ᴸ S(01)]` from dimensions alone:
/// `(3/8)(α₁ S_a M_b + α₂ A_a M_b + α₃ M_a A_b + α₄ M_a S_b) + (3/32)(β₁+β₂) M_a M_b`.
pub fn separable_trace_formula(d_a: u64, d_b: u64, c: &SeparableCoeffs) -> f64 {
    let (ta, tb) = (dimension_table(d_a), dimension_table(d_b));
    let (sa, aa, ma) = (ta.dim_vs as f64, ta.dim_va as f64, ta.dim_vm as f64);
    let (sb, ab, mb) = (tb.dim_vs as f64, tb.dim_va as f64, tb.dim_vm as f64);
    0.375
        * (c.alpha[0] * sa * mb
            + c.alpha[1] * aa * mb
            + c.alpha[2] * ma * ab
            + c.alpha[3] * ma * sb)
        + 0.09375 * (c.beta1 + c.beta2) * ma * mb
}

/// `tr[E₁ S(01)]` evaluated directly on the joint space.
pub fn direct_trace_e1_s01(povm: &UnambPovm) -> Result<f64> {
    let t = toolkit(povm.d())?;
    Ok(t.times_pair(&povm.e1, Pair::P01, Exchange::Symmetric)
        .trace()
        .re)
}

fn complete_step(
    party: Party,
    elements: Vec<(&str, DenseOperator)>,
    support: &DenseOperator,
) -> Result<LocalStep> {
    let elements = elements
        .into_iter()
        .map(|(l, e)| PovmElement::new(l, e))
        .collect();
    LocalStep::new(party, Povm::new(elements, support.clone())?)
}

fn declare(label: Label) -> ProtocolNode {
    ProtocolNode::Declare(label)
}

fn leaves(labels: &[Label]) -> Vec<ProtocolNode> {
    labels.iter().map(|&l| declare(l)).collect()
}

/// `{e₁, e₂, e₀}` (after a symmetric partner) or `{e'₁, e'₂, e'₀}` (after
/// an antisymmetric one) for the mixed party.
fn mixed_party_step(party: Party, t: &SymmetryToolkit, partner: Exchange) -> Result<ProtocolNode> {
    // the partner's symmetry fixes which pair projector kills the wrong state
    let (kind, sign) = match partner {
        Exchange::Symmetric => (Exchange::Antisymmetric, 2.0),
        Exchange::Antisymmetric => (Exchange::Symmetric, -2.0),
    };
    let e1 = t.mixed_pair(Pair::P02, kind).scale(2.0 / 3.0);
    let e2 = t.mixed_pair(Pair::P01, kind).scale(2.0 / 3.0);
    let e0 = (&t.m3 + &(&t.m3 * &t.a_op).scale(sign)).scale(1.0 / 3.0);
    let step = complete_step(party, vec![("1", e1), ("2", e2), ("0", e0)], &t.m3)?;
    Ok(ProtocolNode::measure(
        step,
        leaves(&[Label::First, Label::Second, Label::Inconclusive]),
    ))
}

/// Both parties mixed: `first` measures `e_{a₁a₂} = ½ M₃ {A(02), S(02),
/// A(01), S(01)}`, then `second` measures `{M₃S(0j), M₃A(0j)}` with
/// `j = 2` if `a₁ = 1` and `j = 1` otherwise; the answer is `a₁` when
/// `a₂` matches and 0 otherwise.
fn both_mixed(
    first: (Party, &SymmetryToolkit),
    second: (Party, &SymmetryToolkit),
) -> Result<ProtocolNode> {
    use Exchange::{Antisymmetric as Anti, Symmetric as Sym};
    let (p, t) = first;
    let half = |pair, kind| t.mixed_pair(pair, kind).scale(0.5);
    let step = complete_step(
        p,
        vec![
            ("11", half(Pair::P02, Anti)),
            ("12", half(Pair::P02, Sym)),
            ("21", half(Pair::P01, Anti)),
            ("22", half(Pair::P01, Sym)),
        ],
        &t.m3,
    )?;
    let (q, u) = second;
    let follow = |a1: Label, a2: usize| -> Result<ProtocolNode> {
        let pair = if a1 == Label::First {
            Pair::P02
        } else {
            Pair::P01
        };
        let f = complete_step(
            q,
            vec![
                ("1", u.mixed_pair(pair, Sym)),
                ("2", u.mixed_pair(pair, Anti)),
            ],
            &u.m3,
        )?;
        let children = (1..=2)
            .map(|b| declare(if b == a2 { a1 } else { Label::Inconclusive }))
            .collect();
        Ok(ProtocolNode::measure(f, children))
    };
    Ok(ProtocolNode::measure(
        step,
        vec![
            follow(Label::First, 1)?,
            follow(Label::First, 2)?,
            follow(Label::Second, 1)?,
            follow(Label::Second, 2)?,
        ],
    ))
}

/// LOCC protocol realizing the optimal separable POVM. Both parties first
/// measure `{S₃, A₃, M₃}`; `bob_first` lets Bob lead the both-mixed branch.
pub fn unamb_locc_protocol(d_a: usize, d_b: usize, bob_first: bool) -> Result<LoccProtocol> {
    use Label::Inconclusive as L0;
    let bt = bipartite_toolkit(d_a, d_b)?;
    let (a, b) = (&*bt.alice, &*bt.bob);
    let sym = |party: Party, t: &SymmetryToolkit| -> Result<LocalStep> {
        complete_step(
            party,
            vec![
                ("S", t.s3.clone()),
                ("A", t.a3.clone()),
                ("M", t.m3.clone()),
            ],
            &DenseOperator::identity(t.dim()),
        )
    };
    let mm = if bob_first {
        both_mixed((Party::Bob, b), (Party::Alice, a))?
    } else {
        both_mixed((Party::Alice, a), (Party::Bob, b))?
    };
    let root = ProtocolNode::measure(
        sym(Party::Alice, a)?,
        vec![
            // Alice symmetric; (S, A) never occurs
            ProtocolNode::measure(
                sym(Party::Bob, b)?,
                vec![
                    declare(L0),
                    declare(L0),
                    mixed_party_step(Party::Bob, b, Exchange::Symmetric)?,
                ],
            ),
            // Alice antisymmetric; (A, S) never occurs
            ProtocolNode::measure(
                sym(Party::Bob, b)?,
                vec![
                    declare(L0),
                    declare(L0),
                    mixed_party_step(Party::Bob, b, Exchange::Antisymmetric)?,
                ],
            ),
            // Alice mixed
            ProtocolNode::measure(
                sym(Party::Bob, b)?,
                vec![
                    mixed_party_step(Party::Alice, a, Exchange::Symmetric)?,
                    mixed_party_step(Party::Alice, a, Exchange::Antisymmetric)?,
                    mm,
                ],
            ),
        ],
    );
    let lead = if bob_first { "bob" } else { "alice" };
    LoccProtocol::new(format!("unamb-locc({d_a},{d_b},{lead})"), d_a, d_b, root)
}

/// Probability of reaching `branch` when the references are Haar-random and
/// the input is drawn with `priors`:
/// `(η₁ tr[B S(01)] + η₂ tr[B S(02)]) / (d₂ d₁)` with `B = A†A ⊗ B†B`.
pub fn branch_probability(branch: &Branch, d_a: usize, d_b: usize, priors: Priors) -> Result<f64> {
    let bt = bipartite_toolkit(d_a, d_b)?;
    let joint = toolkit(d_a * d_b)?;
    let b = bt.to_system_major(&kron(&branch.alice, &branch.bob));
    let t1 = joint
        .times_pair(&b, Pair::P01, Exchange::Symmetric)
        .trace()
        .re;
    let t2 = joint
        .times_pair(&b, Pair::P02, Exchange::Symmetric)
        .trace()
        .re;
    let table = dimension_table((d_a * d_b) as u64);
    Ok((priors.eta1 * t1 + priors.eta2 * t2) / (table.d2 * table.d1) as f64)
}

/// Largest probability, over `pairs` Haar-random reference pairs, that the
/// POVM answers 1 on input `φ₂` or 2 on input `φ₁`.
pub fn max_wrong_acceptance(povm: &UnambPovm, pairs: u64, seed: u64) -> f64 {
    let d = povm.d();
    let mut worst: f64 = 0.0;
    for i in 0..pairs {
        let mut s = HaarSampler::for_trial(seed, i);
        let (phi1, phi2) = (s.state(d), s.state(d));
        let wrong1 = kron_vec(&kron_vec(&phi2, &phi1), &phi2);
        let wrong2 = kron_vec(&kron_vec(&phi1, &phi1), &phi2);
        worst = worst
            .max(povm.e1.expectation(&wrong1))
            .max(povm.e2.expectation(&wrong2));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global_values() {
        for d in 2..=4 {
            let p = global_unamb_povm(d).unwrap();
            assert!(p.completeness_defect() < 1e-12);
            let (n1, n2) = p.no_error_defects().unwrap();
            assert!(n1 < NO_ERROR_TOL && n2 < NO_ERROR_TOL);
            assert!(p.exchange_defect().unwrap() < NO_ERROR_TOL);
            assert!(p.min_eigenvalue().unwrap() > -1e-12);
            let want = pmax_unamb_global(d as u64);
            assert!((unamb_success(&p).unwrap() - want).abs() < 1e-10);
        }
        assert!((pmax_unamb_global(2) - 1.0 / 6.0).abs() < 1e-15);
        assert!((pmax_unamb_global(4) - 0.25).abs() < 1e-15);
        assert!((pmax_unamb_global(300) - 1.0 / 3.0).abs() < 2e-3);
    }

    #[test]
    fn zero_povm_scores_zero() {
        let n = 8;
        let p = UnambPovm::from_parts(
            DenseOperator::zeros(n),
            DenseOperator::zeros(n),
            DenseOperator::identity(n),
            UnambKind::Global,
            2,
            1,
        )
        .unwrap();
        assert_eq!(unamb_success(&p).unwrap(), 0.0);
    }

    #[test]
    fn error_prone_povm_rejected() {
        let n = 8;
        let half = DenseOperator::identity(n).scale(0.5);
        let p = UnambPovm::from_parts(
            half.clone(),
            half,
            DenseOperator::zeros(n),
            UnambKind::Global,
            2,
            1,
        )
        .unwrap();
        assert!(matches!(
            unamb_success(&p),
            Err(Error::NoErrorViolated { .. })
        ));
    }

    #[test]
    fn feasibility_examples() {
        let f = beta_feasibility(0.5, 0.5);
        assert!((f.gamma_plus - 1.0).abs() < 1e-15 && f.feasible);
        assert_eq!(beta_feasibility(0.0, 0.0).gamma_plus, 0.0);
        let f = beta_feasibility(0.6, 0.6);
        assert!((f.gamma_plus - 1.2).abs() < 1e-12 && !f.feasible);
        let f = beta_feasibility(1.0, 0.0);
        assert!((f.gamma_plus - (0.625 + (9.0f64 / 64.0 + 0.25).sqrt())).abs() < 1e-15);
        assert!(!f.feasible);
    }

    #[test]
    fn x_operator_matches_closed_form() {
        for (b1, b2) in [(0.5, 0.5), (0.3, 0.1), (0.0, 0.4), (0.6, 0.6)] {
            let x = x_operator_max_eigenvalue(2, 2, b1, b2).unwrap();
            assert!(
                (x - beta_feasibility(b1, b2).gamma_plus).abs() < 1e-9,
                "{b1} {b2}: {x}"
            );
        }
    }

    #[test]
    fn separable_optimum_at_two_two() {
        let p = separable_unamb_povm(2, 2, SeparableCoeffs::optimal()).unwrap();
        assert!(p.completeness_defect() < 1e-12);
        assert!(p.min_eigenvalue().unwrap() > -1e-10);
        let (n1, n2) = p.no_error_defects().unwrap();
        assert!(n1 < NO_ERROR_TOL && n2 < NO_ERROR_TOL);
        assert!(p.exchange_defect().unwrap() < NO_ERROR_TOL);
        let s = unamb_success(&p).unwrap();
        assert!((s - 19.0 / 80.0).abs() < 1e-10);
        assert!((pmax_unamb_locc(2, 2) - 19.0 / 80.0).abs() < 1e-15);
        let direct = direct_trace_e1_s01(&p).unwrap();
        assert!((direct - separable_trace_formula(2, 2, &SeparableCoeffs::optimal())).abs() < 1e-8);
    }

    #[test]
    fn infeasible_coefficients_rejected() {
        let mut c = SeparableCoeffs::zero();
        c.beta1 = 1.0;
        assert!(matches!(
            separable_unamb_povm(2, 2, c),
            Err(Error::Infeasible { .. })
        ));
        let mut c = SeparableCoeffs::zero();
        c.alpha[2] = 0.7;
        assert!(matches!(c.validate(), Err(Error::Infeasible { .. })));
        let p = separable_unamb_povm(2, 2, SeparableCoeffs::zero()).unwrap();
        assert_eq!(unamb_success(&p).unwrap(), 0.0);
    }

    #[test]
    fn protocol_flattens_to_separable_optimum() {
        let sep = separable_unamb_povm(2, 2, SeparableCoeffs::optimal()).unwrap();
        for bob_first in [false, true] {
            let flat = unamb_locc_protocol(2, 2, bob_first)
                .unwrap()
                .flatten()
                .unwrap();
            for l in [Label::First, Label::Second, Label::Inconclusive] {
                assert!(
                    flat.get(l).max_abs_diff(sep.element(l)) < 1e-9,
                    "{l} {bob_first}"
                );
            }
        }
    }

    #[test]
    fn wrong_label_never_accepted() {
        let g = global_unamb_povm(2).unwrap();
        assert!(max_wrong_acceptance(&g, 200, 1) <= 1e-12);
        let s = separable_unamb_povm(2, 2, SeparableCoeffs::optimal()).unwrap();
        assert!(max_wrong_acceptance(&s, 200, 1) <= 1e-12);
    }

    #[test]
    fn forbidden_branches_have_zero_weight() {
        let p = unamb_locc_protocol(2, 2, false).unwrap();
        let mut total = 0.0;
        for b in p.branches() {
            let w = branch_probability(&b, 2, 2, Priors::equal()).unwrap();
            total += w;
            let kinds: Vec<_> = b.transcript.iter().take(2).map(|&(_, k)| k).collect();
            if kinds == [0, 1] || kinds == [1, 0] {
                assert!(w.abs() <= 1e-12);
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }
}
