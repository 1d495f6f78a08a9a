//! Minimum-error identification.
//!
//! The success probability of a two-outcome POVM `{E₁, E₂ = 1 - E₁}` is
//! `η₂ + tr[E₁ Δ] / (d₁ d₂)` with `Δ = η₁ S(01) - η₂ S(02)`, so the optimum
//! is the positive part of `Δ`. The LOCC construction splits every system
//! between Alice and Bob and reaches the same value with a separable element
//! built from local symmetry projectors.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigenvalues, kron, positive_part_projector, DenseOperator, Party, CLASSIFY_TOL,
};
use crate::povm::{Label, Povm, PovmElement};
use crate::simulate::protocol::{LocalStep, LoccProtocol, ProtocolNode};
use crate::symmetry::{
    bipartite_toolkit, dimension_table, toolkit, BipartiteToolkit, SymmetryToolkit,
};

/// Prior probabilities of the two reference states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Priors {
    pub eta1: f64,
    pub eta2: f64,
}

impl Priors {
    pub fn new(eta1: f64, eta2: f64) -> Result<Self> {
        let ok = eta1.is_finite()
            && eta2.is_finite()
            && eta1 >= 0.0
            && eta2 >= 0.0
            && (eta1 + eta2 - 1.0).abs() <= 1e-12;
        if !ok {
            return Err(Error::InvalidPriors { eta1, eta2 });
        }
        Ok(Self { eta1, eta2 })
    }

    pub fn from_eta1(eta1: f64) -> Result<Self> {
        Self::new(eta1, 1.0 - eta1)
    }

    pub fn equal() -> Self {
        Self {
            eta1: 0.5,
            eta2: 0.5,
        }
    }

    pub fn swapped(self) -> Self {
        Self {
            eta1: self.eta2,
            eta2: self.eta1,
        }
    }

    /// `η₁ - η₂`
    pub fn bias(self) -> f64 {
        self.eta1 - self.eta2
    }

    /// One prior vanishes: no measurement beats guessing.
    pub fn is_degenerate(self) -> bool {
        self.eta1 == 0.0 || self.eta2 == 0.0
    }

    /// Label with the larger prior (ties go to the first reference).
    pub fn favored(self) -> Label {
        if self.eta1 >= self.eta2 {
            Label::First
        } else {
            Label::Second
        }
    }

    /// Success probability without any measurement, `max{η₁, η₂}`.
    pub fn guessing_baseline(self) -> f64 {
        self.eta1.max(self.eta2)
    }
}

/// `Δ = η₁ S(01) - η₂ S(02)` on a given toolkit.
pub fn delta_on(t: &SymmetryToolkit, priors: Priors) -> DenseOperator {
    &t.s01.scale(priors.eta1) - &t.s02.scale(priors.eta2)
}

/// `Δ` rewritten through `D` and `A`: `(η₁ - η₂ + D + (η₁ - η₂) A) / 2`.
pub fn delta_from_d_and_a(t: &SymmetryToolkit, priors: Priors) -> DenseOperator {
    let b = priors.bias();
    let id = DenseOperator::identity(t.dim()).scale(b);
    (&(&id + &t.d_op) + &t.a_op.scale(b)).scale(0.5)
}

pub fn build_delta(d: usize, priors: Priors) -> Result<DenseOperator> {
    Ok(delta_on(&*toolkit(d)?, priors))
}

/// The two eigenvalues of `Δ` on the mixed subspace, `(λ₊, λ₋)`.
pub fn lambda_pm(priors: Priors) -> (f64, f64) {
    let root = (1.0 - priors.eta1 * priors.eta2).sqrt();
    let b = priors.bias();
    (0.5 * (b + root), 0.5 * (b - root))
}

/// Closed-form optimum `1/2 + (d+2)/(6d) |η₁-η₂| + (d-1)/(3d) √(1-η₁η₂)`.
pub fn pmax_global(d: u64, priors: Priors) -> f64 {
    let d = d as f64;
    0.5 + (d + 2.0) / (6.0 * d) * priors.bias().abs()
        + (d - 1.0) / (3.0 * d) * (1.0 - priors.eta1 * priors.eta2).sqrt()
}

/// Eigenvalues of `Δ` from the symmetry decomposition, descending:
/// `η₁-η₂` on `V_S`, `0` on `V_A`, `λ±` on halves of `V_M`.
pub fn delta_spectrum_closed_form(d: u64, priors: Priors) -> Vec<f64> {
    let t = dimension_table(d);
    let (lp, lm) = lambda_pm(priors);
    let half = (t.dim_vm / 2) as usize;
    let mut values = Vec::with_capacity(t.d3 as usize);
    values.extend(std::iter::repeat_n(priors.bias(), t.dim_vs as usize));
    values.extend(std::iter::repeat_n(0.0, t.dim_va as usize));
    values.extend(std::iter::repeat_n(lp, half));
    values.extend(std::iter::repeat_n(lm, half));
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

fn norm_factor(d: u64) -> f64 {
    let t = dimension_table(d);
    (t.d1 * t.d2) as f64
}

/// Optimum through the eigenvalues of the explicitly assembled `Δ`:
/// `η₂ + (sum of positive eigenvalues) / (d₁ d₂)`.
pub fn pmax_eigen_route(d: usize, priors: Priors) -> Result<f64> {
    let delta = build_delta(d, priors)?;
    let positive: f64 = hermitian_eigenvalues(&delta)?
        .into_iter()
        .filter(|&l| l > 0.0)
        .sum();
    Ok(priors.eta2 + positive / norm_factor(d as u64))
}

/// Sum of the positive eigenvalues of `Δ` for the joint dimension `d`.
pub fn positive_trace(d: usize, priors: Priors) -> Result<f64> {
    let delta = build_delta(d, priors)?;
    Ok(hermitian_eigenvalues(&delta)?
        .into_iter()
        .filter(|&l| l > 0.0)
        .sum())
}

fn two_outcome(e1: DenseOperator) -> Result<Povm> {
    let n = e1.dim();
    let e2 = &DenseOperator::identity(n) - &e1;
    Povm::complete(vec![PovmElement::new("1", e1), PovmElement::new("2", e2)])
}

/// `{E₁ = P₊(Δ), E₂ = 1 - P₊}`; degenerate priors give the always-guess POVM.
pub fn global_povm(d: usize, priors: Priors) -> Result<Povm> {
    let t = toolkit(d)?;
    let n = t.dim();
    if priors.is_degenerate() {
        let e1 = match priors.favored() {
            Label::First => DenseOperator::identity(n),
            _ => DenseOperator::zeros(n),
        };
        return two_outcome(e1);
    }
    let p_plus = positive_part_projector(&delta_on(&t, priors), CLASSIFY_TOL)?;
    two_outcome(p_plus)
}

/// `η₂ + tr[E₁ (η₁ S(01) - η₂ S(02))] / (d₁ d₂)` for a POVM labeled {1, 2}.
pub fn mean_success(povm: &Povm, d: usize, priors: Priors) -> Result<f64> {
    let mut labels: Vec<&str> = povm.labels().collect();
    labels.sort_unstable();
    if labels != ["1", "2"] {
        return Err(Error::InvalidPovm(format!(
            "expected labels {{1, 2}}, found {labels:?}"
        )));
    }
    let t = toolkit(d)?;
    if povm.dim() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            actual: povm.dim(),
        });
    }
    let e1 = povm.element("1").expect("label checked");
    let value = e1.trace_product(&delta_on(&t, priors)).re;
    Ok(priors.eta2 + value / norm_factor(d as u64))
}

/// Global optimum with its ingredients.
#[derive(Clone, Debug)]
pub struct MinErrSolution {
    pub priors: Priors,
    pub d: usize,
    pub delta: DenseOperator,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub p_max: f64,
    pub povm: Povm,
}

pub fn solve_global(d: usize, priors: Priors) -> Result<MinErrSolution> {
    let (lambda_plus, lambda_minus) = lambda_pm(priors);
    Ok(MinErrSolution {
        priors,
        d,
        delta: build_delta(d, priors)?,
        lambda_plus,
        lambda_minus,
        p_max: pmax_global(d as u64, priors),
        povm: global_povm(d, priors)?,
    })
}

/// Local projectors one party uses in the LOCC scheme.
#[derive(Clone, Debug)]
pub struct LocalPieces {
    pub s3: DenseOperator,
    pub a3: DenseOperator,
    pub m3: DenseOperator,
    /// Positive / negative eigenprojectors of the local `Δ` inside `V_M`.
    pub p_plus: DenseOperator,
    pub p_minus: DenseOperator,
    /// Positive / negative eigenprojectors of the rotated `Y₂` inside `V_M`.
    pub q_plus: DenseOperator,
    pub q_minus: DenseOperator,
}

/// Rotation angle with `cos 2θ = (η₁-η₂) / (2√(1-η₁η₂))`,
/// `sin 2θ = √3 / (2√(1-η₁η₂))`.
pub fn rotation_angle(priors: Priors) -> f64 {
    let root = 2.0 * (1.0 - priors.eta1 * priors.eta2).sqrt();
    let cos2 = priors.bias() / root;
    let sin2 = 3f64.sqrt() / root;
    0.5 * sin2.atan2(cos2)
}

fn local_pieces(t: &SymmetryToolkit, priors: Priors, theta: f64) -> Result<LocalPieces> {
    let m3 = &t.m3;
    let delta_m = &(m3 * &delta_on(t, priors)) * m3;
    let p_plus = positive_part_projector(&delta_m, CLASSIFY_TOL)?;
    let p_minus = positive_part_projector(&delta_m.scale(-1.0), CLASSIFY_TOL)?;

    // Y₂ = -sinθ X₁ + cosθ X₂ with X₁ = 2D/√3, X₂ = 2A
    let x1 = t.d_op.scale(2.0 / 3f64.sqrt());
    let x2 = t.a_op.scale(2.0);
    let y2 = &x1.scale(-theta.sin()) + &x2.scale(theta.cos());
    let y2_m = &(m3 * &y2) * m3;
    let q_plus = positive_part_projector(&y2_m, CLASSIFY_TOL)?;
    let q_minus = positive_part_projector(&y2_m.scale(-1.0), CLASSIFY_TOL)?;

    Ok(LocalPieces {
        s3: t.s3.clone(),
        a3: t.a3.clone(),
        m3: m3.clone(),
        p_plus,
        p_minus,
        q_plus,
        q_minus,
    })
}

/// The separable optimum for `η₁ <= η₂`.
#[derive(Clone, Debug)]
pub struct LoccMinErr {
    pub priors: Priors,
    pub theta: f64,
    pub alice: LocalPieces,
    pub bob: LocalPieces,
    pub toolkits: BipartiteToolkit,
    /// `E₁ᴸ` in system-major order on the joint `d³` space.
    pub e1: DenseOperator,
    pub povm: Povm,
}

/// `E₁ᴸ = S₃P₊ + A₃P₋ + P₊S₃ + P₋A₃ + Q₊Q₋ + Q₋Q₊` (Alice ⊗ Bob).
pub fn build_locc_povm_element(d_a: usize, d_b: usize, priors: Priors) -> Result<LoccMinErr> {
    if priors.eta1 > priors.eta2 {
        return Err(Error::PriorOrder(priors.eta1));
    }
    let bt = bipartite_toolkit(d_a, d_b)?;
    let theta = rotation_angle(priors);
    let a = local_pieces(&bt.alice, priors, theta)?;
    let b = local_pieces(&bt.bob, priors, theta)?;
    let party_major = [
        kron(&a.s3, &b.p_plus),
        kron(&a.a3, &b.p_minus),
        kron(&a.p_plus, &b.s3),
        kron(&a.p_minus, &b.a3),
        kron(&a.q_plus, &b.q_minus),
        kron(&a.q_minus, &b.q_plus),
    ]
    .into_iter()
    .sum::<DenseOperator>();
    let e1 = bt.to_system_major(&party_major);
    // orthogonal sum of products of projectors: PSD by construction
    let n = e1.dim();
    let e2 = &DenseOperator::identity(n) - &e1;
    let povm = Povm::new_unchecked(
        vec![PovmElement::new("1", e1.clone()), PovmElement::new("2", e2)],
        DenseOperator::identity(n),
    )?;
    Ok(LoccMinErr {
        priors,
        theta,
        alice: a,
        bob: b,
        toolkits: bt,
        e1,
        povm,
    })
}

/// Separable optimal POVM for any priors (label swap for `η₁ > η₂`).
pub fn locc_povm(d_a: usize, d_b: usize, priors: Priors) -> Result<Povm> {
    let bt = bipartite_toolkit(d_a, d_b)?;
    let n = bt.joint_dim();
    if priors.is_degenerate() {
        let e1 = match priors.favored() {
            Label::First => DenseOperator::identity(n),
            _ => DenseOperator::zeros(n),
        };
        return Povm::new_unchecked(
            vec![
                PovmElement::new("1", e1.clone()),
                PovmElement::new("2", &DenseOperator::identity(n) - &e1),
            ],
            DenseOperator::identity(n),
        );
    }
    if priors.eta1 <= priors.eta2 {
        return Ok(build_locc_povm_element(d_a, d_b, priors)?.povm);
    }
    let swapped = build_locc_povm_element(d_a, d_b, priors.swapped())?;
    let joint = toolkit_t12(&bt);
    let e2 = joint.conjugate(&swapped.e1);
    let e1 = &DenseOperator::identity(n) - &e2;
    Povm::new_unchecked(
        vec![PovmElement::new("1", e1), PovmElement::new("2", e2)],
        DenseOperator::identity(n),
    )
}

/// `T(12)` on the joint system-major space without building the joint toolkit.
fn toolkit_t12(bt: &BipartiteToolkit) -> crate::linalg::BasisPermutation {
    let layout = crate::linalg::SpaceLayout::system_major(bt.d_a, bt.d_b);
    crate::linalg::BasisPermutation::from_factors(&layout.dims(), &[0, 1, 4, 5, 2, 3])
        .expect("fixed six-factor permutation")
}

fn symmetry_step(party: Party, p: &LocalPieces) -> Result<LocalStep> {
    let povm = Povm::complete(vec![
        PovmElement::new("S", p.s3.clone()),
        PovmElement::new("A", p.a3.clone()),
        PovmElement::new("M", p.m3.clone()),
    ])?;
    LocalStep::new(party, povm)
}

fn sign_step(
    party: Party,
    plus: &DenseOperator,
    minus: &DenseOperator,
    support: &DenseOperator,
) -> Result<LocalStep> {
    let povm = Povm::new(
        vec![
            PovmElement::new("+", plus.clone()),
            PovmElement::new("-", minus.clone()),
        ],
        support.clone(),
    )?;
    LocalStep::new(party, povm)
}

fn declare(label: Label) -> ProtocolNode {
    ProtocolNode::Declare(label)
}

/// Executable LOCC protocol realizing the separable optimum.
///
/// Both parties first measure `{S₃, A₃, M₃}`. If one side is symmetric or
/// antisymmetric and the other mixed, the mixed side measures `{P₊, P₋}`;
/// if both are mixed, both measure `{Q₊, Q₋}` and opposite signs answer 1.
pub fn minerr_locc_protocol(d_a: usize, d_b: usize, priors: Priors) -> Result<LoccProtocol> {
    let name = format!("minerr-locc({d_a},{d_b},eta1={})", priors.eta1);
    if priors.is_degenerate() {
        return LoccProtocol::new(name, d_a, d_b, declare(priors.favored()));
    }
    if priors.eta1 > priors.eta2 {
        let inner = minerr_locc_protocol(d_a, d_b, priors.swapped())?;
        return inner.exchange_references().map(|p| p.renamed(name));
    }
    let sol = build_locc_povm_element(d_a, d_b, priors)?;
    let (a, b) = (&sol.alice, &sol.bob);
    use Label::{First as L1, Second as L2};

    let bob_p = |plus_label: Label, minus_label: Label| -> Result<ProtocolNode> {
        Ok(ProtocolNode::measure(
            sign_step(Party::Bob, &b.p_plus, &b.p_minus, &b.m3)?,
            vec![declare(plus_label), declare(minus_label)],
        ))
    };
    let alice_p = |plus_label: Label, minus_label: Label| -> Result<ProtocolNode> {
        Ok(ProtocolNode::measure(
            sign_step(Party::Alice, &a.p_plus, &a.p_minus, &a.m3)?,
            vec![declare(plus_label), declare(minus_label)],
        ))
    };
    let bob_q = |plus_label: Label, minus_label: Label| -> Result<ProtocolNode> {
        Ok(ProtocolNode::measure(
            sign_step(Party::Bob, &b.q_plus, &b.q_minus, &b.m3)?,
            vec![declare(plus_label), declare(minus_label)],
        ))
    };
    let both_mixed = ProtocolNode::measure(
        sign_step(Party::Alice, &a.q_plus, &a.q_minus, &a.m3)?,
        vec![bob_q(L2, L1)?, bob_q(L1, L2)?],
    );
    let bob_sym = |children: Vec<ProtocolNode>| -> Result<ProtocolNode> {
        Ok(ProtocolNode::measure(
            symmetry_step(Party::Bob, b)?,
            children,
        ))
    };
    let root = ProtocolNode::measure(
        symmetry_step(Party::Alice, a)?,
        vec![
            // Alice symmetric
            bob_sym(vec![declare(L2), declare(L2), bob_p(L1, L2)?])?,
            // Alice antisymmetric
            bob_sym(vec![declare(L2), declare(L2), bob_p(L2, L1)?])?,
            // Alice mixed
            bob_sym(vec![alice_p(L1, L2)?, alice_p(L2, L1)?, both_mixed])?,
        ],
    );
    LoccProtocol::new(name, d_a, d_b, root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn priors_validation() {
        assert!(Priors::new(0.3, 0.7).is_ok());
        assert!(Priors::new(0.3, 0.6).is_err());
        assert!(Priors::new(-0.1, 1.1).is_err());
        assert!(Priors::from_eta1(f64::NAN).is_err());
        assert_eq!(Priors::from_eta1(0.2).unwrap().favored(), Label::Second);
    }

    #[test]
    fn lambda_examples() {
        let (p, m) = lambda_pm(Priors::equal());
        assert!((p - 3f64.sqrt() / 4.0).abs() < 1e-15);
        assert!((m + 3f64.sqrt() / 4.0).abs() < 1e-15);
        let (p, m) = lambda_pm(Priors::from_eta1(1.0).unwrap());
        assert_eq!((p, m), (1.0, 0.0));
        let (p, m) = lambda_pm(Priors::from_eta1(0.3).unwrap());
        assert!((p - 0.244410).abs() < 1e-6);
        assert!((m + 0.644410).abs() < 1e-6);
    }

    #[test]
    fn pmax_examples() {
        let half = Priors::equal();
        assert!((pmax_global(2, half) - (0.5 + 3f64.sqrt() / 12.0)).abs() < 1e-15);
        assert!(
            (pmax_global(2, Priors::from_eta1(0.7).unwrap()) - 0.781_469_906_955_26).abs() < 1e-12
        );
        let limit = 0.5 + 3f64.sqrt() / 6.0;
        assert!((pmax_global(200, half) - limit).abs() < 2e-3);
    }

    #[test]
    fn delta_forms_agree() {
        let t = toolkit(3).unwrap();
        let pr = Priors::from_eta1(0.7).unwrap();
        let a = delta_on(&t, pr);
        assert!(a.max_abs_diff(&delta_from_d_and_a(&t, pr)) < 1e-12);
        // Δ acts as η₁-η₂ on the symmetric subspace
        let restricted = &a * &t.s3;
        assert!(restricted.max_abs_diff(&t.s3.scale(0.4)) < 1e-12);
    }

    #[test]
    fn delta_pure_first_prior() {
        let t = toolkit(2).unwrap();
        let d = delta_on(&t, Priors::from_eta1(1.0).unwrap());
        assert!(d.max_abs_diff(&t.s01) < 1e-15);
    }

    #[test]
    fn mean_success_trivial_povms() {
        let pr = Priors::equal();
        let zero = two_outcome(DenseOperator::zeros(8)).unwrap();
        assert!((mean_success(&zero, 2, pr).unwrap() - 0.5).abs() < 1e-14);
        let one = two_outcome(DenseOperator::identity(8)).unwrap();
        assert!((mean_success(&one, 2, pr).unwrap() - 0.5).abs() < 1e-14);
        let wrong = Povm::complete(vec![
            PovmElement::new("1", DenseOperator::identity(8)),
            PovmElement::new("0", DenseOperator::zeros(8)),
        ])
        .unwrap();
        assert!(mean_success(&wrong, 2, pr).is_err());
    }

    #[test]
    fn global_povm_ranks() {
        for (d, rank) in [(2usize, 2.0), (3, 8.0)] {
            let povm = global_povm(d, Priors::equal()).unwrap();
            let r = povm.element("1").unwrap().trace().re;
            assert!((r - rank).abs() < 1e-9);
            let p = mean_success(&povm, d, Priors::equal()).unwrap();
            assert!((p - pmax_global(d as u64, Priors::equal())).abs() < 1e-9);
        }
    }

    #[test]
    fn global_povm_pure_prior_answers_one() {
        let t = toolkit(2).unwrap();
        let povm = global_povm(2, Priors::from_eta1(1.0).unwrap()).unwrap();
        let e1 = povm.element("1").unwrap();
        assert!((e1.trace_product(&t.s01).re - t.s01.trace().re).abs() < 1e-12);
    }

    #[test]
    fn locc_rejects_wrong_order() {
        assert!(matches!(
            build_locc_povm_element(2, 2, Priors::from_eta1(0.7).unwrap()),
            Err(Error::PriorOrder(_))
        ));
    }

    #[test]
    fn locc_equal_priors_2x2() {
        let sol = build_locc_povm_element(2, 2, Priors::equal()).unwrap();
        assert!((sol.theta - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
        let g = toolkit(4).unwrap();
        let tr = sol.e1.trace_product(&delta_on(&g, Priors::equal())).re;
        assert!((tr - 5.0 * 3f64.sqrt()).abs() < 1e-9);
        let p = mean_success(&sol.povm, 4, Priors::equal()).unwrap();
        assert!((p - 0.7165064).abs() < 1e-7);
    }

    #[test]
    fn locc_with_trivial_party() {
        // d_a = 1: Bob holds everything, the construction still reaches the optimum
        let pr = Priors::from_eta1(0.3).unwrap();
        let sol = build_locc_povm_element(1, 2, pr).unwrap();
        let p = mean_success(&sol.povm, 2, pr).unwrap();
        assert!((p - pmax_global(2, pr)).abs() < 1e-9);
    }

    #[test]
    fn locc_povm_swapped_priors() {
        let pr = Priors::from_eta1(0.8).unwrap();
        let povm = locc_povm(2, 2, pr).unwrap();
        povm.validate().unwrap();
        let p = mean_success(&povm, 4, pr).unwrap();
        assert!((p - pmax_global(4, pr)).abs() < 1e-9);
    }

    #[test]
    fn degenerate_priors_guess() {
        for eta1 in [0.0, 1.0] {
            let pr = Priors::from_eta1(eta1).unwrap();
            let p = mean_success(&locc_povm(2, 2, pr).unwrap(), 4, pr).unwrap();
            assert!((p - 1.0).abs() < 1e-12);
            let p = mean_success(&global_povm(2, pr).unwrap(), 2, pr).unwrap();
            assert!((p - 1.0).abs() < 1e-12);
        }
    }
}
