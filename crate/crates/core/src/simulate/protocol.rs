use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    kron, psd_sqrt, regroup, BasisPermutation, DenseOperator, Party, SpaceLayout, C64,
};
use crate::povm::{Label, Povm, PovmElement};

const PROJECTOR_TOL: f64 = 1e-10;

/// One party measuring its three local systems.
#[derive(Clone, Debug)]
pub struct LocalStep {
    party: Party,
    povm: Povm,
    kraus: Vec<DMatrix<C64>>,
    kraus_t: Vec<DMatrix<C64>>,
}

impl LocalStep {
    /// Kraus operators are the elements themselves when they are projectors
    /// and their square roots otherwise.
    pub fn new(party: Party, povm: Povm) -> Result<Self> {
        if party == Party::Whole {
            return Err(Error::MalformedProtocol(
                "a local step needs alice or bob".into(),
            ));
        }
        let kraus = povm
            .elements()
            .iter()
            .map(|e| {
                if e.operator.is_projector(PROJECTOR_TOL) {
                    Ok(e.operator.matrix().clone())
                } else {
                    psd_sqrt(&e.operator).map(DenseOperator::into_matrix)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let kraus_t = kraus.iter().map(|k| k.transpose()).collect();
        Ok(Self {
            party,
            povm,
            kraus,
            kraus_t,
        })
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    pub fn kraus(&self) -> &[DMatrix<C64>] {
        &self.kraus
    }

    /// Post-measurement state matrix (rows Alice, columns Bob) for outcome `k`,
    /// unnormalized.
    pub fn act(&self, k: usize, psi: &DMatrix<C64>) -> DMatrix<C64> {
        match self.party {
            Party::Alice => &self.kraus[k] * psi,
            _ => psi * &self.kraus_t[k],
        }
    }

    fn conjugated(&self, p: &BasisPermutation) -> Result<Self> {
        let elements = self
            .povm
            .elements()
            .iter()
            .map(|e| PovmElement::new(e.label.clone(), p.conjugate(&e.operator)))
            .collect();
        let povm = Povm::new_unchecked(elements, p.conjugate(self.povm.support()))?;
        let kraus: Vec<DMatrix<C64>> = self
            .kraus
            .iter()
            .map(|k| {
                p.conjugate(&DenseOperator::from_matrix(k.clone()))
                    .into_matrix()
            })
            .collect();
        let kraus_t = kraus.iter().map(|k| k.transpose()).collect();
        Ok(Self {
            party: self.party,
            povm,
            kraus,
            kraus_t,
        })
    }
}

/// Decision tree: each measurement has one child per outcome, in element order.
#[derive(Clone, Debug)]
pub enum ProtocolNode {
    Measure {
        step: LocalStep,
        children: Vec<ProtocolNode>,
    },
    Declare(Label),
}

impl ProtocolNode {
    pub fn measure(step: LocalStep, children: Vec<ProtocolNode>) -> Self {
        ProtocolNode::Measure { step, children }
    }

    fn map_steps(
        &self,
        f: &impl Fn(&LocalStep) -> Result<LocalStep>,
        relabel: fn(Label) -> Label,
    ) -> Result<Self> {
        Ok(match self {
            ProtocolNode::Declare(l) => ProtocolNode::Declare(relabel(*l)),
            ProtocolNode::Measure { step, children } => ProtocolNode::Measure {
                step: f(step)?,
                children: children
                    .iter()
                    .map(|c| c.map_steps(f, relabel))
                    .collect::<Result<_>>()?,
            },
        })
    }
}

/// One root-to-leaf path with the accumulated local effects `K†K`.
#[derive(Clone, Debug)]
pub struct Branch {
    pub transcript: Vec<(Party, usize)>,
    pub label: Label,
    pub alice: DenseOperator,
    pub bob: DenseOperator,
}

/// Flattened protocol: one joint operator per label, in system-major order.
#[derive(Clone, Debug)]
pub struct EffectivePovm {
    elements: BTreeMap<Label, DenseOperator>,
    dim: usize,
}

impl EffectivePovm {
    /// Zero operator for labels the protocol never declares.
    pub fn get(&self, label: Label) -> DenseOperator {
        self.elements
            .get(&label)
            .cloned()
            .unwrap_or_else(|| DenseOperator::zeros(self.dim))
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.elements.keys().copied()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn completeness_defect(&self) -> f64 {
        let sum: DenseOperator = self.elements.values().cloned().sum();
        sum.max_abs_diff(&DenseOperator::identity(self.dim))
    }

    pub fn into_povm(self) -> Result<Povm> {
        let elements = self
            .elements
            .into_iter()
            .map(|(l, e)| PovmElement::new(l.to_string(), e))
            .collect();
        Povm::new_unchecked(elements, DenseOperator::identity(self.dim))
    }
}

/// A two-party protocol acting on `(C^{d_a} ⊗ C^{d_b})^{⊗3}`.
#[derive(Clone, Debug)]
pub struct LoccProtocol {
    name: String,
    d_a: usize,
    d_b: usize,
    root: ProtocolNode,
}

impl LoccProtocol {
    pub fn new(name: String, d_a: usize, d_b: usize, root: ProtocolNode) -> Result<Self> {
        let p = Self {
            name,
            d_a,
            d_b,
            root,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_a == 0 || self.d_b == 0 {
            return Err(Error::InvalidDimension(self.d_a.min(self.d_b)));
        }
        self.validate_node(&self.root)
    }

    fn validate_node(&self, node: &ProtocolNode) -> Result<()> {
        let ProtocolNode::Measure { step, children } = node else {
            return Ok(());
        };
        if step.povm.len() != children.len() {
            return Err(Error::MalformedProtocol(format!(
                "{} outcomes but {} children",
                step.povm.len(),
                children.len()
            )));
        }
        let expected = self.local_dim(step.party);
        if step.povm.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: step.povm.dim(),
            });
        }
        children.iter().try_for_each(|c| self.validate_node(c))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: String) -> Self {
        self.name = name;
        self
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d_a, self.d_b)
    }

    pub fn root(&self) -> &ProtocolNode {
        &self.root
    }

    /// Dimension of one party's three systems.
    pub fn local_dim(&self, party: Party) -> usize {
        match party {
            Party::Alice => self.d_a.pow(3),
            Party::Bob => self.d_b.pow(3),
            Party::Whole => (self.d_a * self.d_b).pow(3),
        }
    }

    /// Label reached by a sequence of outcome indices, if the transcript
    /// ends exactly at a leaf.
    pub fn declare(&self, transcript: &[(Party, usize)]) -> Option<Label> {
        let mut node = &self.root;
        for &(party, k) in transcript {
            match node {
                ProtocolNode::Measure { step, children } if step.party == party => {
                    node = children.get(k)?;
                }
                _ => return None,
            }
        }
        match node {
            ProtocolNode::Declare(l) => Some(*l),
            _ => None,
        }
    }

    /// Same protocol with references 1 and 2 exchanged: every local element
    /// is conjugated by the local `T(12)` and declared labels are swapped.
    pub fn exchange_references(&self) -> Result<Self> {
        let ta = BasisPermutation::from_factors(&[self.d_a; 3], &[0, 2, 1])?;
        let tb = BasisPermutation::from_factors(&[self.d_b; 3], &[0, 2, 1])?;
        let root = self.root.map_steps(
            &|s: &LocalStep| match s.party {
                Party::Alice => s.conjugated(&ta),
                _ => s.conjugated(&tb),
            },
            Label::swapped,
        )?;
        Ok(Self {
            name: self.name.clone(),
            d_a: self.d_a,
            d_b: self.d_b,
            root,
        })
    }

    /// Every root-to-leaf path with its accumulated local effects.
    pub fn branches(&self) -> Vec<Branch> {
        let mut out = Vec::new();
        let ka = DMatrix::identity(self.local_dim(Party::Alice), self.local_dim(Party::Alice));
        let kb = DMatrix::identity(self.local_dim(Party::Bob), self.local_dim(Party::Bob));
        walk(&self.root, ka, kb, &mut Vec::new(), &mut out);
        out
    }

    /// Joint effective POVM `E_μ = Σ_leaves→μ A†A ⊗ B†B`, system-major.
    pub fn flatten(&self) -> Result<EffectivePovm> {
        let from = SpaceLayout::system_major(self.d_a, self.d_b);
        let to = SpaceLayout::party_major(self.d_a, self.d_b);
        let back = regroup(&from, &to)?.inverse();
        let dim = self.local_dim(Party::Whole);
        let mut party_major: BTreeMap<Label, DenseOperator> = BTreeMap::new();
        for b in self.branches() {
            let term = kron(&b.alice, &b.bob);
            party_major
                .entry(b.label)
                .and_modify(|acc| *acc = &*acc + &term)
                .or_insert(term);
        }
        let elements = party_major
            .into_iter()
            .map(|(l, e)| {
                (
                    l,
                    back.conjugate(&DenseOperator::from_matrix(e.into_matrix())),
                )
            })
            .collect();
        Ok(EffectivePovm { elements, dim })
    }
}

fn walk(
    node: &ProtocolNode,
    ka: DMatrix<C64>,
    kb: DMatrix<C64>,
    path: &mut Vec<(Party, usize)>,
    out: &mut Vec<Branch>,
) {
    match node {
        ProtocolNode::Declare(label) => out.push(Branch {
            transcript: path.clone(),
            label: *label,
            alice: DenseOperator::from_matrix(ka.adjoint() * &ka),
            bob: DenseOperator::from_matrix(kb.adjoint() * &kb),
        }),
        ProtocolNode::Measure { step, children } => {
            for (k, child) in children.iter().enumerate() {
                path.push((step.party, k));
                let kraus = &step.kraus[k];
                match step.party {
                    Party::Alice => walk(child, kraus * &ka, kb.clone(), path, out),
                    _ => walk(child, ka.clone(), kraus * &kb, path, out),
                }
                path.pop();
            }
        }
    }
}
