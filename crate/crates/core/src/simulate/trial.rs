use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{kron_vec, regroup, BasisPermutation, DenseOperator, Party, SpaceLayout, C64};
use crate::minerr::Priors;
use crate::povm::{Label, Povm};
use crate::simulate::haar::HaarSampler;
use crate::simulate::protocol::{LoccProtocol, ProtocolNode};

/// Allowed deviation of outcome probabilities from a unit sum.
pub const PROBABILITY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TrialOutcome {
    Success,
    Error,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub index: u64,
    pub true_label: Label,
    pub declared: Label,
    /// Outcome indices in measurement order; a single `Whole` entry for a
    /// global measurement.
    pub transcript: Vec<(Party, usize)>,
}

impl TrialRecord {
    pub fn outcome(&self) -> TrialOutcome {
        if self.declared == Label::Inconclusive {
            TrialOutcome::Inconclusive
        } else if self.declared == self.true_label {
            TrialOutcome::Success
        } else {
            TrialOutcome::Error
        }
    }
}

/// What a batch runs: a joint measurement on `(C^d)^{⊗3}` or a two-party
/// protocol.
#[derive(Clone, Debug)]
pub enum TrialSpec {
    Global {
        povm: Arc<Povm>,
        labels: Vec<Label>,
        d: usize,
        priors: Priors,
        /// Unitary applied to every Haar state before measuring.
        frame: Option<Arc<DenseOperator>>,
    },
    Locc {
        protocol: Arc<LoccProtocol>,
        priors: Priors,
        regroup: Arc<BasisPermutation>,
    },
}

impl TrialSpec {
    /// Element labels must be "0", "1" or "2".
    pub fn global(povm: Povm, d: usize, priors: Priors) -> Result<Self> {
        if povm.dim() != d.pow(3) {
            return Err(Error::DimensionMismatch {
                expected: d.pow(3),
                actual: povm.dim(),
            });
        }
        let labels = povm
            .labels()
            .map(str::parse)
            .collect::<Result<Vec<Label>>>()?;
        Ok(TrialSpec::Global {
            povm: Arc::new(povm),
            labels,
            d,
            priors,
            frame: None,
        })
    }

    pub fn with_frame(self, u: DenseOperator) -> Result<Self> {
        match self {
            TrialSpec::Global {
                povm,
                labels,
                d,
                priors,
                ..
            } => {
                if u.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        actual: u.dim(),
                    });
                }
                Ok(TrialSpec::Global {
                    povm,
                    labels,
                    d,
                    priors,
                    frame: Some(Arc::new(u)),
                })
            }
            other => Ok(other),
        }
    }

    pub fn locc(protocol: LoccProtocol, priors: Priors) -> Result<Self> {
        let (d_a, d_b) = protocol.dims();
        let r = regroup(
            &SpaceLayout::system_major(d_a, d_b),
            &SpaceLayout::party_major(d_a, d_b),
        )?;
        Ok(TrialSpec::Locc {
            protocol: Arc::new(protocol),
            priors,
            regroup: Arc::new(r),
        })
    }

    pub fn priors(&self) -> Priors {
        match self {
            TrialSpec::Global { priors, .. } | TrialSpec::Locc { priors, .. } => *priors,
        }
    }
}

/// Draws the true label and the three states `(φ_μ, φ₁, φ₂)` joined as
/// one system-major vector.
fn prepare(
    sampler: &mut HaarSampler,
    d: usize,
    priors: Priors,
    frame: Option<&DenseOperator>,
) -> (Label, DVector<C64>) {
    let truth = if sampler.uniform() < priors.eta1 {
        Label::First
    } else {
        Label::Second
    };
    let mut phi1 = sampler.state(d);
    let mut phi2 = sampler.state(d);
    if let Some(u) = frame {
        phi1 = u.apply(&phi1);
        phi2 = u.apply(&phi2);
    }
    let input = if truth == Label::First { &phi1 } else { &phi2 };
    (truth, kron_vec(&kron_vec(input, &phi1), &phi2))
}

/// Inverse-CDF draw; zero-weight outcomes are never chosen.
fn sample_outcome(probs: &[f64], u: f64, trial: u64) -> Result<usize> {
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_TOL || probs.iter().any(|p| *p < -PROBABILITY_TOL) {
        return Err(Error::ProbabilityLeak { trial, sum });
    }
    let target = u * sum;
    let mut acc = 0.0;
    let mut last = None;
    for (k, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = Some(k);
        if target < acc {
            return Ok(k);
        }
    }
    last.ok_or(Error::ZeroNormBranch { trial })
}

pub fn run_trial_global(
    povm: &Povm,
    labels: &[Label],
    d: usize,
    priors: Priors,
    frame: Option<&DenseOperator>,
    sampler: &mut HaarSampler,
) -> Result<TrialRecord> {
    let (truth, psi) = prepare(sampler, d, priors, frame);
    let probs: Vec<f64> = povm
        .elements()
        .iter()
        .map(|e| e.operator.expectation(&psi))
        .collect();
    let k = sample_outcome(&probs, sampler.uniform(), sampler.stream())?;
    Ok(TrialRecord {
        seed: sampler.seed(),
        index: sampler.stream(),
        true_label: truth,
        declared: labels[k],
        transcript: vec![(Party::Whole, k)],
    })
}

/// Runs the protocol on the joint state held as an `n_a × n_b` matrix:
/// Alice's Kraus acts from the left, Bob's through its transpose on the right.
pub fn run_trial_locc(
    protocol: &LoccProtocol,
    regroup: &BasisPermutation,
    priors: Priors,
    sampler: &mut HaarSampler,
) -> Result<TrialRecord> {
    let (d_a, d_b) = protocol.dims();
    let (truth, psi) = prepare(sampler, d_a * d_b, priors, None);
    let party = regroup.apply_vec(&psi);
    let (n_a, n_b) = (
        protocol.local_dim(Party::Alice),
        protocol.local_dim(Party::Bob),
    );
    let mut state = DMatrix::from_row_slice(n_a, n_b, party.as_slice());
    let trial = sampler.stream();
    let mut transcript = Vec::new();
    let mut node = protocol.root();
    let declared = loop {
        match node {
            ProtocolNode::Declare(l) => break *l,
            ProtocolNode::Measure { step, children } => {
                let branches: Vec<DMatrix<C64>> =
                    (0..children.len()).map(|k| step.act(k, &state)).collect();
                let probs: Vec<f64> = branches.iter().map(|b| b.norm_squared()).collect();
                let k = sample_outcome(&probs, sampler.uniform(), trial)?;
                let norm = probs[k].sqrt();
                if norm == 0.0 || !norm.is_finite() {
                    return Err(Error::ZeroNormBranch { trial });
                }
                state = branches[k].unscale(norm);
                transcript.push((step.party(), k));
                node = &children[k];
            }
        }
    };
    Ok(TrialRecord {
        seed: sampler.seed(),
        index: trial,
        true_label: truth,
        declared,
        transcript,
    })
}

/// Trial `index` of the batch seeded by `seed`; independent of scheduling.
pub fn run_trial(spec: &TrialSpec, seed: u64, index: u64) -> Result<TrialRecord> {
    let mut sampler = HaarSampler::for_trial(seed, index);
    match spec {
        TrialSpec::Global {
            povm,
            labels,
            d,
            priors,
            frame,
        } => run_trial_global(povm, labels, *d, *priors, frame.as_deref(), &mut sampler),
        TrialSpec::Locc {
            protocol,
            priors,
            regroup,
        } => run_trial_locc(protocol, regroup, *priors, &mut sampler),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minerr::{global_povm, minerr_locc_protocol};

    #[test]
    fn outcome_sampling() {
        assert_eq!(sample_outcome(&[0.25, 0.0, 0.75], 0.1, 0).unwrap(), 0);
        assert_eq!(sample_outcome(&[0.25, 0.0, 0.75], 0.25, 0).unwrap(), 2);
        assert_eq!(sample_outcome(&[0.0, 1.0], 0.0, 0).unwrap(), 1);
        assert!(matches!(
            sample_outcome(&[0.5, 0.4], 0.1, 7),
            Err(Error::ProbabilityLeak { trial: 7, .. })
        ));
    }

    #[test]
    fn trials_are_reproducible() {
        let priors = Priors::from_eta1(0.3).unwrap();
        let spec = TrialSpec::global(global_povm(2, priors).unwrap(), 2, priors).unwrap();
        for i in 0..20 {
            assert_eq!(
                run_trial(&spec, 9, i).unwrap(),
                run_trial(&spec, 9, i).unwrap()
            );
        }
    }

    #[test]
    fn pure_prior_never_errs() {
        let priors = Priors::from_eta1(1.0).unwrap();
        let spec = TrialSpec::locc(minerr_locc_protocol(2, 2, priors).unwrap(), priors).unwrap();
        for i in 0..50 {
            assert_eq!(
                run_trial(&spec, 1, i).unwrap().outcome(),
                TrialOutcome::Success
            );
        }
    }

    #[test]
    fn locc_transcripts_reach_leaves() {
        let priors = Priors::equal();
        let protocol = minerr_locc_protocol(2, 2, priors).unwrap();
        let spec = TrialSpec::locc(protocol.clone(), priors).unwrap();
        for i in 0..50 {
            let r = run_trial(&spec, 3, i).unwrap();
            assert_eq!(protocol.declare(&r.transcript), Some(r.declared));
        }
    }
}
