//! Monte Carlo estimation of identification success over Haar-random
//! reference states.

pub mod batch;
pub mod haar;
pub mod protocol;
pub mod trial;

pub use batch::{run_batch, run_batch_sequential, BatchStats};
pub use haar::{haar_state, haar_unitary, HaarSampler};
pub use protocol::{Branch, EffectivePovm, LocalStep, LoccProtocol, ProtocolNode};
pub use trial::{
    run_trial, run_trial_global, run_trial_locc, TrialOutcome, TrialRecord, TrialSpec,
};
