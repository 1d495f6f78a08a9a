use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{DenseOperator, C64};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Unitarily invariant random pure state in `C^d`: a normalized standard
/// complex Gaussian vector.
pub fn haar_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<C64> {
    loop {
        let v = DVector::from_fn(d, |_, _| gaussian(rng));
        let norm = v.norm();
        if norm > 0.0 {
            return v.unscale(norm);
        }
    }
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DenseOperator {
    let z = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..d {
        let rkk = r[(k, k)];
        let phase = if rkk.norm() > 0.0 {
            rkk / rkk.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        q.column_mut(k).iter_mut().for_each(|x| *x *= phase);
    }
    DenseOperator::from_matrix(q)
}

/// Seeded random stream for one trial; `(seed, stream)` fully determines it.
#[derive(Clone, Debug)]
pub struct HaarSampler {
    rng: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl HaarSampler {
    pub fn new(seed: u64) -> Self {
        Self::for_trial(seed, 0)
    }

    /// Child stream `index` of the base seed.
    pub fn for_trial(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self {
            rng,
            seed,
            stream: index,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn state(&mut self, d: usize) -> DVector<C64> {
        haar_state(d, &mut self.rng)
    }

    pub fn unitary(&mut self, d: usize) -> DenseOperator {
        haar_unitary(d, &mut self.rng)
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
