//! Seeded random streams and samplers for `μ` and `μ_m`.
//!
//! Every random quantity in a run comes from an [`RngStream`], a ChaCha12
//! generator keyed by `(seed, stream id)`. Stream ids are derived from
//! `(replication, level, role)` with [`stream_id`], so each level of each
//! replication draws from its own stream and results do not depend on the
//! order in which replications are executed.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::spectral::SpectralBasis;

/// What a stream is used for. Part of the stream id derivation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamRole {
    /// Points for one level of the multilevel estimator.
    Level,
    /// Uniform points for the residual average of the integration rule.
    Residual,
    /// Plain Monte Carlo points of direct simulation.
    Direct,
    /// Generation of random target functions.
    Target,
}

impl StreamRole {
    fn tag(self) -> u64 {
        match self {
            StreamRole::Level => 1,
            StreamRole::Residual => 2,
            StreamRole::Direct => 3,
            StreamRole::Target => 4,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(splitmix64(role) ^ level) ^ replication)`.
pub fn stream_id(replication: u64, level: u64, role: StreamRole) -> u64 {
    splitmix64(splitmix64(splitmix64(role.tag()) ^ level) ^ replication)
}

/// A ChaCha12 stream: `seed_from_u64(seed)` followed by `set_stream(id)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    id: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(id);
        RngStream { seed, id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> u64 {
        self.id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Identifies one replication of an experiment; hands out its streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReplicationSeed {
    pub seed: u64,
    pub replication: u64,
}

impl ReplicationSeed {
    pub fn new(seed: u64, replication: u64) -> Self {
        ReplicationSeed { seed, replication }
    }

    pub fn stream(&self, role: StreamRole, level: u64) -> RngStream {
        RngStream::new(self.seed, stream_id(self.replication, level, role))
    }
}

/// Uniform point on `[0,1)^d`.
pub fn sample_mu<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.gen::<f64>()).collect()
}

/// Point with density `u_m` with respect to `μ`.
///
/// Fourier bases have `u_m ≡ 1`, so this is [`sample_mu`]. Otherwise the
/// mixture `(1/m) Σ_i |b_i|² dμ` is sampled by picking `i` uniformly and then
/// drawing from `|b_i|² dμ` by rejection from uniform proposals.
pub fn sample_mu_m<R: Rng + ?Sized>(basis: &SpectralBasis, m: usize, rng: &mut R) -> Result<Vec<f64>> {
    if m == 0 || m > basis.len() {
        return Err(Error::IndexOutOfRange {
            index: m,
            len: basis.len(),
        });
    }
    match basis.system() {
        None => Ok(sample_mu(basis.dim(), rng)),
        Some(system) => {
            let i = rng.gen_range(0..m);
            let bound = system.sup_abs_sq(i);
            rejection_sample(|x: &[f64]| system.eval(i, x).norm_sqr(), bound, basis.dim(), rng)
        }
    }
}

/// Exact sample from the normalized `density` on `[0,1)^d` with uniform
/// proposals. `bound` must dominate the density.
pub fn rejection_sample<F, R>(density: F, bound: f64, d: usize, rng: &mut R) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    rejection_sample_counted(density, bound, d, rng).map(|(x, _)| x)
}

/// As [`rejection_sample`], also returning the number of proposals drawn.
pub fn rejection_sample_counted<F, R>(
    density: F,
    bound: f64,
    d: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, u64)>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "rejection bound must be positive and finite, got {bound}"
        )));
    }
    let mut proposals = 0u64;
    loop {
        proposals += 1;
        let x = sample_mu(d, rng);
        let u: f64 = rng.gen();
        if u * bound < density(&x) {
            return Ok((x, proposals));
        }
    }
}
