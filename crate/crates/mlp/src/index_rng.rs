//! Deterministic randomness streams keyed by multi-index.
//!
//! Every Monte Carlo node of the estimator owns one independent stream,
//! addressed by `(master_seed, replication, theta)`. The key is hashed with
//! SHA-256 into a ChaCha8 seed, so streams for distinct keys are
//! computationally independent and the whole family is reproducible
//! bit-for-bit across runs, platforms and thread schedules. No global state.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};
use std::fmt;

use crate::error::{MlpError, Result};

/// An element of the index set `∪_n Z^n`: a finite, nonempty path of signed
/// integers. Children are built by appending; the parent is never mutated.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    path: Vec<i64>,
}

impl MultiIndex {
    /// The single-element index `(k)`.
    pub fn root(k: i64) -> Self {
        MultiIndex { path: vec![k] }
    }

    pub fn from_slice(path: &[i64]) -> Result<Self> {
        if path.is_empty() {
            return Err(MlpError::param("multi-index path must be nonempty"));
        }
        Ok(MultiIndex {
            path: path.to_vec(),
        })
    }

    /// New index with `(a, b)` appended, e.g. `(theta, l, i)` or `(theta, 0, -i)`.
    pub fn child(&self, a: i64, b: i64) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 2);
        path.extend_from_slice(&self.path);
        path.push(a);
        path.push(b);
        MultiIndex { path }
    }

    pub fn path(&self) -> &[i64] {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.path.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// One independent draw stream. The state is a pure function of
/// `(master_seed, replication, theta)`; `counter` counts the 64-bit words
/// consumed so far.
#[derive(Debug, Clone)]
pub struct StreamHandle {
    master_seed: u64,
    replication: u64,
    theta: MultiIndex,
    rng: ChaCha8Rng,
    counter: u64,
}

/// Derive the stream for `(master_seed, replication, theta)`.
///
/// The key is the length-prefixed serialization
/// `master_seed || replication || len(theta) || theta_1 || ... || theta_k`
/// (little-endian 64-bit words), which is injective over multi-indices, so
/// distinct keys can only collide by breaking SHA-256.
pub fn derive_stream(master_seed: u64, replication: u64, theta: &MultiIndex) -> StreamHandle {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(replication.to_le_bytes());
    hasher.update((theta.path.len() as u64).to_le_bytes());
    for v in &theta.path {
        hasher.update(v.to_le_bytes());
    }
    let seed: [u8; 32] = hasher.finalize().into();
    StreamHandle {
        master_seed,
        replication,
        theta: theta.clone(),
        rng: ChaCha8Rng::from_seed(seed),
        counter: 0,
    }
}

/// Map a uniform draw on `(0, 1]` to the time fraction with CDF `√b`.
/// Exposed for the stubbed-uniform oracle tests.
pub fn time_fraction_from_unit(u: f64) -> f64 {
    u * u
}

impl StreamHandle {
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn replication(&self) -> u64 {
        self.replication
    }

    pub fn theta(&self) -> &MultiIndex {
        &self.theta
    }

    pub fn draws_consumed(&self) -> u64 {
        self.counter
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        self.rng.next_u64()
    }

    /// Uniform on `(0, 1]`: the all-zero word maps to `2^-53`, never to 0.
    fn next_unit_open_closed(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[0, 1)`.
    fn next_unit_half_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    /// Draw the time fraction `r ∈ (0, 1]` with `P(r ≤ b) = √b`
    /// (inverse CDF `u ↦ u²` applied to a uniform on `(0, 1]`).
    pub fn sample_time_fraction(&mut self) -> f64 {
        time_fraction_from_unit(self.next_unit_open_closed())
    }

    /// Draw the intermediate time `s = t + (1 - t) r ∈ (t, 1]`.
    pub fn sample_r_time(&mut self, t: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&t) {
            return Err(MlpError::param(format!(
                "sample_r_time requires t in [0,1), got t={t}"
            )));
        }
        Ok(t + (1.0 - t) * self.sample_time_fraction())
    }

    /// One standard normal via the Marsaglia polar method. Consumes a
    /// data-dependent but stream-deterministic number of words.
    fn next_standard_normal_pair(&mut self) -> (f64, f64) {
        loop {
            let v1 = 2.0 * self.next_unit_half_open() - 1.0;
            let v2 = 2.0 * self.next_unit_half_open() - 1.0;
            let s = v1 * v1 + v2 * v2;
            if s >= 1.0 || s == 0.0 {
                continue;
            }
            let f = (-2.0 * s.ln() / s).sqrt();
            return (v1 * f, v2 * f);
        }
    }

    /// Draw a `d`-dimensional Brownian increment over duration `dt`:
    /// `√dt · z` with independent standard normal coordinates.
    pub fn sample_brownian_increment(&mut self, d: usize, dt: f64) -> Result<Vec<f64>> {
        if d == 0 {
            return Err(MlpError::param("brownian increment requires d >= 1"));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(MlpError::param(format!(
                "brownian increment requires dt > 0, got dt={dt}"
            )));
        }
        let scale = dt.sqrt();
        let mut out = Vec::with_capacity(d);
        while out.len() + 2 <= d {
            let (a, b) = self.next_standard_normal_pair();
            out.push(scale * a);
            out.push(scale * b);
        }
        if out.len() < d {
            let (a, _) = self.next_standard_normal_pair();
            out.push(scale * a);
        }
        Ok(out)
    }
}
