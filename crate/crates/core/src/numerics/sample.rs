//! Random input generation for numerical checks.
//!
//! Magnitudes are drawn log-uniformly from `[2^lo, 2^hi]` (default
//! `[2^-30, 2^30]`), which keeps every intermediate of the programs we check
//! far from overflow and underflow. Every sample index has its own seeded
//! stream, so results do not depend on evaluation order or thread count.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::rounding::Format;

/// Admissible values for one input position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InputDomain {
    /// Either sign, log-uniform magnitude.
    Any,
    /// Positive, log-uniform magnitude.
    Positive,
    /// Positive, log-uniform in `[lo, hi]` (`0 < lo ≤ hi`).
    Range(f64, f64),
}

type CustomFn = Arc<dyn Fn(&mut ChaCha8Rng) -> Vec<f64> + Send + Sync>;

/// A reproducible input generator.
#[derive(Clone)]
pub struct Sampler {
    pub seed: u64,
    pub log2_min: f64,
    pub log2_max: f64,
    /// Per-position domains; positions beyond the list use `default_domain`.
    pub domains: Vec<InputDomain>,
    pub default_domain: InputDomain,
    custom: Option<CustomFn>,
}

impl fmt::Debug for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Sampler")
            .field("seed", &self.seed)
            .field("log2_min", &self.log2_min)
            .field("log2_max", &self.log2_max)
            .field("domains", &self.domains)
            .field("default_domain", &self.default_domain)
            .field("custom", &self.custom.is_some())
            .finish()
    }
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler {
            seed: 0x5eed_0001,
            log2_min: -30.0,
            log2_max: 30.0,
            domains: Vec::new(),
            default_domain: InputDomain::Any,
            custom: None,
        }
    }
}

impl Sampler {
    pub fn with_seed(seed: u64) -> Self {
        Sampler {
            seed,
            ..Sampler::default()
        }
    }

    pub fn seeded(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn positive(mut self) -> Self {
        self.default_domain = InputDomain::Positive;
        self
    }

    pub fn domains(mut self, domains: Vec<InputDomain>) -> Self {
        self.domains = domains;
        self
    }

    /// Replaces the generator with a custom joint distribution (used when
    /// inputs are correlated, e.g. positive definite matrices).
    pub fn custom(mut self, f: impl Fn(&mut ChaCha8Rng) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.custom = Some(Arc::new(f));
        self
    }

    /// The independent random stream for one sample (and retry attempt).
    pub fn rng_for(&self, sample: u64, attempt: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sample.wrapping_mul(1024).wrapping_add(attempt));
        rng
    }

    /// A log-uniform magnitude in `[2^lo, 2^hi]`.
    pub fn magnitude(&self, rng: &mut ChaCha8Rng) -> f64 {
        let e: f64 = rng.gen_range(self.log2_min..=self.log2_max);
        e.exp2()
    }

    fn draw_one(&self, rng: &mut ChaCha8Rng, domain: InputDomain) -> f64 {
        match domain {
            InputDomain::Any => {
                let m = self.magnitude(rng);
                if rng.gen_bool(0.5) {
                    m
                } else {
                    -m
                }
            }
            InputDomain::Positive => self.magnitude(rng),
            InputDomain::Range(lo, hi) => {
                let e: f64 = rng.gen_range(lo.log2()..=hi.log2());
                e.exp2().clamp(lo, hi)
            }
        }
    }

    /// Draws `n` inputs representable in `format`.
    pub fn draw(&self, rng: &mut ChaCha8Rng, n: usize, format: Format) -> Vec<f64> {
        let raw = match &self.custom {
            Some(f) => f(rng),
            None => (0..n)
                .map(|i| {
                    let d = self.domains.get(i).copied().unwrap_or(self.default_domain);
                    self.draw_one(rng, d)
                })
                .collect(),
        };
        raw.into_iter().map(|x| format.round(x)).collect()
    }
}
