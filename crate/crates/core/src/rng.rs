//! Stateless, counter-based randomness.
//!
//! Every variate is a pure function of a 64-bit seed and a tuple of integer
//! ids, so a vertex draws the same value no matter which PE, batch or thread
//! evaluates it. Smoothed dependent minibatching interpolates two standard
//! normals on the unit circle and maps the result back through `Φ`.

use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::fmt;
use std::num::NonZeroU64;
use std::str::FromStr;

use statrs::function::erf::{erfc, erfc_inv};

use crate::{Error, Result};

/// Namespaces for the different consumers of randomness.
pub(crate) mod tag {
    pub const NS: u64 = 0x4e53;
    pub const LABOR: u64 = 0x4c42;
    pub const RW_PICK: u64 = 0x5257;
    pub const RW_RESTART: u64 = 0x5252;
    pub const NEGATIVE: u64 = 0x4e47;
    pub const SCHEDULE: u64 = 0x5343;
    pub const PARTITION: u64 = 0x5054;
    pub const BATCH: u64 = 0x4254;
    pub const SUPER: u64 = 0x5350;
}

#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn mix_start(seed: u64) -> u64 {
    splitmix64(seed ^ 0x6A09_E667_F3BC_C909)
}

#[inline]
fn mix_fold(h: u64, ids: impl IntoIterator<Item = u64>) -> u64 {
    ids.into_iter().fold(h, |h, id| {
        splitmix64(h ^ splitmix64(id.wrapping_add(0xD1B5_4A32_D192_ED03)))
    })
}

#[inline]
fn mix_iter(seed: u64, ids: impl IntoIterator<Item = u64>) -> u64 {
    mix_fold(mix_start(seed), ids)
}

/// 64-bit hash of a seed and an id tuple.
#[inline]
pub fn mix(seed: u64, ids: &[u64]) -> u64 {
    mix_iter(seed, ids.iter().copied())
}

#[inline]
fn unit_from_bits(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform variate in `[0, 1)` determined by `(seed, ids)`.
#[inline]
pub fn hash_uniform(seed: u64, ids: &[u64]) -> f64 {
    unit_from_bits(mix(seed, ids))
}

/// Standard normal variate determined by `(seed, ids)`, produced by inverting
/// `Φ` at a uniform in the open interval `(0, 1)`.
pub fn std_normal(seed: u64, ids: &[u64]) -> f64 {
    normal_from_bits(mix(seed, ids))
}

#[inline]
fn normal_from_bits(h: u64) -> f64 {
    let u = ((h >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    -SQRT_2 * erfc_inv(2.0 * u)
}

#[inline]
fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal CDF.
pub fn phi(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::input(format!(
            "phi needs a finite argument, got {x}"
        )));
    }
    Ok(norm_cdf(x))
}

const MAX_OPEN_UNIT: f64 = 1.0 - f64::EPSILON / 2.0;

#[inline]
fn interp_unchecked(z1: u64, z2: u64, c: f64, ids: impl IntoIterator<Item = u64> + Clone) -> f64 {
    let n1 = normal_from_bits(mix_iter(z1, ids.clone()));
    let n = if c == 0.0 {
        n1
    } else {
        let n2 = normal_from_bits(mix_iter(z2, ids));
        let angle = c * FRAC_PI_2;
        angle.cos() * n1 + angle.sin() * n2
    };
    norm_cdf(n).clamp(f64::MIN_POSITIVE, MAX_OPEN_UNIT)
}

/// Uniform variate whose underlying normal rotates from the `z1` draw
/// (`c = 0`) to the `z2` draw (`c = 1`). Marginally uniform for every `c`.
pub fn interp_variate(z1: u64, z2: u64, c: f64, ids: &[u64]) -> Result<f64> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::input(format!(
            "interpolation weight {c} outside [0, 1]"
        )));
    }
    if c == 1.0 {
        return Ok(interp_unchecked(z2, z1, 0.0, ids.iter().copied()));
    }
    Ok(interp_unchecked(z1, z2, c, ids.iter().copied()))
}

/// Number of iterations a seed pair is blended over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kappa {
    Finite(NonZeroU64),
    /// Never rotate: every sampled neighborhood stays fixed.
    Infinite,
}

impl Kappa {
    pub fn finite(k: u64) -> Result<Self> {
        NonZeroU64::new(k)
            .map(Kappa::Finite)
            .ok_or_else(|| Error::input("kappa must be at least 1"))
    }

    pub fn get(self) -> Option<u64> {
        match self {
            Kappa::Finite(k) => Some(k.get()),
            Kappa::Infinite => None,
        }
    }
}

impl fmt::Display for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kappa::Finite(k) => write!(f, "{k}"),
            Kappa::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Kappa {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "∞" | "infinite" => Ok(Kappa::Infinite),
            other => {
                let k: u64 = other.parse().map_err(|_| {
                    Error::input(format!(
                        "kappa must be a positive integer or `inf`, got `{other}`"
                    ))
                })?;
                Kappa::finite(k)
            }
        }
    }
}

/// Rotation state for smoothed dependent minibatching.
///
/// Within a group of `kappa` iterations the contribution of `z2` grows as
/// `i / kappa`. When a group completes, `z1` takes the value of `z2` and a
/// fresh `z2` is derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSchedule {
    kappa: Kappa,
    master: u64,
    rotations: u64,
    z1: u64,
    z2: u64,
    iteration: u64,
}

impl SeedSchedule {
    pub fn new(kappa: Kappa, master: u64) -> Self {
        SeedSchedule {
            kappa,
            master,
            rotations: 0,
            z1: Self::derive(master, 0),
            z2: Self::derive(master, 1),
            iteration: 0,
        }
    }

    fn derive(master: u64, index: u64) -> u64 {
        mix(master, &[tag::SCHEDULE, index])
    }

    pub fn kappa(&self) -> Kappa {
        self.kappa
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn z1(&self) -> u64 {
        self.z1
    }

    pub fn z2(&self) -> u64 {
        self.z2
    }

    /// Contribution `c` of `z2` at the current iteration.
    pub fn contribution(&self) -> f64 {
        match self.kappa {
            Kappa::Finite(k) => (self.iteration % k.get()) as f64 / k.get() as f64,
            Kappa::Infinite => 0.0,
        }
    }

    /// The schedule for the next iteration.
    #[must_use]
    pub fn advance(self) -> Self {
        let mut next = self;
        next.iteration += 1;
        if let Kappa::Finite(k) = self.kappa {
            if next.iteration.is_multiple_of(k.get()) {
                next.rotations += 1;
                next.z1 = self.z2;
                next.z2 = Self::derive(self.master, next.rotations + 1);
            }
        }
        next
    }

    /// Variates for the current iteration.
    pub fn source(&self) -> VariateSource {
        let c = self.contribution();
        if c == 0.0 {
            VariateSource::plain(self.z1)
        } else {
            VariateSource::smoothed(self.z1, self.z2, c)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum SourceMode {
    Plain { seed: u64 },
    Smoothed { z1: u64, z2: u64, c: f64 },
}

/// Where samplers get their uniforms from: a single epoch seed, or a blend of
/// two seeds. Carries a layer namespace so each expansion layer draws
/// independent values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariateSource {
    mode: SourceMode,
    layer: u64,
}

impl VariateSource {
    pub fn plain(seed: u64) -> Self {
        VariateSource {
            mode: SourceMode::Plain { seed },
            layer: 0,
        }
    }

    /// Panics if `c` is outside `[0, 1)`; use [`SeedSchedule::source`] for a
    /// checked construction.
    pub fn smoothed(z1: u64, z2: u64, c: f64) -> Self {
        assert!(
            (0.0..1.0).contains(&c),
            "interpolation weight {c} outside [0, 1)"
        );
        VariateSource {
            mode: SourceMode::Smoothed { z1, z2, c },
            layer: 0,
        }
    }

    /// Same source, namespaced to expansion layer `layer`.
    #[must_use]
    pub fn layer(self, layer: usize) -> Self {
        VariateSource {
            layer: layer as u64,
            ..self
        }
    }

    /// Same source with a different primary seed, used to derive independent
    /// streams (for example per trial).
    #[must_use]
    pub fn reseeded(self, salt: u64) -> Self {
        let mode = match self.mode {
            SourceMode::Plain { seed } => SourceMode::Plain {
                seed: mix(seed, &[salt]),
            },
            SourceMode::Smoothed { z1, z2, c } => SourceMode::Smoothed {
                z1: mix(z1, &[salt]),
                z2: mix(z2, &[salt]),
                c,
            },
        };
        VariateSource { mode, ..self }
    }

    /// Hash state after absorbing `ids`, so that draws sharing a long key
    /// prefix only pay for their suffix.
    pub fn prefix(&self, ids: &[u64]) -> VariatePrefix {
        let key = || std::iter::once(self.layer).chain(ids.iter().copied());
        match self.mode {
            SourceMode::Plain { seed } => VariatePrefix {
                h1: mix_iter(seed, key()),
                h2: 0,
                blend: None,
            },
            SourceMode::Smoothed { z1, z2, c } => VariatePrefix {
                h1: mix_iter(z1, key()),
                h2: if c == 0.0 { 0 } else { mix_iter(z2, key()) },
                blend: Some(c),
            },
        }
    }

    /// Uniform variate in `[0, 1)` for `ids` under this source and layer.
    #[inline]
    pub fn uniform(&self, ids: &[u64]) -> f64 {
        let key = std::iter::once(self.layer).chain(ids.iter().copied());
        match self.mode {
            SourceMode::Plain { seed } => unit_from_bits(mix_iter(seed, key)),
            SourceMode::Smoothed { z1, z2, c } => interp_unchecked(z1, z2, c, key),
        }
    }
}

/// Partially keyed variate stream from [`VariateSource::prefix`].
/// `p.uniform(b)` equals `source.uniform(a ++ b)` for `p = source.prefix(a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariatePrefix {
    h1: u64,
    h2: u64,
    /// `None` for a plain source, else the weight of the second stream.
    blend: Option<f64>,
}

impl VariatePrefix {
    #[must_use]
    #[inline]
    pub fn extend(&self, ids: &[u64]) -> Self {
        let two_streams = self.blend.is_some_and(|c| c != 0.0);
        VariatePrefix {
            h1: mix_fold(self.h1, ids.iter().copied()),
            h2: if two_streams {
                mix_fold(self.h2, ids.iter().copied())
            } else {
                0
            },
            blend: self.blend,
        }
    }

    #[inline]
    pub fn uniform(&self, ids: &[u64]) -> f64 {
        let h1 = mix_fold(self.h1, ids.iter().copied());
        let Some(c) = self.blend else {
            return unit_from_bits(h1);
        };
        let n1 = normal_from_bits(h1);
        let n = if c == 0.0 {
            n1
        } else {
            let n2 = normal_from_bits(mix_fold(self.h2, ids.iter().copied()));
            let angle = c * FRAC_PI_2;
            angle.cos() * n1 + angle.sin() * n2
        };
        norm_cdf(n).clamp(f64::MIN_POSITIVE, MAX_OPEN_UNIT)
    }
}
