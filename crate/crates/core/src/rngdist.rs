//! Seedable random streams and the handful of probability laws the
//! simulator needs: exponential demand inter-arrivals, the lead-time
//! families, and the standard normal quantile used for parameter selection.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A reproducible stream of random variates.
///
/// Backed by ChaCha8, which is counter based: the `(seed, stream_id)` pair
/// selects the key and the stream nonce, so each replication owns an
/// independent sequence regardless of which worker thread runs it.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on the open interval `(0, 1)`.
    #[inline]
    pub fn open01(&mut self) -> f64 {
        Open01.sample(&mut self.rng)
    }
}

/// Distribution of a single replenishment lead time.
///
/// All durations are in model time units. Values are checked by
/// [`LeadTimeSpec::validate`], which every constructor and every config
/// loader calls before the spec reaches a sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LeadTimeSpec {
    Exponential { mean: f64 },
    ShiftedExponential { shift: f64, mean: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Survival function `1 / (1 + scale * x)^shape`.
    Pareto { shape: f64, scale: f64 },
    Deterministic { value: f64 },
}

impl LeadTimeSpec {
    pub fn exponential(mean: f64) -> Result<Self> {
        Self::Exponential { mean }.validated()
    }

    pub fn shifted_exponential(shift: f64, mean: f64) -> Result<Self> {
        Self::ShiftedExponential { shift, mean }.validated()
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::Uniform { lo, hi }.validated()
    }

    pub fn pareto(shape: f64, scale: f64) -> Result<Self> {
        Self::Pareto { shape, scale }.validated()
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        Self::Deterministic { value }.validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("lead time {name} must be positive and finite, got {v}")))
            }
        }
        match *self {
            Self::Exponential { mean } => positive("mean", mean),
            Self::ShiftedExponential { shift, mean } => {
                positive("shift", shift)?;
                positive("mean", mean)
            }
            Self::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
                    return Err(invalid(format!(
                        "uniform lead time needs 0 <= lo < hi, got [{lo}, {hi}]"
                    )));
                }
                Ok(())
            }
            Self::Pareto { shape, scale } => {
                positive("scale", scale)?;
                if !(shape.is_finite() && shape > 1.0) {
                    return Err(invalid(format!(
                        "pareto shape must exceed 1 for a finite mean, got {shape}"
                    )));
                }
                Ok(())
            }
            Self::Deterministic { value } => positive("value", value),
        }
    }

    /// Closed-form mean of the law.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Exponential { mean } => mean,
            Self::ShiftedExponential { shift, mean } => shift + mean,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::Pareto { shape, scale } => 1.0 / (scale * (shape - 1.0)),
            Self::Deterministic { value } => value,
        }
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match *self {
            Self::Exponential { mean } => -(-x / mean).exp_m1(),
            Self::ShiftedExponential { shift, mean } => {
                if x < shift {
                    0.0
                } else {
                    -(-(x - shift) / mean).exp_m1()
                }
            }
            Self::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::Pareto { shape, scale } => 1.0 - (1.0 + scale * x).powf(-shape),
            Self::Deterministic { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, Self::Exponential { .. })
    }

    /// Short human-readable label, used in reports.
    pub fn label(&self) -> String {
        match *self {
            Self::Exponential { mean } => format!("exponential(mean={mean})"),
            Self::ShiftedExponential { shift, mean } => {
                format!("shifted_exponential(shift={shift},mean={mean})")
            }
            Self::Uniform { lo, hi } => format!("uniform[{lo},{hi}]"),
            Self::Pareto { shape, scale } => format!("pareto(q={shape},tau={scale})"),
            Self::Deterministic { value } => format!("deterministic({value})"),
        }
    }
}

/// Draws one lead time.
#[inline]
pub fn sample_leadtime(spec: &LeadTimeSpec, rng: &mut RngStream) -> f64 {
    match *spec {
        LeadTimeSpec::Exponential { mean } => -mean * rng.open01().ln(),
        LeadTimeSpec::ShiftedExponential { shift, mean } => shift - mean * rng.open01().ln(),
        LeadTimeSpec::Uniform { lo, hi } => lo + (hi - lo) * rng.uniform(),
        // Inversion of the survival function; 1 - U is replaced by an
        // open-interval uniform, which has the same law.
        LeadTimeSpec::Pareto { shape, scale } => (rng.open01().powf(-1.0 / shape) - 1.0) / scale,
        LeadTimeSpec::Deterministic { value } => value,
    }
}

/// Exponential inter-arrival time for a Poisson process of the given rate.
#[inline]
pub fn exp_interarrival(rate: f64, rng: &mut RngStream) -> f64 {
    -rng.open01().ln() / rate
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function, from the complementary error function.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Inverse of the standard normal distribution function.
///
/// Acklam's rational approximation (relative error about 1.15e-9) followed by
/// one Newton step on `norm_cdf`, which brings the error to round-off level.
pub fn inv_norm_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "inverse normal cdf needs 0 < p < 1, got {p}"
        )));
    }
    if p == 0.5 {
        return Ok(0.0);
    }

    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_690e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - P_LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    // Newton step. In the upper tail the residual is formed from the
    // complement so it keeps its relative precision.
    let residual = if p > 0.5 {
        (1.0 - p) - 0.5 * libm::erfc(x * FRAC_1_SQRT_2)
    } else {
        norm_cdf(x) - p
    };
    Ok(x - residual / norm_pdf(x))
}
