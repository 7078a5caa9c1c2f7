//! Interval and load distributions.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform draw in `(0, 1]`.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Pareto law `P(Y > t) = (scale/t)^p` for `t ≥ scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeavyTailSpec {
    pub exponent: f64,
    pub scale: f64,
    /// Round samples up to integers.
    pub integer_valued: bool,
}

impl Default for HeavyTailSpec {
    fn default() -> Self {
        HeavyTailSpec {
            exponent: 1.5,
            scale: 1.0,
            integer_valued: true,
        }
    }
}

/// Cap on integer draws, far beyond any trace length.
const MAX_INTEGER_DRAW: f64 = (1u64 << 52) as f64;

impl HeavyTailSpec {
    pub fn new(exponent: f64, scale: f64, integer_valued: bool) -> Result<Self> {
        let spec = HeavyTailSpec {
            exponent,
            scale,
            integer_valued,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exponent > 1.0 && self.exponent < 2.0) {
            return Err(Error::config(
                "load_exponent",
                format!("tail exponent must lie in (1, 2), got {}", self.exponent),
            ));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::config(
                "load_scale",
                format!("scale must be positive, got {}", self.scale),
            ));
        }
        Ok(())
    }

    /// Mean of the continuous law, `scale·p/(p−1)`.
    pub fn mean(&self) -> f64 {
        self.scale * self.exponent / (self.exponent - 1.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let y = self.scale * open_unit(rng).powf(-1.0 / self.exponent);
        if self.integer_valued {
            y.ceil().min(MAX_INTEGER_DRAW)
        } else {
            y
        }
    }

    /// Integer draw (rounded up regardless of the flag).
    pub fn sample_count<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.sample(rng).ceil().min(MAX_INTEGER_DRAW) as u64
    }
}

/// Finite-variance laws for OFF intervals, gaps and heights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LightTail {
    Exponential { mean: f64 },
    /// Uniform on `mean·[1 − rel, 1 + rel]`.
    Uniform { mean: f64, rel: f64 },
    /// Normal, redrawn until nonnegative.
    Gaussian { mean: f64, std: f64 },
    Constant { mean: f64 },
}

impl LightTail {
    pub fn exponential(mean: f64) -> Self {
        LightTail::Exponential { mean }
    }

    pub fn nominal_mean(&self) -> f64 {
        match *self {
            LightTail::Exponential { mean }
            | LightTail::Uniform { mean, .. }
            | LightTail::Gaussian { mean, .. }
            | LightTail::Constant { mean } => mean,
        }
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        let mean = self.nominal_mean();
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(Error::config(key, format!("mean must be positive, got {mean}")));
        }
        match *self {
            LightTail::Uniform { rel, .. } if !(0.0..=1.0).contains(&rel) => Err(Error::config(
                key,
                format!("relative half-width must lie in [0, 1], got {rel}"),
            )),
            LightTail::Gaussian { std, .. } if !(std >= 0.0 && std.is_finite()) => Err(
                Error::config(key, format!("standard deviation must be nonnegative, got {std}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            LightTail::Exponential { mean } => mean * Exp::new(1.0).unwrap().sample(rng),
            LightTail::Uniform { mean, rel } => mean * (1.0 + rel * (2.0 * rng.random::<f64>() - 1.0)),
            LightTail::Gaussian { mean, std } => loop {
                let z: f64 = StandardNormal.sample(rng);
                let v = mean + std * z;
                if v >= 0.0 {
                    break v;
                }
            },
            LightTail::Constant { mean } => mean,
        }
    }

    /// Parses `exp:4`, `uniform:100:0.1`, `gauss:100:20` or `const:100`.
    pub fn parse(key: &str, text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.trim().split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| Error::config(key, format!("missing parameter in `{text}`")))?
                .parse::<f64>()
                .map_err(|_| Error::config(key, format!("bad number in `{text}`")))
        };
        let law = match parts[0].to_ascii_lowercase().as_str() {
            "exp" | "exponential" => LightTail::Exponential { mean: num(1)? },
            "uniform" | "unif" => LightTail::Uniform {
                mean: num(1)?,
                rel: num(2)?,
            },
            "gauss" | "gaussian" | "normal" => LightTail::Gaussian {
                mean: num(1)?,
                std: num(2)?,
            },
            "const" | "constant" => LightTail::Constant { mean: num(1)? },
            other => {
                return Err(Error::config(key, format!("unknown distribution `{other}`")));
            }
        };
        law.validate(key)?;
        Ok(law)
    }

    /// Inverse of [`LightTail::parse`].
    pub fn to_config_string(&self) -> String {
        match *self {
            LightTail::Exponential { mean } => format!("exp:{mean}"),
            LightTail::Uniform { mean, rel } => format!("uniform:{mean}:{rel}"),
            LightTail::Gaussian { mean, std } => format!("gauss:{mean}:{std}"),
            LightTail::Constant { mean } => format!("const:{mean}"),
        }
    }
}
