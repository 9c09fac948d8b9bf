use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;

/// The bounded noise laws supported for matrix entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// `1` with probability `mean`, else `0`.
    BernoulliMean { mean: f64 },
    /// Uniform on `[lo, hi]`.
    UniformInterval { lo: f64, hi: f64 },
    PointMass { value: f64 },
    /// `hi` with probability `weight`, else `lo`.
    TwoPoint { lo: f64, hi: f64, weight: f64 },
}

/// A noise law with its mean, variance bound `sigma^2` and support
/// half-width `kappa`, all known in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    family: Family,
}

impl DistributionSpec {
    pub fn new(family: Family) -> Result<Self, ModelError> {
        let bad = |m: &str| Err(ModelError::Distribution(m.to_string()));
        let finite = match family {
            Family::BernoulliMean { mean } => mean.is_finite(),
            Family::UniformInterval { lo, hi } => lo.is_finite() && hi.is_finite(),
            Family::PointMass { value } => value.is_finite(),
            Family::TwoPoint { lo, hi, weight } => {
                lo.is_finite() && hi.is_finite() && weight.is_finite()
            }
        };
        if !finite {
            return bad("parameters must be finite");
        }
        match family {
            Family::BernoulliMean { mean } if !(0.0..=1.0).contains(&mean) => {
                bad("bernoulli mean must lie in [0, 1]")
            }
            Family::UniformInterval { lo, hi } if lo > hi => bad("uniform interval needs lo <= hi"),
            Family::TwoPoint { weight, .. } if !(0.0..=1.0).contains(&weight) => {
                bad("two-point weight must lie in [0, 1]")
            }
            _ => Ok(Self { family }),
        }
    }

    pub fn bernoulli(mean: f64) -> Result<Self, ModelError> {
        Self::new(Family::BernoulliMean { mean })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self, ModelError> {
        Self::new(Family::UniformInterval { lo, hi })
    }

    pub fn point(value: f64) -> Self {
        Self {
            family: Family::PointMass { value },
        }
    }

    pub fn two_point(lo: f64, hi: f64, weight: f64) -> Result<Self, ModelError> {
        Self::new(Family::TwoPoint { lo, hi, weight })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn mean(&self) -> f64 {
        match self.family {
            Family::BernoulliMean { mean } => mean,
            Family::UniformInterval { lo, hi } => 0.5 * (lo + hi),
            Family::PointMass { value } => value,
            Family::TwoPoint { lo, hi, weight } => lo + weight * (hi - lo),
        }
    }

    /// Exact variance, used as `sigma^2`.
    pub fn variance(&self) -> f64 {
        match self.family {
            Family::BernoulliMean { mean } => mean * (1.0 - mean),
            Family::UniformInterval { lo, hi } => (hi - lo).powi(2) / 12.0,
            Family::PointMass { .. } => 0.0,
            Family::TwoPoint { lo, hi, weight } => weight * (1.0 - weight) * (hi - lo).powi(2),
        }
    }

    pub fn sigma(&self) -> f64 {
        self.variance().sqrt()
    }

    /// `max |X - mean|` over the points carrying positive probability.
    pub fn kappa(&self) -> f64 {
        let m = self.mean();
        match self.family {
            Family::BernoulliMean { mean } => {
                Self::two_point_kappa(0.0, 1.0, mean, m)
            }
            Family::UniformInterval { lo, hi } => 0.5 * (hi - lo),
            Family::PointMass { .. } => 0.0,
            Family::TwoPoint { lo, hi, weight } => Self::two_point_kappa(lo, hi, weight, m),
        }
    }

    fn two_point_kappa(lo: f64, hi: f64, weight: f64, mean: f64) -> f64 {
        let mut k: f64 = 0.0;
        if weight < 1.0 {
            k = k.max((lo - mean).abs());
        }
        if weight > 0.0 {
            k = k.max((hi - mean).abs());
        }
        k
    }

    /// Draws one value. Point masses consume no randomness, and a two-point
    /// law on `{0, 1}` consumes exactly what a Bernoulli draw does.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            Family::BernoulliMean { mean } => {
                if rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            Family::UniformInterval { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Family::PointMass { value } => value,
            Family::TwoPoint { lo, hi, weight } => {
                if rng.random::<f64>() < weight {
                    hi
                } else {
                    lo
                }
            }
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::BernoulliMean { mean } => write!(f, "bernoulli-mean {mean}"),
            Family::UniformInterval { lo, hi } => write!(f, "uniform-interval {lo} {hi}"),
            Family::PointMass { value } => write!(f, "point-mass {value}"),
            Family::TwoPoint { lo, hi, weight } => write!(f, "two-point {lo} {hi} {weight}"),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = ModelError;

    /// Parses the `Display` form, e.g. `two-point 0 1 0.85`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split_whitespace();
        let name = parts.next().unwrap_or_default();
        let args: Vec<f64> = parts
            .map(|t| {
                t.parse()
                    .map_err(|_| ModelError::Distribution(format!("bad number {t:?}")))
            })
            .collect::<Result<_, _>>()?;
        let want = |k: usize| -> Result<(), ModelError> {
            if args.len() == k {
                Ok(())
            } else {
                Err(ModelError::Distribution(format!(
                    "{name} takes {k} parameter(s), got {}",
                    args.len()
                )))
            }
        };
        match name {
            "bernoulli-mean" | "bernoulli" => {
                want(1)?;
                Self::bernoulli(args[0])
            }
            "uniform-interval" | "uniform" => {
                want(2)?;
                Self::uniform(args[0], args[1])
            }
            "point-mass" | "point" => {
                want(1)?;
                Self::new(Family::PointMass { value: args[0] })
            }
            "two-point" => {
                want(3)?;
                Self::two_point(args[0], args[1], args[2])
            }
            other => Err(ModelError::Distribution(format!(
                "unknown family {other:?} (expected bernoulli-mean, uniform-interval, point-mass or two-point)"
            ))),
        }
    }
}
