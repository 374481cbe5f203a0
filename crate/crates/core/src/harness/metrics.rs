//! Error norms and geometric trial statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values below this are floored before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorNorm {
    L2,
    Linf,
}

impl std::str::FromStr for ErrorNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(ErrorNorm::L2),
            "linf" => Ok(ErrorNorm::Linf),
            _ => Err(Error::InvalidConfig(format!("unknown norm `{s}`"))),
        }
    }
}

/// Relative discrete error over grid values:
/// `||f - g||_2 / ||f||_2` or `max |f - g| / max |f|`.
pub fn relative_error(approx: &[f64], target: &[f64], norm: ErrorNorm) -> Result<f64> {
    if approx.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: target.len(),
            got: approx.len(),
        });
    }
    let (num, den) = match norm {
        ErrorNorm::L2 => {
            let num: f64 = approx.iter().zip(target).map(|(a, f)| (f - a) * (f - a)).sum();
            let den: f64 = target.iter().map(|f| f * f).sum();
            (num.sqrt(), den.sqrt())
        }
        ErrorNorm::Linf => {
            let num = approx.iter().zip(target).map(|(a, f)| (f - a).abs()).fold(0.0, f64::max);
            let den = target.iter().map(|f| f.abs()).fold(0.0, f64::max);
            (num, den)
        }
    };
    if !(den > 0.0) {
        return Err(Error::InvalidConfig("target vanishes on the grid".into()));
    }
    Ok(num / den)
}

/// Geometric mean `10^mu` and band `10^(mu +- s)` of positive values, where
/// `mu` and `s` are the mean and corrected standard deviation of `log10`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricStats {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    /// Set when any value was at or below zero and had to be floored.
    pub floored: bool,
}

pub fn geometric_stats(values: &[f64]) -> GeometricStats {
    assert!(!values.is_empty(), "geometric statistics of an empty sample");
    let mut floored = false;
    let logs: Vec<f64> = values
        .iter()
        .map(|&v| {
            if !(v > LOG_FLOOR) {
                floored = true;
                LOG_FLOOR.log10()
            } else {
                v.log10()
            }
        })
        .collect();
    let t = logs.len() as f64;
    let mu = logs.iter().sum::<f64>() / t;
    let sd = if logs.len() > 1 {
        (logs.iter().map(|l| (l - mu) * (l - mu)).sum::<f64>() / (t - 1.0)).sqrt()
    } else {
        0.0
    };
    GeometricStats {
        mean: 10f64.powf(mu),
        lower: 10f64.powf(mu - sd),
        upper: 10f64.powf(mu + sd),
        floored,
    }
}
