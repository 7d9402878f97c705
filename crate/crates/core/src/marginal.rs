//! One-dimensional element densities.
//!
//! Inside an element every coordinate follows an independent polynomial
//! density on its interval `[lo, hi]`. With normalized coordinate
//! `t = (x - lo) / (hi - lo)` the linear family is
//!
//! ```text
//! p(t | theta) = 1 + theta * (2t - 1),      theta in [-1, 1]
//! F(t | theta) = (1 - theta) t + theta t^2
//! ```
//!
//! which is nonnegative and integrates to one for every admissible `theta`.
//! The constant order is the special case `theta = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{DetError, Result};

/// Below this slope the quantile is taken as the uniform one.
const THETA_EPS: f64 = 1e-10;

/// Polynomial order of the per-dimension element densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    Constant,
    #[default]
    Linear,
}

impl std::str::FromStr for Order {
    type Err = DetError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "constant" | "0" => Ok(Order::Constant),
            "linear" | "1" => Ok(Order::Linear),
            other => Err(DetError::InvalidInput(format!("unknown order `{other}`"))),
        }
    }
}

/// Marginal density of one coordinate inside an element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalModel {
    order: Order,
    theta: f64,
}

impl MarginalModel {
    pub const UNIFORM: MarginalModel = MarginalModel {
        order: Order::Constant,
        theta: 0.0,
    };

    pub fn constant() -> Self {
        Self::UNIFORM
    }

    /// Linear marginal with slope `theta`, which must lie in `[-1, 1]`.
    pub fn linear(theta: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&theta) {
            return Err(DetError::Domain(format!("theta {theta} outside [-1, 1]")));
        }
        Ok(MarginalModel {
            order: Order::Linear,
            theta,
        })
    }

    /// Builds a model of the given order. A constant model only accepts `theta == 0`.
    pub fn new(order: Order, theta: f64) -> Result<Self> {
        match order {
            Order::Linear => Self::linear(theta),
            Order::Constant if theta == 0.0 => Ok(Self::UNIFORM),
            Order::Constant => Err(DetError::Domain(format!(
                "constant marginal requires theta = 0, got {theta}"
            ))),
        }
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Density on the unit interval, `t` in `[0, 1]`.
    #[inline]
    pub fn unit_density(&self, t: f64) -> f64 {
        1.0 + self.theta * (2.0 * t - 1.0)
    }

    #[inline]
    pub fn unit_cdf(&self, t: f64) -> f64 {
        (1.0 - self.theta) * t + self.theta * t * t
    }

    /// Inverse of [`unit_cdf`](Self::unit_cdf) for `y` in `[0, 1]`.
    #[inline]
    pub fn unit_quantile(&self, y: f64) -> f64 {
        let theta = self.theta;
        if theta.abs() < THETA_EPS {
            return y;
        }
        if y <= 0.0 {
            return 0.0;
        }
        // Root of theta t^2 + (1 - theta) t - y = 0 written without the
        // subtraction that cancels for small theta.
        let b = 1.0 - theta;
        let t = 2.0 * y / (b + (b * b + 4.0 * theta * y).sqrt());
        t.clamp(0.0, 1.0)
    }

    /// `p[x | theta]` on `[lo, hi]`.
    pub fn density(&self, lo: f64, hi: f64, x: f64) -> Result<f64> {
        let t = normalize(lo, hi, x)?;
        Ok(self.unit_density(t) / (hi - lo))
    }

    pub fn cdf(&self, lo: f64, hi: f64, x: f64) -> Result<f64> {
        let t = normalize(lo, hi, x)?;
        Ok(self.unit_cdf(t).clamp(0.0, 1.0))
    }

    pub fn quantile(&self, lo: f64, hi: f64, y: f64) -> Result<f64> {
        check_interval(lo, hi)?;
        if !(0.0..=1.0).contains(&y) {
            return Err(DetError::Domain(format!("probability {y} outside [0, 1]")));
        }
        Ok(self.quantile_unchecked(lo, hi, y))
    }

    /// Quantile without argument checks; the result is clamped into `[lo, hi]`.
    #[inline]
    pub(crate) fn quantile_unchecked(&self, lo: f64, hi: f64, y: f64) -> f64 {
        let t = self.unit_quantile(y);
        (lo + t * (hi - lo)).clamp(lo, hi)
    }

    /// Density without the domain check, for points already known to be inside.
    #[inline]
    pub(crate) fn density_unchecked(&self, lo: f64, hi: f64, x: f64) -> f64 {
        let w = hi - lo;
        self.unit_density((x - lo) / w) / w
    }
}

impl Default for MarginalModel {
    fn default() -> Self {
        Self::UNIFORM
    }
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(DetError::Domain(format!("invalid interval [{lo}, {hi}]")));
    }
    Ok(())
}

fn normalize(lo: f64, hi: f64, x: f64) -> Result<f64> {
    check_interval(lo, hi)?;
    if !(lo..=hi).contains(&x) {
        return Err(DetError::Domain(format!("{x} outside [{lo}, {hi}]")));
    }
    Ok(((x - lo) / (hi - lo)).clamp(0.0, 1.0))
}

/// Free-function form of [`MarginalModel::density`].
pub fn marginal_density(model: &MarginalModel, lo: f64, hi: f64, x: f64) -> Result<f64> {
    model.density(lo, hi, x)
}

pub fn marginal_cdf(model: &MarginalModel, lo: f64, hi: f64, x: f64) -> Result<f64> {
    model.cdf(lo, hi, x)
}

pub fn marginal_quantile(model: &MarginalModel, lo: f64, hi: f64, y: f64) -> Result<f64> {
    model.quantile(lo, hi, y)
}
