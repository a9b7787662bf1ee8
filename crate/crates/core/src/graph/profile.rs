use serde::{Deserialize, Serialize};

/// Growth family of the radial tooth profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileFamily {
    /// `⌊k^γ⌋`
    Polynomial,
    /// `⌊ln^γ(max(k, 1))⌋`, natural logarithm.
    Logarithmic,
}

/// Distance used to turn a base vertex into the radius fed to the profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    GraphDistance,
    SupNorm,
}

/// Radial tooth profile `f(v) = ϱ(d(o, v))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeethProfile {
    pub family: ProfileFamily,
    pub gamma: f64,
    pub metric: Metric,
    /// The vertex `o`; `None` selects the base graph's default origin.
    pub origin: Option<usize>,
}

impl TeethProfile {
    pub fn polynomial(gamma: f64, metric: Metric) -> Self {
        TeethProfile { family: ProfileFamily::Polynomial, gamma, metric, origin: None }
    }

    pub fn logarithmic(gamma: f64, metric: Metric) -> Self {
        TeethProfile { family: ProfileFamily::Logarithmic, gamma, metric, origin: None }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    /// Tooth length at radius `k`. Saturates at `u32::MAX`.
    pub fn eval(&self, k: u64) -> u32 {
        let x = match self.family {
            ProfileFamily::Polynomial => (k as f64).powf(self.gamma),
            ProfileFamily::Logarithmic => (k.max(1) as f64).ln().powf(self.gamma),
        };
        if x >= u32::MAX as f64 {
            u32::MAX
        } else {
            x.floor() as u32
        }
    }
}
