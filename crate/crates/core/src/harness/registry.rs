use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::learning::Activation;

/// Registered estimators, named by their figure-data keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Wiener filter with the true covariance.
    GenieMmse,
    /// Gridded estimator over a sampled covariance bank.
    DiscreteMmse,
    /// Structured estimator, circulant `Q = F`.
    CircMmse,
    /// Structured estimator, Toeplitz `Q = F_2`.
    ToepMmse,
    FastMmse,
    /// Softmax CNN.
    CircSoftmax,
    /// ReLU CNN.
    ToepRelu,
    CircMl,
    GenieOmp,
    /// `H = 0`, for calibrating the MSE normalization.
    Zero,
}

impl Algorithm {
    pub const ALL: [Algorithm; 10] = [
        Algorithm::GenieMmse,
        Algorithm::DiscreteMmse,
        Algorithm::CircMmse,
        Algorithm::ToepMmse,
        Algorithm::FastMmse,
        Algorithm::CircSoftmax,
        Algorithm::ToepRelu,
        Algorithm::CircMl,
        Algorithm::GenieOmp,
        Algorithm::Zero,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::GenieMmse => "GenieMMSE",
            Algorithm::DiscreteMmse => "DiscreteMMSE",
            Algorithm::CircMmse => "CircMMSE",
            Algorithm::ToepMmse => "ToepMMSE",
            Algorithm::FastMmse => "FastMMSE",
            Algorithm::CircSoftmax => "CircSoftmax",
            Algorithm::ToepRelu => "ToepReLU",
            Algorithm::CircMl => "CircML",
            Algorithm::GenieOmp => "GenieOMP",
            Algorithm::Zero => "Zero",
        }
    }

    /// Activation of the learned estimators.
    pub fn activation(&self) -> Option<Activation> {
        match self {
            Algorithm::CircSoftmax => Some(Activation::Softmax),
            Algorithm::ToepRelu => Some(Activation::Relu),
            _ => None,
        }
    }

    pub fn index(&self) -> u64 {
        Self::ALL.iter().position(|a| a == self).expect("registered") as u64
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.iter().copied().find(|a| a.name() == s).ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}
