use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The two insertion channel models.
///
/// `Simple` inserts one uniform random bit after a position; `Gallager`
/// replaces the bit at a position with two uniform random bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModel {
    Simple,
    Gallager,
}

impl ChannelModel {
    pub const ALL: [ChannelModel; 2] = [ChannelModel::Simple, ChannelModel::Gallager];

    /// Payload bits drawn per insertion event.
    pub fn payload_width(self) -> usize {
        match self {
            ChannelModel::Simple => 1,
            ChannelModel::Gallager => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelModel::Simple => "simple",
            ChannelModel::Gallager => "gallager",
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simple" => Ok(ChannelModel::Simple),
            "gallager" => Ok(ChannelModel::Gallager),
            other => Err(Error::usage(format!("unknown channel model {other:?}"))),
        }
    }
}

/// A channel model together with its event probability `alpha` in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    model: ChannelModel,
    alpha: f64,
}

impl ChannelSpec {
    pub fn new(model: ChannelModel, alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::domain(format!("alpha {alpha} outside [0, 1)")));
        }
        Ok(ChannelSpec { model, alpha })
    }

    pub fn simple(alpha: f64) -> Result<Self> {
        Self::new(ChannelModel::Simple, alpha)
    }

    pub fn gallager(alpha: f64) -> Result<Self> {
        Self::new(ChannelModel::Gallager, alpha)
    }

    #[inline]
    pub fn model(&self) -> ChannelModel {
        self.model
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Probability of one specific payload given an event at a position.
    pub fn payload_probability(&self) -> f64 {
        0.5f64.powi(self.model.payload_width() as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_range() {
        assert!(ChannelSpec::simple(0.0).is_ok());
        assert!(ChannelSpec::gallager(0.999).is_ok());
        assert!(ChannelSpec::simple(1.0).is_err());
        assert!(ChannelSpec::simple(-0.01).is_err());
        assert!(ChannelSpec::simple(f64::NAN).is_err());
    }

    #[test]
    fn model_parsing() {
        assert_eq!("Simple".parse::<ChannelModel>().unwrap(), ChannelModel::Simple);
        assert_eq!("gallager".parse::<ChannelModel>().unwrap(), ChannelModel::Gallager);
        assert!("deletion".parse::<ChannelModel>().is_err());
    }
}
