use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// The nonlinearity `f` applied to the solution before averaging against `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinearity {
    Identity,
    Log,
    /// `log y - y`
    LogMinusY,
    Square,
    /// `y^p`, the custom slot.
    Power(f64),
}

impl Nonlinearity {
    pub fn eval(self, y: f64) -> f64 {
        match self {
            Nonlinearity::Identity => y,
            Nonlinearity::Log => y.ln(),
            Nonlinearity::LogMinusY => y.ln() - y,
            Nonlinearity::Square => y * y,
            Nonlinearity::Power(p) => y.powf(p),
        }
    }

    pub fn derivative(self, y: f64) -> f64 {
        match self {
            Nonlinearity::Identity => 1.0,
            Nonlinearity::Log => 1.0 / y,
            Nonlinearity::LogMinusY => 1.0 / y - 1.0,
            Nonlinearity::Square => 2.0 * y,
            Nonlinearity::Power(p) => p * y.powf(p - 1.0),
        }
    }

    /// `f'(z) z`, simplified where that removes a division.
    pub fn derivative_times_arg(self, z: f64) -> f64 {
        match self {
            Nonlinearity::Identity => z,
            Nonlinearity::Log => 1.0,
            Nonlinearity::LogMinusY => 1.0 - z,
            Nonlinearity::Square => 2.0 * z * z,
            Nonlinearity::Power(p) => p * z.powf(p),
        }
    }

    /// Whether non-positive arguments must be floored before evaluation.
    pub fn needs_floor(self) -> bool {
        match self {
            Nonlinearity::Log | Nonlinearity::LogMinusY => true,
            Nonlinearity::Power(p) => p.fract() != 0.0 || p < 0.0,
            Nonlinearity::Identity | Nonlinearity::Square => false,
        }
    }

    pub fn tag(self) -> String {
        match self {
            Nonlinearity::Identity => "identity".into(),
            Nonlinearity::Log => "log".into(),
            Nonlinearity::LogMinusY => "log-minus-y".into(),
            Nonlinearity::Square => "square".into(),
            Nonlinearity::Power(p) => format!("power:{p}"),
        }
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl FromStr for Nonlinearity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Nonlinearity::Identity),
            "log" => Ok(Nonlinearity::Log),
            "log-minus-y" => Ok(Nonlinearity::LogMinusY),
            "square" => Ok(Nonlinearity::Square),
            other => match other.strip_prefix("power:") {
                Some(p) => p
                    .parse::<f64>()
                    .ok()
                    .filter(|p| p.is_finite())
                    .map(Nonlinearity::Power)
                    .ok_or_else(|| Error::config("f", format!("bad exponent in `{other}`"))),
                None => Err(Error::config(
                    "f",
                    format!("unknown nonlinearity `{other}` (identity, log, log-minus-y, square, power:<p>)"),
                )),
            },
        }
    }
}

impl Serialize for Nonlinearity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.tag())
    }
}

impl<'de> Deserialize<'de> for Nonlinearity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for f in [
            Nonlinearity::Identity,
            Nonlinearity::Log,
            Nonlinearity::LogMinusY,
            Nonlinearity::Square,
            Nonlinearity::Power(3.0),
        ] {
            assert_eq!(f.tag().parse::<Nonlinearity>().unwrap(), f);
        }
        assert!("cube".parse::<Nonlinearity>().is_err());
    }

    #[test]
    fn derivative_times_arg_matches_definition() {
        for f in [
            Nonlinearity::Identity,
            Nonlinearity::Log,
            Nonlinearity::LogMinusY,
            Nonlinearity::Square,
            Nonlinearity::Power(2.5),
        ] {
            let z = 1.37;
            assert!((f.derivative(z) * z - f.derivative_times_arg(z)).abs() < 1e-14);
        }
    }
}
