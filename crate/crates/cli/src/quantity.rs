//! Rates with explicit unit tags: `0.2raw`, `5mu0`, `2ET`.

use std::fmt;
use std::str::FromStr;

use ptrmt::ensembles::EnsembleSpec;
use ptrmt::experiments::mu_zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MuUnit {
    #[serde(rename = "raw")]
    Raw,
    #[serde(rename = "mu0")]
    Mu0,
    #[serde(rename = "ET")]
    Et,
}

impl MuUnit {
    pub const ALL: [MuUnit; 3] = [MuUnit::Raw, MuUnit::Mu0, MuUnit::Et];

    pub fn tag(self) -> &'static str {
        match self {
            MuUnit::Raw => "raw",
            MuUnit::Mu0 => "mu0",
            MuUnit::Et => "ET",
        }
    }
}

impl fmt::Display for MuUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for MuUnit {
    type Err = QuantityError;

    fn from_str(s: &str) -> Result<Self, QuantityError> {
        MuUnit::ALL
            .into_iter()
            .find(|u| u.tag() == s.trim())
            .ok_or_else(|| QuantityError::UnknownUnit(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantityError {
    #[error("empty quantity")]
    Empty,
    #[error("unknown unit {0:?} (expected raw, mu0 or ET)")]
    UnknownUnit(String),
    #[error("invalid number {0:?}")]
    Number(String),
    #[error("rate must be finite and nonnegative, got {0}")]
    Negative(f64),
    #[error("conflicting units: value is tagged {tagged} but the unit is set to {declared}")]
    ConflictingUnits { tagged: MuUnit, declared: MuUnit },
}

/// A nonnegative rate and its unit. `unit` is `None` until normalization
/// supplies the default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: Option<MuUnit>,
}

impl Quantity {
    pub fn new(value: f64, unit: MuUnit) -> Self {
        Quantity { value, unit: Some(unit) }
    }

    /// Attach `declared` as the unit, failing if the value already carries
    /// a different tag.
    pub fn with_declared(self, declared: Option<MuUnit>) -> Result<Self, QuantityError> {
        match (self.unit, declared) {
            (Some(tagged), Some(declared)) if tagged != declared => {
                Err(QuantityError::ConflictingUnits { tagged, declared })
            }
            (Some(u), _) | (None, Some(u)) => Ok(Quantity::new(self.value, u)),
            (None, None) => Ok(Quantity::new(self.value, MuUnit::Raw)),
        }
    }

    /// Raw rate for the given ensemble. Untagged values count as raw.
    pub fn resolve(&self, spec: &EnsembleSpec) -> f64 {
        match self.unit.unwrap_or(MuUnit::Raw) {
            MuUnit::Raw => self.value,
            MuUnit::Mu0 => self.value * mu_zero(spec),
            MuUnit::Et => self.value * spec.scales().e_thouless,
        }
    }
}

impl FromStr for Quantity {
    type Err = QuantityError;

    fn from_str(s: &str) -> Result<Self, QuantityError> {
        let s = s.trim();
        if s.is_empty() {
            return Err(QuantityError::Empty);
        }
        let (number, unit) = match MuUnit::ALL.into_iter().find(|u| s.ends_with(u.tag())) {
            Some(u) => (s[..s.len() - u.tag().len()].trim_end(), Some(u)),
            None => (s, None),
        };
        let value: f64 = number.parse().map_err(|_| {
            if number.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
                let tail: String = s.chars().skip_while(|c| !c.is_ascii_alphabetic()).collect();
                QuantityError::UnknownUnit(tail)
            } else {
                QuantityError::Number(number.to_string())
            }
        })?;
        if !value.is_finite() || value < 0.0 {
            return Err(QuantityError::Negative(value));
        }
        Ok(Quantity { value, unit })
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.unit {
            Some(u) => write!(f, "{}{}", self.value, u),
            None => write!(f, "{}", self.value),
        }
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.unit {
            Some(_) => serializer.collect_str(self),
            None => serializer.serialize_f64(self.value),
        }
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(v) if v.is_finite() && v >= 0.0 => Ok(Quantity { value: v, unit: None }),
            Repr::Number(v) => Err(serde::de::Error::custom(QuantityError::Negative(v))),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_tags() {
        assert_eq!("5mu0".parse::<Quantity>().unwrap(), Quantity::new(5.0, MuUnit::Mu0));
        assert_eq!("2 ET".parse::<Quantity>().unwrap(), Quantity::new(2.0, MuUnit::Et));
        assert_eq!("0.2raw".parse::<Quantity>().unwrap(), Quantity::new(0.2, MuUnit::Raw));
        assert_eq!("1e-3".parse::<Quantity>().unwrap(), Quantity { value: 1e-3, unit: None });
        assert_eq!("3ET".parse::<Quantity>().unwrap().value, 3.0);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!("".parse::<Quantity>(), Err(QuantityError::Empty)));
        assert!(matches!("-1".parse::<Quantity>(), Err(QuantityError::Negative(_))));
        assert!(matches!("2kelvin".parse::<Quantity>(), Err(QuantityError::UnknownUnit(_))));
        assert!(matches!("mu0".parse::<Quantity>(), Err(QuantityError::Number(_))));
        assert!("inf".parse::<Quantity>().is_err());
        assert!("NaN".parse::<Quantity>().is_err());
    }

    #[test]
    fn conflicting_units() {
        let q: Quantity = "5mu0".parse().unwrap();
        assert!(matches!(q.with_declared(Some(MuUnit::Et)), Err(QuantityError::ConflictingUnits { .. })));
        assert_eq!(q.with_declared(Some(MuUnit::Mu0)).unwrap(), Quantity::new(5.0, MuUnit::Mu0));
        let bare: Quantity = "0.2".parse().unwrap();
        assert_eq!(bare.with_declared(Some(MuUnit::Et)).unwrap(), Quantity::new(0.2, MuUnit::Et));
        assert_eq!(bare.with_declared(None).unwrap(), Quantity::new(0.2, MuUnit::Raw));
    }

    #[test]
    fn resolves_against_scales() {
        use ptrmt::ensembles::SymmetryClass;
        let spec = EnsembleSpec::gaussian(SymmetryClass::OO, 400, 80, 1.0, 0.0).unwrap();
        assert!((Quantity::new(2.0, MuUnit::Et).resolve(&spec) - 0.2).abs() < 1e-12);
        assert!((Quantity::new(1.0, MuUnit::Mu0).resolve(&spec) - mu_zero(&spec)).abs() < 1e-15);
        assert_eq!(Quantity::new(0.3, MuUnit::Raw).resolve(&spec), 0.3);
    }

    proptest! {
        #[test]
        fn display_round_trips(v in 0.0f64..1e6, k in 0usize..4) {
            let unit = if k == 3 { None } else { Some(MuUnit::ALL[k]) };
            let q = Quantity { value: v, unit };
            prop_assert_eq!(q.to_string().parse::<Quantity>().unwrap(), q);
            let json = serde_json::to_string(&q).unwrap();
            prop_assert_eq!(serde_json::from_str::<Quantity>(&json).unwrap(), q);
        }
    }
}
