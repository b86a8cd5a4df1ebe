//! Primitive type tags shared by architecture locations and netlist atoms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A primitive type: a K-input LUT or a single-input flip-flop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimitiveKind {
    Lut(u8),
    Ff,
}

impl PrimitiveKind {
    pub fn input_count(self) -> usize {
        match self {
            PrimitiveKind::Lut(k) => k as usize,
            PrimitiveKind::Ff => 1,
        }
    }

    pub fn is_lut(self) -> bool {
        matches!(self, PrimitiveKind::Lut(_))
    }

    pub fn is_ff(self) -> bool {
        matches!(self, PrimitiveKind::Ff)
    }

    /// Whether an atom of kind `self` can occupy a location of kind `loc`.
    ///
    /// A k-input LUT fits any LUT location with at least k inputs; the atom's
    /// input k binds to the location's input k and the remainder stay unused.
    pub fn fits(self, loc: PrimitiveKind) -> bool {
        match (self, loc) {
            (PrimitiveKind::Lut(a), PrimitiveKind::Lut(b)) => a <= b,
            (PrimitiveKind::Ff, PrimitiveKind::Ff) => true,
            _ => false,
        }
    }
}

impl fmt::Display for PrimitiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrimitiveKind::Lut(k) => write!(f, "lut{k}"),
            PrimitiveKind::Ff => f.write_str("ff"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown primitive kind `{0}` (expected `ff` or `lut<k>` with 1 <= k <= 8)")]
pub struct UnknownKind(pub String);

impl FromStr for PrimitiveKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "ff" {
            return Ok(PrimitiveKind::Ff);
        }
        s.strip_prefix("lut")
            .and_then(|k| k.parse::<u8>().ok())
            .filter(|k| (1..=8).contains(k))
            .map(PrimitiveKind::Lut)
            .ok_or_else(|| UnknownKind(s.to_string()))
    }
}

impl Serialize for PrimitiveKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PrimitiveKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        for s in ["ff", "lut1", "lut4", "lut6", "lut8"] {
            assert_eq!(s.parse::<PrimitiveKind>().unwrap().to_string(), s);
        }
        for s in ["", "lut", "lut0", "lut9", "dff", "lut5-half"] {
            assert!(s.parse::<PrimitiveKind>().is_err(), "{s}");
        }
    }

    #[test]
    fn smaller_luts_fit_larger_locations() {
        use PrimitiveKind::*;
        assert!(Lut(4).fits(Lut(4)));
        assert!(Lut(3).fits(Lut(6)));
        assert!(!Lut(6).fits(Lut(5)));
        assert!(!Ff.fits(Lut(2)));
        assert!(!Lut(1).fits(Ff));
        assert!(Ff.fits(Ff));
    }
}
