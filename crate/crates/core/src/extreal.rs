//! Extended real line with a total order and explicit infinities.
//!
//! Subharmonic functions take the value minus infinity on their atom set and
//! counting functions take plus infinity at atoms of the measure, so the
//! engine threads [`ExtReal`] rather than bare `f64` through every left- and
//! right-hand side. NaN is rejected at construction; arithmetic panics on
//! the one indeterminate form (`+inf + -inf`) instead of propagating it.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExtReal {
    #[serde(with = "neg_inf_serde")]
    NegInf,
    Finite(f64),
    #[serde(with = "pos_inf_serde")]
    PosInf,
}

mod neg_inf_serde {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("-inf")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let tag = String::deserialize(d)?;
        if tag == "-inf" {
            Ok(())
        } else {
            Err(de::Error::custom("expected \"-inf\""))
        }
    }
}

mod pos_inf_serde {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("+inf")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let tag = String::deserialize(d)?;
        if tag == "+inf" {
            Ok(())
        } else {
            Err(de::Error::custom("expected \"+inf\""))
        }
    }
}

impl ExtReal {
    /// Wraps a finite or infinite `f64`. Panics on NaN: a NaN reaching a
    /// verdict would silently compare as incomparable.
    pub fn new(x: f64) -> Self {
        assert!(!x.is_nan(), "ExtReal rejects NaN");
        if x == f64::INFINITY {
            ExtReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// Collapses to `f64`, mapping the infinities to IEEE infinities.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl Eq for ExtReal {}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtReal::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Finite(a), Finite(b)) => a.partial_cmp(b).expect("ExtReal holds no NaN"),
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: Self) -> Self {
        use ExtReal::*;
        match (self, rhs) {
            (Finite(a), Finite(b)) => ExtReal::new(a + b),
            (PosInf, NegInf) | (NegInf, PosInf) => {
                panic!("indeterminate sum +inf + -inf")
            }
            (PosInf, _) | (_, PosInf) => PosInf,
            (NegInf, _) | (_, NegInf) => NegInf,
        }
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;

    fn neg(self) -> Self {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Finite(x) => ExtReal::Finite(-x),
            ExtReal::PosInf => ExtReal::NegInf,
        }
    }
}

impl Sub for ExtReal {
    type Output = ExtReal;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul<f64> for ExtReal {
    type Output = ExtReal;

    /// Scales by a finite nonnegative factor; `0 * inf` resolves to 0, the
    /// measure-theoretic convention every consumer in the crate wants.
    fn mul(self, rhs: f64) -> Self {
        assert!(
            rhs.is_finite() && rhs >= 0.0,
            "scale must be finite and nonnegative"
        );
        match self {
            ExtReal::Finite(x) => ExtReal::new(x * rhs),
            _ if rhs == 0.0 => ExtReal::Finite(0.0),
            inf => inf,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => write!(f, "+inf"),
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::new(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_total_with_infinities_at_the_ends() {
        let mut xs = vec![
            ExtReal::Finite(1.0),
            ExtReal::PosInf,
            ExtReal::Finite(-3.0),
            ExtReal::NegInf,
            ExtReal::Finite(0.0),
        ];
        xs.sort();
        assert_eq!(
            xs,
            vec![
                ExtReal::NegInf,
                ExtReal::Finite(-3.0),
                ExtReal::Finite(0.0),
                ExtReal::Finite(1.0),
                ExtReal::PosInf,
            ]
        );
    }

    #[test]
    fn arithmetic_respects_absorbing_infinities() {
        let two = ExtReal::Finite(2.0);
        assert_eq!(two + ExtReal::Finite(3.0), ExtReal::Finite(5.0));
        assert_eq!(ExtReal::PosInf + two, ExtReal::PosInf);
        assert_eq!(ExtReal::NegInf - two, ExtReal::NegInf);
        assert_eq!(-ExtReal::PosInf, ExtReal::NegInf);
        assert_eq!(ExtReal::PosInf * 0.0, ExtReal::Finite(0.0));
        assert_eq!(ExtReal::NegInf * 2.0, ExtReal::NegInf);
    }

    #[test]
    #[should_panic(expected = "indeterminate")]
    fn opposite_infinities_do_not_cancel_silently() {
        let _ = ExtReal::PosInf + ExtReal::NegInf;
    }

    #[test]
    #[should_panic(expected = "NaN")]
    fn nan_is_rejected_at_construction() {
        let _ = ExtReal::new(f64::NAN);
    }

    #[test]
    fn json_round_trip_preserves_infinities() {
        let xs = vec![ExtReal::NegInf, ExtReal::Finite(2.5), ExtReal::PosInf];
        let text = serde_json::to_string(&xs).unwrap();
        assert_eq!(text, "[\"-inf\",2.5,\"+inf\"]");
        let back: Vec<ExtReal> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, xs);
    }
}
