//! Key domains the index can be built over.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use ordered_float::OrderedFloat;
use serde::Serialize;

/// 64-bit float key with a total order.
pub type FloatKey = OrderedFloat<f64>;

/// Tag stored in serialized files so a reader can refuse a mismatched key domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyKind {
    U64 = 1,
    I64 = 2,
    F64 = 3,
}

impl KeyKind {
    pub fn from_tag(tag: u64) -> Option<Self> {
        match tag {
            1 => Some(KeyKind::U64),
            2 => Some(KeyKind::I64),
            3 => Some(KeyKind::F64),
            _ => None,
        }
    }
}

/// A totally ordered 64-bit key.
///
/// Interpolation needs the signed distance between two keys as an `f64`.
/// Integer keys compute the difference in integer arithmetic first, so large
/// keys that sit close together keep their precision.
pub trait Key:
    Copy + Ord + Debug + Display + FromStr + Serialize + Send + Sync + 'static
{
    const KIND: KeyKind;

    /// `self - origin` as a real number.
    fn diff(self, origin: Self) -> f64;

    fn to_f64(self) -> f64;

    fn to_bits(self) -> u64;

    fn from_bits(bits: u64) -> Self;

    /// Rejects values that cannot take part in interpolation (NaN, infinities).
    fn is_valid(self) -> bool {
        true
    }
}

impl Key for u64 {
    const KIND: KeyKind = KeyKind::U64;

    #[inline]
    fn diff(self, origin: Self) -> f64 {
        if self >= origin {
            (self - origin) as f64
        } else {
            -((origin - self) as f64)
        }
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn to_bits(self) -> u64 {
        self
    }

    fn from_bits(bits: u64) -> Self {
        bits
    }
}

impl Key for i64 {
    const KIND: KeyKind = KeyKind::I64;

    #[inline]
    fn diff(self, origin: Self) -> f64 {
        (self as i128 - origin as i128) as f64
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn to_bits(self) -> u64 {
        self as u64
    }

    fn from_bits(bits: u64) -> Self {
        bits as i64
    }
}

impl Key for FloatKey {
    const KIND: KeyKind = KeyKind::F64;

    #[inline]
    fn diff(self, origin: Self) -> f64 {
        self.0 - origin.0
    }

    fn to_f64(self) -> f64 {
        self.0
    }

    fn to_bits(self) -> u64 {
        self.0.to_bits()
    }

    fn from_bits(bits: u64) -> Self {
        OrderedFloat(f64::from_bits(bits))
    }

    fn is_valid(self) -> bool {
        self.0.is_finite()
    }
}
