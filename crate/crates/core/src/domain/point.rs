use std::fmt;
use std::ops::Neg;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Slack allowed on the unit-ball constraint before a point is rescaled.
pub const BALL_TOLERANCE: f64 = 1e-9;

/// Points whose norm exceeds `1 + RESCALE_LIMIT` are rejected outright.
const RESCALE_LIMIT: f64 = 1e-6;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A point of the unit ball `B^d(1)`.
#[derive(Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    /// Validates dimension, finiteness and ball membership. Points just
    /// outside the ball (floating-point drift) are rescaled onto the sphere.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("point must have dimension >= 1".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("point has non-finite coordinates".into()));
        }
        let n = norm(&coords);
        if n <= 1.0 + BALL_TOLERANCE {
            return Ok(Self(coords));
        }
        if n <= 1.0 + RESCALE_LIMIT {
            log::warn!("point norm {n} slightly exceeds 1; rescaling onto the unit sphere");
            return Ok(Self(coords.into_iter().map(|c| c / n).collect()));
        }
        Err(Error::InvalidInput(format!("point norm {n} exceeds the unit ball")))
    }

    /// Radially clips onto the unit ball instead of rejecting.
    pub fn clipped(mut coords: Vec<f64>) -> Result<Self> {
        let n = norm(&coords);
        if n > 1.0 {
            coords.iter_mut().for_each(|c| *c /= n);
        }
        Self::new(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Bit pattern used for exact identity (distinctness, table lookup).
    pub fn key(&self) -> Vec<u64> {
        point_key(&self.0)
    }
}

pub(crate) fn point_key(x: &[f64]) -> Vec<u64> {
    // -0.0 and 0.0 are the same point.
    x.iter().map(|c| (c + 0.0).to_bits()).collect()
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Point::new(v).map_err(serde::de::Error::custom)
    }
}

/// A binary label in `{-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    pub const BOTH: [Label; 2] = [Label::Pos, Label::Neg];

    /// `sign(v)` with the convention `sign(0) = +1`.
    #[inline]
    pub fn from_sign(v: f64) -> Self {
        if v >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Label::Pos => 1.0,
            Label::Neg => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Pos => 1,
            Label::Neg => -1,
        }
    }

    pub fn from_i64(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Label::Pos),
            -1 => Ok(Label::Neg),
            other => Err(Error::InvalidInput(format!("label must be +1 or -1, got {other}"))),
        }
    }
}

impl Neg for Label {
    type Output = Label;
    fn neg(self) -> Label {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.as_i8())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Label::from_i64(v).map_err(serde::de::Error::custom)
    }
}

/// Maps `{0,1}^d` onto the unit sphere via `b -> (2b - 1) / sqrt(d)`.
pub fn embed_hypercube(bits: &[bool]) -> Result<Point> {
    if bits.is_empty() {
        return Err(Error::InvalidInput("hypercube dimension must be >= 1".into()));
    }
    let s = 1.0 / (bits.len() as f64).sqrt();
    Point::new(bits.iter().map(|&b| if b { s } else { -s }).collect())
}

/// Inverse of [`embed_hypercube`]: a coordinate is the bit `1` iff positive.
pub fn hypercube_bits(x: &[f64]) -> Vec<bool> {
    x.iter().map(|&c| c > 0.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embed_single_bit() {
        assert_eq!(embed_hypercube(&[true]).unwrap().coords(), &[1.0]);
    }

    #[test]
    fn embed_all_zeros_d4() {
        let p = embed_hypercube(&[false; 4]).unwrap();
        assert_eq!(p.coords(), &[-0.5, -0.5, -0.5, -0.5]);
        assert!((norm(p.coords()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn embed_roundtrips_bits() {
        let bits = [true, false, false, true, true];
        let p = embed_hypercube(&bits).unwrap();
        assert_eq!(hypercube_bits(p.coords()), bits);
    }

    #[test]
    fn slightly_outside_is_rescaled() {
        let p = Point::new(vec![1.0 + 1e-8, 0.0]).unwrap();
        assert!((norm(p.coords()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn far_outside_is_rejected() {
        assert!(Point::new(vec![2.0, 0.0]).is_err());
        assert!(Point::new(vec![]).is_err());
        assert!(Point::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn sign_of_zero_is_positive() {
        assert_eq!(Label::from_sign(0.0), Label::Pos);
        assert_eq!(Label::from_sign(-0.0), Label::Pos);
        assert_eq!(-Label::Pos, Label::Neg);
    }

    #[test]
    fn label_serde() {
        assert_eq!(serde_json::to_string(&Label::Neg).unwrap(), "-1");
        assert_eq!(serde_json::from_str::<Label>("1").unwrap(), Label::Pos);
        assert!(serde_json::from_str::<Label>("0").is_err());
    }
}
