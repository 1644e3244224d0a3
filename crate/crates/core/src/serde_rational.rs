//! Serde adapter writing a [`Rational`] as the string `num/den`.

use serde::{Deserialize, Deserializer, Serializer};

use crate::scalar::{fmt_rational, parse_rational, Rational};

pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_rational(r))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
    let text = String::deserialize(d)?;
    parse_rational(&text).map_err(serde::de::Error::custom)
}
