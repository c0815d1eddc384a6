use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// The real number `Σₖ cₖ·π⁻ᵏ` with rational `cₖ`.
///
/// Since π is transcendental, two such sums are equal exactly when their
/// coefficients agree, which is what `==` tests. Zero coefficients are never
/// stored. The derived ordering is structural (for use as a map key), not
/// numeric; compare [`float_value`](Self::float_value) for magnitude.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TranscendentalScalar {
    coeffs: BTreeMap<u32, BigRational>,
}

impl TranscendentalScalar {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(coeff: BigRational, k: u32) -> Self {
        let mut s = Self::zero();
        s.add_term(coeff, k);
        s
    }

    pub fn rational(r: BigRational) -> Self {
        Self::term(r, 0)
    }

    pub fn integer(n: i64) -> Self {
        Self::rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// `π⁻ᵏ`.
    pub fn inv_pi_pow(k: u32) -> Self {
        Self::term(BigRational::one(), k)
    }

    /// Nearest representation of a float as a rational `k = 0` term (exact binary value).
    pub fn from_f64(x: f64) -> Self {
        Self::rational(BigRational::from_float(x).unwrap_or_else(BigRational::zero))
    }

    pub fn add_term(&mut self, coeff: BigRational, k: u32) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(k).or_insert_with(BigRational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.coeffs.remove(&k);
        }
    }

    pub fn coeff(&self, k: u32) -> BigRational {
        self.coeffs.get(&k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &BigRational)> {
        self.coeffs.iter().map(|(&k, c)| (k, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// True when only the `π⁰` coefficient may be nonzero.
    pub fn is_rational(&self) -> bool {
        self.coeffs.keys().all(|&k| k == 0)
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        if factor.is_zero() {
            return Self::zero();
        }
        TranscendentalScalar {
            coeffs: self.coeffs.iter().map(|(&k, c)| (k, c * factor)).collect(),
        }
    }

    pub fn scale_int(&self, factor: i64) -> Self {
        self.scale(&BigRational::from_integer(BigInt::from(factor)))
    }

    pub fn float_value(&self) -> f64 {
        let inv_pi = 1.0 / std::f64::consts::PI;
        self.coeffs
            .iter()
            .fold(0.0, |acc, (&k, c)| acc + c.to_f64().unwrap_or(f64::NAN) * inv_pi.powi(k as i32))
    }
}

impl Add for &TranscendentalScalar {
    type Output = TranscendentalScalar;

    fn add(self, rhs: &TranscendentalScalar) -> TranscendentalScalar {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&TranscendentalScalar> for TranscendentalScalar {
    fn add_assign(&mut self, rhs: &TranscendentalScalar) {
        for (&k, c) in &rhs.coeffs {
            self.add_term(c.clone(), k);
        }
    }
}

impl Neg for &TranscendentalScalar {
    type Output = TranscendentalScalar;

    fn neg(self) -> TranscendentalScalar {
        TranscendentalScalar {
            coeffs: self.coeffs.iter().map(|(&k, c)| (k, -c)).collect(),
        }
    }
}

impl Sub for &TranscendentalScalar {
    type Output = TranscendentalScalar;

    fn sub(self, rhs: &TranscendentalScalar) -> TranscendentalScalar {
        self + &(-rhs)
    }
}

/// `8 + 2*pi^-1 - 1/3*pi^-4`; zero prints as `0`.
impl fmt::Display for TranscendentalScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (&k, c)) in self.coeffs.iter().enumerate() {
            let magnitude = c.abs();
            match (i, c.is_negative()) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if k == 0 {
                write!(f, "{magnitude}")?;
            } else if magnitude.is_one() {
                write!(f, "pi^-{k}")?;
            } else {
                write!(f, "{magnitude}*pi^-{k}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for TranscendentalScalar {
    type Err = Error;

    /// Accepts the [`Display`](fmt::Display) form: signed terms `c`, `c*pi^-k` or `pi^-k`.
    fn from_str(s: &str) -> Result<Self> {
        let mut out = TranscendentalScalar::zero();
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::parse(0, "", "empty scalar"));
        }
        let mut start = 0;
        let bytes = compact.as_bytes();
        let mut i = 1;
        let mut pieces = Vec::new();
        while i <= bytes.len() {
            if i == bytes.len() || ((bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1] != b'^') {
                pieces.push((start, &compact[start..i]));
                start = i;
            }
            i += 1;
        }
        for (pos, piece) in pieces {
            let (sign, body) = match piece.as_bytes()[0] {
                b'-' => (-1, &piece[1..]),
                b'+' => (1, &piece[1..]),
                _ => (1, piece),
            };
            let (coeff_text, k) = match body.find("pi^-") {
                Some(idx) => {
                    let k: u32 = body[idx + 4..]
                        .parse()
                        .map_err(|_| Error::parse(pos, piece, "bad exponent"))?;
                    let c = body[..idx].trim_end_matches('*');
                    (if c.is_empty() { "1" } else { c }, k)
                }
                None => (body, 0),
            };
            let coeff = parse_rational(coeff_text).ok_or_else(|| Error::parse(pos, piece, "bad rational coefficient"))?;
            out.add_term(coeff * BigRational::from_integer(BigInt::from(sign)), k);
        }
        Ok(out)
    }
}

/// `p`, `p/q` or a finite decimal such as `0.25`.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Some((int, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let n: BigInt = digits.parse().ok()?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let r = BigRational::new(n, d);
        return Some(if negative { -r } else { r });
    }
    text.parse::<BigInt>().ok().map(BigRational::from_integer)
}

/// Serialized as `{"k": "p/q", …}`.
impl Serialize for TranscendentalScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.coeffs.len()))?;
        for (k, c) in &self.coeffs {
            map.serialize_entry(&k.to_string(), &c.to_string())?;
        }
        map.end()
    }
}
