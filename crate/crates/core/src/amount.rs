//! Fixed-point token amounts.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Number of milli-tokens in one token.
pub const MILLI_PER_TOKEN: i64 = 1000;

/// A token amount stored as an integer count of milli-tokens.
///
/// Channel funds are only ever moved between directions, so keeping them
/// integral makes conservation checks exact.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Amount(i64);

impl Amount {
    pub const ZERO: Amount = Amount(0);

    pub const fn from_milli(milli: i64) -> Self {
        Amount(milli)
    }

    pub const fn from_whole_tokens(tokens: i64) -> Self {
        Amount(tokens * MILLI_PER_TOKEN)
    }

    /// Rounds to the nearest milli-token.
    pub fn from_tokens(tokens: f64) -> Self {
        Amount((tokens * MILLI_PER_TOKEN as f64).round() as i64)
    }

    pub const fn milli(self) -> i64 {
        self.0
    }

    pub fn tokens(self) -> f64 {
        self.0 as f64 / MILLI_PER_TOKEN as f64
    }

    pub const fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn checked_sub(self, rhs: Amount) -> Option<Amount> {
        self.0.checked_sub(rhs.0).map(Amount)
    }
}

impl Add for Amount {
    type Output = Amount;
    fn add(self, rhs: Amount) -> Amount {
        Amount(self.0 + rhs.0)
    }
}

impl Sub for Amount {
    type Output = Amount;
    fn sub(self, rhs: Amount) -> Amount {
        Amount(self.0 - rhs.0)
    }
}

impl Neg for Amount {
    type Output = Amount;
    fn neg(self) -> Amount {
        Amount(-self.0)
    }
}

impl AddAssign for Amount {
    fn add_assign(&mut self, rhs: Amount) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Amount {
    fn sub_assign(&mut self, rhs: Amount) {
        self.0 -= rhs.0;
    }
}

impl Sum for Amount {
    fn sum<I: Iterator<Item = Amount>>(iter: I) -> Amount {
        Amount(iter.map(|a| a.0).sum())
    }
}

impl<'a> Sum<&'a Amount> for Amount {
    fn sum<I: Iterator<Item = &'a Amount>>(iter: I) -> Amount {
        Amount(iter.map(|a| a.0).sum())
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let per = MILLI_PER_TOKEN as u64;
        write!(f, "{sign}{}.{:03}", abs / per, abs % per)
    }
}

impl std::str::FromStr for Amount {
    type Err = String;

    /// Parses a decimal token amount with at most three fractional digits.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() || frac_part.len() > 3 {
            return Err(format!("invalid amount `{s}`"));
        }
        let whole: i64 = int_part.parse().map_err(|_| format!("invalid amount `{s}`"))?;
        let mut frac: i64 = 0;
        if !frac_part.is_empty() {
            frac = frac_part.parse().map_err(|_| format!("invalid amount `{s}`"))?;
            for _ in frac_part.len()..3 {
                frac *= 10;
            }
        }
        let milli = whole * MILLI_PER_TOKEN + frac;
        Ok(Amount(if neg { -milli } else { milli }))
    }
}
