//! Decimal currency amounts.
//!
//! Token prices are quoted per 1K tokens with at most six fractional digits;
//! amounts finer than that (anything quantized from floats or user input) are
//! rounded half-even. Per-token costs extend the scale by three digits
//! (price / 1000), so cost arithmetic stays exact and is linear in the token
//! counts with no rounding step.

use std::fmt;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use rust_decimal::prelude::ToPrimitive;
use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scale used for quoted prices and quantized user input.
pub const PRICE_SCALE: u32 = 6;

/// A monetary amount backed by a 96-bit decimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Currency(Decimal);

impl Currency {
    pub const ZERO: Currency = Currency(Decimal::ZERO);

    pub fn new(value: Decimal) -> Self {
        Currency(value)
    }

    /// Parse a decimal string such as `"0.004"`.
    pub fn parse(s: &str) -> Result<Self> {
        let d = Decimal::from_str(s.trim())
            .map_err(|e| Error::data_format(format!("invalid currency '{s}': {e}")))?;
        Ok(Currency(d))
    }

    /// Quantize a float to currency, half-even at six fractional digits.
    pub fn from_f64(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("currency value {value}")));
        }
        let d = Decimal::from_f64_retain(value)
            .ok_or_else(|| Error::NonFinite(format!("currency value {value}")))?;
        Ok(Currency(d).quantize_price())
    }

    /// Round half-even to the six-digit price scale.
    pub fn quantize_price(self) -> Self {
        Currency(
            self.0
                .round_dp_with_strategy(PRICE_SCALE, RoundingStrategy::MidpointNearestEven),
        )
    }

    pub fn to_f64(self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_negative(self) -> bool {
        self.0.is_sign_negative() && !self.0.is_zero()
    }

    pub fn inner(self) -> Decimal {
        self.0
    }

    /// `self * tokens / 1000`, exact.
    ///
    /// `self` is a per-1K-token price; the division extends the scale by three
    /// digits, so no rounding occurs. Saturates at the decimal range limit for
    /// astronomically large token counts.
    pub fn per_thousand_tokens(self, tokens: u64) -> Self {
        let per_token = self.0 / Decimal::from(1000);
        match per_token.checked_mul(Decimal::from(tokens)) {
            Some(v) => Currency(v),
            None => Currency(Decimal::MAX),
        }
    }
}

impl Add for Currency {
    type Output = Currency;
    fn add(self, rhs: Currency) -> Currency {
        Currency(self.0 + rhs.0)
    }
}

impl AddAssign for Currency {
    fn add_assign(&mut self, rhs: Currency) {
        self.0 += rhs.0;
    }
}

impl std::iter::Sum for Currency {
    fn sum<I: Iterator<Item = Currency>>(iter: I) -> Currency {
        iter.fold(Currency::ZERO, |acc, c| acc + c)
    }
}

impl fmt::Display for Currency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for Currency {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Currency::parse(s)
    }
}
