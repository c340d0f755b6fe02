//! Calendar months as validated `YYYYMM` integers.
//!
//! All date handling in the engine is at monthly frequency, so months are
//! plain integers with explicit year carry (199912 + 1 = 200001). No
//! timezones, no day-of-month.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A calendar month, stored as `YYYYMM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Month(u32);

/// Raised for values whose month part is not 01..=12 or whose year is
/// outside a sane range.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid YYYYMM month stamp: {0}")]
pub struct InvalidMonth(pub u32);

impl Month {
    pub fn new(yyyymm: u32) -> Result<Self, InvalidMonth> {
        let year = yyyymm / 100;
        let month = yyyymm % 100;
        if !(1..=12).contains(&month) || !(1000..=9999).contains(&year) {
            return Err(InvalidMonth(yyyymm));
        }
        Ok(Month(yyyymm))
    }

    pub fn as_u32(self) -> u32 {
        self.0
    }

    pub fn year(self) -> u32 {
        self.0 / 100
    }

    pub fn month(self) -> u32 {
        self.0 % 100
    }

    /// Months since 1000-01; gives every month a consecutive index.
    fn ordinal(self) -> i64 {
        (self.year() as i64) * 12 + (self.month() as i64 - 1)
    }

    fn from_ordinal(ord: i64) -> Result<Self, InvalidMonth> {
        let year = ord.div_euclid(12);
        let month = ord.rem_euclid(12) + 1;
        if !(1000..=9999).contains(&year) {
            return Err(InvalidMonth((year * 100 + month) as u32));
        }
        Month::new((year * 100 + month) as u32)
    }

    pub fn add_months(self, delta: i32) -> Result<Self, InvalidMonth> {
        Month::from_ordinal(self.ordinal() + delta as i64)
    }

    pub fn next(self) -> Self {
        self.add_months(1).expect("month overflow")
    }

    pub fn prev(self) -> Self {
        self.add_months(-1).expect("month underflow")
    }

    /// Number of months from `earlier` to `self` (0 when equal).
    pub fn months_since(self, earlier: Month) -> i64 {
        self.ordinal() - earlier.ordinal()
    }

    /// Whether `next` is exactly the calendar month after `self`.
    pub fn is_followed_by(self, next: Month) -> bool {
        next.ordinal() == self.ordinal() + 1
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:06}", self.0)
    }
}

impl TryFrom<u32> for Month {
    type Error = InvalidMonth;
    fn try_from(v: u32) -> Result<Self, Self::Error> {
        Month::new(v)
    }
}

impl From<Month> for u32 {
    fn from(m: Month) -> u32 {
        m.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(v: u32) -> Month {
        Month::new(v).unwrap()
    }

    #[test]
    fn year_carry() {
        assert_eq!(m(199912).next(), m(200001));
        assert_eq!(m(200001).prev(), m(199912));
        assert_eq!(m(196307).add_months(6).unwrap(), m(196401));
    }

    #[test]
    fn rejects_bad_month_part() {
        assert!(Month::new(196313).is_err());
        assert!(Month::new(196300).is_err());
        assert!(Month::new(12).is_err());
    }

    #[test]
    fn distance() {
        assert_eq!(m(200212).months_since(m(196307)), 473);
        assert_eq!(m(202212).months_since(m(200301)), 239);
        assert!(m(196307).is_followed_by(m(196308)));
        assert!(!m(196312).is_followed_by(m(196402)));
    }

    proptest! {
        #[test]
        fn add_then_subtract_roundtrips(y in 1500u32..9500, mo in 1u32..=12, d in -3000i32..3000) {
            let start = m(y * 100 + mo);
            let shifted = start.add_months(d).unwrap();
            prop_assert_eq!(shifted.add_months(-d).unwrap(), start);
            prop_assert_eq!(shifted.months_since(start), d as i64);
        }
    }
}
