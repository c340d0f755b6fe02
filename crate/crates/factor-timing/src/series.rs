//! A month-indexed sequence of values.

use crate::month::Month;

/// Monthly values with strictly increasing month stamps.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlySeries {
    months: Vec<Month>,
    values: Vec<f64>,
}

impl MonthlySeries {
    pub fn new(months: Vec<Month>, values: Vec<f64>) -> Self {
        assert_eq!(months.len(), values.len(), "months/values length mismatch");
        assert!(
            months.windows(2).all(|w| w[0] < w[1]),
            "months must be strictly increasing"
        );
        MonthlySeries { months, values }
    }

    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    pub fn months(&self) -> &[Month] {
        &self.months
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn first_month(&self) -> Option<Month> {
        self.months.first().copied()
    }

    pub fn value_at(&self, month: Month) -> Option<f64> {
        self.months
            .binary_search(&month)
            .ok()
            .map(|i| self.values[i])
    }

    /// Values of all months `<= upto`.
    pub fn values_through(&self, upto: Month) -> &[f64] {
        let end = self.months.partition_point(|&m| m <= upto);
        &self.values[..end]
    }

    /// Sub-series restricted to `[start, end]` inclusive.
    pub fn slice(&self, start: Month, end: Month) -> MonthlySeries {
        let lo = self.months.partition_point(|&m| m < start);
        let hi = self.months.partition_point(|&m| m <= end);
        MonthlySeries {
            months: self.months[lo..hi].to_vec(),
            values: self.values[lo..hi].to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(v: u32) -> Month {
        Month::new(v).unwrap()
    }

    #[test]
    fn lookups_and_slices() {
        let s = MonthlySeries::new(
            vec![m(200001), m(200002), m(200003), m(200004)],
            vec![1.0, 2.0, 3.0, 4.0],
        );
        assert_eq!(s.value_at(m(200003)), Some(3.0));
        assert_eq!(s.value_at(m(199912)), None);
        assert_eq!(s.values_through(m(200002)), &[1.0, 2.0]);
        assert_eq!(s.values_through(m(199901)), &[] as &[f64]);
        let sub = s.slice(m(200002), m(200003));
        assert_eq!(sub.values(), &[2.0, 3.0]);
    }
}
