//! Ingestion of the two source datasets and assembly of the aligned panel.
//!
//! Factor returns come from a pre-cleaned single-table CSV with a `date`
//! column of `YYYYMM` stamps (the published files quote percents, so the
//! unit is a per-file flag). Timing predictors come from a `yyyymm`-keyed
//! CSV in decimal units. The two are inner-joined on month, the yield
//! spreads are derived, lagged feature columns are constructed, and the
//! result is a gap-free monthly panel ready for model fitting.
//!
//! Everything is stored as unitless decimals: 1.00% is 0.01.

use crate::linalg::DenseMatrix;
use crate::month::Month;
use crate::series::MonthlySeries;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// Unit of the numeric cells in a source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Percent,
    Decimal,
}

/// Strings treated as missing values in either source.
const MISSING_SENTINELS: [&str; 3] = ["", "NA", "-99.99"];

/// Header names accepted for the month-stamp column.
const MONTH_COLUMN_NAMES: [&str; 3] = ["date", "yyyymm", ""];

const FACTOR_REQUIRED: [&str; 6] = ["mkt_rf", "smb", "hml", "rmw", "cma", "rf"];
const PREDICTOR_REQUIRED: [&str; 5] = ["tbl", "lty", "aaa", "baa", "corpr"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("input contains no data rows")]
    EmptyInput,
    #[error("duplicate month {0}")]
    DuplicateMonth(Month),
    #[error("required column `{0}` missing")]
    MissingColumn(String),
    #[error("panels share no months")]
    NoOverlap,
    #[error("only {got} usable months after merge (need at least {need})")]
    InsufficientRows { got: usize, need: usize },
    #[error("aligned months are not consecutive: gap after {0}")]
    NonContiguous(Month),
    #[error("month {month} is missing a value for `{column}`")]
    MissingValue { month: Month, column: String },
    #[error("feature `{0}` must be a lagged column like `tms_lag1` over a known base column")]
    InvalidFeature(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("{side} partition contains no months")]
    EmptyPartition { side: &'static str },
}

/// A month-indexed table. Months are strictly increasing; every column has
/// one (possibly missing) cell per month.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyPanel {
    months: Vec<Month>,
    columns: IndexMap<String, Vec<Option<f64>>>,
}

impl MonthlyPanel {
    /// Assemble from per-row records; rows are sorted by month so the panel
    /// is independent of input order. Duplicate months are rejected.
    pub fn from_records(
        names: Vec<String>,
        mut records: Vec<(Month, Vec<Option<f64>>)>,
    ) -> Result<Self, DataError> {
        if records.is_empty() {
            return Err(DataError::EmptyInput);
        }
        records.sort_by_key(|(m, _)| *m);
        for w in records.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(DataError::DuplicateMonth(w[0].0));
            }
        }
        let months: Vec<Month> = records.iter().map(|(m, _)| *m).collect();
        let mut columns: IndexMap<String, Vec<Option<f64>>> = names
            .iter()
            .map(|n| (n.clone(), Vec::with_capacity(records.len())))
            .collect();
        for (_, cells) in &records {
            debug_assert_eq!(cells.len(), names.len());
            for (name, cell) in names.iter().zip(cells) {
                columns.get_mut(name).unwrap().push(*cell);
            }
        }
        Ok(MonthlyPanel { months, columns })
    }

    pub fn n_months(&self) -> usize {
        self.months.len()
    }

    pub fn months(&self) -> &[Month] {
        &self.months
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(|s| s.as_str())
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.columns.get(name).map(|v| v.as_slice())
    }

    fn month_index(&self, month: Month) -> Option<usize> {
        self.months.binary_search(&month).ok()
    }

    /// Cell lookup; `None` when the column, month, or cell is absent.
    pub fn value(&self, name: &str, month: Month) -> Option<f64> {
        let col = self.columns.get(name)?;
        self.month_index(month).and_then(|i| col[i])
    }

    /// Derive a new column as `left - right`; missing when either side is.
    fn add_difference(&mut self, name: &str, left: &str, right: &str) {
        let l = self.columns[left].clone();
        let r = self.columns[right].clone();
        let diff: Vec<Option<f64>> = l
            .iter()
            .zip(&r)
            .map(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => Some(a - b),
                _ => None,
            })
            .collect();
        self.columns.insert(name.to_string(), diff);
    }
}

/// Normalize a header cell to the canonical column key (`Mkt-RF` -> `mkt_rf`).
fn normalize_name(raw: &str) -> String {
    raw.trim()
        .to_ascii_lowercase()
        .chars()
        .map(|c| match c {
            '-' | '/' | ' ' | '.' => '_',
            c => c,
        })
        .collect()
}

/// Parse a numeric cell. Sentinels become missing; embedded thousands
/// separators inside quoted cells are tolerated.
fn parse_cell(raw: &str) -> Result<Option<f64>, String> {
    let trimmed = raw.trim();
    if MISSING_SENTINELS.iter().any(|s| trimmed.eq_ignore_ascii_case(s)) {
        return Ok(None);
    }
    let cleaned: String = trimmed.chars().filter(|&c| c != ',').collect();
    cleaned
        .parse::<f64>()
        .map(Some)
        .map_err(|_| format!("non-numeric cell `{trimmed}`"))
}

fn apply_unit(v: f64, unit: Unit) -> f64 {
    match unit {
        Unit::Percent => v / 100.0,
        Unit::Decimal => v,
    }
}

/// Shared CSV-to-panel parser.
///
/// `required` columns must be present and numeric (or a missing sentinel);
/// other columns are retained and parsed leniently, recording unparseable
/// cells as missing.
fn parse_panel(raw: &str, unit: Unit, required: &[&str]) -> Result<MonthlyPanel, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(raw.as_bytes());

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| DataError::MalformedRow { line: 1, reason: e.to_string() })?
        .iter()
        .map(normalize_name)
        .collect();

    let month_col = headers
        .iter()
        .position(|h| MONTH_COLUMN_NAMES.contains(&h.as_str()))
        .ok_or_else(|| DataError::MissingColumn("date/yyyymm".into()))?;
    for req in required {
        if !headers.iter().any(|h| h == req) {
            return Err(DataError::MissingColumn((*req).to_string()));
        }
    }

    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != month_col)
        .map(|(_, h)| h.clone())
        .collect();

    let mut records = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| DataError::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let malformed = |reason: String| DataError::MalformedRow { line, reason };

        let stamp: u32 = record
            .get(month_col)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| malformed(format!("bad month stamp `{}`", record.get(month_col).unwrap_or(""))))?;
        let month = Month::new(stamp).map_err(|e| malformed(e.to_string()))?;

        let mut cells = Vec::with_capacity(names.len());
        for (i, header) in headers.iter().enumerate() {
            if i == month_col {
                continue;
            }
            let cell = record.get(i).unwrap_or("");
            match parse_cell(cell) {
                Ok(v) => cells.push(v.map(|x| apply_unit(x, unit))),
                Err(reason) if required.contains(&header.as_str()) => {
                    return Err(malformed(format!("column `{header}`: {reason}")));
                }
                Err(_) => cells.push(None),
            }
        }
        records.push((month, cells));
    }

    MonthlyPanel::from_records(names, records)
}

/// Parse the monthly factor-returns file (`date,Mkt-RF,SMB,HML,RMW,CMA,RF`).
///
/// The published files quote percents; pass [`Unit::Percent`] to convert.
pub fn parse_factor_csv(raw: &str, unit: Unit) -> Result<MonthlyPanel, DataError> {
    parse_panel(raw, unit, &FACTOR_REQUIRED)
}

/// Parse the monthly predictor file (`yyyymm,tbl,lty,AAA,BAA,corpr,...`).
///
/// Additional columns are retained. The published file is already in
/// decimals; pass [`Unit::Decimal`] unless yours differs.
pub fn parse_predictor_csv(raw: &str, unit: Unit) -> Result<MonthlyPanel, DataError> {
    parse_panel(raw, unit, &PREDICTOR_REQUIRED)
}

/// Feature/target layout of the aligned dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    /// Lagged feature columns, each named `<base>_lag<k>`.
    pub features: Vec<String>,
    /// Target column (realized return over the row's month).
    pub target: String,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            features: vec!["tms_lag1".into(), "dfy_lag1".into(), "cma_lag1".into()],
            target: "cma".into(),
        }
    }
}

/// Split a feature name `<base>_lag<k>` into its base column and lag.
fn parse_feature_name(name: &str) -> Option<(&str, usize)> {
    let (base, lag) = name.rsplit_once("_lag")?;
    let k: usize = lag.parse().ok()?;
    if base.is_empty() || k == 0 {
        return None;
    }
    Some((base, k))
}

/// The merged monthly panel with lagged features and a realized target.
///
/// Months are consecutive. Rows before `first_usable_month` are retained
/// for completeness (their target is defined) but lack at least one lagged
/// feature, so fitting starts at `first_usable_month`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDataset {
    panel: MonthlyPanel,
    feature_names: Vec<String>,
    target_name: String,
    first_usable_month: Month,
}

/// Merge the two source panels into an [`AlignedDataset`] with the default
/// feature layout (`tms_lag1`, `dfy_lag1`, `cma_lag1` predicting `cma`).
pub fn build_dataset(
    factors: &MonthlyPanel,
    predictors: &MonthlyPanel,
) -> Result<AlignedDataset, DataError> {
    build_dataset_with(factors, predictors, &DatasetConfig::default())
}

pub fn build_dataset_with(
    factors: &MonthlyPanel,
    predictors: &MonthlyPanel,
    cfg: &DatasetConfig,
) -> Result<AlignedDataset, DataError> {
    // Spread columns derived before anything else so they can serve as
    // feature bases: tms = lty - tbl, dfy = baa - aaa.
    let mut predictors = predictors.clone();
    predictors.add_difference("tms", "lty", "tbl");
    predictors.add_difference("dfy", "baa", "aaa");

    let locate = |col: &str| -> Result<&MonthlyPanel, DataError> {
        if factors.has_column(col) {
            Ok(factors)
        } else if predictors.has_column(col) {
            Ok(&predictors)
        } else {
            Err(DataError::MissingColumn(col.to_string()))
        }
    };

    // Resolve feature names to (base column, lag, source panel).
    let mut feature_defs = Vec::with_capacity(cfg.features.len());
    for name in &cfg.features {
        let (base, lag) =
            parse_feature_name(name).ok_or_else(|| DataError::InvalidFeature(name.clone()))?;
        let source = locate(base).map_err(|_| DataError::InvalidFeature(name.clone()))?;
        feature_defs.push((name.clone(), base.to_string(), lag, source));
    }
    let target_source = locate(&cfg.target)?;

    // Months present in both sources.
    let joint: Vec<Month> = factors
        .months()
        .iter()
        .filter(|m| predictors.month_index(**m).is_some())
        .copied()
        .collect();
    if joint.is_empty() {
        return Err(DataError::NoOverlap);
    }

    // Drop months missing the target or any feature base value, before lag
    // construction. The optional retained columns may stay missing.
    let mut required: Vec<(&str, &MonthlyPanel)> = vec![(cfg.target.as_str(), target_source)];
    for (_, base, _, source) in &feature_defs {
        if !required.iter().any(|(b, _)| b == base) {
            required.push((base.as_str(), source));
        }
    }
    let months: Vec<Month> = joint
        .into_iter()
        .filter(|m| required.iter().all(|(col, src)| src.value(col, *m).is_some()))
        .collect();
    if months.len() < 2 {
        return Err(DataError::InsufficientRows { got: months.len(), need: 2 });
    }
    for w in months.windows(2) {
        if !w[0].is_followed_by(w[1]) {
            return Err(DataError::NonContiguous(w[0]));
        }
    }

    // Assemble columns: target first, then the standard retained columns,
    // then the lagged features. Lags are looked up within the merged month
    // range, so no feature can see data the merge dropped.
    let mut columns: IndexMap<String, Vec<Option<f64>>> = IndexMap::new();
    let mut push_column = |name: &str, source: &MonthlyPanel| {
        if !columns.contains_key(name) {
            let cells: Vec<Option<f64>> = months.iter().map(|m| source.value(name, *m)).collect();
            columns.insert(name.to_string(), cells);
        }
    };
    push_column(&cfg.target, target_source);
    for retained in ["mkt_rf", "tms", "dfy", "corpr"] {
        if let Ok(source) = locate(retained) {
            push_column(retained, source);
        }
    }
    for (_, base, _, source) in &feature_defs {
        push_column(base, source);
    }

    for (name, base, lag, _) in &feature_defs {
        let base_col = columns[base.as_str()].clone();
        let cells: Vec<Option<f64>> = (0..months.len())
            .map(|i| if i >= *lag { base_col[i - *lag] } else { None })
            .collect();
        columns.insert(name.clone(), cells);
    }

    // First month where every feature is defined; later gaps are a data bug.
    let panel = MonthlyPanel { months, columns };
    let mut first_usable = None;
    for (i, m) in panel.months.iter().enumerate() {
        let complete = cfg.features.iter().all(|f| panel.columns[f.as_str()][i].is_some());
        match (complete, first_usable) {
            (true, None) => first_usable = Some(*m),
            (false, Some(_)) => {
                let feature = cfg
                    .features
                    .iter()
                    .find(|f| panel.columns[f.as_str()][i].is_none())
                    .unwrap();
                return Err(DataError::MissingValue { month: *m, column: feature.clone() });
            }
            _ => {}
        }
    }
    let first_usable = first_usable.ok_or(DataError::InsufficientRows {
        got: 0,
        need: 2,
    })?;
    if panel.months.last().unwrap().months_since(first_usable) < 1 {
        return Err(DataError::InsufficientRows { got: 1, need: 2 });
    }

    Ok(AlignedDataset {
        panel,
        feature_names: cfg.features.clone(),
        target_name: cfg.target.clone(),
        first_usable_month: first_usable,
    })
}

impl AlignedDataset {
    pub fn panel(&self) -> &MonthlyPanel {
        &self.panel
    }

    pub fn months(&self) -> &[Month] {
        self.panel.months()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn first_usable_month(&self) -> Month {
        self.first_usable_month
    }

    /// Feature vector of the row at `month`; `None` before
    /// `first_usable_month` or outside the panel.
    pub fn features_at(&self, month: Month) -> Option<Vec<f64>> {
        let i = self.panel.month_index(month)?;
        self.feature_names
            .iter()
            .map(|f| self.panel.columns[f.as_str()][i])
            .collect()
    }

    pub fn target_at(&self, month: Month) -> Option<f64> {
        self.panel.value(&self.target_name, month)
    }

    /// Realized target over the whole panel (the full return history).
    pub fn target_series(&self) -> MonthlySeries {
        let values: Vec<f64> = self.panel.columns[self.target_name.as_str()]
            .iter()
            .map(|v| v.expect("target defined on every aligned row"))
            .collect();
        MonthlySeries::new(self.panel.months.clone(), values)
    }

    /// Months of the panel within `[start, end]` inclusive.
    pub fn months_between(&self, start: Month, end: Month) -> &[Month] {
        let lo = self.panel.months.partition_point(|&m| m < start);
        let hi = self.panel.months.partition_point(|&m| m <= end);
        &self.panel.months[lo..hi]
    }

    /// Design matrix and target for all usable rows with month in
    /// `[max(start, first_usable), end]` inclusive.
    pub fn design_between(&self, start: Month, end: Month) -> (DenseMatrix, Vec<f64>) {
        let lo = start.max(self.first_usable_month);
        let rows: Vec<Vec<f64>> = self
            .months_between(lo, end)
            .iter()
            .map(|m| self.features_at(*m).expect("usable row has features"))
            .collect();
        let y: Vec<f64> = self
            .months_between(lo, end)
            .iter()
            .map(|m| self.target_at(*m).expect("target defined"))
            .collect();
        (DenseMatrix::from_rows(&rows), y)
    }

    /// Design matrix and target for all usable rows strictly before `end`.
    pub fn design_before(&self, end: Month) -> (DenseMatrix, Vec<f64>) {
        self.design_between(self.first_usable_month, end.prev())
    }

    /// Panel restricted to `[start, end]`, used by [`split`].
    fn restrict(&self, start: Month, end: Month, side: &'static str) -> Result<Self, DataError> {
        let lo = self.panel.months.partition_point(|&m| m < start);
        let hi = self.panel.months.partition_point(|&m| m <= end);
        if lo == hi {
            return Err(DataError::EmptyPartition { side });
        }
        let months = self.panel.months[lo..hi].to_vec();
        let columns: IndexMap<String, Vec<Option<f64>>> = self
            .panel
            .columns
            .iter()
            .map(|(k, v)| (k.clone(), v[lo..hi].to_vec()))
            .collect();
        Ok(AlignedDataset {
            panel: MonthlyPanel { months, columns },
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            first_usable_month: self.first_usable_month.max(start),
        })
    }

    /// Aligned panel as CSV, decimal units, missing cells empty. Default
    /// layout yields the header
    /// `yyyymm,cma,mkt_rf,tms,dfy,corpr,tms_lag1,dfy_lag1,cma_lag1`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("yyyymm");
        for name in self.panel.columns.keys() {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, m) in self.panel.months.iter().enumerate() {
            out.push_str(&m.to_string());
            for col in self.panel.columns.values() {
                out.push(',');
                if let Some(v) = col[i] {
                    out.push_str(&format!("{v}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Month ranges of the train/test partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_start: Month,
    pub train_end: Month,
    pub test_start: Month,
    pub test_end: Month,
}

impl SplitSpec {
    pub fn new(
        train_start: Month,
        train_end: Month,
        test_start: Month,
        test_end: Month,
    ) -> Result<Self, DataError> {
        if train_start > train_end {
            return Err(DataError::InvalidSplit("train range is empty".into()));
        }
        if test_start > test_end {
            return Err(DataError::InvalidSplit("test range is empty".into()));
        }
        if train_end >= test_start {
            return Err(DataError::InvalidSplit(format!(
                "train must end before test starts (train_end {train_end}, test_start {test_start})"
            )));
        }
        Ok(SplitSpec { train_start, train_end, test_start, test_end })
    }
}

/// Partition the dataset into train and test by month range.
pub fn split(
    ds: &AlignedDataset,
    spec: &SplitSpec,
) -> Result<(AlignedDataset, AlignedDataset), DataError> {
    let train = ds.restrict(spec.train_start, spec.train_end, "train")?;
    let test = ds.restrict(spec.test_start, spec.test_end, "test")?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn m(v: u32) -> Month {
        Month::new(v).unwrap()
    }

    const FACTOR_HEADER: &str = "date,Mkt-RF,SMB,HML,RMW,CMA,RF\n";
    const PRED_HEADER: &str = "yyyymm,tbl,lty,AAA,BAA,corpr\n";

    fn factor_csv(rows: &[(u32, f64)]) -> String {
        // Only CMA varies; the rest are fixed fillers in percent.
        let mut s = FACTOR_HEADER.to_string();
        for (stamp, cma) in rows {
            s.push_str(&format!("{stamp},0.50,0.10,0.20,0.30,{cma},0.40\n"));
        }
        s
    }

    fn predictor_csv(rows: &[(u32, f64, f64, f64, f64)]) -> String {
        let mut s = PRED_HEADER.to_string();
        for (stamp, tbl, lty, aaa, baa) in rows {
            s.push_str(&format!("{stamp},{tbl},{lty},{aaa},{baa},0.004\n"));
        }
        s
    }

    #[test]
    fn parses_two_rows() {
        let panel = parse_factor_csv(
            &factor_csv(&[(196307, 1.00), (196308, -0.50)]),
            Unit::Percent,
        )
        .unwrap();
        assert_eq!(panel.n_months(), 2);
        assert_abs_diff_eq!(panel.value("cma", m(196307)).unwrap(), 0.01);
        assert_abs_diff_eq!(panel.value("cma", m(196308)).unwrap(), -0.005);
    }

    #[test]
    fn duplicate_month_rejected() {
        let err = parse_factor_csv(
            &factor_csv(&[(196307, 1.0), (196307, 2.0)]),
            Unit::Percent,
        )
        .unwrap_err();
        assert_eq!(err, DataError::DuplicateMonth(m(196307)));
    }

    #[test]
    fn empty_input_rejected() {
        assert_eq!(
            parse_factor_csv(FACTOR_HEADER, Unit::Percent).unwrap_err(),
            DataError::EmptyInput
        );
    }

    #[test]
    fn malformed_rows_rejected() {
        let bad_cell = format!("{FACTOR_HEADER}196307,0.5,0.1,0.2,0.3,abc,0.4\n");
        assert!(matches!(
            parse_factor_csv(&bad_cell, Unit::Percent).unwrap_err(),
            DataError::MalformedRow { .. }
        ));
        let bad_month = format!("{FACTOR_HEADER}196313,0.5,0.1,0.2,0.3,0.1,0.4\n");
        assert!(matches!(
            parse_factor_csv(&bad_month, Unit::Percent).unwrap_err(),
            DataError::MalformedRow { .. }
        ));
    }

    #[test]
    fn predictor_missing_column_detected() {
        let raw = "yyyymm,tbl,AAA,BAA,corpr\n196307,0.03,0.04,0.05,0.004\n";
        assert_eq!(
            parse_predictor_csv(raw, Unit::Decimal).unwrap_err(),
            DataError::MissingColumn("lty".into())
        );
    }

    #[test]
    fn optional_gaps_tolerated() {
        let raw = format!("{}196307,0.03,0.05,0.04,0.05,\n", PRED_HEADER);
        let panel = parse_predictor_csv(&raw, Unit::Decimal).unwrap();
        assert_eq!(panel.value("corpr", m(196307)), None);
        assert_abs_diff_eq!(panel.value("tbl", m(196307)).unwrap(), 0.03);
    }

    #[test]
    fn sentinels_are_missing() {
        let raw = format!("{}196307,0.03,0.05,NA,-99.99,0.004\n", PRED_HEADER);
        let panel = parse_predictor_csv(&raw, Unit::Decimal).unwrap();
        assert_eq!(panel.value("aaa", m(196307)), None);
        assert_eq!(panel.value("baa", m(196307)), None);
    }

    fn sample_sources() -> (MonthlyPanel, MonthlyPanel) {
        let factors = parse_factor_csv(
            &factor_csv(&[(196307, 0.40), (196308, 1.00), (196309, -0.20), (196310, 0.60)]),
            Unit::Percent,
        )
        .unwrap();
        let predictors = parse_predictor_csv(
            &predictor_csv(&[
                (196306, 0.030, 0.050, 0.040, 0.048),
                (196307, 0.031, 0.052, 0.041, 0.050),
                (196308, 0.032, 0.051, 0.042, 0.051),
                (196309, 0.030, 0.049, 0.040, 0.049),
                (196310, 0.029, 0.050, 0.041, 0.052),
            ]),
            Unit::Decimal,
        )
        .unwrap();
        (factors, predictors)
    }

    #[test]
    fn spreads_follow_definitions() {
        let (factors, predictors) = sample_sources();
        let ds = build_dataset(&factors, &predictors).unwrap();
        // tms = lty - tbl, dfy = baa - aaa at 196307.
        assert_abs_diff_eq!(
            ds.panel().value("tms", m(196307)).unwrap(),
            0.052 - 0.031,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            ds.panel().value("dfy", m(196307)).unwrap(),
            0.050 - 0.041,
            epsilon = 1e-15
        );
    }

    #[test]
    fn lag_columns_shift_by_one_month() {
        let (factors, predictors) = sample_sources();
        let ds = build_dataset(&factors, &predictors).unwrap();
        assert_abs_diff_eq!(
            ds.panel().value("cma_lag1", m(196308)).unwrap(),
            0.004,
            epsilon = 1e-15
        );
        // The first merged month has no prior CMA, so it is unusable.
        assert_eq!(ds.panel().value("cma_lag1", m(196307)), None);
        assert_eq!(ds.first_usable_month(), m(196308));
        assert_eq!(ds.months().len(), 4);
    }

    #[test]
    fn merge_is_order_independent() {
        let (factors, predictors) = sample_sources();
        let shuffled = parse_factor_csv(
            &factor_csv(&[(196310, 0.60), (196308, 1.00), (196307, 0.40), (196309, -0.20)]),
            Unit::Percent,
        )
        .unwrap();
        assert_eq!(factors, shuffled);
        assert_eq!(
            build_dataset(&factors, &predictors).unwrap(),
            build_dataset(&shuffled, &predictors).unwrap()
        );
    }

    #[test]
    fn features_never_read_current_month() {
        let (factors, predictors) = sample_sources();
        let ds = build_dataset(&factors, &predictors).unwrap();
        // Perturb all month-196309 source values; features at 196309 must
        // be unchanged.
        let bumped_rows = [(196307, 0.40), (196308, 1.00), (196309, 9.99), (196310, 0.60)];
        let factors2 = parse_factor_csv(&factor_csv(&bumped_rows), Unit::Percent).unwrap();
        let predictors2 = parse_predictor_csv(
            &predictor_csv(&[
                (196306, 0.030, 0.050, 0.040, 0.048),
                (196307, 0.031, 0.052, 0.041, 0.050),
                (196308, 0.032, 0.051, 0.042, 0.051),
                (196309, 0.090, 0.149, 0.140, 0.349),
                (196310, 0.029, 0.050, 0.041, 0.052),
            ]),
            Unit::Decimal,
        )
        .unwrap();
        let ds2 = build_dataset(&factors2, &predictors2).unwrap();
        assert_eq!(ds.features_at(m(196309)), ds2.features_at(m(196309)));
    }

    #[test]
    fn no_overlap_detected() {
        let (factors, _) = sample_sources();
        let far = parse_predictor_csv(
            &predictor_csv(&[(198001, 0.03, 0.05, 0.04, 0.05), (198002, 0.03, 0.05, 0.04, 0.05)]),
            Unit::Decimal,
        )
        .unwrap();
        assert_eq!(build_dataset(&factors, &far).unwrap_err(), DataError::NoOverlap);
    }

    #[test]
    fn insufficient_rows_detected() {
        let factors = parse_factor_csv(&factor_csv(&[(196307, 0.4), (196308, 0.5)]), Unit::Percent).unwrap();
        let predictors = parse_predictor_csv(
            &predictor_csv(&[(196307, 0.03, 0.05, 0.04, 0.05)]),
            Unit::Decimal,
        )
        .unwrap();
        assert!(matches!(
            build_dataset(&factors, &predictors).unwrap_err(),
            DataError::InsufficientRows { .. }
        ));
    }

    #[test]
    fn split_partitions_and_reconcatenates() {
        let (factors, predictors) = sample_sources();
        let ds = build_dataset(&factors, &predictors).unwrap();
        let spec = SplitSpec::new(m(196307), m(196308), m(196309), m(196310)).unwrap();
        let (train, test) = split(&ds, &spec).unwrap();
        assert_eq!(train.months(), &[m(196307), m(196308)]);
        assert_eq!(test.months(), &[m(196309), m(196310)]);
        let rejoined: Vec<Month> = train.months().iter().chain(test.months()).copied().collect();
        assert_eq!(rejoined, ds.months());
        // Columns preserved.
        assert_eq!(
            test.panel().value("cma_lag1", m(196309)),
            ds.panel().value("cma_lag1", m(196309))
        );
    }

    #[test]
    fn split_spec_rejects_overlap() {
        assert!(matches!(
            SplitSpec::new(m(196307), m(196312), m(196312), m(196401)),
            Err(DataError::InvalidSplit(_))
        ));
    }

    #[test]
    fn empty_partition_detected() {
        let (factors, predictors) = sample_sources();
        let ds = build_dataset(&factors, &predictors).unwrap();
        let spec = SplitSpec::new(m(196001), m(196002), m(196307), m(196310)).unwrap();
        assert_eq!(
            split(&ds, &spec).unwrap_err(),
            DataError::EmptyPartition { side: "train" }
        );
    }

    #[test]
    fn dump_has_pinned_header() {
        let (factors, predictors) = sample_sources();
        let ds = build_dataset(&factors, &predictors).unwrap();
        let csv = ds.to_csv();
        assert!(csv.starts_with("yyyymm,cma,mkt_rf,tms,dfy,corpr,tms_lag1,dfy_lag1,cma_lag1\n"));
        // Leading row's undefined lag is an empty cell.
        let first_row = csv.lines().nth(1).unwrap();
        assert!(first_row.starts_with("196307,"));
        assert!(first_row.ends_with(','));
    }

    proptest! {
        // Percent parsing is exactly decimal parsing divided by 100.
        #[test]
        fn percent_is_decimal_over_100(v in -500.0f64..500.0) {
            let cell = format!("{v}");
            let as_pct = parse_cell(&cell).unwrap().map(|x| apply_unit(x, Unit::Percent));
            let as_dec = parse_cell(&cell).unwrap().map(|x| apply_unit(x, Unit::Decimal));
            prop_assert_eq!(as_pct.unwrap().to_bits(), (as_dec.unwrap() / 100.0).to_bits());
        }
    }
}
