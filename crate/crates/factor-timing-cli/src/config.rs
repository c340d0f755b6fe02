//! Declarative run configuration: a single TOML file, no prompts.
//!
//! Every knob has a default except the two data paths, so a minimal config
//! is just the `[data]` section plus a `[[models]]` list. The fully
//! resolved configuration (seeds included) is echoed into the output
//! directory of every run; its SHA-256 digest is embedded in
//! `summary.json` so each table is traceable to the exact inputs.

use crate::error::CliError;
use factor_timing::{
    CostKind, CostModel, DatasetConfig, Month, ModelKind, ModelSpec, PeriodSpec, SplitSpec,
    TimingConfig, Unit,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const DEFAULT_BASE_SEED: u64 = 42;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    data: DataSection,
    #[serde(default)]
    dataset: Option<DatasetConfig>,
    #[serde(default)]
    split: Option<SplitSection>,
    #[serde(default)]
    timing: Option<TimingConfig>,
    #[serde(default)]
    models: Vec<ModelSection>,
    #[serde(default)]
    costs: Option<Vec<CostModel>>,
    #[serde(default)]
    rebalance: Option<RebalanceSection>,
    #[serde(default)]
    periods: Option<Vec<PeriodSection>>,
    #[serde(default)]
    run: Option<RunSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub factor_csv: PathBuf,
    pub predictor_csv: PathBuf,
    #[serde(default = "default_factor_unit")]
    pub factor_unit: Unit,
    #[serde(default = "default_predictor_unit")]
    pub predictor_unit: Unit,
}

fn default_factor_unit() -> Unit {
    Unit::Percent
}

fn default_predictor_unit() -> Unit {
    Unit::Decimal
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitSection {
    train_start: u32,
    train_end: u32,
    test_start: u32,
    test_end: u32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    kind: ModelKind,
    seed: Option<u64>,
    ridge_lambda: Option<f64>,
    ct_truncate: Option<bool>,
    rf: Option<factor_timing::ForestParams>,
    nn: Option<factor_timing::NetParams>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RebalanceSection {
    pub grid_max: usize,
    pub validation_fraction: f64,
}

impl Default for RebalanceSection {
    fn default() -> Self {
        RebalanceSection { grid_max: 12, validation_fraction: 0.40 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PeriodSection {
    label: String,
    start: u32,
    end: u32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    #[serde(default)]
    out_dir: Option<PathBuf>,
    #[serde(default)]
    seed: Option<u64>,
}

/// Everything the pipeline needs, fully defaulted and validated.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub data: DataSection,
    pub dataset: DatasetConfig,
    pub split: SplitSpec,
    pub timing: TimingConfig,
    pub models: Vec<ModelSpec>,
    pub costs: Vec<CostModel>,
    pub rebalance: RebalanceSection,
    pub periods: Vec<PeriodSpec>,
    pub out_dir: PathBuf,
    pub base_seed: u64,
}

fn month(v: u32, what: &str) -> Result<Month, CliError> {
    Month::new(v).map_err(|e| CliError::Config(format!("{what}: {e}")))
}

/// The documented full-sample split: training through 2002, testing
/// 2003-2022.
fn default_split() -> SplitSpec {
    SplitSpec::new(
        Month::new(196307).unwrap(),
        Month::new(200212).unwrap(),
        Month::new(200301).unwrap(),
        Month::new(202212).unwrap(),
    )
    .unwrap()
}

fn default_costs() -> Vec<CostModel> {
    vec![
        CostModel::none(),
        CostModel::proportional(0.0010),
        CostModel::proportional(0.0020),
        CostModel::proportional(0.0050),
        CostModel::quadratic(0.0050),
    ]
}

/// Evaluation horizons when the config does not pin any: the canonical
/// four when they fit inside the test window, otherwise the whole test
/// window.
fn derive_periods(split: &SplitSpec) -> Vec<PeriodSpec> {
    let canonical: Vec<PeriodSpec> = factor_timing::default_periods()
        .into_iter()
        .filter(|p| p.start >= split.test_start && p.end <= split.test_end)
        .collect();
    if canonical.is_empty() {
        vec![PeriodSpec {
            label: "test".to_string(),
            start: split.test_start,
            end: split.test_end,
        }]
    } else {
        canonical
    }
}

pub fn load_config(path: &Path, seed_override: Option<u64>, out_override: Option<PathBuf>)
    -> Result<ResolvedConfig, CliError>
{
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let file: FileConfig = toml::from_str(&raw)
        .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
    resolve(file, seed_override, out_override)
}

fn resolve(
    file: FileConfig,
    seed_override: Option<u64>,
    out_override: Option<PathBuf>,
) -> Result<ResolvedConfig, CliError> {
    let run = file.run.unwrap_or(RunSection { out_dir: None, seed: None });
    let base_seed = seed_override.or(run.seed).unwrap_or(DEFAULT_BASE_SEED);

    let split = match file.split {
        Some(s) => SplitSpec::new(
            month(s.train_start, "split.train_start")?,
            month(s.train_end, "split.train_end")?,
            month(s.test_start, "split.test_start")?,
            month(s.test_end, "split.test_end")?,
        )
        .map_err(|e| CliError::Config(e.to_string()))?,
        None => default_split(),
    };

    if file.models.is_empty() {
        return Err(CliError::Config(
            "config declares no [[models]]; at least one is required".into(),
        ));
    }
    let mut models = Vec::with_capacity(file.models.len());
    for section in &file.models {
        if models.iter().any(|m: &ModelSpec| m.kind == section.kind) {
            return Err(CliError::Config(format!(
                "model kind `{}` appears more than once",
                section.kind.key()
            )));
        }
        let mut spec = ModelSpec::new(section.kind).with_seed(section.seed.unwrap_or(base_seed));
        if let Some(lambda) = section.ridge_lambda {
            spec.ridge_lambda = lambda;
        }
        if let Some(ct) = section.ct_truncate {
            spec.ct_truncate = ct;
        }
        if let Some(rf) = &section.rf {
            spec.rf = rf.clone();
        }
        if let Some(nn) = &section.nn {
            spec.nn = nn.clone();
        }
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        models.push(spec);
    }

    let timing = file.timing.unwrap_or_default();
    timing.validate().map_err(|e| CliError::Config(e.to_string()))?;

    let costs = file.costs.unwrap_or_else(default_costs);
    if costs.is_empty() {
        return Err(CliError::Config("[[costs]] is present but empty".into()));
    }
    for c in &costs {
        c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if c.kind != CostKind::None && c.rate == 0.0 {
            return Err(CliError::Config(format!(
                "cost `{}` has zero rate; use kind = \"none\" instead",
                c.label()
            )));
        }
    }

    let rebalance = file.rebalance.unwrap_or_default();
    if rebalance.grid_max == 0 {
        return Err(CliError::Config("rebalance.grid_max must be >= 1".into()));
    }
    if !(rebalance.validation_fraction > 0.0 && rebalance.validation_fraction < 1.0) {
        return Err(CliError::Config(format!(
            "rebalance.validation_fraction must be in (0, 1), got {}",
            rebalance.validation_fraction
        )));
    }

    let periods = match file.periods {
        Some(sections) => {
            let mut out = Vec::with_capacity(sections.len());
            for p in sections {
                out.push(
                    PeriodSpec::new(p.label, month(p.start, "period.start")?, month(p.end, "period.end")?)
                        .map_err(|e| CliError::Config(e.to_string()))?,
                );
            }
            out
        }
        None => derive_periods(&split),
    };
    if periods.is_empty() {
        return Err(CliError::Config("[[periods]] is present but empty".into()));
    }

    Ok(ResolvedConfig {
        data: file.data,
        dataset: file.dataset.unwrap_or_default(),
        split,
        timing,
        models,
        costs,
        rebalance,
        periods,
        out_dir: out_override.or(run.out_dir).unwrap_or_else(|| PathBuf::from("out")),
        base_seed,
    })
}

impl ResolvedConfig {
    /// Interval grid `1..=grid_max`.
    pub fn grid(&self) -> Vec<usize> {
        (1..=self.rebalance.grid_max).collect()
    }

    /// Full resolved configuration as TOML, seeds included. The output
    /// directory is deliberately not echoed: it is disk layout, not an
    /// input, and identical configs must produce byte-identical artifacts
    /// wherever they are written.
    pub fn to_toml(&self) -> String {
        #[derive(Serialize)]
        struct Echo<'a> {
            data: &'a DataSection,
            dataset: &'a DatasetConfig,
            split: &'a SplitSpec,
            timing: &'a TimingConfig,
            models: &'a [ModelSpec],
            costs: &'a [CostModel],
            rebalance: &'a RebalanceSection,
            periods: &'a [PeriodSpec],
            run: EchoRun,
        }
        #[derive(Serialize)]
        struct EchoRun {
            seed: u64,
        }
        let echo = Echo {
            data: &self.data,
            dataset: &self.dataset,
            split: &self.split,
            timing: &self.timing,
            models: &self.models,
            costs: &self.costs,
            rebalance: &self.rebalance,
            periods: &self.periods,
            run: EchoRun { seed: self.base_seed },
        };
        toml::to_string_pretty(&echo).expect("resolved config serializes")
    }

    /// SHA-256 of the resolved TOML; the traceability key in summary.json.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(models: &str) -> String {
        format!(
            "[data]\nfactor_csv = \"f.csv\"\npredictor_csv = \"p.csv\"\n{models}"
        )
    }

    fn parse(toml_text: &str) -> Result<ResolvedConfig, CliError> {
        let file: FileConfig = toml::from_str(toml_text)
            .map_err(|e| CliError::Config(e.to_string()))?;
        resolve(file, None, None)
    }

    #[test]
    fn minimal_config_resolves_with_defaults() {
        let cfg = parse(&minimal("[[models]]\nkind = \"ols_ct\"\n")).unwrap();
        assert_eq!(cfg.split, default_split());
        assert_eq!(cfg.costs.len(), 5);
        assert_eq!(cfg.periods.len(), 4);
        assert_eq!(cfg.grid(), (1..=12).collect::<Vec<_>>());
        assert_eq!(cfg.models[0].seed, DEFAULT_BASE_SEED);
        assert!(cfg.models[0].ct_truncate);
    }

    #[test]
    fn zero_models_is_a_config_error() {
        let err = parse(&minimal("")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("models"));
    }

    #[test]
    fn duplicate_model_kind_rejected() {
        let err = parse(&minimal("[[models]]\nkind = \"ridge\"\n[[models]]\nkind = \"ridge\"\n"))
            .unwrap_err();
        assert!(err.to_string().contains("more than once"));
    }

    #[test]
    fn seed_override_applies_to_unpinned_models() {
        let text = minimal("[[models]]\nkind = \"ols_ct\"\n[[models]]\nkind = \"ridge\"\nseed = 7\n");
        let file: FileConfig = toml::from_str(&text).unwrap();
        let cfg = resolve(file, Some(99), None).unwrap();
        assert_eq!(cfg.models[0].seed, 99);
        assert_eq!(cfg.models[1].seed, 7);
        assert_eq!(cfg.base_seed, 99);
    }

    #[test]
    fn custom_split_derives_fallback_period() {
        let text = minimal(
            "[[models]]\nkind = \"ols_ct\"\n[split]\ntrain_start = 200001\ntrain_end = 200112\ntest_start = 200201\ntest_end = 200312\n",
        );
        let cfg = parse(&text).unwrap();
        assert_eq!(cfg.periods.len(), 1);
        assert_eq!(cfg.periods[0].label, "test");
    }

    #[test]
    fn digest_is_stable_and_config_sensitive() {
        let a = parse(&minimal("[[models]]\nkind = \"ols_ct\"\n")).unwrap();
        let b = parse(&minimal("[[models]]\nkind = \"ols_ct\"\n")).unwrap();
        assert_eq!(a.digest(), b.digest());
        let c = parse(&minimal("[[models]]\nkind = \"ols_ct\"\nseed = 1\n")).unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse(&minimal("[[models]]\nkind = \"ols_ct\"\nbogus = 1\n")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
