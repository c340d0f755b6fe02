//! Deterministic synthetic source files.
//!
//! Not a substitute for the real data — the reference numbers in the
//! published tables only reproduce on the actual vintages — but enough to
//! run the whole pipeline end to end in tests, benches and demos. The
//! generated target return carries a mild dependence on the lagged spreads
//! and its own lag, so the models have something to find.

use crate::dataio::{build_dataset, parse_factor_csv, parse_predictor_csv, AlignedDataset, Unit};
use crate::month::Month;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

/// CSV text for the two source files, factor file in percent units and
/// predictor file in decimals.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub factor_csv: String,
    pub predictor_csv: String,
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller on two uniforms; one draw per call keeps the stream simple.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Generate `n_months` of aligned synthetic source data starting at `start`.
pub fn generate(start: Month, n_months: usize, seed: u64) -> SyntheticData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut factor_csv = String::from("date,Mkt-RF,SMB,HML,RMW,CMA,RF\n");
    let mut predictor_csv = String::from("yyyymm,tbl,lty,AAA,BAA,corpr\n");

    let mut tbl: f64 = 0.003; // monthly t-bill yield
    let mut term: f64 = 0.0015; // term spread level
    let mut credit: f64 = 0.0009; // default spread level
    let mut cma: f64 = 0.002;
    let mut month = start;

    for _ in 0..n_months {
        tbl = (tbl + 0.0002 * gauss(&mut rng)).clamp(0.0001, 0.012);
        term = (term + 0.00015 * gauss(&mut rng)).clamp(-0.001, 0.004);
        credit = (credit + 0.00008 * gauss(&mut rng)).clamp(0.0002, 0.003);
        let lty = tbl + term;
        let aaa = lty + 0.0008 + 0.00005 * gauss(&mut rng);
        let baa = aaa + credit;
        let corpr = 0.004 + 0.01 * gauss(&mut rng);

        // Next month's CMA leans on this month's spreads and its own value.
        let cma_next = 0.0005
            + 0.12 * cma
            + 0.9 * (term - 0.0015)
            + 1.4 * (credit - 0.0009)
            + 0.012 * gauss(&mut rng);

        let mkt = 0.005 + 0.04 * gauss(&mut rng);
        let smb = 0.02 * gauss(&mut rng);
        let hml = 0.02 * gauss(&mut rng);
        let rmw = 0.015 * gauss(&mut rng);
        let rf = tbl;

        // Factor file quotes percents to four decimals, like the source.
        let _ = writeln!(
            factor_csv,
            "{month},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            mkt * 100.0,
            smb * 100.0,
            hml * 100.0,
            rmw * 100.0,
            cma * 100.0,
            rf * 100.0
        );
        let _ = writeln!(
            predictor_csv,
            "{month},{tbl:.6},{lty:.6},{aaa:.6},{baa:.6},{corpr:.6}"
        );

        cma = cma_next;
        month = month.next();
    }

    SyntheticData { factor_csv, predictor_csv }
}

/// Parse-and-merge convenience over [`generate`].
pub fn dataset(start: Month, n_months: usize, seed: u64) -> AlignedDataset {
    let data = generate(start, n_months, seed);
    let factors = parse_factor_csv(&data.factor_csv, Unit::Percent).expect("synthetic factors");
    let predictors =
        parse_predictor_csv(&data.predictor_csv, Unit::Decimal).expect("synthetic predictors");
    build_dataset(&factors, &predictors).expect("synthetic merge")
}
