//! Desk-scale reproductions of the analytical experiments: the Zipf
//! estimator study, divergence-vs-sample-count sweeps on toy models, and
//! the divergence-vs-quality correlation with exact-objective regret
//! standing in for corpus scores.
//!
//! Runs are independent and fully determined by the base seed; per-run
//! seeds derive from the base via splitmix steps so results are independent
//! of scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::decoder::{exact_objective, select, DecodeError, Rule};
use crate::divergence::{
    jsd_restricted, kl_restricted, DivergenceError, RestrictedDistribution,
};
use crate::logprob::LogProb;
use crate::pool::{HypothesisPool, PoolError, PoolMode};
use crate::toylm::{SamplerConfig, ToyLm, ToyLmError};
use crate::utility::{Utility, UtilityMatrix};
use crate::weights::{empirical_weights, model_based_weights, WeightError};

/// Enumeration cap for the exact-objective oracle.
pub const DEFAULT_ENUM_BUDGET: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error(transparent)]
    Weights(#[from] WeightError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error(transparent)]
    ToyLm(#[from] ToyLmError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// splitmix64: cheap, well-mixed seed derivation.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Derives a child seed from a base seed and structured indices, so every
/// (run, input, size) cell gets an independent, reproducible stream.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut seed = splitmix64(base);
    for &part in parts {
        seed = splitmix64(seed ^ part);
    }
    seed
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var =
        values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    var.sqrt()
}

/// Spearman rank correlation with average ranks on ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = ranks(xs);
    let ry = ranks(ys);
    pearson(&rx, &ry)
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs);
    let my = mean(ys);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

fn config_hash<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    let mut hex = String::with_capacity(16);
    for byte in &digest[..8] {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

// ---------------------------------------------------------------------------
// Zipf estimator study
// ---------------------------------------------------------------------------

/// Configuration for the Zipf estimator study. The published experiment
/// fixes the exponent at 2 with 500 outcomes and 100 runs but omits the
/// sample count per run, so that stays a required parameter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZipfConfig {
    pub exponent: f64,
    pub domain_size: usize,
    pub samples_per_run: usize,
    pub runs: usize,
    pub seed: u64,
}

impl ZipfConfig {
    pub fn new(samples_per_run: usize, seed: u64) -> Self {
        ZipfConfig {
            exponent: 2.0,
            domain_size: 500,
            samples_per_run,
            runs: 100,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.exponent <= 1.0 {
            return Err(SimError::InvalidConfig(format!(
                "zipf exponent must exceed 1, got {}",
                self.exponent
            )));
        }
        if self.domain_size < 2 {
            return Err(SimError::InvalidConfig("domain needs >= 2 outcomes".into()));
        }
        if self.runs == 0 || self.samples_per_run == 0 {
            return Err(SimError::InvalidConfig(
                "runs and samples_per_run must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Finite Zipf over ranks 1..=n renormalized to a proper distribution:
/// P(r) = r^-a / sum r'^-a. Ranks start at 1 because the power law is
/// undefined at 0 and the infinite-support normalizer does not apply to a
/// truncated domain.
pub fn zipf_pmf(exponent: f64, domain_size: usize) -> Vec<f64> {
    let raw: Vec<f64> = (1..=domain_size)
        .map(|r| (r as f64).powf(-exponent))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|m| m / total).collect()
}

/// One run's pair of divergences.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZipfRun {
    pub kl_monte_carlo: f64,
    pub kl_model_based: f64,
}

/// Aggregates over the runs.
#[derive(Debug, Clone, Serialize)]
pub struct ZipfReport {
    pub mean_kl_mc: f64,
    pub std_kl_mc: f64,
    pub mean_kl_mb: f64,
    pub std_kl_mb: f64,
    pub runs: Vec<ZipfRun>,
    pub config_hash: String,
}

/// Draws `samples_per_run` outcomes per run from the finite Zipf, builds
/// both estimates on the observed support, and reports their exact KL from
/// the true distribution.
pub fn run_zipf(config: &ZipfConfig) -> Result<ZipfReport, SimError> {
    use rand::{Rng, SeedableRng};
    config.validate()?;

    let pmf = zipf_pmf(config.exponent, config.domain_size);
    let cumulative: Vec<f64> = pmf
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();

    // Runs are independent with per-run derived seeds, so the parallel
    // collect is schedule-independent.
    let runs: Vec<ZipfRun> = (0..config.runs)
        .into_par_iter()
        .map(|run| -> Result<ZipfRun, SimError> {
            let seed = derive_seed(config.seed, &[run as u64]);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<(String, LogProb)> = (0..config.samples_per_run)
                .map(|_| {
                    let u: f64 = rng.random();
                    let rank = cumulative.partition_point(|&c| c < u).min(pmf.len() - 1);
                    (
                        format!("{}", rank + 1),
                        LogProb::new(pmf[rank].ln()).expect("pmf entry is positive"),
                    )
                })
                .collect();
            let pool = HypothesisPool::build(format!("run-{run}"), samples, PoolMode::Shared)?;
            let logprobs = pool.reference_logprobs();

            let empirical =
                RestrictedDistribution::with_tail_from(empirical_weights(&pool), &logprobs);
            let model_based =
                RestrictedDistribution::with_tail_from(model_based_weights(&pool)?, &logprobs);
            Ok(ZipfRun {
                kl_monte_carlo: kl_restricted(&empirical, &logprobs)?,
                kl_model_based: kl_restricted(&model_based, &logprobs)?,
            })
        })
        .collect::<Result<_, _>>()?;

    let mc: Vec<f64> = runs.iter().map(|r| r.kl_monte_carlo).collect();
    let mb: Vec<f64> = runs.iter().map(|r| r.kl_model_based).collect();
    Ok(ZipfReport {
        mean_kl_mc: mean(&mc),
        std_kl_mc: std_dev(&mc),
        mean_kl_mb: mean(&mb),
        std_kl_mb: std_dev(&mb),
        runs,
        config_hash: config_hash(config),
    })
}

// ---------------------------------------------------------------------------
// Toy-model divergence sweep
// ---------------------------------------------------------------------------

/// One sweep point: divergences averaged over the synthetic inputs at a
/// fixed sample count.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SweepRow {
    pub sample_count: usize,
    pub mean_kl_mc: f64,
    pub std_kl_mc: f64,
    pub mean_kl_mb: f64,
    pub std_kl_mb: f64,
    pub mean_jsd_mc: f64,
    pub mean_jsd_mb: f64,
    /// Inputs whose Monte Carlo KL was infinite and left out of the means.
    pub excluded_mc: usize,
    /// Same for the model-based estimate.
    pub excluded_mb: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub seed: u64,
    pub config_hash: String,
}

/// For every sample count and every synthetic input (one toy model each),
/// samples a pool, computes both restricted KLs and JSDs exactly, and
/// averages per count. Per-cell sampling seeds derive from the config seed,
/// the input index, and the sample count.
pub fn run_divergence_sweep(
    inputs: &[ToyLm],
    config: &SamplerConfig,
    sizes: &[usize],
) -> Result<SweepReport, SimError> {
    if inputs.is_empty() || sizes.is_empty() {
        return Err(SimError::InvalidConfig(
            "sweep needs at least one input and one size".into(),
        ));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        if n == 0 {
            return Err(SimError::InvalidConfig("sample counts must be positive".into()));
        }
        let cells: Vec<SweepCell> = inputs
            .par_iter()
            .enumerate()
            .map(|(input_idx, lm)| sweep_cell(lm, config, n, input_idx as u64))
            .collect::<Result<_, _>>()?;
        let mut kl_mc = Vec::new();
        let mut kl_mb = Vec::new();
        let mut jsd_mc = Vec::new();
        let mut jsd_mb = Vec::new();
        let mut excluded_mc = 0usize;
        let mut excluded_mb = 0usize;
        for cell in &cells {
            match cell.kl_mc.is_finite() {
                true => kl_mc.push(cell.kl_mc),
                false => excluded_mc += 1,
            }
            match cell.kl_mb.is_finite() {
                true => kl_mb.push(cell.kl_mb),
                false => excluded_mb += 1,
            }
            jsd_mc.push(cell.jsd_mc);
            jsd_mb.push(cell.jsd_mb);
        }
        rows.push(SweepRow {
            sample_count: n,
            mean_kl_mc: mean(&kl_mc),
            std_kl_mc: std_dev(&kl_mc),
            mean_kl_mb: mean(&kl_mb),
            std_kl_mb: std_dev(&kl_mb),
            mean_jsd_mc: mean(&jsd_mc),
            mean_jsd_mb: mean(&jsd_mb),
            excluded_mc,
            excluded_mb,
        });
    }
    Ok(SweepReport {
        rows,
        seed: config.seed,
        config_hash: config_hash(config),
    })
}

struct SweepCell {
    kl_mc: f64,
    kl_mb: f64,
    jsd_mc: f64,
    jsd_mb: f64,
    pool: HypothesisPool,
}

fn sweep_cell(
    lm: &ToyLm,
    config: &SamplerConfig,
    n: usize,
    input_idx: u64,
) -> Result<SweepCell, SimError> {
    let seed = derive_seed(config.seed, &[input_idx, n as u64]);
    let samples = lm.sample(&config.with_seed(seed), n);
    let pool = HypothesisPool::build(format!("input-{input_idx}"), samples, PoolMode::Shared)?;
    let logprobs = pool.reference_logprobs();

    let empirical = RestrictedDistribution::with_tail_from(empirical_weights(&pool), &logprobs);
    let model_based =
        RestrictedDistribution::with_tail_from(model_based_weights(&pool)?, &logprobs);
    Ok(SweepCell {
        kl_mc: kl_restricted(&empirical, &logprobs)?,
        kl_mb: kl_restricted(&model_based, &logprobs)?,
        jsd_mc: jsd_restricted(&empirical, &logprobs)?,
        jsd_mb: jsd_restricted(&model_based, &logprobs)?,
        pool,
    })
}

/// Domain tag separating model-generation seeds from sampling seeds.
const LM_SEED_TAG: u64 = 0x6c6d;

/// Generates `count` independent random toy models, one per synthetic
/// input, with the standing default shape.
pub fn random_inputs(count: usize, seed: u64) -> Vec<ToyLm> {
    (0..count)
        .map(|i| ToyLm::random_default(derive_seed(seed, &[LM_SEED_TAG, i as u64])))
        .collect()
}

/// Same, but smaller models whose support stays cheap to enumerate; the
/// quality correlation and oracle checks use these.
pub fn random_small_inputs(
    count: usize,
    symbols: usize,
    max_length: usize,
    seed: u64,
) -> Vec<ToyLm> {
    (0..count)
        .map(|i| ToyLm::random(symbols, max_length, derive_seed(seed, &[LM_SEED_TAG, i as u64])))
        .collect()
}

// ---------------------------------------------------------------------------
// Divergence-vs-quality correlation
// ---------------------------------------------------------------------------

/// One (sample count, estimator) point: mean KL against mean regret of the
/// selected hypothesis under the exact objective.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct QualityRow {
    pub sample_count: usize,
    pub mean_kl_mc: f64,
    pub mean_regret_mc: f64,
    pub mean_kl_mb: f64,
    pub mean_regret_mb: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct QualityReport {
    pub rows: Vec<QualityRow>,
    pub seed: u64,
    pub config_hash: String,
}

impl QualityReport {
    /// (kl, regret) pairs for the Monte Carlo estimator across the sweep.
    pub fn monte_carlo_points(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .map(|r| (r.mean_kl_mc, r.mean_regret_mc))
            .collect()
    }

    pub fn model_based_points(&self) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .map(|r| (r.mean_kl_mb, r.mean_regret_mb))
            .collect()
    }

    pub fn spearman_mc(&self) -> f64 {
        let (kl, regret): (Vec<f64>, Vec<f64>) = self.monte_carlo_points().into_iter().unzip();
        spearman(&kl, &regret)
    }

    pub fn spearman_mb(&self) -> f64 {
        let (kl, regret): (Vec<f64>, Vec<f64>) = self.model_based_points().into_iter().unzip();
        spearman(&kl, &regret)
    }
}

/// For each sample count, measures each estimator's mean KL and the mean
/// regret of its selection against the exact objective: regret =
/// best exact objective over the candidates minus the exact objective of
/// the selected candidate.
pub fn run_quality_correlation(
    inputs: &[ToyLm],
    config: &SamplerConfig,
    sizes: &[usize],
    utility: &Utility,
) -> Result<QualityReport, SimError> {
    if inputs.is_empty() || sizes.is_empty() {
        return Err(SimError::InvalidConfig(
            "correlation sweep needs at least one input and one size".into(),
        ));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        struct InputPoint {
            mc: Option<(f64, f64)>,
            mb: Option<(f64, f64)>,
        }
        let points: Vec<InputPoint> = inputs
            .par_iter()
            .enumerate()
            .map(|(input_idx, lm)| -> Result<InputPoint, SimError> {
                let cell = sweep_cell(lm, config, n, input_idx as u64)?;
                let pool = &cell.pool;
                let matrix = UtilityMatrix::compute(pool, utility);
                let candidates: Vec<String> = pool
                    .candidates()
                    .iter()
                    .map(|h| h.text().to_string())
                    .collect();
                let exact = exact_objective(&candidates, lm, utility, DEFAULT_ENUM_BUDGET)?;
                let best = exact.objective_values[exact.chosen_index];

                let picked_mc = select(pool, &matrix, &empirical_weights(pool), Rule::Mbr)?;
                let picked_mb = select(pool, &matrix, &model_based_weights(pool)?, Rule::Mbmbr)?;
                Ok(InputPoint {
                    mc: cell.kl_mc.is_finite().then(|| {
                        (cell.kl_mc, best - exact.objective_values[picked_mc.chosen_index])
                    }),
                    mb: cell.kl_mb.is_finite().then(|| {
                        (cell.kl_mb, best - exact.objective_values[picked_mb.chosen_index])
                    }),
                })
            })
            .collect::<Result<_, _>>()?;

        let (kl_mc, regret_mc): (Vec<f64>, Vec<f64>) =
            points.iter().filter_map(|p| p.mc).unzip();
        let (kl_mb, regret_mb): (Vec<f64>, Vec<f64>) =
            points.iter().filter_map(|p| p.mb).unzip();
        rows.push(QualityRow {
            sample_count: n,
            mean_kl_mc: mean(&kl_mc),
            mean_regret_mc: mean(&regret_mc),
            mean_kl_mb: mean(&kl_mb),
            mean_regret_mb: mean(&regret_mb),
        });
    }
    Ok(QualityReport {
        rows,
        seed: config.seed,
        config_hash: config_hash(config),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zipf_pmf_normalizes() {
        let pmf = zipf_pmf(2.0, 500);
        assert_eq!(pmf.len(), 500);
        let total: f64 = pmf.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(pmf[0] > pmf[1] && pmf[1] > pmf[499]);
    }

    #[test]
    fn zipf_runs_satisfy_the_ordering_guarantee() {
        let report = run_zipf(&ZipfConfig::new(50, 7)).unwrap();
        assert_eq!(report.runs.len(), 100);
        for run in &report.runs {
            assert!(
                run.kl_model_based <= run.kl_monte_carlo + 1e-12,
                "mb {} > mc {}",
                run.kl_model_based,
                run.kl_monte_carlo
            );
        }
    }

    #[test]
    fn near_saturating_sample_counts_drive_both_kls_to_zero() {
        // Small domain so the saturating regime is cheap.
        let config = ZipfConfig {
            exponent: 2.0,
            domain_size: 20,
            samples_per_run: 20_000,
            runs: 5,
            seed: 3,
        };
        let report = run_zipf(&config).unwrap();
        assert!(report.mean_kl_mc < 0.01, "mc {}", report.mean_kl_mc);
        assert!(report.mean_kl_mb < 0.01, "mb {}", report.mean_kl_mb);
    }

    #[test]
    fn zipf_reports_are_reproducible() {
        let a = run_zipf(&ZipfConfig::new(100, 11)).unwrap();
        let b = run_zipf(&ZipfConfig::new(100, 11)).unwrap();
        assert_eq!(a.mean_kl_mc.to_bits(), b.mean_kl_mc.to_bits());
        assert_eq!(a.std_kl_mb.to_bits(), b.std_kl_mb.to_bits());
        let c = run_zipf(&ZipfConfig::new(100, 12)).unwrap();
        assert_ne!(a.mean_kl_mc.to_bits(), c.mean_kl_mc.to_bits());
    }

    #[test]
    fn sweep_rows_ordered_and_reproducible() {
        let inputs = random_inputs(10, 5);
        let config = SamplerConfig::epsilon(0.05, 99).unwrap();
        let sizes = [4, 8, 16];
        let a = run_divergence_sweep(&inputs, &config, &sizes).unwrap();
        let b = run_divergence_sweep(&inputs, &config, &sizes).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 3);
        for (row, &n) in a.rows.iter().zip(&sizes) {
            assert_eq!(row.sample_count, n);
            assert!(row.mean_kl_mc >= 0.0 && row.mean_kl_mb >= 0.0);
            assert!(row.mean_jsd_mc >= 0.0 && row.mean_jsd_mb >= 0.0);
            assert!(
                row.mean_kl_mb <= row.mean_kl_mc + 1e-12,
                "model-based mean above Monte Carlo at n = {n}"
            );
        }
    }

    #[test]
    fn quality_regret_is_nonnegative_and_reproducible() {
        let inputs = random_small_inputs(8, 3, 4, 21);
        let config = SamplerConfig::ancestral(17);
        let report =
            run_quality_correlation(&inputs, &config, &[4, 16], &Utility::UnigramF1).unwrap();
        for row in &report.rows {
            assert!(row.mean_regret_mc >= 0.0);
            assert!(row.mean_regret_mb >= 0.0);
        }
        let again =
            run_quality_correlation(&inputs, &config, &[4, 16], &Utility::UnigramF1).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn spearman_agrees_with_hand_ranks() {
        // Perfect monotone increase.
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
        // Perfect monotone decrease.
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        // Ties get average ranks.
        let r = spearman(&[1.0, 1.0, 2.0], &[5.0, 5.0, 9.0]);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derive_seed_changes_with_every_part() {
        let base = derive_seed(1, &[2, 3]);
        assert_ne!(base, derive_seed(1, &[2, 4]));
        assert_ne!(base, derive_seed(1, &[3, 3]));
        assert_ne!(base, derive_seed(2, &[2, 3]));
        assert_eq!(base, derive_seed(1, &[2, 3]));
    }
}
