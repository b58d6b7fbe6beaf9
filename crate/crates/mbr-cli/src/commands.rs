use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;

use mbr_core::io::{
    self as formats, read_lm_config, read_reference_texts, read_samples, read_utility_matrices,
    LogBase, ReadOptions, SelectionRow,
};
use mbr_core::sim::{
    random_small_inputs, run_divergence_sweep, run_quality_correlation, ZipfConfig,
    DEFAULT_ENUM_BUDGET,
};
use mbr_core::{
    empirical_weights, jsd_restricted, kl_model_based_closed_form, kl_restricted,
    length_normalized_weights, model_based_weights, relative_length, select, LengthUnit,
    PoolMode, RestrictedDistribution, Rule, SamplerConfig, ToyLm, TruncationAlgorithm, Utility,
    UtilityMatrix, WeightVector,
};

// ---------------------------------------------------------------------------
// shared flag enums
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleChoice {
    Mbr,
    Mbmbr,
    #[value(name = "mbmbr-l")]
    MbmbrL,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UtilityChoice {
    Bleu,
    Chrf,
    F1,
    External,
}

impl UtilityChoice {
    fn builtin(self) -> Option<Utility> {
        match self {
            UtilityChoice::Bleu => Some(Utility::sentence_bleu()),
            UtilityChoice::Chrf => Some(Utility::chrf()),
            UtilityChoice::F1 => Some(Utility::UnigramF1),
            UtilityChoice::External => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogBaseChoice {
    E,
    #[value(name = "2")]
    Two,
    #[value(name = "10")]
    Ten,
}

impl From<LogBaseChoice> for LogBase {
    fn from(choice: LogBaseChoice) -> LogBase {
        match choice {
            LogBaseChoice::E => LogBase::Natural,
            LogBaseChoice::Two => LogBase::Two,
            LogBaseChoice::Ten => LogBase::Ten,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LengthUnitChoice {
    Tokens,
    Chars,
}

impl From<LengthUnitChoice> for LengthUnit {
    fn from(choice: LengthUnitChoice) -> LengthUnit {
        match choice {
            LengthUnitChoice::Tokens => LengthUnit::WhitespaceTokens,
            LengthUnitChoice::Chars => LengthUnit::Chars,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeChoice {
    Shared,
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Records,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmChoice {
    Ancestral,
    #[value(name = "top-k")]
    TopK,
    Nucleus,
    Epsilon,
}

/// Sampler flags shared by `sweep` and `toylm sample`.
#[derive(Debug, Args)]
pub struct SamplerArgs {
    #[arg(long, value_enum, default_value = "epsilon")]
    pub algorithm: AlgorithmChoice,
    /// k for top-k sampling.
    #[arg(short = 'k', long, default_value_t = 10)]
    pub k: usize,
    /// Nucleus mass for nucleus sampling.
    #[arg(short = 'p', long, default_value_t = 0.9)]
    pub p: f64,
    /// Threshold for epsilon sampling.
    #[arg(long, default_value_t = 0.02)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SamplerArgs {
    fn config(&self) -> Result<SamplerConfig> {
        let algorithm = match self.algorithm {
            AlgorithmChoice::Ancestral => TruncationAlgorithm::Ancestral,
            AlgorithmChoice::TopK => TruncationAlgorithm::TopK { k: self.k },
            AlgorithmChoice::Nucleus => TruncationAlgorithm::Nucleus { p: self.p },
            AlgorithmChoice::Epsilon => TruncationAlgorithm::Epsilon {
                epsilon: self.epsilon,
            },
        };
        Ok(SamplerConfig::new(algorithm, self.temperature, self.seed)?)
    }
}

// ---------------------------------------------------------------------------
// helpers
// ---------------------------------------------------------------------------

fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path == Path::new("-") {
        Ok(Box::new(BufReader::new(io::stdin())))
    } else {
        let file =
            File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        Ok(Box::new(BufReader::new(file)))
    }
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    match path {
        Some(path) => {
            let file = File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))?;
            Ok(Box::new(file))
        }
        None => Ok(Box::new(io::stdout())),
    }
}

fn print_warnings(warnings: &[String]) {
    for warning in warnings {
        eprintln!("warning: {warning}");
    }
}

fn load_lm(path: &Path) -> Result<ToyLm> {
    let mut contents = String::new();
    File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))?
        .read_to_string(&mut contents)?;
    Ok(read_lm_config(&contents)?)
}

// ---------------------------------------------------------------------------
// select
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Sample record file ("-" for stdin).
    #[arg(long)]
    pub input: PathBuf,
    /// Decision rules to run, in output order.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [RuleChoice::Mbr, RuleChoice::Mbmbr, RuleChoice::MbmbrL])]
    pub rules: Vec<RuleChoice>,
    #[arg(long, value_enum, default_value = "bleu")]
    pub utility: UtilityChoice,
    /// Utility-matrix file, required with --utility external.
    #[arg(long)]
    pub external_matrix: Option<PathBuf>,
    /// Exponent scale on sequence length for mbmbr-l.
    #[arg(long, default_value_t = 1.0)]
    pub length_scale: f64,
    #[arg(long, value_enum, default_value = "tokens")]
    pub length_unit: LengthUnitChoice,
    #[arg(long, value_enum, default_value = "e")]
    pub log_base: LogBaseChoice,
    /// Accept positive logprobs (external length-penalized scores).
    #[arg(long)]
    pub unnormalized: bool,
    #[arg(long, value_enum, default_value = "shared")]
    pub mode: ModeChoice,
    /// Reference texts per id, enabling the relative-length column.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run_select(args: SelectArgs) -> Result<()> {
    if args.utility == UtilityChoice::External && args.external_matrix.is_none() {
        bail!("--utility external requires --external-matrix");
    }
    let options = ReadOptions {
        log_base: args.log_base.into(),
        unnormalized: args.unnormalized,
        mode: match args.mode {
            ModeChoice::Shared => PoolMode::Shared,
            ModeChoice::Split => PoolMode::Split,
        },
    };
    let read = read_samples(open_input(&args.input)?, &options)?;
    print_warnings(&read.warnings);

    let external = match &args.external_matrix {
        Some(path) => Some(read_utility_matrices(open_input(path)?)?),
        None => None,
    };
    let references = match &args.reference {
        Some(path) => Some(read_reference_texts(open_input(path)?)?),
        None => None,
    };
    let unit: LengthUnit = args.length_unit.into();

    let mut rows = Vec::new();
    for (id, pool) in &read.pools {
        let matrix = match (&external, args.utility.builtin()) {
            (_, Some(utility)) => UtilityMatrix::compute(pool, &utility),
            (Some(matrices), None) => {
                let entry = matrices
                    .get(id)
                    .with_context(|| format!("no external matrix for pool {id:?}"))?;
                entry.validate_against(pool)?;
                entry.matrix.clone()
            }
            (None, None) => unreachable!("validated above"),
        };
        for &rule in &args.rules {
            let (weights, rule_tag): (WeightVector, Rule) = match rule {
                RuleChoice::Mbr => (empirical_weights(pool), Rule::Mbr),
                RuleChoice::Mbmbr => (model_based_weights(pool)?, Rule::Mbmbr),
                RuleChoice::MbmbrL => (
                    length_normalized_weights(pool, args.length_scale, unit)?,
                    Rule::MbmbrL,
                ),
            };
            let result = select(pool, &matrix, &weights, rule_tag)?;
            let rel_len = match references.as_ref().and_then(|r| r.get(id)) {
                Some(reference) => Some(relative_length(&result, reference, unit)?),
                None => None,
            };
            rows.push(SelectionRow::new(id, &result, rel_len));
        }
    }

    let writer = open_output(args.output.as_ref())?;
    match args.format {
        OutputFormat::Csv => formats::selection_report_csv(writer, &rows)?,
        OutputFormat::Records => formats::selection_report_records(writer, &rows)?,
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// divergence
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct DivergenceArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Model mass outside the observed support, applied to every pool.
    #[arg(long, conflicts_with = "assume_tail_zero")]
    pub tail_mass: Option<f64>,
    /// Treat the observed support as exhaustive (tail mass 0).
    #[arg(long)]
    pub assume_tail_zero: bool,
    #[arg(long, value_enum, default_value = "e")]
    pub log_base: LogBaseChoice,
    #[arg(long)]
    pub unnormalized: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct DivergenceRow {
    format_version: u32,
    id: String,
    kl_mc: f64,
    kl_mb: f64,
    kl_mb_closed_form: f64,
    jsd_mc: f64,
    jsd_mb: f64,
}

pub fn run_divergence(args: DivergenceArgs) -> Result<()> {
    let tail_mass = match (args.tail_mass, args.assume_tail_zero) {
        (Some(t), false) => t,
        (None, true) => 0.0,
        _ => bail!("divergence needs either --tail-mass or --assume-tail-zero"),
    };
    let options = ReadOptions {
        log_base: args.log_base.into(),
        unnormalized: args.unnormalized,
        mode: PoolMode::Shared,
    };
    let read = read_samples(open_input(&args.input)?, &options)?;
    print_warnings(&read.warnings);

    let mut csv_writer = csv::Writer::from_writer(open_output(args.output.as_ref())?);
    for (id, pool) in &read.pools {
        let logprobs = pool.reference_logprobs();
        let empirical =
            RestrictedDistribution::new(empirical_weights(pool), tail_mass)?;
        let model_based =
            RestrictedDistribution::new(model_based_weights(pool)?, tail_mass)?;
        csv_writer.serialize(DivergenceRow {
            format_version: formats::REPORT_FORMAT_VERSION,
            id: id.clone(),
            kl_mc: kl_restricted(&empirical, &logprobs)?,
            kl_mb: kl_restricted(&model_based, &logprobs)?,
            kl_mb_closed_form: kl_model_based_closed_form(pool)?,
            jsd_mc: jsd_restricted(&empirical, &logprobs)?,
            jsd_mb: jsd_restricted(&model_based, &logprobs)?,
        })?;
    }
    csv_writer.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate-zipf
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct ZipfArgs {
    /// Outcomes drawn per run; the study's one free parameter.
    #[arg(long)]
    pub samples_per_run: usize,
    #[arg(long, default_value_t = 2.0)]
    pub exponent: f64,
    #[arg(long, default_value_t = 500)]
    pub domain_size: usize,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run_zipf(args: ZipfArgs) -> Result<()> {
    let config = ZipfConfig {
        exponent: args.exponent,
        domain_size: args.domain_size,
        samples_per_run: args.samples_per_run,
        runs: args.runs,
        seed: args.seed,
    };
    let report = mbr_core::sim::run_zipf(&config)?;
    let writer = open_output(args.output.as_ref())?;
    formats::zipf_report_csv(writer, &config, &report)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Synthetic inputs (independent random toy models, or sampling
    /// replicates of --lm when given).
    #[arg(long, default_value_t = 200)]
    pub inputs: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [4usize, 8, 16, 32, 64])]
    pub sizes: Vec<usize>,
    /// Toy model config; omitted, each input is an independent random model.
    #[arg(long)]
    pub lm: Option<PathBuf>,
    /// Body symbols in each random model.
    #[arg(long, default_value_t = 4)]
    pub lm_symbols: usize,
    /// Length cap of each random model (body length plus one).
    #[arg(long, default_value_t = 7)]
    pub lm_max_length: usize,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Also run the divergence-vs-regret correlation sweep.
    #[arg(long)]
    pub quality: bool,
    /// Utility for the quality sweep.
    #[arg(long, value_enum, default_value = "f1")]
    pub utility: UtilityChoice,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn run_sweep(args: SweepArgs) -> Result<()> {
    if args.inputs == 0 {
        bail!("--inputs must be positive");
    }
    let config = args.sampler.config()?;
    let inputs: Vec<ToyLm> = match &args.lm {
        Some(path) => vec![load_lm(path)?; args.inputs],
        None => random_small_inputs(
            args.inputs,
            args.lm_symbols,
            args.lm_max_length,
            args.sampler.seed,
        ),
    };
    let writer = open_output(args.output.as_ref())?;
    if args.quality {
        let utility = args
            .utility
            .builtin()
            .context("the quality sweep needs a built-in utility")?;
        let report = run_quality_correlation(&inputs, &config, &args.sizes, &utility)?;
        formats::quality_report_csv(writer, &report)?;
        eprintln!(
            "spearman(kl, regret): monte-carlo {:.4}, model-based {:.4}",
            report.spearman_mc(),
            report.spearman_mb()
        );
    } else {
        let report = run_divergence_sweep(&inputs, &config, &args.sizes)?;
        formats::sweep_report_csv(writer, &report)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// toylm
// ---------------------------------------------------------------------------

#[derive(Debug, Subcommand)]
pub enum ToylmCommand {
    /// Draw sequences; prints logprob and body text, tab-separated.
    Sample {
        #[arg(long)]
        lm: PathBuf,
        #[arg(short = 'n', long, default_value_t = 10)]
        count: usize,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List the entire support with exact logprobs.
    Enumerate {
        #[arg(long)]
        lm: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ENUM_BUDGET)]
        budget: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score one body text under the model.
    Logprob {
        #[arg(long)]
        lm: PathBuf,
        /// Body text; markers are implied. Empty string for the empty body.
        #[arg(long)]
        text: String,
    },
}

pub fn run_toylm(command: ToylmCommand) -> Result<()> {
    match command {
        ToylmCommand::Sample {
            lm,
            count,
            sampler,
            output,
        } => {
            let model = load_lm(&lm)?;
            let config = sampler.config()?;
            let mut writer = open_output(output.as_ref())?;
            for (text, logprob) in model.sample(&config, count) {
                writeln!(writer, "{}\t{}", logprob.value(), text)?;
            }
            Ok(())
        }
        ToylmCommand::Enumerate { lm, budget, output } => {
            let model = load_lm(&lm)?;
            let mut writer = open_output(output.as_ref())?;
            for (text, logprob) in model.enumerate(budget)? {
                writeln!(writer, "{}\t{}", logprob.value(), text)?;
            }
            Ok(())
        }
        ToylmCommand::Logprob { lm, text } => {
            let model = load_lm(&lm)?;
            let logprob = model.logprob_body_text(&text)?;
            println!("{}", logprob.value());
            Ok(())
        }
    }
}
