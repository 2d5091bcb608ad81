use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use plmix::em::{fit_em, EmConfig, InitKind, InitLabel};
use plmix::error::Error;
use plmix::eval::{rows_to_csv, run_synthetic, EvalReport, ExperimentConfig};
use plmix::least_squares::Link;
use plmix::model::{generate_top_l, mixture_log_likelihood, sample_mixture, MixtureParams};
use plmix::ranking::RankingDataset;
use plmix::report::{
    mixture_from_json, mixture_to_json, to_json_string, FitConfigEcho, FitOutput, MixtureJson,
    TruthOutput,
};
use plmix::soc::{parse_soc, write_soc};
use plmix::{cluster, dist_metric, e_step, misclustering_rate, select_k};

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(
    name = "plmix",
    version,
    about = "Fit mixtures of Plackett-Luce ranking models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a mixture to an election file
    Fit(FitArgs),
    /// Sample synthetic rankings from a generated mixture
    Sample(SampleArgs),
    /// Compare a fitted mixture against a reference
    Eval(EvalArgs),
    /// Choose the component count by validation BIC
    SelectK(SelectKArgs),
    /// Run a synthetic recovery sweep from a config file, emitting CSV
    SynthSweep(SynthSweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Spectral,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinkArg {
    Logit,
    Probit,
}

impl From<LinkArg> for Link {
    fn from(l: LinkArg) -> Link {
        match l {
            LinkArg::Logit => Link::Logit,
            LinkArg::Probit => Link::Probit,
        }
    }
}

#[derive(Parser)]
struct FitArgs {
    /// Election file to fit
    input: PathBuf,
    /// Number of mixture components
    #[arg(long)]
    k: usize,
    /// Initialization strategy
    #[arg(long, value_enum, default_value = "spectral")]
    init: InitArg,
    /// Link transform for the spectral initializer's least-squares stage
    #[arg(long, value_enum, default_value = "logit")]
    link: LinkArg,
    /// RNG seed (tie expansion, clustering restarts, random init)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// EM iteration cap
    #[arg(long, default_value_t = 200)]
    max_em_iter: usize,
    /// EM stops when the log-likelihood gain drops below this
    #[arg(long, default_value_t = 1e-8)]
    em_tol: f64,
    /// Spectral rank-selection threshold: a number, or "auto" for the
    /// scale-based default
    #[arg(long, default_value = "auto")]
    threshold: String,
    /// Keep the initial mixing weights instead of re-estimating them
    #[arg(long)]
    fix_beta: bool,
    /// Write the fit JSON here (standard output otherwise)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Parser)]
struct SampleArgs {
    /// Number of items per ranking
    #[arg(long)]
    n: usize,
    /// Number of mixture components
    #[arg(long)]
    k: usize,
    /// Informative utility coordinates in the generator
    #[arg(long)]
    l: usize,
    /// Number of rankings to draw
    #[arg(long)]
    m: usize,
    /// RNG seed for the generator
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the sampled election file here (standard output otherwise)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the generating mixture and latent labels as JSON
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Parser)]
struct EvalArgs {
    /// Fit JSON to evaluate
    #[arg(long)]
    fit: PathBuf,
    /// Reference mixture: a truth JSON, another fit JSON, or bare mixture
    /// JSON
    #[arg(long)]
    truth: PathBuf,
    /// Election file to score log-likelihood (and, when the reference
    /// carries labels, misclustering) on
    #[arg(long)]
    data: Option<PathBuf>,
    /// Write the metrics JSON here (standard output otherwise)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Parser)]
struct SelectKArgs {
    /// Election file to fit
    input: PathBuf,
    /// Candidate component counts: "2..10" (inclusive) or "2,3,5"
    #[arg(long)]
    k_candidates: String,
    /// Fraction of rankings held out for validation
    #[arg(long, default_value_t = 0.2)]
    val_split: f64,
    /// Initialization strategy
    #[arg(long, value_enum, default_value = "spectral")]
    init: InitArg,
    /// Link transform for the spectral initializer's least-squares stage
    #[arg(long, value_enum, default_value = "logit")]
    link: LinkArg,
    /// RNG seed (split shuffle, tie expansion, initialization)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// EM iteration cap
    #[arg(long, default_value_t = 200)]
    max_em_iter: usize,
    /// EM stops when the log-likelihood gain drops below this
    #[arg(long, default_value_t = 1e-8)]
    em_tol: f64,
    /// Spectral rank-selection threshold: a number, or "auto" for the
    /// scale-based default
    #[arg(long, default_value = "auto")]
    threshold: String,
    /// Write the selection JSON here (standard output otherwise)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Parser)]
struct SynthSweepArgs {
    /// Experiment configuration JSON
    #[arg(long)]
    config: PathBuf,
    /// Write the CSV here (standard output otherwise)
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Fit(args) => cmd_fit(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Eval(args) => cmd_eval(args),
        Command::SelectK(args) => cmd_select_k(args),
        Command::SynthSweep(args) => cmd_synth_sweep(args),
    }
}

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_threshold(text: &str) -> CliResult<Option<f64>> {
    if text == "auto" {
        return Ok(None);
    }
    let value: f64 = text
        .parse()
        .map_err(|_| format!("threshold must be a number or \"auto\", got {text:?}"))?;
    if !value.is_finite() || value < 0.0 {
        return Err(format!("threshold must be finite and nonnegative, got {value}").into());
    }
    Ok(Some(value))
}

fn load_dataset(path: &Path, seed: u64) -> CliResult<RankingDataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    // Tie expansion beyond the enumeration cap samples extensions; derive
    // its stream from the run seed so runs stay reproducible.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x50c0_ffee);
    Ok(parse_soc(&text, &mut rng)?)
}

fn resolved_threshold(requested: Option<f64>, dataset: &RankingDataset) -> CliResult<f64> {
    match requested {
        Some(t) => Ok(t),
        None => {
            let rows = (dataset.total_weight().round() as usize).max(1);
            Ok(cluster::default_threshold(dataset.n(), rows)?)
        }
    }
}

fn cmd_fit(args: FitArgs) -> CliResult<()> {
    let dataset = load_dataset(&args.input, args.seed)?;
    let threshold = parse_threshold(&args.threshold)?;
    let (init, label) = match args.init {
        InitArg::Spectral => (InitKind::Spectral, InitLabel::Spectral),
        InitArg::Random => (InitKind::Random, InitLabel::Random),
    };
    let config = EmConfig {
        init,
        link: args.link.into(),
        em_tol: args.em_tol,
        max_em_iter: args.max_em_iter,
        seed: args.seed,
        fix_beta: args.fix_beta,
        threshold,
        ..EmConfig::default()
    };
    let report = fit_em(&dataset, args.k, &config)?;
    let echo = FitConfigEcho::new(
        args.k,
        &config,
        label,
        resolved_threshold(threshold, &dataset)?,
    );
    let out = FitOutput::new(&report, echo);
    emit(args.output.as_deref(), &to_json_string(&out)?)
}

fn cmd_sample(args: SampleArgs) -> CliResult<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let truth = generate_top_l(args.n, args.l, args.k, &mut rng)?;
    let (dataset, labels) = sample_mixture(&truth, args.m, &mut rng)?;
    emit(args.output.as_deref(), &write_soc(&dataset))?;
    if let Some(path) = &args.truth_out {
        let truth_json = TruthOutput {
            mixture: mixture_to_json(&truth),
            labels,
            seed: args.seed,
        };
        std::fs::write(path, to_json_string(&truth_json)?)?;
    }
    Ok(())
}

/// Accepts a fit output, a truth output, or a bare mixture.
fn read_mixture(path: &Path) -> CliResult<(MixtureParams, Option<Vec<usize>>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    if let Ok(fit) = serde_json::from_str::<FitOutput>(&text) {
        return Ok((mixture_from_json(&fit.mixture)?, None));
    }
    if let Ok(truth) = serde_json::from_str::<TruthOutput>(&text) {
        return Ok((mixture_from_json(&truth.mixture)?, Some(truth.labels)));
    }
    let bare = serde_json::from_str::<MixtureJson>(&text)
        .map_err(|e| format!("{} holds no recognizable mixture: {e}", path.display()))?;
    Ok((mixture_from_json(&bare)?, None))
}

fn cmd_eval(args: EvalArgs) -> CliResult<()> {
    let start = std::time::Instant::now();
    let (fitted, _) = read_mixture(&args.fit)?;
    let (reference, ref_labels) = read_mixture(&args.truth)?;
    let dist = dist_metric(&fitted, &reference)?;
    let mut loglik_train = None;
    let mut misclustering = None;
    if let Some(data_path) = &args.data {
        let dataset = load_dataset(data_path, 0)?;
        loglik_train = Some(mixture_log_likelihood(&dataset, &fitted));
        if let Some(z) = &ref_labels {
            if z.len() == dataset.len() && fitted.k() == reference.k() {
                let labels = e_step(&dataset, &fitted)?.hard_labels();
                misclustering = Some(misclustering_rate(&labels, z, fitted.k())?);
            }
        }
    }
    let report = EvalReport {
        dist,
        misclustering,
        loglik_train,
        loglik_val: None,
        runtime_s: start.elapsed().as_secs_f64(),
    };
    emit(args.output.as_deref(), &to_json_string(&report)?)
}

fn parse_candidates(text: &str) -> CliResult<Vec<usize>> {
    let text = text.trim();
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo
            .trim()
            .parse()
            .map_err(|_| format!("bad range start {lo:?}"))?;
        let hi: usize = hi
            .trim()
            .parse()
            .map_err(|_| format!("bad range end {hi:?}"))?;
        if lo == 0 || hi < lo {
            return Err(format!("empty or invalid range {text:?}").into());
        }
        return Ok((lo..=hi).collect());
    }
    let cands: Vec<usize> = text
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("bad candidate list {text:?}"))?;
    if cands.is_empty() || cands.contains(&0) {
        return Err("candidates must be positive".into());
    }
    Ok(cands)
}

#[derive(Serialize, Deserialize)]
struct SelectKRow {
    k: usize,
    bic: f64,
    loglik_final: f64,
    n_iter: usize,
    converged: bool,
}

#[derive(Serialize, Deserialize)]
struct SelectKOutput {
    best_k: usize,
    rows: Vec<SelectKRow>,
    mixture: MixtureJson,
    seed: u64,
    val_split: f64,
}

fn cmd_select_k(args: SelectKArgs) -> CliResult<()> {
    let dataset = load_dataset(&args.input, args.seed)?;
    if !(args.val_split > 0.0 && args.val_split < 1.0) {
        return Err("val-split must lie in (0, 1)".into());
    }
    let candidates = parse_candidates(&args.k_candidates)?;
    let m = dataset.len();
    let n_val = ((m as f64) * args.val_split).ceil() as usize;
    if n_val == 0 || n_val >= m {
        return Err(format!(
            "val-split {} leaves no usable split of {m} rankings",
            args.val_split
        )
        .into());
    }
    let mut order: Vec<usize> = (0..m).collect();
    {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x5e1e_c7ed);
        order.shuffle(&mut rng);
    }
    let train = dataset.subset(&order[..m - n_val])?;
    let val = dataset.subset(&order[m - n_val..])?;

    let init = match args.init {
        InitArg::Spectral => InitKind::Spectral,
        InitArg::Random => InitKind::Random,
    };
    let config = EmConfig {
        init,
        link: args.link.into(),
        em_tol: args.em_tol,
        max_em_iter: args.max_em_iter,
        seed: args.seed,
        threshold: parse_threshold(&args.threshold)?,
        ..EmConfig::default()
    };
    let (best_k, reports) = select_k(&train, &val, &candidates, &config)?;
    let mut rows = Vec::with_capacity(reports.len());
    let mut best_mix = None;
    for (k, report, score) in &reports {
        rows.push(SelectKRow {
            k: *k,
            bic: *score,
            loglik_final: *report.loglik_trace.last().expect("nonempty trace"),
            n_iter: report.n_iter,
            converged: report.converged,
        });
        if *k == best_k && best_mix.is_none() {
            best_mix = Some(mixture_to_json(&report.mix));
        }
    }
    let out = SelectKOutput {
        best_k,
        rows,
        mixture: best_mix.expect("winner among reports"),
        seed: args.seed,
        val_split: args.val_split,
    };
    emit(args.output.as_deref(), &to_json_string(&out)?)
}

fn cmd_synth_sweep(args: SynthSweepArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    let rows = run_synthetic(&config)?;
    emit(args.output.as_deref(), &rows_to_csv(&rows))
}
