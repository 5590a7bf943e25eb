//! Command-line driver: loads matrix/vector ensembles, runs the model fits,
//! geometry, and word-pair tasks, and emits deterministic JSON (canonical)
//! or CSV (projection) reports.
//!
//! Exit codes: 0 success, 2 flag/argument error, 3 ingestion error,
//! 4 numerical failure, 5 degenerate-data error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pimo::ensemble::{
    compute_stats, load_ensemble, mix, save_ensemble, MatrixEnsemble, MixSpec,
};
use pimo::gauss::{gaussianity_report, sample_ensemble, PatternMoments};
use pimo::geometry::{
    build_features, load_vector_ensemble, DeviationMode, FeatureTable, Metric, MetricKind,
};
use pimo::graph::{canonical_set, ObservableSet};
use pimo::report::{
    baselines_csv, class_csv, envelope, features_csv, gauss_csv, hyper_csv, relation_csv,
    stats_csv, to_json_string,
};
use pimo::tasks::{
    classification_task, cosine_histograms, hyper_length_ratio, ordering_check, pair_cosines,
    relation_means, run_baselines, ClassifyMode, PairDataset, Protocol, SplitSpec,
};
use pimo::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pimo",
    version,
    about = "Permutation-invariant matrix observables: Gaussian reference models, \
             invariant feature geometry, and word-relation tasks",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the Gaussian entry model and compare observable means against it.
    Gaussianity {
        #[command(flatten)]
        input: EnsembleArgs,
        /// Observable set: 13, 10, 15, 23, 28, or a JSON file path.
        #[arg(long, default_value = "15")]
        set: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Emit per-word observable features (and their ensemble statistics).
    Features {
        #[command(flatten)]
        input: EnsembleArgs,
        /// Observable set: 13, 10, 15, 23, 28, or a JSON file path.
        #[arg(long, default_value = "28")]
        set: String,
        /// Centering: raw, expt (subtract ensemble means), theor (subtract
        /// fitted-model means).
        #[arg(long, value_enum, default_value_t = DeviationArg::Raw)]
        deviation: DeviationArg,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Per-relation cosine statistics, ordering checks, and histograms.
    RelationMeans {
        #[command(flatten)]
        input: EnsembleArgs,
        /// Observable set: 13, 10, 15, 23, 28, or a JSON file path.
        #[arg(long, default_value = "28")]
        set: String,
        #[arg(long, value_enum, default_value_t = DeviationArg::Expt)]
        deviation: DeviationArg,
        #[arg(long, value_enum, default_value_t = MetricArg::Diag)]
        metric: MetricArg,
        /// Labeled word-pair TSV file.
        #[arg(long)]
        pairs: PathBuf,
        /// Histogram bin count over [-1, 1] (histograms appear in the JSON
        /// report).
        #[arg(long, default_value_t = 40)]
        hist_bins: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Divide-based classification between relation classes.
    Classify {
        #[command(flatten)]
        input: EnsembleArgs,
        /// Observable set: 13, 10, 15, 23, 28, or a JSON file path.
        #[arg(long, default_value = "28")]
        set: String,
        #[arg(long, value_enum, default_value_t = DeviationArg::Expt)]
        deviation: DeviationArg,
        #[arg(long, value_enum, default_value_t = MetricArg::Diag)]
        metric: MetricArg,
        /// Labeled word-pair TSV file.
        #[arg(long)]
        pairs: PathBuf,
        /// Which classes to separate.
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// full = fit and evaluate on all pairs; split = repeated random
        /// train/test splits.
        #[arg(long, value_enum, default_value_t = ProtocolArg::Full)]
        protocol: ProtocolArg,
        /// Training fraction per split.
        #[arg(long, default_value_t = 0.65)]
        frac: f64,
        /// Number of split repetitions.
        #[arg(long, default_value_t = 20)]
        reps: usize,
        /// Base RNG seed (repetition r uses stream r).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Preserve class proportions in each split (true/false).
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set, value_name = "BOOL")]
        stratify: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fraction of directed hypernym/hyponym pairs where the hypernym has
    /// the larger feature norm.
    HyperLength {
        #[command(flatten)]
        input: EnsembleArgs,
        /// Observable set: 13, 10, 15, 23, 28, or a JSON file path.
        #[arg(long, default_value = "28")]
        set: String,
        #[arg(long, value_enum, default_value_t = DeviationArg::Expt)]
        deviation: DeviationArg,
        #[arg(long, value_enum, default_value_t = MetricArg::Diag)]
        metric: MetricArg,
        /// Labeled word-pair TSV file.
        #[arg(long)]
        pairs: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Reference feature maps: flat matrix-entry cosines, and — with
    /// --vectors — plain-vector and vector-invariant cosines.
    Baselines {
        #[command(flatten)]
        input: EnsembleArgs,
        /// Labeled word-pair TSV file.
        #[arg(long)]
        pairs: PathBuf,
        /// Word-vector ensemble directory for the vector baselines.
        #[arg(long)]
        vectors: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Draw matrices from a fitted Gaussian model into a new ensemble
    /// directory.
    Sample {
        #[command(flatten)]
        input: EnsembleArgs,
        /// Pattern-moments JSON file (alternative to an ensemble input).
        #[arg(long)]
        moments: Option<PathBuf>,
        /// Number of matrices to draw.
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// RNG seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory to write the sampled ensemble into.
        #[arg(long)]
        out_dir: PathBuf,
        /// Also save the fitted pattern moments to this JSON file.
        #[arg(long)]
        moments_out: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print the observable table as graphs.
    DumpObservables {
        /// Observable set: 13, 10, 15, 23, 28, or a JSON file path.
        #[arg(long, default_value = "28")]
        set: String,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// Matrix-ensemble input: either one directory, or an observed/substitute
/// pair blended as a*MO + (1-a)*MS.
#[derive(Args)]
struct EnsembleArgs {
    /// Ensemble directory (manifest.json + per-word CSV files).
    #[arg(long, conflicts_with_all = ["mo", "ms", "a"])]
    ensemble: Option<PathBuf>,
    /// Observed-ensemble directory (requires --ms and --a).
    #[arg(long, requires = "ms", requires = "a")]
    mo: Option<PathBuf>,
    /// Substitute-ensemble directory (requires --mo and --a).
    #[arg(long, requires = "mo", requires = "a")]
    ms: Option<PathBuf>,
    /// Blend weight in [0, 1]: a*MO + (1-a)*MS.
    #[arg(long, requires = "mo")]
    a: Option<f64>,
}

impl EnsembleArgs {
    fn is_given(&self) -> bool {
        self.ensemble.is_some() || self.mo.is_some()
    }

    /// Loads (and blends, when requested) the ensemble; returns it with a
    /// config-echo fragment describing the input.
    fn load(&self) -> Result<(MatrixEnsemble, Value)> {
        match (&self.ensemble, &self.mo, &self.ms, &self.a) {
            (Some(dir), None, None, None) => {
                let ens = load_ensemble(dir)?;
                Ok((ens, json!({ "ensemble": dir.display().to_string() })))
            }
            (None, Some(mo_dir), Some(ms_dir), Some(a)) => {
                let spec = MixSpec::new(*a)?;
                let mo_ens = load_ensemble(mo_dir)?;
                let ms_ens = load_ensemble(ms_dir)?;
                let outcome = mix(&mo_ens, &ms_ens, spec)?;
                let echo = json!({
                    "mo": mo_dir.display().to_string(),
                    "ms": ms_dir.display().to_string(),
                    "a": a,
                    "dropped_words": outcome.dropped_words,
                });
                Ok((outcome.ensemble, echo))
            }
            _ => Err(Error::InvalidInput(
                "provide either --ensemble DIR or all of --mo DIR --ms DIR --a A".into(),
            )),
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json = canonical full report; csv = table projection.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

impl OutputArgs {
    fn emit(&self, json_text: String, csv_text: String) -> Result<()> {
        let text = match self.format {
            FormatArg::Json => json_text,
            FormatArg::Csv => csv_text,
        };
        match &self.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| Error::Ingest(format!("cannot write {}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DeviationArg {
    /// Raw observable values.
    Raw,
    /// Subtract ensemble means.
    Expt,
    /// Subtract fitted-model expectations.
    Theor,
}

impl From<DeviationArg> for DeviationMode {
    fn from(arg: DeviationArg) -> Self {
        match arg {
            DeviationArg::Raw => DeviationMode::RawValue,
            DeviationArg::Expt => DeviationMode::DeviationExpt,
            DeviationArg::Theor => DeviationMode::DeviationTheor,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    /// Unweighted dot product.
    Flat,
    /// Inverse column second moments as weights.
    Diag,
    /// Pseudo-inverse of the feature covariance.
    Maha,
}

impl From<MetricArg> for MetricKind {
    fn from(arg: MetricArg) -> Self {
        match arg {
            MetricArg::Flat => MetricKind::Flat,
            MetricArg::Diag => MetricKind::Diagonal,
            MetricArg::Maha => MetricKind::Mahalanobis,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Antonyms vs synonyms.
    SynAnt,
    /// Antonyms / none / synonyms, three-way.
    SynAntNone,
    /// Synonyms vs pooled antonyms + none.
    SynVsRest,
    /// Hypernym-hyponym vs cohyponym pairs.
    HyperCohypo,
}

impl From<ModeArg> for ClassifyMode {
    fn from(arg: ModeArg) -> Self {
        match arg {
            ModeArg::SynAnt => ClassifyMode::SynAnt,
            ModeArg::SynAntNone => ClassifyMode::SynAntNone,
            ModeArg::SynVsRest => ClassifyMode::SynVsRest,
            ModeArg::HyperCohypo => ClassifyMode::HyperCohypo,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Full,
    Split,
}

/// Resolves --set: a canonical name, or a path to a JSON observable list.
fn resolve_set(arg: &str) -> Result<ObservableSet> {
    if matches!(arg, "13" | "10" | "15" | "23" | "28") {
        return canonical_set(arg);
    }
    let path = Path::new(arg);
    if !path.exists() {
        return Err(Error::InvalidInput(format!(
            "--set {arg:?} is neither a canonical set (13, 10, 15, 23, 28) \
             nor an existing JSON file"
        )));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Ingest(format!("cannot read {}: {e}", path.display())))?;
    ObservableSet::from_json(&text)
}

/// Builds the feature table and metric shared by the pair tasks.
fn features_and_metric(
    set: &ObservableSet,
    ens: &MatrixEnsemble,
    deviation: DeviationArg,
    metric: MetricArg,
) -> Result<(FeatureTable, Metric)> {
    let table = build_features(set, ens, deviation.into())?;
    let metric = Metric::new(metric.into(), &table)?;
    Ok((table, metric))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gaussianity { input, set, output } => {
            let (ens, input_echo) = input.load()?;
            let set = resolve_set(&set)?;
            let report = gaussianity_report(&set, &ens)?;
            let config = json!({ "input": input_echo, "set": set.name });
            let env = envelope("gaussianity", config, serde_json::to_value(&report).unwrap());
            output.emit(to_json_string(&env)?, gauss_csv(&report))
        }
        Command::Features { input, set, deviation, output } => {
            let (ens, input_echo) = input.load()?;
            let set = resolve_set(&set)?;
            let table = build_features(&set, &ens, deviation.into())?;
            let stats = compute_stats(&set, &ens)?;
            let config = json!({
                "input": input_echo,
                "set": set.name,
                "deviation": DeviationMode::from(deviation).as_str(),
            });
            let result = json!({
                "features": table,
                "stats": stats,
                "stats_csv": stats_csv(&stats),
            });
            let env = envelope("features", config, result);
            // --format csv keeps the per-word table; the statistics
            // projection rides along inside the JSON report.
            output.emit(to_json_string(&env)?, features_csv(&table))
        }
        Command::RelationMeans {
            input,
            set,
            deviation,
            metric,
            pairs,
            hist_bins,
            output,
        } => {
            let (ens, input_echo) = input.load()?;
            let set = resolve_set(&set)?;
            let dataset = PairDataset::load(&pairs)?;
            let (table, metric_obj) = features_and_metric(&set, &ens, deviation, metric)?;
            let cosines = pair_cosines(&table, &metric_obj, &dataset.pairs);
            let stats = relation_means(&dataset.pairs, &cosines);
            let ordering = ordering_check(&stats);
            let histograms = cosine_histograms(&dataset.pairs, &cosines, hist_bins)?;
            let config = json!({
                "input": input_echo,
                "set": set.name,
                "deviation": DeviationMode::from(deviation).as_str(),
                "metric": MetricKind::from(metric).as_str(),
                "pairs": pairs.display().to_string(),
                "hist_bins": hist_bins,
            });
            let result = json!({
                "feature_family": table.feature_family,
                "n_features": table.n_features(),
                "dropped_metric_columns": metric_obj.dropped,
                "stats": stats,
                "ordering": ordering,
                "skipped_missing_word": cosines.skipped_missing_word,
                "skipped_undefined": cosines.skipped_undefined,
                "histograms": histograms,
            });
            let env = envelope("relation-means", config, result);
            output.emit(to_json_string(&env)?, relation_csv(&stats))
        }
        Command::Classify {
            input,
            set,
            deviation,
            metric,
            pairs,
            mode,
            protocol,
            frac,
            reps,
            seed,
            stratify,
            output,
        } => {
            let (ens, input_echo) = input.load()?;
            let set = resolve_set(&set)?;
            let dataset = PairDataset::load(&pairs)?;
            let (table, metric_obj) = features_and_metric(&set, &ens, deviation, metric)?;
            let protocol_obj = match protocol {
                ProtocolArg::Full => Protocol::Full,
                ProtocolArg::Split => Protocol::Split(SplitSpec {
                    train_frac: frac,
                    repetitions: reps,
                    seed,
                    stratified: stratify,
                }),
            };
            let mode_obj = ClassifyMode::from(mode);
            let report =
                classification_task(&table, &metric_obj, &dataset, mode_obj, &protocol_obj)?;
            let config = json!({
                "input": input_echo,
                "set": set.name,
                "deviation": DeviationMode::from(deviation).as_str(),
                "metric": MetricKind::from(metric).as_str(),
                "pairs": pairs.display().to_string(),
                "mode": mode_obj.as_str(),
                "protocol": match protocol { ProtocolArg::Full => "full", ProtocolArg::Split => "split" },
                "frac": frac,
                "reps": reps,
                "seed": seed,
                "stratify": stratify,
                "dropped_metric_columns": metric_obj.dropped,
            });
            let env = envelope("classify", config, serde_json::to_value(&report).unwrap());
            output.emit(to_json_string(&env)?, class_csv(&report))
        }
        Command::HyperLength { input, set, deviation, metric, pairs, output } => {
            let (ens, input_echo) = input.load()?;
            let set = resolve_set(&set)?;
            let dataset = PairDataset::load(&pairs)?;
            let (table, metric_obj) = features_and_metric(&set, &ens, deviation, metric)?;
            let report = hyper_length_ratio(&table, &metric_obj, &dataset.pairs)?;
            let config = json!({
                "input": input_echo,
                "set": set.name,
                "deviation": DeviationMode::from(deviation).as_str(),
                "metric": MetricKind::from(metric).as_str(),
                "pairs": pairs.display().to_string(),
                "dropped_metric_columns": metric_obj.dropped,
            });
            let env = envelope("hyper-length", config, serde_json::to_value(&report).unwrap());
            output.emit(to_json_string(&env)?, hyper_csv(&report))
        }
        Command::Baselines { input, pairs, vectors, output } => {
            let (ens, input_echo) = input.load()?;
            let dataset = PairDataset::load(&pairs)?;
            let vector_ens = vectors.as_deref().map(load_vector_ensemble).transpose()?;
            let tables = run_baselines(&ens, vector_ens.as_ref(), &dataset)?;
            let config = json!({
                "input": input_echo,
                "pairs": pairs.display().to_string(),
                "vectors": vectors.as_ref().map(|p| p.display().to_string()),
            });
            let env = envelope("baselines", config, serde_json::to_value(&tables).unwrap());
            output.emit(to_json_string(&env)?, baselines_csv(&tables))
        }
        Command::Sample {
            input,
            moments,
            count,
            seed,
            out_dir,
            moments_out,
            output,
        } => {
            if output.format == FormatArg::Csv {
                return Err(Error::InvalidInput(
                    "sample emits a JSON summary only; --format csv is not available".into(),
                ));
            }
            let (pm, input_echo) = match (&moments, input.is_given()) {
                (Some(path), false) => {
                    let text = std::fs::read_to_string(path).map_err(|e| {
                        Error::Ingest(format!("cannot read {}: {e}", path.display()))
                    })?;
                    (
                        PatternMoments::from_json(&text)?,
                        json!({ "moments": path.display().to_string() }),
                    )
                }
                (None, true) => {
                    let (ens, echo) = input.load()?;
                    (PatternMoments::fit(&ens)?, echo)
                }
                _ => {
                    return Err(Error::InvalidInput(
                        "sample needs exactly one input: --moments FILE, or an \
                         ensemble (--ensemble / --mo --ms --a)"
                            .into(),
                    ))
                }
            };
            let sampled = sample_ensemble(&pm, pm.dim(), count, seed)?;
            save_ensemble(&sampled, &out_dir)?;
            if let Some(path) = &moments_out {
                std::fs::write(path, pm.to_json()).map_err(|e| {
                    Error::Ingest(format!("cannot write {}: {e}", path.display()))
                })?;
            }
            let config = json!({
                "input": input_echo,
                "count": count,
                "seed": seed,
                "out_dir": out_dir.display().to_string(),
                "moments_out": moments_out.as_ref().map(|p| p.display().to_string()),
            });
            let result = json!({
                "dim": pm.dim(),
                "words_written": sampled.len(),
                "mu_diag": pm.mu_diag(),
                "mu_off": pm.mu_off(),
            });
            let env = envelope("sample", config, result);
            output.emit(to_json_string(&env)?, String::new())
        }
        Command::DumpObservables { set, output } => {
            let set = resolve_set(&set)?;
            let rows: Vec<Value> = set
                .observables
                .iter()
                .zip(set.display_ids())
                .map(|(obs, id)| {
                    json!({
                        "id": id,
                        "label": obs.label(),
                        "nodes": obs.nodes,
                        "edges": obs.edges,
                        "degree": obs.degree(),
                    })
                })
                .collect();
            let config = json!({ "set": set.name });
            let result = json!({ "name": set.name, "observables": rows });
            let env = envelope("dump-observables", config, result);
            let mut csv = String::from("id,label,nodes,n_edges,degree,edges\n");
            for (obs, id) in set.observables.iter().zip(set.display_ids()) {
                let edges = obs
                    .edges
                    .iter()
                    .map(|(s, t)| format!("{s}->{t}"))
                    .collect::<Vec<_>>()
                    .join(";");
                csv.push_str(&format!(
                    "{id},{},{},{},{},{edges}\n",
                    obs.label(),
                    obs.nodes,
                    obs.edges.len(),
                    obs.degree(),
                ));
            }
            output.emit(to_json_string(&env)?, csv)
        }
    }
}
