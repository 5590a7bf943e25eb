//! Lexical-relation experiments: relation-wise cosine statistics,
//! divide-based classification under full and split protocols, the
//! hypernym-length test, cosine histograms, and the baseline feature maps.
//!
//! Pair datasets are TSV files with the exact header
//! `word1\tword2\trelation\tscore\thyper_direction`; relations come from a
//! closed five-label set, scores lie in [0, 10], and the direction column
//! marks which word of a hypernym/hyponym pair is the hypernym (`-` when
//! unknown).

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::MatrixEnsemble;
use crate::geometry::{
    flatten_matrix_features, vector_invariant_features, DeviationMode, FeatureTable,
    InvariantSet, Metric, MetricKind, VectorEnsemble,
};
use crate::numeric::{mean, pairwise_sum, population_variance};
use crate::{Error, Result};

/// Lexical relation labels, in report display order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "ANTONYMS")]
    Antonyms,
    #[serde(rename = "NONE")]
    NoRelation,
    #[serde(rename = "SYNONYMS")]
    Synonyms,
    #[serde(rename = "HYPER_HYPONYMS")]
    HyperHyponyms,
    #[serde(rename = "COHYPONYMS")]
    Cohyponyms,
}

impl Relation {
    /// The dataset token for this relation.
    pub fn as_str(&self) -> &'static str {
        match self {
            Relation::Antonyms => "ANTONYMS",
            Relation::NoRelation => "NONE",
            Relation::Synonyms => "SYNONYMS",
            Relation::HyperHyponyms => "HYPER_HYPONYMS",
            Relation::Cohyponyms => "COHYPONYMS",
        }
    }

    fn parse(token: &str) -> Result<Self> {
        match token {
            "ANTONYMS" => Ok(Relation::Antonyms),
            "NONE" => Ok(Relation::NoRelation),
            "SYNONYMS" => Ok(Relation::Synonyms),
            "HYPER_HYPONYMS" => Ok(Relation::HyperHyponyms),
            "COHYPONYMS" => Ok(Relation::Cohyponyms),
            other => Err(Error::Ingest(format!("unknown relation {other:?}"))),
        }
    }
}

/// Which word of a hypernym/hyponym pair is the hypernym.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperDirection {
    /// `word1` is the hypernym.
    Word1,
    /// `word2` is the hypernym.
    Word2,
    /// Not annotated.
    Unknown,
}

impl HyperDirection {
    fn parse(token: &str) -> Result<Self> {
        match token {
            "1" => Ok(HyperDirection::Word1),
            "2" => Ok(HyperDirection::Word2),
            "-" => Ok(HyperDirection::Unknown),
            other => Err(Error::Ingest(format!(
                "hyper_direction must be 1, 2 or -; got {other:?}"
            ))),
        }
    }
}

/// One labeled word pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordPair {
    pub word1: String,
    pub word2: String,
    pub relation: Relation,
    /// Annotator confidence, 0-10.
    pub score: f64,
    pub direction: HyperDirection,
}

/// A labeled pair dataset.
#[derive(Debug, Clone)]
pub struct PairDataset {
    pub pairs: Vec<WordPair>,
}

const PAIR_HEADER: &str = "word1\tword2\trelation\tscore\thyper_direction";

impl PairDataset {
    /// Parses the TSV format (see module docs). The header line is
    /// mandatory and checked verbatim.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let Some((_, header)) = lines.next() else {
            return Err(Error::Ingest("pair file is empty".into()));
        };
        if header.trim_end_matches('\r') != PAIR_HEADER {
            return Err(Error::Ingest(format!(
                "pair file header must be {PAIR_HEADER:?}; got {header:?}"
            )));
        }
        let mut pairs = Vec::new();
        for (lineno, line) in lines {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 5 {
                return Err(Error::Ingest(format!(
                    "line {}: {} fields, expected 5",
                    lineno + 1,
                    fields.len()
                )));
            }
            let relation = Relation::parse(fields[2])
                .map_err(|e| Error::Ingest(format!("line {}: {e}", lineno + 1)))?;
            let score: f64 = fields[3].parse().map_err(|_| {
                Error::Ingest(format!("line {}: non-numeric score {:?}", lineno + 1, fields[3]))
            })?;
            if !(0.0..=10.0).contains(&score) {
                return Err(Error::Ingest(format!(
                    "line {}: score {score} outside [0, 10]",
                    lineno + 1
                )));
            }
            let direction = HyperDirection::parse(fields[4])
                .map_err(|e| Error::Ingest(format!("line {}: {e}", lineno + 1)))?;
            pairs.push(WordPair {
                word1: fields[0].to_string(),
                word2: fields[1].to_string(),
                relation,
                score,
                direction,
            });
        }
        if pairs.is_empty() {
            return Err(Error::Degenerate("pair file has no data rows".into()));
        }
        Ok(PairDataset { pairs })
    }

    /// Loads and parses a TSV pair file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Ingest(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Ingest(msg) => Error::Ingest(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Pairs whose relation is in `relations`, with their dataset indices.
    pub fn filter(&self, relations: &[Relation]) -> Vec<(usize, &WordPair)> {
        self.pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| relations.contains(&p.relation))
            .collect()
    }
}

/// Cosines for the pairs of a dataset slice, with skip bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct PairCosines {
    /// `(index into the pair slice, cosine)`, in slice order; skipped pairs
    /// are absent.
    pub entries: Vec<(usize, f64)>,
    /// Pairs skipped because a word has no feature row.
    pub skipped_missing_word: usize,
    /// Pairs skipped because the cosine is undefined (zero metric norm).
    pub skipped_undefined: usize,
}

impl PairCosines {
    /// Total skipped pairs.
    pub fn skipped(&self) -> usize {
        self.skipped_missing_word + self.skipped_undefined
    }

    /// Cosines of one relation, in slice order.
    pub fn of_relation(&self, pairs: &[WordPair], relation: Relation) -> Vec<f64> {
        self.entries
            .iter()
            .filter(|&&(i, _)| pairs[i].relation == relation)
            .map(|&(_, c)| c)
            .collect()
    }
}

/// Computes the metric cosine for every pair; pairs with a missing word or
/// an undefined cosine are skipped and counted, never errors.
pub fn pair_cosines(table: &FeatureTable, metric: &Metric, pairs: &[WordPair]) -> PairCosines {
    let mut entries = Vec::with_capacity(pairs.len());
    let mut missing = 0;
    let mut undefined = 0;
    for (i, pair) in pairs.iter().enumerate() {
        let (Some(u), Some(v)) = (table.row(&pair.word1), table.row(&pair.word2)) else {
            missing += 1;
            continue;
        };
        match metric.cosine(u, v) {
            Some(c) => entries.push((i, c)),
            None => undefined += 1,
        }
    }
    PairCosines {
        entries,
        skipped_missing_word: missing,
        skipped_undefined: undefined,
    }
}

/// Mean ± standard error of the cosines of one relation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationStat {
    pub relation: Relation,
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    /// std / sqrt(count).
    pub stderr: f64,
}

/// Per-relation cosine statistics, in display order; empty relations are
/// omitted (the caller knows the full label set).
pub fn relation_means(pairs: &[WordPair], cosines: &PairCosines) -> Vec<RelationStat> {
    let mut groups: BTreeMap<Relation, Vec<f64>> = BTreeMap::new();
    for &(i, c) in &cosines.entries {
        groups.entry(pairs[i].relation).or_default().push(c);
    }
    groups
        .into_iter()
        .map(|(relation, values)| {
            let m = mean(&values);
            let std = population_variance(&values).sqrt();
            RelationStat {
                relation,
                count: values.len(),
                mean: m,
                std,
                stderr: std / (values.len() as f64).sqrt(),
            }
        })
        .collect()
}

/// Outcome of the qualitative mean-ordering checks.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OrderingCheck {
    /// `mean(ANTONYMS) < mean(NONE) < mean(SYNONYMS)`; `None` when any of
    /// the three relations is absent.
    pub ant_none_syn: Option<bool>,
    /// `mean(HYPER_HYPONYMS) < mean(COHYPONYMS)`; `None` when either is
    /// absent.
    pub hyper_cohypo: Option<bool>,
}

/// Checks the qualitative orderings on a relation-mean table.
pub fn ordering_check(stats: &[RelationStat]) -> OrderingCheck {
    let get = |r: Relation| stats.iter().find(|s| s.relation == r).map(|s| s.mean);
    let ant_none_syn = match (
        get(Relation::Antonyms),
        get(Relation::NoRelation),
        get(Relation::Synonyms),
    ) {
        (Some(a), Some(n), Some(s)) => Some(a < n && n < s),
        _ => None,
    };
    let hyper_cohypo = match (get(Relation::HyperHyponyms), get(Relation::Cohyponyms)) {
        (Some(h), Some(c)) => Some(h < c),
        _ => None,
    };
    OrderingCheck { ant_none_syn, hyper_cohypo }
}

/// Class divide between a low-cosine and a high-cosine class:
/// `D_lo + (4/pi) * atan(delta_lo / delta_hi) * (D_hi - D_lo) / 2`.
///
/// Equal spreads put the divide at the midpoint; a tight low class pulls it
/// toward `D_lo`. The `delta_hi = 0` limit is `D_hi` (atan -> pi/2) and is
/// returned directly, which also covers the 0/0 case.
pub fn divide(d_lo: f64, delta_lo: f64, d_hi: f64, delta_hi: f64) -> f64 {
    if delta_hi == 0.0 {
        return d_hi;
    }
    d_lo + (4.0 / std::f64::consts::PI) * (delta_lo / delta_hi).atan() * (d_hi - d_lo) / 2.0
}

/// Confusion counts over labeled cosines; `counts[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: Vec<Vec<usize>>,
}

impl Confusion {
    fn zero(n_classes: usize) -> Self {
        Confusion { counts: vec![vec![0; n_classes]; n_classes] }
    }

    /// Number of classes.
    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    /// Adds another confusion matrix elementwise.
    pub fn add(&mut self, other: &Confusion) {
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, oc) in row.iter_mut().zip(orow) {
                *c += oc;
            }
        }
    }

    /// Per-class true rates; `None` for classes with no samples.
    pub fn true_rates(&self) -> Vec<Option<f64>> {
        self.counts
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let total: usize = row.iter().sum();
                (total > 0).then(|| row[k] as f64 / total as f64)
            })
            .collect()
    }

    /// Balanced accuracy: mean of the defined per-class true rates; `None`
    /// when every class is empty.
    pub fn balanced_accuracy(&self) -> Option<f64> {
        let defined: Vec<f64> = self.true_rates().into_iter().flatten().collect();
        if defined.is_empty() {
            None
        } else {
            Some(mean(&defined))
        }
    }
}

/// Multi-class threshold rule: with ascending divides `t_1 <= ... <= t_k`,
/// a cosine lands in class `#{i : cosine >= t_i}` — ties go to the
/// higher-cosine class.
fn classify_thresholds(labeled: &[(f64, usize)], divides: &[f64]) -> Result<Confusion> {
    if divides.is_empty() {
        return Err(Error::InvalidInput("need at least one divide".into()));
    }
    if divides.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidInput("divides must be finite".into()));
    }
    if divides.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput(format!(
            "divides must be ascending; got {divides:?}"
        )));
    }
    let n_classes = divides.len() + 1;
    let mut confusion = Confusion::zero(n_classes);
    for &(cosine, actual) in labeled {
        if actual >= n_classes {
            return Err(Error::InvalidInput(format!(
                "class index {actual} out of range for {n_classes} classes"
            )));
        }
        let predicted = divides.iter().filter(|&&t| cosine >= t).count();
        confusion.counts[actual][predicted] += 1;
    }
    Ok(confusion)
}

/// Two-class rule: cosine < divide -> class 0 (low), >= divide -> class 1
/// (high; ties go right).
pub fn classify_binary(labeled: &[(f64, usize)], divide_at: f64) -> Result<Confusion> {
    classify_thresholds(labeled, &[divide_at])
}

/// Three-class rule: `< d_lo_mid` -> 0, `[d_lo_mid, d_mid_hi)` -> 1,
/// `>= d_mid_hi` -> 2. Crossed divides are rejected.
pub fn classify_three_way(labeled: &[(f64, usize)], d_lo_mid: f64, d_mid_hi: f64) -> Result<Confusion> {
    if d_lo_mid > d_mid_hi {
        return Err(Error::InvalidInput(format!(
            "divides crossed: {d_lo_mid} > {d_mid_hi}"
        )));
    }
    classify_thresholds(labeled, &[d_lo_mid, d_mid_hi])
}

/// What to classify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifyMode {
    /// Antonyms (low) vs synonyms (high).
    SynAnt,
    /// Antonyms / none / synonyms, three-way.
    SynAntNone,
    /// Synonyms (high) vs pooled antonyms + none (low).
    SynVsRest,
    /// Hypernym-hyponym pairs (low) vs cohyponym pairs (high).
    HyperCohypo,
}

impl ClassifyMode {
    /// Stable name used in configs and reports.
    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifyMode::SynAnt => "syn-ant",
            ClassifyMode::SynAntNone => "syn-ant-none",
            ClassifyMode::SynVsRest => "syn-vs-rest",
            ClassifyMode::HyperCohypo => "hyper-cohypo",
        }
    }

    /// Relations consumed by this mode.
    pub fn relations(&self) -> &'static [Relation] {
        match self {
            ClassifyMode::SynAnt => &[Relation::Antonyms, Relation::Synonyms],
            ClassifyMode::SynAntNone => {
                &[Relation::Antonyms, Relation::NoRelation, Relation::Synonyms]
            }
            ClassifyMode::SynVsRest => {
                &[Relation::Antonyms, Relation::NoRelation, Relation::Synonyms]
            }
            ClassifyMode::HyperCohypo => &[Relation::HyperHyponyms, Relation::Cohyponyms],
        }
    }

    /// Class index of a relation under this mode (0 = lowest cosine class).
    fn class_of(&self, relation: Relation) -> Option<usize> {
        match self {
            ClassifyMode::SynAnt => match relation {
                Relation::Antonyms => Some(0),
                Relation::Synonyms => Some(1),
                _ => None,
            },
            ClassifyMode::SynAntNone => match relation {
                Relation::Antonyms => Some(0),
                Relation::NoRelation => Some(1),
                Relation::Synonyms => Some(2),
                _ => None,
            },
            ClassifyMode::SynVsRest => match relation {
                Relation::Antonyms | Relation::NoRelation => Some(0),
                Relation::Synonyms => Some(1),
                _ => None,
            },
            ClassifyMode::HyperCohypo => match relation {
                Relation::HyperHyponyms => Some(0),
                Relation::Cohyponyms => Some(1),
                _ => None,
            },
        }
    }

    /// Report labels, class index order.
    pub fn class_labels(&self) -> Vec<String> {
        match self {
            ClassifyMode::SynAnt => vec!["ANTONYMS".into(), "SYNONYMS".into()],
            ClassifyMode::SynAntNone => {
                vec!["ANTONYMS".into(), "NONE".into(), "SYNONYMS".into()]
            }
            ClassifyMode::SynVsRest => vec!["ANTONYMS+NONE".into(), "SYNONYMS".into()],
            ClassifyMode::HyperCohypo => {
                vec!["HYPER_HYPONYMS".into(), "COHYPONYMS".into()]
            }
        }
    }
}

/// Train/test regime for divide fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Protocol {
    /// Fit the divides on all pairs and evaluate on the same pairs.
    Full,
    /// Repeated random train/test splits.
    Split(SplitSpec),
}

/// Split-protocol parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Training fraction per draw; >= 1.0 trains and evaluates on all pairs.
    pub train_frac: f64,
    /// Number of independent splits.
    pub repetitions: usize,
    /// Base RNG seed; repetition `r` uses stream `r` of this seed.
    pub seed: u64,
    /// Draw per class (preserves class proportions) instead of pooled.
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_frac: 0.65,
            repetitions: 20,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitSpec {
    fn validate(&self) -> Result<()> {
        if !self.train_frac.is_finite() || self.train_frac <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "train fraction must be positive; got {}",
                self.train_frac
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidInput("need at least one repetition".into()));
        }
        Ok(())
    }
}

/// Protocol metadata echoed into reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolMeta {
    /// "full" or "split".
    pub protocol: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stratified: Option<bool>,
}

/// Classification outcome under either protocol.
#[derive(Debug, Clone, Serialize)]
pub struct ClassReport {
    /// Class names, index order (low cosine first).
    pub class_labels: Vec<String>,
    /// Confusion counts `[actual][predicted]`; summed over repetitions'
    /// test sets under the split protocol.
    pub confusion: Vec<Vec<usize>>,
    /// Per-class true rates of the (aggregated) confusion; `None` marks an
    /// empty class.
    pub true_rates: Vec<Option<f64>>,
    /// Full protocol: balanced accuracy of the confusion. Split protocol:
    /// mean balanced accuracy over repetitions.
    pub balanced_accuracy: Option<f64>,
    /// Split protocol only: population std of the per-repetition balanced
    /// accuracies divided by sqrt(repetitions).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ba_stderr: Option<f64>,
    /// Full protocol only: the fitted divides, ascending.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divides: Option<Vec<f64>>,
    /// Pairs of the relevant relations skipped (missing word or undefined
    /// cosine).
    pub skipped_pairs: usize,
    /// Labeled cosines that entered the task.
    pub n_pairs: usize,
    pub protocol_meta: ProtocolMeta,
}

/// Per-class mean and population std of training cosines, then the divides
/// between consecutive classes.
fn fit_divides(labeled: &[(f64, usize)], n_classes: usize) -> Result<Vec<f64>> {
    let mut by_class: Vec<Vec<f64>> = vec![Vec::new(); n_classes];
    for &(c, k) in labeled {
        by_class[k].push(c);
    }
    let mut stats = Vec::with_capacity(n_classes);
    for (k, values) in by_class.iter().enumerate() {
        if values.is_empty() {
            return Err(Error::Degenerate(format!(
                "class {k} has no training pairs; cannot fit a divide"
            )));
        }
        stats.push((mean(values), population_variance(values).sqrt()));
    }
    let mut divides = Vec::with_capacity(n_classes - 1);
    for w in stats.windows(2) {
        let (d_lo, delta_lo) = w[0];
        let (d_hi, delta_hi) = w[1];
        divides.push(divide(d_lo, delta_lo, d_hi, delta_hi));
    }
    if divides.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Degenerate(format!(
            "fitted divides are crossed ({divides:?}); class means are not \
             ordered low to high"
        )));
    }
    Ok(divides)
}

/// Draws sorted train/test index lists over `labeled`, grouped by class.
fn draw_split(
    by_class: &[Vec<usize>],
    spec: &SplitSpec,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Vec<usize>)> {
    const MAX_RETRIES: usize = 100;
    let n_classes = by_class.len();
    if spec.stratified {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for members in by_class {
            let n = members.len();
            let k = ((spec.train_frac * n as f64).round() as usize).clamp(1, n - 1);
            let mut pool = members.clone();
            let (chosen, rest) = pool.partial_shuffle(rng, k);
            train.extend_from_slice(chosen);
            test.extend_from_slice(rest);
        }
        train.sort_unstable();
        test.sort_unstable();
        return Ok((train, test));
    }
    let all: Vec<usize> = by_class.iter().flatten().copied().collect();
    let n = all.len();
    let k = ((spec.train_frac * n as f64).round() as usize).clamp(1, n - 1);
    let class_of: BTreeMap<usize, usize> = by_class
        .iter()
        .enumerate()
        .flat_map(|(c, members)| members.iter().map(move |&i| (i, c)))
        .collect();
    for _ in 0..MAX_RETRIES {
        let mut pool = all.clone();
        let (chosen, rest) = pool.partial_shuffle(rng, k);
        let mut train = chosen.to_vec();
        let mut test = rest.to_vec();
        let covered = |side: &[usize]| {
            let mut seen = vec![false; n_classes];
            for &i in side {
                seen[class_of[&i]] = true;
            }
            seen.iter().all(|&s| s)
        };
        if covered(&train) && covered(&test) {
            train.sort_unstable();
            test.sort_unstable();
            return Ok((train, test));
        }
    }
    Err(Error::Degenerate(format!(
        "no unstratified split kept every class nonempty after {MAX_RETRIES} draws"
    )))
}

/// Runs one classification task end to end: computes cosines for the
/// mode's relations, fits divides, and evaluates under the protocol.
pub fn classification_task(
    table: &FeatureTable,
    metric: &Metric,
    dataset: &PairDataset,
    mode: ClassifyMode,
    protocol: &Protocol,
) -> Result<ClassReport> {
    let scoped: Vec<WordPair> = dataset
        .filter(mode.relations())
        .into_iter()
        .map(|(_, p)| p.clone())
        .collect();
    let cosines = pair_cosines(table, metric, &scoped);
    let labeled: Vec<(f64, usize)> = cosines
        .entries
        .iter()
        .map(|&(i, c)| {
            let class = mode
                .class_of(scoped[i].relation)
                .expect("filter() already scoped relations");
            (c, class)
        })
        .collect();
    let n_classes = mode.class_labels().len();
    match protocol {
        Protocol::Full => {
            let divides = fit_divides(&labeled, n_classes)?;
            let confusion = classify_thresholds(&labeled, &divides)?;
            Ok(ClassReport {
                class_labels: mode.class_labels(),
                true_rates: confusion.true_rates(),
                balanced_accuracy: confusion.balanced_accuracy(),
                ba_stderr: None,
                divides: Some(divides),
                confusion: confusion.counts,
                skipped_pairs: cosines.skipped(),
                n_pairs: labeled.len(),
                protocol_meta: ProtocolMeta {
                    protocol: "full".into(),
                    train_frac: None,
                    repetitions: None,
                    seed: None,
                    stratified: None,
                },
            })
        }
        Protocol::Split(spec) => {
            split_evaluate(&labeled, n_classes, mode, spec, cosines.skipped())
        }
    }
}

/// The split protocol on pre-labeled cosines.
fn split_evaluate(
    labeled: &[(f64, usize)],
    n_classes: usize,
    mode: ClassifyMode,
    spec: &SplitSpec,
    skipped: usize,
) -> Result<ClassReport> {
    spec.validate()?;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &(_, k)) in labeled.iter().enumerate() {
        by_class[k].push(i);
    }
    let splitting = spec.train_frac < 1.0;
    for (k, members) in by_class.iter().enumerate() {
        let minimum = if splitting { 2 } else { 1 };
        if members.len() < minimum {
            return Err(Error::Degenerate(format!(
                "class {:?} has {} usable pairs; need at least {minimum}",
                mode.class_labels()[k],
                members.len()
            )));
        }
    }
    let mut aggregated = Confusion::zero(n_classes);
    let mut bas = Vec::with_capacity(spec.repetitions);
    for rep in 0..spec.repetitions {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(rep as u64);
        let (train_idx, test_idx) = if splitting {
            draw_split(&by_class, spec, &mut rng)?
        } else {
            // train_frac >= 1: train and evaluate on everything, which
            // reduces to the full protocol.
            let all: Vec<usize> = (0..labeled.len()).collect();
            (all.clone(), all)
        };
        let train: Vec<(f64, usize)> = train_idx.iter().map(|&i| labeled[i]).collect();
        let test: Vec<(f64, usize)> = test_idx.iter().map(|&i| labeled[i]).collect();
        let divides = fit_divides(&train, n_classes)?;
        let confusion = classify_thresholds(&test, &divides)?;
        bas.push(
            confusion
                .balanced_accuracy()
                .expect("every class is nonempty in the test split"),
        );
        aggregated.add(&confusion);
    }
    let ba_mean = mean(&bas);
    let ba_stderr = population_variance(&bas).sqrt() / (bas.len() as f64).sqrt();
    Ok(ClassReport {
        class_labels: mode.class_labels(),
        true_rates: aggregated.true_rates(),
        balanced_accuracy: Some(ba_mean),
        ba_stderr: Some(ba_stderr),
        divides: None,
        confusion: aggregated.counts,
        skipped_pairs: skipped,
        n_pairs: labeled.len(),
        protocol_meta: ProtocolMeta {
            protocol: "split".into(),
            train_frac: Some(spec.train_frac),
            repetitions: Some(spec.repetitions),
            seed: Some(spec.seed),
            stratified: Some(spec.stratified),
        },
    })
}

/// Hypernym-length test outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperLengthReport {
    /// Directed pairs evaluated.
    pub total: usize,
    /// Pairs where the hypernym's feature norm strictly exceeds the
    /// hyponym's.
    pub wins: usize,
    /// Exact norm ties; counted in `total` but never in `wins`.
    pub ties: usize,
    /// wins / total.
    pub ratio: f64,
    /// Directed pairs skipped for a missing word.
    pub skipped_missing_word: usize,
    /// Pairs of the hyper/hyponym relation without a direction annotation.
    pub skipped_unknown_direction: usize,
}

/// Fraction of direction-annotated hypernym/hyponym pairs whose hypernym
/// has the strictly larger metric feature norm. Ties count as failures.
pub fn hyper_length_ratio(
    table: &FeatureTable,
    metric: &Metric,
    pairs: &[WordPair],
) -> Result<HyperLengthReport> {
    let mut total = 0;
    let mut wins = 0;
    let mut ties = 0;
    let mut missing = 0;
    let mut unknown = 0;
    for pair in pairs.iter().filter(|p| p.relation == Relation::HyperHyponyms) {
        let (hyper, hypo) = match pair.direction {
            HyperDirection::Word1 => (&pair.word1, &pair.word2),
            HyperDirection::Word2 => (&pair.word2, &pair.word1),
            HyperDirection::Unknown => {
                unknown += 1;
                continue;
            }
        };
        let (Some(u), Some(v)) = (table.row(hyper), table.row(hypo)) else {
            missing += 1;
            continue;
        };
        let (nu, nv) = (metric.norm(u), metric.norm(v));
        total += 1;
        if nu > nv {
            wins += 1;
        } else if nu == nv {
            ties += 1;
        }
    }
    if total == 0 {
        return Err(Error::Degenerate(
            "no direction-annotated hypernym/hyponym pairs with features".into(),
        ));
    }
    Ok(HyperLengthReport {
        total,
        wins,
        ties,
        ratio: wins as f64 / total as f64,
        skipped_missing_word: missing,
        skipped_unknown_direction: unknown,
    })
}

/// One baseline's relation-mean table.
#[derive(Debug, Clone, Serialize)]
pub struct BaselineTable {
    /// Baseline name, e.g. `matrix-flat-raw`.
    pub name: String,
    pub stats: Vec<RelationStat>,
    pub skipped_missing_word: usize,
    pub skipped_undefined: usize,
    pub ordering: OrderingCheck,
}

/// Relation-mean tables for the baseline feature maps: flat cosines on raw
/// and mean-centered matrix entries, and — when vectors are supplied —
/// diagonal-metric cosines on centered vector invariants (three sets) plus
/// flat cosines on the raw and centered vectors themselves.
pub fn run_baselines(
    ens: &MatrixEnsemble,
    vectors: Option<&VectorEnsemble>,
    dataset: &PairDataset,
) -> Result<Vec<BaselineTable>> {
    let mut tables = Vec::new();
    let mut push = |name: String, table: &FeatureTable, metric: &Metric| {
        let cosines = pair_cosines(table, metric, &dataset.pairs);
        let stats = relation_means(&dataset.pairs, &cosines);
        let ordering = ordering_check(&stats);
        tables.push(BaselineTable {
            name,
            stats,
            skipped_missing_word: cosines.skipped_missing_word,
            skipped_undefined: cosines.skipped_undefined,
            ordering,
        });
    };
    let raw = flatten_matrix_features(ens, DeviationMode::RawValue)?;
    push(
        "matrix-flat-raw".into(),
        &raw,
        &Metric::new(MetricKind::Flat, &raw)?,
    );
    let dev = flatten_matrix_features(ens, DeviationMode::DeviationExpt)?;
    push(
        "matrix-flat-deviation".into(),
        &dev,
        &Metric::new(MetricKind::Flat, &dev)?,
    );
    if let Some(ve) = vectors {
        for which in [InvariantSet::Set1, InvariantSet::Set2, InvariantSet::Set3] {
            let table = vector_invariant_features(
                &ve.words,
                &ve.vectors,
                which,
                DeviationMode::DeviationExpt,
            )?;
            push(
                format!("vector-invariants-{}", which.as_str()),
                &table,
                &Metric::new(MetricKind::Diagonal, &table)?,
            );
        }
        let labels: Vec<String> = (0..ve.dim).map(|k| format!("v[{k}]")).collect();
        let plain = FeatureTable::assemble(
            "vector-entries".into(),
            labels.clone(),
            ve.words.clone(),
            ve.vectors.clone(),
            DeviationMode::RawValue,
        );
        push(
            "vector-plain-raw".into(),
            &plain,
            &Metric::new(MetricKind::Flat, &plain)?,
        );
        let n = ve.words.len() as f64;
        let means: Vec<f64> = (0..ve.dim)
            .map(|k| {
                let col: Vec<f64> = ve.vectors.iter().map(|v| v[k]).collect();
                pairwise_sum(&col) / n
            })
            .collect();
        let centered: Vec<Vec<f64>> = ve
            .vectors
            .iter()
            .map(|v| v.iter().zip(&means).map(|(x, m)| x - m).collect())
            .collect();
        let devt = FeatureTable::assemble(
            "vector-entries".into(),
            labels,
            ve.words.clone(),
            centered,
            DeviationMode::DeviationExpt,
        );
        push(
            "vector-plain-deviation".into(),
            &devt,
            &Metric::new(MetricKind::Flat, &devt)?,
        );
    }
    Ok(tables)
}

/// One relation's normalized cosine histogram.
#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub relation: Relation,
    /// Cosines in the relation (for the normalization denominator).
    pub count: usize,
    /// `(bin_left, bin_right, density)`; density = count / (N * width), so
    /// the histogram integrates to 1 over [-1, 1].
    pub bins: Vec<(f64, f64, f64)>,
}

/// Uniform-bin cosine histograms over [-1, 1] per non-empty relation.
/// Cosine 1.0 lands in the last bin.
pub fn cosine_histograms(
    pairs: &[WordPair],
    cosines: &PairCosines,
    n_bins: usize,
) -> Result<Vec<Histogram>> {
    if n_bins == 0 {
        return Err(Error::InvalidInput("need at least one histogram bin".into()));
    }
    let width = 2.0 / n_bins as f64;
    let mut groups: BTreeMap<Relation, Vec<f64>> = BTreeMap::new();
    for &(i, c) in &cosines.entries {
        groups.entry(pairs[i].relation).or_default().push(c);
    }
    Ok(groups
        .into_iter()
        .map(|(relation, values)| {
            let mut counts = vec![0usize; n_bins];
            for &c in &values {
                let bin = (((c + 1.0) / width) as usize).min(n_bins - 1);
                counts[bin] += 1;
            }
            let n = values.len() as f64;
            let bins = counts
                .iter()
                .enumerate()
                .map(|(b, &k)| {
                    let left = -1.0 + b as f64 * width;
                    (left, left + width, k as f64 / (n * width))
                })
                .collect();
            Histogram { relation, count: values.len(), bins }
        })
        .collect())
}
