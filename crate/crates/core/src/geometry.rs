//! Feature tables and invariant-aware cosine geometry.
//!
//! Words become feature vectors (observable values, optionally centered on
//! the ensemble mean or on the Gaussian-model expectation), and similarity
//! is a cosine under a configurable inner product: flat, diagonally
//! rescaled by the feature second moments, or Mahalanobis
//! (pseudo-inverse of the feature covariance).
//!
//! The same machinery covers two baseline feature maps: raw matrix entries
//! and power-sum invariants of plain vectors.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ensemble::{observable_values, MatrixEnsemble};
use crate::gauss::PatternMoments;
use crate::graph::ObservableSet;
use crate::numeric::pairwise_sum;
use crate::{Error, Result};

/// How word feature vectors are centered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationMode {
    /// Plain observable values.
    RawValue,
    /// Deviation from the ensemble mean of each feature.
    DeviationExpt,
    /// Deviation from the fitted Gaussian-model expectation of each feature.
    DeviationTheor,
}

impl DeviationMode {
    /// Stable lowercase name used in configs and reports.
    pub fn as_str(&self) -> &'static str {
        match self {
            DeviationMode::RawValue => "raw",
            DeviationMode::DeviationExpt => "expt",
            DeviationMode::DeviationTheor => "theor",
        }
    }
}

/// Inner-product choice for cosines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Identity weights.
    Flat,
    /// Inverse feature second moments on the diagonal.
    Diagonal,
    /// Pseudo-inverse of the feature covariance.
    Mahalanobis,
}

impl MetricKind {
    /// Stable lowercase name used in configs and reports.
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKind::Flat => "flat",
            MetricKind::Diagonal => "diag",
            MetricKind::Mahalanobis => "maha",
        }
    }
}

/// Per-word feature vectors plus naming metadata.
#[derive(Debug, Clone, Serialize)]
pub struct FeatureTable {
    /// Name of the feature family (observable-set name, "matrix-entries",
    /// "vector-invariants:set1", ...).
    pub feature_family: String,
    /// Feature labels, in column order.
    pub labels: Vec<String>,
    /// Words, in row order.
    pub words: Vec<String>,
    /// N_words × n_features values.
    pub rows: Vec<Vec<f64>>,
    /// Centering applied to the rows.
    pub mode: DeviationMode,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl FeatureTable {
    /// Builds a table from pre-computed rows (one per word, same length as
    /// `labels`) and records the centering `mode` that produced them.
    pub fn assemble(
        feature_family: String,
        labels: Vec<String>,
        words: Vec<String>,
        rows: Vec<Vec<f64>>,
        mode: DeviationMode,
    ) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        FeatureTable { feature_family, labels, words, rows, mode, index }
    }

    /// Number of feature columns.
    pub fn n_features(&self) -> usize {
        self.labels.len()
    }

    /// Feature vector of one word.
    pub fn row(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.rows[i].as_slice())
    }

    /// Column second moments `(1/N) sum over rows of f^2` — the diagonal
    /// metric scales.
    pub fn column_second_moments(&self) -> Vec<f64> {
        let n = self.words.len() as f64;
        (0..self.n_features())
            .map(|k| {
                let sq: Vec<f64> = self.rows.iter().map(|r| r[k] * r[k]).collect();
                pairwise_sum(&sq) / n
            })
            .collect()
    }

    /// Population covariance of the feature columns (means subtracted).
    pub fn column_covariance(&self) -> DMatrix<f64> {
        let n_rows = self.words.len();
        let n_cols = self.n_features();
        let x = DMatrix::from_fn(n_rows, n_cols, |i, j| self.rows[i][j]);
        let means = x.row_mean();
        let mut centered = x;
        for mut row in centered.row_iter_mut() {
            row -= &means;
        }
        (centered.transpose() * &centered) / n_rows as f64
    }
}

/// Subtracts per-column targets from every row.
fn center_rows(rows: &mut [Vec<f64>], targets: &[f64]) {
    for row in rows {
        for (v, t) in row.iter_mut().zip(targets) {
            *v -= t;
        }
    }
}

/// Builds the observable feature table for an ensemble.
///
/// `DeviationTheor` fits the Gaussian model on the same ensemble and
/// subtracts each observable's model expectation, so it inherits the
/// fit's D >= 4 requirement.
pub fn build_features(
    set: &ObservableSet,
    ens: &MatrixEnsemble,
    mode: DeviationMode,
) -> Result<FeatureTable> {
    let mut rows = observable_values(set, ens)?;
    match mode {
        DeviationMode::RawValue => {}
        DeviationMode::DeviationExpt => {
            let n = ens.len() as f64;
            let means: Vec<f64> = (0..set.len())
                .map(|k| {
                    let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
                    pairwise_sum(&col) / n
                })
                .collect();
            center_rows(&mut rows, &means);
        }
        DeviationMode::DeviationTheor => {
            let pm = PatternMoments::fit(ens)?;
            let theor: Vec<f64> = set
                .observables
                .iter()
                .map(|obs| pm.theoretical_moment(obs))
                .collect::<Result<_>>()?;
            center_rows(&mut rows, &theor);
        }
    }
    Ok(FeatureTable::assemble(
        set.name.clone(),
        set.observables.iter().map(|o| o.label()).collect(),
        ens.words().to_vec(),
        rows,
        mode,
    ))
}

/// Baseline feature map: the D² matrix entries themselves (row-major).
/// Supports `RawValue` and `DeviationExpt`; there is no per-entry model
/// expectation, so `DeviationTheor` is rejected.
pub fn flatten_matrix_features(ens: &MatrixEnsemble, mode: DeviationMode) -> Result<FeatureTable> {
    if mode == DeviationMode::DeviationTheor {
        return Err(Error::InvalidInput(
            "matrix-entry features support raw or expt centering only".into(),
        ));
    }
    let d = ens.dim();
    let mut rows: Vec<Vec<f64>> = ens
        .matrices()
        .iter()
        .map(|m| (0..d * d).map(|idx| m[(idx / d, idx % d)]).collect())
        .collect();
    if mode == DeviationMode::DeviationExpt {
        let n = ens.len() as f64;
        let means: Vec<f64> = (0..d * d)
            .map(|k| {
                let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
                pairwise_sum(&col) / n
            })
            .collect();
        center_rows(&mut rows, &means);
    }
    let labels = (0..d * d)
        .map(|idx| format!("M[{},{}]", idx / d, idx % d))
        .collect();
    Ok(FeatureTable::assemble(
        "matrix-entries".into(),
        labels,
        ens.words().to_vec(),
        rows,
        mode,
    ))
}

/// Which power-sum invariant features to use for plain vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantSet {
    /// Degree <= 2 invariants: p1, p2, p1².
    Set1,
    /// Degree 3-4 invariants: p3, p2 p1, p1³, p4, p3 p1, p2², p2 p1², p1⁴.
    Set2,
    /// All eleven invariants.
    Set3,
}

impl InvariantSet {
    /// Stable name used in configs and reports.
    pub fn as_str(&self) -> &'static str {
        match self {
            InvariantSet::Set1 => "set1",
            InvariantSet::Set2 => "set2",
            InvariantSet::Set3 => "set3",
        }
    }
}

/// All eleven permutation-invariant monomials in the power sums
/// `p_k = sum_i v_i^k` up to total degree 4, with labels.
fn invariant_basis(v: &[f64]) -> [(f64, &'static str); 11] {
    let p1 = pairwise_sum(v);
    let p2 = pairwise_sum(&v.iter().map(|x| x * x).collect::<Vec<_>>());
    let p3 = pairwise_sum(&v.iter().map(|x| x * x * x).collect::<Vec<_>>());
    let p4 = pairwise_sum(&v.iter().map(|x| x * x * x * x).collect::<Vec<_>>());
    [
        (p1, "p1"),
        (p2, "p2"),
        (p1 * p1, "p1^2"),
        (p3, "p3"),
        (p2 * p1, "p2 p1"),
        (p1 * p1 * p1, "p1^3"),
        (p4, "p4"),
        (p3 * p1, "p3 p1"),
        (p2 * p2, "p2^2"),
        (p2 * p1 * p1, "p2 p1^2"),
        (p1 * p1 * p1 * p1, "p1^4"),
    ]
}

const SET1_RANGE: std::ops::Range<usize> = 0..3;
const SET2_RANGE: std::ops::Range<usize> = 3..11;
const SET3_RANGE: std::ops::Range<usize> = 0..11;

/// Power-sum invariant features for a word -> vector map. Supports
/// `RawValue` and `DeviationExpt` centering.
pub fn vector_invariant_features(
    words: &[String],
    vectors: &[Vec<f64>],
    which: InvariantSet,
    mode: DeviationMode,
) -> Result<FeatureTable> {
    if mode == DeviationMode::DeviationTheor {
        return Err(Error::InvalidInput(
            "vector invariants support raw or expt centering only".into(),
        ));
    }
    if words.len() != vectors.len() || words.is_empty() {
        return Err(Error::InvalidInput(
            "need one vector per word and at least one word".into(),
        ));
    }
    let range = match which {
        InvariantSet::Set1 => SET1_RANGE,
        InvariantSet::Set2 => SET2_RANGE,
        InvariantSet::Set3 => SET3_RANGE,
    };
    let mut labels: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(words.len());
    for v in vectors {
        let basis = invariant_basis(v);
        if labels.is_empty() {
            labels = basis[range.clone()].iter().map(|&(_, l)| l.to_string()).collect();
        }
        rows.push(basis[range.clone()].iter().map(|&(x, _)| x).collect());
    }
    if mode == DeviationMode::DeviationExpt {
        let n = words.len() as f64;
        let means: Vec<f64> = (0..labels.len())
            .map(|k| {
                let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
                pairwise_sum(&col) / n
            })
            .collect();
        center_rows(&mut rows, &means);
    }
    Ok(FeatureTable::assemble(
        format!("vector-invariants:{}", which.as_str()),
        labels,
        words.to_vec(),
        rows,
        mode,
    ))
}

/// Word -> plain vector map loaded from a directory with the same manifest
/// layout as matrix ensembles; each `<word>.csv` holds exactly `dim`
/// numbers (any comma/whitespace/newline separation).
#[derive(Debug, Clone)]
pub struct VectorEnsemble {
    /// Vector dimension.
    pub dim: usize,
    /// Words in manifest order.
    pub words: Vec<String>,
    /// Vectors in word order.
    pub vectors: Vec<Vec<f64>>,
}

impl VectorEnsemble {
    /// Looks up one word's vector.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.words
            .iter()
            .position(|w| w == word)
            .map(|i| self.vectors[i].as_slice())
    }
}

#[derive(Deserialize)]
struct VectorManifest {
    dim: usize,
    format: String,
    words: Vec<String>,
}

/// Loads a vector ensemble directory.
pub fn load_vector_ensemble(dir: &Path) -> Result<VectorEnsemble> {
    let manifest_path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| {
        Error::Ingest(format!("cannot read {}: {e}", manifest_path.display()))
    })?;
    let manifest: VectorManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Ingest(format!("{}: {e}", manifest_path.display())))?;
    if manifest.format != "csv" {
        return Err(Error::Ingest(format!(
            "{}: unsupported format {:?} (only \"csv\")",
            manifest_path.display(),
            manifest.format
        )));
    }
    if manifest.words.is_empty() {
        return Err(Error::Degenerate(format!(
            "{}: empty word list",
            manifest_path.display()
        )));
    }
    let mut vectors = Vec::with_capacity(manifest.words.len());
    for word in &manifest.words {
        let file = dir.join(format!("{word}.csv"));
        let text = std::fs::read_to_string(&file)
            .map_err(|e| Error::Ingest(format!("cannot read {}: {e}", file.display())))?;
        let mut v = Vec::with_capacity(manifest.dim);
        for cell in text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
        {
            v.push(cell.parse::<f64>().map_err(|_| {
                Error::Ingest(format!("{}: non-numeric cell {cell:?}", file.display()))
            })?);
        }
        if v.len() != manifest.dim {
            return Err(Error::Ingest(format!(
                "{}: {} values, expected {}",
                file.display(),
                v.len(),
                manifest.dim
            )));
        }
        vectors.push(v);
    }
    Ok(VectorEnsemble {
        dim: manifest.dim,
        words: manifest.words,
        vectors,
    })
}

enum Weights {
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

/// Inner product fitted to a feature table.
pub struct Metric {
    kind: MetricKind,
    weights: Weights,
    /// Feature indices whose diagonal scale was zero; their weight is zero
    /// and they are excluded from every inner product.
    pub dropped: Vec<usize>,
}

impl Metric {
    /// Fits the metric of the given kind to a feature table.
    pub fn new(kind: MetricKind, table: &FeatureTable) -> Result<Self> {
        let n = table.n_features();
        if n == 0 {
            return Err(Error::Degenerate("feature table has no columns".into()));
        }
        let (weights, dropped) = match kind {
            MetricKind::Flat => (Weights::Diagonal(vec![1.0; n]), Vec::new()),
            MetricKind::Diagonal => {
                let scales = table.column_second_moments();
                let mut w = Vec::with_capacity(n);
                let mut dropped = Vec::new();
                for (k, s) in scales.iter().enumerate() {
                    if *s > 0.0 {
                        w.push(1.0 / s);
                    } else {
                        w.push(0.0);
                        dropped.push(k);
                    }
                }
                (Weights::Diagonal(w), dropped)
            }
            MetricKind::Mahalanobis => {
                let cov = table.column_covariance();
                let svd = cov.svd(true, true);
                let sigma_max = svd.singular_values.max();
                let k = svd
                    .pseudo_inverse(1e-10 * sigma_max)
                    .map_err(|e| Error::Numerical(format!("pseudo-inverse failed: {e}")))?;
                (Weights::Dense(k), Vec::new())
            }
        };
        Ok(Metric { kind, weights, dropped })
    }

    /// Metric kind this was fitted as.
    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    /// Inner product `<u, v>` under the metric.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        match &self.weights {
            Weights::Diagonal(w) => {
                let terms: Vec<f64> = w
                    .iter()
                    .zip(u)
                    .zip(v)
                    .map(|((w, a), b)| w * a * b)
                    .collect();
                pairwise_sum(&terms)
            }
            Weights::Dense(k) => {
                let uv = DVector::from_column_slice(u);
                let vv = DVector::from_column_slice(v);
                (uv.transpose() * k * vv)[(0, 0)]
            }
        }
    }

    /// Metric norm; roundoff-negative squared norms clamp to zero.
    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).max(0.0).sqrt()
    }

    /// Cosine similarity, or `None` when either vector has zero metric norm
    /// (similarity is undefined there, not zero).
    pub fn cosine(&self, u: &[f64], v: &[f64]) -> Option<f64> {
        let denom = self.norm(u) * self.norm(v);
        if denom == 0.0 {
            return None;
        }
        Some((self.inner(u, v) / denom).clamp(-1.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::compute_stats;
    use crate::graph::canonical_set;
    use crate::numeric::close_rel;
    use nalgebra::DMatrix;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table(rows: Vec<Vec<f64>>) -> FeatureTable {
        let n = rows[0].len();
        FeatureTable::assemble(
            "test".into(),
            (0..n).map(|k| format!("f{k}")).collect(),
            (0..rows.len()).map(|i| format!("w{i}")).collect(),
            rows,
            DeviationMode::RawValue,
        )
    }

    fn random_ensemble(d: usize, n: usize, seed: u64) -> MatrixEnsemble {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words = (0..n).map(|w| format!("w{w}")).collect();
        let matrices = (0..n)
            .map(|_| {
                DMatrix::from_fn(d, d, |_, _| {
                    (rng.next_u32() as f64) / (u32::MAX as f64) * 2.0 - 1.0
                })
            })
            .collect();
        MatrixEnsemble::new(words, matrices, "test".into()).unwrap()
    }

    #[test]
    fn diagonal_metric_hand_values() {
        // Columns [1,3] and [2,4]: second moments 5 and 10.
        let t = table(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let m = Metric::new(MetricKind::Diagonal, &t).unwrap();
        assert!(m.dropped.is_empty());
        let u = [1.0, 2.0];
        let v = [3.0, 4.0];
        assert!(close_rel(m.inner(&u, &v), 3.0 / 5.0 + 8.0 / 10.0, 1e-12));
        assert!(close_rel(m.norm(&u), (1.0_f64 / 5.0 + 4.0 / 10.0).sqrt(), 1e-12));
        let expected = 1.4 / ((0.6_f64).sqrt() * (3.4_f64).sqrt());
        assert!(close_rel(m.cosine(&u, &v).unwrap(), expected, 1e-12));
    }

    #[test]
    fn flat_metric_basics() {
        let t = table(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let m = Metric::new(MetricKind::Flat, &t).unwrap();
        assert_eq!(m.cosine(&[1.0, 0.0], &[0.0, 2.0]), Some(0.0));
        assert!(close_rel(m.cosine(&[1.0, 1.0], &[-2.0, -2.0]).unwrap(), -1.0, 1e-12));
        assert!(close_rel(m.cosine(&[1.0, 1.0], &[3.0, 3.0]).unwrap(), 1.0, 1e-12));
        assert_eq!(m.cosine(&[0.0, 0.0], &[1.0, 0.0]), None);
    }

    #[test]
    fn zero_scale_columns_are_dropped() {
        // Second column is identically zero.
        let t = table(vec![vec![1.0, 0.0], vec![2.0, 0.0]]);
        let m = Metric::new(MetricKind::Diagonal, &t).unwrap();
        assert_eq!(m.dropped, vec![1]);
        // A vector supported only on the dropped column has zero norm.
        assert_eq!(m.norm(&[0.0, 5.0]), 0.0);
        assert_eq!(m.cosine(&[0.0, 5.0], &[1.0, 0.0]), None);
        // The surviving column still works.
        assert_eq!(m.cosine(&[1.0, 7.0], &[2.0, -9.0]), Some(1.0));
    }

    #[test]
    fn mahalanobis_is_invariant_under_invertible_feature_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..7)
            .map(|_| {
                (0..3)
                    .map(|_| (rng.next_u32() as f64) / (u32::MAX as f64) * 6.0 - 3.0)
                    .collect()
            })
            .collect();
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 2.0, 0.0, 0.0, 1.0, -1.0, 3.0, 0.0, 1.0],
        );
        let mapped: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                let x = DVector::from_column_slice(r);
                let y = &a * x;
                y.iter().cloned().collect()
            })
            .collect();
        let m1 = Metric::new(MetricKind::Mahalanobis, &table(rows.clone())).unwrap();
        let m2 = Metric::new(MetricKind::Mahalanobis, &table(mapped.clone())).unwrap();
        for i in 0..rows.len() {
            for j in 0..rows.len() {
                let c1 = m1.cosine(&rows[i], &rows[j]).unwrap();
                let c2 = m2.cosine(&mapped[i], &mapped[j]).unwrap();
                assert!(close_rel(c1, c2, 1e-8), "{c1} vs {c2}");
            }
        }
    }

    #[test]
    fn mahalanobis_tolerates_duplicated_features() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|_| {
                (0..2)
                    .map(|_| (rng.next_u32() as f64) / (u32::MAX as f64) * 4.0 - 2.0)
                    .collect()
            })
            .collect();
        // Append a copy of feature 0: covariance becomes singular; the
        // pseudo-inverse metric must reproduce the intact cosines.
        let dup: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0], r[1], r[0]]).collect();
        let m1 = Metric::new(MetricKind::Mahalanobis, &table(rows.clone())).unwrap();
        let m2 = Metric::new(MetricKind::Mahalanobis, &table(dup.clone())).unwrap();
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let c1 = m1.cosine(&rows[i], &rows[j]).unwrap();
                let c2 = m2.cosine(&dup[i], &dup[j]).unwrap();
                assert!(close_rel(c1, c2, 1e-8), "{c1} vs {c2}");
            }
        }
    }

    #[test]
    fn observable_features_and_centering() {
        let ens = random_ensemble(4, 5, 21);
        let set = canonical_set("13").unwrap();
        let raw = build_features(&set, &ens, DeviationMode::RawValue).unwrap();
        assert_eq!(raw.rows.len(), 5);
        assert_eq!(raw.n_features(), 13);
        assert_eq!(raw.labels[0], "M_ii");

        let centered = build_features(&set, &ens, DeviationMode::DeviationExpt).unwrap();
        for k in 0..13 {
            let col: Vec<f64> = centered.rows.iter().map(|r| r[k]).collect();
            assert!(pairwise_sum(&col).abs() < 1e-9, "column {k} not centered");
        }

        let theor = build_features(&set, &ens, DeviationMode::DeviationTheor).unwrap();
        let pm = PatternMoments::fit(&ens).unwrap();
        let stats = compute_stats(&set, &ens).unwrap();
        // raw - theor must differ from raw by the model expectation.
        for k in 0..13 {
            let expect = pm.theoretical_moment(&set.observables[k]).unwrap();
            assert!(close_rel(raw.rows[0][k] - theor.rows[0][k], expect, 1e-9));
            // Model matches ensemble means at degree <= 2, so theor-centered
            // columns also average to ~0 on these rows.
            let col: Vec<f64> = theor.rows.iter().map(|r| r[k]).collect();
            let resid = pairwise_sum(&col) / 5.0;
            assert!(
                resid.abs() <= 1e-8 * (1.0 + stats.mean[k].abs()),
                "column {k} residual {resid}"
            );
        }
    }

    #[test]
    fn theor_centering_requires_fittable_dimension() {
        let ens = random_ensemble(3, 4, 2);
        assert!(matches!(
            build_features(&canonical_set("13").unwrap(), &ens, DeviationMode::DeviationTheor),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn matrix_entry_features() {
        let ens = MatrixEnsemble::new(
            vec!["a".into(), "b".into()],
            vec![
                DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
                DMatrix::from_row_slice(2, 2, &[5.0, 6.0, 7.0, 8.0]),
            ],
            "test".into(),
        )
        .unwrap();
        let raw = flatten_matrix_features(&ens, DeviationMode::RawValue).unwrap();
        assert_eq!(raw.rows[0], vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(raw.labels[1], "M[0,1]");
        let dev = flatten_matrix_features(&ens, DeviationMode::DeviationExpt).unwrap();
        assert_eq!(dev.rows[0], vec![-2.0, -2.0, -2.0, -2.0]);
        assert_eq!(dev.rows[1], vec![2.0, 2.0, 2.0, 2.0]);
        assert!(flatten_matrix_features(&ens, DeviationMode::DeviationTheor).is_err());
    }

    #[test]
    fn vector_invariants_hand_values() {
        let words = vec!["v".to_string()];
        let vecs = vec![vec![1.0, 2.0]];
        let all =
            vector_invariant_features(&words, &vecs, InvariantSet::Set3, DeviationMode::RawValue)
                .unwrap();
        // p1=3, p2=5, p3=9, p4=17.
        assert_eq!(
            all.rows[0],
            vec![3.0, 5.0, 9.0, 9.0, 15.0, 27.0, 17.0, 27.0, 25.0, 45.0, 81.0]
        );
        let low =
            vector_invariant_features(&words, &vecs, InvariantSet::Set1, DeviationMode::RawValue)
                .unwrap();
        assert_eq!(low.rows[0], vec![3.0, 5.0, 9.0]);
        assert_eq!(low.labels, vec!["p1", "p2", "p1^2"]);
        let high =
            vector_invariant_features(&words, &vecs, InvariantSet::Set2, DeviationMode::RawValue)
                .unwrap();
        assert_eq!(high.rows[0].len(), 8);
        assert_eq!(high.labels[0], "p3");
    }

    #[test]
    fn vector_invariants_are_permutation_invariant() {
        let words = vec!["a".to_string(), "b".to_string()];
        let vecs = vec![vec![0.5, -1.5, 2.0], vec![2.0, 0.5, -1.5]];
        let t =
            vector_invariant_features(&words, &vecs, InvariantSet::Set3, DeviationMode::RawValue)
                .unwrap();
        for k in 0..11 {
            assert!(close_rel(t.rows[0][k], t.rows[1][k], 1e-12));
        }
    }

    #[test]
    fn vector_ensemble_round_trip_via_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("manifest.json"),
            r#"{"dim": 3, "format": "csv", "words": ["x", "y"]}"#,
        )
        .unwrap();
        std::fs::write(dir.path().join("x.csv"), "1, 2, 3\n").unwrap();
        std::fs::write(dir.path().join("y.csv"), "4\n5\n6\n").unwrap();
        let ve = load_vector_ensemble(dir.path()).unwrap();
        assert_eq!(ve.dim, 3);
        assert_eq!(ve.get("x").unwrap(), &[1.0, 2.0, 3.0]);
        assert_eq!(ve.get("y").unwrap(), &[4.0, 5.0, 6.0]);

        std::fs::write(dir.path().join("y.csv"), "4 5\n").unwrap();
        assert!(matches!(load_vector_ensemble(dir.path()), Err(Error::Ingest(_))));
    }
}
