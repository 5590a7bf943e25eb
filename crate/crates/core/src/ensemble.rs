//! Matrix-ensemble ingestion, mixing, and invariant ensemble statistics.
//!
//! An ensemble is an ordered collection of real D×D matrices, one per word.
//! On disk it is a directory with a `manifest.json`
//! (`{"dim": D, "format": "csv", "words": [...]}`) and one `<word>.csv` per
//! word containing D lines of D comma- or whitespace-separated floats.
//!
//! Word matrices may come in two context flavors that are blended into a
//! single matrix per word, `M = a*M_O + (1-a)*M_S`, before analysis; see
//! [`mix`].
//!
//! All statistics use the population (1/N) convention.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::contract::SetEvaluator;
use crate::graph::ObservableSet;
use crate::numeric::{mean, pairwise_sum};
use crate::{Error, Result};

/// Named, ordered collection of same-sized square matrices.
#[derive(Debug, Clone)]
pub struct MatrixEnsemble {
    dim: usize,
    words: Vec<String>,
    matrices: Vec<DMatrix<f64>>,
    index: HashMap<String, usize>,
    /// Provenance tag used in reports ("loaded:<dir>", "mixed(a=..)", ...).
    pub source: String,
}

impl MatrixEnsemble {
    /// Builds an ensemble from parallel word/matrix lists.
    pub fn new(words: Vec<String>, matrices: Vec<DMatrix<f64>>, source: String) -> Result<Self> {
        if words.len() != matrices.len() {
            return Err(Error::InvalidInput(
                "word list and matrix list lengths differ".into(),
            ));
        }
        if words.is_empty() {
            return Err(Error::Degenerate("ensemble has no words".into()));
        }
        let dim = matrices[0].nrows();
        if dim == 0 {
            return Err(Error::InvalidInput("ensemble dimension is zero".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if matrices[i].nrows() != dim || matrices[i].ncols() != dim {
                return Err(Error::InvalidInput(format!(
                    "matrix for {w:?} is {}x{}, expected {dim}x{dim}",
                    matrices[i].nrows(),
                    matrices[i].ncols()
                )));
            }
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Ingest(format!("duplicate word {w:?}")));
            }
        }
        Ok(MatrixEnsemble { dim, words, matrices, index, source })
    }

    /// Shared matrix dimension D.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of words.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    /// True when the ensemble holds no words (constructors forbid this).
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in deterministic (manifest) order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Matrices in word order.
    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    /// Looks up one word's matrix.
    pub fn get(&self, word: &str) -> Option<&DMatrix<f64>> {
        self.index.get(word).map(|&i| &self.matrices[i])
    }

    /// Position of a word in ensemble order.
    pub fn position(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    dim: usize,
    format: String,
    words: Vec<String>,
}

/// Loads an ensemble directory (see module docs for the layout).
pub fn load_ensemble(dir: &Path) -> Result<MatrixEnsemble> {
    let manifest_path = dir.join("manifest.json");
    let manifest_text = std::fs::read_to_string(&manifest_path).map_err(|e| {
        Error::Ingest(format!("cannot read {}: {e}", manifest_path.display()))
    })?;
    let manifest: Manifest = serde_json::from_str(&manifest_text)
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
    let d = manifest.dim;
    if d == 0 {
        return Err(Error::Ingest(format!(
            "{}: dim must be positive",
            manifest_path.display()
        )));
    }
    let mut matrices = Vec::with_capacity(manifest.words.len());
    for word in &manifest.words {
        let file = dir.join(format!("{word}.csv"));
        let text = std::fs::read_to_string(&file)
            .map_err(|e| Error::Ingest(format!("cannot read {}: {e}", file.display())))?;
        matrices.push(parse_matrix(&text, d, &file.display().to_string())?);
    }
    MatrixEnsemble::new(
        manifest.words,
        matrices,
        format!("loaded:{}", dir.display()),
    )
}

/// Parses one matrix file: `d` non-empty lines of `d` comma- or
/// whitespace-separated floats.
fn parse_matrix(text: &str, d: usize, file: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d);
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if cells.len() != d {
            return Err(Error::Ingest(format!(
                "{file}:{}: {} values on a row, expected {d}",
                lineno + 1,
                cells.len()
            )));
        }
        let mut row = Vec::with_capacity(d);
        for cell in cells {
            row.push(cell.parse::<f64>().map_err(|_| {
                Error::Ingest(format!(
                    "{file}:{}: non-numeric cell {cell:?}",
                    lineno + 1
                ))
            })?);
        }
        rows.push(row);
    }
    if rows.len() != d {
        return Err(Error::Ingest(format!(
            "{file}: {} rows, expected {d}",
            rows.len()
        )));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

/// Writes an ensemble as a loadable directory (manifest + one csv per word).
pub fn save_ensemble(ens: &MatrixEnsemble, dir: &Path) -> Result<()> {
    for word in ens.words() {
        if word.contains(['/', '\\']) || word.contains("..") || word.is_empty() {
            return Err(Error::InvalidInput(format!(
                "word {word:?} is not a safe file name"
            )));
        }
    }
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Ingest(format!("cannot create {}: {e}", dir.display())))?;
    let manifest = Manifest {
        dim: ens.dim(),
        format: "csv".into(),
        words: ens.words().to_vec(),
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)
        .expect("manifest serialization cannot fail");
    std::fs::write(dir.join("manifest.json"), manifest_json)
        .map_err(|e| Error::Ingest(format!("cannot write manifest: {e}")))?;
    for (word, m) in ens.words().iter().zip(ens.matrices()) {
        let mut text = String::new();
        for i in 0..ens.dim() {
            for j in 0..ens.dim() {
                if j > 0 {
                    text.push(',');
                }
                // Shortest round-trip float formatting keeps files exact.
                write!(text, "{}", m[(i, j)]).expect("string write");
            }
            text.push('\n');
        }
        std::fs::write(dir.join(format!("{word}.csv")), text)
            .map_err(|e| Error::Ingest(format!("cannot write {word}.csv: {e}")))?;
    }
    Ok(())
}

/// Blend weight for the two context flavors of each word matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixSpec {
    /// Weight of the first (object-context) ensemble, in [0, 1].
    pub a: f64,
}

impl MixSpec {
    /// Validates the weight range.
    pub fn new(a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidInput(format!("mixing weight a={a} not in [0, 1]")));
        }
        Ok(MixSpec { a })
    }
}

/// Result of [`mix`]: the blended ensemble plus bookkeeping on words that
/// were present on only one side.
#[derive(Debug)]
pub struct MixOutcome {
    /// Blended ensemble over the word intersection, in `mo` order.
    pub ensemble: MatrixEnsemble,
    /// Number of words dropped because they appeared on only one side.
    pub dropped_words: usize,
}

/// Per-word blend `M = a*M_O + (1-a)*M_S` over the word intersection.
pub fn mix(mo: &MatrixEnsemble, ms: &MatrixEnsemble, spec: MixSpec) -> Result<MixOutcome> {
    if mo.dim() != ms.dim() {
        return Err(Error::InvalidInput(format!(
            "cannot mix ensembles of dimension {} and {}",
            mo.dim(),
            ms.dim()
        )));
    }
    let a = spec.a;
    let mut words = Vec::new();
    let mut matrices = Vec::new();
    for (word, m_o) in mo.words().iter().zip(mo.matrices()) {
        if let Some(m_s) = ms.get(word) {
            words.push(word.clone());
            matrices.push(m_o * a + m_s * (1.0 - a));
        }
    }
    let dropped = (mo.len() - words.len()) + (ms.len() - words.len());
    if words.is_empty() {
        return Err(Error::Degenerate(
            "ensembles share no words; nothing to mix".into(),
        ));
    }
    let ensemble = MatrixEnsemble::new(words, matrices, format!("mixed(a={a})"))?;
    Ok(MixOutcome { ensemble, dropped_words: dropped })
}

/// Per-observable ensemble statistics (population convention).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleStats {
    /// Observable-set name the statistics refer to.
    pub set_name: String,
    /// Display ids of the observables, in set order.
    pub ids: Vec<u32>,
    /// Index-notation labels, in set order.
    pub labels: Vec<String>,
    /// Ensemble means per observable.
    pub mean: Vec<f64>,
    /// Population standard deviations per observable.
    pub std: Vec<f64>,
    /// Second moments per observable.
    pub second_moment: Vec<f64>,
    /// Standard errors of the means: std / sqrt(N).
    pub stderr: Vec<f64>,
    /// Number of words.
    pub n_words: usize,
}

/// Evaluates every observable of `set` on every word, in word order.
/// Returns an N_words × n_obs table (row per word).
pub fn observable_values(set: &ObservableSet, ens: &MatrixEnsemble) -> Result<Vec<Vec<f64>>> {
    let evaluator = SetEvaluator::new(set)?;
    ens.matrices()
        .iter()
        .map(|m| evaluator.evaluate_matrix(m))
        .collect()
}

/// Ensemble mean / population std / second moment / standard error for each
/// observable of the set.
pub fn compute_stats(set: &ObservableSet, ens: &MatrixEnsemble) -> Result<EnsembleStats> {
    let values = observable_values(set, ens)?;
    let n = ens.len();
    let n_obs = set.len();
    let mut means = Vec::with_capacity(n_obs);
    let mut stds = Vec::with_capacity(n_obs);
    let mut seconds = Vec::with_capacity(n_obs);
    let mut stderrs = Vec::with_capacity(n_obs);
    let mut column = vec![0.0; n];
    for k in 0..n_obs {
        for (w, row) in values.iter().enumerate() {
            column[w] = row[k];
        }
        let m = mean(&column);
        let sq: Vec<f64> = column.iter().map(|v| (v - m) * (v - m)).collect();
        let var = (pairwise_sum(&sq) / n as f64).max(0.0);
        let second: Vec<f64> = column.iter().map(|v| v * v).collect();
        means.push(m);
        stds.push(var.sqrt());
        seconds.push(pairwise_sum(&second) / n as f64);
        stderrs.push(var.sqrt() / (n as f64).sqrt());
    }
    Ok(EnsembleStats {
        set_name: set.name.clone(),
        ids: set.display_ids(),
        labels: set.observables.iter().map(|o| o.label()).collect(),
        mean: means,
        std: stds,
        second_moment: seconds,
        stderr: stderrs,
        n_words: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::permute_conjugate;
    use crate::graph::canonical_set;
    use crate::numeric::close_rel;

    fn m2() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0])
    }

    fn ens(words: &[&str], ms: Vec<DMatrix<f64>>) -> MatrixEnsemble {
        MatrixEnsemble::new(
            words.iter().map(|s| s.to_string()).collect(),
            ms,
            "test".into(),
        )
        .unwrap()
    }

    #[test]
    fn plus_minus_ensemble_stats() {
        // Trace of [[1,2],[3,4]] is 5; over {M, -M} mean 0, population std 5.
        let e = ens(&["p", "n"], vec![m2(), -m2()]);
        let stats = compute_stats(&canonical_set("13").unwrap(), &e).unwrap();
        assert_eq!(stats.mean[0], 0.0);
        assert_eq!(stats.std[0], 5.0);
        assert_eq!(stats.second_moment[0], 25.0);
        assert!(close_rel(stats.stderr[0], 5.0 / 2.0_f64.sqrt(), 1e-12));
    }

    #[test]
    fn constant_and_singleton_ensembles() {
        let e = ens(&["a", "b"], vec![m2(), m2()]);
        let stats = compute_stats(&canonical_set("13").unwrap(), &e).unwrap();
        assert!(stats.std.iter().all(|&s| s == 0.0));

        let single = ens(&["only"], vec![m2()]);
        let stats = compute_stats(&canonical_set("13").unwrap(), &single).unwrap();
        assert_eq!(stats.mean[0], 5.0);
        assert_eq!(stats.std[0], 0.0);
    }

    #[test]
    fn stats_are_permutation_invariant() {
        let m = DMatrix::from_row_slice(3, 3, &[1., 2., 3., 4., 5., 6., 7., 8., 9.]);
        let e = ens(&["a", "b"], vec![m.clone(), m.transpose()]);
        let perm = [2usize, 0, 1];
        let permuted = ens(
            &["a", "b"],
            e.matrices().iter().map(|m| permute_conjugate(m, &perm)).collect(),
        );
        let set = canonical_set("28").unwrap();
        let s1 = compute_stats(&set, &e).unwrap();
        let s2 = compute_stats(&set, &permuted).unwrap();
        for k in 0..set.len() {
            assert!(close_rel(s1.mean[k], s2.mean[k], 1e-9));
            assert!(close_rel(s1.std[k], s2.std[k], 1e-9));
        }
    }

    #[test]
    fn mixing_endpoints_and_linearity() {
        let mo = ens(&["w"], vec![DMatrix::identity(2, 2)]);
        let ms = ens(&["w"], vec![DMatrix::identity(2, 2) * 2.0]);
        let at_one = mix(&mo, &ms, MixSpec::new(1.0).unwrap()).unwrap();
        assert_eq!(at_one.ensemble.get("w").unwrap(), mo.get("w").unwrap());
        let at_zero = mix(&mo, &ms, MixSpec::new(0.0).unwrap()).unwrap();
        assert_eq!(at_zero.ensemble.get("w").unwrap(), ms.get("w").unwrap());
        let half = mix(&mo, &ms, MixSpec::new(0.5).unwrap()).unwrap();
        assert_eq!(
            half.ensemble.get("w").unwrap(),
            &(DMatrix::identity(2, 2) * 1.5)
        );
    }

    #[test]
    fn mixing_drops_unshared_words() {
        let mo = ens(&["a", "b"], vec![m2(), m2()]);
        let ms = ens(&["b", "c"], vec![m2(), m2()]);
        let out = mix(&mo, &ms, MixSpec::new(0.5).unwrap()).unwrap();
        assert_eq!(out.ensemble.words(), &["b".to_string()]);
        assert_eq!(out.dropped_words, 2);

        let disjoint = ens(&["z"], vec![m2()]);
        assert!(matches!(
            mix(&mo, &disjoint, MixSpec::new(0.5).unwrap()),
            Err(Error::Degenerate(_))
        ));
        assert!(MixSpec::new(1.5).is_err());
        assert!(MixSpec::new(-0.1).is_err());
    }

    #[test]
    fn directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let e = ens(&["alpha", "beta"], vec![m2(), m2().transpose()]);
        save_ensemble(&e, dir.path()).unwrap();
        let back = load_ensemble(dir.path()).unwrap();
        assert_eq!(back.dim(), 2);
        assert_eq!(back.words(), e.words());
        assert_eq!(back.get("alpha").unwrap(), e.get("alpha").unwrap());
        assert_eq!(back.get("beta").unwrap(), e.get("beta").unwrap());
    }

    #[test]
    fn loader_reports_malformed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        // Missing manifest.
        assert!(matches!(load_ensemble(dir.path()), Err(Error::Ingest(_))));

        // Row with the wrong number of cells names the file.
        std::fs::write(
            dir.path().join("manifest.json"),
            r#"{"dim": 3, "format": "csv", "words": ["bad"]}"#,
        )
        .unwrap();
        std::fs::write(dir.path().join("bad.csv"), "1,2,3\n4,5,6,7\n8,9,10\n").unwrap();
        let err = load_ensemble(dir.path()).unwrap_err();
        assert!(err.to_string().contains("bad.csv"), "{err}");

        // Non-numeric cell.
        std::fs::write(dir.path().join("bad.csv"), "1,2,3\n4,x,6\n7,8,9\n").unwrap();
        assert!(load_ensemble(dir.path()).unwrap_err().to_string().contains("x"));

        // Empty word list is degenerate, not an IO error.
        std::fs::write(
            dir.path().join("manifest.json"),
            r#"{"dim": 3, "format": "csv", "words": []}"#,
        )
        .unwrap();
        assert!(matches!(load_ensemble(dir.path()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn loader_accepts_whitespace_separation() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("manifest.json"),
            r#"{"dim": 2, "format": "csv", "words": ["w"]}"#,
        )
        .unwrap();
        std::fs::write(dir.path().join("w.csv"), "1.5\t2.5\n-3 4e-1\n").unwrap();
        let e = load_ensemble(dir.path()).unwrap();
        assert_eq!(
            e.get("w").unwrap(),
            &DMatrix::from_row_slice(2, 2, &[1.5, 2.5, -3.0, 0.4])
        );
    }

    #[test]
    fn duplicate_words_are_rejected() {
        let err = MatrixEnsemble::new(
            vec!["w".into(), "w".into()],
            vec![m2(), m2()],
            "test".into(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Ingest(_)));
    }
}
