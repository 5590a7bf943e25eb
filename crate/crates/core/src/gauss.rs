//! Moment-matched invariant Gaussian reference model.
//!
//! The model is the maximum-entropy distribution over D×D matrices whose
//! entry means and entry second moments are invariant under simultaneous
//! row/column permutations and match the ensemble. Invariance means the
//! mean of an entry depends only on whether it is diagonal, and the second
//! moment of an entry pair `M[i,j] * M[k,l]` depends only on the equality
//! pattern of the index tuple `(i, j, k, l)` — one of the 15 partitions of
//! four slots.
//!
//! Fitting recovers those pattern moments from the degree-1 and degree-2
//! observable means by Möbius inversion on the partition lattice
//! ([`PatternMoments::fit`]). Expected values of arbitrary observables
//! under the model follow from Wick's theorem
//! ([`PatternMoments::theoretical_moment`]), and matrices can be drawn
//! from the model ([`sample_ensemble`]).

use std::collections::BTreeMap;

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ensemble::{compute_stats, MatrixEnsemble};
use crate::graph::{canonical_set, GraphObservable, ObservableSet};
use crate::numeric::{falling_factorial, pairwise_sum};
use crate::partitions::{
    block_count, moebius_invert, normalize_to_rgs, parse_rgs_key, rgs_key, set_partitions,
};
use crate::{Error, Result};

/// Largest dimension accepted for sampling; the sampler factors the
/// D² × D² entry covariance densely.
pub const MAX_SAMPLE_DIM: usize = 12;

/// First- and second-order entry moments of the invariant Gaussian model.
///
/// `second_moments` is keyed by the partition of the slot tuple
/// `(i, j, k, l)` of an entry product `M[i,j] * M[k,l]`, written as a
/// restricted-growth digit string. Example keys: `"0000"` (all four indices
/// equal), `"0101"` (i = k, j = l, two distinct values), `"0123"` (all
/// distinct).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternMoments {
    dim: usize,
    mu_diag: f64,
    mu_off: f64,
    second_moments: BTreeMap<String, f64>,
}

/// Slot permutation that swaps the two factors of a quadratic product.
const FACTOR_SWAP: [usize; 4] = [2, 3, 0, 1];

impl PatternMoments {
    /// Dimension the moments were fitted at.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Mean of a diagonal entry.
    pub fn mu_diag(&self) -> f64 {
        self.mu_diag
    }

    /// Mean of an off-diagonal entry.
    pub fn mu_off(&self) -> f64 {
        self.mu_off
    }

    /// Mean of the entry at the edge `(s, t)` given node block labels.
    fn mu_edge(&self, diagonal: bool) -> f64 {
        if diagonal {
            self.mu_diag
        } else {
            self.mu_off
        }
    }

    /// Second moment `E[M_e1 * M_e2]` for an index tuple with the given
    /// 4-slot equality pattern.
    pub fn second_moment(&self, pattern: &[u8]) -> f64 {
        debug_assert_eq!(pattern.len(), 4);
        *self
            .second_moments
            .get(&rgs_key(pattern))
            .expect("pattern table is complete by construction")
    }

    /// Entry covariance for a 4-slot pattern:
    /// `E[M_e1 M_e2] - E[M_e1] E[M_e2]`.
    pub fn covariance(&self, pattern: &[u8]) -> f64 {
        let mu1 = self.mu_edge(pattern[0] == pattern[1]);
        let mu2 = self.mu_edge(pattern[2] == pattern[3]);
        self.second_moment(pattern) - mu1 * mu2
    }

    /// Builds pattern moments from explicit values. `second_moments` must
    /// hold exactly the 15 four-slot partition keys with finite values.
    pub fn from_parts(
        dim: usize,
        mu_diag: f64,
        mu_off: f64,
        second_moments: BTreeMap<String, f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        let expected: Vec<String> = set_partitions(4)
            .expect("4 slots always enumerable")
            .iter()
            .map(|p| rgs_key(p))
            .collect();
        if second_moments.len() != expected.len() {
            return Err(Error::InvalidInput(format!(
                "second-moment table has {} entries, expected {}",
                second_moments.len(),
                expected.len()
            )));
        }
        for key in &expected {
            match second_moments.get(key) {
                Some(v) if v.is_finite() => {}
                Some(_) => {
                    return Err(Error::InvalidInput(format!(
                        "second moment for pattern {key} is not finite"
                    )))
                }
                None => {
                    return Err(Error::InvalidInput(format!(
                        "second-moment table is missing pattern {key}"
                    )))
                }
            }
        }
        if !(mu_diag.is_finite() && mu_off.is_finite()) {
            return Err(Error::InvalidInput("entry means must be finite".into()));
        }
        // E[M_e1 M_e2] = E[M_e2 M_e1]: the table must be symmetric under the
        // factor swap. Tolerate summation noise, store the exact average.
        let mut table = second_moments;
        for p in set_partitions(4).expect("4 slots always enumerable") {
            let swapped = crate::partitions::apply_slot_permutation(&p, &FACTOR_SWAP);
            let a = table[&rgs_key(&p)];
            let b = table[&rgs_key(&swapped)];
            if !crate::numeric::close_rel(a, b, 1e-9) {
                return Err(Error::InvalidInput(format!(
                    "second moments for patterns {} and {} must agree (factor \
                     order is immaterial); got {a} vs {b}",
                    rgs_key(&p),
                    rgs_key(&swapped)
                )));
            }
            table.insert(rgs_key(&p), (a + b) / 2.0);
        }
        Ok(PatternMoments { dim, mu_diag, mu_off, second_moments: table })
    }

    /// Pattern moments of a 1×1 matrix model with the given scalar mean and
    /// second moment. Multi-block patterns never occur at D = 1, so their
    /// table entries are zero.
    pub fn from_scalar_stats(mean: f64, second_moment: f64) -> Self {
        let mut table = BTreeMap::new();
        for p in set_partitions(4).expect("4 slots always enumerable") {
            let v = if block_count(&p) == 1 { second_moment } else { 0.0 };
            table.insert(rgs_key(&p), v);
        }
        PatternMoments {
            dim: 1,
            mu_diag: mean,
            mu_off: 0.0,
            second_moments: table,
        }
    }

    /// Fits the model to an ensemble: matches the ensemble means of the 13
    /// degree ≤ 2 canonical observables exactly.
    ///
    /// Each observable mean is an unrestricted sum of entry products over
    /// index tuples; grouping tuples by their exact equality pattern and
    /// Möbius-inverting on the partition lattice isolates one restricted
    /// sum per pattern, which divided by its tuple count
    /// `D * (D-1) * ... * (D-blocks+1)` gives the pattern moment.
    ///
    /// Errors with `Degenerate` when D < 4: smaller matrices cannot realize
    /// all four-block index patterns, so the pattern table is not
    /// identifiable from data.
    pub fn fit(ens: &MatrixEnsemble) -> Result<Self> {
        let d = ens.dim();
        if d < 4 {
            return Err(Error::Degenerate(format!(
                "pattern moments need dimension >= 4 to distinguish all index \
                 patterns; got {d}"
            )));
        }
        let set13 = canonical_set("13")?;
        let stats = compute_stats(&set13, ens)?;
        // stats.mean[r] is the ensemble mean of canonical row r + 1.

        // Degree 1: partitions of 2 slots are "00" (diagonal, row 1) and
        // "01" (unrestricted, row 2).
        let parts2 = set_partitions(2)?;
        debug_assert_eq!(parts2, vec![vec![0, 0], vec![0, 1]]);
        let u2 = [stats.mean[0], stats.mean[1]];
        let e2 = moebius_invert(&parts2, &u2);
        let mu_diag = e2[0] / falling_factorial(d, 1);
        let mu_off = e2[1] / falling_factorial(d, 2);

        // Degree 2: map each 4-slot partition to the canonical row whose
        // graph it induces, read off the unrestricted sums, invert.
        let parts4 = set_partitions(4)?;
        let row_map = quadratic_row_map()?;
        debug_assert_eq!(row_map.len(), parts4.len());
        let u4: Vec<f64> = row_map.iter().map(|&row_id| stats.mean[row_id - 1]).collect();
        let e4 = moebius_invert(&parts4, &u4);

        let mut raw = BTreeMap::new();
        for (p, e) in parts4.iter().zip(&e4) {
            raw.insert(rgs_key(p), e / falling_factorial(d, block_count(p)));
        }
        // Symmetrize over the factor swap (the two unrestricted sums are the
        // same table row, so this only removes last-bit summation noise).
        let mut table = BTreeMap::new();
        for p in &parts4 {
            let swapped = crate::partitions::apply_slot_permutation(p, &FACTOR_SWAP);
            let v = (raw[&rgs_key(p)] + raw[&rgs_key(&swapped)]) / 2.0;
            table.insert(rgs_key(p), v);
        }
        Ok(PatternMoments {
            dim: d,
            mu_diag,
            mu_off,
            second_moments: table,
        })
    }

    /// Expected value of an observable under the model, via Wick's theorem:
    /// sum over node-index equality patterns of (number of index tuples with
    /// that pattern) × (sum over partial pairings of the matrix factors of
    /// the product of pair covariances and unpaired means).
    ///
    /// Exact for every polynomial in matrix entries of degree ≤ 4 per
    /// factor-pairing structure; observables of degree 1 and 2 reproduce
    /// the fitted ensemble means exactly.
    pub fn theoretical_moment(&self, obs: &GraphObservable) -> Result<f64> {
        obs.validate()?;
        if obs.degree() > 4 {
            return Err(Error::InvalidInput(format!(
                "theoretical moments support degree <= 4; observable has degree {}",
                obs.degree()
            )));
        }
        let parts = set_partitions(obs.nodes).map_err(|_| {
            Error::InvalidInput(format!(
                "theoretical moments support at most 8 nodes; observable has {}",
                obs.nodes
            ))
        })?;
        let d = self.dim;
        let mut terms = Vec::with_capacity(parts.len());
        for blocks in &parts {
            let tuples = falling_factorial(d, block_count(blocks));
            if tuples == 0.0 {
                continue;
            }
            let mut used = vec![false; obs.edges.len()];
            let w = self.pairing_sum(blocks, &obs.edges, &mut used);
            terms.push(tuples * w);
        }
        Ok(pairwise_sum(&terms))
    }

    /// Sum over partial pairings of the unused edges: each edge is either
    /// unpaired (contributing its mean) or paired with a later unused edge
    /// (contributing the pair covariance).
    fn pairing_sum(&self, blocks: &[u8], edges: &[(usize, usize)], used: &mut [bool]) -> f64 {
        let Some(first) = used.iter().position(|&u| !u) else {
            return 1.0;
        };
        let (s1, t1) = edges[first];
        used[first] = true;
        let mut total =
            self.mu_edge(blocks[s1] == blocks[t1]) * self.pairing_sum(blocks, edges, used);
        for second in first + 1..edges.len() {
            if used[second] {
                continue;
            }
            let (s2, t2) = edges[second];
            let pattern = normalize_to_rgs(&[blocks[s1], blocks[t1], blocks[s2], blocks[t2]]);
            used[second] = true;
            total += self.covariance(&pattern) * self.pairing_sum(blocks, edges, used);
            used[second] = false;
        }
        used[first] = false;
        total
    }

    /// Serializes to JSON (stable key order).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pattern moments always serialize")
    }

    /// Deserializes and validates JSON produced by [`Self::to_json`].
    pub fn from_json(json: &str) -> Result<Self> {
        let pm: PatternMoments = serde_json::from_str(json)
            .map_err(|e| Error::Ingest(format!("pattern moments: {e}")))?;
        for key in pm.second_moments.keys() {
            let rgs = parse_rgs_key(key)?;
            if rgs.len() != 4 {
                return Err(Error::Ingest(format!("pattern key {key:?} is not 4 slots")));
            }
        }
        PatternMoments::from_parts(pm.dim, pm.mu_diag, pm.mu_off, pm.second_moments)
    }
}

/// Maps each of the 15 four-slot partitions (in lexicographic RGS order) to
/// the 1-based canonical table row whose observable is the corresponding
/// unrestricted sum `sum over tuples coarsening the pattern of M_ab * M_cd`.
fn quadratic_row_map() -> Result<Vec<usize>> {
    let table = crate::graph::canonical_table();
    let mut row_forms: Vec<(Vec<(u8, u8)>, usize)> = Vec::new();
    for row in &table[2..13] {
        // Rows 3..=13 are the quadratic observables.
        row_forms.push((row.canonical_form(), row.id.expect("table rows have ids") as usize));
    }
    let mut map = Vec::new();
    for p in set_partitions(4)? {
        let nodes = block_count(&p);
        let edges = vec![
            (p[0] as usize, p[1] as usize),
            (p[2] as usize, p[3] as usize),
        ];
        let g = GraphObservable::new(nodes, edges)?;
        let form = g.canonical_form();
        let matches: Vec<usize> = row_forms
            .iter()
            .filter(|(f, _)| *f == form)
            .map(|&(_, id)| id)
            .collect();
        match matches.as_slice() {
            [id] => map.push(*id),
            _ => {
                return Err(Error::Numerical(format!(
                    "pattern {:?} matched {} quadratic rows; table inconsistent",
                    p,
                    matches.len()
                )))
            }
        }
    }
    Ok(map)
}

/// One observable's row in a Gaussianity comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussRow {
    /// Canonical table row id (or 0 for custom observables).
    pub id: u32,
    /// Index-notation label.
    pub label: String,
    /// Ensemble mean of the observable.
    pub expt_mean: f64,
    /// Population standard deviation across words.
    pub expt_std: f64,
    /// Standard error of the ensemble mean.
    pub expt_stderr: f64,
    /// Expected value under the fitted Gaussian model.
    pub theor_mean: f64,
    /// (expt_mean - theor_mean) / expt_std; `None` when the ensemble std is
    /// zero (serialized as null).
    pub norm_diff: Option<f64>,
}

/// Ensemble-vs-model comparison over an observable set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianityReport {
    /// Observable-set name.
    pub set_name: String,
    /// Matrix dimension.
    pub dim: usize,
    /// Number of words in the ensemble.
    pub n_words: usize,
    /// Fitted entry means (diagonal, off-diagonal).
    pub mu_diag: f64,
    pub mu_off: f64,
    /// Per-observable comparison rows, in set order.
    pub rows: Vec<GaussRow>,
}

/// Fits the Gaussian model on the ensemble and compares, per observable of
/// `set`, the ensemble mean against the model expectation.
pub fn gaussianity_report(set: &ObservableSet, ens: &MatrixEnsemble) -> Result<GaussianityReport> {
    let pm = PatternMoments::fit(ens)?;
    let stats = compute_stats(set, ens)?;
    let mut rows = Vec::with_capacity(set.len());
    for (k, obs) in set.observables.iter().enumerate() {
        let theor = pm.theoretical_moment(obs)?;
        let std = stats.std[k];
        rows.push(GaussRow {
            id: obs.id.unwrap_or(0),
            label: obs.label(),
            expt_mean: stats.mean[k],
            expt_std: std,
            expt_stderr: stats.stderr[k],
            theor_mean: theor,
            norm_diff: if std > 0.0 {
                Some((stats.mean[k] - theor) / std)
            } else {
                None
            },
        });
    }
    Ok(GaussianityReport {
        set_name: set.name.clone(),
        dim: ens.dim(),
        n_words: ens.len(),
        mu_diag: pm.mu_diag(),
        mu_off: pm.mu_off(),
        rows,
    })
}

/// Streaming sampler for the invariant Gaussian model.
///
/// The D²-dimensional entry covariance (row-major entry order, index
/// `i*D + j`) is diagonalized once; tiny negative eigenvalues from roundoff
/// are clipped to zero and the factor `U * sqrt(Λ)` maps standard normals
/// to correlated entries.
pub struct GaussianSampler {
    dim: usize,
    mean: DVector<f64>,
    factor: DMatrix<f64>,
    rng: ChaCha8Rng,
}

impl GaussianSampler {
    /// Builds the sampler. Errors with `Numerical` when the assembled
    /// covariance has a significantly negative eigenvalue (below
    /// `-1e-8 * max eigenvalue`), and with `InvalidInput` when
    /// D > [`MAX_SAMPLE_DIM`].
    pub fn new(pm: &PatternMoments, seed: u64) -> Result<Self> {
        let d = pm.dim();
        if d > MAX_SAMPLE_DIM {
            return Err(Error::InvalidInput(format!(
                "sampling supports dimension <= {MAX_SAMPLE_DIM}; got {d}"
            )));
        }
        let n = d * d;
        let mean = DVector::from_fn(n, |idx, _| {
            let (i, j) = (idx / d, idx % d);
            if i == j {
                pm.mu_diag()
            } else {
                pm.mu_off()
            }
        });
        let cov = DMatrix::from_fn(n, n, |row, col| {
            let (i, j) = (row / d, row % d);
            let (k, l) = (col / d, col % d);
            let pattern = normalize_to_rgs(&[i as u8, j as u8, k as u8, l as u8]);
            pm.covariance(&pattern)
        });
        let eigen = SymmetricEigen::new(cov);
        let lambda_max = eigen.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let lambda_min = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if lambda_min < -1e-8 * lambda_max.max(f64::MIN_POSITIVE) {
            return Err(Error::Numerical(format!(
                "entry covariance is not positive semidefinite: min eigenvalue \
                 {lambda_min:.3e} vs max {lambda_max:.3e}"
            )));
        }
        let scales = eigen.eigenvalues.map(|l| l.max(0.0).sqrt());
        let factor = eigen.eigenvectors * DMatrix::from_diagonal(&scales);
        Ok(GaussianSampler {
            dim: d,
            mean,
            factor,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Matrix dimension of the samples.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Draws the next matrix.
    pub fn next_matrix(&mut self) -> DMatrix<f64> {
        let n = self.dim * self.dim;
        let z = DVector::from_fn(n, |_, _| self.rng.sample::<f64, _>(StandardNormal));
        let x = &self.mean + &self.factor * z;
        DMatrix::from_fn(self.dim, self.dim, |i, j| x[i * self.dim + j])
    }
}

/// Draws `count` matrices from the model into an ensemble with words
/// `sample_0000001`, `sample_0000002`, ...
///
/// `d` must equal the model dimension (the pattern table is only known to
/// assemble into a positive semidefinite covariance at the dimension it was
/// fitted at).
pub fn sample_ensemble(
    pm: &PatternMoments,
    d: usize,
    count: usize,
    seed: u64,
) -> Result<MatrixEnsemble> {
    if d != pm.dim() {
        return Err(Error::InvalidInput(format!(
            "requested dimension {d} but the model was fitted at {}",
            pm.dim()
        )));
    }
    if count == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    let mut sampler = GaussianSampler::new(pm, seed)?;
    let mut words = Vec::with_capacity(count);
    let mut matrices = Vec::with_capacity(count);
    for k in 0..count {
        words.push(format!("sample_{:07}", k + 1));
        matrices.push(sampler.next_matrix());
    }
    MatrixEnsemble::new(words, matrices, format!("sampled(seed={seed})"))
}
