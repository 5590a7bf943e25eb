//! Directed-multigraph observables and the canonical 28-row table.
//!
//! A graph observable `O` on a D×D matrix `M` is the sum, over all
//! assignments of node indices `f : nodes -> {0..D-1}`, of the product of
//! `M[f(s), f(t)]` over the edges `(s, t)`. Nodes are summed indices, edges
//! are matrix factors, and repeated edges encode entrywise powers. Examples:
//! a single self-loop is the trace; a single edge is the total entry sum; the
//! 3-cycle is `tr(M^3)`.
//!
//! The canonical table ships the 28 observables used throughout the crate,
//! in their published order (ids 1..=28). Rows 27 and 28 are the same graph
//! up to node relabeling; both are kept verbatim so ids and set sizes match
//! the published table, and the canonical form below exposes the duplication
//! to downstream consumers instead of silently merging it.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest node count accepted for a single observable.
///
/// Evaluation cost grows exponentially in node count per connected component;
/// the canonical table tops out at 8 nodes (four disjoint edges).
pub const MAX_NODES: usize = 16;

/// Node count above which full canonical relabeling (factorial search) is
/// replaced by a deterministic degree-sort heuristic.
const MAX_EXACT_CANON_NODES: usize = 9;

/// One permutation-invariant matrix observable, encoded as a directed
/// multigraph. Self-loops and repeated edges are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphObservable {
    /// Number of summed indices. Node ids are `0..nodes`.
    pub nodes: usize,
    /// Matrix factors: edge `(s, t)` contributes `M[f(s), f(t)]`.
    pub edges: Vec<(usize, usize)>,
    /// Canonical table row (1-based) when the observable comes from the
    /// embedded table; absent for custom observables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u32>,
}

impl GraphObservable {
    /// Builds and validates an observable.
    pub fn new(nodes: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let g = GraphObservable { nodes, edges, id: None };
        g.validate()?;
        Ok(g)
    }

    fn with_id(nodes: usize, edges: Vec<(usize, usize)>, id: u32) -> Self {
        let g = GraphObservable { nodes, edges, id: Some(id) };
        g.validate().expect("canonical table row must be valid");
        g
    }

    /// Polynomial degree = number of matrix factors.
    pub fn degree(&self) -> usize {
        self.edges.len()
    }

    /// Checks structural invariants: at least one node, all edge endpoints in
    /// range, no isolated nodes (an isolated node would multiply the value by
    /// D, which no tabulated observable contains), at least one edge.
    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::InvalidInput("observable has no nodes".into()));
        }
        if self.nodes > MAX_NODES {
            return Err(Error::InvalidInput(format!(
                "observable has {} nodes; the supported maximum is {MAX_NODES}",
                self.nodes
            )));
        }
        if self.edges.is_empty() {
            return Err(Error::InvalidInput("observable has no edges".into()));
        }
        let mut touched = vec![false; self.nodes];
        for &(s, t) in &self.edges {
            if s >= self.nodes || t >= self.nodes {
                return Err(Error::InvalidInput(format!(
                    "edge ({s}, {t}) references a node >= node count {}",
                    self.nodes
                )));
            }
            touched[s] = true;
            touched[t] = true;
        }
        if let Some(orphan) = touched.iter().position(|&t| !t) {
            return Err(Error::InvalidInput(format!(
                "node {orphan} is isolated (degree 0)"
            )));
        }
        Ok(())
    }

    /// Human-readable index-notation label, e.g. `M_ij M_jj M_jk` for the
    /// column-diagonal-row chain or `M_ii^3` for the cubed diagonal sum.
    /// Nodes are lettered `i, j, k, ...` in id order; repeated consecutive
    /// factors are collapsed into an exponent.
    pub fn label(&self) -> String {
        const LETTERS: &[u8] = b"ijklmnopqrstuvwx";
        let name = |n: usize| LETTERS[n % LETTERS.len()] as char;
        let mut parts: Vec<(String, usize)> = Vec::new();
        for &(s, t) in &self.edges {
            let factor = format!("M_{}{}", name(s), name(t));
            match parts.last_mut() {
                Some((prev, count)) if *prev == factor => *count += 1,
                _ => parts.push((factor, 1)),
            }
        }
        parts
            .into_iter()
            .map(|(f, c)| if c == 1 { f } else { format!("{f}^{c}") })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Splits the graph into connected components (ignoring edge direction).
    /// Each component is returned with nodes relabeled to `0..k` in order of
    /// their original ids, and edges in their original relative order.
    /// The observable's value is the product of its components' values:
    /// index sums over disjoint node sets factor.
    pub fn components(&self) -> Vec<GraphObservable> {
        let mut parent: Vec<usize> = (0..self.nodes).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let root = find(parent, parent[x]);
                parent[x] = root;
            }
            parent[x]
        }
        for &(s, t) in &self.edges {
            let (rs, rt) = (find(&mut parent, s), find(&mut parent, t));
            if rs != rt {
                parent[rs] = rt;
            }
        }
        // Group nodes by root, in order of smallest member id.
        let mut roots: Vec<usize> = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for n in 0..self.nodes {
            let r = find(&mut parent, n);
            match roots.iter().position(|&x| x == r) {
                Some(i) => members[i].push(n),
                None => {
                    roots.push(r);
                    members.push(vec![n]);
                }
            }
        }
        let mut local = vec![usize::MAX; self.nodes];
        for group in &members {
            for (li, &n) in group.iter().enumerate() {
                local[n] = li;
            }
        }
        let mut comps: Vec<GraphObservable> = members
            .iter()
            .map(|group| GraphObservable {
                nodes: group.len(),
                edges: Vec::new(),
                id: None,
            })
            .collect();
        for &(s, t) in &self.edges {
            let r = find(&mut parent, s);
            let ci = roots.iter().position(|&x| x == r).unwrap();
            comps[ci].edges.push((local[s], local[t]));
        }
        comps
    }

    /// Canonical edge list of the whole graph: components are canonicalized
    /// individually and concatenated in sorted order with node ids offset.
    /// Two observables are the same polynomial (up to node relabeling) iff
    /// their canonical forms are equal — e.g. the two verbatim copies of the
    /// 3-edge path in the canonical table.
    pub fn canonical_form(&self) -> Vec<(u8, u8)> {
        let mut comp_forms: Vec<(usize, Vec<(u8, u8)>)> = self
            .components()
            .into_iter()
            .map(|c| (c.nodes, canonical_edges(c.nodes, &c.edges)))
            .collect();
        comp_forms.sort();
        let mut out = Vec::with_capacity(self.edges.len());
        let mut offset = 0u8;
        for (n, edges) in comp_forms {
            out.extend(edges.iter().map(|&(s, t)| (s + offset, t + offset)));
            offset += n as u8;
        }
        out
    }
}

/// Canonical (relabeling-minimal) sorted edge list of one connected graph.
///
/// Searches all node relabelings for the lexicographically smallest sorted
/// edge list, pruning with per-node degree signatures. Above
/// `MAX_EXACT_CANON_NODES` the search would be too slow, so a deterministic
/// degree-sort relabeling is used instead; that is still stable across runs,
/// it merely may fail to identify some isomorphic oversized custom graphs.
pub fn canonical_edges(nodes: usize, edges: &[(usize, usize)]) -> Vec<(u8, u8)> {
    assert!(nodes <= u8::MAX as usize, "validated earlier");
    if nodes > MAX_EXACT_CANON_NODES {
        return heuristic_relabel(nodes, edges);
    }
    let mut best: Option<Vec<(u8, u8)>> = None;
    let mut perm: Vec<u8> = (0..nodes as u8).collect();
    // Heap's algorithm over all relabelings; graphs here have <= 9 nodes.
    let mut c = vec![0usize; nodes];
    let mut consider = |perm: &[u8]| {
        let mut relabeled: Vec<(u8, u8)> = edges
            .iter()
            .map(|&(s, t)| (perm[s], perm[t]))
            .collect();
        relabeled.sort_unstable();
        if best.as_ref().is_none_or(|b| relabeled < *b) {
            best = Some(relabeled);
        }
    };
    consider(&perm);
    let mut i = 0;
    while i < nodes {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            consider(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best.unwrap_or_default()
}

/// Deterministic fallback relabeling: sort nodes by (out-degree, in-degree,
/// self-loops, original id) and relabel in that order.
fn heuristic_relabel(nodes: usize, edges: &[(usize, usize)]) -> Vec<(u8, u8)> {
    let mut sig: Vec<(usize, usize, usize, usize)> = (0..nodes).map(|n| (0, 0, 0, n)).collect();
    for &(s, t) in edges {
        sig[s].0 += 1;
        sig[t].1 += 1;
        if s == t {
            sig[s].2 += 1;
        }
    }
    sig.sort_unstable();
    let mut relabel = vec![0u8; nodes];
    for (new, &(_, _, _, old)) in sig.iter().enumerate() {
        relabel[old] = new as u8;
    }
    let mut out: Vec<(u8, u8)> = edges
        .iter()
        .map(|&(s, t)| (relabel[s], relabel[t]))
        .collect();
    out.sort_unstable();
    out
}

/// The embedded 28-row observable table, ids 1..=28, published order.
///
/// Rows 1–2 are the linear observables (trace, total sum); rows 3–13 the
/// eleven independent quadratic observables; rows 14–28 the cubic/quartic
/// extension set. Rows 11, 15, 24, 25 are entrywise powers (repeated edges);
/// rows 27 and 28 are intentionally the same graph (see module docs).
pub fn canonical_table() -> Vec<GraphObservable> {
    let rows: [(usize, &[(usize, usize)]); 28] = [
        (1, &[(0, 0)]),                            // 1: M_ii
        (2, &[(0, 1)]),                            // 2: M_ij
        (2, &[(0, 1), (0, 1)]),                    // 3: M_ij M_ij
        (2, &[(0, 1), (1, 0)]),                    // 4: M_ij M_ji
        (2, &[(0, 0), (0, 1)]),                    // 5: M_ii M_ij
        (2, &[(0, 0), (1, 0)]),                    // 6: M_ii M_ji
        (3, &[(0, 1), (0, 2)]),                    // 7: M_ij M_ik
        (3, &[(0, 1), (2, 1)]),                    // 8: M_ij M_kj
        (3, &[(0, 1), (1, 2)]),                    // 9: M_ij M_jk
        (4, &[(0, 1), (2, 3)]),                    // 10: M_ij M_kl
        (1, &[(0, 0), (0, 0)]),                    // 11: M_ii^2
        (2, &[(0, 0), (1, 1)]),                    // 12: M_ii M_jj
        (3, &[(0, 0), (1, 2)]),                    // 13: M_ii M_jk
        (1, &[(0, 0), (0, 0), (0, 0)]),            // 14: M_ii^3
        (2, &[(0, 1), (0, 1), (0, 1)]),            // 15: M_ij^3
        (3, &[(0, 1), (1, 2), (2, 0)]),            // 16: M_ij M_jk M_ki
        (3, &[(0, 1), (1, 1), (1, 2)]),            // 17: M_ij M_jj M_jk
        (4, &[(0, 1), (2, 2), (3, 3)]),            // 18: M_ij M_kk M_ll
        (4, &[(0, 1), (1, 2), (3, 3)]),            // 19: M_ij M_jk M_ll
        (5, &[(0, 1), (2, 3), (4, 4)]),            // 20: M_ij M_kl M_mm
        (6, &[(0, 1), (2, 3), (4, 5)]),            // 21: M_ij M_kl M_mn
        (7, &[(0, 1), (2, 3), (4, 5), (6, 6)]),    // 22: M_ij M_kl M_mn M_oo
        (8, &[(0, 1), (2, 3), (4, 5), (6, 7)]),    // 23: M_ij M_kl M_mn M_op
        (1, &[(0, 0), (0, 0), (0, 0), (0, 0)]),    // 24: M_ii^4
        (2, &[(0, 1), (0, 1), (0, 1), (0, 1)]),    // 25: M_ij^4
        (6, &[(0, 1), (1, 2), (3, 4), (4, 5)]),    // 26: M_ij M_jk M_lm M_mn
        (4, &[(0, 1), (1, 2), (2, 3)]),            // 27: M_ij M_jk M_kl
        (4, &[(0, 1), (1, 2), (2, 3)]),            // 28: duplicate of 27
    ];
    rows.iter()
        .enumerate()
        .map(|(i, &(n, e))| GraphObservable::with_id(n, e.to_vec(), i as u32 + 1))
        .collect()
}

/// An ordered collection of observables with a set name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservableSet {
    /// One of the canonical names or "custom" for file-supplied sets.
    pub name: String,
    /// Observables in evaluation/report order.
    pub observables: Vec<GraphObservable>,
}

impl ObservableSet {
    /// Number of observables.
    pub fn len(&self) -> usize {
        self.observables.len()
    }

    /// True when the set is empty (possible only for custom sets).
    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    /// Report identifiers: the canonical row id when present, else the
    /// 1-based position within the set.
    pub fn display_ids(&self) -> Vec<u32> {
        self.observables
            .iter()
            .enumerate()
            .map(|(i, o)| o.id.unwrap_or(i as u32 + 1))
            .collect()
    }

    /// Builds a custom set from a JSON array of observables.
    pub fn from_json(json: &str) -> Result<Self> {
        let observables: Vec<GraphObservable> = serde_json::from_str(json)
            .map_err(|e| Error::Ingest(format!("observable set JSON: {e}")))?;
        if observables.is_empty() {
            return Err(Error::Degenerate("observable set file is empty".into()));
        }
        for (i, o) in observables.iter().enumerate() {
            o.validate().map_err(|e| {
                Error::Ingest(format!("observable #{} in custom set: {e}", i + 1))
            })?;
        }
        Ok(ObservableSet { name: "custom".into(), observables })
    }
}

/// Returns one of the named canonical subsets of the 28-row table.
///
/// `"13"` = rows 1–13 (the fitting set: linear + quadratic); `"10"` = rows
/// 14–23; `"15"` = rows 14–28 (the Gaussianity test sets); `"23"` = rows
/// 1–23; `"28"` = rows 1–28.
pub fn canonical_set(name: &str) -> Result<ObservableSet> {
    let table = canonical_table();
    let range = match name {
        "13" => 0..13,
        "10" => 13..23,
        "15" => 13..28,
        "23" => 0..23,
        "28" => 0..28,
        _ => {
            return Err(Error::InvalidInput(format!(
                "unknown observable set {name:?}; expected one of 13, 10, 15, 23, 28"
            )))
        }
    };
    Ok(ObservableSet {
        name: name.to_string(),
        observables: table[range].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_28_rows_with_sequential_ids() {
        let table = canonical_table();
        assert_eq!(table.len(), 28);
        for (i, obs) in table.iter().enumerate() {
            assert_eq!(obs.id, Some(i as u32 + 1));
            obs.validate().unwrap();
        }
    }

    #[test]
    fn named_sets_match_published_slices() {
        assert_eq!(canonical_set("13").unwrap().len(), 13);
        assert_eq!(canonical_set("10").unwrap().len(), 10);
        assert_eq!(canonical_set("15").unwrap().len(), 15);
        assert_eq!(canonical_set("23").unwrap().len(), 23);
        assert_eq!(canonical_set("28").unwrap().len(), 28);
        // The fitting set is two linear rows followed by eleven quadratics.
        let degrees: Vec<usize> = canonical_set("13")
            .unwrap()
            .observables
            .iter()
            .map(|o| o.degree())
            .collect();
        assert_eq!(degrees, [1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2]);
        // The cubic/quartic set of 10 covers every node count 1..=8.
        let ten = canonical_set("10").unwrap();
        assert_eq!(ten.observables[0].id, Some(14));
        let nodes: Vec<usize> = ten.observables.iter().map(|o| o.nodes).collect();
        assert_eq!(nodes, [1, 2, 3, 3, 4, 4, 5, 6, 7, 8]);
        assert!(canonical_set("12").is_err());
    }

    #[test]
    fn row_shapes_match_published_captions() {
        let table = canonical_table();
        // Row 23: four disjoint edges on eight nodes.
        assert_eq!(table[22].nodes, 8);
        assert_eq!(table[22].degree(), 4);
        // Row 14: one node, three self-loops.
        assert_eq!(table[13].nodes, 1);
        assert_eq!(table[13].degree(), 3);
        // Row 16: the 3-cycle.
        assert_eq!(table[15].edges, vec![(0, 1), (1, 2), (2, 0)]);
    }

    #[test]
    fn labels_read_like_index_notation() {
        let table = canonical_table();
        assert_eq!(table[0].label(), "M_ii");
        assert_eq!(table[13].label(), "M_ii^3");
        assert_eq!(table[16].label(), "M_ij M_jj M_jk");
        assert_eq!(table[8].label(), "M_ij M_jk");
    }

    #[test]
    fn rows_27_and_28_share_a_canonical_form() {
        let table = canonical_table();
        assert_eq!(table[26].canonical_form(), table[27].canonical_form());
        // ...but distinct quadratics stay distinct.
        assert_ne!(table[2].canonical_form(), table[3].canonical_form());
    }

    #[test]
    fn canonical_form_is_relabeling_invariant() {
        // The 2-edge path written three different ways.
        let a = GraphObservable::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let b = GraphObservable::new(3, vec![(2, 0), (0, 1)]).unwrap();
        let c = GraphObservable::new(3, vec![(1, 2), (2, 0)]).unwrap();
        assert_eq!(a.canonical_form(), b.canonical_form());
        assert_eq!(a.canonical_form(), c.canonical_form());
        // Direction matters: the 2-in star differs from the 2-out star.
        let star_out = GraphObservable::new(3, vec![(0, 1), (0, 2)]).unwrap();
        let star_in = GraphObservable::new(3, vec![(1, 0), (2, 0)]).unwrap();
        assert_ne!(star_out.canonical_form(), star_in.canonical_form());
    }

    #[test]
    fn components_split_and_relabel() {
        // Row 26: two copies of the 2-edge path.
        let row26 = &canonical_table()[25];
        let comps = row26.components();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].edges, vec![(0, 1), (1, 2)]);
        assert_eq!(comps[1].edges, vec![(0, 1), (1, 2)]);
        // Row 16 is a single component.
        assert_eq!(canonical_table()[15].components().len(), 1);
        // Row 23: four single-edge components.
        assert_eq!(canonical_table()[22].components().len(), 4);
    }

    #[test]
    fn validation_rejects_malformed_graphs() {
        assert!(GraphObservable::new(0, vec![]).is_err());
        assert!(GraphObservable::new(2, vec![]).is_err());
        assert!(GraphObservable::new(2, vec![(0, 2)]).is_err());
        // Node 2 is isolated.
        assert!(GraphObservable::new(3, vec![(0, 1)]).is_err());
    }

    #[test]
    fn json_round_trip_matches_schema() {
        let row9 = &canonical_table()[8];
        let json = serde_json::to_string(row9).unwrap();
        assert_eq!(json, r#"{"nodes":3,"edges":[[0,1],[1,2]],"id":9}"#);
        let back: GraphObservable = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, row9);
        // Custom observables parse without ids.
        let set = ObservableSet::from_json(r#"[{"nodes":1,"edges":[[0,0]]}]"#).unwrap();
        assert_eq!(set.name, "custom");
        assert_eq!(set.observables[0].id, None);
    }
}
