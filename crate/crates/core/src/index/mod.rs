//! Index universes: finite posets and their ordered-tuple spaces, ordinal
//! notations below `ω^ω`, and windowed subsets of `[0, N)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

mod ordinal;
mod window;

pub use ordinal::OrdNotation;
pub use window::{
    almost_subset_cert, ideal_sublattice_a, least_almost_bound, tower_generate, IdealBasisA,
    IdealLattice, ModFiniteCert, Tower, TowerViolation, WindowedSet,
};

pub type NodeId = usize;

/// A finite partial order on nodes `0..len`, stored as its full `≤` relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePoset {
    labels: Vec<String>,
    leq: Vec<Vec<bool>>,
    directed: bool,
}

impl FinitePoset {
    /// Builds the reflexive-transitive closure of `pairs` (each `(a, b)` means
    /// `a ≤ b`) and rejects it unless it is antisymmetric.
    pub fn new(labels: Vec<String>, pairs: &[(NodeId, NodeId)]) -> Result<Self> {
        let n = labels.len();
        let mut seen = std::collections::BTreeSet::new();
        for l in &labels {
            if !seen.insert(l) {
                return Err(Error::Malformed(format!("duplicate node label {l:?}")));
            }
        }
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::Malformed(format!("pair ({a},{b}) out of range")));
            }
            leq[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    for j in 0..n {
                        if leq[k][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if leq[i][j] && leq[j][i] {
                    return Err(Error::NotPartialOrder(format!(
                        "{} and {} are mutually related",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        let directed = (0..n).all(|i| (0..n).all(|j| (0..n).any(|k| leq[i][k] && leq[j][k])));
        Ok(FinitePoset {
            labels,
            leq,
            directed,
        })
    }

    /// Nodes labelled `"0"`, `"1"`, ….
    pub fn with_numbered_nodes(n: usize, pairs: &[(NodeId, NodeId)]) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()).collect(), pairs)
    }

    /// `0 < 1 < … < n-1`.
    pub fn chain(n: usize) -> Self {
        let pairs: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::with_numbered_nodes(n, &pairs).expect("a chain is a partial order")
    }

    pub fn antichain(n: usize) -> Self {
        Self::with_numbered_nodes(n, &[]).expect("an antichain is a partial order")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v]
    }

    pub fn node(&self, label: &str) -> Option<NodeId> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn leq(&self, a: NodeId, b: NodeId) -> bool {
        self.leq[a][b]
    }

    pub fn lt(&self, a: NodeId, b: NodeId) -> bool {
        a != b && self.leq[a][b]
    }

    /// Every pair has an upper bound; for finite posets this is the same as
    /// having a maximum.
    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn maximum(&self) -> Option<NodeId> {
        (0..self.len()).find(|&m| (0..self.len()).all(|v| self.leq[v][m]))
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.len()
    }

    /// All strictly related pairs `(a, b)` with `a < b`, in lexicographic order.
    pub fn strict_pairs(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for a in self.nodes() {
            for b in self.nodes() {
                if self.lt(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// `c` is totally ordered.
    pub fn is_chain(&self, c: &[NodeId]) -> bool {
        c.iter()
            .all(|&a| c.iter().all(|&b| self.leq(a, b) || self.leq(b, a)))
    }

    pub fn is_cofinal(&self, c: &[NodeId]) -> bool {
        self.nodes().all(|v| c.iter().any(|&m| self.leq(v, m)))
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct PosetJson {
    pub nodes: Vec<String>,
    pub pairs: Vec<(String, String)>,
}

impl Serialize for FinitePoset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PosetJson {
            nodes: self.labels.clone(),
            pairs: self
                .strict_pairs()
                .into_iter()
                .map(|(a, b)| (self.labels[a].clone(), self.labels[b].clone()))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FinitePoset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PosetJson::deserialize(d)?;
        let index: BTreeMap<&str, usize> = raw
            .nodes
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let mut pairs = Vec::new();
        for (a, b) in &raw.pairs {
            let lookup = |l: &String| {
                index
                    .get(l.as_str())
                    .copied()
                    .ok_or_else(|| D::Error::custom(format!("unknown node {l:?}")))
            };
            pairs.push((lookup(a)?, lookup(b)?));
        }
        FinitePoset::new(raw.nodes.clone(), &pairs).map_err(D::Error::custom)
    }
}

/// A weakly increasing tuple `(λ₀ ≤ λ₁ ≤ … ≤ λₙ)`; its arity is `n = len - 1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OrdTuple(pub Vec<NodeId>);

impl OrdTuple {
    pub fn new(entries: Vec<NodeId>) -> Self {
        OrdTuple(entries)
    }

    pub fn entries(&self) -> &[NodeId] {
        &self.0
    }

    /// Arity `n` of an `(n+1)`-tuple.
    pub fn arity(&self) -> usize {
        self.0.len() - 1
    }

    pub fn first(&self) -> NodeId {
        self.0[0]
    }

    pub fn last(&self) -> NodeId {
        *self.0.last().expect("tuples are nonempty")
    }

    pub fn is_ordered(&self, p: &FinitePoset) -> bool {
        !self.0.is_empty()
            && self.0.iter().all(|&v| v < p.len())
            && self.0.windows(2).all(|w| p.leq(w[0], w[1]))
    }

    /// Appends `v` at the end.
    pub fn push(&self, v: NodeId) -> OrdTuple {
        let mut e = self.0.clone();
        e.push(v);
        OrdTuple(e)
    }

    pub fn without_last(&self) -> OrdTuple {
        OrdTuple(self.0[..self.0.len() - 1].to_vec())
    }
}

/// All weakly increasing `(n+1)`-tuples, lexicographic in node numbering.
pub fn tuples(p: &FinitePoset, n: usize) -> Vec<OrdTuple> {
    fn extend(p: &FinitePoset, len: usize, cur: &mut Vec<NodeId>, out: &mut Vec<OrdTuple>) {
        if cur.len() == len {
            out.push(OrdTuple(cur.clone()));
            return;
        }
        for v in p.nodes() {
            if cur.last().map_or(true, |&u| p.leq(u, v)) {
                cur.push(v);
                extend(p, len, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(p, n + 1, &mut Vec::new(), &mut out);
    out
}

/// Deletes entry `i`: `(λ₀,…,λᵢ₋₁,λᵢ₊₁,…,λₙ)`.
pub fn face(t: &OrdTuple, i: usize) -> Result<OrdTuple> {
    if t.0.len() < 2 {
        return Err(Error::Precondition("face of an arity-0 tuple".into()));
    }
    if i >= t.0.len() {
        return Err(Error::Precondition(format!(
            "face index {i} out of range for arity {}",
            t.arity()
        )));
    }
    let mut e = t.0.clone();
    e.remove(i);
    Ok(OrdTuple(e))
}
