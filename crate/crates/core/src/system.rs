//! Inverse systems of abelian groups over finite posets.
//!
//! Every node carries a free module (over `ℤ` or `ℤ₂`) with a labelled basis,
//! and every related pair `λ ≤ μ` carries the structure map `p^μ_λ : G_μ → G_λ`
//! as a sparse matrix with `dim G_λ` rows and `dim G_μ` columns.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coeffs::{rank, smith_normal_form, CoeffDomain, SparseMatrix};
use crate::index::{tuples, FinitePoset, ModFiniteCert, NodeId, WindowedSet};
use crate::{Error, Result};

/// Parameters of a Boolean system built by [`mitchell_system`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MitchellShape {
    pub level: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemSpec {
    poset: FinitePoset,
    basis: Vec<Vec<String>>,
    edges: BTreeMap<(NodeId, NodeId), SparseMatrix>,
    domain: CoeffDomain,
    flasque: bool,
    mitchell: Option<MitchellShape>,
    carriers: Option<Vec<WindowedSet>>,
}

impl SystemSpec {
    /// Builds a system from the maps on some strictly related pairs; missing
    /// pairs are filled in by composition, identities are added, and the
    /// result is checked for functoriality.
    pub fn new(
        poset: FinitePoset,
        basis: Vec<Vec<String>>,
        given: BTreeMap<(NodeId, NodeId), SparseMatrix>,
        domain: CoeffDomain,
    ) -> Result<Self> {
        let n = poset.len();
        if basis.len() != n {
            return Err(Error::Dimension(format!(
                "{} basis lists for {n} nodes",
                basis.len()
            )));
        }
        for (v, b) in basis.iter().enumerate() {
            let mut seen = std::collections::BTreeSet::new();
            if let Some(dup) = b.iter().find(|l| !seen.insert(*l)) {
                return Err(Error::Malformed(format!(
                    "basis label {dup:?} repeated at node {}",
                    poset.label(v)
                )));
            }
        }
        let mut edges = BTreeMap::new();
        for ((lo, hi), m) in given {
            if lo >= n || hi >= n || !poset.leq(lo, hi) {
                return Err(Error::Unrelated(lo, hi));
            }
            if m.rows() != basis[lo].len() || m.cols() != basis[hi].len() {
                return Err(Error::Dimension(format!(
                    "map {}≤{} is {}×{}, expected {}×{}",
                    poset.label(lo),
                    poset.label(hi),
                    m.rows(),
                    m.cols(),
                    basis[lo].len(),
                    basis[hi].len()
                )));
            }
            edges.insert((lo, hi), m.reduced(domain));
        }
        for v in 0..n {
            let id = SparseMatrix::identity(basis[v].len());
            match edges.get(&(v, v)) {
                Some(m) if *m != id => {
                    return Err(Error::Malformed(format!(
                        "map on {}≤{} is not the identity",
                        poset.label(v),
                        poset.label(v)
                    )))
                }
                _ => {
                    edges.insert((v, v), id);
                }
            }
        }
        loop {
            let missing: Vec<(NodeId, NodeId)> = poset
                .strict_pairs()
                .into_iter()
                .filter(|p| !edges.contains_key(p))
                .collect();
            if missing.is_empty() {
                break;
            }
            let mut progress = false;
            for (lo, hi) in missing {
                let via = poset.nodes().find(|&m| {
                    poset.lt(lo, m)
                        && poset.lt(m, hi)
                        && edges.contains_key(&(lo, m))
                        && edges.contains_key(&(m, hi))
                });
                if let Some(m) = via {
                    let c = edges[&(lo, m)].mul(&edges[&(m, hi)])?.reduced(domain);
                    edges.insert((lo, hi), c);
                    progress = true;
                }
            }
            if !progress {
                return Err(Error::Malformed("some related pair has no structure map".into()));
            }
        }
        let mut s = SystemSpec {
            poset,
            basis,
            edges,
            domain,
            flasque: false,
            mitchell: None,
            carriers: None,
        };
        s.check_functorial()?;
        s.flasque = s.compute_flasque();
        Ok(s)
    }

    /// Every group is `dim`-dimensional and every map is the identity.
    pub fn uniform(poset: FinitePoset, dim: usize, domain: CoeffDomain) -> Self {
        let basis = vec![(0..dim).map(|i| format!("e{i}")).collect(); poset.len()];
        let edges = poset
            .strict_pairs()
            .into_iter()
            .map(|p| (p, SparseMatrix::identity(dim)))
            .collect();
        SystemSpec::new(poset, basis, edges, domain).expect("identity maps are functorial")
    }

    /// The same groups and maps read over another coefficient domain.
    pub fn with_domain(&self, domain: CoeffDomain) -> Result<SystemSpec> {
        let given = self.edges.iter().filter(|((lo, hi), _)| lo != hi).map(|(k, m)| (*k, m.clone())).collect();
        SystemSpec::new(self.poset.clone(), self.basis.clone(), given, domain)
    }

    pub fn poset(&self) -> &FinitePoset {
        &self.poset
    }

    pub fn domain(&self) -> CoeffDomain {
        self.domain
    }

    pub fn dim(&self, v: NodeId) -> usize {
        self.basis[v].len()
    }

    pub fn basis(&self, v: NodeId) -> &[String] {
        &self.basis[v]
    }

    pub fn basis_index(&self, v: NodeId, label: &str) -> Option<usize> {
        self.basis[v].iter().position(|l| l == label)
    }

    /// `p^hi_lo`, present exactly when `lo ≤ hi`.
    pub fn edge(&self, lo: NodeId, hi: NodeId) -> Option<&SparseMatrix> {
        self.edges.get(&(lo, hi))
    }

    pub fn edges(&self) -> &BTreeMap<(NodeId, NodeId), SparseMatrix> {
        &self.edges
    }

    pub fn is_flasque(&self) -> bool {
        self.flasque
    }

    pub fn mitchell_shape(&self) -> Option<MitchellShape> {
        self.mitchell
    }

    /// The windowed set at each node, for systems built by [`ideal_system`].
    pub fn carriers(&self) -> Option<&[WindowedSet]> {
        self.carriers.as_deref()
    }

    pub fn total_dim(&self) -> usize {
        self.basis.iter().map(Vec::len).sum()
    }

    /// `p^μ_λ ∘ p^ν_μ = p^ν_λ` for all `λ ≤ μ ≤ ν`.
    pub fn check_functorial(&self) -> Result<()> {
        let n = self.poset.len();
        for lo in 0..n {
            for mid in 0..n {
                if !self.poset.leq(lo, mid) {
                    continue;
                }
                for hi in 0..n {
                    if !self.poset.leq(mid, hi) {
                        continue;
                    }
                    let composed = self.edges[&(lo, mid)]
                        .mul(&self.edges[&(mid, hi)])?
                        .reduced(self.domain);
                    let direct = &self.edges[&(lo, hi)];
                    if composed != *direct {
                        let basis = (0..self.dim(hi))
                            .find(|&c| composed.column(c) != direct.column(c))
                            .unwrap_or(0);
                        return Err(Error::NotFunctorial {
                            lower: lo,
                            middle: mid,
                            upper: hi,
                            basis,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn compute_flasque(&self) -> bool {
        self.edges.iter().all(|(&(lo, hi), m)| {
            lo == hi
                || match self.domain {
                    CoeffDomain::Mod2 => rank(m, CoeffDomain::Mod2) == m.rows(),
                    CoeffDomain::Integers => {
                        let d = smith_normal_form(m).diagonal;
                        d.iter().filter(|x| x.abs().is_one()).count() == m.rows()
                    }
                }
        })
    }

    /// The subsystem on the first `k` nodes.
    pub fn restrict_prefix(&self, k: usize) -> Result<SystemSpec> {
        if k > self.poset.len() {
            return Err(Error::Precondition(format!(
                "cannot restrict {} nodes to {k}",
                self.poset.len()
            )));
        }
        let pairs: Vec<_> = self
            .poset
            .strict_pairs()
            .into_iter()
            .filter(|&(a, b)| a < k && b < k)
            .collect();
        let poset = FinitePoset::new(self.poset.labels()[..k].to_vec(), &pairs)?;
        let edges = pairs.iter().map(|p| (*p, self.edges[p].clone())).collect();
        let mut s = SystemSpec::new(poset, self.basis[..k].to_vec(), edges, self.domain)?;
        s.carriers = self.carriers.as_ref().map(|c| c[..k].to_vec());
        Ok(s)
    }
}

/// An element of the group at `node`, as sparse coordinates in its basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Elem {
    pub node: NodeId,
    coords: BTreeMap<usize, BigInt>,
}

impl Elem {
    pub fn zero(node: NodeId) -> Self {
        Elem {
            node,
            coords: BTreeMap::new(),
        }
    }

    /// Normalizes coefficients into `domain` and drops zeros.
    pub fn new<I: IntoIterator<Item = (usize, BigInt)>>(
        node: NodeId,
        coords: I,
        domain: CoeffDomain,
    ) -> Self {
        let mut e = Elem::zero(node);
        for (i, v) in coords {
            e.add_coord(i, &v, domain);
        }
        e
    }

    pub fn basis_vector(node: NodeId, i: usize) -> Self {
        Elem {
            node,
            coords: BTreeMap::from([(i, BigInt::one())]),
        }
    }

    pub fn from_dense(node: NodeId, v: &[BigInt], domain: CoeffDomain) -> Self {
        Elem::new(node, v.iter().cloned().enumerate(), domain)
    }

    pub fn to_dense(&self, dim: usize) -> Vec<BigInt> {
        let mut v = vec![BigInt::zero(); dim];
        for (&i, c) in &self.coords {
            v[i] = c.clone();
        }
        v
    }

    pub fn coords(&self) -> &BTreeMap<usize, BigInt> {
        &self.coords
    }

    pub fn coord(&self, i: usize) -> BigInt {
        self.coords.get(&i).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.coords.keys().copied()
    }

    pub fn add_coord(&mut self, i: usize, v: &BigInt, domain: CoeffDomain) {
        let next = domain.normalize(self.coord(i) + v);
        if next.is_zero() {
            self.coords.remove(&i);
        } else {
            self.coords.insert(i, next);
        }
    }

    fn same_node(&self, other: &Elem) -> Result<()> {
        if self.node != other.node {
            return Err(Error::Unrelated(self.node, other.node));
        }
        Ok(())
    }

    pub fn add(&self, other: &Elem, domain: CoeffDomain) -> Result<Elem> {
        self.same_node(other)?;
        let mut out = self.clone();
        for (&i, v) in &other.coords {
            out.add_coord(i, v, domain);
        }
        Ok(out)
    }

    pub fn scale(&self, k: &BigInt, domain: CoeffDomain) -> Elem {
        Elem::new(self.node, self.coords.iter().map(|(&i, v)| (i, v * k)), domain)
    }

    pub fn neg(&self, domain: CoeffDomain) -> Elem {
        self.scale(&BigInt::from(-1), domain)
    }

    pub fn sub(&self, other: &Elem, domain: CoeffDomain) -> Result<Elem> {
        self.add(&other.neg(domain), domain)
    }
}

/// `p^{e.node}_target(e)`.
pub fn project(s: &SystemSpec, e: &Elem, target: NodeId) -> Result<Elem> {
    let m = s.edge(target, e.node).ok_or(Error::Unrelated(target, e.node))?;
    let mut out = Elem::zero(target);
    for (r, c, v) in m.entries() {
        if let Some(x) = e.coords.get(&c) {
            out.add_coord(r, &(v * x), s.domain);
        }
    }
    Ok(out)
}

pub(crate) fn mitchell_label(t: &[usize]) -> String {
    t.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

pub(crate) fn parse_mitchell_label(s: &str) -> Option<Vec<usize>> {
    s.split(',').map(|p| p.parse().ok()).collect()
}

/// The Boolean system on the chain `0 < … < size-1` whose group at `α` is
/// free on the weakly increasing `(level+1)`-tuples from `[α, size)`, with
/// inclusions as maps.
pub fn mitchell_system(level: usize, size: usize) -> SystemSpec {
    let chain = FinitePoset::chain(size);
    let all: Vec<Vec<usize>> = tuples(&chain, level).into_iter().map(|t| t.0).collect();
    let basis: Vec<Vec<String>> = (0..size)
        .map(|a| {
            all.iter()
                .filter(|t| t[0] >= a)
                .map(|t| mitchell_label(t))
                .collect()
        })
        .collect();
    let mut edges = BTreeMap::new();
    for (lo, hi) in chain.strict_pairs() {
        let mut m = SparseMatrix::zeros(basis[lo].len(), basis[hi].len());
        for (c, label) in basis[hi].iter().enumerate() {
            let r = basis[lo].iter().position(|l| l == label).expect("inclusion");
            m.set(r, c, BigInt::one());
        }
        edges.insert((lo, hi), m);
    }
    let mut s = SystemSpec::new(chain, basis, edges, CoeffDomain::Mod2)
        .expect("inclusions are functorial");
    s.mitchell = Some(MitchellShape { level, size });
    s
}

/// The system of coordinate projections `⊕_{x∈a} G_x → ⊕_{x∈b} G_x` for
/// `b ⊆ a`, over the given sets ordered by inclusion.
pub fn ideal_system(sets: &[WindowedSet], domain: CoeffDomain) -> Result<SystemSpec> {
    let labels = sets.iter().map(|s| s.to_string()).collect();
    ideal_system_labeled(sets, labels, domain)
}

pub fn ideal_system_labeled(
    sets: &[WindowedSet],
    labels: Vec<String>,
    domain: CoeffDomain,
) -> Result<SystemSpec> {
    if let Some(w) = sets.first().map(WindowedSet::window) {
        if let Some(bad) = sets.iter().find(|s| s.window() != w) {
            return Err(Error::WindowMismatch {
                left: w,
                right: bad.window(),
            });
        }
    }
    for (i, a) in sets.iter().enumerate() {
        if sets[..i].contains(a) {
            return Err(Error::Malformed(format!("set {a} occurs twice")));
        }
    }
    let mut pairs = Vec::new();
    for (i, a) in sets.iter().enumerate() {
        for (j, b) in sets.iter().enumerate() {
            if i != j && a.is_subset(b) {
                pairs.push((i, j));
            }
        }
    }
    let poset = FinitePoset::new(labels, &pairs)?;
    let members: Vec<Vec<usize>> = sets.iter().map(|s| s.members().collect()).collect();
    let basis = members
        .iter()
        .map(|m| m.iter().map(|x| x.to_string()).collect())
        .collect();
    let mut edges = BTreeMap::new();
    for &(lo, hi) in &pairs {
        let mut m = SparseMatrix::zeros(members[lo].len(), members[hi].len());
        for (c, x) in members[hi].iter().enumerate() {
            if let Ok(r) = members[lo].binary_search(x) {
                m.set(r, c, BigInt::one());
            }
        }
        edges.insert((lo, hi), m);
    }
    let mut s = SystemSpec::new(poset, basis, edges, domain)?;
    s.carriers = Some(sets.to_vec());
    Ok(s)
}

/// An element of `P_a / G_a` on a window: a representative function on the
/// members of `a`, meaningful from `cert.bound` on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QElem {
    pub node: NodeId,
    pub window: usize,
    pub rep: BTreeMap<usize, BigInt>,
    pub cert: ModFiniteCert,
}

impl QElem {
    pub fn new(node: NodeId, window: usize, rep: BTreeMap<usize, BigInt>) -> Self {
        QElem {
            node,
            window,
            rep,
            cert: ModFiniteCert { bound: 0 },
        }
    }

    pub fn value(&self, x: usize) -> BigInt {
        self.rep.get(&x).cloned().unwrap_or_default()
    }
}

/// Least `m ≤ N/2` (and at least both certificate bounds) above which the
/// representatives agree, or `None`.
pub fn q_equal(x: &QElem, y: &QElem) -> Result<Option<ModFiniteCert>> {
    if x.node != y.node {
        return Err(Error::Unrelated(x.node, y.node));
    }
    if x.window != y.window {
        return Err(Error::WindowMismatch {
            left: x.window,
            right: y.window,
        });
    }
    let differ = x
        .rep
        .keys()
        .chain(y.rep.keys())
        .filter(|&&p| x.value(p) != y.value(p))
        .max()
        .map_or(0, |p| p + 1);
    let bound = differ.max(x.cert.bound).max(y.cert.bound);
    let cert = ModFiniteCert { bound };
    Ok(cert.within_cap(x.window).then_some(cert))
}

/// A random functorial system on `poset`.
///
/// Each of `max_dim` basis labels lives on a convex set of nodes; on an edge
/// the label maps to `±2^k` times itself when present below and to `0`
/// otherwise, with exponents and signs chosen so that composites agree.
pub fn random_system<R: Rng>(
    rng: &mut R,
    poset: FinitePoset,
    max_dim: usize,
    domain: CoeffDomain,
) -> SystemSpec {
    let n = poset.len();
    let mut support = vec![vec![false; max_dim]; n];
    let mut weight = vec![vec![0u32; max_dim]; n];
    let mut sign = vec![vec![1i64; max_dim]; n];
    for s in 0..max_dim {
        let seeds: Vec<NodeId> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        for v in 0..n {
            support[v][s] = seeds.iter().any(|&a| poset.leq(a, v))
                && seeds.iter().any(|&b| poset.leq(v, b));
        }
        // weights decrease along the order: count of nodes strictly below
        let scale: Vec<u32> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        for v in 0..n {
            weight[v][s] = (0..n)
                .filter(|&u| poset.lt(v, u))
                .map(|u| scale[u])
                .sum();
            sign[v][s] = if rng.gen_bool(0.5) { 1 } else { -1 };
        }
    }
    let labels: Vec<Vec<usize>> = (0..n)
        .map(|v| (0..max_dim).filter(|&s| support[v][s]).collect())
        .collect();
    let basis = labels
        .iter()
        .map(|l| l.iter().map(|s| format!("s{s}")).collect())
        .collect();
    let mut edges = BTreeMap::new();
    for (lo, hi) in poset.strict_pairs() {
        let mut m = SparseMatrix::zeros(labels[lo].len(), labels[hi].len());
        for (c, &s) in labels[hi].iter().enumerate() {
            if let Some(r) = labels[lo].iter().position(|&t| t == s) {
                let k = weight[lo][s] - weight[hi][s];
                let v = BigInt::from(sign[lo][s] * sign[hi][s]) << k as usize;
                m.set(r, c, v);
            }
        }
        edges.insert((lo, hi), m);
    }
    SystemSpec::new(poset, basis, edges, domain).expect("random systems are functorial")
}

/// A random poset on `n` nodes whose order extends the node numbering.
pub fn random_poset<R: Rng>(rng: &mut R, n: usize, density: f64) -> FinitePoset {
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(density) {
                pairs.push((a, b));
            }
        }
    }
    FinitePoset::with_numbered_nodes(n, &pairs).expect("acyclic by construction")
}

/// The square `a₀, a₁ < b₀, b₁` with no top.
pub fn square_without_top() -> FinitePoset {
    FinitePoset::new(
        vec!["a0".into(), "a1".into(), "b0".into(), "b1".into()],
        &[(0, 2), (0, 3), (1, 2), (1, 3)],
    )
    .expect("the square is a partial order")
}

/// The square with a top `t` added above `b₀, b₁`.
pub fn square_with_top() -> FinitePoset {
    FinitePoset::new(
        ["a0", "a1", "b0", "b1", "t"].iter().map(|s| s.to_string()).collect(),
        &[(0, 2), (0, 3), (1, 2), (1, 3), (2, 4), (3, 4)],
    )
    .expect("the square with a top is a partial order")
}

#[derive(Serialize, Deserialize)]
struct SystemJson {
    poset: FinitePoset,
    #[serde(rename = "nodeBasis")]
    node_basis: BTreeMap<String, Vec<String>>,
    edges: BTreeMap<String, BTreeMap<String, Vec<(String, String)>>>,
    domain: CoeffDomain,
}

impl Serialize for SystemSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let p = &self.poset;
        let node_basis = p
            .nodes()
            .map(|v| (p.label(v).to_string(), self.basis[v].clone()))
            .collect();
        let mut edges = BTreeMap::new();
        for ((lo, hi), m) in &self.edges {
            if lo == hi {
                continue;
            }
            let mut images: BTreeMap<String, Vec<(String, String)>> = self.basis[*hi]
                .iter()
                .map(|l| (l.clone(), Vec::new()))
                .collect();
            for (r, c, v) in m.entries() {
                images
                    .get_mut(&self.basis[*hi][c])
                    .expect("column label")
                    .push((self.basis[*lo][r].clone(), v.to_string()));
            }
            edges.insert(format!("{}≤{}", p.label(*lo), p.label(*hi)), images);
        }
        SystemJson {
            poset: p.clone(),
            node_basis,
            edges,
            domain: self.domain,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SystemSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = SystemJson::deserialize(d)?;
        system_from_json(raw).map_err(D::Error::custom)
    }
}

fn system_from_json(raw: SystemJson) -> Result<SystemSpec> {
    let p = raw.poset;
    let mut basis = Vec::new();
    for v in p.nodes() {
        basis.push(
            raw.node_basis
                .get(p.label(v))
                .cloned()
                .ok_or_else(|| Error::Malformed(format!("no basis for node {}", p.label(v))))?,
        );
    }
    let mut given = BTreeMap::new();
    for (key, images) in raw.edges {
        let (lo, hi) = key
            .split_once('≤')
            .ok_or_else(|| Error::Malformed(format!("edge key {key:?}")))?;
        let node = |l: &str| {
            p.node(l)
                .ok_or_else(|| Error::Malformed(format!("unknown node {l:?}")))
        };
        let (lo, hi) = (node(lo)?, node(hi)?);
        if lo == hi {
            continue;
        }
        let mut m = SparseMatrix::zeros(basis[lo].len(), basis[hi].len());
        for (src, targets) in images {
            let c = basis[hi]
                .iter()
                .position(|l| *l == src)
                .ok_or_else(|| Error::Malformed(format!("unknown basis label {src:?}")))?;
            for (tgt, coeff) in targets {
                let r = basis[lo]
                    .iter()
                    .position(|l| *l == tgt)
                    .ok_or_else(|| Error::Malformed(format!("unknown basis label {tgt:?}")))?;
                let v: BigInt = coeff
                    .parse()
                    .map_err(|_| Error::Malformed(format!("bad coefficient {coeff:?}")))?;
                m.add_to(r, c, &v);
            }
        }
        given.insert((lo, hi), m);
    }
    SystemSpec::new(p, basis, given, raw.domain)
}

/// Shared handle used by cochains.
pub type SystemRef = Arc<SystemSpec>;
