//! Cochains `x̄ ∈ 𝐆^(n)` and the operators acting on them.
//!
//! A cochain of arity `n` assigns to each weakly increasing `(n+1)`-tuple
//! `λ̄` an element of `G_{λ₀}`; missing tuples are zero.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::coeffs::{CoeffDomain, SparseMatrix, Vector};
use crate::index::{face, tuples, NodeId, OrdTuple};
use crate::system::{
    mitchell_label, mitchell_system, parse_mitchell_label, project, Elem, QElem, SystemRef,
    SystemSpec,
};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Cochain {
    system: SystemRef,
    arity: usize,
    entries: BTreeMap<OrdTuple, Elem>,
}

impl PartialEq for Cochain {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity
            && self.entries == other.entries
            && same_system(&self.system, &other.system)
    }
}

impl Eq for Cochain {}

pub(crate) fn same_system(a: &SystemRef, b: &SystemRef) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub(crate) fn sign(i: usize) -> BigInt {
    if i % 2 == 0 {
        BigInt::one()
    } else {
        -BigInt::one()
    }
}

impl Cochain {
    pub fn zero(system: SystemRef, arity: usize) -> Self {
        Cochain {
            system,
            arity,
            entries: BTreeMap::new(),
        }
    }

    /// Validates tuples and element nodes; zero entries are dropped.
    pub fn from_entries<I: IntoIterator<Item = (OrdTuple, Elem)>>(
        system: SystemRef,
        arity: usize,
        entries: I,
    ) -> Result<Self> {
        let mut c = Cochain::zero(system, arity);
        for (t, e) in entries {
            c.add_entry(t, &e)?;
        }
        Ok(c)
    }

    pub fn system(&self) -> &SystemRef {
        &self.system
    }

    pub fn domain(&self) -> CoeffDomain {
        self.system.domain()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn entries(&self) -> &BTreeMap<OrdTuple, Elem> {
        &self.entries
    }

    pub fn get(&self, t: &OrdTuple) -> Elem {
        self.entries
            .get(t)
            .cloned()
            .unwrap_or_else(|| Elem::zero(t.first()))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    fn check_entry(&self, t: &OrdTuple, e: &Elem) -> Result<()> {
        if t.0.len() != self.arity + 1 {
            return Err(Error::Arity {
                expected: self.arity,
                found: t.0.len().saturating_sub(1),
            });
        }
        if !t.is_ordered(self.system.poset()) {
            return Err(Error::Malformed(format!("tuple {:?} is not ordered", t.0)));
        }
        if e.node != t.first() {
            return Err(Error::Malformed(format!(
                "entry at {:?} lives at node {} instead of {}",
                t.0,
                e.node,
                t.first()
            )));
        }
        if let Some(i) = e.support().find(|&i| i >= self.system.dim(e.node)) {
            return Err(Error::Dimension(format!("basis index {i} at node {}", e.node)));
        }
        Ok(())
    }

    /// Adds `e` to the entry at `t`.
    pub fn add_entry(&mut self, t: OrdTuple, e: &Elem) -> Result<()> {
        self.check_entry(&t, e)?;
        let next = self.get(&t).add(e, self.domain())?;
        if next.is_zero() {
            self.entries.remove(&t);
        } else {
            self.entries.insert(t, next);
        }
        Ok(())
    }

    pub fn set(&mut self, t: OrdTuple, e: Elem) -> Result<()> {
        self.check_entry(&t, &e)?;
        let e = Elem::new(e.node, e.coords().clone(), self.domain());
        if e.is_zero() {
            self.entries.remove(&t);
        } else {
            self.entries.insert(t, e);
        }
        Ok(())
    }

    fn compatible(&self, other: &Cochain) -> Result<()> {
        if !same_system(&self.system, &other.system) {
            return Err(Error::SystemMismatch);
        }
        if self.arity != other.arity {
            return Err(Error::Arity {
                expected: self.arity,
                found: other.arity,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Cochain) -> Result<Cochain> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (t, e) in &other.entries {
            out.add_entry(t.clone(), e)?;
        }
        Ok(out)
    }

    pub fn scale(&self, k: &BigInt) -> Cochain {
        let d = self.domain();
        Cochain {
            system: self.system.clone(),
            arity: self.arity,
            entries: self
                .entries
                .iter()
                .map(|(t, e)| (t.clone(), e.scale(k, d)))
                .filter(|(_, e)| !e.is_zero())
                .collect(),
        }
    }

    pub fn neg(&self) -> Cochain {
        self.scale(&-BigInt::one())
    }

    pub fn sub(&self, other: &Cochain) -> Result<Cochain> {
        self.add(&other.neg())
    }

    /// Moves the cochain into `target`, matching nodes and basis elements by
    /// label. Tuples through nodes missing from `target` are dropped when
    /// `drop_missing` is set and rejected otherwise.
    pub fn transport(&self, target: SystemRef, drop_missing: bool) -> Result<Cochain> {
        let src = &self.system;
        let node_map: Vec<Option<NodeId>> = src
            .poset()
            .nodes()
            .map(|v| target.poset().node(src.poset().label(v)))
            .collect();
        let mut out = Cochain::zero(target.clone(), self.arity);
        for (t, e) in &self.entries {
            let mapped: Option<Vec<NodeId>> = t.0.iter().map(|&v| node_map[v]).collect();
            let Some(mapped) = mapped else {
                if drop_missing {
                    continue;
                }
                return Err(Error::SystemMismatch);
            };
            let node = mapped[0];
            let mut coords = Vec::new();
            for (i, v) in e.coords() {
                let label = &src.basis(e.node)[*i];
                let j = target
                    .basis_index(node, label)
                    .ok_or_else(|| Error::Malformed(format!("basis element {label:?} has no image")))?;
                coords.push((j, v.clone()));
            }
            out.add_entry(OrdTuple(mapped), &Elem::new(node, coords, target.domain()))?;
        }
        Ok(out)
    }

    /// Support size summed over all entries.
    pub fn weight(&self) -> usize {
        self.entries.values().map(|e| e.coords().len()).sum()
    }

    pub fn to_json(&self, system_ref: &str) -> Value {
        let p = self.system.poset();
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|(t, e)| {
                let tuple: Vec<&str> = t.0.iter().map(|&v| p.label(v)).collect();
                let elem: serde_json::Map<String, Value> = e
                    .coords()
                    .iter()
                    .map(|(i, c)| (self.system.basis(e.node)[*i].clone(), Value::String(c.to_string())))
                    .collect();
                json!({ "tuple": tuple, "elem": elem })
            })
            .collect();
        json!({ "system-ref": system_ref, "arity": self.arity, "entries": entries })
    }

    pub fn from_json(v: &Value, system: SystemRef) -> Result<Cochain> {
        let bad = |what: &str| Error::Malformed(format!("cochain json: {what}"));
        let arity = v
            .get("arity")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing arity"))? as usize;
        let mut c = Cochain::zero(system.clone(), arity);
        for entry in v
            .get("entries")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing entries"))?
        {
            let tuple = entry
                .get("tuple")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("entry without tuple"))?
                .iter()
                .map(|l| {
                    l.as_str()
                        .and_then(|l| system.poset().node(l))
                        .ok_or_else(|| bad("unknown node in tuple"))
                })
                .collect::<Result<Vec<_>>>()?;
            if tuple.is_empty() {
                return Err(bad("empty tuple"));
            }
            let node = tuple[0];
            let mut coords = Vec::new();
            for (label, coeff) in entry
                .get("elem")
                .and_then(Value::as_object)
                .ok_or_else(|| bad("entry without elem"))?
            {
                let i = system
                    .basis_index(node, label)
                    .ok_or_else(|| bad("unknown basis label"))?;
                let coeff: BigInt = match coeff {
                    Value::String(s) => s.parse().map_err(|_| bad("bad coefficient"))?,
                    Value::Number(n) => n
                        .as_i64()
                        .map(BigInt::from)
                        .ok_or_else(|| bad("bad coefficient"))?,
                    _ => return Err(bad("bad coefficient")),
                };
                coords.push((i, coeff));
            }
            c.add_entry(OrdTuple(tuple), &Elem::new(node, coords, system.domain()))?;
        }
        Ok(c)
    }
}

/// Coordinates of the arity-`n` cochains of a system as one long vector.
#[derive(Debug, Clone)]
pub struct CochainSpace {
    system: SystemRef,
    arity: usize,
    tuples: Vec<OrdTuple>,
    offsets: Vec<usize>,
    index: HashMap<OrdTuple, usize>,
    dim: usize,
}

impl CochainSpace {
    pub fn new(system: SystemRef, arity: usize) -> Self {
        let tuples = tuples(system.poset(), arity);
        let mut offsets = Vec::with_capacity(tuples.len());
        let mut dim = 0;
        for t in &tuples {
            offsets.push(dim);
            dim += system.dim(t.first());
        }
        let index = tuples.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        CochainSpace {
            system,
            arity,
            tuples,
            offsets,
            index,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &[OrdTuple] {
        &self.tuples
    }

    pub fn system(&self) -> &SystemRef {
        &self.system
    }

    /// Position of coordinate `basis` of the entry at `t`.
    pub fn position(&self, t: &OrdTuple, basis: usize) -> Option<usize> {
        self.index.get(t).map(|&i| self.offsets[i] + basis)
    }

    /// Tuple and basis index at a vector position.
    pub fn coordinate(&self, pos: usize) -> (&OrdTuple, usize) {
        let i = self.offsets.partition_point(|&o| o <= pos) - 1;
        (&self.tuples[i], pos - self.offsets[i])
    }

    pub fn to_vector(&self, c: &Cochain) -> Result<Vector> {
        if !same_system(&self.system, &c.system) {
            return Err(Error::SystemMismatch);
        }
        if c.arity != self.arity {
            return Err(Error::Arity {
                expected: self.arity,
                found: c.arity,
            });
        }
        let mut v = vec![BigInt::zero(); self.dim];
        for (t, e) in &c.entries {
            for (i, x) in e.coords() {
                v[self.position(t, *i).expect("validated tuple")] = x.clone();
            }
        }
        Ok(v)
    }

    pub fn from_vector(&self, v: &[BigInt]) -> Result<Cochain> {
        if v.len() != self.dim {
            return Err(Error::Dimension(format!(
                "vector of length {} for a space of dimension {}",
                v.len(),
                self.dim
            )));
        }
        let d = self.system.domain();
        let mut entries = BTreeMap::new();
        for (k, t) in self.tuples.iter().enumerate() {
            let lo = self.offsets[k];
            let hi = lo + self.system.dim(t.first());
            let e = Elem::from_dense(t.first(), &v[lo..hi], d);
            if !e.is_zero() {
                entries.insert(t.clone(), e);
            }
        }
        Ok(Cochain {
            system: self.system.clone(),
            arity: self.arity,
            entries,
        })
    }

    pub fn unit(&self, pos: usize) -> Cochain {
        let (t, b) = self.coordinate(pos);
        let mut entries = BTreeMap::new();
        entries.insert(t.clone(), Elem::basis_vector(t.first(), b));
        Cochain {
            system: self.system.clone(),
            arity: self.arity,
            entries,
        }
    }
}

/// The entry of `δ(x)` at `t` (arity of `t` is `x.arity + 1`).
fn coboundary_entry(s: &SystemSpec, x: &Cochain, t: &OrdTuple) -> Result<Elem> {
    let d = s.domain();
    let n = t.arity();
    let mut acc = Elem::zero(t.first());
    for i in 1..=n {
        let e = x.get(&face(t, i)?);
        acc = acc.add(&e.scale(&sign(i), d), d)?;
    }
    let head = x.get(&face(t, 0)?);
    acc.add(&project(s, &head, t.first())?, d)
}

/// `δ^{n+1}(x)` for `x` of arity `n`; the result has arity `n + 1`.
pub fn coboundary(x: &Cochain) -> Result<Cochain> {
    let s = x.system.clone();
    let targets = tuples(s.poset(), x.arity + 1);
    let values: Vec<(OrdTuple, Elem)> = targets
        .into_par_iter()
        .map(|t| coboundary_entry(&s, x, &t).map(|e| (t, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Cochain {
        system: s,
        arity: x.arity + 1,
        entries: values.into_iter().filter(|(_, e)| !e.is_zero()).collect(),
    })
}

/// The matrix of `δⁿ` from arity `n-1` to arity `n` coordinates; for
/// `n = 0` it is the zero map from the zero space.
pub fn coboundary_matrix(system: &SystemRef, n: usize) -> SparseMatrix {
    let target = CochainSpace::new(system.clone(), n);
    if n == 0 {
        return SparseMatrix::zeros(target.dim(), 0);
    }
    let source = CochainSpace::new(system.clone(), n - 1);
    let blocks: Vec<Vec<(usize, usize, BigInt)>> = target
        .tuples()
        .par_iter()
        .map(|t| {
            let row0 = target.position(t, 0).expect("own tuple");
            let mut out = Vec::new();
            for i in 1..=n {
                let f = face(t, i).expect("arity ≥ 1");
                let col0 = source.position(&f, 0).expect("faces are tuples");
                for b in 0..system.dim(t.first()) {
                    out.push((row0 + b, col0 + b, sign(i)));
                }
            }
            let f = face(t, 0).expect("arity ≥ 1");
            let col0 = source.position(&f, 0).expect("faces are tuples");
            let p = system.edge(t.first(), f.first()).expect("tuples are ordered");
            for (r, c, v) in p.entries() {
                out.push((row0 + r, col0 + c, v.clone()));
            }
            out
        })
        .collect();
    let mut m = SparseMatrix::zeros(target.dim(), source.dim());
    for block in blocks {
        for (r, c, v) in block {
            m.add_to(r, c, &v);
        }
    }
    m.reduced(system.domain())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coherence {
    Coherent,
    /// Lexicographically first tuple where `δ(x)` is nonzero.
    FailsAt(OrdTuple),
}

impl Coherence {
    pub fn holds(&self) -> bool {
        matches!(self, Coherence::Coherent)
    }
}

pub fn is_coherent(x: &Cochain) -> Result<Coherence> {
    let dx = coboundary(x)?;
    Ok(match dx.entries.keys().next() {
        None => Coherence::Coherent,
        Some(t) => Coherence::FailsAt(t.clone()),
    })
}

fn require_coherent(x: &Cochain) -> Result<()> {
    match is_coherent(x)? {
        Coherence::Coherent => Ok(()),
        Coherence::FailsAt(t) => Err(Error::Incoherent(t.0)),
    }
}

/// Checks that `big` is `small` plus one last node above all others and
/// returns that node.
fn top_extension(small: &SystemSpec, big: &SystemSpec) -> Result<NodeId> {
    let k = small.poset().len();
    if big.poset().len() != k + 1 {
        return Err(Error::SystemMismatch);
    }
    if (0..k).any(|v| small.poset().label(v) != big.poset().label(v)) {
        return Err(Error::SystemMismatch);
    }
    if (0..k).any(|v| !big.poset().lt(v, k)) {
        return Err(Error::Precondition(format!(
            "{} is not above every other node",
            big.poset().label(k)
        )));
    }
    Ok(k)
}

/// `x ∗_λ w` over `big`, the old window plus its new top node `λ`: tuples
/// avoiding `λ` copy `x`, a tuple `(ᾱ, λ)` with `ᾱ` avoiding `λ` gets `w_ᾱ`,
/// and tuples through `λ` more than once get `0`.
pub fn star_lambda(x: &Cochain, w: &Cochain, big: SystemRef) -> Result<Cochain> {
    if !same_system(&x.system, &w.system) {
        return Err(Error::SystemMismatch);
    }
    if x.arity == 0 || w.arity + 1 != x.arity {
        return Err(Error::Arity {
            expected: x.arity.saturating_sub(1),
            found: w.arity,
        });
    }
    let lambda = top_extension(&x.system, &big)?;
    let mut out = x.transport(big.clone(), false)?;
    let lifted = w.transport(big, false)?;
    for (t, e) in lifted.entries {
        out.add_entry(t.push(lambda), &e)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DMode {
    /// `d_λ(v)_ᾱ = v_{ᾱ,λ}`.
    Slice,
    /// For Boolean systems from `mitchell_system`: additionally keep only basis
    /// tuples ending in `λ` and strip that last coordinate, landing in the
    /// system one level down.
    Boolean,
}

/// The `λ`-slice of `v`, with `λ` the top node of `v`'s system.
pub fn d_lambda(v: &Cochain, lambda: NodeId, mode: DMode) -> Result<Cochain> {
    let big = &v.system;
    let k = big.poset().len();
    if k == 0 || lambda != k - 1 || (0..lambda).any(|u| !big.poset().lt(u, lambda)) {
        return Err(Error::Precondition(format!("node {lambda} is not the top node")));
    }
    if v.arity == 0 {
        return Err(Error::Arity {
            expected: 1,
            found: 0,
        });
    }
    match mode {
        DMode::Slice => {
            let small: SystemRef = Arc::new(big.restrict_prefix(lambda)?);
            let mut out = Cochain::zero(small.clone(), v.arity - 1);
            for (t, e) in &v.entries {
                if t.last() == lambda && t.0[..t.0.len() - 1].iter().all(|&u| u != lambda) {
                    out.add_entry(t.without_last(), e)?;
                }
            }
            Ok(out)
        }
        DMode::Boolean => {
            let shape = big
                .mitchell_shape()
                .filter(|s| s.level >= 1)
                .ok_or_else(|| Error::Precondition("not a Boolean system of level ≥ 1".into()))?;
            let small: SystemRef = Arc::new(mitchell_system(shape.level - 1, lambda));
            let mut out = Cochain::zero(small.clone(), v.arity - 1);
            for (t, e) in &v.entries {
                if t.last() != lambda || t.0[..t.0.len() - 1].contains(&lambda) {
                    continue;
                }
                let node = t.first();
                let mut coords = Vec::new();
                for (i, c) in e.coords() {
                    let label = parse_mitchell_label(&big.basis(node)[*i]).expect("tuple label");
                    let (last, head) = label.split_last().expect("nonempty label");
                    if *last == lambda && head.iter().all(|&u| u < lambda) {
                        let j = small
                            .basis_index(node, &mitchell_label(head))
                            .expect("stripped label lies in the smaller system");
                        coords.push((j, c.clone()));
                    }
                }
                out.add_entry(t.without_last(), &Elem::new(node, coords, small.domain()))?;
            }
            Ok(out)
        }
    }
}

/// Extends a coherent `x` given on the tuples of a cofinal chain `chain` to
/// all of `Λ^(n)` by `z_λ̄ = p^{s(λ₀)}_{λ₀}(x_{s(λ₀),…,s(λₙ)})`, where `s(λ)` is
/// the least chain member above `λ`. Entries of `x` off the chain are ignored.
pub fn extend_along_cofinal_chain(x: &Cochain, chain: &[NodeId]) -> Result<Cochain> {
    let s = x.system.clone();
    let p = s.poset();
    if !p.is_chain(chain) {
        return Err(Error::Precondition("the given nodes are not a chain".into()));
    }
    if !p.is_cofinal(chain) {
        return Err(Error::Precondition("the chain is not cofinal".into()));
    }
    let mut c: Vec<NodeId> = chain.to_vec();
    c.sort_by(|&a, &b| {
        if a == b {
            std::cmp::Ordering::Equal
        } else if p.leq(a, b) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    c.dedup();
    let on_chain = |t: &OrdTuple| t.0.iter().all(|v| c.contains(v));
    let mut base = Cochain::zero(s.clone(), x.arity);
    for (t, e) in &x.entries {
        if on_chain(t) {
            base.add_entry(t.clone(), e)?;
        }
    }
    if let Some(t) = coboundary(&base)?.entries.keys().find(|t| on_chain(t)) {
        return Err(Error::Incoherent(t.0.clone()));
    }
    let succ: Vec<NodeId> = p
        .nodes()
        .map(|v| *c.iter().find(|&&m| p.leq(v, m)).expect("cofinal"))
        .collect();
    let mut out = Cochain::zero(s.clone(), x.arity);
    for t in tuples(p, x.arity) {
        let image = OrdTuple(t.0.iter().map(|&v| succ[v]).collect());
        let e = base.get(&image);
        if !e.is_zero() {
            out.add_entry(t.clone(), &project(&s, &e, t.first())?)?;
        }
    }
    Ok(out)
}

/// The explicit trivializer on a windowed product system: for `x` coherent
/// of arity `n ≥ 1`, `y_ā(k) = x_{{k},ā}(k)`. Every singleton `{k}` with `k`
/// in some node must itself be a node.
///
/// When `a₀ = {k}` the value is `x_{{k},{k},a₁,…}(k)`. For `n = 1` coherence
/// forces `x_{{k},{k}} = 0`, so this is the usual `0`; for larger `n` the
/// degenerate tuple may carry a coherent nonzero value and the uniform
/// formula is the one that keeps `δ(y) = x`.
pub fn trivialize_product(x: &Cochain) -> Result<Cochain> {
    let s = x.system.clone();
    let sets = s
        .carriers()
        .ok_or_else(|| Error::Precondition("not a windowed product system".into()))?;
    if x.arity == 0 {
        return Err(Error::Arity {
            expected: 1,
            found: 0,
        });
    }
    let mut singleton = BTreeMap::new();
    for (v, a) in sets.iter().enumerate() {
        if a.len() == 1 {
            singleton.insert(a.members().next().expect("nonempty"), v);
        }
    }
    for a in sets {
        if let Some(k) = a.members().find(|k| !singleton.contains_key(k)) {
            return Err(Error::Precondition(format!("singleton {{{k}}} is missing")));
        }
    }
    require_coherent(x)?;
    let mut y = Cochain::zero(s.clone(), x.arity - 1);
    for t in tuples(s.poset(), x.arity - 1) {
        let a0 = t.first();
        let mut coords = Vec::new();
        for (i, k) in sets[a0].members().enumerate() {
            let sk = singleton[&k];
            let mut entries = vec![sk];
            entries.extend_from_slice(&t.0);
            let e = x.get(&OrdTuple(entries));
            coords.push((i, e.coord(0)));
        }
        y.add_entry(t, &Elem::new(a0, coords, s.domain()))?;
    }
    Ok(y)
}

/// A cochain with values in the quotient `P/G` of a windowed product system:
/// each entry is a representative function on the members of `a₀`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QCochain {
    pub system: SystemRef,
    pub arity: usize,
    pub entries: BTreeMap<OrdTuple, QElem>,
}

impl QCochain {
    pub fn add(&self, other: &QCochain) -> Result<QCochain> {
        if !same_system(&self.system, &other.system) {
            return Err(Error::SystemMismatch);
        }
        let d = self.system.domain();
        let mut out = self.clone();
        for (t, q) in &other.entries {
            let slot = out
                .entries
                .entry(t.clone())
                .or_insert_with(|| QElem::new(q.node, q.window, BTreeMap::new()));
            for (&p, v) in &q.rep {
                let next = d.normalize(slot.value(p) + v);
                if next.is_zero() {
                    slot.rep.remove(&p);
                } else {
                    slot.rep.insert(p, next);
                }
            }
            slot.cert.bound = slot.cert.bound.max(q.cert.bound);
        }
        Ok(out)
    }

    /// The representative lift `ȳ` as an honest cochain of the window system.
    pub fn lift(&self) -> Result<Cochain> {
        let s = self.system.clone();
        let sets = s
            .carriers()
            .ok_or_else(|| Error::Precondition("not a windowed product system".into()))?;
        let mut y = Cochain::zero(s.clone(), self.arity);
        for (t, q) in &self.entries {
            if q.node != t.first() {
                return Err(Error::Malformed(format!("entry at {:?} on the wrong node", t.0)));
            }
            let members: Vec<usize> = sets[q.node].members().collect();
            let mut coords = Vec::new();
            for (&p, v) in &q.rep {
                let i = members
                    .binary_search(&p)
                    .map_err(|_| Error::Malformed(format!("point {p} outside the node's set")))?;
                coords.push((i, v.clone()));
            }
            y.add_entry(t.clone(), &Elem::new(q.node, coords, s.domain()))?;
        }
        Ok(y)
    }

    /// Lifts an honest cochain to the quotient.
    pub fn from_cochain(x: &Cochain) -> Result<QCochain> {
        let s = x.system.clone();
        let sets = s
            .carriers()
            .ok_or_else(|| Error::Precondition("not a windowed product system".into()))?;
        let window = sets.first().map_or(0, |a| a.window());
        let mut entries = BTreeMap::new();
        for (t, e) in &x.entries {
            let members: Vec<usize> = sets[e.node].members().collect();
            let rep = e.coords().iter().map(|(&i, v)| (members[i], v.clone())).collect();
            entries.insert(t.clone(), QElem::new(e.node, window, rep));
        }
        Ok(QCochain {
            system: s,
            arity: x.arity,
            entries,
        })
    }
}

/// `φₙ(x) = δ^{n+1}(ȳ)` for the representative lift `ȳ` of `x`. Each entry
/// must be supported below `N/2` (quotient coherence under the window
/// convention), otherwise the first offending tuple is reported.
pub fn connecting_map(x: &QCochain) -> Result<Cochain> {
    let y = x.lift()?;
    let dy = coboundary(&y)?;
    let sets = x.system.carriers().expect("lift checked carriers");
    for (t, e) in &dy.entries {
        let members: Vec<usize> = sets[e.node].members().collect();
        let window = sets[e.node].window();
        if e.support().any(|i| members[i] >= window / 2) {
            return Err(Error::Incoherent(t.0.clone()));
        }
    }
    Ok(dy)
}

/// A random cochain with each coordinate nonzero with probability `density`.
pub fn random_cochain<R: Rng>(rng: &mut R, system: SystemRef, arity: usize, density: f64) -> Cochain {
    let d = system.domain();
    let mut out = Cochain::zero(system.clone(), arity);
    for t in tuples(system.poset(), arity) {
        let node = t.first();
        let mut coords = Vec::new();
        for i in 0..system.dim(node) {
            if !rng.gen_bool(density) {
                continue;
            }
            let v = match d {
                CoeffDomain::Mod2 => 1,
                CoeffDomain::Integers => rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 },
            };
            coords.push((i, BigInt::from(v)));
        }
        out.add_entry(t, &Elem::new(node, coords, d))
            .expect("tuples from the system");
    }
    out
}

#[cfg(test)]
mod tests;
