use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FinitePoset, NodeId};
use crate::{Error, Result};

/// A subset of the window `[0, N)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WindowedSet {
    bits: Vec<bool>,
}

impl WindowedSet {
    pub fn empty(window: usize) -> Self {
        WindowedSet {
            bits: vec![false; window],
        }
    }

    pub fn full(window: usize) -> Self {
        WindowedSet {
            bits: vec![true; window],
        }
    }

    pub fn from_members<I: IntoIterator<Item = usize>>(window: usize, members: I) -> Result<Self> {
        let mut s = Self::empty(window);
        for x in members {
            if x >= window {
                return Err(Error::Malformed(format!("{x} lies outside the window [0,{window})")));
            }
            s.bits[x] = true;
        }
        Ok(s)
    }

    /// Parses a little-endian `'0'/'1'` string; its length is the window.
    pub fn from_bitstring(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Malformed(format!("bad bit {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WindowedSet { bits })
    }

    pub fn to_bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn window(&self) -> usize {
        self.bits.len()
    }

    pub fn contains(&self, x: usize) -> bool {
        x < self.bits.len() && self.bits[x]
    }

    pub fn insert(&mut self, x: usize) {
        self.bits[x] = true;
    }

    pub fn remove(&mut self, x: usize) {
        self.bits[x] = false;
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn is_subset(&self, other: &WindowedSet) -> bool {
        self.window() == other.window() && self.members().all(|x| other.contains(x))
    }

    pub fn intersection(&self, other: &WindowedSet) -> WindowedSet {
        WindowedSet {
            bits: self
                .bits
                .iter()
                .enumerate()
                .map(|(i, &b)| b && other.contains(i))
                .collect(),
        }
    }

    pub fn difference(&self, other: &WindowedSet) -> WindowedSet {
        WindowedSet {
            bits: self
                .bits
                .iter()
                .enumerate()
                .map(|(i, &b)| b && !other.contains(i))
                .collect(),
        }
    }

    pub fn union(&self, other: &WindowedSet) -> WindowedSet {
        WindowedSet {
            bits: self
                .bits
                .iter()
                .enumerate()
                .map(|(i, &b)| b || other.contains(i))
                .collect(),
        }
    }
}

impl fmt::Display for WindowedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m: Vec<String> = self.members().map(|x| x.to_string()).collect();
        write!(f, "{{{}}}", m.join(","))
    }
}

impl Serialize for WindowedSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_bitstring())
    }
}

impl<'de> Deserialize<'de> for WindowedSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        WindowedSet::from_bitstring(&s).map_err(serde::de::Error::custom)
    }
}

/// The certified relation holds on `[bound, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModFiniteCert {
    pub bound: usize,
}

impl ModFiniteCert {
    /// Certificates are only meaningful when `bound ≤ N/2`.
    pub fn within_cap(self, window: usize) -> bool {
        self.bound <= window / 2
    }
}

fn same_window(a: &WindowedSet, b: &WindowedSet) -> Result<()> {
    if a.window() != b.window() {
        return Err(Error::WindowMismatch {
            left: a.window(),
            right: b.window(),
        });
    }
    Ok(())
}

/// Least `m` with `a ∖ [0,m) ⊆ b`, with no cap.
pub fn least_almost_bound(a: &WindowedSet, b: &WindowedSet) -> Result<usize> {
    same_window(a, b)?;
    Ok(a.difference(b).members().last().map_or(0, |x| x + 1))
}

/// Least `m` with `a ∖ [0,m) ⊆ b`, or `None` when that `m` exceeds `N/2`.
pub fn almost_subset_cert(a: &WindowedSet, b: &WindowedSet) -> Result<Option<ModFiniteCert>> {
    let cert = ModFiniteCert {
        bound: least_almost_bound(a, b)?,
    };
    Ok(cert.within_cap(a.window()).then_some(cert))
}

/// An increasing sequence of windowed sets with almost-inclusion certificates
/// for every pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tower {
    window: usize,
    levels: Vec<WindowedSet>,
    certs: BTreeMap<(usize, usize), ModFiniteCert>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TowerViolation {
    WindowMismatch { level: usize },
    MissingCert { lower: usize, upper: usize },
    CertFails { lower: usize, upper: usize, bound: usize },
    CertAboveCap { lower: usize, upper: usize, bound: usize },
    NotStrict { lower: usize, upper: usize },
}

impl fmt::Display for TowerViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TowerViolation::WindowMismatch { level } => write!(f, "level {level} has the wrong window"),
            TowerViolation::MissingCert { lower, upper } => {
                write!(f, "no certificate for {lower} < {upper}")
            }
            TowerViolation::CertFails { lower, upper, bound } => {
                write!(f, "certificate {bound} for {lower} < {upper} does not verify")
            }
            TowerViolation::CertAboveCap { lower, upper, bound } => {
                write!(f, "certificate {bound} for {lower} < {upper} exceeds half the window")
            }
            TowerViolation::NotStrict { lower, upper } => {
                write!(f, "level {upper} adds nothing to level {lower} above the bound")
            }
        }
    }
}

impl Tower {
    /// Builds a tower from its levels, computing every pairwise certificate.
    pub fn from_levels(levels: Vec<WindowedSet>) -> Result<Self> {
        let window = levels
            .first()
            .map(WindowedSet::window)
            .ok_or_else(|| Error::Malformed("a tower needs at least one level".into()))?;
        let mut certs = BTreeMap::new();
        for (i, a) in levels.iter().enumerate() {
            for (j, b) in levels.iter().enumerate().skip(i + 1) {
                let bound = least_almost_bound(a, b)?;
                certs.insert((i, j), ModFiniteCert { bound });
            }
        }
        Ok(Tower {
            window,
            levels,
            certs,
        })
    }

    pub fn from_parts(
        window: usize,
        levels: Vec<WindowedSet>,
        certs: BTreeMap<(usize, usize), ModFiniteCert>,
    ) -> Self {
        Tower {
            window,
            levels,
            certs,
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, i: usize) -> &WindowedSet {
        &self.levels[i]
    }

    pub fn levels(&self) -> &[WindowedSet] {
        &self.levels
    }

    pub fn cert(&self, lower: usize, upper: usize) -> Option<ModFiniteCert> {
        self.certs.get(&(lower, upper)).copied()
    }

    pub fn certs(&self) -> &BTreeMap<(usize, usize), ModFiniteCert> {
        &self.certs
    }

    /// Re-checks every certificate against the member sets, the `N/2` cap,
    /// and strict growth above each bound.
    pub fn verify(&self) -> std::result::Result<(), TowerViolation> {
        for (level, a) in self.levels.iter().enumerate() {
            if a.window() != self.window {
                return Err(TowerViolation::WindowMismatch { level });
            }
        }
        for lower in 0..self.len() {
            for upper in lower + 1..self.len() {
                let bound = self
                    .cert(lower, upper)
                    .ok_or(TowerViolation::MissingCert { lower, upper })?
                    .bound;
                let (a, b) = (&self.levels[lower], &self.levels[upper]);
                if a.members().any(|x| x >= bound && !b.contains(x)) {
                    return Err(TowerViolation::CertFails { lower, upper, bound });
                }
                if bound > self.window / 2 {
                    return Err(TowerViolation::CertAboveCap { lower, upper, bound });
                }
                if !b.difference(a).members().any(|x| x >= bound) {
                    return Err(TowerViolation::NotStrict { lower, upper });
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TowerJson {
    #[serde(rename = "N")]
    window: usize,
    levels: Vec<WindowedSet>,
    certs: Vec<(usize, usize, usize)>,
}

impl Serialize for Tower {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TowerJson {
            window: self.window,
            levels: self.levels.clone(),
            certs: self
                .certs
                .iter()
                .map(|(&(i, j), c)| (i, j, c.bound))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Tower {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = TowerJson::deserialize(d)?;
        let certs = raw
            .certs
            .into_iter()
            .map(|(i, j, bound)| ((i, j), ModFiniteCert { bound }))
            .collect();
        Ok(Tower::from_parts(raw.window, raw.levels, certs))
    }
}

/// A seeded tower of length `M` in `[0, N)`.
///
/// Level 0 is a random set of odd numbers. Step `j` adds the even numbers
/// `2i` with `i ≡ j-1 (mod M-1)`, so every step contributes elements spread
/// over the whole window, and may drop a few odd members lying below both
/// `N/16` and the least even it adds.
pub fn tower_generate(length: usize, window: usize, seed: u64) -> Result<Tower> {
    if length == 0 || 2 * length > window {
        return Err(Error::Infeasible {
            stage: "tower".into(),
            reason: format!("length {length} needs a window of at least {}", 2 * length),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = WindowedSet::empty(window);
    for x in (1..window).step_by(2) {
        if rng.gen_bool(0.5) {
            current.insert(x);
        }
    }
    let mut levels = vec![current.clone()];
    let steps = length - 1;
    let drop_cap = (window / 16).max(1);
    for j in 1..length {
        let class = j - 1;
        let least_even = 2 * class;
        let limit = drop_cap.min(least_even);
        for x in (1..limit).step_by(2) {
            if current.contains(x) && rng.gen_bool(0.5) {
                current.remove(x);
            }
        }
        for i in (class..window.div_ceil(2)).step_by(steps) {
            current.insert(2 * i);
        }
        levels.push(current.clone());
    }
    Tower::from_levels(levels)
}

/// Width, height and a list of functions `[0,w) → [0,h)`; each `f` stands
/// for the set `{(i,j) : j ≤ f(i)}` of cells of `[0,w) × [0,h]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealBasisA {
    pub w: usize,
    pub h: usize,
    pub functions: Vec<Vec<usize>>,
}

impl IdealBasisA {
    /// Cells are numbered `i·(h+1) + j`.
    pub fn window(&self) -> usize {
        self.w * (self.h + 1)
    }

    pub fn cell(&self, i: usize, j: usize) -> usize {
        i * (self.h + 1) + j
    }

    pub fn hypograph(&self, f: &[usize]) -> Result<WindowedSet> {
        if f.len() != self.w {
            return Err(Error::Malformed(format!(
                "function of length {} on width {}",
                f.len(),
                self.w
            )));
        }
        if let Some(v) = f.iter().find(|&&v| v >= self.h) {
            return Err(Error::Malformed(format!("value {v} not below height {}", self.h)));
        }
        let cells = f
            .iter()
            .enumerate()
            .flat_map(|(i, &v)| (0..=v).map(move |j| (i, j)));
        WindowedSet::from_members(self.window(), cells.map(|(i, j)| self.cell(i, j)))
    }
}

/// The sets of an ideal basis ordered by inclusion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealLattice {
    pub poset: FinitePoset,
    /// The set at each poset node.
    pub sets: Vec<WindowedSet>,
    /// The family is closed under pointwise maximum of its functions.
    pub max_closed: bool,
}

impl IdealLattice {
    pub fn set(&self, v: NodeId) -> &WindowedSet {
        &self.sets[v]
    }
}

pub fn ideal_sublattice_a(basis: &IdealBasisA) -> Result<IdealLattice> {
    if basis.functions.is_empty() {
        return Err(Error::Precondition("no functions given".into()));
    }
    let mut sets: Vec<WindowedSet> = Vec::new();
    let mut labels = Vec::new();
    for f in &basis.functions {
        let s = basis.hypograph(f)?;
        if !sets.contains(&s) {
            labels.push(format!(
                "a[{}]",
                f.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
            ));
            sets.push(s);
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
    let max_closed = basis.functions.iter().all(|f| {
        basis.functions.iter().all(|g| {
            let m: Vec<usize> = f.iter().zip(g).map(|(&x, &y)| x.max(y)).collect();
            basis
                .hypograph(&m)
                .map(|s| sets.contains(&s))
                .unwrap_or(false)
        })
    });
    Ok(IdealLattice {
        poset,
        sets,
        max_closed,
    })
}
