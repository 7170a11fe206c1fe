//! Bounded trivializer search and replays of the refutation arguments on
//! finite windows.
//!
//! Raw search is exhaustive but only an oracle: on a finite window a flasque
//! chain is always trivial. The shipped falsifiers are the forced-value and
//! proof-replay forms, which state exactly what is true on the window.

use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cochain::{coboundary, same_system, coboundary_matrix, d_lambda, is_coherent, Cochain, CochainSpace, Coherence, DMode};
use crate::coeffs::{smith_normal_form, solve_linear, CoeffDomain, SparseMatrix, Vector};
use crate::constructions::{mitchell_base_cochain, HausdorffFamily};
use crate::index::{NodeId, WindowedSet};
use crate::system::SystemRef;
use crate::{Error, Result};

/// Most candidates any search will enumerate.
pub const SEARCH_CAP: u64 = 1 << 30;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchBudget {
    /// Largest support of a single entry.
    pub support: usize,
    /// Largest absolute coefficient (integers only).
    pub coeff: u64,
    /// Largest certificate bound a claimed trivializer may use.
    pub stabilization: usize,
    /// When set, candidates vanish on tuples leaving these nodes.
    pub nodes: Option<Vec<NodeId>>,
}

impl SearchBudget {
    /// Support and coefficients unrestricted in practice.
    pub fn full(window: usize) -> Self {
        SearchBudget {
            support: usize::MAX,
            coeff: 1,
            stabilization: (window / 2).max(1),
            nodes: None,
        }
    }

    pub fn validate(&self, window: Option<usize>) -> Result<()> {
        if self.support == 0 || self.coeff == 0 || self.stabilization == 0 {
            return Err(Error::Malformed("budget bounds must be positive".into()));
        }
        if let Some(n) = window {
            if self.stabilization > n / 2 {
                return Err(Error::Malformed(format!(
                    "stabilization bound {} exceeds half the window {n}",
                    self.stabilization
                )));
            }
        }
        Ok(())
    }

    fn allows_tuple(&self, t: &[NodeId]) -> bool {
        self.nodes.as_ref().map_or(true, |ns| t.iter().all(|v| ns.contains(v)))
    }

    fn entry_choices(&self, dim: usize, domain: CoeffDomain) -> BigUint {
        let w = match domain {
            CoeffDomain::Mod2 => BigUint::one(),
            CoeffDomain::Integers => BigUint::from(2 * self.coeff),
        };
        let mut total = BigUint::zero();
        let mut binom = BigUint::one();
        let mut power = BigUint::one();
        for s in 0..=dim.min(self.support) {
            total += &binom * &power;
            binom = binom * BigUint::from(dim - s) / BigUint::from(s + 1);
            power *= &w;
        }
        total
    }

    /// Number of cochains of the given arity inside the budget, optionally
    /// counting only the tuples accepted by `keep`.
    pub fn cardinality(&self, s: &SystemRef, arity: usize, keep: impl Fn(&[NodeId]) -> bool) -> BigUint {
        let space = CochainSpace::new(s.clone(), arity);
        space
            .tuples()
            .iter()
            .filter(|t| keep(&t.0) && self.allows_tuple(&t.0))
            .map(|t| self.entry_choices(s.dim(t.first()), s.domain()))
            .product()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForcedValue {
    /// The tuple whose equation forces the value.
    pub witness: Vec<NodeId>,
    pub node: NodeId,
    pub coordinate: String,
    pub value: BigInt,
}

impl ForcedValue {
    fn to_json(&self) -> Value {
        json!({
            "witness": self.witness,
            "node": self.node,
            "coordinate": self.coordinate,
            "value": self.value.to_string(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct FalsificationReport {
    /// Candidates inside the budget, all of them accounted for.
    pub searched: BigUint,
    pub found: Option<Cochain>,
    pub forced: Vec<ForcedValue>,
    /// Smallest support a trivializer can have at the examined node, when
    /// computed.
    pub min_support: Option<usize>,
    pub partitions: usize,
    /// Points of the solution coset actually enumerated.
    pub cursor: u64,
    pub elapsed: Duration,
}

impl FalsificationReport {
    fn empty(searched: BigUint) -> Self {
        FalsificationReport {
            searched,
            found: None,
            forced: Vec::new(),
            min_support: None,
            partitions: 0,
            cursor: 0,
            elapsed: Duration::ZERO,
        }
    }

    /// JSON without timing, so identical runs give identical bytes.
    pub fn to_json(&self, system_ref: &str) -> Value {
        let mut v = json!({
            "searched": self.searched.to_string(),
            "forced": self.forced.iter().map(ForcedValue::to_json).collect::<Vec<_>>(),
            "partitions": self.partitions,
            "cursor": self.cursor.to_string(),
        });
        if let Some(f) = &self.found {
            v["found"] = f.to_json(system_ref);
        }
        if let Some(m) = self.min_support {
            v["minSupport"] = json!(m);
        }
        v
    }
}

/// Ordering key: total support, then the sorted nonzero entries.
type Key = (usize, Vec<(usize, BigInt)>);

fn key_of(v: &[BigInt]) -> Key {
    let nz: Vec<(usize, BigInt)> = v
        .iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, x)| (i, x.clone()))
        .collect();
    (nz.len(), nz)
}

struct CosetHit {
    best: Option<Vector>,
    enumerated: u64,
    partitions: usize,
}

/// Enumerates every solution of `m·y = rhs` with `y` zero off `allowed`
/// that passes `accept`, and returns the least one by [`Key`]. Over `ℤ` the
/// solutions are `R·c` with `c` fixed on the pivot rows of the Smith form;
/// the free part ranges over the box that `coeff_bound` forces on it.
fn coset_search(
    m: &SparseMatrix,
    rhs: &[BigInt],
    allowed: &[bool],
    domain: CoeffDomain,
    coeff_bound: u64,
    accept: &(dyn Fn(&[BigInt]) -> bool + Sync),
) -> Result<CosetHit> {
    let cols: Vec<usize> = (0..m.cols()).filter(|&c| allowed[c]).collect();
    let mut sub = SparseMatrix::zeros(m.rows(), cols.len());
    let pos: Vec<Option<usize>> = {
        let mut p = vec![None; m.cols()];
        for (i, &c) in cols.iter().enumerate() {
            p[c] = Some(i);
        }
        p
    };
    for (r, c, v) in m.entries() {
        if let Some(j) = pos[c] {
            sub.set(r, j, v.clone());
        }
    }
    let embed = |y: &[BigInt]| -> Vector {
        let mut out = vec![BigInt::zero(); m.cols()];
        for (i, &c) in cols.iter().enumerate() {
            out[c] = y[i].clone();
        }
        out
    };
    let (base, dirs, ranges): (Vector, Vec<Vector>, Vec<(i64, i64)>) = match domain {
        CoeffDomain::Mod2 => {
            let Some(y0) = solve_linear(&sub, rhs, domain)? else {
                return Ok(CosetHit { best: None, enumerated: 0, partitions: 0 });
            };
            let k = crate::coeffs::kernel_basis(&sub, domain);
            let n = k.len();
            (y0, k, vec![(0, 1); n])
        }
        CoeffDomain::Integers => {
            let snf = smith_normal_form(&sub);
            let c = snf.left.mul_vec(rhs)?;
            let r = snf.rank();
            let mut fixed = vec![BigInt::zero(); sub.cols()];
            for (i, ci) in c.iter().enumerate() {
                let d = snf.diagonal.get(i).cloned().unwrap_or_default();
                if d.is_zero() {
                    if !ci.is_zero() {
                        return Ok(CosetHit { best: None, enumerated: 0, partitions: 0 });
                    }
                } else if !(ci % &d).is_zero() {
                    return Ok(CosetHit { best: None, enumerated: 0, partitions: 0 });
                } else {
                    fixed[i] = ci / &d;
                }
            }
            let y0 = snf.right.mul_vec(&fixed)?;
            let dirs: Vec<Vector> = (r..sub.cols()).map(|j| snf.right.column(j)).collect();
            // t_j = (R⁻¹ y)_j for j ≥ r, and every |y_i| ≤ coeff_bound
            let ranges = (r..sub.cols())
                .map(|j| {
                    let row = (0..sub.cols()).map(|i| snf.right_inv.get(j, i).abs()).fold(BigInt::zero(), |a, b| a + b);
                    let t = (row * BigInt::from(coeff_bound)).to_i64().unwrap_or(i64::MAX / 4);
                    (-t, t)
                })
                .collect();
            (y0, dirs, ranges)
        }
    };
    let mut total: u128 = 1;
    for &(lo, hi) in &ranges {
        total = total.saturating_mul((hi - lo + 1) as u128);
        if total > SEARCH_CAP as u128 {
            return Err(Error::Cap(format!("solution coset needs more than 2^30 candidates")));
        }
    }
    let total = total as u64;
    let parts = (total.min(16)).max(1) as usize;
    let chunk = total.div_ceil(parts as u64);
    let hits: Vec<Option<(Key, Vector)>> = (0..parts)
        .into_par_iter()
        .map(|p| {
            let start = p as u64 * chunk;
            let end = (start + chunk).min(total);
            let mut best: Option<(Key, Vector)> = None;
            for idx in start..end {
                let mut rest = idx;
                let mut y = base.clone();
                for (d, &(lo, hi)) in dirs.iter().zip(&ranges) {
                    let width = (hi - lo + 1) as u64;
                    let t = lo + (rest % width) as i64;
                    rest /= width;
                    if t != 0 {
                        let t = BigInt::from(t);
                        for (yi, di) in y.iter_mut().zip(d) {
                            *yi = domain.normalize(&*yi + &t * di);
                        }
                    }
                }
                let full = embed(&y);
                if accept(&full) {
                    let k = key_of(&full);
                    if best.as_ref().map_or(true, |(bk, _)| k < *bk) {
                        best = Some((k, full));
                    }
                }
            }
            best
        })
        .collect();
    let best = hits.into_iter().flatten().min_by(|a, b| a.0.cmp(&b.0)).map(|(_, v)| v);
    Ok(CosetHit {
        best,
        enumerated: total,
        partitions: parts,
    })
}

fn within_budget(space: &CochainSpace, y: &[BigInt], budget: &SearchBudget, domain: CoeffDomain) -> bool {
    let mut support = vec![0usize; space.tuples().len()];
    for (pos, v) in y.iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        if domain == CoeffDomain::Integers && v.abs() > BigInt::from(budget.coeff) {
            return false;
        }
        let (t, _) = space.coordinate(pos);
        let ti = space.tuples().binary_search(t).expect("tuple of the space");
        support[ti] += 1;
        if support[ti] > budget.support {
            return false;
        }
    }
    true
}

fn require_coherent(x: &Cochain) -> Result<()> {
    match is_coherent(x)? {
        Coherence::Coherent => Ok(()),
        Coherence::FailsAt(t) => Err(Error::Incoherent(t.0)),
    }
}

/// Exhaustive search for `y` inside the budget with `δy = x`. The least
/// candidate by support size, then lexicographically, is reported.
pub fn search_trivializer(x: &Cochain, budget: &SearchBudget) -> Result<FalsificationReport> {
    let clock = Instant::now();
    budget.validate(None)?;
    let n = x.arity();
    if n == 0 {
        return Err(Error::Arity { expected: 1, found: 0 });
    }
    require_coherent(x)?;
    let s = x.system().clone();
    let d = s.domain();
    let space = CochainSpace::new(s.clone(), n - 1);
    let target = CochainSpace::new(s.clone(), n).to_vector(x)?;
    let allowed: Vec<bool> = (0..space.dim())
        .map(|p| budget.allows_tuple(&space.coordinate(p).0 .0))
        .collect();
    let m = coboundary_matrix(&s, n);
    let accept = |y: &[BigInt]| within_budget(&space, y, budget, d);
    let hit = coset_search(&m, &target, &allowed, d, budget.coeff, &accept)?;
    let mut report = FalsificationReport::empty(budget.cardinality(&s, n - 1, |_| true));
    report.partitions = hit.partitions;
    report.cursor = hit.enumerated;
    if let Some(y) = hit.best {
        let y = space.from_vector(&y)?;
        if coboundary(&y)? != *x {
            return Err(Error::Precondition("search produced a non-trivializer".into()));
        }
        report.found = Some(y);
    }
    report.elapsed = clock.elapsed();
    Ok(report)
}

/// Values of `y₀` forced on every trivializer of the base cochain on
/// `[0, B)`: the entry at `(0, β)` reads `y_β - y₀` at coordinate `ξ`, and
/// `y_β` has no coordinate `ξ < β`, so `y₀(ξ) = -x_{0,β}(ξ)` for every such
/// `β`.
/// The minimal support of `y₀` is the number of forced ones.
pub fn forced_values_mitchell(size: usize, cofseq: &[usize]) -> Result<FalsificationReport> {
    let clock = Instant::now();
    let x = mitchell_base_cochain(size, cofseq)?;
    let s = x.system().clone();
    let mut forced = Vec::new();
    // propagate every equation at (0, β) through the coordinates of G_0 that G_β lacks
    for xi in 0..size {
        let mut value: Option<(usize, BigInt)> = None;
        for beta in xi + 1..size {
            let e = x.get(&crate::index::OrdTuple::new(vec![0, beta]));
            let i = s.basis_index(0, &xi.to_string()).expect("coordinate of G_0");
            let v = e.coord(i);
            match &value {
                None => value = Some((beta, s.domain().normalize(-v))),
                Some((_, w)) if *w != s.domain().normalize(-v.clone()) => {
                    return Err(Error::Incoherent(vec![0, beta]));
                }
                _ => {}
            }
        }
        if let Some((beta, v)) = value {
            forced.push(ForcedValue {
                witness: vec![0, beta],
                node: 0,
                coordinate: xi.to_string(),
                value: v,
            });
        }
    }
    let ones = forced.iter().filter(|f| !f.value.is_zero()).count();
    let mut report = FalsificationReport::empty(BigUint::zero());
    report.forced = forced;
    report.min_support = Some(ones);
    report.elapsed = clock.elapsed();
    Ok(report)
}

/// Least support at `node` over all trivializers of `x`, by enumerating the
/// whole solution coset. `None` when `x` is not trivial.
pub fn exhaustive_min_support(x: &Cochain, node: NodeId) -> Result<Option<usize>> {
    let n = x.arity();
    if n == 0 {
        return Err(Error::Arity { expected: 1, found: 0 });
    }
    let s = x.system().clone();
    let d = s.domain();
    let space = CochainSpace::new(s.clone(), n - 1);
    let target = CochainSpace::new(s.clone(), n).to_vector(x)?;
    let m = coboundary_matrix(&s, n);
    let at_node: Vec<bool> = (0..space.dim())
        .map(|p| space.coordinate(p).0 .0.iter().all(|&v| v == node))
        .collect();
    let best = std::sync::Mutex::new(None::<usize>);
    let accept = |y: &[BigInt]| {
        let w = y.iter().zip(&at_node).filter(|(v, &a)| a && !v.is_zero()).count();
        let mut b = best.lock().expect("no poisoning");
        *b = Some(b.map_or(w, |c: usize| c.min(w)));
        false
    };
    let all = vec![true; space.dim()];
    let hit = coset_search(&m, &target, &all, d, 1, &accept)?;
    if hit.enumerated == 0 {
        return Ok(None);
    }
    let out = *best.lock().expect("no poisoning");
    Ok(out)
}

/// Which claim of a candidate uniformizing set breaks at a replayed pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BrokenClaim {
    /// The point lies in `b ∩ (a_{α+1} ∖ a_α)` at or above `m_α`.
    SuccessorGap { index: usize },
    /// The point lies in `b_β` at or above `m_β` but not in `b`.
    Stabilization { index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub lower: usize,
    pub upper: usize,
    /// Least level relating the pair.
    pub level: usize,
    pub point: usize,
    pub broken: BrokenClaim,
}

impl Violation {
    pub fn to_json(&self) -> Value {
        let (claim, index) = match self.broken {
            BrokenClaim::SuccessorGap { index } => ("successor-gap", index),
            BrokenClaim::Stabilization { index } => ("stabilization", index),
        };
        json!({
            "lower": self.lower,
            "upper": self.upper,
            "level": self.level,
            "point": self.point,
            "claim": claim,
            "claimIndex": index,
        })
    }
}

fn successor_position(h: &HausdorffFamily, a: usize) -> Option<usize> {
    let next = h.orders.indices()[a].succ();
    h.orders.indices().binary_search(&next).ok()
}

/// Replays the refutation for a candidate `b` claimed to satisfy, for every
/// `α`, `(b ∩ a_α) ∖ m_α = b_α ∖ m_α` and `b ∩ (a_{α+1} ∖ a_α) ⊆ m_α`.
/// A pair `α < β` whose least relating level `n` is at least both bounds
/// and has `α+1 ≤_n β` puts `n_{α,β}` in `b_β ∩ (a_{α+1} ∖ a_α)` above both
/// bounds, so one of the two claims fails there.
pub fn refute_uniform_trivializer(
    h: &HausdorffFamily,
    b: &WindowedSet,
    bounds: &[usize],
    budget: &SearchBudget,
) -> Result<Option<Violation>> {
    let m = h.family.len();
    if bounds.len() != m {
        return Err(Error::Malformed(format!("{} bounds for {m} indices", bounds.len())));
    }
    if b.window() != h.family.window() {
        return Err(Error::WindowMismatch {
            left: h.family.window(),
            right: b.window(),
        });
    }
    if let Some(&big) = bounds.iter().find(|&&x| x > budget.stabilization) {
        return Err(Error::Malformed(format!(
            "bound {big} exceeds the stabilization bound {}",
            budget.stabilization
        )));
    }
    for beta in 0..m {
        for alpha in 0..beta {
            let Some(next) = successor_position(h, alpha) else {
                continue;
            };
            let Some(level) = h.orders.relating_level(alpha, beta) else {
                continue;
            };
            if level < bounds[alpha].max(bounds[beta]) || !h.orders.le(level, next, beta) {
                continue;
            }
            let point = h.point(alpha, beta);
            let gap = h.tower.level(next).difference(h.tower.level(alpha));
            if !gap.contains(point) || point < bounds[alpha].max(bounds[beta]) {
                continue;
            }
            let broken = if b.contains(point) {
                BrokenClaim::SuccessorGap { index: alpha }
            } else {
                BrokenClaim::Stabilization { index: beta }
            };
            return Ok(Some(Violation {
                lower: alpha,
                upper: beta,
                level,
                point,
                broken,
            }));
        }
    }
    Ok(None)
}

/// The single bound `m` with `α <_m α+1` for every `α` whose successor is an
/// index: the largest of the levels at which successors attach.
pub fn uniform_successor_bound(h: &HausdorffFamily) -> usize {
    (0..h.family.len())
        .filter_map(|a| successor_position(h, a).and_then(|s| h.orders.relating_level(a, s)))
        .max()
        .unwrap_or(0)
}

/// `b_{M-1}` together with a seeded random part outside `a_{M-1}`.
pub fn adversarial_candidate(h: &HausdorffFamily, seed: u64) -> WindowedSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Some(last) = h.b.last() else {
        return WindowedSet::empty(h.family.window());
    };
    let top = h.tower.level(h.b.len() - 1);
    let mut b = last.clone();
    for k in 0..b.window() {
        if !top.contains(k) && rng.gen_bool(0.5) {
            b.insert(k);
        }
    }
    b
}

/// The union of all `b_α`, accepted only if it meets every `a_α` in exactly
/// `b_α`; otherwise the first pair `α < β` with `b_β ∩ a_α ≠ b_α` is named.
pub fn literal_candidate(h: &HausdorffFamily) -> Result<WindowedSet> {
    let window = h.family.window();
    for beta in 0..h.b.len() {
        for alpha in 0..beta {
            let meet = h.b[beta].intersection(h.tower.level(alpha));
            if meet != h.b[alpha] {
                let k = (0..window)
                    .find(|&k| meet.contains(k) != h.b[alpha].contains(k))
                    .expect("sets differ");
                return Err(Error::Precondition(format!(
                    "b_{beta} ∩ a_{alpha} and b_{alpha} differ at {k}"
                )));
            }
        }
    }
    Ok(h.b.iter().fold(WindowedSet::empty(window), |acc, b| acc.union(b)))
}

/// Outcome of searching for trivializers of both forks that agree on the
/// old window.
#[derive(Debug, Clone)]
pub struct ForkReport {
    pub report: FalsificationReport,
    pub pair: Option<(Cochain, Cochain)>,
    /// `d_λ(u¹ - u⁰)`, a trivializer of `z`, re-verified.
    pub converted: Option<Cochain>,
}

/// Searches for `u⁰, u¹` inside the budget with `δu^i = fork i` and equal
/// restriction to the old window. A hit is turned into the trivializer
/// `d_λ(u¹ - u⁰)` of `z`, whose coboundary is re-checked.
pub fn fork_obstruction_check(forks: &(Cochain, Cochain), z: &Cochain, budget: &SearchBudget) -> Result<ForkReport> {
    let clock = Instant::now();
    budget.validate(None)?;
    let (f0, f1) = forks;
    if !same_system(f0.system(), f1.system()) {
        return Err(Error::SystemMismatch);
    }
    let n = f0.arity();
    if n == 0 || f1.arity() != n || z.arity() + 1 != n {
        return Err(Error::Arity { expected: n, found: f1.arity() });
    }
    require_coherent(f0)?;
    require_coherent(f1)?;
    let big = f0.system().clone();
    let d = big.domain();
    let lambda = big.poset().len() - 1;
    let space = CochainSpace::new(big.clone(), n - 1);
    let rows = CochainSpace::new(big.clone(), n);
    let dim = space.dim();
    let delta = coboundary_matrix(&big, n);
    // unknowns (u⁰, v) with v = u¹ - u⁰ living on tuples through λ
    let mut m = SparseMatrix::zeros(2 * delta.rows(), 2 * dim);
    for (r, c, v) in delta.entries() {
        m.set(r, c, v.clone());
        m.set(delta.rows() + r, dim + c, v.clone());
    }
    let mut rhs = rows.to_vector(f0)?;
    rhs.extend(rows.to_vector(&f1.sub(f0)?)?);
    let through_lambda = |p: usize| space.coordinate(p).0 .0.contains(&lambda);
    let allowed: Vec<bool> = (0..2 * dim)
        .map(|p| {
            let q = p % dim;
            budget.allows_tuple(&space.coordinate(q).0 .0) && (p < dim || through_lambda(q))
        })
        .collect();
    let accept = |y: &[BigInt]| {
        let u0 = &y[..dim];
        let u1: Vector = u0.iter().zip(&y[dim..]).map(|(a, b)| d.normalize(a + b)).collect();
        within_budget(&space, u0, budget, d) && within_budget(&space, &u1, budget, d)
    };
    let hit = coset_search(&m, &rhs, &allowed, d, budget.coeff, &accept)?;
    let old = budget.cardinality(&big, n - 1, |t| !t.contains(&lambda));
    let new = budget.cardinality(&big, n - 1, |t| t.contains(&lambda));
    let mut report = FalsificationReport::empty(old * &new * &new);
    report.partitions = hit.partitions;
    report.cursor = hit.enumerated;
    let mut out = ForkReport {
        report,
        pair: None,
        converted: None,
    };
    if let Some(y) = hit.best {
        let u0 = space.from_vector(&y[..dim])?;
        let v = space.from_vector(&y[dim..])?;
        let u1 = u0.add(&v)?;
        if coboundary(&u0)? != *f0 || coboundary(&u1)? != *f1 {
            return Err(Error::Precondition("search produced a non-trivializing pair".into()));
        }
        let converted = if n >= 2 {
            let c = d_lambda(&v, lambda, DMode::Slice)?.transport(z.system().clone(), false)?;
            if coboundary(&c)? != *z {
                return Err(Error::Precondition("conversion identity failed".into()));
            }
            Some(c)
        } else {
            None
        };
        out.report.found = converted.clone();
        out.converted = converted;
        out.pair = Some((u0, u1));
    }
    out.report.elapsed = clock.elapsed();
    Ok(out)
}
