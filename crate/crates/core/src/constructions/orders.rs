use serde_json::{json, Value};

use crate::index::{least_almost_bound, OrdNotation, Tower};
use crate::{Error, Result};

/// `K` forest orders on the indices `0..M` (in the order of their ordinal
/// notations), each given by parent pointers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeOrders {
    indices: Vec<OrdNotation>,
    /// `parents[k][i]` is the parent of index `i` in the `k`-th order.
    pub(super) parents: Vec<Vec<Option<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderViolation {
    /// A parent that does not precede its child, or a path longer than `N`.
    NotForest { level: usize, index: usize },
    NotIncreasing { lower: usize, upper: usize, below: usize, above: usize },
    /// `a_below ∖ level ⊄ a_above`.
    SetBound { level: usize, below: usize, above: usize },
    /// A limit below `above` whose successor is not `≤` `above`.
    LimitSuccessor { level: usize, limit: usize, above: usize },
}

/// Result of the exhaustive check of all five conditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderCheck {
    pub pairs: usize,
    pub violations: Vec<OrderViolation>,
    /// Pairs `α < β` related in none of the `K` orders.
    pub unresolved: Vec<(usize, usize)>,
    /// Largest least-relating level over all related pairs.
    pub max_level_used: usize,
}

impl OrderCheck {
    pub fn ok(&self) -> bool {
        self.violations.is_empty() && self.unresolved.is_empty()
    }
}

impl TreeOrders {
    pub fn levels(&self) -> usize {
        self.parents.len()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[OrdNotation] {
        &self.indices
    }

    pub fn parent(&self, level: usize, i: usize) -> Option<usize> {
        self.parents[level][i]
    }

    /// Strict ancestors of `i` at `level`, nearest first.
    pub fn ancestors(&self, level: usize, i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.parents[level][i];
        while let Some(p) = cur {
            if out.len() > self.len() {
                break;
            }
            out.push(p);
            cur = self.parents[level][p];
        }
        out
    }

    pub fn lt(&self, level: usize, a: usize, b: usize) -> bool {
        self.ancestors(level, b).contains(&a)
    }

    pub fn le(&self, level: usize, a: usize, b: usize) -> bool {
        a == b || self.lt(level, a, b)
    }

    /// Least level `k < K` with `a <_k b`.
    pub fn relating_level(&self, a: usize, b: usize) -> Option<usize> {
        (0..self.levels()).find(|&k| self.lt(k, a, b))
    }

    fn position(&self, o: &OrdNotation) -> Option<usize> {
        self.indices.binary_search(o).ok()
    }

    /// Checks all five conditions over every pair and level against `tower`.
    pub fn verify(&self, tower: &Tower) -> OrderCheck {
        let m = self.len();
        let mut violations = Vec::new();
        for k in 0..self.levels() {
            for i in 0..m {
                let anc = self.ancestors(k, i);
                if self.parents[k][i].is_some_and(|p| p >= i) || anc.len() > tower.window() || anc.len() > m {
                    violations.push(OrderViolation::NotForest { level: k, index: i });
                }
            }
        }
        let mut unresolved = Vec::new();
        let mut max_level_used = 0;
        for b in 0..m {
            for a in 0..b {
                let rel: Vec<bool> = (0..self.levels()).map(|k| self.lt(k, a, b)).collect();
                for k in 1..self.levels() {
                    if rel[k - 1] && !rel[k] {
                        violations.push(OrderViolation::NotIncreasing {
                            lower: k - 1,
                            upper: k,
                            below: a,
                            above: b,
                        });
                    }
                }
                match rel.iter().position(|&r| r) {
                    Some(k) => max_level_used = max_level_used.max(k),
                    None => unresolved.push((a, b)),
                }
                for (k, _) in rel.iter().enumerate().filter(|(_, &r)| r) {
                    let above = tower.level(b);
                    if tower.level(a).members().any(|x| x >= k && !above.contains(x)) {
                        violations.push(OrderViolation::SetBound { level: k, below: a, above: b });
                    }
                    if self.indices[a].is_limit() {
                        let next = self.position(&self.indices[a].succ());
                        if !next.is_some_and(|s| self.le(k, s, b)) {
                            violations.push(OrderViolation::LimitSuccessor { level: k, limit: a, above: b });
                        }
                    }
                }
            }
        }
        OrderCheck {
            pairs: m * m.saturating_sub(1) / 2,
            violations,
            unresolved,
            max_level_used,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "K": self.levels(),
            "indices": self.indices.iter().map(|o| o.to_string()).collect::<Vec<_>>(),
            "parents": self.parents,
        })
    }
}

/// Number of orders built for `M` indices: `⌈log₂ M⌉ + 4`.
pub fn level_count(m: usize) -> usize {
    let mut log = 0;
    while (1usize << log) < m {
        log += 1;
    }
    log + 4
}

/// Builds the orders index by index. A successor `α+1` is a root below the
/// least `n` with `a_α ∖ n ⊆ a_{α+1}` and sits on top of `α` from `n` on. A
/// limit `γ` uses the members `γ_k` of its fundamental sequence present among
/// the indices: `n_k` is the least `n > n_{k-1}, k` with
/// `γ_0 <_n … <_n γ_k` and `a_{γ_i} ∖ n ⊆ a_γ` for `i ≤ k`; `γ` is a root
/// below `n_0` and an immediate successor of `γ_k` on `[n_k, n_{k+1})`.
pub fn tree_orderings(tower: &Tower, indices: &[OrdNotation]) -> Result<TreeOrders> {
    if indices.len() != tower.len() {
        return Err(Error::Dimension(format!(
            "{} indices for a tower of length {}",
            indices.len(),
            tower.len()
        )));
    }
    if indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("indices must be strictly increasing".into()));
    }
    let m = indices.len();
    let k_levels = if m <= 1 { 0 } else { level_count(m) };
    let mut orders = TreeOrders {
        indices: indices.to_vec(),
        parents: vec![vec![None; m]; k_levels],
    };
    let set = |i: usize| tower.level(i);
    for g in 0..m {
        let gamma = &indices[g];
        if gamma.is_successor() {
            let pred = gamma.pred().expect("successor");
            let a = orders
                .position(&pred)
                .ok_or_else(|| Error::Precondition(format!("{gamma} is present but {pred} is not")))?;
            let n = least_almost_bound(set(a), set(g))?;
            for k in n..k_levels {
                orders.parents[k][g] = Some(a);
            }
        } else if gamma.is_limit() {
            let mut seq = Vec::new();
            for k in 0u64.. {
                match orders.position(&gamma.fundamental_sequence(k)?) {
                    Some(p) if p < g => seq.push(p),
                    _ => break,
                }
            }
            let mut starts: Vec<usize> = Vec::new();
            for k in 0..seq.len() {
                let floor = starts.last().map_or(k + 1, |&prev| (prev + 1).max(k + 1));
                let found = (floor..k_levels).find(|&n| {
                    seq[..=k].windows(2).all(|w| orders.lt(n, w[0], w[1]))
                        && seq[..=k]
                            .iter()
                            .all(|&i| set(i).members().all(|x| x < n || set(g).contains(x)))
                });
                match found {
                    Some(n) => starts.push(n),
                    None => break,
                }
            }
            for (k, &start) in starts.iter().enumerate() {
                let end = starts.get(k + 1).copied().unwrap_or(k_levels);
                for level in start..end {
                    orders.parents[level][g] = Some(seq[k]);
                }
            }
        }
    }
    Ok(orders)
}

/// The first `m` ordinals of the form `ω·i + j` with `j < block`, in order.
pub fn block_indices(m: usize, block: usize) -> Vec<OrdNotation> {
    (0..m)
        .map(|t| {
            let (i, j) = ((t / block.max(1)) as u64, (t % block.max(1)) as u64);
            let mut cnf = Vec::new();
            if i > 0 {
                cnf.push((1, i));
            }
            if j > 0 {
                cnf.push((0, j));
            }
            OrdNotation::from_cnf(cnf).expect("valid normal form")
        })
        .collect()
}
