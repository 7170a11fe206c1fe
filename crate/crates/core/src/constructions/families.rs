use std::collections::BTreeMap;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CoherentFamily;
use crate::coeffs::CoeffDomain;
use crate::index::WindowedSet;
use crate::{Error, Result};

/// Fewest private elements a set must have to carry its own `b_ξ`.
pub const MIN_PRIVATE: usize = 4;

/// Seeded sets where every point has a random owner `ξ`; `a_ξ` holds the
/// points it owns plus a random half of the points owned by earlier indices.
/// Owned points are never in an earlier set.
pub fn seeded_sets(count: usize, window: usize, seed: u64) -> Vec<WindowedSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let owner: Vec<usize> = (0..window).map(|_| rng.gen_range(0..count.max(1))).collect();
    (0..count)
        .map(|xi| {
            let mut a = WindowedSet::empty(window);
            for (k, &o) in owner.iter().enumerate() {
                if o == xi || (o < xi && rng.gen_bool(0.5)) {
                    a.insert(k);
                }
            }
            a
        })
        .collect()
}

/// `b_ξ = a_ξ ∖ ⋃_{η<ξ} a_η`, required to have at least four elements.
pub fn private_parts(sets: &[WindowedSet]) -> Result<Vec<WindowedSet>> {
    let Some(first) = sets.first() else {
        return Ok(Vec::new());
    };
    let mut seen = WindowedSet::empty(first.window());
    let mut out = Vec::with_capacity(sets.len());
    for (xi, a) in sets.iter().enumerate() {
        if a.window() != first.window() {
            return Err(Error::WindowMismatch {
                left: first.window(),
                right: a.window(),
            });
        }
        let b = a.difference(&seen);
        if b.len() < MIN_PRIVATE {
            return Err(Error::Infeasible {
                stage: format!("b_{xi} selection"),
                reason: format!(
                    "set {xi} has {} elements outside the earlier sets, {MIN_PRIVATE} needed",
                    b.len()
                ),
            });
        }
        seen = seen.union(a);
        out.push(b);
    }
    Ok(out)
}

/// Extends `g_ξ : b_ξ → G` to `f_ξ : a_ξ → G` stage by stage: with bounds
/// `n_η` past `a_η ∩ b_ξ` on which the earlier functions pairwise agree,
/// `f_ξ` copies the first `f_η` with `k ∈ a_η ∖ n_η`, else `g_ξ`, else 0.
fn extend_family(
    sets: &[WindowedSet],
    b: &[WindowedSet],
    g: &[BTreeMap<usize, BigInt>],
    domain: CoeffDomain,
) -> Result<CoherentFamily> {
    let window = sets.first().map_or(0, WindowedSet::window);
    let mut f: Vec<BTreeMap<usize, BigInt>> = Vec::with_capacity(sets.len());
    let value = |f: &[BTreeMap<usize, BigInt>], i: usize, k: usize| f[i].get(&k).cloned().unwrap_or_default();
    for xi in 0..sets.len() {
        let mut bounds: Vec<usize> = Vec::with_capacity(xi);
        for eta in 0..xi {
            let floor = sets[eta]
                .intersection(&b[xi])
                .members()
                .last()
                .map_or(0, |k| k + 1);
            let n = (floor..=window)
                .find(|&n| {
                    (0..eta).all(|zeta| {
                        sets[eta]
                            .intersection(&sets[zeta])
                            .members()
                            .filter(|&k| k >= n && k >= bounds[zeta])
                            .all(|k| value(&f, eta, k) == value(&f, zeta, k))
                    })
                })
                .expect("n = N always works");
            bounds.push(n);
        }
        let mut fx = BTreeMap::new();
        for k in sets[xi].members() {
            let v = match (0..xi).find(|&eta| sets[eta].contains(k) && k >= bounds[eta]) {
                Some(eta) => value(&f, eta, k),
                None => g[xi].get(&k).cloned().unwrap_or_default(),
            };
            let v = domain.normalize(v);
            if v != BigInt::from(0) {
                fx.insert(k, v);
            }
        }
        f.push(fx);
    }
    CoherentFamily::from_parts(window, domain, sets.to_vec(), f)
}

/// Integer family whose `f_ξ` sends each point of `b_ξ` to the next point of
/// `b_ξ`. The largest point of `b_ξ` has no successor in the window and is
/// sent to `N`.
pub fn coherent_family_z(sets: &[WindowedSet]) -> Result<CoherentFamily> {
    let b = private_parts(sets)?;
    let g: Vec<BTreeMap<usize, BigInt>> = b
        .iter()
        .map(|bx| {
            let pts: Vec<usize> = bx.members().collect();
            pts.iter()
                .enumerate()
                .map(|(i, &k)| (k, BigInt::from(pts.get(i + 1).copied().unwrap_or(bx.window()))))
                .collect()
        })
        .collect();
    extend_family(sets, &b, &g, CoeffDomain::Integers)
}

/// `ℤ₂` family with `f_ξ` constant `h(ξ)` on `b_ξ`.
pub fn coherent_family_z2_constant(h: &[bool], sets: &[WindowedSet]) -> Result<CoherentFamily> {
    if h.len() != sets.len() {
        return Err(Error::Dimension(format!("{} bits for {} sets", h.len(), sets.len())));
    }
    let b = private_parts(sets)?;
    let g: Vec<BTreeMap<usize, BigInt>> = b
        .iter()
        .zip(h)
        .map(|(bx, &bit)| bx.members().map(|k| (k, BigInt::from(bit as u8))).collect())
        .collect();
    extend_family(sets, &b, &g, CoeffDomain::Mod2)
}

/// Every `h ∈ {0,1}^M` whose constant family `f` trivializes from `bound`
/// on. The sets must be feasible for [`coherent_family_z2_constant`].
pub fn compatible_constants(sets: &[WindowedSet], f: &[BigInt], bound: usize) -> Result<Vec<Vec<bool>>> {
    let m = sets.len();
    if m > 16 {
        return Err(Error::Cap(format!("2^{m} bit vectors")));
    }
    let mut out = Vec::new();
    for mask in 0u32..1 << m {
        let h: Vec<bool> = (0..m).map(|i| mask >> i & 1 == 1).collect();
        if coherent_family_z2_constant(&h, sets)?.trivialized_by(f, bound) {
            out.push(h);
        }
    }
    Ok(out)
}

/// A finitely branching tree of increasing sequences in `[0, N)`, stored as
/// the children of each node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryTree {
    window: usize,
    children: BTreeMap<Vec<usize>, Vec<usize>>,
}

impl BinaryTree {
    /// Tree whose nodes ending in `v` have children `2v+2 < 2v+3`, and whose
    /// root has children `0 < 1`. Every integer sits at exactly one node.
    pub fn heap(window: usize) -> Self {
        let mut children = BTreeMap::new();
        let mut frontier = vec![Vec::new()];
        while let Some(s) = frontier.pop() {
            let (u0, u1) = match s.last() {
                None => (0, 1),
                Some(&v) => (2 * v + 2, 2 * v + 3),
            };
            if u1 >= window {
                continue;
            }
            for u in [u0, u1] {
                let mut t = s.clone();
                t.push(u);
                frontier.push(t);
            }
            children.insert(s, vec![u0, u1]);
        }
        BinaryTree { window, children }
    }

    /// Any tree given by its branching nodes; children must be increasing and
    /// above the node's last entry.
    pub fn from_children(window: usize, children: BTreeMap<Vec<usize>, Vec<usize>>) -> Result<Self> {
        for (s, c) in &children {
            let floor = s.last().map_or(0, |v| v + 1);
            if c.is_empty() || c.len() > 2 || c.windows(2).any(|w| w[0] >= w[1]) || c[0] < floor {
                return Err(Error::Malformed(format!("bad children {c:?} at {s:?}")));
            }
            if c.iter().any(|&u| u >= window) {
                return Err(Error::Malformed(format!("children {c:?} leave the window")));
            }
        }
        Ok(BinaryTree { window, children })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn children(&self, s: &[usize]) -> &[usize] {
        self.children.get(s).map_or(&[], Vec::as_slice)
    }

    /// The branch taking child `bits[d]` at depth `d` (0 past the end of
    /// `bits`) until a leaf.
    pub fn branch(&self, bits: &[bool]) -> Vec<usize> {
        let mut t = Vec::new();
        loop {
            let c = self.children(&t);
            if c.is_empty() {
                return t;
            }
            let i = bits.get(t.len()).copied().unwrap_or(false) as usize;
            t.push(c[i.min(c.len() - 1)]);
        }
    }

    fn is_maximal_branch(&self, branch: &[usize]) -> bool {
        (0..branch.len()).all(|d| self.children(&branch[..d]).contains(&branch[d]))
            && self.children(branch).is_empty()
    }
}

/// `ℤ₂` family on branches `b_ξ` of a tree: `g_ξ(k) = i` iff the point of
/// `b_ξ` after `k` is child `i` of the node ending at `k`. The sets are the
/// branches themselves.
pub fn coherent_family_z2_tree(tree: &BinaryTree, branches: &[Vec<usize>]) -> Result<CoherentFamily> {
    for (xi, br) in branches.iter().enumerate() {
        if !tree.is_maximal_branch(br) {
            return Err(Error::Precondition(format!("branch {xi} leaves the tree")));
        }
        if branches[..xi].contains(br) {
            return Err(Error::Precondition(format!("branch {xi} repeats an earlier branch")));
        }
    }
    let sets = branches
        .iter()
        .map(|br| WindowedSet::from_members(tree.window(), br.iter().copied()))
        .collect::<Result<Vec<_>>>()?;
    let g: Vec<BTreeMap<usize, BigInt>> = branches
        .iter()
        .map(|br| {
            (0..br.len())
                .map(|i| {
                    let bit = br
                        .get(i + 1)
                        .map_or(0, |next| tree.children(&br[..=i]).iter().position(|u| u == next).unwrap_or(0));
                    (br[i], BigInt::from(bit))
                })
                .collect()
        })
        .collect();
    extend_family(&sets, &sets, &g, CoeffDomain::Mod2)
}

/// Replays the tree coding: starting from `seed`, the next point after `m`
/// is child `f(m)` of the current node. Returns the points from `start` on.
pub fn branch_reconstruct(tree: &BinaryTree, f: &[BigInt], seed: &[usize], start: usize) -> Result<WindowedSet> {
    if f.len() != tree.window() {
        return Err(Error::Dimension(format!("function of length {} on window {}", f.len(), tree.window())));
    }
    let mut t = seed.to_vec();
    loop {
        let c = tree.children(&t);
        match c.len() {
            0 => break,
            1 => t.push(c[0]),
            _ => {
                let m = *t
                    .last()
                    .ok_or_else(|| Error::Precondition("an empty seed cannot choose at the root".into()))?;
                let bit = CoeffDomain::Mod2.normalize(f[m].clone());
                t.push(c[usize::from(bit != BigInt::from(0))]);
            }
        }
    }
    WindowedSet::from_members(tree.window(), t.into_iter().filter(|&k| k >= start))
}
