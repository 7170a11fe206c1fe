use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::One;
use serde_json::{json, Value};

use super::{CoherentFamily, TreeOrders};
use crate::coeffs::CoeffDomain;
use crate::index::{Tower, WindowedSet};
use crate::{Error, Result};

/// Per pair `α < β`: the least level `m` with `α <_m β` and the finite set
/// `{ξ < β : ξ <_{m-1} β}` that controls the certificate bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairReport {
    pub lower: usize,
    pub upper: usize,
    pub level: usize,
    pub controlling: Vec<usize>,
    pub bound: usize,
}

/// The family `f_α = 1_{b_α}` on `a_α` together with the points `n_{ξ,α}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HausdorffFamily {
    pub family: CoherentFamily,
    pub orders: TreeOrders,
    pub tower: Tower,
    pub b: Vec<WindowedSet>,
    /// `points[(ξ, α)] = n_{ξ,α}`.
    pub points: BTreeMap<(usize, usize), usize>,
    pub pairs: Vec<PairReport>,
}

impl HausdorffFamily {
    pub fn point(&self, xi: usize, alpha: usize) -> usize {
        self.points[&(xi, alpha)]
    }

    pub fn to_json(&self) -> Value {
        json!({
            "family": self.family.to_json(),
            "orders": self.orders.to_json(),
            "b": self.b.iter().map(WindowedSet::to_bitstring).collect::<Vec<_>>(),
            "points": self.points.iter().map(|(&(x, a), &n)| json!([x, a, n])).collect::<Vec<_>>(),
            "pairs": self.pairs.iter().map(|p| json!({
                "lower": p.lower,
                "upper": p.upper,
                "level": p.level,
                "controlling": p.controlling,
                "bound": p.bound,
            })).collect::<Vec<_>>(),
        })
    }
}

/// For `ξ < α`: `n` is the least level with `ξ <_n α`, `η` the least index
/// above `ξ` with `ξ <_n η ≤_n α`, and `n_{ξ,α}` the least point of
/// `a_η ∖ a_ξ` above `n`. Then `b_α = {n_{ξ,α} : ξ < α}`.
pub fn hausdorff_family(tower: &Tower, orders: &TreeOrders) -> Result<HausdorffFamily> {
    let m = tower.len();
    if orders.len() != m {
        return Err(Error::Dimension(format!("orders on {} indices, tower of length {m}", orders.len())));
    }
    let window = tower.window();
    let mut points = BTreeMap::new();
    let mut b = Vec::with_capacity(m);
    for alpha in 0..m {
        let mut ba = WindowedSet::empty(window);
        for xi in 0..alpha {
            let n = orders.relating_level(xi, alpha).ok_or_else(|| Error::Infeasible {
                stage: "hausdorff".into(),
                reason: format!("{xi} and {alpha} are related in none of the {} orders", orders.levels()),
            })?;
            let eta = (xi + 1..=alpha)
                .find(|&e| orders.lt(n, xi, e) && orders.le(n, e, alpha))
                .expect("α itself qualifies");
            let point = tower
                .level(eta)
                .difference(tower.level(xi))
                .members()
                .find(|&k| k > n)
                .ok_or_else(|| Error::Infeasible {
                    stage: "hausdorff".into(),
                    reason: format!("no point of a_{eta} ∖ a_{xi} above {n} in a window of {window}"),
                })?;
            points.insert((xi, alpha), point);
            ba.insert(point);
        }
        b.push(ba);
    }
    let functions = b
        .iter()
        .map(|ba| ba.members().map(|k| (k, BigInt::one())).collect())
        .collect();
    let family = CoherentFamily::from_parts(window, CoeffDomain::Mod2, tower.levels().to_vec(), functions)?;
    let mut pairs = Vec::new();
    for beta in 0..m {
        for alpha in 0..beta {
            let level = orders.relating_level(alpha, beta).unwrap_or(orders.levels());
            let controlling = if level == 0 {
                Vec::new()
            } else {
                (0..beta).filter(|&x| orders.lt(level - 1, x, beta)).collect()
            };
            pairs.push(PairReport {
                lower: alpha,
                upper: beta,
                level,
                controlling,
                bound: family.certs()[&(alpha, beta)].bound,
            });
        }
    }
    Ok(HausdorffFamily {
        family,
        orders: orders.clone(),
        tower: tower.clone(),
        b,
        points,
        pairs,
    })
}
