//! Coherent families and cochains built explicitly on finite windows, each
//! with certificates that can be re-checked by direct scan.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use serde_json::{json, Value};

use crate::coeffs::CoeffDomain;
use crate::index::{ModFiniteCert, WindowedSet};
use crate::{Error, Result};

mod families;
mod forks;
mod hausdorff;
mod mitchell;
mod orders;

pub use families::{
    branch_reconstruct, coherent_family_z, compatible_constants, coherent_family_z2_constant, coherent_family_z2_tree,
    private_parts, seeded_sets, BinaryTree,
};
pub use forks::{fork_extensions, square_fork_scenario, ForkScenario, Twist};
pub use hausdorff::{hausdorff_family, HausdorffFamily, PairReport};
pub use mitchell::{mitchell_base_cochain, mitchell_twist_step};
pub use orders::{block_indices, level_count, tree_orderings, OrderCheck, OrderViolation, TreeOrders};

/// A function on `[0, N)`; only its values on a carrier set are ever read.
pub type WindowFn = Vec<BigInt>;

/// Functions `f_ξ : a_ξ → G` on a common window, with a certificate per pair
/// `ξ < η` that `f_ξ` and `f_η` agree on `a_ξ ∩ a_η` from the bound on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoherentFamily {
    window: usize,
    domain: CoeffDomain,
    sets: Vec<WindowedSet>,
    /// Nonzero values only.
    functions: Vec<BTreeMap<usize, BigInt>>,
    certs: BTreeMap<(usize, usize), ModFiniteCert>,
}

/// Outcome of scanning every pair certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyCheck {
    pub checked: usize,
    pub passed: usize,
    /// Pairs whose certificate is wrong or above `N/2`.
    pub failures: Vec<(usize, usize)>,
}

impl FamilyCheck {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

impl CoherentFamily {
    /// Builds the family and computes the least bound for every pair.
    pub fn from_parts(
        window: usize,
        domain: CoeffDomain,
        sets: Vec<WindowedSet>,
        functions: Vec<BTreeMap<usize, BigInt>>,
    ) -> Result<Self> {
        if sets.len() != functions.len() {
            return Err(Error::Dimension(format!(
                "{} sets but {} functions",
                sets.len(),
                functions.len()
            )));
        }
        for (i, (a, f)) in sets.iter().zip(&functions).enumerate() {
            if a.window() != window {
                return Err(Error::WindowMismatch {
                    left: window,
                    right: a.window(),
                });
            }
            if let Some(k) = f.keys().find(|&&k| !a.contains(k)) {
                return Err(Error::Malformed(format!("function {i} is defined at {k} outside its set")));
            }
        }
        let functions = functions
            .into_iter()
            .map(|f| {
                f.into_iter()
                    .map(|(k, v)| (k, domain.normalize(v)))
                    .filter(|(_, v)| !v.is_zero())
                    .collect()
            })
            .collect();
        let mut fam = CoherentFamily {
            window,
            domain,
            sets,
            functions,
            certs: BTreeMap::new(),
        };
        for j in 0..fam.len() {
            for i in 0..j {
                let bound = fam.least_agreement_bound(i, j);
                fam.certs.insert((i, j), ModFiniteCert { bound });
            }
        }
        Ok(fam)
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn domain(&self) -> CoeffDomain {
        self.domain
    }

    /// Number of indices `M`.
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn set(&self, i: usize) -> &WindowedSet {
        &self.sets[i]
    }

    pub fn sets(&self) -> &[WindowedSet] {
        &self.sets
    }

    pub fn function(&self, i: usize) -> &BTreeMap<usize, BigInt> {
        &self.functions[i]
    }

    pub fn value(&self, i: usize, k: usize) -> BigInt {
        self.functions[i].get(&k).cloned().unwrap_or_default()
    }

    pub fn certs(&self) -> &BTreeMap<(usize, usize), ModFiniteCert> {
        &self.certs
    }

    /// Least `m` such that `f_i` and `f_j` agree on `a_i ∩ a_j ∩ [m, N)`.
    pub fn least_agreement_bound(&self, i: usize, j: usize) -> usize {
        self.sets[i]
            .intersection(&self.sets[j])
            .members()
            .filter(|&k| self.value(i, k) != self.value(j, k))
            .last()
            .map_or(0, |k| k + 1)
    }

    /// Re-checks every stored certificate by direct scan.
    pub fn verify(&self) -> FamilyCheck {
        let mut failures = Vec::new();
        for (&(i, j), cert) in &self.certs {
            let common = self.sets[i].intersection(&self.sets[j]);
            let agrees = common
                .members()
                .filter(|&k| k >= cert.bound)
                .all(|k| self.value(i, k) == self.value(j, k));
            if !agrees || !cert.within_cap(self.window) {
                failures.push((i, j));
            }
        }
        let expected = self.len() * self.len().saturating_sub(1) / 2;
        if self.certs.len() != expected {
            for j in 0..self.len() {
                for i in 0..j {
                    if !self.certs.contains_key(&(i, j)) {
                        failures.push((i, j));
                    }
                }
            }
        }
        failures.sort_unstable();
        FamilyCheck {
            checked: expected,
            passed: expected - failures.len().min(expected),
            failures,
        }
    }

    /// Whether `f` agrees with every `f_ξ` on `a_ξ ∩ [bound, N)`.
    pub fn trivialized_by(&self, f: &[BigInt], bound: usize) -> bool {
        self.sets.iter().enumerate().all(|(i, a)| {
            a.members()
                .filter(|&k| k >= bound)
                .all(|k| self.domain.normalize(f[k].clone()) == self.value(i, k))
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "N": self.window,
            "M": self.len(),
            "domain": self.domain.name(),
            "sets": self.sets.iter().map(WindowedSet::to_bitstring).collect::<Vec<_>>(),
            "functions": self.functions.iter().map(|f| {
                f.iter().map(|(k, v)| (k.to_string(), Value::String(v.to_string()))).collect::<serde_json::Map<_, _>>()
            }).collect::<Vec<_>>(),
            "certs": self.certs.iter().map(|(&(i, j), c)| json!([i, j, c.bound])).collect::<Vec<_>>(),
        })
    }

    /// Reads the JSON form; certificates are taken as given so that
    /// [`CoherentFamily::verify`] can judge them.
    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |what: &str| Error::Malformed(format!("family: {what}"));
        let window = v["N"].as_u64().ok_or_else(|| bad("N"))? as usize;
        let domain = CoeffDomain::parse(v["domain"].as_str().ok_or_else(|| bad("domain"))?)?;
        let sets = v["sets"]
            .as_array()
            .ok_or_else(|| bad("sets"))?
            .iter()
            .map(|s| WindowedSet::from_bitstring(s.as_str().unwrap_or("?")))
            .collect::<Result<Vec<_>>>()?;
        let mut functions = Vec::new();
        for f in v["functions"].as_array().ok_or_else(|| bad("functions"))? {
            let mut map = BTreeMap::new();
            for (k, val) in f.as_object().ok_or_else(|| bad("function"))? {
                let k: usize = k.parse().map_err(|_| bad("point"))?;
                let val: BigInt = val.as_str().and_then(|s| s.parse().ok()).ok_or_else(|| bad("value"))?;
                map.insert(k, val);
            }
            functions.push(map);
        }
        let mut fam = CoherentFamily::from_parts(window, domain, sets, functions)?;
        if v.get("M").and_then(Value::as_u64) != Some(fam.len() as u64) {
            return Err(bad("M"));
        }
        fam.certs.clear();
        for c in v["certs"].as_array().ok_or_else(|| bad("certs"))? {
            let t: Vec<usize> = c
                .as_array()
                .filter(|a| a.len() == 3)
                .and_then(|a| a.iter().map(|x| x.as_u64().map(|x| x as usize)).collect())
                .ok_or_else(|| bad("cert"))?;
            if t[0] >= t[1] || t[1] >= fam.len() {
                return Err(bad("cert indices"));
            }
            fam.certs.insert((t[0], t[1]), ModFiniteCert { bound: t[2] });
        }
        Ok(fam)
    }
}
