//! `limⁿ` of finite systems as `ker δ^{n+1} / im δⁿ`, an exhaustive `ℤ₂`
//! oracle, and the trivializer for flasque systems along a cofinal chain.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::cochain::{coboundary, coboundary_matrix, is_coherent, Cochain, CochainSpace, Coherence};
use crate::coeffs::{kernel_basis, smith_normal_form, solve_linear, CoeffDomain, GroupInvariants, SparseMatrix, Vector};
use crate::index::{NodeId, OrdTuple};
use crate::system::{project, Elem, SystemRef};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitResult {
    pub n: usize,
    pub invariants: GroupInvariants,
    pub kernel_rank: usize,
    pub image_rank: usize,
    /// Coherent cochains whose classes generate the quotient, one per
    /// nontrivial cyclic summand.
    pub witnesses: Vec<Cochain>,
}

impl LimitResult {
    pub fn to_json(&self, system_ref: &str) -> Value {
        json!({
            "n": self.n,
            "rank": self.invariants.rank,
            "torsion": self.invariants.torsion.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
            "kernelRank": self.kernel_rank,
            "imageRank": self.image_rank,
            "witnesses": self.witnesses.iter().map(|w| w.to_json(system_ref)).collect::<Vec<_>>(),
        })
    }
}

/// Greedy `ℤ₂` basis keyed by leading (highest) set bit.
#[derive(Default)]
struct XorBasis {
    rows: Vec<(usize, Vec<u64>)>,
}

fn pack(v: &[BigInt], words: usize) -> Vec<u64> {
    let mut out = vec![0u64; words];
    for (i, x) in v.iter().enumerate() {
        if x.is_odd() {
            out[i / 64] ^= 1 << (i % 64);
        }
    }
    out
}

fn top_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .rev()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
}

impl XorBasis {
    /// Inserts `v`; returns whether it was independent of the basis so far.
    fn insert(&mut self, mut v: Vec<u64>) -> bool {
        while let Some(b) = top_bit(&v) {
            match self.rows.iter().find(|(p, _)| *p == b) {
                Some((_, r)) => {
                    for (x, y) in v.iter_mut().zip(r) {
                        *x ^= *y;
                    }
                }
                None => {
                    self.rows.push((b, v));
                    return true;
                }
            }
        }
        false
    }
}

/// `limⁿ` of `s`, with generators of the quotient.
pub fn derived_limit(s: &SystemRef, n: usize) -> Result<LimitResult> {
    let space = CochainSpace::new(s.clone(), n);
    let next = coboundary_matrix(s, n + 1);
    let prev = coboundary_matrix(s, n);
    match s.domain() {
        CoeffDomain::Mod2 => {
            let kernel = kernel_basis(&next, CoeffDomain::Mod2);
            let words = space.dim().div_ceil(64).max(1);
            let mut basis = XorBasis::default();
            let mut image_rank = 0;
            for c in 0..prev.cols() {
                if basis.insert(pack(&prev.column(c), words)) {
                    image_rank += 1;
                }
            }
            let mut witnesses = Vec::new();
            for k in &kernel {
                if basis.insert(pack(k, words)) {
                    witnesses.push(space.from_vector(k)?);
                }
            }
            Ok(LimitResult {
                n,
                invariants: GroupInvariants::free(witnesses.len()),
                kernel_rank: kernel.len(),
                image_rank,
                witnesses,
            })
        }
        CoeffDomain::Integers => {
            let snf = smith_normal_form(&next);
            let r = snf.rank();
            let k = space.dim() - r;
            // coordinates of im δⁿ in the kernel basis given by columns r.. of R
            let coords = snf.right_inv.mul(&prev)?;
            let mut c = SparseMatrix::zeros(k, prev.cols());
            for (row, col, v) in coords.entries() {
                if row >= r {
                    c.set(row - r, col, v.clone());
                }
            }
            let inner = smith_normal_form(&c);
            let invariants = GroupInvariants::from_smith_diagonal(&inner.diagonal, k);
            let mut witnesses = Vec::new();
            for i in 0..k {
                let d = inner.diagonal.get(i).cloned().unwrap_or_default();
                if d.abs().is_one() {
                    continue;
                }
                let y = inner.left_inv.column(i);
                let mut x = vec![BigInt::zero(); space.dim()];
                for (j, yj) in y.iter().enumerate() {
                    if yj.is_zero() {
                        continue;
                    }
                    for (xi, rij) in x.iter_mut().zip(snf.right.column(r + j)) {
                        *xi += rij * yj;
                    }
                }
                witnesses.push(space.from_vector(&x)?);
            }
            Ok(LimitResult {
                n,
                invariants,
                kernel_rank: k,
                image_rank: inner.rank(),
                witnesses,
            })
        }
    }
}

/// Most coordinates the exhaustive oracle will enumerate over.
pub const BRUTE_FORCE_DIM_CAP: usize = 20;

fn unit_image_masks(s: &SystemRef, arity: usize) -> Result<(usize, Vec<Vec<u64>>)> {
    let src = CochainSpace::new(s.clone(), arity);
    let dst = CochainSpace::new(s.clone(), arity + 1);
    let words = dst.dim().div_ceil(64).max(1);
    let mut masks = Vec::with_capacity(src.dim());
    for pos in 0..src.dim() {
        let img = coboundary(&src.unit(pos))?;
        masks.push(pack(&dst.to_vector(&img)?, words));
    }
    Ok((src.dim(), masks))
}

/// `dim limⁿ` over `ℤ₂` by enumerating every cochain of arity `n` (to count
/// the coherent ones) and every cochain of arity `n-1` (to count the
/// distinct coboundaries).
pub fn brute_force_limit_mod2(s: &SystemRef, n: usize) -> Result<usize> {
    if s.domain() != CoeffDomain::Mod2 {
        return Err(Error::Precondition("the exhaustive oracle works over Mod2".into()));
    }
    let dim_n = CochainSpace::new(s.clone(), n).dim();
    let dim_prev = if n == 0 {
        0
    } else {
        CochainSpace::new(s.clone(), n - 1).dim()
    };
    if dim_n > BRUTE_FORCE_DIM_CAP || dim_prev > BRUTE_FORCE_DIM_CAP {
        return Err(Error::Cap(format!(
            "cochain spaces of dimension {dim_n} and {dim_prev} exceed 2^{BRUTE_FORCE_DIM_CAP} states"
        )));
    }
    // coherent cochains, walked in Gray-code order
    let (_, cols) = unit_image_masks(s, n)?;
    let mut acc = vec![0u64; cols.first().map_or(1, Vec::len)];
    let mut coherent: u64 = 1;
    for step in 1u64..(1 << dim_n) {
        let bit = step.trailing_zeros() as usize;
        for (a, c) in acc.iter_mut().zip(&cols[bit]) {
            *a ^= *c;
        }
        if acc.iter().all(|w| *w == 0) {
            coherent += 1;
        }
    }
    let mut images: HashSet<u64> = HashSet::from([0]);
    if n > 0 {
        let (_, cols) = unit_image_masks(s, n - 1)?;
        let mut acc = 0u64;
        for step in 1u64..(1 << dim_prev) {
            let bit = step.trailing_zeros() as usize;
            acc ^= cols[bit][0];
            images.insert(acc);
        }
    }
    let ratio = coherent / images.len() as u64;
    debug_assert!(ratio.is_power_of_two());
    Ok(ratio.trailing_zeros() as usize)
}

/// Deterministic choice of preimage: any solution, then reduced against an
/// echelon basis of the kernel from the highest coordinate down. For
/// coordinate projections this is extension by zero.
fn section(m: &SparseMatrix, target: &[BigInt], domain: CoeffDomain) -> Result<Option<Vector>> {
    let Some(mut x) = solve_linear(m, target, domain)? else {
        return Ok(None);
    };
    let mut rows = kernel_basis(m, domain);
    let mut echelon: Vec<(usize, Vector)> = Vec::new();
    for col in (0..m.cols()).rev() {
        loop {
            let live: Vec<usize> = (0..rows.len())
                .filter(|&i| !domain.is_zero(&rows[i][col]))
                .collect();
            if live.len() <= 1 {
                if let Some(&i) = live.first() {
                    echelon.push((col, rows.swap_remove(i)));
                }
                break;
            }
            // Euclid on the column entries
            let pivot = *live
                .iter()
                .min_by_key(|&&i| rows[i][col].abs())
                .expect("nonempty");
            let p = rows[pivot].clone();
            for &i in &live {
                if i != pivot {
                    let q = rows[i][col].div_floor(&p[col]);
                    for (a, b) in rows[i].iter_mut().zip(&p) {
                        *a = domain.normalize(&*a - &q * b);
                    }
                }
            }
        }
    }
    for (col, row) in &echelon {
        let c = &row[*col];
        let q = if c.abs().is_one() {
            &x[*col] * c
        } else {
            x[*col].div_floor(c)
        };
        if !q.is_zero() {
            for (a, b) in x.iter_mut().zip(row) {
                *a = domain.normalize(&*a - &q * b);
            }
        }
    }
    Ok(Some(x))
}

/// A trivializer of the coherent arity-1 cochain `z` on a flasque system,
/// built along the cofinal chain: `x_{μ₀} = 0`,
/// `p(x_{μ_{i+1}}) = x_{μ_i} + z_{μ_i μ_{i+1}}`, and off the chain
/// `x_λ = p^{μ_i}_λ(x_{μ_i}) - z_{λ μ_i}` for the least `μ_i ≥ λ`.
pub fn goblot_trivialize(s: &SystemRef, chain: &[NodeId], z: &Cochain) -> Result<Cochain> {
    if !s.is_flasque() {
        return Err(Error::Precondition("the system is not flasque".into()));
    }
    if z.arity() != 1 {
        return Err(Error::Arity {
            expected: 1,
            found: z.arity(),
        });
    }
    if !crate::cochain::same_system(z.system(), s) {
        return Err(Error::SystemMismatch);
    }
    let p = s.poset();
    if chain.is_empty() || !p.is_chain(chain) || !p.is_cofinal(chain) {
        return Err(Error::Precondition("expected a nonempty cofinal chain".into()));
    }
    if let Coherence::FailsAt(t) = is_coherent(z)? {
        return Err(Error::Incoherent(t.0));
    }
    let mut mu: Vec<NodeId> = chain.to_vec();
    mu.sort_by_key(|&v| p.nodes().filter(|&u| p.leq(u, v)).count());
    mu.dedup();
    let d = s.domain();
    let mut values: Vec<Option<Elem>> = vec![None; p.len()];
    values[mu[0]] = Some(Elem::zero(mu[0]));
    for w in mu.windows(2) {
        let (a, b) = (w[0], w[1]);
        let want = values[a]
            .as_ref()
            .expect("filled in order")
            .add(&z.get(&OrdTuple::new(vec![a, b])), d)?;
        let m = s.edge(a, b).expect("chain is ordered");
        let pre = section(m, &want.to_dense(s.dim(a)), d)?
            .ok_or_else(|| Error::Precondition(format!("map {a}≤{b} is not onto")))?;
        values[b] = Some(Elem::from_dense(b, &pre, d));
    }
    for v in p.nodes() {
        if values[v].is_some() {
            continue;
        }
        let top = *mu.iter().find(|&&m| p.leq(v, m)).expect("cofinal");
        let from_top = project(s, values[top].as_ref().expect("chain filled"), v)?;
        values[v] = Some(from_top.sub(&z.get(&OrdTuple::new(vec![v, top])), d)?);
    }
    let x = Cochain::from_entries(
        s.clone(),
        0,
        values
            .into_iter()
            .enumerate()
            .map(|(v, e)| (OrdTuple::new(vec![v]), e.expect("every node filled"))),
    )?;
    debug_assert_eq!(coboundary(&x)?, *z);
    Ok(x)
}

/// Finite directed posets have a maximum, so `limⁿ = 0` is predicted for
/// every `n ≥ 1`; nothing is predicted otherwise.
pub fn vanishing_expectation(s: &SystemRef, n: usize) -> bool {
    n >= 1 && !s.poset().is_empty() && s.poset().is_directed()
}

#[cfg(test)]
mod tests;
