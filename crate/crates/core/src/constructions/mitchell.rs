use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::One;

use crate::cochain::{coboundary, is_coherent, star_lambda, Cochain, Coherence};
use crate::index::OrdTuple;
use crate::system::{mitchell_system, Elem, SystemRef};
use crate::{Error, Result};

/// On `mitchell_system(0, B)`: `x_{α,β}` is the indicator of the members of
/// `cofseq` lying in `[α, β)`.
pub fn mitchell_base_cochain(size: usize, cofseq: &[usize]) -> Result<Cochain> {
    if cofseq.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("the sequence must be strictly increasing".into()));
    }
    if let Some(&bad) = cofseq.iter().find(|&&a| a >= size) {
        return Err(Error::Precondition(format!("{bad} lies outside [0,{size})")));
    }
    let s: SystemRef = Arc::new(mitchell_system(0, size));
    let mut x = Cochain::zero(s.clone(), 1);
    for alpha in 0..size {
        for beta in alpha..size {
            let coords: Vec<(usize, BigInt)> = cofseq
                .iter()
                .filter(|&&xi| alpha <= xi && xi < beta)
                .map(|&xi| {
                    let i = s.basis_index(alpha, &xi.to_string()).expect("ξ ≥ α is a basis label");
                    (i, BigInt::one())
                })
                .collect();
            if !coords.is_empty() {
                x.set(OrdTuple::new(vec![alpha, beta]), Elem::new(alpha, coords, s.domain()))?;
            }
        }
    }
    Ok(x)
}

/// One step of the twisted induction on Boolean systems: given `x` of arity
/// `n+1` on `[0, λ)`, a trivializer `y` of `x` and a coherent `z` one level
/// down, returns the extension to `[0, λ]` with `x_{ᾱ,λ} = y_ᾱ + w_ᾱ`, where
/// `w_ᾱ` is `z_ᾱ` with `λ` appended to every basis tuple.
pub fn mitchell_twist_step(x: &Cochain, y: &Cochain, z: &Cochain) -> Result<Cochain> {
    let shape = x
        .system()
        .mitchell_shape()
        .ok_or_else(|| Error::Precondition("x does not live on a Boolean system".into()))?;
    let n = shape.level;
    if n == 0 {
        return Err(Error::Precondition("twisting needs level at least 1".into()));
    }
    if x.arity() != n + 1 || y.arity() != n || z.arity() != n {
        return Err(Error::Arity {
            expected: n + 1,
            found: x.arity(),
        });
    }
    if coboundary(y)? != *x {
        return Err(Error::Precondition("δ(y) differs from x".into()));
    }
    let lower = z.system().mitchell_shape();
    if lower.map(|s| (s.level, s.size)) != Some((n - 1, shape.size)) {
        return Err(Error::SystemMismatch);
    }
    if let Coherence::FailsAt(t) = is_coherent(z)? {
        return Err(Error::Incoherent(t.0));
    }
    let lambda = shape.size;
    let big: SystemRef = Arc::new(mitchell_system(n, lambda + 1));
    let mut out = star_lambda(x, y, big.clone())?;
    for (t, e) in z.entries() {
        let node = t.first();
        let coords = e.coords().iter().map(|(&i, c)| {
            let label = format!("{},{lambda}", z.system().basis(node)[i]);
            let j = big.basis_index(node, &label).expect("tuple extended by λ");
            (j, c.clone())
        });
        out.add_entry(t.push(lambda), &Elem::new(node, coords, big.domain()))?;
    }
    Ok(out)
}
