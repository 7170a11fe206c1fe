use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Signed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cochain::{coboundary, is_coherent, random_cochain, sign, star_lambda, Coherence, Cochain};
use crate::coeffs::CoeffDomain;
use crate::limits::derived_limit;
use crate::system::{square_with_top, square_without_top, Elem, SystemRef, SystemSpec};
use crate::{Error, Result};

/// The two one-step extensions `x ∗_λ w` and `x ∗_λ (w + z)` of `x` to `big`.
/// Requires `(-1)^n w` to trivialize `x` (`n` the arity of `x`) and `z`
/// coherent, so that both extensions are coherent.
pub fn fork_extensions(x: &Cochain, w: &Cochain, z: &Cochain, big: SystemRef) -> Result<(Cochain, Cochain)> {
    let n = x.arity();
    if n == 0 || w.arity() != n - 1 || z.arity() != n - 1 {
        return Err(Error::Arity {
            expected: n.saturating_sub(1),
            found: if w.arity() + 1 != n { w.arity() } else { z.arity() },
        });
    }
    let signed = w.scale(&BigInt::from(sign(n)));
    if coboundary(&signed)? != *x {
        return Err(Error::Precondition(format!("(-1)^{n}·w does not trivialize x")));
    }
    if let Coherence::FailsAt(t) = is_coherent(z)? {
        return Err(Error::Incoherent(t.0));
    }
    let zero = star_lambda(x, w, big.clone())?;
    let one = star_lambda(x, &w.add(z)?, big)?;
    Ok((zero, one))
}

/// What the second fork adds on top of the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Twist {
    /// The generator of `lim¹` of the square without a top.
    Witness,
    /// A coboundary.
    Trivial,
    Zero,
}

impl Twist {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "witness" => Ok(Twist::Witness),
            "trivial" => Ok(Twist::Trivial),
            "zero" => Ok(Twist::Zero),
            _ => Err(Error::Malformed(format!("unknown twist {s:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Twist::Witness => "witness",
            Twist::Trivial => "trivial",
            Twist::Zero => "zero",
        }
    }
}

/// Forks of `x = δw` from the square without a top to the square with one.
#[derive(Debug, Clone)]
pub struct ForkScenario {
    pub x: Cochain,
    pub w: Cochain,
    pub z: Cochain,
    pub forks: (Cochain, Cochain),
}

fn unit_coefficients(c: &Cochain) -> Cochain {
    let mut out = Cochain::zero(c.system().clone(), c.arity());
    for (t, e) in c.entries() {
        let coords = e.coords().iter().map(|(&i, v)| (i, v.signum()));
        out.set(t.clone(), Elem::new(e.node, coords, c.domain()))
            .expect("same system");
    }
    out
}

/// Seeded `w` of arity 1 with coefficients `±1`, `x = δw`, and `z` of arity
/// 1 chosen by `twist`.
pub fn square_fork_scenario(domain: CoeffDomain, twist: Twist, seed: u64) -> Result<ForkScenario> {
    let small: SystemRef = Arc::new(SystemSpec::uniform(square_without_top(), 1, domain));
    let big: SystemRef = Arc::new(SystemSpec::uniform(square_with_top(), 1, domain));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = unit_coefficients(&random_cochain(&mut rng, small.clone(), 1, 0.5));
    let x = coboundary(&w)?;
    let z = match twist {
        Twist::Witness => derived_limit(&small, 1)?
            .witnesses
            .into_iter()
            .next()
            .ok_or_else(|| Error::Precondition("the square has no lim¹ witness".into()))?,
        Twist::Trivial => coboundary(&unit_coefficients(&random_cochain(&mut rng, small.clone(), 0, 0.7)))?,
        Twist::Zero => Cochain::zero(small, 1),
    };
    let forks = fork_extensions(&x, &w, &z, big)?;
    Ok(ForkScenario { x, w, z, forks })
}
