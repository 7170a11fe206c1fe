use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// An ordinal below `ω^ω` in Cantor normal form: `Σ ω^eᵢ · cᵢ` with strictly
/// decreasing exponents and positive coefficients. The empty form is `0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct OrdNotation {
    cnf: Vec<(u32, u64)>,
}

impl OrdNotation {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn finite(n: u64) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            OrdNotation { cnf: vec![(0, n)] }
        }
    }

    /// `ω^exp · coeff`.
    pub fn omega_term(exp: u32, coeff: u64) -> Self {
        if coeff == 0 {
            Self::zero()
        } else {
            OrdNotation {
                cnf: vec![(exp, coeff)],
            }
        }
    }

    /// Validates and builds a notation from CNF terms.
    pub fn from_cnf(cnf: Vec<(u32, u64)>) -> Result<Self> {
        if cnf.iter().any(|&(_, c)| c == 0) {
            return Err(Error::Malformed("zero coefficient in Cantor normal form".into()));
        }
        if cnf.windows(2).any(|w| w[0].0 <= w[1].0) {
            return Err(Error::Malformed("exponents must strictly decrease".into()));
        }
        Ok(OrdNotation { cnf })
    }

    pub fn cnf(&self) -> &[(u32, u64)] {
        &self.cnf
    }

    pub fn is_zero(&self) -> bool {
        self.cnf.is_empty()
    }

    pub fn is_successor(&self) -> bool {
        matches!(self.cnf.last(), Some(&(0, _)))
    }

    pub fn is_limit(&self) -> bool {
        !self.is_zero() && !self.is_successor()
    }

    /// `self + 1`.
    pub fn succ(&self) -> Self {
        let mut cnf = self.cnf.clone();
        match cnf.last_mut() {
            Some((0, c)) => *c += 1,
            _ => cnf.push((0, 1)),
        }
        OrdNotation { cnf }
    }

    /// `α` with `self = α + 1`.
    pub fn pred(&self) -> Option<Self> {
        if !self.is_successor() {
            return None;
        }
        let mut cnf = self.cnf.clone();
        let last = cnf.last_mut().expect("successor is nonzero");
        if last.1 == 1 {
            cnf.pop();
        } else {
            last.1 -= 1;
        }
        Some(OrdNotation { cnf })
    }

    /// Natural-sum style addition of a term `ω^exp · coeff` at the tail;
    /// only used with `exp` not exceeding the current last exponent.
    fn push_term(mut cnf: Vec<(u32, u64)>, exp: u32, coeff: u64) -> Vec<(u32, u64)> {
        if coeff == 0 {
            return cnf;
        }
        match cnf.last_mut() {
            Some((e, c)) if *e == exp => *c += coeff,
            _ => cnf.push((exp, coeff)),
        }
        cnf
    }

    /// The `k`-th member of the canonical fundamental sequence, plus one, so
    /// that every member is a successor ordinal.
    ///
    /// For `λ = β + ω^e·c` (last term, `e ≥ 1`) the canonical member is
    /// `β + ω^e·(c-1) + ω^(e-1)·k`.
    pub fn fundamental_sequence(&self, k: u64) -> Result<Self> {
        if !self.is_limit() {
            return Err(Error::Precondition(format!(
                "{self} is not a limit ordinal"
            )));
        }
        let mut cnf = self.cnf.clone();
        let (e, c) = cnf.pop().expect("limit is nonzero");
        let cnf = Self::push_term(cnf, e, c - 1);
        let cnf = Self::push_term(cnf, e - 1, k);
        Ok(OrdNotation { cnf }.succ())
    }
}

impl Ord for OrdNotation {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.cnf.iter().zip(&other.cnf) {
            let ord = a.0.cmp(&b.0).then(a.1.cmp(&b.1));
            if ord != Ordering::Equal {
                return ord;
            }
        }
        self.cnf.len().cmp(&other.cnf.len())
    }
}

impl PartialOrd for OrdNotation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for OrdNotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cnf.is_empty() {
            return f.write_str("0");
        }
        let terms: Vec<String> = self
            .cnf
            .iter()
            .map(|&(e, c)| match (e, c) {
                (0, c) => c.to_string(),
                (1, 1) => "w".to_string(),
                (1, c) => format!("w*{c}"),
                (e, 1) => format!("w^{e}"),
                (e, c) => format!("w^{e}*{c}"),
            })
            .collect();
        f.write_str(&terms.join("+"))
    }
}
