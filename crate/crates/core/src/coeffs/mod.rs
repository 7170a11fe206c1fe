//! Exact coefficients and the sparse linear algebra the rest of the crate runs on.
//!
//! Integers are arbitrary precision ([`BigInt`]); `ℤ₂` values are stored as the
//! integers `0`/`1` in cochains and as packed bits inside [`mod2`] elimination.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub mod mod2;
mod snf;

pub use snf::{smith_normal_form, SmithForm};

/// A dense vector of exact coefficients.
pub type Vector = Vec<BigInt>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CoeffDomain {
    Integers,
    Mod2,
}

impl CoeffDomain {
    /// Canonical representative of `v` in this domain.
    pub fn normalize(self, v: BigInt) -> BigInt {
        match self {
            CoeffDomain::Integers => v,
            CoeffDomain::Mod2 => v.mod_floor(&BigInt::from(2)),
        }
    }

    pub fn is_zero(self, v: &BigInt) -> bool {
        match self {
            CoeffDomain::Integers => v.is_zero(),
            CoeffDomain::Mod2 => v.is_even(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CoeffDomain::Integers => "Integers",
            CoeffDomain::Mod2 => "Mod2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "Integers" | "Z" | "integers" => Ok(CoeffDomain::Integers),
            "Mod2" | "Z2" | "mod2" => Ok(CoeffDomain::Mod2),
            other => Err(Error::Malformed(format!("unknown coefficient domain {other:?}"))),
        }
    }
}

impl fmt::Display for CoeffDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A sparse matrix over `ℤ`; zero entries are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), BigInt>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries.insert((i, i), BigInt::one());
        }
        m
    }

    pub fn from_dense<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {ncols}",
                    row.len()
                )));
            }
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, v.clone().into());
            }
        }
        Ok(m)
    }

    /// Builds an `rows × vectors.len()` matrix whose columns are `vectors`.
    pub fn from_columns(rows: usize, vectors: &[Vector]) -> Result<Self> {
        let mut m = Self::zeros(rows, vectors.len());
        for (j, v) in vectors.iter().enumerate() {
            if v.len() != rows {
                return Err(Error::Dimension(format!(
                    "column {j} has length {}, expected {rows}",
                    v.len()
                )));
            }
            for (i, x) in v.iter().enumerate() {
                m.set(i, j, x.clone());
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, r: usize, c: usize) -> BigInt {
        self.entries.get(&(r, c)).cloned().unwrap_or_default()
    }

    /// Sets an entry; panics on out-of-range indices.
    pub fn set(&mut self, r: usize, c: usize, v: BigInt) {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of bounds");
        if v.is_zero() {
            self.entries.remove(&(r, c));
        } else {
            self.entries.insert((r, c), v);
        }
    }

    /// Adds `v` to entry `(r, c)`.
    pub fn add_to(&mut self, r: usize, c: usize, v: &BigInt) {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of bounds");
        let e = self.entries.entry((r, c)).or_default();
        *e += v;
        if e.is_zero() {
            self.entries.remove(&(r, c));
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &BigInt)> {
        self.entries.iter().map(|(&(r, c), v)| (r, c, v))
    }

    /// Entries reduced into `domain` (mod 2 drops even entries).
    pub fn reduced(&self, domain: CoeffDomain) -> Self {
        let mut m = Self::zeros(self.rows, self.cols);
        for (&(r, c), v) in &self.entries {
            m.set(r, c, domain.normalize(v.clone()));
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for (&(r, c), v) in &self.entries {
            m.entries.insert((c, r), v.clone());
        }
        m
    }

    pub fn to_dense(&self) -> Vec<Vector> {
        let mut d = vec![vec![BigInt::zero(); self.cols]; self.rows];
        for (&(r, c), v) in &self.entries {
            d[r][c] = v.clone();
        }
        d
    }

    pub fn column(&self, c: usize) -> Vector {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn mul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut by_row: BTreeMap<usize, Vec<(usize, &BigInt)>> = BTreeMap::new();
        for (&(r, c), v) in &other.entries {
            by_row.entry(r).or_default().push((c, v));
        }
        let mut out = SparseMatrix::zeros(self.rows, other.cols);
        for (&(i, k), a) in &self.entries {
            if let Some(row) = by_row.get(&k) {
                for &(j, b) in row {
                    out.add_to(i, j, &(a * b));
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Result<Vector> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        let mut out = vec![BigInt::zero(); self.rows];
        for (&(r, c), a) in &self.entries {
            if !v[c].is_zero() {
                out[r] += a * &v[c];
            }
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct SparseMatrixJson {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, String)>,
}

impl Serialize for SparseMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SparseMatrixJson {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .map(|(&(r, c), v)| (r, c, v.to_string()))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SparseMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = SparseMatrixJson::deserialize(d)?;
        let mut m = SparseMatrix::zeros(raw.rows, raw.cols);
        for (r, c, v) in raw.entries {
            if r >= raw.rows || c >= raw.cols {
                return Err(D::Error::custom(format!("entry ({r},{c}) out of bounds")));
            }
            let v: BigInt = v
                .parse()
                .map_err(|_| D::Error::custom(format!("bad coefficient {v:?}")))?;
            m.set(r, c, v);
        }
        Ok(m)
    }
}

/// Isomorphism type `ℤ^rank ⊕ ℤ/d₁ ⊕ ℤ/d₂ ⊕ …` with `d₁ | d₂ | …`, every `dᵢ ≥ 2`.
///
/// Over `ℤ₂` the group is a vector space and `rank` is its dimension.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroupInvariants {
    pub rank: usize,
    pub torsion: Vec<BigInt>,
}

impl GroupInvariants {
    pub fn trivial() -> Self {
        Self::default()
    }

    pub fn free(rank: usize) -> Self {
        GroupInvariants {
            rank,
            torsion: Vec::new(),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }

    /// Invariants of `ℤ^ambient / D` for a Smith diagonal `D`.
    pub fn from_smith_diagonal(diagonal: &[BigInt], ambient: usize) -> Self {
        let nonzero = diagonal.iter().filter(|d| !d.is_zero()).count();
        let torsion = diagonal
            .iter()
            .filter(|d| !d.is_zero() && !d.abs().is_one())
            .map(|d| d.abs())
            .collect();
        GroupInvariants {
            rank: ambient - nonzero,
            torsion,
        }
    }

    pub fn divisibility_holds(&self) -> bool {
        self.torsion.iter().all(|d| *d >= BigInt::from(2))
            && self.torsion.windows(2).all(|w| w[1].is_multiple_of(&w[0]))
    }
}

impl fmt::Display for GroupInvariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return f.write_str("0");
        }
        let mut parts = Vec::new();
        if self.rank > 0 {
            parts.push(if self.rank == 1 {
                "Z".to_string()
            } else {
                format!("Z^{}", self.rank)
            });
        }
        parts.extend(self.torsion.iter().map(|d| format!("Z/{d}")));
        f.write_str(&parts.join(" + "))
    }
}

/// Rank of `m` over `domain`.
pub fn rank(m: &SparseMatrix, domain: CoeffDomain) -> usize {
    match domain {
        CoeffDomain::Mod2 => mod2::BitMatrix::from_sparse(m).rank(),
        CoeffDomain::Integers => smith_normal_form(m)
            .diagonal
            .iter()
            .filter(|d| !d.is_zero())
            .count(),
    }
}

/// Finds some `x` with `m·x = b` over `domain`, or `None` if there is none.
///
/// Over `ℤ₂` free variables are set to zero, so the solution is supported on
/// the leftmost possible pivot columns.
pub fn solve_linear(m: &SparseMatrix, b: &[BigInt], domain: CoeffDomain) -> Result<Option<Vector>> {
    if b.len() != m.rows() {
        return Err(Error::Dimension(format!(
            "right-hand side of length {} against {} rows",
            b.len(),
            m.rows()
        )));
    }
    match domain {
        CoeffDomain::Mod2 => {
            let bits: Vec<bool> = b.iter().map(|v| v.is_odd()).collect();
            Ok(mod2::BitMatrix::from_sparse(m)
                .solve(&bits)
                .map(|x| x.into_iter().map(|v| BigInt::from(v as u8)).collect()))
        }
        CoeffDomain::Integers => {
            let snf = smith_normal_form(m);
            let c = snf.left.mul_vec(b)?;
            let mut y = vec![BigInt::zero(); m.cols()];
            for (i, ci) in c.iter().enumerate() {
                let d = snf.diagonal.get(i).cloned().unwrap_or_default();
                if d.is_zero() {
                    if !ci.is_zero() {
                        return Ok(None);
                    }
                } else {
                    let (q, r) = ci.div_rem(&d);
                    if !r.is_zero() {
                        return Ok(None);
                    }
                    y[i] = q;
                }
            }
            Ok(Some(snf.right.mul_vec(&y)?))
        }
    }
}

/// A basis of `ker m` over `domain`.
///
/// Over `ℤ` the result is a basis of the full kernel lattice: the trailing
/// columns of the unimodular right transform of the Smith form.
pub fn kernel_basis(m: &SparseMatrix, domain: CoeffDomain) -> Vec<Vector> {
    match domain {
        CoeffDomain::Mod2 => mod2::BitMatrix::from_sparse(m)
            .kernel()
            .into_iter()
            .map(|v| v.into_iter().map(|b| BigInt::from(b as u8)).collect())
            .collect(),
        CoeffDomain::Integers => {
            let snf = smith_normal_form(m);
            let r = snf.diagonal.iter().filter(|d| !d.is_zero()).count();
            (r..m.cols()).map(|j| snf.right.column(j)).collect()
        }
    }
}

#[cfg(test)]
mod tests;
