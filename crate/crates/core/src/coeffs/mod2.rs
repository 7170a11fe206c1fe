//! Packed-bit Gaussian elimination over `ℤ₂`.

use num_integer::Integer;

use super::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    data: Vec<Vec<u64>>,
}

#[inline]
fn get_bit(row: &[u64], j: usize) -> bool {
    (row[j / 64] >> (j % 64)) & 1 == 1
}

#[inline]
fn flip_bit(row: &mut [u64], j: usize) {
    row[j / 64] ^= 1 << (j % 64);
}

fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}

/// Row echelon data: pivot column of each nonzero row, in order.
struct Echelon {
    m: BitMatrix,
    pivots: Vec<usize>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64).max(1);
        BitMatrix {
            rows,
            cols,
            words,
            data: vec![vec![0; words]; rows],
        }
    }

    pub fn from_sparse(m: &SparseMatrix) -> Self {
        let mut b = Self::zeros(m.rows(), m.cols());
        for (r, c, v) in m.entries() {
            if v.is_odd() {
                flip_bit(&mut b.data[r], c);
            }
        }
        b
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        get_bit(&self.data[r], c)
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        if self.get(r, c) != v {
            flip_bit(&mut self.data[r], c);
        }
    }

    fn rref(&self) -> Echelon {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| get_bit(&m.data[i], c)) else {
                continue;
            };
            m.data.swap(r, p);
            let pivot_row = m.data[r].clone();
            for i in 0..m.rows {
                if i != r && get_bit(&m.data[i], c) {
                    xor_into(&mut m.data[i], &pivot_row);
                }
            }
            pivots.push(c);
            r += 1;
        }
        Echelon { m, pivots }
    }

    pub fn rank(&self) -> usize {
        self.rref().pivots.len()
    }

    /// Solves `self · x = b`, free variables set to zero.
    pub fn solve(&self, b: &[bool]) -> Option<Vec<bool>> {
        assert_eq!(b.len(), self.rows);
        // augment with b as an extra column
        let mut aug = BitMatrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    aug.set(i, j, true);
                }
            }
            aug.set(i, self.cols, b[i]);
        }
        let ech = aug.rref();
        if ech.pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![false; self.cols];
        for (r, &c) in ech.pivots.iter().enumerate() {
            x[c] = ech.m.get(r, self.cols);
        }
        Some(x)
    }

    /// Basis of the null space, one vector per free column.
    pub fn kernel(&self) -> Vec<Vec<bool>> {
        let ech = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &c in &ech.pivots {
            is_pivot[c] = true;
        }
        let mut basis = Vec::new();
        for f in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![false; self.cols];
            v[f] = true;
            for (r, &c) in ech.pivots.iter().enumerate() {
                if ech.m.get(r, f) {
                    v[c] = true;
                }
            }
            basis.push(v);
        }
        basis
    }

    pub fn mul_vec(&self, x: &[bool]) -> Vec<bool> {
        assert_eq!(x.len(), self.cols);
        let mut packed = vec![0u64; self.words];
        for (j, &b) in x.iter().enumerate() {
            if b {
                flip_bit(&mut packed, j);
            }
        }
        self.data
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&packed)
                    .map(|(a, b)| (a & b).count_ones())
                    .sum::<u32>()
                    % 2
                    == 1
            })
            .collect()
    }
}
