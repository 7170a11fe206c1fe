use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{SparseMatrix, Vector};

/// `left · M · right = diag(diagonal)`, with both transforms unimodular.
///
/// `left_inv` and `right_inv` are the exact inverses, kept because quotient
/// computations need to move between coordinate systems in both directions.
#[derive(Debug, Clone)]
pub struct SmithForm {
    pub diagonal: Vec<BigInt>,
    pub left: SparseMatrix,
    pub right: SparseMatrix,
    pub left_inv: SparseMatrix,
    pub right_inv: SparseMatrix,
}

impl SmithForm {
    pub fn rank(&self) -> usize {
        self.diagonal.iter().filter(|d| !d.is_zero()).count()
    }
}

struct Calc {
    a: Vec<Vector>,
    l: Vec<Vector>,
    linv: Vec<Vector>,
    r: Vec<Vector>,
    rinv: Vec<Vector>,
}

fn identity(n: usize) -> Vec<Vector> {
    (0..n)
        .map(|i| {
            let mut row = vec![BigInt::zero(); n];
            row[i] = BigInt::one();
            row
        })
        .collect()
}

fn to_sparse(d: &[Vector], rows: usize, cols: usize) -> SparseMatrix {
    let mut m = SparseMatrix::zeros(rows, cols);
    for (i, row) in d.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_zero() {
                m.set(i, j, v.clone());
            }
        }
    }
    m
}

/// row_dst += q · row_src
fn row_axpy(m: &mut [Vector], dst: usize, src: usize, q: &BigInt) {
    debug_assert_ne!(dst, src);
    let (s, d) = if src < dst {
        let (lo, hi) = m.split_at_mut(dst);
        (&lo[src], &mut hi[0])
    } else {
        let (lo, hi) = m.split_at_mut(src);
        (&hi[0], &mut lo[dst])
    };
    for (x, y) in d.iter_mut().zip(s.iter()) {
        if !y.is_zero() {
            *x += q * y;
        }
    }
}

/// col_dst += q · col_src
fn col_axpy(m: &mut [Vector], dst: usize, src: usize, q: &BigInt) {
    for row in m.iter_mut() {
        if !row[src].is_zero() {
            let add = q * &row[src];
            row[dst] += add;
        }
    }
}

fn col_swap(m: &mut [Vector], i: usize, j: usize) {
    for row in m.iter_mut() {
        row.swap(i, j);
    }
}

impl Calc {
    // Each elementary operation on `a` is mirrored on the transforms so the
    // invariant `l · M · r = a` (and `linv = l⁻¹`, `rinv = r⁻¹`) always holds.

    fn add_row(&mut self, dst: usize, src: usize, q: &BigInt) {
        row_axpy(&mut self.a, dst, src, q);
        row_axpy(&mut self.l, dst, src, q);
        col_axpy(&mut self.linv, src, dst, &-q);
    }

    fn add_col(&mut self, dst: usize, src: usize, q: &BigInt) {
        col_axpy(&mut self.a, dst, src, q);
        col_axpy(&mut self.r, dst, src, q);
        row_axpy(&mut self.rinv, src, dst, &-q);
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i != j {
            self.a.swap(i, j);
            self.l.swap(i, j);
            col_swap(&mut self.linv, i, j);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i != j {
            col_swap(&mut self.a, i, j);
            col_swap(&mut self.r, i, j);
            self.rinv.swap(i, j);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for v in self.a[i].iter_mut().chain(self.l[i].iter_mut()) {
            *v = -std::mem::take(v);
        }
        for row in self.linv.iter_mut() {
            row[i] = -std::mem::take(&mut row[i]);
        }
    }

    /// Least |entry| in the trailing block, ties broken by row then column.
    fn min_pivot(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, BigInt)> = None;
        for (i, row) in self.a.iter().enumerate().skip(t) {
            for (j, v) in row.iter().enumerate().skip(t) {
                if v.is_zero() {
                    continue;
                }
                let av = v.abs();
                if best.as_ref().map_or(true, |(_, _, b)| av < *b) {
                    best = Some((i, j, av));
                }
            }
        }
        best.map(|(i, j, _)| (i, j))
    }

    /// Least |entry| in column t (rows ≥ t) and row t (columns ≥ t).
    fn min_in_cross(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, BigInt)> = None;
        let mut consider = |i: usize, j: usize, v: &BigInt| {
            if !v.is_zero() {
                let av = v.abs();
                if best.as_ref().map_or(true, |(_, _, b)| av < *b) {
                    best = Some((i, j, av));
                }
            }
        };
        for i in t..self.a.len() {
            consider(i, t, &self.a[i][t]);
        }
        for j in t + 1..self.a[t].len() {
            consider(t, j, &self.a[t][j]);
        }
        best.map(|(i, j, _)| (i, j))
    }

    fn run(&mut self) -> Vec<BigInt> {
        let rows = self.a.len();
        let cols = self.r.len();
        let n = rows.min(cols);
        let mut t = 0;
        while t < n {
            let Some((pi, pj)) = self.min_pivot(t) else {
                break;
            };
            self.swap_rows(t, pi);
            self.swap_cols(t, pj);
            loop {
                let p = self.a[t][t].clone();
                let mut clean = true;
                for i in t + 1..rows {
                    if !self.a[i][t].is_zero() {
                        let q = self.a[i][t].div_floor(&p);
                        self.add_row(i, t, &-q);
                        clean &= self.a[i][t].is_zero();
                    }
                }
                for j in t + 1..cols {
                    if !self.a[t][j].is_zero() {
                        let q = self.a[t][j].div_floor(&p);
                        self.add_col(j, t, &-q);
                        clean &= self.a[t][j].is_zero();
                    }
                }
                if !clean {
                    let (i, j) = self.min_in_cross(t).expect("pivot cross is nonzero");
                    self.swap_rows(t, i);
                    self.swap_cols(t, j);
                    continue;
                }
                let bad = (t + 1..rows).find(|&i| {
                    self.a[i][t + 1..]
                        .iter()
                        .any(|v| !v.is_zero() && !v.is_multiple_of(&p))
                });
                match bad {
                    Some(i) => self.add_row(t, i, &BigInt::one()),
                    None => break,
                }
            }
            if self.a[t][t].is_negative() {
                self.negate_row(t);
            }
            t += 1;
        }
        (0..n).map(|i| self.a[i][i].clone()).collect()
    }
}

/// Smith normal form with least-absolute-value pivoting.
pub fn smith_normal_form(m: &SparseMatrix) -> SmithForm {
    let rows = m.rows();
    let cols = m.cols();
    let mut calc = Calc {
        a: m.to_dense(),
        l: identity(rows),
        linv: identity(rows),
        r: identity(cols),
        rinv: identity(cols),
    };
    let diagonal = calc.run();
    SmithForm {
        diagonal,
        left: to_sparse(&calc.l, rows, rows),
        right: to_sparse(&calc.r, cols, cols),
        left_inv: to_sparse(&calc.linv, rows, rows),
        right_inv: to_sparse(&calc.rinv, cols, cols),
    }
}
