use super::*;
use proptest::prelude::*;

fn bi(v: i64) -> BigInt {
    BigInt::from(v)
}

fn mat(rows: &[&[i64]]) -> SparseMatrix {
    SparseMatrix::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

/// Bareiss fraction-free determinant.
fn det(m: &SparseMatrix) -> BigInt {
    let n = m.rows();
    assert_eq!(n, m.cols());
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.to_dense();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Independent oracle: the k-th determinantal divisor is the gcd of all k×k
/// minors, and the k-th invariant factor is the ratio of consecutive ones.
fn invariant_factors_by_minors(m: &SparseMatrix) -> Vec<BigInt> {
    let dense = m.to_dense();
    let n = m.rows().min(m.cols());
    let mut divisors = vec![BigInt::one()];
    for k in 1..=n {
        let mut g = BigInt::zero();
        for rs in combinations(m.rows(), k) {
            for cs in combinations(m.cols(), k) {
                let sub: Vec<Vec<BigInt>> = rs
                    .iter()
                    .map(|&r| cs.iter().map(|&c| dense[r][c].clone()).collect())
                    .collect();
                g = g.gcd(&det(&SparseMatrix::from_dense(&sub).unwrap()));
            }
        }
        divisors.push(g);
    }
    (1..=n)
        .map(|k| {
            if divisors[k].is_zero() {
                BigInt::zero()
            } else {
                &divisors[k] / &divisors[k - 1]
            }
        })
        .collect()
}

fn diag_matrix(rows: usize, cols: usize, d: &[BigInt]) -> SparseMatrix {
    let mut m = SparseMatrix::zeros(rows, cols);
    for (i, v) in d.iter().enumerate() {
        m.set(i, i, v.clone());
    }
    m
}

fn check_snf(m: &SparseMatrix) {
    let s = smith_normal_form(m);
    let lmr = s.left.mul(m).unwrap().mul(&s.right).unwrap();
    assert_eq!(lmr, diag_matrix(m.rows(), m.cols(), &s.diagonal));
    assert!(det(&s.left).abs().is_one());
    assert!(det(&s.right).abs().is_one());
    assert_eq!(s.left.mul(&s.left_inv).unwrap(), SparseMatrix::identity(m.rows()));
    assert_eq!(s.right.mul(&s.right_inv).unwrap(), SparseMatrix::identity(m.cols()));
    let nz: Vec<_> = s.diagonal.iter().take_while(|d| !d.is_zero()).collect();
    assert!(s.diagonal[nz.len()..].iter().all(|d| d.is_zero()), "zeros trailing");
    assert!(nz.iter().all(|d| d.is_positive()));
    assert!(nz.windows(2).all(|w| w[1].is_multiple_of(w[0])));
}

#[test]
fn snf_identity() {
    let s = smith_normal_form(&SparseMatrix::identity(2));
    assert_eq!(s.diagonal, vec![bi(1), bi(1)]);
}

#[test]
fn snf_two_by_two_matches_minor_oracle() {
    let m = mat(&[&[2, 4], &[6, 8]]);
    let oracle = invariant_factors_by_minors(&m);
    assert_eq!(oracle, vec![bi(2), bi(4)]);
    assert_eq!(smith_normal_form(&m).diagonal, oracle);
    check_snf(&m);
}

#[test]
fn snf_zero_matrix() {
    let s = smith_normal_form(&SparseMatrix::zeros(3, 3));
    assert_eq!(s.diagonal, vec![bi(0), bi(0), bi(0)]);
}

#[test]
fn snf_needs_divisibility_fix() {
    // diag(2, 3) is not in Smith form; the answer is diag(1, 6)
    let m = mat(&[&[2, 0], &[0, 3]]);
    assert_eq!(smith_normal_form(&m).diagonal, vec![bi(1), bi(6)]);
    check_snf(&m);
}

#[test]
fn snf_large_entries_do_not_overflow() {
    let big: BigInt = "123456789012345678901234567890".parse().unwrap();
    let mut m = SparseMatrix::zeros(2, 2);
    m.set(0, 0, &big * 2);
    m.set(1, 1, &big * 3);
    let s = smith_normal_form(&m);
    assert_eq!(s.diagonal, vec![big.clone(), &big * 6]);
    check_snf(&m);
}

#[test]
fn solve_identity_returns_rhs() {
    let b = vec![bi(3), bi(-7), bi(0)];
    let x = solve_linear(&SparseMatrix::identity(3), &b, CoeffDomain::Integers).unwrap();
    assert_eq!(x, Some(b));
}

#[test]
fn solve_parity_obstruction() {
    let m = mat(&[&[2]]);
    assert_eq!(solve_linear(&m, &[bi(1)], CoeffDomain::Integers).unwrap(), None);
}

#[test]
fn solve_mod2_brute_force() {
    let m = mat(&[&[1, 1]]);
    let mut brute = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            if (a + b) % 2 == 1 {
                brute.push(vec![bi(a), bi(b)]);
            }
        }
    }
    assert_eq!(brute.len(), 2);
    let x = solve_linear(&m, &[bi(1)], CoeffDomain::Mod2).unwrap().unwrap();
    assert!(brute.contains(&x));
    assert_eq!(x, vec![bi(1), bi(0)], "free variables are zero");
}

#[test]
fn kernel_examples() {
    assert!(kernel_basis(&SparseMatrix::identity(3), CoeffDomain::Integers).is_empty());
    assert!(kernel_basis(&SparseMatrix::identity(3), CoeffDomain::Mod2).is_empty());
    assert_eq!(kernel_basis(&SparseMatrix::zeros(1, 2), CoeffDomain::Mod2).len(), 2);
    let k = kernel_basis(&mat(&[&[1, 1], &[1, 1]]), CoeffDomain::Mod2);
    assert_eq!(k, vec![vec![bi(1), bi(1)]]);
}

#[test]
fn integer_kernel_is_saturated() {
    // ker [2 4] is generated by (2,-1); (1,0)·2 + … is not needed
    let k = kernel_basis(&mat(&[&[2, 4]]), CoeffDomain::Integers);
    assert_eq!(k.len(), 1);
    let v = &k[0];
    assert_eq!(v[0].gcd(&v[1]), bi(1));
    assert_eq!(&v[0] * 2 + &v[1] * 4, bi(0));
}

#[test]
fn rank_examples() {
    let m = mat(&[&[2, 4], &[6, 8]]);
    assert_eq!(rank(&m, CoeffDomain::Integers), 2);
    assert_eq!(rank(&m, CoeffDomain::Mod2), 0);
}

#[test]
fn group_invariants_display_and_chain() {
    let g = GroupInvariants::from_smith_diagonal(&[bi(1), bi(2), bi(4), bi(0)], 5);
    assert_eq!(g.rank, 2);
    assert_eq!(g.torsion, vec![bi(2), bi(4)]);
    assert!(g.divisibility_holds());
    assert_eq!(g.to_string(), "Z^2 + Z/2 + Z/4");
}

#[test]
fn matrix_json_round_trip() {
    let mut m = SparseMatrix::zeros(2, 3);
    m.set(0, 2, "-98765432109876543210".parse().unwrap());
    m.set(1, 0, bi(5));
    let s = serde_json::to_string(&m).unwrap();
    assert!(s.contains("\"-98765432109876543210\""));
    let back: SparseMatrix = serde_json::from_str(&s).unwrap();
    assert_eq!(back, m);
    assert!(serde_json::from_str::<SparseMatrix>(r#"{"rows":1,"cols":1,"entries":[[1,0,"2"]]}"#).is_err());
}

#[test]
fn wide_mod2_matrix_uses_multiple_words() {
    let mut m = SparseMatrix::zeros(2, 130);
    m.set(0, 0, bi(1));
    m.set(0, 129, bi(1));
    m.set(1, 129, bi(1));
    assert_eq!(rank(&m, CoeffDomain::Mod2), 2);
    let x = solve_linear(&m, &[bi(0), bi(1)], CoeffDomain::Mod2).unwrap().unwrap();
    assert_eq!(m.mul_vec(&x).unwrap().iter().map(|v| v % 2).collect::<Vec<_>>(), vec![bi(0), bi(1)]);
    assert_eq!(kernel_basis(&m, CoeffDomain::Mod2).len(), 128);
}

fn small_matrix(max_rows: usize, max_cols: usize, range: i64) -> impl Strategy<Value = SparseMatrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(move |(r, c)| {
        prop::collection::vec(prop::collection::vec(-range..=range, c), r)
            .prop_map(|rows| SparseMatrix::from_dense(&rows).unwrap())
    })
}

fn box_vectors(len: usize, range: i64) -> Vec<Vector> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-range..=range).map(move |x| {
                    let mut w = v.clone();
                    w.push(bi(x));
                    w
                })
            })
            .collect();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snf_transforms_are_exact(m in small_matrix(5, 5, 6)) {
        check_snf(&m);
    }

    #[test]
    fn snf_matches_determinantal_divisors(m in small_matrix(4, 4, 5)) {
        prop_assert_eq!(smith_normal_form(&m).diagonal, invariant_factors_by_minors(&m));
    }

    #[test]
    fn solve_integers_agrees_with_box_search(m in small_matrix(3, 4, 3), x in prop::collection::vec(-2i64..=2, 4)) {
        // half the time pick a solvable right-hand side
        let x: Vec<BigInt> = x.into_iter().take(m.cols()).map(bi).collect();
        let mut b = m.mul_vec(&x).unwrap();
        if x[0].is_even() { b[0] += 1; }
        match solve_linear(&m, &b, CoeffDomain::Integers).unwrap() {
            Some(sol) => prop_assert_eq!(m.mul_vec(&sol).unwrap(), b),
            None => {
                for v in box_vectors(m.cols(), 3) {
                    prop_assert_ne!(m.mul_vec(&v).unwrap(), b.clone());
                }
            }
        }
    }

    #[test]
    fn integer_kernel_vectors_vanish(m in small_matrix(4, 5, 4)) {
        let k = kernel_basis(&m, CoeffDomain::Integers);
        prop_assert_eq!(k.len(), m.cols() - rank(&m, CoeffDomain::Integers));
        for v in k {
            prop_assert!(m.mul_vec(&v).unwrap().iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn mod2_kernel_span_equals_brute_force(m in small_matrix(6, 12, 1)) {
        let m = m.reduced(CoeffDomain::Mod2);
        let basis = kernel_basis(&m, CoeffDomain::Mod2);
        let to_mask = |v: &Vector| v.iter().enumerate().fold(0u32, |acc, (i, x)| acc | ((x.is_odd() as u32) << i));
        let basis_masks: Vec<u32> = basis.iter().map(to_mask).collect();
        let mut span = std::collections::BTreeSet::new();
        for sel in 0u32..(1 << basis_masks.len()) {
            let mut acc = 0;
            for (i, b) in basis_masks.iter().enumerate() {
                if sel >> i & 1 == 1 { acc ^= b; }
            }
            span.insert(acc);
        }
        let bits = BitMatrix::from_sparse(&m);
        let mut brute = std::collections::BTreeSet::new();
        for mask in 0u32..(1 << m.cols()) {
            let x: Vec<bool> = (0..m.cols()).map(|i| mask >> i & 1 == 1).collect();
            if bits.mul_vec(&x).iter().all(|b| !b) { brute.insert(mask); }
        }
        prop_assert_eq!(span, brute);
    }
}

use mod2::BitMatrix;
