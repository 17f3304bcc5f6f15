use proptest::prelude::*;
use quermass::symfun::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sym(rng: &mut impl Rng, n: usize) -> SymMatrix<f64> {
    SymMatrix::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_orthogonal(rng: &mut impl Rng, n: usize) -> Mat<f64> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    while rows.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for r in &rows {
            let p = dot(&v, r);
            v.iter_mut().zip(r).for_each(|(a, b)| *a -= p * b);
        }
        let len = norm(&v);
        if len > 1e-3 {
            rows.push(v.iter().map(|x| x / len).collect());
        }
    }
    Mat::from_fn(n, |i, j| rows[i][j])
}

/// Sign of the permutation taking `from` to `to`, or 0 when they are not
/// permutations of the same set of distinct indices.
fn kronecker_delta(upper: &[usize], lower: &[usize]) -> f64 {
    let k = upper.len();
    for i in 0..k {
        for j in (i + 1)..k {
            if upper[i] == upper[j] || lower[i] == lower[j] {
                return 0.0;
            }
        }
    }
    let mut perm = Vec::with_capacity(k);
    for &u in upper {
        match lower.iter().position(|&l| l == u) {
            Some(p) => perm.push(p),
            None => return 0.0,
        }
    }
    let mut sign = 1.0;
    for i in 0..k {
        for j in (i + 1)..k {
            if perm[i] > perm[j] {
                sign = -sign;
            }
        }
    }
    sign
}

fn index_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0..n.pow(k as u32))
        .map(|mut c| {
            (0..k)
                .map(|_| {
                    let d = c % n;
                    c /= n;
                    d
                })
                .collect()
        })
        .collect()
}

/// `T_k(A)^i_j = (1/k!) δ^{i i_1..i_k}_{j j_1..j_k} A_{i_1 j_1} ... A_{i_k j_k}`.
fn newton_by_delta(a: &SymMatrix<f64>, k: usize) -> SymMatrix<f64> {
    let n = a.dim();
    let fact: f64 = (1..=k).map(|x| x as f64).product();
    let tuples = index_tuples(n, k);
    SymMatrix::from_fn(n, |i, j| {
        let mut acc = 0.0;
        for is in &tuples {
            for js in &tuples {
                let mut upper = vec![i];
                upper.extend(is);
                let mut lower = vec![j];
                lower.extend(js);
                let d = kronecker_delta(&upper, &lower);
                if d != 0.0 {
                    acc += d * is.iter().zip(js).map(|(&p, &q)| a.get(p, q)).product::<f64>();
                }
            }
        }
        acc / fact
    })
}

/// Leibniz determinant of the principal submatrix on `rows`.
fn minor(a: &SymMatrix<f64>, rows: &[usize]) -> f64 {
    let k = rows.len();
    index_tuples(k, k)
        .into_iter()
        .map(|p| {
            kronecker_delta(&p, &(0..k).collect::<Vec<_>>())
                * (0..k).map(|r| a.get(rows[r], rows[p[r]])).product::<f64>()
        })
        .sum()
}

/// `σ_k` as the sum of all `k×k` principal minors.
fn sigma_by_minors(a: &SymMatrix<f64>, k: usize) -> f64 {
    let n = a.dim();
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| {
            let rows: Vec<usize> = (0..n).filter(|i| m >> i & 1 == 1).collect();
            minor(a, &rows)
        })
        .sum()
}

#[test]
fn newton_tensor_matches_kronecker_delta_contraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 2..=4 {
        for k in 0..=2.min(n - 1) {
            for _ in 0..5 {
                let a = random_sym(&mut rng, n);
                let t = newton_tensor(&a, k).unwrap();
                assert!(t.max_abs_diff(&newton_by_delta(&a, k)) < 1e-13, "n={n} k={k}");
            }
        }
    }
}

#[test]
fn sigma_matches_principal_minors() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 1..=6 {
        let a = random_sym(&mut rng, n);
        for k in 0..=n {
            let s = elementary_symmetric(&a, k).unwrap();
            assert!((s - sigma_by_minors(&a, k)).abs() < 1e-12, "n={n} k={k}");
        }
    }
}

#[test]
fn contraction_identity_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..1000 {
        let n = 2 + trial % 7;
        let a = random_sym(&mut rng, n);
        let sig = elementary_symmetric_all(&a);
        for k in 0..n {
            let lhs = (k + 1) as f64 * sig[k + 1];
            let rhs = newton_tensor(&a, k).unwrap().trace_product(&a);
            let scale = 1.0 + lhs.abs().max(rhs.abs());
            assert!((lhs - rhs).abs() <= 1e-10 * scale, "n={n} k={k}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn mixed_tensor_is_the_polarization_of_t2() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..300 {
        let n = 3 + trial % 6;
        let a = random_sym(&mut rng, n);
        let b = random_sym(&mut rng, n);
        let t2 = |m: &SymMatrix<f64>| newton_tensor(m, 2).unwrap();
        let polar = t2(&a.add(&b)).sub(&t2(&a)).sub(&t2(&b)).scale(0.5);
        let mixed = newton_tensor_mixed(&a, &b).unwrap();
        assert!(mixed.max_abs_diff(&polar) <= 1e-10 * (1.0 + polar.max_abs()));
        assert!(newton_tensor_mixed(&a, &a).unwrap().max_abs_diff(&t2(&a)) < 1e-12);
    }
}

#[test]
fn mixed_tensor_vanishes_for_two_by_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (a, b) = (random_sym(&mut rng, 2), random_sym(&mut rng, 2));
    assert!(newton_tensor_mixed(&a, &b).unwrap().max_abs() < 1e-15);
}

#[test]
fn sigma_two_polarization_is_symmetric_bilinear() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (a, b, c) = (random_sym(&mut rng, 5), random_sym(&mut rng, 5), random_sym(&mut rng, 5));
    let p = |x: &SymMatrix<f64>, y: &SymMatrix<f64>| polarization_sigma2(x, y).unwrap();
    assert!((p(&a, &b) - p(&b, &a)).abs() < 1e-13);
    assert!((p(&a.add(&c), &b) - p(&a, &b) - p(&c, &b)).abs() < 1e-12);
    assert!((p(&a, &a) - 2.0 * elementary_symmetric(&a, 2).unwrap()).abs() < 1e-12);
}

#[test]
fn newton_tensors_of_positive_matrices_are_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 2..=6 {
        let a = random_sym(&mut rng, n).add_identity(n as f64);
        assert_eq!(cone_membership(&a).max_k, n);
        for k in 0..n {
            assert!(newton_tensor(&a, k).unwrap().min_eigenvalue() > 0.0);
        }
    }
}

#[test]
fn cone_label_is_monotone_in_margin() {
    let a = SymMatrix::<f64>::from_diagonal(&[2.0, 1.0, -0.2]);
    // σ = (2.8, 1.4, -0.4)
    assert_eq!(cone_membership(&a).max_k, 2);
    assert_eq!(cone_membership_with_margin(&a, 1.5).max_k, 1);
    assert_eq!(cone_membership_with_margin(&a, 3.0).max_k, 0);
    assert!((cone_margin(&a, 2).unwrap() - 1.4).abs() < 1e-14);
}

#[test]
fn single_precision_agrees_with_double() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = random_sym(&mut rng, 4);
    let a32 = SymMatrix::<f32>::from_fn(4, |i, j| a.get(i, j) as f32);
    let (s64, s32) = (elementary_symmetric_all(&a), elementary_symmetric_all(&a32));
    for k in 0..=4 {
        assert!((s64[k] - s32[k] as f64).abs() < 1e-4);
    }
    let t = newton_tensor(&a32, 2).unwrap();
    assert!((t.trace_product(&a32) - 3.0 * s32[3]).abs() < 1e-4);
}

proptest! {
    #[test]
    fn sigma_is_spectrally_invariant(seed in any::<u64>(), n in 2usize..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_sym(&mut rng, n);
        let q = random_orthogonal(&mut rng, n);
        let b = a.congruence(&q);
        let (sa, sb) = (elementary_symmetric_all(&a), elementary_symmetric_all(&b));
        for k in 0..=n {
            prop_assert!((sa[k] - sb[k]).abs() < 1e-10 * (1.0 + sa[k].abs()));
        }
        // T_k is equivariant: T_k(QAQᵀ) = Q T_k(A) Qᵀ
        let k = n / 2;
        let lhs = newton_tensor(&b, k).unwrap();
        let rhs = newton_tensor(&a, k).unwrap().congruence(&q);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn newton_first_agrees_with_recursion(seed in any::<u64>(), n in 2usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_sym(&mut rng, n);
        prop_assert!(newton_first(&a).max_abs_diff(&newton_tensor(&a, 1).unwrap()) < 1e-14);
    }

    #[test]
    fn trace_of_newton_tensor(seed in any::<u64>(), n in 2usize..=8) {
        // tr T_k = (n − k) σ_k
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_sym(&mut rng, n);
        let sig = elementary_symmetric_all(&a);
        for k in 0..n {
            let tr = newton_tensor(&a, k).unwrap().trace();
            prop_assert!((tr - (n - k) as f64 * sig[k]).abs() < 1e-10 * (1.0 + tr.abs()));
        }
    }
}
