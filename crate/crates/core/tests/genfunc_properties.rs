mod support;

use mssvs::genfunc::{extract_derivative, DerivativeKernel, MultiIndex, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{random_exponent, symbolic_derivative, to_exponent};

fn orders(n: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..=3, n)
}

fn near(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn agrees_with_symbolic(seed in any::<u64>(), n in 1usize..=3, k in orders(3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = random_exponent(&mut rng, n, 1.0);
        let k = &k[..n];
        let got = extract_derivative(&to_exponent(&a, &b, c), &MultiIndex::new(k)).unwrap();
        let want = symbolic_derivative(&a, &b, c, k);
        prop_assert!(near(got, want, 1e-12), "{got} vs {want}");
    }

    #[test]
    fn permutation_invariant(seed in any::<u64>(), k in orders(3), perm in Just(vec![0usize, 1, 2]).prop_shuffle()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = random_exponent(&mut rng, 3, 1.0);
        let e = to_exponent(&a, &b, c);
        let p = e.permuted(&perm).unwrap();
        // variable i of `e` is variable perm[i] of `p`
        let mut k_p = vec![0; 3];
        for (i, &j) in perm.iter().enumerate() {
            k_p[j] = k[i];
        }
        let x = extract_derivative(&e, &MultiIndex::new(k.clone())).unwrap();
        let y = extract_derivative(&p, &MultiIndex::new(k_p)).unwrap();
        prop_assert!(near(y, x, 1e-12), "{x} vs {y}");
    }

    #[test]
    fn constant_factors_out(seed in any::<u64>(), k in orders(2), dc in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = random_exponent(&mut rng, 2, 1.0);
        let x = extract_derivative(&to_exponent(&a, &b, c), &MultiIndex::new(k.clone())).unwrap();
        let y = extract_derivative(&to_exponent(&a, &b, c + dc), &MultiIndex::new(k)).unwrap();
        prop_assert!(near(y, x * dc.exp(), 1e-12));
    }

    #[test]
    fn odd_order_vanishes_without_linear_part(seed in any::<u64>(), k in orders(3)) {
        prop_assume!(k.iter().sum::<usize>() % 2 == 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, _, c) = random_exponent(&mut rng, 3, 1.0);
        let zero = vec![C64::new(0.0, 0.0); 3];
        let x = extract_derivative(&to_exponent(&a, &zero, c), &MultiIndex::new(k)).unwrap();
        prop_assert_eq!(x, C64::new(0.0, 0.0));
    }

    #[test]
    fn rescaling_variables(seed in any::<u64>(), k in orders(2), s in 0.2f64..3.0) {
        // x → s·x multiplies the k-th derivative by s^|k|
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = random_exponent(&mut rng, 2, 1.0);
        let a_s: Vec<Vec<C64>> = a.iter().map(|r| r.iter().map(|v| v * s * s).collect()).collect();
        let b_s: Vec<C64> = b.iter().map(|v| v * s).collect();
        let x = extract_derivative(&to_exponent(&a, &b, c), &MultiIndex::new(k.clone())).unwrap();
        let y = extract_derivative(&to_exponent(&a_s, &b_s, c), &MultiIndex::new(k.clone())).unwrap();
        let total = k.iter().sum::<usize>() as i32;
        prop_assert!(near(y, x * s.powi(total), 1e-11));
    }
}

#[test]
fn raised_cap_reaches_high_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (a, b, c) = random_exponent(&mut rng, 1, 0.3);
    let e = to_exponent(&a, &b, c);
    assert!(extract_derivative(&e, &MultiIndex::new(vec![80])).is_err());
    let v = DerivativeKernel::with_max_order(100)
        .extract_derivative(&e, &MultiIndex::new(vec![80]))
        .unwrap();
    assert!(v.norm().is_finite());
}
