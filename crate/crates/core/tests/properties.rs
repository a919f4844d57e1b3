use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use signlab_core::arith::{convolve_check, decompose, MultiplicativeSpec};
use signlab_core::correlators::{local_fourier_stat, local_periodic_stat};
use signlab_core::info::{mutual_information, shannon_entropy, JointHistogram, Weighting};
use signlab_core::logstats::{default_scales, log_average};
use signlab_core::models::*;
use signlab_core::numeric::{e, frac_mul};
use signlab_core::vinogradov::count_vmv;
use signlab_core::words::count_words_multiscale;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn table_sequence(values: Vec<Complex64>) -> SymbolicSequence {
    let len = values.len() as u64;
    let values = Arc::new(values);
    SymbolicSequence::from_fn(len, Alphabet::UnitDisk, move |n| values[(n - 1) as usize])
}

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn decomposition_reconvolves(seed in any::<u64>(), limit in 50u64..3000) {
        // Unimodular values at primes, arbitrary values of modulus ≤ 1 above.
        let hash = move |p: u64, k: u32| {
            let x = seed ^ p.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (k as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            (x.wrapping_mul(0x94d0_49bb_1331_11eb) >> 11) as f64 / (1u64 << 53) as f64
        };
        let a = MultiplicativeSpec::from_prime_powers(limit, false, |p, k| {
            if k == 1 { e(hash(p, 1)) } else { e(hash(p, k)) * hash(p, k + 100) }
        }).unwrap();
        let (a1, a2) = decompose(&a, limit).unwrap();
        prop_assert!(a1.is_completely_multiplicative());
        let err = convolve_check(&a, &a1, &a2, limit).unwrap();
        prop_assert!(err <= 1e-9, "err {}", err);
    }

    #[test]
    fn log_average_is_linear(xs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 10..400),
                             ys in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 400),
                             c in -1.0f64..1.0) {
        let n = xs.len();
        let a: Vec<Complex64> = xs.iter().map(|&(r, i)| Complex64::new(r, i) * 0.5).collect();
        let b: Vec<Complex64> = ys[..n].iter().map(|&(r, i)| Complex64::new(r, i) * 0.5).collect();
        let mix: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * c + y * (1.0 - c.abs())).collect();
        let la = log_average(&table_sequence(a), n as u64).unwrap().value;
        let lb = log_average(&table_sequence(b), n as u64).unwrap().value;
        let lm = log_average(&table_sequence(mix), n as u64).unwrap().value;
        prop_assert!((lm - (la * c + lb * (1.0 - c.abs()))).norm() < 1e-12);
    }

    #[test]
    fn positive_density_is_monotone_in_tau(seed in any::<u64>(), k in 1usize..10,
                                          t1 in 1e-6f64..1e-2, t2 in 1e-6f64..1e-2) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let seq = make_random_signs(20_000, seed);
        let w = count_words_multiscale(&seq, k, &default_scales(20_000)).unwrap();
        prop_assert!(w.positive_density(lo).len() >= w.positive_density(hi).len());
    }

    #[test]
    fn generators_are_one_bounded(seed in any::<u64>(), alpha in 0.0f64..1.0, beta in 0.0f64..1.0,
                                  degree in 1u32..=4) {
        let len = 5_000;
        let seqs = vec![
            make_sawin_model(degree, &BlockRule::Log2, seed, len).unwrap(),
            make_quadratic_phase(alpha, beta, len),
            make_random_signs(len, seed),
            make_sturmian(alpha, len).unwrap(),
            make_thue_morse(len),
        ];
        for s in &seqs {
            for n in 1..=len {
                prop_assert!(s.value(n).norm() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn entropy_is_label_invariant(w in prop::collection::vec(0.0f64..10.0, 2..50), rot in 0usize..50) {
        prop_assume!(w.iter().any(|&x| x > 0.0));
        let mut v = w.clone();
        let r = rot % v.len();
        v.rotate_left(r);
        v.reverse();
        let a = shannon_entropy(&w).unwrap();
        let b = shannon_entropy(&v).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!(a >= 0.0 && a <= (w.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn mutual_information_is_bounded(cells in prop::collection::vec((0usize..8, 0usize..5, 0.0f64..3.0), 1..200)) {
        let mut h = JointHistogram::new(8, 5, Weighting::Uniform).unwrap();
        for &(x, y, w) in &cells {
            h.add(x, y, w + 1e-3);
        }
        let i = mutual_information(&h).unwrap();
        let hx = h.entropy_x().unwrap();
        let hy = h.entropy_y().unwrap();
        prop_assert!(i >= 0.0);
        prop_assert!(i <= hx.min(hy) + 1e-12);
    }

    #[test]
    fn frac_mul_is_exact_on_dyadics(num in 0u64..(1 << 40), shift in 1u32..60, n in -(1i64 << 40)..(1i64 << 40)) {
        let alpha = num as f64 / 2f64.powi(shift as i32);
        prop_assume!(alpha < 1.0);
        let modulus = 1i128 << shift;
        let r = (num as i128 * n as i128).rem_euclid(modulus);
        let want = r as f64 / modulus as f64;
        prop_assert_eq!(frac_mul(alpha, n as i128), want);
    }

    #[test]
    fn window_statistics_lie_in_unit_interval(seed in any::<u64>(), h in 1u64..40, d in 1u64..10) {
        let seq = make_random_signs(3_000, seed);
        let f = local_fourier_stat(&seq, h, 2_000, &FrequencySet::Grid(17)).unwrap();
        prop_assert!((0.0..=1.0).contains(&f.value));
        let p = local_periodic_stat(&seq, h, 2_000, d).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }
}

proptest! {
    #![proptest_config(cfg(12))]

    #[test]
    fn vmv_counts_respect_bounds(k in 1u64..12, s in 1u32..4, t in 1u32..4) {
        let c = count_vmv(k, s, t).unwrap();
        prop_assert!(c.diagonal <= c.total);
        prop_assert!(c.total >= (k as u128).pow(t));
        // More equations can only remove solutions.
        if s > 1 {
            prop_assert!(count_vmv(k, s - 1, t).unwrap().total >= c.total);
        }
    }
}
