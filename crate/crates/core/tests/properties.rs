use knnlab::asymptotics::beta_fn;
use knnlab::geometry::f_closed;
use knnlab::knn::{k_schedule, KnnModel, SearchPath};
use knnlab::rng::StreamSeed;
use knnlab::sampler::Dataset;
use knnlab::smooth_model::catalog;
use knnlab::stats::fit_line;
use proptest::prelude::*;

/// Points on a coarse lattice so that exact distance ties are common.
fn lattice_data(d: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..120).prop_flat_map(move |n| {
        (
            prop::collection::vec((0u8..=8).prop_map(|v| v as f64 / 8.0), n * d),
            prop::collection::vec(-10.0f64..10.0, n),
        )
    })
}

fn query(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(
        prop_oneof![(0u8..=8).prop_map(|v| v as f64 / 8.0), 0.0f64..=1.0],
        d,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tree_equals_brute_bitwise(
        (d, (xs, ys), q, kf) in (1usize..=4).prop_flat_map(|d| (Just(d), lattice_data(d), query(d), 0.0f64..1.0))
    ) {
        let n = ys.len();
        let k = 1 + ((n - 1) as f64 * kf) as usize;
        let tree = KnnModel::fit_with(Dataset::new(d, xs.clone(), ys.clone()).unwrap(), SearchPath::Tree);
        let brute = KnnModel::fit_with(Dataset::new(d, xs, ys).unwrap(), SearchPath::Brute);
        prop_assert_eq!(tree.neighbors(&q, k).unwrap(), brute.neighbors(&q, k).unwrap());
        prop_assert_eq!(tree.predict(&q, k).unwrap().to_bits(), brute.predict(&q, k).unwrap().to_bits());
    }

    #[test]
    fn prediction_is_a_convex_combination(
        (d, (xs, ys), q, kf) in (1usize..=3).prop_flat_map(|d| (Just(d), lattice_data(d), query(d), 0.0f64..1.0))
    ) {
        let n = ys.len();
        let k = 1 + ((n - 1) as f64 * kf) as usize;
        let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let m = KnnModel::fit(Dataset::new(d, xs, ys).unwrap());
        let p = m.predict(&q, k).unwrap();
        prop_assert!(p >= lo - 1e-12 && p <= hi + 1e-12);
    }

    #[test]
    fn row_permutation_invariance(seed in 0u64..1000, n in 2usize..200, kf in 0.0f64..1.0, shift in 1usize..199) {
        // continuous coordinates: no ties, so the neighbour set is order free
        let d = 2;
        let mut rng = StreamSeed::new(seed, 0).rng();
        let xs = knnlab::sampler::uniform_points(d, n, &mut rng);
        let ys: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let pxs: Vec<f64> = perm.iter().flat_map(|&i| xs[i * d..(i + 1) * d].to_vec()).collect();
        let pys: Vec<f64> = perm.iter().map(|&i| ys[i]).collect();
        let k = 1 + ((n - 1) as f64 * kf) as usize;
        let a = KnnModel::fit(Dataset::new(d, xs, ys).unwrap());
        let b = KnnModel::fit(Dataset::new(d, pxs, pys).unwrap());
        let q = [0.37, 0.61];
        prop_assert!((a.predict(&q, k).unwrap() - b.predict(&q, k).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn schedule_is_monotone_and_feasible(p in 0.2f64..3.0, d in 1usize..10, n in 1usize..100_000) {
        let k = k_schedule(p, d, n);
        prop_assert!(k >= 1 && k <= n);
        prop_assert!(k_schedule(p, d, n + 1) >= k);
    }

    #[test]
    fn f_closed_is_a_monotone_measure(d in 1usize..=4, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (fl, fh) = (f_closed(lo, d).unwrap(), f_closed(hi, d).unwrap());
        prop_assert!(fl >= -1e-15 && fh <= 1.0 + 1e-15);
        prop_assert!(fh >= fl - 1e-14);
    }

    #[test]
    fn beta_recurrence(alpha in 0.01f64..50.0, beta in 2u64..2000) {
        let lhs = beta_fn(alpha, beta).unwrap() * (alpha + beta as f64 - 1.0);
        let rhs = beta_fn(alpha, beta - 1).unwrap() * (beta - 1) as f64;
        prop_assert!(((lhs - rhs) / rhs).abs() < 1e-11);
    }

    #[test]
    fn line_fit_recovers_exact_lines(slope in -5.0f64..5.0, icpt in -20.0f64..20.0, m in 3usize..40) {
        let xs: Vec<f64> = (0..m).map(|i| (i as f64 + 1.0).ln() * 1.7).collect();
        let ys: Vec<f64> = xs.iter().map(|x| icpt + slope * x).collect();
        let f = fit_line(&xs, &ys).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-10);
        prop_assert!((f.intercept - icpt).abs() < 1e-9);
    }

    #[test]
    fn catalog_functions_stay_in_range(idx in 0usize..100, x in prop::collection::vec(0.0f64..=1.0, 3)) {
        let names = catalog::names();
        let f = catalog::lookup(&names[idx % names.len()]).unwrap();
        let v = f.evaluate(&x[..f.dim()]).unwrap();
        prop_assert!(v.is_finite());
        if f.smoothness().q >= 1 {
            for s in 0..f.dim() {
                prop_assert!(f.partial(s, &x[..f.dim()]).unwrap().abs() <= f.grad_bound() * (1.0 + 1e-12));
            }
        }
    }
}
