use proptest::prelude::*;
use repotrend::analytics::{mid_ranks, spearman_rho};

/// Mid-ranks by counting, then Pearson in the textbook form.
fn oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|x| {
                let below = v.iter().filter(|y| *y < x).count() as f64;
                let equal = v.iter().filter(|y| *y == x).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(xs), rank(ys));
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx.sqrt() * vy.sqrt())
}

fn pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..25).prop_flat_map(|n| {
        (
            prop::collection::vec((0i32..8).prop_map(f64::from), n),
            prop::collection::vec((0i32..8).prop_map(f64::from), n),
        )
    })
}

fn non_constant(v: &[f64]) -> bool {
    v.iter().any(|x| *x != v[0])
}

proptest! {
    #[test]
    fn agrees_with_oracle((xs, ys) in pairs()) {
        prop_assume!(non_constant(&xs) && non_constant(&ys));
        let rho = spearman_rho(&xs, &ys).unwrap();
        prop_assert!((rho - oracle(&xs, &ys)).abs() < 1e-9);
        prop_assert!((-1.0..=1.0).contains(&rho));
        prop_assert!((rho - spearman_rho(&ys, &xs).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn invariant_under_increasing_maps((xs, ys) in pairs()) {
        prop_assume!(non_constant(&xs) && non_constant(&ys));
        let rho = spearman_rho(&xs, &ys).unwrap();
        let warped: Vec<f64> = xs.iter().map(|x| x.powi(3) * 2.0 + 7.0).collect();
        prop_assert!((spearman_rho(&warped, &ys).unwrap() - rho).abs() < 1e-12);
        let flipped: Vec<f64> = xs.iter().map(|x| -x).collect();
        prop_assert!((spearman_rho(&flipped, &ys).unwrap() + rho).abs() < 1e-12);
    }

    #[test]
    fn mid_ranks_sum_to_triangle(xs in prop::collection::vec((0i32..5).prop_map(f64::from), 1..30)) {
        let n = xs.len() as f64;
        prop_assert!((mid_ranks(&xs).iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
    }
}

#[test]
fn tied_example() {
    let xs = [1.0, 2.0, 2.0, 4.0];
    let ys = [1.0, 3.0, 2.0, 4.0];
    let rho = spearman_rho(&xs, &ys).unwrap();
    assert!((rho - oracle(&xs, &ys)).abs() < 1e-9);
    assert!((rho - 0.9486832980505138).abs() < 1e-9);
}

#[test]
fn perfect_orderings_are_exact() {
    let xs = [3.0, 1.0, 4.0, 1.5, 9.0];
    let up: Vec<f64> = xs.iter().map(|x| x * 10.0).collect();
    let down: Vec<f64> = xs.iter().map(|x| -x).collect();
    assert_eq!(spearman_rho(&xs, &up).unwrap(), 1.0);
    assert_eq!(spearman_rho(&xs, &down).unwrap(), -1.0);
    assert!(spearman_rho(&[1.0, 1.0], &[1.0, 2.0]).is_err());
}
