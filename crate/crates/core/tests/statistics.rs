//! Statistical behaviour of the sampler and the estimator.

use sepprob::engine::{estimate, run_chunk, TallyCounts};
use sepprob::sampler::{derive_stream, BallSampler};
use sepprob::StateCase;

#[test]
fn marginal_moments() {
    const N: usize = 1_000_000;
    let (m, r) = (15usize, 0.8);
    let mut s = BallSampler::new(m, r, derive_stream(11, 0, 0)).unwrap();
    let mut x = vec![0.0; m];
    let mut mean = vec![0.0; m];
    let mut second = vec![vec![0.0; m]; m];
    for _ in 0..N {
        s.fill(&mut x);
        for i in 0..m {
            mean[i] += x[i];
            for j in 0..=i {
                second[i][j] += x[i] * x[j];
            }
        }
    }
    // x_i has variance r^2/(m+2); x_i x_j (i != j) has variance r^4/((m+2)(m+4))
    let var = r * r / (m + 2) as f64;
    let var_cross = r.powi(4) / ((m + 2) * (m + 4)) as f64;
    let var_sq = 3.0 * var_cross - var * var;
    let n = N as f64;
    for i in 0..m {
        let z = mean[i] / n / (var / n).sqrt();
        assert!(z.abs() < 5.0, "E[x_{i}] z = {z}");
        for j in 0..=i {
            let (want, v) = if i == j { (var, var_sq) } else { (0.0, var_cross) };
            let z = (second[i][j] / n - want) / (v / n).sqrt();
            assert!(z.abs() < 5.0, "E[x_{i} x_{j}] z = {z}");
        }
    }
}

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn projections_are_rotation_invariant() {
    const N: usize = 100_000;
    let m = 9;
    let mut u: Vec<f64> = (1..=m).map(|k| (k as f64).sin()).collect();
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    u.iter_mut().for_each(|v| *v /= norm);

    let mut s1 = BallSampler::new(m, 1.0, derive_stream(5, 0, 0)).unwrap();
    let mut s2 = BallSampler::new(m, 1.0, derive_stream(5, 0, 1)).unwrap();
    let axis: Vec<f64> = (0..N).map(|_| s1.next_point()[0]).collect();
    let tilted: Vec<f64> = (0..N)
        .map(|_| s2.next_point().iter().zip(&u).map(|(x, w)| x * w).sum())
        .collect();
    let d = ks_statistic(axis, tilted);
    // two-sample critical value at significance 1e-3
    let crit = 1.95 * (2.0 / N as f64).sqrt();
    assert!(d < crit, "KS D = {d}, critical {crit}");
}

#[test]
fn sibling_streams_are_uncorrelated() {
    const N: usize = 200_000;
    let mut a = BallSampler::new(4, 1.0, derive_stream(42, 0, 0)).unwrap();
    let mut b = BallSampler::new(4, 1.0, derive_stream(42, 1, 0)).unwrap();
    let mut c = BallSampler::new(4, 1.0, derive_stream(42, 0, 1)).unwrap();
    let (mut ab, mut ac) = (0.0, 0.0);
    for _ in 0..N {
        let (x, y, z) = (a.next_point(), b.next_point(), c.next_point());
        ab += x[0] * y[0];
        ac += x[0] * z[0];
    }
    // Var(x_0) = 1/6 in the unit 4-ball, so Var(x_0 y_0) = 1/36
    let se = (1.0 / 36.0 / N as f64).sqrt();
    assert!((ab / N as f64 / se).abs() < 5.0);
    assert!((ac / N as f64 / se).abs() < 5.0);
}

#[test]
fn qubit_estimate_is_consistent() {
    let r = estimate(StateCase::Qubit, 42, 10_000_000, 2, 1_000_000).unwrap();
    let z = (r.p_hat - 8.0 / 33.0) / r.std_err;
    assert!(r.tally.n_positive > 100);
    assert!(z.abs() < 5.0, "z = {z}, {:?}", r.tally);
}

#[test]
fn std_err_shrinks_as_root_n() {
    let small = estimate(StateCase::Rebit, 1, 1_000_000, 2, 250_000).unwrap();
    let large = estimate(StateCase::Rebit, 2, 16_000_000, 2, 1_000_000).unwrap();
    let ratio = small.std_err / large.std_err;
    assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
}

#[test]
fn frozen_chunk_tally() {
    assert_eq!(
        run_chunk(StateCase::Rebit, derive_stream(1, 0, 0), 100_000),
        TallyCounts {
            n_total: 100_000,
            n_positive: 162,
            n_sep: 71
        }
    );
}
