//! Null-distribution checks for both runs tests against enumeration and
//! simulation.

use emh_core::runs::{
    count_runs, dichotomize_mean, run_length_expectations, runs_up_down, runs_z_test, sign_series, Sign,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Run count by direct scan.
fn scan_runs(s: &[u8]) -> usize {
    if s.is_empty() {
        return 0;
    }
    1 + s.windows(2).filter(|w| w[0] != w[1]).count()
}

#[test]
fn runs_count_moments_match_permutation_distribution() {
    // Every binary string of length N with m ones is equally likely under a
    // random permutation, so enumerating strings gives the exact law.
    for len in 2..=12usize {
        for ones in 1..len {
            let (mut count, mut sum, mut sum_sq) = (0.0f64, 0.0f64, 0.0f64);
            for bits in 0u32..(1 << len) {
                if bits.count_ones() as usize != ones {
                    continue;
                }
                let s: Vec<u8> = (0..len).map(|i| ((bits >> i) & 1) as u8).collect();
                let r = scan_runs(&s) as f64;
                count += 1.0;
                sum += r;
                sum_sq += r * r;
            }
            let mean = sum / count;
            let var = sum_sq / count - mean * mean;
            let t = match runs_z_test::<f64>(ones, len - ones, 0) {
                Ok(t) => t,
                Err(_) => {
                    // m = n = 1 always gives two runs
                    assert!(var.abs() < 1e-12);
                    continue;
                }
            };
            assert!((t.expected_runs - mean).abs() < 1e-9, "mean N={len} m={ones}");
            assert!((t.sd_runs * t.sd_runs - var).abs() < 1e-9, "var N={len} m={ones}");
        }
    }
}

#[test]
fn count_runs_matches_scan_on_random_strings() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100_000 {
        let len = rng.random_range(1..=40);
        let s: Vec<u8> = (0..len).map(|_| rng.random_range(0..3u8)).collect();
        let (total, census) = count_runs(&s);
        assert_eq!(total, scan_runs(&s));
        assert_eq!(census.total_symbols(), len);
        assert_eq!(census.total_runs(), total);
    }
}

fn permutations(n: usize) -> Vec<Vec<f64>> {
    fn rec(prefix: &mut Vec<f64>, rest: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            prefix.push(v);
            rec(prefix, rest, out);
            prefix.pop();
            rest.insert(i, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).map(|i| i as f64).collect(), &mut out);
    out
}

#[test]
fn up_down_expectations_match_enumeration() {
    for n in 2..=8usize {
        let perms = permutations(n);
        let count = perms.len() as f64;
        let mut by_length = vec![0.0f64; n];
        let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
        for p in &perms {
            let (total, census) = count_runs(sign_series(p).signs());
            sum += total as f64;
            sum_sq += (total * total) as f64;
            for dir in [Sign::Up, Sign::Down] {
                for (k, c) in census.lengths(dir) {
                    by_length[k] += c as f64;
                }
            }
        }
        let e = run_length_expectations::<f64>(n).unwrap();
        let mean = sum / count;
        assert!((e.total - mean).abs() < 1e-12, "total mean N={n}");
        assert!(
            (e.total_variance - (sum_sq / count - mean * mean)).abs() < 1e-12,
            "total var N={n}"
        );
        for (k, &observed) in by_length.iter().enumerate().skip(1) {
            let exact = observed / count;
            let model = e.per_length.get(k - 1).copied().unwrap_or(0.0);
            assert!((model - exact).abs() < 1e-12, "length {k} N={n}: {model} vs {exact}");
        }
    }
}

#[test]
fn up_down_total_mean_matches_simulation() {
    let n = 2659;
    let e = run_length_expectations::<f64>(n).unwrap();
    assert!((e.total - 1772.3333).abs() < 1e-4);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut values: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let reps = 10_000;
    let mut sum = 0.0;
    for _ in 0..reps {
        values.shuffle(&mut rng);
        sum += runs_up_down::<f64>(&values).unwrap().observed_runs as f64;
    }
    let mean = sum / reps as f64;
    let se = (e.total_variance / reps as f64).sqrt();
    assert!(
        (mean - e.total).abs() < 3.0 * se,
        "mean {mean} vs {} (se {se})",
        e.total
    );
}

#[test]
fn length_flags_are_rare_under_the_null() {
    // Flagged run lengths per i.i.d. series of 2659 returns at 5%. With about
    // ten observed lengths per direction and a Poisson-style variance the
    // per-length tests are individually close to nominal, so roughly half of
    // the null series carry at least one flag. The bands pin the measured
    // values (0.60 flags per series, 45% with any flag, seed 23).
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let reps = 1000;
    let (mut flags, mut with_any) = (0usize, 0usize);
    for _ in 0..reps {
        let v: Vec<f64> = (0..2659).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let ud = runs_up_down::<f64>(&v).unwrap();
        let f = ud.flags(0.05).count();
        flags += f;
        with_any += usize::from(f > 0);
    }
    let per_series = flags as f64 / reps as f64;
    let share = with_any as f64 / reps as f64;
    assert!(
        (0.45..=0.75).contains(&per_series),
        "mean flags per series {per_series}"
    );
    assert!((0.38..=0.52).contains(&share), "share with any flag {share}");
}

#[test]
fn constant_series_dichotomizes_to_zeros() {
    let b = dichotomize_mean(&[0.25f64; 50]);
    assert_eq!(b.ones(), 0);
}
