//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p emh-core --test acceptance`; the report goes to
//! stderr even when output is captured. Criterion 9 checks the qualitative index conclusions only
//! when `EMH_INDEX_CSV` names an adjusted-close CSV (`date,adj_close`) for
//! the index over the study window; otherwise it checks output shape on
//! synthetic prices and reports the data-dependent part as SKIP.

use std::io::Write;
use std::time::Instant;

use chrono::NaiveDate;
use emh_core::fixtures::{reference_frame, reference_verdicts};
use emh_core::monte_carlo::{size_study, Generator, SimulationSpec, SizeTest};
use emh_core::normal;
use emh_core::pipeline::{analyze_prices, build_report};
use emh_core::report::{runs_table, variance_ratio_table};
use emh_core::runs::{count_runs, runs_z_test};
use emh_core::sampling::{cochran_n0, fpc_adjust, plan_sample, proportion_ci, round_half_up, yamane_n, Exchange};
use emh_core::series::{load_prices_path, PriceSeries};
use emh_core::variance_ratio::{smm_p_bound, vr_estimate, z_star, LogPricePath, DEFAULT_PERIODS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn table6() -> Outcome {
    let cases = [
        (15, 12.13, 27.87),
        (30, 30.36, 49.64),
        (33, 34.23, 53.77),
        (19, 16.77, 33.89),
    ];
    let mut worst = 0.0f64;
    for (k, lo, hi) in cases {
        let ci = proportion_ci(k, 75, 305, 0.95f64).unwrap();
        worst = worst
            .max((100.0 * ci.lower - lo).abs())
            .max((100.0 * ci.upper - hi).abs());
    }
    outcome(
        worst <= 0.01,
        format!("max bound deviation {worst:.5} pp (tolerance 0.01)"),
    )
}

fn sampling_design() -> Outcome {
    let frame = reference_frame();
    let n = yamane_n(305, 0.1f64);
    let plan = plan_sample(&frame, 0.1, 1).unwrap();
    let exchanges: Vec<usize> = plan.exchanges.iter().map(|e| e.1).collect();
    let nyse: Vec<usize> = plan
        .strata
        .iter()
        .filter(|(s, _)| s.exchange == Exchange::Nyse)
        .map(|s| s.1)
        .collect();
    outcome(
        n == 75 && plan.n == 75 && exchanges == [59, 16] && nyse == [14, 21, 14, 7, 3],
        format!("n = {n}, exchanges {exchanges:?}, NYSE strata {nyse:?}"),
    )
}

fn table5() -> Outcome {
    let recorded = reference_verdicts();
    let mismatches = recorded
        .iter()
        .filter(|r| Some(r.to_verdict().global_efficient) != r.global)
        .count();
    let report = build_report(recorded.iter().map(|r| r.to_verdict()).collect(), 305, 0.95).unwrap();
    let pct = |label: &str| {
        let g = report
            .by_exchange
            .iter()
            .chain(&report.by_stratum)
            .find(|g| g.label == label)
            .unwrap();
        (g.inefficient, g.total, 100.0 * g.share())
    };
    let (nyse, nasdaq, nyse3) = (pct("NYSE"), pct("NASDAQ"), pct("NYSE3"));
    let ok = recorded.len() == 75
        && mismatches == 0
        && report.counts == [30, 33, 19, 15]
        && (nyse.2 - 18.6).abs() < 0.05
        && (nasdaq.2 - 25.0).abs() < 0.05
        && nyse3.0 == 5
        && nyse3.1 == 14
        && (nyse3.2 - 35.7).abs() < 0.05;
    outcome(
        ok,
        format!(
            "{} rows, {mismatches} global mismatches, totals {:?}, NYSE {:.1}%, NASDAQ {:.1}%, NYSE3 {}/{} = {:.1}%",
            recorded.len(),
            report.counts,
            nyse.2,
            nasdaq.2,
            nyse3.0,
            nyse3.1,
            nyse3.2
        ),
    )
}

fn runs_exactness() -> Outcome {
    let mut worst = 0.0f64;
    for len in 2..=12usize {
        for ones in 1..len {
            let (mut count, mut sum, mut sum_sq) = (0.0f64, 0.0f64, 0.0f64);
            for bits in 0u32..(1 << len) {
                if bits.count_ones() as usize != ones {
                    continue;
                }
                let runs = 1
                    + (0..len - 1)
                        .filter(|&i| ((bits >> i) ^ (bits >> (i + 1))) & 1 == 1)
                        .count();
                count += 1.0;
                sum += runs as f64;
                sum_sq += (runs * runs) as f64;
            }
            let mean = sum / count;
            let var = sum_sq / count - mean * mean;
            match runs_z_test::<f64>(ones, len - ones, 0) {
                Ok(t) => {
                    worst = worst
                        .max((t.expected_runs - mean).abs())
                        .max((t.sd_runs * t.sd_runs - var).abs());
                }
                // one symbol of each kind: two runs with certainty
                Err(_) => worst = worst.max(var.abs()),
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    for _ in 0..100_000 {
        let len = rng.random_range(1..=64);
        let s: Vec<u8> = (0..len).map(|_| rng.random_range(0..2u8)).collect();
        let brute = 1 + s.windows(2).filter(|w| w[0] != w[1]).count();
        mismatches += usize::from(count_runs(&s).0 != brute);
    }
    outcome(
        worst <= 1e-9 && mismatches == 0,
        format!(
            "max moment error {worst:.2e} over N <= 12 (tolerance 1e-9), {mismatches} census mismatches in 1e5 strings"
        ),
    )
}

fn vr_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let returns: Vec<f64> = (0..500).map(|_| rng.random_range(-0.05..0.05)).collect();
    let path = LogPricePath::from_returns(3.0, &returns).unwrap();
    let vr1 = vr_estimate(&path, 1).unwrap();

    let alternating: Vec<f64> = (0..500).map(|i| if i % 2 == 0 { 0.02 } else { -0.02 }).collect();
    let vr2_alt = vr_estimate(&LogPricePath::from_returns(0.0, &alternating).unwrap(), 2).unwrap();

    let scaled: Vec<f64> = returns.iter().map(|r| 7.5 * r).collect();
    let scaled_path = LogPricePath::from_returns(-2.0, &scaled).unwrap();
    let mut worst = 0.0f64;
    for q in DEFAULT_PERIODS {
        let a = z_star(&path, q).unwrap();
        let b = z_star(&scaled_path, q).unwrap();
        worst = worst.max((a.vr - b.vr).abs()).max((a.z_star - b.z_star).abs());
    }
    outcome(
        vr1 == 1.0 && vr2_alt.abs() < 1e-12 && worst <= 1e-10,
        format!("VR(1) = {vr1}, alternating VR(2) = {vr2_alt:.1e}, max scale drift {worst:.1e} (tolerance 1e-10)"),
    )
}

fn monte_carlo_size() -> Outcome {
    let spec = SimulationSpec {
        replications: 1000,
        length: 2659,
        generator: Generator::IidGaussian,
        seed: 1,
    };
    let r = size_study(
        &spec,
        &[SizeTest::RunsMean, SizeTest::VarianceRatio(2)],
        &DEFAULT_PERIODS,
        &[0.05, 0.01],
    )
    .unwrap();
    let runs_1pct = r.get(SizeTest::RunsMean).unwrap().rejections[1];
    let z2 = r.get(SizeTest::VarianceRatio(2)).unwrap().rate(0);
    outcome(
        (1..=19).contains(&runs_1pct) && (0.03..=0.07).contains(&z2),
        format!(
            "runs mean rejections at 1%: {runs_1pct} of 1000 (band 1..19); z*(2) rate at 5%: {:.1}% (band 3-7%)",
            100.0 * z2
        ),
    )
}

fn joint_consistency() -> Outcome {
    let clorox = smm_p_bound(2.79f64, 4);
    let mmm = smm_p_bound(2.24f64, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0;
    for _ in 0..10_000 {
        let x: f64 = rng.random_range(0.0..6.0);
        let m = rng.random_range(1..=16usize);
        violations += usize::from(smm_p_bound(x, m) < normal::two_sided_p(x));
    }
    outcome(
        clorox <= 0.05 && mmm > 0.05 && mmm <= 0.10 && violations == 0,
        format!("bound(2.79, 4) = {clorox:.5}, bound(2.24, 4) = {mmm:.5}, {violations} of 1e4 below the single-test p"),
    )
}

fn yamane_identity() -> Outcome {
    let mut mismatches = 0;
    let mut checked = 0;
    for population in 10..=10_000usize {
        for step in 1..=20 {
            let d = step as f64 / 100.0;
            let two_step = round_half_up(fpc_adjust(cochran_n0(2.0, 0.5, d), population));
            mismatches += usize::from(two_step != yamane_n(population, d));
            checked += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} mismatches over {checked} grid points"),
    )
}

fn synthetic_prices(ticker: &str, seed: u64) -> PriceSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2007, 1, 3).unwrap();
    let mut p = 50.0;
    let obs = (0..600)
        .map(|i| {
            p *= (0.01 * rng.sample::<f64, _>(rand_distr::StandardNormal)).exp();
            (start + chrono::Days::new(i), p)
        })
        .collect();
    PriceSeries::new(ticker, obs).unwrap()
}

fn index_data() -> Outcome {
    let analyses: Vec<_> = ["AAA", "BBB", "CCC"]
        .iter()
        .zip(1u64..)
        .map(|(t, s)| analyze_prices(&synthetic_prices(t, s), None, &DEFAULT_PERIODS).unwrap())
        .collect();
    let runs = runs_table(&analyses);
    let vr = variance_ratio_table(&analyses);
    let shape_ok = runs.headers.len() == 7
        && runs.rows.len() == 3
        && vr.headers.len() == 2 + DEFAULT_PERIODS.len() + 1
        && vr.rows.len() == 3;
    let shape = format!(
        "synthetic table shapes runs {}x{}, vr {}x{}",
        runs.rows.len(),
        runs.headers.len(),
        vr.rows.len(),
        vr.headers.len()
    );

    match std::env::var_os("EMH_INDEX_CSV") {
        None => outcome(
            shape_ok,
            format!("{shape}; index conclusions SKIP (EMH_INDEX_CSV not set)"),
        ),
        Some(path) => {
            let prices = match load_prices_path(path.as_ref(), Some("S&P 500")) {
                Ok(p) => p,
                Err(e) => return outcome(false, format!("{shape}; cannot load index data: {e}")),
            };
            let a = analyze_prices(&prices, None, &DEFAULT_PERIODS).unwrap();
            let runs_p = a.runs_mean.p_two_sided;
            let vr2_p = a.individual()[0].p_two_sided;
            outcome(
                shape_ok && runs_p <= 0.01 && vr2_p <= 0.05,
                format!("{shape}; index runs p = {runs_p:.4} (need <= 0.01), VR(2) p = {vr2_p:.4} (need <= 0.05)"),
            )
        }
    }
}

#[test]
fn acceptance() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check); 9] = [
        ("1 proportion intervals", table6),
        ("2 sampling design", sampling_design),
        ("3 verdict aggregation", table5),
        ("4 runs-test exactness", runs_exactness),
        ("5 variance-ratio identities", vr_identities),
        ("6 Monte Carlo size", monte_carlo_size),
        ("7 joint-test consistency", joint_consistency),
        ("8 Yamane/Cochran identity", yamane_identity),
        ("9 index data and table shape", index_data),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let start = Instant::now();
        let o = check();
        let status = if o.passed { "PASS" } else { "FAIL" };
        // written to the raw handle so the line survives libtest's capture
        let _ = writeln!(
            std::io::stderr(),
            "{status} [{name}] {} ({:.2?})",
            o.detail,
            start.elapsed()
        );
        if !o.passed {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
