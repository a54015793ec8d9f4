//! Empirical size of the tests on simulated random series.
//!
//! Replication `i` of a study draws from ChaCha8 stream `i` of the study
//! seed, so every series is reproducible on its own and results do not
//! depend on scheduling. Replications run on the rayon pool and are reduced
//! in index order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::report::Table;
use crate::runs;
use crate::series::ReturnSeries;
use crate::variance_ratio::{chow_denning, z_star, LogPricePath};

/// Minimum simulated series length.
pub const MIN_LENGTH: usize = 32;

/// Return-generating process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    /// Standard-normal i.i.d. returns.
    IidGaussian,
    /// `r_t = ρ r_{t−1} + e_t`, started from the stationary law.
    Ar1 { rho: f64 },
    /// Gaussian returns whose standard deviation switches between two
    /// levels with probability `switch_prob` per step (volatility
    /// clustering with no serial correlation in the returns).
    RegimeSwitching {
        low_sd: f64,
        high_sd: f64,
        switch_prob: f64,
    },
}

impl Generator {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            Generator::IidGaussian => Ok(()),
            Generator::Ar1 { rho } if !(rho.abs() < 1.0) => bad(format!("AR(1) coefficient {rho} not stationary")),
            Generator::Ar1 { .. } => Ok(()),
            Generator::RegimeSwitching {
                low_sd,
                high_sd,
                switch_prob,
            } => {
                if !(low_sd > 0.0 && high_sd > 0.0) {
                    bad(format!(
                        "regime standard deviations must be positive ({low_sd}, {high_sd})"
                    ))
                } else if !(switch_prob > 0.0 && switch_prob <= 1.0) {
                    bad(format!("switch probability {switch_prob} outside (0, 1]"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::IidGaussian => f.write_str("iid"),
            Generator::Ar1 { rho } => write!(f, "ar1:{rho}"),
            Generator::RegimeSwitching {
                low_sd,
                high_sd,
                switch_prob,
            } => {
                write!(f, "regime:{low_sd},{high_sd},{switch_prob}")
            }
        }
    }
}

impl FromStr for Generator {
    type Err = Error;

    /// `iid`, `ar1:RHO` or `regime:LOW_SD,HIGH_SD,SWITCH_PROB`.
    fn from_str(s: &str) -> Result<Self> {
        let (tag, args) = s.split_once(':').unwrap_or((s, ""));
        let nums = || -> Result<Vec<f64>> {
            args.split(',')
                .map(|a| {
                    a.trim()
                        .parse()
                        .map_err(|_| Error::InvalidParameter(format!("bad number in `{s}`")))
                })
                .collect()
        };
        let g = match tag.trim() {
            "iid" | "iid-gaussian" => Generator::IidGaussian,
            "ar1" => match nums()?.as_slice() {
                [rho] => Generator::Ar1 { rho: *rho },
                _ => return Err(Error::InvalidParameter(format!("`{s}`: expected ar1:RHO"))),
            },
            "regime" | "garch-like" => match nums()?.as_slice() {
                [lo, hi, p] => Generator::RegimeSwitching {
                    low_sd: *lo,
                    high_sd: *hi,
                    switch_prob: *p,
                },
                _ => return Err(Error::InvalidParameter(format!("`{s}`: expected regime:LOW,HIGH,P"))),
            },
            other => return Err(Error::InvalidParameter(format!("unknown generator `{other}`"))),
        };
        g.validate()?;
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSpec {
    pub replications: usize,
    pub length: usize,
    pub generator: Generator,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        if self.length < MIN_LENGTH {
            return Err(Error::InvalidParameter(format!(
                "series length {} below minimum {MIN_LENGTH}",
                self.length
            )));
        }
        self.generator.validate()
    }

    /// RNG of replication `index`.
    pub fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

/// Return series of replication `index`.
pub fn simulate_series(spec: &SimulationSpec, index: usize) -> Result<ReturnSeries> {
    spec.validate()?;
    let mut rng = spec.rng(index);
    let n = spec.length;
    let values: Vec<f64> = match spec.generator {
        Generator::IidGaussian => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
        Generator::Ar1 { rho } => {
            let mut normal = || -> f64 { rng.sample(StandardNormal) };
            let mut x = normal() / (1.0 - rho * rho).sqrt();
            let mut out = Vec::with_capacity(n);
            out.push(x);
            for _ in 1..n {
                x = rho * x + normal();
                out.push(x);
            }
            out
        }
        Generator::RegimeSwitching {
            low_sd,
            high_sd,
            switch_prob,
        } => {
            let mut high = rng.random_bool(0.5);
            (0..n)
                .map(|_| {
                    if rng.random_bool(switch_prob) {
                        high = !high;
                    }
                    let sd = if high { high_sd } else { low_sd };
                    sd * rng.sample::<f64, _>(StandardNormal)
                })
                .collect()
        }
    };
    Ok(ReturnSeries::from_values(format!("sim{index}"), values))
}

/// A test whose size is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeTest {
    /// Runs above and below the mean.
    RunsMean,
    /// Runs up and down: rejects when any run length is flagged.
    RunsUpDown,
    /// Robust `z*(q)` for one period.
    VarianceRatio(usize),
    /// Chow–Denning over the study's periods.
    ChowDenning,
}

impl fmt::Display for SizeTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeTest::RunsMean => f.write_str("runs-mean"),
            SizeTest::RunsUpDown => f.write_str("runs-updown"),
            SizeTest::VarianceRatio(q) => write!(f, "vr:{q}"),
            SizeTest::ChowDenning => f.write_str("joint"),
        }
    }
}

impl FromStr for SizeTest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "runs-mean" => Ok(SizeTest::RunsMean),
            "runs-updown" => Ok(SizeTest::RunsUpDown),
            "joint" => Ok(SizeTest::ChowDenning),
            other => other
                .strip_prefix("vr:")
                .and_then(|q| q.parse().ok())
                .filter(|&q: &usize| q >= 2)
                .map(SizeTest::VarianceRatio)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown test `{other}`"))),
        }
    }
}

/// Rejection tallies of one test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSize {
    pub test: SizeTest,
    /// Rejections at each level of [`SizeStudyResult::alphas`].
    pub rejections: Vec<usize>,
    /// Replications where the test could not be computed.
    pub errors: usize,
    /// Replications where it could.
    pub evaluated: usize,
}

impl TestSize {
    pub fn rate(&self, i: usize) -> f64 {
        if self.evaluated == 0 {
            return 0.0;
        }
        self.rejections[i] as f64 / self.evaluated as f64
    }

    /// Binomial standard error of [`rate`](Self::rate).
    pub fn standard_error(&self, i: usize) -> f64 {
        if self.evaluated == 0 {
            return 0.0;
        }
        let r = self.rate(i);
        (r * (1.0 - r) / self.evaluated as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeStudyResult {
    pub spec: SimulationSpec,
    pub alphas: Vec<f64>,
    pub tests: Vec<TestSize>,
}

impl SizeStudyResult {
    pub fn get(&self, test: SizeTest) -> Option<&TestSize> {
        self.tests.iter().find(|t| t.test == test)
    }

    /// One row per (test, α).
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(
            format!(
                "Empirical size: {} replications of length {}, generator {}, seed {}",
                self.spec.replications, self.spec.length, self.spec.generator, self.spec.seed
            ),
            &[
                "test",
                "alpha",
                "rejections",
                "evaluated",
                "errors",
                "rate",
                "std_error",
            ],
        );
        for ts in &self.tests {
            for (i, alpha) in self.alphas.iter().enumerate() {
                t.push(vec![
                    ts.test.to_string(),
                    alpha.to_string(),
                    ts.rejections[i].to_string(),
                    ts.evaluated.to_string(),
                    ts.errors.to_string(),
                    format!("{:.4}", ts.rate(i)),
                    format!("{:.4}", ts.standard_error(i)),
                ]);
            }
        }
        t
    }
}

/// p-value of `test` on one series.
fn p_value(test: SizeTest, values: &[f64], path: &LogPricePath<f64>, periods: &[usize]) -> Result<f64> {
    match test {
        SizeTest::RunsMean => Ok(runs::runs_above_below_mean(values)?.p_two_sided),
        SizeTest::RunsUpDown => Ok(runs::runs_up_down(values)?
            .length_tests
            .iter()
            .map(|t| t.p_value)
            .fold(1.0, f64::min)),
        SizeTest::VarianceRatio(q) => Ok(z_star(path, q)?.p_two_sided),
        SizeTest::ChowDenning => Ok(chow_denning(path, periods)?.p_bound),
    }
}

/// Runs each selected test on every replication and tallies rejections
/// (`p ≤ α`). Test failures are counted, not fatal.
pub fn size_study(
    spec: &SimulationSpec,
    tests: &[SizeTest],
    periods: &[usize],
    alphas: &[f64],
) -> Result<SizeStudyResult> {
    spec.validate()?;
    if tests.is_empty() {
        return Err(Error::Empty("test selection"));
    }
    let per_rep: Vec<Vec<Option<f64>>> = (0..spec.replications)
        .into_par_iter()
        .map(|i| {
            let series = simulate_series(spec, i)?;
            let values = series.values();
            let path = LogPricePath::from_returns(0.0, values)?;
            Ok(tests.iter().map(|&t| p_value(t, values, &path, periods).ok()).collect())
        })
        .collect::<Result<_>>()?;

    let tests = tests
        .iter()
        .enumerate()
        .map(|(j, &test)| {
            let mut ts = TestSize {
                test,
                rejections: vec![0; alphas.len()],
                errors: 0,
                evaluated: 0,
            };
            for rep in &per_rep {
                match rep[j] {
                    Some(p) => {
                        ts.evaluated += 1;
                        for (k, &a) in alphas.iter().enumerate() {
                            ts.rejections[k] += usize::from(p <= a);
                        }
                    }
                    None => ts.errors += 1,
                }
            }
            ts
        })
        .collect();
    Ok(SizeStudyResult {
        spec: *spec,
        alphas: alphas.to_vec(),
        tests,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(generator: Generator) -> SimulationSpec {
        SimulationSpec {
            replications: 20,
            length: 256,
            generator,
            seed: 11,
        }
    }

    #[test]
    fn replications_are_deterministic() {
        let s = spec(Generator::IidGaussian);
        assert_eq!(simulate_series(&s, 3).unwrap(), simulate_series(&s, 3).unwrap());
        assert_ne!(simulate_series(&s, 3).unwrap(), simulate_series(&s, 4).unwrap());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = spec(Generator::Ar1 { rho: 1.0 });
        assert!(simulate_series(&s, 0).is_err());
        s.generator = Generator::IidGaussian;
        s.length = 10;
        assert!(s.validate().is_err());
        s.length = 100;
        s.replications = 0;
        assert!(s.validate().is_err());
        assert!("ar1:1.5".parse::<Generator>().is_err());
        assert!("regime:1,2,0".parse::<Generator>().is_err());
    }

    #[test]
    fn parse_round_trips() {
        for g in ["iid", "ar1:-0.3", "regime:0.5,3,0.01"] {
            assert_eq!(g.parse::<Generator>().unwrap().to_string(), g);
        }
        for t in ["runs-mean", "runs-updown", "vr:2", "joint"] {
            assert_eq!(t.parse::<SizeTest>().unwrap().to_string(), t);
        }
        assert!("vr:1".parse::<SizeTest>().is_err());
    }

    #[test]
    fn study_tallies_are_consistent() {
        let tests = [SizeTest::RunsMean, SizeTest::VarianceRatio(2), SizeTest::ChowDenning];
        let r = size_study(
            &spec(Generator::IidGaussian),
            &tests,
            &[2, 4, 8, 16],
            &[0.10, 0.05, 0.01],
        )
        .unwrap();
        for ts in &r.tests {
            assert_eq!(ts.evaluated + ts.errors, 20);
            assert!(ts.rejections.windows(2).all(|w| w[0] >= w[1]));
            for i in 0..3 {
                let rate = ts.rate(i);
                assert!((0.0..=1.0).contains(&rate));
                assert!((ts.standard_error(i) - (rate * (1.0 - rate) / 20.0).sqrt()).abs() < 1e-15);
            }
        }
        assert_eq!(r.to_table().rows.len(), 9);
    }
}
