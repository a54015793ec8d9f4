//! Runs tests.
//!
//! Two variants are provided: runs above and below the mean of a return
//! series (a Wald–Wolfowitz test on the dichotomized series), and runs up and
//! down of successive return differences, with a per-length census tested
//! against the classical expected counts.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::{normal, Real};

/// Expected counts below this are treated as zero.
pub const EXPECTATION_FLOOR: f64 = 1e-12;

/// Returns dichotomized against their mean: 1 where `r > mean`, else 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinarySeries {
    symbols: Vec<u8>,
}

impl BinarySeries {
    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    /// Number of 1s.
    pub fn ones(&self) -> usize {
        self.symbols.iter().filter(|&&s| s == 1).count()
    }

    /// Number of 0s.
    pub fn zeros(&self) -> usize {
        self.symbols.len() - self.ones()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Up,
    Down,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Up => "+",
            Sign::Down => "-",
        })
    }
}

/// Signs of successive differences; `N − 1` signs for `N` returns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignSeries {
    signs: Vec<Sign>,
}

impl SignSeries {
    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }
}

impl FromIterator<Sign> for SignSeries {
    fn from_iter<I: IntoIterator<Item = Sign>>(iter: I) -> Self {
        Self {
            signs: iter.into_iter().collect(),
        }
    }
}

/// Per-symbol counts of maximal runs by length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunLengthCensus<S: Ord> {
    counts: BTreeMap<S, BTreeMap<usize, usize>>,
}

impl<S: Ord + Copy> RunLengthCensus<S> {
    /// Number of runs of `symbol` with exactly `length` symbols.
    pub fn count(&self, symbol: S, length: usize) -> usize {
        self.counts
            .get(&symbol)
            .and_then(|m| m.get(&length))
            .copied()
            .unwrap_or(0)
    }

    /// `(length, count)` pairs for `symbol`, ascending by length.
    pub fn lengths(&self, symbol: S) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.counts
            .get(&symbol)
            .into_iter()
            .flat_map(|m| m.iter().map(|(&k, &c)| (k, c)))
    }

    pub fn symbols(&self) -> impl Iterator<Item = S> + '_ {
        self.counts.keys().copied()
    }

    pub fn max_length(&self) -> usize {
        self.counts
            .values()
            .filter_map(|m| m.keys().next_back())
            .copied()
            .max()
            .unwrap_or(0)
    }

    pub fn total_runs(&self) -> usize {
        self.counts.values().flat_map(|m| m.values()).sum()
    }

    /// Σ length × count, which equals the length of the source series.
    pub fn total_symbols(&self) -> usize {
        self.counts.values().flat_map(|m| m.iter().map(|(k, c)| k * c)).sum()
    }
}

/// Counts maximal blocks of identical symbols.
pub fn count_runs<S: Ord + Copy>(symbols: &[S]) -> (usize, RunLengthCensus<S>) {
    let mut counts: BTreeMap<S, BTreeMap<usize, usize>> = BTreeMap::new();
    for block in symbols.chunk_by(|a, b| a == b) {
        *counts.entry(block[0]).or_default().entry(block.len()).or_default() += 1;
    }
    let census = RunLengthCensus { counts };
    (census.total_runs(), census)
}

/// Maps each return to 1 when strictly above the series mean, else 0.
pub fn dichotomize_mean<F: Real>(values: &[F]) -> BinarySeries {
    let mean = shifted_mean(values);
    BinarySeries {
        symbols: values.iter().map(|&r| u8::from(r > mean)).collect(),
    }
}

// Mean accumulated as deviations from the first value, so a constant series
// has a mean exactly equal to its value.
fn shifted_mean<F: Real>(values: &[F]) -> F {
    let Some(&first) = values.first() else {
        return F::zero();
    };
    let dev: F = values.iter().map(|&r| r - first).sum();
    first + dev / F::count(values.len())
}

/// Signs of successive differences. A tie repeats the previous sign, and a
/// tie at the start counts as up.
pub fn sign_series<F: Real>(values: &[F]) -> SignSeries {
    let mut prev = Sign::Up;
    values
        .windows(2)
        .map(|w| {
            let s = if w[1] > w[0] {
                Sign::Up
            } else if w[1] < w[0] {
                Sign::Down
            } else {
                prev
            };
            prev = s;
            s
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunsTestResult<F> {
    pub observed_runs: usize,
    pub expected_runs: F,
    pub sd_runs: F,
    pub z: F,
    pub p_two_sided: F,
}

impl<F: Real> RunsTestResult<F> {
    pub fn rejects(&self, alpha: F) -> bool {
        self.p_two_sided <= alpha
    }
}

/// Normal approximation to the number of runs given `m` and `n` symbols of
/// each type.
pub fn runs_z_test<F: Real>(m: usize, n: usize, observed_runs: usize) -> Result<RunsTestResult<F>> {
    let total = F::count(m + n);
    let two_mn = F::lit(2.0) * F::count(m) * F::count(n);
    let degenerate = Error::DegenerateRunsVariance { m, n };
    if m + n < 2 {
        return Err(degenerate);
    }
    let expected_runs = two_mn / total + F::one();
    let variance = two_mn * (two_mn - total) / (total * total * (total - F::one()));
    if !(variance > F::zero()) {
        return Err(degenerate);
    }
    let sd_runs = variance.sqrt();
    let z = (F::count(observed_runs) - expected_runs) / sd_runs;
    Ok(RunsTestResult {
        observed_runs,
        expected_runs,
        sd_runs,
        z,
        p_two_sided: normal::two_sided_p(z),
    })
}

/// Runs above and below the mean.
pub fn runs_above_below_mean<F: Real>(values: &[F]) -> Result<RunsTestResult<F>> {
    if values.is_empty() {
        return Err(Error::Empty("return series"));
    }
    let binary = dichotomize_mean(values);
    let (runs, _) = count_runs(binary.symbols());
    runs_z_test(binary.ones(), binary.zeros(), runs)
}

/// Null-distribution moments for runs up and down of `n_values` distinct
/// values in random order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLengthExpectations<F> {
    pub n_values: usize,
    /// Expected total number of runs (up and down together).
    pub total: F,
    pub total_variance: F,
    /// `per_length[k - 1]` is the expected number of runs (either direction)
    /// of exactly `k` signs. Truncated once expectations fall below
    /// [`EXPECTATION_FLOOR`].
    pub per_length: Vec<F>,
}

impl<F: Real> RunLengthExpectations<F> {
    /// Expected count for one direction; zero beyond the truncation point.
    pub fn per_direction(&self, length: usize) -> F {
        match length.checked_sub(1).and_then(|i| self.per_length.get(i)) {
            Some(&e) => e / F::lit(2.0),
            None => F::zero(),
        }
    }
}

pub fn run_length_expectations<F: Real>(n_values: usize) -> Result<RunLengthExpectations<F>> {
    if n_values < 2 {
        return Err(Error::TooFewObservations {
            found: n_values,
            required: 2,
        });
    }
    let n = F::count(n_values);
    let total = (F::lit(2.0) * n - F::one()) / F::lit(3.0);
    // (16N - 29)/90 holds from N = 4; smaller cases are enumerated.
    let total_variance = match n_values {
        2 => F::zero(),
        3 => F::lit(2.0) / F::lit(9.0),
        _ => (F::lit(16.0) * n - F::lit(29.0)) / F::lit(90.0),
    };

    let floor = F::lit(EXPECTATION_FLOOR);
    let mut per_length = Vec::new();
    // (k + 3)!, starting at k = 1
    let mut factorial = F::lit(24.0);
    for k in 1..n_values {
        let expected = if k + 1 == n_values {
            // only the two monotone orderings produce a single run of N - 1
            let mut nf = F::one();
            for i in 2..=n_values {
                nf *= F::count(i);
            }
            F::lit(2.0) / nf
        } else {
            let kf = F::count(k);
            let poly =
                n * (kf * kf + F::lit(3.0) * kf + F::one()) - (kf * kf * kf + F::lit(3.0) * kf * kf - kf - F::lit(4.0));
            F::lit(2.0) * poly / factorial
        };
        if !(expected >= floor) {
            break;
        }
        per_length.push(expected);
        factorial *= F::count(k + 4);
    }
    Ok(RunLengthExpectations {
        n_values,
        total,
        total_variance,
        per_length,
    })
}

/// Observed versus expected count of runs of one direction and length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthTest<F> {
    pub direction: Sign,
    pub length: usize,
    pub observed: usize,
    pub expected: F,
    pub z: F,
    pub p_value: F,
}

impl<F: Real> LengthTest<F> {
    pub fn significant(&self, alpha: F) -> bool {
        self.p_value <= alpha
    }
}

/// Tests every observed run length of each direction against its expected
/// count, using a normal approximation whose variance is taken equal to the
/// expectation (Poisson-style). Lengths whose expectation is below
/// [`EXPECTATION_FLOOR`] get `p = 0`.
///
/// `n_values` is the number of returns the signs were derived from.
pub fn run_length_significance<F: Real>(census: &RunLengthCensus<Sign>, n_values: usize) -> Result<Vec<LengthTest<F>>> {
    let expectations = run_length_expectations::<F>(n_values)?;
    let mut tests = Vec::new();
    for direction in [Sign::Up, Sign::Down] {
        for (length, observed) in census.lengths(direction) {
            let expected = expectations.per_direction(length);
            let (z, p_value) = if expected > F::zero() {
                let z = (F::count(observed) - expected) / expected.sqrt();
                (z, normal::two_sided_p(z))
            } else {
                (F::infinity(), F::zero())
            };
            tests.push(LengthTest {
                direction,
                length,
                observed,
                expected,
                z,
                p_value,
            });
        }
    }
    Ok(tests)
}

/// Runs up and down of a return series: the sign census and its per-length
/// tests.
#[derive(Debug, Clone, PartialEq)]
pub struct UpDownRuns<F> {
    pub observed_runs: usize,
    pub census: RunLengthCensus<Sign>,
    pub length_tests: Vec<LengthTest<F>>,
}

impl<F: Real> UpDownRuns<F> {
    pub fn flags(&self, alpha: F) -> impl Iterator<Item = &LengthTest<F>> {
        self.length_tests.iter().filter(move |t| t.significant(alpha))
    }
}

pub fn runs_up_down<F: Real>(values: &[F]) -> Result<UpDownRuns<F>> {
    if values.len() < 2 {
        return Err(Error::TooFewObservations {
            found: values.len(),
            required: 2,
        });
    }
    let signs = sign_series(values);
    let (observed_runs, census) = count_runs(signs.signs());
    let length_tests = run_length_significance(&census, values.len())?;
    Ok(UpDownRuns {
        observed_runs,
        census,
        length_tests,
    })
}
