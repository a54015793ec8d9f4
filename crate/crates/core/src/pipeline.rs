//! Per-stock verdicts and the population-level audit report.
//!
//! A stock is inefficient on the runs evidence when the above/below-mean
//! test is significant at 1%, or at 5% with at least one up/down run length
//! significant at 5%. A third disjunct admits a 10% above/below-mean result
//! when enough up/down lengths fire (at least four, three of them at 5%).
//! The variance-ratio individual evidence rejects when any `z*(q)` is
//! significant at 5%; the joint evidence when the SMM bound is at most 5%.
//! The global verdict is inefficient only when all three agree.

use std::io::Read;

use crate::error::{Error, Result};
use crate::runs::{self, LengthTest, RunsTestResult, UpDownRuns};
use crate::sampling::{proportion_ci, Exchange, ProportionInterval, Stratum};
use crate::series::{log_returns, PriceSeries};
use crate::variance_ratio::{chow_denning, JointVrResult, LogPricePath, VrResult};

/// Thresholds of the runs verdict. All comparisons are `p ≤ level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunsRule {
    pub strong_alpha: f64,
    pub moderate_alpha: f64,
    pub length_alpha: f64,
    pub exception_alpha: f64,
    pub exception_min_flags: usize,
    pub exception_min_strong_flags: usize,
}

impl Default for RunsRule {
    fn default() -> Self {
        Self {
            strong_alpha: 0.01,
            moderate_alpha: 0.05,
            length_alpha: 0.05,
            exception_alpha: 0.10,
            exception_min_flags: 4,
            exception_min_strong_flags: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictRules {
    pub runs: RunsRule,
    pub vr_individual_alpha: f64,
    pub vr_joint_alpha: f64,
}

impl Default for VerdictRules {
    fn default() -> Self {
        Self {
            runs: RunsRule::default(),
            vr_individual_alpha: 0.05,
            vr_joint_alpha: 0.05,
        }
    }
}

/// True when the runs evidence leaves the stock efficient.
pub fn runs_verdict(mean_test: &RunsTestResult<f64>, length_tests: &[LengthTest<f64>], rule: &RunsRule) -> bool {
    let p = mean_test.p_two_sided;
    let flags_at = |alpha: f64| length_tests.iter().filter(|t| t.significant(alpha)).count();
    let inefficient = p <= rule.strong_alpha
        || (p <= rule.moderate_alpha && flags_at(rule.length_alpha) >= 1)
        || (p <= rule.exception_alpha
            && flags_at(rule.exception_alpha) >= rule.exception_min_flags
            && flags_at(rule.length_alpha) >= rule.exception_min_strong_flags);
    !inefficient
}

/// True unless some period is significant at `alpha`.
pub fn vr_individual_verdict(results: &[VrResult<f64>], alpha: f64) -> bool {
    !results.iter().any(|r| r.rejects(alpha))
}

pub fn vr_joint_verdict(joint: &JointVrResult<f64>, alpha: f64) -> bool {
    !joint.rejects(alpha)
}

/// Efficient unless all three components say inefficient.
pub fn global_verdict(runs: bool, vr_individual: bool, vr_joint: bool) -> bool {
    runs || vr_individual || vr_joint
}

/// One stock's rulings; `true` means efficient ("Yes").
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StockVerdict {
    pub ticker: String,
    pub stratum: Stratum,
    pub runs_efficient: bool,
    pub vr_individual_efficient: bool,
    pub vr_joint_efficient: bool,
    pub global_efficient: bool,
}

impl StockVerdict {
    pub fn new(ticker: impl Into<String>, stratum: Stratum, runs: bool, vr_individual: bool, vr_joint: bool) -> Self {
        Self {
            ticker: ticker.into(),
            stratum,
            runs_efficient: runs,
            vr_individual_efficient: vr_individual,
            vr_joint_efficient: vr_joint,
            global_efficient: global_verdict(runs, vr_individual, vr_joint),
        }
    }

    pub fn efficient(&self, column: TestColumn) -> bool {
        match column {
            TestColumn::Runs => self.runs_efficient,
            TestColumn::VrIndividual => self.vr_individual_efficient,
            TestColumn::VrJoint => self.vr_joint_efficient,
            TestColumn::Global => self.global_efficient,
        }
    }
}

/// The four verdict columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestColumn {
    Runs,
    VrIndividual,
    VrJoint,
    Global,
}

impl TestColumn {
    pub const ALL: [TestColumn; 4] = [
        TestColumn::Runs,
        TestColumn::VrIndividual,
        TestColumn::VrJoint,
        TestColumn::Global,
    ];

    pub fn title(self) -> &'static str {
        match self {
            TestColumn::Runs => "Runs tests",
            TestColumn::VrIndividual => "Individual variance ratio tests",
            TestColumn::VrJoint => "Joint variance ratio tests",
            TestColumn::Global => "All the tests",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            TestColumn::Runs => "runs",
            TestColumn::VrIndividual => "vr_individual",
            TestColumn::VrJoint => "vr_joint",
            TestColumn::Global => "global",
        }
    }
}

/// Every test output for one series.
#[derive(Debug, Clone, PartialEq)]
pub struct StockAnalysis {
    pub ticker: String,
    /// `None` for benchmark series outside the frame (e.g. the index).
    pub stratum: Option<Stratum>,
    pub n_returns: usize,
    pub runs_mean: RunsTestResult<f64>,
    pub up_down: UpDownRuns<f64>,
    pub joint: JointVrResult<f64>,
}

impl StockAnalysis {
    pub fn individual(&self) -> &[VrResult<f64>] {
        &self.joint.individual
    }

    pub fn rulings(&self, rules: &VerdictRules) -> (bool, bool, bool) {
        (
            runs_verdict(&self.runs_mean, &self.up_down.length_tests, &rules.runs),
            vr_individual_verdict(self.individual(), rules.vr_individual_alpha),
            vr_joint_verdict(&self.joint, rules.vr_joint_alpha),
        )
    }

    /// Verdict for a stock in the frame; `None` for benchmark series.
    pub fn verdict(&self, rules: &VerdictRules) -> Option<StockVerdict> {
        let (r, i, j) = self.rulings(rules);
        self.stratum.map(|s| StockVerdict::new(self.ticker.clone(), s, r, i, j))
    }
}

/// Runs both runs tests and the variance-ratio tests on one price series.
pub fn analyze_prices(prices: &PriceSeries, stratum: Option<Stratum>, periods: &[usize]) -> Result<StockAnalysis> {
    let returns = log_returns(prices);
    let values = returns.values();
    let runs_mean = runs::runs_above_below_mean(values)?;
    let up_down = runs::runs_up_down(values)?;
    let path = LogPricePath::from_prices(prices);
    let joint = chow_denning(&path, periods)?;
    Ok(StockAnalysis {
        ticker: prices.ticker().to_owned(),
        stratum,
        n_returns: returns.len(),
        runs_mean,
        up_down,
        joint,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupShare {
    pub label: String,
    pub inefficient: usize,
    pub total: usize,
}

impl GroupShare {
    pub fn share(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.inefficient as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    /// Ordered by stratum, then ticker.
    pub verdicts: Vec<StockVerdict>,
    pub population: usize,
    pub confidence: f64,
    /// Number of inefficient stocks per column, in [`TestColumn::ALL`] order.
    pub counts: [usize; 4],
    /// Global inefficiency by exchange.
    pub by_exchange: Vec<GroupShare>,
    /// Global inefficiency by stratum (strata with sampled stocks only).
    pub by_stratum: Vec<GroupShare>,
    pub intervals: [ProportionInterval<f64>; 4],
}

impl AuditReport {
    pub fn count(&self, column: TestColumn) -> usize {
        self.counts[column as usize]
    }

    pub fn interval(&self, column: TestColumn) -> &ProportionInterval<f64> {
        &self.intervals[column as usize]
    }
}

pub fn build_report(mut verdicts: Vec<StockVerdict>, population: usize, confidence: f64) -> Result<AuditReport> {
    if verdicts.is_empty() {
        return Err(Error::Empty("verdict list"));
    }
    verdicts.sort_by(|a, b| a.stratum.cmp(&b.stratum).then_with(|| a.ticker.cmp(&b.ticker)));
    let n = verdicts.len();
    let counts = TestColumn::ALL.map(|c| verdicts.iter().filter(|v| !v.efficient(c)).count());
    let mut intervals = Vec::with_capacity(4);
    for k in counts {
        intervals.push(proportion_ci(k, n, population, confidence)?);
    }
    let share = |label: String, members: Vec<&StockVerdict>| GroupShare {
        label,
        inefficient: members.iter().filter(|v| !v.global_efficient).count(),
        total: members.len(),
    };
    let by_exchange = Exchange::ALL
        .iter()
        .map(|&e| {
            share(
                e.name().to_owned(),
                verdicts.iter().filter(|v| v.stratum.exchange == e).collect(),
            )
        })
        .filter(|g| g.total > 0)
        .collect();
    let by_stratum = Stratum::all()
        .map(|s| share(s.label(), verdicts.iter().filter(|v| v.stratum == s).collect()))
        .filter(|g| g.total > 0)
        .collect();
    Ok(AuditReport {
        verdicts,
        population,
        confidence,
        counts,
        by_exchange,
        by_stratum,
        intervals: intervals.try_into().expect("four columns"),
    })
}

/// A verdict row as recorded in a CSV, with the published global column when
/// present.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedVerdict {
    pub ticker: String,
    pub name: Option<String>,
    pub stratum: Stratum,
    pub runs: bool,
    pub vr_individual: bool,
    pub vr_joint: bool,
    pub global: Option<bool>,
}

impl RecordedVerdict {
    /// Recomputes the global column from the three component flags.
    pub fn to_verdict(&self) -> StockVerdict {
        StockVerdict::new(
            self.ticker.clone(),
            self.stratum,
            self.runs,
            self.vr_individual,
            self.vr_joint,
        )
    }
}

/// Reads `ticker,[name,]stratum,runs,vr_individual,vr_joint[,global]` with
/// Yes/No cells.
pub fn load_verdicts<R: Read>(source: R) -> Result<Vec<RecordedVerdict>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::Malformed {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| {
        col(name).ok_or_else(|| Error::Malformed {
            line: 1,
            message: format!("header lacks column `{name}`"),
        })
    };
    let (ticker, stratum) = (required("ticker")?, required("stratum")?);
    let (runs, ind, joint) = (required("runs")?, required("vr_individual")?, required("vr_joint")?);
    let (name, global) = (col("name"), col("global"));

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let get = |i: usize| record.get(i).unwrap_or("");
        let flag = |i: usize| match get(i).to_ascii_lowercase().as_str() {
            "yes" => Ok(true),
            "no" => Ok(false),
            other => Err(Error::Malformed {
                line,
                message: format!("expected Yes/No, found `{other}`"),
            }),
        };
        out.push(RecordedVerdict {
            ticker: get(ticker).to_owned(),
            name: name.map(|i| get(i).to_owned()),
            stratum: get(stratum).parse().map_err(|e: Error| Error::Malformed {
                line,
                message: e.to_string(),
            })?,
            runs: flag(runs)?,
            vr_individual: flag(ind)?,
            vr_joint: flag(joint)?,
            global: global.map(flag).transpose()?,
        });
    }
    Ok(out)
}
