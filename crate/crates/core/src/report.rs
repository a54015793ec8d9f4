//! Tabular output: CSV and aligned markdown.
//!
//! Significance stars: `*` at 10%, `**` at 5%, `***` at 1%.

use std::fmt::Write as _;

use crate::pipeline::{AuditReport, StockAnalysis, TestColumn};
use crate::runs::Sign;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: impl Into<String>, headers: &[&str]) -> Self {
        Self {
            title: title.into(),
            headers: headers.iter().map(|h| (*h).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn to_markdown(&self) -> String {
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|c| {
                self.rows
                    .iter()
                    .map(|r| r[c].chars().count())
                    .chain([self.headers[c].chars().count(), 3])
                    .max()
                    .unwrap_or(3)
            })
            .collect();
        let line = |cells: &[String]| {
            let mut s = String::from("|");
            for (cell, &w) in cells.iter().zip(&widths) {
                let pad = w - cell.chars().count();
                let _ = write!(s, " {cell}{} |", " ".repeat(pad));
            }
            s.push('\n');
            s
        };
        let mut out = format!("**{}**\n\n", self.title);
        out += &line(&self.headers);
        out.push('|');
        for &w in &widths {
            out += &format!("{}|", "-".repeat(w + 2));
        }
        out.push('\n');
        for row in &self.rows {
            out += &line(row);
        }
        out
    }
}

pub fn stars(p: f64) -> &'static str {
    if p <= 0.01 {
        "***"
    } else if p <= 0.05 {
        "**"
    } else if p <= 0.10 {
        "*"
    } else {
        ""
    }
}

pub fn format_p(p: f64) -> String {
    if p < 0.0001 {
        format!("< 0.0001{}", stars(p))
    } else {
        format!("{p:.4}{}", stars(p))
    }
}

pub fn yes_no(efficient: bool) -> &'static str {
    if efficient {
        "Yes"
    } else {
        "No"
    }
}

/// Observed run lengths, `1-5` when contiguous from one, else each length
/// joined by `-`.
pub fn format_lengths(lengths: &[usize]) -> String {
    match lengths {
        [] => String::new(),
        [only] => only.to_string(),
        _ if lengths.iter().enumerate().all(|(i, &k)| k == i + 1) => {
            format!("1-{}", lengths[lengths.len() - 1])
        }
        _ => lengths.iter().map(usize::to_string).collect::<Vec<_>>().join("-"),
    }
}

fn stratum_label(a: &StockAnalysis) -> String {
    a.stratum.map(|s| s.label()).unwrap_or_default()
}

/// Runs above/below the mean and runs up/down by length.
pub fn runs_table(analyses: &[StockAnalysis]) -> Table {
    let mut t = Table::new(
        "Runs tests (run-length flags use an approximate normal test)",
        &[
            "stratum",
            "stock",
            "mean_p",
            "up_lengths",
            "up_significant",
            "down_lengths",
            "down_significant",
        ],
    );
    for a in analyses {
        let mut row = vec![stratum_label(a), a.ticker.clone(), format_p(a.runs_mean.p_two_sided)];
        for dir in [Sign::Up, Sign::Down] {
            let lengths: Vec<usize> = a.up_down.census.lengths(dir).map(|(k, _)| k).collect();
            let flagged: Vec<String> = a
                .up_down
                .length_tests
                .iter()
                .filter(|lt| lt.direction == dir && lt.significant(0.10))
                .map(|lt| format!("{}{}", lt.length, stars(lt.p_value)))
                .collect();
            row.push(format_lengths(&lengths));
            row.push(if flagged.is_empty() {
                "ns".to_owned()
            } else {
                flagged.join("-")
            });
        }
        t.push(row);
    }
    t
}

/// Variance ratios with `z*(q)` and the joint statistic.
pub fn variance_ratio_table(analyses: &[StockAnalysis]) -> Table {
    let periods: Vec<usize> = analyses
        .first()
        .map(|a| a.individual().iter().map(|r| r.q).collect())
        .unwrap_or_default();
    let mut headers = vec!["stratum".to_owned(), "stock".to_owned()];
    headers.extend(periods.iter().map(|q| format!("period_{q}")));
    headers.push("joint".to_owned());
    let mut t = Table {
        title: "Variance ratio tests".to_owned(),
        headers,
        rows: Vec::new(),
    };
    for a in analyses {
        let mut row = vec![stratum_label(a), a.ticker.clone()];
        for r in a.individual() {
            row.push(format!("{:.3} ({:.2}){}", r.vr, r.z_star, stars(r.p_two_sided)));
        }
        row.push(format!(
            "{:.2} ({}){}",
            a.joint.max_abs_z,
            a.joint.argmax_q,
            stars(a.joint.p_bound)
        ));
        t.push(row);
    }
    t
}

/// Yes/No verdicts with an inefficiency totals row.
pub fn verdict_table(report: &AuditReport) -> Table {
    let mut t = Table::new(
        "Summary of the statistical tests",
        &["stratum", "stock", "runs", "vr_individual", "vr_joint", "global"],
    );
    for v in &report.verdicts {
        t.push(vec![
            v.stratum.label(),
            v.ticker.clone(),
            yes_no(v.runs_efficient).to_owned(),
            yes_no(v.vr_individual_efficient).to_owned(),
            yes_no(v.vr_joint_efficient).to_owned(),
            yes_no(v.global_efficient).to_owned(),
        ]);
    }
    let mut total = vec![String::new(), "Tot. Inefficient Stocks".to_owned()];
    total.extend(report.counts.iter().map(usize::to_string));
    t.push(total);
    t
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

/// Confidence intervals for the proportion of inefficient stocks.
pub fn interval_table(report: &AuditReport) -> Table {
    let mut t = Table::new(
        format!(
            "Confidence intervals for the proportion (finite population correction, {}% confidence)",
            100.0 * report.confidence
        ),
        &["test", "inefficient", "n", "N", "estimate", "lower", "upper"],
    );
    for c in TestColumn::ALL {
        let ci = report.interval(c);
        t.push(vec![
            c.title().to_owned(),
            ci.successes.to_string(),
            ci.sample_size.to_string(),
            ci.population.to_string(),
            pct(ci.estimate),
            pct(ci.lower),
            pct(ci.upper),
        ]);
    }
    t
}

/// Global inefficiency share by exchange and stratum.
pub fn group_table(report: &AuditReport) -> Table {
    let mut t = Table::new("Inefficiency by group", &["group", "inefficient", "total", "share"]);
    for g in report.by_exchange.iter().chain(&report.by_stratum) {
        t.push(vec![
            g.label.clone(),
            g.inefficient.to_string(),
            g.total.to_string(),
            format!("{:.1}%", 100.0 * g.share()),
        ]);
    }
    t
}
