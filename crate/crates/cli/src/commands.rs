use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use emh_core::monte_carlo::{size_study, Generator, SimulationSpec, SizeStudyResult, SizeTest};
use emh_core::pipeline::{analyze_prices, build_report, load_verdicts, StockAnalysis, VerdictRules};
use emh_core::report::{self, Table};
use emh_core::sampling::{load_frame, plan_sample, proportion_ci, Frame, SamplePlan, Stratum};
use emh_core::series::{load_prices_path, log_returns, ticker_from_path, write_returns, PriceSeries};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::output::Output;
use crate::{BadConfig, Command, Input};

/// A run fails when more than this share of the sampled tickers fail.
const MAX_FAILURE_SHARE: f64 = 0.10;

pub fn dispatch(command: Command, config: &RunConfig) -> Result<()> {
    let out = Output::new(config.out.clone(), config.format)?;
    out.artifact("config.toml", &config.to_toml())?;
    match command {
        Command::Returns { prices, ticker } => returns(&out, &prices, ticker.as_deref()),
        Command::Runs { prices } => {
            let analyses = analyze_files(config, &prices)?;
            out.table("runs", &report::runs_table(&analyses))
        }
        Command::Vr { prices } => {
            let analyses = analyze_files(config, &prices)?;
            out.table("variance_ratio", &report::variance_ratio_table(&analyses))
        }
        Command::PlanSample => {
            let frame = frame(config)?;
            let plan = plan_sample(&frame, config.margin, config.seed)?;
            write_plan(&out, &frame, &plan)
        }
        Command::Ci {
            successes,
            sample_size,
            population,
        } => ci(&out, config, successes, sample_size, population),
        Command::Audit { sample, index, replay } => match replay {
            Some(path) => replay_audit(&out, config, &path),
            None => audit(&out, config, sample.as_deref(), index.as_deref()),
        },
        Command::Simulate {
            replications,
            length,
            generator,
            tests,
        } => simulate(&out, config, replications, length, &generator, tests),
    }
}

fn load_prices(path: &Path, ticker: Option<&str>) -> Result<PriceSeries> {
    load_prices_path(path, ticker).with_context(|| Input(format!("prices {}", path.display())))
}

fn frame(config: &RunConfig) -> Result<Frame> {
    let path = config
        .frame
        .as_ref()
        .ok_or_else(|| anyhow!("a sampling frame is required (--frame or `frame` in the config)"))
        .context(BadConfig)?;
    let file = File::open(path).with_context(|| Input(format!("cannot open frame {}", path.display())))?;
    load_frame(file).with_context(|| Input(format!("invalid frame {}", path.display())))
}

fn pool(config: &RunConfig) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = config.jobs {
        builder = builder.num_threads(jobs);
    }
    builder.build().context("cannot start worker pool")
}

fn returns(out: &Output, path: &Path, ticker: Option<&str>) -> Result<()> {
    let prices = load_prices(path, ticker)?;
    let r = log_returns(&prices);
    let mut buf = Vec::new();
    write_returns(&r, &mut buf).context("cannot format returns")?;
    let text = String::from_utf8(buf).expect("returns CSV is UTF-8");
    out.file(&format!("{}_returns.csv", r.ticker()), &text)
}

fn analyze_files(config: &RunConfig, paths: &[PathBuf]) -> Result<Vec<StockAnalysis>> {
    paths
        .iter()
        .map(|p| {
            let prices = load_prices(p, None)?;
            analyze_prices(&prices, None, &config.periods).with_context(|| prices.ticker().to_owned())
        })
        .collect()
}

fn ci(out: &Output, config: &RunConfig, k: usize, n: usize, population: usize) -> Result<()> {
    let ci = proportion_ci(k, n, population, config.confidence).context(BadConfig)?;
    let mut t = Table::new(
        format!(
            "Proportion interval ({}% confidence, finite population correction)",
            100.0 * config.confidence
        ),
        &["successes", "n", "N", "estimate", "lower", "upper"],
    );
    t.push(vec![
        k.to_string(),
        n.to_string(),
        population.to_string(),
        format!("{:.4}", ci.estimate),
        format!("{:.4}", ci.lower),
        format!("{:.4}", ci.upper),
    ]);
    out.table("interval", &t)
}

fn write_plan(out: &Output, frame: &Frame, plan: &SamplePlan) -> Result<()> {
    let mut summary = Table::new("Sample size", &["population", "margin", "n", "seed"]);
    summary.push(vec![
        plan.population.to_string(),
        plan.margin.to_string(),
        plan.n.to_string(),
        plan.seed.to_string(),
    ]);
    let mut alloc = Table::new(
        "Proportional allocation",
        &["level", "group", "population", "allocated"],
    );
    for &(e, k) in &plan.exchanges {
        alloc.push(vec![
            "exchange".into(),
            e.name().into(),
            frame.exchange_population(e).to_string(),
            k.to_string(),
        ]);
    }
    for &(s, k) in &plan.strata {
        alloc.push(vec![
            "stratum".into(),
            s.label(),
            frame.stratum_population(s).to_string(),
            k.to_string(),
        ]);
    }
    let mut drawn = Table::new("Drawn sample", &["stratum", "ticker"]);
    for (s, t) in plan.tickers() {
        drawn.push(vec![s.label(), t.to_owned()]);
    }
    out.table("plan", &summary)?;
    out.table("allocation", &alloc)?;
    out.table("sample", &drawn)
}

fn read_sample(path: &Path) -> Result<Vec<String>> {
    let ctx = || Input(format!("invalid sample file {}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(ctx)?;
    let col = reader
        .headers()
        .with_context(ctx)?
        .iter()
        .position(|h| h == "ticker")
        .ok_or_else(|| anyhow!("no `ticker` column"))
        .with_context(ctx)?;
    let mut tickers = Vec::new();
    for record in reader.records() {
        let record = record.with_context(ctx)?;
        tickers.push(record.get(col).unwrap_or("").to_owned());
    }
    Ok(tickers)
}

fn audit(out: &Output, config: &RunConfig, sample: Option<&Path>, index: Option<&Path>) -> Result<()> {
    let frame = frame(config)?;
    let data_dir = config
        .data_dir
        .as_ref()
        .ok_or_else(|| anyhow!("a data directory is required (--data-dir or `data_dir` in the config)"))
        .context(BadConfig)?;

    let mut stocks: Vec<(Stratum, String)> = match sample {
        Some(path) => read_sample(path)?
            .into_iter()
            .map(|t| match frame.find(&t) {
                Some(u) => Ok((u.stratum(), t)),
                None => Err(anyhow!("ticker `{t}` is not in the frame"))
                    .context(Input(format!("invalid sample file {}", path.display()))),
            })
            .collect::<Result<_>>()?,
        None => {
            let plan = plan_sample(&frame, config.margin, config.seed)?;
            write_plan(out, &frame, &plan)?;
            plan.tickers().map(|(s, t)| (s, t.to_owned())).collect()
        }
    };
    if stocks.is_empty() {
        return Err(anyhow!("no stocks to analyse")).context(Input("empty sample".into()));
    }
    stocks.sort();

    let results: Vec<(String, emh_core::Result<StockAnalysis>)> = pool(config)?.install(|| {
        stocks
            .par_iter()
            .map(|(stratum, ticker)| {
                let path = data_dir.join(format!("{ticker}.csv"));
                let analysis = emh_core::series::load_prices_path(&path, Some(ticker))
                    .and_then(|p| analyze_prices(&p, Some(*stratum), &config.periods));
                (ticker.clone(), analysis)
            })
            .collect()
    });

    let mut analyses = Vec::new();
    let mut failures = Vec::new();
    for (ticker, r) in results {
        match r {
            Ok(a) => analyses.push(a),
            Err(e) => {
                eprintln!("warning: {ticker}: {e}; excluded");
                failures.push((ticker, e));
            }
        }
    }
    if !failures.is_empty() {
        let mut t = Table::new("Excluded tickers", &["ticker", "error"]);
        for (ticker, e) in &failures {
            t.push(vec![ticker.clone(), e.to_string()]);
        }
        out.table("failures", &t)?;
    }
    if failures.len() as f64 > MAX_FAILURE_SHARE * stocks.len() as f64 {
        let message = format!(
            "{} of {} tickers failed (more than {:.0}%)",
            failures.len(),
            stocks.len(),
            100.0 * MAX_FAILURE_SHARE
        );
        let all_input = failures.iter().all(|(_, e)| e.is_ingestion());
        let (_, first) = failures.swap_remove(0);
        let err = anyhow::Error::new(first).context(message);
        return Err(if all_input {
            err.context(Input("price data unusable".into()))
        } else {
            err
        });
    }

    let rules = VerdictRules::default();
    let verdicts = analyses.iter().filter_map(|a| a.verdict(&rules)).collect();
    if let Some(path) = index {
        let prices = load_prices(path, Some(&ticker_from_path(path)))?;
        let a = analyze_prices(&prices, None, &config.periods).with_context(|| prices.ticker().to_owned())?;
        analyses.push(a);
    }
    let report = build_report(verdicts, frame.population(), config.confidence)?;
    out.table("runs", &report::runs_table(&analyses))?;
    out.table("variance_ratio", &report::variance_ratio_table(&analyses))?;
    write_report(out, &report)
}

fn write_report(out: &Output, report: &emh_core::pipeline::AuditReport) -> Result<()> {
    out.table("verdicts", &report::verdict_table(report))?;
    out.table("intervals", &report::interval_table(report))?;
    out.table("groups", &report::group_table(report))
}

fn replay_audit(out: &Output, config: &RunConfig, path: &Path) -> Result<()> {
    let frame = frame(config)?;
    let file = File::open(path).with_context(|| Input(format!("cannot open verdicts {}", path.display())))?;
    let recorded = load_verdicts(file).with_context(|| Input(format!("invalid verdicts {}", path.display())))?;
    for r in &recorded {
        if let Some(published) = r.global {
            if published != r.to_verdict().global_efficient {
                eprintln!(
                    "warning: {}: recorded global verdict differs from the recomputed one",
                    r.ticker
                );
            }
        }
    }
    let report = build_report(
        recorded.iter().map(|r| r.to_verdict()).collect(),
        frame.population(),
        config.confidence,
    )?;
    write_report(out, &report)
}

fn simulate(
    out: &Output,
    config: &RunConfig,
    replications: usize,
    length: usize,
    generator: &str,
    tests: Option<Vec<String>>,
) -> Result<()> {
    let generator: Generator = generator.parse().context(BadConfig)?;
    let tests: Vec<SizeTest> = match tests {
        Some(list) => list
            .iter()
            .map(|t| t.parse())
            .collect::<emh_core::Result<_>>()
            .context(BadConfig)?,
        None => [SizeTest::RunsMean, SizeTest::RunsUpDown]
            .into_iter()
            .chain(config.periods.iter().map(|&q| SizeTest::VarianceRatio(q)))
            .chain([SizeTest::ChowDenning])
            .collect(),
    };
    let spec = SimulationSpec {
        replications,
        length,
        generator,
        seed: config.seed,
    };
    spec.validate().context(BadConfig)?;
    let result = pool(config)?.install(|| size_study(&spec, &tests, &config.periods, &config.alphas))?;
    out.table("size", &result.to_table())?;
    out.table("size_summary", &summary_table(&result))
}

fn summary_table(r: &SizeStudyResult) -> Table {
    let mut headers = vec!["test".to_owned()];
    headers.extend(r.alphas.iter().map(|a| format!("rate_at_{a}")));
    headers.push("errors".to_owned());
    let mut t = Table {
        title: format!("Rejection rates, generator {}", r.spec.generator),
        headers,
        rows: Vec::new(),
    };
    for ts in &r.tests {
        let mut row = vec![ts.test.to_string()];
        row.extend((0..r.alphas.len()).map(|i| format!("{:.3}", ts.rate(i))));
        row.push(ts.errors.to_string());
        t.push(row);
    }
    t
}
