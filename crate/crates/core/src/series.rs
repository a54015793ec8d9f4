//! Price ingestion and log-returns.
//!
//! Input files are UTF-8 CSV with a `date,adj_close` header, ISO dates and
//! plain decimal prices. Only the dates present in the file exist: nothing is
//! gap-filled and a blank price aborts ingestion.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Column layout of a price file.
#[derive(Debug, Clone)]
pub struct CsvFormat {
    pub date_column: String,
    pub price_column: String,
    pub delimiter: u8,
}

impl Default for CsvFormat {
    fn default() -> Self {
        Self {
            date_column: "date".to_owned(),
            price_column: "adj_close".to_owned(),
            delimiter: b',',
        }
    }
}

/// Dated adjusted-close prices for one instrument.
///
/// Dates are strictly increasing, prices strictly positive, and there are at
/// least two observations.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    ticker: String,
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
}

impl PriceSeries {
    /// Validates and sorts observations by date.
    pub fn new(ticker: impl Into<String>, mut observations: Vec<(NaiveDate, f64)>) -> Result<Self> {
        if observations.len() < 2 {
            return Err(Error::TooFewObservations {
                found: observations.len(),
                required: 2,
            });
        }
        for &(date, price) in &observations {
            // also rejects NaN
            if !(price > 0.0) || !price.is_finite() {
                return Err(Error::NonPositivePrice { date, price });
            }
        }
        observations.sort_by_key(|&(d, _)| d);
        if let Some(w) = observations.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateDate { date: w[0].0 });
        }
        let (dates, prices) = observations.into_iter().unzip();
        Ok(Self {
            ticker: ticker.into(),
            dates,
            prices,
        })
    }

    pub fn ticker(&self) -> &str {
        &self.ticker
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// Multiplies every price by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let obs = self
            .dates
            .iter()
            .zip(&self.prices)
            .map(|(&d, &p)| (d, p * factor))
            .collect();
        Self::new(self.ticker.clone(), obs)
    }
}

/// Log-returns `r_i = ln p_{i+1} − ln p_i`, dated by the later price.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    ticker: String,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(ticker: impl Into<String>, dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "{} dates for {} returns",
                dates.len(),
                values.len()
            )));
        }
        if values.is_empty() {
            return Err(Error::Empty("return series"));
        }
        Ok(Self {
            ticker: ticker.into(),
            dates,
            values,
        })
    }

    /// Undated series, used by simulation. Dates are left empty.
    pub fn from_values(ticker: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            ticker: ticker.into(),
            dates: Vec::new(),
            values,
        }
    }

    pub fn ticker(&self) -> &str {
        &self.ticker
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn log_returns(prices: &PriceSeries) -> ReturnSeries {
    let values = prices.prices.windows(2).map(|w| w[1].ln() - w[0].ln()).collect();
    ReturnSeries {
        ticker: prices.ticker.clone(),
        dates: prices.dates[1..].to_vec(),
        values,
    }
}

/// Reads a price CSV. Line numbers in errors count the header as line 1.
pub fn load_prices<R: Read>(source: R, ticker: &str, format: &CsvFormat) -> Result<PriceSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers().map_err(|e| csv_error(e, 1))?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Malformed {
            line: 1,
            message: format!("header lacks column `{name}`"),
        })
    };
    let date_idx = column(&format.date_column)?;
    let price_idx = column(&format.price_column)?;

    let mut observations = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let date_text = record.get(date_idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(date_text, "%Y-%m-%d").map_err(|e| Error::Malformed {
            line,
            message: format!("bad date `{date_text}`: {e}"),
        })?;
        let price_text = record.get(price_idx).unwrap_or("");
        if price_text.is_empty() {
            return Err(Error::MissingPrice { line });
        }
        let price: f64 = price_text.parse().map_err(|_| Error::Malformed {
            line,
            message: format!("bad price `{price_text}`"),
        })?;
        observations.push((date, price));
    }
    PriceSeries::new(ticker, observations)
}

/// Opens `path` and reads it with the default format. The ticker defaults
/// to the file stem.
pub fn load_prices_path(path: &Path, ticker: Option<&str>) -> Result<PriceSeries> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let stem = ticker_from_path(path);
    load_prices(file, ticker.unwrap_or(&stem), &CsvFormat::default())
}

pub fn ticker_from_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Writes `date,r`. Values use the shortest round-trip representation, so
/// [`read_returns`] reproduces the series exactly.
pub fn write_returns<W: Write>(returns: &ReturnSeries, sink: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["date", "r"])?;
    for (d, r) in returns.dates.iter().zip(&returns.values) {
        w.write_record([d.to_string(), r.to_string()])?;
    }
    w.flush()
}

pub fn read_returns<R: Read>(source: R, ticker: &str) -> Result<ReturnSeries> {
    let format = CsvFormat {
        price_column: "r".to_owned(),
        ..CsvFormat::default()
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .from_reader(source);
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |what: &str| Error::Malformed {
            line,
            message: format!("bad {what}"),
        };
        let date = NaiveDate::parse_from_str(record.get(0).unwrap_or(""), "%Y-%m-%d").map_err(|_| bad("date"))?;
        let r: f64 = record.get(1).unwrap_or("").parse().map_err(|_| bad("return"))?;
        dates.push(date);
        values.push(r);
    }
    ReturnSeries::new(ticker, dates, values)
}

fn csv_error(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::Malformed {
        line,
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day(i: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2008, 1, 2).unwrap() + chrono::Days::new(i as u64)
    }

    fn series(prices: &[f64]) -> PriceSeries {
        let obs = prices.iter().enumerate().map(|(i, &p)| (day(i as u32), p)).collect();
        PriceSeries::new("T", obs).unwrap()
    }

    fn load(text: &str) -> Result<PriceSeries> {
        load_prices(text.as_bytes(), "T", &CsvFormat::default())
    }

    #[test]
    fn minimal_file_loads() {
        let p = load("date,adj_close\n2008-01-02,100.0\n2008-01-03,101.0\n").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.prices(), &[100.0, 101.0]);
    }

    #[test]
    fn zero_price_is_rejected() {
        let err = load("date,adj_close\n2008-01-02,100.0\n2008-01-03,0\n").unwrap_err();
        assert!(matches!(err, Error::NonPositivePrice { price, .. } if price == 0.0));
    }

    #[test]
    fn out_of_order_rows_are_sorted() {
        let p = load("date,adj_close\n2008-01-03,101.0\n2008-01-02,100.0\n").unwrap();
        assert_eq!(p.prices(), &[100.0, 101.0]);
        assert!(p.dates()[0] < p.dates()[1]);
    }

    #[test]
    fn duplicate_date_is_rejected() {
        let err = load("date,adj_close\n2008-01-02,100.0\n2008-01-02,101.0\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateDate { .. }));
    }

    #[test]
    fn single_row_is_too_short() {
        let err = load("date,adj_close\n2008-01-02,100.0\n").unwrap_err();
        assert!(matches!(err, Error::TooFewObservations { found: 1, .. }));
    }

    #[test]
    fn blank_price_aborts_with_line() {
        let err = load("date,adj_close\n2008-01-02,100.0\n2008-01-03,\n2008-01-04,1\n").unwrap_err();
        assert!(matches!(err, Error::MissingPrice { line: 3 }));
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = load("date,adj_close\n2008-01-02,100.0\n2008-01-03,1,000.5\n").unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 3, .. }), "{err}");
        let err = load("date,adj_close\n02/01/2008,100.0\n2008-01-03,1\n").unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }), "{err}");
    }

    #[test]
    fn header_must_name_columns() {
        let err = load("day,close\n2008-01-02,100.0\n2008-01-03,1\n").unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 1, .. }));
    }

    #[test]
    fn log_return_examples() {
        assert_eq!(log_returns(&series(&[100.0, 100.0])).values(), &[0.0]);
        let r = log_returns(&series(&[100.0, 100.0 * std::f64::consts::E]));
        assert!((r.values()[0] - 1.0).abs() < 1e-15);
        // high-precision reference: ln(1.1), ln(0.9)
        let r = log_returns(&series(&[100.0, 110.0, 99.0]));
        assert!((r.values()[0] - 0.095_310_179_804_324_86).abs() < 1e-6);
        assert!((r.values()[1] + 0.105_360_515_657_826_3).abs() < 1e-6);
        assert_eq!(r.dates(), &[day(1), day(2)]);
    }

    #[test]
    fn returns_csv_round_trips_exactly() {
        let r = log_returns(&series(&[100.0, 110.0, 99.0, 101.3, 0.07]));
        let mut buf = Vec::new();
        write_returns(&r, &mut buf).unwrap();
        let back = read_returns(buf.as_slice(), "T").unwrap();
        assert_eq!(back, r);
    }

    proptest! {
        #[test]
        fn length_law_and_reconstruction(prices in prop::collection::vec(1e-3_f64..1e4, 2..200)) {
            let p = series(&prices);
            let r = log_returns(&p);
            prop_assert_eq!(r.len(), p.len() - 1);
            let mut level = prices[0].ln();
            for (i, &ret) in r.values().iter().enumerate() {
                level += ret;
                let rebuilt = level.exp();
                prop_assert!((rebuilt / prices[i + 1] - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn scaling_prices_leaves_returns_unchanged(
            prices in prop::collection::vec(1e-2_f64..1e4, 2..100),
            c in 1e-3_f64..1e3,
        ) {
            let p = series(&prices);
            let a = log_returns(&p);
            let b = log_returns(&p.scaled(c).unwrap());
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
