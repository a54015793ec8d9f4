//! Bundled reference data.
//!
//! `sp500_frame.csv` is a 305-unit frame with the published exchange ×
//! sector counts (NYSE 57/87/57/28/12, NASDAQ 14/6/9/6/29). Sampled stocks
//! carry their real tickers; the remaining units are placeholders named
//! after their stratum. `sample_verdicts.csv` holds the 75 published
//! per-stock verdicts.

use crate::pipeline::{load_verdicts, RecordedVerdict};
use crate::sampling::{load_frame, Frame};

pub const FRAME_CSV: &str = include_str!("../fixtures/sp500_frame.csv");
pub const VERDICTS_CSV: &str = include_str!("../fixtures/sample_verdicts.csv");

pub fn reference_frame() -> Frame {
    load_frame(FRAME_CSV.as_bytes()).expect("bundled frame is valid")
}

pub fn reference_verdicts() -> Vec<RecordedVerdict> {
    load_verdicts(VERDICTS_CSV.as_bytes()).expect("bundled verdicts are valid")
}
