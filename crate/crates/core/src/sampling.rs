//! Survey sampling: sample size, two-layer stratified proportional
//! allocation, seeded stratum draws and finite-population-corrected
//! confidence intervals for a proportion.

use std::collections::HashSet;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::{normal, Real};

/// Normal abscissa used for sizing (≈ 95% confidence).
pub const SIZING_T: f64 = 2.0;
/// Anticipated proportion that maximizes `p(1 − p)`.
pub const SIZING_P: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Exchange {
    Nyse,
    Nasdaq,
}

impl Exchange {
    pub const ALL: [Exchange; 2] = [Exchange::Nyse, Exchange::Nasdaq];

    pub fn name(self) -> &'static str {
        match self {
            Exchange::Nyse => "NYSE",
            Exchange::Nasdaq => "NASDAQ",
        }
    }

    /// Prefix used in stratum labels.
    pub fn short(self) -> &'static str {
        match self {
            Exchange::Nyse => "NYSE",
            Exchange::Nasdaq => "NASD",
        }
    }
}

impl fmt::Display for Exchange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Exchange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NYSE" => Ok(Exchange::Nyse),
            "NASDAQ" | "NASD" => Ok(Exchange::Nasdaq),
            other => Err(Error::InvalidParameter(format!("unknown exchange `{other}`"))),
        }
    }
}

/// The five merged GICS categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sector {
    ConsumerDiscretionaryStaples,
    EnergyIndustrialsMaterialsUtilities,
    FinancialsRealEstate,
    HealthCare,
    InformationTechnologyTelecom,
}

impl Sector {
    pub const ALL: [Sector; 5] = [
        Sector::ConsumerDiscretionaryStaples,
        Sector::EnergyIndustrialsMaterialsUtilities,
        Sector::FinancialsRealEstate,
        Sector::HealthCare,
        Sector::InformationTechnologyTelecom,
    ];

    /// 1-based category number.
    pub fn number(self) -> usize {
        self as usize + 1
    }

    pub fn slug(self) -> &'static str {
        match self {
            Sector::ConsumerDiscretionaryStaples => "consumer",
            Sector::EnergyIndustrialsMaterialsUtilities => "energy_industrials_materials_utilities",
            Sector::FinancialsRealEstate => "financials_real_estate",
            Sector::HealthCare => "health_care",
            Sector::InformationTechnologyTelecom => "it_telecom",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Sector::ConsumerDiscretionaryStaples => "Consumer Discretionary and Staples",
            Sector::EnergyIndustrialsMaterialsUtilities => "Energy, Industrials, Materials and Utilities",
            Sector::FinancialsRealEstate => "Financials and Real Estate",
            Sector::HealthCare => "Health Care",
            Sector::InformationTechnologyTelecom => "Information Technology and Telecommunication Services",
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for Sector {
    type Err = Error;

    /// Accepts the category number, the slug, or the full title.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Sector::ALL
            .into_iter()
            .find(|c| {
                s == c.number().to_string() || s.eq_ignore_ascii_case(c.slug()) || s.eq_ignore_ascii_case(c.title())
            })
            .ok_or_else(|| Error::InvalidParameter(format!("unknown sector `{s}`")))
    }
}

/// Exchange × sector cell, labelled `NYSE1` .. `NASD5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Stratum {
    pub exchange: Exchange,
    pub sector: Sector,
}

impl Stratum {
    pub fn all() -> impl Iterator<Item = Stratum> {
        Exchange::ALL
            .into_iter()
            .flat_map(|exchange| Sector::ALL.into_iter().map(move |sector| Stratum { exchange, sector }))
    }

    pub fn label(self) -> String {
        format!("{}{}", self.exchange.short(), self.sector.number())
    }

    fn index(self) -> u64 {
        (self.exchange as u64) * 5 + self.sector as u64
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Stratum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Stratum::all()
            .find(|st| st.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown stratum `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub ticker: String,
    pub exchange: Exchange,
    pub sector: Sector,
}

impl Unit {
    pub fn stratum(&self) -> Stratum {
        Stratum {
            exchange: self.exchange,
            sector: self.sector,
        }
    }
}

/// Sampling frame: the target population of stocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    units: Vec<Unit>,
}

impl Frame {
    pub fn new(units: Vec<Unit>) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::Empty("frame"));
        }
        let mut seen = HashSet::new();
        for u in &units {
            if !seen.insert(u.ticker.as_str()) {
                return Err(Error::InvalidParameter(format!("duplicate ticker `{}`", u.ticker)));
            }
        }
        Ok(Self { units })
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn population(&self) -> usize {
        self.units.len()
    }

    pub fn exchange_population(&self, exchange: Exchange) -> usize {
        self.units.iter().filter(|u| u.exchange == exchange).count()
    }

    pub fn stratum_population(&self, stratum: Stratum) -> usize {
        self.stratum_units(stratum).count()
    }

    pub fn stratum_units(&self, stratum: Stratum) -> impl Iterator<Item = &Unit> {
        self.units.iter().filter(move |u| u.stratum() == stratum)
    }

    pub fn find(&self, ticker: &str) -> Option<&Unit> {
        self.units.iter().find(|u| u.ticker == ticker)
    }
}

/// Reads `ticker,exchange,sector` rows.
pub fn load_frame<R: Read>(source: R) -> Result<Frame> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers().map_err(|e| malformed(e.to_string(), 1))?.clone();
    let expected = ["ticker", "exchange", "sector"];
    if headers.len() < 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(malformed("header must be `ticker,exchange,sector`".into(), 1));
    }
    let mut units = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(e.to_string(), line)
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        if field(0).is_empty() {
            return Err(malformed("empty ticker".into(), line));
        }
        let exchange = field(1).parse().map_err(|e: Error| malformed(e.to_string(), line))?;
        let sector = field(2).parse().map_err(|e: Error| malformed(e.to_string(), line))?;
        units.push(Unit {
            ticker: field(0).to_owned(),
            exchange,
            sector,
        });
    }
    Frame::new(units)
}

fn malformed(message: String, line: u64) -> Error {
    Error::Malformed { line, message }
}

/// First approximation `n₀ = t²p(1 − p)/d²`.
pub fn cochran_n0<F: Real>(t: F, p: F, d: F) -> F {
    t * t * p * (F::one() - p) / (d * d)
}

/// Finite population correction `n₀/(1 + n₀/N)`.
pub fn fpc_adjust<F: Real>(n0: F, population: usize) -> F {
    n0 / (F::one() + n0 / F::count(population))
}

/// Rounds to the nearest integer with halves going up. Values within 1e-9
/// of a half count as halves, so that algebraically equal routes round
/// alike.
pub fn round_half_up<F: Real>(x: F) -> usize {
    let floor = x.floor();
    let frac = x - floor;
    let up = frac >= F::lit(0.5 - 1e-9);
    (floor.to_usize().unwrap_or(0)) + usize::from(up)
}

/// Sample size `N/(1 + Nd²)`, rounded half-up and capped at `N`.
pub fn yamane_n<F: Real>(population: usize, d: F) -> usize {
    let n = F::count(population);
    round_half_up(n / (F::one() + n * d * d)).min(population)
}

/// Largest-remainder apportionment of `n` proportionally to `populations`.
///
/// Remainder ties go to the larger population, then to the earlier entry.
/// The result sums to `n` and never exceeds a stratum's population.
pub fn allocate_proportional(populations: &[usize], n: usize) -> Result<Vec<usize>> {
    let total: usize = populations.iter().sum();
    if n > total {
        return Err(Error::InfeasibleAllocation {
            requested: n,
            available: total,
        });
    }
    if n == 0 {
        return Ok(vec![0; populations.len()]);
    }
    // quota_i = n·pop_i/total, kept exact as (floor, remainder numerator)
    let mut alloc: Vec<usize> = populations.iter().map(|&p| n * p / total).collect();
    let mut order: Vec<usize> = (0..populations.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = n * populations[a] % total;
        let rb = n * populations[b] % total;
        rb.cmp(&ra).then(populations[b].cmp(&populations[a])).then(a.cmp(&b))
    });
    let short = n - alloc.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        alloc[i] += 1;
    }
    Ok(alloc)
}

/// Two-layer design: sample size, exchange allocation, stratum allocation and
/// the drawn tickers.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    pub population: usize,
    pub n: usize,
    pub margin: f64,
    pub seed: u64,
    pub exchanges: Vec<(Exchange, usize)>,
    pub strata: Vec<(Stratum, usize)>,
    pub drawn: Vec<(Stratum, Vec<String>)>,
}

impl SamplePlan {
    pub fn tickers(&self) -> impl Iterator<Item = (Stratum, &str)> {
        self.drawn
            .iter()
            .flat_map(|(s, ts)| ts.iter().map(move |t| (*s, t.as_str())))
    }
}

/// Uniform draws without replacement inside each stratum. Each stratum uses
/// its own ChaCha stream of `seed`, so a stratum's draw does not depend on
/// the others. Tickers are returned in frame order.
pub fn draw_sample(frame: &Frame, allocation: &[(Stratum, usize)], seed: u64) -> Result<Vec<(Stratum, Vec<String>)>> {
    allocation
        .iter()
        .map(|&(stratum, count)| {
            let units: Vec<&Unit> = frame.stratum_units(stratum).collect();
            if count > units.len() {
                return Err(Error::InfeasibleAllocation {
                    requested: count,
                    available: units.len(),
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stratum.index());
            let mut picked = rand::seq::index::sample(&mut rng, units.len(), count).into_vec();
            picked.sort_unstable();
            Ok((stratum, picked.into_iter().map(|i| units[i].ticker.clone()).collect()))
        })
        .collect()
}

/// Yamane size, then proportional allocation to exchanges and, within each
/// exchange, to sectors.
pub fn plan_sample(frame: &Frame, margin: f64, seed: u64) -> Result<SamplePlan> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::InvalidParameter(format!("margin {margin} outside (0, 1)")));
    }
    let population = frame.population();
    let n = yamane_n(population, margin);
    let exchange_pops: Vec<usize> = Exchange::ALL.iter().map(|&e| frame.exchange_population(e)).collect();
    let exchange_alloc = allocate_proportional(&exchange_pops, n)?;
    let mut strata = Vec::new();
    for (&exchange, &size) in Exchange::ALL.iter().zip(&exchange_alloc) {
        let cells: Vec<Stratum> = Sector::ALL.iter().map(|&sector| Stratum { exchange, sector }).collect();
        let pops: Vec<usize> = cells.iter().map(|&c| frame.stratum_population(c)).collect();
        let alloc = allocate_proportional(&pops, size)?;
        strata.extend(cells.into_iter().zip(alloc));
    }
    let drawn = draw_sample(frame, &strata, seed)?;
    Ok(SamplePlan {
        population,
        n,
        margin,
        seed,
        exchanges: Exchange::ALL.into_iter().zip(exchange_alloc).collect(),
        strata,
        drawn,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProportionInterval<F> {
    pub successes: usize,
    pub sample_size: usize,
    pub population: usize,
    pub confidence: F,
    pub estimate: F,
    pub lower: F,
    pub upper: F,
}

/// Normal-approximation interval for a proportion with finite population
/// correction `√((N − n)/(N − 1))`, clamped to `[0, 1]`.
pub fn proportion_ci<F: Real>(
    successes: usize,
    sample_size: usize,
    population: usize,
    confidence: F,
) -> Result<ProportionInterval<F>> {
    if sample_size == 0 || successes > sample_size || sample_size > population {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= k <= n <= N with n >= 1 (k = {successes}, n = {sample_size}, N = {population})"
        )));
    }
    if !(confidence > F::zero() && confidence < F::one()) {
        return Err(Error::InvalidParameter(format!(
            "confidence {confidence} outside (0, 1)"
        )));
    }
    let n = F::count(sample_size);
    let p = F::count(successes) / n;
    let z = normal::quantile((F::one() + confidence) / F::lit(2.0));
    let fpc = if population > 1 {
        (F::count(population - sample_size) / F::count(population - 1)).sqrt()
    } else {
        F::zero()
    };
    let half = z * (p * (F::one() - p) / n).sqrt() * fpc;
    Ok(ProportionInterval {
        successes,
        sample_size,
        population,
        confidence,
        estimate: p,
        lower: (p - half).max(F::zero()),
        upper: (p + half).min(F::one()),
    })
}
