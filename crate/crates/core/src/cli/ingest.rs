//! CSV ingestion. Headers must match exactly; rates are decimals, never percent.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::crisis::DualPaths;
use crate::rate_model::{survey_spread, SurveySpread};
use crate::sources::ReturnSeries;

pub const PRICES_HEADER: [&str; 4] = ["date", "asset_id", "venue", "price"];
pub const SURVEY_HEADER: [&str; 3] = ["country", "respondent_id", "risk_free_rate"];
pub const RETURNS_HEADER: [&str; 3] = ["period", "asset_id", "return"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: duplicate row for {key}")]
    DuplicateRow { line: u64, key: String },
    #[error("line {line}: price must be > 0, got {price}")]
    NonPositivePrice { line: u64, price: f64 },
    #[error("line {line}: empty country")]
    EmptyCountry { line: u64 },
}

impl IngestError {
    fn parse(line: u64, message: impl Into<String>) -> Self {
        IngestError::Parse {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub price: f64,
}

/// Price series keyed by `(asset_id, venue)`, each sorted by date.
pub type PriceTable = BTreeMap<(String, String), Vec<PricePoint>>;

/// Respondent rates grouped by country, in file order within each country.
pub type SurveyTable = BTreeMap<String, Vec<f64>>;

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Yields `(line, fields)` for each data row after checking the header.
fn records<R: Read>(
    reader: R,
    header: &[&str],
) -> Result<impl Iterator<Item = Result<(u64, csv::StringRecord), IngestError>>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut first = csv::StringRecord::new();
    let has_header = rdr
        .read_record(&mut first)
        .map_err(|e| IngestError::parse(1, e.to_string()))?;
    let found: Vec<&str> = first.iter().collect();
    if !has_header || found != header {
        return Err(IngestError::Header {
            expected: header.join(","),
            found: found.join(","),
        });
    }
    let width = header.len();
    Ok(rdr.into_records().map(move |rec| {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            IngestError::parse(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(IngestError::parse(line, format!("expected {width} fields, found {}", rec.len())));
        }
        Ok((line, rec))
    }))
}

fn parse_f64(line: u64, field: &str, what: &str) -> Result<f64, IngestError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| IngestError::parse(line, format!("invalid {what} `{field}`")))?;
    if !v.is_finite() {
        return Err(IngestError::parse(line, format!("{what} must be finite")));
    }
    Ok(v)
}

pub fn ingest_prices(path: &Path) -> Result<PriceTable, IngestError> {
    parse_prices(open(path)?)
}

/// Parses `date,asset_id,venue,price` rows.
pub fn parse_prices<R: Read>(reader: R) -> Result<PriceTable, IngestError> {
    let mut table = PriceTable::new();
    for row in records(reader, &PRICES_HEADER)? {
        let (line, rec) = row?;
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|_| IngestError::parse(line, format!("invalid ISO-8601 date `{}`", &rec[0])))?;
        let (asset, venue) = (rec[1].to_string(), rec[2].to_string());
        if asset.is_empty() || venue.is_empty() {
            return Err(IngestError::parse(line, "empty asset_id or venue"));
        }
        let price = parse_f64(line, &rec[3], "price")?;
        if price <= 0.0 {
            return Err(IngestError::NonPositivePrice { line, price });
        }
        let series = table.entry((asset.clone(), venue.clone())).or_default();
        if series.iter().any(|p| p.date == date) {
            return Err(IngestError::DuplicateRow {
                line,
                key: format!("{asset}/{venue} on {date}"),
            });
        }
        series.push(PricePoint { date, price });
    }
    for series in table.values_mut() {
        series.sort_by_key(|p| p.date);
    }
    Ok(table)
}

/// Two venues of one asset restricted to the dates both report, with the
/// number of calendar days the aligned sample spans.
pub fn align_venues(
    table: &PriceTable,
    asset_id: &str,
    venue_a: &str,
    venue_b: &str,
) -> Result<(DualPaths, i64), String> {
    let get = |venue: &str| {
        table
            .get(&(asset_id.to_string(), venue.to_string()))
            .ok_or_else(|| format!("no prices for {asset_id} on venue {venue}"))
    };
    let (a, b) = (get(venue_a)?, get(venue_b)?);
    let b_by_date: BTreeMap<NaiveDate, f64> = b.iter().map(|p| (p.date, p.price)).collect();
    let mut paths = DualPaths {
        venue_a: Vec::new(),
        venue_b: Vec::new(),
    };
    let mut dates = Vec::new();
    for p in a {
        if let Some(&pb) = b_by_date.get(&p.date) {
            paths.venue_a.push(p.price);
            paths.venue_b.push(pb);
            dates.push(p.date);
        }
    }
    let span = match (dates.first(), dates.last()) {
        (Some(first), Some(last)) => (*last - *first).num_days(),
        _ => 0,
    };
    Ok((paths, span))
}

pub fn ingest_survey(path: &Path) -> Result<SurveyTable, IngestError> {
    parse_survey(open(path)?)
}

/// Parses `country,respondent_id,risk_free_rate` rows.
pub fn parse_survey<R: Read>(reader: R) -> Result<SurveyTable, IngestError> {
    let mut table = SurveyTable::new();
    let mut seen = BTreeMap::new();
    for row in records(reader, &SURVEY_HEADER)? {
        let (line, rec) = row?;
        let country = rec[0].trim();
        if country.is_empty() {
            return Err(IngestError::EmptyCountry { line });
        }
        let rate = parse_f64(line, &rec[2], "risk_free_rate")?;
        match seen.entry((country.to_string(), rec[1].to_string())) {
            Entry::Occupied(_) => {
                return Err(IngestError::DuplicateRow {
                    line,
                    key: format!("respondent {} in {country}", &rec[1]),
                })
            }
            Entry::Vacant(v) => {
                v.insert(());
            }
        }
        table.entry(country.to_string()).or_default().push(rate);
    }
    Ok(table)
}

/// Min, max and spread of each country's reported rates.
pub fn survey_spreads(table: &SurveyTable) -> BTreeMap<String, SurveySpread> {
    table
        .iter()
        .filter_map(|(country, rates)| survey_spread(rates).ok().map(|s| (country.clone(), s)))
        .collect()
}

pub fn ingest_returns(path: &Path) -> Result<Vec<ReturnSeries>, IngestError> {
    parse_returns(open(path)?)
}

/// Parses `period,asset_id,return` rows into one series per asset, ordered by period.
pub fn parse_returns<R: Read>(reader: R) -> Result<Vec<ReturnSeries>, IngestError> {
    let mut by_asset: BTreeMap<String, BTreeMap<i64, f64>> = BTreeMap::new();
    for row in records(reader, &RETURNS_HEADER)? {
        let (line, rec) = row?;
        let period: i64 = rec[0]
            .trim()
            .parse()
            .map_err(|_| IngestError::parse(line, format!("invalid period `{}`", &rec[0])))?;
        let asset = rec[1].to_string();
        if asset.is_empty() {
            return Err(IngestError::parse(line, "empty asset_id"));
        }
        let value = parse_f64(line, &rec[2], "return")?;
        if by_asset.entry(asset.clone()).or_default().insert(period, value).is_some() {
            return Err(IngestError::DuplicateRow {
                line,
                key: format!("{asset} period {period}"),
            });
        }
    }
    Ok(by_asset
        .into_iter()
        .map(|(id, obs)| ReturnSeries::new(id, obs.into_values().collect()))
        .collect())
}
