//! Loading, cleaning and differencing of daily closing-price panels.
//!
//! The price file is a delimited table whose first column is an ISO-8601
//! `date` and whose remaining columns are one index code each. Empty cells
//! and non-numeric markers (`NA`, `#N/A`, `-`, ...) count as "market not
//! operative" on that day. The metadata file maps every index code to its
//! country and region.

use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::sync::Arc;

use chrono::NaiveDate;
use log::warn;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Region codes accepted in the metadata file.
pub const REGION_CODES: [&str; 5] = ["NA", "SA", "AP", "EME", "AME"];

/// Default fraction of non-operative markets above which a day is dropped.
pub const DEFAULT_MISSING_DAY_FRACTION: f64 = 0.30;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexMeta {
    pub index_code: String,
    #[serde(default)]
    pub country: String,
    pub country_code: String,
    pub region_code: String,
    #[serde(default)]
    pub region: String,
}

impl IndexMeta {
    pub fn new(index_code: &str, country_code: &str, region_code: &str) -> Self {
        IndexMeta {
            index_code: index_code.to_owned(),
            country: String::new(),
            country_code: country_code.to_owned(),
            region_code: region_code.to_owned(),
            region: String::new(),
        }
    }
}

/// Dated matrix of closing prices, one row per index, one column per date.
/// `None` marks a day on which the market was not operative.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel<T> {
    pub dates: Vec<NaiveDate>,
    pub prices: Array2<Option<T>>,
    pub meta: Vec<IndexMeta>,
}

impl<T: Scalar> PricePanel<T> {
    /// Builds a panel, checking shapes, label uniqueness and date order.
    pub fn new(dates: Vec<NaiveDate>, prices: Array2<Option<T>>, meta: Vec<IndexMeta>) -> Result<Self> {
        if prices.nrows() != meta.len() || prices.ncols() != dates.len() {
            return Err(Error::Malformed(format!(
                "price matrix is {}x{} but there are {} indices and {} dates",
                prices.nrows(),
                prices.ncols(),
                meta.len(),
                dates.len()
            )));
        }
        if meta.len() < 2 {
            return Err(Error::Malformed("a panel needs at least two indices".into()));
        }
        let mut seen = HashSet::new();
        for m in &meta {
            if m.index_code.is_empty() {
                return Err(Error::Malformed("empty index code".into()));
            }
            if !seen.insert(m.index_code.as_str()) {
                return Err(Error::DuplicateIndex(m.index_code.clone()));
            }
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Malformed("dates must be strictly increasing".into()));
        }
        Ok(PricePanel { dates, prices, meta })
    }

    /// Panel with no missing cells.
    pub fn from_complete(dates: Vec<NaiveDate>, prices: Array2<T>, meta: Vec<IndexMeta>) -> Result<Self> {
        Self::new(dates, prices.mapv(Some), meta)
    }

    pub fn num_indices(&self) -> usize {
        self.meta.len()
    }

    pub fn num_days(&self) -> usize {
        self.dates.len()
    }

    pub fn missing_count(&self) -> usize {
        self.prices.iter().filter(|p| p.is_none()).count()
    }

    pub fn codes(&self) -> Vec<String> {
        self.meta.iter().map(|m| m.index_code.clone()).collect()
    }
}

/// Log returns; column `t` is stamped with `dates[t]`, the later of the two
/// closes it differences.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel<T> {
    pub dates: Vec<NaiveDate>,
    pub labels: Arc<[String]>,
    pub returns: Array2<T>,
}

impl<T: Scalar> ReturnPanel<T> {
    pub fn new(dates: Vec<NaiveDate>, labels: Vec<String>, returns: Array2<T>) -> Result<Self> {
        if returns.nrows() != labels.len() || returns.ncols() != dates.len() {
            return Err(Error::Malformed("return matrix shape does not match labels/dates".into()));
        }
        Ok(ReturnPanel {
            dates,
            labels: labels.into(),
            returns,
        })
    }

    pub fn num_indices(&self) -> usize {
        self.returns.nrows()
    }

    pub fn num_days(&self) -> usize {
        self.returns.ncols()
    }
}

/// What `clean_panel` did to the raw panel.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CleanReport {
    pub dropped_dates: Vec<NaiveDate>,
    /// Cells filled with the previous day's close.
    pub forward_filled: usize,
    /// `(index_code, days)` for indices whose leading gap was back-filled.
    pub back_filled: Vec<(String, usize)>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct MetaRow {
    index_code: String,
    #[serde(default)]
    country: String,
    country_code: String,
    region_code: String,
    #[serde(default)]
    region: String,
}

/// Parses the metadata table keyed by index code.
pub fn load_meta(meta_source: impl Read) -> Result<HashMap<String, IndexMeta>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(meta_source);
    let mut out = HashMap::new();
    for row in rdr.deserialize::<MetaRow>() {
        let row = row?;
        if !REGION_CODES.contains(&row.region_code.as_str()) {
            return Err(Error::Malformed(format!(
                "index `{}` has unknown region code `{}`",
                row.index_code, row.region_code
            )));
        }
        let meta = IndexMeta {
            index_code: row.index_code.clone(),
            country: row.country,
            country_code: row.country_code,
            region_code: row.region_code,
            region: row.region,
        };
        if out.insert(row.index_code.clone(), meta).is_some() {
            return Err(Error::DuplicateIndex(row.index_code));
        }
    }
    Ok(out)
}

fn parse_cell(raw: &str, line: usize, column: &str) -> Result<Option<f64>> {
    let s = raw.trim();
    if s.is_empty() {
        return Ok(None);
    }
    let numeric_like = s
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_digit() || c == '.' || ((c == '-' || c == '+') && s.len() > 1));
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ if numeric_like => Err(Error::BadValue {
            line,
            column: column.to_owned(),
            value: s.to_owned(),
        }),
        // NA, #N/A, null, -, nan ...
        _ => Ok(None),
    }
}

/// Reads a price table and joins it with its metadata. Rows are re-sorted
/// by date if the file is out of order.
pub fn load_prices<T: Scalar>(source: impl Read, meta_source: impl Read) -> Result<PricePanel<T>> {
    let meta_by_code = load_meta(meta_source)?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(source);
    let header = rdr.headers()?.clone();
    if header.len() < 3 {
        return Err(Error::Malformed("price file needs a date column and at least two indices".into()));
    }
    if !header[0].eq_ignore_ascii_case("date") {
        return Err(Error::Malformed(format!("first column must be `date`, found `{}`", &header[0])));
    }
    let codes: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut seen = HashSet::new();
    for c in &codes {
        if !seen.insert(c.as_str()) {
            return Err(Error::DuplicateIndex(c.clone()));
        }
    }
    let meta = codes
        .iter()
        .map(|c| meta_by_code.get(c).cloned().ok_or_else(|| Error::MissingMetadata(c.clone())))
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<(NaiveDate, Vec<Option<f64>>)> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|_| Error::BadDate {
            line,
            value: rec[0].to_owned(),
        })?;
        let vals = codes
            .iter()
            .enumerate()
            .map(|(j, code)| parse_cell(&rec[j + 1], line, code))
            .collect::<Result<Vec<_>>>()?;
        rows.push((date, vals));
    }
    rows.sort_by_key(|(d, _)| *d);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::Malformed(format!("date {} appears twice", w[0].0)));
    }

    let n = codes.len();
    let t = rows.len();
    let mut prices = Array2::from_elem((n, t), None);
    for (col, (_, vals)) in rows.iter().enumerate() {
        for (j, v) in vals.iter().enumerate() {
            prices[[j, col]] = v.map(T::lit);
        }
    }
    let dates = rows.into_iter().map(|(d, _)| d).collect();
    PricePanel::new(dates, prices, meta)
}

/// Drops days on which more than `missing_day_fraction` of the markets were
/// closed, forward-fills the remaining gaps from the previous close, and
/// back-fills leading gaps from the first available close.
pub fn clean_panel<T: Scalar>(panel: &PricePanel<T>, missing_day_fraction: f64) -> Result<(PricePanel<T>, CleanReport)> {
    if !(0.0..=1.0).contains(&missing_day_fraction) {
        return Err(Error::param(format!(
            "missing-day fraction {missing_day_fraction} outside [0, 1]"
        )));
    }
    let n = panel.num_indices();
    for (j, m) in panel.meta.iter().enumerate() {
        if panel.prices.row(j).iter().all(Option::is_none) {
            return Err(Error::EmptyIndex(m.index_code.clone()));
        }
    }

    let mut report = CleanReport::default();
    let mut keep = Vec::new();
    for (t, date) in panel.dates.iter().enumerate() {
        let missing = panel.prices.column(t).iter().filter(|p| p.is_none()).count();
        if missing as f64 / n as f64 > missing_day_fraction {
            report.dropped_dates.push(*date);
        } else {
            keep.push(t);
        }
    }
    if keep.is_empty() {
        return Err(Error::AllDaysRemoved);
    }

    let mut prices = Array2::from_elem((n, keep.len()), None);
    for (j, m) in panel.meta.iter().enumerate() {
        let row: Vec<Option<T>> = keep.iter().map(|&t| panel.prices[[j, t]]).collect();
        let first = row
            .iter()
            .position(Option::is_some)
            .ok_or_else(|| Error::EmptyIndex(m.index_code.clone()))?;
        if first > 0 {
            let msg = format!(
                "index `{}` has no close before {}; back-filled {} day(s)",
                m.index_code, panel.dates[keep[first]], first
            );
            warn!("{msg}");
            report.warnings.push(msg);
            report.back_filled.push((m.index_code.clone(), first));
        }
        let mut last = row[first];
        for (col, v) in row.iter().enumerate() {
            match v {
                Some(_) => last = *v,
                None if col > first => report.forward_filled += 1,
                None => {}
            }
            prices[[j, col]] = last;
        }
    }
    let dates = keep.iter().map(|&t| panel.dates[t]).collect();
    let cleaned = PricePanel {
        dates,
        prices,
        meta: panel.meta.clone(),
    };
    Ok((cleaned, report))
}

/// `r_j(t) = ln g_j(t+1) - ln g_j(t)` for a fully observed panel.
pub fn log_returns<T: Scalar>(panel: &PricePanel<T>) -> Result<ReturnPanel<T>> {
    let (n, t) = panel.prices.dim();
    if t < 2 {
        return Err(Error::Malformed("need at least two dates to form returns".into()));
    }
    let mut logs = Array2::<T>::zeros((n, t));
    for j in 0..n {
        for s in 0..t {
            let p = panel.prices[[j, s]].ok_or_else(|| {
                Error::Malformed(format!(
                    "index `{}` has a missing close on {}; clean the panel first",
                    panel.meta[j].index_code, panel.dates[s]
                ))
            })?;
            if !(p > T::zero()) {
                return Err(Error::NonPositivePrice {
                    index: panel.meta[j].index_code.clone(),
                    date: panel.dates[s].to_string(),
                    price: p.to_f64_lossy(),
                });
            }
            logs[[j, s]] = p.ln();
        }
    }
    let mut returns = Array2::<T>::zeros((n, t - 1));
    for j in 0..n {
        for s in 0..(t - 1) {
            returns[[j, s]] = logs[[j, s + 1]] - logs[[j, s]];
        }
    }
    ReturnPanel::new(panel.dates[1..].to_vec(), panel.codes(), returns)
}
