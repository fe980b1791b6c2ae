//! Government response tracker CSV: national stringency index plus
//! cumulative confirmed cases and deaths, one row per country-day.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;

use super::{find_column, IngestWarning};
use crate::error::IngestError;
use crate::series::DailySeries;

pub const COUNTRY_NAME: &str = "CountryName";
pub const COUNTRY_CODE: &str = "CountryCode";
pub const DATE: &str = "Date";
pub const STRINGENCY: &str = "StringencyIndex";
pub const CASES: &str = "ConfirmedCases";
pub const DEATHS: &str = "ConfirmedDeaths";
const REGION_CODE: &str = "RegionCode";

/// Daily series for one country of the tracker file.
#[derive(Debug, Clone, PartialEq)]
pub struct StringencyRecord {
    pub name: String,
    pub stringency: DailySeries,
    pub cases: DailySeries,
    pub deaths: DailySeries,
}

#[derive(Debug, Clone, Default)]
pub struct StringencyParse {
    /// Keyed by three-letter code.
    pub records: BTreeMap<String, StringencyRecord>,
    pub rows_read: usize,
    pub warnings: Vec<IngestWarning>,
}

#[derive(Default)]
struct Accum {
    name: String,
    stringency: BTreeMap<NaiveDate, Option<f64>>,
    cases: BTreeMap<NaiveDate, Option<f64>>,
    deaths: BTreeMap<NaiveDate, Option<f64>>,
}

fn parse_optional(raw: &str) -> Result<Option<f64>, ()> {
    if raw.is_empty() {
        return Ok(None);
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(()),
    }
}

pub fn parse_stringency<R: Read>(reader: R) -> Result<StringencyParse, IngestError> {
    let context = "stringency csv";
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers().map_err(|source| IngestError::Csv { context: context.into(), source })?.clone();
    let name_col = find_column(&headers, COUNTRY_NAME, context)?;
    let code_col = find_column(&headers, COUNTRY_CODE, context)?;
    let date_col = find_column(&headers, DATE, context)?;
    let si_col = find_column(&headers, STRINGENCY, context)?;
    let cases_col = find_column(&headers, CASES, context)?;
    let deaths_col = find_column(&headers, DEATHS, context)?;
    let region_col = headers.iter().position(|h| h == REGION_CODE);

    let mut out = StringencyParse::default();
    let mut acc: BTreeMap<String, Accum> = BTreeMap::new();

    for (idx, row) in rdr.records().enumerate() {
        let line = idx + 2;
        out.rows_read += 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                out.warnings.push(IngestWarning::new(line, format!("unreadable row: {e}")));
                continue;
            }
        };
        let field = |i: usize| row.get(i).unwrap_or("").trim();
        if region_col.is_some_and(|c| !field(c).is_empty()) {
            continue;
        }
        let code = field(code_col).to_ascii_uppercase();
        if code.is_empty() {
            out.warnings.push(IngestWarning::new(line, "empty country code"));
            continue;
        }
        let date = match NaiveDate::parse_from_str(field(date_col), "%Y%m%d") {
            Ok(d) => d,
            Err(_) => {
                out.warnings.push(IngestWarning::new(line, format!("unparseable date '{}'", field(date_col))));
                continue;
            }
        };
        let parsed =
            (parse_optional(field(si_col)), parse_optional(field(cases_col)), parse_optional(field(deaths_col)));
        let (Ok(si), Ok(cases), Ok(deaths)) = parsed else {
            out.warnings.push(IngestWarning::new(line, format!("unparseable number for {code} on {date}")));
            continue;
        };
        if let Some(v) = si {
            if !(0.0..=100.0).contains(&v) {
                return Err(IngestError::Data {
                    context: context.into(),
                    row: line,
                    message: format!("{code} {date}: stringency {v} outside [0, 100]"),
                });
            }
        }
        let entry = acc.entry(code.clone()).or_default();
        if entry.name.is_empty() {
            entry.name = field(name_col).to_string();
        }
        if entry.stringency.insert(date, si).is_some() {
            return Err(IngestError::Data {
                context: context.into(),
                row: line,
                message: format!("duplicate row for {code} on {date}"),
            });
        }
        entry.cases.insert(date, cases);
        entry.deaths.insert(date, deaths);
    }

    for (code, a) in acc {
        let (Some(&first), Some(&last)) = (a.stringency.keys().next(), a.stringency.keys().next_back()) else {
            continue;
        };
        let rec = StringencyRecord {
            name: a.name,
            stringency: DailySeries::from_points(first, last, &a.stringency),
            cases: DailySeries::from_points(first, last, &a.cases),
            deaths: DailySeries::from_points(first, last, &a.deaths),
        };
        for (label, series) in [("cases", &rec.cases), ("deaths", &rec.deaths)] {
            let mut prev: Option<f64> = None;
            for (date, v) in series.iter() {
                if let Some(v) = v {
                    if prev.is_some_and(|p| v < p) {
                        out.warnings
                            .push(IngestWarning::new(0, format!("{code}: cumulative {label} decrease on {date}")));
                    }
                    prev = Some(v);
                }
            }
        }
        out.records.insert(code, rec);
    }
    Ok(out)
}

/// Writes records in the tracker layout, one row per country-day.
pub fn write_stringency<W: Write>(records: &BTreeMap<String, StringencyRecord>, writer: W) -> Result<(), IngestError> {
    let context = "stringency csv writer";
    let wrap = |source| IngestError::Csv { context: context.into(), source };
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([COUNTRY_NAME, COUNTRY_CODE, DATE, STRINGENCY, CASES, DEATHS]).map_err(wrap)?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (code, rec) in records {
        for (date, si) in rec.stringency.iter() {
            w.write_record([
                rec.name.clone(),
                code.clone(),
                date.format("%Y%m%d").to_string(),
                fmt(si),
                fmt(rec.cases.get(date)),
                fmt(rec.deaths.get(date)),
            ])
            .map_err(wrap)?;
        }
    }
    w.flush().map_err(|source| IngestError::Io { path: context.into(), source })?;
    Ok(())
}
