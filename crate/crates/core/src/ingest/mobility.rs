//! Community mobility CSV: one row per (country, region, date) with the six
//! percent-change-from-baseline columns.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::NaiveDate;

use super::{find_column, IngestWarning};
use crate::error::IngestError;
use crate::series::{ActivityCategory, CategorySeries, CountryRecord, DailySeries};

pub const COUNTRY_CODE: &str = "country_region_code";
pub const COUNTRY_NAME: &str = "country_region";
pub const SUB_REGION_1: &str = "sub_region_1";
pub const SUB_REGION_2: &str = "sub_region_2";
pub const DATE: &str = "date";
const METRO_AREA: &str = "metro_area";

/// Floor for percent change: a 100% drop.
pub const MIN_PERCENT_CHANGE: f64 = -100.0;

#[derive(Debug, Clone, Default)]
pub struct MobilityParse {
    /// Partial records keyed by two-letter code; only name, national and
    /// subregion series are populated.
    pub records: BTreeMap<String, CountryRecord>,
    pub rows_read: usize,
    /// Rows below the first subregion level, or metro-area rows.
    pub rows_ignored: usize,
    pub warnings: Vec<IngestWarning>,
}

type Points = BTreeMap<NaiveDate, Option<f64>>;

#[derive(Default)]
struct RegionAccum {
    dates: BTreeSet<NaiveDate>,
    points: BTreeMap<ActivityCategory, Points>,
}

impl RegionAccum {
    fn finish(self) -> CategorySeries {
        let (Some(&first), Some(&last)) = (self.dates.first(), self.dates.last()) else {
            return CategorySeries::new();
        };
        let empty = Points::new();
        ActivityCategory::ALL
            .iter()
            .map(|&cat| {
                let pts = self.points.get(&cat).unwrap_or(&empty);
                (cat, DailySeries::from_points(first, last, pts))
            })
            .filter(|(_, s)| s.observed() > 0)
            .collect()
    }
}

#[derive(Default)]
struct CountryAccum {
    name: String,
    national: RegionAccum,
    subregions: BTreeMap<String, RegionAccum>,
}

/// Parses the global mobility report layout. Extra columns are ignored.
pub fn parse_mobility<R: Read>(reader: R) -> Result<MobilityParse, IngestError> {
    let context = "mobility csv";
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers().map_err(|source| IngestError::Csv { context: context.into(), source })?.clone();

    let code_col = find_column(&headers, COUNTRY_CODE, context)?;
    let name_col = find_column(&headers, COUNTRY_NAME, context)?;
    let sub1_col = find_column(&headers, SUB_REGION_1, context)?;
    let sub2_col = find_column(&headers, SUB_REGION_2, context)?;
    let date_col = find_column(&headers, DATE, context)?;
    let metro_col = headers.iter().position(|h| h == METRO_AREA);
    let cat_cols = ActivityCategory::ALL
        .iter()
        .map(|&c| find_column(&headers, c.column(), context).map(|i| (c, i)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = MobilityParse::default();
    let mut countries: BTreeMap<String, CountryAccum> = BTreeMap::new();

    for (idx, row) in rdr.records().enumerate() {
        // header is line 1
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

        let code = field(code_col).to_ascii_uppercase();
        if code.is_empty() {
            out.warnings.push(IngestWarning::new(line, "empty country code"));
            continue;
        }
        if !field(sub2_col).is_empty() || metro_col.is_some_and(|c| !field(c).is_empty()) {
            out.rows_ignored += 1;
            continue;
        }
        let date = match NaiveDate::parse_from_str(field(date_col), "%Y-%m-%d") {
            Ok(d) => d,
            Err(_) => {
                out.warnings.push(IngestWarning::new(line, format!("unparseable date '{}'", field(date_col))));
                continue;
            }
        };

        let mut values = Vec::with_capacity(cat_cols.len());
        let mut bad = None;
        for &(cat, col) in &cat_cols {
            let raw = field(col);
            if raw.is_empty() {
                values.push((cat, None));
                continue;
            }
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() && v >= MIN_PERCENT_CHANGE => values.push((cat, Some(v))),
                Ok(v) => {
                    bad = Some(format!("{} value {v} outside valid range", cat.slug()));
                    break;
                }
                Err(_) => {
                    bad = Some(format!("unparseable number '{raw}' in {}", cat.column()));
                    break;
                }
            }
        }
        if let Some(msg) = bad {
            out.warnings.push(IngestWarning::new(line, msg));
            continue;
        }

        let country = countries.entry(code.clone()).or_default();
        if country.name.is_empty() {
            country.name = field(name_col).to_string();
        }
        let sub1 = field(sub1_col);
        let region = if sub1.is_empty() {
            &mut country.national
        } else {
            country.subregions.entry(sub1.to_string()).or_default()
        };
        if !region.dates.insert(date) {
            out.warnings
                .push(IngestWarning::new(line, format!("duplicate row for {code}/{sub1}/{date}; later row wins")));
        }
        for (cat, v) in values {
            region.points.entry(cat).or_default().insert(date, v);
        }
    }

    for (code, acc) in countries {
        let mut rec = CountryRecord::new(code.clone(), acc.name);
        rec.national = acc.national.finish();
        rec.subregions =
            acc.subregions.into_iter().map(|(name, r)| (name, r.finish())).filter(|(_, s)| !s.is_empty()).collect();
        out.records.insert(code, rec);
    }
    Ok(out)
}

/// Writes records back in the mobility layout (national rows first, then
/// subregions, each in date order).
pub fn write_mobility<'a, W: Write>(
    records: impl IntoIterator<Item = &'a CountryRecord>,
    writer: W,
) -> Result<(), IngestError> {
    let context = "mobility csv writer";
    let wrap = |source| IngestError::Csv { context: context.into(), source };
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![COUNTRY_CODE, COUNTRY_NAME, SUB_REGION_1, SUB_REGION_2, DATE];
    header.extend(ActivityCategory::ALL.iter().map(|c| c.column()));
    w.write_record(&header).map_err(wrap)?;

    for rec in records {
        let regions = std::iter::once(("", &rec.national)).chain(rec.subregions.iter().map(|(n, s)| (n.as_str(), s)));
        for (region, series) in regions {
            let dates: BTreeSet<NaiveDate> = series.values().flat_map(|s| s.iter().map(|(d, _)| d)).collect();
            for date in dates {
                let mut row = vec![
                    rec.iso_code.clone(),
                    rec.name.clone(),
                    region.to_string(),
                    String::new(),
                    date.format("%Y-%m-%d").to_string(),
                ];
                row.extend(
                    ActivityCategory::ALL
                        .iter()
                        .map(|c| series.get(c).and_then(|s| s.get(date)).map(|v| v.to_string()).unwrap_or_default()),
                );
                w.write_record(&row).map_err(wrap)?;
            }
        }
    }
    w.flush().map_err(|source| IngestError::Io { path: context.into(), source })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> String {
        let mut h = vec![COUNTRY_CODE, COUNTRY_NAME, SUB_REGION_1, SUB_REGION_2, DATE];
        h.extend(ActivityCategory::ALL.iter().map(|c| c.column()));
        h.join(",")
    }

    fn d(m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, m, day).unwrap()
    }

    #[test]
    fn single_national_row() {
        let csv = format!("{}\nOM,Oman,,,2020-03-01,-20,5,,-3,-10,4\n", header());
        let p = parse_mobility(csv.as_bytes()).unwrap();
        let om = &p.records["OM"];
        assert_eq!(om.name, "Oman");
        assert_eq!(om.national[&ActivityCategory::RetailRecreation].get(d(3, 1)), Some(-20.0));
        // blank parks cell: category has no observations at all
        assert!(!om.national.contains_key(&ActivityCategory::Parks));
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn blank_cell_is_missing_marker() {
        let csv = format!("{}\nOM,Oman,,,2020-03-01,-20,5,1,-3,-10,4\nOM,Oman,,,2020-03-02,,6,2,-4,-11,5\n", header());
        let p = parse_mobility(csv.as_bytes()).unwrap();
        let retail = &p.records["OM"].national[&ActivityCategory::RetailRecreation];
        assert_eq!(retail.values, vec![Some(-20.0), None]);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn subregions_and_second_level_rows() {
        let csv = format!(
            "{h}\nUS,United States,,,2020-03-01,1,1,1,1,1,1\n\
             US,United States,Ohio,,2020-03-01,2,2,2,2,2,2\n\
             US,United States,Ohio,Franklin County,2020-03-01,3,3,3,3,3,3\n",
            h = header()
        );
        let p = parse_mobility(csv.as_bytes()).unwrap();
        let us = &p.records["US"];
        assert_eq!(us.subregions.len(), 1);
        assert_eq!(us.subregions["Ohio"][&ActivityCategory::Parks].get(d(3, 1)), Some(2.0));
        assert_eq!(p.rows_ignored, 1);
    }

    #[test]
    fn bad_rows_are_skipped_with_warning() {
        let csv = format!(
            "{h}\nNZ,New Zealand,,,2020-13-01,1,1,1,1,1,1\n\
             NZ,New Zealand,,,2020-03-02,abc,1,1,1,1,1\n\
             NZ,New Zealand,,,2020-03-03,-150,1,1,1,1,1\n\
             NZ,New Zealand,,,2020-03-04,-100,1,1,1,1,1\n",
            h = header()
        );
        let p = parse_mobility(csv.as_bytes()).unwrap();
        assert_eq!(p.warnings.len(), 3);
        assert_eq!(p.warnings[0].row, 2);
        let retail = &p.records["NZ"].national[&ActivityCategory::RetailRecreation];
        assert_eq!(retail.start, d(3, 4));
        assert_eq!(retail.values, vec![Some(-100.0)]);
    }

    #[test]
    fn missing_column_is_fatal_and_named() {
        let csv = "country_region_code,country_region,sub_region_1,sub_region_2,date\n";
        match parse_mobility(csv.as_bytes()) {
            Err(IngestError::MissingColumn { column, .. }) => {
                assert_eq!(column, ActivityCategory::RetailRecreation.column())
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rows_outside_any_window_are_retained() {
        let csv = format!("{h}\nOM,Oman,,,2019-12-01,1,1,1,1,1,1\nOM,Oman,,,2020-06-01,2,2,2,2,2,2\n", h = header());
        let p = parse_mobility(csv.as_bytes()).unwrap();
        let s = &p.records["OM"].national[&ActivityCategory::Workplaces];
        assert_eq!(s.start, NaiveDate::from_ymd_opt(2019, 12, 1).unwrap());
        assert_eq!(s.observed(), 2);
    }
}
