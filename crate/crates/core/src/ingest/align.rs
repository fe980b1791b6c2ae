//! Windowing, gap repair and sign inversion: turns a raw [`CountryRecord`]
//! into dense, co-registered (stringency, activity) vectors.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::series::{ActivityCategory, AnalysisWindow, CountryRecord, DailySeries};

/// Rules for accepting and repairing a windowed series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPolicy {
    /// Longest run of interior missing days that is linearly interpolated.
    pub max_interior_gap: usize,
    /// Minimum fraction of window days that must be observed.
    pub min_coverage: f64,
}

impl Default for GapPolicy {
    fn default() -> Self {
        GapPolicy { max_interior_gap: 3, min_coverage: 0.9 }
    }
}

/// Why a windowed series could not be used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GapFailure {
    Missing,
    LowCoverage { observed: usize, days: usize },
    LeadingGap(usize),
    TrailingGap(usize),
    LongGap { start: usize, len: usize },
}

impl GapFailure {
    /// Stable machine-readable reason code.
    pub fn code(&self) -> &'static str {
        match self {
            GapFailure::Missing => "missing_series",
            GapFailure::LowCoverage { .. } => "low_coverage",
            GapFailure::LeadingGap(_) | GapFailure::TrailingGap(_) => "edge_gap",
            GapFailure::LongGap { .. } => "long_gap",
        }
    }
}

impl fmt::Display for GapFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GapFailure::Missing => write!(f, "no series"),
            GapFailure::LowCoverage { observed, days } => write!(f, "{observed} of {days} days observed"),
            GapFailure::LeadingGap(n) => write!(f, "{n} missing days at window start"),
            GapFailure::TrailingGap(n) => write!(f, "{n} missing days at window end"),
            GapFailure::LongGap { start, len } => write!(f, "{len}-day gap at day {start}"),
        }
    }
}

/// Country-level exclusion from alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CountryRejection {
    NoStringency,
    Stringency(GapFailure),
    NoActivity,
}

impl CountryRejection {
    pub fn code(&self) -> &'static str {
        match self {
            CountryRejection::NoStringency => "no_stringency",
            CountryRejection::Stringency(_) => "stringency_gap",
            CountryRejection::NoActivity => "no_activity",
        }
    }
}

impl fmt::Display for CountryRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountryRejection::NoStringency => write!(f, "no stringency series overlaps the window"),
            CountryRejection::Stringency(g) => write!(f, "stringency unusable: {g}"),
            CountryRejection::NoActivity => write!(f, "no activity category survived alignment"),
        }
    }
}

/// Day ranges excluded from a country's activity series (e.g. a weather
/// event). Masked days are treated as missing and interpolated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateMask {
    ranges: Vec<(NaiveDate, NaiveDate)>,
}

impl DateMask {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, start: NaiveDate, end: NaiveDate) {
        let (a, b) = if start <= end { (start, end) } else { (end, start) };
        self.ranges.push((a, b));
        self.ranges.sort();
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.ranges.iter().any(|&(a, b)| date >= a && date <= b)
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn ranges(&self) -> &[(NaiveDate, NaiveDate)] {
        &self.ranges
    }

    pub fn flags(&self, window: &AnalysisWindow) -> Vec<bool> {
        window.dates().map(|d| self.contains(d)).collect()
    }
}

impl FromStr for DateMask {
    type Err = String;

    /// `YYYY-MM-DD` or `YYYY-MM-DD..YYYY-MM-DD`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse =
            |t: &str| NaiveDate::parse_from_str(t.trim(), "%Y-%m-%d").map_err(|e| format!("bad mask date '{t}': {e}"));
        let mut mask = DateMask::new();
        match s.split_once("..") {
            Some((a, b)) => mask.add(parse(a)?, parse(b)?),
            None => {
                let d = parse(s)?;
                mask.add(d, d);
            }
        }
        Ok(mask)
    }
}

/// A windowed series after repair.
#[derive(Debug, Clone, PartialEq)]
pub struct Repaired {
    pub values: Vec<f64>,
    /// True where the value was interpolated.
    pub filled: Vec<bool>,
}

/// Checks coverage of `raw`, blanks `masked` days, and linearly interpolates
/// interior gaps. Masked runs are interpolated whatever their length; other
/// runs must not exceed `policy.max_interior_gap`.
pub fn repair_gaps(raw: &[Option<f64>], masked: &[bool], policy: &GapPolicy) -> Result<Repaired, GapFailure> {
    let days = raw.len();
    let observed = raw.iter().filter(|v| v.is_some()).count();
    if observed == 0 {
        return Err(GapFailure::Missing);
    }
    if (observed as f64) < policy.min_coverage * days as f64 {
        return Err(GapFailure::LowCoverage { observed, days });
    }
    let is_masked = |i: usize| masked.get(i).copied().unwrap_or(false);
    let values: Vec<Option<f64>> = raw.iter().enumerate().map(|(i, v)| if is_masked(i) { None } else { *v }).collect();

    let first = values.iter().position(Option::is_some);
    let last = values.iter().rposition(Option::is_some);
    let (Some(first), Some(last)) = (first, last) else {
        return Err(GapFailure::Missing);
    };
    if first > 0 {
        return Err(GapFailure::LeadingGap(first));
    }
    if last + 1 < days {
        return Err(GapFailure::TrailingGap(days - 1 - last));
    }

    let mut out: Vec<f64> = Vec::with_capacity(days);
    let mut filled = vec![false; days];
    let mut i = 0;
    while i < days {
        match values[i] {
            Some(v) => {
                out.push(v);
                i += 1;
            }
            None => {
                let left = i - 1;
                let right = (i..days).find(|&j| values[j].is_some()).expect("trailing gap handled above");
                let len = right - i;
                let all_masked = (i..right).all(is_masked);
                if len > policy.max_interior_gap && !all_masked {
                    return Err(GapFailure::LongGap { start: i, len });
                }
                let (a, b) = (out[left], values[right].unwrap());
                let span = (right - left) as f64;
                for k in i..right {
                    out.push(a + (b - a) * (k - left) as f64 / span);
                }
                filled[i..right].fill(true);
                i = right;
            }
        }
    }
    Ok(Repaired { values: out, filled })
}

/// Co-registered stringency and (sign-adjusted) activity vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub category: ActivityCategory,
    pub stringency: Vec<f64>,
    /// Repaired activity, negated unless the category is residential.
    pub activity: Vec<f64>,
}

impl AlignedPair {
    pub fn new(category: ActivityCategory, stringency: Vec<f64>, raw_activity: &[f64]) -> Self {
        let activity =
            if category.is_inverted() { raw_activity.iter().map(|v| -v).collect() } else { raw_activity.to_vec() };
        AlignedPair { category, stringency, activity }
    }

    pub fn n(&self) -> usize {
        self.activity.len()
    }

    /// Activity in its published sign convention.
    pub fn raw_activity(&self) -> Vec<f64> {
        if self.category.is_inverted() {
            self.activity.iter().map(|v| -v).collect()
        } else {
            self.activity.clone()
        }
    }
}

/// Result of aligning one country.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedCountry {
    pub iso_code: String,
    pub window: AnalysisWindow,
    pub stringency: Vec<f64>,
    pub pairs: BTreeMap<ActivityCategory, AlignedPair>,
    pub rejected: BTreeMap<ActivityCategory, GapFailure>,
    /// Cumulative counts over the window, when repairable.
    pub cases: Option<Vec<f64>>,
    pub deaths: Option<Vec<f64>>,
    pub masked: Vec<bool>,
}

impl AlignedCountry {
    /// Rebuilds a record carrying exactly the repaired window data, so that
    /// aligning it again reproduces `self`.
    pub fn to_record(&self, name: &str) -> CountryRecord {
        let dense = |v: &[f64]| DailySeries::new(self.window.start(), v.iter().copied().map(Some).collect());
        let mut rec = CountryRecord::new(self.iso_code.clone(), name);
        rec.stringency = Some(dense(&self.stringency));
        rec.confirmed_cases = self.cases.as_deref().map(dense);
        rec.deaths = self.deaths.as_deref().map(dense);
        rec.national = self.pairs.iter().map(|(&c, p)| (c, dense(&p.raw_activity()))).collect();
        rec
    }
}

/// Aligns the national series of `record` to `window`.
pub fn align(
    record: &CountryRecord,
    window: &AnalysisWindow,
    policy: &GapPolicy,
    mask: Option<&DateMask>,
) -> Result<AlignedCountry, CountryRejection> {
    let days = window.len_days();
    let no_mask = vec![false; days];
    let masked = mask.map(|m| m.flags(window)).unwrap_or_else(|| no_mask.clone());

    let stringency_raw = record.stringency.as_ref().ok_or(CountryRejection::NoStringency)?.slice(window);
    if stringency_raw.iter().all(Option::is_none) {
        return Err(CountryRejection::NoStringency);
    }
    let stringency = repair_gaps(&stringency_raw, &no_mask, policy).map_err(CountryRejection::Stringency)?.values;

    let mut pairs = BTreeMap::new();
    let mut rejected = BTreeMap::new();
    for cat in ActivityCategory::ALL {
        let Some(series) = record.national.get(&cat) else {
            rejected.insert(cat, GapFailure::Missing);
            continue;
        };
        match repair_gaps(&series.slice(window), &masked, policy) {
            Ok(rep) => {
                pairs.insert(cat, AlignedPair::new(cat, stringency.clone(), &rep.values));
            }
            Err(g) => {
                rejected.insert(cat, g);
            }
        }
    }
    if pairs.is_empty() {
        return Err(CountryRejection::NoActivity);
    }
    let counts = |s: &Option<DailySeries>| {
        s.as_ref().and_then(|s| repair_gaps(&s.slice(window), &no_mask, policy).ok()).map(|r| r.values)
    };
    Ok(AlignedCountry {
        iso_code: record.iso_code.clone(),
        window: *window,
        stringency,
        pairs,
        rejected,
        cases: counts(&record.confirmed_cases),
        deaths: counts(&record.deaths),
        masked,
    })
}

/// Repaired subregional series, per category and subregion, in published
/// sign convention.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SubregionSeries {
    pub series: BTreeMap<ActivityCategory, BTreeMap<String, Vec<f64>>>,
    pub rejected: usize,
}

impl SubregionSeries {
    pub fn subregion_count(&self) -> usize {
        self.series.values().flat_map(|m| m.keys()).collect::<std::collections::BTreeSet<_>>().len()
    }
}

pub fn align_subregions(
    record: &CountryRecord,
    window: &AnalysisWindow,
    policy: &GapPolicy,
    mask: Option<&DateMask>,
) -> SubregionSeries {
    let masked = mask.map(|m| m.flags(window)).unwrap_or_else(|| vec![false; window.len_days()]);
    let mut out = SubregionSeries::default();
    for (name, cats) in &record.subregions {
        for (&cat, series) in cats {
            match repair_gaps(&series.slice(window), &masked, policy) {
                Ok(rep) => {
                    out.series.entry(cat).or_default().insert(name.clone(), rep.values);
                }
                Err(_) => out.rejected += 1,
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().map(|&x| if x.is_nan() { None } else { Some(x) }).collect()
    }

    const NA: f64 = f64::NAN;

    fn lenient() -> GapPolicy {
        GapPolicy { max_interior_gap: 3, min_coverage: 0.0 }
    }

    #[test]
    fn two_day_gap_is_interpolated() {
        let r = repair_gaps(&obs(&[10.0, NA, NA, 16.0]), &[], &lenient()).unwrap();
        assert_eq!(r.values, vec![10.0, 12.0, 14.0, 16.0]);
        assert_eq!(r.filled, vec![false, true, true, false]);
    }

    #[test]
    fn edge_and_long_gaps_reject() {
        let p = lenient();
        assert_eq!(repair_gaps(&obs(&[NA, 1.0, 2.0]), &[], &p), Err(GapFailure::LeadingGap(1)));
        assert_eq!(repair_gaps(&obs(&[1.0, 2.0, NA, NA]), &[], &p), Err(GapFailure::TrailingGap(2)));
        assert_eq!(
            repair_gaps(&obs(&[1.0, NA, NA, NA, NA, 2.0]), &[], &p),
            Err(GapFailure::LongGap { start: 1, len: 4 })
        );
        assert_eq!(repair_gaps(&obs(&[NA, NA]), &[], &p), Err(GapFailure::Missing));
    }

    #[test]
    fn coverage_threshold() {
        let p = GapPolicy { max_interior_gap: 3, min_coverage: 0.9 };
        let mut v = vec![Some(1.0); 20];
        v[5] = None;
        v[6] = None;
        assert!(repair_gaps(&v, &[], &p).is_ok());
        v[7] = None;
        assert_eq!(repair_gaps(&v, &[], &p), Err(GapFailure::LowCoverage { observed: 17, days: 20 }));
    }

    #[test]
    fn masked_runs_interpolate_regardless_of_length() {
        let raw = obs(&[0.0, 5.0, 5.0, 5.0, 5.0, 5.0, 6.0]);
        let masked = [false, true, true, true, true, true, false];
        let r = repair_gaps(&raw, &masked, &lenient()).unwrap();
        assert_eq!(r.values, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn date_mask_parsing() {
        let m: DateMask = "2020-03-12".parse().unwrap();
        let d = NaiveDate::from_ymd_opt(2020, 3, 12).unwrap();
        assert!(m.contains(d));
        assert!(!m.contains(d.succ_opt().unwrap()));
        let r: DateMask = "2020-03-14..2020-03-10".parse().unwrap();
        assert_eq!(r.ranges()[0].0, NaiveDate::from_ymd_opt(2020, 3, 10).unwrap());
        assert!("2020-3-xx".parse::<DateMask>().is_err());
    }

    fn record(window: &AnalysisWindow) -> CountryRecord {
        let n = window.len_days();
        let mut rec = CountryRecord::new("OM", "Oman");
        let ramp: Vec<Option<f64>> = (0..n).map(|i| Some(i as f64)).collect();
        rec.stringency = Some(DailySeries::new(window.start(), ramp.clone()));
        for cat in ActivityCategory::ALL {
            let v = (0..n).map(|i| Some(-(i as f64) / 2.0)).collect();
            rec.national.insert(cat, DailySeries::new(window.start(), v));
        }
        rec
    }

    #[test]
    fn full_window_inversion() {
        let w = AnalysisWindow::default();
        let a = align(&record(&w), &w, &GapPolicy::default(), None).unwrap();
        let work = &a.pairs[&ActivityCategory::Workplaces];
        assert_eq!(work.n(), 57);
        assert_eq!(work.activity[10], 5.0);
        let res = &a.pairs[&ActivityCategory::Residential];
        assert_eq!(res.activity[10], -5.0);
        assert_eq!(work.stringency, a.stringency);
    }

    #[test]
    fn missing_stringency_excludes_country() {
        let w = AnalysisWindow::default();
        let mut rec = record(&w);
        rec.stringency = None;
        assert_eq!(align(&rec, &w, &GapPolicy::default(), None), Err(CountryRejection::NoStringency));
        let mut rec = record(&w);
        rec.stringency = Some(DailySeries::new(NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(), vec![Some(1.0)]));
        assert_eq!(align(&rec, &w, &GapPolicy::default(), None), Err(CountryRejection::NoStringency));
    }

    #[test]
    fn sparse_category_is_rejected_with_reason() {
        let w = AnalysisWindow::default();
        let mut rec = record(&w);
        let parks = rec.national.get_mut(&ActivityCategory::Parks).unwrap();
        for v in parks.values.iter_mut().step_by(3) {
            *v = None;
        }
        let a = align(&rec, &w, &GapPolicy::default(), None).unwrap();
        assert!(!a.pairs.contains_key(&ActivityCategory::Parks));
        assert_eq!(a.rejected[&ActivityCategory::Parks].code(), "low_coverage");
    }

    #[test]
    fn realigning_output_is_identity() {
        let w = AnalysisWindow::default();
        let mut rec = record(&w);
        rec.national.get_mut(&ActivityCategory::Workplaces).unwrap().values[20] = None;
        let a = align(&rec, &w, &GapPolicy::default(), None).unwrap();
        let b = align(&a.to_record("Oman"), &w, &GapPolicy::default(), None).unwrap();
        assert_eq!(a.pairs, b.pairs);
        assert_eq!(a.stringency, b.stringency);
    }
}
