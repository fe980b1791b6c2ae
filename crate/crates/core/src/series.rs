//! Domain types shared by every stage: activity categories, daily series,
//! analysis windows and per-country records.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

/// One of the six place categories reported in the mobility data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ActivityCategory {
    RetailRecreation,
    GroceryPharmacy,
    Parks,
    TransitStations,
    Workplaces,
    Residential,
}

impl ActivityCategory {
    pub const ALL: [ActivityCategory; 6] = [
        ActivityCategory::RetailRecreation,
        ActivityCategory::GroceryPharmacy,
        ActivityCategory::Parks,
        ActivityCategory::TransitStations,
        ActivityCategory::Workplaces,
        ActivityCategory::Residential,
    ];

    /// Column carrying this category in the mobility CSV.
    pub fn column(self) -> &'static str {
        match self {
            ActivityCategory::RetailRecreation => "retail_and_recreation_percent_change_from_baseline",
            ActivityCategory::GroceryPharmacy => "grocery_and_pharmacy_percent_change_from_baseline",
            ActivityCategory::Parks => "parks_percent_change_from_baseline",
            ActivityCategory::TransitStations => "transit_stations_percent_change_from_baseline",
            ActivityCategory::Workplaces => "workplaces_percent_change_from_baseline",
            ActivityCategory::Residential => "residential_percent_change_from_baseline",
        }
    }

    /// Short machine name used in reports and on the command line.
    pub fn slug(self) -> &'static str {
        match self {
            ActivityCategory::RetailRecreation => "retail_recreation",
            ActivityCategory::GroceryPharmacy => "grocery_pharmacy",
            ActivityCategory::Parks => "parks",
            ActivityCategory::TransitStations => "transit_stations",
            ActivityCategory::Workplaces => "workplaces",
            ActivityCategory::Residential => "residential",
        }
    }

    /// Categories expected to fall as restrictions tighten. Their series are
    /// negated before being compared with stringency.
    pub fn is_inverted(self) -> bool {
        self != ActivityCategory::Residential
    }
}

impl fmt::Display for ActivityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for ActivityCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' ', '&'], "_");
        let cat = match norm.as_str() {
            "retail_recreation" | "retail_and_recreation" | "retail" => ActivityCategory::RetailRecreation,
            "grocery_pharmacy" | "grocery_and_pharmacy" | "grocery" => ActivityCategory::GroceryPharmacy,
            "parks" | "park" => ActivityCategory::Parks,
            "transit_stations" | "transit" => ActivityCategory::TransitStations,
            "workplaces" | "workplace" => ActivityCategory::Workplaces,
            "residential" => ActivityCategory::Residential,
            _ => return Err(format!("unknown activity category '{s}'")),
        };
        Ok(cat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Continent {
    Africa,
    Asia,
    Europe,
    NorthAmerica,
    Oceania,
    SouthAmerica,
}

impl Continent {
    pub const ALL: [Continent; 6] = [
        Continent::Africa,
        Continent::Asia,
        Continent::Europe,
        Continent::NorthAmerica,
        Continent::Oceania,
        Continent::SouthAmerica,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Continent::Africa => "Africa",
            Continent::Asia => "Asia",
            Continent::Europe => "Europe",
            Continent::NorthAmerica => "North America",
            Continent::Oceania => "Oceania",
            Continent::SouthAmerica => "South America",
        }
    }
}

impl fmt::Display for Continent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Continent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.trim().to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphabetic()).collect();
        match norm.as_str() {
            "africa" | "af" => Ok(Continent::Africa),
            "asia" | "as" => Ok(Continent::Asia),
            "europe" | "eu" => Ok(Continent::Europe),
            "northamerica" | "na" => Ok(Continent::NorthAmerica),
            "oceania" | "oc" | "australia" => Ok(Continent::Oceania),
            "southamerica" | "sa" => Ok(Continent::SouthAmerica),
            _ => Err(format!("unknown continent '{s}'")),
        }
    }
}

/// Inclusive range of calendar days analysed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisWindow {
    start: NaiveDate,
    end: NaiveDate,
}

impl AnalysisWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, String> {
        if start > end {
            return Err(format!("window start {start} is after end {end}"));
        }
        Ok(AnalysisWindow { start, end })
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    pub fn len_days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        date >= self.start && date <= self.end
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.start.iter_days().take(self.len_days())
    }

    /// Index of `date` within the window.
    pub fn offset(&self, date: NaiveDate) -> Option<usize> {
        self.contains(date).then(|| (date - self.start).num_days() as usize)
    }
}

impl Default for AnalysisWindow {
    /// 2020-02-15 through 2020-04-11, eight weeks plus a day.
    fn default() -> Self {
        AnalysisWindow {
            start: NaiveDate::from_ymd_opt(2020, 2, 15).unwrap(),
            end: NaiveDate::from_ymd_opt(2020, 4, 11).unwrap(),
        }
    }
}

/// Date-indexed values, one slot per consecutive day. `None` marks a
/// missing observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    pub start: NaiveDate,
    pub values: Vec<Option<f64>>,
}

impl DailySeries {
    pub fn new(start: NaiveDate, values: Vec<Option<f64>>) -> Self {
        DailySeries { start, values }
    }

    /// Builds a dense series spanning `[start, end]` from sparse observations.
    pub fn from_points(start: NaiveDate, end: NaiveDate, points: &BTreeMap<NaiveDate, Option<f64>>) -> Self {
        let len = (end - start).num_days().max(-1) + 1;
        let values = start.iter_days().take(len as usize).map(|d| points.get(&d).copied().flatten()).collect();
        DailySeries { start, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Last day covered, or `None` for an empty series.
    pub fn end(&self) -> Option<NaiveDate> {
        if self.values.is_empty() {
            None
        } else {
            self.start.checked_add_days(Days::new(self.values.len() as u64 - 1))
        }
    }

    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        if date < self.start {
            return None;
        }
        let idx = (date - self.start).num_days() as usize;
        self.values.get(idx).copied().flatten()
    }

    /// Values over `window`, with days outside the series reported missing.
    pub fn slice(&self, window: &AnalysisWindow) -> Vec<Option<f64>> {
        window.dates().map(|d| self.get(d)).collect()
    }

    pub fn observed(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, Option<f64>)> + '_ {
        self.start.iter_days().zip(self.values.iter().copied())
    }
}

pub type CategorySeries = BTreeMap<ActivityCategory, DailySeries>;

/// Everything known about one country after ingestion.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CountryRecord {
    /// Two-letter code as used by the mobility data.
    pub iso_code: String,
    pub name: String,
    pub continent: Option<Continent>,
    pub national: CategorySeries,
    /// First-level subregions keyed by name.
    pub subregions: BTreeMap<String, CategorySeries>,
    pub population: Option<u64>,
    pub area_km2: Option<f64>,
    pub stringency: Option<DailySeries>,
    /// Cumulative confirmed cases.
    pub confirmed_cases: Option<DailySeries>,
    /// Cumulative deaths.
    pub deaths: Option<DailySeries>,
}

impl CountryRecord {
    pub fn new(iso_code: impl Into<String>, name: impl Into<String>) -> Self {
        CountryRecord { iso_code: iso_code.into(), name: name.into(), ..Default::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_window_is_57_days() {
        let w = AnalysisWindow::default();
        assert_eq!(w.len_days(), 57);
        assert_eq!(w.dates().last(), Some(NaiveDate::from_ymd_opt(2020, 4, 11).unwrap()));
    }

    #[test]
    fn window_rejects_reversed_bounds() {
        let a = NaiveDate::from_ymd_opt(2020, 3, 1).unwrap();
        let b = NaiveDate::from_ymd_opt(2020, 2, 1).unwrap();
        assert!(AnalysisWindow::new(a, b).is_err());
        assert_eq!(AnalysisWindow::new(a, a).unwrap().len_days(), 1);
    }

    #[test]
    fn category_columns_are_distinct() {
        let cols: std::collections::BTreeSet<_> = ActivityCategory::ALL.iter().map(|c| c.column()).collect();
        assert_eq!(cols.len(), 6);
        for c in ActivityCategory::ALL {
            assert_eq!(c.slug().parse::<ActivityCategory>().unwrap(), c);
        }
    }

    #[test]
    fn only_residential_is_not_inverted() {
        let inverted: Vec<_> = ActivityCategory::ALL.into_iter().filter(|c| c.is_inverted()).collect();
        assert_eq!(inverted.len(), 5);
        assert!(!ActivityCategory::Residential.is_inverted());
    }

    #[test]
    fn series_slice_pads_outside_days() {
        let d = |m, day| NaiveDate::from_ymd_opt(2020, m, day).unwrap();
        let s = DailySeries::new(d(2, 16), vec![Some(1.0), None, Some(3.0)]);
        let w = AnalysisWindow::new(d(2, 15), d(2, 19)).unwrap();
        assert_eq!(s.slice(&w), vec![None, Some(1.0), None, Some(3.0), None]);
        assert_eq!(s.end(), Some(d(2, 18)));
    }

    #[test]
    fn continent_parsing() {
        assert_eq!("South America".parse::<Continent>().unwrap(), Continent::SouthAmerica);
        assert_eq!("north_america".parse::<Continent>().unwrap(), Continent::NorthAmerica);
        assert!("Atlantis".parse::<Continent>().is_err());
    }
}
