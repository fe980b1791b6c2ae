//! Reading the upstream datasets and assembling per-country records.

pub mod align;
pub mod mobility;
pub mod stringency;
pub mod tables;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use align::{
    align, align_subregions, repair_gaps, AlignedCountry, AlignedPair, CountryRejection, DateMask, GapFailure,
    GapPolicy, SubregionSeries,
};
pub use mobility::{parse_mobility, write_mobility, MobilityParse};
pub use stringency::{parse_stringency, write_stringency, StringencyParse, StringencyRecord};

use crate::codes;
use crate::error::IngestError;
use crate::series::{Continent, CountryRecord};
use crate::spatial::Geometry;

/// A non-fatal problem found while reading a file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestWarning {
    /// 1-based line number (header is line 1); 0 when not tied to a row.
    pub row: usize,
    pub message: String,
}

impl IngestWarning {
    pub fn new(row: usize, message: impl Into<String>) -> Self {
        IngestWarning { row, message: message.into() }
    }
}

pub(crate) fn find_column(headers: &csv::StringRecord, name: &str, context: &str) -> Result<usize, IngestError> {
    headers
        .iter()
        .position(|h| h.trim().trim_start_matches('\u{feff}') == name)
        .ok_or_else(|| IngestError::MissingColumn { context: context.into(), column: name.into() })
}

/// Locations of the input files. Only the two upstream datasets are required.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DataPaths {
    pub mobility: PathBuf,
    pub stringency: PathBuf,
    pub continents: Option<PathBuf>,
    pub population: Option<PathBuf>,
    pub neighbors: Option<PathBuf>,
    pub boundaries: Option<PathBuf>,
}

impl DataPaths {
    pub fn all(&self) -> Vec<&Path> {
        let mut v = vec![self.mobility.as_path(), self.stringency.as_path()];
        v.extend(
            [&self.continents, &self.population, &self.neighbors, &self.boundaries]
                .into_iter()
                .flatten()
                .map(PathBuf::as_path),
        );
        v
    }
}

/// Warnings from one input file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FileReport {
    pub file: String,
    pub rows: usize,
    pub warnings: Vec<IngestWarning>,
}

/// Immutable, joined view of every input.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    /// Keyed by two-letter code.
    pub countries: BTreeMap<String, CountryRecord>,
    pub neighbors: BTreeMap<String, BTreeSet<String>>,
    pub boundaries: BTreeMap<String, Geometry>,
    /// Mobility codes with no stringency counterpart (or no ISO mapping).
    pub unmatched_mobility: Vec<String>,
    /// Stringency codes with no mobility counterpart.
    pub unmatched_stringency: Vec<String>,
    pub reports: Vec<FileReport>,
}

impl Dataset {
    /// Joins parsed mobility and stringency data through the ISO code table.
    /// Mobility countries lacking a stringency series are dropped and listed
    /// in `unmatched_mobility`.
    pub fn assemble(mobility: MobilityParse, stringency: StringencyParse) -> Self {
        let mut ds = Dataset::default();
        let mut used = BTreeSet::new();
        for (code, mut rec) in mobility.records {
            match codes::alpha3(&code).and_then(|a3| stringency.records.get(a3).map(|s| (a3, s))) {
                Some((a3, s)) => {
                    rec.stringency = Some(s.stringency.clone());
                    rec.confirmed_cases = Some(s.cases.clone());
                    rec.deaths = Some(s.deaths.clone());
                    used.insert(a3.to_string());
                    ds.countries.insert(code, rec);
                }
                None => {
                    log::warn!("mobility country {code} has no stringency series");
                    ds.unmatched_mobility.push(code);
                }
            }
        }
        ds.unmatched_stringency = stringency.records.keys().filter(|k| !used.contains(*k)).cloned().collect();
        ds.reports.push(FileReport { file: "mobility".into(), rows: mobility.rows_read, warnings: mobility.warnings });
        ds.reports.push(FileReport {
            file: "stringency".into(),
            rows: stringency.rows_read,
            warnings: stringency.warnings,
        });
        ds
    }

    pub fn set_continents(&mut self, continents: &BTreeMap<String, Continent>) {
        for (code, rec) in self.countries.iter_mut() {
            rec.continent = continents.get(code).copied();
        }
    }

    pub fn set_population(&mut self, table: &BTreeMap<String, tables::PopulationEntry>) {
        for (code, rec) in self.countries.iter_mut() {
            if let Some(e) = table.get(code) {
                rec.population = Some(e.population);
                rec.area_km2 = e.area_km2;
            }
        }
    }

    /// Reads and joins every configured file.
    pub fn load(paths: &DataPaths) -> Result<Self, IngestError> {
        let open = |p: &Path| {
            File::open(p).map(BufReader::new).map_err(|source| IngestError::Io { path: p.to_path_buf(), source })
        };
        let tag = |p: &Path, e: IngestError| match e {
            IngestError::Io { .. } => e,
            other => IngestError::Format { context: p.display().to_string(), message: other.to_string() },
        };
        let mob = parse_mobility(open(&paths.mobility)?).map_err(|e| tag(&paths.mobility, e))?;
        let si = parse_stringency(open(&paths.stringency)?).map_err(|e| tag(&paths.stringency, e))?;
        let mut ds = Dataset::assemble(mob, si);

        let mut side_report = |file: &Path, warnings: Vec<IngestWarning>, rows: usize| {
            ds.reports.push(FileReport { file: file.display().to_string(), rows, warnings });
        };
        let mut continents = None;
        let mut population = None;
        let mut neighbors = None;
        let mut boundaries = None;
        if let Some(p) = &paths.continents {
            let (m, w) = tables::parse_continents(open(p)?).map_err(|e| tag(p, e))?;
            side_report(p, w, m.len());
            continents = Some(m);
        }
        if let Some(p) = &paths.population {
            let (m, w) = tables::parse_population(open(p)?).map_err(|e| tag(p, e))?;
            side_report(p, w, m.len());
            population = Some(m);
        }
        if let Some(p) = &paths.neighbors {
            let (m, w) = tables::parse_neighbors(open(p)?).map_err(|e| tag(p, e))?;
            side_report(p, w, m.len());
            neighbors = Some(m);
        }
        if let Some(p) = &paths.boundaries {
            let (m, w) = tables::parse_boundaries(open(p)?).map_err(|e| tag(p, e))?;
            side_report(p, w, m.len());
            boundaries = Some(m);
        }
        if let Some(m) = continents {
            ds.set_continents(&m);
        }
        if let Some(m) = population {
            ds.set_population(&m);
        }
        ds.neighbors = neighbors.unwrap_or_default();
        ds.boundaries = boundaries.unwrap_or_default();
        Ok(ds)
    }

    pub fn are_neighbors(&self, a: &str, b: &str) -> bool {
        self.neighbors.get(a).is_some_and(|s| s.contains(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::ActivityCategory;

    #[test]
    fn assemble_joins_through_code_table() {
        let mut header = vec!["country_region_code", "country_region", "sub_region_1", "sub_region_2", "date"];
        header.extend(ActivityCategory::ALL.iter().map(|c| c.column()));
        let mob = format!(
            "{}\nNZ,New Zealand,,,2020-03-25,1,2,3,4,5,6\nXX,Nowhere,,,2020-03-25,1,2,3,4,5,6\n",
            header.join(",")
        );
        let si = "CountryName,CountryCode,Date,StringencyIndex,ConfirmedCases,ConfirmedDeaths\n\
                  New Zealand,NZL,20200325,96.3,205,0\nFrance,FRA,20200325,90,1,1\n";
        let ds = Dataset::assemble(parse_mobility(mob.as_bytes()).unwrap(), parse_stringency(si.as_bytes()).unwrap());
        assert!(ds.countries["NZ"].stringency.is_some());
        assert!(!ds.countries.contains_key("XX"));
        assert_eq!(ds.unmatched_mobility, vec!["XX".to_string()]);
        assert_eq!(ds.unmatched_stringency, vec!["FRA".to_string()]);
    }
}
