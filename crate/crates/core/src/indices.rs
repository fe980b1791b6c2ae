//! Country-level attributes and third-party indices, and their rank
//! correlation with the response measures.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codes;
use crate::error::{IngestError, MeasureError};
use crate::exec::Execution;
use crate::ingest::{find_column, AlignedCountry, IngestWarning};
use crate::measures::CategoryFilter;
use crate::rankstats::{joined_values, kendall_tau_b, stars, MeasureTable, PValueMethod};
use crate::series::{AnalysisWindow, CountryRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HigherIs {
    Better,
    Worse,
    #[default]
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IndexTable {
    pub name: String,
    /// ISO alpha-2 code to value.
    pub values: BTreeMap<String, f64>,
    pub higher_is: HigherIs,
}

impl IndexTable {
    pub fn as_measure_table(&self) -> MeasureTable {
        MeasureTable::from_values(self.name.clone(), self.values.clone())
    }
}

/// Reads a two-column `iso_code,value` CSV. Codes may be alpha-2 or
/// alpha-3. Duplicate codes and non-finite values are fatal; blank values
/// and unknown codes are skipped with a warning.
pub fn parse_index_csv<R: Read>(
    name: &str,
    higher_is: HigherIs,
    reader: R,
) -> Result<(IndexTable, Vec<IngestWarning>), IngestError> {
    let context = format!("index '{name}'");
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers().map_err(|source| IngestError::Csv { context: context.clone(), source })?.clone();
    if headers.len() < 2 {
        return Err(IngestError::Format { context, message: "expected two columns (iso_code, value)".into() });
    }
    let code_col = find_column(&headers, "iso_code", &context).unwrap_or(0);
    let value_col = if code_col == 0 { 1 } else { 0 };
    let mut table = IndexTable { name: name.to_string(), values: BTreeMap::new(), higher_is };
    let mut warnings = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let row = idx + 2;
        let rec = rec.map_err(|source| IngestError::Csv { context: context.clone(), source })?;
        let raw_code = rec.get(code_col).unwrap_or("").trim();
        let raw_value = rec.get(value_col).unwrap_or("").trim();
        let Some(code) = codes::harmonize(raw_code) else {
            warnings.push(IngestWarning::new(row, format!("unknown country code '{raw_code}'")));
            continue;
        };
        if raw_value.is_empty() {
            warnings.push(IngestWarning::new(row, format!("blank value for {code}")));
            continue;
        }
        let value: f64 = raw_value.parse().map_err(|_| IngestError::Data {
            context: context.clone(),
            row,
            message: format!("unparseable value '{raw_value}'"),
        })?;
        if !value.is_finite() {
            return Err(IngestError::Data { context, row, message: format!("non-finite value for {code}") });
        }
        if table.values.insert(code.to_string(), value).is_some() {
            return Err(IngestError::Data { context, row, message: format!("duplicate code {code}") });
        }
    }
    Ok((table, warnings))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    /// Relative paths resolve against the manifest's directory.
    pub path: PathBuf,
    #[serde(default)]
    pub higher_is: HigherIs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum ManifestFile {
    Wrapped { indices: Vec<ManifestEntry> },
    Bare(Vec<ManifestEntry>),
}

/// Tables, their resolved file paths, and per-table warnings.
pub type LoadedIndices = (Vec<IndexTable>, Vec<PathBuf>, Vec<(String, Vec<IngestWarning>)>);

/// Reads a manifest JSON (either `[{name, path, higher_is}]` or
/// `{"indices": [...]}`) and the index files it names.
pub fn load_manifest(path: &Path) -> Result<LoadedIndices, IngestError> {
    let context = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    let entries = match serde_json::from_str::<ManifestFile>(&text) {
        Ok(ManifestFile::Wrapped { indices }) | Ok(ManifestFile::Bare(indices)) => indices,
        Err(e) => return Err(IngestError::Format { context, message: format!("invalid manifest: {e}") }),
    };
    let base = path.parent().unwrap_or(Path::new("."));
    let mut names = BTreeSet::new();
    let mut tables = Vec::new();
    let mut files = Vec::new();
    let mut warnings = Vec::new();
    for entry in entries {
        if !names.insert(entry.name.clone()) {
            return Err(IngestError::Format { context, message: format!("duplicate index name '{}'", entry.name) });
        }
        let file = if entry.path.is_absolute() { entry.path.clone() } else { base.join(&entry.path) };
        let reader = File::open(&file).map_err(|source| IngestError::Io { path: file.clone(), source })?;
        let (table, w) =
            parse_index_csv(&entry.name, entry.higher_is, BufReader::new(reader)).map_err(|e| match e {
                IngestError::Io { .. } => e,
                other => IngestError::Format { context: file.display().to_string(), message: other.to_string() },
            })?;
        tables.push(table);
        files.push(file);
        warnings.push((entry.name, w));
    }
    Ok((tables, files, warnings))
}

pub fn per_capita(value: f64, population: u64) -> Result<f64, MeasureError> {
    if population == 0 {
        return Err(MeasureError::Insufficient("population is zero".into()));
    }
    Ok(value / population as f64)
}

/// Tables computed from the dataset itself: population, area, density, and
/// cumulative cases and deaths per capita on the last day of the window.
pub fn derived_tables(countries: &BTreeMap<String, CountryRecord>, window: &AnalysisWindow) -> Vec<IndexTable> {
    let mut population = IndexTable { name: "population".into(), ..Default::default() };
    let mut area = IndexTable { name: "area_km2".into(), ..Default::default() };
    let mut density = IndexTable { name: "population_density".into(), ..Default::default() };
    let mut cases = IndexTable { name: "cases_per_capita".into(), higher_is: HigherIs::Worse, ..Default::default() };
    let mut deaths = IndexTable { name: "deaths_per_capita".into(), higher_is: HigherIs::Worse, ..Default::default() };
    for (code, rec) in countries {
        let Some(pop) = rec.population.filter(|p| *p > 0) else { continue };
        population.values.insert(code.clone(), pop as f64);
        if let Some(a) = rec.area_km2.filter(|a| *a > 0.0) {
            area.values.insert(code.clone(), a);
            density.values.insert(code.clone(), pop as f64 / a);
        }
        let at_end = |s: &Option<crate::series::DailySeries>| s.as_ref().and_then(|s| s.get(window.end()));
        if let Some(c) = at_end(&rec.confirmed_cases) {
            cases.values.insert(code.clone(), per_capita(c, pop).expect("population checked"));
        }
        if let Some(d) = at_end(&rec.deaths) {
            deaths.values.insert(code.clone(), per_capita(d, pop).expect("population checked"));
        }
    }
    vec![population, area, density, cases, deaths]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub measure: String,
    pub index: String,
    pub tau: Option<f64>,
    pub p_value: Option<f64>,
    pub n: usize,
    pub stars: String,
    pub p_method: Option<PValueMethod>,
    /// Join smaller than the minimum, or tau undefined.
    pub insufficient: bool,
}

/// Kendall tau-b of every measure against every index over the countries
/// present in both. Rows are ordered by measure then index, as given.
pub fn correlate_measures_with_indices(
    measures: &[MeasureTable],
    indices: &[IndexTable],
    min_n: usize,
    exec: Execution,
) -> Vec<CorrelationRow> {
    let pairs: Vec<(&MeasureTable, &IndexTable)> =
        measures.iter().flat_map(|m| indices.iter().map(move |i| (m, i))).collect();
    exec.map(&pairs, |(m, idx)| {
        let (a, b) = joined_values(m, &idx.as_measure_table());
        let n = a.len();
        let mut row = CorrelationRow {
            measure: m.name.clone(),
            index: idx.name.clone(),
            tau: None,
            p_value: None,
            n,
            stars: String::new(),
            p_method: None,
            insufficient: true,
        };
        if n < min_n.max(2) {
            return row;
        }
        if let Ok(t) = kendall_tau_b(&a, &b) {
            row.tau = Some(t.tau);
            row.p_value = Some(t.p_value);
            row.stars = stars(t.p_value).to_string();
            row.p_method = Some(t.p_method);
            row.insufficient = false;
        }
        row
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeSeries {
    Stringency,
    Cases,
    Deaths,
}

impl OutcomeSeries {
    pub const ALL: [OutcomeSeries; 3] = [OutcomeSeries::Stringency, OutcomeSeries::Cases, OutcomeSeries::Deaths];

    pub fn name(self) -> &'static str {
        match self {
            OutcomeSeries::Stringency => "stringency",
            OutcomeSeries::Cases => "cases",
            OutcomeSeries::Deaths => "deaths",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub series: OutcomeSeries,
    pub mean_tau: Option<f64>,
    pub n_countries: usize,
    /// Countries where the series was missing or tau undefined.
    pub n_undefined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeComparison {
    pub rows: Vec<OutcomeRow>,
    pub per_country: BTreeMap<String, BTreeMap<OutcomeSeries, f64>>,
}

/// Daily mean of the inverted activity series over categories admitted by
/// `filter`, or `None` when no category qualifies.
pub fn mean_activity(country: &AlignedCountry, filter: &CategoryFilter) -> Option<Vec<f64>> {
    let included: Vec<&Vec<f64>> =
        country.pairs.iter().filter(|(c, _)| filter.includes(**c)).map(|(_, p)| &p.activity).collect();
    if included.is_empty() {
        return None;
    }
    let n = included[0].len();
    Some((0..n).map(|t| included.iter().map(|s| s[t]).sum::<f64>() / included.len() as f64).collect())
}

/// Per-country tau between mean activity and each of stringency, cases and
/// deaths, averaged over the countries where it is defined.
pub fn stringency_vs_outcomes(
    countries: &[AlignedCountry],
    filter: &CategoryFilter,
    exec: Execution,
) -> OutcomeComparison {
    let results = exec.map(countries, |c| {
        let mut taus = BTreeMap::new();
        if let Some(act) = mean_activity(c, filter) {
            for series in OutcomeSeries::ALL {
                let target = match series {
                    OutcomeSeries::Stringency => Some(&c.stringency),
                    OutcomeSeries::Cases => c.cases.as_ref(),
                    OutcomeSeries::Deaths => c.deaths.as_ref(),
                };
                if let Some(t) = target.and_then(|t| kendall_tau_b(&act, t).ok()) {
                    taus.insert(series, t.tau);
                }
            }
        }
        (c.iso_code.clone(), taus)
    });
    let per_country: BTreeMap<_, _> = results.into_iter().collect();
    let rows = OutcomeSeries::ALL
        .iter()
        .map(|&series| {
            let vals: Vec<f64> = per_country.values().filter_map(|m| m.get(&series).copied()).collect();
            OutcomeRow {
                series,
                mean_tau: (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64),
                n_countries: vals.len(),
                n_undefined: per_country.len() - vals.len(),
            }
        })
        .collect();
    OutcomeComparison { rows, per_country }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::AlignedPair;
    use crate::series::ActivityCategory;

    #[test]
    fn per_capita_examples() {
        assert_eq!(per_capita(1000.0, 1_000_000).unwrap(), 0.001);
        assert_eq!(per_capita(0.0, 5).unwrap(), 0.0);
        assert!(per_capita(1.0, 0).is_err());
    }

    #[test]
    fn index_csv_rules() {
        let (t, w) =
            parse_index_csv("hdi", HigherIs::Better, "iso_code,value\nNZL,0.92\nKR,0.91\nXX,1\nFR,\n".as_bytes())
                .unwrap();
        assert_eq!(t.values.len(), 2);
        assert_eq!(t.values["NZ"], 0.92);
        assert_eq!(w.len(), 2);
        assert!(parse_index_csv("d", HigherIs::Neutral, "iso_code,value\nNZ,1\nNZL,2\n".as_bytes()).is_err());
        assert!(parse_index_csv("d", HigherIs::Neutral, "iso_code,value\nNZ,inf\n".as_bytes()).is_err());
        assert!(parse_index_csv("d", HigherIs::Neutral, "iso_code,value\nNZ,abc\n".as_bytes()).is_err());
    }

    fn table(name: &str, vals: &[(&str, f64)]) -> MeasureTable {
        MeasureTable::from_values(name, vals.iter().map(|(k, v)| (k.to_string(), *v)))
    }

    #[test]
    fn correlation_rows() {
        let codes: Vec<String> = (0..12).map(|i| format!("C{i:02}")).collect();
        let m = MeasureTable::from_values("cosine", codes.iter().enumerate().map(|(i, c)| (c.clone(), i as f64)));
        let idx = IndexTable {
            name: "gdp".into(),
            values: codes.iter().enumerate().map(|(i, c)| (c.clone(), (i as f64).exp())).collect(),
            higher_is: HigherIs::Better,
        };
        let small = IndexTable {
            name: "small".into(),
            values: idx.values.iter().take(5).map(|(k, v)| (k.clone(), *v)).collect(),
            higher_is: HigherIs::Neutral,
        };
        let rows = correlate_measures_with_indices(&[m, table("x", &[])], &[idx, small], 10, Execution::Parallel);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].tau, Some(1.0));
        assert_eq!(rows[0].stars, "***");
        assert!(!rows[0].insufficient);
        assert!(rows[1].insufficient);
        assert_eq!(rows[1].n, 5);
        assert!(rows[2].insufficient && rows[2].n == 0);
    }

    fn aligned(code: &str, stringency: Vec<f64>, activity: Vec<f64>, cases: Option<Vec<f64>>) -> AlignedCountry {
        let window = AnalysisWindow::default();
        let n = stringency.len();
        let mut pairs = BTreeMap::new();
        // Residential is not inverted, so `activity` is used as is.
        pairs.insert(
            ActivityCategory::Residential,
            AlignedPair::new(ActivityCategory::Residential, stringency.clone(), &activity),
        );
        AlignedCountry {
            iso_code: code.into(),
            window,
            stringency,
            pairs,
            rejected: BTreeMap::new(),
            cases,
            deaths: None,
            masked: vec![false; n],
        }
    }

    #[test]
    fn identical_activity_gives_unit_tau() {
        let s: Vec<f64> = (0..20).map(|i| (i as f64).sqrt()).collect();
        let c = aligned("AA", s.clone(), s.clone(), Some(vec![5.0; 20]));
        let out = stringency_vs_outcomes(&[c], &CategoryFilter::default(), Execution::Sequential);
        assert_eq!(out.per_country["AA"][&OutcomeSeries::Stringency], 1.0);
        let cases = &out.rows[1];
        assert_eq!(cases.series, OutcomeSeries::Cases);
        assert_eq!(cases.mean_tau, None);
        assert_eq!(cases.n_undefined, 1);
        assert_eq!(out.rows[2].n_undefined, 1);
    }
}
