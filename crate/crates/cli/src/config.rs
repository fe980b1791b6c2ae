use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;

use policy_response::analysis::AnalysisConfig;
use policy_response::codes;
use policy_response::embed::Linkage;
use policy_response::ingest::{DataPaths, DateMask, GapPolicy};
use policy_response::measures::{CategoryFilter, LagOptions};
use policy_response::{ActivityCategory, AnalysisWindow, Execution};

use crate::args::{Format, Options, VectorCategories};
use crate::error::CliError;

/// Validated run settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub paths: DataPaths,
    pub indices_manifest: Option<PathBuf>,
    pub analysis: AnalysisConfig,
    pub vector_categories: VectorCategories,
    pub linkage: Linkage,
    pub min_join: usize,
    pub seed: u64,
    pub permutations: usize,
    pub out_dir: PathBuf,
    pub format: Format,
}

/// Serialized form used for the config hash and the run manifest.
#[derive(Debug, Serialize)]
pub struct ConfigRecord<'a> {
    pub mobility: &'a Path,
    pub stringency: &'a Path,
    pub continents: Option<&'a Path>,
    pub population: Option<&'a Path>,
    pub neighbors: Option<&'a Path>,
    pub boundaries: Option<&'a Path>,
    pub indices_manifest: Option<&'a Path>,
    pub window_start: String,
    pub window_end: String,
    pub xcorr_threshold: f64,
    pub max_lag: i32,
    pub min_overlap: usize,
    pub max_gap: usize,
    pub coverage: f64,
    pub excluded_categories: Vec<&'static str>,
    pub masks: BTreeMap<String, Vec<String>>,
    pub vector_categories: &'static str,
    pub linkage: String,
    pub min_join: usize,
    pub seed: u64,
    pub permutations: usize,
    pub format: &'static str,
    pub sequential: bool,
}

fn existing(path: &Path, flag: &str) -> Result<PathBuf, CliError> {
    if path.is_file() {
        Ok(path.to_path_buf())
    } else {
        Err(CliError::Config(format!("--{flag}: file not found: {}", path.display())))
    }
}

fn optional(path: &Option<PathBuf>, flag: &str) -> Result<Option<PathBuf>, CliError> {
    path.as_deref().map(|p| existing(p, flag)).transpose()
}

pub fn parse_mask(arg: &str) -> Result<(String, DateMask), CliError> {
    let (country, dates) = arg
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("--mask '{arg}': expected COUNTRY:DATE[..DATE]")))?;
    let code = codes::harmonize(country.trim())
        .ok_or_else(|| CliError::Config(format!("--mask '{arg}': unknown country code '{country}'")))?;
    let mask = dates.parse::<DateMask>().map_err(|e| CliError::Config(format!("--mask '{arg}': {e}")))?;
    Ok((code.to_string(), mask))
}

pub fn parse_exclusions(values: &[String]) -> Result<CategoryFilter, CliError> {
    let mut excluded = BTreeSet::new();
    for v in values {
        if v.eq_ignore_ascii_case("none") {
            continue;
        }
        excluded
            .insert(v.parse::<ActivityCategory>().map_err(|e| CliError::Config(format!("--exclude-category: {e}")))?);
    }
    Ok(CategoryFilter { excluded })
}

impl RunConfig {
    pub fn from_options(opts: &Options) -> Result<Self, CliError> {
        let window = AnalysisWindow::new(opts.window_start, opts.window_end)
            .map_err(|e| CliError::Config(format!("--window-start/--window-end: {e}")))?;
        if !(opts.xcorr_threshold > 0.0 && opts.xcorr_threshold < 1.0) {
            return Err(CliError::Config(format!("--xcorr-threshold {} must lie in (0, 1)", opts.xcorr_threshold)));
        }
        let half = (window.len_days() / 2) as i32;
        if opts.max_lag < 1 || opts.max_lag > half {
            return Err(CliError::Config(format!(
                "--max-lag {} must lie in [1, {half}] for this window",
                opts.max_lag
            )));
        }
        if !(0.0..=1.0).contains(&opts.coverage) {
            return Err(CliError::Config(format!("--coverage {} must lie in [0, 1]", opts.coverage)));
        }
        if opts.min_overlap < 3 || opts.min_overlap > window.len_days() {
            return Err(CliError::Config(format!(
                "--min-overlap {} must lie in [3, {}]",
                opts.min_overlap,
                window.len_days()
            )));
        }
        let linkage = opts.linkage.parse::<Linkage>().map_err(|e| CliError::Config(format!("--linkage: {e}")))?;
        let filter = parse_exclusions(&opts.exclude_category)?;
        if filter.excluded.len() == ActivityCategory::ALL.len() {
            return Err(CliError::Config("--exclude-category excludes every category".into()));
        }
        let mut masks: BTreeMap<String, DateMask> = BTreeMap::new();
        for arg in &opts.mask {
            let (code, m) = parse_mask(arg)?;
            let entry = masks.entry(code).or_default();
            for &(a, b) in m.ranges() {
                entry.add(a, b);
            }
        }

        let mobility = opts.mobility.as_deref().ok_or_else(|| CliError::Config("--mobility is required".into()))?;
        let stringency =
            opts.stringency.as_deref().ok_or_else(|| CliError::Config("--stringency is required".into()))?;
        let paths = DataPaths {
            mobility: existing(mobility, "mobility")?,
            stringency: existing(stringency, "stringency")?,
            continents: optional(&opts.continents, "continents")?,
            population: optional(&opts.population, "population")?,
            neighbors: optional(&opts.neighbors, "neighbors")?,
            boundaries: optional(&opts.boundaries, "boundaries")?,
        };

        Ok(RunConfig {
            paths,
            indices_manifest: optional(&opts.indices_manifest, "indices-manifest")?,
            analysis: AnalysisConfig {
                window,
                gap_policy: GapPolicy { max_interior_gap: opts.max_gap, min_coverage: opts.coverage },
                lag: LagOptions {
                    threshold: opts.xcorr_threshold,
                    max_lag: opts.max_lag,
                    min_overlap: opts.min_overlap,
                },
                filter,
                masks,
                execution: if opts.sequential { Execution::Sequential } else { Execution::Parallel },
            },
            vector_categories: opts.vector_categories,
            linkage,
            min_join: opts.min_join,
            seed: opts.seed,
            permutations: opts.permutations,
            out_dir: opts.out_dir.clone(),
            format: opts.format,
        })
    }

    /// Categories that make up the response vectors.
    pub fn vector_categories(&self) -> Vec<ActivityCategory> {
        match self.vector_categories {
            VectorCategories::All => ActivityCategory::ALL.to_vec(),
            VectorCategories::Included => policy_response::analysis::included_categories(&self.analysis.filter),
        }
    }

    pub fn record(&self) -> ConfigRecord<'_> {
        let a = &self.analysis;
        ConfigRecord {
            mobility: &self.paths.mobility,
            stringency: &self.paths.stringency,
            continents: self.paths.continents.as_deref(),
            population: self.paths.population.as_deref(),
            neighbors: self.paths.neighbors.as_deref(),
            boundaries: self.paths.boundaries.as_deref(),
            indices_manifest: self.indices_manifest.as_deref(),
            window_start: a.window.start().to_string(),
            window_end: a.window.end().to_string(),
            xcorr_threshold: a.lag.threshold,
            max_lag: a.lag.max_lag,
            min_overlap: a.lag.min_overlap,
            max_gap: a.gap_policy.max_interior_gap,
            coverage: a.gap_policy.min_coverage,
            excluded_categories: a.filter.excluded.iter().map(|c| c.slug()).collect(),
            masks: a
                .masks
                .iter()
                .map(|(k, m)| (k.clone(), m.ranges().iter().map(|(s, e)| format!("{s}..{e}")).collect()))
                .collect(),
            vector_categories: match self.vector_categories {
                VectorCategories::All => "all",
                VectorCategories::Included => "included",
            },
            linkage: format!("{:?}", self.linkage).to_lowercase(),
            min_join: self.min_join,
            seed: self.seed,
            permutations: self.permutations,
            format: match self.format {
                Format::Csv => "csv",
                Format::Json => "json",
            },
            sequential: a.execution == Execution::Sequential,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks_and_exclusions() {
        let (code, mask) = parse_mask("EGY:2020-03-12").unwrap();
        assert_eq!(code, "EG");
        assert_eq!(mask.ranges().len(), 1);
        assert!(parse_mask("EG-2020-03-12").is_err());
        assert!(parse_mask("QQ:2020-03-12").is_err());
        assert!(parse_mask("EG:2020-13-12").is_err());
        assert!(parse_exclusions(&["none".into()]).unwrap().excluded.is_empty());
        assert_eq!(parse_exclusions(&["parks".into(), "transit".into()]).unwrap().excluded.len(), 2);
        assert!(parse_exclusions(&["beaches".into()]).is_err());
    }
}
