//! The per-country pipeline: alignment, the three measures, and the tables
//! derived from them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::embed::zscore_columns;
use crate::exec::Execution;
use crate::ingest::{align, align_subregions, AlignedCountry, Dataset, DateMask, GapPolicy};
use crate::measures::{
    country_lag, country_similarity, subregion_variation, CategoryFilter, LagOptions, LagProfile, SimilarityScore,
    SubregionVariation,
};
use crate::rankstats::MeasureTable;
use crate::series::{ActivityCategory, AnalysisWindow};
use crate::spatial::{CountryResponseVector, ResponseMeasure};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub window: AnalysisWindow,
    pub gap_policy: GapPolicy,
    pub lag: LagOptions,
    /// Categories left out of country means.
    pub filter: CategoryFilter,
    /// Per-country date masks, keyed by alpha-2 code.
    pub masks: BTreeMap<String, DateMask>,
    #[serde(skip)]
    pub execution: Execution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Align,
    Similarity,
    Lag,
    Subregion,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Align => "align",
            Stage::Similarity => "similarity",
            Stage::Lag => "lag",
            Stage::Subregion => "subregion",
        }
    }
}

/// One country left out of one or more measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub iso_code: String,
    /// Stage and reason code for every measure the country is missing from.
    pub reasons: Vec<(Stage, String)>,
    pub detail: String,
}

impl Exclusion {
    /// `stage:code` pairs joined by `;`.
    pub fn reason_codes(&self) -> String {
        self.reasons.iter().map(|(s, c)| format!("{}:{c}", s.name())).collect::<Vec<_>>().join(";")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub aligned: BTreeMap<String, AlignedCountry>,
    pub similarity: BTreeMap<String, SimilarityScore>,
    pub lag: BTreeMap<String, LagProfile>,
    pub subregion: BTreeMap<String, SubregionVariation>,
    pub exclusions: Vec<Exclusion>,
    pub filter: CategoryFilter,
}

struct CountryOutcome {
    aligned: Option<AlignedCountry>,
    similarity: Option<SimilarityScore>,
    lag: Option<LagProfile>,
    subregion: Option<SubregionVariation>,
    exclusion: Option<Exclusion>,
}

/// Runs alignment and the three measures for every country, in code order.
pub fn analyze(data: &Dataset, config: &AnalysisConfig) -> Analysis {
    let countries: Vec<_> = data.countries.iter().collect();
    let outcomes = config.execution.map(&countries, |(code, rec)| {
        let mask = config.masks.get(*code);
        let mut out = CountryOutcome { aligned: None, similarity: None, lag: None, subregion: None, exclusion: None };
        let aligned = match align(rec, &config.window, &config.gap_policy, mask) {
            Ok(a) => a,
            Err(rej) => {
                out.exclusion = Some(Exclusion {
                    iso_code: (*code).clone(),
                    reasons: vec![(Stage::Align, rej.code().to_string())],
                    detail: rej.to_string(),
                });
                return out;
            }
        };
        let mut reasons = Vec::new();
        let mut details = Vec::new();
        match country_similarity(code, &aligned.pairs, &config.filter) {
            Ok(s) => out.similarity = Some(s),
            Err(e) => {
                reasons.push((Stage::Similarity, "similarity_undefined".to_string()));
                details.push(format!("similarity: {e}"));
            }
        }
        match country_lag(code, &aligned.pairs, &config.lag, &config.filter) {
            Ok(l) => out.lag = Some(l),
            Err(e) => {
                reasons.push((Stage::Lag, "no_significant_lag".to_string()));
                details.push(format!("lag: {e}"));
            }
        }
        let subs = align_subregions(rec, &config.window, &config.gap_policy, mask);
        if rec.subregions.len() < 2 {
            reasons.push((Stage::Subregion, "no_subregions".to_string()));
            details.push(format!("subregion: {} subregion(s) published", rec.subregions.len()));
        } else {
            match subregion_variation(code, &subs) {
                Ok(v) => out.subregion = Some(v),
                Err(e) => {
                    reasons.push((Stage::Subregion, "subregion_undefined".to_string()));
                    details.push(format!("subregion: {e}"));
                }
            }
        }
        if !reasons.is_empty() {
            out.exclusion = Some(Exclusion { iso_code: (*code).clone(), reasons, detail: details.join("; ") });
        }
        out.aligned = Some(aligned);
        out
    });

    let mut result = Analysis {
        aligned: BTreeMap::new(),
        similarity: BTreeMap::new(),
        lag: BTreeMap::new(),
        subregion: BTreeMap::new(),
        exclusions: Vec::new(),
        filter: config.filter.clone(),
    };
    for ((code, _), o) in countries.into_iter().zip(outcomes) {
        if let Some(a) = o.aligned {
            result.aligned.insert(code.clone(), a);
        }
        if let Some(s) = o.similarity {
            result.similarity.insert(code.clone(), s);
        }
        if let Some(l) = o.lag {
            result.lag.insert(code.clone(), l);
        }
        if let Some(v) = o.subregion {
            result.subregion.insert(code.clone(), v);
        }
        result.exclusions.extend(o.exclusion);
    }
    result
}

/// Mean and count of a per-category value over countries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryMean {
    pub category: ActivityCategory,
    pub mean: Option<f64>,
    pub n: usize,
}

fn category_mean(category: ActivityCategory, values: impl Iterator<Item = f64>) -> CategoryMean {
    let v: Vec<f64> = values.collect();
    CategoryMean { category, mean: (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64), n: v.len() }
}

fn sorted_desc(mut rows: Vec<CategoryMean>) -> Vec<CategoryMean> {
    rows.sort_by(|a, b| {
        b.mean
            .unwrap_or(f64::NEG_INFINITY)
            .total_cmp(&a.mean.unwrap_or(f64::NEG_INFINITY))
            .then(a.category.cmp(&b.category))
    });
    rows
}

impl Analysis {
    pub fn mean_cosine_table(&self) -> MeasureTable {
        MeasureTable::from_values(
            "mean_cosine",
            self.similarity.iter().map(|(k, s)| (k.clone(), s.country_mean_cosine)),
        )
    }

    pub fn mean_pearson_table(&self) -> MeasureTable {
        MeasureTable::from_values(
            "mean_pearson",
            self.similarity.iter().filter_map(|(k, s)| s.country_mean_pearson.map(|p| (k.clone(), p))),
        )
    }

    pub fn mean_lag_table(&self) -> MeasureTable {
        MeasureTable::from_values("mean_lag", self.lag.iter().map(|(k, l)| (k.clone(), l.country_mean_lag)))
    }

    pub fn subregion_sd_table(&self) -> MeasureTable {
        MeasureTable::from_values("subregion_sd", self.subregion.iter().map(|(k, v)| (k.clone(), v.country_mean_sd)))
    }

    pub fn measure_tables(&self) -> Vec<MeasureTable> {
        vec![self.mean_cosine_table(), self.mean_pearson_table(), self.mean_lag_table(), self.subregion_sd_table()]
    }

    /// Mean cosine per category over countries, highest first.
    pub fn category_cosine_means(&self) -> Vec<CategoryMean> {
        sorted_desc(
            ActivityCategory::ALL
                .iter()
                .map(|&c| {
                    category_mean(
                        c,
                        self.similarity.values().filter_map(|s| s.per_category.get(&c).and_then(|x| x.cosine)),
                    )
                })
                .collect(),
        )
    }

    /// Mean significant lag per category over countries, highest first.
    pub fn category_lag_means(&self) -> Vec<CategoryMean> {
        sorted_desc(
            ActivityCategory::ALL
                .iter()
                .map(|&c| {
                    category_mean(
                        c,
                        self.lag.values().filter_map(|l| l.per_category.get(&c).and_then(|o| o.days()).map(f64::from)),
                    )
                })
                .collect(),
        )
    }

    /// Mean over countries of the country mean lag.
    pub fn overall_mean_lag(&self) -> Option<f64> {
        let v: Vec<f64> = self.lag.values().map(|l| l.country_mean_lag).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    fn value(&self, code: &str, measure: ResponseMeasure, cat: ActivityCategory) -> Option<f64> {
        match measure {
            ResponseMeasure::Cosine => self.similarity.get(code)?.per_category.get(&cat)?.cosine,
            ResponseMeasure::Lag => self.lag.get(code)?.per_category.get(&cat)?.days().map(f64::from),
            ResponseMeasure::SubregionSd => self.subregion.get(code)?.per_category_sd.get(&cat).copied(),
        }
    }

    /// Per-category vectors of `measure` over `categories`. Countries
    /// missing any of the categories are left out.
    pub fn response_vectors(
        &self,
        measure: ResponseMeasure,
        categories: &[ActivityCategory],
    ) -> Vec<CountryResponseVector> {
        self.aligned
            .keys()
            .filter_map(|code| {
                let values: Option<Vec<f64>> = categories.iter().map(|&c| self.value(code, measure, c)).collect();
                values.map(|values| CountryResponseVector { iso_code: code.clone(), measure, values })
            })
            .collect()
    }

    /// Per-category cosine and lag values side by side, each column
    /// z-scored over the countries that have all of them.
    pub fn combined_features(&self, categories: &[ActivityCategory]) -> Vec<(String, Vec<f64>)> {
        let cos = self.response_vectors(ResponseMeasure::Cosine, categories);
        let lag: BTreeMap<_, _> = self
            .response_vectors(ResponseMeasure::Lag, categories)
            .into_iter()
            .map(|v| (v.iso_code, v.values))
            .collect();
        let (codes, rows): (Vec<String>, Vec<Vec<f64>>) = cos
            .into_iter()
            .filter_map(|c| {
                lag.get(&c.iso_code).map(|l| {
                    let mut row = c.values;
                    row.extend_from_slice(l);
                    (c.iso_code, row)
                })
            })
            .unzip();
        codes.into_iter().zip(zscore_columns(&rows)).collect()
    }
}

/// Categories admitted by `filter`, in canonical order.
pub fn included_categories(filter: &CategoryFilter) -> Vec<ActivityCategory> {
    ActivityCategory::ALL.iter().copied().filter(|c| filter.includes(*c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_mobility, parse_stringency};
    use crate::synthetic::{generate, SyntheticConfig};

    fn dataset(countries: usize, seed: u64) -> Dataset {
        let files = generate(&SyntheticConfig { countries, seed, ..Default::default() });
        Dataset::assemble(
            parse_mobility(files.mobility.as_bytes()).unwrap(),
            parse_stringency(files.stringency.as_bytes()).unwrap(),
        )
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let ds = dataset(12, 3);
        let seq = analyze(&ds, &AnalysisConfig { execution: Execution::Sequential, ..Default::default() });
        let par = analyze(&ds, &AnalysisConfig { execution: Execution::Parallel, ..Default::default() });
        assert_eq!(seq, par);
        assert!(!seq.similarity.is_empty());
    }

    #[test]
    fn every_country_accounted_for() {
        let ds = dataset(15, 9);
        let a = analyze(&ds, &AnalysisConfig::default());
        for code in ds.countries.keys() {
            let excluded = a.exclusions.iter().filter(|e| &e.iso_code == code).count();
            assert!(excluded <= 1);
            let in_all = a.similarity.contains_key(code) && a.lag.contains_key(code) && a.subregion.contains_key(code);
            assert_eq!(in_all, excluded == 0, "{code}");
        }
    }

    #[test]
    fn vectors_have_uniform_dimension() {
        let a = analyze(&dataset(10, 4), &AnalysisConfig::default());
        let cats = included_categories(&CategoryFilter::default());
        assert_eq!(cats.len(), 5);
        for v in a.response_vectors(ResponseMeasure::Cosine, &cats) {
            assert_eq!(v.values.len(), 5);
        }
        let feats = a.combined_features(&ActivityCategory::ALL);
        assert!(feats.iter().all(|(_, r)| r.len() == 12));
    }
}
