//! The three response measures: similarity between stringency and activity,
//! lag of the activity response, and variability of the response across
//! subregions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::MeasureError;
use crate::ingest::{AlignedPair, SubregionSeries};
use crate::series::ActivityCategory;

fn check_pair(a: &[f64], b: &[f64], min_len: usize) -> Result<(), MeasureError> {
    if a.len() != b.len() {
        return Err(MeasureError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < min_len {
        return Err(MeasureError::TooShort { needed: min_len, got: a.len() });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(MeasureError::NonFinite);
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine of the angle between `a` and `b`.
///
/// Not clamped to `[0, 1]`: vectors with mixed signs give values down to -1.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, MeasureError> {
    check_pair(a, b, 2)?;
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(MeasureError::ZeroNorm);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Pearson correlation, i.e. the cosine of the mean-centered vectors.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, MeasureError> {
    check_pair(a, b, 3)?;
    pearson_unchecked(a, b)
}

fn pearson_unchecked(a: &[f64], b: &[f64]) -> Result<f64, MeasureError> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    // relative guard: a float-noise "variance" on a constant vector is zero
    let scale_a = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let scale_b = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if saa <= (1e-12 * scale_a).powi(2) * n || sbb <= (1e-12 * scale_b).powi(2) * n {
        return Err(MeasureError::ZeroVariance);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Which categories feed the per-country means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryFilter {
    pub excluded: BTreeSet<ActivityCategory>,
}

impl Default for CategoryFilter {
    /// Parks are left out of the means; they are too weather-dependent.
    fn default() -> Self {
        CategoryFilter { excluded: BTreeSet::from([ActivityCategory::Parks]) }
    }
}

impl CategoryFilter {
    pub fn none() -> Self {
        CategoryFilter { excluded: BTreeSet::new() }
    }

    pub fn includes(&self, cat: ActivityCategory) -> bool {
        !self.excluded.contains(&cat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategorySimilarity {
    pub cosine: Option<f64>,
    pub pearson: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub iso_code: String,
    /// Every aligned category, excluded ones included.
    pub per_category: BTreeMap<ActivityCategory, CategorySimilarity>,
    pub country_mean_cosine: f64,
    /// `None` when Pearson is undefined for every included category
    /// (e.g. constant stringency over the window).
    pub country_mean_pearson: Option<f64>,
    /// Categories whose cosine or Pearson value was undefined.
    pub undefined: Vec<(ActivityCategory, String)>,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Cosine and Pearson similarity of every category against stringency, and
/// their means over the categories admitted by `filter`.
pub fn country_similarity(
    iso_code: &str,
    pairs: &BTreeMap<ActivityCategory, AlignedPair>,
    filter: &CategoryFilter,
) -> Result<SimilarityScore, MeasureError> {
    let mut per_category = BTreeMap::new();
    let mut undefined = Vec::new();
    for (&cat, pair) in pairs {
        let cosine = cosine_similarity(&pair.stringency, &pair.activity)
            .map_err(|e| undefined.push((cat, format!("cosine: {e}"))))
            .ok();
        let pearson =
            pearson(&pair.stringency, &pair.activity).map_err(|e| undefined.push((cat, format!("pearson: {e}")))).ok();
        per_category.insert(cat, CategorySimilarity { cosine, pearson });
    }
    let included = || per_category.iter().filter(|(c, _)| filter.includes(**c)).map(|(_, s)| s);
    let country_mean_cosine = mean(included().filter_map(|s| s.cosine)).ok_or(MeasureError::NoUsableCategory)?;
    let country_mean_pearson = mean(included().filter_map(|s| s.pearson));
    Ok(SimilarityScore {
        iso_code: iso_code.to_string(),
        per_category,
        country_mean_cosine,
        country_mean_pearson,
        undefined,
    })
}

/// Parameters of the lag analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagOptions {
    /// Correlation at or above which a shift counts as significant.
    pub threshold: f64,
    /// Shifts examined run from `-max_lag` to `+max_lag` days.
    pub max_lag: i32,
    /// Minimum number of overlapping days after shifting.
    pub min_overlap: usize,
}

impl Default for LagOptions {
    fn default() -> Self {
        LagOptions { threshold: 0.5, max_lag: 21, min_overlap: 10 }
    }
}

/// Pearson correlation between stringency shifted forward by `shift` days
/// and activity, over the days where both are defined.
///
/// With `activity[t] = stringency[t - d]`, the correlation peaks at
/// `shift = -d`: a policy change that precedes the response shows up at a
/// negative shift.
pub fn normalized_xcorr(
    stringency: &[f64],
    activity: &[f64],
    shift: i32,
    min_overlap: usize,
) -> Result<f64, MeasureError> {
    check_pair(stringency, activity, 1)?;
    let n = stringency.len();
    let k = shift.unsigned_abs() as usize;
    let overlap = n.saturating_sub(k);
    if overlap < min_overlap.max(3) {
        return Err(MeasureError::OverlapTooShort { shift, overlap, min: min_overlap.max(3) });
    }
    let (s, a) =
        if shift >= 0 { (&stringency[k..], &activity[..overlap]) } else { (&stringency[..overlap], &activity[k..]) };
    pearson_unchecked(s, a)
}

/// Correlation at every shift in `[-max_lag, max_lag]`, `None` where undefined.
pub fn xcorr_profile(stringency: &[f64], activity: &[f64], opts: &LagOptions) -> Vec<(i32, Option<f64>)> {
    (-opts.max_lag..=opts.max_lag)
        .map(|k| (k, normalized_xcorr(stringency, activity, k, opts.min_overlap).ok()))
        .collect()
}

/// Outcome of the thresholded lag count for one series pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LagOutcome {
    Days(i32),
    /// No nonzero shift reached the threshold.
    NoSignificantLag,
}

impl LagOutcome {
    pub fn days(self) -> Option<i32> {
        match self {
            LagOutcome::Days(d) => Some(d),
            LagOutcome::NoSignificantLag => None,
        }
    }
}

/// Number of positive shifts minus number of negative shifts whose
/// correlation reaches `opts.threshold`. Shift zero counts for neither side.
pub fn lag_days(stringency: &[f64], activity: &[f64], opts: &LagOptions) -> Result<LagOutcome, MeasureError> {
    check_pair(stringency, activity, 3)?;
    let (mut pos, mut neg) = (0i32, 0i32);
    for (k, r) in xcorr_profile(stringency, activity, opts) {
        match r {
            Some(r) if r >= opts.threshold && k > 0 => pos += 1,
            Some(r) if r >= opts.threshold && k < 0 => neg += 1,
            _ => {}
        }
    }
    if pos == 0 && neg == 0 {
        Ok(LagOutcome::NoSignificantLag)
    } else {
        Ok(LagOutcome::Days(pos - neg))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagProfile {
    pub iso_code: String,
    pub per_category: BTreeMap<ActivityCategory, LagOutcome>,
    /// Mean over included categories with a significant lag.
    pub country_mean_lag: f64,
    pub threshold: f64,
    pub max_lag: i32,
}

pub fn country_lag(
    iso_code: &str,
    pairs: &BTreeMap<ActivityCategory, AlignedPair>,
    opts: &LagOptions,
    filter: &CategoryFilter,
) -> Result<LagProfile, MeasureError> {
    let mut per_category = BTreeMap::new();
    for (&cat, pair) in pairs {
        per_category.insert(cat, lag_days(&pair.stringency, &pair.activity, opts)?);
    }
    let country_mean_lag =
        mean(per_category.iter().filter(|(c, _)| filter.includes(**c)).filter_map(|(_, o)| o.days().map(f64::from)))
            .ok_or(MeasureError::NoUsableCategory)?;
    Ok(LagProfile {
        iso_code: iso_code.to_string(),
        per_category,
        country_mean_lag,
        threshold: opts.threshold,
        max_lag: opts.max_lag,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubregionVariation {
    pub iso_code: String,
    pub per_category_sd: BTreeMap<ActivityCategory, f64>,
    pub country_mean_sd: f64,
    pub n_subregions: usize,
    /// Set when some category rests on a single subregion pair.
    pub low_confidence: bool,
}

/// Population standard deviation.
fn std_dev(values: &[f64]) -> f64 {
    let m = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Standard deviation of the strictly upper triangle of the
/// subregion-by-subregion cosine matrix, per category, averaged over
/// categories. Subregions with an all-zero series are skipped for that
/// category.
pub fn subregion_variation(iso_code: &str, subregions: &SubregionSeries) -> Result<SubregionVariation, MeasureError> {
    let mut per_category_sd = BTreeMap::new();
    let mut used = BTreeSet::new();
    let mut low_confidence = false;
    for (&cat, regions) in &subregions.series {
        let usable: Vec<(&String, &Vec<f64>)> = regions.iter().filter(|(_, v)| v.iter().any(|x| *x != 0.0)).collect();
        if usable.len() < 2 {
            continue;
        }
        let mut sims = Vec::with_capacity(usable.len() * (usable.len() - 1) / 2);
        for i in 0..usable.len() {
            for j in i + 1..usable.len() {
                sims.push(cosine_similarity(usable[i].1, usable[j].1)?);
            }
        }
        low_confidence |= sims.len() == 1;
        used.extend(usable.iter().map(|(name, _)| (*name).clone()));
        per_category_sd.insert(cat, std_dev(&sims));
    }
    let country_mean_sd = mean(per_category_sd.values().copied())
        .ok_or_else(|| MeasureError::Insufficient("fewer than 2 usable subregions in every category".into()))?;
    Ok(SubregionVariation {
        iso_code: iso_code.to_string(),
        per_category_sd,
        country_mean_sd,
        n_subregions: used.len(),
        low_confidence,
    })
}
