//! Country rankings and tie-aware Kendall rank correlation.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::MeasureError;

/// Largest sample for which the no-ties null distribution is enumerated.
pub const EXACT_P_MAX_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PValueMethod {
    /// Exact permutation distribution (no ties, n <= 10).
    Exact,
    /// Normal approximation with tie-corrected variance.
    Normal,
}

impl fmt::Display for PValueMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PValueMethod::Exact => "exact",
            PValueMethod::Normal => "normal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauResult {
    pub tau: f64,
    /// Two-sided.
    pub p_value: f64,
    pub n: usize,
    pub concordant: u64,
    pub discordant: u64,
    /// Pairs tied in x (including those tied in both).
    pub ties_x: u64,
    /// Pairs tied in y (including those tied in both).
    pub ties_y: u64,
    pub ties_xy: u64,
    pub p_method: PValueMethod,
}

fn pairs(t: u64) -> u64 {
    t * t.saturating_sub(1) / 2
}

/// Sizes of runs of equal values in a sorted slice.
fn tie_groups<T: PartialEq>(sorted: &[T]) -> Vec<u64> {
    sorted.chunk_by(|a, b| a == b).map(|g| g.len() as u64).filter(|&t| t > 1).collect()
}

/// Sorts `v` and returns the number of strictly inverted pairs.
fn merge_count(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid]) + merge_count(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            merged.push(v[j]);
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    swaps
}

/// Kendall's tau-b in O(n log n), with a two-sided p-value.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<TauResult, MeasureError> {
    if x.len() != y.len() {
        return Err(MeasureError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(MeasureError::TooShort { needed: 3, got: n });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(MeasureError::NonFinite);
    }
    // -0.0 and 0.0 must tie under the total order used for sorting
    let x: Vec<f64> = x.iter().map(|v| v + 0.0).collect();
    let y: Vec<f64> = y.iter().map(|v| v + 0.0).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let xs: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let xy: Vec<(f64, f64)> = idx.iter().map(|&i| (x[i], y[i])).collect();
    let x_groups = tie_groups(&xs);
    let ties_x: u64 = x_groups.iter().map(|&t| pairs(t)).sum();
    let ties_xy: u64 = tie_groups(&xy).iter().map(|&t| pairs(t)).sum();

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let discordant = merge_count(&mut ys);
    let y_groups = tie_groups(&ys);
    let ties_y: u64 = y_groups.iter().map(|&t| pairs(t)).sum();

    let n0 = pairs(n as u64);
    if ties_x == n0 || ties_y == n0 {
        return Err(MeasureError::AllTied);
    }
    let concordant = n0 + ties_xy - ties_x - ties_y - discordant;
    let s = concordant as f64 - discordant as f64;
    let tau = (s / (((n0 - ties_x) as f64) * ((n0 - ties_y) as f64)).sqrt()).clamp(-1.0, 1.0);

    let no_ties = x_groups.is_empty() && y_groups.is_empty();
    let (p_value, p_method) = if no_ties && n <= EXACT_P_MAX_N {
        (exact_p_no_ties(n, discordant), PValueMethod::Exact)
    } else {
        (normal_p(n, s, &x_groups, &y_groups), PValueMethod::Normal)
    };
    Ok(TauResult { tau, p_value, n, concordant, discordant, ties_x, ties_y, ties_xy, p_method })
}

/// Two-sided p from the tie-corrected variance of S = C - D.
fn normal_p(n: usize, s: f64, x_groups: &[u64], y_groups: &[u64]) -> f64 {
    let nf = n as f64;
    let sum = |g: &[u64], f: fn(f64) -> f64| g.iter().map(|&t| f(t as f64)).sum::<f64>();
    let v0 = nf * (nf - 1.0) * (2.0 * nf + 5.0);
    let vt = sum(x_groups, |t| t * (t - 1.0) * (2.0 * t + 5.0));
    let vu = sum(y_groups, |t| t * (t - 1.0) * (2.0 * t + 5.0));
    let v1 = sum(x_groups, |t| t * (t - 1.0)) * sum(y_groups, |t| t * (t - 1.0));
    let v2 = sum(x_groups, |t| t * (t - 1.0) * (t - 2.0)) * sum(y_groups, |t| t * (t - 1.0) * (t - 2.0));
    let var = (v0 - vt - vu) / 18.0 + v1 / (2.0 * nf * (nf - 1.0)) + v2 / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
    if var <= 0.0 {
        return 1.0;
    }
    let z = s.abs() / var.sqrt();
    let normal = Normal::standard();
    (2.0 * (1.0 - normal.cdf(z))).clamp(0.0, 1.0)
}

/// Counts of permutations of `n` items by number of inversions.
fn inversion_counts(n: usize) -> Vec<f64> {
    let mut dist = vec![1.0];
    for m in 2..=n {
        let mut next = vec![0.0; dist.len() + m - 1];
        for (k, &c) in dist.iter().enumerate() {
            for slot in next.iter_mut().skip(k).take(m) {
                *slot += c;
            }
        }
        dist = next;
    }
    dist
}

fn exact_p_no_ties(n: usize, discordant: u64) -> f64 {
    let dist = inversion_counts(n);
    let n0 = pairs(n as u64) as i64;
    let s_obs = (n0 - 2 * discordant as i64).abs();
    let total: f64 = dist.iter().sum();
    let tail: f64 = dist.iter().enumerate().filter(|(k, _)| (n0 - 2 * *k as i64).abs() >= s_obs).map(|(_, c)| c).sum();
    (tail / total).clamp(0.0, 1.0)
}

/// Per-country values of one measure.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasureTable {
    pub name: String,
    pub values: BTreeMap<String, f64>,
}

impl MeasureTable {
    pub fn new(name: impl Into<String>) -> Self {
        MeasureTable { name: name.into(), values: BTreeMap::new() }
    }

    pub fn from_values(name: impl Into<String>, values: impl IntoIterator<Item = (String, f64)>) -> Self {
        MeasureTable { name: name.into(), values: values.into_iter().collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Which measure a ranking orders by, and in which direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankKey {
    /// Highest first.
    MeanCosine,
    /// Highest first.
    MeanPearson,
    /// Smallest magnitude first.
    MeanLag,
    /// Highest first.
    MeanSd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCountry {
    /// 1-based.
    pub rank: usize,
    pub iso_code: String,
    pub value: f64,
}

/// Orders countries by `key`; equal values fall back to code order.
pub fn rank_countries(table: &MeasureTable, key: RankKey) -> Vec<RankedCountry> {
    let mut rows: Vec<(&String, f64)> = table.values.iter().map(|(k, v)| (k, *v)).collect();
    rows.sort_by(|(ka, a), (kb, b)| {
        let primary = match key {
            RankKey::MeanCosine | RankKey::MeanPearson | RankKey::MeanSd => b.total_cmp(a),
            RankKey::MeanLag => a.abs().total_cmp(&b.abs()),
        };
        primary.then_with(|| ka.cmp(kb))
    });
    rows.into_iter()
        .enumerate()
        .map(|(i, (k, v))| RankedCountry { rank: i + 1, iso_code: k.clone(), value: v })
        .collect()
}

/// Tau over the countries present in both tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concordance {
    pub tau: TauResult,
    /// Codes only in the first table.
    pub dropped_a: Vec<String>,
    /// Codes only in the second table.
    pub dropped_b: Vec<String>,
}

/// Inner-joins two tables on country code and returns the tau-b of the
/// joined values.
pub fn concordance(a: &MeasureTable, b: &MeasureTable) -> Result<Concordance, MeasureError> {
    let (x, y) = joined_values(a, b);
    if x.len() < 3 {
        return Err(MeasureError::Insufficient(format!(
            "{} and {} share {} countries, need 3",
            a.name,
            b.name,
            x.len()
        )));
    }
    Ok(Concordance {
        tau: kendall_tau_b(&x, &y)?,
        dropped_a: a.values.keys().filter(|k| !b.values.contains_key(*k)).cloned().collect(),
        dropped_b: b.values.keys().filter(|k| !a.values.contains_key(*k)).cloned().collect(),
    })
}

pub(crate) fn joined_values(a: &MeasureTable, b: &MeasureTable) -> (Vec<f64>, Vec<f64>) {
    a.values.iter().filter_map(|(k, va)| b.values.get(k).map(|vb| (*va, *vb))).unzip()
}

/// Significance marker at the 0.1 / 0.05 / 0.01 levels.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn heavy_shared_ties() {
        // ties in x and y together outnumber all pairs
        let x = [0.0, 0.0, 0.0, 0.0, 1.0];
        let r = kendall_tau_b(&x, &x).unwrap();
        assert_eq!((r.concordant, r.discordant, r.ties_xy), (4, 0, 6));
        assert_eq!(r.tau, 1.0);
    }

    #[test]
    fn perfect_orderings() {
        let r = kendall_tau_b(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.tau, 1.0);
        assert_eq!(r.concordant, 3);
        let r = kendall_tau_b(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(r.tau, -1.0);
        assert_eq!(r.discordant, 3);
    }

    #[test]
    fn tied_example_matches_pair_count() {
        // pairs: C = 5, D = 0, one x-tie: 5 / sqrt(5 * 6)
        let r = kendall_tau_b(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!((r.concordant, r.discordant, r.ties_x, r.ties_y), (5, 0, 1, 0));
        assert_abs_diff_eq!(r.tau, 5.0 / 30f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(kendall_tau_b(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(MeasureError::AllTied));
        assert!(matches!(kendall_tau_b(&[1.0, 2.0], &[1.0, 2.0]), Err(MeasureError::TooShort { .. })));
        assert_eq!(kendall_tau_b(&[1.0, f64::NAN, 2.0], &[1.0, 2.0, 3.0]), Err(MeasureError::NonFinite));
    }

    #[test]
    fn normal_p_with_ties_matches_reference() {
        // scipy.stats.kendalltau(method="asymptotic")
        let x = [1.0, 2.0, 2.0, 4.0, 5.0, 5.0, 5.0, 8.0, 9.0, 10.0, 11.0, 12.0];
        let y = [2.0, 1.0, 3.0, 3.0, 6.0, 5.0, 7.0, 7.0, 10.0, 9.0, 12.0, 11.0];
        let r = kendall_tau_b(&x, &y).unwrap();
        assert_eq!(r.p_method, PValueMethod::Normal);
        assert_abs_diff_eq!(r.tau, 0.8572508572512859, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_value, 0.0001690650861997645, epsilon = 1e-9);
    }

    #[test]
    fn exact_p_matches_reference() {
        // scipy.stats.kendalltau(method="exact")
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let y = [2.0, 1.0, 4.0, 3.0, 7.0, 5.0, 6.0];
        let r = kendall_tau_b(&x, &y).unwrap();
        assert_eq!(r.p_method, PValueMethod::Exact);
        assert_abs_diff_eq!(r.tau, 0.6190476190476191, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_value, 0.06904761904761905, epsilon = 1e-12);
    }

    fn permutations(items: &mut Vec<f64>, k: usize, out: &mut Vec<Vec<f64>>) {
        if k == items.len() {
            out.push(items.clone());
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permutations(items, k + 1, out);
            items.swap(k, i);
        }
    }

    #[test]
    fn exact_p_matches_enumeration() {
        let x: Vec<f64> = (0..6).map(f64::from).collect();
        let mut all = Vec::new();
        permutations(&mut x.clone(), 0, &mut all);
        let s_of = |y: &[f64]| {
            let r = kendall_tau_b(&x, y).unwrap();
            r.concordant as i64 - r.discordant as i64
        };
        for y in all.iter().step_by(37) {
            let s = s_of(y).abs();
            let tail = all.iter().filter(|p| s_of(p).abs() >= s).count();
            let expected = tail as f64 / all.len() as f64;
            assert_abs_diff_eq!(kendall_tau_b(&x, y).unwrap().p_value, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn stars_tiers() {
        assert_eq!(stars(0.005), "***");
        assert_eq!(stars(0.03), "**");
        assert_eq!(stars(0.07), "*");
        assert_eq!(stars(0.5), "");
    }

    fn table(name: &str, rows: &[(&str, f64)]) -> MeasureTable {
        MeasureTable::from_values(name, rows.iter().map(|(k, v)| (k.to_string(), *v)))
    }

    #[test]
    fn ranking_directions_and_ties() {
        let t = table("cos", &[("KR", 0.2), ("NZ", 0.99), ("FR", 0.9), ("DE", 0.9)]);
        let r = rank_countries(&t, RankKey::MeanCosine);
        let codes: Vec<_> = r.iter().map(|c| c.iso_code.as_str()).collect();
        assert_eq!(codes, ["NZ", "DE", "FR", "KR"]);
        assert_eq!(r.last().unwrap().rank, 4);

        let lag = table("lag", &[("ZA", -8.5), ("EG", 6.0), ("NZ", -1.0)]);
        let codes: Vec<_> = rank_countries(&lag, RankKey::MeanLag).into_iter().map(|c| c.iso_code).collect();
        assert_eq!(codes, ["NZ", "EG", "ZA"]);

        let single = table("x", &[("OM", 0.5)]);
        assert_eq!(rank_countries(&single, RankKey::MeanSd).len(), 1);
    }

    #[test]
    fn concordance_inner_join() {
        let a = table("a", &[("A", 1.0), ("B", 2.0), ("C", 3.0), ("D", 4.0)]);
        let b = table("b", &[("B", 20.0), ("C", 30.0), ("D", 40.0), ("E", 5.0)]);
        let c = concordance(&a, &b).unwrap();
        assert_eq!(c.tau.n, 3);
        assert_eq!(c.tau.tau, 1.0);
        assert_eq!(c.dropped_a, vec!["A"]);
        assert_eq!(c.dropped_b, vec!["E"]);
        assert_eq!(concordance(&a, &a).unwrap().tau.tau, 1.0);

        let tiny = table("t", &[("A", 1.0), ("Z", 2.0)]);
        assert!(matches!(concordance(&a, &tiny), Err(MeasureError::Insufficient(_))));
    }
}
