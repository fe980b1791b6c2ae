//! Geography of the responses: distances between country response vectors,
//! great-circle distances between country boundaries, and summaries by
//! continent and by shared border.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::exec::Execution;
use crate::rankstats::{kendall_tau_b, TauResult};
use crate::series::Continent;

/// Mean Earth radius (IUGG), km.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LonLat {
    pub lon: f64,
    pub lat: f64,
}

impl LonLat {
    pub fn new(lon: f64, lat: f64) -> Self {
        LonLat { lon, lat }
    }

    fn unit_vector(self) -> [f64; 3] {
        let (lat, lon) = (self.lat.to_radians(), self.lon.to_radians());
        [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
    }
}

/// Great-circle distance in km by the haversine formula.
pub fn haversine_km(a: LonLat, b: LonLat) -> f64 {
    let dlat = (b.lat - a.lat).to_radians();
    let dlon = (b.lon - a.lon).to_radians();
    let h =
        (dlat / 2.0).sin().powi(2) + a.lat.to_radians().cos() * b.lat.to_radians().cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Polygon {
    pub exterior: Vec<LonLat>,
    pub holes: Vec<Vec<LonLat>>,
}

fn ring_contains(ring: &[LonLat], p: LonLat) -> bool {
    let mut inside = false;
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.lat > p.lat) != (b.lat > p.lat) && p.lon < (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon {
            inside = !inside;
        }
        j = i;
    }
    inside
}

impl Polygon {
    /// Planar (lon/lat) point-in-polygon test.
    pub fn contains(&self, p: LonLat) -> bool {
        ring_contains(&self.exterior, p) && !self.holes.iter().any(|h| ring_contains(h, p))
    }
}

/// Country boundary: polygons plus loose points (e.g. small islands given
/// as coordinates only).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Geometry {
    pub polygons: Vec<Polygon>,
    pub points: Vec<LonLat>,
}

impl Geometry {
    pub fn point(p: LonLat) -> Self {
        Geometry { polygons: vec![], points: vec![p] }
    }

    pub fn vertices(&self) -> Vec<LonLat> {
        let mut v: Vec<LonLat> =
            self.polygons.iter().flat_map(|p| p.exterior.iter().chain(p.holes.iter().flatten())).copied().collect();
        v.extend_from_slice(&self.points);
        v
    }

    pub fn contains(&self, p: LonLat) -> bool {
        self.polygons.iter().any(|poly| poly.contains(p))
    }
}

/// Shortest great-circle distance between the vertex sets of two
/// geometries, or 0 when either contains a vertex of the other.
pub fn min_great_circle_distance(a: &Geometry, b: &Geometry, exec: Execution) -> Result<f64, GeometryError> {
    let va = a.vertices();
    let vb = b.vertices();
    if va.is_empty() {
        return Err(GeometryError::EmptyGeometry("first geometry".into()));
    }
    if vb.is_empty() {
        return Err(GeometryError::EmptyGeometry("second geometry".into()));
    }
    if va.iter().any(|&p| b.contains(p)) || vb.iter().any(|&p| a.contains(p)) {
        return Ok(0.0);
    }
    // nearest pair by chord length, then haversine on that pair
    let ub: Vec<[f64; 3]> = vb.iter().map(|p| p.unit_vector()).collect();
    let nearest = exec.map(&va, |p| {
        let u = p.unit_vector();
        let (best, idx) = ub.iter().enumerate().fold((f64::INFINITY, 0), |(best, bi), (i, w)| {
            let d2 = (u[0] - w[0]).powi(2) + (u[1] - w[1]).powi(2) + (u[2] - w[2]).powi(2);
            if d2 < best {
                (d2, i)
            } else {
                (best, bi)
            }
        });
        (best, idx)
    });
    let (i, &(_, j)) = nearest.iter().enumerate().min_by(|x, y| x.1 .0.total_cmp(&y.1 .0)).expect("non-empty");
    Ok(haversine_km(va[i], vb[j]))
}

/// Labeled symmetric matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    /// Row-major, `n * n`.
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(labels: Vec<String>, data: Vec<f64>) -> Result<Self, GeometryError> {
        let n = labels.len();
        if data.len() != n * n {
            return Err(GeometryError::InvalidMatrix(format!("{} labels but {} entries", n, data.len())));
        }
        if labels.iter().collect::<BTreeSet<_>>().len() != n {
            return Err(GeometryError::InvalidMatrix("duplicate labels".into()));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(GeometryError::InvalidMatrix(format!("nonzero diagonal at {}", labels[i])));
            }
            for j in i + 1..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if !a.is_finite() || a < 0.0 {
                    return Err(GeometryError::InvalidMatrix(format!("bad entry {a} at ({i}, {j})")));
                }
                if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                    return Err(GeometryError::InvalidMatrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(DistanceMatrix { labels, data })
    }

    /// Builds the matrix from a pair function evaluated on the upper
    /// triangle.
    pub fn from_fn<F>(labels: Vec<String>, exec: Execution, f: F) -> Result<Self, GeometryError>
    where
        F: Fn(usize, usize) -> Result<f64, GeometryError> + Sync + Send,
    {
        let n = labels.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let values = exec.map(&pairs, |&(i, j)| f(i, j));
        let mut data = vec![0.0; n * n];
        for (&(i, j), v) in pairs.iter().zip(values) {
            let v = v?;
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
        DistanceMatrix::new(labels, data)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.labels.len() + j]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.labels.len();
        &self.data[i * n..(i + 1) * n]
    }

    /// Entries above the diagonal, row by row.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.len();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| self.get(i, j)).collect()
    }

    /// Same distances with rows and columns in `order`.
    pub fn reordered(&self, order: &[String]) -> Result<Self, GeometryError> {
        let idx = order
            .iter()
            .map(|l| self.index_of(l).ok_or_else(|| GeometryError::LabelMismatch(format!("'{l}' not present"))))
            .collect::<Result<Vec<_>, _>>()?;
        if idx.len() != self.len() {
            return Err(GeometryError::LabelMismatch("different label counts".into()));
        }
        self.select(order, &idx)
    }

    fn select(&self, labels: &[String], idx: &[usize]) -> Result<Self, GeometryError> {
        let n = idx.len();
        let mut data = vec![0.0; n * n];
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                data[a * n + b] = self.get(i, j);
            }
        }
        DistanceMatrix::new(labels.to_vec(), data)
    }

    /// Sub-matrix restricted to `keep`, in the existing order.
    pub fn restricted(&self, keep: &BTreeSet<String>) -> Self {
        let (idx, order): (Vec<usize>, Vec<String>) =
            self.labels.iter().enumerate().filter(|(_, l)| keep.contains(*l)).map(|(i, l)| (i, l.clone())).unzip();
        self.select(&order, &idx).expect("subset of own labels")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ResponseMeasure {
    Cosine,
    Lag,
    SubregionSd,
}

impl ResponseMeasure {
    pub fn slug(self) -> &'static str {
        match self {
            ResponseMeasure::Cosine => "cosine",
            ResponseMeasure::Lag => "lag",
            ResponseMeasure::SubregionSd => "subregion_sd",
        }
    }
}

/// One country's per-category values of a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryResponseVector {
    pub iso_code: String,
    pub measure: ResponseMeasure,
    pub values: Vec<f64>,
}

/// Pairwise Euclidean distances between response vectors.
pub fn response_distance_matrix(
    vectors: &[CountryResponseVector],
    exec: Execution,
) -> Result<DistanceMatrix, GeometryError> {
    if vectors.len() < 2 {
        return Err(GeometryError::TooFew { needed: 2, got: vectors.len() });
    }
    let dim = vectors[0].values.len();
    let measure = vectors[0].measure;
    for v in vectors {
        if v.values.len() != dim || v.measure != measure {
            return Err(GeometryError::DimensionMismatch {
                label: v.iso_code.clone(),
                expected: dim,
                got: v.values.len(),
            });
        }
    }
    let labels = vectors.iter().map(|v| v.iso_code.clone()).collect();
    DistanceMatrix::from_fn(labels, exec, |i, j| Ok(euclidean(&vectors[i].values, &vectors[j].values)))
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Geodesic distance matrix over the countries that have a geometry.
pub fn geo_distance_matrix(
    labels: &[String],
    geometries: &BTreeMap<String, Geometry>,
    exec: Execution,
) -> Result<DistanceMatrix, GeometryError> {
    let geoms = labels
        .iter()
        .map(|l| geometries.get(l).ok_or_else(|| GeometryError::EmptyGeometry(l.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    // pairs run in parallel, so each vertex scan stays sequential
    DistanceMatrix::from_fn(labels.to_vec(), exec, |i, j| {
        min_great_circle_distance(geoms[i], geoms[j], Execution::Sequential).map_err(|e| match e {
            GeometryError::EmptyGeometry(_) => GeometryError::EmptyGeometry(format!("{} or {}", labels[i], labels[j])),
            other => other,
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub mean: f64,
    pub median: f64,
    pub n_pairs: usize,
}

impl PairStats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
        Some(PairStats { mean: v.iter().sum::<f64>() / n as f64, median, n_pairs: n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinentStats {
    pub continent: Continent,
    pub n_countries: usize,
    pub stats: PairStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinentSummary {
    pub per_continent: Vec<ContinentStats>,
    /// Continents with fewer than two countries, and their country count.
    pub omitted: Vec<(Continent, usize)>,
    pub same_continent: Option<PairStats>,
    pub different_continent: Option<PairStats>,
}

/// Mean and median distance within each continent, and pooled over all
/// same-continent and all cross-continent pairs.
pub fn continent_summary(
    dist: &DistanceMatrix,
    continents: &BTreeMap<String, Continent>,
) -> Result<ContinentSummary, GeometryError> {
    let assigned = dist
        .labels()
        .iter()
        .map(|l| {
            continents.get(l).copied().ok_or_else(|| GeometryError::LabelMismatch(format!("no continent for '{l}'")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut within: BTreeMap<Continent, Vec<f64>> = BTreeMap::new();
    let mut members: BTreeMap<Continent, usize> = BTreeMap::new();
    let mut across = Vec::new();
    for &c in &assigned {
        *members.entry(c).or_default() += 1;
    }
    let n = dist.len();
    for i in 0..n {
        for j in i + 1..n {
            if assigned[i] == assigned[j] {
                within.entry(assigned[i]).or_default().push(dist.get(i, j));
            } else {
                across.push(dist.get(i, j));
            }
        }
    }
    let pooled: Vec<f64> = within.values().flatten().copied().collect();
    let mut summary = ContinentSummary {
        per_continent: Vec::new(),
        omitted: Vec::new(),
        same_continent: PairStats::of(&pooled),
        different_continent: PairStats::of(&across),
    };
    for (c, count) in members {
        match within.get(&c).and_then(|v| PairStats::of(v)) {
            Some(stats) => summary.per_continent.push(ContinentStats { continent: c, n_countries: count, stats }),
            None => summary.omitted.push((c, count)),
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorderSummary {
    pub border: Option<PairStats>,
    pub non_border: Option<PairStats>,
}

/// Distances split by whether the pair shares a land border.
pub fn border_summary(dist: &DistanceMatrix, neighbors: &BTreeMap<String, BTreeSet<String>>) -> BorderSummary {
    let mut border = Vec::new();
    let mut other = Vec::new();
    let labels = dist.labels();
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            let adjacent = neighbors.get(&labels[i]).is_some_and(|s| s.contains(&labels[j]))
                || neighbors.get(&labels[j]).is_some_and(|s| s.contains(&labels[i]));
            if adjacent {
                border.push(dist.get(i, j));
            } else {
                other.push(dist.get(i, j));
            }
        }
    }
    BorderSummary { border: PairStats::of(&border), non_border: PairStats::of(&other) }
}

/// Tau-b between the upper triangles of two matrices over the same labels.
pub fn geography_concordance(dist: &DistanceMatrix, geo: &DistanceMatrix) -> Result<TauResult, GeometryError> {
    let a: BTreeSet<_> = dist.labels().iter().collect();
    let b: BTreeSet<_> = geo.labels().iter().collect();
    if a != b {
        let only_a: Vec<_> = a.difference(&b).map(|s| s.as_str()).collect();
        let only_b: Vec<_> = b.difference(&a).map(|s| s.as_str()).collect();
        return Err(GeometryError::LabelMismatch(format!(
            "only in response matrix: {only_a:?}; only in geographic matrix: {only_b:?}"
        )));
    }
    let geo = geo.reordered(dist.labels())?;
    Ok(kendall_tau_b(&dist.upper_triangle(), &geo.upper_triangle())?)
}

/// Taus obtained after randomly relabeling `geo`, one per permutation.
/// Permutation `i` uses a generator seeded with `seed + i`.
pub fn permutation_null(
    dist: &DistanceMatrix,
    geo: &DistanceMatrix,
    permutations: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<f64>, GeometryError> {
    let geo = geo.reordered(dist.labels())?;
    let upper = dist.upper_triangle();
    let n = geo.len();
    exec.map_range(permutations, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let shuffled: Vec<f64> =
            (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).map(|(a, b)| geo.get(perm[a], perm[b])).collect();
        Ok(kendall_tau_b(&upper, &shuffled)?.tau)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quarter_meridian() {
        let d = haversine_km(LonLat::new(0.0, 0.0), LonLat::new(0.0, 90.0));
        // pi/2 * R
        assert_abs_diff_eq!(d, std::f64::consts::FRAC_PI_2 * EARTH_RADIUS_KM, epsilon = 1e-6);
        assert_abs_diff_eq!(d, 10_007.5, epsilon = 0.5);
        let g = min_great_circle_distance(
            &Geometry::point(LonLat::new(0.0, 0.0)),
            &Geometry::point(LonLat::new(0.0, 90.0)),
            Execution::Parallel,
        )
        .unwrap();
        assert_abs_diff_eq!(g, d, epsilon = 1e-9);
    }

    #[test]
    fn antipodes_are_half_circumference() {
        let d = haversine_km(LonLat::new(10.0, 20.0), LonLat::new(-170.0, -20.0));
        assert_abs_diff_eq!(d, std::f64::consts::PI * EARTH_RADIUS_KM, epsilon = 1e-6);
    }

    fn square(x0: f64, y0: f64, s: f64) -> Geometry {
        let ring = vec![
            LonLat::new(x0, y0),
            LonLat::new(x0 + s, y0),
            LonLat::new(x0 + s, y0 + s),
            LonLat::new(x0, y0 + s),
            LonLat::new(x0, y0),
        ];
        Geometry { polygons: vec![Polygon { exterior: ring, holes: vec![] }], points: vec![] }
    }

    #[test]
    fn polygon_distances() {
        let a = square(0.0, 0.0, 1.0);
        assert_eq!(min_great_circle_distance(&a, &a, Execution::Sequential).unwrap(), 0.0);
        // shares an edge
        let b = square(1.0, 0.0, 1.0);
        assert_eq!(min_great_circle_distance(&a, &b, Execution::Sequential).unwrap(), 0.0);
        // one contains a vertex of the other
        let inner = Geometry::point(LonLat::new(0.5, 0.5));
        assert_eq!(min_great_circle_distance(&a, &inner, Execution::Sequential).unwrap(), 0.0);
        let far = square(3.0, 0.0, 1.0);
        let d = min_great_circle_distance(&a, &far, Execution::Sequential).unwrap();
        // nearest pair is on the upper edge, where meridians converge
        assert_abs_diff_eq!(d, haversine_km(LonLat::new(1.0, 1.0), LonLat::new(3.0, 1.0)), epsilon = 1e-9);
        assert_eq!(d, min_great_circle_distance(&far, &a, Execution::Parallel).unwrap());
        assert!(min_great_circle_distance(&a, &Geometry::default(), Execution::Sequential).is_err());
    }

    fn vec_of(code: &str, v: &[f64]) -> CountryResponseVector {
        CountryResponseVector { iso_code: code.into(), measure: ResponseMeasure::Cosine, values: v.to_vec() }
    }

    #[test]
    fn euclidean_response_distances() {
        let vs = [vec_of("A", &[0.0; 6]), vec_of("B", &[3.0, 4.0, 0.0, 0.0, 0.0, 0.0]), vec_of("C", &[0.0; 6])];
        let d = response_distance_matrix(&vs, Execution::Parallel).unwrap();
        assert_eq!(d.get(0, 1), 5.0);
        assert_eq!(d.get(1, 0), 5.0);
        assert_eq!(d.get(0, 2), 0.0);
        let bad = [vec_of("A", &[0.0; 6]), vec_of("B", &[0.0; 5])];
        assert!(matches!(
            response_distance_matrix(&bad, Execution::Sequential),
            Err(GeometryError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn matrix_validation() {
        let l = vec!["A".to_string(), "B".to_string()];
        assert!(DistanceMatrix::new(l.clone(), vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(l.clone(), vec![1.0, 1.0, 1.0, 0.0]).is_err());
        assert!(DistanceMatrix::new(l.clone(), vec![0.0, -1.0, -1.0, 0.0]).is_err());
        let m = DistanceMatrix::new(l, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let r = m.reordered(&["B".into(), "A".into()]).unwrap();
        assert_eq!(r.labels()[0], "B");
    }

    fn line_matrix(labels: &[&str], xs: &[f64]) -> DistanceMatrix {
        let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        DistanceMatrix::from_fn(labels, Execution::Sequential, |i, j| Ok((xs[i] - xs[j]).abs())).unwrap()
    }

    #[test]
    fn restriction_keeps_order() {
        let d = line_matrix(&["A", "B", "C", "D"], &[0.0, 1.0, 3.0, 10.0]);
        let r = d.restricted(&BTreeSet::from(["D".to_string(), "B".to_string()]));
        assert_eq!(r.labels(), ["B", "D"]);
        assert_eq!(r.get(0, 1), 9.0);
    }

    #[test]
    fn continent_rows() {
        let d = line_matrix(&["A", "B", "C", "D"], &[0.0, 1.0, 3.0, 10.0]);
        let cont = BTreeMap::from([
            ("A".to_string(), Continent::Europe),
            ("B".to_string(), Continent::Europe),
            ("C".to_string(), Continent::Europe),
            ("D".to_string(), Continent::Asia),
        ]);
        let s = continent_summary(&d, &cont).unwrap();
        assert_eq!(s.per_continent.len(), 1);
        let eu = &s.per_continent[0];
        assert_abs_diff_eq!(eu.stats.mean, (1.0 + 3.0 + 2.0) / 3.0);
        assert_eq!(eu.stats.median, 2.0);
        assert_eq!(s.omitted, vec![(Continent::Asia, 1)]);
        assert_eq!(s.different_continent.unwrap().n_pairs, 3);

        let one = BTreeMap::from_iter(d.labels().iter().map(|l| (l.clone(), Continent::Africa)));
        let s = continent_summary(&d, &one).unwrap();
        assert!(s.different_continent.is_none());
        assert_eq!(s.same_continent.unwrap().n_pairs, 6);

        let mut missing = cont.clone();
        missing.remove("D");
        assert!(continent_summary(&d, &missing).is_err());
    }

    #[test]
    fn border_split() {
        let d = line_matrix(&["A", "B", "C"], &[0.0, 1.0, 5.0]);
        let nb = BTreeMap::from([("A".to_string(), BTreeSet::from(["B".to_string()]))]);
        let s = border_summary(&d, &nb);
        assert_eq!(s.border.unwrap().mean, 1.0);
        assert_eq!(s.non_border.unwrap().mean, 4.5);
    }

    #[test]
    fn concordance_with_itself_and_shuffles() {
        let xs: Vec<f64> = (0..12).map(|i| ((i * 7) % 12) as f64 + 0.1 * i as f64).collect();
        let labels: Vec<String> = (0..12).map(|i| format!("C{i:02}")).collect();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let d = line_matrix(&refs, &xs);
        assert_eq!(geography_concordance(&d, &d).unwrap().tau, 1.0);
        let rev: Vec<String> = labels.iter().rev().cloned().collect();
        assert_eq!(geography_concordance(&d, &d.reordered(&rev).unwrap()).unwrap().tau, 1.0);

        let null = permutation_null(&d, &d, 200, 7, Execution::Parallel).unwrap();
        let mean = null.iter().sum::<f64>() / null.len() as f64;
        assert!(mean.abs() < 0.05, "null mean {mean}");
        assert_eq!(null, permutation_null(&d, &d, 200, 7, Execution::Sequential).unwrap());

        let other = line_matrix(&["X", "Y", "Z"], &[0.0, 1.0, 2.0]);
        assert!(matches!(geography_concordance(&d, &other), Err(GeometryError::LabelMismatch(_))));
    }
}
