//! Seeded synthetic datasets in the upstream file formats, for tests,
//! benchmarks and demonstrations.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::json;

use crate::codes;
use crate::error::IngestError;
use crate::ingest::{write_mobility, write_stringency, DataPaths, StringencyRecord};
use crate::series::{ActivityCategory, AnalysisWindow, Continent, CountryRecord, DailySeries};

/// Logistic ramp from 0 to `height`, centred on day `onset`.
pub fn stringency_ramp(days: usize, onset: f64, width: f64, height: f64) -> Vec<f64> {
    (0..days).map(|t| height / (1.0 + (-(t as f64 - onset) / width).exp())).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub countries: usize,
    pub seed: u64,
    /// Noise standard deviation on activity, in percentage points.
    pub noise: f64,
    /// Probability that any single activity cell is blank.
    pub blank_rate: f64,
    pub max_subregions: usize,
    pub window: AnalysisWindow,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            countries: 24,
            seed: 2020,
            noise: 3.0,
            blank_rate: 0.01,
            max_subregions: 5,
            window: AnalysisWindow::default(),
        }
    }
}

/// Generated files, as text.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFiles {
    pub mobility: String,
    pub stringency: String,
    pub continents: String,
    pub population: String,
    pub neighbors: String,
    pub boundaries: String,
}

impl SyntheticFiles {
    /// Writes every file into `dir` under fixed names.
    pub fn write_to(&self, dir: &Path) -> Result<DataPaths, IngestError> {
        std::fs::create_dir_all(dir).map_err(|source| IngestError::Io { path: dir.to_path_buf(), source })?;
        let put = |name: &str, text: &str| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|source| IngestError::Io { path: path.clone(), source })?;
            Ok::<_, IngestError>(path)
        };
        Ok(DataPaths {
            mobility: put("mobility.csv", &self.mobility)?,
            stringency: put("stringency.csv", &self.stringency)?,
            continents: Some(put("continents.csv", &self.continents)?),
            population: Some(put("population.csv", &self.population)?),
            neighbors: Some(put("neighbors.csv", &self.neighbors)?),
            boundaries: Some(put("boundaries.geojson", &self.boundaries)?),
        })
    }
}

const CELL_DEG: f64 = 4.0;

fn grid_columns(n: usize) -> usize {
    (n as f64).sqrt().ceil().max(1.0) as usize
}

/// A deterministic synthetic world: countries on a lon/lat grid of squares
/// (edge-adjacent squares are neighbors), logistic stringency ramps, and
/// activity that follows stringency after a per-category delay.
pub fn generate(config: &SyntheticConfig) -> SyntheticFiles {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let step = (codes::ALPHA2_TO_ALPHA3.len() / config.countries.max(1)).max(1);
    let chosen: Vec<(&str, &str)> =
        codes::ALPHA2_TO_ALPHA3.iter().step_by(step).take(config.countries).copied().collect();

    let lead_in = 5i64;
    let start = config.window.start() - Duration::days(lead_in);
    let days = config.window.len_days() + 2 * lead_in as usize;
    let noise = Normal::new(0.0, config.noise.max(1e-9)).expect("finite sd");
    let cols = grid_columns(chosen.len());

    let mut mobility = BTreeMap::new();
    let mut stringency = BTreeMap::new();
    let mut continents = String::from("iso_code,continent\n");
    let mut population = String::from("iso_code,population,area_km2\n");
    let mut features = Vec::new();
    let mut positions = BTreeMap::new();

    for (i, &(a2, a3)) in chosen.iter().enumerate() {
        let onset = rng.random_range(18.0..40.0);
        let width = rng.random_range(1.0..4.0);
        let height = rng.random_range(45.0..95.0);
        let si: Vec<f64> =
            stringency_ramp(days, onset, width, height).iter().map(|v| (v * 100.0).round() / 100.0).collect();

        let mut rec = CountryRecord::new(a2, format!("Country {a2}"));
        let drop_parks = rng.random_bool(0.1);
        let mut national_curve = BTreeMap::new();
        for cat in ActivityCategory::ALL {
            let delay = rng.random_range(0.0..8.0);
            let amp = match cat {
                ActivityCategory::Residential => rng.random_range(10.0..30.0),
                ActivityCategory::Parks => rng.random_range(-60.0..10.0),
                _ => rng.random_range(-85.0..-25.0),
            };
            let curve: Vec<f64> =
                (0..days).map(|t| amp / (1.0 + (-(t as f64 - onset - delay) / width).exp())).collect();
            national_curve.insert(cat, curve);
        }
        for (&cat, curve) in &national_curve {
            if cat == ActivityCategory::Parks && drop_parks {
                continue;
            }
            let values = noisy(curve, &noise, config.blank_rate, &mut rng);
            rec.national.insert(cat, DailySeries::new(start, values));
        }
        let n_sub = if config.max_subregions >= 2 && rng.random_bool(0.8) {
            rng.random_range(2..=config.max_subregions)
        } else {
            0
        };
        for s in 0..n_sub {
            let shift = rng.random_range(-3i64..=3);
            let scale = rng.random_range(0.6..1.3);
            let mut series = BTreeMap::new();
            for (&cat, curve) in &national_curve {
                if cat == ActivityCategory::Parks && drop_parks {
                    continue;
                }
                let shifted: Vec<f64> =
                    (0..days as i64).map(|t| scale * curve[(t - shift).clamp(0, days as i64 - 1) as usize]).collect();
                series.insert(cat, DailySeries::new(start, noisy(&shifted, &noise, 0.0, &mut rng)));
            }
            rec.subregions.insert(format!("Region {}", s + 1), series);
        }
        mobility.insert(a2.to_string(), rec);

        let rate = rng.random_range(0.08..0.25);
        let seed_day = onset - rng.random_range(5.0..15.0);
        let cases: Vec<f64> = (0..days)
            .map(|t| if (t as f64) < seed_day { 0.0 } else { (3.0 * (rate * (t as f64 - seed_day)).exp()).floor() })
            .collect();
        let deaths: Vec<f64> = (0..days).map(|t| (cases[t.saturating_sub(7)] * 0.03).floor()).collect();
        let dense = |v: &[f64]| DailySeries::new(start, v.iter().copied().map(Some).collect());
        stringency.insert(
            a3.to_string(),
            StringencyRecord {
                name: format!("Country {a2}"),
                stringency: dense(&si),
                cases: dense(&cases),
                deaths: dense(&deaths),
            },
        );

        let (col, row) = (i % cols, i / cols);
        positions.insert((col, row), a2);
        let continent = Continent::ALL[row % Continent::ALL.len()];
        continents.push_str(&format!("{a2},{}\n", continent.name()));
        let pop = rng.random_range(1_000_000u64..150_000_000);
        let area = rng.random_range(10_000.0f64..2_000_000.0).round();
        population.push_str(&format!("{a2},{pop},{area}\n"));
        let (x, y) = (-60.0 + col as f64 * CELL_DEG, -30.0 + row as f64 * CELL_DEG);
        features.push(json!({
            "type": "Feature",
            "properties": { "iso_code": a2 },
            "geometry": {
                "type": "Polygon",
                "coordinates": [[[x, y], [x + CELL_DEG, y], [x + CELL_DEG, y + CELL_DEG], [x, y + CELL_DEG], [x, y]]],
            },
        }));
    }

    let mut neighbors = String::from("iso_code,neighbor\n");
    let mut seen = BTreeSet::new();
    for (&(col, row), &a) in &positions {
        for other in [(col + 1, row), (col, row + 1)] {
            if let Some(&b) = positions.get(&other) {
                if seen.insert((a, b)) {
                    neighbors.push_str(&format!("{a},{b}\n"));
                }
            }
        }
    }

    let mut mob_buf = Vec::new();
    write_mobility(mobility.values(), &mut mob_buf).expect("in-memory write");
    let mut si_buf = Vec::new();
    write_stringency(&stringency, &mut si_buf).expect("in-memory write");
    SyntheticFiles {
        mobility: String::from_utf8(mob_buf).expect("utf-8"),
        stringency: String::from_utf8(si_buf).expect("utf-8"),
        continents,
        population,
        neighbors,
        boundaries: serde_json::to_string_pretty(&json!({ "type": "FeatureCollection", "features": features }))
            .expect("serializable"),
    }
}

fn noisy(curve: &[f64], noise: &Normal<f64>, blank_rate: f64, rng: &mut ChaCha8Rng) -> Vec<Option<f64>> {
    let n = curve.len();
    curve
        .iter()
        .enumerate()
        .map(|(t, v)| {
            let x = (v + noise.sample(rng)).round().max(-100.0);
            // never blank the first or last day, so gaps stay interior
            let blank = t > 0 && t + 1 < n && blank_rate > 0.0 && rng.random_bool(blank_rate);
            (!blank).then_some(x)
        })
        .collect()
}

/// First date of the generated series.
pub fn series_start(config: &SyntheticConfig) -> NaiveDate {
    config.window.start() - Duration::days(5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_mobility, parse_stringency, Dataset};

    #[test]
    fn deterministic_and_parseable() {
        let cfg = SyntheticConfig { countries: 9, ..Default::default() };
        let a = generate(&cfg);
        assert_eq!(a, generate(&cfg));
        assert_ne!(a, generate(&SyntheticConfig { seed: 1, ..cfg.clone() }));
        let mob = parse_mobility(a.mobility.as_bytes()).unwrap();
        let si = parse_stringency(a.stringency.as_bytes()).unwrap();
        assert!(mob.warnings.is_empty(), "{:?}", mob.warnings);
        let ds = Dataset::assemble(mob, si);
        assert_eq!(ds.countries.len(), 9);
        assert!(ds.unmatched_mobility.is_empty());
        let first = ds.countries.values().next().unwrap();
        assert_eq!(first.national.values().next().unwrap().start, series_start(&cfg));
    }

    #[test]
    fn ramp_shape() {
        let r = stringency_ramp(41, 20.0, 2.0, 80.0);
        assert!((r[20] - 40.0).abs() < 1e-12);
        assert!(r.windows(2).all(|w| w[1] > w[0]));
    }
}
