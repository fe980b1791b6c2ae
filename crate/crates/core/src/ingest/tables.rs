//! Auxiliary per-country tables. Codes may be given in either ISO form and
//! are harmonized to the two-letter code.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde_json::Value;

use super::IngestWarning;
use crate::codes;
use crate::error::IngestError;
use crate::series::Continent;
use crate::spatial::{Geometry, LonLat, Polygon};

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(r)
}

fn harmonized(code: &str, context: &str, row: usize, warnings: &mut Vec<IngestWarning>) -> Option<String> {
    let out = codes::harmonize(code).map(str::to_string);
    if out.is_none() {
        warnings.push(IngestWarning::new(row, format!("{context}: unknown country code '{code}'")));
    }
    out
}

/// `iso_code,continent`
pub fn parse_continents<R: Read>(r: R) -> Result<(BTreeMap<String, Continent>, Vec<IngestWarning>), IngestError> {
    let context = "continent table";
    let mut out = BTreeMap::new();
    let mut warnings = Vec::new();
    for (idx, row) in reader(r).records().enumerate() {
        let line = idx + 2;
        let row = row.map_err(|source| IngestError::Csv { context: context.into(), source })?;
        let (Some(code), Some(cont)) = (row.get(0), row.get(1)) else {
            return Err(IngestError::Data { context: context.into(), row: line, message: "expected 2 columns".into() });
        };
        let continent = cont.parse::<Continent>().map_err(|message| IngestError::Data {
            context: context.into(),
            row: line,
            message,
        })?;
        if let Some(code) = harmonized(code, context, line, &mut warnings) {
            out.insert(code, continent);
        }
    }
    Ok((out, warnings))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationEntry {
    pub population: u64,
    pub area_km2: Option<f64>,
}

/// `iso_code,population[,area_km2]`
pub fn parse_population<R: Read>(r: R) -> Result<(BTreeMap<String, PopulationEntry>, Vec<IngestWarning>), IngestError> {
    let context = "population table";
    let mut out = BTreeMap::new();
    let mut warnings = Vec::new();
    for (idx, row) in reader(r).records().enumerate() {
        let line = idx + 2;
        let row = row.map_err(|source| IngestError::Csv { context: context.into(), source })?;
        let data_err = |message: String| IngestError::Data { context: context.into(), row: line, message };
        let code = row.get(0).unwrap_or("");
        let population = row
            .get(1)
            .unwrap_or("")
            .parse::<f64>()
            .ok()
            .filter(|p| p.is_finite() && *p >= 0.0)
            .ok_or_else(|| data_err(format!("bad population '{}'", row.get(1).unwrap_or(""))))?;
        let area_km2 = match row.get(2).filter(|s| !s.is_empty()) {
            None => None,
            Some(s) => Some(
                s.parse::<f64>()
                    .ok()
                    .filter(|a| a.is_finite() && *a > 0.0)
                    .ok_or_else(|| data_err(format!("bad area '{s}'")))?,
            ),
        };
        if let Some(code) = harmonized(code, context, line, &mut warnings) {
            out.insert(code, PopulationEntry { population: population.round() as u64, area_km2 });
        }
    }
    Ok((out, warnings))
}

pub type NeighborMap = BTreeMap<String, BTreeSet<String>>;

/// `iso_code,neighbor` with one pair per row; the neighbor column may also
/// hold a `;`-separated list. The result is symmetric.
pub fn parse_neighbors<R: Read>(r: R) -> Result<(NeighborMap, Vec<IngestWarning>), IngestError> {
    let context = "neighbor table";
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut warnings = Vec::new();
    for (idx, row) in reader(r).records().enumerate() {
        let line = idx + 2;
        let row = row.map_err(|source| IngestError::Csv { context: context.into(), source })?;
        let Some(a) = harmonized(row.get(0).unwrap_or(""), context, line, &mut warnings) else {
            continue;
        };
        out.entry(a.clone()).or_default();
        for other in row.get(1).unwrap_or("").split(';').map(str::trim).filter(|s| !s.is_empty()) {
            if let Some(b) = harmonized(other, context, line, &mut warnings) {
                if a != b {
                    out.entry(a.clone()).or_default().insert(b.clone());
                    out.entry(b).or_default().insert(a.clone());
                }
            }
        }
    }
    Ok((out, warnings))
}

const CODE_PROPERTIES: [&str; 5] = ["iso_code", "ISO_A2", "iso_a2", "ISO_A3", "iso_a3"];

fn ring(v: &Value) -> Option<Vec<LonLat>> {
    v.as_array()?
        .iter()
        .map(|p| {
            let p = p.as_array()?;
            Some(LonLat::new(p.first()?.as_f64()?, p.get(1)?.as_f64()?))
        })
        .collect()
}

fn polygon(v: &Value) -> Option<Polygon> {
    let rings = v.as_array()?;
    let exterior = ring(rings.first()?)?;
    let holes = rings[1..].iter().map(ring).collect::<Option<Vec<_>>>()?;
    Some(Polygon { exterior, holes })
}

fn geometry(v: &Value) -> Option<Geometry> {
    let coords = v.get("coordinates");
    let mut g = Geometry::default();
    match v.get("type")?.as_str()? {
        "Point" => g.points.push(ring(&Value::Array(vec![coords?.clone()]))?.pop()?),
        "MultiPoint" | "LineString" => g.points.extend(ring(coords?)?),
        "MultiLineString" => {
            for line in coords?.as_array()? {
                g.points.extend(ring(line)?);
            }
        }
        "Polygon" => g.polygons.push(polygon(coords?)?),
        "MultiPolygon" => {
            for p in coords?.as_array()? {
                g.polygons.push(polygon(p)?);
            }
        }
        "GeometryCollection" => {
            for part in v.get("geometries")?.as_array()? {
                let sub = geometry(part)?;
                g.polygons.extend(sub.polygons);
                g.points.extend(sub.points);
            }
        }
        _ => return None,
    }
    Some(g)
}

/// FeatureCollection with one feature per country, keyed by an `iso_code`
/// (or `ISO_A2`/`ISO_A3`) property.
pub fn parse_boundaries<R: Read>(r: R) -> Result<(BTreeMap<String, Geometry>, Vec<IngestWarning>), IngestError> {
    let context = "boundary geojson";
    let doc: Value = serde_json::from_reader(r)
        .map_err(|e| IngestError::Format { context: context.into(), message: e.to_string() })?;
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::Format { context: context.into(), message: "no 'features' array".into() })?;
    let mut out: BTreeMap<String, Geometry> = BTreeMap::new();
    let mut warnings = Vec::new();
    for (i, f) in features.iter().enumerate() {
        let props = f.get("properties");
        let code = CODE_PROPERTIES.iter().find_map(|k| props.and_then(|p| p.get(*k)).and_then(Value::as_str));
        let Some(code) = code else {
            warnings.push(IngestWarning::new(i, "feature without a country code property"));
            continue;
        };
        let Some(code) = harmonized(code, context, i, &mut warnings) else { continue };
        let geom = f.get("geometry").and_then(geometry).ok_or_else(|| IngestError::Format {
            context: context.into(),
            message: format!("feature {i} ({code}): unsupported or malformed geometry"),
        })?;
        let entry = out.entry(code).or_default();
        entry.polygons.extend(geom.polygons);
        entry.points.extend(geom.points);
    }
    Ok((out, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continents_harmonize_codes() {
        let csv = "iso_code,continent\nNZL,Oceania\nEG,Africa\nQQ,Asia\n";
        let (m, w) = parse_continents(csv.as_bytes()).unwrap();
        assert_eq!(m["NZ"], Continent::Oceania);
        assert_eq!(m["EG"], Continent::Africa);
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn population_with_optional_area() {
        let csv = "iso_code,population,area_km2\nNZ,4822233,268838\nOM,4974986,\n";
        let (m, _) = parse_population(csv.as_bytes()).unwrap();
        assert_eq!(m["NZ"].population, 4_822_233);
        assert_eq!(m["NZ"].area_km2, Some(268_838.0));
        assert_eq!(m["OM"].area_km2, None);
        assert!(parse_population("iso_code,population\nNZ,lots\n".as_bytes()).is_err());
    }

    #[test]
    fn neighbors_are_symmetric() {
        let csv = "iso_code,neighbor\nFR,DE;ES\nIT,FRA\n";
        let (m, _) = parse_neighbors(csv.as_bytes()).unwrap();
        assert!(m["DE"].contains("FR"));
        assert!(m["FR"].contains("IT"));
        assert_eq!(m["FR"].len(), 3);
    }

    #[test]
    fn geojson_features() {
        let doc = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"iso_code":"NZ"},
             "geometry":{"type":"MultiPolygon","coordinates":[[[[166,-46],[178,-46],[178,-35],[166,-46]]]]}},
            {"type":"Feature","properties":{"ISO_A3":"OMN"},
             "geometry":{"type":"Point","coordinates":[57.0,21.0]}}]}"#;
        let (m, w) = parse_boundaries(doc.as_bytes()).unwrap();
        assert!(w.is_empty());
        assert_eq!(m["NZ"].polygons[0].exterior.len(), 4);
        assert_eq!(m["OM"].points, vec![LonLat::new(57.0, 21.0)]);
    }
}
