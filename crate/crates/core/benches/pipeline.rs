use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use policy_response::analysis::{analyze, AnalysisConfig};
use policy_response::embed::{agglomerative_cluster, classical_mds, Linkage};
use policy_response::ingest::{parse_mobility, parse_stringency, tables::parse_boundaries, Dataset};
use policy_response::spatial::{geo_distance_matrix, response_distance_matrix, ResponseMeasure};
use policy_response::synthetic::{generate, SyntheticConfig};
use policy_response::{ActivityCategory, Execution};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn dataset(countries: usize) -> (Dataset, String) {
    let files = generate(&SyntheticConfig { countries, seed: 11, ..Default::default() });
    let ds = Dataset::assemble(
        parse_mobility(files.mobility.as_bytes()).unwrap(),
        parse_stringency(files.stringency.as_bytes()).unwrap(),
    );
    (ds, files.boundaries)
}

fn measures(c: &mut Criterion) {
    let (ds, _) = dataset(120);
    let mut group = c.benchmark_group("analyze_120_countries");
    for (name, exec) in MODES {
        let config = AnalysisConfig { execution: exec, ..Default::default() };
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| analyze(black_box(&ds), &config)));
    }
    group.finish();
}

fn distances(c: &mut Criterion) {
    let (ds, boundaries) = dataset(120);
    let analysis = analyze(&ds, &AnalysisConfig::default());
    let vectors = analysis.response_vectors(ResponseMeasure::Cosine, &ActivityCategory::ALL);
    let (geoms, _) = parse_boundaries(boundaries.as_bytes()).unwrap();
    let labels: Vec<String> = geoms.keys().cloned().collect();
    let mut group = c.benchmark_group("distance_matrices");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new("response", name), |b| {
            b.iter(|| response_distance_matrix(black_box(&vectors), exec).unwrap())
        });
        group.bench_function(BenchmarkId::new("geodesic", name), |b| {
            b.iter(|| geo_distance_matrix(black_box(&labels), &geoms, exec).unwrap())
        });
    }
    group.finish();

    let dist = response_distance_matrix(&vectors, Execution::Parallel).unwrap();
    c.bench_function("mds_2d", |b| b.iter(|| classical_mds(black_box(&dist), 2).unwrap()));
    c.bench_function("upgma", |b| b.iter(|| agglomerative_cluster(black_box(&dist), Linkage::Average).unwrap()));
}

criterion_group!(benches, measures, distances);
criterion_main!(benches);
