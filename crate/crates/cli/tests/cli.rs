use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use policy_response::synthetic::{generate, SyntheticConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_policy-response"))
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new(countries: usize, seed: u64) -> Self {
        let dir = tempfile::tempdir().unwrap();
        generate(&SyntheticConfig { countries, seed, ..SyntheticConfig::default() })
            .write_to(&dir.path().join("data"))
            .unwrap();
        Fixture { dir }
    }

    fn data(&self, file: &str) -> PathBuf {
        self.dir.path().join("data").join(file)
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, sub: &[&str], out: &str, extra: &[&str]) -> Output {
        let mut cmd = bin();
        cmd.args(sub)
            .arg("--mobility")
            .arg(self.data("mobility.csv"))
            .arg("--stringency")
            .arg(self.data("stringency.csv"))
            .arg("--continents")
            .arg(self.data("continents.csv"))
            .arg("--population")
            .arg(self.data("population.csv"))
            .arg("--neighbors")
            .arg(self.data("neighbors.csv"))
            .arg("--boundaries")
            .arg(self.data("boundaries.geojson"))
            .arg("--out-dir")
            .arg(self.out(out))
            .args(extra);
        cmd.output().unwrap()
    }
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn report_all_writes_every_artifact() {
    let f = Fixture::new(20, 1);
    let o = f.run(&["report-all"], "out", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let got = files(&f.out("out"));
    for name in [
        "countries.csv",
        "table1_similarity.csv",
        "table2_lag.csv",
        "ranking_cosine.csv",
        "ranking_lag.csv",
        "ranking_subregion.csv",
        "measures.csv",
        "distance_cosine.csv",
        "distance_geodesic_km.csv",
        "table3_continents.csv",
        "border_summary.csv",
        "geography_concordance.csv",
        "embedding.csv",
        "embedding_meta.json",
        "dendrogram.json",
        "dendrogram.nwk",
        "dendrogram_clusters.csv",
        "correlations.csv",
        "stringency_outcomes.csv",
        "exclusions.csv",
        "concordance.csv",
        "run_manifest.json",
    ] {
        assert!(got.contains_key(name), "missing {name}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&got["run_manifest.json"]).unwrap();
    assert_eq!(manifest["subcommand"], "report-all");
    assert_eq!(manifest["config"]["xcorr_threshold"], 0.5);
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert_eq!(artifacts.len(), got.len() - 1);
    for a in artifacts {
        let name = a["file"].as_str().unwrap();
        use sha2::Digest;
        let digest: String = sha2::Sha256::digest(&got[name]).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(a["sha256"], digest.as_str(), "{name}");
    }
    let nwk = String::from_utf8(got["dendrogram.nwk"].clone()).unwrap();
    assert!(nwk.trim_end().ends_with(';'));
}

#[test]
fn sequential_and_parallel_agree() {
    let f = Fixture::new(16, 2);
    assert!(f.run(&["report-all"], "par", &[]).status.success());
    assert!(f.run(&["report-all"], "seq", &["--sequential"]).status.success());
    let (a, b) = (files(&f.out("par")), files(&f.out("seq")));
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (k, v) in &a {
        // the manifest records the execution mode
        if k != "run_manifest.json" {
            assert!(v == &b[k], "{k} differs");
        }
    }
}

#[test]
fn json_format() {
    let f = Fixture::new(12, 3);
    let o = f.run(&["similarity"], "out", &["--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t: serde_json::Value =
        serde_json::from_slice(&std::fs::read(f.out("out").join("table1_similarity.json")).unwrap()).unwrap();
    let rows = t.as_array().unwrap();
    assert!(!rows.is_empty());
    assert!(rows[0]["mean_cosine"].is_number());
    assert!(!f.out("out").join("table1_similarity.csv").exists());
}

#[test]
fn configuration_errors_exit_2() {
    let f = Fixture::new(6, 4);
    for extra in [
        vec!["--xcorr-threshold", "1.5"],
        vec!["--max-lag", "40"],
        vec!["--linkage", "ward"],
        vec!["--mask", "XX:2020-03-01"],
        vec!["--window-start", "2020-04-20"],
        vec!["--exclude-category", "beaches"],
    ] {
        let o = f.run(&["lag"], "out", &extra);
        assert_eq!(o.status.code(), Some(2), "{extra:?}: {}", stderr(&o));
    }
    let o = bin()
        .args(["similarity", "--mobility", "/nonexistent.csv", "--stringency", "/nonexistent.csv"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().arg("similarity").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn data_errors_exit_1() {
    let f = Fixture::new(6, 5);
    // no stringency rows match any mobility country
    let empty = f.out("stringency_empty.csv");
    let header = std::fs::read_to_string(f.data("stringency.csv")).unwrap().lines().next().unwrap().to_string();
    std::fs::write(&empty, format!("{header}\n")).unwrap();
    let o = bin()
        .args(["similarity", "--mobility"])
        .arg(f.data("mobility.csv"))
        .arg("--stringency")
        .arg(&empty)
        .arg("--out-dir")
        .arg(f.out("out"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("no country"), "{}", stderr(&o));

    let o = f.run(&["plot-data", "--country", "ZZ"], "out", &[]);
    assert_eq!(o.status.code(), Some(1));

    // a mobility file missing required columns
    let broken = f.out("broken.csv");
    std::fs::write(&broken, "country_region_code,date\nEG,2020-02-15\n").unwrap();
    let o = bin()
        .args(["ingest-check", "--mobility"])
        .arg(&broken)
        .arg("--stringency")
        .arg(f.data("stringency.csv"))
        .arg("--out-dir")
        .arg(f.out("out2"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn plot_data_flags_masked_days() {
    let f = Fixture::new(6, 6);
    let countries = std::fs::read_to_string(f.data("continents.csv")).unwrap();
    let code = countries.lines().nth(1).unwrap().split(',').next().unwrap().to_string();
    let mask = format!("{code}:2020-03-01..2020-03-03");
    let o = f.run(&["plot-data", "--country", &code], "out", &["--mask", &mask]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(f.out("out").join(format!("plot_{code}.csv"))).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    let stringency: Vec<&csv::StringRecord> = rows.iter().filter(|r| &r[1] == "stringency_index").collect();
    assert_eq!(stringency.len(), 57);
    let masked: Vec<&str> = stringency.iter().filter(|r| &r[4] == "true").map(|r| &r[0]).collect();
    assert_eq!(masked, ["2020-03-01", "2020-03-02", "2020-03-03"]);
    // the masked days are still present with their raw values
    assert!(stringency.iter().filter(|r| &r[4] == "true").all(|r| !r[2].is_empty()));
}

#[test]
fn ingest_check_reports_counts() {
    let f = Fixture::new(8, 7);
    let o = f.run(&["ingest-check"], "out", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(f.out("out").join("countries.csv")).unwrap();
    assert_eq!(r.records().count(), 8);
    assert!(f.out("out").join("exclusions.csv").exists());
}

#[test]
fn synth_subcommand_writes_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().args(["synth", "--countries", "5", "--dir"]).arg(dir.path()).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    for f in
        ["mobility.csv", "stringency.csv", "continents.csv", "population.csv", "neighbors.csv", "boundaries.geojson"]
    {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
}
