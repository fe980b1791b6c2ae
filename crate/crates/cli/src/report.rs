//! Artifact generation for each subcommand.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use policy_response::analysis::{analyze, Analysis};
use policy_response::codes;
use policy_response::embed::{agglomerative_cluster, classical_mds};
use policy_response::indices::{
    correlate_measures_with_indices, derived_tables, load_manifest, stringency_vs_outcomes,
};
use policy_response::ingest::Dataset;
use policy_response::rankstats::{concordance, rank_countries, stars, MeasureTable, RankKey};
use policy_response::spatial::{
    border_summary, continent_summary, geo_distance_matrix, geography_concordance, permutation_null,
    response_distance_matrix, DistanceMatrix, PairStats, ResponseMeasure,
};
use policy_response::{ActivityCategory, Continent};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{sha256_hex, Cell, Output, Table};

pub const P_VALUE_NOTE: &str = "Kendall tau-b p-values are two-sided: exact null distribution when n <= 10 with no \
                                ties, otherwise normal approximation with tie-corrected variance";

pub struct Run<'a> {
    pub cfg: &'a RunConfig,
    pub data: Dataset,
    pub analysis: Analysis,
    pub out: Output,
    pub notes: Vec<String>,
    concordances: Table,
}

fn ranking_table(name: &str, table: &MeasureTable, key: RankKey) -> Table {
    let mut t = Table::new(name, &["rank", "iso_code", "value"]);
    for r in rank_countries(table, key) {
        t.push(vec![r.rank.into(), r.iso_code.into(), r.value.into()]);
    }
    t
}

fn matrix_table(name: &str, d: &DistanceMatrix) -> Table {
    let mut headers = vec!["iso_code"];
    headers.extend(d.labels().iter().map(String::as_str));
    let mut t = Table::new(name, &headers);
    for (i, label) in d.labels().iter().enumerate() {
        let mut row: Vec<Cell> = vec![label.as_str().into()];
        row.extend(d.row(i).iter().map(|v| Cell::Num(*v)));
        t.push(row);
    }
    t
}

fn stats_cells(s: &Option<PairStats>) -> Vec<Cell> {
    match s {
        Some(s) => vec![s.mean.into(), s.median.into(), s.n_pairs.into()],
        None => vec![Cell::Empty, Cell::Empty, 0usize.into()],
    }
}

impl<'a> Run<'a> {
    pub fn load(cfg: &'a RunConfig) -> Result<Self, CliError> {
        let data = Dataset::load(&cfg.paths)?;
        for r in &data.reports {
            for w in &r.warnings {
                log::warn!("{} row {}: {}", r.file, w.row, w.message);
            }
        }
        let analysis = analyze(&data, &cfg.analysis);
        let out = Output::new(&cfg.out_dir, cfg.format)?;
        Ok(Run {
            cfg,
            data,
            analysis,
            out,
            notes: Vec::new(),
            concordances: Table::new(
                "concordance",
                &["measure_a", "measure_b", "tau", "p_value", "n", "stars", "p_method", "dropped_a", "dropped_b"],
            ),
        })
    }

    fn add_concordance(&mut self, a: &MeasureTable, b: &MeasureTable) {
        match concordance(a, b) {
            Ok(c) => self.concordances.push(vec![
                a.name.as_str().into(),
                b.name.as_str().into(),
                c.tau.tau.into(),
                c.tau.p_value.into(),
                c.tau.n.into(),
                stars(c.tau.p_value).into(),
                c.tau.p_method.to_string().into(),
                c.dropped_a.join(";").into(),
                c.dropped_b.join(";").into(),
            ]),
            Err(e) => self.notes.push(format!("concordance {} vs {}: {e}", a.name, b.name)),
        }
    }

    pub fn ingest_check(&mut self) -> Result<(), CliError> {
        let mut files = Table::new("ingest_files", &["file", "rows", "warnings"]);
        let mut warnings = Table::new("ingest_warnings", &["file", "row", "message"]);
        for r in &self.data.reports {
            files.push(vec![r.file.as_str().into(), r.rows.into(), r.warnings.len().into()]);
            for w in &r.warnings {
                warnings.push(vec![r.file.as_str().into(), w.row.into(), w.message.as_str().into()]);
            }
        }
        let mut countries = Table::new(
            "countries",
            &["iso_code", "name", "continent", "population", "aligned_categories", "rejected_categories", "status"],
        );
        for (code, rec) in &self.data.countries {
            let aligned = self.analysis.aligned.get(code);
            let cats =
                aligned.map(|a| a.pairs.keys().map(|c| c.slug()).collect::<Vec<_>>().join(";")).unwrap_or_default();
            let rejected = aligned
                .map(|a| {
                    a.rejected.iter().map(|(c, g)| format!("{}:{}", c.slug(), g.code())).collect::<Vec<_>>().join(";")
                })
                .unwrap_or_default();
            let status = match self.analysis.exclusions.iter().find(|e| &e.iso_code == code) {
                Some(e) => e.reason_codes(),
                None => "ok".to_string(),
            };
            countries.push(vec![
                code.as_str().into(),
                rec.name.as_str().into(),
                rec.continent.map_or(Cell::Empty, |c| c.name().into()),
                rec.population.map_or(Cell::Empty, |p| Cell::Int(p as i64)),
                cats.into(),
                rejected.into(),
                status.into(),
            ]);
        }
        if !self.data.unmatched_stringency.is_empty() {
            self.notes.push(format!(
                "{} stringency countries have no mobility data: {}",
                self.data.unmatched_stringency.len(),
                self.data.unmatched_stringency.join(";")
            ));
        }
        self.out.table(&files)?;
        self.out.table(&warnings)?;
        self.out.table(&countries)
    }

    fn require_countries(&self, what: &str, n: usize) -> Result<(), CliError> {
        if n > 0 {
            return Ok(());
        }
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for e in &self.analysis.exclusions {
            for (stage, code) in &e.reasons {
                *counts.entry(format!("{}:{code}", stage.name())).or_default() += 1;
            }
        }
        if !self.data.unmatched_mobility.is_empty() {
            counts.insert("ingest:no_stringency_match".into(), self.data.unmatched_mobility.len());
        }
        let summary: Vec<String> = counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
        Err(CliError::Data(format!(
            "no country left for {what} after filtering ({} loaded); exclusions: {}",
            self.data.countries.len(),
            if summary.is_empty() { "none".to_string() } else { summary.join(", ") }
        )))
    }

    pub fn similarity(&mut self) -> Result<(), CliError> {
        self.require_countries("similarity", self.analysis.similarity.len())?;
        let filter = &self.analysis.filter;
        let mut per = Table::new("similarity_by_country", &["iso_code", "category", "cosine", "pearson", "in_mean"]);
        let mut country = Table::new("country_similarity", &["iso_code", "mean_cosine", "mean_pearson"]);
        for (code, s) in &self.analysis.similarity {
            for (cat, v) in &s.per_category {
                per.push(vec![
                    code.as_str().into(),
                    cat.slug().into(),
                    Cell::opt(v.cosine),
                    Cell::opt(v.pearson),
                    filter.includes(*cat).into(),
                ]);
            }
            country.push(vec![code.as_str().into(), s.country_mean_cosine.into(), Cell::opt(s.country_mean_pearson)]);
        }
        let mut table1 = Table::new("table1_similarity", &["category", "mean_cosine", "n_countries"]);
        for row in self.analysis.category_cosine_means() {
            table1.push(vec![row.category.slug().into(), Cell::opt(row.mean), row.n.into()]);
        }
        let cos = self.analysis.mean_cosine_table();
        let pear = self.analysis.mean_pearson_table();
        self.out.table(&per)?;
        self.out.table(&country)?;
        self.out.table(&table1)?;
        self.out.table(&ranking_table("ranking_cosine", &cos, RankKey::MeanCosine))?;
        self.out.table(&ranking_table("ranking_pearson", &pear, RankKey::MeanPearson))?;
        self.add_concordance(&cos, &pear);
        Ok(())
    }

    pub fn lag(&mut self) -> Result<(), CliError> {
        self.require_countries("lag", self.analysis.lag.len())?;
        let filter = &self.analysis.filter;
        let mut per = Table::new("lag_by_country", &["iso_code", "category", "lag_days", "significant", "in_mean"]);
        let mut country = Table::new("country_lag", &["iso_code", "mean_lag_days"]);
        for (code, l) in &self.analysis.lag {
            for (cat, o) in &l.per_category {
                per.push(vec![
                    code.as_str().into(),
                    cat.slug().into(),
                    o.days().map_or(Cell::Empty, Cell::from),
                    o.days().is_some().into(),
                    filter.includes(*cat).into(),
                ]);
            }
            country.push(vec![code.as_str().into(), l.country_mean_lag.into()]);
        }
        let mut table2 = Table::new("table2_lag", &["category", "mean_lag_days", "n_countries"]);
        for row in self.analysis.category_lag_means() {
            table2.push(vec![row.category.slug().into(), Cell::opt(row.mean), row.n.into()]);
        }
        table2.push(vec![
            "country_mean".into(),
            Cell::opt(self.analysis.overall_mean_lag()),
            self.analysis.lag.len().into(),
        ]);
        let lag = self.analysis.mean_lag_table();
        self.out.table(&per)?;
        self.out.table(&country)?;
        self.out.table(&table2)?;
        self.out.table(&ranking_table("ranking_lag", &lag, RankKey::MeanLag))?;
        self.add_concordance(&lag, &self.analysis.mean_cosine_table());
        Ok(())
    }

    pub fn subregion(&mut self) -> Result<(), CliError> {
        self.require_countries("subregion variation", self.analysis.subregion.len())?;
        let mut per = Table::new("subregion_by_country", &["iso_code", "category", "sd"]);
        let mut country = Table::new("country_subregion", &["iso_code", "mean_sd", "n_subregions", "low_confidence"]);
        for (code, v) in &self.analysis.subregion {
            for (cat, sd) in &v.per_category_sd {
                per.push(vec![code.as_str().into(), cat.slug().into(), (*sd).into()]);
            }
            country.push(vec![
                code.as_str().into(),
                v.country_mean_sd.into(),
                v.n_subregions.into(),
                v.low_confidence.into(),
            ]);
        }
        let sd = self.analysis.subregion_sd_table();
        self.out.table(&per)?;
        self.out.table(&country)?;
        self.out.table(&ranking_table("ranking_subregion", &sd, RankKey::MeanSd))?;
        self.add_concordance(&sd, &self.analysis.mean_cosine_table());
        Ok(())
    }

    pub fn spatial(&mut self) -> Result<(), CliError> {
        let cats = self.cfg.vector_categories();
        let exec = self.cfg.analysis.execution;
        let continents: BTreeMap<String, Continent> =
            self.data.countries.iter().filter_map(|(k, r)| r.continent.map(|c| (k.clone(), c))).collect();
        let geo = if self.data.boundaries.is_empty() {
            self.notes.push("no boundaries given: geographic concordance skipped".into());
            None
        } else {
            let labels: Vec<String> =
                self.analysis.aligned.keys().filter(|k| self.data.boundaries.contains_key(*k)).cloned().collect();
            let missing: Vec<&str> = self
                .analysis
                .aligned
                .keys()
                .filter(|k| !self.data.boundaries.contains_key(*k))
                .map(String::as_str)
                .collect();
            if !missing.is_empty() {
                self.notes.push(format!("no boundary geometry for: {}", missing.join(";")));
            }
            if labels.len() < 2 {
                None
            } else {
                let g = geo_distance_matrix(&labels, &self.data.boundaries, exec)?;
                self.out.table(&matrix_table("distance_geodesic_km", &g))?;
                Some(g)
            }
        };

        let mut table3 =
            Table::new("table3_continents", &["measure", "group", "mean", "median", "n_pairs", "n_countries"]);
        let mut borders = Table::new("border_summary", &["measure", "group", "mean", "median", "n_pairs"]);
        let mut geo_rows = Table::new(
            "geography_concordance",
            &["measure", "tau", "p_value", "n_pairs", "stars", "null_mean_tau", "permutation_p", "permutations"],
        );
        let mut any = false;
        for measure in [ResponseMeasure::Cosine, ResponseMeasure::Lag, ResponseMeasure::SubregionSd] {
            let vectors = self.analysis.response_vectors(measure, &cats);
            if vectors.len() < 2 {
                self.notes
                    .push(format!("{}: fewer than 2 complete response vectors, distances skipped", measure.slug()));
                continue;
            }
            any = true;
            let dist = response_distance_matrix(&vectors, exec)?;
            self.out.table(&matrix_table(&format!("distance_{}", measure.slug()), &dist))?;

            let with_continent: BTreeSet<String> =
                dist.labels().iter().filter(|l| continents.contains_key(*l)).cloned().collect();
            if with_continent.len() >= 2 {
                let s = continent_summary(&dist.restricted(&with_continent), &continents)?;
                for c in &s.per_continent {
                    let mut row = vec![measure.slug().into(), c.continent.name().into()];
                    row.extend(stats_cells(&Some(c.stats)));
                    row.push(c.n_countries.into());
                    table3.push(row);
                }
                for (c, n) in &s.omitted {
                    self.notes.push(format!(
                        "{}: {} omitted from continent summary ({n} country)",
                        measure.slug(),
                        c.name()
                    ));
                }
                for (group, stats) in
                    [("same_continent", &s.same_continent), ("different_continent", &s.different_continent)]
                {
                    let mut row = vec![measure.slug().into(), group.into()];
                    row.extend(stats_cells(stats));
                    row.push(with_continent.len().into());
                    table3.push(row);
                }
            }
            if self.cfg.paths.neighbors.is_some() {
                let b = border_summary(&dist, &self.data.neighbors);
                for (group, stats) in [("border", &b.border), ("non_border", &b.non_border)] {
                    let mut row = vec![measure.slug().into(), group.into()];
                    row.extend(stats_cells(stats));
                    borders.push(row);
                }
            }
            if let Some(g) = &geo {
                let common: BTreeSet<String> =
                    dist.labels().iter().filter(|l| g.index_of(l).is_some()).cloned().collect();
                if common.len() >= 3 {
                    let (d, gd) = (dist.restricted(&common), g.restricted(&common));
                    let t = geography_concordance(&d, &gd)?;
                    let null = permutation_null(&d, &gd, self.cfg.permutations, self.cfg.seed, exec)?;
                    let null_mean = (!null.is_empty()).then(|| null.iter().sum::<f64>() / null.len() as f64);
                    let exceed = null.iter().filter(|v| **v >= t.tau).count();
                    let perm_p = (!null.is_empty()).then(|| (1 + exceed) as f64 / (1 + null.len()) as f64);
                    geo_rows.push(vec![
                        measure.slug().into(),
                        t.tau.into(),
                        t.p_value.into(),
                        t.n.into(),
                        stars(t.p_value).into(),
                        Cell::opt(null_mean),
                        Cell::opt(perm_p),
                        self.cfg.permutations.into(),
                    ]);
                }
            }
        }
        if !any {
            return Err(CliError::Data("no measure has two or more complete response vectors".into()));
        }
        if continents.is_empty() {
            self.notes.push("no continent table given: continent summary skipped".into());
        } else {
            self.out.table(&table3)?;
        }
        if self.cfg.paths.neighbors.is_some() {
            self.out.table(&borders)?;
        } else {
            self.notes.push("no neighbor table given: border summary skipped".into());
        }
        if geo.is_some() {
            self.out.table(&geo_rows)?;
        }
        Ok(())
    }

    pub fn embed(&mut self) -> Result<(), CliError> {
        let cats = self.cfg.vector_categories();
        let exec = self.cfg.analysis.execution;
        let features = self.analysis.combined_features(&cats);
        let feature_desc = format!(
            "per-category cosine and lag values over [{}], each column z-scored, Euclidean distance",
            cats.iter().map(|c| c.slug()).collect::<Vec<_>>().join(", ")
        );
        let labels: Vec<String> = features.iter().map(|(k, _)| k.clone()).collect();
        let dist = DistanceMatrix::from_fn(labels, exec, |i, j| {
            Ok(policy_response::spatial::euclidean(&features[i].1, &features[j].1))
        })?;
        let emb = classical_mds(&dist, 2)?;
        for w in &emb.warnings {
            log::warn!("embedding: {w}");
        }
        let mut coords = Table::new("embedding", &["iso_code", "x", "y"]);
        for (label, c) in emb.labels.iter().zip(&emb.coordinates) {
            coords.push(vec![label.as_str().into(), c[0].into(), c[1].into()]);
        }
        self.out.table(&coords)?;
        self.out.json(
            "embedding_meta.json",
            &json!({
                "features": feature_desc,
                "countries": emb.labels.len(),
                "eigenvalues_top2": &emb.eigenvalues[..2],
                "eigenvalues": emb.eigenvalues,
                "strain": emb.strain,
                "warnings": emb.warnings,
            }),
        )?;

        let sd_vectors = self.analysis.response_vectors(ResponseMeasure::SubregionSd, &cats);
        if sd_vectors.len() < 2 {
            self.notes.push("dendrogram skipped: fewer than 2 countries with every per-category subregion SD".into());
            return Ok(());
        }
        let sd_dist = response_distance_matrix(&sd_vectors, exec)?;
        let tree = agglomerative_cluster(&sd_dist, self.cfg.linkage)?;
        let mut doc = tree.to_json();
        doc["features"] = Value::String(format!(
            "per-category subregion SD over [{}], Euclidean distance",
            cats.iter().map(|c| c.slug()).collect::<Vec<_>>().join(", ")
        ));
        self.out.json("dendrogram.json", &doc)?;
        self.out.bytes("dendrogram.nwk", format!("{}\n", tree.to_newick()).as_bytes())?;
        let ks: Vec<usize> = (2..=4).filter(|k| *k <= tree.leaves.len()).collect();
        let headers: Vec<String> =
            std::iter::once("iso_code".to_string()).chain(ks.iter().map(|k| format!("k{k}"))).collect();
        let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
        let mut clusters = Table::new("dendrogram_clusters", &header_refs);
        let cuts: Vec<Vec<usize>> = ks.iter().map(|k| tree.cut(*k)).collect();
        for (i, leaf) in tree.leaves.iter().enumerate() {
            let mut row: Vec<Cell> = vec![leaf.as_str().into()];
            row.extend(cuts.iter().map(|c| Cell::from(c[i])));
            clusters.push(row);
        }
        self.out.table(&clusters)
    }

    pub fn correlate(&mut self) -> Result<(), CliError> {
        let mut indices = derived_tables(&self.data.countries, &self.cfg.analysis.window);
        if let Some(path) = &self.cfg.indices_manifest {
            let (tables, _files, warnings) = load_manifest(path)?;
            for (name, ws) in warnings {
                for w in ws {
                    log::warn!("index {name} row {}: {}", w.row, w.message);
                }
            }
            indices.extend(tables);
        }
        indices.retain(|t| {
            let keep = !t.values.is_empty();
            if !keep {
                log::info!("index {} has no values; skipped", t.name);
            }
            keep
        });
        let measures = self.analysis.measure_tables();
        let rows = correlate_measures_with_indices(&measures, &indices, self.cfg.min_join, self.cfg.analysis.execution);
        let mut t = Table::new("correlations", &["measure", "index", "tau", "p_value", "n", "stars", "flag"]);
        for r in rows {
            t.push(vec![
                r.measure.into(),
                r.index.into(),
                Cell::opt(r.tau),
                Cell::opt(r.p_value),
                r.n.into(),
                r.stars.into(),
                if r.insufficient { "insufficient_data".into() } else { Cell::Empty },
            ]);
        }
        self.out.table(&t)?;

        let aligned: Vec<_> = self.analysis.aligned.values().cloned().collect();
        let cmp = stringency_vs_outcomes(&aligned, &self.analysis.filter, self.cfg.analysis.execution);
        let mut o = Table::new("stringency_outcomes", &["series", "mean_tau", "n_countries", "n_undefined"]);
        for r in &cmp.rows {
            o.push(vec![r.series.name().into(), Cell::opt(r.mean_tau), r.n_countries.into(), r.n_undefined.into()]);
        }
        self.out.table(&o)
    }

    /// One row per country and category with every measure side by side.
    pub fn measures(&mut self) -> Result<(), CliError> {
        let mut t =
            Table::new("measures", &["iso_code", "category", "cosine", "pearson", "lag_days", "subregion_sd", "flags"]);
        for (code, aligned) in &self.analysis.aligned {
            for cat in ActivityCategory::ALL {
                let mut flags = Vec::new();
                if !self.analysis.filter.includes(cat) {
                    flags.push("excluded_from_mean".to_string());
                }
                if let Some(g) = aligned.rejected.get(&cat) {
                    flags.push(g.code().to_string());
                }
                let sim = self.analysis.similarity.get(code).and_then(|s| s.per_category.get(&cat));
                let lag = self.analysis.lag.get(code).and_then(|l| l.per_category.get(&cat));
                if lag.is_some_and(|o| o.days().is_none()) {
                    flags.push("no_significant_lag".into());
                }
                let sub = self.analysis.subregion.get(code);
                if sub.is_some_and(|s| s.low_confidence) {
                    flags.push("low_confidence".into());
                }
                t.push(vec![
                    code.as_str().into(),
                    cat.slug().into(),
                    Cell::opt(sim.and_then(|s| s.cosine)),
                    Cell::opt(sim.and_then(|s| s.pearson)),
                    lag.and_then(|o| o.days()).map_or(Cell::Empty, Cell::from),
                    Cell::opt(sub.and_then(|s| s.per_category_sd.get(&cat).copied())),
                    flags.join(";").into(),
                ]);
            }
        }
        self.out.table(&t)
    }

    pub fn plot_data(&mut self, country: &str) -> Result<(), CliError> {
        let code = codes::harmonize(country)
            .filter(|c| self.data.countries.contains_key(*c))
            .ok_or_else(|| CliError::Data(format!("country '{country}' not present in the joined data")))?;
        let rec = &self.data.countries[code];
        let window = &self.cfg.analysis.window;
        let aligned = self.analysis.aligned.get(code);
        let masked = self
            .cfg
            .analysis
            .masks
            .get(code)
            .map(|m| m.flags(window))
            .unwrap_or_else(|| vec![false; window.len_days()]);
        let mut t = Table::new(format!("plot_{code}"), &["date", "series", "value", "repaired_value", "masked"]);
        let push_series = |t: &mut Table, name: &str, raw: Vec<Option<f64>>, repaired: Option<Vec<f64>>| {
            for (i, date) in window.dates().enumerate() {
                t.push(vec![
                    date.to_string().into(),
                    name.into(),
                    Cell::opt(raw[i]),
                    Cell::opt(repaired.as_ref().map(|r| r[i])),
                    masked[i].into(),
                ]);
            }
        };
        let si_raw = rec.stringency.as_ref().map(|s| s.slice(window)).unwrap_or_else(|| vec![None; window.len_days()]);
        push_series(&mut t, "stringency_index", si_raw, aligned.map(|a| a.stringency.clone()));
        let mut missing = Vec::new();
        for cat in ActivityCategory::ALL {
            match rec.national.get(&cat) {
                Some(series) => {
                    let repaired = aligned.and_then(|a| a.pairs.get(&cat)).map(|p| p.raw_activity());
                    push_series(&mut t, cat.slug(), series.slice(window), repaired);
                }
                None => missing.push(cat.slug()),
            }
        }
        if !missing.is_empty() {
            let note = format!("{code}: no published series for {}", missing.join(";"));
            log::warn!("{note}");
            self.notes.push(note);
        }
        self.out.table(&t)
    }

    /// Exclusion report, concordance rows and the run manifest.
    pub fn finish(mut self, subcommand: &str) -> Result<(), CliError> {
        let mut ex = Table::new("exclusions", &["iso_code", "reasons", "detail"]);
        let mut rows: Vec<(String, String, String)> =
            self.analysis.exclusions.iter().map(|e| (e.iso_code.clone(), e.reason_codes(), e.detail.clone())).collect();
        rows.extend(self.data.unmatched_mobility.iter().map(|c| {
            (c.clone(), "ingest:no_stringency_match".to_string(), "mobility country without stringency series".into())
        }));
        rows.sort();
        for (c, r, d) in &rows {
            ex.push(vec![c.as_str().into(), r.as_str().into(), d.as_str().into()]);
        }
        self.out.table(&ex)?;
        if !self.concordances.rows.is_empty() {
            let c = self.concordances.clone();
            self.out.table(&c)?;
        }
        let manifest = self.manifest(subcommand, &rows)?;
        self.out.json("run_manifest.json", &manifest)
    }

    fn manifest(&self, subcommand: &str, exclusions: &[(String, String, String)]) -> Result<Value, CliError> {
        let record = self.cfg.record();
        let config_json = serde_json::to_value(&record).map_err(|e| CliError::Internal(e.to_string()))?;
        let config_hash = sha256_hex(config_json.to_string().as_bytes());
        let mut inputs = Vec::new();
        let roles = [
            ("mobility", Some(&self.cfg.paths.mobility)),
            ("stringency", Some(&self.cfg.paths.stringency)),
            ("continents", self.cfg.paths.continents.as_ref()),
            ("population", self.cfg.paths.population.as_ref()),
            ("neighbors", self.cfg.paths.neighbors.as_ref()),
            ("boundaries", self.cfg.paths.boundaries.as_ref()),
            ("indices_manifest", self.cfg.indices_manifest.as_ref()),
        ];
        for (role, path) in roles {
            let Some(path) = path else { continue };
            let bytes = std::fs::read(path).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))?;
            inputs.push(json!({
                "role": role,
                "path": path.display().to_string(),
                "bytes": bytes.len(),
                "sha256": sha256_hex(&bytes),
            }));
        }
        let row_counts: serde_json::Map<String, Value> =
            self.data.reports.iter().map(|r| (r.file.clone(), Value::from(r.rows))).collect();
        Ok(json!({
            "tool": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
            "subcommand": subcommand,
            "config": config_json,
            "config_sha256": config_hash,
            "inputs": inputs,
            "row_counts": row_counts,
            "countries": {
                "joined": self.data.countries.len(),
                "aligned": self.analysis.aligned.len(),
                "similarity": self.analysis.similarity.len(),
                "lag": self.analysis.lag.len(),
                "subregion": self.analysis.subregion.len(),
                "unmatched_mobility": self.data.unmatched_mobility,
                "unmatched_stringency": self.data.unmatched_stringency,
            },
            "exclusions": exclusions.iter().map(|(c, r, _)| json!({ "iso_code": c, "reasons": r })).collect::<Vec<_>>(),
            "seed": self.cfg.seed,
            "permutations": self.cfg.permutations,
            "p_value_method": P_VALUE_NOTE,
            "notes": self.notes,
            "artifacts": self.out.artifacts().iter().map(|(f, h)| json!({ "file": f, "sha256": h })).collect::<Vec<_>>(),
        }))
    }
}
