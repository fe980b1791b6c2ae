use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "policy-response", version, about = "Place-based activity response to policy stringency")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read and align every input, report warnings and exclusions.
    IngestCheck,
    /// Cosine and Pearson similarity per country and category.
    Similarity,
    /// Thresholded cross-correlation lag per country and category.
    Lag,
    /// Variation of similarity across subregions.
    Subregion,
    /// Response distances against geography, continents and borders.
    Spatial,
    /// Two-dimensional scaling and dendrogram.
    Embed,
    /// Rank correlation of the measures with country indices.
    Correlate,
    /// Every analysis above, in one run.
    ReportAll,
    /// Long-format curves for one country.
    PlotData {
        #[arg(long)]
        country: String,
    },
    /// Write a seeded synthetic dataset in the input formats.
    Synth {
        #[arg(long, default_value_t = 24)]
        countries: usize,
        #[arg(long, default_value_t = 2020)]
        synth_seed: u64,
        /// Directory to write the files into.
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VectorCategories {
    /// All six categories.
    All,
    /// Only categories not excluded from means.
    Included,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Google Community Mobility Report CSV.
    #[arg(long, global = true)]
    pub mobility: Option<PathBuf>,
    /// OxCGRT stringency CSV.
    #[arg(long, global = true)]
    pub stringency: Option<PathBuf>,
    /// `iso_code,continent` CSV.
    #[arg(long, global = true)]
    pub continents: Option<PathBuf>,
    /// `iso_code,population[,area_km2]` CSV.
    #[arg(long, global = true)]
    pub population: Option<PathBuf>,
    /// `iso_code,neighbor` CSV.
    #[arg(long, global = true)]
    pub neighbors: Option<PathBuf>,
    /// Country boundary GeoJSON.
    #[arg(long, global = true)]
    pub boundaries: Option<PathBuf>,
    /// JSON list of index CSVs.
    #[arg(long, global = true)]
    pub indices_manifest: Option<PathBuf>,

    #[arg(long, global = true, default_value = "2020-02-15")]
    pub window_start: NaiveDate,
    #[arg(long, global = true, default_value = "2020-04-11")]
    pub window_end: NaiveDate,
    #[arg(long, global = true, default_value_t = 0.5)]
    pub xcorr_threshold: f64,
    #[arg(long, global = true, default_value_t = 21)]
    pub max_lag: i32,
    #[arg(long, global = true, default_value_t = 10)]
    pub min_overlap: usize,
    /// Longest run of missing days that is interpolated.
    #[arg(long, global = true, default_value_t = 3)]
    pub max_gap: usize,
    /// Minimum share of observed days in the window.
    #[arg(long, global = true, default_value_t = 0.9)]
    pub coverage: f64,
    /// Category left out of country means; repeat for several, `none` for none.
    #[arg(long, global = true, default_values_t = vec!["parks".to_string()])]
    pub exclude_category: Vec<String>,
    /// `COUNTRY:DATE` or `COUNTRY:DATE..DATE`; repeatable.
    #[arg(long, global = true)]
    pub mask: Vec<String>,
    /// Categories making up the response vectors for distances.
    #[arg(long, global = true, value_enum, default_value_t = VectorCategories::All)]
    pub vector_categories: VectorCategories,
    /// Linkage for the dendrogram: average, single or complete.
    #[arg(long, global = true, default_value = "average")]
    pub linkage: String,
    /// Minimum joined countries for a correlation row.
    #[arg(long, global = true, default_value_t = 10)]
    pub min_join: usize,
    /// Seed for the permutation null.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 999)]
    pub permutations: usize,

    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Run on the calling thread only.
    #[arg(long, global = true)]
    pub sequential: bool,
}
