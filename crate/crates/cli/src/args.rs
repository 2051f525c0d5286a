use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use erule::backtest::SignalRule;
use erule::ml::ModelKind;
use erule::{Composition, MonthDate};

pub const DEFAULT_BAND: f64 = 0.3;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "erule",
    version,
    about = "Composite yield-curve / Sahm-rule recession indicator",
    allow_negative_numbers = true
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Series cache directory [default: $E_RULE_DATA_DIR, else the bundled fixtures]
    #[arg(long, global = true, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,

    /// Never download; a series missing from the cache is an error
    #[arg(long, global = true)]
    pub offline: bool,

    /// Half-width of the symmetric signal band [default: 0.3]
    #[arg(long, global = true, value_name = "HALF_WIDTH")]
    pub band: Option<f64>,

    /// RNG seed for simulation and the random forest [default: 42]
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write output here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// How spread and Sahm combine into the indicator [default: difference]
    #[arg(long, global = true, value_name = "difference|sum")]
    pub composition: Option<Composition>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monthly spread, Sahm value, indicator and phase
    Compute {
        #[arg(long, value_name = "YYYY-MM")]
        from: Option<MonthDate>,
        #[arg(long, value_name = "YYYY-MM")]
        to: Option<MonthDate>,
    },
    /// Match band signals to recessions and compare against the published case studies
    Backtest {
        /// Longest lead, in months, that still counts as a match
        #[arg(long, default_value_t = erule::backtest::DEFAULT_MAX_LEAD)]
        max_lead: i64,
        /// Which month of a band episode is the signal
        #[arg(long, default_value_t = SignalRule::LastInBand, value_name = "last-in-band|band-entry")]
        signal: SignalRule,
        #[command(flatten)]
        calendar: CalendarArg,
    },
    /// Monte Carlo accuracy of the band rule on synthetic scenarios
    Simulate {
        /// Number of scenarios
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Comma-separated half-widths [default: --band if given, else 0.2,0.3]
        #[arg(long, value_delimiter = ',', value_name = "W,...")]
        bands: Option<Vec<f64>>,
        /// Scenario parameters as TOML; missing keys keep their defaults
        #[arg(long, value_name = "PATH")]
        params: Option<PathBuf>,
        /// Also dump every scenario path as CSV
        #[arg(long, value_name = "PATH")]
        scenarios_out: Option<PathBuf>,
    },
    /// Train and score the four classifiers on a chronological split
    Ml {
        /// Comma-separated subset of logreg,svm,gboost,forest
        #[arg(long, value_delimiter = ',', value_name = "M,...")]
        models: Option<Vec<ModelKind>>,
        /// Probability at or above which a month is called a recession
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Leading share of months used for training
        #[arg(long, default_value_t = 0.7)]
        train_frac: f64,
        /// Lagged indicator values per row
        #[arg(long, default_value_t = 3)]
        lags: usize,
        /// Predict the recession label this many months ahead
        #[arg(long, default_value_t = 0)]
        horizon: usize,
        /// Add current spread and Sahm values as features
        #[arg(long)]
        include_components: bool,
        /// Write each trained model as JSON into this directory
        #[arg(long, value_name = "DIR")]
        save_models: Option<PathBuf>,
        #[command(flatten)]
        calendar: CalendarArg,
    },
    /// Download series from FRED into the data directory, replacing cached copies
    Fetch {
        #[arg(default_values_t = ["UNRATE".to_string(), "GS10".to_string(), "GS2".to_string()])]
        ids: Vec<String>,
    },
    /// Compare the recomputed Sahm series with FRED's SAHMREALTIME
    CompareSahm {
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
    },
}

#[derive(Debug, Args)]
pub struct CalendarArg {
    /// Recession calendar CSV [default: nber_recessions.csv in the data dir, else the built-in one]
    #[arg(long, value_name = "PATH")]
    pub calendar: Option<PathBuf>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Compute { .. } => "compute",
            Command::Backtest { .. } => "backtest",
            Command::Simulate { .. } => "simulate",
            Command::Ml { .. } => "ml",
            Command::Fetch { .. } => "fetch",
            Command::CompareSahm { .. } => "compare-sahm",
        }
    }
}
